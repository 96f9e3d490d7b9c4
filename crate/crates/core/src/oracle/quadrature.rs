//! Deterministic quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod,
//! tensor-grid volumes and fiber integrals for the unit-cube pushforward.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::monomial::ExponentData;

pub const MAX_GRID_DIM: usize = 3;
pub const MIN_RESOLUTION: usize = 64;
pub const MAX_FIBER_ACTIVE_AXES: usize = 5;

/// An integral together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error: f64,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

// Kronrod value and the QUADPACK error estimate on [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [0.0; 15];
    fv[7] = fc;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_k = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let resasc = resasc * h.abs();
    let abs_k = abs_k * h.abs();
    let mut err = ((kronrod - gauss) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * abs_k;
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round);
    }
    (kronrod * h, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol·|I|)`; fails after `max_segments` bisections.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadratureEstimate> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(format!("invalid interval [{a}, {b}]")));
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    let mut segments = 1;
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadratureEstimate {
                value: total,
                error: total_err,
            });
        }
        if segments >= max_segments {
            return Err(Error::NonConvergence {
                terms: segments,
                partial: total,
                tail_bound: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds every segment");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        segments += 1;
        if segments % 64 == 0 {
            // Refresh the running sums to shed accumulated rounding.
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

// Axes split into the constant ones (a = 0) and the active ones.
struct AxisSplit {
    constant_mass: f64,
    active: Vec<(f64, f64)>,
}

fn split_axes(e: &ExponentData) -> AxisSplit {
    let mut constant_mass = 1.0;
    let mut active = Vec::new();
    for (&a, &b) in e.a().iter().zip(e.b()) {
        if a == 0.0 {
            constant_mass /= b + 1.0;
        } else {
            active.push((a, b));
        }
    }
    AxisSplit {
        constant_mass,
        active,
    }
}

fn check_open_unit(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q = {q} must lie in (0, 1)")))
    }
}

/// `∫_{[0,1]^n} 1[x^A > q] x^B dx` on a midpoint tensor grid.
///
/// The last active axis is integrated in closed form along each fiber.
/// Each remaining active axis `x_j` is mapped affinely onto
/// `[(q/P_j)^{1/a_j}, 1]`, where `P_j` is the product over the axes before
/// it, so the integrand is smooth on the grid; `resolution` and
/// `2·resolution` midpoints per axis are combined by Richardson
/// extrapolation. The reported error is the difference between the two
/// grids plus a rounding allowance.
pub fn quadrature_volume(
    e: &ExponentData,
    q: f64,
    resolution: usize,
) -> Result<QuadratureEstimate> {
    if e.dim() > MAX_GRID_DIM {
        return Err(Error::UnsupportedDimension {
            dim: e.dim(),
            max: MAX_GRID_DIM,
        });
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::domain(format!(
            "resolution {resolution} below the minimum {MIN_RESOLUTION}"
        )));
    }
    check_open_unit(q)?;
    let split = split_axes(e);
    let (af, bf) = *split.active.last().expect("some a_i > 0");
    let outer = &split.active[..split.active.len() - 1];
    let fiber = |p: f64| -> f64 {
        let t = (q / p).powf(1.0 / af);
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - t.powf(bf + 1.0)) / (bf + 1.0)
        }
    };
    let grid = |r: usize| -> f64 {
        let h = 1.0 / r as f64;
        let mids: Vec<f64> = (0..r).map(|i| (i as f64 + 0.5) * h).collect();
        let mut total = 0.0;
        let points = r.pow(outer.len() as u32);
        'points: for idx in 0..points {
            let mut rest = idx;
            let mut p = 1.0;
            let mut w = 1.0;
            for &(a, b) in outer {
                let lower = (q / p).powf(1.0 / a);
                if lower >= 1.0 {
                    continue 'points;
                }
                let x = lower + (1.0 - lower) * mids[rest % r];
                rest /= r;
                p *= x.powf(a);
                w *= (1.0 - lower) * x.powf(b);
            }
            total += w * fiber(p);
        }
        total * h.powi(outer.len() as i32)
    };
    // Rounding allowance for the closed-form fiber and the grid sums.
    let rounding = |v: f64| 64.0 * f64::EPSILON * v.abs();
    if outer.is_empty() {
        let value = split.constant_mass * fiber(1.0);
        return Ok(QuadratureEstimate {
            value,
            error: rounding(value),
        });
    }
    let coarse = grid(resolution);
    let fine = grid(2 * resolution);
    let value = split.constant_mass * (fine + (fine - coarse) / 3.0);
    Ok(QuadratureEstimate {
        value,
        error: split.constant_mass * (fine - coarse).abs() + rounding(value),
    })
}

/// Density of the unit-cube pushforward at `q ∈ (0, 1)` by integrating over
/// the fiber `{x^A = q}` in logarithmic coordinates.
///
/// With `y = -ln x` the fiber integral becomes an integral of exponentials
/// over the simplex `Σ a_i y_i ≤ -ln q`; the innermost direction is done in
/// closed form and the others with `order`-point Gauss–Legendre rules.
pub fn fiber_density(e: &ExponentData, q: f64, order: usize) -> Result<f64> {
    check_open_unit(q)?;
    let split = split_axes(e);
    if split.active.len() > MAX_FIBER_ACTIVE_AXES {
        return Err(Error::UnsupportedDimension {
            dim: split.active.len(),
            max: MAX_FIBER_ACTIVE_AXES,
        });
    }
    if order == 0 {
        return Err(Error::domain("order must be positive"));
    }
    let (af, bf) = *split.active.last().expect("some a_i > 0");
    let cf = (bf + 1.0) / af;
    let s = -q.ln();
    // Decay rate and simplex weight of each remaining axis.
    let axes: Vec<(f64, f64)> = split.active[..split.active.len() - 1]
        .iter()
        .map(|&(a, b)| (b + 1.0 - a * cf, a))
        .collect();
    let rule = gauss_legendre(order);
    let integral = simplex_exp_integral(&axes, s, &rule);
    Ok(split.constant_mass * q.powf(cf - 1.0) / af * integral)
}

// ∫_{y ≥ 0, Σ w_i y_i ≤ budget} exp(-Σ k_i y_i) dy
fn simplex_exp_integral(axes: &[(f64, f64)], budget: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    match axes {
        [] => 1.0,
        [(k, w)] => {
            let len = budget / w;
            if *k == 0.0 {
                len
            } else {
                -(-k * len).exp_m1() / k
            }
        }
        [(k, w), rest @ ..] => {
            let len = budget / w;
            let half = 0.5 * len;
            rule.0
                .iter()
                .zip(&rule.1)
                .map(|(&t, &wt)| {
                    let y = half * (t + 1.0);
                    wt * (-k * y).exp() * simplex_exp_integral(rest, budget - w * y, rule)
                })
                .sum::<f64>()
                * half
        }
    }
}
