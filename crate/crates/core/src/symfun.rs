//! Complete homogeneous symmetric polynomials and divided differences of the
//! exponential function.
//!
//! Every density in this crate is, up to a constant, a divided difference of
//! `t ↦ exp(t·s)` over a small node set. Two evaluators are provided:
//!
//! * [`exp_series`] sums the power series `Σ h_{i-n+1}(z)·s^i/i!` with a
//!   certified truncation bound;
//! * [`exp_divided_difference`] exponentiates the bidiagonal node matrix by
//!   scaling and squaring, which stays accurate for coincident nodes and for
//!   large `|s|·spread` where the plain series cancels.
//!
//! Internally all accumulation is done in double-double arithmetic.

use crate::ddouble::Dd;
use crate::error::{Error, Result};

/// Hard cap on the number of series terms in [`exp_series`].
pub const MAX_SERIES_TERMS: usize = 10_000;

/// Argument list `z_1, ..., z_l` of a symmetric function.
///
/// Ordering never matters to a consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet(Vec<f64>);

impl NodeSet {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::domain("node set must be nonempty"));
        }
        if let Some(z) = nodes.iter().find(|z| !z.is_finite()) {
            return Err(Error::domain(format!("node {z} is not finite")));
        }
        Ok(NodeSet(nodes))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, z| m.max(z.abs()))
    }

    fn midrange(&self) -> f64 {
        let lo = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

impl TryFrom<&[f64]> for NodeSet {
    type Error = Error;

    fn try_from(nodes: &[f64]) -> Result<Self> {
        NodeSet::new(nodes.to_vec())
    }
}

/// `h_k(z_1, ..., z_l)`, with `h_k = 0` for `k < 0` and `h_0 = 1`.
pub fn complete_homogeneous(k: i64, nodes: &NodeSet) -> f64 {
    if k < 0 {
        return 0.0;
    }
    complete_homogeneous_dd(k as usize, nodes.as_slice())
        .last()
        .copied()
        .unwrap_or(Dd::ONE)
        .to_f64()
}

/// `h_0, ..., h_kmax` of the same node set.
pub fn complete_homogeneous_upto(kmax: usize, nodes: &NodeSet) -> Vec<f64> {
    complete_homogeneous_dd(kmax, nodes.as_slice())
        .into_iter()
        .map(Dd::to_f64)
        .collect()
}

// Generating-function recurrence, one node at a time:
// h_k(z_1..z_j) = h_k(z_1..z_{j-1}) + z_j·h_{k-1}(z_1..z_j).
fn complete_homogeneous_dd(kmax: usize, nodes: &[f64]) -> Vec<Dd> {
    let mut h = vec![Dd::ZERO; kmax + 1];
    h[0] = Dd::ONE;
    for &z in nodes {
        for k in 1..=kmax {
            h[k] = h[k] + h[k - 1].mul_f64(z);
        }
    }
    h
}

/// Upper bound `C(k+n-1, n-1)·max_abs^k` on `|h_k|` over `n` nodes of modulus
/// at most `max_abs`; zero for negative `k`.
pub fn h_tail_bound(k: i64, n: usize, max_abs: f64) -> f64 {
    assert!(n >= 1, "h_tail_bound needs at least one node");
    if k < 0 {
        return 0.0;
    }
    let k = k as u64;
    let r = (n - 1) as u64;
    // C(k + r, r) as a running product; exact for the sizes used here.
    let binom = (1..=r).fold(1.0f64, |acc, j| acc * (k + j) as f64 / j as f64);
    binom * max_abs.powi(k.min(i32::MAX as u64) as i32)
}

/// Outcome of a certified series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Certified bound on the neglected tail, in the same units as `value`.
    pub tail_bound: f64,
    pub terms: usize,
}

/// `Σ_{i≥0} h_{i-n+1}(z)·s^i/i!`, the divided difference of `t ↦ e^{ts}` over
/// the nodes.
///
/// The series is summed about the node midrange `μ` using
/// `DD(z) = e^{μs}·DD(z - μ)`, and stops once the tail bound from
/// [`h_tail_bound`] falls below `rel_tol·|partial sum|`.
pub fn exp_series(nodes: &NodeSet, s: f64, rel_tol: f64) -> Result<f64> {
    exp_series_certified(nodes, s, rel_tol).map(|v| v.value)
}

pub fn exp_series_certified(nodes: &NodeSet, s: f64, rel_tol: f64) -> Result<SeriesValue> {
    if !s.is_finite() {
        return Err(Error::domain(format!(
            "series argument s = {s} is not finite"
        )));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::domain(format!(
            "rel_tol = {rel_tol} must lie in (0, 1)"
        )));
    }
    let n = nodes.len();
    let mu = nodes.midrange();
    let shifted: Vec<f64> = nodes.as_slice().iter().map(|z| z - mu).collect();
    let m = shifted.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    let scale = (mu * s).exp();

    // prefix[j] = h_k(y_1..y_j) for the current degree k.
    let mut prefix = vec![Dd::ONE; n + 1];
    // s^i / i! for i = n - 1.
    let mut power = Dd::ONE;
    for i in 1..n {
        power = power.mul_f64(s / i as f64);
    }
    let mut sum = Dd::ZERO;
    // Bound on |term_i| for the current index i.
    let mut bound = s.abs().powi((n - 1) as i32) / factorial(n - 1);

    for k in 0..MAX_SERIES_TERMS {
        let i = k + n - 1;
        if k > 0 {
            let mut next = vec![Dd::ZERO; n + 1];
            for j in 1..=n {
                next[j] = next[j - 1] + prefix[j].mul_f64(shifted[j - 1]);
            }
            prefix = next;
            power = power.mul_f64(s / i as f64);
            bound *= m * s.abs() / k as f64;
        }
        sum = sum + prefix[n] * power;

        // Ratio of consecutive bounds for indices beyond i.
        let ratio = m * s.abs() / (k + 1) as f64;
        if ratio < 1.0 {
            let next_bound = bound * ratio;
            let tail = next_bound / (1.0 - ratio);
            let acc = sum.to_f64();
            if tail <= rel_tol * acc.abs() {
                return Ok(SeriesValue {
                    value: acc * scale,
                    tail_bound: tail * scale,
                    terms: k + 1,
                });
            }
        }
    }
    let tail = bound * m * s.abs() / MAX_SERIES_TERMS as f64;
    Err(Error::NonConvergence {
        terms: MAX_SERIES_TERMS,
        partial: sum.to_f64() * scale,
        tail_bound: tail * scale,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Divided difference of `t ↦ e^{ts}` over the nodes (repeats allowed), by
/// scaling and squaring of the lower bidiagonal matrix with the nodes on its
/// diagonal and ones below it; its exponential holds the divided differences
/// over every run of consecutive nodes.
///
/// For `s > 0` every entry of the exponential is positive, so the squarings
/// lose no relative accuracy.
pub fn exp_divided_difference(nodes: &NodeSet, s: f64) -> f64 {
    let n = nodes.len();
    if s < 0.0 {
        // f(-t) reverses the sign of every node and of s.
        let flipped = NodeSet(nodes.as_slice().iter().map(|z| -z).collect());
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        return sign * exp_divided_difference(&flipped, -s);
    }
    if n == 1 {
        return (nodes.0[0] * s).exp();
    }
    if s == 0.0 {
        return 0.0;
    }
    let mu = nodes.midrange();
    let y: Vec<f64> = nodes.as_slice().iter().map(|z| z - mu).collect();
    let m = y.iter().fold(0.0f64, |a, z| a.max(z.abs()));

    let norm = s * (m + 1.0);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let h = s / 2f64.powi(squarings);

    // Taylor series of exp(h·J). The matrix is lower triangular; store it dense.
    let mut acc = identity(n);
    let mut term = identity(n);
    for k in 1..60 {
        term = bidiagonal_times(&term, &y, h / k as f64);
        let mut largest = 0.0f64;
        for (a, t) in acc.iter_mut().zip(&term) {
            *a = *a + *t;
            largest = largest.max(t.hi.abs());
        }
        // Entries decay like h^d/d!, so compare against the smallest scale we
        // need to resolve.
        if largest < 1e-34 * h.powi(n as i32 - 1).min(1.0) / factorial(n - 1) {
            break;
        }
    }
    for _ in 0..squarings {
        acc = lower_square(&acc, n);
    }
    acc[(n - 1) * n].to_f64() * (mu * s).exp()
}

fn identity(n: usize) -> Vec<Dd> {
    let mut m = vec![Dd::ZERO; n * n];
    for i in 0..n {
        m[i * n + i] = Dd::ONE;
    }
    m
}

// (scale · J) · M where J = diag(y) + subdiagonal ones.
fn bidiagonal_times(m: &[Dd], y: &[f64], scale: f64) -> Vec<Dd> {
    let n = y.len();
    let mut out = vec![Dd::ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut v = m[i * n + j].mul_f64(y[i]);
            if i > 0 {
                v = v + m[(i - 1) * n + j];
            }
            out[i * n + j] = v.mul_f64(scale);
        }
    }
    out
}

fn lower_square(m: &[Dd], n: usize) -> Vec<Dd> {
    let mut out = vec![Dd::ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut v = Dd::ZERO;
            for k in j..=i {
                v = v + m[i * n + k] * m[k * n + j];
            }
            out[i * n + j] = v;
        }
    }
    out
}

/// Right-hand side of Sylvester's power identity,
/// `Σ_r x_r^d·Π_{j≠r} 1/(x_r - x_j)`, which equals `h_{d-n+1}(x)` for
/// pairwise-distinct nodes.
pub fn sylvester_power_sum(d: u32, nodes: &NodeSet) -> f64 {
    let x = nodes.as_slice();
    let mut sum = Dd::ZERO;
    for (r, &xr) in x.iter().enumerate() {
        let mut den = Dd::ONE;
        for (j, &xj) in x.iter().enumerate() {
            if j != r {
                den = den * Dd::diff(xr, xj);
            }
        }
        sum = sum + Dd::from_f64(xr).powi(d) / den;
    }
    sum.to_f64()
}

/// `Σ_i Π_{j≠i} x_j/(x_j - x_i)`, identically one for distinct nonzero nodes.
pub fn sylvester_unit_sum(nodes: &NodeSet) -> f64 {
    let x = nodes.as_slice();
    let mut sum = Dd::ZERO;
    for (i, &xi) in x.iter().enumerate() {
        let mut num = Dd::ONE;
        let mut den = Dd::ONE;
        for (j, &xj) in x.iter().enumerate() {
            if j != i {
                num = num.mul_f64(xj);
                den = den * Dd::diff(xj, xi);
            }
        }
        sum = sum + num / den;
    }
    sum.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ns(v: &[f64]) -> NodeSet {
        NodeSet::new(v.to_vec()).unwrap()
    }

    // Brute force: sum of all monomials of degree k via multisets.
    fn h_enumerate(k: usize, z: &[f64]) -> f64 {
        fn go(k: usize, z: &[f64], start: usize, acc: f64) -> f64 {
            if k == 0 {
                return acc;
            }
            (start..z.len()).map(|i| go(k - 1, z, i, acc * z[i])).sum()
        }
        go(k, z, 0, 1.0)
    }

    #[test]
    fn conventions_and_small_cases() {
        assert_eq!(complete_homogeneous(-1, &ns(&[5.0, 2.0])), 0.0);
        assert_eq!(complete_homogeneous(0, &ns(&[3.7])), 1.0);
        assert_eq!(complete_homogeneous(2, &ns(&[1.0, 1.0])), 3.0);
        assert_eq!(h_enumerate(2, &[1.0, 1.0]), 3.0);
        assert_eq!(complete_homogeneous(3, &ns(&[2.0])), 8.0);
    }

    #[test]
    fn empty_or_nonfinite_nodes_rejected() {
        assert!(matches!(NodeSet::new(vec![]), Err(Error::Domain(_))));
        assert!(NodeSet::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn recurrence_matches_enumeration() {
        let z = [0.3, -1.2, 2.5, 0.7];
        for k in 0..7 {
            let a = complete_homogeneous(k as i64, &ns(&z));
            let b = h_enumerate(k, &z);
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                "k={k}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(h_tail_bound(-2, 3, 10.0), 0.0);
        assert_eq!(h_tail_bound(0, 4, 7.0), 1.0);
        assert_eq!(h_tail_bound(2, 2, 3.0), 27.0);
    }

    #[test]
    fn tail_bound_dominates_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let z: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..=3.0)).collect();
            assert!(h_enumerate(2, &z).abs() <= 27.0);
        }
    }

    #[test]
    fn exp_series_examples() {
        let v = exp_series(&ns(&[0.5]), 2.0, 1e-15).unwrap();
        assert!((v - 1f64.exp()).abs() < 1e-15);
        let v = exp_series(&ns(&[0.0, 0.0]), 3.0, 1e-15).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        // Limit of (e^{us} - e^{vs})/(u - v) as u, v -> 0.
        let lim = (f64::exp(1e-7 * 3.0) - f64::exp(-1e-7 * 3.0)) / 2e-7;
        assert!((v - lim).abs() < 1e-7);
    }

    #[test]
    fn exp_series_two_point_divided_difference() {
        let (u, v, s) = (0.3f64, 0.9f64, 1.5f64);
        let dd = ((u * s).exp() - (v * s).exp()) / (u - v);
        // Brute force: 200 raw terms, no shift, no tail logic.
        let mut brute = 0.0;
        let mut power = 1.0;
        for i in 0..200 {
            if i > 0 {
                power *= s / i as f64;
            }
            brute += h_enumerate_signed(i as i64 - 1, &[u, v]) * power;
        }
        let series = exp_series(&ns(&[u, v]), s, 1e-15).unwrap();
        assert!((brute - dd).abs() < 1e-13 * dd);
        assert!((series - dd).abs() < 1e-14 * dd);
    }

    fn h_enumerate_signed(k: i64, z: &[f64]) -> f64 {
        if k < 0 {
            0.0
        } else {
            // closed form for two nodes: (u^{k+1} - v^{k+1})/(u - v)
            let (u, v) = (z[0], z[1]);
            (u.powi(k as i32 + 1) - v.powi(k as i32 + 1)) / (u - v)
        }
    }

    #[test]
    fn exp_series_zero_argument() {
        assert_eq!(exp_series(&ns(&[1.0, 2.0]), 0.0, 1e-12).unwrap(), 0.0);
        assert_eq!(exp_series(&ns(&[1.0]), 0.0, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn exp_series_rejects_bad_arguments() {
        assert!(exp_series(&ns(&[1.0]), f64::NAN, 1e-12).is_err());
        assert!(exp_series(&ns(&[1.0]), 1.0, 0.0).is_err());
        assert!(exp_series(&ns(&[1.0]), 1.0, 1.5).is_err());
    }

    #[test]
    fn exp_series_reports_nonconvergence() {
        // Enormous spread times s cannot close the bound within the cap.
        let err = exp_series(&ns(&[-1e4, 1e4]), 10.0, 1e-12).unwrap_err();
        assert!(matches!(
            err,
            Error::NonConvergence {
                terms: MAX_SERIES_TERMS,
                ..
            }
        ));
    }

    #[test]
    fn coincident_nodes_closed_form() {
        // DD of e^{ts} at c repeated m times is e^{cs}·s^{m-1}/(m-1)!.
        for &(c, s, m) in &[
            (0.4, 2.0, 3usize),
            (-1.5, 3.0, 4),
            (2.0, 0.7, 2),
            (-0.25, 6.0, 5),
        ] {
            let nodes = ns(&vec![c; m]);
            let exact = (c * s).exp() * s.powi(m as i32 - 1) / factorial(m - 1);
            let a = exp_series(&nodes, s, 1e-16).unwrap();
            let b = exp_divided_difference(&nodes, s);
            assert!(((a - exact) / exact).abs() < 1e-10, "series {a} vs {exact}");
            assert!(((b - exact) / exact).abs() < 1e-13, "matrix {b} vs {exact}");
        }
    }

    #[test]
    fn matrix_method_matches_two_point_formula() {
        for &(u, v, s) in &[
            (0.3f64, 0.9f64, 1.5f64),
            (-4.0, 3.0, 18.0),
            (1.0, -2.0, -2.5),
        ] {
            let nodes = ns(&[u, v]);
            let dd = ((u * s).exp() - (v * s).exp()) / (u - v);
            let got = exp_divided_difference(&nodes, s);
            assert!(
                ((got - dd) / dd).abs() < 1e-13,
                "{u} {v} {s}: {got} vs {dd}"
            );
        }
    }

    #[test]
    fn sylvester_small_example() {
        // h_1(1, 2, 4) = 7
        let nodes = ns(&[1.0, 2.0, 4.0]);
        assert!((sylvester_power_sum(3, &nodes) - 7.0).abs() < 1e-14);
        assert!((sylvester_unit_sum(&nodes) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn symmetric_under_permutation(
            z in proptest::collection::vec(-3.0f64..3.0, 1..7),
            k in 0i64..9,
            rot in 0usize..7,
        ) {
            let mut p = z.clone();
            p.rotate_left(rot % z.len());
            p.reverse();
            prop_assert_eq!(
                complete_homogeneous(k, &ns(&z)),
                complete_homogeneous(k, &ns(&p))
            );
        }

        #[test]
        fn generating_function_identity(
            z in proptest::collection::vec(-0.9f64..0.9, 1..=6),
            t in -0.99f64..0.99,
        ) {
            let nodes = ns(&z);
            let kmax = 400;
            let h = complete_homogeneous_upto(kmax, &nodes);
            let mut sum = 0.0;
            let mut tk = 1.0;
            for hk in &h {
                sum += hk * tk;
                tk *= t;
            }
            let product: f64 = z.iter().map(|zi| 1.0 / (1.0 - zi * t)).product();
            // Tail beyond kmax from the binomial bound.
            let m = nodes.max_abs() * t.abs();
            let n = z.len();
            let tail = h_tail_bound(kmax as i64 + 1, n, m) / (1.0 - m).powi(n as i32);
            prop_assert!((sum - product).abs() <= tail + 1e-12 * product.abs());
        }

        #[test]
        fn series_and_matrix_agree(
            z in proptest::collection::vec(-2.0f64..2.0, 1..=6),
            s in -4.0f64..4.0,
        ) {
            let nodes = ns(&z);
            let a = exp_series(&nodes, s, 1e-15).unwrap();
            let b = exp_divided_difference(&nodes, s);
            prop_assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300) + 1e-300, "{} vs {}", a, b);
        }
    }
}
