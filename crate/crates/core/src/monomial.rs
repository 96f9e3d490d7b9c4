//! The monomial local model: map `x ↦ x^A` on the unit cube with measure
//! `x^B dx`.
//!
//! With `c_i = (b_i + 1)/a_i` over the axes where `a_i > 0`, the upper-tail
//! volume and the density are divided differences of the exponential:
//!
//! ```text
//! V(q) = κ · DD[t ↦ e^{ts}](0, -c_1, ..., -c_n),       s = -log q
//! ρ(q) = κ · DD[t ↦ e^{ts}](1 - c_1, ..., 1 - c_n)
//!      = κ · Σ_i q^{c_i - 1} / Π_{j≠i} (c_j - c_i)      (distinct c)
//! ```
//!
//! where `κ = Π_{a_i>0} 1/a_i · Π_{a_i=0} 1/(b_i+1)`.

use serde::{Deserialize, Serialize};

use crate::ddouble::Dd;
use crate::error::{Error, Result};
use crate::symfun::{exp_divided_difference, exp_series, NodeSet};

/// Default clustering tolerance, relative to the largest spectrum value.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;

/// Partial fractions are used only when every pair of spectrum values is at
/// least this far apart.
pub const PATH_SWITCH_GAP: f64 = 0.05;

// Largest tolerated ratio Σ|terms| / |sum| for the double-double partial
// fraction sums before falling back to the matrix evaluator.
const MAX_PF_CANCELLATION: f64 = 1e15;

const SERIES_REL_TOL: f64 = 1e-16;

/// Map exponents `A` and measure exponents `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponents", into = "RawExponents")]
pub struct ExponentData {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawExponents {
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
}

impl TryFrom<RawExponents> for ExponentData {
    type Error = Error;
    fn try_from(raw: RawExponents) -> Result<Self> {
        ExponentData::new(raw.a, raw.b)
    }
}

impl From<ExponentData> for RawExponents {
    fn from(e: ExponentData) -> Self {
        RawExponents { a: e.a, b: e.b }
    }
}

impl ExponentData {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::domain(format!(
                "A and B must be nonempty and of equal length (got {} and {})",
                a.len(),
                b.len()
            )));
        }
        for (name, v) in [("A", &a), ("B", &b)] {
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::domain(format!(
                    "{name} entries must be finite and nonnegative (got {x})"
                )));
            }
        }
        if a.iter().all(|&x| x == 0.0) {
            return Err(Error::DegenerateMap);
        }
        Ok(ExponentData { a, b })
    }

    pub fn from_integers(a: &[u32], b: &[u32]) -> Result<Self> {
        Self::new(
            a.iter().map(|&x| x as f64).collect(),
            b.iter().map(|&x| x as f64).collect(),
        )
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn is_integer(&self) -> bool {
        self.a.iter().chain(&self.b).all(|x| x.fract() == 0.0)
    }

    /// Mass of `x^B dx` on the unit cube, `Π 1/(b_i + 1)`.
    pub fn unit_cube_mass(&self) -> f64 {
        self.b.iter().map(|b| 1.0 / (b + 1.0)).product()
    }

    /// Same exponents with the axes permuted: axis `i` of the result is axis
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(Error::domain("permutation length does not match dimension"));
        }
        Self::new(
            perm.iter().map(|&i| self.a[i]).collect(),
            perm.iter().map(|&i| self.b[i]).collect(),
        )
    }
}

/// A group of spectrum values within the clustering tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Mean of the members.
    pub representative: f64,
    /// Indices into [`Spectrum::nodes`].
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// `c_i = (b_i + 1)/a_i` over the axes with `a_i > 0`.
    pub nodes: Vec<f64>,
    /// Original axis of each node.
    pub axes: Vec<usize>,
    /// `κ = Π_{a_i>0} 1/a_i · Π_{a_i=0} 1/(b_i+1)`.
    pub prefactor: f64,
    /// Sorted by representative.
    pub clusters: Vec<Cluster>,
    /// Absolute tolerance the clusters were built with.
    pub cluster_tol: f64,
}

/// How a density or volume value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalPath {
    PartialFraction,
    Series,
    Confluent,
    Limit,
    /// Outside the support of the measure; the value is zero by convention.
    Outside,
}

impl EvalPath {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalPath::PartialFraction => "partial-fraction",
            EvalPath::Series => "series",
            EvalPath::Confluent => "confluent",
            EvalPath::Limit => "limit",
            EvalPath::Outside => "outside",
        }
    }
}

impl std::str::FromStr for EvalPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "partial-fraction" => EvalPath::PartialFraction,
            "series" => EvalPath::Series,
            "confluent" => EvalPath::Confluent,
            "limit" => EvalPath::Limit,
            "outside" => EvalPath::Outside,
            other => return Err(Error::domain(format!("unknown evaluation path `{other}`"))),
        })
    }
}

impl std::fmt::Display for EvalPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub path: EvalPath,
}

/// Compute the spectrum. `cluster_tol` is relative to `max(1, max c_i)`.
pub fn derive_spectrum(e: &ExponentData, cluster_tol: f64) -> Result<Spectrum> {
    if !(cluster_tol > 0.0 && cluster_tol.is_finite()) {
        return Err(Error::domain(format!(
            "cluster_tol = {cluster_tol} must be positive"
        )));
    }
    let mut nodes = Vec::new();
    let mut axes = Vec::new();
    let mut prefactor = 1.0;
    for (i, (&a, &b)) in e.a.iter().zip(&e.b).enumerate() {
        if a > 0.0 {
            nodes.push((b + 1.0) / a);
            axes.push(i);
            prefactor /= a;
        } else {
            prefactor /= b + 1.0;
        }
    }
    if nodes.is_empty() {
        return Err(Error::DegenerateMap);
    }
    let scale = nodes.iter().copied().fold(1.0f64, f64::max);
    let tol = cluster_tol * scale;

    // Single linkage on the sorted values.
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &j| nodes[i].total_cmp(&nodes[j]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && nodes[i] - nodes[order[pos - 1]] <= tol {
            clusters.last_mut().unwrap().push(i);
        } else {
            clusters.push(vec![i]);
        }
    }
    let clusters = clusters
        .into_iter()
        .map(|members| Cluster {
            representative: members.iter().map(|&i| nodes[i]).sum::<f64>() / members.len() as f64,
            members,
        })
        .collect();

    Ok(Spectrum {
        nodes,
        axes,
        prefactor,
        clusters,
        cluster_tol: tol,
    })
}

impl Spectrum {
    pub fn from_exponents(e: &ExponentData) -> Result<Self> {
        derive_spectrum(e, DEFAULT_CLUSTER_TOL)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest distance between distinct clusters; infinite for one cluster.
    pub fn min_gap(&self) -> f64 {
        self.clusters
            .windows(2)
            .map(|w| w[1].representative - w[0].representative)
            .fold(f64::INFINITY, f64::min)
    }

    fn well_separated(&self) -> bool {
        self.clusters.iter().all(|c| c.multiplicity() == 1) && self.min_gap() >= PATH_SWITCH_GAP
    }

    fn all_distinct(&self) -> bool {
        let mut v = self.nodes.clone();
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[0] != w[1])
    }

    /// `ρ(q)` for `q ∈ (0, 1)`, choosing the evaluation path.
    pub fn density(&self, q: f64) -> Result<Evaluated> {
        check_open_unit(q)?;
        let s = -q.ln();
        let n = self.len();
        if n == 1 {
            let c = self.nodes[0];
            return Ok(Evaluated {
                value: self.prefactor * q.powf(c - 1.0),
                path: EvalPath::PartialFraction,
            });
        }
        if self.clusters.len() == 1 {
            let c = self.clusters[0].representative;
            let m = n as i32;
            let value = self.prefactor * q.powf(c - 1.0) * s.powi(m - 1) / factorial(n - 1);
            return Ok(Evaluated {
                value,
                path: EvalPath::Confluent,
            });
        }
        if self.well_separated() {
            if let Some(v) = self.density_pf_checked(s) {
                return Ok(Evaluated {
                    value: v,
                    path: EvalPath::PartialFraction,
                });
            }
        }
        Ok(Evaluated {
            value: self.density_matrix(s),
            path: EvalPath::Series,
        })
    }

    /// Partial-fraction form `κ Σ q^{c_i-1}/Π_{j≠i}(c_j - c_i)`. Requires
    /// pairwise-distinct spectrum values.
    pub fn density_partial_fraction(&self, q: f64) -> Result<f64> {
        check_open_unit(q)?;
        if !self.all_distinct() {
            return Err(Error::domain(
                "partial fractions need pairwise-distinct spectrum values",
            ));
        }
        let (sum, _) = self.density_pf_terms(-q.ln());
        Ok(self.prefactor * sum.to_f64())
    }

    /// Certified power series `κ Σ h_{i-n+1}(1-c)·(-log q)^i/i!`.
    pub fn density_series(&self, q: f64) -> Result<f64> {
        check_open_unit(q)?;
        let nodes = NodeSet::new(self.nodes.iter().map(|c| 1.0 - c).collect())?;
        Ok(self.prefactor * exp_series(&nodes, -q.ln(), SERIES_REL_TOL)?)
    }

    /// Scaling-and-squaring evaluation of the same divided difference.
    pub fn density_divided_difference(&self, q: f64) -> Result<f64> {
        check_open_unit(q)?;
        Ok(self.density_matrix(-q.ln()))
    }

    fn density_matrix(&self, s: f64) -> f64 {
        let nodes = NodeSet::new(self.nodes.iter().map(|c| 1.0 - c).collect())
            .expect("spectrum nodes are finite and nonempty");
        self.prefactor * exp_divided_difference(&nodes, s)
    }

    fn density_pf_terms(&self, s: f64) -> (Dd, Dd) {
        let mut sum = Dd::ZERO;
        let mut abs_sum = Dd::ZERO;
        for (i, &ci) in self.nodes.iter().enumerate() {
            let mut den = Dd::ONE;
            for (j, &cj) in self.nodes.iter().enumerate() {
                if j != i {
                    den = den * Dd::diff(cj, ci);
                }
            }
            let t = (Dd::diff(1.0, ci) * Dd::from_f64(s)).exp() / den;
            sum = sum + t;
            abs_sum = abs_sum + t.abs();
        }
        (sum, abs_sum)
    }

    fn density_pf_checked(&self, s: f64) -> Option<f64> {
        let (sum, abs_sum) = self.density_pf_terms(s);
        let v = sum.to_f64();
        (v > 0.0 && abs_sum.to_f64() <= MAX_PF_CANCELLATION * v).then_some(self.prefactor * v)
    }

    /// `V(q)` for `q ∈ (0, 1)`, choosing the evaluation path.
    pub fn volume(&self, q: f64) -> Result<Evaluated> {
        check_open_unit(q)?;
        let s = -q.ln();
        if self.well_separated() {
            let (sum, abs_sum) = self.volume_pf_terms(s);
            let v = sum.to_f64();
            if v > 0.0 && abs_sum.to_f64() <= MAX_PF_CANCELLATION * v {
                return Ok(Evaluated {
                    value: self.prefactor * v,
                    path: EvalPath::PartialFraction,
                });
            }
        }
        let mut nodes = vec![0.0];
        nodes.extend(self.nodes.iter().map(|c| -c));
        let nodes = NodeSet::new(nodes)?;
        Ok(Evaluated {
            value: self.prefactor * exp_divided_difference(&nodes, s),
            path: EvalPath::Series,
        })
    }

    /// Partial-fraction form
    /// `κ (1/Π c_i - Σ q^{c_i}/(c_i Π_{j≠i}(c_j - c_i)))`, summed as
    /// `κ Σ (1 - q^{c_i})/(c_i Π_{j≠i}(c_j - c_i))`.
    pub fn volume_partial_fraction(&self, q: f64) -> Result<f64> {
        check_open_unit(q)?;
        if !self.all_distinct() {
            return Err(Error::domain(
                "partial fractions need pairwise-distinct spectrum values",
            ));
        }
        let (sum, _) = self.volume_pf_terms(-q.ln());
        Ok(self.prefactor * sum.to_f64())
    }

    fn volume_pf_terms(&self, s: f64) -> (Dd, Dd) {
        let mut sum = Dd::ZERO;
        let mut abs_sum = Dd::ZERO;
        for (i, &ci) in self.nodes.iter().enumerate() {
            let mut den = Dd::from_f64(ci);
            for (j, &cj) in self.nodes.iter().enumerate() {
                if j != i {
                    den = den * Dd::diff(cj, ci);
                }
            }
            let one_minus_qc = -(Dd::prod(-ci, s).exp_m1());
            let t = one_minus_qc / den;
            sum = sum + t;
            abs_sum = abs_sum + t.abs();
        }
        (sum, abs_sum)
    }

    /// Certified power series `κ Σ h_{i-n}(-c)·(-log q)^i/i!`.
    pub fn volume_series(&self, q: f64) -> Result<f64> {
        check_open_unit(q)?;
        let mut nodes = vec![0.0];
        nodes.extend(self.nodes.iter().map(|c| -c));
        let nodes = NodeSet::new(nodes)?;
        Ok(self.prefactor * exp_series(&nodes, -q.ln(), SERIES_REL_TOL)?)
    }

    /// `lim_{q→0+} ρ(q)` together with the leading behaviour
    /// `ρ ~ const·q^p·(-log q)^m`.
    pub fn limit_at_zero(&self) -> LimitAtZero {
        let lowest = &self.clusters[0];
        let leading = LeadingExponents {
            power: lowest.representative - 1.0,
            log_power: lowest.multiplicity() - 1,
        };
        let at_one = |c: f64| (c - 1.0).abs() <= self.cluster_tol;
        let value = if at_one(lowest.representative) {
            if lowest.multiplicity() >= 2 {
                f64::INFINITY
            } else {
                let i0 = lowest.members[0];
                let mut prod = Dd::ONE;
                for (j, &cj) in self.nodes.iter().enumerate() {
                    if j != i0 {
                        prod = prod * Dd::diff(cj, 1.0);
                    }
                }
                self.prefactor / prod.to_f64()
            }
        } else if lowest.representative < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
        LimitAtZero { value, leading }
    }
}

fn check_open_unit(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q = {q} must lie in (0, 1)")))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// `ρ ~ const · q^power · (-log q)^log_power` as `q → 0+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingExponents {
    pub power: f64,
    pub log_power: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitAtZero {
    /// Finite value or `+∞`.
    pub value: f64,
    pub leading: LeadingExponents,
}

/// Upper-tail volume `V(A, B, q)`: mass of `{x ∈ [0,1]^n : x^A > q}`
/// under `x^B dx`.
pub fn volume(e: &ExponentData, q: f64) -> Result<f64> {
    Ok(Spectrum::from_exponents(e)?.volume(q)?.value)
}

/// Density at `q ∈ (0, 1)` of `(x^A)_*(1_{[0,1]^n} x^B dx)`.
pub fn density_unit_cube(e: &ExponentData, q: f64) -> Result<f64> {
    Ok(Spectrum::from_exponents(e)?.density(q)?.value)
}

/// Unit-cube density on `[0, ∞)`: the limit at `q = 0` (possibly `+∞`),
/// zero for `q ≥ 1`.
pub fn density_unit_cube_extended(spec: &Spectrum, q: f64) -> Result<Evaluated> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::domain(format!("q = {q} must be nonnegative")));
    }
    if q == 0.0 {
        return Ok(Evaluated {
            value: spec.limit_at_zero().value,
            path: EvalPath::Limit,
        });
    }
    if q >= 1.0 {
        return Ok(Evaluated {
            value: 0.0,
            path: EvalPath::Outside,
        });
    }
    spec.density(q)
}

pub fn limit_at_zero(e: &ExponentData) -> Result<LimitAtZero> {
    Ok(Spectrum::from_exponents(e)?.limit_at_zero())
}

/// Odd/even bookkeeping for the reflections of `[-1, 1]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    SomeOdd,
    AllEven,
    NonInteger,
}

impl Parity {
    pub fn of(a: &[f64]) -> Self {
        if a.iter().any(|x| x.fract() != 0.0) {
            Parity::NonInteger
        } else if a.iter().any(|x| x % 2.0 == 1.0) {
            Parity::SomeOdd
        } else {
            Parity::AllEven
        }
    }
}

/// Density of `(x^A)_*(1_{[-1,1]^n} |x^B| dx)` at any real `q`.
///
/// With an odd exponent the density is `2^{n-1} ρ(|q|)`; with all exponents
/// even it is `2^n ρ(q)` on `q > 0` and zero on `q < 0`. Non-integer `A` is
/// rejected when `require_integer_a` is set and otherwise read as the map
/// `|x|^A`, which behaves like the all-even case.
pub fn density_signed_cube(e: &ExponentData, q: f64, require_integer_a: bool) -> Result<f64> {
    let spec = Spectrum::from_exponents(e)?;
    Ok(signed_cube_density(e, &spec, q, require_integer_a)?.value)
}

pub fn signed_cube_density(
    e: &ExponentData,
    spec: &Spectrum,
    q: f64,
    require_integer_a: bool,
) -> Result<Evaluated> {
    if q.is_nan() {
        return Err(Error::domain("q is NaN"));
    }
    let parity = Parity::of(e.a());
    if parity == Parity::NonInteger && require_integer_a {
        return Err(Error::domain(
            "parity of a non-integer exponent is undefined",
        ));
    }
    let n = e.dim() as i32;
    let (factor, symmetric) = match parity {
        Parity::SomeOdd => (2f64.powi(n - 1), true),
        Parity::AllEven | Parity::NonInteger => (2f64.powi(n), false),
    };
    if q < 0.0 && !symmetric {
        return Ok(Evaluated {
            value: 0.0,
            path: EvalPath::Outside,
        });
    }
    let r = density_unit_cube_extended(spec, q.abs())?;
    Ok(Evaluated {
        value: factor * r.value,
        path: r.path,
    })
}

/// Which admissible exponent condition holds, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrsCase {
    /// `a_i ≤ b_i` for all `i`.
    Case1,
    /// `a_k = 1` for a distinguished axis `k` and `a_i ≤ b_i` for `i ≠ k`.
    Case2,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityVerdict {
    pub frs_case: FrsCase,
    /// Axis playing the role of the distinguished coordinate in case 2.
    pub distinguished_axis: Option<usize>,
    pub parity: Parity,
    pub limit_at_zero: f64,
    pub leading_exponents: LeadingExponents,
}

impl ContinuityVerdict {
    pub fn is_continuous(&self) -> bool {
        self.limit_at_zero.is_finite()
    }
}

pub fn classify(e: &ExponentData) -> Result<ContinuityVerdict> {
    if !e.is_integer() {
        return Err(Error::domain("classification needs integer exponents"));
    }
    let (a, b) = (e.a(), e.b());
    let dominated = |i: usize| a[i] <= b[i];
    let (frs_case, distinguished_axis) = if (0..e.dim()).all(dominated) {
        (FrsCase::Case1, None)
    } else if let Some(k) =
        (0..e.dim()).find(|&k| a[k] == 1.0 && (0..e.dim()).all(|i| i == k || dominated(i)))
    {
        (FrsCase::Case2, Some(k))
    } else {
        (FrsCase::Outside, None)
    };
    let limit = limit_at_zero(e)?;
    Ok(ContinuityVerdict {
        frs_case,
        distinguished_axis,
        parity: Parity::of(a),
        limit_at_zero: limit.value,
        leading_exponents: limit.leading,
    })
}
