//! Piecewise-monomial measures as signed sums of box atoms.
//!
//! An atom `coeff · 1_box · |x^B| dx` is pushed forward under `x^A` by
//! splitting its box at the coordinate hyperplanes, writing every orthant
//! piece as a signed combination of symmetric boxes `Π [-w_i, w_i]`, and
//! rescaling each symmetric box onto `[-1, 1]^n`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ddouble::Dd;
use crate::error::{Error, Result};
use crate::monomial::{signed_cube_density, EvalPath, Evaluated, ExponentData, Parity, Spectrum};

/// Axis-aligned box inside `[-1, 1]^n` with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct AxisBox {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<[f64; 2]>> for AxisBox {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        AxisBox::new(v.into_iter().map(|[lo, hi]| (lo, hi)).collect())
    }
}

impl From<AxisBox> for Vec<[f64; 2]> {
    fn from(b: AxisBox) -> Self {
        b.intervals.into_iter().map(|(lo, hi)| [lo, hi]).collect()
    }
}

impl AxisBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::domain("box must have at least one axis"));
        }
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo < hi && lo >= -1.0 && hi <= 1.0) {
                return Err(Error::domain(format!(
                    "axis {i}: interval [{lo}, {hi}] must satisfy -1 <= lo < hi <= 1"
                )));
            }
        }
        Ok(AxisBox { intervals })
    }

    /// `[-1, 1]^n`.
    pub fn signed_cube(n: usize) -> Self {
        AxisBox {
            intervals: vec![(-1.0, 1.0); n],
        }
    }

    /// `[0, 1]^n`.
    pub fn unit_cube(n: usize) -> Self {
        AxisBox {
            intervals: vec![(0.0, 1.0); n],
        }
    }

    /// `Π [-w_i, w_i]`.
    pub fn symmetric(half_widths: &[f64]) -> Result<Self> {
        Self::new(half_widths.iter().map(|&w| (-w, w)).collect())
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.intervals
            .iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Half-widths if the box is symmetric about the origin.
    pub fn half_widths(&self) -> Option<Vec<f64>> {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (lo == -hi).then_some(hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .intervals
                .iter()
                .zip(x)
                .all(|(&(lo, hi), &xi)| lo <= xi && xi <= hi)
    }

    /// Split every interval that straddles zero; the pieces lie in closed
    /// orthants.
    pub fn split_at_origin(&self) -> Vec<AxisBox> {
        let mut pieces = vec![Vec::with_capacity(self.dim())];
        for &(lo, hi) in &self.intervals {
            let parts: Vec<(f64, f64)> = if lo < 0.0 && hi > 0.0 {
                vec![(lo, 0.0), (0.0, hi)]
            } else {
                vec![(lo, hi)]
            };
            pieces = pieces
                .into_iter()
                .flat_map(|prefix| {
                    parts.iter().map(move |&p| {
                        let mut v = prefix.clone();
                        v.push(p);
                        v
                    })
                })
                .collect();
        }
        pieces
            .into_iter()
            .map(|intervals| AxisBox { intervals })
            .collect()
    }
}

/// Cell `□_{k,r}` of the `(2k+1)^n` grid on `[-1, 1]^n`; `0 ≤ r_i < 2k+1`.
pub fn kbox(k: u32, r: &[u32]) -> Result<AxisBox> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    let cells = 2 * k + 1;
    let edge = |j: u32| (2.0 * j as f64 - cells as f64) / cells as f64;
    let intervals = r
        .iter()
        .map(|&ri| {
            if ri >= cells {
                Err(Error::domain(format!("r = {ri} out of range 0..{cells}")))
            } else {
                Ok((edge(ri), edge(ri + 1)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    AxisBox::new(intervals)
}

/// One term `coeff · 1_box · |x^B| dx`, pushed forward under `x^A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAtom", into = "RawAtom")]
pub struct BoxAtom {
    pub coeff: f64,
    pub region: AxisBox,
    pub exponents: ExponentData,
}

#[derive(Serialize, Deserialize)]
struct RawAtom {
    coeff: f64,
    #[serde(rename = "box")]
    region: AxisBox,
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
}

impl TryFrom<RawAtom> for BoxAtom {
    type Error = Error;
    fn try_from(raw: RawAtom) -> Result<Self> {
        BoxAtom::new(raw.coeff, raw.region, ExponentData::new(raw.a, raw.b)?)
    }
}

impl From<BoxAtom> for RawAtom {
    fn from(atom: BoxAtom) -> Self {
        RawAtom {
            coeff: atom.coeff,
            region: atom.region,
            a: atom.exponents.a().to_vec(),
            b: atom.exponents.b().to_vec(),
        }
    }
}

impl BoxAtom {
    pub fn new(coeff: f64, region: AxisBox, exponents: ExponentData) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::domain(format!("coefficient {coeff} is not finite")));
        }
        if region.dim() != exponents.dim() {
            return Err(Error::domain(format!(
                "box has {} axes but exponents have {}",
                region.dim(),
                exponents.dim()
            )));
        }
        Ok(BoxAtom {
            coeff,
            region,
            exponents,
        })
    }

    /// The measure `x^B dx` on `[0, 1]^n`.
    pub fn unit_cube(exponents: ExponentData) -> Self {
        let n = exponents.dim();
        BoxAtom {
            coeff: 1.0,
            region: AxisBox::unit_cube(n),
            exponents,
        }
    }

    /// The measure `|x^B| dx` on `[-1, 1]^n`.
    pub fn signed_cube(exponents: ExponentData) -> Self {
        let n = exponents.dim();
        BoxAtom {
            coeff: 1.0,
            region: AxisBox::signed_cube(n),
            exponents,
        }
    }

    /// Total mass `coeff · ∫_box |x^B| dx`.
    pub fn mass(&self) -> f64 {
        self.coeff
            * self
                .region
                .intervals()
                .iter()
                .zip(self.exponents.b())
                .map(|(&(lo, hi), &b)| abs_power_integral(lo, hi, b))
                .product::<f64>()
    }
}

// ∫_lo^hi |x|^b dx, valid across zero.
fn abs_power_integral(lo: f64, hi: f64, b: f64) -> f64 {
    let antiderivative = |x: f64| x.signum() * x.abs().powf(b + 1.0) / (b + 1.0);
    antiderivative(hi) - antiderivative(lo)
}

/// A finite signed sum of atoms of common dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomSet {
    atoms: Vec<BoxAtom>,
}

impl AtomSet {
    pub fn new(atoms: Vec<BoxAtom>) -> Result<Self> {
        if let Some(first) = atoms.first() {
            let n = first.region.dim();
            if let Some((i, _)) = atoms.iter().enumerate().find(|(_, a)| a.region.dim() != n) {
                return Err(Error::domain(format!("atom {i} has a different dimension")));
            }
        }
        Ok(AtomSet { atoms })
    }

    pub fn single(atom: BoxAtom) -> Self {
        AtomSet { atoms: vec![atom] }
    }

    pub fn atoms(&self) -> &[BoxAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.region.dim())
    }

    /// The shared map exponents, or an error if they differ.
    pub fn shared_a(&self) -> Result<Option<&[f64]>> {
        let Some(first) = self.atoms.first() else {
            return Ok(None);
        };
        let a = first.exponents.a();
        if let Some((i, _)) = self
            .atoms
            .iter()
            .enumerate()
            .find(|(_, atom)| atom.exponents.a() != a)
        {
            return Err(Error::domain(format!(
                "atom {i} uses a different map exponent A than atom 0"
            )));
        }
        Ok(Some(a))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        AtomSet {
            atoms: self
                .atoms
                .iter()
                .map(|a| BoxAtom {
                    coeff: a.coeff * factor,
                    ..a.clone()
                })
                .collect(),
        }
    }

    /// Disjoint union of the two sums.
    pub fn union(&self, other: &AtomSet) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        AtomSet::new(atoms)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms
            .iter()
            .fold(Dd::ZERO, |acc, a| acc + Dd::from_f64(a.mass()))
            .to_f64()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let atoms: Vec<BoxAtom> = serde_json::from_str(text).map_err(|e| {
            let location = format!("line {} column {}", e.line(), e.column());
            let full = e.to_string();
            let message = full
                .strip_suffix(&format!(" at {location}"))
                .unwrap_or(&full)
                .to_string();
            Error::Parse { location, message }
        })?;
        AtomSet::new(atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.atoms).expect("atoms serialize")
    }
}

/// Cell-centre step approximation `f^□ = Σ f(centre(□_{k,r})) 1_{□_{k,r}}`,
/// every cell carrying `exponents`.
pub fn approximate_by_boxes<F>(f: F, k: u32, exponents: &ExponentData) -> Result<AtomSet>
where
    F: Fn(&[f64]) -> f64,
{
    let n = exponents.dim();
    let cells = 2 * k + 1;
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    let total = (cells as usize).pow(n as u32);
    let mut atoms = Vec::with_capacity(total);
    let mut r = vec![0u32; n];
    for _ in 0..total {
        let region = kbox(k, &r)?;
        let coeff = f(&region.center());
        atoms.push(BoxAtom::new(coeff, region, exponents.clone())?);
        // Odometer increment, last axis fastest.
        for ri in r.iter_mut().rev() {
            *ri += 1;
            if *ri < cells {
                break;
            }
            *ri = 0;
        }
    }
    AtomSet::new(atoms)
}

/// Which half-line a reflected piece is supported on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Orientation {
    /// Both signs, as for the full symmetric box.
    Both,
    Positive,
    Negative,
}

/// A symmetric-box atom produced by [`reflect_decompose`].
///
/// Its density is [`scaled_density`] of `atom`, multiplied by `2·1[σq > 0]`
/// when the orientation `σ` is one-sided; `q = 0` counts as the positive
/// side, so values there are right-hand limits. Summed over a reflection
/// orbit the orientations average out.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedAtom {
    pub atom: BoxAtom,
    pub orientation: Orientation,
}

impl ReflectedAtom {
    fn mask(&self, q: f64) -> f64 {
        match self.orientation {
            Orientation::Both => 1.0,
            Orientation::Positive if q >= 0.0 => 2.0,
            Orientation::Negative if q < 0.0 => 2.0,
            _ => 0.0,
        }
    }
}

/// Rewrite an orthant-contained atom as a signed combination of symmetric
/// boxes: per axis `1_{[l,h]} = ½(1_{[-h,h]} - 1_{[-l,l]})` against the
/// reflection-invariant weight `|x^B|`, the inner term vanishing when `l = 0`.
pub fn reflect_decompose(atom: &BoxAtom) -> Result<Vec<ReflectedAtom>> {
    let a = atom.exponents.a();
    let parity = Parity::of(a);
    let mut sign = 1.0;
    // Per axis: list of (coefficient, half-width).
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(atom.region.dim());
    for (i, &(lo, hi)) in atom.region.intervals().iter().enumerate() {
        let (inner, outer, axis_sign) = if lo >= 0.0 {
            (lo, hi, 1.0)
        } else if hi <= 0.0 {
            (-hi, -lo, -1.0)
        } else {
            return Err(Error::domain(format!(
                "axis {i}: interval [{lo}, {hi}] straddles zero; split it first"
            )));
        };
        if parity == Parity::SomeOdd && a[i] % 2.0 == 1.0 {
            sign *= axis_sign;
        }
        let mut terms = vec![(0.5, outer)];
        if inner > 0.0 {
            terms.push((-0.5, inner));
        }
        axes.push(terms);
    }
    let orientation = match parity {
        Parity::SomeOdd if sign > 0.0 => Orientation::Positive,
        Parity::SomeOdd => Orientation::Negative,
        _ => Orientation::Both,
    };

    let mut combos: Vec<(f64, Vec<f64>)> = vec![(atom.coeff, Vec::new())];
    for terms in &axes {
        combos = combos
            .into_iter()
            .flat_map(|(c, widths)| {
                terms.iter().map(move |&(tc, w)| {
                    let mut ws = widths.clone();
                    ws.push(w);
                    (c * tc, ws)
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|(coeff, widths)| {
            Ok(ReflectedAtom {
                atom: BoxAtom::new(coeff, AxisBox::symmetric(&widths)?, atom.exponents.clone())?,
                orientation,
            })
        })
        .collect()
}

/// Density of a symmetric-box atom `Π [-λ_i, λ_i]` at `q`:
/// `coeff · Π λ_i^{b_i+1} · ρ_signed(q/Λ) / Λ` with `Λ = Π λ_i^{a_i}`.
pub fn scaled_density(atom: &BoxAtom, q: f64) -> Result<f64> {
    let spec = Spectrum::from_exponents(&atom.exponents)?;
    Ok(scaled_density_with(atom, &spec, q)?.value)
}

fn scaled_density_with(atom: &BoxAtom, spec: &Spectrum, q: f64) -> Result<Evaluated> {
    let widths = atom
        .region
        .half_widths()
        .ok_or_else(|| Error::domain("scaled_density needs a box symmetric about the origin"))?;
    let (mass_scale, map_scale) = scales(&widths, &atom.exponents);
    let r = signed_cube_density(&atom.exponents, spec, q / map_scale, false)?;
    Ok(Evaluated {
        value: atom.coeff * mass_scale * r.value / map_scale,
        path: r.path,
    })
}

// (Π λ^{b+1}, Π λ^a)
fn scales(widths: &[f64], e: &ExponentData) -> (f64, f64) {
    let mut mass = 1.0;
    let mut map = 1.0;
    for ((&w, &a), &b) in widths.iter().zip(e.a()).zip(e.b()) {
        mass *= w.powf(b + 1.0);
        map *= w.powf(a);
    }
    (mass, map)
}

/// Density values on a q-grid with the evaluation path of each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub paths: Vec<EvalPath>,
}

impl DensityProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, paths: Vec<EvalPath>) -> Result<Self> {
        if grid.len() != values.len() || grid.len() != paths.len() {
            return Err(Error::domain("profile columns differ in length"));
        }
        check_grid(&grid)?;
        Ok(DensityProfile {
            grid,
            values,
            paths,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// CSV with header `q,density,path`; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,density,path\n");
        for ((q, v), p) in self.grid.iter().zip(&self.values).zip(&self.paths) {
            out.push_str(&format!("{q},{v},{p}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "q,density,path" => {}
            _ => {
                return Err(Error::Parse {
                    location: "line 1".into(),
                    message: "expected header `q,density,path`".into(),
                })
            }
        }
        let (mut grid, mut values, mut paths) = (vec![], vec![], vec![]);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                location: format!("line {}", i + 1),
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            }
            grid.push(
                fields[0]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("q: {e}")))?,
            );
            values.push(
                fields[1]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("density: {e}")))?,
            );
            paths.push(
                fields[2]
                    .parse::<EvalPath>()
                    .map_err(|e| bad(e.to_string()))?,
            );
        }
        DensityProfile::new(grid, values, paths)
    }

    /// `{"grid": [...], "values": [...], "paths": [...]}`; infinite values
    /// are written as the string `"inf"`.
    pub fn to_json(&self) -> String {
        let values: Vec<serde_json::Value> = self
            .values
            .iter()
            .map(|&v| {
                if v.is_finite() {
                    serde_json::json!(v)
                } else {
                    serde_json::json!(v.to_string())
                }
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "grid": self.grid,
            "values": values,
            "paths": self.paths,
        }))
        .expect("profile serializes")
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|q| !q.is_finite()) {
        return Err(Error::domain("grid values must be finite"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

// A merged symmetric piece ready for evaluation.
struct Piece {
    coeff: f64,
    widths: Vec<f64>,
    orientation: Orientation,
    exponents: usize,
}

struct Decomposition {
    pieces: Vec<Piece>,
    exponents: Vec<(ExponentData, Spectrum)>,
}

fn decompose(atoms: &AtomSet) -> Result<Decomposition> {
    atoms.shared_a()?;
    let mut exponents: Vec<(ExponentData, Spectrum)> = Vec::new();
    // Key: (exponent index, orientation, width bit patterns).
    let mut merged: BTreeMap<(usize, Orientation, Vec<u64>), f64> = BTreeMap::new();
    for atom in atoms.atoms() {
        if atom.coeff == 0.0 {
            continue;
        }
        let idx = match exponents.iter().position(|(e, _)| *e == atom.exponents) {
            Some(i) => i,
            None => {
                let spec = Spectrum::from_exponents(&atom.exponents)?;
                exponents.push((atom.exponents.clone(), spec));
                exponents.len() - 1
            }
        };
        for region in atom.region.split_at_origin() {
            let piece = BoxAtom {
                coeff: atom.coeff,
                region,
                exponents: atom.exponents.clone(),
            };
            for r in reflect_decompose(&piece)? {
                let widths = r
                    .atom
                    .region
                    .half_widths()
                    .expect("symmetric by construction");
                let key = (
                    idx,
                    r.orientation,
                    widths.iter().map(|w| w.to_bits()).collect(),
                );
                *merged.entry(key).or_insert(0.0) += r.atom.coeff;
            }
        }
    }
    let pieces = merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((exponents, orientation, bits), coeff)| Piece {
            coeff,
            widths: bits.into_iter().map(f64::from_bits).collect(),
            orientation,
            exponents,
        })
        .collect();
    Ok(Decomposition { pieces, exponents })
}

impl Decomposition {
    fn density(&self, q: f64) -> Result<Evaluated> {
        let mut sum = Dd::ZERO;
        let mut path: Option<EvalPath> = None;
        for p in &self.pieces {
            let (e, spec) = &self.exponents[p.exponents];
            let reflected = ReflectedAtom {
                atom: BoxAtom {
                    coeff: p.coeff,
                    region: AxisBox {
                        intervals: p.widths.iter().map(|&w| (-w, w)).collect(),
                    },
                    exponents: e.clone(),
                },
                orientation: p.orientation,
            };
            let mask = reflected.mask(q);
            if mask == 0.0 {
                continue;
            }
            let r = scaled_density_with(&reflected.atom, spec, q)?;
            if r.path != EvalPath::Outside {
                path = Some(path.map_or(r.path, |old| old.max(r.path)));
            }
            sum = sum + Dd::from_f64(mask * r.value);
        }
        Ok(Evaluated {
            value: sum.to_f64(),
            path: path.unwrap_or(EvalPath::Outside),
        })
    }

    // Mass of the pushed-forward measure in (q1, q2).
    fn interval_mass(&self, q1: f64, q2: f64) -> Result<f64> {
        let mut sum = Dd::ZERO;
        for p in &self.pieces {
            let (e, spec) = &self.exponents[p.exponents];
            let (mass_scale, map_scale) = scales(&p.widths, e);
            let (u1, u2) = (q1 / map_scale, q2 / map_scale);
            let n = e.dim() as i32;
            let total = e.unit_cube_mass();
            let positive = unit_mass(spec, total, u1.max(0.0), u2.max(0.0))?;
            let negative = unit_mass(spec, total, (-u2).max(0.0), (-u1).max(0.0))?;
            let unit = match (Parity::of(e.a()), p.orientation) {
                (Parity::SomeOdd, Orientation::Both) => 2f64.powi(n - 1) * (positive + negative),
                (Parity::SomeOdd, Orientation::Positive) => 2f64.powi(n) * positive,
                (Parity::SomeOdd, Orientation::Negative) => 2f64.powi(n) * negative,
                _ => 2f64.powi(n) * positive,
            };
            sum = sum + Dd::from_f64(p.coeff * mass_scale * unit);
        }
        Ok(sum.to_f64())
    }
}

// Mass of the unit-cube pushforward in (u1, u2), 0 <= u1 <= u2.
fn unit_mass(spec: &Spectrum, total: f64, u1: f64, u2: f64) -> Result<f64> {
    let upper = |u: f64| -> Result<f64> {
        if u <= 0.0 {
            Ok(total)
        } else if u >= 1.0 {
            Ok(0.0)
        } else {
            Ok(spec.volume(u)?.value)
        }
    };
    if u2 <= u1 {
        return Ok(0.0);
    }
    Ok(upper(u1)? - upper(u2)?)
}

/// Sum the densities of all atoms at each grid point.
///
/// Grid points are evaluated in parallel; every point is summed in the same
/// order, so the profile does not depend on the thread count.
pub fn assemble_density(atoms: &AtomSet, grid: &[f64]) -> Result<DensityProfile> {
    check_grid(grid)?;
    let dec = decompose(atoms)?;
    let evaluated: Vec<Evaluated> = grid
        .par_iter()
        .map(|&q| dec.density(q))
        .collect::<Result<_>>()?;
    DensityProfile::new(
        grid.to_vec(),
        evaluated.iter().map(|e| e.value).collect(),
        evaluated.iter().map(|e| e.path).collect(),
    )
}

/// Exact bin averages `mass(bin)/width` of the pushforward, placed at the bin
/// midpoints. `edges` must be strictly increasing.
pub fn assemble_bin_averages(atoms: &AtomSet, edges: &[f64]) -> Result<DensityProfile> {
    check_grid(edges)?;
    if edges.len() < 2 {
        return Err(Error::domain("need at least two bin edges"));
    }
    let dec = decompose(atoms)?;
    let rows: Vec<(f64, f64, EvalPath)> = edges
        .par_windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let mass = dec.interval_mass(w[0], w[1])?;
            let path = dec.density(mid)?.path;
            Ok((mid, mass / (w[1] - w[0]), path))
        })
        .collect::<Result<_>>()?;
    DensityProfile::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
    )
}

/// Integrate out axes on which the map is constant (`a_i = 0`).
pub fn marginalize(atom: &BoxAtom, drop: &[usize]) -> Result<BoxAtom> {
    let n = atom.region.dim();
    let mut dropped = vec![false; n];
    for &i in drop {
        if i >= n {
            return Err(Error::domain(format!(
                "axis {i} out of range for dimension {n}"
            )));
        }
        if dropped[i] {
            return Err(Error::domain(format!("axis {i} listed twice")));
        }
        if atom.exponents.a()[i] != 0.0 {
            return Err(Error::domain(format!(
                "axis {i} has a_i = {} > 0; the map is not constant along it",
                atom.exponents.a()[i]
            )));
        }
        dropped[i] = true;
    }
    if drop.is_empty() || drop.len() == n {
        return Err(Error::domain(
            "drop must be a nonempty proper subset of the axes",
        ));
    }
    let mut coeff = atom.coeff;
    let (mut intervals, mut a, mut b) = (vec![], vec![], vec![]);
    for (i, &(lo, hi)) in atom.region.intervals().iter().enumerate() {
        let bi = atom.exponents.b()[i];
        if dropped[i] {
            coeff *= abs_power_integral(lo, hi, bi);
        } else {
            intervals.push((lo, hi));
            a.push(atom.exponents.a()[i]);
            b.push(bi);
        }
    }
    BoxAtom::new(coeff, AxisBox::new(intervals)?, ExponentData::new(a, b)?)
}
