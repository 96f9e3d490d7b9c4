//! Monte Carlo histograms of pushforward densities.
//!
//! Samples are drawn in fixed-size chunks. Chunk `j` of the whole run uses
//! a ChaCha8 generator seeded with `seed` on stream `j`, so the estimate
//! depends only on `(seed, samples, bins, range, spacing)` and never on the
//! number of worker threads. Per-chunk bin sums are reduced in chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxes::{AtomSet, AxisBox};
use crate::error::{Error, Result};
use crate::monomial::ExponentData;

/// Samples drawn per generator stream.
pub const CHUNK_SAMPLES: u64 = 1 << 16;
pub const MIN_SAMPLES: u64 = 10_000;
pub const MIN_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Spacing {
    Linear,
    /// Geometric edges; needs a positive lower end.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramConfig {
    pub samples: u64,
    pub seed: u64,
    pub bins: usize,
    /// Histogram range; defaults to the image of the atoms' boxes.
    pub range: Option<(f64, f64)>,
    pub spacing: Spacing,
}

impl HistogramConfig {
    pub fn new(samples: u64, seed: u64, bins: usize) -> Self {
        HistogramConfig {
            samples,
            seed,
            bins,
            range: None,
            spacing: Spacing::Linear,
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = Some((lo, hi));
        self
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }
}

/// Binned density estimate with per-bin standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramEstimate {
    pub bin_edges: Vec<f64>,
    pub bin_density: Vec<f64>,
    pub bin_stderr: Vec<f64>,
    /// Number of samples that landed in each bin.
    pub bin_hits: Vec<u64>,
    /// Samples actually drawn.
    pub samples: u64,
    pub seed: u64,
    /// Estimated total mass, including mass outside the binned range.
    pub sampled_mass: f64,
    pub sampled_mass_stderr: f64,
}

impl HistogramEstimate {
    pub fn bins(&self) -> usize {
        self.bin_density.len()
    }

    pub fn bin_width(&self, i: usize) -> f64 {
        self.bin_edges[i + 1] - self.bin_edges[i]
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// `Σ density · width` with its standard error.
    pub fn binned_mass(&self) -> (f64, f64) {
        let mut mass = 0.0;
        let mut var = 0.0;
        for i in 0..self.bins() {
            let w = self.bin_width(i);
            mass += self.bin_density[i] * w;
            var += (self.bin_stderr[i] * w).powi(2);
        }
        (mass, var.sqrt())
    }

    pub fn median_stderr(&self) -> f64 {
        let mut s = self.bin_stderr.clone();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    }

    /// CSV with header `q_lo,q_hi,density,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q_lo,q_hi,density,stderr\n");
        for i in 0..self.bins() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.bin_density[i],
                self.bin_stderr[i]
            ));
        }
        out
    }
}

// One weighted stratum: coeff · weight(x) · |x^B| on `region`, mapped by x^A.
struct Stratum<'a> {
    coeff: f64,
    region: &'a AxisBox,
    exponents: &'a ExponentData,
}

struct Binning {
    edges: Vec<f64>,
    lo: f64,
    hi: f64,
    spacing: Spacing,
}

impl Binning {
    fn new(lo: f64, hi: f64, bins: usize, spacing: Spacing) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(format!(
                "invalid histogram range [{lo}, {hi}]"
            )));
        }
        let edges: Vec<f64> = match spacing {
            Spacing::Linear => (0..=bins)
                .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
                .collect(),
            Spacing::Log => {
                if lo <= 0.0 {
                    return Err(Error::domain("log spacing needs a positive lower end"));
                }
                let (l, h) = (lo.ln(), hi.ln());
                (0..=bins)
                    .map(|i| (l + (h - l) * i as f64 / bins as f64).exp())
                    .collect()
            }
        };
        let mut edges = edges;
        edges[0] = lo;
        edges[bins] = hi;
        Ok(Binning {
            edges,
            lo,
            hi,
            spacing,
        })
    }

    fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn index(&self, v: f64) -> Option<usize> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let n = self.bins();
        let t = match self.spacing {
            Spacing::Linear => (v - self.lo) / (self.hi - self.lo),
            Spacing::Log => (v / self.lo).ln() / (self.hi / self.lo).ln(),
        };
        let mut i = ((t * n as f64) as usize).min(n - 1);
        // Settle rounding at the edges.
        while i > 0 && v < self.edges[i] {
            i -= 1;
        }
        while i + 1 < n && v >= self.edges[i + 1] {
            i += 1;
        }
        Some(i)
    }
}

// Per-chunk sums of g and g² per bin, plus the totals in the last slot.
struct ChunkSums {
    stratum: usize,
    count: u64,
    s1: Vec<f64>,
    s2: Vec<f64>,
    hits: Vec<u64>,
}

/// Histogram of the pushforward of a signed atom sum.
///
/// Defaults: linear bins over the image of the boxes.
pub fn mc_histogram(
    atoms: &AtomSet,
    samples: u64,
    seed: u64,
    bins: usize,
) -> Result<HistogramEstimate> {
    mc_histogram_with(atoms, &HistogramConfig::new(samples, seed, bins))
}

pub fn mc_histogram_with(atoms: &AtomSet, config: &HistogramConfig) -> Result<HistogramEstimate> {
    if atoms.is_empty() {
        return Err(Error::domain("atom set is empty"));
    }
    let strata: Vec<Stratum> = atoms
        .atoms()
        .iter()
        .map(|a| Stratum {
            coeff: a.coeff,
            region: &a.region,
            exponents: &a.exponents,
        })
        .collect();
    run(&strata, |_| 1.0, config)
}

/// Histogram of the pushforward of `weight(x) · |x^B| dx` on `region`.
pub fn mc_histogram_weighted<F>(
    region: &AxisBox,
    exponents: &ExponentData,
    weight: F,
    config: &HistogramConfig,
) -> Result<HistogramEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if region.dim() != exponents.dim() {
        return Err(Error::domain("box and exponents differ in dimension"));
    }
    let strata = [Stratum {
        coeff: 1.0,
        region,
        exponents,
    }];
    run(&strata, weight, config)
}

/// Smallest interval containing `x^A` over every box.
pub fn image_range<'a, I>(boxes: I) -> (f64, f64)
where
    I: IntoIterator<Item = (&'a AxisBox, &'a ExponentData)>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (region, e) in boxes {
        for piece in region.split_at_origin() {
            let n = piece.dim();
            for corner in 0..(1usize << n) {
                let x: Vec<f64> = (0..n)
                    .map(|i| {
                        let (l, h) = piece.intervals()[i];
                        if corner >> i & 1 == 1 {
                            h
                        } else {
                            l
                        }
                    })
                    .collect();
                let v = map_value(&x, e.a());
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

fn map_value(x: &[f64], a: &[f64]) -> f64 {
    x.iter().zip(a).map(|(&xi, &ai)| power(xi, ai)).product()
}

fn abs_weight(x: &[f64], b: &[f64]) -> f64 {
    x.iter()
        .zip(b)
        .map(|(&xi, &bi)| power(xi.abs(), bi))
        .product()
}

// x^p for integer p, |x|^p otherwise.
fn power(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
        x.powi(p as i32)
    } else {
        x.abs().powf(p)
    }
}

fn run<F>(strata: &[Stratum], weight: F, config: &HistogramConfig) -> Result<HistogramEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if config.samples < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "samples = {} below the minimum {MIN_SAMPLES}",
            config.samples
        )));
    }
    if config.bins < MIN_BINS {
        return Err(Error::domain(format!(
            "bins = {} below the minimum {MIN_BINS}",
            config.bins
        )));
    }
    let (lo, hi) = match config.range {
        Some(r) => r,
        None => {
            let (lo, hi) = image_range(strata.iter().map(|s| (s.region, s.exponents)));
            match config.spacing {
                Spacing::Log if lo <= 0.0 => (hi * 1e-6, hi),
                _ => (lo, hi),
            }
        }
    };
    let binning = Binning::new(lo, hi, config.bins, config.spacing)?;
    let bins = binning.bins();

    // Allocate samples in proportion to |coeff| · volume.
    let scores: Vec<f64> = strata
        .iter()
        .map(|s| s.coeff.abs() * s.region.volume())
        .collect();
    let total_score: f64 = scores.iter().sum();
    if total_score == 0.0 {
        return Err(Error::domain("all atoms have zero coefficient"));
    }
    let counts: Vec<u64> = scores
        .iter()
        .map(|&w| {
            if w == 0.0 {
                0
            } else {
                ((config.samples as f64 * w / total_score).round() as u64).max(2)
            }
        })
        .collect();

    let mut tasks: Vec<(usize, u64)> = Vec::new();
    for (i, &count) in counts.iter().enumerate() {
        let mut left = count;
        while left > 0 {
            let take = left.min(CHUNK_SAMPLES);
            tasks.push((i, take));
            left -= take;
        }
    }

    let chunks: Vec<ChunkSums> = tasks
        .par_iter()
        .enumerate()
        .map(|(stream, &(stratum, count))| {
            let s = &strata[stratum];
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream as u64);
            let mut s1 = vec![0.0; bins + 1];
            let mut s2 = vec![0.0; bins + 1];
            let mut hits = vec![0u64; bins];
            let intervals = s.region.intervals();
            let mut x = vec![0.0; intervals.len()];
            for _ in 0..count {
                for (xi, &(l, h)) in x.iter_mut().zip(intervals) {
                    *xi = l + (h - l) * rng.random::<f64>();
                }
                let g = weight(&x) * abs_weight(&x, s.exponents.b());
                s1[bins] += g;
                s2[bins] += g * g;
                if let Some(k) = binning.index(map_value(&x, s.exponents.a())) {
                    s1[k] += g;
                    s2[k] += g * g;
                    hits[k] += 1;
                }
            }
            ChunkSums {
                stratum,
                count,
                s1,
                s2,
                hits,
            }
        })
        .collect();

    // Sequential reduction: chunks of a stratum are contiguous.
    let mut mass = vec![0.0; bins + 1];
    let mut var = vec![0.0; bins + 1];
    let mut bin_hits = vec![0u64; bins];
    let mut k = 0;
    while k < chunks.len() {
        let stratum = chunks[k].stratum;
        let mut n = 0u64;
        let mut s1 = vec![0.0; bins + 1];
        let mut s2 = vec![0.0; bins + 1];
        while k < chunks.len() && chunks[k].stratum == stratum {
            n += chunks[k].count;
            for j in 0..=bins {
                s1[j] += chunks[k].s1[j];
                s2[j] += chunks[k].s2[j];
            }
            for (total, h) in bin_hits.iter_mut().zip(&chunks[k].hits) {
                *total += h;
            }
            k += 1;
        }
        let s = &strata[stratum];
        let scale = s.coeff * s.region.volume();
        let nf = n as f64;
        for j in 0..=bins {
            let mean = s1[j] / nf;
            let sample_var = ((s2[j] - s1[j] * mean) / (nf - 1.0)).max(0.0);
            mass[j] += scale * mean;
            var[j] += scale * scale * sample_var / nf;
        }
    }

    let bin_edges = binning.edges;
    let widths: Vec<f64> = bin_edges.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(HistogramEstimate {
        bin_density: (0..bins).map(|j| mass[j] / widths[j]).collect(),
        bin_stderr: (0..bins).map(|j| var[j].sqrt() / widths[j]).collect(),
        bin_hits,
        bin_edges,
        samples: counts.iter().sum(),
        seed: config.seed,
        sampled_mass: mass[bins],
        sampled_mass_stderr: var[bins].sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::BoxAtom;

    fn unit(a: &[u32], b: &[u32]) -> AtomSet {
        AtomSet::single(BoxAtom::unit_cube(
            ExponentData::from_integers(a, b).unwrap(),
        ))
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mc_histogram(&AtomSet::default(), 100_000, 1, 16).is_err());
        assert!(mc_histogram(&unit(&[1], &[0]), 100, 1, 16).is_err());
        assert!(mc_histogram(&unit(&[1], &[0]), 100_000, 1, 4).is_err());
        let cfg = HistogramConfig::new(100_000, 1, 16)
            .with_range(0.0, 1.0)
            .with_spacing(Spacing::Log);
        assert!(mc_histogram_with(&unit(&[1], &[0]), &cfg).is_err());
    }

    #[test]
    fn uniform_density_is_flat() {
        let h = mc_histogram(&unit(&[1], &[0]), 1_000_000, 3, 20).unwrap();
        assert_eq!(h.bin_edges[0], 0.0);
        assert_eq!(h.bin_edges[20], 1.0);
        for i in 0..h.bins() {
            assert!(
                (h.bin_density[i] - 1.0).abs() <= 4.0 * h.bin_stderr[i],
                "bin {i}"
            );
        }
    }

    #[test]
    fn binning_respects_edges() {
        let b = Binning::new(1e-3, 1.0, 12, Spacing::Log).unwrap();
        for (i, &e) in b.edges[..12].iter().enumerate() {
            assert_eq!(b.index(e), Some(i));
        }
        assert_eq!(b.index(1.0), Some(11));
        assert_eq!(b.index(1e-4), None);
        assert_eq!(b.index(f64::NAN), None);
    }

    #[test]
    fn image_range_of_signed_boxes() {
        let e = ExponentData::from_integers(&[1, 2], &[0, 0]).unwrap();
        let r = AxisBox::new(vec![(-0.5, 0.25), (-1.0, 0.5)]).unwrap();
        assert_eq!(image_range([(&r, &e)]), (-0.5, 0.25));
        let e = ExponentData::from_integers(&[2, 2], &[0, 0]).unwrap();
        assert_eq!(image_range([(&r, &e)]), (0.0, 0.25));
    }

    #[test]
    fn deterministic_in_seed() {
        let atoms = unit(&[1, 1], &[0, 1]);
        let a = mc_histogram(&atoms, 200_000, 11, 16).unwrap();
        let b = mc_histogram(&atoms, 200_000, 11, 16).unwrap();
        let c = mc_histogram(&atoms, 200_000, 12, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn weighted_sampler_matches_atom_sampler_for_constant_weight() {
        let e = ExponentData::from_integers(&[1, 1], &[0, 1]).unwrap();
        let cfg = HistogramConfig::new(100_000, 5, 16);
        let a = mc_histogram_with(&AtomSet::single(BoxAtom::unit_cube(e.clone())), &cfg).unwrap();
        let b = mc_histogram_weighted(&AxisBox::unit_cube(2), &e, |_| 1.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_header() {
        let h = mc_histogram(&unit(&[1], &[0]), 10_000, 1, 10).unwrap();
        let csv = h.to_csv();
        assert!(csv.starts_with("q_lo,q_hi,density,stderr\n0,0.1,"));
        assert_eq!(csv.lines().count(), 11);
    }
}
