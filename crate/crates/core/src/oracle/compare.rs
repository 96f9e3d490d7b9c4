//! Bin-by-bin z-scores between a closed-form profile and a histogram.

use serde::Serialize;

use crate::boxes::DensityProfile;
use crate::error::{Error, Result};
use crate::oracle::mc::HistogramEstimate;

pub const Z_THRESHOLD: f64 = 5.0;
pub const PASS_FRACTION: f64 = 0.95;
/// Bins with fewer hits have no usable standard error and are not scored.
pub const MIN_BIN_HITS: u64 = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinComparison {
    pub q_lo: f64,
    pub q_hi: f64,
    pub expected: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
    pub hits: u64,
    /// Whether the bin has enough hits to be scored.
    pub scored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub bins: Vec<BinComparison>,
    /// Fraction of scored bins with `|z| <= Z_THRESHOLD`.
    pub pass_fraction: f64,
    pub max_abs_z: f64,
    pub passed: bool,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q_lo,q_hi,expected,estimate,stderr,z,hits,scored\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                b.q_lo, b.q_hi, b.expected, b.estimate, b.stderr, b.z, b.hits, b.scored
            ));
        }
        out
    }
}

/// Compare every histogram bin that contains profile points; the expected
/// value of a bin is the mean of the profile values inside `[q_lo, q_hi)`.
pub fn compare(profile: &DensityProfile, est: &HistogramEstimate) -> Result<CompareReport> {
    let mut bins = Vec::new();
    for i in 0..est.bins() {
        let (lo, hi) = (est.bin_edges[i], est.bin_edges[i + 1]);
        let inside: Vec<f64> = profile
            .grid
            .iter()
            .zip(&profile.values)
            .filter(|(&q, _)| q >= lo && q < hi)
            .map(|(_, &v)| v)
            .collect();
        if inside.is_empty() {
            continue;
        }
        let expected = inside.iter().sum::<f64>() / inside.len() as f64;
        let estimate = est.bin_density[i];
        let stderr = est.bin_stderr[i];
        let diff = expected - estimate;
        let z = if diff == 0.0 {
            0.0
        } else if stderr > 0.0 {
            diff / stderr
        } else {
            diff.signum() * f64::INFINITY
        };
        bins.push(BinComparison {
            q_lo: lo,
            q_hi: hi,
            expected,
            estimate,
            stderr,
            z,
            hits: est.bin_hits[i],
            scored: est.bin_hits[i] >= MIN_BIN_HITS,
        });
    }
    if bins.is_empty() {
        return Err(Error::domain(
            "profile grid and histogram range do not overlap",
        ));
    }
    let scored: Vec<&BinComparison> = bins.iter().filter(|b| b.scored).collect();
    if scored.is_empty() {
        return Err(Error::domain(format!(
            "no overlapping bin has {MIN_BIN_HITS} or more samples"
        )));
    }
    let pass = scored.iter().filter(|b| b.z.abs() <= Z_THRESHOLD).count();
    let pass_fraction = pass as f64 / scored.len() as f64;
    let max_abs_z = scored.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
    Ok(CompareReport {
        bins,
        pass_fraction,
        max_abs_z,
        passed: pass_fraction >= PASS_FRACTION,
    })
}
