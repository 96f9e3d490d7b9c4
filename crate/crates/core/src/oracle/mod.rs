//! Estimates that never touch the closed forms: Monte Carlo histograms,
//! quadrature, and the comparison between the two worlds.

pub mod compare;
pub mod mc;
pub mod quadrature;

pub use compare::{
    compare, BinComparison, CompareReport, MIN_BIN_HITS, PASS_FRACTION, Z_THRESHOLD,
};
pub use mc::{
    image_range, mc_histogram, mc_histogram_weighted, mc_histogram_with, HistogramConfig,
    HistogramEstimate, Spacing,
};
pub use quadrature::{
    fiber_density, gauss_legendre, integrate, quadrature_volume, QuadratureEstimate,
};
