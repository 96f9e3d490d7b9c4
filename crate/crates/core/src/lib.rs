//! Exact densities of pushforwards of monomial measures `f·|x^B| dx` under
//! monomial maps `x ↦ x^A`, continuity classification at the critical value
//! zero, and independent oracles for validating every closed form.

mod ddouble;
pub mod error;
pub mod symfun;

pub use error::{Error, Result};
pub mod boxes;
pub mod monomial;
pub mod oracle;

pub use boxes::{
    approximate_by_boxes, assemble_bin_averages, assemble_density, kbox, marginalize,
    reflect_decompose, scaled_density, AtomSet, AxisBox, BoxAtom, DensityProfile, Orientation,
};
pub use monomial::{
    classify, density_signed_cube, density_unit_cube, derive_spectrum, limit_at_zero, volume,
    ContinuityVerdict, EvalPath, ExponentData, FrsCase, Parity, Spectrum,
};
