//! Quantum-inequality bounds on squeezed-light variance for time-sampling
//! windows, an OPA/balanced-homodyne squeezing model, and a meta-analysis
//! pipeline that classifies measured squeezing against the bounds.

pub mod bound;
pub mod constants;
pub mod db;
pub mod error;
pub mod meta;
pub mod opa;
pub mod quadrature;
pub mod windows;

pub use bound::{
    casimir_density, closed_form_gaussian, closed_form_lorentzian_sq, curve_value, ford_bound, numeric_bound,
    BoundOptions, BoundValue, BracketForm, Evaluation, PhaseArgument, QiCurve, SpectralFunction, SpectralShape,
    Variant,
};
pub use error::{QiError, Result};
pub use quadrature::QuadratureConfig;
pub use windows::{SamplingWindow, SpectrumMethod, SqrtWindowSpectrum, WindowKind};
pub use meta::{classify, fit_scale, read_dataset, AnalysisReport, SqueezingRecord};
