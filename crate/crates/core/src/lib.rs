//! Ridge networks `x ↦ Σ ω_j Ψ(f_j(x) + b_j)` whose inner maps are continuous
//! linear functionals on concrete vector spaces, together with the pieces
//! needed to check their density on compact sets numerically: squashing
//! functions, the polynomial algebra generated by functionals, atomic signed
//! measures with pushforwards and discriminators, and fitting/sweep drivers.
//!
//! Three space kinds are supported: Euclidean `ℝⁿ`, truncated weighted
//! sequences (a surrogate for `ℓ²`), and functions on `[0, 1]` sampled on a
//! uniform grid (a surrogate for `C([0,1])`).

pub mod activation;
pub mod algebra;
pub mod approx;
mod error;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod network;
pub mod spaces;

pub use activation::{validate_squashing, ScanConfig, SquashingFn, ValidationReport};
pub use algebra::{fit_polynomial_baseline, AlgebraElement, BaselineFit, Term};
pub use approx::{
    density_curve, fit_greedy, fit_random_features, lp_error, lp_uniform_inequality_check,
    uniform_error, DensityConfig, FitReport, Fitter, RadonSample, Target, TargetExpr,
};
pub use error::{Error, Result};
pub use measure::{
    annihilation_residual, change_of_variables_check, discriminate, pushforward, truncate,
    AnnihilationConfig, Atom, AtomicSignedMeasure, DiscriminatorSearch, PushforwardMeasure,
    Witness,
};
pub use model::Model;
pub use network::{Network, RidgeUnit};
pub use spaces::{
    sample_functionals, separation_witness, CompactSet, Functional, FunctionalSpec, GridRule,
    ParamMap, ScalarExpr, SpaceInstance, SpaceKind, SpacePoint,
};

/// Anything that maps a point of a space to a real number.
pub trait Evaluate {
    fn evaluate(&self, x: &SpacePoint) -> Result<f64>;
}

impl<F> Evaluate for F
where
    F: Fn(&SpacePoint) -> Result<f64>,
{
    fn evaluate(&self, x: &SpacePoint) -> Result<f64> {
        self(x)
    }
}
