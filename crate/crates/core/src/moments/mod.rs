//! Exact biases and MSEs as Poisson mixtures over central chi-square laws,
//! with certified truncation, plus numerical checks of the domination results.

mod bias;
mod mse;
pub mod poisson;
pub mod quadrature;
mod verify;

pub use bias::{
    bias_br_exact, bias_ls_exact, e1, e2, inverse_moment, inverse_product, moment_identities, mse_ls_exact,
    MomentIdentities,
};
pub use mse::{
    bias_phi_exact, bias_psi_exact, conditional_integrals_closed_form, conditional_integrals_quadrature,
    control_excess, control_integral, mse_phi_exact, mse_psi_exact, ConditionalIntegrals,
};
pub use poisson::{hudson_sides, poisson_expectation, poisson_series, SeriesControl, SeriesValue};
pub use quadrature::QuadratureControl;
pub use verify::{
    bias_theorem1_verify, known_variance_moments, verify_domination, BiasEnvelopeReport, DominationReport,
    KnownVarianceReport,
};

use crate::error::MomentError;

/// `(p, m, λ)` indexing the mixture laws, with `λ = ‖ξ‖²/(2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub p: u32,
    pub m: u32,
    pub lambda: f64,
}

impl MixtureParams {
    pub fn new(p: u32, m: u32, lambda: f64) -> Result<Self, MomentError> {
        poisson::check_lambda(lambda)?;
        if p == 0 {
            return Err(MomentError::InvalidParameter { what: "p", requirement: ">= 1", value: 0.0 });
        }
        Ok(Self { p, m, lambda })
    }

    /// `λ = p·c²/(2σ²)` for `ξ` filled with the constant `c`.
    pub fn from_constant_xi(p: u32, m: u32, xi: f64, sigma2: f64) -> Result<Self, MomentError> {
        Self::new(p, m, p as f64 * xi * xi / (2.0 * sigma2))
    }
}

fn check_variances(tau2: f64, sigma2: f64) -> Result<(), MomentError> {
    for (what, v) in [("tau2", tau2), ("sigma2", sigma2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MomentError::InvalidParameter { what, requirement: "positive", value: v });
        }
    }
    Ok(())
}
