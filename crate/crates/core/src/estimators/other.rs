//! Maximum likelihood, inverse regression, posterior-mean and known-variance
//! estimators.

use super::phi::{falling_products, ls};
use crate::canonical::SufficientStats;
use crate::error::EstimatorError;

/// ML slope under `τ² = σ_x²`.
///
/// Evaluated in a form that avoids cancelling the two terms of the numerator:
/// with `d = ‖Z‖² − r‖U‖²` and `ρ = √(d² + 4r(UᵗZ)²)`, the slope is
/// `(d + ρ)/(2UᵗZ)` when `d ≥ 0` and `2rUᵗZ/(ρ − d)` otherwise.
pub fn ml(st: &SufficientStats) -> Result<f64, EstimatorError> {
    let t = st.t_uz;
    if t == 0.0 {
        return Err(EstimatorError::Singular { estimator: "ML".into(), reason: "UᵗZ = 0" });
    }
    let r = st.r as f64;
    let d = st.z_sq - r * st.u_sq;
    let root = d.hypot(2.0 * r.sqrt() * t);
    if d >= 0.0 {
        Ok((d + root) / (2.0 * t))
    } else {
        Ok(2.0 * r * t / (root - d))
    }
}

/// Inverse regression `‖Z‖²/UᵗZ`.
pub fn ir(st: &SufficientStats) -> Result<f64, EstimatorError> {
    if st.t_uz == 0.0 {
        return Err(EstimatorError::Singular { estimator: "IR".into(), reason: "UᵗZ = 0" });
    }
    Ok(st.z_sq / st.t_uz)
}

/// Prior constants of the posterior-mean estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesHyperparams {
    pub c1: f64,
    pub c2: f64,
}

impl Default for BayesHyperparams {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0 }
    }
}

impl BayesHyperparams {
    pub fn new(c1: f64, c2: f64) -> Result<Self, EstimatorError> {
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(c.is_finite() && c > 0.0) {
                return Err(EstimatorError::Hyperparameter(format!("{name} must be positive and finite, got {c}")));
            }
        }
        Ok(Self { c1, c2 })
    }

    fn total(&self) -> f64 {
        1.0 + self.c1 + self.c2
    }

    pub fn d1(&self) -> f64 {
        self.c1 / self.total()
    }

    pub fn d2(&self) -> f64 {
        (self.c1 + self.c2) / self.total()
    }

    pub fn d1_star(&self) -> f64 {
        (1.0 + self.c2) / self.total()
    }

    pub fn d2_star(&self) -> f64 {
        1.0 / self.total()
    }
}

/// Posterior-mean slope `(UᵗZ + d₁U₀Z₀)/(‖U‖² + S + d₂U₀²)`.
pub fn bayes_pb(st: &SufficientStats, h: &BayesHyperparams) -> f64 {
    (st.t_uz + h.d1() * st.u0 * st.z0) / (st.u_sq + st.s + h.d2() * st.u0 * st.u0)
}

/// Posterior-mean intercept `d₁*Z₀ − d₂*·PB·U₀`.
pub fn bayes_pm_intercept(st: &SufficientStats, h: &BayesHyperparams) -> f64 {
    h.d1_star() * st.z0 - h.d2_star() * bayes_pb(st, h) * st.u0
}

/// Canonical intercept `Z₀ − slope·U₀`.
pub fn intercept_of(st: &SufficientStats, slope: f64) -> f64 {
    st.z0 - slope * st.u0
}

/// Rescales statistics to units where `σ² = 1`; `S` is left untouched since the
/// known-variance estimators ignore it.
pub fn standardize(st: &SufficientStats, sigma2: f64) -> Result<SufficientStats, EstimatorError> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(EstimatorError::Hyperparameter(format!("known variance must be positive, got {sigma2}")));
    }
    let sd = sigma2.sqrt();
    Ok(SufficientStats {
        t_uz: st.t_uz / sigma2,
        u_sq: st.u_sq / sigma2,
        z_sq: st.z_sq / sigma2,
        u0: st.u0 / sd,
        z0: st.z0 / sd,
        ..*st
    })
}

/// Known-variance BR: `{1 + Σ_{j≤ell} a_j/‖U‖^{2j}}·LS`, with statistics in
/// units where `σ² = 1`.
pub fn br_known_variance(st: &SufficientStats, ell: u32) -> f64 {
    let w = st.u_sq;
    let mut factor = 1.0;
    let mut power = 1.0;
    for a in falling_products(st.p, ell) {
        power /= w;
        factor += a * power;
    }
    factor * ls(st)
}

/// `ψ₀(w) = max[0, min{ψ̄(w), 2w − ψ̄(w)}]` at `w = ‖U‖²`.
pub fn psi0_known_variance_factor(w: f64, psi_bar: &dyn Fn(f64) -> f64) -> f64 {
    let bar = psi_bar(w);
    0f64.max(bar.min(2.0 * w - bar))
}

/// `ψ₀(‖U‖²)·LS`, with statistics in units where `σ² = 1`.
pub fn psi0_known_variance(st: &SufficientStats, psi_bar: &dyn Fn(f64) -> f64) -> f64 {
    psi0_known_variance_factor(st.u_sq, psi_bar) * ls(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(t_uz: f64, u_sq: f64, z_sq: f64, u0: f64, z0: f64, s: f64, r: u32) -> SufficientStats {
        SufficientStats::new(t_uz, u_sq, z_sq, u0, z0, s, 10, 11, r).unwrap()
    }

    fn ml_textbook(st: &SufficientStats) -> f64 {
        let r = st.r as f64;
        let d = st.z_sq - r * st.u_sq;
        (d + (d * d + 4.0 * r * st.t_uz * st.t_uz).sqrt()) / (2.0 * st.t_uz)
    }

    #[test]
    fn ml_exact_fit() {
        let st = stats(3.0, 3.0, 3.0, 0.0, 0.0, 1.0, 1);
        assert!((ml(&st).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ml_matches_textbook_form() {
        for (t, u, z, r) in [(2.0, 3.0, 5.0, 2), (-2.0, 3.0, 5.0, 2), (0.5, 10.0, 1.0, 3), (-4.0, 2.0, 9.0, 1)] {
            let st = stats(t, u, z, 0.0, 0.0, 1.0, r);
            let want = ml_textbook(&st);
            assert!((ml(&st).unwrap() - want).abs() < 1e-12 * want.abs());
        }
    }

    #[test]
    fn poles() {
        let st = stats(0.0, 3.0, 5.0, 0.0, 0.0, 1.0, 2);
        assert!(matches!(ml(&st), Err(EstimatorError::Singular { .. })));
        assert!(matches!(ir(&st), Err(EstimatorError::Singular { .. })));
    }

    #[test]
    fn ir_exact_fit() {
        let st = stats(2.0, 1.0, 4.0, 0.0, 0.0, 0.0, 2);
        assert_eq!(ir(&st).unwrap(), 2.0);
        assert_eq!(ls(&st), 2.0);
    }

    #[test]
    fn hyperparameters() {
        let h = BayesHyperparams::default();
        assert!((h.d1() - 1.0 / 3.0).abs() < 1e-15);
        assert!((h.d2() - 2.0 / 3.0).abs() < 1e-15);
        assert!((h.d1_star() - 2.0 / 3.0).abs() < 1e-15);
        assert!((h.d2_star() - 1.0 / 3.0).abs() < 1e-15);
        let h = BayesHyperparams::new(0.3, 2.5).unwrap();
        for d in [h.d1(), h.d2(), h.d1_star(), h.d2_star()] {
            assert!(d > 0.0 && d < 1.0);
        }
        assert!(h.d1() < h.d2());
        assert!((h.d2() - (h.d1() + 2.5 / 3.8)).abs() < 1e-15);
        assert!(BayesHyperparams::new(0.0, 1.0).is_err());
        assert!(BayesHyperparams::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn bayes_limits() {
        let st = stats(2.0, 3.0, 5.0, 0.0, 0.0, 1.5, 2);
        let h = BayesHyperparams::default();
        assert_eq!(bayes_pb(&st, &h), 2.0 / 4.5);

        let st = stats(2.0, 3.0, 5.0, 1.5, -0.7, 1.5, 2);
        let tiny = BayesHyperparams::new(1e-12, 1.0).unwrap();
        let want = 2.0 / (3.0 + 1.5 + tiny.d2() * 2.25);
        assert!((bayes_pb(&st, &tiny) - want).abs() < 1e-11);

        let both_tiny = BayesHyperparams::new(1e-12, 1e-12).unwrap();
        let pb = bayes_pb(&st, &both_tiny);
        assert!((bayes_pm_intercept(&st, &both_tiny) - (st.z0 - pb * st.u0)).abs() < 1e-10);

        let st = stats(2.0, 3.0, 5.0, 0.0, -0.7, 1.5, 2);
        assert_eq!(bayes_pm_intercept(&st, &h), h.d1_star() * -0.7);
    }

    #[test]
    fn intercepts() {
        let st = stats(2.0, 3.0, 5.0, 1.5, -0.7, 1.5, 2);
        assert_eq!(intercept_of(&st, 0.0), -0.7);
        assert!(intercept_of(&st, -0.7 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn known_variance_br() {
        let st = stats(4.0, 8.0, 5.0, 0.0, 0.0, 0.0, 1);
        assert!((br_known_variance(&st, 1) - 2.0 * ls(&st)).abs() < 1e-15);
        assert_eq!(br_known_variance(&st, 0), ls(&st));
        // a_1 = 8, a_2 = 48
        let want = (1.0 + 8.0 / 8.0 + 48.0 / 64.0) * ls(&st);
        assert!((br_known_variance(&st, 2) - want).abs() < 1e-15);
    }

    #[test]
    fn known_variance_psi0() {
        let one = |_: f64| 1.0;
        assert_eq!(psi0_known_variance_factor(10.0, &one), 1.0);
        assert_eq!(psi0_known_variance_factor(0.3, &one), 0.0);
        assert!((psi0_known_variance_factor(0.75, &one) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn standardization() {
        let st = stats(2.0, 3.0, 5.0, 1.5, -0.7, 1.5, 2);
        let z = standardize(&st, 4.0).unwrap();
        assert_eq!(z.u_sq, 0.75);
        assert_eq!(z.u0, 0.75);
        assert_eq!(ls(&z), ls(&st));
        assert!(standardize(&st, 0.0).is_err());
    }
}
