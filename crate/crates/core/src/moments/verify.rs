//! Grid checks of the domination conditions and exact bias comparisons.

use super::bias::{bias_br_exact, bias_ls_exact, inverse_product};
use super::poisson::{poisson_series, SeriesControl, SeriesValue};
use super::quadrature::{beta_expectation, QuadratureControl};
use super::MixtureParams;
use crate::error::MomentError;
use crate::estimators::{br_coefficients, falling_products, Dims, Psi};

const GRID_REL_TOL: f64 = 1e-12;

/// Outcome of checking `ψ² ≤ ψ̄²` and
/// `Δ(v) = ψ² − ψ̄² − 2(p+m−2)v(ψ − ψ̄) ≤ 0` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub psi: String,
    pub psi_bar: String,
    pub p: u32,
    pub m: u32,
    pub grid_size: usize,
    /// Largest `ψ² − ψ̄²` seen, positive when the first condition fails.
    pub max_square_excess: f64,
    /// Largest `Δ(v)` seen.
    pub max_delta: f64,
    pub square_violations: usize,
    pub delta_violations: usize,
    pub first_violation: Option<f64>,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.square_violations == 0 && self.delta_violations == 0
    }
}

/// Checks the two domination conditions at `v = i/(grid+1)`, `i = 1..=grid`.
pub fn verify_domination(psi: &Psi, psi_bar: &Psi, p: u32, m: u32, grid_size: usize) -> DominationReport {
    let dims = Dims::new(p, m);
    let c = dims.c();
    let mut report = DominationReport {
        psi: psi.label(),
        psi_bar: psi_bar.label(),
        p,
        m,
        grid_size,
        max_square_excess: f64::NEG_INFINITY,
        max_delta: f64::NEG_INFINITY,
        square_violations: 0,
        delta_violations: 0,
        first_violation: None,
    };
    let step = 1.0 / (grid_size as f64 + 1.0);
    for i in 1..=grid_size {
        let v = i as f64 * step;
        let odds = (1.0 - v) / v;
        let a = psi.eval_parts(v, odds, dims);
        let b = psi_bar.eval_parts(v, odds, dims);
        let square = a * a - b * b;
        let delta = square - 2.0 * c * v * (a - b);
        let scale = a * a + b * b + 2.0 * c * v * (a.abs() + b.abs());
        let slack = GRID_REL_TOL * scale.max(1.0);
        report.max_square_excess = report.max_square_excess.max(square);
        report.max_delta = report.max_delta.max(delta);
        let bad_sq = square > slack;
        let bad_delta = delta > slack;
        report.square_violations += bad_sq as usize;
        report.delta_violations += bad_delta as usize;
        if (bad_sq || bad_delta) && report.first_violation.is_none() {
            report.first_violation = Some(v);
        }
    }
    report
}

/// Outcome of the bias-domination check for a correction `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasEnvelopeReport {
    pub grid_size: usize,
    /// Largest `φ(t) − 2Σ(a_j/b_j)t^{-j}` or `−φ(t)` seen; positive on failure.
    pub max_envelope_excess: f64,
    pub envelope_holds: bool,
    /// `Bias(β̂_φ)`, only computed when the envelope holds.
    pub bias_phi: Option<SeriesValue>,
    pub bias_ls: SeriesValue,
}

impl BiasEnvelopeReport {
    pub fn passed(&self) -> bool {
        self.envelope_holds
            && self
                .bias_phi
                .is_some_and(|b| b.value.abs() <= self.bias_ls.value.abs() + b.tail_bound + self.bias_ls.tail_bound)
    }
}

/// Log-spaced `t` grid on `[1e-4, 1e4]`.
pub fn envelope_grid(size: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = (-4.0f64, 4.0f64);
    (0..size).map(move |i| 10f64.powf(lo + (hi - lo) * i as f64 / (size as f64 - 1.0)))
}

/// Checks `0 ≤ φ(t) ≤ 2Σ_{j≤ℓ}(a_j/b_j)t^{-j}`, then compares
/// `|Bias(β̂_φ)| = |β|·|E[(1+φ)Uᵗξ/‖U‖²] − 1|` with the LS bias.
pub fn bias_theorem1_verify(
    phi: &dyn Fn(f64) -> f64,
    mp: &MixtureParams,
    ell: u32,
    beta: f64,
    ctl: &SeriesControl,
    qctl: &QuadratureControl,
) -> Result<BiasEnvelopeReport, MomentError> {
    if ell == 0 || mp.p < 3 || 2 * ell + 2 >= mp.p {
        return Err(MomentError::BiasWindow { p: mp.p, ell });
    }
    if mp.m == 0 {
        return Err(MomentError::NoVarianceDf);
    }
    let coeffs = br_coefficients(mp.p, mp.m, ell);
    let cap = |t: f64| 2.0 * coeffs.iter().enumerate().map(|(j, c)| c * t.powi(-(j as i32 + 1))).sum::<f64>();
    let grid_size = 2000;
    let mut worst = f64::NEG_INFINITY;
    let mut holds = true;
    for t in envelope_grid(grid_size) {
        let f = phi(t);
        let upper = cap(t);
        let excess = (f - upper).max(-f);
        worst = worst.max(excess);
        if !(excess <= GRID_REL_TOL * upper.max(1.0)) {
            holds = false;
        }
    }
    let bias_ls = bias_ls_exact(mp, beta, ctl)?;
    if !holds {
        return Ok(BiasEnvelopeReport {
            grid_size,
            max_envelope_excess: worst,
            envelope_holds: false,
            bias_phi: None,
            bias_ls,
        });
    }

    let p = mp.p as f64;
    let two_l = 2.0 * mp.lambda;
    let b = mp.m as f64 / 2.0;
    let a_coeffs = falling_products(mp.p, ell);
    let expectation = poisson_series(
        mp.lambda,
        ctl,
        |k| {
            let a = (p + 2.0 * k as f64) / 2.0;
            let q = beta_expectation(|v, omv| 1.0 + phi(v / omv), a, b, qctl)?;
            Ok(two_l / (p + 2.0 * k as f64) * q.value)
        },
        // Inside the envelope, E[1+φ | K=k] ≤ 1 + 2Σ a_j Π^j(k).
        |k| {
            let env: f64 = a_coeffs.iter().enumerate().map(|(j, a)| a * inverse_product(mp.p, k, j as u32 + 1)).sum();
            two_l / (p + 2.0 * k as f64) * (1.0 + 2.0 * env)
        },
    )?;
    let bias_phi = expectation.shifted(-1.0).scaled(beta);
    Ok(BiasEnvelopeReport {
        grid_size,
        max_envelope_excess: worst,
        envelope_holds: true,
        bias_phi: Some(bias_phi),
        bias_ls,
    })
}

/// Known-variance results at `σ² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownVarianceReport {
    /// `β(E[(1+Σ a_j W^{-j})Uᵗξ/W] − 1)` via the mixture identity.
    pub bias_br: SeriesValue,
    /// The same bias from the product form.
    pub bias_br_product: SeriesValue,
    /// Largest `ψ₀² − ψ̄² − 2w(ψ₀ − ψ̄)` on the `w` grid.
    pub max_delta0: f64,
    pub delta0_holds: bool,
}

/// Known-variance BR bias by two routes and the `Δ₀ ≤ 0` check for
/// `ψ₀(w) = max[0, min{ψ̄(w), 2w − ψ̄(w)}]` on `w ∈ (0, w_max]`.
#[allow(clippy::too_many_arguments)]
pub fn known_variance_moments(
    psi_bar: &dyn Fn(f64) -> f64,
    p: u32,
    lambda: f64,
    ell: u32,
    beta: f64,
    w_max: f64,
    grid_size: usize,
    ctl: &SeriesControl,
) -> Result<KnownVarianceReport, MomentError> {
    let mp = MixtureParams::new(p, 0, lambda)?;
    let product = bias_br_exact(&mp, ell, beta, ctl)?;
    let a = falling_products(p, ell);
    let pf = p as f64;
    let two_l = 2.0 * lambda;
    let inner = |k: u64| 1.0 + a.iter().enumerate().map(|(j, c)| c * inverse_product(p, k, j as u32 + 1)).sum::<f64>();
    let series = poisson_series(
        lambda,
        ctl,
        |k| Ok(two_l / (pf + 2.0 * k as f64) * inner(k)),
        |k| two_l / (pf + 2.0 * k as f64) * inner(k),
    )?;
    let bias_br = series.shifted(-1.0).scaled(beta);

    let mut max_delta0 = f64::NEG_INFINITY;
    let mut holds = true;
    for i in 1..=grid_size {
        let w = w_max * i as f64 / grid_size as f64;
        let bar = psi_bar(w);
        let psi0 = 0f64.max(bar.min(2.0 * w - bar));
        let delta = psi0 * psi0 - bar * bar - 2.0 * w * (psi0 - bar);
        max_delta0 = max_delta0.max(delta);
        let scale = psi0 * psi0 + bar * bar + 2.0 * w * (psi0.abs() + bar.abs());
        if delta > GRID_REL_TOL * scale.max(1.0) {
            holds = false;
        }
    }
    Ok(KnownVarianceReport { bias_br, bias_br_product: product, max_delta0, delta0_holds: holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{mm_correction, phi_star_star_value, phi_star_value, PhiPoly};

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    fn qctl() -> QuadratureControl {
        QuadratureControl::default()
    }

    #[test]
    fn tls_dominates_ls_everywhere() {
        for p in (3..=50).step_by(7) {
            for m in (1..=50).step_by(7) {
                let r = verify_domination(&Psi::tls(), &Psi::Identity, p, m, 10_000);
                assert!(r.passed(), "p={p} m={m}: {r:?}");
            }
        }
    }

    #[test]
    fn truncations_dominate_their_targets() {
        for (p, m) in [(9, 10), (29, 30), (99, 100), (5, 1)] {
            assert!(verify_domination(&Psi::tgg(), &Psi::GgBar, p, m, 10_000).passed());
            // a_j > 0 for all j ≤ ell exactly when 2·ell < p
            for ell in (1..=5).filter(|l| 2 * l < p) {
                assert!(verify_domination(&Psi::tbr(ell), &Psi::BrBar(ell), p, m, 10_000).passed());
            }
            for bar in [Psi::Identity, Psi::GgBar, Psi::BrBar(2)] {
                assert!(verify_domination(&Psi::Kr(Box::new(bar.clone())), &bar, p, m, 10_000).passed());
            }
        }
    }

    #[test]
    fn bad_psi_is_flagged() {
        let r = verify_domination(&Psi::Constant(1.5), &Psi::Identity, 9, 10, 1000);
        assert!(!r.passed());
        assert_eq!(r.square_violations, 1000);
        assert!((r.max_square_excess - 1.25).abs() < 1e-15);
    }

    #[test]
    fn br1_bias_dominates() {
        let mp = MixtureParams::new(10, 11, 5.0).unwrap();
        let br1 = PhiPoly::bias_reducing(10, 11, 1);
        let r = bias_theorem1_verify(&|t| br1.eval(t), &mp, 1, -5.0, &ctl(), &qctl()).unwrap();
        assert!(r.envelope_holds);
        let bias = r.bias_phi.unwrap();
        assert!(bias.value.abs() < r.bias_ls.value.abs());
        let exact = bias_br_exact(&mp, 1, -5.0, &ctl()).unwrap();
        assert!((bias.value - exact.value).abs() < 1e-8, "{} vs {}", bias.value, exact.value);
    }

    #[test]
    fn star_corrections_dominate() {
        let (p, m) = (10, 11);
        let mp = MixtureParams::new(p, m, 5.0).unwrap();
        let cap = PhiPoly::bias_reducing(p, m, 1);
        let mmc = mm_correction(p, m);
        let star = |t: f64| phi_star_value(mmc(t), t, &cap);
        let ss = |t: f64| phi_star_star_value(t, p, m, 1);
        for phi in [&star as &dyn Fn(f64) -> f64, &ss] {
            let r = bias_theorem1_verify(phi, &mp, 1, -5.0, &ctl(), &qctl()).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn huge_phi_fails_envelope() {
        let mp = MixtureParams::new(10, 11, 5.0).unwrap();
        let r = bias_theorem1_verify(&|t| 1e6 / t, &mp, 1, -5.0, &ctl(), &qctl()).unwrap();
        assert!(!r.envelope_holds);
        assert!(!r.passed());
        assert!(r.bias_phi.is_none());
    }

    #[test]
    fn known_variance_routes_agree() {
        let r = known_variance_moments(&|_| 1.0, 10, 5.0, 1, -5.0, 50.0, 5000, &ctl()).unwrap();
        assert!((r.bias_br.value - r.bias_br_product.value).abs() < 1e-8);
        assert!(r.delta0_holds);
        let zero = known_variance_moments(&|_| 1.0, 10, 0.0, 2, -5.0, 50.0, 10, &ctl()).unwrap();
        assert!((zero.bias_br.value - 5.0).abs() < 1e-14);
    }
}
