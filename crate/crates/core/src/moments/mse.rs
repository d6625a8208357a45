//! Mixture integrals over `(W, S)`, and exact MSEs of φ- and ψ-class estimators.
//!
//! Conditional on `K = k`, `W = ‖U‖²/σ² ~ χ²_{p+2k}` and `S/σ² ~ χ²_m`, so
//! `V = W/(W+S) ~ Beta((p+2k)/2, m/2)` is independent of `W + S ~ χ²_{p+2k+m}`.
//! This turns every double integral into a one-dimensional Beta expectation.

use super::bias::inverse_product;
use super::poisson::{poisson_series, SeriesControl, SeriesValue};
use super::quadrature::{beta_expectation, QuadratureControl};
use super::MixtureParams;
use crate::error::MomentError;
use crate::estimators::{rising_products, Dims, PhiPoly, Psi};

/// `E[φ(W/S)]` and `E[φ(W/S)/W]` given `K = k`, in `σ² = 1` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalIntegrals {
    pub i1: f64,
    pub i2: f64,
}

/// `b_j = E[S^j]` for `S ~ χ²_m`, `j = 0..=degree`.
fn chi_square_moments(m: u32, degree: u32) -> Vec<f64> {
    let mut out = vec![1.0];
    out.extend(rising_products(m, degree));
    out
}

fn check_integrable(p: u32, k: u64, order: u32) -> Result<(), MomentError> {
    if (p as u64 + 2 * k) <= 2 * order as u64 {
        return Err(MomentError::InverseMomentWindow { order, need: 2 * order, p: p + 2 * k as u32 });
    }
    Ok(())
}

/// Closed form for polynomial `φ(t) = Σ c_j t^{-j}`:
/// `I₁ = Σ c_j b_j Π_{i≤j}(p+2k−2i)^{-1}` and `I₂` with one more factor.
pub fn conditional_integrals_closed_form(
    phi: &PhiPoly,
    p: u32,
    m: u32,
    k: u64,
) -> Result<ConditionalIntegrals, MomentError> {
    let d = phi.degree();
    if d > 0 && m == 0 {
        return Err(MomentError::NoVarianceDf);
    }
    check_integrable(p, k, d + 1)?;
    let b = chi_square_moments(m, d);
    let (mut i1, mut i2) = (0.0, 0.0);
    for &(j, c) in phi.terms() {
        i1 += c * b[j as usize] * inverse_product(p, k, j);
        i2 += c * b[j as usize] * inverse_product(p, k, j + 1);
    }
    Ok(ConditionalIntegrals { i1, i2 })
}

/// Quadrature route for any `φ`, evaluated at `t = v/(1−v)`.
pub fn conditional_integrals_quadrature(
    phi: &dyn Fn(f64) -> f64,
    p: u32,
    m: u32,
    k: u64,
    qctl: &QuadratureControl,
) -> Result<ConditionalIntegrals, MomentError> {
    if m == 0 {
        return Err(MomentError::NoVarianceDf);
    }
    check_integrable(p, k, 1)?;
    let a = (p as f64 + 2.0 * k as f64) / 2.0;
    let b = m as f64 / 2.0;
    let i1 = beta_expectation(|v, omv| phi(v / omv), a, b, qctl)?.value;
    let i2 = beta_expectation(|v, omv| phi(v / omv) / v, a, b, qctl)?.value / (2.0 * (a + b) - 2.0);
    Ok(ConditionalIntegrals { i1, i2 })
}

fn check_beta(beta: f64) -> Result<(), MomentError> {
    if !beta.is_finite() {
        return Err(MomentError::InvalidParameter { what: "beta", requirement: "finite", value: beta });
    }
    Ok(())
}

/// Exact MSE of `{1 + φ(‖U‖²/S)}·LS` for polynomial `φ` of degree `d`,
/// finite when `p > 4d + 2`.
///
/// With `ψ = 1 + φ = Σ c_j t^{-j}` and `ψ² = Σ e_q t^{-q}`:
/// `MSE = τ²A + β²(B − 2C + 1)` where, summing over `K`,
/// `A = σ^{-2} Σ e_q b_q Π^{q+1}`, `B = 2λ(1+2K)/(p+2K)·Σ e_q b_q Π^{q+1}`,
/// `C = 2λ/(p+2K)·Σ c_j b_j Π^j` and `Π^i = Π_{j≤i}(p+2K−2j)^{-1}`.
pub fn mse_phi_exact(
    mp: &MixtureParams,
    phi: &PhiPoly,
    beta: f64,
    tau2: f64,
    sigma2: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue, MomentError> {
    super::check_variances(tau2, sigma2)?;
    check_beta(beta)?;
    let d = phi.degree();
    if mp.p < 3 || mp.p <= 4 * d + 2 {
        return Err(MomentError::MseWindow { p: mp.p, degree: d });
    }
    if d > 0 && mp.m == 0 {
        return Err(MomentError::NoVarianceDf);
    }
    let psi = phi.one_plus();
    let psi_sq = psi.squared();
    let b = chi_square_moments(mp.m, 2 * d);
    let p = mp.p as f64;
    let two_l = 2.0 * mp.lambda;
    let ratio = tau2 / sigma2;
    let b2 = beta * beta;

    let sq_part = |k: u64, abs: bool| -> f64 {
        psi_sq
            .terms()
            .iter()
            .map(|&(q, e)| if abs { e.abs() } else { e } * b[q as usize] * inverse_product(mp.p, k, q + 1))
            .sum()
    };
    let lin_part = |k: u64, abs: bool| -> f64 {
        psi.terms()
            .iter()
            .map(|&(j, c)| if abs { c.abs() } else { c } * b[j as usize] * inverse_product(mp.p, k, j))
            .sum()
    };
    let g = |k: u64| {
        let nu = p + 2.0 * k as f64;
        let sq = sq_part(k, false);
        let term = ratio * sq + b2 * (two_l * (1.0 + 2.0 * k as f64) / nu * sq - 2.0 * two_l / nu * lin_part(k, false));
        Ok(term)
    };
    // Each inverse product decreases in k and (1+2k)/(p+2k) < 1.
    let tail = |k: u64| {
        let nu = p + 2.0 * k as f64;
        let sq = sq_part(k, true);
        ratio * sq + b2 * (two_l * sq + 2.0 * two_l / nu * lin_part(k, true))
    };
    Ok(poisson_series(mp.lambda, ctl, g, tail)?.shifted(b2))
}

fn psi_parts(psi: &Psi, mp: &MixtureParams) -> Result<(Dims, f64), MomentError> {
    if mp.p < 3 {
        return Err(MomentError::LsWindow { quantity: "psi-class MSE", condition: "p >= 3", p: mp.p });
    }
    if mp.m == 0 {
        return Err(MomentError::NoVarianceDf);
    }
    let dims = Dims::new(mp.p, mp.m);
    let sup = psi.sup(dims).ok_or(MomentError::UnboundedPsi)?;
    Ok((dims, sup))
}

/// `∫ψ²(v)v^{-1}f_k(v)dv` and `∫ψ(v)f_k(v)dv`.
fn psi_integrals(psi: &Psi, dims: Dims, k: u64, qctl: &QuadratureControl) -> Result<(f64, f64), MomentError> {
    let a = (dims.p as f64 + 2.0 * k as f64) / 2.0;
    let b = dims.m as f64 / 2.0;
    let at = |v: f64, omv: f64| psi.eval_parts(v, omv / v, dims);
    let sq_over_v = beta_expectation(
        |v, omv| {
            let y = at(v, omv);
            y * y / v
        },
        a,
        b,
        qctl,
    )?;
    let lin = beta_expectation(at, a, b, qctl)?;
    Ok((sq_over_v.value, lin.value))
}

/// Bias of `{1 + φ(‖U‖²/S)}·LS` for polynomial `φ` of degree `d`:
/// `β(Σ_k P_λ(k) 2λ/(p+2k)·Σ c_j b_j Π^j − 1)`, finite when `p > 2d + 2`.
pub fn bias_phi_exact(
    mp: &MixtureParams,
    phi: &PhiPoly,
    beta: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue, MomentError> {
    check_beta(beta)?;
    let d = phi.degree();
    if mp.p < 3 || mp.p <= 2 * d + 2 {
        return Err(MomentError::BiasWindow { p: mp.p, ell: d });
    }
    if d > 0 && mp.m == 0 {
        return Err(MomentError::NoVarianceDf);
    }
    let psi = phi.one_plus();
    let b = chi_square_moments(mp.m, d);
    let p = mp.p as f64;
    let two_l = 2.0 * mp.lambda;
    let part = |k: u64, abs: bool| -> f64 {
        let lin: f64 = psi
            .terms()
            .iter()
            .map(|&(j, c)| if abs { c.abs() } else { c } * b[j as usize] * inverse_product(mp.p, k, j))
            .sum();
        two_l / (p + 2.0 * k as f64) * lin
    };
    Ok(poisson_series(mp.lambda, ctl, |k| Ok(part(k, false)), |k| part(k, true))?.shifted(-1.0).scaled(beta))
}

/// Bias of `ψ(V)·LS` for bounded `ψ`: `β(Σ_k P_λ(k) 2λ/(p+2k)∫ψ f_k − 1)`.
pub fn bias_psi_exact(
    psi: &Psi,
    mp: &MixtureParams,
    beta: f64,
    ctl: &SeriesControl,
    qctl: &QuadratureControl,
) -> Result<SeriesValue, MomentError> {
    check_beta(beta)?;
    let (dims, sup) = psi_parts(psi, mp)?;
    let p = mp.p as f64;
    let two_l = 2.0 * mp.lambda;
    let b = mp.m as f64 / 2.0;
    let series = poisson_series(
        mp.lambda,
        ctl,
        |k| {
            let a = (p + 2.0 * k as f64) / 2.0;
            let lin = beta_expectation(|v, omv| psi.eval_parts(v, omv / v, dims), a, b, qctl)?;
            Ok(two_l / (p + 2.0 * k as f64) * lin.value)
        },
        |k| two_l / (p + 2.0 * k as f64) * sup,
    )?;
    Ok(series.shifted(-1.0).scaled(beta))
}

/// `H_ψ(k) = ∫{(1+2k)/(p+2k+m−2)·ψ²(v)/v − 2ψ(v)} f_k(v) dv`.
pub fn control_integral(psi: &Psi, dims: Dims, k: u64, qctl: &QuadratureControl) -> Result<f64, MomentError> {
    let (sq, lin) = psi_integrals(psi, dims, k, qctl)?;
    let kf = k as f64;
    Ok((1.0 + 2.0 * kf) / (dims.p as f64 + 2.0 * kf + dims.m as f64 - 2.0) * sq - 2.0 * lin)
}

/// `E[{ψ(V)Uᵗξ/‖U‖² − 1}²] − 1 = Σ_k 2λ/(p+2k) P_λ(k) H_ψ(k)`.
pub fn control_excess(
    psi: &Psi,
    mp: &MixtureParams,
    ctl: &SeriesControl,
    qctl: &QuadratureControl,
) -> Result<SeriesValue, MomentError> {
    let (dims, sup) = psi_parts(psi, mp)?;
    let p = mp.p as f64;
    let two_l = 2.0 * mp.lambda;
    // |H(k)| ≤ sup²(1+2k)/(p+2k−2) + 2 sup ≤ sup² + 2 sup for p ≥ 3.
    let h_bound = sup * sup + 2.0 * sup;
    poisson_series(
        mp.lambda,
        ctl,
        |k| Ok(two_l / (p + 2.0 * k as f64) * control_integral(psi, dims, k, qctl)?),
        |k| two_l / (p + 2.0 * k as f64) * h_bound,
    )
}

/// Exact MSE of `ψ(V)·LS` for bounded `ψ`:
/// `τ²Σ_k P_λ(k){σ²(p+2k+m−2)}^{-1}∫ψ²v^{-1}f_k + β²{1 + control excess}`.
pub fn mse_psi_exact(
    psi: &Psi,
    mp: &MixtureParams,
    beta: f64,
    tau2: f64,
    sigma2: f64,
    ctl: &SeriesControl,
    qctl: &QuadratureControl,
) -> Result<SeriesValue, MomentError> {
    super::check_variances(tau2, sigma2)?;
    check_beta(beta)?;
    let (dims, sup) = psi_parts(psi, mp)?;
    let (p, m) = (mp.p as f64, mp.m as f64);
    let two_l = 2.0 * mp.lambda;
    let ratio = tau2 / sigma2;
    let b2 = beta * beta;
    let g = |k: u64| {
        let kf = k as f64;
        let (sq, lin) = psi_integrals(psi, dims, k, qctl)?;
        let t = p + 2.0 * kf + m - 2.0;
        let h = (1.0 + 2.0 * kf) / t * sq - 2.0 * lin;
        Ok(ratio * sq / t + b2 * two_l / (p + 2.0 * kf) * h)
    };
    // ∫ψ²v^{-1}f_k ≤ sup²(p+2k+m−2)/(p+2k−2).
    let tail = |k: u64| {
        let kf = k as f64;
        ratio * sup * sup / (p + 2.0 * kf - 2.0) + b2 * two_l / (p + 2.0 * kf) * (sup * sup + 2.0 * sup)
    };
    Ok(poisson_series(mp.lambda, ctl, g, tail)?.shifted(b2))
}
