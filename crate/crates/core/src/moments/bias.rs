//! Exact LS and BR biases, the LS MSE, and the mixture identities they rest on.

use super::poisson::{poisson_expectation, SeriesControl, SeriesValue};
use super::MixtureParams;
use crate::error::MomentError;

/// `Π_{j=1}^{i} (p + 2k − 2j)^{-1}`, the central inverse moment
/// `E[W^{-i}]` of `W ~ χ²_{p+2k}`.
pub fn inverse_product(p: u32, k: u64, i: u32) -> f64 {
    let nu = p as f64 + 2.0 * k as f64;
    (1..=i).fold(1.0, |acc, j| acc / (nu - 2.0 * j as f64))
}

/// `-E[(p−2)/(p+2K−2)]·β`.
pub fn bias_ls_exact(mp: &MixtureParams, beta: f64, ctl: &SeriesControl) -> Result<SeriesValue, MomentError> {
    if mp.p < 3 {
        return Err(MomentError::LsWindow { quantity: "LS bias", condition: "p >= 3", p: mp.p });
    }
    let p = mp.p as f64;
    let g = |k: u64| (p - 2.0) / (p + 2.0 * k as f64 - 2.0);
    Ok(poisson_expectation(mp.lambda, ctl, g, g)?.scaled(-beta))
}

/// `-E[Π_{j=1}^{ℓ+1} (p−2j)/(p+2K−2j)]·β`, valid for `p ≥ 5`, `ℓ < (p−2)/2`.
/// Does not depend on `m`. `ℓ = 0` is the LS bias.
pub fn bias_br_exact(mp: &MixtureParams, ell: u32, beta: f64, ctl: &SeriesControl) -> Result<SeriesValue, MomentError> {
    if ell == 0 {
        return bias_ls_exact(mp, beta, ctl);
    }
    if mp.p < 5 || 2 * ell + 2 >= mp.p {
        return Err(MomentError::BiasWindow { p: mp.p, ell });
    }
    let p = mp.p as f64;
    let g = |k: u64| {
        let shift = 2.0 * k as f64;
        (1..=ell + 1).fold(1.0, |acc, j| {
            let two_j = 2.0 * j as f64;
            acc * (p - two_j) / (p + shift - two_j)
        })
    };
    Ok(poisson_expectation(mp.lambda, ctl, g, g)?.scaled(-beta))
}

/// `E[Π_{j=1}^{i} (p+2K−2j)^{-1}] = E[σ^{2i}/‖U‖^{2i}]`, needs `p > 2i`.
pub fn inverse_moment(mp: &MixtureParams, i: u32, ctl: &SeriesControl) -> Result<SeriesValue, MomentError> {
    if mp.p <= 2 * i {
        return Err(MomentError::InverseMomentWindow { order: i, need: 2 * i, p: mp.p });
    }
    let g = |k: u64| inverse_product(mp.p, k, i);
    poisson_expectation(mp.lambda, ctl, g, g)
}

/// `E[Uᵗξ/‖U‖²] = E[2λ/(p+2K)]`.
pub fn e1(mp: &MixtureParams, ctl: &SeriesControl) -> Result<SeriesValue, MomentError> {
    if mp.p < 2 {
        return Err(MomentError::LsWindow { quantity: "E[Uᵗξ/‖U‖²]", condition: "p >= 2", p: mp.p });
    }
    let (p, two_l) = (mp.p as f64, 2.0 * mp.lambda);
    let g = |k: u64| two_l / (p + 2.0 * k as f64);
    poisson_expectation(mp.lambda, ctl, g, g)
}

/// `E[(Uᵗξ)²/‖U‖⁴] = E[2λ(1+2K)/{(p+2K)(p+2K−2)}]`.
pub fn e2(mp: &MixtureParams, ctl: &SeriesControl) -> Result<SeriesValue, MomentError> {
    if mp.p < 3 {
        return Err(MomentError::LsWindow { quantity: "E[(Uᵗξ)²/‖U‖⁴]", condition: "p >= 3", p: mp.p });
    }
    let (p, two_l) = (mp.p as f64, 2.0 * mp.lambda);
    let g = |k: u64| {
        let nu = p + 2.0 * k as f64;
        two_l * (1.0 + 2.0 * k as f64) / (nu * (nu - 2.0))
    };
    // (1+2j)/(p+2j) < 1, so each later term is below 2λ/(p+2k−2).
    let tail = |k: u64| two_l / (p + 2.0 * k as f64 - 2.0);
    poisson_expectation(mp.lambda, ctl, g, tail)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentIdentities {
    pub e1: SeriesValue,
    pub e2: SeriesValue,
    /// `E[σ^{2i}/‖U‖^{2i}]` for `i = 1, 2, …` as requested.
    pub inv_moments: Vec<SeriesValue>,
}

pub fn moment_identities(
    mp: &MixtureParams,
    orders: &[u32],
    ctl: &SeriesControl,
) -> Result<MomentIdentities, MomentError> {
    Ok(MomentIdentities {
        e1: e1(mp, ctl)?,
        e2: e2(mp, ctl)?,
        inv_moments: orders.iter().map(|&i| inverse_moment(mp, i, ctl)).collect::<Result<_, _>>()?,
    })
}

/// `(τ²/σ²)E[1/(p+2K−2)] + β²E[2λ(1+2K)/{(p+2K)(p+2K−2)} − 4λ/(p+2K) + 1]`.
pub fn mse_ls_exact(
    mp: &MixtureParams,
    beta: f64,
    tau2: f64,
    sigma2: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue, MomentError> {
    if mp.p < 3 {
        return Err(MomentError::LsWindow { quantity: "LS MSE", condition: "p >= 3", p: mp.p });
    }
    super::check_variances(tau2, sigma2)?;
    let (p, two_l) = (mp.p as f64, 2.0 * mp.lambda);
    let ratio = tau2 / sigma2;
    let b2 = beta * beta;
    let g = |k: u64| {
        let nu = p + 2.0 * k as f64;
        ratio / (nu - 2.0) + b2 * (two_l * (1.0 + 2.0 * k as f64) / (nu * (nu - 2.0)) - 2.0 * two_l / nu)
    };
    let tail = |k: u64| {
        let nu = p + 2.0 * k as f64;
        ratio / (nu - 2.0) + b2 * (two_l / (nu - 2.0) + 2.0 * two_l / nu)
    };
    Ok(poisson_expectation(mp.lambda, ctl, g, tail)?.shifted(b2))
}
