//! Multiplicative corrections `{1 + φ(‖U‖²/S)}·LS`.

use crate::canonical::SufficientStats;
use crate::error::EstimatorError;

/// `a_j = (p-2)(p-4)···(p-2j)` for `j = 1..=ell`.
pub fn falling_products(p: u32, ell: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(ell as usize);
    let mut a = 1.0;
    for j in 1..=ell {
        a *= p as f64 - 2.0 * j as f64;
        out.push(a);
    }
    out
}

/// `b_j = m(m+2)···(m+2j-2)`, the `j`-th raw moment of `χ²_m`; `b_0 = 1`.
pub fn rising_products(m: u32, ell: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(ell as usize);
    let mut b = 1.0;
    for j in 1..=ell {
        b *= m as f64 + 2.0 * (j as f64 - 1.0);
        out.push(b);
    }
    out
}

/// The bias-reducing coefficients `a_j / b_j`, `j = 1..=ell`, built as a running
/// product so that large `ell` does not overflow.
pub fn br_coefficients(p: u32, m: u32, ell: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(ell as usize);
    let mut c = 1.0;
    for j in 1..=ell {
        let jf = j as f64;
        c *= (p as f64 - 2.0 * jf) / (m as f64 + 2.0 * jf - 2.0);
        out.push(c);
    }
    out
}

/// `φ(t) = Σ c_j t^{-j}` over a sparse set of degrees. Degree 0 is a constant
/// term, which lets `1 + φ` itself be represented.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiPoly {
    terms: Vec<(u32, f64)>,
}

impl PhiPoly {
    /// Terms with repeated degrees are merged.
    pub fn new(terms: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut merged: Vec<(u32, f64)> = Vec::new();
        for (deg, c) in terms {
            match merged.iter_mut().find(|(d, _)| *d == deg) {
                Some(slot) => slot.1 += c,
                None => merged.push((deg, c)),
            }
        }
        merged.sort_by_key(|(d, _)| *d);
        Self { terms: merged }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `Σ_{j≤ell} (a_j/b_j) t^{-j}`.
    pub fn bias_reducing(p: u32, m: u32, ell: u32) -> Self {
        Self::new(br_coefficients(p, m, ell).into_iter().enumerate().map(|(i, c)| (i as u32 + 1, c)))
    }

    /// `2 Σ_{j≤ell} (a_j/b_j) t^{-j}`, also the bias-domination envelope.
    pub fn bias_reducing_doubled(p: u32, m: u32, ell: u32) -> Self {
        Self::bias_reducing(p, m, ell).scaled(2.0)
    }

    /// `Σ_{j≤ell} (p/m)^j t^{-j}`, the truncated geometric expansion of MM.
    pub fn stefanski(p: u32, m: u32, ell: u32) -> Self {
        let q = p as f64 / m as f64;
        Self::new((1..=ell).map(|j| (j, q.powi(j as i32))))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { terms: self.terms.iter().map(|&(d, c)| (d, c * k)).collect() }
    }

    /// `1 + φ`.
    pub fn one_plus(&self) -> Self {
        Self::new(std::iter::once((0, 1.0)).chain(self.terms.iter().copied()))
    }

    /// `φ²` as a polynomial in `t^{-1}`.
    pub fn squared(&self) -> Self {
        let mut out = Vec::new();
        for &(d1, c1) in &self.terms {
            for &(d2, c2) in &self.terms {
                out.push((d1 + d2, c1 * c2));
            }
        }
        Self::new(out)
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(d, _)| *d).max().unwrap_or(0)
    }

    /// Evaluates at `t = ‖U‖²/S`; `t = ∞` (no within-group spread) gives the
    /// constant term.
    pub fn eval(&self, t: f64) -> f64 {
        let inv = 1.0 / t;
        self.terms.iter().map(|&(d, c)| c * inv.powi(d as i32)).sum()
    }

    /// Evaluates in terms of `S/‖U‖² = 1/t` directly.
    pub fn eval_inverse(&self, s_over_u: f64) -> f64 {
        self.terms.iter().map(|&(d, c)| c * s_over_u.powi(d as i32)).sum()
    }

    pub fn apply(&self, st: &SufficientStats) -> f64 {
        (1.0 + self.eval_inverse(st.s_over_u())) * ls(st)
    }
}

/// Least squares slope `UᵗZ / ‖U‖²`.
pub fn ls(st: &SufficientStats) -> f64 {
    st.t_uz / st.u_sq
}

fn need_replicates(st: &SufficientStats, name: &str) -> Result<(), EstimatorError> {
    if st.m == 0 {
        return Err(EstimatorError::NeedsReplicates { estimator: name.to_string() });
    }
    Ok(())
}

/// Method of moments `(UᵗZ/p) / (‖U‖²/p − S/m)`. Has no finite moments.
pub fn mm(st: &SufficientStats) -> Result<f64, EstimatorError> {
    need_replicates(st, "MM")?;
    let p = st.p as f64;
    let denom = st.u_sq / p - st.s / st.m as f64;
    if denom == 0.0 {
        return Err(EstimatorError::Singular { estimator: "MM".into(), reason: "‖U‖²/p = S/m" });
    }
    Ok((st.t_uz / p) / denom)
}

/// `ell`-th order geometric correction `{1 + Σ_{j≤ell} ((p/m) S/‖U‖²)^j}·LS`.
pub fn stefanski(st: &SufficientStats, ell: u32) -> Result<f64, EstimatorError> {
    if ell == 0 {
        return Ok(ls(st));
    }
    need_replicates(st, "ST")?;
    Ok(PhiPoly::stefanski(st.p, st.m, ell).apply(st))
}

/// Bias-reduced `{1 + Σ_{j≤ell} (a_j/b_j)(S/‖U‖²)^j}·LS`; `ell = 0` is LS.
pub fn br(st: &SufficientStats, ell: u32) -> Result<f64, EstimatorError> {
    if ell == 0 {
        return Ok(ls(st));
    }
    need_replicates(st, "BR")?;
    Ok(PhiPoly::bias_reducing(st.p, st.m, ell).apply(st))
}

/// BR with every coefficient doubled.
pub fn br_doubled(st: &SufficientStats, ell: u32) -> Result<f64, EstimatorError> {
    if ell == 0 {
        return Ok(ls(st));
    }
    need_replicates(st, "BR-doubled")?;
    Ok(PhiPoly::bias_reducing_doubled(st.p, st.m, ell).apply(st))
}

/// `φ*_ell(t) = max[0, min{φ̄(t), Σ_{j≤ell} (a_j/b_j) t^{-j}}]`.
pub fn phi_star_value(phi_bar: f64, t: f64, br_part: &PhiPoly) -> f64 {
    let cap = br_part.eval(t);
    0f64.max(phi_bar.min(cap))
}

/// `{1 + φ*_ell(‖U‖²/S)}·LS` for an arbitrary correction `φ̄`.
pub fn phi_star(st: &SufficientStats, phi_bar: &dyn Fn(f64) -> f64, ell: u32) -> Result<f64, EstimatorError> {
    need_replicates(st, "PHISTAR")?;
    let t = st.t_ratio();
    let poly = PhiPoly::bias_reducing(st.p, st.m, ell);
    Ok((1.0 + phi_star_value(phi_bar(t), t, &poly)) * ls(st))
}

/// The correction that turns LS into MM: `x/(1−x)` with `x = (p/m)/t`.
pub fn mm_correction(p: u32, m: u32) -> impl Fn(f64) -> f64 {
    let q = p as f64 / m as f64;
    move |t: f64| {
        let x = q / t;
        x / (1.0 - x)
    }
}

/// `φ**_ell`: the full BR sum when `t > 1`, otherwise only its first-order term.
pub fn phi_star_star_value(t: f64, p: u32, m: u32, ell: u32) -> f64 {
    let coeffs = br_coefficients(p, m, ell.max(1));
    if t > 1.0 {
        coeffs.iter().enumerate().map(|(j, c)| c * t.powi(-(j as i32 + 1))).sum()
    } else {
        coeffs[0] / t
    }
}

pub fn phi_star_star(st: &SufficientStats, ell: u32) -> Result<f64, EstimatorError> {
    need_replicates(st, "PHISS")?;
    Ok((1.0 + phi_star_star_value(st.t_ratio(), st.p, st.m, ell)) * ls(st))
}
