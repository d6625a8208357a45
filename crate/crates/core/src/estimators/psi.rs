//! Shrinkage-type factors `ψ(V)·LS` with `V = ‖U‖²/(S + ‖U‖²)`, and their
//! truncations.

use std::fmt;

use super::phi::{br_coefficients, ls};
use crate::canonical::SufficientStats;
use crate::error::EstimatorError;

/// Dimensions a ψ factor may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub p: u32,
    pub m: u32,
}

impl Dims {
    pub fn new(p: u32, m: u32) -> Self {
        Self { p, m }
    }

    /// `p + m − 2`, the slope of the truncation line `2(p+m−2)v`.
    pub fn c(&self) -> f64 {
        self.p as f64 + self.m as f64 - 2.0
    }
}

impl From<&SufficientStats> for Dims {
    fn from(st: &SufficientStats) -> Self {
        Self { p: st.p, m: st.m }
    }
}

/// A factor `ψ: (0,1) → ℝ`.
///
/// `Psi0`, `Psi1` and `Kr` wrap an inner `ψ̄`:
///
/// * `Psi0`: `max[0, min{ψ̄, 2(p+m−2)v − ψ̄}]`
/// * `Psi1`: `max[1, min{ψ̄, 2(p+m−2)v − ψ̄}]` (for `ψ̄ ≥ 1`)
/// * `Kr`: `min{ψ̄, (p+m−2)v}` (for `ψ̄ ≥ 0`)
#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    Identity,
    Constant(f64),
    /// `1 + Σ_{j≤ell} (a_j/b_j) ((1−v)/v)^j`
    BrBar(u32),
    /// `[1 − min{(p−2)/p, (p−2)/(m+2)·(1−v)/v}]^{-1}`
    GgBar,
    Psi0(Box<Psi>),
    Psi1(Box<Psi>),
    Kr(Box<Psi>),
}

impl Psi {
    pub fn tls() -> Self {
        Psi::Psi0(Box::new(Psi::Identity))
    }

    pub fn tls2() -> Self {
        Psi::Kr(Box::new(Psi::Identity))
    }

    pub fn tbr(ell: u32) -> Self {
        Psi::Psi1(Box::new(Psi::BrBar(ell)))
    }

    pub fn tgg() -> Self {
        Psi::Psi1(Box::new(Psi::GgBar))
    }

    /// Evaluates at `v`.
    pub fn eval(&self, v: f64, dims: Dims) -> f64 {
        self.eval_parts(v, (1.0 - v) / v, dims)
    }

    /// Evaluates with `odds = (1−v)/v = S/‖U‖²` supplied directly, which avoids
    /// the cancellation in `1 − v` near `v = 1`.
    pub fn eval_parts(&self, v: f64, odds: f64, dims: Dims) -> f64 {
        match self {
            Psi::Identity => 1.0,
            Psi::Constant(c) => *c,
            Psi::BrBar(ell) => {
                let mut total = 1.0;
                let mut power = 1.0;
                for c in br_coefficients(dims.p, dims.m, *ell) {
                    power *= odds;
                    total += c * power;
                }
                total
            }
            Psi::GgBar => {
                let p = dims.p as f64;
                let g_js = (p - 2.0) / (dims.m as f64 + 2.0) * odds;
                1.0 / (1.0 - g_js.min((p - 2.0) / p))
            }
            Psi::Psi0(inner) => {
                let bar = inner.eval_parts(v, odds, dims);
                0f64.max(bar.min(2.0 * dims.c() * v - bar))
            }
            Psi::Psi1(inner) => {
                let bar = inner.eval_parts(v, odds, dims);
                1f64.max(bar.min(2.0 * dims.c() * v - bar))
            }
            Psi::Kr(inner) => inner.eval_parts(v, odds, dims).min(dims.c() * v),
        }
    }

    /// An upper bound on `|ψ(v)|` over `(0,1)`, or `None` when unbounded.
    pub fn sup(&self, dims: Dims) -> Option<f64> {
        let c = dims.c().max(0.0);
        match self {
            Psi::Identity => Some(1.0),
            Psi::Constant(k) => Some(k.abs()),
            Psi::BrBar(0) => Some(1.0),
            Psi::BrBar(_) => None,
            Psi::GgBar => {
                if dims.p >= 3 {
                    Some(dims.p as f64 / 2.0)
                } else {
                    None
                }
            }
            // min{a, 2cv − a} ≤ cv ≤ c
            Psi::Psi0(inner) => Some(c.min(inner.sup(dims).unwrap_or(f64::INFINITY))),
            Psi::Psi1(inner) => Some(1f64.max(c.min(inner.sup(dims).unwrap_or(f64::INFINITY)))),
            Psi::Kr(inner) => match (inner.sup(dims), inner.is_nonnegative(dims)) {
                (Some(s), true) => Some(s.min(c)),
                (None, true) => Some(c),
                (s, false) => s,
            },
        }
    }

    /// Whether `ψ ≥ 0` on all of `(0,1)`.
    pub fn is_nonnegative(&self, dims: Dims) -> bool {
        match self {
            Psi::Identity | Psi::GgBar | Psi::Psi0(_) | Psi::Psi1(_) => true,
            Psi::Constant(k) => *k >= 0.0,
            Psi::BrBar(ell) => br_coefficients(dims.p, dims.m, *ell).iter().all(|c| *c >= 0.0),
            Psi::Kr(inner) => inner.is_nonnegative(dims),
        }
    }

    /// Factors built on `a_j/b_j` need `m >= 1`.
    pub fn needs_replicates(&self) -> bool {
        match self {
            Psi::BrBar(ell) => *ell > 0,
            Psi::Psi0(inner) | Psi::Psi1(inner) | Psi::Kr(inner) => inner.needs_replicates(),
            _ => false,
        }
    }

    fn needs_p3(&self) -> bool {
        match self {
            Psi::GgBar => true,
            Psi::Psi0(inner) | Psi::Psi1(inner) | Psi::Kr(inner) => inner.needs_p3(),
            _ => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Psi::Identity => "LS".into(),
            Psi::Constant(c) => format!("CONST({c})"),
            Psi::BrBar(ell) => format!("BR{ell}"),
            Psi::GgBar => "GG".into(),
            Psi::Psi0(inner) if **inner == Psi::Identity => "TLS".into(),
            Psi::Psi1(inner) => match **inner {
                Psi::BrBar(ell) => format!("TBR{ell}"),
                Psi::GgBar => "TGG".into(),
                _ => format!("PSI1[{}]", inner.label()),
            },
            Psi::Kr(inner) if **inner == Psi::Identity => "TLS2".into(),
            Psi::Psi0(inner) => format!("PSI0[{}]", inner.label()),
            Psi::Kr(inner) => format!("KR[{}]", inner.label()),
        }
    }

    /// Checks the factor is defined at these dimensions.
    pub fn check(&self, dims: Dims) -> Result<(), EstimatorError> {
        if self.needs_replicates() && dims.m == 0 {
            return Err(EstimatorError::NeedsReplicates { estimator: self.label() });
        }
        if self.needs_p3() && dims.p < 3 {
            return Err(EstimatorError::DimensionTooSmall { estimator: self.label(), min_p: 3, p: dims.p });
        }
        Ok(())
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `ψ(V)·LS`.
pub fn psi_apply(st: &SufficientStats, psi: &Psi) -> Result<f64, EstimatorError> {
    let dims = Dims::from(st);
    psi.check(dims)?;
    Ok(psi.eval_parts(st.v(), st.s_over_u(), dims) * ls(st))
}

/// `G^JS = (p−2)S / {(m+2)‖U‖²}`.
pub fn g_js(st: &SufficientStats) -> f64 {
    (st.p as f64 - 2.0) * st.s / ((st.m as f64 + 2.0) * st.u_sq)
}

/// `LS / (1 − G^K)` with `G^K = min{(p−2)/p, G^JS}`.
pub fn gg(st: &SufficientStats) -> Result<f64, EstimatorError> {
    if st.p < 3 {
        return Err(EstimatorError::DimensionTooSmall { estimator: "GG".into(), min_p: 3, p: st.p });
    }
    let p = st.p as f64;
    let g_k = g_js(st).min((p - 2.0) / p);
    Ok(ls(st) / (1.0 - g_k))
}

/// Untruncated James–Stein plug-in `LS / (1 − G^JS)`; no finite moments.
pub fn whittemore(st: &SufficientStats) -> Result<f64, EstimatorError> {
    let denom = 1.0 - g_js(st);
    if denom == 0.0 {
        return Err(EstimatorError::Singular { estimator: "W".into(), reason: "G^JS = 1" });
    }
    Ok(ls(st) / denom)
}

pub fn tgg(st: &SufficientStats) -> Result<f64, EstimatorError> {
    psi_apply(st, &Psi::tgg())
}

pub fn tls(st: &SufficientStats) -> Result<f64, EstimatorError> {
    psi_apply(st, &Psi::tls())
}

pub fn tls2(st: &SufficientStats) -> Result<f64, EstimatorError> {
    psi_apply(st, &Psi::tls2())
}

pub fn tbr(st: &SufficientStats, ell: u32) -> Result<f64, EstimatorError> {
    psi_apply(st, &Psi::tbr(ell))
}
