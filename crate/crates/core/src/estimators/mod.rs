//! Slope and intercept estimators, all functions of [`SufficientStats`].

mod other;
mod phi;
mod psi;

use std::fmt;
use std::str::FromStr;

pub use other::{
    bayes_pb, bayes_pm_intercept, br_known_variance, intercept_of, ir, ml, psi0_known_variance,
    psi0_known_variance_factor, standardize, BayesHyperparams,
};
pub use phi::{
    br, br_coefficients, br_doubled, falling_products, ls, mm, mm_correction, phi_star, phi_star_star,
    phi_star_star_value, phi_star_value, rising_products, stefanski, PhiPoly,
};
pub use psi::{g_js, gg, psi_apply, tbr, tgg, tls, tls2, whittemore, Dims, Psi};

use crate::canonical::SufficientStats;
use crate::error::EstimatorError;

/// Every estimator the library can evaluate by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Ls,
    Mm,
    Stefanski(u32),
    Br(u32),
    BrDoubled(u32),
    /// φ*_ell with the MM correction as the inner φ̄.
    PhiStar(u32),
    PhiStarStar(u32),
    Tls,
    Tls2,
    Tbr(u32),
    Gg,
    Tgg,
    Whittemore,
    Ml,
    Ir,
    Bayes,
    BrKnown(u32),
    TlsKnown,
    /// Ignores the data; used to sanity-check simulation bookkeeping.
    Fixed(f64),
}

/// Whether the estimator's moments exist in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentNote {
    MomentsExist,
    NoFiniteMoments,
}

impl fmt::Display for MomentNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentNote::MomentsExist => "moments-exist",
            MomentNote::NoFiniteMoments => "no-finite-moments",
        })
    }
}

/// Inputs beyond the statistics that some estimators need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalContext {
    pub bayes: BayesHyperparams,
    /// `σ² = σ_x²/r`, required by the known-variance estimators.
    pub known_sigma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub estimator_id: String,
    pub slope: f64,
    pub intercept: Option<f64>,
    pub finite_moment_note: MomentNote,
    pub warnings: Vec<String>,
}

impl Estimator {
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn moment_note(&self) -> MomentNote {
        match self {
            Estimator::Mm | Estimator::Whittemore | Estimator::Ml | Estimator::Ir => MomentNote::NoFiniteMoments,
            _ => MomentNote::MomentsExist,
        }
    }

    /// Whether evaluation can hit a pole on valid statistics.
    pub fn can_fail(&self) -> bool {
        self.moment_note() == MomentNote::NoFiniteMoments
    }

    /// Slope only; the fast path used by the simulation engine.
    pub fn slope(&self, st: &SufficientStats, ctx: &EvalContext) -> Result<f64, EstimatorError> {
        match *self {
            Estimator::Ls => Ok(ls(st)),
            Estimator::Mm => mm(st),
            Estimator::Stefanski(l) => stefanski(st, l),
            Estimator::Br(l) => br(st, l),
            Estimator::BrDoubled(l) => br_doubled(st, l),
            Estimator::PhiStar(l) => {
                if st.m == 0 {
                    return Err(EstimatorError::NeedsReplicates { estimator: self.id() });
                }
                phi_star(st, &mm_correction(st.p, st.m), l)
            }
            Estimator::PhiStarStar(l) => phi_star_star(st, l),
            Estimator::Tls => tls(st),
            Estimator::Tls2 => tls2(st),
            Estimator::Tbr(l) => tbr(st, l),
            Estimator::Gg => gg(st),
            Estimator::Tgg => tgg(st),
            Estimator::Whittemore => whittemore(st),
            Estimator::Ml => ml(st),
            Estimator::Ir => ir(st),
            Estimator::Bayes => Ok(bayes_pb(st, &ctx.bayes)),
            Estimator::BrKnown(l) => Ok(br_known_variance(&self.known(st, ctx)?, l)),
            Estimator::TlsKnown => Ok(psi0_known_variance(&self.known(st, ctx)?, &|_| 1.0)),
            Estimator::Fixed(v) => Ok(v),
        }
    }

    fn known(&self, st: &SufficientStats, ctx: &EvalContext) -> Result<SufficientStats, EstimatorError> {
        let sigma2 = ctx
            .known_sigma2
            .ok_or_else(|| EstimatorError::Hyperparameter(format!("{} needs the known error variance", self.id())))?;
        standardize(st, sigma2)
    }

    /// Moment-window warnings at dimension `p`.
    pub fn warnings(&self, p: u32) -> Vec<String> {
        let mut out = Vec::new();
        let ell = match *self {
            Estimator::Br(l) | Estimator::BrDoubled(l) | Estimator::BrKnown(l) | Estimator::PhiStarStar(l) => l,
            Estimator::Tbr(l) => {
                if l > 0 && 4 * l + 2 >= p {
                    out.push(format!("l = {l} >= (p-2)/4: the untruncated BR{l} has infinite MSE at p = {p}"));
                }
                return out;
            }
            _ => return out,
        };
        if ell == 0 {
            return out;
        }
        if 2 * ell + 2 >= p {
            out.push(format!("l = {ell} >= (p-2)/2: the exact bias expression does not apply at p = {p}"));
        }
        if 4 * ell + 2 >= p {
            out.push(format!("l = {ell} >= (p-2)/4: the MSE is infinite at p = {p}"));
        }
        out
    }

    /// Slope, intercept and annotations.
    pub fn evaluate(&self, st: &SufficientStats, ctx: &EvalContext) -> Result<EstimateResult, EstimatorError> {
        let slope = self.slope(st, ctx)?;
        let intercept = match self {
            Estimator::Bayes => bayes_pm_intercept(st, &ctx.bayes),
            _ => intercept_of(st, slope),
        };
        Ok(EstimateResult {
            estimator_id: self.id(),
            slope,
            intercept: Some(intercept),
            finite_moment_note: self.moment_note(),
            warnings: self.warnings(st.p),
        })
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Ls => write!(f, "LS"),
            Estimator::Mm => write!(f, "MM"),
            Estimator::Stefanski(l) => write!(f, "ST{l}"),
            Estimator::Br(l) => write!(f, "BR{l}"),
            Estimator::BrDoubled(l) => write!(f, "BR{l}X2"),
            Estimator::PhiStar(l) => write!(f, "PHISTAR{l}"),
            Estimator::PhiStarStar(l) => write!(f, "PHISS{l}"),
            Estimator::Tls => write!(f, "TLS"),
            Estimator::Tls2 => write!(f, "TLS2"),
            Estimator::Tbr(l) => write!(f, "TBR{l}"),
            Estimator::Gg => write!(f, "GG"),
            Estimator::Tgg => write!(f, "TGG"),
            Estimator::Whittemore => write!(f, "W"),
            Estimator::Ml => write!(f, "ML"),
            Estimator::Ir => write!(f, "IR"),
            Estimator::Bayes => write!(f, "PB"),
            Estimator::BrKnown(l) => write!(f, "BRKV{l}"),
            Estimator::TlsKnown => write!(f, "TLSKV"),
            Estimator::Fixed(v) => write!(f, "FIXED({v})"),
        }
    }
}

fn order(s: &str, prefix: &str) -> Option<u32> {
    let rest = s.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

impl FromStr for Estimator {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        let fixed = match up.as_str() {
            "LS" => Some(Estimator::Ls),
            "MM" => Some(Estimator::Mm),
            "TLS" => Some(Estimator::Tls),
            "TLS2" | "KR" => Some(Estimator::Tls2),
            "GG" => Some(Estimator::Gg),
            "TGG" => Some(Estimator::Tgg),
            "W" => Some(Estimator::Whittemore),
            "ML" => Some(Estimator::Ml),
            "IR" => Some(Estimator::Ir),
            "PB" | "BAYES" => Some(Estimator::Bayes),
            "TLSKV" => Some(Estimator::TlsKnown),
            _ => None,
        };
        if let Some(e) = fixed {
            return Ok(e);
        }
        if let Some(inner) = up.strip_prefix("FIXED(").and_then(|r| r.strip_suffix(')')) {
            if let Ok(v) = inner.parse::<f64>() {
                return Ok(Estimator::Fixed(v));
            }
        }
        if let Some(body) = up.strip_suffix("X2") {
            if let Some(l) = order(body, "BR") {
                return Ok(Estimator::BrDoubled(l));
            }
        }
        let ordered: [(&str, fn(u32) -> Estimator); 6] = [
            ("BRKV", Estimator::BrKnown),
            ("PHISTAR", Estimator::PhiStar),
            ("PHISS", Estimator::PhiStarStar),
            ("TBR", Estimator::Tbr),
            ("BR", Estimator::Br),
            ("ST", Estimator::Stefanski),
        ];
        for (prefix, make) in ordered {
            if let Some(l) = order(&up, prefix) {
                return Ok(make(l));
            }
        }
        Err(EstimatorError::Unknown(s.trim().to_string()))
    }
}

/// Parses a comma-separated list of estimator ids.
pub fn parse_list(list: &str) -> Result<Vec<Estimator>, EstimatorError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        let all = [
            Estimator::Ls,
            Estimator::Mm,
            Estimator::Stefanski(2),
            Estimator::Br(5),
            Estimator::BrDoubled(1),
            Estimator::PhiStar(1),
            Estimator::PhiStarStar(3),
            Estimator::Tls,
            Estimator::Tls2,
            Estimator::Tbr(5),
            Estimator::Gg,
            Estimator::Tgg,
            Estimator::Whittemore,
            Estimator::Ml,
            Estimator::Ir,
            Estimator::Bayes,
            Estimator::BrKnown(2),
            Estimator::TlsKnown,
            Estimator::Fixed(-5.0),
        ];
        for e in all {
            assert_eq!(e.id().parse::<Estimator>().unwrap(), e, "{e}");
        }
        assert_eq!("br1".parse::<Estimator>().unwrap(), Estimator::Br(1));
        assert_eq!(" kr ".parse::<Estimator>().unwrap(), Estimator::Tls2);
    }

    #[test]
    fn unknown_ids() {
        for bad in ["", "BR", "BRX", "BR-1", "XYZ", "TBR1.5"] {
            assert!(matches!(bad.parse::<Estimator>(), Err(EstimatorError::Unknown(_))), "{bad}");
        }
        assert!(parse_list("LS,BR1,nope").is_err());
        assert_eq!(parse_list("LS, BR1").unwrap(), vec![Estimator::Ls, Estimator::Br(1)]);
    }

    #[test]
    fn intercept_is_canonical() {
        let st = SufficientStats::new(2.0, 3.0, 5.0, 1.5, -0.7, 1.5, 10, 11, 2).unwrap();
        let ctx = EvalContext::default();
        for e in [Estimator::Ls, Estimator::Br(1), Estimator::Tgg, Estimator::Ml] {
            let r = e.evaluate(&st, &ctx).unwrap();
            assert_eq!(r.intercept.unwrap(), st.z0 - r.slope * st.u0);
        }
        let pb = Estimator::Bayes.evaluate(&st, &ctx).unwrap();
        assert_eq!(pb.intercept.unwrap(), bayes_pm_intercept(&st, &ctx.bayes));
    }

    #[test]
    fn window_warnings() {
        assert!(Estimator::Br(1).warnings(10).is_empty());
        assert_eq!(Estimator::Br(2).warnings(10).len(), 1);
        assert_eq!(Estimator::Br(5).warnings(9).len(), 2);
        assert_eq!(Estimator::Tbr(5).warnings(9).len(), 1);
        assert!(Estimator::Ls.warnings(3).is_empty());
    }

    #[test]
    fn known_variance_needs_sigma() {
        let st = SufficientStats::new(2.0, 3.0, 5.0, 0.0, 0.0, 0.0, 10, 0, 1).unwrap();
        assert!(Estimator::BrKnown(1).slope(&st, &EvalContext::default()).is_err());
        let ctx = EvalContext { known_sigma2: Some(1.0), ..Default::default() };
        assert!(Estimator::BrKnown(1).slope(&st, &ctx).is_ok());
        assert!(matches!(Estimator::Br(1).slope(&st, &ctx), Err(EstimatorError::NeedsReplicates { .. })));
    }

    #[test]
    fn moment_notes() {
        assert_eq!(Estimator::Mm.moment_note(), MomentNote::NoFiniteMoments);
        assert_eq!(Estimator::Tgg.moment_note(), MomentNote::MomentsExist);
        assert_eq!(MomentNote::NoFiniteMoments.to_string(), "no-finite-moments");
    }
}
