use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::estimators::{BayesHyperparams, Estimator, EvalContext};

/// How the latent canonical means `ξ` are specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiMode {
    /// Every coordinate of `ξ` equals this value.
    Constant(f64),
    /// `ξ` given in full; length must be `p = n − 1`.
    Explicit(Vec<f64>),
}

/// Whether replications draw the canonical statistics directly or generate
/// raw `(Y, X)` data and reduce it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    #[default]
    Canonical,
    Raw,
}

/// A Monte Carlo experiment.
///
/// `alpha` and `theta` are the canonical means of `Z₀` (less `βθ`) and `U₀`;
/// slope estimators other than `PB` do not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub r: usize,
    pub beta: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub theta: f64,
    pub tau2: f64,
    /// `σ² = σ_x²/r`, the variance of each group mean.
    pub sigma2: f64,
    pub xi: XiMode,
    pub estimators: Vec<String>,
    pub reps: u64,
    pub seed: u64,
    #[serde(default)]
    pub level: Level,
    /// Evaluate every estimator on the same draws instead of giving each its
    /// own substreams.
    #[serde(default)]
    pub paired: bool,
    #[serde(default = "default_c")]
    pub bayes_c1: f64,
    #[serde(default = "default_c")]
    pub bayes_c2: f64,
}

fn default_c() -> f64 {
    1.0
}

impl SimConfig {
    pub fn p(&self) -> usize {
        self.n - 1
    }

    pub fn m(&self) -> usize {
        self.n * (self.r - 1)
    }

    /// `ξ` expanded to length `p`.
    pub fn xi_vector(&self) -> Vec<f64> {
        match &self.xi {
            XiMode::Constant(c) => vec![*c; self.p()],
            XiMode::Explicit(v) => v.clone(),
        }
    }

    /// `λ = ‖ξ‖²/(2σ²)`.
    pub fn lambda(&self) -> f64 {
        let norm2: f64 = match &self.xi {
            XiMode::Constant(c) => self.p() as f64 * c * c,
            XiMode::Explicit(v) => v.iter().map(|x| x * x).sum(),
        };
        norm2 / (2.0 * self.sigma2)
    }

    pub fn parsed_estimators(&self) -> Result<Vec<Estimator>, SimError> {
        self.estimators.iter().map(|s| s.parse::<Estimator>().map_err(SimError::from)).collect()
    }

    pub fn eval_context(&self) -> Result<EvalContext, SimError> {
        Ok(EvalContext { bayes: BayesHyperparams::new(self.bayes_c1, self.bayes_c2)?, known_sigma2: Some(self.sigma2) })
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.n < 4 {
            return fail(format!("n must be >= 4, got {}", self.n));
        }
        if self.r < 1 {
            return fail("r must be >= 1".into());
        }
        if self.reps < 1 {
            return fail("reps must be >= 1".into());
        }
        for (name, v) in [("beta", self.beta), ("alpha", self.alpha), ("theta", self.theta)] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("tau2", self.tau2), ("sigma2", self.sigma2)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        match &self.xi {
            XiMode::Constant(c) if !c.is_finite() => return fail("xi constant must be finite".into()),
            XiMode::Explicit(v) if v.len() != self.p() => {
                return fail(format!("explicit xi must have length p = {}, got {}", self.p(), v.len()))
            }
            XiMode::Explicit(v) if v.iter().any(|x| !x.is_finite()) => return fail("xi entries must be finite".into()),
            _ => {}
        }
        if self.estimators.is_empty() {
            return fail("no estimators requested".into());
        }
        self.parsed_estimators()?;
        self.eval_context()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(n: usize, xi: f64, sigma2: f64) -> SimConfig {
        SimConfig {
            n,
            r: 2,
            beta: -5.0,
            alpha: 0.0,
            theta: 0.0,
            tau2: 10.0,
            sigma2,
            xi: XiMode::Constant(xi),
            estimators: vec!["LS".into()],
            reps: 10,
            seed: 1,
            level: Level::Canonical,
            paired: false,
            bayes_c1: 1.0,
            bayes_c2: 1.0,
        }
    }

    #[test]
    fn lambda_from_constant_fill() {
        assert!((cell(10, 0.1f64.sqrt(), 10.0).lambda() - 0.045).abs() < 1e-15);
        assert!((cell(100, 5f64.sqrt(), 1.0).lambda() - 247.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let json = r#"{"n":30,"r":2,"beta":-5,"tau2":10,"sigma2":1,
            "xi":{"constant":2.2360679774997896},"estimators":["LS","BR1"],"reps":100,"seed":7}"#;
        let cfg: SimConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.alpha, 0.0);
        assert_eq!(cfg.level, Level::Canonical);
        assert!(!cfg.paired);
        assert_eq!(cfg.bayes_c1, 1.0);
        cfg.validate().unwrap();
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut c = cell(10, 1.0, 1.0);
        c.validate().unwrap();
        c.estimators = vec!["NOPE".into()];
        assert!(c.validate().is_err());
        let mut c = cell(10, 1.0, 1.0);
        c.xi = XiMode::Explicit(vec![1.0; 3]);
        assert!(c.validate().is_err());
        let mut c = cell(3, 1.0, 1.0);
        assert!(c.validate().is_err());
        c.n = 10;
        c.tau2 = 0.0;
        assert!(c.validate().is_err());
        let bad: Result<SimConfig, _> = serde_json::from_str(r#"{"n":10,"bogus":1}"#);
        assert!(bad.is_err());
    }
}
