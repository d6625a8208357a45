//! Poisson-weighted series `Σ_k g(k) P_λ(k)` with a certified truncation bound.

use statrs::function::gamma::ln_gamma;

use crate::error::MomentError;

/// Truncation controls for Poisson series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub abs_tol: f64,
    pub max_terms: u64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { abs_tol: 1e-12, max_terms: 100_000 }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<(), MomentError> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(MomentError::InvalidParameter {
                what: "abs_tol",
                requirement: "positive",
                value: self.abs_tol,
            });
        }
        Ok(())
    }
}

/// A truncated series value and a bound on everything left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Upper bound on `|exact − value|` from truncation and skipped terms.
    pub tail_bound: f64,
    /// Number of indices visited.
    pub terms: u64,
}

impl SeriesValue {
    pub fn exact(value: f64) -> Self {
        Self { value, tail_bound: 0.0, terms: 0 }
    }

    /// `k·self`, with the bound scaled by `|k|`.
    pub fn scaled(self, k: f64) -> Self {
        Self { value: k * self.value, tail_bound: k.abs() * self.tail_bound, terms: self.terms }
    }

    /// `self + c` for a constant `c`.
    pub fn shifted(self, c: f64) -> Self {
        Self { value: self.value + c, ..self }
    }
}

/// `ln(k!) − ln(√(2πk)(k/e)^k)`, the Stirling remainder.
fn stirling_error(k: u64) -> f64 {
    let n = k as f64;
    if k <= 15 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// `x ln(x/μ) + μ − x`, evaluated without cancellation when `x ≈ μ`.
fn deviance(x: f64, mu: f64) -> f64 {
    if (x - mu).abs() < 0.1 * (x + mu) {
        let v = (x - mu) / (x + mu);
        let mut s = (x - mu) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                break;
            }
            s = next;
        }
        s
    } else {
        x * (x / mu).ln() + mu - x
    }
}

/// `ln P_λ(k)` in saddle-point form, accurate for large `k` and `λ`;
/// `λ = 0` puts all mass at `k = 0`.
pub fn ln_poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -lambda;
    }
    let n = k as f64;
    -stirling_error(k) - deviance(n, lambda) - 0.5 * (2.0 * std::f64::consts::PI * n).ln()
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    ln_poisson_pmf(k, lambda).exp()
}

/// Upper bound on `P(K ≥ n)` given `P(K = n)`, valid once `n + 1 > λ`:
/// the ratio of consecutive terms beyond `n` is at most `λ/(n+1)`.
fn geometric_tail(pmf_n: f64, n: u64, lambda: f64) -> Option<f64> {
    let q = lambda / (n as f64 + 1.0);
    (q < 1.0).then(|| pmf_n / (1.0 - q))
}

pub fn check_lambda(lambda: f64) -> Result<(), MomentError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(MomentError::InvalidParameter { what: "lambda", requirement: "finite and >= 0", value: lambda });
    }
    Ok(())
}

/// `E[g(K)]` for `K ~ Poisson(λ)`.
///
/// `tail(k)` must bound `|g(k)|` and `E[|g(K)| | K ≥ k]`; for a summand with
/// nonincreasing magnitude, `|g(k)|` itself works. Summation stops once
/// `P(K ≥ k)·tail(k)` falls below `abs_tol`. Left-tail terms with
/// `P_λ(k)·tail(k)` below `abs_tol/(10(λ+1))` are skipped without evaluating
/// `g`, and their bound is carried into `tail_bound`.
pub fn poisson_series<G, B>(lambda: f64, ctl: &SeriesControl, mut g: G, tail: B) -> Result<SeriesValue, MomentError>
where
    G: FnMut(u64) -> Result<f64, MomentError>,
    B: Fn(u64) -> f64,
{
    check_lambda(lambda)?;
    ctl.validate()?;
    let skip_below = ctl.abs_tol / (10.0 * (lambda + 1.0));
    let mut sum = 0.0;
    let mut cdf = 0.0;
    let mut skipped = 0.0;
    let mut last_bound = f64::INFINITY;
    for k in 0..ctl.max_terms {
        let pmf = poisson_pmf(k, lambda);
        let b = tail(k);
        if (k as f64) < lambda && pmf * b < skip_below {
            skipped += pmf * b;
        } else {
            let term = g(k)?;
            if !term.is_finite() {
                return Err(MomentError::Divergent(k as f64));
            }
            sum += pmf * term;
        }
        cdf += pmf;

        let next = k + 1;
        let pmf_next = if lambda == 0.0 { 0.0 } else { pmf * lambda / next as f64 };
        let mass = geometric_tail(pmf_next, next, lambda).unwrap_or_else(|| (1.0 - cdf).max(0.0));
        let remaining = if mass == 0.0 { 0.0 } else { mass * tail(next) };
        last_bound = remaining + skipped;
        if remaining.is_finite() && last_bound < ctl.abs_tol {
            return Ok(SeriesValue { value: sum, tail_bound: last_bound, terms: next });
        }
    }
    Err(MomentError::SeriesNonConvergence { terms: ctl.max_terms, bound: last_bound })
}

/// [`poisson_series`] for an infallible summand.
pub fn poisson_expectation<G, B>(lambda: f64, ctl: &SeriesControl, g: G, tail: B) -> Result<SeriesValue, MomentError>
where
    G: Fn(u64) -> f64,
    B: Fn(u64) -> f64,
{
    poisson_series(lambda, ctl, |k| Ok(g(k)), tail)
}

/// Bound on `E[K | K ≥ k]` for `K ~ Poisson(λ)`: `k + q/(1−q)` with
/// `q = λ/(k+1)`, infinite while `q ≥ 1`.
pub fn conditional_mean_bound(k: u64, lambda: f64) -> f64 {
    let q = lambda / (k as f64 + 1.0);
    if q < 1.0 {
        k as f64 + q / (1.0 - q)
    } else {
        f64::INFINITY
    }
}

/// Both sides of `λE[g(K)] = E[K g(K−1)]` for a nonnegative nonincreasing `g`.
pub fn hudson_sides<G>(lambda: f64, ctl: &SeriesControl, g: G) -> Result<(SeriesValue, SeriesValue), MomentError>
where
    G: Fn(u64) -> f64,
{
    let lhs = poisson_expectation(lambda, ctl, &g, |k| g(k).abs())?.scaled(lambda);
    let rhs = poisson_expectation(
        lambda,
        ctl,
        |k| if k == 0 { 0.0 } else { k as f64 * g(k - 1) },
        |k| if k == 0 { 0.0 } else { g(k - 1).abs() * conditional_mean_bound(k, lambda) },
    )?;
    Ok((lhs, rhs))
}
