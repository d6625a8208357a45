use std::path::Path;

use eivreg::canonical::{canonicalize, load_csv, sufficient_stats, SufficientStats};
use eivreg::estimators::{parse_list, BayesHyperparams, Estimator, EvalContext, PhiPoly, Psi};
use eivreg::mc::{self, format_number, Format, SimConfig};
use eivreg::moments::{
    bias_br_exact, bias_ls_exact, bias_phi_exact, bias_psi_exact, mse_ls_exact, mse_phi_exact, mse_psi_exact,
    MixtureParams, QuadratureControl, SeriesControl, SeriesValue,
};
use eivreg::{fixture, Error as CoreError};

use crate::args::{EstimateArgs, ExactArgs, FixtureArgs, Preset, Quantity, SimulateArgs};
use crate::{render_table, CliError, Outcome};

pub const PRESET_REPS: u64 = 100_000;
pub const PRESET_SEED: u64 = 1;

fn estimator_list(list: &str) -> Result<Vec<Estimator>, CliError> {
    parse_list(list).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn estimate(args: &EstimateArgs) -> Result<Outcome, CliError> {
    let ests = estimator_list(&args.estimators)?;
    let bayes = BayesHyperparams::new(args.bayes_c1, args.bayes_c2).map_err(|e| CliError::Usage(e.to_string()))?;
    let sample = load_csv(&args.input).map_err(CoreError::from)?;
    let st = sufficient_stats(&canonicalize(&sample)).map_err(CoreError::from)?;
    let ctx = EvalContext { bayes, known_sigma2: args.known_sigma2 };
    let full = args.output.full_precision;
    let root_n = (st.n() as f64).sqrt();
    let mut rows = Vec::with_capacity(ests.len());
    for est in &ests {
        let row = match est.evaluate(&st, &ctx) {
            Ok(res) => {
                let mut notes = vec![res.finite_moment_note.to_string()];
                notes.extend(res.warnings);
                let intercept = res.intercept.unwrap_or(f64::NAN);
                vec![
                    res.estimator_id,
                    format_number(res.slope, full),
                    format_number(intercept, full),
                    format_number(intercept / root_n, full),
                    notes.join("; "),
                ]
            }
            Err(e) => vec![est.id(), "undefined".into(), "undefined".into(), "undefined".into(), e.to_string()],
        };
        rows.push(row);
    }
    let mut text = stats_comment(&st, full);
    text.push_str(&render_table(
        &["estimator", "slope", "intercept", "intercept_raw", "note"],
        &rows,
        args.output.format,
    ));
    Ok(Outcome::text(text))
}

fn stats_comment(st: &SufficientStats, full: bool) -> String {
    let f = |x: f64| format_number(x, full);
    format!(
        "# n={} r={} p={} m={} UtZ={} |U|^2={} |Z|^2={} U0={} Z0={} S={} S/|U|^2={}\n",
        st.n(),
        st.r,
        st.p,
        st.m,
        f(st.t_uz),
        f(st.u_sq),
        f(st.z_sq),
        f(st.u0),
        f(st.z0),
        f(st.s),
        f(st.s_over_u())
    )
}

/// Zero asks for a seed from system entropy; never returns zero.
fn resolve_seed(seed: u64) -> u64 {
    if seed != 0 {
        return seed;
    }
    loop {
        let s: u64 = rand::random();
        if s != 0 {
            return s;
        }
    }
}

fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Config { path: path.display().to_string(), source })
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let format: Format = args.output.format;
    let full = args.output.full_precision;
    if let Some(Preset::Table4) = args.preset {
        let reps = args.reps.unwrap_or(PRESET_REPS);
        let seed = resolve_seed(args.seed.unwrap_or(PRESET_SEED));
        let suite = mc::table4_suite(reps, seed, args.workers).map_err(CoreError::from)?;
        let mut text = format!("# preset=table4 seed={seed} reps={reps}\n");
        text.push_str(&mc::render_suite(&suite, format, full));
        return Ok(Outcome::text(text));
    }
    let path = args.config.as_deref().ok_or_else(|| CliError::Usage("--config or --preset is required".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.seed = resolve_seed(cfg.seed);
    let res = mc::run_study_with_workers(&cfg, args.workers).map_err(CoreError::from)?;
    Ok(Outcome::text(mc::render_result(&res, format, full)))
}

enum ExactKind {
    Ls,
    Phi(PhiPoly, Option<u32>),
    Psi(Psi),
}

fn exact_kind(est: &Estimator, p: u32, m: u32) -> Result<ExactKind, CliError> {
    Ok(match *est {
        Estimator::Ls => ExactKind::Ls,
        Estimator::Br(l) => ExactKind::Phi(PhiPoly::bias_reducing(p, m, l), Some(l)),
        Estimator::BrDoubled(l) => ExactKind::Phi(PhiPoly::bias_reducing_doubled(p, m, l), None),
        Estimator::Stefanski(l) => ExactKind::Phi(PhiPoly::stefanski(p, m, l), None),
        Estimator::Tls => ExactKind::Psi(Psi::tls()),
        Estimator::Tls2 => ExactKind::Psi(Psi::tls2()),
        Estimator::Tbr(l) => ExactKind::Psi(Psi::tbr(l)),
        Estimator::Gg => ExactKind::Psi(Psi::GgBar),
        Estimator::Tgg => ExactKind::Psi(Psi::tgg()),
        other => return Err(CliError::Usage(format!("no exact moments are available for {other}"))),
    })
}

pub fn exact(args: &ExactArgs) -> Result<Outcome, CliError> {
    let ests = estimator_list(&args.estimators)?;
    let mp = MixtureParams::new(args.p, args.m, args.lambda).map_err(CoreError::from)?;
    let ctl = SeriesControl::default();
    let qctl = QuadratureControl::default();
    let (beta, tau2, sigma2) = (args.beta, args.tau2, args.sigma2);
    let want_bias = args.quantity != Quantity::Mse;
    let want_mse = args.quantity != Quantity::Bias;
    let full = args.output.full_precision;
    let cell = |v: Option<SeriesValue>| match v {
        Some(v) => (format_number(v.value, full), format_number(v.tail_bound, full), v.terms.to_string()),
        None => ("NA".into(), "NA".into(), "NA".into()),
    };
    let mut rows = Vec::new();
    for est in &ests {
        let kind = exact_kind(est, args.p, args.m)?;
        let bias = if want_bias {
            Some(
                match &kind {
                    ExactKind::Ls => bias_ls_exact(&mp, beta, &ctl),
                    ExactKind::Phi(_, Some(l)) => bias_br_exact(&mp, *l, beta, &ctl),
                    ExactKind::Phi(phi, None) => bias_phi_exact(&mp, phi, beta, &ctl),
                    ExactKind::Psi(psi) => bias_psi_exact(psi, &mp, beta, &ctl, &qctl),
                }
                .map_err(|e| exact_error(est, "bias", e))?,
            )
        } else {
            None
        };
        let mse = if want_mse {
            Some(
                match &kind {
                    ExactKind::Ls => mse_ls_exact(&mp, beta, tau2, sigma2, &ctl),
                    ExactKind::Phi(phi, _) => mse_phi_exact(&mp, phi, beta, tau2, sigma2, &ctl),
                    ExactKind::Psi(psi) => mse_psi_exact(psi, &mp, beta, tau2, sigma2, &ctl, &qctl),
                }
                .map_err(|e| exact_error(est, "MSE", e))?,
            )
        } else {
            None
        };
        let (b, bb, bt) = cell(bias);
        let (m, mb, mt) = cell(mse);
        rows.push(vec![est.id(), b, bb, bt, m, mb, mt]);
    }
    let mut text = format!(
        "# p={} m={} lambda={} beta={} tau2={} sigma2={}\n",
        args.p,
        args.m,
        format_number(args.lambda, full),
        format_number(beta, full),
        format_number(tau2, full),
        format_number(sigma2, full)
    );
    text.push_str(&render_table(
        &["estimator", "bias", "bias_tail_bound", "bias_terms", "mse", "mse_tail_bound", "mse_terms"],
        &rows,
        args.output.format,
    ));
    text.push_str(
        "# tail_bound: certified bound on the omitted Poisson tail; quadrature error is below 1e-10 per term\n",
    );
    Ok(Outcome::text(text))
}

fn exact_error(est: &Estimator, what: &str, e: eivreg::MomentError) -> CliError {
    CliError::Usage(format!("{est} {what}: {e}"))
}

pub fn fixture(args: &FixtureArgs) -> Result<Outcome, CliError> {
    if args.n < 2 || args.r < 1 {
        return Err(CliError::Usage("need n >= 2 and r >= 1".into()));
    }
    let st = SufficientStats::new(
        args.t_uz,
        args.u_sq,
        args.z_sq,
        args.u0,
        args.z0,
        args.s,
        args.n - 1,
        args.n * (args.r - 1),
        args.r,
    )
    .map_err(CoreError::from)?;
    let sample = fixture::from_stats(&st).map_err(CoreError::from)?;
    let mut buf = Vec::new();
    fixture::write_csv(&sample, &mut buf).map_err(CoreError::from)?;
    Ok(Outcome::text(String::from_utf8(buf).expect("csv output is UTF-8")))
}
