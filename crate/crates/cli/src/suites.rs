//! Numerical verification suites behind `eivreg verify`.

use eivreg::canonical::{canonicalize, sufficient_stats, Helmert, RepeatedMeasuresSample};
use eivreg::estimators::{self as est, br_coefficients, falling_products, rising_products, Psi};
use eivreg::mc::{design_cells, StreamFactory};
use eivreg::moments::{
    bias_br_exact, bias_theorem1_verify, conditional_integrals_closed_form, conditional_integrals_quadrature,
    control_excess, e1, e2, hudson_sides, mse_ls_exact, mse_psi_exact, verify_domination, MixtureParams,
    QuadratureControl, SeriesControl,
};
use eivreg::MomentError;
use rand::Rng;

use crate::args::SuiteName;

/// One verification result; passes when `value ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { suite, name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

const DOMINATION_P: [u32; 6] = [3, 5, 9, 10, 29, 99];
const DOMINATION_M: [u32; 5] = [1, 2, 10, 30, 100];
const GRID: usize = 4000;
pub const CHAIN_P: [u32; 3] = [10, 30, 100];
pub const CHAIN_LAMBDA: [f64; 3] = [0.045, 2.25, 72.5];

pub fn run(suite: SuiteName, inject_bad_psi: bool) -> Result<Vec<Check>, MomentError> {
    let mut out = Vec::new();
    let all = suite == SuiteName::All;
    if all || suite == SuiteName::Domination {
        out.extend(domination(inject_bad_psi)?);
    }
    if all || suite == SuiteName::Hudson {
        out.extend(hudson()?);
    }
    if all || suite == SuiteName::Bias {
        out.extend(bias()?);
    }
    if all || suite == SuiteName::Identities {
        out.extend(identities()?);
    }
    Ok(out)
}

/// Worst excess of the two conditions over all `(p, m)` pairs for which
/// `pair` yields factors.
fn domination_family(name: &str, pair: impl Fn(u32, u32) -> Option<(Psi, Psi)>) -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut failed = false;
    let mut count = 0;
    for p in DOMINATION_P {
        for m in DOMINATION_M {
            let Some((psi, bar)) = pair(p, m) else { continue };
            let r = verify_domination(&psi, &bar, p, m, GRID);
            worst = worst.max(r.max_square_excess.max(r.max_delta));
            failed |= !r.passed();
            count += 1;
        }
    }
    let mut check = Check::new("domination", format!("{name} over {count} (p,m) pairs"), worst, 0.0);
    // The grid check uses a relative tolerance internally.
    check.passed = !failed;
    check
}

pub fn domination(inject_bad_psi: bool) -> Result<Vec<Check>, MomentError> {
    let mut out = vec![domination_family("TLS vs LS", |_, _| Some((Psi::tls(), Psi::Identity)))];
    for ell in 1..=5 {
        out.push(domination_family(&format!("TBR{ell} vs BR{ell}"), |p, _| {
            (2 * ell < p).then(|| (Psi::tbr(ell), Psi::BrBar(ell)))
        }));
    }
    out.push(domination_family("TGG vs GG", |p, _| (p >= 3).then(|| (Psi::tgg(), Psi::GgBar))));
    out.push(domination_family("KR[LS] vs LS", |_, _| Some((Psi::tls2(), Psi::Identity))));
    out.push(domination_family("KR[GG] vs GG", |_, _| Some((Psi::Kr(Box::new(Psi::GgBar)), Psi::GgBar))));
    for ell in 1..=5 {
        out.push(domination_family(&format!("KR[BR{ell}] vs BR{ell}"), |p, _| {
            (2 * ell < p).then(|| (Psi::Kr(Box::new(Psi::BrBar(ell))), Psi::BrBar(ell)))
        }));
    }
    if inject_bad_psi {
        out.push(domination_family("injected CONST(2) vs LS", |_, _| Some((Psi::Constant(2.0), Psi::Identity))));
    }

    let ctl = SeriesControl::default();
    let qctl = QuadratureControl::default();
    let mut worst = f64::NEG_INFINITY;
    let mut slack = 0.0f64;
    for cell in design_cells() {
        let mp = MixtureParams::new(cell.p() as u32, cell.m() as u32, cell.lambda())?;
        let tls = mse_psi_exact(&Psi::tls(), &mp, -5.0, 10.0, cell.sigma2, &ctl, &qctl)?;
        let ls = mse_ls_exact(&mp, -5.0, 10.0, cell.sigma2, &ctl)?;
        worst = worst.max(tls.value - ls.value);
        slack = slack.max(tls.tail_bound + ls.tail_bound + 1e-9 * ls.value);
    }
    out.push(Check::new("domination", "exact MSE(TLS) - MSE(LS) on the 12 design cells", worst, slack));
    Ok(out)
}

pub fn hudson() -> Result<Vec<Check>, MomentError> {
    let mut out = Vec::new();
    let funcs: [(&str, Box<dyn Fn(u64) -> f64>); 4] = [
        ("1/(p+2k-2), p=10", Box::new(|k| 1.0 / (8.0 + 2.0 * k as f64))),
        (
            "prod (p-2j)/(p+2k-2j), p=30",
            Box::new(|k| (1..=3).map(|j| (30.0 - 2.0 * j as f64) / (30.0 + 2.0 * k as f64 - 2.0 * j as f64)).product()),
        ),
        ("1/(k+1)^2", Box::new(|k| 1.0 / ((k as f64 + 1.0) * (k as f64 + 1.0)))),
        ("exp(-k/10)", Box::new(|k| (-(k as f64) / 10.0).exp())),
    ];
    for (name, g) in &funcs {
        let mut worst = 0.0f64;
        for lambda in [0.045f64, 0.45, 2.25, 24.75, 247.5, 1000.0] {
            // The left side is scaled by lambda, so tighten the truncation to match.
            let ctl = SeriesControl { abs_tol: 1e-13 / lambda.max(1.0), ..SeriesControl::default() };
            let (lhs, rhs) = hudson_sides(lambda, &ctl, g)?;
            worst = worst.max((lhs.value - rhs.value).abs() / lhs.value.abs().max(1.0));
        }
        out.push(Check::new("hudson", format!("lambda E[g(K)] = E[K g(K-1)], g = {name}"), worst, 1e-10));
    }
    Ok(out)
}

pub fn bias() -> Result<Vec<Check>, MomentError> {
    let ctl = SeriesControl::default();
    let qctl = QuadratureControl::default();
    let mut out = Vec::new();

    for p in CHAIN_P {
        for lambda in CHAIN_LAMBDA {
            let mp = MixtureParams::new(p, p + 1, lambda)?;
            let top = (1..=5).filter(|l| 2 * l + 2 < p).max().unwrap_or(0);
            let mut prev = bias_br_exact(&mp, 0, -5.0, &ctl)?.value.abs();
            let mut worst = f64::NEG_INFINITY;
            for ell in 1..=top {
                let cur = bias_br_exact(&mp, ell, -5.0, &ctl)?.value.abs();
                worst = worst.max(cur - prev);
                prev = cur;
            }
            out.push(Check::new(
                "bias",
                format!("|bias(BR_l)| decreasing in l = 0..{top}, p={p} lambda={lambda}"),
                worst,
                0.0,
            ));
        }
    }

    for p in CHAIN_P {
        let m = p + 1;
        let poly = est::PhiPoly::bias_reducing(p, m, 1);
        let mm = est::mm_correction(p, m);
        let candidates: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
            ("BR1", Box::new(|t| poly.eval(t))),
            ("PHISTAR1", Box::new(|t| est::phi_star_value(mm(t), t, &poly))),
            ("PHISS1", Box::new(move |t| est::phi_star_star_value(t, p, m, 1))),
        ];
        for (name, phi) in &candidates {
            for lambda in CHAIN_LAMBDA {
                let mp = MixtureParams::new(p, m, lambda)?;
                out.push(envelope_check(name, phi.as_ref(), &mp, 1, &ctl, &qctl)?);
            }
        }
    }

    // Stefanski corrections of any order that meets the coefficient condition.
    for (p, m) in [(10, 11), (10, 30), (30, 31), (30, 100), (100, 101)] {
        for ell in (1..=3).filter(|l| 2 * l + 2 < p && stefanski_condition(p, m, *l)) {
            let poly = est::PhiPoly::stefanski(p, m, ell);
            let mp = MixtureParams::new(p, m, 2.25)?;
            out.push(envelope_check(&format!("ST{ell} (m={m})"), &|t| poly.eval(t), &mp, ell, &ctl, &qctl)?);
        }
    }
    out.push(stefanski_inheritance());
    Ok(out)
}

fn envelope_check(
    name: &str,
    phi: &dyn Fn(f64) -> f64,
    mp: &MixtureParams,
    ell: u32,
    ctl: &SeriesControl,
    qctl: &QuadratureControl,
) -> Result<Check, MomentError> {
    let r = bias_theorem1_verify(phi, mp, ell, -5.0, ctl, qctl)?;
    let value = match &r.bias_phi {
        Some(b) => b.value.abs() - r.bias_ls.value.abs(),
        None => f64::INFINITY,
    };
    let mut check = Check::new(
        "bias",
        format!("envelope and |bias({name})| <= |bias(LS)|, p={} lambda={}", mp.p, mp.lambda),
        value,
        0.0,
    );
    check.passed = r.passed();
    Ok(check)
}

/// `(p/m)^ℓ ≤ 2a_ℓ/b_ℓ`, in exact integer arithmetic.
pub fn stefanski_condition(p: u32, m: u32, ell: u32) -> bool {
    let a: i128 = (1..=ell as i128).map(|i| p as i128 - 2 * i).product();
    let b: i128 = (1..=ell as i128).map(|i| m as i128 + 2 * i - 2).product();
    (p as i128).pow(ell) * b <= 2 * a * (m as i128).pow(ell)
}

/// The condition at order `ℓ` implies it at every lower order, for
/// `p ≤ 60`, `m ≤ 60`, `2ℓ < p`.
fn stefanski_inheritance() -> Check {
    let mut violations = 0;
    for p in 3..=60u32 {
        for m in 1..=60u32 {
            for ell in (1..=8).filter(|l| 2 * l < p) {
                if stefanski_condition(p, m, ell) {
                    violations += (1..ell).filter(|&j| !stefanski_condition(p, m, j)).count();
                }
            }
        }
    }
    Check::new("bias", "Stefanski condition inherited by lower orders (rational)", violations as f64, 0.0)
}

pub fn identities() -> Result<Vec<Check>, MomentError> {
    let ctl = SeriesControl::default();
    let qctl = QuadratureControl::default();
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for (p, m) in [(10u32, 11u32), (30, 31), (99, 100), (9, 3)] {
        let polys = [
            est::PhiPoly::bias_reducing(p, m, 1),
            est::PhiPoly::bias_reducing(p, m, 3),
            est::PhiPoly::stefanski(p, m, 2),
            est::PhiPoly::new([(1, 0.7), (2, -0.2)]),
        ];
        for poly in &polys {
            for k in [0u64, 1, 5, 50] {
                if (p as u64 + 2 * k) <= 2 * (poly.degree() as u64 + 1) {
                    continue;
                }
                let closed = conditional_integrals_closed_form(poly, p, m, k)?;
                let quad = conditional_integrals_quadrature(&|t| poly.eval(t), p, m, k, &qctl)?;
                worst = worst
                    .max((closed.i1 - quad.i1).abs() / closed.i1.abs().max(1.0))
                    .max((closed.i2 - quad.i2).abs() / closed.i2.abs().max(1.0));
            }
        }
    }
    out.push(Check::new("identities", "conditional moments: quadrature vs closed form", worst, 1e-8));

    let mut worst_ctrl = 0.0f64;
    let mut worst_mse = 0.0f64;
    for cell in design_cells() {
        let mp = MixtureParams::new(cell.p() as u32, cell.m() as u32, cell.lambda())?;
        let excess = control_excess(&Psi::Identity, &mp, &ctl, &qctl)?;
        let assembled = e2(&mp, &ctl)?.value - 2.0 * e1(&mp, &ctl)?.value;
        worst_ctrl = worst_ctrl.max((excess.value - assembled).abs());
        let via_psi = mse_psi_exact(&Psi::Identity, &mp, -5.0, 10.0, cell.sigma2, &ctl, &qctl)?;
        let ls = mse_ls_exact(&mp, -5.0, 10.0, cell.sigma2, &ctl)?;
        worst_mse = worst_mse.max((via_psi.value - ls.value).abs() / ls.value.max(1.0));
    }
    out.push(Check::new("identities", "psi = 1 control excess vs e2 - 2 e1 on the 12 design cells", worst_ctrl, 1e-8));
    out.push(Check::new("identities", "psi = 1 MSE vs LS MSE on the 12 design cells", worst_mse, 1e-8));

    let mut worst_coef = 0.0f64;
    for p in [5u32, 10, 30, 100] {
        for m in [1u32, 11, 100] {
            let (a, b) = (falling_products(p, 6), rising_products(m, 6));
            for (j, c) in br_coefficients(p, m, 6).iter().enumerate() {
                worst_coef = worst_coef.max((c - a[j] / b[j]).abs() / c.abs().max(1e-300));
            }
        }
    }
    out.push(Check::new("identities", "running-product coefficients equal a_j/b_j", worst_coef, 1e-13));

    out.extend(canonical_invariants(1000));
    Ok(out)
}

/// Orthogonality and norm preservation (absolute/relative 1e-12), LS
/// equivalence with the raw-data slope (relative 1e-10) and invariance of `S`
/// under permuting replicates, on random samples.
pub fn canonical_invariants(samples: u64) -> Vec<Check> {
    let streams = StreamFactory::new(2024);
    let (mut worst_q, mut worst_norm, mut worst_ls, mut worst_s) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let mut used = 0;
    for i in 0..samples {
        let mut rng = streams.stream(i);
        let n = rng.random_range(4..60usize);
        let r = rng.random_range(1..5usize);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..r).map(|_| rng.random_range(-100.0..100.0)).collect()).collect();
        let Ok(sample) = RepeatedMeasuresSample::new(y, x) else { continue };
        let cs = canonicalize(&sample);
        let Ok(st) = sufficient_stats(&cs) else { continue };
        used += 1;
        let q = Helmert::new(n).expect("n >= 4").to_dense();
        for a in 0..n {
            for b in a..n {
                let dot: f64 = (0..n).map(|k| q[a][k] * q[b][k]).sum();
                worst_q = worst_q.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        let xbar = sample.group_means();
        let sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
        worst_norm = worst_norm.max(rel(cs.z0 * cs.z0 + sq(&cs.z), sq(sample.y())));
        worst_norm = worst_norm.max(rel(cs.u0 * cs.u0 + sq(&cs.u), sq(&xbar)));
        let nf = n as f64;
        let (mx, my) = (xbar.iter().sum::<f64>() / nf, sample.y().iter().sum::<f64>() / nf);
        let sxy: f64 = xbar.iter().zip(sample.y()).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = xbar.iter().map(|a| (a - mx) * (a - mx)).sum();
        worst_ls = worst_ls.max(rel(est::ls(&st), sxy / sxx));
        let reversed = sample.x().iter().map(|row| row.iter().rev().copied().collect()).collect();
        let permuted = RepeatedMeasuresSample::new(sample.y().to_vec(), reversed).expect("same values");
        worst_s = worst_s.max(rel(canonicalize(&permuted).s, cs.s));
    }
    vec![
        Check::new("identities", format!("Q orthogonality on {used} random samples"), worst_q, 1e-12),
        Check::new("identities", format!("norm preservation on {used} random samples"), worst_norm, 1e-12),
        Check::new("identities", format!("canonical LS equals raw LS on {used} random samples"), worst_ls, 1e-10),
        Check::new("identities", format!("S invariant under replicate permutation on {used} samples"), worst_s, 1e-12),
    ]
}
