//! Adaptive Gauss–Kronrod (7/15) integration on `(0,1)` against Beta weights.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use statrs::function::gamma::ln_gamma;

use crate::error::MomentError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_subdivisions: 4000 }
    }
}

impl QuadratureControl {
    pub fn validate(&self) -> Result<(), MomentError> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(MomentError::InvalidParameter {
                what: "quadrature abs_tol",
                requirement: "positive",
                value: self.abs_tol,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// How an integration parameter `w ∈ (lo, hi)` maps to `v ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Map {
    Plain,
    /// `v = c·w²` on `w ∈ (0,1)`, smoothing `v^{a−1}` at zero.
    Left(f64),
    /// `v = 1 − c·w²` on `w ∈ (0,1)`, smoothing `(1−v)^{b−1}` at one.
    Right(f64),
}

impl Map {
    /// Returns `(v, 1 − v, dv/dw)`.
    fn at(&self, w: f64) -> (f64, f64, f64) {
        match *self {
            Map::Plain => (w, 1.0 - w, 1.0),
            Map::Left(c) => {
                let v = c * w * w;
                (v, 1.0 - v, 2.0 * c * w)
            }
            Map::Right(c) => {
                let omv = c * w * w;
                (1.0 - omv, omv, 2.0 * c * w)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.lo.total_cmp(&self.lo))
    }
}

fn gk15<F>(f: &F, lo: f64, hi: f64, map: Map) -> Result<(f64, f64), MomentError>
where
    F: Fn(f64, f64) -> f64,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |w: f64| -> Result<f64, MomentError> {
        let (v, omv, jac) = map.at(w);
        let y = f(v, omv) * jac;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(MomentError::Divergent(v))
        }
    };
    let fc = eval(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let pair = eval(centre - dx)? + eval(centre + dx)?;
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Globally adaptive integration of `f(v, 1−v)` over `(0,1)`.
///
/// `breaks` are interior split points. The outermost pieces use the square
/// substitutions so that integrable endpoint singularities of power type
/// `v^{−1/2}` and `(1−v)^{−1/2}` become smooth.
pub fn integrate_unit<F>(f: F, breaks: &[f64], ctl: &QuadratureControl) -> Result<QuadValue, MomentError>
where
    F: Fn(f64, f64) -> f64,
{
    ctl.validate()?;
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if pts.is_empty() {
        pts.push(0.5);
    }

    let mut spans = vec![(0.0, 1.0, Map::Left(pts[0]))];
    for w in pts.windows(2) {
        spans.push((w[0], w[1], Map::Plain));
    }
    spans.push((0.0, 1.0, Map::Right(1.0 - pts[pts.len() - 1])));

    let mut heap = BinaryHeap::new();
    for (lo, hi, map) in spans {
        let (value, error) = gk15(&f, lo, hi, map)?;
        heap.push(Piece { lo, hi, map, value, error });
    }

    let total = |heap: &BinaryHeap<Piece>| {
        let mut pieces: Vec<&Piece> = heap.iter().collect();
        pieces.sort_by(|a, b| a.map_key().total_cmp(&b.map_key()).then(a.lo.total_cmp(&b.lo)));
        pieces.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };

    loop {
        let (value, error) = total(&heap);
        if error <= ctl.abs_tol.max(ctl.rel_tol * value.abs()) {
            return Ok(QuadValue { value, error, intervals: heap.len() });
        }
        if heap.len() >= ctl.max_subdivisions {
            return Err(MomentError::QuadratureNonConvergence { tol: ctl.abs_tol, err: error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = gk15(&f, lo, hi, worst.map)?;
            heap.push(Piece { lo, hi, map: worst.map, value, error });
        }
    }
}

impl Piece {
    /// Sort key giving a fixed summation order independent of heap layout.
    fn map_key(&self) -> f64 {
        match self.map {
            Map::Left(_) => 0.0,
            Map::Plain => 1.0,
            Map::Right(_) => 2.0,
        }
    }
}

/// `ln` of the Beta(a, b) density normaliser `Γ(a+b)/{Γ(a)Γ(b)}`.
pub fn ln_beta_norm(a: f64, b: f64) -> f64 {
    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
}

/// Beta(a, b) density at `v`, given `1 − v` separately for accuracy near one.
pub fn beta_density(v: f64, omv: f64, a: f64, b: f64, ln_norm: f64) -> f64 {
    (ln_norm + (a - 1.0) * v.ln() + (b - 1.0) * omv.ln()).exp()
}

/// Split points around the bulk of Beta(a, b).
pub fn beta_breaks(a: f64, b: f64) -> Vec<f64> {
    let s = a + b;
    let mean = a / s;
    let sd = (a * b / (s * s * (s + 1.0))).sqrt();
    let mut out: Vec<f64> = (1..8).map(|i| i as f64 / 8.0).collect();
    for k in [-6.0, -2.0, 0.0, 2.0, 6.0] {
        let x = mean + k * sd;
        if x > 0.0 && x < 1.0 {
            out.push(x);
        }
    }
    out
}

/// `∫₀¹ h(v) Beta(a, b)(dv)` with `h` given `(v, 1−v)`.
pub fn beta_expectation<H>(h: H, a: f64, b: f64, ctl: &QuadratureControl) -> Result<QuadValue, MomentError>
where
    H: Fn(f64, f64) -> f64,
{
    if !(a > 0.0 && b > 0.0) {
        return Err(MomentError::InvalidParameter { what: "Beta shape", requirement: "positive", value: a.min(b) });
    }
    let ln_norm = ln_beta_norm(a, b);
    integrate_unit(
        |v, omv| {
            let d = beta_density(v, omv, a, b, ln_norm);
            if d == 0.0 {
                0.0
            } else {
                h(v, omv) * d
            }
        },
        &beta_breaks(a, b),
        ctl,
    )
}
