//! Repeated-measures data and its reduction to canonical statistics.
//!
//! With `Y` the responses and `X̄` the group means of the replicated regressor,
//! an orthogonal `Q` whose first row is `1/√n` maps the model onto independent
//! statistics `QY = (Z0, Z)`, `QX̄ = (U0, U)` and the within-group sum of squares
//! `S`. Every estimator in this crate is a function of the scalars in
//! [`SufficientStats`].

use std::io::Read;
use std::path::Path;

use crate::error::DataError;

/// Smallest number of groups accepted: `p = n - 1 >= 3` is the minimum for a
/// finite LS bias.
pub const MIN_GROUPS: usize = 4;

/// Raw data: `n` responses `y[i]` and an `n × r` matrix of replicated regressor
/// observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedMeasuresSample {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
}

impl RepeatedMeasuresSample {
    pub fn new(y: Vec<f64>, x: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if y.len() != x.len() {
            return Err(DataError::ShapeMismatch { y: y.len(), x: x.len() });
        }
        if y.len() < MIN_GROUPS {
            return Err(DataError::TooFewGroups { min: MIN_GROUPS, found: y.len() });
        }
        let r = x[0].len();
        if r == 0 {
            return Err(DataError::NoReplicates);
        }
        for (i, (yi, row)) in y.iter().zip(&x).enumerate() {
            if row.len() != r {
                return Err(DataError::RaggedRow { row: i + 1, expected: r + 1, found: row.len() + 1 });
            }
            if !yi.is_finite() {
                return Err(DataError::NonFinite { row: i + 1, column: 1 });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row: i + 1, column: j + 2 });
            }
        }
        Ok(Self { y, x })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    /// Number of groups.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Replicates per group.
    pub fn r(&self) -> usize {
        self.x[0].len()
    }

    /// With a single replicate there is no within-group variance estimate; only
    /// the known-variance estimators apply.
    pub fn known_variance_only(&self) -> bool {
        self.r() == 1
    }

    pub fn group_means(&self) -> Vec<f64> {
        self.x.iter().map(|row| row.iter().sum::<f64>() / row.len() as f64).collect()
    }
}

/// Reads a CSV with header `y,x1,...,xr`. Lines starting with `#` are skipped.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RepeatedMeasuresSample, DataError> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    parse_csv(file)
}

pub fn parse_csv(reader: impl Read) -> Result<RepeatedMeasuresSample, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let header_ok = names.len() >= 2
        && names[0].eq_ignore_ascii_case("y")
        && names[1..].iter().enumerate().all(|(j, name)| name.eq_ignore_ascii_case(&format!("x{}", j + 1)));
    if !header_ok {
        return Err(DataError::Header(names.join(",")));
    }
    let width = names.len();

    let mut y = Vec::new();
    let mut x = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let row = idx + 1;
        if record.len() != width {
            return Err(DataError::RaggedRow { row, expected: width, found: record.len() });
        }
        let mut values = Vec::with_capacity(width);
        for (j, field) in record.iter().enumerate() {
            let v: f64 =
                field.parse().map_err(|_| DataError::NonNumeric { row, column: j + 1, value: field.to_string() })?;
            values.push(v);
        }
        y.push(values[0]);
        x.push(values[1..].to_vec());
    }
    if y.len() < MIN_GROUPS {
        return Err(DataError::TooFewGroups { min: MIN_GROUPS, found: y.len() });
    }
    RepeatedMeasuresSample::new(y, x)
}

/// The Helmert matrix of order `n`: row 0 is `1/√n`; row `k >= 1` has `k`
/// entries `1/√(k(k+1))`, then `-k/√(k(k+1))`, then zeros.
///
/// Products with `Q` and `Qᵗ` are O(n) and never materialize the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Helmert {
    n: usize,
}

impl Helmert {
    pub fn new(n: usize) -> Result<Self, DataError> {
        if n < 2 {
            return Err(DataError::TransformSize(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row_scale(k: usize) -> f64 {
        1.0 / ((k * (k + 1)) as f64).sqrt()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == 0 {
            return 1.0 / (self.n as f64).sqrt();
        }
        match col.cmp(&row) {
            std::cmp::Ordering::Less => Self::row_scale(row),
            std::cmp::Ordering::Equal => -(row as f64) * Self::row_scale(row),
            std::cmp::Ordering::Greater => 0.0,
        }
    }

    /// `Q v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match transform order");
        let mut out = Vec::with_capacity(self.n);
        out.push(v.iter().sum::<f64>() / (self.n as f64).sqrt());
        let mut prefix = v[0];
        for (k, &vk) in v.iter().enumerate().skip(1) {
            out.push((prefix - k as f64 * vk) * Self::row_scale(k));
            prefix += vk;
        }
        out
    }

    /// `Qᵗ w`.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n, "vector length must match transform order");
        let n = self.n;
        let mut out = vec![0.0; n];
        // suffix[i] = sum over k > i of w[k] / √(k(k+1))
        let mut suffix = 0.0;
        let base = w[0] / (n as f64).sqrt();
        for i in (0..n).rev() {
            let own = if i == 0 { 0.0 } else { -(i as f64) * w[i] * Self::row_scale(i) };
            out[i] = base + suffix + own;
            if i > 0 {
                suffix += w[i] * Self::row_scale(i);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.entry(i, j)).collect()).collect()
    }
}

/// Dense Helmert matrix of order `n` (see [`Helmert`]).
pub fn helmert_q(n: usize) -> Result<Vec<Vec<f64>>, DataError> {
    Ok(Helmert::new(n)?.to_dense())
}

/// The canonical quintet `(Z0, Z, U0, U, S)` with `p = n - 1`, `m = n(r - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalStats {
    pub z0: f64,
    pub z: Vec<f64>,
    pub u0: f64,
    pub u: Vec<f64>,
    pub s: f64,
    pub p: u32,
    pub m: u32,
    pub r: u32,
}

pub fn canonicalize(sample: &RepeatedMeasuresSample) -> CanonicalStats {
    let n = sample.n();
    let r = sample.r();
    let q = Helmert::new(n).expect("sample invariant guarantees n >= 4");
    let xbar = sample.group_means();

    let qy = q.apply(sample.y());
    let qx = q.apply(&xbar);

    let s = sample
        .x()
        .iter()
        .zip(&xbar)
        .map(|(row, &mean)| row.iter().map(|v| (v - mean).powi(2)).sum::<f64>())
        .sum::<f64>()
        / r as f64;

    CanonicalStats {
        z0: qy[0],
        z: qy[1..].to_vec(),
        u0: qx[0],
        u: qx[1..].to_vec(),
        s,
        p: (n - 1) as u32,
        m: (n * (r - 1)) as u32,
        r: r as u32,
    }
}

/// The six scalars every estimator consumes, plus the dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    /// `UᵗZ`
    pub t_uz: f64,
    /// `‖U‖²`
    pub u_sq: f64,
    /// `‖Z‖²`
    pub z_sq: f64,
    pub u0: f64,
    pub z0: f64,
    pub s: f64,
    pub p: u32,
    pub m: u32,
    pub r: u32,
}

const CAUCHY_SCHWARZ_SLACK: f64 = 1e-12;

impl SufficientStats {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t_uz: f64,
        u_sq: f64,
        z_sq: f64,
        u0: f64,
        z0: f64,
        s: f64,
        p: u32,
        m: u32,
        r: u32,
    ) -> Result<Self, DataError> {
        let st = Self { t_uz, u_sq, z_sq, u0, z0, s, p, m, r };
        st.validate()?;
        Ok(st)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let all = [self.t_uz, self.u_sq, self.z_sq, self.u0, self.z0, self.s];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidStats("non-finite statistic".into()));
        }
        if self.u_sq <= 0.0 {
            return Err(DataError::DegenerateRegressor);
        }
        if self.z_sq < 0.0 || self.s < 0.0 {
            return Err(DataError::InvalidStats("negative sum of squares".into()));
        }
        if self.t_uz * self.t_uz > self.u_sq * self.z_sq * (1.0 + CAUCHY_SCHWARZ_SLACK) {
            return Err(DataError::InvalidStats("(UᵗZ)² exceeds ‖U‖²‖Z‖²".into()));
        }
        if self.p == 0 || self.r == 0 {
            return Err(DataError::InvalidStats("p and r must be positive".into()));
        }
        Ok(())
    }

    /// Number of groups `n = p + 1`.
    pub fn n(&self) -> u32 {
        self.p + 1
    }

    /// `‖U‖² / S`, the argument of the φ-class corrections.
    pub fn t_ratio(&self) -> f64 {
        self.u_sq / self.s
    }

    /// `S / ‖U‖²`.
    pub fn s_over_u(&self) -> f64 {
        self.s / self.u_sq
    }

    /// `V = ‖U‖² / (S + ‖U‖²)`, the argument of the ψ-class factors.
    pub fn v(&self) -> f64 {
        self.u_sq / (self.s + self.u_sq)
    }
}

pub fn sufficient_stats(cs: &CanonicalStats) -> Result<SufficientStats, DataError> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let u_sq = dot(&cs.u, &cs.u);
    if u_sq <= 0.0 {
        return Err(DataError::DegenerateRegressor);
    }
    SufficientStats::new(dot(&cs.u, &cs.z), u_sq, dot(&cs.z, &cs.z), cs.u0, cs.z0, cs.s, cs.p, cs.m, cs.r)
}
