//! The standard twelve-cell design and its suite runner.

use serde::Serialize;

use super::config::{Level, SimConfig, XiMode};
use super::run::{run_study_with_workers, SimResult};
use crate::error::SimError;

pub const SUITE_ESTIMATORS: [&str; 8] = ["LS", "TLS", "BR1", "TBR1", "BR5", "TBR5", "GG", "TGG"];
pub const SUITE_R: usize = 2;
pub const SUITE_BETA: f64 = -5.0;
pub const SUITE_TAU2: f64 = 10.0;

/// One `(σ_ξ², σ², n)` combination of the design. Every coordinate of `ξ`
/// equals `√σ_ξ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignCell {
    pub sigma_xi2: f64,
    pub sigma2: f64,
    pub n: usize,
}

impl DesignCell {
    pub fn p(&self) -> usize {
        self.n - 1
    }

    pub fn m(&self) -> usize {
        self.n * (SUITE_R - 1)
    }

    /// `λ = p·σ_ξ²/(2σ²)`.
    pub fn lambda(&self) -> f64 {
        self.p() as f64 * self.sigma_xi2 / (2.0 * self.sigma2)
    }

    /// Suite estimators valid at this sample size; `BR5`/`TBR5` have no
    /// finite moments at `n = 10`.
    pub fn estimators(&self) -> Vec<String> {
        SUITE_ESTIMATORS.iter().filter(|e| self.n > 10 || !e.ends_with('5')).map(|e| e.to_string()).collect()
    }

    pub fn config(&self, reps: u64, seed: u64) -> SimConfig {
        SimConfig {
            n: self.n,
            r: SUITE_R,
            beta: SUITE_BETA,
            alpha: 0.0,
            theta: 0.0,
            tau2: SUITE_TAU2,
            sigma2: self.sigma2,
            xi: XiMode::Constant(self.sigma_xi2.sqrt()),
            estimators: self.estimators(),
            reps,
            seed,
            level: Level::Canonical,
            paired: false,
            bayes_c1: 1.0,
            bayes_c2: 1.0,
        }
    }
}

/// The twelve cells, blocks `(σ_ξ², σ²)` in the order (0.1, 1), (0.1, 10),
/// (5, 1), (5, 10), each over `n = 10, 30, 100`.
pub fn design_cells() -> Vec<DesignCell> {
    let mut out = Vec::with_capacity(12);
    for (sigma_xi2, sigma2) in [(0.1, 1.0), (0.1, 10.0), (5.0, 1.0), (5.0, 10.0)] {
        for n in [10, 30, 100] {
            out.push(DesignCell { sigma_xi2, sigma2, n });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRow {
    pub cell: DesignCell,
    pub p: usize,
    pub lambda: f64,
}

pub fn table3_lambdas() -> Vec<LambdaRow> {
    design_cells().into_iter().map(|cell| LambdaRow { cell, p: cell.p(), lambda: cell.lambda() }).collect()
}

/// Seed of cell `index` derived from the suite seed by a splitmix64 step.
pub fn cell_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCell {
    pub cell: DesignCell,
    pub result: SimResult,
}

pub fn table4_suite(reps: u64, seed: u64, workers: Option<usize>) -> Result<Vec<SuiteCell>, SimError> {
    design_cells()
        .into_iter()
        .enumerate()
        .map(|(i, cell)| {
            let result = run_study_with_workers(&cell.config(reps, cell_seed(seed, i as u64)), workers)?;
            Ok(SuiteCell { cell, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_table() {
        let want = [0.45, 1.45, 4.95, 0.045, 0.145, 0.495, 22.5, 72.5, 247.5, 2.25, 7.25, 24.75];
        let rows = table3_lambdas();
        assert_eq!(rows.len(), 12);
        for (row, w) in rows.iter().zip(want) {
            assert!((row.lambda - w).abs() < 1e-12, "{row:?}");
            assert!((row.cell.config(1, 0).lambda() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn small_cells_skip_order_five() {
        for cell in design_cells() {
            let ests = cell.estimators();
            if cell.n == 10 {
                assert_eq!(ests, ["LS", "TLS", "BR1", "TBR1", "GG", "TGG"]);
            } else {
                assert_eq!(ests.len(), 8);
            }
        }
    }

    #[test]
    fn cell_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..12).map(|i| cell_seed(7, i)).collect();
        assert_eq!(seeds.len(), 12);
        assert_ne!(cell_seed(7, 0), cell_seed(8, 0));
    }

    #[test]
    fn suite_shape() {
        let suite = table4_suite(20, 3, Some(1)).unwrap();
        assert_eq!(suite.len(), 12);
        assert!(suite[0].result.row("BR5").is_none());
        assert!(suite[1].result.row("BR5").is_some());
    }
}
