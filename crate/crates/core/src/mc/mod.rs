//! Monte Carlo evaluation of slope estimators under the functional model.

mod config;
mod report;
mod run;
mod sample;
mod table;

pub use config::{Level, SimConfig, XiMode};
pub use report::{format_number, pretty, render_result, render_suite, Format, COLUMNS};
pub use run::{
    paired_mse_difference, run_study, run_study_with_workers, EstimatorSummary, PairedDiff, SimResult, Welford, CHUNK,
    THREADS_ENV,
};
pub use sample::{sample_canonical, sample_raw, Sampler, StreamFactory};
pub use table::{
    cell_seed, design_cells, table3_lambdas, table4_suite, DesignCell, LambdaRow, SuiteCell, SUITE_BETA,
    SUITE_ESTIMATORS, SUITE_R, SUITE_TAU2,
};
