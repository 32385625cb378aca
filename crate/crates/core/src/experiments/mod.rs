//! Monte Carlo comparison of the estimators on simulated data.

mod kde;
mod report;
mod runner;
mod scenario;
mod summary;
mod svg;

pub use kde::{silverman_bandwidth, smoothed_histogram, Density};
pub use report::{
    emit_report, load_report, read_rows_csv, report_json, rows_csv_bytes, verify_report, write_rows_csv, Format,
    VERIFY_TOL,
};
pub use runner::{
    fit_method, initial_tau, replicate_series, run_scenario, run_scenario_with_workers, Failure, FlagCount,
    Provenance, Row, ScenarioReport, MAX_FAILURE_FRACTION,
};
pub use scenario::{
    builtin_scenario, builtin_scenarios, load_config, parse_config, Scenario, Transform, BUILTIN_REPLICATES,
    BUILTIN_SEED,
};
pub use summary::{summarize, verify_summaries, MethodSummary, QUANTILE_PROBS};
pub use svg::render_svg;
