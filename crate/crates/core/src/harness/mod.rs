//! Monte Carlo driver: configuration, trials, CDFs, reports and result files.

pub mod cdf;
pub mod config;
pub mod io;
pub mod report;
pub mod runner;
pub mod validation;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

pub use cdf::{empirical_cdf, CdfSeries, GroupKey};
pub use config::{link_budget_normalize, parse_schemes, LinkBudget, ScenarioConfig};
pub use report::{compare_report, Report};
pub use runner::{run_trials, trial_rng, RunOutput, Simulator, TrialDiagnostics};
pub use validation::{run_criterion, run_validation, CriterionResult, ValidationPlan};

use crate::Result;

/// Writes `config.toml`, `samples.csv`, `diagnostics.csv`, one
/// `cdf_<group>.csv` per group and `report.txt` into `dir`.
pub fn write_run(dir: &Path, config: &ScenarioConfig, run: &RunOutput) -> Result<Report> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), config.to_toml_string())?;
    io::write_samples(&run.samples, BufWriter::new(File::create(dir.join("samples.csv"))?))?;
    io::write_diagnostics(
        &run.diagnostics,
        BufWriter::new(File::create(dir.join("diagnostics.csv"))?),
    )?;
    write_post_processing(dir, &run.samples, &run.diagnostics, config.layout.uavs)
}

/// CDF files and `report.txt` from samples alone.
pub fn write_post_processing(
    dir: &Path,
    samples: &[crate::linklevel::SinrSample],
    diagnostics: &[TrialDiagnostics],
    uavs: usize,
) -> Result<Report> {
    for cdf in empirical_cdf(samples, uavs) {
        cdf.write_csv(BufWriter::new(File::create(dir.join(cdf.file_name()))?))?;
    }
    let report = compare_report(samples, diagnostics, uavs);
    std::fs::write(dir.join("report.txt"), report.to_text())?;
    Ok(report)
}
