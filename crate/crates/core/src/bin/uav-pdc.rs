use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uav_pdc::harness::{self, io, parse_schemes, run_validation, ScenarioConfig, Simulator, ValidationPlan};
use uav_pdc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "uav-pdc",
    version,
    about = "Pilot decontamination simulator for cellular-connected UAVs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write samples, CDFs and a report.
    Run(Common),
    /// Rebuild CDFs and the report from persisted samples.
    Report {
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the acceptance suite; exits nonzero if any check fails.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Small sample sizes (smoke test; statistical checks may fail).
        #[arg(long)]
        quick: bool,
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// UAV counts to sweep, e.g. `1,3`; one sub-directory per value.
    #[arg(long, value_delimiter = ',')]
    ku: Vec<usize>,
    /// Antennas per BS.
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated schemes: before, after, perfect, truecsi.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (0: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(m) = self.m {
            cfg.array.antennas = m;
        }
        if let Some(s) = &self.schemes {
            cfg.schemes = parse_schemes(s)?;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(common: &Common) -> Result<()> {
    let base = common.scenario()?;
    let sweep = if common.ku.is_empty() {
        vec![base.layout.uavs]
    } else {
        common.ku.clone()
    };
    for &uavs in &sweep {
        let mut cfg = base.clone();
        cfg.layout.uavs = uavs;
        cfg.validate()?;
        let dir = if sweep.len() > 1 {
            common.out_dir.join(format!("ku{uavs}"))
        } else {
            common.out_dir.clone()
        };
        log::info!("K_u = {uavs}: {} trials -> {}", cfg.trials, dir.display());
        let output = Simulator::new(&cfg)?.run(cfg.workers)?;
        let report = harness::write_run(&dir, &cfg, &output)?;
        println!("{}", report.to_text());
    }
    Ok(())
}

fn report_dir(dir: &Path) -> Result<()> {
    let samples = io::read_samples(BufReader::new(File::open(dir.join("samples.csv"))?))?;
    let diags_path = dir.join("diagnostics.csv");
    let diags = if diags_path.exists() {
        io::read_diagnostics(BufReader::new(File::open(diags_path)?))?
    } else {
        Vec::new()
    };
    let cfg_path = dir.join("config.toml");
    let uavs = if cfg_path.exists() {
        ScenarioConfig::from_file(&cfg_path)?.layout.uavs
    } else {
        let mut users: Vec<usize> = samples
            .iter()
            .filter(|s| s.user_kind == uav_pdc::topology::UserKind::Uav)
            .map(|s| s.user)
            .collect();
        users.sort_unstable();
        users.dedup();
        users.len()
    };
    let report = harness::write_post_processing(dir, &samples, &diags, uavs)?;
    println!("{}", report.to_text());
    Ok(())
}

fn report(out_dir: &Path) -> Result<()> {
    if out_dir.join("samples.csv").exists() {
        return report_dir(out_dir);
    }
    let mut sweep: Vec<PathBuf> = std::fs::read_dir(out_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("samples.csv").exists())
        .collect();
    if sweep.is_empty() {
        return Err(Error::Config(format!("no samples.csv under {}", out_dir.display())));
    }
    sweep.sort();
    for dir in sweep {
        println!("== {}", dir.display());
        report_dir(&dir)?;
    }
    Ok(())
}

fn validate(common: &Common, quick: bool, only: &[u8]) -> Result<bool> {
    let base = common.scenario()?;
    let mut plan = if quick {
        ValidationPlan::quick(base)
    } else {
        ValidationPlan::full(base)
    };
    if let Some(t) = common.trials {
        plan.cdf_trials = t;
    }
    let results = run_validation(&plan, only);
    let mut text = String::new();
    for r in &results {
        println!("{}", r.line());
        text.push_str(&r.line());
        text.push('\n');
    }
    std::fs::create_dir_all(&common.out_dir)?;
    std::fs::write(common.out_dir.join("validation.txt"), text)?;
    Ok(results.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(common) => run(common).map(|_| true),
        Command::Report { out_dir } => report(out_dir).map(|_| true),
        Command::Validate { common, quick, only } => validate(common, *quick, only),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
