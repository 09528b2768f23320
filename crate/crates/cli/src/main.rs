use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pblowup::asymptotics::constants_report;
use pblowup::sweep::{
    analyze, emit_report, emit_solution, read_records, run_and_analyze, run_solve,
    AnalysisSettings, SolveSpec, SweepConfig, SweepRecord,
};

/// Two-inclusion p-Laplace blow-up laboratory.
#[derive(Parser)]
#[command(name = "pblowup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blow-up exponent and asymptotic constant, tabulated and by quadrature.
    Constants {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
    },
    /// One finite element solve described by a JSON file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// A gap sweep with fits and verdict.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` of the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power-law fits of an existing sweep.csv.
    Fit {
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Rebuilds report.json and the plot scripts from an existing sweep.csv.
    Report {
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long)]
    records: PathBuf,
    /// Sweep configuration to take p, R, bands and the R_0 model from.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    p: Option<f64>,
    #[arg(long = "R", conflicts_with = "config")]
    radius: Option<f64>,
}

impl AnalysisArgs {
    fn load(&self) -> Result<(Vec<SweepRecord>, AnalysisSettings)> {
        let mut settings = match &self.config {
            Some(path) => read_sweep_config(path)?.settings(),
            None => AnalysisSettings::default(),
        };
        if let Some(p) = self.p {
            settings.p = p;
        }
        if let Some(r) = self.radius {
            settings.radius = r;
        }
        let file = File::open(&self.records)
            .with_context(|| format!("opening {}", self.records.display()))?;
        let records =
            read_records(file).with_context(|| format!("reading {}", self.records.display()))?;
        Ok((records, settings))
    }
}

fn read_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SweepConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn verdict(pass: bool) -> ExitCode {
    println!("{}", if pass { "PASS" } else { "FAIL" });
    ExitCode::from(if pass { 0 } else { 2 })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Constants { p, d, radius } => {
            let report = constants_report(p, d, radius)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let spec: SolveSpec = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            let (sol, summary) = run_solve(&spec)?;
            emit_solution(&sol, &summary, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out } => {
            let cfg = read_sweep_config(&config)?;
            let Some(outdir) = out.or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)) else {
                bail!("no output directory: pass --out or set output_dir");
            };
            let (outcome, report) = run_and_analyze(&cfg)?;
            emit_report(&outcome.records, &report, &outdir)?;
            for f in &outcome.failures {
                eprintln!("delta {}: {}", f.delta, f.error);
            }
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            Ok(verdict(report.pass))
        }
        Command::Fit { analysis } => {
            let (records, settings) = analysis.load()?;
            let report = analyze(&records, &settings);
            println!("{}", serde_json::to_string_pretty(&report.fits)?);
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            let pass = !report.fits.is_empty()
                && report
                    .fits
                    .iter()
                    .all(|f| f.within(settings.slope_tolerance).unwrap_or(false));
            Ok(verdict(pass))
        }
        Command::Report { analysis, out } => {
            let (records, settings) = analysis.load()?;
            let report = analyze(&records, &settings);
            emit_report(&records, &report, &out)?;
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            Ok(verdict(report.pass))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
