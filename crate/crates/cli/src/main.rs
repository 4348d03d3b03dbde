use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use deddens_core::workbench::{
    canonical_json, emit_report, generate, parse_scenario, run_scenario, run_suite, GeneratorKind, GeneratorSpec,
    ReportFormat, SuiteConfig, DEFAULT_MAX_DIM,
};
use deddens_core::ToleranceConfig;

#[derive(Parser)]
#[command(name = "workbench", version, about = "Deddens and spectral radius algebra workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    tol: TolFlags,
}

#[derive(Args, Default)]
struct TolFlags {
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Largest power n in Deddens profiles.
    #[arg(long, global = true)]
    max_n: Option<usize>,
    /// Largest index m in R_m profiles.
    #[arg(long, global = true)]
    max_m: Option<usize>,
    #[arg(long, global = true)]
    slope_tol: Option<f64>,
}

impl TolFlags {
    fn apply(&self, mut t: ToleranceConfig) -> ToleranceConfig {
        if let Some(v) = self.tol_residual {
            t.residual_tol = v;
        }
        if let Some(v) = self.tol_rank {
            t.rank_tol = v;
        }
        if let Some(v) = self.max_n {
            t.max_power = v;
        }
        if let Some(v) = self.max_m {
            t.max_index = v;
        }
        if let Some(v) = self.slope_tol {
            t.growth_slope_tol = v;
        }
        t
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and emit its report.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall time (breaks byte-for-byte reproducibility).
        #[arg(long)]
        timing: bool,
    },
    /// Generate a seeded scenario.
    Gen {
        #[arg(long)]
        kind: GeneratorKind,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        blocks: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100.0)]
        condition_cap: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate and run the full battery of scenarios.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scenarios per generator kind.
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run {
            scenario,
            format,
            out,
            timing,
        } => {
            let text = fs::read_to_string(scenario).with_context(|| format!("reading {}", scenario.display()))?;
            let mut s = parse_scenario(&text)?;
            s.tolerances = cli.tol.apply(s.tolerances);
            let start = Instant::now();
            let mut report = run_scenario(&s)?;
            if *timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            write_out(out.as_deref(), &emit_report(&report, *format))?;
            for rec in report.records.iter().filter(|r| !r.consistency_failures.is_empty()) {
                eprintln!("consistency failure in test {} ({}): {}", rec.index, rec.kind, rec.consistency_failures.join("; "));
            }
            Ok(report.exit_code())
        }
        Command::Gen {
            kind,
            dim,
            blocks,
            seed,
            condition_cap,
            max_dim,
            out,
        } => {
            let mut spec = GeneratorSpec::new(*kind, *dim, *blocks, *seed);
            spec.condition_cap = *condition_cap;
            spec.max_dim = *max_dim;
            let mut s = generate(&spec)?;
            s.tolerances = cli.tol.apply(s.tolerances);
            write_out(out.as_deref(), &canonical_json(&s))?;
            Ok(0)
        }
        Command::Suite {
            seed,
            count,
            max_dim,
            out,
            timing,
        } => {
            let tolerances = cli.tol.apply(ToleranceConfig::default());
            tolerances.validate()?;
            let cfg = SuiteConfig {
                seed: *seed,
                count: *count,
                max_dim: *max_dim,
                tolerances,
            };
            let start = Instant::now();
            let mut report = run_suite(&cfg);
            if *timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            write_out(out.as_deref(), &canonical_json(&report))?;
            for e in &report.entries {
                if let Some(err) = &e.error {
                    eprintln!("{} seed {}: {err}", e.spec.kind.name(), e.spec.seed);
                }
                if let Some(r) = &e.report {
                    for rec in r.records.iter().filter(|r| !r.consistency_failures.is_empty()) {
                        eprintln!(
                            "{} seed {} test {} ({}): {}",
                            e.spec.kind.name(),
                            e.spec.seed,
                            rec.index,
                            rec.kind,
                            rec.consistency_failures.join("; ")
                        );
                    }
                }
            }
            Ok(report.exit_code())
        }
    }
}
