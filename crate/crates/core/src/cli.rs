//! Command-line front end: argument schema, command dispatch, and file
//! emission. The binary in `src/bin/urngraph.rs` is a thin wrapper around
//! [`run`].
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use crate::dynamics::DomainParams;
use crate::graph::{parse_edge_list, Graph};
use crate::report::{self, CheckJson, ClassifyReport, VerifyReportJson};
use crate::urn::{self, MonteCarloSummary, TrialConfig, TrialOutcome};
use crate::verify::{self, Budget};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Parse the graph and print its bipartiteness class and stats.
    Classify,
    /// Enumerate equilibria, spectra, and the predicted limit set.
    Equilibria,
    /// Run Monte Carlo trials and write per-trial CSVs plus a summary.
    Simulate,
    /// Run the verification suite on the bundled fixture graphs.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// All knobs of a run. Numeric bounds are enforced by the modules each
/// field feeds (e.g. `c` must satisfy `0 < c < 1/N` for the loaded graph).
#[derive(Debug, Parser)]
#[command(
    name = "urngraph",
    version,
    about = "Graph-based Pólya urns: simulation, equilibria, and limit sets"
)]
pub struct RunConfig {
    /// Command to run.
    #[arg(long, value_enum)]
    pub cmd: Command,
    /// Edge-list graph file (one `u v` pair per line, 1-based, `#` comments).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Base seed; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of Monte Carlo trials.
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Steps per trial (simulate), or the verification step budget.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Integrator step size.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Edge-sum floor override; default 1/(100N).
    #[arg(long)]
    pub c: Option<f64>,
    /// Reinforcement exponent (simulation only; analysis requires 1).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Output directory for simulation artifacts.
    #[arg(long, env = "URNGRAPH_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Serialization of the simulate summary / equilibria listing.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Samples recorded every this many steps.
    #[arg(long, default_value_t = 100)]
    pub sample_stride: u64,
}

impl RunConfig {
    fn load_graph(&self) -> Result<Graph> {
        let path = self
            .graph
            .as_ref()
            .context("--graph is required for this command")?;
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read graph file {}", path.display()))?;
        let g = parse_edge_list(&text)
            .with_context(|| format!("cannot parse graph file {}", path.display()))?;
        Ok(g)
    }

    fn domain(&self, g: &Graph) -> Result<DomainParams> {
        match self.c {
            Some(c) => Ok(DomainParams::new(c, g)?),
            None => Ok(DomainParams::default_for(g)),
        }
    }

    fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            steps: self.steps.unwrap_or(100_000),
            seed: self.seed,
            alpha: self.alpha,
            sample_stride: self.sample_stride,
        }
    }
}

/// Dispatches a parsed config, returning the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let outcome = match cfg.cmd {
        Command::Classify => cmd_classify(cfg),
        Command::Equilibria => cmd_equilibria(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Verify => return cmd_verify(cfg),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_USAGE
        }
    }
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<()> {
    let g = cfg.load_graph()?;
    let class = g.classify_bipartiteness();
    match cfg.format {
        Format::Json => {
            let report = ClassifyReport::of(&g);
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Format::Csv => {
            println!("{class}");
            println!("m={} N={}", g.vertex_count(), g.edge_count());
        }
    }
    Ok(())
}

pub fn cmd_equilibria(cfg: &RunConfig) -> Result<()> {
    let g = cfg.load_graph()?;
    let dom = cfg.domain(&g)?;
    let report = report::equilibria_report(&g, &dom)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match cfg.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Csv => print!("{}", report::equilibria_csv(&report)),
    }
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let g = cfg.load_graph()?;
    let dom = cfg.domain(&g)?;
    let trial_cfg = cfg.trial_config();
    let b0 = vec![1u64; g.vertex_count()];
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;

    let limit = crate::equilibria::predict_limit(&g, &dom)?;
    let unstable = urn::unstable_equilibria(&g, &dom)?;

    // trials run in parallel batches; all file writes stay on this thread
    let mut outcomes: Vec<TrialOutcome> = Vec::with_capacity(cfg.trials as usize);
    let batch = 64u64;
    let mut start = 0u64;
    while start < cfg.trials {
        let end = (start + batch).min(cfg.trials);
        let results: Vec<_> = {
            use rayon::prelude::*;
            (start..end)
                .into_par_iter()
                .map(|k| {
                    let tc = TrialConfig {
                        seed: trial_cfg.seed.wrapping_add(k),
                        ..trial_cfg.clone()
                    };
                    urn::run_trial(&g, &b0, &tc).map(|r| (k, r))
                })
                .collect::<Result<_, _>>()?
        };
        for (k, result) in &results {
            let path = cfg.out.join(format!("trial_{k:04}.csv"));
            fs::write(&path, urn::trial_csv(result))
                .with_context(|| format!("cannot write {}", path.display()))?;
            outcomes.push(urn::outcome_for(&limit, &unstable, *k, result));
        }
        start = end;
    }

    let summary = MonteCarloSummary {
        limit,
        unstable_points: unstable,
        outcomes,
    };
    let summary_json = report::simulation_summary(&g, &dom, &b0, &trial_cfg, &summary);
    let json_path = cfg.out.join("summary.json");
    fs::write(&json_path, serde_json::to_string_pretty(&summary_json)?)
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    if cfg.format == Format::Csv {
        let csv_path = cfg.out.join("summary.csv");
        fs::write(&csv_path, report::summary_csv(&summary_json))
            .with_context(|| format!("cannot write {}", csv_path.display()))?;
    }
    println!(
        "wrote {} trials to {} (mean distance to limit {:.4})",
        cfg.trials,
        cfg.out.display(),
        summary.mean_dist_inf()
    );
    Ok(())
}

/// Runs the verification suite; nonzero exit on any failed check. An
/// explicitly passed graph file is parsed and analyzed as an extra check,
/// so a corrupted file fails the run.
pub fn cmd_verify(cfg: &RunConfig) -> i32 {
    if cfg.dt.is_nan() || cfg.dt <= 0.0 {
        eprintln!("error: --dt must be positive");
        return EXIT_USAGE;
    }
    let budget = Budget {
        dt: cfg.dt,
        ..Budget::for_steps(cfg.steps)
    };
    let mut checks: Vec<CheckJson> = Vec::new();

    if let Some(path) = &cfg.graph {
        let extra = extra_graph_check(cfg, path);
        checks.push(extra);
    }
    for c in verify::run_all(&budget) {
        checks.push(CheckJson {
            id: c.id,
            name: c.name.to_string(),
            passed: c.passed,
            detail: c.detail,
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!(
            "criterion {:02} {}: {} ({})",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let report = VerifyReportJson {
        budget: budget.label.to_string(),
        passed,
        checks,
    };
    match serde_json::to_string_pretty(&report) {
        Ok(body) => println!("{body}"),
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILURE
    }
}

fn extra_graph_check(cfg: &RunConfig, path: &Path) -> CheckJson {
    let analyzed: Result<String> = (|| {
        let g = cfg.load_graph()?;
        let dom = cfg.domain(&g)?;
        let limit = crate::equilibria::predict_limit(&g, &dom)?;
        Ok(format!(
            "parsed m={} N={}, predicted {:?} limit",
            g.vertex_count(),
            g.edge_count(),
            limit.kind
        ))
    })();
    match analyzed {
        Ok(detail) => CheckJson {
            id: 0,
            name: "extra-graph".to_string(),
            passed: true,
            detail: format!("{}: {detail}", path.display()),
        },
        Err(err) => CheckJson {
            id: 0,
            name: "extra-graph".to_string(),
            passed: false,
            detail: format!("{}: {err:#}", path.display()),
        },
    }
}
