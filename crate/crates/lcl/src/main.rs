use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lcl::model::resolve_model;
use lcl::report::{RunReport, SpectrumJson, VerdictJson};
use lcl::run::{self, DEFAULT_TIMEOUT_S};
use lcl::spec::load_spec;
use lcl::{Error, Result};
use lcl_core::bench::{FamilyName, SuiteParams, SUITE_NAMES};
use lcl_core::checker::{describe, CheckOptions};
use lcl_core::logic::{eval_bounded_all, Tri};
use lcl_core::spectral::{decompose_with, DecomposeOptions, DEFAULT_SEED};
use lcl_core::{ChainModel, VerdictKind};

const EXIT_ERROR: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

/// Model checking of Linear Chain Logic over periodic matrix product states.
#[derive(Debug, Parser)]
#[command(name = "lcl", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Wall-clock limit per check, in seconds.
    #[arg(long, global = true, default_value_t = DEFAULT_TIMEOUT_S)]
    timeout: f64,
    /// Seed of the invariant-subspace search.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Parallel benchmark rows.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the JSON report to this path (bench adds a CSV next to it).
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a formula; exit 0 for T, 1 for F, 2 for U.
    Check {
        /// Model file, `dichotomy`, `two_block` or `FAMILY:t`.
        #[arg(long)]
        model: String,
        /// Label/spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Formula text; defaults to the spec file's formula.
        #[arg(long)]
        formula: Option<String>,
        /// Size at which the formula is evaluated.
        #[arg(long, default_value_t = 1)]
        start: u64,
    },
    /// Irreducible components and their peripheral data.
    Spectrum {
        #[arg(long)]
        model: String,
    },
    /// Run the formula suite over the synthetic families.
    Bench {
        /// Family name or `all`.
        #[arg(long, default_value = "all")]
        family: String,
        /// Lift exponents (bond dimension 2^t).
        #[arg(long, value_delimiter = ',', default_value = "4")]
        t: Vec<u32>,
        /// Suite formula name or `all`.
        #[arg(long, default_value = "all")]
        formula: String,
    },
    /// Bounded direct evaluation of a formula at sizes 1..=horizon.
    Oracle {
        #[arg(long)]
        model: String,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, default_value_t = 120)]
        horizon: u64,
    },
}

fn write_report(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_json<T: serde::Serialize>(common: &Common, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    if let Some(p) = &common.report {
        write_report(p, &text)?;
    }
    Ok(text)
}

fn timeout(common: &Common) -> Duration {
    Duration::from_secs_f64(common.timeout.max(0.0))
}

fn cmd_check(common: &Common, model: &str, spec: &Path, formula: Option<&str>, start: u64) -> Result<u8> {
    let family = resolve_model(model)?;
    let spec = load_spec(spec)?;
    let text = spec.formula_text(formula)?.to_string();
    let f = spec.formula(formula)?;
    let opts = CheckOptions {
        seed: common.seed,
        ..CheckOptions::default()
    };
    let Some(outcome) = run::check_timed(family, spec.labels()?, f.clone(), start, opts, timeout(common)) else {
        if common.json {
            let to = serde_json::json!({"formula": text, "verdict": "TO", "runtime_s": common.timeout});
            println!("{to}");
        } else {
            println!("verdict: TO (after {} s)", common.timeout);
        }
        return Ok(EXIT_TIMEOUT);
    };
    let o = outcome?;
    let report = VerdictJson::new(text, &o.verdict, &o.labels, o.runtime_s);
    let text = emit_json(common, &report)?;
    if common.json {
        println!("{text}");
    } else {
        println!("formula: {}", report.formula);
        println!("verdict: {} at N = {}", report.verdict, report.start);
        if let Some(w) = report.witness {
            println!("witness: N = {w}");
        }
        println!("omega+: {}", o.verdict.evidence.over);
        println!("omega-: {}", o.verdict.evidence.under);
        for a in &o.labels {
            println!("label {}", describe(a));
        }
        println!("runtime: {:.4} s", report.runtime_s);
    }
    Ok(match o.verdict.kind {
        VerdictKind::True => 0,
        VerdictKind::False => 1,
        VerdictKind::Unknown => 2,
    })
}

fn cmd_spectrum(common: &Common, model: &str) -> Result<u8> {
    let family = resolve_model(model)?;
    let dec = decompose_with(family.kraus(), DecomposeOptions { seed: common.seed })?;
    let report = SpectrumJson::new(family.name(), family.phys_dim(), family.bond_dim(), &dec);
    let text = emit_json(common, &report)?;
    if common.json {
        println!("{text}");
    } else {
        print!("{}", report.table());
    }
    Ok(0)
}

fn cmd_bench(common: &Common, family: &str, lifts: &[u32], formula: &str) -> Result<u8> {
    let families: Vec<FamilyName> = if family == "all" {
        FamilyName::ALL.to_vec()
    } else {
        vec![family.parse()?]
    };
    let formulas: Vec<&'static str> = if formula == "all" {
        SUITE_NAMES.to_vec()
    } else {
        let name = SUITE_NAMES
            .iter()
            .find(|n| **n == formula)
            .ok_or_else(|| Error::format("--formula", format!("unknown suite formula `{formula}`")))?;
        vec![*name]
    };
    let instances = run::grid(&families, lifts, &formulas);
    let opts = CheckOptions {
        seed: common.seed,
        ..CheckOptions::default()
    };
    let rows = run::run_grid(&instances, &SuiteParams::default(), opts, timeout(common), common.jobs);
    let report = RunReport::new(common.seed, common.timeout, rows);
    if let Some(p) = &common.report {
        write_report(p, &report.to_json())?;
        write_report(&p.with_extension("csv"), &report.to_csv())?;
    }
    if common.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_csv());
        for r in report.rows.iter().filter(|r| r.error.is_some()) {
            eprintln!("{} D={} {}: {}", r.model, r.bond_dim, r.formula, r.error.as_deref().unwrap_or(""));
        }
    }
    Ok(0)
}

fn cmd_oracle(common: &Common, model: &str, spec: &Path, formula: Option<&str>, horizon: u64) -> Result<u8> {
    let family = resolve_model(model)?;
    let spec = load_spec(spec)?;
    let text = spec.formula_text(formula)?.to_string();
    let f = spec.formula(formula)?;
    let model = ChainModel::new(family, spec.labels()?)?;
    let values = eval_bounded_all(&model, &f, horizon)?;
    let cells: Vec<&str> = values
        .iter()
        .map(|t| match t {
            Tri::True => "T",
            Tri::False => "F",
            Tri::Unknown => "U",
        })
        .collect();
    let report = serde_json::json!({
        "formula": text,
        "horizon": horizon,
        "values": cells,
    });
    let json = emit_json(common, &report)?;
    if common.json {
        println!("{json}");
    } else {
        println!("formula: {text}");
        for (i, c) in cells.iter().enumerate() {
            println!("{:>6} {c}", i + 1);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let c = &cli.common;
    let result = match &cli.cmd {
        Command::Check {
            model,
            spec,
            formula,
            start,
        } => cmd_check(c, model, spec, formula.as_deref(), *start),
        Command::Spectrum { model } => cmd_spectrum(c, model),
        Command::Bench { family, t, formula } => cmd_bench(c, family, t, formula),
        Command::Oracle {
            model,
            spec,
            formula,
            horizon,
        } => cmd_oracle(c, model, spec, formula.as_deref(), *horizon),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
