//! Timed checks and benchmark grids.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use lcl_core::bench::{self, FamilyName, FamilySpec, SuiteParams};
use lcl_core::checker::{AtomicAnalysis, CheckError, CheckOptions};
use lcl_core::{ChainModel, Checker, Formula, Label, MpsFamily, Verdict};

use crate::error::{Error, Result};
use crate::report::RunRow;

pub const DEFAULT_TIMEOUT_S: f64 = 3600.0;

/// Resident-set high-water mark in MB, where the platform exposes it.
pub fn peak_memory_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

#[derive(Debug)]
pub enum Timed<T> {
    Done(T),
    TimedOut,
}

/// Runs `f` on a worker thread. On timeout the flag handed to `f` is raised
/// and the worker is left to wind down on its own.
pub fn run_with_timeout<T, F>(timeout: Duration, f: F) -> Timed<T>
where
    T: Send + 'static,
    F: FnOnce(Arc<AtomicBool>) -> T + Send + 'static,
{
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();
    let flag = stop.clone();
    thread::spawn(move || {
        let _ = tx.send(f(flag));
    });
    match rx.recv_timeout(timeout) {
        Ok(v) => Timed::Done(v),
        Err(_) => {
            stop.store(true, Ordering::Relaxed);
            Timed::TimedOut
        }
    }
}

/// A verdict with the per-label analyses behind it.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub labels: Vec<AtomicAnalysis>,
    pub runtime_s: f64,
}

pub fn check(
    family: MpsFamily,
    labels: Vec<Label>,
    formula: &Formula,
    start: u64,
    opts: CheckOptions,
    stop: Option<Arc<AtomicBool>>,
) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let model = ChainModel::new(family, labels)?;
    let mut checker = Checker::new(model, opts)?;
    if let Some(flag) = stop {
        checker = checker.with_cancel(move || flag.load(Ordering::Relaxed));
    }
    let verdict = checker.check_at(formula, start)?;
    let labels = formula
        .label_names()
        .iter()
        .map(|n| checker.atomic(n))
        .collect::<std::result::Result<Vec<_>, CheckError>>()?;
    Ok(CheckOutcome {
        verdict,
        labels,
        runtime_s: t0.elapsed().as_secs_f64(),
    })
}

/// [`check`] under a wall-clock limit; `None` on timeout.
pub fn check_timed(
    family: MpsFamily,
    labels: Vec<Label>,
    formula: Formula,
    start: u64,
    opts: CheckOptions,
    timeout: Duration,
) -> Option<Result<CheckOutcome>> {
    match run_with_timeout(timeout, move |stop| {
        check(family, labels, &formula, start, opts, Some(stop))
    }) {
        Timed::Done(Err(Error::Check(CheckError::Cancelled))) | Timed::TimedOut => None,
        Timed::Done(r) => Some(r),
    }
}

/// One benchmark instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub family: FamilyName,
    pub t: u32,
    pub formula: &'static str,
}

/// The grid `families × lifts × formulas`, in that nesting order.
pub fn grid(families: &[FamilyName], lifts: &[u32], formulas: &[&'static str]) -> Vec<Instance> {
    let mut out = Vec::new();
    for &family in families {
        for &t in lifts {
            for &formula in formulas {
                out.push(Instance { family, t, formula });
            }
        }
    }
    out
}

pub fn run_instance(inst: &Instance, params: &SuiteParams, opts: CheckOptions, timeout: Duration) -> RunRow {
    let spec = FamilySpec::new(inst.family, inst.t);
    let mut row = RunRow {
        model: inst.family.to_string(),
        formula: inst.formula.to_string(),
        bond_dim: spec.bond_dim(),
        verdict: "U".to_string(),
        runtime_s: 0.0,
        peak_memory_mb: None,
        error: None,
    };
    let t0 = Instant::now();
    let prepared = bench::build_family(spec)
        .map_err(Error::from)
        .and_then(|f| Ok((f, bench::suite_entry(inst.formula, params)?)));
    let (family, entry) = match prepared {
        Ok(x) => x,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match check_timed(family, entry.labels, entry.formula, 1, opts, timeout) {
        None => {
            row.verdict = "TO".to_string();
            row.runtime_s = timeout.as_secs_f64();
        }
        Some(Ok(o)) => {
            row.verdict = o.verdict.kind.to_string();
            row.runtime_s = o.runtime_s;
        }
        Some(Err(e)) => {
            row.runtime_s = t0.elapsed().as_secs_f64();
            row.error = Some(e.to_string());
        }
    }
    row.peak_memory_mb = peak_memory_mb();
    row
}

/// Runs every instance with at most `jobs` in flight; rows keep the
/// instance order.
pub fn run_grid(
    instances: &[Instance],
    params: &SuiteParams,
    opts: CheckOptions,
    timeout: Duration,
    jobs: usize,
) -> Vec<RunRow> {
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<RunRow>>> = Mutex::new(vec![None; instances.len()]);
    thread::scope(|s| {
        for _ in 0..jobs.clamp(1, instances.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= instances.len() {
                    break;
                }
                let row = run_instance(&instances[i], params, opts, timeout);
                rows.lock().expect("no poisoning")[i] = Some(row);
            });
        }
    });
    rows.into_inner()
        .expect("no poisoning")
        .into_iter()
        .map(|r| r.expect("every instance ran"))
        .collect()
}
