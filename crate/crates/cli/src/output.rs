//! Files written by the commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use ftroute::verify::ValidationReport;
use ftroute::workflow::Synthesis;
use ftroute::CircuitAnalysis;

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f =
        fs::File::create(&tmp).with_context(|| format!("cannot write {}", tmp.display()))?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct Ideal {
    pub depth: usize,
    pub qubits: usize,
    pub kq: u64,
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub name: &'a str,
    pub protocol: &'a str,
    pub layout: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mirror_of: Option<&'a str>,
    pub dd_budget: usize,
    pub iterations: usize,
    /// Iterations cut off by the time limit. Nonzero means reruns may differ.
    pub timeouts: usize,
    pub failed_iterations: usize,
    pub best_iteration: usize,
    pub best_seed: u64,
    pub analysis: &'a CircuitAnalysis,
    pub ideal: Ideal,
    pub validation: &'a ValidationReport,
    pub passed: bool,
}

pub struct Written {
    pub name: String,
    pub passed: bool,
    pub circuit: PathBuf,
}

/// Validates `s` and writes `<name>.json` and `<name>.report.json`.
pub fn write_synthesis(dir: &Path, s: &Synthesis) -> Result<Written> {
    let validation = s.validate();
    let ideal = s.protocol.static_analysis();
    let report = Report {
        name: &s.name,
        protocol: &s.protocol.name,
        layout: s.layout.to_string(),
        mirror_of: s.mirror_of.as_deref(),
        dd_budget: s.dd_budget,
        iterations: s.iterations,
        timeouts: s.timeouts,
        failed_iterations: s.failures,
        best_iteration: s.best_iteration,
        best_seed: s.best_seed,
        analysis: &s.circuit.analysis,
        ideal: Ideal {
            depth: ideal.depth,
            qubits: ideal.qubits,
            kq: ideal.ideal_kq(),
        },
        validation: &validation,
        passed: validation.passed(),
    };
    let circuit = dir.join(format!("{}.json", s.name));
    write_atomic(&circuit, &s.circuit.to_json())?;
    write_atomic(
        &dir.join(format!("{}.report.json", s.name)),
        &to_pretty_json(&report),
    )?;
    if s.timeouts > 0 {
        log::warn!("{}: {} iteration(s) hit the time limit", s.name, s.timeouts);
    }
    Ok(Written {
        name: s.name.clone(),
        passed: report.passed,
        circuit,
    })
}

/// One line per circuit, then a count of failures.
pub fn print_summary(synths: &[&Synthesis], written: &[Written]) {
    for (s, w) in synths.iter().zip(written) {
        let a = &s.circuit.analysis;
        println!(
            "{:<22} {:>6}  depth {:>4}  swaps {:>4}  dd {}  kq {:>6}  {}",
            s.name,
            s.layout.to_string(),
            a.depth,
            a.inserted_swaps,
            a.dd_swaps,
            a.kq,
            if w.passed { "ok" } else { "INVALID" }
        );
    }
}
