//! `ftroute`: fault-tolerant qubit routing on 2-D grids.

mod manifest;
mod output;
mod source;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ftroute::verify::{Expectations, Status};
use ftroute::workflow::{
    golay_pipeline, synthesize, synthesize_set, LogicalQubitConfig, Synthesis,
};
use ftroute::{
    validate, Circuit, Constraints, Dag, Destination, Direction, GateKind, Protocol, QubitLayout,
    SynthesisConfig,
};

use manifest::RunManifest;
use output::{print_summary, to_pretty_json, write_atomic, write_synthesis};
use source::ProtocolSource;

const OUT_ENV: &str = "FTROUTE_OUT_DIR";

/// Bad input from the user; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Some emitted circuit failed validation; exit code 3.
#[derive(Debug)]
struct InvalidOutput(Vec<String>);

impl fmt::Display for InvalidOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validation failed for: {}", self.0.join(", "))
    }
}

impl std::error::Error for InvalidOutput {}

#[derive(Parser)]
#[command(
    name = "ftroute",
    version,
    about = "Fault-tolerant qubit routing on 2-D grid layouts"
)]
#[command(
    after_help = "Exit codes: 0 success, 1 synthesis or I/O failure, 2 invalid input, 3 validation failure.\n\
Protocols are given as file paths or as `builtin:NAME` for a shipped fixture."
)]
struct Cli {
    /// More log output (repeat for more); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize every protocol listed in a TOML manifest.
    Synthesize(SynthesizeArgs),
    /// Check a circuit JSON file against its protocol.
    Validate(ValidateArgs),
    /// Print static properties of a protocol.
    Analyze(AnalyzeArgs),
    /// Draw a circuit as ASCII snapshots or an SVG.
    Render(RenderArgs),
    /// Synthesize one protocol on several layouts and print CSV.
    Sweep(SweepArgs),
    /// Run the three-stage Golay pipeline.
    GolayPipeline(GolayArgs),
}

#[derive(Args, Clone, Default)]
struct SynthOverrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Randomized iterations per protocol.
    #[arg(long)]
    iterations: Option<usize>,
    /// Code distance; sets the data-data SWAP budget to floor((d-1)/4).
    #[arg(long)]
    distance: Option<usize>,
    /// Wall-clock limit per routing iteration in seconds; 0 disables it.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SynthOverrides {
    fn apply(&self, mut c: SynthesisConfig) -> SynthesisConfig {
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(i) = self.iterations {
            c.iterations = i;
        }
        if let Some(d) = self.distance {
            c.distance = d;
        }
        if let Some(t) = self.time_limit {
            c.time_limit_secs = (t > 0.0).then_some(t);
        }
        c
    }
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Run manifest (TOML).
    manifest: PathBuf,
    /// Output directory. Defaults to the manifest's `output_dir`, then $FTROUTE_OUT_DIR, then `ftroute-out`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: SynthOverrides,
}

#[derive(Args)]
struct ValidateArgs {
    /// Circuit JSON.
    circuit: PathBuf,
    /// Source protocol. Moves recorded in the circuit are added when the protocol has none.
    #[arg(long, short)]
    protocol: ProtocolSource,
    /// Allowed data-data SWAPs; defaults to the budget of the protocol's distance.
    #[arg(long)]
    dd_budget: Option<usize>,
    /// Required initial positions: a logical_qubit_config.json or a JSON object of name to cell.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirArg {
    Forward,
    Backward,
}

#[derive(Args)]
struct AnalyzeArgs {
    protocol: ProtocolSource,
    /// Write the dependency graph in Graphviz format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Traversal direction of the graph.
    #[arg(long, value_enum, default_value = "forward")]
    direction: DirArg,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ascii,
    Svg,
}

#[derive(Args)]
struct RenderArgs {
    circuit: PathBuf,
    #[arg(long, value_enum, default_value = "ascii")]
    format: Format,
    /// Step to draw for SVG (state after that many steps); defaults to the last.
    #[arg(long)]
    step: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    protocol: ProtocolSource,
    /// Comma-separated layouts, e.g. 5x6,5x7,6x6.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    layouts: Vec<QubitLayout>,
    /// Move this register back to its initial cells.
    #[arg(long)]
    move_back: Option<String>,
    /// CSV destination; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: SynthOverrides,
}

#[derive(Args)]
struct GolayArgs {
    #[arg(long, default_value = "builtin:golay_prep")]
    prep: ProtocolSource,
    #[arg(long, default_value = "builtin:golay_verify")]
    verify: ProtocolSource,
    #[arg(long, default_value = "builtin:golay_sm")]
    sm: ProtocolSource,
    /// Block layout of one logical qubit.
    #[arg(long, default_value = "7x7")]
    layout: QubitLayout,
    /// Output directory. Defaults to $FTROUTE_OUT_DIR, then `ftroute-out`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: SynthOverrides,
}

fn default_out(explicit: Option<PathBuf>, manifest: Option<PathBuf>) -> PathBuf {
    explicit
        .or(manifest)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ftroute-out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Render(a) => cmd_render(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::GolayPipeline(a) => cmd_golay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<InvalidOutput>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn load(source: &ProtocolSource) -> Result<Protocol> {
    source
        .load()
        .map_err(|e| UsageError(format!("{e:#}")).into())
}

fn finish(synths: &[&Synthesis], dir: &Path) -> Result<()> {
    let written = synths
        .iter()
        .map(|s| write_synthesis(dir, s))
        .collect::<Result<Vec<_>>>()?;
    print_summary(synths, &written);
    let bad: Vec<String> = written
        .iter()
        .filter(|w| !w.passed)
        .map(|w| w.name.clone())
        .collect();
    for w in &written {
        log::info!("wrote {}", w.circuit.display());
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(InvalidOutput(bad).into())
    }
}

#[derive(Serialize)]
struct SummaryEntry<'a> {
    name: &'a str,
    circuit: String,
    layout: String,
    depth: usize,
    kq: u64,
    inserted_swaps: usize,
    dd_swaps: usize,
}

fn cmd_synthesize(a: SynthesizeArgs) -> Result<()> {
    let mut m = RunManifest::load(&a.manifest)?;
    m.config = a.overrides.apply(m.config);
    for e in &mut m.set.entries {
        if let Some(c) = e.config.take() {
            e.config = Some(a.overrides.apply(c));
        }
    }
    let dir = default_out(a.out, m.output_dir.clone());
    log::info!(
        "{}: {} protocols on {}",
        m.name,
        m.set.entries.len(),
        m.layout
    );
    let result = synthesize_set(&m.set, &m.layout, &m.config, &m.arrangements)?;

    write_atomic(
        &dir.join("logical_qubit_config.json"),
        &result.config.to_json(),
    )?;
    if let Some(fin) = &result.magic_final {
        let magic = LogicalQubitConfig::new(m.layout, &m.set.data_register, fin.clone())?;
        write_atomic(&dir.join("magic_final_mapping.json"), &magic.to_json())?;
    }
    let summary: Vec<SummaryEntry> = result
        .circuits
        .iter()
        .map(|s| SummaryEntry {
            name: &s.name,
            circuit: format!("{}.json", s.name),
            layout: s.layout.to_string(),
            depth: s.circuit.analysis.depth,
            kq: s.circuit.analysis.kq,
            inserted_swaps: s.circuit.analysis.inserted_swaps,
            dd_swaps: s.circuit.analysis.dd_swaps,
        })
        .collect();
    write_atomic(&dir.join("summary.json"), &to_pretty_json(&summary))?;
    let refs: Vec<&Synthesis> = result.circuits.iter().collect();
    finish(&refs, &dir)
}

fn read_anchors(path: &Path) -> Result<BTreeMap<String, usize>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if let Ok(c) = LogicalQubitConfig::from_json(&text) {
        return Ok(c.anchors());
    }
    serde_json::from_str(&text).map_err(|e| {
        UsageError(format!(
            "{}: neither a logical qubit config nor a name-to-cell map: {e}",
            path.display()
        ))
        .into()
    })
}

/// Adds a move for every recorded move-back of a protocol that has none.
fn with_recorded_moves(protocol: &Protocol, circuit: &Circuit) -> Result<Protocol> {
    if protocol
        .instructions()
        .iter()
        .any(|i| i.kind == GateKind::Move)
    {
        return Ok(protocol.clone());
    }
    let targets: Vec<(String, Destination)> = circuit
        .move_back
        .iter()
        .map(|(q, &p)| (q.clone(), Destination::Physical(p)))
        .collect();
    Ok(protocol.inject_moveback(&targets)?)
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.circuit)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", a.circuit.display())))?;
    let circuit = Circuit::from_json(&text)
        .map_err(|e| UsageError(format!("{}: {e}", a.circuit.display())))?;
    let protocol = with_recorded_moves(&load(&a.protocol)?, &circuit)?;
    let anchors = a.anchors.as_deref().map(read_anchors).transpose()?;
    let budget = a
        .dd_budget
        .unwrap_or_else(|| SynthesisConfig::with_distance(protocol.distance).dd_budget());
    let report = validate(
        &circuit,
        &protocol,
        &circuit.layout,
        &Expectations {
            dd_budget: budget,
            anchors: anchors.as_ref(),
        },
    );
    if a.json {
        print!("{}", to_pretty_json(&report));
    } else {
        for (check, r) in &report.checks {
            let s = match r.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::NotApplicable => "n/a",
            };
            println!("{check:<20} {s}");
            for v in &r.violations {
                match v.step {
                    Some(step) => println!("    step {step}: {} {:?}", v.message, v.qubits),
                    None => println!("    {} {:?}", v.message, v.qubits),
                }
            }
        }
        println!(
            "dd swaps {} (budget {budget}), inserted swaps {}",
            report.dd_swaps, report.inserted_swaps
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(InvalidOutput(vec![a.circuit.display().to_string()]).into())
    }
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    protocol: &'a str,
    distance: usize,
    qubits: usize,
    instructions: usize,
    barriers: usize,
    depth: usize,
    ideal_kq: u64,
    dag_longest_path: usize,
    gate_counts: &'a ftroute::ir::GateCounts,
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let p = load(&a.protocol)?;
    let stats = p.static_analysis();
    let dir = match a.direction {
        DirArg::Forward => Direction::Forward,
        DirArg::Backward => Direction::Backward,
    };
    let dag = Dag::build(&p, dir);
    let out = AnalyzeOutput {
        protocol: &p.name,
        distance: p.distance,
        qubits: stats.qubits,
        instructions: p.instructions().len(),
        barriers: stats.barriers,
        depth: stats.depth,
        ideal_kq: stats.ideal_kq(),
        dag_longest_path: dag.longest_path(),
        gate_counts: &stats.counts,
    };
    if a.json {
        print!("{}", to_pretty_json(&out));
    } else {
        println!("protocol   {} (d={})", out.protocol, out.distance);
        println!("qubits     {}", out.qubits);
        println!("gates      {}", out.gate_counts);
        println!("barriers   {}", out.barriers);
        println!("depth      {}", out.depth);
        println!("ideal KQ   {}", out.ideal_kq);
    }
    if let Some(path) = a.dot {
        write_atomic(&path, &dag.to_dot(&p))?;
    }
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.circuit)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", a.circuit.display())))?;
    let c = Circuit::from_json(&text)
        .map_err(|e| UsageError(format!("{}: {e}", a.circuit.display())))?;
    let body = match a.format {
        Format::Ascii => c.render_snapshots().join("\n"),
        Format::Svg => c.render_svg(a.step.unwrap_or(c.steps.len())),
    };
    match a.out {
        Some(path) => write_atomic(&path, &body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let p = load(&a.protocol)?;
    let p = match &a.move_back {
        None => p,
        Some(reg) => {
            let ids = p.register_qubits(reg).ok_or_else(|| {
                UsageError(format!("protocol `{}` has no register `{reg}`", p.name))
            })?;
            let targets: Vec<(String, Destination)> = ids
                .iter()
                .map(|&q| {
                    let n = p.qubit_name(q).to_string();
                    (n.clone(), Destination::Init(n))
                })
                .collect();
            p.inject_moveback(&targets)?
        }
    };
    let config = a
        .overrides
        .apply(SynthesisConfig::with_distance(p.distance));
    let ideal = p.static_analysis();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "layout",
        "depth",
        "gates",
        "kq",
        "ideal_depth",
        "ideal_kq",
        "inserted_swaps",
        "dd_swaps",
        "timeouts",
        "failed",
        "error",
    ])?;
    for layout in &a.layouts {
        let row = match synthesize(&p.name, &p, layout, &config, &Constraints::default()) {
            Ok(s) => {
                let an = &s.circuit.analysis;
                if !s.validate().passed() {
                    return Err(InvalidOutput(vec![format!("{} on {layout}", p.name)]).into());
                }
                [
                    layout.to_string(),
                    an.depth.to_string(),
                    (an.gate_counts.total() + an.inserted_swaps).to_string(),
                    an.kq.to_string(),
                    ideal.depth.to_string(),
                    ideal.ideal_kq().to_string(),
                    an.inserted_swaps.to_string(),
                    an.dd_swaps.to_string(),
                    s.timeouts.to_string(),
                    "false".into(),
                    String::new(),
                ]
            }
            Err(e) => [
                layout.to_string(),
                String::new(),
                String::new(),
                String::new(),
                ideal.depth.to_string(),
                ideal.ideal_kq().to_string(),
                String::new(),
                String::new(),
                String::new(),
                "true".into(),
                e.to_string(),
            ],
        };
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    let text = String::from_utf8(bytes).expect("CSV is UTF-8");
    match a.out {
        Some(path) => write_atomic(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_golay(a: GolayArgs) -> Result<()> {
    let prep = load(&a.prep)?;
    let verify = load(&a.verify)?;
    let sm = load(&a.sm)?;
    let config = a
        .overrides
        .apply(SynthesisConfig::with_distance(sm.distance));
    let r = golay_pipeline(&prep, &verify, &sm, &a.layout, [&config, &config, &config])?;
    let dir = default_out(a.out, None);
    let reg = prep
        .registers()
        .first()
        .map(|r| r.name.clone())
        .unwrap_or_default();
    let m_lq = LogicalQubitConfig::new(a.layout, &reg, r.m_lq.clone())?;
    write_atomic(&dir.join("logical_qubit_config.json"), &m_lq.to_json())?;
    finish(&r.stages(), &dir)
}
