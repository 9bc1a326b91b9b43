//! Synthesis of a whole protocol set around one shared placement of the
//! data qubits, plus the staged Golay pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emit::{Circuit, Gate};
use crate::error::{LayoutError, MapperError, WorkflowError};
use crate::ir::{parse_protocol, Destination, GateKind, Protocol};
use crate::layout::{extend_layout, ExtensionDirection, ExtensionPlan, QubitLayout, TiledLayout};
use crate::mapper::{run_sabre, Constraints, SynthesisConfig};
use crate::verify::{validate, Expectations, ValidationReport};

/// Protocol texts shipped with the crate.
pub mod fixtures {
    use crate::error::ParseError;
    use crate::ir::{parse_protocol, Protocol};

    pub const STEANE_SM: &str = include_str!("../fixtures/steane_sm.qasm");
    pub const STEANE_MAGIC: &str = include_str!("../fixtures/steane_magic.qasm");
    pub const STEANE_ENCODER: &str = include_str!("../fixtures/steane_encoder.qasm");
    pub const STEANE_MEASZ: &str = include_str!("../fixtures/steane_measz.qasm");
    pub const STEANE_H: &str = include_str!("../fixtures/steane_h.qasm");
    pub const STEANE_S: &str = include_str!("../fixtures/steane_s.qasm");
    pub const STEANE_CNOT: &str = include_str!("../fixtures/steane_cnot.qasm");
    pub const STEANE_T: &str = include_str!("../fixtures/steane_t.qasm");
    pub const GOLAY_PREP: &str = include_str!("../fixtures/golay_prep.qasm");
    pub const GOLAY_VERIFY: &str = include_str!("../fixtures/golay_verify.qasm");
    pub const GOLAY_SM: &str = include_str!("../fixtures/golay_sm.qasm");

    pub const ALL: [(&str, &str); 11] = [
        ("steane_sm", STEANE_SM),
        ("steane_magic", STEANE_MAGIC),
        ("steane_encoder", STEANE_ENCODER),
        ("steane_measz", STEANE_MEASZ),
        ("steane_h", STEANE_H),
        ("steane_s", STEANE_S),
        ("steane_cnot", STEANE_CNOT),
        ("steane_t", STEANE_T),
        ("golay_prep", GOLAY_PREP),
        ("golay_verify", GOLAY_VERIFY),
        ("golay_sm", GOLAY_SM),
    ];

    pub fn text(name: &str) -> Option<&'static str> {
        ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    /// Parses a shipped fixture. Panics on an unknown name.
    pub fn load(name: &str) -> Protocol {
        try_load(name)
            .unwrap_or_else(|| panic!("no fixture named `{name}`"))
            .expect("shipped fixtures parse")
    }

    pub fn try_load(name: &str) -> Option<Result<Protocol, ParseError>> {
        text(name).map(parse_protocol)
    }
}

/// Where the data qubits of one logical block sit inside an `m x n` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalQubitConfig {
    pub layout: QubitLayout,
    pub register: String,
    /// `positions[i]` is the cell of `register[i]`.
    pub positions: Vec<usize>,
}

impl LogicalQubitConfig {
    /// Checks that the positions are distinct cells of `layout`.
    pub fn new(
        layout: QubitLayout,
        register: &str,
        positions: Vec<usize>,
    ) -> Result<Self, WorkflowError> {
        let mut seen = vec![false; layout.num_qubits()];
        for (i, &p) in positions.iter().enumerate() {
            let name = format!("{register}[{i}]");
            match seen.get_mut(p) {
                None => {
                    return Err(WorkflowError::Config(format!(
                        "{name} at cell {p} is outside {layout}"
                    )))
                }
                Some(true) => return Err(WorkflowError::Config(format!("{name} shares cell {p}"))),
                Some(s) => *s = true,
            }
        }
        Ok(Self {
            layout,
            register: register.to_string(),
            positions,
        })
    }

    /// Reads the cells of `register[0..size]` from a named mapping.
    pub fn from_mapping(
        mapping: &BTreeMap<String, usize>,
        register: &str,
        size: usize,
        layout: QubitLayout,
    ) -> Result<Self, WorkflowError> {
        let positions = (0..size)
            .map(|i| {
                let name = format!("{register}[{i}]");
                mapping
                    .get(&name)
                    .copied()
                    .ok_or(WorkflowError::MissingAnchor(name))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layout, register, positions)
    }

    /// Qubit name to cell.
    pub fn anchors(&self) -> BTreeMap<String, usize> {
        self.named(&self.register, |p| p)
    }

    /// `register[i] -> relabel(positions[i])`.
    pub fn named(
        &self,
        register: &str,
        relabel: impl Fn(usize) -> usize,
    ) -> BTreeMap<String, usize> {
        self.positions
            .iter()
            .enumerate()
            .map(|(i, &p)| (format!("{register}[{i}]"), relabel(p)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, WorkflowError> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| WorkflowError::Config(e.to_string()))?;
        Self::new(c.layout, &c.register, c.positions)
    }
}

/// Relative placement of two logical blocks in a doubled layout. The first
/// named side holds the first operand (control, or the data block of T).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arrangement {
    #[serde(rename = "v-ns")]
    VerticalNS,
    #[serde(rename = "v-sn")]
    VerticalSN,
    #[serde(rename = "h-ew")]
    HorizontalEW,
    #[serde(rename = "h-we")]
    HorizontalWE,
}

impl Arrangement {
    pub const ALL: [Arrangement; 4] = [
        Arrangement::VerticalNS,
        Arrangement::VerticalSN,
        Arrangement::HorizontalEW,
        Arrangement::HorizontalWE,
    ];

    pub fn direction(self) -> ExtensionDirection {
        match self {
            Arrangement::VerticalNS | Arrangement::VerticalSN => ExtensionDirection::Vertical,
            _ => ExtensionDirection::Horizontal,
        }
    }

    /// Block (0 = north/west, 1 = south/east) of the first operand.
    pub fn first_block(self) -> usize {
        match self {
            Arrangement::VerticalNS | Arrangement::HorizontalWE => 0,
            Arrangement::VerticalSN | Arrangement::HorizontalEW => 1,
        }
    }

    /// The arrangement with the two blocks exchanged.
    pub fn flipped(self) -> Arrangement {
        match self {
            Arrangement::VerticalNS => Arrangement::VerticalSN,
            Arrangement::VerticalSN => Arrangement::VerticalNS,
            Arrangement::HorizontalEW => Arrangement::HorizontalWE,
            Arrangement::HorizontalWE => Arrangement::HorizontalEW,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Arrangement::VerticalNS => "v-ns",
            Arrangement::VerticalSN => "v-sn",
            Arrangement::HorizontalEW => "h-ew",
            Arrangement::HorizontalWE => "h-we",
        }
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Arrangement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arrangement::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| format!("unknown arrangement `{s}` (expected v-ns, v-sn, h-ew or h-we)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoBlockGate {
    Cnot,
    T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoBlockPlan {
    pub gate: TwoBlockGate,
    pub arrangement: Arrangement,
    pub layout: QubitLayout,
    pub extension: ExtensionPlan,
    pub first_block: usize,
    pub second_block: usize,
    /// Synthesized arrangement this one is derived from, if any.
    pub mirror_of: Option<Arrangement>,
}

pub fn plan_two_qubit(
    gate: TwoBlockGate,
    arrangement: Arrangement,
    base: &QubitLayout,
) -> TwoBlockPlan {
    let (layout, extension) = extend_layout(base, arrangement.direction());
    let first_block = arrangement.first_block();
    let mirror_of = match (gate, arrangement) {
        (TwoBlockGate::Cnot, Arrangement::VerticalSN | Arrangement::HorizontalWE) => {
            Some(arrangement.flipped())
        }
        _ => None,
    };
    TwoBlockPlan {
        gate,
        arrangement,
        layout,
        extension,
        first_block,
        second_block: 1 - first_block,
        mirror_of,
    }
}

/// How data qubits are returned at the end of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveBack {
    None,
    /// Back to where they started in this circuit.
    Init,
    /// To the logical-qubit configuration.
    Anchor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    SyndromeMeasurement,
    MagicPreparation,
    Anchored(MoveBack),
    Cnot,
    TGate,
}

impl EntryKind {
    pub fn is_pivot(self) -> bool {
        matches!(
            self,
            EntryKind::SyndromeMeasurement | EntryKind::MagicPreparation
        )
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolEntry {
    pub name: String,
    pub protocol: Protocol,
    pub kind: EntryKind,
    /// Replaces the set-wide settings for this protocol.
    pub config: Option<SynthesisConfig>,
}

/// A universal set: syndrome measurement and magic-state preparation fix
/// the placement; everything else is anchored to it.
#[derive(Debug, Clone)]
pub struct ProtocolSet {
    pub entries: Vec<ProtocolEntry>,
    /// Register holding the encoded block in single-block protocols.
    pub data_register: String,
    pub block_size: usize,
}

impl ProtocolSet {
    pub fn steane() -> Self {
        let e = |name: &str, kind| ProtocolEntry {
            name: name.to_string(),
            protocol: fixtures::load(name),
            kind,
            config: None,
        };
        Self {
            entries: vec![
                e("steane_sm", EntryKind::SyndromeMeasurement),
                e("steane_magic", EntryKind::MagicPreparation),
                e("steane_encoder", EntryKind::Anchored(MoveBack::Anchor)),
                e("steane_measz", EntryKind::Anchored(MoveBack::None)),
                e("steane_h", EntryKind::Anchored(MoveBack::Init)),
                e("steane_s", EntryKind::Anchored(MoveBack::Init)),
                e("steane_cnot", EntryKind::Cnot),
                e("steane_t", EntryKind::TGate),
            ],
            data_register: "data".into(),
            block_size: 7,
        }
    }

    pub fn entry(&self, kind: EntryKind) -> Option<&ProtocolEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    pub fn pivots(&self) -> impl Iterator<Item = &ProtocolEntry> {
        self.entries.iter().filter(|e| e.kind.is_pivot())
    }

    pub fn non_pivots(&self) -> impl Iterator<Item = &ProtocolEntry> {
        self.entries.iter().filter(|e| !e.kind.is_pivot())
    }
}

/// One synthesized protocol together with what it is checked against.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub name: String,
    /// The protocol as routed, including any injected moves.
    pub protocol: Protocol,
    pub layout: QubitLayout,
    pub circuit: Circuit,
    pub dd_budget: usize,
    /// Required initial positions.
    pub expected_initial: BTreeMap<String, usize>,
    pub iterations: usize,
    pub timeouts: usize,
    pub failures: usize,
    /// Index and seed of the winning iteration.
    pub best_iteration: usize,
    pub best_seed: u64,
    pub mirror_of: Option<String>,
}

impl Synthesis {
    pub fn validate(&self) -> ValidationReport {
        let anchors = (!self.expected_initial.is_empty()).then_some(&self.expected_initial);
        validate(
            &self.circuit,
            &self.protocol,
            &self.layout,
            &Expectations {
                dd_budget: self.dd_budget,
                anchors,
            },
        )
    }

    /// Cells of `register[0..size]` in the final mapping.
    pub fn final_positions(
        &self,
        register: &str,
        size: usize,
    ) -> Result<Vec<usize>, WorkflowError> {
        LogicalQubitConfig::from_mapping(&self.circuit.final_mapping, register, size, self.layout)
            .map(|c| c.positions)
    }
}

fn register_size(protocol: &Protocol, register: &str) -> Result<usize, WorkflowError> {
    protocol
        .register_qubits(register)
        .map(|q| q.len())
        .ok_or_else(|| WorkflowError::MissingRegister {
            protocol: protocol.name.clone(),
            register: register.to_string(),
        })
}

fn moveback_targets(
    protocol: &Protocol,
    register: &str,
    how: MoveBack,
) -> Result<Vec<(String, Destination)>, WorkflowError> {
    let size = register_size(protocol, register)?;
    Ok((0..size)
        .filter_map(|i| {
            let q = format!("{register}[{i}]");
            let dest = match how {
                MoveBack::None => return None,
                MoveBack::Init => Destination::Init(q.clone()),
                MoveBack::Anchor => Destination::Anchor(q.clone()),
            };
            Some((q, dest))
        })
        .collect())
}

/// Runs the router and packages the best result.
pub fn synthesize(
    name: &str,
    protocol: &Protocol,
    layout: &QubitLayout,
    config: &SynthesisConfig,
    constraints: &Constraints,
) -> Result<Synthesis, WorkflowError> {
    let stage = |source: MapperError| WorkflowError::Stage {
        stage: name.to_string(),
        source,
    };
    let out = run_sabre(protocol, layout, config, constraints).map_err(stage)?;
    Ok(Synthesis {
        name: name.to_string(),
        protocol: protocol.clone(),
        layout: *layout,
        best_iteration: out.best.iteration,
        best_seed: out.best.seed,
        circuit: out.best.circuit,
        dd_budget: config.dd_budget(),
        expected_initial: constraints.pins.clone(),
        iterations: out.iterations,
        timeouts: out.timeouts,
        failures: out.failures.len(),
        mirror_of: None,
    })
}

#[derive(Debug, Clone)]
pub struct PivotResult {
    pub config: LogicalQubitConfig,
    pub syndrome: Synthesis,
    pub magic: Option<Synthesis>,
    /// Final cells of the magic block's data qubits.
    pub magic_final: Option<Vec<usize>>,
}

/// Synthesizes the pivots. The syndrome measurement runs unanchored with
/// its data moved back; its initial data placement becomes the shared
/// configuration. Magic-state preparation, when present, runs unanchored
/// without moves and its final placement is kept for the T gate.
pub fn synthesize_pivots(
    set: &ProtocolSet,
    layout: &QubitLayout,
    config: &SynthesisConfig,
) -> Result<PivotResult, WorkflowError> {
    let reg = &set.data_register;
    let sm_entry = set
        .entry(EntryKind::SyndromeMeasurement)
        .ok_or_else(|| WorkflowError::MissingAnchor("syndrome measurement".into()))?;
    let sm = sm_entry.protocol.inject_moveback(&moveback_targets(
        &sm_entry.protocol,
        reg,
        MoveBack::Init,
    )?)?;
    let sm_config = sm_entry.config.as_ref().unwrap_or(config);
    let syndrome = synthesize(
        &sm_entry.name,
        &sm,
        layout,
        sm_config,
        &Constraints::default(),
    )?;
    let lq = LogicalQubitConfig::from_mapping(
        &syndrome.circuit.initial_mapping,
        reg,
        set.block_size,
        *layout,
    )?;

    let (magic, magic_final) = match set.entry(EntryKind::MagicPreparation) {
        Some(msp) => {
            let msp_config = msp.config.as_ref().unwrap_or(config);
            let magic = synthesize(
                &msp.name,
                &msp.protocol,
                layout,
                msp_config,
                &Constraints::default(),
            )?;
            let fin = magic.final_positions(reg, set.block_size)?;
            (Some(magic), Some(fin))
        }
        None => (None, None),
    };
    Ok(PivotResult {
        config: lq,
        syndrome,
        magic,
        magic_final,
    })
}

/// Synthesizes a single-block protocol with `register` pinned to the
/// configuration.
pub fn synthesize_nonpivot(
    name: &str,
    protocol: &Protocol,
    register: &str,
    move_back: MoveBack,
    anchors: &LogicalQubitConfig,
    config: &SynthesisConfig,
) -> Result<Synthesis, WorkflowError> {
    let size = register_size(protocol, register)?;
    if size != anchors.positions.len() {
        return Err(WorkflowError::MissingAnchor(format!(
            "{register}[{}]",
            anchors.positions.len()
        )));
    }
    let pins = anchors.named(register, |p| p);
    let p = protocol.inject_moveback(&moveback_targets(protocol, register, move_back)?)?;
    let constraints = Constraints {
        anchors: pins.clone(),
        pins,
    };
    synthesize(name, &p, &anchors.layout, config, &constraints)
}

/// Transversal CNOT between two anchored blocks. Mirrored arrangements
/// reuse the circuit of their counterpart.
pub fn synthesize_cnot(
    name: &str,
    protocol: &Protocol,
    (ctrl, trgt): (&str, &str),
    anchors: &LogicalQubitConfig,
    arrangement: Arrangement,
    config: &SynthesisConfig,
) -> Result<Synthesis, WorkflowError> {
    let plan = plan_two_qubit(TwoBlockGate::Cnot, arrangement, &anchors.layout);
    if let Some(source) = plan.mirror_of {
        let base = synthesize_cnot(name, protocol, (ctrl, trgt), anchors, source, config)?;
        return Ok(mirror_cnot(&base, (ctrl, trgt), name));
    }
    let ext = &plan.extension;
    let mut pins = anchors.named(ctrl, |p| ext.relabel(plan.first_block, p));
    pins.extend(anchors.named(trgt, |p| ext.relabel(plan.second_block, p)));
    let mut targets = moveback_targets(protocol, ctrl, MoveBack::Init)?;
    targets.extend(moveback_targets(protocol, trgt, MoveBack::Init)?);
    let p = protocol.inject_moveback(&targets)?;
    synthesize(
        name,
        &p,
        &plan.layout,
        config,
        &Constraints {
            pins,
            anchors: BTreeMap::new(),
        },
    )
}

/// Exchanges the roles of the two blocks: every `ctrl[i]` becomes
/// `trgt[i]` and vice versa, and protocol CNOTs flip direction.
pub fn mirror_cnot(base: &Synthesis, (ctrl, trgt): (&str, &str), name: &str) -> Synthesis {
    let rename = |m: &BTreeMap<String, usize>| -> BTreeMap<String, usize> {
        m.iter()
            .map(|(k, &v)| {
                let k = if let Some(rest) = k.strip_prefix(&format!("{ctrl}[")) {
                    format!("{trgt}[{rest}")
                } else if let Some(rest) = k.strip_prefix(&format!("{trgt}[")) {
                    format!("{ctrl}[{rest}")
                } else {
                    k.clone()
                };
                (k, v)
            })
            .collect()
    };
    let mut circuit = base.circuit.clone();
    circuit.initial_mapping = rename(&circuit.initial_mapping);
    circuit.final_mapping = rename(&circuit.final_mapping);
    circuit.move_back = rename(&circuit.move_back);
    for g in circuit.steps.iter_mut().flatten() {
        if g.op == GateKind::Cx && !g.inserted {
            g.qubits.reverse();
        }
    }
    Synthesis {
        name: name.to_string(),
        circuit,
        expected_initial: rename(&base.expected_initial),
        mirror_of: Some(base.name.clone()),
        ..base.clone()
    }
}

/// The T gate as one circuit: data block pinned to the configuration,
/// magic block pinned where magic-state preparation left it, data moved
/// back afterwards.
pub fn synthesize_t_gate(
    name: &str,
    protocol: &Protocol,
    data_anchor: &LogicalQubitConfig,
    magic_final: &[usize],
    arrangement: Arrangement,
    config: &SynthesisConfig,
) -> Result<Synthesis, WorkflowError> {
    let plan = plan_two_qubit(TwoBlockGate::T, arrangement, &data_anchor.layout);
    let ext = &plan.extension;
    let magic = LogicalQubitConfig::new(data_anchor.layout, "magic", magic_final.to_vec())?;
    let mut pins = data_anchor.named("data", |p| ext.relabel(plan.first_block, p));
    pins.extend(magic.named("magic", |p| ext.relabel(plan.second_block, p)));
    let p = protocol.inject_moveback(&moveback_targets(protocol, "data", MoveBack::Init)?)?;
    synthesize(
        name,
        &p,
        &plan.layout,
        config,
        &Constraints {
            pins,
            anchors: BTreeMap::new(),
        },
    )
}

#[derive(Debug, Clone)]
pub struct SetResult {
    pub config: LogicalQubitConfig,
    pub magic_final: Option<Vec<usize>>,
    pub circuits: Vec<Synthesis>,
}

/// Pivots first, then every non-pivot against the resulting anchors.
pub fn synthesize_set(
    set: &ProtocolSet,
    layout: &QubitLayout,
    config: &SynthesisConfig,
    arrangements: &[Arrangement],
) -> Result<SetResult, WorkflowError> {
    let pivots = synthesize_pivots(set, layout, config)?;
    let lq = pivots.config.clone();
    let mut circuits: Vec<Synthesis> = std::iter::once(pivots.syndrome)
        .chain(pivots.magic)
        .collect();
    for entry in set.non_pivots() {
        let config = entry.config.as_ref().unwrap_or(config);
        match entry.kind {
            EntryKind::Anchored(mb) => circuits.push(synthesize_nonpivot(
                &entry.name,
                &entry.protocol,
                &set.data_register,
                mb,
                &lq,
                config,
            )?),
            EntryKind::Cnot => {
                let mut done: BTreeMap<Arrangement, Synthesis> = BTreeMap::new();
                for &a in arrangements {
                    let name = format!("{}_{}", entry.name, a);
                    let plan = plan_two_qubit(TwoBlockGate::Cnot, a, &lq.layout);
                    let s = match plan.mirror_of.and_then(|m| done.get(&m)) {
                        Some(base) => mirror_cnot(base, ("ctrl", "trgt"), &name),
                        None => synthesize_cnot(
                            &name,
                            &entry.protocol,
                            ("ctrl", "trgt"),
                            &lq,
                            a,
                            config,
                        )?,
                    };
                    done.insert(a, s.clone());
                    circuits.push(s);
                }
            }
            EntryKind::TGate => {
                let magic_final = pivots.magic_final.as_deref().ok_or_else(|| {
                    WorkflowError::MissingAnchor("magic-state preparation".into())
                })?;
                for &a in arrangements {
                    let name = format!("{}_{}", entry.name, a);
                    circuits.push(synthesize_t_gate(
                        &name,
                        &entry.protocol,
                        &lq,
                        magic_final,
                        a,
                        config,
                    )?);
                }
            }
            _ => {}
        }
    }
    Ok(SetResult {
        config: lq,
        magic_final: pivots.magic_final,
        circuits,
    })
}

/// Stage settings of the Golay pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GolayStagePlan {
    pub layout: QubitLayout,
    pub dd_budget: usize,
}

#[derive(Debug, Clone)]
pub struct GolayResult {
    /// Final cells of the prepared block, in the base layout.
    pub m_lq: Vec<usize>,
    pub prep: Synthesis,
    pub verification: Synthesis,
    pub syndrome: Synthesis,
    pub verification_tiles: TiledLayout,
    pub syndrome_tiles: TiledLayout,
}

impl GolayResult {
    pub fn stages(&self) -> [&Synthesis; 3] {
        [&self.prep, &self.verification, &self.syndrome]
    }
}

/// Layout and budget of each stage for a base block.
pub fn golay_stage_plans(base: &QubitLayout) -> Result<[GolayStagePlan; 3], LayoutError> {
    Ok([
        GolayStagePlan {
            layout: *base,
            dd_budget: 0,
        },
        GolayStagePlan {
            layout: TiledLayout::new(*base, 2, 2)?.extended(),
            dd_budget: 0,
        },
        GolayStagePlan {
            layout: TiledLayout::new(*base, 2, 1)?.extended(),
            dd_budget: 1,
        },
    ])
}

/// Non-FT preparation on the base block, verification of four copies on a
/// 2x2 tiling, then syndrome measurement with a supplied ancilla block on a
/// 2x1 tiling.
///
/// `configs` holds the settings of the three stages; their budgets are
/// replaced by the stage budgets.
pub fn golay_pipeline(
    prep: &Protocol,
    verify: &Protocol,
    sm: &Protocol,
    base: &QubitLayout,
    configs: [&SynthesisConfig; 3],
) -> Result<GolayResult, WorkflowError> {
    let plans = golay_stage_plans(base)?;
    let staged = |i: usize| SynthesisConfig {
        dd_budget: Some(plans[i].dd_budget),
        ..configs[i].clone()
    };

    let prep_reg = prep
        .registers()
        .first()
        .map(|r| r.name.clone())
        .ok_or_else(|| WorkflowError::MissingRegister {
            protocol: prep.name.clone(),
            register: "<any>".into(),
        })?;
    let n = register_size(prep, &prep_reg)?;
    let stage1 = synthesize(
        "golay_prep",
        prep,
        base,
        &staged(0),
        &Constraints::default(),
    )?;
    let m_lq = stage1.final_positions(&prep_reg, n)?;
    let lq = LogicalQubitConfig::new(*base, &prep_reg, m_lq.clone())?;

    let tiles2 = TiledLayout::new(*base, 2, 2)?;
    let mut pins = BTreeMap::new();
    for (k, (tr, tc)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let reg = format!("b{}", k + 1);
        register_size(verify, &reg)?;
        let tile = tiles2.tile(tr, tc);
        pins.extend(lq.named(&reg, |p| tiles2.relabel(tile, p)));
    }
    let v = verify.inject_moveback(&moveback_targets(verify, "b1", MoveBack::Init)?)?;
    let stage2 = synthesize(
        "golay_verify",
        &v,
        &tiles2.extended(),
        &staged(1),
        &Constraints {
            pins,
            anchors: BTreeMap::new(),
        },
    )?;

    let tiles3 = TiledLayout::new(*base, 2, 1)?;
    register_size(sm, "anc")?;
    let mut pins = lq.named("data", |p| tiles3.relabel(tiles3.tile(0, 0), p));
    pins.extend(lq.named("anc", |p| tiles3.relabel(tiles3.tile(1, 0), p)));
    let s = sm.inject_moveback(&moveback_targets(sm, "data", MoveBack::Init)?)?;
    let stage3 = synthesize(
        "golay_sm",
        &s,
        &tiles3.extended(),
        &staged(2),
        &Constraints {
            pins,
            anchors: BTreeMap::new(),
        },
    )?;

    Ok(GolayResult {
        m_lq,
        prep: stage1,
        verification: stage2,
        syndrome: stage3,
        verification_tiles: tiles2,
        syndrome_tiles: tiles3,
    })
}

/// Parses a protocol file body and names it after `fallback` when the text
/// does not declare a name.
pub fn load_protocol(text: &str, fallback: &str) -> Result<Protocol, WorkflowError> {
    let mut p = parse_protocol(text)?;
    if p.name == "protocol" {
        p.name = fallback.to_string();
    }
    Ok(p)
}

/// Protocol gates of a circuit in step order, for comparisons between
/// circuits.
pub fn protocol_gates(circuit: &Circuit) -> Vec<&Gate> {
    circuit.gates().filter(|g| !g.inserted).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        for (name, _) in fixtures::ALL {
            let p = fixtures::load(name);
            assert_eq!(p.name, name);
        }
    }

    #[test]
    fn arrangement_jobs() {
        let base = QubitLayout::new(5, 7).unwrap();
        let cnot_jobs = Arrangement::ALL
            .iter()
            .filter(|&&a| {
                plan_two_qubit(TwoBlockGate::Cnot, a, &base)
                    .mirror_of
                    .is_none()
            })
            .count();
        assert_eq!(cnot_jobs, 2);
        let t_jobs = Arrangement::ALL
            .iter()
            .filter(|&&a| {
                plan_two_qubit(TwoBlockGate::T, a, &base)
                    .mirror_of
                    .is_none()
            })
            .count();
        assert_eq!(t_jobs, 4);
        let v = plan_two_qubit(TwoBlockGate::Cnot, Arrangement::VerticalNS, &base);
        assert_eq!(v.layout, QubitLayout::new(10, 7).unwrap());
        assert_eq!(v.extension.relabel(1, 0), 35);
        assert_eq!(v.first_block, 0);
        let h = plan_two_qubit(TwoBlockGate::T, Arrangement::HorizontalEW, &base);
        assert_eq!(h.layout, QubitLayout::new(5, 14).unwrap());
        assert_eq!(h.first_block, 1);
    }

    #[test]
    fn golay_stage_shapes() {
        let plans = golay_stage_plans(&QubitLayout::new(7, 7).unwrap()).unwrap();
        let shapes: Vec<String> = plans.iter().map(|p| p.layout.to_string()).collect();
        assert_eq!(shapes, ["7x7", "14x14", "14x7"]);
        let budgets: Vec<usize> = plans.iter().map(|p| p.dd_budget).collect();
        assert_eq!(budgets, [0, 0, 1]);
    }

    #[test]
    fn arrangement_labels_round_trip() {
        for a in Arrangement::ALL {
            assert_eq!(a.label().parse::<Arrangement>().unwrap(), a);
            assert_eq!(a.flipped().flipped(), a);
        }
    }
}
