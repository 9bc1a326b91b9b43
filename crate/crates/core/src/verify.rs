//! Independent checks of a routed circuit against its source protocol.
//!
//! Nothing here reuses the router's bookkeeping: mapping evolution and
//! qubit statuses are recomputed from the circuit and the protocol alone.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::emit::Circuit;
use crate::error::CircuitFormatError;
use crate::ir::{Destination, GateKind, Protocol};
use crate::layout::QubitLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Locality,
    DdBudget,
    SelfContained,
    PartitionOrder,
    Equivalence,
    MappingConsistency,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Locality,
        Check::DdBudget,
        Check::SelfContained,
        Check::PartitionOrder,
        Check::Equivalence,
        Check::MappingConsistency,
    ];
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::Locality => "locality",
            Check::DdBudget => "dd_budget",
            Check::SelfContained => "self_contained",
            Check::PartitionOrder => "partition_order",
            Check::Equivalence => "equivalence",
            Check::MappingConsistency => "mapping_consistency",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Step index, when the problem sits at one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub qubits: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub status: Status,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: BTreeMap<Check, CheckResult>,
    pub dd_swaps: usize,
    pub inserted_swaps: usize,
}

impl ValidationReport {
    /// True when no applicable check failed.
    pub fn passed(&self) -> bool {
        self.checks.values().all(|c| c.status != Status::Fail)
    }

    pub fn status(&self, check: Check) -> Status {
        self.checks[&check].status
    }

    pub fn failures(&self) -> impl Iterator<Item = (Check, &Violation)> {
        self.checks
            .iter()
            .flat_map(|(k, r)| r.violations.iter().map(move |v| (*k, v)))
    }
}

/// What the circuit is checked against.
#[derive(Debug, Clone, Default)]
pub struct Expectations<'a> {
    /// Allowed SWAPs between two live qubits.
    pub dd_budget: usize,
    /// Required initial positions, e.g. a logical-qubit configuration.
    pub anchors: Option<&'a BTreeMap<String, usize>>,
}

struct Findings(BTreeMap<Check, Vec<Violation>>);

impl Findings {
    fn new() -> Self {
        Findings(Check::ALL.iter().map(|c| (*c, Vec::new())).collect())
    }

    fn add(
        &mut self,
        check: Check,
        step: Option<usize>,
        qubits: &[usize],
        message: impl Into<String>,
    ) {
        self.0.get_mut(&check).unwrap().push(Violation {
            step,
            qubits: qubits.to_vec(),
            message: message.into(),
        });
    }
}

/// Final logical positions after applying every inserted SWAP of `circuit`
/// to its initial mapping. Cells without a named occupant carry dummies.
pub fn replay_permutation(circuit: &Circuit) -> BTreeMap<String, usize> {
    let n = circuit.layout.num_qubits();
    let mut cells: Vec<Option<&str>> = vec![None; n];
    for (name, &p) in &circuit.initial_mapping {
        if p < n {
            cells[p] = Some(name);
        }
    }
    for g in circuit.steps.iter().flatten() {
        if g.op == GateKind::Swap && g.inserted && g.qubits.iter().all(|&q| q < n) {
            cells.swap(g.qubits[0], g.qubits[1]);
        }
    }
    cells
        .iter()
        .enumerate()
        .filter_map(|(p, n)| n.map(|n| (n.to_string(), p)))
        .collect()
}

/// True iff every moved-back qubit ends where it started, so the circuit
/// can be run again right after itself.
pub fn check_composition(circuit: &Circuit) -> bool {
    let fin = replay_permutation(circuit);
    circuit
        .move_back
        .keys()
        .all(|q| fin.contains_key(q) && fin.get(q) == circuit.initial_mapping.get(q))
}

/// Parses circuit JSON and validates it.
pub fn validate_json(
    text: &str,
    protocol: &Protocol,
    layout: &QubitLayout,
    expect: &Expectations<'_>,
) -> Result<ValidationReport, CircuitFormatError> {
    let c = Circuit::from_json(text)?;
    Ok(validate(&c, protocol, layout, expect))
}

pub fn validate(
    circuit: &Circuit,
    protocol: &Protocol,
    layout: &QubitLayout,
    expect: &Expectations<'_>,
) -> ValidationReport {
    let mut f = Findings::new();
    let n = layout.num_qubits();

    // mapping consistency of the header
    if circuit.layout != *layout {
        f.add(
            Check::MappingConsistency,
            None,
            &[],
            format!("circuit layout {} differs from {}", circuit.layout, layout),
        );
    }
    let mut names: Vec<Option<usize>> = vec![None; n];
    let ids: BTreeMap<&str, usize> = protocol
        .qubits()
        .iter()
        .enumerate()
        .map(|(i, q)| (q.name.as_str(), i))
        .collect();
    for q in protocol.qubits() {
        if !circuit.initial_mapping.contains_key(&q.name) {
            f.add(
                Check::MappingConsistency,
                None,
                &[],
                format!("{} missing from initial mapping", q.name),
            );
        }
    }
    for (name, &p) in &circuit.initial_mapping {
        let Some(&id) = ids.get(name.as_str()) else {
            f.add(
                Check::MappingConsistency,
                None,
                &[p],
                format!("{name} is not declared by the protocol"),
            );
            continue;
        };
        if p >= n {
            f.add(
                Check::MappingConsistency,
                None,
                &[p],
                format!("{name} placed outside the layout"),
            );
        } else if let Some(other) = names[p] {
            f.add(
                Check::MappingConsistency,
                None,
                &[p],
                format!("{name} and {} share a cell", protocol.qubits()[other].name),
            );
        } else {
            names[p] = Some(id);
        }
    }
    if let Some(anchors) = expect.anchors {
        for (name, &p) in anchors {
            if circuit.initial_mapping.get(name) != Some(&p) {
                f.add(
                    Check::MappingConsistency,
                    None,
                    &[p],
                    format!("{name} does not start on its anchor {p}"),
                );
            }
        }
    }
    if circuit.partitions.len() != circuit.steps.len() {
        f.add(
            Check::PartitionOrder,
            None,
            &[],
            "partition stamps do not match step count",
        );
    }

    // program-order pointers per logical qubit
    let instrs = protocol.instructions();
    let mut per_qubit: Vec<Vec<usize>> = vec![Vec::new(); protocol.num_qubits()];
    for (i, instr) in instrs.iter().enumerate() {
        if instr.kind.is_physical() {
            for &q in &instr.qubits {
                per_qubit[q].push(i);
            }
        }
    }
    let mut partition_of = Vec::with_capacity(instrs.len());
    let mut part = 0;
    for instr in instrs {
        partition_of.push(part);
        if instr.kind == GateKind::Barrier {
            part += 1;
        }
    }
    let mut cursor = vec![0usize; protocol.num_qubits()];

    // statuses, recomputed from roles
    let mut first: Vec<Option<GateKind>> = vec![None; protocol.num_qubits()];
    for instr in instrs.iter().filter(|i| i.kind.is_physical()) {
        for &q in &instr.qubits {
            if first[q].is_none() {
                first[q] = Some(instr.kind);
            }
        }
    }
    let mut live: Vec<bool> = (0..protocol.num_qubits())
        .map(|q| {
            let role = protocol.role(q);
            let input = matches!(role, crate::ir::Role::Data | crate::ir::Role::Magic);
            input && !matches!(first[q], Some(GateKind::PrepZ | GateKind::PrepX))
        })
        .collect();

    let mut dd_swaps = 0;
    let mut inserted_swaps = 0;
    let mut last_partition = 0;
    for (s, step) in circuit.steps.iter().enumerate() {
        let stamp = circuit.partitions.get(s).copied().unwrap_or(0);
        if stamp < last_partition {
            f.add(
                Check::PartitionOrder,
                Some(s),
                &[],
                format!("partition {stamp} after {last_partition}"),
            );
        }
        last_partition = last_partition.max(stamp);
        let mut busy = vec![false; n];
        for g in step {
            if g.qubits.iter().any(|&q| q >= n) {
                f.add(
                    Check::Locality,
                    Some(s),
                    &g.qubits,
                    "qubit outside the layout",
                );
                continue;
            }
            for &q in &g.qubits {
                if std::mem::replace(&mut busy[q], true) {
                    f.add(
                        Check::Locality,
                        Some(s),
                        &[q],
                        "qubit used twice in one step",
                    );
                }
            }
            if g.qubits.len() != g.op.arity() || !g.op.is_physical() {
                f.add(
                    Check::Equivalence,
                    Some(s),
                    &g.qubits,
                    format!("malformed `{}`", g.op.mnemonic()),
                );
                continue;
            }
            if g.qubits.len() == 2 && !layout.are_adjacent(g.qubits[0], g.qubits[1]) {
                f.add(
                    Check::Locality,
                    Some(s),
                    &g.qubits,
                    format!("{} on non-adjacent qubits", g.op.display_name()),
                );
            }
        }
        for g in step {
            if g.qubits.len() != g.op.arity() || g.qubits.iter().any(|&q| q >= n) {
                continue;
            }
            if g.inserted {
                if g.op != GateKind::Swap {
                    f.add(
                        Check::Equivalence,
                        Some(s),
                        &g.qubits,
                        "only SWAPs may be inserted",
                    );
                    continue;
                }
                inserted_swaps += 1;
                let (a, b) = (g.qubits[0], g.qubits[1]);
                let both_live = [a, b].iter().all(|&p| names[p].is_some_and(|l| live[l]));
                if both_live {
                    dd_swaps += 1;
                }
                names.swap(a, b);
                continue;
            }
            let logical: Option<Vec<usize>> = g.qubits.iter().map(|&p| names[p]).collect();
            let Some(logical) = logical else {
                f.add(
                    Check::Equivalence,
                    Some(s),
                    &g.qubits,
                    "protocol gate on an unoccupied cell",
                );
                continue;
            };
            let expected = per_qubit[logical[0]].get(cursor[logical[0]]).copied();
            let matches = expected.is_some_and(|i| {
                instrs[i].kind == g.op
                    && instrs[i].qubits == logical
                    && logical
                        .iter()
                        .all(|&q| per_qubit[q].get(cursor[q]) == Some(&i))
            });
            if !matches {
                let label: Vec<&str> = logical.iter().map(|&q| protocol.qubit_name(q)).collect();
                f.add(
                    Check::Equivalence,
                    Some(s),
                    &g.qubits,
                    format!(
                        "{} {} is out of program order",
                        g.op.mnemonic(),
                        label.join(", ")
                    ),
                );
                continue;
            }
            let i = expected.unwrap();
            if partition_of[i] != stamp {
                f.add(
                    Check::PartitionOrder,
                    Some(s),
                    &g.qubits,
                    format!(
                        "instruction {i} of partition {} placed in partition {stamp}",
                        partition_of[i]
                    ),
                );
            }
            for &q in &logical {
                cursor[q] += 1;
            }
            match g.op {
                k if k.is_prep() => logical.iter().for_each(|&q| live[q] = true),
                k if k.is_meas() => logical.iter().for_each(|&q| live[q] = false),
                GateKind::Swap => live.swap(logical[0], logical[1]),
                _ => {}
            }
        }
    }
    for q in 0..protocol.num_qubits() {
        if cursor[q] < per_qubit[q].len() {
            f.add(
                Check::Equivalence,
                None,
                &[],
                format!(
                    "{} instruction(s) on {} never executed",
                    per_qubit[q].len() - cursor[q],
                    protocol.qubit_name(q)
                ),
            );
        }
    }

    if dd_swaps > expect.dd_budget {
        f.add(
            Check::DdBudget,
            None,
            &[],
            format!(
                "{dd_swaps} data-data SWAPs exceed the budget of {}",
                expect.dd_budget
            ),
        );
    }
    if dd_swaps != circuit.analysis.dd_swaps {
        f.add(
            Check::DdBudget,
            None,
            &[],
            format!(
                "circuit reports {} data-data SWAPs, replay finds {dd_swaps}",
                circuit.analysis.dd_swaps
            ),
        );
    }
    if inserted_swaps != circuit.analysis.inserted_swaps {
        f.add(
            Check::MappingConsistency,
            None,
            &[],
            format!(
                "circuit reports {} inserted SWAPs, replay finds {inserted_swaps}",
                circuit.analysis.inserted_swaps
            ),
        );
    }
    if circuit.analysis.depth != circuit.steps.len() {
        f.add(
            Check::MappingConsistency,
            None,
            &[],
            "reported depth differs from step count",
        );
    }

    let fin = replay_permutation(circuit);
    if fin != circuit.final_mapping {
        let moved: Vec<usize> = fin
            .iter()
            .filter(|(k, v)| circuit.final_mapping.get(*k) != Some(v))
            .map(|(_, &v)| v)
            .collect();
        f.add(
            Check::MappingConsistency,
            None,
            &moved,
            "final mapping differs from replay",
        );
    }
    for (name, &target) in &circuit.move_back {
        match fin.get(name) {
            Some(&p) if p == target => {}
            Some(&p) => f.add(
                Check::SelfContained,
                None,
                &[p, target],
                format!("{name} ends on {p} instead of {target}"),
            ),
            None => f.add(
                Check::SelfContained,
                None,
                &[target],
                format!("{name} is not in the circuit"),
            ),
        }
    }
    // every move in the protocol must be honoured and declared
    let has_moves = protocol
        .instructions()
        .iter()
        .any(|i| i.kind == GateKind::Move);
    for instr in protocol
        .instructions()
        .iter()
        .filter(|i| i.kind == GateKind::Move)
    {
        let name = protocol.qubit_name(instr.qubits[0]);
        let target = match &instr.dest {
            Some(Destination::Physical(p)) => Some(*p),
            Some(Destination::Init(q)) => circuit.initial_mapping.get(q).copied(),
            Some(Destination::Anchor(q)) => expect.anchors.and_then(|a| a.get(q).copied()),
            None => None,
        };
        match (target, circuit.move_back.get(name)) {
            (_, None) => f.add(
                Check::SelfContained,
                None,
                &[],
                format!("move of {name} is not recorded"),
            ),
            (Some(t), Some(&m)) if t != m => f.add(
                Check::SelfContained,
                None,
                &[t, m],
                format!("{name} is moved to {m}, protocol asks for {t}"),
            ),
            _ => {}
        }
    }
    if !circuit.move_back.is_empty() && !check_composition(circuit) {
        let displaced: Vec<usize> = circuit
            .move_back
            .keys()
            .filter(|q| fin.get(*q) != circuit.initial_mapping.get(*q))
            .filter_map(|q| fin.get(q).copied())
            .collect();
        f.add(
            Check::SelfContained,
            None,
            &displaced,
            "moved-back qubits do not return to their initial cells",
        );
    }

    let checks = f
        .0
        .into_iter()
        .map(|(check, violations)| {
            let status =
                if check == Check::SelfContained && circuit.move_back.is_empty() && !has_moves {
                    Status::NotApplicable
                } else if violations.is_empty() {
                    Status::Pass
                } else {
                    Status::Fail
                };
            (check, CheckResult { status, violations })
        })
        .collect();
    ValidationReport {
        checks,
        dd_swaps,
        inserted_swaps,
    }
}
