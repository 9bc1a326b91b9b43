//! Timestep-structured circuits, their JSON form, and grid snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::CircuitFormatError;
use crate::ir::{GateCounts, GateKind, Protocol};
use crate::layout::QubitLayout;
use crate::mapper::{Mapping, RoutedOp};

/// One instruction on physical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub op: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dest: Option<usize>,
    /// Added by routing rather than taken from the protocol.
    pub inserted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitAnalysis {
    pub depth: usize,
    /// Physical qubits of the layout.
    pub qubits: usize,
    pub kq: u64,
    /// Protocol gates only; inserted SWAPs are counted separately.
    pub gate_counts: GateCounts,
    pub inserted_swaps: usize,
    /// Inserted SWAPs that joined two live qubits.
    pub dd_swaps: usize,
    pub barriers: usize,
    pub partitions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub layout: QubitLayout,
    pub protocol: String,
    pub initial_mapping: BTreeMap<String, usize>,
    pub steps: Vec<Vec<Gate>>,
    /// Barrier partition of every step.
    pub partitions: Vec<usize>,
    pub final_mapping: BTreeMap<String, usize>,
    /// Qubits that must end on a given cell.
    #[serde(default)]
    pub move_back: BTreeMap<String, usize>,
    pub analysis: CircuitAnalysis,
}

/// ASAP placement of `ops` onto timesteps.
///
/// Each op goes to the earliest step after the previous op on any of its
/// qubits and not before the first step of its barrier partition.
pub fn schedule_steps(ops: &[RoutedOp], num_physical: usize) -> (Vec<Vec<Gate>>, Vec<usize>) {
    let mut steps: Vec<Vec<Gate>> = Vec::new();
    let mut stamps: Vec<usize> = Vec::new();
    let mut next_free = vec![0usize; num_physical];
    let mut floor = 0;
    let mut partition = ops.first().map_or(0, |o| o.partition);
    for op in ops {
        if op.partition != partition {
            partition = op.partition;
            floor = steps.len();
        }
        let step = op
            .qubits
            .iter()
            .map(|&q| next_free[q])
            .max()
            .unwrap_or(0)
            .max(floor);
        for &q in &op.qubits {
            next_free[q] = step + 1;
        }
        if step == steps.len() {
            steps.push(Vec::new());
            stamps.push(op.partition);
        }
        steps[step].push(Gate {
            op: op.kind,
            qubits: op.qubits.clone(),
            dest: None,
            inserted: op.inserted,
        });
    }
    (steps, stamps)
}

pub fn compute_kq(depth: usize, qubits: usize) -> u64 {
    depth as u64 * qubits as u64
}

impl Circuit {
    /// Builds a circuit from a routed op sequence.
    pub fn from_routed(
        protocol: &Protocol,
        layout: &QubitLayout,
        initial: &Mapping,
        final_mapping: &Mapping,
        ops: &[RoutedOp],
        move_back: BTreeMap<String, usize>,
        dd_swaps: usize,
    ) -> Circuit {
        let (steps, partitions) = schedule_steps(ops, layout.num_qubits());
        let mut counts = GateCounts::default();
        let mut inserted = 0;
        for op in ops {
            if op.inserted {
                inserted += 1;
            } else {
                counts.add(op.kind);
            }
        }
        let barriers = protocol.num_barriers();
        let depth = steps.len();
        Circuit {
            layout: *layout,
            protocol: protocol.name.clone(),
            initial_mapping: initial.to_named(protocol),
            steps,
            partitions,
            final_mapping: final_mapping.to_named(protocol),
            move_back,
            analysis: CircuitAnalysis {
                depth,
                qubits: layout.num_qubits(),
                kq: compute_kq(depth, layout.num_qubits()),
                gate_counts: counts,
                inserted_swaps: inserted,
                dd_swaps,
                barriers,
                partitions: barriers + 1,
            },
        }
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.steps.iter().flatten()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("circuit serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Circuit, CircuitFormatError> {
        let c: Circuit = serde_json::from_str(text)?;
        let n = c.layout.num_qubits();
        let out_of_range = c
            .gates()
            .flat_map(|g| g.qubits.iter().copied())
            .chain(c.initial_mapping.values().copied())
            .chain(c.final_mapping.values().copied())
            .chain(c.move_back.values().copied())
            .find(|&q| q >= n);
        if let Some(qubit) = out_of_range {
            return Err(CircuitFormatError::OutOfRange {
                qubit,
                layout: c.layout.to_string(),
            });
        }
        Ok(c)
    }

    /// Occupant names per cell before the first step.
    fn occupants(&self) -> Vec<Option<String>> {
        let mut cells = vec![None; self.layout.num_qubits()];
        for (name, &p) in &self.initial_mapping {
            if p < cells.len() {
                cells[p] = Some(name.clone());
            }
        }
        cells
    }

    /// One text grid per step showing each cell's occupant after the step
    /// and the glyph of the gate applied to it.
    pub fn render_snapshots(&self) -> Vec<String> {
        let mut cells = self.occupants();
        let width = self
            .initial_mapping
            .keys()
            .map(|k| k.len())
            .max()
            .unwrap_or(1)
            .max(1)
            + 5;
        let mut out = Vec::with_capacity(self.steps.len());
        for (i, step) in self.steps.iter().enumerate() {
            let glyphs = self.step_glyphs(step);
            apply_swaps(&mut cells, step);
            let mut s = String::new();
            let _ = writeln!(
                s,
                "step {} (partition {})",
                i + 1,
                self.partitions.get(i).copied().unwrap_or(0)
            );
            for r in 0..self.layout.rows() {
                let mut row = String::new();
                for c in 0..self.layout.cols() {
                    let p = self.layout.index(r, c);
                    let name = cells[p].as_deref().unwrap_or(".");
                    let cell = match &glyphs[p] {
                        Some(g) => format!("{name}:{g}"),
                        None => name.to_string(),
                    };
                    let _ = write!(row, "{cell:<width$}");
                }
                s.push_str(row.trim_end());
                s.push('\n');
            }
            out.push(s);
        }
        out
    }

    fn step_glyphs(&self, step: &[Gate]) -> Vec<Option<String>> {
        let mut glyphs = vec![None; self.layout.num_qubits()];
        for (k, g) in step.iter().enumerate() {
            match g.qubits.as_slice() {
                [a] => glyphs[*a] = Some(glyph(g.op).to_string()),
                [a, b] => {
                    let (ga, gb) = match g.op {
                        GateKind::Cx => ("C", "X"),
                        _ => ("S", "S"),
                    };
                    glyphs[*a] = Some(format!("{ga}{k}"));
                    glyphs[*b] = Some(format!("{gb}{k}"));
                }
                _ => {}
            }
        }
        glyphs
    }

    /// SVG drawing of one step (0-based), after the step is applied.
    pub fn render_svg(&self, step: usize) -> String {
        const CELL: usize = 64;
        let mut cells = self.occupants();
        for s in &self.steps[..step.min(self.steps.len())] {
            apply_swaps(&mut cells, s);
        }
        let gates: &[Gate] = self.steps.get(step).map_or(&[], Vec::as_slice);
        let glyphs = self.step_glyphs(gates);
        apply_swaps(&mut cells, gates);
        let (w, h) = (self.layout.cols() * CELL, self.layout.rows() * CELL);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"monospace\" font-size=\"10\">\n"
        );
        for g in gates.iter().filter(|g| g.qubits.len() == 2) {
            let (r0, c0) = self.layout.coords(g.qubits[0]);
            let (r1, c1) = self.layout.coords(g.qubits[1]);
            let colour = if g.inserted { "#c0392b" } else { "#2c3e50" };
            let _ = writeln!(
                s,
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{colour}\" stroke-width=\"3\"/>",
                c0 * CELL + CELL / 2,
                r0 * CELL + CELL / 2,
                c1 * CELL + CELL / 2,
                r1 * CELL + CELL / 2
            );
        }
        for p in 0..self.layout.num_qubits() {
            let (r, c) = self.layout.coords(p);
            let (x, y) = (c * CELL + 4, r * CELL + 4);
            let fill = if cells[p].is_some() {
                "#ecf0f1"
            } else {
                "#ffffff"
            };
            let _ = writeln!(
                s,
                "  <rect x=\"{x}\" y=\"{y}\" width=\"{}\" height=\"{}\" rx=\"6\" fill=\"{fill}\" stroke=\"#7f8c8d\"/>",
                CELL - 8,
                CELL - 8
            );
            if let Some(name) = &cells[p] {
                let _ = writeln!(
                    s,
                    "  <text x=\"{}\" y=\"{}\">{}</text>",
                    x + 4,
                    y + 18,
                    xml_escape(name)
                );
            }
            if let Some(g) = &glyphs[p] {
                let _ = writeln!(
                    s,
                    "  <text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>",
                    x + 4,
                    y + 38,
                    xml_escape(g)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn apply_swaps(cells: &mut [Option<String>], step: &[Gate]) {
    for g in step.iter().filter(|g| g.op == GateKind::Swap) {
        cells.swap(g.qubits[0], g.qubits[1]);
    }
}

fn glyph(kind: GateKind) -> &'static str {
    match kind {
        GateKind::H => "[H]",
        GateKind::PrepZ => "(0)",
        GateKind::PrepX => "(+)",
        GateKind::MeasZ => "<Z>",
        GateKind::MeasX => "<X>",
        other => other.mnemonic(),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_protocol;

    fn op(kind: GateKind, qubits: &[usize], partition: usize) -> RoutedOp {
        RoutedOp {
            kind,
            qubits: qubits.to_vec(),
            inserted: false,
            partition,
        }
    }

    #[test]
    fn kq_table_values() {
        assert_eq!(compute_kq(18, 15), 270);
        assert_eq!(compute_kq(44, 12), 528);
        assert_eq!(compute_kq(35, 35), 1225);
    }

    #[test]
    fn scheduling_examples() {
        let parallel: Vec<_> = (0..7).map(|i| op(GateKind::Cx, &[i, i + 7], 0)).collect();
        assert_eq!(schedule_steps(&parallel, 14).0.len(), 1);

        let serial = [op(GateKind::H, &[0], 0), op(GateKind::H, &[0], 0)];
        assert_eq!(schedule_steps(&serial, 2).0.len(), 2);

        let split = [op(GateKind::Cx, &[0, 1], 0), op(GateKind::H, &[2], 1)];
        let (steps, stamps) = schedule_steps(&split, 3);
        assert_eq!(steps.len(), 2);
        assert_eq!(stamps, vec![0, 1]);
    }

    fn tiny() -> Circuit {
        let p = parse_protocol("qreg q[2] role=data;\ncx q[0], q[1];\nh q[1];").unwrap();
        let l = QubitLayout::new(1, 3).unwrap();
        let init = Mapping::from_l2p(vec![0, 2], 3).unwrap();
        let mut fin = init.clone();
        fin.swap_physical(0, 1);
        let ops = vec![
            RoutedOp::inserted_swap(0, 1, 0),
            op(GateKind::Cx, &[1, 2], 0),
            op(GateKind::H, &[2], 0),
        ];
        Circuit::from_routed(&p, &l, &init, &fin, &ops, BTreeMap::new(), 0)
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let c = tiny();
        let text = c.to_json();
        let back = Circuit::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"inserted\": true"));
    }

    #[test]
    fn empty_circuit_has_no_steps() {
        let p = parse_protocol("qreg q[1];").unwrap();
        let l = QubitLayout::new(1, 1).unwrap();
        let m = Mapping::identity(1, 1);
        let c = Circuit::from_routed(&p, &l, &m, &m, &[], BTreeMap::new(), 0);
        assert!(c.steps.is_empty());
        assert!(c.to_json().contains("\"steps\": []"));
    }

    #[test]
    fn rejects_out_of_range_qubits() {
        let text = tiny().to_json().replace("\"q[1]\": 2", "\"q[1]\": 9");
        assert!(matches!(
            Circuit::from_json(&text),
            Err(CircuitFormatError::OutOfRange { qubit: 9, .. })
        ));
        assert!(matches!(
            Circuit::from_json("{"),
            Err(CircuitFormatError::Json(_))
        ));
    }

    #[test]
    fn snapshots_one_per_step() {
        let c = tiny();
        let snaps = c.render_snapshots();
        assert_eq!(snaps.len(), 3);
        // the swap is drawn on both cells
        assert_eq!(snaps[0].matches(":S0").count(), 2);
        // after the swap q[0] sits in the middle
        assert!(snaps[2].lines().nth(1).unwrap().starts_with(". "));
        assert!(c.render_svg(0).starts_with("<svg"));
    }
}
