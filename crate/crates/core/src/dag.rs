//! Dependency graphs over protocol instructions and the front layer that
//! walks them.

use std::fmt::Write as _;

use crate::error::DagError;
use crate::ir::{GateKind, Protocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagNode {
    pub kind: GateKind,
    pub preds: Vec<usize>,
    pub succs: Vec<usize>,
}

/// Node `i` always stands for instruction `i` of the source protocol; the
/// direction only decides which way the edges point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    direction: Direction,
    nodes: Vec<DagNode>,
    roots: Vec<usize>,
}

impl Dag {
    pub fn build(protocol: &Protocol, direction: Direction) -> Dag {
        let instrs = protocol.instructions();
        let n = instrs.len();
        let mut nodes: Vec<DagNode> = instrs
            .iter()
            .map(|i| DagNode {
                kind: i.kind,
                preds: Vec::new(),
                succs: Vec::new(),
            })
            .collect();
        let order: Vec<usize> = match direction {
            Direction::Forward => (0..n).collect(),
            Direction::Backward => (0..n).rev().collect(),
        };
        let mut last: Vec<Option<usize>> = vec![None; protocol.num_qubits()];
        let mut last_barrier: Option<usize> = None;
        // nodes added since the last barrier
        let mut segment: Vec<usize> = Vec::new();

        for id in order {
            let instr = &instrs[id];
            if instr.kind == GateKind::Barrier {
                let mut preds: Vec<usize> = segment
                    .iter()
                    .copied()
                    .filter(|&s| nodes[s].succs.is_empty())
                    .collect();
                if preds.is_empty() {
                    preds.extend(last_barrier);
                }
                for p in preds {
                    link(&mut nodes, p, id);
                }
                last.iter_mut().for_each(|l| *l = None);
                last_barrier = Some(id);
                segment.clear();
                continue;
            }
            let mut preds: Vec<usize> = instr
                .qubits
                .iter()
                .filter_map(|&q| last[q].or(last_barrier))
                .collect();
            preds.sort_unstable();
            preds.dedup();
            for p in preds {
                link(&mut nodes, p, id);
            }
            for &q in &instr.qubits {
                last[q] = Some(id);
            }
            segment.push(id);
        }
        let roots = roots_of(&nodes, direction);
        Dag {
            direction,
            nodes,
            roots,
        }
    }

    /// Builds a DAG from explicit edges, e.g. to model dependencies that
    /// `build` would not produce.
    pub fn from_edges(kinds: &[GateKind], edges: &[(usize, usize)], direction: Direction) -> Dag {
        let mut nodes: Vec<DagNode> = kinds
            .iter()
            .map(|&kind| DagNode {
                kind,
                preds: Vec::new(),
                succs: Vec::new(),
            })
            .collect();
        for &(a, b) in edges {
            link(&mut nodes, a, b);
        }
        let roots = roots_of(&nodes, direction);
        Dag {
            direction,
            nodes,
            roots,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &DagNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// All edges as `(from, to)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(a, n)| n.succs.iter().map(move |&b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Longest path counting every physical gate as one step.
    pub fn longest_path(&self) -> usize {
        let order = self.topological_order();
        let mut dist = vec![0usize; self.nodes.len()];
        let mut best = 0;
        for id in order {
            let w = usize::from(self.nodes[id].kind.is_physical());
            let start = self.nodes[id]
                .preds
                .iter()
                .map(|&p| dist[p])
                .max()
                .unwrap_or(0);
            dist[id] = start + w;
            best = best.max(dist[id]);
        }
        best
    }

    /// Kahn's algorithm, smallest ready id first.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = self.nodes.iter().map(|n| n.preds.len()).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = indeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| std::cmp::Reverse(i))
            .collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(std::cmp::Reverse(id)) = ready.pop() {
            out.push(id);
            for &s in &self.nodes[id].succs {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.push(std::cmp::Reverse(s));
                }
            }
        }
        out
    }

    pub fn to_dot(&self, protocol: &Protocol) -> String {
        let mut out = String::from("digraph dag {\n  node [shape=box, fontname=monospace];\n");
        for (id, instr) in protocol
            .instructions()
            .iter()
            .enumerate()
            .take(self.nodes.len())
        {
            let label = protocol.format_instruction(instr).replace('"', "\\\"");
            let _ = writeln!(out, "  n{id} [label=\"{id}: {label}\"];");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }
}

fn link(nodes: &mut [DagNode], from: usize, to: usize) {
    if !nodes[from].succs.contains(&to) {
        nodes[from].succs.push(to);
        nodes[to].preds.push(from);
    }
}

fn roots_of(nodes: &[DagNode], direction: Direction) -> Vec<usize> {
    let mut roots: Vec<usize> = (0..nodes.len())
        .filter(|&i| nodes[i].preds.is_empty())
        .collect();
    if direction == Direction::Backward {
        roots.reverse();
    }
    roots
}

/// Roots of the not-yet-emitted part of a DAG.
#[derive(Debug, Clone)]
pub struct FrontLayer {
    nodes: Vec<usize>,
    holding: Vec<usize>,
    pending: Vec<usize>,
    emitted: Vec<bool>,
    emitted_count: usize,
    partition: usize,
}

impl FrontLayer {
    pub fn new(dag: &Dag) -> Self {
        Self {
            nodes: dag.roots().to_vec(),
            holding: Vec::new(),
            pending: dag.nodes().iter().map(|n| n.preds.len()).collect(),
            emitted: vec![false; dag.len()],
            emitted_count: 0,
            partition: 0,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn holding(&self) -> &[usize] {
        &self.holding
    }

    pub fn contains(&self, id: usize) -> bool {
        self.nodes.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.holding.is_empty()
    }

    /// Barrier partitions flushed so far.
    pub fn partition(&self) -> usize {
        self.partition
    }

    pub fn is_emitted(&self, id: usize) -> bool {
        self.emitted[id]
    }

    pub fn all_emitted(&self) -> bool {
        self.emitted_count == self.emitted.len()
    }

    pub fn barrier(&self, dag: &Dag) -> Option<usize> {
        self.nodes
            .iter()
            .copied()
            .find(|&id| dag.node(id).kind == GateKind::Barrier)
    }

    /// Removes an executed node and promotes successors that became ready.
    pub fn pop_executed(&mut self, dag: &Dag, id: usize) -> Result<(), DagError> {
        if dag.node(id).kind == GateKind::Barrier {
            return Err(DagError::NotInFrontLayer(id));
        }
        let pos = self
            .nodes
            .iter()
            .position(|&n| n == id)
            .ok_or(DagError::NotInFrontLayer(id))?;
        self.nodes.remove(pos);
        if self.emitted[id] {
            // re-inserted node: successors were released the first time
            return Ok(());
        }
        self.emitted[id] = true;
        self.emitted_count += 1;
        let hold = self.barrier(dag).is_some();
        for &s in &dag.node(id).succs {
            self.pending[s] -= 1;
            if self.pending[s] == 0 {
                if hold {
                    self.holding.push(s);
                } else {
                    self.nodes.push(s);
                }
            }
        }
        Ok(())
    }

    /// Retires the barrier that is alone in the front layer and releases
    /// everything held behind it.
    pub fn flush_barrier(&mut self, dag: &Dag) -> Result<(), DagError> {
        let barrier = self.barrier(dag).ok_or(DagError::NoBarrier)?;
        if self.nodes.len() != 1 {
            return Err(DagError::BarrierNotAlone);
        }
        self.nodes.clear();
        self.nodes.append(&mut self.holding);
        self.emitted[barrier] = true;
        self.emitted_count += 1;
        for &s in &dag.node(barrier).succs {
            self.pending[s] -= 1;
            if self.pending[s] == 0 {
                self.nodes.push(s);
            }
        }
        self.partition += 1;
        Ok(())
    }

    /// Puts an already emitted node back into the front layer.
    pub fn reinsert(&mut self, id: usize) {
        if !self.nodes.contains(&id) {
            self.nodes.push(id);
        }
    }
}
