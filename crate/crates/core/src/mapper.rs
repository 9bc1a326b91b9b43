//! SABRE-style routing with a budget on SWAPs between live qubits.
//!
//! Each iteration picks a random initial mapping and runs three traversals
//! (forward, backward, forward). The last traversal's circuit together with
//! its input mapping is the iteration's result, and the best iteration wins.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::{Dag, Direction, FrontLayer};
use crate::emit::Circuit;
use crate::error::{MapperError, ProtocolError};
use crate::ir::{GateKind, Instruction, Protocol};
use crate::layout::{DistanceMatrix, QubitLayout};

/// Logical to physical assignment. Physical cells without a logical
/// occupant hold dummies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mapping {
    l2p: Vec<usize>,
    p2l: Vec<Option<usize>>,
}

impl Mapping {
    /// Returns `None` unless `l2p` is injective into `0..num_physical`.
    pub fn from_l2p(l2p: Vec<usize>, num_physical: usize) -> Option<Self> {
        let mut p2l = vec![None; num_physical];
        for (l, &p) in l2p.iter().enumerate() {
            if p >= num_physical || p2l[p].is_some() {
                return None;
            }
            p2l[p] = Some(l);
        }
        Some(Self { l2p, p2l })
    }

    pub fn identity(num_logical: usize, num_physical: usize) -> Self {
        Self::from_l2p((0..num_logical).collect(), num_physical).expect("identity fits")
    }

    /// Uniformly random placement with `pins` (logical, physical) fixed first.
    pub fn random(
        num_logical: usize,
        num_physical: usize,
        pins: &[(usize, usize)],
        rng: &mut impl Rng,
    ) -> Self {
        let mut l2p = vec![usize::MAX; num_logical];
        let mut taken = vec![false; num_physical];
        for &(l, p) in pins {
            l2p[l] = p;
            taken[p] = true;
        }
        let mut free: Vec<usize> = (0..num_physical).filter(|&p| !taken[p]).collect();
        free.shuffle(rng);
        let mut free = free.into_iter();
        for slot in l2p.iter_mut().filter(|s| **s == usize::MAX) {
            *slot = free.next().expect("layout has room for every qubit");
        }
        Self::from_l2p(l2p, num_physical).expect("random placement is injective")
    }

    pub fn phys(&self, logical: usize) -> usize {
        self.l2p[logical]
    }

    pub fn logical(&self, physical: usize) -> Option<usize> {
        self.p2l[physical]
    }

    pub fn l2p(&self) -> &[usize] {
        &self.l2p
    }

    pub fn num_logical(&self) -> usize {
        self.l2p.len()
    }

    pub fn num_physical(&self) -> usize {
        self.p2l.len()
    }

    /// Exchanges the occupants of two physical cells.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.p2l[a], self.p2l[b]);
        self.p2l[a] = lb;
        self.p2l[b] = la;
        if let Some(l) = la {
            self.l2p[l] = b;
        }
        if let Some(l) = lb {
            self.l2p[l] = a;
        }
    }

    /// Moves logical `l` onto cell `p`, exchanging with whatever sits there.
    pub fn place(&mut self, l: usize, p: usize) {
        let from = self.l2p[l];
        if from != p {
            self.swap_physical(from, p);
        }
    }

    pub fn to_named(&self, protocol: &Protocol) -> BTreeMap<String, usize> {
        self.l2p
            .iter()
            .enumerate()
            .map(|(l, &p)| (protocol.qubit_name(l).to_string(), p))
            .collect()
    }

    pub fn from_named(
        protocol: &Protocol,
        named: &BTreeMap<String, usize>,
        num_physical: usize,
    ) -> Option<Self> {
        let l2p = (0..protocol.num_qubits())
            .map(|l| named.get(protocol.qubit_name(l)).copied())
            .collect::<Option<Vec<_>>>()?;
        Self::from_l2p(l2p, num_physical)
    }
}

/// Activated/inactivated status of every logical qubit's current state.
///
/// Status belongs to the state, so it moves with the logical qubit when a
/// routing SWAP relocates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageTracker {
    active: Vec<bool>,
}

impl UsageTracker {
    pub fn from_flags(active: Vec<bool>) -> Self {
        Self { active }
    }

    /// Status at the start of a traversal in `direction`.
    ///
    /// Forward: data and magic qubits whose first operation is not a
    /// preparation hold their input state. Backward: the status left over
    /// after running the whole protocol forward.
    pub fn initial(protocol: &Protocol, direction: Direction) -> Self {
        let mut first: Vec<Option<GateKind>> = vec![None; protocol.num_qubits()];
        for instr in protocol.instructions() {
            if !instr.kind.is_physical() {
                continue;
            }
            for &q in &instr.qubits {
                first[q].get_or_insert(instr.kind);
            }
        }
        let active = (0..protocol.num_qubits())
            .map(|q| {
                protocol.role(q).is_encoded_input() && !first[q].is_some_and(GateKind::is_prep)
            })
            .collect();
        let mut tracker = Self { active };
        if direction == Direction::Backward {
            for instr in protocol.instructions() {
                tracker.update(instr, Direction::Forward);
            }
        }
        tracker
    }

    pub fn is_active(&self, logical: usize) -> bool {
        self.active[logical]
    }

    /// Whether the cell currently holds live state.
    pub fn is_data_type(&self, mapping: &Mapping, physical: usize) -> bool {
        mapping.logical(physical).is_some_and(|l| self.active[l])
    }

    pub fn update(&mut self, instr: &Instruction, direction: Direction) {
        let set = match (instr.kind.is_prep(), instr.kind.is_meas(), direction) {
            (true, _, Direction::Forward) | (_, true, Direction::Backward) => true,
            (_, true, Direction::Forward) | (true, _, Direction::Backward) => false,
            _ => {
                if instr.kind == GateKind::Swap {
                    self.active.swap(instr.qubits[0], instr.qubits[1]);
                }
                return;
            }
        };
        for &q in &instr.qubits {
            self.active[q] = set;
        }
    }
}

/// Applies the status rule of one instruction.
pub fn update_usage(tracker: &mut UsageTracker, instr: &Instruction, direction: Direction) {
    tracker.update(instr, direction);
}

/// Qubits that are not encoded inputs yet are used by a gate before any
/// preparation.
pub fn unprepared_qubits(protocol: &Protocol) -> Vec<usize> {
    let mut seen = vec![false; protocol.num_qubits()];
    let mut out = BTreeSet::new();
    for instr in protocol.instructions() {
        if !instr.kind.is_physical() {
            continue;
        }
        for &q in &instr.qubits {
            if !seen[q] {
                seen[q] = true;
                if !instr.kind.is_prep() && !protocol.role(q).is_encoded_input() {
                    out.insert(q);
                }
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SwapKind {
    /// Neither side holds live state.
    NN,
    /// Exactly one side holds live state.
    ND,
    /// Both sides hold live state.
    DD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SwapCandidate {
    pub a: usize,
    pub b: usize,
    pub kind: SwapKind,
}

impl SwapCandidate {
    pub fn new(p: usize, q: usize, tracker: &UsageTracker, mapping: &Mapping) -> Self {
        let (a, b) = if p < q { (p, q) } else { (q, p) };
        let kind = match (
            tracker.is_data_type(mapping, a),
            tracker.is_data_type(mapping, b),
        ) {
            (true, true) => SwapKind::DD,
            (false, false) => SwapKind::NN,
            _ => SwapKind::ND,
        };
        Self { a, b, kind }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub distance: usize,
    /// Overrides the distance-derived data-data SWAP budget.
    pub dd_budget: Option<usize>,
    pub iterations: usize,
    pub seed: u64,
    /// Wall-clock limit per iteration.
    pub time_limit_secs: Option<f64>,
    pub lookahead_w: f64,
    /// Increment added to a qubit's decay factor each time it is swapped.
    pub decay: f64,
    /// Decay factors return to 1 after this many SWAPs.
    pub decay_reset: usize,
    /// Number of upcoming two-qubit nodes in the lookahead window.
    pub extended_window: usize,
    /// SWAPs allowed without any front-layer progress before the traversal
    /// gives up. Defaults to a size-dependent bound.
    pub stall_limit: Option<usize>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            distance: 3,
            dd_budget: None,
            iterations: 100,
            seed: 0,
            time_limit_secs: Some(60.0),
            lookahead_w: 0.5,
            decay: 0.001,
            decay_reset: 5,
            extended_window: 20,
            stall_limit: None,
        }
    }
}

impl SynthesisConfig {
    pub fn with_distance(distance: usize) -> Self {
        Self {
            distance,
            ..Self::default()
        }
    }

    /// Number of SWAPs allowed between two live qubits.
    pub fn dd_budget(&self) -> usize {
        self.dd_budget
            .unwrap_or_else(|| self.distance.saturating_sub(1) / 4)
    }

    fn stall_limit_for(&self, num_physical: usize) -> usize {
        self.stall_limit.unwrap_or((50 * num_physical).max(1000))
    }

    fn time_limit(&self) -> Option<Duration> {
        self.time_limit_secs
            .filter(|s| s.is_finite() && *s > 0.0)
            .map(Duration::from_secs_f64)
    }
}

/// Placement requirements coming from earlier syntheses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraints {
    /// Qubits whose initial position is fixed.
    pub pins: BTreeMap<String, usize>,
    /// Targets for `anchor(..)` move destinations.
    pub anchors: BTreeMap<String, usize>,
}

/// One instruction of a routed circuit, in emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedOp {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub inserted: bool,
    pub partition: usize,
}

impl RoutedOp {
    pub fn inserted_swap(a: usize, b: usize, partition: usize) -> Self {
        Self {
            kind: GateKind::Swap,
            qubits: vec![a, b],
            inserted: true,
            partition,
        }
    }

    fn same_action(&self, other: &RoutedOp) -> bool {
        if self.kind != other.kind || self.inserted != other.inserted {
            return false;
        }
        if self.kind == GateKind::Swap {
            let mut x = self.qubits.clone();
            let mut y = other.qubits.clone();
            x.sort_unstable();
            y.sort_unstable();
            x == y
        } else {
            self.qubits == other.qubits
        }
    }
}

/// Whether `instr` can run under `mapping` without routing.
pub fn is_executable(
    instr: &Instruction,
    mapping: &Mapping,
    layout: &QubitLayout,
) -> Result<bool, MapperError> {
    Ok(match instr.kind {
        GateKind::Barrier => false,
        GateKind::Move => {
            let dest = instr
                .dest
                .as_ref()
                .ok_or_else(|| MapperError::UnresolvedDestination("<none>".into()))?;
            let p = dest
                .physical()
                .ok_or_else(|| MapperError::UnresolvedDestination(dest.to_string()))?;
            mapping.phys(instr.qubits[0]) == p
        }
        k if k.is_two_qubit() => {
            layout.are_adjacent(mapping.phys(instr.qubits[0]), mapping.phys(instr.qubits[1]))
        }
        _ => true,
    })
}

/// SWAP candidates around the physical cells in `sources`.
///
/// Pairs between two live qubits are only offered while the budget lasts.
/// Live neighbours of a source also contribute their own non-DD pairs so a
/// qubit walled in by live state can still get out.
pub fn collect_swap_candidates(
    sources: &[usize],
    mapping: &Mapping,
    tracker: &UsageTracker,
    layout: &QubitLayout,
    dd_used: usize,
    dd_budget: usize,
) -> Vec<SwapCandidate> {
    let mut out = BTreeSet::new();
    let dd_ok = dd_used < dd_budget;
    for &p in sources {
        for n in layout.neighbors(p) {
            let c = SwapCandidate::new(p, n, tracker, mapping);
            if c.kind != SwapKind::DD || dd_ok {
                out.insert(c);
            }
            if tracker.is_data_type(mapping, n) {
                for r in layout.neighbors(n) {
                    let c = SwapCandidate::new(n, r, tracker, mapping);
                    if c.kind != SwapKind::DD {
                        out.insert(c);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// A distance the router wants to shrink: between two logical qubits, or
/// between a qubit and a fixed destination cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Pair(usize, usize),
    Fixed(usize, usize),
}

impl Term {
    fn from_instruction(instr: &Instruction) -> Option<Term> {
        match instr.kind {
            GateKind::Move => instr
                .dest
                .as_ref()
                .and_then(|d| d.physical())
                .map(|p| Term::Fixed(instr.qubits[0], p)),
            k if k.is_two_qubit() => Some(Term::Pair(instr.qubits[0], instr.qubits[1])),
            _ => None,
        }
    }

    fn distance(&self, mapping: &Mapping, swap: (usize, usize), dmat: &DistanceMatrix) -> u32 {
        let at = |l: usize| {
            let p = mapping.phys(l);
            if p == swap.0 {
                swap.1
            } else if p == swap.1 {
                swap.0
            } else {
                p
            }
        };
        match *self {
            Term::Pair(a, b) => dmat.get(at(a), at(b)),
            Term::Fixed(a, dest) => dmat.get(at(a), dest),
        }
    }
}

/// Lookahead cost of applying `candidate` next.
pub fn cost(
    candidate: &SwapCandidate,
    front: &[Term],
    window: &[Term],
    mapping: &Mapping,
    dmat: &DistanceMatrix,
    decay: &[f64],
    w: f64,
) -> f64 {
    let swap = candidate.pair();
    let mean = |terms: &[Term]| {
        if terms.is_empty() {
            0.0
        } else {
            terms
                .iter()
                .map(|t| f64::from(t.distance(mapping, swap, dmat)))
                .sum::<f64>()
                / terms.len() as f64
        }
    };
    let d = decay[candidate.a].max(decay[candidate.b]);
    d * (mean(front) + w * mean(window))
}

/// Picks the cheapest candidate; ties go to a seeded draw over the
/// lexicographically sorted tie set. A winner equal to `last` is replaced
/// by a random non-DD alternative when one exists.
pub fn select_swap(
    candidates: &[SwapCandidate],
    costs: &[f64],
    last: Option<(usize, usize)>,
    rng: &mut impl Rng,
) -> SwapCandidate {
    const EPS: f64 = 1e-9;
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut ties: Vec<&SwapCandidate> = candidates
        .iter()
        .zip(costs)
        .filter(|(_, &c)| c <= best + EPS)
        .map(|(s, _)| s)
        .collect();
    ties.sort_by_key(|s| s.pair());
    let winner = **ties.choose(rng).expect("candidate list is nonempty");
    if Some(winner.pair()) != last {
        return winner;
    }
    let alternatives: Vec<&SwapCandidate> = candidates
        .iter()
        .filter(|s| s.kind != SwapKind::DD && Some(s.pair()) != last)
        .collect();
    match alternatives.choose(rng) {
        Some(s) => **s,
        None => {
            log::debug!(
                "repeated SWAP {:?} kept: no alternative candidate",
                winner.pair()
            );
            winner
        }
    }
}

/// Appends an inserted SWAP and updates the mapping. Returns whether it
/// joined two live qubits.
pub fn apply_swap(
    ops: &mut Vec<RoutedOp>,
    mapping: &mut Mapping,
    tracker: &UsageTracker,
    candidate: &SwapCandidate,
    dd_used: &mut usize,
    partition: usize,
) -> bool {
    let dd =
        tracker.is_data_type(mapping, candidate.a) && tracker.is_data_type(mapping, candidate.b);
    if dd {
        *dd_used += 1;
    }
    mapping.swap_physical(candidate.a, candidate.b);
    ops.push(RoutedOp::inserted_swap(candidate.a, candidate.b, partition));
    dd
}

/// Everything a traversal needs that stays fixed across iterations.
pub struct RoutingContext<'a> {
    pub layout: &'a QubitLayout,
    pub dmat: &'a DistanceMatrix,
    pub config: &'a SynthesisConfig,
}

#[derive(Debug, Clone)]
pub struct Traversal {
    pub ops: Vec<RoutedOp>,
    pub initial: Mapping,
    pub final_mapping: Mapping,
    pub dd_used: usize,
    pub swaps: usize,
}

/// Routes every node of `dag` starting from `initial`.
///
/// `instructions` must be the protocol the DAG was built from, with move
/// destinations resolved when `dag` is forward.
pub fn traverse(
    ctx: &RoutingContext<'_>,
    dag: &Dag,
    instructions: &[Instruction],
    initial: &Mapping,
    mut usage: UsageTracker,
    rng: &mut impl Rng,
    deadline: Option<Instant>,
) -> Result<Traversal, MapperError> {
    let direction = dag.direction();
    let forward = direction == Direction::Forward;
    let config = ctx.config;
    let budget = config.dd_budget();
    let stall_limit = config.stall_limit_for(ctx.layout.num_qubits());
    let valve = 4 * (ctx.layout.rows() + ctx.layout.cols());
    let mut fl = FrontLayer::new(dag);
    let mut mapping = initial.clone();
    let mut ops = Vec::new();
    let mut dd_used = 0;
    let mut swaps = 0;
    let mut decay = vec![1.0f64; ctx.layout.num_qubits()];
    let mut since_reset = 0;
    let mut since_progress = 0;
    let mut last: Option<(usize, usize)> = None;
    let mut satisfied_sinks: Vec<usize> = Vec::new();
    let mut window: Option<Vec<Term>> = None;

    loop {
        // re-satisfying a displaced move does not count as progress
        let mut progressed_any = false;
        loop {
            let mut progressed = false;
            for id in fl.nodes().to_vec() {
                let instr = &instructions[id];
                match instr.kind {
                    GateKind::Barrier => {}
                    GateKind::Move if !forward => {
                        fl.pop_executed(dag, id)?;
                        progressed = true;
                        progressed_any = true;
                    }
                    GateKind::Move => {
                        if is_executable(instr, &mapping, ctx.layout)? {
                            progressed_any |= !fl.is_emitted(id);
                            fl.pop_executed(dag, id)?;
                            progressed = true;
                            if dag.node(id).succs.is_empty() {
                                satisfied_sinks.push(id);
                            }
                        }
                    }
                    _ => {
                        if is_executable(instr, &mapping, ctx.layout)? {
                            ops.push(RoutedOp {
                                kind: instr.kind,
                                qubits: instr.qubits.iter().map(|&q| mapping.phys(q)).collect(),
                                inserted: false,
                                partition: fl.partition(),
                            });
                            usage.update(instr, direction);
                            fl.pop_executed(dag, id)?;
                            progressed = true;
                            progressed_any = true;
                        }
                    }
                }
            }
            if fl.barrier(dag).is_some() && fl.nodes().len() == 1 {
                fl.flush_barrier(dag)?;
                progressed = true;
                progressed_any = true;
            }
            if !progressed {
                break;
            }
        }
        if fl.is_empty() {
            break;
        }
        if progressed_any {
            decay.iter_mut().for_each(|d| *d = 1.0);
            since_reset = 0;
            since_progress = 0;
            last = None;
            window = None;
        }
        if deadline.is_some_and(|d| Instant::now() > d) {
            return Err(MapperError::Timeout);
        }
        if since_progress >= stall_limit {
            return Err(MapperError::Stalled(since_progress));
        }

        let mut front = Vec::new();
        let mut sources = Vec::new();
        for &id in fl.nodes() {
            let instr = &instructions[id];
            if let Some(t) = Term::from_instruction(instr) {
                front.push(t);
                match t {
                    Term::Pair(a, b) => sources.extend([mapping.phys(a), mapping.phys(b)]),
                    Term::Fixed(a, _) => sources.push(mapping.phys(a)),
                }
            }
        }
        if front.is_empty() {
            return Err(MapperError::Jammed);
        }
        if since_progress >= valve && since_progress % valve == 0 {
            if let Some(path) = release_path(&front, &mapping, &usage, ctx.layout, ctx.dmat) {
                for (a, b) in path {
                    let c = SwapCandidate::new(a, b, &usage, &mapping);
                    apply_swap(
                        &mut ops,
                        &mut mapping,
                        &usage,
                        &c,
                        &mut dd_used,
                        fl.partition(),
                    );
                    swaps += 1;
                    since_progress += 1;
                }
                last = None;
                if forward
                    && reinsert_displaced(
                        &mut satisfied_sinks,
                        &mut fl,
                        instructions,
                        &mapping,
                        ctx.layout,
                    )
                {
                    window = None;
                }
                continue;
            }
        }
        sources.sort_unstable();
        sources.dedup();
        let window = window.get_or_insert_with(|| {
            extended_window(dag, &fl, instructions, config.extended_window, forward)
        });
        let candidates =
            collect_swap_candidates(&sources, &mapping, &usage, ctx.layout, dd_used, budget);
        if candidates.is_empty() {
            return Err(MapperError::Jammed);
        }
        let costs: Vec<f64> = candidates
            .iter()
            .map(|c| {
                cost(
                    c,
                    &front,
                    window,
                    &mapping,
                    ctx.dmat,
                    &decay,
                    config.lookahead_w,
                )
            })
            .collect();
        let chosen = select_swap(&candidates, &costs, last, rng);
        apply_swap(
            &mut ops,
            &mut mapping,
            &usage,
            &chosen,
            &mut dd_used,
            fl.partition(),
        );
        swaps += 1;
        since_progress += 1;
        last = Some(chosen.pair());
        decay[chosen.a] += config.decay;
        decay[chosen.b] += config.decay;
        since_reset += 1;
        if since_reset >= config.decay_reset.max(1) {
            decay.iter_mut().for_each(|d| *d = 1.0);
            since_reset = 0;
        }
        if forward
            && reinsert_displaced(
                &mut satisfied_sinks,
                &mut fl,
                instructions,
                &mapping,
                ctx.layout,
            )
        {
            *window = extended_window(dag, &fl, instructions, config.extended_window, forward);
        }
    }

    Ok(Traversal {
        ops,
        initial: initial.clone(),
        final_mapping: mapping,
        dd_used,
        swaps,
    })
}

/// Puts moves that a SWAP pushed off their destination back into the front
/// layer. Returns true if any was put back.
fn reinsert_displaced(
    satisfied: &mut Vec<usize>,
    fl: &mut FrontLayer,
    instructions: &[Instruction],
    mapping: &Mapping,
    layout: &QubitLayout,
) -> bool {
    let before = satisfied.len();
    satisfied.retain(|&id| {
        let still = is_executable(&instructions[id], mapping, layout).unwrap_or(false);
        if !still {
            fl.reinsert(id);
        }
        still
    });
    satisfied.len() != before
}

/// Non-DD SWAP sequence that makes the nearest front term executable.
///
/// Used when the heuristic keeps circling without progress. The operand
/// walks a shortest path; whenever the next cell holds live state, an
/// inactive cell is first shuffled into it. Every SWAP involves at least
/// one inactive side, so no budget is spent.
fn release_path(
    front: &[Term],
    mapping: &Mapping,
    usage: &UsageTracker,
    layout: &QubitLayout,
    dmat: &DistanceMatrix,
) -> Option<Vec<(usize, usize)>> {
    let mut terms: Vec<(u32, usize, Term)> = front
        .iter()
        .enumerate()
        .map(|(i, t)| (t.distance(mapping, (usize::MAX, usize::MAX), dmat), i, *t))
        .collect();
    terms.sort_unstable_by_key(|&(d, i, _)| (d, i));
    for (_, _, term) in terms {
        let attempts = match term {
            Term::Pair(a, b) => vec![(a, Some(b), None), (b, Some(a), None)],
            Term::Fixed(a, dest) => vec![(a, None, Some(dest))],
        };
        for (mover, partner, dest) in attempts {
            if let Some(path) = walk(mover, partner, dest, mapping, usage, layout) {
                return Some(path);
            }
        }
    }
    None
}

fn walk(
    mover: usize,
    partner: Option<usize>,
    dest: Option<usize>,
    mapping: &Mapping,
    usage: &UsageTracker,
    layout: &QubitLayout,
) -> Option<Vec<(usize, usize)>> {
    let mut m = mapping.clone();
    let anchor = partner.map(|b| m.phys(b));
    let done = |m: &Mapping| match (anchor, dest) {
        (Some(pb), _) => layout.are_adjacent(m.phys(mover), pb),
        (None, Some(d)) => m.phys(mover) == d,
        _ => true,
    };
    let goal = |p: usize| match (anchor, dest) {
        (Some(pb), _) => layout.are_adjacent(p, pb),
        (None, Some(d)) => p == d,
        _ => true,
    };
    let route = bfs_path(layout, m.phys(mover), &goal, |p| Some(p) != anchor)?;
    let mut swaps = Vec::new();
    for (cur, next) in route {
        if done(&m) {
            break;
        }
        if usage.is_data_type(&m, cur) && usage.is_data_type(&m, next) {
            // bring an inactive cell to `next` without touching the mover or its partner
            let hole_route = bfs_path(layout, next, &|p| !usage.is_data_type(&m, p), |p| {
                p != cur && Some(p) != anchor
            })?;
            let cells: Vec<usize> = std::iter::once(next)
                .chain(hole_route.iter().map(|&(_, b)| b))
                .collect();
            for w in cells.windows(2).rev() {
                m.swap_physical(w[0], w[1]);
                swaps.push((w[0], w[1]));
            }
        }
        m.swap_physical(cur, next);
        swaps.push((cur, next));
    }
    done(&m).then_some(swaps)
}

fn bfs_path(
    layout: &QubitLayout,
    start: usize,
    is_goal: &dyn Fn(usize) -> bool,
    passable: impl Fn(usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let mut prev = vec![usize::MAX; layout.num_qubits()];
    prev[start] = start;
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        if is_goal(p) {
            let mut cells = vec![p];
            let mut c = p;
            while c != start {
                c = prev[c];
                cells.push(c);
            }
            cells.reverse();
            return Some(cells.windows(2).map(|w| (w[0], w[1])).collect());
        }
        for n in layout.neighbors(p) {
            if prev[n] == usize::MAX && passable(n) {
                prev[n] = p;
                queue.push_back(n);
            }
        }
    }
    None
}

fn extended_window(
    dag: &Dag,
    fl: &FrontLayer,
    instructions: &[Instruction],
    size: usize,
    forward: bool,
) -> Vec<Term> {
    let mut out = Vec::new();
    if size == 0 {
        return out;
    }
    let mut seen: BTreeSet<usize> = fl.nodes().iter().copied().collect();
    let mut queue: VecDeque<usize> = fl
        .nodes()
        .iter()
        .copied()
        .chain(fl.holding().iter().copied())
        .collect();
    let visit_cap = size * 16;
    let mut visited = 0;
    while let Some(id) = queue.pop_front() {
        for &s in &dag.node(id).succs {
            if !seen.insert(s) || fl.is_emitted(s) {
                continue;
            }
            visited += 1;
            let instr = &instructions[s];
            if instr.kind != GateKind::Move || forward {
                if let Some(t) = Term::from_instruction(instr) {
                    out.push(t);
                    if out.len() >= size {
                        return out;
                    }
                }
            }
            queue.push_back(s);
        }
        if visited >= visit_cap {
            break;
        }
    }
    out
}

/// Removes back-to-back identical self-inverse pairs of inserted gates that
/// no other instruction separates, until none are left.
pub fn postprocess(ops: Vec<RoutedOp>, num_physical: usize) -> Vec<RoutedOp> {
    let mut alive = vec![true; ops.len()];
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); num_physical];
    for (i, op) in ops.iter().enumerate() {
        let top = op.qubits.first().and_then(|&q| stacks[q].last().copied());
        let cancels = op.inserted
            && op.kind.is_self_inverse()
            && top.is_some_and(|j| {
                let prev = &ops[j];
                prev.same_action(op)
                    && prev.partition == op.partition
                    && op.qubits.iter().all(|&q| stacks[q].last() == Some(&j))
            });
        if cancels {
            let j = top.unwrap();
            alive[j] = false;
            alive[i] = false;
            for &q in &op.qubits {
                stacks[q].pop();
            }
        } else {
            for &q in &op.qubits {
                stacks[q].push(i);
            }
        }
    }
    ops.into_iter()
        .zip(alive)
        .filter_map(|(op, keep)| keep.then_some(op))
        .collect()
}

/// Replays statuses over a forward circuit and counts inserted SWAPs that
/// joined two live qubits.
pub fn count_dd_swaps(protocol: &Protocol, ops: &[RoutedOp], initial: &Mapping) -> usize {
    let mut usage = UsageTracker::initial(protocol, Direction::Forward);
    let mut mapping = initial.clone();
    let mut count = 0;
    for op in ops {
        if op.inserted {
            if usage.is_data_type(&mapping, op.qubits[0])
                && usage.is_data_type(&mapping, op.qubits[1])
            {
                count += 1;
            }
            mapping.swap_physical(op.qubits[0], op.qubits[1]);
        } else {
            let logical: Vec<usize> = op
                .qubits
                .iter()
                .map(|&p| {
                    mapping
                        .logical(p)
                        .expect("protocol gate acts on a declared qubit")
                })
                .collect();
            usage.update(&Instruction::gate(op.kind, &logical), Direction::Forward);
        }
    }
    count
}

#[derive(Debug, Clone)]
pub struct IterationResult {
    pub circuit: Circuit,
    pub initial_mapping: Mapping,
    pub final_mapping: Mapping,
    pub dd_swaps_used: usize,
    pub swaps: usize,
    pub depth: usize,
    pub kq: u64,
    pub seed: u64,
    pub iteration: usize,
}

impl IterationResult {
    fn rank(&self) -> (u64, usize, usize, usize) {
        (self.kq, self.depth, self.swaps, self.iteration)
    }
}

#[derive(Debug, Clone)]
pub struct SabreOutcome {
    pub best: IterationResult,
    pub iterations: usize,
    pub timeouts: usize,
    /// Iterations that failed for reasons other than the time limit.
    pub failures: Vec<(usize, MapperError)>,
}

/// Resolves pins to `(logical, physical)` pairs and checks them.
pub fn resolve_pins(
    protocol: &Protocol,
    layout: &QubitLayout,
    pins: &BTreeMap<String, usize>,
) -> Result<Vec<(usize, usize)>, MapperError> {
    let mut owner: BTreeMap<usize, &str> = BTreeMap::new();
    let mut out = Vec::with_capacity(pins.len());
    for (name, &p) in pins {
        let l = protocol
            .qubit_id(name)
            .ok_or_else(|| ProtocolError::UndeclaredQubit(name.clone()))?;
        if p >= layout.num_qubits() {
            return Err(MapperError::PinOutOfRange(p));
        }
        if let Some(other) = owner.insert(p, name) {
            return Err(MapperError::PinConflict(other.to_string(), name.clone()));
        }
        out.push((l, p));
    }
    Ok(out)
}

/// Best-of-N synthesis of `protocol` on `layout`.
pub fn run_sabre(
    protocol: &Protocol,
    layout: &QubitLayout,
    config: &SynthesisConfig,
    constraints: &Constraints,
) -> Result<SabreOutcome, MapperError> {
    if protocol.num_qubits() > layout.num_qubits() {
        return Err(MapperError::LayoutTooSmall {
            layout: layout.num_qubits(),
            protocol: protocol.num_qubits(),
        });
    }
    let pins = resolve_pins(protocol, layout, &constraints.pins)?;
    let unprepared = unprepared_qubits(protocol);
    if !unprepared.is_empty() {
        let names: Vec<&str> = unprepared.iter().map(|&q| protocol.qubit_name(q)).collect();
        log::warn!(
            "{}: qubits used before any preparation start inactivated: {}",
            protocol.name,
            names.join(", ")
        );
    }
    // fail early on destinations that can never resolve
    protocol.resolve_destinations(&vec![0; protocol.num_qubits()], &constraints.anchors)?;

    let job = Job {
        protocol,
        layout,
        config,
        constraints,
        pins,
        dmat: layout.distance_matrix(),
        forward: Dag::build(protocol, Direction::Forward),
        backward: Dag::build(protocol, Direction::Backward),
        usage_forward: UsageTracker::initial(protocol, Direction::Forward),
        usage_backward: UsageTracker::initial(protocol, Direction::Backward),
    };
    let iterations = config.iterations.max(1);
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..iterations).map(|_| master.gen()).collect();
    let results: Vec<Result<IterationResult, MapperError>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| job.iteration(i, seed))
        .collect();

    let mut timeouts = 0;
    let mut failures = Vec::new();
    let mut best: Option<IterationResult> = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.rank() < b.rank()) {
                    best = Some(r);
                }
            }
            Err(MapperError::Timeout) => timeouts += 1,
            Err(e) => {
                log::debug!("{}: iteration {i} failed: {e}", protocol.name);
                failures.push((i, e));
            }
        }
    }
    let best = best.ok_or(MapperError::AllIterationsFailed(iterations))?;
    Ok(SabreOutcome {
        best,
        iterations,
        timeouts,
        failures,
    })
}

struct Job<'a> {
    protocol: &'a Protocol,
    layout: &'a QubitLayout,
    config: &'a SynthesisConfig,
    constraints: &'a Constraints,
    pins: Vec<(usize, usize)>,
    dmat: DistanceMatrix,
    forward: Dag,
    backward: Dag,
    usage_forward: UsageTracker,
    usage_backward: UsageTracker,
}

impl Job<'_> {
    fn iteration(&self, index: usize, seed: u64) -> Result<IterationResult, MapperError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deadline = self.config.time_limit().map(|t| Instant::now() + t);
        let ctx = RoutingContext {
            layout: self.layout,
            dmat: &self.dmat,
            config: self.config,
        };
        let n = self.layout.num_qubits();
        let anchors = &self.constraints.anchors;

        let m0 = Mapping::random(self.protocol.num_qubits(), n, &self.pins, &mut rng);
        let p0 = self.protocol.resolve_destinations(m0.l2p(), anchors)?;
        let t1 = traverse(
            &ctx,
            &self.forward,
            p0.instructions(),
            &m0,
            self.usage_forward.clone(),
            &mut rng,
            deadline,
        )?;
        let t2 = traverse(
            &ctx,
            &self.backward,
            self.protocol.instructions(),
            &t1.final_mapping,
            self.usage_backward.clone(),
            &mut rng,
            deadline,
        )?;
        let mut m2 = t2.final_mapping;
        for &(l, p) in &self.pins {
            m2.place(l, p);
        }
        let p2 = self.protocol.resolve_destinations(m2.l2p(), anchors)?;
        let t3 = traverse(
            &ctx,
            &self.forward,
            p2.instructions(),
            &m2,
            self.usage_forward.clone(),
            &mut rng,
            deadline,
        )?;

        let ops = postprocess(t3.ops, n);
        let dd = count_dd_swaps(self.protocol, &ops, &m2);
        let mut move_back = BTreeMap::new();
        for instr in p2
            .instructions()
            .iter()
            .filter(|i| i.kind == GateKind::Move)
        {
            let dest = instr
                .dest
                .as_ref()
                .and_then(|d| d.physical())
                .expect("resolved");
            move_back.insert(self.protocol.qubit_name(instr.qubits[0]).to_string(), dest);
        }
        let circuit = Circuit::from_routed(
            self.protocol,
            self.layout,
            &m2,
            &t3.final_mapping,
            &ops,
            move_back,
            dd,
        );
        Ok(IterationResult {
            depth: circuit.analysis.depth,
            kq: circuit.analysis.kq,
            swaps: circuit.analysis.inserted_swaps,
            circuit,
            initial_mapping: m2,
            final_mapping: t3.final_mapping,
            dd_swaps_used: dd,
            seed,
            iteration: index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_protocol, Destination};

    fn line(n: usize) -> QubitLayout {
        QubitLayout::new(1, n).unwrap()
    }

    fn all_active(n: usize) -> UsageTracker {
        UsageTracker::from_flags(vec![true; n])
    }

    #[test]
    fn executability() {
        let l = QubitLayout::new(5, 7).unwrap();
        let cx = Instruction::gate(GateKind::Cx, &[0, 1]);
        let m = Mapping::from_l2p(vec![0, 1], 35).unwrap();
        assert!(is_executable(&cx, &m, &l).unwrap());
        let m = Mapping::from_l2p(vec![0, 34], 35).unwrap();
        assert!(!is_executable(&cx, &m, &l).unwrap());
        let mv = Instruction::move_to(0, Destination::Physical(3));
        let m = Mapping::from_l2p(vec![3], 35).unwrap();
        assert!(is_executable(&mv, &m, &l).unwrap());
        let sym = Instruction::move_to(0, Destination::Init("q[0]".into()));
        assert!(matches!(
            is_executable(&sym, &m, &l),
            Err(MapperError::UnresolvedDestination(_))
        ));
    }

    #[test]
    fn usage_rules() {
        let mut t = UsageTracker::from_flags(vec![false]);
        t.update(
            &Instruction::gate(GateKind::PrepZ, &[0]),
            Direction::Forward,
        );
        assert!(t.is_active(0));
        t.update(
            &Instruction::gate(GateKind::MeasZ, &[0]),
            Direction::Forward,
        );
        assert!(!t.is_active(0));
        t.update(
            &Instruction::gate(GateKind::MeasZ, &[0]),
            Direction::Backward,
        );
        assert!(t.is_active(0));
        t.update(
            &Instruction::gate(GateKind::PrepZ, &[0]),
            Direction::Backward,
        );
        assert!(!t.is_active(0));
    }

    #[test]
    fn initial_usage_follows_roles() {
        let p = parse_protocol(
            "qreg data[2] role=data;\nqreg s[1] role=ancilla;\nprepz data[1];\nprepz s[0];\ncx data[0], s[0];\nmeasz s[0];",
        )
        .unwrap();
        let f = UsageTracker::initial(&p, Direction::Forward);
        assert_eq!(
            (f.is_active(0), f.is_active(1), f.is_active(2)),
            (true, false, false)
        );
        let b = UsageTracker::initial(&p, Direction::Backward);
        assert_eq!(
            (b.is_active(0), b.is_active(1), b.is_active(2)),
            (true, true, false)
        );
    }

    #[test]
    fn walled_in_qubit_gets_relief() {
        // 3x3, data at the centre, four live neighbours, budget 0
        let l = QubitLayout::new(3, 3).unwrap();
        let m = Mapping::from_l2p(vec![4, 1, 3, 5, 7], 9).unwrap();
        let t = all_active(5);
        let c = collect_swap_candidates(&[4], &m, &t, &l, 0, 0);
        assert!(!c.is_empty());
        assert!(c.iter().all(|s| s.kind != SwapKind::DD));
        assert!(c.iter().any(|s| s.pair() == (0, 1)));
        assert!(c.iter().all(|s| s.a != 4 && s.b != 4));
    }

    #[test]
    fn dd_pair_offered_within_budget() {
        let l = line(3);
        let m = Mapping::from_l2p(vec![0, 1], 3).unwrap();
        let t = all_active(2);
        let with = collect_swap_candidates(&[0], &m, &t, &l, 0, 1);
        assert!(with
            .iter()
            .any(|s| s.pair() == (0, 1) && s.kind == SwapKind::DD));
        let without = collect_swap_candidates(&[0], &m, &t, &l, 1, 1);
        assert!(without.iter().all(|s| s.kind != SwapKind::DD));
    }

    #[test]
    fn nd_pair_next_to_operand() {
        let l = line(3);
        let m = Mapping::from_l2p(vec![1], 3).unwrap();
        let t = all_active(1);
        let c = collect_swap_candidates(&[1], &m, &t, &l, 0, 0);
        let pairs: Vec<_> = c.iter().map(|s| (s.pair(), s.kind)).collect();
        assert_eq!(pairs, vec![((0, 1), SwapKind::ND), ((1, 2), SwapKind::ND)]);
    }

    #[test]
    fn cost_hand_values() {
        let l = line(3);
        let d = l.distance_matrix();
        let m = Mapping::from_l2p(vec![0, 2], 3).unwrap();
        let t = all_active(2);
        let decay = vec![1.0; 3];
        let front = [Term::Pair(0, 1)];
        let c01 = SwapCandidate::new(0, 1, &t, &m);
        let c12 = SwapCandidate::new(1, 2, &t, &m);
        assert_eq!(cost(&c01, &front, &[], &m, &d, &decay, 0.0), 1.0);
        assert_eq!(cost(&c12, &front, &[], &m, &d, &decay, 0.0), 1.0);

        let l5 = line(5);
        let d5 = l5.distance_matrix();
        let m = Mapping::from_l2p(vec![0], 5).unwrap();
        let c = SwapCandidate::new(0, 1, &all_active(1), &m);
        assert_eq!(
            cost(&c, &[Term::Fixed(0, 4)], &[], &m, &d5, &[1.0; 5], 0.0),
            3.0
        );
    }

    #[test]
    fn selection_rules() {
        let t = all_active(2);
        let m = Mapping::from_l2p(vec![0, 2], 4).unwrap();
        let c1 = SwapCandidate::new(0, 1, &t, &m);
        let c2 = SwapCandidate::new(2, 3, &t, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_swap(&[c1, c2], &[2.0, 3.0], None, &mut rng), c1);
        assert_eq!(
            select_swap(&[c1, c2], &[2.0, 3.0], Some((0, 1)), &mut rng),
            c2
        );
        let picks: Vec<_> = (0..2)
            .map(|_| {
                let mut r = ChaCha8Rng::seed_from_u64(9);
                (0..10)
                    .map(|_| select_swap(&[c1, c2], &[1.0, 1.0], None, &mut r))
                    .collect::<Vec<_>>()
            })
            .collect();
        assert_eq!(picks[0], picks[1]);
    }

    #[test]
    fn swap_bookkeeping() {
        let t = UsageTracker::from_flags(vec![true, false, true]);
        let mut m = Mapping::from_l2p(vec![0, 1, 2], 3).unwrap();
        let mut ops = Vec::new();
        let mut dd = 0;
        let nd = SwapCandidate::new(0, 1, &t, &m);
        assert!(!apply_swap(&mut ops, &mut m, &t, &nd, &mut dd, 0));
        assert_eq!(dd, 0);
        assert_eq!(m.l2p(), &[1, 0, 2]);
        // logical 0 now sits next to logical 2
        let ddc = SwapCandidate::new(1, 2, &t, &m);
        assert!(apply_swap(&mut ops, &mut m, &t, &ddc, &mut dd, 0));
        assert_eq!(dd, 1);
        let mut m2 = Mapping::from_l2p(vec![0, 1, 2], 3).unwrap();
        m2.swap_physical(0, 1);
        m2.swap_physical(0, 1);
        assert_eq!(m2, Mapping::from_l2p(vec![0, 1, 2], 3).unwrap());
    }

    #[test]
    fn postprocess_examples() {
        let s = |a, b| RoutedOp::inserted_swap(a, b, 0);
        let h = RoutedOp {
            kind: GateKind::H,
            qubits: vec![0],
            inserted: false,
            partition: 0,
        };
        assert!(postprocess(vec![s(0, 1), s(1, 0)], 2).is_empty());
        assert_eq!(postprocess(vec![s(0, 1), h.clone(), s(0, 1)], 2).len(), 3);
        let t = RoutedOp {
            kind: GateKind::T,
            qubits: vec![0],
            inserted: false,
            partition: 0,
        };
        assert_eq!(postprocess(vec![t.clone(), t], 2).len(), 2);
        // nested pairs cancel to fixpoint
        assert!(postprocess(vec![s(0, 1), s(1, 2), s(1, 2), s(0, 1)], 3).is_empty());
    }

    fn run_line(text: &str, n: usize) -> Traversal {
        let p = parse_protocol(text).unwrap();
        let l = line(n);
        let d = l.distance_matrix();
        let cfg = SynthesisConfig::default();
        let ctx = RoutingContext {
            layout: &l,
            dmat: &d,
            config: &cfg,
        };
        let dag = Dag::build(&p, Direction::Forward);
        let m = Mapping::identity(p.num_qubits(), n);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        traverse(
            &ctx,
            &dag,
            p.instructions(),
            &m,
            UsageTracker::initial(&p, Direction::Forward),
            &mut rng,
            None,
        )
        .unwrap()
    }

    #[test]
    fn local_protocol_needs_no_swaps() {
        let t = run_line(
            "qreg q[3];\nprepz q[0];\nprepz q[1];\ncx q[0], q[1];\nprepz q[2];\ncx q[1], q[2];",
            3,
        );
        assert_eq!(t.swaps, 0);
        assert_eq!(t.ops.len(), 5);
    }

    #[test]
    fn distance_two_cnot_takes_one_swap() {
        // q[1] is a dummy-like qubit in the middle that never gets prepared
        let t = run_line(
            "qreg a[1] role=data;\nqreg m[1] role=dummy;\nqreg b[1] role=data;\ncx a[0], b[0];",
            3,
        );
        assert_eq!(t.swaps, 1);
        assert_eq!(t.ops.len(), 2);
        assert_eq!(t.dd_used, 0);
    }

    #[test]
    fn config_budget() {
        assert_eq!(SynthesisConfig::with_distance(3).dd_budget(), 0);
        assert_eq!(SynthesisConfig::with_distance(7).dd_budget(), 1);
        assert_eq!(SynthesisConfig::with_distance(9).dd_budget(), 2);
        let c = SynthesisConfig {
            dd_budget: Some(4),
            ..SynthesisConfig::default()
        };
        assert_eq!(c.dd_budget(), 4);
    }
}
