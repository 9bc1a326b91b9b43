//! Protocol representation: registers, instructions, and the textual format.
//!
//! The format is a small QASM-like language:
//!
//! ```text
//! protocol steane_sm;
//! distance 3;
//! qreg data[7] role=data;
//! qreg syndrome[7] role=ancilla;
//! prepz syndrome[0];
//! cx data[0], syndrome[0];
//! barrier;
//! move data[0] init(data[0]);
//! move data[1] 12;
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ParseError, ParseErrorKind, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    PrepZ,
    PrepX,
    MeasZ,
    MeasX,
    H,
    X,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Cx,
    Swap,
    Barrier,
    Move,
}

impl GateKind {
    pub const ALL: [GateKind; 15] = [
        GateKind::PrepZ,
        GateKind::PrepX,
        GateKind::MeasZ,
        GateKind::MeasX,
        GateKind::H,
        GateKind::X,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Cx,
        GateKind::Swap,
        GateKind::Barrier,
        GateKind::Move,
    ];

    /// Mnemonic used in protocol text and circuit JSON.
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::PrepZ => "prepz",
            GateKind::PrepX => "prepx",
            GateKind::MeasZ => "measz",
            GateKind::MeasX => "measx",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Cx => "cx",
            GateKind::Swap => "swap",
            GateKind::Barrier => "barrier",
            GateKind::Move => "move",
        }
    }

    /// Name used in reports, e.g. `CNOT`, `PrepZ`.
    pub fn display_name(self) -> &'static str {
        match self {
            GateKind::PrepZ => "PrepZ",
            GateKind::PrepX => "PrepX",
            GateKind::MeasZ => "MeasZ",
            GateKind::MeasX => "MeasX",
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdg => "Sdag",
            GateKind::T => "T",
            GateKind::Tdg => "Tdag",
            GateKind::Cx => "CNOT",
            GateKind::Swap => "SWAP",
            GateKind::Barrier => "Barrier",
            GateKind::Move => "Move",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<GateKind> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "prepz" | "reset" => GateKind::PrepZ,
            "prepx" => GateKind::PrepX,
            "measz" => GateKind::MeasZ,
            "measx" => GateKind::MeasX,
            "h" => GateKind::H,
            "x" => GateKind::X,
            "z" => GateKind::Z,
            "s" => GateKind::S,
            "sdg" | "sdag" => GateKind::Sdg,
            "t" => GateKind::T,
            "tdg" | "tdag" => GateKind::Tdg,
            "cx" | "cnot" => GateKind::Cx,
            "swap" => GateKind::Swap,
            "barrier" => GateKind::Barrier,
            "move" => GateKind::Move,
            _ => return None,
        };
        Some(kind)
    }

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Barrier => 0,
            GateKind::Cx | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn is_prep(self) -> bool {
        matches!(self, GateKind::PrepZ | GateKind::PrepX)
    }

    pub fn is_meas(self) -> bool {
        matches!(self, GateKind::MeasZ | GateKind::MeasX)
    }

    pub fn is_two_qubit(self) -> bool {
        self.arity() == 2
    }

    /// Gates that square to the identity.
    pub fn is_self_inverse(self) -> bool {
        matches!(
            self,
            GateKind::H | GateKind::X | GateKind::Z | GateKind::Cx | GateKind::Swap
        )
    }

    /// Gates that occupy a time step (everything but barriers and moves).
    pub fn is_physical(self) -> bool {
        !matches!(self, GateKind::Barrier | GateKind::Move)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// What a qubit register is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Physical qubits of a logical data block.
    Data,
    /// Syndrome or other ancilla qubits prepared inside the protocol.
    Ancilla,
    /// Single-qubit verification of a prepared ancilla state.
    Checkup,
    /// An encoded state handed in by another protocol (a magic state, or a
    /// logical ancilla supplied by a factory).
    Magic,
    /// Placeholder qubits that never hold protocol state.
    Dummy,
}

impl Role {
    /// Registers whose qubits hold meaningful state when the protocol starts.
    pub fn is_encoded_input(self) -> bool {
        matches!(self, Role::Data | Role::Magic)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Role::Data => "data",
            Role::Ancilla => "ancilla",
            Role::Checkup => "checkup",
            Role::Magic => "magic",
            Role::Dummy => "dummy",
        }
    }
}

impl FromStr for Role {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "data" => Ok(Role::Data),
            "ancilla" | "syndrome" => Ok(Role::Ancilla),
            "checkup" => Ok(Role::Checkup),
            "magic" => Ok(Role::Magic),
            "dummy" => Ok(Role::Dummy),
            other => Err(ParseErrorKind::UnknownRole(other.to_string())),
        }
    }
}

/// Where a `move` sends its qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Destination {
    /// Initial physical position of the named qubit in the current run.
    Init(String),
    /// Position of the named qubit in a fixed logical-qubit configuration.
    Anchor(String),
    /// A concrete physical qubit.
    Physical(usize),
}

impl Destination {
    pub fn physical(&self) -> Option<usize> {
        match self {
            Destination::Physical(p) => Some(*p),
            _ => None,
        }
    }
}

impl fmt::Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Destination::Init(q) => write!(f, "init({q})"),
            Destination::Anchor(q) => write!(f, "anchor({q})"),
            Destination::Physical(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub kind: GateKind,
    /// Logical qubit ids, indices into [`Protocol::qubits`].
    pub qubits: Vec<usize>,
    pub dest: Option<Destination>,
}

impl Instruction {
    pub fn gate(kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            dest: None,
        }
    }

    pub fn barrier() -> Self {
        Self::gate(GateKind::Barrier, &[])
    }

    pub fn move_to(qubit: usize, dest: Destination) -> Self {
        Self {
            kind: GateKind::Move,
            qubits: vec![qubit],
            dest: Some(dest),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub size: usize,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitInfo {
    pub name: String,
    pub role: Role,
    pub register: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub name: String,
    pub distance: usize,
    registers: Vec<Register>,
    qubits: Vec<QubitInfo>,
    by_name: HashMap<String, usize>,
    instructions: Vec<Instruction>,
}

impl Protocol {
    pub fn new(name: impl Into<String>, distance: usize) -> Self {
        Self {
            name: name.into(),
            distance: distance.max(1),
            registers: Vec::new(),
            qubits: Vec::new(),
            by_name: HashMap::new(),
            instructions: Vec::new(),
        }
    }

    /// Declares `name[0..size]` and returns the id of its first qubit.
    pub fn add_register(
        &mut self,
        name: &str,
        size: usize,
        role: Role,
    ) -> Result<usize, ParseErrorKind> {
        if self.registers.iter().any(|r| r.name == name) {
            return Err(ParseErrorKind::DuplicateRegister(name.to_string()));
        }
        let first = self.qubits.len();
        let reg = self.registers.len();
        self.registers.push(Register {
            name: name.to_string(),
            size,
            role,
        });
        for i in 0..size {
            let qname = format!("{name}[{i}]");
            self.by_name.insert(qname.clone(), self.qubits.len());
            self.qubits.push(QubitInfo {
                name: qname,
                role,
                register: reg,
            });
        }
        Ok(first)
    }

    /// Appends an instruction after checking operand count and ids.
    pub fn push(&mut self, instr: Instruction) -> Result<(), ParseErrorKind> {
        let expected = instr.kind.arity();
        if instr.kind != GateKind::Barrier && instr.qubits.len() != expected {
            return Err(ParseErrorKind::Arity {
                gate: instr.kind.mnemonic().to_string(),
                expected,
                found: instr.qubits.len(),
            });
        }
        if let Some(&bad) = instr.qubits.iter().find(|&&q| q >= self.qubits.len()) {
            return Err(ParseErrorKind::UndeclaredQubit(format!("#{bad}")));
        }
        if instr.qubits.len() == 2 && instr.qubits[0] == instr.qubits[1] {
            return Err(ParseErrorKind::RepeatedOperand(
                instr.kind.mnemonic().to_string(),
            ));
        }
        if (instr.kind == GateKind::Move) != instr.dest.is_some() {
            return Err(ParseErrorKind::MalformedDestination(
                instr.kind.mnemonic().to_string(),
            ));
        }
        let mut instr = instr;
        if instr.kind == GateKind::Barrier {
            instr.qubits.clear();
        }
        self.instructions.push(instr);
        Ok(())
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn qubits(&self) -> &[QubitInfo] {
        &self.qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn qubit_name(&self, id: usize) -> &str {
        &self.qubits[id].name
    }

    pub fn role(&self, id: usize) -> Role {
        self.qubits[id].role
    }

    /// Ids of all qubits in the named register.
    pub fn register_qubits(&self, name: &str) -> Option<Vec<usize>> {
        let reg = self.registers.iter().position(|r| r.name == name)?;
        Some(
            self.qubits
                .iter()
                .enumerate()
                .filter(|(_, q)| q.register == reg)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    /// Ids of all qubits with the given role.
    pub fn qubits_with_role(&self, role: Role) -> Vec<usize> {
        (0..self.qubits.len())
            .filter(|&q| self.qubits[q].role == role)
            .collect()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn num_barriers(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| i.kind == GateKind::Barrier)
            .count()
    }

    /// Barrier partition of every instruction (barriers belong to the
    /// partition they close).
    pub fn partitions(&self) -> Vec<usize> {
        let mut p = 0;
        self.instructions
            .iter()
            .map(|i| {
                let here = p;
                if i.kind == GateKind::Barrier {
                    p += 1;
                }
                here
            })
            .collect()
    }

    /// Appends one `move` per target after the last instruction.
    pub fn inject_moveback(
        &self,
        targets: &[(String, Destination)],
    ) -> Result<Protocol, ProtocolError> {
        let mut out = self.clone();
        for (name, dest) in targets {
            let q = self
                .qubit_id(name)
                .ok_or_else(|| ProtocolError::UndeclaredQubit(name.clone()))?;
            if let Destination::Init(other) = dest {
                if self.qubit_id(other).is_none() {
                    return Err(ProtocolError::UndeclaredQubit(other.clone()));
                }
            }
            out.instructions.push(Instruction::move_to(q, dest.clone()));
        }
        Ok(out)
    }

    /// Replaces every symbolic move destination by a physical index.
    ///
    /// `initial[q]` is the initial physical position of qubit id `q`.
    pub fn resolve_destinations(
        &self,
        initial: &[usize],
        anchors: &BTreeMap<String, usize>,
    ) -> Result<Protocol, ProtocolError> {
        let mut out = self.clone();
        for instr in &mut out.instructions {
            let Some(dest) = &instr.dest else { continue };
            let resolved = match dest {
                Destination::Physical(p) => *p,
                Destination::Init(name) => self
                    .qubit_id(name)
                    .and_then(|q| initial.get(q).copied())
                    .ok_or_else(|| ProtocolError::UnresolvedDestination(dest.to_string()))?,
                Destination::Anchor(name) => *anchors
                    .get(name)
                    .ok_or_else(|| ProtocolError::UnresolvedDestination(dest.to_string()))?,
            };
            instr.dest = Some(Destination::Physical(resolved));
        }
        Ok(out)
    }

    pub fn static_analysis(&self) -> ProtocolAnalysis {
        let mut counts = GateCounts::default();
        let mut level = vec![0usize; self.qubits.len()];
        let mut depth = 0;
        let mut barriers = 0;
        for instr in &self.instructions {
            match instr.kind {
                GateKind::Barrier => {
                    barriers += 1;
                    level.iter_mut().for_each(|l| *l = depth);
                }
                GateKind::Move => {}
                kind => {
                    counts.add(kind);
                    let l = instr.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
                    for &q in &instr.qubits {
                        level[q] = l;
                    }
                    depth = depth.max(l);
                }
            }
        }
        ProtocolAnalysis {
            qubits: self.qubits.len(),
            depth,
            counts,
            barriers,
        }
    }

    pub fn to_qasm(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "protocol {};\ndistance {};\n",
            self.name, self.distance
        ));
        for r in &self.registers {
            out.push_str(&format!(
                "qreg {}[{}] role={};\n",
                r.name,
                r.size,
                r.role.keyword()
            ));
        }
        for instr in &self.instructions {
            out.push_str(&self.format_instruction(instr));
            out.push('\n');
        }
        out
    }

    pub fn format_instruction(&self, instr: &Instruction) -> String {
        let ops: Vec<&str> = instr.qubits.iter().map(|&q| self.qubit_name(q)).collect();
        match (&instr.dest, instr.kind) {
            (_, GateKind::Barrier) => "barrier;".to_string(),
            (Some(dest), _) => format!("move {} {};", ops[0], dest),
            _ => format!("{} {};", instr.kind.mnemonic(), ops.join(", ")),
        }
    }
}

/// Gate tallies keyed by kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateCounts(BTreeMap<GateKind, usize>);

impl GateCounts {
    pub fn add(&mut self, kind: GateKind) {
        *self.0.entry(kind).or_default() += 1;
    }

    pub fn get(&self, kind: GateKind) -> usize {
        self.0.get(&kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GateKind, usize)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

impl fmt::Display for GateCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        f.write_str(&parts.join(", "))
    }
}

impl Serialize for GateCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<&str, usize> = self.iter().map(|(k, v)| (k.mnemonic(), v)).collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GateCounts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = BTreeMap::<String, usize>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, v) in m {
            let kind = GateKind::from_mnemonic(&k)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown gate `{k}`")))?;
            out.insert(kind, v);
        }
        Ok(GateCounts(out))
    }
}

/// Static figures of a protocol before any routing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProtocolAnalysis {
    pub qubits: usize,
    /// Longest dependency chain; barriers synchronize but take no time.
    pub depth: usize,
    pub counts: GateCounts,
    pub barriers: usize,
}

impl ProtocolAnalysis {
    pub fn ideal_kq(&self) -> u64 {
        crate::emit::compute_kq(self.depth, self.qubits)
    }
}

pub fn parse_protocol(text: &str) -> Result<Protocol, ParseError> {
    Parser::default().run(text)
}

#[derive(Default)]
struct Parser {
    protocol: Option<Protocol>,
    name: Option<String>,
    distance: Option<usize>,
}

struct Statement<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn split_statements(text: &str) -> Result<Vec<Statement<'_>>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find("//") {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut start = 0;
        for (i, ch) in line.char_indices() {
            if ch == ';' {
                push_statement(&mut out, line, start, i, lineno);
                start = i + 1;
            }
        }
        if !line[start..].trim().is_empty() {
            let col = start + (line[start..].len() - line[start..].trim_start().len());
            return Err(ParseError {
                line: lineno + 1,
                column: col + 1,
                kind: ParseErrorKind::Syntax("missing `;`".into()),
            });
        }
    }
    Ok(out)
}

fn push_statement<'a>(
    out: &mut Vec<Statement<'a>>,
    line: &'a str,
    start: usize,
    end: usize,
    lineno: usize,
) {
    let seg = &line[start..end];
    let trimmed = seg.trim();
    if trimmed.is_empty() {
        return;
    }
    let lead = seg.len() - seg.trim_start().len();
    out.push(Statement {
        text: trimmed,
        line: lineno + 1,
        column: start + lead + 1,
    });
}

impl Parser {
    fn run(mut self, text: &str) -> Result<Protocol, ParseError> {
        for stmt in split_statements(text)? {
            self.statement(&stmt).map_err(|(offset, kind)| ParseError {
                line: stmt.line,
                column: stmt.column + offset,
                kind,
            })?;
        }
        let mut protocol = self.take_protocol();
        if let Some(d) = self.distance {
            protocol.distance = d.max(1);
        }
        Ok(protocol)
    }

    fn take_protocol(&mut self) -> Protocol {
        let name = self.name.clone().unwrap_or_else(|| "protocol".into());
        self.protocol
            .take()
            .unwrap_or_else(|| Protocol::new(name, 1))
    }

    fn protocol_mut(&mut self) -> &mut Protocol {
        let name = self.name.clone().unwrap_or_else(|| "protocol".into());
        self.protocol.get_or_insert_with(|| Protocol::new(name, 1))
    }

    fn statement(&mut self, stmt: &Statement<'_>) -> Result<(), (usize, ParseErrorKind)> {
        let text = stmt.text;
        let kw_end = text
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(text.len());
        let keyword = &text[..kw_end];
        let rest = &text[kw_end..];
        let rest_offset = kw_end + (rest.len() - rest.trim_start().len());
        let rest = rest.trim();
        match keyword {
            "OPENQASM" | "include" | "creg" => Ok(()),
            "protocol" => {
                self.name = Some(rest.to_string());
                if let Some(p) = self.protocol.as_mut() {
                    p.name = rest.to_string();
                }
                Ok(())
            }
            "distance" => {
                let d = rest.parse().map_err(|_| {
                    (
                        rest_offset,
                        ParseErrorKind::Syntax(format!("bad distance `{rest}`")),
                    )
                })?;
                self.distance = Some(d);
                Ok(())
            }
            "qreg" => self.qreg(rest, rest_offset),
            "move" => self.move_stmt(rest, rest_offset),
            "" => Err((0, ParseErrorKind::Syntax(format!("unexpected `{text}`")))),
            gate => {
                let kind = GateKind::from_mnemonic(gate)
                    .ok_or_else(|| (0, ParseErrorKind::UnknownGate(gate.to_string())))?;
                if kind == GateKind::Move {
                    return self.move_stmt(rest, rest_offset);
                }
                let qubits = if kind == GateKind::Barrier || rest.is_empty() {
                    Vec::new()
                } else {
                    let mut ids = Vec::new();
                    let mut off = rest_offset;
                    for part in rest.split(',') {
                        let lead = part.len() - part.trim_start().len();
                        ids.push(self.operand(part.trim()).map_err(|k| (off + lead, k))?);
                        off += part.len() + 1;
                    }
                    ids
                };
                if kind != GateKind::Barrier && qubits.len() != kind.arity() {
                    return Err((
                        0,
                        ParseErrorKind::Arity {
                            gate: gate.to_string(),
                            expected: kind.arity(),
                            found: qubits.len(),
                        },
                    ));
                }
                self.protocol_mut()
                    .push(Instruction::gate(kind, &qubits))
                    .map_err(|k| (0, k))
            }
        }
    }

    fn qreg(&mut self, rest: &str, offset: usize) -> Result<(), (usize, ParseErrorKind)> {
        let syntax = |m: &str| (offset, ParseErrorKind::Syntax(m.to_string()));
        let mut parts = rest.split_whitespace();
        let decl = parts
            .next()
            .ok_or_else(|| syntax("expected register declaration"))?;
        let (name, size) = split_indexed(decl).ok_or_else(|| syntax("expected `name[size]`"))?;
        let mut role = default_role(name);
        for attr in parts {
            let value = attr
                .strip_prefix("role=")
                .ok_or_else(|| syntax(&format!("unknown attribute `{attr}`")))?;
            role = value.parse().map_err(|k| (offset, k))?;
        }
        self.protocol_mut()
            .add_register(name, size, role)
            .map(|_| ())
            .map_err(|k| (offset, k))
    }

    fn move_stmt(&mut self, rest: &str, offset: usize) -> Result<(), (usize, ParseErrorKind)> {
        let close = rest.find(']').ok_or_else(|| {
            (
                offset,
                ParseErrorKind::Syntax("expected `move q[i] <destination>`".into()),
            )
        })?;
        let qubit = self
            .operand(rest[..=close].trim())
            .map_err(|k| (offset, k))?;
        let dest_text = rest[close + 1..].trim();
        let dest_offset =
            offset + close + 1 + (rest[close + 1..].len() - rest[close + 1..].trim_start().len());
        let dest = self.destination(dest_text).map_err(|k| (dest_offset, k))?;
        self.protocol_mut()
            .push(Instruction::move_to(qubit, dest))
            .map_err(|k| (0, k))
    }

    fn destination(&mut self, text: &str) -> Result<Destination, ParseErrorKind> {
        let malformed = || ParseErrorKind::MalformedDestination(text.to_string());
        if let Ok(p) = text.parse::<usize>() {
            return Ok(Destination::Physical(p));
        }
        let (func, arg) = text.split_once('(').ok_or_else(malformed)?;
        let arg = arg.strip_suffix(')').ok_or_else(malformed)?.trim();
        split_indexed(arg).ok_or_else(malformed)?;
        match func.trim() {
            "init" => {
                self.operand(arg)?;
                Ok(Destination::Init(arg.to_string()))
            }
            "anchor" => Ok(Destination::Anchor(arg.to_string())),
            _ => Err(malformed()),
        }
    }

    fn operand(&mut self, text: &str) -> Result<usize, ParseErrorKind> {
        if split_indexed(text).is_none() {
            return Err(ParseErrorKind::Syntax(format!(
                "expected `name[index]`, got `{text}`"
            )));
        }
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        self.protocol_mut()
            .qubit_id(&compact)
            .ok_or(ParseErrorKind::UndeclaredQubit(compact))
    }
}

fn split_indexed(text: &str) -> Option<(&str, usize)> {
    let open = text.find('[')?;
    let inner = text[open + 1..].strip_suffix(']')?;
    let name = text[..open].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some((name, inner.trim().parse().ok()?))
}

fn default_role(register: &str) -> Role {
    match register {
        "data" => Role::Data,
        "magic" => Role::Magic,
        "checkup" => Role::Checkup,
        _ => Role::Ancilla,
    }
}
