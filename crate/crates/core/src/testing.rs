//! Random protocols for property tests and fuzzing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ir::{Destination, GateKind, Instruction, Protocol, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomProtocolSpec {
    pub max_qubits: usize,
    /// Upper bound on instructions, barriers included, moves excluded.
    pub max_instructions: usize,
    pub max_barriers: usize,
    pub distance: usize,
    /// Append a move back to the start for every data qubit, half of the time.
    pub move_back: bool,
}

impl Default for RandomProtocolSpec {
    fn default() -> Self {
        Self {
            max_qubits: 6,
            max_instructions: 15,
            max_barriers: 2,
            distance: 3,
            move_back: true,
        }
    }
}

const ONE_QUBIT: [GateKind; 11] = [
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
];

const ROLES: [Role; 4] = [Role::Data, Role::Ancilla, Role::Checkup, Role::Magic];

/// Draws a protocol with one or two registers of random roles.
pub fn random_protocol(rng: &mut impl Rng, spec: &RandomProtocolSpec) -> Protocol {
    let mut p = Protocol::new("random", spec.distance);
    let n = rng.gen_range(1..=spec.max_qubits.max(1));
    let split = if n > 1 && rng.gen_bool(0.5) {
        rng.gen_range(1..n)
    } else {
        n
    };
    p.add_register("a", split, *ROLES.choose(rng).unwrap())
        .expect("fresh register");
    if split < n {
        p.add_register("b", n - split, *ROLES.choose(rng).unwrap())
            .expect("fresh register");
    }

    let len = rng.gen_range(0..=spec.max_instructions);
    let barriers = rng.gen_range(0..=spec.max_barriers.min(len));
    let mut slots: Vec<bool> = (0..len).map(|i| i < barriers).collect();
    slots.shuffle(rng);
    for is_barrier in slots {
        let instr = if is_barrier {
            Instruction::barrier()
        } else if n >= 2 && rng.gen_bool(0.45) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let kind = if rng.gen_bool(0.9) {
                GateKind::Cx
            } else {
                GateKind::Swap
            };
            Instruction::gate(kind, &[a, b])
        } else {
            Instruction::gate(*ONE_QUBIT.choose(rng).unwrap(), &[rng.gen_range(0..n)])
        };
        p.push(instr).expect("generated instruction is well formed");
    }

    if spec.move_back && rng.gen_bool(0.5) {
        let data: Vec<usize> = (0..n).filter(|&q| p.role(q) == Role::Data).collect();
        for q in data {
            let name = p.qubit_name(q).to_string();
            p.push(Instruction::move_to(q, Destination::Init(name)))
                .expect("move is well formed");
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_bounds() {
        let spec = RandomProtocolSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = random_protocol(&mut rng, &spec);
            assert!(p.num_qubits() <= 6);
            assert!(p.num_barriers() <= 2);
            let non_moves = p
                .instructions()
                .iter()
                .filter(|i| i.kind != GateKind::Move)
                .count();
            assert!(non_moves <= 15);
        }
    }
}
