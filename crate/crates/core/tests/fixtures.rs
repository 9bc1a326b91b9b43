use ftroute::workflow::fixtures;
use ftroute::{Dag, Direction, GateKind, Role};

fn counts(name: &str) -> Vec<(GateKind, usize)> {
    let a = fixtures::load(name).static_analysis();
    a.counts.iter().collect()
}

#[test]
fn steane_syndrome_measurement_statistics() {
    let p = fixtures::load("steane_sm");
    let a = p.static_analysis();
    assert_eq!(a.qubits, 15);
    assert_eq!(a.barriers, 3);
    assert_eq!(a.counts.get(GateKind::Cx), 36);
    assert_eq!(a.counts.get(GateKind::H), 15);
    assert_eq!(a.counts.get(GateKind::PrepZ), 16);
    assert_eq!(a.counts.get(GateKind::MeasZ), 16);
    assert_eq!(a.counts.total(), 83);
    assert_eq!(p.partitions().iter().max(), Some(&3));
    assert_eq!(a.depth, Dag::build(&p, Direction::Forward).longest_path());
}

#[test]
fn transversal_protocols_are_one_layer() {
    for name in ["steane_measz", "steane_h", "steane_s", "steane_cnot"] {
        assert_eq!(fixtures::load(name).static_analysis().depth, 1, "{name}");
    }
    assert_eq!(counts("steane_cnot"), vec![(GateKind::Cx, 7)]);
}

#[test]
fn t_gate_protocol_shape() {
    let p = fixtures::load("steane_t");
    let a = p.static_analysis();
    assert_eq!(a.barriers, 1);
    assert_eq!(a.counts.get(GateKind::Cx), 7);
    assert_eq!(a.counts.get(GateKind::MeasZ), 7);
    assert_eq!(a.counts.get(GateKind::S), 7);
    assert_eq!(p.qubits_with_role(Role::Magic).len(), 7);
    assert_eq!(p.qubits_with_role(Role::Data).len(), 7);
}

#[test]
fn golay_fixture_sizes() {
    let prep = fixtures::load("golay_prep");
    assert_eq!(prep.num_qubits(), 23);
    assert_eq!(prep.distance, 7);
    let verify = fixtures::load("golay_verify");
    for k in 1..=4 {
        assert_eq!(verify.register_qubits(&format!("b{k}")).unwrap().len(), 23);
    }
    let sm = fixtures::load("golay_sm");
    assert_eq!(sm.register_qubits("data").unwrap().len(), 23);
    assert_eq!(sm.register_qubits("anc").unwrap().len(), 23);
}

#[test]
fn every_fixture_reprints_to_itself() {
    for (name, _) in fixtures::ALL {
        let p = fixtures::load(name);
        let again = ftroute::parse_protocol(&p.to_qasm()).unwrap();
        assert_eq!(again, p, "{name}");
    }
}
