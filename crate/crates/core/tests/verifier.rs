use std::collections::BTreeMap;

use ftroute::emit::Gate;
use ftroute::verify::{check_composition, validate_json, Check, Status};
use ftroute::workflow::fixtures;
use ftroute::*;

fn routed() -> (Circuit, Protocol, QubitLayout) {
    let p = fixtures::load("steane_sm");
    let p = p
        .inject_moveback(
            &(0..7)
                .map(|i| {
                    let q = format!("data[{i}]");
                    (q.clone(), Destination::Init(q))
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
    let layout = QubitLayout::new(5, 7).unwrap();
    let cfg = SynthesisConfig {
        iterations: 4,
        seed: 2,
        time_limit_secs: None,
        ..SynthesisConfig::default()
    };
    let out = run_sabre(&p, &layout, &cfg, &Constraints::default()).unwrap();
    (out.best.circuit, p, layout)
}

fn check(c: &Circuit, p: &Protocol, l: &QubitLayout) -> ValidationReport {
    validate(
        c,
        p,
        l,
        &Expectations {
            dd_budget: 0,
            anchors: None,
        },
    )
}

fn find(c: &Circuit, pred: impl Fn(&Gate) -> bool) -> (usize, usize) {
    for (s, step) in c.steps.iter().enumerate() {
        if let Some(g) = step.iter().position(&pred) {
            return (s, g);
        }
    }
    panic!("no such gate");
}

#[test]
fn untouched_circuit_passes() {
    let (c, p, l) = routed();
    let r = check(&c, &p, &l);
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    assert!(check_composition(&c));
    assert_eq!(r.status(Check::SelfContained), Status::Pass);
}

#[test]
fn non_adjacent_gate_breaks_locality() {
    let (mut c, p, l) = routed();
    let (s, g) = find(&c, |g| g.op == GateKind::Cx);
    let a = c.steps[s][g].qubits[0];
    let far = (0..l.num_qubits())
        .find(|&q| q != a && !l.are_adjacent(a, q))
        .unwrap();
    c.steps[s][g].qubits[1] = far;
    assert_eq!(check(&c, &p, &l).status(Check::Locality), Status::Fail);
}

#[test]
fn dropping_an_inserted_swap_is_caught() {
    let (mut c, p, l) = routed();
    let (s, g) = find(&c, |g| g.inserted);
    c.steps[s].remove(g);
    c.analysis.inserted_swaps -= 1;
    let r = check(&c, &p, &l);
    assert!(!r.passed());
    assert_eq!(r.status(Check::Equivalence), Status::Fail);
}

#[test]
fn reordered_steps_break_equivalence() {
    let (mut c, p, l) = routed();
    let n = c.steps.len();
    c.steps.swap(0, n - 1);
    assert!(!check(&c, &p, &l).passed());
}

#[test]
fn wrong_partition_stamp_is_caught() {
    let (mut c, p, l) = routed();
    let last = c.partitions.len() - 1;
    c.partitions[0] = c.partitions[last];
    assert_eq!(
        check(&c, &p, &l).status(Check::PartitionOrder),
        Status::Fail
    );
}

#[test]
fn tampered_final_mapping_is_caught() {
    let (mut c, p, l) = routed();
    let a = c.final_mapping["syndrome[0]"];
    let b = c.final_mapping["syndrome[1]"];
    c.final_mapping.insert("syndrome[0]".into(), b);
    c.final_mapping.insert("syndrome[1]".into(), a);
    assert_eq!(
        check(&c, &p, &l).status(Check::MappingConsistency),
        Status::Fail
    );
}

#[test]
fn missing_move_back_record_is_caught() {
    let (mut c, p, l) = routed();
    c.move_back.remove("data[0]");
    assert_eq!(check(&c, &p, &l).status(Check::SelfContained), Status::Fail);
}

#[test]
fn anchors_are_enforced() {
    let (c, p, l) = routed();
    let mut anchors: BTreeMap<String, usize> = (0..7)
        .map(|i| {
            let q = format!("data[{i}]");
            let cell = c.initial_mapping[&q];
            (q, cell)
        })
        .collect();
    let ok = validate(
        &c,
        &p,
        &l,
        &Expectations {
            dd_budget: 0,
            anchors: Some(&anchors),
        },
    );
    assert!(ok.passed());
    let moved = (0..l.num_qubits())
        .find(|q| !c.initial_mapping.values().any(|v| v == q))
        .unwrap();
    anchors.insert("data[0]".into(), moved);
    let bad = validate(
        &c,
        &p,
        &l,
        &Expectations {
            dd_budget: 0,
            anchors: Some(&anchors),
        },
    );
    assert_eq!(bad.status(Check::MappingConsistency), Status::Fail);
}

#[test]
fn dd_budget_is_recounted() {
    // two live data qubits exchanged with no budget
    let p = parse_protocol("qreg d[2] role=data;\ncx d[0], d[1];").unwrap();
    let l = QubitLayout::new(1, 3).unwrap();
    let mut c = run_sabre(
        &p,
        &l,
        &SynthesisConfig {
            iterations: 1,
            ..SynthesisConfig::with_distance(1001)
        },
        &Constraints::default(),
    )
    .unwrap()
    .best
    .circuit;
    let (a, b) = (c.initial_mapping["d[0]"], c.initial_mapping["d[1]"]);
    assert!(l.are_adjacent(a, b));
    let mut step = vec![Gate {
        op: GateKind::Swap,
        qubits: vec![a.min(b), a.max(b)],
        dest: None,
        inserted: true,
    }];
    std::mem::swap(&mut c.steps[0], &mut step);
    c.steps.insert(1, step);
    c.partitions.insert(0, 0);
    c.analysis.depth += 1;
    c.analysis.inserted_swaps += 1;
    c.analysis.kq = emit::compute_kq(c.analysis.depth, 3);
    c.final_mapping.insert("d[0]".into(), b);
    c.final_mapping.insert("d[1]".into(), a);
    let r = validate(
        &c,
        &p,
        &l,
        &Expectations {
            dd_budget: 0,
            anchors: None,
        },
    );
    assert_eq!(r.dd_swaps, 1);
    assert_eq!(r.status(Check::DdBudget), Status::Fail);
}

#[test]
fn malformed_json_is_an_error() {
    let (c, p, l) = routed();
    assert!(validate_json("{", &p, &l, &Expectations::default()).is_err());
    let text = c
        .to_json()
        .replacen("\"qubits\": [", "\"qubits\": [999, ", 1);
    assert!(validate_json(&text, &p, &l, &Expectations::default()).is_err());
}
