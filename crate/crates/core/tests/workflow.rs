use std::collections::BTreeMap;
use std::sync::OnceLock;

use ftroute::verify::check_composition;
use ftroute::workflow::*;
use ftroute::*;

fn steane_layout() -> QubitLayout {
    QubitLayout::new(5, 7).unwrap()
}

fn config(seed: u64) -> SynthesisConfig {
    SynthesisConfig {
        iterations: 8,
        seed,
        time_limit_secs: None,
        ..SynthesisConfig::default()
    }
}

fn steane() -> &'static SetResult {
    static SET: OnceLock<SetResult> = OnceLock::new();
    SET.get_or_init(|| {
        synthesize_set(
            &ProtocolSet::steane(),
            &steane_layout(),
            &config(11),
            &Arrangement::ALL,
        )
        .unwrap()
    })
}

fn circuit(name: &str) -> &'static Synthesis {
    steane()
        .circuits
        .iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("no circuit {name}"))
}

fn positions(map: &BTreeMap<String, usize>, reg: &str, n: usize) -> Vec<usize> {
    (0..n).map(|i| map[&format!("{reg}[{i}]")]).collect()
}

#[test]
fn set_produces_every_circuit_and_all_validate() {
    let names: Vec<&str> = steane().circuits.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names.len(), 14);
    for s in &steane().circuits {
        let r = s.validate();
        assert!(
            r.passed(),
            "{}: {:?}",
            s.name,
            r.failures().collect::<Vec<_>>()
        );
        assert_eq!(s.circuit.analysis.dd_swaps, 0, "{}", s.name);
    }
}

#[test]
fn configuration_comes_from_syndrome_measurement() {
    let lq = &steane().config;
    assert_eq!(lq.positions.len(), 7);
    let sm = circuit("steane_sm");
    assert_eq!(
        positions(&sm.circuit.initial_mapping, "data", 7),
        lq.positions
    );
    assert_eq!(
        positions(&sm.circuit.final_mapping, "data", 7),
        lq.positions
    );
    assert!(check_composition(&sm.circuit));
}

#[test]
fn magic_preparation_is_not_moved_back() {
    let magic = circuit("steane_magic");
    assert!(magic.circuit.move_back.is_empty());
    assert_eq!(
        Some(positions(&magic.circuit.final_mapping, "data", 7)),
        steane().magic_final
    );
}

#[test]
fn anchored_single_block_protocols() {
    let lq = &steane().config.positions;
    for name in ["steane_encoder", "steane_measz", "steane_h", "steane_s"] {
        let s = circuit(name);
        assert_eq!(
            &positions(&s.circuit.initial_mapping, "data", 7),
            lq,
            "{name}"
        );
    }
    let enc = circuit("steane_encoder");
    assert_eq!(&positions(&enc.circuit.final_mapping, "data", 7), lq);
    for name in ["steane_measz", "steane_h", "steane_s"] {
        assert_eq!(circuit(name).circuit.analysis.inserted_swaps, 0, "{name}");
        assert_eq!(circuit(name).circuit.analysis.depth, 1, "{name}");
    }
}

#[test]
fn mirrored_cnot_swaps_roles_only() {
    for (base, mirror) in [
        ("steane_cnot_v-ns", "steane_cnot_v-sn"),
        ("steane_cnot_h-ew", "steane_cnot_h-we"),
    ] {
        let a = &circuit(base).circuit;
        let b = &circuit(mirror).circuit;
        assert_eq!(circuit(mirror).mirror_of.as_deref(), Some(base));
        assert_eq!(a.steps.len(), b.steps.len());
        for i in 0..7 {
            let (c, t) = (format!("ctrl[{i}]"), format!("trgt[{i}]"));
            assert_eq!(a.initial_mapping[&c], b.initial_mapping[&t]);
            assert_eq!(a.initial_mapping[&t], b.initial_mapping[&c]);
        }
        for (sa, sb) in a.steps.iter().zip(&b.steps) {
            for (ga, gb) in sa.iter().zip(sb) {
                if ga.op == GateKind::Cx && !ga.inserted {
                    let mut rev = ga.qubits.clone();
                    rev.reverse();
                    assert_eq!(rev, gb.qubits);
                } else {
                    assert_eq!(ga, gb);
                }
            }
        }
    }
}

#[test]
fn two_block_circuits_start_and_end_on_relabelled_anchors() {
    let lq = &steane().config;
    for a in Arrangement::ALL {
        let plan = plan_two_qubit(TwoBlockGate::Cnot, a, &lq.layout);
        let s = circuit(&format!("steane_cnot_{a}"));
        let ctrl: Vec<usize> = lq
            .positions
            .iter()
            .map(|&p| plan.extension.relabel(plan.first_block, p))
            .collect();
        let trgt: Vec<usize> = lq
            .positions
            .iter()
            .map(|&p| plan.extension.relabel(plan.second_block, p))
            .collect();
        assert_eq!(
            positions(&s.circuit.initial_mapping, "ctrl", 7),
            ctrl,
            "{a}"
        );
        assert_eq!(
            positions(&s.circuit.initial_mapping, "trgt", 7),
            trgt,
            "{a}"
        );
        assert_eq!(positions(&s.circuit.final_mapping, "ctrl", 7), ctrl, "{a}");
        assert_eq!(positions(&s.circuit.final_mapping, "trgt", 7), trgt, "{a}");
        assert_eq!(s.layout, plan.layout);
    }
}

#[test]
fn t_gate_variants() {
    let lq = &steane().config;
    let magic_final = steane().magic_final.as_ref().unwrap();
    let mut bodies = Vec::new();
    for a in Arrangement::ALL {
        let plan = plan_two_qubit(TwoBlockGate::T, a, &lq.layout);
        assert!(plan.mirror_of.is_none());
        let s = circuit(&format!("steane_t_{a}"));
        let data: Vec<usize> = lq
            .positions
            .iter()
            .map(|&p| plan.extension.relabel(plan.first_block, p))
            .collect();
        let magic: Vec<usize> = magic_final
            .iter()
            .map(|&p| plan.extension.relabel(plan.second_block, p))
            .collect();
        assert_eq!(
            positions(&s.circuit.initial_mapping, "data", 7),
            data,
            "{a}"
        );
        assert_eq!(
            positions(&s.circuit.initial_mapping, "magic", 7),
            magic,
            "{a}"
        );
        assert_eq!(positions(&s.circuit.final_mapping, "data", 7), data, "{a}");
        assert!(s.circuit.move_back.keys().all(|k| k.starts_with("data[")));
        let c = &s.circuit.analysis.gate_counts;
        assert_eq!(
            (
                c.get(GateKind::Cx),
                c.get(GateKind::MeasZ),
                c.get(GateKind::S)
            ),
            (7, 7, 7)
        );
        assert_eq!(s.circuit.analysis.barriers, 1);
        bodies.push(s.circuit.to_json());
    }
    bodies.sort();
    bodies.dedup();
    assert_eq!(bodies.len(), 4);
}

#[test]
fn anchor_conflict_is_reported() {
    let layout = steane_layout();
    let err = LogicalQubitConfig::new(layout, "data", vec![0, 1, 2, 3, 4, 5, 5]).unwrap_err();
    assert!(matches!(err, WorkflowError::Config(_)));
}

#[test]
fn missing_register_is_reported() {
    let lq = LogicalQubitConfig::new(steane_layout(), "data", (0..7).collect()).unwrap();
    let p = fixtures::load("steane_h");
    let err = synthesize_nonpivot("h", &p, "nope", MoveBack::Init, &lq, &config(1)).unwrap_err();
    assert!(matches!(err, WorkflowError::MissingRegister { .. }));
}

#[test]
fn too_small_layout_fails_the_stage() {
    let set = ProtocolSet::steane();
    let err = synthesize_pivots(&set, &QubitLayout::new(3, 3).unwrap(), &config(1)).unwrap_err();
    match err {
        WorkflowError::Stage { stage, source } => {
            assert_eq!(stage, "steane_sm");
            assert!(matches!(source, MapperError::LayoutTooSmall { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn golay_pipeline_plumbing() {
    let base = QubitLayout::new(7, 7).unwrap();
    let cfg = SynthesisConfig {
        iterations: 2,
        seed: 5,
        distance: 7,
        time_limit_secs: None,
        ..SynthesisConfig::default()
    };
    let r = golay_pipeline(
        &fixtures::load("golay_prep"),
        &fixtures::load("golay_verify"),
        &fixtures::load("golay_sm"),
        &base,
        [&cfg, &cfg, &cfg],
    )
    .unwrap();
    let shapes: Vec<String> = r.stages().iter().map(|s| s.layout.to_string()).collect();
    assert_eq!(shapes, ["7x7", "14x14", "14x7"]);
    let budgets: Vec<usize> = r.stages().iter().map(|s| s.dd_budget).collect();
    assert_eq!(budgets, [0, 0, 1]);
    assert_eq!(positions(&r.prep.circuit.final_mapping, "q", 23), r.m_lq);

    let t = &r.verification_tiles;
    for (k, (tr, tc)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let expect: Vec<usize> = r
            .m_lq
            .iter()
            .map(|&p| t.relabel(t.tile(tr, tc), p))
            .collect();
        let got = positions(
            &r.verification.circuit.initial_mapping,
            &format!("b{}", k + 1),
            23,
        );
        assert_eq!(got, expect, "block b{}", k + 1);
    }
    let moved: Vec<&String> = r.verification.circuit.move_back.keys().collect();
    assert_eq!(moved.len(), 23);
    assert!(moved.iter().all(|k| k.starts_with("b1[")));

    let t3 = &r.syndrome_tiles;
    let data: Vec<usize> = r
        .m_lq
        .iter()
        .map(|&p| t3.relabel(t3.tile(0, 0), p))
        .collect();
    let anc: Vec<usize> = r
        .m_lq
        .iter()
        .map(|&p| t3.relabel(t3.tile(1, 0), p))
        .collect();
    assert_eq!(
        positions(&r.syndrome.circuit.initial_mapping, "data", 23),
        data
    );
    assert_eq!(
        positions(&r.syndrome.circuit.initial_mapping, "anc", 23),
        anc
    );
    assert_eq!(
        positions(&r.syndrome.circuit.final_mapping, "data", 23),
        data
    );

    for s in r.stages() {
        let rep = s.validate();
        assert!(
            rep.passed(),
            "{}: {:?}",
            s.name,
            rep.failures().collect::<Vec<_>>()
        );
        assert!(s.circuit.analysis.dd_swaps <= s.dd_budget);
    }
}
