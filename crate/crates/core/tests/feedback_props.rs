use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchgrade_core::feedback::{
    classify_cause, deficiencies_with, feedback_report, hints_for, loop_run, render_overlay, Cause, DrawOp,
    ElementRef, NullStudent, SimulatedStudent,
};
use sketchgrade_core::item::{Anchor, OverlayPrimitive};
use sketchgrade_core::srg::BloomLevel::*;
use sketchgrade_core::{
    best_alignment, deficiencies, hints, similarity, simulated_student, BloomLevel, Deficiency, DeficiencyKind,
    FeedbackReport, Ontology, PhiMap, Region, Srg, SrgEdge, SrgNode, SrgRole, Termination, VisualHint,
};
use sketchgrade_testkit::{degrade, item_for, random_gold, random_ontology};

fn gold(n: usize, seed: u64) -> (Ontology, Srg) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = random_ontology(&mut rng, 12);
    let g = random_gold(&mut rng, &o, n, n + 2);
    (o, g)
}

fn diagnose(gs: &Srg, go: &Srg, o: &Ontology) -> Vec<Deficiency> {
    let a = best_alignment(gs.nodes(), go.nodes(), o, &Default::default());
    deficiencies(gs, go, &a, o)
}

// Independent ordering: (Bloom ordinal, kind rank, concept key tuple).
fn oracle_order(defs: &[Deficiency]) -> Vec<String> {
    let mut keyed: Vec<_> = defs
        .iter()
        .filter_map(|d| {
            let rank = match d.kind {
                DeficiencyKind::BloomRegression => 0,
                DeficiencyKind::MissingNode => 1,
                DeficiencyKind::MissingEdge => 2,
                _ => return None,
            };
            let key = match d.gold_ref.as_ref()? {
                ElementRef::Node { concept, .. } => (0, concept.clone(), String::new(), String::new()),
                ElementRef::Edge { source_concept, relation, target_concept, .. } => {
                    (1, source_concept.clone(), relation.clone(), target_concept.clone())
                }
            };
            Some((d.expected_bloom.unwrap().ordinal(), rank, key, d.describe()))
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|k| k.3).collect()
}

#[test]
fn hint_order_matches_sorted_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..200 {
        let (o, go) = gold(6, seed);
        let gs = degrade(&mut rng, &go);
        let defs = diagnose(&gs, &go, &o);
        let phi = PhiMap::generic(&go);
        for limit in [1, 3, 100] {
            let hs = hints(&defs, &phi, limit).unwrap();
            let repairs: Vec<String> = hs.iter().filter(|h| !h.is_caution()).map(|h| h.deficiency.describe()).collect();
            let mut expected = oracle_order(&defs);
            expected.truncate(limit);
            assert_eq!(repairs, expected, "seed {seed} limit {limit}");
            let cautions = hs.iter().filter(|h| h.is_caution()).count();
            let extraneous = defs
                .iter()
                .filter(|d| matches!(d.kind, DeficiencyKind::ExtraneousNode | DeficiencyKind::ExtraneousEdge))
                .count();
            assert_eq!(cautions, extraneous);
            for h in &hs {
                assert_eq!(h.is_caution(), h.overlay_ops.is_empty(), "{}", h.id);
            }
        }
    }
}

#[test]
fn five_missing_nodes_limit_three() {
    let o = Ontology::new(
        "R",
        [("R", None), ("A", Some("R")), ("B", Some("R")), ("C", Some("R")), ("D", Some("R")), ("E", Some("R"))],
        ["causes"],
    )
    .unwrap();
    let go = Srg::new(
        "x",
        SrgRole::Gold,
        vec![
            SrgNode::new("a", "A", Evaluate),
            SrgNode::new("b", "B", Understand),
            SrgNode::new("c", "C", Create),
            SrgNode::new("d", "D", Remember),
            SrgNode::new("e", "E", Apply),
        ],
        vec![],
    )
    .unwrap();
    let gs = Srg::empty("x", SrgRole::Student);
    let hs = hints(&diagnose(&gs, &go, &o), &PhiMap::generic(&go), 3).unwrap();
    let got: Vec<(BloomLevel, String)> = hs.iter().map(|h| (h.bloom_target, h.text.clone())).collect();
    assert_eq!(
        got,
        vec![
            (Remember, "Add D to your sketch".to_string()),
            (Understand, "Add B to your sketch".to_string()),
            (Apply, "Add E to your sketch".to_string()),
        ]
    );
    assert!(hints(&[], &PhiMap::generic(&go), 3).unwrap().is_empty());
}

#[test]
fn single_regression_from_demotion() {
    let (o, go) = gold(5, 3);
    let top = go.nodes().iter().find(|n| n.bloom > Remember).unwrap().clone();
    let mut gs = go.clone().with_role(SrgRole::Student);
    gs.set_bloom(&top.id, Remember);
    let defs = diagnose(&gs, &go, &o);
    // exhaustive diff of the two graphs: exactly one node label differs
    let differing: Vec<_> =
        gs.nodes().iter().filter(|n| go.node(&n.id).map(|g| g.bloom != n.bloom).unwrap_or(true)).collect();
    assert_eq!(differing.len(), 1);
    assert_eq!(defs.len(), 1, "{defs:?}");
    assert_eq!(defs[0].kind, DeficiencyKind::BloomRegression);
    assert_eq!(defs[0].expected_bloom, Some(top.bloom));
    assert!(diagnose(&go.clone().with_role(SrgRole::Student), &go, &o).is_empty());
}

#[test]
fn cause_table() {
    let table = [
        (0.9, "two dots", Cause::Perceptual),
        (0.9, "", Cause::Conceptual),
        (0.9, "   ", Cause::Conceptual),
        (0.7, "x", Cause::Perceptual),
        (0.69, "x", Cause::Conceptual),
        (0.0, "x", Cause::Conceptual),
        (1.0, "x", Cause::Perceptual),
    ];
    for (sim, text, cause) in table {
        assert_eq!(classify_cause(sim, text, 0.7), cause, "{sim} {text:?}");
    }
}

#[test]
fn marker_scales_linearly() {
    let d = Deficiency {
        kind: DeficiencyKind::MissingNode,
        gold_ref: Some(ElementRef::Node { id: "a".into(), concept: "A".into(), bloom: Apply }),
        student_ref: None,
        expected_bloom: Some(Apply),
        cause: Cause::Conceptual,
    };
    let h = VisualHint {
        id: "missing_node:A".into(),
        deficiency: d,
        text: "Draw A".into(),
        overlay_ops: vec![OverlayPrimitive::Marker {
            anchor: Anchor::Region { region: Region::new(0.1, 0.1, 0.3, 0.3).unwrap() },
        }],
        bloom_target: Apply,
    };
    let script = render_overlay(std::slice::from_ref(&h), (1000, 800));
    assert_eq!(script.len(), 1);
    assert_eq!((script[0].op, script[0].x0, script[0].y0, script[0].x1, script[0].y1), (DrawOp::Rect, 100, 80, 300, 240));
    assert!(render_overlay(&[], (1000, 800)).is_empty());
    assert_eq!(render_overlay(std::slice::from_ref(&h), (1000, 800)), script);
}

#[test]
fn perfect_sketch_report() {
    let (o, go) = gold(5, 9);
    let gs = go.clone().with_role(SrgRole::Student);
    let b = similarity(&gs, &go, &o, &Default::default()).unwrap();
    let defs = diagnose(&gs, &go, &o);
    let r = feedback_report(&b, &gs, &defs, &[]);
    assert_eq!(r.proficiency_level, sketchgrade_core::Band::Proficient);
    assert!(r.missing_concepts.is_empty() && r.reasoning_gaps.is_empty());
    assert_eq!(FeedbackReport::from_json(&r.to_json()).unwrap(), r);
}

#[test]
fn report_json_round_trips_and_text_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..50 {
        let (o, go) = gold(6, seed);
        let gs = degrade(&mut rng, &go);
        let b = similarity(&gs, &go, &o, &Default::default()).unwrap();
        let defs = deficiencies_with(&gs, &go, &b.alignment, &o, 0.7);
        let hs = hints_for(&gs, &defs, &PhiMap::generic(&go), 3).unwrap();
        let r = feedback_report(&b, &gs, &defs, &hs);
        assert_eq!(FeedbackReport::from_json(&r.to_json()).unwrap(), r);
        let text = r.to_text();
        assert!(text.contains(&format!("Similarity_score: {:.3}", r.similarity_score)));
        assert!(text.contains(&format!("Your Proficiency Level: {}", r.proficiency_level)));
        for c in &r.missing_concepts {
            assert!(text.contains(c.as_str()));
        }
        for g in &r.revision_guidance {
            assert!(text.contains(g.as_str()));
        }
    }
}

#[test]
fn guided_mode_issues_the_whole_lowest_layer() {
    let o = Ontology::new(
        "R",
        [("R", None), ("A", Some("R")), ("B", Some("R")), ("C", Some("R")), ("D", Some("R")), ("E", Some("R"))],
        ["causes"],
    )
    .unwrap();
    let go = Srg::new(
        "x",
        SrgRole::Gold,
        ["A", "B", "C", "D", "E"].iter().map(|c| SrgNode::new(c.to_lowercase(), *c, Understand)).collect(),
        vec![],
    )
    .unwrap();
    let gs = Srg::new("x", SrgRole::Student, vec![SrgNode::new("s", "A", Remember)], vec![]).unwrap();
    let defs = diagnose(&gs, &go, &o);
    let hs = hints_for(&gs, &defs, &PhiMap::generic(&go), 2).unwrap();
    assert_eq!(hs.iter().filter(|h| !h.is_caution()).count(), 5);
    assert!(hs.iter().all(|h| h.bloom_target == Understand));
}

fn repairable(defs: &[Deficiency]) -> usize {
    defs.iter()
        .filter(|d| {
            matches!(d.kind, DeficiencyKind::MissingNode | DeficiencyKind::MissingEdge | DeficiencyKind::BloomRegression)
        })
        .count()
}

#[test]
fn apply_all_student_converges_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    for seed in 0..150 {
        let (o, go) = gold(6, seed);
        let item = item_for(&go, &o);
        let gs0 = degrade(&mut rng, &go);
        let k = repairable(&diagnose(&gs0, &go, &o));
        let mut student = SimulatedStudent { p: 1.0, seed };
        let trace = loop_run(&go, &gs0, &mut student, &item, k.max(1)).unwrap();
        let s = trace.scores();
        if s[0] >= item.scoring().tau {
            assert_eq!(s.len(), 1);
            continue;
        }
        checked += 1;
        assert_eq!(trace.terminated_by, Termination::ThresholdMet, "seed {seed} scores {s:?}");
        assert!(trace.iterations.len() - 1 <= k, "seed {seed}: {} revisions for {k} deficiencies", s.len() - 1);
        for w in s.windows(2) {
            assert!(w[1] > w[0], "seed {seed} scores {s:?}");
        }
    }
    assert!(checked > 50);
}

#[test]
fn identical_sketch_stops_immediately() {
    let (o, go) = gold(5, 2);
    let item = item_for(&go, &o);
    let trace =
        loop_run(&go, &go.clone().with_role(SrgRole::Student), &mut SimulatedStudent { p: 1.0, seed: 0 }, &item, 5)
            .unwrap();
    assert_eq!(trace.iterations.len(), 1);
    assert_eq!(trace.terminated_by, Termination::ThresholdMet);
    assert!(trace.iterations[0].hints.is_empty());
}

#[test]
fn null_student_exhausts_iterations() {
    let (o, go) = gold(5, 2);
    let item = item_for(&go, &o);
    let gs0 = Srg::empty("rand", SrgRole::Student);
    for t_max in 1..=5 {
        let trace = loop_run(&go, &gs0, &mut NullStudent, &item, t_max).unwrap();
        assert_eq!(trace.iterations.len(), t_max + 1);
        assert_eq!(trace.terminated_by, Termination::MaxIterations);
    }
}

#[test]
fn simulated_student_extremes_and_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100 {
        let (o, go) = gold(6, seed);
        let gs = degrade(&mut rng, &go);
        let hs = hints(&diagnose(&gs, &go, &o), &PhiMap::generic(&go), 100).unwrap();
        assert_eq!(simulated_student(&gs, &hs, &go, 0.0, seed), gs);
        let full = simulated_student(&gs, &hs, &go, 1.0, seed);
        assert!(diagnose(&full, &go, &o).iter().all(|d| d.kind != DeficiencyKind::MissingNode));
        let half = simulated_student(&gs, &hs, &go, 0.5, seed);
        assert_eq!(simulated_student(&gs, &hs, &go, 0.5, seed), half);
        for g in [&full, &half] {
            for n in g.nodes() {
                assert!(go.nodes().iter().any(|x| x.concept == n.concept));
            }
            // new edges only come from hinted gold relations
            for e in g.edges().iter().filter(|e| !gs.has_edge(&e.source, &e.target, &e.relation)) {
                let hinted = hs.iter().any(|h| {
                    h.deficiency.kind == DeficiencyKind::MissingEdge
                        && matches!(&h.deficiency.gold_ref, Some(ElementRef::Edge { relation, .. }) if *relation == e.relation)
                });
                assert!(hinted, "seed {seed}: {e:?}");
            }
        }
    }
}

#[test]
fn recorded_half_probability_run() {
    let (o, go) = gold(6, 42);
    let gs = Srg::new("rand", SrgRole::Student, vec![], vec![]).unwrap();
    let hs = hints(&diagnose(&gs, &go, &o), &PhiMap::generic(&go), 100).unwrap();
    let out = simulated_student(&gs, &hs, &go, 0.5, 1234);
    if std::env::var_os("RECORD").is_some() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/half_probability_run.srg.json"), out.to_json()).unwrap();
    }
    let recorded = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/half_probability_run.srg.json"))
        .unwrap();
    assert_eq!(out, Srg::from_json(&recorded).unwrap());
}

#[test]
fn edge_repair_adds_the_gold_relation() {
    let o = Ontology::new("R", [("R", None), ("A", Some("R")), ("B", Some("R"))], ["causes"]).unwrap();
    let go = Srg::new(
        "x",
        SrgRole::Gold,
        vec![SrgNode::new("a", "A", Apply), SrgNode::new("b", "B", Apply)],
        vec![SrgEdge::new("a", "b", "causes")],
    )
    .unwrap();
    let gs = Srg::new(
        "x",
        SrgRole::Student,
        vec![SrgNode::new("s1", "A", Apply), SrgNode::new("s2", "B", Apply)],
        vec![],
    )
    .unwrap();
    let hs = hints(&diagnose(&gs, &go, &o), &PhiMap::generic(&go), 3).unwrap();
    let out = simulated_student(&gs, &hs, &go, 1.0, 0);
    assert!(out.has_edge("s1", "s2", "causes"));
    assert_eq!(out.node_count(), 2);
}

proptest! {
    #[test]
    fn loop_trace_replays(seed in 0u64..1000, p in 0.0f64..=1.0) {
        let (o, go) = gold(5, seed);
        let item = item_for(&go, &o);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gs0 = degrade(&mut rng, &go);
        let a = loop_run(&go, &gs0, &mut SimulatedStudent { p, seed }, &item, 5).unwrap();
        let b = loop_run(&go, &gs0, &mut SimulatedStudent { p, seed }, &item, 5).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(!a.iterations.is_empty() && a.iterations.len() <= 6);
        if a.terminated_by == Termination::ThresholdMet {
            prop_assert!(a.last().breakdown.s >= item.scoring().tau);
        }
    }
}
