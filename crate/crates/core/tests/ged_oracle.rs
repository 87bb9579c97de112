use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchgrade_core::ged::{ged_beam, ged_exact, EdgeKey, EditCostModel, EditOp, GedResult};
use sketchgrade_core::numeric::fsum;
use sketchgrade_core::{Srg, SrgRole};
use sketchgrade_testkit::{brute_force_ged, random_ontology, random_srg};

fn labeled(g: &Srg) -> (Vec<(String, String, u8)>, Vec<EdgeKey>) {
    let mut n: Vec<_> = g.nodes().iter().map(|n| (n.id.clone(), n.concept.clone(), n.bloom.ordinal())).collect();
    n.sort();
    let mut e: Vec<_> = g.edges().iter().map(EdgeKey::of).collect();
    e.sort();
    (n, e)
}

fn assert_sound(r: &GedResult, gs: &Srg, go: &Srg) {
    let replayed = r.replay(gs).expect("script replays");
    assert_eq!(labeled(&replayed), labeled(go));
    assert_eq!(r.cost, fsum(r.script.iter().map(EditOp::cost)));
    assert!(r.cost >= 0.0);
}

#[test]
fn exact_matches_enumeration_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let costs = EditCostModel::default();
    let mut beam_equal = 0;
    for _ in 0..200 {
        let o = random_ontology(&mut rng, 8);
        let gs = random_srg(&mut rng, &o, SrgRole::Student, 5, 6);
        let go = random_srg(&mut rng, &o, SrgRole::Gold, 5, 6);
        let exact = ged_exact(&gs, &go, &costs, &o).unwrap();
        let brute = brute_force_ged(&gs, &go, &o, &costs);
        assert_eq!(exact.cost, brute, "exact vs brute on\n{}\n{}", gs.to_json(), go.to_json());
        assert_sound(&exact, &gs, &go);
        let beam = ged_beam(&gs, &go, &costs, &o, 32);
        assert!(beam.cost >= exact.cost);
        assert_sound(&beam, &gs, &go);
        if beam.cost == exact.cost {
            beam_equal += 1;
        }
    }
    assert!(beam_equal >= 160, "beam matched exact on {beam_equal}/200");
}

#[test]
fn non_default_costs_still_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let costs = EditCostModel {
        node_insert: 0.75,
        node_delete: 1.25,
        edge_insert: 0.5,
        edge_delete: 2.0,
        beta: 1.0,
        relation_mismatch: 3.0,
    };
    for _ in 0..60 {
        let o = random_ontology(&mut rng, 6);
        let gs = random_srg(&mut rng, &o, SrgRole::Student, 4, 5);
        let go = random_srg(&mut rng, &o, SrgRole::Gold, 4, 5);
        let exact = ged_exact(&gs, &go, &costs, &o).unwrap();
        assert_eq!(exact.cost, brute_force_ged(&gs, &go, &o, &costs));
        assert_sound(&exact, &gs, &go);
    }
}

#[test]
fn beam_never_worse_as_width_doubles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let costs = EditCostModel::default();
    for _ in 0..40 {
        let o = random_ontology(&mut rng, 10);
        let gs = random_srg(&mut rng, &o, SrgRole::Student, 8, 10);
        let go = random_srg(&mut rng, &o, SrgRole::Gold, 8, 10);
        let mut prev = f64::INFINITY;
        for w in [1, 2, 4, 8, 16, 32, 64] {
            let c = ged_beam(&gs, &go, &costs, &o, w).cost;
            assert!(c <= prev, "width {w}: {c} > {prev}");
            prev = c;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_and_nonnegativity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_ontology(&mut rng, 7);
        let g = random_srg(&mut rng, &o, SrgRole::Gold, 6, 8);
        let costs = EditCostModel::default();
        let r = ged_exact(&g, &g, &costs, &o).unwrap();
        prop_assert_eq!(r.cost, 0.0);
        prop_assert!(r.script.is_empty());
        let other = random_srg(&mut rng, &o, SrgRole::Student, 6, 8);
        let r = ged_exact(&other, &g, &costs, &o).unwrap();
        prop_assert!(r.cost >= 0.0);
        prop_assert!(r.exact);
    }

    #[test]
    fn deterministic_results(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_ontology(&mut rng, 7);
        let gs = random_srg(&mut rng, &o, SrgRole::Student, 5, 6);
        let go = random_srg(&mut rng, &o, SrgRole::Gold, 5, 6);
        let costs = EditCostModel::default();
        prop_assert_eq!(ged_exact(&gs, &go, &costs, &o).unwrap(), ged_exact(&gs, &go, &costs, &o).unwrap());
        prop_assert_eq!(ged_beam(&gs, &go, &costs, &o, 3), ged_beam(&gs, &go, &costs, &o, 3));
    }
}
