//! Brute-force reference implementations and random instance generators.
//!
//! The oracles here deliberately share no code with the solvers they check:
//! similarity goes through explicit ancestor sets, edit distance enumerates
//! every injective partial node mapping (and every edge matching per node
//! pair), alignment enumerates every partial matching.

pub mod replies;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use sketchgrade_core::alignment::{AlignmentParams, TIE_EPSILON};
use sketchgrade_core::ged::EditCostModel;
use sketchgrade_core::numeric::fsum;
use sketchgrade_core::item::PromptAssets;
use sketchgrade_core::{
    BloomLevel, FeedbackParams, ItemMeta, ItemSpec, Ontology, PhiMap, ScoringParams, Srg, SrgEdge, SrgNode, SrgRole,
};

/// Ancestors of `c` including itself, nearest first.
pub fn ancestors(o: &Ontology, c: &str) -> Vec<String> {
    let mut out = vec![c.to_string()];
    let mut cur = c.to_string();
    while let Ok(Some(p)) = o.parent(&cur) {
        out.push(p.to_string());
        cur = p.to_string();
    }
    out
}

fn depth_by_walk(o: &Ontology, c: &str) -> usize {
    ancestors(o, c).len() - 1
}

/// Deepest common element of the two ancestor sets.
pub fn brute_lca(o: &Ontology, a: &str, b: &str) -> String {
    let bs: BTreeSet<String> = ancestors(o, b).into_iter().collect();
    ancestors(o, a)
        .into_iter()
        .filter(|x| bs.contains(x))
        .max_by_key(|x| depth_by_walk(o, x))
        .expect("a rooted tree always has a common ancestor")
}

pub fn brute_sim(o: &Ontology, a: &str, b: &str) -> f64 {
    if !o.contains(a) || !o.contains(b) {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    let l = depth_by_walk(o, &brute_lca(o, a, b));
    (2 * l) as f64 / (depth_by_walk(o, a) + depth_by_walk(o, b)) as f64
}

fn node_sub_cost(s: &SrgNode, g: &SrgNode, o: &Ontology, c: &EditCostModel) -> f64 {
    let gap = (g.bloom.ordinal() as i32 - s.bloom.ordinal() as i32).max(0);
    (1.0 - brute_sim(o, &s.concept, &g.concept)) + c.beta * gap as f64 / 5.0
}

/// Every injective partial map from `n` items into `m` slots (`None` means
/// unmapped).
pub fn partial_injections(n: usize, m: usize) -> Vec<Vec<Option<usize>>> {
    fn go(i: usize, n: usize, m: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(i + 1, n, m, used, cur, out);
        cur.pop();
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                cur.push(Some(j));
                go(i + 1, n, m, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, m, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

/// Cheapest per-operation cost list turning student relations `a` into gold
/// relations `b` on one mapped node pair, over every partial matching.
fn best_edge_ops(a: &[&str], b: &[&str], c: &EditCostModel) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for m in partial_injections(a.len(), b.len()) {
        let mut ops = Vec::new();
        let mut hit = vec![false; b.len()];
        for (i, j) in m.iter().enumerate() {
            match j {
                Some(j) => {
                    hit[*j] = true;
                    if a[i] != b[*j] {
                        ops.push(c.relation_mismatch);
                    }
                }
                None => ops.push(c.edge_delete),
            }
        }
        ops.extend(hit.iter().filter(|h| !**h).map(|_| c.edge_insert));
        let total = fsum(ops.iter().copied());
        if best.as_ref().is_none_or(|(t, _)| total < *t) {
            best = Some((total, ops));
        }
    }
    best.map(|(_, ops)| ops).unwrap_or_default()
}

/// Cost of the cheapest edit script induced by one node mapping
/// (`mapping[i]` is the gold index for student `i`).
pub fn mapping_cost(gs: &Srg, go: &Srg, mapping: &[Option<usize>], o: &Ontology, c: &EditCostModel) -> f64 {
    let sn = gs.nodes();
    let gn = go.nodes();
    let mut ops = Vec::new();
    let mut used = vec![false; gn.len()];
    for (i, m) in mapping.iter().enumerate() {
        match m {
            Some(j) => {
                used[*j] = true;
                let s = &sn[i];
                let g = &gn[*j];
                if s.concept != g.concept || s.bloom != g.bloom {
                    ops.push(node_sub_cost(s, g, o, c));
                }
            }
            None => ops.push(c.node_delete),
        }
    }
    ops.extend(used.iter().filter(|u| !**u).map(|_| c.node_insert));

    let rels = |g: &Srg, s: &str, t: &str| -> Vec<String> {
        g.edges().iter().filter(|e| e.source == s && e.target == t).map(|e| e.relation.clone()).collect()
    };
    for u in 0..sn.len() {
        for v in 0..sn.len() {
            if u == v {
                continue;
            }
            let a = rels(gs, &sn[u].id, &sn[v].id);
            match (mapping[u], mapping[v]) {
                (Some(x), Some(y)) => {
                    let b = rels(go, &gn[x].id, &gn[y].id);
                    let a: Vec<&str> = a.iter().map(String::as_str).collect();
                    let b: Vec<&str> = b.iter().map(String::as_str).collect();
                    ops.extend(best_edge_ops(&a, &b, c));
                }
                _ => ops.extend(a.iter().map(|_| c.edge_delete)),
            }
        }
    }
    for e in go.edges() {
        let idx = |id: &str| gn.iter().position(|n| n.id == id).expect("edge endpoint exists");
        if !used[idx(&e.source)] || !used[idx(&e.target)] {
            ops.push(c.edge_insert);
        }
    }
    fsum(ops)
}

/// Exact edit distance by enumerating all injective partial node mappings.
pub fn brute_force_ged(gs: &Srg, go: &Srg, o: &Ontology, c: &EditCostModel) -> f64 {
    partial_injections(gs.node_count(), go.node_count())
        .iter()
        .map(|m| mapping_cost(gs, go, m, o, c))
        .fold(f64::INFINITY, f64::min)
}

fn brute_weight(s: &SrgNode, g: &SrgNode, o: &Ontology, p: &AlignmentParams) -> f64 {
    let same = if s.bloom == g.bloom { 1.0 } else { 0.0 };
    p.alpha * brute_sim(o, &s.concept, &g.concept) + (1.0 - p.alpha) * same
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteAlignment {
    /// Largest total over all admissible matchings.
    pub optimum: f64,
    /// Total of the matching selected by the tie rule.
    pub selected_total: f64,
    /// Selected `(student id, gold id)` pairs, sorted by student id.
    pub selected: Vec<(String, String)>,
}

/// Exhaustive alignment: maximum total weight over matchings of admissible
/// pairs, then among matchings within the tie window the one whose gold
/// choices (students in id order, unmatched last) are lexicographically
/// smallest.
pub fn brute_force_alignment(vs: &[SrgNode], vo: &[SrgNode], o: &Ontology, p: &AlignmentParams) -> BruteAlignment {
    let mut s: Vec<&SrgNode> = vs.iter().collect();
    let mut g: Vec<&SrgNode> = vo.iter().collect();
    s.sort_by(|a, b| a.id.cmp(&b.id));
    g.sort_by(|a, b| a.id.cmp(&b.id));
    let mut scored = Vec::new();
    for m in partial_injections(s.len(), g.len()) {
        let mut ws = Vec::new();
        let mut ok = true;
        for (i, j) in m.iter().enumerate() {
            if let Some(j) = j {
                let w = brute_weight(s[i], g[*j], o, p);
                if !(w >= p.w_min && w > 0.0) {
                    ok = false;
                    break;
                }
                ws.push(w);
            }
        }
        if ok {
            scored.push((fsum(ws), m));
        }
    }
    let optimum = scored.iter().map(|(t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    let key = |m: &Vec<Option<usize>>| m.iter().map(|j| j.unwrap_or(usize::MAX)).collect::<Vec<_>>();
    let (selected_total, chosen) = scored
        .iter()
        .filter(|(t, _)| *t >= optimum - TIE_EPSILON)
        .min_by(|a, b| key(&a.1).cmp(&key(&b.1)))
        .map(|(t, m)| (*t, m.clone()))
        .expect("the empty matching is always admissible");
    let selected = chosen
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (s[i].id.clone(), g[j].id.clone())))
        .collect();
    BruteAlignment { optimum, selected_total, selected }
}

pub const RELATIONS: [&str; 3] = ["causes", "contains", "affects"];

/// Random rooted tree: concept `c{i}` gets a parent among `c0..c{i-1}`.
pub fn random_ontology<R: Rng>(rng: &mut R, concepts: usize) -> Ontology {
    let concepts = concepts.max(1);
    let mut entries: Vec<(String, Option<String>)> = vec![("c0".into(), None)];
    for i in 1..concepts {
        let p = rng.random_range(0..i);
        entries.push((format!("c{i}"), Some(format!("c{p}"))));
    }
    Ontology::new("c0", entries, RELATIONS).expect("generated trees are valid")
}

pub fn random_bloom<R: Rng>(rng: &mut R) -> BloomLevel {
    BloomLevel::from_ordinal(rng.random_range(1..=6)).expect("ordinal in range")
}

/// Random graph with up to `max_nodes` nodes (concepts drawn from `o`, so
/// repeats are possible) and up to `max_edges` distinct edges. Node ids are
/// shuffled so that id order and insertion order differ.
pub fn random_srg<R: Rng>(rng: &mut R, o: &Ontology, role: SrgRole, max_nodes: usize, max_edges: usize) -> Srg {
    let n = rng.random_range(0..=max_nodes);
    random_srg_exact(rng, o, role, n, max_edges)
}

pub fn random_srg_exact<R: Rng>(rng: &mut R, o: &Ontology, role: SrgRole, n: usize, max_edges: usize) -> Srg {
    let concepts: Vec<&str> = o.concepts().collect();
    let mut ids: Vec<String> = (0..n).map(|i| format!("{}{i}", if role == SrgRole::Gold { "g" } else { "s" })).collect();
    ids.shuffle(rng);
    let nodes: Vec<SrgNode> = ids
        .iter()
        .map(|id| SrgNode::new(id.clone(), concepts[rng.random_range(0..concepts.len())], random_bloom(rng)))
        .collect();
    let mut g = Srg::new("rand", role, nodes, Vec::new()).expect("distinct ids");
    if n >= 2 {
        let target = rng.random_range(0..=max_edges);
        let mut tries = 0;
        while g.edge_count() < target && tries < 50 {
            tries += 1;
            let s = &ids[rng.random_range(0..n)];
            let t = &ids[rng.random_range(0..n)];
            let r = RELATIONS[rng.random_range(0..RELATIONS.len())];
            if s != t && !g.has_edge(s, t, r) {
                g.add_edge(SrgEdge::new(s.clone(), t.clone(), r)).expect("checked");
            }
        }
    }
    g
}

/// Random gold graph whose nodes carry distinct concepts, as rubric graphs do.
pub fn random_gold<R: Rng>(rng: &mut R, o: &Ontology, n: usize, max_edges: usize) -> Srg {
    let mut concepts: Vec<&str> = o.concepts().collect();
    concepts.shuffle(rng);
    let n = n.min(concepts.len());
    let nodes: Vec<SrgNode> =
        (0..n).map(|i| SrgNode::new(format!("g{i}"), concepts[i], random_bloom(rng))).collect();
    let mut g = Srg::new("rand", SrgRole::Gold, nodes, Vec::new()).expect("distinct ids");
    if n >= 2 {
        let target = rng.random_range(0..=max_edges);
        let mut tries = 0;
        while g.edge_count() < target && tries < 50 {
            tries += 1;
            let s = format!("g{}", rng.random_range(0..n));
            let t = format!("g{}", rng.random_range(0..n));
            let r = RELATIONS[rng.random_range(0..RELATIONS.len())];
            if s != t && !g.has_edge(&s, &t, r) {
                g.add_edge(SrgEdge::new(s, t, r)).expect("checked");
            }
        }
    }
    g
}

/// Student copy of `gold` with at least one node removed (when possible),
/// some further nodes and edges dropped, and some Bloom levels lowered.
pub fn degrade<R: Rng>(rng: &mut R, gold: &Srg) -> Srg {
    let mut s = gold.clone().with_role(SrgRole::Student);
    let ids: Vec<String> = s.nodes().iter().map(|n| n.id.clone()).collect();
    if ids.is_empty() {
        return s;
    }
    let first = ids[rng.random_range(0..ids.len())].clone();
    s.remove_node(&first);
    for id in &ids {
        if *id != first && rng.random_bool(0.25) {
            s.remove_node(id);
        }
    }
    let edges: Vec<SrgEdge> = s.edges().to_vec();
    for e in edges {
        if rng.random_bool(0.25) {
            s.remove_edge(&e.source, &e.target, &e.relation);
        }
    }
    let kept: Vec<(String, BloomLevel)> = s.nodes().iter().map(|n| (n.id.clone(), n.bloom)).collect();
    for (id, b) in kept {
        if b.ordinal() > 1 && rng.random_bool(0.3) {
            let lower = rng.random_range(1..b.ordinal());
            s.set_bloom(&id, BloomLevel::from_ordinal(lower).expect("ordinal in range"));
        }
    }
    s
}

/// Item around a nonempty gold graph with placeholder hint templates and
/// default parameters.
pub fn item_for(gold: &Srg, o: &Ontology) -> ItemSpec {
    let meta = ItemMeta {
        item_id: gold.item_id().to_string(),
        prompt: PromptAssets::default(),
        rubric_text: String::new(),
        highest_bloom: gold.max_bloom().expect("gold graph is nonempty"),
        scoring: ScoringParams::default(),
        feedback: FeedbackParams::default(),
    };
    ItemSpec::new(meta, gold.clone(), o.clone(), PhiMap::generic(gold)).expect("generated items are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injection_count() {
        // sum_k C(3,k) · 3!/(3−k)! = 1 + 9 + 18 + 6
        assert_eq!(partial_injections(3, 3).len(), 34);
        assert_eq!(partial_injections(0, 4).len(), 1);
    }
}
