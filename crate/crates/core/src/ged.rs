//! Bloom-aware graph edit distance between a student graph and a gold graph.
//!
//! Both solvers search over node mappings built one student node at a time
//! (students in id order; each is substituted by an unused gold node or
//! deleted). Edge costs are fully determined by the node mapping, and gold
//! nodes left unused at the end are inserted along with their edges.
//!
//! * [`ged_exact`] is A* with an admissible bound made of a linear assignment
//!   over the remaining node costs plus an edge-count bound.
//! * [`ged_beam`] keeps the best `width` partial mappings per level.
//!
//! Reported costs are the correctly rounded sum of the per-operation costs
//! in the returned script. The exact solver explores every mapping whose
//! cost is within [`TIE_EPSILON`] of the optimum and returns the smallest
//! such sum, breaking remaining ties by mapping order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::alignment::TIE_EPSILON;
use crate::error::{GedError, ParamError, SrgError};
use crate::numeric::{fsum, min_cost_assignment};
use crate::ontology::Ontology;
use crate::srg::{BloomLevel, Srg, SrgEdge, SrgNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EditCostModel {
    pub node_insert: f64,
    pub node_delete: f64,
    pub edge_insert: f64,
    pub edge_delete: f64,
    /// Weight of the penalty for a student node sitting below its gold Bloom
    /// level.
    pub beta: f64,
    pub relation_mismatch: f64,
}

impl Default for EditCostModel {
    fn default() -> Self {
        EditCostModel {
            node_insert: 1.0,
            node_delete: 1.0,
            edge_insert: 1.0,
            edge_delete: 1.0,
            beta: 0.5,
            relation_mismatch: 1.0,
        }
    }
}

impl EditCostModel {
    pub fn validate(&self) -> Result<(), ParamError> {
        let fields = [
            ("node_insert", self.node_insert),
            ("node_delete", self.node_delete),
            ("edge_insert", self.edge_insert),
            ("edge_delete", self.edge_delete),
            ("beta", self.beta),
            ("relation_mismatch", self.relation_mismatch),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ParamError::Invalid(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// `(1 − sim(concepts)) + beta · max(0, gold − student ordinal) / 5`.
    /// Only regressions are penalized, so the cost is directional.
    pub fn node_substitution(&self, vs: &SrgNode, vo: &SrgNode, o: &Ontology) -> f64 {
        let sim = o.similarity_or_zero(&vs.concept, &vo.concept);
        let gap = i32::from(vo.bloom.ordinal()) - i32::from(vs.bloom.ordinal());
        (1.0 - sim) + self.beta * f64::from(gap.max(0)) / 5.0
    }

    pub fn edge_substitution(&self, student_relation: &str, gold_relation: &str) -> f64 {
        if student_relation == gold_relation {
            0.0
        } else {
            self.relation_mismatch
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub source: String,
    pub target: String,
    pub relation: String,
}

impl EdgeKey {
    pub fn of(edge: &SrgEdge) -> EdgeKey {
        EdgeKey {
            source: edge.source.clone(),
            target: edge.target.clone(),
            relation: edge.relation.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    SubstituteNode { student: String, gold: String, concept: String, bloom: BloomLevel, cost: f64 },
    DeleteNode { student: String, cost: f64 },
    InsertNode { gold: String, concept: String, bloom: BloomLevel, cost: f64 },
    SubstituteEdge { student: EdgeKey, gold: EdgeKey, cost: f64 },
    DeleteEdge { student: EdgeKey, cost: f64 },
    InsertEdge { gold: EdgeKey, cost: f64 },
}

impl EditOp {
    pub fn cost(&self) -> f64 {
        match self {
            EditOp::SubstituteNode { cost, .. }
            | EditOp::DeleteNode { cost, .. }
            | EditOp::InsertNode { cost, .. }
            | EditOp::SubstituteEdge { cost, .. }
            | EditOp::DeleteEdge { cost, .. }
            | EditOp::InsertEdge { cost, .. } => *cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMatch {
    pub student: String,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GedResult {
    pub cost: f64,
    /// Edit operations, omitting substitutions that change nothing.
    pub script: Vec<EditOp>,
    /// Every student node kept in the mapping, including unchanged ones.
    pub mapping: Vec<NodeMatch>,
    pub exact: bool,
}

impl GedResult {
    /// Replays the script on `gs`. Surviving nodes take the id of their gold
    /// counterpart, so a sound script yields a graph whose labeled node and
    /// edge sets equal the gold graph's.
    pub fn replay(&self, gs: &Srg) -> Result<Srg, SrgError> {
        let gold_of: HashMap<&str, &str> =
            self.mapping.iter().map(|m| (m.student.as_str(), m.gold.as_str())).collect();
        let mut relabel: HashMap<&str, (&str, BloomLevel)> = HashMap::new();
        let mut deleted_edges: Vec<&EdgeKey> = Vec::new();
        let mut substituted_edges: HashMap<&EdgeKey, &EdgeKey> = HashMap::new();
        let mut nodes_out = Vec::new();
        let mut inserted_edges = Vec::new();
        for op in &self.script {
            match op {
                EditOp::SubstituteNode { student, concept, bloom, .. } => {
                    relabel.insert(student.as_str(), (concept.as_str(), *bloom));
                }
                EditOp::DeleteNode { .. } => {}
                EditOp::InsertNode { gold, concept, bloom, .. } => {
                    nodes_out.push(SrgNode::new(gold.clone(), concept.clone(), *bloom));
                }
                EditOp::SubstituteEdge { student, gold, .. } => {
                    substituted_edges.insert(student, gold);
                }
                EditOp::DeleteEdge { student, .. } => deleted_edges.push(student),
                EditOp::InsertEdge { gold, .. } => inserted_edges.push(gold.clone()),
            }
        }
        let mut kept = Vec::new();
        for node in gs.nodes() {
            let Some(gold) = gold_of.get(node.id.as_str()) else { continue };
            let (concept, bloom) =
                relabel.get(node.id.as_str()).copied().unwrap_or((node.concept.as_str(), node.bloom));
            kept.push(SrgNode::new(*gold, concept, bloom));
        }
        kept.extend(nodes_out);

        let mut edges = Vec::new();
        for edge in gs.edges() {
            let key = EdgeKey::of(edge);
            if deleted_edges.contains(&&key) {
                continue;
            }
            if let Some(target) = substituted_edges.get(&key) {
                edges.push(SrgEdge::new(&target.source, &target.target, &target.relation));
                continue;
            }
            let (Some(s), Some(t)) =
                (gold_of.get(edge.source.as_str()), gold_of.get(edge.target.as_str()))
            else {
                return Err(SrgError::Integrity(format!(
                    "edge {key:?} survives but an endpoint was deleted"
                )));
            };
            edges.push(SrgEdge::new(*s, *t, &edge.relation));
        }
        edges.extend(inserted_edges.into_iter().map(|k| SrgEdge::new(k.source, k.target, k.relation)));
        Srg::new(gs.item_id(), gs.role(), kept, edges)
    }
}

/// `|Vs| + |Vo| + |Es| + |Eo|`, or 1 when both graphs are empty.
pub fn normalizer_z(gs: &Srg, go: &Srg) -> usize {
    let z = gs.node_count() + go.node_count() + gs.edge_count() + go.edge_count();
    z.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GedSolver {
    /// Largest `|Vs| + |Vo|` handled by the exact solver.
    pub exact_limit: usize,
    pub beam_width: usize,
    /// Use beam search above `exact_limit` instead of failing.
    pub beam_fallback: bool,
}

impl Default for GedSolver {
    fn default() -> Self {
        GedSolver { exact_limit: 12, beam_width: 32, beam_fallback: true }
    }
}

impl GedSolver {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.beam_width == 0 {
            return Err(ParamError::Invalid("beam_width must be at least 1".into()));
        }
        Ok(())
    }

    pub fn solve(
        &self,
        gs: &Srg,
        go: &Srg,
        costs: &EditCostModel,
        o: &Ontology,
    ) -> Result<GedResult, GedError> {
        if gs.node_count() + go.node_count() <= self.exact_limit {
            ged_exact_with_limit(gs, go, costs, o, self.exact_limit)
        } else if self.beam_fallback {
            Ok(ged_beam(gs, go, costs, o, self.beam_width))
        } else {
            Err(GedError::SizeLimitExceeded {
                nodes: gs.node_count() + go.node_count(),
                limit: self.exact_limit,
            })
        }
    }
}

pub fn ged_exact(gs: &Srg, go: &Srg, costs: &EditCostModel, o: &Ontology) -> Result<GedResult, GedError> {
    ged_exact_with_limit(gs, go, costs, o, GedSolver::default().exact_limit)
}

pub fn ged_exact_with_limit(
    gs: &Srg,
    go: &Srg,
    costs: &EditCostModel,
    o: &Ontology,
    exact_limit: usize,
) -> Result<GedResult, GedError> {
    let nodes = gs.node_count() + go.node_count();
    if nodes > exact_limit {
        return Err(GedError::SizeLimitExceeded { nodes, limit: exact_limit });
    }
    let problem = Problem::new(gs, go, costs, o);
    Ok(problem.astar())
}

/// Beam search over partial mappings. Runs widths 1, 2, 4, … below `width`
/// and then `width` itself, keeping the cheapest result, so the cost never
/// increases along the doubling ladder. Always an upper bound on the exact
/// optimum.
pub fn ged_beam(gs: &Srg, go: &Srg, costs: &EditCostModel, o: &Ontology, beam_width: usize) -> GedResult {
    let beam_width = beam_width.max(1);
    let problem = Problem::new(gs, go, costs, o);
    let mut widths = Vec::new();
    let mut w = 1;
    while w < beam_width {
        widths.push(w);
        w *= 2;
    }
    widths.push(beam_width);
    let best = widths
        .into_iter()
        .map(|w| problem.beam(w))
        .min_by(|a, b| a.cmp_key(b))
        .expect("at least one width");
    problem.finish(best, false)
}

const UNASSIGNED: u32 = u32::MAX;

struct Problem<'a> {
    students: Vec<&'a SrgNode>,
    golds: Vec<&'a SrgNode>,
    costs: EditCostModel,
    sub: Vec<f64>,
    relations: Vec<String>,
    s_adj: Vec<Vec<u32>>,
    g_adj: Vec<Vec<u32>>,
    s_edges: usize,
    g_edges: usize,
    /// Student edges with both endpoints among the first k students.
    s_within_prefix: Vec<usize>,
}

#[derive(Clone)]
struct State {
    assign: Vec<u32>,
    used: Vec<bool>,
    g: f64,
    g_within: usize,
}

/// A complete mapping with its exact cost.
struct Candidate {
    cost: f64,
    assign: Vec<u32>,
    ops: Vec<EditOp>,
}

impl Candidate {
    fn cmp_key(&self, other: &Candidate) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.assign.cmp(&other.assign))
    }
}

struct HeapEntry {
    f: f64,
    depth: usize,
    seq: u64,
    state: State,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // BinaryHeap is a max-heap: smallest f first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<'a> Problem<'a> {
    fn new(gs: &'a Srg, go: &'a Srg, costs: &EditCostModel, o: &Ontology) -> Problem<'a> {
        let mut students: Vec<&SrgNode> = gs.nodes().iter().collect();
        let mut golds: Vec<&SrgNode> = go.nodes().iter().collect();
        students.sort_by(|a, b| a.id.cmp(&b.id));
        golds.sort_by(|a, b| a.id.cmp(&b.id));
        let (ns, no) = (students.len(), golds.len());

        let mut sub = Vec::with_capacity(ns * no);
        for s in &students {
            for g in &golds {
                sub.push(costs.node_substitution(s, g, o));
            }
        }

        let mut rel_set: BTreeMap<&str, u32> = BTreeMap::new();
        for e in gs.edges().iter().chain(go.edges()) {
            rel_set.insert(&e.relation, 0);
        }
        let relations: Vec<String> = rel_set.keys().map(|r| r.to_string()).collect();
        for (i, v) in rel_set.values_mut().enumerate() {
            *v = i as u32;
        }

        let s_pos: HashMap<&str, usize> =
            students.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let g_pos: HashMap<&str, usize> =
            golds.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut s_adj = vec![Vec::new(); ns * ns];
        for e in gs.edges() {
            s_adj[s_pos[e.source.as_str()] * ns + s_pos[e.target.as_str()]].push(rel_set[e.relation.as_str()]);
        }
        let mut g_adj = vec![Vec::new(); no * no];
        for e in go.edges() {
            g_adj[g_pos[e.source.as_str()] * no + g_pos[e.target.as_str()]].push(rel_set[e.relation.as_str()]);
        }
        for list in s_adj.iter_mut().chain(g_adj.iter_mut()) {
            list.sort_unstable();
        }

        let mut s_within_prefix = vec![0; ns + 1];
        for k in 1..=ns {
            let u = k - 1;
            let added: usize = (0..u).map(|w| s_adj[u * ns + w].len() + s_adj[w * ns + u].len()).sum();
            s_within_prefix[k] = s_within_prefix[k - 1] + added;
        }

        Problem {
            students,
            golds,
            costs: *costs,
            sub,
            relations,
            s_adj,
            g_adj,
            s_edges: gs.edge_count(),
            g_edges: go.edge_count(),
            s_within_prefix,
        }
    }

    fn ns(&self) -> usize {
        self.students.len()
    }

    fn no(&self) -> usize {
        self.golds.len()
    }

    fn s_rel(&self, u: usize, v: usize) -> &[u32] {
        &self.s_adj[u * self.ns() + v]
    }

    fn g_rel(&self, a: usize, b: usize) -> &[u32] {
        &self.g_adj[a * self.no() + b]
    }

    /// Cheapest way to turn the student relations on one ordered node pair
    /// into the gold relations on the mapped pair.
    fn pair_cost(&self, student: &[u32], gold: &[u32]) -> f64 {
        let common = count_common(student, gold);
        let a = student.len() - common;
        let b = gold.len() - common;
        let k = a.min(b);
        let c = &self.costs;
        let swap = c.relation_mismatch.min(c.edge_delete + c.edge_insert);
        k as f64 * swap + (a - k) as f64 * c.edge_delete + (b - k) as f64 * c.edge_insert
    }

    fn root(&self) -> State {
        State { assign: Vec::new(), used: vec![false; self.no()], g: 0.0, g_within: 0 }
    }

    fn children(&self, state: &State) -> Vec<State> {
        let k = state.assign.len();
        let ns = self.ns();
        let mut out = Vec::with_capacity(self.no() + 1);
        for j in 0..self.no() {
            if state.used[j] {
                continue;
            }
            let mut g = state.g + self.sub[k * self.no() + j];
            let mut g_within = state.g_within;
            for (w, &jw) in state.assign.iter().enumerate() {
                if jw == UNASSIGNED {
                    g += (self.s_rel(k, w).len() + self.s_rel(w, k).len()) as f64 * self.costs.edge_delete;
                } else {
                    let jw = jw as usize;
                    g += self.pair_cost(self.s_rel(k, w), self.g_rel(j, jw));
                    g += self.pair_cost(self.s_rel(w, k), self.g_rel(jw, j));
                }
            }
            for (jj, used) in state.used.iter().enumerate() {
                if *used {
                    g_within += self.g_rel(j, jj).len() + self.g_rel(jj, j).len();
                }
            }
            let mut assign = state.assign.clone();
            assign.push(j as u32);
            let mut used = state.used.clone();
            used[j] = true;
            out.push(State { assign, used, g, g_within });
        }
        let mut g = state.g + self.costs.node_delete;
        for w in 0..k {
            g += (self.s_rel(k, w).len() + self.s_rel(w, k).len()) as f64 * self.costs.edge_delete;
        }
        debug_assert!(k < ns);
        let mut assign = state.assign.clone();
        assign.push(UNASSIGNED);
        out.push(State { assign, used: state.used.clone(), g, g_within: state.g_within });
        out
    }

    /// Adds insertion costs for unused gold nodes and their edges.
    fn complete(&self, state: &State) -> State {
        let unused = state.used.iter().filter(|u| !**u).count();
        let remaining_gold_edges = self.g_edges - state.g_within;
        let g = state.g
            + unused as f64 * self.costs.node_insert
            + remaining_gold_edges as f64 * self.costs.edge_insert;
        State { g, ..state.clone() }
    }

    fn heuristic(&self, state: &State) -> f64 {
        let k = state.assign.len();
        let rows: Vec<usize> = (k..self.ns()).collect();
        let cols: Vec<usize> = (0..self.no()).filter(|&j| !state.used[j]).collect();
        let c = &self.costs;
        let mut node_bound = rows.len() as f64 * c.node_delete + cols.len() as f64 * c.node_insert;
        if !rows.is_empty() && !cols.is_empty() {
            // Pairing i with j saves (delete + insert − substitute) when positive.
            let mut m = Vec::with_capacity(rows.len() * cols.len());
            for &i in &rows {
                for &j in &cols {
                    let delta = self.sub[i * self.no() + j] - c.node_delete - c.node_insert;
                    m.push(delta.min(0.0));
                }
            }
            node_bound += min_cost_assignment(&m, rows.len(), cols.len()).1;
        }
        let s_rem = self.s_edges - self.s_within_prefix[k];
        let g_rem = self.g_edges - state.g_within;
        let edge_bound = s_rem.saturating_sub(g_rem) as f64 * c.edge_delete
            + g_rem.saturating_sub(s_rem) as f64 * c.edge_insert;
        (node_bound + edge_bound).max(0.0)
    }

    fn astar(&self) -> GedResult {
        let ns = self.ns();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let root = self.root();
        if ns == 0 {
            let done = self.complete(&root);
            heap.push(HeapEntry { f: done.g, depth: 0, seq, state: done });
        } else {
            let h = self.heuristic(&root);
            heap.push(HeapEntry { f: root.g + h, depth: 0, seq, state: root });
        }
        let mut best: Option<Candidate> = None;
        while let Some(entry) = heap.pop() {
            if let Some(b) = &best {
                if entry.f > b.cost + TIE_EPSILON {
                    break;
                }
            }
            let depth = entry.state.assign.len();
            if depth == ns {
                // Completed mappings are pushed with insertions already added.
                let cand = self.evaluate(&entry.state.assign);
                if best.as_ref().is_none_or(|b| cand.cmp_key(b) == Ordering::Less) {
                    best = Some(cand);
                }
                continue;
            }
            for child in self.children(&entry.state) {
                seq += 1;
                let (f, state) = if child.assign.len() == ns {
                    let done = self.complete(&child);
                    (done.g, done)
                } else {
                    (child.g + self.heuristic(&child), child)
                };
                if best.as_ref().is_some_and(|b| f > b.cost + TIE_EPSILON) {
                    continue;
                }
                heap.push(HeapEntry { f, depth: state.assign.len(), seq, state });
            }
        }
        self.finish(best.expect("the search space always contains a complete mapping"), true)
    }

    fn beam(&self, width: usize) -> Candidate {
        let mut level = vec![self.root()];
        for _ in 0..self.ns() {
            let mut scored: Vec<(f64, State)> = level
                .iter()
                .flat_map(|s| self.children(s))
                .map(|c| (c.g + self.heuristic(&c), c))
                .collect();
            // Stable: equal scores keep generation order.
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            scored.truncate(width);
            level = scored.into_iter().map(|(_, s)| s).collect();
        }
        level
            .iter()
            .map(|s| self.evaluate(&s.assign))
            .min_by(|a, b| a.cmp_key(b))
            .expect("beam is never empty")
    }

    fn finish(&self, cand: Candidate, exact: bool) -> GedResult {
        let mapping = cand
            .assign
            .iter()
            .enumerate()
            .filter(|(_, j)| **j != UNASSIGNED)
            .map(|(i, &j)| NodeMatch {
                student: self.students[i].id.clone(),
                gold: self.golds[j as usize].id.clone(),
            })
            .collect();
        GedResult { cost: cand.cost, script: cand.ops, mapping, exact }
    }

    fn edge_key_s(&self, u: usize, v: usize, rel: u32) -> EdgeKey {
        EdgeKey {
            source: self.students[u].id.clone(),
            target: self.students[v].id.clone(),
            relation: self.relations[rel as usize].clone(),
        }
    }

    fn edge_key_g(&self, a: usize, b: usize, rel: u32) -> EdgeKey {
        EdgeKey {
            source: self.golds[a].id.clone(),
            target: self.golds[b].id.clone(),
            relation: self.relations[rel as usize].clone(),
        }
    }

    /// Materializes the edit script for a complete mapping.
    fn evaluate(&self, assign: &[u32]) -> Candidate {
        let (ns, no) = (self.ns(), self.no());
        let c = &self.costs;
        let mut ops = Vec::new();
        let mut used = vec![false; no];
        for (i, &j) in assign.iter().enumerate() {
            let s = self.students[i];
            if j == UNASSIGNED {
                ops.push(EditOp::DeleteNode { student: s.id.clone(), cost: c.node_delete });
                continue;
            }
            let j = j as usize;
            used[j] = true;
            let g = self.golds[j];
            if s.concept != g.concept || s.bloom != g.bloom {
                ops.push(EditOp::SubstituteNode {
                    student: s.id.clone(),
                    gold: g.id.clone(),
                    concept: g.concept.clone(),
                    bloom: g.bloom,
                    cost: self.sub[i * no + j],
                });
            }
        }
        for (j, g) in self.golds.iter().enumerate() {
            if !used[j] {
                ops.push(EditOp::InsertNode {
                    gold: g.id.clone(),
                    concept: g.concept.clone(),
                    bloom: g.bloom,
                    cost: c.node_insert,
                });
            }
        }

        for u in 0..ns {
            for v in 0..ns {
                if u == v {
                    continue;
                }
                let student = self.s_rel(u, v);
                let (ju, jv) = (assign[u], assign[v]);
                if ju == UNASSIGNED || jv == UNASSIGNED {
                    for &r in student {
                        ops.push(EditOp::DeleteEdge { student: self.edge_key_s(u, v, r), cost: c.edge_delete });
                    }
                    continue;
                }
                let (ju, jv) = (ju as usize, jv as usize);
                let gold = self.g_rel(ju, jv);
                let s_rest: Vec<u32> = student.iter().copied().filter(|r| !gold.contains(r)).collect();
                let g_rest: Vec<u32> = gold.iter().copied().filter(|r| !student.contains(r)).collect();
                let paired = if c.relation_mismatch <= c.edge_delete + c.edge_insert {
                    s_rest.len().min(g_rest.len())
                } else {
                    0
                };
                for (&rs, &rg) in s_rest.iter().zip(&g_rest).take(paired) {
                    ops.push(EditOp::SubstituteEdge {
                        student: self.edge_key_s(u, v, rs),
                        gold: self.edge_key_g(ju, jv, rg),
                        cost: c.relation_mismatch,
                    });
                }
                for &rs in &s_rest[paired..] {
                    ops.push(EditOp::DeleteEdge { student: self.edge_key_s(u, v, rs), cost: c.edge_delete });
                }
                for &rg in &g_rest[paired..] {
                    ops.push(EditOp::InsertEdge { gold: self.edge_key_g(ju, jv, rg), cost: c.edge_insert });
                }
            }
        }
        for a in 0..no {
            for b in 0..no {
                if a == b || (used[a] && used[b]) {
                    continue;
                }
                for &r in self.g_rel(a, b) {
                    ops.push(EditOp::InsertEdge { gold: self.edge_key_g(a, b, r), cost: c.edge_insert });
                }
            }
        }

        let cost = fsum(ops.iter().map(EditOp::cost));
        Candidate { cost, assign: assign.to_vec(), ops }
    }
}

fn count_common(a: &[u32], b: &[u32]) -> usize {
    // both sorted and duplicate-free
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
