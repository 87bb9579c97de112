//! Deficiency diagnosis, hint selection through the reverse mapping,
//! feedback reports, overlay rendering and the revision loop.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::Alignment;
use crate::error::FeedbackError;
use crate::item::{Anchor, FeedbackParams, ItemSpec, OverlayPrimitive, PhiKey, PhiMap};
use crate::ontology::Ontology;
use crate::scoring::{similarity, Band, SimilarityBreakdown};
use crate::srg::{BloomLevel, Region, Srg, SrgEdge, SrgNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeficiencyKind {
    MissingNode,
    MissingEdge,
    BloomRegression,
    ExtraneousNode,
    ExtraneousEdge,
    ConceptMismatch,
}

impl DeficiencyKind {
    pub fn name(self) -> &'static str {
        match self {
            DeficiencyKind::MissingNode => "missing_node",
            DeficiencyKind::MissingEdge => "missing_edge",
            DeficiencyKind::BloomRegression => "bloom_regression",
            DeficiencyKind::ExtraneousNode => "extraneous_node",
            DeficiencyKind::ExtraneousEdge => "extraneous_edge",
            DeficiencyKind::ConceptMismatch => "concept_mismatch",
        }
    }

    /// Order among repair hints at the same Bloom level.
    fn repair_rank(self) -> Option<u8> {
        match self {
            DeficiencyKind::BloomRegression => Some(0),
            DeficiencyKind::MissingNode => Some(1),
            DeficiencyKind::MissingEdge => Some(2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Conceptual,
    Perceptual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ElementRef {
    Node { id: String, concept: String, bloom: BloomLevel },
    Edge { source: String, target: String, relation: String, source_concept: String, target_concept: String },
}

impl ElementRef {
    fn node(n: &SrgNode) -> ElementRef {
        ElementRef::Node { id: n.id.clone(), concept: n.concept.clone(), bloom: n.bloom }
    }

    fn edge(e: &SrgEdge, g: &Srg) -> ElementRef {
        let concept = |id: &str| g.node(id).map(|n| n.concept.clone()).unwrap_or_default();
        ElementRef::Edge {
            source: e.source.clone(),
            target: e.target.clone(),
            relation: e.relation.clone(),
            source_concept: concept(&e.source),
            target_concept: concept(&e.target),
        }
    }

    pub fn phi_key(&self) -> PhiKey {
        match self {
            ElementRef::Node { concept, .. } => PhiKey::Node(concept.clone()),
            ElementRef::Edge { relation, source_concept, target_concept, .. } => {
                PhiKey::Edge(source_concept.clone(), relation.clone(), target_concept.clone())
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            ElementRef::Node { concept, bloom, .. } => format!("{concept} ({bloom})"),
            ElementRef::Edge { relation, source_concept, target_concept, .. } => {
                format!("{source_concept} {relation} {target_concept}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deficiency {
    pub kind: DeficiencyKind,
    pub gold_ref: Option<ElementRef>,
    pub student_ref: Option<ElementRef>,
    pub expected_bloom: Option<BloomLevel>,
    pub cause: Cause,
}

impl Deficiency {
    pub fn describe(&self) -> String {
        let gold = self.gold_ref.as_ref().map(ElementRef::describe).unwrap_or_default();
        let student = self.student_ref.as_ref().map(ElementRef::describe).unwrap_or_default();
        match self.kind {
            DeficiencyKind::MissingNode => format!("missing concept {gold}"),
            DeficiencyKind::MissingEdge => format!("missing relation {gold}"),
            DeficiencyKind::BloomRegression => format!("{student} is expected at {gold}"),
            DeficiencyKind::ExtraneousNode => format!("unexpected concept {student}"),
            DeficiencyKind::ExtraneousEdge => format!("unexpected relation {student}"),
            DeficiencyKind::ConceptMismatch => format!("{student} looks like {gold} ({:?})", self.cause),
        }
    }
}

/// Perceptual when the student node came with textual evidence (the idea
/// was expressed but read as a neighbouring concept), conceptual otherwise.
pub fn classify_cause(sim: f64, evidence_text: &str, mismatch_sim: f64) -> Cause {
    if sim >= mismatch_sim && !evidence_text.trim().is_empty() {
        Cause::Perceptual
    } else {
        Cause::Conceptual
    }
}

pub fn deficiencies(gs: &Srg, go: &Srg, a: &Alignment, o: &Ontology) -> Vec<Deficiency> {
    deficiencies_with(gs, go, a, o, FeedbackParams::default().mismatch_sim)
}

/// Diagnoses gold elements the student lacks and student elements the gold
/// graph does not account for. Gold-side entries follow gold document order,
/// student-side entries student document order.
pub fn deficiencies_with(gs: &Srg, go: &Srg, a: &Alignment, o: &Ontology, mismatch_sim: f64) -> Vec<Deficiency> {
    let mut out = Vec::new();
    let student_of = |gold: &str| a.student_for(gold).map(|p| p.student.as_str());
    let gold_of = |student: &str| a.gold_for(student).map(|p| p.gold.as_str());

    for g in go.nodes() {
        if student_of(&g.id).is_none() {
            out.push(Deficiency {
                kind: DeficiencyKind::MissingNode,
                gold_ref: Some(ElementRef::node(g)),
                student_ref: None,
                expected_bloom: Some(g.bloom),
                cause: Cause::Conceptual,
            });
        }
    }

    for e in go.edges() {
        let ends = student_of(&e.source).zip(student_of(&e.target));
        if let Some((s, t)) = ends {
            if gs.has_edge(s, t, &e.relation) {
                continue;
            }
        }
        let expected = match (go.node(&e.source), go.node(&e.target)) {
            (Some(u), Some(v)) => Some(u.bloom.max(v.bloom)),
            _ => None,
        };
        let student_ref = ends.map(|(s, t)| ElementRef::Edge {
            source: s.to_string(),
            target: t.to_string(),
            relation: e.relation.clone(),
            source_concept: gs.node(s).map(|n| n.concept.clone()).unwrap_or_default(),
            target_concept: gs.node(t).map(|n| n.concept.clone()).unwrap_or_default(),
        });
        out.push(Deficiency {
            kind: DeficiencyKind::MissingEdge,
            gold_ref: Some(ElementRef::edge(e, go)),
            student_ref,
            expected_bloom: expected,
            cause: Cause::Conceptual,
        });
    }

    for s in gs.nodes() {
        let Some(g) = gold_of(&s.id).and_then(|id| go.node(id)) else { continue };
        if s.bloom < g.bloom {
            out.push(Deficiency {
                kind: DeficiencyKind::BloomRegression,
                gold_ref: Some(ElementRef::node(g)),
                student_ref: Some(ElementRef::node(s)),
                expected_bloom: Some(g.bloom),
                cause: Cause::Conceptual,
            });
        }
    }

    for s in gs.nodes() {
        let Some(g) = gold_of(&s.id).and_then(|id| go.node(id)) else { continue };
        if s.concept == g.concept {
            continue;
        }
        let sim = o.similarity_or_zero(&s.concept, &g.concept);
        if sim >= mismatch_sim {
            out.push(Deficiency {
                kind: DeficiencyKind::ConceptMismatch,
                gold_ref: Some(ElementRef::node(g)),
                student_ref: Some(ElementRef::node(s)),
                expected_bloom: Some(g.bloom),
                cause: classify_cause(sim, &s.evidence.text, mismatch_sim),
            });
        }
    }

    for s in gs.nodes() {
        if gold_of(&s.id).is_none() {
            out.push(Deficiency {
                kind: DeficiencyKind::ExtraneousNode,
                gold_ref: None,
                student_ref: Some(ElementRef::node(s)),
                expected_bloom: None,
                cause: Cause::Conceptual,
            });
        }
    }

    for e in gs.edges() {
        let ends = gold_of(&e.source).zip(gold_of(&e.target));
        if let Some((s, t)) = ends {
            if go.has_edge(s, t, &e.relation) {
                continue;
            }
        }
        out.push(Deficiency {
            kind: DeficiencyKind::ExtraneousEdge,
            gold_ref: None,
            student_ref: Some(ElementRef::edge(e, gs)),
            expected_bloom: None,
            cause: Cause::Conceptual,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualHint {
    pub id: String,
    pub deficiency: Deficiency,
    pub text: String,
    pub overlay_ops: Vec<OverlayPrimitive>,
    pub bloom_target: BloomLevel,
}

impl VisualHint {
    pub fn is_caution(&self) -> bool {
        self.deficiency.kind.repair_rank().is_none()
    }
}

/// Repair hints for missing and regressed elements, lowest Bloom target
/// first (then regression, missing node, missing edge, then template key),
/// truncated to `limit`. Text-only cautions for extraneous elements follow
/// and do not count toward the limit.
pub fn hints(defs: &[Deficiency], phi: &PhiMap, limit: usize) -> Result<Vec<VisualHint>, FeedbackError> {
    let mut repairs = repair_hints(defs, phi)?;
    repairs.truncate(limit);
    repairs.extend(cautions(defs));
    Ok(repairs)
}

/// Like [`hints`], but a student graph whose nodes all sit at Remember gets
/// every repair hint at the lowest outstanding Bloom level, regardless of
/// the limit.
pub fn hints_for(gs: &Srg, defs: &[Deficiency], phi: &PhiMap, limit: usize) -> Result<Vec<VisualHint>, FeedbackError> {
    if !is_guided(gs) {
        return hints(defs, phi, limit);
    }
    let mut repairs = repair_hints(defs, phi)?;
    if let Some(lowest) = repairs.first().map(|h| h.bloom_target) {
        let layer = repairs.iter().take_while(|h| h.bloom_target == lowest).count();
        repairs.truncate(layer.max(limit.min(repairs.len())));
    }
    repairs.extend(cautions(defs));
    Ok(repairs)
}

/// Guided reconstruction applies to nonempty graphs drawn entirely at the
/// Remember level.
pub fn is_guided(gs: &Srg) -> bool {
    !gs.is_empty() && gs.nodes().iter().all(|n| n.bloom == BloomLevel::Remember)
}

fn repair_hints(defs: &[Deficiency], phi: &PhiMap) -> Result<Vec<VisualHint>, FeedbackError> {
    let mut out = Vec::new();
    for d in defs {
        let Some(rank) = d.kind.repair_rank() else { continue };
        let gold = d
            .gold_ref
            .as_ref()
            .ok_or_else(|| FeedbackError::MissingTemplate(format!("{} without a gold element", d.kind.name())))?;
        let key = gold.phi_key();
        let template = phi.get(&key).ok_or_else(|| FeedbackError::MissingTemplate(key.to_string()))?;
        let bloom = d.expected_bloom.unwrap_or(BloomLevel::Remember);
        out.push((
            (bloom, rank, key.clone()),
            VisualHint {
                id: format!("{}:{}", d.kind.name(), key),
                deficiency: d.clone(),
                text: template.hint_text.clone(),
                overlay_ops: default_overlay(&template.overlay, gold),
                bloom_target: bloom,
            },
        ));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out.into_iter().map(|(_, h)| h).collect())
}

/// Templates without overlay primitives still get a marker on the concept.
fn default_overlay(overlay: &[OverlayPrimitive], gold: &ElementRef) -> Vec<OverlayPrimitive> {
    if !overlay.is_empty() {
        return overlay.to_vec();
    }
    match gold {
        ElementRef::Node { concept, .. } => {
            vec![OverlayPrimitive::Marker { anchor: Anchor::Concept { concept: concept.clone() } }]
        }
        ElementRef::Edge { source_concept, target_concept, .. } => vec![OverlayPrimitive::Arrow {
            from: Anchor::Concept { concept: source_concept.clone() },
            to: Anchor::Concept { concept: target_concept.clone() },
        }],
    }
}

fn cautions(defs: &[Deficiency]) -> Vec<VisualHint> {
    defs.iter()
        .filter(|d| matches!(d.kind, DeficiencyKind::ExtraneousNode | DeficiencyKind::ExtraneousEdge))
        .filter_map(|d| {
            let student = d.student_ref.as_ref()?;
            let (text, bloom) = match student {
                ElementRef::Node { concept, bloom, .. } => {
                    (format!("Check whether {concept} belongs in this model; the rubric does not ask for it."), *bloom)
                }
                ElementRef::Edge { .. } => (
                    format!("Check the relation {}; the rubric does not connect these ideas this way.", student.describe()),
                    BloomLevel::Remember,
                ),
            };
            Some(VisualHint {
                id: format!("{}:{}", d.kind.name(), student.phi_key()),
                deficiency: d.clone(),
                text,
                overlay_ops: Vec::new(),
                bloom_target: bloom,
            })
        })
        .collect()
}

/// Replaces concept anchors with the evidence region of the first student
/// node showing that concept. Anchors with no such region are left as is and
/// fall back to the full canvas when rendered.
pub fn resolve_anchors(hs: &mut [VisualHint], gs: &Srg) {
    let region_of = |concept: &str| {
        gs.nodes().iter().find(|n| n.concept == concept).and_then(|n| n.evidence.region)
    };
    let fix = |a: &mut Anchor| {
        if let Anchor::Concept { concept } = a {
            if let Some(region) = region_of(concept) {
                *a = Anchor::Region { region };
            }
        }
    };
    for h in hs {
        for op in &mut h.overlay_ops {
            match op {
                OverlayPrimitive::Marker { anchor } | OverlayPrimitive::Label { anchor, .. } => fix(anchor),
                OverlayPrimitive::Arrow { from, to } => {
                    fix(from);
                    fix(to);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawOp {
    Rect,
    Arrow,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayInstruction {
    pub op: DrawOp,
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
    pub text: Option<String>,
    pub hint_id: String,
}

pub type OverlayScript = Vec<OverlayInstruction>;

/// Scales normalized anchors to pixel coordinates (rounded to the nearest
/// pixel). Arrows run between region centres; labels sit at the region's
/// top-left corner.
pub fn render_overlay(hs: &[VisualHint], canvas: (u32, u32)) -> OverlayScript {
    let (w, h) = (f64::from(canvas.0), f64::from(canvas.1));
    let region = |a: &Anchor| match a {
        Anchor::Region { region } => *region,
        Anchor::Concept { .. } => Region::FULL,
    };
    let px = |v: f64, scale: f64| (v * scale).round() as i64;
    let mut out = Vec::new();
    for hint in hs {
        for op in &hint.overlay_ops {
            let ins = match op {
                OverlayPrimitive::Marker { anchor } => {
                    let r = region(anchor);
                    OverlayInstruction {
                        op: DrawOp::Rect,
                        x0: px(r.x0, w),
                        y0: px(r.y0, h),
                        x1: px(r.x1, w),
                        y1: px(r.y1, h),
                        text: None,
                        hint_id: hint.id.clone(),
                    }
                }
                OverlayPrimitive::Arrow { from, to } => {
                    let (a, b) = (region(from), region(to));
                    OverlayInstruction {
                        op: DrawOp::Arrow,
                        x0: px((a.x0 + a.x1) / 2.0, w),
                        y0: px((a.y0 + a.y1) / 2.0, h),
                        x1: px((b.x0 + b.x1) / 2.0, w),
                        y1: px((b.y0 + b.y1) / 2.0, h),
                        text: None,
                        hint_id: hint.id.clone(),
                    }
                }
                OverlayPrimitive::Label { anchor, text } => {
                    let r = region(anchor);
                    let (x, y) = (px(r.x0, w), px(r.y0, h));
                    OverlayInstruction {
                        op: DrawOp::Label,
                        x0: x,
                        y0: y,
                        x1: x,
                        y1: y,
                        text: Some(text.clone()),
                        hint_id: hint.id.clone(),
                    }
                }
            };
            out.push(ins);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strength {
    pub concept: String,
    pub bloom: BloomLevel,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningGap {
    pub kind: DeficiencyKind,
    pub cause: Cause,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub similarity_score: f64,
    pub proficiency_level: Band,
    pub dominant_bloom: Option<BloomLevel>,
    pub strengths: Vec<Strength>,
    pub missing_concepts: Vec<String>,
    pub revision_guidance: Vec<String>,
    pub reasoning_gaps: Vec<ReasoningGap>,
}

/// Aligned pairs at or above this weight are listed as strengths.
pub const STRENGTH_WEIGHT: f64 = 0.75;

pub fn feedback_report(b: &SimilarityBreakdown, gs: &Srg, defs: &[Deficiency], hs: &[VisualHint]) -> FeedbackReport {
    let mut strengths: Vec<Strength> = b
        .alignment
        .pairs
        .iter()
        .filter(|p| p.weight >= STRENGTH_WEIGHT)
        .filter_map(|p| {
            let n = gs.node(&p.student)?;
            Some(Strength { concept: n.concept.clone(), bloom: n.bloom, weight: p.weight })
        })
        .collect();
    strengths.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.concept.cmp(&b.concept)));

    let mut missing_concepts = Vec::new();
    for d in defs.iter().filter(|d| d.kind == DeficiencyKind::MissingNode) {
        if let Some(ElementRef::Node { concept, .. }) = &d.gold_ref {
            if !missing_concepts.contains(concept) {
                missing_concepts.push(concept.clone());
            }
        }
    }

    FeedbackReport {
        similarity_score: b.s,
        proficiency_level: b.band,
        dominant_bloom: b.dominant_bloom,
        strengths,
        missing_concepts,
        revision_guidance: hs.iter().map(|h| h.text.clone()).collect(),
        reasoning_gaps: defs
            .iter()
            .map(|d| ReasoningGap { kind: d.kind, cause: d.cause, description: d.describe() })
            .collect(),
    }
}

impl FeedbackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(document: &str) -> Result<FeedbackReport, serde_json::Error> {
        serde_json::from_str(document)
    }

    /// Human-readable view of the same content.
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "Similarity_score: {:.3}", self.similarity_score);
        let _ = writeln!(t, "Your Proficiency Level: {}", self.proficiency_level);
        match self.dominant_bloom {
            Some(b) => {
                let _ = writeln!(t, "Dominant Bloom Level: {b}");
            }
            None => t.push_str("Dominant Bloom Level: not established\n"),
        }
        t.push_str("\nStrengths:\n");
        if self.strengths.is_empty() {
            t.push_str("  (none yet)\n");
        }
        for s in &self.strengths {
            let _ = writeln!(t, "  - {} at {} (weight {:.2})", s.concept, s.bloom, s.weight);
        }
        t.push_str("\nWhat Needs Attention:\n");
        if self.missing_concepts.is_empty() {
            t.push_str("  (nothing missing)\n");
        } else {
            let _ = writeln!(t, "  - Missing Concepts: {}", join_list(&self.missing_concepts));
        }
        t.push_str("\nRevision Guidance:\n");
        for (i, g) in self.revision_guidance.iter().enumerate() {
            let _ = writeln!(t, "  {}. {}", i + 1, g);
        }
        t.push_str("\nReasoning Gaps:\n");
        for g in &self.reasoning_gaps {
            let _ = writeln!(t, "  - [{}] {}", g.kind.name(), g.description);
        }
        t
    }
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}

/// Everything the feedback view of one student graph needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackBundle {
    pub breakdown: SimilarityBreakdown,
    pub deficiencies: Vec<Deficiency>,
    pub hints: Vec<VisualHint>,
    pub report: FeedbackReport,
    pub overlay: OverlayScript,
}

pub fn feedback_for(item: &ItemSpec, gs: &Srg, canvas: (u32, u32)) -> Result<FeedbackBundle, FeedbackError> {
    let breakdown = similarity(gs, &item.gold, &item.ontology, item.scoring())?;
    let defs = deficiencies_with(gs, &item.gold, &breakdown.alignment, &item.ontology, item.meta.feedback.mismatch_sim);
    let mut hs = hints_for(gs, &defs, &item.phi, item.meta.feedback.hint_limit)?;
    resolve_anchors(&mut hs, gs);
    let report = feedback_report(&breakdown, gs, &defs, &hs);
    let overlay = render_overlay(&hs, canvas);
    Ok(FeedbackBundle { breakdown, deficiencies: defs, hints: hs, report, overlay })
}

/// The reviser in the loop: a human front end or a simulated student.
pub trait StudentModel {
    fn revise(&mut self, t: usize, gs: &Srg, hints: &[VisualHint], go: &Srg) -> Srg;
}

/// Applies each hinted repair independently with probability `p`, using a
/// generator seeded from `seed` and the iteration index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedStudent {
    pub p: f64,
    pub seed: u64,
}

impl StudentModel for SimulatedStudent {
    fn revise(&mut self, t: usize, gs: &Srg, hints: &[VisualHint], go: &Srg) -> Srg {
        simulated_student(gs, hints, go, self.p, self.seed.wrapping_add(t as u64))
    }
}

/// Never changes anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullStudent;

impl StudentModel for NullStudent {
    fn revise(&mut self, _t: usize, gs: &Srg, _hints: &[VisualHint], _go: &Srg) -> Srg {
        gs.clone()
    }
}

pub fn simulated_student(gs: &Srg, hs: &[VisualHint], go: &Srg, p: f64, seed: u64) -> Srg {
    let p = p.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = gs.clone();
    for h in hs {
        if h.is_caution() {
            continue;
        }
        if !rng.random_bool(p) {
            continue;
        }
        apply_repair(&mut out, &h.deficiency, go);
    }
    out
}

fn apply_repair(gs: &mut Srg, d: &Deficiency, go: &Srg) {
    match (d.kind, &d.gold_ref) {
        (DeficiencyKind::MissingNode, Some(ElementRef::Node { id, .. })) => {
            if let Some(g) = go.node(id) {
                insert_copy(gs, g);
            }
        }
        (DeficiencyKind::BloomRegression, _) => {
            if let (Some(ElementRef::Node { id, .. }), Some(b)) = (&d.student_ref, d.expected_bloom) {
                gs.set_bloom(id, b);
            }
        }
        (DeficiencyKind::MissingEdge, Some(ElementRef::Edge { source, target, relation, .. })) => {
            let (s, t) = match &d.student_ref {
                Some(ElementRef::Edge { source: s, target: t, .. }) if gs.node(s).is_some() && gs.node(t).is_some() => {
                    (s.clone(), t.clone())
                }
                _ => {
                    let (Some(gsrc), Some(gtgt)) = (go.node(source), go.node(target)) else { return };
                    (endpoint_for(gs, gsrc), endpoint_for(gs, gtgt))
                }
            };
            if s != t && !gs.has_edge(&s, &t, relation) {
                let _ = gs.add_edge(SrgEdge::new(s, t, relation.clone()));
            }
        }
        _ => {}
    }
}

/// A student node standing for `gold`: same concept if present, else a new
/// copy of the gold node.
fn endpoint_for(gs: &mut Srg, gold: &SrgNode) -> String {
    if let Some(n) = gs.nodes().iter().find(|n| n.concept == gold.concept) {
        return n.id.clone();
    }
    insert_copy(gs, gold)
}

fn insert_copy(gs: &mut Srg, gold: &SrgNode) -> String {
    let id = if gs.node(&gold.id).is_none() { gold.id.clone() } else { gs.fresh_id(&gold.id) };
    let node = SrgNode::new(id.clone(), gold.concept.clone(), gold.bloom);
    gs.add_node(node).expect("fresh id is unique");
    id
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ThresholdMet,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopIteration {
    pub t: usize,
    pub srg: Srg,
    pub breakdown: SimilarityBreakdown,
    pub hints: Vec<VisualHint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTrace {
    pub iterations: Vec<LoopIteration>,
    pub terminated_by: Termination,
    pub t_max: usize,
}

impl LoopTrace {
    pub fn scores(&self) -> Vec<f64> {
        self.iterations.iter().map(|i| i.breakdown.s).collect()
    }

    pub fn last(&self) -> &LoopIteration {
        self.iterations.last().expect("traces are never empty")
    }
}

/// One evaluation step of the loop: score, and unless the threshold is met,
/// diagnose and pick hints.
pub fn loop_step(item: &ItemSpec, t: usize, gs: &Srg) -> Result<(LoopIteration, bool), FeedbackError> {
    let breakdown = similarity(gs, &item.gold, &item.ontology, item.scoring())?;
    if breakdown.s >= item.scoring().tau {
        return Ok((LoopIteration { t, srg: gs.clone(), breakdown, hints: Vec::new() }, true));
    }
    let defs = deficiencies_with(gs, &item.gold, &breakdown.alignment, &item.ontology, item.meta.feedback.mismatch_sim);
    let mut hs = hints_for(gs, &defs, &item.phi, item.meta.feedback.hint_limit)?;
    resolve_anchors(&mut hs, gs);
    Ok((LoopIteration { t, srg: gs.clone(), breakdown, hints: hs }, false))
}

/// Score, stop at the threshold, otherwise hint and let the student revise;
/// at most `t_max` revisions (`t_max + 1` evaluations).
pub fn loop_run(
    go: &Srg,
    gs0: &Srg,
    student: &mut dyn StudentModel,
    item: &ItemSpec,
    t_max: usize,
) -> Result<LoopTrace, FeedbackError> {
    let t_max = t_max.max(1);
    let mut iterations = Vec::new();
    let mut gs = gs0.clone();
    for t in 0..=t_max {
        let (it, met) = loop_step(item, t, &gs)?;
        let hs = it.hints.clone();
        iterations.push(it);
        if met {
            return Ok(LoopTrace { iterations, terminated_by: Termination::ThresholdMet, t_max });
        }
        if t == t_max {
            break;
        }
        gs = student.revise(t, &gs, &hs, go);
    }
    Ok(LoopTrace { iterations, terminated_by: Termination::MaxIterations, t_max })
}
