//! Sketch reasoning graphs: the concept graph extracted from a sketch, with a
//! Bloom level on every node and optional evidence on every element.
//!
//! Graphs are exchanged as SRG-JSON (`"srg_version": "1"`). Every structural
//! invariant is checked when a graph is parsed or built, so an [`Srg`] value
//! held anywhere downstream is always well formed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SrgError;
use crate::ontology::Ontology;

pub const SRG_VERSION: &str = "1";

/// Bloom's six cognitive levels, ordered from `Remember` (1) to `Create` (6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BloomLevel {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
}

impl BloomLevel {
    pub const ALL: [BloomLevel; 6] = [
        BloomLevel::Remember,
        BloomLevel::Understand,
        BloomLevel::Apply,
        BloomLevel::Analyze,
        BloomLevel::Evaluate,
        BloomLevel::Create,
    ];

    pub fn ordinal(self) -> u8 {
        match self {
            BloomLevel::Remember => 1,
            BloomLevel::Understand => 2,
            BloomLevel::Apply => 3,
            BloomLevel::Analyze => 4,
            BloomLevel::Evaluate => 5,
            BloomLevel::Create => 6,
        }
    }

    pub fn from_ordinal(ordinal: u8) -> Option<BloomLevel> {
        match ordinal {
            1..=6 => Some(Self::ALL[usize::from(ordinal - 1)]),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BloomLevel::Remember => "Remember",
            BloomLevel::Understand => "Understand",
            BloomLevel::Apply => "Apply",
            BloomLevel::Analyze => "Analyze",
            BloomLevel::Evaluate => "Evaluate",
            BloomLevel::Create => "Create",
        }
    }
}

impl fmt::Display for BloomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BloomLevel {
    type Err = SrgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|level| level.name() == s)
            .ok_or_else(|| SrgError::UnknownBloom(s.to_string()))
    }
}

impl Serialize for BloomLevel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for BloomLevel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned rectangle in normalized canvas coordinates, serialized as
/// `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Region, SrgError> {
        let ordered = (0.0..=1.0).contains(&x0)
            && (0.0..=1.0).contains(&y0)
            && (0.0..=1.0).contains(&x1)
            && (0.0..=1.0).contains(&y1)
            && x0 <= x1
            && y0 <= y1;
        if !ordered {
            return Err(SrgError::Schema(format!(
                "region [{x0}, {y0}, {x1}, {y1}] must satisfy 0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1"
            )));
        }
        Ok(Region { x0, y0, x1, y1 })
    }

    pub const FULL: Region = Region { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };
}

impl TryFrom<[f64; 4]> for Region {
    type Error = SrgError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        Region::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Region> for [f64; 4] {
    fn from(r: Region) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

/// Visual and textual support for a node or edge. Both parts may be empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub region: Option<Region>,
}

impl Evidence {
    pub fn text(text: impl Into<String>) -> Evidence {
        Evidence { text: text.into(), region: None }
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty() && self.region.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrgNode {
    pub id: String,
    pub concept: String,
    pub bloom: BloomLevel,
    #[serde(default)]
    pub evidence: Evidence,
}

impl SrgNode {
    pub fn new(id: impl Into<String>, concept: impl Into<String>, bloom: BloomLevel) -> SrgNode {
        SrgNode { id: id.into(), concept: concept.into(), bloom, evidence: Evidence::default() }
    }

    pub fn with_evidence(mut self, evidence: Evidence) -> SrgNode {
        self.evidence = evidence;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrgEdge {
    pub source: String,
    pub target: String,
    pub relation: String,
    #[serde(default)]
    pub evidence: Evidence,
}

impl SrgEdge {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        relation: impl Into<String>,
    ) -> SrgEdge {
        SrgEdge {
            source: source.into(),
            target: target.into(),
            relation: relation.into(),
            evidence: Evidence::default(),
        }
    }

    pub fn key(&self) -> (&str, &str, &str) {
        (&self.source, &self.target, &self.relation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrgRole {
    Gold,
    Student,
}

/// A validated sketch reasoning graph.
///
/// Nodes and edges keep document order, so equality is deep and
/// order-sensitive, and serialization reproduces the input ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Srg {
    item_id: String,
    role: SrgRole,
    nodes: Vec<SrgNode>,
    edges: Vec<SrgEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SrgDocument {
    srg_version: String,
    item_id: String,
    role: SrgRole,
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
}

// Bloom arrives as a plain string so that an unknown level surfaces as
// `SrgError::UnknownBloom` rather than a generic schema failure.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    concept: String,
    bloom: String,
    #[serde(default)]
    evidence: Evidence,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    source: String,
    target: String,
    relation: String,
    #[serde(default)]
    evidence: Evidence,
}

impl Srg {
    pub fn new(
        item_id: impl Into<String>,
        role: SrgRole,
        nodes: Vec<SrgNode>,
        edges: Vec<SrgEdge>,
    ) -> Result<Srg, SrgError> {
        let mut graph = Srg { item_id: item_id.into(), role, nodes: Vec::new(), edges: Vec::new() };
        for node in nodes {
            graph.add_node(node)?;
        }
        for edge in edges {
            graph.add_edge(edge)?;
        }
        Ok(graph)
    }

    pub fn empty(item_id: impl Into<String>, role: SrgRole) -> Srg {
        Srg { item_id: item_id.into(), role, nodes: Vec::new(), edges: Vec::new() }
    }

    pub fn item_id(&self) -> &str {
        &self.item_id
    }

    pub fn role(&self) -> SrgRole {
        self.role
    }

    pub fn nodes(&self) -> &[SrgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[SrgEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&SrgNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn has_edge(&self, source: &str, target: &str, relation: &str) -> bool {
        self.edges.iter().any(|e| e.key() == (source, target, relation))
    }

    pub fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    pub fn with_role(mut self, role: SrgRole) -> Srg {
        self.role = role;
        self
    }

    pub fn with_item_id(mut self, item_id: impl Into<String>) -> Srg {
        self.item_id = item_id.into();
        self
    }

    pub fn add_node(&mut self, node: SrgNode) -> Result<(), SrgError> {
        if node.id.is_empty() {
            return Err(SrgError::Schema("node id must be nonempty".into()));
        }
        if node.concept.is_empty() {
            return Err(SrgError::Schema(format!("node {:?} has an empty concept", node.id)));
        }
        if self.node(&node.id).is_some() {
            return Err(SrgError::Integrity(format!("duplicate node id {:?}", node.id)));
        }
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: SrgEdge) -> Result<(), SrgError> {
        if edge.relation.is_empty() {
            return Err(SrgError::Schema(format!(
                "edge {:?} -> {:?} has an empty relation",
                edge.source, edge.target
            )));
        }
        if edge.source == edge.target {
            return Err(SrgError::Integrity(format!("self-loop on node {:?}", edge.source)));
        }
        for endpoint in [&edge.source, &edge.target] {
            if self.node(endpoint).is_none() {
                return Err(SrgError::Integrity(format!(
                    "edge references unknown node {endpoint:?}"
                )));
            }
        }
        if self.has_edge(&edge.source, &edge.target, &edge.relation) {
            return Err(SrgError::Integrity(format!(
                "duplicate edge {:?} -[{}]-> {:?}",
                edge.source, edge.relation, edge.target
            )));
        }
        self.edges.push(edge);
        Ok(())
    }

    /// Removes a node together with every incident edge. Returns the node.
    pub fn remove_node(&mut self, id: &str) -> Option<SrgNode> {
        let pos = self.nodes.iter().position(|n| n.id == id)?;
        self.edges.retain(|e| e.source != id && e.target != id);
        Some(self.nodes.remove(pos))
    }

    pub fn remove_edge(&mut self, source: &str, target: &str, relation: &str) -> Option<SrgEdge> {
        let pos = self.edges.iter().position(|e| e.key() == (source, target, relation))?;
        Some(self.edges.remove(pos))
    }

    /// Relabels a node's Bloom level. Returns false when the node is absent.
    pub fn set_bloom(&mut self, id: &str, bloom: BloomLevel) -> bool {
        match self.nodes.iter_mut().find(|n| n.id == id) {
            Some(node) => {
                node.bloom = bloom;
                true
            }
            None => false,
        }
    }

    pub fn set_concept(&mut self, id: &str, concept: impl Into<String>) -> Result<(), SrgError> {
        let concept = concept.into();
        if concept.is_empty() {
            return Err(SrgError::Schema(format!("node {id:?} would get an empty concept")));
        }
        let node = self
            .nodes
            .iter_mut()
            .find(|n| n.id == id)
            .ok_or_else(|| SrgError::Integrity(format!("unknown node {id:?}")))?;
        node.concept = concept;
        Ok(())
    }

    pub fn max_bloom(&self) -> Option<BloomLevel> {
        self.nodes.iter().map(|n| n.bloom).max()
    }

    /// A fresh node id derived from `base` that does not collide with any
    /// existing node.
    pub fn fresh_id(&self, base: &str) -> String {
        if self.node(base).is_none() {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}_{k}"))
            .find(|candidate| self.node(candidate).is_none())
            .expect("unbounded id space")
    }

    pub fn from_json(document: &str) -> Result<Srg, SrgError> {
        parse_srg(document)
    }

    pub fn to_json(&self) -> String {
        serialize_srg(self)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.document()).expect("SRG documents always serialize")
    }

    pub fn from_value(value: serde_json::Value) -> Result<Srg, SrgError> {
        let doc: SrgDocument =
            serde_json::from_value(value).map_err(|e| SrgError::Schema(e.to_string()))?;
        Srg::from_document(doc)
    }

    fn document(&self) -> SrgDocument {
        SrgDocument {
            srg_version: SRG_VERSION.to_string(),
            item_id: self.item_id.clone(),
            role: self.role,
            nodes: self
                .nodes
                .iter()
                .map(|n| RawNode {
                    id: n.id.clone(),
                    concept: n.concept.clone(),
                    bloom: n.bloom.name().to_string(),
                    evidence: n.evidence.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    relation: e.relation.clone(),
                    evidence: e.evidence.clone(),
                })
                .collect(),
        }
    }

    fn from_document(doc: SrgDocument) -> Result<Srg, SrgError> {
        if doc.srg_version != SRG_VERSION {
            return Err(SrgError::Schema(format!(
                "unsupported srg_version {:?} (expected {SRG_VERSION:?})",
                doc.srg_version
            )));
        }
        let nodes = doc
            .nodes
            .into_iter()
            .map(|raw| {
                Ok(SrgNode {
                    bloom: raw.bloom.parse()?,
                    id: raw.id,
                    concept: raw.concept,
                    evidence: raw.evidence,
                })
            })
            .collect::<Result<Vec<_>, SrgError>>()?;
        let edges = doc
            .edges
            .into_iter()
            .map(|raw| SrgEdge {
                source: raw.source,
                target: raw.target,
                relation: raw.relation,
                evidence: raw.evidence,
            })
            .collect();
        Srg::new(doc.item_id, doc.role, nodes, edges)
    }
}

impl Serialize for Srg {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Srg {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = SrgDocument::deserialize(deserializer)?;
        Srg::from_document(doc).map_err(serde::de::Error::custom)
    }
}

pub fn parse_srg(document: &str) -> Result<Srg, SrgError> {
    let doc: SrgDocument =
        serde_json::from_str(document).map_err(|e| SrgError::Schema(e.to_string()))?;
    Srg::from_document(doc)
}

pub fn serialize_srg(g: &Srg) -> String {
    serde_json::to_string_pretty(&g.document()).expect("SRG documents always serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedConcept {
    pub node_id: String,
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownRelation {
    pub source: String,
    pub target: String,
    pub relation: String,
}

/// Result of checking a graph against an item ontology. Never an error:
/// scoring tolerates unresolved concepts, so callers decide what to do.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub unresolved_concepts: Vec<UnresolvedConcept>,
    pub unknown_relations: Vec<UnknownRelation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.unresolved_concepts.is_empty() && self.unknown_relations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for u in &self.unresolved_concepts {
            parts.push(format!("node {:?}: concept {:?} not in ontology", u.node_id, u.concept));
        }
        for u in &self.unknown_relations {
            parts.push(format!(
                "edge {:?} -> {:?}: relation {:?} not in ontology",
                u.source, u.target, u.relation
            ));
        }
        f.write_str(&parts.join("; "))
    }
}

pub fn validate_against_ontology(g: &Srg, o: &Ontology) -> ValidationReport {
    let unresolved_concepts = g
        .nodes
        .iter()
        .filter(|n| !o.contains(&n.concept))
        .map(|n| UnresolvedConcept { node_id: n.id.clone(), concept: n.concept.clone() })
        .collect();
    let unknown_relations = g
        .edges
        .iter()
        .filter(|e| !o.has_relation(&e.relation))
        .map(|e| UnknownRelation {
            source: e.source.clone(),
            target: e.target.clone(),
            relation: e.relation.clone(),
        })
        .collect();
    ValidationReport { unresolved_concepts, unknown_relations }
}

/// Canonical multiset view of a graph, independent of node ids and order.
/// Used to compare graphs up to renaming when the node correspondence is
/// known to be label-determined.
pub fn label_signature(g: &Srg) -> (Vec<(String, BloomLevel)>, Vec<(String, String, String)>) {
    let concept_of: BTreeMap<&str, &str> =
        g.nodes.iter().map(|n| (n.id.as_str(), n.concept.as_str())).collect();
    let mut nodes: Vec<_> = g.nodes.iter().map(|n| (n.concept.clone(), n.bloom)).collect();
    nodes.sort();
    let mut edges: Vec<_> = g
        .edges
        .iter()
        .map(|e| {
            (
                concept_of[e.source.as_str()].to_string(),
                e.relation.clone(),
                concept_of[e.target.as_str()].to_string(),
            )
        })
        .collect();
    edges.sort();
    (nodes, edges)
}

/// Ids of nodes with no incident edge.
pub fn isolated_nodes(g: &Srg) -> Vec<&str> {
    let touched: HashSet<&str> =
        g.edges.iter().flat_map(|e| [e.source.as_str(), e.target.as_str()]).collect();
    g.nodes.iter().map(|n| n.id.as_str()).filter(|id| !touched.contains(id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(nodes: &str, edges: &str) -> String {
        format!(
            r#"{{"srg_version":"1","item_id":"t","role":"student","nodes":[{nodes}],"edges":[{edges}]}}"#
        )
    }

    #[test]
    fn bloom_ordinals_are_a_bijection() {
        for k in 1..=6u8 {
            let level = BloomLevel::from_ordinal(k).unwrap();
            assert_eq!(level.ordinal(), k);
            assert_eq!(level.name().parse::<BloomLevel>().unwrap(), level);
        }
        assert_eq!(BloomLevel::from_ordinal(0), None);
        assert_eq!(BloomLevel::from_ordinal(7), None);
        assert!(BloomLevel::Remember < BloomLevel::Create);
    }

    #[test]
    fn empty_document_is_a_blank_sketch() {
        let g = parse_srg(&doc("", "")).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
        let text = serialize_srg(&g);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["nodes"], serde_json::json!([]));
        assert_eq!(value["edges"], serde_json::json!([]));
    }

    #[test]
    fn dangling_edge_is_an_integrity_error() {
        let err = parse_srg(&doc(
            r#"{"id":"a","concept":"A","bloom":"Apply"}"#,
            r#"{"source":"a","target":"X","relation":"causes"}"#,
        ))
        .unwrap_err();
        assert!(matches!(err, SrgError::Integrity(_)), "{err}");
    }

    #[test]
    fn duplicate_ids_and_self_loops_are_rejected() {
        let dup = parse_srg(&doc(
            r#"{"id":"a","concept":"A","bloom":"Apply"},{"id":"a","concept":"B","bloom":"Apply"}"#,
            "",
        ));
        assert!(matches!(dup, Err(SrgError::Integrity(_))));
        let looped = parse_srg(&doc(
            r#"{"id":"a","concept":"A","bloom":"Apply"}"#,
            r#"{"source":"a","target":"a","relation":"causes"}"#,
        ));
        assert!(matches!(looped, Err(SrgError::Integrity(_))));
    }

    #[test]
    fn parallel_edges_need_distinct_relations() {
        let nodes = r#"{"id":"a","concept":"A","bloom":"Apply"},{"id":"b","concept":"B","bloom":"Apply"}"#;
        let ok = parse_srg(&doc(
            nodes,
            r#"{"source":"a","target":"b","relation":"contains"},{"source":"a","target":"b","relation":"causes"}"#,
        ))
        .unwrap();
        assert_eq!(ok.edge_count(), 2);
        let dup = parse_srg(&doc(
            nodes,
            r#"{"source":"a","target":"b","relation":"causes"},{"source":"a","target":"b","relation":"causes"}"#,
        ));
        assert!(matches!(dup, Err(SrgError::Integrity(_))));
    }

    #[test]
    fn unknown_bloom_is_a_value_error() {
        let err = parse_srg(&doc(r#"{"id":"a","concept":"A","bloom":"Synthesize"}"#, ""))
            .unwrap_err();
        assert!(matches!(err, SrgError::UnknownBloom(ref b) if b == "Synthesize"));
    }

    #[test]
    fn malformed_documents_are_schema_errors() {
        for bad in [
            "not json",
            r#"{"srg_version":"2","item_id":"t","role":"gold","nodes":[],"edges":[]}"#,
            r#"{"srg_version":"1","item_id":"t","role":"teacher","nodes":[],"edges":[]}"#,
            r#"{"srg_version":"1","item_id":"t","role":"gold","nodes":[]}"#,
            &doc(r#"{"id":"","concept":"A","bloom":"Apply"}"#, ""),
            &doc(
                r#"{"id":"a","concept":"A","bloom":"Apply","evidence":{"text":"","region":[0.5,0.1,0.2,0.3]}}"#,
                "",
            ),
        ] {
            assert!(matches!(parse_srg(bad), Err(SrgError::Schema(_))), "{bad}");
        }
    }

    #[test]
    fn evidence_is_optional() {
        let g = parse_srg(&doc(r#"{"id":"a","concept":"A","bloom":"Apply"}"#, "")).unwrap();
        assert!(g.nodes()[0].evidence.is_empty());
        let round = parse_srg(&serialize_srg(&g)).unwrap();
        assert_eq!(round, g);
    }

    #[test]
    fn remove_node_drops_incident_edges() {
        let mut g = Srg::new(
            "t",
            SrgRole::Gold,
            vec![
                SrgNode::new("a", "A", BloomLevel::Apply),
                SrgNode::new("b", "B", BloomLevel::Apply),
                SrgNode::new("c", "C", BloomLevel::Apply),
            ],
            vec![SrgEdge::new("a", "b", "r"), SrgEdge::new("b", "c", "r"), SrgEdge::new("a", "c", "r")],
        )
        .unwrap();
        g.remove_node("b").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.fresh_id("a"), "a_2");
        assert_eq!(g.fresh_id("b"), "b");
    }
}
