//! Assessment items: metadata, gold graph, ontology, hint templates and the
//! scoring configuration they carry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ItemError, ParamError};
use crate::ontology::Ontology;
use crate::scoring::ScoringParams;
use crate::srg::{validate_against_ontology, BloomLevel, Region, Srg, SrgRole};

/// Where an overlay primitive attaches: a fixed canvas region, or the
/// evidence region of the student node carrying a concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Anchor {
    Region { region: Region },
    Concept { concept: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OverlayPrimitive {
    Marker { anchor: Anchor },
    Arrow { from: Anchor, to: Anchor },
    Label { anchor: Anchor, text: String },
}

/// Key of a hint template: a gold concept, or a relation between two gold
/// concepts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiKey {
    Node(String),
    Edge(String, String, String),
}

impl fmt::Display for PhiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiKey::Node(c) => f.write_str(c),
            PhiKey::Edge(s, r, t) => write!(f, "{s} -{r}-> {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintTemplate {
    pub key: PhiKey,
    pub hint_text: String,
    pub overlay: Vec<OverlayPrimitive>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhiDocument {
    #[serde(default)]
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    concept: String,
    hint_text: String,
    #[serde(default)]
    overlay: Vec<OverlayPrimitive>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    source_concept: String,
    relation: String,
    target_concept: String,
    hint_text: String,
    #[serde(default)]
    overlay: Vec<OverlayPrimitive>,
}

/// The reverse mapping from gold elements to hint templates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhiMap {
    templates: BTreeMap<PhiKey, HintTemplate>,
}

impl PhiMap {
    pub fn new(templates: impl IntoIterator<Item = HintTemplate>) -> Result<PhiMap, ItemError> {
        let mut map = BTreeMap::new();
        for t in templates {
            if t.hint_text.trim().is_empty() {
                return Err(ItemError::Invalid(format!("hint text for {} is empty", t.key)));
            }
            let key = t.key.clone();
            if map.insert(key.clone(), t).is_some() {
                return Err(ItemError::Invalid(format!("duplicate hint template for {key}")));
            }
        }
        Ok(PhiMap { templates: map })
    }

    pub fn from_json(document: &str) -> Result<PhiMap, ItemError> {
        let doc: PhiDocument =
            serde_json::from_str(document).map_err(|e| ItemError::Invalid(format!("phi document: {e}")))?;
        let nodes = doc.nodes.into_iter().map(|n| HintTemplate {
            key: PhiKey::Node(n.concept),
            hint_text: n.hint_text,
            overlay: n.overlay,
        });
        let edges = doc.edges.into_iter().map(|e| HintTemplate {
            key: PhiKey::Edge(e.source_concept, e.relation, e.target_concept),
            hint_text: e.hint_text,
            overlay: e.overlay,
        });
        PhiMap::new(nodes.chain(edges))
    }

    pub fn to_json(&self) -> String {
        let mut doc = PhiDocument { nodes: Vec::new(), edges: Vec::new() };
        for t in self.templates.values() {
            match &t.key {
                PhiKey::Node(c) => doc.nodes.push(NodeEntry {
                    concept: c.clone(),
                    hint_text: t.hint_text.clone(),
                    overlay: t.overlay.clone(),
                }),
                PhiKey::Edge(s, r, tg) => doc.edges.push(EdgeEntry {
                    source_concept: s.clone(),
                    relation: r.clone(),
                    target_concept: tg.clone(),
                    hint_text: t.hint_text.clone(),
                    overlay: t.overlay.clone(),
                }),
            }
        }
        serde_json::to_string_pretty(&doc).expect("phi documents always serialize")
    }

    pub fn get(&self, key: &PhiKey) -> Option<&HintTemplate> {
        self.templates.get(key)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> impl Iterator<Item = &HintTemplate> {
        self.templates.values()
    }

    /// Placeholder templates for every gold element: a concept marker for
    /// nodes and a concept-to-concept arrow for edges.
    pub fn generic(gold: &Srg) -> PhiMap {
        let templates = required_keys(gold).into_iter().map(|key| {
            let (hint_text, overlay) = match &key {
                PhiKey::Node(c) => (
                    format!("Add {c} to your sketch"),
                    vec![OverlayPrimitive::Marker { anchor: Anchor::Concept { concept: c.clone() } }],
                ),
                PhiKey::Edge(s, r, t) => (
                    format!("Show how {s} {r} {t}"),
                    vec![OverlayPrimitive::Arrow {
                        from: Anchor::Concept { concept: s.clone() },
                        to: Anchor::Concept { concept: t.clone() },
                    }],
                ),
            };
            HintTemplate { key, hint_text, overlay }
        });
        PhiMap::new(templates).expect("required keys are distinct")
    }

    /// Gold elements with no template, in key order.
    pub fn missing_keys(&self, gold: &Srg) -> Vec<PhiKey> {
        required_keys(gold).into_iter().filter(|k| !self.templates.contains_key(k)).collect()
    }
}

/// Keys φ must cover for a gold graph.
pub fn required_keys(gold: &Srg) -> BTreeSet<PhiKey> {
    let mut keys: BTreeSet<PhiKey> = gold.nodes().iter().map(|n| PhiKey::Node(n.concept.clone())).collect();
    for e in gold.edges() {
        let concept = |id: &str| gold.node(id).map(|n| n.concept.clone()).unwrap_or_default();
        keys.insert(PhiKey::Edge(concept(&e.source), e.relation.clone(), concept(&e.target)));
    }
    keys
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackParams {
    /// Repair hints issued per iteration.
    pub hint_limit: usize,
    /// Minimum concept similarity for an aligned pair with different
    /// concepts to be reported as a concept mismatch.
    pub mismatch_sim: f64,
    pub t_max: usize,
}

impl Default for FeedbackParams {
    fn default() -> Self {
        FeedbackParams { hint_limit: 3, mismatch_sim: 0.7, t_max: 5 }
    }
}

impl FeedbackParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.hint_limit == 0 {
            return Err(ParamError::Invalid("hint_limit must be at least 1".into()));
        }
        if self.t_max == 0 {
            return Err(ParamError::Invalid("t_max must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mismatch_sim) {
            return Err(ParamError::Invalid(format!("mismatch_sim = {} outside [0, 1]", self.mismatch_sim)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptAssets {
    pub text: String,
    pub images: Vec<String>,
}

/// The `item.json` part of an item: everything except the gold graph,
/// ontology and hint templates, which live in their own files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemMeta {
    pub item_id: String,
    #[serde(default)]
    pub prompt: PromptAssets,
    #[serde(default)]
    pub rubric_text: String,
    pub highest_bloom: BloomLevel,
    #[serde(default)]
    pub scoring: ScoringParams,
    #[serde(default)]
    pub feedback: FeedbackParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemSpec {
    pub meta: ItemMeta,
    pub gold: Srg,
    pub ontology: Ontology,
    pub phi: PhiMap,
}

impl ItemSpec {
    /// Assembles and validates an item.
    pub fn new(meta: ItemMeta, gold: Srg, ontology: Ontology, phi: PhiMap) -> Result<ItemSpec, ItemError> {
        let item = ItemSpec { meta, gold, ontology, phi };
        item.validate()?;
        Ok(item)
    }

    pub fn id(&self) -> &str {
        &self.meta.item_id
    }

    pub fn scoring(&self) -> &ScoringParams {
        &self.meta.scoring
    }

    pub fn validate(&self) -> Result<(), ItemError> {
        if self.meta.item_id.is_empty() {
            return Err(ItemError::Invalid("item_id must be nonempty".into()));
        }
        if self.gold.role() != SrgRole::Gold {
            return Err(ItemError::Invalid("gold graph must have role \"gold\"".into()));
        }
        if self.gold.item_id() != self.meta.item_id {
            return Err(ItemError::Invalid(format!(
                "gold graph belongs to item {:?}, expected {:?}",
                self.gold.item_id(),
                self.meta.item_id
            )));
        }
        let report = validate_against_ontology(&self.gold, &self.ontology);
        if !report.is_empty() {
            return Err(ItemError::UnresolvedGold(report.to_string()));
        }
        let missing = self.phi.missing_keys(&self.gold);
        if !missing.is_empty() {
            return Err(ItemError::IncompleteMapping(missing.iter().map(ToString::to_string).collect()));
        }
        self.meta.scoring.validate()?;
        self.meta.feedback.validate()?;
        match self.gold.max_bloom() {
            Some(max) if max != self.meta.highest_bloom => Err(ItemError::Invalid(format!(
                "highest_bloom is {} but the gold graph peaks at {}",
                self.meta.highest_bloom, max
            ))),
            None => Err(ItemError::Invalid("gold graph is empty".into())),
            _ => Ok(()),
        }
    }

    /// Reads `item.json`, `ontology.json`, `gold.srg.json` and `phi.json`
    /// from an item directory.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<ItemSpec, ItemError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| ItemError::Invalid(format!("{}: {e}", dir.join(name).display())))
        };
        let meta: ItemMeta = serde_json::from_str(&read("item.json")?)
            .map_err(|e| ItemError::Invalid(format!("item.json: {e}")))?;
        let ontology = Ontology::from_json(&read("ontology.json")?)?;
        let gold = Srg::from_json(&read("gold.srg.json")?)?;
        let phi = PhiMap::from_json(&read("phi.json")?)?;
        ItemSpec::new(meta, gold, ontology, phi)
    }

    /// Short listing for catalog views.
    pub fn summary(&self) -> ItemSummary {
        ItemSummary {
            item_id: self.meta.item_id.clone(),
            prompt: self.meta.prompt.text.clone(),
            highest_bloom: self.meta.highest_bloom,
            gold_nodes: self.gold.node_count(),
            gold_edges: self.gold.edge_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub item_id: String,
    pub prompt: String,
    pub highest_bloom: BloomLevel,
    pub gold_nodes: usize,
    pub gold_edges: usize,
}
