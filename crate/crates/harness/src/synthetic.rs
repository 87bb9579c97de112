//! Synthetic packs with planted band labels.
//!
//! Each item gets a random concept tree and a six-node gold graph whose top
//! Bloom level is the item's level. Students are derived from the gold
//! graph and kept only when the scorer, run with the item's own
//! parameters, puts them in the planted band:
//!
//! - Proficient: the gold graph with at most one benign change (one edge
//!   dropped, or evidence text added).
//! - Developing: two or three mid-Bloom elements removed.
//! - Beginning: at least 60% of the elements removed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sketchgrade_core::item::PromptAssets;
use sketchgrade_core::{
    similarity, Band, BloomLevel, Evidence, FeedbackParams, ItemMeta, ItemSpec, Ontology, PhiMap, ScoringParams, Srg,
    SrgEdge, SrgNode, SrgRole,
};

use crate::error::HarnessError;

pub const RELATIONS: [&str; 4] = ["causes", "contains", "affects", "exhibits"];

/// Item ids with their highest Bloom level (the digit).
pub const DEFAULT_ITEMS: [&str; 6] = ["R1-1", "J2-1", "M3-1", "H4-1", "H5-1", "J6-1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub items: Vec<String>,
    pub samples_per_band: usize,
    pub gold_nodes: usize,
    pub concepts: usize,
    pub scoring: ScoringParams,
    /// Attempts per sample before giving up on a planted band.
    pub max_tries: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 2024,
            items: DEFAULT_ITEMS.iter().map(|s| s.to_string()).collect(),
            samples_per_band: 10,
            gold_nodes: 6,
            concepts: 16,
            scoring: ScoringParams::default(),
            max_tries: 500,
        }
    }
}

fn highest_level(item_id: &str) -> BloomLevel {
    item_id
        .chars()
        .find(|c| c.is_ascii_digit())
        .and_then(|c| c.to_digit(10))
        .and_then(|d| BloomLevel::from_ordinal(d.clamp(1, 6) as u8))
        .unwrap_or(BloomLevel::Analyze)
}

fn concept_name(item_id: &str, k: usize) -> String {
    format!("{}_c{k:02}", item_id.split('-').next().unwrap_or(item_id))
}

fn ontology(rng: &mut ChaCha8Rng, item_id: &str, n: usize) -> Ontology {
    let mut entries = vec![(concept_name(item_id, 0), None)];
    for k in 1..n.max(2) {
        let parent = rng.random_range(0..k);
        entries.push((concept_name(item_id, k), Some(concept_name(item_id, parent))));
    }
    Ontology::new(&concept_name(item_id, 0), entries, RELATIONS).expect("generated trees are valid")
}

fn gold(rng: &mut ChaCha8Rng, item_id: &str, o: &Ontology, n: usize) -> Srg {
    let top = highest_level(item_id).ordinal();
    let mut concepts: Vec<String> = o.concepts().filter(|c| *c != o.root()).map(str::to_string).collect();
    concepts.shuffle(rng);
    let n = n.clamp(2, concepts.len());
    let mut nodes = Vec::new();
    for (i, concept) in concepts.iter().take(n).enumerate() {
        let lo = top.saturating_sub(2).max(1);
        let b = if i == n - 1 { top } else { rng.random_range(lo..=top) };
        nodes.push(SrgNode::new(format!("g{}", i + 1), concept.clone(), BloomLevel::from_ordinal(b).expect("in range")));
    }
    let mut g = Srg::new(item_id, SrgRole::Gold, nodes, Vec::new()).expect("distinct ids");
    // a random spanning tree keeps the graph connected, then a few extras
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (s, t) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
        let r = RELATIONS[rng.random_range(0..RELATIONS.len())];
        g.add_edge(SrgEdge::new(format!("g{}", s + 1), format!("g{}", t + 1), r)).expect("tree edges are new");
    }
    for _ in 0..rng.random_range(1..=2) {
        let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
        let r = RELATIONS[rng.random_range(0..RELATIONS.len())];
        let (s, t) = (format!("g{}", s + 1), format!("g{}", t + 1));
        if s != t && !g.has_edge(&s, &t, r) {
            g.add_edge(SrgEdge::new(s, t, r)).expect("checked");
        }
    }
    g
}

/// Student copy of the gold graph with fresh node ids.
fn copy_of(gold: &Srg) -> Srg {
    let rename = |id: &str| format!("n{}", id.trim_start_matches('g'));
    let nodes = gold.nodes().iter().map(|n| SrgNode { id: rename(&n.id), ..n.clone() }).collect();
    let edges = gold.edges().iter().map(|e| SrgEdge::new(rename(&e.source), rename(&e.target), e.relation.clone())).collect();
    Srg::new(gold.item_id(), SrgRole::Student, nodes, edges).expect("renaming keeps ids distinct")
}

#[derive(Clone)]
enum Element {
    Node(String),
    Edge(String, String, String),
}

fn elements(g: &Srg) -> Vec<(Element, BloomLevel)> {
    let bloom = |id: &str| g.node(id).map(|n| n.bloom).unwrap_or(BloomLevel::Remember);
    let mut out: Vec<(Element, BloomLevel)> = g.nodes().iter().map(|n| (Element::Node(n.id.clone()), n.bloom)).collect();
    out.extend(g.edges().iter().map(|e| {
        (Element::Edge(e.source.clone(), e.target.clone(), e.relation.clone()), bloom(&e.source).max(bloom(&e.target)))
    }));
    out
}

fn remove(g: &mut Srg, e: &Element) {
    match e {
        Element::Node(id) => {
            g.remove_node(id);
        }
        Element::Edge(s, t, r) => {
            g.remove_edge(s, t, r);
        }
    }
}

fn perturb(rng: &mut ChaCha8Rng, gold: &Srg, band: Band) -> Srg {
    let mut s = copy_of(gold);
    let els = elements(&s);
    match band {
        Band::Proficient => match rng.random_range(0..3) {
            0 => {}
            1 => {
                let edges: Vec<_> = els.iter().filter(|(e, _)| matches!(e, Element::Edge(..))).collect();
                if let Some((e, _)) = edges.choose(rng) {
                    remove(&mut s, e);
                }
            }
            _ => {
                let id = s.nodes()[rng.random_range(0..s.node_count())].id.clone();
                let nodes = s
                    .nodes()
                    .iter()
                    .map(|n| if n.id == id { n.clone().with_evidence(Evidence::text("labelled in the sketch")) } else { n.clone() })
                    .collect();
                s = Srg::new(s.item_id(), SrgRole::Student, nodes, s.edges().to_vec()).expect("same structure");
            }
        },
        Band::Developing => {
            let lo = els.iter().map(|(_, b)| *b).min().expect("gold is nonempty");
            let hi = els.iter().map(|(_, b)| *b).max().expect("gold is nonempty");
            let mut mid: Vec<Element> = els.iter().filter(|(_, b)| lo < *b && *b < hi).map(|(e, _)| e.clone()).collect();
            if mid.len() < 3 {
                mid = els.iter().map(|(e, _)| e.clone()).collect();
            }
            mid.shuffle(rng);
            for e in mid.iter().take(rng.random_range(2..=3)) {
                remove(&mut s, e);
            }
        }
        Band::Beginning => {
            let mut all: Vec<Element> = els.into_iter().map(|(e, _)| e).collect();
            let total = all.len();
            let k = rng.random_range((total * 3).div_ceil(5)..=total);
            all.shuffle(rng);
            for e in all.iter().take(k) {
                remove(&mut s, e);
            }
        }
    }
    s
}

/// A generated item with its labeled samples.
pub struct SyntheticItem {
    pub item: ItemSpec,
    pub samples: Vec<(String, Srg, Band)>,
}

pub fn synthesize_item(cfg: &SyntheticConfig, item_id: &str, seed: u64) -> Result<SyntheticItem, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = ontology(&mut rng, item_id, cfg.concepts);
    let g = gold(&mut rng, item_id, &o, cfg.gold_nodes);
    let meta = ItemMeta {
        item_id: item_id.to_string(),
        prompt: PromptAssets { text: format!("Synthetic item {item_id}."), images: Vec::new() },
        rubric_text: format!("Generated gold graph for {item_id}; highest level {}.", highest_level(item_id)),
        highest_bloom: g.max_bloom().expect("gold is nonempty"),
        scoring: cfg.scoring,
        feedback: FeedbackParams::default(),
    };
    let phi = PhiMap::generic(&g);
    let item = ItemSpec::new(meta, g, o, phi)
        .map_err(|source| HarnessError::SpecValidation { item: item_id.to_string(), source })?;

    let mut planted = Vec::new();
    for band in Band::ALL {
        for _ in 0..cfg.samples_per_band {
            let mut found = None;
            for _ in 0..cfg.max_tries {
                let s = perturb(&mut rng, &item.gold, band);
                if similarity(&s, &item.gold, &item.ontology, item.scoring())?.band == band {
                    found = Some(s);
                    break;
                }
            }
            let s = found.ok_or_else(|| {
                HarnessError::Layout(format!("{item_id}: no {band} sample within {} tries", cfg.max_tries))
            })?;
            planted.push((s, band));
        }
    }
    planted.shuffle(&mut rng);
    let samples = planted.into_iter().enumerate().map(|(i, (s, b))| (format!("s{:03}", i + 1), s, b)).collect();
    Ok(SyntheticItem { item, samples })
}

fn write(path: PathBuf, text: &str) -> Result<(), HarnessError> {
    fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })
}

/// Writes a pack under `out`, one directory per item.
pub fn generate_pack(out: impl AsRef<Path>, cfg: &SyntheticConfig) -> Result<Vec<String>, HarnessError> {
    let out = out.as_ref();
    let mut ids = Vec::new();
    for (i, id) in cfg.items.iter().enumerate() {
        let syn = synthesize_item(cfg, id, cfg.seed.wrapping_add(i as u64))?;
        let dir = out.join(id);
        let samples = dir.join("samples");
        fs::create_dir_all(&samples).map_err(|source| HarnessError::Io { path: samples.clone(), source })?;
        let meta = serde_json::to_string_pretty(&syn.item.meta).expect("metadata serializes");
        write(dir.join("item.json"), &(meta + "\n"))?;
        write(dir.join("ontology.json"), &syn.item.ontology.to_json())?;
        write(dir.join("gold.srg.json"), &syn.item.gold.to_json())?;
        write(dir.join("phi.json"), &syn.item.phi.to_json())?;
        let mut labels = String::from("sample_id,band\n");
        for (sid, s, band) in &syn.samples {
            write(samples.join(format!("{sid}.srg.json")), &s.to_json())?;
            labels.push_str(&format!("{sid},{band}\n"));
        }
        write(dir.join("labels.csv"), &labels)?;
        ids.push(id.clone());
    }
    Ok(ids)
}
