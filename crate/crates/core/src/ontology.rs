//! Per-item concept hierarchy and the Wu-Palmer taxonomy similarity.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::OntologyError;

/// A rooted concept tree plus the relation vocabulary of one item.
///
/// Parents and depths are resolved once at construction; all queries are
/// read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    root: usize,
    concepts: Vec<String>,
    index: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    depth: Vec<u32>,
    relations: BTreeSet<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyDocument {
    root: String,
    concepts: Vec<ConceptEntry>,
    relations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptEntry {
    id: String,
    parent: Option<String>,
}

impl Ontology {
    /// Builds an ontology from `(concept, parent)` pairs.
    pub fn new<C, P, R>(
        root: &str,
        concepts: impl IntoIterator<Item = (C, Option<P>)>,
        relations: impl IntoIterator<Item = R>,
    ) -> Result<Ontology, OntologyError>
    where
        C: Into<String>,
        P: Into<String>,
        R: Into<String>,
    {
        let entries: Vec<(String, Option<String>)> =
            concepts.into_iter().map(|(c, p)| (c.into(), p.map(Into::into))).collect();

        let mut index = HashMap::with_capacity(entries.len());
        for (i, (id, _)) in entries.iter().enumerate() {
            if id.is_empty() {
                return Err(OntologyError::Schema("concept ids must be nonempty".into()));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(OntologyError::Schema(format!("duplicate concept {id:?}")));
            }
        }

        let mut parent = Vec::with_capacity(entries.len());
        for (id, p) in &entries {
            match p {
                None => parent.push(None),
                Some(p) => {
                    let pi = *index.get(p).ok_or_else(|| {
                        OntologyError::Schema(format!("concept {id:?} has unknown parent {p:?}"))
                    })?;
                    parent.push(Some(pi));
                }
            }
        }

        let n = entries.len();
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent[cur] {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(OntologyError::Cycle(entries[start].0.clone()));
                }
            }
        }

        let roots: Vec<String> = entries
            .iter()
            .zip(&parent)
            .filter(|(_, p)| p.is_none())
            .map(|((id, _), _)| id.clone())
            .collect();
        if roots.len() != 1 {
            return Err(OntologyError::MultipleRoots(roots));
        }
        if roots[0] != root {
            return Err(OntologyError::Schema(format!(
                "declared root {root:?} but the parentless concept is {:?}",
                roots[0]
            )));
        }
        let root = index[root];

        let depth = (0..n)
            .map(|i| {
                let mut d = 0;
                let mut cur = i;
                while let Some(p) = parent[cur] {
                    cur = p;
                    d += 1;
                }
                d
            })
            .collect();

        let relations: BTreeSet<String> = relations.into_iter().map(Into::into).collect();
        if relations.iter().any(String::is_empty) {
            return Err(OntologyError::Schema("relation labels must be nonempty".into()));
        }

        Ok(Ontology {
            root,
            concepts: entries.into_iter().map(|(id, _)| id).collect(),
            index,
            parent,
            depth,
            relations,
        })
    }

    pub fn from_json(document: &str) -> Result<Ontology, OntologyError> {
        load_ontology(document)
    }

    pub fn to_json(&self) -> String {
        let doc = OntologyDocument {
            root: self.concepts[self.root].clone(),
            concepts: self
                .concepts
                .iter()
                .zip(&self.parent)
                .map(|(id, p)| ConceptEntry {
                    id: id.clone(),
                    parent: p.map(|p| self.concepts[p].clone()),
                })
                .collect(),
            relations: self.relations.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&doc).expect("ontology documents always serialize")
    }

    pub fn root(&self) -> &str {
        &self.concepts[self.root]
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(String::as_str)
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.index.contains_key(concept)
    }

    pub fn has_relation(&self, relation: &str) -> bool {
        self.relations.contains(relation)
    }

    fn idx(&self, concept: &str) -> Result<usize, OntologyError> {
        self.index
            .get(concept)
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept(concept.to_string()))
    }

    pub fn parent(&self, concept: &str) -> Result<Option<&str>, OntologyError> {
        let i = self.idx(concept)?;
        Ok(self.parent[i].map(|p| self.concepts[p].as_str()))
    }

    pub fn depth(&self, concept: &str) -> Result<u32, OntologyError> {
        Ok(self.depth[self.idx(concept)?])
    }

    /// Deepest common ancestor of `a` and `b` (a concept is its own ancestor).
    pub fn lca(&self, a: &str, b: &str) -> Result<&str, OntologyError> {
        let (a, b) = (self.idx(a)?, self.idx(b)?);
        Ok(&self.concepts[self.lca_idx(a, b)])
    }

    fn lca_idx(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has a parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has a parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root has a parent");
            b = self.parent[b].expect("non-root has a parent");
        }
        a
    }

    /// Wu-Palmer similarity `2·depth(lca) / (depth(a) + depth(b))`, with
    /// `similarity(x, x) = 1` (including the root).
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64, OntologyError> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        if ia == ib {
            return Ok(1.0);
        }
        let denom = self.depth[ia] + self.depth[ib];
        // a != b means at least one of them is below the root, so denom > 0.
        let lca = self.lca_idx(ia, ib);
        Ok(f64::from(2 * self.depth[lca]) / f64::from(denom))
    }

    /// Scoring-time similarity: concepts missing from the ontology score 0
    /// against everything. Validation reports them separately.
    pub fn similarity_or_zero(&self, a: &str, b: &str) -> f64 {
        self.similarity(a, b).unwrap_or(0.0)
    }
}

pub fn load_ontology(document: &str) -> Result<Ontology, OntologyError> {
    let doc: OntologyDocument =
        serde_json::from_str(document).map_err(|e| OntologyError::Schema(e.to_string()))?;
    Ontology::new(
        &doc.root,
        doc.concepts.into_iter().map(|c| (c.id, c.parent)),
        doc.relations,
    )
}

pub fn sim_o(o: &Ontology, a: &str, b: &str) -> Result<f64, OntologyError> {
    o.similarity(a, b)
}

pub fn lca<'o>(o: &'o Ontology, a: &str, b: &str) -> Result<&'o str, OntologyError> {
    o.lca(a, b)
}
