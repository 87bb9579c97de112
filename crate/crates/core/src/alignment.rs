//! Ontology-weighted one-to-one node alignment between a student graph and a
//! gold graph, and the normalized alignment score built from it.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::numeric::{fsum, min_cost_assignment};
use crate::ontology::Ontology;
use crate::srg::SrgNode;

/// Objective values closer than this are treated as tied; the id-order
/// tie-break decides between them.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OaNorm {
    /// Divide by `max(|Vs|, |Vo|)`; identical graphs score 1.
    #[default]
    Max,
    /// Divide by `|Vs| + |Vo|`, the literal total node count.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentParams {
    pub alpha: f64,
    pub w_min: f64,
    pub oa_norm: OaNorm,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams { alpha: 0.5, w_min: 0.3, oa_norm: OaNorm::Max }
    }
}

impl AlignmentParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ParamError::Invalid(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.w_min) {
            return Err(ParamError::Invalid(format!("w_min = {} outside [0, 1]", self.w_min)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub student: String,
    pub gold: String,
    pub weight: f64,
}

/// A partial one-to-one matching, pairs sorted by student id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
}

impl Alignment {
    pub fn total_weight(&self) -> f64 {
        fsum(self.pairs.iter().map(|p| p.weight))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn gold_for(&self, student: &str) -> Option<&AlignedPair> {
        self.pairs.iter().find(|p| p.student == student)
    }

    pub fn student_for(&self, gold: &str) -> Option<&AlignedPair> {
        self.pairs.iter().find(|p| p.gold == gold)
    }
}

/// `alpha · sim(concepts) + (1 − alpha) · [same Bloom level]`.
pub fn pair_weight(vs: &SrgNode, vo: &SrgNode, o: &Ontology, p: &AlignmentParams) -> f64 {
    let sim = o.similarity_or_zero(&vs.concept, &vo.concept);
    let same_bloom = if vs.bloom == vo.bloom { 1.0 } else { 0.0 };
    p.alpha * sim + (1.0 - p.alpha) * same_bloom
}

/// Maximum-weight one-to-one matching over admissible pairs (weight at least
/// `w_min` and strictly positive). Unmatched nodes are allowed.
///
/// Among matchings whose total is within [`TIE_EPSILON`] of the optimum, the
/// one chosen is lexicographically smallest when students are visited in id
/// order and each takes the smallest gold id still admitting an optimal
/// completion; leaving a student unmatched ranks after every gold id.
pub fn best_alignment(
    vs: &[SrgNode],
    vo: &[SrgNode],
    o: &Ontology,
    p: &AlignmentParams,
) -> Alignment {
    let mut students: Vec<&SrgNode> = vs.iter().collect();
    let mut golds: Vec<&SrgNode> = vo.iter().collect();
    students.sort_by(|a, b| a.id.cmp(&b.id));
    golds.sort_by(|a, b| a.id.cmp(&b.id));
    let (ns, no) = (students.len(), golds.len());
    if ns == 0 || no == 0 {
        return Alignment::default();
    }

    let mut weight = vec![0.0; ns * no];
    for (i, s) in students.iter().enumerate() {
        for (j, g) in golds.iter().enumerate() {
            let w = pair_weight(s, g, o, p);
            if w >= p.w_min && w > 0.0 {
                weight[i * no + j] = w;
            }
        }
    }

    let optimum = residual_optimum(&weight, no, &(0..ns).collect::<Vec<_>>(), &vec![true; no]);

    let mut available = vec![true; no];
    let mut fixed: Vec<f64> = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..ns {
        let rest: Vec<usize> = (i + 1..ns).collect();
        for j in 0..no {
            let w = weight[i * no + j];
            if !available[j] || w <= 0.0 {
                continue;
            }
            available[j] = false;
            let completion = residual_optimum(&weight, no, &rest, &available);
            let total = fsum(fixed.iter().copied().chain([w, completion]));
            if total >= optimum - TIE_EPSILON {
                fixed.push(w);
                pairs.push(AlignedPair {
                    student: students[i].id.clone(),
                    gold: golds[j].id.clone(),
                    weight: w,
                });
                break;
            }
            available[j] = true;
        }
    }
    Alignment { pairs }
}

/// Optimal total weight when only `rows` and the `available` gold columns
/// remain.
fn residual_optimum(weight: &[f64], no: usize, rows: &[usize], available: &[bool]) -> f64 {
    let cols: Vec<usize> = (0..no).filter(|&j| available[j]).collect();
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in rows {
        for &j in &cols {
            cost.push(-weight[i * no + j]);
        }
    }
    let (_, total) = min_cost_assignment(&cost, rows.len(), cols.len());
    -total
}

/// Total aligned weight normalized by the configured node count. Two empty
/// graphs align perfectly.
pub fn f_oa(a: &Alignment, vs: &[SrgNode], vo: &[SrgNode], p: &AlignmentParams) -> f64 {
    let denom = match p.oa_norm {
        OaNorm::Max => vs.len().max(vo.len()),
        OaNorm::Sum => vs.len() + vo.len(),
    };
    if denom == 0 {
        return 1.0;
    }
    a.total_weight() / denom as f64
}
