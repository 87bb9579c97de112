//! Composite similarity, dominant Bloom level, proficiency bands and grid
//! calibration of the score weights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::{best_alignment, f_oa, Alignment, AlignmentParams};
use crate::error::{ParamError, ScoringError};
use crate::ged::{normalizer_z, EditCostModel, EditOp, GedSolver};
use crate::ontology::Ontology;
use crate::srg::{BloomLevel, Srg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    Beginning,
    Developing,
    Proficient,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Beginning, Band::Developing, Band::Proficient];

    pub fn name(self) -> &'static str {
        match self {
            Band::Beginning => "Beginning",
            Band::Developing => "Developing",
            Band::Proficient => "Proficient",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Band, ParamError> {
        Band::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParamError::Invalid(format!("unknown proficiency band {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandThresholds {
    pub t1: f64,
    pub t2: f64,
}

impl Default for BandThresholds {
    fn default() -> Self {
        BandThresholds { t1: 0.5, t2: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau: f64,
    pub band_thresholds: BandThresholds,
    pub alignment: AlignmentParams,
    pub costs: EditCostModel,
    pub solver: GedSolver,
}

impl Default for ScoringParams {
    fn default() -> Self {
        ScoringParams {
            gamma1: 0.5,
            gamma2: 0.5,
            tau: 0.75,
            band_thresholds: BandThresholds::default(),
            alignment: AlignmentParams::default(),
            costs: EditCostModel::default(),
            solver: GedSolver::default(),
        }
    }
}

impl ScoringParams {
    /// Sets `gamma1` and `gamma2 = 1 − gamma1`.
    pub fn with_gamma1(mut self, gamma1: f64) -> ScoringParams {
        self.gamma1 = gamma1;
        self.gamma2 = 1.0 - gamma1;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0) {
            return Err(ParamError::Invalid("gamma1 and gamma2 must be >= 0".into()));
        }
        if (self.gamma1 + self.gamma2 - 1.0).abs() > 1e-9 {
            return Err(ParamError::Invalid(format!(
                "gamma1 + gamma2 must be 1, got {} + {}",
                self.gamma1, self.gamma2
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(ParamError::Invalid(format!("tau = {} outside [0, 1]", self.tau)));
        }
        let BandThresholds { t1, t2 } = self.band_thresholds;
        if !(0.0 <= t1 && t1 <= t2 && t2 <= 1.0) {
            return Err(ParamError::Invalid(format!("band thresholds ({t1}, {t2}) must satisfy 0 <= t1 <= t2 <= 1")));
        }
        self.alignment.validate()?;
        self.costs.validate()?;
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBreakdown {
    pub s: f64,
    pub ged_cost: f64,
    pub z: usize,
    pub f_oa: f64,
    pub alignment: Alignment,
    pub dominant_bloom: Option<BloomLevel>,
    pub band: Band,
    pub ged_exact: bool,
    pub edit_script: Vec<EditOp>,
}

/// `clamp(1 − (gamma1 · ged / z + gamma2 · (1 − f_oa)), 0, 1)`.
pub fn composite(gamma1: f64, gamma2: f64, ged_cost: f64, z: usize, f_oa: f64) -> f64 {
    let s = 1.0 - (gamma1 * ged_cost / z as f64 + gamma2 * (1.0 - f_oa));
    s.clamp(0.0, 1.0)
}

pub fn similarity(gs: &Srg, go: &Srg, o: &Ontology, p: &ScoringParams) -> Result<SimilarityBreakdown, ScoringError> {
    p.validate()?;
    let ged = p.solver.solve(gs, go, &p.costs, o)?;
    let z = normalizer_z(gs, go);
    let alignment = best_alignment(gs.nodes(), go.nodes(), o, &p.alignment);
    let f = f_oa(&alignment, gs.nodes(), go.nodes(), &p.alignment);
    let s = composite(p.gamma1, p.gamma2, ged.cost, z, f);
    Ok(SimilarityBreakdown {
        s,
        ged_cost: ged.cost,
        z,
        f_oa: f,
        dominant_bloom: dominant_bloom(&alignment, gs, s, p.tau),
        band: band(s, p),
        alignment,
        ged_exact: ged.exact,
        edit_script: ged.script,
    })
}

/// Most frequent Bloom level among aligned student nodes, reported only when
/// `s > tau`. Ties go to the lowest level.
pub fn dominant_bloom(a: &Alignment, gs: &Srg, s: f64, tau: f64) -> Option<BloomLevel> {
    if s <= tau {
        return None;
    }
    let mut counts = [0usize; 6];
    for pair in &a.pairs {
        if let Some(node) = gs.node(&pair.student) {
            counts[usize::from(node.bloom.ordinal()) - 1] += 1;
        }
    }
    let max = *counts.iter().max()?;
    if max == 0 {
        return None;
    }
    let idx = counts.iter().position(|&c| c == max)?;
    BloomLevel::from_ordinal(idx as u8 + 1)
}

pub fn band(s: f64, p: &ScoringParams) -> Band {
    band_for(s, &p.band_thresholds)
}

pub fn band_for(s: f64, t: &BandThresholds) -> Band {
    if s < t.t1 {
        Band::Beginning
    } else if s < t.t2 {
        Band::Developing
    } else {
        Band::Proficient
    }
}

/// One human-labeled student graph with its item context.
#[derive(Debug, Clone, Copy)]
pub struct LabeledPair<'a> {
    pub student: &'a Srg,
    pub gold: &'a Srg,
    pub ontology: &'a Ontology,
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub gamma1: Vec<f64>,
    /// `None` keeps the base alpha fixed.
    pub alpha: Option<Vec<f64>>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid { gamma1: (0..=20).map(|k| f64::from(k) / 20.0).collect(), alpha: None }
    }
}

/// Grid search maximizing banding accuracy. Ties prefer gamma1 closest to
/// 0.5, then the smaller gamma1, then alpha closest to the base alpha, then
/// the smaller alpha.
pub fn calibrate(
    records: &[LabeledPair<'_>],
    base: &ScoringParams,
    grid: &CalibrationGrid,
) -> Result<ScoringParams, ScoringError> {
    if records.is_empty() {
        return Err(ScoringError::EmptyTrainingSet);
    }
    base.validate()?;
    if grid.gamma1.is_empty() || grid.gamma1.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(ParamError::Invalid("gamma1 grid must be nonempty and inside [0, 1]".into()).into());
    }
    let alphas = grid.alpha.clone().unwrap_or_else(|| vec![base.alignment.alpha]);
    if alphas.is_empty() || alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(ParamError::Invalid("alpha grid must be nonempty and inside [0, 1]".into()).into());
    }

    // Edit distance does not depend on alpha or gamma, so it is computed once.
    let mut geds = Vec::with_capacity(records.len());
    for r in records {
        let ged = base.solver.solve(r.student, r.gold, &base.costs, r.ontology)?;
        geds.push((ged.cost, normalizer_z(r.student, r.gold)));
    }

    let mut best: Option<(usize, f64, f64)> = None;
    for &alpha in &alphas {
        let ap = AlignmentParams { alpha, ..base.alignment };
        let foas: Vec<f64> = records
            .iter()
            .map(|r| {
                let a = best_alignment(r.student.nodes(), r.gold.nodes(), r.ontology, &ap);
                f_oa(&a, r.student.nodes(), r.gold.nodes(), &ap)
            })
            .collect();
        for &g1 in &grid.gamma1 {
            let correct = records
                .iter()
                .zip(&geds)
                .zip(&foas)
                .filter(|((r, (ged, z)), foa)| {
                    band_for(composite(g1, 1.0 - g1, *ged, *z, **foa), &base.band_thresholds) == r.band
                })
                .count();
            let better = match best {
                None => true,
                Some((bc, bg, ba)) => {
                    let key = |c: usize, g: f64, a: f64| {
                        (std::cmp::Reverse(c), (g - 0.5).abs(), g, (a - base.alignment.alpha).abs(), a)
                    };
                    key(correct, g1, alpha).partial_cmp(&key(bc, bg, ba)) == Some(std::cmp::Ordering::Less)
                }
            };
            if better {
                best = Some((correct, g1, alpha));
            }
        }
    }
    let (_, g1, alpha) = best.expect("grids are nonempty");
    let mut out = base.with_gamma1(g1);
    out.alignment.alpha = alpha;
    Ok(out)
}

/// Fraction of records whose predicted band equals the label.
pub fn banding_accuracy(records: &[LabeledPair<'_>], p: &ScoringParams) -> Result<f64, ScoringError> {
    if records.is_empty() {
        return Err(ScoringError::EmptyTrainingSet);
    }
    let mut correct = 0;
    for r in records {
        if similarity(r.student, r.gold, r.ontology, p)?.band == r.band {
            correct += 1;
        }
    }
    Ok(correct as f64 / records.len() as f64)
}
