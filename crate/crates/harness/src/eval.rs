//! Batch scoring against human bands.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sketchgrade_core::numeric::fsum;
use sketchgrade_core::scoring::{CalibrationGrid, LabeledPair};
use sketchgrade_core::{calibrate, similarity, Band, ItemSpec, ScoringParams};

use crate::dataset::{Dataset, LabeledSample};
use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub item_id: String,
    pub sample_id: String,
    pub human: Band,
    /// `None` when scoring failed; the sample then counts as incorrect.
    pub predicted: Option<Band>,
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SamplePrediction {
    pub fn correct(&self) -> bool {
        self.predicted == Some(self.human)
    }
}

/// `confusion[item][human][predicted]`, bands indexed Beginning,
/// Developing, Proficient.
pub type Confusion = [[usize; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Item ids in table order.
    pub items: Vec<String>,
    pub per_item: BTreeMap<String, f64>,
    pub macro_average: f64,
    pub confusion: BTreeMap<String, Confusion>,
    pub predictions: Vec<SamplePrediction>,
}

/// Orders item ids by their first number, then by id, so that R1-1, J2-1,
/// ..., J6-1 come out in level order.
pub fn table_order(ids: &mut [String]) {
    let num = |s: &str| -> u64 {
        let digits: String = s.chars().skip_while(|c| !c.is_ascii_digit()).take_while(char::is_ascii_digit).collect();
        digits.parse().unwrap_or(u64::MAX)
    };
    ids.sort_by(|a, b| num(a).cmp(&num(b)).then_with(|| a.cmp(b)));
}

impl EvalResult {
    /// Result built from per-item accuracies alone (no predictions).
    pub fn from_accuracies<S: Into<String>>(acc: impl IntoIterator<Item = (S, f64)>) -> EvalResult {
        let per_item: BTreeMap<String, f64> = acc.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let mut items: Vec<String> = per_item.keys().cloned().collect();
        table_order(&mut items);
        let macro_average = mean(per_item.values().copied());
        EvalResult { items, per_item, macro_average, confusion: BTreeMap::new(), predictions: Vec::new() }
    }
}

fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        0.0
    } else {
        fsum(values) / n as f64
    }
}

/// Scores every sample with its item's parameters. The outcome does not
/// depend on `parallelism` or on input order: predictions are sorted by
/// item and sample id before reduction.
pub fn evaluate(items: &[ItemSpec], samples: &BTreeMap<String, Vec<LabeledSample>>, parallelism: usize) -> EvalResult {
    let by_id: BTreeMap<&str, &ItemSpec> = items.iter().map(|i| (i.id(), i)).collect();
    let jobs: Vec<(&ItemSpec, &LabeledSample)> = samples
        .iter()
        .filter_map(|(id, ss)| by_id.get(id.as_str()).map(|item| (*item, ss)))
        .flat_map(|(item, ss)| ss.iter().map(move |s| (item, s)))
        .collect();
    let score = |(item, s): &(&ItemSpec, &LabeledSample)| {
        let r = similarity(&s.student, &item.gold, &item.ontology, item.scoring());
        if let Err(e) = &r {
            log::warn!("{}/{}: {e}", item.id(), s.sample_id);
        }
        SamplePrediction {
            item_id: item.id().to_string(),
            sample_id: s.sample_id.clone(),
            human: s.human_band,
            predicted: r.as_ref().ok().map(|b| b.band),
            s: r.as_ref().ok().map(|b| b.s),
            error: r.err().map(|e| e.to_string()),
        }
    };
    let mut predictions: Vec<SamplePrediction> = match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(|| jobs.par_iter().map(score).collect()),
        Err(_) => jobs.iter().map(score).collect(),
    };
    predictions.sort_by(|a, b| (&a.item_id, &a.sample_id).cmp(&(&b.item_id, &b.sample_id)));

    let mut per_item = BTreeMap::new();
    let mut confusion: BTreeMap<String, Confusion> = BTreeMap::new();
    let mut totals: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for p in &predictions {
        let t = totals.entry(p.item_id.clone()).or_default();
        t.1 += 1;
        if p.correct() {
            t.0 += 1;
        }
        if let Some(pred) = p.predicted {
            confusion.entry(p.item_id.clone()).or_default()[p.human.index()][pred.index()] += 1;
        }
    }
    for (id, (correct, total)) in &totals {
        per_item.insert(id.clone(), *correct as f64 / *total as f64);
    }
    let mut items: Vec<String> = per_item.keys().cloned().collect();
    table_order(&mut items);
    let macro_average = mean(per_item.values().copied());
    EvalResult { items, per_item, macro_average, confusion, predictions }
}

/// Grid-search calibration over every labeled sample in the pack, starting
/// from `base`.
pub fn calibrate_dataset(ds: &Dataset, base: &ScoringParams, grid: &CalibrationGrid) -> Result<ScoringParams, HarnessError> {
    let records: Vec<LabeledPair<'_>> = ds
        .items
        .iter()
        .flat_map(|item| {
            ds.samples.get(item.id()).into_iter().flatten().map(move |s| LabeledPair {
                student: &s.student,
                gold: &item.gold,
                ontology: &item.ontology,
                band: s.human_band,
            })
        })
        .collect();
    Ok(calibrate(&records, base, grid)?)
}
