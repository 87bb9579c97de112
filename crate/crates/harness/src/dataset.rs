//! Pack layout: `<root>/<item_id>/{item.json, ontology.json, gold.srg.json,
//! phi.json, labels.csv, samples/<sample_id>.srg.json}`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sketchgrade_core::{Band, ItemError, ItemSpec, Srg, SrgRole};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub sample_id: String,
    pub student: Srg,
    pub human_band: Band,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub items: Vec<ItemSpec>,
    pub samples: BTreeMap<String, Vec<LabeledSample>>,
    /// One line per skipped sample.
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn sample_count(&self) -> usize {
        self.samples.values().map(Vec::len).sum()
    }

    pub fn item(&self, id: &str) -> Option<&ItemSpec> {
        self.items.iter().find(|i| i.id() == id)
    }
}

pub fn load_item(dir: &Path) -> Result<ItemSpec, HarnessError> {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for f in ["item.json", "ontology.json", "gold.srg.json", "phi.json"] {
        if !dir.join(f).is_file() {
            return Err(HarnessError::Layout(format!("{}: missing {f}", dir.display())));
        }
    }
    let item = ItemSpec::from_dir(dir).map_err(|source| HarnessError::SpecValidation { item: name.clone(), source })?;
    if item.id() != name {
        return Err(HarnessError::SpecValidation {
            item: name.clone(),
            source: ItemError::Invalid(format!("directory {name:?} holds item {:?}", item.id())),
        });
    }
    Ok(item)
}

/// Loads every item directory under `root`. An invalid item fails the whole
/// load; an unreadable or invalid sample is skipped with a warning.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset, HarnessError> {
    let root = root.as_ref();
    let entries = fs::read_dir(root).map_err(|e| HarnessError::Layout(format!("{}: {e}", root.display())))?;
    let mut dirs: Vec<_> = entries.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(HarnessError::Layout(format!("{}: no item directories", root.display())));
    }
    let mut ds = Dataset::default();
    for dir in dirs {
        let item = load_item(&dir)?;
        let samples = load_samples(&dir, &item, &mut ds.warnings)?;
        ds.samples.insert(item.id().to_string(), samples);
        ds.items.push(item);
    }
    for w in &ds.warnings {
        log::warn!("{w}");
    }
    Ok(ds)
}

fn load_samples(dir: &Path, item: &ItemSpec, warnings: &mut Vec<String>) -> Result<Vec<LabeledSample>, HarnessError> {
    let labels = dir.join("labels.csv");
    let mut rdr = csv::Reader::from_path(&labels)
        .map_err(|e| HarnessError::Layout(format!("{}: {e}", labels.display())))?;
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let warn = |msg: String| format!("{} row {}: {msg}", labels.display(), line + 2);
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                warnings.push(warn(e.to_string()));
                continue;
            }
        };
        let (Some(sid), Some(band)) = (row.get(0), row.get(1)) else {
            warnings.push(warn("expected sample_id,band".into()));
            continue;
        };
        let human_band = match band.trim().parse::<Band>() {
            Ok(b) => b,
            Err(e) => {
                warnings.push(warn(e.to_string()));
                continue;
            }
        };
        let path = dir.join("samples").join(format!("{}.srg.json", sid.trim()));
        let student = match fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| Srg::from_json(&t).map_err(|e| e.to_string())) {
            Ok(g) => g,
            Err(e) => {
                warnings.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        if student.role() != SrgRole::Student || student.item_id() != item.id() {
            warnings.push(format!("{}: not a student graph for item {}", path.display(), item.id()));
            continue;
        }
        out.push(LabeledSample { sample_id: sid.trim().to_string(), student, human_band });
    }
    out.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(out)
}
