use std::fs;
use std::path::{Path, PathBuf};

use sketchgrade_harness::{generate_pack, load_dataset, load_item, HarnessError, SyntheticConfig};

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/packs/synthetic")
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dest = to.join(e.file_name());
        if e.path().is_dir() {
            copy_dir(&e.path(), &dest);
        } else {
            fs::copy(e.path(), dest).unwrap();
        }
    }
}

fn tree(root: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read_to_string(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn shipped_pack_loads_completely() {
    let ds = load_dataset(shipped()).unwrap();
    assert_eq!(ds.items.len(), 6);
    assert_eq!(ds.sample_count(), 180);
    assert!(ds.warnings.is_empty());
    assert!(ds.samples.values().all(|s| s.len() == 30));
}

#[test]
fn empty_directory_is_a_layout_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(HarnessError::Layout(_))));
    assert!(matches!(load_dataset(dir.path().join("absent")), Err(HarnessError::Layout(_))));
}

#[test]
fn corrupt_sample_is_skipped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&shipped(), dir.path());
    fs::write(dir.path().join("M3-1/samples/s007.srg.json"), "{\"nodes\": [").unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.sample_count(), 179);
    assert_eq!(ds.warnings.len(), 1);
    assert!(ds.warnings[0].contains("s007"));
}

#[test]
fn missing_hint_template_fails_the_load() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&shipped(), dir.path());
    let phi_path = dir.path().join("J2-1/phi.json");
    let mut phi: serde_json::Value = serde_json::from_str(&fs::read_to_string(&phi_path).unwrap()).unwrap();
    let first = phi.as_object().unwrap().keys().next().unwrap().clone();
    phi.as_object_mut().unwrap().remove(&first);
    fs::write(&phi_path, phi.to_string()).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(matches!(
        err,
        HarnessError::SpecValidation { ref item, source: sketchgrade_core::ItemError::IncompleteMapping(_) } if item == "J2-1"
    ));
}

#[test]
fn directory_name_must_match_item() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&shipped().join("R1-1"), &dir.path().join("renamed"));
    assert!(matches!(load_item(&dir.path().join("renamed")), Err(HarnessError::SpecValidation { .. })));
}

#[test]
fn regenerating_reproduces_the_shipped_pack() {
    let dir = tempfile::tempdir().unwrap();
    generate_pack(dir.path(), &SyntheticConfig::default()).unwrap();
    assert_eq!(tree(dir.path()), tree(&shipped()));
}
