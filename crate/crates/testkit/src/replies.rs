//! Corrupted perception replies and an independent well-formedness check.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const BLOOMS: [&str; 6] = ["Remember", "Understand", "Apply", "Analyze", "Evaluate", "Create"];

pub fn base_reply() -> Value {
    json!({"srg_version": "1", "item_id": "water-dye", "role": "student",
        "nodes": [
            {"id": "a", "concept": "Random_Motion", "bloom": "Apply", "evidence": {"text": "arrows", "region": [0.1, 0.1, 0.3, 0.3]}},
            {"id": "b", "concept": "Dye_Spreading", "bloom": "Apply", "evidence": {"text": "", "region": null}},
            {"id": "c", "concept": "Water_Particle_Room", "bloom": "Remember"}
        ],
        "edges": [
            {"source": "a", "target": "b", "relation": "causes"},
            {"source": "c", "target": "a", "relation": "exhibits", "evidence": {"text": "", "region": null}}
        ]})
}

/// Applies one random corruption to `v` and returns the reply text.
pub fn mutate_reply(rng: &mut ChaCha8Rng, v: &mut Value) -> String {
    let n = v["nodes"].as_array().unwrap().len();
    let ni = rng.random_range(0..n.max(1));
    match rng.random_range(0..16) {
        0 => {
            let k = ["srg_version", "item_id", "role", "nodes", "edges"][rng.random_range(0..5)];
            v.as_object_mut().unwrap().remove(k);
        }
        1 => v["nodes"][ni]["bloom"] = json!(["Synthesize", "remember", "Level 4", "", "4"][rng.random_range(0..5)]),
        2 => v["nodes"][ni]["bloom"] = json!(rng.random_range(0..7)),
        3 => v["nodes"][1]["id"] = json!("a"),
        4 => v["edges"][0]["target"] = json!("zz"),
        5 => v["edges"][0]["target"] = v["edges"][0]["source"].clone(),
        6 => v["role"] = json!(["gold", "teacher", "Student"][rng.random_range(0..3)]),
        7 => v["nodes"][ni]["evidence"] = json!({"text": "x", "region": [0.5, 0.5, 0.2, 0.9]}),
        8 => v["nodes"][ni]["evidence"] = json!({"text": "x", "region": [0.1, 0.1, 1.5, 0.2]}),
        9 => v["nodes"][ni]["evidence"] = json!({"text": "x", "region": [0.1, 0.2]}),
        10 => {
            v["nodes"][ni].as_object_mut().unwrap().insert("confidence".into(), json!(0.9));
        }
        11 => v["edges"] = json!({"source": "a"}),
        12 => {
            let e = v["edges"][0].clone();
            v["edges"].as_array_mut().unwrap().push(e);
        }
        13 => v["nodes"][ni]["concept"] = json!(""),
        14 => {
            let s = v.to_string();
            let cut = rng.random_range(0..s.len());
            return s[..cut].to_string();
        }
        _ => {
            let mut bytes = v.to_string().into_bytes();
            for _ in 0..rng.random_range(1..4) {
                let i = rng.random_range(0..bytes.len());
                let table = b"{}[]\",:x0 ";
                bytes[i] = table[rng.random_range(0..table.len())];
            }
            return String::from_utf8_lossy(&bytes).into_owned();
        }
    }
    v.to_string()
}

/// Independent strict well-formedness check of a student-graph reply for
/// the demo item.
pub fn well_formed_reply(content: &str) -> bool {
    let Ok(v) = serde_json::from_str::<Value>(content) else { return false };
    let Some(nodes) = v["nodes"].as_array() else { return false };
    let Some(edges) = v["edges"].as_array() else { return false };
    if v["role"] != "student" || v["item_id"] != "water-dye" || !v["srg_version"].is_string() {
        return false;
    }
    let only = |x: &Value, allowed: &[&str]| x.as_object().is_some_and(|o| o.keys().all(|k| allowed.contains(&k.as_str())));
    if !only(&v, &["srg_version", "item_id", "role", "nodes", "edges"]) {
        return false;
    }
    for x in nodes.iter().chain(edges) {
        let ev = &x["evidence"];
        if !only(x, &["id", "concept", "bloom", "source", "target", "relation", "evidence"])
            || !(ev.is_null() || only(ev, &["text", "region"]))
        {
            return false;
        }
    }
    let mut ids = HashSet::new();
    for n in nodes {
        let (Some(id), Some(c), Some(b)) = (n["id"].as_str(), n["concept"].as_str(), n["bloom"].as_str()) else {
            return false;
        };
        if c.is_empty() || !BLOOMS.contains(&b) || !ids.insert(id.to_string()) {
            return false;
        }
        if let Some(r) = n["evidence"]["region"].as_array() {
            let r: Vec<f64> = r.iter().filter_map(Value::as_f64).collect();
            if r.len() != 4 || r.iter().any(|x| !(0.0..=1.0).contains(x)) || r[0] > r[2] || r[1] > r[3] {
                return false;
            }
        }
    }
    let mut keys = HashSet::new();
    for e in edges {
        let (Some(s), Some(t), Some(r)) = (e["source"].as_str(), e["target"].as_str(), e["relation"].as_str()) else {
            return false;
        };
        if s == t || !ids.contains(s) || !ids.contains(t) || !keys.insert((s, t, r)) {
            return false;
        }
    }
    true
}
