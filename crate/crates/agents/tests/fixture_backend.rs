mod common;

use common::demo_pack;
use sketchgrade_agents::{
    rubric_to_item, sketch_to_srg, AgentError, BackendConfig, Capabilities, FixtureBackend, PipelineConfig,
    RubricRequest,
};
use sketchgrade_core::{BloomLevel, ItemSpec, Srg};

fn water_dye() -> ItemSpec {
    ItemSpec::from_dir(demo_pack().join("water-dye")).unwrap()
}

fn request(item: &ItemSpec) -> RubricRequest {
    RubricRequest {
        item_id: item.id().into(),
        rubric_text: item.meta.rubric_text.clone(),
        prompt_text: item.meta.prompt.text.clone(),
        image_refs: item.meta.prompt.images.clone(),
    }
}

#[test]
fn rubric_yields_the_shipped_gold_graph() {
    let shipped = water_dye();
    let item = rubric_to_item(&request(&shipped), &FixtureBackend::new(demo_pack())).unwrap();
    assert_eq!(item.gold, shipped.gold);
    assert_eq!(item.meta.highest_bloom, BloomLevel::Analyze);
    assert_eq!(item.meta.highest_bloom.ordinal(), 4);
    assert_eq!(item.phi, shipped.phi);
}

#[test]
fn unknown_rubric_or_missing_capability_is_unavailable() {
    let shipped = water_dye();
    let mut req = request(&shipped);
    req.rubric_text = "Some other rubric".into();
    assert!(matches!(rubric_to_item(&req, &FixtureBackend::new(demo_pack())), Err(AgentError::BackendUnavailable(_))));

    let blind = FixtureBackend::new(demo_pack())
        .with_capabilities(Capabilities { rubric_parsing: false, sketch_perception: true });
    assert!(matches!(rubric_to_item(&request(&shipped), &blind), Err(AgentError::BackendUnavailable(_))));
    let no_eyes = FixtureBackend::new(demo_pack())
        .with_capabilities(Capabilities { rubric_parsing: true, sketch_perception: false });
    assert!(matches!(sketch_to_srg("perceived", &shipped, &no_eyes), Err(AgentError::BackendUnavailable(_))));
}

#[test]
fn sketch_ids_resolve_to_shipped_graphs() {
    let item = water_dye();
    let backend = FixtureBackend::new(demo_pack());
    let shipped =
        Srg::from_json(&std::fs::read_to_string(demo_pack().join("water-dye/samples/perceived.srg.json")).unwrap())
            .unwrap();
    for r in ["perceived", "sketch://water-dye/perceived.png", "water-dye/perceived"] {
        let p = sketch_to_srg(r, &item, &backend).unwrap();
        assert_eq!(p.srg, shipped, "{r}");
        assert!(p.flags.is_empty());
        assert_eq!((p.srg.node_count(), p.srg.edge_count()), (4, 3));
    }
    assert!(matches!(sketch_to_srg("nope", &item, &backend), Err(AgentError::BackendUnavailable(_))));
    assert!(matches!(sketch_to_srg("", &item, &backend), Err(AgentError::BackendUnavailable(_))));
}

#[test]
fn fixture_backend_is_deterministic() {
    let item = water_dye();
    let a = sketch_to_srg("revised", &item, &FixtureBackend::new(demo_pack())).unwrap();
    let b = sketch_to_srg("revised", &item, &FixtureBackend::new(demo_pack())).unwrap();
    assert_eq!(a.srg.to_json(), b.srg.to_json());
}

#[test]
fn pipeline_requires_one_backend() {
    let fixture = BackendConfig::Fixture { root: demo_pack() };
    let other = BackendConfig::Fixture { root: "elsewhere".into() };
    let ok = PipelineConfig { rubric: fixture.clone(), perception: Some(fixture.clone()), audit_log: None };
    assert!(ok.build().is_ok());
    let split = PipelineConfig { rubric: fixture, perception: Some(other), audit_log: None };
    assert!(matches!(split.build(), Err(AgentError::Config(_))));
    let json = r#"{"rubric": {"kind": "remote", "endpoint": {"model": "gpt-4o"}},
                   "perception": {"kind": "remote", "endpoint": {"model": "gpt-4o-mini"}}}"#;
    let cfg: PipelineConfig = serde_json::from_str(json).unwrap();
    assert!(cfg.validate().is_err());
}
