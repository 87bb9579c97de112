use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchgrade_agents::{sketch_to_srg, AgentError, AuditLog, EndpointConfig, RemoteBackend, ScriptedTransport};
use sketchgrade_core::{ItemSpec, Srg, SrgRole};
use sketchgrade_testkit::replies::{base_reply, mutate_reply, well_formed_reply};

#[test]
fn malformed_replies_never_become_graphs() {
    let item = ItemSpec::from_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/packs/demo/water-dye")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let endpoint = EndpointConfig { retries: 0, ..EndpointConfig::default() };
    let (mut accepted, mut rejected) = (0, 0);
    for case in 0..1000 {
        let mut v = base_reply();
        let content = mutate_reply(&mut rng, &mut v);
        let log = Arc::new(AuditLog::memory());
        let backend = RemoteBackend::with_transport(
            endpoint.clone(),
            Box::new(ScriptedTransport::contents([content.clone()])),
            log.clone(),
        );
        match sketch_to_srg("s", &item, &backend) {
            Ok(p) => {
                accepted += 1;
                assert!(well_formed_reply(&content), "case {case}: accepted {content}");
                assert_eq!(p.srg.role(), SrgRole::Student);
                assert_eq!(Srg::from_json(&p.srg.to_json()).unwrap(), p.srg);
            }
            Err(AgentError::SchemaViolation { .. }) => {
                rejected += 1;
                assert!(!well_formed_reply(&content), "case {case}: rejected a well-formed reply {content}");
            }
            Err(other) => panic!("case {case}: {other:?}"),
        }
        assert_eq!(log.len(), 1);
    }
    assert_eq!(accepted + rejected, 1000);
    assert!(rejected > 800, "only {rejected} rejected");
}
