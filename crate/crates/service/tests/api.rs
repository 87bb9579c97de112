use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sketchgrade_core::{similarity, ItemSpec, Srg};
use sketchgrade_service::{router, AppState, ServiceConfig};
use tower::ServiceExt;

const PACK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/packs/demo/water-dye");

fn demo() -> ItemSpec {
    ItemSpec::from_dir(PACK).unwrap()
}

fn sample(name: &str) -> Value {
    let text = std::fs::read_to_string(format!("{PACK}/samples/{name}.srg.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn app_with(config: ServiceConfig) -> Router {
    router(AppState::new([demo()], config).unwrap())
}

fn app() -> Router {
    app_with(ServiceConfig { token: Some("teacher-secret".into()), ..ServiceConfig::default() })
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(uri: &str, body: impl Into<Body>) -> Request<Body> {
    Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(body.into()).unwrap()
}

async fn create(app: &Router, initial: Option<Value>) -> Value {
    let mut body = json!({"item_id": "water-dye"});
    if let Some(g) = initial {
        body["initial"] = g;
    }
    let (status, v) = send(app, post("/api/sessions", body.to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v
}

#[tokio::test]
async fn lists_items() {
    let (status, v) = send(&app(), get("/api/items")).await;
    assert_eq!(status, StatusCode::OK);
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0]["item_id"], "water-dye");
}

#[tokio::test]
async fn gold_is_withheld_without_token() {
    let app = app();
    let (status, v) = send(&app, get("/api/items/water-dye")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(v.get("gold").is_none() && v.get("phi").is_none());
    assert_eq!(v["ontology"]["root"], "Particle_Model");

    let (_, v) = send(&app, get("/api/items/water-dye?include_gold=true")).await;
    assert!(v.get("gold").is_none());

    let wrong = Request::get("/api/items/water-dye?include_gold=true")
        .header(header::AUTHORIZATION, "Bearer nope")
        .body(Body::empty())
        .unwrap();
    assert!(send(&app, wrong).await.1.get("gold").is_none());

    let ok = Request::get("/api/items/water-dye?include_gold=true")
        .header(header::AUTHORIZATION, "Bearer teacher-secret")
        .body(Body::empty())
        .unwrap();
    let (_, v) = send(&app, ok).await;
    assert_eq!(v["gold"]["nodes"].as_array().unwrap().len(), 7);
    assert!(v["phi"].is_object());
}

#[tokio::test]
async fn no_token_configured_never_reveals_gold() {
    let app = app_with(ServiceConfig::default());
    let req = Request::get("/api/items/water-dye?include_gold=true")
        .header(header::AUTHORIZATION, "Bearer ")
        .body(Body::empty())
        .unwrap();
    assert!(send(&app, req).await.1.get("gold").is_none());
}

#[tokio::test]
async fn score_matches_in_process_result() {
    let item = demo();
    for name in ["perceived", "revised", "complete"] {
        let g = sample(name);
        let (status, v) = send(&app(), post("/api/items/water-dye/score", g.to_string())).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        let gs = Srg::from_value(g).unwrap();
        let local = similarity(&gs, &item.gold, &item.ontology, item.scoring()).unwrap();
        assert_eq!(v, serde_json::to_value(&local).unwrap(), "{name}");
    }
    let (_, v) = send(&app(), post("/api/items/water-dye/score", sample("perceived").to_string())).await;
    assert_eq!(v["band"], "Developing");
}

#[tokio::test]
async fn feedback_returns_report_and_overlay() {
    let (status, v) = send(
        &app(),
        post("/api/items/water-dye/feedback?w=1000&h=400", sample("perceived").to_string()),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let hints = v["hints"].as_array().unwrap();
    let repairs = hints.iter().filter(|h| !h["id"].as_str().unwrap().starts_with("extraneous")).count();
    assert_eq!(repairs, 3);
    assert_eq!(hints[0]["overlay_ops"][0]["kind"], "marker");
    assert!(v["report"].is_object());
    let rect = &v["overlay"][0];
    assert_eq!(rect["op"], "rect");
    assert_eq!([&rect["x0"], &rect["y0"], &rect["x1"], &rect["y1"]], [20, 40, 320, 360].map(|x| json!(x)).each_ref());
}

#[tokio::test]
async fn malformed_graphs_are_rejected() {
    let app = app();
    for body in ["not json", "{}", r#"{"srg_version":"1","item_id":"water-dye","role":"student","nodes":[],"edges":[{"source":"a","target":"b","relation":"causes"}]}"#] {
        let (status, v) = send(&app, post("/api/items/water-dye/score", body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(v["error"]["code"], "schema_violation");
    }
    let mut gold_role = sample("complete");
    gold_role["role"] = json!("gold");
    let (status, _) = send(&app, post("/api/items/water-dye/score", gold_role.to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = app();
    assert_eq!(send(&app, get("/api/items/nope")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(send(&app, post("/api/items/nope/score", sample("perceived").to_string())).await.0, StatusCode::NOT_FOUND);
    assert_eq!(send(&app, get("/api/sessions/nope")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(send(&app, get("/api/sessions/nope/trace")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn oversized_graphs_are_413() {
    let app = app_with(ServiceConfig { max_nodes: 4, ..ServiceConfig::default() });
    assert_eq!(send(&app, post("/api/items/water-dye/score", sample("perceived").to_string())).await.0, StatusCode::OK);
    let (status, v) = send(&app, post("/api/items/water-dye/score", sample("revised").to_string())).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(v["error"]["code"], "too_large");

    let small = app_with(ServiceConfig { max_body_bytes: 64, ..ServiceConfig::default() });
    let (status, _) = send(&small, post("/api/items/water-dye/score", sample("perceived").to_string())).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn three_steps_raise_similarity_and_terminate() {
    let journal = tempfile_path();
    let app = app_with(ServiceConfig { journal: Some(journal.clone()), ..ServiceConfig::default() });
    let s = create(&app, None).await;
    let sid = s["session_id"].as_str().unwrap().to_string();
    assert_eq!(s["t"], 0);
    assert_eq!(s["terminated"], false);

    let mut last = s["breakdown"]["s"].as_f64().unwrap();
    for (t, name) in ["perceived", "revised", "complete"].into_iter().enumerate() {
        let body = json!({"t": t, "srg": sample(name)});
        let (status, v) = send(&app, post(&format!("/api/sessions/{sid}/step"), body.to_string())).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        assert_eq!(v["t"], t + 1);
        let s = v["breakdown"]["s"].as_f64().unwrap();
        assert!(s >= last, "{s} < {last}");
        last = s;
    }
    assert_eq!(last, 1.0);

    let (_, trace) = send(&app, get(&format!("/api/sessions/{sid}/trace"))).await;
    assert_eq!(trace["iterations"].as_array().unwrap().len(), 4);
    assert_eq!(trace["terminated_by"], "threshold_met");

    let (status, v) = send(&app, post(&format!("/api/sessions/{sid}/step"), json!({"srg": sample("complete")}).to_string())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["state"]["t"], 3);

    let (_, view) = send(&app, get(&format!("/api/sessions/{sid}"))).await;
    assert_eq!(view["terminated"], true);

    let lines = std::fs::read_to_string(&journal).unwrap();
    let events: Vec<Value> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.len(), 4);
    assert!(events.iter().all(|e| e["session_id"] == sid.as_str()));
    std::fs::remove_file(journal).ok();
}

#[tokio::test]
async fn session_stops_at_t_max() {
    let app = app();
    let s = create(&app, Some(sample("perceived"))).await;
    let sid = s["session_id"].as_str().unwrap();
    let t_max = s["t_max"].as_u64().unwrap() as usize;
    for t in 1..=t_max {
        let (status, v) = send(&app, post(&format!("/api/sessions/{sid}/step"), json!({"srg": sample("perceived")}).to_string())).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v["terminated"], t == t_max);
    }
    let (_, trace) = send(&app, get(&format!("/api/sessions/{sid}/trace"))).await;
    assert_eq!(trace["terminated_by"], "max_iterations");
    assert_eq!(trace["iterations"].as_array().unwrap().len(), t_max + 1);
}

#[tokio::test]
async fn stale_step_is_conflict() {
    let app = app();
    let s = create(&app, None).await;
    let sid = s["session_id"].as_str().unwrap();
    let (status, v) = send(&app, post(&format!("/api/sessions/{sid}/step"), json!({"t": 2, "srg": sample("perceived")}).to_string())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["state"]["t"], 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_steps_on_same_iteration() {
    let app = app();
    for _ in 0..10 {
        let s = create(&app, None).await;
        let sid = s["session_id"].as_str().unwrap().to_string();
        let body = json!({"t": 0, "srg": sample("perceived")}).to_string();
        let a = tokio::spawn({
            let (app, uri, body) = (app.clone(), format!("/api/sessions/{sid}/step"), body.clone());
            async move { send(&app, post(&uri, body)).await.0 }
        });
        let b = tokio::spawn({
            let (app, uri) = (app.clone(), format!("/api/sessions/{sid}/step"));
            async move { send(&app, post(&uri, body)).await.0 }
        });
        let mut got = [a.await.unwrap(), b.await.unwrap()];
        got.sort();
        assert_eq!(got, [StatusCode::OK, StatusCode::CONFLICT]);
        let (_, trace) = send(&app, get(&format!("/api/sessions/{sid}/trace"))).await;
        assert_eq!(trace["iterations"].as_array().unwrap().len(), 2);
    }
}

fn tempfile_path() -> std::path::PathBuf {
    std::env::temp_dir().join(format!("sketchgrade-journal-{}.ndjson", std::process::id()))
}
