use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use voxaug_cli::server::{router, AppState};
use voxaug_core::io::{load_manifest, read_volume, save_manifest, write_volume, Laterality, Manifest, Record, RecordKind};
use voxaug_core::pipeline::{augmentation_config_schema, AugmentationConfig};
use voxaug_core::preview::{slice_png, window_u8, PreviewService};
use voxaug_core::remap::{apply_remap, generate_remap_curve, RemapConfig};
use voxaug_core::rng::stream;
use voxaug_core::style::BackendSpec;
use voxaug_core::volume::Axis;
use voxaug_core::Volume;

fn phantom() -> Volume {
    Volume::from_fn([16, 12, 10], [2.0; 3], |x, y, z| ((x * 5 + y * 3 + z * 7) % 23) as f32 * 2.5 + 1.0).unwrap()
}

fn app(workspace: &Path) -> axum::Router {
    let m = Manifest::new(vec![Record::new("p", "p.vaug", RecordKind::Image, "s", Laterality::Left, "T1W")]);
    let service = PreviewService::from_volumes(m, BTreeMap::from([("p".to_string(), phantom())]), BackendSpec::Mock);
    router(Arc::new(AppState {
        service,
        workspace: workspace.to_path_buf(),
    }))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn b64(s: &Value) -> Vec<u8> {
    base64::engine::general_purpose::STANDARD.decode(s.as_str().unwrap()).unwrap()
}

#[tokio::test]
async fn schema_and_volume_listing() {
    let ws = tempfile::tempdir().unwrap();
    let app = app(ws.path());
    let (s, body) = call(&app, "GET", "/api/schema", None).await;
    assert_eq!(s, StatusCode::OK);
    let schema: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(schema, augmentation_config_schema());
    assert_eq!(schema["properties"]["remap"]["properties"]["window"]["default"], 20);

    let (s, body) = call(&app, "GET", "/api/volumes", None).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["backend"], "mock");
    assert_eq!(v["volumes"][0]["id"], "p");
    assert_eq!(v["volumes"][0]["dims"], json!([16, 12, 10]));
}

#[tokio::test]
async fn slices_are_png() {
    let ws = tempfile::tempdir().unwrap();
    let app = app(ws.path());
    let (s, body) = call(&app, "GET", "/api/volumes/p/slices/x/3", None).await;
    assert_eq!(s, StatusCode::OK);
    let img = image::load_from_memory(&body).unwrap().to_luma8();
    assert_eq!(img.dimensions(), (12, 10));
    assert_eq!(img.into_raw(), window_u8(&phantom().slice(Axis::X, 3)));

    assert_eq!(call(&app, "GET", "/api/volumes/q/slices/z/0", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/volumes/p/slices/z/10", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "GET", "/api/volumes/p/slices/w/0", None).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn preview_cases() {
    let ws = tempfile::tempdir().unwrap();
    let app = app(ws.path());
    let (s, body) = call(&app, "POST", "/api/preview", Some(json!({"volume_id": "p", "axis": "z", "index": 4, "seed": 1, "fragment": {}}))).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["original_png_b64"], v["augmented_png_b64"]);
    assert!(v.get("remap_curve").is_none());

    let req = json!({"volume_id": "p", "axis": "z", "index": 4, "seed": 11,
                     "fragment": {"remap": {"window": 20, "linear_weight": 0.5}}});
    let (s, first) = call(&app, "POST", "/api/preview", Some(req.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let (_, second) = call(&app, "POST", "/api/preview", Some(req)).await;
    assert_eq!(first, second);
    let v: Value = serde_json::from_slice(&first).unwrap();
    let curve = generate_remap_curve(&mut stream(11, &["p", "remap", "0"]), &RemapConfig::default()).unwrap();
    let got: Vec<f64> = serde_json::from_value(v["remap_curve"].clone()).unwrap();
    assert_eq!(got, curve.lut);
    assert_eq!(b64(&v["augmented_png_b64"]), slice_png(&apply_remap(&phantom(), &curve), Axis::Z, 4).unwrap());

    let (s, body) = call(&app, "POST", "/api/preview", Some(json!({"volume_id": "p", "axis": "y", "index": 2, "seed": 3,
        "fragment": {"style": {"alpha": 0.3}, "geo": {}}}))).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["style_backend"], "mock");
    assert!(v["geo_params"]["scale"].as_f64().is_some());

    let bad = json!({"volume_id": "p", "axis": "z", "index": 0, "fragment": {"remap": {"width": 3}}});
    assert_eq!(call(&app, "POST", "/api/preview", Some(bad)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let bad = json!({"volume_id": "p", "axis": "z", "index": 0, "fragment": {"remap": {"window": 0}}});
    assert_eq!(call(&app, "POST", "/api/preview", Some(bad)).await.0, StatusCode::BAD_REQUEST);
    let missing = json!({"volume_id": "nope", "axis": "z", "index": 0});
    assert_eq!(call(&app, "POST", "/api/preview", Some(missing)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn export_writes_only_inside_workspace() {
    let ws = tempfile::tempdir().unwrap();
    let app = app(ws.path());
    let cfg = json!({"seed": 5, "remap": {"window": 12}});
    let (s, body) = call(&app, "POST", "/api/export?path=configs/run.json", Some(cfg)).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["path"], "configs/run.json");
    let written = std::fs::read_to_string(ws.path().join("configs/run.json")).unwrap();
    let parsed = AugmentationConfig::from_json(&written).unwrap();
    assert_eq!(parsed.seed, 5);
    assert_eq!(parsed.remap.window, 12);
    assert_eq!(serde_json::to_value(&parsed).unwrap(), v["config"]);

    let (s, _) = call(&app, "POST", "/api/export", Some(json!({}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!(ws.path().join("augmentation_config.json").is_file());
    let (s, _) = call(&app, "POST", "/api/export?path=../escape.json", Some(json!({}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(!ws.path().parent().unwrap().join("escape.json").exists());
    let (s, _) = call(&app, "POST", "/api/export", Some(json!({"style": {"alpha": 3.0}}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

fn voxaug(args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_voxaug")).args(args).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Previewing a preprocessed half, exporting the config and running the
/// batch pipeline reproduces the previewed slice exactly.
#[tokio::test]
async fn exported_config_reproduces_preview() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    std::fs::create_dir_all(&raw).unwrap();
    let v = Volume::from_fn([60, 40, 16], [1.5, 1.5, 4.0], |x, y, z| {
        (200.0 * (-(((x as f64 - 15.0) / 10.0).powi(2) + ((y as f64 - 20.0) / 12.0).powi(2))).exp() + (z % 4) as f64) as f32
    })
    .unwrap();
    write_volume(raw.join("vol.vaug"), &v).unwrap();
    let manifest = raw.join("manifest.json");
    save_manifest(&manifest, &Manifest::new(vec![Record::new("vol", "vol.vaug", RecordKind::Image, "s", Laterality::Whole, "T1W")])).unwrap();

    let pre = tmp.path().join("pre");
    voxaug(&["preprocess", "--manifest", manifest.to_str().unwrap(), "--out", pre.to_str().unwrap()]);
    let pre_manifest = pre.join("manifest.json");
    let service = PreviewService::load(load_manifest(&pre_manifest).unwrap(), &pre, BackendSpec::Mock).unwrap();
    let ws = tmp.path().join("ws");
    let app = router(Arc::new(AppState { service, workspace: ws.clone() }));

    let fragment = json!({"remap": {"window": 9, "linear_weight": 0.3, "sign_random": true}, "style": {"alpha": 0.7}});
    let mut previews = BTreeMap::new();
    for kind in ["remap", "style"] {
        let req = json!({"volume_id": "vol_left", "axis": "z", "index": 70, "seed": 99, "fragment": {kind: fragment[kind]}});
        let (s, body) = call(&app, "POST", "/api/preview", Some(req)).await;
        assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
        let v: Value = serde_json::from_slice(&body).unwrap();
        previews.insert(kind, b64(&v["augmented_png_b64"]));
    }

    let mut cfg = fragment.clone();
    cfg["seed"] = json!(99);
    cfg["per_volume_counts"] = json!({"style": 1, "remap": 1});
    let (s, _) = call(&app, "POST", "/api/export?path=tuned.json", Some(cfg)).await;
    assert_eq!(s, StatusCode::OK);

    let out = tmp.path().join("aug");
    let cfg_path = ws.join("tuned.json");
    voxaug(&[
        "augment", "--manifest", manifest.to_str().unwrap(), "--config", cfg_path.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    for kind in ["remap", "style"] {
        let produced = read_volume(out.join(format!("vol_left_{kind}0.vaug"))).unwrap();
        assert_eq!(slice_png(&produced, Axis::Z, 70).unwrap(), previews[kind], "{kind}");
    }
}
