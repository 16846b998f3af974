//! HTTP routes of the preview service.
//!
//! | method | path | response |
//! |---|---|---|
//! | GET | `/api/schema` | AugmentationConfig JSON schema |
//! | GET | `/api/volumes` | backend name and image summaries |
//! | GET | `/api/volumes/{id}/slices/{axis}/{index}` | PNG of the original slice |
//! | POST | `/api/preview` | original and augmented slices as base64 PNG |
//! | POST | `/api/export?path=<rel>` | writes the config under the workspace |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use voxaug_core::io::{load_manifest, manifest_dir};
use voxaug_core::pipeline::{augmentation_config_schema, AugmentationConfig};
use voxaug_core::preview::{export_config, PreviewRequest, PreviewService};
use voxaug_core::style::BackendSpec;
use voxaug_core::volume::Axis;
use voxaug_core::Error;

use crate::commands::load_config;
use crate::ServeArgs;

pub const DEFAULT_EXPORT_PATH: &str = "augmentation_config.json";

pub struct AppState {
    pub service: PreviewService,
    pub workspace: PathBuf,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Parameter(_) | Error::DimMismatch(..) | Error::Geometry(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

async fn schema() -> Json<serde_json::Value> {
    Json(augmentation_config_schema())
}

async fn volumes(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "backend": st.service.backend_name(),
        "volumes": st.service.volumes(),
    }))
}

async fn slice(
    State(st): State<Arc<AppState>>,
    Path((id, axis, index)): Path<(String, Axis, usize)>,
) -> ApiResult<Response> {
    let png = st.service.original_slice(&id, axis, index)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn preview(State(st): State<Arc<AppState>>, Json(req): Json<PreviewRequest>) -> ApiResult<Response> {
    let res = tokio::task::spawn_blocking(move || st.service.render_preview(&req))
        .await
        .map_err(|e| Error::Backend {
            slice: 0,
            message: e.to_string(),
        })??;
    Ok(Json(res).into_response())
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    path: Option<String>,
}

#[derive(Debug, Serialize)]
struct ExportResponse {
    path: String,
    config: AugmentationConfig,
}

async fn export(
    State(st): State<Arc<AppState>>,
    Query(q): Query<ExportQuery>,
    Json(cfg): Json<AugmentationConfig>,
) -> ApiResult<Json<ExportResponse>> {
    let rel = q.path.unwrap_or_else(|| DEFAULT_EXPORT_PATH.to_string());
    export_config(&st.workspace, &rel, &cfg)?;
    Ok(Json(ExportResponse { path: rel, config: cfg }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/schema", get(schema))
        .route("/api/volumes", get(volumes))
        .route("/api/volumes/{id}/slices/{axis}/{index}", get(slice))
        .route("/api/preview", post(preview))
        .route("/api/export", post(export))
        .with_state(state)
}

/// Loads the manifest and serves on localhost until interrupted.
pub fn serve(a: &ServeArgs) -> anyhow::Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let backend = match &a.config {
        Some(p) => load_config(p)?.style.backend,
        None => BackendSpec::default(),
    };
    let service = PreviewService::load(manifest, &manifest_dir(&a.manifest), backend)?;
    std::fs::create_dir_all(&a.workspace).with_context(|| format!("creating {}", a.workspace.display()))?;
    let state = Arc::new(AppState {
        service,
        workspace: a.workspace.clone(),
    });
    let addr = SocketAddr::from(([127, 0, 0, 1], a.port));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        println!("serving {} volumes on http://{addr}", state.service.volumes().len());
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}
