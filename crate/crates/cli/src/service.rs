use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use flaresynth::catalog::{parse_template, parse_template_value, Catalog, Corpus, TemplateDoc};
use flaresynth::compose::{compose_pair, ComposeConfig, Provenance};
use flaresynth::imagecore::io::read_png;
use flaresynth::imagecore::Canvas;
use flaresynth::{Error, Point};

use crate::ops::{asset_from, class_counts, preview_bundle, render_png, Encoding, PreviewBundle, RenderOptions};

pub const RENDER_TIME_HEADER: &str = "x-render-time-ms";

/// Largest request body accepted, in bytes.
pub const BODY_LIMIT: usize = 32 << 20;

pub struct AppState {
    pub catalog: Catalog,
    pub corpus: Option<Corpus>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/render", post(post_render))
        .route("/compose-preview", post(post_compose_preview))
        .route("/templates", get(list_templates))
        .route("/templates/{id}", get(get_template).put(put_template))
        .route("/validate", post(post_validate))
        .layer(axum::extract::DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

/// Body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
    #[serde(default)]
    pub violations: Vec<flaresynth::Violation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

pub struct AppError(pub Error);

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError(e)
    }
}

pub fn status_of(e: &Error) -> (StatusCode, &'static str) {
    match e {
        Error::Parse { .. } => (StatusCode::BAD_REQUEST, "parse"),
        Error::Schema(_) => (StatusCode::BAD_REQUEST, "schema"),
        Error::InvalidInput(_) | Error::Json(_) => (StatusCode::BAD_REQUEST, "bad_request"),
        Error::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        Error::InvalidParameter { .. } | Error::ShapeMismatch { .. } | Error::EmptySelection => {
            (StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameter")
        }
        Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
        Error::Corpus(_) => (StatusCode::CONFLICT, "corpus"),
        Error::Io { .. } | Error::Png(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let (status, kind) = status_of(&self.0);
        let mut body = ApiError {
            error: kind.to_string(),
            message: self.0.to_string(),
            violations: Vec::new(),
            line: None,
            column: None,
        };
        match self.0 {
            Error::Schema(v) | Error::Validation(v) => body.violations = v,
            Error::InvalidParameter { name, reason } => body.violations = vec![flaresynth::Violation::new(name, reason)],
            Error::Parse { line, column, .. } => {
                body.line = Some(line);
                body.column = Some(column);
            }
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, AppError>;

/// Parses a request body, reporting malformed JSON with its location.
fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, Error> {
    let value: Value = serde_json::from_slice(body).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    serde_json::from_value(value).map_err(|e| Error::Schema(vec![flaresynth::Violation::new("", e.to_string())]))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError(Error::InvalidInput(format!("render task failed: {e}"))))?
        .map_err(AppError)
}

fn resolve(state: &AppState, template: Option<Value>, id: Option<String>) -> Result<TemplateDoc, Error> {
    match (template, id) {
        (Some(v), None) => parse_template_value(v),
        (None, Some(id)) => state.catalog.get_template(&id),
        _ => Err(Error::InvalidInput("give exactly one of `template` or `id`".into())),
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    /// Full template document, for unsaved edits.
    #[serde(default)]
    pub template: Option<Value>,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub light_pos: Option<Point>,
    #[serde(default)]
    pub canvas: Option<Canvas>,
    #[serde(default)]
    pub encoding: Encoding,
}

async fn post_render(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: RenderRequest = parse_body(&body)?;
    let doc = resolve(&state, req.template, req.id)?;
    let opts = RenderOptions {
        light_pos: req.light_pos,
        canvas: req.canvas,
    };
    let start = Instant::now();
    let png = blocking(move || render_png(&doc, &opts, req.encoding)).await?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let mut resp = ([(header::CONTENT_TYPE, "image/png")], png).into_response();
    if let Ok(v) = HeaderValue::from_str(&format!("{ms:.3}")) {
        resp.headers_mut().insert(RENDER_TIME_HEADER, v);
    }
    Ok(resp)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeRequest {
    #[serde(default)]
    pub template: Option<Value>,
    #[serde(default)]
    pub id: Option<String>,
    /// Ghost chain added to a scatter template.
    #[serde(default)]
    pub reflect_id: Option<String>,
    /// Imported flare instead of a template.
    #[serde(default)]
    pub real_id: Option<String>,
    /// File name inside the background corpus.
    pub background: String,
    pub seed: u64,
    #[serde(default)]
    pub crop: Option<usize>,
    #[serde(default)]
    pub encoding: Encoding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposeResponse {
    pub images: PreviewBundle,
    pub provenance: Provenance,
    pub class_counts: serde_json::Map<String, Value>,
}

async fn post_compose_preview(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<ComposeResponse>> {
    let req: ComposeRequest = parse_body(&body)?;
    let corpus = state
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Corpus("the service was started without a background corpus".into()))?;
    let bg_path = corpus
        .files
        .iter()
        .find(|p| p.file_name().is_some_and(|n| n.to_string_lossy() == req.background))
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("background `{}`", req.background)))?;
    let scatter = match (req.template, req.id) {
        (None, None) => None,
        (t, i) => Some(resolve(&state, t, i)?),
    };
    let reflect = req.reflect_id.as_deref().map(|id| state.catalog.get_template(id)).transpose()?;
    let st = state.clone();
    let real_id = req.real_id;
    let cfg = ComposeConfig {
        crop: req.crop.unwrap_or(ComposeConfig::default().crop),
        ..ComposeConfig::default()
    };
    let (seed, encoding) = (req.seed, req.encoding);
    let resp = blocking(move || {
        let asset = asset_from(scatter.as_ref(), reflect.as_ref(), real_id.as_deref().map(|id| (&st.catalog, id)))?;
        let bg = read_png(&bg_path)?;
        let sample = compose_pair(&bg, &asset, seed, &cfg)?;
        Ok(ComposeResponse {
            images: preview_bundle(&sample, encoding)?,
            class_counts: class_counts(&sample),
            provenance: sample.provenance,
        })
    })
    .await?;
    Ok(Json(resp))
}

async fn list_templates(State(state): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let mut out = Vec::new();
    for doc in state.catalog.templates()? {
        out.push(json!({ "id": doc.id, "kind": doc.body.kind(), "metadata": doc.metadata }));
    }
    Ok(Json(Value::Array(out)))
}

async fn get_template(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let text = state.catalog.template_text(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

fn parse_text(body: &[u8]) -> Result<TemplateDoc, Error> {
    let text = std::str::from_utf8(body).map_err(|e| Error::InvalidInput(format!("body is not UTF-8: {e}")))?;
    parse_template(text)
}

async fn put_template(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let doc = parse_text(&body)?;
    if doc.id != id {
        return Err(Error::Validation(vec![flaresynth::Violation::new(
            "id",
            format!("`{}` does not match the path id `{id}`", doc.id),
        )])
        .into());
    }
    let changed = blocking(move || state.catalog.put_template(&doc)).await?;
    Ok(Json(json!({ "id": id, "changed": changed })))
}

async fn post_validate(body: Bytes) -> ApiResult<Json<Value>> {
    let doc = parse_text(&body)?;
    Ok(Json(json!({ "valid": true, "id": doc.id, "kind": doc.body.kind() })))
}
