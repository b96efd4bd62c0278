//! HTTP endpoint over an immutable glyph catalog: paged listing, nearest-neighbor queries and
//! bounded on-demand 2D fits. See `API.md` for the request and response schemas.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::CorsLayer;

use sdfit::embedding::{nearest_by, Catalog, Metric};
use sdfit::fit::{fit2d, target_from_raster, FitConfig, Termination};
use sdfit::io::{read_field, read_raster_pgm, write_svg, ShapeFile, SvgFrame};
use sdfit::loss::LossBreakdown;
use sdfit::template::TemplateLibrary;

pub const PAGE_SIZE: usize = 50;
pub const MAX_BODY_BYTES: usize = 1 << 20;
pub const MAX_FIT_ITERS: usize = 500;
pub const DEFAULT_FIT_GRID: usize = 128;
/// Largest grid side accepted for raster fits.
pub const MAX_FIT_GRID: usize = 256;
pub const PREVIEW_PIXELS: f64 = 128.0;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Timeout(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Timeout(_) => StatusCode::REQUEST_TIMEOUT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

impl From<sdfit::Error> for ApiError {
    fn from(e: sdfit::Error) -> Self {
        use sdfit::Error as E;
        match e {
            E::EmptyCatalog => ApiError::Unprocessable(e.to_string()),
            E::NonFinite { .. } => ApiError::Timeout(e.to_string()),
            E::Io(_) => ApiError::Internal(e.to_string()),
            _ => ApiError::BadRequest(e.to_string()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Per-process state shared by all handlers. The catalog and templates never change after start.
pub struct ApiSession {
    pub catalog: Catalog,
    pub templates: TemplateLibrary,
    fit_slots: Semaphore,
    requests: AtomicU64,
    fits: AtomicU64,
}

impl ApiSession {
    pub fn new(catalog: Catalog, templates: TemplateLibrary, max_concurrent_fits: usize) -> Self {
        ApiSession {
            catalog,
            templates,
            fit_slots: Semaphore::new(max_concurrent_fits.max(1)),
            requests: AtomicU64::new(0),
            fits: AtomicU64::new(0),
        }
    }

    pub fn requests_served(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn fits_run(&self) -> u64 {
        self.fits.load(Ordering::Relaxed)
    }

    fn count(&self) {
        self.requests.fetch_add(1, Ordering::Relaxed);
    }

    fn preview(&self, class: &str, params: &[f64]) -> Result<String, ApiError> {
        let template = self.templates.get(class)?;
        let shape = ShapeFile::curves(class, params.to_vec()).to_curve_set(template)?;
        Ok(write_svg(&shape, &SvgFrame::pixels(PREVIEW_PIXELS)))
    }
}

pub fn router(session: Arc<ApiSession>) -> Router {
    Router::new()
        .route("/glyphs", get(glyphs))
        .route("/nearest", post(nearest))
        .route("/fit2d", post(fit))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(CorsLayer::permissive())
        .with_state(session)
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed request body: {e}")))
}

#[derive(Deserialize)]
pub struct GlyphsQuery {
    pub class: Option<String>,
    #[serde(default)]
    pub page: usize,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct GlyphEntry {
    pub id: String,
    pub class: String,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<Vec<f64>>,
    pub svg: String,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct GlyphPage {
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
    pub glyphs: Vec<GlyphEntry>,
}

async fn glyphs(State(s): State<Arc<ApiSession>>, Query(q): Query<GlyphsQuery>) -> ApiResult<GlyphPage> {
    s.count();
    let records: Vec<_> = match &q.class {
        Some(c) if !s.catalog.has_class(c) && !s.templates.contains(c) => {
            return Err(ApiError::BadRequest(format!("unknown class {c:?}")));
        }
        Some(c) => s.catalog.class_records(c),
        None => s.catalog.records().iter().collect(),
    };
    let start = q.page.saturating_mul(PAGE_SIZE);
    let slice = records.get(start..).unwrap_or(&[]);
    if slice.is_empty() {
        return Err(ApiError::NotFound(format!("page {} is empty", q.page)));
    }
    let glyphs = slice
        .iter()
        .take(PAGE_SIZE)
        .map(|r| {
            Ok(GlyphEntry {
                id: r.id.clone(),
                class: r.class_label.clone(),
                params: r.params.clone(),
                thickness: r.thickness.clone(),
                svg: s.preview(&r.class_label, &r.params)?,
            })
        })
        .collect::<Result<_, ApiError>>()?;
    Ok(Json(GlyphPage {
        page: q.page,
        page_size: PAGE_SIZE,
        total: records.len(),
        glyphs,
    }))
}

fn default_k() -> usize {
    5
}

#[derive(Serialize, Deserialize, Debug)]
pub struct NearestRequest {
    pub params: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub class: Option<String>,
    #[serde(default)]
    pub metric: Metric,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct NearestMatch {
    pub id: String,
    pub class: String,
    pub distance: f64,
    pub params: Vec<f64>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct NearestResponse {
    /// The request's parameter vector, echoed back.
    pub query: Vec<f64>,
    pub matches: Vec<NearestMatch>,
}

async fn nearest(State(s): State<Arc<ApiSession>>, body: Bytes) -> ApiResult<NearestResponse> {
    s.count();
    let req: NearestRequest = parse_json(&body)?;
    if s.catalog.is_empty() {
        return Err(ApiError::Unprocessable("the catalog is empty".into()));
    }
    if let Some(c) = &req.class {
        if let Ok(t) = s.templates.get(c) {
            let expected = match req.metric {
                Metric::Shape => t.vector_len(false),
                Metric::ShapeAndStroke => t.vector_len(true),
            };
            if req.params.len() != expected {
                return Err(ApiError::BadRequest(
                    sdfit::Error::LengthMismatch {
                        expected,
                        actual: req.params.len(),
                    }
                    .to_string(),
                ));
            }
        }
    }
    if req.params.iter().any(|v| !v.is_finite()) {
        return Err(ApiError::BadRequest("params must be finite".into()));
    }
    let matches = nearest_by(&s.catalog, &req.params, req.k, req.class.as_deref(), req.metric)?;
    if matches.iter().any(|m| !m.distance.is_finite()) {
        return Err(ApiError::BadRequest("params too large: distances overflow".into()));
    }
    Ok(Json(NearestResponse {
        matches: matches
            .into_iter()
            .map(|m| NearestMatch {
                id: m.record.id.clone(),
                class: m.record.class_label.clone(),
                distance: m.distance,
                params: m.record.params.clone(),
            })
            .collect(),
        query: req.params,
    }))
}

#[derive(Serialize, Deserialize, Debug)]
pub struct FitRequest {
    pub class: String,
    /// Base64 binary PGM (P5); rasterized onto a `grid`² glyph grid.
    #[serde(default)]
    pub raster: Option<String>,
    /// Base64 2D field file; used on its own grid.
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub thickness: bool,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct FitResponse {
    pub class: String,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<Vec<f64>>,
    pub svg: String,
    pub loss: LossBreakdown,
    pub surface_floor: f64,
    pub iterations: usize,
    pub best_iteration: usize,
    pub termination: Termination,
}

fn decode(name: &str, text: &str) -> Result<Vec<u8>, ApiError> {
    base64::engine::general_purpose::STANDARD
        .decode(text.trim())
        .map_err(|e| ApiError::BadRequest(format!("{name}: invalid base64: {e}")))
}

async fn fit(State(s): State<Arc<ApiSession>>, body: Bytes) -> ApiResult<FitResponse> {
    s.count();
    let req: FitRequest = parse_json(&body)?;
    let template = s.templates.get(&req.class)?.clone();
    let grid = req.grid.unwrap_or(DEFAULT_FIT_GRID);
    if !(8..=MAX_FIT_GRID).contains(&grid) {
        return Err(ApiError::BadRequest(format!("grid must lie in 8..={MAX_FIT_GRID}")));
    }
    let target = match (&req.raster, &req.field) {
        (Some(r), None) => target_from_raster(&read_raster_pgm(&decode("raster", r)?)?, grid)?,
        (None, Some(f)) => read_field::<f64>(&decode("field", f)?)?,
        _ => return Err(ApiError::BadRequest("give exactly one of raster and field".into())),
    };
    let mut cfg = FitConfig {
        max_iters: req.max_iters.unwrap_or(MAX_FIT_ITERS).clamp(1, MAX_FIT_ITERS),
        thickness_enabled: req.thickness,
        ..FitConfig::default()
    };
    cfg.grid_dims_2d = [grid, grid];

    let _slot = s
        .fit_slots
        .acquire()
        .await
        .map_err(|_| ApiError::Internal("fit pool closed".into()))?;
    s.fits.fetch_add(1, Ordering::Relaxed);
    let class = req.class.clone();
    let n = template.vector_len(false);
    let (shape, report) = tokio::task::spawn_blocking(move || fit2d(&target, &template, &cfg, None))
        .await
        .map_err(|e| ApiError::Internal(format!("fit task failed: {e}")))??;
    let (params, thickness) = if report.final_params.len() > n {
        (report.final_params[..n].to_vec(), Some(report.final_params[n..].to_vec()))
    } else {
        (report.final_params.clone(), None)
    };
    let frame = SvgFrame {
        stroke_from_thickness: req.thickness,
        ..SvgFrame::pixels(PREVIEW_PIXELS)
    };
    Ok(Json(FitResponse {
        class,
        params,
        thickness,
        svg: write_svg(&shape, &frame),
        loss: report.best,
        surface_floor: report.surface_floor,
        iterations: report.history.len(),
        best_iteration: report.best_iteration,
        termination: report.termination,
    }))
}
