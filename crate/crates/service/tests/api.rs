use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use sdfit::embedding::{Catalog, GlyphRecord};
use sdfit::field::Raster;
use sdfit::io::{write_field, write_raster_pgm};
use sdfit::template::TemplateLibrary;
use sdfit_service::{router, ApiSession, FitResponse, GlyphPage, NearestResponse, PAGE_SIZE};

fn l_params(dx: f64) -> Vec<f64> {
    let lib = TemplateLibrary::builtin();
    lib.get("L").unwrap().params().chunks(2).flat_map(|p| [p[0] + dx, p[1]]).collect()
}

/// `n` 'L' records shifted along x, plus one 'O'.
fn catalog(n: usize) -> Catalog {
    let lib = TemplateLibrary::builtin();
    let mut records: Vec<GlyphRecord> = (0..n)
        .map(|k| GlyphRecord::new(format!("l{k:03}"), "L", l_params(0.001 * k as f64)))
        .collect();
    records.push(GlyphRecord::new("o000", "O", lib.get("O").unwrap().params()));
    Catalog::new(records).unwrap()
}

fn app_with(catalog: Catalog) -> (Router, Arc<ApiSession>) {
    let session = Arc::new(ApiSession::new(catalog, TemplateLibrary::builtin(), 2));
    (router(session.clone()), session)
}

fn app() -> Router {
    app_with(catalog(60)).0
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(Method::POST)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.into())
        .unwrap();
    send(app, req).await
}

fn json_of(body: &[u8]) -> Value {
    serde_json::from_slice(body).unwrap()
}

#[tokio::test]
async fn glyph_pages_are_ordered_and_bounded() {
    let app = app();
    let (status, body) = get(&app, "/glyphs?class=L&page=0").await;
    assert_eq!(status, StatusCode::OK);
    let page: GlyphPage = serde_json::from_slice(&body).unwrap();
    assert_eq!(page.page_size, PAGE_SIZE);
    assert_eq!(page.total, 60);
    assert_eq!(page.glyphs.len(), PAGE_SIZE);
    let ids: Vec<&str> = page.glyphs.iter().map(|g| g.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(page.glyphs.iter().all(|g| g.class == "L"));

    let (_, body) = get(&app, "/glyphs?class=L&page=1").await;
    let page: GlyphPage = serde_json::from_slice(&body).unwrap();
    assert_eq!(page.glyphs.len(), 10);
    assert_eq!(page.glyphs[0].id, "l050");

    let (_, body) = get(&app, "/glyphs").await;
    let all: GlyphPage = serde_json::from_slice(&body).unwrap();
    assert_eq!(all.total, 61);
}

#[tokio::test]
async fn glyph_errors() {
    let app = app();
    assert_eq!(get(&app, "/glyphs?class=L&page=2").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/glyphs?class=L&page=99999999999").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/glyphs?class=nope").await.0, StatusCode::BAD_REQUEST);
    // A known template class without records has no first page.
    assert_eq!(get(&app, "/glyphs?class=Q").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/glyphs?page=x").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn repeated_requests_are_byte_identical() {
    let app = app();
    let a = get(&app, "/glyphs?class=L&page=0").await;
    let b = get(&app, "/glyphs?class=L&page=0").await;
    assert_eq!(a, b);
    let q = json!({"params": l_params(0.0123), "k": 4, "class": "L"}).to_string();
    let a = post(&app, "/nearest", q.clone()).await;
    let b = post(&app, "/nearest", q).await;
    assert_eq!(a.0, StatusCode::OK);
    assert_eq!(a, b);
}

#[tokio::test]
async fn concurrent_nearest_requests_agree() {
    let app = app();
    let q = json!({"params": l_params(0.0371), "k": 5}).to_string();
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let (app, q) = (app.clone(), q.clone());
            tokio::spawn(async move { post(&app, "/nearest", q).await })
        })
        .collect();
    let mut bodies = Vec::new();
    for t in tasks {
        bodies.push(t.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

/// Well-formed SVG per the writer's contract: one root element, a viewBox, closed path data.
fn check_svg(svg: &str) {
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{svg}");
    assert_eq!(svg.matches("<svg").count(), 1);
    assert!(svg.contains("viewBox=\"0 0 128 128\""));
    let d = svg.split(" d=\"").nth(1).unwrap().split('"').next().unwrap();
    assert!(d.starts_with('M') && d.trim_end().ends_with('Z'));
    for token in d.split(|c: char| c.is_whitespace() || c == ',') {
        let t = token.trim_start_matches(['M', 'Q', 'Z']);
        assert!(t.is_empty() || t.parse::<f64>().is_ok(), "bad path token {token:?}");
    }
}

#[tokio::test]
async fn previews_are_valid_svg() {
    let (_, body) = get(&app(), "/glyphs?class=O").await;
    let page: GlyphPage = serde_json::from_slice(&body).unwrap();
    for g in &page.glyphs {
        check_svg(&g.svg);
    }
}

#[tokio::test]
async fn nearest_finds_an_existing_record_first() {
    let app = app();
    let params = l_params(0.017);
    let (status, body) = post(&app, "/nearest", json!({"params": params, "k": 3, "class": "L"}).to_string()).await;
    assert_eq!(status, StatusCode::OK);
    let r: NearestResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(r.matches.len(), 3);
    assert_eq!(r.matches[0].id, "l017");
    assert_eq!(r.matches[0].distance, 0.0);
    assert!(r.matches.windows(2).all(|w| w[0].distance <= w[1].distance));
    // The echo carries the request's floats unchanged.
    assert_eq!(r.query, params);
}

#[tokio::test]
async fn nearest_echo_is_exact_for_awkward_floats() {
    let app = app();
    let mut params = l_params(0.0);
    params[0] = 0.1 + 0.2;
    params[1] = 1.0 / 3.0;
    params[2] = 5e-324;
    params[3] = -123.456789012345678;
    let text = format!(
        "{{\"params\": [{}], \"k\": 1}}",
        params.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(", ")
    );
    let (status, body) = post(&app, "/nearest", text).await;
    assert_eq!(status, StatusCode::OK);
    let r: NearestResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(r.query, params);
}

#[tokio::test]
async fn nearest_errors() {
    let app = app();
    let (status, body) = post(&app, "/nearest", json!({"params": [0.1, 0.2], "class": "L"}).to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(json_of(&body)["error"].as_str().unwrap().contains("length mismatch"));
    // Without a class, no record of matching length is a mismatch too.
    assert_eq!(post(&app, "/nearest", json!({"params": [0.1]}).to_string()).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&app, "/nearest", "{not json").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(
        post(&app, "/nearest", json!({"params": l_params(0.0), "k": 0}).to_string()).await.0,
        StatusCode::BAD_REQUEST
    );

    let mut huge = l_params(0.0);
    huge[0] = -1.7976931348623157e308;
    assert_eq!(post(&app, "/nearest", json!({"params": huge}).to_string()).await.0, StatusCode::BAD_REQUEST);

    let (empty, _) = app_with(Catalog::default());
    let (status, _) = post(&empty, "/nearest", json!({"params": l_params(0.0)}).to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

fn l_raster(n: usize) -> Raster {
    // The block 'L' of the acceptance suite, rasterized at pixel centers.
    let inside = |x: f64, y: f64| (0.2..0.4).contains(&x) && (0.1..0.9).contains(&y) || (0.2..0.8).contains(&x) && (0.7..0.9).contains(&y);
    let pixels = (0..n * n)
        .map(|i| {
            if inside(((i % n) as f64 + 0.5) / n as f64, ((i / n) as f64 + 0.5) / n as f64) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Raster::new(n, n, pixels).unwrap()
}

fn b64(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

#[tokio::test]
async fn fit2d_from_a_raster() {
    let (app, session) = app_with(catalog(2));
    let pgm = write_raster_pgm(&l_raster(64));
    let req = json!({"class": "L", "raster": b64(&pgm), "grid": 48, "max_iters": 40});
    let (status, body) = post(&app, "/fit2d", req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let r: FitResponse = serde_json::from_slice(&body).unwrap();
    let lib = TemplateLibrary::builtin();
    assert_eq!(r.params.len(), lib.get("L").unwrap().vector_len(false));
    assert_eq!(r.iterations, 40);
    assert!(r.loss.total.is_finite());
    assert!(r.thickness.is_none());
    check_svg(&r.svg);
    assert_eq!(session.fits_run(), 1);
}

#[tokio::test]
async fn fit2d_caps_iterations() {
    let app = app();
    let field = sdfit::fit::target_from_curves(&TemplateLibrary::builtin().get("L").unwrap().to_curve_set(), 16).unwrap();
    let req = json!({"class": "L", "field": b64(&write_field(&field)), "max_iters": 100000});
    let (status, body) = post(&app, "/fit2d", req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let r: FitResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(r.iterations, sdfit_service::MAX_FIT_ITERS);
    // Fitting the template's own field stays at the quadrature floor.
    assert!(r.loss.surface <= r.surface_floor * (1.0 + 1e-9) + 1e-12, "{} vs {}", r.loss.surface, r.surface_floor);
}

#[tokio::test]
async fn fit2d_rejects_malformed_payloads() {
    let app = app();
    let (status, body) = post(&app, "/fit2d", json!({"class": "L", "raster": b64(b"P5 4 4 255\n\x00\x01")}).to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(json_of(&body)["error"].as_str().unwrap().contains("at byte"));

    let bad = [
        json!({"class": "L"}),
        json!({"class": "L", "raster": "%%%"}),
        json!({"class": "L", "raster": b64(b"P5"), "field": b64(b"DFLD")}),
        json!({"class": "nope", "raster": b64(&write_raster_pgm(&l_raster(8)))}),
        json!({"class": "L", "raster": b64(&write_raster_pgm(&l_raster(8))), "grid": 4}),
        json!({"raster": ""}),
    ];
    for req in bad {
        assert_eq!(post(&app, "/fit2d", req.to_string()).await.0, StatusCode::BAD_REQUEST, "{req}");
    }
    assert_eq!(post(&app, "/fit2d", "[]").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oversized_bodies_are_rejected() {
    let app = app();
    let huge = format!("{{\"class\": \"L\", \"raster\": \"{}\"}}", "A".repeat(sdfit_service::MAX_BODY_BYTES + 16));
    let (status, _) = post(&app, "/fit2d", huge).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn non_finite_targets_time_out() {
    let app = app();
    let lib = TemplateLibrary::builtin();
    let mut field = sdfit::fit::target_from_curves(&lib.get("L").unwrap().to_curve_set(), 16).unwrap();
    field.values_mut()[5] = f64::NAN;
    let req = json!({"class": "L", "field": b64(&write_field(&field)), "max_iters": 3});
    let (status, body) = post(&app, "/fit2d", req.to_string()).await;
    assert_eq!(status, StatusCode::REQUEST_TIMEOUT, "{}", String::from_utf8_lossy(&body));
}

#[tokio::test]
async fn cors_headers_are_present() {
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/nearest")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert!(resp.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test]
async fn counters_track_requests() {
    let (app, session) = app_with(catalog(3));
    get(&app, "/glyphs").await;
    post(&app, "/nearest", json!({"params": l_params(0.0)}).to_string()).await;
    assert_eq!(session.requests_served(), 2);
    assert_eq!(session.fits_run(), 0);
}
