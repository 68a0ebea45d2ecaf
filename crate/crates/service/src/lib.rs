//! HTTP service over a directory of pieces.
//!
//! Sound is produced on the host's MIDI output; the HTTP API only drives it.
//! The browser UI, if present, is served as static files from `<dir>/ui`.

mod player;

pub use player::{DeviceFactory, Performance, Player, PlayerError, PlayerStatus, QUEUE_GAP};

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use probmusic::combinatorics::MultiplicityReport;
use probmusic::generator::{generate_piece, GenError, GenParams};
use probmusic::midi::{assemble_smf, TimingConfig};
use probmusic::notation::format_body;
use probmusic::playback::{Clock, PlaybackError, PlaybackState};
use probmusic::playlist::{
    load_library, play_all_queue, Library, PlayerConfig, PlaylistEntry, PlaylistError,
};
use probmusic::spec::ParseError;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub const DEFAULT_PORT: u16 = 8642;
pub const UI_DIR: &str = "ui";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub dir: PathBuf,
    pub timing: TimingConfig,
    /// Defaults for requests that leave a field out.
    pub defaults: PlayerConfig,
}

impl ServiceConfig {
    pub fn new(dir: impl Into<PathBuf>) -> ServiceConfig {
        ServiceConfig {
            dir: dir.into(),
            timing: TimingConfig::default(),
            defaults: PlayerConfig::default(),
        }
    }
}

pub struct AppState {
    config: ServiceConfig,
    library: Mutex<Library>,
    excluded: Mutex<BTreeSet<String>>,
    seeds: Mutex<ChaCha8Rng>,
    player: Arc<Player>,
}

impl AppState {
    pub fn new(
        config: ServiceConfig,
        devices: DeviceFactory,
        clock: Arc<dyn Clock>,
    ) -> Result<AppState, PlaylistError> {
        let library = load_library(&config.dir)?;
        for d in library.diagnostics() {
            tracing::warn!("{}: {}", d.file.display(), d.message);
        }
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or_default();
        Ok(AppState {
            player: Arc::new(Player::new(clock, config.timing.clone(), devices)),
            library: Mutex::new(library),
            excluded: Mutex::new(config.defaults.excluded_keywords.clone()),
            seeds: Mutex::new(ChaCha8Rng::seed_from_u64(nanos)),
            config,
        })
    }

    pub fn player(&self) -> &Arc<Player> {
        &self.player
    }

    /// Locks the library after re-reading the directory.
    fn library(&self) -> MutexGuard<'_, Library> {
        let mut library = self.library.lock().unwrap();
        if let Err(e) = library.reload() {
            tracing::warn!("reloading library: {e}");
        }
        library.apply_filters(&self.excluded.lock().unwrap());
        library
    }

    fn entry(&self, id: &str) -> Result<PlaylistEntry, ApiError> {
        self.library()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no piece with id `{id}`")))
    }

    /// A fresh seed below 2^53.
    fn draw_seed(&self) -> u64 {
        self.seeds.lock().unwrap().next_u64() >> 11
    }

    fn params(&self, req: &PieceRequest, seed: u64) -> Result<GenParams, ApiError> {
        let d = &self.config.defaults;
        let params = GenParams {
            length_ms: req.length_ms.unwrap_or(d.length_ms),
            streams_k: req.streams_k.unwrap_or(d.streams_k),
            stagger_s: req.stagger_s.unwrap_or(d.stagger_s),
            master_seed: seed,
            ..GenParams::default()
        };
        params.validate()?;
        Ok(params)
    }

    fn perform(&self, entry: &PlaylistEntry, req: &PieceRequest) -> Result<Performance, ApiError> {
        let seed = req.seed.unwrap_or_else(|| self.draw_seed());
        let params = self.params(req, seed)?;
        let mscores = generate_piece(&entry.spec, &params)?;
        Ok(Performance {
            piece_id: entry.id.clone(),
            params,
            mscores,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub code: &'static str,
    pub message: String,
}

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Self {
        Diagnostic {
            line: e.line,
            column: e.column,
            code: e.code(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
            #[serde(skip_serializing_if = "Vec::is_empty")]
            diagnostics: Vec<Diagnostic>,
        }
        let body = Body {
            error: self.message,
            diagnostics: self.diagnostics,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<GenError> for ApiError {
    fn from(e: GenError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.to_string())
    }
}

impl From<PlaylistError> for ApiError {
    fn from(e: PlaylistError) -> Self {
        match e {
            PlaylistError::Parse(p) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                message: p.to_string(),
                diagnostics: vec![Diagnostic::from(&p)],
            },
            PlaylistError::InvalidId(_) => ApiError::new(StatusCode::BAD_REQUEST, e.to_string()),
            PlaylistError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

impl From<PlaybackError> for ApiError {
    fn from(e: PlaybackError) -> Self {
        let status = match e {
            PlaybackError::DeviceUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            PlaybackError::Render(_) => StatusCode::UNPROCESSABLE_ENTITY,
            PlaybackError::TooManyStreams { .. } | PlaybackError::NoStreams => {
                StatusCode::BAD_REQUEST
            }
            PlaybackError::Spawn(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<PlayerError> for ApiError {
    fn from(e: PlayerError) -> Self {
        match e {
            PlayerError::Busy => ApiError::new(StatusCode::CONFLICT, e.to_string()),
            PlayerError::Playback(p) => p.into(),
        }
    }
}

/// Optional JSON body: an empty body means all defaults.
fn optional_json<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceRequest {
    pub length_ms: Option<usize>,
    pub streams_k: Option<usize>,
    pub stagger_s: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct PieceSummary {
    id: String,
    title: String,
    keywords: BTreeSet<String>,
    excluded: bool,
}

#[derive(Debug, Serialize)]
struct PieceDetail {
    id: String,
    title: String,
    keywords: BTreeSet<String>,
    spec_text: String,
}

impl From<&PlaylistEntry> for PieceDetail {
    fn from(e: &PlaylistEntry) -> Self {
        PieceDetail {
            id: e.id.clone(),
            title: e.title().to_string(),
            keywords: e.keywords.clone(),
            spec_text: e.spec_text.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct PutPiece {
    spec_text: String,
}

#[derive(Debug, Serialize)]
struct Multiplicity {
    w: u64,
    per_stream_digits: usize,
    total_digits: usize,
}

#[derive(Debug, Serialize)]
struct Generated {
    seed: u64,
    scores: Vec<String>,
    multiplicity: Multiplicity,
}

#[derive(Debug, Serialize)]
struct Started {
    session_id: u64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct StateReply {
    state: PlaybackState,
}

#[derive(Debug, Default, Deserialize, Serialize)]
struct Filters {
    excluded: BTreeSet<String>,
}

#[derive(Debug, Serialize)]
struct Queue {
    queue: Vec<String>,
    seeds: Vec<u64>,
}

type Shared = State<Arc<AppState>>;

async fn list_pieces(State(app): Shared) -> Json<Vec<PieceSummary>> {
    let library = app.library();
    Json(
        library
            .entries()
            .iter()
            .map(|e| PieceSummary {
                id: e.id.clone(),
                title: e.title().to_string(),
                keywords: e.keywords.clone(),
                excluded: e.excluded,
            })
            .collect(),
    )
}

async fn get_piece(
    State(app): Shared,
    Path(id): Path<String>,
) -> Result<Json<PieceDetail>, ApiError> {
    Ok(Json(PieceDetail::from(&app.entry(&id)?)))
}

async fn put_piece(
    State(app): Shared,
    Path(id): Path<String>,
    Json(body): Json<PutPiece>,
) -> Result<Json<PieceDetail>, ApiError> {
    let mut library = app.library();
    let entry = library.upsert(&id, &body.spec_text)?;
    library.apply_filters(&app.excluded.lock().unwrap());
    Ok(Json(PieceDetail::from(&entry)))
}

async fn generate(
    State(app): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Generated>, ApiError> {
    let req: PieceRequest = optional_json(&body)?;
    let entry = app.entry(&id)?;
    let p = app.perform(&entry, &req)?;
    let report = MultiplicityReport::new(
        &entry.spec,
        p.params.length_ms as u64,
        p.params.streams_k as u64,
    );
    Ok(Json(Generated {
        seed: p.params.master_seed,
        scores: p.mscores.iter().map(format_body).collect(),
        multiplicity: Multiplicity {
            w: report.w,
            per_stream_digits: report.decimal_digits_per_stream,
            total_digits: report.decimal_digits_total,
        },
    }))
}

async fn play(
    State(app): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Started>, ApiError> {
    let req: PieceRequest = optional_json(&body)?;
    let entry = app.entry(&id)?;
    if app.player.is_busy() {
        return Err(PlayerError::Busy.into());
    }
    let p = app.perform(&entry, &req)?;
    let seed = p.params.master_seed;
    let session_id = app.player.play(p)?;
    Ok(Json(Started { session_id, seed }))
}

async fn render(
    State(app): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: PieceRequest = optional_json(&body)?;
    let entry = app.entry(&id)?;
    let p = app.perform(&entry, &req)?;
    let bytes = assemble_smf(&p.mscores, &p.params, &app.config.timing)
        .map_err(PlaybackError::from)?
        .to_bytes()
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "audio/midi".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}.mid\""),
            ),
            (
                header::HeaderName::from_static("x-seed"),
                p.params.master_seed.to_string(),
            ),
        ],
        bytes,
    )
        .into_response())
}

async fn stop(State(app): Shared) -> Json<StateReply> {
    let player = app.player.clone();
    let state = tokio::task::spawn_blocking(move || player.stop())
        .await
        .unwrap_or(PlaybackState::Stopped);
    Json(StateReply { state })
}

async fn status(State(app): Shared) -> Json<PlayerStatus> {
    Json(app.player.status())
}

async fn keywords(State(app): Shared) -> Json<Vec<String>> {
    Json(app.library().keywords().into_iter().collect())
}

async fn set_filters(State(app): Shared, Json(filters): Json<Filters>) -> Json<Filters> {
    *app.excluded.lock().unwrap() = filters.excluded.clone();
    app.library.lock().unwrap().apply_filters(&filters.excluded);
    Json(filters)
}

async fn play_all(State(app): Shared, body: Bytes) -> Result<Json<Queue>, ApiError> {
    let req: PieceRequest = optional_json(&body)?;
    if app.player.is_busy() {
        return Err(PlayerError::Busy.into());
    }
    let entries = app.library().entries().to_vec();
    let config = PlayerConfig {
        excluded_keywords: app.excluded.lock().unwrap().clone(),
        ..app.config.defaults.clone()
    };
    let performances = play_all_queue(&entries, &config)
        .into_iter()
        .map(|e| app.perform(e, &PieceRequest { seed: None, ..req }))
        .collect::<Result<Vec<_>, _>>()?;
    let queue = Queue {
        queue: performances.iter().map(|p| p.piece_id.clone()).collect(),
        seeds: performances.iter().map(|p| p.params.master_seed).collect(),
    };
    app.player.play_all(performances)?;
    Ok(Json(queue))
}

pub fn router(app: Arc<AppState>) -> Router {
    let ui = ServeDir::new(app.config.dir.join(UI_DIR));
    Router::new()
        .route("/api/pieces", get(list_pieces))
        .route("/api/pieces/{id}", get(get_piece).put(put_piece))
        .route("/api/pieces/{id}/generate", post(generate))
        .route("/api/pieces/{id}/play", post(play))
        .route("/api/pieces/{id}/render", post(render))
        .route("/api/stop", post(stop))
        .route("/api/status", get(status))
        .route("/api/keywords", get(keywords))
        .route("/api/filters", post(set_filters))
        .route("/api/playall", post(play_all))
        .fallback_service(ui)
        .with_state(app)
}

/// Serves until Ctrl-C, then stops any playback.
pub async fn serve(listener: tokio::net::TcpListener, app: Arc<AppState>) -> std::io::Result<()> {
    let player = app.player.clone();
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    tokio::task::spawn_blocking(move || player.stop())
        .await
        .map_err(std::io::Error::other)?;
    Ok(())
}
