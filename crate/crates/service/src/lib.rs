//! HTTP adapter over `affectcouple-core`.
//!
//! Every handler parses its input, calls exactly one core operation and
//! serializes the result. See `docs/api.md` for the endpoint reference.

mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use affectcouple_core::analysis::{
    group_outliers, parse_group_queries, scatter_rows, Outlier, DEFAULT_MATCH_THRESHOLD, DEFAULT_OUTLIER_C,
};
use affectcouple_core::coupling::coupling_matrix;
use affectcouple_core::session::FeedbackEvent;
use affectcouple_core::{
    build_groups, coupled_clusters, estimate, open_session, save_corpus, AffectiveRating, AnnotationSession,
    Corpus, CouplingThresholds, EmotionPoint, Error, Estimation, EstimationConfig, Provenance,
    SemanticProfile, StimulusDocument, StimulusGroup, Taxonomy,
};
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use error::ApiError;

pub const ENV_ADDR: &str = "AFFECTCOUPLE_ADDR";
pub const ENV_CORPUS: &str = "AFFECTCOUPLE_CORPUS";
pub const ENV_TAXONOMY: &str = "AFFECTCOUPLE_TAXONOMY";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

const DEFAULT_PAGE: usize = 100;
const MAX_PAGE: usize = 1000;

type ApiResult<T> = Result<T, ApiError>;

/// Shared service state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    taxonomy: Taxonomy,
    corpus: RwLock<Corpus>,
    sessions: Mutex<HashMap<String, Arc<Mutex<AnnotationSession>>>>,
    next_session: AtomicU64,
    corpus_path: Option<PathBuf>,
}

impl AppState {
    pub fn new(corpus: Corpus, taxonomy: Taxonomy) -> Self {
        Self::build(corpus, taxonomy, None)
    }

    /// Like [`AppState::new`], but every corpus mutation is saved to `path`.
    pub fn persistent(corpus: Corpus, taxonomy: Taxonomy, path: impl Into<PathBuf>) -> Self {
        Self::build(corpus, taxonomy, Some(path.into()))
    }

    fn build(corpus: Corpus, taxonomy: Taxonomy, corpus_path: Option<PathBuf>) -> Self {
        Self {
            inner: Arc::new(Inner {
                taxonomy,
                corpus: RwLock::new(corpus),
                sessions: Mutex::new(HashMap::new()),
                next_session: AtomicU64::new(1),
                corpus_path,
            }),
        }
    }

    /// A snapshot of the current corpus.
    pub fn corpus(&self) -> Corpus {
        self.inner.corpus.read().unwrap().clone()
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.inner.taxonomy
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<AnnotationSession>>> {
        self.inner
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    fn persist(&self, corpus: &Corpus) -> ApiResult<()> {
        if let Some(path) = &self.inner.corpus_path {
            save_corpus(corpus, path)?;
        }
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/corpus", get(corpus_summary))
        .route("/documents", get(list_documents).post(register_document))
        .route("/documents/{id}", get(get_document))
        .route("/documents/{id}/rating", put(manual_rating))
        .route("/estimate", post(run_estimate))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/analysis/groups", get(analysis_groups))
        .route("/analysis/coupling", get(analysis_coupling))
        .route("/scatter", get(scatter))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Blocking wrapper around [`serve`] for callers without a runtime.
pub fn serve_blocking(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    tokio::runtime::Runtime::new()?.block_on(serve(addr, state))
}

/// JSON body extractor whose rejections are [`ApiError`]s.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|e: JsonRejection| ApiError::validation(e.body_text(), Some("body")))
    }
}

/// Query-string extractor whose rejections are [`ApiError`]s.
pub struct ApiQuery<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for ApiQuery<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| ApiQuery(q.0))
            .map_err(|e: QueryRejection| ApiError::validation(e.body_text(), Some("query")))
    }
}

// ---- corpus ----------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub taxonomy: String,
    pub documents: usize,
    pub annotated: usize,
    pub unannotated: usize,
    pub revision: u64,
    pub defaults: CouplingThresholds,
    pub provenance: HashMap<Provenance, usize>,
}

async fn corpus_summary(State(state): State<AppState>) -> Json<CorpusSummary> {
    let c = state.inner.corpus.read().unwrap();
    let mut provenance = HashMap::new();
    for d in c.documents() {
        *provenance.entry(d.provenance()).or_default() += 1;
    }
    Json(CorpusSummary {
        taxonomy: c.taxonomy_ref().to_string(),
        documents: c.len(),
        annotated: c.annotated().count(),
        unannotated: c.unannotated().count(),
        revision: c.revision(),
        defaults: c.defaults(),
        provenance,
    })
}

#[derive(Debug, Deserialize)]
struct DocumentQuery {
    annotated: Option<bool>,
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DocumentPage {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub documents: Vec<StimulusDocument>,
}

async fn list_documents(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<DocumentQuery>,
) -> ApiResult<Json<DocumentPage>> {
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    if limit > MAX_PAGE {
        return Err(ApiError::validation(
            format!("limit must be at most {MAX_PAGE}"),
            Some("limit"),
        ));
    }
    let c = state.inner.corpus.read().unwrap();
    let matching: Vec<&StimulusDocument> = c
        .documents()
        .filter(|d| q.annotated.is_none_or(|a| d.is_annotated() == a))
        .collect();
    Ok(Json(DocumentPage {
        total: matching.len(),
        offset: q.offset,
        limit,
        documents: matching.into_iter().skip(q.offset).take(limit).cloned().collect(),
    }))
}

async fn get_document(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<StimulusDocument>> {
    let c = state.inner.corpus.read().unwrap();
    c.get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("document", &id))
}

/// Tags as a `;`-separated string or a JSON array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Tags {
    Joined(String),
    List(Vec<String>),
}

impl Tags {
    fn profile(&self, taxonomy: &Taxonomy) -> ApiResult<SemanticProfile> {
        let p = match self {
            Tags::Joined(s) => SemanticProfile::parse(s)?,
            Tags::List(v) => SemanticProfile::new(v)?,
        };
        p.resolve(taxonomy)?;
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
struct NewDocument {
    id: String,
    uri: String,
    tags: Tags,
}

async fn register_document(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<NewDocument>,
) -> ApiResult<(StatusCode, Json<StimulusDocument>)> {
    let profile = body.tags.profile(state.taxonomy())?;
    let doc = StimulusDocument::new(body.id, body.uri, profile, Provenance::Manual)?;
    let mut c = state.inner.corpus.write().unwrap();
    c.insert(doc.clone())?;
    state.persist(&c)?;
    Ok((StatusCode::CREATED, Json(doc)))
}

#[derive(Debug, Deserialize)]
struct ManualRating {
    val: f64,
    ar: f64,
    #[serde(default)]
    val_sd: f64,
    #[serde(default)]
    ar_sd: f64,
}

/// Direct entry of a rating, e.g. after a session ended in `manual_required`.
async fn manual_rating(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<ManualRating>,
) -> ApiResult<Json<StimulusDocument>> {
    let rating = AffectiveRating::new(body.val, body.val_sd, body.ar, body.ar_sd)?;
    let mut c = state.inner.corpus.write().unwrap();
    let doc = c
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("document", &id))?;
    let doc = doc.with_rating(rating, Provenance::Manual);
    c.commit(doc.clone())?;
    state.persist(&c)?;
    Ok(Json(doc))
}

// ---- estimation ------------------------------------------------------------

/// Optional overrides on top of the corpus defaults.
#[derive(Debug, Default, Deserialize)]
struct ConfigOverrides {
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
    k_fallback: Option<usize>,
    min_support: Option<usize>,
    include_estimated: Option<bool>,
}

impl ConfigOverrides {
    fn apply(&self, corpus: &Corpus) -> EstimationConfig {
        let base = EstimationConfig::from_corpus(corpus);
        EstimationConfig {
            eps_sem: self.eps_sem.unwrap_or(base.eps_sem),
            eps_emo: self.eps_emo.unwrap_or(base.eps_emo),
            k_fallback: self.k_fallback.unwrap_or(base.k_fallback),
            min_support: self.min_support.unwrap_or(base.min_support),
            include_estimated: self.include_estimated.unwrap_or(base.include_estimated),
        }
    }
}

#[derive(Debug, Deserialize)]
struct EstimateRequest {
    tags: Tags,
    #[serde(default)]
    config: ConfigOverrides,
}

async fn run_estimate(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<EstimateRequest>,
) -> ApiResult<Json<Estimation>> {
    let profile = body.tags.profile(state.taxonomy())?;
    let c = state.inner.corpus.read().unwrap();
    let cfg = body.config.apply(&c);
    Ok(Json(estimate(&profile, &c, state.taxonomy(), &cfg)?))
}

// ---- sessions --------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct SessionRequest {
    document_id: String,
    #[serde(default)]
    config: ConfigOverrides,
}

async fn create_session(
    State(state): State<AppState>,
    ApiJson(body): ApiJson<SessionRequest>,
) -> ApiResult<(StatusCode, Json<AnnotationSession>)> {
    let session = {
        let c = state.inner.corpus.read().unwrap();
        let target = c
            .get(&body.document_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("document", &body.document_id))?;
        let id = format!("s{}", state.inner.next_session.fetch_add(1, Ordering::Relaxed));
        open_session(id, target, &c, state.taxonomy(), &body.config.apply(&c))?
    };
    state
        .inner
        .sessions
        .lock()
        .unwrap()
        .insert(session.session_id.clone(), Arc::new(Mutex::new(session.clone())));
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<AnnotationSession>> {
    let s = state.session(&id)?;
    let s = s.lock().unwrap().clone();
    Ok(Json(s))
}

#[derive(Debug, Deserialize)]
struct FeedbackRequest {
    #[serde(flatten)]
    event: FeedbackEvent,
    /// When given, must equal the sequence number this event will receive.
    expected_seq: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub seq: u64,
    pub session: AnnotationSession,
}

async fn feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<FeedbackRequest>,
) -> ApiResult<Json<FeedbackResponse>> {
    let handle = state.session(&id)?;
    let mut session = handle.lock().unwrap();
    if let Some(expected) = body.expected_seq {
        if expected != session.seq() + 1 {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "SEQUENCE",
                format!("expected_seq {expected} but next event is {}", session.seq() + 1),
            ));
        }
    }
    let mut next = session.clone();
    let seq = next.apply(body.event)?;
    if let Some(doc) = next.committed() {
        let mut c = state.inner.corpus.write().unwrap();
        c.commit(doc.clone())?;
        *session = next;
        state.persist(&c)?;
    } else {
        *session = next;
    }
    Ok(Json(FeedbackResponse {
        seq,
        session: session.clone(),
    }))
}

// ---- analysis --------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct GroupsQuery {
    spec: String,
    c: Option<f64>,
    threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GroupReport {
    pub name: String,
    pub query_tags: SemanticProfile,
    pub size: usize,
    pub empty: bool,
    pub centroid: Option<EmotionPoint>,
    pub dispersion: (f64, f64),
    pub sigma: f64,
    pub members: Vec<String>,
    /// `None` when the group is too small for outlier detection.
    pub outliers: Option<Vec<OutlierView>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutlierView {
    pub id: String,
    pub distance: f64,
    pub score: f64,
}

impl From<Outlier> for OutlierView {
    fn from(o: Outlier) -> Self {
        Self {
            id: o.id,
            distance: o.distance,
            score: o.score,
        }
    }
}

fn outliers_or_none(g: &StimulusGroup, c: f64) -> ApiResult<Option<Vec<Outlier>>> {
    match group_outliers(g, c) {
        Ok(o) => Ok(Some(o)),
        Err(Error::InsufficientMembers { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn groups_for(state: &AppState, spec: &str, threshold: Option<f64>) -> ApiResult<Vec<StimulusGroup>> {
    let queries = parse_group_queries(spec)?;
    let c = state.inner.corpus.read().unwrap();
    Ok(build_groups(
        &c,
        state.taxonomy(),
        &queries,
        threshold.unwrap_or(DEFAULT_MATCH_THRESHOLD),
    )?)
}

async fn analysis_groups(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<GroupsQuery>,
) -> ApiResult<Json<Vec<GroupReport>>> {
    let c = q.c.unwrap_or(DEFAULT_OUTLIER_C);
    let groups = groups_for(&state, &q.spec, q.threshold)?;
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        out.push(GroupReport {
            outliers: outliers_or_none(&g, c)?.map(|o| o.into_iter().map(OutlierView::from).collect()),
            name: g.name.clone(),
            query_tags: g.query_tags.clone(),
            size: g.len(),
            empty: g.empty,
            centroid: g.centroid,
            dispersion: g.dispersion,
            sigma: g.sigma(),
            members: g.member_ids().map(String::from).collect(),
        });
    }
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
struct CouplingQuery {
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CoupledPair {
    pub a: String,
    pub b: String,
    pub d_sem: f64,
    pub d_emo: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CouplingReport {
    pub thresholds: CouplingThresholds,
    pub clusters: Vec<Vec<String>>,
    pub pairs: Vec<CoupledPair>,
}

/// Coupling over the annotated documents.
async fn analysis_coupling(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<CouplingQuery>,
) -> ApiResult<Json<CouplingReport>> {
    let c = state.inner.corpus.read().unwrap();
    let d = c.defaults();
    let th = CouplingThresholds::new(q.eps_sem.unwrap_or(d.eps_sem()), q.eps_emo.unwrap_or(d.eps_emo()))?;
    let docs: Vec<StimulusDocument> = c.annotated().cloned().collect();
    let m = coupling_matrix(&docs, state.taxonomy(), th)?;
    let pairs = m
        .coupled_pairs()
        .into_iter()
        .map(|(i, j)| CoupledPair {
            a: m.ids[i].clone(),
            b: m.ids[j].clone(),
            d_sem: m.d_sem[i][j],
            d_emo: m.d_emo[i][j],
        })
        .collect();
    Ok(Json(CouplingReport {
        thresholds: th,
        clusters: coupled_clusters(&docs, state.taxonomy(), th)?,
        pairs,
    }))
}

#[derive(Debug, Deserialize)]
struct ScatterQuery {
    spec: Option<String>,
    c: Option<f64>,
    threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub doc_id: String,
    pub group: String,
    pub val: f64,
    pub ar: f64,
    pub provenance: Provenance,
    pub outlier: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Centroid {
    pub group: String,
    pub val: f64,
    pub ar: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScatterData {
    pub points: Vec<ScatterPoint>,
    pub centroids: Vec<Centroid>,
}

async fn scatter(
    State(state): State<AppState>,
    ApiQuery(q): ApiQuery<ScatterQuery>,
) -> ApiResult<Json<ScatterData>> {
    let groups = match &q.spec {
        Some(spec) => groups_for(&state, spec, q.threshold)?,
        None => Vec::new(),
    };
    let c = q.c.unwrap_or(DEFAULT_OUTLIER_C);
    let mut flagged: Vec<(String, String)> = Vec::new();
    for g in &groups {
        for o in outliers_or_none(g, c)?.unwrap_or_default() {
            flagged.push((g.name.clone(), o.id));
        }
    }
    let corpus = state.inner.corpus.read().unwrap();
    let points = scatter_rows(&corpus, &groups)
        .into_iter()
        .map(|r| ScatterPoint {
            outlier: flagged.iter().any(|(g, id)| *g == r.group && *id == r.doc_id),
            doc_id: r.doc_id,
            group: r.group,
            val: r.val,
            ar: r.ar,
            provenance: r.provenance,
        })
        .collect();
    let centroids = groups
        .iter()
        .filter_map(|g| {
            g.centroid.map(|p| Centroid {
                group: g.name.clone(),
                val: p.val(),
                ar: p.ar(),
            })
        })
        .collect();
    Ok(Json(ScatterData { points, centroids }))
}
