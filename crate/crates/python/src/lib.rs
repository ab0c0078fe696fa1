//! Python bindings. Structured results come back as plain dicts and lists.

use std::collections::HashMap;

use affectcouple_core as core;
use affectcouple_core::analysis::{parse_group_queries, DEFAULT_MATCH_THRESHOLD, DEFAULT_OUTLIER_C};
use affectcouple_core::{
    AffectiveRating, CouplingThresholds, EmotionPoint, EstimationConfig, FeedbackEvent, GroundTruth,
    Provenance, SemanticProfile, StimulusDocument,
};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(
    affectcouple,
    AffectcoupleError,
    PyException,
    "Engine error; `code` holds the error class."
);

fn raise(e: core::Error) -> PyErr {
    Python::attach(|py| {
        let err = AffectcoupleError::new_err(e.to_string());
        let _ = err.value(py).setattr("code", e.code());
        err
    })
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(raise)
    }
}

/// Serializes through JSON so Python receives builtin types.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyException::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn profile(tags: Vec<String>) -> PyResult<SemanticProfile> {
    SemanticProfile::new(tags).or_raise()
}

fn point(v: (f64, f64)) -> PyResult<EmotionPoint> {
    EmotionPoint::new(v.0, v.1).or_raise()
}

#[pyclass(frozen, module = "affectcouple")]
struct Taxonomy(core::Taxonomy);

#[pymethods]
impl Taxonomy {
    #[staticmethod]
    fn parse(name: &str, text: &str) -> PyResult<Self> {
        core::Taxonomy::parse(name, text).map(Self).or_raise()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        core::Taxonomy::load(path).map(Self).or_raise()
    }

    #[getter]
    fn name(&self) -> &str {
        self.0.name()
    }

    fn terms(&self) -> Vec<String> {
        self.0.terms().map(String::from).collect()
    }

    fn descendants(&self, term: &str) -> PyResult<Vec<String>> {
        Ok(self
            .0
            .descendants(term)
            .or_raise()?
            .into_iter()
            .map(String::from)
            .collect())
    }

    fn term_similarity(&self, a: &str, b: &str) -> PyResult<f64> {
        core::term_similarity(a, b, &self.0).or_raise()
    }

    fn profile_similarity(&self, a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
        core::profile_similarity(&profile(a)?, &profile(b)?, &self.0).or_raise()
    }

    fn semantic_distance(&self, a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
        core::semantic_distance(&profile(a)?, &profile(b)?, &self.0).or_raise()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __contains__(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    fn __repr__(&self) -> String {
        format!("Taxonomy('{}', {} terms)", self.0.name(), self.0.len())
    }
}

#[pyclass(module = "affectcouple")]
struct Corpus(core::Corpus);

#[pymethods]
impl Corpus {
    #[new]
    #[pyo3(signature = (taxonomy_ref, eps_sem=core::coupling::DEFAULT_EPS_SEM, eps_emo=core::coupling::DEFAULT_EPS_EMO))]
    fn new(taxonomy_ref: &str, eps_sem: f64, eps_emo: f64) -> PyResult<Self> {
        let th = CouplingThresholds::new(eps_sem, eps_emo).or_raise()?;
        Ok(Self(core::Corpus::new(taxonomy_ref, th)))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        core::load_corpus(path).map(Self).or_raise()
    }

    #[staticmethod]
    #[pyo3(signature = (path, taxonomy, eps_sem=core::coupling::DEFAULT_EPS_SEM, eps_emo=core::coupling::DEFAULT_EPS_EMO))]
    fn from_manifest(path: &str, taxonomy: &Taxonomy, eps_sem: f64, eps_emo: f64) -> PyResult<Self> {
        let th = CouplingThresholds::new(eps_sem, eps_emo).or_raise()?;
        core::load_manifest(path, &taxonomy.0, th).map(Self).or_raise()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        core::save_corpus(&self.0, path).or_raise()
    }

    /// Adds a document; pass `val` and `ar` together to annotate it.
    #[pyo3(signature = (id, uri, tags, val=None, ar=None, val_sd=0.0, ar_sd=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn add(
        &mut self,
        id: &str,
        uri: &str,
        tags: Vec<String>,
        val: Option<f64>,
        ar: Option<f64>,
        val_sd: f64,
        ar_sd: f64,
    ) -> PyResult<()> {
        let mut doc = StimulusDocument::new(id, uri, profile(tags)?, Provenance::Manifest).or_raise()?;
        match (val, ar) {
            (Some(v), Some(a)) => {
                let r = AffectiveRating::new(v, val_sd, a, ar_sd).or_raise()?;
                doc = doc.with_rating(r, Provenance::Manifest);
            }
            (None, None) => {}
            _ => return Err(PyException::new_err("val and ar must be given together")),
        }
        self.0.insert(doc).or_raise()
    }

    /// Stores the document of a committed session.
    fn commit(&mut self, session: &Session) -> PyResult<u64> {
        let doc = session
            .0
            .committed()
            .ok_or_else(|| PyException::new_err(format!("session is {}", session.0.state.as_str())))?;
        self.0.commit(doc.clone()).or_raise()
    }

    fn get(&self, py: Python<'_>, id: &str) -> PyResult<Option<Py<PyAny>>> {
        self.0.get(id).map(|d| to_py(py, d)).transpose()
    }

    fn documents(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.documents().collect::<Vec<_>>())
    }

    fn ids(&self) -> Vec<String> {
        self.0.documents().map(|d| d.id().to_string()).collect()
    }

    #[getter]
    fn revision(&self) -> u64 {
        self.0.revision()
    }

    #[getter]
    fn defaults(&self) -> (f64, f64) {
        (self.0.defaults().eps_sem(), self.0.defaults().eps_emo())
    }

    fn summary(&self) -> String {
        core::corpus::summary(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({})", core::corpus::summary(&self.0))
    }
}

fn config(
    corpus: &core::Corpus,
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
    k_fallback: usize,
) -> EstimationConfig {
    let base = EstimationConfig::from_corpus(corpus);
    EstimationConfig {
        eps_sem: eps_sem.unwrap_or(base.eps_sem),
        eps_emo: eps_emo.unwrap_or(base.eps_emo),
        k_fallback,
        ..base
    }
}

#[pyclass(module = "affectcouple")]
struct Session(core::AnnotationSession);

#[pymethods]
impl Session {
    #[staticmethod]
    #[pyo3(signature = (session_id, corpus, taxonomy, document_id, eps_sem=None, eps_emo=None, k_fallback=5))]
    #[allow(clippy::too_many_arguments)]
    fn open(
        session_id: &str,
        corpus: &Corpus,
        taxonomy: &Taxonomy,
        document_id: &str,
        eps_sem: Option<f64>,
        eps_emo: Option<f64>,
        k_fallback: usize,
    ) -> PyResult<Self> {
        let target = corpus
            .0
            .get(document_id)
            .cloned()
            .ok_or_else(|| raise(core::Error::UnknownDocument(document_id.into())))?;
        let cfg = config(&corpus.0, eps_sem, eps_emo, k_fallback);
        core::open_session(session_id, target, &corpus.0, &taxonomy.0, &cfg)
            .map(Self)
            .or_raise()
    }

    #[getter]
    fn state(&self) -> &'static str {
        self.0.state.as_str()
    }

    #[getter]
    fn seq(&self) -> u64 {
        self.0.seq()
    }

    #[getter]
    fn candidates(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.candidates)
    }

    #[getter]
    fn history(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.history)
    }

    fn accept(&mut self, index: usize) -> PyResult<u64> {
        self.0.apply(FeedbackEvent::Accept { index }).or_raise()
    }

    fn reject(&mut self, index: usize) -> PyResult<u64> {
        self.0.apply(FeedbackEvent::Reject { index }).or_raise()
    }

    fn adjust(&mut self, val: f64, ar: f64) -> PyResult<u64> {
        self.0.apply(FeedbackEvent::Adjust { val, ar }).or_raise()
    }

    fn abandon(&mut self) -> PyResult<u64> {
        self.0.apply(FeedbackEvent::Abandon).or_raise()
    }

    fn committed(&self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        self.0.committed().map(|d| to_py(py, d)).transpose()
    }

    fn __repr__(&self) -> String {
        format!(
            "Session('{}', {}, {} candidates)",
            self.0.session_id,
            self.0.state.as_str(),
            self.0.candidates.len()
        )
    }
}

#[pyfunction]
fn emotion_distance(a: (f64, f64), b: (f64, f64)) -> PyResult<f64> {
    Ok(core::emotion_distance(&point(a)?, &point(b)?))
}

#[pyfunction]
#[pyo3(signature = (corpus, taxonomy, tags, eps_sem=None, eps_emo=None, k_fallback=5))]
fn estimate(
    py: Python<'_>,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    tags: Vec<String>,
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
    k_fallback: usize,
) -> PyResult<Py<PyAny>> {
    let cfg = config(&corpus.0, eps_sem, eps_emo, k_fallback);
    let est = core::estimate(&profile(tags)?, &corpus.0, &taxonomy.0, &cfg).or_raise()?;
    to_py(py, &est)
}

fn thresholds(
    corpus: &core::Corpus,
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
) -> PyResult<CouplingThresholds> {
    let d = corpus.defaults();
    CouplingThresholds::new(eps_sem.unwrap_or(d.eps_sem()), eps_emo.unwrap_or(d.eps_emo())).or_raise()
}

/// Coupling clusters over the annotated documents.
#[pyfunction]
#[pyo3(signature = (corpus, taxonomy, eps_sem=None, eps_emo=None))]
fn coupled_clusters(
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
) -> PyResult<Vec<Vec<String>>> {
    let docs: Vec<_> = corpus.0.annotated().cloned().collect();
    core::coupled_clusters(&docs, &taxonomy.0, thresholds(&corpus.0, eps_sem, eps_emo)?).or_raise()
}

#[pyfunction]
#[pyo3(signature = (corpus, taxonomy, a, b, eps_sem=None, eps_emo=None))]
fn couple(
    py: Python<'_>,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    a: &str,
    b: &str,
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let get = |id: &str| {
        corpus
            .0
            .get(id)
            .ok_or_else(|| raise(core::Error::UnknownDocument(id.into())))
    };
    let v = core::couple(
        get(a)?,
        get(b)?,
        &taxonomy.0,
        thresholds(&corpus.0, eps_sem, eps_emo)?,
    )
    .or_raise()?;
    to_py(py, &v)
}

#[derive(Serialize)]
struct GroupView<'a> {
    #[serde(flatten)]
    group: &'a core::StimulusGroup,
    sigma: f64,
    outliers: Option<Vec<core::analysis::Outlier>>,
}

/// Groups from a `name = tags | ...` spec, each with its outliers (None
/// for groups under three members).
#[pyfunction]
#[pyo3(signature = (corpus, taxonomy, spec, threshold=DEFAULT_MATCH_THRESHOLD, c=DEFAULT_OUTLIER_C))]
fn build_groups(
    py: Python<'_>,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    spec: &str,
    threshold: f64,
    c: f64,
) -> PyResult<Py<PyAny>> {
    let queries = parse_group_queries(spec).or_raise()?;
    let groups = core::build_groups(&corpus.0, &taxonomy.0, &queries, threshold).or_raise()?;
    let mut views = Vec::with_capacity(groups.len());
    for g in &groups {
        let outliers = match core::group_outliers(g, c) {
            Ok(o) => Some(o),
            Err(core::Error::InsufficientMembers { .. }) => None,
            Err(e) => return Err(raise(e)),
        };
        views.push(GroupView {
            group: g,
            sigma: g.sigma(),
            outliers,
        });
    }
    to_py(py, &views)
}

#[derive(Serialize)]
struct LooView<'a> {
    mean_top1_error: f64,
    median_top1_error: f64,
    hit_at_1: f64,
    hit_at_3: f64,
    per_group: Vec<core::evaluation::GroupSummary>,
    rows: &'a [core::evaluation::LooRow],
}

#[pyfunction]
#[pyo3(signature = (corpus, taxonomy, eps_sem=None, eps_emo=None, ground_truth=None, k_fallback=5))]
fn leave_one_out(
    py: Python<'_>,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    eps_sem: Option<f64>,
    eps_emo: Option<f64>,
    ground_truth: Option<HashMap<String, String>>,
    k_fallback: usize,
) -> PyResult<Py<PyAny>> {
    let cfg = config(&corpus.0, eps_sem, eps_emo, k_fallback);
    let truth: Option<GroundTruth> = ground_truth.map(|m| m.into_iter().collect());
    let r = core::leave_one_out(&corpus.0, &taxonomy.0, &cfg, truth.as_ref()).or_raise()?;
    to_py(
        py,
        &LooView {
            mean_top1_error: r.mean_top1_error(),
            median_top1_error: r.median_top1_error(),
            hit_at_1: r.hit_rate(1),
            hit_at_3: r.hit_rate(3),
            per_group: r.per_group(),
            rows: &r.rows,
        },
    )
}

/// Returns `(corpus, ground_truth)` for a JSON group specification.
#[pyfunction]
#[pyo3(signature = (spec_json, taxonomy, seed, eps_sem=core::coupling::DEFAULT_EPS_SEM, eps_emo=core::coupling::DEFAULT_EPS_EMO))]
fn generate_synthetic(
    spec_json: &str,
    taxonomy: &Taxonomy,
    seed: u64,
    eps_sem: f64,
    eps_emo: f64,
) -> PyResult<(Corpus, HashMap<String, String>)> {
    let spec = core::SyntheticSpec::from_json(spec_json).or_raise()?;
    let th = CouplingThresholds::new(eps_sem, eps_emo).or_raise()?;
    let s = core::generate_synthetic(&spec, &taxonomy.0, seed, th).or_raise()?;
    Ok((Corpus(s.corpus), s.ground_truth.into_iter().collect()))
}

#[pymodule]
fn affectcouple(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AffectcoupleError", m.py().get_type::<AffectcoupleError>())?;
    m.add_class::<Taxonomy>()?;
    m.add_class::<Corpus>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(emotion_distance, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(couple, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_clusters, m)?)?;
    m.add_function(wrap_pyfunction!(build_groups, m)?)?;
    m.add_function(wrap_pyfunction!(leave_one_out, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    Ok(())
}
