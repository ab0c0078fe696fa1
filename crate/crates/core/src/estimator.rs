//! Ranked emotion estimates for a stimulus known only by its semantics.
//!
//! Pipeline, given a target profile and the annotated reference documents:
//!
//! 1. semantic distance from the target to every reference;
//! 2. neighbors = references within `eps_sem`, or the `k_fallback` nearest
//!    when that set is empty;
//! 3. single-linkage clustering of the neighbors' emotions with linkage
//!    threshold `eps_emo`: similar semantics may still elicit several
//!    distinct emotions, and each cluster is one hypothesis;
//! 4. per cluster, the similarity-weighted centroid is the candidate emotion
//!    and the cluster's share of the neighbors is its likelihood;
//! 5. candidates sorted by likelihood (desc), then mean semantic distance
//!    (asc), then smallest support id.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::affect::{check_positive, emotion_distance, EmotionPoint};
use crate::corpus::{Corpus, Provenance, StimulusDocument};
use crate::coupling::{components, DEFAULT_EPS_EMO, DEFAULT_EPS_SEM};
use crate::error::{Error, Result};
use crate::semantic::{best_match_average, InversePathLength, SemanticProfile};
use crate::taxonomy::Taxonomy;

pub const DEFAULT_K_FALLBACK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    pub eps_sem: f64,
    pub eps_emo: f64,
    pub k_fallback: usize,
    /// Clusters with fewer supporting documents are dropped, unless that
    /// would drop every cluster.
    pub min_support: usize,
    /// Whether documents annotated by earlier estimates serve as references.
    pub include_estimated: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            eps_sem: DEFAULT_EPS_SEM,
            eps_emo: DEFAULT_EPS_EMO,
            k_fallback: DEFAULT_K_FALLBACK,
            min_support: 1,
            include_estimated: true,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("eps_sem", self.eps_sem)?;
        check_positive("eps_emo", self.eps_emo)?;
        if self.k_fallback == 0 {
            return Err(Error::Invalid {
                field: "k_fallback",
                message: "must be at least 1".into(),
            });
        }
        if self.min_support == 0 {
            return Err(Error::Invalid {
                field: "min_support",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Uses the corpus' coupling thresholds as radii.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self {
            eps_sem: corpus.defaults().eps_sem(),
            eps_emo: corpus.defaults().eps_emo(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAnnotation {
    pub emotion: EmotionPoint,
    pub likelihood: f64,
    /// Supporting document ids, sorted.
    pub support: Vec<String>,
    pub mean_semantic_distance: f64,
    /// Sum of the support's semantic similarities to the target.
    pub similarity_mass: f64,
    /// Similarity-weighted spread of the support around `emotion`.
    pub val_sd: f64,
    pub ar_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimation {
    pub candidates: Vec<CandidateAnnotation>,
    /// True when no reference fell within `eps_sem` and the nearest
    /// `k_fallback` were used instead.
    pub used_fallback: bool,
    pub neighbor_count: usize,
}

impl Estimation {
    pub fn top(&self) -> Option<&CandidateAnnotation> {
        self.candidates.first()
    }
}

/// Annotated documents eligible as references under `cfg`.
pub fn references<'a>(corpus: &'a Corpus, cfg: &EstimationConfig) -> Vec<&'a StimulusDocument> {
    corpus
        .annotated()
        .filter(|d| cfg.include_estimated || d.provenance() != Provenance::Estimated)
        .collect()
}

pub fn estimate(
    target: &SemanticProfile,
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    cfg: &EstimationConfig,
) -> Result<Estimation> {
    estimate_from(target, &references(corpus, cfg), taxonomy, cfg)
}

struct Neighbor<'a> {
    doc: &'a StimulusDocument,
    emotion: EmotionPoint,
    similarity: f64,
    distance: f64,
}

/// Runs the pipeline against an explicit reference list (all annotated).
pub fn estimate_from(
    target: &SemanticProfile,
    refs: &[&StimulusDocument],
    taxonomy: &Taxonomy,
    cfg: &EstimationConfig,
) -> Result<Estimation> {
    cfg.validate()?;
    let target_nodes = target.resolve(taxonomy)?;
    let mut scored = Vec::with_capacity(refs.len());
    for doc in refs {
        let Some(emotion) = doc.emotion() else { continue };
        let nodes = doc.profile().resolve(taxonomy)?;
        let similarity = best_match_average(&InversePathLength, &target_nodes, &nodes, taxonomy);
        scored.push(Neighbor {
            doc,
            emotion,
            similarity,
            distance: 1.0 / similarity,
        });
    }
    if scored.is_empty() {
        return Err(Error::NoReferenceAnnotations);
    }

    let within = scored.iter().filter(|n| n.distance <= cfg.eps_sem).count();
    let used_fallback = within == 0;
    let neighbors: Vec<Neighbor> = if used_fallback {
        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| {
            scored[a]
                .distance
                .total_cmp(&scored[b].distance)
                .then_with(|| scored[a].doc.id().cmp(scored[b].doc.id()))
        });
        order.truncate(cfg.k_fallback);
        // keep reference order for deterministic summation
        order.sort_unstable();
        let mut keep = vec![false; scored.len()];
        order.into_iter().for_each(|i| keep[i] = true);
        scored
            .into_iter()
            .zip(keep)
            .filter_map(|(n, k)| k.then_some(n))
            .collect()
    } else {
        scored.into_iter().filter(|n| n.distance <= cfg.eps_sem).collect()
    };

    let clusters = components(neighbors.len(), |i, j| {
        emotion_distance(&neighbors[i].emotion, &neighbors[j].emotion) <= cfg.eps_emo
    });
    let mut kept: Vec<&Vec<usize>> = clusters.iter().filter(|c| c.len() >= cfg.min_support).collect();
    if kept.is_empty() {
        kept = clusters.iter().collect();
    }

    let total: usize = kept.iter().map(|c| c.len()).sum();
    let mut candidates: Vec<CandidateAnnotation> = kept
        .into_iter()
        .map(|members| summarize(&neighbors, members, total))
        .collect::<Result<_>>()?;
    candidates.sort_by(rank_order);

    Ok(Estimation {
        candidates,
        used_fallback,
        neighbor_count: neighbors.len(),
    })
}

fn summarize(neighbors: &[Neighbor], members: &[usize], total: usize) -> Result<CandidateAnnotation> {
    let mass: f64 = members.iter().map(|&i| neighbors[i].similarity).sum();
    // Offsets from the first member keep a cluster of identical points exact.
    let anchor = neighbors[members[0]].emotion;
    let (mut dv, mut da) = (0.0, 0.0);
    for &i in members {
        let n = &neighbors[i];
        dv += n.similarity * (n.emotion.val() - anchor.val());
        da += n.similarity * (n.emotion.ar() - anchor.ar());
    }
    let (lo_v, hi_v, lo_a, hi_a) = members.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(lv, hv, la, ha), &i| {
            let e = neighbors[i].emotion;
            (lv.min(e.val()), hv.max(e.val()), la.min(e.ar()), ha.max(e.ar()))
        },
    );
    let val = (anchor.val() + dv / mass).clamp(lo_v, hi_v);
    let ar = (anchor.ar() + da / mass).clamp(lo_a, hi_a);

    let (mut var_v, mut var_a) = (0.0, 0.0);
    for &i in members {
        let n = &neighbors[i];
        var_v += n.similarity * (n.emotion.val() - val).powi(2);
        var_a += n.similarity * (n.emotion.ar() - ar).powi(2);
    }

    let mut support: Vec<String> = members
        .iter()
        .map(|&i| neighbors[i].doc.id().to_string())
        .collect();
    support.sort();
    let mean_semantic_distance =
        members.iter().map(|&i| neighbors[i].distance).sum::<f64>() / members.len() as f64;

    Ok(CandidateAnnotation {
        emotion: EmotionPoint::new(val, ar)?,
        likelihood: members.len() as f64 / total as f64,
        support,
        mean_semantic_distance,
        similarity_mass: mass,
        val_sd: (var_v / mass).max(0.0).sqrt(),
        ar_sd: (var_a / mass).max(0.0).sqrt(),
    })
}

/// The documented candidate order.
pub fn rank_order(a: &CandidateAnnotation, b: &CandidateAnnotation) -> Ordering {
    b.likelihood
        .total_cmp(&a.likelihood)
        .then_with(|| a.mean_semantic_distance.total_cmp(&b.mean_semantic_distance))
        .then_with(|| a.support.first().cmp(&b.support.first()))
}
