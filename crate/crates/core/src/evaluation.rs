//! Leave-one-out evaluation of the estimator.

use std::fmt::Write as _;
use std::io::Write;

use indexmap::IndexMap;
use serde::Serialize;

use crate::affect::{emotion_distance, EmotionPoint};
use crate::corpus::{format_number, Corpus};
use crate::error::{Error, Result};
use crate::estimator::{estimate_from, references, EstimationConfig};
use crate::synthetic::GroundTruth;
use crate::taxonomy::Taxonomy;

pub const LOO_HEADER: [&str; 8] = [
    "doc_id",
    "true_val",
    "true_ar",
    "pred_val",
    "pred_ar",
    "top1_error",
    "hit_at_1",
    "hit_at_3",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooRow {
    pub doc_id: String,
    pub truth: EmotionPoint,
    pub prediction: EmotionPoint,
    pub top1_error: f64,
    /// 1-based rank of the first candidate within `eps_emo` of the truth.
    pub first_hit: Option<usize>,
    pub group: Option<String>,
}

impl LooRow {
    pub fn hit_at(&self, k: usize) -> bool {
        self.first_hit.is_some_and(|r| r <= k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub count: usize,
    pub mean_top1_error: f64,
    pub hit_at_1: f64,
    pub hit_at_3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub rows: Vec<LooRow>,
    pub eps_emo: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl LooReport {
    pub fn mean_top1_error(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.top1_error))
    }

    pub fn median_top1_error(&self) -> f64 {
        let mut e: Vec<f64> = self.rows.iter().map(|r| r.top1_error).collect();
        if e.is_empty() {
            return 0.0;
        }
        e.sort_by(f64::total_cmp);
        let mid = e.len() / 2;
        if e.len() % 2 == 1 {
            e[mid]
        } else {
            (e[mid - 1] + e[mid]) / 2.0
        }
    }

    /// Fraction of documents with a hit in the top `k`.
    pub fn hit_rate(&self, k: usize) -> f64 {
        mean(self.rows.iter().map(|r| if r.hit_at(k) { 1.0 } else { 0.0 }))
    }

    pub fn per_group(&self) -> Vec<GroupSummary> {
        let mut groups: IndexMap<&str, Vec<&LooRow>> = IndexMap::new();
        for r in &self.rows {
            if let Some(g) = &r.group {
                groups.entry(g.as_str()).or_default().push(r);
            }
        }
        groups
            .into_iter()
            .map(|(g, rows)| GroupSummary {
                group: g.to_string(),
                count: rows.len(),
                mean_top1_error: mean(rows.iter().map(|r| r.top1_error)),
                hit_at_1: mean(rows.iter().map(|r| f64::from(u8::from(r.hit_at(1))))),
                hit_at_3: mean(rows.iter().map(|r| f64::from(u8::from(r.hit_at(3))))),
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(LOO_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.doc_id.clone(),
                format_number(r.truth.val()),
                format_number(r.truth.ar()),
                format_number(r.prediction.val()),
                format_number(r.prediction.ar()),
                format_number(r.top1_error),
                u8::from(r.hit_at(1)).to_string(),
                u8::from(r.hit_at(3)).to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<loo report>", e))
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "documents: {}", self.rows.len());
        let _ = writeln!(s, "eps_emo: {}", format_number(self.eps_emo));
        let _ = writeln!(s, "mean top-1 error: {:.4}", self.mean_top1_error());
        let _ = writeln!(s, "median top-1 error: {:.4}", self.median_top1_error());
        let _ = writeln!(s, "hit@1: {:.2}%", 100.0 * self.hit_rate(1));
        let _ = writeln!(s, "hit@3: {:.2}%", 100.0 * self.hit_rate(3));
        for g in self.per_group() {
            let _ = writeln!(
                s,
                "group {}: n={} mean_err={:.4} hit@1={:.2}% hit@3={:.2}%",
                g.group,
                g.count,
                g.mean_top1_error,
                100.0 * g.hit_at_1,
                100.0 * g.hit_at_3
            );
        }
        s
    }
}

/// Hides each annotated document in turn and estimates it from the rest.
pub fn leave_one_out(
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    cfg: &EstimationConfig,
    groups: Option<&GroundTruth>,
) -> Result<LooReport> {
    cfg.validate()?;
    let refs = references(corpus, cfg);
    if refs.len() < 2 {
        return Err(Error::InsufficientData(refs.len()));
    }
    let mut rows = Vec::with_capacity(refs.len());
    for (i, held_out) in refs.iter().enumerate() {
        let truth = held_out.emotion().expect("references are annotated");
        let rest: Vec<_> = refs
            .iter()
            .enumerate()
            .filter_map(|(j, d)| (j != i).then_some(*d))
            .collect();
        let est = estimate_from(held_out.profile(), &rest, taxonomy, cfg)?;
        let top = est.top().ok_or(Error::NoReferenceAnnotations)?;
        let first_hit = est
            .candidates
            .iter()
            .position(|c| emotion_distance(&c.emotion, &truth) <= cfg.eps_emo)
            .map(|p| p + 1);
        rows.push(LooRow {
            doc_id: held_out.id().to_string(),
            truth,
            prediction: top.emotion,
            top1_error: emotion_distance(&top.emotion, &truth),
            first_hit,
            group: groups.and_then(|g| g.get(held_out.id()).cloned()),
        });
    }
    Ok(LooReport {
        rows,
        eps_emo: cfg.eps_emo,
    })
}
