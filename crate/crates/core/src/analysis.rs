//! Tag-cloud group statistics in the valence/arousal plane.

use std::io::Write;

use serde::Serialize;

use crate::affect::{check_positive, emotion_distance, EmotionPoint};
use crate::corpus::{format_number, Corpus, Provenance};
use crate::error::{Error, Result};
use crate::semantic::{InversePathLength, SemanticProfile, TermMeasure};
use crate::taxonomy::Taxonomy;

pub const GROUP_REPORT_HEADER: [&str; 7] = [
    "group",
    "name_count",
    "centroid_val",
    "centroid_ar",
    "sd_val",
    "sd_ar",
    "outlier_count",
];
pub const SCATTER_HEADER: [&str; 4] = ["doc_id", "group", "val", "ar"];

/// Exact-term membership.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 1.0;
pub const DEFAULT_OUTLIER_C: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupQuery {
    pub name: String,
    pub tags: SemanticProfile,
}

impl GroupQuery {
    pub fn new(name: impl Into<String>, tags: &str) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            tags: SemanticProfile::parse(tags)?,
        })
    }
}

/// Parses `name = tag1;tag2` entries separated by newlines or `|`.
/// `#` starts a comment line.
pub fn parse_group_queries(text: &str) -> Result<Vec<GroupQuery>> {
    let mut out: Vec<GroupQuery> = Vec::new();
    for entry in text.split(['\n', '|']) {
        let entry = entry.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        let (name, tags) = entry.split_once('=').ok_or_else(|| Error::Invalid {
            field: "groups",
            message: format!("expected 'name = tags', got '{entry}'"),
        })?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Invalid {
                field: "groups",
                message: "empty group name".into(),
            });
        }
        if out.iter().any(|q| q.name == name) {
            return Err(Error::Invalid {
                field: "groups",
                message: format!("group '{name}' declared twice"),
            });
        }
        out.push(GroupQuery::new(name, tags)?);
    }
    if out.is_empty() {
        return Err(Error::Invalid {
            field: "groups",
            message: "no group queries".into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMember {
    pub id: String,
    pub emotion: EmotionPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StimulusGroup {
    pub name: String,
    pub query_tags: SemanticProfile,
    pub members: Vec<GroupMember>,
    /// Arithmetic mean of member emotions; `None` for an empty group.
    pub centroid: Option<EmotionPoint>,
    /// Population SD per axis `(val, ar)`.
    pub dispersion: (f64, f64),
    pub empty: bool,
}

impl StimulusGroup {
    pub fn member_ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|m| m.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Per-axis SDs combined in quadrature.
    pub fn sigma(&self) -> f64 {
        self.dispersion.0.hypot(self.dispersion.1)
    }
}

fn group_stats(members: &[GroupMember]) -> Result<(Option<EmotionPoint>, (f64, f64))> {
    if members.is_empty() {
        return Ok((None, (0.0, 0.0)));
    }
    let n = members.len() as f64;
    let mv = members.iter().map(|m| m.emotion.val()).sum::<f64>() / n;
    let ma = members.iter().map(|m| m.emotion.ar()).sum::<f64>() / n;
    let sv = (members
        .iter()
        .map(|m| (m.emotion.val() - mv).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let sa = (members.iter().map(|m| (m.emotion.ar() - ma).powi(2)).sum::<f64>() / n).sqrt();
    // a mean of in-range values can only leave [1,9] by rounding
    let centroid = EmotionPoint::new(mv.clamp(1.0, 9.0), ma.clamp(1.0, 9.0))?;
    Ok((Some(centroid), (sv, sa)))
}

/// Builds one group per query. A document joins a group when any of its
/// descriptors has term similarity `>= match_threshold` with any query tag.
pub fn build_groups(
    corpus: &Corpus,
    taxonomy: &Taxonomy,
    queries: &[GroupQuery],
    match_threshold: f64,
) -> Result<Vec<StimulusGroup>> {
    check_positive("match_threshold", match_threshold)?;
    let mut groups = Vec::with_capacity(queries.len());
    for q in queries {
        let query_nodes = q.tags.resolve(taxonomy)?;
        let mut members = Vec::new();
        for doc in corpus.annotated() {
            let nodes = doc.profile().resolve(taxonomy)?;
            let hit = nodes.iter().any(|&d| {
                query_nodes
                    .iter()
                    .any(|&t| InversePathLength.similarity(taxonomy, d, t) >= match_threshold)
            });
            if hit {
                members.push(GroupMember {
                    id: doc.id().to_string(),
                    emotion: doc.emotion().expect("annotated"),
                });
            }
        }
        let (centroid, dispersion) = group_stats(&members)?;
        groups.push(StimulusGroup {
            name: q.name.clone(),
            query_tags: q.tags.clone(),
            empty: members.is_empty(),
            members,
            centroid,
            dispersion,
        });
    }
    Ok(groups)
}

/// Names of groups with at least one member within `eps_emo` of `point`.
pub fn point_coverage(point: &EmotionPoint, groups: &[StimulusGroup], eps_emo: f64) -> Vec<String> {
    groups
        .iter()
        .filter(|g| {
            g.members
                .iter()
                .any(|m| emotion_distance(&m.emotion, point) <= eps_emo)
        })
        .map(|g| g.name.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outlier {
    pub id: String,
    pub distance: f64,
    /// `distance / sigma`
    pub score: f64,
}

/// Members farther than `c * sigma` from the centroid, farthest first.
pub fn group_outliers(group: &StimulusGroup, c: f64) -> Result<Vec<Outlier>> {
    check_positive("c", c)?;
    if group.members.len() < 3 {
        return Err(Error::InsufficientMembers {
            group: group.name.clone(),
            len: group.members.len(),
        });
    }
    let centroid = group.centroid.expect("non-empty group");
    let sigma = group.sigma();
    let limit = c * sigma;
    let mut out: Vec<Outlier> = group
        .members
        .iter()
        .filter_map(|m| {
            let distance = emotion_distance(&m.emotion, &centroid);
            (distance > limit).then(|| Outlier {
                id: m.id.clone(),
                distance,
                score: distance / sigma,
            })
        })
        .collect();
    out.sort_by(|a, b| b.distance.total_cmp(&a.distance).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}

pub fn write_group_report<W: Write>(groups: &[StimulusGroup], c: f64, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(GROUP_REPORT_HEADER)?;
    for g in groups {
        let outliers = match group_outliers(g, c) {
            Ok(o) => o.len(),
            Err(Error::InsufficientMembers { .. }) => 0,
            Err(e) => return Err(e),
        };
        let (cv, ca) = g
            .centroid
            .map(|p| (format_number(p.val()), format_number(p.ar())))
            .unwrap_or_default();
        let (sv, sa) = if g.empty {
            (String::new(), String::new())
        } else {
            (format_number(g.dispersion.0), format_number(g.dispersion.1))
        };
        out.write_record([
            g.name.clone(),
            g.len().to_string(),
            cv,
            ca,
            sv,
            sa,
            outliers.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<group report>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub doc_id: String,
    /// Empty when the document belongs to no group.
    pub group: String,
    pub val: f64,
    pub ar: f64,
    pub provenance: Provenance,
}

/// One row per (annotated document, group) membership; ungrouped documents
/// get a single row with an empty group.
pub fn scatter_rows(corpus: &Corpus, groups: &[StimulusGroup]) -> Vec<ScatterRow> {
    let mut rows = Vec::new();
    for doc in corpus.annotated() {
        let e = doc.emotion().expect("annotated");
        let row = |group: &str| ScatterRow {
            doc_id: doc.id().to_string(),
            group: group.to_string(),
            val: e.val(),
            ar: e.ar(),
            provenance: doc.provenance(),
        };
        let mut any = false;
        for g in groups.iter().filter(|g| g.member_ids().any(|id| id == doc.id())) {
            rows.push(row(&g.name));
            any = true;
        }
        if !any {
            rows.push(row(""));
        }
    }
    rows
}

pub fn write_scatter<W: Write>(rows: &[ScatterRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCATTER_HEADER)?;
    for r in rows {
        out.write_record([
            r.doc_id.clone(),
            r.group.clone(),
            format_number(r.val),
            format_number(r.ar),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<scatter>", e))
}
