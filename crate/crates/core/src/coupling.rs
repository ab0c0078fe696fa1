//! Pairwise semantic-affective coupling and the clusters it induces.
//!
//! Two annotated documents are coupled when their semantics differ, their
//! semantic distance is within `eps_sem`, and their emotion distance is
//! within `eps_emo` (both bounds inclusive).

use serde::{Deserialize, Serialize};

use crate::affect::{check_positive, emotion_distance};
use crate::corpus::StimulusDocument;
use crate::error::{Error, Result};
use crate::semantic::{best_match_average, InversePathLength};
use crate::taxonomy::{NodeId, Taxonomy};

pub const DEFAULT_EPS_SEM: f64 = 2.0;
pub const DEFAULT_EPS_EMO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdRecord")]
pub struct CouplingThresholds {
    eps_sem: f64,
    eps_emo: f64,
}

#[derive(Deserialize)]
struct ThresholdRecord {
    eps_sem: f64,
    eps_emo: f64,
}

impl TryFrom<ThresholdRecord> for CouplingThresholds {
    type Error = Error;

    fn try_from(r: ThresholdRecord) -> Result<Self> {
        Self::new(r.eps_sem, r.eps_emo)
    }
}

impl Default for CouplingThresholds {
    fn default() -> Self {
        Self {
            eps_sem: DEFAULT_EPS_SEM,
            eps_emo: DEFAULT_EPS_EMO,
        }
    }
}

impl CouplingThresholds {
    pub fn new(eps_sem: f64, eps_emo: f64) -> Result<Self> {
        Ok(Self {
            eps_sem: check_positive("eps_sem", eps_sem)?,
            eps_emo: check_positive("eps_emo", eps_emo)?,
        })
    }

    pub fn eps_sem(&self) -> f64 {
        self.eps_sem
    }

    pub fn eps_emo(&self) -> f64 {
        self.eps_emo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingVerdict {
    pub doc_a: String,
    pub doc_b: String,
    pub d_sem: f64,
    pub d_emo: f64,
    pub coupled: bool,
    pub identical_semantics: bool,
    pub thresholds: CouplingThresholds,
}

struct Prepared<'a> {
    doc: &'a StimulusDocument,
    nodes: Vec<NodeId>,
    emotion: crate::affect::EmotionPoint,
}

fn prepare<'a>(doc: &'a StimulusDocument, taxonomy: &Taxonomy) -> Result<Prepared<'a>> {
    let emotion = doc
        .emotion()
        .ok_or_else(|| Error::Unannotated(doc.id().to_string()))?;
    Ok(Prepared {
        doc,
        nodes: doc.profile().resolve(taxonomy)?,
        emotion,
    })
}

fn verdict(a: &Prepared, b: &Prepared, taxonomy: &Taxonomy, th: CouplingThresholds) -> CouplingVerdict {
    let sim = best_match_average(&InversePathLength, &a.nodes, &b.nodes, taxonomy);
    let d_sem = 1.0 / sim;
    let d_emo = emotion_distance(&a.emotion, &b.emotion);
    let identical_semantics = a.doc.profile() == b.doc.profile();
    CouplingVerdict {
        doc_a: a.doc.id().to_string(),
        doc_b: b.doc.id().to_string(),
        d_sem,
        d_emo,
        coupled: !identical_semantics && d_sem <= th.eps_sem && d_emo <= th.eps_emo,
        identical_semantics,
        thresholds: th,
    }
}

pub fn couple(
    doc_a: &StimulusDocument,
    doc_b: &StimulusDocument,
    taxonomy: &Taxonomy,
    th: CouplingThresholds,
) -> Result<CouplingVerdict> {
    let a = prepare(doc_a, taxonomy)?;
    let b = prepare(doc_b, taxonomy)?;
    Ok(verdict(&a, &b, taxonomy, th))
}

/// All pairwise verdicts over a document list, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingMatrix {
    pub ids: Vec<String>,
    pub coupled: Vec<Vec<bool>>,
    pub d_sem: Vec<Vec<f64>>,
    pub d_emo: Vec<Vec<f64>>,
    pub thresholds: CouplingThresholds,
}

impl CouplingMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Index pairs `(i, j)`, `i < j`, that are coupled.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.coupled[i][j])
            .collect()
    }
}

pub fn coupling_matrix(
    docs: &[StimulusDocument],
    taxonomy: &Taxonomy,
    th: CouplingThresholds,
) -> Result<CouplingMatrix> {
    let prepared = docs
        .iter()
        .map(|d| prepare(d, taxonomy))
        .collect::<Result<Vec<_>>>()?;
    let n = prepared.len();
    let mut coupled = vec![vec![false; n]; n];
    let mut d_sem = vec![vec![0.0; n]; n];
    let mut d_emo = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = verdict(&prepared[i], &prepared[j], taxonomy, th);
            coupled[i][j] = v.coupled;
            coupled[j][i] = v.coupled;
            d_sem[i][j] = v.d_sem;
            d_sem[j][i] = v.d_sem;
            d_emo[i][j] = v.d_emo;
            d_emo[j][i] = v.d_emo;
        }
    }
    Ok(CouplingMatrix {
        ids: docs.iter().map(|d| d.id().to_string()).collect(),
        coupled,
        d_sem,
        d_emo,
        thresholds: th,
    })
}

/// Connected components of the coupling graph, each listed in input order.
/// Components are ordered by their first member.
pub fn coupled_clusters(
    docs: &[StimulusDocument],
    taxonomy: &Taxonomy,
    th: CouplingThresholds,
) -> Result<Vec<Vec<String>>> {
    let m = coupling_matrix(docs, taxonomy, th)?;
    Ok(components(m.len(), |i, j| m.coupled[i][j])
        .into_iter()
        .map(|c| c.into_iter().map(|i| m.ids[i].clone()).collect())
        .collect())
}

/// Connected components over `0..n` for a symmetric adjacency predicate.
pub(crate) fn components(n: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        label[start] = id;
        let mut members = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            #[allow(clippy::needless_range_loop)]
            for v in 0..n {
                if label[v] == usize::MAX && linked(u, v) {
                    label[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affect::AffectiveRating;
    use crate::corpus::Provenance;
    use crate::semantic::SemanticProfile;

    fn reptiles() -> Taxonomy {
        Taxonomy::builder("reptiles", "entity")
            .edge("reptile", "entity")
            .edge("snake", "reptile")
            .edge("viper", "reptile")
            .edge("dog", "entity")
            .build()
            .unwrap()
    }

    fn doc(id: &str, tags: &str, val: f64, ar: f64) -> StimulusDocument {
        StimulusDocument::new(
            id,
            format!("{id}.jpg"),
            SemanticProfile::parse(tags).unwrap(),
            Provenance::Manifest,
        )
        .unwrap()
        .with_rating(
            AffectiveRating::new(val, 0.0, ar, 0.0).unwrap(),
            Provenance::Manifest,
        )
    }

    #[test]
    fn snake_viper_tight_semantic_radius() {
        let t = reptiles();
        let a = doc("1", "snake", 2.0, 6.0);
        let b = doc("2", "viper", 2.4, 6.4);
        let v = couple(&a, &b, &t, CouplingThresholds::new(2.1, 1.0).unwrap()).unwrap();
        assert_eq!(v.d_sem, 3.0);
        assert!((v.d_emo - 0.32f64.sqrt()).abs() < 1e-12);
        assert!(!v.coupled);
        assert!(!v.identical_semantics);
    }

    #[test]
    fn snake_viper_boundary_radius() {
        let t = reptiles();
        let a = doc("1", "snake", 2.0, 6.0);
        let b = doc("2", "viper", 2.4, 6.4);
        let v = couple(&a, &b, &t, CouplingThresholds::new(3.0, 1.0).unwrap()).unwrap();
        assert!(v.coupled);
    }

    #[test]
    fn identical_semantics_never_couple() {
        let t = reptiles();
        let v = couple(
            &doc("1", "dog", 5.0, 5.0),
            &doc("2", "dog", 5.0, 5.0),
            &t,
            CouplingThresholds::new(100.0, 100.0).unwrap(),
        )
        .unwrap();
        assert!(v.identical_semantics);
        assert!(!v.coupled);
    }

    #[test]
    fn unannotated_is_an_error() {
        let t = reptiles();
        let bare = StimulusDocument::new(
            "x",
            "x.jpg",
            SemanticProfile::parse("dog").unwrap(),
            Provenance::Manual,
        )
        .unwrap();
        let err = couple(
            &bare,
            &doc("1", "dog", 5.0, 5.0),
            &t,
            CouplingThresholds::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("unannotated document"));
    }

    #[test]
    fn matrix_and_clusters() {
        let t = reptiles();
        let th = CouplingThresholds::new(3.0, 1.0).unwrap();
        let single = coupling_matrix(&[doc("1", "snake", 2.0, 6.0)], &t, th).unwrap();
        assert_eq!(single.coupled, vec![vec![false]]);

        let docs = vec![
            doc("1", "snake", 2.0, 6.0),
            doc("2", "viper", 2.4, 6.4),
            doc("3", "dog", 7.0, 3.0),
        ];
        let m = coupling_matrix(&docs, &t, th).unwrap();
        assert_eq!(m.coupled_pairs(), vec![(0, 1)]);
        let clusters = coupled_clusters(&docs, &t, th).unwrap();
        assert_eq!(
            clusters,
            vec![vec!["1".to_string(), "2".into()], vec!["3".into()]]
        );
    }

    #[test]
    fn chains_merge_into_one_cluster() {
        let t = reptiles();
        let th = CouplingThresholds::new(3.0, 1.0).unwrap();
        // a-b and b-c coupled, a-c too far apart in emotion
        let docs = vec![
            doc("a", "snake", 2.0, 6.0),
            doc("b", "viper", 2.8, 6.0),
            doc("c", "snake;reptile", 3.6, 6.0),
        ];
        let m = coupling_matrix(&docs, &t, th).unwrap();
        assert!(m.coupled[0][1] && m.coupled[1][2] && !m.coupled[0][2]);
        assert_eq!(coupled_clusters(&docs, &t, th).unwrap().len(), 1);
    }

    #[test]
    fn no_coupling_gives_singletons() {
        let t = reptiles();
        let th = CouplingThresholds::new(1.0, 0.1).unwrap();
        let docs = vec![
            doc("1", "snake", 2.0, 6.0),
            doc("2", "viper", 2.4, 6.4),
            doc("3", "dog", 7.0, 3.0),
        ];
        assert_eq!(coupled_clusters(&docs, &t, th).unwrap().len(), 3);
    }
}
