//! Semantic profiles (tag clouds) and their similarity over a [`Taxonomy`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affect::check_positive;
use crate::error::{Error, Result};
use crate::taxonomy::{normalize_term, NodeId, Taxonomy};

/// Similarity between two taxonomy nodes, in `(0, 1]`.
pub trait TermMeasure {
    fn similarity(&self, taxonomy: &Taxonomy, a: NodeId, b: NodeId) -> f64;
}

/// `1 / (1 + L)` with `L` the shortest undirected is-a path length.
#[derive(Debug, Clone, Copy, Default)]
pub struct InversePathLength;

impl TermMeasure for InversePathLength {
    fn similarity(&self, taxonomy: &Taxonomy, a: NodeId, b: NodeId) -> f64 {
        1.0 / (1.0 + f64::from(taxonomy.path_length(a, b)))
    }
}

/// A non-empty, duplicate-free set of normalized descriptor terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SemanticProfile(BTreeSet<String>);

impl SemanticProfile {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for t in terms {
            match normalize_term(t.as_ref()) {
                Some(t) => {
                    set.insert(t);
                }
                None => return Err(Error::EmptyProfile),
            }
        }
        if set.is_empty() {
            return Err(Error::EmptyProfile);
        }
        Ok(Self(set))
    }

    /// Parses a `;`-separated tag list. Empty items are skipped.
    pub fn parse(tags: &str) -> Result<Self> {
        Self::new(tags.split(';').filter(|t| !t.trim().is_empty()))
    }

    /// Like [`SemanticProfile::new`] but also checks every term against `taxonomy`.
    pub fn resolved<I, S>(terms: I, taxonomy: &Taxonomy) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let p = Self::new(terms)?;
        p.resolve(taxonomy)?;
        Ok(p)
    }

    pub fn resolve(&self, taxonomy: &Taxonomy) -> Result<Vec<NodeId>> {
        self.0.iter().map(|t| taxonomy.resolve(t)).collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    /// `;`-joined, sorted.
    pub fn to_tag_string(&self) -> String {
        self.terms().collect::<Vec<_>>().join(";")
    }
}

impl fmt::Display for SemanticProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tag_string())
    }
}

impl TryFrom<Vec<String>> for SemanticProfile {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SemanticProfile> for Vec<String> {
    fn from(p: SemanticProfile) -> Self {
        p.0.into_iter().collect()
    }
}

/// A radius in semantic space; membership is inclusive.
///
/// Distances are reciprocal similarities, so `d(s, s) = 1` and any radius
/// below 1 admits nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemanticNeighborhood {
    eps_sem: f64,
}

impl SemanticNeighborhood {
    pub fn new(eps_sem: f64) -> Result<Self> {
        Ok(Self {
            eps_sem: check_positive("eps_sem", eps_sem)?,
        })
    }

    pub fn eps_sem(&self) -> f64 {
        self.eps_sem
    }
}

pub fn term_similarity(a: &str, b: &str, taxonomy: &Taxonomy) -> Result<f64> {
    let a = taxonomy.resolve(a)?;
    let b = taxonomy.resolve(b)?;
    Ok(InversePathLength.similarity(taxonomy, a, b))
}

/// Symmetric best-match average of term similarities.
pub fn profile_similarity(s1: &SemanticProfile, s2: &SemanticProfile, taxonomy: &Taxonomy) -> Result<f64> {
    profile_similarity_with(&InversePathLength, s1, s2, taxonomy)
}

pub fn profile_similarity_with<M: TermMeasure + ?Sized>(
    measure: &M,
    s1: &SemanticProfile,
    s2: &SemanticProfile,
    taxonomy: &Taxonomy,
) -> Result<f64> {
    let a = s1.resolve(taxonomy)?;
    let b = s2.resolve(taxonomy)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyProfile);
    }
    Ok(best_match_average(measure, &a, &b, taxonomy))
}

pub(crate) fn best_match_average<M: TermMeasure + ?Sized>(
    measure: &M,
    a: &[NodeId],
    b: &[NodeId],
    taxonomy: &Taxonomy,
) -> f64 {
    let best = |from: &[NodeId], to: &[NodeId]| -> f64 {
        from.iter()
            .map(|&x| {
                to.iter()
                    .map(|&y| measure.similarity(taxonomy, x, y))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    };
    (best(a, b) + best(b, a)) / (a.len() + b.len()) as f64
}

/// `1 / profile_similarity`, always `>= 1`.
pub fn semantic_distance(s1: &SemanticProfile, s2: &SemanticProfile, taxonomy: &Taxonomy) -> Result<f64> {
    Ok(1.0 / profile_similarity(s1, s2, taxonomy)?)
}

pub fn within_semantic_neighborhood(
    s1: &SemanticProfile,
    s2: &SemanticProfile,
    taxonomy: &Taxonomy,
    nb: &SemanticNeighborhood,
) -> Result<bool> {
    Ok(semantic_distance(s1, s2, taxonomy)? <= nb.eps_sem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn animals() -> Taxonomy {
        Taxonomy::builder("animals", "entity")
            .edge("animal", "entity")
            .edge("dog", "animal")
            .edge("cat", "animal")
            .build()
            .unwrap()
    }

    fn prof(tags: &str) -> SemanticProfile {
        SemanticProfile::parse(tags).unwrap()
    }

    #[test]
    fn term_similarity_examples() {
        let t = animals();
        assert_eq!(term_similarity("dog", "dog", &t).unwrap(), 1.0);
        assert_eq!(term_similarity("dog", "cat", &t).unwrap(), 1.0 / 3.0);
        assert_eq!(term_similarity("dog", "entity", &t).unwrap(), 1.0 / 3.0);
        match term_similarity("dog", "wolf", &t) {
            Err(Error::UnknownTerm(term)) => assert_eq!(term, "wolf"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_similarity_examples() {
        let t = animals();
        assert_eq!(profile_similarity(&prof("dog"), &prof("dog"), &t).unwrap(), 1.0);
        let s = profile_similarity(&prof("dog;cat"), &prof("dog"), &t).unwrap();
        assert!((s - 7.0 / 9.0).abs() < 1e-15);
        assert!((profile_similarity(&prof("dog"), &prof("cat"), &t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn semantic_distance_examples() {
        let t = animals();
        assert_eq!(semantic_distance(&prof("dog"), &prof("dog"), &t).unwrap(), 1.0);
        let d = semantic_distance(&prof("dog;cat"), &prof("dog"), &t).unwrap();
        assert!((d - 9.0 / 7.0).abs() < 1e-12);
        assert!((semantic_distance(&prof("dog"), &prof("cat"), &t).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn neighborhood_is_inclusive() {
        let t = animals();
        let loose = SemanticNeighborhood::new(1.5).unwrap();
        assert!(within_semantic_neighborhood(&prof("dog;cat"), &prof("dog"), &t, &loose).unwrap());
        assert!(!within_semantic_neighborhood(&prof("dog"), &prof("cat"), &t, &loose).unwrap());
        // boundary: d = 3 exactly
        let three = SemanticNeighborhood::new(3.0).unwrap();
        assert!(within_semantic_neighborhood(&prof("dog"), &prof("cat"), &t, &three).unwrap());
        assert!(SemanticNeighborhood::new(-1.0).is_err());
    }

    #[test]
    fn profiles_are_sets() {
        let p = SemanticProfile::new(["Dog", "dog ", "cat"]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.to_tag_string(), "cat;dog");
        assert!(matches!(SemanticProfile::parse(" ; "), Err(Error::EmptyProfile)));
        assert!(matches!(
            SemanticProfile::new(Vec::<String>::new()),
            Err(Error::EmptyProfile)
        ));
    }

    #[test]
    fn resolved_rejects_unknown_terms() {
        let t = animals();
        assert!(SemanticProfile::resolved(["dog", "cat"], &t).is_ok());
        assert!(matches!(
            SemanticProfile::resolved(["dog", "unicorn"], &t),
            Err(Error::UnknownTerm(_))
        ));
    }
}
