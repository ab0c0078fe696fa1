//! Seeded synthetic corpora with known group structure.
//!
//! Each group draws 1–4 distinct tags from the strict descendants of one
//! taxonomy term and an emotion from a Gaussian around its centroid,
//! truncated to `[1, 9]` by re-drawing (100 attempts, then clamping).

use std::io::{Read, Write};

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::affect::{check_rating, AffectiveRating, RATING_MAX, RATING_MIN};
use crate::corpus::{Corpus, Provenance, StimulusDocument};
use crate::coupling::CouplingThresholds;
use crate::error::{Error, Result};
use crate::semantic::SemanticProfile;
use crate::taxonomy::Taxonomy;

const MAX_TAGS: usize = 4;
const REDRAW_ATTEMPTS: usize = 100;

/// Document id -> generating group name, in generation order.
pub type GroundTruth = IndexMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    /// Tags are drawn from this term's descendants.
    pub subtree: String,
    /// `[val, ar]`
    pub centroid: [f64; 2],
    #[serde(default)]
    pub noise_sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub groups: Vec<GroupSpec>,
    #[serde(default = "default_uri_prefix")]
    pub uri_prefix: String,
}

fn default_uri_prefix() -> String {
    "synthetic".into()
}

impl SyntheticSpec {
    pub fn new(groups: Vec<GroupSpec>) -> Self {
        Self {
            groups,
            uri_prefix: default_uri_prefix(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub ground_truth: GroundTruth,
}

pub fn generate_synthetic(
    spec: &SyntheticSpec,
    taxonomy: &Taxonomy,
    seed: u64,
    defaults: CouplingThresholds,
) -> Result<SyntheticCorpus> {
    let mut pools = Vec::with_capacity(spec.groups.len());
    for g in &spec.groups {
        check_rating("centroid val", g.centroid[0])
            .and_then(|_| check_rating("centroid ar", g.centroid[1]))
            .map_err(|e| Error::Synthetic(format!("group '{}': {e}", g.name)))?;
        if !(g.noise_sd.is_finite() && g.noise_sd >= 0.0) {
            return Err(Error::Synthetic(format!(
                "group '{}': noise_sd must be >= 0",
                g.name
            )));
        }
        let pool = taxonomy.descendants(&g.subtree)?;
        if pool.is_empty() {
            return Err(Error::Synthetic(format!(
                "group '{}': subtree '{}' is empty",
                g.name, g.subtree
            )));
        }
        pools.push(pool);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::new(taxonomy.name(), defaults);
    let mut truth = GroundTruth::new();
    let mut serial = 0usize;
    for (g, pool) in spec.groups.iter().zip(&pools) {
        for _ in 0..g.count {
            serial += 1;
            let k = rng.random_range(1..=pool.len().min(MAX_TAGS));
            let tags = sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]);
            let profile = SemanticProfile::new(tags)?;
            let val = truncated_normal(&mut rng, g.centroid[0], g.noise_sd);
            let ar = truncated_normal(&mut rng, g.centroid[1], g.noise_sd);
            let rating = AffectiveRating::new(val, g.noise_sd, ar, g.noise_sd)?;
            let id = format!("{serial:04}.jpg");
            let uri = format!("{}/{}/{id}", spec.uri_prefix, g.name);
            let doc = StimulusDocument::new(id.clone(), uri, profile, Provenance::Manifest)?
                .with_rating(rating, Provenance::Manifest);
            corpus.insert(doc)?;
            truth.insert(id, g.name.clone());
        }
    }
    Ok(SyntheticCorpus {
        corpus,
        ground_truth: truth,
    })
}

fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let mut x = mean;
    for _ in 0..REDRAW_ATTEMPTS {
        let z: f64 = rng.sample(StandardNormal);
        x = mean + sd * z;
        if (RATING_MIN..=RATING_MAX).contains(&x) {
            return x;
        }
    }
    x.clamp(RATING_MIN, RATING_MAX)
}

pub fn write_ground_truth<W: Write>(truth: &GroundTruth, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["doc_id", "group"])?;
    for (id, group) in truth {
        out.write_record([id, group])?;
    }
    out.flush().map_err(|e| Error::io("<ground truth>", e))
}

pub fn read_ground_truth<R: Read>(r: R) -> Result<GroundTruth> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut truth = GroundTruth::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(Error::Malformed {
                line,
                field: "columns".into(),
                message: "expected doc_id,group".into(),
            });
        }
        truth.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(truth)
}
