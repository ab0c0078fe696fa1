//! Brute-force reference implementations used only by tests.
//!
//! Nothing here touches the library's taxonomy, similarity, clustering or
//! estimator code; inputs are plain edge lists and tuples.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::Rng;

/// `(child, parent)` pairs plus the root name.
#[derive(Debug, Clone)]
pub struct RawTaxonomy {
    pub root: String,
    pub edges: Vec<(String, String)>,
}

impl RawTaxonomy {
    pub fn nodes(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = vec![self.root.clone()];
        seen.insert(self.root.clone());
        for (c, p) in &self.edges {
            for t in [p, c] {
                if seen.insert(t.clone()) {
                    out.push(t.clone());
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("!root,{}\n", self.root);
        for (c, p) in &self.edges {
            s.push_str(&format!("{c},{p}\n"));
        }
        s
    }

    /// BFS over the undirected edge list from `a` to every reachable term.
    pub fn distances_from(&self, a: &str) -> HashMap<String, u32> {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for (c, p) in &self.edges {
            adj.entry(c).or_default().push(p);
            adj.entry(p).or_default().push(c);
        }
        let mut dist: HashMap<&str, u32> = HashMap::from([(a, 0)]);
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
                if !dist.contains_key(v) {
                    dist.insert(v, dist[u] + 1);
                    queue.push_back(v);
                }
            }
        }
        dist.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn path_length(&self, a: &str, b: &str) -> u32 {
        *self
            .distances_from(a)
            .get(b)
            .unwrap_or_else(|| panic!("no path between {a} and {b}"))
    }

    pub fn term_sim(&self, a: &str, b: &str) -> f64 {
        1.0 / (1.0 + self.path_length(a, b) as f64)
    }

    pub fn profile_sim(&self, s1: &[String], s2: &[String]) -> f64 {
        let mut total = 0.0;
        let mut a_side = 0.0;
        for a in s1 {
            let mut best = 0.0f64;
            for b in s2 {
                best = best.max(self.term_sim(a, b));
            }
            a_side += best;
        }
        let mut b_side = 0.0;
        for b in s2 {
            let mut best = 0.0f64;
            for a in s1 {
                best = best.max(self.term_sim(b, a));
            }
            b_side += best;
        }
        total += a_side + b_side;
        total / (s1.len() + s2.len()) as f64
    }
}

/// Random rooted DAG: node `i` picks one or two parents among `0..i`.
pub fn random_taxonomy<R: Rng>(rng: &mut R, n: usize) -> RawTaxonomy {
    let name = |i: usize| {
        if i == 0 {
            "entity".to_string()
        } else {
            format!("t{i}")
        }
    };
    let mut edges = Vec::new();
    for i in 1..n {
        let p1 = rng.random_range(0..i);
        edges.push((name(i), name(p1)));
        if i > 1 && rng.random_bool(0.3) {
            let p2 = rng.random_range(0..i);
            if p2 != p1 {
                edges.push((name(i), name(p2)));
            }
        }
    }
    RawTaxonomy { root: name(0), edges }
}

#[derive(Debug, Clone)]
pub struct RefDoc {
    pub id: String,
    pub tags: Vec<String>,
    pub val: f64,
    pub ar: f64,
}

#[derive(Debug, Clone)]
pub struct OracleCandidate {
    pub val: f64,
    pub ar: f64,
    pub likelihood: f64,
    pub support: Vec<String>,
    pub mean_semantic_distance: f64,
}

fn edist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Naive single linkage: merge any two clusters holding a pair within
/// `eps` until nothing changes.
pub fn naive_single_linkage(points: &[(f64, f64)], eps: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let close = clusters[i]
                    .iter()
                    .any(|&a| clusters[j].iter().any(|&b| edist(points[a], points[b]) <= eps));
                if close {
                    let other = clusters.remove(j);
                    clusters[i].extend(other);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters
}

pub struct OracleConfig {
    pub eps_sem: f64,
    pub eps_emo: f64,
    pub k_fallback: usize,
}

/// Exhaustive evaluation of the estimation pipeline.
pub fn brute_estimate(
    tax: &RawTaxonomy,
    target: &[String],
    docs: &[RefDoc],
    cfg: &OracleConfig,
) -> (Vec<OracleCandidate>, bool) {
    let sims: Vec<f64> = docs.iter().map(|d| tax.profile_sim(target, &d.tags)).collect();
    let dists: Vec<f64> = sims.iter().map(|s| 1.0 / s).collect();
    let mut chosen: Vec<usize> = (0..docs.len()).filter(|&i| dists[i] <= cfg.eps_sem).collect();
    let fallback = chosen.is_empty();
    if fallback {
        let mut all: Vec<usize> = (0..docs.len()).collect();
        all.sort_by(|&a, &b| {
            dists[a]
                .partial_cmp(&dists[b])
                .unwrap()
                .then_with(|| docs[a].id.cmp(&docs[b].id))
        });
        chosen = all.into_iter().take(cfg.k_fallback).collect();
        chosen.sort_unstable();
    }
    let points: Vec<(f64, f64)> = chosen.iter().map(|&i| (docs[i].val, docs[i].ar)).collect();
    let clusters = naive_single_linkage(&points, cfg.eps_emo);
    let total = chosen.len() as f64;
    let mut out: Vec<OracleCandidate> = clusters
        .iter()
        .map(|c| {
            let idx: Vec<usize> = c.iter().map(|&k| chosen[k]).collect();
            let w: f64 = idx.iter().map(|&i| sims[i]).sum();
            let val = idx.iter().map(|&i| sims[i] * docs[i].val).sum::<f64>() / w;
            let ar = idx.iter().map(|&i| sims[i] * docs[i].ar).sum::<f64>() / w;
            let mut support: Vec<String> = idx.iter().map(|&i| docs[i].id.clone()).collect();
            support.sort();
            OracleCandidate {
                val,
                ar,
                likelihood: idx.len() as f64 / total,
                support,
                mean_semantic_distance: idx.iter().map(|&i| dists[i]).sum::<f64>() / idx.len() as f64,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.likelihood
            .partial_cmp(&a.likelihood)
            .unwrap()
            .then_with(|| {
                a.mean_semantic_distance
                    .partial_cmp(&b.mean_semantic_distance)
                    .unwrap()
            })
            .then_with(|| a.support[0].cmp(&b.support[0]))
    });
    (out, fallback)
}
