mod oracle;

use affectcouple_core::{
    coupled_clusters, coupling_matrix, emotion_distance, estimate, profile_similarity, semantic_distance,
    term_similarity, AffectiveRating, Corpus, CouplingThresholds, EmotionPoint, EstimationConfig, Provenance,
    SemanticProfile, StimulusDocument, Taxonomy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oracle::{brute_estimate, naive_single_linkage, random_taxonomy, OracleConfig, RefDoc};

fn point() -> impl Strategy<Value = (f64, f64)> {
    (1.0f64..=9.0, 1.0f64..=9.0)
}

fn ep(p: (f64, f64)) -> EmotionPoint {
    EmotionPoint::new(p.0, p.1).unwrap()
}

fn doc(id: &str, tags: &[String], v: f64, a: f64) -> StimulusDocument {
    StimulusDocument::new(
        id,
        format!("{id}.jpg"),
        SemanticProfile::new(tags).unwrap(),
        Provenance::Manifest,
    )
    .unwrap()
    .with_rating(
        AffectiveRating::new(v, 0.0, a, 0.0).unwrap(),
        Provenance::Manifest,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn emotion_distance_is_a_metric(a in point(), b in point(), c in point()) {
        let (a, b, c) = (ep(a), ep(b), ep(c));
        let ab = emotion_distance(&a, &b);
        prop_assert_eq!(ab, emotion_distance(&b, &a));
        prop_assert_eq!(emotion_distance(&a, &a), 0.0);
        prop_assert!(ab >= 0.0 && ab <= 128f64.sqrt());
        prop_assert!(emotion_distance(&a, &c) <= ab + emotion_distance(&b, &c) + 1e-12);
    }

    #[test]
    fn dominance_does_not_move_points(a in point(), b in point(), d in 1.0f64..=9.0) {
        let plain = emotion_distance(&ep(a), &ep(b));
        let with_dom = emotion_distance(&ep(a).with_dominance(d).unwrap(), &ep(b));
        prop_assert_eq!(plain, with_dom);
    }

    #[test]
    fn out_of_range_points_are_rejected(v in prop_oneof![-100.0f64..0.999, 9.001f64..100.0], a in 1.0f64..=9.0) {
        prop_assert!(EmotionPoint::new(v, a).is_err());
        prop_assert!(EmotionPoint::new(a, v).is_err());
    }

    #[test]
    fn semantic_laws_on_random_taxonomies(seed in any::<u64>(), n in 2usize..=50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_taxonomy(&mut rng, n);
        let tax = Taxonomy::parse("rand", &raw.to_text()).unwrap();
        let nodes = raw.nodes();
        for _ in 0..20 {
            let a = &nodes[rng.random_range(0..nodes.len())];
            let b = &nodes[rng.random_range(0..nodes.len())];
            prop_assert_eq!(term_similarity(a, b, &tax).unwrap(), raw.term_sim(a, b));
        }
        let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
            let k = rng.random_range(1..=4.min(nodes.len()));
            (0..k).map(|_| nodes[rng.random_range(0..nodes.len())].clone()).collect()
        };
        let s1 = pick(&mut rng);
        let s2 = pick(&mut rng);
        let p1 = SemanticProfile::new(&s1).unwrap();
        let p2 = SemanticProfile::new(&s2).unwrap();
        let sim = profile_similarity(&p1, &p2, &tax).unwrap();
        prop_assert!((sim - profile_similarity(&p2, &p1, &tax).unwrap()).abs() <= 1e-12);
        prop_assert!(sim > 0.0 && sim <= 1.0);
        prop_assert!((semantic_distance(&p1, &p2, &tax).unwrap() * sim - 1.0).abs() <= 1e-12);
        prop_assert_eq!(semantic_distance(&p1, &p1, &tax).unwrap(), 1.0);
        // the oracle dedups nothing, so feed it the canonical term sets
        let t1: Vec<String> = p1.terms().map(String::from).collect();
        let t2: Vec<String> = p2.terms().map(String::from).collect();
        prop_assert!((sim - raw.profile_sim(&t1, &t2)).abs() <= 1e-12);
    }

    #[test]
    fn coupling_is_symmetric_and_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_taxonomy(&mut rng, 12);
        let tax = Taxonomy::parse("rand", &raw.to_text()).unwrap();
        let nodes = raw.nodes();
        let docs: Vec<StimulusDocument> = (0..6)
            .map(|i| {
                let tags = vec![nodes[rng.random_range(0..nodes.len())].clone()];
                doc(&format!("d{i}"), &tags, rng.random_range(1.0..=9.0), rng.random_range(1.0..=9.0))
            })
            .collect();
        let tight = CouplingThresholds::new(rng.random_range(1.0..4.0), rng.random_range(0.1..3.0)).unwrap();
        let loose = CouplingThresholds::new(tight.eps_sem() + 1.0, tight.eps_emo() + 1.0).unwrap();
        let mt = coupling_matrix(&docs, &tax, tight).unwrap();
        let ml = coupling_matrix(&docs, &tax, loose).unwrap();
        for i in 0..docs.len() {
            prop_assert!(!mt.coupled[i][i]);
            for j in 0..docs.len() {
                prop_assert_eq!(mt.coupled[i][j], mt.coupled[j][i]);
                prop_assert!(!mt.coupled[i][j] || ml.coupled[i][j]);
            }
        }
        // clusters partition the documents
        let clusters = coupled_clusters(&docs, &tax, tight).unwrap();
        let mut seen: Vec<String> = clusters.concat();
        seen.sort();
        let mut ids: Vec<String> = docs.iter().map(|d| d.id().to_string()).collect();
        ids.sort();
        prop_assert_eq!(seen, ids);
    }

    #[test]
    fn estimator_matches_brute_force(seed in any::<u64>()) {
        check_estimator_against_oracle(seed)?;
    }

    #[test]
    fn corpus_round_trips(seed in any::<u64>(), n in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Corpus::new("demo", CouplingThresholds::default());
        for i in 0..n {
            let d = StimulusDocument::new(
                format!("doc-{i}"),
                format!("img/{i}.jpg"),
                SemanticProfile::parse("snake;animal").unwrap(),
                Provenance::Manifest,
            )
            .unwrap();
            let d = if rng.random_bool(0.7) {
                d.with_rating(
                    AffectiveRating::new(
                        rng.random_range(1.0..=9.0),
                        rng.random_range(0.0..3.0),
                        rng.random_range(1.0..=9.0),
                        rng.random_range(0.0..3.0),
                    )
                    .unwrap(),
                    Provenance::Manifest,
                )
            } else {
                d
            };
            c.insert(d).unwrap();
        }
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = Corpus::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.documents().collect::<Vec<_>>(), c.documents().collect::<Vec<_>>());
        prop_assert_eq!(back.defaults(), c.defaults());
    }

    #[test]
    fn single_linkage_blocks_are_separated(pts in prop::collection::vec(point(), 1..15), eps in 0.1f64..3.0) {
        let clusters = naive_single_linkage(&pts, eps);
        for (i, a) in clusters.iter().enumerate() {
            for b in &clusters[i + 1..] {
                for &x in a {
                    for &y in b {
                        prop_assert!(emotion_distance(&ep(pts[x]), &ep(pts[y])) > eps);
                    }
                }
            }
        }
    }
}

fn check_estimator_against_oracle(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = rng.random_range(3..=20);
    let raw = random_taxonomy(&mut rng, size);
    let tax = Taxonomy::parse("rand", &raw.to_text()).unwrap();
    let nodes = raw.nodes();
    let n = rng.random_range(1..=20);
    let mut refs = Vec::new();
    let mut corpus = Corpus::new("rand", CouplingThresholds::default());
    for i in 0..n {
        let k = rng.random_range(1..=3);
        let mut tags: Vec<String> = (0..k)
            .map(|_| nodes[rng.random_range(0..nodes.len())].clone())
            .collect();
        tags.sort();
        tags.dedup();
        // quarter-step grid makes emotion ties and boundary cases common
        let v = 1.0 + rng.random_range(0..=32) as f64 * 0.25;
        let a = 1.0 + rng.random_range(0..=32) as f64 * 0.25;
        let id = format!("r{i:02}");
        corpus.insert(doc(&id, &tags, v, a)).unwrap();
        refs.push(RefDoc {
            id,
            tags,
            val: v,
            ar: a,
        });
    }
    let mut target: Vec<String> = (0..rng.random_range(1..=3))
        .map(|_| nodes[rng.random_range(0..nodes.len())].clone())
        .collect();
    target.sort();
    target.dedup();
    let cfg = EstimationConfig {
        eps_sem: rng.random_range(1.0..4.0),
        eps_emo: rng.random_range(0.25..3.0),
        k_fallback: rng.random_range(1..=6),
        ..Default::default()
    };
    let got = estimate(&SemanticProfile::new(&target).unwrap(), &corpus, &tax, &cfg).unwrap();
    let (want, fallback) = brute_estimate(
        &raw,
        &target,
        &refs,
        &OracleConfig {
            eps_sem: cfg.eps_sem,
            eps_emo: cfg.eps_emo,
            k_fallback: cfg.k_fallback,
        },
    );
    prop_assert_eq!(got.used_fallback, fallback);
    prop_assert_eq!(got.candidates.len(), want.len());
    let total: f64 = got.candidates.iter().map(|c| c.likelihood).sum();
    prop_assert!((total - 1.0).abs() <= 1e-12);
    for (g, w) in got.candidates.iter().zip(&want) {
        prop_assert_eq!(&g.support, &w.support);
        prop_assert!((g.emotion.val() - w.val).abs() <= 1e-9);
        prop_assert!((g.emotion.ar() - w.ar).abs() <= 1e-9);
        prop_assert!((g.likelihood - w.likelihood).abs() <= 1e-9);
    }
    Ok(())
}
