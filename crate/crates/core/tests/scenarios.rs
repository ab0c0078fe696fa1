use std::fs;

use affectcouple_core::corpus::{load_folder_convention, read_manifest, write_manifest};
use affectcouple_core::session::FeedbackEvent;
use affectcouple_core::{
    generate_synthetic, leave_one_out, load_corpus, open_session, save_corpus, AffectiveRating, Corpus,
    CouplingThresholds, EstimationConfig, GroupSpec, Provenance, SemanticProfile, SessionState,
    StimulusDocument, SyntheticSpec, Taxonomy,
};

const TAXONOMY: &str = "\
!root,entity
animal,entity
snake,animal
spider,animal
dog,animal
person,entity
face,person
crowd,person
place,entity
beach,place
forest,place
";

fn taxonomy() -> Taxonomy {
    Taxonomy::parse("demo", TAXONOMY).unwrap()
}

fn touch(dir: &std::path::Path, folder: &str, n: usize) {
    let d = dir.join(folder);
    fs::create_dir_all(&d).unwrap();
    for i in 0..n {
        fs::write(d.join(format!("{folder}{i:03}.bmp")), b"").unwrap();
    }
}

#[test]
fn snakes_folder_becomes_three_documents() {
    let dir = tempfile::tempdir().unwrap();
    touch(dir.path(), "Snakes", 3);
    let mapping = dir.path().join("mapping.txt");
    fs::write(
        &mapping,
        "# gaped style\nSnakes -> snake;animal @ 2.5,1.0,6.0,1.0\n",
    )
    .unwrap();
    let load =
        load_folder_convention(dir.path(), &mapping, &taxonomy(), CouplingThresholds::default()).unwrap();
    assert!(load.unmapped.is_empty());
    let docs: Vec<_> = load.corpus.documents().collect();
    assert_eq!(docs.len(), 3);
    let expected = AffectiveRating::new(2.5, 1.0, 6.0, 1.0).unwrap();
    for d in &docs {
        assert_eq!(d.profile(), &SemanticProfile::parse("snake;animal").unwrap());
        assert_eq!(d.rating(), Some(&expected));
        assert_eq!(d.provenance(), Provenance::FolderConvention);
        assert!(d.uri().starts_with("Snakes/"));
    }
}

#[test]
fn gaped_scale_folder_load() {
    let dir = tempfile::tempdir().unwrap();
    let sizes = [
        ("Sp", 159),
        ("A", 140),
        ("H", 136),
        ("P", 121),
        ("N", 89),
        ("Sn", 85),
    ];
    let mut mapping = String::new();
    for (name, n) in sizes {
        touch(dir.path(), name, n);
        mapping.push_str(&format!("{name} -> animal\n"));
    }
    touch(dir.path(), "Extra", 4);
    let map_path = dir.path().join("map.txt");
    fs::write(&map_path, mapping).unwrap();
    let load =
        load_folder_convention(dir.path(), &map_path, &taxonomy(), CouplingThresholds::default()).unwrap();
    assert_eq!(load.corpus.len(), 730);
    assert_eq!(load.unmapped, vec!["Extra".to_string()]);
    let largest = load
        .corpus
        .documents()
        .filter(|d| d.uri().starts_with("Sp/"))
        .count();
    assert_eq!(largest, 159);
    assert_eq!(load.corpus.annotated().count(), 0);
}

#[test]
fn empty_root_gives_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let map_path = dir.path().join("map.txt");
    fs::write(&map_path, "Snakes -> snake\n").unwrap();
    let root = dir.path().join("root");
    fs::create_dir(&root).unwrap();
    let load = load_folder_convention(&root, &map_path, &taxonomy(), CouplingThresholds::default()).unwrap();
    assert!(load.corpus.is_empty());
    let missing = load_folder_convention(
        dir.path().join("nope"),
        &map_path,
        &taxonomy(),
        CouplingThresholds::default(),
    );
    assert_eq!(missing.unwrap_err().code(), "IO");
}

#[test]
fn thousand_documents_round_trip_through_a_file() {
    let mut c = Corpus::new("demo", CouplingThresholds::new(2.5, 1.25).unwrap());
    for i in 0..1000 {
        let tags = ["snake", "beach;forest", "face", "crowd;dog"][i % 4];
        let d = StimulusDocument::new(
            format!("{i:05}"),
            format!("media/{i}.png"),
            SemanticProfile::parse(tags).unwrap(),
            Provenance::Manifest,
        )
        .unwrap();
        let d = match i % 3 {
            0 => d,
            1 => d.with_rating(
                AffectiveRating::new(1.0 + (i as f64) / 125.0, 0.1, 9.0 - (i as f64) / 125.0, 1.0 / 3.0)
                    .unwrap(),
                Provenance::Manifest,
            ),
            _ => d.with_rating(
                AffectiveRating::new(4.2, 0.7, 3.3, 0.2)
                    .unwrap()
                    .with_dominance(5.5, 0.4)
                    .unwrap(),
                Provenance::Manual,
            ),
        };
        c.insert(d).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.acx");
    save_corpus(&c, &path).unwrap();
    let back = load_corpus(&path).unwrap();
    assert_eq!(back.len(), 1000);
    assert_eq!(back.defaults(), c.defaults());
    assert_eq!(back.taxonomy_ref(), "demo");
    for (a, b) in c.documents().zip(back.documents()) {
        assert_eq!(a, b);
    }
}

#[test]
fn manifest_round_trips_through_csv() {
    let text = "id,uri,tags,val_mean,val_sd,ar_mean,ar_sd\n\
                1,img/1.jpg,snake,2.1,0.9,6.3,1.1\n\
                2,img/2.jpg,beach;forest,7.25,1,3,0.5\n";
    let c = read_manifest(text.as_bytes(), &taxonomy(), CouplingThresholds::default()).unwrap();
    let mut out = Vec::new();
    write_manifest(&c, &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        text.replace("                ", "")
    );
}

#[test]
fn malformed_manifests_have_error_classes() {
    let tax = taxonomy();
    let head = "id,uri,tags,val_mean,val_sd,ar_mean,ar_sd\n";
    let cases = [
        ("1,a.jpg,snake,2,1,6\n", "MALFORMED"),
        ("1,a.jpg,snake,0.5,1,6,1\n", "RANGE"),
        ("1,a.jpg,snake,2,1,6,1\n1,b.jpg,snake,3,1,5,1\n", "DUPLICATE_ID"),
        ("1,a.jpg,unicorn,2,1,6,1\n", "UNKNOWN_TERM"),
    ];
    for (body, code) in cases {
        let err = read_manifest(
            format!("{head}{body}").as_bytes(),
            &tax,
            CouplingThresholds::default(),
        )
        .unwrap_err();
        assert_eq!(err.code(), code, "{body:?}: {err}");
    }
}

fn synth_spec(noise: f64) -> SyntheticSpec {
    SyntheticSpec::new(vec![
        GroupSpec {
            name: "animals".into(),
            subtree: "animal".into(),
            centroid: [2.0, 7.0],
            noise_sd: noise,
            count: 20,
        },
        GroupSpec {
            name: "people".into(),
            subtree: "person".into(),
            centroid: [5.0, 4.0],
            noise_sd: noise,
            count: 15,
        },
        GroupSpec {
            name: "places".into(),
            subtree: "place".into(),
            centroid: [8.0, 2.0],
            noise_sd: noise,
            count: 10,
        },
    ])
}

#[test]
fn synthetic_generation_is_seeded() {
    let tax = taxonomy();
    let a = generate_synthetic(&synth_spec(0.5), &tax, 7, CouplingThresholds::default()).unwrap();
    let b = generate_synthetic(&synth_spec(0.5), &tax, 7, CouplingThresholds::default()).unwrap();
    let c = generate_synthetic(&synth_spec(0.5), &tax, 8, CouplingThresholds::default()).unwrap();
    assert_eq!(a, b);
    assert_ne!(
        a.corpus.documents().collect::<Vec<_>>(),
        c.corpus.documents().collect::<Vec<_>>()
    );
    assert_eq!(a.corpus.len(), 45);
    assert_eq!(a.ground_truth.values().filter(|g| *g == "people").count(), 15);
    for d in a.corpus.documents() {
        let group = &a.ground_truth[d.id()];
        let subtree = match group.as_str() {
            "animals" => "animal",
            "people" => "person",
            _ => "place",
        };
        let pool = tax.descendants(subtree).unwrap();
        assert!(d.profile().terms().all(|t| pool.contains(&t)));
    }
}

#[test]
fn zero_noise_leave_one_out_is_exact() {
    let tax = taxonomy();
    let s = generate_synthetic(&synth_spec(0.0), &tax, 1, CouplingThresholds::default()).unwrap();
    let cfg = EstimationConfig {
        eps_sem: 3.0,
        eps_emo: 0.5,
        ..Default::default()
    };
    let report = leave_one_out(&s.corpus, &tax, &cfg, Some(&s.ground_truth)).unwrap();
    assert_eq!(report.rows.len(), 45);
    assert_eq!(report.mean_top1_error(), 0.0);
    assert_eq!(report.hit_rate(1), 1.0);
    assert_eq!(report.per_group().len(), 3);
}

fn session_corpus() -> Corpus {
    let mut c = Corpus::new("demo", CouplingThresholds::default());
    for (id, v, a) in [("1", 2.0, 6.0), ("2", 2.2, 6.1), ("3", 5.0, 5.0), ("4", 8.0, 2.0)] {
        let d = StimulusDocument::new(
            id,
            "x",
            SemanticProfile::parse("snake").unwrap(),
            Provenance::Manifest,
        )
        .unwrap()
        .with_rating(
            AffectiveRating::new(v, 0.3, a, 0.3).unwrap(),
            Provenance::Manifest,
        );
        c.insert(d).unwrap();
    }
    c
}

#[test]
fn committed_session_feeds_back_into_corpus() {
    let tax = taxonomy();
    let mut corpus = session_corpus();
    let target = StimulusDocument::new(
        "new",
        "new.jpg",
        SemanticProfile::parse("snake").unwrap(),
        Provenance::Manual,
    )
    .unwrap();
    corpus.insert(target.clone()).unwrap();
    let cfg = EstimationConfig {
        eps_emo: 1.0,
        ..Default::default()
    };
    let mut s = open_session("s1", target, &corpus, &tax, &cfg).unwrap();
    assert_eq!(s.state, SessionState::Proposed);
    assert_eq!(s.candidates.len(), 3);
    assert_eq!(s.candidates[0].support, vec!["1".to_string(), "2".to_string()]);
    s.apply(FeedbackEvent::Accept { index: 0 }).unwrap();
    let rev = corpus.commit(s.committed().unwrap().clone()).unwrap();
    assert!(rev > 0);
    assert_eq!(corpus.get("new").unwrap().provenance(), Provenance::Estimated);
    assert_eq!(
        corpus.commit(s.committed().unwrap().clone()).unwrap_err().code(),
        "ALREADY_ANNOTATED"
    );
}
