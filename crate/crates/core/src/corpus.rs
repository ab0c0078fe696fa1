//! Emotionally annotated databases: documents, manifests, persistence.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::affect::{check_rating, check_sd, AffectiveRating, EmotionPoint, RatingRecord};
use crate::coupling::CouplingThresholds;
use crate::error::{Error, Result};
use crate::semantic::SemanticProfile;
use crate::taxonomy::Taxonomy;

pub const CORPUS_HEADER: &str = "affectcouple-corpus v1";
pub const MANIFEST_HEADER: &str = "id,uri,tags,val_mean,val_sd,ar_mean,ar_sd";
pub const MANIFEST_HEADER_DOM: &str = "id,uri,tags,val_mean,val_sd,ar_mean,ar_sd,dom_mean,dom_sd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manifest,
    FolderConvention,
    Estimated,
    Manual,
}

/// One stimulus: identifier, locator, semantics and (maybe) its affect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DocumentRecord")]
pub struct StimulusDocument {
    id: String,
    uri: String,
    profile: SemanticProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    rating: Option<AffectiveRating>,
    provenance: Provenance,
}

/// Unvalidated wire form of [`StimulusDocument`].
#[derive(Deserialize)]
struct DocumentRecord {
    id: String,
    uri: String,
    profile: Vec<String>,
    #[serde(default)]
    rating: Option<RatingRecord>,
    provenance: Provenance,
}

impl TryFrom<DocumentRecord> for StimulusDocument {
    type Error = Error;

    fn try_from(raw: DocumentRecord) -> Result<Self> {
        let profile = SemanticProfile::new(raw.profile)?;
        match raw.rating {
            Some(r) => {
                let rating = AffectiveRating::try_from(r)?;
                let base = if raw.provenance == Provenance::Estimated {
                    Provenance::Manual
                } else {
                    raw.provenance
                };
                Ok(
                    StimulusDocument::new(raw.id, raw.uri, profile, base)?
                        .with_rating(rating, raw.provenance),
                )
            }
            None => StimulusDocument::new(raw.id, raw.uri, profile, raw.provenance),
        }
    }
}

impl StimulusDocument {
    /// An unannotated document. Use [`StimulusDocument::with_rating`] to attach affect.
    pub fn new(
        id: impl Into<String>,
        uri: impl Into<String>,
        profile: SemanticProfile,
        provenance: Provenance,
    ) -> Result<Self> {
        let id = id.into().trim().to_string();
        let uri = uri.into().trim().to_string();
        if id.is_empty() {
            return Err(Error::Invalid {
                field: "id",
                message: "must not be empty".into(),
            });
        }
        if uri.is_empty() {
            return Err(Error::Invalid {
                field: "uri",
                message: "must not be empty".into(),
            });
        }
        if provenance == Provenance::Estimated {
            return Err(Error::Invalid {
                field: "provenance",
                message: "estimated documents must carry a rating".into(),
            });
        }
        Ok(Self {
            id,
            uri,
            profile,
            rating: None,
            provenance,
        })
    }

    pub fn with_rating(mut self, rating: AffectiveRating, provenance: Provenance) -> Self {
        self.rating = Some(rating);
        self.provenance = provenance;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn uri(&self) -> &str {
        &self.uri
    }

    pub fn profile(&self) -> &SemanticProfile {
        &self.profile
    }

    pub fn rating(&self) -> Option<&AffectiveRating> {
        self.rating.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn emotion(&self) -> Option<EmotionPoint> {
        self.rating.map(|r| r.point())
    }

    pub fn is_annotated(&self) -> bool {
        self.rating.is_some()
    }
}

/// An id-keyed, insertion-ordered collection of documents.
///
/// `revision` increases by one on every mutation so that holders of an
/// older snapshot can tell it is stale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    taxonomy_ref: String,
    defaults: CouplingThresholds,
    revision: u64,
    #[serde(skip)]
    documents: IndexMap<String, StimulusDocument>,
}

impl Corpus {
    pub fn new(taxonomy_ref: impl Into<String>, defaults: CouplingThresholds) -> Self {
        Self {
            taxonomy_ref: taxonomy_ref.into(),
            defaults,
            revision: 0,
            documents: IndexMap::new(),
        }
    }

    pub fn taxonomy_ref(&self) -> &str {
        &self.taxonomy_ref
    }

    pub fn defaults(&self) -> CouplingThresholds {
        self.defaults
    }

    pub fn set_defaults(&mut self, defaults: CouplingThresholds) {
        self.defaults = defaults;
        self.revision += 1;
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&StimulusDocument> {
        self.documents.get(id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &StimulusDocument> {
        self.documents.values()
    }

    pub fn annotated(&self) -> impl Iterator<Item = &StimulusDocument> {
        self.documents().filter(|d| d.is_annotated())
    }

    pub fn unannotated(&self) -> impl Iterator<Item = &StimulusDocument> {
        self.documents().filter(|d| !d.is_annotated())
    }

    pub fn insert(&mut self, doc: StimulusDocument) -> Result<()> {
        if self.documents.contains_key(doc.id()) {
            return Err(Error::DuplicateId {
                id: doc.id,
                first_line: 0,
                second_line: 0,
            });
        }
        self.documents.insert(doc.id.clone(), doc);
        self.revision += 1;
        Ok(())
    }

    /// Stores an annotated document, replacing an unannotated entry with the
    /// same id. Fails if that id already carries a rating.
    pub fn commit(&mut self, doc: StimulusDocument) -> Result<u64> {
        if !doc.is_annotated() {
            return Err(Error::Unannotated(doc.id));
        }
        match self.documents.get_mut(doc.id()) {
            Some(existing) if existing.is_annotated() => {
                return Err(Error::AlreadyAnnotated(doc.id));
            }
            Some(existing) => *existing = doc,
            None => {
                self.documents.insert(doc.id.clone(), doc);
            }
        }
        self.revision += 1;
        Ok(self.revision)
    }

    /// Every problem found when checking profiles against `taxonomy`.
    pub fn check_against(&self, taxonomy: &Taxonomy) -> Vec<Error> {
        let mut problems = Vec::new();
        if taxonomy.name() != self.taxonomy_ref {
            problems.push(Error::Invalid {
                field: "taxonomy_ref",
                message: format!(
                    "corpus references '{}' but taxonomy is '{}'",
                    self.taxonomy_ref,
                    taxonomy.name()
                ),
            });
        }
        for doc in self.documents() {
            if let Err(e) = doc.profile.resolve(taxonomy) {
                problems.push(Error::Invalid {
                    field: "profile",
                    message: format!("document '{}': {e}", doc.id),
                });
            }
        }
        problems
    }

    /// Writes the versioned persistence format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<corpus>", e);
        writeln!(w, "{CORPUS_HEADER}").map_err(io)?;
        serde_json::to_writer(&mut w, self)?;
        writeln!(w).map_err(io)?;
        for doc in self.documents() {
            serde_json::to_writer(&mut w, doc)?;
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let io = |e| Error::io("<corpus>", e);
        let header = lines.next().transpose().map_err(io)?.unwrap_or_default();
        if header.trim_end() != CORPUS_HEADER {
            return Err(Error::Version { found: header });
        }
        let meta = lines.next().transpose().map_err(io)?.ok_or(Error::Malformed {
            line: 2,
            field: "header".into(),
            message: "missing corpus metadata".into(),
        })?;
        let mut corpus: Corpus = serde_json::from_str(&meta).map_err(|e| Error::from(e).at_line(2))?;
        let mut first_seen = HashMap::new();
        for (i, line) in lines.enumerate() {
            let line_no = i as u64 + 3;
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let doc = decode_document(&line, line_no)?;
            if let Some(first) = first_seen.insert(doc.id.clone(), line_no) {
                return Err(Error::DuplicateId {
                    id: doc.id,
                    first_line: first,
                    second_line: line_no,
                });
            }
            corpus.documents.insert(doc.id.clone(), doc);
        }
        Ok(corpus)
    }
}

fn decode_document(line: &str, line_no: u64) -> Result<StimulusDocument> {
    let record: DocumentRecord = serde_json::from_str(line).map_err(|e| Error::from(e).at_line(line_no))?;
    StimulusDocument::try_from(record).map_err(|e| e.at_line(line_no))
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    corpus.write_to(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Corpus::read_from(f)
}

fn manifest_error(line: u64, field: &str, message: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Reads a manifest CSV.
///
/// The header must be exactly [`MANIFEST_HEADER`] or [`MANIFEST_HEADER_DOM`];
/// every row must have the header's column count. Tags are `;`-separated
/// inside the third field.
pub fn read_manifest<R: Read>(
    reader: R,
    taxonomy: &Taxonomy,
    defaults: CouplingThresholds,
) -> Result<Corpus> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = csv.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(manifest_error(1, "header", "empty manifest")),
    };
    let header_line = header.iter().collect::<Vec<_>>().join(",");
    let width = match header_line.trim_start_matches('\u{feff}') {
        MANIFEST_HEADER => 7,
        MANIFEST_HEADER_DOM => 9,
        other => {
            return Err(manifest_error(
                1,
                "header",
                format!("expected '{MANIFEST_HEADER}' (optionally ',dom_mean,dom_sd'), got '{other}'"),
            ))
        }
    };

    let mut corpus = Corpus::new(taxonomy.name(), defaults);
    let mut first_seen: HashMap<String, u64> = HashMap::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(manifest_error(
                line,
                "columns",
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let number = |idx: usize, name: &'static str| -> Result<f64> {
            record[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| manifest_error(line, name, format!("not a number: '{}'", &record[idx])))
        };
        let val_mean = check_rating("val_mean", number(3, "val_mean")?).map_err(|e| e.at_line(line))?;
        let val_sd = check_sd("val_sd", number(4, "val_sd")?).map_err(|e| e.at_line(line))?;
        let ar_mean = check_rating("ar_mean", number(5, "ar_mean")?).map_err(|e| e.at_line(line))?;
        let ar_sd = check_sd("ar_sd", number(6, "ar_sd")?).map_err(|e| e.at_line(line))?;
        let mut rating =
            AffectiveRating::new(val_mean, val_sd, ar_mean, ar_sd).map_err(|e| e.at_line(line))?;
        if width == 9 {
            rating = rating
                .with_dominance(number(7, "dom_mean")?, number(8, "dom_sd")?)
                .map_err(|e| e.at_line(line))?;
        }
        let profile = SemanticProfile::parse(&record[2]).map_err(|e| e.at_line(line))?;
        profile.resolve(taxonomy).map_err(|e| e.at_line(line))?;
        let doc = StimulusDocument::new(&record[0], &record[1], profile, Provenance::Manifest)
            .map_err(|e| e.at_line(line))?
            .with_rating(rating, Provenance::Manifest);
        if let Some(&first) = first_seen.get(doc.id()) {
            return Err(Error::DuplicateId {
                id: doc.id,
                first_line: first,
                second_line: line,
            });
        }
        first_seen.insert(doc.id.clone(), line);
        corpus.insert(doc)?;
    }
    Ok(corpus)
}

pub fn load_manifest(
    path: impl AsRef<Path>,
    taxonomy: &Taxonomy,
    defaults: CouplingThresholds,
) -> Result<Corpus> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest(f, taxonomy, defaults)
}

/// Formats with at most six fractional digits, trailing zeros dropped.
pub fn format_number(v: f64) -> String {
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Writes annotated documents in manifest form; unannotated ones are skipped.
pub fn write_manifest<W: Write>(corpus: &Corpus, w: W) -> Result<usize> {
    let with_dom = corpus
        .annotated()
        .any(|d| d.rating.and_then(|r| r.dom_mean()).is_some());
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let header = if with_dom {
        MANIFEST_HEADER_DOM
    } else {
        MANIFEST_HEADER
    };
    out.write_record(header.split(','))?;
    let mut n = 0;
    for doc in corpus.annotated() {
        let r = doc.rating.expect("annotated");
        let mut row = vec![
            doc.id.clone(),
            doc.uri.clone(),
            doc.profile.to_tag_string(),
            format_number(r.val_mean()),
            format_number(r.val_sd()),
            format_number(r.ar_mean()),
            format_number(r.ar_sd()),
        ];
        if with_dom {
            row.push(r.dom_mean().map(format_number).unwrap_or_default());
            row.push(r.dom_sd().map(format_number).unwrap_or_default());
        }
        out.write_record(&row)?;
        n += 1;
    }
    out.flush().map_err(|e| Error::io("<manifest>", e))?;
    Ok(n)
}

/// One `folder -> tags [@ rating]` rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FolderRule {
    pub folder: String,
    pub profile: SemanticProfile,
    pub rating: Option<AffectiveRating>,
}

/// Parses `folder_name -> tag1;tag2 [@ val_mean,val_sd,ar_mean,ar_sd]` lines.
pub fn parse_folder_mapping(text: &str, taxonomy: &Taxonomy) -> Result<Vec<FolderRule>> {
    let mut rules: Vec<FolderRule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (folder, rest) = trimmed
            .split_once("->")
            .ok_or_else(|| manifest_error(line, "mapping", "expected 'folder -> tags'"))?;
        let folder = folder.trim().to_string();
        if folder.is_empty() {
            return Err(manifest_error(line, "folder", "empty folder name"));
        }
        let (tags, rating) = match rest.split_once('@') {
            Some((tags, rating)) => (tags, Some(rating)),
            None => (rest, None),
        };
        let profile = SemanticProfile::parse(tags).map_err(|e| e.at_line(line))?;
        profile.resolve(taxonomy).map_err(|e| e.at_line(line))?;
        let rating = match rating {
            None => None,
            Some(r) => {
                let nums = r
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| {
                        manifest_error(line, "rating", format!("not a number list: '{}'", r.trim()))
                    })?;
                if nums.len() != 4 {
                    return Err(manifest_error(
                        line,
                        "rating",
                        "expected val_mean,val_sd,ar_mean,ar_sd",
                    ));
                }
                Some(AffectiveRating::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| e.at_line(line))?)
            }
        };
        if rules.iter().any(|r| r.folder == folder) {
            return Err(manifest_error(line, "folder", format!("'{folder}' mapped twice")));
        }
        rules.push(FolderRule {
            folder,
            profile,
            rating,
        });
    }
    Ok(rules)
}

/// Result of a folder-convention load.
#[derive(Debug, Clone)]
pub struct FolderLoad {
    pub corpus: Corpus,
    /// Sub-folders of the root with no mapping rule; their files were skipped.
    pub unmapped: Vec<String>,
}

/// Builds a corpus from `root/<folder>/<file>` using a mapping file.
///
/// Each regular, non-hidden file directly inside a mapped folder becomes a
/// document whose id is the file name and whose uri is `folder/file`.
pub fn load_folder_convention(
    root: impl AsRef<Path>,
    mapping_file: impl AsRef<Path>,
    taxonomy: &Taxonomy,
    defaults: CouplingThresholds,
) -> Result<FolderLoad> {
    let mapping_file = mapping_file.as_ref();
    let text = std::fs::read_to_string(mapping_file).map_err(|e| Error::io(mapping_file, e))?;
    let rules = parse_folder_mapping(&text, taxonomy)?;
    scan_folders(root.as_ref(), &rules, taxonomy, defaults)
}

pub fn scan_folders(
    root: &Path,
    rules: &[FolderRule],
    taxonomy: &Taxonomy,
    defaults: CouplingThresholds,
) -> Result<FolderLoad> {
    let mut corpus = Corpus::new(taxonomy.name(), defaults);
    let mut unmapped = Vec::new();
    for folder in sorted_entries(root)? {
        if !folder.is_dir() {
            continue;
        }
        let name = folder
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.starts_with('.') {
            continue;
        }
        let Some(rule) = rules.iter().find(|r| r.folder == name) else {
            unmapped.push(name);
            continue;
        };
        for file in sorted_entries(&folder)? {
            let file_name = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            if !file.is_file() || file_name.starts_with('.') {
                continue;
            }
            let uri = format!("{name}/{file_name}");
            let mut doc = StimulusDocument::new(
                file_name.clone(),
                uri,
                rule.profile.clone(),
                Provenance::FolderConvention,
            )?;
            if let Some(r) = rule.rating {
                doc = doc.with_rating(r, Provenance::FolderConvention);
            }
            corpus.insert(doc).map_err(|_| Error::Invalid {
                field: "id",
                message: format!("file name '{file_name}' appears in more than one folder"),
            })?;
        }
    }
    Ok(FolderLoad { corpus, unmapped })
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    out.sort();
    Ok(out)
}

/// Renders a short human summary: counts and provenance mix.
pub fn summary(corpus: &Corpus) -> String {
    let mut by_prov: IndexMap<Provenance, usize> = IndexMap::new();
    for d in corpus.documents() {
        *by_prov.entry(d.provenance).or_default() += 1;
    }
    let mut s = format!(
        "{} documents ({} annotated, {} unannotated), taxonomy '{}'",
        corpus.len(),
        corpus.annotated().count(),
        corpus.unannotated().count(),
        corpus.taxonomy_ref
    );
    for (p, n) in by_prov {
        let _ = write!(
            s,
            "; {}: {n}",
            serde_json::to_value(p).unwrap().as_str().unwrap_or("?")
        );
    }
    s
}
