use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affectcouple_core::analysis::{
    parse_group_queries, scatter_rows, write_group_report, write_scatter, DEFAULT_MATCH_THRESHOLD,
    DEFAULT_OUTLIER_C,
};
use affectcouple_core::corpus::{format_number, load_folder_convention, summary};
use affectcouple_core::estimator::DEFAULT_K_FALLBACK;
use affectcouple_core::synthetic::{read_ground_truth, write_ground_truth};
use affectcouple_core::{
    build_groups, coupled_clusters, estimate, generate_synthetic, group_outliers, leave_one_out, load_corpus,
    load_manifest, save_corpus, Corpus, CouplingThresholds, Error, EstimationConfig, SemanticProfile,
    SyntheticSpec, Taxonomy,
};
use affectcouple_service::{AppState, DEFAULT_ADDR, ENV_ADDR, ENV_CORPUS, ENV_TAXONOMY};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "affectcouple",
    version,
    about = "Semantic-affective coupling for annotated stimulus databases"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Corpus file to read (or write, for ingest and gen-synth).
    #[arg(long, global = true, env = ENV_CORPUS)]
    corpus: Option<PathBuf>,
    /// Taxonomy file (`child,parent` lines).
    #[arg(long, global = true, env = ENV_TAXONOMY)]
    taxonomy: Option<PathBuf>,
    /// Semantic radius; defaults to the corpus setting.
    #[arg(long, global = true)]
    eps_sem: Option<f64>,
    /// Emotional radius; defaults to the corpus setting.
    #[arg(long, global = true)]
    eps_emo: Option<f64>,
    /// Write the machine-readable result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a corpus from a CSV manifest or a folder tree.
    Ingest {
        #[arg(long, conflicts_with_all = ["folders", "mapping"], required_unless_present = "folders")]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "mapping")]
        folders: Option<PathBuf>,
        #[arg(long, requires = "folders")]
        mapping: Option<PathBuf>,
    },
    /// Re-check every corpus invariant.
    Validate,
    /// Rank candidate emotions for a tag set.
    Estimate {
        /// Tags separated by `;`.
        #[arg(long)]
        tags: String,
        #[arg(long, default_value_t = DEFAULT_K_FALLBACK)]
        k_fallback: usize,
        #[arg(long, default_value_t = 1)]
        min_support: usize,
        /// Ignore references annotated by earlier estimates.
        #[arg(long)]
        exclude_estimated: bool,
    },
    /// Print coupling clusters of the annotated documents.
    Couple,
    /// Group report and scatter data.
    Analyze {
        /// Group queries, `name = tags` separated by `|` or newlines, or a file holding them.
        #[arg(long)]
        groups: String,
        /// Outlier factor.
        #[arg(long, default_value_t = DEFAULT_OUTLIER_C)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
        threshold: f64,
        /// Scatter CSV destination; printed after the report when omitted.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Leave-one-out evaluation of the estimator.
    LooEval {
        /// `doc_id,group` CSV for per-group figures.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_K_FALLBACK)]
        k_fallback: usize,
    },
    /// Generate a seeded synthetic corpus and its ground truth.
    GenSynth {
        /// JSON group specification.
        #[arg(long)]
        spec: PathBuf,
        /// Ground-truth CSV; defaults to `<corpus>.truth.csv`.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = ENV_ADDR, default_value = DEFAULT_ADDR)]
        addr: SocketAddr,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
    /// Already reported; just exit 1.
    Reported,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(|l| l.trim().trim_start_matches("error: "))
                .collect();
            eprintln!("error[USAGE]: {}", message.join(" "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error[USAGE]: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
        Err(Failure::Reported) => ExitCode::from(1),
    }
}

impl Global {
    fn taxonomy(&self) -> CliResult<Taxonomy> {
        let path = self
            .taxonomy
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("--taxonomy (or {ENV_TAXONOMY}) is required")))?;
        Ok(Taxonomy::load(path)?)
    }

    fn corpus_path(&self) -> CliResult<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Failure::Usage(format!("--corpus (or {ENV_CORPUS}) is required")))
    }

    fn corpus(&self) -> CliResult<Corpus> {
        Ok(load_corpus(self.corpus_path()?)?)
    }

    fn thresholds(&self, base: CouplingThresholds) -> CliResult<CouplingThresholds> {
        Ok(CouplingThresholds::new(
            self.eps_sem.unwrap_or(base.eps_sem()),
            self.eps_emo.unwrap_or(base.eps_emo()),
        )?)
    }

    fn sink(&self) -> CliResult<Box<dyn Write>> {
        open_sink(self.output.as_deref())
    }
}

fn open_sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_error(path: &Path, source: io::Error) -> Failure {
    Failure::Domain(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn stdout_error(e: io::Error) -> Failure {
    io_error(Path::new("<stdout>"), e)
}

fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest {
            manifest,
            folders,
            mapping,
        } => ingest(g, manifest.as_deref(), folders.as_deref().zip(mapping.as_deref())),
        Command::Validate => validate(g),
        Command::Estimate {
            tags,
            k_fallback,
            min_support,
            exclude_estimated,
        } => {
            let corpus = g.corpus()?;
            let th = g.thresholds(corpus.defaults())?;
            let cfg = EstimationConfig {
                eps_sem: th.eps_sem(),
                eps_emo: th.eps_emo(),
                k_fallback: *k_fallback,
                min_support: *min_support,
                include_estimated: !exclude_estimated,
            };
            estimate_cmd(g, &corpus, tags, &cfg)
        }
        Command::Couple => couple_cmd(g),
        Command::Analyze {
            groups,
            c,
            threshold,
            scatter,
        } => analyze(g, groups, *c, *threshold, scatter.as_deref()),
        Command::LooEval {
            ground_truth,
            k_fallback,
        } => loo(g, ground_truth.as_deref(), *k_fallback),
        Command::GenSynth { spec, ground_truth } => gen_synth(g, spec, ground_truth.as_deref()),
        Command::Serve { addr } => {
            let taxonomy = g.taxonomy()?;
            let path = g.corpus_path()?;
            let corpus = load_corpus(path)?;
            eprintln!("serving {} on http://{addr}", summary(&corpus));
            affectcouple_service::serve_blocking(*addr, AppState::persistent(corpus, taxonomy, path))
                .map_err(|e| io_error(Path::new(&addr.to_string()), e))
        }
    }
}

fn ingest(g: &Global, manifest: Option<&Path>, folders: Option<(&Path, &Path)>) -> CliResult {
    let taxonomy = g.taxonomy()?;
    let out = g.corpus_path()?;
    let defaults = g.thresholds(CouplingThresholds::default())?;
    let corpus = match (manifest, folders) {
        (Some(m), _) => load_manifest(m, &taxonomy, defaults)?,
        (None, Some((root, mapping))) => {
            let load = load_folder_convention(root, mapping, &taxonomy, defaults)?;
            for folder in &load.unmapped {
                eprintln!("warning: folder '{folder}' has no mapping; its files were skipped");
            }
            load.corpus
        }
        (None, None) => {
            return Err(Failure::Usage(
                "one of --manifest or --folders is required".into(),
            ))
        }
    };
    save_corpus(&corpus, out)?;
    println!("{}", summary(&corpus));
    println!("wrote {}", out.display());
    Ok(())
}

fn validate(g: &Global) -> CliResult {
    let corpus = g.corpus()?;
    let problems = match &g.taxonomy {
        Some(_) => corpus.check_against(&g.taxonomy()?),
        None => Vec::new(),
    };
    if problems.is_empty() {
        println!("ok: {}", summary(&corpus));
        return Ok(());
    }
    for p in &problems {
        eprintln!("error[{}]: {p}", p.code());
    }
    Err(Failure::Reported)
}

const ESTIMATE_HEADER: [&str; 7] = [
    "rank",
    "val",
    "ar",
    "likelihood",
    "support",
    "mean_d_sem",
    "similarity_mass",
];

fn estimate_cmd(g: &Global, corpus: &Corpus, tags: &str, cfg: &EstimationConfig) -> CliResult {
    let taxonomy = g.taxonomy()?;
    let profile = SemanticProfile::parse(tags)?;
    let est = estimate(&profile, corpus, &taxonomy, cfg)?;

    let mut table = String::new();
    table.push_str(&format!(
        "{:>4}  {:>8}  {:>8}  {:>10}  {:>7}  {:>10}\n",
        "rank", "val", "ar", "likelihood", "support", "mean_d_sem"
    ));
    for (i, c) in est.candidates.iter().enumerate() {
        table.push_str(&format!(
            "{:>4}  {:>8}  {:>8}  {:>10.4}  {:>7}  {:>10.4}\n",
            i + 1,
            format_number(c.emotion.val()),
            format_number(c.emotion.ar()),
            c.likelihood,
            c.support.len(),
            c.mean_semantic_distance
        ));
    }
    if est.used_fallback {
        table.push_str(&format!(
            "note: no reference within eps_sem {}; used the {} nearest\n",
            format_number(cfg.eps_sem),
            est.neighbor_count
        ));
    }
    let mut stdout = io::stdout().lock();
    stdout.write_all(table.as_bytes()).map_err(stdout_error)?;
    if g.output.is_none() {
        writeln!(stdout).map_err(stdout_error)?;
    }
    drop(stdout);

    let mut out = g.sink()?;
    let mut csv = ESTIMATE_HEADER.join(",");
    csv.push('\n');
    for (i, c) in est.candidates.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i + 1,
            format_number(c.emotion.val()),
            format_number(c.emotion.ar()),
            format_number(c.likelihood),
            c.support.join(";"),
            format_number(c.mean_semantic_distance),
            format_number(c.similarity_mass)
        ));
    }
    out.write_all(csv.as_bytes())
        .and_then(|_| out.flush())
        .map_err(stdout_error)
}

fn couple_cmd(g: &Global) -> CliResult {
    let corpus = g.corpus()?;
    let taxonomy = g.taxonomy()?;
    let th = g.thresholds(corpus.defaults())?;
    let docs: Vec<_> = corpus.annotated().cloned().collect();
    let clusters = coupled_clusters(&docs, &taxonomy, th)?;
    let coupled: Vec<_> = clusters.iter().filter(|c| c.len() > 1).collect();
    let mut out = g.sink()?;
    let text = if g.output.is_some() {
        let mut s = String::from("doc_id,cluster\n");
        for (i, c) in clusters.iter().enumerate() {
            for id in c {
                s.push_str(&format!("{id},{}\n", i + 1));
            }
        }
        s
    } else {
        let mut s = format!(
            "eps_sem={} eps_emo={}: {} coupled cluster(s), {} singleton(s)\n",
            format_number(th.eps_sem()),
            format_number(th.eps_emo()),
            coupled.len(),
            clusters.len() - coupled.len()
        );
        for (i, c) in coupled.iter().enumerate() {
            s.push_str(&format!("cluster {}: {}\n", i + 1, c.join(", ")));
        }
        s
    };
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(stdout_error)
}

fn analyze(g: &Global, spec: &str, c: f64, threshold: f64, scatter: Option<&Path>) -> CliResult {
    let corpus = g.corpus()?;
    let taxonomy = g.taxonomy()?;
    let text = if Path::new(spec).is_file() {
        std::fs::read_to_string(spec).map_err(|e| io_error(Path::new(spec), e))?
    } else {
        spec.to_string()
    };
    let queries = parse_group_queries(&text)?;
    let groups = build_groups(&corpus, &taxonomy, &queries, threshold)?;
    for grp in &groups {
        if grp.empty {
            eprintln!("warning: group '{}' matched no documents", grp.name);
        } else if let Ok(outliers) = group_outliers(grp, c) {
            for o in outliers {
                eprintln!(
                    "outlier: group '{}' document '{}' score {:.3}",
                    grp.name, o.id, o.score
                );
            }
        }
    }
    let mut out = g.sink()?;
    write_group_report(&groups, c, &mut out)?;
    let rows = scatter_rows(&corpus, &groups);
    match scatter {
        Some(p) => write_scatter(&rows, open_sink(Some(p))?)?,
        None if g.output.is_none() => {
            writeln!(out).map_err(stdout_error)?;
            write_scatter(&rows, &mut out)?;
        }
        None => write_scatter(&rows, io::stdout().lock())?,
    }
    out.flush().map_err(stdout_error)
}

fn loo(g: &Global, ground_truth: Option<&Path>, k_fallback: usize) -> CliResult {
    let corpus = g.corpus()?;
    let taxonomy = g.taxonomy()?;
    let th = g.thresholds(corpus.defaults())?;
    let cfg = EstimationConfig {
        eps_sem: th.eps_sem(),
        eps_emo: th.eps_emo(),
        k_fallback,
        ..EstimationConfig::default()
    };
    let truth = match ground_truth {
        Some(p) => Some(read_ground_truth(File::open(p).map_err(|e| io_error(p, e))?)?),
        None => None,
    };
    let report = leave_one_out(&corpus, &taxonomy, &cfg, truth.as_ref())?;
    print!("{}", report.summary_text());
    if let Some(p) = &g.output {
        report.write_csv(open_sink(Some(p))?)?;
    }
    Ok(())
}

fn gen_synth(g: &Global, spec_path: &Path, ground_truth: Option<&Path>) -> CliResult {
    let taxonomy = g.taxonomy()?;
    let out = g
        .corpus
        .as_deref()
        .or(g.output.as_deref())
        .ok_or_else(|| Failure::Usage("--corpus or --output is required".into()))?;
    let text = std::fs::read_to_string(spec_path).map_err(|e| io_error(spec_path, e))?;
    let spec = SyntheticSpec::from_json(&text)?;
    let defaults = g.thresholds(CouplingThresholds::default())?;
    let synth = generate_synthetic(&spec, &taxonomy, g.seed, defaults)?;
    save_corpus(&synth.corpus, out)?;
    let truth_path = ground_truth.map(PathBuf::from).unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".truth.csv");
        PathBuf::from(p)
    });
    write_ground_truth(&synth.ground_truth, open_sink(Some(&truth_path))?)?;
    println!(
        "generated {} documents in {} groups (seed {}) -> {}, {}",
        synth.corpus.len(),
        spec.groups.len(),
        g.seed,
        out.display(),
        truth_path.display()
    );
    Ok(())
}
