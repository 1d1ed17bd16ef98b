use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use upr_audit::baseline::{match_syntax, partition, run_taint, Finding};
use upr_audit::cfront::anonymize::anonymize_units;
use upr_audit::cfront::VariableKey;
use upr_audit::dot::{pdg_to_dot, subgraph_to_dot};
use upr_audit::eval::{anonymization_study, histogram, BucketCounts};
use upr_audit::pipeline::{
    analyze, build_report, load_ratings, load_sources, rate_statements, run_pipeline, write_report, PipelineError,
    ProviderKind, RunConfig,
};
use upr_audit::rater::{MockProvider, PromptProfile};
use upr_audit::scorer::UprReport;
use upr_audit::slicer::extract_subgraph;

#[derive(Parser)]
#[command(
    name = "upr-audit",
    version,
    about = "Score C variables by how closely they relate to user privileges"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// C files or directories (searched for .c files)
    sources: Vec<PathBuf>,
    /// JSON run configuration; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rating provider: llm, mock or replay [default: mock]
    #[arg(long)]
    provider: Option<ProviderKind>,
    /// Prompt profile: full, partial or none [default: full]
    #[arg(long)]
    profile: Option<PromptProfile>,
    /// Weight of the best neighbour rating, in [0, 1] [default: 0.5]
    #[arg(long)]
    lambda: Option<f64>,
    /// Candidate threshold, inclusive, in [0, 10] [default: 9.0]
    #[arg(long)]
    threshold: Option<f64>,
    /// Rating cache [default: <out>/ratings.jsonl]
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Recorded ratings for the replay provider
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Chat-completions base URL for the llm provider
    #[arg(long)]
    base_url: Option<String>,
    /// Model id for the llm provider
    #[arg(long)]
    model: Option<String>,
    /// Maximum concurrent rating requests [default: 4]
    #[arg(long)]
    max_inflight: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if !self.sources.is_empty() {
            c.sources = self.sources.clone();
        }
        if let Some(v) = &self.out {
            c.out_dir = v.clone();
        }
        if let Some(v) = self.provider {
            c.provider = v;
        }
        if let Some(v) = self.profile {
            c.profile = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.threshold {
            c.threshold = v;
        }
        if let Some(v) = &self.cache {
            c.cache_path = Some(v.clone());
        }
        if let Some(v) = &self.replay {
            c.replay_path = Some(v.clone());
        }
        if let Some(v) = &self.base_url {
            c.endpoint.base_url = v.clone();
        }
        if let Some(v) = &self.model {
            c.endpoint.model = v.clone();
        }
        if let Some(v) = self.max_inflight {
            c.max_inflight = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build PDGs, subgraphs and the statement set
    Analyze(RunArgs),
    /// Analyze, then rate every unique statement
    Rate(RunArgs),
    /// Re-score from existing ratings (<out>/ratings.jsonl unless --cache)
    Score(RunArgs),
    /// Run the whole pipeline and write report.json and report.csv
    Report(RunArgs),
    /// Run the keyword and taint heuristics
    Baseline {
        sources: Vec<PathBuf>,
        /// Extra sink callee for the taint rule (repeatable)
        #[arg(long = "extra-sink")]
        extra_sinks: Vec<String>,
        /// Write findings here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Split positives into heuristic-only, score-only and both
    Compare {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
    },
    /// Rating histogram from a ratings file or an 11-entry count array
    Histogram {
        #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
        ratings: Option<PathBuf>,
        /// JSON array of 11 counts, for ratings 0 to 10
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, default_value = "mock")]
        provider: String,
        #[arg(long, default_value = "full")]
        profile: PromptProfile,
    },
    /// Rename identifiers consistently
    Anonymize {
        sources: Vec<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Rename library names too
        #[arg(long)]
        rename_all: bool,
        #[arg(long, default_value = "out/anon")]
        out: PathBuf,
        /// Also compare structure and mock ratings before and after
        #[arg(long)]
        study: bool,
    },
    /// Graphviz output for a function PDG or a variable subgraph
    Dot {
        sources: Vec<PathBuf>,
        #[arg(long, conflicts_with = "var", required_unless_present = "var")]
        function: Option<String>,
        /// Variable as <function:name>
        #[arg(long)]
        var: Option<VariableKey>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => e.exit_code() as u8,
            CliError::Usage(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Pipeline(PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn print_candidates(report: &UprReport) {
    for v in report.variables.iter().filter(|v| v.candidate) {
        println!("{:>7.3}  {}:{}", v.score, v.function, v.name);
    }
    println!(
        "{} variables, {} candidates at threshold {}",
        report.variables.len(),
        report.candidates().len(),
        report.meta.threshold
    );
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Analyze(args) => {
            let cfg = args.config()?;
            let analysis = analyze(&load_sources(&cfg.sources)?)?;
            analysis.write_artifacts(&cfg.out_dir)?;
            println!(
                "{} functions, {} variables, {} unique statements -> {}",
                analysis.functions.len(),
                analysis.variables.len(),
                analysis.statement_set().len(),
                cfg.out_dir.display()
            );
        }
        Cmd::Rate(args) => {
            let cfg = args.config()?;
            let analysis = analyze(&load_sources(&cfg.sources)?)?;
            analysis.write_artifacts(&cfg.out_dir)?;
            let provider = cfg.make_provider()?;
            let run = rate_statements(&cfg, &analysis, provider.as_ref())?;
            println!(
                "{} statements: {} rated, {} cached, {} flagged -> {}",
                run.ratings.len(),
                run.rated,
                run.cache_hits,
                run.flagged,
                cfg.cache_path().display()
            );
        }
        Cmd::Score(args) => {
            let cfg = args.config()?;
            let analysis = analyze(&load_sources(&cfg.sources)?)?;
            let ratings = load_ratings(&cfg.cache_path(), cfg.provider_id(), cfg.profile)?;
            let report = build_report(&cfg, &analysis, &ratings, cfg.provider_id())?;
            write_report(&cfg.out_dir, &report)?;
            print_candidates(&report);
        }
        Cmd::Report(args) => {
            let cfg = args.config()?;
            let out = run_pipeline(&cfg)?;
            print_candidates(&out.report);
        }
        Cmd::Baseline {
            sources,
            extra_sinks,
            output,
        } => {
            let units = load_sources(&sources)?;
            let analysis = analyze(&units)?;
            let mut findings: Vec<Finding> = Vec::new();
            for unit in &units {
                let fns: Vec<_> = analysis
                    .functions
                    .iter()
                    .filter(|f| f.file == unit.path)
                    .map(|f| f.lowered.clone())
                    .collect();
                let file = unit.path.display().to_string();
                findings.extend(match_syntax(&file, &fns));
                for f in &fns {
                    findings.extend(run_taint(&file, f, &extra_sinks));
                }
            }
            let json = serde_json::to_string_pretty(&findings).expect("findings serialize") + "\n";
            match output {
                Some(p) => std::fs::write(&p, json).map_err(io(&p))?,
                None => print!("{json}"),
            }
        }
        Cmd::Compare { report, baseline } => {
            let report: UprReport = read_json(&report)?;
            let findings: Vec<Finding> = read_json(&baseline)?;
            let p = partition(&report.candidates(), &findings);
            println!("{}", serde_json::to_string_pretty(&p).expect("partition serializes"));
            println!("{}", p.summary());
        }
        Cmd::Histogram {
            ratings,
            counts,
            provider,
            profile,
        } => {
            let b = match (ratings, counts) {
                (Some(r), _) => histogram(&load_ratings(&r, &provider, profile)?),
                (None, Some(c)) => BucketCounts::from_counts(read_json(&c)?),
                (None, None) => return Err(CliError::Usage("pass --ratings or --counts".into())),
            };
            println!("{}", b.to_json());
            println!(
                "low {} mid {} high {}; mid < high < low: {}",
                b.low(),
                b.mid(),
                b.high(),
                b.shape_holds()
            );
        }
        Cmd::Anonymize {
            sources,
            seed,
            rename_all,
            out,
            study,
        } => {
            let units = load_sources(&sources)?;
            let (anon, map) =
                anonymize_units(&units, seed, rename_all).map_err(|e| CliError::Analysis(e.to_string()))?;
            std::fs::create_dir_all(&out).map_err(io(&out))?;
            for u in &anon {
                let name = u
                    .path
                    .file_name()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("unit.c"));
                let dest = out.join(name);
                std::fs::write(&dest, &u.text).map_err(io(&dest))?;
            }
            let map_path = out.join("rename_map.json");
            std::fs::write(&map_path, map.to_json() + "\n").map_err(io(&map_path))?;
            println!(
                "{} files, {} renamed identifiers -> {}",
                anon.len(),
                map.pairs.len(),
                out.display()
            );
            if study {
                let s = anonymization_study(&units, seed, rename_all, &MockProvider::new(), PromptProfile::Full)
                    .map_err(|e| CliError::Analysis(e.to_string()))?;
                println!("{}", serde_json::to_string_pretty(&s).expect("study serializes"));
            }
        }
        Cmd::Dot { sources, function, var } => {
            let analysis = analyze(&load_sources(&sources)?)?;
            let text = match (function, var) {
                (Some(f), _) => {
                    let fa = analysis
                        .function(&f)
                        .ok_or_else(|| CliError::Usage(format!("no function `{f}`")))?;
                    pdg_to_dot(&fa.pdg)
                }
                (None, Some(v)) => {
                    let fa = analysis
                        .function(&v.function)
                        .ok_or_else(|| CliError::Usage(format!("no function `{}`", v.function)))?;
                    subgraph_to_dot(&fa.pdg, &extract_subgraph(&fa.pdg, &v))
                }
                (None, None) => return Err(CliError::Usage("pass --function or --var".into())),
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
