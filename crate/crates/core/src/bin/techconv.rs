use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use techconv::breakcheck::{IndexWeighting, Period};
use techconv::cograph::{ItemField, PairMode};
use techconv::corpus::TimeWindow;
use techconv::pipeline::{self, ConfigFile, PipelineConfig};
use techconv::transition::SimilarityMeasure;
use techconv::{Error, Result};

/// Technological convergence analysis of dated, tagged document collections.
#[derive(Parser)]
#[command(name = "techconv", version)]
struct Cli {
    /// Flat JSON or TOML file with default values for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster two windows and compare them.
    Compare {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "START:END")]
        window_t: Option<TimeWindow>,
        #[arg(long, value_name = "START:END")]
        window_t1: Option<TimeWindow>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Index series over a window list and the Chow test at a known breakpoint.
    Series {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// JSON array of windows (`"START:END[:LABEL]"` or objects).
        #[arg(long, value_name = "FILE")]
        windows: Option<PathBuf>,
        /// Index of the first point of the second segment.
        #[arg(long)]
        breakpoint: Option<usize>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Term counts per period across sources, with pairwise correlation.
    Trend {
        /// `LABEL=PATH`, repeated for each source.
        #[arg(long = "source", value_name = "LABEL=PATH")]
        sources: Vec<String>,
        /// JSON array of terms or one term per line.
        #[arg(long, value_name = "FILE")]
        terms: Option<PathBuf>,
        #[arg(long)]
        period: Option<Period>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
    /// Generate a synthetic corpus from a plant spec.
    Synth {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Build and cluster a single window.
    Cluster {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "START:END")]
        window: Option<TimeWindow>,
        #[command(flatten)]
        flags: PipelineFlags,
    },
}

#[derive(Args)]
struct PipelineFlags {
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    field: Option<ItemField>,
    #[arg(long)]
    pairs: Option<PairMode>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    measure: Option<SimilarityMeasure>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    weighting: Option<IndexWeighting>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl PipelineFlags {
    fn resolve(self, file: &ConfigFile) -> PipelineConfig {
        let base = PipelineConfig::from_file(file);
        PipelineConfig {
            lexicon: self.lexicon.or(base.lexicon),
            field: self.field.unwrap_or(base.field),
            pairs: self.pairs.unwrap_or(base.pairs),
            top_n: self.top_n.unwrap_or(base.top_n),
            measure: self.measure.unwrap_or(base.measure),
            tau: self.tau.unwrap_or(base.tau),
            resolution: self.resolution.unwrap_or(base.resolution),
            weighting: self.weighting.unwrap_or(base.weighting),
            out: self.out.unwrap_or(base.out),
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Usage(format!("missing --{flag}")))
}

fn window(flag: Option<TimeWindow>, file: Option<&String>, name: &str) -> Result<TimeWindow> {
    match (flag, file) {
        (Some(w), _) => Ok(w),
        (None, Some(s)) => Ok(s.parse()?),
        (None, None) => Err(Error::Usage(format!("missing --{name}"))),
    }
}

fn parse_source(s: &str) -> Result<(String, PathBuf)> {
    match s.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_string(), PathBuf::from(path))),
        _ => Err(Error::Usage(format!("--source expects LABEL=PATH, got `{s}`"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Compare {
            corpus,
            window_t,
            window_t1,
            flags,
        } => {
            let corpus = required(corpus.or(file.corpus.clone()), "corpus")?;
            let wt = window(window_t, file.window_t.as_ref(), "window-t")?;
            let wt1 = window(window_t1, file.window_t1.as_ref(), "window-t1")?;
            let config = flags.resolve(&file);
            let outcome = pipeline::run_compare(&corpus, &wt, &wt1, &config)?;
            print!("{}", outcome.summary);
        }
        Command::Series {
            corpus,
            windows,
            breakpoint,
            flags,
        } => {
            let corpus = required(corpus.or(file.corpus.clone()), "corpus")?;
            let windows = required(windows.or(file.windows.clone()), "windows")?;
            let breakpoint = required(breakpoint.or(file.breakpoint), "breakpoint")?;
            let config = flags.resolve(&file);
            let outcome = pipeline::run_series(&corpus, &windows, breakpoint, &config)?;
            print!("{}", outcome.summary);
        }
        Command::Trend {
            sources,
            terms,
            period,
            flags,
        } => {
            let sources = sources.iter().map(|s| parse_source(s)).collect::<Result<Vec<_>>>()?;
            let terms_path = required(terms.or(file.terms.clone()), "terms")?;
            let terms = read_terms(&terms_path)?;
            let period = period.or(file.period).unwrap_or_default();
            let config = flags.resolve(&file);
            let outcome = pipeline::run_trend(&sources, &terms, period, &config)?;
            let failed: Vec<_> = outcome.correlations.iter().filter(|c| c.3.is_err()).collect();
            println!(
                "{} terms, {} correlations ({} undefined)",
                outcome.tables.len(),
                outcome.correlations.len(),
                failed.len()
            );
            for (term, a, b, r) in failed {
                if let Err(e) = r {
                    eprintln!("warning: {term} ({a} vs {b}): {e}");
                }
            }
        }
        Command::Synth { spec, seed, out } => {
            let spec = required(spec.or(file.spec.clone()), "spec")?;
            let out = out.or(file.out.clone()).unwrap_or_else(|| PipelineConfig::default().out);
            let path = pipeline::run_synth(&spec, seed.or(file.seed), &out)?;
            println!("{}", path.display());
        }
        Command::Cluster { corpus, window: w, flags } => {
            let corpus = required(corpus.or(file.corpus.clone()), "corpus")?;
            let w = window(w, file.window_t.as_ref(), "window")?;
            let config = flags.resolve(&file);
            let a = pipeline::run_cluster(&corpus, &w, &config)?;
            println!(
                "{} nodes, {} edges, {} clusters, Q = {:.4}",
                a.graph.node_count(),
                a.graph.edge_count(),
                a.partition.cluster_count(),
                a.partition.modularity()
            );
            for l in &a.labels {
                println!("{:>3}  {}", l.cluster, l.top_tags.join(", "));
            }
        }
    }
    Ok(())
}

fn read_terms(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    let terms = pipeline::parse_terms(&text);
    if terms.is_empty() {
        return Err(Error::Usage(format!("{}: no terms", path.display())));
    }
    Ok(terms)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
