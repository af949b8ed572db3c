//! Command-line interface to the random perfect graph laboratory.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use perfolab::experiments::{run_experiment, ExperimentConfig, GraphModel};
use perfolab::formulas::{
    build_alternator, build_base_formula, build_probe, build_unip, relativize, spectrum_contains,
    PredicateKind, SPECTRUM_CAP,
};
use perfolab::logic::{evaluate, parse, Environment, Structure};
use perfolab::sampler::{sample_perfect, sample_unipolar, SampleSeed};
use perfolab::Graph;
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

/// Hard ceiling on sample sizes, overridable via PERFOLAB_MAX_N.
const DEFAULT_MAX_N: usize = 100_000;

#[derive(Parser)]
#[command(
    name = "perfolab",
    version,
    about = "Random perfect graph laboratory: samplers, a first-order model checker, and experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a random unipolar (or perfect) graph and print it as JSON.
    ///
    /// Output: {"n", "edges", "parts"} plus "orientation" with --perfect.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Flip the complementation coin and report the orientation.
        #[arg(long)]
        perfect: bool,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a sentence on a graph loaded from JSON.
    Eval {
        /// Graph file in the {"n", "edges"} JSON format.
        graph: PathBuf,
        /// Sentence file; stdin when omitted.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Print a builder formula in canonical concrete syntax.
    ///
    /// Kinds: inc0, cn, hedge, bigger, unip, relativize (needs --phi),
    /// probe (needs --phi), alternator (needs --phi0 and --phi1).
    Formulas {
        kind: String,
        /// Keep InC0/CN/Hedge as interpreted relation atoms instead of
        /// inlining them into pure graph language.
        #[arg(long)]
        interpreted: bool,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        phi0: Option<PathBuf>,
        #[arg(long)]
        phi1: Option<PathBuf>,
    },
    /// Decide whether some labelled graph on exactly n vertices satisfies
    /// the sentence (exhaustive search, capped).
    Spectrum {
        /// Sentence text, e.g. "exists x y z : x ~ y & x ~ z & y ~ z".
        sentence: String,
        n: usize,
        #[arg(long, default_value_t = SPECTRUM_CAP)]
        cap: usize,
    },
    /// Run a named experiment and emit its JSON report.
    ///
    /// Names: criterion, rightsize, realise, dichotomy (needs --phi),
    /// frequency (needs --phi, or --phi0 with --phi1).
    Experiment {
        name: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampling model: unipolar or perfect (frequency defaults to
        /// perfect, everything else to unipolar).
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long)]
        phi0: Option<PathBuf>,
        #[arg(long)]
        phi1: Option<PathBuf>,
        /// Cap on |N(C_i)| in the dichotomy part scan.
        #[arg(long)]
        size_cap: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the central-clique size law as CSV (m, probability).
    Pmf {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten a JSON experiment report into per-trial CSV rows.
    Report {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn max_n() -> usize {
    std::env::var("PERFOLAB_MAX_N")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_N)
}

fn check_n(n: usize) -> Result<()> {
    let limit = max_n();
    if n > limit {
        bail!("n = {n} exceeds the guard of {limit} (set PERFOLAB_MAX_N to override)");
    }
    Ok(())
}

fn read_sentence(path: &Path) -> Result<perfolab::Formula> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading sentence file {}", path.display()))?;
    Ok(parse(text.trim())?)
}

fn write_out(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Sample {
            n,
            seed,
            stream,
            perfect,
            out,
        } => {
            check_n(n)?;
            if n == 0 {
                bail!("samples need at least one vertex");
            }
            let value = if perfect {
                let s = sample_perfect(n, SampleSeed::new(seed, stream));
                sample_json(&s.graph, s.witness.parts(), Some(s.orientation))
            } else {
                let pg = sample_unipolar(n, SampleSeed::new(seed, stream));
                sample_json(pg.graph(), pg.parts(), None)
            };
            write_out(out.as_deref(), &format!("{value}\n"))?;
        }
        Cmd::Eval { graph, phi } => {
            let text = fs::read_to_string(&graph)
                .with_context(|| format!("reading graph file {}", graph.display()))?;
            let g = Graph::from_json_str(&text)?;
            let sentence = match phi {
                Some(path) => read_sentence(&path)?,
                None => {
                    let mut buf = String::new();
                    std::io::stdin().read_to_string(&mut buf)?;
                    parse(buf.trim())?
                }
            };
            let holds = evaluate(&Structure::graph_only(g), &sentence, &Environment::new())?;
            println!("{holds}");
        }
        Cmd::Formulas {
            kind,
            interpreted,
            phi,
            phi0,
            phi1,
        } => {
            let need_phi = |phi: &Option<PathBuf>| -> Result<perfolab::Formula> {
                phi.as_deref()
                    .map(read_sentence)
                    .transpose()?
                    .context("this kind needs --phi")
            };
            let f = match kind.as_str() {
                "inc0" => build_base_formula(PredicateKind::InC0, interpreted),
                "cn" => build_base_formula(PredicateKind::Cn, interpreted),
                "hedge" => build_base_formula(PredicateKind::Hedge, interpreted),
                "bigger" => build_base_formula(PredicateKind::Bigger, interpreted),
                "unip" => build_unip(),
                "relativize" => relativize(&need_phi(&phi)?, interpreted)?,
                "probe" => build_probe(&need_phi(&phi)?, interpreted)?,
                "alternator" => {
                    let f0 = phi0.as_deref().map(read_sentence).transpose()?;
                    let f1 = phi1.as_deref().map(read_sentence).transpose()?;
                    match (f0, f1) {
                        (Some(f0), Some(f1)) => build_alternator(&f0, &f1, interpreted)?,
                        _ => bail!("alternator needs --phi0 and --phi1"),
                    }
                }
                other => bail!(
                    "unknown formula kind {other:?} (expected inc0, cn, hedge, bigger, unip, relativize, probe, or alternator)"
                ),
            };
            println!("{f}");
        }
        Cmd::Spectrum { sentence, n, cap } => {
            let phi = parse(&sentence)?;
            let holds = spectrum_contains(&phi, n, cap)?;
            println!("{holds}");
        }
        Cmd::Experiment {
            name,
            n,
            trials,
            seed,
            model,
            phi,
            phi0,
            phi1,
            size_cap,
            out,
        } => {
            check_n(n)?;
            let mut cfg = ExperimentConfig::new(&name, n, trials, seed);
            cfg.model = match model.as_deref() {
                Some("unipolar") => GraphModel::Unipolar,
                Some("perfect") => GraphModel::Perfect,
                Some(other) => bail!("unknown model {other:?} (expected unipolar or perfect)"),
                None if name == "frequency" => GraphModel::Perfect,
                None => GraphModel::Unipolar,
            };
            let read_text = |p: &PathBuf| -> Result<String> {
                Ok(fs::read_to_string(p)
                    .with_context(|| format!("reading sentence file {}", p.display()))?
                    .trim()
                    .to_string())
            };
            cfg.phi = phi.as_ref().map(read_text).transpose()?;
            cfg.phi0 = phi0.as_ref().map(read_text).transpose()?;
            cfg.phi1 = phi1.as_ref().map(read_text).transpose()?;
            cfg.size_cap = size_cap;
            let report = run_experiment(&cfg)?;
            write_out(out.as_deref(), &format!("{}\n", report.to_json_string()))?;
        }
        Cmd::Pmf { n, out } => {
            let pmf = perfolab::combinatorics::central_size_pmf(n)?;
            let mut csv = String::from("m,probability\n");
            for (i, p) in pmf.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", i + 1, p));
            }
            write_out(out.as_deref(), &csv)?;
        }
        Cmd::Report { input, out } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading report {}", input.display()))?;
            let report: Value = serde_json::from_str(&text)?;
            let trials = report["trials"]
                .as_array()
                .context("report has no trials array")?;
            let csv = trials_to_csv(trials)?;
            write_out(out.as_deref(), &csv)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SampleJson<'a> {
    n: usize,
    edges: Vec<(usize, usize)>,
    parts: &'a [Vec<usize>],
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<perfolab::Orientation>,
}

fn sample_json(
    graph: &Graph,
    parts: &[Vec<usize>],
    orientation: Option<perfolab::Orientation>,
) -> String {
    serde_json::to_string(&SampleJson {
        n: graph.n(),
        edges: graph.edges(),
        parts,
        orientation,
    })
    .expect("sample serialization cannot fail")
}

/// One CSV row per trial record; columns are the union of keys, sorted.
/// Nested values are embedded as JSON text.
fn trials_to_csv(trials: &[Value]) -> Result<String> {
    let mut columns: Vec<String> = Vec::new();
    for t in trials {
        if let Some(obj) = t.as_object() {
            for k in obj.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    columns.sort();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&columns)?;
    for t in trials {
        let row: Vec<String> = columns
            .iter()
            .map(|c| match &t[c.as_str()] {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect();
        writer.write_record(&row)?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}
