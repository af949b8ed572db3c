//! Seeded Monte Carlo harness over the samplers, with deterministic JSON
//! reports.
//!
//! Every experiment draws each trial from `SampleSeed::new(cfg.seed, trial)`,
//! so re-running a config reproduces the report byte for byte (wall clock
//! aside). Trials are independent and run in parallel; metrics are counts
//! and sums folded in trial order, so parallelism cannot change them.

use crate::combinatorics::solve_r;
use crate::formulas::{
    build_alternator, oracle_tables, probe_holds_combinatorial, FormulaError,
};
use crate::graph::{has_independent_triple_in_neighborhood, PartitionedGraph};
use crate::logic::{
    evaluate, parse, Environment, EvalError, Formula, ParseError, Structure,
};
use crate::sampler::{sample_perfect, sample_unipolar, Orientation, SampleSeed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Instant;
use thiserror::Error;

/// Full first-order evaluation is restricted to graphs of this size; the
/// oracle-backed experiments scale far beyond it.
pub const FULL_FO_MAX_N: usize = 300;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("full first-order evaluation is capped at n = {limit}, got n = {n}")]
    CostGuard { n: usize, limit: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Which sampler feeds the trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GraphModel {
    #[default]
    Unipolar,
    Perfect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub model: GraphModel,
    /// Sentence text (canonical form is echoed back into reports).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phi0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phi1: Option<String>,
    /// Cap on |N(C_i)| for the dichotomy part scan; None picks the default
    /// (unbounded up to n = 300, twice the ell scale beyond).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub size_cap: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, n: usize, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            name: name.into(),
            n,
            trials,
            seed,
            model: GraphModel::Unipolar,
            phi: None,
            phi0: None,
            phi1: None,
            size_cap: None,
        }
    }
}

/// Config echo, per-trial records, and aggregate metrics. `to_json_string`
/// is byte-stable across runs of the same config except for
/// `wall_clock_seconds`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, Value>,
    pub trials: Vec<Value>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// The report as JSON with the wall-clock field removed, for equality
    /// checks across runs.
    pub fn comparable(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serialization cannot fail");
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    }
}

/// The iterated-log size scale `ceil(ln ln ln n)`; defined for `n >= 16`.
pub fn ell(n: usize) -> Result<u32, ExperimentError> {
    if n < 16 {
        return Err(ExperimentError::InvalidConfig(format!(
            "n = {n} is too small: the iterated-log scale needs n >= 16"
        )));
    }
    Ok((n as f64).ln().ln().ln().ceil() as u32)
}

/// The part-size scale `ceil(sqrt(ln n))`, recorded in reports.
pub fn t_scale(n: usize) -> u32 {
    (n as f64).ln().sqrt().ceil() as u32
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn base_metrics(cfg: &ExperimentConfig) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("n".to_string(), json!(cfg.n));
    m.insert("trials".to_string(), json!(cfg.trials));
    m.insert(
        "ell".to_string(),
        ell(cfg.n).map(|e| json!(e)).unwrap_or(Value::Null),
    );
    m.insert("t_scale".to_string(), json!(t_scale(cfg.n.max(2))));
    m
}

fn trial_r(n: usize, c0_size: usize) -> Value {
    let rest = n.saturating_sub(c0_size);
    if rest == 0 {
        Value::Null
    } else {
        json!(solve_r(rest as f64).expect("rest >= 1"))
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0u64;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn median_of(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn run_trials<T: Send>(
    cfg: &ExperimentConfig,
    per_trial: impl Fn(u64) -> T + Sync + Send,
) -> Vec<T> {
    (0..cfg.trials).into_par_iter().map(per_trial).collect()
}

fn require_unipolar_model(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    if cfg.model != GraphModel::Unipolar {
        return Err(ExperimentError::InvalidConfig(format!(
            "experiment {} needs the witness partition, so its model must be unipolar",
            cfg.name
        )));
    }
    Ok(())
}

// ============================================================================
// criterion: stable-triple test vs. ground truth central membership
// ============================================================================

/// Counts, per sample, the vertices where the stable-triple neighbourhood
/// test disagrees with true central-clique membership.
pub fn validate_criterion(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    require_unipolar_model(cfg)?;
    ell(cfg.n)?;
    let records = run_trials(cfg, |trial| {
        let pg = sample_unipolar(cfg.n, SampleSeed::new(cfg.seed, trial));
        let g = pg.graph();
        let mut misclassified = 0usize;
        for v in 0..cfg.n {
            let predicted = has_independent_triple_in_neighborhood(g, v).expect("v < n");
            if predicted != (pg.part_of(v) == 0) {
                misclassified += 1;
            }
        }
        json!({
            "trial": trial,
            "c0_size": pg.central().len(),
            "r": trial_r(cfg.n, pg.central().len()),
            "misclassified": misclassified,
            "misclassified_fraction": misclassified as f64 / cfg.n as f64,
        })
    });
    let zero = records
        .iter()
        .filter(|r| r["misclassified"].as_u64() == Some(0))
        .count() as u64;
    let mut metrics = base_metrics(cfg);
    let (lo, hi) = wilson_interval(zero, cfg.trials);
    metrics.insert(
        "zero_misclassification_fraction".to_string(),
        json!(zero as f64 / cfg.trials as f64),
    );
    metrics.insert("zero_misclassification_ci95".to_string(), json!([lo, hi]));
    metrics.insert(
        "mean_misclassified_fraction".to_string(),
        json!(mean_of(records.iter().map(|r| r["misclassified_fraction"].as_f64().unwrap()))),
    );
    metrics.insert(
        "mean_r".to_string(),
        json!(mean_of(records.iter().filter_map(|r| r["r"].as_f64()))),
    );
    Ok(ExperimentReport {
        experiment: cfg.name.clone(),
        config: cfg.clone(),
        metrics,
        trials: records,
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    })
}

// ============================================================================
// rightsize: counts of parts with a prescribed common-neighbourhood size
// ============================================================================

/// For each target size `l' <= ell(n)`, counts side parts whose common
/// neighbourhood has exactly that size.
pub fn validate_rightsize(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    require_unipolar_model(cfg)?;
    let l_max = ell(cfg.n)? as usize;
    let records = run_trials(cfg, |trial| {
        let pg = sample_unipolar(cfg.n, SampleSeed::new(cfg.seed, trial));
        let mut counts = vec![0u64; l_max + 1];
        for i in 1..pg.parts().len() {
            let size = pg.part_common_neighborhood(i).len();
            if size <= l_max {
                counts[size] += 1;
            }
        }
        json!({
            "trial": trial,
            "c0_size": pg.central().len(),
            "r": trial_r(cfg.n, pg.central().len()),
            "counts": counts,
        })
    });
    let mut metrics = base_metrics(cfg);
    for lp in 0..=l_max {
        let hits = records
            .iter()
            .filter(|r| r["counts"][lp].as_u64().unwrap_or(0) >= 1)
            .count() as u64;
        let (lo, hi) = wilson_interval(hits, cfg.trials);
        metrics.insert(
            format!("at_least_one_fraction_size_{lp}"),
            json!(hits as f64 / cfg.trials as f64),
        );
        metrics.insert(format!("at_least_one_ci95_size_{lp}"), json!([lo, hi]));
        metrics.insert(
            format!("median_count_size_{lp}"),
            json!(median_of(
                records
                    .iter()
                    .map(|r| r["counts"][lp].as_u64().unwrap_or(0) as f64)
                    .collect()
            )),
        );
    }
    Ok(ExperimentReport {
        experiment: cfg.name.clone(),
        config: cfg.clone(),
        metrics,
        trials: records,
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    })
}

// ============================================================================
// realise: every labelled target graph on small neighbourhood unions
// ============================================================================

/// For every pair of side parts whose common-neighbourhood union `S` has at
/// most `2 * ell(n)` vertices, checks that every labelled graph on `S` is
/// realized as the derived graph of `S` against some side part.
pub fn validate_realise(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    require_unipolar_model(cfg)?;
    let budget = 2 * ell(cfg.n)? as usize;
    let records = run_trials(cfg, |trial| {
        let pg = sample_unipolar(cfg.n, SampleSeed::new(cfg.seed, trial));
        let (eligible_pairs, unique_sets, all_realized) = realise_trial(&pg, budget);
        json!({
            "trial": trial,
            "c0_size": pg.central().len(),
            "r": trial_r(cfg.n, pg.central().len()),
            "eligible_pairs": eligible_pairs,
            "unique_base_sets": unique_sets,
            "had_eligible": eligible_pairs > 0,
            "all_realized": all_realized,
        })
    });
    let eligible: Vec<&Value> = records
        .iter()
        .filter(|r| r["had_eligible"].as_bool() == Some(true))
        .collect();
    let successes = eligible
        .iter()
        .filter(|r| r["all_realized"].as_bool() == Some(true))
        .count() as u64;
    let mut metrics = base_metrics(cfg);
    metrics.insert("eligible_trials".to_string(), json!(eligible.len()));
    let frac = if eligible.is_empty() {
        Value::Null
    } else {
        json!(successes as f64 / eligible.len() as f64)
    };
    metrics.insert("all_realized_fraction_among_eligible".to_string(), frac);
    let (lo, hi) = wilson_interval(successes, eligible.len() as u64);
    metrics.insert("all_realized_ci95".to_string(), json!([lo, hi]));
    Ok(ExperimentReport {
        experiment: cfg.name.clone(),
        config: cfg.clone(),
        metrics,
        trials: records,
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Returns (eligible pair count, distinct base sets, all targets realized).
fn realise_trial(pg: &PartitionedGraph, budget: usize) -> (u64, u64, bool) {
    let g = pg.graph();
    let parts = pg.parts().len();
    // Candidate base sets: common neighbourhoods of side parts, small enough
    // that a union can stay within budget.
    let mut small: Vec<Vec<usize>> = Vec::new();
    for i in 1..parts {
        let set = pg.part_common_neighborhood(i);
        if set.len() <= budget {
            small.push(set.iter().collect());
        }
    }
    let mut eligible_pairs = 0u64;
    let mut unions: BTreeSet<Vec<usize>> = BTreeSet::new();
    for a in 0..small.len() {
        for b in a..small.len() {
            let mut union = small[a].clone();
            union.extend(&small[b]);
            union.sort_unstable();
            union.dedup();
            if union.len() <= budget {
                eligible_pairs += 1;
                unions.insert(union);
            }
        }
    }
    let unique = unions.len() as u64;
    for base in &unions {
        if !all_targets_realized(pg, g, base) {
            return (eligible_pairs, unique, false);
        }
    }
    (eligible_pairs, unique, true)
}

/// Exact set-and-edge equality against every labelled target on `base`:
/// realized iff the derived-edge masks over the side parts cover all
/// `2^C(|base|,2)` possibilities.
fn all_targets_realized(pg: &PartitionedGraph, g: &crate::graph::Graph, base: &[usize]) -> bool {
    let side_parts = pg.parts().len() - 1;
    if base.len() <= 1 {
        return side_parts >= 1;
    }
    let pairs: Vec<(usize, usize)> = (0..base.len())
        .flat_map(|i| (i + 1..base.len()).map(move |j| (i, j)))
        .collect();
    assert!(pairs.len() <= 63, "base set too large to enumerate targets");
    // For each vertex pair, which side parts contain a common neighbour.
    let mut pair_hits: Vec<HashSet<usize>> = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let mut hits = HashSet::new();
        let (a, b) = (base[i], base[j]);
        let row_a = g.row(a);
        let row_b = g.row(b);
        for (w, (&x, &y)) in row_a.iter().zip(row_b).enumerate() {
            let mut word = x & y;
            while word != 0 {
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                let v = w * 64 + bit;
                let p = pg.part_of(v);
                if p != 0 {
                    hits.insert(p);
                }
            }
        }
        pair_hits.push(hits);
    }
    let want = 1u64 << pairs.len();
    let mut seen: HashSet<u64> = HashSet::new();
    for k in 1..=side_parts {
        let mut mask = 0u64;
        for (p, hits) in pair_hits.iter().enumerate() {
            if hits.contains(&k) {
                mask |= 1 << p;
            }
        }
        seen.insert(mask);
        if seen.len() as u64 == want {
            return true;
        }
    }
    seen.len() as u64 == want
}

// ============================================================================
// dichotomy: frequency of the probe over part pairs
// ============================================================================

/// Per trial, decides whether some pair of side parts yields a derived graph
/// modelling `phi` (the combinatorial form of the probe sentence), and
/// reports the frequency.
pub fn dichotomy_experiment(
    cfg: &ExperimentConfig,
    phi: &Formula,
) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    require_unipolar_model(cfg)?;
    let l = ell(cfg.n)?;
    let cap = cfg.size_cap.unwrap_or(if cfg.n <= FULL_FO_MAX_N {
        usize::MAX
    } else {
        2 * l as usize
    });
    let results: Vec<Result<Value, FormulaError>> = run_trials(cfg, |trial| {
        let pg = sample_unipolar(cfg.n, SampleSeed::new(cfg.seed, trial));
        let holds = probe_holds_combinatorial(&pg, phi, cap)?;
        Ok(json!({
            "trial": trial,
            "c0_size": pg.central().len(),
            "r": trial_r(cfg.n, pg.central().len()),
            "holds": holds,
        }))
    });
    let records: Vec<Value> = results.into_iter().collect::<Result<_, _>>()?;
    let hits = records
        .iter()
        .filter(|r| r["holds"].as_bool() == Some(true))
        .count() as u64;
    let mut metrics = base_metrics(cfg);
    metrics.insert("frequency".to_string(), json!(hits as f64 / cfg.trials as f64));
    let (lo, hi) = wilson_interval(hits, cfg.trials);
    metrics.insert("frequency_ci95".to_string(), json!([lo, hi]));
    metrics.insert(
        "size_cap".to_string(),
        if cap == usize::MAX { Value::Null } else { json!(cap) },
    );
    Ok(ExperimentReport {
        experiment: cfg.name.clone(),
        config: cfg.clone(),
        metrics,
        trials: records,
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    })
}

// ============================================================================
// frequency: how often a sample satisfies a sentence or oracle predicate
// ============================================================================

/// What `run_frequency` evaluates per sample.
pub enum FrequencyTarget {
    /// Full first-order evaluation of a sentence on the sampled graph
    /// (guarded to n <= 300). Sentences with interpreted relation atoms are
    /// bound to the witness oracle tables and require the unipolar model.
    Sentence(Formula),
    /// Ground-truth check: the perfect sample kept its unipolar orientation.
    WitnessOrientation,
}

pub fn run_frequency(
    cfg: &ExperimentConfig,
    target: &FrequencyTarget,
) -> Result<ExperimentReport, ExperimentError> {
    let t0 = Instant::now();
    let needs_tables = match target {
        FrequencyTarget::Sentence(f) => {
            if cfg.n > FULL_FO_MAX_N {
                return Err(ExperimentError::CostGuard {
                    n: cfg.n,
                    limit: FULL_FO_MAX_N,
                });
            }
            !f.relation_names().is_empty()
        }
        FrequencyTarget::WitnessOrientation => {
            if cfg.model != GraphModel::Perfect {
                return Err(ExperimentError::InvalidConfig(
                    "the orientation oracle needs the perfect model".to_string(),
                ));
            }
            false
        }
    };
    if needs_tables {
        require_unipolar_model(cfg)?;
    }
    let results: Vec<Result<Value, EvalError>> = run_trials(cfg, |trial| {
        let seed = SampleSeed::new(cfg.seed, trial);
        let (graph, orientation, witness) = match cfg.model {
            GraphModel::Unipolar => {
                let pg = sample_unipolar(cfg.n, seed);
                (pg.graph().clone(), None, Some(pg))
            }
            GraphModel::Perfect => {
                let s = sample_perfect(cfg.n, seed);
                (s.graph, Some(s.orientation), Some(s.witness))
            }
        };
        let c0_size = witness.as_ref().map(|w| w.central().len()).unwrap_or(0);
        let holds = match target {
            FrequencyTarget::Sentence(f) => {
                let structure = if needs_tables {
                    let pg = witness.as_ref().expect("unipolar model");
                    Structure::new(graph, oracle_tables(pg).to_relations())
                } else {
                    Structure::graph_only(graph)
                };
                evaluate(&structure, f, &Environment::new())?
            }
            FrequencyTarget::WitnessOrientation => orientation == Some(Orientation::Unipolar),
        };
        Ok(json!({
            "trial": trial,
            "c0_size": c0_size,
            "r": trial_r(cfg.n, c0_size),
            "holds": holds,
        }))
    });
    let records: Vec<Value> = results.into_iter().collect::<Result<_, _>>()?;
    let hits = records
        .iter()
        .filter(|r| r["holds"].as_bool() == Some(true))
        .count() as u64;
    let mut metrics = base_metrics(cfg);
    metrics.insert("frequency".to_string(), json!(hits as f64 / cfg.trials as f64));
    let (lo, hi) = wilson_interval(hits, cfg.trials);
    metrics.insert("frequency_ci95".to_string(), json!([lo, hi]));
    Ok(ExperimentReport {
        experiment: cfg.name.clone(),
        config: cfg.clone(),
        metrics,
        trials: records,
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    })
}

// ============================================================================
// dispatch
// ============================================================================

/// Runs the experiment named in the config, parsing sentence texts from it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut cfg = cfg.clone();
    match cfg.name.as_str() {
        "criterion" => validate_criterion(&cfg),
        "rightsize" => validate_rightsize(&cfg),
        "realise" => validate_realise(&cfg),
        "dichotomy" => {
            let text = cfg.phi.clone().ok_or_else(|| {
                ExperimentError::InvalidConfig("dichotomy needs a sentence (--phi)".to_string())
            })?;
            let phi = parse(&text)?;
            cfg.phi = Some(phi.to_string());
            dichotomy_experiment(&cfg, &phi)
        }
        "frequency" => {
            let target = match (&cfg.phi, &cfg.phi0, &cfg.phi1) {
                (Some(text), None, None) => {
                    let phi = parse(text)?;
                    cfg.phi = Some(phi.to_string());
                    FrequencyTarget::Sentence(phi)
                }
                (None, Some(t0), Some(t1)) => {
                    let phi0 = parse(t0)?;
                    let phi1 = parse(t1)?;
                    cfg.phi0 = Some(phi0.to_string());
                    cfg.phi1 = Some(phi1.to_string());
                    // Composed in interpreted mode and bound to the witness
                    // tables; requires the unipolar model.
                    cfg.model = GraphModel::Unipolar;
                    FrequencyTarget::Sentence(build_alternator(&phi0, &phi1, true)?)
                }
                (None, None, None) => {
                    return Err(ExperimentError::InvalidConfig(
                        "frequency needs --phi, or --phi0 with --phi1".to_string(),
                    ))
                }
                _ => {
                    return Err(ExperimentError::InvalidConfig(
                        "pass either --phi alone or both --phi0 and --phi1".to_string(),
                    ))
                }
            };
            run_frequency(&cfg, &target)
        }
        other => Err(ExperimentError::InvalidConfig(format!(
            "unknown experiment {other:?} (expected criterion, rightsize, realise, dichotomy, or frequency)"
        ))),
    }
}

// ============================================================================
// Tests
// ============================================================================
