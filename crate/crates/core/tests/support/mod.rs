//! Shared helpers for the integration suites: random formula generation,
//! set-partition enumeration, random graphs, and a chi-square test.

use perfolab::logic::Formula;
use perfolab::Graph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const VAR_POOL: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
pub const REL_POOL: [(&str, usize); 3] = [("P", 1), ("Q", 2), ("R", 3)];

/// Random formula over adjacency/equality atoms (plus interpreted relation
/// atoms when `allow_rel`), with quantifier/connective depth at most `depth`.
/// `scope` lists the variables available to atoms; when it is empty the
/// generator is forced to quantify first, so an empty initial scope yields a
/// sentence.
pub fn random_formula(
    rng: &mut ChaCha8Rng,
    depth: usize,
    scope: &mut Vec<String>,
    allow_rel: bool,
) -> Formula {
    let quantify = |rng: &mut ChaCha8Rng, scope: &mut Vec<String>, depth: usize| {
        let var = VAR_POOL[rng.random_range(0..VAR_POOL.len())].to_string();
        scope.push(var.clone());
        let body = random_formula(rng, depth.saturating_sub(1), scope, allow_rel);
        scope.pop();
        match rng.random_range(0..3) {
            0 => Formula::forall(var, body),
            1 => Formula::exists(var, body),
            _ => Formula::exists_unique(var, body),
        }
    };
    if scope.is_empty() {
        return quantify(rng, scope, depth.max(1));
    }
    let atom = |rng: &mut ChaCha8Rng, scope: &Vec<String>| {
        let pick = |rng: &mut ChaCha8Rng| scope[rng.random_range(0..scope.len())].clone();
        if allow_rel && rng.random_bool(0.25) {
            let (name, arity) = REL_POOL[rng.random_range(0..REL_POOL.len())];
            let args: Vec<String> = (0..arity).map(|_| pick(rng)).collect();
            Formula::Rel(name.to_string(), args)
        } else if rng.random_bool(0.6) {
            Formula::Adj(pick(rng), pick(rng))
        } else {
            Formula::Eq(pick(rng), pick(rng))
        }
    };
    if depth == 0 {
        return atom(rng, scope);
    }
    match rng.random_range(0..10) {
        0 | 1 => atom(rng, scope),
        2 => Formula::not(random_formula(rng, depth - 1, scope, allow_rel)),
        3 => Formula::and(
            random_formula(rng, depth - 1, scope, allow_rel),
            random_formula(rng, depth - 1, scope, allow_rel),
        ),
        4 => Formula::or(
            random_formula(rng, depth - 1, scope, allow_rel),
            random_formula(rng, depth - 1, scope, allow_rel),
        ),
        5 => Formula::implies(
            random_formula(rng, depth - 1, scope, allow_rel),
            random_formula(rng, depth - 1, scope, allow_rel),
        ),
        6 => Formula::iff(
            random_formula(rng, depth - 1, scope, allow_rel),
            random_formula(rng, depth - 1, scope, allow_rel),
        ),
        _ => quantify(rng, scope, depth),
    }
}

/// Random sentence over adjacency and equality only.
pub fn random_sentence(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    random_formula(rng, depth, &mut Vec::new(), false)
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| rng.random_bool(p))
        .collect();
    Graph::from_edges(n, &edges).unwrap()
}

/// Every labelled graph on `n` vertices, in edge-mask order.
pub fn all_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            Graph::from_edges(n, &edges).unwrap()
        })
        .collect()
}

/// All set partitions of `{0..m-1}` as restricted growth strings.
pub fn enumerate_partitions(m: usize) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, m: usize, max_used: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max_used + 1 {
            prefix.push(b);
            rec(prefix, m, max_used.max(b), out);
            prefix.pop();
        }
    }
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0u32];
    rec(&mut prefix, m, 0, &mut out);
    out
}

/// Upper-tail p-value of the chi-square goodness-of-fit statistic for
/// `observed` counts against `probabilities` (which must sum to one).
pub fn chi_square_p_value(observed: &[u64], probabilities: &[f64]) -> f64 {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probabilities) {
        let expected = p * total as f64;
        assert!(
            expected >= 5.0,
            "chi-square cell too small (expected {expected:.2}); use more samples"
        );
        let d = o as f64 - expected;
        stat += d * d / expected;
    }
    let df = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(df).unwrap();
    1.0 - dist.cdf(stat)
}
