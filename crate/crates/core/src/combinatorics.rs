//! Tower/log-star arithmetic, Bell numbers, uniform set-partition sampling,
//! the central-clique size law, and the `r e^r = s` root solver.

use num_bigint::BigUint;
use rand::Rng;
use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::OnceLock;
use thiserror::Error;

/// Largest `k` for which `tower(k)` is materialized exactly. The next value
/// is a number with 2^65536 bits and cannot exist in memory.
pub const TOWER_EXACT_MAX: u32 = 5;

/// Largest index served by the exact Bell table.
pub const BELL_EXACT_MAX: usize = 1000;

/// Largest `n` for which the central-size law is computed with exact
/// big-integer weights; beyond it a windowed log-space evaluation is used.
pub const CENTRAL_EXACT_MAX: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombinatoricsError {
    #[error("tower({0}) is astronomically large; exact values stop at k = {TOWER_EXACT_MAX}")]
    TowerTooLarge(u32),
    #[error("bell({0}) is outside the exact table (max {BELL_EXACT_MAX}); use log_bell")]
    BellOutOfRange(usize),
    #[error("solve_r requires s > 0, got {0}")]
    NonPositive(f64),
    #[error("central-size law requires n >= 1")]
    EmptyCentralRange,
    #[error("central-size weight window for n = {n} lost mass at the {side} edge (gap {gap:.2} nats)")]
    WindowMass { n: usize, side: &'static str, gap: f64 },
}

// ============================================================================
// Tower function and log-star
// ============================================================================

/// Iterated exponential: `T(0) = 1`, `T(k+1) = 2^T(k)`.
pub fn tower(k: u32) -> Result<BigUint, CombinatoricsError> {
    if k > TOWER_EXACT_MAX {
        return Err(CombinatoricsError::TowerTooLarge(k));
    }
    let mut t = BigUint::from(1u32);
    for _ in 0..k {
        let shift = u64::try_from(&t).expect("tower exponent fits in u64 for k <= 5");
        t = BigUint::from(1u32) << shift;
    }
    Ok(t)
}

fn tower_table() -> &'static [BigUint; 6] {
    static TABLE: OnceLock<[BigUint; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        [
            tower(0).unwrap(),
            tower(1).unwrap(),
            tower(2).unwrap(),
            tower(3).unwrap(),
            tower(4).unwrap(),
            tower(5).unwrap(),
        ]
    })
}

/// Least `k` with `T(k) >= x`. Any representable integer is below `T(6)`
/// (which has 2^65536 bits), so the result never exceeds 6.
pub fn log_star(x: &BigUint) -> u32 {
    for (k, t) in tower_table().iter().enumerate() {
        if t >= x {
            return k as u32;
        }
    }
    6
}

/// Convenience wrapper for machine-sized inputs.
pub fn log_star_u64(x: u64) -> u32 {
    log_star(&BigUint::from(x))
}

// ============================================================================
// Bell numbers
// ============================================================================

/// Exact Bell numbers `B(0..=max)`, computed with the Bell triangle.
pub struct BellTable {
    values: Vec<BigUint>,
}

impl BellTable {
    pub fn new(max: usize) -> Self {
        let mut values = Vec::with_capacity(max + 1);
        values.push(BigUint::from(1u32));
        // Row i starts with the previous row's last entry, which is B(i).
        let mut row = vec![BigUint::from(1u32)];
        for _ in 0..max {
            let mut next = Vec::with_capacity(row.len() + 1);
            next.push(row.last().unwrap().clone());
            for prev in &row {
                let last: &BigUint = next.last().unwrap();
                next.push(last + prev);
            }
            values.push(next[0].clone());
            row = next;
        }
        BellTable { values }
    }

    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<&BigUint> {
        self.values.get(k)
    }
}

fn bell_table() -> &'static BellTable {
    static TABLE: OnceLock<BellTable> = OnceLock::new();
    TABLE.get_or_init(|| BellTable::new(BELL_EXACT_MAX))
}

/// Number of set partitions of an `n`-set, exactly, for `n <= 1000`.
pub fn bell(n: usize) -> Result<BigUint, CombinatoricsError> {
    bell_table()
        .get(n)
        .cloned()
        .ok_or(CombinatoricsError::BellOutOfRange(n))
}

/// `ln B(n)` for any `n`, via the Dobinski sum
/// `B(n) = e^{-1} sum_{u >= 1} u^n / u!` evaluated in log space.
pub fn log_bell(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let terms = dobinski_terms(n);
    log_sum_exp(&terms) - 1.0
}

/// Log-weights `n ln u - ln u!` for `u = 1, 2, ...`, truncated once the
/// terms have fallen 45 nats below the maximum (relative tail mass far
/// below 1e-12).
fn dobinski_terms(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut terms = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut u = 1u64;
    loop {
        let t = nf * (u as f64).ln() - ln_gamma(u as f64 + 1.0);
        terms.push(t);
        if t > best {
            best = t;
        } else if t < best - 45.0 {
            break;
        }
        u += 1;
    }
    terms
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `ln` of a big integer, exact to f64 precision, without intermediate
/// overflow: uses the top 64 bits as mantissa plus a power-of-two exponent.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return (u64::try_from(x).unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    (u64::try_from(&top).unwrap() as f64).ln() + shift as f64 * LN_2
}

// ============================================================================
// r e^r = s
// ============================================================================

/// The unique non-negative root of `r e^r = s` for `s > 0`, found by
/// bisection with a Newton polish; the residual satisfies
/// `|r e^r - s| <= 1e-9 * max(1, s)`.
pub fn solve_r(s: f64) -> Result<f64, CombinatoricsError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(CombinatoricsError::NonPositive(s));
    }
    let f = |r: f64| r * r.exp() - s;
    let mut lo = 0.0f64;
    let mut hi = s.ln().max(1.0);
    debug_assert!(f(hi) >= 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Newton steps on g(r) = ln r + r - ln s, clamped to the bracket.
    let mut r = 0.5 * (lo + hi);
    if r > 0.0 {
        let ln_s = s.ln();
        for _ in 0..4 {
            let g = r.ln() + r - ln_s;
            let step = g / (1.0 / r + 1.0);
            let next = (r - step).clamp(lo, hi);
            if next == r {
                break;
            }
            r = next;
        }
    }
    debug_assert!(f(r).abs() <= 1e-9 * s.max(1.0), "residual too large at s={s}");
    Ok(r)
}

// ============================================================================
// Set partitions
// ============================================================================

/// Set partition of `{0..m-1}` in canonical form: `assignment[e]` is the
/// block index of element `e`, blocks numbered by order of first appearance
/// (a restricted growth string).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    assignment: Vec<u32>,
    block_count: u32,
}

impl SetPartition {
    /// Canonicalizes an arbitrary block labelling.
    pub fn from_assignment(raw: &[u32]) -> SetPartition {
        let mut relabel: HashMap<u32, u32> = HashMap::new();
        let mut assignment = Vec::with_capacity(raw.len());
        for &b in raw {
            let next = relabel.len() as u32;
            let id = *relabel.entry(b).or_insert(next);
            assignment.push(id);
        }
        SetPartition {
            assignment,
            block_count: relabel.len() as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.block_count as usize
    }

    pub fn block_of(&self, e: usize) -> usize {
        self.assignment[e] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.block_count as usize];
        for (e, &b) in self.assignment.iter().enumerate() {
            blocks[b as usize].push(e);
        }
        blocks
    }
}

/// Samples a uniformly random set partition of `{0..m-1}` with the urn
/// method: draw the urn count `U` with probability proportional to
/// `U^m / U!`, drop each element into a uniform urn, and keep the non-empty
/// urns. Marginalizing over `U` makes every partition equally likely.
pub fn sample_set_partition<R: Rng + ?Sized>(m: usize, rng: &mut R) -> SetPartition {
    if m == 0 {
        return SetPartition {
            assignment: Vec::new(),
            block_count: 0,
        };
    }
    let urns = sample_urn_count(m, rng);
    let mut relabel: HashMap<u64, u32> = HashMap::new();
    let mut assignment = Vec::with_capacity(m);
    for _ in 0..m {
        let urn = rng.random_range(0..urns);
        let next = relabel.len() as u32;
        let id = *relabel.entry(urn).or_insert(next);
        assignment.push(id);
    }
    SetPartition {
        assignment,
        block_count: relabel.len() as u32,
    }
}

fn sample_urn_count<R: Rng + ?Sized>(m: usize, rng: &mut R) -> u64 {
    let terms = dobinski_terms(m);
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &t) in terms.iter().enumerate() {
        acc += (t - max).exp();
        if acc >= target {
            return i as u64 + 1;
        }
    }
    terms.len() as u64
}

// ============================================================================
// Central-clique size law
// ============================================================================

/// Probability mass function of the central-clique size: entry `m - 1`
/// carries the probability of size `m`, proportional to
/// `C(n, m) * 2^(m (n - m)) * B(n - m)`.
///
/// Exact big-integer weights are used for `n <= 64`. For larger `n` the
/// weights are evaluated in log space on the window
/// `m ∈ n/2 ± (10 ln n + 20)`, checking that the dropped tails sit at least
/// 40 nats below the peak.
pub fn central_size_pmf(n: usize) -> Result<Vec<f64>, CombinatoricsError> {
    if n == 0 {
        return Err(CombinatoricsError::EmptyCentralRange);
    }
    if n <= CENTRAL_EXACT_MAX {
        central_size_pmf_exact(n)
    } else {
        central_size_pmf_log(n)
    }
}

fn central_size_pmf_exact(n: usize) -> Result<Vec<f64>, CombinatoricsError> {
    let bells = bell_table();
    let weights: Vec<BigUint> = (1..=n)
        .map(|m| {
            binomial(n, m) * (BigUint::from(1u32) << (m * (n - m))) * bells.get(n - m).unwrap()
        })
        .collect();
    let total: BigUint = weights.iter().sum();
    Ok(weights.iter().map(|w| big_ratio(w, &total)).collect())
}

/// `w / total` as f64, computed as `(w << 64) / total` to avoid overflow.
fn big_ratio(w: &BigUint, total: &BigUint) -> f64 {
    let scaled = (w << 64u32) / total;
    let lo = u128::try_from(&scaled).expect("ratio fits in 128 bits") as f64;
    lo / 2f64.powi(64)
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub(crate) fn central_window(n: usize) -> (usize, usize) {
    let half = (10.0 * (n as f64).ln() + 20.0).ceil() as usize;
    let center = n / 2;
    (center.saturating_sub(half).max(1), (center + half).min(n))
}

fn central_log_weight(n: usize, m: usize) -> f64 {
    let nf = n as f64;
    let mf = m as f64;
    let ln_binom = ln_gamma(nf + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(nf - mf + 1.0);
    ln_binom + mf * (nf - mf) * LN_2 + log_bell(n - m)
}

fn central_size_pmf_log(n: usize) -> Result<Vec<f64>, CombinatoricsError> {
    let (lo, hi) = central_window(n);
    let log_weights: Vec<f64> = (lo..=hi).map(|m| central_log_weight(n, m)).collect();
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo > 1 {
        let gap = max - log_weights[0];
        if gap < 40.0 {
            return Err(CombinatoricsError::WindowMass { n, side: "lower", gap });
        }
    }
    if hi < n {
        let gap = max - log_weights[log_weights.len() - 1];
        if gap < 40.0 {
            return Err(CombinatoricsError::WindowMass { n, side: "upper", gap });
        }
    }
    let total: f64 = log_weights.iter().map(|&t| (t - max).exp()).sum();
    let mut pmf = vec![0.0; n];
    for (i, &t) in log_weights.iter().enumerate() {
        pmf[lo + i - 1] = (t - max).exp() / total;
    }
    Ok(pmf)
}

/// Draws a central-clique size `m ∈ {1..n}` from [`central_size_pmf`].
pub fn sample_central_size<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<usize, CombinatoricsError> {
    let pmf = central_size_pmf(n)?;
    let target = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if acc >= target {
            return Ok(i + 1);
        }
    }
    Ok(pmf.len())
}

#[cfg(test)]
pub(crate) fn central_size_pmf_log_for_tests(n: usize) -> Result<Vec<f64>, CombinatoricsError> {
    central_size_pmf_log(n)
}

// ============================================================================
// Tests
// ============================================================================
