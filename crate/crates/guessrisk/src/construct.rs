//! Strategy construction and the brute-force optimum.
//!
//! [`build_achievable_strategy`] realizes a cost close to optimal: it cuts
//! the sorted alphabet into consecutive blocks of ⌊2^D⌋ symbols, keeps the
//! blocks needed to cover mass 1-ε with certainty, stops with the exact
//! probability that makes the error probability equal ε on the boundary
//! block, and always stops afterwards.
//!
//! [`brute_force_optimum`] searches all ordered set partitions of the
//! alphabet into blocks of at most ⌊2^D⌋ symbols. Restricting each step's
//! reconstruction to be uniform on its block loses no generality: a
//! reconstruction can give mass at least 2^-D to at most ⌊2^D⌋ symbols, so a
//! step can cover at most ⌊2^D⌋ symbols no matter how its mass is shaped,
//! and covering them uniformly is one admissible way to do it. Cost depends
//! only on which step resolves each symbol, so optimizing over uniform-block
//! partitions reaches the same optimum.

use std::ops::Range;

use serde::Serialize;

use crate::dist::{kahan_sum, Kahan, Pmf};
use crate::entropy::truncate_tail;
use crate::error::{Error, Result};
use crate::guessing::{floor_exp, GuessingStrategy};

/// Largest alphabet the partition-enumeration oracle accepts.
pub const ORACLE_MAX_SYMBOLS: usize = 10;

/// The block layout of the constructed strategy: consecutive index ranges
/// over the sorted alphabet, split at the smoothing boundary `i*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Blocks {
    /// Blocks covering the kept prefix `0..i*`; all of size ⌊2^D⌋ except
    /// possibly the last.
    pub kept: Vec<Range<usize>>,
    /// Blocks covering the discarded tail `i*..M`.
    pub tail: Vec<Range<usize>>,
}

impl Blocks {
    /// Every block in guessing order.
    pub fn all(&self) -> impl Iterator<Item = &Range<usize>> {
        self.kept.iter().chain(self.tail.iter())
    }
}

fn chop(range: Range<usize>, width: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = range.start;
    while start < range.end {
        let end = (start + width).min(range.end);
        out.push(start..end);
        start = end;
    }
    out
}

/// Cut the sorted alphabet into the guessing blocks used by
/// [`build_achievable_strategy`].
pub fn partition_blocks(p: &Pmf, d_level: f64, eps: f64) -> Result<Blocks> {
    if d_level < 0.0 || !d_level.is_finite() {
        return Err(Error::InvalidDistortion(d_level));
    }
    let width = floor_exp(d_level) as usize;
    let (i_star, _) = truncate_tail(p, eps)?;
    Ok(Blocks {
        kept: chop(0..i_star, width),
        tail: chop(i_star..p.len(), width),
    })
}

/// Build the block strategy: uniform reconstructions on consecutive blocks,
/// no stopping before the boundary block, a stop probability on the boundary
/// block calibrated so the evaluated error probability equals ε exactly, and
/// certain stopping on the tail blocks.
pub fn build_achievable_strategy(
    p: &Pmf,
    d_level: f64,
    eps: f64,
) -> Result<GuessingStrategy> {
    let blocks = partition_blocks(p, d_level, eps)?;
    let (_, q) = truncate_tail(p, eps)?;
    let m = p.len();
    let k = blocks.kept.len();

    let mut reconstructions = Vec::with_capacity(k + blocks.tail.len());
    for block in blocks.all() {
        let mut r = vec![0.0; m];
        let w = 1.0 / block.len() as f64;
        for x in block.clone() {
            r[x] = w;
        }
        reconstructions.push(r);
    }

    let boundary = blocks.kept.last().expect("at least one kept block");
    let kept_mass = kahan_sum(boundary.clone().map(|x| p.get(x)));
    let retained = kahan_sum(boundary.clone().map(|x| q.values()[x]));
    // PMF entries are strictly positive, so the boundary block carries mass.
    assert!(kept_mass > 0.0);
    let mut stop_probs = vec![0.0; reconstructions.len()];
    stop_probs[k - 1] = (1.0 - retained / kept_mass).clamp(0.0, 1.0);
    for pi in stop_probs.iter_mut().skip(k) {
        *pi = 1.0;
    }
    GuessingStrategy::new(reconstructions, stop_probs)
}

/// The cheapest monotone survival schedule for a fixed guess ordering:
/// minimizes Σ λ_i pz(i) i^ρ subject to Σ λ_i pz(i) ≥ 1-ε and
/// 1 ≥ λ_1 ≥ ... ≥ λ_N ≥ 0.
///
/// Because the step weights i^ρ strictly increase, moving retained mass to a
/// later step only costs more; the greedy schedule keeps full survival while
/// the cumulative mass is below 1-ε, takes a fractional step at the
/// boundary, and drops to zero after. The returned schedule retains mass
/// exactly 1-ε unless every λ is 1.
pub fn optimal_survival(pz: &[f64], rho: f64, eps: f64) -> Result<Vec<f64>> {
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidRho(rho));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let target = 1.0 - eps;
    let total = kahan_sum(pz.iter().copied());
    if total + 1e-9 < target {
        return Err(Error::InfeasibleMass {
            total,
            required: target,
        });
    }
    let mut out = vec![0.0; pz.len()];
    let mut cum = Kahan::default();
    for (i, &mass) in pz.iter().enumerate() {
        let before = cum.total();
        cum.add(mass);
        if cum.total() <= target + 1e-12 {
            out[i] = 1.0;
        } else {
            let need = target - before;
            out[i] = if need > 0.0 { (need / mass).min(1.0) } else { 0.0 };
        }
    }
    Ok(out)
}

fn threshold_cost(pz: &[f64], survival: &[f64], rho: f64) -> f64 {
    survival
        .iter()
        .zip(pz)
        .enumerate()
        .map(|(i, (l, q))| l * q * ((i + 1) as f64).powf(rho))
        .sum()
}

/// Outcome of the exhaustive search over ordered block partitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// The minimal expected cost over all admissible strategies.
    pub c_star: f64,
    /// The ordered blocks (symbol indices into the sorted PMF) attaining it;
    /// lexicographically first among ties.
    pub best_partition: Vec<Vec<usize>>,
    /// The optimal survival schedule for that partition.
    pub best_survival: Vec<f64>,
}

struct PartitionSearch<'a> {
    probs: &'a [f64],
    width: usize,
    target: f64,
    step_weight: Vec<f64>,
    best_cost: f64,
    best: Vec<Vec<usize>>,
    current: Vec<Vec<usize>>,
}

impl PartitionSearch<'_> {
    fn run(&mut self) {
        let full = (1u16 << self.probs.len()) - 1;
        self.descend(full, 0, 0.0, 0.0);
    }

    /// Extend the partition by one more block chosen from `remaining`.
    fn descend(&mut self, remaining: u16, steps: usize, consumed: f64, cost: f64) {
        if remaining == 0 {
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best = self.current.clone();
            }
            return;
        }
        // Any mass still needed will be retained at step weight at least
        // the next one, so this bound is valid for every completion.
        let need = (self.target - consumed).max(0.0);
        if cost + need * self.step_weight[steps] >= self.best_cost {
            return;
        }
        let mut block = Vec::with_capacity(self.width);
        self.grow_block(remaining, 0, &mut block, 0.0, steps, consumed, cost);
    }

    /// Enumerate candidate blocks in lexicographic order of their sorted
    /// symbol lists: each block is emitted as soon as it is nonempty, then
    /// extended by every later symbol still available.
    #[allow(clippy::too_many_arguments)]
    fn grow_block(
        &mut self,
        remaining: u16,
        from: usize,
        block: &mut Vec<usize>,
        block_mass: f64,
        steps: usize,
        consumed: f64,
        cost: f64,
    ) {
        if block.len() == self.width {
            return;
        }
        for idx in from..self.probs.len() {
            if remaining & (1 << idx) == 0 {
                continue;
            }
            // `remaining` excludes the elements already in `block`, so
            // removing `idx` leaves exactly the symbols for later steps.
            block.push(idx);
            let mass = block_mass + self.probs[idx];
            let take = (self.target - consumed).clamp(0.0, mass);
            self.current.push(block.clone());
            self.descend(
                remaining & !(1 << idx),
                steps + 1,
                consumed + take,
                cost + take * self.step_weight[steps],
            );
            self.current.pop();
            self.grow_block(remaining & !(1 << idx), idx + 1, block, mass, steps, consumed, cost);
            block.pop();
        }
    }
}

fn validate_oracle_inputs(p: &Pmf, d_level: f64, rho: f64, eps: f64) -> Result<usize> {
    if d_level < 0.0 || !d_level.is_finite() {
        return Err(Error::InvalidDistortion(d_level));
    }
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidRho(rho));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let m = p.len();
    if m > ORACLE_MAX_SYMBOLS {
        return Err(Error::AlphabetTooLarge {
            m,
            cap: ORACLE_MAX_SYMBOLS,
        });
    }
    Ok(m)
}

fn finish_oracle(p: &Pmf, rho: f64, eps: f64, best: Vec<Vec<usize>>) -> Result<OracleResult> {
    let pz: Vec<f64> = best
        .iter()
        .map(|block| kahan_sum(block.iter().map(|&x| p.get(x))))
        .collect();
    let survival = optimal_survival(&pz, rho, eps)?;
    Ok(OracleResult {
        c_star: threshold_cost(&pz, &survival, rho),
        best_partition: best,
        best_survival: survival,
    })
}

/// Exhaustive minimization of the expected cost over all ordered set
/// partitions of the sorted alphabet into blocks of at most ⌊2^D⌋ symbols,
/// each evaluated under its optimal survival schedule. Ties resolve to the
/// lexicographically first partition. Exponential in M; capped at
/// [`ORACLE_MAX_SYMBOLS`].
pub fn brute_force_optimum(p: &Pmf, d_level: f64, rho: f64, eps: f64) -> Result<OracleResult> {
    let m = validate_oracle_inputs(p, d_level, rho, eps)?;
    let mut search = PartitionSearch {
        probs: p.probs(),
        width: (floor_exp(d_level) as usize).min(m),
        target: 1.0 - eps,
        step_weight: (1..=m).map(|i| (i as f64).powf(rho)).collect(),
        best_cost: f64::INFINITY,
        best: Vec::new(),
        current: Vec::new(),
    };
    search.run();
    finish_oracle(p, rho, eps, search.best)
}

/// The same minimization restricted to partitions whose blocks are
/// consecutive ranges of the sorted alphabet. Exchange arguments show moving
/// larger masses to earlier steps never hurts, so this much cheaper search
/// reaches the same optimum; it exists to cross-check the full oracle.
pub fn brute_force_optimum_contiguous(
    p: &Pmf,
    d_level: f64,
    rho: f64,
    eps: f64,
) -> Result<OracleResult> {
    let m = validate_oracle_inputs(p, d_level, rho, eps)?;
    let width = (floor_exp(d_level) as usize).min(m);
    let target = 1.0 - eps;
    let step_weight: Vec<f64> = (1..=m).map(|i| (i as f64).powf(rho)).collect();

    let mut best_cost = f64::INFINITY;
    let mut best: Vec<usize> = Vec::new(); // block sizes
    let mut sizes: Vec<usize> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn descend(
        probs: &[f64],
        width: usize,
        target: f64,
        step_weight: &[f64],
        start: usize,
        consumed: f64,
        cost: f64,
        sizes: &mut Vec<usize>,
        best_cost: &mut f64,
        best: &mut Vec<usize>,
    ) {
        if start == probs.len() {
            if cost < *best_cost {
                *best_cost = cost;
                *best = sizes.clone();
            }
            return;
        }
        let need = (target - consumed).max(0.0);
        if cost + need * step_weight[sizes.len()] >= *best_cost {
            return;
        }
        let mut mass = 0.0;
        for size in 1..=width.min(probs.len() - start) {
            mass += probs[start + size - 1];
            let take = (target - consumed).clamp(0.0, mass);
            sizes.push(size);
            descend(
                probs,
                width,
                target,
                step_weight,
                start + size,
                consumed + take,
                cost + take * step_weight[sizes.len() - 1],
                sizes,
                best_cost,
                best,
            );
            sizes.pop();
        }
    }

    descend(
        p.probs(),
        width,
        target,
        &step_weight,
        0,
        0.0,
        0.0,
        &mut sizes,
        &mut best_cost,
        &mut best,
    );

    let mut partition = Vec::with_capacity(best.len());
    let mut start = 0;
    for size in best {
        partition.push((start..start + size).collect());
        start += size;
    }
    finish_oracle(p, rho, eps, partition)
}
