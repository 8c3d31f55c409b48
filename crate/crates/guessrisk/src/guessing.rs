//! Soft guessing strategies with stopping.
//!
//! A strategy is a finite list of soft reconstructions (probability vectors
//! over the source alphabet) together with per-step stop probabilities. When
//! the source emits `x`, the guesser walks the reconstructions in order; at
//! step `i` it first stops with probability `π_i` (declaring an error), and
//! otherwise asks whether the log-loss of `x` under reconstruction `i` is
//! within the distortion budget `D`. The first step whose reconstruction is
//! within budget succeeds at cost `i^ρ` (1-based).
//!
//! An errored trial contributes no cost: the stop event is absorbing and the
//! expected cost counts successful resolutions only, so error handling never
//! needs a guess index of its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Pmf;
use crate::error::{Error, Result};

/// Slack used when comparing a log-loss against the distortion level, so
/// block constructions that sit exactly on the budget (log2 of an integer
/// power) are not excluded by rounding.
pub const DISTORTION_SLACK: f64 = 1e-9;

/// Log-loss of symbol `x` under a soft reconstruction, in bits:
/// log2(1 / reconstruction[x]), and +inf on zero mass.
pub fn log_loss(x: usize, reconstruction: &[f64]) -> f64 {
    let q = reconstruction[x];
    if q > 0.0 {
        -q.log2()
    } else {
        f64::INFINITY
    }
}

/// Floor of 2^d for d >= 0, nudged so exactly representable powers are not
/// rounded down (e.g. d = log2(3) yields 3, not 2).
pub fn floor_exp(d: f64) -> u64 {
    debug_assert!(d >= 0.0, "distortion level must be nonnegative");
    debug_assert!(d < 63.0, "floor_exp overflows u64 beyond d = 63");
    (d.exp2() + 1e-9).floor() as u64
}

#[derive(Deserialize)]
struct RawStrategy {
    reconstructions: Vec<Vec<f64>>,
    stop_probs: Vec<f64>,
}

/// A guessing strategy: `N` soft reconstructions over an alphabet of `M`
/// symbols plus `N` stop probabilities, with `N <= M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy")]
pub struct GuessingStrategy {
    reconstructions: Vec<Vec<f64>>,
    stop_probs: Vec<f64>,
}

impl TryFrom<RawStrategy> for GuessingStrategy {
    type Error = Error;

    fn try_from(raw: RawStrategy) -> Result<Self> {
        GuessingStrategy::new(raw.reconstructions, raw.stop_probs)
    }
}

impl GuessingStrategy {
    pub fn new(reconstructions: Vec<Vec<f64>>, stop_probs: Vec<f64>) -> Result<Self> {
        if reconstructions.is_empty() {
            return Err(Error::InvalidStrategy("no reconstructions".into()));
        }
        if reconstructions.len() != stop_probs.len() {
            return Err(Error::InvalidStrategy(format!(
                "{} reconstructions but {} stop probabilities",
                reconstructions.len(),
                stop_probs.len()
            )));
        }
        let m = reconstructions[0].len();
        if m == 0 {
            return Err(Error::InvalidStrategy("empty reconstruction".into()));
        }
        if reconstructions.len() > m {
            return Err(Error::InvalidStrategy(format!(
                "{} guesses over an alphabet of {} symbols (N must be <= M)",
                reconstructions.len(),
                m
            )));
        }
        for (i, r) in reconstructions.iter().enumerate() {
            if r.len() != m {
                return Err(Error::InvalidStrategy(format!(
                    "reconstruction {i} has length {}, expected {m}",
                    r.len()
                )));
            }
            if r.iter().any(|&q| q < 0.0 || !q.is_finite()) {
                return Err(Error::InvalidStrategy(format!(
                    "reconstruction {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > crate::dist::MASS_TOLERANCE {
                return Err(Error::InvalidStrategy(format!(
                    "reconstruction {i} sums to {sum}"
                )));
            }
        }
        for (i, &pi) in stop_probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&pi) || !pi.is_finite() {
                return Err(Error::InvalidStrategy(format!(
                    "stop probability {i} is {pi}, outside [0,1]"
                )));
            }
        }
        Ok(GuessingStrategy {
            reconstructions,
            stop_probs,
        })
    }

    /// The point-mass strategy guessing symbols in order with no stopping:
    /// admissible at every distortion level.
    pub fn identity(m: usize) -> Self {
        let reconstructions = (0..m)
            .map(|j| {
                let mut r = vec![0.0; m];
                r[j] = 1.0;
                r
            })
            .collect();
        GuessingStrategy {
            reconstructions,
            stop_probs: vec![0.0; m],
        }
    }

    /// Number of guesses N.
    pub fn len(&self) -> usize {
        self.reconstructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reconstructions.is_empty()
    }

    /// Alphabet size M the reconstructions are over.
    pub fn symbol_count(&self) -> usize {
        self.reconstructions[0].len()
    }

    pub fn reconstructions(&self) -> &[Vec<f64>] {
        &self.reconstructions
    }

    pub fn stop_probs(&self) -> &[f64] {
        &self.stop_probs
    }

    /// Survival probabilities λ_i = prod_{j<=i} (1 - π_j).
    pub fn survival(&self) -> Vec<f64> {
        let mut acc = 1.0;
        self.stop_probs
            .iter()
            .map(|&pi| {
                acc *= 1.0 - pi;
                acc
            })
            .collect()
    }

    /// First guess index (0-based) whose reconstruction is within the
    /// distortion budget for symbol `x`, if any.
    fn first_cover(&self, x: usize, d_level: f64) -> Option<usize> {
        self.reconstructions
            .iter()
            .position(|r| log_loss(x, r) <= d_level + DISTORTION_SLACK)
    }
}

/// First symbol not covered by any reconstruction at level `d_level`, or
/// `None` when the strategy is admissible for `p`. Symbols beyond the
/// strategy's alphabet are uncovered by definition.
pub fn admissibility_witness(s: &GuessingStrategy, p: &Pmf, d_level: f64) -> Option<usize> {
    (0..p.len()).find(|&x| x >= s.symbol_count() || s.first_cover(x, d_level).is_none())
}

/// Whether every symbol of `p` has some reconstruction within distortion
/// `d_level`.
pub fn is_admissible(s: &GuessingStrategy, p: &Pmf, d_level: f64) -> bool {
    admissibility_witness(s, p, d_level).is_none()
}

/// Exact evaluation of an admissible strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyEvaluation {
    /// 1-based guess number G(x) for each symbol, matching the i^ρ cost
    /// weight of the step that resolves it.
    pub guess_index: Vec<usize>,
    /// Distribution of the resolving guess number (index i holds guess i+1).
    pub pz: Vec<f64>,
    /// Survival probabilities λ_i.
    pub survival: Vec<f64>,
    /// Probability of stopping before resolution.
    pub error_prob: f64,
    /// Expected cost Σ λ_i P_Z(i) i^ρ.
    pub expected_cost: f64,
}

fn guess_map(s: &GuessingStrategy, p: &Pmf, d_level: f64) -> Result<Vec<usize>> {
    if s.symbol_count() != p.len() {
        return Err(Error::DimensionMismatch {
            strategy: s.symbol_count(),
            dist: p.len(),
        });
    }
    (0..p.len())
        .map(|x| {
            s.first_cover(x, d_level)
                .ok_or(Error::Inadmissible { witness: x, d_level })
        })
        .collect()
}

/// Compute the induced guessing function, the distribution of the resolving
/// step, the survival chain, the exact error probability, and the expected
/// cost of an admissible strategy.
pub fn evaluate(s: &GuessingStrategy, p: &Pmf, d_level: f64, rho: f64) -> Result<StrategyEvaluation> {
    if d_level < 0.0 || !d_level.is_finite() {
        return Err(Error::InvalidDistortion(d_level));
    }
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidRho(rho));
    }
    let guesses = guess_map(s, p, d_level)?;
    let mut pz = vec![0.0; s.len()];
    for (x, &g) in guesses.iter().enumerate() {
        pz[g] += p.get(x);
    }
    let survival = s.survival();
    let coverage: f64 = survival.iter().zip(&pz).map(|(l, q)| l * q).sum();
    let expected_cost = survival
        .iter()
        .zip(&pz)
        .enumerate()
        .map(|(i, (l, q))| l * q * ((i + 1) as f64).powf(rho))
        .sum();
    Ok(StrategyEvaluation {
        guess_index: guesses.iter().map(|&g| g + 1).collect(),
        pz,
        survival,
        error_prob: (1.0 - coverage).clamp(0.0, 1.0),
        expected_cost,
    })
}

/// Empirical estimates from a seeded Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: u64,
    pub est_error_prob: f64,
    pub est_cost: f64,
    /// (binomial standard error of the error probability,
    ///  sample standard error of the cost).
    pub std_errors: (f64, f64),
    pub seed: u64,
}

/// Number of independently seeded trial chunks. Fixed so the merged report
/// is identical no matter how many worker threads actually run.
const SIM_CHUNKS: u64 = 64;

/// Monte Carlo simulation of the guessing process: samples the source and
/// one stop coin per step, counting errors and realized costs.
///
/// Trials are split into [`SIM_CHUNKS`] fixed chunks, each driven by its own
/// stream of a counter-based generator derived from `seed`, and merged in
/// chunk order; the report is a deterministic function of `(seed, trials)`.
pub fn simulate(
    s: &GuessingStrategy,
    p: &Pmf,
    d_level: f64,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if d_level < 0.0 || !d_level.is_finite() {
        return Err(Error::InvalidDistortion(d_level));
    }
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidRho(rho));
    }
    let guesses = guess_map(s, p, d_level)?;
    let mut cumulative = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &x in p.probs() {
        acc += x;
        cumulative.push(acc);
    }
    let stop_probs = s.stop_probs();

    let chunk_sizes: Vec<u64> = (0..SIM_CHUNKS)
        .map(|i| trials / SIM_CHUNKS + u64::from(i < trials % SIM_CHUNKS))
        .collect();
    let partials: Vec<(u64, f64, f64)> = chunk_sizes
        .par_iter()
        .enumerate()
        .map(|(chunk, &size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let mut errors = 0u64;
            let mut cost_sum = 0.0;
            let mut cost_sq = 0.0;
            for _ in 0..size {
                let u: f64 = rng.random();
                let x = cumulative.iter().position(|&c| u < c).unwrap_or(p.len() - 1);
                let resolve = guesses[x];
                let mut cost = 0.0;
                for (j, &pi) in stop_probs.iter().enumerate().take(resolve + 1) {
                    let coin: f64 = rng.random();
                    if coin < pi {
                        errors += 1;
                        break;
                    }
                    if j == resolve {
                        cost = ((j + 1) as f64).powf(rho);
                    }
                }
                cost_sum += cost;
                cost_sq += cost * cost;
            }
            (errors, cost_sum, cost_sq)
        })
        .collect();

    let mut errors = 0u64;
    let mut cost_sum = 0.0;
    let mut cost_sq = 0.0;
    for (e, c, c2) in partials {
        errors += e;
        cost_sum += c;
        cost_sq += c2;
    }
    let n = trials as f64;
    let est_error_prob = errors as f64 / n;
    let est_cost = cost_sum / n;
    let se_error = (est_error_prob * (1.0 - est_error_prob) / n).max(0.0).sqrt();
    let se_cost = if trials >= 2 {
        let var = ((cost_sq - n * est_cost * est_cost) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SimReport {
        trials,
        est_error_prob,
        est_cost,
        std_errors: (se_error, se_cost),
        seed,
    })
}
