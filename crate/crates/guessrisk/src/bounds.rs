//! One-shot bounds on the optimal guessing cost and second-order asymptotic
//! evaluation for memoryless sources.
//!
//! With α = 1/(1+ρ) and B = ⌊2^D⌋, the optimal expected cost C* at error
//! level ε is bracketed by
//!
//! ```text
//! (1 + log2 M)^-ρ · 2^(ρ H_α^ε(X) - (1+ρ) log2 B)  ≤  C*  ≤
//! 1 - ε + 2^ρ · 2^(ρ H_α^ε(X) - ρ log2 B)
//! ```
//!
//! The asymptotic evaluators substitute the blocklength-n expansion
//! `H_α^ε(X^n) ≈ nH - sqrt(nV)·Φ⁻¹(ε) - log2(n)/(2(1-α))` into the same
//! bracket. The additive constant of that expansion is unknown and dropped
//! here, so the n-letter numbers are trend data, not certified bounds, and
//! are reported in log2 (bits) because the raw values overflow doubles long
//! before interesting blocklengths.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::Pmf;
use crate::entropy::{
    inv_gaussian_cdf, smooth_renyi_entropy, smooth_renyi_product, source_stats,
};
use crate::error::{Error, Result};
use crate::guessing::floor_exp;

/// Varentropy below this is treated as zero (expansion hypothesis V > 0).
const VARENTROPY_FLOOR: f64 = 1e-12;

fn check_params(d_level: f64, rho: f64, eps: f64) -> Result<()> {
    if d_level < 0.0 || !d_level.is_finite() {
        return Err(Error::InvalidDistortion(d_level));
    }
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidRho(rho));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }
    Ok(())
}

/// Lower bound on the optimal expected cost:
/// (1 + log2 M)^-ρ · 2^(ρ H^ε_{1/(1+ρ)}(X) - (1+ρ) log2 ⌊2^D⌋).
pub fn cost_lower_bound(p: &Pmf, d_level: f64, rho: f64, eps: f64) -> Result<f64> {
    check_params(d_level, rho, eps)?;
    let alpha = 1.0 / (1.0 + rho);
    let h = smooth_renyi_entropy(p, alpha, eps)?;
    let log_b = (floor_exp(d_level) as f64).log2();
    let exponent = rho * h - (1.0 + rho) * log_b;
    Ok((1.0 + (p.len() as f64).log2()).powf(-rho) * exponent.exp2())
}

/// Upper bound on the optimal expected cost:
/// 1 - ε + 2^ρ · 2^(ρ H^ε_{1/(1+ρ)}(X) - ρ log2 ⌊2^D⌋).
pub fn cost_upper_bound(p: &Pmf, d_level: f64, rho: f64, eps: f64) -> Result<f64> {
    check_params(d_level, rho, eps)?;
    let alpha = 1.0 / (1.0 + rho);
    let h = smooth_renyi_entropy(p, alpha, eps)?;
    let log_b = (floor_exp(d_level) as f64).log2();
    Ok(1.0 - eps + (rho + rho * h - rho * log_b).exp2())
}

/// Parameters a bounds report was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub m: usize,
    pub d_level: f64,
    pub rho: f64,
    pub eps: f64,
}

/// Lower/upper cost bounds, optionally bracketing a reference cost (the
/// brute-force optimum or a constructed strategy's cost) with its slacks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub reference_cost: Option<f64>,
    /// reference - lower; nonnegative (within tolerance) when the reference
    /// is a true achievable cost.
    pub slack_lower: Option<f64>,
    /// upper - reference.
    pub slack_upper: Option<f64>,
    pub params: BoundParams,
}

pub fn bounds_report(
    p: &Pmf,
    d_level: f64,
    rho: f64,
    eps: f64,
    reference_cost: Option<f64>,
) -> Result<BoundsReport> {
    let lower = cost_lower_bound(p, d_level, rho, eps)?;
    let upper = cost_upper_bound(p, d_level, rho, eps)?;
    Ok(BoundsReport {
        lower,
        upper,
        reference_cost,
        slack_lower: reference_cost.map(|c| c - lower),
        slack_upper: reference_cost.map(|c| upper - c),
        params: BoundParams {
            m: p.len(),
            d_level,
            rho,
            eps,
        },
    })
}

/// log2 ⌊2^e⌋ for e >= 0. Exact through the integer-precision range of f64;
/// beyond that the floor is within one part in 2^52 of 2^e, so e itself is
/// returned and the evaluation stays in the log domain.
fn log2_floor_exp(e: f64) -> f64 {
    if e <= 52.0 {
        (floor_exp(e) as f64).log2()
    } else {
        e
    }
}

/// log2(2^a + 2^b) without overflow.
fn log2_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// The blocklength-n cost bracket with the expansion substituted for the
/// n-letter smooth entropy, all in bits (log2 of the bracket values), plus
/// the expansion components. The unknown additive constant is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCostBounds {
    pub n: u64,
    /// log2 of the lower-bracket expression.
    pub log2_lower: f64,
    /// log2 of the upper-bracket expression.
    pub log2_upper: f64,
    /// nH(X).
    pub n_entropy: f64,
    /// sqrt(nV(X)) · Φ⁻¹(ε).
    pub second_order: f64,
    /// ((1+ρ)/2) · log2 n.
    pub log_n_term: f64,
    /// log2 ⌊2^(nD)⌋.
    pub distortion_log2: f64,
}

/// Evaluate the n-letter cost bracket with the second-order expansion in
/// place of the exact n-letter smooth entropy (per-symbol distortion level
/// `d_level`). Requires ε ∈ (0,1) and positive varentropy.
pub fn asymptotic_cost_bounds(
    p: &Pmf,
    n: u64,
    d_level: f64,
    rho: f64,
    eps: f64,
) -> Result<AsymptoticCostBounds> {
    check_params(d_level, rho, eps)?;
    if n < 1 {
        return Err(Error::InvalidBlocklength);
    }
    let stats = source_stats(p);
    if stats.varentropy <= VARENTROPY_FLOOR {
        return Err(Error::ZeroVarentropy);
    }
    let phi_inv = inv_gaussian_cdf(eps)?; // rejects eps = 0
    let nf = n as f64;
    let n_entropy = nf * stats.entropy;
    let second_order = (nf * stats.varentropy).sqrt() * phi_inv;
    let log_n_term = (1.0 + rho) / 2.0 * nf.log2();
    let distortion_log2 = log2_floor_exp(nf * d_level);
    // Shared exponent ρ·H-expansion minus the ((1+ρ)/2) log n term.
    let core = rho * n_entropy - rho * second_order - log_n_term;
    let log2_lower =
        -rho * (1.0 + nf * (p.len() as f64).log2()).log2() + core - (1.0 + rho) * distortion_log2;
    let log2_upper = log2_add_exp((1.0 - eps).log2(), rho + core - rho * distortion_log2);
    Ok(AsymptoticCostBounds {
        n,
        log2_lower,
        log2_upper,
        n_entropy,
        second_order,
        log_n_term,
        distortion_log2,
    })
}

/// One blocklength of the exact-vs-expansion comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsRow {
    pub n: u64,
    /// Exact smooth Rényi entropy of the n-fold product, via type classes.
    pub exact_entropy: f64,
    /// nH - sqrt(nV)·Φ⁻¹(ε) - log2(n)/(2(1-α)), the expansion with its
    /// unknown additive constant dropped.
    pub expansion: f64,
    /// exact_entropy - expansion; bounded in n if the expansion is right.
    pub residual: f64,
    /// (exact - nH + log2(n)/(2(1-α))) / sqrt(n), which converges to
    /// -sqrt(V)·Φ⁻¹(ε).
    pub normalized_second_order: f64,
}

/// Tabulate exact n-letter smooth entropies against the expansion for each
/// blocklength in `ns`. Rows are computed in parallel and returned in input
/// order. `atom_cap` bounds each product expansion.
pub fn asymptotic_table(
    p: &Pmf,
    alpha: f64,
    eps: f64,
    ns: &[u64],
    atom_cap: u64,
) -> Result<Vec<AsymptoticsRow>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OrderNotSmoothable(alpha));
    }
    let stats = source_stats(p);
    if stats.varentropy <= VARENTROPY_FLOOR {
        return Err(Error::ZeroVarentropy);
    }
    let phi_inv = inv_gaussian_cdf(eps)?;
    ns.par_iter()
        .map(|&n| {
            if n < 1 || n > u32::MAX as u64 {
                return Err(Error::InvalidBlocklength);
            }
            let atoms = p.product_power_capped(n as u32, atom_cap)?;
            let exact_entropy = smooth_renyi_product(&atoms, alpha, eps)?;
            let nf = n as f64;
            let log_n_term = nf.log2() / (2.0 * (1.0 - alpha));
            let expansion =
                nf * stats.entropy - (nf * stats.varentropy).sqrt() * phi_inv - log_n_term;
            Ok(AsymptoticsRow {
                n,
                exact_entropy,
                expansion,
                residual: exact_entropy - expansion,
                normalized_second_order: (exact_entropy - nf * stats.entropy + log_n_term)
                    / nf.sqrt(),
            })
        })
        .collect()
}
