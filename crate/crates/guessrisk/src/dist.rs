//! Probability-distribution foundation: validated PMFs over finite alphabets,
//! joint distributions, and compact i.i.d. product representations.
//!
//! All probabilities are 64-bit floats and all logarithms across the crate are
//! base 2. PMFs are kept sorted nonincreasing with strictly positive entries,
//! which is the normal form every other module assumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that masses sum to 1.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Relative tolerance for merging equal-probability atoms of a product
/// source. Products like p^k q^(n-k) are mathematically equal across
/// permutations but floating rounding can split them into distinct values.
pub const VALUE_MERGE_TOLERANCE: f64 = 1e-12;

/// Default cap on the number of atoms a product expansion may produce.
pub const DEFAULT_ATOM_CAP: u64 = 1_000_000;

/// Incremental compensated (Kahan) summation.
///
/// Cumulative-mass scans decide truncation boundaries, so the running sums
/// are kept error-corrected instead of naively accumulated.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum
    }
}

pub(crate) fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Kahan::default();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// A finite probability mass function in normal form.
///
/// Invariants, enforced at construction:
/// - entries are strictly positive (zero-mass symbols are stripped),
/// - entries sum to 1 within [`MASS_TOLERANCE`],
/// - entries are sorted nonincreasing; ties keep original-index order.
///
/// `labels[i]` records which index of the raw input the `i`-th sorted entry
/// came from, so guessing orders remain traceable to the caller's symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    probs: Vec<f64>,
    labels: Vec<usize>,
}

impl Pmf {
    /// Build a PMF from nonnegative weights: normalizes, strips zero entries,
    /// and sorts nonincreasing (stable in the original index on ties).
    pub fn from_weights(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (index, &value) in raw.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let total = kahan_sum(raw.iter().copied());
        if total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let mut entries: Vec<(usize, f64)> = raw
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (i, w / total))
            .collect();
        // Stable sort keeps original-index order on ties, which makes
        // guessing orders deterministic.
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        Ok(Pmf {
            probs: entries.iter().map(|&(_, p)| p).collect(),
            labels: entries.iter().map(|&(i, _)| i).collect(),
        })
    }

    /// Uniform distribution over `m` symbols.
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "uniform distribution needs at least one symbol");
        Pmf {
            probs: vec![1.0 / m as f64; m],
            labels: (0..m).collect(),
        }
    }

    /// Alphabet size M (after zero-stripping).
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one positive entry
    }

    /// Sorted probabilities, largest first.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Original input index of each sorted entry.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Expand to the i.i.d. n-fold product, grouped by equal probability
    /// value (type classes), using [`DEFAULT_ATOM_CAP`].
    pub fn product_power(&self, n: u32) -> Result<AtomMultiset> {
        self.product_power_capped(n, DEFAULT_ATOM_CAP)
    }

    /// As [`Pmf::product_power`] with an explicit atom cap.
    ///
    /// The expansion enumerates exponent patterns over the distinct values of
    /// the base PMF, so a binary source yields exactly `n + 1` atoms with
    /// binomial multiplicities regardless of `n`.
    pub fn product_power_capped(&self, n: u32, cap: u64) -> Result<AtomMultiset> {
        if n < 1 {
            return Err(Error::InvalidBlocklength);
        }
        // Group the base distribution into distinct values first; equal base
        // probabilities only multiply the pattern counts.
        let base = group_values(
            self.probs.iter().map(|&p| (p, 1.0)),
            VALUE_MERGE_TOLERANCE,
        );
        let k = base.len();

        // Number of exponent patterns is C(n+k-1, k-1); refuse before
        // enumerating anything.
        let pattern_count = binomial_f64(n as u64 + k as u64 - 1, k as u64 - 1);
        if pattern_count > cap as f64 {
            return Err(Error::AtomCapExceeded {
                needed: if pattern_count.is_finite() {
                    pattern_count as u64
                } else {
                    u64::MAX
                },
                cap,
            });
        }

        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(pattern_count as usize);
        expand_patterns(&base, n, 0, 1.0, 1.0, &mut atoms);
        Ok(AtomMultiset::from_atoms(atoms))
    }
}

/// Recursively enumerate exponent patterns (c_1, ..., c_k) with sum n over
/// the distinct base values, accumulating the atom value and its count.
///
/// `count` carries multinomial(n; c) * prod m_i^(c_i) incrementally: when
/// the slot for value i receives c_i copies out of the `remaining` positions,
/// the pattern count multiplies by C(remaining, c_i) * m_i^(c_i).
fn expand_patterns(
    base: &[(f64, f64)],
    remaining: u32,
    slot: usize,
    value: f64,
    count: f64,
    out: &mut Vec<(f64, f64)>,
) {
    if slot == base.len() - 1 {
        let (v, m) = base[slot];
        let atom_value = value * v.powi(remaining as i32);
        let atom_count = count * m.powi(remaining as i32);
        // Values below the subnormal range underflow to zero; such atoms
        // carry mass far below every tolerance in the crate and are dropped.
        if atom_value > 0.0 {
            out.push((atom_value, atom_count));
        }
        return;
    }
    let (v, m) = base[slot];
    for c in 0..=remaining {
        let choose = binomial_f64(remaining as u64, c as u64);
        expand_patterns(
            base,
            remaining - c,
            slot + 1,
            value * v.powi(c as i32),
            count * choose * m.powi(c as i32),
            out,
        );
    }
}

/// Binomial coefficient in f64 (exact while representable, ~1e-15 relative
/// error beyond 2^53).
pub(crate) fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut res = 1.0;
    for i in 1..=k {
        res = res * (n - k + i) as f64 / i as f64;
    }
    res
}

/// Sort (value, count) pairs nonincreasing by value and merge values equal
/// within `rel_tol` relative to the larger one.
fn group_values(pairs: impl IntoIterator<Item = (f64, f64)>, rel_tol: f64) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = pairs.into_iter().collect();
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (value, count) in v {
        match merged.last_mut() {
            Some((mv, mc)) if (*mv - value).abs() <= rel_tol * *mv => *mc += count,
            _ => merged.push((value, count)),
        }
    }
    merged
}

/// One group of equal-probability outcomes of a product source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    /// Probability of each outcome in the group.
    pub value: f64,
    /// Number of outcomes in the group. Exact while counts stay below 2^53;
    /// for larger products this is the nearest representable f64, which is
    /// ample for every mass comparison the crate performs.
    pub multiplicity: f64,
}

/// A distribution represented as groups of equal-probability outcomes,
/// sorted nonincreasing by value. Total mass (sum of multiplicity * value)
/// is 1 within [`MASS_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomMultiset {
    atoms: Vec<Atom>,
}

impl AtomMultiset {
    fn from_atoms(pairs: Vec<(f64, f64)>) -> Self {
        let grouped = group_values(pairs, VALUE_MERGE_TOLERANCE);
        let atoms = grouped
            .into_iter()
            .map(|(value, multiplicity)| Atom {
                value,
                multiplicity,
            })
            .collect();
        AtomMultiset { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Sum of multiplicity * value (compensated).
    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.atoms.iter().map(|a| a.value * a.multiplicity))
    }

    /// Number of groups.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Flatten into an explicit [`Pmf`], repeating each value by its
    /// multiplicity. Only valid while the multiplicities are small exact
    /// integers; intended for cross-checks on small cases.
    pub fn expanded(&self, cap: u64) -> Result<Pmf> {
        let total: f64 = self.atoms.iter().map(|a| a.multiplicity).sum();
        if total > cap as f64 {
            return Err(Error::AtomCapExceeded {
                needed: if total.is_finite() { total as u64 } else { u64::MAX },
                cap,
            });
        }
        let mut raw = Vec::with_capacity(total as usize);
        for a in &self.atoms {
            debug_assert!(
                a.multiplicity.fract() == 0.0,
                "expansion of non-integer multiplicity"
            );
            for _ in 0..a.multiplicity as u64 {
                raw.push(a.value);
            }
        }
        Pmf::from_weights(&raw)
    }
}

#[derive(Deserialize)]
struct RawJoint {
    table: Vec<Vec<f64>>,
}

/// A joint distribution of (X, Y) as a table indexed `table[x][y]`.
///
/// Entries are nonnegative and sum to 1 within [`MASS_TOLERANCE`]. Columns
/// with zero mass are representable; operations that condition on such a
/// column fail with [`Error::ZeroColumnMass`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointPmf {
    table: Vec<Vec<f64>>,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        JointPmf::new(raw.table)
    }
}

impl JointPmf {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::BadTable);
        }
        let ny = table[0].len();
        if table.iter().any(|row| row.len() != ny) {
            return Err(Error::BadTable);
        }
        for (x, row) in table.iter().enumerate() {
            for (y, &value) in row.iter().enumerate() {
                if value < 0.0 || !value.is_finite() {
                    return Err(Error::NegativeMass {
                        index: x * ny + y,
                        value,
                    });
                }
            }
        }
        let sum = kahan_sum(table.iter().flatten().copied());
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tol: MASS_TOLERANCE,
            });
        }
        Ok(JointPmf { table })
    }

    pub fn nx(&self) -> usize {
        self.table.len()
    }

    pub fn ny(&self) -> usize {
        self.table[0].len()
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    /// Column sums P_Y, in column order (not a normalized [`Pmf`]).
    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny())
            .map(|y| kahan_sum(self.table.iter().map(|row| row[y])))
            .collect()
    }

    /// Row sums P_X, in row order.
    pub fn marginal_x(&self) -> Vec<f64> {
        self.table
            .iter()
            .map(|row| kahan_sum(row.iter().copied()))
            .collect()
    }

    /// The conditional distribution of X given Y = y, exactly normalized by
    /// the column mass.
    pub fn conditional_given_y(&self, y: usize) -> Result<Pmf> {
        if y >= self.ny() {
            return Err(Error::ZeroColumnMass { y });
        }
        let mass = kahan_sum(self.table.iter().map(|row| row[y]));
        if mass <= 0.0 {
            return Err(Error::ZeroColumnMass { y });
        }
        let column: Vec<f64> = self.table.iter().map(|row| row[y]).collect();
        Pmf::from_weights(&column)
    }

    /// The joint flattened to a single PMF over pairs (x, y).
    pub fn flattened(&self) -> Pmf {
        let raw: Vec<f64> = self.table.iter().flatten().copied().collect();
        Pmf::from_weights(&raw).expect("joint table sums to 1")
    }
}
