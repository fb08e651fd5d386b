//! Brute-force ground truth at small n: the exact law of the permutation
//! statistic, exact Kolmogorov distances, exact conditional expectations
//! behind the approximate-linearity condition, and exact evaluation of the
//! concentration inequality for the reduced statistic.
//!
//! Everything here enumerates permutations, so inputs are capped at
//! [`MAX_EXACT_N`] (10! = 3.6M permutations, seconds on commodity hardware).

use crate::array::{mean_imbalance, CENTERING_TOL};
use crate::bounds;
use crate::error::{Error, Result};
use crate::stein::normal_cdf;
use rayon::prelude::*;
use serde::Serialize;

/// Enumeration cap.
pub const MAX_EXACT_N: usize = 10;

/// Sums within this distance collapse into one atom.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// A finite distribution: (value, probability) atoms with strictly
/// increasing values. Serializes as a bare list of [value, prob] pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AtomicDistribution {
    atoms: Vec<(f64, f64)>,
}

impl AtomicDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArguments("need at least one atom".into()));
        }
        let mut total = 0.0;
        for window in atoms.windows(2) {
            if window[0].0 >= window[1].0 {
                return Err(Error::InvalidArguments("atom values must be strictly increasing".into()));
            }
        }
        for &(v, p) in &atoms {
            if !v.is_finite() || p <= 0.0 {
                return Err(Error::InvalidArguments(format!("bad atom ({v}, {p})")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArguments(format!("atom probabilities sum to {total}")));
        }
        Ok(Self { atoms })
    }

    /// Builds the distribution of a list of equally likely outcomes,
    /// merging values within [`ATOM_MERGE_TOL`] of the running group anchor.
    pub fn from_equally_likely(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArguments("need at least one outcome".into()));
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite sums"));
        let total = values.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut anchor = values[0];
        let mut sum = 0.0;
        let mut count = 0usize;
        for v in values {
            if count > 0 && v - anchor > ATOM_MERGE_TOL {
                atoms.push((sum / count as f64, count as f64 / total));
                anchor = v;
                sum = 0.0;
                count = 0;
            }
            sum += v;
            count += 1;
        }
        atoms.push((sum / count as f64, count as f64 / total));
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|(v, p)| (v - m).powi(2) * p).sum()
    }

    /// P(a <= X <= b), endpoints included.
    pub fn prob_in(&self, a: f64, b: f64) -> f64 {
        self.atoms.iter().filter(|(v, _)| a <= *v && *v <= b).map(|(_, p)| p).sum()
    }

    /// Exact Kolmogorov distance to the standard normal: the sup over atoms
    /// of both one-sided gaps |F(v) - Phi(v)| and |F(v-) - Phi(v)|.
    pub fn ks_to_normal(&self) -> f64 {
        let mut cum = 0.0;
        let mut sup: f64 = 0.0;
        for &(v, p) in &self.atoms {
            let phi = normal_cdf(v);
            sup = sup.max((cum - phi).abs());
            cum += p;
            sup = sup.max((cum - phi).abs());
        }
        sup
    }
}

/// Exact Kolmogorov distance of a finite law to the standard normal.
pub fn exact_ks(dist: &AtomicDistribution) -> f64 {
    dist.ks_to_normal()
}

fn check_square(c: &[Vec<f64>], max_n: usize) -> Result<usize> {
    let n = c.len();
    if n < 2 {
        return Err(Error::InvalidArguments(format!("need a square matrix with n >= 2, got n = {n}")));
    }
    if c.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArguments("matrix is not square".into()));
    }
    if n > max_n {
        return Err(Error::SizeLimitExceeded { n, max: max_n });
    }
    Ok(n)
}

fn check_centered(c: &[Vec<f64>]) -> Result<()> {
    let dev = mean_imbalance(c);
    if dev > CENTERING_TOL {
        return Err(Error::NotCentered { max_dev: dev, tol: CENTERING_TOL });
    }
    Ok(())
}

/// Visits every permutation of {0, .., n-1} in a deterministic order,
/// partitioned by first image so partitions can run in parallel.
fn map_permutations<T, F>(n: usize, per_perm: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[usize]) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut images: Vec<usize> = Vec::with_capacity(n);
            images.push(first);
            let mut rest: Vec<usize> = (0..n).filter(|&v| v != first).collect();
            let mut out = Vec::new();
            visit_tails(&mut images, &mut rest, &per_perm, &mut out);
            out
        })
        .reduce(Vec::new, |mut acc, mut chunk| {
            acc.append(&mut chunk);
            acc
        })
}

fn visit_tails<T, F: Fn(&[usize]) -> T>(
    images: &mut Vec<usize>,
    rest: &mut Vec<usize>,
    per_perm: &F,
    out: &mut Vec<T>,
) {
    if rest.is_empty() {
        out.push(per_perm(images));
        return;
    }
    for idx in 0..rest.len() {
        let v = rest.remove(idx);
        images.push(v);
        visit_tails(images, rest, per_perm, out);
        images.pop();
        rest.insert(idx, v);
    }
}

fn diagonal_sum(c: &[Vec<f64>], images: &[usize]) -> f64 {
    images.iter().enumerate().map(|(i, &j)| c[i][j]).sum()
}

/// The exact law of W = sum_i c_{i, pi(i)} over all n! equally likely
/// permutations of a deterministic array.
pub fn exact_w_distribution(c: &[Vec<f64>]) -> Result<AtomicDistribution> {
    check_square(c, MAX_EXACT_N)?;
    let sums = map_permutations(c.len(), |images| diagonal_sum(c, images));
    AtomicDistribution::from_equally_likely(sums)
}

/// Exactly verifies the approximate-linearity condition
/// E(W' - W | W) = -2/(n-1) W for a centered deterministic array, where W'
/// swaps two uniformly chosen positions. Returns the largest conditional
/// residual |E(W' - W | W = w) + lambda w| over the groups of equal W.
///
/// Centering makes the remainder term vanish: the conditional mean of the
/// total cell sum is identically zero.
pub fn verify_linearity(c: &[Vec<f64>]) -> Result<f64> {
    let n = check_square(c, 8)?;
    check_centered(c)?;
    let lambda = 2.0 / (n as f64 - 1.0);
    let pair_count = (n * (n - 1) / 2) as f64;

    // per permutation: (w, mean over unordered swaps of w' - w)
    let mut rows: Vec<(f64, f64)> = map_permutations(n, |images| {
        let w = diagonal_sum(c, images);
        let mut delta_sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                delta_sum += c[i][images[j]] + c[j][images[i]] - c[i][images[i]] - c[j][images[j]];
            }
        }
        (w, delta_sum / pair_count)
    });
    rows.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite sums"));

    let mut worst: f64 = 0.0;
    let mut idx = 0;
    while idx < rows.len() {
        let anchor = rows[idx].0;
        let mut end = idx;
        let (mut w_sum, mut delta_sum) = (0.0, 0.0);
        while end < rows.len() && rows[end].0 - anchor <= ATOM_MERGE_TOL {
            w_sum += rows[end].0;
            delta_sum += rows[end].1;
            end += 1;
        }
        let count = (end - idx) as f64;
        worst = worst.max((delta_sum / count + lambda * w_sum / count).abs());
        idx = end;
    }
    Ok(worst)
}

/// Exact second moment and increment third moment of the reduced statistic
/// S = sum_{i < n-m} c_{i, tau(i)} over the leading (n-m) x (n-m) block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SStatistics {
    /// E S^2 by enumeration over all (n-m)! permutations.
    pub es2: f64,
    /// E S^2 by the closed-form expansion (valid for centered arrays).
    pub es2_formula: f64,
    /// E|S' - S|^3, averaging over permutations and position pairs.
    pub abs3_increment: f64,
}

fn reduced_block_formula(c: &[Vec<f64>], k: usize) -> f64 {
    let n = c.len();
    // total over the removed block, per-row and per-column removed sums
    let removed_total: f64 = (k..n).map(|i| (k..n).map(|j| c[i][j]).sum::<f64>()).sum();
    let row_removed: Vec<f64> = (0..k).map(|i| (k..n).map(|j| c[i][j]).sum()).collect();
    let col_removed: Vec<f64> = (0..k).map(|j| (k..n).map(|i| c[i][j]).sum()).collect();

    let kf = k as f64;
    let mut square_sum = 0.0;
    let mut cross = 0.0;
    for i in 0..k {
        for j in 0..k {
            square_sum += c[i][j] * c[i][j];
            cross += c[i][j] * (removed_total + row_removed[i] + col_removed[j]);
        }
    }
    square_sum / (kf - 1.0) + cross / (kf * (kf - 1.0))
}

/// Enumerates the reduced statistic for a centered deterministic array,
/// cross-checking the enumerated E S^2 against the closed-form expansion.
pub fn exact_s_statistics(c: &[Vec<f64>], m: u32) -> Result<SStatistics> {
    let n = check_square(c, MAX_EXACT_N)?;
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidArguments(format!("need m in {{2, 3, 4}}, got {m}")));
    }
    if n < m as usize + 2 {
        return Err(Error::InvalidArguments(format!("need n >= m + 2, got n = {n}, m = {m}")));
    }
    let k = n - m as usize;
    check_centered(c)?;

    let block: Vec<Vec<f64>> = (0..k).map(|i| c[i][..k].to_vec()).collect();
    let pair_count = (k * (k - 1) / 2) as f64;
    let rows: Vec<(f64, f64)> = map_permutations(k, |images| {
        let s = diagonal_sum(&block, images);
        let mut abs3 = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                let delta =
                    block[i][images[j]] + block[j][images[i]] - block[i][images[i]] - block[j][images[j]];
                abs3 += delta.abs().powi(3);
            }
        }
        (s * s, abs3 / pair_count)
    });
    let count = rows.len() as f64;
    let es2 = rows.iter().map(|r| r.0).sum::<f64>() / count;
    let abs3_increment = rows.iter().map(|r| r.1).sum::<f64>() / count;
    let es2_formula = reduced_block_formula(c, k);
    if (es2 - es2_formula).abs() > 1e-10 {
        return Err(Error::InternalCheck(format!(
            "enumerated E S^2 = {es2} disagrees with the closed-form expansion {es2_formula}"
        )));
    }
    Ok(SStatistics { es2, es2_formula, abs3_increment })
}

/// Exact evaluation of the concentration inequality for the reduced
/// statistic of a deterministic array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationCheck {
    /// Exact P(S in [a, b]).
    pub lhs: f64,
    /// Exact right side of the exchangeable-pair concentration inequality.
    pub rhs_lemma: f64,
    /// The inequality's premise E S^2 - E|SR|/lambda - 1/2 > 0 holds.
    pub applicable: bool,
    /// lhs <= rhs_lemma whenever applicable (up to float slack).
    pub inequality_ok: bool,
    /// The constant remainder R of the linearity condition.
    pub remainder: f64,
    /// Truncation level delta = E|S'-S|^3 / lambda.
    pub delta: f64,
    pub es2: f64,
    pub mean_abs_s: f64,
    /// sqrt Var(E[(S'-S)^2 I(|S'-S|<=delta) / (2 lambda) | S]).
    pub b0: f64,
    /// c1 (b-a) + c2 gamma, when the constants are defined (n >= 6).
    pub prop_rhs: Option<f64>,
    /// theta > 0 and gamma <= 1/c0.
    pub prop_premises_ok: bool,
    /// gamma of the full matrix.
    pub gamma: f64,
}

/// Exactly evaluates both sides of the concentration inequality
/// P(S in [a,b]) <= (E|S| + E|R|/lambda) / D * ((b-a)/2 + delta) + B0 / D,
/// D = E S^2 - E|SR|/lambda - 1/2, for the reduced statistic of a
/// deterministic array; every expectation is an exact enumeration.
///
/// The remainder R is the exact constant 2 * (block sum) / ((n-m)(n-m-1));
/// it vanishes only when the retained block sums to zero, so it is carried
/// exactly rather than assumed away.
pub fn exact_concentration_check(
    c: &[Vec<f64>],
    m: u32,
    a: f64,
    b: f64,
    c0: f64,
) -> Result<ConcentrationCheck> {
    let n = check_square(c, 9)?;
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidArguments(format!("need m in {{2, 3, 4}}, got {m}")));
    }
    if n < m as usize + 2 {
        return Err(Error::InvalidArguments(format!("need n >= m + 2, got n = {n}, m = {m}")));
    }
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::InvalidArguments(format!("need a < b, got [{a}, {b}]")));
    }
    if c0 <= 0.0 {
        return Err(Error::InvalidArguments(format!("need c0 > 0, got {c0}")));
    }
    let k = n - m as usize;
    let kf = k as f64;
    let lambda = 2.0 / (kf - 1.0);
    let block: Vec<Vec<f64>> = (0..k).map(|i| c[i][..k].to_vec()).collect();
    let block_sum: f64 = block.iter().flatten().sum();
    let remainder = 2.0 * block_sum / (kf * (kf - 1.0));

    // pass 1: per-permutation S and all swap increments
    let pair_count = k * (k - 1) / 2;
    let rows: Vec<(f64, Vec<f64>)> = map_permutations(k, |images| {
        let s = diagonal_sum(&block, images);
        let mut deltas = Vec::with_capacity(pair_count);
        for i in 0..k {
            for j in (i + 1)..k {
                deltas.push(
                    block[i][images[j]] + block[j][images[i]] - block[i][images[i]] - block[j][images[j]],
                );
            }
        }
        (s, deltas)
    });
    let count = rows.len() as f64;
    let abs3: f64 =
        rows.iter().map(|(_, d)| d.iter().map(|x| x.abs().powi(3)).sum::<f64>()).sum::<f64>()
            / (count * pair_count as f64);
    let delta = abs3 / lambda;

    let mut lhs = 0.0;
    let mut es2 = 0.0;
    let mut mean_abs_s = 0.0;
    for (s, _) in &rows {
        if a <= *s && *s <= b {
            lhs += 1.0;
        }
        es2 += s * s;
        mean_abs_s += s.abs();
    }
    lhs /= count;
    es2 /= count;
    mean_abs_s /= count;

    // pass 2: conditional mean of (S'-S)^2 I(|S'-S| <= delta) / (2 lambda)
    // given S, by grouping permutations with equal S
    let mut keyed: Vec<(f64, f64)> = rows
        .iter()
        .map(|(s, deltas)| {
            let g: f64 = deltas
                .iter()
                .map(|d| if d.abs() <= delta { d * d } else { 0.0 })
                .sum::<f64>()
                / (2.0 * lambda * pair_count as f64);
            (*s, g)
        })
        .collect();
    keyed.sort_unstable_by(|x, y| x.0.partial_cmp(&y.0).expect("finite sums"));
    let overall_mean: f64 = keyed.iter().map(|r| r.1).sum::<f64>() / count;
    let mut b0_sq = 0.0;
    let mut idx = 0;
    while idx < keyed.len() {
        let anchor = keyed[idx].0;
        let mut end = idx;
        let mut g_sum = 0.0;
        while end < keyed.len() && keyed[end].0 - anchor <= ATOM_MERGE_TOL {
            g_sum += keyed[end].1;
            end += 1;
        }
        let group = (end - idx) as f64;
        b0_sq += group / count * (g_sum / group - overall_mean).powi(2);
        idx = end;
    }
    let b0 = b0_sq.max(0.0).sqrt();

    let denom = es2 - remainder.abs() * mean_abs_s / lambda - 0.5;
    let applicable = denom > 0.0;
    let rhs_lemma = if applicable {
        ((mean_abs_s + remainder.abs() / lambda) * (0.5 * (b - a) + delta) + b0) / denom
    } else {
        f64::NAN
    };
    let inequality_ok = !applicable || lhs <= rhs_lemma + 1e-12;

    let gamma = c.iter().flatten().map(|v| v.abs().powi(3)).sum::<f64>() / n as f64;
    let (prop_rhs, prop_premises_ok) = if n >= 6 {
        let constants = bounds::concentration_constants(n as u64, m, c0)?;
        (
            Some(constants.c1 * (b - a) + constants.c2 * gamma),
            constants.theta > 0.0 && gamma <= 1.0 / c0,
        )
    } else {
        (None, false)
    };

    Ok(ConcentrationCheck {
        lhs,
        rhs_lemma,
        applicable,
        inequality_ok,
        remainder,
        delta,
        es2,
        mean_abs_s,
        b0,
        prop_rhs,
        prop_premises_ok,
        gamma,
    })
}
