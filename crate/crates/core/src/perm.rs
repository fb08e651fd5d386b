//! Random permutation machinery: uniform sampling, realizations of the
//! permutation statistic W, the position-swap exchangeable pair, the
//! conditioning coupling, and Monte Carlo Kolmogorov-distance estimation
//! with Dvoretzky-Kiefer-Wolfowitz confidence bands.
//!
//! Reproducibility contract: all randomness flows through ChaCha8 streams.
//! Replicate r of a run with seed s uses `derive_stream(s, r)`, i.e. the
//! ChaCha8 generator seeded with `seed_from_u64(s)` on stream id r. Monte
//! Carlo estimates are therefore invariant to the degree of parallelism.

use crate::array::ArraySpec;
use crate::error::{Error, Result};
use crate::stein::normal_cdf;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

/// A bijection on {0, 1, ..., n-1}, stored as the image sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    /// Validates that `images` is a bijection.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || seen[v] {
                return Err(Error::InvalidArguments(format!(
                    "image sequence {images:?} is not a bijection on 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { images })
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    fn position_of(&self, value: usize) -> usize {
        self.images.iter().position(|&v| v == value).expect("value in range")
    }

    /// The rewired permutation that maps i to k and j to l, with the
    /// displaced images moved to the vacated positions. Its law, when this
    /// is applied to a uniform permutation, is the uniform law conditioned
    /// on {pi(i) = k, pi(j) = l}.
    ///
    /// Implemented as two position swaps: first swap position i with the
    /// preimage of k, then position j with the (updated) preimage of l. The
    /// second swap cannot touch position i because it already maps to k != l.
    pub fn couple(&self, i: usize, j: usize, k: usize, l: usize) -> Result<Permutation> {
        let n = self.n();
        if i >= n || j >= n || k >= n || l >= n {
            return Err(Error::InvalidArguments(format!(
                "indices ({i}, {j}, {k}, {l}) out of range for n = {n}"
            )));
        }
        if i == j || k == l {
            return Err(Error::InvalidArguments(format!(
                "need i != j and k != l, got ({i}, {j}, {k}, {l})"
            )));
        }
        let mut out = self.clone();
        let a = out.position_of(k);
        out.images.swap(i, a);
        let b = out.position_of(l);
        out.images.swap(j, b);
        debug_assert!(out.images[i] == k && out.images[j] == l);
        Ok(out)
    }
}

/// Uniform permutation of n elements by Fisher-Yates (`shuffle` draws
/// unbiased bounded integers).
pub fn sample_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut images: Vec<usize> = (0..n).collect();
    images.shuffle(rng);
    Permutation { images }
}

/// One draw of W = sum_i X_{i, pi(i)}: the permutation is sampled first,
/// then only the n cells it touches.
pub fn realize_w<R: Rng + ?Sized>(array: &ArraySpec, rng: &mut R) -> f64 {
    let p = sample_permutation(array.n(), rng);
    (0..array.n()).map(|i| array.cell(i, p.image(i)).sample(rng)).sum()
}

/// One realized step of the exchangeable pair: the statistic before and
/// after swapping two uniformly chosen positions of the permutation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeablePair {
    pub w: f64,
    pub w_prime: f64,
    /// Swapped positions, i != j.
    pub i: usize,
    pub j: usize,
}

/// Draws a full realization (permutation, the cells it needs, and a uniform
/// ordered pair of distinct positions) and returns (W, W').
///
/// W' = W - X_{i,pi(i)} - X_{j,pi(j)} + X_{i,pi(j)} + X_{j,pi(i)} by
/// construction, and exchangeability makes the two marginal laws equal.
pub fn exchangeable_step<R: Rng + ?Sized>(array: &ArraySpec, rng: &mut R) -> Result<ExchangeablePair> {
    let n = array.n();
    if n < 2 {
        return Err(Error::InvalidArguments("exchangeable step needs n >= 2".into()));
    }
    let p = sample_permutation(n, rng);
    let on_diagonal: Vec<f64> = (0..n).map(|i| array.cell(i, p.image(i)).sample(rng)).collect();
    let w: f64 = on_diagonal.iter().sum();

    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    // the four touched cells are pairwise distinct because i != j and
    // pi(i) != pi(j), so each is an independent draw
    let x_i_pj = array.cell(i, p.image(j)).sample(rng);
    let x_j_pi = array.cell(j, p.image(i)).sample(rng);
    let w_prime = w - on_diagonal[i] - on_diagonal[j] + x_i_pj + x_j_pi;
    Ok(ExchangeablePair { w, w_prime, i, j })
}

/// The ChaCha8 stream for replicate `replicate` of a run with seed `seed`.
pub fn derive_stream(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// A sorted Monte Carlo sample of W.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    seed: u64,
}

impl EmpiricalSample {
    /// Draws `count` independent realizations of W, one derived stream per
    /// replicate, in parallel; the result does not depend on thread count.
    pub fn draw(array: &ArraySpec, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArguments("need at least one replicate".into()));
        }
        let mut values: Vec<f64> = (0..count as u64)
            .into_par_iter()
            .map(|replicate| realize_w(array, &mut derive_stream(seed, replicate)))
            .collect();
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        Ok(Self { values, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes the sample as CSV: a `w` header, then one value per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "w")?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// Kolmogorov distance between the empirical law and the standard normal,
/// using both one-sided gaps at every order statistic (the sup for a cadlag
/// step function against a continuous CDF is attained at a jump).
pub fn ks_distance_to_normal(sample: &EmpiricalSample) -> f64 {
    let n = sample.values.len() as f64;
    let mut sup: f64 = 0.0;
    for (idx, &w) in sample.values.iter().enumerate() {
        let phi = normal_cdf(w);
        let hi = (idx as f64 + 1.0) / n - phi;
        let lo = phi - idx as f64 / n;
        sup = sup.max(hi.abs()).max(lo.abs());
    }
    sup
}

/// The Dvoretzky-Kiefer-Wolfowitz radius sqrt(ln(2/alpha) / (2N)): with
/// probability at least 1 - alpha the empirical CDF is uniformly within
/// this of the truth.
pub fn dkw_epsilon(count: usize, alpha: f64) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidArguments("need at least one replicate".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArguments(format!("need 0 < alpha < 1, got {alpha}")));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * count as f64)).sqrt())
}

/// A Monte Carlo Kolmogorov-distance estimate with its confidence radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsEstimate {
    pub ks: f64,
    pub dkw_eps: f64,
}

/// Estimates sup_z |P(W <= z) - Phi(z)| from `count` seeded draws.
pub fn mc_ks_distance(array: &ArraySpec, count: usize, seed: u64, alpha: f64) -> Result<KsEstimate> {
    let dkw_eps = dkw_epsilon(count, alpha)?;
    let sample = EmpiricalSample::draw(array, count, seed)?;
    Ok(KsEstimate { ks: ks_distance_to_normal(&sample), dkw_eps })
}
