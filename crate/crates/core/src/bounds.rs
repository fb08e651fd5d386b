//! Every explicit constant of the certified normal-approximation bound:
//! the headline 451*gamma Kolmogorov bound, the sampling-without-replacement
//! corollary, the concentration-inequality constants, the second-moment
//! envelope for the reduced statistic, the trivial-case threshold, and the
//! final coefficient whose value below 451 closes the certification.

use crate::array::{ArraySpec, CellDistribution, MomentSummary};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The certified constant in the Kolmogorov bound `451 * gamma`.
pub const CLT_CONSTANT: f64 = 451.0;

/// Var(W) may deviate from 1 by at most this much before a bound report
/// flags the array as non-standardized.
pub const STANDARDIZED_TOL: f64 = 1e-8;

/// The certified bound for one array, with applicability diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub gamma: f64,
    #[serde(rename = "varW")]
    pub var_w: f64,
    /// 451 * gamma.
    pub bound: f64,
    /// Row/column means of the cell means vanish within tolerance.
    pub centered_ok: bool,
    /// Var(W) = 1 within [`STANDARDIZED_TOL`].
    pub standardized_ok: bool,
    /// The bound is >= 1 and therefore holds trivially.
    pub trivial_case: bool,
}

/// Evaluates the Kolmogorov bound 451 * gamma for a summarized array.
///
/// Never fails: arrays that are off-center or not standardized still get a
/// report, with the corresponding flag cleared.
pub fn theorem_bound(summary: &MomentSummary) -> BoundReport {
    let bound = CLT_CONSTANT * summary.gamma;
    BoundReport {
        n: summary.n,
        gamma: summary.gamma,
        var_w: summary.var_w,
        bound,
        centered_ok: summary.centered_ok,
        standardized_ok: (summary.var_w - 1.0).abs() <= STANDARDIZED_TOL,
        trivial_case: bound >= 1.0,
    }
}

/// Constants of the concentration inequality
/// P(S in [a,b]) <= c1 (b-a) + c2 gamma
/// for the reduced statistic S over the array with the last m rows and
/// columns removed. All entries are termwise double-precision evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConstants {
    pub n: u64,
    pub m: u32,
    pub c0: f64,
    /// Swap rate of the exchangeable pair: 2 / (n - m - 1).
    pub lambda: f64,
    /// Applicability margin; the constants are meaningful only when > 0.
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    /// sqrt of the upper second-moment envelope; bounds E|S|.
    pub c3: f64,
    /// Coefficient of gamma in the increment bound E|S'-S|^3 / lambda <= delta_max * gamma.
    pub delta_max: f64,
    /// Lower envelope for E S^2 (may be negative at moderate n).
    pub es2_lo: f64,
    /// Upper envelope for E S^2.
    pub es2_hi: f64,
}

fn check_nm(n: u64, m: u32) -> Result<()> {
    if n < 6 {
        return Err(Error::InvalidArguments(format!("need n >= 6, got n = {n}")));
    }
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidArguments(format!("need m in {{2, 3, 4}}, got m = {m}")));
    }
    Ok(())
}

/// Second-moment envelope for the reduced statistic:
/// lower (n-1)/(n-2) - 2n/((n-4) c0^{2/3}) - 24n/(n-5)^2,
/// upper n/(n-5) + 24n/(n-5)^2.
///
/// The envelope is uniform over m in {2, 3, 4}; m is validated but does not
/// enter the formulas. The lower end can be negative at moderate n and is
/// reported as-is.
pub fn es2_envelope(n: u64, m: u32, c0: f64) -> Result<(f64, f64)> {
    check_nm(n, m)?;
    if c0 <= 0.0 {
        return Err(Error::InvalidArguments(format!("need c0 > 0, got {c0}")));
    }
    let nf = n as f64;
    let hi = nf / (nf - 5.0) + 24.0 * nf / ((nf - 5.0) * (nf - 5.0));
    let lo = (nf - 1.0) / (nf - 2.0)
        - 2.0 * nf / ((nf - 4.0) * c0.powf(2.0 / 3.0))
        - 24.0 * nf / ((nf - 5.0) * (nf - 5.0));
    Ok((lo, hi))
}

/// Termwise evaluation of the concentration constants at (n, m, c0).
///
/// theta may come out non-positive, signaling that the inequality is not
/// applicable at this n; it is reported rather than treated as an error.
pub fn concentration_constants(n: u64, m: u32, c0: f64) -> Result<ConcentrationConstants> {
    let (es2_lo, es2_hi) = es2_envelope(n, m, c0)?;
    let nf = n as f64;
    let sqrt_hi = es2_hi.sqrt();
    let theta = 0.5
        - 2.0 * nf / ((nf - 4.0) * c0.powf(2.0 / 3.0))
        - 24.0 * nf / ((nf - 5.0) * (nf - 5.0))
        - 4.0 * nf.sqrt() / (nf - 4.0) * sqrt_hi;
    let c1 = (0.5 * sqrt_hi + 2.0 * nf.sqrt() / (nf - 4.0)) / theta;
    let bracket = 8.0 * nf / ((nf - 4.0) * (nf - 4.0))
        + 16.0 * nf / (nf - 4.0)
        + 32.0 * (nf / (nf - 4.0)).powi(3);
    let c2 = 64.0 * nf / (nf - 4.0) * c1 + (bracket * 32.0 * nf / (nf - 4.0)).sqrt() / theta;
    Ok(ConcentrationConstants {
        n,
        m,
        c0,
        lambda: 2.0 / (nf - m as f64 - 1.0),
        theta,
        c1,
        c2,
        c3: sqrt_hi,
        delta_max: 32.0 * nf / (nf - 4.0),
        es2_lo,
        es2_hi,
    })
}

/// The coefficient multiplying gamma in the assembled Kolmogorov bound,
/// using the m = 2 concentration constants:
/// 40 c1 + 2 (1 + 1/sqrt(n)) c2 + 14 sqrt(2 pi) + 56 c3 + 2 (n/(n-1))^{3/2}.
///
/// The certification rests on this value being below 451 at n = 203000.
pub fn final_coefficient(n: u64, c0: f64) -> Result<f64> {
    let k = concentration_constants(n, 2, c0)?;
    if k.theta <= 0.0 {
        return Err(Error::ThetaNonpositive { theta: k.theta });
    }
    let nf = n as f64;
    Ok(40.0 * k.c1
        + 2.0 * (1.0 + 1.0 / nf.sqrt()) * k.c2
        + 14.0 * (2.0 * std::f64::consts::PI).sqrt()
        + 56.0 * k.c3
        + 2.0 * (nf / (nf - 1.0)).powf(1.5))
}

/// Largest n at which gamma <= 1/c0 is impossible for a standardized array,
/// i.e. the largest n with (n-1)/n^{4/3} > c0^{-2/3}. Below this threshold
/// the bound c0 * gamma >= 1 holds trivially.
///
/// Returns 1 when no n >= 2 satisfies the predicate.
pub fn trivial_threshold(c0: f64) -> u64 {
    // Exact integer arithmetic when c0 is integral: the predicate is
    // equivalent to c0^2 (n-1)^3 > n^4. The c0 cap keeps n^4 within u128.
    let exact: Option<u128> = if c0 > 0.0 && c0.fract() == 0.0 && c0 <= 20_000.0 {
        Some(c0 as u128)
    } else {
        None
    };
    let holds = |n: u64| -> bool {
        match exact {
            Some(c) => {
                let n = n as u128;
                c * c * (n - 1).pow(3) > n.pow(4)
            }
            None => {
                let nf = n as f64;
                (nf - 1.0).ln() - 4.0 / 3.0 * nf.ln() > -2.0 / 3.0 * c0.ln()
            }
        }
    };
    // (n-1)/n^{4/3} increases up to n = 4 and decreases afterwards.
    if !holds(4) {
        for n in [3u64, 2] {
            if holds(n) {
                return n;
            }
        }
        return 1;
    }
    let mut lo = 4u64; // predicate holds
    let mut hi = (4.0 * c0 * c0).ceil().clamp(8.0, 1e18) as u64; // predicate fails
    debug_assert!(!holds(hi));
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sampling without replacement: the sum V of k draws chosen uniformly
/// without replacement from n independent source variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrsSpec {
    n: usize,
    k: usize,
    y: Vec<CellDistribution>,
}

#[derive(Deserialize)]
struct RawSrsSpec {
    n: usize,
    k: usize,
    y: Vec<CellDistribution>,
}

impl<'de> Deserialize<'de> for SrsSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSrsSpec::deserialize(deserializer)?;
        SrsSpec::new(raw.n, raw.k, raw.y).map_err(serde::de::Error::custom)
    }
}

/// Derived per-source moments of an [`SrsSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrsMoments {
    pub mu: Vec<f64>,
    pub sigma2_i: Vec<f64>,
    pub mu_bar: f64,
    /// Var(V) = (k/n) sum sigma_i^2 + k(n-k)/(n(n-1)) sum (mu_i - mu_bar)^2.
    pub sigma2: f64,
}

impl SrsSpec {
    pub fn new(n: usize, k: usize, y: Vec<CellDistribution>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Schema(format!("need n >= 2, got {n}")));
        }
        if k == 0 || k > n {
            return Err(Error::Schema(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        if y.len() != n {
            return Err(Error::Schema(format!("expected {n} source variables, got {}", y.len())));
        }
        for cell in &y {
            cell.validate()?;
        }
        Ok(Self { n, k, y })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sources(&self) -> &[CellDistribution] {
        &self.y
    }

    pub fn moments(&self) -> Result<SrsMoments> {
        let mut mu = Vec::with_capacity(self.n);
        let mut sigma2_i = Vec::with_capacity(self.n);
        for cell in &self.y {
            let m = cell.moments()?;
            mu.push(m.mean);
            sigma2_i.push(m.var);
        }
        let nf = self.n as f64;
        let kf = self.k as f64;
        let mu_bar = mu.iter().sum::<f64>() / nf;
        let spread = mu.iter().map(|m| (m - mu_bar).powi(2)).sum::<f64>();
        let sigma2 =
            kf / nf * sigma2_i.iter().sum::<f64>() + kf * (nf - kf) / (nf * (nf - 1.0)) * spread;
        Ok(SrsMoments { mu, sigma2_i, mu_bar, sigma2 })
    }

    /// The square-array construction that realizes V as a permutation
    /// statistic: the first k rows are independent copies of the sources,
    /// the remaining rows are zero. The law of the permutation sum over this
    /// array equals the law of V.
    pub fn row_copy_array(&self) -> Result<ArraySpec> {
        let zero = CellDistribution::point(0.0);
        let cells = (0..self.n)
            .map(|i| {
                if i < self.k {
                    self.y.clone()
                } else {
                    vec![zero.clone(); self.n]
                }
            })
            .collect();
        ArraySpec::new(cells)
    }
}

/// The certified bound for the standardized sampling-without-replacement sum:
/// (451 / (n sigma^3)) [ k sum_i E|(k/n)(Y_i - mu_i) + ((n-k)/n)(Y_i - mu_bar)|^3
///                       + (n-k) sum_i |(k/n)(mu_i - mu_bar)|^3 ].
pub fn srs_bound(spec: &SrsSpec) -> Result<f64> {
    let m = spec.moments()?;
    if m.sigma2 <= crate::array::DEGENERATE_VAR_CUTOFF {
        return Err(Error::DegenerateVariance { var: m.sigma2 });
    }
    let nf = spec.n as f64;
    let kf = spec.k as f64;
    let mut random_part = 0.0;
    for (i, cell) in spec.y.iter().enumerate() {
        // (k/n)(Y - mu_i) + ((n-k)/n)(Y - mu_bar) = Y - (k mu_i + (n-k) mu_bar)/n
        let recentered = cell.clone().with_shift(cell.shift - (kf * m.mu[i] + (nf - kf) * m.mu_bar) / nf);
        random_part += recentered.moments()?.abs3;
    }
    let deterministic_part: f64 =
        m.mu.iter().map(|mu_i| (kf / nf * (mu_i - m.mu_bar)).abs().powi(3)).sum();
    Ok(CLT_CONSTANT / (nf * m.sigma2.powf(1.5)) * (kf * random_part + (nf - kf) * deterministic_part))
}
