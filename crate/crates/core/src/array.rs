//! The independent random array behind the permutation statistic
//! W = sum_i X_{i,pi(i)}: per-cell distributions, moment extraction,
//! mean-centering and standardization to Var(W) = 1.

use crate::error::{Error, Result};
use crate::quad;
use crate::stein::normal_pdf;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

/// Row/column means must vanish to within this tolerance for an array to
/// count as centered (double-precision accumulation over up to 1e4 cells).
pub const CENTERING_TOL: f64 = 1e-10;

/// Variances below this cutoff are treated as degenerate when standardizing.
pub const DEGENERATE_VAR_CUTOFF: f64 = 1e-14;

/// Absolute tolerance for quadrature-computed third moments.
pub const ABS3_QUAD_TOL: f64 = 1e-10;

/// Evaluation budget for one adaptive quadrature call.
pub const ABS3_QUAD_BUDGET: usize = 1_000_000;

/// E|Z|^3 for a standard normal: 2*sqrt(2/pi).
const STD_NORMAL_ABS3: f64 = 1.595_769_121_605_730_7;

/// Distribution family of a single cell. All supported families have finite
/// third absolute moments by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CellFamily {
    /// Deterministic value.
    Point { value: f64 },
    /// `center + scale` or `center - scale`, each with probability 1/2.
    Rademacher {
        scale: f64,
        #[serde(default)]
        center: f64,
    },
    /// Continuous uniform on [lo, hi).
    Uniform { lo: f64, hi: f64 },
    /// Gaussian with the given mean and standard deviation.
    Normal { mean: f64, sd: f64 },
    /// Finite support given as (value, probability) atoms.
    Discrete { atoms: Vec<(f64, f64)> },
}

/// One independent cell of the array: a family plus an additive location
/// offset applied after sampling. Centering only ever touches the shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDistribution {
    #[serde(flatten)]
    pub family: CellFamily,
    #[serde(default)]
    pub shift: f64,
}

/// Mean, variance and E|X|^3 of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMoments {
    pub mean: f64,
    pub var: f64,
    pub abs3: f64,
}

impl CellDistribution {
    pub fn point(value: f64) -> Self {
        Self { family: CellFamily::Point { value }, shift: 0.0 }
    }

    pub fn rademacher(scale: f64, center: f64) -> Self {
        Self { family: CellFamily::Rademacher { scale, center }, shift: 0.0 }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self { family: CellFamily::Uniform { lo, hi }, shift: 0.0 }
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Self { family: CellFamily::Normal { mean, sd }, shift: 0.0 }
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Self {
        Self { family: CellFamily::Discrete { atoms }, shift: 0.0 }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Schema(format!("{what} must be finite, got {v}")))
            }
        };
        finite(self.shift, "shift")?;
        match &self.family {
            CellFamily::Point { value } => finite(*value, "point value"),
            CellFamily::Rademacher { scale, center } => {
                finite(*scale, "rademacher scale")?;
                finite(*center, "rademacher center")?;
                if *scale < 0.0 {
                    return Err(Error::Schema(format!("rademacher scale must be >= 0, got {scale}")));
                }
                Ok(())
            }
            CellFamily::Uniform { lo, hi } => {
                finite(*lo, "uniform lo")?;
                finite(*hi, "uniform hi")?;
                if lo >= hi {
                    return Err(Error::Schema(format!("uniform requires lo < hi, got [{lo}, {hi}]")));
                }
                Ok(())
            }
            CellFamily::Normal { mean, sd } => {
                finite(*mean, "normal mean")?;
                finite(*sd, "normal sd")?;
                if *sd < 0.0 {
                    return Err(Error::Schema(format!("normal sd must be >= 0, got {sd}")));
                }
                Ok(())
            }
            CellFamily::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Schema("discrete cell needs at least one atom".into()));
                }
                let mut total = 0.0;
                for &(v, p) in atoms {
                    finite(v, "discrete atom value")?;
                    finite(p, "discrete atom probability")?;
                    if p <= 0.0 {
                        return Err(Error::Schema(format!("discrete atom probability must be > 0, got {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Schema(format!(
                        "discrete atom probabilities sum to {total}, expected 1 within 1e-12"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Cell mean, always in closed form.
    pub fn mean(&self) -> f64 {
        self.shift
            + match &self.family {
                CellFamily::Point { value } => *value,
                CellFamily::Rademacher { center, .. } => *center,
                CellFamily::Uniform { lo, hi } => 0.5 * (lo + hi),
                CellFamily::Normal { mean, .. } => *mean,
                CellFamily::Discrete { atoms } => atoms.iter().map(|(v, p)| v * p).sum(),
            }
    }

    /// Mean, variance and absolute third moment.
    ///
    /// Mean and variance are closed form for every family. E|X|^3 is closed
    /// form except for uniform and Gaussian cells with nonzero effective
    /// mean, where it is computed by adaptive quadrature to absolute
    /// tolerance [`ABS3_QUAD_TOL`].
    pub fn moments(&self) -> Result<CellMoments> {
        let s = self.shift;
        match &self.family {
            CellFamily::Point { value } => {
                let v = value + s;
                Ok(CellMoments { mean: v, var: 0.0, abs3: v.abs().powi(3) })
            }
            CellFamily::Rademacher { scale, center } => {
                let m = center + s;
                let hi = (m + scale).abs().powi(3);
                let lo = (m - scale).abs().powi(3);
                Ok(CellMoments { mean: m, var: scale * scale, abs3: 0.5 * (hi + lo) })
            }
            CellFamily::Uniform { lo, hi } => {
                let (a, b) = (lo + s, hi + s);
                let mean = 0.5 * (a + b);
                let width = b - a;
                let var = width * width / 12.0;
                let abs3 = if mean == 0.0 {
                    // symmetric interval [-b, b]: E|X|^3 = b^3/4
                    b.powi(3) / 4.0
                } else {
                    integrate_abs3(&|_: f64| 1.0 / width, a, b)?
                };
                Ok(CellMoments { mean, var, abs3 })
            }
            CellFamily::Normal { mean, sd } => {
                let m = mean + s;
                if *sd == 0.0 {
                    return Ok(CellMoments { mean: m, var: 0.0, abs3: m.abs().powi(3) });
                }
                let abs3 = if m == 0.0 {
                    STD_NORMAL_ABS3 * sd.powi(3)
                } else {
                    let (sd, m0) = (*sd, m);
                    integrate_abs3(&move |x: f64| normal_pdf((x - m0) / sd) / sd, m - 40.0 * sd, m + 40.0 * sd)?
                };
                Ok(CellMoments { mean: m, var: sd * sd, abs3 })
            }
            CellFamily::Discrete { atoms } => {
                let mean: f64 = atoms.iter().map(|(v, p)| (v + s) * p).sum();
                let var: f64 = atoms.iter().map(|(v, p)| (v + s - mean).powi(2) * p).sum();
                let abs3: f64 = atoms.iter().map(|(v, p)| (v + s).abs().powi(3) * p).sum();
                Ok(CellMoments { mean, var, abs3 })
            }
        }
    }

    /// The cell scaled by `factor`: the law of `factor * X`.
    pub fn scaled(&self, factor: f64) -> Self {
        let family = match &self.family {
            CellFamily::Point { value } => CellFamily::Point { value: value * factor },
            CellFamily::Rademacher { scale, center } => CellFamily::Rademacher {
                scale: scale * factor.abs(),
                center: center * factor,
            },
            CellFamily::Uniform { lo, hi } => {
                let (a, b) = (lo * factor, hi * factor);
                CellFamily::Uniform { lo: a.min(b), hi: a.max(b) }
            }
            CellFamily::Normal { mean, sd } => CellFamily::Normal {
                mean: mean * factor,
                sd: sd * factor.abs(),
            },
            CellFamily::Discrete { atoms } => CellFamily::Discrete {
                atoms: atoms.iter().map(|&(v, p)| (v * factor, p)).collect(),
            },
        };
        Self { family, shift: self.shift * factor }
    }

    /// Draws one realization.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.shift
            + match &self.family {
                CellFamily::Point { value } => *value,
                CellFamily::Rademacher { scale, center } => {
                    if rng.random::<bool>() {
                        center + scale
                    } else {
                        center - scale
                    }
                }
                CellFamily::Uniform { lo, hi } => rng.random_range(*lo..*hi),
                CellFamily::Normal { mean, sd } => {
                    if *sd == 0.0 {
                        *mean
                    } else {
                        rand_distr::Normal::new(*mean, *sd).expect("validated sd").sample(rng)
                    }
                }
                CellFamily::Discrete { atoms } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for &(v, p) in atoms {
                        acc += p;
                        if u < acc {
                            return self.shift + v;
                        }
                    }
                    atoms.last().expect("validated nonempty").0
                }
            }
    }
}

fn integrate_abs3<F: Fn(f64) -> f64>(density: &F, a: f64, b: f64) -> Result<f64> {
    let g = |x: f64| x.abs().powi(3) * density(x);
    // split at the kink of |x|^3 when it lies inside the support
    if a < 0.0 && 0.0 < b {
        Ok(quad::integrate(&g, a, 0.0, 0.5 * ABS3_QUAD_TOL, ABS3_QUAD_BUDGET)?
            + quad::integrate(&g, 0.0, b, 0.5 * ABS3_QUAD_TOL, ABS3_QUAD_BUDGET)?)
    } else {
        quad::integrate(&g, a, b, ABS3_QUAD_TOL, ABS3_QUAD_BUDGET)
    }
}

/// The n-by-n array of independent cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArraySpec {
    n: usize,
    cells: Vec<Vec<CellDistribution>>,
}

#[derive(Deserialize)]
struct RawArraySpec {
    n: usize,
    cells: Vec<Vec<CellDistribution>>,
}

impl<'de> Deserialize<'de> for ArraySpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawArraySpec::deserialize(deserializer)?;
        if raw.cells.len() != raw.n || raw.cells.iter().any(|row| row.len() != raw.n) {
            return Err(serde::de::Error::custom(format!("cells grid is not {0}x{0}", raw.n)));
        }
        ArraySpec::new(raw.cells).map_err(serde::de::Error::custom)
    }
}

impl ArraySpec {
    /// Builds an array from a square grid of cells; validates every cell.
    pub fn new(cells: Vec<Vec<CellDistribution>>) -> Result<Self> {
        let n = cells.len();
        if n < 2 {
            return Err(Error::Schema(format!("array size must be >= 2, got {n}")));
        }
        for row in &cells {
            if row.len() != n {
                return Err(Error::Schema(format!(
                    "cells grid is not square: row of length {} in a {n}-row grid",
                    row.len()
                )));
            }
            for cell in row {
                cell.validate()?;
            }
        }
        Ok(Self { n, cells })
    }

    /// A deterministic array: every cell is a point mass from `matrix`.
    pub fn deterministic(matrix: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            matrix
                .iter()
                .map(|row| row.iter().map(|&v| CellDistribution::point(v)).collect())
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellDistribution {
        &self.cells[i][j]
    }

    pub fn cells(&self) -> &[Vec<CellDistribution>] {
        &self.cells
    }

    /// The matrix of cell means.
    pub fn mean_matrix(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.mean()).collect())
            .collect()
    }

    /// Computes all cell moments, Var(W) by the exact variance identity, and
    /// the third-moment parameter gamma = (1/n) sum E|X_ij|^3.
    ///
    /// The variance identity is valid only for centered arrays; the summary
    /// carries `centered_ok` so downstream consumers can gate on it.
    pub fn summarize(&self) -> Result<MomentSummary> {
        let n = self.n;
        let mut means = vec![vec![0.0; n]; n];
        let mut variances = vec![vec![0.0; n]; n];
        let mut abs_third = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let m = self.cells[i][j].moments()?;
                means[i][j] = m.mean;
                variances[i][j] = m.var;
                abs_third[i][j] = m.abs3;
            }
        }
        let var_sum: f64 = variances.iter().flatten().sum();
        let mean_sq_sum: f64 = means.iter().flatten().map(|c| c * c).sum();
        let var_w = var_sum / n as f64 + mean_sq_sum / (n as f64 - 1.0);
        let gamma = abs_third.iter().flatten().sum::<f64>() / n as f64;
        let max_mean_imbalance = mean_imbalance(&means);
        Ok(MomentSummary {
            n,
            means,
            variances,
            abs_third,
            var_w,
            gamma,
            max_mean_imbalance,
            centered_ok: max_mean_imbalance <= CENTERING_TOL,
        })
    }

    /// Recenters the array so that row and column means of the cell means
    /// vanish: each cell is shifted by -(row mean + column mean - grand mean).
    /// Cell variances are untouched.
    pub fn center(&self) -> Result<CenteredArray> {
        let n = self.n;
        let means = self.mean_matrix();
        let row_means: Vec<f64> = means.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
        let col_means: Vec<f64> =
            (0..n).map(|j| means.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let grand_mean = row_means.iter().sum::<f64>() / n as f64;

        let mut centered = self.clone();
        for (row, &row_mean) in centered.cells.iter_mut().zip(&row_means) {
            for (cell, &col_mean) in row.iter_mut().zip(&col_means) {
                cell.shift -= row_mean + col_mean - grand_mean;
            }
        }
        let imbalance = mean_imbalance(&centered.mean_matrix());
        if imbalance > CENTERING_TOL {
            return Err(Error::InternalCheck(format!(
                "centering left a residual mean imbalance of {imbalance:.3e}"
            )));
        }
        Ok(CenteredArray { spec: centered })
    }
}

/// Largest absolute row or column mean of a square matrix.
pub(crate) fn mean_imbalance(means: &[Vec<f64>]) -> f64 {
    let n = means.len();
    let mut worst: f64 = 0.0;
    for row in means {
        worst = worst.max((row.iter().sum::<f64>() / n as f64).abs());
    }
    for j in 0..n {
        worst = worst.max((means.iter().map(|r| r[j]).sum::<f64>() / n as f64).abs());
    }
    worst
}

/// An array whose cell-mean matrix has vanishing row and column means.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredArray {
    spec: ArraySpec,
}

impl CenteredArray {
    /// Wraps an already-centered array, verifying the centering invariant.
    pub fn new(spec: ArraySpec) -> Result<Self> {
        let imbalance = mean_imbalance(&spec.mean_matrix());
        if imbalance > CENTERING_TOL {
            return Err(Error::NotCentered { max_dev: imbalance, tol: CENTERING_TOL });
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &ArraySpec {
        &self.spec
    }

    pub fn into_spec(self) -> ArraySpec {
        self.spec
    }

    /// Rescales every cell by 1/sqrt(Var(W)) so the rescaled array has
    /// Var(W) = 1. Fails on degenerate variance.
    pub fn standardize(&self) -> Result<ArraySpec> {
        let summary = self.spec.summarize()?;
        if summary.var_w <= DEGENERATE_VAR_CUTOFF {
            return Err(Error::DegenerateVariance { var: summary.var_w });
        }
        let factor = 1.0 / summary.var_w.sqrt();
        let cells = self
            .spec
            .cells
            .iter()
            .map(|row| row.iter().map(|c| c.scaled(factor)).collect())
            .collect();
        ArraySpec::new(cells)
    }
}

/// Per-cell moment matrices plus the derived Var(W) and gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    /// Cell means c_ij.
    pub means: Vec<Vec<f64>>,
    /// Cell variances.
    pub variances: Vec<Vec<f64>>,
    /// Cell absolute third moments E|X_ij|^3.
    pub abs_third: Vec<Vec<f64>>,
    /// Var(W) = (1/n) sum variances + (1/(n-1)) sum means^2.
    pub var_w: f64,
    /// gamma = (1/n) sum E|X_ij|^3.
    pub gamma: f64,
    /// Largest |row mean| or |column mean| of the cell means.
    pub max_mean_imbalance: f64,
    /// Whether the centering assumption holds within [`CENTERING_TOL`].
    pub centered_ok: bool,
}
