use nalgebra::{DMatrix, DVector};
use ndarray::ArrayD;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::norms::{moment_functional, NormConfig};
use crate::error::{Error, Result};
use crate::index::{self, KronDims};
use crate::rng;
use crate::transforms::kron_materialize;

/// Number of bootstrap resamples behind each standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Largest `sum_j n_j` for which [`exact_moments`] enumerates sign patterns.
pub const MAX_EXACT_SIGNS: usize = 12;

/// Coefficients `A[L(i), L(i')] = B_{i +. i'} x_i x_{i'}` of a Rademacher chaos.
///
/// The column-major storage of `A` is the vectorized order-2d array with
/// dimensions `(n_1, ..., n_d, n_1, ..., n_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosCoefficients {
    dims: KronDims,
    matrix: DMatrix<f64>,
}

impl ChaosCoefficients {
    /// Raw coefficients, e.g. `Phi^T Phi - I` without any weighting.
    pub fn from_matrix(dims: KronDims, matrix: DMatrix<f64>) -> Result<Self> {
        let n = dims.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "coefficient matrix is {}x{}, expected {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(ChaosCoefficients { dims, matrix })
    }

    /// `diag(x) (Phi^T Phi - I) diag(x)` for the norm deviation of `Phi D_xi x`.
    pub fn from_operator(dims: KronDims, phi: &DMatrix<f64>, x: &[f64]) -> Result<Self> {
        let n = dims.total();
        if phi.ncols() != n || x.len() != n {
            return Err(Error::Shape(format!(
                "operator has {} columns and x has length {}, expected {n}",
                phi.ncols(),
                x.len()
            )));
        }
        let mut b = phi.transpose() * phi - DMatrix::identity(n, n);
        for c in 0..n {
            for r in 0..n {
                b[(r, c)] *= x[r] * x[c];
            }
        }
        Ok(ChaosCoefficients { dims, matrix: b })
    }

    pub fn zeros(dims: KronDims) -> Self {
        let n = dims.total();
        ChaosCoefficients {
            dims,
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn dims(&self) -> &KronDims {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The coefficients as an order-2d array.
    pub fn as_array(&self) -> ArrayD<f64> {
        index::devectorize(&self.dims.doubled(), self.matrix.as_slice())
            .expect("N x N matrix fills the doubled shape")
    }

    /// `E[xi^T A xi] = trace(A)`, since `xi_i^2 = 1`.
    pub fn coupled_mean(&self) -> f64 {
        self.matrix.trace()
    }
}

/// Which chaos to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChaosMode {
    /// `xi^T A xi - E[xi^T A xi]` with one sign vector per factor.
    Coupled,
    /// `xi^T A xi_bar` with an independent copy for the second index.
    Decoupled,
}

/// Estimated `L_p` norms `(E|X|^p)^(1/p)` with bootstrap standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentProfile {
    pub mode: ChaosMode,
    pub p_values: Vec<f64>,
    pub lp_norms: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

fn draw_signs<R: Rng + ?Sized>(rng: &mut R, dims: &KronDims) -> DVector<f64> {
    let factors: Vec<Vec<f64>> = dims.dims().iter().map(|&n| rng::rademacher_vec(rng, n)).collect();
    DVector::from_vec(kron_materialize(&factors).expect("at least one factor"))
}

fn check_p(p_values: &[f64]) -> Result<()> {
    if p_values.is_empty() || p_values.iter().any(|p| !(1.0..=10.0).contains(p)) {
        return Err(Error::Argument(format!("moment orders must lie in [1, 10], got {p_values:?}")));
    }
    Ok(())
}

/// Draws `trials` samples of the chaos; trial `t` uses the seed `derive_seed(seed, t)`.
pub fn sample_chaos(coeffs: &ChaosCoefficients, mode: ChaosMode, trials: usize, seed: u64) -> Vec<f64> {
    let mean = coeffs.coupled_mean();
    (0..trials)
        .map(|t| {
            let mut r = rng::stream_rng(rng::derive_seed(seed, t as u64), 0);
            let xi = draw_signs(&mut r, &coeffs.dims);
            match mode {
                ChaosMode::Coupled => xi.dot(&(&coeffs.matrix * &xi)) - mean,
                ChaosMode::Decoupled => {
                    let xi_bar = draw_signs(&mut r, &coeffs.dims);
                    xi.dot(&(&coeffs.matrix * xi_bar))
                }
            }
        })
        .collect()
}

fn lp_norm(samples: &[f64], p: f64) -> f64 {
    let mean = samples.iter().map(|v| v.abs().powf(p)).sum::<f64>() / samples.len() as f64;
    mean.powf(1.0 / p)
}

/// Monte Carlo `L_p` norms of the chosen chaos for every `p` in `p_values`.
pub fn estimate_chaos_moments(
    coeffs: &ChaosCoefficients,
    mode: ChaosMode,
    p_values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MomentProfile> {
    check_p(p_values)?;
    if trials < 1000 {
        return Err(Error::Argument(format!("need at least 1000 trials, got {trials}")));
    }
    let samples = sample_chaos(coeffs, mode, trials, seed);
    let lp_norms: Vec<f64> = p_values.iter().map(|&p| lp_norm(&samples, p)).collect();

    let mut boot = rng::stream_rng(rng::derive_seed(seed, rng::labels::BOOTSTRAP), 0);
    let mut sums = vec![0.0; p_values.len()];
    let mut sq = vec![0.0; p_values.len()];
    let mut resample = vec![0.0; trials];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for v in resample.iter_mut() {
            *v = samples[boot.random_range(0..trials)];
        }
        for (k, &p) in p_values.iter().enumerate() {
            let est = lp_norm(&resample, p);
            sums[k] += est;
            sq[k] += est * est;
        }
    }
    let b = BOOTSTRAP_RESAMPLES as f64;
    let stderr = sums
        .iter()
        .zip(&sq)
        .map(|(s, q)| ((q - s * s / b) / (b - 1.0)).max(0.0).sqrt())
        .collect();
    Ok(MomentProfile {
        mode,
        p_values: p_values.to_vec(),
        lp_norms,
        stderr,
        trials,
        seed,
    })
}

/// All Kronecker sign vectors, one per pattern of the factor signs.
fn all_sign_vectors(dims: &KronDims) -> Vec<DVector<f64>> {
    let bits: usize = dims.dims().iter().sum();
    (0u64..1 << bits)
        .map(|mask| {
            let mut pos = 0;
            let factors: Vec<Vec<f64>> = dims
                .dims()
                .iter()
                .map(|&n| {
                    let f = (0..n)
                        .map(|k| if mask >> (pos + k) & 1 == 1 { -1.0 } else { 1.0 })
                        .collect();
                    pos += n;
                    f
                })
                .collect();
            DVector::from_vec(kron_materialize(&factors).expect("at least one factor"))
        })
        .collect()
}

/// Exact `L_p` norms by enumerating every sign pattern of the factors.
///
/// Costs `2^(sum n_j)` quadratic forms (coupled) or `4^(sum n_j)` inner
/// products (decoupled).
pub fn exact_moments(coeffs: &ChaosCoefficients, mode: ChaosMode, p_values: &[f64]) -> Result<Vec<f64>> {
    check_p(p_values)?;
    let bits: usize = coeffs.dims.dims().iter().sum();
    if bits > MAX_EXACT_SIGNS {
        return Err(Error::Budget(format!(
            "{bits} sign variables exceed the enumeration budget of {MAX_EXACT_SIGNS}"
        )));
    }
    let signs = all_sign_vectors(&coeffs.dims);
    let mean = coeffs.coupled_mean();
    let mut sums = vec![0.0; p_values.len()];
    let mut count = 0usize;
    let mut add = |v: f64| {
        for (s, &p) in sums.iter_mut().zip(p_values) {
            *s += v.abs().powf(p);
        }
        count += 1;
    };
    match mode {
        ChaosMode::Coupled => {
            for xi in &signs {
                add(xi.dot(&(&coeffs.matrix * xi)) - mean);
            }
        }
        ChaosMode::Decoupled => {
            for xi in &signs {
                let w = coeffs.matrix.tr_mul(xi);
                for xi_bar in &signs {
                    add(w.dot(xi_bar));
                }
            }
        }
    }
    Ok(sums
        .iter()
        .zip(p_values)
        .map(|(s, p)| (s / count as f64).powf(1.0 / p))
        .collect())
}

/// Ratios `||X||_{L_p} / m_p(A)` for a measured profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRatioFit {
    pub p_values: Vec<f64>,
    pub lp_norms: Vec<f64>,
    pub m_p: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Smallest constant `C` with `||X||_{L_p} <= C m_p(A)` on this profile.
    pub fitted_constant: f64,
}

/// Compares a moment profile against `m_p` of the order-2d coefficient array.
///
/// The fitted constant is purely empirical; no value is known to compare it with.
pub fn fit_moment_constant(
    coeffs: &ChaosCoefficients,
    profile: &MomentProfile,
    cfg: &NormConfig,
) -> Result<MomentRatioFit> {
    let array = coeffs.as_array();
    let m_p = profile
        .p_values
        .iter()
        .map(|&p| moment_functional(&array, p, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = profile
        .lp_norms
        .iter()
        .zip(&m_p)
        .map(|(l, m)| if *m > 0.0 { l / m } else { 0.0 })
        .collect();
    let fitted_constant = ratios.iter().copied().fold(0.0, f64::max);
    log::info!("moment bound fit: constant {fitted_constant:.4} over p = {:?}", profile.p_values);
    Ok(MomentRatioFit {
        p_values: profile.p_values.clone(),
        lp_norms: profile.lp_norms.clone(),
        m_p,
        ratios,
        fitted_constant,
    })
}
