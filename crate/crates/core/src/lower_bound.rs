//! Subspaces of `F_2^n` and the adversarial inputs that make subsampled
//! Hadamard sketches fail.
//!
//! A word `w` of `F_2^n` is stored as the integer whose binary expansion,
//! most significant bit first, lists the coordinates `w_1 ... w_n`. Vector
//! position `k` (1-based) of a length-`2^n` vector belongs to the word `k - 1`,
//! which matches the Hadamard sign rule `(-1)^{<j-1, k-1>}`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::KronDims;
use crate::rng::{self, labels};
use crate::transforms::{build_operator, kron_materialize};

/// Largest ambient dimension accepted for subspaces.
pub const MAX_FIELD_DIM: usize = 32;

const ZERO_TOL: f64 = 1e-12;

/// An `r`-dimensional subspace of `F_2^n` in reduced row-echelon form.
///
/// Rows are ordered by decreasing pivot (the most significant set bit), and
/// every pivot bit is clear in all other rows, so equal subspaces have equal bases.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gf2Subspace {
    n: usize,
    basis: Vec<u64>,
}

fn pivot(row: u64) -> u32 {
    63 - row.leading_zeros()
}

fn check_field_dim(n: usize) -> Result<()> {
    if n > MAX_FIELD_DIM {
        return Err(Error::Argument(format!(
            "ambient dimension {n} exceeds {MAX_FIELD_DIM}"
        )));
    }
    Ok(())
}

/// Reduced row-echelon form of the span of `rows`, dropping dependent rows.
fn reduce(rows: &[u64]) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::new();
    for &row in rows {
        let mut v = row;
        for &b in &basis {
            if v >> pivot(b) & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            let p = pivot(v);
            for b in basis.iter_mut() {
                if *b >> p & 1 == 1 {
                    *b ^= v;
                }
            }
            basis.push(v);
        }
    }
    basis.sort_unstable_by(|a, b| b.cmp(a));
    basis
}

impl Gf2Subspace {
    /// The span of `generators` inside `F_2^n`.
    pub fn span(n: usize, generators: &[u64]) -> Result<Self> {
        check_field_dim(n)?;
        if let Some(&g) = generators.iter().find(|&&g| n < 64 && g >> n != 0) {
            return Err(Error::Argument(format!("generator {g:#b} has more than {n} bits")));
        }
        Ok(Gf2Subspace {
            n,
            basis: reduce(generators),
        })
    }

    /// The zero subspace `{0}`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::span(n, &[])
    }

    /// All of `F_2^n`.
    pub fn full(n: usize) -> Result<Self> {
        let gens: Vec<u64> = (0..n).map(|b| 1u64 << b).collect();
        Self::span(n, &gens)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    /// `|V| = 2^r`.
    pub fn size(&self) -> usize {
        1 << self.dim()
    }

    pub fn contains(&self, word: u64) -> bool {
        let mut v = word;
        for &b in &self.basis {
            if v >> pivot(b) & 1 == 1 {
                v ^= b;
            }
        }
        v == 0
    }

    /// All elements, in increasing order.
    pub fn elements(&self) -> Vec<u64> {
        let mut out: Vec<u64> = (0..self.size() as u64)
            .map(|mask| {
                self.basis
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .fold(0, |acc, (_, b)| acc ^ b)
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Binary inner product `<a, b>_b`.
pub fn binary_dot(a: u64, b: u64) -> u32 {
    (a & b).count_ones() % 2
}

/// A uniformly random `r`-dimensional subspace of `F_2^n`.
///
/// Draws `r` random words until they are linearly independent.
pub fn random_subspace(n: usize, r: usize, seed: u64) -> Result<Gf2Subspace> {
    check_field_dim(n)?;
    if r > n {
        return Err(Error::Argument(format!("dimension r = {r} exceeds n = {n}")));
    }
    let mut g = rng::stream_rng(seed, 0);
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    loop {
        let rows: Vec<u64> = (0..r).map(|_| g.random::<u64>() & mask).collect();
        let basis = reduce(&rows);
        if basis.len() == r {
            return Ok(Gf2Subspace { n, basis });
        }
    }
}

/// Every `r`-dimensional subspace of `F_2^n`, one per reduced row-echelon pattern.
pub fn enumerate_subspaces(n: usize, r: usize) -> Result<Vec<Gf2Subspace>> {
    check_field_dim(n)?;
    if r > n {
        return Err(Error::Argument(format!("dimension r = {r} exceeds n = {n}")));
    }
    let mut out = Vec::new();
    // Pivot bit sets of size r; free bits of a row are the non-pivot bits below its pivot.
    for pivots in (0u64..1 << n).filter(|p| p.count_ones() as usize == r) {
        let rows: Vec<u32> = (0..n as u32).rev().filter(|b| pivots >> b & 1 == 1).collect();
        let free: Vec<Vec<u32>> = rows
            .iter()
            .map(|&p| (0..p).filter(|b| pivots >> b & 1 == 0).collect())
            .collect();
        let total_free: usize = free.iter().map(Vec::len).sum();
        for assignment in 0u64..1 << total_free {
            let mut bit = 0;
            let basis = rows
                .iter()
                .zip(&free)
                .map(|(&p, fs)| {
                    let mut row = 1u64 << p;
                    for &f in fs {
                        if assignment >> bit & 1 == 1 {
                            row |= 1 << f;
                        }
                        bit += 1;
                    }
                    row
                })
                .collect();
            out.push(Gf2Subspace { n, basis });
        }
    }
    Ok(out)
}

/// The unit-norm indicator of `V` in `R^{2^n}`.
pub fn indicator(v: &Gf2Subspace) -> Vec<f64> {
    let mut out = vec![0.0; 1 << v.n];
    let value = 1.0 / (v.size() as f64).sqrt();
    for w in v.elements() {
        out[w as usize] = value;
    }
    out
}

/// `V^perp = { w : <v, w>_b = 0 for all v in V }`.
pub fn orthogonal_complement(v: &Gf2Subspace) -> Gf2Subspace {
    let pivots: u64 = v.basis.iter().fold(0, |acc, &b| acc | 1 << pivot(b));
    let kernel: Vec<u64> = (0..v.n as u32)
        .filter(|f| pivots >> f & 1 == 0)
        .map(|f| {
            v.basis.iter().fold(1u64 << f, |w, &row| {
                if row >> f & 1 == 1 {
                    w | 1 << pivot(row)
                } else {
                    w
                }
            })
        })
        .collect();
    Gf2Subspace {
        n: v.n,
        basis: reduce(&kernel),
    }
}

/// Closed-form probability that subsampling misses the support of the adversarial vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FailureProbability {
    /// `(1 - s^{-d})^m`.
    pub exact: f64,
    /// `exp(-2 m / s^d)`.
    pub lower_bound: f64,
}

/// `(1 - s^{-d})^m` together with its lower bound `exp(-2m / s^d)`.
///
/// The bound uses `1 - x >= e^{-2x}` for `x <= 1/2`, hence `s^d >= 2` is required.
pub fn failure_probability_exact(s: u64, d: u32, m: u64) -> Result<FailureProbability> {
    let sd = (s as f64).powi(d as i32);
    if d == 0 || sd < 2.0 {
        return Err(Error::Domain(format!("s^d = {sd} must be at least 2")));
    }
    let x = 1.0 / sd;
    let exact = (m as f64 * (-x).ln_1p()).exp();
    let lower_bound = (-2.0 * m as f64 * x).exp();
    debug_assert!(lower_bound <= exact * (1.0 + 1e-12));
    Ok(FailureProbability { exact, lower_bound })
}

/// Monte Carlo estimate of `P(P_Omega y = 0)` for the adversarial input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalFailure {
    pub trials: usize,
    pub failures: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub closed_form: FailureProbability,
    /// Failing trials whose witness `D_xi x` was pushed through the operator.
    pub witnesses_checked: usize,
    /// Every checked witness had `| ||A x_hat||^2 - 1 | = 1`.
    pub witnesses_ok: bool,
}

/// Largest number of failing trials whose witness is verified explicitly.
pub const WITNESS_CHECKS: usize = 64;

/// Estimates the failure probability for `x = 1_{V_1} (x) ... (x) 1_{V_d}`, `V_j` random of dimension `r`.
///
/// `field_dims[j] = n_j`, so factor `j` has length `2^{n_j}`. Each trial draws a
/// fresh operator; a trial fails when every sampled entry of `y = H x` is zero.
/// For failing trials the witness `x_hat = D_xi x` (a member of the adversarial
/// set) satisfies `A x_hat = 0`, which is checked directly.
pub fn failure_probability_empirical(
    field_dims: &[usize],
    r: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalFailure> {
    if field_dims.is_empty() {
        return Err(Error::Argument("need at least one factor".into()));
    }
    if let Some(&n) = field_dims.iter().find(|&&n| n < r) {
        return Err(Error::Argument(format!("factor dimension n = {n} is below r = {r}")));
    }
    if trials == 0 || m == 0 {
        return Err(Error::Argument("trials and m must be positive".into()));
    }
    let d = field_dims.len();
    let subspaces = field_dims
        .iter()
        .enumerate()
        .map(|(j, &n)| random_subspace(n, r, rng::derive_path(seed, &[labels::SUBSPACES, j as u64])))
        .collect::<Result<Vec<_>>>()?;
    let dims = KronDims::new(field_dims.iter().map(|&n| 1usize << n).collect())?;
    let x = kron_materialize(&subspaces.iter().map(indicator).collect::<Vec<_>>())?;
    let y = kron_materialize(
        &subspaces
            .iter()
            .map(|v| indicator(&orthogonal_complement(v)))
            .collect::<Vec<_>>(),
    )?;
    let trial_seed = rng::derive_seed(seed, labels::TRIALS);
    let mut failures = 0;
    let mut witnesses_checked = 0;
    let mut witnesses_ok = true;
    for t in 0..trials {
        let op = build_operator(&dims, m, rng::derive_seed(trial_seed, t as u64))?;
        let missed = op.samples().rows().iter().all(|&row| y[row - 1].abs() <= ZERO_TOL);
        if missed {
            failures += 1;
            if witnesses_checked < WITNESS_CHECKS {
                let xi = op.signs().kron();
                let x_hat: Vec<f64> = x.iter().zip(&xi).map(|(a, s)| a * s).collect();
                let image = op.apply_dense(&x_hat)?;
                let deviation = (image.iter().map(|v| v * v).sum::<f64>() - 1.0).abs();
                witnesses_ok &= (deviation - 1.0).abs() <= 1e-9;
                witnesses_checked += 1;
            }
        }
    }
    let estimate = failures as f64 / trials as f64;
    let s = 1u64 << r;
    let closed_form = if (s as f64).powi(d as i32) >= 2.0 {
        failure_probability_exact(s, d as u32, m as u64)?
    } else {
        // r = 0: y = x is flat over F_2^n, so every row is in the support.
        FailureProbability {
            exact: 0.0,
            lower_bound: 0.0,
        }
    };
    Ok(EmpiricalFailure {
        trials,
        failures,
        estimate,
        stderr: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        closed_form,
        witnesses_checked,
        witnesses_ok,
    })
}

/// Sign-modulated Kronecker indicators `(D_{sigma_1} 1_{V_1}) (x) ... (x) (D_{sigma_d} 1_{V_d})`.
///
/// Only the signs on `V_j` matter, so a member is described by one sign per
/// element of each `V_j` (elements in increasing order) and the set has at
/// most `2^{sum_j |V_j|}` members. Members are built on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialSet {
    subspaces: Vec<Gf2Subspace>,
}

impl AdversarialSet {
    pub fn new(subspaces: Vec<Gf2Subspace>) -> Result<Self> {
        if subspaces.is_empty() {
            return Err(Error::Argument("need at least one subspace".into()));
        }
        Ok(AdversarialSet { subspaces })
    }

    /// Independent random subspaces of dimension `r[j]` in `F_2^{n_j}`.
    pub fn random(field_dims: &[usize], r: &[usize], seed: u64) -> Result<Self> {
        if field_dims.len() != r.len() {
            return Err(Error::Argument("need one subspace dimension per factor".into()));
        }
        let subspaces = field_dims
            .iter()
            .zip(r)
            .enumerate()
            .map(|(j, (&n, &rj))| random_subspace(n, rj, rng::derive_path(seed, &[labels::SUBSPACES, j as u64])))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subspaces)
    }

    pub fn subspaces(&self) -> &[Gf2Subspace] {
        &self.subspaces
    }

    pub fn dims(&self) -> Result<KronDims> {
        KronDims::new(self.subspaces.iter().map(|v| 1usize << v.ambient_dim()).collect())
    }

    /// `log2 |E| <= sum_j |V_j|`.
    pub fn log2_size_bound(&self) -> usize {
        self.subspaces.iter().map(Gf2Subspace::size).sum()
    }

    /// `prod_j |V_j|`, i.e. `s^d` when every `V_j` has dimension `r`.
    pub fn support_product(&self) -> usize {
        self.subspaces.iter().map(Gf2Subspace::size).product()
    }

    /// Factor vectors of the member with sign words `signs[j]` (bit `k` set
    /// means a minus sign on the `k`-th element of `V_j`).
    pub fn member(&self, signs: &[u64]) -> Result<Vec<Vec<f64>>> {
        if signs.len() != self.subspaces.len() {
            return Err(Error::Argument("need one sign word per factor".into()));
        }
        Ok(self
            .subspaces
            .iter()
            .zip(signs)
            .map(|(v, &word)| {
                let mut f = indicator(v);
                for (k, e) in v.elements().into_iter().enumerate() {
                    if word >> k & 1 == 1 {
                        f[e as usize] = -f[e as usize];
                    }
                }
                f
            })
            .collect())
    }

    /// The member `x_hat` with `D_xi x_hat = 1_{V_1} (x) ... (x) 1_{V_d}`.
    pub fn witness(&self, xi: &crate::transforms::RademacherFactors) -> Result<Vec<Vec<f64>>> {
        if xi.factors().len() != self.subspaces.len() {
            return Err(Error::Argument("sign factors do not match the subspaces".into()));
        }
        Ok(self
            .subspaces
            .iter()
            .zip(xi.factors())
            .map(|(v, signs)| indicator(v).iter().zip(signs).map(|(a, s)| a * s).collect())
            .collect())
    }

    /// Sign words per factor, one for each class of sign patterns modulo the
    /// signed characters `+-(-1)^{<a, v>}` of `V_j`.
    ///
    /// If the restriction of `xi^(j)` to `V_j` times the chosen pattern is a
    /// signed character on every factor, the Hadamard image of the member is
    /// supported on cosets of the `V_j^perp` and the sketch sees it only
    /// through `N / prod_j |V_j|` rows. Every `xi` matches exactly one
    /// combination of representatives.
    pub fn coset_representatives(&self) -> Vec<Vec<u64>> {
        self.subspaces
            .iter()
            .map(|v| {
                let els = v.elements();
                let s = els.len();
                let mut gens: Vec<u64> = (0..v.ambient_dim())
                    .map(|b| {
                        els.iter()
                            .enumerate()
                            .fold(0u64, |w, (k, &e)| w | (u64::from(binary_dot(1 << b, e)) << k))
                    })
                    .collect();
                gens.push(if s == 64 { u64::MAX } else { (1u64 << s) - 1 });
                let w = reduce(&gens);
                let pivots: u64 = w.iter().fold(0, |acc, &b| acc | 1 << pivot(b));
                let free: Vec<usize> = (0..s).filter(|&k| pivots >> k & 1 == 0).collect();
                (0u64..1 << free.len())
                    .map(|mask| {
                        free.iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .fold(0u64, |acc, (_, &k)| acc | 1 << k)
                    })
                    .collect()
            })
            .collect()
    }

    /// Members built from every combination of [`Self::coset_representatives`].
    pub fn covering_members(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        let reps = self.coset_representatives();
        let mut words: Vec<Vec<u64>> = vec![Vec::new()];
        for r in &reps {
            words = words
                .into_iter()
                .flat_map(|w| {
                    r.iter().map(move |&x| {
                        let mut w = w.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        words.iter().map(|w| self.member(w)).collect()
    }
}
