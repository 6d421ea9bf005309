//! Kronecker fast Johnson-Lindenstrauss transform (KFJLT) and a set of
//! exhaustive / Monte Carlo oracles for the machinery behind its analysis.
//!
//! The embedding is `sqrt(N/m) * P_Omega * (H_{n_1} (x) ... (x) H_{n_d}) * D_xi`
//! where `xi` is a Kronecker product of independent Rademacher vectors and
//! `P_Omega` samples `m` rows uniformly with replacement.
//!
//! Modules:
//! - [`index`]: partial indices, linearization and vectorization of order-d arrays.
//! - [`transforms`]: FWHT, the KFJLT operator (dense and factored paths), Gaussian baseline.
//! - [`rip`]: exact restricted isometry constants at desk scale.
//! - [`sparsify`]: the per-fiber top-k split `x = sum_S x^(S)`.
//! - [`chaos`]: partitions, partition norms, Rademacher chaos moments.
//! - [`lower_bound`]: subspaces of F_2^n and the adversarial failure construction.
//! - [`harness`]: reproducible sweeps, reports and the self test.

pub mod chaos;
pub mod error;
pub mod harness;
pub mod index;
pub mod lower_bound;
pub mod rip;
pub mod rng;
pub mod sparsify;
pub mod transforms;

pub use error::{Error, Result};
pub use index::{AxisSet, FlatIndex, KronDims, PartialIndex};
pub use transforms::{KfjltOperator, RademacherFactors, SampleSet};
