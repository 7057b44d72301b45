//! Numerical laboratory for the Anderson model with singular single-site
//! disorder.
//!
//! The crate builds finite-volume Hamiltonians `H = H_0 + λ Σ ω_j P_j` on
//! cubes of `Z^d`, counts eigenvalues in rescaled microscopic windows
//! `E + β_L^{-1} I` with `β_L = (2L+1)^{d/α}`, and provides the statistical
//! machinery to compare those counts against Poisson laws. Alongside the
//! point-process code sit Monte Carlo verifiers for the Wegner and Minami
//! bounds, a diagonal Green-function bound, and an empirical fractional
//! moment decay scan.
//!
//! Module map:
//!
//! - [`measures`]: single-site distributions (uniform, Bernoulli, Cantor,
//!   separated IFS) with exact CDFs, sampling and the moduli `S_μ`, `Q_μ`.
//! - [`lattice`]: cube geometry, block partitions and sparse Hamiltonians.
//! - [`spectral`]: inertia / Sturm window counts, dense oracle eigenvalues,
//!   Green-function entries and the geometric resolvent identity.
//! - [`processes`]: `β_L`, `𝓛_α`, rescaled counts `ξ`, `η_p`, ensembles,
//!   IDS and α-derivative ladders.
//! - [`estimates`]: inequality verifiers and the fractional-moment scan.
//! - [`stats`]: PMFs, total variation, Poisson goodness of fit, spacings.

pub mod error;
pub mod estimates;
pub mod lattice;
pub mod measures;
pub mod processes;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use estimates::{DecayFit, DecayOutcome, InequalityReport};
pub use lattice::{
    CubeGeometry, HamiltonianSpec, Hopping, PartitionMode, ScaleParams, SparseHamiltonian,
};
pub use measures::{DistributionKind, HolderModulus, SingleSiteDistribution};
pub use processes::{AlphaDerivative, CountEnsemble, IdsEstimate, RescaledWindow};
pub use rng::RandomStream;
pub use spectral::{GreenQuery, SpectralWindow, WindowCount};
pub use stats::{Pmf, PoissonFitReport};

pub use num_complex::Complex64;
