//! Rescaled eigenvalue point processes.
//!
//! For a box of half-side `L` in dimension `d` and Hölder exponent `α`, the
//! microscopic window around a reference energy `E` for a macroscopic
//! interval `I = (a, b]` is `J = E + β_L^{-1} I` with `β_L = (2L+1)^{d/α}`.
//! `ξ(I)` counts eigenvalues of `H_Λ` in `J`, `η_p(I)` those of the block
//! compressions `H_{C_p}`.
//!
//! Ensembles draw realization `i` from `RandomStream::for_realization(seed, i)`
//! and gather results by index, so output is independent of the worker count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{assemble_hamiltonian, restrict_to_block, CubeGeometry, HamiltonianSpec, Hopping, SparseHamiltonian};
use crate::measures::SingleSiteDistribution;
use crate::quadrature::tanh_sinh;
use crate::rng::RandomStream;
use crate::spectral::{EigenCounter, SpectralWindow, WindowCount};

/// `β_L = (2L+1)^{d/α}`.
pub fn beta_scale(l: usize, d: usize, alpha: f64) -> Result<f64> {
    if l == 0 || d == 0 {
        return Err(Error::InvalidArgument("L and d must be at least 1".into()));
    }
    check_alpha(alpha)?;
    Ok(((2 * l + 1) as f64).powf(d as f64 / alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledWindow {
    pub energy: f64,
    /// Macroscopic interval `(a, b]`.
    pub interval: (f64, f64),
    pub half_side: usize,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Microscopic window `E + β^{-1} I`.
    pub window: SpectralWindow,
}

impl RescaledWindow {
    pub fn new(energy: f64, a: f64, b: f64, l: usize, d: usize, alpha: f64) -> Result<Self> {
        if a > b {
            return Err(Error::ArgumentOrder { a, b });
        }
        let beta = beta_scale(l, d, alpha)?;
        let width = (b - a) / beta;
        if b > a && width < 1e-300 {
            return Err(Error::WindowUnderflow(width));
        }
        let window = SpectralWindow::new(energy + a / beta, energy + b / beta)?;
        Ok(Self {
            energy,
            interval: (a, b),
            half_side: l,
            d,
            alpha,
            beta,
            window,
        })
    }

    /// Map an eigenvalue to microscopic units `β (λ − E)`.
    pub fn to_microscopic(&self, lambda: f64) -> f64 {
        self.beta * (lambda - self.energy)
    }
}

/// `𝓛_α((a, b]) = α 2^{α−1} ∫_a^b |y|^{α−1} dy = 2^{α−1} (sgn(b)|b|^α − sgn(a)|a|^α)`.
pub fn l_alpha(alpha: f64, a: f64, b: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if a > b {
        return Err(Error::ArgumentOrder { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let signed_pow = |x: f64| x.signum() * x.abs().powf(alpha);
    Ok(2f64.powf(alpha - 1.0) * (signed_pow(b) - signed_pow(a)))
}

/// `𝓛_α` by tanh-sinh quadrature of the defining integral, split at 0.
pub fn l_alpha_quadrature(alpha: f64, a: f64, b: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if a > b {
        return Err(Error::ArgumentOrder { a, b });
    }
    let f = |y: f64| y.abs().powf(alpha - 1.0);
    let integral = if a < 0.0 && b > 0.0 {
        tanh_sinh(f, a, 0.0, 1e-15) + tanh_sinh(f, 0.0, b, 1e-15)
    } else {
        tanh_sinh(f, a, b, 1e-15)
    };
    Ok(alpha * 2f64.powf(alpha - 1.0) * integral)
}

pub fn xi_count(h: &SparseHamiltonian, rw: &RescaledWindow) -> Result<WindowCount> {
    EigenCounter::new(h).count_in_window(&rw.window)
}

/// Per-block counts of `H_{C_p}` in the same microscopic window.
pub fn eta_counts(h: &SparseHamiltonian, geom: &CubeGeometry, rw: &RescaledWindow) -> Result<Vec<WindowCount>> {
    (0..geom.n_blocks())
        .map(|p| {
            let hb = restrict_to_block(h, geom, p)?;
            EigenCounter::new(&hb).count_in_window(&rw.window)
        })
        .collect()
}

/// Runs `f(i)` for `i in 0..n` on `workers` threads (the global pool when
/// `None`), returning results in index order.
pub fn par_map_indexed<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Disorder `ω` for realization `index`.
pub fn realization_disorder(dist: &SingleSiteDistribution, volume: usize, master_seed: u64, index: usize) -> Vec<f64> {
    let mut stream = RandomStream::for_realization(master_seed, index as u64);
    let mut omega = vec![0.0; volume];
    dist.sample_into(&mut omega, &mut stream);
    omega
}

pub fn realization_hamiltonian(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    master_seed: u64,
    index: usize,
) -> Result<SparseHamiltonian> {
    let omega = realization_disorder(dist, geom.volume(), master_seed, index);
    assemble_hamiltonian(spec, geom, &omega)
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig<'a> {
    pub spec: HamiltonianSpec,
    pub dist: &'a SingleSiteDistribution,
    pub geom: &'a CubeGeometry,
    pub window: RescaledWindow,
    pub n_real: usize,
    pub master_seed: u64,
    pub record_eta: bool,
    pub workers: Option<usize>,
}

impl EnsembleConfig<'_> {
    /// FNV-1a of a canonical description of everything that determines the counts.
    pub fn config_hash(&self) -> u64 {
        let text = format!(
            "{:?}|{:?}|d={} L={} N={} l={}|{:?}|n={}|seed={}|eta={}",
            self.spec,
            self.dist,
            self.geom.d,
            self.geom.half_side,
            self.geom.params.n_blocks_per_side,
            self.geom.params.interior_margin,
            self.window,
            self.n_real,
            self.master_seed,
            self.record_eta
        );
        fnv1a(text.as_bytes())
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEnsemble {
    pub xi: Vec<u64>,
    /// `eta[i][p]`: count of block `p` in realization `i`.
    pub eta: Option<Vec<Vec<u64>>>,
    pub config_hash: u64,
    pub master_seed: u64,
    /// Realizations in which the jitter protocol moved an endpoint.
    pub jitter_events: usize,
}

impl CountEnsemble {
    pub fn n_real(&self) -> usize {
        self.xi.len()
    }

    pub fn eta_sums(&self) -> Option<Vec<u64>> {
        self.eta.as_ref().map(|eta| eta.iter().map(|row| row.iter().sum()).collect())
    }

    pub fn mean_xi(&self) -> f64 {
        self.xi.iter().sum::<u64>() as f64 / self.xi.len().max(1) as f64
    }
}

pub fn run_ensemble(cfg: &EnsembleConfig<'_>) -> Result<CountEnsemble> {
    if cfg.n_real == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    let rows = par_map_indexed(cfg.n_real, cfg.workers, |i| {
        let h = realization_hamiltonian(&cfg.spec, cfg.dist, cfg.geom, cfg.master_seed, i)?;
        let xi = xi_count(&h, &cfg.window)?;
        let mut jitter = xi.jitter > 0.0;
        let eta = if cfg.record_eta {
            let counts = eta_counts(&h, cfg.geom, &cfg.window)?;
            jitter |= counts.iter().any(|c| c.jitter > 0.0);
            Some(counts.iter().map(|c| c.count as u64).collect::<Vec<u64>>())
        } else {
            None
        };
        Ok((xi.count as u64, eta, jitter))
    })?;
    let jitter_events = rows.iter().filter(|r| r.2).count();
    let xi = rows.iter().map(|r| r.0).collect();
    let eta = if cfg.record_eta {
        Some(rows.into_iter().map(|r| r.1.unwrap_or_default()).collect())
    } else {
        None
    };
    Ok(CountEnsemble {
        xi,
        eta,
        config_hash: cfg.config_hash(),
        master_seed: cfg.master_seed,
        jitter_events,
    })
}

/// Per-realization eigenvalues inside the microscopic window, in microscopic
/// units `β(λ − E)`, ascending.
pub fn run_window_spectra(cfg: &EnsembleConfig<'_>) -> Result<Vec<Vec<f64>>> {
    let tol = 1e-9 / cfg.window.beta;
    par_map_indexed(cfg.n_real, cfg.workers, |i| {
        let h = realization_hamiltonian(&cfg.spec, cfg.dist, cfg.geom, cfg.master_seed, i)?;
        let eig = EigenCounter::new(&h).eigenvalues_in_window(&cfg.window.window, tol)?;
        Ok(eig.into_iter().map(|e| cfg.window.to_microscopic(e)).collect())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsEstimate {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_real: usize,
}

/// `𝓝̂(E) = 𝔼[#{λ ≤ E}] / |Λ|` on a sorted grid.
pub fn ids_estimate(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    energies: &[f64],
    n_real: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<IdsEstimate> {
    if n_real == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    if energies.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("energy grid must be sorted".into()));
    }
    let volume = geom.volume() as f64;
    let rows = par_map_indexed(n_real, workers, |i| {
        let h = realization_hamiltonian(spec, dist, geom, master_seed, i)?;
        let counter = EigenCounter::new(&h);
        energies
            .iter()
            .map(|&e| counter.count_at_most(e).map(|c| c.0 as f64 / volume))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut values = vec![0.0; energies.len()];
    let mut stderr = vec![0.0; energies.len()];
    for j in 0..energies.len() {
        let (mean, se) = mean_and_stderr(rows.iter().map(|r| r[j]));
        values[j] = mean;
        stderr[j] = se;
    }
    Ok(IdsEstimate {
        energies: energies.to_vec(),
        values,
        stderr,
        n_real,
    })
}

/// Sample mean and its standard error (0 for a single sample).
pub fn mean_and_stderr<I: IntoIterator<Item = f64>>(samples: I) -> (f64, f64) {
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in samples {
        n += 1;
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    if n < 2 {
        return (mean, 0.0);
    }
    let var = m2 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Where `𝓝` comes from when forming α-derivative ratios.
#[derive(Debug, Clone, Copy)]
pub enum IdsSource<'a> {
    /// `H_0 = 0`: the IDS is the law of `coupling · ω`.
    ExactCdf {
        dist: &'a SingleSiteDistribution,
        coupling: f64,
    },
    /// Linear interpolation of a Monte Carlo estimate.
    MonteCarlo(&'a IdsEstimate),
}

impl IdsSource<'_> {
    /// `𝓝((E − ε, E + ε))`.
    fn open_interval_mass(&self, e: f64, eps: f64) -> f64 {
        match self {
            IdsSource::ExactCdf { dist, coupling } => {
                (dist.cdf_left((e + eps) / coupling) - dist.cdf((e - eps) / coupling)).max(0.0)
            }
            IdsSource::MonteCarlo(ids) => (interpolate(ids, e + eps) - interpolate(ids, e - eps)).max(0.0),
        }
    }

    fn check_resolution(&self, e: f64, eps_min: f64, eps_max: f64) -> Result<()> {
        let IdsSource::MonteCarlo(ids) = self else {
            return Ok(());
        };
        let grid = &ids.energies;
        let (lo, hi) = (e - eps_max, e + eps_max);
        if grid.len() < 2 || lo < grid[0] || hi > grid[grid.len() - 1] {
            return Err(Error::Resolution(format!(
                "IDS grid does not cover [{lo}, {hi}]"
            )));
        }
        let spacing = grid
            .windows(2)
            .filter(|w| w[1] >= lo && w[0] <= hi)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        if eps_min < spacing {
            return Err(Error::Resolution(format!(
                "eps_min = {eps_min} is below the IDS grid spacing {spacing}"
            )));
        }
        Ok(())
    }
}

fn interpolate(ids: &IdsEstimate, x: f64) -> f64 {
    let g = &ids.energies;
    match g.iter().position(|&e| e >= x) {
        Some(0) => ids.values[0],
        None => ids.values[g.len() - 1],
        Some(j) => {
            let t = (x - g[j - 1]) / (g[j] - g[j - 1]);
            ids.values[j - 1] + t * (ids.values[j] - ids.values[j - 1])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaDerivative {
    pub energy: f64,
    pub alpha: f64,
    pub epsilons: Vec<f64>,
    pub ratios: Vec<f64>,
    pub d_lower: f64,
    pub d_upper: f64,
    pub smallest_epsilon: f64,
}

/// Ratios `𝓝((E−ε, E+ε)) / (2ε)^α` on an explicit ladder of `ε`.
pub fn alpha_derivative_ladder(source: &IdsSource<'_>, energy: f64, alpha: f64, epsilons: &[f64]) -> Result<AlphaDerivative> {
    check_alpha(alpha)?;
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("epsilons must be positive and nonempty".into()));
    }
    let eps_min = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let eps_max = epsilons.iter().copied().fold(0.0, f64::max);
    source.check_resolution(energy, eps_min, eps_max)?;
    let ratios: Vec<f64> = epsilons
        .iter()
        .map(|&eps| source.open_interval_mass(energy, eps) / (2.0 * eps).powf(alpha))
        .collect();
    Ok(AlphaDerivative {
        energy,
        alpha,
        epsilons: epsilons.to_vec(),
        d_lower: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        d_upper: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        smallest_epsilon: eps_min,
    })
}

/// Dyadic ladder `ε_k = eps_max · 2^{−k}` down to `eps_min`.
pub fn alpha_upper_derivative(source: &IdsSource<'_>, energy: f64, alpha: f64, eps_min: f64, eps_max: f64) -> Result<AlphaDerivative> {
    if !(eps_min > 0.0 && eps_min <= eps_max) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eps_min <= eps_max, got {eps_min}, {eps_max}"
        )));
    }
    let mut epsilons = Vec::new();
    let mut eps = eps_max;
    while eps >= eps_min {
        epsilons.push(eps);
        eps *= 0.5;
    }
    alpha_derivative_ladder(source, energy, alpha, &epsilons)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParameter {
    pub value: f64,
    /// `I = −I`; the limit theorem's intensity formula is stated for this case.
    pub symmetric: bool,
}

/// Poisson intensity `D · 𝓛_α(I)`.
pub fn gamma_parameter(d_upper: f64, alpha: f64, a: f64, b: f64) -> Result<GammaParameter> {
    if !(d_upper >= 0.0) {
        return Err(Error::InvalidArgument(format!("D must be nonnegative, got {d_upper}")));
    }
    Ok(GammaParameter {
        value: d_upper * l_alpha(alpha, a, b)?,
        symmetric: a == -b,
    })
}

/// Whether `spec` admits the exact-CDF IDS shortcut.
pub fn exact_ids_available(spec: &HamiltonianSpec) -> bool {
    spec.hopping == Hopping::None
}
