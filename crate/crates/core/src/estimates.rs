//! Monte Carlo verifiers for the Wegner, Minami and diagonal Green bounds,
//! and an empirical scan of fractional-moment decay.
//!
//! Every verifier reports an estimate of the left side with its standard
//! error and passes when `lhs − 3·stderr ≤ rhs`. The inequalities are
//! theorems, so a failure at that margin points at a bug.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CubeGeometry, HamiltonianSpec, Hopping};
use crate::measures::{AffineMap, SingleSiteDistribution};
use crate::processes::{mean_and_stderr, par_map_indexed, realization_disorder, realization_hamiltonian};
use crate::rng::RandomStream;
use crate::spectral::{green_column, EigenCounter, GreenSolver, SpectralWindow};

/// Standard errors subtracted from the estimate before comparing.
pub const PASS_SIGMAS: f64 = 3.0;

/// Smallest `Im z` accepted by the fractional-moment scan.
pub const IM_Z_FLOOR: f64 = 1e-4;

/// Moments below this are treated as exact zeros.
pub const MOMENT_ZERO: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs_estimate: f64,
    pub lhs_stderr: f64,
    pub rhs_value: f64,
    pub pass: bool,
    pub interval: Option<(f64, f64)>,
    pub z: Option<Complex64>,
    pub volume: usize,
    pub n_real: usize,
}

impl InequalityReport {
    /// Builds a report and applies the pass rule.
    pub fn new(
        name: &str,
        (lhs_estimate, lhs_stderr): (f64, f64),
        rhs_value: f64,
        interval: Option<(f64, f64)>,
        z: Option<Complex64>,
        volume: usize,
        n_real: usize,
    ) -> Self {
        Self {
            name: name.to_string(),
            lhs_estimate,
            lhs_stderr,
            rhs_value,
            pass: lhs_estimate - PASS_SIGMAS * lhs_stderr <= rhs_value,
            interval,
            z,
            volume,
            n_real,
        }
    }
}

fn require_realizations(n_real: usize, min: usize, what: &str) -> Result<()> {
    if n_real < min {
        return Err(Error::InsufficientData(format!(
            "{what} needs at least {min} realizations, got {n_real}"
        )));
    }
    Ok(())
}

fn window_counts(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    interval: (f64, f64),
    n_real: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    let window = SpectralWindow::new(interval.0, interval.1)?;
    par_map_indexed(n_real, workers, |i| {
        let h = realization_hamiltonian(spec, dist, geom, seed, i)?;
        Ok(EigenCounter::new(&h).count_in_window(&window)?.count as f64)
    })
}

/// `Q` of the coupled law at `|I|`, which is 0 for an empty interval.
fn q_of_interval(spec: &HamiltonianSpec, dist: &SingleSiteDistribution, interval: (f64, f64)) -> Result<f64> {
    let width = interval.1 - interval.0;
    if width == 0.0 {
        return Ok(0.0);
    }
    dist.scaled_q_mu(width, spec.coupling)
}

/// `𝔼 Tr E_{H_Λ}(I) ≤ Q(|I|) |Λ|`.
pub fn wegner_check(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    interval: (f64, f64),
    n_real: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<InequalityReport> {
    require_realizations(n_real, 100, "wegner_check")?;
    let counts = window_counts(spec, dist, geom, interval, n_real, seed, workers)?;
    let rhs = q_of_interval(spec, dist, interval)? * geom.volume() as f64;
    Ok(InequalityReport::new(
        "wegner",
        mean_and_stderr(counts),
        rhs,
        Some(interval),
        None,
        geom.volume(),
        n_real,
    ))
}

/// Single-site version `ℙ(λω ∈ I) ≤ Q(|I|)`.
pub fn site_wegner_check(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    interval: (f64, f64),
    n_real: usize,
    seed: u64,
) -> Result<InequalityReport> {
    require_realizations(n_real, 100, "site_wegner_check")?;
    let window = SpectralWindow::new(interval.0, interval.1)?;
    let hits = (0..n_real).map(|i| {
        let v = spec.coupling * realization_disorder(dist, 1, seed, i)[0];
        if window.contains(v) {
            1.0
        } else {
            0.0
        }
    });
    Ok(InequalityReport::new(
        "site_wegner",
        mean_and_stderr(hits),
        q_of_interval(spec, dist, interval)?,
        Some(interval),
        None,
        1,
        n_real,
    ))
}

/// `𝔼 Tr E (Tr E − 1) ≤ (Q(|I|) |Λ|)²`.
pub fn minami_check(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    interval: (f64, f64),
    n_real: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<InequalityReport> {
    require_realizations(n_real, 1000, "minami_check")?;
    let counts = window_counts(spec, dist, geom, interval, n_real, seed, workers)?;
    let rhs = (q_of_interval(spec, dist, interval)? * geom.volume() as f64).powi(2);
    Ok(InequalityReport::new(
        "minami",
        mean_and_stderr(counts.iter().map(|k| k * (k - 1.0))),
        rhs,
        Some(interval),
        None,
        geom.volume(),
        n_real,
    ))
}

/// Up to `max_sites` evenly spaced sites of the cube, always including the centre.
pub fn sample_sites(geom: &CubeGeometry, max_sites: usize) -> Vec<usize> {
    let v = geom.volume();
    let k = max_sites.clamp(1, v);
    let mut sites: Vec<usize> = (0..k).map(|j| (j * v) / k + v / (2 * k)).collect();
    sites.push(geom.center());
    sites.sort_unstable();
    sites.dedup();
    sites
}

/// Sites sampled per realization by [`diagonal_green_bound`].
pub const GREEN_SITES: usize = 5;

/// `Im z · 𝔼 Im G(z; n, n) ≤ π (1 + k/2) S(2 Im z / k)`, averaged over a
/// sampled site set.
pub fn diagonal_green_bound(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    z: Complex64,
    k_param: f64,
    n_real: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<InequalityReport> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidArgument(format!("Im z must be positive, got {z}")));
    }
    if !(k_param > 0.0 && k_param.is_finite()) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k_param}")));
    }
    require_realizations(n_real, 1, "diagonal_green_bound")?;
    let sites = sample_sites(geom, GREEN_SITES);
    let per_real = par_map_indexed(n_real, workers, |i| {
        let h = realization_hamiltonian(spec, dist, geom, seed, i)?;
        let mut acc = 0.0;
        for &n in &sites {
            acc += green_column(&h, z, n, GreenSolver::Direct)?.values[n].im;
        }
        Ok(z.im * acc / sites.len() as f64)
    })?;
    let rhs = std::f64::consts::PI * (1.0 + k_param / 2.0) * dist.scaled_s_mu(2.0 * z.im / k_param, spec.coupling)?;
    Ok(InequalityReport::new(
        "diagonal_green",
        mean_and_stderr(per_real),
        rhs,
        None,
        Some(z),
        geom.volume(),
        n_real,
    ))
}

/// Site pairs `(n, m)` probed by the fractional-moment scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<(usize, usize)>,
}

impl PairSet {
    /// Pairs `(anchor + r e_1, anchor)` for each distance `r`.
    pub fn along_axis(geom: &CubeGeometry, anchor: usize, distances: &[usize]) -> Result<Self> {
        let base = geom.coords(anchor);
        let pairs = distances
            .iter()
            .map(|&r| {
                let mut x = base.clone();
                x[0] += r as i64;
                geom.index(&x)
                    .map(|n| (n, anchor))
                    .ok_or_else(|| Error::InvalidArgument(format!("distance {r} leaves the cube")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { pairs })
    }
}

/// The `z` grid `re + i·η` for every real part and every `η` in the defaults.
pub fn default_z_grid(real_parts: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::new();
    for &re in real_parts {
        for eta in [1e-1, 1e-2, 1e-3, 1e-4] {
            out.push(Complex64::new(re, eta));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub s: f64,
    pub distances: Vec<usize>,
    /// Worst case over the `z` grid of the sample mean of `|G|^s`.
    pub mean_moments: Vec<f64>,
    pub stderr: Vec<f64>,
    pub log_means: Vec<f64>,
    pub gamma_hat: f64,
    pub gamma_stderr: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    pub z_grid: Vec<Complex64>,
    pub n_real: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DecayOutcome {
    Fit(DecayFit),
    /// Every off-diagonal moment vanished; decay is faster than any exponential.
    ExactZero {
        s: f64,
        distances: Vec<usize>,
        max_moment: f64,
    },
}

/// Per-distance moments before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub distances: Vec<usize>,
    pub mean_moments: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// `max_z 𝔼̂ |G(z; n, m)|^s` for each pair, grouped by `ℓ¹` distance (pairs
/// at equal distance are averaged).
pub fn fractional_moments(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    s: f64,
    pairs: &PairSet,
    z_grid: &[Complex64],
    n_real: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<MomentTable> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s must lie in (0, 1), got {s}")));
    }
    if z_grid.is_empty() || z_grid.iter().any(|z| !(z.im >= IM_Z_FLOOR)) {
        return Err(Error::InvalidArgument(format!(
            "z grid must be nonempty with Im z >= {IM_Z_FLOOR}"
        )));
    }
    if pairs.pairs.is_empty() {
        return Err(Error::InvalidArgument("empty pair set".into()));
    }
    require_realizations(n_real, 2, "fractional_moments")?;
    let v = geom.volume();
    for &(n, m) in &pairs.pairs {
        if n >= v || m >= v {
            return Err(Error::IndexOutOfRange { index: n.max(m), len: v });
        }
    }
    let l1 = |n: usize, m: usize| -> usize {
        geom.coords(n)
            .iter()
            .zip(geom.coords(m))
            .map(|(a, b)| (a - b).unsigned_abs() as usize)
            .sum()
    };
    let mut distances: Vec<usize> = pairs.pairs.iter().map(|&(n, m)| l1(n, m)).collect();
    distances.sort_unstable();
    distances.dedup();
    let slot: Vec<usize> = pairs
        .pairs
        .iter()
        .map(|&(n, m)| distances.binary_search(&l1(n, m)).unwrap())
        .collect();
    let per_slot: Vec<f64> = {
        let mut c = vec![0.0; distances.len()];
        for &j in &slot {
            c[j] += 1.0;
        }
        c
    };
    let mut anchors: Vec<usize> = pairs.pairs.iter().map(|p| p.1).collect();
    anchors.sort_unstable();
    anchors.dedup();

    // rows[i][zi][j]: realization i, grid point zi, distance slot j
    let rows = par_map_indexed(n_real, workers, |i| {
        let h = realization_hamiltonian(spec, dist, geom, seed, i)?;
        let mut out = vec![vec![0.0; distances.len()]; z_grid.len()];
        for (zi, &z) in z_grid.iter().enumerate() {
            for &m in &anchors {
                let col = green_column(&h, z, m, GreenSolver::Direct)?;
                for (pi, &(n, pm)) in pairs.pairs.iter().enumerate() {
                    if pm == m {
                        out[zi][slot[pi]] += col.values[n].norm().powf(s) / per_slot[slot[pi]];
                    }
                }
            }
        }
        Ok(out)
    })?;

    let mut mean_moments = vec![0.0; distances.len()];
    let mut stderr = vec![0.0; distances.len()];
    for j in 0..distances.len() {
        for zi in 0..z_grid.len() {
            let (mean, se) = mean_and_stderr(rows.iter().map(|r| r[zi][j]));
            if zi == 0 || mean > mean_moments[j] {
                mean_moments[j] = mean;
                stderr[j] = se;
            }
        }
    }
    Ok(MomentTable {
        distances,
        mean_moments,
        stderr,
    })
}

/// Least-squares fit of `ln 𝔼̂|G|^s = ln C − γ·dist` over the pair set.
pub fn fractional_moment_scan(
    spec: &HamiltonianSpec,
    dist: &SingleSiteDistribution,
    geom: &CubeGeometry,
    s: f64,
    pairs: &PairSet,
    z_grid: &[Complex64],
    n_real: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<DecayOutcome> {
    let table = fractional_moments(spec, dist, geom, s, pairs, z_grid, n_real, seed, workers)?;
    fit_decay(&table, s, z_grid, n_real)
}

/// The log-linear fit of a moment table, or the exact-zero flag when every
/// off-diagonal moment vanishes.
pub fn fit_decay(table: &MomentTable, s: f64, z_grid: &[Complex64], n_real: usize) -> Result<DecayOutcome> {
    let off_diagonal: Vec<f64> = table
        .distances
        .iter()
        .zip(&table.mean_moments)
        .filter(|(&r, _)| r > 0)
        .map(|(_, &m)| m)
        .collect();
    if !off_diagonal.is_empty() && off_diagonal.iter().all(|&m| m < MOMENT_ZERO) {
        return Ok(DecayOutcome::ExactZero {
            s,
            distances: table.distances.clone(),
            max_moment: off_diagonal.iter().copied().fold(0.0, f64::max),
        });
    }
    if table.mean_moments.iter().any(|&m| m < MOMENT_ZERO) {
        return Err(Error::InsufficientData(
            "some but not all moments vanish; no log-linear fit".into(),
        ));
    }
    if table.distances.len() < 3 {
        return Err(Error::InsufficientData("need at least three distances to fit".into()));
    }
    let x: Vec<f64> = table.distances.iter().map(|&r| r as f64).collect();
    let y: Vec<f64> = table.mean_moments.iter().map(|m| m.ln()).collect();
    let line = fit_line(&x, &y);
    Ok(DecayOutcome::Fit(DecayFit {
        s,
        distances: table.distances.clone(),
        mean_moments: table.mean_moments.clone(),
        stderr: table.stderr.clone(),
        log_means: y,
        gamma_hat: -line.slope,
        gamma_stderr: line.slope_stderr,
        c_hat: line.intercept.exp(),
        r_squared: line.r_squared,
        z_grid: z_grid.to_vec(),
        n_real,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}

/// One randomly drawn inequality configuration in `d = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityConfig {
    pub spec: HamiltonianSpec,
    pub dist: SingleSiteDistribution,
    pub half_side: usize,
    pub interval: (f64, f64),
    pub z: Complex64,
    pub k_param: f64,
}

/// Draws a configuration with `L ≤ max_l`, cycling the distribution family
/// by `index` so that every kind appears.
pub fn random_inequality_config(index: usize, max_l: usize, stream: &mut RandomStream) -> Result<InequalityConfig> {
    let u = |s: &mut RandomStream| s.next_f64();
    let dist = match index % 4 {
        0 => {
            let a = -1.0 + 2.0 * u(stream);
            SingleSiteDistribution::uniform(a, a + 0.2 + 2.0 * u(stream))?
        }
        1 => SingleSiteDistribution::bernoulli(0.1 + 0.8 * u(stream), 0.0, 0.5 + u(stream))?,
        2 => SingleSiteDistribution::cantor(),
        _ => {
            let w = 0.2 + 0.6 * u(stream);
            SingleSiteDistribution::ifs(vec![
                AffineMap { ratio: 0.25, offset: 0.0, weight: w },
                AffineMap { ratio: 0.25, offset: 0.75, weight: 1.0 - w },
            ])?
        }
    };
    let hopping = if u(stream) < 0.5 { Hopping::None } else { Hopping::LaplacianOffdiag };
    let coupling = 0.5 + 4.5 * u(stream);
    let spec = HamiltonianSpec::new(hopping, coupling)?;
    let half_side = 5 + (u(stream) * (max_l.max(6) - 5) as f64) as usize;

    let (lo, hi) = dist.support();
    let spread = spec.hopping_norm(1);
    let (e_lo, e_hi) = (coupling * lo - spread, coupling * hi + spread);
    let centre = e_lo + (e_hi - e_lo) * u(stream);
    let width = (e_hi - e_lo) * 10f64.powf(-3.0 * u(stream));
    let interval = (centre - width / 2.0, centre + width / 2.0);
    let z = Complex64::new(e_lo + (e_hi - e_lo) * u(stream), 10f64.powf(-3.0 * u(stream)));
    let k_param = [0.5, 1.0, 2.0][(u(stream) * 3.0) as usize % 3];
    Ok(InequalityConfig {
        spec,
        dist,
        half_side,
        interval,
        z,
        k_param,
    })
}
