//! Count-law statistics: empirical PMFs, total variation, Poisson
//! goodness of fit, factorial moments, `ξ` against `Σ_p η_p`, and
//! nearest-neighbour spacings.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::processes::CountEnsemble;
use crate::rng::RandomStream;

/// Chi-square bins are merged until each expects at least this many counts.
pub const CHI2_MIN_EXPECTED: f64 = 5.0;

/// Minimum sample size for [`poisson_gof`].
pub const GOF_MIN_SAMPLES: usize = 100;

/// Minimum pooled spacings for [`spacing_statistics`].
pub const MIN_SPACINGS: usize = 500;

/// Probability mass function on `0..probs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub probs: Vec<f64>,
}

impl Pmf {
    pub fn k_max(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

pub fn empirical_pmf(counts: &[u64]) -> Result<Pmf> {
    if counts.is_empty() {
        return Err(Error::InsufficientData("empty count vector".into()));
    }
    let k_max = *counts.iter().max().unwrap() as usize;
    let mut probs = vec![0.0; k_max + 1];
    for &k in counts {
        probs[k as usize] += 1.0;
    }
    let n = counts.len() as f64;
    probs.iter_mut().for_each(|p| *p /= n);
    Ok(Pmf { probs })
}

/// `P(X = k)` for `X ~ Poisson(λ)`.
pub fn poisson_prob(lambda: f64, k: usize) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// Poisson masses on `0..=k_max` (the tail beyond is left out).
pub fn poisson_pmf(lambda: f64, k_max: usize) -> Pmf {
    Pmf {
        probs: (0..=k_max).map(|k| poisson_prob(lambda, k)).collect(),
    }
}

/// `½ Σ_k |p_k − q_k|` with supports padded by zeros.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> f64 {
    let n = p.probs.len().max(q.probs.len());
    let s: f64 = (0..n).map(|k| (p.get(k) - q.get(k)).abs()).sum();
    (0.5 * s).clamp(0.0, 1.0)
}

/// TV between `p` and the full `Poisson(λ)` law, counting the Poisson tail
/// beyond the support of `p`.
pub fn tv_to_poisson(p: &Pmf, lambda: f64) -> f64 {
    let q = poisson_pmf(lambda, p.k_max());
    let inside: f64 = q.probs.iter().sum();
    let tail = (1.0 - inside).max(0.0);
    (0.5 * (p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>() + tail)).clamp(0.0, 1.0)
}

/// Mean of `k(k−1)…(k−r+1)`.
pub fn factorial_moment(counts: &[u64], r: u32) -> Result<f64> {
    if !(1..=3).contains(&r) {
        return Err(Error::InvalidArgument(format!("factorial moment order {r} not in 1..=3")));
    }
    if counts.is_empty() {
        return Err(Error::InsufficientData("empty count vector".into()));
    }
    let total: f64 = counts
        .iter()
        .map(|&k| (0..r).map(|j| k as f64 - j as f64).product::<f64>())
        .sum();
    Ok(total / counts.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub pvalue: f64,
    pub bins: usize,
}

/// Pearson chi-square of `counts` against `Poisson(λ)`. The last bin holds
/// the whole upper tail. Returns `None` when fewer than one degree of
/// freedom remains after merging.
pub fn poisson_chi_square(counts: &[u64], lambda: f64, fitted: bool) -> Option<ChiSquareResult> {
    let n = counts.len() as f64;
    let k_max = *counts.iter().max()? as usize;
    let mut observed = vec![0.0; k_max + 1];
    for &k in counts {
        observed[k as usize] += 1.0;
    }
    let mut expected: Vec<f64> = (0..=k_max).map(|k| n * poisson_prob(lambda, k)).collect();
    let below: f64 = expected[..k_max].iter().sum();
    expected[k_max] = (n - below).max(0.0);

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=k_max {
        o += observed[k];
        e += expected[k];
        if e >= CHI2_MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let dof = bins.len() as i64 - 1 - i64::from(fitted);
    if dof < 1 || bins.iter().any(|b| b.1 <= 0.0) {
        return None;
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let pvalue = ChiSquared::new(dof as f64).ok()?.sf(statistic).clamp(0.0, 1.0);
    Some(ChiSquareResult {
        statistic,
        dof: dof as usize,
        pvalue,
        bins: bins.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonFitReport {
    pub n: usize,
    pub lambda_hat: f64,
    pub lambda_hat_stderr: f64,
    pub lambda_theory: Option<f64>,
    pub tv_vs_hat: f64,
    pub tv_vs_theory: Option<f64>,
    pub chi2_statistic: Option<f64>,
    pub chi2_dof: Option<usize>,
    pub chi2_pvalue: Option<f64>,
    pub chi2_pvalue_theory: Option<f64>,
    pub fm2: f64,
    pub fm2_poisson_gap: f64,
    /// All counts equal; chi-square skipped.
    pub degenerate: bool,
}

pub fn poisson_gof(counts: &[u64], lambda_theory: Option<f64>) -> Result<PoissonFitReport> {
    if counts.len() < GOF_MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "poisson_gof needs at least {GOF_MIN_SAMPLES} counts, got {}",
            counts.len()
        )));
    }
    if let Some(l) = lambda_theory {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("theory intensity {l} must be nonnegative")));
        }
    }
    let n = counts.len();
    let pmf = empirical_pmf(counts)?;
    let lambda_hat = factorial_moment(counts, 1)?;
    let var = counts.iter().map(|&k| (k as f64 - lambda_hat).powi(2)).sum::<f64>() / (n - 1) as f64;
    let fm2 = factorial_moment(counts, 2)?;
    let degenerate = counts.iter().all(|&k| k == counts[0]);
    let (chi_hat, chi_theory) = if degenerate {
        (None, None)
    } else {
        (
            poisson_chi_square(counts, lambda_hat, true),
            lambda_theory.and_then(|l| poisson_chi_square(counts, l, false)),
        )
    };
    Ok(PoissonFitReport {
        n,
        lambda_hat,
        lambda_hat_stderr: (var / n as f64).sqrt(),
        lambda_theory,
        tv_vs_hat: tv_to_poisson(&pmf, lambda_hat),
        tv_vs_theory: lambda_theory.map(|l| tv_to_poisson(&pmf, l)),
        chi2_statistic: chi_hat.as_ref().map(|c| c.statistic),
        chi2_dof: chi_hat.as_ref().map(|c| c.dof),
        chi2_pvalue: chi_hat.as_ref().map(|c| c.pvalue),
        chi2_pvalue_theory: chi_theory.map(|c| c.pvalue),
        fm2,
        fm2_poisson_gap: (fm2 - lambda_hat * lambda_hat).abs(),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountComparison {
    pub tv: f64,
    pub mean_xi: f64,
    pub mean_eta_sum: f64,
    pub mean_gap: f64,
    pub n_real: usize,
}

/// TV between the laws of `ξ` and `Σ_p η_p` over the same realizations.
pub fn compare_counts(xi: &[u64], eta_sum: &[u64]) -> Result<CountComparison> {
    if xi.len() != eta_sum.len() {
        return Err(Error::SizeMismatch {
            expected: xi.len(),
            got: eta_sum.len(),
        });
    }
    let mean_xi = factorial_moment(xi, 1)?;
    let mean_eta_sum = factorial_moment(eta_sum, 1)?;
    Ok(CountComparison {
        tv: tv_distance(&empirical_pmf(xi)?, &empirical_pmf(eta_sum)?),
        mean_xi,
        mean_eta_sum,
        mean_gap: (mean_xi - mean_eta_sum).abs(),
        n_real: xi.len(),
    })
}

pub fn compare_count_processes(ens: &CountEnsemble) -> Result<CountComparison> {
    let eta = ens
        .eta_sums()
        .ok_or_else(|| Error::InsufficientData("ensemble carries no block counts".into()))?;
    compare_counts(&ens.xi, &eta)
}

/// Bootstrap standard deviation of the `ξ`/`Ση` TV, resampling realizations
/// (pairs kept together).
pub fn bootstrap_tv_sigma(xi: &[u64], eta_sum: &[u64], n_boot: usize, seed: u64) -> Result<f64> {
    if xi.len() != eta_sum.len() || xi.is_empty() {
        return Err(Error::SizeMismatch {
            expected: xi.len(),
            got: eta_sum.len(),
        });
    }
    if n_boot < 2 {
        return Err(Error::InvalidArgument("need at least two bootstrap replicates".into()));
    }
    let n = xi.len();
    let mut stream = RandomStream::from_seed(seed);
    let mut a = vec![0u64; n];
    let mut b = vec![0u64; n];
    let tvs: Vec<f64> = (0..n_boot)
        .map(|_| {
            for j in 0..n {
                let i = ((stream.next_f64() * n as f64) as usize).min(n - 1);
                a[j] = xi[i];
                b[j] = eta_sum[i];
            }
            compare_counts(&a, &b).map(|c| c.tv)
        })
        .collect::<Result<_>>()?;
    let mean = tvs.iter().sum::<f64>() / n_boot as f64;
    let var = tvs.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n_boot - 1) as f64;
    Ok(var.sqrt())
}

/// Whether `tvs` is non-increasing up to `k` combined standard deviations:
/// `tv[i+1] ≤ tv[i] + k·sqrt(σ[i]² + σ[i+1]²)` for every consecutive pair.
pub fn non_increasing_within(tvs: &[f64], sigmas: &[f64], k: f64) -> bool {
    tvs.len() == sigmas.len()
        && (1..tvs.len()).all(|i| tvs[i] <= tvs[i - 1] + k * sigmas[i - 1].hypot(sigmas[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingReport {
    pub n_spacings: usize,
    pub mean_spacing: f64,
    pub ks_distance: f64,
    /// `(x, empirical CDF, 1 − e^{−x})` on a fixed grid.
    pub ecdf: Vec<(f64, f64, f64)>,
}

/// Nearest-neighbour spacings after unfolding by the pooled counting
/// function `x ↦ #{pooled points ≤ x} / #realizations` (mid-rank on ties),
/// compared with the unit exponential law.
pub fn spacing_statistics(eigen_windows: &[Vec<f64>]) -> Result<SpacingReport> {
    let n_real = eigen_windows.len();
    let mut pooled: Vec<f64> = eigen_windows.iter().flatten().copied().collect();
    if pooled.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
    }
    pooled.sort_by(f64::total_cmp);
    let unfold = |x: f64| -> f64 {
        let below = pooled.partition_point(|&p| p < x);
        let upto = pooled.partition_point(|&p| p <= x);
        0.5 * (below + upto) as f64 / n_real as f64
    };
    let mut spacings = Vec::new();
    for w in eigen_windows {
        let mut u: Vec<f64> = w.iter().map(|&x| unfold(x)).collect();
        u.sort_by(f64::total_cmp);
        spacings.extend(u.windows(2).map(|p| p[1] - p[0]));
    }
    if spacings.len() < MIN_SPACINGS {
        return Err(Error::InsufficientData(format!(
            "{} spacings pooled, need at least {MIN_SPACINGS}",
            spacings.len()
        )));
    }
    Ok(spacing_report(spacings))
}

/// KS distance of already-normalized spacings to `Exp(1)`.
pub fn spacing_report(mut spacings: Vec<f64>) -> SpacingReport {
    spacings.sort_by(f64::total_cmp);
    let n = spacings.len() as f64;
    let exp_cdf = |x: f64| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() };
    let mut ks: f64 = 0.0;
    for (i, &x) in spacings.iter().enumerate() {
        let f = exp_cdf(x);
        ks = ks.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let ecdf = (0..=50)
        .map(|j| {
            let x = 0.1 * j as f64;
            let emp = spacings.partition_point(|&s| s <= x) as f64 / n;
            (x, emp, exp_cdf(x))
        })
        .collect();
    SpacingReport {
        n_spacings: spacings.len(),
        mean_spacing: spacings.iter().sum::<f64>() / n,
        ks_distance: ks,
        ecdf,
    }
}
