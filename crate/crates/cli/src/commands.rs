//! Subcommands. Every run writes its artifacts first and `manifest.json`
//! last; all tables are gathered in realization order before writing.

use std::collections::BTreeMap;
use std::time::Instant;

use anderson_core::estimates::{
    diagonal_green_bound, fit_decay, fractional_moments, minami_check, site_wegner_check,
    wegner_check, PairSet,
};
use anderson_core::lattice::{CubeGeometry, PartitionMode};
use anderson_core::processes::{
    alpha_upper_derivative, exact_ids_available, gamma_parameter, ids_estimate, realization_hamiltonian,
    run_ensemble, EnsembleConfig, GammaParameter, IdsSource,
};
use anderson_core::rng::split_seed;
use anderson_core::spectral::check_perturbation_identity;
use anderson_core::stats::{
    bootstrap_tv_sigma, compare_count_processes, empirical_pmf, non_increasing_within, poisson_gof, poisson_prob,
    CountComparison,
};
use anderson_core::{
    AlphaDerivative, Complex64, DecayOutcome, InequalityReport, PoissonFitReport, RescaledWindow,
    SingleSiteDistribution,
};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::output::{num, OutputSet, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Ensemble of window counts with a Poisson fit.
    Counts,
    /// IDS curve and α-derivative ladder.
    Ids,
    /// Wegner, Minami, diagonal Green bound and resolvent identity.
    Verify,
    /// Fractional-moment decay scan.
    Localize,
    /// `ξ` against `Σ_p η_p` across the `L` ladder.
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub half_side: usize,
    pub dimension: usize,
    pub volume: usize,
    pub partition_mode: PartitionMode,
    pub blocks_per_side: usize,
    pub n_blocks: usize,
    pub interior_margin: usize,
    pub block_side: f64,
    pub beta: f64,
}

impl GeometrySummary {
    fn new(geom: &CubeGeometry, beta: f64) -> Self {
        Self {
            half_side: geom.half_side,
            dimension: geom.d,
            volume: geom.volume(),
            partition_mode: geom.params.mode,
            blocks_per_side: geom.params.n_blocks_per_side,
            n_blocks: geom.n_blocks(),
            interior_margin: geom.params.interior_margin,
            block_side: geom.params.block_side,
            beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: Command,
    pub version: String,
    /// Effective configuration after command-line overrides.
    pub config: ExperimentConfig,
    /// SHA-256 of the JSON form of `config` without `output_dir` and `workers`.
    pub config_sha256: String,
    pub seed: u64,
    pub geometry: Vec<GeometrySummary>,
    pub wall_clock_seconds: f64,
    /// SHA-256 of every artifact written next to the manifest.
    pub outputs: BTreeMap<String, String>,
}

pub fn config_sha256(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.run.output_dir = None;
    c.run.workers = None;
    crate::output::sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
}

pub fn run_command(command: Command, cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let mut out = OutputSet::create(&cfg.output_dir())?;
    let geometry = match command {
        Command::Counts => counts(cfg, &mut out)?,
        Command::Ids => ids(cfg, &mut out)?,
        Command::Verify => verify(cfg, &mut out)?,
        Command::Localize => localize(cfg, &mut out)?,
        Command::Compare => compare(cfg, &mut out)?,
    };
    let manifest = RunManifest {
        subcommand: command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_sha256: config_sha256(cfg),
        seed: cfg.run.seed,
        geometry,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: out.checksums().clone(),
    };
    out.finish(&manifest)?;
    Ok(manifest)
}

struct Model {
    spec: anderson_core::HamiltonianSpec,
    dist: SingleSiteDistribution,
    alpha: f64,
    energy: f64,
    interval: (f64, f64),
}

fn model(cfg: &ExperimentConfig) -> Result<Model, CliError> {
    Ok(Model {
        spec: cfg.spec()?,
        dist: cfg.single_site()?,
        alpha: cfg.alpha()?,
        energy: cfg.window.energy,
        interval: (cfg.window.interval[0], cfg.window.interval[1]),
    })
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsEntry {
    pub half_side: usize,
    pub beta: f64,
    pub window: (f64, f64),
    pub n_real: usize,
    pub mean_count: f64,
    /// `|Λ| μ_λ(J)` when `H_0 = 0`.
    pub expected_count: Option<f64>,
    pub jitter_events: usize,
    pub ensemble_hash: String,
    /// Absent below the minimum sample size of the fit.
    pub fit: Option<PoissonFitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsReport {
    /// `D · 𝓛_α(I)` from the exact-CDF ladder when `H_0 = 0`.
    pub intensity: Option<GammaParameter>,
    pub intensity_derivative: Option<AlphaDerivative>,
    pub entries: Vec<CountsEntry>,
}

/// Poisson intensity from the exact IDS, available when `H_0 = 0`.
fn theory_intensity(m: &Model) -> Result<Option<(GammaParameter, AlphaDerivative)>, CliError> {
    if !exact_ids_available(&m.spec) {
        return Ok(None);
    }
    let src = IdsSource::ExactCdf {
        dist: &m.dist,
        coupling: m.spec.coupling,
    };
    let eps_max = m.spec.coupling * m.dist.support_width();
    let ladder = alpha_upper_derivative(&src, m.energy, m.alpha, eps_max * 2f64.powi(-40), eps_max)?;
    let gamma = gamma_parameter(ladder.d_upper, m.alpha, m.interval.0, m.interval.1)?;
    Ok(Some((gamma, ladder)))
}

fn counts(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Vec<GeometrySummary>, CliError> {
    let m = model(cfg)?;
    let theory = theory_intensity(&m)?;
    let lambda_theory = theory.as_ref().map(|t| t.0.value);
    let mut counts_csv = Table::new(&["half_side", "realization", "xi"]);
    let mut pmf_csv = Table::new(&["half_side", "k", "empirical", "poisson_hat", "poisson_theory"]);
    let mut entries = Vec::new();
    let mut geometry = Vec::new();
    for l in cfg.half_sides() {
        let geom = cfg.geometry(l)?;
        let rw = RescaledWindow::new(m.energy, m.interval.0, m.interval.1, l, cfg.model.dimension, m.alpha)?;
        let ens_cfg = EnsembleConfig {
            spec: m.spec,
            dist: &m.dist,
            geom: &geom,
            window: rw,
            n_real: cfg.run.realizations,
            master_seed: cfg.run.seed,
            record_eta: false,
            workers: cfg.run.workers,
        };
        let ens = run_ensemble(&ens_cfg)?;
        for (i, &x) in ens.xi.iter().enumerate() {
            counts_csv.push(vec![l.to_string(), i.to_string(), x.to_string()]);
        }
        let pmf = empirical_pmf(&ens.xi)?;
        let mean = ens.mean_xi();
        for (k, &p) in pmf.probs.iter().enumerate() {
            pmf_csv.push(vec![
                l.to_string(),
                k.to_string(),
                num(p),
                num(poisson_prob(mean, k)),
                opt_num(lambda_theory.map(|t| poisson_prob(t, k))),
            ]);
        }
        let fit = if ens.n_real() >= anderson_core::stats::GOF_MIN_SAMPLES {
            Some(poisson_gof(&ens.xi, lambda_theory)?)
        } else {
            None
        };
        let expected_count = if exact_ids_available(&m.spec) {
            let c = m.spec.coupling;
            Some(geom.volume() as f64 * m.dist.interval_measure(rw.window.a / c, rw.window.b / c)?)
        } else {
            None
        };
        println!(
            "counts L={l} beta={:.6e} mean={mean:.4} tv_hat={}",
            rw.beta,
            fit.as_ref().map(|f| format!("{:.4}", f.tv_vs_hat)).unwrap_or_else(|| "-".into())
        );
        entries.push(CountsEntry {
            half_side: l,
            beta: rw.beta,
            window: (rw.window.a, rw.window.b),
            n_real: ens.n_real(),
            mean_count: mean,
            expected_count,
            jitter_events: ens.jitter_events,
            ensemble_hash: format!("{:016x}", ens.config_hash),
            fit,
        });
        geometry.push(GeometrySummary::new(&geom, rw.beta));
    }
    out.write_csv("counts.csv", &counts_csv)?;
    out.write_csv("pmf.csv", &pmf_csv)?;
    let (intensity, intensity_derivative) = match theory {
        Some((g, d)) => (Some(g), Some(d)),
        None => (None, None),
    };
    out.write_json(
        "report.json",
        &CountsReport {
            intensity,
            intensity_derivative,
            entries,
        },
    )?;
    Ok(geometry)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsReport {
    pub half_side: usize,
    pub volume: usize,
    pub n_real: usize,
    /// `exact_cdf` when `H_0 = 0`, otherwise `monte_carlo`.
    pub derivative_source: String,
    pub derivative: AlphaDerivative,
    pub gamma: GammaParameter,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn ids(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Vec<GeometrySummary>, CliError> {
    let m = model(cfg)?;
    let l = cfg.half_sides()[0];
    let geom = CubeGeometry::whole(cfg.model.dimension, l)?;
    let exact = exact_ids_available(&m.spec);
    let c = m.spec.coupling;
    let (grid, eps_min, eps_max) = match &cfg.ids {
        Some(ids) => (linspace(ids.grid[0], ids.grid[1], ids.points), ids.eps_min, ids.eps_max),
        None => {
            let (lo, hi) = m.dist.support();
            let spread = m.spec.hopping_norm(cfg.model.dimension);
            let grid = linspace(c * lo - spread, c * hi + spread, 201);
            let eps_max = 0.25 * (grid[200] - grid[0]);
            let eps_min = if exact { eps_max * 2f64.powi(-30) } else { 2.0 * (grid[1] - grid[0]) };
            (grid, eps_min, eps_max)
        }
    };
    let est = ids_estimate(&m.spec, &m.dist, &geom, &grid, cfg.run.realizations, cfg.run.seed, cfg.run.workers)?;
    let mut header = vec!["energy", "ids", "stderr"];
    if exact {
        header.push("exact");
    }
    let mut table = Table::new(&header);
    for (j, &e) in grid.iter().enumerate() {
        let mut row = vec![num(e), num(est.values[j]), num(est.stderr[j])];
        if exact {
            row.push(num(m.dist.cdf(e / c)));
        }
        table.push(row);
    }
    out.write_csv("ids.csv", &table)?;

    let src = if exact {
        IdsSource::ExactCdf { dist: &m.dist, coupling: c }
    } else {
        IdsSource::MonteCarlo(&est)
    };
    let derivative = alpha_upper_derivative(&src, m.energy, m.alpha, eps_min, eps_max)?;
    let mut dtable = Table::new(&["epsilon", "ratio"]);
    for (e, r) in derivative.epsilons.iter().zip(&derivative.ratios) {
        dtable.push(vec![num(*e), num(*r)]);
    }
    out.write_csv("derivative.csv", &dtable)?;
    let gamma = gamma_parameter(derivative.d_upper, m.alpha, m.interval.0, m.interval.1)?;
    println!(
        "ids L={l} points={} D_upper={:.6} gamma={:.6}",
        grid.len(),
        derivative.d_upper,
        gamma.value
    );
    out.write_json(
        "report.json",
        &IdsReport {
            half_side: l,
            volume: geom.volume(),
            n_real: cfg.run.realizations,
            derivative_source: if exact { "exact_cdf" } else { "monte_carlo" }.into(),
            derivative,
            gamma,
        },
    )?;
    let beta = anderson_core::processes::beta_scale(l, cfg.model.dimension, m.alpha)?;
    Ok(vec![GeometrySummary::new(&geom, beta)])
}

/// Threshold for the resolvent-identity residual.
pub const IDENTITY_TOL: f64 = 1e-9;

fn verify(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Vec<GeometrySummary>, CliError> {
    let m = model(cfg)?;
    let v = cfg.verify.clone().unwrap_or_default();
    let l = cfg.half_sides()[0];
    let geom = cfg.geometry(l)?;
    let rw = RescaledWindow::new(m.energy, m.interval.0, m.interval.1, l, cfg.model.dimension, m.alpha)?;
    let macro_interval = (m.energy + m.interval.0, m.energy + m.interval.1);
    let micro = (rw.window.a, rw.window.b);
    let seed = |k: u64| split_seed(cfg.run.seed, k);
    let w = cfg.run.workers;

    let mut reports = Vec::new();
    let mut named = |mut r: InequalityReport, name: &str| {
        r.name = name.to_string();
        reports.push(r);
    };
    named(wegner_check(&m.spec, &m.dist, &geom, macro_interval, v.wegner_realizations, seed(0), w)?, "wegner");
    named(
        wegner_check(&m.spec, &m.dist, &geom, micro, v.wegner_realizations, seed(1), w)?,
        "wegner_microscopic",
    );
    named(
        site_wegner_check(&m.spec, &m.dist, macro_interval, v.wegner_realizations, seed(2))?,
        "site_wegner",
    );
    named(minami_check(&m.spec, &m.dist, &geom, macro_interval, v.minami_realizations, seed(3), w)?, "minami");
    named(
        minami_check(&m.spec, &m.dist, &geom, micro, v.minami_realizations, seed(4), w)?,
        "minami_microscopic",
    );
    let z = Complex64::new(v.z[0], v.z[1]);
    named(
        diagonal_green_bound(&m.spec, &m.dist, &geom, z, v.k, v.green_realizations, seed(5), w)?,
        "diagonal_green",
    );

    let candidates: Vec<usize> = (0..geom.n_blocks()).filter(|&p| !geom.blocks[p].interior.is_empty()).collect();
    if !candidates.is_empty() && v.identity_samples > 0 {
        let mut worst: f64 = 0.0;
        for s in 0..v.identity_samples {
            let h = realization_hamiltonian(&m.spec, &m.dist, &geom, seed(6), s)?;
            let p = candidates[s % candidates.len()];
            let interior = &geom.blocks[p].interior;
            let n = interior[(s * 7919) % interior.len()];
            worst = worst.max(check_perturbation_identity(&h, &geom, p, z, n)?);
        }
        reports.push(InequalityReport::new(
            "resolvent_identity",
            (worst, 0.0),
            IDENTITY_TOL,
            None,
            Some(z),
            geom.volume(),
            v.identity_samples,
        ));
    }
    for r in &reports {
        println!(
            "verify {:<20} lhs={:.6e} se={:.2e} rhs={:.6e} {}",
            r.name,
            r.lhs_estimate,
            r.lhs_stderr,
            r.rhs_value,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    out.write_json("inequalities.json", &reports)?;
    Ok(vec![GeometrySummary::new(&geom, rw.beta)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeReport {
    pub half_side: usize,
    pub anchor: usize,
    pub n_real: usize,
    pub z_grid: Vec<Complex64>,
    pub outcome: DecayOutcome,
}

fn localize(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Vec<GeometrySummary>, CliError> {
    let m = model(cfg)?;
    let loc = cfg
        .localization
        .clone()
        .ok_or_else(|| CliError::Config("localization: the [localization] table is required".into()))?;
    let l = cfg.half_sides()[0];
    let geom = CubeGeometry::whole(cfg.model.dimension, l)?;
    let anchor = geom.center();
    let pairs = PairSet::along_axis(&geom, anchor, &loc.distances)?;
    let reals = if loc.real_points == 1 {
        vec![m.energy]
    } else {
        linspace(loc.window[0], loc.window[1], loc.real_points)
    };
    let z_grid: Vec<Complex64> = reals
        .iter()
        .flat_map(|&re| loc.imag_parts.iter().map(move |&im| Complex64::new(re, im)))
        .collect();
    let n_real = cfg.run.realizations;
    let table = fractional_moments(
        &m.spec,
        &m.dist,
        &geom,
        loc.s,
        &pairs,
        &z_grid,
        n_real,
        cfg.run.seed,
        cfg.run.workers,
    )?;
    let mut csv = Table::new(&["distance", "mean_moment", "stderr"]);
    for j in 0..table.distances.len() {
        csv.push(vec![
            table.distances[j].to_string(),
            num(table.mean_moments[j]),
            num(table.stderr[j]),
        ]);
    }
    out.write_csv("decay.csv", &csv)?;
    let outcome = fit_decay(&table, loc.s, &z_grid, n_real)?;
    match &outcome {
        DecayOutcome::Fit(f) => println!(
            "localize L={l} gamma_hat={:.6} (se {:.2e}) c_hat={:.4e} r2={:.4}",
            f.gamma_hat, f.gamma_stderr, f.c_hat, f.r_squared
        ),
        DecayOutcome::ExactZero { .. } => println!("localize L={l} off-diagonal moments vanish exactly"),
    }
    out.write_json(
        "report.json",
        &LocalizeReport {
            half_side: l,
            anchor,
            n_real,
            z_grid,
            outcome,
        },
    )?;
    let beta = anderson_core::processes::beta_scale(l, cfg.model.dimension, m.alpha)?;
    Ok(vec![GeometrySummary::new(&geom, beta)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEntry {
    pub half_side: usize,
    pub beta: f64,
    pub comparison: CountComparison,
    pub bootstrap_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub entries: Vec<CompareEntry>,
    /// TV non-increasing along the ladder within two bootstrap deviations.
    pub non_increasing_within_2sigma: bool,
}

/// Bootstrap replicates per ladder rung.
pub const BOOTSTRAP_REPLICATES: usize = 200;

fn compare(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Vec<GeometrySummary>, CliError> {
    let m = model(cfg)?;
    let mut csv = Table::new(&["half_side", "realization", "xi", "eta_sum"]);
    let mut entries = Vec::new();
    let mut geometry = Vec::new();
    for l in cfg.half_sides() {
        let geom = cfg.geometry(l)?;
        let rw = RescaledWindow::new(m.energy, m.interval.0, m.interval.1, l, cfg.model.dimension, m.alpha)?;
        let ens = run_ensemble(&EnsembleConfig {
            spec: m.spec,
            dist: &m.dist,
            geom: &geom,
            window: rw,
            n_real: cfg.run.realizations,
            master_seed: cfg.run.seed,
            record_eta: true,
            workers: cfg.run.workers,
        })?;
        let eta = ens.eta_sums().expect("block counts were recorded");
        for (i, (x, e)) in ens.xi.iter().zip(&eta).enumerate() {
            csv.push(vec![l.to_string(), i.to_string(), x.to_string(), e.to_string()]);
        }
        let comparison = compare_count_processes(&ens)?;
        let sigma = bootstrap_tv_sigma(&ens.xi, &eta, BOOTSTRAP_REPLICATES, split_seed(cfg.run.seed, l as u64))?;
        println!(
            "compare L={l} blocks={} tv={:.4} sigma={:.4} mean_gap={:.4}",
            geom.n_blocks(),
            comparison.tv,
            sigma,
            comparison.mean_gap
        );
        entries.push(CompareEntry {
            half_side: l,
            beta: rw.beta,
            comparison,
            bootstrap_sigma: sigma,
        });
        geometry.push(GeometrySummary::new(&geom, rw.beta));
    }
    let tvs: Vec<f64> = entries.iter().map(|e| e.comparison.tv).collect();
    let sigmas: Vec<f64> = entries.iter().map(|e| e.bootstrap_sigma).collect();
    out.write_csv("counts.csv", &csv)?;
    out.write_json(
        "report.json",
        &CompareReport {
            non_increasing_within_2sigma: non_increasing_within(&tvs, &sigmas, 2.0),
            entries,
        },
    )?;
    Ok(geometry)
}
