//! Acceptance suite. Each test prints one `PASS`/`FAIL` line on stderr
//! (written directly, so it survives output capture) and then asserts.

use std::io::Write;

use anderson_core::estimates::{
    diagonal_green_bound, fractional_moment_scan, minami_check, random_inequality_config, site_wegner_check,
    wegner_check, PairSet,
};
use anderson_core::lattice::{assemble_hamiltonian, partition_cube, CubeGeometry, ScaleParams};
use anderson_core::measures::cantor_alpha;
use anderson_core::processes::{
    alpha_derivative_ladder, alpha_upper_derivative, gamma_parameter, l_alpha, l_alpha_quadrature, run_ensemble,
    run_window_spectra, EnsembleConfig, IdsSource,
};
use anderson_core::spectral::{check_perturbation_identity, count_in_window, eigenvalues_dense};
use anderson_core::stats::{
    bootstrap_tv_sigma, compare_count_processes, non_increasing_within, poisson_gof, spacing_statistics,
};
use anderson_core::{
    Complex64, DecayOutcome, HamiltonianSpec, Hopping, RandomStream, RescaledWindow, SingleSiteDistribution,
    SpectralWindow,
};
use andersonlab::{run_command, Command, ExperimentConfig};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance criterion {id:>2} {:<4} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn localized_model() -> (HamiltonianSpec, SingleSiteDistribution) {
    (
        HamiltonianSpec::new(Hopping::LaplacianOffdiag, 4.0).unwrap(),
        SingleSiteDistribution::uniform(-0.5, 0.5).unwrap(),
    )
}

#[test]
fn criterion_01_cantor_poisson() {
    let dist = SingleSiteDistribution::cantor();
    let spec = HamiltonianSpec::new(Hopping::None, 1.0).unwrap();
    let l = 2187;
    let geom = CubeGeometry::whole(1, l).unwrap();
    let window = RescaledWindow::new(0.0, -1.0, 1.0, l, 1, cantor_alpha()).unwrap();
    let ens = run_ensemble(&EnsembleConfig {
        spec,
        dist: &dist,
        geom: &geom,
        window,
        n_real: 5000,
        master_seed: 2187,
        record_eta: false,
        workers: None,
    })
    .unwrap();
    let fit = poisson_gof(&ens.xi, None).unwrap();
    let lam2 = fit.lambda_hat * fit.lambda_hat;
    let pass = fit.tv_vs_hat <= 0.05 && fit.fm2_poisson_gap <= 0.15 * lam2;
    report(
        1,
        "cantor disorder, Poisson counts",
        pass,
        &format!(
            "lambda_hat={:.4} tv={:.4} (<= 0.05) |fm2-lambda^2|={:.4} (<= {:.4})",
            fit.lambda_hat,
            fit.tv_vs_hat,
            fit.fm2_poisson_gap,
            0.15 * lam2
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_uniform_cross_check() {
    let dist = SingleSiteDistribution::uniform(0.0, 1.0).unwrap();
    let spec = HamiltonianSpec::new(Hopping::None, 1.0).unwrap();
    let l = 5000;
    let geom = CubeGeometry::whole(1, l).unwrap();
    let window = RescaledWindow::new(0.5, -1.0, 1.0, l, 1, 1.0).unwrap();
    let ens = run_ensemble(&EnsembleConfig {
        spec,
        dist: &dist,
        geom: &geom,
        window,
        n_real: 5000,
        master_seed: 5000,
        record_eta: false,
        workers: None,
    })
    .unwrap();
    let src = IdsSource::ExactCdf { dist: &dist, coupling: 1.0 };
    let d = alpha_upper_derivative(&src, 0.5, 1.0, 1e-9, 0.25).unwrap();
    let gamma = gamma_parameter(d.d_upper, 1.0, -1.0, 1.0).unwrap().value;
    let fit = poisson_gof(&ens.xi, Some(gamma)).unwrap();
    // Binomial(10001, 2/10001): mean 2, variance 2 (1 − 2/10001)
    let n_sites = (2 * l + 1) as f64;
    let sigma = (2.0 * (1.0 - 2.0 / n_sites) / 5000.0).sqrt();
    let tv = fit.tv_vs_theory.unwrap();
    let pass = (fit.lambda_hat - 2.0).abs() <= 3.0 * sigma && tv <= 0.05 && (gamma - 2.0).abs() < 1e-9;
    report(
        2,
        "uniform disorder, alpha = 1",
        pass,
        &format!(
            "lambda_hat={:.4} (2 +- {:.4}) gamma={gamma:.6} tv_vs_poisson(gamma)={tv:.4} (<= 0.05)",
            fit.lambda_hat,
            3.0 * sigma
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_localized_chain() {
    let (spec, dist) = localized_model();
    let l = 2000;
    let geom = CubeGeometry::whole(1, l).unwrap();
    let counts_cfg = EnsembleConfig {
        spec,
        dist: &dist,
        geom: &geom,
        window: RescaledWindow::new(0.0, -1.0, 1.0, l, 1, 1.0).unwrap(),
        n_real: 2000,
        master_seed: 4001,
        record_eta: false,
        workers: None,
    };
    let ens = run_ensemble(&counts_cfg).unwrap();
    let fit = poisson_gof(&ens.xi, None).unwrap();
    let spectra_cfg = EnsembleConfig {
        window: RescaledWindow::new(0.0, -50.0, 50.0, l, 1, 1.0).unwrap(),
        ..counts_cfg.clone()
    };
    let spectra = run_window_spectra(&spectra_cfg).unwrap();
    let sp = spacing_statistics(&spectra).unwrap();
    let pass = fit.tv_vs_hat <= 0.07 && sp.ks_distance <= 0.05;
    report(
        3,
        "localized chain, Poisson counts and spacings",
        pass,
        &format!(
            "lambda_hat={:.4} tv={:.4} (<= 0.07) spacing_ks={:.4} (<= 0.05, {} spacings)",
            fit.lambda_hat, fit.tv_vs_hat, sp.ks_distance, sp.n_spacings
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_inequality_suite() {
    let mut stream = RandomStream::from_seed(404);
    let mut failures = Vec::new();
    let mut checks = 0;
    for i in 0..50 {
        let c = random_inequality_config(i, 200, &mut stream).unwrap();
        let geom = CubeGeometry::whole(1, c.half_side).unwrap();
        let seed = 4000 + i as u64;
        let reports = [
            wegner_check(&c.spec, &c.dist, &geom, c.interval, 200, seed, None).unwrap(),
            site_wegner_check(&c.spec, &c.dist, c.interval, 1000, seed).unwrap(),
            minami_check(&c.spec, &c.dist, &geom, c.interval, 1000, seed, None).unwrap(),
            diagonal_green_bound(&c.spec, &c.dist, &geom, c.z, c.k_param, 100, seed, None).unwrap(),
        ];
        for r in reports {
            checks += 1;
            if !r.pass {
                failures.push(format!("config {i} {}: {:.4e} > {:.4e}", r.name, r.lhs_estimate, r.rhs_value));
            }
        }
    }
    let pass = failures.is_empty();
    report(
        4,
        "Wegner, Minami and diagonal Green bounds",
        pass,
        &format!("{checks} checks over 50 configurations, {} failures {failures:?}", failures.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_05_window_counts_exact() {
    let mut s = RandomStream::from_seed(505);
    let dists = [
        SingleSiteDistribution::uniform(-1.0, 1.0).unwrap(),
        SingleSiteDistribution::bernoulli(0.5, 0.0, 1.0).unwrap(),
        SingleSiteDistribution::cantor(),
    ];
    let mut mismatches = 0;
    let mut jittered = 0;
    for t in 0..1000 {
        let d = 1 + (s.next_f64() * 3.0) as usize;
        let max_l = [99, 6, 2][d - 1];
        let l = 1 + (s.next_f64() * max_l as f64) as usize;
        let geom = CubeGeometry::whole(d, l).unwrap();
        let hopping = if s.next_f64() < 0.7 { Hopping::LaplacianOffdiag } else { Hopping::None };
        let spec = HamiltonianSpec::new(hopping, 0.5 + 4.0 * s.next_f64()).unwrap();
        let dist = &dists[t % 3];
        let mut omega = vec![0.0; geom.volume()];
        dist.sample_into(&mut omega, &mut s);
        let h = assemble_hamiltonian(&spec, &geom, &omega).unwrap();
        // a diagonal matrix has its entries as exact eigenvalues; the dense
        // solver can move them by an ulp, which matters for endpoints on atoms
        let eig = if hopping == Hopping::None { h.diagonal().to_vec() } else { eigenvalues_dense(&h).unwrap() };
        let r = spec.coupling + spec.hopping_norm(d) + 1.0;
        let (mut a, mut b) = (-r + 2.0 * r * s.next_f64(), -r + 2.0 * r * s.next_f64());
        if hopping == Hopping::None && t % 2 == 0 {
            // endpoints on eigenvalues exercise the half-open convention
            a = h.diagonal()[(s.next_f64() * h.n() as f64) as usize];
            b = h.diagonal()[(s.next_f64() * h.n() as f64) as usize];
        }
        let w = SpectralWindow::new(a.min(b), a.max(b)).unwrap();
        let oracle = eig.iter().filter(|&&x| w.a < x && x <= w.b).count();
        let got = count_in_window(&h, &w).unwrap();
        if got.jitter > 0.0 {
            jittered += 1;
        }
        if got.count != oracle {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    report(
        5,
        "inertia and Sturm counts against dense oracle",
        pass,
        &format!("1000 pairs, {mismatches} mismatches, {jittered} resolved by jitter"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_resolvent_identity() {
    let mut s = RandomStream::from_seed(606);
    let dist = SingleSiteDistribution::uniform(-1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let d = 1 + (s.next_f64() * 2.0) as usize;
        let l = if d == 1 { 4 + (s.next_f64() * 40.0) as usize } else { 2 + (s.next_f64() * 5.0) as usize };
        let n_blocks = 1 + (s.next_f64() * 3.0) as usize;
        let margin = (s.next_f64() * 3.0) as usize;
        let Ok(params) = ScaleParams::scaled(l, n_blocks, margin) else { continue };
        let Ok(geom) = partition_cube(d, l, &params) else { continue };
        let candidates: Vec<usize> = (0..geom.n_blocks()).filter(|&p| !geom.blocks[p].interior.is_empty()).collect();
        if candidates.is_empty() {
            continue;
        }
        let p = candidates[(s.next_f64() * candidates.len() as f64) as usize];
        let interior = &geom.blocks[p].interior;
        let n = interior[(s.next_f64() * interior.len() as f64) as usize];
        let spec = HamiltonianSpec::new(Hopping::LaplacianOffdiag, 0.5 + 4.0 * s.next_f64()).unwrap();
        let mut omega = vec![0.0; geom.volume()];
        dist.sample_into(&mut omega, &mut s);
        let h = assemble_hamiltonian(&spec, &geom, &omega).unwrap();
        let z = Complex64::new(-3.0 + 6.0 * s.next_f64(), 10f64.powf(-2.0 + 2.0 * s.next_f64()));
        worst = worst.max(check_perturbation_identity(&h, &geom, p, z, n).unwrap());
        done += 1;
    }
    let pass = worst <= 1e-9;
    report(
        6,
        "geometric resolvent identity",
        pass,
        &format!("100 configurations, max residual {worst:.3e} (<= 1e-9)"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_fractional_moment_decay() {
    let (spec, dist) = localized_model();
    let geom = CubeGeometry::whole(1, 2000).unwrap();
    let distances: Vec<usize> = (5..=60).collect();
    let pairs = PairSet::along_axis(&geom, geom.center(), &distances).unwrap();
    let z_grid = anderson_core::estimates::default_z_grid(&[0.0]);
    let out = fractional_moment_scan(&spec, &dist, &geom, 1.0 / 3.0, &pairs, &z_grid, 200, 707, None).unwrap();
    let (pass, detail) = match out {
        DecayOutcome::Fit(f) => (
            f.gamma_hat > 0.0 && f.r_squared >= 0.9,
            format!(
                "gamma_hat={:.5} (se {:.1e}) c_hat={:.4} r2={:.4} (>= 0.9)",
                f.gamma_hat, f.gamma_stderr, f.c_hat, f.r_squared
            ),
        ),
        DecayOutcome::ExactZero { .. } => (false, "unexpected exact zero".into()),
    };
    report(7, "fractional-moment decay, distances 5..60", pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_08_xi_against_block_sum() {
    let (spec, dist) = localized_model();
    let mut tvs = Vec::new();
    let mut sigmas = Vec::new();
    for l in [500, 1000, 2000] {
        let geom = partition_cube(1, l, &ScaleParams::scaled(l, 8, 10).unwrap()).unwrap();
        let ens = run_ensemble(&EnsembleConfig {
            spec,
            dist: &dist,
            geom: &geom,
            window: RescaledWindow::new(0.0, -1.0, 1.0, l, 1, 1.0).unwrap(),
            n_real: 2000,
            master_seed: 808,
            record_eta: true,
            workers: None,
        })
        .unwrap();
        let cmp = compare_count_processes(&ens).unwrap();
        tvs.push(cmp.tv);
        sigmas.push(bootstrap_tv_sigma(&ens.xi, &ens.eta_sums().unwrap(), 200, l as u64).unwrap());
    }
    let pass = non_increasing_within(&tvs, &sigmas, 2.0);
    report(
        8,
        "xi against sum of block counts, L = 500, 1000, 2000",
        pass,
        &format!("tv={tvs:.4?} bootstrap_sigma={sigmas:.4?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_l_alpha_quadrature() {
    let mut s = RandomStream::from_seed(909);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let alpha = 0.05 + 0.95 * s.next_f64();
        let (mut a, mut b) = (-10.0 + 20.0 * s.next_f64(), -10.0 + 20.0 * s.next_f64());
        match t % 10 {
            0 => a = 0.0,
            1 => b = 0.0,
            _ => {}
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let exact = l_alpha(alpha, a, b).unwrap();
        let quad = l_alpha_quadrature(alpha, a, b).unwrap();
        worst = worst.max((exact - quad).abs() / exact.abs());
    }
    let pass = worst <= 1e-10;
    report(
        9,
        "closed form of L_alpha against quadrature",
        pass,
        &format!("100 cases, max relative error {worst:.3e} (<= 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_cantor_derivative_ladder() {
    let c = SingleSiteDistribution::cantor();
    let alpha = cantor_alpha();
    let src = IdsSource::ExactCdf { dist: &c, coupling: 1.0 };
    let eps: Vec<f64> = (1..=12).map(|k| 3f64.powi(-k)).collect();
    let d = alpha_derivative_ladder(&src, 0.0, alpha, &eps).unwrap();
    let target = 2f64.powf(-alpha);
    let worst = d.ratios.iter().map(|r| (r - target).abs()).fold(0.0, f64::max);
    let pass = worst <= 1e-10;
    report(
        10,
        "Cantor derivative ladder at eps = 3^-k",
        pass,
        &format!("k = 1..12, max |ratio - 2^-alpha| = {worst:.3e} (<= 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_determinism() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/cantor_poisson.toml");
    let base = ExperimentConfig::load(std::path::Path::new(path)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (k, workers) in [Some(1), Some(4), Some(1)].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let cfg = base.clone().with_overrides(None, Some(out.clone()), workers).unwrap();
        run_command(Command::Counts, &cfg).unwrap();
        bytes.push(std::fs::read(out.join("counts.csv")).unwrap());
    }
    let pass = bytes.windows(2).all(|w| w[0] == w[1]) && !bytes[0].is_empty();
    report(
        11,
        "byte-identical counts.csv across runs and worker counts",
        pass,
        &format!("3 runs (workers 1, 4, 1), {} bytes each", bytes[0].len()),
    );
    assert!(pass);
}
