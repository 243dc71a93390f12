//! Acceptance suite: one test per advertised guarantee of the crate,
//! each printing a single verdict line. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line.
//!
//! Tolerances are pinned here, not configurable: they are the contract.

#![allow(clippy::needless_range_loop)]

use limitlbm::config::parse_config;
use limitlbm::consistency::{
    ansatz_residual_sup, convergence_study, eoc, limsup_probe, stress_study, Outcome,
    StressOutcome, StudyOptions, DEFAULT_LIMSUP_SLACK,
};
use limitlbm::driver::run_experiment;
use limitlbm::equilibrium::{fit_order, lattice_equilibrium, remainder_probe, MacroState, SlopeFit};
use limitlbm::grid::{make_grid, PopulationField};
use limitlbm::lattice::verify_quadrature;
use limitlbm::manufactured::{taylor_green_2d, shear_wave, InitMode, init_from_macro, uniform};
use limitlbm::moments::moment_set;
use limitlbm::solver::Stepper;
use limitlbm::{d2q9, d3q19, make_scaling, Stencil};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn verdict(number: u32, name: &str, passed: bool, detail: &str) {
    println!(
        "acceptance {number} ({name}): {} [{detail}]",
        if passed { "PASS" } else { "FAIL" },
    );
    assert!(passed, "acceptance {number} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_stencil_quadrature_exactness() {
    const TOL: f64 = 1e-14;
    let worst_2d = verify_quadrature(&d2q9()).max_overall();
    let worst_3d = verify_quadrature(&d3q19()).max_overall();
    let worst = worst_2d.max(worst_3d);
    verdict(
        1,
        "stencil quadrature exactness",
        worst <= TOL,
        &format!("worst moment deviation {worst:.2e}, bound {TOL:.0e}"),
    );
}

/// A periodic field whose every node is a small random perturbation of a
/// common rest state, in both density and velocity.
fn random_near_equilibrium(stencil: &Stencil, n_side: usize, seed: u64) -> (PopulationField, f64) {
    let h = 1.0 / n_side as f64;
    let params = make_scaling(0.02, h).unwrap();
    let grid = make_grid(stencil.d, n_side, 1.0).unwrap();
    let flow = uniform(1.0, [0.0; 3], stencil.d).unwrap();
    let mut field =
        init_from_macro(&flow, 0.0, grid, stencil, &params, InitMode::Equilibrium).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pops = vec![0.0; stencil.q];
    for node in 0..grid.nodes() {
        let n: f64 = rng.gen_range(0.9..1.1);
        let mut u = [0.0; 3];
        for a in 0..stencil.d {
            // velocity in lattice units stays small, so populations stay positive
            u[a] = rng.gen_range(-0.02..0.02) / h;
        }
        limitlbm::equilibrium::lattice_equilibrium_into(
            &MacroState::new(n, u),
            stencil,
            &params,
            &mut pops,
        );
        for p in pops.iter_mut() {
            *p *= 1.0 + rng.gen_range(-0.01..0.01);
        }
        field.set_node_populations(node, &pops);
    }
    (field, h)
}

/// Neumaier-compensated sum; the invariants are tiny differences of
/// large sums, so the measurement must not add its own rounding drift.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        s = t;
    }
    s + c
}

fn invariants(field: &PopulationField, stencil: &Stencil) -> (f64, [f64; 3]) {
    let data = field.as_slice();
    let nodes = field.grid.nodes();
    let block_sums: Vec<f64> = (0..stencil.q)
        .map(|i| compensated_sum(data[i * nodes..(i + 1) * nodes].iter().copied()))
        .collect();
    let mass = compensated_sum(block_sums.iter().copied());
    let mut mom = [0.0f64; 3];
    for a in 0..stencil.d {
        mom[a] = compensated_sum(
            (0..stencil.q).map(|i| stencil.e_f64(i)[a] * block_sums[i]),
        );
    }
    (mass, mom)
}

#[test]
fn criterion_2_collision_conservation_over_long_runs() {
    const STEPS: usize = 1000;
    const TOL: f64 = 1e-12;
    let mut worst_mass = 0.0f64;
    let mut worst_mom = 0.0f64;
    for (stencil, n_side) in [(d2q9(), 32usize), (d3q19(), 16usize)] {
        let (mut field, h) = random_near_equilibrium(&stencil, n_side, 0x5eed);
        let params = make_scaling(0.02, h).unwrap();
        let (mass0, mom0) = invariants(&field, &stencil);
        let mut stepper = Stepper::new(field.grid, stencil.q, 1);
        for _ in 0..STEPS {
            stepper.step_in_place(&mut field, &stencil, &params).unwrap();
        }
        let (mass1, mom1) = invariants(&field, &stencil);
        worst_mass = worst_mass.max((mass1 - mass0).abs() / mass0);
        for a in 0..stencil.d {
            worst_mom = worst_mom.max((mom1[a] - mom0[a]).abs());
        }
    }
    verdict(
        2,
        "collision conservation",
        worst_mass <= TOL && worst_mom <= TOL,
        &format!(
            "{STEPS} steps: mass drift {worst_mass:.2e} rel, momentum drift {worst_mom:.2e} abs, bound {TOL:.0e}"
        ),
    );
}

#[test]
fn criterion_3_equilibrium_remainder_order() {
    const BAND: f64 = 0.3;
    let h_list = [0.2, 0.1, 0.05, 0.025];
    let mut detail = String::new();
    let mut ok = true;
    for d in [2usize, 3] {
        let state = MacroState::new(1.0, [0.3, -0.2, if d == 3 { 0.1 } else { 0.0 }]);
        let slopes = remainder_probe(&state, [1.0, -1.0, 0.0], d, &h_list).unwrap();
        let expected = d as f64 + 3.0;
        match slopes.full_vs_truncated {
            SlopeFit::Slope(p) => {
                ok &= (p - expected).abs() <= BAND;
                detail.push_str(&format!("{d}d slope {p:.3} (want {expected} +- {BAND}); "));
            }
            SlopeFit::Exact => {
                ok = false;
                detail.push_str(&format!("{d}d unexpectedly exact; "));
            }
        }
    }
    verdict(3, "equilibrium remainder order", ok, detail.trim_end());
}

#[test]
fn criterion_4_update_residual_order_and_limsup() {
    const MIN_SLOPE: f64 = 1.8;
    let nu = 0.02;
    let flow = taylor_green_2d(0.8, 1.0, nu).unwrap();
    let stencil = d2q9();
    let ns = [16usize, 32, 64, 128];
    let mut hs = Vec::new();
    let mut sups = Vec::new();
    for &n in &ns {
        let sample = ansatz_residual_sup(&flow, &stencil, nu, n).unwrap();
        hs.push(sample.h);
        sups.push(sample.sup);
    }
    let slope = match fit_order(&hs, &sups).unwrap() {
        SlopeFit::Slope(p) => p,
        SlopeFit::Exact => f64::INFINITY,
    };
    let probe2 = limsup_probe(&flow, &stencil, nu, 2, &ns, DEFAULT_LIMSUP_SLACK).unwrap();
    let probe3 = limsup_probe(&flow, &stencil, nu, 3, &ns, DEFAULT_LIMSUP_SLACK).unwrap();
    verdict(
        4,
        "update-rule residual order",
        slope >= MIN_SLOPE && probe2.bounded && !probe3.bounded,
        &format!(
            "residual slope {slope:.3} (want >= {MIN_SLOPE}), k=2 {}, k=3 {}",
            if probe2.bounded { "bounded" } else { "unbounded" },
            if probe3.bounded { "bounded" } else { "unbounded" },
        ),
    );
}

#[test]
fn criterion_5_taylor_green_velocity_convergence() {
    const BAND: (f64, f64) = (1.7, 2.3);
    let nu = 0.02;
    let flow = taylor_green_2d(0.8, 1.0, nu).unwrap();
    let t_end = 0.2 / (4.0 * PI * PI * nu);
    let results = convergence_study(
        &flow,
        &d2q9(),
        nu,
        &[16, 32, 64, 128],
        t_end,
        &StudyOptions::default(),
    )
    .unwrap();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for r in &results {
        match &r.outcome {
            Outcome::Converged(c) => {
                errs.push(c.l2_velocity);
                hs.push(r.h);
            }
            Outcome::Unstable { message } => panic!("N={} unstable: {message}", r.n),
        }
    }
    let orders = eoc(&errs, &hs).unwrap();
    let finest = *orders.last().unwrap();
    verdict(
        5,
        "vortex-decay velocity convergence",
        finest >= BAND.0 && finest <= BAND.1,
        &format!("finest-pair l2 order {finest:.3}, band [{}, {}]", BAND.0, BAND.1),
    );
}

#[test]
fn criterion_6_shear_wave_effective_viscosity() {
    const BAND: (f64, f64) = (1.7, 2.3);
    let nu = 0.04;
    let flow = shear_wave(0.1, 1.0, nu, 3).unwrap();
    let k = flow.wavenumber();
    let t_end = 1.0 / (nu * k * k);
    let results = convergence_study(
        &flow,
        &d3q19(),
        nu,
        &[8, 16, 32],
        t_end,
        &StudyOptions::default(),
    )
    .unwrap();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for r in &results {
        match &r.outcome {
            Outcome::Converged(c) => {
                let nu_eff = c.nu_eff.expect("shear runs measure nu_eff");
                errs.push((nu_eff - nu).abs() / nu);
                hs.push(r.h);
            }
            Outcome::Unstable { message } => panic!("N={} unstable: {message}", r.n),
        }
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let orders = eoc(&errs, &hs).unwrap();
    let finest = *orders.last().unwrap();
    verdict(
        6,
        "shear-wave effective viscosity",
        decreasing && finest >= BAND.0 && finest <= BAND.1,
        &format!(
            "rel errors {}, finest-pair order {finest:.3}, band [{}, {}]",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" -> "),
            BAND.0,
            BAND.1
        ),
    );
}

#[test]
fn criterion_7_newtonian_stress_recovery() {
    const SIGN_MIN: f64 = 0.95;
    let nu = 0.02;
    let flow = taylor_green_2d(0.8, 1.0, nu).unwrap();
    let t_snap = 0.05 / (4.0 * PI * PI * nu);
    let results = stress_study(
        &flow,
        &d2q9(),
        nu,
        &[32, 64, 128],
        t_snap,
        &StudyOptions::default(),
    )
    .unwrap();
    let mut errs = Vec::new();
    let mut worst_sign = 1.0f64;
    for r in &results {
        match &r.outcome {
            StressOutcome::Converged(n) => {
                errs.push(n.rel_sup);
                worst_sign = worst_sign.min(n.sign_agreement);
            }
            StressOutcome::Unstable { message } => panic!("N={} unstable: {message}", r.n),
        }
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    verdict(
        7,
        "deviatoric stress recovery",
        decreasing && worst_sign >= SIGN_MIN,
        &format!(
            "rel sup {}, worst sign agreement {worst_sign:.4} (floor {SIGN_MIN})",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" -> "),
        ),
    );
}

#[test]
fn criterion_8_ideal_gas_pressure_at_equilibrium() {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1dea);
    let mut worst = 0.0f64;
    for stencil in [d2q9(), d3q19()] {
        for _ in 0..100 {
            let h: f64 = rng.gen_range(0.02..0.2);
            let params = make_scaling(rng.gen_range(0.005..0.1), h).unwrap();
            let n: f64 = rng.gen_range(0.5..2.0);
            let mut u = [0.0; 3];
            for a in 0..stencil.d {
                u[a] = rng.gen_range(-0.2..0.2) / h;
            }
            let feq = lattice_equilibrium(&MacroState::new(n, u), &stencil, &params);
            let set = moment_set(&feq, &stencil, &params).unwrap();
            let ideal = n * params.rt;
            worst = worst.max((set.pressure - ideal).abs() / ideal);
        }
    }
    verdict(
        8,
        "ideal-gas pressure at equilibrium",
        worst <= TOL,
        &format!("worst relative gap {worst:.2e} over 200 random states, bound {TOL:.0e}"),
    );
}

#[test]
fn criterion_9_worker_count_determinism() {
    let mut reports: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for workers in [1usize, 4] {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "case = taylor_green_2d\nstencil = d2q9\nN_list = 16 32 64 128\nnu = 0.02\n\
             study = convergence\nworker_count = {workers}\noutput_dir = {}\n",
            dir.path().display()
        );
        let cfg = parse_config(&text).unwrap();
        let outcome = run_experiment(&cfg).unwrap();
        assert_eq!(outcome.status.code(), 0, "study should pass: {:?}", outcome.checks);
        reports.push((
            std::fs::read(dir.path().join("report.csv")).unwrap(),
            std::fs::read(dir.path().join("summary.txt")).unwrap(),
        ));
    }
    let identical = reports[0] == reports[1];
    verdict(
        9,
        "worker-count determinism",
        identical,
        "report.csv and summary.txt bitwise identical for 1 and 4 workers",
    );
}
