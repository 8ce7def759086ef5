mod common;

use std::sync::Arc;

use common::*;
use ilc_core::plant::{NoiseModel, PlantOracle};
use ilc_core::solvers::{self, optimal_step, SolverConfig, SolverKind};
use ilc_core::{LiftedSystem, Signal, Space, StopReason};
use nalgebra::{DMatrix, DVector};

fn step_oracle(j: &Arc<LiftedSystem>) -> PlantOracle {
    let r = Signal::constant(Space::Output, j.trial_length(), j.n_o(), 1.0);
    PlantOracle::new(j.clone(), r, NoiseModel::none()).unwrap()
}

fn lifted(n_x: usize, n_i: usize, n_o: usize, n: usize, seed: u64) -> Arc<LiftedSystem> {
    Arc::new(system(n_x, n_i, n_o, n, seed).1)
}

#[test]
fn stochastic_cg_directions_are_successively_conjugate() {
    let j = lifted(4, 2, 2, 8, 3);
    let cfg = SolverConfig::new(SolverKind::StochCg)
        .with_max_iterations(12)
        .recording_directions();
    let t = solvers::run(&mut step_oracle(&j), &cfg).unwrap();
    let jp: Vec<Signal> = t.directions.iter().map(|p| j.apply(p).unwrap()).collect();
    for w in jp.windows(2) {
        let c = w[0].dot(&w[1]).abs() / (w[0].norm() * w[1].norm());
        assert!(c <= 1e-10, "conjugacy defect {c}");
    }
}

#[test]
fn deterministic_cg_terminates_on_small_system() {
    // SISO, N = 6: dimension 6
    let j = lifted(3, 1, 1, 6, 12);
    let cfg = SolverConfig::new(SolverKind::DetCg).with_max_iterations(50);
    let t = solvers::run(&mut step_oracle(&j), &cfg).unwrap();
    assert_eq!(t.stop, StopReason::CostTolerance);
    assert!(t.records.len() <= 6 + 1, "{} records", t.records.len());
}

/// Minimum of `||r - J f||^2` over `f` in span{b, Mb, .., M^{k-1} b},
/// `M = J^T J`, `b = J^T r`, by least squares on an orthonormal basis.
fn krylov_minimum(j: &DMatrix<f64>, r: &DVector<f64>, k: usize) -> f64 {
    let m = j.tr_mul(j);
    let mut v = j.tr_mul(r);
    let mut basis = DMatrix::zeros(j.ncols(), k);
    for c in 0..k {
        v /= v.norm();
        basis.set_column(c, &v);
        v = &m * &v;
    }
    let q = basis.qr().q();
    let jq = j * &q;
    let coeff = jq.clone().svd(true, true).solve(r, 1e-14).unwrap();
    (r - jq * coeff).norm_squared()
}

#[test]
fn deterministic_cg_is_krylov_optimal() {
    let j = lifted(5, 2, 2, 10, 21);
    let r = DVector::from_element(20, 1.0);
    let dense = j.to_dense();
    let cfg = SolverConfig::new(SolverKind::DetCg).with_max_iterations(6);
    let t = solvers::run(&mut step_oracle(&j), &cfg).unwrap();
    for (k, rec) in t.records.iter().enumerate().skip(1) {
        let best = krylov_minimum(&dense, &r, k);
        assert!(
            (rec.cost_true - best).abs() <= 1e-8 * t.records[0].cost_true,
            "iteration {}: {} vs {}",
            rec.j,
            rec.cost_true,
            best
        );
    }
}

#[test]
fn descent_is_monotone_without_noise() {
    for seed in 0..20 {
        let j = lifted(4, 2, 3, 8, 100 + seed);
        for kind in [SolverKind::StochCg, SolverKind::StochGd, SolverKind::DetCg, SolverKind::DetGd] {
            let cfg = SolverConfig::new(kind).with_max_iterations(15).with_seed(seed);
            let t = solvers::run(&mut step_oracle(&j), &cfg).unwrap();
            let first = t.records[0].cost_true;
            for w in t.records.windows(2) {
                assert!(
                    w[1].cost_true <= w[0].cost_true + 1e-12 * first,
                    "{} seed {seed}: {} -> {}",
                    kind.name(),
                    w[0].cost_true,
                    w[1].cost_true
                );
            }
        }
    }
}

#[test]
fn reset_every_iteration_is_stochastic_gd() {
    let j = lifted(4, 2, 2, 8, 5);
    let cg = SolverConfig::new(SolverKind::StochCg).with_reset_period(1).with_seed(3).with_max_iterations(10);
    let gd = SolverConfig::new(SolverKind::StochGd).with_seed(3).with_max_iterations(10);
    let a = solvers::run(&mut step_oracle(&j), &cg).unwrap();
    let b = solvers::run(&mut step_oracle(&j), &gd).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.cost_true.to_bits(), y.cost_true.to_bits());
        assert_eq!(x.epsilon, y.epsilon);
        assert_eq!(x.experiments_cum, y.experiments_cum);
    }
    assert_eq!(a.final_input, b.final_input);
}

#[test]
fn runs_are_deterministic() {
    let j = lifted(4, 2, 2, 8, 6);
    for kind in [SolverKind::StochCg, SolverKind::DetCg] {
        let cfg = SolverConfig::new(kind).with_seed(9).with_max_iterations(20);
        let noise = NoiseModel::gaussian(0.05, 2);
        let r = Signal::constant(Space::Output, 8, 2, 1.0);
        let run = || {
            let mut o = PlantOracle::new(j.clone(), r.clone(), noise).unwrap();
            solvers::run(&mut o, &cfg).unwrap().to_csv_string()
        };
        assert_eq!(run(), run());
    }
}

/// Minimum-phase 2x2 plant with a dominant feedthrough, well conditioned.
fn well_conditioned() -> Arc<LiftedSystem> {
    let ss = ilc_core::StateSpace::new(
        nalgebra::dmatrix![0.5, 0.2; -0.1, 0.3],
        nalgebra::dmatrix![1.0, 0.0; 0.3, 1.0],
        nalgebra::dmatrix![0.4, 0.1; 0.0, 0.5],
        nalgebra::dmatrix![2.0, 0.3; -0.2, 1.5],
    )
    .unwrap();
    Arc::new(ilc_core::lift(&ss, 6).unwrap())
}

#[test]
fn norm_optimal_matches_converged_cg() {
    let j = well_conditioned();
    let cg = solvers::run(
        &mut step_oracle(&j),
        &SolverConfig::new(SolverKind::DetCg).with_max_iterations(200),
    )
    .unwrap();
    let no = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::NormOptimal)).unwrap();
    assert_eq!(cg.stop, StopReason::CostTolerance);
    assert!(rel_err(&cg.final_input, &no.final_input) <= 1e-7);
}

#[test]
fn norm_optimal_cost_bounds_cg_on_ill_conditioned_plant() {
    let j = lifted(3, 2, 2, 6, 14);
    let cg = solvers::run(
        &mut step_oracle(&j),
        &SolverConfig::new(SolverKind::DetCg).with_max_iterations(200),
    )
    .unwrap();
    let no = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::NormOptimal)).unwrap();
    let first = cg.records[0].cost_true;
    let (c_cg, c_no) = (cg.records.last().unwrap().cost_true, no.records[1].cost_true);
    assert!(c_no <= c_cg + 1e-12 * first);
}

#[test]
fn line_search_minimizes_along_direction() {
    let j = lifted(4, 2, 2, 8, 30);
    let mut rng = test_rng(30);
    let r = Signal::constant(Space::Output, 8, 2, 1.0);
    for _ in 0..20 {
        let f = random_signal(&mut rng, Space::Input, 8, 2);
        let p = random_signal(&mut rng, Space::Input, 8, 2);
        let cost = |x: &Signal| r.sub(&j.apply(x).unwrap()).norm_sq();
        let e = r.sub(&j.apply(&f).unwrap());
        let eps = optimal_step(&e, &j.apply(&p).unwrap(), 0.0).unwrap();
        let at = cost(&solvers::update_input(&f, eps, &p));
        for d in [-1e-3, 1e-3, -1e-1, 1e-1] {
            let off = cost(&solvers::update_input(&f, eps * (1.0 + d), &p));
            assert!(at <= off + 1e-12 * cost(&f));
        }
        assert!(at <= cost(&f) * (1.0 + 1e-12));
    }
}

#[test]
fn fletcher_reeves_matches_measured_conjugation_with_exact_gradients() {
    let j = well_conditioned();
    let fr = SolverConfig::new(SolverKind::DetCg).with_max_iterations(10);
    let measured = SolverConfig::new(SolverKind::StochCg)
        .with_estimator(ilc_core::gradient::Estimator::DeterministicFull)
        .with_max_iterations(10)
        .recording_directions();
    let a = solvers::run(&mut step_oracle(&j), &fr.recording_directions()).unwrap();
    let b = solvers::run(&mut step_oracle(&j), &measured).unwrap();
    assert_eq!(a.directions.len(), b.directions.len());
    for (p, q) in a.directions.iter().zip(&b.directions) {
        assert!(rel_err(p, q) <= 1e-8);
    }
}

#[test]
fn siso_stochastic_cg_follows_deterministic_cg() {
    let j = lifted(3, 1, 1, 12, 4);
    let a = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::StochCg).with_max_iterations(6)).unwrap();
    let b = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::DetCg).with_max_iterations(6)).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.cost_true - y.cost_true).abs() <= 1e-10 * a.records[0].cost_true);
    }
}

#[test]
fn cg_is_at_least_as_good_as_gradient_descent() {
    for seed in 0..5 {
        let j = lifted(4, 2, 2, 8, 60 + seed);
        let cg = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::DetCg).with_max_iterations(10)).unwrap();
        let gd = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::DetGd).with_max_iterations(10)).unwrap();
        let first = cg.records[0].cost_true;
        for (x, y) in cg.records.iter().zip(&gd.records) {
            assert!(x.cost_true <= y.cost_true + 1e-12 * first, "seed {seed} iteration {}", x.j);
        }
    }
}

#[test]
fn deterministic_cg_spends_pairs_plus_two_per_iteration() {
    let j = lifted(3, 2, 3, 6, 2);
    let t = solvers::run(&mut step_oracle(&j), &SolverConfig::new(SolverKind::DetCg).with_max_iterations(4)).unwrap();
    let cum: Vec<u64> = t.records.iter().map(|r| r.experiments_cum).collect();
    assert_eq!(cum, vec![1, 9, 17, 25]);
}
