//! ILC iteration schemes.
//!
//! All data-driven solvers share one loop: measure the trial error, form a
//! gradient (estimate), pick a search direction and a step, update the
//! input `f <- f + eps p`. They differ in the gradient source, in how
//! directions are conjugated and in the step rule:
//!
//! | kind       | gradient        | direction               | step            |
//! |------------|-----------------|-------------------------|-----------------|
//! | `stoch_cg` | one masked exp. | measured `J^T J`-conj.  | line search     |
//! | `det_cg`   | `n_i n_o` exps. | Fletcher-Reeves         | line search     |
//! | `stoch_gd` | one masked exp. | gradient                | line search     |
//! | `det_gd`   | `n_i n_o` exps. | gradient                | line search     |
//!
//! `norm_optimal` is the model-based one-shot baseline.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{IlcError, Result};
use crate::gradient::{self, Estimator, MaskSampler};
use crate::plant::PlantOracle;
use crate::rng::{self, Stream};
use crate::signal::{Signal, Space};
use crate::trace::{IterationRecord, RunTrace, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    StochCg,
    DetCg,
    StochGd,
    DetGd,
    NormOptimal,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::StochCg => "stoch_cg",
            SolverKind::DetCg => "det_cg",
            SolverKind::StochGd => "stoch_gd",
            SolverKind::DetGd => "det_gd",
            SolverKind::NormOptimal => "norm_optimal",
        }
    }

    pub fn default_estimator(self) -> Estimator {
        match self {
            SolverKind::StochCg | SolverKind::StochGd => Estimator::StochasticSingle,
            SolverKind::DetCg | SolverKind::DetGd | SolverKind::NormOptimal => {
                Estimator::DeterministicFull
            }
        }
    }

    pub fn default_step(self) -> StepMode {
        StepMode::OptimalLineSearch
    }
}

/// Step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Exact minimizer along `p` from the measured `J p` (one probe).
    OptimalLineSearch,
    /// Classical CG step `-(g^T g) / (2 (Jp)^T (Jp))`. Equals the line
    /// search only when gradients are exact and directions conjugate.
    GradientNorm,
    /// Robbins-Monro schedule `f <- f - a / j^gamma * g`, no step probe.
    /// When `a` is absent it is set to `|eps_1|` from one line search in
    /// the first iteration.
    Decaying { a: Option<f64>, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Termination {
    /// Stop when `||Jp||^2 <= tol * ||p||^2 * ||J||^2_est`.
    pub eps_denominator_tol: f64,
    /// Stop when `cost_true <= tol * J(f_1)`.
    pub cost_tol: f64,
}

impl Default for Termination {
    fn default() -> Self {
        Self {
            eps_denominator_tol: 1e-14,
            cost_tol: 1e-16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Reset the direction to the gradient every `K` iterations.
    #[serde(default)]
    pub reset_period: Option<usize>,
    /// Defaults per kind, see [`SolverKind::default_step`].
    #[serde(default)]
    pub step_mode: Option<StepMode>,
    #[serde(default)]
    pub termination: Termination,
    /// Seeds the mask stream.
    #[serde(default)]
    pub seed: u64,
    /// Overrides the kind's gradient source.
    #[serde(default)]
    pub estimator: Option<Estimator>,
    /// Stop before a trial once this many experiments have been spent.
    #[serde(default)]
    pub max_experiments: Option<u64>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub record_directions: bool,
}

fn default_max_iterations() -> usize {
    1000
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            max_iterations: default_max_iterations(),
            reset_period: None,
            step_mode: None,
            termination: Termination::default(),
            seed: 0,
            estimator: None,
            max_experiments: None,
            name: None,
            record_directions: false,
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }
    pub fn with_reset_period(mut self, k: usize) -> Self {
        self.reset_period = Some(k);
        self
    }
    pub fn with_step(mut self, step: StepMode) -> Self {
        self.step_mode = Some(step);
        self
    }
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_estimator(mut self, e: Estimator) -> Self {
        self.estimator = Some(e);
        self
    }
    pub fn with_budget(mut self, experiments: u64) -> Self {
        self.max_experiments = Some(experiments);
        self
    }
    pub fn recording_directions(mut self) -> Self {
        self.record_directions = true;
        self
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator.unwrap_or(self.kind.default_estimator())
    }

    pub fn step(&self) -> StepMode {
        self.step_mode.unwrap_or(self.kind.default_step())
    }

    /// Display name: explicit `name`, else the kind plus any override.
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let mut s = self.kind.name().to_string();
        if self.estimator() != self.kind.default_estimator() {
            s.push_str(match self.estimator() {
                Estimator::StochasticSingle => "+single_grad",
                Estimator::DeterministicFull => "+full_grad",
            });
        }
        if let Some(k) = self.reset_period {
            s.push_str(&format!("+reset{k}"));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(IlcError::Config("max_iterations must be positive".into()));
        }
        if self.reset_period == Some(0) {
            return Err(IlcError::Config("reset_period must be at least 1".into()));
        }
        if self.max_experiments == Some(0) {
            return Err(IlcError::Config("experiment budget must be positive".into()));
        }
        match self.step() {
            StepMode::Decaying { a, gamma } => {
                if a.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
                    return Err(IlcError::Config("decaying step needs a > 0".into()));
                }
                if !(gamma > 0.5 && gamma <= 1.0) {
                    return Err(IlcError::Config("decaying step needs 0.5 < gamma <= 1".into()));
                }
                if !matches!(self.kind, SolverKind::StochGd | SolverKind::DetGd) {
                    return Err(IlcError::Config(
                        "decaying steps apply to gradient descent only".into(),
                    ));
                }
            }
            StepMode::GradientNorm => {
                if self.kind != SolverKind::DetCg {
                    return Err(IlcError::Config(
                        "gradient_norm steps need Fletcher-Reeves directions (det_cg)".into(),
                    ));
                }
            }
            StepMode::OptimalLineSearch => {}
        }
        Ok(())
    }
}

/// `tau = -(Jp)^T (Jg) / (Jp)^T (Jp)`, making `g + tau p` conjugate to `p`
/// under `J^T J`. `None` when the denominator does not exceed `floor`.
pub fn conjugation_coefficient(jp_prev: &Signal, jg_new: &Signal, floor: f64) -> Option<f64> {
    let den = jp_prev.norm_sq();
    (den > floor && den.is_finite()).then(|| -jp_prev.dot(jg_new) / den)
}

/// `tau = g_new^T g_new / g_old^T g_old`. Valid for exact gradients only.
pub fn fletcher_reeves_coefficient(g_new: &Signal, g_old: &Signal, floor: f64) -> Option<f64> {
    let den = g_old.norm_sq();
    (den > floor && den.is_finite()).then(|| g_new.norm_sq() / den)
}

/// Exact line minimizer `eps = e^T (Jp) / (Jp)^T (Jp)` of `||e - eps Jp||^2`.
pub fn optimal_step(e: &Signal, jp: &Signal, floor: f64) -> Option<f64> {
    let den = jp.norm_sq();
    (den > floor && den.is_finite()).then(|| e.dot(jp) / den)
}

/// `eps = -(g^T g) / (2 (Jp)^T (Jp))` for gradients scaled as `-2 J^T e`.
pub fn gradient_norm_step(g: &Signal, jp: &Signal, floor: f64) -> Option<f64> {
    let den = jp.norm_sq();
    (den > floor && den.is_finite()).then(|| -g.norm_sq() / (2.0 * den))
}

/// `f + eps p`.
pub fn update_input(f: &Signal, eps: f64, p: &Signal) -> Signal {
    let mut out = f.clone();
    out.axpy(eps, p);
    out
}

/// Runs the solver selected by `cfg.kind` from `f_1 = 0`.
pub fn run(oracle: &mut PlantOracle, cfg: &SolverConfig) -> Result<RunTrace> {
    match cfg.kind {
        SolverKind::StochCg => run_stochastic_cg(oracle, cfg),
        SolverKind::DetCg => run_deterministic_cg(oracle, cfg),
        SolverKind::StochGd | SolverKind::DetGd => run_gradient_descent(oracle, cfg),
        SolverKind::NormOptimal => run_norm_optimal(oracle, cfg),
    }
}

pub fn run_stochastic_cg(oracle: &mut PlantOracle, cfg: &SolverConfig) -> Result<RunTrace> {
    expect_kind(cfg, &[SolverKind::StochCg])?;
    run_iterative(oracle, cfg, Direction::MeasuredConjugate)
}

pub fn run_deterministic_cg(oracle: &mut PlantOracle, cfg: &SolverConfig) -> Result<RunTrace> {
    expect_kind(cfg, &[SolverKind::DetCg])?;
    run_iterative(oracle, cfg, Direction::FletcherReeves)
}

pub fn run_gradient_descent(oracle: &mut PlantOracle, cfg: &SolverConfig) -> Result<RunTrace> {
    expect_kind(cfg, &[SolverKind::StochGd, SolverKind::DetGd])?;
    run_iterative(oracle, cfg, Direction::Gradient)
}

fn expect_kind(cfg: &SolverConfig, kinds: &[SolverKind]) -> Result<()> {
    cfg.validate()?;
    if kinds.contains(&cfg.kind) {
        Ok(())
    } else {
        Err(IlcError::Config(format!(
            "solver entry point does not handle {}",
            cfg.kind.name()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    MeasuredConjugate,
    FletcherReeves,
    Gradient,
}

/// Previous iteration's direction data.
struct Previous {
    p: Signal,
    jp: Signal,
    g: Signal,
    /// Denominator floor that was applied to `jp`.
    floor: f64,
}

fn run_iterative(oracle: &mut PlantOracle, cfg: &SolverConfig, direction: Direction) -> Result<RunTrace> {
    let estimator = cfg.estimator();
    let step_mode = cfg.step();
    let mut masks = MaskSampler::new(rng::stream(cfg.seed, Stream::Mask));
    let mut f = oracle.input_zeros();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut directions = Vec::new();
    let mut prev: Option<Previous> = None;
    let mut initial_true = 0.0;
    let mut decay_scale = match step_mode {
        StepMode::Decaying { a, .. } => a,
        _ => None,
    };
    let mut stop = StopReason::MaxIterations;

    for j in 1..=cfg.max_iterations {
        if cfg
            .max_experiments
            .is_some_and(|b| oracle.snapshot_count() >= b)
        {
            stop = StopReason::Budget;
            break;
        }
        let trial = oracle.run_trial(&f)?;
        let cost_true = oracle.true_cost(&f)?;
        if j == 1 {
            initial_true = cost_true;
        }
        records.push(IterationRecord {
            j,
            experiments_cum: oracle.snapshot_count(),
            cost_measured: trial.cost,
            cost_true,
            epsilon: None,
            tau: None,
            reset: false,
        });
        if cost_true <= cfg.termination.cost_tol * initial_true {
            stop = StopReason::CostTolerance;
            break;
        }

        let g = gradient::estimate(estimator, oracle, &trial.error, &mut masks)?.g_hat;
        if g.is_zero() {
            stop = StopReason::DegenerateDirection;
            break;
        }

        let reset_due = j >= 2 && cfg.reset_period.is_some_and(|k| (j - 1) % k == 0);
        let (p, tau) = match (&prev, direction) {
            (Some(pr), Direction::MeasuredConjugate) if !reset_due => {
                let jg = oracle.probe(&g)?;
                match conjugation_coefficient(&pr.jp, &jg, pr.floor) {
                    Some(tau) => (update_input(&g, tau, &pr.p), Some(tau)),
                    None => {
                        stop = StopReason::DegenerateDirection;
                        break;
                    }
                }
            }
            (Some(pr), Direction::FletcherReeves) if !reset_due => {
                match fletcher_reeves_coefficient(&g, &pr.g, 0.0) {
                    Some(tau) => (update_input(&g, tau, &pr.p), Some(tau)),
                    None => {
                        stop = StopReason::DegenerateDirection;
                        break;
                    }
                }
            }
            _ => (g.clone(), None),
        };
        let reset = reset_due && direction != Direction::Gradient;
        if let Some(rec) = records.last_mut() {
            rec.tau = tau;
            rec.reset = reset;
        }

        let needs_probe = match step_mode {
            StepMode::Decaying { .. } => decay_scale.is_none(),
            _ => true,
        };
        let measured = if needs_probe {
            let jp = oracle.probe(&p)?;
            let floor = cfg.termination.eps_denominator_tol * p.norm_sq() * oracle.gain_sq_estimate();
            let eps = match step_mode {
                StepMode::GradientNorm => gradient_norm_step(&g, &jp, floor),
                _ => optimal_step(&trial.error, &jp, floor),
            };
            match eps {
                Some(eps) => Some((jp, floor, eps)),
                None => {
                    stop = StopReason::DegenerateDirection;
                    break;
                }
            }
        } else {
            None
        };

        let eps = match step_mode {
            StepMode::Decaying { gamma, .. } => {
                let a = *decay_scale.get_or_insert_with(|| {
                    measured.as_ref().map_or(0.0, |(_, _, eps)| eps.abs())
                });
                -a / (j as f64).powf(gamma)
            }
            _ => measured.as_ref().map(|m| m.2).expect("probe taken for line search"),
        };

        f = update_input(&f, eps, &p);
        if let Some(rec) = records.last_mut() {
            rec.epsilon = Some(eps);
        }
        if cfg.record_directions {
            directions.push(p.clone());
        }
        prev = measured.map(|(jp, floor, _)| Previous { p, jp, g, floor });
        if j == cfg.max_iterations {
            stop = StopReason::MaxIterations;
        }
    }

    Ok(RunTrace {
        config: cfg.clone(),
        records,
        final_input: f,
        stop,
        directions,
        notes: Vec::new(),
    })
}

/// Model-based baseline: `f_2 = f_1 + (J^T J)^{-1} J^T e_1`, then one
/// trial at `f_2`. Falls back to an SVD minimum-norm solution when `J` is
/// numerically rank deficient.
pub fn run_norm_optimal(oracle: &mut PlantOracle, cfg: &SolverConfig) -> Result<RunTrace> {
    expect_kind(cfg, &[SolverKind::NormOptimal])?;
    let f1 = oracle.input_zeros();
    let mut records = Vec::new();
    let mut notes = Vec::new();
    let first = oracle.run_trial(&f1)?;
    let true1 = oracle.true_cost(&f1)?;
    records.push(IterationRecord {
        j: 1,
        experiments_cum: oracle.snapshot_count(),
        cost_measured: first.cost,
        cost_true: true1,
        epsilon: None,
        tau: None,
        reset: false,
    });
    if true1 <= cfg.termination.cost_tol * true1 || cfg.max_iterations < 2 {
        let stop = if cfg.max_iterations < 2 {
            StopReason::MaxIterations
        } else {
            StopReason::CostTolerance
        };
        return Ok(RunTrace {
            config: cfg.clone(),
            records,
            final_input: f1,
            stop,
            directions: Vec::new(),
            notes,
        });
    }

    let (delta, used_pinv) = least_squares_update(oracle.model(), &first.error)?;
    if used_pinv {
        notes.push("J is rank deficient; used the SVD minimum-norm solution".to_string());
    }
    records[0].epsilon = Some(1.0);
    let f2 = update_input(&f1, 1.0, &delta);
    let second = oracle.run_trial(&f2)?;
    records.push(IterationRecord {
        j: 2,
        experiments_cum: oracle.snapshot_count(),
        cost_measured: second.cost,
        cost_true: oracle.true_cost(&f2)?,
        epsilon: None,
        tau: None,
        reset: false,
    });
    Ok(RunTrace {
        config: cfg.clone(),
        records,
        final_input: f2,
        stop: StopReason::Completed,
        directions: Vec::new(),
        notes,
    })
}

/// Solves `min ||e - J d||` for `d` by Householder QR of `J`, avoiding the
/// squared conditioning of `J^T J`. A collapsed diagonal of `R` switches to
/// the minimum-norm SVD solution; the second value reports that fallback.
pub fn least_squares_update(model: &crate::lifted::LiftedSystem, e: &Signal) -> Result<(Signal, bool)> {
    let j = model.to_dense();
    let rhs = DVector::from_column_slice(e.as_slice());
    let dim = j.nrows().max(j.ncols());
    let tol = f64::EPSILON * dim as f64;
    let qr = j.clone().qr();
    let diag = qr.r().diagonal().map(f64::abs);
    let rank_ok = j.nrows() >= j.ncols() && diag.min() > tol * diag.max();
    let (x, fallback) = if rank_ok {
        let qtb = qr.q().tr_mul(&rhs);
        let x = qr
            .r()
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| IlcError::Config("triangular solve failed".into()))?;
        (x, false)
    } else {
        let svd = j.svd(true, true);
        let cutoff = tol * svd.singular_values.max();
        let x = svd
            .solve(&rhs, cutoff)
            .map_err(|m| IlcError::Config(format!("SVD solve failed: {m}")))?;
        (x, true)
    };
    let delta = Signal::from_vec(Space::Input, model.trial_length(), model.n_i(), x.as_slice().to_vec())?;
    Ok((delta, fallback))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifted::{lift, LiftedSystem, StateSpace};
    use crate::plant::NoiseModel;
    use nalgebra::dmatrix;
    use std::sync::Arc;

    fn sig(data: &[f64]) -> Signal {
        Signal::from_vec(Space::Output, data.len(), 1, data.to_vec()).unwrap()
    }

    fn two_by_two() -> Arc<LiftedSystem> {
        let ss = StateSpace::new(
            dmatrix![0.6, 0.3; -0.2, 0.4],
            dmatrix![1.0, 0.2; -0.5, 1.0],
            dmatrix![1.0, 0.4; 0.1, -0.7],
            dmatrix![0.9, -0.3; 0.4, 1.1],
        )
        .unwrap();
        Arc::new(lift(&ss, 6).unwrap())
    }

    fn oracle(j: Arc<LiftedSystem>) -> PlantOracle {
        let r = Signal::constant(Space::Output, j.trial_length(), j.n_o(), 1.0);
        PlantOracle::new(j, r, NoiseModel::none()).unwrap()
    }

    #[test]
    fn tau_trivial_cases() {
        let jp = sig(&[1.0, 0.0]);
        assert_eq!(conjugation_coefficient(&jp, &sig(&[0.0, 3.0]), 0.0), Some(0.0));
        assert_eq!(conjugation_coefficient(&jp, &jp, 0.0), Some(-1.0));
        assert_eq!(conjugation_coefficient(&sig(&[0.0, 0.0]), &jp, 0.0), None);
    }

    #[test]
    fn fletcher_reeves_trivial_cases() {
        let g = sig(&[1.0, 2.0]);
        assert_eq!(fletcher_reeves_coefficient(&g, &g, 0.0), Some(1.0));
        assert_eq!(fletcher_reeves_coefficient(&sig(&[0.0, 0.0]), &g, 0.0), Some(0.0));
        assert_eq!(fletcher_reeves_coefficient(&g, &sig(&[0.0, 0.0]), 0.0), None);
    }

    #[test]
    fn step_trivial_cases() {
        let e = sig(&[2.0, -1.0]);
        assert_eq!(optimal_step(&e, &e, 0.0), Some(1.0));
        assert_eq!(optimal_step(&e, &sig(&[1.0, 2.0]), 0.0), Some(0.0));
        assert_eq!(optimal_step(&e, &sig(&[0.0, 0.0]), 0.0), None);
        assert_eq!(optimal_step(&e, &sig(&[1e-9, 0.0]), 1e-12), None);
    }

    #[test]
    fn update_trivial_cases() {
        let f = sig(&[1.0, 2.0]);
        let p = sig(&[0.5, -1.0]);
        assert_eq!(update_input(&f, 0.0, &p), f);
        assert_eq!(update_input(&f, 3.0, &sig(&[0.0, 0.0])), f);
        assert_eq!(
            update_input(&f, 2.0, &p),
            update_input(&update_input(&f, 1.0, &p), 1.0, &p)
        );
    }

    #[test]
    fn stochastic_cg_experiment_accounting() {
        let mut o = oracle(two_by_two());
        let cfg = SolverConfig::new(SolverKind::StochCg).with_max_iterations(5);
        let t = run_stochastic_cg(&mut o, &cfg).unwrap();
        let cum: Vec<u64> = t.records.iter().map(|r| r.experiments_cum).collect();
        assert_eq!(cum, vec![1, 4, 8, 12, 16]);
    }

    #[test]
    fn deterministic_accounting() {
        let mut o = oracle(two_by_two());
        let cfg = SolverConfig::new(SolverKind::DetGd).with_max_iterations(3);
        let t = run_gradient_descent(&mut o, &cfg).unwrap();
        let cum: Vec<u64> = t.records.iter().map(|r| r.experiments_cum).collect();
        assert_eq!(cum, vec![1, 7, 13]);
    }

    #[test]
    fn decaying_gd_uses_two_experiments_per_iteration() {
        let mut o = oracle(two_by_two());
        let cfg = SolverConfig::new(SolverKind::StochGd)
            .with_step(StepMode::Decaying { a: Some(1e-3), gamma: 1.0 })
            .with_max_iterations(4);
        let t = run_gradient_descent(&mut o, &cfg).unwrap();
        let cum: Vec<u64> = t.records.iter().map(|r| r.experiments_cum).collect();
        assert_eq!(cum, vec![1, 3, 5, 7]);
        assert_eq!(t.records[1].epsilon, Some(-1e-3 / 2.0));

        // default scale spends one step probe in the first iteration
        let mut o = oracle(two_by_two());
        let cfg = SolverConfig::new(SolverKind::StochGd)
            .with_step(StepMode::Decaying { a: None, gamma: 1.0 })
            .with_max_iterations(3);
        let t = run_gradient_descent(&mut o, &cfg).unwrap();
        let cum: Vec<u64> = t.records.iter().map(|r| r.experiments_cum).collect();
        assert_eq!(cum, vec![1, 4, 6]);
        let e1 = t.records[0].epsilon.unwrap();
        assert!((t.records[1].epsilon.unwrap() - e1 / 2.0).abs() <= 1e-15 * e1.abs());
    }

    #[test]
    fn zero_disturbance_stops_at_first_iteration() {
        let j = two_by_two();
        for kind in [
            SolverKind::StochCg,
            SolverKind::DetCg,
            SolverKind::StochGd,
            SolverKind::DetGd,
            SolverKind::NormOptimal,
        ] {
            let mut o = PlantOracle::new(j.clone(), j.output_zeros(), NoiseModel::none()).unwrap();
            let t = run(&mut o, &SolverConfig::new(kind)).unwrap();
            assert_eq!(t.records.len(), 1, "{}", kind.name());
            assert!(t.final_input.is_zero());
        }
    }

    #[test]
    fn budget_stops_before_trial() {
        let mut o = oracle(two_by_two());
        let cfg = SolverConfig::new(SolverKind::StochCg).with_budget(9);
        let t = run(&mut o, &cfg).unwrap();
        assert_eq!(t.stop, StopReason::Budget);
        assert_eq!(t.records.last().unwrap().experiments_cum, 8);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(SolverKind::StochCg).with_reset_period(0).validate().is_err());
        assert!(SolverConfig::new(SolverKind::StochGd)
            .with_step(StepMode::Decaying { a: Some(1.0), gamma: 0.5 })
            .validate()
            .is_err());
        assert!(SolverConfig::new(SolverKind::StochCg)
            .with_step(StepMode::Decaying { a: Some(1.0), gamma: 1.0 })
            .validate()
            .is_err());
        assert!(SolverConfig::new(SolverKind::StochGd)
            .with_step(StepMode::GradientNorm)
            .validate()
            .is_err());
        let mut o = oracle(two_by_two());
        assert!(run_gradient_descent(&mut o, &SolverConfig::new(SolverKind::StochCg)).is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: SolverConfig = serde_json::from_str(r#"{"kind":"det_cg"}"#).unwrap();
        assert_eq!(cfg, SolverConfig::new(SolverKind::DetCg));
        let cfg: SolverConfig = serde_json::from_str(
            r#"{"kind":"stoch_gd","step_mode":{"decaying":{"a":null,"gamma":0.75}},"reset_period":null}"#,
        )
        .unwrap();
        assert_eq!(cfg.step(), StepMode::Decaying { a: None, gamma: 0.75 });
        assert_eq!(
            SolverConfig::new(SolverKind::StochCg)
                .with_estimator(Estimator::DeterministicFull)
                .with_reset_period(20)
                .label(),
            "stoch_cg+full_grad+reset20"
        );
    }

    #[test]
    fn norm_optimal_solves_square_system() {
        let mut o = oracle(two_by_two());
        let t = run_norm_optimal(&mut o, &SolverConfig::new(SolverKind::NormOptimal)).unwrap();
        assert_eq!(t.records.len(), 2);
        assert!(t.records[1].cost_true <= 1e-20 * t.records[0].cost_true);
        assert!(t.notes.is_empty());
    }

    #[test]
    fn norm_optimal_pseudo_inverse_on_rank_deficient() {
        // two identical outputs driven by two identical inputs: rank 1 per sample
        let ss = StateSpace::static_gain(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        let j = Arc::new(lift(&ss, 3).unwrap());
        let r = Signal::from_vec(Space::Output, 3, 2, vec![1.0, 2.0, 3.0, 3.0, 2.0, 1.0]).unwrap();
        let mut o = PlantOracle::new(j, r, NoiseModel::none()).unwrap();
        let t = run_norm_optimal(&mut o, &SolverConfig::new(SolverKind::NormOptimal)).unwrap();
        assert_eq!(t.notes.len(), 1);
        // least-squares optimum: both outputs equal the channel average 2
        let expected = 4.0;
        assert!((t.records[1].cost_true - expected).abs() < 1e-9);
    }
}
