//! Experiment interface around a hidden lifted system.
//!
//! Every evaluation of `J u` on the oracle is one experiment: it bumps the
//! counter and, with a noise model, adds i.i.d. Gaussian noise to the
//! measured output.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{IlcError, Result};
use crate::lifted::LiftedSystem;
use crate::rng::{self, Stream};
use crate::signal::{Signal, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Gaussian,
}

/// Additive output noise. `seed` selects the noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(IlcError::Config(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// True when measurements carry noise.
    pub fn is_active(&self) -> bool {
        self.kind == NoiseKind::Gaussian && self.sigma > 0.0
    }
}

/// Result of one trial: measured error and the cost computed from it.
#[derive(Debug, Clone)]
pub struct Trial {
    pub error: Signal,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct PlantOracle {
    system: Arc<LiftedSystem>,
    disturbance: Signal,
    noise: NoiseModel,
    noise_rng: ChaCha8Rng,
    experiments: u64,
    gain_sq: f64,
}

impl PlantOracle {
    pub fn new(system: Arc<LiftedSystem>, disturbance: Signal, noise: NoiseModel) -> Result<Self> {
        disturbance.check_shape(Space::Output, system.trial_length(), system.n_o())?;
        noise.validate()?;
        Ok(Self {
            system,
            disturbance,
            noise_rng: rng::stream(noise.seed, Stream::Noise),
            noise,
            experiments: 0,
            gain_sq: 0.0,
        })
    }

    pub fn n_i(&self) -> usize {
        self.system.n_i()
    }
    pub fn n_o(&self) -> usize {
        self.system.n_o()
    }
    pub fn trial_length(&self) -> usize {
        self.system.trial_length()
    }
    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn input_zeros(&self) -> Signal {
        self.system.input_zeros()
    }

    pub fn output_zeros(&self) -> Signal {
        self.system.output_zeros()
    }

    fn measure(&mut self, u: &Signal) -> Result<Signal> {
        let mut y = self.system.apply(u)?;
        if self.noise.is_active() {
            let sigma = self.noise.sigma;
            for v in y.as_mut_slice() {
                let z: f64 = self.noise_rng.sample(StandardNormal);
                *v += sigma * z;
            }
        }
        self.experiments += 1;
        let u_sq = u.norm_sq();
        if u_sq > 0.0 {
            self.gain_sq = self.gain_sq.max(y.norm_sq() / u_sq);
        }
        Ok(y)
    }

    /// Applies `f` with the disturbance present and measures `e = r - y`.
    pub fn run_trial(&mut self, f: &Signal) -> Result<Trial> {
        let y = self.measure(f)?;
        let error = self.disturbance.sub(&y);
        let cost = error.norm_sq();
        Ok(Trial { error, cost })
    }

    /// Dedicated experiment: measures `J u` (plus noise) with the
    /// disturbance path removed.
    pub fn probe(&mut self, u: &Signal) -> Result<Signal> {
        self.measure(u)
    }

    /// Experiments performed so far.
    pub fn snapshot_count(&self) -> u64 {
        self.experiments
    }

    /// Largest `||y||^2 / ||u||^2` seen over all experiments so far, a
    /// data-driven lower estimate of `||J||^2`.
    pub fn gain_sq_estimate(&self) -> f64 {
        self.gain_sq
    }

    /// Noise-free cost `||r - J f||^2`. Bookkeeping only; not an experiment.
    pub fn true_cost(&self, f: &Signal) -> Result<f64> {
        Ok(self.disturbance.sub(&self.system.apply(f)?).norm_sq())
    }

    /// The hidden model. Only the model-based baseline and analysis code
    /// may use this; the data-driven solvers never do.
    pub fn model(&self) -> &LiftedSystem {
        &self.system
    }

    pub fn disturbance(&self) -> &Signal {
        &self.disturbance
    }
}
