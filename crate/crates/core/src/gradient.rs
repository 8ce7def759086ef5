//! Gradients of the trial cost `||e||^2` from plant experiments.
//!
//! The exact gradient is `g = -2 J^T e`. For SISO plants `J^T = T J T`
//! with `T` the time reversal, so one experiment on the reversed error
//! suffices. For MIMO plants the reversal trick yields the block-transposed
//! system instead of `J^T`; two routes are provided:
//!
//! * [`deterministic_gradient`] recovers `J^T e` exactly with one probe per
//!   input/output pair (`n_i * n_o` experiments).
//! * [`stochastic_gradient`] mixes all channels with a random +/-1 mask
//!   and needs a single probe. Its expectation over masks is exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plant::PlantOracle;
use crate::signal::{Signal, Space};

/// Random `n_i x n_o` matrix of symmetric +/-1 entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliMask {
    n_i: usize,
    n_o: usize,
    /// Row-major, entry `(l, m)` at `l * n_o + m`.
    signs: Vec<i8>,
    draw_id: u64,
}

impl BernoulliMask {
    pub fn from_signs(n_i: usize, n_o: usize, signs: Vec<i8>) -> Self {
        assert_eq!(signs.len(), n_i * n_o);
        assert!(signs.iter().all(|&s| s == 1 || s == -1));
        Self {
            n_i,
            n_o,
            signs,
            draw_id: 0,
        }
    }

    /// The `index`-th mask in a fixed enumeration of all `2^(n_i n_o)` masks.
    pub fn enumerated(n_i: usize, n_o: usize, index: u64) -> Self {
        let signs = (0..n_i * n_o)
            .map(|bit| if index >> bit & 1 == 1 { -1 } else { 1 })
            .collect();
        Self::from_signs(n_i, n_o, signs)
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }
    pub fn n_o(&self) -> usize {
        self.n_o
    }

    /// Sequence number of this draw within its stream (0 for masks built by hand).
    pub fn draw_id(&self) -> u64 {
        self.draw_id
    }

    pub fn sign(&self, l: usize, m: usize) -> f64 {
        f64::from(self.signs[l * self.n_o + m])
    }

    /// `A = a (x) I_N` as an operator from output space to input space.
    pub fn expand(&self, n: usize) -> MaskOperator<'_> {
        MaskOperator { mask: self, n }
    }

    /// Dense `(N n_i) x (N n_o)` Kronecker matrix, for tests.
    pub fn to_dense(&self, n: usize) -> nalgebra::DMatrix<f64> {
        let a = nalgebra::DMatrix::from_fn(self.n_i, self.n_o, |l, m| self.sign(l, m));
        a.kronecker(&nalgebra::DMatrix::identity(n, n))
    }
}

/// Draws masks from an rng stream.
#[derive(Debug)]
pub struct MaskSampler<R> {
    rng: R,
    draws: u64,
}

impl<R: Rng> MaskSampler<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, draws: 0 }
    }

    pub fn draw(&mut self, n_i: usize, n_o: usize) -> BernoulliMask {
        let mut mask = draw_mask(&mut self.rng, n_i, n_o);
        self.draws += 1;
        mask.draw_id = self.draws;
        mask
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// Fresh i.i.d. mask with `P(+1) = P(-1) = 1/2`.
pub fn draw_mask<R: Rng + ?Sized>(rng: &mut R, n_i: usize, n_o: usize) -> BernoulliMask {
    let signs = (0..n_i * n_o)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    BernoulliMask {
        n_i,
        n_o,
        signs,
        draw_id: 0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MaskOperator<'a> {
    mask: &'a BernoulliMask,
    n: usize,
}

impl MaskOperator<'_> {
    /// Input channel `l` becomes `sum_m a^{lm} v^m`, sample by sample.
    pub fn apply(&self, v: &Signal) -> Result<Signal> {
        v.check_shape(Space::Output, self.n, self.mask.n_o)?;
        let mut out = Signal::zeros(Space::Input, self.n, self.mask.n_i);
        for l in 0..self.mask.n_i {
            let dst = out.channel_mut(l);
            for m in 0..self.mask.n_o {
                let s = self.mask.sign(l, m);
                for (d, x) in dst.iter_mut().zip(v.channel(m)) {
                    *d += s * x;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// One masked experiment per gradient.
    StochasticSingle,
    /// One experiment per input/output pair.
    DeterministicFull,
}

#[derive(Debug, Clone)]
pub struct GradientEstimate {
    pub g_hat: Signal,
    pub experiments_used: u64,
    pub estimator: Estimator,
}

/// Single-experiment unbiased estimate `-2 T A J A T e` with a given mask.
pub fn stochastic_gradient_with_mask(
    oracle: &mut PlantOracle,
    e: &Signal,
    mask: &BernoulliMask,
) -> Result<GradientEstimate> {
    let n = oracle.trial_length();
    e.check_shape(Space::Output, n, oracle.n_o())?;
    let a = mask.expand(n);
    let u = a.apply(&e.time_reversed())?;
    let y = oracle.probe(&u)?;
    let g_hat = a.apply(&y)?.time_reversed().scaled(-2.0);
    Ok(GradientEstimate {
        g_hat,
        experiments_used: 1,
        estimator: Estimator::StochasticSingle,
    })
}

/// Draws a fresh mask and forms the single-experiment estimate.
pub fn stochastic_gradient<R: Rng>(
    oracle: &mut PlantOracle,
    e: &Signal,
    masks: &mut MaskSampler<R>,
) -> Result<GradientEstimate> {
    let mask = masks.draw(oracle.n_i(), oracle.n_o());
    stochastic_gradient_with_mask(oracle, e, &mask)
}

/// Exact `-2 J^T e` (up to measurement noise) from `n_i * n_o` probes.
///
/// The probe for pair `(l, m)` feeds the reversed output channel `m` into
/// input `l` and keeps output `m` of the response, which is the reversed
/// `(J^{ml})^T` applied to `e^m`.
pub fn deterministic_gradient(oracle: &mut PlantOracle, e: &Signal) -> Result<GradientEstimate> {
    let n = oracle.trial_length();
    let (n_i, n_o) = (oracle.n_i(), oracle.n_o());
    e.check_shape(Space::Output, n, n_o)?;
    let reversed = e.time_reversed();
    let mut acc = Signal::zeros(Space::Input, n, n_i);
    let mut u = Signal::zeros(Space::Input, n, n_i);
    for l in 0..n_i {
        for m in 0..n_o {
            u.as_mut_slice().fill(0.0);
            u.channel_mut(l).copy_from_slice(reversed.channel(m));
            let y = oracle.probe(&u)?;
            for (d, x) in acc.channel_mut(l).iter_mut().zip(y.channel(m)) {
                *d += x;
            }
        }
    }
    Ok(GradientEstimate {
        g_hat: acc.time_reversed().scaled(-2.0),
        experiments_used: (n_i * n_o) as u64,
        estimator: Estimator::DeterministicFull,
    })
}

/// Gradient from whichever estimator is requested.
pub fn estimate<R: Rng>(
    estimator: Estimator,
    oracle: &mut PlantOracle,
    e: &Signal,
    masks: &mut MaskSampler<R>,
) -> Result<GradientEstimate> {
    match estimator {
        Estimator::StochasticSingle => stochastic_gradient(oracle, e, masks),
        Estimator::DeterministicFull => deterministic_gradient(oracle, e),
    }
}
