#![allow(dead_code)]

use std::sync::Arc;

use ilc_core::plant::{NoiseModel, PlantOracle};
use ilc_core::rng::{self, Stream};
use ilc_core::{lift, sysgen, LiftedSystem, Signal, Space, StateSpace};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn system(n_x: usize, n_i: usize, n_o: usize, n: usize, seed: u64) -> (StateSpace, LiftedSystem) {
    let ss = sysgen::generate_system(n_x, n_i, n_o, seed).unwrap();
    let j = lift(&ss, n).unwrap();
    (ss, j)
}

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    rng::stream(seed ^ 0x5eed, Stream::Noise)
}

pub fn random_signal(rng: &mut ChaCha8Rng, space: Space, n: usize, channels: usize) -> Signal {
    let data = (0..n * channels).map(|_| rng.sample(StandardNormal)).collect();
    Signal::from_vec(space, n, channels, data).unwrap()
}

pub fn oracle(j: LiftedSystem, r: Signal) -> PlantOracle {
    PlantOracle::new(Arc::new(j), r, NoiseModel::none()).unwrap()
}

/// Lifted matrix assembled column by column from the state recursion.
pub fn simulated_matrix(ss: &StateSpace, n: usize) -> DMatrix<f64> {
    let cols = n * ss.n_i();
    let mut out = DMatrix::zeros(n * ss.n_o(), cols);
    for c in 0..cols {
        let mut u = Signal::zeros(Space::Input, n, ss.n_i());
        u.as_mut_slice()[c] = 1.0;
        let y = ss.simulate(&u).unwrap();
        out.column_mut(c).copy_from_slice(y.as_slice());
    }
    out
}

pub fn to_vector(x: &Signal) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(x.as_slice())
}

/// `||a - b|| / ||b||`, or `||a||` when `b` is zero.
pub fn rel_err(a: &Signal, b: &Signal) -> f64 {
    let d = a.sub(b).norm();
    let s = b.norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}
