//! Random stable benchmark systems and disturbances.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::lifted::StateSpace;
use crate::rng::{self, Stream};
use crate::signal::{Signal, Space};

/// Largest eigenvalue modulus of generated state matrices.
pub const MODULUS_CAP: f64 = 0.95;

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed orthogonal matrix via QR with sign-corrected columns.
fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Real block-diagonal matrix with random real eigenvalues and complex
/// conjugate pairs, all of modulus in `[0, cap]`.
fn random_modal_matrix<R: Rng>(rng: &mut R, n: usize, cap: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut k = 0;
    while k < n {
        let modulus = rng.random_range(0.0..=cap);
        if n - k >= 2 && rng.random_bool(0.5) {
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let (s, c) = angle.sin_cos();
            a[(k, k)] = modulus * c;
            a[(k, k + 1)] = modulus * s;
            a[(k + 1, k)] = -modulus * s;
            a[(k + 1, k + 1)] = modulus * c;
            k += 2;
        } else {
            a[(k, k)] = if rng.random_bool(0.5) { modulus } else { -modulus };
            k += 1;
        }
    }
    a
}

/// Random stable discrete-time system: `A = Q M Q^T` with `M` modal and
/// `Q` orthogonal, `B, C, D` i.i.d. standard normal. Deterministic in `seed`.
pub fn generate_system(n_x: usize, n_i: usize, n_o: usize, seed: u64) -> Result<StateSpace> {
    let mut rng = rng::stream(seed, Stream::System);
    let a = if n_x == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let m = random_modal_matrix(&mut rng, n_x, MODULUS_CAP);
        let q = random_orthogonal(&mut rng, n_x);
        &q * m * q.transpose()
    };
    let b = gaussian_matrix(&mut rng, n_x, n_i);
    let c = gaussian_matrix(&mut rng, n_o, n_x);
    let d = gaussian_matrix(&mut rng, n_o, n_i);
    StateSpace::new(a, b, c, d)
}

/// Constant `amplitude` on every output channel and sample.
pub fn make_step_disturbance(n: usize, n_o: usize, amplitude: f64) -> Signal {
    Signal::constant(Space::Output, n, n_o, amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifted::lift;

    #[test]
    fn static_when_no_states() {
        let ss = generate_system(0, 2, 3, 4).unwrap();
        let j = lift(&ss, 4).unwrap();
        for l in 0..3 {
            for m in 0..2 {
                assert_eq!(j.block(l, m), DMatrix::identity(4, 4) * ss.d()[(l, m)]);
            }
        }
    }

    #[test]
    fn benchmark_shape_and_stability() {
        let ss = generate_system(84, 21, 21, 1).unwrap();
        assert_eq!((ss.n_x(), ss.n_i(), ss.n_o()), (84, 21, 21));
        let rho = ss.spectral_radius().unwrap();
        assert!(rho <= MODULUS_CAP + 1e-9, "rho = {rho}");
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(generate_system(7, 2, 2, 3).unwrap(), generate_system(7, 2, 2, 3).unwrap());
        assert_ne!(generate_system(7, 2, 2, 3).unwrap(), generate_system(7, 2, 2, 4).unwrap());
    }

    #[test]
    fn non_symmetric_mimo() {
        let ss = generate_system(6, 2, 2, 9).unwrap();
        let j = lift(&ss, 5).unwrap();
        assert!((j.block(0, 1) - j.block(1, 0)).amax() > 1e-6);
    }

    #[test]
    fn step_disturbance() {
        let r = make_step_disturbance(3, 2, 1.0);
        assert_eq!(r.as_slice(), &[1.0; 6]);
        assert!(make_step_disturbance(3, 2, 0.0).is_zero());
        assert_eq!(make_step_disturbance(3, 2, 2.0), r.scaled(2.0));
    }
}
