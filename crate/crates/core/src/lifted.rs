//! Discrete-time state-space models and their lifted (trial-domain) form.
//!
//! Over a trial of `N` samples a causal LTI system with `n_i` inputs and
//! `n_o` outputs acts as one matrix `J` of size `N*n_o x N*n_i`. Block
//! `(l, m)` is the `N x N` lower-triangular Toeplitz matrix of the impulse
//! response from input `m` to output `l`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{IlcError, Result};
use crate::signal::{Signal, Space};

/// Upper bound on dense lifted entries (about 2 GiB of f64).
pub const MAX_LIFTED_ENTRIES: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    /// Validates dimensions, finiteness and stability (spectral radius < 1).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n_x = a.nrows();
        if a.ncols() != n_x {
            return Err(IlcError::InvalidModel(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n_x {
            return Err(IlcError::InvalidModel(format!(
                "B has {} rows, expected {n_x}",
                b.nrows()
            )));
        }
        if c.ncols() != n_x {
            return Err(IlcError::InvalidModel(format!(
                "C has {} columns, expected {n_x}",
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(IlcError::InvalidModel(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if d.nrows() == 0 || d.ncols() == 0 {
            return Err(IlcError::InvalidModel(
                "system needs at least one input and one output".to_string(),
            ));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(IlcError::InvalidModel(format!("{name} has non-finite entries")));
            }
        }
        let ss = Self { a, b, c, d };
        let rho = ss.spectral_radius()?;
        if rho >= 1.0 {
            return Err(IlcError::InvalidModel(format!(
                "A is not stable: spectral radius {rho}"
            )));
        }
        Ok(ss)
    }

    /// Static gain `y = D u`.
    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let (n_o, n_i) = d.shape();
        Self::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, n_i),
            DMatrix::zeros(n_o, 0),
            d,
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_i(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_o(&self) -> usize {
        self.c.nrows()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        let n = self.n_x();
        if n == 0 {
            return Ok(0.0);
        }
        let schur = nalgebra::linalg::Schur::try_new(self.a.clone(), f64::EPSILON, 1000 * n)
            .ok_or_else(|| {
                IlcError::InvalidModel("eigenvalue iteration did not converge".to_string())
            })?;
        Ok(schur
            .complex_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm())))
    }

    /// Markov parameters `D, CB, CAB, ..., CA^{N-2}B`.
    pub fn markov_parameters(&self, n: usize) -> Result<Vec<DMatrix<f64>>> {
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return Ok(out);
        }
        out.push(self.d.clone());
        let mut x = self.b.clone();
        for lag in 1..n {
            let m = &self.c * &x;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(IlcError::NonFiniteMarkov { lag });
            }
            out.push(m);
            x = &self.a * &x;
        }
        Ok(out)
    }

    /// Runs the state recursion `x+ = Ax + Bu, y = Cx + Du` from `x = 0`.
    pub fn simulate(&self, u: &Signal) -> Result<Signal> {
        let n = u.len_per_channel();
        u.check_shape(Space::Input, n, self.n_i())?;
        let mut y = Signal::zeros(Space::Output, n, self.n_o());
        let mut x = nalgebra::DVector::zeros(self.n_x());
        for t in 0..n {
            let ut = nalgebra::DVector::from_iterator(self.n_i(), (0..self.n_i()).map(|m| u.channel(m)[t]));
            let yt = &self.c * &x + &self.d * &ut;
            for l in 0..self.n_o() {
                y.channel_mut(l)[t] = yt[l];
            }
            x = &self.a * &x + &self.b * &ut;
        }
        Ok(y)
    }
}

/// Dense lifted operator with channel metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    n: usize,
    n_i: usize,
    n_o: usize,
    markov: Vec<DMatrix<f64>>,
    /// `h_lm(k)` for block `(l, m)` at `(l * n_i + m) * N + k`.
    impulses: Vec<f64>,
    /// Row-major `(N*n_o) x (N*n_i)`.
    dense: Vec<f64>,
}

/// Inner product with independent partial sums so the loop vectorizes.
/// The summation order is fixed, so results are reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (xa, xb) in ca.zip(cb) {
        for k in 0..LANES {
            acc[k] += xa[k] * xb[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Lifts `ss` over a trial of `n` samples.
pub fn lift(ss: &StateSpace, n: usize) -> Result<LiftedSystem> {
    if n == 0 {
        return Err(IlcError::Config("trial length must be at least 1".to_string()));
    }
    check_lifted_size(n, ss.n_i(), ss.n_o())?;
    LiftedSystem::from_markov(n, ss.n_i(), ss.n_o(), ss.markov_parameters(n)?)
}

fn check_lifted_size(n: usize, n_i: usize, n_o: usize) -> Result<()> {
    let entries = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(n_i))
        .and_then(|v| v.checked_mul(n_o));
    match entries {
        Some(e) if e <= MAX_LIFTED_ENTRIES => Ok(()),
        _ => Err(IlcError::Config(format!(
            "lifted operator for N={n}, n_i={n_i}, n_o={n_o} exceeds {MAX_LIFTED_ENTRIES} entries"
        ))),
    }
}

impl LiftedSystem {
    /// Builds `J` from its first block column of Markov parameters
    /// (each `n_o x n_i`, lag 0 first).
    pub fn from_markov(n: usize, n_i: usize, n_o: usize, markov: Vec<DMatrix<f64>>) -> Result<Self> {
        if markov.len() != n {
            return Err(IlcError::Dimension(format!(
                "{} Markov parameters supplied for N = {n}",
                markov.len()
            )));
        }
        if let Some(bad) = markov.iter().find(|m| m.shape() != (n_o, n_i)) {
            return Err(IlcError::Dimension(format!(
                "Markov parameter is {:?}, expected ({n_o}, {n_i})",
                bad.shape()
            )));
        }
        if let Some(lag) = markov.iter().position(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(IlcError::NonFiniteMarkov { lag });
        }
        check_lifted_size(n, n_i, n_o)?;
        let cols = n * n_i;
        let mut dense = vec![0.0; n * n_o * cols];
        for l in 0..n_o {
            for t in 0..n {
                let row = &mut dense[(l * n + t) * cols..(l * n + t + 1) * cols];
                for m in 0..n_i {
                    for k in 0..=t {
                        row[m * n + k] = markov[t - k][(l, m)];
                    }
                }
            }
        }
        let mut impulses = vec![0.0; n * n_i * n_o];
        for l in 0..n_o {
            for m in 0..n_i {
                for (k, mk) in markov.iter().enumerate() {
                    impulses[(l * n_i + m) * n + k] = mk[(l, m)];
                }
            }
        }
        Ok(Self {
            n,
            n_i,
            n_o,
            markov,
            impulses,
            dense,
        })
    }

    pub fn trial_length(&self) -> usize {
        self.n
    }
    pub fn n_i(&self) -> usize {
        self.n_i
    }
    pub fn n_o(&self) -> usize {
        self.n_o
    }
    pub fn rows(&self) -> usize {
        self.n * self.n_o
    }
    pub fn cols(&self) -> usize {
        self.n * self.n_i
    }

    pub fn markov(&self) -> &[DMatrix<f64>] {
        &self.markov
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.dense[row * self.cols() + col]
    }

    /// Block `J^{lm}` (output `l`, input `m`) as an `N x N` matrix.
    pub fn block(&self, l: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |t, k| self.entry(l * self.n + t, m * self.n + k))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows(), self.cols(), &self.dense)
    }

    /// The block-transposed operator whose block `(m, l)` is `J^{lm}`.
    /// It maps output-space signals to input-space signals.
    pub fn block_transposed(&self) -> LiftedSystem {
        let markov = self.markov.iter().map(|m| m.transpose()).collect();
        LiftedSystem::from_markov(self.n, self.n_o, self.n_i, markov)
            .expect("transposed Markov sequence keeps valid shape")
    }

    pub fn input_zeros(&self) -> Signal {
        Signal::zeros(Space::Input, self.n, self.n_i)
    }

    pub fn output_zeros(&self) -> Signal {
        Signal::zeros(Space::Output, self.n, self.n_o)
    }

    /// `y = J f`, evaluated as one convolution per block,
    /// `y^l(t) = sum_m sum_k h_lm(k) f^m(t - k)`, over the stored impulse
    /// responses. Input channels that are identically zero are skipped.
    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        f.check_shape(Space::Input, self.n, self.n_i)?;
        let n = self.n;
        let mut y = Signal::zeros(Space::Output, n, self.n_o);
        let reversed: Vec<Option<Vec<f64>>> = (0..self.n_i)
            .map(|m| {
                let c = f.channel(m);
                c.iter().any(|&x| x != 0.0).then(|| c.iter().rev().copied().collect())
            })
            .collect();
        for l in 0..self.n_o {
            let out = y.channel_mut(l);
            for (m, fr) in reversed.iter().enumerate() {
                let Some(fr) = fr else { continue };
                let h = self.impulse_response(l, m);
                for (t, o) in out.iter_mut().enumerate() {
                    *o += dot(&h[..=t], &fr[n - 1 - t..]);
                }
            }
        }
        Ok(y)
    }

    /// Impulse response from input `m` to output `l` over the trial.
    pub fn impulse_response(&self, l: usize, m: usize) -> &[f64] {
        let start = (l * self.n_i + m) * self.n;
        &self.impulses[start..start + self.n]
    }

    /// `J^T v` computed from the stored entries. This is model access, not
    /// an experiment; it backs tests and the model-based baseline.
    pub fn adjoint_apply(&self, v: &Signal) -> Result<Signal> {
        v.check_shape(Space::Output, self.n, self.n_o)?;
        let n = self.n;
        let cols = self.cols();
        let mut out = vec![0.0; cols];
        for (row, &vr) in v.as_slice().iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            let t = row % n;
            let jr = &self.dense[row * cols..(row + 1) * cols];
            for m in 0..self.n_i {
                let off = m * n;
                for (o, a) in out[off..=off + t].iter_mut().zip(&jr[off..=off + t]) {
                    *o += a * vr;
                }
            }
        }
        Signal::from_vec(Space::Input, n, self.n_i, out)
    }
}

/// JSON document for a state-space model plus trial length. Matrices are
/// row-major nested arrays; the lifted operator is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n_x: usize,
    pub n_i: usize,
    pub n_o: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(IlcError::Parse(format!(
            "{name} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(IlcError::Parse(format!(
            "{name} has a row of length {}, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl SystemFile {
    pub fn new(ss: &StateSpace, n: usize) -> Self {
        Self {
            n_x: ss.n_x(),
            n_i: ss.n_i(),
            n_o: ss.n_o(),
            n,
            a: matrix_to_rows(ss.a()),
            b: matrix_to_rows(ss.b()),
            c: matrix_to_rows(ss.c()),
            d: matrix_to_rows(ss.d()),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Validates the matrices against the declared dimensions.
    pub fn state_space(&self) -> Result<StateSpace> {
        let a = matrix_from_rows("A", &self.a, self.n_x, self.n_x)?;
        let b = matrix_from_rows("B", &self.b, self.n_x, self.n_i)?;
        let c = matrix_from_rows("C", &self.c, self.n_o, self.n_x)?;
        let d = matrix_from_rows("D", &self.d, self.n_o, self.n_i)?;
        StateSpace::new(a, b, c, d)
    }

    pub fn lifted(&self) -> Result<LiftedSystem> {
        lift(&self.state_space()?, self.n)
    }
}
