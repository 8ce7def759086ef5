//! Stacked multichannel trial signals.
//!
//! A signal holds `channels` sampled sequences of length `n`, stored
//! back-to-back: channel `l` occupies `data[l * n..(l + 1) * n]`.

use serde::{Deserialize, Serialize};

use crate::error::{IlcError, Result};

/// Which side of the plant a signal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Plant input space, `n_i` channels (f, p, g).
    Input,
    /// Plant output space, `n_o` channels (e, r, y).
    Output,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Input => "input",
            Space::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    data: Vec<f64>,
    n: usize,
    channels: usize,
    space: Space,
}

impl Signal {
    pub fn zeros(space: Space, n: usize, channels: usize) -> Self {
        Self {
            data: vec![0.0; n * channels],
            n,
            channels,
            space,
        }
    }

    pub fn from_vec(space: Space, n: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * channels {
            return Err(IlcError::Dimension(format!(
                "signal data has {} samples, expected {} x {} = {}",
                data.len(),
                n,
                channels,
                n * channels
            )));
        }
        Ok(Self {
            data,
            n,
            channels,
            space,
        })
    }

    /// Builds a signal from one sample vector per channel.
    pub fn from_channels(space: Space, channels: &[Vec<f64>]) -> Result<Self> {
        let n = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n) {
            return Err(IlcError::Dimension(
                "channels have unequal lengths".to_string(),
            ));
        }
        let data = channels.iter().flatten().copied().collect();
        Self::from_vec(space, n, channels.len(), data)
    }

    pub fn constant(space: Space, n: usize, channels: usize, value: f64) -> Self {
        Self {
            data: vec![value; n * channels],
            n,
            channels,
            space,
        }
    }

    /// Samples per channel.
    pub fn len_per_channel(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, l: usize) -> &[f64] {
        &self.data[l * self.n..(l + 1) * self.n]
    }

    pub fn channel_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.n..(l + 1) * self.n]
    }

    /// Errors unless `other` has the same space, trial length and channel count.
    pub fn check_compatible(&self, other: &Signal) -> Result<()> {
        if self.space != other.space {
            return Err(IlcError::Space {
                expected: self.space.name(),
                found: other.space.name(),
            });
        }
        if self.n != other.n || self.channels != other.channels {
            return Err(IlcError::Dimension(format!(
                "signal shape {}x{} does not match {}x{}",
                other.channels, other.n, self.channels, self.n
            )));
        }
        Ok(())
    }

    /// Errors unless the signal has the given space and shape.
    pub fn check_shape(&self, space: Space, n: usize, channels: usize) -> Result<()> {
        if self.space != space {
            return Err(IlcError::Space {
                expected: space.name(),
                found: self.space.name(),
            });
        }
        if self.n != n || self.channels != channels {
            return Err(IlcError::Dimension(format!(
                "expected {} signal with {} channels of {} samples, got {} channels of {}",
                space.name(),
                channels,
                n,
                self.channels,
                self.n
            )));
        }
        Ok(())
    }

    /// Euclidean inner product. Panics when lengths differ.
    pub fn dot(&self, other: &Signal) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "dot of unequal signals");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn rms(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            (self.norm_sq() / self.data.len() as f64).sqrt()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: f64, x: &Signal) {
        assert_eq!(self.data.len(), x.data.len(), "axpy of unequal signals");
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Signal {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= alpha);
        out
    }

    pub fn add(&self, other: &Signal) -> Signal {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// True when every sample is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Reverses the sample order inside every channel.
    pub fn time_reversed(&self) -> Signal {
        let mut out = self.clone();
        if self.n > 0 {
            out.data.chunks_mut(self.n).for_each(|c| c.reverse());
        }
        out
    }
}

/// Time-reversal operator `T`, repeated block-diagonally over `channels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeReversal {
    pub n: usize,
    pub channels: usize,
}

impl TimeReversal {
    pub fn new(n: usize, channels: usize) -> Self {
        Self { n, channels }
    }

    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        if x.len_per_channel() != self.n || x.channels() != self.channels {
            return Err(IlcError::Dimension(format!(
                "time reversal of size {}x{} applied to {}x{} signal",
                self.channels,
                self.n,
                x.channels(),
                x.len_per_channel()
            )));
        }
        Ok(x.time_reversed())
    }

    /// Dense permutation matrix, for tests and small-scale checks.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let dim = self.n * self.channels;
        let mut t = nalgebra::DMatrix::zeros(dim, dim);
        for c in 0..self.channels {
            for k in 0..self.n {
                t[(c * self.n + k, c * self.n + self.n - 1 - k)] = 1.0;
            }
        }
        t
    }
}

/// Reverses the sample order inside every channel of `x`.
pub fn time_reverse(x: &Signal) -> Signal {
    x.time_reversed()
}
