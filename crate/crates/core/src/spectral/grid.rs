use std::fmt;
use std::sync::Arc;

use num::complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// Uniform periodic grid on [0, 2π)^dim with the same power-of-two
/// resolution on every axis. Cheap to clone; FFT plans are shared.
#[derive(Clone)]
pub struct Grid(Arc<Inner>);

struct Inner {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumber: Vec<i64>,
    deriv: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}^{})", self.0.n, self.0.dim)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.0.dim == other.0.dim && self.0.n == other.0.n
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(LabError::BadDimension(dim));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(LabError::BadResolution(n));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wavenumber: Vec<i64> = (0..n)
            .map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        // the Nyquist mode has no real derivative
        let deriv = (0..n)
            .map(|j| if j == n / 2 { 0.0 } else { wavenumber[j] as f64 })
            .collect();
        Ok(Grid(Arc::new(Inner { dim, n, forward, inverse, wavenumber, deriv })))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.0.n.pow(self.0.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.0.n as f64
    }

    /// Volume of one grid cell, so that sums times this are integrals.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.0.dim as i32)
    }

    /// Total volume (2π)^dim.
    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.0.dim as i32)
    }

    /// Multi-index of a flat row-major index (axis 0 slowest).
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.0.n;
        let mut out = [0usize; 3];
        let mut rem = idx;
        for a in (0..self.0.dim).rev() {
            out[a] = rem % n;
            rem /= n;
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        let n = self.0.n;
        mi.iter().take(self.0.dim).fold(0, |acc, &i| acc * n + (i % n))
    }

    /// Physical coordinates of a sample point; unused axes are zero.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.0.dim {
            x[a] = mi[a] as f64 * h;
        }
        x
    }

    /// Signed integer wavevector of a flat spectral index.
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let mi = self.multi_index(idx);
        let mut k = [0i64; 3];
        for a in 0..self.0.dim {
            k[a] = self.0.wavenumber[mi[a]];
        }
        k
    }

    /// Wavevector used for differentiation (Nyquist entries zeroed).
    pub fn deriv_wavevector(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut k = [0.0; 3];
        for a in 0..self.0.dim {
            k[a] = self.0.deriv[mi[a]];
        }
        k
    }

    /// In-place N-d transform. Forward is normalized by 1/len so that
    /// coefficients are Fourier-series coefficients.
    pub fn fft(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.0.n;
        let dim = self.0.dim;
        let len = self.len();
        debug_assert_eq!(data.len(), len);
        let plan = if inverse { &self.0.inverse } else { &self.0.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            for start in (0..len).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
        if !inverse {
            let s = 1.0 / len as f64;
            for v in data.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn forward_real(&self, phys: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = phys.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft(&mut buf, false);
        buf
    }

    pub fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.fft(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }
}
