//! Evaluation of a trigonometric polynomial at scattered points by
//! Gaussian gridding: deconvolve by the Gaussian's Fourier coefficients,
//! sample on a twice-oversampled grid, then convolve locally.

use num::complex::Complex64;
use num::Zero;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{LabError, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Spectrally accurate interpolant of one scalar component. The error is
/// roughly e^{-2w} relative, w being the half-width in fine cells.
pub struct FourierInterpolant {
    dim: usize,
    m: usize,
    half_width: usize,
    tau: f64,
    fine: Vec<f64>,
    /// exp(−(o h)²/4τ) for the offsets o of the stencil.
    table: Vec<f64>,
}

pub fn default_half_width(dim: usize) -> usize {
    if dim == 2 {
        14
    } else {
        9
    }
}

impl FourierInterpolant {
    pub fn new(f: &SpectralField, component: usize) -> Result<Self> {
        Self::with_width(f, component, default_half_width(f.dim()))
    }

    pub fn with_width(f: &SpectralField, component: usize, half_width: usize) -> Result<Self> {
        if component >= f.ncomp() {
            return Err(LabError::ComponentCount { expected: component + 1, found: f.ncomp() });
        }
        let grid = f.grid();
        let n = grid.n();
        let dim = grid.dim();
        let m = 2 * n;
        let fine_grid = Grid::new(dim, m)?;
        let tau = half_width as f64 / (n * n) as f64;
        let g1 = |k: i64| (tau / std::f64::consts::PI).sqrt() * (-(k * k) as f64 * tau).exp();
        let mut buf = vec![Complex64::zero(); fine_grid.len()];
        let coeffs = f.spec(component);
        for (idx, c) in coeffs.iter().enumerate() {
            let k = grid.wavevector(idx);
            if k.iter().take(dim).any(|&v| v == -(n as i64) / 2) {
                continue;
            }
            let mut gk = 1.0;
            let mut mi = [0usize; 3];
            for a in 0..dim {
                gk *= g1(k[a]);
                mi[a] = k[a].rem_euclid(m as i64) as usize;
            }
            buf[fine_grid.flat_index(&mi)] = c / gk;
        }
        fine_grid.fft(&mut buf, true);
        let fine = buf.into_iter().map(|c| c.re).collect();
        let h = TWO_PI / m as f64;
        let hw = half_width as i64;
        let table = (-hw + 1..=hw).map(|o| (-((o as f64 * h).powi(2)) / (4.0 * tau)).exp()).collect();
        Ok(Self { dim, m, half_width, tau, fine, table })
    }

    // exp(−(δ − oh)²/4τ) = exp(−δ²/4τ) · exp(δoh/2τ) · exp(−(oh)²/4τ)
    fn weights(&self, x: f64, idx: &mut [usize], w: &mut [f64]) {
        let h = TWO_PI / self.m as f64;
        let xr = x.rem_euclid(TWO_PI);
        let m0 = (xr / h).floor() as i64;
        let delta = xr - m0 as f64 * h;
        let hw = self.half_width as i64;
        let step = (delta * h / (2.0 * self.tau)).exp();
        let mut geo = (-delta * delta / (4.0 * self.tau) + delta * (1 - hw) as f64 * h / (2.0 * self.tau)).exp()
            / self.m as f64;
        let mut k = (m0 + 1 - hw).rem_euclid(self.m as i64) as usize;
        for j in 0..2 * self.half_width {
            w[j] = geo * self.table[j];
            geo *= step;
            idx[j] = k;
            k += 1;
            if k == self.m {
                k = 0;
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let span = 2 * self.half_width;
        let mut idx = [[0usize; 64]; 3];
        let mut w = [[0.0f64; 64]; 3];
        for a in 0..self.dim {
            self.weights(x[a], &mut idx[a][..span], &mut w[a][..span]);
        }
        let m = self.m;
        let last = self.dim - 1;
        let wl = &w[last][..span];
        // the stencil along the last axis is contiguous unless it wraps
        let start = idx[last][0];
        let run = start + span <= m;
        let dot = |row: usize| -> f64 {
            if run {
                self.fine[row + start..row + start + span].iter().zip(wl).map(|(f, w)| f * w).sum()
            } else {
                (0..span).map(|k| wl[k] * self.fine[row + idx[last][k]]).sum()
            }
        };
        let mut total = 0.0;
        if self.dim == 2 {
            for i in 0..span {
                total += w[0][i] * dot(idx[0][i] * m);
            }
        } else {
            for i in 0..span {
                let plane = idx[0][i] * m * m;
                let mut s1 = 0.0;
                for j in 0..span {
                    s1 += w[1][j] * dot(plane + idx[1][j] * m);
                }
                total += w[0][i] * s1;
            }
        }
        total
    }
}

/// Samples f(Φ(x)) on the grid of `points`, where `points` is a vector
/// field holding the (not necessarily reduced) positions Φ(x).
pub fn compose(f: &SpectralField, points: &[Vec<f64>]) -> Result<SpectralField> {
    let grid = f.grid();
    let dim = grid.dim();
    if points.len() != dim || points.iter().any(|p| p.len() != grid.len()) {
        return Err(LabError::GridMismatch);
    }
    let mut out = Vec::with_capacity(f.ncomp());
    let mut x = [0.0; 3];
    for c in 0..f.ncomp() {
        let interp = FourierInterpolant::new(f, c)?;
        let vals = (0..grid.len())
            .map(|i| {
                for a in 0..dim {
                    x[a] = points[a][i];
                }
                interp.eval(&x)
            })
            .collect();
        out.push(vals);
    }
    SpectralField::from_physical(grid, f.rank(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact_sum(f: &SpectralField, x: &[f64]) -> f64 {
        let g = f.grid();
        let mut s = 0.0;
        for (idx, c) in f.spec(0).iter().enumerate() {
            let k = g.wavevector(idx);
            let phase: f64 = (0..g.dim()).map(|a| k[a] as f64 * x[a]).sum();
            s += (c * Complex64::from_polar(1.0, phase)).re;
        }
        s
    }

    #[test]
    fn matches_direct_fourier_sum_2d() {
        let g = Grid::new(2, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = SpectralField::random_band_limited(&g, 0, 15, &mut rng);
        let it = FourierInterpolant::new(&f, 0).unwrap();
        let scale = f.max_abs();
        for _ in 0..200 {
            let x = [rng.gen_range(-1.0..7.0), rng.gen_range(0.0..6.3)];
            let err = (it.eval(&x) - exact_sum(&f, &x)).abs() / scale;
            assert!(err < 1e-11, "err {err}");
        }
    }

    #[test]
    fn matches_direct_fourier_sum_3d() {
        let g = Grid::new(3, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = SpectralField::random_band_limited(&g, 0, 7, &mut rng);
        let it = FourierInterpolant::new(&f, 0).unwrap();
        let scale = f.max_abs();
        for _ in 0..50 {
            let x = [rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)];
            let err = (it.eval(&x) - exact_sum(&f, &x)).abs() / scale;
            assert!(err < 1e-7, "err {err}");
        }
    }

    #[test]
    fn reproduces_grid_values() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::scalar_fn(&g, |x| (x[0] + 2.0 * x[1]).cos());
        let pts: Vec<Vec<f64>> = (0..2).map(|a| (0..g.len()).map(|i| g.point(i)[a]).collect()).collect();
        let h = compose(&f, &pts).unwrap();
        assert!(crate::spectral::field::rel_diff(&h, &f) < 1e-11);
    }
}
