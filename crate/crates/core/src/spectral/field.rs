use num::complex::Complex64;
use num::Zero;
use rand::Rng;

use super::grid::Grid;
use crate::error::{LabError, Result};

/// Real scalar, vector or rank-2 tensor field on the torus, holding both
/// the grid samples and the Fourier coefficients. Tensor components are
/// stored row-major, component (i, j) at index i*dim + j.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    rank: usize,
    phys: Vec<Vec<f64>>,
    spec: Vec<Vec<Complex64>>,
}

pub fn component_count(dim: usize, rank: usize) -> usize {
    dim.pow(rank as u32)
}

impl SpectralField {
    fn check_shape<T>(grid: &Grid, rank: usize, data: &[Vec<T>]) -> Result<()> {
        if rank > 2 {
            return Err(LabError::RankMismatch { expected: 2, found: rank });
        }
        let expected = component_count(grid.dim(), rank);
        if data.len() != expected {
            return Err(LabError::ComponentCount { expected, found: data.len() });
        }
        if data.iter().any(|c| c.len() != grid.len()) {
            return Err(LabError::GridMismatch);
        }
        Ok(())
    }

    pub fn from_physical(grid: &Grid, rank: usize, phys: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(grid, rank, &phys)?;
        let spec = phys.iter().map(|c| grid.forward_real(c)).collect();
        Ok(Self { grid: grid.clone(), rank, phys, spec })
    }

    /// Coefficients are assumed Hermitian; the imaginary residue of the
    /// inverse transform is dropped.
    pub fn from_spectral(grid: &Grid, rank: usize, spec: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::check_shape(grid, rank, &spec)?;
        let phys = spec.iter().map(|c| grid.inverse_real(c)).collect();
        Ok(Self { grid: grid.clone(), rank, phys, spec })
    }

    pub fn zeros(grid: &Grid, rank: usize) -> Self {
        let nc = component_count(grid.dim(), rank);
        Self {
            grid: grid.clone(),
            rank,
            phys: vec![vec![0.0; grid.len()]; nc],
            spec: vec![vec![Complex64::zero(); grid.len()]; nc],
        }
    }

    /// Samples `f(x, component)` at every grid point.
    pub fn from_fn(grid: &Grid, rank: usize, f: impl Fn(&[f64; 3], usize) -> f64) -> Self {
        let nc = component_count(grid.dim(), rank);
        let phys = (0..nc)
            .map(|c| (0..grid.len()).map(|i| f(&grid.point(i), c)).collect())
            .collect();
        Self::from_physical(grid, rank, phys).expect("shape is consistent by construction")
    }

    pub fn scalar_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, 0, |x, _| f(x))
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_physical(grid, 0, vec![vec![value; grid.len()]]).unwrap()
    }

    /// Random real field with independent Gaussian-like coefficients on
    /// wavevectors with max-norm in 1..=kmax, zero mean.
    pub fn random_band_limited<R: Rng>(grid: &Grid, rank: usize, kmax: i64, rng: &mut R) -> Self {
        let nc = component_count(grid.dim(), rank);
        let mut spec = vec![vec![Complex64::zero(); grid.len()]; nc];
        for comp in spec.iter_mut() {
            for idx in 0..grid.len() {
                let k = grid.wavevector(idx);
                let kinf = k.iter().map(|v| v.abs()).max().unwrap();
                if kinf == 0 || kinf > kmax {
                    continue;
                }
                // fill one representative of each ±k pair
                let first_nonzero = k.iter().find(|&&v| v != 0).copied().unwrap();
                if first_nonzero < 0 {
                    continue;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let mut neg = [0usize; 3];
                let n = grid.n() as i64;
                for a in 0..grid.dim() {
                    neg[a] = (-k[a]).rem_euclid(n) as usize;
                }
                comp[idx] = c;
                comp[grid.flat_index(&neg)] = c.conj();
            }
        }
        Self::from_spectral(grid, rank, spec).unwrap()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ncomp(&self) -> usize {
        self.phys.len()
    }

    pub fn phys(&self, c: usize) -> &[f64] {
        &self.phys[c]
    }

    pub fn spec(&self, c: usize) -> &[Complex64] {
        &self.spec[c]
    }

    pub fn phys_all(&self) -> &[Vec<f64>] {
        &self.phys
    }

    pub fn spec_all(&self) -> &[Vec<Complex64>] {
        &self.spec
    }

    pub fn into_phys(self) -> Vec<Vec<f64>> {
        self.phys
    }

    pub fn component(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            rank: 0,
            phys: vec![self.phys[c].clone()],
            spec: vec![self.spec[c].clone()],
        }
    }

    /// Tensor entry (i, j) as a scalar.
    pub fn entry(&self, i: usize, j: usize) -> SpectralField {
        self.component(i * self.dim() + j)
    }

    /// Builds a field of the given rank from scalar components.
    pub fn stack(parts: &[SpectralField], rank: usize) -> Result<Self> {
        let grid = parts.first().ok_or(LabError::ComponentCount { expected: 1, found: 0 })?.grid.clone();
        if parts.iter().any(|p| p.grid != grid || p.rank != 0) {
            return Err(LabError::GridMismatch);
        }
        let phys: Vec<Vec<f64>> = parts.iter().map(|p| p.phys[0].clone()).collect();
        let spec: Vec<Vec<Complex64>> = parts.iter().map(|p| p.spec[0].clone()).collect();
        Self::check_shape(&grid, rank, &phys)?;
        Ok(Self { grid, rank, phys, spec })
    }

    pub fn same_shape(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        if self.rank != other.rank {
            return Err(LabError::RankMismatch { expected: self.rank, found: other.rank });
        }
        Ok(())
    }

    /// Linear combination Σ a_i f_i of fields of identical shape.
    pub fn lincomb(terms: &[(f64, &SpectralField)]) -> Result<Self> {
        let first = terms[0].1;
        for (_, f) in terms {
            first.same_shape(f)?;
        }
        let mut out = SpectralField::zeros(&first.grid, first.rank);
        for (a, f) in terms {
            for c in 0..out.ncomp() {
                for (o, v) in out.phys[c].iter_mut().zip(&f.phys[c]) {
                    *o += a * v;
                }
                for (o, v) in out.spec[c].iter_mut().zip(&f.spec[c]) {
                    *o += v * *a;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        Self::lincomb(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        Self::lincomb(&[(1.0, self), (-1.0, other)])
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.phys.iter_mut().flatten().for_each(|v| *v *= a);
        out.spec.iter_mut().flatten().for_each(|v| *v *= a);
        out
    }

    /// Applies a Fourier multiplier m(k_deriv, k_int, component) per component.
    pub fn map_spectral(&self, rank: usize, f: impl Fn(&[f64; 3], usize, &[Vec<Complex64>]) -> Vec<Complex64>) -> Result<Self> {
        let grid = &self.grid;
        let nc = component_count(grid.dim(), rank);
        let mut out = vec![vec![Complex64::zero(); grid.len()]; nc];
        for idx in 0..grid.len() {
            let k = grid.deriv_wavevector(idx);
            let vals = f(&k, idx, &self.spec);
            for c in 0..nc {
                out[c][idx] = vals[c];
            }
        }
        Self::from_spectral(grid, rank, out)
    }

    /// Pointwise map of physical samples to a new field.
    pub fn map_physical(&self, rank: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let grid = &self.grid;
        let nc = component_count(grid.dim(), rank);
        let mut out = vec![vec![0.0; grid.len()]; nc];
        let mut buf = vec![0.0; self.ncomp()];
        for idx in 0..grid.len() {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = self.phys[c][idx];
            }
            let vals = f(&buf);
            for c in 0..nc {
                out[c][idx] = vals[c];
            }
        }
        Self::from_physical(grid, rank, out)
    }

    /// Every component multiplied pointwise by a scalar field.
    pub fn mul_scalar(&self, s: &SpectralField) -> Result<Self> {
        if s.grid != self.grid {
            return Err(LabError::GridMismatch);
        }
        if s.rank != 0 {
            return Err(LabError::RankMismatch { expected: 0, found: s.rank });
        }
        let phys = self
            .phys
            .iter()
            .map(|c| c.iter().zip(&s.phys[0]).map(|(a, b)| a * b).collect())
            .collect();
        Self::from_physical(&self.grid, self.rank, phys)
    }

    /// Product with a scalar computed without aliasing: both factors are
    /// padded to twice the resolution, multiplied and truncated back. For
    /// fields without Nyquist content the product rule then holds exactly.
    pub fn mul_scalar_dealiased(&self, s: &SpectralField) -> Result<Self> {
        if s.grid != self.grid {
            return Err(LabError::GridMismatch);
        }
        let fine = Grid::new(self.dim(), 2 * self.grid.n())?;
        self.resample(&fine)?.mul_scalar(&s.resample(&fine)?)?.resample(&self.grid)
    }

    /// Pointwise Euclidean (Frobenius) magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.phys.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    /// Mean of each component (zero mode).
    pub fn mean(&self) -> Vec<f64> {
        self.spec.iter().map(|c| c[0].re).collect()
    }

    /// Removes the mean of each component.
    pub fn mean_free(&self) -> Self {
        let mut spec = self.spec.clone();
        for c in spec.iter_mut() {
            c[0] = Complex64::zero();
        }
        Self::from_spectral(&self.grid, self.rank, spec).unwrap()
    }

    /// ∫ |f|^p over [0,2π)^dim by the trapezoidal rule, p-th root taken.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mag = self.magnitude();
        if p.is_infinite() {
            return mag.iter().fold(0.0, |m, v| m.max(*v));
        }
        let s: f64 = mag.iter().map(|v| v.powf(p)).sum::<f64>() * self.grid.cell_volume();
        s.powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.phys.iter().flatten().map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// L² norm via Parseval on the coefficients.
    pub fn l2_norm_spectral(&self) -> f64 {
        let s: f64 = self.spec.iter().flatten().map(|c| c.norm_sqr()).sum();
        (s * self.grid.volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.phys.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∫ f over the torus, per component.
    pub fn integral(&self) -> Vec<f64> {
        self.mean().iter().map(|m| m * self.grid.volume()).collect()
    }

    /// L² inner product summed over components.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.same_shape(other)?;
        let s: f64 = self
            .phys
            .iter()
            .zip(&other.phys)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Largest disagreement between the stored views, relative to the field size.
    pub fn view_consistency(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for (p, s) in self.phys.iter().zip(&self.spec) {
            let back = self.grid.inverse_real(s);
            for (a, b) in p.iter().zip(&back) {
                worst = worst.max((a - b).abs());
            }
        }
        worst / scale
    }

    /// Truncates to |k_j| < fraction·n/2 on every axis.
    pub fn truncate(&self, fraction: f64) -> Self {
        let cutoff = fraction * self.grid.n() as f64 / 2.0;
        let grid = self.grid.clone();
        let spec = self
            .spec
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(idx, v)| {
                        let k = grid.wavevector(idx);
                        if k.iter().all(|kk| (*kk as f64).abs() < cutoff) {
                            *v
                        } else {
                            Complex64::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_spectral(&grid, self.rank, spec).unwrap()
    }

    /// Resamples onto another grid by zero padding or truncation of the
    /// coefficients (exact for band-limited fields).
    pub fn resample(&self, target: &Grid) -> Result<Self> {
        if target.dim() != self.dim() {
            return Err(LabError::GridMismatch);
        }
        let n_src = self.grid.n() as i64;
        let n_dst = target.n() as i64;
        let half = n_src.min(n_dst) / 2;
        let mut spec = vec![vec![Complex64::zero(); target.len()]; self.ncomp()];
        for idx in 0..self.grid.len() {
            let k = self.grid.wavevector(idx);
            if k.iter().take(self.dim()).any(|v| v.abs() >= half) {
                continue;
            }
            let mut mi = [0usize; 3];
            for a in 0..self.dim() {
                mi[a] = k[a].rem_euclid(n_dst) as usize;
            }
            let j = target.flat_index(&mi);
            for c in 0..self.ncomp() {
                spec[c][j] = self.spec[c][idx];
            }
        }
        Self::from_spectral(target, self.rank, spec)
    }

    /// Fraction of spectral energy outside |k_j| < fraction·n/2.
    pub fn tail_fraction(&self, fraction: f64) -> f64 {
        let cutoff = fraction * self.grid.n() as f64 / 2.0;
        let mut tail = 0.0;
        let mut total = 0.0;
        for c in &self.spec {
            for (idx, v) in c.iter().enumerate() {
                let e = v.norm_sqr();
                total += e;
                if self.grid.wavevector(idx).iter().any(|kk| (*kk as f64).abs() >= cutoff) {
                    tail += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// max |a - b| / max(|b|, floor).
pub fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = SpectralField::lincomb(&[(1.0, a), (-1.0, b)]).expect("shapes agree");
    let scale = b.max_abs().max(a.max_abs()).max(1e-300);
    d.max_abs() / scale
}
