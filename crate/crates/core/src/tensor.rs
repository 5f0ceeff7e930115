//! Symmetric 2-tensor fields with exact symmetry by storage.

use crate::error::{LabError, Result};
use crate::spectral::{self, Grid, SpectralField};

/// Storage order of the independent entries.
pub fn sym_pairs(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &[(0, 0), (1, 1), (0, 1)]
    } else {
        &[(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    }
}

fn sym_slot(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    sym_pairs(dim).iter().position(|&p| p == (a, b)).expect("valid index pair")
}

/// Symmetric tensor field; 3 independent entries in 2-D, 6 in 3-D.
#[derive(Clone, Debug)]
pub struct StressField {
    entries: Vec<SpectralField>,
}

impl StressField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = sym_pairs(grid.dim()).len();
        Self { entries: vec![SpectralField::zeros(grid, 0); n] }
    }

    pub fn from_entries(entries: Vec<SpectralField>) -> Result<Self> {
        let first = entries.first().ok_or(LabError::ComponentCount { expected: 3, found: 0 })?;
        let expected = sym_pairs(first.dim()).len();
        if entries.len() != expected {
            return Err(LabError::ComponentCount { expected, found: entries.len() });
        }
        if entries.iter().any(|e| e.grid() != first.grid() || e.rank() != 0) {
            return Err(LabError::GridMismatch);
        }
        Ok(Self { entries })
    }

    /// Symmetric part (M + Mᵀ)/2 of a rank-2 field.
    pub fn from_tensor(m: &SpectralField) -> Result<Self> {
        if m.rank() != 2 {
            return Err(LabError::RankMismatch { expected: 2, found: m.rank() });
        }
        let d = m.dim();
        let entries = sym_pairs(d)
            .iter()
            .map(|&(i, j)| {
                if i == j {
                    m.entry(i, i)
                } else {
                    SpectralField::lincomb(&[(0.5, &m.entry(i, j)), (0.5, &m.entry(j, i))]).unwrap()
                }
            })
            .collect();
        Ok(Self { entries })
    }

    pub fn grid(&self) -> &Grid {
        self.entries[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().dim()
    }

    pub fn entries(&self) -> &[SpectralField] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &SpectralField {
        &self.entries[sym_slot(self.dim(), i, j)]
    }

    pub fn to_tensor(&self) -> SpectralField {
        let d = self.dim();
        let parts: Vec<SpectralField> =
            (0..d * d).map(|c| self.get(c / d, c % d).clone()).collect();
        SpectralField::stack(&parts, 2).unwrap()
    }

    /// Matrix at one grid point.
    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (s, &(i, j)) in sym_pairs(self.dim()).iter().enumerate() {
            let v = self.entries[s].phys(0)[idx];
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }

    pub fn trace(&self) -> SpectralField {
        let d = self.dim();
        let diag: Vec<(f64, &SpectralField)> = (0..d).map(|i| (1.0, self.get(i, i))).collect();
        SpectralField::lincomb(&diag).unwrap()
    }

    /// Splits into the traceless part and tr/dim, so that
    /// self = traceless + (tr/dim)·Id.
    pub fn split_trace(&self) -> (StressField, SpectralField) {
        let d = self.dim();
        let p = self.trace().scale(1.0 / d as f64);
        let entries = sym_pairs(d)
            .iter()
            .zip(&self.entries)
            .map(|(&(i, j), e)| if i == j { e.sub(&p).unwrap() } else { e.clone() })
            .collect();
        (StressField { entries }, p)
    }

    /// Largest |trace| relative to the largest entry.
    pub fn trace_defect(&self) -> f64 {
        let scale = self.max_abs().max(1e-300);
        self.trace().max_abs() / scale
    }

    /// ∂_k R^{kl}.
    pub fn div(&self) -> SpectralField {
        spectral::div(&self.to_tensor()).expect("rank 2")
    }

    pub fn lincomb(terms: &[(f64, &StressField)]) -> Result<Self> {
        let n = terms[0].1.entries.len();
        let entries = (0..n)
            .map(|s| {
                let t: Vec<(f64, &SpectralField)> = terms.iter().map(|(a, r)| (*a, &r.entries[s])).collect();
                SpectralField::lincomb(&t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn add(&self, other: &StressField) -> Result<Self> {
        Self::lincomb(&[(1.0, self), (1.0, other)])
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { entries: self.entries.iter().map(|e| e.scale(a)).collect() }
    }

    pub fn mul_scalar(&self, s: &SpectralField) -> Result<Self> {
        Ok(Self { entries: self.entries.iter().map(|e| e.mul_scalar(s)).collect::<Result<_>>()? })
    }

    /// Pointwise Frobenius norm |R|.
    pub fn frobenius(&self) -> Vec<f64> {
        let d = self.dim();
        (0..self.grid().len())
            .map(|idx| {
                sym_pairs(d)
                    .iter()
                    .zip(&self.entries)
                    .map(|(&(i, j), e)| {
                        let v = e.phys(0)[idx];
                        if i == j {
                            v * v
                        } else {
                            2.0 * v * v
                        }
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.frobenius().into_iter().fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.frobenius().iter().sum::<f64>() * self.grid().cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn map_entries(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self { entries: self.entries.iter().map(f).collect() }
    }
}
