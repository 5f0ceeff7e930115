//! Intermittent pipe families: rational frames, point evaluation of the
//! concentrated and periodized fields, and their realization on grids.

use std::f64::consts::PI;
use std::sync::Arc;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use super::profile::PipeProfile;
use crate::alpha::AlphaModel;
use crate::error::{LabError, Result};
use crate::geometry::{QMat, QVec};
use crate::spectral::{self, Grid, SpectralField};

/// Rational orthonormal frame (ξ₁, ξ₂, ξ) with ξ₁ × ξ₂ = ξ, or in 2-D the
/// pair (ξ⊥, ξ) with ξ⊥ = (ξ₂, −ξ₁).
#[derive(Clone, Debug)]
pub struct Frame {
    pub xi: QVec,
    pub cross: Vec<QVec>,
    /// lcm of all denominators of the cross-section vectors.
    pub denominator: u64,
    xi_f: [f64; 3],
    cross_f: Vec<[f64; 3]>,
}

fn householder_to(xi: &QVec, axis: usize) -> Option<QMat> {
    let n = xi.dim();
    let v = xi.sub(&QVec::axis(n, axis));
    let v2 = v.norm2();
    if v2.is_zero() {
        return Some(QMat::identity(n));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let s = &two / &v2;
    Some(QMat(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let id = if i == j { BigRational::one() } else { BigRational::zero() };
                        id - &s * &v.0[i] * &v.0[j]
                    })
                    .collect()
            })
            .collect(),
    ))
}

impl Frame {
    pub fn new(xi: &QVec) -> Result<Self> {
        if !xi.is_unit() {
            return Err(LabError::InvalidParameter(format!("direction {xi:?} is not a rational unit vector")));
        }
        let n = xi.dim();
        let cross = if n == 2 {
            vec![QVec(vec![xi.0[1].clone(), -xi.0[0].clone()])]
        } else {
            // reflect the axis with the smallest resulting denominators onto ξ
            let mut best: Option<(BigInt, Vec<QVec>)> = None;
            for axis in 0..3 {
                let h = householder_to(xi, axis).expect("reflection");
                let cols: Vec<QVec> = (0..3)
                    .filter(|&j| j != axis)
                    .map(|j| QVec((0..3).map(|i| h.0[i][j].clone()).collect()))
                    .collect();
                let den = num::integer::lcm(cols[0].denominator(), cols[1].denominator());
                if best.as_ref().is_none_or(|(b, _)| den < *b) {
                    best = Some((den, cols));
                }
            }
            let mut cols = best.unwrap().1;
            if cols[0].cross(&cols[1]) != *xi {
                cols.swap(0, 1);
            }
            cols
        };
        let den = cross.iter().fold(BigInt::one(), |l, v| num::integer::lcm(l, v.denominator()));
        let denominator = den.to_u64().ok_or_else(|| LabError::InvalidParameter("denominator overflow".into()))?;
        Ok(Self { xi: xi.clone(), xi_f: xi.to_f64(), cross_f: cross.iter().map(QVec::to_f64).collect(), cross, denominator })
    }

    pub fn dim(&self) -> usize {
        self.xi.dim()
    }

    pub fn xi(&self) -> [f64; 3] {
        self.xi_f
    }

    pub fn cross_f64(&self) -> &[[f64; 3]] {
        &self.cross_f
    }

    /// Exactly orthonormal and right-handed.
    pub fn is_orthonormal(&self) -> bool {
        let mut all = self.cross.clone();
        all.push(self.xi.clone());
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = if i == j { BigRational::one() } else { BigRational::zero() };
                if a.dot(b) != want {
                    return false;
                }
            }
        }
        self.dim() == 2 || self.cross[0].cross(&self.cross[1]) == self.xi
    }
}

/// A concentrated, periodized pipe ϱ(ξ₁·x, ξ₂·x) ξ.
#[derive(Clone, Debug)]
pub struct PipeFamily {
    pub frame: Frame,
    pub lambda: f64,
    pub r: f64,
    pub d: usize,
    /// Number of cells per 2π/D along each cross-section axis.
    pub mult: u64,
    /// Cell side in cross-section coordinates, 2π/(D·mult).
    pub period: f64,
    /// Support radius in cross-section coordinates.
    pub radius: f64,
    pub amplitude: f64,
    /// Axis position within the cell.
    pub offset: [f64; 2],
    pub normalization: f64,
    profile: Arc<PipeProfile>,
}

/// Samples of one pipe on an ambient grid.
#[derive(Clone, Debug)]
pub struct PipeFields {
    pub w: SpectralField,
    /// Vector potential in 3-D, stream function in 2-D.
    pub potential: SpectralField,
    pub rho: SpectralField,
    pub theta: SpectralField,
    pub pressure: SpectralField,
}

/// Stationarity residuals, relative to the size of the balanced terms.
#[derive(Clone, Debug)]
pub struct StationarityReport {
    pub euler: f64,
    pub euler_alpha: f64,
    pub points: usize,
}

impl PipeFamily {
    /// Family normalized so that the torus average of |∇ϱ|² is λ².
    pub fn new(xi: &QVec, lambda: f64, r: f64, d: usize) -> Result<Self> {
        Self::with_normalization(xi, lambda, r, d, lambda * lambda)
    }

    pub fn with_normalization(xi: &QVec, lambda: f64, r: f64, d: usize, normalization: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !(r > 0.0 && r <= 1.0) {
            return Err(LabError::InvalidParameter(format!("need λ ≥ 1 and r ∈ (0,1], got λ={lambda}, r={r}")));
        }
        let lr = lambda * r;
        if (lr - lr.round()).abs() > 1e-9 || lr.round() < 1.0 {
            return Err(LabError::InvalidParameter(format!("λr = {lr} is not a positive integer")));
        }
        if !(normalization > 0.0) {
            return Err(LabError::InvalidParameter("normalization must be positive".into()));
        }
        let frame = Frame::new(xi)?;
        let profile = Arc::new(PipeProfile::new(d, frame.dim() - 1)?);
        let den = frame.denominator as f64;
        let mult = ((lr / den).round() as u64).max(1);
        let mu = den * mult as f64;
        let period = 2.0 * PI / mu;
        let radius = (PI / (2.0 * lambda)).min(PI / (2.0 * mu));
        let k = profile.k as i32;
        let cell = period.powi(k);
        let amplitude = (normalization * cell / (radius.powi(k - 2) * profile.dirichlet)).sqrt();
        Ok(Self { frame, lambda, r, d, mult, period, radius, amplitude, offset: [0.0; 2], normalization, profile })
    }

    pub fn with_offset(mut self, offset: [f64; 2]) -> Self {
        self.offset = offset;
        self
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn profile(&self) -> &PipeProfile {
        &self.profile
    }

    /// μ = D·mult, the periodicity frequency of the cross-section.
    pub fn mu(&self) -> f64 {
        2.0 * PI / self.period
    }

    fn k(&self) -> usize {
        self.dim() - 1
    }

    /// Cross-section coordinates reduced to the cell centred on the axis.
    pub fn cross_coords(&self, x: &[f64]) -> [f64; 2] {
        let mut s = [0.0; 2];
        for (a, v) in self.frame.cross_f.iter().enumerate() {
            let raw: f64 = (0..self.dim()).map(|i| v[i] * x[i]).sum::<f64>() - self.offset[a];
            s[a] = raw - self.period * (raw / self.period).round();
        }
        s
    }

    /// (y, t) at a cross-section point, y = s/a and t = 1 − |y|².
    fn local(&self, s: &[f64; 2]) -> ([f64; 2], f64) {
        let y = [s[0] / self.radius, s[1] / self.radius];
        let t = 1.0 - (0..self.k()).map(|a| y[a] * y[a]).sum::<f64>();
        (y, t)
    }

    /// ϱ from cross-section coordinates.
    pub fn rho_cross(&self, s: &[f64; 2]) -> f64 {
        let (_, t) = self.local(s);
        if t <= 0.0 {
            0.0
        } else {
            self.amplitude * self.profile.h().eval(t)
        }
    }

    pub fn rho_at(&self, x: &[f64]) -> f64 {
        self.rho_cross(&self.cross_coords(x))
    }

    pub fn w_at(&self, x: &[f64]) -> [f64; 3] {
        let r = self.rho_at(x);
        self.frame.xi_f.map(|c| c * r)
    }

    /// ϑ with ϱ = λ^{−2d} Δᵈ ϑ.
    pub fn theta_cross(&self, s: &[f64; 2]) -> f64 {
        let (_, t) = self.local(s);
        if t <= 0.0 {
            0.0
        } else {
            self.amplitude * (self.lambda * self.radius).powi(2 * self.d as i32) * self.profile.potential().eval(t)
        }
    }

    pub fn theta_at(&self, x: &[f64]) -> f64 {
        self.theta_cross(&self.cross_coords(x))
    }

    /// Gradient in cross-section coordinates of ψ, where Δψ = ϱ in 3-D.
    fn psi_cross_grad(&self, s: &[f64; 2]) -> [f64; 2] {
        let (y, t) = self.local(s);
        if t <= 0.0 {
            return [0.0; 2];
        }
        let g1 = self.profile.level(self.d - 1).deriv().eval(t);
        let c = -2.0 * self.amplitude * self.radius * g1;
        [c * y[0], c * y[1]]
    }

    /// Potential: in 3-D the vector U = ξ × ∇ψ with curl U = W; in 2-D the
    /// stream function ψ with (−∂₂ψ, ∂₁ψ) = W, returned in slot 0.
    pub fn potential_at(&self, x: &[f64]) -> [f64; 3] {
        let s = self.cross_coords(x);
        let g = self.psi_cross_grad(&s);
        if self.dim() == 2 {
            // ψ(s) = a·A·∂_y G, the 1-D antiderivative of ϱ
            return [g[0], 0.0, 0.0];
        }
        let c = &self.frame.cross_f;
        let grad: [f64; 3] = std::array::from_fn(|i| g[0] * c[0][i] + g[1] * c[1][i]);
        let xi = self.frame.xi_f;
        [xi[1] * grad[2] - xi[2] * grad[1], xi[2] * grad[0] - xi[0] * grad[2], xi[0] * grad[1] - xi[1] * grad[0]]
    }

    /// The radial pressure balancing the α-stationary pipe.
    pub fn pressure_cross(&self, s: &[f64; 2], model: &AlphaModel) -> f64 {
        let (_, t) = self.local(s);
        let t = t.max(0.0);
        let (quad, integral) = self.profile.pressure_parts();
        let a2 = self.amplitude * self.amplitude;
        a2 * quad.eval(t) - model.alpha2() * a2 / (self.radius * self.radius) * integral.eval(t)
    }

    pub fn pressure_at(&self, x: &[f64], model: &AlphaModel) -> f64 {
        self.pressure_cross(&self.cross_coords(x), model)
    }

    /// Samples every field on `grid`.
    pub fn realize(&self, grid: &Grid, model: &AlphaModel) -> Result<PipeFields> {
        if grid.dim() != self.dim() {
            return Err(LabError::BadDimension(grid.dim()));
        }
        if (grid.n() as f64) < 4.0 * self.lambda {
            return Err(LabError::Unresolved(format!(
                "grid {} has fewer than 4 points per wavelength at λ = {}",
                grid.n(),
                self.lambda
            )));
        }
        let dim = self.dim();
        let xi = self.frame.xi_f;
        // the continuum fields have zero mean; grid samples of a thin pipe
        // need not, so the sampled mean is removed
        let rho = SpectralField::scalar_fn(grid, |x| self.rho_at(x)).mean_free();
        let w = SpectralField::from_physical(
            grid,
            1,
            (0..dim).map(|c| rho.phys(0).iter().map(|r| r * xi[c]).collect()).collect(),
        )?;
        let potential = if dim == 3 {
            SpectralField::from_fn(grid, 1, |x, c| self.potential_at(x)[c])
        } else {
            SpectralField::scalar_fn(grid, |x| self.potential_at(x)[0])
        };
        let theta = SpectralField::scalar_fn(grid, |x| self.theta_at(x)).mean_free();
        let pressure = SpectralField::scalar_fn(grid, |x| self.pressure_at(x, model));
        Ok(PipeFields { w, potential, rho, theta, pressure })
    }

    /// Smallest power of two putting `across` points on a pipe diameter.
    pub fn cell_points(&self, across: usize) -> usize {
        let need = (across as f64 * self.period / (2.0 * self.radius)).ceil() as usize;
        need.next_power_of_two()
    }

    /// Grid of one periodic cell of the cross-section; node θ maps to
    /// s = (θ − π)/μ so the axis sits at the centre.
    pub fn cell_grid(&self, n: usize) -> Result<Grid> {
        Grid::new(2, n)
    }

    fn cell_point(&self, grid: &Grid, idx: usize) -> [f64; 2] {
        let p = grid.point(idx);
        let mu = self.mu();
        if self.k() == 2 {
            [(p[0] - PI) / mu, (p[1] - PI) / mu]
        } else {
            [(p[0] - PI) / mu, 0.0]
        }
    }

    /// ϱ sampled on the cell grid.
    pub fn cell_rho(&self, grid: &Grid) -> SpectralField {
        SpectralField::from_physical(
            grid,
            0,
            vec![(0..grid.len()).map(|i| self.rho_cross(&self.cell_point(grid, i))).collect()],
        )
        .expect("scalar")
    }

    /// Derivatives ∂_{s_a} on the cell grid.
    fn cell_partial(&self, f: &SpectralField, a: usize) -> SpectralField {
        spectral::partial(f, a).scale(self.mu())
    }

    /// Checks div(W⊗W) = 0 and the α-stationary balance
    /// curl(W − α²ΔW) × W + ∇p = 0 on `n`² samples of one cell, with all
    /// derivatives taken spectrally in cross-section coordinates.
    pub fn verify_stationarity(&self, n: usize, model: &AlphaModel) -> Result<StationarityReport> {
        let grid = self.cell_grid(n)?;
        if (n as f64) * self.radius / self.period < 16.0 {
            return Err(LabError::Unresolved(format!("{n} points per cell leave fewer than 8 across the pipe")));
        }
        let k = self.k();
        let rho = self.cell_rho(&grid);
        let d_rho: Vec<SpectralField> = (0..k).map(|a| self.cell_partial(&rho, a)).collect();
        let lap = (0..k).fold(SpectralField::zeros(&grid, 0), |acc, a| {
            acc.add(&self.cell_partial(&d_rho[a], a)).unwrap()
        });
        let g = rho.sub(&lap.scale(model.alpha2()))?;
        let d_g: Vec<SpectralField> = (0..k).map(|a| self.cell_partial(&g, a)).collect();
        let p = SpectralField::from_physical(
            &grid,
            0,
            vec![(0..grid.len()).map(|i| self.pressure_cross(&self.cell_point(&grid, i), model)).collect()],
        )?;
        let d_p: Vec<SpectralField> = (0..k).map(|a| self.cell_partial(&p, a)).collect();
        let xi = self.frame.xi_f;
        let cross = &self.frame.cross_f;
        let (mut euler, mut euler_scale, mut res, mut res_scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..grid.len() {
            let r = rho.phys(0)[i];
            // ambient gradient of ϱ and ξ·∇ϱ
            let grad: [f64; 3] = std::array::from_fn(|c| (0..k).map(|a| cross[a][c] * d_rho[a].phys(0)[i]).sum());
            let along: f64 = (0..3).map(|c| xi[c] * grad[c]).sum();
            let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            euler = euler.max((r * along).abs());
            euler_scale = euler_scale.max((r * gnorm).abs());
            // frame components of curl v × W + ∇p are −ϱ ∂_a g + ∂_a p
            let mut rr = 0.0;
            let mut scale = 0.0;
            for a in 0..k {
                let bal = r * d_g[a].phys(0)[i];
                rr += (d_p[a].phys(0)[i] - bal).powi(2);
                scale += bal * bal;
            }
            res = res.max(rr.sqrt());
            res_scale = res_scale.max(scale.sqrt());
        }
        Ok(StationarityReport { euler: euler / euler_scale, euler_alpha: res / res_scale, points: grid.len() })
    }

    /// Torus average of W^k ΔW^ℓ + ∂_k W^j ∂_ℓ W^j by cell quadrature,
    /// together with the measured 𝒞 = ⨍|∇ϱ|².
    pub fn average_tensor(&self, n: usize) -> Result<([[f64; 3]; 3], f64)> {
        if n < self.cell_points(16) {
            return Err(LabError::Unresolved(format!("{n} points per cell leave fewer than 8 across the pipe")));
        }
        let grid = self.cell_grid(n)?;
        let k = self.k();
        let rho = self.cell_rho(&grid);
        let d_rho: Vec<SpectralField> = (0..k).map(|a| self.cell_partial(&rho, a)).collect();
        let lap = (0..k).fold(SpectralField::zeros(&grid, 0), |acc, a| {
            acc.add(&self.cell_partial(&d_rho[a], a)).unwrap()
        });
        let xi = self.frame.xi_f;
        let cross = &self.frame.cross_f;
        let mut m = [[0.0; 3]; 3];
        let mut c = 0.0;
        let count = grid.len() as f64;
        for i in 0..grid.len() {
            let r = rho.phys(0)[i];
            let grad: [f64; 3] = std::array::from_fn(|cc| (0..k).map(|a| cross[a][cc] * d_rho[a].phys(0)[i]).sum());
            let rl = r * lap.phys(0)[i];
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += (rl * xi[a] * xi[b] + grad[a] * grad[b]) / count;
                }
            }
            c += grad.iter().map(|v| v * v).sum::<f64>() / count;
        }
        Ok((m, c))
    }

    /// Normalized L^p norm of |∇ⁿϱ| (n ≤ 2) by cell quadrature.
    pub fn lp_norm(&self, derivs: usize, p: f64, n: usize) -> Result<f64> {
        let grid = self.cell_grid(n)?;
        let k = self.k();
        let rho = self.cell_rho(&grid);
        let mut layer = vec![rho];
        for _ in 0..derivs {
            layer = layer.iter().flat_map(|f| (0..k).map(|a| self.cell_partial(f, a)).collect::<Vec<_>>()).collect();
        }
        let mags: Vec<f64> =
            (0..grid.len()).map(|i| layer.iter().map(|f| f.phys(0)[i].powi(2)).sum::<f64>().sqrt()).collect();
        Ok(if p.is_infinite() {
            mags.into_iter().fold(0.0, f64::max)
        } else {
            (mags.iter().map(|v| v.powf(p)).sum::<f64>() / grid.len() as f64).powf(1.0 / p)
        })
    }
}

/// The closed form of the average: (𝒞/2)(δ − 3ξ⊗ξ) in 3-D and 𝒞(δ − 2ξ⊗ξ)
/// for line pipes in 2-D.
pub fn expected_average(dim: usize, xi: &[f64; 3], c: f64) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for a in 0..dim {
        for b in 0..dim {
            let delta = if a == b { 1.0 } else { 0.0 };
            m[a][b] = if dim == 3 { 0.5 * c * (delta - 3.0 * xi[a] * xi[b]) } else { c * (delta - 2.0 * xi[a] * xi[b]) };
        }
    }
    m
}

/// Positions Φ(x) at grid points; see `crate::transport`.
pub type Positions = [Vec<f64>];

/// ∇Φᵀ (U∘Φ) in 3-D or ψ∘Φ in 2-D, the potential whose curl is the
/// deformed pipe.
pub fn pulled_back_potential(family: &PipeFamily, grid: &Grid, positions: &Positions) -> Result<SpectralField> {
    let dim = grid.dim();
    let mut x = [0.0; 3];
    let at = |i: usize, x: &mut [f64; 3]| {
        for a in 0..dim {
            x[a] = positions[a][i];
        }
        family.potential_at(x)
    };
    if dim == 2 {
        let vals = (0..grid.len()).map(|i| at(i, &mut x)[0]).collect();
        return SpectralField::from_physical(grid, 0, vec![vals]);
    }
    let jac = spectral::map_jacobian(grid, positions)?;
    let mut out = vec![vec![0.0; grid.len()]; 3];
    for i in 0..grid.len() {
        let u = at(i, &mut x);
        for j in 0..3 {
            out[j][i] = (0..3).map(|m| jac.phys(m * 3 + j)[i] * u[m]).sum();
        }
    }
    SpectralField::from_physical(grid, 1, out)
}

/// The deformed pipe in curl form, exactly divergence-free on the grid.
pub fn deformed_pipe(family: &PipeFamily, grid: &Grid, positions: &Positions) -> Result<SpectralField> {
    spectral::curl(&pulled_back_potential(family, grid, positions)?)
}

/// ∇Φ⁻¹ (W∘Φ), evaluated pointwise.
pub fn deformed_pipe_direct(family: &PipeFamily, grid: &Grid, positions: &Positions) -> Result<SpectralField> {
    let dim = grid.dim();
    let inv = spectral::invert(&spectral::map_jacobian(grid, positions)?)?;
    let mut out = vec![vec![0.0; grid.len()]; dim];
    let mut x = [0.0; 3];
    for i in 0..grid.len() {
        for a in 0..dim {
            x[a] = positions[a][i];
        }
        let w = family.w_at(&x);
        for a in 0..dim {
            out[a][i] = (0..dim).map(|b| inv.phys(a * dim + b)[i] * w[b]).sum();
        }
    }
    SpectralField::from_physical(grid, 1, out)
}

/// Largest |ξ·∇ϱ| over the grid relative to max|∇ϱ|, computed spectrally.
pub fn transverse_defect(fields: &PipeFields, xi: &[f64; 3]) -> Result<f64> {
    let g = spectral::grad(&fields.rho)?;
    let dim = g.dim();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..g.grid().len() {
        let along: f64 = (0..dim).map(|a| xi[a] * g.phys(a)[i]).sum();
        let mag: f64 = (0..dim).map(|a| g.phys(a)[i].powi(2)).sum::<f64>().sqrt();
        worst = worst.max(along.abs());
        scale = scale.max(mag);
    }
    Ok(worst / scale.max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_direction_sets;
    use crate::spectral::rel_diff;

    fn e3() -> QVec {
        QVec::axis(3, 2)
    }

    #[test]
    fn frames_are_rational_orthonormal() {
        for dim in [2, 3] {
            for set in build_direction_sets(dim, 1).unwrap() {
                for k in &set.vectors {
                    assert!(Frame::new(k).unwrap().is_orthonormal(), "{k:?}");
                }
            }
        }
        let f = Frame::new(&QVec::from_ratios(&[(3, 5), (4, 5), (0, 1)])).unwrap();
        assert_eq!(f.denominator, 5);
    }

    #[test]
    fn rejects_bad_families() {
        assert!(PipeFamily::new(&e3(), 8.0, 0.3, 2).is_err());
        assert!(PipeFamily::new(&QVec::from_ratios(&[(1, 2), (1, 2), (0, 1)]), 8.0, 0.5, 2).is_err());
        assert!(PipeFamily::new(&e3(), 8.0, 0.5, 0).is_err());
    }

    #[test]
    fn stationary_axis_and_rotated_pipe() {
        let model = AlphaModel::new(1.0).unwrap();
        for xi in [e3(), QVec::from_ratios(&[(3, 5), (4, 5), (0, 1)])] {
            let fam = PipeFamily::new(&xi, 8.0, 0.5, 2).unwrap();
            let rep = fam.verify_stationarity(256, &model).unwrap();
            assert!(rep.euler < 1e-10, "{rep:?}");
            assert!(rep.euler_alpha < 1e-6, "{rep:?}");
        }
    }

    #[test]
    fn stationary_line_pipe_in_2d() {
        let model = AlphaModel::new(0.3).unwrap();
        let fam = PipeFamily::new(&QVec::axis(2, 0), 8.0, 0.5, 2).unwrap();
        let rep = fam.verify_stationarity(256, &model).unwrap();
        assert!(rep.euler_alpha < 1e-6, "{rep:?}");
    }

    #[test]
    fn pressure_without_alpha_is_half_square() {
        let fam = PipeFamily::new(&e3(), 8.0, 0.5, 2).unwrap();
        let tiny = AlphaModel::new(1e-300).unwrap();
        for s in [[0.0, 0.0], [0.05, 0.01], [0.3, 0.3]] {
            let r = fam.rho_cross(&s);
            assert!((fam.pressure_cross(&s, &tiny) - 0.5 * r * r).abs() <= 1e-12 * (1.0 + r * r));
        }
        let model = AlphaModel::new(1.0).unwrap();
        let outside = fam.pressure_cross(&[0.3, 0.3], &model);
        assert_eq!(outside, fam.pressure_cross(&[0.35, -0.3], &model));
    }

    #[test]
    fn average_identity_for_base_set() {
        let set = &build_direction_sets(3, 0).unwrap()[0];
        for k in &set.vectors {
            let fam = PipeFamily::new(k, 8.0, 0.5, 2).unwrap();
            let (m, c) = fam.average_tensor(256).unwrap();
            assert!((c - 64.0).abs() / 64.0 < 1e-6, "normalization {c}");
            let e = expected_average(3, &k.to_f64(), c);
            let err = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| (m[a][b] - e[a][b]).abs()).fold(0.0, f64::max);
            assert!(err / c < 1e-8, "{k:?} err {err}");
        }
    }

    #[test]
    fn realized_fields_are_periodic_and_consistent() {
        let model = AlphaModel::new(1.0).unwrap();
        let g = Grid::new(3, 64).unwrap();
        let fam = PipeFamily::new(&e3(), 8.0, 0.5, 2).unwrap();
        let f = fam.realize(&g, &model).unwrap();
        // (𝕋/4)-periodic: shift by 16 cells in x₁
        for idx in (0..g.len()).step_by(97) {
            let mut mi = g.multi_index(idx);
            mi[0] = (mi[0] + 16) % 64;
            let j = g.flat_index(&mi);
            assert!((f.rho.phys(0)[idx] - f.rho.phys(0)[j]).abs() < 1e-12);
        }
        let div = spectral::div(&f.w).unwrap();
        assert!(div.max_abs() <= 1e-12 * f.w.max_abs() * 64.0);
        assert!(f.rho.mean()[0].abs() < 1e-10 * f.rho.max_abs());
        assert!(transverse_defect(&f, &fam.frame.xi()).unwrap() < 1e-12);
        assert!(fam.realize(&Grid::new(3, 16).unwrap(), &model).is_err());
    }

    #[test]
    fn potential_curl_is_pipe_on_cell_scale() {
        // wide pipe on a fine 2-D grid: the stream function reproduces W
        let model = AlphaModel::new(1.0).unwrap();
        let g = Grid::new(2, 256).unwrap();
        let fam = PipeFamily::new(&QVec::from_ratios(&[(3, 5), (4, 5)]), 5.0, 1.0, 2).unwrap();
        let f = fam.realize(&g, &model).unwrap();
        let curl_psi = spectral::curl(&f.potential).unwrap();
        assert!(rel_diff(&curl_psi, &f.w) < 1e-6, "{}", rel_diff(&curl_psi, &f.w));
        let mut t = f.theta.clone();
        for _ in 0..fam.d {
            t = spectral::laplacian(&t);
        }
        let back = t.scale(fam.lambda.powi(-2 * fam.d as i32));
        assert!(rel_diff(&back, &f.rho) < 1e-6, "{}", rel_diff(&back, &f.rho));
    }

    #[test]
    fn lp_scaling_in_r() {
        for p in [1.0, 2.0, f64::INFINITY] {
            let ratios: Vec<f64> = [0.5, 0.25, 0.125]
                .iter()
                .map(|&r| {
                    let fam = PipeFamily::new(&e3(), 64.0, r, 2).unwrap();
                    let n = (fam.period / fam.radius * 24.0) as usize;
                    let n = n.next_power_of_two();
                    let pred = if p.is_infinite() { 1.0 / r } else { r.powf(2.0 / p - 1.0) };
                    fam.lp_norm(0, p, n).unwrap() / pred
                })
                .collect();
            let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
            assert!(hi / lo < 2.0, "p {p}: {ratios:?}");
        }
    }

    #[test]
    fn deformed_pipe_curl_form_in_2d() {
        let model = AlphaModel::new(1.0).unwrap();
        let g = Grid::new(2, 256).unwrap();
        let fam = PipeFamily::new(&QVec::axis(2, 1), 4.0, 1.0, 2).unwrap();
        let t = 0.05;
        let pos: Vec<Vec<f64>> = vec![
            (0..g.len()).map(|i| g.point(i)[0] - t * g.point(i)[1].sin()).collect(),
            (0..g.len()).map(|i| g.point(i)[1]).collect(),
        ];
        let curl_form = deformed_pipe(&fam, &g, &pos).unwrap();
        let direct = deformed_pipe_direct(&fam, &g, &pos).unwrap();
        assert!(rel_diff(&curl_form, &direct) < 1e-6, "{}", rel_diff(&curl_form, &direct));
        assert!(spectral::div(&curl_form).unwrap().max_abs() < 1e-10 * curl_form.max_abs());
        // identity map gives the pipe itself
        let id: Vec<Vec<f64>> = (0..2).map(|a| (0..g.len()).map(|i| g.point(i)[a]).collect()).collect();
        let w = deformed_pipe_direct(&fam, &g, &id).unwrap();
        assert!(rel_diff(&w.mean_free(), &fam.realize(&g, &model).unwrap().w) < 1e-14);
    }
}
