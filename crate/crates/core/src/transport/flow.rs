//! Lagrangian flow maps by fourth-order integration of characteristics.

use crate::error::{LabError, Result};
use crate::spectral::{self, FourierInterpolant, Grid, SpectralField};

/// Velocity as a function of time.
pub type Velocity<'a> = dyn Fn(f64) -> Result<SpectralField> + 'a;

/// Back-to-labels map Φ(·, t) with Φ(·, t_anchor) = id, together with its
/// inverse X(·, t), the forward characteristic map.
#[derive(Clone, Debug)]
pub struct FlowMap {
    grid: Grid,
    pub t_anchor: f64,
    pub t: f64,
    /// Φ(x, t) at the grid points, unreduced.
    pub phi: Vec<Vec<f64>>,
    /// X(x, t) at the grid points, unreduced.
    pub forward: Vec<Vec<f64>>,
    /// Velocity at time t.
    pub velocity: SpectralField,
    pub steps: usize,
}

fn grid_points(grid: &Grid) -> Vec<Vec<f64>> {
    (0..grid.dim()).map(|a| (0..grid.len()).map(|i| grid.point(i)[a]).collect()).collect()
}

// Narrower kernels than the default: the velocity error enters the
// positions multiplied by the step, so ~1e-8 relative is ample.
fn interpolants(u: &SpectralField) -> Result<Vec<FourierInterpolant>> {
    let w = if u.dim() == 2 { 12 } else { 8 };
    (0..u.ncomp()).map(|c| FourierInterpolant::with_width(u, c, w)).collect()
}

fn sample(interp: &[FourierInterpolant], pos: &[Vec<f64>], out: &mut [Vec<f64>]) {
    let dim = pos.len();
    let mut x = [0.0; 3];
    for i in 0..pos[0].len() {
        for a in 0..dim {
            x[a] = pos[a][i];
        }
        for (a, it) in interp.iter().enumerate() {
            out[a][i] = it.eval(&x);
        }
    }
}

/// Integrates y' = u(y, s) from s = t0 over `steps` steps of size h, with
/// all grid points as initial data.
fn characteristics(grid: &Grid, velocity: &Velocity, t0: f64, h: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let dim = grid.dim();
    let n = grid.len();
    let mut y = grid_points(grid);
    let zero = || vec![vec![0.0; n]; dim];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero(), zero(), zero(), zero(), zero());
    let mut start = interpolants(&velocity(t0)?)?;
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let mid = interpolants(&velocity(t + 0.5 * h)?)?;
        let end = interpolants(&velocity(t + h)?)?;
        sample(&start, &y, &mut k1);
        for a in 0..dim {
            for i in 0..n {
                tmp[a][i] = y[a][i] + 0.5 * h * k1[a][i];
            }
        }
        sample(&mid, &tmp, &mut k2);
        for a in 0..dim {
            for i in 0..n {
                tmp[a][i] = y[a][i] + 0.5 * h * k2[a][i];
            }
        }
        sample(&mid, &tmp, &mut k3);
        for a in 0..dim {
            for i in 0..n {
                tmp[a][i] = y[a][i] + h * k3[a][i];
            }
        }
        sample(&end, &tmp, &mut k4);
        for a in 0..dim {
            for i in 0..n {
                y[a][i] += h / 6.0 * (k1[a][i] + 2.0 * k2[a][i] + 2.0 * k3[a][i] + k4[a][i]);
            }
        }
        start = end;
    }
    Ok(y)
}

/// Solves for Φ and X between `t_anchor` and `t_query` with steps no
/// longer than `max_step`.
pub fn solve_flow(grid: &Grid, velocity: &Velocity, t_anchor: f64, t_query: f64, max_step: f64) -> Result<FlowMap> {
    if !(max_step > 0.0) {
        return Err(LabError::InvalidParameter("flow step must be positive".into()));
    }
    let u = velocity(t_query)?;
    if u.grid() != grid || u.rank() != 1 {
        return Err(LabError::GridMismatch);
    }
    let span = t_query - t_anchor;
    let steps = (span.abs() / max_step).ceil() as usize;
    if steps == 0 {
        let id = grid_points(grid);
        return Ok(FlowMap { grid: grid.clone(), t_anchor, t: t_query, phi: id.clone(), forward: id, velocity: u, steps });
    }
    let h = span / steps as f64;
    let forward = characteristics(grid, velocity, t_anchor, h, steps)?;
    // the label of x at time t is where its characteristic sits at t_anchor
    let phi = characteristics(grid, velocity, t_query, -h, steps)?;
    Ok(FlowMap { grid: grid.clone(), t_anchor, t: t_query, phi, forward, velocity: u, steps })
}

fn max_frobenius_deviation(m: &SpectralField) -> f64 {
    let d = m.dim();
    (0..m.grid().len())
        .map(|p| {
            (0..d * d)
                .map(|c| {
                    let id = if c / d == c % d { 1.0 } else { 0.0 };
                    (m.phys(c)[p] - id).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

impl FlowMap {
    /// The identity map anchored and evaluated at t.
    pub fn identity(velocity: SpectralField, t: f64) -> Self {
        let grid = velocity.grid().clone();
        let id = grid_points(&grid);
        Self { grid, t_anchor: t, t, phi: id.clone(), forward: id, velocity, steps: 0 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Whether the query time lies within `window` of the anchor.
    pub fn in_window(&self, window: f64) -> bool {
        (self.t - self.t_anchor).abs() <= window * (1.0 + 1e-12)
    }

    /// ∇Φ.
    pub fn jacobian(&self) -> Result<SpectralField> {
        spectral::map_jacobian(&self.grid, &self.phi)
    }

    /// ∇X.
    pub fn forward_jacobian(&self) -> Result<SpectralField> {
        spectral::map_jacobian(&self.grid, &self.forward)
    }

    /// ∂_tΦ = −(∇Φ) u.
    pub fn phi_rate(&self) -> Result<SpectralField> {
        Ok(spectral::matvec(&self.jacobian()?, &self.velocity)?.scale(-1.0))
    }

    /// Periodic part Φ(x) − x.
    pub fn displacement(&self) -> Result<SpectralField> {
        let d = self.grid.dim();
        let disp = (0..d)
            .map(|a| (0..self.grid.len()).map(|i| self.phi[a][i] - self.grid.point(i)[a]).collect())
            .collect();
        SpectralField::from_physical(&self.grid, 1, disp)
    }

    /// max |det ∇Φ − 1|.
    pub fn det_defect(&self) -> Result<f64> {
        let det = spectral::determinant(&self.jacobian()?)?;
        Ok(det.phys(0).iter().fold(0.0, |m, v| m.max((v - 1.0).abs())))
    }

    /// max |Φ(X(x)) − x|.
    pub fn inverse_defect(&self) -> Result<f64> {
        let disp = self.displacement()?;
        let back = spectral::compose(&disp, &self.forward)?;
        let d = self.grid.dim();
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            let x = self.grid.point(i);
            let e: f64 = (0..d).map(|a| (self.forward[a][i] + back.phys(a)[i] - x[a]).powi(2)).sum();
            worst = worst.max(e.sqrt());
        }
        Ok(worst)
    }
}

/// Measured deformation against the thresholds ‖∇Φ − Id‖ ≤ ℓ,
/// ‖∇²Φ‖ ≤ ℓ⁻¹ and ‖∂_tΦ‖ ≤ ℓ⁻³ (and likewise for X).
#[derive(Clone, Debug)]
pub struct DeformationReport {
    pub ell: f64,
    pub grad_phi: f64,
    pub grad_forward: f64,
    pub hessian_phi: f64,
    pub rate_phi: f64,
    pub det_defect: f64,
    pub inverse_defect: f64,
    /// |t − t_anchor| ≤ ℓ³.
    pub in_window: bool,
}

impl DeformationReport {
    pub fn gradient_ok(&self) -> bool {
        self.grad_phi <= self.ell && self.grad_forward <= self.ell
    }

    pub fn higher_ok(&self) -> bool {
        self.hessian_phi <= 1.0 / self.ell && self.rate_phi <= self.ell.powi(-3)
    }

    pub fn passed(&self) -> bool {
        self.in_window && self.gradient_ok() && self.higher_ok()
    }
}

pub fn verify_deformation(flow: &FlowMap, ell: f64) -> Result<DeformationReport> {
    let jac = flow.jacobian()?;
    let disp = flow.displacement()?;
    let mut h2 = 0.0f64;
    for a in 0..flow.grid().dim() {
        let g = spectral::grad(&disp.component(a))?;
        h2 = h2.max(spectral::grad(&g)?.max_abs());
    }
    Ok(DeformationReport {
        ell,
        grad_phi: max_frobenius_deviation(&jac),
        grad_forward: max_frobenius_deviation(&flow.forward_jacobian()?),
        hessian_phi: h2,
        rate_phi: flow.phi_rate()?.max_abs(),
        det_defect: flow.det_defect()?,
        inverse_defect: flow.inverse_defect()?,
        in_window: flow.in_window(ell.powi(3)),
    })
}
