//! The amplitude ρ and the normalized stress fed to the coefficient maps.

use crate::alpha::AlphaModel;
use crate::error::{LabError, Result};
use crate::spectral::SpectralField;
use crate::tensor::{sym_pairs, StressField};

use super::smooth::{chi, chi_dz};

/// Scales entering ρ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeScales {
    pub delta_next: f64,
    pub lambda_next: f64,
    /// Radius of the ball on which the coefficient maps stay positive.
    pub epsilon: f64,
    pub c_r: f64,
}

/// ρ, its time derivative and R_dec = −κ α⁻² R_ℓ/ρ.
///
/// κ accounts for the pipe averages: 𝒞(Id − 2ξ⊗ξ) for line pipes in 2-D
/// and (𝒞/2)(Id − 3ξ⊗ξ) in 3-D, against f(ξ) = nξ⊗ξ − Id. With κ = 2 in
/// 3-D the amplitude is built with ε/κ so that |R_dec| ≤ ε still holds.
#[derive(Clone, Debug)]
pub struct AmplitudeField {
    pub scales: AmplitudeScales,
    pub kappa: f64,
    /// 2δλ²C_R κ/ε, the value of ρ where |R_ℓ| is small.
    pub floor: f64,
    pub rho: SpectralField,
    pub rho_dt: SpectralField,
    pub normalized: StressField,
    pub normalized_dt: StressField,
    /// z = |R_ℓ|/(C_R δ λ² α²) at each grid point.
    pub z: Vec<f64>,
}

fn frob_inner(dim: usize, a: &StressField, b: &StressField, idx: usize) -> f64 {
    sym_pairs(dim)
        .iter()
        .enumerate()
        .map(|(s, &(i, j))| {
            let w = if i == j { 1.0 } else { 2.0 };
            w * a.entries()[s].phys(0)[idx] * b.entries()[s].phys(0)[idx]
        })
        .sum()
}

pub fn build_amplitude(
    r_ell: &StressField,
    r_ell_dt: &StressField,
    scales: AmplitudeScales,
    model: &AlphaModel,
) -> Result<AmplitudeField> {
    let AmplitudeScales { delta_next, lambda_next, epsilon, c_r } = scales;
    for (name, v) in [("delta", delta_next), ("lambda", lambda_next), ("epsilon", epsilon), ("C_R", c_r)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::InvalidParameter(format!("amplitude scale {name} must be positive, got {v}")));
        }
    }
    let grid = r_ell.grid();
    let dim = grid.dim();
    let kappa = if dim == 2 { 1.0 } else { 2.0 };
    let a2 = model.alpha2();
    let floor = 2.0 * delta_next * lambda_next.powi(2) * c_r * kappa / epsilon;
    let unit = c_r * delta_next * lambda_next.powi(2) * a2;
    let norms = r_ell.frobenius();
    let mut rho = vec![0.0; grid.len()];
    let mut rho_dt = vec![0.0; grid.len()];
    let mut z = vec![0.0; grid.len()];
    for idx in 0..grid.len() {
        let zi = norms[idx] / unit;
        z[idx] = zi;
        rho[idx] = floor * chi(zi);
        let slope = chi_dz(zi);
        if slope != 0.0 {
            let z_dt = frob_inner(dim, r_ell, r_ell_dt, idx) / (norms[idx] * unit);
            rho_dt[idx] = floor * slope * z_dt;
        }
    }
    let inv: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
    let inv_sq_dt: Vec<f64> = rho.iter().zip(&rho_dt).map(|(r, d)| d / (r * r)).collect();
    let scalar = |v: Vec<f64>| SpectralField::from_physical(grid, 0, vec![v]);
    let inv = scalar(inv)?;
    let inv_sq_dt = scalar(inv_sq_dt)?;
    let c = -kappa / a2;
    let normalized = r_ell.mul_scalar(&inv)?.scale(c);
    let normalized_dt =
        StressField::lincomb(&[(c, &r_ell_dt.mul_scalar(&inv)?), (-c, &r_ell.mul_scalar(&inv_sq_dt)?)])?;
    Ok(AmplitudeField {
        scales,
        kappa,
        floor,
        rho: scalar(rho)?,
        rho_dt: scalar(rho_dt)?,
        normalized,
        normalized_dt,
        z,
    })
}

impl AmplitudeField {
    /// max |R_dec|/ε; at most one by construction.
    pub fn ball_ratio(&self) -> f64 {
        self.normalized.sup_norm() / self.scales.epsilon
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.phys(0).iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Measured ‖ρ‖_{L^p} next to (3κ/ε)(C_R δλ²|𝕋ᵈ|^{1/p} + ‖α⁻²R_ℓ‖_{L^p}).
    pub fn lp_report(&self, r_ell: &StressField, model: &AlphaModel, p: f64) -> (f64, f64) {
        let s = &self.scales;
        let g = r_ell.grid();
        let r_lp = (r_ell.frobenius().iter().map(|v| (v / model.alpha2()).powf(p)).sum::<f64>() * g.cell_volume())
            .powf(1.0 / p);
        let measured = self.rho.lp_norm(p);
        let bound = 3.0 * self.kappa / s.epsilon
            * (s.c_r * s.delta_next * s.lambda_next.powi(2) * g.volume().powf(1.0 / p) + r_lp);
        (measured, bound)
    }
}
