//! The new stress split into oscillation, transport, Nash and commutator
//! parts, with the reassembly check and the low-frequency average check.

use crate::alpha::{self, AlphaModel};
use crate::error::{LabError, Result};
use crate::inverse_div::{fourier_inverse_div, inverse_div_of_div};
use crate::spectral::{self, SpectralField};
use crate::tensor::StressField;

use super::amplitude::AmplitudeField;
use super::glue::flux_pair;
use super::perturbation::PipeBank;

#[derive(Clone, Debug)]
pub struct StressBudget {
    pub osc: StressField,
    pub transport: StressField,
    pub nash: StressField,
    pub comm: StressField,
}

/// L¹ and sup norms (Frobenius) of each part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetNorms {
    pub osc: (f64, f64),
    pub transport: (f64, f64),
    pub nash: (f64, f64),
    pub comm: (f64, f64),
    pub total: (f64, f64),
}

impl StressBudget {
    pub fn total(&self) -> Result<StressField> {
        StressField::lincomb(&[(1.0, &self.osc), (1.0, &self.transport), (1.0, &self.nash), (1.0, &self.comm)])
    }

    pub fn norms(&self) -> Result<BudgetNorms> {
        let n = |r: &StressField| (r.l1_norm(), r.sup_norm());
        Ok(BudgetNorms {
            osc: n(&self.osc),
            transport: n(&self.transport),
            nash: n(&self.nash),
            comm: n(&self.comm),
            total: n(&self.total()?),
        })
    }

    /// Largest trace defect over the four parts.
    pub fn trace_defect(&self) -> f64 {
        [&self.osc, &self.transport, &self.nash, &self.comm].iter().map(|r| r.trace_defect()).fold(0.0, f64::max)
    }
}

/// R_osc = ℛ Div(R_ℓ + M(w, w)),
/// R_transport = ℛ(∂_t v_w + Div(u_ℓ ⊗ v_w)),
/// R_Nash = ℛ Div(w ⊗ v_ℓ − α²∇wᵀ∇u_ℓ − α²∇u_ℓᵀ∇w),
/// where v = u − α²Δu.
pub fn decompose_new_stress(
    u_ell: &SpectralField,
    r_ell: &StressField,
    r_comm: &StressField,
    w: &SpectralField,
    w_dt: &SpectralField,
    model: &AlphaModel,
) -> Result<StressBudget> {
    let a2 = model.alpha2();
    let ww = flux_pair(w, w, model)?;
    let osc = inverse_div_of_div(&SpectralField::lincomb(&[(1.0, &r_ell.to_tensor()), (1.0, &ww)])?)?;
    let vw = alpha::filtered_momentum(w, model);
    let transport_src = SpectralField::lincomb(&[
        (1.0, &alpha::filtered_momentum(w_dt, model)),
        (1.0, &spectral::div(&spectral::outer(u_ell, &vw)?)?),
    ])?;
    let transport = fourier_inverse_div(&transport_src)?;
    let gu = spectral::grad(u_ell)?;
    let gw = spectral::grad(w)?;
    let cross = spectral::matmul(&spectral::transpose(&gu)?, &gw)?;
    let nash_flux = SpectralField::lincomb(&[(1.0, &flux_pair(w, u_ell, model)?), (-a2, &cross)])?;
    let nash = inverse_div_of_div(&nash_flux)?;
    Ok(StressBudget { osc, transport, nash, comm: r_comm.clone() })
}

/// Relative Euler-α residual of u_ℓ + w against Div of the budget.
pub fn reassembly_residual(
    u_ell: &SpectralField,
    du_ell_dt: &SpectralField,
    w: &SpectralField,
    w_dt: &SpectralField,
    budget: &StressBudget,
    model: &AlphaModel,
) -> Result<f64> {
    let u = u_ell.add(w)?;
    let du = du_ell_dt.add(w_dt)?;
    let res = alpha::relaxed_residual(&u, None, Some(&budget.total()?), &du, model)?;
    alpha::relative_residual(&res, &u, &du, model)
}

/// Checks that the cell averages of the pipes cancel the stress:
/// the traceless part of −α²ρ Σ_i η_i² Σ_k c_k² A_k/λ² equals −R_ℓ, where
/// A_k is the measured average of W^k ΔW^l + ∂_k W^j ∂_l W^j. Returns the
/// error relative to max(|R_ℓ|, α²ρ_floor).
pub fn type_one_check(
    amp: &AmplitudeField,
    bank: &PipeBank,
    weights: &[(usize, f64)],
    r_ell: &StressField,
    model: &AlphaModel,
    cell_points: usize,
) -> Result<f64> {
    let grid = r_ell.grid();
    let dim = grid.dim();
    let lambda2 = bank.lambda * bank.lambda;
    let mut averages = Vec::new();
    for &(set, _) in weights {
        let mut per = Vec::new();
        for pipe in &bank.pipes[set] {
            per.push(pipe.average_tensor(cell_points.max(pipe.cell_points(32)))?.0);
        }
        averages.push(per);
    }
    let scale = r_ell.sup_norm().max(model.alpha2() * amp.floor);
    let mut worst = 0.0f64;
    for idx in 0..grid.len() {
        let rho = amp.rho.phys(0)[idx];
        let mut m = [[0.0; 3]; 3];
        for (&(set, eta2), avg) in weights.iter().zip(&averages) {
            let c2 = bank.sets[set].coefficient_squares(&amp.normalized.at(idx));
            for (c, a) in c2.iter().zip(avg) {
                for i in 0..dim {
                    for j in 0..dim {
                        m[i][j] -= model.alpha2() * rho * eta2 * c * a[i][j] / lambda2;
                    }
                }
            }
        }
        let tr = (0..dim).map(|i| m[i][i]).sum::<f64>() / dim as f64;
        let r = r_ell.at(idx);
        for i in 0..dim {
            for j in 0..dim {
                let traceless = m[i][j] - if i == j { tr } else { 0.0 };
                worst = worst.max((traceless + r[i][j]).abs());
            }
        }
    }
    if !worst.is_finite() {
        return Err(LabError::InvalidParameter("non-finite average check".into()));
    }
    Ok(worst / scale)
}
