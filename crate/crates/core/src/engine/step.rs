//! One iteration step from the glued state, evaluated at sample times.

use crate::alpha;
use crate::error::{LabError, Result};
use crate::spectral::{self, Grid, SpectralField};
use crate::transport::{solve_flow, verify_deformation, DeformationReport, TimePartition};

use super::amplitude::{build_amplitude, AmplitudeScales};
use super::budget::{decompose_new_stress, reassembly_residual, type_one_check, BudgetNorms, StressBudget};
use super::glue::{flux_pair, GluedState};
use super::mollify::{mollify, MollifiedState};
use super::perturbation::{assemble_perturbation, ActiveCutoff, PipeBank, Perturbation};

/// Scales of one toy step, given directly rather than derived.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyParams {
    pub lambda_q: f64,
    pub lambda_next: f64,
    pub r: f64,
    pub ell: f64,
    pub tau: f64,
    pub delta_next: f64,
    pub c_r: f64,
    /// Order of the profile operator.
    pub d: usize,
    /// Scales of the following level, used only by the diagnostics.
    pub lambda_after: f64,
    pub delta_after: f64,
    /// Flow maps are solved on this coarser grid and resampled.
    pub flow_resolution: usize,
    pub flow_steps_per_tau: usize,
    /// Least number of grid spacings across a pipe radius.
    pub min_points_per_radius: f64,
    /// Cell quadrature points per axis for the pipe averages.
    pub cell_points: usize,
}

impl ToyParams {
    /// λ_q = 2, λ_{q+1} = 32, r = 1/4, ℓ = 0.1, τ = ℓ³.
    pub fn desk() -> Self {
        Self {
            lambda_q: 2.0,
            lambda_next: 32.0,
            r: 0.25,
            ell: 0.1,
            tau: 1e-3,
            delta_next: 0.05,
            c_r: 0.1,
            d: 2,
            lambda_after: 512.0,
            delta_after: 0.0025,
            flow_resolution: 64,
            flow_steps_per_tau: 64,
            min_points_per_radius: 2.0,
            cell_points: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_q", self.lambda_q),
            ("lambda_next", self.lambda_next),
            ("r", self.r),
            ("ell", self.ell),
            ("tau", self.tau),
            ("delta_next", self.delta_next),
            ("c_r", self.c_r),
            ("lambda_after", self.lambda_after),
            ("delta_after", self.delta_after),
            ("min_points_per_radius", self.min_points_per_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::ParameterCondition(format!("{name} must be positive, got {v}")));
            }
        }
        if self.ell >= 1.0 {
            return Err(LabError::ParameterCondition(format!("ell must lie in (0, 1), got {}", self.ell)));
        }
        if self.r > 1.0 {
            return Err(LabError::ParameterCondition(format!("r must lie in (0, 1], got {}", self.r)));
        }
        if self.lambda_next <= self.lambda_q || self.lambda_after <= self.lambda_next {
            return Err(LabError::ParameterCondition("frequencies must increase".into()));
        }
        if self.d == 0 || self.flow_resolution < 8 || self.flow_steps_per_tau == 0 || self.cell_points < 16 {
            return Err(LabError::ParameterCondition("d, flow and quadrature sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Quantities of the inductive bounds at the toy scales. These are
/// asymptotic statements and are not expected to hold here.
#[derive(Clone, Debug)]
pub struct InductiveDiagnostics {
    pub label: &'static str,
    /// (‖R_{q+1}‖_{L¹}, α² C_R δ_{q+2} λ_{q+2}²)
    pub stress: (f64, f64),
    /// ‖∇u_{q+1}‖_{L²} against 1.
    pub gradient: f64,
    /// ‖∇³u_{q+1}‖₀ against λ_{q+1}⁴.
    pub third: (f64, f64),
    /// ‖δu‖ + λ⁻¹‖∇δu‖ + λ⁻²‖∇²δu‖ for δu = u_{q+1} − u_q, against δ_{q+1}^{1/2}.
    pub increment: (f64, f64),
    /// Time window touched by the perturbation and the allowed window.
    pub window: ((f64, f64), (f64, f64)),
}

impl InductiveDiagnostics {
    pub fn stress_ok(&self) -> bool {
        self.stress.0 <= self.stress.1
    }

    pub fn gradient_ok(&self) -> bool {
        self.gradient <= 1.0
    }

    pub fn third_ok(&self) -> bool {
        self.third.0 <= self.third.1
    }

    pub fn increment_ok(&self) -> bool {
        self.increment.0 <= self.increment.1
    }

    pub fn window_ok(&self) -> bool {
        let ((a, b), (lo, hi)) = self.window;
        a >= lo && b <= hi
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub t: f64,
    pub active: Vec<i64>,
    pub u_q: SpectralField,
    pub u_ell: SpectralField,
    pub u_next: SpectralField,
    pub perturbation: Perturbation,
    pub budget: StressBudget,
    pub norms: BudgetNorms,
    /// Residual of the mollified pair with the commutator stress.
    pub mollified_residual: f64,
    /// Residual of u_{q+1} against Div of the new stress.
    pub master_residual: f64,
    pub divergence: f64,
    pub mean: f64,
    pub hamiltonian_q: f64,
    pub hamiltonian_ell: f64,
    pub hamiltonian_next: f64,
    /// max |R_dec|/ε and min ρ.
    pub ball_ratio: f64,
    pub min_rho: f64,
    pub type_one: f64,
    /// Grid L¹ norm of the flux between the pieces of neighbouring cutoffs.
    pub type_two: Vec<(i64, i64, f64)>,
    pub deformation: Vec<(i64, DeformationReport)>,
    pub diagnostics: InductiveDiagnostics,
}

fn tensor_l1(f: &SpectralField) -> f64 {
    let n = f.ncomp();
    (0..f.grid().len()).map(|i| (0..n).map(|c| f.phys(c)[i].powi(2)).sum::<f64>().sqrt()).sum::<f64>()
        * f.grid().cell_volume()
}

/// All k-th partial derivatives of every component, as scalar fields.
fn derivatives(f: &SpectralField, k: usize) -> Vec<SpectralField> {
    let mut layer: Vec<SpectralField> = (0..f.ncomp()).map(|c| f.component(c)).collect();
    for _ in 0..k {
        layer = layer.iter().flat_map(|g| (0..f.dim()).map(move |a| spectral::partial(g, a))).collect();
    }
    layer
}

fn tower_l2(parts: &[SpectralField]) -> f64 {
    parts.iter().map(|p| p.l2_norm().powi(2)).sum::<f64>().sqrt()
}

fn tower_sup(parts: &[SpectralField]) -> f64 {
    let len = parts[0].grid().len();
    (0..len).map(|i| parts.iter().map(|p| p.phys(0)[i].powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

fn flow_cutoff(ms: &MollifiedState, params: &ToyParams, index: i64, anchor: f64, t: f64) -> Result<(ActiveCutoff, DeformationReport)> {
    let grid = ms.grid();
    let coarse = Grid::new(grid.dim(), params.flow_resolution.min(grid.n()))?;
    let velocity = |s: f64| ms.velocity(s)?.resample(&coarse);
    let flow = solve_flow(&coarse, &velocity, anchor, t, params.tau / params.flow_steps_per_tau as f64)?;
    let report = verify_deformation(&flow, params.ell)?;
    let disp = flow.displacement()?.resample(grid)?;
    let positions =
        (0..grid.dim()).map(|a| (0..grid.len()).map(|i| grid.point(i)[a] + disp.phys(a)[i]).collect()).collect();
    Ok((ActiveCutoff { index, positions }, report))
}

/// u_{q+1} = u_ℓ + w and the new stress at time t. The cutoffs live on
/// the support of R_ℓ; Φ_i is the identity when t is the centre of the
/// only active cutoff and is solved otherwise.
pub fn iterate_step(glued: &GluedState, params: &ToyParams, t: f64) -> Result<StepResult> {
    params.validate()?;
    let model = glued.model;
    let ms = mollify(glued, params.ell)?;
    let grid = ms.grid().clone();
    let u_q = glued.velocity(t)?;
    let u_ell = ms.velocity(t)?;
    let du_ell = ms.velocity_dt(t);
    let r_ell = ms.stress(t)?;
    let r_comm = ms.commutator(t)?;
    let mollified_residual = {
        let r = r_ell.add(&r_comm)?;
        let res = alpha::relaxed_residual(&u_ell, None, Some(&r), &du_ell, &model)?;
        alpha::relative_residual(&res, &u_ell, &du_ell, &model)?
    };
    let bank = PipeBank::new(grid.dim(), params.lambda_next, params.r, params.d)?;
    let scales = AmplitudeScales {
        delta_next: params.delta_next,
        lambda_next: params.lambda_next,
        epsilon: bank.epsilon(),
        c_r: params.c_r,
    };
    let amp = build_amplitude(&r_ell, &ms.stress_dt(t)?, scales, &model)?;
    let (s0, s1) = glued.support();
    let partition = TimePartition::new(params.tau, (s0 - params.ell, s1 + params.ell))?;
    let active = partition.active_at(t);
    let mut cutoffs = Vec::new();
    let mut deformation = Vec::new();
    for &i in &active {
        let anchor = partition.center(i);
        if anchor == t {
            cutoffs.push(ActiveCutoff::identity(&grid, i));
        } else {
            let (cut, rep) = flow_cutoff(&ms, params, i, anchor, t)?;
            cutoffs.push(cut);
            deformation.push((i, rep));
        }
    }
    let pert = assemble_perturbation(&amp, &bank, &partition, t, &cutoffs, &u_ell, params.min_points_per_radius)?;
    let budget = decompose_new_stress(&u_ell, &r_ell, &r_comm, &pert.w, &pert.w_dt, &model)?;
    let master_residual = reassembly_residual(&u_ell, &du_ell, &pert.w, &pert.w_dt, &budget, &model)?;
    let u_next = u_ell.add(&pert.w)?;
    let divergence = spectral::div(&u_next)?.max_abs() / spectral::grad(&u_next)?.max_abs().max(1e-300);
    let mean = u_next.mean().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let weights: Vec<(usize, f64)> =
        active.iter().map(|&i| (bank.set_for(i), partition.eta(i, t).powi(2))).filter(|w| w.1 > 0.0).collect();
    let type_one = if weights.is_empty() {
        0.0
    } else {
        type_one_check(&amp, &bank, &weights, &r_ell, &model, params.cell_points)?
    };
    let mut type_two = Vec::new();
    for (a, (i, wi, _)) in pert.per_cutoff.iter().enumerate() {
        for (j, wj, _) in pert.per_cutoff.iter().skip(a + 1) {
            let f = flux_pair(wi, wj, &model)?.add(&flux_pair(wj, wi, &model)?)?;
            type_two.push((*i, *j, tensor_l1(&f)));
        }
    }
    let norms = budget.norms()?;
    let lam = params.lambda_next;
    let inc = u_next.sub(&u_q)?;
    let inc_norms: Vec<f64> = (0..3).map(|k| tower_l2(&derivatives(&inc, k))).collect();
    let reach = 1.0 / (30.0 * params.lambda_q);
    let window_lo = partition.active_indices().first().map_or(t, |&i| partition.center(i) - params.tau);
    let window_hi = partition.active_indices().last().map_or(t, |&i| partition.center(i) + params.tau);
    let diagnostics = InductiveDiagnostics {
        label: "diagnostic: asymptotic bounds not expected to hold at toy parameters",
        stress: (norms.total.0, model.alpha2() * params.c_r * params.delta_after * params.lambda_after.powi(2)),
        gradient: tower_l2(&derivatives(&u_next, 1)),
        third: (tower_sup(&derivatives(&u_next, 3)), lam.powi(4)),
        increment: (inc_norms[0] + inc_norms[1] / lam + inc_norms[2] / (lam * lam), params.delta_next.sqrt()),
        window: ((window_lo, window_hi), (s0 - reach, s1 + reach)),
    };
    Ok(StepResult {
        t,
        active,
        hamiltonian_q: alpha::hamiltonian(&u_q, &model),
        hamiltonian_ell: alpha::hamiltonian(&u_ell, &model),
        hamiltonian_next: alpha::hamiltonian(&u_next, &model),
        u_q,
        u_ell,
        u_next,
        ball_ratio: amp.ball_ratio(),
        min_rho: amp.min_rho(),
        perturbation: pert,
        budget,
        norms,
        mollified_residual,
        master_residual,
        divergence,
        mean,
        type_one,
        type_two,
        deformation,
        diagnostics,
    })
}
