//! The perturbation w in curl form, split into principal part and
//! divergence corrector, with its time derivative.

use crate::error::{LabError, Result};
use crate::geometry::{build_direction_sets, DirectionSet};
use crate::mikado::{pulled_back_potential, PipeFamily};
use crate::spectral::{self, Grid, SpectralField};
use crate::transport::TimePartition;

use super::amplitude::AmplitudeField;

/// Pipes along every vector of 𝒦₀ and 𝒦₁.
#[derive(Clone, Debug)]
pub struct PipeBank {
    pub sets: Vec<DirectionSet>,
    pub pipes: Vec<Vec<PipeFamily>>,
    pub lambda: f64,
}

impl PipeBank {
    pub fn new(dim: usize, lambda: f64, r: f64, d: usize) -> Result<Self> {
        let sets = build_direction_sets(dim, 1)?;
        let pipes = sets
            .iter()
            .map(|s| s.vectors.iter().map(|k| PipeFamily::new(k, lambda, r, d)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sets, pipes, lambda })
    }

    /// Even cutoffs use 𝒦₀, odd ones 𝒦₁.
    pub fn set_for(&self, i: i64) -> usize {
        i.rem_euclid(2) as usize
    }

    /// Smallest pipe radius over the sets in use.
    pub fn min_radius(&self, set: usize) -> f64 {
        self.pipes[set].iter().map(|p| p.radius).fold(f64::INFINITY, f64::min)
    }

    /// The smaller of ε over both sets.
    pub fn epsilon(&self) -> f64 {
        self.sets.iter().map(|s| s.epsilon()).fold(f64::INFINITY, f64::min)
    }
}

/// One active cutoff with the back-to-labels map Φ_i on the grid.
#[derive(Clone, Debug)]
pub struct ActiveCutoff {
    pub index: i64,
    pub positions: Vec<Vec<f64>>,
}

impl ActiveCutoff {
    /// Φ_i = id, exact at the cutoff centre.
    pub fn identity(grid: &Grid, index: i64) -> Self {
        let positions = (0..grid.dim()).map(|a| (0..grid.len()).map(|i| grid.point(i)[a]).collect()).collect();
        Self { index, positions }
    }
}

#[derive(Clone, Debug)]
pub struct Perturbation {
    pub t: f64,
    pub w: SpectralField,
    pub w_p: SpectralField,
    pub w_c: SpectralField,
    pub w_dt: SpectralField,
    /// Contribution of each active cutoff, in curl form, with its rate.
    pub per_cutoff: Vec<(i64, SpectralField, SpectralField)>,
    /// max |w − w_p − w_c| / max |w|.
    pub split_gap: f64,
    /// max |div w| / max |∇w|.
    pub divergence: f64,
}

/// ∇⊥a ψ in 2-D and ∇a × P in 3-D. Products are formed without aliasing
/// so that w = w_p + w_c holds on the grid.
fn corrector(a: &SpectralField, potential: &SpectralField) -> Result<SpectralField> {
    if a.dim() == 2 {
        spectral::curl(a)?.mul_scalar_dealiased(potential)
    } else {
        let fine = Grid::new(3, 2 * a.grid().n())?;
        let ga = spectral::grad(a)?.resample(&fine)?;
        spectral::cross(&ga, &potential.resample(&fine)?)?.resample(a.grid())
    }
}

/// ∂_t of the pulled-back potential: −u·∇(ψ∘Φ) in 2-D and the 1-form rule
/// −(u·∇)P − (∇u)ᵀP in 3-D.
fn potential_rate(p: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    let gp = spectral::grad(p)?;
    if p.rank() == 0 {
        return Ok(spectral::dot(&gp, u)?.scale(-1.0));
    }
    let adv = spectral::matvec(&gp, u)?;
    let stretch = spectral::matvec(&spectral::transpose(&spectral::grad(u)?)?, p)?;
    Ok(adv.add(&stretch)?.scale(-1.0))
}

fn physical(grid: &Grid, v: Vec<f64>) -> Result<SpectralField> {
    SpectralField::from_physical(grid, 0, vec![v])
}

/// Assembles w at time t from the active cutoffs. `min_points` is the
/// least number of grid spacings across a pipe radius.
#[allow(clippy::too_many_arguments)]
pub fn assemble_perturbation(
    amp: &AmplitudeField,
    bank: &PipeBank,
    partition: &TimePartition,
    t: f64,
    cutoffs: &[ActiveCutoff],
    u_ell: &SpectralField,
    min_points: f64,
) -> Result<Perturbation> {
    let grid = amp.rho.grid().clone();
    let lambda = bank.lambda;
    if (grid.n() as f64) < 4.0 * lambda {
        return Err(LabError::Unresolved(format!("grid {} cannot carry λ = {lambda}", grid.n())));
    }
    let s: Vec<f64> = amp.rho.phys(0).iter().map(|r| r.sqrt()).collect();
    let s_dt: Vec<f64> = amp.rho_dt.phys(0).iter().zip(&s).map(|(d, s)| d / (2.0 * s)).collect();
    let mut w = SpectralField::zeros(&grid, 1);
    let mut w_p = SpectralField::zeros(&grid, 1);
    let mut w_c = SpectralField::zeros(&grid, 1);
    let mut w_dt = SpectralField::zeros(&grid, 1);
    let mut per_cutoff = Vec::new();
    let zero = [[0.0; 3]; 3];
    for cut in cutoffs {
        let eta = partition.eta(cut.index, t);
        let eta_dt = partition.eta_dt(cut.index, t);
        if eta == 0.0 && eta_dt == 0.0 {
            continue;
        }
        let set_idx = bank.set_for(cut.index);
        let set = &bank.sets[set_idx];
        let radius = bank.min_radius(set_idx);
        if radius < min_points * grid.spacing() {
            return Err(LabError::Unresolved(format!(
                "pipe radius {radius:.4} spans fewer than {min_points} grid spacings of {:.4}",
                grid.spacing()
            )));
        }
        // c_k² and its rate at every point; c² is affine in the stress
        let base = set.coefficient_squares(&zero);
        let mut c2 = vec![vec![0.0; grid.len()]; set.len()];
        let mut c2_dt = vec![vec![0.0; grid.len()]; set.len()];
        for idx in 0..grid.len() {
            let sq = set.coefficient_squares(&amp.normalized.at(idx));
            let rate = set.coefficient_squares(&amp.normalized_dt.at(idx));
            for k in 0..set.len() {
                if !(sq[k] > 0.0) {
                    return Err(LabError::InvalidParameter(format!(
                        "coefficient {k} not positive at grid point {idx}: {}",
                        sq[k]
                    )));
                }
                c2[k][idx] = sq[k];
                c2_dt[k][idx] = rate[k] - base[k];
            }
        }
        let mut piece = SpectralField::zeros(&grid, 1);
        let mut piece_dt = SpectralField::zeros(&grid, 1);
        for (k, pipe) in bank.pipes[set_idx].iter().enumerate() {
            let pot = pulled_back_potential(pipe, &grid, &cut.positions)?;
            let (mut a, mut a_dt) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
            for idx in 0..grid.len() {
                let c = c2[k][idx].sqrt();
                let c_dt = c2_dt[k][idx] / (2.0 * c);
                a[idx] = c * eta * s[idx];
                a_dt[idx] = c_dt * eta * s[idx] + c * eta_dt * s[idx] + c * eta * s_dt[idx];
            }
            let a = physical(&grid, a)?;
            let a_dt = physical(&grid, a_dt)?;
            let curl_form = spectral::curl(&pot.mul_scalar_dealiased(&a)?)?;
            let principal = spectral::curl(&pot)?.mul_scalar_dealiased(&a)?;
            let corr = corrector(&a, &pot)?;
            let rate = spectral::curl(&SpectralField::lincomb(&[
                (1.0, &pot.mul_scalar_dealiased(&a_dt)?),
                (1.0, &potential_rate(&pot, u_ell)?.mul_scalar_dealiased(&a)?),
            ])?)?;
            piece = piece.add(&curl_form)?;
            w_p = w_p.add(&principal)?;
            w_c = w_c.add(&corr)?;
            piece_dt = piece_dt.add(&rate)?;
        }
        let piece = piece.scale(1.0 / lambda);
        let piece_dt = piece_dt.scale(1.0 / lambda);
        w = w.add(&piece)?;
        w_dt = w_dt.add(&piece_dt)?;
        per_cutoff.push((cut.index, piece, piece_dt));
    }
    let w_p = w_p.scale(1.0 / lambda);
    let w_c = w_c.scale(1.0 / lambda);
    let scale = w.max_abs().max(1e-300);
    let split_gap = SpectralField::lincomb(&[(1.0, &w), (-1.0, &w_p), (-1.0, &w_c)])?.max_abs() / scale;
    let divergence = spectral::div(&w)?.max_abs() / spectral::grad(&w)?.max_abs().max(1e-300);
    Ok(Perturbation { t, w, w_p, w_c, w_dt, per_cutoff, split_gap, divergence })
}
