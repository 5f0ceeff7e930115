//! Inverse divergence: the Fourier multiplier ℛ and the
//! differentiate-by-parts iteration for products G·(ϱ∘Φ).

use num::complex::Complex64;
use num::Zero;

use crate::error::{LabError, Result};
use crate::spectral::{self, compose, Grid, SpectralField};
use crate::tensor::{sym_pairs, StressField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// ℛv, symmetric and traceless with Div ℛv = v − v̄.
///
/// In n dimensions
/// ℛv = a Δ⁻²∇∇(div v) + b Δ⁻¹(div v) Id + Δ⁻¹(∇v + ∇vᵀ)
/// with a = −(n−2)/(n−1) and b = −1/(n−1); these are the only weights making
/// the output traceless with the right divergence. Modes on the Nyquist
/// planes carry no derivative and are dropped.
pub fn fourier_inverse_div(v: &SpectralField) -> Result<StressField> {
    if v.rank() != 1 {
        return Err(LabError::RankMismatch { expected: 1, found: v.rank() });
    }
    let grid = v.grid();
    let d = grid.dim();
    let nf = (d - 1) as f64;
    let (a, b) = (-(d as f64 - 2.0) / nf, -1.0 / nf);
    let pairs = sym_pairs(d);
    let mut out = vec![vec![Complex64::zero(); grid.len()]; pairs.len()];
    for idx in 0..grid.len() {
        let k = grid.deriv_wavevector(idx);
        let kk: f64 = k.iter().map(|x| x * x).sum();
        if kk == 0.0 {
            continue;
        }
        let inv = -1.0 / kk;
        let vk: Vec<Complex64> = (0..d).map(|c| v.spec(c)[idx]).collect();
        let divk: Complex64 = (0..d).map(|c| I * k[c] * vk[c]).sum();
        for (s, &(i, j)) in pairs.iter().enumerate() {
            let mut val = (I * k[i]) * (I * k[j]) * divk * (a * inv * inv) + (I * k[i] * vk[j] + I * k[j] * vk[i]) * inv;
            if i == j {
                val += divk * (b * inv);
            }
            out[s][idx] = val;
        }
    }
    let entries = out
        .into_iter()
        .map(|c| SpectralField::from_spectral(grid, 0, vec![c]))
        .collect::<Result<Vec<_>>>()?;
    StressField::from_entries(entries)
}

/// ℛ applied to the symmetric-tensor divergence Div M.
pub fn inverse_div_of_div(m: &SpectralField) -> Result<StressField> {
    fourier_inverse_div(&spectral::div(m)?)
}

/// Output of one differentiate-by-parts step:
/// G ϱ∘Φ = Div stress + ∇pressure + error.
#[derive(Clone, Debug)]
pub struct DivInverseOutput {
    pub stress: StressField,
    /// Scalar absorbing the trace, so stress + pressure·Id is the full
    /// symmetric tensor produced by the step.
    pub pressure: SpectralField,
    pub error: SpectralField,
    pub mean: Vec<f64>,
}

/// Geometry of a volume-preserving map sampled at the grid points.
struct MapData {
    jac: SpectralField,
    inv: SpectralField,
    /// A Aᵀ with A = (∇Φ)⁻¹.
    metric: SpectralField,
}

impl MapData {
    fn new(grid: &Grid, positions: &[Vec<f64>]) -> Result<Self> {
        let jac = spectral::map_jacobian(grid, positions)?;
        let d = grid.dim();
        let dev = (0..grid.len())
            .map(|p| {
                (0..d * d)
                    .map(|c| {
                        let id = if c / d == c % d { 1.0 } else { 0.0 };
                        (jac.phys(c)[p] - id).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if dev > 0.5 {
            return Err(LabError::FlowTooDeformed(dev));
        }
        let inv = spectral::invert(&jac)?;
        let metric = spectral::matmul(&inv, &spectral::transpose(&inv)?)?;
        Ok(Self { jac, inv, metric })
    }
}

/// Full symmetric tensor of one step and the coefficient matrix H with
/// E^i = H^{iℓ} g_ℓ, where g = (∇ϑ)∘Φ.
fn step_parts(g_field: &SpectralField, map: &MapData, g: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let d = g_field.dim();
    let ag = spectral::matvec(&map.inv, g)?;
    let s = spectral::dot(g, &spectral::matvec(&map.jac, g_field)?)?;
    let full = SpectralField::lincomb(&[
        (1.0, &spectral::outer(g_field, &ag)?),
        (1.0, &spectral::outer(&ag, g_field)?),
        (-1.0, &map.metric.mul_scalar(&s)?),
    ])?;

    // S^{pi} = ∂_m (G^p B^{im} − G^m B^{ip})
    let mut s_rows = Vec::with_capacity(d);
    for p in 0..d {
        let row = SpectralField::stack(&(0..d).map(|i| map.metric.entry(p, i)).collect::<Vec<_>>(), 1)?;
        let mp = SpectralField::lincomb(&[
            (1.0, &map.metric.mul_scalar(&g_field.component(p))?),
            (-1.0, &spectral::outer(g_field, &row)?),
        ])?;
        s_rows.push(spectral::div(&mp)?);
    }
    let s_parts: Vec<SpectralField> = (0..d * d).map(|c| s_rows[c / d].component(c % d)).collect();
    let s_mat = SpectralField::stack(&s_parts, 2)?;
    let h = SpectralField::lincomb(&[
        (1.0, &spectral::matmul(&spectral::transpose(&s_mat)?, &spectral::transpose(&map.jac)?)?),
        (-1.0, &spectral::matmul(&spectral::grad(g_field)?, &map.inv)?),
    ])?;
    Ok((full, h))
}

fn traceless(full: &SpectralField) -> Result<(StressField, SpectralField)> {
    Ok(StressField::from_tensor(full)?.split_trace())
}

fn relative_gap(a: &SpectralField, b: &SpectralField) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1e-300);
    a.sub(b).map(|x| x.max_abs()).unwrap_or(f64::INFINITY) / scale
}

/// One differentiate-by-parts step for G ϱ∘Φ with ϱ = Δϑ, where
/// `positions` holds Φ at the grid points.
pub fn iterative_div_step(
    g_field: &SpectralField,
    rho: &SpectralField,
    theta: &SpectralField,
    positions: &[Vec<f64>],
) -> Result<DivInverseOutput> {
    if g_field.rank() != 1 {
        return Err(LabError::RankMismatch { expected: 1, found: g_field.rank() });
    }
    let gap = relative_gap(rho, &spectral::laplacian(theta));
    if gap > 1e-8 {
        return Err(LabError::InvalidParameter(format!("ϱ differs from Δϑ by {gap:e}")));
    }
    let map = MapData::new(g_field.grid(), positions)?;
    let g = compose(&spectral::grad(theta)?, positions)?;
    let (full, h) = step_parts(g_field, &map, &g)?;
    let (stress, pressure) = traceless(&full)?;
    let error = spectral::matvec(&h, &g)?;
    let mean = g_field.mul_scalar(&compose(rho, positions)?)?.mean();
    Ok(DivInverseOutput { stress, pressure, error, mean })
}

/// Parameters of the full operator: depth d, the frequency ζ in
/// ϱ = ζ^{−2d}Δᵈϑ, the frequency λ of G, the top frequency Λ of ϱ and the
/// periodicity μ of ϑ.
#[derive(Clone, Copy, Debug)]
pub struct FullDivParams {
    pub d: usize,
    pub zeta: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub mu: f64,
}

impl FullDivParams {
    /// (λ/ζ)^d λ⁴ ≤ 1/ζ: enough cheap-for-expensive exchanges.
    pub fn exchange_holds(&self) -> bool {
        (self.lambda / self.zeta).powi(self.d as i32) * self.lambda.powi(4) <= 1.0 / self.zeta
    }
}

#[derive(Clone, Debug)]
pub struct FullDivOutput {
    pub stress: StressField,
    pub pressure: SpectralField,
    pub mean: Vec<f64>,
    /// Stress of each exchange step, before the final Fourier cleanup.
    pub step_norms: Vec<f64>,
    /// L¹ norm of the remainder handed to ℛ.
    pub remainder: f64,
    /// ‖R‖_{L¹} / (C_G λ⁴ C_* ζ⁻¹) with C_G = ‖G‖_{L¹}, C_* = ‖ϱ‖_{L¹}.
    pub ratio: f64,
}

/// G ϱ∘Φ = Div R + ∇P + mean, by d exchange steps followed by ℛ on the
/// mean-free remainder.
pub fn full_inverse_div(
    g_field: &SpectralField,
    rho: &SpectralField,
    theta: &SpectralField,
    positions: &[Vec<f64>],
    params: &FullDivParams,
) -> Result<FullDivOutput> {
    if params.d == 0 || !(params.zeta >= 1.0) || !(params.lambda >= 1.0) {
        return Err(LabError::InvalidParameter("need d ≥ 1, ζ ≥ 1 and λ ≥ 1".into()));
    }
    if !params.exchange_holds() {
        return Err(LabError::ParameterCondition(format!(
            "exchange condition (λ/ζ)^d λ⁴ ≤ 1/ζ fails for λ = {}, ζ = {}, d = {}",
            params.lambda, params.zeta, params.d
        )));
    }
    let grid = g_field.grid();
    let dim = grid.dim();
    let z2 = params.zeta.powi(-2);
    // levels[k] = (ζ⁻²Δ)^{d−k} ϑ, so levels[0] should reproduce ϱ
    let mut levels = vec![theta.clone()];
    for _ in 0..params.d {
        let next = spectral::laplacian(levels.last().unwrap()).scale(z2);
        levels.push(next);
    }
    levels.reverse();
    let gap = relative_gap(rho, &levels[0]);
    if gap > 1e-8 {
        return Err(LabError::InvalidParameter(format!("ϱ differs from ζ^(-2d)Δᵈϑ by {gap:e}")));
    }
    let map = MapData::new(grid, positions)?;

    // terms: (multi-index of derivatives, coefficient vector) at level j,
    // each standing for G_α · (ζ^{−2j} ∂^α levels[j])∘Φ
    let mut terms: Vec<(Vec<usize>, SpectralField)> = vec![(vec![], g_field.clone())];
    let mut full = SpectralField::zeros(grid, 2);
    let mut step_norms = Vec::new();
    for j in 0..params.d {
        let mut step_full = SpectralField::zeros(grid, 2);
        let mut next: Vec<(Vec<usize>, SpectralField)> = Vec::new();
        for (alpha, coeff) in &terms {
            let mut th = levels[j + 1].scale(z2.powi(j as i32 + 1));
            for &a in alpha {
                th = spectral::partial(&th, a);
            }
            let g = compose(&spectral::grad(&th)?, positions)?;
            let (f, h) = step_parts(coeff, &map, &g)?;
            step_full = step_full.add(&f)?;
            for l in 0..dim {
                let mut key = alpha.clone();
                key.push(l);
                key.sort_unstable();
                let col = SpectralField::stack(&(0..dim).map(|i| h.entry(i, l)).collect::<Vec<_>>(), 1)?;
                match next.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, acc)) => *acc = acc.add(&col)?,
                    None => next.push((key, col)),
                }
            }
        }
        step_norms.push(StressField::from_tensor(&step_full)?.l1_norm());
        full = full.add(&step_full)?;
        terms = next;
    }
    // remainder E = Σ_α G_α (ζ^{−2d} ∂^α ϑ)∘Φ
    let mut rem = SpectralField::zeros(grid, 1);
    for (alpha, coeff) in &terms {
        let mut th = levels[params.d].scale(z2.powi(params.d as i32));
        for &a in alpha {
            th = spectral::partial(&th, a);
        }
        rem = rem.add(&coeff.mul_scalar(&compose(&th, positions)?)?)?;
    }
    let mean = rem.mean();
    let remainder = rem.lp_norm(1.0);
    let (local, local_p) = traceless(&full)?;
    let stress = local.add(&fourier_inverse_div(&rem)?)?;
    let c_g = g_field.lp_norm(1.0);
    let c_star = rho.lp_norm(1.0);
    let ratio = stress.l1_norm() / (c_g * params.lambda.powi(4) * c_star / params.zeta).max(1e-300);
    Ok(FullDivOutput { stress, pressure: local_p, mean, step_norms, remainder, ratio })
}
