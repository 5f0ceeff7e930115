//! The Euler-α operators: Hamiltonian, relaxed residual, weak pairings,
//! and a pseudo-spectral integrator for smooth solutions.

use num::complex::Complex64;
use num::Zero;

use crate::error::{LabError, Result};
use crate::spectral::{self, Grid, SpectralField};
use crate::tensor::StressField;

/// The length scale α > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaModel {
    alpha: f64,
}

impl AlphaModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LabError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha * self.alpha
    }
}

/// Samples of a field at increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SpectralField {
        self.fields.last().expect("non-empty trajectory")
    }
}

/// v = u − α²Δu.
pub fn filtered_momentum(u: &SpectralField, model: &AlphaModel) -> SpectralField {
    spectral::helmholtz(u, model.alpha())
}

/// ‖u‖² + α²‖∇u‖² by Parseval.
pub fn hamiltonian(u: &SpectralField, model: &AlphaModel) -> f64 {
    let grid = u.grid();
    let a2 = model.alpha2();
    let mut s = 0.0;
    for c in 0..u.ncomp() {
        for (idx, v) in u.spec(c).iter().enumerate() {
            let k = grid.deriv_wavevector(idx);
            s += v.norm_sqr() * (1.0 + a2 * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        }
    }
    s * grid.volume()
}

/// The same quantity by grid quadrature of |u|² + α²|∇u|².
pub fn hamiltonian_quadrature(u: &SpectralField, model: &AlphaModel) -> f64 {
    let gu = spectral::grad(u).expect("vector field");
    let a = u.l2_norm();
    let b = gu.l2_norm();
    a * a + model.alpha2() * b * b
}

/// Flux tensor M^{kl} = u^k v^l − α² ∂_k u^j ∂_l u^j.
pub fn momentum_flux(u: &SpectralField, model: &AlphaModel) -> Result<SpectralField> {
    let v = filtered_momentum(u, model);
    let gu = spectral::grad(u)?;
    let gg = spectral::matmul(&spectral::transpose(&gu)?, &gu)?;
    SpectralField::lincomb(&[(1.0, &spectral::outer(u, &v)?), (-model.alpha2(), &gg)])
}

fn relative_divergence(u: &SpectralField) -> Result<f64> {
    let d = spectral::div(u)?;
    let gu = spectral::grad(u)?;
    Ok(d.max_abs() / gu.max_abs().max(1e-300))
}

pub fn check_divergence_free(u: &SpectralField, tol: f64) -> Result<()> {
    let r = relative_divergence(u)?;
    if r > tol {
        Err(LabError::NotDivergenceFree(r))
    } else {
        Ok(())
    }
}

/// Left side of the relaxed system minus Div R:
/// ∂_t v + Div M + ∇p − Div R. Without a pressure the gradient part is
/// removed by the Leray projection.
pub fn relaxed_residual(
    u: &SpectralField,
    p: Option<&SpectralField>,
    r: Option<&StressField>,
    du_dt: &SpectralField,
    model: &AlphaModel,
) -> Result<SpectralField> {
    check_divergence_free(u, 1e-8)?;
    let dv = filtered_momentum(du_dt, model);
    let flux = spectral::div(&momentum_flux(u, model)?)?;
    let mut terms = vec![(1.0, &dv), (1.0, &flux)];
    let divr;
    if let Some(r) = r {
        divr = r.div();
        terms.push((-1.0, &divr));
    }
    let gp;
    if let Some(p) = p {
        gp = spectral::grad(p)?;
        terms.push((1.0, &gp));
    }
    let res = SpectralField::lincomb(&terms)?;
    if p.is_some() {
        Ok(res)
    } else {
        spectral::leray(&res)
    }
}

/// The relaxed-system residual of a field relative to its largest term.
pub fn relative_residual(res: &SpectralField, u: &SpectralField, du_dt: &SpectralField, model: &AlphaModel) -> Result<f64> {
    let scale = spectral::div(&momentum_flux(u, model)?)?
        .max_abs()
        .max(filtered_momentum(du_dt, model).max_abs())
        .max(1e-300);
    Ok(res.max_abs() / scale)
}

fn check_test_field(phi: &SpectralField) -> Result<()> {
    check_divergence_free(phi, 1e-10)
}

/// Spatial integral of ∂_tφ·u + α²∇∂_tφ:∇u + ∇φ:(u⊗v − α²∇uᵀ∇u).
pub fn weak_pairing(u: &SpectralField, phi: &SpectralField, dphi_dt: &SpectralField, model: &AlphaModel) -> Result<f64> {
    check_test_field(phi)?;
    let a2 = model.alpha2();
    let linear = dphi_dt.inner(u)? + a2 * spectral::grad(dphi_dt)?.inner(&spectral::grad(u)?)?;
    // ∇φ : M means ∂_k φ^l M^{kl}; our gradient stores ∂_k φ^l at (l, k)
    let gphi_t = spectral::transpose(&spectral::grad(phi)?)?;
    Ok(linear + gphi_t.inner(&momentum_flux(u, model)?)?)
}

/// The equivalent form with the Δu term moved onto the test field:
/// ∇φ:(u⊗u − α²∇uᵀ∇u + α²∇u∇uᵀ) + α² u·∇∇φ:∇uᵀ plus the linear terms.
pub fn weak_pairing_divergence_form(
    u: &SpectralField,
    phi: &SpectralField,
    dphi_dt: &SpectralField,
    model: &AlphaModel,
) -> Result<f64> {
    check_test_field(phi)?;
    let a2 = model.alpha2();
    let d = u.dim();
    let gu = spectral::grad(u)?;
    let linear = dphi_dt.inner(u)? + a2 * gu.inner(&spectral::grad(dphi_dt)?)?;
    let gut = spectral::transpose(&gu)?;
    // (∇uᵀ∇u)^{kl} = ∂_k u^j ∂_l u^j, (∇u∇uᵀ)^{kl} = ∂_i u^k ∂_i u^l
    let gtg = spectral::matmul(&gut, &gu)?;
    let ggt = spectral::matmul(&gu, &gut)?;
    let m = SpectralField::lincomb(&[(1.0, &spectral::outer(u, u)?), (-a2, &gtg), (a2, &ggt)])?;
    let gphi_t = spectral::transpose(&spectral::grad(phi)?)?;
    let quad = gphi_t.inner(&m)?;
    // u^k ∂_k ∂_i φ^l ∂_i u^l
    let mut cubic = 0.0;
    for l in 0..d {
        let phil = phi.component(l);
        let hess = spectral::grad(&spectral::grad(&phil)?)?; // (k, i) = ∂_i ∂_k φ^l
        let ul = u.component(l);
        let gul = spectral::grad(&ul)?;
        let w = spectral::matvec(&hess, &gul)?; // (k) = ∂_k∂_i φ^l ∂_i u^l
        cubic += u.inner(&w)?;
    }
    Ok(linear + quad + a2 * cubic)
}

/// Right side of ∂_t v = −P Div M in Fourier space, projected onto the
/// retained band; returns the coefficients of ∂_t u.
struct Rhs {
    grid: Grid,
    alpha2: f64,
    keep: Vec<bool>,
}

impl Rhs {
    fn new(grid: &Grid, alpha: f64, fraction: f64) -> Self {
        let cutoff = fraction * grid.n() as f64 / 2.0;
        let keep = (0..grid.len())
            .map(|idx| grid.wavevector(idx).iter().all(|k| (*k as f64).abs() < cutoff))
            .collect();
        Self { grid: grid.clone(), alpha2: alpha * alpha, keep }
    }

    fn eval(&self, uhat: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let g = &self.grid;
        let d = g.dim();
        let len = g.len();
        let ks: Vec<[f64; 3]> = (0..len).map(|i| g.deriv_wavevector(i)).collect();
        let k2 = |k: &[f64; 3]| k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let i = Complex64::new(0.0, 1.0);
        let u: Vec<Vec<f64>> = uhat.iter().map(|c| g.inverse_real(c)).collect();
        let v: Vec<Vec<f64>> = uhat
            .iter()
            .map(|c| {
                let vh: Vec<Complex64> = c.iter().zip(&ks).map(|(x, k)| x * (1.0 + self.alpha2 * k2(k))).collect();
                g.inverse_real(&vh)
            })
            .collect();
        // gradient entries ∂_k u^j
        let mut gu = vec![vec![0.0; len]; d * d];
        for j in 0..d {
            for k in 0..d {
                let h: Vec<Complex64> = uhat[j].iter().zip(&ks).map(|(x, kk)| i * kk[k] * x).collect();
                gu[j * d + k] = g.inverse_real(&h);
            }
        }
        let mut out = vec![vec![Complex64::zero(); len]; d];
        for kk in 0..d {
            for l in 0..d {
                let m: Vec<f64> = (0..len)
                    .map(|p| {
                        let mut s = u[kk][p] * v[l][p];
                        let mut c = 0.0;
                        for j in 0..d {
                            c += gu[j * d + kk][p] * gu[j * d + l][p];
                        }
                        s -= self.alpha2 * c;
                        s
                    })
                    .collect();
                let mh = g.forward_real(&m);
                for p in 0..len {
                    out[l][p] -= i * ks[p][kk] * mh[p];
                }
            }
        }
        // Leray projection, band truncation, then invert the Helmholtz factor
        for p in 0..len {
            if !self.keep[p] {
                for c in out.iter_mut() {
                    c[p] = Complex64::zero();
                }
                continue;
            }
            let k = &ks[p];
            let kk = k2(k);
            if kk > 0.0 {
                let kd: Complex64 = (0..d).map(|j| out[j][p] * k[j]).sum();
                for j in 0..d {
                    out[j][p] -= kd * (k[j] / kk);
                }
            }
            let h = 1.0 / (1.0 + self.alpha2 * kk);
            for c in out.iter_mut() {
                c[p] *= h;
            }
        }
        out
    }
}

/// Time derivative of u for a smooth solution (no band truncation).
pub fn time_derivative(u: &SpectralField, model: &AlphaModel) -> Result<SpectralField> {
    let rhs = Rhs::new(u.grid(), model.alpha(), 2.0);
    SpectralField::from_spectral(u.grid(), 1, rhs.eval(u.spec_all()))
}

/// Classical RK4 for the transport form with Leray projection and a
/// band truncation keeping |k_j| < dealias·n/2 (2/3 gives the usual rule).
/// Snapshots are stored every `save_every` steps, always including t = 0
/// and the final time.
pub fn evolve_smooth(
    u0: &SpectralField,
    model: &AlphaModel,
    dt: f64,
    t_final: f64,
    dealias: f64,
    save_every: usize,
) -> Result<Trajectory> {
    if u0.rank() != 1 {
        return Err(LabError::RankMismatch { expected: 1, found: u0.rank() });
    }
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(LabError::InvalidParameter("dt and t_final must be positive".into()));
    }
    check_divergence_free(u0, 1e-8)?;
    let grid = u0.grid().clone();
    let rhs = Rhs::new(&grid, model.alpha(), dealias);
    let steps = (t_final / dt).round() as usize;
    let start = u0.truncate(dealias);
    let mut u: Vec<Vec<Complex64>> = start.spec_all().to_vec();
    let mut traj = Trajectory { times: vec![0.0], fields: vec![start] };
    let axpy = |a: &[Vec<Complex64>], b: &[Vec<Complex64>], s: f64| -> Vec<Vec<Complex64>> {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q * s).collect()).collect()
    };
    let every = save_every.max(1);
    for step in 1..=steps {
        let k1 = rhs.eval(&u);
        let k2 = rhs.eval(&axpy(&u, &k1, dt / 2.0));
        let k3 = rhs.eval(&axpy(&u, &k2, dt / 2.0));
        let k4 = rhs.eval(&axpy(&u, &k3, dt));
        for c in 0..u.len() {
            for p in 0..u[c].len() {
                u[c][p] += (k1[c][p] + 2.0 * k2[c][p] + 2.0 * k3[c][p] + k4[c][p]) * (dt / 6.0);
            }
        }
        if step % every == 0 || step == steps {
            let f = SpectralField::from_spectral(&grid, 1, u.clone())?;
            let tail = outer_shell_fraction(&f, dealias);
            if !tail.is_finite() || tail > 0.05 {
                return Err(LabError::BlowUp { t: step as f64 * dt, fraction: tail });
            }
            traj.times.push(step as f64 * dt);
            traj.fields.push(f);
        }
    }
    Ok(traj)
}

/// Energy fraction in the outer 20% of the retained band.
fn outer_shell_fraction(f: &SpectralField, fraction: f64) -> f64 {
    let inner = f.tail_fraction(0.8 * fraction);
    let outer = f.tail_fraction(fraction);
    inner - outer
}

/// max over dyadic shells 2^{j-1} ≤ |k| < 2^j of 2^{js}‖Δ_j f‖_{L³}.
pub fn besov_3_inf(f: &SpectralField, s: f64) -> f64 {
    let grid = f.grid();
    let kmax = grid.n() as f64 * (grid.dim() as f64).sqrt();
    let mut best: f64 = 0.0;
    let mut j = 0;
    loop {
        let lo = if j == 0 { 0.0 } else { 2f64.powi(j - 1) };
        let hi = 2f64.powi(j);
        if lo > kmax {
            break;
        }
        let shell = f
            .map_spectral(f.rank(), |k, idx, spec| {
                let m = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                let inside = if j == 0 { m < 1.0 } else { m >= lo && m < hi };
                spec.iter().map(|c| if inside { c[idx] } else { Complex64::zero() }).collect()
            })
            .expect("same shape");
        best = best.max(hi.powf(s) * shell.lp_norm(3.0));
        j += 1;
    }
    best
}

/// Taylor–Green vortex (sin x₁ cos x₂, −cos x₁ sin x₂) scaled by `amp` and
/// shifted by `shift`.
pub fn taylor_green(grid: &Grid, amp: f64, shift: [f64; 2]) -> SpectralField {
    SpectralField::from_fn(grid, 1, |x, c| {
        let a = x[0] + shift[0];
        let b = x[1] + shift[1];
        if c == 0 {
            amp * a.sin() * b.cos()
        } else {
            -amp * a.cos() * b.sin()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn hamiltonian_of_shear() {
        let g = Grid::new(3, 16).unwrap();
        let m = AlphaModel::new(1.0).unwrap();
        let u = SpectralField::from_fn(&g, 1, |x, c| if c == 0 { x[1].sin() } else { 0.0 });
        let h = hamiltonian(&u, &m);
        assert!((h - 8.0 * PI.powi(3)).abs() < 1e-10);
        assert!((hamiltonian(&u.scale(2.0), &m) - 4.0 * h).abs() < 1e-9);
        assert_eq!(hamiltonian(&SpectralField::zeros(&g, 1), &m), 0.0);
        assert!((hamiltonian_quadrature(&u, &m) - h).abs() / h < 1e-10);
    }

    #[test]
    fn taylor_green_is_stationary() {
        let g = Grid::new(2, 32).unwrap();
        let m = AlphaModel::new(0.3).unwrap();
        let u = taylor_green(&g, 1.0, [0.0, 0.0]);
        let dudt = time_derivative(&u, &m).unwrap();
        assert!(dudt.max_abs() < 1e-13);
        let res = relaxed_residual(&u, None, None, &SpectralField::zeros(&g, 1), &m).unwrap();
        assert!(res.max_abs() < 1e-12);
    }

    #[test]
    fn weak_forms_agree() {
        let g = Grid::new(2, 32).unwrap();
        let m = AlphaModel::new(0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = spectral::leray(&SpectralField::random_band_limited(&g, 1, 5, &mut rng)).unwrap();
        let phi = spectral::leray(&SpectralField::random_band_limited(&g, 1, 5, &mut rng)).unwrap();
        let dphi = spectral::leray(&SpectralField::random_band_limited(&g, 1, 5, &mut rng)).unwrap();
        let a = weak_pairing(&u, &phi, &dphi, &m).unwrap();
        let b = weak_pairing_divergence_form(&u, &phi, &dphi, &m).unwrap();
        assert!((a - b).abs() / a.abs().max(1.0) < 1e-10, "{a} {b}");
    }

    #[test]
    fn residual_rejects_compressible_field() {
        let g = Grid::new(2, 16).unwrap();
        let m = AlphaModel::new(1.0).unwrap();
        let u = SpectralField::from_fn(&g, 1, |x, c| if c == 0 { x[0].sin() } else { 0.0 });
        assert!(matches!(
            relaxed_residual(&u, None, None, &SpectralField::zeros(&g, 1), &m),
            Err(LabError::NotDivergenceFree(_))
        ));
    }

    #[test]
    fn evolve_keeps_mean_and_divergence() {
        let g = Grid::new(2, 32).unwrap();
        let m = AlphaModel::new(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut u0 = spectral::leray(&SpectralField::random_band_limited(&g, 1, 4, &mut rng)).unwrap();
        u0 = SpectralField::lincomb(&[(1.0, &u0), (0.3, &SpectralField::from_fn(&g, 1, |_, c| c as f64 + 1.0))]).unwrap();
        let traj = evolve_smooth(&u0, &m, 0.01, 0.2, 2.0 / 3.0, 5).unwrap();
        let m0 = traj.fields[0].mean();
        for f in &traj.fields {
            assert!(spectral::div(f).unwrap().max_abs() < 1e-12);
            let mm = f.mean();
            assert!((mm[0] - m0[0]).abs() < 1e-14 && (mm[1] - m0[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn besov_of_single_mode() {
        let g = Grid::new(2, 32).unwrap();
        let f = SpectralField::scalar_fn(&g, |x| (5.0 * x[0]).sin());
        let b = besov_3_inf(&f, 1.0 / 3.0);
        let expected = 8f64.powf(1.0 / 3.0) * f.lp_norm(3.0);
        assert!((b - expected).abs() / expected < 1e-12);
    }
}
