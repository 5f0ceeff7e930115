//! Hamiltonian conservation for smooth solutions, and the mollified
//! energy flux that vanishes with the mollification scale.

use crate::alpha::{self, AlphaModel};
use crate::error::{LabError, Result};
use crate::spectral::{self, SpectralField};

use super::mollify::Mollifier;
use super::smooth::bump;

const DEALIAS: f64 = 2.0 / 3.0;
const SAMPLES: usize = 50;

#[derive(Clone, Debug)]
pub struct ConservationReport {
    pub dt: f64,
    pub times: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    /// max |H(t) − H(0)| / H(0).
    pub drift: f64,
}

/// Evolves u0 with RK4 and records H_α at about fifty sample times.
pub fn conservation_experiment(
    u0: &SpectralField,
    model: &AlphaModel,
    dt: f64,
    t_final: f64,
) -> Result<ConservationReport> {
    if u0.dim() != 2 {
        return Err(LabError::BadDimension(u0.dim()));
    }
    let steps = (t_final / dt).round() as usize;
    let traj = alpha::evolve_smooth(u0, model, dt, t_final, DEALIAS, (steps / SAMPLES).max(1))?;
    let hamiltonian: Vec<f64> = traj.fields.iter().map(|u| alpha::hamiltonian(u, model)).collect();
    let h0 = hamiltonian[0];
    let drift = hamiltonian.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / h0;
    Ok(ConservationReport { dt, times: traj.times, hamiltonian, drift })
}

/// Drift at dt and dt/2 and their ratio, about 16 for a fourth-order scheme.
pub fn drift_ratio(u0: &SpectralField, model: &AlphaModel, dt: f64, t_final: f64) -> Result<(f64, f64, f64)> {
    let a = conservation_experiment(u0, model, dt, t_final)?.drift;
    let b = conservation_experiment(u0, model, dt / 2.0, t_final)?.drift;
    Ok((a, b, a / b))
}

/// Σ_x f g dx.
fn integrate(f: &SpectralField, g: &SpectralField) -> f64 {
    f.phys(0).iter().zip(g.phys(0)).map(|(a, b)| a * b).sum::<f64>() * f.grid().cell_volume()
}

/// The energy flux through the mollification scale,
/// ∫ C(u_j, u_i) ∂_j u_i^ε + α²[C(u_j, ∂_k u_i) ∂_j∂_k u_i^ε
///   + C(∂_k u_j, ∂_k u_i) ∂_j u_i^ε − C(∂_k u_j, ∂_i u_j) ∂_k u_i^ε]
/// with C(f, g) = (fg)^ε − f^ε g^ε. The terms built only from u^ε cancel
/// for divergence-free u, so this is the whole of d/dt H_α(u^ε)/2.
pub fn commutator_flux(u: &SpectralField, model: &AlphaModel, eps: f64) -> Result<f64> {
    let grid = u.grid();
    let dim = grid.dim();
    let m = Mollifier::new(grid, eps)?;
    let c = |f: &SpectralField, g: &SpectralField| -> Result<SpectralField> {
        let fg = f.mul_scalar(g)?;
        Ok(m.space(&fg)?.sub(&m.space(f)?.mul_scalar(&m.space(g)?)?)?)
    };
    let comp: Vec<SpectralField> = (0..dim).map(|i| u.component(i)).collect();
    // d[i][k] = ∂_k u_i
    let d: Vec<Vec<SpectralField>> =
        comp.iter().map(|ui| (0..dim).map(|k| spectral::partial(ui, k)).collect()).collect();
    let de: Vec<Vec<SpectralField>> =
        d.iter().map(|row| row.iter().map(|f| m.space(f)).collect::<Result<_>>()).collect::<Result<_>>()?;
    let a2 = model.alpha2();
    let mut flux = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            flux += integrate(&c(&comp[j], &comp[i])?, &de[i][j]);
            for k in 0..dim {
                let djk = spectral::partial(&de[i][k], j);
                flux += a2 * integrate(&c(&comp[j], &d[i][k])?, &djk);
                flux += a2 * integrate(&c(&d[j][k], &d[i][k])?, &de[i][j]);
                flux -= a2 * integrate(&c(&d[j][k], &d[j][i])?, &de[i][k]);
            }
        }
    }
    Ok(flux)
}

/// Discrete mollification by the normalized bump sampled at grid offsets,
/// so that every identity below is exact up to rounding.
#[derive(Clone, Debug)]
pub struct GridKernel {
    offsets: Vec<([i64; 2], f64)>,
}

impl GridKernel {
    pub fn new(grid: &crate::spectral::Grid, eps: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(LabError::BadDimension(grid.dim()));
        }
        let h = grid.spacing();
        let reach = (eps / h).ceil() as i64;
        let mut offsets = Vec::new();
        for a in -reach..=reach {
            for b in -reach..=reach {
                let s = ((a * a + b * b) as f64).sqrt() * h / eps;
                let w = bump(s);
                if w > 0.0 {
                    offsets.push(([a, b], w));
                }
            }
        }
        if offsets.len() < 2 {
            return Err(LabError::Unresolved(format!("mollification scale {eps} below grid spacing {h}")));
        }
        let total: f64 = offsets.iter().map(|o| o.1).sum();
        offsets.iter_mut().for_each(|o| o.1 /= total);
        Ok(Self { offsets })
    }

    fn shifted(n: usize, idx: usize, off: [i64; 2]) -> usize {
        let (i, j) = ((idx / n) as i64, (idx % n) as i64);
        let n = n as i64;
        ((i - off[0]).rem_euclid(n) * n + (j - off[1]).rem_euclid(n)) as usize
    }

    pub fn apply(&self, f: &[f64], n: usize) -> Vec<f64> {
        (0..f.len())
            .map(|x| self.offsets.iter().map(|&(o, w)| w * f[Self::shifted(n, x, o)]).sum())
            .collect()
    }

    /// r_ε(f, g)(x) = Σ_y φ(y)(f(x − y) − f(x))(g(x − y) − g(x)).
    pub fn remainder(&self, f: &[f64], g: &[f64], n: usize) -> Vec<f64> {
        (0..f.len())
            .map(|x| {
                self.offsets
                    .iter()
                    .map(|&(o, w)| {
                        let y = Self::shifted(n, x, o);
                        w * (f[y] - f[x]) * (g[y] - g[x])
                    })
                    .sum()
            })
            .collect()
    }
}

/// max |(fg)^ε − f^ε g^ε + (f − f^ε)(g − g^ε) − r_ε(f, g)| relative to
/// max |fg|, for scalar fields on a 2-D grid.
pub fn double_commutator_defect(f: &SpectralField, g: &SpectralField, eps: f64) -> Result<f64> {
    f.same_shape(g)?;
    let n = f.grid().n();
    let kernel = GridKernel::new(f.grid(), eps)?;
    let (fp, gp) = (f.phys(0), g.phys(0));
    let fg: Vec<f64> = fp.iter().zip(gp).map(|(a, b)| a * b).collect();
    let fge = kernel.apply(&fg, n);
    let fe = kernel.apply(fp, n);
    let ge = kernel.apply(gp, n);
    let r = kernel.remainder(fp, gp, n);
    let scale = fg.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let worst = (0..fg.len())
        .map(|x| (fge[x] - fe[x] * ge[x] + (fp[x] - fe[x]) * (gp[x] - ge[x]) - r[x]).abs())
        .fold(0.0, f64::max);
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::taylor_green;
    use crate::spectral::Grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_flow(n: usize, seed: u64) -> SpectralField {
        let g = Grid::new(2, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = SpectralField::random_band_limited(&g, 1, 4, &mut rng);
        let u = spectral::leray(&u).unwrap();
        u.scale(1.0 / u.max_abs())
    }

    #[test]
    fn taylor_green_keeps_its_hamiltonian() {
        let g = Grid::new(2, 32).unwrap();
        let m = AlphaModel::new(0.1).unwrap();
        let rep = conservation_experiment(&taylor_green(&g, 1.0, [0.0, 0.0]), &m, 1e-2, 0.5).unwrap();
        assert!(rep.drift < 1e-12, "{}", rep.drift);
        assert_eq!(rep.times.len(), rep.hamiltonian.len());
    }

    #[test]
    fn flux_vanishes_with_the_scale() {
        let u = random_flow(64, 3);
        let m = AlphaModel::new(0.1).unwrap();
        let a = commutator_flux(&u, &m, 0.4).unwrap().abs();
        let b = commutator_flux(&u, &m, 0.2).unwrap().abs();
        assert!(a / b >= 4.0, "{a} {b}");
    }

    #[test]
    fn double_commutator_identity() {
        let u = random_flow(32, 5);
        let d = double_commutator_defect(&u.component(0), &u.component(1), 0.7).unwrap();
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn rejects_three_dimensions() {
        let g = Grid::new(3, 8).unwrap();
        let m = AlphaModel::new(0.1).unwrap();
        assert!(conservation_experiment(&SpectralField::zeros(&g, 1), &m, 0.1, 0.1).is_err());
    }
}
