//! The initial glued pair: two steady solutions joined in time by a smooth
//! cutoff, with the stress that makes the join solve the relaxed system.

use crate::alpha::{self, AlphaModel};
use crate::error::{LabError, Result};
use crate::inverse_div::{fourier_inverse_div, inverse_div_of_div};
use crate::spectral::{self, Grid, SpectralField};
use crate::tensor::StressField;

use super::smooth::step;

/// a ⊗ (b − α²Δb) − α² ∇aᵀ∇b, bilinear in (a, b); M(u, u) is the momentum
/// flux of u.
pub fn flux_pair(a: &SpectralField, b: &SpectralField, model: &AlphaModel) -> Result<SpectralField> {
    let ga = spectral::grad(a)?;
    let gb = spectral::grad(b)?;
    let gg = spectral::matmul(&spectral::transpose(&ga)?, &gb)?;
    let ab = spectral::outer(a, &alpha::filtered_momentum(b, model))?;
    SpectralField::lincomb(&[(1.0, &ab), (-model.alpha2(), &gg)])
}

/// η(t): 1 on [0, 2T/5], 0 on [3T/5, T], C^∞ in between.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlueCutoff {
    pub t_final: f64,
}

impl GlueCutoff {
    /// (η, η', η'').
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let w = self.t_final / 5.0;
        let (s, s1, s2) = step((t - 2.0 * w) / w);
        (1.0 - s, -s1 / w, -s2 / (w * w))
    }

    pub fn support(&self) -> (f64, f64) {
        (0.4 * self.t_final, 0.6 * self.t_final)
    }
}

/// u(t) = η u¹ + (1 − η) u² with stress
/// R(t) = η' ℛ(v¹ − v²) − η(1 − η) ℛ Div M(δu, δu), δu = u¹ − u².
#[derive(Clone, Debug)]
pub struct GluedState {
    pub model: AlphaModel,
    pub cutoff: GlueCutoff,
    pub u1: SpectralField,
    pub u2: SpectralField,
    pub du: SpectralField,
    /// ℛ(v¹ − v²), the coefficient of η'.
    pub a: StressField,
    /// −ℛ Div M(δu, δu), the coefficient of η(1 − η).
    pub b: StressField,
}

fn check_steady(u: &SpectralField, model: &AlphaModel) -> Result<()> {
    alpha::check_divergence_free(u, 1e-10)?;
    let mean = u.mean().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mean > 1e-12 * (1.0 + u.max_abs()) {
        return Err(LabError::NotMeanZero(mean));
    }
    let dt = alpha::time_derivative(u, model)?;
    let scale = (1.0 + u.max_abs()).powi(2);
    if dt.max_abs() > 1e-8 * scale {
        return Err(LabError::InvalidParameter(format!(
            "glue inputs must be steady solutions, |∂_t u| = {:.3e}",
            dt.max_abs()
        )));
    }
    Ok(())
}

pub fn glue_initial(u1: &SpectralField, u2: &SpectralField, t_final: f64, model: &AlphaModel) -> Result<GluedState> {
    u1.same_shape(u2)?;
    if u1.rank() != 1 {
        return Err(LabError::RankMismatch { expected: 1, found: u1.rank() });
    }
    if !(t_final > 0.0) {
        return Err(LabError::InvalidParameter(format!("glue horizon must be positive, got {t_final}")));
    }
    check_steady(u1, model)?;
    check_steady(u2, model)?;
    let du = u1.sub(u2)?;
    let a = fourier_inverse_div(&alpha::filtered_momentum(&du, model))?;
    let b = inverse_div_of_div(&flux_pair(&du, &du, model)?)?.scale(-1.0);
    Ok(GluedState {
        model: *model,
        cutoff: GlueCutoff { t_final },
        u1: u1.clone(),
        u2: u2.clone(),
        du,
        a,
        b,
    })
}

impl GluedState {
    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn support(&self) -> (f64, f64) {
        self.cutoff.support()
    }

    pub fn velocity(&self, t: f64) -> Result<SpectralField> {
        let (eta, _, _) = self.cutoff.eval(t);
        // outside the transition the endpoints are returned as given
        if eta == 1.0 {
            Ok(self.u1.clone())
        } else if eta == 0.0 {
            Ok(self.u2.clone())
        } else {
            SpectralField::lincomb(&[(1.0, &self.u2), (eta, &self.du)])
        }
    }

    pub fn velocity_dt(&self, t: f64) -> SpectralField {
        self.du.scale(self.cutoff.eval(t).1)
    }

    pub fn stress(&self, t: f64) -> Result<StressField> {
        let (eta, d1, _) = self.cutoff.eval(t);
        StressField::lincomb(&[(d1, &self.a), (eta * (1.0 - eta), &self.b)])
    }

    pub fn hamiltonian(&self, t: f64) -> Result<f64> {
        Ok(alpha::hamiltonian(&self.velocity(t)?, &self.model))
    }

    /// Relative residual of the relaxed system at time t.
    pub fn residual(&self, t: f64) -> Result<f64> {
        let u = self.velocity(t)?;
        let du = self.velocity_dt(t);
        let res = alpha::relaxed_residual(&u, None, Some(&self.stress(t)?), &du, &self.model)?;
        alpha::relative_residual(&res, &u, &du, &self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::taylor_green;

    fn setup(n: usize) -> (Grid, AlphaModel) {
        (Grid::new(2, n).unwrap(), AlphaModel::new(0.1).unwrap())
    }

    #[test]
    fn equal_inputs_give_zero_stress() {
        let (g, m) = setup(32);
        let u = taylor_green(&g, 1.0, [0.0, 0.0]);
        let s = glue_initial(&u, &u, 1.0, &m).unwrap();
        assert_eq!(s.a.max_abs(), 0.0);
        assert_eq!(s.b.max_abs(), 0.0);
        for t in [0.1, 0.45, 0.5, 0.9] {
            assert!(spectral::rel_diff(&s.velocity(t).unwrap(), &u) < 1e-15);
        }
    }

    #[test]
    fn glue_is_exact_outside_window_and_solves_relaxed_system() {
        let (g, m) = setup(32);
        let u1 = taylor_green(&g, 1.0, [0.0, 0.0]);
        let u2 = taylor_green(&g, 2.0, [0.7, 0.3]);
        let s = glue_initial(&u1, &u2, 1.0, &m).unwrap();
        for (t, u) in [(0.0, &u1), (0.2, &u1), (0.4, &u1), (0.6, &u2), (0.9, &u2), (1.0, &u2)] {
            assert_eq!(s.velocity(t).unwrap().phys_all(), u.phys_all());
        }
        assert_eq!(s.stress(0.39).unwrap().max_abs(), 0.0);
        assert_eq!(s.stress(0.61).unwrap().max_abs(), 0.0);
        assert!(s.stress(0.5).unwrap().max_abs() > 0.1);
        for t in [0.41, 0.47, 0.5, 0.55, 0.59] {
            assert!(s.residual(t).unwrap() < 1e-10, "t={t}");
        }
        let h1 = alpha::hamiltonian(&u1, &m);
        let h2 = alpha::hamiltonian(&u2, &m);
        assert_eq!(s.hamiltonian(0.1).unwrap(), h1);
        assert_eq!(s.hamiltonian(0.9).unwrap(), h2);
    }

    #[test]
    fn stress_is_symmetric_traceless() {
        let (g, m) = setup(32);
        let u1 = taylor_green(&g, 1.0, [0.0, 0.0]);
        let u2 = taylor_green(&g, 2.0, [0.7, 0.3]);
        let s = glue_initial(&u1, &u2, 1.0, &m).unwrap();
        assert!(s.stress(0.5).unwrap().trace_defect() < 1e-12);
    }

    #[test]
    fn rejects_unsteady_or_mean_carrying_inputs() {
        let (g, m) = setup(16);
        let u = taylor_green(&g, 1.0, [0.0, 0.0]);
        let drift = SpectralField::from_fn(&g, 1, |x, c| if c == 0 { 1.0 + x[1].sin() } else { 0.0 });
        assert!(matches!(glue_initial(&u, &drift, 1.0, &m), Err(LabError::NotMeanZero(_))));
        let psi = SpectralField::scalar_fn(&g, |x| x[0].sin() * (2.0 * x[1]).sin() + (x[0] + x[1]).cos());
        let v = spectral::curl(&psi).unwrap();
        assert!(glue_initial(&u, &v, 1.0, &m).is_err());
    }
}
