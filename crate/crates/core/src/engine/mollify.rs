//! Space-time mollification of the glued state and the commutator stress.
//!
//! The glued state is affine in η(t), so averaging in time only needs the
//! scalar averages of η, η², η(1 − η) and their derivatives. Everything
//! below is exact on the grid up to rounding.

use crate::alpha::{self, AlphaModel};
use crate::error::{LabError, Result};
use crate::inverse_div::inverse_div_of_div;
use crate::spectral::{self, Grid, SpectralField};
use crate::tensor::StressField;

use super::glue::GluedState;
use super::smooth::{kernel_rule, kernel_transform};

const TIME_NODES: usize = 400;

/// φ_ℓ in space (a Fourier multiplier) and in time (a fixed quadrature).
#[derive(Clone, Debug)]
pub struct Mollifier {
    ell: f64,
    rule: Vec<(f64, f64)>,
    multiplier: Vec<f64>,
}

impl Mollifier {
    /// Fails with `Unresolved` when ℓ is below the grid spacing.
    pub fn new(grid: &Grid, ell: f64) -> Result<Self> {
        if !(ell > 0.0) {
            return Err(LabError::InvalidParameter(format!("mollification scale must be positive, got {ell}")));
        }
        if ell < grid.spacing() {
            return Err(LabError::Unresolved(format!(
                "mollification scale {ell} below grid spacing {}",
                grid.spacing()
            )));
        }
        let rule = kernel_rule(TIME_NODES);
        let n = grid.n();
        let table: Vec<f64> = (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                kernel_transform(&rule, ell * k)
            })
            .collect();
        let multiplier = (0..grid.len())
            .map(|idx| {
                let k = grid.wavevector(idx);
                (0..grid.dim()).map(|a| table[k[a].rem_euclid(n as i64) as usize]).product()
            })
            .collect();
        Ok(Self { ell, rule, multiplier })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn space(&self, f: &SpectralField) -> Result<SpectralField> {
        f.map_spectral(f.rank(), |_, idx, spec| spec.iter().map(|c| c[idx] * self.multiplier[idx]).collect())
    }

    pub fn space_stress(&self, r: &StressField) -> Result<StressField> {
        StressField::from_entries(r.entries().iter().map(|e| self.space(e)).collect::<Result<_>>()?)
    }

    /// ∫ g(t − ℓs) φ(s) ds.
    pub fn time(&self, t: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.rule.iter().map(|(s, w)| w * g(t - self.ell * s)).sum()
    }
}

/// a ⊗ b − α²∇aᵀ∇b and a ⊗ Δb, the two pieces of the flux with
/// M(a, b) = P(a, b) − α²Q(a, b).
fn flux_parts(a: &SpectralField, b: &SpectralField, model: &AlphaModel) -> Result<(SpectralField, SpectralField)> {
    let gg = spectral::matmul(&spectral::transpose(&spectral::grad(a)?)?, &spectral::grad(b)?)?;
    let p = SpectralField::lincomb(&[(1.0, &spectral::outer(a, b)?), (-model.alpha2(), &gg)])?;
    let q = spectral::outer(a, &spectral::laplacian(b))?;
    Ok((p, q))
}

/// A quadratic form in η: c0 + η c1 + η² c2.
#[derive(Clone, Debug)]
struct Quadratic {
    c: [SpectralField; 3],
}

impl Quadratic {
    fn at(&self, e1: f64, e2: f64) -> Result<SpectralField> {
        SpectralField::lincomb(&[(1.0, &self.c[0]), (e1, &self.c[1]), (e2, &self.c[2])])
    }
}

/// Scalar time averages at one instant.
#[derive(Clone, Copy, Debug)]
pub struct TimeWeights {
    pub eta: f64,
    pub eta_dt: f64,
    pub eta_dtt: f64,
    pub eta_sq: f64,
    /// average of η(1 − η)
    pub mix: f64,
    /// average of η'(1 − 2η), the derivative of `mix`
    pub mix_dt: f64,
}

/// The mollified glued state u_ℓ, R_ℓ and the commutator stress.
#[derive(Clone, Debug)]
pub struct MollifiedState {
    pub glued: GluedState,
    pub mollifier: Mollifier,
    u2: SpectralField,
    du: SpectralField,
    a: StressField,
    b: StressField,
    // mollified flux pieces of u as quadratics in η
    p: Quadratic,
    q: Quadratic,
}

pub fn mollify(glued: &GluedState, ell: f64) -> Result<MollifiedState> {
    let moll = Mollifier::new(glued.grid(), ell)?;
    let m = &glued.model;
    let (p22, q22) = flux_parts(&glued.u2, &glued.u2, m)?;
    let (p2d, q2d) = flux_parts(&glued.u2, &glued.du, m)?;
    let (pd2, qd2) = flux_parts(&glued.du, &glued.u2, m)?;
    let (pdd, qdd) = flux_parts(&glued.du, &glued.du, m)?;
    let p = Quadratic { c: [moll.space(&p22)?, moll.space(&p2d.add(&pd2)?)?, moll.space(&pdd)?] };
    let q = Quadratic { c: [moll.space(&q22)?, moll.space(&q2d.add(&qd2)?)?, moll.space(&qdd)?] };
    Ok(MollifiedState {
        u2: moll.space(&glued.u2)?,
        du: moll.space(&glued.du)?,
        a: moll.space_stress(&glued.a)?,
        b: moll.space_stress(&glued.b)?,
        glued: glued.clone(),
        mollifier: moll,
        p,
        q,
    })
}

impl MollifiedState {
    pub fn grid(&self) -> &Grid {
        self.glued.grid()
    }

    pub fn model(&self) -> &AlphaModel {
        &self.glued.model
    }

    pub fn ell(&self) -> f64 {
        self.mollifier.ell()
    }

    pub fn weights(&self, t: f64) -> TimeWeights {
        let c = self.glued.cutoff;
        let m = &self.mollifier;
        TimeWeights {
            eta: m.time(t, |s| c.eval(s).0),
            eta_dt: m.time(t, |s| c.eval(s).1),
            eta_dtt: m.time(t, |s| c.eval(s).2),
            eta_sq: m.time(t, |s| c.eval(s).0.powi(2)),
            mix: m.time(t, |s| {
                let e = c.eval(s).0;
                e * (1.0 - e)
            }),
            mix_dt: m.time(t, |s| {
                let (e, d, _) = c.eval(s);
                d * (1.0 - 2.0 * e)
            }),
        }
    }

    pub fn velocity(&self, t: f64) -> Result<SpectralField> {
        SpectralField::lincomb(&[(1.0, &self.u2), (self.weights(t).eta, &self.du)])
    }

    pub fn velocity_dt(&self, t: f64) -> SpectralField {
        self.du.scale(self.weights(t).eta_dt)
    }

    /// R_ℓ.
    pub fn stress(&self, t: f64) -> Result<StressField> {
        let w = self.weights(t);
        StressField::lincomb(&[(w.eta_dt, &self.a), (w.mix, &self.b)])
    }

    /// ∂_t R_ℓ.
    pub fn stress_dt(&self, t: f64) -> Result<StressField> {
        let w = self.weights(t);
        StressField::lincomb(&[(w.eta_dtt, &self.a), (w.mix_dt, &self.b)])
    }

    /// The stress absorbing M(u_ℓ) − (M(u))_ℓ: the symmetric traceless part
    /// of the P difference plus ℛ Div of the Q difference. The traces go to
    /// the pressure.
    pub fn commutator(&self, t: f64) -> Result<StressField> {
        let w = self.weights(t);
        let u = self.velocity(t)?;
        let (pl, ql) = flux_parts(&u, &u, self.model())?;
        let dp = pl.sub(&self.p.at(w.eta, w.eta_sq)?)?;
        let dq = ql.sub(&self.q.at(w.eta, w.eta_sq)?)?;
        let (sym, _) = StressField::from_tensor(&dp)?.split_trace();
        let rq = inverse_div_of_div(&dq)?;
        StressField::lincomb(&[(1.0, &sym), (-self.model().alpha2(), &rq)])
    }

    /// Relative residual of (u_ℓ, R_ℓ + R_comm).
    pub fn residual(&self, t: f64) -> Result<f64> {
        let u = self.velocity(t)?;
        let du = self.velocity_dt(t);
        let r = self.stress(t)?.add(&self.commutator(t)?)?;
        let res = alpha::relaxed_residual(&u, None, Some(&r), &du, self.model())?;
        alpha::relative_residual(&res, &u, &du, self.model())
    }
}
