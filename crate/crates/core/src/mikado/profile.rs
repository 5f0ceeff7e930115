//! Radial bump potentials written as polynomials in t = 1 − |y|², so every
//! derivative, the pressure antiderivative and the normalization integral
//! are exact polynomial manipulations.

use crate::error::{LabError, Result};

/// Dense polynomial, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        Poly(c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    /// Antiderivative vanishing at 0.
    pub fn integral(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(i, v)| v / (i + 1) as f64));
        Poly(c)
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + o.0.get(i).unwrap_or(&0.0)).collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// p(1 − y²) as a polynomial in y.
    pub fn in_y(&self) -> Poly {
        let base = Poly(vec![1.0, 0.0, -1.0]);
        self.0.iter().rev().fold(Poly(vec![0.0]), |acc, c| acc.mul(&base).add(&Poly(vec![*c])))
    }

    /// ∫₀¹ p.
    pub fn unit_integral(&self) -> f64 {
        self.integral().eval(1.0)
    }
}

/// Laplacian in ℝᵏ of g(1 − |y|²), again as a polynomial in t.
pub fn radial_laplacian(g: &Poly, k: usize) -> Poly {
    let g1 = g.deriv();
    let g2 = g1.deriv();
    g2.mul(&Poly(vec![4.0, -4.0])).add(&g1.scale(-2.0 * k as f64))
}

/// Unit-scale profile: H = t^M with support |y| < 1, its iterated
/// Laplacians, and the exact Dirichlet integral of h = Δᵈ H.
#[derive(Clone, Debug)]
pub struct PipeProfile {
    pub d: usize,
    /// Dimension of the cross-section (2 for pipes in ℝ³, 1 for lines in ℝ²).
    pub k: usize,
    /// levels[j] = Δʲ H for j = 0..=d+1.
    levels: Vec<Poly>,
    /// ∫_{|y|<1} |∇h|² dy.
    pub dirichlet: f64,
}

impl PipeProfile {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d == 0 {
            return Err(LabError::InvalidParameter("profile depth d must be at least 1".into()));
        }
        if k != 1 && k != 2 {
            return Err(LabError::BadDimension(k + 1));
        }
        let mut levels = vec![Poly::monomial(4 * d + 10)];
        for _ in 0..=d {
            let next = radial_laplacian(levels.last().unwrap(), k);
            levels.push(next);
        }
        let mut p = Self { d, k, levels, dirichlet: 0.0 };
        p.dirichlet = p.ball_integral(&p.grad_sq(d));
        Ok(p)
    }

    pub fn level(&self, j: usize) -> &Poly {
        &self.levels[j]
    }

    /// H.
    pub fn potential(&self) -> &Poly {
        &self.levels[0]
    }

    /// h = Δᵈ H.
    pub fn h(&self) -> &Poly {
        &self.levels[self.d]
    }

    /// Δh.
    pub fn lap_h(&self) -> &Poly {
        &self.levels[self.d + 1]
    }

    /// |∇_y g|² = 4(1 − t) g'(t)² for g = levels[j].
    pub fn grad_sq(&self, j: usize) -> Poly {
        let g1 = self.levels[j].deriv();
        g1.mul(&g1).mul(&Poly(vec![4.0, -4.0]))
    }

    /// ∫ over the unit ball of ℝᵏ of a function of t.
    pub fn ball_integral(&self, f: &Poly) -> f64 {
        if self.k == 2 {
            std::f64::consts::PI * f.unit_integral()
        } else {
            // ∫₋₁¹ f(1 − y²) dy = ∫₀¹ f(t)(1 − t)^{−1/2} dt, and the moments
            // B(m + 1, 1/2) avoid the cancellation of expanding in y
            let mut moment = 2.0;
            let mut sum = 0.0;
            for (m, c) in f.0.iter().enumerate() {
                if m > 0 {
                    moment *= 2.0 * m as f64 / (2.0 * m as f64 + 1.0);
                }
                sum += c * moment;
            }
            sum
        }
    }

    /// Unit-scale pressure shape, P(t) = h²/2 − a_α ∫₁ᵗ h (Δh)' dt, split as
    /// (h²/2, ∫₁ᵗ h (Δh)' dt) so that physical scalings can be applied.
    pub fn pressure_parts(&self) -> (Poly, Poly) {
        let h = self.h();
        let quad = h.mul(h).scale(0.5);
        let integrand = h.mul(&self.lap_h().deriv());
        let anti = integrand.integral();
        let shift = anti.eval(1.0);
        let mut c = anti.0.clone();
        c[0] -= shift;
        (quad, Poly(c))
    }

    /// ∫ h over the unit ball (zero up to rounding).
    pub fn mass(&self) -> f64 {
        self.ball_integral(self.h())
    }
}

/// Gauss–Legendre nodes and weights on (−1, 1).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

#[test]
fn polynomial_basics() {
    let p = Poly(vec![1.0, 2.0, 3.0]);
    assert_eq!(p.eval(2.0), 17.0);
    assert_eq!(p.deriv(), Poly(vec![2.0, 6.0]));
    assert!((p.unit_integral() - 3.0).abs() < 1e-15);
    let q = Poly(vec![0.0, 1.0]).in_y();
    assert!((0..5).all(|i| q.0.get(i).copied().unwrap_or(0.0) == [1.0, 0.0, -1.0, 0.0, 0.0][i]));
}

#[test]
fn zero_mass_and_depth_rejection() {
    for k in [1, 2] {
        for d in 1..4 {
            let p = PipeProfile::new(d, k).unwrap();
            let scale = p.ball_integral(&p.h().mul(p.h())).sqrt();
            assert!(p.mass().abs() / scale < 1e-10, "k {k} d {d}");
        }
    }
    assert!(PipeProfile::new(0, 2).is_err());
}

#[test]
fn radial_laplacian_matches_cartesian_differences() {
    let p = PipeProfile::new(2, 2).unwrap();
    let g = |y1: f64, y2: f64| {
        let t = 1.0 - y1 * y1 - y2 * y2;
        if t > 0.0 {
            p.level(1).eval(t)
        } else {
            0.0
        }
    };
    let h = 1e-3;
    for &(y1, y2) in &[(0.1, 0.2), (0.3, -0.4), (-0.55, 0.05)] {
        let fd = (g(y1 + h, y2) + g(y1 - h, y2) + g(y1, y2 + h) + g(y1, y2 - h) - 4.0 * g(y1, y2)) / (h * h);
        let exact = p.level(2).eval(1.0 - y1 * y1 - y2 * y2);
        assert!((fd - exact).abs() / exact.abs().max(1.0) < 1e-4, "{fd} {exact}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressure_matches_quadrature() {
        let p = PipeProfile::new(2, 2).unwrap();
        let (_, integral) = p.pressure_parts();
        let nodes = gauss_legendre(40);
        // ∫₀^R h(r) ∂_r(Δh)(r) dr in the radial variable
        let radius = 0.7;
        let mut q = 0.0;
        for (x, w) in &nodes {
            let r = 0.5 * radius * (x + 1.0);
            let t = 1.0 - r * r;
            let dl = p.lap_h().deriv().eval(t) * (-2.0 * r);
            q += 0.5 * radius * w * p.h().eval(t) * dl;
        }
        let exact = integral.eval(1.0 - radius * radius);
        assert!((q - exact).abs() / exact.abs() < 1e-10, "{q} {exact}");
    }
}
