//! Spectral differential operators and pointwise tensor algebra.

use num::complex::Complex64;
use num::Zero;

use super::field::{component_count, SpectralField};
use crate::error::{LabError, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Builds a field of rank `rank` whose coefficient at each wavevector
/// is produced by `f(k, inputs, outputs)`.
fn build(
    src: &SpectralField,
    rank: usize,
    f: impl Fn(&[f64; 3], &[Complex64], &mut [Complex64]),
) -> SpectralField {
    let grid = src.grid();
    let nin = src.ncomp();
    let nout = component_count(grid.dim(), rank);
    let mut out = vec![vec![Complex64::zero(); grid.len()]; nout];
    let mut inp = vec![Complex64::zero(); nin];
    let mut res = vec![Complex64::zero(); nout];
    for idx in 0..grid.len() {
        let k = grid.deriv_wavevector(idx);
        for c in 0..nin {
            inp[c] = src.spec(c)[idx];
        }
        f(&k, &inp, &mut res);
        for c in 0..nout {
            out[c][idx] = res[c];
        }
    }
    SpectralField::from_spectral(grid, rank, out).expect("consistent shape")
}

fn require_rank(f: &SpectralField, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&f.rank()) {
        Ok(())
    } else {
        Err(LabError::RankMismatch { expected: allowed[0], found: f.rank() })
    }
}

fn k2(k: &[f64; 3]) -> f64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

/// ∂_a of every component.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    build(f, f.rank(), |k, inp, out| {
        for (o, v) in out.iter_mut().zip(inp) {
            *o = I * k[axis] * v;
        }
    })
}

/// Gradient; for a vector field the result has entry (i, j) = ∂_j u^i.
pub fn grad(f: &SpectralField) -> Result<SpectralField> {
    require_rank(f, &[0, 1])?;
    let d = f.dim();
    Ok(build(f, f.rank() + 1, |k, inp, out| {
        for (c, v) in inp.iter().enumerate() {
            for j in 0..d {
                out[c * d + j] = I * k[j] * v;
            }
        }
    }))
}

/// Divergence; for a tensor the result is ∂_k M^{kl}.
pub fn div(f: &SpectralField) -> Result<SpectralField> {
    require_rank(f, &[1, 2])?;
    let d = f.dim();
    if f.rank() == 1 {
        Ok(build(f, 0, |k, inp, out| {
            out[0] = (0..d).map(|j| I * k[j] * inp[j]).sum();
        }))
    } else {
        Ok(build(f, 1, |k, inp, out| {
            for l in 0..d {
                out[l] = (0..d).map(|kk| I * k[kk] * inp[kk * d + l]).sum();
            }
        }))
    }
}

/// Curl. In 3-D vector to vector. In 2-D a vector maps to the scalar
/// ∂₁u₂ − ∂₂u₁ and a scalar ψ maps to (−∂₂ψ, ∂₁ψ).
pub fn curl(f: &SpectralField) -> Result<SpectralField> {
    match (f.dim(), f.rank()) {
        (3, 1) => Ok(build(f, 1, |k, u, out| {
            out[0] = I * (k[1] * u[2] - k[2] * u[1]);
            out[1] = I * (k[2] * u[0] - k[0] * u[2]);
            out[2] = I * (k[0] * u[1] - k[1] * u[0]);
        })),
        (2, 1) => Ok(build(f, 0, |k, u, out| {
            out[0] = I * (k[0] * u[1] - k[1] * u[0]);
        })),
        (2, 0) => Ok(build(f, 1, |k, u, out| {
            out[0] = -I * k[1] * u[0];
            out[1] = I * k[0] * u[0];
        })),
        (_, r) => Err(LabError::RankMismatch { expected: 1, found: r }),
    }
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    build(f, f.rank(), |k, inp, out| {
        let m = -k2(k);
        for (o, v) in out.iter_mut().zip(inp) {
            *o = v * m;
        }
    })
}

/// Δ⁻¹ on mean-free data (zero mode mapped to zero).
pub fn inverse_laplacian(f: &SpectralField) -> SpectralField {
    build(f, f.rank(), |k, inp, out| {
        let kk = k2(k);
        let m = if kk > 0.0 { -1.0 / kk } else { 0.0 };
        for (o, v) in out.iter_mut().zip(inp) {
            *o = v * m;
        }
    })
}

/// (1 − α²Δ) applied componentwise.
pub fn helmholtz(f: &SpectralField, alpha: f64) -> SpectralField {
    build(f, f.rank(), |k, inp, out| {
        let m = 1.0 + alpha * alpha * k2(k);
        for (o, v) in out.iter_mut().zip(inp) {
            *o = v * m;
        }
    })
}

/// (1 − α²Δ)⁻¹ applied componentwise.
pub fn inverse_helmholtz(f: &SpectralField, alpha: f64) -> SpectralField {
    build(f, f.rank(), |k, inp, out| {
        let m = 1.0 / (1.0 + alpha * alpha * k2(k));
        for (o, v) in out.iter_mut().zip(inp) {
            *o = v * m;
        }
    })
}

/// Projection onto divergence-free fields, û − k(k·û)/|k|².
pub fn leray(f: &SpectralField) -> Result<SpectralField> {
    require_rank(f, &[1])?;
    let d = f.dim();
    Ok(build(f, 1, |k, u, out| {
        let kk = k2(k);
        let kd: Complex64 = (0..d).map(|j| u[j] * k[j]).sum();
        for j in 0..d {
            out[j] = if kk > 0.0 { u[j] - kd * (k[j] / kk) } else { u[j] };
        }
    }))
}

/// Pressure solving Δp = div v, so that v − ∇p = leray(v).
pub fn pressure_of(v: &SpectralField) -> Result<SpectralField> {
    Ok(inverse_laplacian(&div(v)?))
}

/// Applies a band filter keeping |k_j| < fraction·n/2.
pub fn dealias(f: &SpectralField, fraction: f64) -> SpectralField {
    f.truncate(fraction)
}

fn physical_product(
    a: &SpectralField,
    b: &SpectralField,
    rank: usize,
    f: impl Fn(&[f64], &[f64], &mut [f64]),
) -> Result<SpectralField> {
    if a.grid() != b.grid() {
        return Err(LabError::GridMismatch);
    }
    let grid = a.grid();
    let nout = component_count(grid.dim(), rank);
    let mut out = vec![vec![0.0; grid.len()]; nout];
    let mut av = vec![0.0; a.ncomp()];
    let mut bv = vec![0.0; b.ncomp()];
    let mut res = vec![0.0; nout];
    for idx in 0..grid.len() {
        for (c, v) in av.iter_mut().enumerate() {
            *v = a.phys(c)[idx];
        }
        for (c, v) in bv.iter_mut().enumerate() {
            *v = b.phys(c)[idx];
        }
        f(&av, &bv, &mut res);
        for c in 0..nout {
            out[c][idx] = res[c];
        }
    }
    SpectralField::from_physical(grid, rank, out)
}

/// (a ⊗ b)^{ij} = a^i b^j.
pub fn outer(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[1])?;
    require_rank(b, &[1])?;
    let d = a.dim();
    physical_product(a, b, 2, |x, y, o| {
        for i in 0..d {
            for j in 0..d {
                o[i * d + j] = x[i] * y[j];
            }
        }
    })
}

/// a · b for vectors, A : B for tensors.
pub fn dot(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.same_shape(b)?;
    physical_product(a, b, 0, |x, y, o| {
        o[0] = x.iter().zip(y).map(|(p, q)| p * q).sum();
    })
}

/// Matrix-vector product (A b)^i = A^{ij} b^j.
pub fn matvec(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[2])?;
    require_rank(b, &[1])?;
    let d = a.dim();
    physical_product(a, b, 1, |m, v, o| {
        for i in 0..d {
            o[i] = (0..d).map(|j| m[i * d + j] * v[j]).sum();
        }
    })
}

/// Matrix product (A B)^{ij} = A^{ik} B^{kj}.
pub fn matmul(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[2])?;
    require_rank(b, &[2])?;
    let d = a.dim();
    physical_product(a, b, 2, |x, y, o| {
        for i in 0..d {
            for j in 0..d {
                o[i * d + j] = (0..d).map(|k| x[i * d + k] * y[k * d + j]).sum();
            }
        }
    })
}

pub fn transpose(a: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[2])?;
    let d = a.dim();
    a.map_physical(2, |m| {
        let mut o = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                o[i * d + j] = m[j * d + i];
            }
        }
        o
    })
}

/// Cross product of 3-D vector fields; in 2-D, `a` is read as a scalar
/// out-of-plane component ω and the result is ω ẑ × b.
pub fn cross(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    match a.dim() {
        3 => {
            require_rank(a, &[1])?;
            require_rank(b, &[1])?;
            physical_product(a, b, 1, |x, y, o| {
                o[0] = x[1] * y[2] - x[2] * y[1];
                o[1] = x[2] * y[0] - x[0] * y[2];
                o[2] = x[0] * y[1] - x[1] * y[0];
            })
        }
        _ => {
            require_rank(a, &[0])?;
            require_rank(b, &[1])?;
            physical_product(a, b, 1, |w, y, o| {
                o[0] = -w[0] * y[1];
                o[1] = w[0] * y[0];
            })
        }
    }
}

/// Identity tensor times a scalar field.
pub fn scalar_identity(s: &SpectralField) -> Result<SpectralField> {
    require_rank(s, &[0])?;
    let d = s.dim();
    s.map_physical(2, |v| {
        let mut o = vec![0.0; d * d];
        for i in 0..d {
            o[i * d + i] = v[0];
        }
        o
    })
}

pub fn trace(a: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[2])?;
    let d = a.dim();
    a.map_physical(0, |m| vec![(0..d).map(|i| m[i * d + i]).sum()])
}

/// Pointwise matrix inverse of a rank-2 field.
pub fn invert(a: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[2])?;
    let d = a.dim();
    a.map_physical(2, |m| {
        if d == 2 {
            let det = m[0] * m[3] - m[1] * m[2];
            vec![m[3] / det, -m[1] / det, -m[2] / det, m[0] / det]
        } else {
            let c = |i: usize, j: usize| m[i * 3 + j];
            let cof = |i: usize, j: usize| {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                c(i1, j1) * c(i2, j2) - c(i1, j2) * c(i2, j1)
            };
            let det: f64 = (0..3).map(|j| c(0, j) * cof(0, j)).sum();
            let mut o = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    o[i * 3 + j] = cof(j, i) / det;
                }
            }
            o
        }
    })
}

/// Pointwise determinant of a rank-2 field.
pub fn determinant(a: &SpectralField) -> Result<SpectralField> {
    require_rank(a, &[2])?;
    let d = a.dim();
    a.map_physical(0, |m| {
        if d == 2 {
            vec![m[0] * m[3] - m[1] * m[2]]
        } else {
            vec![m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])]
        }
    })
}

/// ∇Φ for a map given by unreduced positions Φ(x) at the grid points;
/// the displacement Φ(x) − x is periodic and differentiated spectrally.
pub fn map_jacobian(grid: &super::Grid, positions: &[Vec<f64>]) -> Result<SpectralField> {
    let d = grid.dim();
    if positions.len() != d || positions.iter().any(|p| p.len() != grid.len()) {
        return Err(LabError::GridMismatch);
    }
    let disp: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..grid.len()).map(|i| positions[a][i] - grid.point(i)[a]).collect())
        .collect();
    let g = grad(&SpectralField::from_physical(grid, 1, disp)?)?;
    g.map_physical(2, |m| {
        let mut o = m.to_vec();
        for i in 0..d {
            o[i * d + i] += 1.0;
        }
        o
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::rel_diff;
    use crate::spectral::Grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn div_curl_and_curl_grad_vanish() {
        let g = Grid::new(3, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = SpectralField::random_band_limited(&g, 1, 7, &mut rng);
        let dc = div(&curl(&u).unwrap()).unwrap();
        assert!(dc.max_abs() / u.max_abs() < 1e-12);
        let phi = SpectralField::random_band_limited(&g, 0, 7, &mut rng);
        let cg = curl(&grad(&phi).unwrap()).unwrap();
        assert!(cg.max_abs() / phi.max_abs() < 1e-12);

        let g2 = Grid::new(2, 32).unwrap();
        let psi = SpectralField::random_band_limited(&g2, 0, 9, &mut rng);
        let v = curl(&psi).unwrap();
        assert!(div(&v).unwrap().max_abs() / v.max_abs() < 1e-12);
        let lap = laplacian(&psi);
        assert!(rel_diff(&curl(&v).unwrap(), &lap) < 1e-12);
    }

    #[test]
    fn laplacian_of_sine() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::scalar_fn(&g, |x| x[0].sin());
        assert!(rel_diff(&laplacian(&f), &f.scale(-1.0)) < 1e-13);
    }

    #[test]
    fn contraction_gradient_on_shear() {
        // u = (sin x2, 0, 0): ∂_k u^j ∂_l u^j has only (2,2) entry cos² x2,
        // whose divergence ∂_k M^{kl} is −sin(2 x2) in component 2.
        let g = Grid::new(3, 16).unwrap();
        let u = SpectralField::from_fn(&g, 1, |x, c| if c == 0 { x[1].sin() } else { 0.0 });
        let gu = grad(&u).unwrap();
        let m = matmul(&transpose(&gu).unwrap(), &gu).unwrap();
        let dm = div(&m).unwrap();
        let exact = SpectralField::from_fn(&g, 1, |x, c| if c == 1 { -(2.0 * x[1]).sin() } else { 0.0 });
        assert!(rel_diff(&dm, &exact) < 1e-12);
    }

    #[test]
    fn leray_properties() {
        let g = Grid::new(3, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = SpectralField::random_band_limited(&g, 1, 7, &mut rng);
        let p = leray(&v).unwrap();
        assert!(div(&p).unwrap().max_abs() / v.max_abs() < 1e-12);
        assert!(rel_diff(&leray(&p).unwrap(), &p) < 1e-12);
        let phi = SpectralField::random_band_limited(&g, 0, 7, &mut rng);
        let gp = grad(&phi).unwrap();
        assert!(leray(&gp).unwrap().max_abs() / gp.max_abs() < 1e-12);
        let w = SpectralField::random_band_limited(&g, 1, 7, &mut rng);
        let a = leray(&v).unwrap().inner(&w).unwrap();
        let b = v.inner(&leray(&w).unwrap()).unwrap();
        assert!((a - b).abs() / a.abs().max(1.0) < 1e-10);
    }
}
