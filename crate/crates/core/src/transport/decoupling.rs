//! Products of (deformed) pipes: L¹ norms and intersection geometry by
//! quadrature restricted to the neighbourhood of the pipe crossings.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::mikado::{gauss_legendre, PipeFamily};
use crate::spectral::{self, FourierInterpolant, SpectralField};

use super::flow::FlowMap;

const TWO_PI: f64 = 2.0 * PI;

/// A volume-preserving map of the torus given pointwise, used to deform a
/// pipe as (∇Φ)⁻¹ W∘Φ.
pub trait Deformation {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64; 3]) -> [f64; 3];
    fn jacobian(&self, x: &[f64; 3]) -> [[f64; 3]; 3];
    /// Upper bound for the Lipschitz constant of Φ.
    fn lipschitz(&self) -> f64;
}

pub struct IdentityMap(pub usize);

impl Deformation for IdentityMap {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        *x
    }

    fn jacobian(&self, _: &[f64; 3]) -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// Back-to-labels map of the steady shear (sin x₂, 0, 0) after time t:
/// Φ(x) = x − t sin x₂ e₁.
pub struct ShearMap {
    pub dim: usize,
    pub t: f64,
}

impl Deformation for ShearMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        [x[0] - self.t * x[1].sin(), x[1], x[2]]
    }

    fn jacobian(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        [[1.0, -self.t * x[1].cos(), 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn lipschitz(&self) -> f64 {
        1.0 + self.t.abs()
    }
}

/// Φ from a solved flow, evaluated off-grid by Fourier interpolation of the
/// displacement and of its gradient.
pub struct SampledMap {
    dim: usize,
    disp: Vec<FourierInterpolant>,
    jac: Vec<FourierInterpolant>,
    lip: f64,
}

impl SampledMap {
    pub fn new(flow: &FlowMap) -> Result<Self> {
        let disp = flow.displacement()?;
        let jac = flow.jacobian()?;
        let dim = flow.grid().dim();
        let lip = (0..flow.grid().len())
            .map(|p| (0..dim * dim).map(|c| jac.phys(c)[p].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(Self {
            dim,
            disp: (0..dim).map(|c| FourierInterpolant::new(&disp, c)).collect::<Result<_>>()?,
            jac: (0..dim * dim).map(|c| FourierInterpolant::new(&jac, c)).collect::<Result<_>>()?,
            lip: lip * 1.05,
        })
    }
}

impl Deformation for SampledMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut y = *x;
        for a in 0..self.dim {
            y[a] += self.disp[a].eval(x);
        }
        y
    }

    fn jacobian(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.jac[i * self.dim + j].eval(x);
            }
        }
        if self.dim == 2 {
            m[2][2] = 1.0;
        }
        m
    }

    fn lipschitz(&self) -> f64 {
        self.lip
    }
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let col = |k: usize| {
        let mut c = *m;
        for i in 0..3 {
            c[i][k] = b[i];
        }
        c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
    };
    [col(0) / det, col(1) / det, col(2) / det]
}

/// |(∇Φ)⁻¹ W(Φ(x))|.
fn deformed_magnitude(pipe: &PipeFamily, map: &dyn Deformation, x: &[f64; 3]) -> f64 {
    let y = map.apply(x);
    let w = pipe.w_at(&y);
    if w.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let v = solve3(&map.jacobian(x), &w);
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn cross_distance(pipe: &PipeFamily, y: &[f64; 3]) -> f64 {
    let s = pipe.cross_coords(y);
    (s[0] * s[0] + s[1] * s[1]).sqrt()
}

/// Intersection statistics of two deformed pipes.
#[derive(Clone, Debug)]
pub struct IntersectionStats {
    /// ⨍ |f| |W¹| |W²|.
    pub l1: f64,
    /// Normalized volume of {|W¹| > 1% max} ∩ {|W²| > 1% max}.
    pub support_volume: f64,
    /// Connected pieces of that set.
    pub blobs: usize,
    /// Normalized volume of the largest piece.
    pub max_blob_volume: f64,
    /// max_blob_volume · λᵈ.
    pub ball_ratio: f64,
    pub leaves: usize,
}

struct Pipe<'a> {
    family: &'a PipeFamily,
    map: &'a dyn Deformation,
    threshold: f64,
}

fn peak(family: &PipeFamily) -> f64 {
    (0..=400).map(|k| family.rho_cross(&[family.radius * k as f64 / 400.0, 0.0]).abs()).fold(0.0, f64::max)
}

/// Gauss points per axis and leaf. The profile peaks well inside its
/// support, so fewer points miss most of the mass.
pub const LEAF_NODES: usize = 8;

/// Measures ⨍ |f W¹ ⊗ W²| and the geometry of the overlap. Blocks of the
/// torus are refined only where both deformed pipes can be present, down to
/// leaves of side about the pipe radius, each integrated with a
/// [`LEAF_NODES`]-point Gauss rule per axis.
pub fn measure_intersection(
    pipe1: (&PipeFamily, &dyn Deformation),
    pipe2: (&PipeFamily, &dyn Deformation),
    f: &dyn Fn(&[f64; 3]) -> f64,
) -> Result<IntersectionStats> {
    measure_intersection_with(pipe1, pipe2, f, LEAF_NODES)
}

/// [`measure_intersection`] with `nodes` Gauss points per leaf axis.
pub fn measure_intersection_with(
    pipe1: (&PipeFamily, &dyn Deformation),
    pipe2: (&PipeFamily, &dyn Deformation),
    f: &dyn Fn(&[f64; 3]) -> f64,
    nodes: usize,
) -> Result<IntersectionStats> {
    let dim = pipe1.0.dim();
    if pipe2.0.dim() != dim || pipe1.1.dim() != dim || pipe2.1.dim() != dim {
        return Err(LabError::BadDimension(pipe2.0.dim()));
    }
    let x1 = pipe1.0.frame.xi();
    let x2 = pipe2.0.frame.xi();
    let cos: f64 = (0..3).map(|a| x1[a] * x2[a]).sum();
    if cos.abs() > 1.0 - 1e-9 {
        return Err(LabError::ParallelDirections);
    }
    if (pipe1.0.mu() - pipe2.0.mu()).abs() > 1e-9 {
        return Err(LabError::InvalidParameter(format!(
            "pipes need a shared periodicity, got μ = {} and {}",
            pipe1.0.mu(),
            pipe2.0.mu()
        )));
    }
    let pipes = [
        Pipe { family: pipe1.0, map: pipe1.1, threshold: 0.01 * peak(pipe1.0) },
        Pipe { family: pipe2.0, map: pipe2.1, threshold: 0.01 * peak(pipe2.0) },
    ];
    let radius = pipe1.0.radius.max(pipe2.0.radius);
    let levels = (TWO_PI / radius).log2().ceil().max(0.0) as u32;
    let per_axis = 1i64 << levels;
    let leaf = TWO_PI / per_axis as f64;
    if nodes == 0 {
        return Err(LabError::InvalidParameter("leaf quadrature needs at least one node".into()));
    }
    let rule = gauss_legendre(nodes);
    let m = nodes;
    let leaf_points = m.pow(dim as u32);
    let leaf_volume = leaf.powi(dim as i32) / TWO_PI.powi(dim as i32);

    let mut l1 = 0.0;
    let mut cells: HashMap<[i64; 3], f64> = HashMap::new();
    let mut stack = vec![(0u32, [0i64; 3])];
    while let Some((level, idx)) = stack.pop() {
        let side = TWO_PI / (1i64 << level) as f64;
        let mut c = [0.0; 3];
        for a in 0..dim {
            c[a] = (idx[a] as f64 + 0.5) * side;
        }
        let half_diag = 0.5 * side * (dim as f64).sqrt();
        let near = pipes.iter().all(|p| {
            let y = p.map.apply(&c);
            cross_distance(p.family, &y) <= p.family.radius + p.map.lipschitz() * half_diag
        });
        if !near {
            continue;
        }
        if level < levels {
            for child in 0..(1usize << dim) {
                let mut ci = [0i64; 3];
                for a in 0..dim {
                    ci[a] = 2 * idx[a] + ((child >> a) & 1) as i64;
                }
                stack.push((level + 1, ci));
            }
            continue;
        }
        let mut sum = 0.0;
        let mut inside = 0.0;
        let mut x = [0.0; 3];
        for q in 0..leaf_points {
            let mut rem = q;
            let mut weight = 1.0;
            for a in 0..dim {
                let (node, w) = rule[rem % m];
                x[a] = (idx[a] as f64 + 0.5 * (node + 1.0)) * leaf;
                weight *= 0.5 * w;
                rem /= m;
            }
            let w1 = deformed_magnitude(pipes[0].family, pipes[0].map, &x);
            if w1 == 0.0 {
                continue;
            }
            let w2 = deformed_magnitude(pipes[1].family, pipes[1].map, &x);
            sum += weight * f(&x).abs() * w1 * w2;
            if w1 > pipes[0].threshold && w2 > pipes[1].threshold {
                inside += weight;
            }
        }
        l1 += sum * leaf_volume;
        if inside > 0.0 {
            cells.insert(idx, inside * leaf_volume);
        }
    }

    // periodic flood fill over leaves sharing a face, edge or corner
    let mut seen: HashMap<[i64; 3], bool> = cells.keys().map(|k| (*k, false)).collect();
    let mut blobs = 0usize;
    let mut max_blob = 0.0f64;
    let mut total = 0.0;
    let keys: Vec<[i64; 3]> = cells.keys().copied().collect();
    for start in keys {
        if seen[&start] {
            continue;
        }
        blobs += 1;
        let mut vol = 0.0;
        let mut queue = VecDeque::from([start]);
        seen.insert(start, true);
        while let Some(k) = queue.pop_front() {
            vol += cells[&k];
            let span = if dim == 3 { 27 } else { 9 };
            for o in 0..span {
                let off = [o % 3, (o / 3) % 3, o / 9];
                let mut nb = [0i64; 3];
                for a in 0..dim {
                    nb[a] = (k[a] + off[a] as i64 - 1).rem_euclid(per_axis);
                }
                if let Some(s) = seen.get_mut(&nb) {
                    if !*s {
                        *s = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        total += vol;
        max_blob = max_blob.max(vol);
    }
    Ok(IntersectionStats {
        l1,
        support_volume: total,
        blobs,
        max_blob_volume: max_blob,
        ball_ratio: max_blob * pipe1.0.lambda.powi(dim as i32),
        leaves: cells.len(),
    })
}

#[derive(Clone, Debug)]
pub struct DecouplingRatio {
    /// ‖fg‖_p / (𝒞_f ‖g‖_p).
    pub ratio: f64,
    /// max over N ≤ N_dec + 4 of λ^{−N}‖Dᴺf‖_p.
    pub c_f: f64,
    /// λ^{N_dec+4} ≤ (μ/(2π√3))^{N_dec}.
    pub gap_holds: bool,
}

fn normalized_lp(vals: &[f64], p: f64) -> f64 {
    let n = vals.len() as f64;
    (vals.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

/// |Dᴺf| pointwise for a scalar f, summing over ordered index tuples.
fn derivative_magnitude(f: &SpectralField, order: usize) -> Result<Vec<f64>> {
    let dim = f.dim();
    let len = f.grid().len();
    let mut acc = vec![0.0; len];
    // sorted multi-indices, weighted by their number of orderings
    fn walk(
        f: &SpectralField,
        from: usize,
        left: usize,
        counts: &mut [usize; 3],
        acc: &mut [f64],
    ) {
        let dim = f.dim();
        if left == 0 {
            let total: usize = counts.iter().sum();
            let mut mult = (1..=total).product::<usize>() as f64;
            let mut g = f.clone();
            for a in 0..dim {
                mult /= (1..=counts[a]).product::<usize>() as f64;
                for _ in 0..counts[a] {
                    g = spectral::partial(&g, a);
                }
            }
            for (s, v) in acc.iter_mut().zip(g.phys(0)) {
                *s += mult * v * v;
            }
            return;
        }
        for a in from..dim {
            counts[a] += 1;
            walk(f, a, left - 1, counts, acc);
            counts[a] -= 1;
        }
    }
    if f.rank() != 0 {
        return Err(LabError::RankMismatch { expected: 0, found: f.rank() });
    }
    let _ = dim;
    walk(f, 0, order, &mut [0; 3], &mut acc);
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Empirical check that a slow f and a fast (𝕋/μ)-periodic g decouple in
/// L^p, with the constant 𝒞_f measured from f's derivatives at scale λ.
pub fn lp_decoupling_check(
    f: &SpectralField,
    g: &SpectralField,
    lambda: f64,
    mu: f64,
    p: f64,
    n_dec: u32,
) -> Result<DecouplingRatio> {
    f.same_shape(g)?;
    if !(p >= 1.0) || !(lambda >= 1.0) {
        return Err(LabError::InvalidParameter(format!("need p ≥ 1 and λ ≥ 1, got p={p}, λ={lambda}")));
    }
    let mut c_f = 0.0f64;
    for order in 0..=(n_dec as usize + 4) {
        let d = derivative_magnitude(f, order)?;
        c_f = c_f.max(normalized_lp(&d, p) / lambda.powi(order as i32));
    }
    let fg: Vec<f64> = f.phys(0).iter().zip(g.phys(0)).map(|(a, b)| a * b).collect();
    let ratio = normalized_lp(&fg, p) / (c_f * normalized_lp(g.phys(0), p));
    let gap_holds = lambda.powi(n_dec as i32 + 4) <= (mu / (TWO_PI * 3f64.sqrt())).powi(n_dec as i32);
    Ok(DecouplingRatio { ratio, c_f, gap_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaModel;
    use crate::geometry::QVec;
    use crate::spectral::Grid;

    fn axis(dim: usize, a: usize) -> QVec {
        QVec::axis(dim, a)
    }

    #[test]
    fn disjoint_pipes_have_empty_intersection() {
        let p1 = PipeFamily::new(&axis(3, 0), 16.0, 0.5, 2).unwrap();
        // e₂ pipes shifted by half a period in the shared x₃ coordinate
        let p2 = PipeFamily::new(&axis(3, 1), 16.0, 0.5, 2).unwrap();
        let shift = 0.5 * p2.period;
        let p2 = p2.clone().with_offset(if p2.frame.cross_f64()[0][2] != 0.0 { [shift, 0.0] } else { [0.0, shift] });
        let id = IdentityMap(3);
        let s = measure_intersection((&p1, &id), (&p2, &id), &|_| 1.0).unwrap();
        assert_eq!(s.l1, 0.0);
        assert_eq!(s.blobs, 0);
    }

    #[test]
    fn parallel_pipes_rejected() {
        let p1 = PipeFamily::new(&axis(3, 0), 16.0, 0.5, 2).unwrap();
        let id = IdentityMap(3);
        assert!(matches!(measure_intersection((&p1, &id), (&p1, &id), &|_| 1.0), Err(LabError::ParallelDirections)));
    }

    #[test]
    fn crossings_scale_with_r_and_have_ball_size() {
        let id = IdentityMap(3);
        let mut norms = Vec::new();
        for r in [0.5, 0.25] {
            let p1 = PipeFamily::new(&axis(3, 0), 16.0, r, 2).unwrap();
            let p2 = PipeFamily::new(&axis(3, 1), 16.0, r, 2).unwrap();
            let s = measure_intersection((&p1, &id), (&p2, &id), &|_| 1.0).unwrap();
            let mu = p1.mu();
            assert_eq!(s.blobs, (mu * mu * mu).round() as usize);
            assert!(s.ball_ratio > 0.0 && s.ball_ratio <= 4.0, "{}", s.ball_ratio);
            norms.push(s.l1 / r);
        }
        assert!((norms[0] / norms[1] - 1.0).abs() < 0.2, "{norms:?}");
    }

    #[test]
    fn constant_weight_gives_unit_ratio() {
        let g = Grid::new(2, 64).unwrap();
        let p = PipeFamily::new(&axis(2, 0), 16.0, 0.5, 2).unwrap();
        let rho = p.realize(&g, &AlphaModel::new(0.1).unwrap()).unwrap().rho;
        let one = SpectralField::constant(&g, 1.0);
        let out = lp_decoupling_check(&one, &rho, 1.0, p.mu(), 1.0, 2).unwrap();
        assert!((out.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_magnitude_counts_orderings() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::scalar_fn(&g, |x| (x[0] + x[1]).sin());
        // |D²f|² = 4 sin² for the direction (1,1)
        let d = derivative_magnitude(&f, 2).unwrap();
        for (i, v) in d.iter().enumerate() {
            let x = g.point(i);
            assert!((v - 2.0 * (x[0] + x[1]).sin().abs()).abs() < 1e-10);
        }
    }
}
