//! Direction sets K_n and their positive coefficient decomposition.

use num::{BigRational, One, Signed, ToPrimitive, Zero};
use rand::Rng;

use super::rational::{pythagorean_rotation, quaternion_rotation, QMat, QVec};
use crate::error::{LabError, Result};

/// One direction set: axis vectors e_1..e_n of some rational frame,
/// followed by pairs (p⁺, p⁻) whose matrices sum to a diagonal one.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    pub index: usize,
    pub dim: usize,
    pub vectors: Vec<QVec>,
    /// K_n = O_n K_0.
    pub rotation: QMat,
    coeffs: Coefficients,
}

/// Affine maps R ↦ c_i(R)² written in orthonormal coordinates of the
/// symmetric traceless matrices.
#[derive(Clone, Debug)]
struct Coefficients {
    constant: Vec<f64>,
    gradient: Vec<Vec<f64>>,
    c_sum: f64,
}

/// Result of a decomposition: squares of the nine (or four) coefficients.
#[derive(Clone, Debug)]
pub struct CoefficientSolution {
    pub squares: Vec<f64>,
    pub c_sum: f64,
}

/// Certified radius of positivity.
#[derive(Clone, Debug)]
pub struct EpsilonBall {
    pub epsilon: f64,
    /// Radius at which the first coefficient reaches zero.
    pub positivity_radius: f64,
    /// Smallest coefficient seen on sampled points of the ε-sphere.
    pub sampled_min: f64,
}

fn base_vectors(dim: usize) -> Vec<QVec> {
    if dim == 3 {
        vec![
            QVec::axis(3, 0),
            QVec::axis(3, 1),
            QVec::axis(3, 2),
            QVec::from_ratios(&[(3, 5), (4, 5), (0, 1)]),
            QVec::from_ratios(&[(3, 5), (0, 1), (4, 5)]),
            QVec::from_ratios(&[(0, 1), (3, 5), (4, 5)]),
            QVec::from_ratios(&[(3, 5), (-4, 5), (0, 1)]),
            QVec::from_ratios(&[(3, 5), (0, 1), (-4, 5)]),
            QVec::from_ratios(&[(0, 1), (3, 5), (-4, 5)]),
        ]
    } else {
        vec![
            QVec::axis(2, 0),
            QVec::axis(2, 1),
            QVec::from_ratios(&[(3, 5), (4, 5)]),
            QVec::from_ratios(&[(3, 5), (-4, 5)]),
        ]
    }
}

/// The near-identity rational rotation generating K_1 from K_0.
pub fn base_rotation(dim: usize) -> QMat {
    if dim == 3 {
        quaternion_rotation(24, 1, 2, 2)
    } else {
        // cosine 12/13, sine 5/13
        pythagorean_rotation(5, 1)
    }
}

/// Orthonormal basis of symmetric traceless matrices (Frobenius product).
fn traceless_basis(dim: usize) -> Vec<[[f64; 3]; 3]> {
    let s2 = 0.5f64.sqrt();
    if dim == 2 {
        vec![[[s2, 0.0, 0.0], [0.0, -s2, 0.0], [0.0; 3]], [[0.0, s2, 0.0], [s2, 0.0, 0.0], [0.0; 3]]]
    } else {
        let s6 = 1.0 / 6f64.sqrt();
        vec![
            [[s2, 0.0, 0.0], [0.0, -s2, 0.0], [0.0, 0.0, 0.0]],
            [[s6, 0.0, 0.0], [0.0, s6, 0.0], [0.0, 0.0, -2.0 * s6]],
            [[0.0, s2, 0.0], [s2, 0.0, 0.0], [0.0, 0.0, 0.0]],
            [[0.0, 0.0, s2], [0.0, 0.0, 0.0], [s2, 0.0, 0.0]],
            [[0.0, 0.0, 0.0], [0.0, 0.0, s2], [0.0, s2, 0.0]],
        ]
    }
}

fn coords(dim: usize, r: &[[f64; 3]; 3]) -> Vec<f64> {
    traceless_basis(dim)
        .iter()
        .map(|e| (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| e[i][j] * r[i][j]).sum())
        .collect()
}

/// Exact coordinates used for the rational solve: upper triangle minus
/// the last diagonal entry.
fn exact_coords(m: &QMat) -> Vec<BigRational> {
    let n = m.dim();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        out.push(m.0[i][i].clone());
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(m.0[i][j].clone());
        }
    }
    out
}

/// Gauss–Jordan inverse over the rationals.
fn invert(mut a: Vec<Vec<BigRational>>) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut inv: Vec<Vec<BigRational>> = QMat::identity(n).0;
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let t = &f * &a[col][j];
                    a[r][j] -= t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= t;
                }
            }
        }
    }
    Some(inv)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Coefficients {
    /// Construction on K_0 following the appendix: solve on the basis
    /// {f(e_1..e_{n-1}), f(p⁺)}, shift the pairs by 2c₀, fix the diagonal
    /// with the axis vectors, then add the balancing term.
    fn build(dim: usize, vectors: &[QVec]) -> Self {
        let pairs = (vectors.len() - dim) / 2;
        let m = dim * (dim + 1) / 2 - 1;
        let f: Vec<QMat> = vectors.iter().map(QMat::direction_tensor).collect();
        let basis_idx: Vec<usize> = (0..dim - 1).chain(dim..dim + pairs).collect();
        // column j = exact coordinates of f(basis_j)
        let cols: Vec<Vec<BigRational>> = basis_idx.iter().map(|&i| exact_coords(&f[i])).collect();
        let mat: Vec<Vec<BigRational>> = (0..m).map(|r| (0..m).map(|c| cols[c][r].clone()).collect()).collect();
        let inv = invert(mat).expect("basis matrices are independent");
        // gradient of a linear functional x ↦ row·x(R) in orthonormal coordinates
        let basis = traceless_basis(dim);
        let grad_of = |row: &[BigRational]| -> Vec<f64> {
            basis
                .iter()
                .map(|e| {
                    let mut x = Vec::new();
                    for i in 0..dim - 1 {
                        x.push(e[i][i]);
                    }
                    for i in 0..dim {
                        for j in i + 1..dim {
                            x.push(e[i][j]);
                        }
                    }
                    row.iter().zip(&x).map(|(a, b)| a.to_f64().unwrap() * b).sum()
                })
                .collect()
        };
        let tilde: Vec<Vec<f64>> = inv.iter().map(|row| grad_of(row)).collect();
        let c0 = (dim - 1..m).map(|i| norm(&tilde[i])).fold(0.0, f64::max);
        // S = Σ_p f(p⁺) + f(p⁻) is diagonal; write it on f(e_1..e_{n-1})
        let mut s = QMat(vec![vec![BigRational::zero(); dim]; dim]);
        for p in 0..pairs {
            for i in 0..dim {
                for j in 0..dim {
                    s.0[i][j] = &s.0[i][j] + &f[dim + p].0[i][j] + &f[dim + pairs + p].0[i][j];
                }
            }
        }
        let sx = exact_coords(&s);
        let s_coef: Vec<f64> = (0..dim - 1)
            .map(|j| inv[j].iter().zip(&sx).fold(BigRational::zero(), |a, (x, y)| a + x * y).to_f64().unwrap())
            .collect();
        let n = vectors.len();
        let mut constant = vec![0.0; n];
        let mut gradient = vec![vec![0.0; m]; n];
        // pairs
        for p in 0..pairs {
            constant[dim + p] = 2.0 * c0;
            gradient[dim + p] = tilde[dim - 1 + p].clone();
            constant[dim + pairs + p] = 2.0 * c0;
        }
        // diagonal correction ċ_j = c̃_j − 2c₀ s_j for j < n
        for j in 0..dim - 1 {
            constant[j] = -2.0 * c0 * s_coef[j];
            gradient[j] = tilde[j].clone();
        }
        // L(R) = Σ_{j<n} ċ_j + Σ_p c̃_p + 4 P c₀ ; c²(e_j) = ċ_j + (C − L)/n
        let mut l_const = 4.0 * pairs as f64 * c0;
        let mut l_grad = vec![0.0; m];
        for j in 0..dim - 1 {
            l_const += constant[j];
            for a in 0..m {
                l_grad[a] += gradient[j][a];
            }
        }
        for p in 0..pairs {
            for a in 0..m {
                l_grad[a] += tilde[dim - 1 + p][a];
            }
        }
        let nd = dim as f64;
        let mut c_sum: f64 = 0.0;
        let mut axis_const = vec![0.0; dim];
        let mut axis_grad = vec![vec![0.0; m]; dim];
        for j in 0..dim {
            let (c, g) = if j < dim - 1 { (constant[j], gradient[j].clone()) } else { (0.0, vec![0.0; m]) };
            axis_const[j] = c - l_const / nd;
            axis_grad[j] = g.iter().zip(&l_grad).map(|(a, b)| a - b / nd).collect();
            let need = nd * (c0 - axis_const[j] + norm(&axis_grad[j]));
            c_sum = c_sum.max(need);
        }
        for j in 0..dim {
            constant[j] = axis_const[j] + c_sum / nd;
            gradient[j] = axis_grad[j].clone();
        }
        Coefficients { constant, gradient, c_sum }
    }

    fn eval(&self, r: &[f64]) -> Vec<f64> {
        self.constant
            .iter()
            .zip(&self.gradient)
            .map(|(a, g)| a + g.iter().zip(r).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }
}

impl DirectionSet {
    fn new(dim: usize, index: usize) -> Self {
        let base = base_vectors(dim);
        let rotation = base_rotation(dim).pow(index);
        let vectors = base.iter().map(|k| rotation.apply(k)).collect();
        Self { index, dim, vectors, rotation, coeffs: Coefficients::build(dim, &base) }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn c_sum(&self) -> f64 {
        self.coeffs.c_sum
    }

    /// f(k) = n k⊗k − Id for the i-th vector, exact.
    pub fn tensor(&self, i: usize) -> QMat {
        QMat::direction_tensor(&self.vectors[i])
    }

    pub fn vector_f64(&self, i: usize) -> [f64; 3] {
        self.vectors[i].to_f64()
    }

    /// Squares c_i(R)², with c_i(R) = c⁰_i(O_nᵀ R O_n).
    pub fn coefficient_squares(&self, r: &[[f64; 3]; 3]) -> Vec<f64> {
        let o = self.rotation.to_f64();
        let d = self.dim;
        let mut rr = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                rr[i][j] = (0..d)
                    .flat_map(|a| (0..d).map(move |b| (a, b)))
                    .map(|(a, b)| o[a][i] * r[a][b] * o[b][j])
                    .sum();
            }
        }
        self.coeffs.eval(&coords(d, &rr))
    }

    /// Radius (Frobenius) up to which every coefficient stays positive.
    pub fn positivity_radius(&self) -> f64 {
        self.coeffs
            .constant
            .iter()
            .zip(&self.coeffs.gradient)
            .map(|(a, g)| {
                let gn = norm(g);
                if gn == 0.0 {
                    f64::INFINITY
                } else {
                    a / gn
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// ε = half the positivity radius, witnessed by random samples on the
    /// ε-sphere.
    pub fn certify_epsilon<R: Rng>(&self, samples: usize, rng: &mut R) -> EpsilonBall {
        let radius = self.positivity_radius();
        let epsilon = 0.5 * radius;
        let mut sampled_min = f64::INFINITY;
        for _ in 0..samples {
            let r = random_traceless(self.dim, epsilon, true, rng);
            let sq = self.coefficient_squares(&r);
            sampled_min = sampled_min.min(sq.into_iter().fold(f64::INFINITY, f64::min));
        }
        EpsilonBall { epsilon, positivity_radius: radius, sampled_min }
    }

    pub fn epsilon(&self) -> f64 {
        0.5 * self.positivity_radius()
    }

    /// Positive coefficients with Σ c_i² f(k_i) = R and Σ c_i² = C_sum.
    pub fn decompose(&self, r: &[[f64; 3]; 3]) -> Result<CoefficientSolution> {
        let n = frobenius(self.dim, r);
        let eps = self.epsilon();
        if n > eps {
            return Err(LabError::OutsideBall { norm: n, epsilon: eps });
        }
        Ok(CoefficientSolution { squares: self.coefficient_squares(r), c_sum: self.coeffs.c_sum })
    }

    /// Σ c_i² f(k_i) in floating point.
    pub fn reconstruct(&self, squares: &[f64]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, c) in squares.iter().enumerate() {
            let f = self.tensor(i).to_f64();
            for a in 0..self.dim {
                for b in 0..self.dim {
                    out[a][b] += c * f[a][b];
                }
            }
        }
        out
    }
}

pub fn frobenius(dim: usize, r: &[[f64; 3]; 3]) -> f64 {
    (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| r[i][j] * r[i][j]).sum::<f64>().sqrt()
}

/// Uniformly oriented symmetric traceless matrix of Frobenius norm
/// `radius` (on the sphere) or at most `radius` (in the ball).
pub fn random_traceless<R: Rng>(dim: usize, radius: f64, on_sphere: bool, rng: &mut R) -> [[f64; 3]; 3] {
    let basis = traceless_basis(dim);
    let mut x: Vec<f64> = basis.iter().map(|_| gaussian(rng)).collect();
    let n = norm(&x);
    let rad = if on_sphere { radius } else { radius * rng.gen::<f64>().powf(1.0 / basis.len() as f64) };
    x.iter_mut().for_each(|v| *v *= rad / n);
    let mut out = [[0.0; 3]; 3];
    for (c, e) in x.iter().zip(&basis) {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += c * e[i][j];
            }
        }
    }
    out
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// K_0, ..., K_N with K_n = O₁ⁿ K_0.
pub fn build_direction_sets(dim: usize, count_minus_one: usize) -> Result<Vec<DirectionSet>> {
    if dim != 2 && dim != 3 {
        return Err(LabError::BadDimension(dim));
    }
    Ok((0..=count_minus_one).map(|n| DirectionSet::new(dim, n)).collect())
}

/// ε₀ = 1 − max |⟨k, k'⟩| over cross pairs, exact.
pub fn minimal_orthogonality(a: &DirectionSet, b: &DirectionSet) -> BigRational {
    let mut worst = BigRational::zero();
    for k in &a.vectors {
        for k2 in &b.vectors {
            let d = k.dot(k2).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    BigRational::one() - worst
}

/// No vector of one set is parallel to a vector of another.
pub fn pairwise_disjoint(sets: &[DirectionSet]) -> bool {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            for k in &a.vectors {
                if b.vectors.iter().any(|k2| k.parallel(k2)) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn appendix_matrices() {
        let sets = build_direction_sets(3, 1).unwrap();
        let k0 = &sets[0];
        assert_eq!(k0.vectors[3], QVec::from_ratios(&[(3, 5), (4, 5), (0, 1)]));
        assert_eq!(k0.tensor(0), QMat::from_ratios(&[&[(2, 1), (0, 1), (0, 1)], &[(0, 1), (-1, 1), (0, 1)], &[(0, 1), (0, 1), (-1, 1)]]));
        assert_eq!(
            k0.tensor(3),
            QMat::from_ratios(&[&[(2, 25), (36, 25), (0, 1)], &[(36, 25), (23, 25), (0, 1)], &[(0, 1), (0, 1), (-1, 1)]])
        );
        assert!(k0.vectors.iter().all(|k| k.is_unit()));
        assert!(sets[1].vectors.iter().all(|k| k.is_unit()));
    }

    #[test]
    fn sets_are_disjoint_and_minimally_orthogonal() {
        for dim in [2, 3] {
            let sets = build_direction_sets(dim, 2).unwrap();
            assert!(pairwise_disjoint(&sets));
            let e0 = minimal_orthogonality(&sets[0], &sets[1]);
            assert!(e0 > BigRational::zero());
        }
    }

    #[test]
    fn balancing_identity() {
        let sets = build_direction_sets(3, 0).unwrap();
        let sum = (0..3).fold(QMat(vec![vec![BigRational::zero(); 3]; 3]), |acc, i| {
            let f = sets[0].tensor(i);
            QMat((0..3).map(|a| (0..3).map(|b| &acc.0[a][b] + &f.0[a][b]).collect()).collect())
        });
        assert!(sum.max_abs_entry().is_zero());
    }

    #[test]
    fn decomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [2, 3] {
            for set in build_direction_sets(dim, 1).unwrap() {
                let eps = set.epsilon();
                for _ in 0..200 {
                    let r = random_traceless(dim, eps, false, &mut rng);
                    let sol = set.decompose(&r).unwrap();
                    assert!(sol.squares.iter().all(|c| *c > 0.0));
                    let back = set.reconstruct(&sol.squares);
                    for i in 0..dim {
                        for j in 0..dim {
                            assert!((back[i][j] - r[i][j]).abs() < 1e-12);
                        }
                    }
                    let s: f64 = sol.squares.iter().sum();
                    assert!((s - sol.c_sum).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_and_small_axis_stress() {
        let set = &build_direction_sets(3, 0).unwrap()[0];
        let z = set.decompose(&[[0.0; 3]; 3]).unwrap();
        let back = set.reconstruct(&z.squares);
        assert!(back.iter().flatten().all(|v| v.abs() < 1e-13));
        let f1 = set.tensor(0).to_f64();
        let delta = 1e-3;
        let r = f1.map(|row| row.map(|v| v * delta));
        let sol = set.decompose(&r).unwrap();
        let back = set.reconstruct(&sol.squares);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[i][j] - r[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_large_stress() {
        let set = &build_direction_sets(3, 0).unwrap()[0];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let r = random_traceless(3, 2.0 * set.positivity_radius(), true, &mut rng);
        assert!(matches!(set.decompose(&r), Err(LabError::OutsideBall { .. })));
    }

    #[test]
    fn epsilon_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3] {
            let set = &build_direction_sets(dim, 0).unwrap()[0];
            let ball = set.certify_epsilon(2000, &mut rng);
            assert!(ball.sampled_min > 0.0);
            assert!(ball.positivity_radius >= 1.0);
        }
    }
}
