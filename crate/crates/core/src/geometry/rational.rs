//! Exact rational vectors and matrices for direction sets.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Vector with exact rational entries.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QVec(pub Vec<BigRational>);

impl fmt::Debug for QVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl QVec {
    pub fn from_ratios(entries: &[(i64, i64)]) -> Self {
        QVec(entries.iter().map(|&(n, d)| q(n, d)).collect())
    }

    pub fn axis(dim: usize, a: usize) -> Self {
        QVec((0..dim).map(|i| if i == a { BigRational::one() } else { BigRational::zero() }).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &QVec) -> BigRational {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).fold(BigRational::zero(), |s, x| s + x)
    }

    pub fn norm2(&self) -> BigRational {
        self.dot(self)
    }

    pub fn is_unit(&self) -> bool {
        self.norm2().is_one()
    }

    pub fn neg(&self) -> QVec {
        QVec(self.0.iter().map(|x| -x).collect())
    }

    pub fn scale(&self, s: &BigRational) -> QVec {
        QVec(self.0.iter().map(|x| x * s).collect())
    }

    pub fn sub(&self, o: &QVec) -> QVec {
        QVec(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn cross(&self, o: &QVec) -> QVec {
        let (a, b) = (&self.0, &o.0);
        QVec(vec![
            &a[1] * &b[2] - &a[2] * &b[1],
            &a[2] * &b[0] - &a[0] * &b[2],
            &a[0] * &b[1] - &a[1] * &b[0],
        ])
    }

    pub fn to_f64(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, x) in out.iter_mut().zip(&self.0) {
            *o = x.to_f64().expect("finite rational");
        }
        out
    }

    /// Least common multiple of the entry denominators.
    pub fn denominator(&self) -> BigInt {
        self.0.iter().fold(BigInt::one(), |l, x| num::integer::lcm(l, x.denom().clone()))
    }

    /// Whether the two vectors span the same line.
    pub fn parallel(&self, o: &QVec) -> bool {
        let d = self.dot(o);
        (&d * &d) == self.norm2() * o.norm2()
    }
}

/// Square matrix with exact rational entries, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct QMat(pub Vec<Vec<BigRational>>);

impl fmt::Debug for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.0 {
            let parts: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", parts.join(", "))?;
        }
        Ok(())
    }
}

impl QMat {
    pub fn identity(dim: usize) -> Self {
        QMat((0..dim).map(|i| QVec::axis(dim, i).0).collect())
    }

    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Self {
        QMat(rows.iter().map(|r| QVec::from_ratios(r).0).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        let n = self.dim();
        QMat(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).fold(BigRational::zero(), |s, k| s + &self.0[i][k] * &o.0[k][j]))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn apply(&self, v: &QVec) -> QVec {
        QVec(self.0.iter().map(|row| QVec(row.clone()).dot(v)).collect())
    }

    pub fn transpose(&self) -> QMat {
        let n = self.dim();
        QMat((0..n).map(|i| (0..n).map(|j| self.0[j][i].clone()).collect()).collect())
    }

    pub fn pow(&self, e: usize) -> QMat {
        (0..e).fold(QMat::identity(self.dim()), |acc, _| acc.mul(self))
    }

    pub fn is_orthogonal(&self) -> bool {
        self.mul(&self.transpose()) == QMat::identity(self.dim())
    }

    /// n k⊗k − Id, the matrix attached to a direction.
    pub fn direction_tensor(k: &QVec) -> QMat {
        let n = k.dim();
        let dim = BigRational::from_integer(BigInt::from(n as i64));
        QMat(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let mut v = &dim * &k.0[i] * &k.0[j];
                            if i == j {
                                v -= BigRational::one();
                            }
                            v
                        })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn to_f64(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in self.0.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                out[i][j] = x.to_f64().expect("finite rational");
            }
        }
        out
    }

    pub fn max_abs_entry(&self) -> BigRational {
        self.0.iter().flatten().map(|x| x.abs()).fold(BigRational::zero(), |m, x| if x > m { x } else { m })
    }
}

/// Rotation matrix of the integer quaternion (w, x, y, z), exact.
pub fn quaternion_rotation(w: i64, x: i64, y: i64, z: i64) -> QMat {
    let n = w * w + x * x + y * y + z * z;
    let e = |v: i64| q(v, n);
    QMat(vec![
        vec![e(w * w + x * x - y * y - z * z), e(2 * (x * y - w * z)), e(2 * (x * z + w * y))],
        vec![e(2 * (x * y + w * z)), e(w * w - x * x + y * y - z * z), e(2 * (y * z - w * x))],
        vec![e(2 * (x * z - w * y)), e(2 * (y * z + w * x)), e(w * w - x * x - y * y + z * z)],
    ])
}

/// Planar rotation with cosine m²−n² and sine 2mn over m²+n².
pub fn pythagorean_rotation(m: i64, n: i64) -> QMat {
    let h = m * m + n * n;
    let c = q(m * m - n * n, h);
    let s = q(2 * m * n, h);
    QMat(vec![vec![c.clone(), -s.clone()], vec![s, c]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_orthogonal() {
        assert!(quaternion_rotation(24, 1, 2, 2).is_orthogonal());
        assert!(pythagorean_rotation(3, 2).is_orthogonal());
    }

    #[test]
    fn direction_tensor_of_axis() {
        let f = QMat::direction_tensor(&QVec::axis(3, 0));
        assert_eq!(f, QMat::from_ratios(&[&[(2, 1), (0, 1), (0, 1)], &[(0, 1), (-1, 1), (0, 1)], &[(0, 1), (0, 1), (-1, 1)]]));
    }
}
