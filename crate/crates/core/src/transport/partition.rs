//! Smooth partition of unity in time with squares summing to one.

use crate::error::{LabError, Result};

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_dt(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        bump(s) * (-2.0 * s / (q * q))
    }
}

/// Σ_j b(s − j)² and Σ_j b b' over the (at most two) overlapping shifts.
fn sums(s: f64) -> (f64, f64) {
    let base = s.floor();
    let mut sq = 0.0;
    let mut cross = 0.0;
    for j in [base - 1.0, base, base + 1.0, base + 2.0] {
        let b = bump(s - j);
        sq += b * b;
        cross += b * bump_dt(s - j);
    }
    (sq, cross)
}

/// Unscaled profile η(s), supported in (−1, 1), with Σ_j η(s − j)² = 1.
pub fn cutoff(s: f64) -> f64 {
    let b = bump(s);
    if b == 0.0 {
        return 0.0;
    }
    b / sums(s).0.sqrt()
}

pub fn cutoff_dt(s: f64) -> f64 {
    let b = bump(s);
    if b == 0.0 {
        return 0.0;
    }
    let (sq, cross) = sums(s);
    bump_dt(s) / sq.sqrt() - b * cross / sq.powf(1.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimePartition {
    tau: f64,
    support: (f64, f64),
}

impl TimePartition {
    /// Cutoffs η_i(t) = η((t − iτ)/τ), kept only when [t_i − τ, t_i + τ]
    /// meets `support`.
    pub fn new(tau: f64, support: (f64, f64)) -> Result<Self> {
        if !(tau > 0.0) || !(support.0 <= support.1) {
            return Err(LabError::InvalidParameter(format!("time partition with tau {tau} on {support:?}")));
        }
        Ok(Self { tau, support })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn center(&self, i: i64) -> f64 {
        i as f64 * self.tau
    }

    pub fn is_active(&self, i: i64) -> bool {
        let t = self.center(i);
        self.support.0 <= t + self.tau && self.support.1 >= t - self.tau
    }

    /// All active indices, in increasing order.
    pub fn active_indices(&self) -> Vec<i64> {
        let lo = (self.support.0 / self.tau).floor() as i64 - 1;
        let hi = (self.support.1 / self.tau).ceil() as i64 + 1;
        (lo..=hi).filter(|&i| self.is_active(i)).collect()
    }

    pub fn eta(&self, i: i64, t: f64) -> f64 {
        if !self.is_active(i) {
            return 0.0;
        }
        cutoff((t - self.center(i)) / self.tau)
    }

    pub fn eta_dt(&self, i: i64, t: f64) -> f64 {
        if !self.is_active(i) {
            return 0.0;
        }
        cutoff_dt((t - self.center(i)) / self.tau) / self.tau
    }

    /// Indices whose cutoff is nonzero at t.
    pub fn active_at(&self, t: f64) -> Vec<i64> {
        let k = (t / self.tau).floor() as i64;
        (k - 1..=k + 2).filter(|&i| self.eta(i, t) != 0.0).collect()
    }

    pub fn sum_squares(&self, t: f64) -> f64 {
        self.active_at(t).iter().map(|&i| self.eta(i, t).powi(2)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_sum_to_one_on_support() {
        let p = TimePartition::new(0.01, (0.2, 0.5)).unwrap();
        for k in 0..1000 {
            let t = 0.2 + 0.3 * (k as f64 + 0.5) / 1000.0;
            assert!((p.sum_squares(t) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn inactive_windows_vanish() {
        let p = TimePartition::new(0.1, (0.35, 0.45)).unwrap();
        assert_eq!(p.active_indices(), vec![3, 4, 5]);
        assert_eq!(p.eta(7, 0.7), 0.0);
        assert_eq!(p.eta(-1, -0.1), 0.0);
    }

    #[test]
    fn overlaps_only_between_neighbours() {
        let p = TimePartition::new(0.05, (0.0, 1.0)).unwrap();
        for k in 0..2000 {
            let t = k as f64 / 2000.0;
            let act = p.active_at(t);
            assert!(act.len() <= 2);
            for a in &act {
                for b in &act {
                    assert!((a - b).abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let p = TimePartition::new(0.1, (0.0, 1.0)).unwrap();
        for k in 1..40 {
            let t = 0.3 + k as f64 * 0.0047;
            let h = 1e-6;
            let fd = (p.eta(4, t + h) - p.eta(4, t - h)) / (2.0 * h);
            assert!((fd - p.eta_dt(4, t)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn derivative_constants_independent_of_tau() {
        // sup |∂_t^m η| τ^m for m ≤ 3 by difference quotients of η'
        let scaled = |tau: f64| {
            let p = TimePartition::new(tau, (0.0, 100.0 * tau)).unwrap();
            let mut c = [0.0f64; 3];
            let h = 1e-4 * tau;
            for k in 0..4000 {
                let t = 10.0 * tau + tau * (k as f64 / 2000.0 - 1.0);
                let d1 = p.eta_dt(10, t);
                let d2 = (p.eta_dt(10, t + h) - p.eta_dt(10, t - h)) / (2.0 * h);
                let d3 = (p.eta_dt(10, t + h) - 2.0 * d1 + p.eta_dt(10, t - h)) / (h * h);
                c[0] = c[0].max(d1.abs() * tau);
                c[1] = c[1].max(d2.abs() * tau * tau);
                c[2] = c[2].max(d3.abs() * tau.powi(3));
            }
            c
        };
        let a = scaled(0.1);
        let b = scaled(0.001);
        for m in 0..3 {
            assert!((a[m] - b[m]).abs() < 1e-2 * a[m], "{m}: {} vs {}", a[m], b[m]);
        }
    }
}
