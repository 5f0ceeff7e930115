//! Scalar building blocks: a C^∞ step, a C^∞ bump and the cutoff χ.

/// e^{−1/x} for x > 0 and its first two derivatives.
fn f_parts(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / x).exp();
    let x2 = x * x;
    (f, f / x2, f * (1.0 - 2.0 * x) / (x2 * x2))
}

/// C^∞ step S(x) = f(x)/(f(x) + f(1−x)), with S = 0 for x ≤ 0 and S = 1 for
/// x ≥ 1. Returns (S, S', S'').
pub fn step(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = f_parts(x);
    let (b, b1, b2) = f_parts(1.0 - x);
    // the second term is f(1 − x), whose derivatives flip sign once
    let g = a + b;
    let g1 = a1 - b1;
    let g2 = a2 + b2;
    let s = a / g;
    let num1 = a1 * g - a * g1;
    let s1 = num1 / (g * g);
    let s2 = (a2 * g - a * g2) / (g * g) - 2.0 * g1 * num1 / (g * g * g);
    (s, s1, s2)
}

/// χ(z) = 1 + S(z − 1)(z − 1): equal to 1 on [0, 1] and to z on [2, ∞).
pub fn chi(z: f64) -> f64 {
    let (s, _, _) = step(z - 1.0);
    1.0 + s * (z - 1.0)
}

pub fn chi_dz(z: f64) -> f64 {
    let (s, s1, _) = step(z - 1.0);
    s + s1 * (z - 1.0)
}

/// Unnormalized bump exp(−1/(1−s²)) on (−1, 1).
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Midpoint nodes and weights of the normalized bump kernel on (−1, 1).
/// The integrand is C^∞ with compact support, so the rule converges faster
/// than any power of the node count.
pub fn kernel_rule(nodes: usize) -> Vec<(f64, f64)> {
    let h = 2.0 / nodes as f64;
    let raw: Vec<(f64, f64)> = (0..nodes)
        .map(|j| {
            let s = -1.0 + (j as f64 + 0.5) * h;
            (s, bump(s))
        })
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    raw.into_iter().map(|(s, w)| (s, w / total)).collect()
}

/// Fourier transform ∫φ(s) cos(ξs) ds of the normalized bump.
pub fn kernel_transform(rule: &[(f64, f64)], xi: f64) -> f64 {
    rule.iter().map(|(s, w)| w * (xi * s).cos()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_branches() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(3.0), 3.0);
        assert_eq!(chi(2.0), 2.0);
        for k in 1..100 {
            let z = 1.0 + k as f64 / 100.0;
            let c = chi(z);
            assert!(z <= 2.0 * c && 2.0 * c <= 4.0 * z);
        }
    }

    #[test]
    fn step_derivatives_match_differences() {
        let h = 1e-5;
        for k in 1..50 {
            let x = k as f64 / 50.0;
            let (_, d1, d2) = step(x);
            let fd1 = (step(x + h).0 - step(x - h).0) / (2.0 * h);
            let fd2 = (step(x + h).1 - step(x - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 * (1.0 + d1.abs()));
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()));
            let c = (chi(1.0 + x + h) - chi(1.0 + x - h)) / (2.0 * h);
            assert!((chi_dz(1.0 + x) - c).abs() < 1e-7);
        }
    }

    #[test]
    fn kernel_is_normalized_and_even() {
        let rule = kernel_rule(400);
        assert!((rule.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(rule.iter().map(|(s, w)| s * w).sum::<f64>().abs() < 1e-15);
        assert!((kernel_transform(&rule, 0.0) - 1.0).abs() < 1e-14);
        // refining the rule does not move the transform
        let fine = kernel_rule(1600);
        assert!((kernel_transform(&rule, 7.0) - kernel_transform(&fine, 7.0)).abs() < 1e-12);
    }
}
