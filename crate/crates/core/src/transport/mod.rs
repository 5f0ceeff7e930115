//! Flow maps, time cutoffs and intersection measurements for transported
//! pipes.

pub mod decoupling;
pub mod flow;
pub mod partition;

pub use decoupling::{
    lp_decoupling_check, measure_intersection, measure_intersection_with, DecouplingRatio, Deformation, IdentityMap, IntersectionStats,
    SampledMap, ShearMap,
};
pub use flow::{solve_flow, verify_deformation, DeformationReport, FlowMap, Velocity};
pub use partition::{cutoff, cutoff_dt, TimePartition};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{self, Grid, SpectralField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shear_velocity(g: &Grid) -> SpectralField {
        SpectralField::from_fn(g, 1, |x, c| if c == 0 { x[1].sin() } else { 0.0 })
    }

    #[test]
    fn zero_velocity_gives_identity() {
        let g = Grid::new(2, 16).unwrap();
        let zero = SpectralField::zeros(&g, 1);
        let flow = solve_flow(&g, &|_| Ok(zero.clone()), 0.0, 0.3, 0.05).unwrap();
        for a in 0..2 {
            for i in 0..g.len() {
                assert_eq!(flow.phi[a][i], g.point(i)[a]);
                assert_eq!(flow.forward[a][i], g.point(i)[a]);
            }
        }
        let rep = verify_deformation(&flow, 0.5).unwrap();
        assert_eq!(rep.grad_phi, 0.0);
        assert_eq!(rep.rate_phi, 0.0);
    }

    #[test]
    fn shear_matches_closed_form() {
        // x₂ is constant along characteristics, so the stepping is exact
        let g = Grid::new(3, 8).unwrap();
        let v = shear_velocity(&g);
        let t = 0.2;
        let flow = solve_flow(&g, &|_| Ok(v.clone()), 0.0, t, t / 8.0).unwrap();
        for i in 0..g.len() {
            let x = g.point(i);
            assert!((flow.forward[0][i] - (x[0] + t * x[1].sin())).abs() < 1e-8);
            assert!((flow.phi[0][i] - (x[0] - t * x[1].sin())).abs() < 1e-8);
            assert!((flow.phi[1][i] - x[1]).abs() < 1e-8);
        }
        assert!(flow.det_defect().unwrap() < 1e-7);
        assert!(flow.inverse_defect().unwrap() < 1e-7);
    }

    #[test]
    fn shear_deformation_within_ell_and_stretch_flagged() {
        let g = Grid::new(2, 32).unwrap();
        let v = shear_velocity(&g);
        let ell: f64 = 0.1;
        let tau = ell.powi(3);
        let flow = solve_flow(&g, &|_| Ok(v.clone()), 0.0, tau, tau / 8.0).unwrap();
        let rep = verify_deformation(&flow, ell).unwrap();
        assert!((rep.grad_phi - tau).abs() < 1e-10);
        assert!(rep.passed());
        let far = solve_flow(&g, &|_| Ok(v.clone()), 0.0, 100.0 * tau, tau / 8.0 * 100.0).unwrap();
        let rep = verify_deformation(&far, ell).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn random_flow_preserves_volume_and_inverts() {
        let g = Grid::new(2, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let psi = SpectralField::random_band_limited(&g, 0, 4, &mut rng);
        let u0 = spectral::curl(&psi).unwrap();
        let u0 = u0.scale(1.0 / u0.max_abs());
        let psi2 = SpectralField::random_band_limited(&g, 0, 3, &mut rng);
        let u1 = spectral::curl(&psi2).unwrap();
        let u1 = u1.scale(1.0 / u1.max_abs());
        let vel = |t: f64| SpectralField::lincomb(&[(t.cos(), &u0), (t.sin(), &u1)]);
        let tau = 0.05;
        let flow = solve_flow(&g, &vel, 0.3, 0.3 + tau, tau / 16.0).unwrap();
        assert!(flow.det_defect().unwrap() < 1e-6);
        assert!(flow.inverse_defect().unwrap() < 1e-6);
        let back = solve_flow(&g, &vel, 0.3, 0.3 - tau, tau / 16.0).unwrap();
        assert!(back.det_defect().unwrap() < 1e-6);
        assert!(back.inverse_defect().unwrap() < 1e-6);
    }

    #[test]
    fn transported_scalar_constant_along_characteristics() {
        let g = Grid::new(2, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = spectral::curl(&SpectralField::random_band_limited(&g, 0, 3, &mut rng)).unwrap();
        let u = u.scale(1.0 / u.max_abs());
        let flow = solve_flow(&g, &|_| Ok(u.clone()), 0.0, 0.05, 0.05 / 16.0).unwrap();
        // ϑ∘Φ sampled at X(x) recovers ϑ(x)
        let theta = SpectralField::scalar_fn(&g, |x| (2.0 * x[0]).sin() * x[1].cos());
        let transported = spectral::compose(&theta, &flow.phi).unwrap();
        let back = spectral::compose(&transported, &flow.forward).unwrap();
        assert!(spectral::rel_diff(&back, &theta) < 1e-6);
    }

    #[test]
    fn fourth_order_in_step() {
        let g = Grid::new(2, 16).unwrap();
        let u0 = SpectralField::from_fn(&g, 1, |x, c| if c == 0 { x[1].sin() } else { x[0].sin() });
        let vel = |t: f64| Ok(u0.scale(1.0 + t));
        let fine = solve_flow(&g, &vel, 0.0, 0.8, 0.8 / 64.0).unwrap();
        let err = |steps: f64| {
            let f = solve_flow(&g, &vel, 0.0, 0.8, 0.8 / steps).unwrap();
            (0..g.len()).map(|i| (f.forward[0][i] - fine.forward[0][i]).abs()).fold(0.0, f64::max)
        };
        let ratio = err(4.0) / err(8.0);
        assert!(ratio > 12.0, "{ratio}");
    }
}
