//! One line per acceptance criterion. Runs without the libtest harness so
//! that every line is printed; exits non-zero if any criterion fails.

use std::time::Instant;

use alphalab::alpha::{self, taylor_green, AlphaModel};
use alphalab::engine::{conservation_experiment, glue_initial, iterate_step, ToyParams};
use alphalab::geometry::{build_direction_sets, random_traceless, QMat, QVec};
use alphalab::inverse_div::{fourier_inverse_div, iterative_div_step};
use alphalab::lab::{decoupling_sweep, Cell};
use alphalab::ledger::{check_inequalities, entries_at, suggest_parameters};
use alphalab::mikado::PipeFamily;
use alphalab::spectral::{self, Grid, SpectralField};
use alphalab::transport::{solve_flow, verify_deformation};
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// 3k⊗k − Id in exact arithmetic, built here rather than taken from the set.
fn f_of(k: &QVec) -> Vec<Vec<BigRational>> {
    let n = k.0.len();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let id = if a == b { BigRational::one() } else { BigRational::zero() };
                    rat(3, 1) * &k.0[a] * &k.0[b] - id
                })
                .collect()
        })
        .collect()
}

fn max_entry_gap(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3], dim: usize) -> f64 {
    (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| (a[i][j] - b[i][j]).abs()).fold(0.0, f64::max)
}

fn c1_decomposition() -> Outcome {
    let start = Instant::now();
    let set = &build_direction_sets(3, 0).map_err(fail)?[0];
    let eps = set.epsilon();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut min_sq, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let r = random_traceless(3, eps, false, &mut rng);
        let sol = set.decompose(&r).map_err(fail)?;
        if sol.squares.len() != 9 {
            return Err(format!("{} coefficients", sol.squares.len()));
        }
        // reconstruction from the unit vectors themselves
        let mut back = [[0.0; 3]; 3];
        for (i, c) in sol.squares.iter().enumerate() {
            let k = set.vector_f64(i);
            for a in 0..3 {
                for b in 0..3 {
                    back[a][b] += c * (3.0 * k[a] * k[b] - if a == b { 1.0 } else { 0.0 });
                }
            }
        }
        worst = worst.max(max_entry_gap(&back, &r, 3));
        min_sq = sol.squares.iter().copied().fold(min_sq, f64::min);
        let s: f64 = sol.squares.iter().sum();
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("residual {worst:.2e}, min c² {min_sq:.3e}, sum spread {:.2e}, {secs:.2} s", hi - lo);
    ensure(worst <= 1e-10 && min_sq > 0.0 && hi - lo <= 1e-10 && secs < 5.0, msg)
}

fn c2_appendix_matrices() -> Outcome {
    let set = &build_direction_sets(3, 0).map_err(fail)?[0];
    let f1 = QMat::from_ratios(&[&[(2, 1), (0, 1), (0, 1)], &[(0, 1), (-1, 1), (0, 1)], &[(0, 1), (0, 1), (-1, 1)]]);
    let f4 = QMat::from_ratios(&[&[(2, 25), (36, 25), (0, 1)], &[(36, 25), (23, 25), (0, 1)], &[(0, 1), (0, 1), (-1, 1)]]);
    let k4 = QVec::from_ratios(&[(3, 5), (4, 5), (0, 1)]);
    let ok = set.vectors[0] == QVec::axis(3, 0)
        && set.vectors[3] == k4
        && set.tensor(0) == f1
        && set.tensor(3) == f4
        && f_of(&set.vectors[0]) == f1.0
        && f_of(&k4) == f4.0;
    ensure(ok, "f(k1) = diag(2,-1,-1), f(k4) = [[2,36,0],[36,23,0],[0,0,-25]]/25 exactly".into())
}

fn c3_stationarity() -> Outcome {
    let start = Instant::now();
    let model = AlphaModel::new(1.0).map_err(fail)?;
    let mut worst = (0.0f64, 0.0f64);
    for xi in [QVec::axis(3, 2), QVec::from_ratios(&[(3, 5), (4, 5), (0, 1)])] {
        let fam = PipeFamily::new(&xi, 8.0, 0.5, 2).map_err(fail)?;
        let rep = fam.verify_stationarity(256, &model).map_err(fail)?;
        worst = (worst.0.max(rep.euler), worst.1.max(rep.euler_alpha));
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("div(W⊗W) {:.2e}, Euler-alpha {:.2e}, {secs:.2} s", worst.0, worst.1);
    ensure(worst.0 <= 1e-10 && worst.1 <= 1e-6 && secs < 30.0, msg)
}

fn c4_averages() -> Outcome {
    let set = &build_direction_sets(3, 0).map_err(fail)?[0];
    let mut worst = 0.0f64;
    for k in &set.vectors {
        let fam = PipeFamily::new(k, 8.0, 0.5, 2).map_err(fail)?;
        let (m, c) = fam.average_tensor(256usize.max(fam.cell_points(32))).map_err(fail)?;
        let xi = k.to_f64();
        let mut want = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                want[a][b] = 0.5 * c * (if a == b { 1.0 } else { 0.0 } - 3.0 * xi[a] * xi[b]);
            }
        }
        worst = worst.max(max_entry_gap(&m, &want, 3) / c);
    }
    ensure(worst <= 1e-8, format!("nine directions, worst relative error {worst:.2e}"))
}

fn c5_fourier_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (dim, n) in [(3, 64), (2, 128)] {
        let g = Grid::new(dim, n).map_err(fail)?;
        for _ in 0..20 {
            let v = SpectralField::random_band_limited(&g, 1, (n / 2 - 1) as i64, &mut rng);
            let r = fourier_inverse_div(&v).map_err(fail)?;
            let m = r.to_tensor();
            let div = spectral::div(&m).map_err(fail)?;
            let scale = v.max_abs();
            worst.0 = worst.0.max(div.sub(&v.mean_free()).map_err(fail)?.max_abs() / scale);
            let mut asym = 0.0f64;
            for i in 0..dim {
                for j in 0..dim {
                    asym = asym.max(m.entry(i, j).sub(&m.entry(j, i)).map_err(fail)?.max_abs());
                }
            }
            worst.1 = worst.1.max(asym / scale);
            worst.2 = worst.2.max(spectral::trace(&m).map_err(fail)?.max_abs() / scale);
        }
    }
    let msg = format!("Div error {:.2e}, asymmetry {:.2e}, trace {:.2e} (20 fields at 64³ and 128²)", worst.0, worst.1, worst.2);
    ensure(worst.0 <= 1e-12 && worst.1 <= 1e-12 && worst.2 <= 1e-12, msg)
}

const STEP_K: [f64; 2] = [24.0, 8.0];
const STEP_SHEAR: f64 = 0.4;

/// Relative gap between Div R + ∇P + error and G ϱ∘Φ, the latter in
/// closed form.
fn step_reassembly(n: usize) -> Result<f64, String> {
    let (k, t) = (STEP_K, STEP_SHEAR);
    let g = Grid::new(2, n).map_err(fail)?;
    let theta = SpectralField::scalar_fn(&g, |x| (k[0] * x[0]).sin() * (k[1] * x[1]).cos());
    let rho = spectral::laplacian(&theta);
    let gvec = |x: &[f64; 3], c: usize| if c == 0 { x[1].cos().exp() } else { 0.5 * x[0].sin() };
    let gf = SpectralField::from_fn(&g, 1, gvec);
    let pos: Vec<Vec<f64>> = vec![
        (0..g.len()).map(|i| g.point(i)[0] - t * g.point(i)[1].sin()).collect(),
        (0..g.len()).map(|i| g.point(i)[1]).collect(),
    ];
    let out = iterative_div_step(&gf, &rho, &theta, &pos).map_err(fail)?;
    let lhs = SpectralField::from_fn(&g, 1, |x, c| {
        let y0 = x[0] - t * x[1].sin();
        -(k[0] * k[0] + k[1] * k[1]) * (k[0] * y0).sin() * (k[1] * x[1]).cos() * gvec(x, c)
    });
    let total = SpectralField::lincomb(&[
        (1.0, &spectral::div(&out.stress.to_tensor()).map_err(fail)?),
        (1.0, &spectral::grad(&out.pressure).map_err(fail)?),
        (1.0, &out.error),
    ])
    .map_err(fail)?;
    Ok(total.sub(&lhs).map_err(fail)?.max_abs() / lhs.max_abs())
}

fn c6_iterative_step() -> Outcome {
    let coarse = step_reassembly(64)?;
    let fine = step_reassembly(128)?;
    let msg = format!("reassembly {fine:.2e} at 128², {coarse:.2e} at 64², drop {:.1}x", coarse / fine);
    ensure(fine <= 1e-6 && coarse / fine >= 4.0, msg)
}

fn c7_flow_maps() -> Outcome {
    let g = Grid::new(2, 64).map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let u = spectral::curl(&SpectralField::random_band_limited(&g, 0, 4, &mut rng)).map_err(fail)?;
    let u = u.scale(1.0 / u.max_abs());
    let ell: f64 = 0.2;
    let tau = ell.powi(3);
    let t_i = 0.5;
    let vel = |t: f64| Ok(u.scale(1.0 + 0.5 * t.sin()));
    let (mut det, mut inv) = (0.0f64, 0.0f64);
    for s in [-1.0, -0.5, 0.5, 1.0] {
        let flow = solve_flow(&g, &vel, t_i, t_i + s * tau, tau / 16.0).map_err(fail)?;
        det = det.max(flow.det_defect().map_err(fail)?);
        inv = inv.max(flow.inverse_defect().map_err(fail)?);
    }
    // shear (sin x₂, 0): ∇Φ − Id = −t cos x₂ e₁⊗e₂, largest entry t
    let shear = SpectralField::from_fn(&g, 1, |x, c| if c == 0 { x[1].sin() } else { 0.0 });
    let flow = solve_flow(&g, &|_| Ok(shear.clone()), 0.0, tau, tau / 8.0).map_err(fail)?;
    let rep = verify_deformation(&flow, ell).map_err(fail)?;
    let closed = (rep.grad_phi - tau).abs();
    let msg = format!("det {det:.2e}, inverse {inv:.2e}, shear |∇Φ−Id| {:.4e} vs closed form {tau:.4e}", rep.grad_phi);
    ensure(det <= 1e-6 && inv <= 1e-6 && rep.grad_phi <= ell && closed < 1e-10, msg)
}

fn c8_ledger() -> Outcome {
    let start = Instant::now();
    let p = suggest_parameters(3).map_err(fail)?;
    let report = check_inequalities(&p);
    // β from the slacks at β' = 1 and their rates of decrease
    let one = entries_at(&p, &rat(1, 1));
    let two = entries_at(&p, &rat(2, 1));
    let min_slack = one.iter().map(|e| e.slack()).min().unwrap();
    let rate = one.iter().zip(&two).map(|(a, b)| a.slack() - b.slack()).max().unwrap();
    let beta_ok = p.beta == BigRational::one() + min_slack / rate / rat(2, 1);
    let den = p.gamma.denom().clone();
    let dyadic = p.gamma.is_positive() && (&den & (&den - BigInt::one())).is_zero();
    let shape = p.big_gamma == rat(1, 2) && p.b == 601 && p.n_dec == 2 && p.d == 2;
    let mut b2 = p.clone();
    b2.beta = rat(2, 1);
    let f_beta = check_inequalities(&b2).failures();
    let mut n1 = p.clone();
    n1.n_dec = 1;
    let f_ndec = check_inequalities(&n1).failures();
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "b {} N_dec {} d {} beta {} gamma {}; {} rows pass; beta=2 fails {:?}; N_dec=1 fails {:?}; {secs:.3} s",
        p.b,
        p.n_dec,
        p.d,
        p.beta,
        p.gamma,
        report.at_beta.len(),
        f_beta,
        f_ndec
    );
    ensure(
        shape && dyadic && beta_ok && report.passed() && f_beta.contains(&"6") && f_ndec.contains(&"4") && secs < 1.0,
        msg,
    )
}

fn c9_conservation() -> Outcome {
    let g = Grid::new(2, 128).map_err(fail)?;
    let model = AlphaModel::new(0.1).map_err(fail)?;
    let tg = conservation_experiment(&taylor_green(&g, 1.0, [0.0, 0.0]), &model, 1e-2, 1.0).map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = spectral::leray(&SpectralField::random_band_limited(&g, 1, 4, &mut rng)).map_err(fail)?;
    let u = u.scale(3.0 / u.max_abs());
    let h0 = alpha::hamiltonian_quadrature(&u, &model);
    let coarse = conservation_experiment(&u, &model, 1e-3, 1.0).map_err(fail)?;
    let fine = conservation_experiment(&u, &model, 5e-4, 1.0).map_err(fail)?;
    let ratio = coarse.drift / fine.drift;
    let h_agree = (coarse.hamiltonian[0] - h0).abs() / h0;
    let msg = format!(
        "Taylor-Green drift {:.2e}; random drift {:.2e} (dt 1e-3), {:.2e} (dt 5e-4), ratio {ratio:.2}",
        tg.drift, coarse.drift, fine.drift
    );
    ensure(tg.drift <= 1e-10 && coarse.drift <= 1e-8 && (ratio - 16.0).abs() <= 4.8 && h_agree < 1e-12, msg)
}

fn c10_gluing() -> Outcome {
    let g = Grid::new(2, 64).map_err(fail)?;
    let model = AlphaModel::new(0.1).map_err(fail)?;
    let u1 = taylor_green(&g, 1.0, [0.0, 0.0]);
    let u2 = taylor_green(&g, 2.0, [0.7, 0.3]);
    let s = glue_initial(&u1, &u2, 1.0, &model).map_err(fail)?;
    let (mut exact, mut outside, mut worst) = (true, 0.0f64, 0.0f64);
    for k in 0..=200 {
        let t = k as f64 / 200.0;
        let u = s.velocity(t).map_err(fail)?;
        let stress = s.stress(t).map_err(fail)?.max_abs();
        if t <= 0.4 {
            exact &= u.phys_all() == u1.phys_all();
            outside = outside.max(stress);
        } else if t >= 0.6 {
            exact &= u.phys_all() == u2.phys_all();
            outside = outside.max(stress);
        } else {
            worst = worst.max(s.residual(t).map_err(fail)?);
        }
    }
    let h = |v: &SpectralField| alpha::hamiltonian_quadrature(v, &model);
    let h_ok = (h(&s.velocity(0.0).map_err(fail)?) - h(&u1)).abs() == 0.0 && (h(&s.velocity(1.0).map_err(fail)?) - h(&u2)).abs() == 0.0;
    let msg = format!("exact outside window {exact}, stress outside {outside:.1e}, residual {worst:.2e}, endpoint H {h_ok}");
    ensure(exact && outside == 0.0 && worst <= 1e-6 && h_ok && h(&u1) != h(&u2), msg)
}

fn c11_decoupling() -> Outcome {
    let start = Instant::now();
    let table = decoupling_sweep(64.0, &[0.5, 0.25, 0.125], 2, 0.01).map_err(fail)?;
    let num = |c: &Cell| if let Cell::Num(v) = c { *v } else { f64::NAN };
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["straight", "sheared"] {
        let rows: Vec<_> = table.rows.iter().filter(|r| r[0] == Cell::from(name)).collect();
        let scaled: Vec<f64> = rows.iter().map(|r| num(&r[3])).collect();
        let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let ball = rows.iter().map(|r| num(&r[5])).fold(0.0, f64::max);
        ok &= spread <= 2.0 && ball > 0.0 && ball <= 4.0;
        parts.push(format!("{name}: L1/r spread {spread:.3}, max ball·λ³ {ball:.3}"));
    }
    ensure(ok, format!("{}; {:.1} s", parts.join("; "), start.elapsed().as_secs_f64()))
}

fn c12_master_step() -> Outcome {
    let start = Instant::now();
    let g = Grid::new(2, 512).map_err(fail)?;
    let model = AlphaModel::new(0.1).map_err(fail)?;
    let u1 = taylor_green(&g, 1.0, [0.0, 0.0]);
    let u2 = taylor_green(&g, 2.0, [0.7, 0.3]);
    let p = ToyParams::desk();
    let t = 500.0 * p.tau;
    let glued = glue_initial(&u1, &u2, 1.0, &model).map_err(fail)?;
    let res = iterate_step(&glued, &p, t).map_err(fail)?;
    let div = spectral::div(&res.u_next).map_err(fail)?.max_abs() / res.u_next.max_abs();
    let flat = glue_initial(&u1, &u1, 1.0, &model).map_err(fail)?;
    let witness = iterate_step(&flat, &p, t).map_err(fail)?;
    let h_ell = alpha::hamiltonian_quadrature(&witness.u_ell, &model);
    let h_next = alpha::hamiltonian_quadrature(&witness.u_next, &model);
    let change = (h_next - h_ell).abs() / h_ell;
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "λ_(q+1) {}, divergence {div:.2e}, reassembly {:.2e}, R_q = 0 Hamiltonian change {change:.3e}, {secs:.1} s",
        p.lambda_next, res.master_residual
    );
    ensure(div <= 1e-10 && res.master_residual <= 1e-6 && change > 1e-3 && secs < 300.0, msg)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("stress decomposition", c1_decomposition),
        ("exact direction matrices", c2_appendix_matrices),
        ("pipe stationarity", c3_stationarity),
        ("pipe averages", c4_averages),
        ("Fourier inverse divergence", c5_fourier_inverse),
        ("iterative inverse divergence step", c6_iterative_step),
        ("flow maps", c7_flow_maps),
        ("parameter ledger", c8_ledger),
        ("Hamiltonian conservation", c9_conservation),
        ("gluing", c10_gluing),
        ("decoupling scaling", c11_decoupling),
        ("master reassembly", c12_master_step),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let (verdict, detail) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} {verdict} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
