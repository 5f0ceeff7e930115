//! The `alphalab` subcommands. Each builds a [`Report`]; the exit code is
//! 0 when every check passes, 1 on a failed check or runtime error and 2 on
//! a usage or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alpha::{self, taylor_green, AlphaModel};
use crate::engine::{conservation_experiment, glue_initial, iterate_step, ToyParams};
use crate::error::{LabError, Result};
use crate::geometry::{build_direction_sets, frobenius, random_traceless, QVec};
use crate::inverse_div::fourier_inverse_div;
use crate::ledger::{check_inequalities, suggest_parameters, LedgerReport, ParameterSet};
use crate::mikado::{expected_average, PipeFamily};
use crate::spectral::{self, rel_diff, Grid, SpectralField};
use crate::transport::{measure_intersection, Deformation, IdentityMap, ShearMap};

use super::config::ExperimentConfig;
use super::report::{num, Cell, Report, Table};
use super::snapshot::Snapshot;

#[derive(Debug, Parser)]
#[command(name = "alphalab", version, about = "Desk-scale convex integration experiments for Euler-alpha")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Experiment configuration of `key = value` lines.
    #[arg(long, global = true)]
    pub experiment: Option<PathBuf>,
    /// Where tables, summaries and snapshots go. Beats EAF_OUTPUT_DIR.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationarity and average identity of every pipe of a direction set.
    VerifyPipes(PipeArgs),
    /// Positive decomposition of random traceless stresses.
    DecomposeStress(DecomposeArgs),
    /// Exact check of the exponent inequalities for a parameter file.
    CheckParams(CheckArgs),
    /// Build an admissible parameter set and write it out.
    SuggestParams(SuggestArgs),
    /// Hamiltonian drift of a smooth 2-D solution.
    Conserve(ConserveArgs),
    /// Glue two steady states in time.
    Glue(GlueArgs),
    /// One toy iteration step from the glued state.
    Step(StepArgs),
    /// L¹ norm and crossing geometry of two orthogonal pipes.
    Decouple(DecoupleArgs),
    /// Fourier inverse divergence on random fields.
    InverseDivTest(InverseDivArgs),
}

#[derive(Debug, Args)]
pub struct PipeArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long)]
    pub set: Option<usize>,
    /// Cross-section samples per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub set: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Parameter file; falls back to `params` of the experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitialData {
    TaylorGreen,
    Random,
}

#[derive(Debug, Args)]
pub struct ConserveArgs {
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitialData::Random)]
    pub data: InitialData,
    /// Peak velocity of the random data.
    #[arg(long, default_value_t = 3.0)]
    pub amplitude: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start from a saved velocity instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Largest admissible relative drift.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also run at dt/2 and require a drift ratio of 16 ± 30%.
    #[arg(long)]
    pub halving: bool,
}

#[derive(Debug, Args)]
pub struct GlueArgs {
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// λ_{q+1}.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Glue a state to itself so that the incoming stress vanishes.
    #[arg(long)]
    pub same: bool,
}

#[derive(Debug, Args)]
pub struct DecoupleArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.25, 0.125])]
    pub rs: Vec<f64>,
    /// Shear time of the deformed run.
    #[arg(long, default_value_t = 0.01)]
    pub shear: f64,
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InverseDivArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses argv (program name first), runs the command and prints the
/// summary. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((report, dir)) => {
            print!("{}", report.summary_text());
            println!("artifacts in {}", dir.display());
            if report.passed {
                0
            } else {
                1
            }
        }
        Err(e @ LabError::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command and writes its artifacts.
pub fn execute(cli: &Cli) -> Result<(Report, PathBuf)> {
    let cfg = match &cli.experiment {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let dir = cli.output_dir.clone().unwrap_or_else(|| cfg.output_dir());
    let report = match &cli.command {
        Command::VerifyPipes(a) => verify_pipes(a, &cfg)?,
        Command::DecomposeStress(a) => decompose_stress(a, &cfg)?,
        Command::CheckParams(a) => check_params(a, &cfg)?,
        Command::SuggestParams(a) => suggest_params(a, &dir)?,
        Command::Conserve(a) => conserve(a, &cfg, &dir)?,
        Command::Glue(a) => glue(a, &cfg, &dir)?,
        Command::Step(a) => step(a, &cfg, &dir)?,
        Command::Decouple(a) => decouple(a, &cfg)?,
        Command::InverseDivTest(a) => inverse_div_test(a, &cfg)?,
    };
    report.emit(&dir)?;
    Ok((report, dir))
}

fn dimension(dim: usize) -> Result<usize> {
    if dim == 2 || dim == 3 {
        Ok(dim)
    } else {
        Err(LabError::Config(format!("dimension must be 2 or 3, got {dim}")))
    }
}

fn verify_pipes(a: &PipeArgs, cfg: &ExperimentConfig) -> Result<Report> {
    let dim = dimension(a.dim)?;
    let lambda = a.lambda.or(cfg.lambda).unwrap_or(8.0);
    let r = a.r.or(cfg.r).unwrap_or(0.5);
    let d = a.d.or(cfg.d).unwrap_or(2);
    let model = AlphaModel::new(a.alpha.or(cfg.alpha).unwrap_or(1.0))?;
    let n = a.resolution.or(cfg.resolution).unwrap_or(256);
    let index = a.set.or(cfg.direction_set).unwrap_or(0);
    let set = build_direction_sets(dim, index)?.pop().expect("index + 1 sets");
    let mut rep = Report::new();
    rep.line(format!("direction set {index}, dim {dim}, lambda {lambda}, r {r}, d {d}, alpha {}", model.alpha()));
    let mut stat = Table::new("stationarity", &["k", "xi1", "xi2", "xi3", "div_ww", "euler_alpha"]);
    let mut avg = Table::new("averages", &["k", "normalization", "relative_error"]);
    for (i, k) in set.vectors.iter().enumerate() {
        let fam = PipeFamily::new(k, lambda, r, d)?;
        let xi = k.to_f64();
        let s = fam.verify_stationarity(n.max(fam.cell_points(16)), &model)?;
        stat.push(vec![i.into(), xi[0].into(), xi[1].into(), xi[2].into(), s.euler.into(), s.euler_alpha.into()]);
        rep.check(&format!("k{} div(W⊗W)", i + 1), s.euler <= 1e-10, num(s.euler));
        rep.check(&format!("k{} Euler-alpha balance", i + 1), s.euler_alpha <= 1e-6, num(s.euler_alpha));
        let (m, c) = fam.average_tensor(n.max(fam.cell_points(32)))?;
        let e = expected_average(dim, &xi, c);
        let err = (0..dim)
            .flat_map(|p| (0..dim).map(move |q| (p, q)))
            .map(|(p, q)| (m[p][q] - e[p][q]).abs())
            .fold(0.0, f64::max)
            / c;
        avg.push(vec![i.into(), c.into(), err.into()]);
        rep.check(&format!("k{} average identity", i + 1), err <= 1e-8, num(err));
    }
    rep.tables = vec![stat, avg];
    Ok(rep)
}

fn decompose_stress(a: &DecomposeArgs, cfg: &ExperimentConfig) -> Result<Report> {
    let dim = dimension(a.dim)?;
    let index = a.set.or(cfg.direction_set).unwrap_or(0);
    let set = build_direction_sets(dim, index)?.pop().expect("index + 1 sets");
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.or(cfg.seed).unwrap_or(7));
    let eps = set.epsilon();
    let mut table = Table::new("decomposition", &["sample", "norm", "residual", "min_square", "sum"]);
    let (mut worst, mut min_sq, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..a.samples {
        let r = random_traceless(dim, eps, false, &mut rng);
        let sol = set.decompose(&r)?;
        let back = set.reconstruct(&sol.squares);
        let res = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| (back[i][j] - r[i][j]).abs()).fold(0.0, f64::max);
        let m = sol.squares.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = sol.squares.iter().sum();
        table.push(vec![s.into(), frobenius(dim, &r).into(), res.into(), m.into(), sum.into()]);
        worst = worst.max(res);
        min_sq = min_sq.min(m);
        lo = lo.min(sum);
        hi = hi.max(sum);
    }
    let mut rep = Report::new();
    rep.line(format!("{} samples in the ball of radius {} ({} directions)", a.samples, num(eps), set.len()));
    rep.check("reconstruction", worst <= 1e-10, num(worst));
    rep.check("positivity", min_sq > 0.0, format!("min square {}", num(min_sq)));
    let spread = if a.samples > 0 { hi - lo } else { 0.0 };
    rep.check("coefficient sum spread", spread <= 1e-10, num(spread));
    rep.tables.push(table);
    Ok(rep)
}

fn ledger_table(report: &LedgerReport) -> Table {
    let mut t = Table::new("ledger", &["id", "lhs", "rhs", "slack", "status"]);
    for e in &report.at_beta {
        let status = if e.holds() { "PASS" } else { "FAIL" };
        t.push(vec![e.id.into(), e.lhs.to_string().into(), e.rhs.to_string().into(), e.slack().to_string().into(), status.into()]);
    }
    t
}

fn ledger_report(p: &ParameterSet) -> Report {
    let lr = check_inequalities(p);
    let mut rep = Report::new();
    rep.summary.extend(lr.to_string().lines().map(String::from));
    let failures = lr.failures();
    rep.check("inequalities", failures.is_empty(), if failures.is_empty() { "all hold".to_string() } else { format!("violated: {}", failures.join(", ")) });
    rep.tables.push(ledger_table(&lr));
    rep
}

fn check_params(a: &CheckArgs, cfg: &ExperimentConfig) -> Result<Report> {
    let path = a
        .config
        .clone()
        .or_else(|| cfg.params.clone())
        .ok_or_else(|| LabError::Config("check-params needs --config <parameter file>".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    let p = ParameterSet::parse(&text).map_err(|e| match e {
        LabError::InvalidParameter(m) | LabError::ParameterCondition(m) => LabError::Config(m),
        e => e,
    })?;
    Ok(ledger_report(&p))
}

fn suggest_params(a: &SuggestArgs, dir: &Path) -> Result<Report> {
    let p = suggest_parameters(dimension(a.dim)?)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("params.cfg"), p.to_string())?;
    let mut rep = Report::new();
    rep.summary.extend(p.to_string().lines().map(String::from));
    let inner = ledger_report(&p);
    rep.summary.extend(inner.summary);
    rep.passed &= inner.passed;
    rep.tables = inner.tables;
    Ok(rep)
}

fn conserve(a: &ConserveArgs, cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    let model = AlphaModel::new(a.alpha.or(cfg.alpha).unwrap_or(0.1))?;
    let dt = a.dt.or(cfg.dt).unwrap_or(1e-3);
    let t_final = a.t_final.or(cfg.t_final).unwrap_or(1.0);
    let u0 = match &a.input {
        Some(p) => Snapshot::load(p)?.field,
        None => {
            let g = Grid::new(2, a.resolution.or(cfg.resolution).unwrap_or(128))?;
            match a.data {
                InitialData::TaylorGreen => taylor_green(&g, 1.0, [0.0, 0.0]),
                InitialData::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.or(cfg.seed).unwrap_or(7));
                    let u = spectral::leray(&SpectralField::random_band_limited(&g, 1, 4, &mut rng))?;
                    u.scale(a.amplitude / u.max_abs())
                }
            }
        }
    };
    std::fs::create_dir_all(dir)?;
    Snapshot::new(u0.clone(), 0.0).save(&dir.join("initial.eafs"))?;
    let run = conservation_experiment(&u0, &model, dt, t_final)?;
    let mut table = Table::new("hamiltonian", &["t", "H"]);
    for (t, h) in run.times.iter().zip(&run.hamiltonian) {
        table.push(vec![(*t).into(), (*h).into()]);
    }
    let mut rep = Report::new();
    rep.line(format!("n {}, alpha {}, dt {dt}, t_final {t_final}", u0.grid().n(), model.alpha()));
    rep.check("drift", run.drift <= a.tol, format!("{} (tolerance {})", num(run.drift), num(a.tol)));
    rep.tables.push(table);
    if a.halving {
        let half = conservation_experiment(&u0, &model, dt / 2.0, t_final)?;
        let ratio = run.drift / half.drift;
        rep.check("dt-halving ratio", (ratio - 16.0).abs() <= 0.3 * 16.0, format!("{} / {} = {}", num(run.drift), num(half.drift), num(ratio)));
    }
    Ok(rep)
}

fn glue(a: &GlueArgs, cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    let g = Grid::new(2, a.resolution.or(cfg.resolution).unwrap_or(64))?;
    let model = AlphaModel::new(a.alpha.or(cfg.alpha).unwrap_or(0.1))?;
    let t_final = a.t_final.or(cfg.t_final).unwrap_or(1.0);
    let u1 = taylor_green(&g, 1.0, [0.0, 0.0]);
    let u2 = taylor_green(&g, 2.0, [0.7, 0.3]);
    let s = glue_initial(&u1, &u2, t_final, &model)?;
    let (lo, hi) = s.support();
    let mut table = Table::new("glue", &["t", "H", "stress_max", "residual"]);
    let (mut exact, mut outside, mut worst) = (true, 0.0f64, 0.0f64);
    for k in 0..=100 {
        let t = t_final * k as f64 / 100.0;
        let u = s.velocity(t)?;
        let stress = s.stress(t)?.max_abs();
        let res = if t > lo && t < hi { s.residual(t)? } else { 0.0 };
        if t <= lo {
            exact &= u.phys_all() == u1.phys_all();
        }
        if t >= hi {
            exact &= u.phys_all() == u2.phys_all();
        }
        if t <= lo || t >= hi {
            outside = outside.max(stress);
        }
        worst = worst.max(res);
        table.push(vec![t.into(), alpha::hamiltonian(&u, &model).into(), stress.into(), res.into()]);
    }
    std::fs::create_dir_all(dir)?;
    Snapshot::new(s.velocity(0.5 * t_final)?, 0.5 * t_final).save(&dir.join("glued_mid.eafs"))?;
    let mut rep = Report::new();
    rep.check("endpoint states", exact, "bitwise equal outside the transition");
    rep.check("stress support", outside == 0.0, format!("max outside [{lo}, {hi}] = {}", num(outside)));
    rep.check("relaxed residual", worst <= 1e-6, num(worst));
    let (h1, h2) = (alpha::hamiltonian(&u1, &model), alpha::hamiltonian(&u2, &model));
    let ok = s.hamiltonian(0.0)? == h1 && s.hamiltonian(t_final)? == h2;
    rep.check("endpoint Hamiltonians", ok, format!("{} and {}", num(h1), num(h2)));
    rep.tables.push(table);
    Ok(rep)
}

fn step(a: &StepArgs, cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    let g = Grid::new(2, a.resolution.or(cfg.resolution).unwrap_or(512))?;
    let model = AlphaModel::new(a.alpha.or(cfg.alpha).unwrap_or(0.1))?;
    let mut p = ToyParams::desk();
    p.lambda_next = a.lambda.or(cfg.lambda).unwrap_or(p.lambda_next);
    p.r = a.r.or(cfg.r).unwrap_or(p.r);
    p.lambda_after = p.lambda_after.max(16.0 * p.lambda_next);
    let u1 = taylor_green(&g, 1.0, [0.0, 0.0]);
    let u2 = if a.same { u1.clone() } else { taylor_green(&g, 2.0, [0.7, 0.3]) };
    let s = glue_initial(&u1, &u2, 1.0, &model)?;
    // a cutoff center, where a single flow map is the identity
    let t = (0.5 / p.tau).round() * p.tau;
    let res = iterate_step(&s, &p, t)?;
    std::fs::create_dir_all(dir)?;
    Snapshot::new(res.u_next.clone(), t).save(&dir.join("u_next.eafs"))?;
    let mut table = Table::new("step", &["quantity", "value"]);
    let rows: [(&str, f64); 9] = [
        ("master_residual", res.master_residual),
        ("mollified_residual", res.mollified_residual),
        ("divergence", res.divergence),
        ("hamiltonian_q", res.hamiltonian_q),
        ("hamiltonian_ell", res.hamiltonian_ell),
        ("hamiltonian_next", res.hamiltonian_next),
        ("ball_ratio", res.ball_ratio),
        ("type_one", res.type_one),
        ("perturbation_max", res.perturbation.w.max_abs()),
    ];
    for (k, v) in rows {
        table.push(vec![Cell::from(k), v.into()]);
    }
    let mut rep = Report::new();
    rep.line(format!("t = {t}, active cutoffs {:?}, lambda_next {}, r {}", res.active, p.lambda_next, p.r));
    rep.check("divergence free", res.divergence <= 1e-10, num(res.divergence));
    rep.check("stress reassembly", res.master_residual <= 1e-6, num(res.master_residual));
    if a.same {
        let gap = (res.hamiltonian_next - res.hamiltonian_ell).abs() / res.hamiltonian_ell;
        rep.check("Hamiltonian changes", gap > 1e-3, format!("relative change {}", num(gap)));
    }
    rep.tables.push(table);
    Ok(rep)
}

/// L¹ over r of two orthogonal axis pipes and the largest crossing volume,
/// straight and under a short shear.
pub fn decoupling_sweep(lambda: f64, rs: &[f64], d: usize, shear: f64) -> Result<Table> {
    let mut t = Table::new("decoupling", &["map", "r", "l1", "l1_over_r", "blobs", "ball_ratio"]);
    let id = IdentityMap(3);
    let sheared = ShearMap { dim: 3, t: shear };
    let maps: [(&str, &dyn Deformation); 2] = [("straight", &id), ("sheared", &sheared)];
    for (name, map) in maps {
        for &r in rs {
            let p1 = PipeFamily::new(&QVec::axis(3, 0), lambda, r, d)?;
            let p2 = PipeFamily::new(&QVec::axis(3, 1), lambda, r, d)?;
            let s = measure_intersection((&p1, map), (&p2, map), &|_| 1.0)?;
            t.push(vec![name.into(), r.into(), s.l1.into(), (s.l1 / r).into(), s.blobs.into(), s.ball_ratio.into()]);
        }
    }
    Ok(t)
}

fn decouple(a: &DecoupleArgs, cfg: &ExperimentConfig) -> Result<Report> {
    let lambda = a.lambda.or(cfg.lambda).unwrap_or(64.0);
    let table = decoupling_sweep(lambda, &a.rs, a.d.or(cfg.d).unwrap_or(2), a.shear)?;
    let mut rep = Report::new();
    for name in ["straight", "sheared"] {
        let rows: Vec<&Vec<Cell>> = table.rows.iter().filter(|r| r[0] == Cell::from(name)).collect();
        let val = |r: &Vec<Cell>, i: usize| match r[i] {
            Cell::Num(v) => v,
            _ => f64::NAN,
        };
        let scaled: Vec<f64> = rows.iter().map(|r| val(r, 3)).collect();
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        rep.check(&format!("{name} L1/r spread"), hi / lo <= 2.0, format!("max/min = {}", num(hi / lo)));
        let balls = rows.iter().map(|r| val(r, 5)).fold(0.0, f64::max);
        rep.check(&format!("{name} crossing volume"), balls > 0.0 && balls <= 4.0, format!("max volume·λ³ = {}", num(balls)));
    }
    rep.tables.push(table);
    Ok(rep)
}

fn inverse_div_test(a: &InverseDivArgs, cfg: &ExperimentConfig) -> Result<Report> {
    let dim = dimension(a.dim)?;
    let n = a.resolution.or(cfg.resolution).unwrap_or(if dim == 3 { 64 } else { 128 });
    let g = Grid::new(dim, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.or(cfg.seed).unwrap_or(7));
    let mut table = Table::new("inverse_div", &["sample", "divergence_error", "trace_defect"]);
    let (mut worst_div, mut worst_tr) = (0.0f64, 0.0f64);
    for s in 0..a.count {
        let v = SpectralField::random_band_limited(&g, 1, (n / 2 - 1) as i64, &mut rng);
        let r = fourier_inverse_div(&v)?;
        let e = rel_diff(&r.div(), &v.mean_free());
        let tr = r.trace_defect();
        table.push(vec![s.into(), e.into(), tr.into()]);
        worst_div = worst_div.max(e);
        worst_tr = worst_tr.max(tr);
    }
    let mut rep = Report::new();
    rep.line(format!("{} fields on {n}^{dim}", a.count));
    rep.check("Div R = v - mean", worst_div <= 1e-12, num(worst_div));
    rep.check("traceless", worst_tr <= 1e-12, num(worst_tr));
    rep.tables.push(table);
    Ok(rep)
}
