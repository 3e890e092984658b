use std::fmt::Write as _;

use mfgfb::analysis::{convergence_study, regularity_report, ReportOptions, Side};
use mfgfb::lagrangian::{
    continuation_solve, initial_guess, newton_solve, ConvergenceTrace, FlowField, Mesh, SolverConfig,
};
use mfgfb::oracle::SelfSimilarSolution;
use mfgfb::problem::validate_initial_pressure;
use mfgfb::transforms::{
    build_radial_chart, compute_z, weighted_weak_residual, RadialSolution, TestFunction, CHART_NODES,
};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::config::{self, RunProblem};
use crate::io::{num, Artifacts, Table};
use crate::{Cli, CliError, Command};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Oracle { theta, big_r, t0, t1 } => oracle(cli, *theta, *big_r, *t0, *t1),
        Command::Solve => solve(cli, &problem(cli)?),
        Command::Transforms => transforms(cli, &problem(cli)?),
        Command::Report => report(cli, &problem(cli)?),
        Command::Convergence => convergence(cli, &problem(cli)?),
        Command::Validate => validate(cli, &problem(cli)?),
    }
}

fn problem(cli: &Cli) -> Result<RunProblem, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Invalid("this subcommand needs --config".into()))?;
    config::load(path)
}

fn mesh(cli: &Cli, run: &RunProblem) -> Result<Mesh, CliError> {
    match cli.mesh {
        Some((n, m)) => run.mesh(n, m),
        None => run.default_mesh(),
    }
}

/// `count` meshes ending at `finest`, coarsest first.
fn ladder(finest: Mesh, count: usize) -> Result<Vec<Mesh>, CliError> {
    if count == 0 {
        return Err(CliError::Invalid("--levels must be at least 1".into()));
    }
    let mut out = vec![finest];
    for _ in 1..count {
        out.push(out.last().unwrap().coarsened()?);
    }
    out.reverse();
    Ok(out)
}

fn finish(art: Artifacts, command: &str, summary: String) -> Result<(), CliError> {
    let mut art = art;
    print!("{summary}");
    art.write("summary.txt", summary.into_bytes())?;
    art.finish(command)?;
    Ok(())
}

fn oracle(cli: &Cli, theta: f64, big_r: Option<f64>, t0: f64, t1: f64) -> Result<(), CliError> {
    let s = match big_r {
        Some(r) => SelfSimilarSolution::new(theta, r)?,
        None => SelfSimilarSolution::unit_mass(theta)?,
    };
    if !(t0 > 0.0 && t1 > t0) {
        return Err(CliError::Invalid(format!("need 0 < t0 < t1, got {t0}, {t1}")));
    }
    let (nx, nt) = cli.mesh.unwrap_or((201, 101));
    if nx < 2 || nt < 2 {
        return Err(CliError::Invalid("oracle grid needs at least 2x2 points".into()));
    }
    let mut art = Artifacts::open(&cli.out, cli.force)?;
    let half = 1.25 * s.half_width(t1);
    let mut fields = Table::new(&["x", "t", "m", "p", "u", "ux"]);
    let mut curve = Table::new(&["t", "left", "right"]);
    for j in 0..nt {
        let t = t0 + (t1 - t0) * j as f64 / (nt - 1) as f64;
        for k in 0..nx {
            let x = -half + 2.0 * half * k as f64 / (nx - 1) as f64;
            fields.nums(&[x, t, s.density(x, t)?, s.pressure(x, t)?, s.value(x, t)?, s.value_dx(x, t)?]);
        }
        let (l, r) = s.free_boundary(t)?;
        curve.nums(&[t, l, r]);
    }
    art.table("oracle.csv", fields)?;
    art.table("free_boundary.csv", curve)?;

    #[derive(Serialize)]
    struct Params {
        theta: f64,
        height: f64,
        nu: f64,
        edge_coeff: f64,
        mass: f64,
        t0: f64,
        t1: f64,
    }
    let params = Params {
        theta,
        height: s.height(),
        nu: s.nu(),
        edge_coeff: s.edge_coeff(),
        mass: s.mass(t0),
        t0,
        t1,
    };
    art.json("oracle.json", &params)?;
    let summary = format!(
        "oracle: theta {theta}, R {}, nu {:.6}, support [-{:.6}, {:.6}] at t0, {nx}x{nt} samples\n",
        s.height(),
        s.nu(),
        s.half_width(t0),
        s.half_width(t0)
    );
    finish(art, "oracle", summary)
}

/// Interior nodes shifted by at most a tenth of the narrowest neighbouring gap.
fn perturbed_guess(run: &RunProblem, mesh: &Mesh, seed: u64) -> Result<FlowField, CliError> {
    let base = initial_guess(&run.problem, mesh)?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let (ny, nt) = (mesh.ny(), mesh.nt());
    let mut v = base.values().to_vec();
    for j in 1..nt {
        let gap = base.slice(j).windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        for i in 1..ny - 1 {
            v[mesh.idx(i, j)] += 0.1 * gap * rng.gen_range(-1.0..1.0);
        }
    }
    Ok(FlowField::new(mesh.clone(), v)?)
}

fn solver_config(cli: &Cli, run: &RunProblem) -> SolverConfig {
    let mut cfg = run.solver;
    if let Some(k) = cli.levels {
        cfg.continuation_levels = k;
    }
    cfg
}

fn field_table(field: &FlowField, theta: f64) -> Table {
    let mesh = field.mesh();
    let mut t = Table::new(&["y", "t", "gamma", "gamma_y", "Z"]);
    for (j, &tj) in mesh.t().iter().enumerate() {
        let gy = field.gamma_y_nodes(j);
        for (i, &y) in mesh.y().iter().enumerate() {
            t.nums(&[y, tj, field.gamma(i, j), gy[i], gy[i].powf(-(theta + 1.0))]);
        }
    }
    t
}

fn trace_table(trace: &ConvergenceTrace) -> Table {
    let mut t = Table::new(&["level", "iteration", "residual", "step", "min_slope", "max_slope"]);
    for r in &trace.records {
        t.row(&[
            r.level.to_string(),
            r.iteration.to_string(),
            num(r.residual),
            num(r.step),
            num(r.min_slope),
            num(r.max_slope),
        ]);
    }
    t
}

#[derive(Serialize)]
struct SolveSummary {
    converged: bool,
    iterations: usize,
    final_residual: f64,
    /// Smallest and largest cell slope `γ_y` of the returned field.
    slope_min: f64,
    slope_max: f64,
    ny: usize,
    nt: usize,
    theta: f64,
    solver: SolverConfig,
    seed: Option<u64>,
    error: Option<String>,
}

fn solve_field(cli: &Cli, run: &RunProblem, mesh: &Mesh) -> mfgfb::Result<(FlowField, ConvergenceTrace)> {
    let cfg = solver_config(cli, run);
    match cli.seed {
        Some(seed) => {
            let guess = perturbed_guess(run, mesh, seed).map_err(|e| mfgfb::Error::Input(format!("{e:?}")))?;
            newton_solve(&run.problem, &cfg, guess)
        }
        None => continuation_solve(&run.problem, &cfg, mesh),
    }
}

fn solve(cli: &Cli, run: &RunProblem) -> Result<(), CliError> {
    let mesh = mesh(cli, run)?;
    let cfg = solver_config(cli, run);
    cfg.validate()?;
    let theta = run.problem.theta();
    let outcome = solve_field(cli, run, &mesh);
    let (field, trace, error) = match outcome {
        Ok((f, t)) => (f, t, None),
        Err(e) if e.is_solver_failure() => {
            let field = e.last_iterate().cloned().expect("solver failures carry the iterate");
            let trace = e.trace().cloned().unwrap_or_default();
            (field, trace, Some(e))
        }
        Err(e) => return Err(e.into()),
    };
    let mut art = Artifacts::open(&cli.out, cli.force)?;
    art.table("trace.csv", trace_table(&trace))?;
    art.table("field.csv", field_table(&field, theta))?;
    let (lo, hi) = field.slope_bounds();
    let summary = SolveSummary {
        converged: error.is_none(),
        iterations: trace.iterations(),
        final_residual: trace.last_residual(),
        slope_min: lo,
        slope_max: hi,
        ny: field.mesh().ny(),
        nt: field.mesh().nt(),
        theta,
        solver: cfg,
        seed: cli.seed,
        error: error.as_ref().map(|e| e.to_string()),
    };
    art.json("summary.json", &summary)?;
    let text = format!(
        "solve: {}x{} mesh, {} newton iterations, residual {:.3e}, slopes in [{:.4e}, {:.4e}]{}\n",
        summary.ny,
        summary.nt,
        summary.iterations,
        summary.final_residual,
        lo,
        hi,
        if error.is_some() { ", NOT CONVERGED" } else { "" }
    );
    finish(art, "solve", text)?;
    match error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn transforms(cli: &Cli, run: &RunProblem) -> Result<(), CliError> {
    let prob = &run.problem;
    let b = prob.support_len();
    let r0 = run.chart_radius.unwrap_or(b.sqrt());
    let chart = build_radial_chart(&prob.initial, &prob.coupling, r0, CHART_NODES)?;
    let meshes = ladder(mesh(cli, run)?, cli.levels.unwrap_or(3))?;
    let tests = [
        ("axis", TestFunction::axis(r0, prob.window)),
        ("annulus", TestFunction::annulus(0.25 * r0, 0.75 * r0, prob.window)),
    ];
    let mut residuals = Vec::new();
    for (level, m) in meshes.iter().enumerate() {
        let (field, _) = continuation_solve(prob, &run.solver, m)?;
        let z = RadialSolution::Grid(compute_z(&field, &prob.coupling));
        for (name, test) in &tests {
            residuals.push((*name, level + 1, weighted_weak_residual(&chart, &z, test)?));
        }
    }
    let mut art = Artifacts::open(&cli.out, cli.force)?;
    let mut ct = Table::new(&["r", "W", "A", "D", "omega0"]);
    for k in 0..chart.r.len() {
        ct.nums(&[chart.r[k], chart.w[k], chart.a[k], chart.d[k], chart.omega0[k]]);
    }
    art.table("chart.csv", ct)?;
    let mut wt = Table::new(&["test", "level", "residual"]);
    for (name, level, r) in &residuals {
        wt.row(&[name.to_string(), level.to_string(), num(*r)]);
    }
    art.table("weak_residuals.csv", wt)?;

    #[derive(Serialize)]
    struct ChartSummary {
        r0: f64,
        effective_dim: f64,
        bounds: mfgfb::transforms::ChartBounds,
        smoothed_second_derivative: bool,
        levels: Vec<(usize, usize)>,
    }
    art.json(
        "transforms.json",
        &ChartSummary {
            r0,
            effective_dim: chart.effective_dim(),
            bounds: chart.bounds,
            smoothed_second_derivative: chart.d_smoothed,
            levels: meshes.iter().map(|m| (m.ny(), m.nt())).collect(),
        },
    )?;
    let mut text = format!("transforms: chart radius {r0:.6}, N = {:.6}\n", chart.effective_dim());
    for (name, level, r) in &residuals {
        let _ = writeln!(text, "  {name} level {level}: {r:.6e}");
    }
    finish(art, "transforms", text)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn report(cli: &Cli, run: &RunProblem) -> Result<(), CliError> {
    let mesh = mesh(cli, run)?;
    let (field, _) = solve_field(cli, run, &mesh)?;
    let rep = regularity_report(&field, &run.problem, &ReportOptions::default())?;
    let mut art = Artifacts::open(&cli.out, cli.force)?;

    let mut fb = Table::new(&["t", "left", "right", "left_dd", "right_dd"]);
    for r in &rep.curves {
        fb.row(&[num(r.t), num(r.left), num(r.right), opt(r.left_dd), opt(r.right_dd)]);
    }
    art.table("fb_curves.csv", fb)?;

    let mut rates = Table::new(&["quantity", "exponent", "r2", "band"]);
    let band = |f: &mfgfb::analysis::RateFit| f.target.map(|t| format!("{}..{}", t.lo, t.hi)).unwrap_or_default();
    for r in &rep.pressure_rates {
        let side = match r.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        rates.row(&[format!("pressure_{side}@{}", num(r.t)), num(r.fit.exponent), num(r.fit.r_squared), band(&r.fit)]);
    }
    if let Some(f) = &rep.value_gradient {
        rates.row(&["value_gradient".into(), num(f.exponent), num(f.r_squared), band(f)]);
    }
    if let Some(e) = &rep.effective_dimension {
        let band = format!("{}..{}", 0.99 * e.expected, 1.01 * e.expected);
        rates.row(&["weight_slope".into(), num(e.fitted), String::new(), band]);
    }
    art.table("rates.csv", rates)?;

    let mut res = Table::new(&["quantity", "value"]);
    let rows = [
        ("acceleration_left", rep.acceleration.left),
        ("acceleration_right", rep.acceleration.right),
        ("mass_relation", rep.mass_relation),
        ("hj", rep.pde.hj),
        ("continuity", rep.pde.continuity),
        ("hj_without_collar", rep.pde_without_collar.hj),
        ("continuity_without_collar", rep.pde_without_collar.continuity),
        ("lipschitz_x", rep.sharpness.lipschitz_x),
        ("lipschitz_t", rep.sharpness.lipschitz_t),
        ("boundary_second_difference", rep.sharpness.second_difference),
        ("interface_jump", rep.interface_jump),
        ("mixed_path", rep.mixed_path),
        ("round_trip", rep.round_trip),
    ];
    for (name, v) in rows {
        res.row(&[name.into(), num(v)]);
    }
    art.table("residuals.csv", res)?;
    art.json("report.json", &rep)?;

    let pmin = rep.pressure_rates.iter().map(|r| r.fit.exponent).fold(f64::INFINITY, f64::min);
    let pmax = rep.pressure_rates.iter().map(|r| r.fit.exponent).fold(f64::NEG_INFINITY, f64::max);
    let mut text = format!(
        "report: {}x{} mesh, window [{}, {}]\n  acceleration residual {:.3e}, mass relation {:.3e}\n  hj {:.3e}, continuity {:.3e} (collar {})\n  pressure exponents in [{pmin:.4}, {pmax:.4}]\n",
        mesh.ny(),
        mesh.nt(),
        run.problem.window.0,
        run.problem.window.1,
        rep.acceleration.max(),
        rep.mass_relation,
        rep.pde.hj,
        rep.pde.continuity,
        rep.pde.collar
    );
    if let Some(f) = &rep.value_gradient {
        let _ = writeln!(text, "  value-gradient exponent {:.4} (r2 {:.5})", f.exponent, f.r_squared);
    }
    if let Some(e) = &rep.effective_dimension {
        let _ = writeln!(text, "  weight slope {:.4}, expected {:.4}", e.fitted, e.expected);
    }
    finish(art, "report", text)
}

fn convergence(cli: &Cli, run: &RunProblem) -> Result<(), CliError> {
    let meshes = ladder(mesh(cli, run)?, cli.levels.unwrap_or(3))?;
    let table = convergence_study(&run.problem, &run.solver, &meshes)?;
    let mut art = Artifacts::open(&cli.out, cli.force)?;
    let mut lt = Table::new(&[
        "ny", "nt", "gamma_linf", "gamma_l2", "gamma_rel", "p_linf", "p_l2", "ux_linf", "ux_l2", "newton_iterations",
    ]);
    for l in &table.levels {
        lt.row(&[
            l.ny.to_string(),
            l.nt.to_string(),
            num(l.gamma.linf),
            num(l.gamma.l2),
            num(l.gamma_rel),
            num(l.pressure.linf),
            num(l.pressure.l2),
            num(l.velocity.linf),
            num(l.velocity.l2),
            l.newton_iterations.to_string(),
        ]);
    }
    art.table("convergence.csv", lt)?;
    let mut ot = Table::new(&["from", "to", "gamma_linf", "gamma_l2", "p_linf", "p_l2", "ux_linf", "ux_l2"]);
    for (k, o) in table.orders.iter().enumerate() {
        ot.row(&[
            table.levels[k].ny.to_string(),
            table.levels[k + 1].ny.to_string(),
            num(o.gamma_linf),
            num(o.gamma_l2),
            num(o.pressure_linf),
            num(o.pressure_l2),
            num(o.velocity_linf),
            num(o.velocity_l2),
        ]);
    }
    art.table("orders.csv", ot)?;
    art.json("convergence.json", &table)?;
    let mut text = format!("convergence: theta {}\n", table.theta);
    for l in &table.levels {
        let _ = writeln!(text, "  {}x{}: gamma error {:.3e} (relative {:.3e})", l.ny, l.nt, l.gamma.linf, l.gamma_rel);
    }
    for o in &table.orders {
        let _ = writeln!(text, "  order {:.3}", o.gamma_linf);
    }
    finish(art, "convergence", text)
}

fn validate(cli: &Cli, run: &RunProblem) -> Result<(), CliError> {
    let rep = validate_initial_pressure(&run.problem.initial, run.problem.theta(), &run.bounds)?;
    let mut art = Artifacts::open(&cli.out, cli.force)?;
    art.json("validation.json", &rep)?;
    let mut text = String::from("validate:\n");
    for c in &rep.checks {
        let _ = writeln!(
            text,
            "  {:<32} {}  margin {:.3e}",
            c.name,
            if c.passed { "passed" } else { "FAILED" },
            c.margin + 0.0
        );
    }
    let _ = writeln!(
        text,
        "  {}",
        if rep.passed() { "all hypotheses passed" } else { "some hypotheses failed" }
    );
    finish(art, "validate", text)?;
    if rep.passed() {
        Ok(())
    } else {
        Err(CliError::Invalid("initial pressure violates the hypotheses".into()))
    }
}
