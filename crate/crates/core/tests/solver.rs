use mfgfb::lagrangian::{
    apply_terminal_condition, assemble_jacobian, assemble_residual, continuation_solve, initial_guess,
    newton_solve, FlowField, Grading, Mesh, SolverConfig,
};
use mfgfb::oracle::SelfSimilarSolution;
use mfgfb::problem::{AnalyticProfile, CouplingParams, InitialPressure, Profile, ProblemSpec, TerminalSpec};
use mfgfb::Error;
use rand::{Rng, SeedableRng};

fn barenblatt() -> (SelfSimilarSolution, ProblemSpec) {
    let s = SelfSimilarSolution::new(1.0, 1.0).unwrap();
    let prob = s.planning_problem(1.0, 2.0, (0.125, 0.875)).unwrap();
    (s, prob)
}

fn bump_cost(c1: f64) -> ProblemSpec {
    let p = InitialPressure::new(Profile::bump(1.0, std::f64::consts::PI / 2.0).unwrap());
    ProblemSpec::new(
        CouplingParams::new(1.0).unwrap(),
        p,
        TerminalSpec::cost(c1).unwrap(),
        1.0,
        (0.25, 0.75),
    )
    .unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn oracle_truncation_error_is_second_order() {
    let (s, prob) = barenblatt();
    let mut prev = None;
    for n in [17, 33, 65, 129] {
        let mesh = Mesh::new(6.0, n, 1.0, n, Grading::Uniform).unwrap();
        let field = s.sample_flow(1.0, &mesh).unwrap();
        let r = sup(&assemble_residual(&field, &prob).unwrap());
        if let Some(p) = prev {
            let ratio: f64 = p / r;
            assert!(ratio >= 3.5, "n={n}: ratio {ratio}");
        }
        prev = Some(r);
    }
}

#[test]
fn free_transport_when_pressure_vanishes_in_the_bulk() {
    // identity with c1 = 0 is exact wherever p0' vanishes; the bump has p0'(1/2) = 0
    let prob = bump_cost(0.0);
    let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::Uniform).unwrap();
    let field = FlowField::from_fn(mesh.clone(), |y, _| y);
    let r = assemble_residual(&field, &prob).unwrap();
    for j in 0..17 {
        assert!(r[mesh.idx(8, j)].abs() < 1e-12);
    }
    // statics elsewhere leave a residual proportional to p0'·Z
    let y = mesh.y()[3];
    let expect = -(std::f64::consts::PI.powi(2) / 2.0) * (std::f64::consts::PI * y).cos();
    assert!((r[mesh.idx(3, 5)] - expect).abs() < 1e-2 * expect.abs());
}

#[test]
fn terminal_rows() {
    let (s, prob) = barenblatt();
    let mesh = Mesh::new(6.0, 33, 1.0, 33, Grading::Uniform).unwrap();
    let field = s.sample_flow(1.0, &mesh).unwrap();
    let rows = apply_terminal_condition(&field, &prob).unwrap();
    // γ(y,T) − (y − 3)·2^{2/3}
    assert!(sup(&rows) < 1e-9, "{}", sup(&rows));

    let cost = bump_cost(0.0);
    let m = Mesh::new(1.0, 17, 1.0, 17, Grading::Uniform).unwrap();
    let moving = FlowField::from_fn(m.clone(), |y, t| y + 0.1 * t);
    let rows = apply_terminal_condition(&moving, &cost).unwrap();
    // (γ_m − γ_{m−1})/Δt + (Δt/2)·S; the middle node has S = 0
    assert!((rows[8] - 0.1).abs() < 1e-12);
}

#[test]
fn hand_assembled_row() {
    // θ = 1, p0 = y(1−y), identity field: interior row is 0 − (p0'·1 + ½·p0·0) = −p0'(y)
    let p = InitialPressure::new(Profile::parabola(1.0, 1.0).unwrap());
    let prob = ProblemSpec::new(
        CouplingParams::new(1.0).unwrap(),
        p,
        TerminalSpec::cost(0.0).unwrap(),
        1.0,
        (0.25, 0.75),
    )
    .unwrap();
    let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::Uniform).unwrap();
    let mut field = FlowField::from_fn(mesh.clone(), |y, _| y);
    let r = assemble_residual(&field, &prob).unwrap();
    let y = mesh.y()[4];
    assert!((r[mesh.idx(4, 3)] + (1.0 - 2.0 * y)).abs() < 1e-13);
    // endpoint row: −p0'(0+)·Z(0) = −1
    assert!((r[mesh.idx(0, 3)] + 1.0).abs() < 1e-13);

    // stretch cell 4 of slice 3 by 2: Z on that face drops to 1/4
    let h = 1.0 / 16.0;
    field = FlowField::from_fn(mesh.clone(), |yy, t| {
        if (t - 3.0 / 16.0).abs() < 1e-12 && yy > 4.5 * h {
            yy + h
        } else {
            yy
        }
    });
    let r = assemble_residual(&field, &prob).unwrap();
    let (d1, v) = (1.0 - 2.0 * y, y * (1.0 - y));
    // S_4 = p0'·(Z_l + Z_r)/2 + ½·p0·(Z_r − Z_l)/h with Z_l = 1, Z_r = 1/4
    let s = d1 * 0.625 + 0.5 * v * (0.25 - 1.0) / h;
    let dt = 1.0 / 16.0;
    let tt = (mesh.y()[4] - mesh.y()[4]) / (dt * dt);
    assert!((r[mesh.idx(4, 3)] - (tt - s)).abs() < 1e-12, "{} vs {}", r[mesh.idx(4, 3)], tt - s);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for prob in [barenblatt().1, bump_cost(0.3)] {
        let b = prob.support_len();
        for n in [17, 33] {
            let mesh = Mesh::new(b, n, prob.horizon, n, Grading::SqrtGraded).unwrap();
            for _ in 0..5 {
                let a: f64 = rng.gen_range(-0.1..0.1);
                let c: f64 = rng.gen_range(-0.1..0.1);
                let base =
                    FlowField::from_fn(mesh.clone(), |y, t| y * (1.0 + a * t) + c * (3.0 * y / b).sin() * 0.1 * b);
                let jac = assemble_jacobian(&base, &prob).unwrap();
                let dir: Vec<f64> = (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let jd = jac.matvec(&dir);
                // perturbation small against the narrowest cell
                let min_dy = mesh.y().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                let eps = 1e-3 * min_dy;
                let shift = |s: f64| {
                    let v: Vec<f64> = base.values().iter().zip(&dir).map(|(g, d)| g + s * d).collect();
                    assemble_residual(&FlowField::new(mesh.clone(), v).unwrap(), &prob).unwrap()
                };
                let (r2p, rp, rm, r2m) = (shift(2.0 * eps), shift(eps), shift(-eps), shift(-2.0 * eps));
                let fd: Vec<f64> = (0..rp.len())
                    .map(|k| (-r2p[k] + 8.0 * rp[k] - 8.0 * rm[k] + r2m[k]) / (12.0 * eps))
                    .collect();
                let diff: Vec<f64> = fd.iter().zip(&jd).map(|(f, j)| f - j).collect();
                let rel = sup(&diff) / sup(&jd);
                assert!(rel <= 1e-6, "n={n}: relative error {rel}");
            }
        }
    }
}

#[test]
fn planning_barenblatt_converges_quickly() {
    let (s, prob) = barenblatt();
    let mesh = Mesh::new(6.0, 65, 1.0, 65, Grading::Uniform).unwrap();
    let cfg = SolverConfig {
        newton_tol: 1e-10,
        ..SolverConfig::default()
    };
    let guess = initial_guess(&prob, &mesh).unwrap();
    let (field, trace) = newton_solve(&prob, &cfg, guess).unwrap();
    assert!(trace.iterations() <= 12, "{} iterations", trace.iterations());
    assert!(trace.last_residual() <= 1e-10);
    let exact = s.sample_flow(1.0, &mesh).unwrap();
    assert!(field.max_abs_diff(&exact) < 1e-3);
    for j in 0..mesh.nt() {
        assert_eq!(field.gamma(0, 0), exact.gamma(0, 0));
        assert!(field.face_slopes(j).iter().all(|&q| q > 0.0));
    }
}

#[test]
fn continuation_single_level_matches_direct() {
    let prob = bump_cost(0.0);
    let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::SqrtGraded).unwrap();
    let cfg = SolverConfig::default();
    let (a, ta) = newton_solve(&prob, &cfg, initial_guess(&prob, &mesh).unwrap()).unwrap();
    let (b, tb) = continuation_solve(&prob, &cfg, &mesh).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn continuation_uses_fewer_fine_steps() {
    let prob = bump_cost(0.5);
    let mesh = Mesh::new(1.0, 129, 1.0, 129, Grading::SqrtGraded).unwrap();
    let direct = SolverConfig::default();
    let (a, ta) = newton_solve(&prob, &direct, initial_guess(&prob, &mesh).unwrap()).unwrap();
    let cont = SolverConfig {
        continuation_levels: 3,
        ..direct
    };
    let (b, tb) = continuation_solve(&prob, &cont, &mesh).unwrap();
    assert!(tb.last_residual() <= direct.newton_tol);
    assert!(a.max_abs_diff(&b) < 1e-8);
    let fine_steps = tb.records.iter().filter(|r| r.level == 3 && r.iteration > 0).count();
    assert!(fine_steps < ta.iterations(), "{fine_steps} vs {}", ta.iterations());
}

#[test]
fn failure_reports_level_and_iterate() {
    let prob = bump_cost(0.5);
    let mesh = Mesh::new(1.0, 33, 1.0, 33, Grading::SqrtGraded).unwrap();
    let cfg = SolverConfig {
        max_iters: 1,
        continuation_levels: 2,
        ..SolverConfig::default()
    };
    let err = continuation_solve(&prob, &cfg, &mesh).unwrap_err();
    assert!(matches!(err, Error::Level { level: 1, .. }), "{err}");
    assert!(err.to_string().contains("level 1"));
    assert!(err.last_iterate().is_some());
    assert_eq!(err.trace().unwrap().iterations(), 1);
}

#[test]
fn nonmonotone_field_is_rejected() {
    let prob = bump_cost(0.0);
    let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::Uniform).unwrap();
    let field = FlowField::from_fn(mesh, |y, t| if t > 0.5 { 1.0 - y } else { y });
    let err = assemble_residual(&field, &prob).unwrap_err();
    assert!(matches!(err, Error::State(_)));
}

#[test]
fn analytic_profile_without_endpoint_slope_is_rejected() {
    let prof = AnalyticProfile::new(1.0, |y| y * y * (1.0 - y), |y| 2.0 * y - 3.0 * y * y);
    let prob = ProblemSpec::new(
        CouplingParams::new(1.0).unwrap(),
        InitialPressure::new(Profile::Analytic(prof)),
        TerminalSpec::cost(0.0).unwrap(),
        1.0,
        (0.25, 0.75),
    )
    .unwrap();
    let mesh = Mesh::new(1.0, 17, 1.0, 17, Grading::Uniform).unwrap();
    assert!(matches!(initial_guess(&prob, &mesh), Err(Error::Domain(_))));
}
