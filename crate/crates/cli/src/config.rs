//! Problem configs: TOML with [coupling], [initial], [terminal], [grid] and
//! optional [solver], [validate], [transforms] sections.

use std::fs;
use std::path::{Path, PathBuf};

use mfgfb::lagrangian::{Damping, Grading, Mesh, SolverConfig};
use mfgfb::oracle::SelfSimilarSolution;
use mfgfb::problem::{
    CouplingParams, HypothesisBounds, InitialPressure, Profile, ProblemSpec, TabulatedProfile, TerminalSpec,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    coupling: CouplingSection,
    initial: ProfileSection,
    terminal: ProfileSection,
    grid: GridSection,
    solver: Option<SolverSection>,
    validate: Option<ValidateSection>,
    transforms: Option<TransformsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    theta: f64,
}

/// A profile, or for `[terminal]` also the condition kind.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSection {
    kind: Option<String>,
    c1: Option<f64>,
    profile: Option<String>,
    b: Option<f64>,
    height: Option<f64>,
    #[serde(rename = "R")]
    big_r: Option<f64>,
    t: Option<f64>,
    path: Option<PathBuf>,
    origin: Option<f64>,
    #[serde(default)]
    normalize: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    ny: usize,
    nt: usize,
    horizon: f64,
    window: [f64; 2],
    #[serde(default)]
    grading: GradingName,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum GradingName {
    #[default]
    Uniform,
    Sqrt,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    newton_tol: Option<f64>,
    max_iters: Option<usize>,
    barrier_floor: Option<f64>,
    continuation_levels: Option<usize>,
    damping_initial: Option<f64>,
    damping_ratio: Option<f64>,
    damping_min_step: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateSection {
    c0: Option<f64>,
    k0: Option<f64>,
    delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformsSection {
    r0: Option<f64>,
}

/// A parsed config ready for the subcommands.
#[derive(Debug, Clone)]
pub struct RunProblem {
    pub problem: ProblemSpec,
    pub ny: usize,
    pub nt: usize,
    pub grading: Grading,
    pub solver: SolverConfig,
    pub bounds: HypothesisBounds,
    pub chart_radius: Option<f64>,
}

impl RunProblem {
    pub fn mesh(&self, ny: usize, nt: usize) -> Result<Mesh, CliError> {
        Ok(Mesh::new(self.problem.support_len(), ny, self.problem.horizon, nt, self.grading)?)
    }

    pub fn default_mesh(&self) -> Result<Mesh, CliError> {
        self.mesh(self.ny, self.nt)
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn need(v: Option<f64>, section: &str, key: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| invalid(format!("[{section}] needs `{key}`")))
}

fn read_table(path: &Path) -> Result<TabulatedProfile, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| invalid(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| invalid(format!("{}: missing column `{name}`", path.display())))
    };
    let (cy, cp) = (col("y")?, col("p0")?);
    let (mut y, mut p) = (Vec::new(), Vec::new());
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let cell = |c: usize| -> Result<f64, CliError> {
            rec.get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| invalid(format!("{}: row {} is not numeric", path.display(), n + 1)))
        };
        y.push(cell(cy)?);
        p.push(cell(cp)?);
    }
    Ok(TabulatedProfile::new(y, p)?)
}

/// Profile and default origin of a section.
fn build_profile(s: &ProfileSection, section: &str, theta: f64, base: &Path) -> Result<(InitialPressure, f64), CliError> {
    let name = s.profile.as_deref().ok_or_else(|| invalid(format!("[{section}] needs `profile`")))?;
    let (mut p, origin) = match name {
        "barenblatt" => {
            let sol = match s.big_r {
                Some(r) => SelfSimilarSolution::new(theta, r)?,
                None => SelfSimilarSolution::unit_mass(theta)?,
            };
            let t = s.t.unwrap_or(1.0);
            (sol.pressure_profile(t)?, -sol.half_width(t))
        }
        "parabola" => (
            InitialPressure::new(Profile::parabola(need(s.b, section, "b")?, need(s.height, section, "height")?)?),
            0.0,
        ),
        "bump" => (
            InitialPressure::new(Profile::bump(need(s.b, section, "b")?, need(s.height, section, "height")?)?),
            0.0,
        ),
        "csv" => {
            let rel = s.path.as_ref().ok_or_else(|| invalid(format!("[{section}] csv profile needs `path`")))?;
            (InitialPressure::new(Profile::Tabulated(read_table(&base.join(rel))?)), 0.0)
        }
        other => {
            return Err(invalid(format!(
                "[{section}] unknown profile `{other}` (expected barenblatt, parabola, bump or csv)"
            )))
        }
    };
    if s.normalize {
        p = p.renormalized(theta)?;
    }
    Ok((p, s.origin.unwrap_or(origin)))
}

pub fn parse(text: &str, base: &Path) -> Result<RunProblem, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {}", e.message())))?;
    let coupling = CouplingParams::new(raw.coupling.theta)?;
    let theta = coupling.theta();
    if raw.initial.kind.is_some() || raw.initial.c1.is_some() {
        return Err(invalid("[initial] does not take `kind` or `c1`"));
    }
    let (initial, origin) = build_profile(&raw.initial, "initial", theta, base)?;
    let terminal = match raw.terminal.kind.as_deref() {
        Some("cost") => TerminalSpec::cost(raw.terminal.c1.unwrap_or(0.0))?,
        Some("planning") => {
            let (target, to) = build_profile(&raw.terminal, "terminal", theta, base)?;
            TerminalSpec::planning(target, to)
        }
        Some(other) => return Err(invalid(format!("[terminal] unknown kind `{other}` (expected cost or planning)"))),
        None => return Err(invalid("[terminal] needs `kind`")),
    };
    let g = &raw.grid;
    let problem =
        ProblemSpec::new(coupling, initial, terminal, g.horizon, (g.window[0], g.window[1]))?.with_origin(origin);

    let mut solver = SolverConfig::default();
    if let Some(s) = &raw.solver {
        solver.newton_tol = s.newton_tol.unwrap_or(solver.newton_tol);
        solver.max_iters = s.max_iters.unwrap_or(solver.max_iters);
        solver.barrier_floor = s.barrier_floor.unwrap_or(solver.barrier_floor);
        solver.continuation_levels = s.continuation_levels.unwrap_or(solver.continuation_levels);
        solver.damping = Damping {
            initial: s.damping_initial.unwrap_or(solver.damping.initial),
            ratio: s.damping_ratio.unwrap_or(solver.damping.ratio),
            min_step: s.damping_min_step.unwrap_or(solver.damping.min_step),
        };
    }
    solver.validate()?;

    let b = problem.support_len();
    let v = raw.validate.as_ref();
    let bounds = HypothesisBounds {
        c0: v.and_then(|v| v.c0).unwrap_or(10.0),
        k0: v.and_then(|v| v.k0).unwrap_or(10.0),
        delta: v.and_then(|v| v.delta).unwrap_or(0.1 * b),
    };
    Ok(RunProblem {
        problem,
        ny: g.ny,
        nt: g.nt,
        grading: match g.grading {
            GradingName::Uniform => Grading::Uniform,
            GradingName::Sqrt => Grading::SqrtGraded,
        },
        solver,
        bounds,
        chart_radius: raw.transforms.and_then(|t| t.r0),
    })
}

pub fn load(path: &Path) -> Result<RunProblem, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}
