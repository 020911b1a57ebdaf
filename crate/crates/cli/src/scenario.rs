//! Turns a `[scenario]` section into something the pipelines can run.

use std::path::Path;
use std::sync::Arc;

use adprod::expr::{self, Expr};
use adprod::oscillator::OscillatorScenario;
use adprod::stark::StarkScenario;
use adprod::{CMatrix, Grid, HamiltonianSignal, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Coeff, GridConfig, Part, RunConfig, ScenarioConfig};
use crate::error::CliError;

pub enum Problem {
    /// Two-level H = [[a + d, b], [c, −a + d]] (generic2 or a 2×2 table).
    TwoLevel(HamiltonianSignal),
    /// A tabulated matrix of dimension other than 2.
    Matrix(HamiltonianSignal),
    Oscillator { scenario: OscillatorScenario, x0: f64, v0: f64 },
    Stark(StarkScenario),
}

impl Problem {
    pub fn signal(&self) -> Result<HamiltonianSignal, CliError> {
        Ok(match self {
            Problem::TwoLevel(h) | Problem::Matrix(h) => h.clone(),
            Problem::Oscillator { scenario, .. } => adprod::oscillator::to_twolevel(scenario)?.to_signal(),
            Problem::Stark(s) => s.signal(),
        })
    }

    pub fn grid(&self) -> Grid {
        match self {
            Problem::TwoLevel(h) | Problem::Matrix(h) => h.grid(),
            Problem::Oscillator { scenario, .. } => scenario.grid(),
            Problem::Stark(s) => s.grid(),
        }
    }
}

/// A parsed real expression together with its symbolic derivative.
#[derive(Clone)]
struct RealExpr {
    f: Arc<Expr>,
    df: Arc<Expr>,
}

impl RealExpr {
    fn new(part: &Part, what: &str, grid: Grid, substeps: usize) -> Result<RealExpr, CliError> {
        let src = part.source();
        let f = expr::parse(&src).map_err(|e| CliError::Config(format!("{what} = \"{src}\": {}: {e}", e.name())))?;
        let df = f.derivative();
        // Everything downstream evaluates the expressions without error
        // handling, so reject domain failures up front: at every grid point,
        // every quarter step of the oracle's substeps, and the midpoints.
        let n = 2 * substeps.max(1);
        let dt = grid.dt();
        for k in 0..grid.steps() {
            for j in 0..=n {
                let t = grid.t(k) + j as f64 * dt / n as f64;
                for (e, label) in [(&f, what.to_string()), (&df, format!("d/dt {what}"))] {
                    let v = e.eval(t).map_err(|err| {
                        CliError::Config(format!("{label} = \"{src}\" fails at t = {t}: {}: {err}", err.name()))
                    })?;
                    if !v.is_finite() {
                        return Err(CliError::Config(format!("{label} = \"{src}\" is not finite at t = {t}")));
                    }
                }
            }
        }
        Ok(RealExpr { f: Arc::new(f), df: Arc::new(df) })
    }

    fn eval(&self, t: f64) -> f64 {
        self.f.eval(t).unwrap_or(f64::NAN)
    }

    fn eval_derivative(&self, t: f64) -> f64 {
        self.df.eval(t).unwrap_or(f64::NAN)
    }

    fn value_fn(&self) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let e = self.clone();
        move |t| e.eval(t)
    }

    fn derivative_fn(&self) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let e = self.clone();
        move |t| e.eval_derivative(t)
    }
}

#[derive(Clone)]
struct ComplexExpr {
    re: Option<RealExpr>,
    im: Option<RealExpr>,
}

impl ComplexExpr {
    fn new(c: Option<&Coeff>, what: &str, grid: Grid, substeps: usize) -> Result<ComplexExpr, CliError> {
        let part = |p: Option<&Part>, suffix: &str| {
            p.map(|p| RealExpr::new(p, &format!("{what}{suffix}"), grid, substeps)).transpose()
        };
        Ok(match c {
            None => ComplexExpr { re: None, im: None },
            Some(Coeff::Number(x)) => ComplexExpr { re: part(Some(&Part::Number(*x)), "")?, im: None },
            Some(Coeff::Expr(s)) => ComplexExpr { re: part(Some(&Part::Expr(s.clone())), "")?, im: None },
            Some(Coeff::Complex { re, im }) => ComplexExpr { re: part(re.as_ref(), ".re")?, im: part(im.as_ref(), ".im")? },
        })
    }

    fn eval(&self, t: f64) -> C64 {
        C64::new(self.re.as_ref().map_or(0.0, |e| e.eval(t)), self.im.as_ref().map_or(0.0, |e| e.eval(t)))
    }

    fn eval_derivative(&self, t: f64) -> C64 {
        C64::new(
            self.re.as_ref().map_or(0.0, |e| e.eval_derivative(t)),
            self.im.as_ref().map_or(0.0, |e| e.eval_derivative(t)),
        )
    }
}

fn grid_of(cfg: &RunConfig, steps: Option<usize>) -> Result<Grid, CliError> {
    let GridConfig { tau, steps: s } = cfg
        .grid
        .ok_or_else(|| CliError::Config("missing [grid] section (tau, steps)".into()))?;
    let steps = steps.unwrap_or(s);
    if steps < 3 {
        return Err(CliError::Config(format!("grid.steps must be at least 3, got {steps}")));
    }
    Grid::new(tau, steps).map_err(|e| CliError::Config(e.to_string()))
}

/// `base` is the directory relative paths in the config are resolved against.
pub fn build(cfg: &RunConfig, base: &Path, steps: Option<usize>, seed: Option<u64>) -> Result<Problem, CliError> {
    let substeps = cfg.method.substeps;
    match &cfg.scenario {
        ScenarioConfig::Generic2 { a, b, c, d, random, seed: cfg_seed } => {
            let grid = grid_of(cfg, steps)?;
            if *random {
                if a.is_some() || b.is_some() || c.is_some() || d.is_some() {
                    return Err(CliError::Config("random = true cannot be combined with explicit coefficients".into()));
                }
                return Ok(Problem::TwoLevel(random_two_level(grid, seed.or(*cfg_seed).unwrap_or(0))));
            }
            if b.is_none() && c.is_none() {
                return Err(CliError::Config("generic2 needs at least one of b, c".into()));
            }
            let [a, b, c, d] = [(a, "a"), (b, "b"), (c, "c"), (d, "d")]
                .map(|(x, name)| ComplexExpr::new(x.as_ref(), name, grid, substeps));
            let (a, b, c, d) = (a?, b?, c?, d?);
            let (da, db, dc, dd) = (a.clone(), b.clone(), c.clone(), d.clone());
            let h = HamiltonianSignal::analytic(grid, move |t| {
                let (a, b, c, d) = (a.eval(t), b.eval(t), c.eval(t), d.eval(t));
                CMatrix::from_rows(&[[a + d, b], [c, d - a]])
            })
            .with_derivative(move |t| {
                let (a, b, c, d) = (da.eval_derivative(t), db.eval_derivative(t), dc.eval_derivative(t), dd.eval_derivative(t));
                CMatrix::from_rows(&[[a + d, b], [c, d - a]])
            });
            Ok(Problem::TwoLevel(h))
        }
        ScenarioConfig::Oscillator { omega, x0, v0 } => {
            let grid = grid_of(cfg, steps)?;
            let w = RealExpr::new(omega, "omega", grid, substeps)?;
            let scenario = OscillatorScenario::new(grid, w.value_fn(), *x0, *v0)?.with_derivative(w.derivative_fn());
            Ok(Problem::Oscillator { scenario, x0: *x0, v0: *v0 })
        }
        ScenarioConfig::Stark { lambda, r, theta, e1, e2 } => {
            let grid = grid_of(cfg, steps)?;
            let s = match (r, theta, e1, e2) {
                (Some(r), Some(theta), None, None) => {
                    let r = RealExpr::new(r, "r", grid, substeps)?;
                    let th = RealExpr::new(theta, "theta", grid, substeps)?;
                    StarkScenario::new(grid, *lambda, r.value_fn(), th.value_fn())?.with_theta_derivative(th.derivative_fn())
                }
                (None, None, Some(e1), Some(e2)) => {
                    let e1 = RealExpr::new(e1, "e1", grid, substeps)?;
                    let e2 = RealExpr::new(e2, "e2", grid, substeps)?;
                    let (f1, f2, d1, d2) = (e1.value_fn(), e2.value_fn(), e1.derivative_fn(), e2.derivative_fn());
                    let (g1, g2) = (e1.value_fn(), e2.value_fn());
                    // θ̇ = (𝓔₁𝓔₂' − 𝓔₂𝓔₁')/r², exact from the symbolic derivatives
                    StarkScenario::from_field(grid, *lambda, f1, f2)?.with_theta_derivative(move |t| {
                        let (x, y) = (g1(t), g2(t));
                        (x * d2(t) - y * d1(t)) / (x * x + y * y)
                    })
                }
                _ => return Err(CliError::Config("stark needs either r and theta, or e1 and e2".into())),
            };
            Ok(Problem::Stark(s))
        }
        ScenarioConfig::GenericMatrixTabulated { table } => {
            let path = if table.is_absolute() { table.clone() } else { base.join(table) };
            let h = read_table(&path)?;
            if let Some(s) = steps {
                if s != h.grid().steps() {
                    return Err(CliError::Config(format!(
                        "--steps {s} does not match the {} intervals of the table",
                        h.grid().steps()
                    )));
                }
            }
            Ok(if h.dim() == 2 { Problem::TwoLevel(h) } else { Problem::Matrix(h) })
        }
    }
}

/// Reads `t, Re H11, Im H11, Re H12, …` rows; t must be a uniform grid from 0.
pub fn read_table(path: &Path) -> Result<HamiltonianSignal, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read table {}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut mats = Vec::new();
    let mut dim = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), line + 2)))?;
        let entries = (vals.len().saturating_sub(1)) / 2;
        let n = (entries as f64).sqrt().round() as usize;
        if n == 0 || vals.len() != 1 + 2 * n * n {
            return Err(CliError::Config(format!(
                "{} row {}: expected t followed by 2n² values, found {} columns",
                path.display(),
                line + 2,
                vals.len()
            )));
        }
        if *dim.get_or_insert(n) != n {
            return Err(CliError::Config(format!("{} row {}: matrix size changes", path.display(), line + 2)));
        }
        times.push(vals[0]);
        let data = (0..n * n).map(|i| C64::new(vals[1 + 2 * i], vals[2 + 2 * i])).collect();
        mats.push(CMatrix::from_vec(n, data));
    }
    let grid = Grid::from_times(&times).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(HamiltonianSignal::tabulated(grid, mats)?)
}

/// Smooth random two-level coefficients, p₀ + p₁t + p₂ sin(ωt) per entry,
/// kept away from level crossings by a dominant diagonal.
fn random_two_level(grid: Grid, seed: u64) -> HamiltonianSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| -> [C64; 3] {
        let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
        [c(), c(), c()]
    };
    let a = draw(0.1);
    let b = draw(0.15);
    let c = draw(0.15);
    let d = draw(0.2);
    let offset = 1.5 + 0.5 * rng.gen::<f64>();
    let w = 0.5 + 0.5 * rng.gen::<f64>();
    let tau = grid.tau();
    let smooth = move |p: [C64; 3], t: f64| p[0] + p[1] * (t / tau) + p[2] * (w * t).sin();
    let dsmooth = move |p: [C64; 3], t: f64| p[1] / tau + p[2] * w * (w * t).cos();
    HamiltonianSignal::analytic(grid, move |t| {
        let av = smooth(a, t) + offset;
        let dv = smooth(d, t);
        CMatrix::from_rows(&[[av + dv, smooth(b, t)], [smooth(c, t), dv - av]])
    })
    .with_derivative(move |t| {
        let (av, dv) = (dsmooth(a, t), dsmooth(d, t));
        CMatrix::from_rows(&[[av + dv, dsmooth(b, t)], [dsmooth(c, t), dv - av]])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    fn problem(text: &str) -> Result<Problem, CliError> {
        build(&config::parse(text).unwrap(), Path::new("."), None, None)
    }

    #[test]
    fn bad_expressions_are_config_errors() {
        let base = "[scenario]\nkind = \"oscillator\"\n[grid]\ntau = 1.0\nsteps = 10\n";
        let err = problem(&base.replace("oscillator\"", "oscillator\"\nomega = \"1 +\"")).err().unwrap();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("SyntaxError"), "{err}");
        let err = problem(&base.replace("oscillator\"", "oscillator\"\nomega = \"sqrt(0.5 - t)\"")).err().unwrap();
        assert!(err.to_string().contains("DomainError"), "{err}");
    }

    #[test]
    fn nonpositive_frequency_is_numerical() {
        let err = problem("[scenario]\nkind = \"oscillator\"\nomega = \"1 - 2*t\"\n[grid]\ntau = 1.0\nsteps = 10\n")
            .err()
            .unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.report().starts_with("NonpositiveFrequency"));
    }

    #[test]
    fn generic2_uses_symbolic_derivatives() {
        let p = problem("[scenario]\nkind = \"generic2\"\na = \"sin(t)\"\nb = { re = 1, im = \"t*t\" }\nc = 1\n[grid]\ntau = 1.0\nsteps = 10\n")
            .unwrap();
        let h = p.signal().unwrap();
        let d = h.derivative_at(0.5);
        assert!((d[(0, 0)] - C64::new(0.5f64.cos(), 0.0)).norm() < 1e-14);
        assert!((d[(0, 1)] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn random_scenarios_depend_only_on_the_seed() {
        let grid = Grid::new(2.0, 20).unwrap();
        let a = random_two_level(grid, 7).samples();
        let b = random_two_level(grid, 7).samples();
        let c = random_two_level(grid, 8).samples();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let mut text = String::from("t,re11,im11,re12,im12,re21,im21,re22,im22\n");
        for k in 0..=10 {
            let t = k as f64 * 0.1;
            text += &format!("{t},{},0,1,0,1,0,{},0\n", t, -t);
        }
        std::fs::write(&path, text).unwrap();
        let h = read_table(&path).unwrap();
        assert_eq!(h.dim(), 2);
        assert_eq!(h.grid().steps(), 10);
        assert!((h.value(5)[(0, 0)].re - 0.5).abs() < 1e-12);
    }
}
