//! Run configuration: one TOML file with `[scenario]`, `[grid]`, `[method]`,
//! `[tolerances]` and `[output]` sections. See `docs/config.md`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    /// Required except for tabulated scenarios, whose grid comes from the table.
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A complex coefficient: a real expression, a number, or a `{ re, im }` pair.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Number(f64),
    Expr(String),
    Complex {
        #[serde(default)]
        re: Option<Part>,
        #[serde(default)]
        im: Option<Part>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Part {
    Number(f64),
    Expr(String),
}

impl Part {
    pub fn source(&self) -> String {
        match self {
            Part::Number(x) => format!("{x:?}"),
            Part::Expr(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioConfig {
    /// H = [[a + d, b], [c, −a + d]]
    Generic2 {
        a: Option<Coeff>,
        b: Option<Coeff>,
        c: Option<Coeff>,
        d: Option<Coeff>,
        /// Draw smooth random coefficients instead (seeded by `--seed` or `seed`).
        #[serde(default)]
        random: bool,
        seed: Option<u64>,
    },
    Oscillator {
        omega: Part,
        #[serde(default = "one")]
        x0: f64,
        #[serde(default)]
        v0: f64,
    },
    Stark {
        #[serde(default = "one")]
        lambda: f64,
        r: Option<Part>,
        theta: Option<Part>,
        /// Field components, as an alternative to r and theta.
        e1: Option<Part>,
        e2: Option<Part>,
    },
    /// CSV with columns t, Re H11, Im H11, Re H12, … (row-major), uniform t.
    GenericMatrixTabulated { table: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub tau: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    /// adiabatic | modified | exact-class | dyson | oracle, optionally with a
    /// count in parentheses, e.g. `modified(2)`.
    #[serde(default = "default_method")]
    pub name: String,
    /// Factors beyond U^(0) for `adiabatic`, stages for `modified`.
    pub levels: Option<usize>,
    /// Dyson order.
    pub terms: Option<usize>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_method() -> String {
    "oracle".into()
}

fn default_substeps() -> usize {
    4
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig { name: default_method(), levels: None, terms: None, substeps: default_substeps() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eps_deg: f64,
    pub eps_class: f64,
    pub eps_trunc: Option<f64>,
    /// Allowed |det U − e^{−i∫tr H}| before a run is reported as failed.
    pub det: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_deg: adprod::linops::EPS_DEG, eps_class: adprod::twolevel::EPS_CLASS, eps_trunc: None, det: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub propagator: Option<PathBuf>,
    pub comparison: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Adiabatic(usize),
    Modified(usize),
    ExactClass,
    Dyson(usize),
    Oracle,
}

impl Method {
    /// `name`, `name(n)` or `name:n`; the count falls back to `levels`/`terms`.
    pub fn parse(spec: &str, levels: Option<usize>, terms: Option<usize>) -> Result<Method, CliError> {
        let spec = spec.trim();
        let (name, count) = match spec.find(['(', ':']) {
            Some(i) => {
                let rest = spec[i + 1..].trim_end_matches(')').trim();
                let n = rest
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("bad count in method `{spec}`")))?;
                (spec[..i].trim(), Some(n))
            }
            None => (spec, None),
        };
        Ok(match name {
            "adiabatic" => Method::Adiabatic(count.or(levels).unwrap_or(0)),
            "modified" => {
                let l = count.or(levels).unwrap_or(2);
                if l == 0 {
                    return Err(CliError::Config("modified expansion needs at least one stage".into()));
                }
                Method::Modified(l)
            }
            "exact-class" | "exact" => Method::ExactClass,
            "dyson" => {
                let n = count.or(terms).unwrap_or(3);
                if n > adprod::oscillator::DYSON_MAX {
                    return Err(CliError::Config(format!(
                        "dyson order {n} exceeds the cap {}",
                        adprod::oscillator::DYSON_MAX
                    )));
                }
                Method::Dyson(n)
            }
            "oracle" => Method::Oracle,
            other => return Err(CliError::Config(format!("unknown method `{other}`"))),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Method::Adiabatic(l) => format!("adiabatic({l})"),
            Method::Modified(l) => format!("modified({l})"),
            Method::ExactClass => "exact-class".into(),
            Method::Dyson(n) => format!("dyson({n})"),
            Method::Oracle => "oracle".into(),
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_specs() {
        assert_eq!(Method::parse("oracle", None, None).unwrap(), Method::Oracle);
        assert_eq!(Method::parse("modified(3)", None, None).unwrap(), Method::Modified(3));
        assert_eq!(Method::parse("adiabatic:1", None, None).unwrap(), Method::Adiabatic(1));
        assert_eq!(Method::parse("dyson", None, Some(4)).unwrap(), Method::Dyson(4));
        assert!(Method::parse("dyson(7)", None, None).is_err());
        assert!(Method::parse("magic", None, None).is_err());
        assert!(Method::parse("modified(x)", None, None).is_err());
    }

    #[test]
    fn coefficient_forms() {
        let cfg = parse(
            r#"
            [scenario]
            kind = "generic2"
            a = "sin(t)"
            b = 1.0
            c = { re = "1", im = 0.5 }

            [grid]
            tau = 1.0
            steps = 100
            "#,
        )
        .unwrap();
        match cfg.scenario {
            ScenarioConfig::Generic2 { a: Some(Coeff::Expr(_)), b: Some(Coeff::Number(_)), c: Some(Coeff::Complex { .. }), .. } => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.method.name, "oracle");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("[scenario]\nkind = \"oscillator\"\nomega = \"1\"\nfoo = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(parse("[scenario]\nkind = \"nonsense\"\n").is_err());
    }
}
