//! Method dispatch: each (scenario, method) pair becomes one propagator table.

use adprod::expansion::{self, ExpandOptions, ExpansionStatus};
use adprod::oracle::{self, OracleConfig};
use adprod::twolevel::{self, ClassTag, TwoLevelCoeffs};
use adprod::{oscillator, stark, PropagatorTable, C64};

use crate::config::{Method, Tolerances};
use crate::error::CliError;
use crate::scenario::Problem;

pub struct Outcome {
    pub propagator: PropagatorTable,
    /// Free-form status: expansion status, stage count, "exact", …
    pub status: String,
    /// Residual sizes the method reports (sup_t ‖H^(ℓ+1)‖ or sup_t |h_ℓ|).
    pub residuals: Vec<f64>,
    /// Oscillator runs carry x(t), v(t).
    pub trajectory: Option<(Vec<f64>, Vec<f64>)>,
}

pub struct Settings {
    pub tolerances: Tolerances,
    pub substeps: usize,
}

pub fn oracle_for(problem: &Problem, settings: &Settings) -> Result<PropagatorTable, CliError> {
    Ok(oracle::propagate(&problem.signal()?, &OracleConfig { substeps: settings.substeps.max(1) }))
}

pub fn execute(problem: &Problem, method: Method, settings: &Settings) -> Result<Outcome, CliError> {
    let tol = &settings.tolerances;
    let (propagator, status, residuals) = match method {
        Method::Oracle => (oracle_for(problem, settings)?, "reference".to_string(), Vec::new()),
        Method::Adiabatic(levels) => {
            let opts = ExpandOptions { eps_deg: tol.eps_deg, eps_trunc: tol.eps_trunc, l_max: levels, ..Default::default() };
            let e = expansion::expand(&problem.signal()?, &opts)?;
            let last = e.factors.len() - 1;
            (expansion::assemble_table(&e, last), status_name(e.status), e.residual_norms)
        }
        Method::Modified(levels) => match problem {
            Problem::Oscillator { scenario, .. } => {
                let c = oscillator::to_twolevel(scenario)?;
                modified(&c, levels)?
            }
            Problem::TwoLevel(h) => {
                let (c, phase) = twolevel::detrace(h)?;
                let (u, status, res) = if matches!(twolevel::classify(&c, tol.eps_class), ClassTag::Class3) {
                    modified(&c, levels)?
                } else {
                    let red = twolevel::reduce_to_class3(&c)?;
                    let (u2, status, res) = modified(&red.class3, levels)?;
                    (red.reassemble(&u2)?, format!("{status} after reduction"), res)
                };
                // U_H̄ = e^{−i∫tr/2}·U_H
                let values = u.values().iter().zip(&phase).map(|(m, p)| m.scale(p.inv())).collect();
                (PropagatorTable::new(u.grid(), values)?, status, res)
            }
            _ => return Err(unsupported(method, "two-level and oscillator scenarios")),
        },
        Method::ExactClass => match problem {
            Problem::TwoLevel(h) => {
                let (c, _) = twolevel::detrace(h)?;
                let tag = twolevel::classify(&c, tol.eps_class);
                if !matches!(tag, ClassTag::Class1(_) | ClassTag::Class2(_)) {
                    return Err(adprod::Error::ConditionViolated(format!(
                        "exact-class needs Class 1 or Class 2, detected {}",
                        tag_name(&tag)
                    ))
                    .into());
                }
                let opts = ExpandOptions { eps_deg: tol.eps_deg, eps_trunc: tol.eps_trunc, l_max: 1, ..Default::default() };
                let e = expansion::expand(h, &opts)?;
                if !matches!(e.status, ExpansionStatus::Terminated(_)) {
                    return Err(adprod::Error::ConditionViolated(format!(
                        "{} but the expansion did not terminate ({})",
                        tag_name(&tag),
                        status_name(e.status)
                    ))
                    .into());
                }
                (expansion::assemble_table(&e, e.factors.len() - 1), format!("exact {}", tag_name(&tag)), e.residual_norms)
            }
            Problem::Stark(s) => {
                let c = stark::proportionality(s).ok_or_else(|| {
                    adprod::Error::ConditionViolated("theta' is not proportional to r^2".into())
                })?;
                (stark::exact_solve(s, c)?, format!("exact c={c:.6}"), Vec::new())
            }
            Problem::Oscillator { .. } => {
                return Err(unsupported(method, "scenarios with a closed form (Class 1/2 two-level, Stark with theta' = c r^2)"))
            }
            Problem::Matrix(_) => return Err(unsupported(method, "two-level and Stark scenarios")),
        },
        Method::Dyson(n) => match problem {
            Problem::Oscillator { scenario, .. } => {
                let u = oscillator::propagator(scenario, oscillator::TrajectoryMethod::Dyson(n))?;
                (u, format!("dyson order {n}"), Vec::new())
            }
            _ => return Err(unsupported(method, "oscillator scenarios")),
        },
    };
    let trajectory = match problem {
        Problem::Oscillator { x0, v0, .. } => {
            let (x0, v0) = (C64::new(*x0, 0.0), C64::new(*v0, 0.0));
            let (x, v) = propagator
                .values()
                .iter()
                .map(|m| {
                    let s = m.mul_vec(&[x0, v0]);
                    (s[0].re, s[1].re)
                })
                .unzip();
            Some((x, v))
        }
        _ => None,
    };
    Ok(Outcome { propagator, status, residuals, trajectory })
}

fn modified(c: &TwoLevelCoeffs, levels: usize) -> Result<(PropagatorTable, String, Vec<f64>), CliError> {
    let m = twolevel::modified_expansion(c, levels)?;
    let res = (0..m.h.len()).map(|l| m.h_sup(l)).collect();
    Ok((m.propagator(), format!("{levels} stage(s)"), res))
}

fn unsupported(method: Method, what: &str) -> CliError {
    CliError::Config(format!("method {} is only available for {what}", method.label()))
}

pub fn status_name(s: ExpansionStatus) -> String {
    match s {
        ExpansionStatus::Terminated(n) => format!("Terminated({n})"),
        ExpansionStatus::Truncated(n) => format!("Truncated({n})"),
        ExpansionStatus::Cyclic(p) => format!("Cyclic({p})"),
    }
}

pub fn tag_name(tag: &ClassTag) -> String {
    match tag {
        ClassTag::Class1(mu) => format!("Class1 mu={}", complex(*mu)),
        ClassTag::Class2(nu) => format!("Class2 nu={}", complex(*nu)),
        ClassTag::Class3 => "Class3".into(),
        ClassTag::Generic => "Generic".into(),
    }
}

fn complex(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

/// The tag printed by the `classify` subcommand.
pub fn classify(problem: &Problem, tol: &Tolerances) -> Result<String, CliError> {
    Ok(match problem {
        Problem::TwoLevel(h) => tag_name(&twolevel::classify(&twolevel::detrace(h)?.0, tol.eps_class)),
        Problem::Oscillator { scenario, .. } => {
            tag_name(&twolevel::classify(&oscillator::to_twolevel(scenario)?, tol.eps_class))
        }
        Problem::Stark(s) => match stark::proportionality(s) {
            Some(c) => format!("StarkExact c={c:.6}"),
            None => "StarkGeneric".into(),
        },
        Problem::Matrix(_) => "Generic".into(),
    })
}

/// Methods `compare` runs for a scenario, with their default parameters.
pub fn applicable_methods(problem: &Problem) -> Vec<Method> {
    let mut v = vec![Method::Adiabatic(0), Method::Adiabatic(3)];
    match problem {
        Problem::TwoLevel(_) => v.extend([Method::Modified(2), Method::ExactClass]),
        Problem::Oscillator { .. } => v.extend([Method::Modified(1), Method::Modified(3), Method::Dyson(3)]),
        Problem::Stark(_) => v.push(Method::ExactClass),
        Problem::Matrix(_) => {}
    }
    v
}
