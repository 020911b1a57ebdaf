//! CSV writers. Floats are printed with 17 significant digits so the files
//! round-trip exactly.

use std::path::{Path, PathBuf};

use adprod::PropagatorTable;

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// t, Re U11, Im U11, Re U12, … then x, v for trajectories and the
/// Frobenius distance to the oracle when one was computed.
pub fn write_propagator(
    path: &Path,
    u: &PropagatorTable,
    trajectory: Option<&(Vec<f64>, Vec<f64>)>,
    error: Option<&[f64]>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let n = u.dim();
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("re_u{i}{j}"));
            header.push(format!("im_u{i}{j}"));
        }
    }
    if trajectory.is_some() {
        header.extend(["x".into(), "v".into()]);
    }
    if error.is_some() {
        header.push("fro_error".into());
    }
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    let grid = u.grid();
    for k in 0..grid.len() {
        let mut row = vec![num(grid.t(k))];
        for z in u.at(k).as_slice() {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        if let Some((x, v)) = trajectory {
            row.push(num(x[k]));
            row.push(num(v[k]));
        }
        if let Some(err) = error {
            row.push(num(err[k]));
        }
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_comparison(path: &Path, times: &[f64], errors: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["t", "fro_error"]).map_err(|e| io_err(path, e))?;
    for (t, e) in times.iter().zip(errors) {
        w.write_record([num(*t), num(*e)]).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub struct MethodRow {
    pub method: String,
    pub status: String,
    pub sup_error: f64,
    pub final_error: f64,
}

pub fn write_summary_table(path: &Path, rows: &[MethodRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["method", "status", "sup_error", "final_error"]).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record([r.method.clone(), r.status.clone(), num(r.sup_error), num(r.final_error)])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `out.csv` → `out_compare.csv`
pub fn comparison_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_compare.{ext}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn comparison_file_sits_next_to_output() {
        assert_eq!(comparison_path(Path::new("runs/u.csv")), PathBuf::from("runs/u_compare.csv"));
        assert_eq!(comparison_path(Path::new("u")), PathBuf::from("u_compare.csv"));
    }
}
