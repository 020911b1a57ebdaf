//! Brute-force reference propagator: classical Runge–Kutta on i dU/dt = H U.

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::linops::{fro_norm, CMatrix};
use crate::signal::{check_same_grid, HamiltonianSignal, PropagatorTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// RK4 steps taken inside each grid interval.
    pub substeps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { substeps: 4 }
    }
}

/// U(t_k) with U(0) = 1 exactly.
pub fn propagate(h: &HamiltonianSignal, cfg: &OracleConfig) -> PropagatorTable {
    let grid = h.grid();
    let n = h.dim();
    let sub = cfg.substeps.max(1);
    let step = grid.dt() / sub as f64;
    let mi = C64::new(0.0, -1.0);
    let rhs = |t: f64, u: &CMatrix| (&h.value_at(t) * u).scale(mi);

    let mut u = CMatrix::identity(n);
    let mut out = Vec::with_capacity(grid.len());
    out.push(u.clone());
    for k in 0..grid.steps() {
        let t0 = grid.t(k);
        for s in 0..sub {
            let t = t0 + s as f64 * step;
            let k1 = rhs(t, &u);
            let k2 = rhs(t + step / 2.0, &(&u + &k1.scale_re(step / 2.0)));
            let k3 = rhs(t + step / 2.0, &(&u + &k2.scale_re(step / 2.0)));
            let k4 = rhs(t + step, &(&u + &k3.scale_re(step)));
            let mut inc = k1;
            inc += &k2.scale_re(2.0);
            inc += &k3.scale_re(2.0);
            inc += &k4;
            u += &inc.scale_re(step / 6.0);
        }
        out.push(u.clone());
    }
    PropagatorTable::new(grid, out).expect("table length matches grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub sup_fro: f64,
    pub final_fro: f64,
    /// ‖Ua(t_k) − Ub(t_k)‖_F for every grid point.
    pub per_t: Vec<f64>,
}

pub fn compare(a: &PropagatorTable, b: &PropagatorTable) -> Result<Comparison> {
    check_same_grid(a.grid(), b.grid())?;
    let per_t: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| fro_norm(&(x - y)))
        .collect();
    Ok(Comparison {
        sup_fro: per_t.iter().cloned().fold(0.0, f64::max),
        final_fro: *per_t.last().unwrap(),
        per_t,
    })
}

/// Result of a step-halving self-comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    /// log₂ of the ratio of successive differences.
    Estimated { order: f64, ratio: f64 },
    /// Both differences sit at the rounding floor: the scheme is exact here.
    Exact,
}

/// Estimates the convergence order by propagating on the signal's grid and on
/// two successively halved grids, comparing at the coarse grid points.
pub fn convergence_order(h: &HamiltonianSignal, cfg: &OracleConfig) -> Result<Order> {
    let g1 = h.grid();
    let g2 = g1.refined();
    let g3 = g2.refined();
    let u1 = propagate(h, cfg);
    let u2 = propagate(&h.on_grid(g2)?, cfg);
    let u3 = propagate(&h.on_grid(g3)?, cfg);
    let diff = |coarse: &PropagatorTable, fine: &PropagatorTable, factor: usize| {
        (0..coarse.grid().len())
            .map(|k| fro_norm(&(coarse.at(k) - fine.at(k * factor))))
            .fold(0.0, f64::max)
    };
    let e1 = diff(&u1, &u2, 2);
    let e2 = diff(&u2, &u3, 2);
    let scale = u3.values().iter().map(fro_norm).fold(1.0, f64::max);
    let floor = 1e3 * f64::EPSILON * scale * g3.steps() as f64;
    if e1 <= floor && e2 <= floor {
        return Ok(Order::Exact);
    }
    let ratio = e1 / e2;
    Ok(Order::Estimated { order: ratio.log2(), ratio })
}

/// Reference solution on `grid` at a finer internal resolution (for tests and
/// diagnostics that need an oracle far below the method error).
pub fn reference(h: &HamiltonianSignal, substeps: usize) -> PropagatorTable {
    propagate(h, &OracleConfig { substeps })
}

/// max_k |det U(t_k) − exp(−i∫₀ᵗ tr H)|
pub fn det_defect(h: &HamiltonianSignal, u: &PropagatorTable) -> f64 {
    let tr = h.trace_integral();
    u.values()
        .iter()
        .zip(tr)
        .map(|(m, i)| (m.det() - (C64::new(0.0, -1.0) * i).exp()).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::linops::{matrix_exp, pauli};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_hamiltonian_matches_exponential() {
        let g = Grid::new(1.0, 1000).unwrap();
        let m = CMatrix::from_rows(&[[c(0.3, 0.0), c(0.5, -0.2)], [c(0.5, 0.2), c(-1.0, 0.0)]]);
        let u = propagate(&HamiltonianSignal::constant(g, m.clone()), &OracleConfig::default());
        for k in (0..g.len()).step_by(97) {
            let want = matrix_exp(&m.scale(c(0.0, -g.t(k))));
            assert!(fro_norm(&(u.at(k) - &want)) < 1e-10);
        }
        assert_eq!(u.at(0), &CMatrix::identity(2));
    }

    #[test]
    fn traceless_has_unit_determinant() {
        let g = Grid::new(2.0, 400).unwrap();
        let h = HamiltonianSignal::analytic(g, |t| {
            &pauli(1).scale_re(t.sin()) + &pauli(3).scale(c(0.2, 0.1 * t))
        });
        let u = propagate(&h, &OracleConfig::default());
        assert!(det_defect(&h, &u) < 1e-9);
    }

    #[test]
    fn order_is_four_for_smooth_input() {
        let g = Grid::new(1.0, 10).unwrap();
        let h = HamiltonianSignal::analytic(g, |t| {
            CMatrix::from_rows(&[[c(t.sin(), 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(-t.sin(), 0.0)]])
        });
        match convergence_order(&h, &OracleConfig::default()).unwrap() {
            Order::Estimated { order, .. } => assert!((order - 4.0).abs() < 0.3, "{order}"),
            Order::Exact => panic!("unexpected exact"),
        }
    }

    #[test]
    fn constant_input_reports_exact() {
        let g = Grid::new(1.0, 10).unwrap();
        let h = HamiltonianSignal::constant(g, CMatrix::zeros(2));
        assert_eq!(convergence_order(&h, &OracleConfig::default()).unwrap(), Order::Exact);
    }

    #[test]
    fn compare_detects_perturbation() {
        let g = Grid::new(1.0, 4).unwrap();
        let a = PropagatorTable::identity(g, 2);
        let b = a.map(|u| u.scale_re(1.0 + 1e-6));
        let cmp = compare(&a, &b).unwrap();
        assert!((cmp.sup_fro - 1e-6 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(compare(&a, &a).unwrap().sup_fro, 0.0);
    }
}
