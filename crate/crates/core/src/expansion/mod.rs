//! Generic adiabatic product expansion U = U^(0) U^(1) … U^(L).
//!
//! Each factor is the adiabatic propagator of the previous transformed
//! Hamiltonian; the iteration stops when the residual Hamiltonian vanishes,
//! when it repeats an earlier one, or at a caller-supplied cap.

mod step;
mod track;

pub use step::{
    adiabatic_propagator, adiabatic_step, canonical_transform, coupling_crosscheck, coupling_matrices,
    dynamical_factor, AdiabaticStep,
};
pub use track::{track_levels, LevelTrack};

use crate::error::Result;
use crate::grid::Grid;
use crate::linops::{fro_norm, CMatrix, EPS_DEG};
use crate::signal::{HamiltonianSignal, PropagatorTable};

/// How the iteration ended. Factor indices run from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionStatus {
    /// H^(N+1) vanished: U = U^(0)…U^(N) exactly (to tolerance).
    Terminated(usize),
    /// Stopped after factor L_max with a nonzero residual.
    Truncated(usize),
    /// The newest Hamiltonian repeats the one `p` iterations earlier.
    Cyclic(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct ExpandOptions {
    pub eps_deg: f64,
    /// Defaults to 1e-9·(1 + ‖H(0)‖_F).
    pub eps_trunc: Option<f64>,
    /// Defaults to 1e-7·(1 + sup‖H‖_F).
    pub eps_cycle: Option<f64>,
    pub l_max: usize,
    /// How many earlier iterates are compared for cycles.
    pub cycle_depth: usize,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions { eps_deg: EPS_DEG, eps_trunc: None, eps_cycle: None, l_max: 3, cycle_depth: 4 }
    }
}

#[derive(Debug, Clone)]
pub struct ProductExpansion {
    pub factors: Vec<PropagatorTable>,
    /// H^(0) = H, H^(1), …, including the final residual Hamiltonian.
    pub hamiltonians: Vec<HamiltonianSignal>,
    /// residual_norms[ℓ] = sup_t ‖H^(ℓ+1)‖_F, the residual left after factor ℓ.
    pub residual_norms: Vec<f64>,
    /// Agreement of the two H^(ℓ+1) constructions at each step.
    pub route_gaps: Vec<f64>,
    pub basis_defects: Vec<f64>,
    pub status: ExpansionStatus,
}

impl ProductExpansion {
    pub fn grid(&self) -> Grid {
        self.factors[0].grid()
    }
}

pub fn expand(h: &HamiltonianSignal, opts: &ExpandOptions) -> Result<ProductExpansion> {
    let scale = h.sup_norm();
    let eps_trunc = opts.eps_trunc.unwrap_or(1e-9 * (1.0 + fro_norm(&h.value(0))));
    let eps_cycle = opts.eps_cycle.unwrap_or(1e-7 * (1.0 + scale));
    let mut hs = vec![h.clone()];
    let mut factors = Vec::new();
    let mut residual_norms = Vec::new();
    let mut route_gaps = Vec::new();
    let mut basis_defects = Vec::new();
    let mut level = 0;
    let status = loop {
        let step = adiabatic_step(&hs[level], opts.eps_deg)?;
        factors.push(step.u0);
        route_gaps.push(step.route_gap);
        basis_defects.push(step.basis_defect);
        let next = step.h1;
        let r = next.sup_norm();
        residual_norms.push(r);
        hs.push(next);
        if r < eps_trunc {
            break ExpansionStatus::Terminated(level);
        }
        if level >= opts.l_max {
            break ExpansionStatus::Truncated(level);
        }
        let newest = &hs[level + 1];
        let cycle = (1..=opts.cycle_depth.min(level + 1)).find(|&p| sup_distance(newest, &hs[level + 1 - p]) < eps_cycle);
        if let Some(p) = cycle {
            break ExpansionStatus::Cyclic(p);
        }
        level += 1;
    };
    Ok(ProductExpansion { factors, hamiltonians: hs, residual_norms, route_gaps, basis_defects, status })
}

/// sup_t ‖A(t) − B(t)‖_F on a common grid.
pub fn sup_distance(a: &HamiltonianSignal, b: &HamiltonianSignal) -> f64 {
    (0..a.grid().len())
        .map(|k| fro_norm(&(&a.value(k) - &b.value(k))))
        .fold(0.0, f64::max)
}

/// U^(0)(t_k)·U^(1)(t_k)·…, all factors.
pub fn assemble(e: &ProductExpansion, k: usize) -> CMatrix {
    assemble_upto(e, e.factors.len() - 1, k)
}

/// Product of the first `last + 1` factors at grid index k.
pub fn assemble_upto(e: &ProductExpansion, last: usize, k: usize) -> CMatrix {
    let mut u = e.factors[0].at(k).clone();
    for f in &e.factors[1..=last.min(e.factors.len() - 1)] {
        u = &u * f.at(k);
    }
    u
}

pub fn assemble_table(e: &ProductExpansion, last: usize) -> PropagatorTable {
    let grid = e.grid();
    let values = (0..grid.len()).map(|k| assemble_upto(e, last, k)).collect();
    PropagatorTable::new(grid, values).expect("factor tables share the grid")
}

/// sup over interior grid points of ‖i dU/dt − H U‖_F, with dU/dt by
/// five-point differences of the table.
pub fn schrodinger_residual(h: &HamiltonianSignal, u: &PropagatorTable) -> f64 {
    let grid = h.grid();
    let du = crate::grid::derivative(u.values(), grid.dt());
    (2..grid.len().saturating_sub(2))
        .map(|k| {
            let lhs = du[k].scale(crate::linops::C64::new(0.0, 1.0));
            fro_norm(&(&lhs - &(&h.value(k) * u.at(k))))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{matrix_exp, C64};
    use crate::oracle::{self, OracleConfig};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn smooth_two_level(grid: Grid) -> HamiltonianSignal {
        HamiltonianSignal::analytic(grid, |t| {
            CMatrix::from_rows(&[
                [c(1.0 + 0.2 * t.sin(), 0.0), c(0.3 + 0.1 * t, 0.05 * t)],
                [c(0.3 + 0.1 * t, -0.05 * t), c(-1.0, 0.1 * t.cos())],
            ])
        })
    }

    #[test]
    fn constant_input_terminates_immediately() {
        let g = Grid::new(1.0, 200).unwrap();
        let m = CMatrix::from_rows(&[[c(0.5, 0.0), c(0.2, 0.1)], [c(-0.3, 0.0), c(-0.4, 0.2)]]);
        let e = expand(&HamiltonianSignal::constant(g, m.clone()), &ExpandOptions::default()).unwrap();
        assert_eq!(e.status, ExpansionStatus::Terminated(0));
        for k in 0..g.len() {
            let want = matrix_exp(&m.scale(c(0.0, -g.t(k))));
            assert!(fro_norm(&(e.factors[0].at(k) - &want)) < 1e-10);
        }
    }

    #[test]
    fn two_routes_agree_and_u0_inverts() {
        let g = Grid::new(1.0, 1000).unwrap();
        let h = smooth_two_level(g);
        let step = adiabatic_step(&h, EPS_DEG).unwrap();
        assert!(step.route_gap < 1e-8, "{}", step.route_gap);
        for k in 0..g.len() {
            let p = step.u0.at(k) * step.u0_inv.at(k);
            assert!(fro_norm(&(&p - &CMatrix::identity(2))) < 1e-10);
        }
    }

    #[test]
    fn couplings_match_spectral_form() {
        let g = Grid::new(1.0, 1000).unwrap();
        let h = smooth_two_level(g);
        let track = track_levels(&h, EPS_DEG).unwrap();
        let a = coupling_matrices(&track);
        assert!(coupling_crosscheck(&track, &a, &h) < 1e-6);
    }

    #[test]
    fn interaction_picture_transform_vanishes() {
        let g = Grid::new(1.0, 1000).unwrap();
        let h = smooth_two_level(g);
        let u = oracle::propagate(&h, &OracleConfig::default());
        let hp = canonical_transform(&h, &u.inverse().unwrap()).unwrap();
        assert!(hp.sup_norm() < 1e-8, "{}", hp.sup_norm());
    }

    #[test]
    fn generic_two_level_recurs_after_first_iterate() {
        // H^(1) of any two-level system is off-diagonal in the t = 0 eigenbasis,
        // so the iteration falls into the Class-3 recurrence H^(3) = H^(1).
        let g = Grid::new(1.0, 1000).unwrap();
        let h = smooth_two_level(g);
        let e = expand(&h, &ExpandOptions { l_max: 3, ..Default::default() }).unwrap();
        assert_eq!(e.status, ExpansionStatus::Cyclic(2));
        assert!(sup_distance(&e.hamiltonians[3], &e.hamiltonians[1]) < 1e-7);
        let reference = oracle::propagate(&h, &OracleConfig::default());
        let errs: Vec<f64> = (0..e.factors.len())
            .map(|l| oracle::compare(&assemble_table(&e, l), &reference).unwrap().sup_fro)
            .collect();
        // U^(1)U^(2) ≈ 1: the third partial product returns to the first.
        assert!((errs[2] - errs[0]).abs() < 1e-8, "{errs:?}");
        assert_eq!(assemble(&e, 0), CMatrix::identity(2));
    }
}
