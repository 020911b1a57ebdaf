use num_complex::Complex64 as C64;

use super::track::{track_levels, LevelTrack};
use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::linops::{fro_norm, matrix_exp, CMatrix};
use crate::signal::{check_same_grid, HamiltonianSignal, PropagatorTable};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A(t) = i Φ(t)† dΨ/dt in the level-ordered basis; the (n, m) block is
/// A^{nm}_{cd} = i⟨φ_{n,c}|ψ̇_{m,d}⟩. Eigenvector derivatives are five-point
/// differences of the gauge-aligned track.
pub fn coupling_matrices(track: &LevelTrack) -> Vec<CMatrix> {
    let grid = track.grid();
    let psi = track.right_matrices();
    let dpsi = grid::derivative(&psi, grid.dt());
    track
        .left_matrices()
        .iter()
        .zip(&dpsi)
        .map(|(phi, dp)| (&phi.adjoint() * dp).scale(I))
        .collect()
}

/// Largest discrepancy between the differenced off-diagonal couplings and
/// the spectral form A^{nm} = i⟨φ_n|Ḣ|ψ_m⟩/(E_m − E_n).
pub fn coupling_crosscheck(track: &LevelTrack, couplings: &[CMatrix], h: &HamiltonianSignal) -> f64 {
    let deg = track.degeneracies();
    let off = track.offsets();
    let mut worst = 0.0f64;
    for (k, a) in couplings.iter().enumerate() {
        let sys = track.at(k);
        let phi = sys.left_matrix();
        let psi = sys.right_matrix();
        let hdot = &(&phi.adjoint() * &h.derivative(k)) * &psi;
        for n in 0..deg.len() {
            for m in 0..deg.len() {
                if n == m {
                    continue;
                }
                let de = sys.levels[m].eigenvalue - sys.levels[n].eigenvalue;
                for c in 0..deg[n] {
                    for d in 0..deg[m] {
                        let (i, j) = (off[n] + c, off[m] + d);
                        let spectral = I * hdot[(i, j)] / de;
                        worst = worst.max((spectral - a[(i, j)]).norm());
                    }
                }
            }
        }
    }
    worst
}

fn block(m: &CMatrix, off: usize, d: usize) -> CMatrix {
    let mut b = CMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            b[(i, j)] = m[(off + i, off + j)];
        }
    }
    b
}

/// K^n(t) solving dK/dt = (−iE_n + iA^{nn})K, K(0) = 1.
///
/// Non-degenerate levels use the scalar exponential of a fourth-order running
/// integral. Degenerate levels use a fourth-order Magnus step per grid
/// interval (two Gauss nodes, values interpolated from the grid), composed
/// with later times on the left.
pub fn dynamical_factor(track: &LevelTrack, couplings: &[CMatrix], level: usize) -> Vec<CMatrix> {
    let grid = track.grid();
    let d = track.degeneracies()[level];
    let off = track.offsets()[level];
    let energies = track.eigenvalues(level);
    let gen: Vec<CMatrix> = couplings
        .iter()
        .zip(&energies)
        .map(|(a, &e)| {
            let mut x = block(a, off, d).scale(I);
            for i in 0..d {
                x[(i, i)] -= I * e;
            }
            x
        })
        .collect();
    if d == 1 {
        let scalars: Vec<C64> = gen.iter().map(|x| x[(0, 0)]).collect();
        return grid::cumulative_integral(&scalars, grid.dt())
            .into_iter()
            .map(|p| CMatrix::from_vec(1, vec![p.exp()]))
            .collect();
    }
    let dt = grid.dt();
    let c = 3f64.sqrt() / 6.0;
    let mut k = CMatrix::identity(d);
    let mut out = Vec::with_capacity(grid.len());
    out.push(k.clone());
    for s in 0..grid.steps() {
        let t0 = grid.t(s);
        let x1 = grid::interpolate(&gen, dt, t0 + (0.5 - c) * dt);
        let x2 = grid::interpolate(&gen, dt, t0 + (0.5 + c) * dt);
        let mut omega = (&x1 + &x2).scale_re(dt / 2.0);
        omega += &x2.commutator(&x1).scale_re(3f64.sqrt() / 12.0 * dt * dt);
        k = &matrix_exp(&omega) * &k;
        out.push(k.clone());
    }
    out
}

/// Block-diagonal assembly of the per-level factors at grid index k.
fn block_diag(factors: &[Vec<CMatrix>], off: &[usize], dim: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim);
    for (n, f) in factors.iter().enumerate() {
        let b = &f[k];
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                m[(off[n] + i, off[n] + j)] = b[(i, j)];
            }
        }
    }
    m
}

fn block_diag_inverse(factors: &[Vec<CMatrix>], off: &[usize], dim: usize, k: usize, t: f64) -> Result<CMatrix> {
    let inv: Vec<Vec<CMatrix>> = factors
        .iter()
        .map(|f| f[k].try_inverse().map(|m| vec![m]).ok_or(Error::SingularK { t }))
        .collect::<Result<_>>()?;
    Ok(block_diag(&inv, off, dim, 0))
}

/// U^(0)(t) = Σ_n Σ_ab K^n_ab(t)|ψ_n,a;t⟩⟨φ_n,b;0| together with its inverse
/// Σ_n Σ_ab (K^n)⁻¹_ab(t)|ψ_n,a;0⟩⟨φ_n,b;t|.
pub fn adiabatic_propagator(track: &LevelTrack, factors: &[Vec<CMatrix>]) -> Result<(PropagatorTable, PropagatorTable)> {
    let grid = track.grid();
    let dim = track.at(0).dim();
    let off = track.offsets();
    let psi0 = track.at(0).right_matrix();
    let phi0_h = track.at(0).left_matrix().adjoint();
    let mut u = Vec::with_capacity(grid.len());
    let mut uinv = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        if k == 0 {
            u.push(CMatrix::identity(dim));
            uinv.push(CMatrix::identity(dim));
            continue;
        }
        let sys = track.at(k);
        let kb = block_diag(factors, &off, dim, k);
        let kinv = block_diag_inverse(factors, &off, dim, k, grid.t(k))?;
        u.push(&(&sys.right_matrix() * &kb) * &phi0_h);
        uinv.push(&(&psi0 * &kinv) * &sys.left_matrix().adjoint());
    }
    Ok((PropagatorTable::new(grid, u)?, PropagatorTable::new(grid, uinv)?))
}

/// H′ = g H g⁻¹ − i g d(g⁻¹)/dt, with the derivative of the tabulated g⁻¹
/// taken by five-point differences.
pub fn canonical_transform(h: &HamiltonianSignal, g: &PropagatorTable) -> Result<HamiltonianSignal> {
    check_same_grid(h.grid(), g.grid())?;
    let ginv = g.inverse()?;
    let grid = h.grid();
    let dginv = grid::derivative(ginv.values(), grid.dt());
    let values = (0..grid.len())
        .map(|k| {
            let gk = g.at(k);
            let mut m = &(gk * &h.value(k)) * ginv.at(k);
            m -= &(gk * &dginv[k]).scale(I);
            m
        })
        .collect();
    HamiltonianSignal::tabulated(grid, values)
}

/// One adiabatic canonical transformation: the factor U^(0) and the next
/// Hamiltonian H^(1).
#[derive(Debug, Clone)]
pub struct AdiabaticStep {
    pub u0: PropagatorTable,
    pub u0_inv: PropagatorTable,
    pub h1: HamiltonianSignal,
    /// sup_t ‖H^(1)_sum − H^(1)_transform‖_F between the two constructions.
    pub route_gap: f64,
    /// Worst biorthonormality/completeness defect along the track.
    pub basis_defect: f64,
    /// Set when H = s(t)·M with a constant (possibly non-diagonalizable) M and
    /// the factor was taken as exp(−i∫s·M).
    pub stationary: bool,
    pub track: Option<LevelTrack>,
}

/// Runs one adiabatic step. H^(1) is built from the coupling sum
/// Σ_{n≠m} −K^{n⁻¹} A^{nm} K^m |ψ_n;0⟩⟨φ_m;0| and compared against the direct
/// canonical transform with g = U^(0)⁻¹.
pub fn adiabatic_step(h: &HamiltonianSignal, eps_deg: f64) -> Result<AdiabaticStep> {
    match eigen_route(h, eps_deg) {
        Ok(step) => Ok(step),
        Err(e @ (Error::LevelCrossing { .. } | Error::DegeneracyChange { .. })) => stationary_route(h).ok_or(e),
        Err(e) => Err(e),
    }
}

fn eigen_route(h: &HamiltonianSignal, eps_deg: f64) -> Result<AdiabaticStep> {
    let grid = h.grid();
    let track = track_levels(h, eps_deg)?;
    let couplings = coupling_matrices(&track);
    let factors: Vec<Vec<CMatrix>> = (0..track.level_count())
        .map(|n| dynamical_factor(&track, &couplings, n))
        .collect();
    let (u0, u0_inv) = adiabatic_propagator(&track, &factors)?;

    let dim = h.dim();
    let off = track.offsets();
    let deg = track.degeneracies();
    let psi0 = track.at(0).right_matrix();
    let phi0_h = track.at(0).left_matrix().adjoint();
    let mut h1 = Vec::with_capacity(grid.len());
    for (k, a) in couplings.iter().enumerate() {
        let mut aoff = a.clone();
        for n in 0..deg.len() {
            for i in 0..deg[n] {
                for j in 0..deg[n] {
                    aoff[(off[n] + i, off[n] + j)] = C64::new(0.0, 0.0);
                }
            }
        }
        let kb = block_diag(&factors, &off, dim, k);
        let kinv = block_diag_inverse(&factors, &off, dim, k, grid.t(k))?;
        let inner = (&(&kinv * &aoff) * &kb).scale_re(-1.0);
        h1.push(&(&psi0 * &inner) * &phi0_h);
    }
    let h1 = HamiltonianSignal::tabulated(grid, h1)?;
    let direct = canonical_transform(h, &u0_inv)?;
    let route_gap = (0..grid.len())
        .map(|k| fro_norm(&(&h1.value(k) - &direct.value(k))))
        .fold(0.0, f64::max);
    Ok(AdiabaticStep {
        u0,
        u0_inv,
        h1,
        route_gap,
        basis_defect: track.basis_defect(),
        stationary: false,
        track: Some(track),
    })
}

/// H(t) = s(t)·M + R(t) with M fixed: U^(0) = exp(−i∫s·M) and H^(1) = U^(0)⁻¹ R U^(0).
/// Only used when the residual R is negligible, which is the case for the
/// nilpotent transformed Hamiltonians of the exactly solvable two-level classes.
fn stationary_route(h: &HamiltonianSignal) -> Option<AdiabaticStep> {
    let grid: Grid = h.grid();
    let samples = h.samples();
    let norms: Vec<f64> = samples.iter().map(fro_norm).collect();
    let (kref, &nref) = norms.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    let dim = h.dim();
    if nref == 0.0 {
        let id = PropagatorTable::identity(grid, dim);
        return Some(AdiabaticStep {
            u0: id.clone(),
            u0_inv: id,
            h1: HamiltonianSignal::tabulated(grid, vec![CMatrix::zeros(dim); grid.len()]).ok()?,
            route_gap: 0.0,
            basis_defect: 0.0,
            stationary: true,
            track: None,
        });
    }
    let m = samples[kref].scale_re(1.0 / nref);
    let s: Vec<C64> = samples.iter().map(|x| m.fro_inner(x)).collect();
    let resid: Vec<CMatrix> = samples.iter().zip(&s).map(|(x, &sk)| x - &m.scale(sk)).collect();
    let worst = resid.iter().map(fro_norm).fold(0.0, f64::max);
    if worst > 1e-6 * nref {
        return None;
    }
    let phase = grid::cumulative_integral(&s, grid.dt());
    let u: Vec<CMatrix> = phase.iter().map(|&p| matrix_exp(&m.scale(-I * p))).collect();
    let uinv: Vec<CMatrix> = phase.iter().map(|&p| matrix_exp(&m.scale(I * p))).collect();
    let h1: Vec<CMatrix> = resid
        .iter()
        .zip(u.iter().zip(&uinv))
        .map(|(r, (uk, ui))| &(ui * r) * uk)
        .collect();
    Some(AdiabaticStep {
        u0: PropagatorTable::new(grid, u).ok()?,
        u0_inv: PropagatorTable::new(grid, uinv).ok()?,
        h1: HamiltonianSignal::tabulated(grid, h1).ok()?,
        route_gap: 0.0,
        basis_defect: 0.0,
        stationary: true,
        track: None,
    })
}
