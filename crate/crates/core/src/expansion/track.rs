use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linops::{bi_eigensystem, inner, polar_unitary, BiorthoEigensystem, CMatrix};
use crate::signal::HamiltonianSignal;

/// Eigensystems along the grid with a fixed level order and a continuous gauge.
#[derive(Debug, Clone)]
pub struct LevelTrack {
    grid: Grid,
    systems: Vec<BiorthoEigensystem>,
}

impl LevelTrack {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn systems(&self) -> &[BiorthoEigensystem] {
        &self.systems
    }

    pub fn at(&self, k: usize) -> &BiorthoEigensystem {
        &self.systems[k]
    }

    pub fn level_count(&self) -> usize {
        self.systems[0].levels.len()
    }

    pub fn degeneracies(&self) -> Vec<usize> {
        self.systems[0].degeneracies()
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.systems[0].offsets()
    }

    /// E_n(t_k) for every grid point.
    pub fn eigenvalues(&self, level: usize) -> Vec<C64> {
        self.systems.iter().map(|s| s.levels[level].eigenvalue).collect()
    }

    /// Ψ(t_k): right vectors as columns, levels in track order.
    pub fn right_matrices(&self) -> Vec<CMatrix> {
        self.systems.iter().map(|s| s.right_matrix()).collect()
    }

    pub fn left_matrices(&self) -> Vec<CMatrix> {
        self.systems.iter().map(|s| s.left_matrix()).collect()
    }

    /// Worst biorthonormality or completeness defect over the grid.
    pub fn basis_defect(&self) -> f64 {
        self.systems
            .iter()
            .map(|s| s.biorthonormality_error().max(s.completeness_error()))
            .fold(0.0, f64::max)
    }
}

fn min_gap(sys: &BiorthoEigensystem) -> f64 {
    let ev = sys.eigenvalues();
    let mut gap = f64::INFINITY;
    for i in 0..ev.len() {
        for j in (i + 1)..ev.len() {
            gap = gap.min((ev[i] - ev[j]).norm());
        }
    }
    gap
}

fn eigensystem_at(h: &HamiltonianSignal, k: usize, eps_deg: f64) -> Result<BiorthoEigensystem> {
    let t = h.grid().t(k);
    bi_eigensystem(&h.value(k), eps_deg).map_err(|e| match e {
        Error::DefectiveMatrix { .. } => Error::LevelCrossing { t, gap: 0.0 },
        other => other,
    })
}

/// Diagonalizes H at every grid point, keeps the level order fixed by
/// continuity, and aligns each degeneracy subspace to the previous step by
/// the unitary polar factor of the overlap block ⟨φ(t_k)|ψ(t_{k+1})⟩.
pub fn track_levels(h: &HamiltonianSignal, eps_deg: f64) -> Result<LevelTrack> {
    let grid = h.grid();
    let first = eigensystem_at(h, 0, eps_deg)?;
    let mut systems = Vec::with_capacity(grid.len());
    systems.push(first);
    for k in 1..grid.len() {
        let t = grid.t(k);
        let raw = eigensystem_at(h, k, eps_deg)?;
        let prev = &systems[k - 1];
        let nlev = prev.levels.len();
        if raw.levels.len() < nlev {
            return Err(Error::LevelCrossing { t, gap: min_gap(prev) });
        }
        if raw.levels.len() > nlev {
            return Err(Error::DegeneracyChange { t });
        }

        // Match levels to a linear extrapolation of the previous eigenvalues.
        let predicted: Vec<C64> = (0..nlev)
            .map(|i| {
                let e1 = prev.levels[i].eigenvalue;
                if k >= 2 {
                    e1 * 2.0 - systems[k - 2].levels[i].eigenvalue
                } else {
                    e1
                }
            })
            .collect();
        let mut order = Vec::with_capacity(nlev);
        for p in &predicted {
            let j = (0..nlev)
                .min_by(|&a, &b| {
                    (raw.levels[a].eigenvalue - p)
                        .norm()
                        .partial_cmp(&(raw.levels[b].eigenvalue - p).norm())
                        .unwrap()
                })
                .unwrap();
            if order.contains(&j) {
                return Err(Error::LevelCrossing { t, gap: min_gap(&raw) });
            }
            order.push(j);
        }
        let mut levels: Vec<_> = order.iter().map(|&j| raw.levels[j].clone()).collect();
        for (i, l) in levels.iter().enumerate() {
            if l.degeneracy() != prev.levels[i].degeneracy() {
                return Err(Error::DegeneracyChange { t });
            }
        }
        // A pairwise difference E_i − E_j turning by more than a right angle in
        // one step means the levels passed through each other between grid points.
        for i in 0..nlev {
            for j in (i + 1)..nlev {
                let d0 = prev.levels[i].eigenvalue - prev.levels[j].eigenvalue;
                let d1 = levels[i].eigenvalue - levels[j].eigenvalue;
                if (d1 * d0.conj()).re <= 0.0 {
                    return Err(Error::LevelCrossing { t, gap: d0.norm().min(d1.norm()) });
                }
            }
        }

        for (i, l) in levels.iter_mut().enumerate() {
            let pl = &prev.levels[i];
            let d = l.degeneracy();
            let mut o = CMatrix::zeros(d);
            for a in 0..d {
                for b in 0..d {
                    o[(a, b)] = inner(&pl.left[a], &l.right[b]);
                }
            }
            let w = polar_unitary(&o).map_err(|_| Error::LevelCrossing { t, gap: 0.0 })?;
            // ψ'_b = Σ_c ψ_c conj(W_bc), and the same for the duals.
            let rotate = |vs: &[Vec<C64>]| -> Vec<Vec<C64>> {
                (0..d)
                    .map(|b| {
                        let mut v = vec![C64::new(0.0, 0.0); vs[0].len()];
                        for c in 0..d {
                            let w_bc = w[(b, c)].conj();
                            for (x, y) in v.iter_mut().zip(&vs[c]) {
                                *x += y * w_bc;
                            }
                        }
                        v
                    })
                    .collect()
            };
            l.right = rotate(&l.right);
            l.left = rotate(&l.left);
        }
        systems.push(BiorthoEigensystem::new(raw.dim(), levels));
    }
    Ok(LevelTrack { grid, systems })
}
