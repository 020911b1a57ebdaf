//! Time-dependent Hamiltonians on a grid and tabulated propagators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::linops::{fro_norm, CMatrix};

type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Source {
    Analytic { value: MatrixFn, derivative: Option<MatrixFn> },
    Tabulated { values: Vec<CMatrix>, derivatives: Vec<CMatrix> },
}

/// A square complex matrix H(t) known on a uniform grid.
///
/// Analytic signals can be evaluated anywhere in [0, τ]; tabulated ones are
/// interpolated with cubic Lagrange polynomials between grid points.
#[derive(Clone)]
pub struct HamiltonianSignal {
    grid: Grid,
    dim: usize,
    source: Source,
}

impl fmt::Debug for HamiltonianSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.source {
            Source::Analytic { .. } => "analytic",
            Source::Tabulated { .. } => "tabulated",
        };
        f.debug_struct("HamiltonianSignal")
            .field("dim", &self.dim)
            .field("grid", &self.grid)
            .field("kind", &kind)
            .finish()
    }
}

impl HamiltonianSignal {
    pub fn analytic(grid: Grid, f: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        let dim = f(0.0).dim();
        HamiltonianSignal { grid, dim, source: Source::Analytic { value: Arc::new(f), derivative: None } }
    }

    /// Attaches an exact derivative to an analytic signal (ignored for tables).
    pub fn with_derivative(mut self, df: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        if let Source::Analytic { derivative, .. } = &mut self.source {
            *derivative = Some(Arc::new(df));
        }
        self
    }

    pub fn constant(grid: Grid, m: CMatrix) -> Self {
        let dim = m.dim();
        HamiltonianSignal::analytic(grid, move |_| m.clone()).with_derivative(move |_| CMatrix::zeros(dim))
    }

    /// Grid samples; derivatives are taken by five-point differences.
    pub fn tabulated(grid: Grid, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for {} grid points", values.len(), grid.len())));
        }
        let dim = values[0].dim();
        if let Some(bad) = values.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        if values.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("tabulated Hamiltonian has non-finite entries".into()));
        }
        let derivatives = grid::derivative(&values, grid.dt());
        Ok(HamiltonianSignal { grid, dim, source: Source::Tabulated { values, derivatives } })
    }

    pub fn tabulated_with_derivatives(grid: Grid, values: Vec<CMatrix>, derivatives: Vec<CMatrix>) -> Result<Self> {
        let mut s = Self::tabulated(grid, values)?;
        if derivatives.len() != grid.len() {
            return Err(Error::GridMismatch("derivative table length differs from grid".into()));
        }
        if let Source::Tabulated { derivatives: d, .. } = &mut s.source {
            *d = derivatives;
        }
        Ok(s)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.source, Source::Tabulated { .. })
    }

    /// H at grid index k.
    pub fn value(&self, k: usize) -> CMatrix {
        match &self.source {
            Source::Analytic { value, .. } => value(self.grid.t(k)),
            Source::Tabulated { values, .. } => values[k].clone(),
        }
    }

    pub fn value_at(&self, t: f64) -> CMatrix {
        match &self.source {
            Source::Analytic { value, .. } => value(t),
            Source::Tabulated { values, .. } => match self.grid.index_of(t) {
                Some(k) => values[k].clone(),
                None => grid::interpolate(values, self.grid.dt(), t),
            },
        }
    }

    pub fn derivative(&self, k: usize) -> CMatrix {
        match &self.source {
            Source::Tabulated { derivatives, .. } => derivatives[k].clone(),
            _ => self.derivative_at(self.grid.t(k)),
        }
    }

    /// dH/dt; analytic signals without an attached derivative use a
    /// five-point difference with a step far below the grid spacing.
    pub fn derivative_at(&self, t: f64) -> CMatrix {
        match &self.source {
            Source::Analytic { derivative: Some(d), .. } => d(t),
            Source::Analytic { value, derivative: None } => {
                let h = 1e-3 * self.grid.dt().clamp(1e-3, 1.0);
                let w = 1.0 / (12.0 * h);
                let f = |s: f64| value(s);
                let mut d = f(t - 2.0 * h).scale_re(w);
                d -= &f(t - h).scale_re(8.0 * w);
                d += &f(t + h).scale_re(8.0 * w);
                d -= &f(t + 2.0 * h).scale_re(w);
                d
            }
            Source::Tabulated { derivatives, .. } => match self.grid.index_of(t) {
                Some(k) => derivatives[k].clone(),
                None => grid::interpolate(derivatives, self.grid.dt(), t),
            },
        }
    }

    pub fn samples(&self) -> Vec<CMatrix> {
        (0..self.grid.len()).map(|k| self.value(k)).collect()
    }

    pub fn derivative_samples(&self) -> Vec<CMatrix> {
        (0..self.grid.len()).map(|k| self.derivative(k)).collect()
    }

    /// sup_t ‖H(t)‖_F over the grid.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|k| fro_norm(&self.value(k))).fold(0.0, f64::max)
    }

    /// Same signal restricted to (or resampled on) another grid with the same horizon.
    pub fn on_grid(&self, grid: Grid) -> Result<Self> {
        match &self.source {
            Source::Analytic { .. } => Ok(HamiltonianSignal { grid, ..self.clone() }),
            Source::Tabulated { .. } => {
                let values = grid.sample(|t| self.value_at(t));
                HamiltonianSignal::tabulated(grid, values)
            }
        }
    }

    /// Largest deviation between the supplied derivative and central differences
    /// of the samples on interior grid points.
    pub fn derivative_consistency(&self) -> f64 {
        let dt = self.grid.dt();
        (1..self.grid.steps())
            .map(|k| {
                let cd = (&self.value(k + 1) - &self.value(k - 1)).scale_re(0.5 / dt);
                fro_norm(&(&cd - &self.derivative(k)))
            })
            .fold(0.0, f64::max)
    }

    /// ∫₀ᵗ tr H ds at every grid point.
    pub fn trace_integral(&self) -> Vec<num_complex::Complex64> {
        let tr: Vec<_> = (0..self.grid.len()).map(|k| self.value(k).trace()).collect();
        grid::cumulative_integral(&tr, self.grid.dt())
    }
}

/// One evolution-operator factor tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorTable {
    grid: Grid,
    values: Vec<CMatrix>,
}

impl PropagatorTable {
    pub fn new(grid: Grid, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} entries for {} grid points", values.len(), grid.len())));
        }
        Ok(PropagatorTable { grid, values })
    }

    pub fn identity(grid: Grid, dim: usize) -> Self {
        PropagatorTable { grid, values: vec![CMatrix::identity(dim); grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn at(&self, k: usize) -> &CMatrix {
        &self.values[k]
    }

    pub fn last(&self) -> &CMatrix {
        self.values.last().unwrap()
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    pub fn into_values(self) -> Vec<CMatrix> {
        self.values
    }

    /// Pointwise product self(t)·other(t).
    pub fn then(&self, other: &PropagatorTable) -> Result<PropagatorTable> {
        check_same_grid(self.grid, other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(PropagatorTable { grid: self.grid, values })
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> PropagatorTable {
        PropagatorTable { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    /// Pointwise inverse; fails with SingularTransform at the first singular entry.
    pub fn inverse(&self) -> Result<PropagatorTable> {
        let mut values = Vec::with_capacity(self.values.len());
        for (k, u) in self.values.iter().enumerate() {
            values.push(u.try_inverse().ok_or(Error::SingularTransform { t: self.grid.t(k) })?);
        }
        Ok(PropagatorTable { grid: self.grid, values })
    }

    /// max_t ‖U†U − 1‖_F
    pub fn unitarity_defect(&self) -> f64 {
        let id = CMatrix::identity(self.dim());
        self.values
            .iter()
            .map(|u| fro_norm(&(&(&u.adjoint() * u) - &id)))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a.steps() != b.steps() || (a.tau() - b.tau()).abs() > 1e-12 * a.tau() {
        return Err(Error::GridMismatch(format!(
            "grids differ: ({}, {}) vs ({}, {})",
            a.tau(),
            a.steps(),
            b.tau(),
            b.steps()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn tabulated_interpolates_between_grid_points() {
        let g = Grid::new(1.0, 50).unwrap();
        let f = |t: f64| CMatrix::diag(&[C64::new(t.sin(), 0.0), C64::new(0.0, t * t)]);
        let tab = HamiltonianSignal::tabulated(g, g.sample(f)).unwrap();
        let t = 0.4137;
        assert!(fro_norm(&(&tab.value_at(t) - &f(t))) < 1e-8);
        let d = tab.derivative_at(0.5);
        let want = CMatrix::diag(&[C64::new(0.5f64.cos(), 0.0), C64::new(0.0, 1.0)]);
        assert!(fro_norm(&(&d - &want)) < 1e-7);
    }

    #[test]
    fn analytic_derivative_by_differences() {
        let g = Grid::new(1.0, 10).unwrap();
        let s = HamiltonianSignal::analytic(g, |t| CMatrix::diag(&[C64::new(t.exp(), 0.0), C64::new(0.0, 0.0)]));
        let d = s.derivative_at(0.3);
        assert!((d[(0, 0)].re - 0.3f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn mismatched_tables_are_rejected() {
        let g = Grid::new(1.0, 4).unwrap();
        assert!(matches!(
            PropagatorTable::new(g, vec![CMatrix::identity(2); 3]),
            Err(Error::GridMismatch(_))
        ));
        let a = PropagatorTable::identity(g, 2);
        let b = PropagatorTable::identity(Grid::new(1.0, 5).unwrap(), 2);
        assert!(a.then(&b).is_err());
    }
}
