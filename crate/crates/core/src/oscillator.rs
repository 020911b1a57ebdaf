//! ẍ + ω(t)²x = 0 as the Class-3 system i d/dt (x, v) = [[0, i], [−iω², 0]] (x, v).

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::linops::{pauli, CMatrix};
use crate::oracle::{self, OracleConfig};
use crate::signal::PropagatorTable;
use crate::twolevel::{self, TwoLevelCoeffs};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Highest Dyson order evaluated.
pub const DYSON_MAX: usize = 6;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct OscillatorScenario {
    grid: Grid,
    omega: RealFn,
    domega: Option<RealFn>,
    pub x0: f64,
    pub v0: f64,
}

impl std::fmt::Debug for OscillatorScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OscillatorScenario")
            .field("grid", &self.grid)
            .field("x0", &self.x0)
            .field("v0", &self.v0)
            .finish()
    }
}

impl OscillatorScenario {
    /// Checks ω > 0 (and finite) on every grid point.
    pub fn new(grid: Grid, omega: impl Fn(f64) -> f64 + Send + Sync + 'static, x0: f64, v0: f64) -> Result<Self> {
        let s = OscillatorScenario { grid, omega: Arc::new(omega), domega: None, x0, v0 };
        for k in 0..grid.len() {
            let w = (s.omega)(grid.t(k));
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonpositiveFrequency { t: grid.t(k), omega: w });
            }
        }
        Ok(s)
    }

    pub fn with_derivative(mut self, domega: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.domega = Some(Arc::new(domega));
        self
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn omega(&self, t: f64) -> f64 {
        (self.omega)(t)
    }

    pub fn omega_dot(&self, t: f64) -> f64 {
        match &self.domega {
            Some(d) => d(t),
            None => {
                let h = 1e-4;
                let w = &self.omega;
                (w(t - 2.0 * h) - 8.0 * w(t - h) + 8.0 * w(t + h) - w(t + 2.0 * h)) / (12.0 * h)
            }
        }
    }
}

/// a = 0, b = i, c = −iω², so E = ω and f = i√(c/b) = ω.
pub fn to_twolevel(s: &OscillatorScenario) -> Result<TwoLevelCoeffs> {
    let (w, dw) = (s.omega.clone(), s.clone());
    let zero = C64::new(0.0, 0.0);
    TwoLevelCoeffs::from_fn_with_derivative(
        s.grid,
        move |t| {
            let om = w(t);
            [zero, I, -I * om * om]
        },
        move |t| [zero, zero, -I * 2.0 * dw.omega(t) * dw.omega_dot(t)],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryMethod {
    /// Modified expansion with this many stages.
    Product(usize),
    Oracle,
    /// U^(0) times the Dyson partial sum of U^(1) up to this order.
    Dyson(usize),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub propagator: PropagatorTable,
}

impl Trajectory {
    /// x₁v₂ − x₂v₁ for the two fundamental solutions, i.e. det U.
    pub fn wronskian(&self) -> Vec<C64> {
        self.propagator.values().iter().map(|u| u.det()).collect()
    }
}

pub fn propagator(s: &OscillatorScenario, method: TrajectoryMethod) -> Result<PropagatorTable> {
    let c = to_twolevel(s)?;
    match method {
        TrajectoryMethod::Oracle => Ok(oracle::propagate(&c.to_signal(), &OracleConfig::default())),
        TrajectoryMethod::Product(levels) => Ok(twolevel::modified_expansion(&c, levels.max(1))?.propagator()),
        TrajectoryMethod::Dyson(n) => {
            let u0 = twolevel::modified_expansion(&c, 1)?.propagator();
            let eh = eta_hamiltonian(s)?;
            u0.then(&dyson_propagator(&eh, n))
        }
    }
}

pub fn solve_trajectory(s: &OscillatorScenario, method: TrajectoryMethod) -> Result<Trajectory> {
    let u = propagator(s, method)?;
    let (x0, v0) = (C64::new(s.x0, 0.0), C64::new(s.v0, 0.0));
    let mut x = Vec::with_capacity(s.grid.len());
    let mut v = Vec::with_capacity(s.grid.len());
    for m in u.values() {
        let state = m.mul_vec(&[x0, v0]);
        x.push(state[0].re);
        v.push(state[1].re);
    }
    Ok(Trajectory { grid: s.grid, x, v, propagator: u })
}

/// H^(1) of the ω₀ = 1 normalized system as a function of η = 2∫ω.
///
/// Normalizing by the constant similarity D = diag(1, 1/ω₀) gives the same
/// matrix as rescaling time: H^(1) = D⁻¹ [E^(1)(sin η σ₁ + cos η σ₃)] D,
/// E^(1) = iω̇/(2ω). Dividing by dη/dt = 2ω turns it into H̃(η).
#[derive(Debug, Clone)]
pub struct EtaHamiltonian {
    pub grid: Grid,
    /// η(t_k), strictly increasing.
    pub eta: Vec<f64>,
    /// ω′ = dω/dη = ω̇/(2ω)
    pub omega_prime: Vec<f64>,
    pub omega: Vec<f64>,
    /// H̃(η(t_k)), normalized frame.
    pub h_tilde: Vec<CMatrix>,
    pub omega0: f64,
}

impl EtaHamiltonian {
    /// H^(1)(t_k) of the normalized system, = H̃·dη/dt.
    pub fn h1_normalized(&self, k: usize) -> CMatrix {
        self.h_tilde[k].scale_re(2.0 * self.omega[k])
    }

    /// Undoes the normalization: D⁻¹ M D.
    pub fn denormalize(&self, m: &CMatrix) -> CMatrix {
        let d = CMatrix::diag(&[C64::new(1.0, 0.0), C64::new(1.0 / self.omega0, 0.0)]);
        let di = CMatrix::diag(&[C64::new(1.0, 0.0), C64::new(self.omega0, 0.0)]);
        &(&di * m) * &d
    }
}

pub fn eta_hamiltonian(s: &OscillatorScenario) -> Result<EtaHamiltonian> {
    let grid = s.grid;
    let omega: Vec<f64> = grid.sample(|t| s.omega(t));
    if let Some(k) = omega.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::NonpositiveFrequency { t: grid.t(k), omega: omega[k] });
    }
    let twice: Vec<f64> = omega.iter().map(|w| 2.0 * w).collect();
    let eta = grid::cumulative_integral(&twice, grid.dt());
    let omega_prime: Vec<f64> = (0..grid.len()).map(|k| s.omega_dot(grid.t(k)) / (2.0 * omega[k])).collect();
    let (s1, s3) = (pauli(1), pauli(3));
    let h_tilde = (0..grid.len())
        .map(|k| {
            let amp = I * omega_prime[k] / (2.0 * omega[k]);
            (&s1.scale_re(eta[k].sin()) + &s3.scale_re(eta[k].cos())).scale(amp)
        })
        .collect();
    Ok(EtaHamiltonian { grid, eta, omega_prime, omega: omega.clone(), h_tilde, omega0: omega[0] })
}

/// Partial sums Σ_{k≤n} D_k of the time-ordered series for U^(1), with
/// D_k(η) = ∫₀^η (−i)H̃(s) D_{k−1}(s) ds over the ordered simplex, evaluated as
/// n nested cumulative integrals on the time grid (dη = 2ω dt). The result is
/// returned in the original frame.
pub fn dyson_propagator(eh: &EtaHamiltonian, n: usize) -> PropagatorTable {
    let n = n.min(DYSON_MAX);
    let len = eh.grid.len();
    let mut term: Vec<CMatrix> = vec![CMatrix::identity(2); len];
    let mut sum = term.clone();
    let integrand_h: Vec<CMatrix> = (0..len).map(|k| eh.h1_normalized(k).scale(-I)).collect();
    for _ in 0..n {
        let integrand: Vec<CMatrix> = (0..len).map(|k| &integrand_h[k] * &term[k]).collect();
        term = grid::cumulative_integral(&integrand, eh.grid.dt());
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    let values = sum.iter().map(|m| eh.denormalize(m)).collect();
    PropagatorTable::new(eh.grid, values).expect("table length matches grid")
}
