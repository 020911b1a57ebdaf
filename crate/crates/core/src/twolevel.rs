//! Closed forms for traceless two-level Hamiltonians H = [[a, b], [c, −a]].
//!
//! E = √(a² + bc) is kept on one continuous branch, starting from the
//! principal root at t = 0. The eigenvector chart (−b, a+E), (a+E, c) is the
//! one every formula here assumes; where a + E vanishes the functions fail
//! with `ChartSingularity` instead of switching charts silently.
//!
//! For a ≡ 0 (Class 3) the modified expansion uses the ratio g = E/b and the
//! equivalent vectors (1, ∓g), which stay regular when b and c both vanish
//! at t = 0, as they do for every iterate after the first.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::linops::{pauli, CMatrix};
use crate::signal::{HamiltonianSignal, PropagatorTable};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative size of |a + E| / |E| below which the eigenvector chart is rejected.
pub const EPS_CHART: f64 = 1e-6;
/// Default relative tolerance of the class tests.
pub const EPS_CLASS: f64 = 1e-8;

type CoeffFn = Arc<dyn Fn(f64) -> [C64; 3] + Send + Sync>;

/// Sampled coefficients a, b, c with their time derivatives and the branch of E.
#[derive(Clone)]
pub struct TwoLevelCoeffs {
    grid: Grid,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub c: Vec<C64>,
    pub da: Vec<C64>,
    pub db: Vec<C64>,
    pub dc: Vec<C64>,
    e: Vec<C64>,
    de: Vec<C64>,
    source: Option<CoeffFn>,
}

impl std::fmt::Debug for TwoLevelCoeffs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoLevelCoeffs")
            .field("grid", &self.grid)
            .field("a0", &self.a[0])
            .field("b0", &self.b[0])
            .field("c0", &self.c[0])
            .finish()
    }
}

/// E on a continuous branch: principal root at the first point, then the
/// sign closest to the previous value.
fn energy_branch(a: &[C64], b: &[C64], c: &[C64]) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let root = (a[k] * a[k] + b[k] * c[k]).sqrt();
        let e = match out.last() {
            None => root,
            Some(&prev) => {
                if (root - prev).norm() <= (root + prev).norm() {
                    root
                } else {
                    -root
                }
            }
        };
        out.push(e);
    }
    out
}

impl TwoLevelCoeffs {
    fn assemble(
        grid: Grid,
        (a, b, c): (Vec<C64>, Vec<C64>, Vec<C64>),
        (da, db, dc): (Vec<C64>, Vec<C64>, Vec<C64>),
        source: Option<CoeffFn>,
    ) -> Result<Self> {
        for v in [&a, &b, &c, &da, &db, &dc] {
            if v.len() != grid.len() {
                return Err(Error::GridMismatch("coefficient table length differs from grid".into()));
            }
            if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite("two-level coefficients".into()));
            }
        }
        let e = energy_branch(&a, &b, &c);
        let de = (0..grid.len())
            .map(|k| {
                if e[k].norm() == 0.0 {
                    ZERO
                } else {
                    (a[k] * da[k] + (db[k] * c[k] + b[k] * dc[k]) * 0.5) / e[k]
                }
            })
            .collect();
        Ok(TwoLevelCoeffs { grid, a, b, c, da, db, dc, e, de, source })
    }

    /// Coefficients given by a function of time; derivatives by differences
    /// with a step well below the grid spacing.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> [C64; 3] + Send + Sync + 'static) -> Result<Self> {
        let f: CoeffFn = Arc::new(f);
        let h = 1e-3 * grid.dt().clamp(1e-3, 1.0);
        let g = f.clone();
        let df = move |t: f64| {
            let (m2, m1, p1, p2) = (g(t - 2.0 * h), g(t - h), g(t + h), g(t + 2.0 * h));
            let mut d = [ZERO; 3];
            for i in 0..3 {
                d[i] = (m2[i] - m1[i] * 8.0 + p1[i] * 8.0 - p2[i]) / (12.0 * h);
            }
            d
        };
        Self::build_from(grid, f, df)
    }

    pub fn from_fn_with_derivative(
        grid: Grid,
        f: impl Fn(f64) -> [C64; 3] + Send + Sync + 'static,
        df: impl Fn(f64) -> [C64; 3],
    ) -> Result<Self> {
        Self::build_from(grid, Arc::new(f), df)
    }

    fn build_from(grid: Grid, f: CoeffFn, df: impl Fn(f64) -> [C64; 3]) -> Result<Self> {
        let vals: Vec<[C64; 3]> = grid.sample(|t| f(t));
        let ders: Vec<[C64; 3]> = grid.sample(df);
        let col = |v: &[[C64; 3]], i: usize| v.iter().map(|x| x[i]).collect::<Vec<_>>();
        Self::assemble(
            grid,
            (col(&vals, 0), col(&vals, 1), col(&vals, 2)),
            (col(&ders, 0), col(&ders, 1), col(&ders, 2)),
            Some(f),
        )
    }

    /// Tabulated coefficients; derivatives by five-point differences.
    pub fn from_tables(grid: Grid, a: Vec<C64>, b: Vec<C64>, c: Vec<C64>) -> Result<Self> {
        if a.len() != grid.len() || b.len() != grid.len() || c.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient table length differs from grid".into()));
        }
        let dt = grid.dt();
        let (da, db, dc) = (grid::derivative(&a, dt), grid::derivative(&b, dt), grid::derivative(&c, dt));
        Self::assemble(grid, (a, b, c), (da, db, dc), None)
    }

    pub fn from_tables_with_derivatives(
        grid: Grid,
        (a, b, c): (Vec<C64>, Vec<C64>, Vec<C64>),
        (da, db, dc): (Vec<C64>, Vec<C64>, Vec<C64>),
    ) -> Result<Self> {
        Self::assemble(grid, (a, b, c), (da, db, dc), None)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// E(t_k) on the continuity-fixed branch.
    pub fn energy(&self) -> &[C64] {
        &self.e
    }

    pub fn energy_derivative(&self) -> &[C64] {
        &self.de
    }

    pub fn matrix(&self, k: usize) -> CMatrix {
        CMatrix::from_rows(&[[self.a[k], self.b[k]], [self.c[k], -self.a[k]]])
    }

    /// The Hamiltonian as a signal: analytic when the coefficients came from a
    /// function, otherwise tabulated with the stored derivatives.
    pub fn to_signal(&self) -> HamiltonianSignal {
        match &self.source {
            Some(f) => {
                let f = f.clone();
                HamiltonianSignal::analytic(self.grid, move |t| {
                    let [a, b, c] = f(t);
                    CMatrix::from_rows(&[[a, b], [c, -a]])
                })
            }
            None => {
                let values = (0..self.grid.len()).map(|k| self.matrix(k)).collect();
                let ders = (0..self.grid.len())
                    .map(|k| CMatrix::from_rows(&[[self.da[k], self.db[k]], [self.dc[k], -self.da[k]]]))
                    .collect();
                HamiltonianSignal::tabulated_with_derivatives(self.grid, values, ders)
                    .expect("coefficient tables match the grid")
            }
        }
    }

    /// Smallest |E| over the grid.
    pub fn min_gap(&self) -> f64 {
        self.e.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    fn scale(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    fn check_chart(&self, k: usize) -> Result<()> {
        let e = self.e[k];
        let t = self.grid.t(k);
        if e.norm() <= crate::linops::EPS_DEG * 1f64.max(self.scale()) {
            return Err(Error::LevelCrossing { t, gap: 2.0 * e.norm() });
        }
        if (self.a[k] + e).norm() <= EPS_CHART * e.norm() {
            return Err(Error::ChartSingularity { t });
        }
        Ok(())
    }

    fn check_chart_all(&self) -> Result<()> {
        (0..self.grid.len()).try_for_each(|k| self.check_chart(k))
    }
}

/// Splits off the trace: H̄ = H + (tr H̄/2)·1. Returns the traceless
/// coefficients and the phase e^{i∫tr H̄/2}, so that U_H̄ = e^{−i∫tr H̄/2}·U_H.
pub fn detrace(hbar: &HamiltonianSignal) -> Result<(TwoLevelCoeffs, Vec<C64>)> {
    if hbar.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: hbar.dim() });
    }
    let grid = hbar.grid();
    let tr: Vec<C64> = (0..grid.len()).map(|k| hbar.value(k).trace()).collect();
    let phase = grid::cumulative_integral(&tr, grid.dt())
        .into_iter()
        .map(|s| (I * s * 0.5).exp())
        .collect();
    let split = |m: &CMatrix| [(m[(0, 0)] - m[(1, 1)]) * 0.5, m[(0, 1)], m[(1, 0)]];
    let vals: Vec<[C64; 3]> = (0..grid.len()).map(|k| split(&hbar.value(k))).collect();
    let ders: Vec<[C64; 3]> = (0..grid.len()).map(|k| split(&hbar.derivative(k))).collect();
    let col = |v: &[[C64; 3]], i: usize| v.iter().map(|x| x[i]).collect::<Vec<_>>();
    let source: Option<CoeffFn> = if hbar.is_tabulated() {
        None
    } else {
        let h = hbar.clone();
        Some(Arc::new(move |t| split(&h.value_at(t))))
    };
    let coeffs = TwoLevelCoeffs::assemble(
        grid,
        (col(&vals, 0), col(&vals, 1), col(&vals, 2)),
        (col(&ders, 0), col(&ders, 1), col(&ders, 2)),
        source,
    )?;
    Ok((coeffs, phase))
}

/// Eigen-data at one grid point in the (a + E) chart.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    /// [−E, E]
    pub eigenvalues: [C64; 2],
    /// ψ₁ = (−b, a+E), ψ₂ = (a+E, c)
    pub psi: [[C64; 2]; 2],
    /// φ₁ = (−c*, a*+E*)/N*, φ₂ = (a*+E*, b*)/N*, as column vectors.
    pub phi: [[C64; 2]; 2],
    /// N = 2E(a+E)
    pub norm: C64,
}

impl EigenData {
    /// ⟨φ_i|ψ_j⟩
    pub fn overlap(&self, i: usize, j: usize) -> C64 {
        self.phi[i][0].conj() * self.psi[j][0] + self.phi[i][1].conj() * self.psi[j][1]
    }

    /// Σ E_n |ψ_n⟩⟨φ_n|
    pub fn reconstruct(&self) -> CMatrix {
        let mut m = CMatrix::zeros(2);
        for n in 0..2 {
            m += &CMatrix::outer(&self.psi[n], &self.phi[n]).scale(self.eigenvalues[n]);
        }
        m
    }
}

pub fn eigendata(c: &TwoLevelCoeffs, k: usize) -> Result<EigenData> {
    c.check_chart(k)?;
    let (a, b, cc, e) = (c.a[k], c.b[k], c.c[k], c.e[k]);
    let n = e * (a + e) * 2.0;
    let nc = n.conj();
    Ok(EigenData {
        eigenvalues: [-e, e],
        psi: [[-b, a + e], [a + e, cc]],
        phi: [[-cc.conj() / nc, (a + e).conj() / nc], [(a + e).conj() / nc, b.conj() / nc]],
        norm: n,
    })
}

/// η, α and the dynamical factors K¹, K² on the grid.
#[derive(Debug, Clone)]
pub struct DynamicalData {
    pub eta: Vec<C64>,
    pub alpha: Vec<C64>,
    pub k1: Vec<C64>,
    pub k2: Vec<C64>,
}

/// η = 2∫E, α = η/2 + (i/4)∫(c ḃ − b ċ)/(E(E+a)) dt, and
/// K^{1,2} = exp(±iη/2 − ∫(ȧ + Ė + {c ḃ, b ċ}/(a+E))/(2E) dt).
pub fn dynamical_data(c: &TwoLevelCoeffs) -> Result<DynamicalData> {
    c.check_chart_all()?;
    let dt = c.grid.dt();
    let n = c.grid.len();
    let (e, de) = (&c.e, &c.de);
    let twice_e: Vec<C64> = e.iter().map(|x| x * 2.0).collect();
    let eta = grid::cumulative_integral(&twice_e, dt);
    let alpha_int: Vec<C64> = (0..n)
        .map(|k| (c.c[k] * c.db[k] - c.b[k] * c.dc[k]) / (e[k] * (e[k] + c.a[k])))
        .collect();
    let alpha_int = grid::cumulative_integral(&alpha_int, dt);
    let alpha = (0..n).map(|k| eta[k] * 0.5 + I * 0.25 * alpha_int[k]).collect();
    let w1: Vec<C64> = (0..n)
        .map(|k| (c.da[k] + de[k] + c.c[k] * c.db[k] / (c.a[k] + e[k])) / (e[k] * 2.0))
        .collect();
    let w2: Vec<C64> = (0..n)
        .map(|k| (c.da[k] + de[k] + c.b[k] * c.dc[k] / (c.a[k] + e[k])) / (e[k] * 2.0))
        .collect();
    let (i1, i2) = (grid::cumulative_integral(&w1, dt), grid::cumulative_integral(&w2, dt));
    let k1 = (0..n).map(|k| (I * eta[k] * 0.5 - i1[k]).exp()).collect();
    let k2 = (0..n).map(|k| (-I * eta[k] * 0.5 - i2[k]).exp()).collect();
    Ok(DynamicalData { eta, alpha, k1, k2 })
}

/// ξ = (−i e^{−2iα}/2)(1 + a/E) d/dt[c/(a+E)] and
/// ζ = (i e^{2iα}/2)(1 + a/E) d/dt[b/(a+E)]; the ratio derivatives follow from
/// the chain rule on the stored coefficient derivatives.
pub fn xi_zeta(c: &TwoLevelCoeffs, dyn_data: &DynamicalData) -> Result<(Vec<C64>, Vec<C64>)> {
    c.check_chart_all()?;
    let n = c.grid.len();
    let mut xi = Vec::with_capacity(n);
    let mut zeta = Vec::with_capacity(n);
    for k in 0..n {
        let (a, e) = (c.a[k], c.e[k]);
        let s = a + e;
        let ds = c.da[k] + c.de[k];
        let d_c_ratio = (c.dc[k] * s - c.c[k] * ds) / (s * s);
        let d_b_ratio = (c.db[k] * s - c.b[k] * ds) / (s * s);
        let pref = C64::new(1.0, 0.0) + a / e;
        let alpha = dyn_data.alpha[k];
        xi.push(-I * 0.5 * (-I * alpha * 2.0).exp() * pref * d_c_ratio);
        zeta.push(I * 0.5 * (I * alpha * 2.0).exp() * pref * d_b_ratio);
    }
    Ok((xi, zeta))
}

/// Coefficients of H^(1) from ξ, ζ and the t = 0 data.
pub fn transformed_coeffs(c: &TwoLevelCoeffs, xi: &[C64], zeta: &[C64]) -> Result<TwoLevelCoeffs> {
    c.check_chart(0)?;
    let (a0, b0, c0, e0) = (c.a[0], c.b[0], c.c[0], c.e[0]);
    let s0 = a0 + e0;
    let den = e0 * s0 * 2.0;
    let a1: Vec<C64> = xi.iter().zip(zeta).map(|(&x, &z)| -(b0 * x + c0 * z) / (e0 * 2.0)).collect();
    let b1: Vec<C64> = xi.iter().zip(zeta).map(|(&x, &z)| -(b0 * b0 * x - s0 * s0 * z) / den).collect();
    let c1: Vec<C64> = xi.iter().zip(zeta).map(|(&x, &z)| -(-(s0 * s0) * x + c0 * c0 * z) / den).collect();
    TwoLevelCoeffs::from_tables(c.grid, a1, b1, c1)
}

/// H^(1) of a general traceless two-level Hamiltonian by the closed forms.
pub fn first_transformed(c: &TwoLevelCoeffs) -> Result<TwoLevelCoeffs> {
    let d = dynamical_data(c)?;
    let (xi, zeta) = xi_zeta(c, &d)?;
    transformed_coeffs(c, &xi, &zeta)
}

/// U^(0) = K¹|ψ₁;t⟩⟨φ₁;0| + K²|ψ₂;t⟩⟨φ₂;0| from the closed forms.
pub fn adiabatic_propagator(c: &TwoLevelCoeffs, d: &DynamicalData) -> Result<PropagatorTable> {
    let e0 = eigendata(c, 0)?;
    let mut values = Vec::with_capacity(c.grid.len());
    for k in 0..c.grid.len() {
        if k == 0 {
            values.push(CMatrix::identity(2));
            continue;
        }
        let ek = eigendata(c, k)?;
        let mut u = CMatrix::outer(&ek.psi[0], &e0.phi[0]).scale(d.k1[k]);
        u += &CMatrix::outer(&ek.psi[1], &e0.phi[1]).scale(d.k2[k]);
        values.push(u);
    }
    PropagatorTable::new(c.grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassTag {
    Class1(C64),
    Class2(C64),
    Class3,
    Generic,
}

/// Relative variation max_k |r_k − r̄| / max_k |r_k| (0 for an identically zero ratio).
fn ratio_variation(r: &[C64]) -> (f64, C64) {
    let mean = r.iter().sum::<C64>() / r.len() as f64;
    let big = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return (0.0, ZERO);
    }
    let var = r.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max) / big;
    (var, mean)
}

/// Class3 if a ≡ 0, else Class1(μ) if c/(a+E) ≡ μ, else Class2(ν) if
/// b/(a+E) ≡ ν, else Generic; all tests relative at `eps_class`.
pub fn classify(c: &TwoLevelCoeffs, eps_class: f64) -> ClassTag {
    let scale = c.scale();
    if scale == 0.0 || c.a.iter().all(|z| z.norm() < eps_class * scale) {
        return ClassTag::Class3;
    }
    if c.check_chart_all().is_err() {
        return ClassTag::Generic;
    }
    let s: Vec<C64> = c.a.iter().zip(&c.e).map(|(a, e)| a + e).collect();
    let mu: Vec<C64> = c.c.iter().zip(&s).map(|(x, y)| x / y).collect();
    let (var, m) = ratio_variation(&mu);
    if var < eps_class {
        return ClassTag::Class1(m);
    }
    let nu: Vec<C64> = c.b.iter().zip(&s).map(|(x, y)| x / y).collect();
    let (var, m) = ratio_variation(&nu);
    if var < eps_class {
        return ClassTag::Class2(m);
    }
    ClassTag::Generic
}

/// First adiabatic step of a Class-3 Hamiltonian in closed form.
#[derive(Debug, Clone)]
pub struct Class3Step {
    /// E^(1) = iḟ/(2f), f = i√(c/b) on the branch f = iE/b.
    pub e1: Vec<C64>,
    pub eta: Vec<C64>,
    pub f: Vec<C64>,
    pub f0: C64,
    /// a^(1) = E^(1)cos η, b^(1) = E^(1)sin η/f₀, c^(1) = f₀E^(1)sin η
    pub h1: TwoLevelCoeffs,
    /// b₀ = c₀: H^(1) = E^(1) e^{iησ₁/2} σ₃ e^{−iησ₁/2}
    pub pauli_case: bool,
}

fn require_class3(c: &TwoLevelCoeffs) -> Result<()> {
    let scale = c.scale().max(f64::MIN_POSITIVE);
    if let Some(k) = c.a.iter().position(|z| z.norm() > 1e-8 * scale) {
        return Err(Error::ConditionViolated(format!(
            "Class 3 requires a = 0, found |a| = {:.3e} at t = {}",
            c.a[k].norm(),
            c.grid.t(k)
        )));
    }
    for k in 0..c.grid.len() {
        if c.b[k].norm() <= 1e-12 * scale || c.c[k].norm() <= 1e-12 * scale {
            return Err(Error::VanishingOffDiagonal { t: c.grid.t(k) });
        }
    }
    Ok(())
}

pub fn class3_step(c: &TwoLevelCoeffs) -> Result<Class3Step> {
    require_class3(c)?;
    let n = c.grid.len();
    let g: Vec<C64> = (0..n).map(|k| c.e[k] / c.b[k]).collect();
    let f: Vec<C64> = g.iter().map(|x| I * x).collect();
    // ġ/g = (ċ/c − ḃ/b)/2
    let e1: Vec<C64> = (0..n).map(|k| I * 0.25 * (c.dc[k] / c.c[k] - c.db[k] / c.b[k])).collect();
    let twice_e: Vec<C64> = c.e.iter().map(|x| x * 2.0).collect();
    let eta = grid::cumulative_integral(&twice_e, c.grid.dt());
    let f0 = f[0];
    let a1 = (0..n).map(|k| e1[k] * eta[k].cos()).collect();
    let b1 = (0..n).map(|k| e1[k] * eta[k].sin() / f0).collect();
    let c1 = (0..n).map(|k| f0 * e1[k] * eta[k].sin()).collect();
    let h1 = TwoLevelCoeffs::from_tables(c.grid, a1, b1, c1)?;
    let pauli_case = (c.b[0] - c.c[0]).norm() <= 1e-12 * c.scale();
    Ok(Class3Step { e1, eta, f, f0, h1, pauli_case })
}

/// diag(e^{iγ/2}, e^{−iγ/2}) = exp(i(γ/2)σ₃)
fn sigma3_gauge(gamma: C64) -> CMatrix {
    CMatrix::diag(&[(I * gamma * 0.5).exp(), (-I * gamma * 0.5).exp()])
}

/// Output of the σ₃ rephasing that removes the diagonal of H^(1).
#[derive(Debug, Clone)]
pub struct Rephased {
    pub coeffs: TwoLevelCoeffs,
    /// γ = 2∫a^(1)
    pub gamma: Vec<C64>,
    /// g(t) = exp(i∫a^(1) σ₃); U_{H₁} = g·U_{H^(1)}.
    pub gauge: PropagatorTable,
}

pub fn rephase_to_class3(h1: &TwoLevelCoeffs) -> Result<Rephased> {
    let n = h1.grid.len();
    let twice_a: Vec<C64> = h1.a.iter().map(|x| x * 2.0).collect();
    let gamma = grid::cumulative_integral(&twice_a, h1.grid.dt());
    let b: Vec<C64> = (0..n).map(|k| h1.b[k] * (I * gamma[k]).exp()).collect();
    let c: Vec<C64> = (0..n).map(|k| h1.c[k] * (-I * gamma[k]).exp()).collect();
    let db = (0..n)
        .map(|k| (h1.db[k] + I * 2.0 * h1.a[k] * h1.b[k]) * (I * gamma[k]).exp())
        .collect();
    let dc = (0..n)
        .map(|k| (h1.dc[k] - I * 2.0 * h1.a[k] * h1.c[k]) * (-I * gamma[k]).exp())
        .collect();
    let coeffs =
        TwoLevelCoeffs::from_tables_with_derivatives(h1.grid, (vec![ZERO; n], b, c), (vec![ZERO; n], db, dc))?;
    let gauge = PropagatorTable::new(h1.grid, gamma.iter().map(|&g| sigma3_gauge(g)).collect())?;
    Ok(Rephased { coeffs, gamma, gauge })
}

/// One stage of the modified expansion in the ratio chart g = E/b.
#[derive(Debug, Clone)]
pub struct Class3Stage {
    /// E_j of the stage Hamiltonian H_j = [[0, b_j], [c_j, 0]]
    pub energy: Vec<C64>,
    pub g: Vec<C64>,
    /// E^(1)_j = (i/2) ġ_j/g_j: amplitude of the stage's transformed Hamiltonian.
    pub e1: Vec<C64>,
    pub eta: Vec<C64>,
    /// f_j(0) = i g_j(0)
    pub f0: C64,
    /// Adiabatic propagator U_j^(0) of H_j.
    pub u0: PropagatorTable,
}

/// U^(0) = K₁|ψ₁;t⟩⟨φ₁;0| + K₂|ψ₂;t⟩⟨φ₂;0| with ψ_{1,2} = (1, ∓g), duals
/// (1/2, ∓1/(2g)) and K_{1,2} = e^{±iη/2}·e^{i∫E^(1)}.
fn stage_propagator(grid: Grid, g: &[C64], eta: &[C64], e1: &[C64]) -> Result<PropagatorTable> {
    let s = grid::cumulative_integral(e1, grid.dt());
    let g0 = g[0];
    let values = (0..grid.len())
        .map(|k| {
            if k == 0 {
                return CMatrix::identity(2);
            }
            let amp = (I * s[k]).exp();
            let k1 = (I * eta[k] * 0.5).exp() * amp;
            let k2 = (-I * eta[k] * 0.5).exp() * amp;
            let half = C64::new(0.5, 0.0);
            // K1 (1, −g)ᵀ(1/2, −1/(2g0)) + K2 (1, g)ᵀ(1/2, 1/(2g0))
            let (p, m) = (k1 + k2, k2 - k1);
            CMatrix::from_rows(&[
                [half * p, half * m / g0],
                [half * g[k] * m, half * g[k] * p / g0],
            ])
        })
        .collect();
    PropagatorTable::new(grid, values)
}

/// Result of the modified (rephased) expansion of a Class-3 Hamiltonian.
#[derive(Debug, Clone)]
pub struct ModifiedExpansion {
    pub stages: Vec<Class3Stage>,
    /// γ_j for j = 1..L−1 (gauge between stage j−1 and stage j).
    pub gammas: Vec<Vec<C64>>,
    /// h_ℓ(t) for ℓ = 0..=L: h_0 = E^(1), h_ℓ = E^(1) cos η cos η₁ ⋯ cos η_{ℓ−1}.
    pub h: Vec<Vec<C64>>,
}

impl ModifiedExpansion {
    /// sup_t |h_ℓ(t)|
    pub fn h_sup(&self, l: usize) -> f64 {
        self.h[l].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The stage Hamiltonian H_L left over after the last factor, together
    /// with the gauge G_L⁻¹ that links it: U = propagator()·G_L⁻¹·U_{H_L}.
    pub fn residual(&self) -> Result<(PropagatorTable, TwoLevelCoeffs)> {
        let last = self.stages.last().unwrap();
        let grid = last.u0.grid();
        let n = grid.len();
        let twice_a1: Vec<C64> = (0..n).map(|k| last.e1[k] * last.eta[k].cos() * 2.0).collect();
        let gamma = grid::cumulative_integral(&twice_a1, grid.dt());
        let energy: Vec<C64> = (0..n).map(|k| last.e1[k] * last.eta[k].sin()).collect();
        let g: Vec<C64> = gamma.iter().map(|&gm| last.f0 * (-I * gm).exp()).collect();
        let b = (0..n).map(|k| energy[k] / g[k]).collect();
        let c = (0..n).map(|k| energy[k] * g[k]).collect();
        let coeffs = TwoLevelCoeffs::from_tables(grid, vec![ZERO; n], b, c)?;
        let gauge = PropagatorTable::new(grid, gamma.iter().map(|&gm| sigma3_gauge(-gm)).collect())?;
        Ok((gauge, coeffs))
    }

    /// U ≈ U_0^(0) G_1⁻¹ U_1^(0) G_2⁻¹ ⋯ U_{L−1}^(0)
    pub fn propagator(&self) -> PropagatorTable {
        let grid = self.stages[0].u0.grid();
        let values = (0..grid.len())
            .map(|k| {
                let mut u = self.stages[0].u0.at(k).clone();
                for (j, st) in self.stages.iter().enumerate().skip(1) {
                    u = &u * &sigma3_gauge(-self.gammas[j - 1][k]);
                    u = &u * st.u0.at(k);
                }
                u
            })
            .collect();
        PropagatorTable::new(grid, values).expect("stage tables share the grid")
    }
}

/// L stages of the modified expansion: the adiabatic step and the σ₃
/// rephasing alternate, and every stage is again of Class 3.
///
/// Stage recursion (all in closed form): E^(1)_{j+1} = E^(1)_j cos η_j,
/// E_{j+1} = E^(1)_j sin η_j, g_{j+1} = f_j(0) e^{−iγ_{j+1}} with
/// γ_{j+1} = 2∫E^(1)_j cos η_j, and f_{j+1}(0) = i f_j(0).
pub fn modified_expansion(c: &TwoLevelCoeffs, l: usize) -> Result<ModifiedExpansion> {
    assert!(l >= 1, "modified expansion needs at least one stage");
    let first = class3_step(c)?;
    let grid = c.grid;
    let dt = grid.dt();
    let n = grid.len();
    let g0: Vec<C64> = (0..n).map(|k| c.e[k] / c.b[k]).collect();
    let mut stages = vec![Class3Stage {
        energy: c.e.clone(),
        u0: stage_propagator(grid, &g0, &first.eta, &first.e1)?,
        g: g0,
        e1: first.e1.clone(),
        eta: first.eta.clone(),
        f0: first.f0,
    }];
    let mut gammas = Vec::new();
    let mut h = vec![first.e1.clone()];
    for _ in 1..=l {
        let prev = stages.last().unwrap();
        let a1: Vec<C64> = (0..n).map(|k| prev.e1[k] * prev.eta[k].cos()).collect();
        h.push(a1.clone());
        if stages.len() == l {
            break;
        }
        let twice_a1: Vec<C64> = a1.iter().map(|x| x * 2.0).collect();
        let gamma = grid::cumulative_integral(&twice_a1, dt);
        let energy: Vec<C64> = (0..n).map(|k| prev.e1[k] * prev.eta[k].sin()).collect();
        let g: Vec<C64> = gamma.iter().map(|&gm| prev.f0 * (-I * gm).exp()).collect();
        let twice_e: Vec<C64> = energy.iter().map(|x| x * 2.0).collect();
        let eta = grid::cumulative_integral(&twice_e, dt);
        let f0 = I * prev.f0;
        let u0 = stage_propagator(grid, &g, &eta, &a1)?;
        gammas.push(gamma);
        stages.push(Class3Stage { energy, g, e1: a1, eta, f0, u0 });
    }
    Ok(ModifiedExpansion { stages, gammas, h })
}

/// Canonical reduction of a traceless two-level Hamiltonian to Class 3.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// H″ = α′[[0, e^{iη′}], [e^{−iη′}, 0]]
    pub class3: TwoLevelCoeffs,
    pub alpha_prime: Vec<C64>,
    pub a_prime: Vec<C64>,
    /// Mixing angle of the σ₂ gauge, β = 2∫α₂.
    pub beta_mix: Vec<C64>,
    pub eta_prime: Vec<C64>,
    /// g₁ = exp(i∫α₂ σ₂)
    pub g1: PropagatorTable,
    /// g₂ = exp(i∫a′ σ₃)
    pub g2: PropagatorTable,
}

impl Reduction {
    /// U = g₁⁻¹ g₂⁻¹ U″
    pub fn reassemble(&self, u2: &PropagatorTable) -> Result<PropagatorTable> {
        let g1i = self.g1.inverse()?;
        let g2i = self.g2.inverse()?;
        g1i.then(&g2i)?.then(u2)
    }
}

/// exp(iφσ₂) = cos φ + i sin φ σ₂
fn sigma2_gauge(phi: C64) -> CMatrix {
    &CMatrix::identity(2).scale(phi.cos()) + &pauli(2).scale(I * phi.sin())
}

pub fn reduce_to_class3(c: &TwoLevelCoeffs) -> Result<Reduction> {
    let grid = c.grid;
    let dt = grid.dt();
    let n = grid.len();
    let alpha1: Vec<C64> = (0..n).map(|k| (c.b[k] + c.c[k]) * 0.5).collect();
    let alpha2: Vec<C64> = (0..n).map(|k| I * (c.b[k] - c.c[k]) * 0.5).collect();
    let d_alpha1: Vec<C64> = (0..n).map(|k| (c.db[k] + c.dc[k]) * 0.5).collect();
    let twice_alpha2: Vec<C64> = alpha2.iter().map(|x| x * 2.0).collect();
    let beta = grid::cumulative_integral(&twice_alpha2, dt);

    let alpha_p: Vec<C64> = (0..n).map(|k| alpha1[k] * beta[k].cos() - c.a[k] * beta[k].sin()).collect();
    let a_p: Vec<C64> = (0..n).map(|k| alpha1[k] * beta[k].sin() + c.a[k] * beta[k].cos()).collect();
    // β̇ = 2α₂
    let d_alpha_p: Vec<C64> = (0..n)
        .map(|k| {
            let (s, co, bd) = (beta[k].sin(), beta[k].cos(), twice_alpha2[k]);
            d_alpha1[k] * co - alpha1[k] * s * bd - c.da[k] * s - c.a[k] * co * bd
        })
        .collect();
    let twice_ap: Vec<C64> = a_p.iter().map(|x| x * 2.0).collect();
    let eta_p = grid::cumulative_integral(&twice_ap, dt);

    let b2: Vec<C64> = (0..n).map(|k| alpha_p[k] * (I * eta_p[k]).exp()).collect();
    let c2: Vec<C64> = (0..n).map(|k| alpha_p[k] * (-I * eta_p[k]).exp()).collect();
    let db2 = (0..n)
        .map(|k| (d_alpha_p[k] + I * twice_ap[k] * alpha_p[k]) * (I * eta_p[k]).exp())
        .collect();
    let dc2 = (0..n)
        .map(|k| (d_alpha_p[k] - I * twice_ap[k] * alpha_p[k]) * (-I * eta_p[k]).exp())
        .collect();
    let class3 = TwoLevelCoeffs::from_tables_with_derivatives(grid, (vec![ZERO; n], b2, c2), (vec![ZERO; n], db2, dc2))?;
    let g1 = PropagatorTable::new(grid, beta.iter().map(|&b| sigma2_gauge(b * 0.5)).collect())?;
    let g2 = PropagatorTable::new(grid, eta_p.iter().map(|&e| sigma3_gauge(e)).collect())?;
    Ok(Reduction { class3, alpha_prime: alpha_p, a_prime: a_p, beta_mix: beta, eta_prime: eta_p, g1, g2 })
}

/// e^{−iφσ_i} σ_j e^{iφσ_i} = cos(2φ)σ_j + sin(2φ) Σ_k ε_ijk σ_k, for i ≠ j.
pub fn pauli_conjugate(i: usize, j: usize, phi: C64) -> CMatrix {
    assert!(i != j && (1..=3).contains(&i) && (1..=3).contains(&j));
    let k = 6 - i - j;
    // ε_ijk = +1 for cyclic (i, j, k)
    let eps = if (i, j) == (1, 2) || (i, j) == (2, 3) || (i, j) == (3, 1) { 1.0 } else { -1.0 };
    let two = phi * 2.0;
    &pauli(j).scale(two.cos()) + &pauli(k).scale(two.sin() * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{adiabatic_step, sup_distance};
    use crate::linops::{fro_norm, matrix_exp, EPS_DEG};
    use crate::oracle::{self, OracleConfig};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn oscillator(grid: Grid, omega: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TwoLevelCoeffs {
        TwoLevelCoeffs::from_fn(grid, move |t| {
            let w = omega(t);
            [ZERO, I, -I * w * w]
        })
        .unwrap()
    }

    fn generic(grid: Grid) -> TwoLevelCoeffs {
        TwoLevelCoeffs::from_fn(grid, |t| {
            [c(0.8 + 0.1 * t.sin(), 0.05 * t), c(0.4 + 0.2 * t, 0.1), c(0.3, -0.1 * t.cos())]
        })
        .unwrap()
    }

    #[test]
    fn eigendata_examples() {
        let g = Grid::new(1.0, 4).unwrap();
        let diag = TwoLevelCoeffs::from_fn(g, |_| [c(1.0, 0.0), ZERO, ZERO]).unwrap();
        let d = eigendata(&diag, 0).unwrap();
        assert_eq!(d.psi, [[ZERO, c(2.0, 0.0)], [c(2.0, 0.0), ZERO]]);
        assert_eq!(d.norm, c(4.0, 0.0));

        let osc = oscillator(g, |_| 2.0);
        let d = eigendata(&osc, 0).unwrap();
        assert_eq!(d.eigenvalues, [c(-2.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(d.psi[0], [c(0.0, -1.0), c(2.0, 0.0)]);
        assert_eq!(d.psi[1], [c(2.0, 0.0), c(0.0, -4.0)]);
    }

    #[test]
    fn eigendata_is_biorthonormal_and_reconstructs() {
        let g = Grid::new(1.0, 50).unwrap();
        let co = generic(g);
        for k in 0..g.len() {
            let d = eigendata(&co, k).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d.overlap(i, j) - want).norm() < 1e-12);
                }
            }
            assert!(fro_norm(&(&d.reconstruct() - &co.matrix(k))) < 1e-12);
        }
    }

    #[test]
    fn chart_singularity_detected() {
        // a = −1, b = c = 0: E = 1 on the principal branch... a + E = 0
        let g = Grid::new(1.0, 4).unwrap();
        let co = TwoLevelCoeffs::from_fn(g, |_| [c(-1.0, 0.0), ZERO, ZERO]).unwrap();
        assert!(matches!(eigendata(&co, 0), Err(Error::ChartSingularity { .. })));
    }

    #[test]
    fn constant_coefficients_have_pure_phase_factors() {
        let g = Grid::new(2.0, 200).unwrap();
        let co = TwoLevelCoeffs::from_fn(g, |_| [c(0.3, 0.0), c(0.5, 0.1), c(0.2, 0.0)]).unwrap();
        let d = dynamical_data(&co).unwrap();
        let e = co.energy()[0];
        for k in 0..g.len() {
            let eta = e * 2.0 * g.t(k);
            assert!((d.eta[k] - eta).norm() < 1e-10);
            assert!((d.k1[k] - (I * eta * 0.5).exp()).norm() < 1e-10);
            assert!((d.k2[k] - (-I * eta * 0.5).exp()).norm() < 1e-10, "{k} {} {}", d.k2[k], (-I * eta * 0.5).exp());
        }
    }

    #[test]
    fn oscillator_eta_and_alpha() {
        let g = Grid::new(3.0, 300).unwrap();
        let d = dynamical_data(&oscillator(g, |_| 1.0)).unwrap();
        for k in 0..g.len() {
            assert!((d.eta[k] - 2.0 * g.t(k)).norm() < 1e-12);
            assert!((d.alpha[k] - g.t(k)).norm() < 1e-12);
        }
        // ω = 1 + 0.1t: η = 2t + 0.1t², α = η/2 + (i/4)∫(−2ω̇/ω)·… checked by quadrature
        let g = Grid::new(2.0, 2000).unwrap();
        let d = dynamical_data(&oscillator(g, |t| 1.0 + 0.1 * t)).unwrap();
        let t = 2.0;
        assert!((d.eta[2000] - (2.0 * t + 0.1 * t * t)).norm() < 1e-12);
        // For a = 0: (c ḃ − b ċ)/(E·E) = −b ċ/(bc) = −ċ/c = −2ω̇/ω, so α = η/2 − (i/2) ln ω.
        let alpha = (2.0 * t + 0.1 * t * t) / 2.0;
        let want = c(alpha, -0.5 * (1.0 + 0.1 * t).ln());
        assert!((d.alpha[2000] - want).norm() < 1e-9);
    }

    #[test]
    fn xi_zeta_class3_closed_forms() {
        let g = Grid::new(1.0, 1000).unwrap();
        let co = TwoLevelCoeffs::from_fn(g, |t| [ZERO, c(1.0 + 0.2 * t, 0.1), c(0.5, 0.3 * t.sin())]).unwrap();
        let d = dynamical_data(&co).unwrap();
        let (xi, zeta) = xi_zeta(&co, &d).unwrap();
        let step = class3_step(&co).unwrap();
        let df = grid::derivative(&step.f, g.dt());
        for k in 5..g.len() - 5 {
            let (f, f0, eta) = (step.f[k], step.f0, step.eta[k]);
            let xi_cf = -f0 * df[k] * (-I * eta).exp() / (f * 2.0);
            let zeta_cf = df[k] * (I * eta).exp() / (f0 * f * 2.0);
            assert!((xi[k] - xi_cf).norm() < 1e-9, "{k}");
            assert!((zeta[k] - zeta_cf).norm() < 1e-9, "{k}");
        }
    }

    #[test]
    fn closed_form_h1_matches_generic_engine() {
        let g = Grid::new(1.0, 2000).unwrap();
        let co = generic(g);
        let h1 = first_transformed(&co).unwrap();
        let step = adiabatic_step(&co.to_signal(), EPS_DEG).unwrap();
        let gap = sup_distance(&h1.to_signal(), &step.h1);
        assert!(gap < 1e-7, "{gap}");
        for k in 0..g.len() {
            assert_eq!(h1.matrix(k).trace(), ZERO);
        }
        // and the closed-form U^(0) agrees with the generic one
        let d = dynamical_data(&co).unwrap();
        let u0 = adiabatic_propagator(&co, &d).unwrap();
        assert!(oracle::compare(&u0, &step.u0).unwrap().sup_fro < 1e-8);
    }

    #[test]
    fn class3_h1_matches_generic_engine_and_recurs() {
        let g = Grid::new(1.0, 2000).unwrap();
        let co = oscillator(g, |t| 1.0 + 0.1 * t.sin());
        let step = class3_step(&co).unwrap();
        let generic_step = adiabatic_step(&co.to_signal(), EPS_DEG).unwrap();
        assert!(sup_distance(&step.h1.to_signal(), &generic_step.h1) < 1e-8);
        // applying the generic step to H^(1) returns H
        let second = adiabatic_step(&generic_step.h1, EPS_DEG).unwrap();
        let tab = HamiltonianSignal::tabulated(g, co.to_signal().samples()).unwrap();
        assert!(sup_distance(&second.h1, &tab) < 1e-8);
    }

    #[test]
    fn classification() {
        let g = Grid::new(1.0, 400).unwrap();
        assert_eq!(classify(&oscillator(g, |t| 1.0 + 0.1 * t), EPS_CLASS), ClassTag::Class3);
        let mu = 0.7;
        let class1 = TwoLevelCoeffs::from_fn(g, move |t| {
            let a = 1.0 + 0.3 * t.sin();
            let b = 0.5 + 0.2 * t;
            [c(a, 0.0), c(b, 0.0), c(mu * (mu * b + 2.0 * a), 0.0)]
        })
        .unwrap();
        match classify(&class1, EPS_CLASS) {
            ClassTag::Class1(m) => assert!((m - mu).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
        let nu = 0.5;
        let class2 = TwoLevelCoeffs::from_fn(g, move |t| {
            let a = 1.0 + 0.3 * t.sin();
            let cc = 0.5 + 0.2 * t;
            [c(a, 0.0), c(nu * (nu * cc + 2.0 * a), 0.0), c(cc, 0.0)]
        })
        .unwrap();
        match classify(&class2, EPS_CLASS) {
            ClassTag::Class2(n) => assert!((n - nu).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
        let gen = TwoLevelCoeffs::from_fn(g, |t| [c(t.sin(), 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(classify(&gen, EPS_CLASS), ClassTag::Generic);
    }

    #[test]
    fn detrace_reconstructs_oracle() {
        let g = Grid::new(1.0, 1000).unwrap();
        let hbar = HamiltonianSignal::constant(g, CMatrix::diag(&[c(2.0, 0.0), ZERO]));
        let (co, phase) = detrace(&hbar).unwrap();
        let u_bar = oracle::propagate(&hbar, &OracleConfig::default());
        let u = oracle::propagate(&co.to_signal(), &OracleConfig::default());
        for k in 0..g.len() {
            assert!((phase[k] - (I * g.t(k)).exp()).norm() < 1e-12);
            let rebuilt = u.at(k).scale(phase[k].inv());
            assert!(fro_norm(&(&rebuilt - u_bar.at(k))) < 1e-10);
        }
        let (co, phase) = detrace(&HamiltonianSignal::constant(g, pauli(1))).unwrap();
        assert!(phase.iter().all(|p| (p - 1.0).norm() < 1e-15));
        assert_eq!(co.b[0], c(1.0, 0.0));
    }

    #[test]
    fn rephasing_reproduces_oracle() {
        let g = Grid::new(1.0, 2000).unwrap();
        let co = oscillator(g, |t| 1.0 + 0.1 * t.sin());
        let step = class3_step(&co).unwrap();
        let re = rephase_to_class3(&step.h1).unwrap();
        // f₁ = i f₀ e^{−iγ₁}
        let e1 = re.coeffs.energy();
        for k in (1..g.len()).step_by(100) {
            let f1 = I * e1[k] / re.coeffs.b[k];
            assert!((f1 - I * step.f0 * (-I * re.gamma[k]).exp()).norm() < 1e-9);
        }
        let cfg = OracleConfig::default();
        let u_h1 = oracle::propagate(&step.h1.to_signal(), &cfg);
        let u_rephased = oracle::propagate(&re.coeffs.to_signal(), &cfg);
        let rebuilt = re.gauge.inverse().unwrap().then(&u_rephased).unwrap();
        assert!(oracle::compare(&rebuilt, &u_h1).unwrap().sup_fro < 1e-7);
    }

    #[test]
    fn modified_expansion_constant_frequency_is_exact() {
        let g = Grid::new(5.0, 500).unwrap();
        let co = oscillator(g, |_| 1.3);
        let m = modified_expansion(&co, 3).unwrap();
        for st in &m.stages[1..] {
            for u in st.u0.values() {
                assert!(fro_norm(&(u - &CMatrix::identity(2))) < 1e-12, "{u:?}");
            }
        }
        let reference = oracle::propagate(&co.to_signal(), &OracleConfig::default());
        assert!(oracle::compare(&m.propagator(), &reference).unwrap().sup_fro < 1e-10);
    }

    #[test]
    fn modified_stage_one_matches_plain_adiabatic() {
        let g = Grid::new(2.0, 2000).unwrap();
        let co = oscillator(g, |t| 1.0 + 0.1 * t);
        let m = modified_expansion(&co, 1).unwrap();
        let generic_step = adiabatic_step(&co.to_signal(), EPS_DEG).unwrap();
        assert!(oracle::compare(&m.propagator(), &generic_step.u0).unwrap().sup_fro < 1e-8);
    }

    #[test]
    fn truncated_product_times_residual_propagator_is_exact() {
        let g = Grid::new(3.0, 3000).unwrap();
        let co = oscillator(g, |t| 1.0 + 0.2 * t.sin());
        let cfg = OracleConfig::default();
        let reference = oracle::propagate(&co.to_signal(), &cfg);
        for l in 1..=3 {
            let m = modified_expansion(&co, l).unwrap();
            let (gauge, rest) = m.residual().unwrap();
            let u_rest = oracle::propagate(&rest.to_signal(), &cfg);
            let full = m.propagator().then(&gauge).unwrap().then(&u_rest).unwrap();
            let err = oracle::compare(&full, &reference).unwrap().sup_fro;
            assert!(err < 1e-8, "L = {l}: {err}");
        }
    }

    #[test]
    fn reduction_reassembles_oracle() {
        let g = Grid::new(1.0, 2000).unwrap();
        let co = generic(g);
        let red = reduce_to_class3(&co).unwrap();
        for k in 0..g.len() {
            assert_eq!(red.class3.a[k], ZERO);
        }
        assert!((red.class3.b[0] - red.class3.c[0]).norm() < 1e-15);
        let cfg = OracleConfig::default();
        let u2 = oracle::propagate(&red.class3.to_signal(), &cfg);
        let u = red.reassemble(&u2).unwrap();
        let want = oracle::propagate(&co.to_signal(), &cfg);
        assert!(oracle::compare(&u, &want).unwrap().sup_fro < 1e-7);
        for m in u.values() {
            assert!((m.det() - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn reduction_of_sigma3_is_trivial_in_rotated_frame() {
        let g = Grid::new(1.0, 100).unwrap();
        let co = TwoLevelCoeffs::from_fn(g, |_| [c(1.0, 0.0), ZERO, ZERO]).unwrap();
        let red = reduce_to_class3(&co).unwrap();
        assert!(red.class3.b.iter().chain(&red.class3.c).all(|z| z.norm() < 1e-15));
        assert!(red.g1.values().iter().all(|m| m == &CMatrix::identity(2)));
    }

    #[test]
    fn pauli_conjugation_identity() {
        for (i, j) in [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)] {
            for phi in [c(0.0, 0.0), c(std::f64::consts::FRAC_PI_4, 0.0), c(0.0, 1.0), c(0.3, -0.7)] {
                let left = matrix_exp(&pauli(i).scale(-I * phi));
                let right = matrix_exp(&pauli(i).scale(I * phi));
                let want = &(&left * &pauli(j)) * &right;
                assert!(fro_norm(&(&pauli_conjugate(i, j, phi) - &want)) < 1e-12, "{i}{j} {phi}");
            }
        }
        assert_eq!(pauli_conjugate(1, 3, ZERO), pauli(3));
    }
}
