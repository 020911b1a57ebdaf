//! Spin-1 quadrupole Stark Hamiltonian λ(J·𝓔)² with the field in the 1–2 plane.
//!
//! H = (λr²/2)[[1, 0, e^{−2iθ}], [0, 2, 0], [e^{2iθ}, 0, 1]] has the levels
//! 0 and λr² (doubly degenerate). Everything here is closed form; the
//! matrices Σ₁, Σ₂, Σ₃ are σ₁, σ₂, σ₃ acting on components 1 and 3.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::linops::{matrix_exp, BiorthoEigensystem, CMatrix, Level};
use crate::signal::{HamiltonianSignal, PropagatorTable};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Relative tolerance of the θ̇ = c·r² test.
pub const EPS_EXACT: f64 = 1e-10;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct StarkScenario {
    grid: Grid,
    pub lambda: f64,
    r: RealFn,
    theta: RealFn,
    dtheta: Option<RealFn>,
    /// ρ(t_k) = λ∫₀^t r².
    rho: Vec<f64>,
}

impl std::fmt::Debug for StarkScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StarkScenario").field("grid", &self.grid).field("lambda", &self.lambda).finish()
    }
}

fn five_point(f: &RealFn, t: f64) -> f64 {
    let h = 1e-3;
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

impl StarkScenario {
    /// θ is taken as given (unwrapped); r must stay positive on the grid.
    pub fn new(
        grid: Grid,
        lambda: f64,
        r: impl Fn(f64) -> f64 + Send + Sync + 'static,
        theta: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let r: RealFn = Arc::new(r);
        let r2: Vec<f64> = grid.sample(|t| r(t) * r(t));
        for k in 0..grid.len() {
            let rk = r(grid.t(k));
            if !(rk > 0.0 && rk.is_finite()) {
                return Err(Error::ZeroField { t: grid.t(k), r: rk });
            }
        }
        let rho = grid::cumulative_integral(&r2, grid.dt()).into_iter().map(|x| lambda * x).collect();
        Ok(StarkScenario { grid, lambda, r, theta: Arc::new(theta), dtheta: None, rho })
    }

    /// From field components 𝓔₁, 𝓔₂: r = |𝓔|, e^{iθ} = (𝓔₁ + i𝓔₂)/r. The angle
    /// is unwrapped along the grid.
    pub fn from_field(
        grid: Grid,
        lambda: f64,
        e1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        e2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let (e1, e2): (RealFn, RealFn) = (Arc::new(e1), Arc::new(e2));
        let raw: Vec<f64> = grid.sample(|t| e2(t).atan2(e1(t)));
        let mut unwrapped = vec![raw[0]];
        for k in 1..raw.len() {
            let prev = unwrapped[k - 1];
            let mut x = raw[k];
            while x - prev > std::f64::consts::PI {
                x -= 2.0 * std::f64::consts::PI;
            }
            while x - prev < -std::f64::consts::PI {
                x += 2.0 * std::f64::consts::PI;
            }
            unwrapped.push(x);
        }
        let dt = grid.dt();
        let (a1, a2) = (e1.clone(), e2.clone());
        Self::new(
            grid,
            lambda,
            move |t| a1(t).hypot(a2(t)),
            move |t| grid::interpolate(&unwrapped, dt, t),
        )
    }

    pub fn with_theta_derivative(mut self, dtheta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dtheta = Some(Arc::new(dtheta));
        self
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn r(&self, t: f64) -> f64 {
        (self.r)(t)
    }

    pub fn theta(&self, t: f64) -> f64 {
        (self.theta)(t)
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        match &self.dtheta {
            Some(d) => d(t),
            None => five_point(&self.theta, t),
        }
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    fn rho_at(&self, t: f64) -> f64 {
        grid::interpolate(&self.rho, self.grid.dt(), t)
    }

    pub fn signal(&self) -> HamiltonianSignal {
        let s = self.clone();
        let d = self.clone();
        HamiltonianSignal::analytic(self.grid, move |t| stark_matrix(s.lambda, s.r(t), s.theta(t))).with_derivative(
            move |t| {
                let (r, th) = (d.r(t), d.theta(t));
                let (dr, dth) = (five_point(&d.r, t), d.theta_dot(t));
                let amp = d.lambda * r * dr;
                let m = stark_matrix(1.0, 1.0, th).scale_re(2.0 * amp);
                let e = (I * 2.0 * th).exp();
                let rot = CMatrix::from_rows(&[
                    [ZERO, ZERO, -I * 2.0 * dth * e.conj()],
                    [ZERO, ZERO, ZERO],
                    [I * 2.0 * dth * e, ZERO, ZERO],
                ]);
                &m + &rot.scale_re(d.lambda * r * r / 2.0)
            },
        )
    }
}

fn stark_matrix(lambda: f64, r: f64, theta: f64) -> CMatrix {
    let e = (I * 2.0 * theta).exp();
    CMatrix::from_rows(&[[ONE, ZERO, e.conj()], [ZERO, ONE * 2.0, ZERO], [e, ZERO, ONE]])
        .scale_re(lambda * r * r / 2.0)
}

pub fn build_hamiltonian(s: &StarkScenario, t: f64) -> Result<CMatrix> {
    let r = s.r(t);
    if !(r > 0.0) {
        return Err(Error::ZeroField { t, r });
    }
    Ok(stark_matrix(s.lambda, r, s.theta(t)))
}

pub fn sigma1() -> CMatrix {
    CMatrix::from_rows(&[[ZERO, ZERO, ONE], [ZERO, ZERO, ZERO], [ONE, ZERO, ZERO]])
}

pub fn sigma2() -> CMatrix {
    CMatrix::from_rows(&[[ZERO, ZERO, -I], [ZERO, ZERO, ZERO], [I, ZERO, ZERO]])
}

pub fn sigma3() -> CMatrix {
    CMatrix::diag(&[ONE, ZERO, -ONE])
}

/// ψ₁ = (−1, 0, e^{2iθ})/√2 at E = 0; ψ₂,₁ = (1, 0, e^{2iθ})/√2 and
/// ψ₂,₂ = (0, 1, 0) at E = λr². Duals equal the vectors (H is Hermitian).
pub fn eigensystem(s: &StarkScenario, t: f64) -> Result<BiorthoEigensystem> {
    let r = s.r(t);
    if !(r > 0.0) {
        return Err(Error::ZeroField { t, r });
    }
    let e = (I * 2.0 * s.theta(t)).exp() * FRAC_1_SQRT_2;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let v1 = vec![-h, ZERO, e];
    let v21 = vec![h, ZERO, e];
    let v22 = vec![ZERO, ONE, ZERO];
    let levels = vec![
        Level { eigenvalue: ZERO, right: vec![v1.clone()], left: vec![v1] },
        Level {
            eigenvalue: C64::new(s.lambda * r * r, 0.0),
            right: vec![v21.clone(), v22.clone()],
            left: vec![v21, v22],
        },
    ];
    Ok(BiorthoEigensystem::new(3, levels))
}

/// U^(0) from K¹ = e^{−i(θ−θ₀)}, K² = e^{−iρ}diag(e^{−i(θ−θ₀)}, 1):
///
/// ½[[(1+e^{−iρ})e^{−iθ₋}, 0, (−1+e^{−iρ})e^{−iθ₊}],
///   [0, 2e^{−iρ}, 0],
///   [(−1+e^{−iρ})e^{iθ₊}, 0, (1+e^{−iρ})e^{iθ₋}]]
///
/// with θ± = θ ± θ₀.
pub fn adiabatic_propagator(s: &StarkScenario) -> PropagatorTable {
    let th0 = s.theta(0.0);
    let values = (0..s.grid.len())
        .map(|k| {
            if k == 0 {
                return CMatrix::identity(3);
            }
            let t = s.grid.t(k);
            let th = s.theta(t);
            let (tm, tp) = (th - th0, th + th0);
            let er = (-I * s.rho[k]).exp();
            CMatrix::from_rows(&[
                [(ONE + er) * (-I * tm).exp(), ZERO, (er - ONE) * (-I * tp).exp()],
                [ZERO, er * 2.0, ZERO],
                [(er - ONE) * (I * tp).exp(), ZERO, (ONE + er) * (I * tm).exp()],
            ])
            .scale_re(0.5)
        })
        .collect();
    PropagatorTable::new(s.grid, values).expect("table length matches grid")
}

/// H^(1) = −θ̇(sin ρ Σ₂ + cos ρ Σ₃), with ρ interpolated between grid points.
pub fn h1(s: &StarkScenario) -> HamiltonianSignal {
    let sc = s.clone();
    let (s2, s3) = (sigma2(), sigma3());
    HamiltonianSignal::analytic(s.grid, move |t| {
        let rho = sc.rho_at(t);
        (&s2.scale_re(rho.sin()) + &s3.scale_re(rho.cos())).scale_re(-sc.theta_dot(t))
    })
}

/// H^(1)′ = (λr²/2)Σ₁ − θ̇Σ₃, the frame g = e^{−iρΣ₁/2} applied to H^(1).
pub fn rotating_frame(s: &StarkScenario) -> HamiltonianSignal {
    let sc = s.clone();
    let (s1, s3) = (sigma1(), sigma3());
    HamiltonianSignal::analytic(s.grid, move |t| {
        let r = sc.r(t);
        &s1.scale_re(sc.lambda * r * r / 2.0) - &s3.scale_re(sc.theta_dot(t))
    })
}

/// e^{iρΣ₁/2} on the grid: the inverse of the rotating-frame gauge.
pub fn frame_gauge_inverse(s: &StarkScenario) -> PropagatorTable {
    let s1 = sigma1();
    let values = s.rho.iter().map(|&rho| matrix_exp(&s1.scale(I * rho / 2.0))).collect();
    PropagatorTable::new(s.grid, values).expect("table length matches grid")
}

/// c with θ̇ = c·r² if the proportionality holds on the grid.
pub fn proportionality(s: &StarkScenario) -> Option<f64> {
    let c = s.theta_dot(0.0) / (s.r(0.0) * s.r(0.0));
    check_condition(s, c).ok().map(|_| c)
}

fn check_condition(s: &StarkScenario, c: f64) -> Result<()> {
    let mut sup_r2 = 0.0f64;
    let mut worst = 0.0f64;
    for t in s.grid.times() {
        let r2 = s.r(t) * s.r(t);
        sup_r2 = sup_r2.max(r2);
        worst = worst.max((s.theta_dot(t) - c * r2).abs());
    }
    if worst > EPS_EXACT * sup_r2 {
        return Err(Error::ConditionViolated(format!(
            "theta' - c r^2 reaches {worst:.3e} (allowed {:.3e})",
            EPS_EXACT * sup_r2
        )));
    }
    Ok(())
}

/// U = U^(0)·e^{iρΣ₁/2}·exp(−i(λΣ₁/2 − cΣ₃)∫r²) for θ̇ = c·r².
pub fn exact_solve(s: &StarkScenario, c: f64) -> Result<PropagatorTable> {
    check_condition(s, c)?;
    let gen = &sigma1().scale_re(s.lambda / 2.0) - &sigma3().scale_re(c);
    let u1p: Vec<CMatrix> = s
        .rho
        .iter()
        .enumerate()
        .map(|(k, &rho)| {
            if k == 0 {
                CMatrix::identity(3)
            } else {
                // ∫r² = ρ/λ; for λ = 0 fall back to the direct integral
                let int_r2 = if s.lambda != 0.0 { rho / s.lambda } else { s.int_r2(k) };
                matrix_exp(&gen.scale(-I * int_r2))
            }
        })
        .collect();
    let u1p = PropagatorTable::new(s.grid, u1p)?;
    adiabatic_propagator(s).then(&frame_gauge_inverse(s))?.then(&u1p)
}

impl StarkScenario {
    fn int_r2(&self, k: usize) -> f64 {
        let r2: Vec<f64> = self.grid.sample(|t| self.r(t) * self.r(t));
        grid::cumulative_integral(&r2, self.grid.dt())[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{adiabatic_step, sup_distance, track_levels};
    use crate::linops::{bi_eigensystem, fro_norm, EPS_DEG};
    use crate::oracle::{self, OracleConfig};

    fn rotating(tau: f64, steps: usize, omega: f64) -> StarkScenario {
        StarkScenario::new(Grid::new(tau, steps).unwrap(), 1.0, |_| 1.0, move |t| omega * t)
            .unwrap()
            .with_theta_derivative(move |_| omega)
    }

    #[test]
    fn matrix_at_rest() {
        let s = rotating(1.0, 4, 0.0);
        let h = build_hamiltonian(&s, 0.0).unwrap();
        let want = CMatrix::from_real_rows(&[[0.5, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 0.5]]);
        assert_eq!(h, want);
        assert_eq!(h.adjoint(), h);
        let e = eigensystem(&s, 0.0).unwrap();
        assert_eq!(e.degeneracies(), vec![1, 2]);
        assert!(fro_norm(&(&e.reconstruct() - &h)) < 1e-15);
    }

    #[test]
    fn zero_field_rejected() {
        let g = Grid::new(1.0, 4).unwrap();
        let err = StarkScenario::new(g, 1.0, |t| 1.0 - t, |_| 0.0).unwrap_err();
        assert_eq!(err.name(), "ZeroField");
    }

    #[test]
    fn closed_eigensystem_agrees_with_solver() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (r, th, lam) = (rng.gen_range(0.2..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.5..2.0));
            let s = StarkScenario::new(Grid::new(1.0, 4).unwrap(), lam, move |_| r, move |_| th).unwrap();
            let closed = eigensystem(&s, 0.0).unwrap();
            assert!(closed.biorthonormality_error() < 1e-12);
            let solved = bi_eigensystem(&build_hamiltonian(&s, 0.0).unwrap(), EPS_DEG).unwrap();
            // compare the spectral projectors level by level (gauge free)
            for level in &closed.levels {
                let proj = |lv: &Level| {
                    lv.right.iter().zip(&lv.left).fold(CMatrix::zeros(3), |acc, (p, q)| &acc + &CMatrix::outer(p, q))
                };
                let other = solved
                    .levels
                    .iter()
                    .find(|l| (l.eigenvalue - level.eigenvalue).norm() < 1e-9)
                    .expect("level present");
                assert!(fro_norm(&(&proj(level) - &proj(other))) < 1e-9);
            }
        }
    }

    #[test]
    fn tracked_vectors_match_closed_forms_up_to_gauge() {
        let s = rotating(2.0, 400, 0.3);
        let track = track_levels(&s.signal(), EPS_DEG).unwrap();
        for k in (0..s.grid().len()).step_by(37) {
            let closed = eigensystem(&s, s.grid().t(k)).unwrap();
            for (a, b) in track.at(k).levels.iter().zip(&closed.levels) {
                let proj = |lv: &Level| {
                    lv.right.iter().zip(&lv.left).fold(CMatrix::zeros(3), |acc, (p, q)| &acc + &CMatrix::outer(p, q))
                };
                assert!(fro_norm(&(&proj(a) - &proj(b))) < 1e-9);
            }
        }
    }

    #[test]
    fn static_field_propagator_is_exponential() {
        let s = StarkScenario::new(Grid::new(2.0, 200).unwrap(), 1.3, |_| 0.8, |_| 0.4).unwrap();
        let u = adiabatic_propagator(&s);
        assert_eq!(u.at(0), &CMatrix::identity(3));
        let h = build_hamiltonian(&s, 0.0).unwrap();
        for k in 0..s.grid().len() {
            let want = matrix_exp(&h.scale(-I * s.grid().t(k)));
            assert!(fro_norm(&(u.at(k) - &want)) < 1e-9);
        }
    }

    #[test]
    fn closed_forms_match_generic_engine() {
        let s = StarkScenario::new(Grid::new(2.0, 2000).unwrap(), 1.0, |t| 1.0 + 0.2 * t.sin(), |t| 0.3 * t + 0.1 * t * t)
            .unwrap()
            .with_theta_derivative(|t| 0.3 + 0.2 * t);
        let step = adiabatic_step(&s.signal(), EPS_DEG).unwrap();
        assert!(oracle::compare(&adiabatic_propagator(&s), &step.u0).unwrap().sup_fro < 1e-8);
        assert!(sup_distance(&h1(&s), &step.h1) < 1e-7);
    }

    #[test]
    fn h1_properties() {
        let s = rotating(6.0, 600, 0.3);
        let h = h1(&s);
        for k in 0..s.grid().len() {
            let m = h.value(k);
            assert!(fro_norm(&(&m - &m.adjoint())) < 1e-10);
            let mut ev: Vec<f64> = bi_eigensystem(&m, EPS_DEG).unwrap().eigenvalues().iter().map(|e| e.re).collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ev.iter().zip([-0.3, 0.0, 0.3]) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let still = rotating(1.0, 10, 0.0);
        assert!(h1(&still).sup_norm() == 0.0);
    }

    #[test]
    fn sigma_conjugation_identity() {
        for rho in [0.0, 0.4, 1.7, -2.5] {
            let l = matrix_exp(&sigma1().scale(I * rho / 2.0));
            let r = matrix_exp(&sigma1().scale(-I * rho / 2.0));
            let lhs = &(&l * &sigma3()) * &r;
            let rhs = &sigma3().scale_re(rho.cos()) + &sigma2().scale_re(rho.sin());
            assert!(fro_norm(&(&lhs - &rhs)) < 1e-12);
        }
    }

    #[test]
    fn rotating_frame_reassembles_h1_oracle() {
        let s = StarkScenario::new(Grid::new(2.0, 2000).unwrap(), 0.7, |t| 1.0 + 0.3 * t, |t| (0.5 * t).sin())
            .unwrap()
            .with_theta_derivative(|t| 0.5 * (0.5 * t).cos());
        let cfg = OracleConfig::default();
        let u1 = oracle::propagate(&h1(&s), &cfg);
        let u1p = oracle::propagate(&rotating_frame(&s), &cfg);
        let rebuilt = frame_gauge_inverse(&s).then(&u1p).unwrap();
        assert!(oracle::compare(&rebuilt, &u1).unwrap().sup_fro < 1e-7);
        let still = StarkScenario::new(Grid::new(1.0, 10).unwrap(), 2.0, |_| 1.5, |_| 0.2).unwrap();
        assert!(fro_norm(&(&rotating_frame(&still).value(3) - &sigma1().scale_re(2.25))) < 1e-12);
    }

    #[test]
    fn exact_solution_matches_oracle() {
        let s = rotating(2.0 * std::f64::consts::PI, 2000, 0.3);
        assert_eq!(proportionality(&s), Some(0.3));
        let u = exact_solve(&s, 0.3).unwrap();
        let reference = oracle::propagate(&s.signal(), &OracleConfig::default());
        assert!(oracle::compare(&u, &reference).unwrap().sup_fro < 1e-8);
        assert!(u.unitarity_defect() < 1e-8);

        // r varies, θ̇ = c r² with c = 0.4, λ ≠ 1
        let s = StarkScenario::new(Grid::new(2.0, 2000).unwrap(), 1.7, |t| 1.0 + 0.2 * t, |t| {
            0.4 * (t + 0.2 * t * t + 0.04 * t * t * t / 3.0)
        })
        .unwrap()
        .with_theta_derivative(|t| 0.4 * (1.0 + 0.2 * t) * (1.0 + 0.2 * t));
        let u = exact_solve(&s, 0.4).unwrap();
        let reference = oracle::propagate(&s.signal(), &OracleConfig::default());
        assert!(oracle::compare(&u, &reference).unwrap().sup_fro < 1e-8);

        let still = rotating(1.0, 100, 0.0);
        let u = exact_solve(&still, 0.0).unwrap();
        assert!(oracle::compare(&u, &adiabatic_propagator(&still)).unwrap().sup_fro < 1e-12);
        assert_eq!(exact_solve(&s, 0.3).unwrap_err().name(), "ConditionViolated");
    }

    #[test]
    fn field_components_unwrap_the_angle() {
        let g = Grid::new(10.0, 1000).unwrap();
        let s = StarkScenario::from_field(g, 1.0, |t| 2.0 * t.cos(), |t| 2.0 * t.sin()).unwrap();
        assert!((s.theta(9.5) - 9.5).abs() < 1e-9);
        assert!((s.r(3.0) - 2.0).abs() < 1e-12);
    }
}
