//! Uniform time grids and the fixed-order quadrature, differencing and
//! interpolation rules used throughout the crate.
//!
//! All rules are fourth order. Cumulative integrals use a per-interval cubic
//! (four-point) rule, so the running integral is available at every grid
//! point rather than only at even ones as with composite Simpson.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linops::CMatrix;

/// Strictly increasing uniform grid t_k = k·Δ, k = 0..=steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    tau: f64,
    steps: usize,
}

impl Grid {
    pub fn new(tau: f64, steps: usize) -> Result<Grid> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {tau}")));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 3 grid points, got {}", steps + 1)));
        }
        Ok(Grid { tau, steps })
    }

    /// Accepts an explicit list of times; must start at 0 and be uniform.
    pub fn from_times(times: &[f64]) -> Result<Grid> {
        if times.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 grid points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("grid must start at t = 0, got {}", times[0])));
        }
        let steps = times.len() - 1;
        let tau = times[steps];
        let grid = Grid::new(tau, steps)?;
        let dt = grid.dt();
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * dt.max(tau * 1e-3) {
                return Err(Error::InvalidGrid(format!("nonuniform spacing near t = {t}")));
            }
        }
        Ok(grid)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.tau
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }

    /// Grid index of `t` if it lies on the grid (to rounding).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 || (x - k).abs() > 1e-8 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Grid with every step split in two.
    pub fn refined(&self) -> Grid {
        Grid { tau: self.tau, steps: self.steps * 2 }
    }

    /// Evaluates `f` at every grid point.
    pub fn sample<T>(&self, mut f: impl FnMut(f64) -> T) -> Vec<T> {
        (0..self.len()).map(|k| f(self.t(k))).collect()
    }
}

/// Values that can be combined linearly: reals, complex numbers and matrices.
pub trait Field: Clone {
    /// Σ wᵢ xᵢ over a nonempty list.
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl Field for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, x)| w * **x).sum()
    }
}

impl Field for C64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, x)| **x * *w).sum()
    }
}

impl Field for CMatrix {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let mut out = terms[0].1.scale_re(terms[0].0);
        for (w, x) in &terms[1..] {
            out += &x.scale_re(*w);
        }
        out
    }
}

fn lin<T: Field>(terms: &[(f64, &T)]) -> T {
    T::combine(terms)
}

/// Running integral I_k = ∫_{t_0}^{t_k} f, fourth order on every interval.
pub fn cumulative_integral<T: Field>(f: &[T], dt: f64) -> Vec<T> {
    let n = f.len();
    assert!(n >= 2, "cumulative_integral needs at least two samples");
    let zero = lin(&[(0.0, &f[0])]);
    let mut out = Vec::with_capacity(n);
    out.push(zero);
    for k in 0..n - 1 {
        let inc = if n == 2 {
            lin(&[(dt / 2.0, &f[0]), (dt / 2.0, &f[1])])
        } else if n == 3 {
            if k == 0 {
                lin(&[(5.0 * dt / 12.0, &f[0]), (8.0 * dt / 12.0, &f[1]), (-dt / 12.0, &f[2])])
            } else {
                lin(&[(-dt / 12.0, &f[0]), (8.0 * dt / 12.0, &f[1]), (5.0 * dt / 12.0, &f[2])])
            }
        } else if k == 0 {
            let w = dt / 24.0;
            lin(&[(9.0 * w, &f[0]), (19.0 * w, &f[1]), (-5.0 * w, &f[2]), (w, &f[3])])
        } else if k == n - 2 {
            let w = dt / 24.0;
            lin(&[(9.0 * w, &f[n - 1]), (19.0 * w, &f[n - 2]), (-5.0 * w, &f[n - 3]), (w, &f[n - 4])])
        } else {
            let w = dt / 24.0;
            lin(&[(-w, &f[k - 1]), (13.0 * w, &f[k]), (13.0 * w, &f[k + 1]), (-w, &f[k + 2])])
        };
        let next = lin(&[(1.0, &out[k]), (1.0, &inc)]);
        out.push(next);
    }
    out
}

/// Total integral over the whole grid.
pub fn integral<T: Field>(f: &[T], dt: f64) -> T {
    cumulative_integral(f, dt).pop().unwrap()
}

/// Derivative of sampled data: five-point stencils (one-sided at the ends).
pub fn derivative<T: Field>(f: &[T], dt: f64) -> Vec<T> {
    let n = f.len();
    assert!(n >= 3, "derivative needs at least three samples");
    if n < 5 {
        let h = 1.0 / (2.0 * dt);
        return (0..n)
            .map(|k| {
                if k == 0 {
                    lin(&[(-3.0 * h, &f[0]), (4.0 * h, &f[1]), (-h, &f[2])])
                } else if k == n - 1 {
                    lin(&[(3.0 * h, &f[n - 1]), (-4.0 * h, &f[n - 2]), (h, &f[n - 3])])
                } else {
                    lin(&[(-h, &f[k - 1]), (h, &f[k + 1])])
                }
            })
            .collect();
    }
    let h = 1.0 / (12.0 * dt);
    (0..n)
        .map(|k| match k {
            0 => lin(&[(-25.0 * h, &f[0]), (48.0 * h, &f[1]), (-36.0 * h, &f[2]), (16.0 * h, &f[3]), (-3.0 * h, &f[4])]),
            1 => lin(&[(-3.0 * h, &f[0]), (-10.0 * h, &f[1]), (18.0 * h, &f[2]), (-6.0 * h, &f[3]), (h, &f[4])]),
            k if k == n - 2 => lin(&[
                (3.0 * h, &f[n - 1]),
                (10.0 * h, &f[n - 2]),
                (-18.0 * h, &f[n - 3]),
                (6.0 * h, &f[n - 4]),
                (-h, &f[n - 5]),
            ]),
            k if k == n - 1 => lin(&[
                (25.0 * h, &f[n - 1]),
                (-48.0 * h, &f[n - 2]),
                (36.0 * h, &f[n - 3]),
                (-16.0 * h, &f[n - 4]),
                (3.0 * h, &f[n - 5]),
            ]),
            k => lin(&[(h, &f[k - 2]), (-8.0 * h, &f[k - 1]), (8.0 * h, &f[k + 1]), (-h, &f[k + 2])]),
        })
        .collect()
}

/// Cubic Lagrange interpolation of grid samples at an arbitrary `t` in [0, τ].
pub fn interpolate<T: Field>(f: &[T], dt: f64, t: f64) -> T {
    let n = f.len();
    let x = t / dt;
    let k = x.floor().clamp(0.0, (n - 2) as f64) as usize;
    if (x - k as f64).abs() < 1e-12 {
        return f[k].clone();
    }
    if n < 4 {
        let s = x - k as f64;
        return lin(&[(1.0 - s, &f[k]), (s, &f[k + 1])]);
    }
    let base = k.saturating_sub(1).min(n - 4);
    let s = x - base as f64;
    // Lagrange weights on nodes 0, 1, 2, 3
    let w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let w1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let w2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let w3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    lin(&[(w0, &f[base]), (w1, &f[base + 1]), (w2, &f[base + 2]), (w3, &f[base + 3])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(0.0, 10).is_err());
        assert!(Grid::new(1.0, 1).is_err());
        assert!(Grid::from_times(&[0.0, 0.1, 0.3]).is_err());
        let g = Grid::from_times(&[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(g.steps(), 3);
        assert_eq!(g.t(3), 1.5);
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        let err = |steps: usize| {
            let g = Grid::new(2.0, steps).unwrap();
            let f = g.sample(|t| (3.0 * t).cos());
            let i = cumulative_integral(&f, g.dt());
            g.times()
                .iter()
                .zip(&i)
                .map(|(t, v)| (v - (3.0 * t).sin() / 3.0).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 13.0 && ratio < 19.0, "{ratio}");
    }

    #[test]
    fn cubic_integrated_exactly() {
        let g = Grid::new(1.0, 7).unwrap();
        let f = g.sample(|t| C64::new(t * t * t - t, 2.0 * t * t));
        let i = integral(&f, g.dt());
        assert!((i - C64::new(0.25 - 0.5, 2.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn derivative_of_quartic_exact() {
        let g = Grid::new(1.0, 10).unwrap();
        let f = g.sample(|t| t.powi(4) - 2.0 * t);
        let d = derivative(&f, g.dt());
        for (t, v) in g.times().iter().zip(&d) {
            assert!((v - (4.0 * t.powi(3) - 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = Grid::new(1.0, 8).unwrap();
        let f = g.sample(|t| 1.0 + t - 3.0 * t * t + t * t * t);
        for &t in &[0.01, 0.33, 0.5, 0.97, 1.0] {
            let v = interpolate(&f, g.dt(), t);
            assert!((v - (1.0 + t - 3.0 * t * t + t * t * t)).abs() < 1e-13);
        }
    }
}
