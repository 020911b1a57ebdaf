//! Dense complex matrices, the matrix exponential, and biorthonormal eigensystems.

mod eigen;
mod expm;
mod matrix;

pub use eigen::{bi_eigensystem, inner, BiorthoEigensystem, Level, EPS_BI, EPS_DEG};
pub use expm::matrix_exp;
pub use matrix::{fro_norm, pauli, CMatrix};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Unitary factor W of the polar decomposition O = W P (P positive).
///
/// Newton iteration W ← (W + W^{-†})/2, which converges quadratically for any
/// nonsingular starting matrix.
pub fn polar_unitary(o: &CMatrix) -> Result<CMatrix> {
    if o.dim() == 1 {
        let z = o[(0, 0)];
        if z.norm() == 0.0 {
            return Err(Error::NonFinite("zero overlap in polar alignment".into()));
        }
        return Ok(CMatrix::from_vec(1, vec![z / z.norm()]));
    }
    let mut w = o.clone();
    for _ in 0..100 {
        let inv = w
            .try_inverse()
            .ok_or_else(|| Error::NonFinite("singular overlap in polar alignment".into()))?;
        let next = (&w + &inv.adjoint()).scale_re(0.5);
        let delta = fro_norm(&(&next - &w));
        w = next;
        if delta <= 1e-15 * fro_norm(&w) {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence("polar decomposition".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn polar_factor_is_unitary_and_makes_overlap_hermitian() {
        let o = CMatrix::from_rows(&[[C64::new(0.9, 0.2), C64::new(0.1, -0.3)], [C64::new(-0.2, 0.0), C64::new(0.7, 0.5)]]);
        let w = polar_unitary(&o).unwrap();
        let wd = w.adjoint();
        assert!(fro_norm(&(&(&w * &wd) - &CMatrix::identity(2))) < 1e-14);
        // O W† = W P W† is Hermitian positive
        let p = &o * &wd;
        assert!(fro_norm(&(&p - &p.adjoint())) < 1e-14);
        assert!(p.trace().re > 0.0);
    }
}
