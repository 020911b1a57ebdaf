use crate::linops::CMatrix;

const MAX_TERMS: usize = 40;

/// Matrix exponential by scaling and squaring around a truncated Taylor kernel.
///
/// The argument is scaled so that its one-norm is at most 1/2, where the
/// series converges to double precision within about 18 terms.
pub fn matrix_exp(m: &CMatrix) -> CMatrix {
    let n = m.dim();
    let norm = m.norm_one();
    if norm == 0.0 {
        return CMatrix::identity(n);
    }
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m.scale_re(0.5f64.powi(s));

    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = (&term * &a).scale_re(1.0 / k as f64);
        sum += &term;
        if term.norm_one() <= f64::EPSILON * 1e-3 * sum.norm_one() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{fro_norm, pauli};
    use num_complex::Complex64 as C64;

    /// Plain Taylor series without scaling; valid as an oracle for small norms.
    fn taylor_oracle(m: &CMatrix, terms: usize) -> CMatrix {
        let mut sum = CMatrix::identity(m.dim());
        let mut term = CMatrix::identity(m.dim());
        for k in 1..terms {
            term = (&term * m).scale_re(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_gives_identity() {
        assert_eq!(matrix_exp(&CMatrix::zeros(3)), CMatrix::identity(3));
    }

    #[test]
    fn euler_identity_for_pauli() {
        // exp(iπσ₁/2) = cos(π/2) + i sin(π/2) σ₁ = iσ₁
        let m = pauli(1).scale(C64::new(0.0, std::f64::consts::FRAC_PI_2));
        let e = matrix_exp(&m);
        let want = pauli(1).scale(C64::i());
        assert!(fro_norm(&(&e - &want)) < 1e-14);
    }

    #[test]
    fn matches_taylor_series_for_unit_norm() {
        let raw = CMatrix::from_vec(
            3,
            (0..9)
                .map(|k| C64::new((1.3 * k as f64).sin(), (0.4 * k as f64 + 0.2).cos()))
                .collect(),
        );
        let m = raw.scale_re(1.0 / fro_norm(&raw));
        let err = fro_norm(&(&matrix_exp(&m) - &taylor_oracle(&m, 30)));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn large_norm_relative_accuracy() {
        // exp(θ σ₂ i) rotation with θ = 9: closed form cos θ + i sin θ σ₂
        let theta = 9.0;
        let m = pauli(2).scale(C64::new(0.0, theta));
        let want = &CMatrix::identity(2).scale_re(theta.cos()) + &pauli(2).scale(C64::new(0.0, theta.sin()));
        let err = fro_norm(&(&matrix_exp(&m) - &want));
        assert!(err < 1e-13, "{err}");
    }
}
