// SPDX-License-Identifier: Apache-2.0

//! Roots of monic cubics through the eigenvalues of the companion matrix.

use nalgebra::{Matrix3, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// All three (complex) roots of `x^3 + a2 x^2 + a1 x + a0`.
///
/// The variable is rescaled by `|a0|^(1/3)` before forming the companion
/// matrix so its entries are of comparable size.
pub fn monic_cubic_roots(a2: f64, a1: f64, a0: f64) -> Result<[Complex64; 3]> {
    let mut scale = a0.abs().cbrt();
    if !(scale.is_finite() && scale > 0.0) {
        scale = a1.abs().sqrt().max(a2.abs()).max(1.0);
    }
    let (b2, b1, b0) = (a2 / scale, a1 / (scale * scale), a0 / (scale * scale * scale));
    let companion = Matrix3::new(-b2, -b1, -b0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eig = eigenvalues3(companion)?;
    Ok(eig.map(|z| z * scale))
}

fn eigenvalues3(m: Matrix3<f64>) -> Result<[Complex64; 3]> {
    if let Some(schur) = Schur::try_new(m, f64::EPSILON, 10_000) {
        let ev = schur.complex_eigenvalues();
        return Ok([ev[0], ev[1], ev[2]]);
    }
    // Retry with a looser convergence test.
    let schur = Schur::try_new(m, 16.0 * f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?;
    let ev = schur.complex_eigenvalues();
    Ok([ev[0], ev[1], ev[2]])
}

/// Cubic discriminant of `a x^3 + b x^2 + c x + d`; positive means three
/// distinct real roots, negative means one real root and a conjugate pair.
pub fn cubic_discriminant(a: f64, b: f64, c: f64, d: f64) -> f64 {
    18.0 * a * b * c * d - 4.0 * b * b * b * d + b * b * c * c - 4.0 * a * c * c * c - 27.0 * a * a * d * d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(roots: [Complex64; 3]) -> Vec<f64> {
        let mut r: Vec<f64> = roots.iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r
    }

    #[test]
    fn factored_cubic() {
        // (x - 2)(x^2 - 4x + 2)
        let r = sorted_real(monic_cubic_roots(-6.0, 10.0, -4.0).unwrap());
        let s = 2f64.sqrt();
        for (got, want) in r.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn complex_pair() {
        // (x - 1)(x^2 + 1)
        let roots = monic_cubic_roots(-1.0, 1.0, -1.0).unwrap();
        let real: Vec<_> = roots.iter().filter(|z| z.im.abs() < 1e-12).collect();
        assert_eq!(real.len(), 1);
        assert!((real[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn widely_spread_roots() {
        // (x - 1e-6)(x - 1)(x - 1e6)
        let (r1, r2, r3) = (1e-6, 1.0, 1e6);
        let a2 = -(r1 + r2 + r3);
        let a1 = r1 * r2 + r1 * r3 + r2 * r3;
        let a0 = -r1 * r2 * r3;
        let r = sorted_real(monic_cubic_roots(a2, a1, a0).unwrap());
        assert!((r[1] - 1.0).abs() < 1e-8);
        assert!((r[2] - 1e6).abs() < 1e-4);
    }

    #[test]
    fn discriminant_sign() {
        assert!(cubic_discriminant(1.0, -6.0, 10.0, -4.0) > 0.0);
        assert!(cubic_discriminant(1.0, -1.0, 1.0, -1.0) < 0.0);
        assert_eq!(cubic_discriminant(1.0, -3.0, 3.0, -1.0), 0.0);
    }
}
