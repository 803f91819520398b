use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entries below this (relative to the largest entry) count as zero when
/// choosing the PSL sign.
const SIGN_EPS: f64 = 1e-12;

/// Margin above 2 that |trace| must clear for a matrix to be treated as
/// hyperbolic.
pub const HYPERBOLIC_MARGIN: f64 = 1e-10;

/// Element of PSL(2, R), acting on the upper half-plane by Möbius maps.
///
/// Products are renormalised to determinant one and brought into the
/// canonical sign (first entry of `(a, b, c, d)` that is not negligibly
/// small is positive), so `m` and `-m` always produce the same value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Builds a matrix, renormalising to det 1 and fixing the sign.
    ///
    /// Panics if the determinant is not positive.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        Mat2 { a, b, c, d }.normalized()
    }

    pub fn diag(x: f64, y: f64) -> Mat2 {
        Mat2::new(x, 0.0, 0.0, y)
    }

    /// Elliptic rotation by `theta` about `i`.
    pub fn rotation(theta: f64) -> Mat2 {
        let (s, c) = (0.5 * theta).sin_cos();
        Mat2::new(c, s, -s, c)
    }

    /// Hyperbolic translation of length `l` along the imaginary axis.
    pub fn translation(l: f64) -> Mat2 {
        Mat2::diag((0.5 * l).exp(), (-0.5 * l).exp())
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Squared Frobenius norm; `cosh d(i, m i) = frob2 / 2`.
    pub fn frob2(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Hyperbolic distance between `i` and its image.
    pub fn displacement(&self) -> f64 {
        (0.5 * self.frob2()).max(1.0).acosh()
    }

    fn normalized(self) -> Mat2 {
        let det = self.det();
        assert!(det > 0.0, "Mat2 with non-positive determinant {det}");
        let s = det.sqrt().recip();
        let m = Mat2 { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s };
        m.sign_canonical()
    }

    /// Like `normalized`, but leaves the scale alone once cancellation has
    /// destroyed the determinant (entries near 1e8 and beyond).
    fn renormalized(self) -> Mat2 {
        let det = self.det();
        if det > 0.5 && det < 2.0 {
            self.normalized()
        } else {
            self.sign_canonical()
        }
    }

    fn sign_canonical(self) -> Mat2 {
        let eps = SIGN_EPS * self.max_abs();
        for x in self.entries() {
            if x.abs() > eps {
                return if x < 0.0 { self.neg() } else { self };
            }
        }
        self
    }

    fn neg(self) -> Mat2 {
        Mat2 { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn inverse(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }.sign_canonical()
    }

    pub fn pow(&self, k: u32) -> Mat2 {
        (0..k).fold(Mat2::IDENTITY, |acc, _| acc * *self)
    }

    /// `self * m * self^-1`.
    pub fn conjugate(&self, m: &Mat2) -> Mat2 {
        *self * *m * self.inverse()
    }

    /// Max-entry distance in PSL(2, R), i.e. minimised over the sign.
    pub fn psl_distance(&self, other: &Mat2) -> f64 {
        let plus = self
            .entries()
            .iter()
            .zip(other.entries())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        let minus = self
            .entries()
            .iter()
            .zip(other.entries())
            .fold(0.0_f64, |m, (x, y)| m.max((x + y).abs()));
        plus.min(minus)
    }

    /// Equality in PSL(2, R) up to a tolerance scaled by the entry size.
    pub fn approx_eq(&self, other: &Mat2, rel_tol: f64) -> bool {
        let scale = 1.0 + self.max_abs().max(other.max_abs());
        self.psl_distance(other) <= rel_tol * scale
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2.0 + HYPERBOLIC_MARGIN
    }

    /// Möbius action on the upper half-plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    /// Attracting and repelling fixed points on the real line (`None` for
    /// the point at infinity). Only meaningful for hyperbolic elements.
    pub fn fixed_points(&self) -> (Option<f64>, Option<f64>) {
        let t = self.trace();
        let disc = (t * t - 4.0).max(0.0).sqrt();
        if self.c.abs() < SIGN_EPS * self.max_abs() {
            // z -> (a z + b)/d; the finite fixed point is b/(d - a).
            let finite = if (self.d - self.a).abs() > 0.0 { Some(self.b / (self.d - self.a)) } else { None };
            return if self.a.abs() > self.d.abs() { (None, finite) } else { (finite, None) };
        }
        let x1 = (self.a - self.d + disc) / (2.0 * self.c);
        let x2 = (self.a - self.d - disc) / (2.0 * self.c);
        // attracting point has |c x + d| > 1
        if (self.c * x1 + self.d).abs() > (self.c * x2 + self.d).abs() {
            (Some(x1), Some(x2))
        } else {
            (Some(x2), Some(x1))
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
        .renormalized()
    }
}

/// Hyperbolic translation length `2 arccosh(|tr| / 2)`.
pub fn hyperbolic_length(m: &Mat2) -> Result<f64> {
    let t = m.trace().abs();
    if t <= 2.0 + HYPERBOLIC_MARGIN {
        return Err(Error::NotHyperbolic { trace: t });
    }
    Ok(2.0 * (0.5 * t).acosh())
}

/// Hyperbolic distance between two points of the upper half-plane.
pub fn uhp_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm_sqr();
    (1.0 + num / (2.0 * z.im * w.im)).acosh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_of_diagonal() {
        let e = 1f64.exp();
        let m = Mat2::diag(e, 1.0 / e);
        assert!((hyperbolic_length(&m).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn length_from_trace() {
        // |tr| = 2.5 -> cosh(l/2) = 1.25 -> l = 2 ln 2
        let m = Mat2::new(2.0, 0.3, 0.0, 0.5);
        assert!((m.trace() - 2.5).abs() < 1e-12);
        assert!((hyperbolic_length(&m).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn parabolic_rejected() {
        let m = Mat2::new(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(hyperbolic_length(&m), Err(Error::NotHyperbolic { .. })));
    }

    #[test]
    fn sign_is_canonical() {
        let m = Mat2::new(-1.0, 2.0, 3.0, -7.0);
        let n = Mat2::new(1.0, -2.0, -3.0, 7.0);
        assert_eq!(m, n);
        assert!(m.a > 0.0);
        let z = Mat2::new(0.0, -1.0, 1.0, 0.0);
        assert!(z.b > 0.0);
    }

    #[test]
    fn product_keeps_unit_determinant() {
        let mut m = Mat2::IDENTITY;
        let g = Mat2::rotation(0.3) * Mat2::translation(1.7);
        for _ in 0..12 {
            m = m * g;
            // rounding in det scales with the squared entries
            assert!((m.det() - 1.0).abs() < 1e-15 * m.frob2());
        }
    }

    #[test]
    fn displacement_matches_point_distance() {
        let g = Mat2::rotation(1.1) * Mat2::translation(2.3) * Mat2::rotation(-0.4);
        let i = Complex64::new(0.0, 1.0);
        assert!((g.displacement() - uhp_distance(i, g.apply(i))).abs() < 1e-12);
    }

    #[test]
    fn fixed_points_are_fixed() {
        let g = Mat2::rotation(0.7) * Mat2::translation(1.3) * Mat2::rotation(-0.2);
        let (att, rep) = g.fixed_points();
        for x in [att.unwrap(), rep.unwrap()] {
            let y = g.apply(Complex64::new(x, 0.0));
            assert!((y.re - x).abs() < 1e-10 * (1.0 + x.abs()));
        }
        // repeated application drifts towards the attracting point
        let mut z = Complex64::new(0.3, 0.9);
        for _ in 0..60 {
            z = g.apply(z);
        }
        assert!((z.re - att.unwrap()).abs() < 1e-6);
    }
}
