//! Spectral side `sum m(l) phi(sqrt(l - rho^2))` and Weyl counting.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::analysis::TestFunction;
use crate::error::{Error, Result};
use crate::spectral::eigen::SpectrumResult;

pub const TRUNCATION_REL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSide {
    pub value: [f64; 2],
    /// Same sum with the negated square roots.
    pub branch_flip_difference: f64,
    /// `|phi(sqrt(lambda_max - rho^2))|`.
    pub truncation_tail: f64,
    pub lambda_max: [f64; 2],
    /// Tail test `tail <= 1e-8 |sum|` passed.
    pub truncation_ok: bool,
}

impl SpectralSide {
    pub fn value(&self) -> c64 {
        c64::new(self.value[0], self.value[1])
    }
}

/// Evaluates the sum and its diagnostics without enforcing the tail test.
pub fn spectral_side_lenient(spec: &SpectrumResult, f: &TestFunction, rho: f64) -> Result<SpectralSide> {
    let shift = rho * rho;
    let mut total = c64::new(0.0, 0.0);
    let mut flipped = c64::new(0.0, 0.0);
    for c in &spec.eigenvalues {
        let s = (c.value() - shift).sqrt();
        let m = c.multiplicity as f64;
        total += f.phi_at(s)? * m;
        flipped += f.phi_at(-s)? * m;
    }
    let top = spec
        .eigenvalues
        .iter()
        .max_by(|a, b| a.value().norm().total_cmp(&b.value().norm()))
        .ok_or_else(|| Error::Invalid("empty spectrum".to_string()))?;
    let tail = f.phi_at((top.value() - shift).sqrt())?.norm();
    Ok(SpectralSide {
        value: [total.re, total.im],
        branch_flip_difference: (total - flipped).norm(),
        truncation_tail: tail,
        lambda_max: [top.re, top.im],
        truncation_ok: tail <= TRUNCATION_REL_TOL * total.norm(),
    })
}

/// Like [`spectral_side_lenient`] but fails when the largest computed
/// eigenvalue still carries non-negligible weight.
pub fn spectral_side(spec: &SpectrumResult, f: &TestFunction, rho: f64) -> Result<SpectralSide> {
    let s = spectral_side_lenient(spec, f, rho)?;
    if !s.truncation_ok {
        return Err(Error::TruncationNotJustified { tail: s.truncation_tail, partial: s.value().norm() });
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub r: f64,
    pub count: usize,
    pub prediction: f64,
}

impl WeylPoint {
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.prediction
    }
}

/// `N(r) = sum m` over clusters with `|lambda| <= r`, against
/// `d vol r / (4 pi)`.
pub fn weyl_counting(spec: &SpectrumResult, r_values: &[f64], d: usize, vol: f64) -> Vec<WeylPoint> {
    r_values
        .iter()
        .map(|&r| WeylPoint {
            r,
            count: spec.eigenvalues.iter().filter(|c| c.value().norm() <= r).map(|c| c.multiplicity).sum(),
            prediction: d as f64 * vol * r / (4.0 * std::f64::consts::PI),
        })
        .collect()
}

/// `n` evenly spaced radii over the middle third of `[0, max |lambda|]`.
pub fn middle_third(spec: &SpectrumResult, n: usize) -> Vec<f64> {
    let top = spec.max_modulus();
    (0..n).map(|i| top / 3.0 + top / 3.0 * i as f64 / (n.max(2) - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mollifier_family;
    use crate::spectral::eigen::EigenCluster;

    fn synthetic(values: &[(f64, f64, usize)]) -> SpectrumResult {
        let mut raw = Vec::new();
        for &(re, im, m) in values {
            for _ in 0..m {
                raw.push([re, im]);
            }
        }
        SpectrumResult {
            eigenvalues: values
                .iter()
                .map(|&(re, im, multiplicity)| EigenCluster { re, im, multiplicity, residual: 0.0 })
                .collect(),
            raw,
            mesh_h: 0.1,
            cluster_tol: 1e-6,
            k_scale: 1.0,
            n_free: 100,
            method: "synthetic".to_string(),
            max_residual: 0.0,
        }
    }

    #[test]
    fn sum_matches_direct_evaluation() {
        let f = mollifier_family(4.0, 2);
        let s = synthetic(&[(0.0, 0.0, 1), (3.8, 0.0, 3), (5.3, 0.5, 2), (5.3, -0.5, 2), (60.0, 0.0, 1)]);
        let side = spectral_side_lenient(&s, &f, 0.5).unwrap();
        let mut want = c64::new(0.0, 0.0);
        for (re, im, m) in [(0.0, 0.0, 1.0), (3.8, 0.0, 3.0), (5.3, 0.5, 2.0), (5.3, -0.5, 2.0), (60.0, 0.0, 1.0)] {
            want += f.phi_at((c64::new(re, im) - 0.25).sqrt()).unwrap() * m;
        }
        assert!((side.value() - want).norm() <= 1e-14 * want.norm());
        // conjugate pairs cancel the imaginary part; phi is even
        assert!(side.value[1].abs() <= 1e-14 * want.norm());
        assert!(side.branch_flip_difference <= 1e-14 * want.norm());
        assert_eq!(side.lambda_max, [60.0, 0.0]);
    }

    #[test]
    fn truncation_guard() {
        let f = mollifier_family(2.0, 4);
        let short = synthetic(&[(0.0, 0.0, 1), (4.0, 0.0, 3)]);
        assert!(matches!(spectral_side(&short, &f, 0.5), Err(Error::TruncationNotJustified { .. })));
        let long = synthetic(&[(0.0, 0.0, 1), (4.0, 0.0, 3), (2.0e4, 0.0, 1)]);
        assert!(spectral_side(&long, &f, 0.5).is_ok());
    }

    #[test]
    fn weyl_counts_with_multiplicity() {
        let s = synthetic(&[(0.0, 0.0, 1), (2.0, 0.0, 2), (3.0, 4.0, 1), (10.0, 0.0, 3)]);
        let pts = weyl_counting(&s, &[1.0, 2.0, 5.0, 9.0, 10.0], 2, 4.0 * std::f64::consts::PI);
        let counts: Vec<usize> = pts.iter().map(|p| p.count).collect();
        assert_eq!(counts, vec![1, 3, 4, 4, 7]);
        assert!((pts[2].prediction - 10.0).abs() < 1e-12);
        let mid = middle_third(&s, 3);
        assert_eq!(mid.len(), 3);
        assert!((mid[0] - 10.0 / 3.0).abs() < 1e-12 && (mid[2] - 20.0 / 3.0).abs() < 1e-12);
    }
}
