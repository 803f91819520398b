//! Spherical Plancherel density of the hyperbolic plane and the identity
//! contribution `d * (vol / 2) * int phi(l) beta(l) dl`.

use serde::{Deserialize, Serialize};

use crate::analysis::quadrature::GaussLegendre;
use crate::analysis::testfn::{TestFunction, INV_SQRT_2PI};
use crate::error::{Error, Result};

pub const TAIL_REL_TOL: f64 = 1e-10;
const BLOCK: f64 = 4.0;
const MIN_CUTOFF: f64 = 12.0;
const MAX_CUTOFF: f64 = 4000.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlancherelModel {
    /// `|rho|`; the eigenvalue shift is `rho^2`.
    pub rho: f64,
}

impl Default for PlancherelModel {
    fn default() -> Self {
        PlancherelModel { rho: 0.5 }
    }
}

impl PlancherelModel {
    /// `l tanh(pi l) / (2 pi)`, so that `(vol / 2) * beta` is the usual
    /// `(vol / 4 pi) r tanh(pi r)` density.
    pub fn beta(&self, l: f64) -> f64 {
        l * (std::f64::consts::PI * l).tanh() / (2.0 * std::f64::consts::PI)
    }

    pub fn shift(&self) -> f64 {
        self.rho * self.rho
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityTerm {
    pub value: f64,
    /// Integration cutoff `Lambda`.
    pub cutoff: f64,
    pub tail_estimate: f64,
}

/// `int_0^cutoff phi * beta` and diagnostics; the full line integral is
/// twice this.
fn half_line_integral(f: &TestFunction, model: &PlancherelModel) -> Result<(f64, f64, f64)> {
    let outer = GaussLegendre::new(20);
    let mut table = f.table(2.0 * MIN_CUTOFF);
    let mut total = 0.0;
    let mut prev_abs = f64::INFINITY;
    let mut lo = 0.0;
    loop {
        let hi = lo + BLOCK;
        if hi > table.l_max {
            table = f.table(2.0 * table.l_max);
        }
        // panels of 1/4 resolve cos(t l) for t <= T ~ 6 comfortably
        let panels = (BLOCK * f.support().max(1.0)).ceil() as usize;
        let h = BLOCK / panels as f64;
        let (mut signed, mut abs) = (0.0, 0.0);
        for p in 0..panels {
            let a = lo + p as f64 * h;
            signed += outer.integrate_real(a, a + h, &mut |l| table.phi(l) * model.beta(l));
            abs += outer.integrate_real(a, a + h, &mut |l| (table.phi(l) * model.beta(l)).abs());
        }
        total += signed;
        lo = hi;
        let q = abs / prev_abs;
        prev_abs = abs;
        let tail = if q < 0.9 { abs * q / (1.0 - q) } else { 10.0 * abs };
        if lo >= MIN_CUTOFF && tail <= TAIL_REL_TOL * total.abs() {
            return Ok((total, lo, tail));
        }
        if lo >= MAX_CUTOFF {
            return Err(Error::QuadratureNotConverged(format!(
                "identity term tail {tail:e} still above target at cutoff {lo}"
            )));
        }
    }
}

/// `d * (vol / 2) * int_R phi(l) beta(l) dl`.
pub fn identity_term(f: &TestFunction, d: usize, vol: f64) -> Result<IdentityTerm> {
    if d < 1 || !(vol > 0.0) {
        return Err(Error::Invalid(format!("identity term needs d >= 1 and vol > 0 (d = {d}, vol = {vol})")));
    }
    let model = PlancherelModel::default();
    let (half, cutoff, tail) = half_line_integral(f, &model)?;
    let scale = d as f64 * 0.5 * vol * 2.0;
    Ok(IdentityTerm { value: scale * half, cutoff, tail_estimate: scale * tail })
}

/// Max over 64 points of `[-T, T]` of `|phi_hat(t) - inverse(phi)(t)|`.
pub fn fourier_roundtrip(f: &TestFunction) -> Result<f64> {
    let t = f.support();
    let model = PlancherelModel::default();
    // the decay cutoff of phi * beta also bounds phi itself
    let (_, cutoff, _) = half_line_integral(f, &model).unwrap_or((0.0, 400.0, 0.0));
    let cutoff = cutoff.max(40.0);
    let table = f.table(cutoff);
    let rule = GaussLegendre::new(20);
    let panels = (cutoff * t.max(1.0) * 2.0).ceil() as usize;
    let h = cutoff / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 20);
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let l = c + 0.5 * h * x;
            nodes.push((l, 0.5 * h * w * table.phi(l)));
        }
    }
    let mut worst = 0.0_f64;
    for i in 0..64 {
        let s = -t + 2.0 * t * i as f64 / 63.0;
        let back: f64 = 2.0 * INV_SQRT_2PI * nodes.iter().map(|(l, w)| w * (s * l).cos()).sum::<f64>();
        worst = worst.max((f.phi_hat(s) - back).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::quadrature::adaptive_real;
    use crate::analysis::testfn::{mollifier_family, Family, TestFunctionSpec};

    #[test]
    fn beta_properties() {
        let m = PlancherelModel::default();
        assert_eq!(m.beta(0.0), 0.0);
        for i in 1..50 {
            let l = 0.31 * i as f64;
            assert_eq!(m.beta(l), m.beta(-l));
            assert!(m.beta(l) > 0.0);
        }
        assert_eq!(m.shift(), 0.25);
    }

    /// Independent route: integrating by parts against the cosine transform
    /// turns the density into `-(vol / 4 pi) (2 / sqrt(2 pi)) int phi_hat'(t) / sinh(t / 2) dt`.
    fn identity_oracle(f: &TestFunction, d: usize, vol: f64) -> f64 {
        let g = GaussLegendre::new(30);
        let integral = adaptive_real(&g, 0.0, f.support(), 16, 1e-13, &mut |t| {
            if t == 0.0 {
                // phi_hat'(t) / sinh(t/2) -> 2 phi_hat''(0)
                0.0
            } else {
                f.phi_hat_derivative(t) / (0.5 * t).sinh()
            }
        })
        .unwrap();
        d as f64 * vol / (4.0 * std::f64::consts::PI) * (-2.0 * INV_SQRT_2PI) * integral
    }

    #[test]
    fn identity_term_matches_sinh_oracle() {
        for (t, k) in [(2.0, 1), (2.0, 8), (4.0, 2), (5.5, 2)] {
            let f = mollifier_family(t, k);
            let v = identity_term(&f, 1, 4.0 * std::f64::consts::PI).unwrap();
            let o = identity_oracle(&f, 1, 4.0 * std::f64::consts::PI);
            assert!((v.value - o).abs() <= 1e-9 * o.abs(), "T = {t}, k = {k}: {} vs {o}", v.value);
            assert!(v.tail_estimate <= 1e-9 * v.value.abs());
        }
    }

    #[test]
    fn identity_term_linearity() {
        let f = mollifier_family(4.0, 2);
        let one = identity_term(&f, 1, 4.0 * std::f64::consts::PI).unwrap().value;
        let three = identity_term(&f, 3, 4.0 * std::f64::consts::PI).unwrap().value;
        assert!((three - 3.0 * one).abs() <= 1e-14 * three.abs());
        let dbl = identity_term(&f, 1, 8.0 * std::f64::consts::PI).unwrap().value;
        assert!((dbl - 2.0 * one).abs() <= 1e-14 * dbl.abs());
        assert!(identity_term(&f, 0, 1.0).is_err());
    }

    #[test]
    fn roundtrip_within_tolerance() {
        for (t, k) in [(2.0, 1), (4.0, 2)] {
            let err = fourier_roundtrip(&mollifier_family(t, k)).unwrap();
            assert!(err <= 1e-8, "T = {t}: {err:e}");
        }
        let zero = TestFunctionSpec { family: Family::Zero, t: 1.0, k: 1, quad_order: 20 }.build().unwrap();
        assert_eq!(fourier_roundtrip(&zero).unwrap(), 0.0);
    }
}
