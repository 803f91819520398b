//! Even Paley–Wiener test functions.
//!
//! Convention: `phi(l) = (1/sqrt(2 pi)) * int_{-T}^{T} phi_hat(t) cos(t l) dt`
//! and `phi_hat(t) = (1/sqrt(2 pi)) * int phi(l) cos(t l) dl`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::quadrature::{adaptive, GaussLegendre, DEFAULT_REL_TOL};
use crate::error::{Error, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `|Im l| * T` above this would push `cosh` past ~e^50.
pub const STRIP_LIMIT: f64 = 50.0;
pub const DEFAULT_QUAD_ORDER: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `exp(-k T^2 / (T^2 - t^2))` on `|t| < T`.
    Mollifier,
    /// `phi_hat = 0`; only useful as a degenerate case.
    Zero,
}

/// Config-facing description of a test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub family: Family,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_order")]
    pub quad_order: usize,
}

fn default_k() -> u32 {
    1
}

fn default_order() -> usize {
    DEFAULT_QUAD_ORDER
}

impl TestFunctionSpec {
    pub fn mollifier(t: f64, k: u32) -> TestFunctionSpec {
        TestFunctionSpec { family: Family::Mollifier, t, k, quad_order: DEFAULT_QUAD_ORDER }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Invalid(format!("test function support T must be positive, got {}", self.t)));
        }
        if self.k < 1 {
            return Err(Error::Invalid("mollifier exponent k must be at least 1".to_string()));
        }
        if !(4..=64).contains(&self.quad_order) {
            return Err(Error::Invalid(format!("quad_order {} outside 4..=64", self.quad_order)));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<TestFunction> {
        self.validate()?;
        Ok(TestFunction { spec: self.clone(), rule: GaussLegendre::new(self.quad_order) })
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub spec: TestFunctionSpec,
    rule: GaussLegendre,
}

/// `mollifier_family(T, k)`; panics only on invalid parameters.
pub fn mollifier_family(t: f64, k: u32) -> TestFunction {
    TestFunctionSpec::mollifier(t, k).build().expect("valid mollifier parameters")
}

impl TestFunction {
    pub fn support(&self) -> f64 {
        self.spec.t
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    pub fn phi_hat(&self, t: f64) -> f64 {
        let tt = self.spec.t;
        match self.spec.family {
            Family::Zero => 0.0,
            Family::Mollifier => {
                let gap = tt * tt - t * t;
                if gap <= 0.0 {
                    0.0
                } else {
                    (-(self.spec.k as f64) * tt * tt / gap).exp()
                }
            }
        }
    }

    pub fn phi_hat_derivative(&self, t: f64) -> f64 {
        let tt = self.spec.t;
        match self.spec.family {
            Family::Zero => 0.0,
            Family::Mollifier => {
                let gap = tt * tt - t * t;
                if gap <= 0.0 {
                    0.0
                } else {
                    let k = self.spec.k as f64;
                    -2.0 * k * tt * tt * t / (gap * gap) * (-k * tt * tt / gap).exp()
                }
            }
        }
    }

    /// `int |phi_hat|` over the support.
    pub fn phi_hat_l1(&self) -> Result<f64> {
        let t = self.spec.t;
        let v = adaptive(&self.rule, 0.0, t, 4, DEFAULT_REL_TOL, &mut |x| Complex64::new(self.phi_hat(x).abs(), 0.0))?;
        Ok(2.0 * v.re)
    }

    pub fn strip_bound(&self) -> f64 {
        STRIP_LIMIT / self.spec.t
    }

    /// `phi` at a complex argument by adaptive quadrature over `[0, T]`.
    pub fn phi_at(&self, l: Complex64) -> Result<Complex64> {
        let bound = self.strip_bound();
        if !(l.im.abs() <= bound) || !l.re.is_finite() {
            return Err(Error::ArgumentOutOfStrip { re: l.re, im: l.im, bound });
        }
        if self.spec.family == Family::Zero {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let t = self.spec.t;
        // |x| keeps phi(l) and phi(-l) bit-identical
        let (x, y) = (l.re.abs(), if l.re < 0.0 { -l.im } else { l.im });
        let panels = ((t * x / std::f64::consts::PI).ceil() as usize).clamp(2, 100_000);
        let v = if y == 0.0 {
            adaptive(&self.rule, 0.0, t, panels, DEFAULT_REL_TOL, &mut |s| {
                Complex64::new(self.phi_hat(s) * (s * x).cos(), 0.0)
            })?
        } else if x == 0.0 {
            adaptive(&self.rule, 0.0, t, panels, DEFAULT_REL_TOL, &mut |s| {
                Complex64::new(self.phi_hat(s) * (s * y).cosh(), 0.0)
            })?
        } else {
            adaptive(&self.rule, 0.0, t, panels, DEFAULT_REL_TOL, &mut |s| {
                let w = self.phi_hat(s);
                Complex64::new(w * (s * x).cos() * (s * y).cosh(), -w * (s * x).sin() * (s * y).sinh())
            })?
        };
        Ok(v * (2.0 * INV_SQRT_2PI))
    }

    pub fn phi(&self, x: f64) -> Result<f64> {
        self.phi_at(Complex64::new(x, 0.0)).map(|v| v.re)
    }

    /// Fixed composite rule resolving `phi` on `[-l_max, l_max]`.
    pub fn table(&self, l_max: f64) -> PhiTable {
        PhiTable::new(self, l_max)
    }
}

/// `phi` on the real axis as a fixed weighted cosine sum, for bulk
/// evaluation. Panels are at most two radians of `cos(t l_max)` wide.
#[derive(Clone, Debug)]
pub struct PhiTable {
    pub l_max: f64,
    nodes: Vec<f64>,
    coeffs: Vec<f64>,
}

impl PhiTable {
    pub fn new(f: &TestFunction, l_max: f64) -> PhiTable {
        let t = f.support();
        let panels = ((t * l_max.abs() / 2.0).ceil() as usize).max(64);
        let h = t / panels as f64;
        let mut nodes = Vec::with_capacity(panels * f.rule.order());
        let mut coeffs = Vec::with_capacity(panels * f.rule.order());
        for p in 0..panels {
            let c = (p as f64 + 0.5) * h;
            for (x, w) in f.rule.nodes.iter().zip(&f.rule.weights) {
                let s = c + 0.5 * h * x;
                let v = f.phi_hat(s);
                if v != 0.0 {
                    nodes.push(s);
                    coeffs.push(2.0 * INV_SQRT_2PI * 0.5 * h * w * v);
                }
            }
        }
        PhiTable { l_max, nodes, coeffs }
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.nodes.iter().zip(&self.coeffs).map(|(s, c)| c * (s * x).cos()).sum()
    }
}
