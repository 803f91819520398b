//! Gauss–Legendre rules and an adaptive bisection driver.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const ABS_FLOOR: f64 = 1e-14;
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;
const MAX_DEPTH: u32 = 48;
const MAX_PANELS: usize = 200_000;

/// `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> GaussLegendre {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Rule applied to [a, b].
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, f: &mut F) -> Complex64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(c + h * x) * *w;
        }
        s * h
    }

    /// Like [`integrate`](Self::integrate) but also returns `int |f|`,
    /// the scale that bounds rounding in the sum.
    pub fn integrate_with_abs<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, f: &mut F) -> (Complex64, f64) {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = Complex64::new(0.0, 0.0);
        let mut m = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(c + h * x);
            s += v * *w;
            m += v.norm() * w;
        }
        (s * h, m * h.abs())
    }

    pub fn integrate_real<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, f: &mut F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive integration of `f` over [a, b]: a panel is accepted when the
/// rule on it agrees with the rule on its two halves to within its share of
/// `max(rel_tol * |I|, ABS_FLOOR)`. `initial_panels` seeds the partition so
/// oscillatory integrands are resolved before the first comparison.
pub fn adaptive<F: FnMut(f64) -> Complex64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
    f: &mut F,
) -> Result<Complex64> {
    if b <= a {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n0 = initial_panels.max(1);
    let width = b - a;
    let mut stack: Vec<(f64, f64, Complex64, u32)> = Vec::with_capacity(64);
    let mut estimate = Complex64::new(0.0, 0.0);
    for k in (0..n0).rev() {
        let lo = a + width * k as f64 / n0 as f64;
        let hi = if k + 1 == n0 { b } else { a + width * (k + 1) as f64 / n0 as f64 };
        let v = rule.integrate(lo, hi, f);
        estimate += v;
        stack.push((lo, hi, v, 0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut panels = 0usize;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::QuadratureNotConverged(format!("panel budget exhausted on [{a}, {b}]")));
        }
        let mid = 0.5 * (lo + hi);
        let (left, la) = rule.integrate_with_abs(lo, mid, f);
        let (right, ra) = rule.integrate_with_abs(mid, hi, f);
        let halves = left + right;
        let tol = (rel_tol * estimate.norm()).max(ABS_FLOOR) * (hi - lo) / width;
        // below this the comparison only sees rounding noise
        let noise = (ROUNDOFF * (la + ra)).max(f64::EPSILON * estimate.norm());
        if (halves - whole).norm() <= tol.max(noise) {
            total += halves;
            continue;
        }
        if depth >= MAX_DEPTH {
            return Err(Error::QuadratureNotConverged(format!(
                "no convergence on [{lo:e}, {hi:e}] (difference {:e})",
                (halves - whole).norm()
            )));
        }
        // keep the running magnitude current for the relative target
        estimate += halves - whole;
        stack.push((mid, hi, right, depth + 1));
        stack.push((lo, mid, left, depth + 1));
    }
    Ok(total)
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
    f: &mut F,
) -> Result<f64> {
    adaptive(rule, a, b, initial_panels, rel_tol, &mut |x| Complex64::new(f(x), 0.0)).map(|v| v.re)
}
