//! Trace report: both sides per test function plus provenance.

use std::fmt::Write as _;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::analysis::TestFunctionSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub test_function: TestFunctionSpec,
    pub spectral: [f64; 2],
    pub geometric: [f64; 2],
    pub identity_term: f64,
    pub class_count: usize,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub truncation_ok: bool,
    pub truncation_tail: f64,
    pub branch_flip_difference: f64,
    pub geometric_exact: bool,
}

impl TraceEntry {
    pub fn new(
        test_function: TestFunctionSpec,
        spectral: c64,
        geometric: c64,
        identity_term: f64,
        class_count: usize,
    ) -> TraceEntry {
        let abs = (spectral - geometric).norm();
        TraceEntry {
            test_function,
            spectral: [spectral.re, spectral.im],
            geometric: [geometric.re, geometric.im],
            identity_term,
            class_count,
            abs_residual: abs,
            rel_residual: relative_residual(spectral, geometric),
            truncation_ok: true,
            truncation_tail: 0.0,
            branch_flip_difference: 0.0,
            geometric_exact: true,
        }
    }
}

/// `|S - G| / max(|G|, 1e-300)`.
pub fn relative_residual(s: c64, g: c64) -> f64 {
    (s - g).norm() / g.norm().max(1e-300)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub preset: String,
    pub rep_dim: usize,
    pub rep_unitary: bool,
    pub l_max: f64,
    pub class_count: usize,
    pub mesh_level: u32,
    pub mesh_h: f64,
    pub n_free: usize,
    pub eigen_count: usize,
    pub eigen_method: String,
    pub max_eigen_residual: f64,
    pub lambda_max: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub entries: Vec<TraceEntry>,
    pub provenance: Provenance,
    /// Every computed eigenvalue has `|Im| <= 1e-8 (1 + |lambda|)`.
    pub spectrum_real: bool,
    pub max_abs_imag: f64,
    pub threshold: f64,
    pub passed: bool,
    pub advisories: Vec<String>,
}

impl TraceReport {
    pub fn max_rel_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_residual).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// Aligned plain-text table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let p = &self.provenance;
        let _ = writeln!(
            out,
            "preset {}  rank {}  unitary {}  level {}  h {:.4}  dofs {}  eigenvalues {} ({})  L_max {}  classes {}",
            p.preset,
            p.rep_dim,
            p.rep_unitary,
            p.mesh_level,
            p.mesh_h,
            p.n_free,
            p.eigen_count,
            p.eigen_method,
            p.l_max,
            p.class_count
        );
        let _ = writeln!(out, "max |Im lambda| {:.3e}  spectrum_real {}", self.max_abs_imag, self.spectrum_real);
        let _ = writeln!(
            out,
            "{:>6} {:>3} {:>24} {:>24} {:>11} {:>11} {:>6}",
            "T", "k", "spectral", "geometric", "abs", "rel", "trunc"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:>6} {:>3} {:>24} {:>24} {:>11.3e} {:>11.3e} {:>6}",
                e.test_function.t,
                e.test_function.k,
                fmt_c(e.spectral),
                fmt_c(e.geometric),
                e.abs_residual,
                e.rel_residual,
                if e.truncation_ok { "ok" } else { "tail" }
            );
        }
        for a in &self.advisories {
            let _ = writeln!(out, "note: {a}");
        }
        let _ = writeln!(
            out,
            "{} (max relative residual {:.3e}, threshold {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.max_rel_residual(),
            self.threshold
        );
        out
    }
}

fn fmt_c(v: [f64; 2]) -> String {
    format!("{:.10e}{:+.1e}i", v[0], v[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_definition() {
        let e = TraceEntry::new(TestFunctionSpec::mollifier(2.0, 1), c64::new(1.1, 0.0), c64::new(1.0, 0.0), 1.0, 0);
        assert!((e.rel_residual - 0.1).abs() < 1e-15);
        assert!((e.abs_residual - 0.1).abs() < 1e-15);
        // zero geometric side does not divide by zero
        assert!(relative_residual(c64::new(1e-310, 0.0), c64::new(0.0, 0.0)).is_finite());
    }
}
