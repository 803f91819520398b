//! Geometric side: identity term plus the hyperbolic class sum
//! `sum tr chi(g) * l0 / D(g) * phi_hat(l) / sqrt(2 pi)`.

use std::fmt::Write as _;

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::testfn::INV_SQRT_2PI;
use crate::analysis::{identity_term, IdentityTerm, TestFunction};
use crate::error::{Error, Result};
use crate::fuchsian::cache::fmt_real;
use crate::fuchsian::{ConjugacyClass, Mat2, SurfaceGroup};
use crate::reps::Representation;

pub const CLASS_CSV_HEADER: &str = "length,primitive_length,power,re_trchi,im_trchi,re_contrib,im_contrib";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassContribution {
    pub word: String,
    pub length: f64,
    pub primitive_length: f64,
    pub power: u32,
    pub trace_chi: [f64; 2],
    pub contribution: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricSideReport {
    pub identity_term: f64,
    pub identity: IdentityTerm,
    pub class_contributions: Vec<ClassContribution>,
    pub total: [f64; 2],
    pub l_used: f64,
    pub support: f64,
    /// `l_used >= T`: no class that `phi_hat` can see is missing.
    pub exactness_flag: bool,
    pub warnings: Vec<String>,
}

impl GeometricSideReport {
    pub fn total(&self) -> c64 {
        c64::new(self.total[0], self.total[1])
    }

    pub fn class_sum(&self) -> c64 {
        self.class_contributions.iter().map(|c| c64::new(c.contribution[0], c.contribution[1])).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CLASS_CSV_HEADER);
        out.push('\n');
        for c in &self.class_contributions {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_real(c.length),
                fmt_real(c.primitive_length),
                c.power,
                fmt_real(c.trace_chi[0]),
                fmt_real(c.trace_chi[1]),
                fmt_real(c.contribution[0]),
                fmt_real(c.contribution[1])
            );
        }
        out
    }

    /// JSON summary without the per-class rows.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "identity_term": self.identity_term,
            "identity_cutoff": self.identity.cutoff,
            "identity_tail_estimate": self.identity.tail_estimate,
            "class_count": self.class_contributions.len(),
            "total": self.total,
            "l_used": self.l_used,
            "support": self.support,
            "exactness_flag": self.exactness_flag,
            "warnings": self.warnings,
        })
    }
}

/// Weight of one class for a trivial one-dimensional twist.
pub fn class_weight(c: &ConjugacyClass, f: &TestFunction) -> f64 {
    c.primitive_length / c.discriminant * f.phi_hat(c.length) * INV_SQRT_2PI
}

/// `classes` must contain every class up to `l_used`; when `l_used < T` the
/// report is returned with `exactness_flag = false` and a warning.
pub fn geometric_side(
    g: &SurfaceGroup,
    classes: &[ConjugacyClass],
    l_used: f64,
    r: &Representation,
    f: &TestFunction,
) -> Result<GeometricSideReport> {
    let identity = identity_term(f, r.dim, g.covolume)?;
    let t = f.support();
    let mut warnings = Vec::new();
    let exact = l_used >= t;
    if !exact {
        warnings.push(format!("{}", Error::IncompleteLengthSpectrum { have: l_used, need: t }));
    }
    let contributions: Vec<ClassContribution> = classes
        .par_iter()
        .filter(|c| c.length < t)
        .map(|c| {
            let tr = r.trace_on_class(c);
            let v = tr * class_weight(c, f);
            ClassContribution {
                word: c.rep_word.to_string(),
                length: c.length,
                primitive_length: c.primitive_length,
                power: c.power,
                trace_chi: [tr.re, tr.im],
                contribution: [v.re, v.im],
            }
        })
        .collect();
    // fixed order reduction
    let mut total = c64::new(identity.value, 0.0);
    for c in &contributions {
        total += c64::new(c.contribution[0], c.contribution[1]);
    }
    Ok(GeometricSideReport {
        identity_term: identity.value,
        identity,
        class_contributions: contributions,
        total: [total.re, total.im],
        l_used,
        support: t,
        exactness_flag: exact,
        warnings,
    })
}

/// `e^{-l/2} |det(Ad(a) - 1)|` on the nilpotent line, computed from an
/// explicitly diagonalised representative.
pub fn discriminant_via_adjoint(m: &Mat2) -> Result<f64> {
    let tr = m.trace();
    let disc = tr * tr - 4.0;
    if disc <= 0.0 {
        return Err(Error::NotHyperbolic { trace: tr });
    }
    let s = disc.sqrt();
    let mu = if tr > 0.0 { 0.5 * (tr + s) } else { 0.5 * (tr - s) };
    let nu = 1.0 / mu;
    // eigenvectors of [[a, b], [c, d]] for mu and nu
    let vec_for = |e: f64| -> (f64, f64) {
        if m.b.abs() >= m.c.abs() && m.b != 0.0 {
            (m.b, e - m.a)
        } else if m.c != 0.0 {
            (e - m.d, m.c)
        } else {
            // already diagonal
            if (m.a - e).abs() < (m.d - e).abs() {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
    };
    let (p11, p21) = vec_for(mu);
    let (p12, p22) = vec_for(nu);
    let det_p = p11 * p22 - p12 * p21;
    // P^-1 m P, keep the diagonal
    let mp11 = m.a * p11 + m.b * p21;
    let mp21 = m.c * p11 + m.d * p21;
    let mp12 = m.a * p12 + m.b * p22;
    let mp22 = m.c * p12 + m.d * p22;
    let d1 = (p22 * mp11 - p12 * mp21) / det_p;
    let d2 = (-p21 * mp12 + p11 * mp22) / det_p;
    // Ad(diag(d1, d2)) on the upper nilpotent line scales by d1 / d2
    let ad = d1 / d2;
    let half_len = d1.abs().ln();
    Ok((-half_len).exp() * (ad - 1.0).abs())
}
