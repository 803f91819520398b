//! Finite-dimensional complex representations of the surface group, given
//! by the images of `a1, b1, a2, b2`.

use std::path::Path;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::group::surface_relator;
use crate::fuchsian::{ConjugacyClass, Word};

pub const DEFAULT_REP_TOL: f64 = 1e-8;
const MIN_ABS_DET: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e12;

pub type CMat = Mat<c64>;

/// Max-entry norm of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

fn identity(d: usize) -> CMat {
    Mat::from_fn(d, d, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

fn inverse(m: &CMat) -> CMat {
    m.partial_piv_lu().inverse()
}

#[derive(Clone, Debug)]
pub struct Representation {
    pub dim: usize,
    pub images: [CMat; 4],
    inverses: [CMat; 4],
    pub tol: f64,
    pub relator_residual: f64,
}

/// A point of the rank-one character variety `(C*)^4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacterPoint {
    pub z: [c64; 4],
}

impl CharacterPoint {
    pub fn new(z: [c64; 4]) -> Result<CharacterPoint> {
        if z.iter().any(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invalid("character values must be finite and nonzero".to_string()));
        }
        Ok(CharacterPoint { z })
    }

    /// `(e^{s}, 1, 1, 1)` style point from one complex log on `a1`.
    pub fn first_generator(value: c64) -> Result<CharacterPoint> {
        let one = c64::new(1.0, 0.0);
        CharacterPoint::new([value, one, one, one])
    }
}

pub fn from_generator_images(images: Vec<CMat>, tol: f64) -> Result<Representation> {
    if images.len() != 4 {
        return Err(Error::Invalid(format!("expected 4 generator images, got {}", images.len())));
    }
    let dim = images[0].nrows();
    if dim == 0 || images.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
        return Err(Error::Invalid("generator images must be square of equal dimension".to_string()));
    }
    for (k, m) in images.iter().enumerate() {
        let det = m.as_ref().determinant().norm();
        if !(det >= MIN_ABS_DET) {
            return Err(Error::SingularImage(format!("image of generator {} has |det| = {det:e}", k + 1)));
        }
    }
    let inverses: Vec<CMat> = images.iter().map(inverse).collect();
    let images: [CMat; 4] = images.try_into().expect("length checked");
    let inverses: [CMat; 4] = inverses.try_into().expect("length checked");
    let mut rep = Representation { dim, images, inverses, tol, relator_residual: 0.0 };
    let r = rep.evaluate(&surface_relator());
    rep.relator_residual = max_abs_diff(&r, &identity(dim));
    if !(rep.relator_residual <= tol) {
        return Err(Error::RelatorViolation { residual: rep.relator_residual, tol });
    }
    Ok(rep)
}

pub fn character_rep(p: &CharacterPoint) -> Representation {
    let images: Vec<CMat> = p.z.iter().map(|&z| Mat::from_fn(1, 1, |_, _| z)).collect();
    from_generator_images(images, DEFAULT_REP_TOL).expect("characters satisfy the relator")
}

/// Trivial representation of rank `d`.
pub fn trivial_rep(d: usize) -> Representation {
    from_generator_images(vec![identity(d); 4], DEFAULT_REP_TOL).expect("identity satisfies the relator")
}

impl Representation {
    pub fn image_of_letter(&self, index: u8, inverse: bool) -> &CMat {
        let k = (index - 1) as usize;
        if inverse {
            &self.inverses[k]
        } else {
            &self.images[k]
        }
    }

    /// `rho(w)` as an ordered product of generator images.
    pub fn evaluate(&self, w: &Word) -> CMat {
        let mut acc = identity(self.dim);
        for l in w.letters() {
            acc = &acc * self.image_of_letter(l.index, l.inverse);
        }
        acc
    }

    pub fn trace_of_word(&self, w: &Word) -> c64 {
        let m = self.evaluate(w);
        (0..self.dim).map(|i| m[(i, i)]).sum()
    }

    pub fn trace_on_class(&self, c: &ConjugacyClass) -> c64 {
        self.trace_of_word(&c.rep_word)
    }

    /// `max_g || rho(g)^* rho(g) - I ||_max` over the generators.
    pub fn unitarity_defect(&self) -> f64 {
        let id = identity(self.dim);
        self.images
            .iter()
            .map(|m| max_abs_diff(&(m.adjoint() * m), &id))
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// True when every generator image has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.images
            .iter()
            .all(|m| (0..self.dim).all(|i| (0..self.dim).all(|j| m[(i, j)].im == 0.0)))
    }

    /// Entrywise complex conjugate representation.
    pub fn conjugate_rep(&self) -> Representation {
        let images: Vec<CMat> =
            self.images.iter().map(|m| Mat::from_fn(self.dim, self.dim, |i, j| m[(i, j)].conj())).collect();
        from_generator_images(images, self.tol.max(self.relator_residual * 2.0))
            .expect("conjugation preserves the relator")
    }

    /// `P rho(.) P^-1`.
    pub fn similar_rep(&self, p: &CMat) -> Result<Representation> {
        if p.nrows() != self.dim || p.ncols() != self.dim {
            return Err(Error::Invalid("similarity matrix has the wrong size".to_string()));
        }
        let sv = p.singular_values().map_err(|e| Error::SingularImage(format!("{e:?}")))?;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(smin > 0.0) || smax / smin > MAX_CONDITION {
            return Err(Error::SingularImage(format!("similarity condition estimate {:e}", smax / smin)));
        }
        let pinv = inverse(p);
        let images: Vec<CMat> = self.images.iter().map(|m| p * m * &pinv).collect();
        let cond = smax / smin;
        from_generator_images(images, self.tol.max(self.relator_residual * cond * cond * 4.0))
    }
}

/// JSON form of a representation.
///
/// Either `{"dim": d, "images": [m1, m2, m3, m4], "tol": t}` with each
/// image a row-major array of `[re, im]` pairs, or the character shorthand
/// `{"character": [[re, im], [re, im], [re, im], [re, im]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RepresentationSpec {
    Character {
        character: Vec<[f64; 2]>,
    },
    Images {
        dim: usize,
        images: Vec<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

impl RepresentationSpec {
    pub fn build(&self) -> Result<Representation> {
        match self {
            RepresentationSpec::Character { character } => {
                if character.len() != 4 {
                    return Err(Error::Invalid("character needs 4 values".to_string()));
                }
                let z: Vec<c64> = character.iter().map(|v| c64::new(v[0], v[1])).collect();
                let p = CharacterPoint::new(z.try_into().expect("length checked"))?;
                Ok(character_rep(&p))
            }
            RepresentationSpec::Images { dim, images, tol } => {
                if images.len() != 4 {
                    return Err(Error::Invalid("expected 4 images".to_string()));
                }
                let mut mats = Vec::with_capacity(4);
                for img in images {
                    if img.len() != dim * dim {
                        return Err(Error::Invalid(format!("image needs {} entries", dim * dim)));
                    }
                    mats.push(Mat::from_fn(*dim, *dim, |i, j| {
                        let v = img[i * dim + j];
                        c64::new(v[0], v[1])
                    }));
                }
                from_generator_images(mats, tol.unwrap_or(DEFAULT_REP_TOL))
            }
        }
    }

    pub fn from_json_file(path: &Path) -> Result<RepresentationSpec> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn trivial(dim: usize) -> RepresentationSpec {
        let mut id = vec![[0.0, 0.0]; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = [1.0, 0.0];
        }
        RepresentationSpec::Images { dim, images: vec![id; 4], tol: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn trivial_rank_three() {
        let r = trivial_rep(3);
        assert_eq!(r.dim, 3);
        assert_eq!(r.unitarity_defect(), 0.0);
        let w = Word::from_pairs(&[(1, 1), (4, -1), (2, 1)]);
        assert!((r.trace_of_word(&w) - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_images_satisfy_relator() {
        let one = c(1.0, 0.0);
        let p = CharacterPoint::new([c(2.0, 0.0), one, one, one]).unwrap();
        let r = character_rep(&p);
        assert_eq!(r.relator_residual, 0.0);
        let cube = Word::from_pairs(&[(1, 1), (1, 1), (1, 1)]);
        assert!((r.trace_of_word(&cube) - c(8.0, 0.0)).norm() < 1e-14);
        let sq = Word::from_pairs(&[(1, 1), (1, 1)]);
        assert!((r.trace_of_word(&sq) - c(4.0, 0.0)).norm() < 1e-14);
        // 2* 2 = 4, defect |4 - 1| = 3
        assert!((r.unitarity_defect() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_character_has_no_defect() {
        let p = CharacterPoint::first_generator(c64::from_polar(1.0, 0.7)).unwrap();
        let r = character_rep(&p);
        assert!(r.unitarity_defect() <= 1e-15);
        // conjugate of a unitary character is its inverse
        let conj = r.conjugate_rep();
        let w = Word::from_pairs(&[(1, 1), (2, -1)]);
        assert!((conj.trace_of_word(&w) - r.trace_of_word(&w.inverse())).norm() < 1e-15);
    }

    #[test]
    fn relator_violation_detected() {
        let a = Mat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64 + 1.0, 0.0));
        let b = Mat::from_fn(2, 2, |i, j| c(if i == j { 1.0 } else { 0.1 }, 0.0));
        let id = identity(2);
        let res = from_generator_images(vec![a, b, id.clone(), id], 1e-8);
        assert!(matches!(res, Err(Error::RelatorViolation { .. })));
    }

    #[test]
    fn singular_image_rejected() {
        let z = Mat::from_fn(2, 2, |_, _| c(1.0, 0.0));
        let id = identity(2);
        let res = from_generator_images(vec![z, id.clone(), id.clone(), id], 1e-8);
        assert!(matches!(res, Err(Error::SingularImage(_))));
    }

    #[test]
    fn similar_rep_identity_is_noop() {
        let p = CharacterPoint::first_generator(c(1.5, 0.2)).unwrap();
        let r = character_rep(&p);
        let s = r.similar_rep(&identity(1)).unwrap();
        for k in 0..4 {
            assert!(max_abs_diff(&s.images[k], &r.images[k]) == 0.0);
        }
        let bad = Mat::from_fn(2, 2, |i, j| c(1.0 + (i * j) as f64 * 1e-14, 0.0));
        assert!(matches!(trivial_rep(2).similar_rep(&bad), Err(Error::SingularImage(_))));
    }

    #[test]
    fn json_forms() {
        let spec: RepresentationSpec =
            serde_json::from_str(r#"{"character": [[2,0],[1,0],[1,0],[1,0]]}"#).unwrap();
        assert_eq!(spec.build().unwrap().dim, 1);
        let spec: RepresentationSpec = serde_json::from_str(
            r#"{"dim": 1, "images": [[[1,0]],[[0,1]],[[1,0]],[[1,0]]], "tol": 1e-9}"#,
        )
        .unwrap();
        let r = spec.build().unwrap();
        assert_eq!(r.tol, 1e-9);
        assert!(RepresentationSpec::trivial(2).build().unwrap().unitarity_defect() == 0.0);
    }
}
