use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fuchsian::mat2::Mat2;
use crate::fuchsian::word::{Letter, Word};

/// Default tolerance for the relator check of the preset.
pub const PRESET_TOL: f64 = 1e-10;

/// Geometry of a regular hyperbolic polygon used as fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolygonGeometry {
    pub sides: usize,
    pub interior_angle: f64,
    /// Hyperbolic distance centre -> corner.
    pub circumradius: f64,
    /// Hyperbolic distance centre -> side midpoint.
    pub inradius: f64,
}

impl PolygonGeometry {
    /// Regular `n`-gon with all interior angles `alpha`, from the right
    /// triangle (centre, side midpoint, corner).
    pub fn regular(n: usize, alpha: f64) -> PolygonGeometry {
        let half_centre = PI / n as f64;
        let half_corner = 0.5 * alpha;
        // cosh R = cot(A) cot(B), cosh r = cos(B) / sin(A)
        let cosh_r_circ = 1.0 / (half_centre.tan() * half_corner.tan());
        let cosh_r_in = half_corner.cos() / half_centre.sin();
        PolygonGeometry {
            sides: n,
            interior_angle: alpha,
            circumradius: cosh_r_circ.acosh(),
            inradius: cosh_r_in.acosh(),
        }
    }

    /// Euclidean radius of the corners in the Poincaré disk.
    pub fn corner_radius_disk(&self) -> f64 {
        (0.5 * self.circumradius).tanh()
    }

    /// Polar angle of corner `j` in the disk; side `j` runs from corner
    /// `j` to corner `j + 1` and is centred at angle `(j + 1) * 2 pi / n`.
    pub fn corner_angle(&self, j: usize) -> f64 {
        let step = 2.0 * PI / self.sides as f64;
        0.5 * step + step * (j % self.sides) as f64
    }
}

/// Side pairing of the fundamental polygon: maps the side centred at
/// polar angle `angle + pi` onto the side centred at `angle`.
#[derive(Clone, Debug, PartialEq)]
pub struct SidePairing {
    pub matrix: Mat2,
    /// The same element as a word in `a1, b1, a2, b2`.
    pub word: Word,
    pub angle: f64,
}

/// Cocompact genus-2 Fuchsian group given by four generators
/// `a1, b1, a2, b2` with the single relation `[a1,b1][a2,b2] = 1`.
#[derive(Clone, Debug)]
pub struct SurfaceGroup {
    pub name: String,
    pub genus: u32,
    pub generators: [Mat2; 4],
    pub relator: Word,
    pub covolume: f64,
    pub tol: f64,
    pub side_pairings: Vec<SidePairing>,
    pub polygon: PolygonGeometry,
}

pub fn surface_relator() -> Word {
    Word::from_pairs(&[(1, 1), (2, 1), (1, -1), (2, -1), (3, 1), (4, 1), (3, -1), (4, -1)])
}

/// The Bolza surface: regular octagon with interior angles pi/4 and
/// opposite sides identified.
///
/// The opposite-side pairings `x_k = R(k pi/4) T R(-k pi/4)` satisfy
/// `x0 x1^-1 x2 x3^-1 x0^-1 x1 x2^-1 x3 = 1`; the symplectic generators are
/// `a1 = x0`, `b1 = x1`, `a2 = x1 x3^-1 x0^-1`, `b2 = x0 x2 x1^-1`.
pub fn bolza_preset() -> SurfaceGroup {
    let polygon = PolygonGeometry::regular(8, PI / 4.0);
    let t = Mat2::translation(2.0 * polygon.inradius);
    let x: Vec<Mat2> = (0..4)
        .map(|k| {
            let r = Mat2::rotation(k as f64 * PI / 4.0);
            r * t * r.inverse()
        })
        .collect();
    let a1 = x[0];
    let b1 = x[1];
    let a2 = x[1] * x[3].inverse() * x[0].inverse();
    let b2 = x[0] * x[2] * x[1].inverse();
    let words = [
        Word::from_pairs(&[(1, 1)]),
        Word::from_pairs(&[(2, 1)]),
        Word::from_pairs(&[(1, -1), (4, 1), (2, 1)]),
        Word::from_pairs(&[(1, -1), (3, -1), (2, 1)]),
    ];
    let side_pairings = x
        .iter()
        .zip(words)
        .enumerate()
        .map(|(k, (&matrix, word))| SidePairing { matrix, word, angle: k as f64 * PI / 4.0 })
        .collect();
    let g = SurfaceGroup {
        name: "bolza".to_string(),
        genus: 2,
        generators: [a1, b1, a2, b2],
        relator: surface_relator(),
        covolume: 4.0 * PI * (2.0 - 1.0),
        tol: PRESET_TOL,
        side_pairings,
        polygon,
    };
    let residual = g.relator_residual();
    assert!(residual <= g.tol, "Bolza relator residual {residual:e} exceeds {:e}", g.tol);
    for sp in &g.side_pairings {
        let via_word = g.evaluate_word(&sp.word);
        assert!(via_word.approx_eq(&sp.matrix, 1e-10), "side pairing word mismatch");
    }
    g
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<SurfaceGroup> {
    match name {
        "bolza" => Ok(bolza_preset()),
        other => Err(Error::Invalid(format!("unknown group preset {other:?}"))),
    }
}

impl SurfaceGroup {
    pub fn letter_matrix(&self, l: Letter) -> Mat2 {
        let m = self.generators[(l.index - 1) as usize];
        if l.inverse {
            m.inverse()
        } else {
            m
        }
    }

    pub fn evaluate_word(&self, w: &Word) -> Mat2 {
        w.letters().iter().fold(Mat2::IDENTITY, |acc, &l| acc * self.letter_matrix(l))
    }

    /// Distance of the evaluated relator from the identity in PSL(2, R).
    pub fn relator_residual(&self) -> f64 {
        self.evaluate_word(&self.relator).psl_distance(&Mat2::IDENTITY)
    }

    /// The 8 moves across the polygon sides: each side pairing and its
    /// inverse, as `(matrix, word)`.
    pub fn side_moves(&self) -> Vec<(Mat2, Word)> {
        let mut moves = Vec::with_capacity(2 * self.side_pairings.len());
        for sp in &self.side_pairings {
            moves.push((sp.matrix, sp.word.clone()));
            moves.push((sp.matrix.inverse(), sp.word.inverse()));
        }
        moves
    }
}
