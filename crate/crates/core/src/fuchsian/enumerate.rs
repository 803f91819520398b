//! Enumeration of hyperbolic conjugacy classes below a length cutoff.
//!
//! Every class of length `l <= L` has a representative whose axis passes
//! within the circumradius `R` of the polygon centre `o`, so such a
//! representative moves `o` by at most `L + 2R`. A breadth-first walk over
//! the tiling (one step = crossing a polygon side) restricted to
//! displacement `<= L + 3R` reaches every element of that ball.
//!
//! Canonical form of a class: among all conjugates, those whose axis is
//! closest to `o`, i.e. those of minimal Frobenius norm
//! (`sinh(d(o, c o) / 2) = cosh(dist(o, axis)) sinh(l / 2)`); ties are
//! broken lexicographically on the matrix entries. The canonical conjugate
//! itself lies in the ball, and its ball index is the exact dedup key.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fuchsian::group::SurfaceGroup;
use crate::fuchsian::mat2::{hyperbolic_length, uhp_distance, Mat2};
use crate::fuchsian::word::Word;

/// Largest accepted cutoff.
pub const MAX_CUTOFF: f64 = 12.0;

/// Default cap on the number of group elements held in the orbit ball.
pub const DEFAULT_ELEMENT_BUDGET: usize = 4_000_000;

/// Relative tolerance for all geometric comparisons.
pub const GEOM_TOL: f64 = 1e-9;

/// Absolute matrix-entry tolerance for identifying group elements. Distinct
/// elements inside any admissible ball differ by far more than this.
const ELEMENT_TOL: f64 = 1e-7;
const BUCKET: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyClass {
    pub rep_word: Word,
    pub rep_matrix: Mat2,
    pub trace: f64,
    pub length: f64,
    /// Primitive root; `None` when the class was read back from a cache
    /// file, which does not store it.
    pub primitive_word: Option<Word>,
    pub primitive_length: f64,
    pub power: u32,
    pub discriminant: f64,
}

impl ConjugacyClass {
    /// Class data derived from a representative; power 1 until the
    /// primitive decomposition says otherwise.
    pub fn from_representative(rep_word: Word, rep_matrix: Mat2) -> Result<ConjugacyClass> {
        let length = hyperbolic_length(&rep_matrix)?;
        Ok(ConjugacyClass {
            primitive_word: Some(rep_word.clone()),
            rep_word,
            rep_matrix,
            trace: rep_matrix.trace(),
            length,
            primitive_length: length,
            power: 1,
            discriminant: 2.0 * (0.5 * length).sinh(),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnumerationOptions {
    pub l_max: f64,
    pub element_budget: usize,
}

impl EnumerationOptions {
    pub fn new(l_max: f64) -> EnumerationOptions {
        EnumerationOptions { l_max, element_budget: DEFAULT_ELEMENT_BUDGET }
    }
}

#[derive(Clone, Copy, Debug)]
struct BallElement {
    matrix: Mat2,
    displacement: f64,
    parent: u32,
    step: u8,
}

/// All group elements moving the polygon centre by at most `radius`,
/// discovered breadth-first across polygon sides.
#[derive(Debug)]
pub struct OrbitBall {
    elements: Vec<BallElement>,
    by_displacement: Vec<u32>,
    sorted_displacements: Vec<f64>,
    index: HashMap<i64, Vec<u32>>,
    moves: Vec<(Mat2, Word)>,
    pub radius: f64,
}

fn bucket_of(m: &Mat2) -> i64 {
    (m.a.abs() / BUCKET).floor() as i64
}

fn same_element(x: &Mat2, y: &Mat2) -> bool {
    x.psl_distance(y) <= ELEMENT_TOL
}

/// Area-based estimate of the number of orbit points in a ball.
pub fn projected_ball_size(radius: f64, covolume: f64) -> f64 {
    2.0 * std::f64::consts::PI * (radius.cosh() - 1.0) / covolume + 1.0
}

impl OrbitBall {
    pub fn build(g: &SurfaceGroup, radius: f64, budget: usize) -> Result<OrbitBall> {
        let moves = g.side_moves();
        let mut ball = OrbitBall {
            elements: vec![BallElement {
                matrix: Mat2::IDENTITY,
                displacement: 0.0,
                parent: u32::MAX,
                step: u8::MAX,
            }],
            by_displacement: Vec::new(),
            sorted_displacements: Vec::new(),
            index: HashMap::new(),
            moves,
            radius,
        };
        ball.index.entry(bucket_of(&Mat2::IDENTITY)).or_default().push(0);
        let limit = radius * (1.0 + GEOM_TOL) + GEOM_TOL;
        let mut head = 0usize;
        while head < ball.elements.len() {
            let current = ball.elements[head];
            for (step, (mv, _)) in ball.moves.iter().enumerate() {
                let next = current.matrix * *mv;
                let disp = next.displacement();
                if disp > limit || ball.find(&next).is_some() {
                    continue;
                }
                let idx = ball.elements.len() as u32;
                ball.elements.push(BallElement {
                    matrix: next,
                    displacement: disp,
                    parent: head as u32,
                    step: step as u8,
                });
                ball.index.entry(bucket_of(&next)).or_default().push(idx);
            }
            if ball.elements.len() > budget {
                return Err(Error::CutoffTooLarge {
                    l_max: radius,
                    projected: ball.elements.len() as f64,
                    budget,
                });
            }
            head += 1;
        }
        let mut order: Vec<u32> = (0..ball.elements.len() as u32).collect();
        order.sort_by(|&x, &y| {
            let (ex, ey) = (&ball.elements[x as usize], &ball.elements[y as usize]);
            ex.displacement.total_cmp(&ey.displacement).then(x.cmp(&y))
        });
        ball.sorted_displacements = order.iter().map(|&i| ball.elements[i as usize].displacement).collect();
        ball.by_displacement = order;
        Ok(ball)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn matrix(&self, idx: usize) -> Mat2 {
        self.elements[idx].matrix
    }

    pub fn displacement(&self, idx: usize) -> f64 {
        self.elements[idx].displacement
    }

    /// Index of the ball element equal (in PSL) to `m`.
    pub fn find(&self, m: &Mat2) -> Option<usize> {
        let b = bucket_of(m);
        for key in [b - 1, b, b + 1] {
            if let Some(list) = self.index.get(&key) {
                for &i in list {
                    if same_element(&self.elements[i as usize].matrix, m) {
                        return Some(i as usize);
                    }
                }
            }
        }
        None
    }

    /// Word of the breadth-first path to element `idx`.
    pub fn word(&self, idx: usize) -> Word {
        let mut steps = Vec::new();
        let mut cur = idx;
        while self.elements[cur].parent != u32::MAX {
            steps.push(self.elements[cur].step as usize);
            cur = self.elements[cur].parent as usize;
        }
        steps.iter().rev().fold(Word::empty(), |w, &s| w.concat(&self.moves[s].1))
    }

    /// Elements with displacement at most `r`, in increasing displacement.
    fn within(&self, r: f64) -> &[u32] {
        let n = self.sorted_displacements.partition_point(|&d| d <= r);
        &self.by_displacement[..n]
    }

    /// Iterates over all elements (index, matrix) in breadth-first order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Mat2)> + '_ {
        self.elements.iter().enumerate().map(|(i, e)| (i, e.matrix))
    }
}

/// Distance from `o = i` to the axis of a hyperbolic element, from its
/// displacement and translation length.
fn axis_distance(m: &Mat2, length: f64) -> f64 {
    let ratio = (0.5 * m.displacement()).sinh() / (0.5 * length).sinh();
    ratio.max(1.0).acosh()
}

fn lex_less(x: &Mat2, y: &Mat2) -> bool {
    let scale = 1.0 + x.max_abs().max(y.max_abs());
    for (p, q) in x.entries().iter().zip(y.entries()) {
        if (p - q).abs() > GEOM_TOL * scale {
            return *p < q;
        }
    }
    false
}

/// Finds canonical class representatives using an orbit ball.
#[derive(Clone, Debug)]
pub struct ClassCanonicalizer {
    ball: Arc<OrbitBall>,
    circumradius: f64,
    moves: Vec<(Mat2, Word)>,
    /// Largest translation length the ball supports.
    pub max_length: f64,
}

/// Canonical representative of a class: ball index and matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalForm {
    pub index: usize,
    pub matrix: Mat2,
}

impl ClassCanonicalizer {
    pub fn new(g: &SurfaceGroup, max_length: f64, budget: usize) -> Result<ClassCanonicalizer> {
        let circumradius = g.polygon.circumradius;
        let radius = max_length + 3.0 * circumradius;
        let projected = projected_ball_size(radius, g.covolume);
        if projected > budget as f64 {
            return Err(Error::CutoffTooLarge { l_max: max_length, projected, budget });
        }
        let ball = OrbitBall::build(g, radius, budget)?;
        Ok(ClassCanonicalizer { ball: Arc::new(ball), circumradius, moves: g.side_moves(), max_length })
    }

    pub fn ball(&self) -> &OrbitBall {
        &self.ball
    }

    /// Canonical form of an element whose axis is already within the
    /// circumradius of `o`.
    fn canonical_near(&self, m: &Mat2, length: f64) -> Option<CanonicalForm> {
        let delta0 = axis_distance(m, length);
        let reach = (delta0 + length + self.circumradius) * (1.0 + GEOM_TOL) + GEOM_TOL;
        let mut best: Vec<Mat2> = Vec::new();
        let mut best_f = f64::INFINITY;
        for &h in self.ball.within(reach) {
            let hm = self.ball.matrix(h as usize);
            let c = hm.inverse() * *m * hm;
            let f = c.frob2();
            if f < best_f * (1.0 - GEOM_TOL) {
                best_f = f;
                best.clear();
                best.push(c);
            } else if f <= best_f * (1.0 + GEOM_TOL) {
                best.push(c);
            }
        }
        let mut pick = *best.first()?;
        for c in &best[1..] {
            if lex_less(c, &pick) {
                pick = *c;
            }
        }
        let index = self.ball.find(&pick)?;
        Some(CanonicalForm { index, matrix: self.ball.matrix(index) })
    }

    /// Canonical form of an arbitrary hyperbolic element with length up to
    /// `max_length`. `None` if the element is not hyperbolic, too long, or
    /// (which would indicate a bug) the representative is not found.
    pub fn canonicalize(&self, m: &Mat2) -> Option<CanonicalForm> {
        let length = hyperbolic_length(m).ok()?;
        if length > self.max_length * (1.0 + GEOM_TOL) + GEOM_TOL {
            return None;
        }
        let h = self.reduce_axis(m, length);
        let moved = h * *m * h.inverse();
        self.canonical_near(&moved, length)
    }

    /// Group element `h` such that the axis of `h m h^-1` passes through
    /// the fundamental polygon.
    fn reduce_axis(&self, m: &Mat2, length: f64) -> Mat2 {
        if axis_distance(m, length) <= self.circumradius {
            return Mat2::IDENTITY;
        }
        let o = Complex64::new(0.0, 1.0);
        let mut p = axis_foot_point(m);
        let mut acc = Mat2::IDENTITY;
        for _ in 0..10_000 {
            let here = uhp_distance(p, o);
            let mut best: Option<(f64, Mat2)> = None;
            for (mv, _) in &self.moves {
                let q = mv.apply(p);
                let dq = uhp_distance(q, o);
                if dq < here - 1e-12 && best.map_or(true, |(d, _)| dq < d) {
                    best = Some((dq, *mv));
                }
            }
            match best {
                Some((_, mv)) => {
                    p = mv.apply(p);
                    acc = mv * acc;
                }
                None => break,
            }
        }
        acc
    }
}

/// Point of the axis of `m` closest to `i`.
pub fn axis_foot_point(m: &Mat2) -> Complex64 {
    let (att, rep) = m.fixed_points();
    match (att, rep) {
        (Some(x1), Some(x2)) => {
            // Möbius map sending x1 -> 0, x2 -> infinity; the axis becomes
            // the imaginary axis where the foot point of w is i|w|.
            let to = |z: Complex64| (z - x1) / (z - x2);
            let w = to(Complex64::new(0.0, 1.0));
            let foot = Complex64::new(0.0, w.norm() * w.im.signum());
            // inverse of z -> (z - x1)/(z - x2)
            (foot * x2 - x1) / (foot - 1.0)
        }
        (Some(x), None) | (None, Some(x)) => Complex64::new(x, (1.0 + x * x).sqrt()),
        (None, None) => Complex64::new(0.0, 1.0),
    }
}

/// Result of an enumeration together with the machinery that produced it.
#[derive(Clone, Debug)]
pub struct LengthSpectrum {
    pub l_max: f64,
    pub classes: Vec<ConjugacyClass>,
    pub canonicalizer: ClassCanonicalizer,
}

fn validate_cutoff(l_max: f64) -> Result<()> {
    if !(l_max > 0.0 && l_max <= MAX_CUTOFF) {
        return Err(Error::CutoffOutOfRange { l_max, max: MAX_CUTOFF });
    }
    Ok(())
}

/// Conjugacy classes `{gamma} != {e}` with `l(gamma) <= l_max`, one entry
/// per class, sorted by (length, trace, word).
pub fn enumerate_classes(g: &SurfaceGroup, l_max: f64) -> Result<Vec<ConjugacyClass>> {
    Ok(enumerate_with(g, EnumerationOptions::new(l_max))?.classes)
}

pub fn enumerate_with(g: &SurfaceGroup, opts: EnumerationOptions) -> Result<LengthSpectrum> {
    validate_cutoff(opts.l_max)?;
    let canon = ClassCanonicalizer::new(g, opts.l_max, opts.element_budget)?;
    let ball = canon.ball();
    let l_lim = opts.l_max * (1.0 + GEOM_TOL) + GEOM_TOL;
    let r_lim = canon.circumradius * (1.0 + GEOM_TOL) + GEOM_TOL;

    let candidates: Vec<(Mat2, f64)> = ball
        .iter()
        .filter_map(|(_, m)| {
            let l = hyperbolic_length(&m).ok()?;
            (l <= l_lim && axis_distance(&m, l) <= r_lim).then_some((m, l))
        })
        .collect();

    let found: Vec<Option<usize>> =
        candidates.par_iter().map(|(m, l)| canon.canonical_near(m, *l).map(|c| c.index)).collect();
    let mut keys: Vec<usize> = Vec::with_capacity(found.len());
    for f in found {
        keys.push(f.ok_or_else(|| {
            Error::Invalid("canonical representative missing from orbit ball".to_string())
        })?);
    }
    keys.sort_unstable();
    keys.dedup();

    let mut classes: Vec<ConjugacyClass> = keys
        .iter()
        .map(|&k| ConjugacyClass::from_representative(ball.word(k), ball.matrix(k)))
        .collect::<Result<_>>()?;
    sort_classes(&mut classes);
    assign_primitive_roots(&canon, &mut classes);
    Ok(LengthSpectrum { l_max: opts.l_max, classes, canonicalizer: canon })
}

fn lengths_close(x: f64, y: f64) -> bool {
    (x - y).abs() <= GEOM_TOL * (1.0 + x.abs().max(y.abs()))
}

/// Sorts by length; runs of equal length (within tolerance) are ordered by
/// trace and then shortlex word.
pub fn sort_classes(classes: &mut [ConjugacyClass]) {
    classes.sort_by(|x, y| x.length.total_cmp(&y.length));
    let mut start = 0;
    while start < classes.len() {
        let mut end = start + 1;
        while end < classes.len() && lengths_close(classes[end - 1].length, classes[end].length) {
            end += 1;
        }
        classes[start..end].sort_by(|x, y| {
            let scale = 1.0 + x.trace.abs();
            if (x.trace - y.trace).abs() > GEOM_TOL * scale {
                x.trace.total_cmp(&y.trace)
            } else {
                x.rep_word.cmp(&y.rep_word)
            }
        });
        start = end;
    }
}

fn assign_primitive_roots(canon: &ClassCanonicalizer, classes: &mut [ConjugacyClass]) {
    let decomps: Vec<(Option<Word>, u32)> =
        classes.par_iter().map(|c| primitive_root(canon, c, classes)).collect();
    for (c, (w, k)) in classes.iter_mut().zip(decomps) {
        c.power = k;
        c.primitive_length = c.length / k as f64;
        c.primitive_word = w;
    }
}

/// Largest `k` such that some listed class `c0` of length `l / k` has
/// `c0^k` conjugate to `c`; returns that root's word and `k`.
fn primitive_root(
    canon: &ClassCanonicalizer,
    c: &ConjugacyClass,
    classes: &[ConjugacyClass],
) -> (Option<Word>, u32) {
    let shortest = classes.iter().map(|x| x.length).fold(f64::INFINITY, f64::min);
    if !shortest.is_finite() {
        return (Some(c.rep_word.clone()), 1);
    }
    let Some(target) = canon.canonicalize(&c.rep_matrix) else {
        return (Some(c.rep_word.clone()), 1);
    };
    let kmax = ((c.length / shortest) * (1.0 + GEOM_TOL)).floor() as u32;
    for k in (2..=kmax).rev() {
        let root_len = c.length / k as f64;
        for c0 in classes.iter().filter(|x| lengths_close(x.length, root_len)) {
            let power = c0.rep_matrix.pow(k);
            if let Some(pc) = canon.canonicalize(&power) {
                if pc.index == target.index {
                    return (Some(c0.rep_word.clone()), k);
                }
            }
        }
    }
    (Some(c.rep_word.clone()), 1)
}

/// Primitive decomposition of one class against a list containing every
/// class of length up to `c.length`.
pub fn primitive_decomposition(
    g: &SurfaceGroup,
    c: &ConjugacyClass,
    classes: &[ConjugacyClass],
) -> Result<(Word, u32)> {
    let canon = ClassCanonicalizer::new(g, c.length.max(1e-3), DEFAULT_ELEMENT_BUDGET)?;
    let (w, k) = primitive_root(&canon, c, classes);
    Ok((w.unwrap_or_else(|| c.rep_word.clone()), k))
}
