//! Brute-force conjugacy oracle for the Bolza group, independent of the
//! library's enumerator.
//!
//! Elements come from a breadth-first walk over words in the eight
//! side pairings (built here from the closed form, not taken from the
//! preset), kept while their displacement of `i` stays small. Classes are
//! connected components of "conjugate by a short element" among the
//! hyperbolic elements whose axis passes within the circumradius of `i`.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use twisted_trace::fuchsian::Mat2;

/// `2 arccosh(1 + sqrt 2)`.
pub fn bolza_systole() -> f64 {
    2.0 * (1.0 + 2f64.sqrt()).acosh()
}

/// Circumradius of the regular octagon with angles pi/4: `cosh R = cot^2(pi/8)`.
pub fn circumradius() -> f64 {
    let cot = 1.0 / (PI / 8.0).tan();
    (cot * cot).acosh()
}

/// Opposite-side pairings and their inverses.
pub fn side_pairings() -> Vec<Mat2> {
    let t = Mat2::translation(bolza_systole());
    let mut out = Vec::new();
    for k in 0..4 {
        let r = Mat2::rotation(k as f64 * PI / 4.0);
        let x = r * t * r.inverse();
        out.push(x);
        out.push(x.inverse());
    }
    out
}

pub fn length(m: &Mat2) -> f64 {
    2.0 * (0.5 * m.trace().abs()).acosh()
}

/// Distance from `i` to the axis: `sinh(d(i, g i)/2) = cosh(delta) sinh(l/2)`.
pub fn axis_distance(m: &Mat2) -> f64 {
    let l = length(m);
    ((0.5 * m.displacement()).sinh() / (0.5 * l).sinh()).max(1.0).acosh()
}

const KEY_SCALE: f64 = 1e4;

/// Elements stored with a sign-blind coarse key; lookups scan neighbouring
/// buckets and confirm with the exact PSL distance.
#[derive(Default)]
pub struct ElementSet {
    pub elements: Vec<Mat2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl ElementSet {
    fn key(m: &Mat2) -> (i64, i64) {
        ((m.a.abs() * KEY_SCALE).round() as i64, (m.b.abs() * KEY_SCALE).round() as i64)
    }

    pub fn find(&self, m: &Mat2) -> Option<usize> {
        let (ka, kb) = Self::key(m);
        for da in -1..=1 {
            for db in -1..=1 {
                if let Some(v) = self.buckets.get(&(ka + da, kb + db)) {
                    for &i in v {
                        if self.elements[i].approx_eq(m, 1e-8) {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    pub fn insert(&mut self, m: Mat2) -> (usize, bool) {
        if let Some(i) = self.find(&m) {
            return (i, false);
        }
        let i = self.elements.len();
        self.buckets.entry(Self::key(&m)).or_default().push(i);
        self.elements.push(m);
        (i, true)
    }
}

/// Every element with `d(i, g i) <= radius`. Tiles met by the segment from
/// `i` to `g i` all sit within `radius + R`, so expanding those is enough.
pub fn ball(radius: f64) -> ElementSet {
    let gens = side_pairings();
    let expand = radius + circumradius() + 1e-6;
    let mut set = ElementSet::default();
    set.insert(Mat2::IDENTITY);
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &i in &frontier {
            let g = set.elements[i];
            for s in &gens {
                let h = g * *s;
                if h.displacement() > expand {
                    continue;
                }
                let (j, new) = set.insert(h);
                if new {
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    let mut out = ElementSet::default();
    for m in set.elements {
        if m.displacement() <= radius {
            out.insert(m);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct OracleClass {
    pub length: f64,
    pub power: u32,
    /// A member with axis near `i`.
    pub member: Mat2,
}

pub struct ConjugacyOracle {
    pub classes: Vec<OracleClass>,
    /// Near-axis hyperbolic elements, and the class of each.
    near: ElementSet,
    class_of: Vec<usize>,
    ball: ElementSet,
}

fn find(p: &mut [usize], mut i: usize) -> usize {
    while p[i] != i {
        p[i] = p[p[i]];
        i = p[i];
    }
    i
}

impl ConjugacyOracle {
    /// Classes with length `<= l_max`; `extra_radius` enlarges the ball for
    /// later [`class_index`](Self::class_index) queries.
    pub fn new(l_max: f64, extra_radius: f64) -> ConjugacyOracle {
        let r = circumradius();
        // axis within R and length <= l_max bounds the displacement
        let near_disp = 2.0 * (r.cosh() * (0.5 * l_max).sinh()).asinh();
        let conj_radius = 2.0 * r + 0.5 * l_max;
        let ball = ball(near_disp.max(conj_radius).max(extra_radius) + 1e-6);

        let mut near = ElementSet::default();
        for m in &ball.elements {
            if m.trace().abs() > 2.0 + 1e-9 && length(m) <= l_max * (1.0 + 1e-12) && axis_distance(m) <= r + 1e-9 {
                near.insert(*m);
            }
        }
        let conjugators: Vec<Mat2> =
            ball.elements.iter().copied().filter(|h| h.displacement() <= conj_radius + 1e-6).collect();
        let n = near.elements.len();
        let mut parent: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let g = near.elements[i];
            for h in &conjugators {
                if let Some(j) = near.find(&h.conjugate(&g)) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut root_to_class = HashMap::new();
        let mut classes = Vec::new();
        let mut class_of = vec![0; n];
        for i in 0..n {
            let root = find(&mut parent, i);
            let id = *root_to_class.entry(root).or_insert_with(|| {
                let m = near.elements[i];
                classes.push(OracleClass { length: length(&m), power: 1, member: m });
                classes.len() - 1
            });
            class_of[i] = id;
        }
        // powers: a k-th root shares the axis, so it lives in the same ball
        let systole = classes.iter().map(|c| c.length).fold(f64::INFINITY, f64::min);
        for c in classes.iter_mut() {
            let kmax = (c.length / systole + 1e-9).floor() as u32;
            for k in (2..=kmax).rev() {
                let root = ball.elements.iter().find(|x| {
                    x.trace().abs() > 2.0 && (length(x) * k as f64 - c.length).abs() < 1e-8 && x.pow(k).approx_eq(&c.member, 1e-8)
                });
                if root.is_some() {
                    c.power = k;
                    break;
                }
            }
        }
        ConjugacyOracle { classes, near, class_of, ball }
    }

    /// Oracle class containing `m`, found by conjugating into the near-axis
    /// set with elements of the stored ball.
    pub fn class_index(&self, m: &Mat2) -> Option<usize> {
        if let Some(i) = self.near.find(m) {
            return Some(self.class_of[i]);
        }
        for h in &self.ball.elements {
            if let Some(i) = self.near.find(&h.conjugate(m)) {
                return Some(self.class_of[i]);
            }
        }
        None
    }
}
