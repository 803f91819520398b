//! P1 finite elements for the twisted Laplacian on the octagon.
//!
//! Interior operator is the plain hyperbolic Laplacian; the twist enters
//! only through the gluing. A node `n` on an image side or at a corner is
//! slaved to a free node `f(n)` by `u(n) = W_n u(f(n))`, with `W_n` the
//! representation of the pairing element carrying `f(n)` to `n`. Test
//! functions are glued with `W_n^{-*}` so the sesquilinear forms descend to
//! the quotient; the blocks are therefore `k_ab W_a^{-1} W_b`, which are
//! Hermitian exactly when the twist is unitary.

use std::collections::{HashMap, VecDeque};

use faer::linalg::solvers::DenseSolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fuchsian::SurfaceGroup;
use crate::reps::{max_abs_diff, CMat, Representation};
use crate::spectral::mesh::OctagonMesh;

pub const CORNER_CYCLE_TOL: f64 = 1e-6;
const ASSEMBLY_REP_TOL: f64 = 1e-8;

/// Degree-4 six-point rule on a triangle: (barycentrics, weight).
const TRI_RULE: [([f64; 3], f64); 6] = [
    ([0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771], 0.109_951_743_655_322),
];

/// Square sparse matrix in compressed-row form with sorted columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<c64>,
}

impl CsrMatrix {
    fn from_map(n: usize, map: HashMap<(usize, usize), c64>) -> CsrMatrix {
        let mut entries: Vec<((usize, usize), c64)> = map.into_iter().collect();
        entries.sort_unstable_by_key(|e| e.0);
        let mut row_ptr = vec![0usize; n + 1];
        for ((r, _), _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx: entries.iter().map(|e| e.0 .1).collect(),
            vals: entries.iter().map(|e| e.1).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col_idx[p], self.vals[p]))
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.vals[self.row_ptr[i] + p],
            Err(_) => c64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[c64], y: &mut [c64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    /// `max |A - A^*|` over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d = d.max((v - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn to_dense_real(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v.re;
            }
        }
        m
    }

    pub fn to_faer(&self) -> SparseColMat<usize, c64> {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip).expect("valid sparse pattern")
    }
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    /// Fiber dimension.
    pub d: usize,
    /// Free nodes after eliminating the slaved ones.
    pub free_nodes: usize,
    /// Degrees of freedom, `free_nodes * d`.
    pub n_free: usize,
    pub real: bool,
    pub unitary: bool,
    /// `max |K_ij|`, the reference scale for residuals.
    pub k_scale: f64,
    pub corner_deviation: f64,
    /// Largest hyperbolic edge length of the mesh.
    pub mesh_h: f64,
}

/// For each vertex: free node index and the gluing matrix (`None` = Id).
struct NodeMap {
    free: Vec<usize>,
    glue: Vec<Option<CMat>>,
    free_count: usize,
    corner_deviation: f64,
}

fn identity(d: usize) -> CMat {
    Mat::from_fn(d, d, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

fn build_node_map(g: &SurfaceGroup, mesh: &OctagonMesh, r: &Representation) -> Result<NodeMap> {
    let nv = mesh.vertex_count();
    let d = r.dim;
    let pairing_images: Vec<CMat> = g.side_pairings.iter().map(|sp| r.evaluate(&sp.word)).collect();
    let corner_pos = |v: usize| mesh.corners.iter().position(|&c| c == v);

    // slaved side nodes (corners handled separately)
    let mut master_of: Vec<Option<(usize, usize)>> = vec![None; nv];
    for p in &mesh.boundary_pairing {
        for &(a, b) in &p.nodes {
            if corner_pos(b).is_none() {
                master_of[b] = Some((a, p.generator));
            }
        }
    }

    // corner orbit: u(b) = X_k u(a) along each pairing edge between corners
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for p in &mesh.boundary_pairing {
        for &(a, b) in &p.nodes {
            if let (Some(i), Some(j)) = (corner_pos(a), corner_pos(b)) {
                edges.push((i, j, p.generator));
            }
        }
    }
    let mut corner_glue: Vec<Option<CMat>> = vec![None; 8];
    corner_glue[0] = Some(identity(d));
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        let wc = corner_glue[c].clone().expect("visited");
        for &(i, j, k) in &edges {
            if i == c && corner_glue[j].is_none() {
                corner_glue[j] = Some(&pairing_images[k] * &wc);
                queue.push_back(j);
            } else if j == c && corner_glue[i].is_none() {
                let inv = r.evaluate(&g.side_pairings[k].word.inverse());
                corner_glue[i] = Some(&inv * &wc);
                queue.push_back(i);
            }
        }
    }
    if corner_glue.iter().any(|w| w.is_none()) {
        return Err(Error::Invalid("octagon corners do not form a single orbit".to_string()));
    }
    let mut deviation = 0.0_f64;
    for &(i, j, k) in &edges {
        let wi = corner_glue[i].as_ref().expect("filled");
        let wj = corner_glue[j].as_ref().expect("filled");
        deviation = deviation.max(max_abs_diff(wj, &(&pairing_images[k] * wi)));
    }
    if !(deviation <= CORNER_CYCLE_TOL) {
        return Err(Error::ConstraintCycleInconsistent { deviation });
    }

    let mut free = vec![usize::MAX; nv];
    let mut glue: Vec<Option<CMat>> = vec![None; nv];
    let mut count = 0;
    for v in 0..nv {
        let slaved = master_of[v].is_some() || corner_pos(v).is_some_and(|c| c != 0);
        if !slaved {
            free[v] = count;
            count += 1;
        }
    }
    for v in 0..nv {
        if let Some((a, k)) = master_of[v] {
            // masters are never slaved: image sides and source sides are disjoint
            let fa = if let Some(c) = corner_pos(a) {
                glue[v] = Some(&pairing_images[k] * corner_glue[c].as_ref().expect("filled"));
                free[mesh.corners[0]]
            } else {
                glue[v] = Some(pairing_images[k].clone());
                free[a]
            };
            free[v] = fa;
        } else if let Some(c) = corner_pos(v) {
            free[v] = free[mesh.corners[0]];
            if c != 0 {
                glue[v] = corner_glue[c].clone();
            }
        }
    }
    // identity gluing costs nothing; drop it
    let id = identity(d);
    for w in glue.iter_mut() {
        if w.as_ref().is_some_and(|m| max_abs_diff(m, &id) == 0.0) {
            *w = None;
        }
    }
    Ok(NodeMap { free, glue, free_count: count, corner_deviation: deviation })
}

/// Element stiffness (Euclidean) and hyperbolic mass.
fn element_matrices(p: [num_complex::Complex64; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let area = 0.5 * (e[2].conj() * (-e[1])).im;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (e[i].re * e[j].re + e[i].im * e[j].im) / (4.0 * area);
        }
    }
    let mut m = [[0.0; 3]; 3];
    for (bary, w) in TRI_RULE {
        let z = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
        let s = 1.0 - z.norm_sqr();
        let weight = 4.0 / (s * s) * w * area;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += weight * bary[i] * bary[j];
            }
        }
    }
    (k, m)
}

pub fn assemble(g: &SurfaceGroup, mesh: &OctagonMesh, r: &Representation) -> Result<AssembledSystem> {
    if !(r.relator_residual <= ASSEMBLY_REP_TOL) {
        return Err(Error::RelatorViolation { residual: r.relator_residual, tol: ASSEMBLY_REP_TOL });
    }
    let nm = build_node_map(g, mesh, r)?;
    let d = r.dim;
    let inverses: Vec<Option<CMat>> = nm
        .glue
        .iter()
        .map(|w| w.as_ref().map(|m| m.partial_piv_lu().inverse()))
        .collect::<Vec<_>>();
    let locals: Vec<([[f64; 3]; 3], [[f64; 3]; 3])> = mesh
        .triangles
        .par_iter()
        .map(|t| element_matrices([mesh.point(t[0]), mesh.point(t[1]), mesh.point(t[2])]))
        .collect();

    let n = nm.free_count * d;
    let mut kmap: HashMap<(usize, usize), c64> = HashMap::with_capacity(10 * n);
    let mut mmap: HashMap<(usize, usize), c64> = HashMap::with_capacity(10 * n);
    let id = identity(d);
    for (t, (ke, me)) in mesh.triangles.iter().zip(&locals) {
        for a in 0..3 {
            for b in 0..3 {
                let (va, vb) = (t[a], t[b]);
                let (fa, fb) = (nm.free[va], nm.free[vb]);
                // block = W_a^{-1} W_b
                let block: Option<CMat> = match (&inverses[va], &nm.glue[vb]) {
                    (None, None) => None,
                    (Some(ia), None) => Some(ia.clone()),
                    (None, Some(wb)) => Some(wb.clone()),
                    (Some(ia), Some(wb)) => Some(ia * wb),
                };
                for i in 0..d {
                    for j in 0..d {
                        let bij = match &block {
                            None => id[(i, j)],
                            Some(bm) => bm[(i, j)],
                        };
                        if bij == c64::new(0.0, 0.0) {
                            continue;
                        }
                        let key = (fa * d + i, fb * d + j);
                        *kmap.entry(key).or_default() += bij * ke[a][b];
                        *mmap.entry(key).or_default() += bij * me[a][b];
                    }
                }
            }
        }
    }
    let k = CsrMatrix::from_map(n, kmap);
    let m = CsrMatrix::from_map(n, mmap);
    let real = k.is_real() && m.is_real();
    let unitary = r.unitarity_defect() <= 1e-12;
    Ok(AssembledSystem {
        k_scale: k.max_abs(),
        k,
        m,
        d,
        free_nodes: nm.free_count,
        n_free: n,
        real,
        unitary,
        corner_deviation: nm.corner_deviation,
        mesh_h: mesh.mesh_h(),
    })
}
