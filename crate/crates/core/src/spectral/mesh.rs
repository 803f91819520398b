//! Triangulations of the fundamental octagon in the Poincaré disk.
//!
//! Level 0 fans the octagon from its centre into 8 triangles; each level
//! splits every triangle into four through hyperbolic edge midpoints, so
//! boundary nodes stay on the geodesic sides at equal arclength. Nodes on
//! the image side of each pairing are placed at the images of the source
//! side nodes.

use std::collections::HashMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{Mat2, SurfaceGroup};

pub const MAX_LEVEL: u32 = 7;
pub const MIN_ANGLE_DEG: f64 = 15.0;
pub const PAIRING_TOL: f64 = 1e-10;

/// `m` acting on the disk through the Cayley transform `w = (z - i)/(z + i)`.
pub fn disk_apply(m: &Mat2, w: Complex64) -> Complex64 {
    let alpha = Complex64::new(0.5 * (m.a + m.d), 0.5 * (m.b - m.c));
    let beta = Complex64::new(0.5 * (m.a - m.d), -0.5 * (m.b + m.c));
    (alpha * w + beta) / (beta.conj() * w + alpha.conj())
}

pub fn disk_distance(p: Complex64, q: Complex64) -> f64 {
    let num = (p - q).norm_sqr();
    let den = (1.0 - p.norm_sqr()) * (1.0 - q.norm_sqr());
    (1.0 + 2.0 * num / den).acosh()
}

/// Midpoint of the geodesic segment `[p, q]`.
pub fn disk_midpoint(p: Complex64, q: Complex64) -> Complex64 {
    let to_origin = |z: Complex64| (z - p) / (Complex64::new(1.0, 0.0) - p.conj() * z);
    let from_origin = |z: Complex64| (z + p) / (Complex64::new(1.0, 0.0) + p.conj() * z);
    let q0 = to_origin(q);
    let r = q0.norm();
    if r == 0.0 {
        return p;
    }
    let half = (0.5 * r.atanh()).tanh();
    from_origin(q0 * (half / r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPairing {
    /// Index into the group's side pairings.
    pub generator: usize,
    /// Side whose nodes are free ("master"); the pairing maps it onto
    /// `slave_side`.
    pub master_side: usize,
    pub slave_side: usize,
    /// `(master vertex, slave vertex)` with `slave = g(master)`, corners
    /// included.
    pub nodes: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OctagonMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_pairing: Vec<BoundaryPairing>,
    /// Vertex index of corner `j`.
    pub corners: [usize; 8],
    /// Side `j` from corner `j` to corner `j + 1`, as ordered vertices.
    pub sides: Vec<Vec<usize>>,
    pub refinement_level: u32,
    pub pairing_residual: f64,
    pub min_angle_deg: f64,
}

fn pt(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl OctagonMesh {
    pub fn point(&self, i: usize) -> Complex64 {
        pt(self.vertices[i])
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Largest hyperbolic edge length.
    pub fn mesh_h(&self) -> f64 {
        let mut h = 0.0_f64;
        for t in &self.triangles {
            for e in 0..3 {
                h = h.max(disk_distance(self.point(t[e]), self.point(t[(e + 1) % 3])));
            }
        }
        h
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for s in &self.sides {
            for &v in s {
                b[v] = true;
            }
        }
        b
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }
}

fn min_angle_deg(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let ang = |p: Complex64, q: Complex64, r: Complex64| {
        let u = q - p;
        let v = r - p;
        (u.conj() * v).arg().abs()
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b)).to_degrees()
}

fn signed_area(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    0.5 * ((b - a).conj() * (c - a)).im
}

pub fn build_octagon_mesh(g: &SurfaceGroup, level: u32) -> Result<OctagonMesh> {
    if level > MAX_LEVEL {
        return Err(Error::Invalid(format!("mesh level {level} above {MAX_LEVEL}")));
    }
    if g.polygon.sides != 8 {
        return Err(Error::Invalid("octagon mesh needs an 8-sided fundamental polygon".to_string()));
    }
    let rc = g.polygon.corner_radius_disk();
    let mut verts: Vec<Complex64> = vec![Complex64::new(0.0, 0.0)];
    let mut corners = [0usize; 8];
    for (j, c) in corners.iter_mut().enumerate() {
        *c = verts.len();
        verts.push(Complex64::from_polar(rc, g.polygon.corner_angle(j)));
    }
    let mut tris: Vec<[usize; 3]> = (0..8).map(|j| [0, corners[j], corners[(j + 1) % 8]]).collect();
    let mut sides: Vec<Vec<usize>> = (0..8).map(|j| vec![corners[j], corners[(j + 1) % 8]]).collect();

    for _ in 0..level {
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Complex64>| -> usize {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                verts.push(disk_midpoint(verts[a], verts[b]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * tris.len());
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        tris = next;
        for s in sides.iter_mut() {
            let mut refined = Vec::with_capacity(2 * s.len() - 1);
            for w in s.windows(2) {
                refined.push(w[0]);
                refined.push(mid(w[0], w[1], &mut verts));
            }
            refined.push(*s.last().expect("side has nodes"));
            *s = refined;
        }
    }

    // Pair sides: side j is centred at (j + 1) pi/4; pairing k maps the
    // side centred at k pi/4 + pi onto the one centred at k pi/4.
    let mut pairings = Vec::with_capacity(4);
    let mut residual = 0.0_f64;
    for (k, sp) in g.side_pairings.iter().enumerate() {
        let master_side = (k + 3) % 8;
        let slave_side = (k + 7) % 8;
        let mut nodes = Vec::with_capacity(sides[master_side].len());
        for &m in &sides[master_side] {
            let image = disk_apply(&sp.matrix, verts[m]);
            let (s, dist) = sides[slave_side]
                .iter()
                .map(|&s| (s, disk_distance(verts[s], image)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("side has nodes");
            residual = residual.max(dist);
            nodes.push((m, s));
        }
        pairings.push(BoundaryPairing { generator: k, master_side, slave_side, nodes });
    }
    if !(residual <= PAIRING_TOL) {
        return Err(Error::MeshQualityFailure(format!("side pairing residual {residual:e}")));
    }
    // slave side nodes become exact images (corners stay put)
    let is_corner = |v: usize| corners.contains(&v);
    for p in &pairings {
        let m = &g.side_pairings[p.generator].matrix;
        for &(a, b) in &p.nodes {
            if !is_corner(b) {
                verts[b] = disk_apply(m, verts[a]);
            }
        }
    }

    let mut min_angle = f64::INFINITY;
    for &[a, b, c] in &tris {
        if signed_area(verts[a], verts[b], verts[c]) <= 0.0 {
            return Err(Error::MeshQualityFailure("negatively oriented triangle".to_string()));
        }
        min_angle = min_angle.min(min_angle_deg(verts[a], verts[b], verts[c]));
    }
    if min_angle < MIN_ANGLE_DEG {
        return Err(Error::MeshQualityFailure(format!("minimum angle {min_angle:.2} deg below {MIN_ANGLE_DEG}")));
    }
    Ok(OctagonMesh {
        vertices: verts.iter().map(|z| [z.re, z.im]).collect(),
        triangles: tris,
        boundary_pairing: pairings,
        corners,
        sides,
        refinement_level: level,
        pairing_residual: residual,
        min_angle_deg: min_angle,
    })
}

/// Union of corners under the pairings; returns the orbit count.
pub fn corner_orbit_count(mesh: &OctagonMesh) -> usize {
    let mut parent: Vec<usize> = (0..8).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let idx = |v: usize| mesh.corners.iter().position(|&c| c == v);
    for p in &mesh.boundary_pairing {
        for &(a, b) in &p.nodes {
            if let (Some(i), Some(j)) = (idx(a), idx(b)) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    (0..8).filter(|&i| find(&mut parent, i) == i).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::bolza_preset;

    #[test]
    fn disk_action_matches_cayley() {
        let m = Mat2::rotation(0.4) * Mat2::translation(1.3);
        let w = Complex64::new(0.2, -0.5);
        let i = Complex64::new(0.0, 1.0);
        let z = i * (Complex64::new(1.0, 0.0) + w) / (Complex64::new(1.0, 0.0) - w);
        let z2 = m.apply(z);
        let w2 = (z2 - i) / (z2 + i);
        assert!((disk_apply(&m, w) - w2).norm() < 1e-14);
    }

    #[test]
    fn midpoint_is_equidistant() {
        let p = Complex64::new(0.3, 0.5);
        let q = Complex64::new(-0.6, 0.1);
        let m = disk_midpoint(p, q);
        let (a, b) = (disk_distance(p, m), disk_distance(m, q));
        assert!((a - b).abs() < 1e-13);
        assert!((a + b - disk_distance(p, q)).abs() < 1e-13);
    }

    #[test]
    fn level_zero_structure() {
        let g = bolza_preset();
        let m = build_octagon_mesh(&g, 0).unwrap();
        assert_eq!(m.vertices.len(), 9);
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(corner_orbit_count(&m), 1);
    }

    #[test]
    fn refinement_counts_and_pairing() {
        let g = bolza_preset();
        let mut prev = None;
        for level in 0..=4 {
            let m = build_octagon_mesh(&g, level).unwrap();
            if let Some(n) = prev {
                assert_eq!(m.triangles.len(), 4 * n);
            }
            prev = Some(m.triangles.len());
            assert!(m.pairing_residual <= PAIRING_TOL);
            assert!(m.min_angle_deg >= MIN_ANGLE_DEG);
            // independent re-check of the snapped positions
            for p in &m.boundary_pairing {
                let sp = &g.side_pairings[p.generator].matrix;
                for &(a, b) in &p.nodes {
                    assert!(disk_distance(disk_apply(sp, m.point(a)), m.point(b)) <= 1e-10);
                }
                assert_eq!(p.nodes.len(), (1 << level) + 1);
            }
            assert_eq!(corner_orbit_count(&m), 1);
        }
        assert!(build_octagon_mesh(&g, 8).is_err());
    }
}
