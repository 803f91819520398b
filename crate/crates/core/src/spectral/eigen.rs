//! Generalized eigenproblem `K x = lambda M x` on the assembled system.
//!
//! Up to `dense_limit` dofs everything is computed densely (symmetric or
//! Hermitian fast paths when the twist is unitary, Hessenberg QR on
//! `M^-1 K` otherwise); larger systems go through shift-invert Krylov–Schur
//! with a sparse LU of `K - sigma M`. Residuals always come from vectors of
//! the original pencil.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SparseColMatRef};
use faer::{c64, Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::assemble::AssembledSystem;

pub const DEFAULT_DENSE_LIMIT: usize = 8000;
pub const CLUSTER_REL_TOL: f64 = 1e-6;
pub const RESIDUAL_REL_TOL: f64 = 1e-8;
const KRYLOV_TOL: f64 = 1e-11;
const MAX_RESTARTS: usize = 300;
/// Shift-invert needs the shift at least this far (relative) from the spectrum.
const MIN_SHIFT_GAP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub count: usize,
    pub shift: [f64; 2],
    pub dense_limit: usize,
    /// Refuse `count > n_free / 4`.
    pub enforce_trust_region: bool,
}

impl SolverOptions {
    pub fn new(count: usize) -> SolverOptions {
        SolverOptions { count, shift: [0.0, 0.0], dense_limit: DEFAULT_DENSE_LIMIT, enforce_trust_region: true }
    }

    pub fn shift(&self) -> c64 {
        c64::new(self.shift[0], self.shift[1])
    }
}

/// Eigenvalues merged under the cluster tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCluster {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub residual: f64,
}

impl EigenCluster {
    pub fn value(&self) -> c64 {
        c64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<EigenCluster>,
    /// Individual eigenvalues, sorted by (Re, Im).
    pub raw: Vec<[f64; 2]>,
    pub mesh_h: f64,
    pub cluster_tol: f64,
    pub k_scale: f64,
    pub n_free: usize,
    pub method: String,
    pub max_residual: f64,
}

impl SpectrumResult {
    pub fn count(&self) -> usize {
        self.raw.len()
    }

    pub fn raw_values(&self) -> Vec<c64> {
        self.raw.iter().map(|v| c64::new(v[0], v[1])).collect()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.raw.iter().map(|v| v[1].abs()).fold(0.0, f64::max)
    }

    /// Largest `|lambda|` among the computed eigenvalues.
    pub fn max_modulus(&self) -> f64 {
        self.raw.iter().map(|v| c64::new(v[0], v[1]).norm()).fold(0.0, f64::max)
    }

    /// `re,im,multiplicity,residual` per cluster.
    pub fn to_csv(&self) -> String {
        use crate::fuchsian::cache::fmt_real;
        let mut out = String::from("re,im,multiplicity,residual\n");
        for c in &self.eigenvalues {
            out.push_str(&format!("{},{},{},{}\n", fmt_real(c.re), fmt_real(c.im), c.multiplicity, fmt_real(c.residual)));
        }
        out
    }
}

/// Sort by (Re, Im).
pub fn sort_values(v: &mut [c64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Single-linkage clustering with `|a - b| <= rel_tol (1 + max(|a|, |b|))`.
/// Returns groups of indices into `values` in (Re, Im) order of their
/// first member.
pub fn cluster_indices(values: &[c64], rel_tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re).then(values[a].im.total_cmp(&values[b].im)));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let max_mod = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let window = rel_tol * (1.0 + max_mod);
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if values[j].re - values[i].re > window {
                break;
            }
            let tol = rel_tol * (1.0 + values[i].norm().max(values[j].norm()));
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for &i in &order {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Picks the `count` values nearest `shift`, extended so that no cluster is
/// cut in half.
pub fn select_nearest(values: &[c64], count: usize, shift: c64, rel_tol: f64) -> Vec<c64> {
    let mut v: Vec<c64> = values.to_vec();
    v.sort_by(|a, b| (a - shift).norm().total_cmp(&(b - shift).norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
    let mut take = count.min(v.len());
    while take > 0 && take < v.len() {
        let last = v[take - 1];
        let next = v[take];
        if (last - next).norm() <= rel_tol * (1.0 + last.norm().max(next.norm())) {
            take += 1;
        } else {
            break;
        }
    }
    v.truncate(take);
    v
}

/// `K - sigma M` factorizations sharing one symbolic analysis.
pub struct PencilFactorizer {
    k: SparseColMat<usize, c64>,
    m_vals: Vec<c64>,
    symbolic: SymbolicLu<usize>,
}

impl PencilFactorizer {
    pub fn new(sys: &AssembledSystem) -> Result<PencilFactorizer> {
        let k = sys.k.to_faer();
        let m = sys.m.to_faer();
        if k.symbolic().row_idx() != m.symbolic().row_idx() || k.symbolic().col_ptr() != m.symbolic().col_ptr() {
            return Err(Error::SolverNotConverged("stiffness and mass patterns differ".to_string()));
        }
        let symbolic = SymbolicLu::try_new(k.symbolic())
            .map_err(|e| Error::SolverNotConverged(format!("symbolic LU failed: {e:?}")))?;
        Ok(PencilFactorizer { m_vals: m.val().to_vec(), k, symbolic })
    }

    pub fn factor(&self, sigma: c64) -> Result<Lu<usize, c64>> {
        let vals: Vec<c64> = self.k.val().iter().zip(&self.m_vals).map(|(k, m)| k - sigma * m).collect();
        let mat = SparseColMatRef::new(self.k.symbolic(), &vals);
        Lu::try_new_with_symbolic(self.symbolic.clone(), mat)
            .map_err(|_| Error::ShiftTooCloseToEigenvalue { re: sigma.re, im: sigma.im })
    }
}

fn solve_col(lu: &Lu<usize, c64>, rhs: &[c64]) -> Vec<c64> {
    let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

fn norm2(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn start_vector(n: usize, seed: u64) -> Vec<c64> {
    // xorshift; only needs to be generic and reproducible
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..n).map(|_| c64::new(next(), next())).collect()
}

/// `||K x - lambda M x|| / ||x||`.
pub fn pencil_residual(sys: &AssembledSystem, lambda: c64, x: &[c64]) -> f64 {
    let n = x.len();
    let mut kx = vec![c64::new(0.0, 0.0); n];
    let mut mx = vec![c64::new(0.0, 0.0); n];
    sys.k.matvec(x, &mut kx);
    sys.m.matvec(x, &mut mx);
    let r: Vec<c64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
    norm2(&r) / norm2(x)
}

/// Residual of `lambda` from a few steps of inverse iteration at a nearby
/// shift.
fn inverse_iteration_residual(sys: &AssembledSystem, fac: &PencilFactorizer, lambda: c64, seed: u64) -> Result<f64> {
    let n = sys.n_free;
    let mut best = f64::INFINITY;
    for attempt in 0..4 {
        let eps = 1e-9 * (1.0 + lambda.norm()) * 10f64.powi(attempt);
        let sigma = lambda + c64::new(eps, 0.7 * eps);
        let lu = match fac.factor(sigma) {
            Ok(lu) => lu,
            Err(_) => continue,
        };
        let mut x = start_vector(n, seed);
        for _ in 0..3 {
            let mut mx = vec![c64::new(0.0, 0.0); n];
            sys.m.matvec(&x, &mut mx);
            x = solve_col(&lu, &mx);
            let nx = norm2(&x);
            if !nx.is_finite() || nx == 0.0 {
                break;
            }
            for v in x.iter_mut() {
                *v /= nx;
            }
        }
        let r = pencil_residual(sys, lambda, &x);
        if r.is_finite() {
            best = best.min(r);
            if best <= RESIDUAL_REL_TOL * (1.0 + lambda.norm()) * sys.k_scale {
                break;
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::ShiftTooCloseToEigenvalue { re: lambda.re, im: lambda.im })
    }
}

fn dense_all(sys: &AssembledSystem) -> Result<(Vec<c64>, &'static str)> {
    let fail = |e: &dyn std::fmt::Debug| Error::SolverNotConverged(format!("dense eigensolver: {e:?}"));
    if sys.unitary {
        if sys.real {
            let k = sys.k.to_dense_real();
            let m = sys.m.to_dense_real();
            if let Ok(llt) = m.llt(Side::Lower) {
                let l = llt.L();
                let mut x = k.clone();
                l.solve_lower_triangular_in_place(x.as_mut());
                let mut c = x.transpose().to_owned();
                l.solve_lower_triangular_in_place(c.as_mut());
                let c = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
                let ev = c.self_adjoint_eigenvalues(Side::Lower).map_err(|e| fail(&e))?;
                return Ok((ev.into_iter().map(|v| c64::new(v, 0.0)).collect(), "dense-symmetric"));
            }
        } else {
            let k = sys.k.to_dense();
            let m = sys.m.to_dense();
            let m = Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
            if let Ok(llt) = m.llt(Side::Lower) {
                let l = llt.L();
                let mut x = k.clone();
                l.solve_lower_triangular_in_place(x.as_mut());
                let mut c = x.adjoint().to_owned();
                l.solve_lower_triangular_in_place(c.as_mut());
                let c = Mat::from_fn(c.nrows(), c.ncols(), |i, j| (c[(i, j)] + c[(j, i)].conj()) * 0.5);
                let ev = c.self_adjoint_eigenvalues(Side::Lower).map_err(|e| fail(&e))?;
                return Ok((ev.into_iter().map(|v| c64::new(v, 0.0)).collect(), "dense-hermitian"));
            }
        }
    }
    if sys.real {
        let k = sys.k.to_dense_real();
        let m = sys.m.to_dense_real();
        let a = m.partial_piv_lu().solve(&k);
        let ev = a.eigenvalues().map_err(|e| fail(&e))?;
        Ok((ev.into_iter().map(|v| c64::new(v.re, v.im)).collect(), "dense-real-general"))
    } else {
        let k = sys.k.to_dense();
        let m = sys.m.to_dense();
        let a = m.partial_piv_lu().solve(&k);
        let ev = a.eigenvalues().map_err(|e| fail(&e))?;
        Ok((ev, "dense-complex-general"))
    }
}

/// Shift-invert Krylov–Schur for the `nev` eigenvalues nearest `shift`;
/// returns eigenvalues and Ritz residuals measured on the pencil.
fn krylov_schur(sys: &AssembledSystem, fac: &PencilFactorizer, nev: usize, shift: c64) -> Result<(Vec<c64>, Vec<f64>)> {
    let n = sys.n_free;
    let nev = nev.min(n.saturating_sub(2)).max(1);
    let m = (2 * nev + 20).min(n - 1);
    // factor K - sigma M, nudging sigma off an eigenvalue if needed
    let mut lu = None;
    let mut sigma = shift;
    for attempt in 0..6 {
        let s = if attempt == 0 {
            shift
        } else {
            let r = 1e-2 * (1.0 + shift.norm()) * 2f64.powi(attempt - 1);
            shift + c64::from_polar(r, std::f64::consts::PI / 7.0)
        };
        if let Ok(f) = fac.factor(s) {
            // a shift sitting on an eigenvalue still factors but the huge
            // Ritz value drowns the rest in rounding; estimate the distance
            // to the spectrum by a few power steps and move away if close
            let mut x = start_vector(n, 3);
            let mut growth = 0.0;
            for _ in 0..6 {
                let mut mx = vec![c64::new(0.0, 0.0); n];
                sys.m.matvec(&x, &mut mx);
                let nm = norm2(&mx);
                x = solve_col(&f, &mx);
                let nx = norm2(&x);
                if !nx.is_finite() || nx == 0.0 {
                    growth = f64::INFINITY;
                    break;
                }
                growth = nx / nm;
                x.iter_mut().for_each(|v| *v /= nx);
            }
            if growth.is_finite() && growth * MIN_SHIFT_GAP * (1.0 + s.norm()) <= 1.0 {
                lu = Some(f);
                sigma = s;
                break;
            }
        }
    }
    let lu = lu.ok_or(Error::ShiftTooCloseToEigenvalue { re: shift.re, im: shift.im })?;
    let op = |x: &[c64]| -> Vec<c64> {
        let mut mx = vec![c64::new(0.0, 0.0); n];
        sys.m.matvec(x, &mut mx);
        solve_col(&lu, &mx)
    };

    let mut v: Vec<Vec<c64>> = Vec::with_capacity(m + 1);
    let mut h = Mat::<c64>::zeros(m + 1, m);
    let mut q = start_vector(n, 1);
    let nq = norm2(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    v.push(q);
    let mut k = 0usize;
    for _restart in 0..MAX_RESTARTS {
        // extend to m columns
        for j in k..m {
            let mut w = op(&v[j]);
            for _pass in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let coef: c64 = vi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    h[(i, j)] += coef;
                    for (wt, a) in w.iter_mut().zip(vi) {
                        *wt -= coef * a;
                    }
                }
            }
            let beta = norm2(&w);
            if beta == 0.0 || !beta.is_finite() {
                return Err(Error::SolverNotConverged("Krylov breakdown".to_string()));
            }
            h[(j + 1, j)] = c64::new(beta, 0.0);
            w.iter_mut().for_each(|x| *x /= beta);
            v.push(w);
        }
        let hm = h.as_ref().submatrix(0, 0, m, m).to_owned();
        let eig = hm.eigen().map_err(|e| Error::SolverNotConverged(format!("Ritz eigensolve: {e:?}")))?;
        let theta: Vec<c64> = (0..m).map(|i| eig.S().column_vector()[i]).collect();
        let y = eig.U();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()).then(a.cmp(&b)));
        let brow: Vec<c64> = (0..m).map(|j| h[(m, j)]).collect();
        let ritz_res = |i: usize| -> f64 {
            let yn: f64 = (0..m).map(|r| y[(r, i)].norm_sqr()).sum::<f64>().sqrt();
            let s: c64 = (0..m).map(|r| brow[r] * y[(r, i)]).sum();
            s.norm() / yn
        };
        let converged = order[..nev].iter().all(|&i| ritz_res(i) <= KRYLOV_TOL * theta[i].norm());
        if converged {
            let mut lambdas = Vec::with_capacity(nev);
            let mut residuals = Vec::with_capacity(nev);
            for &i in &order[..nev] {
                let lambda = sigma + theta[i].inv();
                let mut u = vec![c64::new(0.0, 0.0); n];
                for (r, vr) in v[..m].iter().enumerate() {
                    let c = y[(r, i)];
                    for (ut, a) in u.iter_mut().zip(vr) {
                        *ut += c * a;
                    }
                }
                residuals.push(pencil_residual(sys, lambda, &u));
                lambdas.push(lambda);
            }
            return Ok((lambdas, residuals));
        }
        // keep the wanted Ritz directions plus a margin, orthonormalised
        let keep = (nev + (m - nev) / 2).min(m - 1);
        let mut qy: Vec<Vec<c64>> = Vec::with_capacity(keep);
        for &i in &order[..keep] {
            let mut col: Vec<c64> = (0..m).map(|r| y[(r, i)]).collect();
            for _pass in 0..2 {
                for prev in &qy {
                    let coef: c64 = prev.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
                    for (c, a) in col.iter_mut().zip(prev) {
                        *c -= coef * a;
                    }
                }
            }
            let nc = norm2(&col);
            if nc < 1e-10 {
                continue;
            }
            col.iter_mut().for_each(|x| *x /= nc);
            qy.push(col);
        }
        k = qy.len();
        let qm = Mat::from_fn(m, k, |r, c| qy[c][r]);
        let hk = qm.adjoint() * &hm * &qm;
        let bk: Vec<c64> = (0..k).map(|c| (0..m).map(|r| brow[r] * qm[(r, c)]).sum()).collect();
        let mut nv: Vec<Vec<c64>> = Vec::with_capacity(m + 1);
        for c in 0..k {
            let mut col = vec![c64::new(0.0, 0.0); n];
            for (r, vr) in v[..m].iter().enumerate() {
                let coef = qm[(r, c)];
                for (t, a) in col.iter_mut().zip(vr) {
                    *t += coef * a;
                }
            }
            nv.push(col);
        }
        nv.push(v[m].clone());
        v = nv;
        h = Mat::<c64>::zeros(m + 1, m);
        for r in 0..k {
            for c in 0..k {
                h[(r, c)] = hk[(r, c)];
            }
        }
        for (c, b) in bk.iter().enumerate() {
            h[(k, c)] = *b;
        }
    }
    Err(Error::SolverNotConverged(format!("Krylov–Schur did not converge in {MAX_RESTARTS} restarts")))
}

pub fn solve_spectrum(sys: &AssembledSystem, count: usize, shift: c64) -> Result<SpectrumResult> {
    let mut opts = SolverOptions::new(count);
    opts.shift = [shift.re, shift.im];
    solve_spectrum_with(sys, &opts)
}

pub fn solve_spectrum_with(sys: &AssembledSystem, opts: &SolverOptions) -> Result<SpectrumResult> {
    let n = sys.n_free;
    if opts.count == 0 || opts.count > n {
        return Err(Error::Invalid(format!("eigen count {} outside 1..={n}", opts.count)));
    }
    if opts.enforce_trust_region && opts.count > n / 4 {
        return Err(Error::Invalid(format!("eigen count {} exceeds n_free/4 = {}", opts.count, n / 4)));
    }
    // reproducible bits regardless of the rayon pool
    faer::set_global_parallelism(faer::Par::Seq);
    let shift = opts.shift();
    let fac = PencilFactorizer::new(sys)?;
    let (mut values, residuals, method) = if n <= opts.dense_limit {
        let (all, method) = dense_all(sys)?;
        let chosen = select_nearest(&all, opts.count, shift, CLUSTER_REL_TOL);
        let residuals: Vec<f64> = chosen
            .par_iter()
            .enumerate()
            .map(|(i, &l)| inverse_iteration_residual(sys, &fac, l, 11 + i as u64))
            .collect::<Result<Vec<f64>>>()?;
        (chosen, residuals, method.to_string())
    } else {
        let margin = (opts.count / 10).max(8);
        let (vals, res) = krylov_schur(sys, &fac, opts.count + margin, shift)?;
        let chosen = select_nearest(&vals, opts.count, shift, CLUSTER_REL_TOL);
        let residuals = chosen
            .iter()
            .map(|c| {
                let i = vals.iter().position(|v| v == c).expect("selected from vals");
                res[i]
            })
            .collect();
        (chosen, residuals, "krylov-schur-shift-invert".to_string())
    };
    if sys.unitary {
        // Hermitian pencil with definite mass: the spectrum is real
        values.iter_mut().for_each(|v| v.im = 0.0);
    } else if sys.real {
        // real pencil: imaginary parts at rounding level are real eigenvalues
        for v in values.iter_mut() {
            if v.im.abs() <= 1e-10 * (1.0 + v.norm()) {
                v.im = 0.0;
            }
        }
    }
    // pair residuals with values before sorting
    let mut pairs: Vec<(c64, f64)> = values.drain(..).zip(residuals).collect();
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let values: Vec<c64> = pairs.iter().map(|p| p.0).collect();
    let groups = cluster_indices(&values, CLUSTER_REL_TOL);
    let clusters: Vec<EigenCluster> = groups
        .iter()
        .map(|g| {
            let mean: c64 = g.iter().map(|&i| values[i]).sum::<c64>() / g.len() as f64;
            EigenCluster {
                re: mean.re,
                im: mean.im,
                multiplicity: g.len(),
                residual: g.iter().map(|&i| pairs[i].1).fold(0.0, f64::max),
            }
        })
        .collect();
    let max_residual = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(SpectrumResult {
        eigenvalues: clusters,
        raw: values.iter().map(|v| [v.re, v.im]).collect(),
        mesh_h: sys.mesh_h,
        cluster_tol: CLUSTER_REL_TOL,
        k_scale: sys.k_scale,
        n_free: n,
        method,
        max_residual,
    })
}

/// `true` if every residual meets `1e-8 (1 + |lambda|) k_scale`.
pub fn residuals_ok(spec: &SpectrumResult) -> bool {
    spec.eigenvalues
        .iter()
        .all(|c| c.residual <= RESIDUAL_REL_TOL * (1.0 + c.value().norm()) * spec.k_scale)
}

/// Dense `M^-1 K` for callers that want to inspect the operator.
pub fn dense_operator(sys: &AssembledSystem) -> Mat<c64> {
    sys.m.to_dense().partial_piv_lu().inverse() * sys.k.to_dense()
}
