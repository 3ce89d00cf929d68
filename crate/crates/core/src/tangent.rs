//! Tangent frames, null-space reduction of the per-step linear systems, and
//! preconditioned Krylov solvers.
//!
//! Unknowns of a reduced system are ordered block by block (one block per
//! sublattice), vertex by vertex inside a block, and `t₁, t₂` inside a vertex:
//! index `2·N·block + 2·z + a`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::fem::NodalVectorField;
use crate::sparse::{dot, norm2, CsrMatrix};

/// Orthonormal basis `(t₁(z), t₂(z))` of the plane orthogonal to `m(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub t1: Vec<Vector3<f64>>,
    pub t2: Vec<Vector3<f64>>,
}

pub fn build_frames(m: &NodalVectorField) -> Result<TangentFrame> {
    let mut t1 = Vec::with_capacity(m.len());
    let mut t2 = Vec::with_capacity(m.len());
    for (z, v) in m.iter().enumerate() {
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite(z));
        }
        if v.norm() == 0.0 {
            return Err(Error::ZeroVector(z));
        }
        let mut k = 0;
        for j in 1..3 {
            if v[j].abs() < v[k].abs() {
                k = j;
            }
        }
        let a = Vector3::ith(k, 1.0).cross(v).normalize();
        let b = v.cross(&a).normalize();
        t1.push(a);
        t2.push(b);
    }
    Ok(TangentFrame { t1, t2 })
}

impl TangentFrame {
    pub fn len(&self) -> usize {
        self.t1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t1.is_empty()
    }

    pub fn basis(&self, z: usize, a: usize) -> &Vector3<f64> {
        if a == 0 {
            &self.t1[z]
        } else {
            &self.t2[z]
        }
    }

    /// `P x`: reduced coefficients to nodal vectors.
    pub fn lift(&self, x: &[f64]) -> NodalVectorField {
        assert_eq!(x.len(), 2 * self.len());
        NodalVectorField((0..self.len()).map(|z| self.t1[z] * x[2 * z] + self.t2[z] * x[2 * z + 1]).collect())
    }

    /// `Pᵀ b`: nodal (dual) vectors to reduced coefficients.
    pub fn restrict(&self, b: &NodalVectorField) -> Vec<f64> {
        assert_eq!(b.len(), self.len());
        let mut out = Vec::with_capacity(2 * self.len());
        for z in 0..self.len() {
            out.push(self.t1[z].dot(&b[z]));
            out.push(self.t2[z].dot(&b[z]));
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Term<'a> {
    /// `coeff · Σ_ij S_ij v_j·φ_i`, with `S` acting componentwise.
    Scalar { row: usize, col: usize, coeff: f64, op: &'a CsrMatrix },
    /// `Σ_z φ_zᵀ G_z v_z`.
    Nodal { row: usize, col: usize, blocks: Vec<Matrix3<f64>> },
}

/// Block bilinear form on `n_blocks` copies of the nodal vector space. The
/// row index selects the test function, the column index the trial function.
#[derive(Debug, Clone)]
pub struct FullOperator<'a> {
    n_blocks: usize,
    n_vertices: usize,
    terms: Vec<Term<'a>>,
}

impl<'a> FullOperator<'a> {
    pub fn new(n_blocks: usize, n_vertices: usize) -> Self {
        Self { n_blocks, n_vertices, terms: Vec::new() }
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn add_scalar(&mut self, row: usize, col: usize, coeff: f64, op: &'a CsrMatrix) -> &mut Self {
        assert!(row < self.n_blocks && col < self.n_blocks);
        assert_eq!(op.n_rows(), self.n_vertices);
        if coeff != 0.0 {
            self.terms.push(Term::Scalar { row, col, coeff, op });
        }
        self
    }

    pub fn add_nodal(&mut self, row: usize, col: usize, blocks: Vec<Matrix3<f64>>) -> &mut Self {
        assert!(row < self.n_blocks && col < self.n_blocks);
        assert_eq!(blocks.len(), self.n_vertices);
        self.terms.push(Term::Nodal { row, col, blocks });
        self
    }

    /// Full-space action: the dual vectors `φ ↦ a(v, φ)` per block.
    pub fn apply(&self, v: &[NodalVectorField]) -> Vec<NodalVectorField> {
        assert_eq!(v.len(), self.n_blocks);
        let mut out = vec![NodalVectorField::zeros(self.n_vertices); self.n_blocks];
        for term in &self.terms {
            match term {
                Term::Scalar { row, col, coeff, op } => {
                    for i in 0..self.n_vertices {
                        let mut acc = Vector3::zeros();
                        for (j, s) in op.row(i) {
                            acc += v[*col][j] * s;
                        }
                        out[*row][i] += acc * *coeff;
                    }
                }
                Term::Nodal { row, col, blocks } => {
                    for (z, g) in blocks.iter().enumerate() {
                        out[*row][z] += g * v[*col][z];
                    }
                }
            }
        }
        out
    }
}

/// Reduced linear system `B x = r` with `B = PᵀAP`, `r = Pᵀb`.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub symmetric: bool,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }
}

pub fn reduce(op: &FullOperator, rhs: &[NodalVectorField], frames: &[&TangentFrame]) -> Result<ReducedSystem> {
    let nb = op.n_blocks;
    let n = op.n_vertices;
    if frames.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: frames.len() });
    }
    if rhs.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: rhs.len() });
    }
    for f in frames {
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
    }
    for b in rhs {
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
    }
    let idx = |block: usize, z: usize, a: usize| 2 * n * block + 2 * z + a;
    let mut trip = Vec::new();
    for term in &op.terms {
        match term {
            Term::Scalar { row, col, coeff, op } => {
                let (fr, fc) = (frames[*row], frames[*col]);
                for i in 0..n {
                    for (j, s) in op.row(i) {
                        let w = coeff * s;
                        for a in 0..2 {
                            for b in 0..2 {
                                trip.push((idx(*row, i, a), idx(*col, j, b), w * fr.basis(i, a).dot(fc.basis(j, b))));
                            }
                        }
                    }
                }
            }
            Term::Nodal { row, col, blocks } => {
                let (fr, fc) = (frames[*row], frames[*col]);
                for (z, g) in blocks.iter().enumerate() {
                    for a in 0..2 {
                        for b in 0..2 {
                            trip.push((idx(*row, z, a), idx(*col, z, b), fr.basis(z, a).dot(&(g * fc.basis(z, b)))));
                        }
                    }
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(2 * n * nb, 2 * n * nb, &trip);
    let rhs: Vec<f64> = rhs.iter().zip(frames).flat_map(|(b, f)| f.restrict(b)).collect();
    let symmetric = matrix.is_symmetric();
    Ok(ReducedSystem { matrix, rhs, symmetric })
}

/// Lifts a reduced solution back to one nodal field per block.
pub fn lift_blocks(x: &[f64], frames: &[&TangentFrame]) -> Vec<NodalVectorField> {
    let mut off = 0;
    frames
        .iter()
        .map(|f| {
            let v = f.lift(&x[off..off + 2 * f.len()]);
            off += 2 * f.len();
            v
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    #[default]
    BlockJacobi,
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrylovMethod {
    /// Restarted GMRES with right preconditioning.
    #[default]
    Gmres,
    /// Preconditioned conjugate gradients; symmetric systems only.
    Cg,
    /// CG when the system is symmetric, GMRES otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    /// Defaults to `10 · dim` when absent.
    pub max_iter: Option<usize>,
    pub restart: usize,
    pub preconditioner: Preconditioner,
    pub method: KrylovMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, restart: 50, preconditioner: Preconditioner::BlockJacobi, method: KrylovMethod::Gmres }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final true relative residual `‖r − Bx‖/‖r‖`.
    pub residual: f64,
    pub converged: bool,
}

enum Precond {
    Identity,
    Blocks(Vec<Matrix2<f64>>),
    Ilu(Ilu0),
}

impl Precond {
    fn build(kind: Preconditioner, b: &CsrMatrix) -> Self {
        match kind {
            Preconditioner::None => Precond::Identity,
            Preconditioner::BlockJacobi => {
                let blocks = (0..b.n_rows() / 2)
                    .map(|k| {
                        let (i, j) = (2 * k, 2 * k + 1);
                        let m = Matrix2::new(b.get(i, i), b.get(i, j), b.get(j, i), b.get(j, j));
                        m.try_inverse().unwrap_or_else(|| {
                            let d = |x: f64| if x != 0.0 { 1.0 / x } else { 1.0 };
                            Matrix2::new(d(m[(0, 0)]), 0.0, 0.0, d(m[(1, 1)]))
                        })
                    })
                    .collect();
                Precond::Blocks(blocks)
            }
            Preconditioner::Ilu0 => match Ilu0::new(b) {
                Some(f) => Precond::Ilu(f),
                None => {
                    log::warn!("ILU(0) hit a zero pivot; falling back to block-Jacobi");
                    Precond::build(Preconditioner::BlockJacobi, b)
                }
            },
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Precond::Identity => x.to_vec(),
            Precond::Blocks(blocks) => {
                let mut y = vec![0.0; x.len()];
                for (k, m) in blocks.iter().enumerate() {
                    let r = m * Vector2::new(x[2 * k], x[2 * k + 1]);
                    y[2 * k] = r[0];
                    y[2 * k + 1] = r[1];
                }
                y
            }
            Precond::Ilu(f) => f.solve(x),
        }
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Option<Self> {
        let n = a.n_rows();
        let mut lu = a.clone();
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            let r = row_ptr[i]..row_ptr[i + 1];
            diag_pos.push(r.start + col_idx[r].binary_search(&i).ok()?);
        }
        let mut pos = vec![usize::MAX; n];
        let vals = lu.values_mut();
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[k]] = k;
            }
            for kk in row_ptr[i]..diag_pos[i] {
                let k = col_idx[kk];
                let pivot = vals[diag_pos[k]];
                if pivot == 0.0 {
                    return None;
                }
                vals[kk] /= pivot;
                let lik = vals[kk];
                for jj in diag_pos[k] + 1..row_ptr[k + 1] {
                    let p = pos[col_idx[jj]];
                    if p != usize::MAX {
                        vals[p] -= lik * vals[jj];
                    }
                }
            }
            for k in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[k]] = usize::MAX;
            }
            if vals[diag_pos[i]] == 0.0 {
                return None;
            }
        }
        Some(Self { lu, diag_pos })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let (rp, ci, v) = (self.lu.row_ptr(), self.lu.col_idx(), self.lu.values());
        let mut y = b.to_vec();
        for i in 0..n {
            for k in rp[i]..self.diag_pos[i] {
                y[i] -= v[k] * y[ci[k]];
            }
        }
        for i in (0..n).rev() {
            for k in self.diag_pos[i] + 1..rp[i + 1] {
                y[i] -= v[k] * y[ci[k]];
            }
            y[i] /= v[self.diag_pos[i]];
        }
        y
    }
}

fn residual(b: &CsrMatrix, x: &[f64], rhs: &[f64]) -> Vec<f64> {
    let bx = b.mul_vec(x);
    rhs.iter().zip(&bx).map(|(r, y)| r - y).collect()
}

/// Solves `B x = r` from a zero initial guess.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged == false`. Breakdown (non-finite values) is an error.
pub fn solve(sys: &ReducedSystem, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::InvalidParameter(format!("solver tolerance must lie in (0,1), got {}", opts.tol)));
    }
    let n = sys.dim();
    if sys.matrix.n_rows() != n || sys.matrix.n_cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sys.matrix.n_rows() });
    }
    let bnorm = norm2(&sys.rhs);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveReport { iterations: 0, residual: 0.0, converged: true }));
    }
    if !bnorm.is_finite() {
        return Err(Error::Numerical("non-finite right-hand side".into()));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let pre = Precond::build(opts.preconditioner, &sys.matrix);
    let use_cg = match opts.method {
        KrylovMethod::Gmres => false,
        KrylovMethod::Cg => true,
        KrylovMethod::Auto => sys.symmetric,
    };
    let (x, iterations) =
        if use_cg { pcg(sys, &pre, opts.tol, max_iter)? } else { gmres(sys, &pre, opts.tol, max_iter, opts.restart.max(1))? };
    let res = norm2(&residual(&sys.matrix, &x, &sys.rhs)) / bnorm;
    if !res.is_finite() {
        return Err(Error::Numerical("Krylov iteration produced non-finite values".into()));
    }
    Ok((x, SolveReport { iterations, residual: res, converged: res <= opts.tol }))
}

fn gmres(sys: &ReducedSystem, pre: &Precond, tol: f64, max_iter: usize, restart: usize) -> Result<(Vec<f64>, usize)> {
    let n = sys.dim();
    let a = &sys.matrix;
    let bnorm = norm2(&sys.rhs);
    let mut x = vec![0.0; n];
    let mut total = 0;
    while total < max_iter {
        let r = residual(a, &x, &sys.rhs);
        let beta = norm2(&r);
        if beta / bnorm <= tol {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_done = 0;
        for k in 0..m {
            let mut w = a.mul_vec(&pre.apply(&v[k]));
            for (j, vj) in v.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= hjk * vi);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if !d.is_finite() {
                return Err(Error::Numerical("GMRES breakdown".into()));
            }
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_done = k + 1;
            total += 1;
            if g[k + 1].abs() / bnorm <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        if k_done == 0 {
            break;
        }
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let s: f64 = (i + 1..k_done).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut z = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            z.iter_mut().zip(vi).for_each(|(zj, vj)| *zj += yi * vj);
        }
        let dx = pre.apply(&z);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    }
    Ok((x, total))
}

fn pcg(sys: &ReducedSystem, pre: &Precond, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = sys.dim();
    let a = &sys.matrix;
    let bnorm = norm2(&sys.rhs);
    let mut x = vec![0.0; n];
    let mut r = sys.rhs.clone();
    let mut z = pre.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    while it < max_iter && norm2(&r) / bnorm > tol {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap.is_finite() && pap > 0.0) {
            return Err(Error::Numerical(format!("CG breakdown: pᵀBp = {pap}")));
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        z = pre.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        it += 1;
    }
    Ok((x, it))
}
