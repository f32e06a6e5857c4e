//! Dense block-diagonal semidefinite programming:
//!
//! ```text
//! minimize    c^T x
//! subject to  F(x) = F0 + sum_i x_i F_i  >= 0   (block diagonal)
//!             A x = b
//! ```
//!
//! solved by a primal-dual predictor-corrector method in the
//! Nesterov-Todd scaling. Design choices that matter for accuracy:
//!
//! * Every scaling conjugation `W^p M W^p` goes through the eigenbasis of `W`
//!   (elementwise multiply by `(w_i w_j)^p`), so no explicit `W^{1/2}` matrix
//!   with a squared condition number is ever multiplied out.
//! * The Schur complement `T^T T` is formed, factored, and solved in
//!   double-double arithmetic; near convergence its condition number exceeds
//!   1/eps, where f64 Cholesky and iterative refinement both fail.
//! * The scaled slack direction is rebuilt from `v = q - T dx`, assembled in
//!   double-double from the factorization output, which makes the dual
//!   residual of the step vanish against the same Gram matrix by
//!   construction. Assembling `v` in f64 leaves ~1e-8 of cancellation noise.
//! * Equality constraints are eliminated through an orthonormal null-space
//!   basis of `A` rather than a bordered KKT system.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dd;
use crate::symplectic::{eigh, max_abs, min_eig, symmetrized};

type Mat = DMatrix<f64>;
pub type Vec64 = DVector<f64>;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("{0}")]
    DimensionMismatch(String),
}

/// `minimize c.x  s.t.  f0 + sum_i x_i fs[i] >= 0,  A x = b`.
///
/// `f0[b]` and `fs[i][b]` are the symmetric blocks of the constraint matrix;
/// `block_dims[b]` their sizes. `eq` is the optional `(A, b)` pair.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub c: Vec64,
    pub f0: Vec<Mat>,
    pub fs: Vec<Vec<Mat>>,
    pub block_dims: Vec<usize>,
    pub eq: Option<(Mat, Vec64)>,
    pub start: Option<SdpStart>,
}

/// Strictly feasible initial iterate: `F(x)` and every `z` block positive
/// definite. When absent the solver starts from `x = 0`, `S = Z = I`, `y = 0`
/// and relies on infeasible-start convergence.
#[derive(Debug, Clone)]
pub struct SdpStart {
    pub x: Vec64,
    pub z: Vec<Mat>,
    pub y: Vec64,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    /// All residuals and the duality gap are below tolerance.
    Optimal,
    /// A dual improving ray was found: no primal feasible point exists.
    PrimalInfeasible,
    /// A primal improving ray was found: the objective is unbounded below.
    DualInfeasible,
    /// Iterates left the cone or the Schur system lost positive definiteness
    /// before reaching tolerance; the best iterate is returned.
    NumericalTrouble,
    /// Iteration budget exhausted; the best iterate is returned.
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec64,
    pub z: Vec<Mat>,
    pub y: Vec64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `primal_objective - dual_objective` at the returned iterate.
    pub gap: f64,
    /// Mean complementarity `<Z, S> / nu` at the returned iterate.
    pub mu: f64,
}

/// `c.x + <F0, Z> - b.y`: nonnegative for any feasible primal-dual pair, and
/// equal to the duality gap. Recomputed from scratch as an independent check
/// on a returned solution.
pub fn weak_duality_residual(p: &SdpProblem, s: &SdpSolution) -> f64 {
    let mut r = p.c.dot(&s.x);
    for (f, z) in p.f0.iter().zip(&s.z) {
        r += f.dot(z);
    }
    if let Some((_, b)) = &p.eq {
        r -= b.dot(&s.y);
    }
    r
}

const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Iterate-norm threshold above which the infeasibility certificates are tested.
const RAY_NORM: f64 = 1e9;
/// Relative tolerance for accepting an improving ray as a certificate.
const RAY_TOL: f64 = 1e-7;
/// Fraction of the full step to the cone boundary taken each iteration.
const STEP_FRACTION: f64 = 0.98;

struct NumericalBail;

/// NT scaling for one block, eigen-factored: `W = Q diag(w) Q^T`.
struct Scaling {
    w: Vec<f64>,
    q: Mat,
    zinv: Mat,
    vw: Vec<f64>,
    vq: Mat,
}

/// Spectrum of a matrix that is positive definite in exact arithmetic: tiny
/// negatives are roundoff and get clamped, genuine negatives mean the iterate
/// left the cone and abort the iteration.
fn clamp_spectrum(mut w: Vec<f64>) -> Result<Vec<f64>, NumericalBail> {
    let top = w.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let bottom = w.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if top <= 0.0 || bottom <= -1e-10 * top {
        return Err(NumericalBail);
    }
    for v in &mut w {
        *v = v.max(1e-14 * top);
    }
    Ok(w)
}

impl Scaling {
    fn new(s: &Mat, z: &Mat) -> Result<Self, NumericalBail> {
        let (ws, qs) = eigh(s);
        if ws[0] <= 0.0 {
            return Err(NumericalBail);
        }
        let mut sh = qs.clone();
        for (j, &wsj) in ws.iter().enumerate() {
            sh.column_mut(j).scale_mut(wsj.sqrt());
        }
        let sh = &sh * qs.transpose();
        let mm = &sh * z * &sh;
        let (wm, qm) = eigh(&mm);
        if wm[0] <= 0.0 {
            return Err(NumericalBail);
        }
        let shqm = &sh * &qm;
        let mut a = shqm.clone();
        let mut b = shqm.clone();
        for (j, &wmj) in wm.iter().enumerate() {
            a.column_mut(j).scale_mut(1.0 / wmj);
            b.column_mut(j).scale_mut(1.0 / wmj.sqrt());
        }
        let zinv = &a * shqm.transpose();
        let w_mat = &b * shqm.transpose();
        let (w, q) = eigh(&w_mat);
        let w = clamp_spectrum(w)?;
        let mut sc = Self { w, q, zinv: symmetrized(&zinv), vw: Vec::new(), vq: Mat::zeros(0, 0) };
        let v = sc.conj_pow(s, -0.5);
        let (vw, vq) = eigh(&v);
        sc.vw = clamp_spectrum(vw)?;
        sc.vq = vq;
        Ok(sc)
    }

    /// `W^p M W^p` through the eigenbasis: elementwise scale by `(w_i w_j)^p`.
    fn conj_pow(&self, m: &Mat, p: f64) -> Mat {
        let d = m.nrows();
        let mut inner = self.q.tr_mul(m) * &self.q;
        let wp: Vec<f64> = self.w.iter().map(|&v| v.powf(p)).collect();
        for i in 0..d {
            for j in 0..d {
                inner[(i, j)] *= wp[i] * wp[j];
            }
        }
        &self.q * inner * self.q.transpose()
    }

    /// Higher-order correction `W^{1/2} L_V^{-1}[sym((W^{1/2} dZ W^{1/2})(W^{-1/2} dS W^{-1/2}))] W^{1/2}`.
    fn lyap_corr(&self, dza: &Mat, dsa: &Mat) -> Mat {
        let dz = self.conj_pow(dza, 0.5);
        let ds = self.conj_pow(dsa, -0.5);
        let cx = 0.5 * (&dz * &ds + &ds * &dz);
        let d = cx.nrows();
        let mut p = self.vq.tr_mul(&cx) * &self.vq;
        for i in 0..d {
            for j in 0..d {
                p[(i, j)] *= 2.0 / (self.vw[i] + self.vw[j]);
            }
        }
        let u = &self.vq * p * self.vq.transpose();
        self.conj_pow(&u, 0.5)
    }
}

/// Writes the lower triangle of `m` (diagonal, then sqrt(2)-weighted
/// off-diagonals, column by column) into `out`.
fn svec_into(out: &mut [f64], m: &Mat) {
    let d = m.nrows();
    let mut k = 0;
    for j in 0..d {
        out[k] = m[(j, j)];
        k += 1;
        for i in j + 1..d {
            out[k] = SQRT2 * m[(i, j)];
            k += 1;
        }
    }
}

/// Inverse of [`svec_into`].
fn smat_from(v: &[f64], d: usize) -> Mat {
    let mut m = Mat::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..d {
            let val = v[k] / SQRT2;
            m[(i, j)] = val;
            m[(j, i)] = val;
            k += 1;
        }
    }
    m
}

fn f_of(p: &SdpProblem, x: &Vec64) -> Vec<Mat> {
    let mut out = p.f0.clone();
    for (i, fsi) in p.fs.iter().enumerate() {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for (o, f) in out.iter_mut().zip(fsi) {
            *o += f * xi;
        }
    }
    out
}

/// `h_i = sum_b <fs[i][b], z[b]>`, the map adjoint to `x -> sum x_i F_i`.
fn adjoint(p: &SdpProblem, z: &[Mat], nonzero: &[Vec<bool>]) -> Vec64 {
    Vec64::from_fn(p.c.len(), |i, _| {
        let mut acc = 0.0;
        for (b, f) in p.fs[i].iter().enumerate() {
            if nonzero[i][b] {
                acc += f.dot(&z[b]);
            }
        }
        acc
    })
}

/// Largest multiple of `dp` that keeps `p + a dp` in the cone, per block,
/// computed from the spectrum of `P^{-1/2} dP P^{-1/2}`.
fn max_step(p: &[Mat], dp: &[Mat]) -> f64 {
    let mut a = f64::INFINITY;
    for (pb, dpb) in p.iter().zip(dp) {
        let (w, q) = eigh(pb);
        let mut pih = q.clone();
        for (j, &wj) in w.iter().enumerate() {
            pih.column_mut(j).scale_mut(1.0 / wj.max(1e-300).sqrt());
        }
        let pih = &pih * q.transpose();
        let lmin = min_eig(&(&pih * dpb * &pih));
        if lmin < 0.0 {
            a = a.min(-1.0 / lmin);
        }
    }
    a
}

fn check_shapes(p: &SdpProblem) -> Result<(), SdpError> {
    let t = p.c.len();
    let nblk = p.block_dims.len();
    if p.f0.len() != nblk {
        return Err(SdpError::DimensionMismatch(format!(
            "f0 has {} blocks, block_dims lists {}",
            p.f0.len(),
            nblk
        )));
    }
    for (b, f) in p.f0.iter().enumerate() {
        if f.shape() != (p.block_dims[b], p.block_dims[b]) {
            return Err(SdpError::DimensionMismatch(format!(
                "f0 block {b} is {:?}, expected {d}x{d}",
                f.shape(),
                d = p.block_dims[b]
            )));
        }
    }
    if p.fs.len() != t {
        return Err(SdpError::DimensionMismatch(format!(
            "{} coefficient matrices for {} variables",
            p.fs.len(),
            t
        )));
    }
    for (i, fsi) in p.fs.iter().enumerate() {
        if fsi.len() != nblk {
            return Err(SdpError::DimensionMismatch(format!(
                "fs[{i}] has {} blocks, expected {nblk}",
                fsi.len()
            )));
        }
        for (b, f) in fsi.iter().enumerate() {
            if f.shape() != (p.block_dims[b], p.block_dims[b]) {
                return Err(SdpError::DimensionMismatch(format!(
                    "fs[{i}] block {b} has shape {:?}",
                    f.shape()
                )));
            }
        }
    }
    if let Some((a, b)) = &p.eq {
        if a.ncols() != t || a.nrows() != b.len() {
            return Err(SdpError::DimensionMismatch(format!(
                "equality system is {}x{} with rhs of length {}, expected cols {t}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
    }
    if let Some(st) = &p.start {
        if st.x.len() != t || st.z.len() != nblk {
            return Err(SdpError::DimensionMismatch(
                "start iterate does not match problem dimensions".into(),
            ));
        }
    }
    Ok(())
}

/// Orthonormal basis of the null space of `a`, from the spectral
/// decomposition of `a^T a`. (A thin SVD of a wide `a` does not carry the
/// null directions, so it cannot be used here.)
fn null_space(a: &Mat) -> Mat {
    let t = a.ncols();
    let (w, q) = eigh(&(a.transpose() * a));
    let wmax = w.last().copied().unwrap_or(0.0).max(0.0);
    let cut = wmax * t as f64 * f64::EPSILON;
    let null_dim = w.iter().filter(|&&v| v <= cut).count();
    let mut out = Mat::zeros(t, null_dim);
    for col in 0..null_dim {
        out.set_column(col, &q.column(col));
    }
    out
}

pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution, SdpError> {
    check_shapes(problem)?;
    let tol = settings.tol;
    let t = problem.c.len();
    let nblk = problem.block_dims.len();
    let dims = &problem.block_dims;

    if t == 0 {
        // pure feasibility of F0: decide by its spectrum
        let mut worst = f64::INFINITY;
        for f in &problem.f0 {
            worst = worst.min(min_eig(f));
        }
        let status = if worst >= -tol { SdpStatus::Optimal } else { SdpStatus::PrimalInfeasible };
        return Ok(SdpSolution {
            x: Vec64::zeros(0),
            z: dims.iter().map(|&d| Mat::zeros(d, d)).collect(),
            y: Vec64::zeros(0),
            status,
            iterations: 0,
            primal_objective: 0.0,
            dual_objective: 0.0,
            gap: 0.0,
            mu: 0.0,
        });
    }

    let (a_mat, b_vec) = match &problem.eq {
        Some((a, b)) => (a.clone(), b.clone()),
        None => (Mat::zeros(0, t), Vec64::zeros(0)),
    };
    let m = a_mat.nrows();
    let nu: f64 = dims.iter().map(|&d| d as f64).sum();
    let rows: usize = dims.iter().map(|&d| d * (d + 1) / 2).sum();

    let (mut x, mut y, mut s, mut z) = match &problem.start {
        Some(st) => (
            st.x.clone(),
            st.y.clone(),
            f_of(problem, &st.x),
            st.z.iter().map(symmetrized).collect::<Vec<_>>(),
        ),
        None => (
            Vec64::zeros(t),
            Vec64::zeros(m),
            dims.iter().map(|&d| Mat::identity(d, d)).collect::<Vec<_>>(),
            dims.iter().map(|&d| Mat::identity(d, d)).collect::<Vec<_>>(),
        ),
    };

    let norm_f0 = problem.f0.iter().map(max_abs).fold(1.0f64, f64::max);
    let norm_c = problem.c.iter().fold(1.0f64, |a, &v| a.max(v.abs()));

    let (q_a, a_pinv) = if m > 0 {
        (null_space(&a_mat), a_mat.clone().pseudo_inverse(1e-12).expect("pinv of equality system"))
    } else {
        (Mat::zeros(t, 0), Mat::zeros(t, 0))
    };

    // per-(variable, block) nonzero mask: zero blocks skip all conjugations
    let nonzero: Vec<Vec<bool>> =
        problem.fs.iter().map(|fsi| fsi.iter().map(|f| max_abs(f) != 0.0).collect()).collect();

    struct Best {
        x: Vec64,
        z: Vec<Mat>,
        y: Vec64,
        err: f64,
        gap: f64,
        mu: f64,
    }
    let mut best: Option<Best> = None;
    let mut final_it = 0;

    let objectives = |x: &Vec64, z: &[Mat], y: &Vec64| -> (f64, f64) {
        let pobj = problem.c.dot(x);
        let mut dobj = b_vec.dot(y);
        for (f, zb) in problem.f0.iter().zip(z) {
            dobj -= f.dot(zb);
        }
        (pobj, dobj)
    };

    for it in 0..=settings.max_iter {
        final_it = it;
        let fx = f_of(problem, &x);
        let rp: Vec<Mat> = fx.iter().zip(&s).map(|(f, sb)| f - sb).collect();
        let rd = &problem.c - adjoint(problem, &z, &nonzero) - a_mat.tr_mul(&y);
        let re = &b_vec - &a_mat * &x;
        let mut zs = 0.0;
        for (zb, sb) in z.iter().zip(&s) {
            zs += zb.dot(sb);
        }
        let mu = zs / nu;
        let (pobj, dobj) = objectives(&x, &z, &y);
        let gap = pobj - dobj;
        let pres = rp.iter().map(max_abs).fold(0.0f64, f64::max) / norm_f0;
        let dres = rd.iter().fold(0.0f64, |a, &v| a.max(v.abs())) / norm_c;
        let eres = re.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let err = pres.max(dres).max(eres).max(gap.abs());

        if best.as_ref().is_none_or(|b| err < b.err) {
            best = Some(Best { x: x.clone(), z: z.clone(), y: y.clone(), err, gap, mu });
        }
        if pres <= tol && dres <= tol && eres <= tol && gap.abs() <= tol {
            return Ok(SdpSolution {
                x,
                z,
                y,
                status: SdpStatus::Optimal,
                iterations: it,
                primal_objective: pobj,
                dual_objective: dobj,
                gap,
                mu,
            });
        }
        if it == settings.max_iter {
            break;
        }

        // divergence of the dual iterate with a vanishing adjoint residual
        // certifies primal infeasibility; mirrored check for the primal
        let zn = z.iter().map(max_abs).fold(0.0f64, f64::max)
            + y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let xn = x.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if zn > RAY_NORM {
            let hd = adjoint(problem, &z, &nonzero) + a_mat.tr_mul(&y);
            let hdmax = hd.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if hdmax / zn < RAY_TOL && dobj / zn > RAY_TOL {
                return Ok(SdpSolution {
                    x,
                    z,
                    y,
                    status: SdpStatus::PrimalInfeasible,
                    iterations: it,
                    primal_objective: pobj,
                    dual_objective: dobj,
                    gap,
                    mu,
                });
            }
        }
        if xn > RAY_NORM {
            let mins = fx
                .iter()
                .zip(&problem.f0)
                .map(|(f, f0)| min_eig(&(f - f0)))
                .fold(f64::INFINITY, f64::min)
                / xn;
            let eq_ray = if m > 0 {
                (&a_mat * &x).iter().fold(0.0f64, |a, &v| a.max(v.abs())) / xn < RAY_TOL
            } else {
                true
            };
            if mins > -RAY_TOL && pobj / xn < -RAY_TOL && eq_ray {
                return Ok(SdpSolution {
                    x,
                    z,
                    y,
                    status: SdpStatus::DualInfeasible,
                    iterations: it,
                    primal_objective: pobj,
                    dual_objective: dobj,
                    gap,
                    mu,
                });
            }
        }

        let bail = |best: &Option<Best>, it: usize| -> SdpSolution {
            let b = best.as_ref().expect("best iterate recorded before any step");
            let status =
                if b.err <= tol { SdpStatus::Optimal } else { SdpStatus::NumericalTrouble };
            let (pobj, dobj) = objectives(&b.x, &b.z, &b.y);
            SdpSolution {
                x: b.x.clone(),
                z: b.z.clone(),
                y: b.y.clone(),
                status,
                iterations: it,
                primal_objective: pobj,
                dual_objective: dobj,
                gap: b.gap,
                mu: b.mu,
            }
        };

        let sc: Vec<Scaling> = {
            let mut v = Vec::with_capacity(nblk);
            let mut failed = false;
            for b in 0..nblk {
                match Scaling::new(&s[b], &z[b]) {
                    Ok(scb) => v.push(scb),
                    Err(NumericalBail) => {
                        failed = true;
                        break;
                    }
                }
            }
            if failed {
                return Ok(bail(&best, it));
            }
            v
        };

        // T[:, i] = svec of the scaled coefficient matrices W^{-1/2} F_i W^{-1/2}
        let mut t_mat = Mat::zeros(rows, t);
        {
            let mut scratch = vec![0.0; rows];
            for i in 0..t {
                let mut r0 = 0;
                for b in 0..nblk {
                    let nb = dims[b] * (dims[b] + 1) / 2;
                    if nonzero[i][b] {
                        let conj = sc[b].conj_pow(&problem.fs[i][b], -0.5);
                        svec_into(&mut scratch[..nb], &conj);
                        for (k, &val) in scratch[..nb].iter().enumerate() {
                            t_mat[(r0 + k, i)] = val;
                        }
                    }
                    r0 += nb;
                }
            }
        }

        let scaled_rhs = |rc: &[Mat]| -> Vec64 {
            let mut q = Vec64::zeros(rows);
            let mut scratch = vec![0.0; rows];
            let mut r0 = 0;
            for b in 0..nblk {
                let nb = dims[b] * (dims[b] + 1) / 2;
                let conj = sc[b].conj_pow(&(&rc[b] - &rp[b]), -0.5);
                svec_into(&mut scratch[..nb], &conj);
                for (k, &val) in scratch[..nb].iter().enumerate() {
                    q[r0 + k] = val;
                }
                r0 += nb;
            }
            q
        };

        let tn = if m > 0 { &t_mat * &q_a } else { t_mat.clone() };
        let (lh, ll) = {
            let (gh, gl) = dd::gram_dd(&tn);
            match dd::chol_dd(&gh, &gl) {
                Ok(f) => f,
                Err(_) => return Ok(bail(&best, it)),
            }
        };

        // returns (dx, dy, v) with v = q - T dx assembled in double-double,
        // so the recovered dZ satisfies the dual equation against the same
        // Gram matrix the factorization used
        let solve_kkt = |rc: &[Mat]| -> (Vec64, Vec64, Vec64) {
            let q = scaled_rhs(rc);
            if m == 0 {
                let h = t_mat.tr_mul(&q) - &rd;
                let (dxh, dxl) = dd::chol_solve_dd(&lh, &ll, &h);
                let (th, tl) = dd::matvec_dd(&t_mat, &dxh, &dxl);
                let mut v = Vec64::zeros(rows);
                for k in 0..rows {
                    v[k] = dd::Dd::from_f64(q[k]).sub(dd::Dd::new(th[k], tl[k])).to_f64();
                }
                (&dxh + &dxl, Vec64::zeros(0), v)
            } else {
                let xp = &a_pinv * &re;
                let h = q_a.tr_mul(&(t_mat.tr_mul(&(&q - &t_mat * &xp)) - &rd));
                let (uh, ul) = dd::chol_solve_dd(&lh, &ll, &h);
                let (mut gh, mut gl) = dd::matvec_dd(&q_a, &uh, &ul);
                for k in 0..t {
                    let g = dd::Dd::new(gh[k], gl[k]).add(dd::Dd::from_f64(xp[k]));
                    gh[k] = g.hi;
                    gl[k] = g.lo;
                }
                let dx = &gh + &gl;
                let (th, tl) = dd::matvec_dd(&t_mat, &gh, &gl);
                let mut v = Vec64::zeros(rows);
                for k in 0..rows {
                    v[k] = dd::Dd::from_f64(q[k]).sub(dd::Dd::new(th[k], tl[k])).to_f64();
                }
                let dy = a_pinv.tr_mul(&(&rd - t_mat.tr_mul(&v)));
                (dx, dy, v)
            }
        };

        let newton = |rc: &[Mat]| -> (Vec64, Vec64, Vec<Mat>, Vec<Mat>) {
            let (dx, dy, v) = solve_kkt(rc);
            let mut ds = rp.clone();
            for i in 0..t {
                if dx[i] == 0.0 {
                    continue;
                }
                for b in 0..nblk {
                    if nonzero[i][b] {
                        ds[b] += &problem.fs[i][b] * dx[i];
                    }
                }
            }
            let mut dz = Vec::with_capacity(nblk);
            let mut r0 = 0;
            for b in 0..nblk {
                let d = dims[b];
                let nb = d * (d + 1) / 2;
                let mb = sc[b].conj_pow(&smat_from(&v.as_slice()[r0..r0 + nb], d), -0.5);
                dz.push(symmetrized(&mb));
                r0 += nb;
            }
            (dx, dy, ds, dz)
        };

        // predictor: pure Newton step toward complementarity zero
        let rca: Vec<Mat> = s.iter().map(|sb| -sb).collect();
        let (_dxa, _dya, dsa, dza) = newton(&rca);
        let aff =
            1.0f64.min(STEP_FRACTION * max_step(&s, &dsa)).min(STEP_FRACTION * max_step(&z, &dza));
        let mut mu_aff = 0.0;
        for b in 0..nblk {
            mu_aff += (&z[b] + aff * &dza[b]).dot(&(&s[b] + aff * &dsa[b]));
        }
        mu_aff /= nu;
        // never aim below a fraction of the target complementarity, so the
        // endgame cannot overshoot into the region where scaling roundoff
        // dominates the residuals
        let sig_floor = 1.0f64.min(0.2 * tol / (nu * mu));
        let sig = ((mu_aff / mu).powi(3)).clamp(sig_floor, 1.0);

        let rc: Vec<Mat> = (0..nblk)
            .map(|b| sig * mu * &sc[b].zinv - &s[b] - sc[b].lyap_corr(&dza[b], &dsa[b]))
            .collect();
        let (dx, dy, ds, dz) = newton(&rc);
        let al =
            1.0f64.min(STEP_FRACTION * max_step(&s, &ds)).min(STEP_FRACTION * max_step(&z, &dz));

        x += al * &dx;
        y += al * &dy;
        for b in 0..nblk {
            s[b] = symmetrized(&(&s[b] + al * &ds[b]));
            z[b] = symmetrized(&(&z[b] + al * &dz[b]));
        }
    }

    let b = best.expect("loop ran at least once");
    let status = if b.err <= tol { SdpStatus::Optimal } else { SdpStatus::IterationLimit };
    let (pobj, dobj) = objectives(&b.x, &b.z, &b.y);
    Ok(SdpSolution {
        x: b.x,
        z: b.z,
        y: b.y,
        status,
        iterations: final_it,
        primal_objective: pobj,
        dual_objective: dobj,
        gap: b.gap,
        mu: b.mu,
    })
}
