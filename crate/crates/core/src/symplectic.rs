//! Symplectic linear algebra over real symmetric matrices and the Gaussian
//! state quantities built on it.
//!
//! Quadratures are ordered `(x1, p1, ..., xn, pn)`; covariance matrices are
//! vacuum-normalized so the vacuum state is the identity. Complex conditions
//! of the form `A + iB >= 0` are evaluated through the real embedding
//! `[[A, -B], [B, A]]`, which is positive semidefinite exactly when the
//! complex matrix is; this keeps all arithmetic real.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Mat = DMatrix<f64>;

#[derive(Debug, Error)]
pub enum SymplecticError {
    #[error("matrix is {rows}x{cols}, expected square with even dimension")]
    BadShape { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max |M - M^T| = {deviation:.3e}")]
    NotSymmetric { deviation: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPsd { min_eig: f64 },
    #[error("mode index {mode} out of range 1..={modes}")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("matrix is not symplectic: max |S sigma S^T - sigma| = {violation:.3e}")]
    NotSymplectic { violation: f64 },
    #[error("not a permutation of 1..={modes}")]
    InvalidPermutation { modes: usize },
    #[error("not a valid covariance matrix: min eigenvalue of the Heisenberg embedding is {min_eig:.3e}")]
    InvalidCovariance { min_eig: f64 },
    #[error("margin {margin} is <= -1, outside the domain of the p-measure")]
    MarginOutOfRange { margin: f64 },
    #[error("parameter {name} = {value} must be positive")]
    NonPositive { name: &'static str, value: f64 },
    #[error("partition sizes {partition_modes} do not sum to the matrix mode count {modes}")]
    PartitionMismatch { partition_modes: usize, modes: usize },
    #[error("partition must contain at least one party, every party at least one mode")]
    EmptyPartition,
}

/// Symmetry tolerance enforced when constructing a [`CovarianceMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Tolerance for symplectic-property checks (`S sigma S^T = sigma`).
pub const SYMPLECTIC_TOL: f64 = 1e-8;

/// A `2n x 2n` real symmetric matrix of second moments in `(x1, p1, ..., xn, pn)`
/// ordering. Construction enforces shape and symmetry; Heisenberg validity is
/// checked separately by [`is_valid_covariance`] because witness intermediates
/// are legitimately invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    entries: Mat,
}

impl CovarianceMatrix {
    pub fn new(entries: Mat) -> Result<Self, SymplecticError> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(SymplecticError::BadShape { rows, cols });
        }
        let deviation = max_abs(&(&entries - entries.transpose()));
        if deviation > SYMMETRY_TOL {
            return Err(SymplecticError::NotSymmetric { deviation });
        }
        Ok(Self { modes: rows / 2, entries })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    pub fn into_matrix(self) -> Mat {
        self.entries
    }
}

/// A partition of `n` modes into parties, given as the list of modes per party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModePartition {
    sizes: Vec<usize>,
}

impl ModePartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self, SymplecticError> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(SymplecticError::EmptyPartition);
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parties(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_modes(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Errors unless the partition covers exactly the modes of `gamma`.
    pub fn check_against(&self, gamma: &CovarianceMatrix) -> Result<(), SymplecticError> {
        if self.total_modes() != gamma.modes() {
            return Err(SymplecticError::PartitionMismatch {
                partition_modes: self.total_modes(),
                modes: gamma.modes(),
            });
        }
        Ok(())
    }

    /// Row/column index ranges of each party in the `2n x 2n` matrix.
    pub fn party_index_sets(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.sizes.len());
        let mut offset = 0;
        for &nk in &self.sizes {
            out.push((2 * offset..2 * (offset + nk)).collect());
            offset += nk;
        }
        out
    }
}

/// The canonical antisymmetric form: direct sum of `n` copies of `[[0,1],[-1,0]]`.
pub fn symplectic_form(n: usize) -> Mat {
    let mut s = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        s[(2 * i, 2 * i + 1)] = 1.0;
        s[(2 * i + 1, 2 * i)] = -1.0;
    }
    s
}

/// Real embedding of `A + iB` (for symmetric `A`, antisymmetric `B`):
/// `[[A, -B], [B, A]]`.
pub fn real_embedding(a: &Mat, b: &Mat) -> Mat {
    let d = a.nrows();
    let mut m = Mat::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(a);
    m.view_mut((0, d), (d, d)).copy_from(&(-b));
    m.view_mut((d, 0), (d, d)).copy_from(b);
    m.view_mut((d, d), (d, d)).copy_from(a);
    m
}

/// True iff `gamma + i sigma >= -tol`, the Heisenberg uncertainty condition.
pub fn is_valid_covariance(gamma: &CovarianceMatrix, tol: f64) -> bool {
    heisenberg_min_eig(gamma) >= -tol
}

/// Smallest eigenvalue of the real embedding `[[gamma, -sigma], [sigma, gamma]]`.
pub fn heisenberg_min_eig(gamma: &CovarianceMatrix) -> f64 {
    let sigma = symplectic_form(gamma.modes());
    min_eig(&real_embedding(gamma.matrix(), &sigma))
}

/// Symplectic eigenvalues of a symmetric positive semidefinite matrix,
/// descending, each counted once (`n` values for a `2n x 2n` input).
///
/// Computed as the paired singular values of `M^{1/2} sigma M^{1/2}`, which
/// extends continuously to singular `M` (rank-deficient witnesses included).
pub fn symplectic_eigenvalues(m: &Mat) -> Result<Vec<f64>, SymplecticError> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 || rows % 2 != 0 {
        return Err(SymplecticError::BadShape { rows, cols });
    }
    let n = rows / 2;
    let sym = symmetrized(m);
    let (eigs, q) = eigh(&sym);
    let scale = eigs.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
    if eigs[0] < -1e-8 * scale {
        return Err(SymplecticError::NotPsd { min_eig: eigs[0] });
    }
    let root = {
        let mut d = DVector::zeros(rows);
        for i in 0..rows {
            d[i] = eigs[i].max(0.0).sqrt();
        }
        &q * Mat::from_diagonal(&d) * q.transpose()
    };
    let k = &root * symplectic_form(n) * &root;
    let (mut sq, _) = eigh(&(k.transpose() * &k));
    // eigenvalues of K^T K are the s_j^2, each twice; pair adjacent values
    sq.reverse();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let a = sq[2 * j].max(0.0).sqrt();
        let b = sq[2 * j + 1].max(0.0).sqrt();
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Sum of the symplectic eigenvalues, each counted once.
pub fn symplectic_trace(m: &Mat) -> Result<f64, SymplecticError> {
    Ok(symplectic_eigenvalues(m)?.iter().sum())
}

/// Sign-flips the momentum row and column of each listed mode (1-based).
pub fn partial_transpose(
    gamma: &CovarianceMatrix,
    modes: &[usize],
) -> Result<CovarianceMatrix, SymplecticError> {
    let n = gamma.modes();
    let mut m = gamma.matrix().clone();
    for &mode in modes {
        if mode == 0 || mode > n {
            return Err(SymplecticError::ModeOutOfRange { mode, modes: n });
        }
        let p = 2 * (mode - 1) + 1;
        for j in 0..2 * n {
            m[(p, j)] = -m[(p, j)];
        }
        for i in 0..2 * n {
            m[(i, p)] = -m[(i, p)];
        }
    }
    CovarianceMatrix::new(m)
}

/// `P_p M P_p + P_x M P_x`: zeroes every x-p cross entry.
pub fn pinch_xp(m: &Mat) -> Mat {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i % 2 != j % 2 {
                out[(i, j)] = 0.0;
            }
        }
    }
    out
}

/// Congruence `S gamma S^T` after verifying `S sigma S^T = sigma`.
pub fn apply_symplectic(
    gamma: &CovarianceMatrix,
    s: &Mat,
) -> Result<CovarianceMatrix, SymplecticError> {
    let violation = symplectic_violation(s);
    if violation > SYMPLECTIC_TOL {
        return Err(SymplecticError::NotSymplectic { violation });
    }
    let m = s * gamma.matrix() * s.transpose();
    CovarianceMatrix::new(symmetrized(&m))
}

/// Max-norm of `S sigma S^T - sigma`.
pub fn symplectic_violation(s: &Mat) -> f64 {
    let n = s.nrows() / 2;
    let sigma = symplectic_form(n);
    max_abs(&(s * &sigma * s.transpose() - &sigma))
}

/// 50:50 beam splitter between modes `i` and `j` (1-based): acts as
/// `(1/sqrt2) [[1, 1], [-1, 1]]` on each quadrature pair `(q_i, q_j)`.
pub fn beam_splitter_50_50(n: usize, i: usize, j: usize) -> Result<Mat, SymplecticError> {
    for &mode in &[i, j] {
        if mode == 0 || mode > n {
            return Err(SymplecticError::ModeOutOfRange { mode, modes: n });
        }
    }
    if i == j {
        return Err(SymplecticError::ModeOutOfRange { mode: j, modes: n });
    }
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut s = Mat::identity(2 * n, 2 * n);
    for q in 0..2 {
        let a = 2 * (i - 1) + q;
        let b = 2 * (j - 1) + q;
        s[(a, a)] = c;
        s[(a, b)] = c;
        s[(b, a)] = -c;
        s[(b, b)] = c;
    }
    Ok(s)
}

/// Single-mode squeezer on mode `i` (1-based): `x -> d x`, `p -> p / d`.
pub fn squeezer(n: usize, i: usize, d: f64) -> Result<Mat, SymplecticError> {
    if i == 0 || i > n {
        return Err(SymplecticError::ModeOutOfRange { mode: i, modes: n });
    }
    if d <= 0.0 {
        return Err(SymplecticError::NonPositive { name: "d", value: d });
    }
    let mut s = Mat::identity(2 * n, 2 * n);
    s[(2 * (i - 1), 2 * (i - 1))] = d;
    s[(2 * (i - 1) + 1, 2 * (i - 1) + 1)] = 1.0 / d;
    Ok(s)
}

/// Permutation of quadrature pairs: mode `k` is sent to mode `perm[k-1]`
/// (1-based entries forming a permutation of `1..=n`).
pub fn mode_permutation(n: usize, perm: &[usize]) -> Result<Mat, SymplecticError> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(SymplecticError::InvalidPermutation { modes: n });
    }
    for &p in perm {
        if p == 0 || p > n || seen[p - 1] {
            return Err(SymplecticError::InvalidPermutation { modes: n });
        }
        seen[p - 1] = true;
    }
    let mut s = Mat::zeros(2 * n, 2 * n);
    for (k, &p) in perm.iter().enumerate() {
        for q in 0..2 {
            s[(2 * (p - 1) + q, 2 * k + q)] = 1.0;
        }
    }
    Ok(s)
}

/// Von Neumann entropy of the Gaussian state with covariance `gamma`, in nats:
/// `sum_k (N_k+1) ln(N_k+1) - N_k ln N_k` with `N_k = (s_k - 1)/2`.
pub fn gaussian_entropy(gamma: &CovarianceMatrix) -> Result<f64, SymplecticError> {
    let min = heisenberg_min_eig(gamma);
    if min < -1e-8 {
        return Err(SymplecticError::InvalidCovariance { min_eig: min });
    }
    let mut h = 0.0;
    for s in symplectic_eigenvalues(gamma.matrix())? {
        let nk = (s.max(1.0) - 1.0) / 2.0;
        if nk > 0.0 {
            h += (nk + 1.0) * (nk + 1.0).ln() - nk * nk.ln();
        }
    }
    Ok(h)
}

/// `1 / (1 + x_e)` for a separability margin `x_e > -1`.
pub fn p_measure(x_e: f64) -> Result<f64, SymplecticError> {
    if x_e <= -1.0 {
        return Err(SymplecticError::MarginOutOfRange { margin: x_e });
    }
    Ok(1.0 / (1.0 + x_e))
}

/// Symmetric eigendecomposition with eigenvalues ascending.
/// Returns `(eigenvalues, Q)` with columns of `Q` the matching eigenvectors.
pub(crate) fn eigh(m: &Mat) -> (Vec<f64>, Mat) {
    let se = nalgebra::SymmetricEigen::new(symmetrized(m));
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let d = se.eigenvalues.len();
    let mut vals = Vec::with_capacity(d);
    let mut q = Mat::zeros(d, d);
    for (new, &old) in idx.iter().enumerate() {
        vals.push(se.eigenvalues[old]);
        q.set_column(new, &se.eigenvectors.column(old));
    }
    (vals, q)
}

pub(crate) fn symmetrized(m: &Mat) -> Mat {
    0.5 * (m + m.transpose())
}

pub(crate) fn min_eig(m: &Mat) -> f64 {
    symmetrized(m).symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

pub(crate) fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}
