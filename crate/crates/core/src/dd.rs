//! Double-double arithmetic: each value is an unevaluated sum `hi + lo` with
//! `|lo| <= ulp(hi)/2`, giving roughly 32 significant digits.
//!
//! The solver's Schur complement reaches condition numbers near 1/eps^2 at
//! convergence, where plain f64 Cholesky loses every digit. Forming the Gram
//! matrix, factoring, and back-substituting in double-double keeps the
//! direction accurate without iterative refinement, which cannot converge at
//! those condition numbers.

use nalgebra::{DMatrix, DVector};

type Mat = DMatrix<f64>;
type Vec64 = DVector<f64>;

/// Cholesky pivot was not positive: the matrix is numerically indefinite.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NotPositiveDefinite;

/// Error-free sum: returns `(s, e)` with `s = fl(a+b)` and `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

/// `two_sum` specialization valid when `|a| >= |b|` or `s` absorbs `b`.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Error-free product via fused multiply-add: `a * b = p + e` exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + (self.lo + other.lo);
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    #[inline]
    pub fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, y: f64) -> Self {
        let (p, e) = two_prod(self.hi, y);
        let e = e + self.lo * y;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    #[inline]
    pub fn div(self, other: Self) -> Self {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }
    }

    /// Square root by one dd Newton step on the f64 estimate.
    #[inline]
    pub fn sqrt(self) -> Self {
        let r = self.hi.sqrt();
        let p = Dd::from_f64(r).mul(Dd::from_f64(r));
        let d = self.sub(p);
        let corr = d.hi / (2.0 * r);
        let (hi, lo) = quick_two_sum(r, corr);
        Self { hi, lo }
    }
}

/// `G = T^T T` accumulated entrywise in double-double.
///
/// Each product enters through `two_prod`, so the only rounding is in the dd
/// accumulation itself; the result is correct to ~30 digits even when the
/// columns of `T` span 9 orders of magnitude.
pub(crate) fn gram_dd(t: &Mat) -> (Mat, Mat) {
    let (rows, cols) = t.shape();
    let mut gh = Mat::zeros(cols, cols);
    let mut gl = Mat::zeros(cols, cols);
    for j in 0..cols {
        for i in 0..=j {
            let mut acc = Dd::default();
            for k in 0..rows {
                let (p, e) = two_prod(t[(k, i)], t[(k, j)]);
                acc = acc.add(Dd::new(p, e));
            }
            gh[(i, j)] = acc.hi;
            gl[(i, j)] = acc.lo;
            gh[(j, i)] = acc.hi;
            gl[(j, i)] = acc.lo;
        }
    }
    (gh, gl)
}

/// Lower Cholesky factor of a dd symmetric matrix, in dd.
pub(crate) fn chol_dd(gh: &Mat, gl: &Mat) -> Result<(Mat, Mat), NotPositiveDefinite> {
    let t = gh.nrows();
    let mut lh = Mat::zeros(t, t);
    let mut ll = Mat::zeros(t, t);
    for j in 0..t {
        let mut d = Dd::new(gh[(j, j)], gl[(j, j)]);
        for k in 0..j {
            let ljk = Dd::new(lh[(j, k)], ll[(j, k)]);
            d = d.sub(ljk.mul(ljk));
        }
        if d.hi <= 0.0 {
            return Err(NotPositiveDefinite);
        }
        let p = d.sqrt();
        lh[(j, j)] = p.hi;
        ll[(j, j)] = p.lo;
        for i in j + 1..t {
            let mut s = Dd::new(gh[(i, j)], gl[(i, j)]);
            for k in 0..j {
                s = s.sub(Dd::new(lh[(i, k)], ll[(i, k)]).mul(Dd::new(lh[(j, k)], ll[(j, k)])));
            }
            let q = s.div(p);
            lh[(i, j)] = q.hi;
            ll[(i, j)] = q.lo;
        }
    }
    Ok((lh, ll))
}

/// Solves `L L^T x = b` with the dd factor from [`chol_dd`]; `b` is f64.
pub(crate) fn chol_solve_dd(lh: &Mat, ll: &Mat, b: &Vec64) -> (Vec64, Vec64) {
    let t = lh.nrows();
    let mut y: Vec<Dd> = b.iter().map(|&v| Dd::from_f64(v)).collect();
    for j in 0..t {
        let mut s = y[j];
        for k in 0..j {
            s = s.sub(Dd::new(lh[(j, k)], ll[(j, k)]).mul(y[k]));
        }
        y[j] = s.div(Dd::new(lh[(j, j)], ll[(j, j)]));
    }
    for j in (0..t).rev() {
        let mut s = y[j];
        for k in j + 1..t {
            s = s.sub(Dd::new(lh[(k, j)], ll[(k, j)]).mul(y[k]));
        }
        y[j] = s.div(Dd::new(lh[(j, j)], ll[(j, j)]));
    }
    let mut xh = Vec64::zeros(t);
    let mut xl = Vec64::zeros(t);
    for j in 0..t {
        xh[j] = y[j].hi;
        xl[j] = y[j].lo;
    }
    (xh, xl)
}

/// `A (xh + xl)` in dd for an f64 matrix `A` and dd vector `x`.
pub(crate) fn matvec_dd(a: &Mat, xh: &Vec64, xl: &Vec64) -> (Vec64, Vec64) {
    let (rows, cols) = a.shape();
    let mut yh = Vec64::zeros(rows);
    let mut yl = Vec64::zeros(rows);
    for i in 0..rows {
        let mut acc = Dd::default();
        for k in 0..cols {
            acc = acc.add(Dd::new(xh[k], xl[k]).mul_f64(a[(i, k)]));
        }
        yh[i] = acc.hi;
        yl[i] = acc.lo;
    }
    (yh, yl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_preserves_tiny_addend() {
        let (s, e) = two_sum(1.0, 1e-30);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-30);
    }

    #[test]
    fn two_prod_error_is_exact() {
        let a = 1.0 + 2f64.powi(-30);
        let b = 1.0 - 2f64.powi(-30);
        let (p, e) = two_prod(a, b);
        // a*b = 1 - 2^-60 exactly; p rounds to 1, e carries the -2^-60
        assert_eq!(p, 1.0);
        assert_eq!(e, -(2f64.powi(-60)));
    }

    #[test]
    fn dd_sqrt_squares_back() {
        let two = Dd::from_f64(2.0);
        let r = two.sqrt();
        let back = r.mul(r).sub(two);
        assert!(back.to_f64().abs() < 1e-30);
    }

    #[test]
    fn dd_div_round_trips() {
        let x = Dd::from_f64(std::f64::consts::PI);
        let y = Dd::from_f64(std::f64::consts::E);
        let q = x.div(y);
        let back = q.mul(y).sub(x);
        assert!(back.to_f64().abs() < 1e-30);
    }

    /// Gram + Cholesky + solve on a matrix whose squared condition number is
    /// ~1e18: the correctly rounded f64 Gram matrix is already indefinite to
    /// f64 Cholesky, while dd factors it and leaves a ~1e-32 relative
    /// residual. The `i*j` term in the angle keeps the matrix full rank (an
    /// angle affine in `i + j` would make it a sum of two rank-2 matrices).
    #[test]
    fn dd_cholesky_survives_condition_1e18() {
        let t = 24;
        let mut m = Mat::zeros(t, t);
        for i in 0..t {
            let row_scale = 10f64.powf(8.0 * (i as f64) / ((t - 1) as f64));
            for j in 0..t {
                let angle = 1.0 + 0.7 * i as f64 + 1.3 * j as f64 + 0.37 * (i * j) as f64;
                m[(i, j)] = row_scale * angle.sin();
            }
        }
        let (gh, gl) = gram_dd(&m);
        assert!(gh.clone().cholesky().is_none(), "f64 cholesky should break down here");
        let (lh, ll) = chol_dd(&gh, &gl).expect("gram matrix is PD in dd");
        let b = Vec64::from_fn(t, |i, _| ((i as f64) * 0.7).cos() * gh[(i, i)].sqrt());
        let (xh, xl) = chol_solve_dd(&lh, &ll, &b);
        let mut worst = 0.0f64;
        for i in 0..t {
            let mut acc = Dd::new(-b[i], 0.0);
            for k in 0..t {
                acc = acc.add(Dd::new(gh[(i, k)], gl[(i, k)]).mul(Dd::new(xh[k], xl[k])));
            }
            worst = worst.max(acc.to_f64().abs());
        }
        let scale = gh.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
            * xh.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
        assert!(worst <= 1e-28 * scale, "dd residual {worst:.2e} against scale {scale:.2e}");
    }

    #[test]
    fn chol_dd_rejects_indefinite() {
        let g = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let z = Mat::zeros(2, 2);
        assert!(chol_dd(&g, &z).is_err());
    }

    #[test]
    fn matvec_dd_matches_exact_small_case() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 1e-20, 1.0, -1e-20]);
        let xh = Vec64::from_vec(vec![1.0, 1.0]);
        let xl = Vec64::zeros(2);
        let (yh, yl) = matvec_dd(&a, &xh, &xl);
        assert_eq!(yh[0], 1.0);
        assert_eq!(yl[0], 1e-20);
        assert_eq!(yh[1], 1.0);
        assert_eq!(yl[1], -1e-20);
    }
}
