//! Curved (product) refinements of linear witnesses.
//!
//! A witness splits by quadrature parity into `Z = Zx + Zp + Zxp`. Beyond the
//! linear test `Tr[Z gamma] >= 1`, separable second moments obey the tighter
//! product bound
//!
//! ```text
//! Tr[Zx gamma] Tr[Zp gamma] + Tr[Zxp gamma]/2 - Tr[Zxp gamma]^2/4  >=  1/4,
//! ```
//!
//! which is invariant under the one-parameter squeezing that rescales the two
//! quadrature sectors against each other, while the linear value is not. A
//! state missed by `Z` for every such rescaling can still violate the product
//! bound.

use thiserror::Error;

use crate::symplectic::{max_abs, symmetrized, CovarianceMatrix, Mat, ModePartition};
use crate::witnessprob::{validate_witness, WitnessError};

#[derive(Debug, Error)]
pub enum ProductError {
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error("matrix is {rows}x{cols}, expected square with even dimension")]
    BadShape { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },
    #[error("{name} component carries weight {weight:.3e} outside its quadrature sector")]
    WrongSupport { name: &'static str, weight: f64 },
    #[error("scaling parameter must be positive, got {value}")]
    NonPositiveScale { value: f64 },
    #[error("component trace {name} = {value:.3e} is not positive, no balancing scale exists")]
    DegenerateTrace { name: &'static str, value: f64 },
    #[error("the recomposed matrix fails the witness classification")]
    NotAWitness,
    #[error("witness blocks are for {witness} modes but the state has {state}")]
    ModeMismatch { witness: usize, state: usize },
}

fn check_square_even(m: &Mat) -> Result<usize, ProductError> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 || rows % 2 != 0 {
        return Err(ProductError::BadShape { rows, cols });
    }
    Ok(rows)
}

fn check_symmetric(m: &Mat) -> Result<(), ProductError> {
    let deviation = max_abs(&(m - m.transpose()));
    if deviation > 1e-10 {
        return Err(ProductError::NotSymmetric { deviation });
    }
    Ok(())
}

/// Quadrature parity of a row/column index: even indices are position-like,
/// odd indices momentum-like.
fn is_x(i: usize) -> bool {
    i.is_multiple_of(2)
}

fn sector_part(m: &Mat, keep: impl Fn(usize, usize) -> bool) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| if keep(i, j) { m[(i, j)] } else { 0.0 })
}

/// A witness split into its position block, momentum block, and cross block,
/// each embedded at full size.
#[derive(Debug, Clone)]
pub struct ProductWitness {
    zx: Mat,
    zp: Mat,
    zxp: Mat,
}

impl ProductWitness {
    /// Accepts the three components only if each is symmetric and supported
    /// on its own quadrature sector.
    pub fn new(zx: Mat, zp: Mat, zxp: Mat) -> Result<Self, ProductError> {
        let d = check_square_even(&zx)?;
        for m in [&zp, &zxp] {
            if m.shape() != (d, d) {
                let (rows, cols) = m.shape();
                return Err(ProductError::BadShape { rows, cols });
            }
        }
        check_symmetric(&zx)?;
        check_symmetric(&zp)?;
        check_symmetric(&zxp)?;
        type Sector<'a> = (&'static str, &'a Mat, fn(usize, usize) -> bool);
        let checks: [Sector; 3] = [
            ("x", &zx, |i, j| is_x(i) && is_x(j)),
            ("p", &zp, |i, j| !is_x(i) && !is_x(j)),
            ("xp", &zxp, |i, j| is_x(i) != is_x(j)),
        ];
        for (name, m, keep) in checks {
            let weight = max_abs(&(m - sector_part(m, keep)));
            if weight > 1e-12 {
                return Err(ProductError::WrongSupport { name, weight });
            }
        }
        Ok(Self { zx, zp, zxp })
    }

    pub fn zx(&self) -> &Mat {
        &self.zx
    }

    pub fn zp(&self) -> &Mat {
        &self.zp
    }

    pub fn zxp(&self) -> &Mat {
        &self.zxp
    }

    /// The witness the components came from: `Zx + Zp + Zxp`.
    pub fn recompose(&self) -> Mat {
        &self.zx + &self.zp + &self.zxp
    }
}

/// Splits a symmetric matrix by quadrature parity. Recomposing the parts
/// reproduces the input exactly.
pub fn decompose_xp(z: &Mat) -> Result<ProductWitness, ProductError> {
    check_square_even(z)?;
    check_symmetric(z)?;
    let zs = symmetrized(z);
    Ok(ProductWitness {
        zx: sector_part(&zs, |i, j| is_x(i) && is_x(j)),
        zp: sector_part(&zs, |i, j| !is_x(i) && !is_x(j)),
        zxp: sector_part(&zs, |i, j| is_x(i) != is_x(j)),
    })
}

/// Congruence by `S = sqrt(a) Px + Pp / sqrt(a)`: position entries scale by
/// `a`, momentum entries by `1/a`, cross entries stay. Every `a > 0` maps
/// witnesses to witnesses and leaves the product bound invariant.
pub fn scale_xp(m: &Mat, a: f64) -> Result<Mat, ProductError> {
    if a.is_nan() || a <= 0.0 {
        return Err(ProductError::NonPositiveScale { value: a });
    }
    check_square_even(m)?;
    let s = |i: usize| if is_x(i) { a.sqrt() } else { 1.0 / a.sqrt() };
    Ok(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s(i) * s(j)))
}

fn check_dims(pw: &ProductWitness, gamma: &CovarianceMatrix) -> Result<(), ProductError> {
    if pw.zx.nrows() != 2 * gamma.modes() {
        return Err(ProductError::ModeMismatch {
            witness: pw.zx.nrows() / 2,
            state: gamma.modes(),
        });
    }
    Ok(())
}

/// The product-criterion value
/// `Tr[Zx gamma] Tr[Zp gamma] + Tr[Zxp gamma]/2 - Tr[Zxp gamma]^2/4`;
/// values below 1/4 are unattainable by separable second moments.
pub fn product_value(pw: &ProductWitness, gamma: &CovarianceMatrix) -> Result<f64, ProductError> {
    check_dims(pw, gamma)?;
    let g = gamma.matrix();
    let tx = pw.zx.dot(g);
    let tp = pw.zp.dot(g);
    let txp = pw.zxp.dot(g);
    Ok(tx * tp + 0.5 * txp - 0.25 * txp * txp)
}

/// The rescaling that equalizes the two component traces on this state:
/// `a = sqrt(Tr[Zp gamma] / Tr[Zx gamma])`. At the balanced point the linear
/// value of the rescaled witness is smallest, `2 sqrt(Tr[Zx g] Tr[Zp g])`.
pub fn balance_parameter(
    pw: &ProductWitness,
    gamma: &CovarianceMatrix,
) -> Result<f64, ProductError> {
    check_dims(pw, gamma)?;
    let tx = pw.zx.dot(gamma.matrix());
    let tp = pw.zp.dot(gamma.matrix());
    if tx.is_nan() || tx <= 0.0 {
        return Err(ProductError::DegenerateTrace { name: "x", value: tx });
    }
    if tp.is_nan() || tp <= 0.0 {
        return Err(ProductError::DegenerateTrace { name: "p", value: tp });
    }
    Ok((tp / tx).sqrt())
}

/// Whether the product criterion certifies entanglement of `gamma`:
/// the recomposed matrix must pass the witness classification for the
/// partition, and the product value must fall below `1/4 - tol`. When a
/// component trace degenerates to zero the product bound carries no more
/// information than the linear one, and the linear verdict
/// `Tr[Z gamma] < 1 - tol` is returned instead.
pub fn detects_product(
    pw: &ProductWitness,
    gamma: &CovarianceMatrix,
    partition: &ModePartition,
    tol: f64,
) -> Result<bool, ProductError> {
    check_dims(pw, gamma)?;
    let z = pw.recompose();
    let report = validate_witness(&z, partition)?;
    if !report.passes() {
        return Err(ProductError::NotAWitness);
    }
    let tx = pw.zx.dot(gamma.matrix());
    let tp = pw.zp.dot(gamma.matrix());
    if tx <= 0.0 || tp <= 0.0 {
        return Ok(z.dot(gamma.matrix()) < 1.0 - tol);
    }
    Ok(product_value(pw, gamma)? < 0.25 - tol)
}
