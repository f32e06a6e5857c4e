//! Factories for reference covariance matrices and seeded random instances.

use nalgebra::DVector;
use thiserror::Error;

use crate::symplectic::{
    apply_symplectic, beam_splitter_50_50, mode_permutation, partial_transpose, squeezer,
    CovarianceMatrix, Mat, SymplecticError,
};

#[derive(Debug, Error)]
pub enum StateError {
    #[error("parameter {name} = {value} violates: {requirement}")]
    BadParameter { name: &'static str, value: f64, requirement: &'static str },
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

/// Deterministic counter-based generator (SplitMix64). Same seed, same
/// sequence, on every platform; no shared state between instances.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n).
    pub fn next_below(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n
    }
}

/// Two-mode squeezed state: diagonal blocks `cosh(2r) I`, off-diagonal block
/// `sinh(2r) diag(-1, +1)`, so `(x1+x2)/sqrt2` and `(p1-p2)/sqrt2` are the
/// squeezed combinations and the a=1 pair test evaluates to `e^(-2r)`.
pub fn two_mode_squeezed(r: f64) -> Result<CovarianceMatrix, StateError> {
    if r < 0.0 {
        return Err(StateError::BadParameter { name: "r", value: r, requirement: "r >= 0" });
    }
    let c = (2.0 * r).cosh();
    let s = (2.0 * r).sinh();
    let mut m = Mat::identity(4, 4) * c;
    m[(0, 2)] = -s;
    m[(2, 0)] = -s;
    m[(1, 3)] = s;
    m[(3, 1)] = s;
    Ok(CovarianceMatrix::new(m)?)
}

/// A four-mode state, entangled across the [2,2] split, whose partial
/// transpose is still Heisenberg-valid: entanglement invisible to the PPT
/// test but caught by the optimal witness.
pub fn ww_state() -> CovarianceMatrix {
    #[rustfmt::skip]
    let rows: [f64; 64] = [
        2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0,
        0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0, 0.0,
        0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, -1.0, 0.0, 4.0, 0.0, 0.0,
        0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0, 0.0,
        0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0,
    ];
    CovarianceMatrix::new(Mat::from_row_slice(8, 8, &rows)).expect("fixed symmetric matrix")
}

/// Fully symmetric N-mode pure state from one r1-squeezer and N-1
/// r2-squeezers mixed on a balanced splitter network: block-Toeplitz with
/// `diag(a, b)` on the diagonal and `diag(c, d)` elsewhere.
pub fn ghz_covariance(parties: usize, r1: f64, r2: f64) -> Result<CovarianceMatrix, StateError> {
    if parties < 2 {
        return Err(StateError::BadParameter {
            name: "parties",
            value: parties as f64,
            requirement: "at least 2 parties",
        });
    }
    for (name, v) in [("r1", r1), ("r2", r2)] {
        if v <= 0.0 {
            return Err(StateError::BadParameter { name, value: v, requirement: "positive" });
        }
    }
    let nf = parties as f64;
    let a = (2.0 * r1).exp() / nf + (nf - 1.0) * (-2.0 * r2).exp() / nf;
    let b = (-2.0 * r1).exp() / nf + (nf - 1.0) * (2.0 * r2).exp() / nf;
    let c = ((2.0 * r1).exp() - (-2.0 * r2).exp()) / nf;
    let d = ((-2.0 * r1).exp() - (2.0 * r2).exp()) / nf;
    let mut m = Mat::zeros(2 * parties, 2 * parties);
    for i in 0..parties {
        for j in 0..parties {
            let (u, v) = if i == j { (a, b) } else { (c, d) };
            m[(2 * i, 2 * j)] = u;
            m[(2 * i + 1, 2 * j + 1)] = v;
        }
    }
    Ok(CovarianceMatrix::new(m)?)
}

/// Four-mode state of two entangled pairs arranged so that a final 50:50
/// beam splitter between the inner modes swaps the entanglement onto the
/// outer pair. Built from `diag(e^(-2r), e^(-2r), a e^(2r), a e^(2r))` by a
/// 50:50 beam splitter and a partial transposition on mode 2, once in each
/// beam-splitter orientation; the two mirrored pairs sit on modes 1-2 and
/// 3-4 before the final splitter mixes modes 2 and 3.
pub fn swap_state(r: f64, alpha: f64) -> Result<CovarianceMatrix, StateError> {
    if r <= 0.0 {
        return Err(StateError::BadParameter { name: "r", value: r, requirement: "positive" });
    }
    if alpha < 1.0 {
        return Err(StateError::BadParameter {
            name: "alpha",
            value: alpha,
            requirement: "at least 1",
        });
    }
    let gp = CovarianceMatrix::new(Mat::from_diagonal(&DVector::from_vec(vec![
        (-2.0 * r).exp(),
        (-2.0 * r).exp(),
        alpha * (2.0 * r).exp(),
        alpha * (2.0 * r).exp(),
    ])))?;
    let pair = |i: usize, j: usize| -> Result<CovarianceMatrix, StateError> {
        let b = beam_splitter_50_50(2, i, j)?;
        Ok(partial_transpose(&apply_symplectic(&gp, &b)?, &[2])?)
    };
    let p1 = pair(2, 1)?;
    let p2 = pair(1, 2)?;
    let mut g8 = Mat::zeros(8, 8);
    g8.view_mut((0, 0), (4, 4)).copy_from(p1.matrix());
    g8.view_mut((4, 4), (4, 4)).copy_from(p2.matrix());
    let b2 = beam_splitter_50_50(4, 3, 2)?;
    Ok(apply_symplectic(&CovarianceMatrix::new(g8)?, &b2)?)
}

/// The n-mode vacuum: identity covariance.
pub fn vacuum_state(n: usize) -> CovarianceMatrix {
    CovarianceMatrix::new(Mat::identity(2 * n, 2 * n)).expect("identity is a covariance matrix")
}

/// Seeded random valid covariance `S (I + D) S^T`: `D` is a nonnegative
/// diagonal with entries uniform in [0, mix], `S` a random product of
/// squeezers, 50:50 beam splitters, and mode swaps. Heisenberg-valid by
/// construction; identical output for identical arguments.
pub fn random_covariance(n: usize, mix: f64, seed: u64) -> Result<CovarianceMatrix, StateError> {
    if n == 0 {
        return Err(StateError::BadParameter {
            name: "n",
            value: 0.0,
            requirement: "at least one mode",
        });
    }
    if mix < 0.0 {
        return Err(StateError::BadParameter { name: "mix", value: mix, requirement: "mix >= 0" });
    }
    let mut rng = SplitMix64::new(seed);
    let mut base = Mat::identity(2 * n, 2 * n);
    for i in 0..2 * n {
        base[(i, i)] += mix * rng.next_f64();
    }
    let mut s = Mat::identity(2 * n, 2 * n);
    for _ in 0..3 * n {
        let op = match rng.next_below(3) {
            0 => {
                let mode = 1 + rng.next_below(n);
                let d = (1.2 * (rng.next_f64() - 0.5)).exp();
                squeezer(n, mode, d)?
            }
            1 if n >= 2 => {
                let i = 1 + rng.next_below(n);
                let mut j = 1 + rng.next_below(n);
                while j == i {
                    j = 1 + rng.next_below(n);
                }
                beam_splitter_50_50(n, i, j)?
            }
            _ if n >= 2 => {
                let mut perm: Vec<usize> = (1..=n).collect();
                let i = rng.next_below(n);
                let j = rng.next_below(n);
                perm.swap(i, j);
                mode_permutation(n, &perm)?
            }
            _ => continue,
        };
        s = op * s;
    }
    Ok(apply_symplectic(&CovarianceMatrix::new(base)?, &s)?)
}

/// `gamma + kappa * identity`: uniform classical noise admixture.
pub fn add_noise(gamma: &CovarianceMatrix, kappa: f64) -> Result<CovarianceMatrix, StateError> {
    if kappa < 0.0 {
        return Err(StateError::BadParameter {
            name: "kappa",
            value: kappa,
            requirement: "kappa >= 0",
        });
    }
    let d = gamma.matrix().nrows();
    Ok(CovarianceMatrix::new(gamma.matrix() + kappa * Mat::identity(d, d))?)
}
