//! PPT separability test for two-mode Gaussian states.
//!
//! A two-mode state with covariance blocks `[[A, C], [C^T, B]]` is entangled
//! iff the smallest symplectic eigenvalue `ν` of its partial transpose obeys
//! `ν² < 1/4`. With `Σ = det A + det B - 2 det C`,
//!
//! ```text
//! ν² = (Σ - sqrt(Σ² - 4 det V)) / 2
//! ```

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symplectic::{self, CovMatrix};

/// `ν²` at which a two-mode state stops being entangled.
pub const SEPARABILITY_THRESHOLD: f64 = 0.25;

/// Radicands down to this value are clamped to zero.
pub const RADICAND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessValue {
    pub nu_squared: f64,
    pub sigma: f64,
    pub det_v: f64,
    pub entangled: bool,
}

impl WitnessValue {
    pub fn separable(&self) -> bool {
        !self.entangled
    }
}

fn require_two_modes(m: &DMatrix<f64>) -> Result<()> {
    let n = symplectic::modes_of(m)?;
    if n != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: n,
        });
    }
    Ok(())
}

/// `Λ V Λ` with `Λ = diag(1, 1, 1, -1)`: time reversal on the second mode.
pub fn partial_transpose(v: &CovMatrix) -> Result<DMatrix<f64>> {
    partial_transpose_matrix(v.matrix())
}

pub fn partial_transpose_matrix(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_two_modes(v)?;
    let mut m = v.clone();
    for k in 0..4 {
        if k != 3 {
            m[(3, k)] = -m[(3, k)];
            m[(k, 3)] = -m[(k, 3)];
        }
    }
    Ok(m)
}

fn det2(m: &DMatrix<f64>, r: usize, c: usize) -> f64 {
    m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)]
}

/// Closed-form witness on any symmetric 4x4 matrix, physical or not.
/// Fails only when the inner radicand is negative beyond [`RADICAND_TOL`].
pub fn nu_squared_of_matrix(m: &DMatrix<f64>) -> Result<WitnessValue> {
    require_two_modes(m)?;
    let sigma = det2(m, 0, 0) + det2(m, 2, 2) - 2.0 * det2(m, 0, 2);
    let det_v = m.determinant();
    let mut radicand = sigma * sigma - 4.0 * det_v;
    if radicand < 0.0 {
        if radicand < -RADICAND_TOL || !radicand.is_finite() {
            return Err(Error::NegativeRadicand(radicand));
        }
        radicand = 0.0;
    }
    let nu_squared = 0.5 * (sigma - radicand.sqrt());
    Ok(WitnessValue {
        nu_squared,
        sigma,
        det_v,
        entangled: nu_squared < SEPARABILITY_THRESHOLD,
    })
}

pub fn nu_squared_closed_form(v: &CovMatrix) -> Result<WitnessValue> {
    nu_squared_of_matrix(v.matrix())
}

/// Square of the smallest symplectic eigenvalue of the partial transpose,
/// by direct eigen-decomposition.
pub fn nu_squared_oracle(v: &CovMatrix) -> Result<f64> {
    let pt = partial_transpose(v)?;
    let spectrum = symplectic::symplectic_spectrum(&pt)?;
    Ok(spectrum[0] * spectrum[0])
}

/// Transmissivity below which `Φ_At(η) ∘ S(r') ∘ Φ_At(η)` is
/// entanglement-breaking:
///
/// ```text
/// η̃(r') = (cosh 2r' - sqrt(2 cosh 2r' - 1)) / (2 sinh² r')
/// ```
pub fn eb_threshold(r_prime: f64) -> Result<f64> {
    if !r_prime.is_finite() {
        return Err(Error::NonFinite("r'"));
    }
    if r_prime == 0.0 {
        return Err(Error::SingularThreshold);
    }
    if r_prime.abs() > 10.0 {
        return Err(Error::OutOfRange {
            name: "r'",
            value: r_prime,
            min: -10.0,
            max: 10.0,
        });
    }
    let c = (2.0 * r_prime).cosh();
    let s = r_prime.sinh();
    Ok(0.5 * (c - (2.0 * c - 1.0).sqrt()) / (s * s))
}

/// Bisects on a boolean verdict. `verdict(lo)` and `verdict(hi)` must
/// differ; returns the midpoint of the final bracket, whose width is at
/// most `tol`.
pub fn bisect_flip<F>(mut verdict: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidGrid(format!(
            "bad bracket [{lo}, {hi}] with tolerance {tol}"
        )));
    }
    let at_lo = verdict(lo)?;
    if at_lo == verdict(hi)? {
        return Err(Error::NoFlip { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if verdict(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
