//! Gaussian channels in `(X, Y)` form, acting on covariance matrices as
//! `V -> X V X^T + Y`.

use nalgebra::DMatrix;

use crate::error::{check_squeeze, check_unit_interval, Error, Result};
use crate::symplectic::{self, omega, CovMatrix, SymplecticTransform, VACUUM_VARIANCE};

/// Slack on the complete-positivity eigenvalue test.
pub const CP_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl GaussianChannel {
    /// Builds a channel after checking shapes, symmetry of `Y` and complete
    /// positivity.
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let n = symplectic::modes_of(&x)?;
        let ny = symplectic::modes_of(&y)?;
        if n != ny {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ny,
            });
        }
        let asym = symplectic::max_abs_diff(&y, &y.transpose());
        if asym.is_nan() || asym > SYMMETRY_TOL {
            return Err(Error::InvalidModel(format!(
                "noise matrix Y is not symmetric (deviation {asym:e})"
            )));
        }
        let ch = Self {
            x,
            y: symplectic::symmetrize(&y),
        };
        let lowest = ch.cp_margin();
        if lowest.is_nan() || lowest < -CP_TOL {
            return Err(Error::NotCompletelyPositive(lowest));
        }
        Ok(ch)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            x: DMatrix::identity(2 * n_modes, 2 * n_modes),
            y: DMatrix::zeros(2 * n_modes, 2 * n_modes),
        }
    }

    /// Unitary channel of a symplectic transform.
    pub fn from_symplectic(s: &SymplecticTransform) -> Self {
        let d = s.matrix().nrows();
        Self {
            x: s.matrix().clone(),
            y: DMatrix::zeros(d, d),
        }
    }

    /// Lowers "mix with `environment` on `coupling`, discard the environment
    /// modes" to `(X, Y)`. System modes come first in `coupling`'s ordering.
    pub fn from_dilation(coupling: &SymplecticTransform, environment: &CovMatrix) -> Result<Self> {
        let total = coupling.n_modes();
        let env = environment.n_modes();
        if env >= total {
            return Err(Error::DimensionMismatch {
                expected: total - 1,
                found: env,
            });
        }
        let sys = 2 * (total - env);
        let s = coupling.matrix();
        let x = s.view((0, 0), (sys, sys)).into_owned();
        let se = s.view((0, sys), (sys, 2 * env)).into_owned();
        let y = &se * environment.matrix() * se.transpose();
        Self::new(x, y)
    }

    pub fn n_modes(&self) -> usize {
        self.x.nrows() / 2
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Smallest eigenvalue of the real embedding of
    /// `Y + (i/2)(Ω - X Ω X^T)`; non-negative iff the channel is CP.
    pub fn cp_margin(&self) -> f64 {
        let d = self.x.nrows();
        let om = omega(d / 2);
        let imag = (&om - &self.x * &om * self.x.transpose()) * 0.5;
        // [[A, -B], [B, A]] is the real form of A + iB.
        let mut embed = DMatrix::zeros(2 * d, 2 * d);
        embed.view_mut((0, 0), (d, d)).copy_from(&self.y);
        embed.view_mut((d, d), (d, d)).copy_from(&self.y);
        embed.view_mut((0, d), (d, d)).copy_from(&(-&imag));
        embed.view_mut((d, 0), (d, d)).copy_from(&imag);
        embed
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `X V X^T + Y`.
    pub fn apply(&self, v: &CovMatrix) -> Result<CovMatrix> {
        if v.n_modes() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: v.n_modes(),
            });
        }
        let m = &self.x * v.matrix() * self.x.transpose() + &self.y;
        Ok(CovMatrix::from_symmetrized(&m))
    }

    /// Extends a single-mode channel to `mode` of an `n_modes` register.
    pub fn embed(&self, mode: usize, n_modes: usize) -> Result<Self> {
        if self.n_modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.n_modes(),
            });
        }
        if mode >= n_modes {
            return Err(Error::ModeOutOfRange {
                index: mode,
                n_modes,
            });
        }
        let mut x = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let mut y = DMatrix::zeros(2 * n_modes, 2 * n_modes);
        x.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&self.x);
        y.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&self.y);
        Ok(Self { x, y })
    }

    /// One-sided action: `self` on `mode`, identity on the rest.
    pub fn apply_to_mode(&self, v: &CovMatrix, mode: usize) -> Result<CovMatrix> {
        self.embed(mode, v.n_modes())?.apply(v)
    }

    pub fn max_abs_diff(&self, other: &GaussianChannel) -> f64 {
        symplectic::max_abs_diff(&self.x, &other.x).max(symplectic::max_abs_diff(&self.y, &other.y))
    }
}

/// `later ∘ earlier`.
pub fn compose(later: &GaussianChannel, earlier: &GaussianChannel) -> Result<GaussianChannel> {
    if later.n_modes() != earlier.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: later.n_modes(),
            found: earlier.n_modes(),
        });
    }
    let x = &later.x * &earlier.x;
    let y = &later.x * &earlier.y * later.x.transpose() + &later.y;
    Ok(GaussianChannel {
        x,
        y: symplectic::symmetrize(&y),
    })
}

/// Lossy channel `V -> η V + (1 - η) V0`.
pub fn attenuation(eta: f64) -> Result<GaussianChannel> {
    check_unit_interval("eta", eta)?;
    Ok(GaussianChannel {
        x: DMatrix::identity(2, 2) * eta.sqrt(),
        y: DMatrix::identity(2, 2) * ((1.0 - eta) * VACUUM_VARIANCE),
    })
}

/// Unitary squeezing `V -> S(r) V S(r)`.
pub fn squeeze_channel(r: f64) -> Result<GaussianChannel> {
    check_squeeze(r)?;
    Ok(GaussianChannel::from_symplectic(
        &SymplecticTransform::squeeze(r)?,
    ))
}

/// `Φ_At(η) ∘ S(r) ∘ Φ_At(η)`.
pub fn phi1(eta: f64, r: f64) -> Result<GaussianChannel> {
    let loss = attenuation(eta)?;
    compose(&loss, &compose(&squeeze_channel(r)?, &loss)?)
}

/// `Φ_At(η) ∘ Φ_At(η)`, which is `Φ_At(η²)`.
pub fn phi2(eta: f64) -> Result<GaussianChannel> {
    let loss = attenuation(eta)?;
    compose(&loss, &loss)
}

/// Attenuation realized as a circuit: mix with vacuum on `B(η)` and keep the
/// transmitted port.
pub fn dilation_attenuation(eta: f64, v: &CovMatrix) -> Result<CovMatrix> {
    mix_and_discard(eta, v, &CovMatrix::vacuum())
}

/// Mixes `v` with a squeezed ancilla `V1(s)` on `B(η)` and keeps the
/// transmitted port. Equivalent to `S(s/2) ∘ Φ_At(η) ∘ S(-s/2)` on `v`.
pub fn ancilla_squeezer_step(eta: f64, v: &CovMatrix, s_ancilla: f64) -> Result<CovMatrix> {
    mix_and_discard(eta, v, &CovMatrix::squeezed_vacuum(s_ancilla)?)
}

/// Effective local squeeze produced by an ancilla squeezed by `s_ancilla`.
pub fn effective_squeeze(s_ancilla: f64) -> f64 {
    0.5 * s_ancilla
}

fn mix_and_discard(eta: f64, v: &CovMatrix, ancilla: &CovMatrix) -> Result<CovMatrix> {
    if v.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: v.n_modes(),
        });
    }
    let bs = SymplecticTransform::beam_splitter(eta)?;
    v.tensor(ancilla).transform(&bs)?.partial_trace(&[0])
}
