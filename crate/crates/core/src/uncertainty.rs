//! Statistical uncertainty of the witness `ν²` given per-element errors on
//! a measured covariance matrix.
//!
//! Elements of the upper triangle are treated as independent, each with
//! standard deviation `max(relative_sigma * |V_ij|, absolute_floor)`. The
//! lower triangle mirrors the upper one.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symplectic::CovMatrix;
use crate::witness::{nu_squared_closed_form, nu_squared_of_matrix, SEPARABILITY_THRESHOLD};

/// Fewest draws accepted for Monte Carlo propagation.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Propagation {
    FirstOrder,
    MonteCarlo,
}

/// Per-element error model.
///
/// The defaults (2% relative, 0.005 floor in vacuum-variance units) are
/// calibration placeholders, not measured homodyne figures: with them the
/// r' = 0.5 curve peak stays inside its confidence band while the r' = 0.65
/// peak clears it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub relative_sigma: f64,
    pub absolute_floor: f64,
    pub samples: usize,
    pub seed: u64,
    pub propagation: Propagation,
}

impl Default for UncertaintyModel {
    fn default() -> Self {
        Self {
            relative_sigma: 0.02,
            absolute_floor: 0.005,
            samples: 10_000,
            seed: 20_130_607,
            propagation: Propagation::FirstOrder,
        }
    }
}

impl UncertaintyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_sigma.is_finite() && self.relative_sigma >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "relative sigma must be finite and non-negative, got {}",
                self.relative_sigma
            )));
        }
        if !(self.absolute_floor.is_finite() && self.absolute_floor >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "absolute floor must be finite and non-negative, got {}",
                self.absolute_floor
            )));
        }
        if self.propagation == Propagation::MonteCarlo && self.samples < MIN_SAMPLES {
            return Err(Error::InvalidModel(format!(
                "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn element_sigma(&self, value: f64) -> f64 {
        (self.relative_sigma * value.abs()).max(self.absolute_floor)
    }

    /// `δ(ν²)` by whichever method the model selects.
    pub fn delta(&self, v: &CovMatrix) -> Result<f64> {
        match self.propagation {
            Propagation::FirstOrder => propagate_first_order(v, self),
            Propagation::MonteCarlo => propagate_monte_carlo(v, self).map(|mc| mc.std),
        }
    }
}

fn upper_triangle(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |i| (i..dim).map(move |j| (i, j)))
}

fn nudged(m: &DMatrix<f64>, i: usize, j: usize, by: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    out[(i, j)] += by;
    if i != j {
        out[(j, i)] += by;
    }
    out
}

/// Linear error propagation with central-difference derivatives.
pub fn propagate_first_order(v: &CovMatrix, model: &UncertaintyModel) -> Result<f64> {
    model.validate()?;
    let m = v.matrix();
    nu_squared_closed_form(v)?;
    let mut variance = 0.0;
    for (i, j) in upper_triangle(m.nrows()) {
        let sigma = model.element_sigma(m[(i, j)]);
        let h = 1e-6_f64.max(1e-6 * m[(i, j)].abs());
        let plus = nu_squared_of_matrix(&nudged(m, i, j, h));
        let minus = nu_squared_of_matrix(&nudged(m, i, j, -h));
        let (plus, minus) = match (plus, minus) {
            (Ok(p), Ok(q)) => (p.nu_squared, q.nu_squared),
            _ => return Err(Error::NonFiniteGradient { row: i, col: j }),
        };
        let grad = (plus - minus) / (2.0 * h);
        if !grad.is_finite() {
            return Err(Error::NonFiniteGradient { row: i, col: j });
        }
        variance += (grad * sigma).powi(2);
    }
    Ok(variance.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std: f64,
    pub accepted: usize,
    pub rejected: usize,
}

/// Sampled propagation. Draw `k` uses ChaCha stream `k` of the model seed,
/// so the result does not depend on how draws are scheduled.
pub fn propagate_monte_carlo(
    v: &CovMatrix,
    model: &UncertaintyModel,
) -> Result<MonteCarloEstimate> {
    model.validate()?;
    if model.samples < MIN_SAMPLES {
        return Err(Error::InvalidModel(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
            model.samples
        )));
    }
    let m = v.matrix();
    let dim = m.nrows();
    let sigmas: Vec<((usize, usize), f64)> = upper_triangle(dim)
        .map(|(i, j)| ((i, j), model.element_sigma(m[(i, j)])))
        .collect();

    let draws: Vec<Option<f64>> = (0..model.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
            rng.set_stream(k as u64);
            let mut perturbed = m.clone();
            for &((i, j), sigma) in &sigmas {
                let z: f64 = StandardNormal.sample(&mut rng);
                perturbed[(i, j)] += sigma * z;
                if i != j {
                    perturbed[(j, i)] = perturbed[(i, j)];
                }
            }
            let cov = CovMatrix::new(perturbed).ok()?;
            nu_squared_closed_form(&cov).ok().map(|w| w.nu_squared)
        })
        .collect();

    let values: Vec<f64> = draws.iter().flatten().copied().collect();
    let rejected = model.samples - values.len();
    if 2 * rejected > model.samples || values.len() < 2 {
        return Err(Error::TooManyUnphysical {
            rejected,
            total: model.samples,
        });
    }
    // Shifted by the first draw so identical draws give exactly zero spread.
    let n = values.len() as f64;
    let shift = values[0];
    let (sum, sum_sq) = values.iter().fold((0.0, 0.0), |(s, q), x| {
        let d = x - shift;
        (s + d, q + d * d)
    });
    let mean = shift + sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        std: var.sqrt(),
        accepted: values.len(),
        rejected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    ConclusiveEB,
    ConclusiveEntangled,
    Ambiguous,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::ConclusiveEB => "conclusive_eb",
            Classification::ConclusiveEntangled => "conclusive_entangled",
            Classification::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceVerdict {
    pub nu_squared: f64,
    pub delta: f64,
    pub classification: Classification,
}

/// A verdict is conclusive only when `ν²` sits more than `2δ` away from
/// the separability threshold.
pub fn classify(nu_squared: f64, delta: f64) -> ConfidenceVerdict {
    let delta = delta.max(0.0);
    let classification = if nu_squared - SEPARABILITY_THRESHOLD > 2.0 * delta {
        Classification::ConclusiveEB
    } else if SEPARABILITY_THRESHOLD - nu_squared > 2.0 * delta {
        Classification::ConclusiveEntangled
    } else {
        Classification::Ambiguous
    };
    ConfidenceVerdict {
        nu_squared,
        delta,
        classification,
    }
}
