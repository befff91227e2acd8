//! The optical pipeline: a type-II OPO twin beam is split into a squeezed
//! ancilla and a two-mode probe, one probe arm crosses two beam splitters of
//! transmissivity `η` (the first fed by the ancilla or by vacuum), and both
//! arms are detected with efficiency `Tm`. Preparation losses `T0` act on
//! the OPO output.
//!
//! Register layout during the channel stage: mode 0 is `c1`, mode 1 is
//! `c2`, mode 2 is whatever enters the free port of the current splitter.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{attenuation, effective_squeeze};
use crate::error::{check_squeeze, check_unit_interval, Error, Result};
use crate::symplectic::{CovMatrix, SymplecticTransform};
use crate::uncertainty::{classify, ConfidenceVerdict, UncertaintyModel};
use crate::witness::{bisect_flip, nu_squared_closed_form, WitnessValue};

/// Bracket searched by [`find_flip_eta`].
pub const DEFAULT_FLIP_BRACKET: (f64, f64) = (0.01, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Loss, squeeze, loss: the ancilla feeds the first splitter.
    Phi1,
    /// Loss, loss: vacuum feeds both splitters.
    Phi2,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Phi1 => "phi1",
            Variant::Phi2 => "phi2",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi1" => Ok(Variant::Phi1),
            "phi2" => Ok(Variant::Phi2),
            other => Err(format!("unknown variant '{other}', expected phi1 or phi2")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Two-mode squeezing of the OPO output. The probe ends up with
    /// `r' = -r/2`.
    pub r: f64,
    pub eta: f64,
    pub t0: f64,
    pub tm: f64,
    pub variant: Variant,
    pub uncertainty: Option<UncertaintyModel>,
}

impl ExperimentConfig {
    /// Lossless preparation and perfect detectors, no error model.
    pub fn ideal(r: f64, eta: f64, variant: Variant) -> Self {
        Self {
            r,
            eta,
            t0: 1.0,
            tm: 1.0,
            variant,
            uncertainty: None,
        }
    }

    /// Ideal configuration whose probe has squeezing `r_prime`.
    pub fn from_r_prime(r_prime: f64, eta: f64, variant: Variant) -> Self {
        Self::ideal(-2.0 * r_prime, eta, variant)
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    pub fn with_losses(self, t0: f64, tm: f64) -> Self {
        Self { t0, tm, ..self }
    }

    pub fn with_variant(self, variant: Variant) -> Self {
        Self { variant, ..self }
    }

    pub fn with_uncertainty(self, model: Option<UncertaintyModel>) -> Self {
        Self {
            uncertainty: model,
            ..self
        }
    }

    pub fn r_prime(&self) -> f64 {
        -0.5 * self.r
    }

    /// Local squeeze realized by the ancilla at the first green splitter.
    pub fn effective_squeeze(&self) -> f64 {
        effective_squeeze(self.r)
    }

    pub fn is_ideal(&self) -> bool {
        self.t0 == 1.0 && self.tm == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        check_squeeze(self.r)?;
        check_unit_interval("eta", self.eta)?;
        check_unit_interval("t0", self.t0)?;
        check_unit_interval("tm", self.tm)?;
        if let Some(model) = &self.uncertainty {
            model.validate()?;
        }
        Ok(())
    }
}

/// States leaving the preparation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Resources {
    /// Mode `a1`, a squeezed vacuum `V1(r)` when lossless.
    pub ancilla: CovMatrix,
    /// Modes `(c1, c2)`.
    pub probe: CovMatrix,
}

/// OPO twin beam, loss `T0` on both polarization modes, λ/2 + PBS, then
/// `b1` mixed with vacuum on a balanced splitter.
pub fn prepare_resources(r: f64, t0: f64) -> Result<Resources> {
    check_unit_interval("t0", t0)?;
    let opo = CovMatrix::tmsv(r)?;
    let loss = attenuation(t0)?;
    let lossy = loss.apply_to_mode(&loss.apply_to_mode(&opo, 0)?, 1)?;

    let balanced = SymplecticTransform::beam_splitter(0.5)?;
    let split = lossy.transform(&balanced)?;
    let ancilla = split.partial_trace(&[0])?;
    let b1 = split.partial_trace(&[1])?;

    let probe = b1.tensor(&CovMatrix::vacuum()).transform(&balanced)?;
    Ok(Resources { ancilla, probe })
}

/// Sends `c1` through the two green splitters. The first one's free port
/// gets the ancilla for [`Variant::Phi1`] and vacuum for [`Variant::Phi2`];
/// the second one always gets vacuum. `c2` is left alone.
pub fn run_channel_stage(
    probe: &CovMatrix,
    ancilla: &CovMatrix,
    eta: f64,
    variant: Variant,
) -> Result<CovMatrix> {
    if probe.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: probe.n_modes(),
        });
    }
    if ancilla.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: ancilla.n_modes(),
        });
    }
    let green = SymplecticTransform::beam_splitter(eta)?.embed_two_mode(0, 2, 3)?;
    let first_port = match variant {
        Variant::Phi1 => ancilla.clone(),
        Variant::Phi2 => CovMatrix::vacuum(),
    };
    let after_first = probe
        .tensor(&first_port)
        .transform(&green)?
        .partial_trace(&[0, 1])?;
    after_first
        .tensor(&CovMatrix::vacuum())
        .transform(&green)?
        .partial_trace(&[0, 1])
}

/// Detector inefficiency: `Φ_At(tm)` on every mode.
pub fn apply_detection_loss(v: &CovMatrix, tm: f64) -> Result<CovMatrix> {
    let loss = attenuation(tm)?;
    (0..v.n_modes()).try_fold(v.clone(), |acc, mode| loss.apply_to_mode(&acc, mode))
}

/// Covariance matrix reaching the detectors.
pub fn output_state(config: &ExperimentConfig) -> Result<CovMatrix> {
    config.validate()?;
    let res = prepare_resources(config.r, config.t0)?;
    let out = run_channel_stage(&res.probe, &res.ancilla, config.eta, config.variant)?;
    apply_detection_loss(&out, config.tm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointResult {
    pub eta: f64,
    pub witness: WitnessValue,
    pub confidence: Option<ConfidenceVerdict>,
}

impl PointResult {
    pub fn delta(&self) -> Option<f64> {
        self.confidence.map(|c| c.delta)
    }
}

pub fn run_point(config: &ExperimentConfig) -> Result<PointResult> {
    let out = output_state(config)?;
    let witness = nu_squared_closed_form(&out)?;
    let confidence = match &config.uncertainty {
        Some(model) => Some(classify(witness.nu_squared, model.delta(&out)?)),
        None => None,
    };
    Ok(PointResult {
        eta: config.eta,
        witness,
        confidence,
    })
}

/// Evenly spaced `η` values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for GridSpec {
    /// 197 points on `[0.01, 0.99]`, i.e. a spacing of 0.005.
    fn default() -> Self {
        Self {
            min: 0.01,
            max: 0.99,
            steps: 197,
        }
    }
}

impl GridSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let grid = Self { min, max, steps };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.min && self.min < self.max && self.max <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= min < max <= 1, got min = {}, max = {}",
                self.min, self.max
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 steps, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        let span = self.max - self.min;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.max
                } else {
                    self.min + span * (i as f64) / (last as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub grid: GridSpec,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn etas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.eta)
    }

    /// Grid point with the largest `ν²`.
    pub fn peak(&self) -> &PointResult {
        self.points
            .iter()
            .max_by(|a, b| a.witness.nu_squared.total_cmp(&b.witness.nu_squared))
            .expect("a grid has at least two points")
    }

    /// Grid points where the output is separable.
    pub fn separable_points(&self) -> impl Iterator<Item = &PointResult> {
        self.points.iter().filter(|p| !p.witness.entangled)
    }
}

/// Runs every grid point of `config` (its own `eta` is ignored). Points are
/// evaluated in parallel and returned in grid order.
pub fn sweep_eta(config: &ExperimentConfig, grid: &GridSpec) -> Result<SweepResult> {
    grid.validate()?;
    config.validate()?;
    let points = grid
        .values()
        .into_par_iter()
        .map(|eta| run_point(&config.with_eta(eta)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        config: *config,
        grid: *grid,
        points,
    })
}

/// `η` at which the separability verdict flips, searched inside
/// [`DEFAULT_FLIP_BRACKET`].
pub fn find_flip_eta(config: &ExperimentConfig, tol: f64) -> Result<f64> {
    let (lo, hi) = DEFAULT_FLIP_BRACKET;
    find_flip_eta_in(config, lo, hi, tol)
}

pub fn find_flip_eta_in(config: &ExperimentConfig, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    config.validate()?;
    check_unit_interval("eta", lo)?;
    check_unit_interval("eta", hi)?;
    let base = config.with_uncertainty(None);
    bisect_flip(
        |eta| {
            let out = output_state(&base.with_eta(eta))?;
            Ok(nu_squared_closed_form(&out)?.entangled)
        },
        lo,
        hi,
        tol,
    )
}
