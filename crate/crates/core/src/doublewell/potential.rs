use crate::error::{Error, Result};
use crate::twostate::ModelParams;
use serde::{Deserialize, Serialize};

/// A confining one-dimensional potential.
pub trait Potential: Sync {
    fn value(&self, x: f64) -> f64;

    /// Position at which eigenfunctions are made positive.
    fn sign_anchor(&self) -> f64;

    /// Harmonic estimate of level `k` used for domain checks.
    fn level_estimate(&self, k: usize, hbar: f64, mass: f64) -> f64;
}

/// Smooth bump `amplitude·exp(1 − 1/(1 − u²))`, `u = (x − center)/width`, zero for `|u| ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleaSpec {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl FleaSpec {
    /// Validates positivity of the width and that the open support avoids both minima `±a`.
    pub fn new(amplitude: f64, center: f64, width: f64, a: f64) -> Result<Self> {
        let flea = Self { amplitude, center, width };
        flea.validate(a)?;
        Ok(flea)
    }

    pub fn validate(&self, a: f64) -> Result<()> {
        if !(self.amplitude.is_finite() && self.center.is_finite()) {
            return Err(Error::InvalidArgument("flea amplitude and center must be finite".into()));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidArgument(format!("flea width {} must be positive", self.width)));
        }
        for m in [a, -a] {
            if (m - self.center).abs() < self.width {
                return Err(Error::InvalidArgument(format!(
                    "flea support ({}, {}) contains the minimum {m}",
                    self.center - self.width,
                    self.center + self.width
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        let r = 1.0 - u * u;
        if r <= 0.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / r).exp()
        }
    }

    /// Mirror image under `x ↦ −x`.
    pub fn reflected(&self) -> Self {
        Self { center: -self.center, ..*self }
    }
}

/// `¼λ(x² − a²)² + δ(x)` with an optional flea `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub lambda: f64,
    pub a: f64,
    pub flea: Option<FleaSpec>,
}

impl PotentialSpec {
    pub fn new(lambda: f64, a: f64, flea: Option<FleaSpec>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} and a = {a} must be positive")));
        }
        if let Some(f) = &flea {
            f.validate(a)?;
        }
        Ok(Self { lambda, a, flea })
    }

    pub fn unperturbed(params: &ModelParams) -> Result<Self> {
        Self::new(params.lambda, params.a, None)
    }

    pub fn with_flea(params: &ModelParams, flea: FleaSpec) -> Result<Self> {
        Self::new(params.lambda, params.a, Some(flea))
    }

    pub fn base(&self, x: f64) -> f64 {
        let s = x * x - self.a * self.a;
        0.25 * self.lambda * s * s
    }

    /// Small-oscillation frequency at the minima, `a√(2λ/m)`.
    pub fn well_frequency(&self, mass: f64) -> f64 {
        self.a * (2.0 * self.lambda / mass).sqrt()
    }
}

impl Potential for PotentialSpec {
    fn value(&self, x: f64) -> f64 {
        self.base(x) + self.flea.map_or(0.0, |f| f.value(x))
    }

    fn sign_anchor(&self) -> f64 {
        self.a
    }

    fn level_estimate(&self, k: usize, hbar: f64, mass: f64) -> f64 {
        // levels come in tunnelling pairs of the two harmonic wells
        let bump = self.flea.map_or(0.0, |f| f.amplitude.max(0.0));
        hbar * self.well_frequency(mass) * ((k / 2) as f64 + 0.5) + bump
    }
}

/// `½mω²x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPotential {
    pub mass: f64,
    pub omega: f64,
    pub anchor: f64,
}

impl Potential for HarmonicPotential {
    fn value(&self, x: f64) -> f64 {
        0.5 * self.mass * self.omega * self.omega * x * x
    }

    fn sign_anchor(&self) -> f64 {
        self.anchor
    }

    fn level_estimate(&self, k: usize, hbar: f64, _mass: f64) -> f64 {
        hbar * self.omega * (k as f64 + 0.5)
    }
}
