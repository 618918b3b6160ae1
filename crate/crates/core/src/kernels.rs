//! Radial influence functions `rho` and the horizon `delta`.
//!
//! The cutoff to the horizon is not applied here; it is carried by the
//! quadrature weights so that weight schemes can be swapped freely.

use std::sync::atomic::{AtomicBool, Ordering};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Sampling resolution for the polynomial non-negativity check.
const POLY_SAMPLES: usize = 10_000;

static CLAMP_LOGGED: AtomicBool = AtomicBool::new(false);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "name",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum KernelVariant {
    /// `rho(z) = 1 / |z|`
    InverseDistance,
    /// `rho(z) = value`
    Constant { value: f64 },
    /// `rho(z) = scale * max(0, 1 - |z| / delta)`
    Conical { scale: f64 },
    /// `rho(z) = max(0, p(|z|)) / |z|^exponent` with `exponent` in {0, 1};
    /// coefficients in increasing degree.
    Polynomial {
        coefficients: Vec<f64>,
        exponent: u8,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    delta: f64,
    variant: KernelVariant,
}

impl Kernel {
    pub fn new(delta: f64, variant: KernelVariant) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "delta must be positive, got {delta}"
            )));
        }
        match &variant {
            KernelVariant::InverseDistance => {}
            KernelVariant::Constant { value } => {
                if !(*value >= 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "constant must be non-negative, got {value}"
                    )));
                }
            }
            KernelVariant::Conical { scale } => {
                if !(*scale > 0.0) {
                    return Err(Error::InvalidKernel(format!(
                        "conical scale must be positive, got {scale}"
                    )));
                }
            }
            KernelVariant::Polynomial {
                coefficients,
                exponent,
            } => {
                if *exponent > 1 {
                    return Err(Error::InvalidKernel(format!(
                        "exponent must be 0 or 1, got {exponent}"
                    )));
                }
                if coefficients.is_empty() {
                    return Err(Error::InvalidKernel(
                        "polynomial needs at least one coefficient".into(),
                    ));
                }
                for s in 0..=POLY_SAMPLES {
                    let r = delta * s as f64 / POLY_SAMPLES as f64;
                    let v = horner(coefficients, r);
                    if v < 0.0 {
                        return Err(Error::InvalidKernel(format!(
                            "polynomial is negative at r = {r} ({v})"
                        )));
                    }
                }
            }
        }
        Ok(Kernel { delta, variant })
    }

    pub fn inverse_distance(delta: f64) -> Result<Self> {
        Kernel::new(delta, KernelVariant::InverseDistance)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn variant(&self) -> &KernelVariant {
        &self.variant
    }

    /// Whether `rho` is singular at the origin.
    pub fn is_singular(&self) -> bool {
        matches!(
            self.variant,
            KernelVariant::InverseDistance | KernelVariant::Polynomial { exponent: 1, .. }
        )
    }

    pub fn rho(&self, zeta: Vec2) -> Result<f64> {
        self.rho_radial(zeta.norm())
    }

    /// `rho` as a function of the bond length.
    pub fn rho_radial(&self, r: f64) -> Result<f64> {
        if r == 0.0 && self.is_singular() {
            return Err(Error::SingularEvaluation);
        }
        Ok(match &self.variant {
            KernelVariant::InverseDistance => 1.0 / r,
            KernelVariant::Constant { value } => *value,
            KernelVariant::Conical { scale } => scale * (1.0 - r / self.delta).max(0.0),
            KernelVariant::Polynomial {
                coefficients,
                exponent,
            } => {
                let p = horner(coefficients, r);
                if p < 0.0 && !CLAMP_LOGGED.swap(true, Ordering::Relaxed) {
                    warn!("polynomial kernel negative at r = {r}; clamping to 0");
                }
                let p = p.max(0.0);
                if *exponent == 1 {
                    p / r
                } else {
                    p
                }
            }
        })
    }
}

fn horner(coefficients: &[f64], r: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}
