//! Bosonic reservoirs: spectral densities, thermal occupation and the
//! golden-rule rate kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BathError {
    #[error("spectral density requested at negative frequency {0}")]
    NegativeFrequency(f64),
    #[error("Bose occupation is singular at zero energy")]
    ZeroEnergy,
    #[error("invalid bath parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BathModel {
    /// `J(w) = κ w e^{−w/ω_D}`.
    Ohmic { kappa: f64, omega_d: f64 },
    /// Resonator absorbed into an ohmic reservoir:
    /// `J(w) = 16κg²ω_r² w / ((ω_r² − w²)² + (κω_r w)²)`.
    Structured { kappa: f64, g: f64, omega_r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub model: BathModel,
    /// `k_B T` in energy units.
    pub temperature: f64,
}

impl BathSpec {
    pub fn ohmic(kappa: f64, omega_d: f64, temperature: f64) -> Self {
        Self { model: BathModel::Ohmic { kappa, omega_d }, temperature }
    }

    pub fn structured(kappa: f64, g: f64, omega_r: f64, temperature: f64) -> Self {
        Self { model: BathModel::Structured { kappa, g, omega_r }, temperature }
    }

    pub fn validate(&self) -> Result<(), BathError> {
        let bad = |what: &str, v: f64| Err(BathError::InvalidParameter(format!("{what} = {v}")));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature", self.temperature);
        }
        match self.model {
            BathModel::Ohmic { kappa, omega_d } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return bad("kappa", kappa);
                }
                if !(omega_d > 0.0 && omega_d.is_finite()) {
                    return bad("omega_d", omega_d);
                }
            }
            BathModel::Structured { kappa, g, omega_r } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return bad("kappa", kappa);
                }
                if !g.is_finite() {
                    return bad("g", g);
                }
                if !(omega_r > 0.0 && omega_r.is_finite()) {
                    return bad("omega_r", omega_r);
                }
            }
        }
        Ok(())
    }

    /// `lim_{w→0} J(w)/w`.
    pub fn low_frequency_slope(&self) -> f64 {
        match self.model {
            BathModel::Ohmic { kappa, .. } => kappa,
            BathModel::Structured { kappa, g, omega_r } => 16.0 * kappa * g * g / (omega_r * omega_r),
        }
    }
}

fn density(model: &BathModel, w: f64) -> f64 {
    match *model {
        BathModel::Ohmic { kappa, omega_d } => kappa * w * (-w / omega_d).exp(),
        BathModel::Structured { kappa, g, omega_r } => {
            let a = omega_r * omega_r - w * w;
            let b = kappa * omega_r * w;
            16.0 * kappa * g * g * omega_r * omega_r * w / (a * a + b * b)
        }
    }
}

pub fn spectral_density(b: &BathSpec, w: f64) -> Result<f64, BathError> {
    if w < 0.0 {
        return Err(BathError::NegativeFrequency(w));
    }
    Ok(density(&b.model, w))
}

/// `n_B(w) = 1/(e^{w/T} − 1)`.
pub fn bose_occupation(w: f64, temperature: f64) -> Result<f64, BathError> {
    if w == 0.0 {
        return Err(BathError::ZeroEnergy);
    }
    if temperature == 0.0 {
        return Ok(if w > 0.0 { 0.0 } else { -1.0 });
    }
    Ok(1.0 / (w / temperature).exp_m1())
}

/// `N(ε) = π J(|ε|) [n_B(|ε|) + θ(−ε)]`, continuous at `ε = 0` where it
/// equals `π T lim J(w)/w`.
pub fn rate_kernel_n(b: &BathSpec, eps: f64) -> f64 {
    if eps == 0.0 {
        return PI * b.low_frequency_slope() * b.temperature;
    }
    let w = eps.abs();
    let j = density(&b.model, w);
    let nb = if b.temperature == 0.0 { 0.0 } else { 1.0 / (w / b.temperature).exp_m1() };
    let occ = if eps > 0.0 { nb } else { 1.0 + nb };
    PI * j * occ
}
