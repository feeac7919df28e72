//! Region-boundary overlays aligned with sweep axes.

use crate::run::SweepResult;
use lzs_core::unitary::{Region, ResonanceRegions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OverlayError {
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error("region rectangle {regions:?} does not match sweep rectangle {sweep:?} (units of omega)")]
    RectMismatch { regions: [f64; 4], sweep: [f64; 4] },
    #[error("drive frequency must be positive, got {0}")]
    BadOmega(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayLine {
    pub label: String,
    /// `[A/ω, ε₀/ω]` vertices.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRegion {
    pub label: String,
    pub anchor: [f64; 2],
    pub area_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub units: String,
    /// `[A_min, A_max, ε₀_min, ε₀_max]` over ω.
    pub rect: [f64; 4],
    pub omega_r_over_omega: f64,
    pub lines: Vec<OverlayLine>,
    pub regions: Vec<OverlayRegion>,
}

impl Overlay {
    pub fn region_labels(&self) -> Vec<&str> {
        self.regions.iter().map(|r| r.label.as_str()).collect()
    }
}

/// Converts `regions` (energy units) to units of `omega` after checking it
/// covers the same rectangle as `result`.
pub fn emit_overlay(regions: &ResonanceRegions, result: &SweepResult, omega: f64) -> Result<Overlay, OverlayError> {
    if result.values.is_empty() || result.a_axis.is_empty() || result.eps0_axis.is_empty() {
        return Err(OverlayError::EmptyGrid);
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(OverlayError::BadOmega(omega));
    }
    let rr = regions.rect;
    let theirs = [rr.a_min / omega, rr.a_max / omega, rr.eps_min / omega, rr.eps_max / omega];
    let sweep = [
        result.a_axis[0],
        *result.a_axis.last().unwrap(),
        result.eps0_axis[0],
        *result.eps0_axis.last().unwrap(),
    ];
    let scale = sweep.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if theirs.iter().zip(&sweep).any(|(a, b)| (a - b).abs() > 1e-9 * scale) {
        return Err(OverlayError::RectMismatch { regions: theirs, sweep });
    }
    let lines = regions
        .boundaries
        .iter()
        .map(|p| OverlayLine { label: p.label.clone(), points: p.points.iter().map(|&(a, e)| [a / omega, e / omega]).collect() })
        .collect();
    let regions_out = regions
        .regions
        .iter()
        .map(|r| OverlayRegion {
            label: Region::label(r.region).to_string(),
            anchor: [r.anchor.0 / omega, r.anchor.1 / omega],
            area_fraction: r.area_fraction,
        })
        .collect();
    Ok(Overlay {
        units: "omega".into(),
        rect: sweep,
        omega_r_over_omega: regions.omega_r / omega,
        lines,
        regions: regions_out,
    })
}
