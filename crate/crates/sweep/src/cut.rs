//! One-dimensional cuts through a sweep grid.

use crate::run::SweepResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutAxis {
    /// Fix A, vary ε₀.
    A,
    /// Fix ε₀, vary A.
    Eps0,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CutError {
    #[error("requested {axis:?} = {value} lies outside the grid range [{min}, {max}]")]
    OutOfRange { axis: CutAxis, value: f64, min: f64, max: f64 },
    #[error("empty grid")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub axis: CutAxis,
    pub requested: f64,
    /// Grid coordinate actually used, in units of ω.
    pub selected: f64,
    pub index: usize,
    /// Coordinates along the free axis, in units of ω.
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let free = match self.axis {
            CutAxis::A => "eps0_over_omega",
            CutAxis::Eps0 => "A_over_omega",
        };
        let mut s = format!("{free},value\n");
        for (c, v) in self.coords.iter().zip(&self.values) {
            s.push_str(&format!("{c},{v}\n"));
        }
        s
    }
}

/// Nearest grid line to `value` along `axis` (ties go to the lower index).
pub fn cut_1d(r: &SweepResult, axis: CutAxis, value: f64) -> Result<Curve, CutError> {
    if r.values.is_empty() {
        return Err(CutError::Empty);
    }
    let grid = match axis {
        CutAxis::A => &r.a_axis,
        CutAxis::Eps0 => &r.eps0_axis,
    };
    let (min, max) = (grid[0], grid[grid.len() - 1]);
    let slack = 1e-9 * (max - min).abs().max(1.0);
    if !(value >= min - slack && value <= max + slack) {
        return Err(CutError::OutOfRange { axis, value, min, max });
    }
    let mut index = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g - value).abs() < (grid[index] - value).abs() {
            index = i;
        }
    }
    let ne = r.eps0_axis.len();
    let (coords, values) = match axis {
        CutAxis::A => (r.eps0_axis.clone(), r.values[index * ne..(index + 1) * ne].to_vec()),
        CutAxis::Eps0 => (r.a_axis.clone(), (0..r.a_axis.len()).map(|i| r.values[i * ne + index]).collect()),
    };
    Ok(Curve { axis, requested: value, selected: grid[index], index, coords, values })
}
