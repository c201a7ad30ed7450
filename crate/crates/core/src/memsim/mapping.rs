//! Signed weight to differential conductance pair, and finite-state projection.

use crate::error::{Error, Result};
use crate::memsim::device::StateCount;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappedWeight {
    /// Conductance of the positive column, siemens.
    pub g_pos: f64,
    /// Conductance of the negative column, siemens.
    pub g_neg: f64,
    /// `|w|` exceeded `w_max` and was clipped.
    pub clipped: bool,
}

/// Double-column mapping: the column matching the sign of `w` is programmed
/// proportionally between `g_off` and `g_on`, the other stays at `g_off`.
pub fn map_weight(w: f64, w_max: f64, g_on: f64, g_off: f64) -> Result<MappedWeight> {
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(Error::config(format!("w_max must be positive, got {w_max}")));
    }
    let clipped = w.abs() > w_max;
    let frac = (w.abs() / w_max).min(1.0);
    let g = if frac == 1.0 {
        g_on
    } else {
        g_off + frac * (g_on - g_off)
    };
    let (g_pos, g_neg) = if w >= 0.0 { (g, g_off) } else { (g_off, g) };
    Ok(MappedWeight {
        g_pos,
        g_neg,
        clipped,
    })
}

/// Projects `g` onto `n` evenly spaced states in `[g_off, g_on]` (after
/// clamping). Ties go to the lower state; unbounded only clamps.
pub fn quantize_state(g: f64, n_states: StateCount, g_off: f64, g_on: f64) -> f64 {
    let g = g.clamp(g_off, g_on);
    let Some(n) = n_states.finite() else {
        return g;
    };
    let top = (n - 1) as f64;
    let step = (g_on - g_off) / top;
    if step <= 0.0 {
        return g_off;
    }
    let idx = ((g - g_off) / step - 0.5).ceil().clamp(0.0, top);
    if idx == top {
        g_on
    } else {
        g_off + idx * step
    }
}
