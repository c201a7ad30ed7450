use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memsim::AdcMode;

/// Physical constants of the tiled 1T1R accelerator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Read voltage, V.
    pub v_read: f64,
    /// Maximum cell current during inference, A.
    pub i_cell_max: f64,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub cell_bits: u32,
    pub resistance_ratio: f64,
    /// Power of one current-mode ADC, W.
    pub p_adc: f64,
    pub f_adc_nominal: f64,
    /// Bit-serial conversion rate, Hz. One conversion is one layer cycle.
    pub f_adc_bitserial: f64,
    /// Area of one ADC, mm^2.
    pub a_adc: f64,
    /// Area of one cell, mm^2.
    pub a_cell: f64,
    pub adc_mode: AdcMode,
    /// Fraction of the worst-case cell current drawn on average, in (0, 1].
    pub array_utilization: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            v_read: 0.3,
            i_cell_max: 3e-6,
            tile_rows: 256,
            tile_cols: 64,
            cell_bits: 8,
            resistance_ratio: 100.0,
            p_adc: 2e-4,
            f_adc_nominal: 40e6,
            f_adc_bitserial: 5e6,
            a_adc: 3e-3,
            a_cell: 1.69e-7,
            adc_mode: AdcMode::PerPairDifferential,
            array_utilization: 1.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v_read", self.v_read),
            ("i_cell_max", self.i_cell_max),
            ("resistance_ratio", self.resistance_ratio),
            ("p_adc", self.p_adc),
            ("f_adc_nominal", self.f_adc_nominal),
            ("f_adc_bitserial", self.f_adc_bitserial),
            ("a_adc", self.a_adc),
            ("a_cell", self.a_cell),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("cost parameter {name} must be positive, got {v}")));
            }
        }
        if self.tile_rows == 0 || self.tile_cols < 2 || !self.tile_cols.is_multiple_of(2) {
            return Err(Error::config("tiles need >= 1 row and an even number of columns"));
        }
        if self.cell_bits == 0 {
            return Err(Error::config("cell_bits must be positive"));
        }
        if !(self.array_utilization > 0.0 && self.array_utilization <= 1.0) {
            return Err(Error::config(format!(
                "array_utilization must be in (0, 1], got {}",
                self.array_utilization
            )));
        }
        Ok(())
    }

    /// Duration of one bit-serial conversion, s.
    pub fn t_conv(&self) -> f64 {
        1.0 / self.f_adc_bitserial
    }

    /// Cell area of one full tile, mm^2.
    pub fn tile_cell_area(&self) -> f64 {
        (self.tile_rows * self.tile_cols) as f64 * self.a_cell
    }
}
