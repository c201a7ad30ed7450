use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the positive/negative column subtraction happens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdcMode {
    /// One ADC per column pair converts the analog difference.
    #[default]
    PerPairDifferential,
    /// Every column has its own ADC; subtraction is digital.
    PerColumn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    /// Full-scale current of one read, amperes.
    pub i_fullscale: f64,
    pub mode: AdcMode,
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=31).contains(&self.bits) {
            return Err(Error::config(format!("ADC bits must be in 1..=31, got {}", self.bits)));
        }
        if !(self.i_fullscale > 0.0 && self.i_fullscale.is_finite()) {
            return Err(Error::config("ADC full scale must be positive"));
        }
        Ok(())
    }

    /// Current represented by one code step: `i_fullscale / (2^bits - 1)`.
    pub fn step(&self) -> f64 {
        self.i_fullscale / self.top_code()
    }

    fn top_code(&self) -> f64 {
        ((1u64 << self.bits) - 1) as f64
    }
}

/// Uniform quantisation with saturation. Differential mode is symmetric
/// about zero over `[-fs, +fs]`; per-column mode is unipolar over `[0, fs]`.
/// Both use `2^bits - 1` steps per polarity and round ties toward zero.
pub fn adc_read(i: f64, adc: &AdcConfig) -> f64 {
    let step = adc.step();
    let top = adc.top_code();
    let magnitude = match adc.mode {
        AdcMode::PerPairDifferential => i.abs(),
        AdcMode::PerColumn => i.max(0.0),
    };
    let code = ((magnitude / step) - 0.5).ceil().clamp(0.0, top);
    let value = code * step;
    if adc.mode == AdcMode::PerPairDifferential && i < 0.0 {
        -value
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn adc(bits: u32, fs: f64, mode: AdcMode) -> AdcConfig {
        AdcConfig {
            bits,
            i_fullscale: fs,
            mode,
        }
    }

    #[test]
    fn zero_reads_zero() {
        assert_eq!(adc_read(0.0, &adc(8, 1.0, AdcMode::PerPairDifferential)), 0.0);
        assert_eq!(adc_read(0.0, &adc(8, 1.0, AdcMode::PerColumn)), 0.0);
    }

    #[test]
    fn full_scale_reads_top_code_and_saturates() {
        let a = adc(8, 2e-3, AdcMode::PerPairDifferential);
        assert!((adc_read(2e-3, &a) - 2e-3).abs() < 1e-18);
        assert!((adc_read(5e-3, &a) - 2e-3).abs() < 1e-18);
        assert!((adc_read(-5e-3, &a) + 2e-3).abs() < 1e-18);
        let c = adc(8, 2e-3, AdcMode::PerColumn);
        assert_eq!(adc_read(-1e-3, &c), 0.0);
    }

    #[test]
    fn half_scale_eight_bit() {
        // 0.5 sits exactly between codes 127 and 128 of 255; ties go to 127.
        let v = adc_read(0.5, &adc(8, 1.0, AdcMode::PerPairDifferential));
        assert!((v - 127.0 / 255.0).abs() < 1e-15);
        assert!((v - 0.49803).abs() < 1e-5);
    }

    #[test]
    fn validation() {
        assert!(adc(0, 1.0, AdcMode::PerColumn).validate().is_err());
        assert!(adc(8, 0.0, AdcMode::PerColumn).validate().is_err());
        assert!(adc(8, 1.0, AdcMode::PerColumn).validate().is_ok());
    }

    proptest! {
        #[test]
        fn quantisation_error_bounded(i in -1.0f64..1.0, bits in 1u32..16) {
            let a = adc(bits, 1.0, AdcMode::PerPairDifferential);
            let err = (adc_read(i, &a) - i).abs();
            prop_assert!(err <= 1.0 / (1u64 << bits) as f64 + 1e-15);
        }

        #[test]
        fn differential_read_is_odd(i in -2.0f64..2.0) {
            let a = adc(6, 1.0, AdcMode::PerPairDifferential);
            prop_assert_eq!(adc_read(-i, &a), -adc_read(i, &a));
        }
    }
}
