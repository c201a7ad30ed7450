//! Device-to-device variability of R_ON / R_OFF.
//!
//! Every device consumes exactly two 64-bit words from a ChaCha8 stream
//! (one Box-Muller pair), so device `i` of stream `s` always sees the same
//! draws regardless of how many devices were sampled before it.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 32-bit words consumed per device.
const WORDS_PER_DEVICE: u128 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateCount {
    Finite(u32),
    Unbounded(UnboundedTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnboundedTag {
    Unbounded,
}

impl StateCount {
    pub const UNBOUNDED: StateCount = StateCount::Unbounded(UnboundedTag::Unbounded);

    pub fn finite(self) -> Option<u32> {
        match self {
            StateCount::Finite(n) => Some(n),
            StateCount::Unbounded(_) => None,
        }
    }
}

impl std::str::FromStr for StateCount {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "unbounded" {
            return Ok(StateCount::UNBOUNDED);
        }
        s.parse()
            .map(StateCount::Finite)
            .map_err(|_| Error::config(format!("n_states `{s}` is neither an integer nor `unbounded`")))
    }
}

impl std::fmt::Display for StateCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateCount::Finite(n) => write!(f, "{n}"),
            StateCount::Unbounded(_) => f.write_str("unbounded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Mean ON resistance, ohms.
    pub r_on_mean: f64,
    /// Mean OFF resistance, ohms.
    pub r_off_mean: f64,
    /// Standard deviation of R_ON in ohms; R_OFF uses twice this.
    pub sigma: f64,
    pub n_states: StateCount,
    pub seed: u64,
    /// Lower bound applied to every sampled resistance, ohms.
    pub positivity_floor: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            r_on_mean: 100.0,
            r_off_mean: 2500.0,
            sigma: 0.0,
            n_states: StateCount::Finite(256),
            seed: 0,
            positivity_floor: 1.0,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_on_mean, self.r_off_mean, self.sigma, self.positivity_floor]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("device parameters must be finite"));
        }
        if !(self.r_on_mean > 0.0 && self.r_on_mean < self.r_off_mean) {
            return Err(Error::config(format!(
                "need 0 < r_on_mean < r_off_mean, got {} and {}",
                self.r_on_mean, self.r_off_mean
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::config("sigma must be >= 0"));
        }
        if self.positivity_floor <= 0.0 {
            return Err(Error::config("positivity_floor must be > 0"));
        }
        if let StateCount::Finite(n) = self.n_states {
            if n < 2 {
                return Err(Error::config("n_states must be >= 2 or unbounded"));
            }
        }
        Ok(())
    }

    /// Nominal ON conductance, siemens.
    pub fn g_on_nominal(&self) -> f64 {
        1.0 / self.r_on_mean
    }

    /// Nominal OFF conductance, siemens.
    pub fn g_off_nominal(&self) -> f64 {
        1.0 / self.r_off_mean
    }
}

/// Resistances of one device after clamping and ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DevicePair {
    pub r_on: f64,
    pub r_off: f64,
}

impl DevicePair {
    pub fn g_on(&self) -> f64 {
        1.0 / self.r_on
    }

    pub fn g_off(&self) -> f64 {
        1.0 / self.r_off
    }
}

/// Raw Gaussian draw before the positivity clamp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawDraw {
    pub r_on: f64,
    pub r_off: f64,
}

/// Normal(r_on_mean, sigma) and Normal(r_off_mean, 2 sigma) from one Box-Muller pair.
pub fn draw_raw<R: RngCore>(cfg: &DeviceConfig, rng: &mut R) -> RawDraw {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    RawDraw {
        r_off: cfg.r_off_mean + 2.0 * cfg.sigma * radius * angle.cos(),
        r_on: cfg.r_on_mean + cfg.sigma * radius * angle.sin(),
    }
}

/// Clamps both resistances to the positivity floor, then enforces `r_on < r_off`
/// by swapping. If both land on the same value, `r_off` is raised by one floor.
pub fn bound_pair(cfg: &DeviceConfig, raw: RawDraw) -> DevicePair {
    let mut r_on = raw.r_on.max(cfg.positivity_floor);
    let mut r_off = raw.r_off.max(cfg.positivity_floor);
    if r_on > r_off {
        std::mem::swap(&mut r_on, &mut r_off);
    }
    if r_on == r_off {
        r_off = r_on + cfg.positivity_floor;
    }
    DevicePair { r_on, r_off }
}

pub fn sample_device_pair<R: RngCore>(cfg: &DeviceConfig, rng: &mut R) -> DevicePair {
    bound_pair(cfg, draw_raw(cfg, rng))
}

/// Addressable device stream: `(cfg.seed, stream)` selects the ChaCha stream,
/// the device index selects the position within it.
pub struct DeviceSampler {
    cfg: DeviceConfig,
    rng: ChaCha8Rng,
}

impl DeviceSampler {
    pub fn new(cfg: &DeviceConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        DeviceSampler {
            cfg: cfg.clone(),
            rng,
        }
    }

    /// Next device in sequence.
    pub fn next_pair(&mut self) -> DevicePair {
        sample_device_pair(&self.cfg, &mut self.rng)
    }

    /// Device at an absolute index; repositions the stream.
    pub fn pair_at(&mut self, index: u64) -> DevicePair {
        self.rng.set_word_pos(index as u128 * WORDS_PER_DEVICE);
        self.next_pair()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_nominal() {
        let cfg = DeviceConfig::default();
        let mut s = DeviceSampler::new(&cfg, 0);
        for _ in 0..100 {
            assert_eq!(s.next_pair(), DevicePair { r_on: 100.0, r_off: 2500.0 });
        }
    }

    #[test]
    fn draws_are_addressable() {
        let cfg = DeviceConfig {
            sigma: 300.0,
            seed: 42,
            ..DeviceConfig::default()
        };
        let mut seq = DeviceSampler::new(&cfg, 3);
        let first: Vec<_> = (0..50).map(|_| seq.next_pair()).collect();
        let mut rnd = DeviceSampler::new(&cfg, 3);
        for i in [49u64, 0, 17, 33, 17] {
            assert_eq!(rnd.pair_at(i), first[i as usize]);
        }
        let mut other = DeviceSampler::new(&cfg, 4);
        assert_ne!(other.pair_at(0), first[0]);
    }

    #[test]
    fn clamping_and_ordering() {
        let cfg = DeviceConfig::default();
        let p = bound_pair(&cfg, RawDraw { r_on: -50.0, r_off: 2000.0 });
        assert_eq!(p, DevicePair { r_on: 1.0, r_off: 2000.0 });
        let p = bound_pair(&cfg, RawDraw { r_on: 900.0, r_off: 400.0 });
        assert_eq!(p, DevicePair { r_on: 400.0, r_off: 900.0 });
        let p = bound_pair(&cfg, RawDraw { r_on: -3.0, r_off: -7.0 });
        assert_eq!(p, DevicePair { r_on: 1.0, r_off: 2.0 });
    }

    #[test]
    fn large_sigma_keeps_invariants() {
        let cfg = DeviceConfig {
            sigma: 5000.0,
            seed: 9,
            ..DeviceConfig::default()
        };
        let mut s = DeviceSampler::new(&cfg, 0);
        for _ in 0..10_000 {
            let p = s.next_pair();
            assert!(p.r_on >= 1.0 && p.r_off > p.r_on);
        }
    }

    #[test]
    fn config_validation() {
        assert!(DeviceConfig::default().validate().is_ok());
        let bad = [
            DeviceConfig { r_on_mean: 3000.0, ..DeviceConfig::default() },
            DeviceConfig { sigma: -1.0, ..DeviceConfig::default() },
            DeviceConfig { positivity_floor: 0.0, ..DeviceConfig::default() },
            DeviceConfig { n_states: StateCount::Finite(1), ..DeviceConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn state_count_serde() {
        let u: StateCount = serde_json::from_str("\"unbounded\"").unwrap();
        assert_eq!(u, StateCount::UNBOUNDED);
        let f: StateCount = serde_json::from_str("16").unwrap();
        assert_eq!(f, StateCount::Finite(16));
        assert!(serde_json::from_str::<StateCount>("\"many\"").is_err());
    }
}
