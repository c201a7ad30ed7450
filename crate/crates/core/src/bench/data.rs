//! Synthetic two-modality hand-gesture stand-in: 16 EMG features and a
//! 32x32 frame per sample, recorded over three sessions.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const NUM_CLASSES: usize = 5;
pub const NUM_SESSIONS: usize = 3;
pub const EMG_FEATURES: usize = 16;
pub const IMAGE_SIDE: usize = 32;

/// Which sensor inputs a network consumes, in branch order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "EMG")]
    Emg,
    #[serde(rename = "APS")]
    Aps,
    #[serde(rename = "EMG+APS")]
    EmgAps,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Emg => "EMG",
            Modality::Aps => "APS",
            Modality::EmgAps => "EMG+APS",
        })
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EMG" => Ok(Modality::Emg),
            "APS" => Ok(Modality::Aps),
            "EMG+APS" => Ok(Modality::EmgAps),
            other => Err(Error::config(format!("unknown modality `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    /// `N x 16`
    pub emg: Tensor<T>,
    /// `N x 1 x 32 x 32`
    pub images: Tensor<T>,
    pub labels: Vec<usize>,
    pub sessions: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(emg: Tensor<T>, images: Tensor<T>, labels: Vec<usize>, sessions: Vec<usize>) -> Result<Self> {
        let ds = Dataset {
            emg,
            images,
            labels,
            sessions,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.emg.shape() != [n, EMG_FEATURES] {
            return Err(Error::shape(format!("emg must be {n}x{EMG_FEATURES}, got {:?}", self.emg.shape())));
        }
        if self.images.shape() != [n, 1, IMAGE_SIDE, IMAGE_SIDE] {
            return Err(Error::shape(format!(
                "images must be {n}x1x{IMAGE_SIDE}x{IMAGE_SIDE}, got {:?}",
                self.images.shape()
            )));
        }
        if self.sessions.len() != n {
            return Err(Error::shape("one session index per sample is required"));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::config(format!("label {l} outside 0..{NUM_CLASSES}")));
        }
        if let Some(&s) = self.sessions.iter().find(|&&s| s >= NUM_SESSIONS) {
            return Err(Error::config(format!("session {s} outside 0..{NUM_SESSIONS}")));
        }
        let mut seen = [[false; NUM_CLASSES]; NUM_SESSIONS];
        for (&l, &s) in self.labels.iter().zip(&self.sessions) {
            seen[s][l] = true;
        }
        for (s, row) in seen.iter().enumerate() {
            if let Some(c) = row.iter().position(|&b| !b) {
                return Err(Error::config(format!("session {s} has no sample of class {c}")));
            }
        }
        self.emg.ensure_finite("emg features")?;
        self.images.ensure_finite("images")
    }

    pub fn emg_sample(&self, i: usize) -> Tensor<T> {
        let d = &self.emg.data()[i * EMG_FEATURES..(i + 1) * EMG_FEATURES];
        Tensor::vector(d.to_vec())
    }

    pub fn image_sample(&self, i: usize) -> Tensor<T> {
        let px = IMAGE_SIDE * IMAGE_SIDE;
        let d = &self.images.data()[i * px..(i + 1) * px];
        Tensor::new(vec![1, IMAGE_SIDE, IMAGE_SIDE], d.to_vec()).expect("fixed image shape")
    }

    /// Network inputs of sample `i`, one tensor per branch.
    pub fn inputs(&self, i: usize, modality: Modality) -> Vec<Tensor<T>> {
        match modality {
            Modality::Emg => vec![self.emg_sample(i)],
            Modality::Aps => vec![self.image_sample(i)],
            Modality::EmgAps => vec![self.emg_sample(i), self.image_sample(i)],
        }
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            emg: self.emg.cast(),
            images: self.images.cast(),
            labels: self.labels.clone(),
            sessions: self.sessions.clone(),
        }
    }

    /// EMG features as CSV: `sample_id,session,label,f0..f15`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id".to_string(), "session".into(), "label".into()];
        header.extend((0..EMG_FEATURES).map(|k| format!("f{k}")));
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut rec = vec![i.to_string(), self.sessions[i].to_string(), self.labels[i].to_string()];
            rec.extend(self.emg_sample(i).data().iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::config(format!("csv: {other:?}")),
    }
}

/// Generator settings. Standard deviations are in feature / pixel units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_per_class_session: usize,
    pub seed: u64,
    /// Class centroids are `centroid_scale * e_c`.
    pub centroid_scale: f64,
    pub emg_std: f64,
    pub session_shift_std: f64,
    pub pixel_noise_std: f64,
    /// Maximum pattern displacement in pixels, each direction.
    pub jitter: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_per_class_session: 40,
            seed: 0,
            centroid_scale: 2.0,
            emg_std: 0.6,
            session_shift_std: 0.3,
            pixel_noise_std: 0.1,
            jitter: 3,
        }
    }
}

impl SyntheticConfig {
    /// Same layout with every noise source switched off.
    pub fn noiseless(n_per_class_session: usize, seed: u64) -> Self {
        SyntheticConfig {
            n_per_class_session,
            seed,
            emg_std: 0.0,
            session_shift_std: 0.0,
            pixel_noise_std: 0.0,
            jitter: 0,
            ..SyntheticConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class_session == 0 {
            return Err(Error::config("n_per_class_session must be >= 1"));
        }
        let stds = [self.emg_std, self.session_shift_std, self.pixel_noise_std, self.centroid_scale];
        if stds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::config("noise levels and centroid scale must be finite and >= 0"));
        }
        if self.jitter > 6 {
            return Err(Error::config("jitter above 6 pixels pushes patterns off the frame"));
        }
        Ok(())
    }
}

/// Default-noise dataset with `n` samples per (class, session).
pub fn gen_synthetic(n_per_class_session: usize, seed: u64) -> Result<Dataset<f64>> {
    gen_synthetic_with(&SyntheticConfig {
        n_per_class_session,
        seed,
        ..SyntheticConfig::default()
    })
}

pub fn gen_synthetic_with(cfg: &SyntheticConfig) -> Result<Dataset<f64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = |std: f64| Normal::new(0.0, std).expect("validated std");
    let n = cfg.n_per_class_session * NUM_CLASSES * NUM_SESSIONS;
    let px = IMAGE_SIDE * IMAGE_SIDE;
    let mut emg = Vec::with_capacity(n * EMG_FEATURES);
    let mut images = Vec::with_capacity(n * px);
    let mut labels = Vec::with_capacity(n);
    let mut sessions = Vec::with_capacity(n);
    for session in 0..NUM_SESSIONS {
        let shift: Vec<f64> = (0..EMG_FEATURES)
            .map(|_| normal(cfg.session_shift_std).sample(&mut rng))
            .collect();
        for class in 0..NUM_CLASSES {
            for _ in 0..cfg.n_per_class_session {
                for (k, s) in shift.iter().enumerate() {
                    let centre = if k == class { cfg.centroid_scale } else { 0.0 };
                    emg.push(centre + s + normal(cfg.emg_std).sample(&mut rng));
                }
                let j = cfg.jitter as i64;
                let dy = rng.random_range(-j..=j) as isize;
                let dx = rng.random_range(-j..=j) as isize;
                let start = images.len();
                images.extend(pattern(class, dy, dx));
                for p in &mut images[start..] {
                    *p += normal(cfg.pixel_noise_std).sample(&mut rng);
                }
                labels.push(class);
                sessions.push(session);
            }
        }
    }
    Dataset::new(
        Tensor::new(vec![n, EMG_FEATURES], emg)?,
        Tensor::new(vec![n, 1, IMAGE_SIDE, IMAGE_SIDE], images)?,
        labels,
        sessions,
    )
}

/// Noise-free frame of one class, shifted by `(dy, dx)` pixels.
pub fn pattern(class: usize, dy: isize, dx: isize) -> Vec<f64> {
    let s = IMAGE_SIDE as isize;
    let mut img = vec![0.0; IMAGE_SIDE * IMAGE_SIDE];
    let mut set = |y: isize, x: isize| {
        let (y, x) = (y + dy, x + dx);
        if (0..s).contains(&y) && (0..s).contains(&x) {
            img[(y * s + x) as usize] = 1.0;
        }
    };
    match class {
        // horizontal bar in the upper half
        0 => (6..26).for_each(|x| (9..12).for_each(|y| set(y, x))),
        // vertical bar in the right half
        1 => (6..26).for_each(|y| (20..23).for_each(|x| set(y, x))),
        // centred cross
        2 => (8..24).for_each(|t| {
            (15..17).for_each(|w| {
                set(t, w);
                set(w, t);
            })
        }),
        // diagonal band
        3 => (6..26).for_each(|t| (-1..=1).for_each(|w| set(t, t + w))),
        // square outline
        _ => (9..23).for_each(|t| {
            for w in [9, 10, 21, 22] {
                set(t, w);
                set(w, t);
            }
        }),
    }
    img
}
