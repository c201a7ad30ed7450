use crate::error::{Error, Result};

/// Per-layer affine correction `ideal ~ a * raw + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    /// `raw` was constant; `a` is 0 and `b` the mean of `ideal`.
    pub degenerate: bool,
}

impl AffineFit {
    pub const IDENTITY: AffineFit = AffineFit {
        a: 1.0,
        b: 0.0,
        degenerate: false,
    };

    #[inline]
    pub fn apply(&self, raw: f64) -> f64 {
        self.a * raw + self.b
    }
}

/// Ordinary least squares of `ideal` on `raw`.
pub fn fit_affine_tuning(ideal: &[f64], raw: &[f64]) -> Result<AffineFit> {
    if ideal.len() != raw.len() {
        return Err(Error::shape(format!(
            "tuning needs paired samples, got {} ideal and {} raw",
            ideal.len(),
            raw.len()
        )));
    }
    if raw.len() < 2 {
        return Err(Error::shape("tuning needs at least two samples"));
    }
    let n = raw.len() as f64;
    let mean_r = raw.iter().sum::<f64>() / n;
    let mean_y = ideal.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut scale) = (0.0, 0.0, 0.0);
    for (&r, &y) in raw.iter().zip(ideal) {
        let dr = r - mean_r;
        sxx += dr * dr;
        sxy += dr * (y - mean_y);
        scale += r * r;
    }
    if !(sxx.is_finite() && sxy.is_finite()) {
        return Err(Error::numeric("non-finite values in tuning data"));
    }
    if sxx <= scale * f64::EPSILON * f64::EPSILON {
        return Ok(AffineFit {
            a: 0.0,
            b: mean_y,
            degenerate: true,
        });
    }
    let a = sxy / sxx;
    Ok(AffineFit {
        a,
        b: mean_y - a * mean_r,
        degenerate: false,
    })
}
