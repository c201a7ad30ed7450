//! Signed fixed-point quantisation of weights and activations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::NetworkSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Two's-complement format with `word_length` bits, `fraction_length` of
/// them after the binary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointFormat {
    pub word_length: u32,
    pub fraction_length: u32,
}

impl FixedPointFormat {
    pub fn new(word_length: u32, fraction_length: u32) -> Result<Self> {
        let f = FixedPointFormat {
            word_length,
            fraction_length,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let (wl, fl) = (self.word_length, self.fraction_length);
        if !(1 <= fl && fl < wl && wl <= 32) {
            return Err(Error::config(format!(
                "fixed-point format needs 1 <= FL < WL <= 32, got WL={wl} FL={fl}"
            )));
        }
        Ok(())
    }

    /// Value of one least significant bit.
    pub fn lsb(&self) -> f64 {
        (-(self.fraction_length as f64)).exp2()
    }

    pub fn min_value(&self) -> f64 {
        -((self.word_length - 1) as f64).exp2() * self.lsb()
    }

    pub fn max_value(&self) -> f64 {
        (((self.word_length - 1) as f64).exp2() - 1.0) * self.lsb()
    }
}

impl std::fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q{}.{}", self.word_length - self.fraction_length, self.fraction_length)
    }
}

/// Rounds to the nearest multiple of the LSB (ties to even) and saturates.
pub fn fx_quantize<T: Scalar>(w: T, fmt: &FixedPointFormat) -> T {
    let scale = (fmt.fraction_length as f64).exp2();
    let lo = -((fmt.word_length - 1) as f64).exp2();
    let hi = -lo - 1.0;
    let code = (w.as_f64() * scale).round_ties_even().clamp(lo, hi);
    T::of(code / scale)
}

pub fn fx_quantize_tensor<T: Scalar>(t: &Tensor<T>, fmt: &FixedPointFormat) -> Tensor<T> {
    t.map(|v| fx_quantize(v, fmt))
}

/// Formats used for one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormatTable {
    /// Weight and bias format unless overridden.
    pub weights: FixedPointFormat,
    /// Format of every weighted layer's input; `None` keeps activations in float.
    pub activations: Option<FixedPointFormat>,
    /// Overrides keyed by weighted-layer index (evaluation order).
    pub per_layer: BTreeMap<usize, FixedPointFormat>,
}

impl Default for FormatTable {
    fn default() -> Self {
        FormatTable {
            weights: FixedPointFormat {
                word_length: 16,
                fraction_length: 13,
            },
            activations: Some(FixedPointFormat {
                word_length: 16,
                fraction_length: 10,
            }),
            per_layer: BTreeMap::new(),
        }
    }
}

impl FormatTable {
    /// Same format for weights everywhere, activations left in float.
    pub fn weights_only(fmt: FixedPointFormat) -> Self {
        FormatTable {
            weights: fmt,
            activations: None,
            per_layer: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if let Some(a) = &self.activations {
            a.validate()?;
        }
        self.per_layer.values().try_for_each(FixedPointFormat::validate)
    }

    pub fn for_layer(&self, index: usize) -> &FixedPointFormat {
        self.per_layer.get(&index).unwrap_or(&self.weights)
    }
}

/// Quantised weights plus the activation format applied at inference.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointNetwork<T> {
    pub net: NetworkSpec<T>,
    pub activations: Option<FixedPointFormat>,
}

impl<T: Scalar> FixedPointNetwork<T> {
    pub fn forward_logits(&self, inputs: &[Tensor<T>]) -> Result<Tensor<T>> {
        match &self.activations {
            Some(fmt) => self
                .net
                .forward_logits_with(inputs, |_, x| fx_quantize_tensor(&x, fmt)),
            None => self.net.forward_logits(inputs),
        }
    }

    pub fn predict(&self, inputs: &[Tensor<T>]) -> Result<usize> {
        self.forward_logits(inputs).map(|l| l.argmax())
    }
}

/// Quantises every weight and bias; the structure is unchanged.
pub fn quantize_network<T: Scalar>(net: &NetworkSpec<T>, formats: &FormatTable) -> Result<FixedPointNetwork<T>> {
    formats.validate()?;
    let mut q = net.clone();
    for (i, layer) in q.weighted_layers_mut().enumerate() {
        let fmt = *formats.for_layer(i);
        layer.weights = fx_quantize_tensor(&layer.weights, &fmt);
        layer.bias = fx_quantize_tensor(&layer.bias, &fmt);
    }
    Ok(FixedPointNetwork {
        net: q,
        activations: formats.activations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;
    use proptest::prelude::*;

    fn q8_6() -> FixedPointFormat {
        FixedPointFormat::new(8, 6).unwrap()
    }

    #[test]
    fn small_format_examples() {
        let f = q8_6();
        assert_eq!(fx_quantize(0.5, &f), 0.5);
        assert_eq!(fx_quantize(0.013, &f), 0.015625);
        assert_eq!(fx_quantize(3.0, &f), 1.984375);
        assert_eq!(fx_quantize(-3.0, &f), -2.0);
        assert_eq!(fx_quantize(0.013f32, &f), 0.015625f32);
    }

    #[test]
    fn ties_go_to_even() {
        let f = q8_6();
        // 1.5 and 2.5 LSBs
        assert_eq!(fx_quantize(1.5 / 64.0, &f), 2.0 / 64.0);
        assert_eq!(fx_quantize(2.5 / 64.0, &f), 2.0 / 64.0);
        assert_eq!(fx_quantize(-2.5 / 64.0, &f), -2.0 / 64.0);
    }

    #[test]
    fn format_bounds() {
        assert!(FixedPointFormat::new(8, 8).is_err());
        assert!(FixedPointFormat::new(33, 4).is_err());
        assert!(FixedPointFormat::new(8, 0).is_err());
        let f = q8_6();
        assert_eq!((f.min_value(), f.max_value()), (-2.0, 1.984375));
        assert_eq!(f.to_string(), "Q2.6");
    }

    #[test]
    fn network_quantisation_keeps_structure() {
        let net: NetworkSpec<f64> = Architecture::mlp("6-5-3").unwrap().build(2).unwrap();
        let fmt = FixedPointFormat::new(32, 24).unwrap();
        let q = quantize_network(&net, &FormatTable::weights_only(fmt)).unwrap();
        for (a, b) in net.weighted_layers().zip(q.net.weighted_layers()) {
            assert_eq!(a.kind, b.kind);
            for (x, y) in a.weights.data().iter().zip(b.weights.data()) {
                assert!((x - y).abs() <= (-25f64).exp2());
            }
        }
        let twice = quantize_network(&q.net, &FormatTable::weights_only(fmt)).unwrap();
        assert_eq!(twice.net, q.net);
    }

    #[test]
    fn per_layer_override_applies() {
        let net: NetworkSpec<f64> = Architecture::mlp("6-5-3").unwrap().build(2).unwrap();
        let mut table = FormatTable::weights_only(FixedPointFormat::new(16, 13).unwrap());
        table.per_layer.insert(1, FixedPointFormat::new(3, 1).unwrap());
        let q = quantize_network(&net, &table).unwrap();
        let last = q.net.weighted_layers().nth(1).unwrap();
        assert!(last.weights.data().iter().all(|w| (w * 2.0).fract() == 0.0));
    }

    proptest! {
        #[test]
        fn error_within_half_lsb(w in -1.9f64..1.9, fl in 1u32..12) {
            let f = FixedPointFormat::new(fl + 2, fl).unwrap();
            prop_assume!(w >= f.min_value() && w <= f.max_value());
            prop_assert!((fx_quantize(w, &f) - w).abs() <= f.lsb() / 2.0);
        }

        #[test]
        fn monotone(a in -10.0f64..10.0, b in -10.0f64..10.0, wl in 2u32..20) {
            let f = FixedPointFormat::new(wl, wl / 2).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(fx_quantize(lo, &f) <= fx_quantize(hi, &f));
        }

        #[test]
        fn finer_fraction_never_worse(w in -0.99f64..0.99, fl in 1u32..20) {
            // both formats cover (-1, 1)
            let coarse = FixedPointFormat::new(fl + 2, fl).unwrap();
            let fine = FixedPointFormat::new(fl + 3, fl + 1).unwrap();
            let e1 = (fx_quantize(w, &coarse) - w).abs();
            let e2 = (fx_quantize(w, &fine) - w).abs();
            prop_assert!(e2 <= e1 + 1e-15);
        }
    }
}
