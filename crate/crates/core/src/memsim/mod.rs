//! Memristive crossbar simulation: device variability, conductance mapping,
//! tiled vector-matrix products, ADC read-out and per-layer tuning.

pub mod adc;
pub mod convert;
pub mod device;
pub mod mapping;
pub mod tile;
pub mod tuning;

pub use adc::{adc_read, AdcConfig, AdcMode};
pub use convert::{
    convert_network, mapped_forward, AdcSettings, ConversionOptions, MappedLayer, MappedNetwork,
    MappedStage, RowPartition,
};
pub use device::{
    bound_pair, draw_raw, sample_device_pair, DeviceConfig, DevicePair, DeviceSampler, RawDraw,
    StateCount,
};
pub use mapping::{map_weight, quantize_state, MappedWeight};
pub use tile::{crossbar_vmm, CrossbarTile, MAX_TILE_COLS, MAX_TILE_ROWS};
pub use tuning::{fit_affine_tuning, AffineFit};
