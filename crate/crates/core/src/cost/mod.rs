//! Energy, latency, EDP and area of networks mapped onto tiled crossbars.

pub mod model;
pub mod params;
pub mod published;

pub use model::{
    area, describe, edp, energy, evaluate, latency, tile_layout, CostBranch, CostGraph, CostLayer,
    CostReport, LayerCost, TileLayout,
};
pub use params::CostParams;
pub use published::PublishedRow;
