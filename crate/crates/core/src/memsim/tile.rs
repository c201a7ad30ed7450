use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAX_TILE_ROWS: usize = 256;
pub const MAX_TILE_COLS: usize = 64;

/// One crossbar array: programmed conductances plus the per-device bounds
/// they were programmed against. All values in siemens, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossbarTile {
    pub conductance: Tensor<f64>,
    pub g_on: Tensor<f64>,
    pub g_off: Tensor<f64>,
}

impl CrossbarTile {
    pub fn new(conductance: Tensor<f64>, g_on: Tensor<f64>, g_off: Tensor<f64>) -> Result<Self> {
        let &[rows, cols] = conductance.shape() else {
            return Err(Error::shape("tile conductance must be rows x cols"));
        };
        if rows == 0 || cols == 0 || rows > MAX_TILE_ROWS || cols > MAX_TILE_COLS {
            return Err(Error::shape(format!(
                "tile {rows}x{cols} outside 1..={MAX_TILE_ROWS} x 1..={MAX_TILE_COLS}"
            )));
        }
        if g_on.shape() != conductance.shape() || g_off.shape() != conductance.shape() {
            return Err(Error::shape("device bound matrices must match the tile"));
        }
        let tile = CrossbarTile {
            conductance,
            g_on,
            g_off,
        };
        if let Some(i) = tile.first_violation() {
            return Err(Error::config(format!(
                "cell {i} violates g_off <= g <= g_on with g_on > g_off > 0"
            )));
        }
        Ok(tile)
    }

    pub fn rows(&self) -> usize {
        self.conductance.shape()[0]
    }

    pub fn cols(&self) -> usize {
        self.conductance.shape()[1]
    }

    /// Flat index of the first cell outside its own device bounds.
    pub fn first_violation(&self) -> Option<usize> {
        let g = self.conductance.data();
        let hi = self.g_on.data();
        let lo = self.g_off.data();
        (0..g.len()).find(|&i| !(lo[i] > 0.0 && hi[i] > lo[i] && lo[i] <= g[i] && g[i] <= hi[i]))
    }
}

/// Column currents `i_j = sum_i v_i * G_ij` with ideal wires.
pub fn crossbar_vmm(v: &[f64], tile: &CrossbarTile) -> Result<Vec<f64>> {
    if v.len() != tile.rows() {
        return Err(Error::shape(format!(
            "tile has {} rows, got {} voltages",
            tile.rows(),
            v.len()
        )));
    }
    let mut out = vec![0.0; tile.cols()];
    vmm_into(v, tile, &mut out);
    Ok(out)
}

/// Accumulates column currents into `out` (length = tile cols).
pub(crate) fn vmm_into(v: &[f64], tile: &CrossbarTile, out: &mut [f64]) {
    let cols = tile.cols();
    for (row, &vi) in tile.conductance.data().chunks_exact(cols).zip(v) {
        if vi == 0.0 {
            continue;
        }
        for (o, &g) in out.iter_mut().zip(row) {
            *o += vi * g;
        }
    }
}
