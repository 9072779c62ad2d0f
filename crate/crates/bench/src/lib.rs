//! Shared fixtures for the benchmarks under `benches/`.

use griffith_core::energy::{Density, EnergyModel};
use griffith_core::fields::{sample_analytic, Base, DisplacementJet, FieldSpec, Grid, Piece, SmoothMap};

pub fn model(eps: f64) -> EnergyModel {
    EnergyModel::new(Density::default(), eps, 0.9, 0.8, 1.0).expect("admissible parameters")
}

/// Unit square with a frame of two cells on each side of the inner square.
pub fn boxed_grid(cells: usize) -> Grid {
    let h = 1.0 / cells as f64;
    let inner = (2.0 * h, 1.0 - 2.0 * h);
    Grid::new(&[(0.0, 1.0), (0.0, 1.0)], &[inner, inner], h).expect("valid grid")
}

pub fn affine_datum(grid: &Grid, eps: f64) -> DisplacementJet {
    let spec = FieldSpec {
        base: Base::Zero,
        pieces: vec![Piece {
            region: None,
            map: SmoothMap { linear: vec![vec![0.4, 0.1], vec![0.0, -0.1]], ..Default::default() },
        }],
        cracks: vec![],
    };
    DisplacementJet::without_divergence(sample_analytic(grid, &spec, eps).expect("sampled datum"))
}
