//! Reference configurations used by tests, benchmarks and the command line.

use crate::error::Result;
use crate::fields::{Base, FieldSpec, Grid, Piece, SmoothMap};
use crate::linalg::Mat;

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    m.to_rows()
}

/// Grid on (−1, 1)² with the frame outside (−0.5, 0.5)².
pub fn kink_grid(h: f64) -> Result<Grid> {
    Grid::new(&[(-1.0, 1.0), (-1.0, 1.0)], &[(-0.5, 0.5), (-0.5, 0.5)], h)
}

/// x on {x₁ < 0} and (2x₁ + δ, x₂) on {x₁ > 0}. For δ = 0 only the gradient jumps.
pub fn stretch_kink(delta: f64) -> FieldSpec {
    FieldSpec {
        base: Base::Identity,
        pieces: vec![
            Piece { region: Some(vec![[-1.0, 0.0], [-1.0, 1.0]]), map: SmoothMap::default() },
            Piece {
                region: None,
                map: SmoothMap {
                    offset: vec![delta, 0.0],
                    linear: vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                    ..Default::default()
                },
            },
        ],
        cracks: vec![],
    }
}

/// Grid on (0, 3) × (0, 1) whose frame is the left unit square.
pub fn block_grid(h: f64) -> Result<Grid> {
    Grid::new(&[(0.0, 3.0), (0.0, 1.0)], &[(1.0, 3.0), (0.0, 1.0)], h)
}

/// Cells with center x₁ < 2 form the left block.
pub const BLOCK_SPLIT: f64 = 2.0;

/// Identity on the left block and R(εθ)(Id + εS)x on the right block x₁ > 2.
/// With S = 0 the right block is rotated rigidly by an angle of order ε.
pub fn rotated_block(theta: f64, strain: &Mat) -> FieldSpec {
    FieldSpec {
        base: Base::Identity,
        pieces: vec![
            Piece { region: Some(vec![[0.0, BLOCK_SPLIT], [0.0, 1.0]]), map: SmoothMap::default() },
            Piece {
                region: None,
                map: SmoothMap { eps_rotation: theta, eps_linear: rows(strain), ..Default::default() },
            },
        ],
        cracks: vec![],
    }
}

/// Labels 0 on the left block and 1 on the right block.
pub fn block_labels(grid: &Grid) -> Vec<usize> {
    (0..grid.n_cells()).map(|c| usize::from(grid.center(c)[0] > BLOCK_SPLIT)).collect()
}

/// Displacement A x on the right block and 0 on the left block, with a jump on the split.
pub fn block_linear_displacement(a: &Mat) -> FieldSpec {
    FieldSpec {
        base: Base::Zero,
        pieces: vec![
            Piece { region: Some(vec![[0.0, BLOCK_SPLIT], [0.0, 1.0]]), map: SmoothMap::default() },
            Piece { region: None, map: SmoothMap { linear: rows(a), ..Default::default() } },
        ],
        cracks: vec![],
    }
}

/// Smooth deformation x + ε v(x) with the quadratic displacement
/// v = (a x₁² + b x₂², c x₁x₂) / 2 + s x₁ e₁.
pub fn smooth_bending(a: f64, b: f64, c: f64, s: f64) -> FieldSpec {
    FieldSpec {
        base: Base::Identity,
        pieces: vec![Piece {
            region: None,
            map: SmoothMap {
                eps_linear: vec![vec![s, 0.0], vec![0.0, 0.0]],
                eps_quadratic: vec![vec![vec![a, 0.0], vec![0.0, b]], vec![vec![0.0, 0.5 * c], vec![0.5 * c, 0.0]]],
                ..Default::default()
            },
        }],
        cracks: vec![],
    }
}
