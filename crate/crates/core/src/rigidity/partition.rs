use std::collections::HashMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::fields::{FacetSet, Grid, JetField};
use crate::linalg::{nearest_rotation, Mat};

/// Threshold candidates tried per bin.
pub const THRESHOLD_CANDIDATES: usize = 16;

/// Cell labels with per-label gradient representatives and fitted rotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliPartition {
    pub labels: Vec<usize>,
    /// Mean gradient F_j of each label.
    pub representatives: Vec<Mat>,
    /// Whether a label occurs on a frame cell.
    pub touches_frame: Vec<bool>,
    /// Facets separating different labels.
    pub boundary: FacetSet,
    /// Largest entrywise |F_c − F_j| over all cells.
    pub max_deviation: f64,
    /// Fitted rotations R̄_j, empty until `fit_rotations` runs.
    pub rotations: Vec<Mat>,
    /// Labels whose representative was too singular to project.
    pub degenerate: Vec<bool>,
}

impl CaccioppoliPartition {
    /// Partition with the given labels; labels must be dense `0..n`.
    pub fn from_labels(y: &JetField, labels: Vec<usize>) -> Result<Self> {
        let grid = &y.grid;
        if labels.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch { expected: grid.n_cells(), found: labels.len() });
        }
        let n = labels.iter().max().map_or(0, |m| m + 1);
        let d = grid.dim();
        let mut sums = vec![Mat::zeros(d); n];
        let mut counts = vec![0usize; n];
        let mut touches = vec![false; n];
        for (c, &l) in labels.iter().enumerate() {
            sums[l] += y.grads[c];
            counts[l] += 1;
            touches[l] |= grid.is_frame(c);
        }
        if let Some(l) = counts.iter().position(|&k| k == 0) {
            return Err(Error::InvalidParameter(format!("label {l} has no cells")));
        }
        let representatives: Vec<Mat> =
            sums.iter().zip(&counts).map(|(s, &k)| s.scale(1.0 / k as f64)).collect();
        let max_deviation = labels
            .iter()
            .enumerate()
            .map(|(c, &l)| (y.grads[c] - representatives[l]).max_abs())
            .fold(0.0, f64::max);
        let boundary = grid
            .interior_facets()
            .filter(|&f| {
                let (a, b) = grid.facet_cells(f);
                labels[a] != labels[b]
            })
            .collect();
        Ok(Self {
            labels,
            representatives,
            touches_frame: touches,
            boundary,
            max_deviation,
            rotations: Vec::new(),
            degenerate: vec![false; n],
        })
    }

    /// Every cell in one component.
    pub fn single(y: &JetField) -> Self {
        Self::from_labels(y, vec![0; y.n_cells()]).expect("a single label is always valid")
    }

    pub fn n_labels(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_fitted(&self) -> bool {
        self.rotations.len() == self.n_labels()
    }

    /// R_j = R̄_jᵀ for the label of cell `c`.
    pub fn inverse_rotation(&self, c: usize) -> Mat {
        self.rotations[self.labels[c]].transpose()
    }
}

/// Thresholds t_k ∈ (kT, (k+1)T] of one gradient component, indexed from `k0`.
struct Thresholds {
    k0: i64,
    t: Vec<f64>,
}

impl Thresholds {
    /// Bin k with t_k < v ≤ t_{k+1}.
    fn bin(&self, v: f64) -> i64 {
        // t is increasing; count thresholds strictly below v
        let below = self.t.partition_point(|&t| t < v);
        self.k0 + below as i64 - 1
    }
}

fn select_thresholds(values: &[f64], crossings: &[(f64, f64)], width: f64) -> Thresholds {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k0 = (lo / width).floor() as i64 - 1;
    let k1 = (hi / width).ceil() as i64 + 1;
    let t = (k0..=k1)
        .map(|k| {
            let base = k as f64 * width;
            let mut best = (usize::MAX, base + width);
            for s in 0..THRESHOLD_CANDIDATES {
                let cand = base + (s + 1) as f64 * width / THRESHOLD_CANDIDATES as f64;
                let cost = crossings.iter().filter(|&&(a, b)| a <= cand && cand < b).count();
                if cost < best.0 {
                    best = (cost, cand);
                }
            }
            best.1
        })
        .collect();
    Thresholds { k0, t }
}

/// Quantizes each gradient component into bins of width ε^γ, choosing per bin the
/// threshold whose superlevel set crosses the fewest facets outside J∇y, and labels
/// cells by their tuple of bins.
pub fn coarea_partition(y: &JetField, model: &EnergyModel) -> CaccioppoliPartition {
    let grid = &y.grid;
    let d = grid.dim();
    let width = model.bin_width();
    let free: Vec<(usize, usize)> = grid
        .interior_facets()
        .filter(|f| !y.jgrad.contains(f))
        .map(|f| grid.facet_cells(f))
        .collect();
    let bins: Vec<Vec<i64>> = (0..d * d)
        .into_par_iter()
        .map(|comp| {
            let (i, j) = (comp / d, comp % d);
            let values: Vec<f64> = y.grads.iter().map(|f| f[(i, j)]).collect();
            let crossings: Vec<(f64, f64)> = free
                .iter()
                .map(|&(a, b)| (values[a].min(values[b]), values[a].max(values[b])))
                .filter(|(a, b)| a < b)
                .collect();
            let th = select_thresholds(&values, &crossings, width);
            values.iter().map(|&v| th.bin(v)).collect()
        })
        .collect();
    let mut ids: HashMap<Vec<i64>, usize> = HashMap::new();
    let labels = (0..grid.n_cells())
        .map(|c| {
            let key: Vec<i64> = bins.iter().map(|b| b[c]).collect();
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect();
    CaccioppoliPartition::from_labels(y, labels).expect("labels are dense by construction")
}

/// R̄_j = nearest rotation to F_j for components inside Ω, the identity for components
/// touching the frame or with a singular representative.
pub fn fit_rotations(partition: &CaccioppoliPartition) -> CaccioppoliPartition {
    let fits: Vec<(Mat, bool)> = partition
        .representatives
        .par_iter()
        .zip(&partition.touches_frame)
        .map(|(f, &touches)| {
            if touches {
                return (Mat::identity(f.dim), false);
            }
            let fit = nearest_rotation(f);
            (fit.rotation, fit.degenerate)
        })
        .collect();
    let mut out = partition.clone();
    out.rotations = fits.iter().map(|p| p.0).collect();
    out.degenerate = fits.iter().map(|p| p.1).collect();
    for (j, _) in out.degenerate.iter().enumerate().filter(|(_, &g)| g) {
        warn!("label {j}: representative gradient is singular; using the identity rotation");
    }
    out
}

/// Per cell (R_j a_c, R_j F_c); facets between labels with different rotations become jumps.
pub fn piecewise_rotate(y: &JetField, partition: &CaccioppoliPartition) -> Result<JetField> {
    if !partition.is_fitted() {
        return Err(Error::InvalidParameter("partition rotations have not been fitted".into()));
    }
    if partition.labels.len() != y.n_cells() {
        return Err(Error::GridMismatch);
    }
    let grid: &Grid = &y.grid;
    let mut out = y.clone();
    for c in 0..y.n_cells() {
        let r = partition.inverse_rotation(c);
        out.values[c] = r.mul_vec(&y.values[c]);
        out.grads[c] = r * y.grads[c];
    }
    let seams: Vec<_> = partition
        .boundary
        .iter()
        .copied()
        .filter(|&f| {
            let (a, b) = grid.facet_cells(f);
            partition.rotations[partition.labels[a]] != partition.rotations[partition.labels[b]]
        })
        .collect();
    out.jy.extend(seams.iter().copied());
    out.jgrad.extend(seams);
    Ok(out)
}
