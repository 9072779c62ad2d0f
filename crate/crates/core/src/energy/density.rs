use serde::{Deserialize, Serialize};

use crate::linalg::{dist_sq_so, nearest_rotation, polar_rotation_2d, Mat};

/// Built-in frame-indifferent stored-energy densities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    /// `scale · dist²(F, SO(d))`.
    DistSq {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(μ/4)|FᵀF − I|² + λ(det F − 1)²`, a single well at SO(d).
    QuadQuartic {
        #[serde(default = "one")]
        mu: f64,
        #[serde(default = "one")]
        lambda: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for Density {
    fn default() -> Self {
        Density::DistSq { scale: 1.0 }
    }
}

impl Density {
    pub fn name(&self) -> &'static str {
        match self {
            Density::DistSq { .. } => "dist_sq",
            Density::QuadQuartic { .. } => "quad_quartic",
        }
    }

    pub fn eval(&self, f: &Mat) -> f64 {
        match *self {
            Density::DistSq { scale } => scale * dist_sq_so(f),
            Density::QuadQuartic { mu, lambda } => {
                let c = f.transpose() * *f - Mat::identity(f.dim);
                0.25 * mu * c.norm_sq() + lambda * (f.det() - 1.0).powi(2)
            }
        }
    }

    /// ∂W/∂F.
    pub fn gradient(&self, f: &Mat) -> Mat {
        match *self {
            Density::DistSq { scale } => {
                let r = if f.dim == 2 {
                    polar_rotation_2d(f).unwrap_or_else(|| Mat::identity(2))
                } else {
                    nearest_rotation(f).rotation
                };
                (*f - r).scale(2.0 * scale)
            }
            Density::QuadQuartic { mu, lambda } => {
                let c = f.transpose() * *f - Mat::identity(f.dim);
                (*f * c).scale(mu) + f.cofactor().scale(2.0 * lambda * (f.det() - 1.0))
            }
        }
    }

    /// A constant c with W(F) ≥ c·dist²(F, SO(d)).
    pub fn coercivity(&self) -> f64 {
        match *self {
            Density::DistSq { scale } => scale,
            Density::QuadQuartic { mu, lambda } => 0.25 * mu.min(lambda),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            Density::DistSq { scale } => scale > 0.0 && scale.is_finite(),
            Density::QuadQuartic { mu, lambda } => mu > 0.0 && lambda > 0.0 && mu.is_finite() && lambda.is_finite(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist_so_svd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Mat {
        let flat: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-r..r)).collect();
        Mat::from_flat(d, &flat)
    }

    fn densities() -> [Density; 2] {
        [Density::default(), Density::QuadQuartic { mu: 1.0, lambda: 1.0 }]
    }

    #[test]
    fn stretch_has_unit_distance() {
        let w = Density::default();
        assert!((w.eval(&Mat::diag(&[2.0, 1.0])) - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let r = Mat::rotation(2, rng.gen_range(-3.0..3.0));
            let f = r * Mat::diag(&[2.0, 1.0]);
            assert!((w.eval(&f) - 1.0).abs() < 1e-13);
            assert!((w.eval(&f) - dist_so_svd(&f).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn vanish_on_rotations_and_are_frame_indifferent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for w in densities() {
            for _ in 0..50 {
                let r = Mat::rotation(2, rng.gen_range(-3.0..3.0));
                assert!(w.eval(&r) < 1e-14);
                let f = random_mat(&mut rng, 2, 2.0);
                assert!(w.eval(&f) >= 0.0);
                assert!((w.eval(&(r * f)) - w.eval(&f)).abs() <= 1e-12 * (1.0 + w.eval(&f)));
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for w in densities() {
            for d in [2, 3] {
                for _ in 0..20 {
                    let f = Mat::identity(d) + random_mat(&mut rng, d, 0.4);
                    let g = w.gradient(&f);
                    let step = 1e-6;
                    for i in 0..d {
                        for j in 0..d {
                            let mut p = f;
                            p[(i, j)] += step;
                            let mut m = f;
                            m[(i, j)] -= step;
                            let fd = (w.eval(&p) - w.eval(&m)) / (2.0 * step);
                            assert!((fd - g[(i, j)]).abs() < 1e-6, "{w:?} d={d} ({i},{j}) fd={fd} g={}", g[(i, j)]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coercivity_holds_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for w in densities() {
            for d in [2, 3] {
                for _ in 0..2000 {
                    let f = random_mat(&mut rng, d, 3.0);
                    assert!(w.eval(&f) >= w.coercivity() * dist_sq_so(&f) - 1e-12, "{w:?} {f:?}");
                }
            }
        }
    }
}
