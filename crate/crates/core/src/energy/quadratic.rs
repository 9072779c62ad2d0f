use serde::{Deserialize, Serialize};

use super::model::EnergyModel;
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Finite-difference step of the Hessian at the identity.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Required agreement between the step and the halved step.
pub const RICHARDSON_TOL: f64 = 1e-5;

/// D²W(Id) as a symmetric d²×d² matrix acting on row-major vectorized matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub dim: usize,
    pub matrix: Vec<f64>,
    /// Largest entrywise change between steps δ and δ/2.
    pub richardson_gap: f64,
}

impl QuadraticForm {
    fn n(&self) -> usize {
        self.dim * self.dim
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.matrix[a * self.n() + b]
    }

    /// Q(F) = D²W(Id)F : F.
    pub fn eval(&self, f: &Mat) -> f64 {
        let v = f.to_flat();
        let n = self.n();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.matrix[a * n + b] * v[a] * v[b];
            }
        }
        s
    }

    /// D²W(Id)F as a matrix, so that Q(F) = apply(F) : F.
    pub fn apply(&self, f: &Mat) -> Mat {
        let v = f.to_flat();
        let n = self.n();
        let out: Vec<f64> = (0..n).map(|a| (0..n).map(|b| self.matrix[a * n + b] * v[b]).sum()).collect();
        Mat::from_flat(self.dim, &out)
    }

    /// The form composed with the symmetric projection, Q(sym ·), as a d²×d² matrix.
    pub fn sym_matrix(&self) -> Vec<f64> {
        let d = self.dim;
        let n = self.n();
        let mut out = vec![0.0; n * n];
        let basis = |a: usize| {
            let mut e = Mat::zeros(d);
            e[(a / d, a % d)] = 1.0;
            e.sym()
        };
        for a in 0..n {
            let qa = self.apply(&basis(a));
            for b in 0..n {
                out[a * n + b] = qa.ddot(&basis(b));
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut m: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                m = m.max((self.matrix[a * n + b] - self.matrix[b * n + a]).abs());
            }
        }
        m
    }
}

fn fd_hessian(model: &EnergyModel, d: usize, step: f64) -> Result<Vec<f64>> {
    let n = d * d;
    let id = Mat::identity(d);
    let unit = |a: usize| {
        let mut e = Mat::zeros(d);
        e[(a / d, a % d)] = step;
        e
    };
    let w = |f: Mat| {
        let v = model.w(&f);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("density near the identity at {:?}", f.to_flat())))
        }
    };
    let mut h = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let (ea, eb) = (unit(a), unit(b));
            let v = (w(id + ea + eb)? - w(id + ea - eb)? - w(id - ea + eb)? + w(id - ea - eb)?) / (4.0 * step * step);
            h[a * n + b] = v;
            h[b * n + a] = v;
        }
    }
    Ok(h)
}

/// Central finite-difference Hessian of W at the identity, checked against the halved step.
pub fn hessian_q(model: &EnergyModel, dim: usize) -> Result<QuadraticForm> {
    let coarse = fd_hessian(model, dim, HESSIAN_STEP)?;
    let fine = fd_hessian(model, dim, 0.5 * HESSIAN_STEP)?;
    let gap = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(gap <= RICHARDSON_TOL) {
        return Err(Error::InvalidParameter(format!(
            "Hessian at the identity does not settle under step halving (gap {gap:e})"
        )));
    }
    Ok(QuadraticForm { dim, matrix: coarse, richardson_gap: gap })
}

/// ω(F) = W(Id + F) − ½Q(sym F), defined for |F| ≤ 1.
pub fn remainder_omega(model: &EnergyModel, q: &QuadraticForm, f: &Mat) -> Result<f64> {
    if !(f.norm() <= 1.0) {
        return Err(Error::OutOfRange(format!("|F| = {} exceeds 1", f.norm())));
    }
    Ok(model.w(&(Mat::identity(f.dim) + *f)) - 0.5 * q.eval(&f.sym()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::density::Density;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(density: Density) -> EnergyModel {
        EnergyModel::new(density, 0.1, 0.9, 0.8, 1.0).unwrap()
    }

    fn unit(rng: &mut ChaCha8Rng, d: usize) -> Mat {
        let f = Mat::from_flat(d, &(0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        f.scale(1.0 / f.norm())
    }

    #[test]
    fn default_density_gives_twice_sym_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 3] {
            let q = hessian_q(&model(Density::default()), d).unwrap();
            assert!(q.max_asymmetry() < 1e-12);
            assert!((q.eval(&Mat::identity(d)) - 2.0 * d as f64).abs() < 1e-5);
            for _ in 0..50 {
                let f = unit(&mut rng, d);
                assert!((q.eval(&f) - 2.0 * f.sym().norm_sq()).abs() < 1e-5);
                assert!(q.eval(&f.skew().scale(1.0 / f.skew().norm())).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn quad_quartic_form_is_lame_type() {
        let (mu, lambda) = (1.5, 0.5);
        let q = hessian_q(&model(Density::QuadQuartic { mu, lambda }), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let f = unit(&mut rng, 2);
            let expect = 2.0 * mu * f.sym().norm_sq() + 2.0 * lambda * f.trace().powi(2);
            assert!((q.eval(&f) - expect).abs() < 1e-5);
        }
    }

    #[test]
    fn sym_matrix_composes_projection() {
        let q = hessian_q(&model(Density::QuadQuartic { mu: 1.0, lambda: 2.0 }), 2).unwrap();
        let ps = QuadraticForm { dim: 2, matrix: q.sym_matrix(), richardson_gap: 0.0 };
        let f = Mat::from_flat(2, &[0.3, -0.7, 0.2, 0.5]);
        assert!((ps.eval(&f) - q.eval(&f.sym())).abs() < 1e-12);
    }

    #[test]
    fn remainder_is_cubic() {
        let m = model(Density::default());
        let q = hessian_q(&m, 2).unwrap();
        assert_eq!(remainder_omega(&m, &q, &Mat::zeros(2)).unwrap(), 0.0);
        assert!(remainder_omega(&m, &q, &Mat::identity(2)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let g = unit(&mut rng, 2);
            let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&t| remainder_omega(&m, &q, &g.scale(t)).unwrap().abs() / (t * t * t))
                .collect();
            assert!(ratios.iter().all(|r| *r < 10.0), "{ratios:?}");
        }
    }

    #[test]
    fn skew_remainder_is_the_density() {
        let m = model(Density::default());
        let q = hessian_q(&m, 2).unwrap();
        let a = Mat::from_flat(2, &[0.0, -0.01, 0.01, 0.0]);
        let w = m.w(&(Mat::identity(2) + a));
        assert!((remainder_omega(&m, &q, &a).unwrap() - w).abs() < 1e-12);
        assert!(w < 1e-7);
    }
}
