//! Compactly supported, even, unit-mass mollifier on the periodic plane.

use rustfft::num_complex::Complex64;

use crate::error::{Result, VmfpError};
use crate::grid::{PerpGrid, ScalarField, VectorField};
use crate::spectral::Spectral;

#[derive(Debug, Clone)]
pub struct Mollifier {
    pub delta: f64,
    grid: PerpGrid,
    /// Fourier symbol of the kernel; `None` for the identity.
    symbol: Option<Vec<f64>>,
}

impl Mollifier {
    /// Bump `exp(-1 / (1 - (r/δ)^2))` sampled on the grid and normalized.
    /// `δ = 0` (or a support smaller than one cell) gives the identity.
    pub fn new(grid: PerpGrid, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(VmfpError::Parameter(format!("mollifier width {delta} must be >= 0")));
        }
        if delta >= 0.5 * grid.l1.min(grid.l2) {
            return Err(VmfpError::Parameter(format!(
                "mollifier width {delta} exceeds half the domain"
            )));
        }
        let mut k = vec![0.0; grid.len()];
        let mut total = 0.0;
        let mut count = 0;
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                let d1 = grid.x1(i1).min(grid.l1 - grid.x1(i1));
                let d2 = grid.x2(i2).min(grid.l2 - grid.x2(i2));
                let r = (d1 * d1 + d2 * d2).sqrt();
                if delta > 0.0 && r < delta {
                    let s = r / delta;
                    let w = (-1.0 / (1.0 - s * s)).exp();
                    k[grid.index(i1, i2)] = w;
                    total += w;
                    count += 1;
                }
            }
        }
        if count <= 1 {
            return Ok(Self {
                delta,
                grid,
                symbol: None,
            });
        }
        k.iter_mut().for_each(|x| *x /= total);
        let sp = Spectral::get(grid);
        let symbol = sp.forward(&k).iter().map(|c| c.re).collect();
        Ok(Self {
            delta,
            grid,
            symbol: Some(symbol),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.symbol.is_none()
    }

    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        match &self.symbol {
            None => u.clone(),
            Some(s) => {
                let sp = Spectral::get(self.grid);
                let mut h = sp.forward(&u.data);
                for (c, w) in h.iter_mut().zip(s) {
                    *c *= Complex64::new(*w, 0.0);
                }
                ScalarField {
                    grid: u.grid,
                    data: sp.inverse(h),
                }
            }
        }
    }

    pub fn apply_vec(&self, v: &VectorField) -> VectorField {
        if self.is_identity() {
            return v.clone();
        }
        let c: Vec<ScalarField> = (0..3).map(|k| self.apply(&v.component(k))).collect();
        let [a, b, d]: [ScalarField; 3] = c.try_into().unwrap();
        VectorField::from_components(a, b, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_width_is_identity() {
        let g = PerpGrid::square(16, 1.0).unwrap();
        let m = Mollifier::new(g, 0.0).unwrap();
        assert!(m.is_identity());
        let u = g.sample(|x, y| x * y);
        assert_eq!(m.apply(&u), u);
    }

    #[test]
    fn preserves_mean_and_is_self_adjoint() {
        let g = PerpGrid::square(32, 1.0).unwrap();
        let m = Mollifier::new(g, 0.2).unwrap();
        let u = g.sample(|x, y| (6.28 * x).sin() + (12.0 * y).cos() + 2.0);
        let w = g.sample(|x, y| (6.28 * (x + y)).cos() + x);
        let mu = m.apply(&u);
        assert!((mu.mean() - u.mean()).abs() < 1e-13);
        let lhs: f64 = mu.data.iter().zip(&w.data).map(|(a, b)| a * b).sum();
        let rhs: f64 = m.apply(&w).data.iter().zip(&u.data).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn rejects_wide_support() {
        let g = PerpGrid::square(16, 1.0).unwrap();
        assert!(Mollifier::new(g, 0.6).is_err());
    }
}
