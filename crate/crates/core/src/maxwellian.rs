//! Centered Maxwellians, continuous and grid-normalized.

use crate::grid::VelGrid;

/// `M(v) = (2 pi sigma)^{-3/2} exp(-|v|^2 / (2 sigma))`.
pub fn maxwellian(v: [f64; 3], sigma: f64) -> f64 {
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    (2.0 * std::f64::consts::PI * sigma).powf(-1.5) * (-v2 / (2.0 * sigma)).exp()
}

/// One-dimensional Gaussian factor of the Maxwellian.
pub fn maxwellian_1d(v: f64, sigma: f64) -> f64 {
    (2.0 * std::f64::consts::PI * sigma).powf(-0.5) * (-v * v / (2.0 * sigma)).exp()
}

/// Maxwellian sampled on a velocity grid and renormalized so that its
/// midpoint-rule mass is exactly one. It is the discrete equilibrium of the
/// collision step.
#[derive(Debug, Clone)]
pub struct GridMaxwellian {
    pub vel: VelGrid,
    pub sigma: f64,
    /// 1D factor with `sum(m1) * hv == 1`.
    pub m1: Vec<f64>,
}

impl GridMaxwellian {
    pub fn new(vel: VelGrid, sigma: f64) -> Self {
        let hv = vel.hv();
        let mut m1: Vec<f64> = (0..vel.nv).map(|i| maxwellian_1d(vel.node(i), sigma)).collect();
        let s: f64 = m1.iter().sum::<f64>() * hv;
        m1.iter_mut().for_each(|x| *x /= s);
        Self { vel, sigma, m1 }
    }

    pub fn value(&self, a: usize, b: usize, c: usize) -> f64 {
        self.m1[a] * self.m1[b] * self.m1[c]
    }

    /// Full `nv^3` array, unit discrete mass.
    pub fn full(&self) -> Vec<f64> {
        let nv = self.vel.nv;
        let mut out = Vec::with_capacity(nv * nv * nv);
        for a in 0..nv {
            for b in 0..nv {
                for c in 0..nv {
                    out.push(self.m1[a] * self.m1[b] * self.m1[c]);
                }
            }
        }
        out
    }

    /// Maxwellian shifted by `u`, sampled on the grid and normalized to unit
    /// discrete mass.
    pub fn shifted(&self, u: [f64; 3]) -> Vec<f64> {
        let nv = self.vel.nv;
        let hv = self.vel.hv();
        let mut f1 = [vec![0.0; nv], vec![0.0; nv], vec![0.0; nv]];
        for d in 0..3 {
            for i in 0..nv {
                f1[d][i] = maxwellian_1d(self.vel.node(i) - u[d], self.sigma);
            }
            let s: f64 = f1[d].iter().sum::<f64>() * hv;
            f1[d].iter_mut().for_each(|x| *x /= s);
        }
        let mut out = Vec::with_capacity(nv * nv * nv);
        for a in 0..nv {
            for b in 0..nv {
                for c in 0..nv {
                    out.push(f1[0][a] * f1[1][b] * f1[2][c]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_normalization_by_quadrature() {
        // independent check: fine midpoint rule in 1D, product structure
        let n = 4000;
        let h = 24.0 / n as f64;
        let s: f64 = (0..n)
            .map(|i| {
                let v = -12.0 + (i as f64 + 0.5) * h;
                (-v * v / 2.0).exp()
            })
            .sum::<f64>()
            * h;
        let expect = (2.0 * std::f64::consts::PI).sqrt();
        assert!((s - expect).abs() < 1e-12);
        let m0 = maxwellian([0.0; 3], 1.0);
        assert!((m0 - expect.powi(-3)).abs() < 1e-15);
    }

    #[test]
    fn grid_maxwellian_unit_mass_and_moments() {
        let vel = VelGrid::new(16, 6.0).unwrap();
        let m = GridMaxwellian::new(vel, 1.0);
        let full = m.full();
        let hv3 = vel.cell_volume();
        let mass: f64 = full.iter().sum::<f64>() * hv3;
        assert!((mass - 1.0).abs() < 1e-14);
        // second moment: only the truncated tail beyond vmax = 6 is missing
        let v2: f64 = (0..16).map(|i| vel.node(i).powi(2) * m.m1[i]).sum::<f64>() * vel.hv();
        assert!((v2 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn shifted_has_requested_mean() {
        let vel = VelGrid::new(32, 8.0).unwrap();
        let m = GridMaxwellian::new(vel, 1.0);
        let f = m.shifted([0.3, -0.2, 0.0]);
        let nv = 32;
        let hv3 = vel.cell_volume();
        let mut j = [0.0; 3];
        for a in 0..nv {
            for b in 0..nv {
                for c in 0..nv {
                    let w = f[(a * nv + b) * nv + c] * hv3;
                    j[0] += vel.node(a) * w;
                    j[1] += vel.node(b) * w;
                    j[2] += vel.node(c) * w;
                }
            }
        }
        assert!((j[0] - 0.3).abs() < 1e-10);
        assert!((j[1] + 0.2).abs() < 1e-10);
        assert!(j[2].abs() < 1e-14);
    }
}
