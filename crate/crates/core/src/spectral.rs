//! Fourier calculus on the periodic perpendicular grid.
//!
//! Derivative symbols vanish at the Nyquist wavenumber so that `div grad`
//! and the Laplacian use the same effective wavenumbers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use std::sync::LazyLock;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{PerpGrid, ScalarField, VectorField};

pub struct Spectral {
    pub grid: PerpGrid,
    f1: Arc<dyn Fft<f64>>,
    f2: Arc<dyn Fft<f64>>,
    i1: Arc<dyn Fft<f64>>,
    i2: Arc<dyn Fft<f64>>,
    /// Effective wavenumbers (Nyquist zeroed).
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

static CACHE: LazyLock<Mutex<HashMap<(usize, usize, u64, u64), Arc<Spectral>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / l;
    (0..n)
        .map(|i| {
            if 2 * i == n {
                0.0
            } else if i < n.div_ceil(2) {
                base * i as f64
            } else {
                base * (i as f64 - n as f64)
            }
        })
        .collect()
}

impl Spectral {
    pub fn new(grid: PerpGrid) -> Self {
        let mut p = FftPlanner::new();
        Self {
            grid,
            f1: p.plan_fft_forward(grid.n1),
            f2: p.plan_fft_forward(grid.n2),
            i1: p.plan_fft_inverse(grid.n1),
            i2: p.plan_fft_inverse(grid.n2),
            k1: wavenumbers(grid.n1, grid.l1),
            k2: wavenumbers(grid.n2, grid.l2),
        }
    }

    /// Shared instance for a grid.
    pub fn get(grid: PerpGrid) -> Arc<Spectral> {
        let key = (grid.n1, grid.n2, grid.l1.to_bits(), grid.l2.to_bits());
        let mut cache = CACHE.lock().unwrap();
        cache
            .entry(key)
            .or_insert_with(|| Arc::new(Spectral::new(grid)))
            .clone()
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let (a, b) = if forward {
            (&self.f2, &self.f1)
        } else {
            (&self.i2, &self.i1)
        };
        a.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n1];
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                col[i1] = buf[i1 * n2 + i2];
            }
            b.process(&mut col);
            for i1 in 0..n1 {
                buf[i1 * n2 + i2] = col[i1];
            }
        }
    }

    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, true);
        buf
    }

    pub fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut buf, false);
        let s = 1.0 / self.grid.len() as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    pub fn k(&self, idx: usize) -> (f64, f64) {
        let n2 = self.grid.n2;
        (self.k1[idx / n2], self.k2[idx % n2])
    }

    /// Applies a Fourier multiplier `m(k1, k2)` to real data.
    pub fn apply(&self, data: &[f64], m: impl Fn(f64, f64) -> Complex64) -> Vec<f64> {
        let mut h = self.forward(data);
        for (idx, c) in h.iter_mut().enumerate() {
            let (k1, k2) = self.k(idx);
            *c *= m(k1, k2);
        }
        self.inverse(h)
    }

    pub fn d1(&self, u: &ScalarField) -> ScalarField {
        let data = self.apply(&u.data, |k1, _| Complex64::new(0.0, k1));
        ScalarField { grid: u.grid, data }
    }

    pub fn d2(&self, u: &ScalarField) -> ScalarField {
        let data = self.apply(&u.data, |_, k2| Complex64::new(0.0, k2));
        ScalarField { grid: u.grid, data }
    }

    pub fn grad(&self, u: &ScalarField) -> VectorField {
        let h = self.forward(&u.data);
        let mut g1 = h.clone();
        let mut g2 = h;
        for idx in 0..g1.len() {
            let (k1, k2) = self.k(idx);
            g1[idx] *= Complex64::new(0.0, k1);
            g2[idx] *= Complex64::new(0.0, k2);
        }
        VectorField {
            grid: u.grid,
            c: [self.inverse(g1), self.inverse(g2), vec![0.0; u.grid.len()]],
        }
    }

    /// In-plane divergence `∂1 F1 + ∂2 F2`.
    pub fn div(&self, f: &VectorField) -> ScalarField {
        let mut a = self.forward(&f.c[0]);
        let b = self.forward(&f.c[1]);
        for idx in 0..a.len() {
            let (k1, k2) = self.k(idx);
            a[idx] = a[idx] * Complex64::new(0.0, k1) + b[idx] * Complex64::new(0.0, k2);
        }
        ScalarField {
            grid: f.grid,
            data: self.inverse(a),
        }
    }

    /// Curl of a field independent of x3.
    pub fn curl(&self, f: &VectorField) -> VectorField {
        let h: Vec<Vec<Complex64>> = (0..3).map(|k| self.forward(&f.c[k])).collect();
        let n = h[0].len();
        let mut c0 = vec![Complex64::new(0.0, 0.0); n];
        let mut c1 = c0.clone();
        let mut c2 = c0.clone();
        for idx in 0..n {
            let (k1, k2) = self.k(idx);
            let ik1 = Complex64::new(0.0, k1);
            let ik2 = Complex64::new(0.0, k2);
            c0[idx] = ik2 * h[2][idx];
            c1[idx] = -ik1 * h[2][idx];
            c2[idx] = ik1 * h[1][idx] - ik2 * h[0][idx];
        }
        VectorField {
            grid: f.grid,
            c: [self.inverse(c0), self.inverse(c1), self.inverse(c2)],
        }
    }

    /// Zero-mean solution of `-Δu = r`. The mean and any unresolved mode of
    /// `r` are discarded.
    pub fn inverse_neg_laplacian(&self, r: &ScalarField) -> ScalarField {
        let data = self.apply(&r.data, |k1, k2| {
            let k2s = k1 * k1 + k2 * k2;
            if k2s == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / k2s, 0.0)
            }
        });
        ScalarField { grid: r.grid, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivatives_of_trig_are_exact() {
        let g = PerpGrid::new(16, 12, 2.0, 3.0).unwrap();
        let s = Spectral::new(g);
        let u = g.sample(|x, y| (2.0 * PI * x / 2.0).sin() * (2.0 * PI * 2.0 * y / 3.0).cos());
        let d1 = s.d1(&u);
        let d2 = s.d2(&u);
        for i1 in 0..16 {
            for i2 in 0..12 {
                let (x, y) = (g.x1(i1), g.x2(i2));
                let e1 = PI * (PI * x).cos() * (4.0 * PI * y / 3.0).cos();
                let e2 = -(4.0 * PI / 3.0) * (PI * x).sin() * (4.0 * PI * y / 3.0).sin();
                assert!((d1.data[g.index(i1, i2)] - e1).abs() < 1e-12);
                assert!((d2.data[g.index(i1, i2)] - e2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn div_curl_and_curl_grad_vanish() {
        let g = PerpGrid::square(16, 1.0).unwrap();
        let s = Spectral::new(g);
        let u = g.sample(|x, y| (2.0 * PI * x).sin() + (4.0 * PI * (x + y)).cos() + x * 0.0);
        let cg = s.curl(&s.grad(&u));
        assert!(cg.l2_norm() < 1e-12);
        let mut f = VectorField::zeros(g);
        f.c[2] = u.data.clone();
        f.c[0] = g.sample(|x, y| (2.0 * PI * y).cos() * (2.0 * PI * x).sin()).data;
        assert!(s.div(&s.curl(&f)).l2_norm() < 1e-12);
    }

    #[test]
    fn poisson_inverse_recovers() {
        let g = PerpGrid::square(32, 2.0 * PI).unwrap();
        let s = Spectral::new(g);
        let u = g.sample(|x, y| (x).cos() * (2.0 * y).sin());
        let r = u.scale(5.0);
        let back = s.inverse_neg_laplacian(&r);
        for (a, b) in back.data.iter().zip(&u.data) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn nyquist_is_zeroed() {
        let k = wavenumbers(8, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, 0.0, -3.0, -2.0, -1.0]);
        let k = wavenumbers(5, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }
}
