//! Linear Fokker–Planck relaxation `∂t f = rate · div_v(σ ∇_v f + v f)`,
//! discretized with exponentially fitted Chang–Cooper fluxes
//! `F_{i+1/2} = c_{i+1/2} (f_{i+1}/M_{i+1} - f_i/M_i)` and split by velocity
//! direction. The split is exact because the three directional operators
//! commute.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::grid::VelGrid;
use crate::maxwellian::GridMaxwellian;

/// Choice of interface weights `c_{i+1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionWeights {
    /// `c_{i+1/2} = -Σ_{k<=i} v_k M_k`: the discrete current relaxes at
    /// exactly the continuous rate.
    #[default]
    MomentExact,
    /// Classical Bernoulli weights `σ/h B(h v_{i+1/2}/σ) M_i`.
    Bernoulli,
}

/// Time integration of the linear relaxation over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionTime {
    /// Exact matrix exponential of the semi-discrete operator.
    #[default]
    Exponential,
    /// Backward Euler (one tridiagonal solve per line).
    BackwardEuler,
}

#[derive(Debug, Clone)]
pub struct CollisionOp {
    pub vel: VelGrid,
    pub sigma: f64,
    nv: usize,
    hv: f64,
    m: Vec<f64>,
    /// Interface weights, length `nv + 1`, zero at both ends.
    c: Vec<f64>,
    /// `A^T (v^2/2)`: rate of change of kinetic energy per unit mass at each
    /// node for the unit-rate operator.
    energy_weights: Vec<f64>,
}

fn bernoulli(w: f64) -> f64 {
    if w.abs() < 1e-8 {
        1.0 - 0.5 * w
    } else {
        w / w.exp_m1()
    }
}

impl CollisionOp {
    pub fn new(vel: VelGrid, sigma: f64, weights: CollisionWeights) -> Self {
        let nv = vel.nv;
        let hv = vel.hv();
        let m = GridMaxwellian::new(vel, sigma).m1;
        let v = vel.nodes();
        let mut c = vec![0.0; nv + 1];
        match weights {
            CollisionWeights::MomentExact => {
                let mut acc = 0.0;
                for i in 0..nv - 1 {
                    acc -= v[i] * m[i];
                    c[i + 1] = acc;
                }
            }
            CollisionWeights::Bernoulli => {
                for i in 0..nv - 1 {
                    let w = hv * 0.5 * (v[i] + v[i + 1]) / sigma;
                    c[i + 1] = sigma / hv * bernoulli(w) * m[i];
                }
            }
        }
        let mut op = Self {
            vel,
            sigma,
            nv,
            hv,
            m,
            c,
            energy_weights: vec![],
        };
        let a = op.generator();
        let e = DMatrix::from_iterator(nv, 1, v.iter().map(|x| 0.5 * x * x));
        op.energy_weights = (a.transpose() * e).iter().cloned().collect();
        op
    }

    /// Unit-rate generator `A` with `df/dt = A f`.
    pub fn generator(&self) -> DMatrix<f64> {
        let nv = self.nv;
        let mut a = DMatrix::zeros(nv, nv);
        for i in 0..nv {
            let (cl, cr) = (self.c[i], self.c[i + 1]);
            a[(i, i)] = -(cl + cr) / (self.hv * self.m[i]);
            if i + 1 < nv {
                a[(i, i + 1)] = cr / (self.hv * self.m[i + 1]);
            }
            if i > 0 {
                a[(i, i - 1)] = cl / (self.hv * self.m[i - 1]);
            }
        }
        a
    }

    /// Propagator over a scaled time `s = rate * dt`, returned row-major.
    /// Entries are non-negative and columns sum to one.
    pub fn propagator(&self, s: f64, time: CollisionTime) -> Vec<f64> {
        let nv = self.nv;
        let a = self.generator();
        let mut p = match time {
            CollisionTime::Exponential => {
                let sq: Vec<f64> = self.m.iter().map(|x| x.sqrt()).collect();
                let mut sym = DMatrix::zeros(nv, nv);
                for i in 0..nv {
                    for j in 0..nv {
                        sym[(i, j)] = a[(i, j)] * sq[j] / sq[i];
                    }
                }
                let sym = (&sym + sym.transpose()) * 0.5;
                let eig = SymmetricEigen::new(sym);
                let mut ex = DMatrix::zeros(nv, nv);
                for k in 0..nv {
                    let ek = (s * eig.eigenvalues[k].min(0.0)).exp();
                    for i in 0..nv {
                        for j in 0..nv {
                            ex[(i, j)] += eig.eigenvectors[(i, k)] * ek * eig.eigenvectors[(j, k)];
                        }
                    }
                }
                for i in 0..nv {
                    for j in 0..nv {
                        ex[(i, j)] *= sq[i] / sq[j];
                    }
                }
                ex
            }
            CollisionTime::BackwardEuler => {
                let lhs = DMatrix::identity(nv, nv) - a * s;
                lhs.lu().try_inverse().expect("M-matrix is invertible")
            }
        };
        for j in 0..nv {
            let mut col = 0.0;
            for i in 0..nv {
                if p[(i, j)] < 0.0 {
                    p[(i, j)] = 0.0;
                }
                col += p[(i, j)];
            }
            for i in 0..nv {
                p[(i, j)] /= col;
            }
        }
        let mut out = vec![0.0; nv * nv];
        for i in 0..nv {
            for j in 0..nv {
                out[i * nv + j] = p[(i, j)];
            }
        }
        out
    }

    /// Applies a row-major propagator along all three directions of one
    /// node. `tmp` must have the node size.
    pub fn apply_node(&self, p: &[f64], f: &mut [f64], tmp: &mut [f64]) {
        let nv = self.nv;
        let nv2 = nv * nv;
        // v1
        tmp.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..nv {
            let out = &mut tmp[i * nv2..(i + 1) * nv2];
            for j in 0..nv {
                let w = p[i * nv + j];
                if w == 0.0 {
                    continue;
                }
                let src = &f[j * nv2..(j + 1) * nv2];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        // v2
        f.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..nv {
            for i in 0..nv {
                let o = (a * nv + i) * nv;
                for j in 0..nv {
                    let w = p[i * nv + j];
                    if w == 0.0 {
                        continue;
                    }
                    let s = (a * nv + j) * nv;
                    for c in 0..nv {
                        f[o + c] += w * tmp[s + c];
                    }
                }
            }
        }
        // v3
        for r in 0..nv2 {
            let line = &mut tmp[r * nv..(r + 1) * nv];
            line.copy_from_slice(&f[r * nv..(r + 1) * nv]);
            for i in 0..nv {
                let row = &p[i * nv..(i + 1) * nv];
                f[r * nv + i] = row.iter().zip(line.iter()).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// Discrete entropy dissipation of one node (without the rate factor):
    /// `h^2 Σ_lines Σ_i σ c_{i+1/2} Δ(f/M) Δ ln(f/M)`. It is the exact
    /// decay rate of the discrete free energy under the unit-rate operator.
    pub fn dissipation_node(&self, f: &[f64]) -> f64 {
        let nv = self.nv;
        let floor = 1e-30;
        let m = &self.m;
        let inv_m: Vec<f64> = m.iter().map(|x| 1.0 / x).collect();
        let dlm: Vec<f64> = (0..nv - 1).map(|i| (m[i + 1] / m[i]).ln()).collect();
        let fc: Vec<f64> = f.iter().map(|&x| x.max(0.0)).collect();
        let lf: Vec<f64> = fc.iter().map(|x| x.max(floor).ln()).collect();
        let mut total = 0.0;
        for (axis, st) in [nv * nv, nv, 1].into_iter().enumerate() {
            for base in 0..nv * nv * nv {
                let i = match axis {
                    0 => base / (nv * nv),
                    1 => (base / nv) % nv,
                    _ => base % nv,
                };
                if i + 1 == nv {
                    continue;
                }
                // pairs touching a node below the floor do not contribute
                if fc[base] < floor || fc[base + st] < floor {
                    continue;
                }
                let dx = fc[base + st] * inv_m[i + 1] - fc[base] * inv_m[i];
                let dl = lf[base + st] - lf[base] - dlm[i];
                total += self.c[i + 1] * dx * dl;
            }
        }
        self.sigma * self.hv * self.hv * total
    }

    /// Rate of change of `∫ |v|^2/2 f dv` on one node under the unit-rate
    /// operator.
    pub fn energy_rate_node(&self, f: &[f64]) -> f64 {
        let nv = self.nv;
        let w = &self.energy_weights;
        let mut s = 0.0;
        for a in 0..nv {
            for b in 0..nv {
                let wab = w[a] + w[b];
                let o = (a * nv + b) * nv;
                for c in 0..nv {
                    s += f[o + c] * (wab + w[c]);
                }
            }
        }
        s * self.hv.powi(3)
    }

    pub fn weights(&self) -> &[f64] {
        &self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwellian::maxwellian;

    fn shifted(vel: VelGrid, u: [f64; 3]) -> Vec<f64> {
        GridMaxwellian::new(vel, 1.0).shifted(u)
    }

    fn current(vel: VelGrid, f: &[f64]) -> [f64; 3] {
        let nv = vel.nv;
        let mut j = [0.0; 3];
        for a in 0..nv {
            for b in 0..nv {
                for c in 0..nv {
                    let x = f[(a * nv + b) * nv + c] * vel.cell_volume();
                    j[0] += vel.node(a) * x;
                    j[1] += vel.node(b) * x;
                    j[2] += vel.node(c) * x;
                }
            }
        }
        j
    }

    #[test]
    fn interior_weights_positive_and_boundary_zero() {
        let vel = VelGrid::new(16, 6.0).unwrap();
        for w in [CollisionWeights::MomentExact, CollisionWeights::Bernoulli] {
            let op = CollisionOp::new(vel, 1.0, w);
            let c = op.weights();
            assert_eq!(c[0], 0.0);
            assert!(c[16].abs() < 1e-15);
            assert!(c[1..16].iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn grid_maxwellian_is_kernel() {
        let vel = VelGrid::new(16, 6.0).unwrap();
        let m = GridMaxwellian::new(vel, 1.0).m1;
        for w in [CollisionWeights::MomentExact, CollisionWeights::Bernoulli] {
            let op = CollisionOp::new(vel, 1.0, w);
            let a = op.generator();
            let r = &a * DMatrix::from_column_slice(16, 1, &m);
            assert!(r.amax() < 1e-14);
        }
    }

    #[test]
    fn mean_velocity_decays_at_exact_rate() {
        let vel = VelGrid::new(16, 6.0).unwrap();
        let op = CollisionOp::new(vel, 1.0, CollisionWeights::MomentExact);
        let mut f = shifted(vel, [0.4, -0.3, 0.2]);
        let j0 = current(vel, &f);
        let s = 0.37;
        let p = op.propagator(s, CollisionTime::Exponential);
        let mut tmp = vec![0.0; f.len()];
        op.apply_node(&p, &mut f, &mut tmp);
        let j1 = current(vel, &f);
        for k in 0..3 {
            assert!((j1[k] - j0[k] * (-s).exp()).abs() < 1e-12 * j0[k].abs().max(1.0));
        }
        assert!(f.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn backward_euler_decay_and_positivity() {
        let vel = VelGrid::new(16, 6.0).unwrap();
        let op = CollisionOp::new(vel, 1.0, CollisionWeights::MomentExact);
        let mut f = shifted(vel, [1.0, 0.0, 0.0]);
        let m0: f64 = f.iter().sum();
        let j0 = current(vel, &f)[0];
        let s = 0.01;
        let p = op.propagator(s, CollisionTime::BackwardEuler);
        let mut tmp = vec![0.0; f.len()];
        op.apply_node(&p, &mut f, &mut tmp);
        let j1 = current(vel, &f)[0];
        assert!((j1 / j0 - (-s).exp()).abs() < 1e-4);
        assert!(f.iter().all(|&x| x >= 0.0));
        assert!(((f.iter().sum::<f64>() - m0) / m0).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_weights_relax_current_at_shifted_rate() {
        // classical weights: rate factor 1 - h^2/(6σ) + O(h^4)
        let vel = VelGrid::new(64, 6.0).unwrap();
        let op = CollisionOp::new(vel, 1.0, CollisionWeights::Bernoulli);
        let a = op.generator();
        let v = DMatrix::from_iterator(64, 1, vel.nodes());
        let va = a.transpose() * &v;
        let ratio = -va[(32, 0)] / v[(32, 0)];
        let h = vel.hv();
        assert!((ratio - (1.0 - h * h / 6.0)).abs() < 1e-3);
    }

    #[test]
    fn dissipation_zero_at_equilibrium_and_matches_shifted() {
        let vel = VelGrid::new(16, 6.0).unwrap();
        let op = CollisionOp::new(vel, 1.0, CollisionWeights::MomentExact);
        let m = GridMaxwellian::new(vel, 1.0).full();
        assert!(op.dissipation_node(&m).abs() < 1e-8);
        // D = ∫ |σ∇f + v f|^2 / f = |u|^2 for a unit-mass shifted Maxwellian
        let vel = VelGrid::new(64, 8.0).unwrap();
        let op = CollisionOp::new(vel, 1.0, CollisionWeights::MomentExact);
        let u = [0.3, -0.2, 0.1];
        let nv = 64;
        let mut f = Vec::with_capacity(nv * nv * nv);
        for a in 0..nv {
            for b in 0..nv {
                for c in 0..nv {
                    let v = [vel.node(a) - u[0], vel.node(b) - u[1], vel.node(c) - u[2]];
                    f.push(maxwellian(v, 1.0));
                }
            }
        }
        let d = op.dissipation_node(&f);
        let want = 0.09 + 0.04 + 0.01;
        assert!((d - want).abs() < 5e-3 * want, "{d} vs {want}");
    }
}
