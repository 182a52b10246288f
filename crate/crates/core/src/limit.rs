//! Guiding-center limit: a drift equation for the density coupled to
//! electrostatics,
//!
//! `∂t n + div((n/ω_c) e ∧ k[n]) = 0`, `k[n] = σ ∇n/n - (q/m) E`,
//! `eps0 div E = q (n - D)`, `curl E = 0`,
//!
//! solved in the equivalent drift form `∂t n + div(n V) = 0` with
//! `V = (E2/B - σ ∂2ω/ω², -E1/B + σ ∂1ω/ω²)`.
//!
//! On the periodic plane the spatial mean of `E` is not fixed by the two
//! field equations; it follows `eps0 dĒ/dt = -q mean(n V)`, the mean part of
//! Ampère's law.

use crate::error::{Result, VmfpError};
use crate::fieldsolve::{reconstruct_b1, solve_poisson};
use crate::grid::{ScalarField, VectorField};
use crate::params::PlasmaParams;
use crate::spectral::Spectral;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub n: ScalarField,
    /// Mean electric field (in-plane components).
    pub e_mean: [f64; 2],
    pub t: f64,
}

/// E×B, grad-B and curvature drifts. The curvature drift vanishes for a
/// straight external field.
#[derive(Debug, Clone)]
pub struct Drifts {
    pub exb: VectorField,
    pub grad_b: VectorField,
    pub curvature: VectorField,
}

impl Drifts {
    pub fn total(&self) -> VectorField {
        let mut v = self.exb.clone();
        v.axpy(1.0, &self.grad_b);
        v.axpy(1.0, &self.curvature);
        v
    }
}

pub struct LimitSolver {
    pub params: PlasmaParams,
    pub b_ext: ScalarField,
    pub background: ScalarField,
    pub state: LimitState,
    omega: ScalarField,
    grad_omega: VectorField,
    /// Target CFL number; larger steps are subcycled.
    pub cfl: f64,
}

impl LimitSolver {
    pub fn new(
        params: PlasmaParams,
        n0: ScalarField,
        b_ext: ScalarField,
        background: ScalarField,
    ) -> Result<Self> {
        params.validate()?;
        n0.grid.check_same(&b_ext.grid)?;
        n0.grid.check_same(&background.grid)?;
        if b_ext.min() <= 0.0 {
            return Err(VmfpError::Parameter("external field must be positive".into()));
        }
        if n0.min() <= 0.0 {
            return Err(VmfpError::Positivity {
                node: n0.data.iter().position(|&x| x <= 0.0).unwrap(),
                value: n0.min(),
            });
        }
        let omega = b_ext.map(|b| params.cyclotron(b));
        let grad_omega = Spectral::get(n0.grid).grad(&omega);
        Ok(Self {
            params,
            b_ext,
            background,
            state: LimitState {
                n: n0,
                e_mean: [0.0, 0.0],
                t: 0.0,
            },
            omega,
            grad_omega,
            cfl: 0.4,
        })
    }

    pub fn charge(&self, n: &ScalarField) -> ScalarField {
        n.zip(&self.background, |a, d| self.params.q * (a - d))
    }

    /// `E = -∇φ + Ē`.
    pub fn electric_field(&self, n: &ScalarField, e_mean: [f64; 2]) -> Result<VectorField> {
        let mut e = solve_poisson(&self.charge(n), &self.params)?.e;
        for x in e.c[0].iter_mut() {
            *x += e_mean[0];
        }
        for x in e.c[1].iter_mut() {
            *x += e_mean[1];
        }
        Ok(e)
    }

    pub fn drifts(&self, e: &VectorField) -> Drifts {
        let g = e.grid;
        let s = self.params.sigma;
        let mut exb = VectorField::zeros(g);
        let mut gb = VectorField::zeros(g);
        for i in 0..g.len() {
            let b = self.b_ext.data[i];
            let w = self.omega.data[i];
            exb.c[0][i] = e.c[1][i] / b;
            exb.c[1][i] = -e.c[0][i] / b;
            gb.c[0][i] = -s * self.grad_omega.c[1][i] / (w * w);
            gb.c[1][i] = s * self.grad_omega.c[0][i] / (w * w);
        }
        Drifts {
            exb,
            grad_b: gb,
            curvature: VectorField::zeros(g),
        }
    }

    pub fn drift_velocity(&self, e: &VectorField) -> VectorField {
        self.drifts(e).total()
    }

    /// `-div(n V)` by second-order upwind finite volumes, and `dĒ/dt`.
    fn rhs(&self, n: &ScalarField, e_mean: [f64; 2]) -> Result<(Vec<f64>, [f64; 2], f64)> {
        let g = n.grid;
        let e = self.electric_field(n, e_mean)?;
        let v = self.drift_velocity(&e);
        let (n1, n2) = (g.n1, g.n2);
        let (h1, h2) = (g.h1(), g.h2());
        let mut out = vec![0.0; g.len()];
        let idx = |i: isize, j: isize| g.index(i.rem_euclid(n1 as isize) as usize, j.rem_euclid(n2 as isize) as usize);
        let nd = &n.data;
        let mut vmax: f64 = 0.0;
        let slope = |a: f64, b: f64, c: f64| -> f64 {
            // central slope, limited only so that both face values stay
            // non-negative
            let s = 0.5 * (c - a);
            s.clamp(-2.0 * b.max(0.0), 2.0 * b.max(0.0))
        };
        for dir in 0..2 {
            let h = if dir == 0 { h1 } else { h2 };
            for i in 0..n1 as isize {
                for j in 0..n2 as isize {
                    // face between (i, j) and its + neighbour in `dir`
                    let (pi, pj) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
                    let (mi, mj) = if dir == 0 { (i - 1, j) } else { (i, j - 1) };
                    let (qi, qj) = if dir == 0 { (i + 2, j) } else { (i, j + 2) };
                    let c0 = idx(i, j);
                    let c1 = idx(pi, pj);
                    let vf = 0.5 * (v.c[dir][c0] + v.c[dir][c1]);
                    vmax = vmax.max(vf.abs() / h);
                    let val = if vf >= 0.0 {
                        nd[c0] + 0.5 * slope(nd[idx(mi, mj)], nd[c0], nd[c1])
                    } else {
                        nd[c1] - 0.5 * slope(nd[c0], nd[c1], nd[idx(qi, qj)])
                    };
                    let flux = vf * val / h;
                    out[c0] -= flux;
                    out[c1] += flux;
                }
            }
        }
        let mut mean_flux = [0.0; 2];
        for i in 0..g.len() {
            mean_flux[0] += nd[i] * v.c[0][i];
            mean_flux[1] += nd[i] * v.c[1][i];
        }
        let k = -self.params.q / (self.params.eps0 * g.len() as f64);
        Ok((out, [k * mean_flux[0], k * mean_flux[1]], vmax))
    }

    /// Advances by `dt` with SSP-RK2, subcycling to keep the CFL number
    /// below `self.cfl`.
    pub fn limit_step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(VmfpError::Parameter("dt must be positive".into()));
        }
        let (_, _, vmax) = self.rhs(&self.state.n, self.state.e_mean)?;
        let nsub = ((dt * vmax / self.cfl).ceil() as usize).max(1);
        let h = dt / nsub as f64;
        for _ in 0..nsub {
            self.rk2(h)?;
        }
        Ok(())
    }

    fn rk2(&mut self, dt: f64) -> Result<()> {
        let s0 = self.state.clone();
        let (r0, de0, _) = self.rhs(&s0.n, s0.e_mean)?;
        let n1 = ScalarField {
            grid: s0.n.grid,
            data: s0.n.data.iter().zip(&r0).map(|(a, b)| a + dt * b).collect(),
        };
        let m1 = [s0.e_mean[0] + dt * de0[0], s0.e_mean[1] + dt * de0[1]];
        let (r1, de1, _) = self.rhs(&n1, m1)?;
        let n2: Vec<f64> = s0
            .n
            .data
            .iter()
            .zip(&n1.data)
            .zip(&r1)
            .map(|((a, b), c)| 0.5 * a + 0.5 * (b + dt * c))
            .collect();
        if let Some(i) = n2.iter().position(|&x| !(x > 0.0)) {
            return Err(VmfpError::Positivity { node: i, value: n2[i] });
        }
        self.state = LimitState {
            n: ScalarField {
                grid: s0.n.grid,
                data: n2,
            },
            e_mean: [
                s0.e_mean[0] + 0.5 * dt * (de0[0] + de1[0]),
                s0.e_mean[1] + 0.5 * dt * (de0[1] + de1[1]),
            ],
            t: s0.t + dt,
        };
        Ok(())
    }

    pub fn e(&self) -> Result<VectorField> {
        self.electric_field(&self.state.n, self.state.e_mean)
    }

    /// `∂t E` consistent with the drift equation: `-∇∂tφ + dĒ/dt`.
    pub fn dt_e(&self) -> Result<VectorField> {
        let n = &self.state.n;
        let e = self.e()?;
        let v = self.drift_velocity(&e);
        let sp = Spectral::get(n.grid);
        let mut flux = v.clone();
        for k in 0..2 {
            for i in 0..n.data.len() {
                flux.c[k][i] *= n.data[i];
            }
        }
        let div = sp.div(&flux);
        // eps0 Δ ∂tφ = -q ∂t n = q div(nV)
        let rho_t = div.scale(-self.params.q);
        let mut dte = solve_poisson(&rho_t, &self.params)?.e;
        let np = n.data.len() as f64;
        let k = -self.params.q / self.params.eps0;
        for c in 0..2 {
            let m: f64 = flux.c[c].iter().sum::<f64>() / np;
            dte.c[c].iter_mut().for_each(|x| *x += k * m);
        }
        Ok(dte)
    }

    /// First-order magnetic correction of the current state.
    pub fn b1(&self) -> Result<ScalarField> {
        reconstruct_b1(&self.state.n, &self.e()?, &self.dt_e()?, &self.b_ext, &self.params)
    }

    /// `σ ∫ n ln n + eps0/(2m) ∫ |E|^2`.
    pub fn free_energy(&self) -> Result<f64> {
        let n = &self.state.n;
        let e = self.e()?;
        let ent: f64 = n.data.iter().map(|&x| x * x.ln()).sum::<f64>() * n.grid.cell_area();
        Ok(self.params.sigma * ent + self.params.eps0 / (2.0 * self.params.m) * e.norm2_integral())
    }
}

/// `k[n] = σ ∇n / n - (q/m) E`.
pub fn compute_k(n: &ScalarField, e: &VectorField, p: &PlasmaParams) -> VectorField {
    let sp = Spectral::get(n.grid);
    let g = sp.grad(n);
    let mut k = VectorField::zeros(n.grid);
    for i in 0..n.data.len() {
        for c in 0..2 {
            k.c[c][i] = p.sigma * g.c[c][i] / n.data[i] - p.q / p.m * e.c[c][i];
        }
    }
    k
}

/// Relative difference between `div((n/ω_c) e ∧ k[n])` and `div(n V)`,
/// both evaluated spectrally. Falls back to the absolute difference when
/// `div(n V)` vanishes.
pub fn flux_equivalence_residual(
    n: &ScalarField,
    e: &VectorField,
    b_ext: &ScalarField,
    p: &PlasmaParams,
) -> f64 {
    let g = n.grid;
    let sp = Spectral::get(g);
    let k = compute_k(n, e, p);
    let mut raw = VectorField::zeros(g);
    let mut drift = VectorField::zeros(g);
    let omega = b_ext.map(|b| p.cyclotron(b));
    let go = sp.grad(&omega);
    for i in 0..g.len() {
        let w = omega.data[i];
        raw.c[0][i] = n.data[i] / w * (-k.c[1][i]);
        raw.c[1][i] = n.data[i] / w * k.c[0][i];
        let b = b_ext.data[i];
        let v1 = e.c[1][i] / b - p.sigma * go.c[1][i] / (w * w);
        let v2 = -e.c[0][i] / b + p.sigma * go.c[0][i] / (w * w);
        drift.c[0][i] = n.data[i] * v1;
        drift.c[1][i] = n.data[i] * v2;
    }
    let a = sp.div(&raw);
    let b = sp.div(&drift);
    let diff = a.zip(&b, |x, y| x - y).l2_norm();
    let scale = b.l2_norm();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PerpGrid;
    use std::f64::consts::PI;

    fn setup(bamp: f64) -> LimitSolver {
        let g = PerpGrid::square(32, 2.0 * PI).unwrap();
        let p = PlasmaParams::default();
        let d = g.sample(|x, _| 1.0 + 0.2 * x.cos());
        let n = g.sample(|x, y| (1.0 + 0.2 * x.cos()) * (1.0 + 0.2 * x.cos() * y.cos()));
        let b = g.sample(|x, _| 1.0 + bamp * x.cos());
        LimitSolver::new(p, n, b, d).unwrap()
    }

    #[test]
    fn uniform_field_no_e_gives_zero_residual() {
        let g = PerpGrid::square(32, 2.0 * PI).unwrap();
        let p = PlasmaParams::default();
        let n = g.sample(|x, y| 1.0 + 0.3 * (x + 2.0 * y).sin() * x.cos());
        let e = VectorField::zeros(g);
        let b = ScalarField::constant(g, 1.3);
        assert!(flux_equivalence_residual(&n, &e, &b, &p) <= 1e-10);
    }

    #[test]
    fn exb_drift_of_uniform_field() {
        let s = setup(0.0);
        let g = s.state.n.grid;
        let mut e = VectorField::zeros(g);
        e.c[0] = vec![0.5; g.len()];
        let d = s.drifts(&e);
        assert!(d.exb.c[1].iter().all(|&x| (x + 0.5).abs() < 1e-15));
        assert!(d.grad_b.l2_norm() < 1e-12);
    }

    #[test]
    fn mass_conserved_and_positive() {
        let mut s = setup(0.2);
        let m0 = s.state.n.integral();
        for _ in 0..50 {
            s.limit_step(0.01).unwrap();
        }
        assert!(((s.state.n.integral() - m0) / m0).abs() < 1e-12);
        assert!(s.state.n.min() > 0.0);
    }

    #[test]
    fn b1_consistent_and_zero_mean() {
        let s = setup(0.2);
        let b1 = s.b1().unwrap();
        assert!(b1.mean().abs() < 1e-14);
        assert!(b1.max_abs() > 0.0);
    }
}
