//! Electrostatic and electromagnetic field solvers on the periodic plane.

use std::ops::Div;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VmfpError};
use crate::grid::{ScalarField, VectorField};
use crate::params::PlasmaParams;
use crate::spectral::Spectral;

/// Self-consistent electric field and magnetic perturbation. The external
/// field `B_ext e3 / eps` is kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    pub e: VectorField,
    pub b: VectorField,
}

impl EmState {
    pub fn zeros(grid: crate::grid::PerpGrid) -> Self {
        Self {
            e: VectorField::zeros(grid),
            b: VectorField::zeros(grid),
        }
    }

    /// `∫ eps0/(2m) |E|^2 + 1/(2 mu0 m) |B|^2`.
    pub fn energy(&self, p: &PlasmaParams) -> f64 {
        p.eps0 / (2.0 * p.m) * self.e.norm2_integral()
            + 1.0 / (2.0 * p.mu0 * p.m) * self.b.norm2_integral()
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub phi: ScalarField,
    pub e: VectorField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MaxwellMode {
    #[default]
    SemiImplicit,
    Explicit,
}

const NEUTRALITY_TOL: f64 = 1e-9;

/// Solves `-eps0 Δφ = ρ`, `E = -∇φ` with zero-mean potential.
pub fn solve_poisson(rho: &ScalarField, p: &PlasmaParams) -> Result<PoissonSolution> {
    let mean = rho.mean();
    if !mean.is_finite() || mean.abs() > NEUTRALITY_TOL * (1.0 + rho.max_abs()) {
        return Err(VmfpError::Neutrality { mean });
    }
    let sp = Spectral::get(rho.grid);
    let r = rho.map(|x| (x - mean) / p.eps0);
    let phi = sp.inverse_neg_laplacian(&r);
    let e = sp.grad(&phi).scale(-1.0);
    Ok(PoissonSolution { phi, e })
}

/// Largest stable step of the explicit leapfrog scheme.
pub fn explicit_dt_limit(grid: crate::grid::PerpGrid, p: &PlasmaParams, c_safety: f64) -> f64 {
    let sp = Spectral::get(grid);
    let k1 = sp.k1.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let k2 = sp.k2.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let kmax = (k1 * k1 + k2 * k2).sqrt();
    c_safety * 2.0 * p.eps / (p.light_speed() * kmax)
}

/// Advances `(E, B)` by `dt` under
/// `mu0 eps0 eps ∂t E = curl B - mu0 q j`, `eps ∂t B = -curl E`
/// with the particle current `j` held fixed over the step.
pub fn maxwell_step(
    em: &EmState,
    j: &VectorField,
    p: &PlasmaParams,
    dt: f64,
    mode: MaxwellMode,
    c_safety: f64,
) -> Result<EmState> {
    let grid = em.e.grid;
    grid.check_same(&j.grid)?;
    let sp = Spectral::get(grid);
    let c1 = 1.0 / (p.mu0 * p.eps0 * p.eps);
    let s = p.q / (p.eps0 * p.eps);
    let fe: Vec<Vec<Complex64>> = (0..3).map(|k| sp.forward(&em.e.c[k])).collect();
    let fb: Vec<Vec<Complex64>> = (0..3).map(|k| sp.forward(&em.b.c[k])).collect();
    let fj: Vec<Vec<Complex64>> = (0..3).map(|k| sp.forward(&j.c[k])).collect();
    let n = fe[0].len();
    let zero = Complex64::new(0.0, 0.0);
    let mut ne = [vec![zero; n], vec![zero; n], vec![zero; n]];
    let mut nb = ne.clone();
    let curl = |k1: f64, k2: f64, v: [Complex64; 3]| -> [Complex64; 3] {
        let i1 = Complex64::new(0.0, k1);
        let i2 = Complex64::new(0.0, k2);
        [i2 * v[2], -i1 * v[2], i1 * v[1] - i2 * v[0]]
    };
    match mode {
        MaxwellMode::SemiImplicit => {
            let a = 0.5 * dt;
            let beta = a * a * c1 / p.eps;
            for idx in 0..n {
                let (k1, k2) = sp.k(idx);
                let e0 = [fe[0][idx], fe[1][idx], fe[2][idx]];
                let b0 = [fb[0][idx], fb[1][idx], fb[2][idx]];
                let cb = curl(k1, k2, b0);
                let ce = curl(k1, k2, e0);
                let mut es = [zero; 3];
                let mut bs = [zero; 3];
                for c in 0..3 {
                    es[c] = e0[c] + a * c1 * cb[c] - dt * s * fj[c][idx];
                    bs[c] = b0[c] - (a / p.eps) * ce[c];
                }
                let cbs = curl(k1, k2, bs);
                let mut r = [zero; 3];
                for c in 0..3 {
                    r[c] = es[c] + a * c1 * cbs[c];
                }
                let kk = k1 * k1 + k2 * k2;
                let den = 1.0 + beta * kk;
                let mut e1 = [zero; 3];
                if kk > 0.0 {
                    let kr = (k1 * r[0] + k2 * r[1]) / kk;
                    let (l0, l1) = (kr * k1, kr * k2);
                    e1[0] = l0 + (r[0] - l0) / den;
                    e1[1] = l1 + (r[1] - l1) / den;
                } else {
                    e1[0] = r[0];
                    e1[1] = r[1];
                }
                e1[2] = r[2] / den;
                let ce1 = curl(k1, k2, e1);
                for c in 0..3 {
                    ne[c][idx] = e1[c];
                    nb[c][idx] = bs[c] - (a / p.eps) * ce1[c];
                }
            }
        }
        MaxwellMode::Explicit => {
            let limit = explicit_dt_limit(grid, p, c_safety);
            if dt > limit {
                return Err(VmfpError::Stability { dt, limit });
            }
            let a = 0.5 * dt;
            for idx in 0..n {
                let (k1, k2) = sp.k(idx);
                let e0 = [fe[0][idx], fe[1][idx], fe[2][idx]];
                let b0 = [fb[0][idx], fb[1][idx], fb[2][idx]];
                let ce = curl(k1, k2, e0);
                let mut bh = [zero; 3];
                for c in 0..3 {
                    bh[c] = b0[c] - (a / p.eps) * ce[c];
                }
                let cbh = curl(k1, k2, bh);
                let mut e1 = [zero; 3];
                for c in 0..3 {
                    e1[c] = e0[c] + dt * c1 * cbh[c] - dt * s * fj[c][idx];
                }
                let ce1 = curl(k1, k2, e1);
                for c in 0..3 {
                    ne[c][idx] = e1[c];
                    nb[c][idx] = bh[c] - (a / p.eps) * ce1[c];
                }
            }
        }
    }
    let [e0, e1, e2] = ne;
    let [b0, b1, b2] = nb;
    Ok(EmState {
        e: VectorField {
            grid,
            c: [sp.inverse(e0), sp.inverse(e1), sp.inverse(e2)],
        },
        b: VectorField {
            grid,
            c: [sp.inverse(b0), sp.inverse(b1), sp.inverse(b2)],
        },
    })
}

/// Projects `E` so that `eps0 div E = ρ`, changing only its gradient part.
pub fn gauss_project(e: &VectorField, rho: &ScalarField, p: &PlasmaParams) -> Result<VectorField> {
    e.grid.check_same(&rho.grid)?;
    let sp = Spectral::get(e.grid);
    let mut f1 = sp.forward(&e.c[0]);
    let mut f2 = sp.forward(&e.c[1]);
    let fr = sp.forward(&rho.data);
    for idx in 0..f1.len() {
        let (k1, k2) = sp.k(idx);
        let kk = k1 * k1 + k2 * k2;
        if kk == 0.0 {
            continue;
        }
        let div = Complex64::new(0.0, k1) * f1[idx] + Complex64::new(0.0, k2) * f2[idx];
        let psi = -(fr[idx] / p.eps0 - div) / kk;
        f1[idx] += Complex64::new(0.0, k1) * psi;
        f2[idx] += Complex64::new(0.0, k2) * psi;
    }
    Ok(VectorField {
        grid: e.grid,
        c: [sp.inverse(f1), sp.inverse(f2), e.c[2].clone()],
    })
}

/// Root-mean-square of `eps0 div E - ρ`, where ρ is restricted to the
/// modes reachable by the discrete divergence (the mean and the modes whose
/// effective wavenumbers both vanish at Nyquist are dropped).
pub fn gauss_residual(e: &VectorField, rho: &ScalarField, p: &PlasmaParams) -> f64 {
    let sp = Spectral::get(e.grid);
    let div = sp.div(e);
    let r = sp.apply(&rho.data, |k1, k2| {
        if k1 == 0.0 && k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    div.data
        .iter()
        .zip(&r)
        .map(|(d, r)| (p.eps0 * d - r).powi(2))
        .sum::<f64>()
        .div(div.data.len() as f64)
        .sqrt()
}

/// Root-mean-square of `div B` (in-plane part; B is independent of x3).
pub fn div_b(b: &VectorField) -> f64 {
    Spectral::get(b.grid).div(b).rms()
}

const B1_CONSISTENCY_TOL: f64 = 1e-3;

/// First-order magnetic correction `b1` (zero mean) from
/// `curl(b1 e3) = mu0 eps0 ∂t E + mu0 q (n/ω_c) e3 ∧ k[n]`,
/// `k[n] = sigma ∇n / n - (q/m) E`.
pub fn reconstruct_b1(
    n: &ScalarField,
    e: &VectorField,
    dt_e: &VectorField,
    b_ext: &ScalarField,
    p: &PlasmaParams,
) -> Result<ScalarField> {
    let grid = n.grid;
    grid.check_same(&e.grid)?;
    grid.check_same(&dt_e.grid)?;
    grid.check_same(&b_ext.grid)?;
    if n.min() <= 0.0 {
        return Err(VmfpError::Consistency("density must be positive".into()));
    }
    let sp = Spectral::get(grid);
    let gn = sp.grad(n);
    let mut r1 = vec![0.0; grid.len()];
    let mut r2 = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let k1 = p.sigma * gn.c[0][i] / n.data[i] - p.q / p.m * e.c[0][i];
        let k2 = p.sigma * gn.c[1][i] / n.data[i] - p.q / p.m * e.c[1][i];
        let w = n.data[i] / p.cyclotron(b_ext.data[i]);
        r1[i] = p.mu0 * p.eps0 * dt_e.c[0][i] + p.mu0 * p.q * w * (-k2);
        r2[i] = p.mu0 * p.eps0 * dt_e.c[1][i] + p.mu0 * p.q * w * k1;
    }
    let h1 = sp.forward(&r1);
    let h2 = sp.forward(&r2);
    let mut rhs = vec![Complex64::new(0.0, 0.0); h1.len()];
    let (mut div2, mut scale2) = (0.0, 0.0);
    for idx in 0..h1.len() {
        let (k1, k2) = sp.k(idx);
        let i1 = Complex64::new(0.0, k1);
        let i2 = Complex64::new(0.0, k2);
        div2 += (i1 * h1[idx] + i2 * h2[idx]).norm_sqr();
        scale2 += (k1 * k1 + k2 * k2) * (h1[idx].norm_sqr() + h2[idx].norm_sqr());
        let kk = k1 * k1 + k2 * k2;
        if kk > 0.0 {
            rhs[idx] = (i1 * h2[idx] - i2 * h1[idx]) / kk;
        }
    }
    if div2.sqrt() > B1_CONSISTENCY_TOL * scale2.sqrt() + 1e-300 {
        return Err(VmfpError::Consistency(format!(
            "source of b1 is not divergence free (relative {:e})",
            div2.sqrt() / scale2.sqrt()
        )));
    }
    Ok(ScalarField {
        grid,
        data: sp.inverse(rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PerpGrid;
    use std::f64::consts::PI;

    fn grid() -> PerpGrid {
        PerpGrid::square(32, 2.0 * PI).unwrap()
    }

    #[test]
    fn poisson_single_mode() {
        // -Δφ = cos x cos y  ->  φ = cos x cos y / 2, E = -∇φ
        let g = grid();
        let p = PlasmaParams::default();
        let rho = g.sample(|x, y| x.cos() * y.cos());
        let sol = solve_poisson(&rho, &p).unwrap();
        for i1 in 0..32 {
            for i2 in 0..32 {
                let (x, y) = (g.x1(i1), g.x2(i2));
                let i = g.index(i1, i2);
                assert!((sol.phi.data[i] - 0.5 * x.cos() * y.cos()).abs() < 1e-12);
                assert!((sol.e.c[0][i] - 0.5 * x.sin() * y.cos()).abs() < 1e-12);
                assert!((sol.e.c[1][i] - 0.5 * x.cos() * y.sin()).abs() < 1e-12);
            }
        }
        assert!(gauss_residual(&sol.e, &rho, &p) < 1e-12);
    }

    #[test]
    fn poisson_rejects_net_charge() {
        let g = grid();
        let rho = g.sample(|x, _| 0.1 + x.cos());
        assert!(matches!(
            solve_poisson(&rho, &PlasmaParams::default()),
            Err(VmfpError::Neutrality { .. })
        ));
    }

    #[test]
    fn vacuum_energy_conserved_and_div_b_zero() {
        let g = grid();
        let p = PlasmaParams {
            eps: 0.5,
            ..Default::default()
        };
        let mut em = EmState::zeros(g);
        em.e.c[2] = g.sample(|x, y| (x + 2.0 * y).sin()).data;
        em.b.c[0] = g.sample(|_, y| (3.0 * y).cos()).data;
        em.b.c[1] = g.sample(|x, _| (2.0 * x).sin()).data;
        let j = VectorField::zeros(g);
        let w0 = em.energy(&p);
        for _ in 0..200 {
            em = maxwell_step(&em, &j, &p, 0.05, MaxwellMode::SemiImplicit, 0.9).unwrap();
        }
        assert!(((em.energy(&p) - w0) / w0).abs() < 1e-12);
        assert!(div_b(&em.b) < 1e-12);
    }

    #[test]
    fn plane_wave_phase_matches_dispersion() {
        // E3 = cos(kx - ωt), B2 = -(k/ω)... check via second-order convergence
        // of the semi-implicit scheme towards the exact standing wave.
        let g = grid();
        let p = PlasmaParams {
            eps: 1.0,
            ..Default::default()
        };
        let run = |dt: f64| {
            let mut em = EmState::zeros(g);
            em.e.c[2] = g.sample(|x, _| x.cos()).data;
            let j = VectorField::zeros(g);
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                em = maxwell_step(&em, &j, &p, dt, MaxwellMode::SemiImplicit, 0.9).unwrap();
            }
            // exact: E3 = cos x cos t
            let ex = g.sample(|x, _| x.cos() * 1.0f64.cos());
            em.e.component(2).zip(&ex, |a, b| a - b).max_abs()
        };
        let e1 = run(0.02);
        let e2 = run(0.01);
        assert!(e1 / e2 > 3.8 && e1 / e2 < 4.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn explicit_mode_checks_cfl() {
        let g = grid();
        let p = PlasmaParams::default();
        let em = EmState::zeros(g);
        let j = VectorField::zeros(g);
        let lim = explicit_dt_limit(g, &p, 0.9);
        assert!(maxwell_step(&em, &j, &p, lim * 1.01, MaxwellMode::Explicit, 0.9).is_err());
        assert!(maxwell_step(&em, &j, &p, lim * 0.99, MaxwellMode::Explicit, 0.9).is_ok());
    }

    #[test]
    fn projection_fixes_divergence_only() {
        let g = grid();
        let p = PlasmaParams::default();
        let mut e = VectorField::zeros(g);
        e.c[0] = g.sample(|x, y| (x + y).sin() + 0.3 * y.cos()).data;
        e.c[1] = g.sample(|x, _| (2.0 * x).cos()).data;
        let rho = g.sample(|x, y| (x - 2.0 * y).cos());
        let pe = gauss_project(&e, &rho, &p).unwrap();
        assert!(gauss_residual(&pe, &rho, &p) < 1e-12);
        let sp = Spectral::get(g);
        let mut a = e.clone();
        a.c[2] = vec![0.0; g.len()];
        let c0 = sp.curl(&a);
        let c1 = sp.curl(&pe);
        assert!(c0.lin(1.0, &c1, -1.0).l2_norm() < 1e-12);
    }

    #[test]
    fn b1_rejects_inconsistent_time_derivative() {
        let g = grid();
        let p = PlasmaParams::default();
        let n = g.sample(|x, y| 1.0 + 0.2 * x.cos() * y.cos());
        let bext = ScalarField::constant(g, 1.0);
        let e = VectorField::zeros(g);
        let mut dte = VectorField::zeros(g);
        dte.c[0] = g.sample(|x, _| x.sin()).data;
        assert!(matches!(
            reconstruct_b1(&n, &e, &dte, &bext, &p),
            Err(VmfpError::Consistency(_))
        ));
    }
}
