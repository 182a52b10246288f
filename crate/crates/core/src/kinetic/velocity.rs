//! Velocity-space semi-Lagrangian operators acting on one spatial node:
//! rotations (Larmor gyration, self-consistent magnetic field) and electric
//! kicks.
//!
//! Interpolation acts on `g = f / M` with `M` the grid Maxwellian, and the
//! result is multiplied by `M` at the departure point. A Maxwellian is
//! therefore transported exactly. The node density is restored afterwards
//! by a multiplicative correction.

use super::interp::{lagrange_weights, split_offset};
use crate::grid::VelGrid;
use crate::maxwellian::GridMaxwellian;

const ANGLE_EPS: f64 = 1e-14;
const KICK_CORRECTION_MIN: f64 = 1e-6;
/// Largest relative change of any value the energy fix after a rotation
/// may make; beyond it the fix is skipped.
const ENERGY_FIX_MAX: f64 = 0.5;

pub struct VelocityOps {
    pub vel: VelGrid,
    pub sigma: f64,
    pub clip: bool,
    nv: usize,
    hv: f64,
    v: Vec<f64>,
    m1: Vec<f64>,
    m1_scale: f64,
    m3: Vec<f64>,
    inv_m3: Vec<f64>,
    half_v2: Vec<f64>,
}

/// Scratch buffers reused across nodes.
pub struct Scratch {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Scratch {
    pub fn new(vel: VelGrid) -> Self {
        Self {
            a: vec![0.0; vel.len()],
            b: vec![0.0; vel.len()],
        }
    }
}

impl VelocityOps {
    pub fn new(vel: VelGrid, sigma: f64, clip: bool) -> Self {
        let gm = GridMaxwellian::new(vel, sigma);
        let m3 = gm.full();
        let inv_m3 = m3.iter().map(|x| 1.0 / x).collect();
        let mid = vel.node(0);
        let m1_scale = gm.m1[0] / (-mid * mid / (2.0 * sigma)).exp();
        Self {
            vel,
            sigma,
            clip,
            nv: vel.nv,
            hv: vel.hv(),
            v: vel.nodes(),
            m1: gm.m1,
            m1_scale,
            m3,
            inv_m3,
            half_v2: vel.nodes().iter().map(|x| 0.5 * x * x).collect(),
        }
    }

    pub fn m1(&self) -> &[f64] {
        &self.m1
    }

    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.nv * self.nv,
            1 => self.nv,
            _ => 1,
        }
    }

    /// `dst(.., i_a, ..) = src(.., i_a + off(i_b), ..)` along axis `a` with an
    /// offset (in cells) depending on the index along axis `b`.
    fn line_op(&self, src: &[f64], dst: &mut [f64], a: usize, b: usize, off: impl Fn(usize) -> f64) {
        let nv = self.nv;
        let c = 3 - a - b;
        let (sa, sb, sc) = (self.stride(a), self.stride(b), self.stride(c));
        let last = nv as isize - 1;
        for ib in 0..nv {
            let (base, t) = split_offset(off(ib));
            let w = lagrange_weights(t);
            for ia in 0..nv {
                let j = ia as isize + base;
                let idx = [
                    (j - 1).clamp(0, last) as usize,
                    j.clamp(0, last) as usize,
                    (j + 1).clamp(0, last) as usize,
                    (j + 2).clamp(0, last) as usize,
                ];
                let o = ia * sa + ib * sb;
                let s0 = idx[0] * sa + ib * sb;
                let s1 = idx[1] * sa + ib * sb;
                let s2 = idx[2] * sa + ib * sb;
                let s3 = idx[3] * sa + ib * sb;
                if self.clip {
                    for ic in 0..nv {
                        let k = ic * sc;
                        let (p0, p1, p2, p3) = (src[s0 + k], src[s1 + k], src[s2 + k], src[s3 + k]);
                        let val = w[0] * p0 + w[1] * p1 + w[2] * p2 + w[3] * p3;
                        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
                        dst[o + k] = val.clamp(lo, hi);
                    }
                } else {
                    for ic in 0..nv {
                        let k = ic * sc;
                        dst[o + k] = w[0] * src[s0 + k]
                            + w[1] * src[s1 + k]
                            + w[2] * src[s2 + k]
                            + w[3] * src[s3 + k];
                    }
                }
            }
        }
    }

    /// `g <- g ∘ R` where `R` turns the `(a, b)` plane counter-clockwise by
    /// `angle`. `g` holds the result on return.
    fn rotate_g(&self, g: &mut Vec<f64>, tmp: &mut Vec<f64>, a: usize, b: usize, angle: f64) {
        let quarter = std::f64::consts::FRAC_PI_2;
        let k = (angle / quarter).round();
        let phi = angle - k * quarter;
        let hv = self.hv;
        if phi.abs() > ANGLE_EPS {
            let p = -(0.5 * phi).tan();
            let s = phi.sin();
            let v = &self.v;
            self.line_op(g, tmp, a, b, |ib| p * v[ib] / hv);
            self.line_op(tmp, g, b, a, |ia| s * v[ia] / hv);
            self.line_op(g, tmp, a, b, |ib| p * v[ib] / hv);
            g.copy_from_slice(tmp);
        }
        let k = (k as i64).rem_euclid(4);
        if k != 0 {
            self.quarter_turns(g, tmp, a, b, k as usize);
            g.copy_from_slice(tmp);
        }
    }

    /// `dst = src ∘ R(k π/2)` in the `(a, b)` plane; exact on the symmetric
    /// grid.
    fn quarter_turns(&self, src: &[f64], dst: &mut [f64], a: usize, b: usize, k: usize) {
        let nv = self.nv;
        let c = 3 - a - b;
        let (sa, sb, sc) = (self.stride(a), self.stride(b), self.stride(c));
        let r = |i: usize| nv - 1 - i;
        for ia in 0..nv {
            for ib in 0..nv {
                // R(π/2) (va, vb) = (-vb, va)
                let (ja, jb) = match k {
                    1 => (r(ib), ia),
                    2 => (r(ia), r(ib)),
                    _ => (ib, r(ia)),
                };
                for ic in 0..nv {
                    dst[ia * sa + ib * sb + ic * sc] = src[ja * sa + jb * sb + ic * sc];
                }
            }
        }
    }

    fn to_g(&self, f: &[f64], g: &mut [f64]) {
        for ((x, y), w) in g.iter_mut().zip(f).zip(&self.inv_m3) {
            *x = y * w;
        }
    }

    fn renormalize(f: &mut [f64], mass: f64) {
        let now: f64 = f.iter().sum();
        if now > 0.0 && mass > 0.0 {
            let s = mass / now;
            f.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// `f <- f ∘ R_z(angle)` in the `(v1, v2)` plane.
    pub fn larmor_node(&self, f: &mut [f64], angle: f64, sc: &mut Scratch) {
        self.rotate_node(f, [0.0, 0.0, angle], sc);
    }

    /// `f <- f ∘ R(θ)` with `θ` a rotation vector, split symmetrically into
    /// coordinate-axis rotations (exact when `θ` is along an axis).
    pub fn rotate_node(&self, f: &mut [f64], theta: [f64; 3], sc: &mut Scratch) {
        let active: Vec<usize> = (0..3).filter(|&k| theta[k].abs() > ANGLE_EPS).collect();
        if active.is_empty() {
            return;
        }
        let mass: f64 = f.iter().sum();
        let k0 = self.shell_moments(f).1;
        let g = &mut sc.a;
        let tmp = &mut sc.b;
        self.to_g(f, g);
        // plane of the rotation about axis k, counter-clockwise
        let plane = |k: usize| match k {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        let last = *active.last().unwrap();
        let mut seq: Vec<(usize, f64)> = Vec::new();
        for &k in &active {
            if k == last {
                seq.push((k, theta[k]));
            } else {
                seq.push((k, 0.5 * theta[k]));
            }
        }
        for i in (0..active.len() - 1).rev() {
            let k = active[i];
            seq.push((k, 0.5 * theta[k]));
        }
        for (k, ang) in seq {
            let (a, b) = plane(k);
            self.rotate_g(g, tmp, a, b, ang);
        }
        for ((x, y), w) in f.iter_mut().zip(g.iter()).zip(&self.m3) {
            *x = y * w;
        }
        Self::renormalize(f, mass);
        self.restore_energy(f, k0);
    }

    /// Unweighted sums of `f`, `w f` and `w² f` with `w = |v|²/2`.
    fn shell_moments(&self, f: &[f64]) -> (f64, f64, f64) {
        let nv = self.nv;
        let w = &self.half_v2;
        let (mut m, mut k, mut q) = (0.0, 0.0, 0.0);
        for a in 0..nv {
            for b in 0..nv {
                let row = &f[(a * nv + b) * nv..(a * nv + b + 1) * nv];
                for (x, wc) in row.iter().zip(w) {
                    let e = w[a] + w[b] + wc;
                    m += x;
                    k += x * e;
                    q += x * e * e;
                }
            }
        }
        (m, k, q)
    }

    /// Rescales `f` by `1 + α (w - w̄)` so that its energy sum returns to
    /// `target`; mass is unchanged. A rotation does no work, but the
    /// interpolation moves a little energy between shells.
    fn restore_energy(&self, f: &mut [f64], target: f64) {
        let (m, k1, q) = self.shell_moments(f);
        if !(m > 0.0) {
            return;
        }
        let wbar = k1 / m;
        let var = q - k1 * wbar;
        if !(var > 0.0) {
            return;
        }
        let alpha = (target - k1) / var;
        let spread = (3.0 * self.half_v2[0] - wbar).max(wbar);
        if !(alpha.abs() * spread < ENERGY_FIX_MAX) {
            return;
        }
        let nv = self.nv;
        let w = &self.half_v2;
        for a in 0..nv {
            for b in 0..nv {
                let row = &mut f[(a * nv + b) * nv..(a * nv + b + 1) * nv];
                for (x, wc) in row.iter_mut().zip(w) {
                    *x *= 1.0 + alpha * (w[a] + w[b] + wc - wbar);
                }
            }
        }
    }

    /// `f <- f(v - δ)`. Returns the particle current averaged between the
    /// states before and after the kick, corrected along `δ` so that its
    /// product with `δ` equals the kinetic energy gained.
    pub fn kick_node(&self, f: &mut [f64], delta: [f64; 3], sc: &mut Scratch) -> [f64; 3] {
        let j0 = self.node_current(f);
        if delta.iter().all(|d| (d / self.hv).abs() < ANGLE_EPS) {
            return j0;
        }
        let mass: f64 = f.iter().sum();
        let k0 = self.node_energy(f);
        let g = &mut sc.a;
        let tmp = &mut sc.b;
        self.to_g(f, g);
        for k in 0..3 {
            let off = -delta[k] / self.hv;
            if off.abs() < ANGLE_EPS {
                continue;
            }
            let other = if k == 2 { 1 } else { 2 };
            self.line_op(g, tmp, k, other, |_| off);
            g.copy_from_slice(tmp);
        }
        let nv = self.nv;
        let ms: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                self.v
                    .iter()
                    .map(|&v| {
                        let u = v - delta[k];
                        self.m1_scale * (-u * u / (2.0 * self.sigma)).exp()
                    })
                    .collect()
            })
            .collect();
        for a in 0..nv {
            for b in 0..nv {
                let mab = ms[0][a] * ms[1][b];
                let o = (a * nv + b) * nv;
                for c in 0..nv {
                    f[o + c] = g[o + c] * mab * ms[2][c];
                }
            }
        }
        Self::renormalize(f, mass);
        let j1 = self.node_current(f);
        let mut j = [0.5 * (j0[0] + j1[0]), 0.5 * (j0[1] + j1[1]), 0.5 * (j0[2] + j1[2])];
        // An exact translation gains j·δ in kinetic energy. Correct the
        // component along δ so that the returned current accounts for the
        // energy actually gained on the grid.
        // Tiny kicks are left alone: their energy error is negligible and
        // the quotient would only amplify round-off.
        let d2: f64 = delta.iter().map(|d| d * d).sum();
        if d2.sqrt() >= KICK_CORRECTION_MIN * self.hv {
            let dk = self.node_energy(f) - k0;
            let c = (dk - (j[0] * delta[0] + j[1] * delta[1] + j[2] * delta[2])) / d2;
            for k in 0..3 {
                j[k] += c * delta[k];
            }
        }
        j
    }

    /// `∫ |v|^2/2 f dv` on one node.
    pub fn node_energy(&self, f: &[f64]) -> f64 {
        let nv = self.nv;
        let w = &self.half_v2;
        let mut s = 0.0;
        for a in 0..nv {
            for b in 0..nv {
                let wab = w[a] + w[b];
                let row = &f[(a * nv + b) * nv..(a * nv + b + 1) * nv];
                for (x, wc) in row.iter().zip(w) {
                    s += x * (wab + wc);
                }
            }
        }
        s * self.hv.powi(3)
    }

    /// `∫ v f dv` on one node.
    pub fn node_current(&self, f: &[f64]) -> [f64; 3] {
        let nv = self.nv;
        let v = &self.v;
        let mut j = [0.0; 3];
        for a in 0..nv {
            let mut sa = 0.0;
            for b in 0..nv {
                let row = &f[(a * nv + b) * nv..(a * nv + b + 1) * nv];
                let mut sb = 0.0;
                let mut scc = 0.0;
                for c in 0..nv {
                    sb += row[c];
                    scc += v[c] * row[c];
                }
                sa += sb;
                j[1] += v[b] * sb;
                j[2] += scc;
            }
            j[0] += v[a] * sa;
        }
        let hv3 = self.hv.powi(3);
        [j[0] * hv3, j[1] * hv3, j[2] * hv3]
    }
}
