//! Free streaming `∂t f + (1/eps) v_⊥ · ∇_x f = 0` by two periodic
//! semi-Lagrangian shifts in the perpendicular plane.

use super::interp::{lagrange_weights, pfc_value, split_offset};
use crate::grid::DistributionField;

/// Shift along `x1` (`dir = 0`) or `x2` (`dir = 1`) by `v_dir * tau` where
/// `tau = dt / eps`. `buf` is resized to the field size.
pub fn shift_x(f: &mut DistributionField, dir: usize, tau: f64, limited: bool, buf: &mut Vec<f64>) {
    let (n1, n2) = (f.perp.n1, f.perp.n2);
    let nv = f.vel.nv;
    let nv2 = nv * nv;
    let nv3 = nv2 * nv;
    let h = if dir == 0 { f.perp.h1() } else { f.perp.h2() };
    let ndir = if dir == 0 { n1 } else { n2 } as isize;
    buf.resize(f.data.len(), 0.0);
    let src = &f.data;
    let dst = &mut buf[..];
    let v = f.vel.nodes();
    // per velocity index: displacement in cells
    let disp: Vec<f64> = v.iter().map(|vi| vi * tau / h).collect();
    let wrap = |i: isize| i.rem_euclid(ndir) as usize;
    let block = if dir == 0 { nv2 } else { nv };
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let out_base = (i1 * n2 + i2) * nv3;
            let here = if dir == 0 { i1 } else { i2 } as isize;
            let row = |k: isize| -> usize {
                if dir == 0 {
                    (wrap(k) * n2 + i2) * nv3
                } else {
                    (i1 * n2 + wrap(k)) * nv3
                }
            };
            let nblocks = if dir == 0 { nv } else { nv2 };
            for bi in 0..nblocks {
                let vi = if dir == 0 { bi } else { bi % nv };
                let d = disp[vi];
                let inner = bi * block;
                let o = out_base + inner;
                if limited {
                    let (s, a, sg) = if d >= 0.0 {
                        let s = d.floor();
                        (s as isize, d - s, 1isize)
                    } else {
                        let s = (-d).floor();
                        (s as isize, -d - s, -1isize)
                    };
                    let j = here - sg * s;
                    let r = [row(j - 2 * sg), row(j - sg), row(j), row(j + sg)];
                    for k in 0..block {
                        dst[o + k] = pfc_value(
                            src[r[0] + inner + k],
                            src[r[1] + inner + k],
                            src[r[2] + inner + k],
                            src[r[3] + inner + k],
                            a,
                        );
                    }
                } else {
                    let (base, t) = split_offset(-d);
                    let w = lagrange_weights(t);
                    let j = here + base;
                    let r = [row(j - 1), row(j), row(j + 1), row(j + 2)];
                    for k in 0..block {
                        dst[o + k] = w[0] * src[r[0] + inner + k]
                            + w[1] * src[r[1] + inner + k]
                            + w[2] * src[r[2] + inner + k]
                            + w[3] * src[r[3] + inner + k];
                    }
                }
            }
        }
    }
    std::mem::swap(&mut f.data, buf);
}

/// Full perpendicular transport over `dt`.
pub fn transport(f: &mut DistributionField, dt: f64, eps: f64, limited: bool, buf: &mut Vec<f64>) {
    let tau = dt / eps;
    shift_x(f, 0, tau, limited, buf);
    shift_x(f, 1, tau, limited, buf);
}
