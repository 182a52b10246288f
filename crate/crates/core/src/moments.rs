//! Velocity moments of a distribution, computed by the midpoint rule.

use crate::grid::{DistributionField, ScalarField, VectorField};

/// Density, particle current `∫ v f dv` and the symmetric second moment
/// `∫ v ⊗ v f dv` (components 11, 12, 13, 22, 23, 33).
#[derive(Debug, Clone)]
pub struct Moments {
    pub n: ScalarField,
    pub j: VectorField,
    pub s: [Vec<f64>; 6],
}

impl Moments {
    /// `(1/2) ∫ |v|^2 f dv` at each node.
    pub fn kinetic_energy_density(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.n.grid);
        for i in 0..out.data.len() {
            out.data[i] = 0.5 * (self.s[0][i] + self.s[3][i] + self.s[5][i]);
        }
        out
    }

    pub fn stress(&self, a: usize, b: usize, i: usize) -> f64 {
        let k = match (a.min(b), a.max(b)) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            _ => 5,
        };
        self.s[k][i]
    }
}

pub fn density(f: &DistributionField) -> ScalarField {
    let hv3 = f.vel.cell_volume();
    let nv3 = f.vel.len();
    let data = f
        .data
        .chunks_exact(nv3)
        .map(|c| c.iter().sum::<f64>() * hv3)
        .collect();
    ScalarField { grid: f.perp, data }
}

pub fn current(f: &DistributionField) -> VectorField {
    let nv = f.vel.nv;
    let v = f.vel.nodes();
    let hv3 = f.vel.cell_volume();
    let mut out = VectorField::zeros(f.perp);
    for ix in 0..f.perp.len() {
        let node = f.node(ix);
        let mut j = [0.0; 3];
        for a in 0..nv {
            let mut sa = 0.0;
            for b in 0..nv {
                let row = &node[(a * nv + b) * nv..(a * nv + b + 1) * nv];
                let mut sb = 0.0;
                let mut sc = 0.0;
                for c in 0..nv {
                    sb += row[c];
                    sc += v[c] * row[c];
                }
                sa += sb;
                j[1] += v[b] * sb;
                j[2] += sc;
            }
            j[0] += v[a] * sa;
        }
        for k in 0..3 {
            out.c[k][ix] = j[k] * hv3;
        }
    }
    out
}

pub fn moments(f: &DistributionField) -> Moments {
    let nv = f.vel.nv;
    let v = f.vel.nodes();
    let hv3 = f.vel.cell_volume();
    let np = f.perp.len();
    let mut n = ScalarField::zeros(f.perp);
    let mut j = VectorField::zeros(f.perp);
    let mut s: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; np]);
    for ix in 0..np {
        let node = f.node(ix);
        let mut m0 = 0.0;
        let mut m1 = [0.0; 3];
        let mut m2 = [0.0; 6];
        for a in 0..nv {
            for b in 0..nv {
                let row = &node[(a * nv + b) * nv..(a * nv + b + 1) * nv];
                let mut r0 = 0.0;
                let mut r1 = 0.0;
                let mut r2 = 0.0;
                for c in 0..nv {
                    let x = row[c];
                    r0 += x;
                    r1 += v[c] * x;
                    r2 += v[c] * v[c] * x;
                }
                let (va, vb) = (v[a], v[b]);
                m0 += r0;
                m1[0] += va * r0;
                m1[1] += vb * r0;
                m1[2] += r1;
                m2[0] += va * va * r0;
                m2[1] += va * vb * r0;
                m2[2] += va * r1;
                m2[3] += vb * vb * r0;
                m2[4] += vb * r1;
                m2[5] += r2;
            }
        }
        n.data[ix] = m0 * hv3;
        for k in 0..3 {
            j.c[k][ix] = m1[k] * hv3;
        }
        for k in 0..6 {
            s[k][ix] = m2[k] * hv3;
        }
    }
    Moments { n, j, s }
}

/// Total kinetic energy `∫∫ |v|^2/2 f`.
pub fn kinetic_energy(f: &DistributionField) -> f64 {
    moments(f).kinetic_energy_density().integral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{PerpGrid, VelGrid};
    use crate::maxwellian::GridMaxwellian;

    #[test]
    fn shifted_maxwellian_moments() {
        let p = PerpGrid::square(4, 1.0).unwrap();
        let vel = VelGrid::new(24, 8.0).unwrap();
        let gm = GridMaxwellian::new(vel, 1.0);
        let prof = gm.shifted([0.5, -0.25, 0.1]);
        let n = p.sample(|x, _| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos());
        let f = DistributionField::product(&n, vel, &prof);
        let m = moments(&f);
        let j = current(&f);
        let d = density(&f);
        for i in 0..p.len() {
            let nx = n.data[i];
            assert!((m.n.data[i] - nx).abs() < 1e-13);
            assert!((d.data[i] - nx).abs() < 1e-13);
            assert!((m.j.c[0][i] - 0.5 * nx).abs() < 1e-10);
            assert!((j.c[1][i] + 0.25 * nx).abs() < 1e-10);
            assert!((m.stress(0, 0, i) - nx * (1.0 + 0.25)).abs() < 1e-9);
            assert!((m.stress(0, 1, i) - nx * (0.5 * -0.25)).abs() < 1e-9);
            assert!((m.stress(2, 2, i) - nx * (1.0 + 0.01)).abs() < 1e-9);
        }
    }
}
