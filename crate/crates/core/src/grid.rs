//! Periodic perpendicular grid, cell-centered velocity grid and the field
//! containers built on them.
//!
//! The distribution is stored row-major with the spatial index outermost:
//! `[(i1 * n2 + i2) * nv^3 + (a * nv + b) * nv + c]`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VmfpError};

/// Uniform periodic grid on `[0, l1) x [0, l2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpGrid {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
}

impl PerpGrid {
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        let g = Self { n1, n2, l1, l2 };
        g.validate()?;
        Ok(g)
    }

    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, l, l)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 4 || self.n2 < 4 {
            return Err(VmfpError::Parameter(format!(
                "spatial grid needs at least 4 points per direction, got {}x{}",
                self.n1, self.n2
            )));
        }
        if !(self.l1 > 0.0 && self.l1.is_finite() && self.l2 > 0.0 && self.l2.is_finite()) {
            return Err(VmfpError::Parameter("domain lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn area(&self) -> f64 {
        self.l1 * self.l2
    }

    pub fn x1(&self, i1: usize) -> f64 {
        i1 as f64 * self.h1()
    }

    pub fn x2(&self, i2: usize) -> f64 {
        i2 as f64 * self.h2()
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut data = Vec::with_capacity(self.len());
        for i1 in 0..self.n1 {
            for i2 in 0..self.n2 {
                data.push(f(self.x1(i1), self.x2(i2)));
            }
        }
        ScalarField { grid: *self, data }
    }

    pub fn check_same(&self, other: &PerpGrid) -> Result<()> {
        if self != other {
            return Err(VmfpError::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.n1, self.n2, other.n1, other.n2
            )));
        }
        Ok(())
    }
}

/// Symmetric cell-centered velocity grid, the same in all three directions:
/// `v_i = -vmax + (i + 1/2) hv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelGrid {
    pub nv: usize,
    pub vmax: f64,
}

impl VelGrid {
    pub fn new(nv: usize, vmax: f64) -> Result<Self> {
        let g = Self { nv, vmax };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nv < 4 {
            return Err(VmfpError::Parameter(format!(
                "velocity grid needs at least 4 points, got {}",
                self.nv
            )));
        }
        if !(self.vmax > 0.0 && self.vmax.is_finite()) {
            return Err(VmfpError::Parameter("vmax must be positive".into()));
        }
        Ok(())
    }

    pub fn hv(&self) -> f64 {
        2.0 * self.vmax / self.nv as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.vmax + (i as f64 + 0.5) * self.hv()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nv).map(|i| self.node(i)).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.hv().powi(3)
    }

    pub fn len(&self) -> usize {
        self.nv * self.nv * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fraction of a Maxwellian's mass carried by the outermost shell of
    /// cells. Used to warn about truncated tails.
    pub fn boundary_mass_fraction(&self, sigma: f64) -> f64 {
        let m = crate::maxwellian::GridMaxwellian::new(*self, sigma);
        let w = &m.m1;
        let hv = self.hv();
        let inner: f64 = w[1..self.nv - 1].iter().sum::<f64>() * hv;
        1.0 - inner.powi(3)
    }
}

/// Scalar field on the perpendicular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: PerpGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: PerpGrid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: PerpGrid, v: f64) -> Self {
        Self {
            grid,
            data: vec![v; grid.len()],
        }
    }

    pub fn from_vec(grid: PerpGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(VmfpError::Shape {
                expected: grid.len(),
                got: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|x| x * x).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }
}

/// Three-component vector field on the perpendicular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: PerpGrid,
    pub c: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: PerpGrid) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            c: [z.clone(), z.clone(), z],
        }
    }

    pub fn component(&self, i: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.c[i].clone(),
        }
    }

    pub fn from_components(a: ScalarField, b: ScalarField, c: ScalarField) -> Self {
        Self {
            grid: a.grid,
            c: [a.data, b.data, c.data],
        }
    }

    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.c[0][i], self.c[1][i], self.c[2][i]]
    }

    /// Integral of `|F|^2` over the domain.
    pub fn norm2_integral(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            s += self.c[k].iter().map(|x| x * x).sum::<f64>();
        }
        s * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm2_integral().sqrt()
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for k in 0..3 {
            for (x, y) in self.c[k].iter_mut().zip(&other.c[k]) {
                *x += a * y;
            }
        }
    }

    pub fn lin(&self, a: f64, other: &VectorField, b: f64) -> VectorField {
        let mut out = self.clone();
        for k in 0..3 {
            for (x, y) in out.c[k].iter_mut().zip(&other.c[k]) {
                *x = a * *x + b * y;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> VectorField {
        let mut out = self.clone();
        for k in 0..3 {
            out.c[k].iter_mut().for_each(|x| *x *= s);
        }
        out
    }

    pub fn dot_integral(&self, other: &VectorField) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            s += self.c[k]
                .iter()
                .zip(&other.c[k])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        s * self.grid.cell_area()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Phase-space distribution `f(x1, x2, v)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub perp: PerpGrid,
    pub vel: VelGrid,
    pub data: Vec<f64>,
    pub t: f64,
}

impl DistributionField {
    pub fn zeros(perp: PerpGrid, vel: VelGrid) -> Self {
        Self {
            perp,
            vel,
            data: vec![0.0; perp.len() * vel.len()],
            t: 0.0,
        }
    }

    pub fn from_vec(perp: PerpGrid, vel: VelGrid, data: Vec<f64>) -> Result<Self> {
        let expected = perp.len() * vel.len();
        if data.len() != expected {
            return Err(VmfpError::Shape {
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            perp,
            vel,
            data,
            t: 0.0,
        })
    }

    /// Builds `f(x, v) = n(x) g(v)` from a density and a velocity profile
    /// sampled on the velocity grid (length `nv^3`).
    pub fn product(n: &ScalarField, vel: VelGrid, profile: &[f64]) -> Self {
        let nv3 = vel.len();
        let mut data = Vec::with_capacity(n.data.len() * nv3);
        for &nx in &n.data {
            data.extend(profile.iter().map(|p| nx * p));
        }
        Self {
            perp: n.grid,
            vel,
            data,
            t: 0.0,
        }
    }

    pub fn index(&self, ix: usize, a: usize, b: usize, c: usize) -> usize {
        let nv = self.vel.nv;
        ix * nv * nv * nv + (a * nv + b) * nv + c
    }

    pub fn node(&self, ix: usize) -> &[f64] {
        let nv3 = self.vel.len();
        &self.data[ix * nv3..(ix + 1) * nv3]
    }

    pub fn node_mut(&mut self, ix: usize) -> &mut [f64] {
        let nv3 = self.vel.len();
        &mut self.data[ix * nv3..(ix + 1) * nv3]
    }

    pub fn phase_volume(&self) -> f64 {
        self.perp.cell_area() * self.vel.cell_volume()
    }

    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.phase_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn l1_distance(&self, other: &DistributionField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.phase_volume()
    }

    pub fn check_same(&self, other: &DistributionField) -> Result<()> {
        self.perp.check_same(&other.perp)?;
        if self.vel != other.vel {
            return Err(VmfpError::GridMismatch("velocity grids differ".into()));
        }
        Ok(())
    }
}
