//! Time stepping of the coupled kinetic/field system.

use serde::{Deserialize, Serialize};

use super::collision::{CollisionOp, CollisionTime, CollisionWeights};
use super::mollify::Mollifier;
use super::transport::transport;
use super::velocity::{Scratch, VelocityOps};
use crate::error::{Result, VmfpError};
use crate::fieldsolve::{gauss_project, maxwell_step, EmState, MaxwellMode};
use crate::grid::{DistributionField, ScalarField, VectorField};
use crate::moments::{current, density};
use crate::params::PlasmaParams;
use crate::spectral::Spectral;

/// Numerical options of the kinetic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    /// Positivity-preserving interpolation (limited flux form in space,
    /// clipped cubic in velocity).
    pub monotone: bool,
    pub maxwell: MaxwellMode,
    pub c_safety: f64,
    pub collision_weights: CollisionWeights,
    pub collision_time: CollisionTime,
    /// Evaluate the entropy dissipation around every collision step and
    /// accumulate its time integral.
    pub track_dissipation: bool,
    /// Kick with a half-step field prediction instead of the field at the
    /// start of the step.
    pub field_predictor: bool,
    /// Apply the Gauss-law projection after each Strang step.
    pub project: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            monotone: false,
            maxwell: MaxwellMode::SemiImplicit,
            c_safety: 0.9,
            collision_weights: CollisionWeights::MomentExact,
            collision_time: CollisionTime::Exponential,
            track_dissipation: false,
            field_predictor: true,
            project: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PicardReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Kinetic state plus the operators needed to advance it.
pub struct KineticStepper {
    pub params: PlasmaParams,
    pub cfg: StepperConfig,
    pub b_ext: ScalarField,
    pub background: ScalarField,
    pub f: DistributionField,
    pub em: EmState,
    /// `∫ rate · D dt` accumulated over collision steps (when tracked).
    pub dissipated: f64,
    /// Kinetic energy exchanged with the collision steps.
    pub collision_energy: f64,
    vops: VelocityOps,
    coll: CollisionOp,
    props: Vec<(u64, Vec<f64>)>,
    scratch: Scratch,
    buf: Vec<f64>,
}

impl KineticStepper {
    pub fn new(
        params: PlasmaParams,
        cfg: StepperConfig,
        f: DistributionField,
        em: EmState,
        b_ext: ScalarField,
        background: ScalarField,
    ) -> Result<Self> {
        params.validate()?;
        f.perp.validate()?;
        f.vel.validate()?;
        f.perp.check_same(&em.e.grid)?;
        f.perp.check_same(&b_ext.grid)?;
        f.perp.check_same(&background.grid)?;
        if b_ext.min() <= 0.0 {
            return Err(VmfpError::Parameter("external field must be positive".into()));
        }
        if !(cfg.c_safety > 0.0) {
            return Err(VmfpError::Parameter("c_safety must be positive".into()));
        }
        let vops = VelocityOps::new(f.vel, params.sigma, cfg.monotone);
        let coll = CollisionOp::new(f.vel, params.sigma, cfg.collision_weights);
        let scratch = Scratch::new(f.vel);
        Ok(Self {
            params,
            cfg,
            b_ext,
            background,
            f,
            em,
            dissipated: 0.0,
            collision_energy: 0.0,
            vops,
            coll,
            props: Vec::new(),
            scratch,
            buf: Vec::new(),
        })
    }

    pub fn t(&self) -> f64 {
        self.f.t
    }

    pub fn collision_op(&self) -> &CollisionOp {
        &self.coll
    }

    pub fn charge(&self) -> ScalarField {
        let n = density(&self.f);
        n.zip(&self.background, |a, b| self.params.q * (a - b))
    }

    /// Larmor gyration about the external field over `dt`.
    pub fn step_larmor(&mut self, dt: f64) {
        let p = self.params;
        let nv3 = self.f.vel.len();
        for ix in 0..self.f.perp.len() {
            let angle = p.cyclotron(self.b_ext.data[ix]) * dt / (p.eps * p.eps);
            let node = &mut self.f.data[ix * nv3..(ix + 1) * nv3];
            self.vops.larmor_node(node, angle, &mut self.scratch);
        }
    }

    pub fn step_transport(&mut self, dt: f64) {
        transport(&mut self.f, dt, self.params.eps, self.cfg.monotone, &mut self.buf);
    }

    /// Electric kick / magnetic rotation / electric kick with the given
    /// fields. Returns the current averaged over the two kicks, i.e. the
    /// current that performs the work of the substep.
    pub fn step_acceleration(&mut self, dt: f64, e: &VectorField, b: &VectorField) -> VectorField {
        let p = self.params;
        let nv3 = self.f.vel.len();
        let ke = p.q / p.m * dt / (2.0 * p.eps);
        let kb = p.q / p.m * dt / p.eps;
        let mut j = VectorField::zeros(self.f.perp);
        for ix in 0..self.f.perp.len() {
            let node = &mut self.f.data[ix * nv3..(ix + 1) * nv3];
            let ev = e.at(ix);
            let bv = b.at(ix);
            let delta = [ke * ev[0], ke * ev[1], ke * ev[2]];
            let j1 = self.vops.kick_node(node, delta, &mut self.scratch);
            self.vops
                .rotate_node(node, [kb * bv[0], kb * bv[1], kb * bv[2]], &mut self.scratch);
            let j2 = self.vops.kick_node(node, delta, &mut self.scratch);
            for k in 0..3 {
                j.c[k][ix] = 0.5 * (j1[k] + j2[k]);
            }
        }
        j
    }

    fn propagator(&mut self, s: f64) -> Vec<f64> {
        let key = s.to_bits();
        if let Some((_, p)) = self.props.iter().find(|(k, _)| *k == key) {
            return p.clone();
        }
        let p = self.coll.propagator(s, self.cfg.collision_time);
        if self.props.len() > 8 {
            self.props.remove(0);
        }
        self.props.push((key, p.clone()));
        p
    }

    /// Linear Fokker–Planck relaxation over `dt`.
    pub fn step_collision(&mut self, dt: f64) {
        let rate = self.params.collision_rate();
        let prop = self.propagator(rate * dt);
        let nv3 = self.f.vel.len();
        let area = self.f.perp.cell_area();
        let track = self.cfg.track_dissipation;
        let (mut d0, mut d1, mut dk) = (0.0, 0.0, 0.0);
        for ix in 0..self.f.perp.len() {
            let node = &mut self.f.data[ix * nv3..(ix + 1) * nv3];
            let k0 = self.vops.node_energy(node);
            if track {
                d0 += self.coll.dissipation_node(node);
            }
            self.coll.apply_node(&prop, node, &mut self.scratch.a);
            dk += self.vops.node_energy(node) - k0;
            if track {
                d1 += self.coll.dissipation_node(node);
            }
        }
        self.collision_energy += dk * area;
        if track {
            self.dissipated += 0.5 * (d0 + d1) * area * rate * dt;
        }
    }

    /// Field at the half step predicted from Ampère and Faraday with the
    /// current at the start of the step.
    fn predict_half(&self, dt: f64) -> EmState {
        if !self.cfg.field_predictor {
            return self.em.clone();
        }
        let p = self.params;
        let sp = Spectral::get(self.f.perp);
        let j = current(&self.f);
        let cb = sp.curl(&self.em.b);
        let ce = sp.curl(&self.em.e);
        let c1 = 1.0 / (p.mu0 * p.eps0 * p.eps);
        let s = p.q / (p.eps0 * p.eps);
        let mut e = self.em.e.clone();
        e.axpy(0.5 * dt * c1, &cb);
        e.axpy(-0.5 * dt * s, &j);
        let mut b = self.em.b.clone();
        b.axpy(-0.5 * dt / p.eps, &ce);
        EmState { e, b }
    }

    /// The kinetic part of one step with frozen acceleration fields.
    /// Returns the work-weighted current of the step.
    fn kinetic_substeps(&mut self, dt: f64, e: &VectorField, b: &VectorField) -> VectorField {
        let h = 0.5 * dt;
        self.step_larmor(h);
        self.step_transport(h);
        let j1 = self.step_acceleration(h, e, b);
        self.step_collision(dt);
        let j2 = self.step_acceleration(h, e, b);
        self.step_transport(h);
        self.step_larmor(h);
        j1.lin(0.5, &j2, 0.5)
    }

    /// One Strang step `L T A C A T L`, followed by the field update with
    /// the time-centered current and the Gauss-law projection.
    pub fn strang_step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(VmfpError::Parameter(format!("dt must be positive, got {dt}")));
        }
        let half = self.predict_half(dt);
        let j = self.kinetic_substeps(dt, &half.e, &half.b);
        let mut em = maxwell_step(&self.em, &j, &self.params, dt, self.cfg.maxwell, self.cfg.c_safety)?;
        if self.cfg.project {
            em.e = gauss_project(&em.e, &self.charge(), &self.params)?;
        }
        self.em = em;
        self.f.t += dt;
        self.check_finite()
    }

    /// One step of the regularized fixed-point scheme: the kinetic equation
    /// is advanced with mollified, frozen fields, Maxwell's equations with
    /// the mollified current, and the two are iterated to convergence.
    /// No projection is applied.
    pub fn picard_cycle(
        &mut self,
        dt: f64,
        mollifier: &Mollifier,
        tol: f64,
        max_iter: usize,
    ) -> Result<PicardReport> {
        if !(dt > 0.0) {
            return Err(VmfpError::Parameter("dt must be positive".into()));
        }
        let f0 = self.f.clone();
        let em0 = self.em.clone();
        let (dis0, ce0) = (self.dissipated, self.collision_energy);
        let mut next = em0.clone();
        let mut prev: Option<Vec<f64>> = None;
        let mut report = PicardReport::default();
        for it in 0..max_iter {
            self.f = f0.clone();
            self.dissipated = dis0;
            self.collision_energy = ce0;
            let e_mid = mollifier.apply_vec(&em0.e.lin(0.5, &next.e, 0.5));
            let b_mid = mollifier.apply_vec(&em0.b.lin(0.5, &next.b, 0.5));
            let j = self.kinetic_substeps(dt, &e_mid, &b_mid);
            let j = mollifier.apply_vec(&j);
            next = maxwell_step(&em0, &j, &self.params, dt, self.cfg.maxwell, self.cfg.c_safety)?;
            let res = match &prev {
                None => f64::INFINITY,
                Some(p) => {
                    let num: f64 = p.iter().zip(&self.f.data).map(|(a, b)| (a - b) * (a - b)).sum();
                    let den: f64 = p.iter().map(|a| a * a).sum();
                    (num / den.max(1e-300)).sqrt()
                }
            };
            report.residuals.push(res);
            report.iterations = it + 1;
            if res < tol {
                self.em = next;
                self.f.t = f0.t + dt;
                self.check_finite()?;
                return Ok(report);
            }
            prev = Some(self.f.data.clone());
        }
        let last = *report.residuals.last().unwrap_or(&f64::INFINITY);
        self.f = f0;
        self.em = em0;
        self.dissipated = dis0;
        self.collision_energy = ce0;
        Err(VmfpError::Iteration {
            iterations: max_iter,
            residual: last,
            history: report.residuals,
        })
    }

    fn check_finite(&self) -> Result<()> {
        if !self.em.e.is_finite() || !self.em.b.is_finite() {
            return Err(VmfpError::Consistency("non-finite field".into()));
        }
        if let Some(i) = self.f.data.iter().position(|x| !x.is_finite()) {
            return Err(VmfpError::Consistency(format!("non-finite distribution at {i}")));
        }
        Ok(())
    }
}
