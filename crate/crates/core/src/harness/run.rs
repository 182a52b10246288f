//! Scenario execution: the limit reference trajectory, kinetic runs
//! sampled against it, and the epsilon sweep.

use std::fs;
use std::path::Path;

use crate::diagnostics::{
    entropy_dissipation, free_energy, kinetic_energy, kinetic_energy_bound_check, kinetic_relative_entropy,
    l1_distance_to_limit, modulated_energy, moment_residual, DiagnosticsRecord, MomentSnapshot,
};
use crate::error::{Result, VmfpError};
use crate::fieldsolve::gauss_residual;
use crate::grid::{ScalarField, VectorField};
use crate::kinetic::{KineticStepper, Mollifier};
use crate::limit::{flux_equivalence_residual, LimitSolver};
use crate::moments::{density, moments};

use super::config::{ScenarioConfig, StepMode};
use super::io::{
    write_checkpoint, write_limit_records, write_records, write_sections, Checkpoint, KineticCheckpoint,
    LimitCheckpoint, LimitRecord, SweepEntry, SweepManifest,
};

/// Step indices and times at which diagnostics are taken. The first is
/// always the initial state and the last the final one.
pub fn sample_schedule(cfg: &ScenarioConfig) -> Vec<(usize, f64)> {
    let n = cfg.steps();
    let every = cfg.sample_every();
    let mut out: Vec<(usize, f64)> = (0..=n).step_by(every).map(|k| (k, step_time(cfg, k))).collect();
    if out.last().map(|s| s.0) != Some(n) {
        out.push((n, step_time(cfg, n)));
    }
    out
}

/// Time after `k` steps; the final step is shortened to land on `t_final`.
pub fn step_time(cfg: &ScenarioConfig, k: usize) -> f64 {
    if k >= cfg.steps() {
        cfg.time.t_final
    } else {
        k as f64 * cfg.dt()
    }
}

#[derive(Debug, Clone)]
pub struct LimitSnapshot {
    pub t: f64,
    pub n: ScalarField,
    pub e: VectorField,
    pub b1: ScalarField,
}

pub struct LimitRun {
    pub records: Vec<LimitRecord>,
    pub snapshots: Vec<LimitSnapshot>,
    pub solver: LimitSolver,
}

impl LimitRun {
    /// Writes the snapshots as one flat binary file plus a JSON index.
    pub fn write_trajectory(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut sections: Vec<(String, &[f64])> = Vec::new();
        for (k, s) in self.snapshots.iter().enumerate() {
            sections.push((format!("n/{k}"), &s.n.data));
            sections.push((format!("e1/{k}"), &s.e.c[0]));
            sections.push((format!("e2/{k}"), &s.e.c[1]));
            sections.push((format!("b1/{k}"), &s.b1.data));
        }
        let layout = write_sections(&dir.join("trajectory.bin"), &sections)?;
        let times: Vec<f64> = self.snapshots.iter().map(|s| s.t).collect();
        let index = serde_json::json!({
            "grid": self.solver.state.n.grid,
            "times": times,
            "sections": layout,
        });
        fs::write(dir.join("trajectory.json"), serde_json::to_string_pretty(&index).map_err(|e| VmfpError::Serde(e.to_string()))?)?;
        Ok(())
    }
}

fn limit_snapshot(solver: &LimitSolver) -> Result<(LimitSnapshot, LimitRecord)> {
    let st = &solver.state;
    let e = solver.e()?;
    let rec = LimitRecord {
        t: st.t,
        mass: st.n.integral(),
        free_energy: solver.free_energy()?,
        e_mean1: st.e_mean[0],
        e_mean2: st.e_mean[1],
        flux_equivalence_residual: flux_equivalence_residual(&st.n, &e, &solver.b_ext, &solver.params),
    };
    let snap = LimitSnapshot {
        t: st.t,
        n: st.n.clone(),
        b1: solver.b1()?,
        e,
    };
    Ok((snap, rec))
}

/// Runs the limit model through the kinetic sample times.
pub fn run_limit(cfg: &ScenarioConfig) -> Result<LimitRun> {
    cfg.validate()?;
    let mut solver = cfg.limit_solver()?;
    let ldt = cfg.limit_dt();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    for (_, target) in sample_schedule(cfg) {
        let span = target - solver.state.t;
        if span > 0.0 {
            let n = ((span / ldt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let t = solver.state.t;
                solver.limit_step(h).map_err(|e| e.context(format!("limit step at t = {t}")))?;
            }
            solver.state.t = target;
        }
        let (snap, rec) = limit_snapshot(&solver)?;
        snapshots.push(snap);
        records.push(rec);
    }
    Ok(LimitRun {
        records,
        snapshots,
        solver,
    })
}

pub struct KineticRun {
    pub records: Vec<DiagnosticsRecord>,
    /// `(t, ‖momentum law residual‖, ‖F^eps‖)` at interior sample times.
    pub momentum_residuals: Vec<(f64, f64, f64)>,
    /// Iterations used by each Picard step (empty in Strang mode).
    pub picard_iterations: Vec<usize>,
    pub stepper: KineticStepper,
}

impl KineticRun {
    pub fn checkpoint(&self) -> Checkpoint {
        let s = &self.stepper;
        Checkpoint::Kinetic(KineticCheckpoint {
            params: s.params,
            f: s.f.clone(),
            em: s.em.clone(),
            b_ext: s.b_ext.clone(),
            background: s.background.clone(),
            dissipated: s.dissipated,
            collision_energy: s.collision_energy,
        })
    }

    /// Worst margin of the kinetic-energy bound over the records.
    pub fn kinetic_energy_margin(&self) -> (bool, f64) {
        let r0 = &self.records[0];
        kinetic_energy_bound_check(
            &self.records,
            &self.stepper.params,
            r0.mass,
            r0.kinetic_energy + r0.field_energy,
        )
    }

    pub fn sup_modulated_energy(&self) -> f64 {
        self.records.iter().map(|r| r.modulated_energy).fold(0.0, f64::max)
    }

    pub fn sup_kinetic_relative_entropy(&self) -> f64 {
        self.records.iter().map(|r| r.kinetic_relative_entropy).fold(0.0, f64::max)
    }
}

fn record(
    s: &KineticStepper,
    snap: &LimitSnapshot,
    flux_residual: f64,
    dissipated: f64,
) -> Result<DiagnosticsRecord> {
    let p = &s.params;
    let n_eps = density(&s.f);
    Ok(DiagnosticsRecord {
        t: s.f.t,
        eps: p.eps,
        mass: s.f.total_mass(),
        kinetic_energy: kinetic_energy(&s.f),
        field_energy: s.em.energy(p),
        free_energy: free_energy(&s.f, &s.em, p),
        entropy_dissipation: entropy_dissipation(&s.f, s.collision_op()),
        modulated_energy: modulated_energy(&n_eps, &s.em, &snap.n, &snap.e, &snap.b1, p)?,
        kinetic_relative_entropy: kinetic_relative_entropy(&s.f, p),
        l1_distance: l1_distance_to_limit(&s.f, &snap.n, p),
        gauss_residual: gauss_residual(&s.em.e, &s.charge(), p),
        flux_equivalence_residual: flux_residual,
        dissipated,
    })
}

/// Runs the kinetic model at `cfg.params.eps`, sampling diagnostics
/// against `reference` (computed here when absent).
pub fn run_kinetic(cfg: &ScenarioConfig, reference: Option<&LimitRun>) -> Result<KineticRun> {
    run_kinetic_with(cfg, reference, |_, _| Ok(()))
}

/// As [`run_kinetic`], calling `observe(k, stepper)` on the state after
/// every step `k` (and on the initial state with `k = 0`).
pub fn run_kinetic_with(
    cfg: &ScenarioConfig,
    reference: Option<&LimitRun>,
    mut observe: impl FnMut(usize, &KineticStepper) -> Result<()>,
) -> Result<KineticRun> {
    cfg.validate()?;
    let own;
    let lim = match reference {
        Some(r) => r,
        None => {
            own = run_limit(cfg)?;
            &own
        }
    };
    let schedule = sample_schedule(cfg);
    if schedule.len() != lim.snapshots.len()
        || schedule
            .iter()
            .zip(&lim.snapshots)
            .any(|((_, t), s)| (t - s.t).abs() > 1e-12 * cfg.time.t_final.max(1.0))
    {
        return Err(VmfpError::Consistency(
            "limit reference was sampled at different times than this run".into(),
        ));
    }
    let init = cfg.initial_data()?;
    let mut s = KineticStepper::new(cfg.params, cfg.solver.clone(), init.f, init.em, init.b_ext, init.background)?;
    let grid = s.f.perp;
    let mollifier = match cfg.mode {
        StepMode::Picard => Some(Mollifier::new(grid, cfg.picard.mollifier)?),
        StepMode::Strang => None,
    };
    let tracked = cfg.solver.track_dissipation;
    let rate = cfg.params.collision_rate();
    let n_steps = cfg.steps();
    let flux: Vec<f64> = lim.records.iter().map(|r| r.flux_equivalence_residual).collect();

    let mut records = Vec::with_capacity(schedule.len());
    let mut picard_iterations = Vec::new();
    let mut momentum_residuals = Vec::new();
    let mut history: Vec<MomentSnapshot> = Vec::new();
    let mut prev_em = None;
    let mut interior = vec![false; n_steps + 1];
    for &(i, _) in &schedule {
        if i > 0 && i < n_steps {
            interior[i] = true;
        }
    }
    let mut sample = 0;
    let mut dissipated = 0.0;
    let mut last_d: Option<(f64, f64)> = None;

    for k in 0..=n_steps {
        observe(k, &s)?;
        let is_sample = schedule[sample].0 == k;
        // moments on three consecutive steps around each interior sample
        let near = interior[k] || interior.get(k + 1).copied().unwrap_or(false) || (k > 0 && interior[k - 1]);
        if near {
            history.push(MomentSnapshot {
                t: s.f.t,
                m: moments(&s.f),
            });
            if history.len() > 3 {
                history.remove(0);
            }
            if k > 0 && interior[k - 1] && history.len() == 3 {
                let em = prev_em.as_ref().expect("field stored at the sample");
                let r = moment_residual(&history, em, &s.b_ext, &s.params)?;
                momentum_residuals.push((history[1].t, r.momentum.l2_norm(), r.f_eps.l2_norm()));
            }
        } else {
            history.clear();
        }
        prev_em = if interior[k] { Some(s.em.clone()) } else { None };
        if is_sample {
            let rec0 = record(&s, &lim.snapshots[sample], flux[sample], 0.0)?;
            let d = rec0.entropy_dissipation;
            if tracked {
                dissipated = s.dissipated;
            } else if let Some((t0, d0)) = last_d {
                dissipated += 0.5 * (d0 + d) * rate * (rec0.t - t0);
            }
            last_d = Some((rec0.t, d));
            records.push(DiagnosticsRecord { dissipated, ..rec0 });
            sample += 1;
        }
        if k == n_steps {
            break;
        }
        let h = step_time(cfg, k + 1) - step_time(cfg, k);
        let t = s.f.t;
        match &mollifier {
            None => s.strang_step(h),
            Some(m) => s
                .picard_cycle(h, m, cfg.picard.tol, cfg.picard.max_iter)
                .map(|rep| picard_iterations.push(rep.iterations)),
        }
        .map_err(|e| e.context(format!("kinetic step {k} at t = {t} (eps = {})", cfg.params.eps)))?;
        s.f.t = step_time(cfg, k + 1);
    }
    Ok(KineticRun {
        records,
        momentum_residuals,
        picard_iterations,
        stepper: s,
    })
}

/// Writes the outputs of a kinetic run into `dir`.
pub fn write_kinetic_outputs(dir: &Path, cfg: &ScenarioConfig, run: &KineticRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_records(&dir.join("records.csv"), &run.records)?;
    write_checkpoint(dir, &run.checkpoint())?;
    fs::write(dir.join("resolved-config.toml"), cfg.to_toml())?;
    Ok(())
}

pub fn write_limit_outputs(dir: &Path, cfg: &ScenarioConfig, run: &LimitRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_limit_records(&dir.join("records.csv"), &run.records)?;
    run.write_trajectory(dir)?;
    let cp = Checkpoint::Limit(LimitCheckpoint {
        params: run.solver.params,
        state: run.solver.state.clone(),
        b_ext: run.solver.b_ext.clone(),
        background: run.solver.background.clone(),
    });
    write_checkpoint(dir, &cp)?;
    fs::write(dir.join("resolved-config.toml"), cfg.to_toml())?;
    Ok(())
}

/// Least-squares fit of `ln y = slope ln x + intercept`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// The configuration shared by every member of a sweep: one time step
/// (the smallest default over the epsilon list unless set) and one sample
/// cadence, so that all runs meet the limit reference at the same times.
pub fn sweep_base(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut base = cfg.clone();
    if base.time.dt.is_none() {
        let dt = cfg.sweep.eps.iter().map(|&e| cfg.with_eps(e).dt()).fold(f64::INFINITY, f64::min);
        base.time.dt = Some(dt);
    }
    base.time.sample_every = Some(base.sample_every());
    base
}

/// Runs the limit model once, then the kinetic model for every epsilon of
/// the sweep against it. Outputs go to `out`; the manifest is written even
/// when a run fails, flagged incomplete.
pub fn run_sweep(cfg: &ScenarioConfig, out: &Path) -> Result<SweepManifest> {
    let base = sweep_base(cfg);
    base.validate()?;
    fs::create_dir_all(out)?;
    fs::write(out.join("resolved-config.toml"), base.to_toml())?;
    let lim = run_limit(&base)?;
    write_limit_outputs(&out.join("limit"), &base, &lim)?;
    let mut manifest = SweepManifest {
        complete: false,
        t_final: base.time.t_final,
        dt: base.dt(),
        limit_records: "limit/records.csv".into(),
        limit_trajectory: "limit/trajectory.bin".into(),
        entries: Vec::new(),
        slope: None,
        intercept: None,
        error: None,
    };
    for &eps in &base.sweep.eps {
        let c = base.with_eps(eps);
        let run = match run_kinetic(&c, Some(&lim)) {
            Ok(r) => r,
            Err(e) => {
                manifest.error = Some(e.to_string());
                manifest.write(&out.join("manifest.json"))?;
                return Err(e);
            }
        };
        let name = format!("eps-{eps}");
        write_kinetic_outputs(&out.join(&name), &c, &run)?;
        let m0 = run.records[0].mass;
        let m1 = run.records.last().expect("at least one record").mass;
        manifest.entries.push(SweepEntry {
            eps,
            sup_modulated_energy: run.sup_modulated_energy(),
            sup_kinetic_relative_entropy: run.sup_kinetic_relative_entropy(),
            dissipated: run.records.last().expect("records").dissipated,
            relative_mass_drift: (m1 - m0) / m0,
            kinetic_energy_margin: run.kinetic_energy_margin().1,
            max_momentum_residual: run.momentum_residuals.iter().map(|r| r.1).reduce(f64::max),
            records: format!("{name}/records.csv"),
        });
    }
    let xs: Vec<f64> = manifest.entries.iter().map(|e| e.eps).collect();
    let ys: Vec<f64> = manifest.entries.iter().map(|e| e.sup_modulated_energy).collect();
    if let Some((s, b)) = loglog_fit(&xs, &ys) {
        manifest.slope = Some(s);
        manifest.intercept = Some(b);
    }
    manifest.complete = true;
    manifest.write(&out.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let x = [0.4, 0.2, 0.1];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(0.7)).collect();
        let (s, b) = loglog_fit(&x, &y).unwrap();
        assert!((s - 0.7).abs() < 1e-12);
        assert!((b - 3f64.ln()).abs() < 1e-12);
        assert!(loglog_fit(&[0.1], &[1.0]).is_none());
    }

    #[test]
    fn schedule_hits_final_time() {
        let mut c = ScenarioConfig::default();
        c.time.dt = Some(0.03);
        c.time.t_final = 0.1;
        c.time.sample_every = Some(2);
        let s = sample_schedule(&c);
        assert_eq!(s.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(s.last().unwrap().1, 0.1);
        c.time.t_final = 0.0;
        assert_eq!(sample_schedule(&c), vec![(0, 0.0)]);
    }
}
