//! A quick invariant suite on small grids, run by the `check` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{csiszar_kullback_check, modulated_energy};
use crate::error::Result;
use crate::fieldsolve::{div_b, gauss_residual};
use crate::kinetic::KineticStepper;
use crate::limit::flux_equivalence_residual;
use crate::moments::{current, density};

use super::config::{InitialKind, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn small(base: &ScenarioConfig) -> ScenarioConfig {
    let mut c = base.clone();
    c.grid.n1 = 16;
    c.grid.n2 = 16;
    c.grid.nv = 8;
    c.grid.vmax = None;
    c
}

fn stepper(c: &ScenarioConfig) -> Result<KineticStepper> {
    let init = c.initial_data()?;
    KineticStepper::new(c.params, c.solver.clone(), init.f, init.em, init.b_ext, init.background)
}

/// Runs every check; `seed` drives the randomized ones.
pub fn run_checks(base: &ScenarioConfig, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Csiszár–Kullback on random pairs
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.gen_range(4..256);
        let g: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0).collect();
        let g0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let r = csiszar_kullback_check(&g, &g0, 1.0 / n as f64);
        worst = worst.min(r.bound - r.l1);
    }
    out.push(outcome("csiszar-kullback", worst >= 0.0, format!("min(rhs - lhs) = {worst:.3e}")));

    // conservation over a few Strang steps
    let mut c = small(base);
    c.solver.monotone = true;
    let mut s = stepper(&c)?;
    let m0 = s.f.total_mass();
    let dt = 1e-3;
    let mut gauss: f64 = 0.0;
    for _ in 0..5 {
        s.strang_step(dt)?;
        gauss = gauss.max(gauss_residual(&s.em.e, &s.charge(), &s.params));
    }
    let drift = ((s.f.total_mass() - m0) / m0).abs();
    let ok = drift < 1e-9 && s.f.min_value() >= 0.0 && div_b(&s.em.b) < 1e-10 && gauss < 1e-8;
    out.push(outcome(
        "conservation",
        ok,
        format!(
            "mass drift {drift:.2e}, min f {:.2e}, div B {:.2e}, Gauss {gauss:.2e}",
            s.f.min_value(),
            div_b(&s.em.b)
        ),
    ));

    // global equilibrium is a fixed point
    let mut c = small(base);
    c.initial.kind = InitialKind::Equilibrium;
    let mut s = stepper(&c)?;
    let f0 = s.f.clone();
    for _ in 0..5 {
        s.strang_step(1e-2)?;
    }
    let d = s.f.l1_distance(&f0);
    out.push(outcome("equilibrium", d < 1e-10, format!("L1 distance {d:.2e}")));

    // relaxation of the mean velocity
    let mut c = small(base);
    c.grid.nv = 16;
    c.initial.kind = InitialKind::Shifted;
    c.initial.drift = [0.3, -0.2, 0.1];
    let mut s = stepper(&c)?;
    let u0 = current(&s.f).c[0][0] / density(&s.f).data[0];
    let t = 0.05;
    s.step_collision(t);
    let u1 = current(&s.f).c[0][0] / density(&s.f).data[0];
    let want = u0 * (-t * c.params.collision_rate()).exp();
    let rel = ((u1 - want) / want).abs();
    out.push(outcome("collision-decay", rel < 1e-3, format!("relative error {rel:.2e}")));

    // the limit model conserves mass
    let c = small(base);
    let mut lim = c.limit_solver()?;
    let m0 = lim.state.n.integral();
    for _ in 0..10 {
        lim.limit_step(1e-3)?;
    }
    let drift = ((lim.state.n.integral() - m0) / m0).abs();
    out.push(outcome("limit-mass", drift < 1e-12, format!("relative drift {drift:.2e}")));

    // the two flux forms agree on smooth data
    let mut c = base.clone();
    c.grid.n1 = 64;
    c.grid.n2 = 64;
    let lim = c.limit_solver()?;
    let r = flux_equivalence_residual(&lim.state.n, &lim.e()?, &lim.b_ext, &c.params);
    out.push(outcome("flux-equivalence", r < 1e-6, format!("relative residual {r:.2e}")));

    // the modulated energy vanishes on identical states
    let b1 = lim.b1()?;
    let e = lim.e()?;
    let mut em = crate::fieldsolve::EmState::zeros(e.grid);
    em.e = e.clone();
    em.b.c[2] = b1.scale(c.params.eps).data;
    let me = modulated_energy(&lim.state.n, &em, &lim.state.n, &e, &b1, &c.params)?;
    out.push(outcome("modulated-energy-zero", me.abs() < 1e-14, format!("value {me:.2e}")));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let r = run_checks(&ScenarioConfig::default(), 3).unwrap();
        for o in &r {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }
}
