//! Energies, entropies and residuals used to monitor the kinetic run and to
//! compare it with the drift limit.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VmfpError};
use crate::fieldsolve::EmState;
use crate::grid::{DistributionField, ScalarField, VectorField};
use crate::kinetic::CollisionOp;
use crate::maxwellian::GridMaxwellian;
pub use crate::moments::kinetic_energy;
use crate::moments::{density, Moments};
use crate::params::PlasmaParams;
use crate::spectral::Spectral;

/// One diagnostic sample. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub eps: f64,
    pub mass: f64,
    pub kinetic_energy: f64,
    pub field_energy: f64,
    pub free_energy: f64,
    pub entropy_dissipation: f64,
    pub modulated_energy: f64,
    pub kinetic_relative_entropy: f64,
    pub l1_distance: f64,
    pub gauss_residual: f64,
    pub flux_equivalence_residual: f64,
    /// Time integral of `entropy_dissipation / (eps tau)` since the start.
    pub dissipated: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "eps",
        "mass",
        "kinetic_energy",
        "field_energy",
        "free_energy",
        "entropy_dissipation",
        "modulated_energy",
        "kinetic_relative_entropy",
        "l1_distance",
        "gauss_residual",
        "flux_equivalence_residual",
        "dissipated",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.eps,
            self.mass,
            self.kinetic_energy,
            self.field_energy,
            self.free_energy,
            self.entropy_dissipation,
            self.modulated_energy,
            self.kinetic_relative_entropy,
            self.l1_distance,
            self.gauss_residual,
            self.flux_equivalence_residual,
            self.dissipated,
        ]
    }

    pub fn from_values(v: &[f64]) -> Option<Self> {
        if v.len() != 13 {
            return None;
        }
        Some(Self {
            t: v[0],
            eps: v[1],
            mass: v[2],
            kinetic_energy: v[3],
            field_energy: v[4],
            free_energy: v[5],
            entropy_dissipation: v[6],
            modulated_energy: v[7],
            kinetic_relative_entropy: v[8],
            l1_distance: v[9],
            gauss_residual: v[10],
            flux_equivalence_residual: v[11],
            dissipated: v[12],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|x| x.is_finite())
    }
}

/// Floor applied inside logarithms.
pub const LOG_FLOOR: f64 = 1e-30;

/// `h(s) = s ln s - s + 1`, with `h(0) = 1`.
pub fn h(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else {
        h1p(s - 1.0)
    }
}

/// `h(1 + u)`. Near `u = 0` the closed form loses everything to
/// cancellation, so a series is summed there instead.
fn h1p(u: f64) -> f64 {
    if u.abs() >= 0.1 {
        let s = 1.0 + u;
        return s * s.ln() - u;
    }
    // sum_{k>=2} (-u)^k / (k (k-1))
    let mut acc = 0.0;
    let mut pw = u * u;
    for k in 2..20 {
        acc += pw / (k * (k - 1)) as f64;
        pw *= -u;
    }
    acc
}

/// `b h(a / b)` for `b > 0`, accurate when `a` and `b` nearly agree.
pub fn relative_h(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        b
    } else {
        b * h1p((a - b) / b)
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.max(LOG_FLOOR).ln()
    } else {
        0.0
    }
}

/// `σ ∫∫ f ln f + ∫∫ |v|^2/2 f + field energy`.
pub fn free_energy(f: &DistributionField, em: &EmState, p: &PlasmaParams) -> f64 {
    let ent: f64 = f.data.iter().map(|&x| xlogx(x)).sum::<f64>() * f.phase_volume();
    p.sigma * ent + kinetic_energy(f) + em.energy(p)
}

/// `∫∫ |σ ∇_v f + v f|^2 / f`, discretized consistently with the collision
/// operator so that the free energy decays at exactly this rate times
/// `1/(eps tau)` under the collision step.
pub fn entropy_dissipation(f: &DistributionField, op: &CollisionOp) -> f64 {
    f.data
        .chunks_exact(f.vel.len())
        .map(|node| op.dissipation_node(node))
        .sum::<f64>()
        * f.perp.cell_area()
}

/// `σ ∫ n h(n_eps/n) + eps0/(2m) ∫ |E_eps - E|^2 + 1/(2 mu0 m) ∫ |B_eps - eps b1 e3|^2`.
#[allow(clippy::too_many_arguments)]
pub fn modulated_energy(
    n_eps: &ScalarField,
    em: &EmState,
    n: &ScalarField,
    e: &VectorField,
    b1: &ScalarField,
    p: &PlasmaParams,
) -> Result<f64> {
    if let Some((node, &value)) = n.data.iter().enumerate().find(|(_, &x)| !(x > LOG_FLOOR)) {
        return Err(VmfpError::Positivity { node, value });
    }
    let area = n.grid.cell_area();
    let ent: f64 = n_eps
        .data
        .iter()
        .zip(&n.data)
        .map(|(&a, &b)| relative_h(a, b))
        .sum::<f64>()
        * area;
    let de = em.e.lin(1.0, e, -1.0).norm2_integral();
    let mut db = em.b.clone();
    for (x, y) in db.c[2].iter_mut().zip(&b1.data) {
        *x -= p.eps * y;
    }
    Ok(p.sigma * ent + p.eps0 / (2.0 * p.m) * de + 1.0 / (2.0 * p.mu0 * p.m) * db.norm2_integral())
}

/// `σ ∫∫ n_eps M h(f / (n_eps M))` with `M` the grid Maxwellian.
pub fn kinetic_relative_entropy(f: &DistributionField, p: &PlasmaParams) -> f64 {
    let m = GridMaxwellian::new(f.vel, p.sigma).full();
    let n = density(f);
    let mut tot = 0.0;
    for (ix, node) in f.data.chunks_exact(f.vel.len()).enumerate() {
        let nx = n.data[ix];
        for (x, mv) in node.iter().zip(&m) {
            let r = nx * mv;
            if r > 0.0 {
                tot += relative_h(*x, r);
            }
        }
    }
    p.sigma * tot * f.phase_volume()
}

/// `∫∫ |f - n M|` with `n` the limit density.
pub fn l1_distance_to_limit(f: &DistributionField, n: &ScalarField, p: &PlasmaParams) -> f64 {
    let m = GridMaxwellian::new(f.vel, p.sigma).full();
    let mut tot = 0.0;
    for (ix, node) in f.data.chunks_exact(f.vel.len()).enumerate() {
        let nx = n.data[ix];
        tot += node.iter().zip(&m).map(|(x, mv)| (x - nx * mv).abs()).sum::<f64>();
    }
    tot * f.phase_volume()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkCheck {
    pub l1: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `‖g - g0‖_1 <= 2 max(√∫g0, √∫g) √(∫ g0 h(g/g0))` for non-negative
/// samples with positive `g0`.
pub fn csiszar_kullback_check(g: &[f64], g0: &[f64], cell: f64) -> CkCheck {
    let l1: f64 = g.iter().zip(g0).map(|(a, b)| (a - b).abs()).sum::<f64>() * cell;
    let m: f64 = g.iter().sum::<f64>() * cell;
    let m0: f64 = g0.iter().sum::<f64>() * cell;
    let ent: f64 = g
        .iter()
        .zip(g0)
        .map(|(&a, &b)| if b > 0.0 { relative_h(a, b) } else { 0.0 })
        .sum::<f64>()
        * cell;
    let bound = 2.0 * m.max(m0).sqrt() * ent.max(0.0).sqrt();
    CkCheck {
        l1,
        bound,
        holds: l1 <= bound * (1.0 + 1e-12) + 1e-15,
    }
}

/// Checks `eps (K + W)(t) <= eps U0 + (3σ/τ) t M0` on every record and
/// returns the smallest margin.
pub fn kinetic_energy_bound_check(records: &[DiagnosticsRecord], p: &PlasmaParams, m0: f64, u0: f64) -> (bool, f64) {
    let mut worst = f64::INFINITY;
    for r in records {
        let lhs = p.eps * (r.kinetic_energy + r.field_energy);
        let rhs = p.eps * u0 + 3.0 * p.sigma / p.tau * r.t * m0;
        worst = worst.min(rhs - lhs);
    }
    (worst >= 0.0, worst)
}

/// Velocity moments at one time, as needed for the momentum balance.
#[derive(Debug, Clone)]
pub struct MomentSnapshot {
    pub t: f64,
    pub m: Moments,
}

#[derive(Debug, Clone)]
pub struct MomentResidual {
    /// `div_x ∫(σ∇_v f + v f) ⊗ v + eps ∂t j + j/τ`.
    pub f_eps: VectorField,
    /// Residual of the full local momentum law; vanishes for exact
    /// solutions.
    pub momentum: VectorField,
}

/// Evaluates the moment defects at the middle of the last three snapshots
/// of `history`, using the centered time difference of the current.
/// `em` is the field at that middle time.
pub fn moment_residual(
    history: &[MomentSnapshot],
    em: &EmState,
    b_ext: &ScalarField,
    p: &PlasmaParams,
) -> Result<MomentResidual> {
    let k = history.len();
    if k < 3 {
        return Err(VmfpError::State(format!(
            "moment residual needs three time levels, got {k}"
        )));
    }
    let (prev, now, next) = (&history[k - 3], &history[k - 2], &history[k - 1]);
    let g = now.m.n.grid;
    let sp = Spectral::get(g);
    let dt = next.t - prev.t;
    let mut f_eps = VectorField::zeros(g);
    let grad_n = sp.grad(&now.m.n);
    for b in 0..3 {
        // Σ_a ∂_a S_ab over the two in-plane directions
        let s1 = ScalarField {
            grid: g,
            data: (0..g.len()).map(|i| now.m.stress(0, b, i)).collect(),
        };
        let s2 = ScalarField {
            grid: g,
            data: (0..g.len()).map(|i| now.m.stress(1, b, i)).collect(),
        };
        let d1 = sp.d1(&s1);
        let d2 = sp.d2(&s2);
        for i in 0..g.len() {
            let dtj = if dt > 0.0 {
                (next.m.j.c[b][i] - prev.m.j.c[b][i]) / dt
            } else {
                0.0
            };
            f_eps.c[b][i] = d1.data[i] + d2.data[i] - p.sigma * grad_n.c[b][i]
                + p.eps * dtj
                + now.m.j.c[b][i] / p.tau;
        }
    }
    let mut momentum = f_eps.clone();
    let qm = p.q / p.m;
    for i in 0..g.len() {
        let j = now.m.j.at(i);
        let e = em.e.at(i);
        let bb = em.b.at(i);
        let jxb = [j[1] * bb[2] - j[2] * bb[1], j[2] * bb[0] - j[0] * bb[2], j[0] * bb[1] - j[1] * bb[0]];
        let jxe = [j[1], -j[0], 0.0];
        let n = now.m.n.data[i];
        let be = b_ext.data[i] / p.eps;
        for b in 0..3 {
            momentum.c[b][i] += p.sigma * grad_n.c[b][i] - qm * (n * e[b] + jxb[b] + be * jxe[b]);
        }
    }
    Ok(MomentResidual { f_eps, momentum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{PerpGrid, VelGrid};
    use crate::kinetic::CollisionWeights;
    use crate::moments::moments;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn h_accurate_near_one() {
        // Oracle: the first three Taylor terms; the fourth is below 1e-30.
        for u in [1e-8f64, -3e-7, 2e-6] {
            let u = (1.0 + u) - 1.0;
            let t = u * u / 2.0 - u.powi(3) / 6.0 + u.powi(4) / 12.0;
            assert!((h(1.0 + u) - t).abs() <= 1e-15 * t, "{u}");
            assert!((relative_h(2.0 * (1.0 + u), 2.0) - 2.0 * t).abs() <= 1e-15 * t);
        }
        for s in [0.9, 0.9000001, 1.0999999, 1.1] {
            let closed = s * f64::ln(s) - s + 1.0;
            assert!((h(s) - closed).abs() < 1e-15, "{s}");
        }
        assert!(relative_h(1.0 + 1e-16, 1.0) >= 0.0);
    }

    #[test]
    fn csiszar_kullback_resolves_near_equal_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g0: Vec<f64> = (0..1024).map(|_| 0.5 + rng.gen::<f64>()).collect();
        let g: Vec<f64> = g0.iter().map(|&x| x * (1.0 + 1e-14 * (rng.gen::<f64>() - 0.5))).collect();
        let r = csiszar_kullback_check(&g, &g0, 1.0 / 1024.0);
        assert!(r.l1 > 0.0);
        assert!(r.l1 <= r.bound, "{} > {}", r.l1, r.bound);
    }

    #[test]
    fn h_values() {
        assert_eq!(h(1.0), 0.0);
        assert_eq!(h(0.0), 1.0);
        assert!((h(2.0) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn free_energy_of_unit_maxwellian() {
        // ∫ M ln M + ∫ |v|^2/2 M = -(3/2) ln(2π) for σ = 1 on a unit-area torus
        let p = PlasmaParams::default();
        let g = PerpGrid::square(4, 1.0).unwrap();
        let v = VelGrid::new(48, 9.0).unwrap();
        let m = GridMaxwellian::new(v, 1.0).full();
        let f = DistributionField::product(&ScalarField::constant(g, 1.0), v, &m);
        let fe = free_energy(&f, &EmState::zeros(g), &p);
        assert!((fe + 1.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-10, "{fe}");
    }

    #[test]
    fn dissipation_of_local_maxwellian_vanishes() {
        let g = PerpGrid::square(8, 1.0).unwrap();
        let v = VelGrid::new(16, 6.0).unwrap();
        let n = g.sample(|x, y| 1.0 + 0.5 * (6.28 * x).sin() * (6.28 * y).cos());
        let f = DistributionField::product(&n, v, &GridMaxwellian::new(v, 1.0).full());
        let op = CollisionOp::new(v, 1.0, CollisionWeights::MomentExact);
        assert!(entropy_dissipation(&f, &op).abs() < 1e-8);
        assert!(kinetic_relative_entropy(&f, &PlasmaParams::default()).abs() < 1e-12);
    }

    #[test]
    fn modulated_energy_zero_for_identical_states() {
        let g = PerpGrid::square(8, 1.0).unwrap();
        let p = PlasmaParams { eps: 0.3, ..Default::default() };
        let n = g.sample(|x, _| 1.0 + 0.3 * (6.28 * x).cos());
        let mut em = EmState::zeros(g);
        em.e.c[0] = g.sample(|x, y| x * y).data;
        let b1 = g.sample(|x, _| (6.28 * x).sin());
        em.b.c[2] = b1.scale(0.3).data;
        assert!(modulated_energy(&n, &em, &n, &em.e.clone(), &b1, &p).unwrap().abs() < 1e-15);
        // n_eps = c n with equal fields: σ h(c) ∫ n
        let c = 1.3;
        let me = modulated_energy(&n.scale(c), &em, &n, &em.e.clone(), &b1, &p).unwrap();
        assert!((me - h(c) * n.integral()).abs() < 1e-13);
        let bad = n.map(|x| x - 2.0);
        assert!(matches!(
            modulated_energy(&n, &em, &bad, &em.e.clone(), &b1, &p),
            Err(VmfpError::Positivity { .. })
        ));
    }

    #[test]
    fn shifted_maxwellian_entropy_and_dissipation() {
        let g = PerpGrid::square(4, 1.0).unwrap();
        let v = VelGrid::new(48, 9.0).unwrap();
        let p = PlasmaParams::default();
        let u = [0.05, -0.03, 0.02];
        let u2 = u.iter().map(|x| x * x).sum::<f64>();
        let gm = GridMaxwellian::new(v, 1.0);
        let f = DistributionField::product(&ScalarField::constant(g, 2.0), v, &gm.shifted(u));
        let mass = f.total_mass();
        let kre = kinetic_relative_entropy(&f, &p);
        assert!((kre - 0.5 * mass * u2).abs() < 2e-2 * 0.5 * mass * u2, "{kre}");
        let op = CollisionOp::new(v, 1.0, CollisionWeights::MomentExact);
        let d = entropy_dissipation(&f, &op);
        assert!((d - mass * u2).abs() < 2e-2 * mass * u2, "{d} vs {}", mass * u2);
    }

    #[test]
    fn ck_examples() {
        let g0 = vec![0.5, 0.5];
        let r = csiszar_kullback_check(&g0, &g0, 1.0);
        assert_eq!(r.l1, 0.0);
        assert!(r.holds);
        let r = csiszar_kullback_check(&[1.0, 0.0], &g0, 1.0);
        assert!(r.holds && r.l1 > 0.0);
    }

    #[test]
    fn ck_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..64);
            let g: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let g0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
            assert!(csiszar_kullback_check(&g, &g0, 0.1).holds);
        }
    }

    proptest! {
        #[test]
        fn ck_holds(g in prop::collection::vec(0.0f64..5.0, 1..50), scale in 0.01f64..3.0) {
            let g0: Vec<f64> = g.iter().enumerate().map(|(i, x)| 0.1 + (x * 1.7 + i as f64).sin().abs()).collect();
            prop_assert!(csiszar_kullback_check(&g, &g0, scale).holds);
        }
    }

    fn history(f: &DistributionField) -> Vec<MomentSnapshot> {
        let m = moments(f);
        [-0.1, 0.0, 0.1].iter().map(|&t| MomentSnapshot { t, m: m.clone() }).collect()
    }

    #[test]
    fn moment_residual_needs_history() {
        let g = PerpGrid::square(4, 1.0).unwrap();
        let v = VelGrid::new(8, 6.0).unwrap();
        let f = DistributionField::product(&ScalarField::constant(g, 1.0), v, &GridMaxwellian::new(v, 1.0).full());
        let h = history(&f);
        let r = moment_residual(&h[..2], &EmState::zeros(g), &ScalarField::constant(g, 1.0), &PlasmaParams::default());
        assert!(matches!(r, Err(VmfpError::State(_))));
    }

    #[test]
    fn moment_defect_examples() {
        let g = PerpGrid::square(8, 2.0).unwrap();
        let v = VelGrid::new(24, 8.0).unwrap();
        let p = PlasmaParams { tau: 0.5, ..Default::default() };
        let gm = GridMaxwellian::new(v, 1.0);
        // global equilibrium
        let f = DistributionField::product(&ScalarField::constant(g, 1.3), v, &gm.full());
        let hist = history(&f);
        let r = moment_residual(&hist, &EmState::zeros(g), &ScalarField::constant(g, 1.0), &p).unwrap();
        assert!(r.f_eps.l2_norm() < 1e-8);
        // drifting Maxwellian: F = j / τ
        let u = [0.3, -0.1, 0.0];
        let f = DistributionField::product(&ScalarField::constant(g, 1.0), v, &gm.shifted(u));
        let hist = history(&f);
        let r = moment_residual(&hist, &EmState::zeros(g), &ScalarField::constant(g, 1.0), &p).unwrap();
        for i in 0..g.len() {
            assert!((r.f_eps.c[0][i] - 0.3 / 0.5).abs() < 1e-8);
            assert!((r.f_eps.c[1][i] + 0.1 / 0.5).abs() < 1e-8);
        }
    }
}
