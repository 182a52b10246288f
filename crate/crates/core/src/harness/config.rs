//! Scenario configuration: TOML schema, defaults, validation and the
//! construction of initial data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Result, VmfpError};
use crate::fieldsolve::{solve_poisson, EmState};
use crate::grid::{DistributionField, PerpGrid, ScalarField, VelGrid};
use crate::kinetic::StepperConfig;
use crate::limit::LimitSolver;
use crate::maxwellian::GridMaxwellian;
use crate::params::PlasmaParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    pub nv: usize,
    /// Velocity cutoff; defaults to `6 sqrt(sigma)`.
    pub vmax: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n1: 32,
            n2: 32,
            l1: 2.0 * PI,
            l2: 2.0 * PI,
            nv: 16,
            vmax: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// `f0 = n0 M`, `n0 = D (1 + a cos cos)`, E0 from Poisson, `B0 = eps b1(0)`.
    #[default]
    WellPrepared,
    /// `f0 = D M` with uniform `D`, no fields.
    Equilibrium,
    /// Uniform density with a drifting Maxwellian, no fields.
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Density perturbation `a`.
    pub density_amplitude: f64,
    /// Wavenumber of the density perturbation along both axes.
    pub perturbation_mode: u32,
    /// Background modulation `d`.
    pub background_amplitude: f64,
    /// External field magnitude `B0`.
    pub b0: f64,
    /// External field modulation `b`.
    pub b_amplitude: f64,
    /// Mean velocity of the shifted Maxwellian.
    pub drift: [f64; 3],
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::WellPrepared,
            density_amplitude: 0.2,
            perturbation_mode: 1,
            background_amplitude: 0.2,
            b0: 1.0,
            b_amplitude: 0.2,
            drift: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    #[default]
    Strang,
    Picard,
}

impl std::str::FromStr for StepMode {
    type Err = VmfpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strang" => Ok(Self::Strang),
            "picard" => Ok(Self::Picard),
            _ => Err(VmfpError::Config(format!("unknown mode '{s}' (strang|picard)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    /// Kinetic time step; defaults to `min(CFL limit, t_final / 100)`.
    pub dt: Option<f64>,
    /// Number of diagnostic samples per run (ignored when `sample_every`
    /// is set).
    pub samples: usize,
    /// Steps between diagnostic samples.
    pub sample_every: Option<usize>,
    /// Time step of the limit model; defaults to the kinetic step.
    pub limit_dt: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_final: 0.5,
            dt: None,
            samples: 100,
            sample_every: None,
            limit_dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    pub mollifier: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            mollifier: 0.0,
            tol: 1e-12,
            max_iter: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.4, 0.2, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub seed: u64,
    pub mode: StepMode,
    /// Output directory used when none is given on the command line.
    pub output: Option<std::path::PathBuf>,
    pub grid: GridConfig,
    pub params: PlasmaParams,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    pub solver: StepperConfig,
    pub picard: PicardConfig,
    pub sweep: SweepConfig,
}

/// Everything needed to start both models.
pub struct InitialData {
    pub f: DistributionField,
    pub em: EmState,
    pub b_ext: ScalarField,
    pub background: ScalarField,
    pub n0: ScalarField,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| VmfpError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| VmfpError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn vmax(&self) -> f64 {
        self.grid.vmax.unwrap_or(6.0 * self.params.sigma.sqrt())
    }

    pub fn perp_grid(&self) -> Result<PerpGrid> {
        PerpGrid::new(self.grid.n1, self.grid.n2, self.grid.l1, self.grid.l2)
    }

    pub fn vel_grid(&self) -> Result<VelGrid> {
        VelGrid::new(self.grid.nv, self.vmax())
    }

    /// Largest step for which the free-streaming shift stays below one
    /// cell and the Larmor angle below half a radian.
    pub fn cfl_dt(&self) -> f64 {
        let p = &self.params;
        let h = (self.grid.l1 / self.grid.n1 as f64).min(self.grid.l2 / self.grid.n2 as f64);
        let transport = p.eps * h / self.vmax();
        let wmax = p.cyclotron(self.initial.b0 * (1.0 + self.initial.b_amplitude.abs()));
        let larmor = 0.5 * p.eps * p.eps / wmax;
        transport.min(larmor)
    }

    pub fn dt(&self) -> f64 {
        self.time
            .dt
            .unwrap_or_else(|| self.cfl_dt().min(1e-2 * self.time.t_final.max(f64::MIN_POSITIVE)))
    }

    /// Number of steps to reach `t_final`; the last step may be shortened.
    pub fn steps(&self) -> usize {
        let n = self.time.t_final / self.dt();
        let r = n.round();
        if (n - r).abs() < 1e-9 * n.max(1.0) {
            r as usize
        } else {
            n.ceil() as usize
        }
    }

    pub fn sample_every(&self) -> usize {
        self.time
            .sample_every
            .unwrap_or_else(|| (self.steps() / self.time.samples.max(1)).max(1))
    }

    pub fn limit_dt(&self) -> f64 {
        self.time.limit_dt.unwrap_or_else(|| self.dt())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.perp_grid()?;
        self.vel_grid()?;
        let t = &self.time;
        if let Some(dt) = t.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(VmfpError::Config(format!("time.dt must be positive, got {dt}")));
            }
        }
        if !(t.t_final >= 0.0 && t.t_final.is_finite()) {
            return Err(VmfpError::Config("time.t_final must be non-negative".into()));
        }
        if t.sample_every == Some(0) || t.samples == 0 {
            return Err(VmfpError::Config("time.samples and time.sample_every must be at least 1".into()));
        }
        if let Some(ld) = t.limit_dt {
            if !(ld > 0.0) {
                return Err(VmfpError::Config("time.limit_dt must be positive".into()));
            }
        }
        let i = &self.initial;
        if !(i.b0 > 0.0) || i.b_amplitude.abs() >= 1.0 {
            return Err(VmfpError::Config("external field must stay positive (b0 > 0, |b| < 1)".into()));
        }
        if i.background_amplitude.abs() >= 1.0 || i.density_amplitude.abs() >= 1.0 {
            return Err(VmfpError::Config("density amplitudes must be below one".into()));
        }
        if self.sweep.eps.is_empty() {
            return Err(VmfpError::Config("sweep.eps must not be empty".into()));
        }
        if let Some(e) = self.sweep.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(VmfpError::Config(format!("sweep.eps entries must lie in (0, 1], got {e}")));
        }
        if self.sweep.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(VmfpError::Config(format!(
                "sweep.eps must be strictly decreasing, got {:?}",
                self.sweep.eps
            )));
        }
        if !(self.picard.tol > 0.0) || self.picard.max_iter == 0 {
            return Err(VmfpError::Config("picard.tol and picard.max_iter must be positive".into()));
        }
        if !(self.solver.c_safety > 0.0) {
            return Err(VmfpError::Config("solver.c_safety must be positive".into()));
        }
        Ok(())
    }

    /// Warnings that do not prevent a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if let Ok(v) = self.vel_grid() {
            let frac = v.boundary_mass_fraction(self.params.sigma);
            if frac > 1e-6 {
                w.push(format!(
                    "velocity cutoff {} leaves {frac:.2e} of the Maxwellian mass in the boundary layer",
                    v.vmax
                ));
            }
        }
        w
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        let mut c = self.clone();
        c.params.eps = eps;
        c
    }

    pub fn background(&self, grid: PerpGrid) -> ScalarField {
        let d = match self.initial.kind {
            InitialKind::WellPrepared => self.initial.background_amplitude,
            _ => 0.0,
        };
        let l1 = grid.l1;
        grid.sample(|x, _| 1.0 + d * (2.0 * PI * x / l1).cos())
    }

    pub fn b_ext(&self, grid: PerpGrid) -> ScalarField {
        let (b0, b) = (self.initial.b0, self.initial.b_amplitude);
        let b = match self.initial.kind {
            InitialKind::WellPrepared => b,
            _ => 0.0,
        };
        let l1 = grid.l1;
        grid.sample(|x, _| b0 * (1.0 + b * (2.0 * PI * x / l1).cos()))
    }

    /// Initial density; its discrete mean equals that of the background.
    pub fn n0(&self, grid: PerpGrid) -> ScalarField {
        let bg = self.background(grid);
        match self.initial.kind {
            InitialKind::WellPrepared => {
                let a = self.initial.density_amplitude;
                let k = self.initial.perturbation_mode as f64;
                let (l1, l2) = (grid.l1, grid.l2);
                let pert = grid.sample(|x, y| 1.0 + a * (2.0 * PI * k * x / l1).cos() * (2.0 * PI * k * y / l2).cos());
                let mut n = bg.zip(&pert, |d, p| d * p);
                let shift = bg.mean() - n.mean();
                n.data.iter_mut().for_each(|x| *x += shift);
                n
            }
            _ => bg,
        }
    }

    pub fn limit_solver(&self) -> Result<LimitSolver> {
        let g = self.perp_grid()?;
        LimitSolver::new(self.params, self.n0(g), self.b_ext(g), self.background(g))
    }

    /// Initial data of the kinetic model at `self.params.eps`.
    pub fn initial_data(&self) -> Result<InitialData> {
        self.validate()?;
        let g = self.perp_grid()?;
        let v = self.vel_grid()?;
        let bg = self.background(g);
        let b_ext = self.b_ext(g);
        let n0 = self.n0(g);
        let gm = GridMaxwellian::new(v, self.params.sigma);
        let profile = match self.initial.kind {
            InitialKind::Shifted => gm.shifted(self.initial.drift),
            _ => gm.full(),
        };
        let f = DistributionField::product(&n0, v, &profile);
        let mut em = EmState::zeros(g);
        if self.initial.kind == InitialKind::WellPrepared {
            let rho = n0.zip(&bg, |a, b| self.params.q * (a - b));
            em.e = solve_poisson(&rho, &self.params)?.e;
            let lim = self.limit_solver()?;
            em.b.c[2] = lim.b1()?.scale(self.params.eps).data;
        }
        Ok(InitialData {
            f,
            em,
            b_ext,
            background: bg,
            n0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let c = ScenarioConfig::default();
        let s = c.to_toml();
        let back = ScenarioConfig::from_toml_str(&s).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn parse_error_reports_line() {
        let err = ScenarioConfig::from_toml_str("[grid]\nn1 = 16\nn2 = \"x\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") || msg.contains("3 |"), "{msg}");
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioConfig::from_toml_str("[time]\ndt = -1.0").is_err());
        assert!(ScenarioConfig::from_toml_str("[params]\ntau = 0.0").is_err());
        assert!(ScenarioConfig::from_toml_str("[grid]\nbogus = 1").is_err());
        let e = ScenarioConfig::from_toml_str("[sweep]\neps = [0.4, 0.5]").unwrap_err();
        assert!(e.to_string().contains("decreasing"), "{e}");
        assert!(ScenarioConfig::from_toml_str("[sweep]\neps = [1.5, 0.5]").is_err());
        let e = ScenarioConfig::from_toml_str("[initial]\nkind = \"bogus-family\"").unwrap_err();
        assert!(e.to_string().contains("bogus-family"), "{e}");
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = ScenarioConfig::from_toml_str("[grid]\nn1 = 16\nn2 = 16\n[time]\nt_final = 0.2\n").unwrap();
        assert_eq!(c.grid.nv, 16);
        assert_eq!(c.params, PlasmaParams::default());
        let back = ScenarioConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!((c.dt() - c.cfl_dt().min(2e-3)).abs() < 1e-18);
        assert_eq!(c.steps(), (0.2 / c.dt()).ceil() as usize);
    }

    #[test]
    fn default_cadence() {
        let mut c = ScenarioConfig::default();
        c.time.dt = Some(1e-3);
        assert_eq!(c.steps(), 500);
        assert_eq!(c.sample_every(), 5);
    }

    #[test]
    fn well_prepared_is_neutral() {
        let c = ScenarioConfig::default();
        let g = c.perp_grid().unwrap();
        let n = c.n0(g);
        let d = c.background(g);
        assert!((n.mean() - d.mean()).abs() < 1e-15);
        let init = c.initial_data().unwrap();
        let m = crate::moments::density(&init.f);
        assert!((m.mean() - d.mean()).abs() < 1e-13);
    }

    #[test]
    fn warns_on_small_cutoff() {
        let mut c = ScenarioConfig::default();
        assert!(c.warnings().is_empty());
        c.grid.vmax = Some(3.0);
        assert_eq!(c.warnings().len(), 1);
    }
}
