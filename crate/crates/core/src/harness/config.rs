use crate::dynamics::PhysParams;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linsolve::{SolverConfig, SolverMethod};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A complete experiment description, read from a sectioned TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub params: PhysParams,
    #[serde(default)]
    pub forcing: ForcingSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majorant: Option<MajorantSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Nodes along x, boundary included.
    pub nx: usize,
    /// Nodes along y, boundary included.
    pub ny: usize,
    /// Domain width.
    pub lx: f64,
    /// Domain height.
    pub ly: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 64,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Time-independent boundary data, no body force.
    Autonomous,
    /// Boundary angle and body force decaying like powers of `1 + t`.
    PolynomialDecay,
    /// Polynomial decay around a minimizing equilibrium, started close to it.
    MinimizerPerturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingSpec {
    pub family: Family,
    /// Decay exponent of the data.
    pub gamma: f64,
    /// Amplitude of the boundary angle perturbation.
    pub a_h: f64,
    /// Amplitude of the body force.
    pub a_g: f64,
    /// Scale of the limiting boundary angle.
    pub kappa: f64,
    /// Winding number of the limiting boundary data.
    pub winding: i32,
    /// Bound on `‖v₀‖_{L²}` for the minimizer family.
    pub sigma1: f64,
    /// Bound on `‖d₀ − ψ*‖_{H¹}` for the minimizer family.
    pub sigma2: f64,
}

impl Default for ForcingSpec {
    fn default() -> Self {
        Self {
            family: Family::Autonomous,
            gamma: 2.0,
            a_h: 0.0,
            a_g: 0.0,
            kappa: 1.0,
            winding: 0,
            sigma1: 0.05,
            sigma2: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Full velocity–director evolution.
    Dynamics,
    /// Liftings of the boundary data only.
    Lifting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Discrete energy inequality at every step and monotone energy.
    EnergyLaw,
    /// `max |d| ≤ 1 + slack` at every sample.
    MaxPrinciple,
    /// Vanishing velocity gradient and stationary residual, and distance to
    /// the steady equilibrium at the final time.
    OmegaLimit,
    /// `H¹` distance at the final time and the fitted decay exponent.
    Rate,
    /// Decay estimates of the liftings.
    Lifting,
    /// Distance to the minimizer along the run and final energy.
    Minimizer,
    /// Majorant comparison on the sampled `A_P`.
    MajorantComparison,
    /// Uniform Gronwall bound on `A_P` with `R₁` data.
    Gronwall,
    /// Decay hypotheses of the generated data.
    Hypotheses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub t_end: f64,
    /// Time step; the default rule `0.25 h² / max(η, ν)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_solver")]
    pub solver: SolverMethod,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Amplitude of the interior angle bump of `d₀`.
    #[serde(default = "default_d0_amplitude")]
    pub d0_amplitude: f64,
    /// `‖v₀‖_{L²}` after projection.
    #[serde(default = "default_v0_amplitude")]
    pub v0_amplitude: f64,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    /// Reason a preset is excluded from acceptance, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<String>,
}

fn default_sample_every() -> usize {
    10
}

fn default_solver() -> SolverMethod {
    SolverMethod::Spectral
}

fn default_mode() -> Mode {
    Mode::Dynamics
}

fn default_d0_amplitude() -> f64 {
    1.2
}

fn default_v0_amplitude() -> f64 {
    0.5
}

fn default_checks() -> Vec<CheckKind> {
    vec![CheckKind::MaxPrinciple]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Energy inequality residual, relative to `1 + Ê(0)`.
    pub energy_residual: f64,
    /// Largest one-step rise of `Ê` treated as round-off, relative to `1 + Ê(0)`.
    pub energy_roundoff: f64,
    /// Allowed excess of `max |d|` over one.
    pub maxnorm: f64,
    pub grad_v: f64,
    pub stationary: f64,
    pub dist_l2: f64,
    pub dist_h1: f64,
    /// Allowed shortfall of the fitted exponent below the predicted one.
    pub rate_slack: f64,
    /// Allowed shortfall of lifting decay exponents.
    pub lifting_slack: f64,
    /// Bound on `‖∂_t d_P‖` at the final time.
    pub dtdp_final: f64,
    pub minimizer_h1: f64,
    pub minimizer_energy: f64,
    /// Residual target of the steady solve.
    pub equilibrium: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_residual: 1e-8,
            energy_roundoff: 1e-13,
            maxnorm: 5e-3,
            grad_v: 1e-6,
            stationary: 1e-5,
            dist_l2: 1e-4,
            dist_h1: 1e-3,
            rate_slack: 0.15,
            lifting_slack: 0.3,
            dtdp_final: 1e-6,
            minimizer_h1: 0.5,
            minimizer_energy: 1e-6,
            equilibrium: 1e-9,
        }
    }
}

/// Parameters of the `majorant` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MajorantSpec {
    pub c_star: f64,
    pub y0: f64,
    /// Constant forcing `R₃`.
    pub r3: f64,
    pub dt: f64,
    pub y_cap: f64,
    pub horizon: f64,
    /// Known blow-up time to compare against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_t_max: Option<f64>,
    pub t_max_tol: f64,
}

impl Default for MajorantSpec {
    fn default() -> Self {
        Self {
            c_star: 1.0,
            y0: 1.0,
            r3: 0.0,
            dt: 1e-3,
            y_cap: 1e3,
            horizon: 100.0,
            expected_t_max: None,
            t_max_tol: 1e-5,
        }
    }
}

const SECTIONS: [&str; 6] = ["grid", "params", "forcing", "run", "tolerances", "majorant"];

impl MajorantSpec {
    /// Reads the `[majorant]` section of a config file; other known sections
    /// are ignored, unknown ones are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(k) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown section `{k}`")));
        }
        let section = table
            .get("majorant")
            .cloned()
            .ok_or_else(|| Error::Config("missing [majorant] section".into()))?;
        let spec: Self = section
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("majorant: {e}")))?;
        if !(spec.c_star > 0.0 && spec.y0 >= 0.0 && spec.r3 >= 0.0 && spec.dt > 0.0) {
            return Err(Error::Config(
                "majorant needs c_star > 0, y0 >= 0, r3 >= 0 and dt > 0".into(),
            ));
        }
        Ok(spec)
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.build()
    }

    pub fn solver_config(&self) -> SolverConfig {
        match self.run.solver {
            SolverMethod::Spectral => SolverConfig::direct(),
            SolverMethod::DirectBanded => SolverConfig::banded(),
            SolverMethod::ConjugateGradient => SolverConfig::iterative(),
        }
    }

    /// Configured time step, or the default rule on this grid.
    pub fn dt(&self) -> Result<f64> {
        Ok(match self.run.dt {
            Some(dt) => dt,
            None => self.params.default_dt(&self.grid()?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params.validate()?;
        let f = &self.forcing;
        let bad = |what: &str, v: f64| Error::Config(format!("{what} = {v} is out of range"));
        if !(f.gamma > 0.0 && f.gamma.is_finite()) {
            return Err(bad("forcing.gamma", f.gamma));
        }
        for (k, v) in [
            ("forcing.a_h", f.a_h),
            ("forcing.a_g", f.a_g),
            ("forcing.kappa", f.kappa),
        ] {
            if !v.is_finite() {
                return Err(bad(k, v));
            }
        }
        if f.family == Family::MinimizerPerturbation {
            if !(f.sigma1 > 0.0) {
                return Err(bad("forcing.sigma1", f.sigma1));
            }
            if !(f.sigma2 > 0.0) {
                return Err(bad("forcing.sigma2", f.sigma2));
            }
            if f.winding != 0 {
                return Err(Error::Config(
                    "forcing.winding must be 0 for the minimizer family".into(),
                ));
            }
        }
        let r = &self.run;
        if r.name.trim().is_empty() || r.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "run.name `{}` is not a plain name",
                r.name
            )));
        }
        if !(r.t_end > 0.0 && r.t_end.is_finite()) {
            return Err(bad("run.t_end", r.t_end));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(bad("run.dt", dt));
            }
        }
        if r.sample_every == 0 {
            return Err(Error::Config("run.sample_every must be positive".into()));
        }
        if !(r.v0_amplitude >= 0.0) {
            return Err(bad("run.v0_amplitude", r.v0_amplitude));
        }
        if !r.d0_amplitude.is_finite() {
            return Err(bad("run.d0_amplitude", r.d0_amplitude));
        }
        if let Some(m) = &self.majorant {
            if !(m.c_star > 0.0) {
                return Err(bad("majorant.c_star", m.c_star));
            }
            if !(m.y0 >= 0.0) {
                return Err(bad("majorant.y0", m.y0));
            }
            if !(m.r3 >= 0.0) {
                return Err(bad("majorant.r3", m.r3));
            }
        }
        Ok(())
    }
}
