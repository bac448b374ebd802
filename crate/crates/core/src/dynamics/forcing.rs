use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, Grid, VectorField2D};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Viscosity `ν`, elastic coupling `λ`, relaxation `η` and Ginzburg–Landau
/// width `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysParams {
    pub nu: f64,
    pub lambda: f64,
    pub eta: f64,
    pub eps: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1.0,
            eta: 1.0,
            eps: 0.25,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("eps", self.eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `0.25 min(hx, hy)² / max(η, ν)`.
    pub fn default_dt(&self, grid: &Grid) -> f64 {
        0.25 * grid.hx().min(grid.hy()).powi(2) / self.eta.max(self.nu)
    }
}

/// A vector function of `(x, y, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

/// Body force `g`, boundary director data `h` with limit `h_∞`, and the
/// decay exponent `γ` of both.
#[derive(Clone)]
pub struct Forcing {
    grid: Grid,
    g: Option<SpaceTimeFn>,
    h: Option<SpaceTimeFn>,
    director_source: Option<SpaceTimeFn>,
    h_inf: BoundaryTrace,
    pub gamma: f64,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("grid", &self.grid)
            .field("body_force", &self.g.is_some())
            .field("time_dependent_boundary", &self.h.is_some())
            .field("director_source", &self.director_source.is_some())
            .field("gamma", &self.gamma)
            .finish()
    }
}

const UNIT_SLACK: f64 = 1e-12;

fn check_unit(trace: &BoundaryTrace, t: f64) -> Result<()> {
    let m = trace.max_norm();
    if m > 1.0 + UNIT_SLACK {
        return Err(Error::Setup {
            condition: "|h| <= 1 on the boundary".into(),
            detail: format!("max |h| = {m} at t = {t}"),
        });
    }
    Ok(())
}

impl Forcing {
    /// Constant boundary data and no body force.
    pub fn autonomous(h_inf: BoundaryTrace) -> Result<Self> {
        check_unit(&h_inf, 0.0)?;
        Ok(Self {
            grid: *h_inf.grid(),
            g: None,
            h: None,
            director_source: None,
            h_inf,
            gamma: f64::INFINITY,
        })
    }

    /// Time-dependent data: `h(x, y, t)` is evaluated at boundary nodes and
    /// must approach `h_inf`; `g` may be absent.
    pub fn new(
        h: SpaceTimeFn,
        h_inf: BoundaryTrace,
        g: Option<SpaceTimeFn>,
        gamma: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Parameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        check_unit(&h_inf, f64::INFINITY)?;
        let f = Self {
            grid: *h_inf.grid(),
            g,
            h: Some(h),
            director_source: None,
            h_inf,
            gamma,
        };
        f.trace_at(0.0)?;
        Ok(f)
    }

    /// Replaces the body force.
    pub fn with_body_force(mut self, g: SpaceTimeFn) -> Self {
        self.g = Some(g);
        self
    }

    /// Adds a source to the director equation. Used to manufacture exact
    /// solutions; physical runs leave it unset.
    pub fn with_director_source(mut self, s: SpaceTimeFn) -> Self {
        self.director_source = Some(s);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h_inf(&self) -> &BoundaryTrace {
        &self.h_inf
    }

    pub fn is_autonomous(&self) -> bool {
        self.g.is_none() && self.h.is_none() && self.director_source.is_none()
    }

    pub fn has_body_force(&self) -> bool {
        self.g.is_some()
    }

    /// `h(·, t)` at the boundary nodes; fails if `|h| > 1` anywhere.
    pub fn trace_at(&self, t: f64) -> Result<BoundaryTrace> {
        match &self.h {
            None => Ok(self.h_inf.clone()),
            Some(h) => {
                let tr = BoundaryTrace::from_fn(self.grid, |x, y| h(x, y, t));
                check_unit(&tr, t)?;
                Ok(tr)
            }
        }
    }

    /// `g(·, t)` at every node, zero when there is no body force.
    pub fn body_at(&self, t: f64) -> VectorField2D {
        Self::sample(self.grid, self.g.as_ref(), t)
    }

    pub(crate) fn director_source_at(&self, t: f64) -> Option<VectorField2D> {
        self.director_source
            .as_ref()
            .map(|s| Self::sample(self.grid, Some(s), t))
    }

    fn sample(grid: Grid, f: Option<&SpaceTimeFn>, t: f64) -> VectorField2D {
        match f {
            None => VectorField2D::zeros(grid),
            Some(f) => VectorField2D::from_fn(grid, |x, y| f(x, y, t)),
        }
    }
}
