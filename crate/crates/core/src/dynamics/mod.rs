//! Time integration of the coupled velocity–director system in lifted form.
//!
//! One step advances the liftings, then the shifted director `d̂ = d − d_E`
//! with implicit diffusion, then the velocity with implicit viscosity, and
//! finally projects the velocity onto discretely divergence-free fields.

mod forcing;
mod run;

pub use forcing::{Forcing, PhysParams, SpaceTimeFn};
pub use run::{run, CsvSink, RecordSink, RunSummary, SnapshotSink};

use crate::error::{Error, Result};
use crate::grid::{
    central_gradient_interior, gl_force, laplacian_interior, Grid, ScalarField2D, VectorField2D,
};
use crate::lifting::LiftingState;
use crate::linsolve::{LinearSolver, SolverConfig};
use std::sync::Arc;

/// Allowed excess of `max |d|` over one.
pub const MAXNORM_SLACK: f64 = 5e-3;
const COMPAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub v: VectorField2D,
    pub d: VectorField2D,
    /// Pressure of the last projection.
    pub pi: ScalarField2D,
    pub lifting: LiftingState,
    pub params: PhysParams,
    pub dt: f64,
    pub steps: u64,
    pub forcing: Forcing,
    /// Equilibrium used for the distance columns of energy records.
    pub reference: Option<Arc<VectorField2D>>,
    /// Keep `v` fixed and relax the director alone.
    pub frozen_velocity: bool,
    solver: Arc<LinearSolver>,
}

fn setup(condition: &str, detail: String) -> Error {
    Error::Setup {
        condition: condition.into(),
        detail,
    }
}

/// `Σ_m w_m ∂d_m`: the central-difference contraction `w · ∇d`, per component.
fn contract_gradient(w: &VectorField2D, d: &VectorField2D) -> VectorField2D {
    let grid = *d.grid();
    let n = grid.len();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let mut out = VectorField2D::zeros(grid);
    for m in 0..2 {
        central_gradient_interior(&grid, d.comps[m].data(), &mut gx, &mut gy);
        let wm = w.comps[m].data();
        for p in 0..n {
            out.comps[0].data_mut()[p] += wm[p] * gx[p];
            out.comps[1].data_mut()[p] += wm[p] * gy[p];
        }
    }
    out
}

/// `(v · ∇) c` at interior nodes.
fn advect(grid: &Grid, v: &VectorField2D, c: &[f64], out: &mut [f64]) {
    let n = grid.len();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    central_gradient_interior(grid, c, &mut gx, &mut gy);
    let (v0, v1) = (v.comps[0].data(), v.comps[1].data());
    for p in 0..n {
        out[p] = v0[p] * gx[p] + v1[p] * gy[p];
    }
}

/// `½ ((v · ∇) c + ∇ · (v c))` at interior nodes.
fn advect_skew(grid: &Grid, v: &VectorField2D, c: &[f64], out: &mut [f64]) {
    advect(grid, v, c, out);
    let n = grid.len();
    let (v0, v1) = (v.comps[0].data(), v.comps[1].data());
    let fx: Vec<f64> = (0..n).map(|p| v0[p] * c[p]).collect();
    let fy: Vec<f64> = (0..n).map(|p| v1[p] * c[p]).collect();
    let (mut ax, mut ay) = (vec![0.0; n], vec![0.0; n]);
    let mut unused = vec![0.0; n];
    central_gradient_interior(grid, &fx, &mut ax, &mut unused);
    central_gradient_interior(grid, &fy, &mut unused, &mut ay);
    for p in 0..n {
        out[p] = 0.5 * (out[p] + ax[p] + ay[p]);
    }
}

/// `Δ_h u − f(d)` at interior nodes, zero on the boundary ring.
pub(crate) fn molecular_field(u: &VectorField2D, d: &VectorField2D, eps: f64) -> VectorField2D {
    let grid = *d.grid();
    let n = grid.len();
    let mut out = VectorField2D::zeros(grid);
    let mut lap = vec![0.0; n];
    for k in 0..2 {
        laplacian_interior(&grid, u.comps[k].data(), &mut lap);
        out.comps[k].data_mut().copy_from_slice(&lap);
    }
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let p = grid.idx(i, j);
            let f = gl_force([d.comps[0].data()[p], d.comps[1].data()[p]], eps);
            out.comps[0].data_mut()[p] -= f[0];
            out.comps[1].data_mut()[p] -= f[1];
        }
    }
    out
}

impl SimState {
    /// Initial state with the default direct solver.
    pub fn init(
        v0: VectorField2D,
        d0: VectorField2D,
        forcing: Forcing,
        params: PhysParams,
        dt: f64,
    ) -> Result<Self> {
        let solver = Arc::new(LinearSolver::new(SolverConfig::default())?);
        Self::init_with_solver(v0, d0, forcing, params, dt, solver)
    }

    pub fn init_with_solver(
        v0: VectorField2D,
        d0: VectorField2D,
        forcing: Forcing,
        params: PhysParams,
        dt: f64,
        solver: Arc<LinearSolver>,
    ) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let grid = *d0.grid();
        grid.check_same(v0.grid())?;
        grid.check_same(forcing.grid())?;
        if !(v0.is_finite() && d0.is_finite()) {
            return Err(setup(
                "finite initial data",
                "initial fields contain NaN or infinity".into(),
            ));
        }
        let slip = v0.trace().max_norm();
        if slip > COMPAT_TOL {
            return Err(setup(
                "no-slip initial velocity",
                format!("max |v0| on the boundary is {slip:.3e}"),
            ));
        }
        let h0 = forcing.trace_at(0.0)?;
        let mismatch = d0.trace().max_abs_diff(&h0)?;
        if mismatch > COMPAT_TOL {
            return Err(setup(
                "initial director matches boundary data",
                format!("max |d0 - h(0)| on the boundary is {mismatch:.3e}"),
            ));
        }
        let dmax = d0.max_norm();
        if dmax > 1.0 + COMPAT_TOL {
            return Err(setup("|d0| <= 1", format!("max |d0| is {dmax}")));
        }
        let proj = solver.project(&v0)?;
        let lifting = LiftingState::new(&solver, h0, 0.0)?;
        Ok(Self {
            t: 0.0,
            v: proj.v,
            d: d0,
            pi: ScalarField2D::zeros(grid),
            lifting,
            params,
            dt,
            steps: 0,
            forcing,
            reference: None,
            frozen_velocity: false,
            solver,
        })
    }

    pub fn with_reference(mut self, psi: VectorField2D) -> Result<Self> {
        self.grid().check_same(psi.grid())?;
        self.reference = Some(Arc::new(psi));
        Ok(self)
    }

    pub fn with_frozen_velocity(mut self) -> Self {
        self.frozen_velocity = true;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.d.grid()
    }

    pub fn solver(&self) -> &LinearSolver {
        &self.solver
    }

    /// `dt · max|v| / min(hx, hy)`.
    pub fn cfl(&self) -> f64 {
        let g = self.grid();
        self.dt * self.v.max_norm() / g.hx().min(g.hy())
    }

    /// Advances the state by one time step.
    pub fn step(&self) -> Result<SimState> {
        let grid = *self.grid();
        let n = grid.len();
        let p = self.params;
        let dt = self.dt;
        let t1 = self.t + dt;
        let cfl = self.cfl();
        if cfl > 1.0 {
            log::warn!("advective CFL number {cfl:.3} exceeds 1 at t = {}", self.t);
        }

        let trace1 = self.forcing.trace_at(t1)?;
        let lifting = self.lifting.step(&self.solver, &trace1, dt)?;

        let source = self.forcing.director_source_at(t1);
        let mut rhs = VectorField2D::zeros(grid);
        let mut adv = vec![0.0; n];
        for k in 0..2 {
            advect(&grid, &self.v, self.d.comps[k].data(), &mut adv);
            let d = self.d.comps[k].data();
            let de = self.lifting.d_e.comps[k].data();
            let dte = lifting.dt_d_e.comps[k].data();
            let out = rhs.comps[k].data_mut();
            for q in 0..n {
                let f = gl_force(
                    [self.d.comps[0].data()[q], self.d.comps[1].data()[q]],
                    p.eps,
                )[k];
                out[q] = d[q] - de[q] + dt * (-adv[q] - p.eta * f - dte[q]);
            }
            if let Some(s) = &source {
                for (o, sv) in out.iter_mut().zip(s.comps[k].data()) {
                    *o += dt * sv;
                }
            }
        }
        let d_hat = self.solver.helmholtz_vector(1.0, p.eta * dt, &rhs, None)?;
        let d = d_hat.add(&lifting.d_e)?;

        let (v, pi) = if self.frozen_velocity {
            (self.v.clone(), self.pi.clone())
        } else {
            let mu = molecular_field(&d, &d, p.eps);
            let stress = contract_gradient(&mu, &d);
            let g = self.forcing.body_at(t1);
            let mut rhs = VectorField2D::zeros(grid);
            for k in 0..2 {
                advect_skew(&grid, &self.v, self.v.comps[k].data(), &mut adv);
                let vk = self.v.comps[k].data();
                let sk = stress.comps[k].data();
                let gk = g.comps[k].data();
                let out = rhs.comps[k].data_mut();
                for q in 0..n {
                    out[q] = vk[q] + dt * (-adv[q] - p.lambda * sk[q] + gk[q]);
                }
            }
            rhs.zero_boundary();
            let u_star = self.solver.helmholtz_vector(1.0, p.nu * dt, &rhs, None)?;
            let proj = self.solver.project(&u_star)?;
            (proj.v, proj.pi.scale(1.0 / dt))
        };

        if !(d.is_finite() && v.is_finite()) {
            return Err(Error::NonFinite {
                t: t1,
                step: self.steps + 1,
                last_good_t: self.t,
            });
        }
        let dmax = d.max_norm();
        if dmax > 1.0 + MAXNORM_SLACK {
            log::warn!("max |d| = {dmax:.6} exceeds the unit bound at t = {t1}");
        }
        Ok(SimState {
            t: t1,
            v,
            d,
            pi,
            lifting,
            params: p,
            dt,
            steps: self.steps + 1,
            forcing: self.forcing.clone(),
            reference: self.reference.clone(),
            frozen_velocity: self.frozen_velocity,
            solver: Arc::clone(&self.solver),
        })
    }
}
