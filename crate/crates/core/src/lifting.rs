//! Liftings of the time-dependent director boundary data.
//!
//! `d_E(t)` is the harmonic extension of `h(t)`; `d_P(t)` solves the heat
//! equation with boundary values `h(t)` and starts from `d_E(0)`. Both carry
//! the boundary data, so `d − d_E` and `d − d_P` vanish on the boundary.

use crate::diagnostics::fit::{cumulative_trapezoid, fit_decay_exponent, interpolate, DecayFit};
use crate::diagnostics::norms::{grad_sq, h1, h2, interior_sq, l2};
use crate::error::{Error, Result};
use crate::grid::{laplacian_interior, BoundaryTrace, Grid, ScalarField2D, VectorField2D};
use crate::linsolve::{LinearSolver, SolverConfig};
use std::io::Write;

/// Harmonic extension of `trace` using `solver`.
pub fn elliptic_lift_with(solver: &LinearSolver, trace: &BoundaryTrace) -> Result<VectorField2D> {
    if trace
        .values()
        .iter()
        .any(|v| !(v[0].is_finite() && v[1].is_finite()))
    {
        return Err(Error::Parameter("boundary trace is not finite".into()));
    }
    let grid = *trace.grid();
    solver.helmholtz_vector(0.0, 1.0, &VectorField2D::zeros(grid), Some(trace))
}

/// Harmonic extension of `trace` with the default direct solver.
pub fn elliptic_lift(trace: &BoundaryTrace) -> Result<VectorField2D> {
    elliptic_lift_with(&LinearSolver::new(SolverConfig::default())?, trace)
}

#[derive(Debug, Clone)]
pub struct LiftingState {
    pub t: f64,
    pub trace: BoundaryTrace,
    pub d_e: VectorField2D,
    pub d_p: VectorField2D,
    pub d_e0: VectorField2D,
    /// Backward difference of `d_P` over the last step.
    pub dt_d_p: VectorField2D,
    /// Backward difference of `d_E` over the last step.
    pub dt_d_e: VectorField2D,
}

impl LiftingState {
    /// `d_P(t₀) = d_E(t₀) = d_{E0}`, time derivatives zero.
    pub fn new(solver: &LinearSolver, trace: BoundaryTrace, t0: f64) -> Result<Self> {
        let d_e = elliptic_lift_with(solver, &trace)?;
        let grid = *trace.grid();
        Ok(Self {
            t: t0,
            trace,
            d_p: d_e.clone(),
            d_e0: d_e.clone(),
            d_e,
            dt_d_p: VectorField2D::zeros(grid),
            dt_d_e: VectorField2D::zeros(grid),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.trace.grid()
    }

    /// Advances both liftings to `t + dt` with boundary data `trace_next`.
    pub fn step(&self, solver: &LinearSolver, trace_next: &BoundaryTrace, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        self.grid().check_same(trace_next.grid())?;
        let grid = *self.grid();
        let frozen = *trace_next == self.trace;
        let d_e = if frozen {
            self.d_e.clone()
        } else {
            elliptic_lift_with(solver, trace_next)?
        };
        let d_p = if frozen && self.d_p == self.d_e {
            self.d_p.clone()
        } else {
            solver.heat_step(&self.d_p, trace_next, dt)?
        };
        let quotient = |new: &VectorField2D, old: &VectorField2D| -> Result<VectorField2D> {
            if new == old {
                Ok(VectorField2D::zeros(grid))
            } else {
                Ok(new.sub(old)?.scale(1.0 / dt))
            }
        };
        Ok(Self {
            t: self.t + dt,
            trace: trace_next.clone(),
            dt_d_p: quotient(&d_p, &self.d_p)?,
            dt_d_e: quotient(&d_e, &self.d_e)?,
            d_e,
            d_p,
            d_e0: self.d_e0.clone(),
        })
    }

    pub fn sample(&self) -> LiftingSample {
        LiftingSample::from_state(self)
    }
}

/// [`LiftingState::step`] with a temporary solver.
pub fn parabolic_lift_step(
    state: &LiftingState,
    trace_next: &BoundaryTrace,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<LiftingState> {
    state.step(&LinearSolver::new(*cfg)?, trace_next, dt)
}

/// `(d̂, d̃) = (d − d_E, d − d_P)`.
pub fn shifted_fields(
    d: &VectorField2D,
    state: &LiftingState,
) -> Result<(VectorField2D, VectorField2D)> {
    Ok((d.sub(&state.d_e)?, d.sub(&state.d_p)?))
}

/// Scalar summary of one [`LiftingState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftingSample {
    pub t: f64,
    pub diff_h1: f64,
    pub diff_h2: f64,
    pub dt_dp: f64,
    /// `‖∇Δd_P‖`, with `Δd_P` on the boundary taken equal to `h_t`.
    pub grad_lap_dp: f64,
    pub dt_de: f64,
    pub ht_l2: f64,
    pub ht_half: f64,
    /// `‖Δ(d_P − d_E) − ∂_t d_P‖` over interior nodes.
    pub identity_residual: f64,
}

impl LiftingSample {
    pub fn from_state(s: &LiftingState) -> Self {
        let grid = *s.grid();
        let n = grid.len();
        let diff = s.d_p.sub(&s.d_e).expect("liftings share a grid");
        let ht = s.dt_d_p.trace();
        let mut lap = vec![0.0; n];
        let mut glap = 0.0;
        let mut ident = 0.0;
        for k in 0..2 {
            laplacian_interior(&grid, s.d_p.comps[k].data(), &mut lap);
            let mut f = ScalarField2D::from_vec(grid, lap.clone()).expect("grid length");
            f.set_boundary(&ht.component(k)).expect("trace length");
            glap += grad_sq(&f);
            laplacian_interior(&grid, diff.comps[k].data(), &mut lap);
            let r: Vec<f64> = (0..n)
                .map(|p| {
                    let (i, j) = (p % grid.nx, p / grid.nx);
                    if grid.is_boundary(i, j) {
                        0.0
                    } else {
                        lap[p] - s.dt_d_p.comps[k].data()[p]
                    }
                })
                .collect();
            ident += interior_sq(grid.hx() * grid.hy(), &r);
        }
        Self {
            t: s.t,
            diff_h1: h1(&diff),
            diff_h2: h2(&diff),
            dt_dp: l2(&s.dt_d_p),
            grad_lap_dp: glap.sqrt(),
            dt_de: l2(&s.dt_d_e),
            ht_l2: ht.l2_norm(),
            ht_half: ht.half_norm(),
            identity_residual: ident.sqrt(),
        }
    }
}

/// Samples of a lifting trajectory on a fixed grid.
#[derive(Debug, Clone)]
pub struct LiftingHistory {
    pub grid: Grid,
    pub samples: Vec<LiftingSample>,
}

impl LiftingHistory {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, s: &LiftingState) -> Result<()> {
        self.grid.check_same(s.grid())?;
        self.samples.push(s.sample());
        Ok(())
    }
}

pub const MIN_LIFTING_SAMPLES: usize = 16;
/// Relative slack of the exponentially weighted `‖d_P − d_E‖_{H¹}` bound,
/// covering the gap between trapezoid quadrature and the implicit time step.
pub const WEIGHTED_H1_SLACK: f64 = 0.05;
/// Allowed shortfall of fitted decay exponents.
pub const EXPONENT_SLACK: f64 = 0.3;
/// Threshold for `‖∂_t d_P‖` at the end of the history.
pub const DTDP_FINAL_TOL: f64 = 1e-6;

/// The weighted bound `‖d_P − d_E‖²_{H¹} ≤ c e^{−c₁t} ∫₀ᵗ e^{c₁τ} ‖∂_t d_E‖² dτ`
/// with `c = 1 + C_P²`, `c₁ = 1/(1 + C_P²)` and `C_P` the discrete Poincaré
/// constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedBound {
    pub c: f64,
    pub rate: f64,
    pub max_ratio: f64,
    pub holds: bool,
}

/// A fitted decay exponent compared with the one required.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentCheck {
    pub required: f64,
    pub fit: Option<DecayFit>,
    /// `sup value · (1+t)^nominal`, the smallest constant in the decay bound.
    pub constant: f64,
    pub holds: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftingReport {
    pub samples: usize,
    pub gamma: f64,
    pub weighted_h1: WeightedBound,
    /// Smallest `c` in `‖∂_t d_P‖² + ‖d_P − d_E‖²_{H²} ≤ c ∫₀ᵗ ‖h_t‖²_{H^{1/2}}`.
    pub energy_constant: f64,
    /// Smallest `c` in `∫₀ᵗ ‖∇Δd_P‖² ≤ c ∫₀ᵗ ‖h_t‖²_{H^{1/2}}`.
    pub grad_lap_constant: f64,
    /// Decay of `‖∂_t d_P‖²`.
    pub dtdp_decay: ExponentCheck,
    /// Decay of `∫_{t/2}^t ‖∇Δd_P‖²`.
    pub grad_lap_decay: ExponentCheck,
    pub dtdp_final: f64,
    pub dtdp_holds: bool,
    pub identity_max: f64,
}

impl LiftingReport {
    pub fn all_hold(&self) -> bool {
        self.weighted_h1.holds
            && self.dtdp_decay.holds
            && self.grad_lap_decay.holds
            && self.dtdp_holds
    }
}

fn sup_ratio(lhs: &[f64], rhs: &[f64]) -> f64 {
    let mut m = 0.0_f64;
    for (a, b) in lhs.iter().zip(rhs) {
        if *a <= 0.0 {
            continue;
        }
        m = m.max(if *b > 0.0 { a / b } else { f64::INFINITY });
    }
    m
}

fn exponent_check(t: &[f64], v: &[f64], nominal: f64, required: f64) -> ExponentCheck {
    let constant = t
        .iter()
        .zip(v)
        .fold(0.0_f64, |m, (t, v)| m.max(v * (1.0 + t).powf(nominal)));
    let tail_start = t.len() / 2;
    if v[tail_start..].iter().all(|x| *x == 0.0) {
        return ExponentCheck {
            required,
            fit: None,
            constant,
            holds: true,
            note: Some("identically zero tail".into()),
        };
    }
    let samples: Vec<(f64, f64)> = t.iter().copied().zip(v.iter().copied()).collect();
    match fit_decay_exponent(&samples, 0.5) {
        Ok(fit) => ExponentCheck {
            required,
            holds: fit.exponent >= required,
            fit: Some(fit),
            constant,
            note: None,
        },
        Err(e) => ExponentCheck {
            required,
            fit: None,
            constant,
            holds: false,
            note: Some(e.to_string()),
        },
    }
}

/// Checks the lifting estimates on a lifting trajectory for data decaying
/// with exponent `gamma`.
pub fn lifting_diagnostics(history: &LiftingHistory, gamma: f64) -> Result<LiftingReport> {
    let s = &history.samples;
    if s.len() < MIN_LIFTING_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_LIFTING_SAMPLES,
            got: s.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::Parameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if s.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Parameter("sample times must increase".into()));
    }
    let t: Vec<f64> = s.iter().map(|x| x.t).collect();

    let cp2 = 1.0 / history.grid.dirichlet_lambda_min();
    let (c, rate) = (1.0 + cp2, 1.0 / (1.0 + cp2));
    let mut weighted = 0.0;
    let mut max_ratio = 0.0_f64;
    let mut weighted_h1_holds = true;
    for k in 1..s.len() {
        let dt = t[k] - t[k - 1];
        let decay = (-rate * dt).exp();
        weighted =
            decay * weighted + 0.5 * dt * (decay * s[k - 1].dt_de.powi(2) + s[k].dt_de.powi(2));
        let lhs = s[k].diff_h1.powi(2);
        let rhs = c * weighted;
        if lhs > rhs * (1.0 + WEIGHTED_H1_SLACK) + f64::MIN_POSITIVE {
            weighted_h1_holds = false;
        }
        if lhs > 0.0 {
            max_ratio = max_ratio.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
    }

    let ht_half_sq: Vec<f64> = s.iter().map(|x| x.ht_half.powi(2)).collect();
    let budget = cumulative_trapezoid(&t, &ht_half_sq);
    let energy_lhs: Vec<f64> = s
        .iter()
        .map(|x| x.dt_dp.powi(2) + x.diff_h2.powi(2))
        .collect();
    let glap_sq: Vec<f64> = s.iter().map(|x| x.grad_lap_dp.powi(2)).collect();
    let glap_int = cumulative_trapezoid(&t, &glap_sq);

    let dtdp_sq: Vec<f64> = s.iter().map(|x| x.dt_dp.powi(2)).collect();
    let dtdp_decay = exponent_check(
        &t,
        &dtdp_sq,
        2.0 + 2.0 * gamma,
        2.0 + 2.0 * gamma - EXPONENT_SLACK,
    );
    let tail_int: Vec<f64> = t
        .iter()
        .zip(&glap_int)
        .map(|(tk, ik)| (ik - interpolate(&t, &glap_int, 0.5 * tk)).max(0.0))
        .collect();
    let grad_lap_decay = exponent_check(
        &t,
        &tail_int,
        1.0 + 2.0 * gamma,
        1.0 + 2.0 * gamma - EXPONENT_SLACK,
    );
    let dtdp_final = s.last().unwrap().dt_dp;
    Ok(LiftingReport {
        samples: s.len(),
        gamma,
        weighted_h1: WeightedBound {
            c,
            rate,
            max_ratio,
            holds: weighted_h1_holds,
        },
        energy_constant: sup_ratio(&energy_lhs, &budget),
        grad_lap_constant: sup_ratio(&glap_int, &budget),
        dtdp_decay,
        grad_lap_decay,
        dtdp_final,
        dtdp_holds: dtdp_final <= DTDP_FINAL_TOL,
        identity_max: s.iter().fold(0.0_f64, |m, x| m.max(x.identity_residual)),
    })
}

/// Writes one CSV row per sample: the lifting norms and whether the weighted
/// `H¹` bound holds at that sample.
pub fn write_history_csv<W: Write>(out: &mut W, history: &LiftingHistory) -> Result<()> {
    writeln!(
        out,
        "t,diff_h1,diff_h2,dt_dp,grad_lap_dp,dt_de,ht_l2,ht_half,identity_residual,weighted_h1_ok"
    )?;
    let cp2 = 1.0 / history.grid.dirichlet_lambda_min();
    let (c, rate) = (1.0 + cp2, 1.0 / (1.0 + cp2));
    let mut weighted = 0.0;
    for (k, x) in history.samples.iter().enumerate() {
        if k > 0 {
            let prev = &history.samples[k - 1];
            let dt = x.t - prev.t;
            let decay = (-rate * dt).exp();
            weighted = decay * weighted + 0.5 * dt * (decay * prev.dt_de.powi(2) + x.dt_de.powi(2));
        }
        let ok = x.diff_h1.powi(2) <= c * weighted * (1.0 + WEIGHTED_H1_SLACK) + f64::MIN_POSITIVE;
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            x.t,
            x.diff_h1,
            x.diff_h2,
            x.dt_dp,
            x.grad_lap_dp,
            x.dt_de,
            x.ht_l2,
            x.ht_half,
            x.identity_residual,
            ok
        )?;
    }
    Ok(())
}
