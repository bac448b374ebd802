//! Stationary director fields `−Δψ + f(ψ) = 0` with `ψ = h_∞` on the boundary.

pub(crate) mod minimizer;
mod newton;

pub use minimizer::{local_minimizer_check, lowest_eigenvalue, MinimizerVerdict, Verdict};
pub use newton::newton_refine;

use crate::diagnostics::norms::{grad_sq, integral};
use crate::dynamics::{molecular_field, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{bulk_potential_F, BoundaryTrace, Grid, VectorField2D};
use crate::lifting::elliptic_lift;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub psi: VectorField2D,
    /// `‖−Δψ + f(ψ)‖` over interior nodes.
    pub residual: f64,
    /// `½‖∇ψ‖² + ∫F(ψ)`.
    pub energy_e: f64,
    /// `½‖∇(ψ − d*_E)‖² + ∫F(ψ)` with `d*_E` the harmonic extension of `h_∞`.
    pub energy_script: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Residuals sampled along the iteration, first and last included.
    pub history: Vec<f64>,
}

/// `½‖∇d‖² + ∫F(d)`.
pub fn energy_e(d: &VectorField2D, eps: f64) -> Result<f64> {
    Ok(0.5 * grad_sq(d) + integral(&bulk_potential_F(d, eps)?))
}

/// `½‖∇(d − d*_E)‖² + ∫F(d)`.
pub fn energy_script(d: &VectorField2D, d_star_e: &VectorField2D, eps: f64) -> Result<f64> {
    Ok(0.5 * grad_sq(&d.sub(d_star_e)?) + integral(&bulk_potential_F(d, eps)?))
}

/// `‖−Δd + f(d)‖` over interior nodes.
pub fn stationary_residual(d: &VectorField2D, eps: f64) -> f64 {
    let g = d.grid();
    let mu = molecular_field(d, d, eps);
    let s: f64 = mu
        .comps
        .iter()
        .map(|c| c.data().iter().map(|x| x * x).sum::<f64>())
        .sum();
    (s * g.hx() * g.hy()).sqrt()
}

impl Equilibrium {
    /// Evaluates residual and energies of `psi` as given.
    pub fn from_field(psi: VectorField2D, params: &PhysParams) -> Result<Self> {
        params.validate()?;
        let d_star = elliptic_lift(&psi.trace())?;
        let residual = stationary_residual(&psi, params.eps);
        Ok(Self {
            energy_e: energy_e(&psi, params.eps)?,
            energy_script: energy_script(&psi, &d_star, params.eps)?,
            residual,
            psi,
            converged: false,
            iterations: 0,
            history: vec![residual],
        })
    }

    pub fn grid(&self) -> &Grid {
        self.psi.grid()
    }
}

/// Options for [`solve_gradient_flow_with`].
#[derive(Debug, Clone, Copy)]
pub struct GradientFlowOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Pseudo-time step as a fraction of the explicit stability limit.
    pub step_fraction: f64,
    pub record_every: usize,
}

impl GradientFlowOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_iter: 400_000,
            step_fraction: 0.9,
            record_every: 100,
        }
    }
}

/// Explicit stability limit `2 / (4/hx² + 4/hy² + 2/ε²)` of the relaxation.
pub fn stable_pseudo_step(grid: &Grid, eps: f64) -> f64 {
    2.0 / (4.0 / grid.hx().powi(2) + 4.0 / grid.hy().powi(2) + 2.0 / (eps * eps))
}

fn check_trace(h_inf: &BoundaryTrace, d: &VectorField2D) -> Result<()> {
    h_inf.grid().check_same(d.grid())?;
    let m = d.trace().max_abs_diff(h_inf)?;
    if m > 1e-12 {
        return Err(Error::Setup {
            condition: "initial guess matches boundary data".into(),
            detail: format!("max trace mismatch {m:.3e}"),
        });
    }
    Ok(())
}

pub fn solve_gradient_flow(
    h_inf: &BoundaryTrace,
    d_init: &VectorField2D,
    params: &PhysParams,
    tol: f64,
) -> Result<Equilibrium> {
    solve_gradient_flow_with(h_inf, d_init, params, &GradientFlowOptions::new(tol))
}

/// Relaxes `d_τ = Δd − f(d)` with explicit pseudo-time steps until the
/// stationary residual drops below `opts.tol`. Hitting the iteration cap
/// returns the last iterate with `converged = false`.
pub fn solve_gradient_flow_with(
    h_inf: &BoundaryTrace,
    d_init: &VectorField2D,
    params: &PhysParams,
    opts: &GradientFlowOptions,
) -> Result<Equilibrium> {
    params.validate()?;
    if !(opts.tol > 0.0) || opts.record_every == 0 {
        return Err(Error::Parameter(
            "tolerance and record interval must be positive".into(),
        ));
    }
    if !(opts.step_fraction > 0.0 && opts.step_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "step fraction must lie in (0, 1), got {}",
            opts.step_fraction
        )));
    }
    check_trace(h_inf, d_init)?;
    let grid = *d_init.grid();
    let eps = params.eps;
    let tau = opts.step_fraction * stable_pseudo_step(&grid, eps);
    let w = grid.hx() * grid.hy();
    let mut d = d_init.clone();
    let mut history = Vec::new();
    let mut k = 0;
    let (residual, converged) = loop {
        let mu = molecular_field(&d, &d, eps);
        let r = (w * mu
            .comps
            .iter()
            .map(|c| c.data().iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>())
        .sqrt();
        if !r.is_finite() {
            return Err(Error::NonFinite {
                t: k as f64 * tau,
                step: k as u64,
                last_good_t: (k.max(1) - 1) as f64 * tau,
            });
        }
        if k % opts.record_every == 0 {
            history.push(r);
        }
        if r <= opts.tol || k >= opts.max_iter {
            if k % opts.record_every != 0 {
                history.push(r);
            }
            break (r, r <= opts.tol);
        }
        d.axpy(tau, &mu)?;
        k += 1;
    };
    if !converged {
        log::warn!("gradient flow stopped at residual {residual:.3e} after {k} iterations");
    }
    let d_star = elliptic_lift(h_inf)?;
    Ok(Equilibrium {
        energy_e: energy_e(&d, eps)?,
        energy_script: energy_script(&d, &d_star, eps)?,
        psi: d,
        residual,
        converged,
        iterations: k,
        history,
    })
}

/// Gradient flow to a residual of `1e-6` (or `tol` if larger), then Newton.
pub fn solve_equilibrium(
    h_inf: &BoundaryTrace,
    d_init: &VectorField2D,
    params: &PhysParams,
    tol: f64,
) -> Result<Equilibrium> {
    let coarse = solve_gradient_flow(h_inf, d_init, params, tol.max(1e-6))?;
    if coarse.residual <= tol {
        return Ok(coarse);
    }
    newton_refine(&coarse, params, tol)
}

/// Largest `⟨−Δψ + f(ψ), z⟩ / ‖z‖_{H¹}` over `n` random smooth zero-trace
/// fields `z`; small for critical points.
pub fn critical_point_defect(e: &Equilibrium, params: &PhysParams, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = *e.grid();
    let mu = molecular_field(&e.psi, &e.psi, params.eps);
    let w = grid.hx() * grid.hy();
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let z = minimizer::random_probe(&grid, &mut rng, 1.0);
        let ip: f64 = (0..2)
            .map(|k| {
                mu.comps[k]
                    .data()
                    .iter()
                    .zip(z.comps[k].data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum::<f64>()
            * w;
        let scale = crate::diagnostics::norms::h1(&z);
        worst = worst.max(ip.abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::norms::h1;
    use std::f64::consts::PI;

    fn angle_field(g: Grid, phi: impl Fn(f64, f64) -> f64) -> VectorField2D {
        VectorField2D::from_fn(g, |x, y| {
            let a = phi(x, y);
            [a.cos(), a.sin()]
        })
    }

    #[test]
    fn constant_unit_trace_is_its_own_equilibrium() {
        let g = Grid::unit_square(12).unwrap();
        let h = BoundaryTrace::constant(g, [1.0, 0.0]);
        let d = VectorField2D::constant(g, [1.0, 0.0]);
        let e = solve_gradient_flow(&h, &d, &PhysParams::default(), 1e-10).unwrap();
        assert!(e.converged && e.iterations == 0);
        assert_eq!(e.residual, 0.0);
        assert!(e.energy_e.abs() < 1e-28);
    }

    #[test]
    fn relaxation_converges_with_decreasing_residual_and_energy() {
        let g = Grid::unit_square(32).unwrap();
        let phi = |x: f64, y: f64| 0.4 * (x - 0.5) * (y + 0.2);
        let init = angle_field(g, phi);
        let h = init.trace();
        let p = PhysParams::default();
        let mut opts = GradientFlowOptions::new(1e-10);
        opts.record_every = 50;
        let e = solve_gradient_flow_with(&h, &init, &p, &opts).unwrap();
        assert!(e.converged && e.residual <= 1e-10);
        assert!(e.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(e.psi.trace(), h);
        assert!(e.energy_e <= energy_e(&init, p.eps).unwrap());
    }

    #[test]
    fn gradient_flow_never_increases_energy() {
        let g = Grid::unit_square(16).unwrap();
        let init = VectorField2D::from_fn(g, |x, y| {
            let s = (PI * x).sin() * (PI * y).sin();
            [0.9 * (1.0 - s), 0.9 * s]
        });
        let init = {
            let mut d = init;
            d.set_boundary(&BoundaryTrace::constant(g, [0.9, 0.0]))
                .unwrap();
            d
        };
        let h = init.trace();
        let p = PhysParams::default();
        let mut d = init;
        let mut prev = energy_e(&d, p.eps).unwrap();
        let mut opts = GradientFlowOptions::new(1e-14);
        opts.max_iter = 1;
        for _ in 0..200 {
            d = solve_gradient_flow_with(&h, &d, &p, &opts).unwrap().psi;
            let e = energy_e(&d, p.eps).unwrap();
            assert!(e <= prev + 1e-10 * (1.0 + prev));
            prev = e;
        }
    }

    #[test]
    fn large_eps_gives_elliptic_lift() {
        let g = Grid::unit_square(16).unwrap();
        let h = angle_field(g, |x, y| 0.3 * (x - y)).trace();
        let mut init = VectorField2D::zeros(g);
        init.set_boundary(&h).unwrap();
        let p = PhysParams {
            eps: 1e6,
            ..PhysParams::default()
        };
        let e = solve_equilibrium(&h, &init, &p, 1e-11).unwrap();
        let lift = elliptic_lift(&h).unwrap();
        assert!(e.psi.sub(&lift).unwrap().max_norm() < 1e-10);
    }

    #[test]
    fn energy_gap_between_functionals_depends_only_on_trace() {
        let g = Grid::unit_square(16).unwrap();
        let h = angle_field(g, |x, y| 0.5 * x * y);
        let p = PhysParams::default();
        let star = elliptic_lift(&h.trace()).unwrap();
        let gap = |d: &VectorField2D| {
            energy_e(d, p.eps).unwrap() - energy_script(d, &star, p.eps).unwrap()
        };
        let mut other = VectorField2D::from_fn(g, |x, y| [x * y, (3.0 * x).sin() * y]);
        other.set_boundary(&h.trace()).unwrap();
        assert!((gap(&h) - gap(&other)).abs() < 1e-10);
        assert!((gap(&star) - gap(&other)).abs() < 1e-10);
    }

    #[test]
    fn mismatched_initial_trace_is_rejected() {
        let g = Grid::unit_square(10).unwrap();
        let h = BoundaryTrace::constant(g, [1.0, 0.0]);
        let d = VectorField2D::constant(g, [0.0, 1.0]);
        assert!(matches!(
            solve_gradient_flow(&h, &d, &PhysParams::default(), 1e-8),
            Err(Error::Setup { .. })
        ));
    }

    #[test]
    fn equilibrium_is_a_discrete_critical_point() {
        let g = Grid::unit_square(20).unwrap();
        let init = angle_field(g, |x, y| 0.7 * (x + 0.3) * (1.0 - y));
        let p = PhysParams::default();
        let e = solve_equilibrium(&init.trace(), &init, &p, 1e-10).unwrap();
        let defect = critical_point_defect(&e, &p, 20, 3);
        assert!(defect <= 1e-10, "{defect}");
        assert!(h1(&e.psi) > 0.0);
    }
}
