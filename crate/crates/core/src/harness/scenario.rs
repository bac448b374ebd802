use super::config::{Family, ForcingSpec, Scenario};
use crate::diagnostics::norms::{h1, l2};
use crate::diagnostics::RateModel;
use crate::dynamics::{Forcing, SimState, SpaceTimeFn};
use crate::error::{Error, Result};
use crate::grid::{gradient, BoundaryTrace, Grid, ScalarField2D, VectorField2D};
use crate::linsolve::LinearSolver;
use crate::steady::minimizer::random_probe;
use crate::steady::{solve_equilibrium, Equilibrium};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::Arc;

const STREAM_MODES: usize = 4;

/// A ready-to-run initial state with its data and rate model.
#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub state: SimState,
    pub forcing: Forcing,
    pub rate: RateModel,
    /// The equilibrium the minimizer family perturbs.
    pub minimizer: Option<Equilibrium>,
}

fn unit(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

fn rotate(v: [f64; 2], a: f64) -> [f64; 2] {
    let (s, c) = a.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Shapes of the generated data on a `lx × ly` box.
#[derive(Debug, Clone, Copy)]
pub struct Shapes {
    pub lx: f64,
    pub ly: f64,
    pub kappa: f64,
    pub winding: i32,
}

impl Shapes {
    pub fn new(spec: &ForcingSpec, grid: &Grid) -> Self {
        Self {
            lx: grid.lx,
            ly: grid.ly,
            kappa: spec.kappa,
            winding: spec.winding,
        }
    }

    /// Limiting boundary angle. Without winding it is `κ` times the polar
    /// angle about a centre left of the box, so it is smooth inside and has
    /// winding number zero; otherwise the polar angle about the box centre.
    pub fn phi_inf(&self, x: f64, y: f64) -> f64 {
        if self.winding == 0 {
            self.kappa * (y - 0.5 * self.ly).atan2(x + 0.5 * self.lx)
        } else {
            self.winding as f64 * (y - 0.5 * self.ly).atan2(x - 0.5 * self.lx)
        }
    }

    /// Profile of the decaying boundary angle perturbation.
    pub fn psi_b(&self, x: f64, y: f64) -> f64 {
        (PI * (x / self.lx + 2.0 * y / self.ly)).cos()
    }

    /// Interior bump of the initial angle, zero on the boundary.
    pub fn bump(&self, x: f64, y: f64) -> f64 {
        (PI * x / self.lx).sin() * (PI * y / self.ly).sin()
    }

    /// Profile of the body force.
    pub fn g0(&self, x: f64, y: f64) -> [f64; 2] {
        let (sx, sy) = ((PI * x / self.lx).sin(), (PI * y / self.ly).sin());
        [
            sx * sx * (2.0 * PI * y / self.ly).sin(),
            -(2.0 * PI * x / self.lx).sin() * sy * sy,
        ]
    }

    /// Modulus of the initial director: one outside a core around the
    /// centre when the data wind, one everywhere otherwise.
    pub fn core(&self, x: f64, y: f64) -> f64 {
        if self.winding == 0 {
            return 1.0;
        }
        let r = (x - 0.5 * self.lx).hypot(y - 0.5 * self.ly);
        (r / (0.25 * self.lx.min(self.ly))).min(1.0)
    }
}

/// Boundary data `h(t) = (cos φ, sin φ)` with
/// `φ = φ_∞ + a_h (1+t)^{−1−γ} ψ_b`, and body force
/// `g = a_g (1+t)^{−(2+γ)/2} g₀`.
pub fn build_forcing(spec: &ForcingSpec, grid: &Grid) -> Result<Forcing> {
    let sh = Shapes::new(spec, grid);
    let h_inf = BoundaryTrace::from_fn(*grid, |x, y| unit(sh.phi_inf(x, y)));
    if spec.family == Family::Autonomous {
        return Forcing::autonomous(h_inf);
    }
    let (gamma, a_h, a_g) = (spec.gamma, spec.a_h, spec.a_g);
    let h: SpaceTimeFn = Arc::new(move |x, y, t| {
        unit(sh.phi_inf(x, y) + a_h * (1.0 + t).powf(-1.0 - gamma) * sh.psi_b(x, y))
    });
    let g: Option<SpaceTimeFn> = (a_g != 0.0).then(|| -> SpaceTimeFn {
        Arc::new(move |x, y, t| {
            let s = a_g * (1.0 + t).powf(-0.5 * (2.0 + gamma));
            let v = sh.g0(x, y);
            [s * v[0], s * v[1]]
        })
    });
    Forcing::new(h, h_inf, g, gamma)
}

/// Divergence-free velocity `(∂_y ζ, −∂_x ζ)` from a random stream function
/// with a double zero on the boundary, scaled to `‖v‖_{L²} = amplitude`.
pub fn random_velocity(grid: &Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> VectorField2D {
    let mut c = [[0.0; STREAM_MODES]; STREAM_MODES];
    for (k, row) in c.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z / ((k + 1).pow(2) + (l + 1).pow(2)) as f64;
        }
    }
    let (lx, ly) = (grid.lx, grid.ly);
    let zeta = ScalarField2D::from_fn(*grid, |x, y| {
        let mut s = 0.0;
        for (k, row) in c.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                s +=
                    v * ((k + 1) as f64 * PI * x / lx).sin() * ((l + 1) as f64 * PI * y / ly).sin();
            }
        }
        s * (PI * x / lx).sin() * (PI * y / ly).sin()
    });
    let gr = gradient(&zeta);
    let mut v = VectorField2D {
        comps: [gr.comps[1].clone(), gr.comps[0].scale(-1.0)],
    };
    v.zero_boundary();
    let n = l2(&v);
    if n > 0.0 {
        v = v.scale(amplitude / n);
    }
    v
}

fn rotated(base: &VectorField2D, angle: &ScalarField2D) -> VectorField2D {
    let grid = *base.grid();
    let mut out = VectorField2D::zeros(grid);
    for p in 0..grid.len() {
        let r = rotate(
            [base.comps[0].data()[p], base.comps[1].data()[p]],
            angle.data()[p],
        );
        out.comps[0].data_mut()[p] = r[0];
        out.comps[1].data_mut()[p] = r[1];
    }
    out
}

/// `ψ*` rotated pointwise by `a_h ψ_b + s w`, with the largest `s` keeping
/// `‖d₀ − ψ*‖_{H¹} ≤ σ₂`.
fn perturb_minimizer(
    psi: &VectorField2D,
    base_angle: &ScalarField2D,
    w: &ScalarField2D,
    sigma2: f64,
) -> Result<VectorField2D> {
    let at = |s: f64| -> Result<(VectorField2D, f64)> {
        let mut a = base_angle.clone();
        a.axpy(s, w)?;
        let d = rotated(psi, &a);
        let n = h1(&d.sub(psi)?);
        Ok((d, n))
    };
    let (d0, n0) = at(0.0)?;
    if n0 > sigma2 {
        return Err(Error::Setup {
            condition: "||d0 - psi*||_H1 <= sigma2".into(),
            detail: format!("the boundary perturbation alone has H1 distance {n0:.3e} > {sigma2}"),
        });
    }
    let mut hi = 1.0;
    while at(hi)?.1 <= sigma2 {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(d0);
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid)?.1 <= sigma2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(lo)?.0)
}

/// Builds the initial state, data and rate model of a scenario.
///
/// The initial director is `(cos Φ₀, sin Φ₀)` with
/// `Φ₀ = φ_∞ + a_h ψ_b + A·bump`, so it matches `h(0)` on the boundary and
/// has unit length. The minimizer family instead rotates the equilibrium
/// `ψ*` by `a_h ψ_b` plus a random zero-trace angle sized to put `d₀` at
/// `H¹` distance at most `σ₂` from `ψ*`, and sizes `v₀` to `σ₁`.
pub fn generate_scenario(s: &Scenario) -> Result<GeneratedScenario> {
    s.validate()?;
    let grid = s.grid()?;
    let spec = &s.forcing;
    let sh = Shapes::new(spec, &grid);
    let forcing = build_forcing(spec, &grid)?;
    let solver = Arc::new(LinearSolver::new(s.solver_config())?);
    let mut rng = ChaCha8Rng::seed_from_u64(s.run.seed);
    let a_h = if spec.family == Family::Autonomous {
        0.0
    } else {
        spec.a_h
    };
    let amp = s.run.d0_amplitude;

    let guess = VectorField2D::from_fn(grid, |x, y| {
        let u = unit(sh.phi_inf(x, y) + amp * sh.bump(x, y));
        let r = sh.core(x, y);
        [r * u[0], r * u[1]]
    });

    let v_target = match spec.family {
        Family::MinimizerPerturbation => spec.sigma1.min(s.run.v0_amplitude),
        _ => s.run.v0_amplitude,
    };
    let v0 = random_velocity(&grid, &mut rng, v_target);

    let (d0, minimizer) = if spec.family == Family::MinimizerPerturbation {
        let eq = solve_equilibrium(forcing.h_inf(), &guess, &s.params, s.tolerances.equilibrium)?;
        let base = ScalarField2D::from_fn(grid, |x, y| a_h * sh.psi_b(x, y));
        let mut w = random_probe(&grid, &mut rng, 1.0).comps[0].clone();
        let n = h1(&w);
        if n > 0.0 {
            w = w.scale(1.0 / n);
        }
        let d0 = perturb_minimizer(&eq.psi, &base, &w, spec.sigma2)?;
        (d0, Some(eq))
    } else {
        let d0 = VectorField2D::from_fn(grid, |x, y| {
            let u = unit(sh.phi_inf(x, y) + a_h * sh.psi_b(x, y) + amp * sh.bump(x, y));
            let r = sh.core(x, y);
            [r * u[0], r * u[1]]
        });
        (d0, None)
    };

    let mut state = SimState::init_with_solver(v0, d0, forcing.clone(), s.params, s.dt()?, solver)?;
    let n = l2(&state.v);
    if n > 0.0 {
        state.v = state.v.scale(v_target / n);
    }
    if let Some(eq) = &minimizer {
        let dv = l2(&state.v);
        let dd = h1(&state.d.sub(&eq.psi)?);
        if dv > spec.sigma1 * (1.0 + 1e-12) || dd > spec.sigma2 * (1.0 + 1e-12) {
            return Err(Error::Setup {
                condition: "initial data within (sigma1, sigma2) of the minimizer".into(),
                detail: format!("||v0|| = {dv:.3e}, ||d0 - psi*||_H1 = {dd:.3e}"),
            });
        }
    }
    let rate = match spec.family {
        Family::Autonomous => RateModel::autonomous(),
        _ => RateModel::new(spec.gamma)?,
    };
    Ok(GeneratedScenario {
        state,
        forcing,
        rate,
        minimizer,
    })
}

/// Initial guess for the steady solve: the initial director with its
/// boundary values replaced by the limiting data.
pub fn equilibrium_guess(g: &GeneratedScenario) -> Result<VectorField2D> {
    let mut d = g.state.d.clone();
    d.set_boundary(g.forcing.h_inf())?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::GridSpec;
    use crate::linsolve::interior_divergence;

    fn scenario(family: Family) -> Scenario {
        let mut s = Scenario::from_toml("[run]\nname = \"t\"\nt_end = 1.0\n").unwrap();
        s.grid = GridSpec::square(16);
        s.forcing.family = family;
        s.forcing.a_h = 0.2;
        s.forcing.a_g = 0.1;
        s
    }

    #[test]
    fn autonomous_data_are_constant_in_time() {
        let g = generate_scenario(&scenario(Family::Autonomous)).unwrap();
        assert!(g.forcing.is_autonomous());
        assert!(g.rate.exponential_regime);
        let t0 = g.forcing.trace_at(0.0).unwrap();
        let t1 = g.forcing.trace_at(7.0).unwrap();
        assert_eq!(t0.max_abs_diff(&t1).unwrap(), 0.0);
        assert!((g.state.d.max_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_family_is_compatible_and_unit() {
        let g = generate_scenario(&scenario(Family::PolynomialDecay)).unwrap();
        let h0 = g.forcing.trace_at(0.0).unwrap();
        assert!(g.state.d.trace().max_abs_diff(&h0).unwrap() < 1e-12);
        for t in [0.0, 0.5, 3.0, 100.0] {
            let tr = g.forcing.trace_at(t).unwrap();
            assert!(tr
                .values()
                .iter()
                .all(|v| ((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 1e-12));
        }
        assert_eq!(g.rate.theta_prime, 0.25);
        assert!((g.rate.predicted_exponent - 0.5).abs() < 1e-15);
        let late = g.forcing.trace_at(1e6).unwrap();
        assert!(late.max_abs_diff(g.forcing.h_inf()).unwrap() < 1e-15);
        assert!(l2(&g.forcing.body_at(0.0)) > 0.0);
    }

    #[test]
    fn velocity_is_solenoidal_and_sized() {
        let g = generate_scenario(&scenario(Family::PolynomialDecay)).unwrap();
        assert!((l2(&g.state.v) - 0.5).abs() < 1e-12);
        assert!(interior_divergence(&g.state.v).max_abs() < 1e-10);
        assert_eq!(g.state.v.trace().max_norm(), 0.0);
    }

    #[test]
    fn same_seed_same_fields() {
        let s = scenario(Family::PolynomialDecay);
        let a = generate_scenario(&s).unwrap();
        let b = generate_scenario(&s).unwrap();
        assert_eq!(a.state.v.sub(&b.state.v).unwrap().max_norm(), 0.0);
        let mut other = s.clone();
        other.run.seed = 9;
        let c = generate_scenario(&other).unwrap();
        assert!(a.state.v.sub(&c.state.v).unwrap().max_norm() > 0.0);
    }

    #[test]
    fn minimizer_family_respects_radii() {
        let mut s = scenario(Family::MinimizerPerturbation);
        s.forcing.a_h = 0.005;
        s.forcing.sigma1 = 0.05;
        s.forcing.sigma2 = 0.05;
        let g = generate_scenario(&s).unwrap();
        let eq = g.minimizer.as_ref().unwrap();
        let dd = h1(&g.state.d.sub(&eq.psi).unwrap());
        assert!(dd <= 0.05 * (1.0 + 1e-12) && dd > 0.04, "{dd}");
        assert!(l2(&g.state.v) <= 0.05 * (1.0 + 1e-12));
        let h0 = g.forcing.trace_at(0.0).unwrap();
        assert!(g.state.d.trace().max_abs_diff(&h0).unwrap() < 1e-12);
        assert!(g.state.d.max_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn oversized_boundary_perturbation_is_rejected() {
        let mut s = scenario(Family::MinimizerPerturbation);
        s.forcing.a_h = 0.5;
        s.forcing.sigma2 = 0.01;
        assert!(matches!(generate_scenario(&s), Err(Error::Setup { .. })));
    }

    #[test]
    fn winding_data_have_a_core() {
        let mut s = scenario(Family::Autonomous);
        s.forcing.winding = 1;
        let g = generate_scenario(&s).unwrap();
        let c = g.state.d.at(8, 8);
        assert!(c[0].hypot(c[1]) < 0.5);
        assert!(g.state.d.max_norm() <= 1.0 + 1e-12);
    }
}
