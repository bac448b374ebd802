use super::newton::{gather, jacobian};
use super::{energy_script, Equilibrium};
use crate::diagnostics::norms::{grad_sq, h1, l2_sq};
use crate::dynamics::PhysParams;
use crate::error::{Error, Result};
use crate::grid::{gl_force_jacobian, Grid, VectorField2D};
use crate::lifting::elliptic_lift;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

const PROBE_MODES: usize = 5;

/// Smooth random field with zero boundary values and `‖w‖_{H¹} = norm`:
/// a sum of sine modes with normal coefficients damped by wavenumber.
pub(crate) fn random_probe(grid: &Grid, rng: &mut ChaCha8Rng, norm: f64) -> VectorField2D {
    let mut coef = [[[0.0; PROBE_MODES]; PROBE_MODES]; 2];
    for c in coef.iter_mut() {
        for (k, row) in c.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *v = z / ((k + 1).pow(2) + (l + 1).pow(2)) as f64;
            }
        }
    }
    let (lx, ly) = (grid.lx, grid.ly);
    let mut w = VectorField2D::from_fn(*grid, |x, y| {
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate() {
            for k in 0..PROBE_MODES {
                let sx = ((k + 1) as f64 * PI * x / lx).sin();
                for l in 0..PROBE_MODES {
                    *o += coef[c][k][l] * sx * ((l + 1) as f64 * PI * y / ly).sin();
                }
            }
        }
        out
    });
    w.zero_boundary();
    let n = h1(&w);
    if n > 0.0 {
        w = w.scale(norm / n);
    }
    w
}

/// `⟨(−Δ_h + f′(ψ)) w, w⟩ / ‖w‖²` for zero-trace `w`.
fn rayleigh(psi: &VectorField2D, w: &VectorField2D, eps: f64) -> f64 {
    let grid = psi.grid();
    let mut q = 0.0;
    for p in 0..grid.len() {
        let j = gl_force_jacobian([psi.comps[0].data()[p], psi.comps[1].data()[p]], eps);
        let (a, b) = (w.comps[0].data()[p], w.comps[1].data()[p]);
        q += j[0] * a * a + 2.0 * j[1] * a * b + j[2] * b * b;
    }
    (grad_sq(w) + q * grid.hx() * grid.hy()) / l2_sq(w)
}

#[derive(Debug, Clone)]
pub enum Verdict {
    MinimizerConsistent,
    /// A probe that lowers the energy, and the energy change it causes.
    SaddleDetected {
        witness: VectorField2D,
        gap: f64,
    },
}

#[derive(Debug, Clone)]
pub struct MinimizerVerdict {
    pub verdict: Verdict,
    /// Smallest `𝓔(ψ + w) − 𝓔(ψ)` over the probes (0 without probes).
    pub min_gap: f64,
    /// Smallest Rayleigh quotient of the linearized operator over the probes.
    pub min_rayleigh: f64,
    pub probes: usize,
}

impl MinimizerVerdict {
    pub fn is_minimizer_consistent(&self) -> bool {
        matches!(self.verdict, Verdict::MinimizerConsistent)
    }
}

/// Compares `𝓔(ψ + w)` with `𝓔(ψ)` for `n_probe` random smooth zero-trace
/// `w` with `‖w‖_{H¹} ≤ delta`.
pub fn local_minimizer_check(
    e: &Equilibrium,
    params: &PhysParams,
    n_probe: usize,
    delta: f64,
    seed: u64,
) -> Result<MinimizerVerdict> {
    params.validate()?;
    if !(delta >= 0.0) {
        return Err(Error::Parameter(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let eps = params.eps;
    let grid = *e.grid();
    let d_star = elliptic_lift(&e.psi.trace())?;
    let base = energy_script(&e.psi, &d_star, eps)?;
    let slack = 1e-12 * (1.0 + base.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = 0.0_f64;
    let mut min_rayleigh = f64::INFINITY;
    let mut witness: Option<(VectorField2D, f64)> = None;
    let mut probes = 0;
    if delta > 0.0 {
        for _ in 0..n_probe {
            let radius = delta * rng.gen_range(0.1..=1.0);
            let w = random_probe(&grid, &mut rng, radius);
            min_rayleigh = min_rayleigh.min(rayleigh(&e.psi, &w, eps));
            let gap = energy_script(&e.psi.add(&w)?, &d_star, eps)? - base;
            probes += 1;
            if gap < min_gap {
                min_gap = gap;
                if gap < -slack {
                    witness = Some((w, gap));
                }
            }
        }
    }
    let verdict = match witness {
        Some((witness, gap)) => Verdict::SaddleDetected { witness, gap },
        None => Verdict::MinimizerConsistent,
    };
    Ok(MinimizerVerdict {
        verdict,
        min_gap,
        min_rayleigh,
        probes,
    })
}

/// Smallest eigenvalue of `−Δ_h + f′(ψ)` on interior unknowns, by shifted
/// inverse iteration from below the spectrum.
pub fn lowest_eigenvalue(e: &Equilibrium, params: &PhysParams, max_iter: usize) -> Result<f64> {
    params.validate()?;
    let shift = -1.0 / (params.eps * params.eps) - 1.0;
    let lu = jacobian(&e.psi, params.eps, shift)?;
    let grid = *e.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = gather(&random_probe(&grid, &mut rng, 1.0));
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = norm(&x);
    x.iter_mut().for_each(|a| *a /= n0);
    let mut mu_prev = 0.0;
    for _ in 0..max_iter.max(1) {
        let mut y = x.clone();
        lu.solve_in_place(&mut y);
        let mu: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        x = y.into_iter().map(|a| a / ny).collect();
        if (mu - mu_prev).abs() <= 1e-12 * mu.abs() {
            return Ok(shift + 1.0 / mu);
        }
        mu_prev = mu;
    }
    Ok(shift + 1.0 / mu_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryTrace;
    use crate::steady::{solve_equilibrium, stationary_residual};

    #[test]
    fn probes_have_zero_trace_and_requested_norm() {
        let g = Grid::unit_square(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_probe(&g, &mut rng, 0.3);
        assert_eq!(w.trace().max_norm(), 0.0);
        assert!((h1(&w) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_unit_equilibrium_is_minimizer_consistent() {
        let g = Grid::unit_square(16).unwrap();
        let p = PhysParams::default();
        let e = Equilibrium::from_field(VectorField2D::constant(g, [1.0, 0.0]), &p).unwrap();
        let v = local_minimizer_check(&e, &p, 40, 0.05, 7).unwrap();
        assert!(v.is_minimizer_consistent());
        assert!(v.min_rayleigh > 0.0);
        assert_eq!(v.probes, 40);
    }

    #[test]
    fn zero_director_is_a_saddle_for_small_eps() {
        let g = Grid::unit_square(16).unwrap();
        let p = PhysParams {
            eps: 0.1,
            ..PhysParams::default()
        };
        let e = Equilibrium::from_field(VectorField2D::zeros(g), &p).unwrap();
        assert_eq!(stationary_residual(&e.psi, p.eps), 0.0);
        let v = local_minimizer_check(&e, &p, 10, 0.05, 3).unwrap();
        match v.verdict {
            Verdict::SaddleDetected { gap, ref witness } => {
                assert!(gap < 0.0);
                assert_eq!(witness.trace().max_norm(), 0.0);
            }
            Verdict::MinimizerConsistent => panic!("expected a saddle"),
        }
        assert!(v.min_rayleigh < 0.0);
        assert!(lowest_eigenvalue(&e, &p, 500).unwrap() < 0.0);
    }

    #[test]
    fn zero_radius_is_trivially_consistent() {
        let g = Grid::unit_square(10).unwrap();
        let p = PhysParams::default();
        let e = Equilibrium::from_field(VectorField2D::zeros(g), &p).unwrap();
        let v = local_minimizer_check(&e, &p, 10, 0.0, 3).unwrap();
        assert!(v.is_minimizer_consistent());
        assert_eq!(v.probes, 0);
    }

    #[test]
    fn lowest_eigenvalue_of_dirichlet_laplacian() {
        let g = Grid::unit_square(17).unwrap();
        let p = PhysParams {
            eps: 1e3,
            ..PhysParams::default()
        };
        let mut d = VectorField2D::zeros(g);
        d.set_boundary(&BoundaryTrace::constant(g, [1.0, 0.0]))
            .unwrap();
        let e = solve_equilibrium(&d.trace(), &d, &p, 1e-10).unwrap();
        let lam = lowest_eigenvalue(&e, &p, 2000).unwrap();
        let want = g.dirichlet_lambda_min();
        assert!((lam - want).abs() < 1e-3 * want, "{lam} {want}");
    }
}
