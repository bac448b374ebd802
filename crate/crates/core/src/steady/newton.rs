use super::{energy_e, energy_script, stationary_residual, Equilibrium};
use crate::dynamics::{molecular_field, PhysParams};
use crate::error::{Error, Result};
use crate::grid::{gl_force_jacobian, Grid, VectorField2D};
use crate::lifting::elliptic_lift;
use crate::linsolve::{BandLu, BandMatrix};

/// Largest starting residual accepted by [`newton_refine`].
pub const NEWTON_START_MAX: f64 = 1e-2;
const MAX_NEWTON: usize = 30;

/// Unknown index of component `c` at interior node `(i, j)`.
fn unknown(grid: &Grid, i: usize, j: usize, c: usize) -> usize {
    let mx = grid.nx - 2;
    2 * ((j - 1) * mx + (i - 1)) + c
}

/// Banded factorization of `−Δ_h + f′(ψ)` on interior unknowns, with the two
/// components of each node interleaved, shifted by `shift · I`.
pub(super) fn jacobian(psi: &VectorField2D, eps: f64, shift: f64) -> Result<BandLu> {
    let grid = *psi.grid();
    let (mx, my) = grid.interior_dims();
    let n = 2 * mx * my;
    let band = 2 * mx;
    let cx = 1.0 / grid.hx().powi(2);
    let cy = 1.0 / grid.hy().powi(2);
    let mut a = BandMatrix::zeros(n, band, band);
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let p = grid.idx(i, j);
            let jac = gl_force_jacobian([psi.comps[0].data()[p], psi.comps[1].data()[p]], eps);
            let r0 = unknown(&grid, i, j, 0);
            a.add(r0, r0, jac[0]);
            a.add(r0, r0 + 1, jac[1]);
            a.add(r0 + 1, r0, jac[1]);
            a.add(r0 + 1, r0 + 1, jac[2]);
            for c in 0..2 {
                let r = r0 + c;
                a.add(r, r, 2.0 * cx + 2.0 * cy - shift);
                if i > 1 {
                    a.add(r, unknown(&grid, i - 1, j, c), -cx);
                }
                if i < grid.nx - 2 {
                    a.add(r, unknown(&grid, i + 1, j, c), -cx);
                }
                if j > 1 {
                    a.add(r, unknown(&grid, i, j - 1, c), -cy);
                }
                if j < grid.ny - 2 {
                    a.add(r, unknown(&grid, i, j + 1, c), -cy);
                }
            }
        }
    }
    a.factor()
}

/// Interior values of `(f0, f1)` in interleaved unknown order.
pub(super) fn gather(f: &VectorField2D) -> Vec<f64> {
    let grid = *f.grid();
    let (mx, my) = grid.interior_dims();
    let mut out = vec![0.0; 2 * mx * my];
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let p = grid.idx(i, j);
            for c in 0..2 {
                out[unknown(&grid, i, j, c)] = f.comps[c].data()[p];
            }
        }
    }
    out
}

/// Adds `s · x` (interleaved interior values) into `f`.
pub(super) fn scatter_add(f: &mut VectorField2D, x: &[f64], s: f64) {
    let grid = *f.grid();
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let p = grid.idx(i, j);
            for c in 0..2 {
                f.comps[c].data_mut()[p] += s * x[unknown(&grid, i, j, c)];
            }
        }
    }
}

/// Newton iteration on `−Δψ + f(ψ) = 0` with fixed boundary values, with
/// step halving whenever a full step would increase the residual.
pub fn newton_refine(e: &Equilibrium, params: &PhysParams, tol: f64) -> Result<Equilibrium> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let eps = params.eps;
    let mut psi = e.psi.clone();
    let mut res = stationary_residual(&psi, eps);
    if res > NEWTON_START_MAX {
        return Err(Error::Parameter(format!(
            "starting residual {res:.3e} exceeds {NEWTON_START_MAX:e}; relax with the gradient flow first"
        )));
    }
    let mut history = vec![res];
    let mut k = 0;
    while res > tol && k < MAX_NEWTON {
        let lu = jacobian(&psi, eps, 0.0).map_err(|err| match err {
            Error::Singular(p) => Error::DegenerateCriticalPoint(p),
            other => other,
        })?;
        // The molecular field is Δψ − f(ψ), the negated residual.
        let mut step = gather(&molecular_field(&psi, &psi, eps));
        lu.solve_in_place(&mut step);
        let mut s = 1.0;
        let accepted = loop {
            let mut trial = psi.clone();
            scatter_add(&mut trial, &step, s);
            let r = stationary_residual(&trial, eps);
            if r < res || s < 1e-3 {
                break (trial, r);
            }
            s *= 0.5;
        };
        psi = accepted.0;
        res = accepted.1;
        history.push(res);
        k += 1;
    }
    let d_star = elliptic_lift(&psi.trace())?;
    Ok(Equilibrium {
        energy_e: energy_e(&psi, eps)?,
        energy_script: energy_script(&psi, &d_star, eps)?,
        converged: res <= tol,
        residual: res,
        iterations: e.iterations + k,
        history: e
            .history
            .iter()
            .copied()
            .chain(history.into_iter().skip(1))
            .collect(),
        psi,
    })
}
