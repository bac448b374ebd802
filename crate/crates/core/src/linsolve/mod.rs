//! Linear solves on the interior unknowns of a [`Grid`]: Dirichlet
//! Helmholtz/Poisson problems, backward-Euler heat steps, a pure-Neumann
//! Poisson solve and the discrete pressure projection.
//!
//! Interior unknowns are ordered row-major over the `(nx - 2) x (ny - 2)`
//! interior block. Three interchangeable back ends are available:
//!
//! * [`SolverMethod::Spectral`]: fast diagonalization with cached 1D
//!   eigenbases (default),
//! * [`SolverMethod::DirectBanded`]: banded LU with partial pivoting, with
//!   cached factors,
//! * [`SolverMethod::ConjugateGradient`]: matrix-free CG.
//!
//! The projection removes the part of a velocity field that is a central
//! difference gradient, so its central-difference divergence vanishes at every
//! interior node up to round-off.

mod banded;
mod cg;
mod spectral;

pub use banded::{BandLu, BandMatrix};

use crate::error::{Error, Result};
use crate::grid::{
    central_gradient_interior, laplacian_interior, BoundaryTrace, Grid, ScalarField2D,
    VectorField2D,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use spectral::Basis1D;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Spectral,
    DirectBanded,
    ConjugateGradient,
}

impl SolverMethod {
    pub fn is_direct(self) -> bool {
        !matches!(self, SolverMethod::ConjugateGradient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub method: SolverMethod,
}

impl SolverConfig {
    pub const DIRECT_TOL: f64 = 1e-10;
    pub const ITERATIVE_TOL: f64 = 1e-9;

    pub fn direct() -> Self {
        Self {
            tol: Self::DIRECT_TOL,
            max_iter: 1,
            method: SolverMethod::Spectral,
        }
    }

    pub fn banded() -> Self {
        Self {
            method: SolverMethod::DirectBanded,
            ..Self::direct()
        }
    }

    pub fn iterative() -> Self {
        Self {
            tol: Self::ITERATIVE_TOL,
            max_iter: 20_000,
            method: SolverMethod::ConjugateGradient,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(Error::Parameter(format!(
                "solver tolerance must lie in (0, 1e-4], got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::direct()
    }
}

/// Iteration count and final relative residual of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoissonBoundary {
    /// Boundary values in counterclockwise trace order.
    Dirichlet(Vec<f64>),
    /// Zero normal derivative; the right-hand side must have zero mean.
    Neumann,
}

/// `Δu = rhs` with the given boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonProblem {
    pub rhs: ScalarField2D,
    pub boundary: PoissonBoundary,
}

impl PoissonProblem {
    pub fn dirichlet(rhs: ScalarField2D, trace: Vec<f64>) -> Result<Self> {
        if trace.len() != rhs.grid().boundary_len() {
            return Err(Error::Dimension(format!(
                "boundary trace has {} values, grid expects {}",
                trace.len(),
                rhs.grid().boundary_len()
            )));
        }
        Ok(Self {
            rhs,
            boundary: PoissonBoundary::Dirichlet(trace),
        })
    }

    pub fn neumann(rhs: ScalarField2D) -> Self {
        Self {
            rhs,
            boundary: PoissonBoundary::Neumann,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rhs.grid()
    }
}

/// Result of [`LinearSolver::project`]: `v = u - ∇π` with `π` of zero mean.
#[derive(Debug, Clone)]
pub struct Projection {
    pub v: VectorField2D,
    pub pi: ScalarField2D,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    /// Five-point `-Δ_h` with zero Dirichlet data.
    FivePoint,
    /// `-D D*` with the central-difference divergence `D`.
    Wide,
}

type BasisKey = (Op, usize, u64);
type FactorKey = (Op, usize, usize, u64, u64, u64, u64);

/// A solver with a fixed configuration that caches eigenbases and banded
/// factorizations across calls. Safe to share between threads.
#[derive(Debug)]
pub struct LinearSolver {
    cfg: SolverConfig,
    bases: Mutex<HashMap<BasisKey, Arc<Basis1D>>>,
    neumann: Mutex<HashMap<(usize, u64), Arc<Basis1D>>>,
    factors: Mutex<HashMap<FactorKey, Arc<BandLu>>>,
}

impl LinearSolver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            bases: Mutex::new(HashMap::new()),
            neumann: Mutex::new(HashMap::new()),
            factors: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn basis(&self, op: Op, m: usize, h: f64) -> Arc<Basis1D> {
        let key = (op, m, h.to_bits());
        if let Some(b) = self.bases.lock().unwrap().get(&key) {
            return b.clone();
        }
        let b = Arc::new(match op {
            Op::FivePoint => Basis1D::dirichlet(m, h),
            Op::Wide => Basis1D::wide(m, h),
        });
        self.bases.lock().unwrap().insert(key, b.clone());
        b
    }

    fn neumann_basis(&self, n: usize, h: f64) -> Arc<Basis1D> {
        let key = (n, h.to_bits());
        if let Some(b) = self.neumann.lock().unwrap().get(&key) {
            return b.clone();
        }
        let b = Arc::new(Basis1D::neumann(n, h));
        self.neumann.lock().unwrap().insert(key, b.clone());
        b
    }

    fn factor(&self, op: Op, grid: &Grid, alpha: f64, beta: f64) -> Result<Arc<BandLu>> {
        let key = (
            op,
            grid.nx,
            grid.ny,
            grid.lx.to_bits(),
            grid.ly.to_bits(),
            alpha.to_bits(),
            beta.to_bits(),
        );
        if let Some(f) = self.factors.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let (mx, my) = grid.interior_dims();
        let (ax, ay) = match op {
            Op::FivePoint => (
                spectral::dirichlet_1d(mx, grid.hx()),
                spectral::dirichlet_1d(my, grid.hy()),
            ),
            Op::Wide => (
                spectral::wide_1d(mx, grid.hx()),
                spectral::wide_1d(my, grid.hy()),
            ),
        };
        let mut band = assemble_kronecker(&ax, &ay, alpha, beta);
        if let Some(p) = singular_pin(op, grid, alpha) {
            band.pin_row(p);
        }
        let lu = Arc::new(band.factor()?);
        self.factors.lock().unwrap().insert(key, lu.clone());
        Ok(lu)
    }

    /// Solves `(α + β A) x = b` on interior unknowns.
    fn solve_interior(
        &self,
        op: Op,
        grid: &Grid,
        alpha: f64,
        beta: f64,
        b: &[f64],
    ) -> Result<(Vec<f64>, SolveStats)> {
        let (mx, my) = grid.interior_dims();
        let apply = |x: &[f64], y: &mut [f64]| apply_op(op, grid, alpha, beta, x, y);
        let x = match self.cfg.method {
            SolverMethod::Spectral => {
                let bx = self.basis(op, mx, grid.hx());
                let by = self.basis(op, my, grid.hy());
                spectral::solve(&bx, &by, alpha, beta, b)
            }
            SolverMethod::DirectBanded => {
                let lu = self.factor(op, grid, alpha, beta)?;
                let mut x = b.to_vec();
                if let Some(p) = singular_pin(op, grid, alpha) {
                    x[p] = 0.0;
                }
                lu.solve_in_place(&mut x);
                x
            }
            SolverMethod::ConjugateGradient => {
                let mut x = vec![0.0; b.len()];
                let (iterations, residual) =
                    cg::solve(apply, b, &mut x, self.cfg.tol, self.cfg.max_iter)?;
                return Ok((
                    x,
                    SolveStats {
                        iterations,
                        residual,
                    },
                ));
            }
        };
        let residual = relative_residual(apply, &x, b);
        if residual > self.cfg.tol {
            return Err(Error::Solver {
                iterations: 1,
                residual,
            });
        }
        Ok((
            x,
            SolveStats {
                iterations: 1,
                residual,
            },
        ))
    }

    /// Solves `(α I − β Δ_h) u = rhs` at interior nodes with `u = boundary`
    /// (trace order) on the boundary ring. Boundary entries of `rhs` are ignored.
    pub fn helmholtz(
        &self,
        alpha: f64,
        beta: f64,
        rhs: &ScalarField2D,
        boundary: &[f64],
    ) -> Result<(ScalarField2D, SolveStats)> {
        let grid = *rhs.grid();
        if boundary.len() != grid.boundary_len() {
            return Err(Error::Dimension(format!(
                "boundary trace has {} values, grid expects {}",
                boundary.len(),
                grid.boundary_len()
            )));
        }
        let mut b = rhs.interior();
        if boundary.iter().any(|v| *v != 0.0) {
            let mut g = ScalarField2D::zeros(grid);
            g.set_boundary(boundary)?;
            let mut lap = vec![0.0; grid.len()];
            laplacian_interior(&grid, g.data(), &mut lap);
            let lap = ScalarField2D::from_vec(grid, lap)?.interior();
            for (bi, li) in b.iter_mut().zip(lap) {
                *bi += beta * li;
            }
        }
        let (x, stats) = self.solve_interior(Op::FivePoint, &grid, alpha, beta, &b)?;
        Ok((ScalarField2D::from_interior(grid, &x, boundary)?, stats))
    }

    /// Componentwise [`Self::helmholtz`]; a missing trace means zero boundary values.
    pub fn helmholtz_vector(
        &self,
        alpha: f64,
        beta: f64,
        rhs: &VectorField2D,
        trace: Option<&BoundaryTrace>,
    ) -> Result<VectorField2D> {
        let grid = *rhs.grid();
        let mut comps = Vec::with_capacity(2);
        for k in 0..2 {
            let bvals = match trace {
                Some(t) => {
                    grid.check_same(t.grid())?;
                    t.component(k)
                }
                None => vec![0.0; grid.boundary_len()],
            };
            comps.push(self.helmholtz(alpha, beta, &rhs.comps[k], &bvals)?.0);
        }
        let c1 = comps.pop().unwrap();
        let c0 = comps.pop().unwrap();
        VectorField2D::new(c0, c1)
    }

    pub fn solve_poisson(&self, p: &PoissonProblem) -> Result<(ScalarField2D, SolveStats)> {
        match &p.boundary {
            PoissonBoundary::Dirichlet(trace) => {
                self.helmholtz(0.0, 1.0, &p.rhs.scale(-1.0), trace)
            }
            PoissonBoundary::Neumann => self.solve_neumann(&p.rhs),
        }
    }

    /// `Δu = rhs` on all nodes with reflected boundary stencils. The
    /// right-hand side must have zero trapezoid mean; the solution has zero mean.
    /// Always solved in the cached eigenbasis.
    pub fn solve_neumann(&self, rhs: &ScalarField2D) -> Result<(ScalarField2D, SolveStats)> {
        let grid = *rhs.grid();
        let mean = rhs.mean();
        if mean.abs() > 1e-10 * rhs.max_abs().max(1.0) {
            return Err(Error::Incompatible(format!(
                "pure-Neumann right-hand side has mean {mean:.3e}"
            )));
        }
        let bx = self.neumann_basis(grid.nx, grid.hx());
        let by = self.neumann_basis(grid.ny, grid.hy());
        let neg: Vec<f64> = rhs.data().iter().map(|v| -v).collect();
        let x = spectral::solve(&bx, &by, 0.0, 1.0, &neg);
        let mut u = ScalarField2D::from_vec(grid, x)?;
        let m = u.mean();
        u.data_mut().iter_mut().for_each(|v| *v -= m);
        Ok((
            u,
            SolveStats {
                iterations: 1,
                residual: 0.0,
            },
        ))
    }

    /// One backward-Euler step of `∂_t w = Δw` with `w = trace` on the boundary.
    pub fn heat_step(
        &self,
        u: &VectorField2D,
        trace: &BoundaryTrace,
        dt: f64,
    ) -> Result<VectorField2D> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        self.helmholtz_vector(1.0, dt, u, Some(trace))
    }

    /// Removes the discrete gradient part of `u`. Boundary values of `u` are
    /// kept as they are; the caller is responsible for no-slip data.
    pub fn project(&self, u: &VectorField2D) -> Result<Projection> {
        let grid = *u.grid();
        let div = interior_divergence(u);
        let b: Vec<f64> = div.interior().iter().map(|v| -v).collect();
        let (x, stats) = self.solve_interior(Op::Wide, &grid, 0.0, 1.0, &b)?;
        let zeros = vec![0.0; grid.boundary_len()];
        let mut pi = ScalarField2D::from_interior(grid, &x, &zeros)?;
        let n = grid.len();
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        central_gradient_interior(&grid, pi.data(), &mut gx, &mut gy);
        let mut v = u.clone();
        for p in 0..n {
            v.comps[0].data_mut()[p] -= gx[p];
            v.comps[1].data_mut()[p] -= gy[p];
        }
        let m = pi.mean();
        pi.data_mut().iter_mut().for_each(|q| *q -= m);
        Ok(Projection { v, pi, stats })
    }
}

/// Central-difference divergence at interior nodes (zero on the boundary ring).
/// This is the divergence that [`LinearSolver::project`] annihilates.
pub fn interior_divergence(u: &VectorField2D) -> ScalarField2D {
    let grid = *u.grid();
    let (nx, ny) = (grid.nx, grid.ny);
    let (ax, ay) = (0.5 / grid.hx(), 0.5 / grid.hy());
    let (u0, u1) = (u.comps[0].data(), u.comps[1].data());
    let mut out = ScalarField2D::zeros(grid);
    let d = out.data_mut();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            d[k] = ax * (u0[k + 1] - u0[k - 1]) + ay * (u1[k + nx] - u1[k - nx]);
        }
    }
    out
}

/// Row of the odd-odd null vector that is pinned when the wide operator is
/// singular (both interior counts odd and no shift).
fn singular_pin(op: Op, grid: &Grid, alpha: f64) -> Option<usize> {
    let (mx, my) = grid.interior_dims();
    (op == Op::Wide && alpha == 0.0 && mx % 2 == 1 && my % 2 == 1).then_some(0)
}

fn bandwidth(a: &DMatrix<f64>) -> usize {
    let mut bw = 0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                bw = bw.max(i.abs_diff(j));
            }
        }
    }
    bw
}

fn assemble_kronecker(ax: &DMatrix<f64>, ay: &DMatrix<f64>, alpha: f64, beta: f64) -> BandMatrix {
    let (mx, my) = (ax.nrows(), ay.nrows());
    let (bwx, bwy) = (bandwidth(ax), bandwidth(ay));
    let k = bwx.max(bwy * mx);
    let mut band = BandMatrix::zeros(mx * my, k, k);
    for j in 0..my {
        for i in 0..mx {
            let p = j * mx + i;
            band.add(p, p, alpha);
            for i2 in i.saturating_sub(bwx)..=(i + bwx).min(mx - 1) {
                let v = ax[(i, i2)];
                if v != 0.0 {
                    band.add(p, j * mx + i2, beta * v);
                }
            }
            for j2 in j.saturating_sub(bwy)..=(j + bwy).min(my - 1) {
                let v = ay[(j, j2)];
                if v != 0.0 {
                    band.add(p, j2 * mx + i, beta * v);
                }
            }
        }
    }
    band
}

fn apply_op(op: Op, grid: &Grid, alpha: f64, beta: f64, x: &[f64], y: &mut [f64]) {
    let (mx, my) = grid.interior_dims();
    let at = |v: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= mx as isize || j >= my as isize {
            0.0
        } else {
            v[j as usize * mx + i as usize]
        }
    };
    match op {
        Op::FivePoint => {
            let cx = 1.0 / (grid.hx() * grid.hx());
            let cy = 1.0 / (grid.hy() * grid.hy());
            for j in 0..my as isize {
                for i in 0..mx as isize {
                    let c = at(x, i, j);
                    let lap = cx * (at(x, i - 1, j) - 2.0 * c + at(x, i + 1, j))
                        + cy * (at(x, i, j - 1) - 2.0 * c + at(x, i, j + 1));
                    y[j as usize * mx + i as usize] = alpha * c - beta * lap;
                }
            }
        }
        Op::Wide => {
            let (ax, ay) = (0.5 / grid.hx(), 0.5 / grid.hy());
            let n = mx * my;
            let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
            for j in 0..my as isize {
                for i in 0..mx as isize {
                    let p = j as usize * mx + i as usize;
                    gx[p] = ax * (at(x, i + 1, j) - at(x, i - 1, j));
                    gy[p] = ay * (at(x, i, j + 1) - at(x, i, j - 1));
                }
            }
            for j in 0..my as isize {
                for i in 0..mx as isize {
                    let p = j as usize * mx + i as usize;
                    let dd = ax * (at(&gx, i + 1, j) - at(&gx, i - 1, j))
                        + ay * (at(&gy, i, j + 1) - at(&gy, i, j - 1));
                    y[p] = alpha * x[p] - beta * dd;
                }
            }
        }
    }
}

fn relative_residual(apply: impl Fn(&[f64], &mut [f64]), x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; x.len()];
    apply(x, &mut ax);
    let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum();
    let bn = cg::dot(b, b);
    if bn == 0.0 {
        r.sqrt()
    } else {
        (r / bn).sqrt()
    }
}

/// `Δu = rhs` with Dirichlet data.
pub fn solve_poisson_dirichlet(p: &PoissonProblem, cfg: &SolverConfig) -> Result<ScalarField2D> {
    if !matches!(p.boundary, PoissonBoundary::Dirichlet(_)) {
        return Err(Error::Parameter(
            "solve_poisson_dirichlet needs a Dirichlet trace".into(),
        ));
    }
    Ok(LinearSolver::new(*cfg)?.solve_poisson(p)?.0)
}

pub fn heat_step(
    u: &VectorField2D,
    trace: &BoundaryTrace,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<VectorField2D> {
    LinearSolver::new(*cfg)?.heat_step(u, trace, dt)
}

pub fn project_divergence_free(
    u: &VectorField2D,
    cfg: &SolverConfig,
) -> Result<(VectorField2D, ScalarField2D)> {
    let p = LinearSolver::new(*cfg)?.project(u)?;
    Ok((p.v, p.pi))
}

/// L² norm over interior nodes of `−Δ_h v + ∇_h π − rhs`.
pub fn stokes_residual(v: &VectorField2D, pi: &ScalarField2D, rhs: &VectorField2D) -> Result<f64> {
    let grid = *v.grid();
    grid.check_same(pi.grid())?;
    grid.check_same(rhs.grid())?;
    let n = grid.len();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    central_gradient_interior(&grid, pi.data(), &mut gx, &mut gy);
    let grads = [gx, gy];
    let mut lap = vec![0.0; n];
    let w = grid.hx() * grid.hy();
    let mut s = 0.0;
    for k in 0..2 {
        laplacian_interior(&grid, v.comps[k].data(), &mut lap);
        let f = rhs.comps[k].data();
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                let p = grid.idx(i, j);
                let r = -lap[p] + grads[k][p] - f[p];
                s += w * r * r;
            }
        }
    }
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn all_methods() -> [SolverConfig; 3] {
        [
            SolverConfig::direct(),
            SolverConfig::banded(),
            SolverConfig::iterative().with_tol(1e-13),
        ]
    }

    fn random_velocity(grid: Grid, seed: u64) -> VectorField2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = VectorField2D::zeros(grid);
        for c in &mut u.comps {
            for v in c.data_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        u.zero_boundary();
        u
    }

    fn dot_interior(a: &VectorField2D, b: &VectorField2D) -> f64 {
        let g = a.grid();
        let mut s = 0.0;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let (x, y) = (a.at(i, j), b.at(i, j));
                s += x[0] * y[0] + x[1] * y[1];
            }
        }
        s * g.hx() * g.hy()
    }

    #[test]
    fn harmonic_linear_is_reproduced() {
        let g = Grid::unit_square(12).unwrap();
        let exact = ScalarField2D::from_fn(g, |x, y| x + y);
        for cfg in all_methods() {
            let p = PoissonProblem::dirichlet(ScalarField2D::zeros(g), exact.boundary_values())
                .unwrap();
            let u = solve_poisson_dirichlet(&p, &cfg).unwrap();
            assert!(u.sub(&exact).unwrap().max_abs() < 1e-10, "{cfg:?}");
        }
    }

    #[test]
    fn constant_trace_gives_constant() {
        let g = Grid::new(9, 13, 1.0, 2.0).unwrap();
        let p = PoissonProblem::dirichlet(ScalarField2D::zeros(g), vec![0.7; g.boundary_len()])
            .unwrap();
        let u = solve_poisson_dirichlet(&p, &SolverConfig::default()).unwrap();
        assert!(u.data().iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn sine_problem_matches_dense_oracle_and_analytic_solution() {
        let g = Grid::unit_square(16).unwrap();
        let rhs =
            ScalarField2D::from_fn(g, |x, y| -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
        let p = PoissonProblem::dirichlet(rhs.clone(), vec![0.0; g.boundary_len()]).unwrap();
        let u = solve_poisson_dirichlet(&p, &SolverConfig::default()).unwrap();

        let (mx, my) = g.interior_dims();
        let n = mx * my;
        let c = 1.0 / (g.hx() * g.hx());
        let a = DMatrix::from_fn(n, n, |p, q| {
            let (i, j, k, l) = (p % mx, p / mx, q % mx, q / mx);
            if p == q {
                -4.0 * c
            } else if (i == k && j.abs_diff(l) == 1) || (j == l && i.abs_diff(k) == 1) {
                c
            } else {
                0.0
            }
        });
        let dense = a.lu().solve(&DVector::from_vec(rhs.interior())).unwrap();
        for (x, y) in u.interior().iter().zip(dense.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
        let exact = ScalarField2D::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!(u.sub(&exact).unwrap().max_abs() < 1e-2);
    }

    #[test]
    fn methods_agree_on_helmholtz() {
        for n in [16, 32] {
            let g = Grid::new(n, n - 3, 1.0, 0.8).unwrap();
            let rhs = ScalarField2D::from_fn(g, |x, y| (3.0 * x).exp() * (5.0 * y).cos());
            let trace: Vec<f64> = (0..g.boundary_len())
                .map(|k| (k as f64 * 0.1).sin())
                .collect();
            let sols: Vec<ScalarField2D> = all_methods()
                .iter()
                .map(|cfg| {
                    let s = LinearSolver::new(*cfg).unwrap();
                    s.helmholtz(1.0, 0.01, &rhs, &trace).unwrap().0
                })
                .collect();
            let scale = sols[0].max_abs();
            for s in &sols[1..] {
                assert!(s.sub(&sols[0]).unwrap().max_abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn heat_step_fixed_point_and_decay() {
        let g = Grid::unit_square(24).unwrap();
        let harmonic = VectorField2D::from_fn(g, |x, y| [x - y, 2.0 * x * y]);
        let next = heat_step(&harmonic, &harmonic.trace(), 0.1, &SolverConfig::default()).unwrap();
        assert!(next.sub(&harmonic).unwrap().max_norm() < 1e-10);

        let dt = 0.01;
        let mode = VectorField2D::from_fn(g, |x, y| [(PI * x).sin() * (PI * y).sin(), 0.0]);
        let zero = BoundaryTrace::constant(g, [0.0, 0.0]);
        let next = heat_step(&mode, &zero, dt, &SolverConfig::default()).unwrap();
        let ratio = next.comps[0].get(12, 12) / mode.comps[0].get(12, 12);
        let expected = 1.0 / (1.0 + 2.0 * PI * PI * dt);
        assert!((ratio - expected).abs() < 2e-3, "{ratio} vs {expected}");
        assert!(next.comps[1].max_abs() == 0.0);
    }

    #[test]
    fn heat_step_is_consistent_as_dt_vanishes() {
        let g = Grid::unit_square(16).unwrap();
        let u = VectorField2D::from_fn(g, |x, y| [(x * y).sin(), x * x]);
        let tr = u.trace();
        let mut prev = f64::INFINITY;
        for dt in [1e-2, 1e-3, 1e-4] {
            let d = heat_step(&u, &tr, dt, &SolverConfig::default())
                .unwrap()
                .sub(&u)
                .unwrap()
                .max_norm();
            assert!(d <= 5.0 * dt && d < prev);
            prev = d;
        }
        assert!(heat_step(&u, &tr, 0.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn projection_on_small_grid_is_divergence_free() {
        let g = Grid::unit_square(8).unwrap();
        for cfg in all_methods() {
            for seed in 0..5 {
                let u = random_velocity(g, seed);
                let (v, pi) = project_divergence_free(&u, &cfg).unwrap();
                assert!(interior_divergence(&v).max_abs() <= 1e-10, "{cfg:?}");
                assert!(pi.mean().abs() < 1e-12);
                assert!(v.trace().max_norm() == 0.0);
            }
        }
    }

    #[test]
    fn projection_handles_singular_odd_grids() {
        let g = Grid::new(9, 11, 1.0, 1.0).unwrap();
        for cfg in all_methods() {
            let u = random_velocity(g, 3);
            let (v, _) = project_divergence_free(&u, &cfg).unwrap();
            assert!(interior_divergence(&v).max_abs() <= 1e-9, "{cfg:?}");
        }
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let g = Grid::new(20, 17, 1.0, 0.9).unwrap();
        let s = LinearSolver::new(SolverConfig::default()).unwrap();
        let u = random_velocity(g, 11);
        let p = s.project(&u).unwrap();
        let again = s.project(&p.v).unwrap();
        assert!(again.v.sub(&p.v).unwrap().max_norm() <= 2e-10);
        let grad = u.sub(&p.v).unwrap();
        let ip = dot_interior(&p.v, &grad);
        let nv = dot_interior(&p.v, &p.v).sqrt();
        let ng = dot_interior(&grad, &grad).sqrt();
        assert!(ip.abs() <= 1e-10 * nv * ng);
        assert!(nv <= dot_interior(&u, &u).sqrt());
    }

    #[test]
    fn pure_gradient_projects_to_zero() {
        let g = Grid::unit_square(24).unwrap();
        let q = ScalarField2D::from_fn(g, |x, y| (PI * x).sin().powi(2) * (PI * y).sin().powi(2));
        let n = g.len();
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        central_gradient_interior(&g, q.data(), &mut gx, &mut gy);
        let u = VectorField2D::new(
            ScalarField2D::from_vec(g, gx).unwrap(),
            ScalarField2D::from_vec(g, gy).unwrap(),
        )
        .unwrap();
        let (v, _) = project_divergence_free(&u, &SolverConfig::default()).unwrap();
        assert!(v.max_norm() <= 1e-10 * u.max_norm().max(1.0));
    }

    #[test]
    fn methods_agree_on_projection() {
        let g = Grid::unit_square(32).unwrap();
        let u = random_velocity(g, 5);
        let vs: Vec<VectorField2D> = all_methods()
            .iter()
            .map(|c| project_divergence_free(&u, c).unwrap().0)
            .collect();
        for v in &vs[1..] {
            assert!(v.sub(&vs[0]).unwrap().max_norm() <= 1e-8 * vs[0].max_norm());
        }
    }

    #[test]
    fn neumann_solve_is_zero_mean_and_rejects_incompatible_data() {
        let g = Grid::new(17, 13, 1.0, 1.5).unwrap();
        let rhs = ScalarField2D::from_fn(g, |x, y| (PI * x).cos() * (2.0 * PI * y / 1.5).cos());
        let s = LinearSolver::new(SolverConfig::default()).unwrap();
        let (u, _) = s
            .solve_poisson(&PoissonProblem::neumann(rhs.clone()))
            .unwrap();
        assert!(u.mean().abs() < 1e-12);
        let exact_scale = -1.0 / (PI * PI + (2.0 * PI / 1.5).powi(2));
        let exact = rhs.scale(exact_scale);
        assert!(u.sub(&exact).unwrap().max_abs() < 2e-2 * exact.max_abs());
        let shifted = rhs.map(|v| v + 0.3);
        assert!(matches!(
            s.solve_poisson(&PoissonProblem::neumann(shifted)),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn stokes_residual_cases() {
        let g = Grid::unit_square(16).unwrap();
        let zero_v = VectorField2D::zeros(g);
        let zero_p = ScalarField2D::zeros(g);
        assert_eq!(stokes_residual(&zero_v, &zero_p, &zero_v).unwrap(), 0.0);

        let delta = VectorField2D::from_fn(g, |x, y| [x * y, 1.0 - x]);
        let r = stokes_residual(&zero_v, &zero_p, &delta).unwrap();
        let norm = dot_interior(&delta, &delta).sqrt();
        assert!((r - norm).abs() < 1e-12);

        let err = |n: usize| {
            let g = Grid::unit_square(n).unwrap();
            let s = |x: f64| (PI * x).sin();
            let c = |x: f64| (PI * x).cos();
            let v = VectorField2D::from_fn(g, |x, y| {
                [s(x).powi(2) * s(2.0 * y), -s(2.0 * x) * s(y).powi(2)]
            });
            let pi = ScalarField2D::from_fn(g, |x, y| c(x) * c(y));
            let rhs = VectorField2D::from_fn(g, |x, y| {
                let (sx, sy, cx, cy) = (s(x), s(y), c(x), c(y));
                let p2 = PI * PI;
                let lap1 =
                    2.0 * p2 * (cx * cx - sx * sx) * s(2.0 * y) - 4.0 * p2 * sx * sx * s(2.0 * y);
                let lap2 =
                    4.0 * p2 * s(2.0 * x) * sy * sy - 2.0 * p2 * s(2.0 * x) * (cy * cy - sy * sy);
                [-lap1 - PI * sx * cy, -lap2 - PI * cx * sy]
            });
            stokes_residual(&v, &pi, &rhs).unwrap()
        };
        let ratio = err(24) / err(48);
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }
}
