use super::{Grid, ScalarField2D, VectorField2D};
use crate::error::{Error, Result};

/// How [`laplacian`] treats the boundary ring.
#[derive(Debug, Clone, Copy)]
pub enum BoundaryMode<'a> {
    /// Stencils adjacent to the boundary read these values (trace order)
    /// instead of the field's own boundary nodes.
    Dirichlet(&'a [f64]),
    /// Use the field's own boundary values.
    InteriorOnly,
}

/// Five-point Laplacian at interior nodes; boundary entries of `out` are zero.
pub(crate) fn laplacian_interior(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let cx = 1.0 / (grid.hx() * grid.hx());
    let cy = 1.0 / (grid.hy() * grid.hy());
    out[..nx].fill(0.0);
    out[(ny - 1) * nx..].fill(0.0);
    for j in 1..ny - 1 {
        let r = j * nx;
        out[r] = 0.0;
        out[r + nx - 1] = 0.0;
        for i in 1..nx - 1 {
            let k = r + i;
            let c = f[k];
            out[k] = cx * (f[k - 1] - 2.0 * c + f[k + 1]) + cy * (f[k - nx] - 2.0 * c + f[k + nx]);
        }
    }
}

/// Central-difference gradient at interior nodes; boundary entries are zero.
pub(crate) fn central_gradient_interior(grid: &Grid, f: &[f64], gx: &mut [f64], gy: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let ax = 0.5 / grid.hx();
    let ay = 0.5 / grid.hy();
    gx.fill(0.0);
    gy.fill(0.0);
    for j in 1..ny - 1 {
        let r = j * nx;
        for i in 1..nx - 1 {
            let k = r + i;
            gx[k] = ax * (f[k + 1] - f[k - 1]);
            gy[k] = ay * (f[k + nx] - f[k - nx]);
        }
    }
}

pub fn laplacian(f: &ScalarField2D, mode: BoundaryMode<'_>) -> Result<ScalarField2D> {
    let grid = *f.grid();
    let mut out = ScalarField2D::zeros(grid);
    match mode {
        BoundaryMode::InteriorOnly => laplacian_interior(&grid, f.data(), out.data_mut()),
        BoundaryMode::Dirichlet(trace) => {
            let mut g = f.clone();
            g.set_boundary(trace)?;
            laplacian_interior(&grid, g.data(), out.data_mut());
        }
    }
    Ok(out)
}

/// Second-order derivative along one axis of a strided line of values.
#[inline]
fn line_derivative(line: impl Fn(usize) -> f64, n: usize, k: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * line(0) + 4.0 * line(1) - line(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * line(n - 1) - 4.0 * line(n - 2) + line(n - 3)) / (2.0 * h)
    } else {
        (line(k + 1) - line(k - 1)) / (2.0 * h)
    }
}

fn ddx(f: &ScalarField2D) -> ScalarField2D {
    let g = *f.grid();
    let d = f.data();
    let mut out = ScalarField2D::zeros(g);
    let h = g.hx();
    for j in 0..g.ny {
        let r = j * g.nx;
        for i in 0..g.nx {
            out.data_mut()[r + i] = line_derivative(|m| d[r + m], g.nx, i, h);
        }
    }
    out
}

fn ddy(f: &ScalarField2D) -> ScalarField2D {
    let g = *f.grid();
    let d = f.data();
    let mut out = ScalarField2D::zeros(g);
    let h = g.hy();
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.data_mut()[j * g.nx + i] = line_derivative(|m| d[m * g.nx + i], g.ny, j, h);
        }
    }
    out
}

/// Central differences inside, one-sided second-order stencils on the boundary.
pub fn gradient(f: &ScalarField2D) -> VectorField2D {
    VectorField2D {
        comps: [ddx(f), ddy(f)],
    }
}

pub fn divergence(u: &VectorField2D) -> ScalarField2D {
    let mut out = ddx(&u.comps[0]);
    let dy = ddy(&u.comps[1]);
    for (o, b) in out.data_mut().iter_mut().zip(dy.data()) {
        *o += b;
    }
    out
}

/// `(Δd · ∇d)_i = Σ_k Δd_k ∂_i d_k` at interior nodes (zero on the boundary).
///
/// The gradient part `½∇|∇d|²` of `∇·(∇d ⊙ ∇d)` is left to the pressure.
pub fn elastic_stress_divergence(d: &VectorField2D) -> VectorField2D {
    let grid = *d.grid();
    let n = grid.len();
    let mut out = VectorField2D::zeros(grid);
    let mut lap = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    for k in 0..2 {
        laplacian_interior(&grid, d.comps[k].data(), &mut lap);
        central_gradient_interior(&grid, d.comps[k].data(), &mut gx, &mut gy);
        for p in 0..n {
            out.comps[0].data_mut()[p] += lap[p] * gx[p];
            out.comps[1].data_mut()[p] += lap[p] * gy[p];
        }
    }
    out
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "Ginzburg-Landau width must be positive, got {eps}"
        )))
    }
}

/// Pointwise `(|d|² - 1) d / ε²`.
#[inline]
pub fn gl_force(d: [f64; 2], eps: f64) -> [f64; 2] {
    let s = (d[0] * d[0] + d[1] * d[1] - 1.0) / (eps * eps);
    [s * d[0], s * d[1]]
}

/// Pointwise `(|d|² - 1)² / (4 ε²)`.
#[inline]
pub fn gl_potential(d: [f64; 2], eps: f64) -> f64 {
    let s = d[0] * d[0] + d[1] * d[1] - 1.0;
    s * s / (4.0 * eps * eps)
}

/// Jacobian of [`gl_force`]: `((|d|² - 1) I + 2 d dᵀ) / ε²`, as `[a11, a12, a22]`.
#[inline]
pub fn gl_force_jacobian(d: [f64; 2], eps: f64) -> [f64; 3] {
    let e2 = eps * eps;
    let s = d[0] * d[0] + d[1] * d[1] - 1.0;
    [
        (s + 2.0 * d[0] * d[0]) / e2,
        2.0 * d[0] * d[1] / e2,
        (s + 2.0 * d[1] * d[1]) / e2,
    ]
}

pub fn ginzburg_landau_f(d: &VectorField2D, eps: f64) -> Result<VectorField2D> {
    check_eps(eps)?;
    let grid = *d.grid();
    let mut out = VectorField2D::zeros(grid);
    for p in 0..grid.len() {
        let f = gl_force([d.comps[0].data()[p], d.comps[1].data()[p]], eps);
        out.comps[0].data_mut()[p] = f[0];
        out.comps[1].data_mut()[p] = f[1];
    }
    Ok(out)
}

/// The bulk potential `F` whose d-gradient is [`ginzburg_landau_f`].
#[allow(non_snake_case)]
pub fn bulk_potential_F(d: &VectorField2D, eps: f64) -> Result<ScalarField2D> {
    check_eps(eps)?;
    let grid = *d.grid();
    let data = d.comps[0]
        .data()
        .iter()
        .zip(d.comps[1].data())
        .map(|(a, b)| gl_potential([*a, *b], eps))
        .collect();
    ScalarField2D::from_vec(grid, data)
}
