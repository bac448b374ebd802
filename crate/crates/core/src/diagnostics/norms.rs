use crate::error::{Error, Result};
use crate::grid::{laplacian_interior, ScalarField2D, VectorField2D};
use crate::linsolve::{LinearSolver, SolverConfig};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1,
    /// `H1` plus the interior five-point Laplacian.
    H2,
    /// `‖∇u_z‖` with `−Δu_z = field` and zero boundary values.
    Hminus1,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Self::L2),
            "h1" => Ok(Self::H1),
            "h2" => Ok(Self::H2),
            "hminus1" | "h-1" => Ok(Self::Hminus1),
            other => Err(Error::Parameter(format!(
                "unknown norm kind `{other}` (expected l2, h1, h2, hminus1)"
            ))),
        }
    }
}

/// Scalar components of a field, so norms treat scalars and vectors alike.
pub trait Components {
    fn components(&self) -> &[ScalarField2D];
}

impl Components for ScalarField2D {
    fn components(&self) -> &[ScalarField2D] {
        std::slice::from_ref(self)
    }
}

impl Components for VectorField2D {
    fn components(&self) -> &[ScalarField2D] {
        &self.comps
    }
}

/// Trapezoid `∫ f²`.
pub fn l2_sq_scalar(f: &ScalarField2D) -> f64 {
    let g = f.grid();
    let d = f.data();
    let mut s = 0.0;
    for j in 0..g.ny {
        let wy = g.wy(j);
        for i in 0..g.nx {
            let v = d[j * g.nx + i];
            s += g.wx(i) * wy * v * v;
        }
    }
    s
}

/// Trapezoid `∫ f`.
pub fn integral(f: &ScalarField2D) -> f64 {
    let g = f.grid();
    let d = f.data();
    let mut s = 0.0;
    for j in 0..g.ny {
        let wy = g.wy(j);
        for i in 0..g.nx {
            s += g.wx(i) * wy * d[j * g.nx + i];
        }
    }
    s
}

/// Squared gradient norm built from forward differences on grid edges: the
/// midpoint rule along each edge and the trapezoid rule across. For fields
/// with zero boundary values this equals `⟨−Δ_h u, u⟩`.
pub fn grad_sq_scalar(f: &ScalarField2D) -> f64 {
    let g = f.grid();
    let d = f.data();
    let (hx, hy) = (g.hx(), g.hy());
    let mut s = 0.0;
    for j in 0..g.ny {
        let w = g.wy(j) / hx;
        let r = j * g.nx;
        for i in 0..g.nx - 1 {
            let e = d[r + i + 1] - d[r + i];
            s += w * e * e;
        }
    }
    for j in 0..g.ny - 1 {
        let r = j * g.nx;
        for i in 0..g.nx {
            let e = d[r + g.nx + i] - d[r + i];
            s += g.wx(i) / hy * e * e;
        }
    }
    s
}

/// `∫ (Δ_h f)²` over interior nodes.
pub fn lap_sq_scalar(f: &ScalarField2D) -> f64 {
    let g = f.grid();
    let mut lap = vec![0.0; g.len()];
    laplacian_interior(g, f.data(), &mut lap);
    interior_sq(g.hx() * g.hy(), &lap)
}

/// Sum of `w v²` over values that vanish on the boundary ring.
pub(crate) fn interior_sq(w: f64, v: &[f64]) -> f64 {
    w * v.iter().map(|x| x * x).sum::<f64>()
}

pub fn l2_sq<F: Components + ?Sized>(f: &F) -> f64 {
    f.components().iter().map(l2_sq_scalar).sum()
}

pub fn grad_sq<F: Components + ?Sized>(f: &F) -> f64 {
    f.components().iter().map(grad_sq_scalar).sum()
}

pub fn lap_sq<F: Components + ?Sized>(f: &F) -> f64 {
    f.components().iter().map(lap_sq_scalar).sum()
}

pub fn l2<F: Components + ?Sized>(f: &F) -> f64 {
    l2_sq(f).sqrt()
}

pub fn grad<F: Components + ?Sized>(f: &F) -> f64 {
    grad_sq(f).sqrt()
}

pub fn h1<F: Components + ?Sized>(f: &F) -> f64 {
    (l2_sq(f) + grad_sq(f)).sqrt()
}

pub fn h2<F: Components + ?Sized>(f: &F) -> f64 {
    (l2_sq(f) + grad_sq(f) + lap_sq(f)).sqrt()
}

pub fn hminus1_with<F: Components + ?Sized>(solver: &LinearSolver, f: &F) -> Result<f64> {
    let mut s = 0.0;
    for c in f.components() {
        let zeros = vec![0.0; c.grid().boundary_len()];
        let (u, _) = solver.helmholtz(0.0, 1.0, c, &zeros)?;
        s += grad_sq_scalar(&u);
    }
    Ok(s.sqrt())
}

/// Discrete norm of the requested kind.
pub fn norms<F: Components + ?Sized>(f: &F, kind: NormKind) -> Result<f64> {
    Ok(match kind {
        NormKind::L2 => l2(f),
        NormKind::H1 => h1(f),
        NormKind::H2 => h2(f),
        NormKind::Hminus1 => hminus1_with(&LinearSolver::new(SolverConfig::default())?, f)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_norms() {
        let g = Grid::unit_square(10).unwrap();
        let z = VectorField2D::zeros(g);
        for k in [NormKind::L2, NormKind::H1, NormKind::H2, NormKind::Hminus1] {
            assert_eq!(norms(&z, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_l2_on_unit_square() {
        let g = Grid::new(9, 14, 1.0, 1.0).unwrap();
        let c = ScalarField2D::constant(g, -2.5);
        assert!((norms(&c, NormKind::L2).unwrap() - 2.5).abs() < 1e-12);
        assert!(grad(&c) == 0.0);
    }

    #[test]
    fn sine_norms_converge_to_analytic_values() {
        let g = Grid::unit_square(129).unwrap();
        let f = ScalarField2D::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!((l2(&f) - 0.5).abs() < 1e-6);
        assert!((grad(&f) - PI / 2f64.sqrt()).abs() < 1e-3);
        let hm = norms(&f, NormKind::Hminus1).unwrap();
        assert!((hm - 0.5 / (2f64.sqrt() * PI)).abs() < 1e-4, "{hm}");
    }

    #[test]
    fn gradient_norm_is_dual_to_laplacian_for_zero_trace() {
        let g = Grid::new(11, 9, 1.3, 0.8).unwrap();
        let f = ScalarField2D::from_fn(g, |x, y| (x * (1.3 - x) * y * (0.8 - y)).abs().sqrt());
        let mut lap = vec![0.0; g.len()];
        laplacian_interior(&g, f.data(), &mut lap);
        let ip: f64 = -lap.iter().zip(f.data()).map(|(a, b)| a * b).sum::<f64>() * g.hx() * g.hy();
        assert!((ip - grad_sq(&f)).abs() < 1e-12 * ip.abs().max(1.0));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!("h3".parse::<NormKind>().is_err());
        assert_eq!("H1".parse::<NormKind>().unwrap(), NormKind::H1);
    }
}
