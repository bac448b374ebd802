//! Node-centred rectangular grids, field containers and finite-difference
//! operators.
//!
//! Nodes are indexed `(i, j)` with `x = i * hx`, `y = j * hy`; storage is
//! row-major (`j * nx + i`). The outermost ring of nodes is the discrete
//! boundary. Quadrature is the trapezoidal rule, so interior nodes carry the
//! weight `hx * hy`.

mod field;
mod ops;
pub mod snapshot;

pub use field::{BoundaryTrace, ScalarField2D, VectorField2D};
pub use ops::{
    bulk_potential_F, divergence, elastic_stress_divergence, ginzburg_landau_f, gl_force,
    gl_force_jacobian, gl_potential, gradient, laplacian, BoundaryMode,
};
pub(crate) use ops::{central_gradient_interior, laplacian_interior};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(Error::Parameter(format!(
                "grid needs at least {MIN_NODES} nodes per axis, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::Parameter(format!(
                "domain extents must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` nodes on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Interior node counts `(nx - 2, ny - 2)`.
    #[inline]
    pub fn interior_dims(&self) -> (usize, usize) {
        (self.nx - 2, self.ny - 2)
    }

    /// Number of boundary nodes, `2 (nx + ny) - 4`.
    pub fn boundary_len(&self) -> usize {
        2 * (self.nx + self.ny) - 4
    }

    /// Boundary nodes ordered counterclockwise starting at `(0, 0)`.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(self.boundary_len());
        out.extend((0..nx).map(|i| (i, 0)));
        out.extend((1..ny).map(|j| (nx - 1, j)));
        out.extend((0..nx - 1).rev().map(|i| (i, ny - 1)));
        out.extend((1..ny - 1).rev().map(|j| (0, j)));
        out
    }

    /// Trapezoid weight of node `i` along x.
    #[inline]
    pub fn wx(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.hx()
        } else {
            self.hx()
        }
    }

    #[inline]
    pub fn wy(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny - 1 {
            0.5 * self.hy()
        } else {
            self.hy()
        }
    }

    /// Smallest eigenvalue of the discrete Dirichlet operator `-Δ_h`.
    pub fn dirichlet_lambda_min(&self) -> f64 {
        let (hx, hy) = (self.hx(), self.hy());
        let sx = (std::f64::consts::PI * hx / (2.0 * self.lx)).sin();
        let sy = (std::f64::consts::PI * hy / (2.0 * self.ly)).sin();
        4.0 * sx * sx / (hx * hx) + 4.0 * sy * sy / (hy * hy)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
