use super::Grid;
use crate::error::{Error, Result};

/// Real values sampled at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            data: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                data.push(f(grid.x(i), y));
            }
        }
        Self { grid, data }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    /// Builds a field from interior values (row-major, `(nx-2)(ny-2)`) and
    /// boundary values in counterclockwise trace order.
    pub fn from_interior(grid: Grid, interior: &[f64], boundary: &[f64]) -> Result<Self> {
        let (mx, my) = grid.interior_dims();
        if interior.len() != mx * my {
            return Err(Error::Dimension(format!(
                "expected {} interior values, got {}",
                mx * my,
                interior.len()
            )));
        }
        let mut out = Self::zeros(grid);
        for j in 0..my {
            let row = &interior[j * mx..(j + 1) * mx];
            let start = grid.idx(1, j + 1);
            out.data[start..start + mx].copy_from_slice(row);
        }
        out.set_boundary(boundary)?;
        Ok(out)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.data[k] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Maximum of `|f|` over interior nodes only.
    pub fn max_abs_interior(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0_f64;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Trapezoid-weighted mean over the domain.
    pub fn mean(&self) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for j in 0..g.ny {
            let wy = g.wy(j);
            for i in 0..g.nx {
                s += g.wx(i) * wy * self.get(i, j);
            }
        }
        s / (g.lx * g.ly)
    }

    pub fn interior(&self) -> Vec<f64> {
        let g = &self.grid;
        let (mx, my) = g.interior_dims();
        let mut out = Vec::with_capacity(mx * my);
        for j in 1..=my {
            let start = g.idx(1, j);
            out.extend_from_slice(&self.data[start..start + mx]);
        }
        out
    }

    pub fn boundary_values(&self) -> Vec<f64> {
        self.grid
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| self.get(i, j))
            .collect()
    }

    pub fn set_boundary(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.grid.boundary_len() {
            return Err(Error::Dimension(format!(
                "boundary trace has {} values, grid expects {}",
                values.len(),
                self.grid.boundary_len()
            )));
        }
        for ((i, j), v) in self.grid.boundary_nodes().into_iter().zip(values) {
            self.set(i, j, *v);
        }
        Ok(())
    }

    pub fn zero_boundary(&mut self) {
        for (i, j) in self.grid.boundary_nodes() {
            self.set(i, j, 0.0);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
        Ok(())
    }
}

/// Two scalar components on a shared grid: the velocity `v` or director `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub comps: [ScalarField2D; 2],
}

impl VectorField2D {
    pub fn new(c0: ScalarField2D, c1: ScalarField2D) -> Result<Self> {
        c0.grid().check_same(c1.grid())?;
        Ok(Self { comps: [c0, c1] })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            comps: [ScalarField2D::zeros(grid), ScalarField2D::zeros(grid)],
        }
    }

    pub fn constant(grid: Grid, c: [f64; 2]) -> Self {
        Self {
            comps: [
                ScalarField2D::constant(grid, c[0]),
                ScalarField2D::constant(grid, c[1]),
            ],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut a = Vec::with_capacity(grid.len());
        let mut b = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                let v = f(grid.x(i), y);
                a.push(v[0]);
                b.push(v[1]);
            }
        }
        Self {
            comps: [
                ScalarField2D { grid, data: a },
                ScalarField2D { grid, data: b },
            ],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        [self.comps[0].get(i, j), self.comps[1].get(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField2D::is_finite)
    }

    /// Largest nodewise Euclidean length.
    pub fn max_norm(&self) -> f64 {
        self.comps[0]
            .data()
            .iter()
            .zip(self.comps[1].data())
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            comps: [
                self.comps[0].add(&other.comps[0])?,
                self.comps[1].add(&other.comps[1])?,
            ],
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            comps: [
                self.comps[0].sub(&other.comps[0])?,
                self.comps[1].sub(&other.comps[1])?,
            ],
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            comps: [self.comps[0].scale(s), self.comps[1].scale(s)],
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.comps[0].axpy(a, &other.comps[0])?;
        self.comps[1].axpy(a, &other.comps[1])
    }

    pub fn trace(&self) -> BoundaryTrace {
        let values = self
            .grid()
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| self.at(i, j))
            .collect();
        BoundaryTrace {
            grid: *self.grid(),
            values,
        }
    }

    pub fn set_boundary(&mut self, trace: &BoundaryTrace) -> Result<()> {
        self.grid().check_same(&trace.grid)?;
        for k in 0..2 {
            self.comps[k].set_boundary(&trace.component(k))?;
        }
        Ok(())
    }

    pub fn zero_boundary(&mut self) {
        for c in &mut self.comps {
            c.zero_boundary();
        }
    }
}

/// Values of an R^2-valued function on the boundary nodes, counterclockwise
/// from node `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    grid: Grid,
    values: Vec<[f64; 2]>,
}

impl BoundaryTrace {
    pub fn new(grid: Grid, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != grid.boundary_len() {
            return Err(Error::Dimension(format!(
                "boundary trace has {} values, grid expects {}",
                values.len(),
                grid.boundary_len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let values = grid
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| f(grid.x(i), grid.y(j)))
            .collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: [f64; 2]) -> Self {
        Self {
            grid,
            values: vec![c; grid.boundary_len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0_f64, |m, v| m.max(v[0].hypot(v[1])))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| {
                m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs())
            }))
    }

    /// Nodewise `(self - other) / dt`.
    pub fn difference_quotient(&self, other: &Self, dt: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt])
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Arc-length spacing to the next node along the closed boundary.
    fn segment_lengths(&self) -> Vec<f64> {
        let nodes = self.grid.boundary_nodes();
        let n = nodes.len();
        (0..n)
            .map(|k| {
                let (a, b) = (nodes[k], nodes[(k + 1) % n]);
                let dx = self.grid.x(a.0) - self.grid.x(b.0);
                let dy = self.grid.y(a.1) - self.grid.y(b.1);
                dx.hypot(dy)
            })
            .collect()
    }

    /// L^2(Γ) norm with the trapezoid rule along the closed boundary.
    pub fn l2_norm(&self) -> f64 {
        let seg = self.segment_lengths();
        let n = self.values.len();
        let mut s = 0.0;
        for k in 0..n {
            let w = 0.5 * (seg[k] + seg[(k + n - 1) % n]);
            let v = self.values[k];
            s += w * (v[0] * v[0] + v[1] * v[1]);
        }
        s.sqrt()
    }

    /// Computable stand-in for the H^{1/2}(Γ) norm: L^2(Γ) plus the sum of
    /// squared nearest-neighbour differences along the boundary.
    pub fn half_norm(&self) -> f64 {
        let n = self.values.len();
        let mut semi = 0.0;
        for k in 0..n {
            let (a, b) = (self.values[k], self.values[(k + 1) % n]);
            semi += (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        }
        let l2 = self.l2_norm();
        (l2 * l2 + semi).sqrt()
    }
}
