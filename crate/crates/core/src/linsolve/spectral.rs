//! Fast diagonalization for operators of the form `α I + β (A_x ⊗ I + I ⊗ A_y)`.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Eigen-decomposition of a one-dimensional operator.
///
/// When `scale` is present the operator is `S⁻¹ Q Λ Qᵀ S` with `S = diag(scale)`,
/// which covers operators that are symmetric in a weighted inner product.
#[derive(Debug, Clone)]
pub struct Basis1D {
    pub q: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub scale: Option<Vec<f64>>,
}

/// Second difference with zero Dirichlet ends on `m` interior points.
pub fn dirichlet_1d(m: usize, h: f64) -> DMatrix<f64> {
    let c = 1.0 / (h * h);
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            2.0 * c
        } else if i.abs_diff(j) == 1 {
            -c
        } else {
            0.0
        }
    })
}

/// `D₁ᵀ D₁` where `D₁` is the central first difference with zero ends.
pub fn wide_1d(m: usize, h: f64) -> DMatrix<f64> {
    let a = 0.5 / h;
    let d = DMatrix::from_fn(m, m, |i, j| {
        if j == i + 1 {
            a
        } else if i == j + 1 {
            -a
        } else {
            0.0
        }
    });
    d.transpose() * d
}

/// Second difference on `n` nodes with reflected (zero-flux) ends.
pub fn neumann_1d(n: usize, h: f64) -> DMatrix<f64> {
    let c = 1.0 / (h * h);
    DMatrix::from_fn(n, n, |i, j| {
        let end = i == 0 || i == n - 1;
        if i == j {
            2.0 * c
        } else if i.abs_diff(j) == 1 {
            if end {
                -2.0 * c
            } else {
                -c
            }
        } else {
            0.0
        }
    })
}

impl Basis1D {
    pub fn dirichlet(m: usize, h: f64) -> Self {
        let n1 = (m + 1) as f64;
        let norm = (2.0 / n1).sqrt();
        let q = DMatrix::from_fn(m, m, |j, k| {
            norm * (((j + 1) * (k + 1)) as f64 * PI / n1).sin()
        });
        let lambda = (1..=m)
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * n1)).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        Self {
            q,
            lambda,
            scale: None,
        }
    }

    pub fn wide(m: usize, h: f64) -> Self {
        Self::symmetric(wide_1d(m, h))
    }

    pub fn neumann(n: usize, h: f64) -> Self {
        let w: Vec<f64> = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 })
            .collect();
        let s: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let l = neumann_1d(n, h);
        let sym = DMatrix::from_fn(n, n, |i, j| s[i] * l[(i, j)] / s[j]);
        let sym = 0.5 * (&sym + sym.transpose());
        let mut b = Self::symmetric(sym);
        b.scale = Some(s);
        b
    }

    fn symmetric(a: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(a);
        Self {
            q: eig.eigenvectors,
            lambda: eig.eigenvalues.iter().copied().collect(),
            scale: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }
}

/// Solves `(α + β (A_x ⊗ I + I ⊗ A_y)) u = f` for `u`, with `f` ordered so that
/// the x index runs fastest. Modes whose eigenvalue vanishes are dropped, which
/// returns the minimum-norm solution of a consistent singular system.
pub fn solve(bx: &Basis1D, by: &Basis1D, alpha: f64, beta: f64, f: &[f64]) -> Vec<f64> {
    let (mx, my) = (bx.dim(), by.dim());
    let mut m = DMatrix::from_column_slice(mx, my, f);
    if let Some(s) = &bx.scale {
        for j in 0..my {
            for i in 0..mx {
                m[(i, j)] *= s[i];
            }
        }
    }
    if let Some(s) = &by.scale {
        for j in 0..my {
            for i in 0..mx {
                m[(i, j)] *= s[j];
            }
        }
    }
    let mut hat = bx.q.tr_mul(&m) * &by.q;
    let mut dmax = 0.0_f64;
    for j in 0..my {
        for i in 0..mx {
            dmax = dmax.max((alpha + beta * (bx.lambda[i] + by.lambda[j])).abs());
        }
    }
    let cut = 1e-10 * dmax;
    for j in 0..my {
        for i in 0..mx {
            let d = alpha + beta * (bx.lambda[i] + by.lambda[j]);
            hat[(i, j)] = if d.abs() <= cut { 0.0 } else { hat[(i, j)] / d };
        }
    }
    let mut out = &bx.q * hat * by.q.transpose();
    if let Some(s) = &bx.scale {
        for j in 0..my {
            for i in 0..mx {
                out[(i, j)] /= s[i];
            }
        }
    }
    if let Some(s) = &by.scale {
        for j in 0..my {
            for i in 0..mx {
                out[(i, j)] /= s[j];
            }
        }
    }
    out.as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_basis(b: &Basis1D, a: &DMatrix<f64>) {
        let n = b.dim();
        for k in 0..n {
            let v = b.q.column(k).into_owned();
            let r = a * &v - b.lambda[k] * &v;
            assert!(r.amax() < 1e-9 * (1.0 + b.lambda[k]), "mode {k}");
        }
    }

    #[test]
    fn analytic_dirichlet_basis_diagonalizes_second_difference() {
        let (m, h) = (11, 0.1);
        check_basis(&Basis1D::dirichlet(m, h), &dirichlet_1d(m, h));
    }

    #[test]
    fn wide_operator_is_singular_only_for_odd_sizes() {
        for m in [6usize, 7, 10, 11] {
            let b = Basis1D::wide(m, 0.2);
            check_basis(&b, &wide_1d(m, 0.2));
            let min = b.lambda.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
            assert_eq!(min < 1e-10, m % 2 == 1, "m={m}, min={min}");
        }
    }

    #[test]
    fn separable_solve_inverts_kronecker_sum() {
        let (mx, my) = (5, 4);
        let ax = dirichlet_1d(mx, 0.3);
        let ay = wide_1d(my, 0.2);
        let (alpha, beta) = (0.7, 1.3);
        let n = mx * my;
        let full = DMatrix::from_fn(n, n, |p, q| {
            let (i, j) = (p % mx, p / mx);
            let (k, l) = (q % mx, q / mx);
            let mut v = 0.0;
            if j == l {
                v += beta * ax[(i, k)];
            }
            if i == k {
                v += beta * ay[(j, l)];
            }
            if p == q {
                v += alpha;
            }
            v
        });
        let f: Vec<f64> = (0..n).map(|p| (p as f64 * 1.7).cos()).collect();
        let u = solve(
            &Basis1D::dirichlet(mx, 0.3),
            &Basis1D::wide(my, 0.2),
            alpha,
            beta,
            &f,
        );
        let r = &full * nalgebra::DVector::from_vec(u) - nalgebra::DVector::from_vec(f);
        assert!(r.amax() < 1e-10);
    }
}
