use crate::error::{Error, Result};

/// Unpreconditioned conjugate gradients for a symmetric positive
/// (semi-)definite operator. Stops once `‖b − A x‖ ≤ tol ‖b‖`.
///
/// Returns the iteration count and the final relative residual.
pub fn solve(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<(usize, f64)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok((0, 0.0));
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rel = rr.sqrt() / bnorm;
        if rel <= tol {
            return Ok((it, rel));
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Solver {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    let rel = rr.sqrt() / bnorm;
    if rel <= tol {
        Ok((max_iter, rel))
    } else {
        Err(Error::Solver {
            iterations: max_iter,
            residual: rel,
        })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
