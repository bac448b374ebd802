use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored by rows
/// with room for the fill-in created by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (2 * kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.kl - i)
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Replaces row `i` by the identity row.
    pub fn pin_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, if i == j { 1.0 } else { 0.0 });
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum();
        }
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = scale * 1e-14 * (n as f64).sqrt().max(1.0);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tiny || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            let right = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last {
                let s = self.slot(r, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=right {
                    let kj = self.data[self.slot(k, j)];
                    let rj = self.slot(r, j);
                    self.data[rj] -= l * kj;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factors produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    b[r] -= m.data[m.slot(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let right = (k + kl + ku).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=right {
                s -= m.data[m.slot(k, j)] * b[j];
            }
            b[k] = s / m.data[m.slot(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> (BandMatrix, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = BandMatrix::zeros(n, kl, ku);
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                b.set(i, j, v);
                d[(i, j)] = v;
            }
        }
        (b, d)
    }

    #[test]
    fn matches_dense_lu_on_unsymmetric_band() {
        for (seed, (n, kl, ku)) in [(20, 2, 3), (31, 5, 1), (12, 0, 4), (40, 7, 7)]
            .into_iter()
            .enumerate()
        {
            let (b, d) = random_band(n, kl, ku, seed as u64);
            let rhs = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
            let exact = d.clone().lu().solve(&rhs).unwrap();
            let lu = b.factor().unwrap();
            let mut x = rhs.as_slice().to_vec();
            lu.solve_in_place(&mut x);
            let err = x
                .iter()
                .zip(exact.iter())
                .fold(0.0_f64, |m, (a, e)| m.max((a - e).abs()));
            assert!(err < 1e-9 * exact.amax().max(1.0), "n={n} err={err}");
        }
    }

    #[test]
    fn matvec_agrees_with_dense() {
        let (b, d) = random_band(15, 3, 2, 9);
        let x: Vec<f64> = (0..15).map(|i| i as f64 - 7.0).collect();
        let mut y = vec![0.0; 15];
        b.matvec(&x, &mut y);
        let e = &d * DVector::from_vec(x);
        for (a, b) in y.iter().zip(e.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut b = BandMatrix::zeros(4, 1, 1);
        for i in 0..4 {
            b.set(i, i, 1.0);
        }
        b.set(2, 2, 0.0);
        b.set(2, 1, 0.0);
        b.set(2, 3, 0.0);
        assert!(matches!(b.factor(), Err(Error::Singular(2))));
    }
}
