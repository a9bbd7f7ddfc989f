//! Small dense complex matrices and an LU solver with partial pivoting.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::Scalar;

pub type C<T> = Complex<T>;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_diagonal(d: &[C<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn map_indexed(&self, f: impl Fn(usize, usize, C<T>) -> C<T>) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = f(i, j, self[(i, j)]);
            }
        }
        out
    }

    pub fn scale(&self, k: C<T>) -> Self {
        self.map(|z| z * k)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() || !self.is_square() {
            return T::zero();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        worst / scale
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == C::new(T::zero(), T::zero())))
    }

    pub fn inverse(&self) -> Option<Self> {
        let lu = Lu::factor(self)?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![C::new(T::zero(), T::zero()); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = C::new(T::zero(), T::zero()));
            e[j] = C::new(T::one(), T::zero());
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    /// Inverse of a symmetric matrix, symmetrized to remove rounding skew.
    pub fn symmetric_inverse(&self) -> Option<Self> {
        let inv = self.inverse()?;
        let half = T::lit(0.5);
        Some(inv.map_indexed(|i, j, z| (z + inv[(j, i)]) * half))
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU` with row partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Returns `None` when a pivot falls below `n·ε·max|a|`.
    pub fn factor(a: &CMatrix<T>) -> Option<Self> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = T::from_count(n.max(1)) * T::epsilon() * a.max_abs();
        if n > 0 && a.max_abs() == T::zero() {
            return None;
        }
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > threshold) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let zero = C::new(T::zero(), T::zero());
                if lu[(i, k)] == zero {
                    continue;
                }
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    if u != zero {
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

pub fn inf_norm<T: Scalar>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn solves_pivoting_system() {
        let a = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)],
            vec![c(1.0, -1.0), c(0.0, 0.0), c(3.0, 0.0)],
            vec![c(4.0, 0.0), c(1.0, 1.0), c(0.0, 2.0)],
        ]);
        let x = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.0, -3.0)];
        let b = a.mul_vec(&x);
        let got = Lu::factor(&a).unwrap().solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-13);
        }
    }

    #[test]
    fn inverse_of_impedance_block() {
        let z = CMatrix::from_rows(vec![
            vec![c(0.3465, 1.0179), c(0.1560, 0.5017)],
            vec![c(0.1560, 0.5017), c(0.3375, 1.0478)],
        ]);
        let y = z.symmetric_inverse().unwrap();
        assert_eq!(y.asymmetry(), 0.0);
        let id = CMatrix::identity(2);
        for j in 0..2 {
            let col: Vec<_> = (0..2).map(|i| y[(i, j)]).collect();
            let e = z.mul_vec(&col);
            for i in 0..2 {
                assert!((e[i] - id[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_detected() {
        let a = CMatrix::from_rows(vec![vec![c(1.0, 1.0), c(2.0, 2.0)], vec![c(0.5, 0.5), c(1.0, 1.0)]]);
        assert!(Lu::factor(&a).is_none());
        assert!(Lu::factor(&CMatrix::<f64>::zeros(2, 2)).is_none());
    }

    #[test]
    fn decoupled_blocks_stay_exactly_decoupled() {
        let a = CMatrix::from_diagonal(&[c(2.0, 1.0), c(0.5, -3.0), c(7.0, 0.0)]);
        let x = Lu::factor(&a).unwrap().solve(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(x[0], c(0.0, 0.0));
        assert_eq!(x[2], c(0.0, 0.0));
    }
}
