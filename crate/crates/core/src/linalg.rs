//! Dense row-major matrices and an LU factorization with partial pivoting.
//!
//! The factorization is computed once and then reused for any number of
//! right-hand sides, which is the access pattern of the series recursion.

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Field> DenseMatrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![E::zero_elem(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one_elem();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
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

    pub fn mul_vec(&self, x: &[E]) -> Vec<E> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(E::zero_elem(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == E::zero_elem() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest element modulus.
    pub fn max_abs(&self) -> E::Magnitude {
        self.data
            .iter()
            .map(|e| e.magnitude())
            .fold(<E::Magnitude as num_traits::Zero>::zero(), num_traits::Float::max)
    }

    /// Extracts the submatrix selected by `rows` x `cols` index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (oi, &i) in rows.iter().enumerate() {
            for (oj, &j) in cols.iter().enumerate() {
                out[(oi, oj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn lu(&self) -> Result<LuFactors<E>> {
        LuFactors::new(self.clone())
    }
}

impl<E> std::ops::Index<(usize, usize)> for DenseMatrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> std::ops::IndexMut<(usize, usize)> for DenseMatrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

/// Packed `PA = LU` factors. `L` has an implicit unit diagonal.
#[derive(Debug, Clone)]
pub struct LuFactors<E> {
    lu: DenseMatrix<E>,
    perm: Vec<usize>,
    min_pivot_ratio: f64,
}

impl<E: Field> LuFactors<E> {
    /// Relative pivot size below which a matrix is reported singular.
    pub const SINGULAR_RATIO: f64 = 1e-14;

    pub fn new(mut a: DenseMatrix<E>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch {
                expected: a.rows,
                got: a.cols,
            });
        }
        let n = a.rows;
        let scale = a.max_abs();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_ratio = f64::INFINITY;

        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, a[(i, k)].magnitude()))
                .fold((k, <E::Magnitude as num_traits::Zero>::zero()), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
            let ratio = if scale > <E::Magnitude as num_traits::Zero>::zero() {
                (pmag / scale).as_f64()
            } else {
                0.0
            };
            min_ratio = min_ratio.min(ratio);
            if !(ratio > Self::SINGULAR_RATIO) {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                if f == E::zero_elem() {
                    continue;
                }
                a[(i, k)] = f;
                for j in (k + 1)..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }

        Ok(Self {
            lu: a,
            perm,
            min_pivot_ratio: if n == 0 { 1.0 } else { min_ratio },
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Smallest `|pivot| / max|A|` encountered; a cheap conditioning signal.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    pub fn solve(&self, b: &[E]) -> Vec<E> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [E]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<E> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut acc = y[i];
            for j in 0..i {
                acc -= row[j] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= row[j] * y[j];
            }
            y[i] = acc / row[i];
        }
        b.copy_from_slice(&y);
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[E]) -> Vec<E> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // A^T = U^T L^T P
        let mut z = b.to_vec();
        for i in 0..n {
            let mut acc = z[i];
            for j in 0..i {
                acc -= self.lu[(j, i)] * z[j];
            }
            z[i] = acc / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for j in (i + 1)..n {
                acc -= self.lu[(j, i)] * z[j];
            }
            z[i] = acc;
        }
        let mut x = vec![E::zero_elem(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix<E> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![E::zero_elem(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = E::zero_elem());
            e[j] = E::one_elem();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Infinity norm of a real vector.
pub fn norm_inf<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_small_real_system() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 0.0],
            vec![3.0, 0.0, 4.0],
        ])
        .unwrap();
        let x_true: [f64; 3] = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let lu = a.lu().unwrap();
        let x = lu.solve(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-14);
        }
        let bt = a.transpose().mul_vec(&x_true);
        let xt = lu.solve_transpose(&bt);
        for (xi, ti) in xt.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-14);
        }
    }

    #[test]
    fn solves_complex_system() {
        let j = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = DenseMatrix::from_rows(&[vec![-4.0 * j, 4.0 * j], vec![4.0 * j, -4.0 * j + one]])
            .unwrap();
        let x_true = [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)];
        let b = a.mul_vec(&x_true);
        let x = a.lu().unwrap().solve(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(a.lu(), Err(Error::Singular(_))));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = DenseMatrix::from_rows(&[vec![4.0f32, 1.0], vec![2.0, 3.0]]).unwrap();
        let inv = a.lu().unwrap().inverse();
        let p = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - e).abs() < 1e-6);
            }
        }
    }
}
