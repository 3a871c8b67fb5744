//! Eigenvalues of small dense real matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the
//! Francis double-shift QR iteration; eigenvectors of real eigenvalues by
//! inverse iteration on the original matrix.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::scalar::{cx, Cx, Real};

fn hessenberg<T: Real>(a: &mut DenseMatrix<T>) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha_sq: T = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum();
        let norm = alpha_sq.sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[(k + 1, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq: T = v.iter().map(|&x| x * x).sum();
        if vnorm_sq == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        // A <- H A
        for j in 0..n {
            let dot: T = (0..v.len()).map(|r| v[r] * a[(k + 1 + r, j)]).sum();
            let f = two * dot / vnorm_sq;
            for r in 0..v.len() {
                a[(k + 1 + r, j)] -= f * v[r];
            }
        }
        // A <- A H
        for i in 0..n {
            let dot: T = (0..v.len()).map(|r| a[(i, k + 1 + r)] * v[r]).sum();
            let f = two * dot / vnorm_sq;
            for r in 0..v.len() {
                a[(i, k + 1 + r)] -= f * v[r];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = T::zero();
        }
    }
}

fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed in the process).
fn hqr<T: Real>(a: &mut DenseMatrix<T>) -> Result<Vec<Cx<T>>> {
    let n = a.rows();
    let mut wr = vec![T::zero(); n];
    let mut wi = vec![T::zero(); n];
    let eps = T::epsilon();
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = T::zero();
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
            } else {
                let mut y = a[(nu - 1, nu - 1)];
                let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
                if l == nu - 1 {
                    let p = T::lit(0.5) * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != T::zero() {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = T::zero();
                        wi[nu] = T::zero();
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(Error::EigenNoConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 0..=nu {
                            a[(i, i)] -= x;
                        }
                        let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a[(m, m)];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                        q = a[(m + 1, m + 1)] - z - rr - ss;
                        r = a[(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nu {
                        a[(i, i - 2)] = T::zero();
                        if i != m + 2 {
                            a[(i, i - 3)] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[(k, k - 1)];
                            q = a[(k + 1, k - 1)];
                            r = T::zero();
                            if k + 1 != nu {
                                r = a[(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == m {
                                if l != m {
                                    a[(k, k - 1)] = -a[(k, k - 1)];
                                }
                            } else {
                                a[(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                                if k + 1 != nu {
                                    pp += r * a[(k + 2, j)];
                                    a[(k + 2, j)] -= pp * z;
                                }
                                a[(k + 1, j)] -= pp * y;
                                a[(k, j)] -= pp * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                                if k + 1 != nu {
                                    pp += z * a[(i, k + 2)];
                                    a[(i, k + 2)] -= pp * r;
                                }
                                a[(i, k + 1)] -= pp * q;
                                a[(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l as isize + 1 >= nn {
                break;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(r, i)| cx(r, i)).collect())
}

/// All eigenvalues of a square real matrix.
pub fn eigenvalues<T: Real>(a: &DenseMatrix<T>) -> Result<Vec<Cx<T>>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    hqr(&mut h)
}

/// Real eigen-decomposition: ascending eigenvalues, with right vectors as
/// columns of `right` and left vectors as rows of `left`, scaled so that
/// `left.row(j) · right.col(j) = 1`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub right: DenseMatrix<T>,
    pub left: DenseMatrix<T>,
}

/// Eigenvalues with `|imag| > 1e-9 · max(1, |λ|)` are rejected.
pub fn real_eigen<T: Real>(a: &DenseMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = a.rows();
    let mut vals = Vec::with_capacity(n);
    for z in eigenvalues(a)? {
        if z.im.abs() > T::lit(1e-9) * z.re.abs().max(T::one()) {
            return Err(Error::ComplexEigenvalue {
                re: z.re.as_f64(),
                im: z.im.as_f64(),
            });
        }
        vals.push(z.re);
    }
    vals.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));

    let scale = a.max_abs().max(T::min_positive_value());
    let mut right = DenseMatrix::zeros(n, n);
    let mut left = DenseMatrix::zeros(n, n);
    for (j, &lam) in vals.iter().enumerate() {
        let (r, l) = inverse_iteration(a, lam, scale)?;
        let d: T = r.iter().zip(&l).map(|(&x, &y)| x * y).sum();
        if d == T::zero() {
            return Err(Error::EigenNoConvergence);
        }
        for i in 0..n {
            right[(i, j)] = r[i];
            left[(j, i)] = l[i] / d;
        }
    }
    Ok(EigenDecomposition {
        values: vals,
        right,
        left,
    })
}

fn normalize<T: Real>(v: &mut [T]) {
    let n = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn inverse_iteration<T: Real>(a: &DenseMatrix<T>, lam: T, scale: T) -> Result<(Vec<T>, Vec<T>)> {
    let n = a.rows();
    let mut shift = T::lit(1e-10) * scale;
    let lu = loop {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] -= lam + shift;
        }
        match LuFactors::new(m) {
            Ok(lu) => break lu,
            Err(_) if shift < T::lit(1e-4) * scale => shift *= T::lit(100.0),
            Err(_) => return Err(Error::EigenNoConvergence),
        }
    };
    let start: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.1) * T::lit(i as f64).sin()).collect();
    let mut r = start.clone();
    let mut l = start;
    for _ in 0..3 {
        r = lu.solve(&r);
        normalize(&mut r);
        l = lu.solve_transpose(&l);
        normalize(&mut l);
    }
    if r.iter().chain(&l).any(|x| !x.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }
    Ok((r, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Cx<f64>>) -> Vec<Cx<f64>> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn symmetric_two_by_two() {
        let a = DenseMatrix::from_rows(&[vec![2.0f64, -1.0], vec![-1.0, 2.0]]).unwrap();
        let e = real_eigen(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn companion_matrix_recovers_polynomial_roots() {
        // roots 1, 2, 3, 4, 5 -> x^5 - 15x^4 + 85x^3 - 225x^2 + 274x - 120
        let c = [-120.0, 274.0, -225.0, 85.0, -15.0];
        let n = 5;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            a[(i, n - 1)] = -c[i];
        }
        let ev = sorted_re(eigenvalues(&a).unwrap());
        for (k, z) in ev.iter().enumerate() {
            assert!((z.re - (k + 1) as f64).abs() < 1e-8, "{z}");
            assert!(z.im.abs() < 1e-8);
        }
    }

    #[test]
    fn rotation_block_gives_complex_pair() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, -2.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 5.0],
        ])
        .unwrap();
        let ev = sorted_re(eigenvalues(&a).unwrap());
        assert!((ev[0].re).abs() < 1e-12 && (ev[0].im.abs() - 2.0).abs() < 1e-12);
        assert!((ev[2].re - 5.0).abs() < 1e-12);
        assert!(matches!(real_eigen(&a), Err(Error::ComplexEigenvalue { .. })));
    }

    #[test]
    fn decomposition_reconstructs_nonsymmetric_matrix() {
        let n = 7;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = if i == j {
                    4.0 + i as f64
                } else {
                    0.3 * ((i * 7 + j * 3) as f64).sin()
                };
            }
        }
        let e = real_eigen(&a).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                let rec: f64 = (0..n).map(|j| e.values[j] * e.right[(i, j)] * e.left[(j, k)]).sum();
                err = err.max((rec - a[(i, k)]).abs());
            }
        }
        assert!(err / a.max_abs() < 1e-9, "reconstruction error {err}");
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-10);
    }
}
