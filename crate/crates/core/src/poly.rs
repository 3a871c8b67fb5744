//! Complex polynomials in ascending coefficient order and their roots.
//!
//! Roots come from simultaneous Aberth–Ehrlich iteration, which handles the
//! clustered roots that Padé numerators and denominators put along branch
//! cuts better than deflation-based schemes.

use crate::error::{Error, Result};
use crate::scalar::{cx, czero, Cx, Real};

/// Horner evaluation of `c[0] + c[1] x + ...`.
pub fn eval<T: Real>(coeffs: &[Cx<T>], x: Cx<T>) -> Cx<T> {
    coeffs.iter().rev().fold(czero(), |acc, &c| acc * x + c)
}

/// Value and first derivative at `x`.
pub fn eval_with_derivative<T: Real>(coeffs: &[Cx<T>], x: Cx<T>) -> (Cx<T>, Cx<T>) {
    let mut p = czero();
    let mut dp = czero();
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Index of the last coefficient whose modulus exceeds `rel_tol * max|c|`.
fn effective_degree<T: Real>(coeffs: &[Cx<T>], rel_tol: T) -> Option<usize> {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if scale == T::zero() {
        return None;
    }
    coeffs.iter().rposition(|c| c.norm() > rel_tol * scale)
}

/// All complex roots of the polynomial.
///
/// Leading coefficients below `1e-14` of the largest coefficient are treated
/// as zero, so a numerically degenerate polynomial yields fewer roots rather
/// than spurious huge ones.
pub fn roots<T: Real>(coeffs: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    let deg = match effective_degree(coeffs, T::lit(1e-14)) {
        None => {
            return Err(Error::InvalidArgument(
                "roots of the zero polynomial".into(),
            ))
        }
        Some(d) => d,
    };
    let mut p: Vec<Cx<T>> = coeffs[..=deg].to_vec();

    let zero_roots = p.iter().position(|c| c.norm() != T::zero()).unwrap_or(0);
    p.drain(..zero_roots);
    let mut out = vec![czero(); zero_roots];
    let d = p.len() - 1;
    match d {
        0 => return Ok(out),
        1 => {
            out.push(-p[0] / p[1]);
            return Ok(out);
        }
        _ => {}
    }

    let lead = p[d];
    let monic: Vec<Cx<T>> = p.iter().map(|&c| c / lead).collect();
    out.extend(aberth(&monic)?);
    Ok(out)
}

fn aberth<T: Real>(monic: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    let d = monic.len() - 1;
    let radius = {
        let r = monic[0].norm().powf(T::one() / T::lit(d as f64));
        if r > T::zero() && r.is_finite() {
            r
        } else {
            T::one()
        }
    };
    let two_pi = T::lit(2.0) * T::PI();
    let mut z: Vec<Cx<T>> = (0..d)
        .map(|k| {
            let theta = two_pi * T::lit(k as f64) / T::lit(d as f64) + T::lit(0.4);
            cx(radius * theta.cos(), radius * theta.sin())
        })
        .collect();

    // a root is frozen once its update falls to rounding level
    let eps = T::epsilon() * T::lit(16.0);
    let floor = T::min_positive_value().sqrt();
    let mut frozen = vec![false; d];
    for _ in 0..500 {
        for i in 0..d {
            if frozen[i] {
                continue;
            }
            let (pv, dpv) = eval_with_derivative(monic, z[i]);
            if pv.norm() == T::zero() {
                frozen[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let repulsion = (0..d)
                .filter(|&j| j != i)
                .fold(czero(), |acc, j| {
                    let diff = z[i] - z[j];
                    if diff.norm() == T::zero() {
                        acc
                    } else {
                        acc + diff.inv()
                    }
                });
            let denom = cx::<T>(T::one(), T::zero()) - ratio * repulsion;
            let step = if denom.norm() == T::zero() {
                ratio
            } else {
                ratio / denom
            };
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] = z[i] - step;
            if step.norm() <= eps * z[i].norm().max(floor) {
                frozen[i] = true;
            }
        }
        if frozen.iter().all(|&f| f) {
            return Ok(z);
        }
    }
    // Slow final convergence on multiple roots is tolerated when residuals are small.
    let ok = z.iter().all(|&r| {
        let (pv, dpv) = eval_with_derivative(monic, r);
        pv.norm() <= T::lit(1e-6) * (T::one() + dpv.norm() * r.norm().max(T::one()))
    });
    if ok {
        Ok(z)
    } else {
        Err(Error::InvalidArgument(
            "polynomial root iteration did not converge".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Expands `lead * prod (x - r)` into ascending coefficients.
    fn from_roots(rs: &[Complex64], lead: Complex64) -> Vec<Complex64> {
        let mut c = vec![lead];
        for &r in rs {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        c
    }

    fn assert_same_roots(found: &[Complex64], expected: &[Complex64], tol: f64) {
        assert_eq!(found.len(), expected.len());
        let mut used = vec![false; found.len()];
        for e in expected {
            let (k, dist) = found
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, f)| (k, (f - e).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(dist < tol, "root {e} missed by {dist}");
            used[k] = true;
        }
    }

    #[test]
    fn quadratic_real_roots() {
        // x^2 - 3x + 2
        let c = [2.0, -3.0, 1.0].map(|v| Complex64::new(v, 0.0));
        let r = roots(&c).unwrap();
        assert_same_roots(&r, &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)], 1e-12);
    }

    #[test]
    fn complex_coefficients_degree_eight() {
        let expected: Vec<Complex64> = (0..8)
            .map(|k| Complex64::new(0.3 * k as f64 - 1.0, 0.2 * (k as f64).sin()))
            .collect();
        let c = from_roots(&expected, Complex64::new(0.7, -0.2));
        let r = roots(&c).unwrap();
        assert_same_roots(&r, &expected, 1e-8);
    }

    #[test]
    fn zero_roots_and_degenerate_leading_terms() {
        // x^2 (x - 5) with a negligible x^4 term
        let c = [0.0, 0.0, -5.0, 1.0, 1e-300].map(|v| Complex64::new(v, 0.0));
        let r = roots(&c).unwrap();
        assert_same_roots(
            &r,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(5.0, 0.0),
            ],
            1e-12,
        );
    }

    #[test]
    fn constant_has_no_roots() {
        let r = roots(&[Complex64::new(3.0, 0.0)]).unwrap();
        assert!(r.is_empty());
        assert!(roots::<f64>(&[Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let c = [6.0f32, -5.0, 1.0].map(|v| num_complex::Complex32::new(v, 0.0));
        let mut r: Vec<f32> = roots(&c).unwrap().iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] - 2.0).abs() < 1e-4 && (r[1] - 3.0).abs() < 1e-4);
    }
}
