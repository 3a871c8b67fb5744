//! Padé approximants of power series and the real singularities of their
//! numerator and denominator.
//!
//! Coefficients of the denominator solve the classical linear (Toeplitz)
//! system with a partially pivoted LU factorization. A small pivot marks the
//! table entry as defective; [`build_pade_auto`] then steps down the
//! diagonal until a regular entry is found.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::poly;
use crate::scalar::{cone, czero, Cx, Real};
use crate::series::PowerSeries;

/// Pivot ratio below which the Padé system counts as ill-conditioned.
const DEFECT_PIVOT_RATIO: f64 = 1e-13;

/// Trailing coefficients below this fraction of the largest one are treated
/// as rounding noise by the automatic order selection.
const NOISE_FLOOR: f64 = 1e-15;

/// Rational approximant `num(α) / den(α)` of order `[L/M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeApproximant<T> {
    num: Vec<Cx<T>>,
    den: Vec<Cx<T>>,
    order: (usize, usize),
}

impl<T: Real> PadeApproximant<T> {
    pub fn num_coeffs(&self) -> &[Cx<T>] {
        &self.num
    }

    pub fn den_coeffs(&self) -> &[Cx<T>] {
        &self.den
    }

    /// `(L, M)`: numerator and denominator degrees.
    pub fn order(&self) -> (usize, usize) {
        self.order
    }

    pub fn eval(&self, alpha: Cx<T>) -> Result<Cx<T>> {
        let d = poly::eval(&self.den, alpha);
        if d.norm() < T::lit(1e-14) {
            return Err(Error::PoleProximity {
                alpha: alpha.re.as_f64(),
            });
        }
        Ok(poly::eval(&self.num, alpha) / d)
    }

    pub fn eval_real(&self, alpha: T) -> Result<Cx<T>> {
        self.eval(Cx::new(alpha, T::zero()))
    }

    /// First `n` Maclaurin coefficients of `num / den`.
    pub fn taylor(&self, n: usize) -> Vec<Cx<T>> {
        let mut out: Vec<Cx<T>> = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.num.get(k).copied().unwrap_or_else(czero);
            let s = (1..self.den.len().min(k + 1))
                .fold(czero(), |acc, j| acc + self.den[j] * out[k - j]);
            out.push((a - s) / self.den[0]);
        }
        out
    }
}

/// Builds the `[L/M]` approximant from the first `L + M + 1` coefficients.
pub fn build_pade<T: Real>(
    series: &PowerSeries<T>,
    (l, m): (usize, usize),
) -> Result<PadeApproximant<T>> {
    let c = series.coeffs();
    if c.len() < l + m + 1 {
        return Err(Error::InvalidArgument(format!(
            "[{l}/{m}] Padé needs {} terms, series has {}",
            l + m + 1,
            c.len()
        )));
    }
    // Solve in β = α/r, with r balancing the coefficient growth, then map
    // back; the approximant is unchanged but the system is better scaled.
    let n = l + m;
    let r = if n > 0 && c[0].norm() > T::zero() && c[n].norm() > T::zero() {
        let r = (c[0].norm() / c[n].norm()).powf(T::one() / T::lit(n as f64));
        r.max(T::lit(1e-3)).min(T::lit(1e3))
    } else {
        T::one()
    };
    let pow: Vec<T> = (0..=n).scan(T::one(), |acc, _| {
        let v = *acc;
        *acc = *acc * r;
        Some(v)
    })
    .collect();
    let cs: Vec<Cx<T>> = (0..=n).map(|k| c[k] * pow[k]).collect();
    let coef = |k: isize| -> Cx<T> {
        if k < 0 {
            czero()
        } else {
            cs[k as usize]
        }
    };

    let mut den = vec![cone::<T>()];
    if m > 0 {
        let mut a = DenseMatrix::<Cx<T>>::zeros(m, m);
        let mut rhs = vec![czero::<T>(); m];
        for row in 0..m {
            let k = (l + 1 + row) as isize;
            for col in 0..m {
                let j = (col + 1) as isize;
                a[(row, col)] = coef(k - j);
            }
            rhs[row] = -coef(k);
        }
        let defect = Error::DefectivePade { l, m };
        let lu = a.lu().map_err(|_| defect.clone())?;
        if lu.min_pivot_ratio() < DEFECT_PIVOT_RATIO {
            return Err(defect);
        }
        let b = lu.solve(&rhs);
        if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(defect);
        }
        den.extend(b);
    }

    let num: Vec<Cx<T>> = (0..=l)
        .map(|k| {
            (0..=k.min(m)).fold(czero(), |acc, j| acc + den[j] * cs[k - j]) / pow[k]
        })
        .collect();
    let den: Vec<Cx<T>> = den.iter().zip(&pow).map(|(d, p)| d / *p).collect();

    Ok(PadeApproximant {
        num,
        den,
        order: (l, m),
    })
}

/// Near-diagonal order for `n` terms: `M = n / 2`, `L = n - 1 - M`.
pub fn default_order(n_terms: usize) -> (usize, usize) {
    if n_terms == 0 {
        return (0, 0);
    }
    let m = n_terms / 2;
    (n_terms - 1 - m, m)
}

/// Builds an approximant using the near-diagonal order for the significant
/// part of the series, stepping down the diagonal past defective entries.
pub fn build_pade_auto<T: Real>(series: &PowerSeries<T>) -> Result<PadeApproximant<T>> {
    let scale = series.max_abs();
    if scale == T::zero() {
        return Ok(PadeApproximant {
            num: vec![czero()],
            den: vec![cone()],
            order: (0, 0),
        });
    }
    let floor = scale * T::lit(NOISE_FLOOR);
    let n = series
        .coeffs()
        .iter()
        .rposition(|c| c.norm() > floor)
        .map_or(1, |p| p + 1);
    let trimmed = series.truncated(n);
    build_pade_descending(&trimmed, default_order(n))
}

/// Tries `(l, m)`, then `(l-1, m-1)` and so on until a regular entry is found.
pub fn build_pade_descending<T: Real>(
    series: &PowerSeries<T>,
    (mut l, mut m): (usize, usize),
) -> Result<PadeApproximant<T>> {
    loop {
        match build_pade(series, (l, m)) {
            Ok(p) => return Ok(p),
            Err(Error::DefectivePade { .. }) if m > 0 => {
                l = l.saturating_sub(1);
                m -= 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Evaluates the automatic approximant of `series` at a real point.
pub fn pade_value<T: Real>(series: &PowerSeries<T>, alpha: T) -> Result<Cx<T>> {
    build_pade_auto(series)?.eval_real(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityOptions<T> {
    /// A root counts as real when `|Im z| <= imag_rel_tol * |z|`.
    pub imag_rel_tol: T,
    /// Poles and zeros closer than this (relative) cancel.
    pub doublet_tol: T,
}

impl<T: Real> Default for SingularityOptions<T> {
    fn default() -> Self {
        Self {
            imag_rel_tol: T::lit(1e-4),
            doublet_tol: T::lit(1e-8),
        }
    }
}

/// Real roots of the approximant's denominator and numerator.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport<T> {
    /// Real denominator roots, sorted by magnitude.
    pub poles: Vec<T>,
    /// Real numerator roots, sorted by magnitude.
    pub zeros: Vec<T>,
    pub nearest_positive_real: Option<T>,
}

fn all_roots<T: Real>(coeffs: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    if coeffs.len() < 2 || coeffs.iter().all(|c| c.norm() == T::zero()) {
        return Ok(Vec::new());
    }
    poly::roots(coeffs)
}

/// Drops pole/zero pairs closer than `tol` (relative): such Froissart
/// doublets cancel in the approximant and carry no information.
fn cancel_doublets<T: Real>(poles: &mut Vec<Cx<T>>, zeros: &mut Vec<Cx<T>>, tol: T) {
    let mut i = 0;
    while i < poles.len() {
        let p = poles[i];
        let near = zeros
            .iter()
            .enumerate()
            .map(|(k, z)| (k, (p - z).norm()))
            .filter(|&(_, d)| d <= tol * p.norm().max(T::one()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        match near {
            Some((k, _)) => {
                zeros.swap_remove(k);
                poles.swap_remove(i);
            }
            None => i += 1,
        }
    }
}

fn real_parts<T: Real>(roots: &[Cx<T>], tol: T) -> Vec<T> {
    let mut out: Vec<T> = roots
        .iter()
        .filter(|z| z.im.abs() <= tol * z.norm())
        .map(|z| z.re)
        .collect();
    out.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Locates the real poles and zeros of the near-diagonal approximant of
/// `series`; the smallest positive one bounds the nearest real singularity.
pub fn nearest_real_singularity<T: Real>(
    series: &PowerSeries<T>,
    opts: &SingularityOptions<T>,
) -> Result<SingularityReport<T>> {
    let pa = build_pade_auto(series)?;
    let mut poles = all_roots(pa.den_coeffs())?;
    let mut zeros = all_roots(pa.num_coeffs())?;
    cancel_doublets(&mut poles, &mut zeros, opts.doublet_tol);
    let poles = real_parts(&poles, opts.imag_rel_tol);
    let zeros = real_parts(&zeros, opts.imag_rel_tol);
    let nearest_positive_real = poles
        .iter()
        .chain(&zeros)
        .copied()
        .filter(|&x| x > T::zero())
        .fold(None, |best: Option<T>, x| Some(best.map_or(x, |b| b.min(x))));
    Ok(SingularityReport {
        poles,
        zeros,
        nearest_positive_real,
    })
}
