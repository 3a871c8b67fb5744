//! Truncated complex power series in the embedding parameter.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Cx, Real};

/// Coefficients `c[0..n]` of a series truncated after `n` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<Cx<T>>,
}

impl<T: Real> PowerSeries<T> {
    pub fn new(coeffs: Vec<Cx<T>>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[T]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    pub fn constant(c: Cx<T>, n_terms: usize) -> Self {
        let mut coeffs = vec![czero(); n_terms.max(1)];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub fn zeros(n_terms: usize) -> Self {
        Self::new(vec![czero(); n_terms])
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Cx<T>> {
        self.coeffs
    }

    pub fn germ(&self) -> Cx<T> {
        self.coeffs.first().copied().unwrap_or_else(czero)
    }

    pub fn truncated(&self, n_terms: usize) -> Self {
        Self::new(self.coeffs[..n_terms.min(self.coeffs.len())].to_vec())
    }

    /// Direct (Horner) summation of the truncated series.
    pub fn eval(&self, alpha: Cx<T>) -> Cx<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(czero(), |acc, &c| acc * alpha + c)
    }

    pub fn scale(&self, k: Cx<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a - b)
                .collect(),
        ))
    }

    /// Cauchy product truncated to the common length.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let n = self.n_terms();
        let coeffs = (0..n)
            .map(|k| {
                (0..=k).fold(czero(), |acc, j| acc + self.coeffs[j] * other.coeffs[k - j])
            })
            .collect();
        Ok(Self::new(coeffs))
    }

    /// Series of `1/f`, requiring a nonzero germ.
    pub fn reciprocal(&self) -> Result<Self> {
        let c0 = self.germ();
        if c0.norm() == T::zero() {
            return Err(Error::InvalidArgument(
                "reciprocal of a series with zero constant term".into(),
            ));
        }
        let n = self.n_terms();
        let mut out: Vec<Cx<T>> = Vec::with_capacity(n);
        out.push(cone::<T>() / c0);
        for k in 1..n {
            let s = (0..k).fold(czero::<T>(), |acc, j| acc + out[j] * self.coeffs[k - j]);
            out.push(-s / c0);
        }
        Ok(Self::new(out))
    }

    /// Coefficients of `f*(α*)`: the conjugate-reflected series.
    pub fn reflect(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Derivative coefficients, one term shorter.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * T::lit(k as f64))
                .collect(),
        )
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.n_terms() != other.n_terms() {
            return Err(Error::DimensionMismatch {
                expected: self.n_terms(),
                got: other.n_terms(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn series(v: &[(f64, f64)]) -> PowerSeries<f64> {
        PowerSeries::new(v.iter().map(|&(a, b)| Complex64::new(a, b)).collect())
    }

    #[test]
    fn geometric_reciprocal_is_one_minus_alpha() {
        let g = PowerSeries::<f64>::from_real(&[1.0; 8]);
        let r = g.reciprocal().unwrap();
        assert_eq!(r.coeffs()[0], Complex64::new(1.0, 0.0));
        assert_eq!(r.coeffs()[1], Complex64::new(-1.0, 0.0));
        assert!(r.coeffs()[2..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn eval_matches_horner_by_hand() {
        let s = series(&[(1.0, 0.0), (0.0, 2.0), (3.0, 0.0)]);
        let a = Complex64::new(0.5, 0.0);
        assert_eq!(s.eval(a), Complex64::new(1.75, 1.0));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let a = PowerSeries::<f64>::zeros(3);
        let b = PowerSeries::<f64>::zeros(4);
        assert!(a.mul(&b).is_err());
    }

    proptest! {
        #[test]
        fn product_with_reciprocal_is_unit(
            re in prop::collection::vec(-1.0f64..1.0, 6),
            im in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let mut c: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            c[0] = Complex64::new(1.0 + re[0].abs(), im[0]);
            let s = PowerSeries::new(c);
            let p = s.mul(&s.reciprocal().unwrap()).unwrap();
            prop_assert!((p.coeffs()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            for k in 1..6 {
                prop_assert!(p.coeffs()[k].norm() < 1e-10);
            }
        }

        #[test]
        fn reflect_is_an_involution(re in prop::collection::vec(-5.0f64..5.0, 5)) {
            let s = PowerSeries::new(re.iter().map(|&a| Complex64::new(a, a * 0.3)).collect());
            prop_assert_eq!(s.reflect().reflect(), s);
        }
    }
}
