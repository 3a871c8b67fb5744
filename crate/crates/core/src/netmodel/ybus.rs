//! Compressed-row sparse matrices and the bus admittance matrix.

use std::collections::HashMap;

use crate::error::{BusId, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{cx, czero, Cx, Field, Real};

use super::{Branch, Bus};

/// CSR matrix with sorted, duplicate-free column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<E> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<E>,
}

impl<E: Field> SparseMatrix<E> {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, E)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<E> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, E)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> E {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => E::zero_elem(),
        }
    }

    pub fn mul_vec(&self, x: &[E]) -> Vec<E> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).fold(E::zero_elem(), |acc, (j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn row_sum(&self, i: usize) -> E {
        self.row(i).fold(E::zero_elem(), |acc, (_, v)| acc + v)
    }

    pub fn to_dense(&self) -> DenseMatrix<E> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

/// Builds the bus admittance matrix from the π models of in-service
/// branches and the bus shunts. Rows and columns follow `buses` order.
pub fn build_ybus<T: Real>(buses: &[Bus<T>], branches: &[Branch<T>]) -> Result<SparseMatrix<Cx<T>>> {
    let index: HashMap<BusId, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let n = buses.len();
    let mut trip: Vec<(usize, usize, Cx<T>)> = Vec::with_capacity(4 * branches.len() + n);

    for br in branches.iter().filter(|b| b.in_service) {
        let f = *index.get(&br.from).ok_or(Error::UnknownBus(br.from))?;
        let t = *index.get(&br.to).ok_or(Error::UnknownBus(br.to))?;
        if br.series_z.norm() == T::zero() {
            return Err(Error::ZeroImpedance {
                from: br.from,
                to: br.to,
            });
        }
        let ys = br.series_z.inv();
        let half_charging = cx(T::zero(), br.charging_b / T::lit(2.0));
        let tap = br.tap;
        let ytt = ys + half_charging;
        let yff = ytt / (tap * tap.conj());
        let yft = -ys / tap.conj();
        let ytf = -ys / tap;
        trip.push((f, f, yff));
        trip.push((f, t, yft));
        trip.push((t, f, ytf));
        trip.push((t, t, ytt));
    }
    for (i, b) in buses.iter().enumerate() {
        let ysh = cx(b.shunt_g, b.shunt_b);
        // keep an explicit diagonal even for isolated-looking buses
        trip.push((i, i, if ysh.norm() == T::zero() { czero() } else { ysh }));
    }
    Ok(SparseMatrix::from_triplets(n, n, trip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::BusKind;
    use num_complex::Complex64;

    fn bus(id: BusId, kind: BusKind) -> Bus<f64> {
        Bus {
            id,
            kind,
            p_inject: 0.0,
            q_inject: 0.0,
            v_setpoint: 1.0,
            v0_angle: 0.0,
            shunt_g: 0.0,
            shunt_b: 0.0,
        }
    }

    fn line(from: BusId, to: BusId, z: Complex64) -> Branch<f64> {
        Branch {
            from,
            to,
            series_z: z,
            charging_b: 0.0,
            tap: Complex64::new(1.0, 0.0),
            in_service: true,
        }
    }

    #[test]
    fn single_reactance_branch() {
        let buses = [bus(1, BusKind::Slack), bus(2, BusKind::Pq)];
        let y = build_ybus(&buses, &[line(1, 2, Complex64::new(0.0, 0.25))]).unwrap();
        let j4 = Complex64::new(0.0, 4.0);
        assert_eq!(y.get(0, 0), -j4);
        assert_eq!(y.get(0, 1), j4);
        assert_eq!(y.get(1, 0), j4);
        assert_eq!(y.get(1, 1), -j4);
    }

    #[test]
    fn unit_tap_matches_plain_line() {
        let buses = [bus(1, BusKind::Slack), bus(2, BusKind::Pq)];
        let plain = build_ybus(&buses, &[line(1, 2, Complex64::new(0.01, 0.1))]).unwrap();
        let mut tapped = line(1, 2, Complex64::new(0.01, 0.1));
        tapped.tap = Complex64::from_polar(1.0, 0.0);
        assert_eq!(build_ybus(&buses, &[tapped]).unwrap(), plain);
    }

    #[test]
    fn out_of_service_branch_contributes_nothing() {
        let buses = [bus(1, BusKind::Slack), bus(2, BusKind::Pq)];
        let mut l = line(1, 2, Complex64::new(0.0, 0.0));
        l.in_service = false;
        let y = build_ybus(&buses, &[l]).unwrap();
        assert_eq!(y.get(0, 1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_impedance_is_rejected() {
        let buses = [bus(1, BusKind::Slack), bus(2, BusKind::Pq)];
        let err = build_ybus(&buses, &[line(1, 2, Complex64::new(0.0, 0.0))]).unwrap_err();
        assert_eq!(err, Error::ZeroImpedance { from: 1, to: 2 });
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let m = SparseMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, 3.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.row(1).map(|(j, _)| j).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 2.0]), vec![2.0, 6.0]);
    }
}
