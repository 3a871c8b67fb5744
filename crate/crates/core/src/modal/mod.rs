//! Reference solvers: Newton–Raphson power flow, collapse-point bisection and
//! modal analysis of the reduced Q–V Jacobian.

mod eigen;
mod newton;

use crate::error::{BusId, Error, Result};
use crate::linalg::DenseMatrix;
use crate::netmodel::NetworkModel;
use crate::scalar::Real;

pub use eigen::{eigenvalues, real_eigen, EigenDecomposition};
pub use newton::{
    bisect_collapse, calc_injections, flat_start, injection_derivatives, newton_mismatch,
    newton_solve, newton_solve_from, NewtonOptions, NewtonStatus, SolvedState,
};

/// `J_R = J_QV − J_Qθ J_Pθ⁻¹ J_PV` over the PQ buses, in model order.
#[derive(Debug, Clone)]
pub struct ReducedJacobian<T> {
    pub matrix: DenseMatrix<T>,
    pub buses: Vec<BusId>,
}

pub fn reduced_jacobian<T: Real>(
    model: &NetworkModel<T>,
    state: &SolvedState<T>,
) -> Result<ReducedJacobian<T>> {
    if !state.converged() {
        return Err(Error::InvalidArgument(
            "reduced Jacobian needs a converged state".into(),
        ));
    }
    let pq = model.pq_indices();
    let pvpq = model.non_slack_indices();
    let (d_ang, d_mag) = injection_derivatives(model, &state.voltages);
    let re = |m: &DenseMatrix<_>, r: &[usize], c: &[usize]| {
        let mut out = DenseMatrix::zeros(r.len(), c.len());
        for (i, &ri) in r.iter().enumerate() {
            for (j, &cj) in c.iter().enumerate() {
                let z: num_complex::Complex<T> = m[(ri, cj)];
                out[(i, j)] = z.re;
            }
        }
        out
    };
    let im = |m: &DenseMatrix<_>, r: &[usize], c: &[usize]| {
        let mut out = DenseMatrix::zeros(r.len(), c.len());
        for (i, &ri) in r.iter().enumerate() {
            for (j, &cj) in c.iter().enumerate() {
                let z: num_complex::Complex<T> = m[(ri, cj)];
                out[(i, j)] = z.im;
            }
        }
        out
    };
    let j_pt = re(&d_ang, &pvpq, &pvpq);
    let j_pv = re(&d_mag, &pvpq, &pq);
    let j_qt = im(&d_ang, &pq, &pvpq);
    let j_qv = im(&d_mag, &pq, &pq);

    let lu = j_pt
        .lu()
        .map_err(|_| Error::Singular("P-θ block of the Jacobian".into()))?;
    // X = J_Pθ⁻¹ J_PV, column by column
    let mut x = DenseMatrix::zeros(pvpq.len(), pq.len());
    for c in 0..pq.len() {
        let col: Vec<T> = (0..pvpq.len()).map(|r| j_pv[(r, c)]).collect();
        let sol = lu.solve(&col);
        for r in 0..pvpq.len() {
            x[(r, c)] = sol[r];
        }
    }
    Ok(ReducedJacobian {
        matrix: j_qv.sub(&j_qt.matmul(&x)),
        buses: pq.iter().map(|&i| model.bus(i).id).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct ModalResult<T> {
    /// Ascending eigenvalues of `J_R`.
    pub eigenvalues: Vec<T>,
    /// For each of the `k` smallest modes, `(bus, participation)` in bus order;
    /// each mode's factors sum to one.
    pub participation: Vec<Vec<(BusId, T)>>,
    /// Buses by descending participation in the smallest mode (ties by id).
    pub weakest_buses: Vec<BusId>,
}

pub fn participation_factors<T: Real>(jr: &ReducedJacobian<T>, k: usize) -> Result<ModalResult<T>> {
    let n = jr.buses.len();
    if jr.matrix.rows() != n || jr.matrix.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: jr.matrix.rows(),
        });
    }
    if n == 0 {
        return Ok(ModalResult {
            eigenvalues: vec![],
            participation: vec![],
            weakest_buses: vec![],
        });
    }
    let eig = real_eigen(&jr.matrix)?;
    let participation: Vec<Vec<(BusId, T)>> = (0..k.clamp(1, n))
        .map(|mode| {
            let raw: Vec<T> = (0..n)
                .map(|i| eig.right[(i, mode)] * eig.left[(mode, i)])
                .collect();
            let total: T = raw.iter().copied().sum();
            jr.buses
                .iter()
                .zip(raw)
                .map(|(&b, p)| (b, p / total))
                .collect()
        })
        .collect();
    let mut order = participation[0].clone();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
    Ok(ModalResult {
        eigenvalues: eig.values,
        participation,
        weakest_buses: order.into_iter().map(|(b, _)| b).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingAgreement {
    pub exact_match: bool,
    /// Kendall's τ over the buses present in both top-k lists (1 when fewer
    /// than two are shared).
    pub kendall_tau: f64,
    /// `(position, first, second)` wherever the lists differ.
    pub differences: Vec<(usize, Option<BusId>, Option<BusId>)>,
}

pub fn compare_rankings(first: &[BusId], second: &[BusId], top_k: usize) -> RankingAgreement {
    let a = &first[..top_k.min(first.len())];
    let b = &second[..top_k.min(second.len())];
    let len = a.len().max(b.len());
    let differences: Vec<_> = (0..len)
        .filter_map(|p| {
            let (x, y) = (a.get(p).copied(), b.get(p).copied());
            (x != y).then_some((p, x, y))
        })
        .collect();
    let common: Vec<BusId> = a.iter().copied().filter(|x| b.contains(x)).collect();
    let pos_b = |x: BusId| b.iter().position(|&y| y == x).unwrap();
    let m = common.len();
    let kendall_tau = if m < 2 {
        1.0
    } else {
        let mut score = 0i64;
        for i in 0..m {
            for j in i + 1..m {
                score += if pos_b(common[i]) < pos_b(common[j]) { 1 } else { -1 };
            }
        }
        score as f64 / (m * (m - 1) / 2) as f64
    };
    RankingAgreement {
        exact_match: differences.is_empty(),
        kendall_tau,
        differences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_modes_share_participation() {
        let jr = ReducedJacobian {
            matrix: DenseMatrix::from_rows(&[vec![2.0f64, -1.0], vec![-1.0, 2.0]]).unwrap(),
            buses: vec![7, 9],
        };
        let r = participation_factors(&jr, 2).unwrap();
        for mode in &r.participation {
            for &(_, p) in mode {
                assert!((p - 0.5).abs() < 1e-12);
            }
        }
        assert_eq!(r.weakest_buses, vec![7, 9]);
    }

    #[test]
    fn kendall_extremes() {
        let a = [14, 12, 13, 11, 10];
        let rev: Vec<BusId> = a.iter().rev().copied().collect();
        assert_eq!(compare_rankings(&a, &a, 5).kendall_tau, 1.0);
        let r = compare_rankings(&a, &rev, 5);
        assert_eq!(r.kendall_tau, -1.0);
        assert!(!r.exact_match);
        assert_eq!(r.differences.len(), 4);
    }
}
