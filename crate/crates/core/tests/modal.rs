mod common;

use common::{bus, line, load, max_dev, reference_solution, two_bus};
use helmgrid_core::hem::power_balance_residual;
use helmgrid_core::linalg::DenseMatrix;
use helmgrid_core::modal::*;
use helmgrid_core::netmodel::{BusKind, MatpowerCase, NetworkModel};
use helmgrid_core::weakbus::{all_pq_variant, rank_weak_buses, SensitivityOptions};
use helmgrid_core::Error;
use num_complex::Complex64;

fn nr_matches_reference(name: &str) {
    let m = load(name);
    let st = newton_solve(&m);
    assert!(st.converged(), "{name}: {:?}", st.status);
    assert!(st.max_mismatch <= 1e-10);
    for (id, vm, va) in reference_solution(name) {
        let v = st.voltages[m.index_of(id).unwrap()];
        let expect = Complex64::from_polar(vm, va.to_radians());
        assert!((v - expect).norm() <= 1e-6, "{name} bus {id}: {v} vs {expect}");
    }
    assert!(power_balance_residual(&m, &st.voltages, 1.0) <= 1e-10);
}

#[test]
fn case14_newton_matches_published_solution() {
    nr_matches_reference("case14");
}

#[test]
fn case118_newton_matches_published_solution() {
    nr_matches_reference("case118");
}

#[test]
fn zero_load_network_sits_at_setpoints() {
    let m = NetworkModel::new(
        vec![
            bus(1, BusKind::Slack, 0.0, 0.0),
            bus(2, BusKind::Pq, 0.0, 0.0),
            bus(3, BusKind::Pq, 0.0, 0.0),
        ],
        vec![
            line(1, 2, Complex64::new(0.01, 0.1)),
            line(2, 3, Complex64::new(0.02, 0.1)),
        ],
        100.0,
    )
    .unwrap();
    let st = newton_solve(&m);
    assert!(st.converged());
    for v in &st.voltages {
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
    let c14 = load("case14").scale_injections(0.0);
    let st = newton_solve(&c14);
    assert!(st.converged());
    for i in c14.pv_indices() {
        assert!((st.voltages[i].norm() - c14.bus(i).v_setpoint).abs() < 1e-12);
    }
}

#[test]
fn case118_loadability_bracket() {
    let m = load("case118");
    assert!(newton_solve(&m.scale_injections(3.17)).converged());
    assert!(!newton_solve(&m.scale_injections(3.19)).converged());
    assert!(!newton_solve(&m.scale_injections(3.5)).converged());
}

#[test]
fn case118_collapse_by_bisection() {
    let lam = bisect_collapse(&load("case118"), 1.0, 4.0, 1e-3).unwrap();
    assert!((lam - 3.18).abs() <= 0.02, "{lam}");
}

#[test]
fn two_bus_collapse_by_bisection() {
    let m = two_bus(Complex64::new(0.0, 0.25), Complex64::new(-1.0, 0.0));
    let lam = bisect_collapse(&m, 1.0, 3.0, 1e-3).unwrap();
    assert!((lam - 2.0).abs() <= 0.002, "{lam}");
}

#[test]
fn infeasible_lower_bracket_is_an_error() {
    let m = two_bus(Complex64::new(0.0, 0.25), Complex64::new(-1.0, 0.0));
    assert!(matches!(bisect_collapse(&m, 2.5, 3.0, 1e-3), Err(Error::Bracket(_))));
}

#[test]
fn two_bus_reduced_jacobian_at_no_load() {
    let m = two_bus(Complex64::new(0.0, 0.25), Complex64::new(0.0, 0.0));
    let jr = reduced_jacobian(&m, &newton_solve(&m)).unwrap();
    assert_eq!(jr.buses, vec![2]);
    assert!((jr.matrix[(0, 0)] - 4.0).abs() < 1e-12);
}

#[test]
fn reduced_jacobian_needs_convergence() {
    let m = load("case118").scale_injections(3.5);
    assert!(reduced_jacobian(&m, &newton_solve(&m)).is_err());
}

/// Column k of `J_R`: pin every PQ magnitude (as PV), nudge bus k by ±h, let
/// the angles rebalance P, and difference the reactive injections.
fn finite_difference_jr(m: &NetworkModel<f64>, st: &SolvedState<f64>, h: f64) -> DenseMatrix<f64> {
    let pq = m.pq_indices();
    let mut out = DenseMatrix::zeros(pq.len(), pq.len());
    for (c, &k) in pq.iter().enumerate() {
        let q_at = |dv: f64| {
            let mut buses = m.buses().to_vec();
            for &i in &pq {
                buses[i].kind = BusKind::Pv;
                buses[i].v_setpoint = st.voltages[i].norm() + if i == k { dv } else { 0.0 };
            }
            let pinned = m.with_buses(buses).unwrap();
            let s = newton_solve_from(&pinned, &st.voltages, &NewtonOptions::default());
            assert!(s.converged());
            calc_injections(&pinned, &s.voltages)
        };
        let (up, dn) = (q_at(h), q_at(-h));
        for (r, &i) in pq.iter().enumerate() {
            out[(r, c)] = (up[i].im - dn[i].im) / (2.0 * h);
        }
    }
    out
}

#[test]
fn reduced_jacobian_matches_finite_differences() {
    let m = load("case14");
    let st = newton_solve(&m);
    let jr = reduced_jacobian(&m, &st).unwrap();
    let fd = finite_difference_jr(&m, &st, 1e-5);
    let scale = jr.matrix.max_abs();
    for r in 0..jr.buses.len() {
        for c in 0..jr.buses.len() {
            let (a, b) = (jr.matrix[(r, c)], fd[(r, c)]);
            assert!((a - b).abs() <= 1e-5 * scale.max(a.abs()), "J_R[{r},{c}] = {a} vs {b}");
        }
    }
}

#[test]
fn eigen_decomposition_reconstructs_reduced_jacobian() {
    for name in ["case14", "case118"] {
        let m = load(name);
        let jr = reduced_jacobian(&m, &newton_solve(&m)).unwrap().matrix;
        let eig = real_eigen(&jr).unwrap();
        let n = jr.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| eig.values[k] * eig.right[(i, k)] * eig.left[(k, j)]).sum();
                worst = worst.max((s - jr[(i, j)]).abs());
            }
        }
        let frob = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| jr[(i, j)].powi(2)).sum::<f64>().sqrt();
        assert!(worst / frob <= 1e-9, "{name}: {}", worst / frob);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn participation_factors_sum_to_one() {
    let m = load("case118");
    let jr = reduced_jacobian(&m, &newton_solve(&m)).unwrap();
    let r = participation_factors(&jr, 3).unwrap();
    assert_eq!(r.participation.len(), 3);
    for mode in &r.participation {
        let s: f64 = mode.iter().map(|p| p.1).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    assert_eq!(r.weakest_buses.len(), jr.buses.len());
}

fn all_pq(scale_q: f64) -> NetworkModel<f64> {
    let text = std::fs::read_to_string(common::case_path("case14.m")).unwrap();
    let mut case = all_pq_variant(&MatpowerCase::parse(&text).unwrap()).unwrap();
    case.scale_reactive_load(scale_q);
    case.to_model().unwrap()
}

#[test]
fn all_pq_variant_keeps_the_operating_point() {
    let orig = load("case14");
    let conv = all_pq(1.0);
    assert_eq!(conv.pv_indices().len(), 0);
    assert_eq!(conv.pq_indices().len(), 13);
    let a = newton_solve(&orig);
    let b = newton_solve(&conv);
    assert!(max_dev(&a.voltages, &b.voltages) < 1e-9);
}

#[test]
fn modal_and_sensitivity_rankings_agree_on_all_pq_case14() {
    let m = all_pq(1.0);
    let modal = participation_factors(&reduced_jacobian(&m, &newton_solve(&m)).unwrap(), 1).unwrap();
    let hem = rank_weak_buses(&m, 5, &SensitivityOptions::one_mvar(&m)).unwrap();
    let agree = compare_rankings(&hem.bus_order(), &modal.weakest_buses, 5);
    assert!(agree.exact_match, "{:?} vs {:?}", hem.bus_order(), &modal.weakest_buses[..5]);
    assert_eq!(agree.kendall_tau, 1.0);
    assert_eq!(hem.bus_order(), vec![14, 12, 13, 11, 10]);
}

#[test]
fn heavier_reactive_load_lowers_eigenvalue_and_raises_sensitivity() {
    let base = all_pq(1.0);
    let heavy = all_pq(2.5);
    let lam = |m: &NetworkModel<f64>| {
        let st = newton_solve(m);
        assert!(st.converged());
        participation_factors(&reduced_jacobian(m, &st).unwrap(), 1).unwrap().eigenvalues[0]
    };
    let top = |m: &NetworkModel<f64>| rank_weak_buses(m, 1, &SensitivityOptions::one_mvar(m)).unwrap().ranked[0].dv_dq;
    assert!(lam(&heavy) < lam(&base));
    assert!(top(&heavy) > top(&base));
}

#[test]
fn ranking_comparison_extremes() {
    let a = [14, 12, 13, 11, 10];
    assert_eq!(compare_rankings(&a, &a, 5).kendall_tau, 1.0);
    let rev: Vec<_> = a.iter().rev().copied().collect();
    assert_eq!(compare_rankings(&a, &rev, 5).kendall_tau, -1.0);
}
