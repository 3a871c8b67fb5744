mod common;

use common::{bus, line, load, two_bus};
use helmgrid_core::netmodel::{model_from_json, model_to_json, parse_matpower, BusKind, MatpowerCase, NetworkModel};
use helmgrid_core::{BusId, Error};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense Y = Aᵀ·Y_prim·A over an incidence matrix, plus bus shunts.
fn incidence_ybus(case: &MatpowerCase) -> (Vec<BusId>, Vec<Vec<Complex64>>) {
    let ids: Vec<BusId> = case.bus.iter().map(|r| r[0] as BusId).collect();
    let n = ids.len();
    let pos = |id: f64| ids.iter().position(|&b| b == id as BusId).unwrap();
    let mut y = vec![vec![c(0.0, 0.0); n]; n];
    for br in case.branch.iter().filter(|r| r[10] != 0.0) {
        let (f, t) = (pos(br[0]), pos(br[1]));
        let ys = c(1.0, 0.0) / c(br[2], br[3]);
        let half_b = c(0.0, br[4] / 2.0);
        let ratio = if br[8] == 0.0 { 1.0 } else { br[8] };
        let tap = Complex64::from_polar(ratio, br[9].to_radians());
        let prim = [
            [(ys + half_b) / (tap * tap.conj()), -ys / tap.conj()],
            [-ys / tap, ys + half_b],
        ];
        // incidence rows: branch end k maps to bus ends[k]
        let ends = [f, t];
        for a in 0..2 {
            for b in 0..2 {
                y[ends[a]][ends[b]] += prim[a][b];
            }
        }
    }
    for (i, r) in case.bus.iter().enumerate() {
        y[i][i] += c(r[4], r[5]) / case.base_mva;
    }
    (ids, y)
}

fn ybus_matches_incidence_oracle(name: &str) {
    let text = std::fs::read_to_string(common::case_path(&format!("{name}.m"))).unwrap();
    let case = MatpowerCase::parse(&text).unwrap();
    let model: NetworkModel<f64> = case.to_model().unwrap();
    let (ids, oracle) = incidence_ybus(&case);
    let y = model.ybus();
    for (a, &ia) in ids.iter().enumerate() {
        for (b, &ib) in ids.iter().enumerate() {
            let got = y.get(model.index_of(ia).unwrap(), model.index_of(ib).unwrap());
            assert!((got - oracle[a][b]).norm() <= 1e-12, "{name} Y[{ia},{ib}] = {got} vs {}", oracle[a][b]);
        }
    }
}

#[test]
fn case14_ybus_matches_incidence_oracle() {
    ybus_matches_incidence_oracle("case14");
}

#[test]
fn case118_ybus_matches_incidence_oracle() {
    ybus_matches_incidence_oracle("case118");
}

#[test]
fn case14_bus_and_branch_counts() {
    let m = load("case14");
    assert_eq!(m.n_buses(), 14);
    assert_eq!(m.branches().len(), 20);
    assert_eq!(m.indices_of(BusKind::Slack).len(), 1);
    assert_eq!(m.pv_indices().len(), 4);
    assert_eq!(m.pq_indices().len(), 9);
}

#[test]
fn two_bus_ybus_is_one_over_z() {
    let m = two_bus(c(0.0, 0.25), c(-1.0, 0.0));
    let y = m.ybus().to_dense();
    let expect = [[c(0.0, -4.0), c(0.0, 4.0)], [c(0.0, 4.0), c(0.0, -4.0)]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((y[(i, j)] - expect[i][j]).norm() < 1e-15);
        }
    }
}

#[test]
fn unit_tap_reduces_to_plain_line() {
    let a = two_bus(c(0.02, 0.25), c(-1.0, 0.0));
    let mut br = a.branches().to_vec();
    br[0].tap = c(1.0, 0.0);
    br[0].charging_b = 0.0;
    let b = NetworkModel::new(a.buses().to_vec(), br, 100.0).unwrap();
    assert_eq!(a.ybus().to_dense(), b.ybus().to_dense());
}

#[test]
fn row_sums_equal_bus_shunts_without_charging() {
    let mut buses = vec![
        bus(1, BusKind::Slack, 0.0, 0.0),
        bus(2, BusKind::Pq, -0.5, -0.1),
        bus(3, BusKind::Pq, -0.2, 0.0),
    ];
    buses[1].shunt_b = 0.19;
    buses[2].shunt_g = 0.03;
    let m = NetworkModel::new(
        buses.clone(),
        vec![line(1, 2, c(0.01, 0.1)), line(2, 3, c(0.02, 0.2)), line(1, 3, c(0.0, 0.3))],
        100.0,
    )
    .unwrap();
    for (i, b) in buses.iter().enumerate() {
        let s = m.ybus().row_sum(i);
        assert!((s - c(b.shunt_g, b.shunt_b)).norm() < 1e-13);
    }
}

#[test]
fn missing_slack_is_rejected() {
    let text = std::fs::read_to_string(common::case_path("case14.m")).unwrap();
    let patched = text.replacen("\t1\t3\t0\t0", "\t1\t2\t0\t0", 1);
    assert_ne!(patched, text);
    assert_eq!(parse_matpower::<f64>(&patched).unwrap_err(), Error::NoSlack);
}

#[test]
fn scaling_composes_exactly() {
    let m = load("case118");
    for (a, b) in [(1.3, 2.1), (0.7, 3.0), (1.0 / 3.0, 3.0)] {
        let once = m.scale_injections(a * b);
        let twice = m.scale_injections(a).scale_injections(b);
        assert_eq!(once.injections(), twice.injections());
    }
    assert_eq!(m.scale_injections(1.0).injections(), m.injections());
}

#[test]
fn json_round_trip_is_identity() {
    for name in ["case14", "case118"] {
        let m = load(name).scale_injections(1.25);
        let back: NetworkModel<f64> = model_from_json(&model_to_json(&m)).unwrap();
        assert_eq!(back.buses(), m.buses());
        assert_eq!(back.branches(), m.branches());
        assert_eq!(back.injections(), m.injections());
        assert_eq!(back.ybus().to_dense(), m.ybus().to_dense());
    }
}

#[test]
fn matpower_text_round_trip() {
    let text = std::fs::read_to_string(common::case_path("case118.m")).unwrap();
    let case = MatpowerCase::parse(&text).unwrap();
    let again = MatpowerCase::parse(&case.to_text("case118")).unwrap();
    assert_eq!(case, again);
}

#[test]
fn twobus_fixture_file_parses() {
    let text = std::fs::read_to_string(common::case_path("twobus.json")).unwrap();
    let m: NetworkModel<f64> = model_from_json(&text).unwrap();
    assert_eq!(m.n_buses(), 2);
    assert_eq!(m.injection(1), c(-1.0, 0.0));
    assert!((m.ybus().get(0, 1) - c(0.0, 4.0)).norm() < 1e-15);
}
