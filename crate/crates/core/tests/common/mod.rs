#![allow(dead_code)]

use helmgrid_core::BusId;
use helmgrid_core::netmodel::{parse_matpower, Branch, Bus, BusKind, NetworkModel};
use num_complex::Complex64;

pub fn case_path(name: &str) -> String {
    format!("{}/../../cases/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn load(name: &str) -> NetworkModel<f64> {
    let text = std::fs::read_to_string(case_path(&format!("{name}.m"))).unwrap();
    parse_matpower(&text).unwrap()
}

pub fn bus(id: BusId, kind: BusKind, p: f64, q: f64) -> Bus<f64> {
    Bus {
        id,
        kind,
        p_inject: p,
        q_inject: q,
        v_setpoint: 1.0,
        v0_angle: 0.0,
        shunt_g: 0.0,
        shunt_b: 0.0,
    }
}

pub fn line(from: BusId, to: BusId, z: Complex64) -> Branch<f64> {
    Branch {
        from,
        to,
        series_z: z,
        charging_b: 0.0,
        tap: Complex64::new(1.0, 0.0),
        in_service: true,
    }
}

/// Slack at 1∠0 feeding one PQ bus with injection `s` through `z`.
pub fn two_bus(z: Complex64, s: Complex64) -> NetworkModel<f64> {
    NetworkModel::new(
        vec![bus(1, BusKind::Slack, 0.0, 0.0), bus(2, BusKind::Pq, s.re, s.im)],
        vec![line(1, 2, z)],
        100.0,
    )
    .unwrap()
}

/// Reference voltages `(bus, vm, va_deg)` stored next to a case.
pub fn reference_solution(name: &str) -> Vec<(BusId, f64, f64)> {
    let text = std::fs::read_to_string(case_path(&format!("{name}_solution.csv"))).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

pub fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
