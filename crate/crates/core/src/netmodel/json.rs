//! Internal JSON case schema (see `docs/case-schema.md`).

use serde::{Deserialize, Serialize};

use crate::error::{BusId, Error, Result};
use crate::scalar::{cx, Real};

use super::{Branch, Bus, BusKind, NetworkModel};

/// Serialized form of a network. All quantities are per-unit on `base_mva`,
/// angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub base_mva: f64,
    #[serde(default = "one")]
    pub injection_scale: f64,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: BusId,
    pub kind: BusKind,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default = "one")]
    pub v_setpoint: f64,
    #[serde(default)]
    pub v0_angle: f64,
    #[serde(default)]
    pub shunt_g: f64,
    #[serde(default)]
    pub shunt_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRecord {
    pub from: BusId,
    pub to: BusId,
    /// Series impedance `[r, x]`.
    pub z: [f64; 2],
    #[serde(default)]
    pub charging_b: f64,
    /// Complex tap `[re, im]`.
    #[serde(default = "unit_tap")]
    pub tap: [f64; 2],
    #[serde(default = "yes")]
    pub in_service: bool,
}

fn one() -> f64 {
    1.0
}

fn unit_tap() -> [f64; 2] {
    [1.0, 0.0]
}

fn yes() -> bool {
    true
}

impl CaseFile {
    pub fn from_model<T: Real>(m: &NetworkModel<T>) -> Self {
        Self {
            base_mva: m.base_mva().as_f64(),
            injection_scale: m.injection_scale().as_f64(),
            buses: m
                .buses()
                .iter()
                .map(|b| BusRecord {
                    id: b.id,
                    kind: b.kind,
                    p: b.p_inject.as_f64(),
                    q: b.q_inject.as_f64(),
                    v_setpoint: b.v_setpoint.as_f64(),
                    v0_angle: b.v0_angle.as_f64(),
                    shunt_g: b.shunt_g.as_f64(),
                    shunt_b: b.shunt_b.as_f64(),
                })
                .collect(),
            branches: m
                .branches()
                .iter()
                .map(|br| BranchRecord {
                    from: br.from,
                    to: br.to,
                    z: [br.series_z.re.as_f64(), br.series_z.im.as_f64()],
                    charging_b: br.charging_b.as_f64(),
                    tap: [br.tap.re.as_f64(), br.tap.im.as_f64()],
                    in_service: br.in_service,
                })
                .collect(),
        }
    }

    pub fn to_model<T: Real>(&self) -> Result<NetworkModel<T>> {
        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id,
                kind: b.kind,
                p_inject: T::lit(b.p),
                q_inject: T::lit(b.q),
                v_setpoint: T::lit(b.v_setpoint),
                v0_angle: T::lit(b.v0_angle),
                shunt_g: T::lit(b.shunt_g),
                shunt_b: T::lit(b.shunt_b),
            })
            .collect();
        let branches = self
            .branches
            .iter()
            .map(|b| Branch {
                from: b.from,
                to: b.to,
                series_z: cx(T::lit(b.z[0]), T::lit(b.z[1])),
                charging_b: T::lit(b.charging_b),
                tap: cx(T::lit(b.tap[0]), T::lit(b.tap[1])),
                in_service: b.in_service,
            })
            .collect();
        if !(self.injection_scale >= 0.0) {
            return Err(Error::Json("injection_scale must be non-negative".into()));
        }
        let mut m = NetworkModel::new(buses, branches, T::lit(self.base_mva))?;
        m.set_injection_scale(T::lit(self.injection_scale));
        Ok(m)
    }
}

pub fn model_from_json<T: Real>(text: &str) -> Result<NetworkModel<T>> {
    let case: CaseFile = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
    case.to_model()
}

pub fn model_to_json<T: Real>(m: &NetworkModel<T>) -> String {
    serde_json::to_string_pretty(&CaseFile::from_model(m)).expect("case serialization is infallible")
}
