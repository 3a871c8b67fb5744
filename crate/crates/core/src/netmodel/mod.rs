//! Network data model: buses, branches, admittance matrix and case I/O.

mod json;
mod matpower;
mod ybus;

use std::collections::{HashMap, VecDeque};

use crate::error::{BusId, Error, Result};
use crate::scalar::{cx, Cx, Real};

pub use json::{model_from_json, model_to_json, CaseFile};
pub use matpower::{parse_matpower, MatpowerCase};
pub use ybus::{build_ybus, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// One bus. Injections are generation minus load, in per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    pub id: BusId,
    pub kind: BusKind,
    pub p_inject: T,
    pub q_inject: T,
    /// Voltage magnitude setpoint (slack and PV buses).
    pub v_setpoint: T,
    /// Voltage angle in radians; only the slack value is used.
    pub v0_angle: T,
    pub shunt_g: T,
    pub shunt_b: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub from: BusId,
    pub to: BusId,
    pub series_z: Cx<T>,
    /// Total line charging susceptance.
    pub charging_b: T,
    /// Complex off-nominal turns ratio on the `from` side.
    pub tap: Cx<T>,
    pub in_service: bool,
}

/// Validated single-island network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel<T> {
    buses: Vec<Bus<T>>,
    branches: Vec<Branch<T>>,
    ybus: SparseMatrix<Cx<T>>,
    base_mva: T,
    injection_scale: T,
    slack: usize,
    index: HashMap<BusId, usize>,
}

impl<T: Real> NetworkModel<T> {
    /// Validates the bus and branch lists and builds the admittance matrix.
    pub fn new(buses: Vec<Bus<T>>, branches: Vec<Branch<T>>, base_mva: T) -> Result<Self> {
        if !(base_mva > T::zero()) {
            return Err(Error::InvalidArgument("base MVA must be positive".into()));
        }
        let mut index = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id, i).is_some() {
                return Err(Error::DuplicateBus(b.id));
            }
        }
        let mut slack: Option<usize> = None;
        for (i, b) in buses.iter().enumerate() {
            if b.kind == BusKind::Slack {
                if let Some(s) = slack {
                    return Err(Error::MultipleSlack(buses[s].id, b.id));
                }
                slack = Some(i);
            }
            if b.kind != BusKind::Pq && !(b.v_setpoint > T::zero()) {
                return Err(Error::MissingSetpoint(b.id));
            }
        }
        let slack = slack.ok_or(Error::NoSlack)?;
        for br in &branches {
            for id in [br.from, br.to] {
                if !index.contains_key(&id) {
                    return Err(Error::UnknownBus(id));
                }
            }
        }
        check_connected(&buses, &branches, &index, slack)?;
        let ybus = build_ybus(&buses, &branches)?;
        Ok(Self {
            buses,
            branches,
            ybus,
            base_mva,
            injection_scale: T::one(),
            slack,
            index,
        })
    }

    pub fn buses(&self) -> &[Bus<T>] {
        &self.buses
    }

    pub fn bus(&self, i: usize) -> &Bus<T> {
        &self.buses[i]
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn ybus(&self) -> &SparseMatrix<Cx<T>> {
        &self.ybus
    }

    pub fn base_mva(&self) -> T {
        self.base_mva
    }

    /// Multiplier applied to every stored injection (see [`Self::scale_injections`]).
    pub fn injection_scale(&self) -> T {
        self.injection_scale
    }

    pub fn index_of(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Complex slack voltage `V0`.
    pub fn slack_voltage(&self) -> Cx<T> {
        let s = &self.buses[self.slack];
        Cx::from_polar(s.v_setpoint, s.v0_angle)
    }

    pub fn indices_of(&self, kind: BusKind) -> Vec<usize> {
        (0..self.buses.len())
            .filter(|&i| self.buses[i].kind == kind)
            .collect()
    }

    pub fn pq_indices(&self) -> Vec<usize> {
        self.indices_of(BusKind::Pq)
    }

    pub fn pv_indices(&self) -> Vec<usize> {
        self.indices_of(BusKind::Pv)
    }

    /// PV buses followed by PQ buses, each in model order.
    pub fn non_slack_indices(&self) -> Vec<usize> {
        let mut v = self.pv_indices();
        v.extend(self.pq_indices());
        v
    }

    /// Scheduled complex injection of bus `i`, including the injection scale.
    pub fn injection(&self, i: usize) -> Cx<T> {
        let b = &self.buses[i];
        cx(b.p_inject, b.q_inject) * self.injection_scale
    }

    pub fn injections(&self) -> Vec<Cx<T>> {
        (0..self.buses.len()).map(|i| self.injection(i)).collect()
    }

    /// Every complex injection multiplied by `lambda` (PV voltage setpoints
    /// untouched). Scaling composes exactly: the factor is kept separately
    /// from the stored base injections.
    pub fn scale_injections(&self, lambda: T) -> Self {
        let mut out = self.clone();
        out.injection_scale = self.injection_scale * lambda;
        out
    }

    /// Replaces bus data (same ids and order) and rebuilds derived state.
    pub fn with_buses(&self, buses: Vec<Bus<T>>) -> Result<Self> {
        let mut m = Self::new(buses, self.branches.clone(), self.base_mva)?;
        m.injection_scale = self.injection_scale;
        Ok(m)
    }

    /// Copy whose stored injections already include the scale factor.
    pub fn with_scale_applied(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.buses {
            b.p_inject *= self.injection_scale;
            b.q_inject *= self.injection_scale;
        }
        out.injection_scale = T::one();
        out
    }

    pub(crate) fn set_injection_scale(&mut self, s: T) {
        self.injection_scale = s;
    }
}

fn check_connected<T>(
    buses: &[Bus<T>],
    branches: &[Branch<T>],
    index: &HashMap<BusId, usize>,
    slack: usize,
) -> Result<()> {
    let n = buses.len();
    let mut adj = vec![Vec::new(); n];
    for br in branches.iter().filter(|b| b.in_service) {
        let (f, t) = (index[&br.from], index[&br.to]);
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([slack]);
    seen[slack] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(Error::Disconnected(buses[i].id)),
        None => Ok(()),
    }
}
