//! Weak-bus ranking from V–Q sensitivities of the direction-of-change
//! embedding.
//!
//! With `ΔS = j·dq` at one bus, `|V_i(α)|` changes at `α = 0` by
//! `Re(conj(c0)·c1)/|c0|`, where `c0, c1` are the first two coefficients of
//! the bus voltage series. Only two terms are needed.

use rayon::prelude::*;

use crate::error::{BusId, Error, Result};
use crate::hem::{compute_series, embed_direction_from, EmbeddedSystem, ScalingDirection};
use crate::modal::{calc_injections, newton_solve, SolvedState};
use crate::netmodel::{BusKind, MatpowerCase, NetworkModel};
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// Net reactive injection is positive (generating VArs).
    PositiveReactiveInjection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRecord<T> {
    pub bus: BusId,
    /// `|∂|V_i|/∂Q_i|`, per-unit voltage per per-unit reactive power.
    pub dv_dq: T,
    /// True when `∂|V_i|/∂Q_i` (Q as an injection) is positive, the normal
    /// case of voltage rising with injected VArs.
    pub positive: bool,
    pub excluded: Option<Exclusion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakBusRanking<T> {
    /// Eligible buses by descending `dv_dq`, ties by ascending id.
    pub ranked: Vec<SensitivityRecord<T>>,
    pub excluded: Vec<SensitivityRecord<T>>,
    pub operating_point: String,
}

impl<T> WeakBusRanking<T> {
    pub fn bus_order(&self) -> Vec<BusId> {
        self.ranked.iter().map(|r| r.bus).collect()
    }

    /// Ranked buses whose sensitivity had the unexpected sign.
    pub fn sign_warnings(&self) -> Vec<BusId> {
        self.ranked.iter().filter(|r| !r.positive).map(|r| r.bus).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityOptions<T> {
    /// Reactive increment in system per-unit.
    pub dq: T,
    pub n_terms: usize,
}

impl<T: Real> SensitivityOptions<T> {
    /// 1 MVAr on the model's base.
    pub fn one_mvar(model: &NetworkModel<T>) -> Self {
        Self {
            dq: T::one() / model.base_mva(),
            n_terms: 2,
        }
    }
}

fn signed_sensitivity<T: Real>(sys: &EmbeddedSystem<T>, i: usize, dq: T, n_terms: usize) -> Result<T> {
    let bus = sys.model().bus(i).id;
    let dir = ScalingDirection::single_bus(sys.model(), bus, cx(T::zero(), dq))?;
    let sol = compute_series(&sys.redirect(dir)?, n_terms)?;
    let c = sol.voltages[i].coeffs();
    Ok((c[0].conj() * c[1]).re / (c[0].norm() * dq))
}

fn check<T: Real>(model: &NetworkModel<T>, bus: BusId, dq: T) -> Result<usize> {
    let i = model.index_of(bus).ok_or(Error::UnknownBus(bus))?;
    if model.bus(i).kind != BusKind::Pq {
        return Err(Error::NotPq(bus));
    }
    if !(dq > T::zero()) {
        return Err(Error::InvalidArgument("reactive increment must be positive".into()));
    }
    Ok(i)
}

/// `∂|V_i|/∂Q_i` at the base case (Q as an injection).
pub fn vq_sensitivity<T: Real>(model: &NetworkModel<T>, bus: BusId, dq: T) -> Result<T> {
    let i = check(model, bus, dq)?;
    let base = newton_solve(model);
    let sys = embed_direction_from(model, &base, ScalingDirection::zero(model))?;
    signed_sensitivity(&sys, i, dq, 2)
}

/// Sensitivities of every PQ bus from a shared base case and factorization,
/// in model order.
pub fn vq_sensitivities<T: Real>(
    model: &NetworkModel<T>,
    base: &SolvedState<T>,
    opts: &SensitivityOptions<T>,
) -> Result<Vec<SensitivityRecord<T>>> {
    if !(opts.dq > T::zero()) {
        return Err(Error::InvalidArgument("reactive increment must be positive".into()));
    }
    let sys = embed_direction_from(model, base, ScalingDirection::zero(model))?;
    model
        .pq_indices()
        .into_par_iter()
        .map(|i| {
            let s = signed_sensitivity(&sys, i, opts.dq, opts.n_terms.max(2))?;
            let b = model.bus(i);
            Ok(SensitivityRecord {
                bus: b.id,
                dv_dq: s.abs(),
                positive: s > T::zero(),
                excluded: (model.injection(i).im > T::zero()).then_some(Exclusion::PositiveReactiveInjection),
            })
        })
        .collect()
}

pub fn rank_weak_buses<T: Real>(
    model: &NetworkModel<T>,
    top_k: usize,
    opts: &SensitivityOptions<T>,
) -> Result<WeakBusRanking<T>> {
    let base = newton_solve(model);
    let records = vq_sensitivities(model, &base, opts)?;
    let (mut ranked, excluded): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.excluded.is_none());
    ranked.sort_by(|a, b| {
        b.dv_dq
            .partial_cmp(&a.dv_dq)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.bus.cmp(&b.bus))
    });
    ranked.truncate(top_k);
    Ok(WeakBusRanking {
        ranked,
        excluded,
        operating_point: format!("injection scale {}", model.injection_scale()),
    })
}

/// Converts every PV bus of `case` to PQ, fixing its generation at the
/// Newton–Raphson solution of the original case so the operating point is
/// unchanged. The slack bus is kept.
pub fn all_pq_variant(case: &MatpowerCase) -> Result<MatpowerCase> {
    let model: NetworkModel<f64> = case.to_model()?;
    let st = newton_solve(&model);
    if !st.converged() {
        return Err(Error::BaseCaseUnsolvable(format!("{:?}", st.status)));
    }
    let s: Vec<Cx<f64>> = calc_injections(&model, &st.voltages);
    let base = case.base_mva;
    let mut out = case.clone();
    for row in out.bus.iter_mut() {
        let id = row[0] as BusId;
        let i = model.index_of(id).expect("bus present in parsed model");
        row[7] = st.voltages[i].norm();
        row[8] = st.voltages[i].arg().to_degrees();
        if row[1] != 2.0 {
            continue;
        }
        row[1] = 1.0;
        // real power already matches the schedule; only Q is fixed here
        let qd = row[3];
        let mut first = true;
        for g in out.gen.iter_mut().filter(|g| g[0] as BusId == id && g[7] > 0.0) {
            g[2] = if first { s[i].im * base + qd } else { 0.0 };
            first = false;
        }
    }
    Ok(out)
}
