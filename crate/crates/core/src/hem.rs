//! Holomorphically embedded power flow.
//!
//! Two embeddings are provided:
//!
//! * [`EmbeddingMode::AllScaling`]: the admittance matrix is split into a
//!   transfer part with zero row sums and a per-bus shunt part. At `α = 0`
//!   every bus sits at the slack voltage with no load; at `α = 1` all
//!   injections are scaled by `λ`. PV magnitudes move linearly in `|V|²`
//!   from `|V0|²` to the setpoint.
//! * [`EmbeddingMode::DirectionOfChange`]: the germ is the solved base case
//!   and `α` scales an injection increment `ΔS`. The linear operator does not
//!   depend on `ΔS`, so one factorization serves every direction.
//!
//! In both cases each voltage series `V(α)` is paired with its reciprocal
//! series `W(α) = 1/V(α)`, whose conjugated coefficients give `1/V*(α*)`.
//! Every order is obtained by one back-substitution through the same real
//! LU factors.

use std::sync::Arc;

use crate::approximant::{build_pade_auto, build_pade_descending};
use crate::error::{BusId, Error, Result};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::modal::{calc_injections, newton_solve, SolvedState};
use crate::netmodel::{BusKind, NetworkModel};
use crate::scalar::{cx, czero, Cx, Real};
use crate::series::PowerSeries;

/// Per-bus complex injection increment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDirection<T> {
    delta_s: Vec<Cx<T>>,
}

impl<T: Real> ScalingDirection<T> {
    /// Checks the dimension; the slack entry must be zero and PV buses may
    /// only take real-power increments.
    pub fn new(model: &NetworkModel<T>, delta_s: Vec<Cx<T>>) -> Result<Self> {
        if delta_s.len() != model.n_buses() {
            return Err(Error::DimensionMismatch {
                expected: model.n_buses(),
                got: delta_s.len(),
            });
        }
        for (i, d) in delta_s.iter().enumerate() {
            let b = model.bus(i);
            let bad = match b.kind {
                BusKind::Slack => d.norm() != T::zero(),
                BusKind::Pv => d.im != T::zero(),
                BusKind::Pq => false,
            };
            if bad {
                return Err(Error::InvalidDirection(b.id));
            }
        }
        Ok(Self { delta_s })
    }

    /// Increment `ds` at a single bus, zero elsewhere.
    pub fn single_bus(model: &NetworkModel<T>, bus: BusId, ds: Cx<T>) -> Result<Self> {
        let i = model.index_of(bus).ok_or(Error::UnknownBus(bus))?;
        let mut d = vec![czero(); model.n_buses()];
        d[i] = ds;
        Self::new(model, d)
    }

    pub fn zero(model: &NetworkModel<T>) -> Self {
        Self {
            delta_s: vec![czero(); model.n_buses()],
        }
    }

    pub fn delta_s(&self) -> &[Cx<T>] {
        &self.delta_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingMode<T> {
    AllScaling(T),
    DirectionOfChange(ScalingDirection<T>),
}

/// Unknown layout of the real order-`n` system: for every non-slack bus two
/// columns (Re, Im of `V[n]`), then one column per PV bus for `Q[n]`.
#[derive(Debug)]
struct Operator<T> {
    lu: LuFactors<T>,
    /// Non-slack bus indices, PV first; position = block number.
    ns: Vec<usize>,
    /// Block position of each bus, `None` for the slack.
    pos: Vec<Option<usize>>,
    /// Indices (into `ns`) of PV buses, with their `Q` column offset.
    n_pv: usize,
}

#[derive(Debug, Clone)]
pub struct EmbeddedSystem<T> {
    model: Arc<NetworkModel<T>>,
    mode: EmbeddingMode<T>,
    op: Arc<Operator<T>>,
    germ: Vec<Cx<T>>,
    /// Germ reactive output of PV buses (zero under all-scaling).
    germ_q: Vec<T>,
    /// Shunt part of `Y` (all-scaling only).
    shunt: Vec<Cx<T>>,
    germ_residual: T,
}

fn split_ybus<T: Real>(model: &NetworkModel<T>) -> (DenseMatrix<Cx<T>>, Vec<Cx<T>>) {
    let n = model.n_buses();
    let y = model.ybus();
    let mut ytr = y.to_dense();
    let mut ysh = vec![czero(); n];
    for i in 0..n {
        ysh[i] = y.row_sum(i);
        ytr[(i, i)] -= ysh[i];
    }
    (ytr, ysh)
}

/// Assembles and factors the real operator. `conj_coef[i]` multiplies
/// `conj(V_i[n])` (zero for all-scaling).
fn build_operator<T: Real>(
    model: &NetworkModel<T>,
    mat: &DenseMatrix<Cx<T>>,
    germ: &[Cx<T>],
    conj_coef: &[Cx<T>],
) -> Result<Operator<T>> {
    let ns = model.non_slack_indices();
    let n_pv = model.pv_indices().len();
    let mut pos = vec![None; model.n_buses()];
    for (p, &i) in ns.iter().enumerate() {
        pos[i] = Some(p);
    }
    let dim = 2 * ns.len() + n_pv;
    let mut a = DenseMatrix::<T>::zeros(dim, dim);
    for (p, &i) in ns.iter().enumerate() {
        let (r_re, r_im) = (2 * p, 2 * p + 1);
        for (q, &k) in ns.iter().enumerate() {
            let c = mat[(i, k)];
            let (c_re, c_im) = (2 * q, 2 * q + 1);
            a[(r_re, c_re)] += c.re;
            a[(r_re, c_im)] -= c.im;
            a[(r_im, c_re)] += c.im;
            a[(r_im, c_im)] += c.re;
        }
        let b = conj_coef[i];
        a[(r_re, 2 * p)] += b.re;
        a[(r_re, 2 * p + 1)] += b.im;
        a[(r_im, 2 * p)] += b.im;
        a[(r_im, 2 * p + 1)] -= b.re;
        if p < n_pv {
            // + j Q[n] conj(W0)
            let w0c = germ[i].inv().conj();
            let c = cx(-w0c.im, w0c.re);
            let col = 2 * ns.len() + p;
            a[(r_re, col)] += c.re;
            a[(r_im, col)] += c.im;
            // 2 Re(conj(V0) V[n])
            let row = 2 * ns.len() + p;
            a[(row, 2 * p)] = T::lit(2.0) * germ[i].re;
            a[(row, 2 * p + 1)] = T::lit(2.0) * germ[i].im;
        }
    }
    let lu = LuFactors::new(a).map_err(|_| Error::Singular("embedded germ operator".into()))?;
    Ok(Operator { lu, ns, pos, n_pv })
}

/// Builds the embedded system for `mode`.
pub fn embed<T: Real>(model: &NetworkModel<T>, mode: EmbeddingMode<T>) -> Result<EmbeddedSystem<T>> {
    match mode {
        EmbeddingMode::AllScaling(lambda) => embed_all_scaling(model, lambda),
        EmbeddingMode::DirectionOfChange(dir) => {
            let base = newton_solve(model);
            embed_direction_from(model, &base, dir)
        }
    }
}

fn embed_all_scaling<T: Real>(model: &NetworkModel<T>, lambda: T) -> Result<EmbeddedSystem<T>> {
    let n = model.n_buses();
    let v0 = model.slack_voltage();
    let germ = vec![v0; n];
    let (ytr, ysh) = split_ybus(model);
    let op = build_operator(model, &ytr, &germ, &vec![czero(); n])?;
    let germ_residual = (0..n)
        .map(|i| (0..n).fold(czero(), |acc: Cx<T>, k| acc + ytr[(i, k)] * germ[k]).norm())
        .fold(T::zero(), T::max);
    Ok(EmbeddedSystem {
        model: Arc::new(model.clone()),
        mode: EmbeddingMode::AllScaling(lambda),
        op: Arc::new(op),
        germ,
        germ_q: vec![T::zero(); n],
        shunt: ysh,
        germ_residual,
    })
}

/// Direction-of-change embedding around an already solved base case.
pub fn embed_direction_from<T: Real>(
    model: &NetworkModel<T>,
    base: &SolvedState<T>,
    dir: ScalingDirection<T>,
) -> Result<EmbeddedSystem<T>> {
    if !base.converged() {
        return Err(Error::BaseCaseUnsolvable(format!(
            "{:?} after {} iterations, mismatch {:e}",
            base.status,
            base.iterations,
            base.max_mismatch.as_f64()
        )));
    }
    if dir.delta_s.len() != model.n_buses() {
        return Err(Error::DimensionMismatch {
            expected: model.n_buses(),
            got: dir.delta_s.len(),
        });
    }
    let n = model.n_buses();
    let germ = base.voltages.clone();
    let s_calc = calc_injections(model, &germ);
    let sched = model.injections();
    // PV buses carry their solved Q in the germ
    let eff: Vec<Cx<T>> = (0..n)
        .map(|i| match model.bus(i).kind {
            BusKind::Pv => cx(sched[i].re, s_calc[i].im),
            _ => sched[i],
        })
        .collect();
    let germ_q: Vec<T> = eff.iter().map(|s| s.im).collect();
    let conj_coef: Vec<Cx<T>> = (0..n)
        .map(|i| {
            let w0 = germ[i].inv();
            eff[i].conj() * (w0 * w0).conj()
        })
        .collect();
    let y = model.ybus().to_dense();
    let op = build_operator(model, &y, &germ, &conj_coef)?;
    let germ_residual = power_balance_residual(model, &germ, T::one());
    Ok(EmbeddedSystem {
        model: Arc::new(model.clone()),
        mode: EmbeddingMode::DirectionOfChange(dir),
        op: Arc::new(op),
        germ,
        germ_q,
        shunt: vec![czero(); n],
        germ_residual,
    })
}

impl<T: Real> EmbeddedSystem<T> {
    pub fn model(&self) -> &NetworkModel<T> {
        &self.model
    }

    pub fn mode(&self) -> &EmbeddingMode<T> {
        &self.mode
    }

    pub fn germ(&self) -> &[Cx<T>] {
        &self.germ
    }

    /// Same base case and factorization, new increment.
    pub fn redirect(&self, dir: ScalingDirection<T>) -> Result<Self> {
        match self.mode {
            EmbeddingMode::DirectionOfChange(_) => {
                if dir.delta_s.len() != self.model.n_buses() {
                    return Err(Error::DimensionMismatch {
                        expected: self.model.n_buses(),
                        got: dir.delta_s.len(),
                    });
                }
                Ok(Self {
                    mode: EmbeddingMode::DirectionOfChange(dir),
                    ..self.clone()
                })
            }
            EmbeddingMode::AllScaling(_) => Err(Error::InvalidArgument(
                "redirect applies to direction-of-change systems".into(),
            )),
        }
    }
}

/// Voltage series and companions of an embedded system.
#[derive(Debug, Clone)]
pub struct HemSolution<T> {
    /// `V_i(α)` for every bus in model order.
    pub voltages: Vec<PowerSeries<T>>,
    /// `W_i(α) = 1/V_i(α)`.
    pub reciprocals: Vec<PowerSeries<T>>,
    /// `U_i(α) = V_i(α)/V0`.
    pub normalized: Vec<PowerSeries<T>>,
    /// Reactive output series of PV buses (`None` elsewhere).
    pub reactive: Vec<Option<PowerSeries<T>>>,
    pub mode: EmbeddingMode<T>,
    pub slack_voltage: Cx<T>,
    pub germ_residual: T,
}

impl<T: Real> HemSolution<T> {
    pub fn n_terms(&self) -> usize {
        self.voltages.first().map_or(0, PowerSeries::n_terms)
    }
}

/// Computes `n_terms` coefficients of every series.
pub fn compute_series<T: Real>(sys: &EmbeddedSystem<T>, n_terms: usize) -> Result<HemSolution<T>> {
    if n_terms < 2 {
        return Err(Error::InvalidArgument("at least two series terms are needed".into()));
    }
    let model = &*sys.model;
    let op = &*sys.op;
    let n = model.n_buses();
    let nns = op.ns.len();
    let slack = model.slack_index();
    let sched = model.injections();
    let j = cx(T::zero(), T::one());

    let mut v: Vec<Vec<Cx<T>>> = sys.germ.iter().map(|&g| vec![g]).collect();
    let mut w: Vec<Vec<Cx<T>>> = sys.germ.iter().map(|&g| vec![g.inv()]).collect();
    let mut q: Vec<Vec<T>> = sys.germ_q.iter().map(|&g| vec![g]).collect();

    let (is_scaling, lambda, delta): (bool, T, Vec<Cx<T>>) = match &sys.mode {
        EmbeddingMode::AllScaling(l) => (true, *l, vec![czero(); n]),
        EmbeddingMode::DirectionOfChange(d) => (false, T::one(), d.delta_s.clone()),
    };

    let mut rhs = vec![T::zero(); 2 * nns + op.n_pv];
    for order in 1..n_terms {
        rhs.iter_mut().for_each(|x| *x = T::zero());
        for (p, &i) in op.ns.iter().enumerate() {
            let is_pv = p < op.n_pv;
            let mut r: Cx<T> = czero();
            if is_scaling {
                let s = sched[i] * lambda;
                let s_term = if is_pv { cx(s.re, T::zero()) } else { s.conj() };
                r += s_term * w[i][order - 1].conj() - sys.shunt[i] * v[i][order - 1];
            } else {
                let s_base = if is_pv {
                    cx(sched[i].re, sys.germ_q[i])
                } else {
                    sched[i]
                };
                // R[n] = Σ_{k=1}^{n-1} W[k] V[n-k]
                let rr = (1..order).fold(czero(), |acc: Cx<T>, k| acc + w[i][k] * v[i][order - k]);
                let d = if is_pv {
                    cx(delta[i].re, T::zero())
                } else {
                    delta[i].conj()
                };
                r += -s_base.conj() * (w[i][0] * rr).conj() + d * w[i][order - 1].conj();
            }
            if is_pv {
                // -j Σ_{m=1}^{n-1} Q[m] conj(W[n-m])
                let acc = (1..order).fold(czero(), |acc: Cx<T>, m| acc + w[i][order - m].conj() * q[i][m]);
                r -= j * acc;
                let conv = (1..order).fold(czero(), |acc: Cx<T>, k| acc + v[i][k] * v[i][order - k].conj());
                let mut mag = -conv.re;
                if is_scaling && order == 1 {
                    let b = model.bus(i);
                    mag += b.v_setpoint * b.v_setpoint - sys.germ[i].norm_sqr();
                }
                rhs[2 * nns + p] = mag;
            }
            rhs[2 * p] = r.re;
            rhs[2 * p + 1] = r.im;
        }
        op.lu.solve_in_place(&mut rhs);

        for i in 0..n {
            let vn = match op.pos[i] {
                Some(p) => cx(rhs[2 * p], rhs[2 * p + 1]),
                None => czero(),
            };
            v[i].push(vn);
            if let Some(p) = op.pos[i] {
                if p < op.n_pv {
                    q[i].push(rhs[2 * nns + p]);
                }
            }
        }
        for i in 0..n {
            let acc = (0..order).fold(czero(), |acc: Cx<T>, k| acc + w[i][k] * v[i][order - k]);
            let wn = -acc * w[i][0];
            w[i].push(wn);
        }
        debug_assert!(v[slack][order] == czero());
    }

    let v0 = model.slack_voltage();
    let inv_v0 = v0.inv();
    let voltages: Vec<PowerSeries<T>> = v.into_iter().map(PowerSeries::new).collect();
    let normalized = voltages.iter().map(|s| s.scale(inv_v0)).collect();
    let reactive = (0..n)
        .map(|i| match op.pos[i] {
            Some(p) if p < op.n_pv => Some(PowerSeries::from_real(&q[i])),
            _ => None,
        })
        .collect();
    Ok(HemSolution {
        voltages,
        reciprocals: w.into_iter().map(PowerSeries::new).collect(),
        normalized,
        reactive,
        mode: sys.mode.clone(),
        slack_voltage: v0,
        germ_residual: sys.germ_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    DirectSum,
    /// Near-diagonal approximant of the significant terms, or the given
    /// `[L/M]` order (stepping down the diagonal if defective).
    Pade(Option<(usize, usize)>),
}

/// Evaluates a single series by `method`.
pub fn evaluate_series<T: Real>(s: &PowerSeries<T>, alpha: T, method: EvalMethod) -> Result<Cx<T>> {
    match method {
        EvalMethod::DirectSum => Ok(s.eval(cx(alpha, T::zero()))),
        EvalMethod::Pade(None) => build_pade_auto(s)?.eval_real(alpha),
        EvalMethod::Pade(Some(order)) => build_pade_descending(s, order)?.eval_real(alpha),
    }
}

/// Bus voltages at `alpha`. A failing bus is reported with its id.
pub fn evaluate_solution<T: Real>(
    sol: &HemSolution<T>,
    model: &NetworkModel<T>,
    alpha: T,
    method: EvalMethod,
) -> Result<Vec<Cx<T>>> {
    sol.voltages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if alpha == T::zero() {
                return Ok(s.germ());
            }
            evaluate_series(s, alpha, method).map_err(|e| Error::BusEvaluation {
                bus: model.bus(i).id,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Largest power-balance violation of `voltages` for the model's injections
/// scaled by `lambda`: `|S − V (Y V)*|` at PQ buses, `|ΔP|` and `||V| − Vset|`
/// at PV buses, `|V − V0|` at the slack.
pub fn power_balance_residual<T: Real>(model: &NetworkModel<T>, voltages: &[Cx<T>], lambda: T) -> T {
    let s = calc_injections(model, voltages);
    (0..model.n_buses())
        .map(|i| {
            let b = model.bus(i);
            let sched = model.injection(i) * lambda;
            match b.kind {
                BusKind::Pq => (sched - s[i]).norm(),
                BusKind::Pv => (sched.re - s[i].re)
                    .abs()
                    .max((voltages[i].norm() - b.v_setpoint).abs()),
                BusKind::Slack => (voltages[i] - model.slack_voltage()).norm(),
            }
        })
        .fold(T::zero(), |m, x| if x.is_nan() { T::infinity() } else { m.max(x) })
}

/// Residual of `voltages` against the direction-of-change target at `alpha`:
/// base injections plus `alpha·ΔS` (PV: real part only).
pub fn direction_residual<T: Real>(
    model: &NetworkModel<T>,
    voltages: &[Cx<T>],
    dir: &ScalingDirection<T>,
    alpha: T,
) -> T {
    let s = calc_injections(model, voltages);
    (0..model.n_buses())
        .map(|i| {
            let b = model.bus(i);
            let target = model.injection(i) + dir.delta_s[i] * alpha;
            match b.kind {
                BusKind::Pq => (target - s[i]).norm(),
                BusKind::Pv => (target.re - s[i].re)
                    .abs()
                    .max((voltages[i].norm() - b.v_setpoint).abs()),
                BusKind::Slack => (voltages[i] - model.slack_voltage()).norm(),
            }
        })
        .fold(T::zero(), |m, x| if x.is_nan() { T::infinity() } else { m.max(x) })
}
