//! Newton–Raphson power flow in polar form, and a λ-bisection collapse finder.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::netmodel::{BusKind, NetworkModel};
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonStatus {
    Converged,
    MaxIterations,
    SingularJacobian,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvedState<T> {
    pub voltages: Vec<Cx<T>>,
    pub status: NewtonStatus,
    pub iterations: usize,
    pub max_mismatch: T,
}

impl<T> SolvedState<T> {
    pub fn converged(&self) -> bool {
        self.status == NewtonStatus::Converged
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub max_iter: usize,
    pub tol: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    /// 30 iterations, tolerance 1e-10 (or a few hundred ulps when the scalar
    /// cannot resolve that).
    fn default() -> Self {
        Self {
            max_iter: 30,
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(1000.0)),
        }
    }
}

/// Flat start: setpoint magnitudes at slack/PV buses, 1.0 elsewhere, all at
/// the slack angle.
pub fn flat_start<T: Real>(model: &NetworkModel<T>) -> Vec<Cx<T>> {
    let ang = model.bus(model.slack_index()).v0_angle;
    model
        .buses()
        .iter()
        .map(|b| {
            let mag = if b.kind == BusKind::Pq { T::one() } else { b.v_setpoint };
            Cx::from_polar(mag, ang)
        })
        .collect()
}

pub fn newton_solve<T: Real>(model: &NetworkModel<T>) -> SolvedState<T> {
    newton_solve_from(model, &flat_start(model), &NewtonOptions::default())
}

/// Complex power drawn into the network at each bus, `V ∘ conj(Y V)`.
pub fn calc_injections<T: Real>(model: &NetworkModel<T>, v: &[Cx<T>]) -> Vec<Cx<T>> {
    let i = model.ybus().mul_vec(v);
    v.iter().zip(&i).map(|(&vk, ik)| vk * ik.conj()).collect()
}

/// Partial derivatives of bus injections with respect to voltage angle and
/// magnitude, as dense complex matrices `(dS/dθ, dS/d|V|)`.
pub fn injection_derivatives<T: Real>(
    model: &NetworkModel<T>,
    v: &[Cx<T>],
) -> (DenseMatrix<Cx<T>>, DenseMatrix<Cx<T>>) {
    let n = model.n_buses();
    let y = model.ybus();
    let ibus = y.mul_vec(v);
    let vnorm: Vec<Cx<T>> = v.iter().map(|&x| x / x.norm()).collect();
    let j = cx(T::zero(), T::one());
    let mut d_ang = DenseMatrix::zeros(n, n);
    let mut d_mag = DenseMatrix::zeros(n, n);
    for r in 0..n {
        for (c, yrc) in y.row(r) {
            d_mag[(r, c)] = v[r] * (yrc * vnorm[c]).conj();
            d_ang[(r, c)] = -j * v[r] * (yrc * v[c]).conj();
        }
        d_mag[(r, r)] += ibus[r].conj() * vnorm[r];
        d_ang[(r, r)] += j * v[r] * ibus[r].conj();
    }
    (d_ang, d_mag)
}

fn mismatch<T: Real>(
    model: &NetworkModel<T>,
    v: &[Cx<T>],
    sched: &[Cx<T>],
    pvpq: &[usize],
    pq: &[usize],
) -> Vec<T> {
    let s = calc_injections(model, v);
    pvpq.iter()
        .map(|&i| s[i].re - sched[i].re)
        .chain(pq.iter().map(|&i| s[i].im - sched[i].im))
        .collect()
}

pub fn newton_solve_from<T: Real>(
    model: &NetworkModel<T>,
    init: &[Cx<T>],
    opts: &NewtonOptions<T>,
) -> SolvedState<T> {
    let pv = model.pv_indices();
    let pq = model.pq_indices();
    let pvpq: Vec<usize> = pv.iter().chain(&pq).copied().collect();
    let sched = model.injections();
    let (np, nq) = (pvpq.len(), pq.len());

    let mut v = init.to_vec();
    // held quantities come from the model, not the initial guess
    let slack = model.slack_index();
    v[slack] = model.slack_voltage();
    for &i in &pv {
        let b = model.bus(i);
        v[i] = Cx::from_polar(b.v_setpoint, v[i].arg());
    }

    let norm = |f: &[T]| f.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let mut f = mismatch(model, &v, &sched, &pvpq, &pq);
    let mut err = norm(&f);
    let mut it = 0;
    let finish = |v: Vec<Cx<T>>, status, iterations, max_mismatch| SolvedState {
        voltages: v,
        status,
        iterations,
        max_mismatch,
    };
    loop {
        if !err.is_finite() || err > T::lit(1e10) {
            return finish(v, NewtonStatus::Diverged, it, err);
        }
        if err <= opts.tol {
            return finish(v, NewtonStatus::Converged, it, err);
        }
        if it >= opts.max_iter {
            return finish(v, NewtonStatus::MaxIterations, it, err);
        }
        it += 1;

        let (d_ang, d_mag) = injection_derivatives(model, &v);
        let mut jac = DenseMatrix::zeros(np + nq, np + nq);
        for (r, &i) in pvpq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(r, c)] = d_ang[(i, k)].re;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(r, np + c)] = d_mag[(i, k)].re;
            }
        }
        for (r, &i) in pq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(np + r, c)] = d_ang[(i, k)].im;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(np + r, np + c)] = d_mag[(i, k)].im;
            }
        }
        let lu = match LuFactors::new(jac) {
            Ok(lu) => lu,
            Err(_) => return finish(v, NewtonStatus::SingularJacobian, it, err),
        };
        let dx = lu.solve(&f);
        for (r, &i) in pvpq.iter().enumerate() {
            let (mag, ang) = (v[i].norm(), v[i].arg() - dx[r]);
            v[i] = Cx::from_polar(mag, ang);
        }
        for (r, &i) in pq.iter().enumerate() {
            let (mag, ang) = (v[i].norm() - dx[np + r], v[i].arg());
            v[i] = Cx::from_polar(mag, ang);
        }
        f = mismatch(model, &v, &sched, &pvpq, &pq);
        err = norm(&f);
    }
}

/// Finds the largest injection scale at which Newton–Raphson still converges.
///
/// Requires convergence at `lo` and failure at `hi`. Each trial starts from
/// the last converged state. Returns the midpoint of the final bracket, whose
/// width is at most `tol`.
pub fn bisect_collapse<T: Real>(model: &NetworkModel<T>, lo: T, hi: T, tol: T) -> Result<T> {
    if !(lo < hi) || !(tol > T::zero()) {
        return Err(Error::Bracket("need lo < hi and tol > 0".into()));
    }
    let opts = NewtonOptions::default();
    let at_lo = newton_solve(&model.scale_injections(lo));
    if !at_lo.converged() {
        return Err(Error::Bracket(format!("no convergence at lower end {}", lo)));
    }
    if newton_solve(&model.scale_injections(hi)).converged() {
        return Err(Error::Bracket(format!("converged at upper end {}", hi)));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut warm = at_lo.voltages;
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        let st = newton_solve_from(&model.scale_injections(mid), &warm, &opts);
        if st.converged() {
            lo = mid;
            warm = st.voltages;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// Largest absolute power mismatch of `v` against the model's schedule on the
/// Newton equations (P at PV/PQ buses, Q at PQ buses).
pub fn newton_mismatch<T: Real>(model: &NetworkModel<T>, v: &[Cx<T>]) -> T {
    let pv = model.pv_indices();
    let pq = model.pq_indices();
    let pvpq: Vec<usize> = pv.iter().chain(&pq).copied().collect();
    mismatch(model, v, &model.injections(), &pvpq, &pq)
        .into_iter()
        .fold(T::zero(), |m, x| m.max(x.abs()))
}
