//! σ indices of the two-bus analog and saddle-node bifurcation estimates.
//!
//! For a normalized voltage `U = V/V0`, the two-bus relation
//! `U = 1 + σ / U*` gives `σ = U U* − U*` and the feasibility condition
//! `0.25 + σ_R − σ_I² ≥ 0`, which for solved voltages equals
//! `(U_R − 0.5)²`. A negative condition can therefore only come from the
//! analytically continued σ series, not from a solved state.

use rayon::prelude::*;

use crate::approximant::{nearest_real_singularity, SingularityOptions};
use crate::error::{BusId, Error, Result};
use crate::hem::{compute_series, embed, evaluate_series, EmbeddingMode, EvalMethod, HemSolution};
use crate::netmodel::{BusKind, NetworkModel};
use crate::scalar::{cx, Cx, Real};
use crate::series::PowerSeries;

/// Slack-fed single load: impedance `z`, injection `s`, slack voltage `v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBusEquivalent<T> {
    pub z: Cx<T>,
    pub s: Cx<T>,
    pub v0: Cx<T>,
}

impl<T: Real> TwoBusEquivalent<T> {
    pub fn sigma(&self) -> Cx<T> {
        self.z * self.s.conj() / self.v0.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBusRoots<T> {
    pub u_high: Cx<T>,
    pub u_low: Cx<T>,
    /// `0.25 + σ_R − σ_I²`; negative means no real solution (past the SNBP).
    pub radicand: T,
}

impl<T: Real> TwoBusRoots<T> {
    pub fn feasible(&self) -> bool {
        self.radicand >= T::zero()
    }
}

/// `U = 0.5 ± sqrt(0.25 + σ_R − σ_I²) + jσ_I`.
pub fn two_bus_roots<T: Real>(sigma: Cx<T>) -> TwoBusRoots<T> {
    let half = T::lit(0.5);
    let rad = sigma_condition(sigma);
    let (u_high, u_low) = if rad >= T::zero() {
        let r = rad.sqrt();
        (cx(half + r, sigma.im), cx(half - r, sigma.im))
    } else {
        let r = (-rad).sqrt();
        (cx(half, sigma.im + r), cx(half, sigma.im - r))
    };
    TwoBusRoots {
        u_high,
        u_low,
        radicand: rad,
    }
}

pub fn sigma_condition<T: Real>(sigma: Cx<T>) -> T {
    T::lit(0.25) + sigma.re - sigma.im * sigma.im
}

pub fn sigma_from_voltage<T: Real>(u: Cx<T>) -> Cx<T> {
    u * u.conj() - u.conj()
}

/// σ(α) from `α σ(α) = (U(α) − 1) · U*(α*)`; one term shorter than `u`.
pub fn sigma_series<T: Real>(u: &PowerSeries<T>, u_reflected: &PowerSeries<T>) -> Result<PowerSeries<T>> {
    if u.n_terms() != u_reflected.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: u.n_terms(),
            got: u_reflected.n_terms(),
        });
    }
    let mut shifted = u.clone();
    if let Some(c0) = shifted.coeffs_mut().first_mut() {
        *c0 -= Cx::new(T::one(), T::zero());
    }
    let prod = shifted.mul(u_reflected)?;
    Ok(PowerSeries::new(prod.coeffs().iter().skip(1).copied().collect()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaIndex<T> {
    pub bus: BusId,
    pub sigma: Cx<T>,
    pub sigma_r: T,
    pub sigma_i: T,
    pub condition: T,
    pub u: Cx<T>,
}

impl<T: Real> SigmaIndex<T> {
    pub fn new(bus: BusId, sigma: Cx<T>, u: Cx<T>) -> Self {
        Self {
            bus,
            sigma,
            sigma_r: sigma.re,
            sigma_i: sigma.im,
            condition: sigma_condition(sigma),
            u,
        }
    }

    /// Index computed from a solved normalized voltage.
    pub fn from_voltage(bus: BusId, u: Cx<T>) -> Self {
        Self::new(bus, sigma_from_voltage(u), u)
    }
}

/// σ indices of every non-slack bus of an all-scaling solution, evaluated at
/// `α = 1` through the σ series. Buses whose approximant cannot be evaluated
/// get a NaN index.
pub fn sigma_indices_from_solution<T: Real>(
    model: &NetworkModel<T>,
    sol: &HemSolution<T>,
    method: EvalMethod,
) -> Result<Vec<SigmaIndex<T>>> {
    if !matches!(sol.mode, EmbeddingMode::AllScaling(_)) {
        return Err(Error::InvalidArgument(
            "σ indices are defined for all-scaling solutions".into(),
        ));
    }
    let nan = Cx::new(T::nan(), T::nan());
    let mut out = Vec::new();
    for (i, u) in sol.normalized.iter().enumerate() {
        if model.bus(i).kind == BusKind::Slack {
            continue;
        }
        let sig_s = sigma_series(u, &u.reflect())?;
        let sigma = evaluate_series(&sig_s, T::one(), method).unwrap_or(nan);
        let uval = evaluate_series(u, T::one(), method).unwrap_or(nan);
        out.push(SigmaIndex::new(model.bus(i).id, sigma, uval));
    }
    Ok(out)
}

/// Embeds at `λ`, computes `n_terms` coefficients and returns the σ indices.
pub fn sigma_indices<T: Real>(model: &NetworkModel<T>, lambda: T, n_terms: usize) -> Result<Vec<SigmaIndex<T>>> {
    let sys = embed(model, EmbeddingMode::AllScaling(lambda))?;
    let sol = compute_series(&sys, n_terms)?;
    sigma_indices_from_solution(model, &sol, EvalMethod::Pade(None))
}

fn min_condition<T: Real>(idx: &[SigmaIndex<T>]) -> Option<(T, BusId)> {
    idx.iter()
        .filter(|s| s.condition.is_finite())
        .fold(None, |best: Option<(T, BusId)>, s| match best {
            Some((c, _)) if c <= s.condition => best,
            _ => Some((s.condition, s.bus)),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnbpMethod {
    SigmaNegative,
    VoltagePoleZero,
}

/// One evaluated loading. For the σ scan `value` is the minimum condition
/// over buses; for the pole/zero iteration it is the mapped λ estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint<T> {
    pub lambda: T,
    pub value: T,
    pub bus: Option<BusId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnbpEstimate<T> {
    /// `None` when nothing was detected below the ceiling.
    pub lambda_star: Option<T>,
    pub detecting_bus: Option<BusId>,
    pub method: SnbpMethod,
    pub scan_trace: Vec<ScanPoint<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnbpOptions<T> {
    pub n_terms: usize,
    /// Lowest loading scanned.
    pub lambda_lo: T,
    /// Highest loading scanned; also the start of the pole/zero iteration.
    pub ceiling: T,
    /// Coarse grid spacing in λ.
    pub coarse_step: T,
    /// Final bracket width relative to λ.
    pub resolution: T,
    /// Conditions below `-threshold` count as negative.
    pub threshold: T,
    /// Evaluate every λ from one embedding at the ceiling (`α = λ/ceiling`)
    /// instead of re-embedding per loading.
    pub single_embedding: bool,
    pub singularity: SingularityOptions<T>,
    /// Evaluation of the σ series at each loading.
    pub eval: EvalMethod,
}

impl<T: Real> Default for SnbpOptions<T> {
    fn default() -> Self {
        Self {
            n_terms: 50,
            lambda_lo: T::one(),
            ceiling: T::lit(5.0),
            coarse_step: T::lit(0.02),
            resolution: T::lit(0.005),
            threshold: T::lit(1e-9),
            single_embedding: false,
            singularity: SingularityOptions::default(),
            eval: EvalMethod::Pade(None),
        }
    }
}

/// Grid points evaluated together; fixed so results do not depend on the
/// worker count.
const BATCH: usize = 16;

/// Smallest loading at which some bus's σ condition turns negative.
///
/// A coarse grid from `lambda_lo` is evaluated batch by batch (in parallel)
/// until a negative point appears; the bracket with the preceding grid point
/// is then bisected to the requested resolution and its upper end reported.
pub fn estimate_snbp_sigma<T: Real>(model: &NetworkModel<T>, opts: &SnbpOptions<T>) -> Result<SnbpEstimate<T>> {
    check_options(opts)?;
    let cached = if opts.single_embedding {
        let sys = embed(model, EmbeddingMode::AllScaling(opts.ceiling))?;
        Some(compute_series(&sys, opts.n_terms)?)
    } else {
        None
    };
    let point = |lambda: T| -> Result<ScanPoint<T>> {
        let idx = match &cached {
            Some(sol) => {
                let alpha = lambda / opts.ceiling;
                let mut out = Vec::new();
                for (i, u) in sol.normalized.iter().enumerate() {
                    if model.bus(i).kind == BusKind::Slack {
                        continue;
                    }
                    let sig = sigma_series(u, &u.reflect())?;
                    let nan = Cx::new(T::nan(), T::nan());
                    // α·σ(α) is the σ of the loading α·ceiling
                    let s = evaluate_series(&sig, alpha, opts.eval).map_or(nan, |x| x * alpha);
                    let uv = evaluate_series(u, alpha, opts.eval).unwrap_or(nan);
                    out.push(SigmaIndex::new(model.bus(i).id, s, uv));
                }
                out
            }
            None => {
                let sys = embed(model, EmbeddingMode::AllScaling(lambda))?;
                let sol = compute_series(&sys, opts.n_terms)?;
                sigma_indices_from_solution(model, &sol, opts.eval)?
            }
        };
        Ok(match min_condition(&idx) {
            Some((c, b)) => ScanPoint {
                lambda,
                value: c,
                bus: Some(b),
            },
            None => ScanPoint {
                lambda,
                value: T::nan(),
                bus: None,
            },
        })
    };
    let negative = |p: &ScanPoint<T>| p.value < -opts.threshold;

    let n_grid = ((opts.ceiling - opts.lambda_lo) / opts.coarse_step).floor().to_usize().unwrap_or(0) + 1;
    let grid: Vec<T> = (0..n_grid)
        .map(|k| opts.lambda_lo + opts.coarse_step * T::lit(k as f64))
        .collect();

    let mut trace: Vec<ScanPoint<T>> = Vec::new();
    let mut hit: Option<usize> = None;
    for chunk in grid.chunks(BATCH) {
        let pts: Vec<ScanPoint<T>> = chunk
            .par_iter()
            .map(|&l| point(l))
            .collect::<Result<Vec<_>>>()?;
        let start = trace.len();
        trace.extend(pts);
        if let Some(k) = trace[start..].iter().position(|p| negative(p)) {
            hit = Some(start + k);
            trace.truncate(start + k + 1);
            break;
        }
    }
    let Some(k) = hit else {
        return Ok(SnbpEstimate {
            lambda_star: None,
            detecting_bus: None,
            method: SnbpMethod::SigmaNegative,
            scan_trace: trace,
        });
    };
    if k == 0 {
        let p = trace[0];
        return Ok(SnbpEstimate {
            lambda_star: Some(p.lambda),
            detecting_bus: p.bus,
            method: SnbpMethod::SigmaNegative,
            scan_trace: trace,
        });
    }
    let mut lo = trace[k - 1].lambda;
    let mut hi_pt = trace[k];
    while hi_pt.lambda - lo > opts.resolution * hi_pt.lambda {
        let mid = (lo + hi_pt.lambda) / T::lit(2.0);
        let p = point(mid)?;
        trace.push(p);
        if negative(&p) {
            hi_pt = p;
        } else {
            lo = mid;
        }
    }
    trace.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).expect("finite λ"));
    Ok(SnbpEstimate {
        lambda_star: Some(hi_pt.lambda),
        detecting_bus: hi_pt.bus,
        method: SnbpMethod::SigmaNegative,
        scan_trace: trace,
    })
}

/// Nearest positive real pole/zero of the voltage approximants.
///
/// Starting from `λ_t = ceiling`, the smallest real singularity `α_s` over all
/// non-slack buses maps to the loading `α_s·λ_t`; re-embedding there and
/// repeating converges on the singularity of the `λ`-parameterized problem.
pub fn estimate_snbp_pole_zero<T: Real>(
    model: &NetworkModel<T>,
    opts: &SnbpOptions<T>,
) -> Result<SnbpEstimate<T>> {
    check_options(opts)?;
    let ns = model.non_slack_indices();
    let mut lambda_t = opts.ceiling;
    let mut trace = Vec::new();
    let mut last: Option<(T, BusId)> = None;
    for _ in 0..30 {
        let sys = embed(model, EmbeddingMode::AllScaling(lambda_t))?;
        let sol = compute_series(&sys, opts.n_terms)?;
        let found: Vec<Option<(T, BusId)>> = ns
            .par_iter()
            .map(|&i| {
                nearest_real_singularity(&sol.voltages[i], &opts.singularity)
                    .ok()
                    .and_then(|r| r.nearest_positive_real)
                    .map(|a| (a, model.bus(i).id))
            })
            .collect();
        let best = found.into_iter().flatten().fold(None, |b: Option<(T, BusId)>, x| match b {
            Some(y) if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) => Some(y),
            _ => Some(x),
        });
        let Some((alpha, bus)) = best else {
            break;
        };
        let estimate = alpha * lambda_t;
        trace.push(ScanPoint {
            lambda: lambda_t,
            value: estimate,
            bus: Some(bus),
        });
        last = Some((estimate, bus));
        if (estimate - lambda_t).abs() <= T::lit(1e-4) * lambda_t {
            break;
        }
        lambda_t = estimate;
    }
    Ok(SnbpEstimate {
        lambda_star: last.map(|l| l.0),
        detecting_bus: last.map(|l| l.1),
        method: SnbpMethod::VoltagePoleZero,
        scan_trace: trace,
    })
}

/// Both estimates.
pub fn estimate_snbp<T: Real>(
    model: &NetworkModel<T>,
    opts: &SnbpOptions<T>,
) -> Result<(SnbpEstimate<T>, SnbpEstimate<T>)> {
    Ok((estimate_snbp_sigma(model, opts)?, estimate_snbp_pole_zero(model, opts)?))
}

fn check_options<T: Real>(o: &SnbpOptions<T>) -> Result<()> {
    if !(o.lambda_lo >= T::zero() && o.ceiling > o.lambda_lo) {
        return Err(Error::InvalidArgument("need 0 <= lambda_lo < ceiling".into()));
    }
    if !(o.coarse_step > T::zero() && o.resolution > T::zero()) {
        return Err(Error::InvalidArgument("scan step and resolution must be positive".into()));
    }
    if o.n_terms < 4 {
        return Err(Error::InvalidArgument("SNBP estimation needs at least 4 series terms".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn roots_at_the_boundary() {
        let r = two_bus_roots(Complex64::new(-0.25, 0.0));
        assert_eq!(r.u_high, Complex64::new(0.5, 0.0));
        assert_eq!(r.u_low, Complex64::new(0.5, 0.0));
        let r = two_bus_roots(Complex64::new(0.0, 0.0));
        assert_eq!((r.u_high, r.u_low), (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn high_root_for_pure_imaginary_sigma() {
        let r = two_bus_roots(Complex64::new(0.0, -0.25));
        assert!((r.u_high - Complex64::new(0.5 + 0.1875f64.sqrt(), -0.25)).norm() < 1e-15);
    }

    #[test]
    fn negative_radicand_is_flagged() {
        let r = two_bus_roots(Complex64::new(-0.3, 0.0));
        assert!(!r.feasible());
        assert_eq!(r.u_high.re, 0.5);
    }

    #[test]
    fn sigma_of_voltage_examples() {
        assert_eq!(sigma_from_voltage(Complex64::new(1.0, 0.0)), Complex64::new(0.0, 0.0));
        let s = sigma_from_voltage(Complex64::new(0.5, 0.3));
        assert!((s - Complex64::new(-0.16, 0.3)).norm() < 1e-15);
        assert!(sigma_condition(s).abs() < 1e-15);
        assert_eq!(sigma_from_voltage(Complex64::new(0.5, 0.0)), Complex64::new(-0.25, 0.0));
        assert_eq!(sigma_condition(Complex64::new(0.0, 0.0)), 0.25);
    }

    #[test]
    fn unit_series_has_zero_sigma() {
        let u = PowerSeries::<f64>::constant(Complex64::new(1.0, 0.0), 6);
        let s = sigma_series(&u, &u.reflect()).unwrap();
        assert_eq!(s.n_terms(), 5);
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn two_bus_equivalent_sigma() {
        let e = TwoBusEquivalent {
            z: Complex64::new(0.0, 0.25),
            s: Complex64::new(-1.0, 0.0),
            v0: Complex64::new(1.0, 0.0),
        };
        assert_eq!(e.sigma(), Complex64::new(0.0, -0.25));
    }
}
