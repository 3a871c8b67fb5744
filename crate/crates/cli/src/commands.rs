use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context as _};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use helmgrid_core::hem::{
    compute_series, embed, evaluate_solution, power_balance_residual, EmbeddingMode, EvalMethod,
};
use helmgrid_core::modal::{
    bisect_collapse, compare_rankings, newton_solve, participation_factors, reduced_jacobian, NewtonStatus,
};
use helmgrid_core::netmodel::{model_from_json, MatpowerCase};
use helmgrid_core::sigma::{
    estimate_snbp_pole_zero, estimate_snbp_sigma, sigma_indices_from_solution, SigmaIndex, SnbpEstimate,
    SnbpOptions,
};
use helmgrid_core::weakbus::{all_pq_variant, rank_weak_buses, SensitivityOptions};
use helmgrid_core::{BusId, Network};

use crate::args::{Cli, Command, Common, Format, Method, SigmaArgs, SnbpArgs, SolveArgs, WeakbusArgs};
use crate::report::{cell, to_json, Csv};
use crate::Failure;

/// Bracket width of the bisection reference.
const ORACLE_TOL: f64 = 1e-3;
/// Samples per branch of the parabola boundary.
const PARABOLA_SAMPLES: usize = 41;

type Outcome = Result<(), Failure>;

struct Loaded {
    model: Network,
    sha256: String,
    format: &'static str,
}

pub fn run(cli: &Cli) -> Outcome {
    let common = cli.command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::input(anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: crate::EXIT_INTERNAL, error: e.into() })?;
    }
    let loaded = load_case(common)?;
    match &cli.command {
        Command::Solve(a) => solve(a, &loaded),
        Command::Snbp(a) => snbp(a, &loaded),
        Command::Sigma(a) => sigma(a, &loaded),
        Command::Weakbus(a) => weakbus(a, &loaded),
    }
}

fn load_case(common: &Common) -> Result<Loaded, Failure> {
    let path = &common.case;
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .with_context(|| format!("{} is not UTF-8 text", path.display()))
        .map_err(Failure::input)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (model, format) = if is_json {
        if common.all_pq || common.q_scale.is_some() {
            return Err(Failure::input(anyhow!("--all-pq and --q-scale need MATPOWER input")));
        }
        (model_from_json(&text)?, "json")
    } else {
        let mut case = MatpowerCase::parse(&text)?;
        if common.all_pq {
            case = all_pq_variant(&case)?;
        }
        if let Some(f) = common.q_scale {
            if !f.is_finite() {
                return Err(Failure::input(anyhow!("--q-scale must be finite")));
            }
            case.scale_reactive_load(f);
        }
        (case.to_model()?, "matpower")
    };
    Ok(Loaded { model, sha256, format })
}

fn pade_method(pade: &Option<Vec<usize>>) -> EvalMethod {
    EvalMethod::Pade(pade.as_ref().map(|v| (v[0], v[1])))
}

fn pade_echo(pade: &Option<Vec<usize>>) -> Value {
    pade.as_ref().map_or(Value::Null, |v| json!(v))
}

fn common_echo(c: &Common) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("format".into(), json!(c.format));
    m.insert("all_pq".into(), json!(c.all_pq));
    m.insert("q_scale".into(), json!(c.q_scale));
    m
}

fn header(command: &str, common: &Common, loaded: &Loaded, config: Map<String, Value>) -> Map<String, Value> {
    let mut h = Map::new();
    h.insert("tool".into(), json!("helmgrid"));
    h.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    h.insert("command".into(), json!(command));
    h.insert(
        "case".into(),
        json!({
            "path": common.case.display().to_string(),
            "format": loaded.format,
            "sha256": loaded.sha256,
            "buses": loaded.model.n_buses(),
        }),
    );
    h.insert("config".into(), Value::Object(config));
    h
}

fn write_text(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(Failure::input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(common: &Common, mut head: Map<String, Value>, result: Value, csv: impl FnOnce(&Map<String, Value>) -> Csv) -> Outcome {
    let text = match common.format {
        Format::Json => {
            head.insert("result".into(), result);
            to_json(Value::Object(head))
        }
        Format::Csv => csv(&head).finish(),
    };
    write_text(common.out.as_deref(), &text)
}

fn opt_bus(b: Option<BusId>) -> String {
    b.map(|b| b.to_string()).unwrap_or_default()
}

fn solve(a: &SolveArgs, loaded: &Loaded) -> Outcome {
    let m = &loaded.model;
    let method = pade_method(&a.pade);
    let mut cfg = common_echo(&a.common);
    cfg.insert("lambda".into(), json!(a.lambda));
    cfg.insert("n_terms".into(), json!(a.n_terms));
    cfg.insert("pade".into(), pade_echo(&a.pade));
    cfg.insert("tol".into(), json!(a.tol));

    let sol = compute_series(&embed(m, EmbeddingMode::AllScaling(a.lambda))?, a.n_terms)?;
    let v_hem = evaluate_solution(&sol, m, 1.0, method)?;
    let residual = power_balance_residual(m, &v_hem, a.lambda);
    let hem_ok = residual <= a.tol;

    let nr = newton_solve(&m.scale_injections(a.lambda));
    let nr_ok = nr.converged();
    let dev: Vec<f64> = (0..m.n_buses())
        .map(|i| if nr_ok { (v_hem[i] - nr.voltages[i]).norm() } else { f64::NAN })
        .collect();
    let max_dev = if nr_ok { dev.iter().copied().fold(0.0, f64::max) } else { f64::NAN };

    let buses: Vec<Value> = (0..m.n_buses())
        .map(|i| {
            let (vh, vn) = (v_hem[i], nr.voltages[i]);
            json!({
                "bus": m.bus(i).id,
                "vm_hem": vh.norm(),
                "va_hem_deg": vh.arg().to_degrees(),
                "vm_nr": if nr_ok { vn.norm() } else { f64::NAN },
                "va_nr_deg": if nr_ok { vn.arg().to_degrees() } else { f64::NAN },
                "deviation": dev[i],
            })
        })
        .collect();
    let result = json!({
        "lambda": a.lambda,
        "hem": {
            "n_terms": sol.n_terms(),
            "residual": residual,
            "converged": hem_ok,
        },
        "newton": {
            "status": status_name(nr.status),
            "iterations": nr.iterations,
            "max_mismatch": nr.max_mismatch,
        },
        "max_deviation": max_dev,
        "buses": buses,
    });
    let head = header("solve", &a.common, loaded, cfg);
    emit(&a.common, head, result, |h| {
        let mut csv = Csv::new(h, &["bus", "vm_hem", "va_hem_deg", "vm_nr", "va_nr_deg", "deviation"]);
        for i in 0..m.n_buses() {
            let (vh, vn) = (v_hem[i], nr.voltages[i]);
            let nr_cell = |x: f64| if nr_ok { cell(x) } else { String::new() };
            csv.row([
                m.bus(i).id.to_string(),
                cell(vh.norm()),
                cell(vh.arg().to_degrees()),
                nr_cell(vn.norm()),
                nr_cell(vn.arg().to_degrees()),
                cell(dev[i]),
            ]);
        }
        csv
    })?;

    if !nr_ok {
        return Err(Failure::solve(anyhow!(
            "Newton–Raphson did not converge at lambda = {} ({:?} after {} iterations)",
            a.lambda,
            nr.status,
            nr.iterations
        )));
    }
    if !hem_ok {
        return Err(Failure::solve(anyhow!(
            "HEM power-balance residual {residual:e} exceeds {:e} at lambda = {}",
            a.tol,
            a.lambda
        )));
    }
    Ok(())
}

fn status_name(s: NewtonStatus) -> &'static str {
    match s {
        NewtonStatus::Converged => "converged",
        NewtonStatus::MaxIterations => "max_iterations",
        NewtonStatus::SingularJacobian => "singular_jacobian",
        NewtonStatus::Diverged => "diverged",
    }
}

fn estimate_json(e: &SnbpEstimate<f64>, value_key: &str) -> Value {
    let trace: Vec<Value> = e
        .scan_trace
        .iter()
        .map(|p| {
            let mut o = Map::new();
            o.insert("lambda".into(), json!(p.lambda));
            o.insert(value_key.into(), json!(p.value));
            o.insert("bus".into(), json!(p.bus));
            Value::Object(o)
        })
        .collect();
    json!({
        "detected": e.lambda_star.is_some(),
        "lambda_star": e.lambda_star,
        "detecting_bus": e.detecting_bus,
        "trace": trace,
    })
}

fn snbp(a: &SnbpArgs, loaded: &Loaded) -> Outcome {
    let m = &loaded.model;
    let opts = SnbpOptions {
        n_terms: a.n_terms,
        lambda_lo: a.lambda,
        ceiling: a.ceiling,
        eval: pade_method(&a.pade),
        ..Default::default()
    };
    let mut cfg = common_echo(&a.common);
    cfg.insert("method".into(), json!(a.method));
    cfg.insert("n_terms".into(), json!(a.n_terms));
    cfg.insert("pade".into(), pade_echo(&a.pade));
    cfg.insert("lambda_lo".into(), json!(opts.lambda_lo));
    cfg.insert("ceiling".into(), json!(opts.ceiling));
    cfg.insert("coarse_step".into(), json!(opts.coarse_step));
    cfg.insert("resolution".into(), json!(opts.resolution));
    cfg.insert("imag_rel_tol".into(), json!(opts.singularity.imag_rel_tol));
    cfg.insert("oracle".into(), json!(!a.no_oracle));

    let sig = match a.method {
        Method::Sigma | Method::Both => Some(estimate_snbp_sigma(m, &opts)?),
        Method::Polezero => None,
    };
    let pz = match a.method {
        Method::Polezero | Method::Both => Some(estimate_snbp_pole_zero(m, &opts)?),
        Method::Sigma => None,
    };
    let oracle = (!a.no_oracle).then(|| bisect_collapse(m, opts.lambda_lo, opts.ceiling, ORACLE_TOL));

    let mut result = Map::new();
    result.insert(
        "sigma_negative".into(),
        sig.as_ref().map_or(Value::Null, |e| estimate_json(e, "min_condition")),
    );
    result.insert(
        "pole_zero".into(),
        pz.as_ref().map_or(Value::Null, |e| estimate_json(e, "estimate")),
    );
    result.insert(
        "oracle".into(),
        match &oracle {
            None => Value::Null,
            Some(Ok(l)) => json!({ "lambda_star": l, "bracket_width": ORACLE_TOL, "note": Value::Null }),
            Some(Err(e)) => json!({ "lambda_star": Value::Null, "bracket_width": ORACLE_TOL, "note": e.to_string() }),
        },
    );

    if let Some(p) = &a.plot_data {
        let head = header("snbp", &a.common, loaded, cfg.clone());
        let mut csv = Csv::new(&head, &["lambda", "min_condition", "bus"]);
        if let Some(e) = &sig {
            let mut pts = e.scan_trace.clone();
            pts.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
            for q in pts {
                csv.row([cell(q.lambda), cell(q.value), opt_bus(q.bus)]);
            }
        }
        write_text(Some(p), &csv.finish())?;
    }

    let head = header("snbp", &a.common, loaded, cfg);
    emit(&a.common, head, Value::Object(result), |h| {
        let mut csv = Csv::new(h, &["method", "lambda", "value", "bus"]);
        for (name, e) in [("sigma_negative", &sig), ("pole_zero", &pz)] {
            for q in e.iter().flat_map(|e| &e.scan_trace) {
                csv.row([name.to_string(), cell(q.lambda), cell(q.value), opt_bus(q.bus)]);
            }
        }
        csv
    })
}

fn min_condition(idx: &[SigmaIndex<f64>]) -> Option<&SigmaIndex<f64>> {
    idx.iter()
        .filter(|s| s.condition.is_finite())
        .fold(None, |best: Option<&SigmaIndex<f64>>, s| match best {
            Some(b) if b.condition <= s.condition => Some(b),
            _ => Some(s),
        })
}

/// Points on `σ_I² = 1/4 + σ_R` for `σ_R ∈ [-1/4, hi]`, upper branch then lower.
fn parabola(hi: f64) -> Vec<(f64, f64)> {
    let step = (hi + 0.25) / (PARABOLA_SAMPLES - 1) as f64;
    let upper: Vec<(f64, f64)> = (0..PARABOLA_SAMPLES)
        .map(|k| {
            let r = -0.25 + step * k as f64;
            (r, (0.25 + r).max(0.0).sqrt())
        })
        .collect();
    let lower = upper.iter().rev().map(|&(r, i)| (r, -i));
    upper.iter().copied().chain(lower).collect()
}

fn sigma(a: &SigmaArgs, loaded: &Loaded) -> Outcome {
    let m = &loaded.model;
    let mut cfg = common_echo(&a.common);
    cfg.insert("lambda".into(), json!(a.lambda));
    cfg.insert("n_terms".into(), json!(a.n_terms));
    cfg.insert("pade".into(), pade_echo(&a.pade));

    let sol = compute_series(&embed(m, EmbeddingMode::AllScaling(a.lambda))?, a.n_terms)?;
    let idx = sigma_indices_from_solution(m, &sol, pade_method(&a.pade))?;
    let worst = min_condition(&idx);
    let hi = idx
        .iter()
        .map(|s| s.sigma_r)
        .filter(|x| x.is_finite())
        .fold(1.0, f64::max);
    let boundary = parabola(hi);

    let buses: Vec<Value> = idx
        .iter()
        .map(|s| {
            json!({
                "bus": s.bus,
                "sigma_r": s.sigma_r,
                "sigma_i": s.sigma_i,
                "condition": s.condition,
                "vm": s.u.norm(),
                "va_deg": s.u.arg().to_degrees(),
            })
        })
        .collect();
    let result = json!({
        "lambda": a.lambda,
        "min_condition": worst.map(|s| s.condition),
        "min_condition_bus": worst.map(|s| s.bus),
        "negative_buses": idx.iter().filter(|s| s.condition < 0.0).map(|s| s.bus).collect::<Vec<_>>(),
        "buses": buses,
        "parabola": boundary.iter().map(|&(r, i)| json!([r, i])).collect::<Vec<_>>(),
    });

    if let Some(p) = &a.plot_data {
        let head = header("sigma", &a.common, loaded, cfg.clone());
        let mut csv = Csv::new(&head, &["series", "sigma_r", "sigma_i", "condition", "bus"]);
        for s in &idx {
            csv.row(["bus".to_string(), cell(s.sigma_r), cell(s.sigma_i), cell(s.condition), s.bus.to_string()]);
        }
        for &(r, i) in &boundary {
            csv.row(["parabola".to_string(), cell(r), cell(i), cell(0.0), String::new()]);
        }
        write_text(Some(p), &csv.finish())?;
    }

    let head = header("sigma", &a.common, loaded, cfg);
    emit(&a.common, head, result, |h| {
        let mut csv = Csv::new(h, &["bus", "sigma_r", "sigma_i", "condition"]);
        for s in &idx {
            csv.row([s.bus.to_string(), cell(s.sigma_r), cell(s.sigma_i), cell(s.condition)]);
        }
        csv
    })
}

fn weakbus(a: &WeakbusArgs, loaded: &Loaded) -> Outcome {
    let m = &loaded.model;
    if !(a.dq_mvar > 0.0 && a.dq_mvar.is_finite()) {
        return Err(Failure::input(anyhow!("--dq-mvar must be positive")));
    }
    if a.top == 0 {
        return Err(Failure::input(anyhow!("--top must be at least 1")));
    }
    let mut cfg = common_echo(&a.common);
    cfg.insert("top".into(), json!(a.top));
    cfg.insert("dq_mvar".into(), json!(a.dq_mvar));
    cfg.insert("n_terms".into(), json!(a.n_terms));

    let opts = SensitivityOptions {
        dq: a.dq_mvar / m.base_mva(),
        n_terms: a.n_terms,
    };
    let hem = rank_weak_buses(m, a.top, &opts)?;
    let st = newton_solve(m);
    let modal = participation_factors(&reduced_jacobian(m, &st)?, 1)?;
    let hem_order = hem.bus_order();
    let modal_top: Vec<BusId> = modal.weakest_buses.iter().take(a.top).copied().collect();
    let agree = compare_rankings(&hem_order, &modal_top, a.top);
    let part = |b: BusId| {
        modal.participation[0]
            .iter()
            .find(|(id, _)| *id == b)
            .map_or(f64::NAN, |(_, p)| *p)
    };

    let result = json!({
        "hem": hem.ranked.iter().enumerate().map(|(k, r)| json!({
            "rank": k + 1,
            "bus": r.bus,
            "dv_dq": r.dv_dq,
            "positive": r.positive,
        })).collect::<Vec<_>>(),
        "excluded": hem.excluded.iter().map(|r| r.bus).collect::<Vec<_>>(),
        "sign_warnings": hem.sign_warnings(),
        "modal": {
            "smallest_eigenvalue": modal.eigenvalues.first().copied(),
            "weakest": modal_top.iter().enumerate().map(|(k, &b)| json!({
                "rank": k + 1,
                "bus": b,
                "participation": part(b),
            })).collect::<Vec<_>>(),
        },
        "agreement": {
            "exact_match": agree.exact_match,
            "kendall_tau": agree.kendall_tau,
            "differences": agree.differences.iter().map(|(p, h, md)| json!({
                "rank": p + 1,
                "hem": h,
                "modal": md,
            })).collect::<Vec<_>>(),
        },
        "operating_point": hem.operating_point,
    });
    let head = header("weakbus", &a.common, loaded, cfg);
    emit(&a.common, head, result, |h| {
        let mut csv = Csv::new(h, &["rank", "hem_bus", "dv_dq", "modal_bus", "participation"]);
        for k in 0..hem_order.len().max(modal_top.len()) {
            let r = hem.ranked.get(k);
            let mb = modal_top.get(k).copied();
            csv.row([
                (k + 1).to_string(),
                opt_bus(r.map(|r| r.bus)),
                r.map_or(String::new(), |r| cell(r.dv_dq)),
                opt_bus(mb),
                mb.map_or(String::new(), |b| cell(part(b))),
            ]);
        }
        csv
    })
}
