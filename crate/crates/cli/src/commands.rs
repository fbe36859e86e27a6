//! Subcommand implementations. Each returns the process exit code or an
//! error that [`exit_code`] maps onto the exit-code contract.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use expoly::domain::{suff_stats_bi, suff_stats_uni, Membership, Support, ThetaBi};
use expoly::experiment::{self, ExperimentConfig, ExperimentOutput, RepStatus, Statistic};
use expoly::holo_bi;
use expoly::holo_uni;
use expoly::inference::{self, FitOptions, FitResult, Mode};
use expoly::ode::OdeOptions;
use expoly::oracle::{self, QuadOptions};
use expoly::polyalg::{self, ChamberGrid, ChamberLabel};
use expoly::verify::{self, VerifyOptions};
use serde_json::{json, Value};

use crate::input::{self, Theta};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

/// Library errors from the optimizer or the numerics map to 3; everything
/// else (parsing, domain violations, bad flags) is an input error.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    use expoly::Error as E;
    match e.downcast_ref::<E>() {
        Some(
            E::NotConverged(_)
            | E::BoundaryEscape(_)
            | E::PathSingularity
            | E::OdeDivergence(_)
            | E::SingularSystem { .. }
            | E::InconsistentExtension { .. }
            | E::PathCrossesSingularity { .. }
            | E::NonSquarefree
            | E::DivergentIntegral
            | E::ToleranceNotMet { .. }
            | E::SingularInformation,
        ) => EXIT_CONVERGENCE,
        _ => EXIT_INPUT,
    }
}

fn ode_options(tol: Option<f64>) -> Result<OdeOptions> {
    let ode = tol.map_or_else(OdeOptions::default, OdeOptions::adaptive);
    ode.validate()?;
    Ok(ode)
}

fn print(v: &Value) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // a closed reader (e.g. `| head`) is not an error of ours
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn support_of(mode: Mode) -> Result<Support> {
    match mode {
        Mode::HalfLine => Ok(Support::HalfLine),
        Mode::RealLine => Ok(Support::RealLine),
        Mode::Bivariate => bail!("this command is univariate only"),
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn normconst(
    mode: Mode,
    theta: Option<&str>,
    file: Option<&Path>,
    d: Option<usize>,
    order: Option<usize>,
    verify: bool,
    tol: Option<f64>,
) -> Result<u8> {
    let ode = ode_options(tol)?;
    let out = match input::read_theta(mode, theta, file, d)? {
        Theta::Uni(t) => {
            if let Some(msg) = input::uni_domain_violation(&t) {
                bail!("domain violation: {msg}");
            }
            let eff = match t.classify() {
                Membership::Boundary { order } => t.truncated(order)?,
                _ => t.clone(),
            };
            let state = holo_uni::norm_const_state(&eff, &ode)?;
            let derivs = state.derivs(order.unwrap_or(t.order()));
            let mut v = json!({
                "mode": mode,
                "theta": t.coeffs(),
                "effective_order": eff.order(),
                "A": derivs[0],
                "derivs": derivs,
                "engine_error_estimate": state.last_transport_error(),
            });
            if verify {
                let q = oracle::quad_moment_uni(&eff, 0, &QuadOptions::default())?;
                v["oracle"] = json!({"quadrature": q, "relative_difference": rel_diff(derivs[0], q)});
            }
            v
        }
        Theta::Bi(t) => {
            if let Some(msg) = input::bi_domain_violation(&t) {
                bail!("domain violation: {msg}");
            }
            let d = t.degree();
            let table = holo_bi::norm_const_bi(&t, &ode)?;
            let m = order.unwrap_or(d);
            let table = if m > table.max_order() { holo_bi::extend_table(&table, m)? } else { table };
            // derivs[k][j] = ∂_10^{k-j} ∂_01^j A
            let derivs: Vec<Vec<f64>> = (0..=m)
                .map(|k| (0..=k).map(|j| table.get(k - j, j).expect("filled")).collect())
                .collect();
            let mut v = json!({
                "mode": mode,
                "d": d,
                "theta": coeff_map(&t),
                "A": table.norm_const(),
                "derivs": derivs,
                "engine_error_estimate": table.last_transport_error(),
            });
            if verify {
                let q = oracle::quad_a_bi(&t, 0, 0, &QuadOptions::default())?;
                v["oracle"] = json!({"quadrature": q, "relative_difference": rel_diff(table.norm_const(), q)});
            }
            v
        }
    };
    print(&out)?;
    Ok(EXIT_OK)
}

fn coeff_map(t: &ThetaBi) -> Value {
    let mut m = serde_json::Map::new();
    for (i, j) in expoly::domain::bi_pairs(t.degree()) {
        m.insert(format!("{i}{j}"), json!(t.get(i, j)));
    }
    Value::Object(m)
}

fn fit_json(fit: &FitResult, n: usize, d: usize, status: &str, message: Option<String>) -> Value {
    let names: Vec<String> = match fit.mode {
        Mode::Bivariate => input::bi_coeff_names(d),
        _ => (1..=d).map(|k| format!("theta_{k}")).collect(),
    };
    json!({
        "mode": fit.mode,
        "d": d,
        "n": n,
        "status": status,
        "message": message,
        "names": names,
        "theta_hat": fit.theta_hat,
        "loglik": fit.loglik_bar * n as f64,
        "loglik_mean": fit.loglik_bar,
        "fisher": fit.fisher,
        "standard_errors": fit.standard_errors(n).ok(),
        "grad_norm": fit.grad_norm,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "hit_boundary": fit.hit_boundary,
    })
}

pub fn fit(path: &Path, mode: Mode, d: usize, tol: Option<f64>) -> Result<u8> {
    let opts = FitOptions {
        ode: ode_options(tol)?,
        ..Default::default()
    };
    let (n, result) = match mode {
        Mode::Bivariate => {
            let rows = input::read_sample(path, 2)?;
            let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            let stats = suff_stats_bi(&pairs, d)?;
            (pairs.len(), inference::fit_mle_bi(&stats, &opts))
        }
        _ => {
            let xs: Vec<f64> = input::read_sample(path, 1)?.into_iter().map(|r| r[0]).collect();
            let stats = suff_stats_uni(&xs, d, support_of(mode)?)?;
            (xs.len(), inference::fit_mle_uni(&stats, d, &opts))
        }
    };
    match result {
        Ok(fit) => {
            print(&fit_json(&fit, n, d, "converged", None))?;
            Ok(EXIT_OK)
        }
        Err(e) => match e.partial_fit() {
            Some(partial) => {
                let status = if matches!(e, expoly::Error::BoundaryEscape(_)) { "boundary" } else { "not_converged" };
                print(&fit_json(partial, n, d, status, Some(e.to_string())))?;
                eprintln!("error: {e}");
                Ok(EXIT_CONVERGENCE)
            }
            None => Err(e.into()),
        },
    }
}

pub fn order(path: &Path, mode: Mode, alpha: f64, dmax: usize, tol: Option<f64>) -> Result<u8> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha must lie in (0, 1)");
    }
    let opts = FitOptions {
        ode: ode_options(tol)?,
        ..Default::default()
    };
    let xs: Vec<f64> = input::read_sample(path, 1)?.into_iter().map(|r| r[0]).collect();
    let sel = inference::select_order(&xs, dmax, alpha, support_of(mode)?, &opts)?;
    print(&json!({
        "mode": mode,
        "alpha": alpha,
        "dmax": dmax,
        "n": xs.len(),
        "chosen": sel.chosen,
        "trail": sel.trail,
    }))?;
    Ok(EXIT_OK)
}

pub struct SimulateArgs<'a> {
    pub mode: Mode,
    pub theta: Option<&'a str>,
    pub theta_file: Option<&'a Path>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub statistic: Option<Statistic>,
    pub out: Option<&'a Path>,
    pub tol: Option<f64>,
}

/// One row per replication: status, the statistic columns, then `θ̂`.
pub fn replications_csv(out: &ExperimentOutput) -> String {
    let cols = out.column_names();
    let d = out.summary.config.theta_star.len();
    let mut s = String::from("replication,seed,status");
    for c in &cols {
        write!(s, ",{c}").unwrap();
    }
    for k in 1..=d {
        write!(s, ",theta_hat_{k}").unwrap();
    }
    s.push_str(",message\n");
    for r in &out.replications {
        let status = match r.status {
            RepStatus::Ok => "ok",
            RepStatus::NotConverged => "not_converged",
            RepStatus::Boundary => "boundary",
            RepStatus::Failed => "failed",
        };
        write!(s, "{},{},{status}", r.replication, r.seed).unwrap();
        for c in 0..cols.len() {
            match r.values.get(c) {
                Some(v) => write!(s, ",{v}").unwrap(),
                None => s.push(','),
            }
        }
        for k in 0..d {
            match r.theta_hat.get(k) {
                Some(v) => write!(s, ",{v}").unwrap(),
                None => s.push(','),
            }
        }
        let msg = r.message.as_deref().unwrap_or("").replace(['"', ','], " ");
        writeln!(s, ",{msg}").unwrap();
    }
    s
}

pub fn simulate(args: SimulateArgs) -> Result<u8> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie in (0, 1)");
    }
    if args.mode == Mode::Bivariate {
        bail!("simulate is univariate only: there is no bivariate sampler");
    }
    let Theta::Uni(theta) = input::read_theta(args.mode, args.theta, args.theta_file, None)? else {
        unreachable!()
    };
    if let Some(msg) = input::uni_domain_violation(&theta) {
        bail!("domain violation: {msg}");
    }
    let mut config = ExperimentConfig::new(args.mode, theta.coeffs().to_vec(), args.n, args.reps, args.seed);
    config.alpha = args.alpha;
    config.statistic = args.statistic;
    let opts = FitOptions {
        ode: ode_options(args.tol)?,
        ..Default::default()
    };
    let out = experiment::simulate(&config, &opts)?;
    let summary = serde_json::to_value(&out.summary)?;
    if let Some(dir) = args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("replications.csv"), replications_csv(&out))?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    print(&summary)?;
    Ok(EXIT_OK)
}

/// The three fixture points of the `d = 3` slice.
pub const CHAMBER_FIXTURES: [(f64, f64); 3] = [(-0.5, 2.5), (0.0, 0.0), (-3.5, -3.5)];

fn chamber_name(d: usize, label: Option<&ChamberLabel>) -> Value {
    match label {
        None => json!("boundary"),
        Some(l) if d == 3 => json!(l.d3_name()),
        Some(_) => Value::Null,
    }
}

fn top_report(top: &[f64]) -> Result<Value> {
    let d = top.len() - 1;
    let mut t = ThetaBi::zeros(d);
    for (j, &v) in top.iter().enumerate() {
        t.set(d - j, j, v);
    }
    let disc = polyalg::discriminant(top)?;
    let det_p = holo_bi::det_p(&t)?;
    let label = match polyalg::classify_chamber(top) {
        Ok(l) => Some(l),
        Err(expoly::Error::OnDiscriminant(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(json!({
        "top": top,
        "discriminant": disc,
        "det_p": det_p,
        "chamber": chamber_name(d, label.as_ref()),
        "signature": label.map(|l| json!({
            "positive": l.positive,
            "negative": l.negative,
            "complex_pairs": l.complex_pairs,
        })),
        "proper": label.map(|l| l.proper),
    }))
}

pub fn chambers(d: usize, points: &[String], tops: &[String], grid: Option<&str>, out: Option<&Path>) -> Result<u8> {
    if d < 2 {
        bail!("chambers need d >= 2");
    }
    let mut reports = Vec::new();
    let mut slice: Vec<(f64, f64)> = Vec::new();
    for p in points {
        let v = input::parse_list(p)?;
        if v.len() != 2 {
            bail!("--point takes theta12,theta21");
        }
        slice.push((v[0], v[1]));
    }
    if !slice.is_empty() && d != 3 {
        bail!("--point is the d = 3 slice; use --top for d = {d}");
    }
    if slice.is_empty() && tops.is_empty() && grid.is_none() && d == 3 {
        slice.extend(CHAMBER_FIXTURES);
    }
    for (t12, t21) in slice {
        let mut r = top_report(&polyalg::d3_slice_top(t12, t21))?;
        r["theta12"] = json!(t12);
        r["theta21"] = json!(t21);
        reports.push(r);
    }
    for t in tops {
        let v = input::parse_list(t)?;
        if v.len() != d + 1 {
            bail!("--top needs {} coefficients for d = {d}", d + 1);
        }
        if !(v[0] < 0.0 && v[d] < 0.0) {
            bail!("--top needs theta_{d}0 < 0 and theta_0{d} < 0");
        }
        reports.push(top_report(&v)?);
    }
    let mut result = json!({ "d": d, "points": reports });
    if let Some(g) = grid {
        if d != 3 {
            bail!("--grid sweeps the d = 3 slice");
        }
        let v = input::parse_list(g)?;
        if v.len() != 3 || !(v[2] > 0.0) || !(v[1] > v[0]) {
            bail!("--grid takes lo,hi,step with lo < hi and step > 0");
        }
        let dir = out.ok_or_else(|| anyhow!("--grid writes chambers_grid.csv and needs --out"))?;
        let sweep = ChamberGrid::sweep(v[0], v[1], v[2]);
        let mut csv = String::from("theta12,theta21,discriminant,det_p,sign,chamber,proper\n");
        for p in &sweep.points {
            let name = match &p.label {
                None => "boundary",
                Some(l) => l.d3_name().unwrap_or("other"),
            };
            let proper = p.label.map_or(String::new(), |l| l.proper.to_string());
            writeln!(
                csv,
                "{},{},{},{},{},{name},{proper}",
                p.theta12,
                p.theta21,
                p.discriminant,
                p.det_p,
                p.sign()
            )
            .unwrap();
        }
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("chambers_grid.csv"), csv)?;
        result["grid"] = json!({
            "lo": v[0],
            "hi": v[1],
            "step": v[2],
            "points": sweep.points.len(),
            "sign_change_curves": sweep.sign_change_curves(),
            "csv": dir.join("chambers_grid.csv"),
        });
    }
    print(&result)?;
    Ok(EXIT_OK)
}

pub fn verify(suite: Option<&str>, d: Option<usize>, seed: Option<u64>) -> Result<u8> {
    let mut opts = VerifyOptions { d, ..Default::default() };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let reports = match suite {
        Some(name) => vec![verify::run_suite(name, &opts)
            .ok_or_else(|| anyhow!("unknown suite '{name}'; known: {}", verify::SUITES.join(", ")))?],
        None => verify::run_all(&opts),
    };
    let passed = reports.iter().all(|r| r.passed);
    print(&json!({ "passed": passed, "seed": opts.seed, "suites": reports }))?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&anyhow::Error::from(expoly::Error::EmptySample)), EXIT_INPUT);
        assert_eq!(exit_code(&anyhow::Error::from(expoly::Error::SingularInformation)), EXIT_CONVERGENCE);
        assert_eq!(exit_code(&anyhow!("bad flag")), EXIT_INPUT);
    }

    #[test]
    fn top_report_fixture() {
        let r = top_report(&polyalg::d3_slice_top(0.0, 0.0)).unwrap();
        assert_eq!(r["chamber"], "B");
        assert_eq!(r["proper"], true);
        assert_eq!(r["det_p"].as_f64().unwrap(), 81.0);
    }

    #[test]
    fn csv_has_one_row_per_replication() {
        let cfg = ExperimentConfig::new(Mode::HalfLine, vec![-1.0], 50, 3, 9);
        let out = experiment::simulate(&cfg, &FitOptions::default()).unwrap();
        let csv = replications_csv(&out);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("replication,seed,status,p1,theta_hat_1,message\n"));
    }
}
