//! Acceptance criteria 1–10. Every test prints one `[PASS]`/`[FAIL]` line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::process::Command;
use std::time::{Duration, Instant};

use expoly::domain::{bi_pairs, Support, ThetaBi, ThetaUni};
use expoly::experiment::{simulate, ExperimentConfig, ExperimentOutput};
use expoly::holo_bi;
use expoly::holo_uni;
use expoly::inference::{self, FitOptions, Mode};
use expoly::ode::OdeOptions;
use expoly::oracle::{self, QuadOptions};
use expoly::polyalg::{self, ChamberGrid};
use expoly::verify::{random_proper_d2, random_theta_uni};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KS_LEVEL: f64 = 0.01;
const MC_SEED: u64 = 20_240_601;
/// `E|Z|` for `Z ~ N(0, 1)`.
const E_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

fn report(criterion: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {criterion}: {title} — {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn criterion_01_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let ode = OdeOptions::default();
    let q = QuadOptions::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 2..=6 {
        for support in [Support::HalfLine, Support::RealLine] {
            if support == Support::RealLine && d % 2 == 1 {
                continue;
            }
            for _ in 0..100 {
                let theta = random_theta_uni(&mut rng, d, support);
                let a = holo_uni::norm_const_state(&theta, &ode).unwrap().norm_const();
                let v = oracle::quad_moment_uni(&theta, 0, &q).unwrap();
                worst = worst.max(rel(a, v));
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "HGD vs adaptive quadrature",
        worst <= 1e-6 && elapsed < Duration::from_secs(60),
        format!("{cases} points, max rel {worst:.2e} (tol 1e-6), {:.2} s (limit 60 s)", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_02_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let ode = OdeOptions::default();
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let t1 = -rng.random_range(0.05..5.0);
        let theta = ThetaUni::half_line(&[t1]).unwrap();
        let a = holo_uni::norm_const_state(&theta, &ode).unwrap().norm_const();
        worst[0] = worst[0].max(rel(a, -1.0 / t1));

        let theta = random_theta_uni(&mut rng, 2, Support::HalfLine);
        let a = holo_uni::norm_const_state(&theta, &ode).unwrap().norm_const();
        worst[1] = worst[1].max(rel(a, oracle::closed_form_a(&theta).unwrap()));

        let theta = random_theta_uni(&mut rng, 2, Support::RealLine);
        let (t1, t2) = (theta.coeffs()[0], theta.coeffs()[1]);
        let gaussian = (std::f64::consts::PI / -t2).sqrt() * (-t1 * t1 / (4.0 * t2)).exp();
        let a = holo_uni::norm_const_state(&theta, &ode).unwrap().norm_const();
        worst[2] = worst[2].max(rel(a, gaussian));
    }
    let pass = worst.iter().all(|w| *w <= 1e-10);
    report(
        2,
        "closed forms vs HGD",
        pass,
        format!(
            "max rel: d=1 {:.2e}, half-line d=2 {:.2e}, real-line order 2 {:.2e} (tol 1e-10)",
            worst[0], worst[1], worst[2]
        ),
    );
}

#[test]
fn criterion_03_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let ode = OdeOptions::adaptive(1e-13);
    let h = 1e-4;
    let (mut worst_g, mut worst_i) = (0.0f64, 0.0f64);
    for d in [3, 4] {
        for _ in 0..20 {
            let theta = random_theta_uni(&mut rng, d, Support::HalfLine);
            let g = inference::psi_grad_uni(&theta, &ode).unwrap();
            let info = inference::fisher_info_uni(&theta, &ode).unwrap();
            for k in 0..d {
                let shift = |s: f64| {
                    let mut c = theta.coeffs().to_vec();
                    c[k] += s;
                    ThetaUni::half_line(&c).unwrap()
                };
                let psi = |t: &ThetaUni| holo_uni::norm_const_state(t, &ode).unwrap().norm_const().ln();
                let (tp, tm) = (shift(h), shift(-h));
                worst_g = worst_g.max(rel((psi(&tp) - psi(&tm)) / (2.0 * h), g[k]));
                let gp = inference::psi_grad_uni(&tp, &ode).unwrap();
                let gm = inference::psi_grad_uni(&tm, &ode).unwrap();
                for l in 0..d {
                    worst_i = worst_i.max(rel((gp[l] - gm[l]) / (2.0 * h), info[(l, k)]));
                }
            }
        }
    }
    report(
        3,
        "gradient and Fisher matrix vs central differences",
        worst_g <= 1e-5 && worst_i <= 1e-4,
        format!("40 points (d=3,4): grad max rel {worst_g:.2e} (tol 1e-5), Fisher max rel {worst_i:.2e} (tol 1e-4)"),
    );
}

#[test]
fn criterion_04_det_p_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for d in 2..=5 {
        for _ in 0..1000 {
            let mut t = ThetaBi::zeros(d);
            for (i, j) in bi_pairs(d) {
                t.set(i, j, rng.random_range(-2.0..2.0));
            }
            let det = holo_bi::det_p(&t).unwrap();
            let want = (d as f64).powi(d as i32 - 2) * polyalg::discriminant(&t.top()).unwrap();
            worst = worst.max((det - want).abs() / det.abs().max(1.0));
        }
    }
    let printed = polyalg::textbook_discriminant(&polyalg::d3_slice_top(0.0, 0.0)).unwrap();
    report(
        4,
        "det P = d^(d-2) D",
        worst <= 1e-9 && (printed + 27.0).abs() < 1e-12,
        format!("4000 points (d=2..5), max rel residual {worst:.2e} (tol 1e-9); printed d=3 formula at origin = {printed}"),
    );
}

fn ks_line(out: &ExperimentOutput) -> (bool, String) {
    let mut pass = out.summary.ks_defined;
    let mut parts = vec![format!("{} ok / {} failed", out.summary.completed, out.summary.failed)];
    for c in &out.summary.columns {
        let p = c.ks_pvalue.unwrap_or(f64::NAN);
        pass &= p >= KS_LEVEL;
        parts.push(format!("{} vs {}: KS p = {p:.4}", c.name, c.reference));
    }
    (pass, parts.join(", "))
}

fn run(mode: Mode, theta: &[f64]) -> (ExperimentOutput, Duration) {
    let start = Instant::now();
    let cfg = ExperimentConfig::new(mode, theta.to_vec(), 1000, 200, MC_SEED);
    let out = simulate(&cfg, &FitOptions::default()).unwrap();
    (out, start.elapsed())
}

#[test]
fn criterion_05_standardized_mle_half_line() {
    let (out, elapsed) = run(Mode::HalfLine, &[-1.0, 3.0, -2.0]);
    let (ks_pass, ks) = ks_line(&out);
    let (lo, hi) = (0.6 * E_ABS_NORMAL, 1.0 * E_ABS_NORMAL);
    let band: Vec<String> = out
        .summary
        .columns
        .iter()
        .map(|c| format!("mean|{}| = {:.4}", c.name, c.mean_abs))
        .collect();
    let band_pass = out.summary.columns.iter().all(|c| c.mean_abs >= lo && c.mean_abs <= hi);
    report(
        5,
        "theta* = (-1,3,-2), n = 1000, 200 reps",
        ks_pass && band_pass && elapsed < Duration::from_secs(600),
        format!(
            "{ks}; {} (band [{lo:.4}, {hi:.4}]); {:.2} s",
            band.join(", "),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_06_score_test_half_line() {
    let (out, _) = run(Mode::HalfLine, &[3.0, -2.0, 0.0]);
    let (pass, detail) = ks_line(&out);
    report(6, "theta* = (3,-2,0), T vs N(0,1)", pass, detail);
}

#[test]
fn criterion_07_real_line() {
    let (a, _) = run(Mode::RealLine, &[1.0, 4.0, -2.0, -3.0]);
    let (b, _) = run(Mode::RealLine, &[2.0, -1.0, 0.0, 0.0]);
    let (pa, da) = ks_line(&a);
    let (pb, db) = ks_line(&b);
    report(
        7,
        "real line: theta* = (1,4,-2,-3) p_i; theta* = (2,-1,0,0) T vs chi2(2)",
        pa && pb,
        format!("{da}; {db}"),
    );
}

#[test]
fn criterion_08_chambers() {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((t12, t21), name) in [((-0.5, 2.5), "A"), ((0.0, 0.0), "B"), ((-3.5, -3.5), "C")] {
        let got = polyalg::chamber_point_d3(t12, t21).label.and_then(|l| l.d3_name());
        ok &= got == Some(name);
        parts.push(format!("({t12},{t21}) -> {}", got.unwrap_or("none")));
    }
    let curves = ChamberGrid::sweep(-6.0, 6.0, 0.1).sign_change_curves();
    report(
        8,
        "chamber fixtures and D = 0 curves",
        ok && curves == 2,
        format!("{}; {curves} sign-change curves on [-6,6]^2 step 0.1", parts.join(", ")),
    );
}

#[test]
fn criterion_09_bivariate_transport() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let ode = OdeOptions::default();
    let q = QuadOptions::default();
    let mut worst: f64 = 0.0;
    let mut negative = 0;
    for _ in 0..50 {
        let t = random_proper_d2(&mut rng);
        if polyalg::discriminant(&t.top()).unwrap() < 0.0 {
            negative += 1;
        }
        let a = holo_bi::norm_const_bi(&t, &ode).unwrap().norm_const();
        worst = worst.max(rel(a, oracle::quad_a_bi(&t, 0, 0, &q).unwrap()));
    }
    report(
        9,
        "bivariate d=2 HGD vs 2-D quadrature",
        worst <= 1e-5,
        format!("50 proper points ({negative} with D < 0), max rel {worst:.2e} (tol 1e-5)"),
    );
}

#[test]
fn criterion_10_verify_command() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_expoly")).arg("verify").output().unwrap();
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failing: Vec<String> = json["suites"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["passed"] != true)
        .map(|s| s["suite"].as_str().unwrap().to_string())
        .collect();
    let n = json["suites"].as_array().unwrap().len();
    report(
        10,
        "`expoly verify` property suites",
        out.status.code() == Some(0) && failing.is_empty(),
        format!(
            "exit code {:?}, {} of {n} suites pass{}, {:.1} s",
            out.status.code(),
            n - failing.len(),
            if failing.is_empty() { String::new() } else { format!(" (failing: {})", failing.join(", ")) },
            start.elapsed().as_secs_f64()
        ),
    );
}
