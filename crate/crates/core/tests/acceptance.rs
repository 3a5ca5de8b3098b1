//! Acceptance criteria 1–11. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lichlab::conformal::{
    conformal_constants_exact, conformal_identity_residual, lichnerowicz_exponents_exact, sigma_transform,
    RadialFunction,
};
use lichlab::moser::{calibrate_sobolev, cascade, cascade_schedule, sobolev_check, standard_suite};
use lichlab::orchestrator::{reports_match, run, RunConfig, RunOptions};
use lichlab::params::{
    alpha_const, choose_iota, classify_regime, rho, schedule, ConstantChain, Params, TheoremSource, Verdict,
};
use lichlab::solver::{
    constant_solution, log_transform, residual, solve_radial, uniform_grid, LogProfile, SolutionProfile, SolveStatus,
    SolverOptions,
};
use lichlab::verify::{check_all_lemmas, empirical_constant, CheckOptions};
use lichlab::ModelManifold;

fn announce(n: u32, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("\ncriterion {n}: {verdict} ({:.2}s) {detail}\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn finish(n: u32, start: Instant, limit: Duration, failures: Vec<String>, detail: &str) {
    let elapsed = start.elapsed();
    let mut failures = failures;
    if elapsed > limit {
        failures.push(format!("runtime {:.2}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()));
    }
    let pass = failures.is_empty();
    let text = if pass { detail.to_string() } else { failures.join("; ") };
    announce(n, pass, elapsed, &text);
    assert!(pass, "criterion {n}: {text}");
}

fn at_params(radius: f64) -> Params {
    Params::new(4, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0, radius).unwrap()
}

const AT_V0: f64 = 2.0 * std::f64::consts::SQRT_2;

fn at_v(r: f64) -> f64 {
    AT_V0 / (1.0 + r * r)
}

fn at_dv(r: f64) -> f64 {
    -2.0 * AT_V0 * r / (1.0 + r * r).powi(2)
}

fn at_ddv(r: f64) -> f64 {
    let s = 1.0 + r * r;
    -2.0 * AT_V0 / (s * s) + 8.0 * AT_V0 * r * r / (s * s * s)
}

fn at_f(r: f64) -> f64 {
    let s = 1.0 + r * r;
    4.0 * r * r / (s * s)
}

fn solve_log(params: &Params, v0: f64, r_max: f64) -> (SolveStatus, LogProfile) {
    let m = ModelManifold::new(params.n, params.kappa).unwrap();
    let out = solve_radial(params, &m, v0, r_max, &SolverOptions::default()).unwrap();
    (out.status, log_transform(&out.profile).unwrap())
}

#[test]
fn criterion_01_schedule_sums() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for n in [3u32, 4, 5, 10] {
        for theta0 in [9.0, 16.0, 100.0] {
            let s = schedule(n, theta0, 1.0, 60).unwrap();
            let nf = n as f64;
            let theta1 = (theta0 + 1.0) * nf / (nf - 2.0);
            let e1 = (s.sum_inv - nf / (2.0 * theta1)).abs() / (nf / (2.0 * theta1));
            let e2 = (s.sum_i_inv - nf * nf / (4.0 * theta1)).abs() / (nf * nf / (4.0 * theta1));
            worst = worst.max(e1).max(e2);
            if e1 > 1e-12 || e2 > 1e-12 {
                failures.push(format!("n={n} theta0={theta0}: relative gaps {e1:.2e}, {e2:.2e}"));
            }
        }
    }
    finish(1, start, Duration::from_secs(1), failures, &format!("worst relative gap {worst:.2e} at k=60"));
}

#[test]
fn criterion_02_rho_iota_alpha() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 3..=20u32 {
        let p = 2.0 / (n as f64 - 1.0);
        for iota in [1.0, 2.0, 5.0, 100.0] {
            let r = rho(n, p, iota).unwrap();
            if r != p {
                failures.push(format!("rho({n}, 2/(n-1), {iota}) = {r}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.gen_range(3..=30u32);
        let upper = 4.0 / (n as f64 - 1.0);
        let p = rng.gen_range(1e-6..1.0) * upper;
        if !(p > 0.0 && p < upper) {
            continue;
        }
        match choose_iota(n, p) {
            Ok((iota, tr)) if tr > 0.0 && iota >= 1.0 => {}
            other => failures.push(format!("choose_iota({n}, {p}) = {other:?}")),
        }
        for bad in [-p, 0.0, upper, upper * (1.0 + p)] {
            if choose_iota(n, bad).is_ok() {
                failures.push(format!("choose_iota({n}, {bad}) accepted"));
            }
        }
        let delta = rng.gen_range(0.01..0.99);
        let p_neg = rng.gen_range(1e-6..1.0) * upper * (1.0 - delta);
        let lhs = alpha_const(n, p_neg, delta);
        let rhs = choose_iota(n, p_neg / (1.0 - delta));
        if lhs != rhs {
            failures.push(format!("alpha_const({n}, {p_neg}, {delta}) = {lhs:?} vs {rhs:?}"));
        }
    }
    finish(2, start, Duration::from_secs(1), failures, "exact rho at p = 2/(n-1); 200 random (n, p)");
}

#[test]
fn criterion_03_solver_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let params = at_params(5.0);
    let m = ModelManifold::new(4, 0.0).unwrap();

    // Closed-form residual, evaluated independently of the solver module.
    let oracle = (1..=5000)
        .map(|i| 5.0 * i as f64 / 5000.0)
        .map(|r| {
            let v = at_v(r);
            (at_ddv(r) + 3.0 / r * at_dv(r) + v * v * v).abs() / (1.0 + v * v * v)
        })
        .fold(0.0, f64::max);
    if oracle > 1e-12 {
        failures.push(format!("closed-form residual {oracle:.2e}"));
    }
    let closed = SolutionProfile::from_closed_form(params, m, uniform_grid(5.0, 2001), at_v, at_dv, at_ddv);
    if residual(&closed) > 1e-12 {
        failures.push(format!("library residual on closed form {:.2e}", residual(&closed)));
    }

    let out = solve_radial(&params, &m, AT_V0, 5.0, &SolverOptions::default()).unwrap();
    let rel_err = out
        .profile
        .grid
        .iter()
        .zip(&out.profile.v)
        .map(|(&r, &v)| ((v - at_v(r)) / at_v(r)).abs())
        .fold(0.0, f64::max);
    let res = residual(&out.profile);
    if out.status != SolveStatus::Complete || rel_err > 1e-6 || res > 1e-8 {
        failures.push(format!("status {:?}, relative error {rel_err:.2e}, residual {res:.2e}", out.status));
    }

    let fixed_error = |steps: usize| {
        let opts = SolverOptions { fixed_steps: Some(steps), tol: 1.0, ..SolverOptions::default() };
        let out = solve_radial(&params, &m, AT_V0, 5.0, &opts).unwrap();
        out.profile
            .grid
            .iter()
            .zip(&out.profile.v)
            .map(|(&r, &v)| (v - at_v(r)).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (fixed_error(100), fixed_error(200), fixed_error(400));
    let orders = [(e1 / e2).log2(), (e2 / e3).log2()];
    if orders.iter().any(|o| (o - 5.0).abs() > 0.5) {
        failures.push(format!("observed orders {orders:?} (errors {e1:.2e}, {e2:.2e}, {e3:.2e})"));
    }
    finish(
        3,
        start,
        Duration::from_secs(10),
        failures,
        &format!("relative error {rel_err:.2e}, residual {res:.2e}, orders {:.2}/{:.2}", orders[0], orders[1]),
    );
}

/// Parameter tuples covering both cases of the reduced estimate and the
/// negative-μ estimate, each on `κ = 0` and `κ = 1`.
fn lemma_instances() -> Vec<(Params, f64)> {
    let base = [
        // case 1 with a < 0, p ≥ 2/(n−1)
        (3, 0.5, -1.0, 0.2, 1.5, 2.0, 1.0),
        // cases 1 and 2 together
        (4, 0.0, 1.0, 0.0, 0.5, 1.0, 1.0),
        (3, 0.0, 0.5, 1.0, 0.8, 1.5, 1.5),
        // case 2 only
        (3, 0.3, -1.0, 0.1, 0.5, 2.0, 1.0),
        (3, 0.0, 1.0, 0.0, 1.5, 1.0, 0.8),
        // negative μ
        (3, -0.5, 2.0, 3.0, 0.3, 1.0, 1.0),
        (4, -0.2, 1.0, 1.0, 0.4, 2.0, 1.2),
    ];
    let mut out = Vec::new();
    for (n, mu, a, b, p, q, v0) in base {
        for kappa in [0.0, 1.0] {
            out.push((Params::new(n, mu, a, b, p, q, kappa, 1.0).unwrap(), v0));
        }
    }
    out
}

#[test]
fn criterion_04_pointwise_lemmas() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let opts = CheckOptions::default();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let mut lemma_ids = std::collections::BTreeSet::new();
    for (params, v0) in lemma_instances() {
        let (_, lp) = solve_log(&params, v0, 1.0);
        let chain = ConstantChain::build(&params, 1.0).unwrap();
        let reports = check_all_lemmas(&lp, &params, &chain, &opts).unwrap();
        count += 1;
        for rep in &reports {
            lemma_ids.insert(format!("{:?}", rep.lemma_id));
            worst = worst.min(rep.worst_margin);
            if !(rep.passed && rep.worst_margin >= -1e-6 && rep.points_checked > 0) {
                failures.push(format!("{params:?}: {rep:?}"));
            }
        }
        // Negative control: lower f'' well below what the inequality allows.
        let mut bad = lp.clone();
        for i in 0..bad.len() {
            bad.ddf[i] -= 1.0 + 10.0 * (bad.ddf[i].abs() + bad.df[i].abs() + bad.f[i] + bad.f[i] * bad.f[i]);
        }
        let bad_reports = check_all_lemmas(&bad, &params, &chain, &opts).unwrap();
        if bad_reports.iter().any(|r| r.passed) {
            failures.push(format!("corrupted profile passed for {params:?}"));
        }
    }
    if count < 10 {
        failures.push(format!("only {count} instances"));
    }
    finish(
        4,
        start,
        Duration::from_secs(60),
        failures,
        &format!("{count} instances, checks {lemma_ids:?}, worst margin {worst:.2e}"),
    );
}

#[test]
fn criterion_05_cascade_to_sup() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;

    // Aubin–Talenti on B_2: outside every gradient-estimate regime, so the
    // schedule uses θ₀ = 16 directly.
    let radius = 2.0;
    let m = ModelManifold::new(4, 0.0).unwrap();
    let closed = SolutionProfile::from_closed_form(at_params(radius), m, uniform_grid(radius, 2001), at_v, at_dv, at_ddv);
    let lp = log_transform(&closed).unwrap();
    let rep = cascade_schedule(&m, &lp, &schedule(4, 16.0, radius, 12).unwrap(), radius).unwrap();
    for row in rep.rows.iter().filter(|r| r.theta > 200.0) {
        let d = rep.deviation(row);
        worst = worst.max(d);
        if d > 0.02 {
            failures.push(format!("bubble k={} theta={:.0}: deviation {d:.3}", row.k, row.theta));
        }
    }

    let generic = [
        Params::new(4, 0.5, -1.0, 0.2, 1.0, 2.0, 0.0, 1.0).unwrap(),
        Params::new(5, 0.0, 1.0, 0.0, 0.5, 1.0, 1.0, 1.0).unwrap(),
        Params::new(5, 0.3, -1.0, 0.1, 0.2, 2.0, 0.0, 1.0).unwrap(),
        Params::new(6, -0.2, 1.0, 1.0, 0.3, 2.0, 1.0, 1.0).unwrap(),
        Params::new(6, 1.0, -0.5, 0.5, 1.0, 1.5, 1.0, 1.0).unwrap(),
    ];
    for params in generic {
        let (_, lp) = solve_log(&params, 1.0, 1.0);
        let chain = ConstantChain::build(&params, 1.0).unwrap();
        let m = ModelManifold::new(params.n, params.kappa).unwrap();
        let rep = cascade(&m, &lp, &chain, 16).unwrap();
        let rows: Vec<_> = rep.rows.iter().filter(|r| r.theta > 200.0).collect();
        if rows.is_empty() {
            failures.push(format!("no theta_k > 200 for {params:?}"));
        }
        for row in rows {
            let d = rep.deviation(row);
            worst = worst.max(d);
            if d > 0.02 {
                failures.push(format!("n={} k={} theta={:.0}: deviation {d:.3}", params.n, row.k, row.theta));
            }
        }
    }
    finish(5, start, Duration::from_secs(30), failures, &format!("worst deviation {worst:.2e} over 6 profiles"));
}

#[test]
fn criterion_06_sobolev_calibration() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let m = ModelManifold::new(3, 0.0).unwrap();
    let suite = standard_suite(1.0);
    let c_star = calibrate_sobolev(&m, &suite, 1.0).unwrap();
    if !c_star.is_finite() {
        failures.push(format!("c_n* = {c_star}"));
    }
    let at_star: Vec<_> = suite.iter().map(|g| sobolev_check(&m, g, 1.0, c_star).unwrap()).collect();
    if let Some(bad) = at_star.iter().find(|c| !(c.holds && c.margin >= 0.0)) {
        failures.push(format!("member fails at c_n*: {bad:?}"));
    }
    let below = suite.iter().filter(|g| !sobolev_check(&m, g, 1.0, 0.9 * c_star).unwrap().holds).count();
    if below == 0 {
        failures.push(format!("no member fails at 0.9·c_n* = {} (c_n* = {c_star})", 0.9 * c_star));
    }
    finish(6, start, Duration::from_secs(30), failures, &format!("c_n* = {c_star}, {below} members fail at 0.9·c_n*"));
}

#[test]
fn criterion_07_regime_table() {
    let start = Instant::now();
    use TheoremSource as T;
    use Verdict as V;
    let table: [((u32, f64, f64, f64, f64, f64, f64), V, T); 12] = [
        ((3, 0.0, 1.0, 0.0, 0.5, 1.0, 0.0), V::NoPositiveSolution, T::Cor1Case1),
        ((3, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0), V::NoPositiveSolution, T::Cor1Case2),
        ((3, 0.0, -1.0, 0.0, 1.0, 1.0, 0.0), V::NoPositiveSolution, T::Cor1Case3),
        ((3, 1.0, -1.0, 1.0, 1.0, 2.0, 0.0), V::ConstantOnly, T::Cor1Constant),
        ((4, -1.0, 2.0, 3.0, 0.5, 1.0, 0.0), V::NoPositiveSolution, T::Cor2),
        ((4, 0.0, -1.0, 1.0, 2.0, 6.0, 1.0), V::GradientBoundHolds, T::Thm3),
        ((4, 0.0, 0.0, 1.0, 2.0, 6.0, 0.0), V::NoPositiveSolution, T::Thm4Case1),
        ((4, 0.0, -1.0, 0.0, 2.0, 6.0, 0.0), V::NoPositiveSolution, T::Thm4Case2),
        ((3, 1.0, -1.0, 0.0, 1.5, 1.0, 1.0), V::GradientBoundHolds, T::Thm1Case1),
        ((3, 0.0, 1.0, 0.0, 1.5, 1.0, 1.0), V::GradientBoundHolds, T::Thm1Case2),
        ((4, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0), V::Unknown, T::None),
        ((3, -5.0, 1.0, 1.0, 1.0, 1.0, 1.0), V::Unknown, T::None),
    ];
    let mut failures = Vec::new();
    for ((n, mu, a, b, p, q, kappa), verdict, source) in table {
        let params = Params::new(n, mu, a, b, p, q, kappa, 1.0).unwrap();
        let rep = classify_regime(&params);
        if (rep.verdict, rep.theorem_source) != (verdict, source) {
            failures.push(format!("{params:?}: got {:?}/{:?}, want {verdict:?}/{source:?}", rep.verdict, rep.theorem_source));
        }
    }
    finish(7, start, Duration::from_secs(1), failures, "12 of 12 rows match");
}

#[test]
fn criterion_08_liouville_signature() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let params = Params::new(3, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0).unwrap();
    if let Some(t) = constant_solution(&params) {
        failures.push(format!("constant solution {t}"));
    }
    let m = ModelManifold::new(3, 0.0).unwrap();
    let mut r_stars = Vec::new();
    for i in 0..10 {
        let v0 = 0.1 * 2f64.powf(i as f64 * 0.75);
        let out = solve_radial(&params, &m, v0, 200.0, &SolverOptions::default()).unwrap();
        match out.status {
            SolveStatus::PositivityLost { r_star } if r_star.is_finite() => r_stars.push(r_star),
            s => failures.push(format!("v0 = {v0}: {s:?}")),
        }
    }
    let range = r_stars.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    finish(
        8,
        start,
        Duration::from_secs(30),
        failures,
        &format!("no constant solution; r* in [{:.3}, {:.3}] over 10 v0", range.0, range.1),
    );
}

#[test]
fn criterion_09_conformal_identities() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 3..=12u32 {
        let (_, alpha, gamma) = conformal_constants_exact(n).unwrap();
        let (p, q) = lichnerowicz_exponents_exact(n).unwrap();
        if q - p != 4.into() || gamma - alpha != 2.into() {
            failures.push(format!("n={n}: q-p = {}, gamma-alpha = {}", q - p, gamma - alpha));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = ModelManifold::new(4, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = RadialFunction::Bubble {
            scale: rng.gen_range(0.3..3.0),
            lambda: rng.gen_range(0.1..4.0),
            exponent: rng.gen_range(0.5..2.0),
        };
        let phi = RadialFunction::EvenPolynomial { coeffs: (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect() };
        let res = conformal_identity_residual(&m, &u, &phi, 2.0).unwrap();
        worst = worst.max(res);
    }
    if worst >= 1e-8 {
        failures.push(format!("identity residual {worst:.2e}"));
    }
    let mut round_trip: f64 = 0.0;
    for _ in 0..100 {
        let (s, u, n) = (rng.gen_range(0.0..10.0), rng.gen_range(0.1..10.0), rng.gen_range(3..=12u32));
        let back = sigma_transform(sigma_transform(s, u, n).unwrap(), 1.0 / u, n).unwrap();
        round_trip = round_trip.max((back - s).abs() / s.max(1.0));
    }
    if round_trip > 1e-12 {
        failures.push(format!("sigma round trip {round_trip:.2e}"));
    }
    finish(
        9,
        start,
        Duration::from_secs(10),
        failures,
        &format!("identity residual {worst:.2e}, sigma round trip {round_trip:.2e}"),
    );
}

#[test]
fn criterion_10_gradient_bound_scaling() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let regime = classify_regime(&at_params(1.0));
    if regime.verdict != Verdict::Unknown || 2.0 <= 4.0 / 3.0 {
        failures.push(format!("bubble classified as {regime:?}"));
    }
    let mut line = Vec::new();
    for radius in [2.0, 4.0, 8.0, 16.0, 32.0] {
        let (status, lp) = solve_log(&at_params(radius), AT_V0, radius);
        let c_obs = empirical_constant(&lp, radius, 0.0).unwrap();
        let oracle = lp.grid.iter().filter(|&&r| r <= radius / 2.0 + 1e-12).map(|&r| at_f(r)).fold(0.0, f64::max)
            * radius
            * radius;
        line.push(format!("R={radius}: {c_obs:.6}"));
        if status != SolveStatus::Complete || (c_obs - oracle).abs() > 1e-6 * oracle {
            failures.push(format!("R={radius}: c_obs {c_obs} vs oracle {oracle} ({status:?})"));
        }
        if c_obs > radius * radius * (1.0 + 1e-6) {
            failures.push(format!("R={radius}: c_obs {c_obs} grows faster than R²"));
        }
    }
    let constant = Params::new(3, -2.0, 1.0, 1.0, 1.0, 1.0, 0.0, 4.0).unwrap();
    let (_, lp) = solve_log(&constant, 1.0, 4.0);
    let c0 = empirical_constant(&lp, 4.0, 0.0).unwrap();
    if c0 != 0.0 {
        failures.push(format!("constant solution c_obs = {c0}"));
    }
    finish(
        10,
        start,
        Duration::from_secs(30),
        failures,
        &format!("outside regime (p = 2 > 4/3); {}; constant c_obs = 0", line.join(", ")),
    );
}

#[test]
fn criterion_11_determinism() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
command = "cascade"
[params]
n = 3
mu = 0.0
a = 1.0
b = 0.0
p = 1.0
q = 1.0
kappa = 1.0
R = 1.0
[solver]
v0 = 1.0
"#;
    let mut cfg = RunConfig::from_toml_str(text).unwrap();
    let mut docs = Vec::new();
    for sub in ["first", "second"] {
        cfg.output.dir = dir.path().join(sub);
        let outcome = run(&cfg, &RunOptions::default()).unwrap();
        if outcome.exit_code != 0 {
            failures.push(format!("exit {}", outcome.exit_code));
        }
        docs.push(std::fs::read_to_string(cfg.output.dir.join("report.json")).unwrap());
    }
    if !reports_match(&docs[0], &docs[1]).unwrap() {
        failures.push("report.json differs outside the timestamp".into());
    }
    let csv: Vec<_> = ["first", "second"]
        .iter()
        .map(|s| std::fs::read(dir.path().join(s).join("cascade.csv")).unwrap())
        .collect();
    if csv[0] != csv[1] {
        failures.push("cascade.csv differs".into());
    }
    finish(11, start, Duration::from_secs(10), failures, "report.json identical modulo timestamp");
}
