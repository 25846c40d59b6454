//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use wavebranch::conformal::{build_conformal_map, periodic_hilbert, PeriodicFunction};
use wavebranch::continuation::{
    continue_branch, detect_loop, Branch, BranchPoint, ContinuationConfig, LoopReport, Termination,
};
use wavebranch::dispersion::{eigen_spectrum, find_tau_star, Dispersion};
use wavebranch::field::{check_nodal, check_nodal_physical, FieldError, Orientation, WaveField};
use wavebranch::linear_wave::{CStarChoice, LinearWave, Regime};
use wavebranch::uniform_stream::{solve_uniform_stream, UniformStream, DEFAULT_NODES};
use wavebranch::vorticity::VorticityFn;

// Tolerances.
const TAU_ROOT_TOL: f64 = 1e-8;
const TAU_RUNTIME: Duration = Duration::from_secs(1);
const EIGEN_TOL: f64 = 1e-8;
const GAMMA_TOL: f64 = 1e-8;
const MONOTONE_POINTS: usize = 200;
const ASYMPTOTE_TAU: f64 = 50.0;
const ASYMPTOTE_BAND: (f64, f64) = (0.99, 1.01);
const POLE_REL_TOL: f64 = 0.05;
const SECOND_ORDER_BAND: (f64, f64) = (3.5, 4.5);
const FIRST_ORDER_BAND: (f64, f64) = (1.8, 2.2);
const HILBERT_TOL: f64 = 1e-12;
const CONFORMAL_TOL: f64 = 1e-10;
const BRANCH_RUNTIME: Duration = Duration::from_secs(300);
const NEWTON_TOL: f64 = 1e-9;
const SLOPE_BAND: (f64, f64) = (1.7, 2.3);
const PHYSICAL_SAMPLES: (usize, usize) = (23, 41);

type Outcome = Result<String, String>;

fn stream(vort: &VorticityFn, h: f64, lambda: f64) -> UniformStream {
    solve_uniform_stream(vort, h, lambda, DEFAULT_NODES).expect("uniform stream")
}

fn seed(vort: &VorticityFn, lambda: f64, t: f64, regime: Regime) -> LinearWave {
    let s = stream(vort, 1.0, lambda);
    let ts = find_tau_star(&s).expect("tau*");
    LinearWave::from_sample(&s, &ts.sample, t, regime, CStarChoice::Surface).expect("linear wave")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn in_band(v: f64, band: (f64, f64)) -> bool {
    (band.0..=band.1).contains(&v)
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.abs().ln(), y.abs().ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn c1_dispersion_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for lambda in [0.5, 0.8, 0.95] {
        let start = Instant::now();
        let s = solve_uniform_stream(&VorticityFn::Zero, 1.0, lambda, DEFAULT_NODES).map_err(|e| e.to_string())?;
        let ts = find_tau_star(&s).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        worst = worst.max((lambda * lambda - ts.tau.tanh() / ts.tau).abs());
    }
    check(
        worst <= TAU_ROOT_TOL && slowest < TAU_RUNTIME,
        format!("max |lambda^2 - tanh(tau)/tau| = {worst:.2e}, slowest {slowest:.2?}"),
    )
}

fn c2_eigenvalue_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for b in [-5.0, 0.0, 3.0] {
        for h in [1.0, 2.0] {
            let s = stream(&VorticityFn::linear(b, 0.0), h, 0.8);
            let spec = eigen_spectrum(&s, 1).map_err(|e| e.to_string())?;
            if spec.eigenfunctions[0].interior_zeros != 0 {
                return Err(format!("b = {b}, h = {h}: phi_1 has interior zeros"));
            }
            worst = worst.max((spec.mus[0] - (PI * PI / (h * h) - b)).abs());
        }
    }
    check(worst <= EIGEN_TOL, format!("max |mu_1 - (pi^2/h^2 - b)| = {worst:.2e}"))
}

fn c3_gamma_oracle() -> Outcome {
    let s = stream(&VorticityFn::Zero, 1.0, 1.0);
    let d = Dispersion::new(&s).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for tau in [0.5, 2.0, 10.0] {
        let g = d.gamma_profile(tau).map_err(|e| e.to_string())?;
        for i in 0..=400 {
            let y = i as f64 / 400.0;
            let exact = (tau * y).sinh() / tau.sinh();
            worst = worst.max((g.gamma.eval(y).0 - exact).abs());
        }
    }
    check(
        worst <= GAMMA_TOL,
        format!("sup |gamma - sinh(tau y)/sinh(tau h)| = {worst:.2e}"),
    )
}

fn c4_monotonicity() -> Outcome {
    let taus: Vec<f64> = (1..=MONOTONE_POINTS)
        .map(|i| 10.0 * i as f64 / MONOTONE_POINTS as f64)
        .collect();
    let cases = [
        (VorticityFn::Zero, 0.8),
        (VorticityFn::Zero, -0.8),
        (VorticityFn::polynomial([0.3, 0.0, 0.5]), 0.8),
        (VorticityFn::polynomial([0.3, 0.0, 0.5]), -0.8),
        (VorticityFn::linear(3.0, 0.0), 0.8),
    ];
    let mut failures = 0usize;
    let mut checked = 0usize;
    for (vort, lambda) in cases {
        let s = stream(&vort, 1.0, lambda);
        let curve = Dispersion::new(&s)
            .and_then(|d| d.sigma_scan(&taus))
            .map_err(|e| e.to_string())?;
        let pts: Vec<_> = curve.points.iter().filter_map(|p| p.as_ref().ok()).collect();
        for w in pts.windows(2) {
            checked += 1;
            let dsigma = w[1].sigma - w[0].sigma;
            if !(dsigma * s.kappa.signum() > 0.0) {
                failures += 1;
            }
            if !(w[1].gamma_prime_h > w[0].gamma_prime_h) {
                failures += 1;
            }
        }
    }
    check(
        failures == 0,
        format!("{failures} failures over {checked} sampled intervals"),
    )
}

fn c5_pole_and_asymptote() -> Outcome {
    let mut ratios = Vec::new();
    for (vort, lambda) in [
        (VorticityFn::Zero, 1.5),
        (VorticityFn::Zero, 2.0),
        (VorticityFn::polynomial([1.0]), 2.0),
    ] {
        let s = stream(&vort, 1.0, lambda);
        let sigma = Dispersion::new(&s)
            .and_then(|d| d.sigma(ASYMPTOTE_TAU))
            .map_err(|e| e.to_string())?;
        ratios.push(sigma / (s.kappa * ASYMPTOTE_TAU));
    }
    let s = stream(&VorticityFn::linear(2.0 * PI * PI, 0.0), 1.0, 0.8);
    let d = Dispersion::new(&s).map_err(|e| e.to_string())?;
    let spec = eigen_spectrum(&s, 1).map_err(|e| e.to_string())?;
    let pole = -spec.mus[0];
    let expected = -s.kappa * spec.eigenfunctions[0].surface_slope.powi(2);
    let f = |delta: f64| d.sigma((pole + delta).sqrt()).map(|v| v * delta);
    let fit = 0.5 * (f(1e-3).map_err(|e| e.to_string())? + f(-1e-3).map_err(|e| e.to_string())?);
    let rel = (fit / expected - 1.0).abs();
    check(
        ratios.iter().all(|&r| in_band(r, ASYMPTOTE_BAND)) && rel < POLE_REL_TOL,
        format!("sigma/(kappa tau) at tau=50: {ratios:.4?}; pole coefficient relative error {rel:.2e}"),
    )
}

fn c6_small_amplitude_order() -> Outcome {
    let rot = seed(
        &VorticityFn::polynomial([0.3, 0.0, 0.5]),
        0.8,
        0.02,
        Regime::FixedPeriod,
    );
    let irr = seed(&VorticityFn::Zero, 0.8, 0.02, Regime::FixedPeriod);
    let at = |w: &LinearWave, t: f64| LinearWave { t, ..w.clone() };
    let mut bern = Vec::new();
    let mut field = Vec::new();
    for t in [0.02, 0.01, 0.005] {
        for w in [&rot, &irr] {
            bern.push(at(w, t).max_bernoulli_residual(65) / at(w, 0.5 * t).max_bernoulli_residual(65));
        }
        field.push(at(&rot, t).max_field_residual(33, 33) / at(&rot, 0.5 * t).max_field_residual(33, 33));
    }
    let s = stream(&VorticityFn::Zero, 1.0, 0.8);
    let off = Dispersion::new(&s)
        .and_then(|d| d.gamma_profile(2.0))
        .map_err(|e| e.to_string())?;
    let w = LinearWave::from_sample(&s, &off, 0.02, Regime::FixedPeriod, CStarChoice::Surface)
        .map_err(|e| e.to_string())?;
    let off_ratios: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&t| at(&w, t).max_bernoulli_residual(65) / at(&w, 0.5 * t).max_bernoulli_residual(65))
        .collect();
    let ok = bern.iter().chain(&field).all(|&r| in_band(r, SECOND_ORDER_BAND))
        && off_ratios.iter().all(|&r| in_band(r, FIRST_ORDER_BAND));
    check(
        ok,
        format!("Bernoulli ratios {bern:.3?}, field ratios {field:.3?}, off-root Bernoulli ratios {off_ratios:.3?}"),
    )
}

fn c7_nodal_certification() -> Outcome {
    let plus = WaveField::from_linear_wave(&seed(&VorticityFn::Zero, 0.8, 0.01, Regime::FixedPeriod), 17, 33);
    let minus = WaveField::from_linear_wave(&seed(&VorticityFn::Zero, 0.8, -0.01, Regime::FixedPeriod), 17, 33);
    let rp = check_nodal(&plus, Orientation::Auto).map_err(|e| e.to_string())?;
    let rm = check_nodal(&minus, Orientation::Auto).map_err(|e| e.to_string())?;
    let fixed = check_nodal(
        &minus,
        if rp.orientation > 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        },
    )
    .map_err(|e| e.to_string())?;
    let uniform = WaveField::from_uniform_stream(
        &stream(&VorticityFn::Zero, 1.0, 0.8),
        plus.period_star,
        Regime::FixedPeriod,
        17,
        33,
    );
    let degenerate = matches!(
        check_nodal(&uniform, Orientation::Auto),
        Err(FieldError::DegenerateField { .. })
    );
    let ok = rp.all_hold()
        && rp.min_margin() > 0.0
        && rm.all_hold()
        && rm.orientation == -rp.orientation
        && !fixed.all_hold()
        && degenerate;
    check(
        ok,
        format!(
            "t=+0.01 orientation {:+}, min margin {:.3e}; t=-0.01 orientation {:+}; uniform stream degenerate: {degenerate}",
            rp.orientation,
            rp.min_margin(),
            rm.orientation
        ),
    )
}

fn suite_fields(branch: &Branch) -> Vec<WaveField> {
    let mut fields = vec![
        WaveField::from_linear_wave(&seed(&VorticityFn::Zero, 0.8, 0.01, Regime::FixedPeriod), 17, 33),
        WaveField::from_linear_wave(&seed(&VorticityFn::Zero, 0.8, -0.01, Regime::FixedPeriod), 17, 33),
        WaveField::from_linear_wave(
            &seed(
                &VorticityFn::polynomial([0.3, 0.0, 0.5]),
                0.8,
                0.01,
                Regime::FixedPeriod,
            ),
            17,
            33,
        ),
        WaveField::from_linear_wave(&seed(&VorticityFn::Zero, 0.8, 0.01, Regime::VariablePeriod), 17, 33),
    ];
    fields.extend(branch.points[1..].iter().map(|p| p.field.clone()));
    fields
}

fn c8_coordinate_invariance(branch: &Branch) -> Outcome {
    let fields = suite_fields(branch);
    let mut mismatches = 0usize;
    for f in &fields {
        let a = check_nodal(f, Orientation::Auto).map_err(|e| e.to_string())?;
        let orientation = if a.orientation > 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        };
        let b =
            check_nodal_physical(f, orientation, PHYSICAL_SAMPLES.0, PHYSICAL_SAMPLES.1).map_err(|e| e.to_string())?;
        if a.verdicts() != b.verdicts() {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatches over {} fields", fields.len()),
    )
}

fn c9_hilbert_conformal() -> Outcome {
    let period = 2.0 * PI / 1.3;
    let tau = 1.3;
    let h = 0.9;
    let mut mult_err = 0.0f64;
    for k in 1..=6 {
        let mut a = vec![0.0; k + 1];
        a[k] = 1.0;
        let out = periodic_hilbert(&PeriodicFunction::from_cosine(period, &a), h).map_err(|e| e.to_string())?;
        let coth = 1.0 / (k as f64 * tau * h).tanh();
        for j in 0..32 {
            let x = period * j as f64 / 32.0;
            mult_err = mult_err.max((out.eval(x).0 - coth * (k as f64 * tau * x).sin()).abs());
        }
    }

    let w = PeriodicFunction::from_cosine(period, &[0.0, 0.15, -0.04, 0.01]);
    let m = build_conformal_map(&w, h).map_err(|e| e.to_string())?;
    // sixth-order central differences, independent of the closed-form derivatives
    let diff = |f: &dyn Fn(f64) -> f64, x: f64| {
        let e = 1e-3;
        (45.0 * (f(x + e) - f(x - e)) - 9.0 * (f(x + 2.0 * e) - f(x - 2.0 * e)) + (f(x + 3.0 * e) - f(x - 3.0 * e)))
            / (60.0 * e)
    };
    let mut cr = 0.0f64;
    for i in 0..24 {
        for j in 1..12 {
            let (x, y) = (period * i as f64 / 24.0, -h * j as f64 / 12.0);
            let u_x = diff(&|s| m.u(s, y), x);
            let u_y = diff(&|s| m.u(x, s), y);
            let v_x = diff(&|s| m.v(s, y), x);
            let v_y = diff(&|s| m.v(x, s), y);
            let v_xx = diff(&|s| m.derivs(s, y).v_x, x);
            let v_yy = diff(&|s| m.derivs(x, s).v_y, y);
            cr = cr
                .max((u_x - v_y).abs())
                .max((u_y + v_x).abs())
                .max((v_xx + v_yy).abs());
        }
    }

    let flat = build_conformal_map(&PeriodicFunction::zero(period, 4), h).map_err(|e| e.to_string())?;
    let mut identity = 0.0f64;
    for i in 0..10 {
        let (x, y) = (0.37 * i as f64, -0.09 * i as f64);
        identity = identity.max((flat.u(x, y) - x).abs()).max((flat.v(x, y) - y - h).abs());
    }

    let a = 0.2;
    let single =
        build_conformal_map(&PeriodicFunction::from_cosine(period, &[0.0, a]), h).map_err(|e| e.to_string())?;
    let mut surface = 0.0f64;
    for i in 0..40 {
        let x = period * i as f64 / 40.0;
        let (sx, sy) = single.surface(x);
        let ex = x + a / (tau * h).tanh() * (tau * x).sin();
        let ey = h + a * (tau * x).cos();
        surface = surface.max((sx - ex).abs()).max((sy - ey).abs());
    }
    check(
        mult_err <= HILBERT_TOL && cr <= CONFORMAL_TOL && identity <= CONFORMAL_TOL && surface <= CONFORMAL_TOL,
        format!("multiplier {mult_err:.1e}, Cauchy-Riemann/harmonic {cr:.1e}, identity {identity:.1e}, surface {surface:.1e}"),
    )
}

fn c10_continuation_run(branch: &Branch, elapsed: Duration) -> Outcome {
    let worst = branch.points.iter().map(|p| p.newton_residual).fold(0.0, f64::max);
    let orientations: Vec<f64> = branch.points[1..]
        .iter()
        .filter_map(|p| p.nodal.as_ref().map(|n| n.orientation))
        .collect();
    let constant = orientations.len() == branch.points.len() - 1 && orientations.iter().all(|&o| o == orientations[0]);
    let all_hold = branch.points[1..]
        .iter()
        .all(|p| p.nodal.as_ref().is_some_and(|n| n.all_hold()));
    let r = &branch.loop_report;
    let uniform_ok = r.uniform_points.len() == 1 && r.uniform_points[0].0 == 0;
    let ok = elapsed < BRANCH_RUNTIME
        && branch.points.len() == 21
        && branch.termination == Termination::MaxSteps
        && worst <= NEWTON_TOL
        && constant
        && all_hold
        && r.certificate.is_none()
        && uniform_ok;
    check(
        ok,
        format!(
            "{} points in {elapsed:.2?}, termination {}, max residual {worst:.1e}, orientation constant {constant}, nodal all hold {all_hold}, loop certificate {}, near-uniform points {:?}",
            branch.points.len(),
            branch.termination.as_str(),
            r.certificate.is_some(),
            r.uniform_points
        ),
    )
}

fn c11_variable_period_order() -> Outcome {
    let b = continue_branch(
        &seed(&VorticityFn::Zero, 0.8, 0.005, Regime::VariablePeriod),
        &ContinuationConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let ts: Vec<f64> = b.points[1..].iter().map(|p| p.t).collect();
    let dp: Vec<f64> = b.points[1..].iter().map(|p| p.parameter - b.period_star).collect();
    let slope = loglog_slope(&ts, &dp);
    check(
        in_band(slope, SLOPE_BAND),
        format!(
            "log-log slope of |Lambda - Lambda*| vs t over {} points: {slope:.4}",
            ts.len()
        ),
    )
}

fn synthetic(template: &Branch, coords: &[(f64, f64)]) -> Branch {
    let base = template.points[0].field.clone();
    let points = coords
        .iter()
        .map(|&(a, b)| {
            let mut f = base.clone();
            f.eta[1] = a;
            f.eta[2] = b;
            BranchPoint::from_field(f, 0.0, 0)
        })
        .collect();
    Branch {
        points,
        loop_report: LoopReport::default(),
        ..template.clone()
    }
}

fn c12_loop_detector(template: &Branch) -> Outcome {
    let n = 24;
    let closed: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            (0.01 * th.cos(), 0.01 * th.sin())
        })
        .collect();
    let open: Vec<(f64, f64)> = (0..=n).map(|k| (0.001 * k as f64, 0.0005 * k as f64)).collect();
    let radius = template.config.loop_radius;
    let c = detect_loop(&synthetic(template, &closed), radius);
    let o = detect_loop(&synthetic(template, &open), radius);
    check(
        c.certificate.is_some() && o.certificate.is_none(),
        format!(
            "closed curve certificate {:?}; open curve certificate {:?}",
            c.certificate.map(|c| (c.i, c.j)),
            o.certificate.map(|c| (c.i, c.j))
        ),
    )
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).expect("prefix").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c13_determinism() -> Outcome {
    let root = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let cfg = root.path().join("run.toml");
    fs::write(&cfg, "[flow]\nlambda = 0.8\n").map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<PathBuf, String> {
        let out = root.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_wavebranch"))
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("continue")
            .status()
            .map_err(|e| e.to_string())?;
        if status.success() {
            Ok(out)
        } else {
            Err(format!("continue exited with {status}"))
        }
    };
    let (a, b) = (run("a")?, run("b")?);
    let (fa, fb) = (files_under(&a), files_under(&b));
    if fa != fb || fa.is_empty() {
        return Err("output file sets differ".into());
    }
    let differing: Vec<_> = fa
        .iter()
        .filter(|p| fs::read(a.join(p)).ok() != fs::read(b.join(p)).ok())
        .collect();
    check(
        differing.is_empty(),
        format!("{} files compared, {} differ", fa.len(), differing.len()),
    )
}

fn main() {
    let start = Instant::now();
    let branch = continue_branch(
        &seed(&VorticityFn::Zero, 0.8, 0.005, Regime::FixedPeriod),
        &ContinuationConfig::default(),
    );
    let elapsed = start.elapsed();

    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 irrotational dispersion oracle", c1_dispersion_oracle()),
        ("2 eigenvalue oracle", c2_eigenvalue_oracle()),
        ("3 gamma-profile oracle", c3_gamma_oracle()),
        ("4 monotonicity suites", c4_monotonicity()),
        ("5 pole/asymptote suite", c5_pole_and_asymptote()),
        ("6 small-amplitude order", c6_small_amplitude_order()),
        ("7 nodal certification", c7_nodal_certification()),
    ];
    match &branch {
        Ok(b) => {
            results.push(("8 coordinate invariance", c8_coordinate_invariance(b)));
            results.push(("9 Hilbert/conformal suite", c9_hilbert_conformal()));
            results.push(("10 continuation run", c10_continuation_run(b, elapsed)));
            results.push(("11 variable-period order", c11_variable_period_order()));
            results.push(("12 loop-detector self-test", c12_loop_detector(b)));
        }
        Err(e) => {
            for name in [
                "8 coordinate invariance",
                "10 continuation run",
                "12 loop-detector self-test",
            ] {
                results.push((name, Err(format!("branch failed: {e}"))));
            }
            results.push(("9 Hilbert/conformal suite", c9_hilbert_conformal()));
            results.push(("11 variable-period order", c11_variable_period_order()));
        }
    }
    results.push(("13 determinism", c13_determinism()));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
