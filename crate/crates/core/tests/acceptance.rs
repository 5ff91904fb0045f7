//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line reaches the terminal.
//! Criteria listed in `EXPECTED_FAILURES` are evaluated and reported like the
//! rest; the target exits non-zero on any other failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use netsim_core::exec::Exec;
use netsim_core::experiment::{run_sweep, Config, Engine, SweepSection, SweptParam};
use netsim_core::geometry::Window;
use netsim_core::hcpp::{zeta1, zeta2, HcppParams, NearestPdfModel};
use netsim_core::metrics::{
    avg_interference, AnalyticModel, GeometryProfile, Regularization, Scenario, Strategy, TrafficMode,
};
use netsim_core::rng::derive_seed;
use netsim_core::simulator::{
    active_stations, empirical_nearest_pdf, estimate_at_distance, estimate_ee, finite_m_validation,
    sample_at_distance, FiniteMConfig, McConfig,
};
use netsim_core::Error;

/// Serving-distance histogram: the approximate law puts 20-30 % too little mass on
/// 115-205 m and up to 3x too much beyond 280 m.
const EXPECTED_FAILURES: [u32; 1] = [4];

type Criterion = (u32, &'static str, Box<dyn Fn() -> Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn paper_window() -> Window {
    Window::new(2500.0, 500.0).unwrap()
}

fn defaults() -> Scenario {
    Scenario::default()
}

fn c1_hard_core() -> Outcome {
    let t = Instant::now();
    let s = defaults();
    let w = paper_window();
    let mins = Exec::Parallel.map_indexed(1000, |i| {
        active_stations(&s, &w, derive_seed(101, i as u64))
            .unwrap()
            .min_pairwise_distance()
            .unwrap_or(f64::INFINITY)
    });
    let worst = mins.iter().cloned().fold(f64::INFINITY, f64::min);
    let elapsed = t.elapsed();
    outcome(
        worst >= 200.0 && elapsed < Duration::from_secs(60),
        format!("min pairwise distance over 1000 realizations {worst:.2} m, {elapsed:.1?}"),
    )
}

fn c2_intensity() -> Outcome {
    let s = defaults();
    let w = paper_window();
    let densities = Exec::Parallel.map_indexed(400, |i| {
        active_stations(&s, &w, derive_seed(202, i as u64))
            .unwrap()
            .count_in_measurement(&w) as f64
            / w.measurement_area()
    });
    let n = densities.len() as f64;
    let mean = densities.iter().sum::<f64>() / n;
    let var = densities.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let x = 1e-4 * PI * 200.0f64.powi(2);
    let oracle = 1e-4 * (1.0 - (-x).exp()) / x;
    let lib = zeta1(&s.hcpp);
    let z = (mean - oracle) / se;
    outcome(
        z.abs() <= 3.0 && rel(lib, oracle) < 1e-14 && rel(oracle, 7.9575e-6) < 1e-4,
        format!("empirical {mean:.5e} vs {oracle:.5e} (z = {z:.2}, 400 realizations)"),
    )
}

fn c3_moments() -> Outcome {
    let p = HcppParams::new(1e-4, 200.0).unwrap();
    let z1 = zeta1(&p);
    let far = (0..50)
        .map(|i| 400.0 * 1.1f64.powi(i))
        .map(|r| rel(zeta2(r, &p), z1 * z1))
        .fold(0.0, f64::max);
    let near_zero = (0..50).map(|i| 200.0 * i as f64 / 49.0).all(|r| zeta2(r, &p) == 0.0);
    outcome(
        far <= 1e-10 && near_zero,
        format!("max rel |zeta2 - zeta1^2| beyond 2 delta {far:.1e}; zero inside delta: {near_zero}"),
    )
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn c4_nearest_pdf() -> Outcome {
    let t = Instant::now();
    let s = defaults();
    let model = NearestPdfModel::fit(s.hcpp).unwrap();
    let upper = model.upper_limit();
    let mass = simpson(|r| model.pdf(r), 0.0, 100.0, 2000)
        + simpson(|r| model.pdf(r), 100.0, 200.0, 2000)
        + simpson(|r| model.pdf(r), 200.0, upper, 20000);
    let norm_ok = (mass - 1.0).abs() <= 1e-6;

    let width = 10.0;
    let edges: Vec<f64> = (0..=60).map(|i| i as f64 * width).collect();
    let cfg = McConfig::new(Window::new(700.0, 250.0).unwrap(), 10_000, 404);
    let hist = empirical_nearest_pdf(&s, &cfg, &edges).unwrap();
    let serving = s.serving_distance().unwrap();
    let model_mass: Vec<f64> = edges.windows(2).map(|e| serving.mass(e[0], e[1])).collect();
    let mut order: Vec<usize> = (0..model_mass.len()).collect();
    order.sort_by(|&a, &b| model_mass[b].total_cmp(&model_mass[a]));
    let mut covered = 0.0;
    let mut worst = (0.0, 0.0);
    for &k in &order {
        if covered >= 0.9 {
            break;
        }
        covered += model_mass[k];
        let dev = rel(hist.mass()[k], model_mass[k]);
        if dev > worst.0 {
            worst = (dev, hist.centers()[k]);
        }
    }
    let elapsed = t.elapsed();
    outcome(
        norm_ok && worst.0 <= 0.05 && elapsed < Duration::from_secs(300),
        format!(
            "|mass - 1| = {:.1e}; worst bin deviation {:.1}% at {:.0} m over bins holding 90% of mass, {elapsed:.1?}",
            (mass - 1.0).abs(),
            100.0 * worst.0,
            worst.1
        ),
    )
}

fn c5_interference() -> Outcome {
    let cfg = McConfig::new(Window::new(1200.0, 300.0).unwrap(), 1000, 505);
    let mut worst: f64 = 0.0;
    for st in Strategy::ALL {
        let s = defaults().with_strategy(st);
        for r in [50.0, 100.0, 150.0] {
            let mc = estimate_at_distance(&s, &cfg, r).unwrap().interference;
            let a = avg_interference(r, &s).unwrap();
            worst = worst.max(((mc.mean - a) / mc.std_error).abs());
        }
    }
    let mut disabled = defaults();
    disabled.regularization = Regularization::Disabled;
    let w = Window::new(1200.0, 300.0).unwrap();
    let diverges = [250.0, 400.0].iter().all(|&r| {
        matches!(avg_interference(r, &disabled), Err(Error::Divergence(_)))
            && matches!(sample_at_distance(&disabled, &w, r, 1), Err(Error::Divergence(_)))
    });
    outcome(
        worst <= 3.0 && diverges,
        format!("max |z| over 3 strategies x 3 distances {worst:.2}; disabled regularization diverges: {diverges}"),
    )
}

fn c6_jensen() -> Outcome {
    let s = defaults();
    let model = AnalyticModel::new(&s, Exec::Parallel).unwrap();
    let cfg = McConfig::new(Window::new(1200.0, 300.0).unwrap(), 200, 606);
    let mut bound_ok = true;
    let mut min_gap = f64::INFINITY;
    for i in 0..20 {
        let r = 20.0 * (i + 1) as f64;
        let mc = estimate_at_distance(&s, &cfg, r).unwrap().rate;
        let lb = model.rate_lower_bound(r);
        bound_ok &= lb <= mc.mean + 3.0 * mc.std_error;
        min_gap = min_gap.min((mc.mean - lb) / lb);
    }
    outcome(
        bound_ok && min_gap > 0.0,
        format!("bound holds at 20 distances: {bound_ok}; smallest relative gap {min_gap:.3}"),
    )
}

struct EeTable {
    deltas: Vec<f64>,
    analytic: Vec<[f64; 3]>,
    mc: Vec<[f64; 3]>,
}

fn c7_ordering(table: &EeTable) -> Outcome {
    let ordered = |v: &[f64; 3]| v[0] > v[1] && v[1] > v[2];
    let a_ok = table.analytic.iter().all(ordered);
    let m_ok = table.mc.iter().all(ordered);
    let matched = table.deltas.iter().all(|&d| {
        let m = defaults().with_hcpp(1e-4, d).unwrap();
        rel(m.active_density(), m.with_strategy(Strategy::RandomThin).active_density()) < 1e-15
    });
    let show = |v: &[[f64; 3]]| {
        v.iter()
            .map(|e| format!("{:.2e}>{:.2e}>{:.2e}", e[0], e[1], e[2]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        a_ok && m_ok && matched,
        format!("analytic {} | mc {}", show(&table.analytic), show(&table.mc)),
    )
}

fn ee_table() -> EeTable {
    let deltas = vec![100.0, 200.0, 300.0];
    let cfg = McConfig::new(paper_window(), 100, 707);
    let mut analytic = Vec::new();
    let mut mc = Vec::new();
    for &d in &deltas {
        let mut a = [0.0; 3];
        let mut m = [0.0; 3];
        for (k, st) in Strategy::ALL.into_iter().enumerate() {
            let s = defaults().with_hcpp(1e-4, d).unwrap().with_strategy(st);
            a[k] = AnalyticModel::new(&s, Exec::Parallel).unwrap().energy_efficiency().unwrap();
            m[k] = estimate_ee(&s, &cfg).unwrap().ee.mean;
        }
        analytic.push(a);
        mc.push(m);
    }
    EeTable { deltas, analytic, mc }
}

fn strictly(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn c8_trends() -> Outcome {
    let ee = |s: &Scenario| AnalyticModel::new(s, Exec::Parallel).unwrap().energy_efficiency().unwrap();
    let lambdas = [2.5e-5, 5e-5, 1e-4, 2e-4, 5e-4];
    let by_lambda: Vec<f64> = lambdas.iter().map(|&l| ee(&defaults().with_hcpp(l, 200.0).unwrap())).collect();
    let deltas = [100.0, 150.0, 200.0, 250.0, 300.0];
    let by_delta: Vec<f64> = deltas.iter().map(|&d| ee(&defaults().with_hcpp(1e-4, d).unwrap())).collect();
    let profile = Arc::new(GeometryProfile::build(&defaults(), Exec::Parallel).unwrap());
    let by_m: Vec<f64> = [64, 128, 192, 256]
        .iter()
        .map(|&m| {
            AnalyticModel::with_profile(&defaults().with_antennas(m), profile.clone())
                .unwrap()
                .energy_efficiency()
                .unwrap()
        })
        .collect();
    let ok = strictly(&by_lambda, true) && strictly(&by_delta, true) && strictly(&by_m, false);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(",");
    outcome(
        ok,
        format!("lambda_b [{}] delta [{}] M [{}]", fmt(&by_lambda), fmt(&by_delta), fmt(&by_m)),
    )
}

fn ce_at(s: &Scenario) -> f64 {
    AnalyticModel::new(s, Exec::Parallel)
        .unwrap()
        .coverage_efficiency_traffic(TrafficMode::AtMean)
        .unwrap()
}

fn c9_saturation() -> Outcome {
    let at = |l: f64| ce_at(&defaults().with_hcpp(l, 250.0).unwrap());
    let lo = at(2.5e-5);
    let hi = at(1e-3);
    let below: Vec<f64> = [2.5e-6, 5e-6, 1e-5, 2.5e-5].iter().map(|&l| at(l)).collect();
    let close = rel(lo, hi) < 0.02;
    outcome(
        close && strictly(&below, true),
        format!(
            "CE(2.5e-5) {lo:.5} vs CE(1e-3) {hi:.5}; below saturation {:?}",
            below.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn c10_invariance() -> Outcome {
    let profile = Arc::new(GeometryProfile::build(&defaults(), Exec::Parallel).unwrap());
    let ce = |m: u32, noise: Option<f64>| {
        let mut s = defaults().with_antennas(m);
        if let Some(n) = noise {
            s.radio.noise_power = n;
        }
        AnalyticModel::with_profile(&s, profile.clone())
            .unwrap()
            .coverage_efficiency_traffic(TrafficMode::AtMean)
            .unwrap()
    };
    let quiet: Vec<f64> = [64, 128, 256].iter().map(|&m| ce(m, Some(0.0))).collect();
    let noisy: Vec<f64> = [64, 128, 256].iter().map(|&m| ce(m, None)).collect();
    let identical = quiet.iter().all(|c| c.to_bits() == quiet[0].to_bits());
    let hi = noisy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = noisy.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi;
    outcome(
        identical && spread < 0.01,
        format!("noiseless bit-identical: {identical}; spread with noise {spread:.1e}"),
    )
}

fn c11_ce_paths() -> Outcome {
    let mut worst: f64 = 0.0;
    for st in Strategy::ALL {
        let m = AnalyticModel::new(&defaults().with_strategy(st), Exec::Parallel).unwrap();
        for i in 0..20 {
            let rho = 1.0 + 0.25 * i as f64;
            worst = worst.max((m.coverage_cdf(rho) - m.coverage_integral(rho)).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |cdf - integral| over 3 strategies x 20 thresholds {worst:.1e}"))
}

fn c12_asymptotics() -> Outcome {
    let t = Instant::now();
    let rows = finite_m_validation(&FiniteMConfig::default(), Exec::Parallel).unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| r.median_rel_error).collect();
    let elapsed = t.elapsed();
    outcome(
        strictly(&errs, false) && elapsed < Duration::from_secs(120),
        format!("median relative error at M = 16, 64, 256: {errs:.4?}, {elapsed:.1?}"),
    )
}

fn c13_reproducible() -> Outcome {
    let mut cfg = Config {
        realizations: 8,
        window_m: 1600.0,
        guard_m: 300.0,
        seed: 1313,
        ..Config::default()
    };
    cfg.sweep = Some(SweepSection {
        param: SweptParam::AntennasM,
        values: vec![64.0, 128.0],
        strategies: Strategy::ALL.to_vec(),
        engines: vec![Engine::Analytic, Engine::Montecarlo],
    });
    let a = run_sweep(&cfg, Exec::Parallel).unwrap().csv();
    let b = run_sweep(&cfg, Exec::Parallel).unwrap().csv();
    let c = run_sweep(&cfg, Exec::Sequential).unwrap().csv();
    outcome(
        a == b && a == c && a.lines().count() == 13,
        format!("{} bytes; repeat identical: {}; sequential identical: {}", a.len(), a == b, a == c),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (1, "hard-core exactness", Box::new(c1_hard_core)),
        (2, "intensity identity", Box::new(c2_intensity)),
        (3, "moment identity", Box::new(c3_moments)),
        (4, "nearest-distance pdf", Box::new(c4_nearest_pdf)),
        (5, "interference oracle", Box::new(c5_interference)),
        (6, "jensen direction", Box::new(c6_jensen)),
        (7, "ee ordering by strategy", Box::new(|| c7_ordering(&ee_table()))),
        (8, "ee trends in lambda_b, delta, M", Box::new(c8_trends)),
        (9, "ce saturation in lambda_b", Box::new(c9_saturation)),
        (10, "ce invariance in M", Box::new(c10_invariance)),
        (11, "ce path equivalence", Box::new(c11_ce_paths)),
        (12, "finite-M convergence", Box::new(c12_asymptotics)),
        (13, "reproducibility", Box::new(c13_reproducible)),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, run) in &criteria {
        let t = Instant::now();
        let o = run();
        let verdict = match (o.passed, EXPECTED_FAILURES.contains(id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {verdict:<15} {name}: {} [{:.1?}]", o.detail, t.elapsed());
        if o.passed {
            passed += 1;
        } else if !EXPECTED_FAILURES.contains(id) {
            unexpected.push(*id);
        }
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
