//! Acceptance suite. Run with
//!
//! ```text
//! cargo test --release -p regime-risk --test acceptance
//! ```
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use regime_risk::commands::{cmd_calibrate_config, cmd_risk, cmd_simulate, cmd_sweep, cmd_yield_sweep, yield_sweep};
use regime_risk::{Overrides, Report, Run, RunConfig};
use regime_risk_core::chain::matrix_exp;
use regime_risk_core::ou::{calibrate_values, conditional_law, simulate_path};
use regime_risk_core::risk::{
    claim_risk_mc, entropic_mc, future_risk_closed, spot_expectation, spot_risk_closed,
};
use regime_risk_core::stream::path_rng;
use regime_risk_core::{Claim, FutureClaim, Generator, LinearSpotClaim, McConfig, OUParams, RiskQuery};

/// Stream family for drawing random test instances.
const INSTANCES: u64 = 0xacce_0000_0000_0000;
const DAYS: f64 = 252.0;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Rates `i -> j` uniform in `[lo, hi]`, column convention.
fn random_generator<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Generator {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rows[j][i] = rng.random_range(lo..=hi);
            }
        }
        rows[i][i] = -(0..n).filter(|&j| j != i).map(|j| rows[j][i]).sum::<f64>();
    }
    Generator::from_rows(&rows).expect("valid generator")
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let (mut agree, mut tame, mut tame_agree) = (0, 0, 0);
    let mut worst = (0.0_f64, 0_u64);
    let mut calmest_failure = f64::INFINITY;
    let total = 200;
    for k in 0..total {
        let mut rng = path_rng(1, INSTANCES, k);
        let n = [1, 2, 4][rng.random_range(0..3)];
        let g = random_generator(n, 0.1, 2.0, &mut rng);
        let alpha: f64 = rng.random_range(0.5..=6.0);
        let sigma = rng.random_range(1.0..=20.0);
        let mu = rng.random_range(20.0..=80.0);
        let sd = sigma / (2.0 * alpha).sqrt();
        let x_s = mu + rng.random_range(-2.0..=2.0) * sd;
        let delta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let gamma = [0.5, 1.0, 5.0, 20.0][rng.random_range(0..4)];
        let horizon = [50.0, 150.0][rng.random_range(0..2)] / DAYS;
        let start = rng.random_range(0..n);
        let ou = OUParams::new(alpha, mu, sigma, x_s).unwrap();
        let q = RiskQuery::new(gamma, 0.0, horizon, x_s).unwrap();

        let (claim, closed, scale) = if k % 2 == 0 {
            let c = LinearSpotClaim::new(delta.clone()).unwrap();
            let r = spot_risk_closed(&ou, &g, &delta, &q).unwrap();
            (Claim::Linear(c), r, 1.0)
        } else {
            let r = rng.random_range(0.0..=0.05);
            let y = rng.random_range(-0.05..=0.15);
            let c = FutureClaim::new(delta.clone(), r, y, horizon).unwrap();
            let risk = future_risk_closed(&ou, &g, &c, &q).unwrap();
            let d = c.discount(0.0);
            (Claim::Future(c), risk, d)
        };
        let mc = claim_risk_mc(&ou, &g, &claim, &q, &McConfig::new(100_000, k)).unwrap();
        let z = mc[start].z_score(closed.risk_given_state(start));
        let ok = z <= 3.0;
        agree += ok as usize;
        if z > worst.0 {
            worst = (z, k);
        }
        // Spread of the Monte-Carlo weights exp(-payoff / gamma) in log units.
        let v = conditional_law(&ou, x_s, 0.0, horizon).unwrap().variance;
        let spread = delta.iter().map(|d| (d * scale).abs()).fold(0.0, f64::max) * v.sqrt() / gamma;
        if !ok {
            calmest_failure = calmest_failure.min(spread);
        }
        if spread <= 1.0 {
            tame += 1;
            tame_agree += ok as usize;
        }
    }
    let rate = agree as f64 / total as f64;
    Outcome {
        name: "oracle equivalence (closed form vs Monte Carlo, 200 instances, 1e5 paths, 3 SE, >= 99%)",
        pass: rate >= 0.99,
        detail: format!(
            "{agree}/{total} within 3 SE ({:.1}%); worst z = {:.1} (instance {}); \
             instances with log-weight spread <= 1: {tame_agree}/{tame}; \
             smallest spread among disagreements {:.2}; {:.1} s",
            100.0 * rate,
            worst.0,
            worst.1,
            calmest_failure,
            started.elapsed().as_secs_f64()
        ),
    }
}

fn scalar_reduction() -> Outcome {
    let g = Generator::zero(1);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for &gamma in &[0.5, 1.0, 5.0, 20.0, 100.0] {
        for &delta in &[-2.0, -0.3, 0.75, 1.5] {
            for &(alpha, sigma, days) in &[(0.5, 1.0, 1.0), (5.0, 13.66, 50.0), (2.0, 20.0, 150.0), (6.0, 5.0, 252.0), (1.0, 8.0, 500.0)] {
                let ou = OUParams::new(alpha, 48.22, sigma, 62.24).unwrap();
                let q = RiskQuery::new(gamma, 0.0, days / DAYS, ou.x0).unwrap();
                let risk = spot_risk_closed(&ou, &g, &[delta], &q).unwrap().risk_given_state(0);
                let law = conditional_law(&ou, ou.x0, 0.0, q.horizon).unwrap();
                let oracle = delta * law.mean - delta * delta * law.variance / (2.0 * gamma);
                worst = worst.max((risk - oracle).abs());
                count += 1;
            }
        }
    }
    Outcome {
        name: "scalar reduction (N = 1 equals delta m - delta^2 v / (2 gamma), 1e-10)",
        pass: count == 100 && worst <= 1e-10,
        detail: format!("{count} grid points, max abs error {worst:.2e}"),
    }
}

fn future_scaling_identity() -> Outcome {
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let mut rng = path_rng(2, INSTANCES, k);
        let n = rng.random_range(1..=5);
        let g = random_generator(n, 0.1, 2.0, &mut rng);
        let ou = OUParams::new(
            rng.random_range(0.5..=6.0),
            rng.random_range(20.0..=80.0),
            rng.random_range(1.0..=20.0),
            rng.random_range(20.0..=80.0),
        )
        .unwrap();
        let delta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let maturity = rng.random_range(0.05..=2.0);
        let s = rng.random_range(0.0..maturity * 0.9);
        let q = RiskQuery::new(rng.random_range(0.5..=20.0), s, maturity, rng.random_range(20.0..=80.0)).unwrap();
        let c = FutureClaim::new(delta.clone(), rng.random_range(0.0..=0.1), rng.random_range(-0.1..=0.2), maturity).unwrap();
        let scaled: Vec<f64> = delta.iter().map(|d| d * c.discount(s)).collect();
        let a = future_risk_closed(&ou, &g, &c, &q).unwrap().risks();
        let b = spot_risk_closed(&ou, &g, &scaled, &q).unwrap().risks();
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    Outcome {
        name: "future scaling identity (future risk = spot risk with discounted loadings, 1e-12)",
        pass: worst <= 1e-12,
        detail: format!("100 instances, max abs difference {worst:.2e}"),
    }
}

fn markov_layer() -> Vec<Outcome> {
    let (mut semigroup, mut stochastic) = (0.0_f64, 0.0_f64);
    for k in 0..100 {
        let mut rng = path_rng(3, INSTANCES, k);
        let n = rng.random_range(1..=6);
        let g = random_generator(n, 0.01, 5.0, &mut rng);
        let (s, t) = (rng.random_range(0.0..=3.0), rng.random_range(0.0..=3.0));
        let lhs = matrix_exp(&g, s + t).unwrap();
        let rhs = matrix_exp(&g, s).unwrap() * matrix_exp(&g, t).unwrap();
        semigroup = semigroup.max((lhs - rhs).abs().max());
        for &h in &[1e-4, 0.1, 1.0, 10.0, 250.0] {
            let p = matrix_exp(&g, h).unwrap();
            for col in p.column_iter() {
                stochastic = stochastic.max((col.sum() - 1.0).abs());
            }
            stochastic = stochastic.max(-p.min().min(0.0));
        }
    }
    let mut two_state = 0.0_f64;
    for &(a, b) in &[(0.5, 1.0), (2.0, 0.1), (0.1, 30.0), (63.0, 0.6), (1.0, 1.0)] {
        let g = Generator::from_rows(&[vec![-a, b], vec![a, -b]]).unwrap();
        for &t in &[0.01, 0.5, 2.0, 20.0] {
            let e = (-(a + b) * t).exp();
            let exact = [[(b + a * e) / (a + b), b * (1.0 - e) / (a + b)], [a * (1.0 - e) / (a + b), (a + b * e) / (a + b)]];
            let p = matrix_exp(&g, t).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    two_state = two_state.max((p[(i, j)] - exact[i][j]).abs());
                }
            }
        }
    }
    vec![
        Outcome {
            name: "matrix exponential semigroup (1e-8)",
            pass: semigroup <= 1e-8,
            detail: format!("100 random generators, max abs error {semigroup:.2e}"),
        },
        Outcome {
            name: "transition matrices column-stochastic (1e-9)",
            pass: stochastic <= 1e-9,
            detail: format!("max column-sum or negativity error {stochastic:.2e}"),
        },
        Outcome {
            name: "two-state analytic exponential (1e-12)",
            pass: two_state <= 1e-12,
            detail: format!("max abs error {two_state:.2e}"),
        },
    ]
}

fn calibration_round_trip() -> Outcome {
    let truth = OUParams::new(5.0, 48.22, 13.66, 48.22).unwrap();
    let grid: Vec<f64> = (0..10_000).map(|k| k as f64 / DAYS).collect();
    let mut recovered = 0;
    for seed in 0..100 {
        let xs = simulate_path(&truth, &grid, &mut path_rng(seed, INSTANCES ^ 4, 0)).unwrap();
        let cal = calibrate_values(&xs, 1.0 / DAYS).unwrap();
        let (p, se) = (cal.params, cal.std_errors);
        let ok = (p.alpha - truth.alpha).abs() <= 3.0 * se.alpha
            && (p.mu - truth.mu).abs() <= 3.0 * se.mu
            && (p.sigma - truth.sigma).abs() <= 3.0 * se.sigma;
        recovered += ok as usize;
    }
    Outcome {
        name: "calibration round trip (all parameters within 3 SE, >= 95% of 100 seeds)",
        pass: recovered >= 95,
        detail: format!("{recovered}/100 seeds"),
    }
}

fn risk_properties() -> Vec<Outcome> {
    let gammas = [0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 100.0, 1e4];
    let (mut monotone, mut jensen) = (true, true);
    let (mut worst_drop, mut worst_excess) = (0.0_f64, 0.0_f64);
    for k in 0..200 {
        let mut rng = path_rng(5, INSTANCES, k);
        let n = rng.random_range(1..=4);
        let g = random_generator(n, 0.1, 2.0, &mut rng);
        let ou = OUParams::new(
            rng.random_range(0.5..=6.0),
            rng.random_range(20.0..=80.0),
            rng.random_range(1.0..=20.0),
            rng.random_range(20.0..=80.0),
        )
        .unwrap();
        let delta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let horizon = rng.random_range(1.0..=300.0) / DAYS;
        let mut prev: Option<Vec<f64>> = None;
        for &gamma in &gammas {
            let q = RiskQuery::new(gamma, 0.0, horizon, ou.x0).unwrap();
            let risks = spot_risk_closed(&ou, &g, &delta, &q).unwrap().risks();
            let mean = spot_expectation(&ou, &g, &delta, &q).unwrap();
            for (r, m) in risks.iter().zip(&mean) {
                let excess = r - m;
                worst_excess = worst_excess.max(excess);
                jensen &= excess <= 1e-9 * (1.0 + m.abs());
            }
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&risks) {
                    worst_drop = worst_drop.max(a - b);
                    monotone &= b - a >= -1e-9 * (1.0 + a.abs());
                }
            }
            prev = Some(risks);
        }
    }
    let mut worst_cash = 0.0_f64;
    for k in 0..200 {
        let mut rng = path_rng(6, INSTANCES, k);
        let samples: Vec<f64> = (0..500).map(|_| rng.random_range(-50.0..=50.0)).collect();
        let gamma = rng.random_range(0.1..=50.0);
        let c = rng.random_range(-100.0..=100.0);
        let shifted: Vec<f64> = samples.iter().map(|s| s + c).collect();
        let a = entropic_mc(&samples, gamma).unwrap().value;
        let b = entropic_mc(&shifted, gamma).unwrap().value;
        worst_cash = worst_cash.max((b - a - c).abs() / (1.0 + a.abs() + c.abs()));
    }
    vec![
        Outcome {
            name: "closed form nondecreasing in gamma (1e-9 relative)",
            pass: monotone,
            detail: format!("200 instances x {} gammas, largest decrease {worst_drop:.2e}", gammas.len()),
        },
        Outcome {
            name: "closed form below the expectation (1e-9 relative)",
            pass: jensen,
            detail: format!("largest excess over the mean {worst_excess:.2e}"),
        },
        Outcome {
            name: "entropic_mc cash additive (1e-9 relative)",
            pass: worst_cash <= 1e-9,
            detail: format!("200 sample sets, max relative error {worst_cash:.2e}"),
        },
    ]
}

fn csv_rows(bytes: &[u8]) -> Vec<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(false).from_reader(bytes);
    rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn sweep_structure() -> Outcome {
    let path = configs().join("wti_linear.json");
    let run = Run::load(&path, "sweep", &Overrides::default()).unwrap();
    let report = cmd_sweep(&run).unwrap();
    let rows = csv_rows(report.file("sweep_table.csv").unwrap());
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    let shape_ok = rows.iter().all(|r| r.len() == 5)
        && labels
            == [
                "row",
                "T=50 days",
                "T=150 days",
                "Variation abs (T=50->150 days)",
                "Variation % (T=50->150 days)",
            ];
    let nondecreasing = rows[1..3].iter().all(|r| {
        let v: Vec<f64> = r[1..].iter().map(|c| c.parse().unwrap()).collect();
        v.windows(2).all(|w| w[1] >= w[0])
    });

    let (mut cfg, base) = RunConfig::load(&path).unwrap();
    cfg.grids.gammas = vec![2.5];
    cfg.grids.horizons_days = vec![50.0];
    let single = cmd_sweep(&Run::new(cfg, &base, "sweep", &Overrides::default()).unwrap()).unwrap();
    let single_rows = csv_rows(single.file("sweep_table.csv").unwrap());
    let single_ok = single_rows.len() == 2 && single_rows.iter().all(|r| r.len() == 2);

    Outcome {
        name: "sweep reproduces the sensitivity-table layout",
        pass: shape_ok && nondecreasing && single_ok,
        detail: format!(
            "2 horizons x 4 gammas with variation rows: {shape_ok}; rows nondecreasing in gamma: {nondecreasing}; \
             1x1 grid without variation rows: {single_ok}"
        ),
    }
}

fn yield_convergence() -> Outcome {
    let started = Instant::now();
    let run = Run::load(&configs().join("wti_future.json"), "yield-sweep", &Overrides::default()).unwrap();
    let sweep = yield_sweep(&run.model).unwrap();
    let report = cmd_yield_sweep(&run).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let has_eight = sweep.curves.iter().any(|c| c.label == "0.08")
        && csv_rows(report.file("yield_sweep.csv").unwrap()).iter().any(|r| r[0] == "0.08");
    Outcome {
        name: "cross-yield risk spread shrinks toward maturity (shipped config, < 10 s)",
        pass: sweep.final_spread() < sweep.initial_spread() && secs < 10.0 && has_eight,
        detail: format!(
            "spread {:.4} at t = 0, {:.4} at t = {} days; curve \"0.08\" present: {has_eight}; {secs:.2} s",
            sweep.initial_spread(),
            sweep.final_spread(),
            sweep.t_days.last().unwrap()
        ),
    }
}

fn determinism() -> Outcome {
    type Cmd = fn(&Run) -> anyhow::Result<Report>;
    let cases: [(&str, &str, Cmd, bool); 6] = [
        ("wti_linear.json", "simulate", cmd_simulate, false),
        ("wti_linear.json", "risk", cmd_risk, true),
        ("wti_future.json", "sweep", cmd_sweep, true),
        ("wti_future.json", "yield-sweep", cmd_yield_sweep, false),
        ("wti_swap.json", "risk", cmd_risk, false),
        ("calibrated.json", "calibrate", cmd_calibrate_config, false),
    ];
    let mut mismatches = Vec::new();
    for (file, command, f, mc) in cases {
        let runs: Vec<Report> = [Some(1), Some(4), None, Some(1)]
            .into_iter()
            .map(|threads| {
                let ov = Overrides {
                    seed: Some(11),
                    paths: Some(if command == "simulate" { 40 } else { 5_000 }),
                    mc,
                    out: None,
                    threads,
                };
                f(&Run::load(&configs().join(file), command, &ov).unwrap()).unwrap()
            })
            .collect();
        if runs.windows(2).any(|w| w[0].files != w[1].files) {
            mismatches.push(format!("{command} on {file}"));
        }
    }
    Outcome {
        name: "byte-identical outputs across re-runs and thread counts",
        pass: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            "6 command/config pairs x (1, 4, all, 1) threads".into()
        } else {
            format!("differences in {}", mismatches.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut outcomes = vec![oracle_equivalence(), scalar_reduction(), future_scaling_identity()];
    outcomes.extend(markov_layer());
    outcomes.push(calibration_round_trip());
    outcomes.extend(risk_properties());
    outcomes.push(sweep_structure());
    outcomes.push(yield_convergence());
    outcomes.push(determinism());

    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += !o.pass as usize;
    }
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
