//! The five subcommands. Each returns a [`Report`]: the files to write and a
//! short human-readable summary. Nothing here touches the file system except
//! reading inputs named by the configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use regime_risk_core::chain::sample_path;
use regime_risk_core::instruments::simulate_spot_and_yield;
use regime_risk_core::ou::{calibrate, conditional_law, simulate_path, Calibration};
use regime_risk_core::risk::{claim_risk_mc, future_risk_closed, spot_expectation, spot_risk_closed};
use regime_risk_core::stream::{domain, path_rng};
use regime_risk_core::{Claim, FutureClaim, McConfig, OUParams, Parallelism, PriceSeries, RiskQuery, YieldSpec};
use serde::Serialize;

use crate::config::{file_sha256, ClaimSpec, Model, RunConfig};
use crate::output::{num, opt, to_json, Provenance, Table};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Monte-Carlo paths; for `simulate`, the number of simulated paths.
    pub paths: Option<usize>,
    pub mc: bool,
    pub out: Option<PathBuf>,
    /// Worker threads for Monte Carlo. Never affects results.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

impl Report {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

/// A loaded, overridden and validated configuration.
pub struct Run {
    pub model: Model,
    pub out_dir: PathBuf,
    pub mc: bool,
    pub parallelism: Parallelism,
}

impl Run {
    pub fn load(config_path: &Path, command: &str, ov: &Overrides) -> Result<Self> {
        let (cfg, base) = RunConfig::load(config_path)?;
        Self::new(cfg, &base, command, ov)
    }

    pub fn new(mut cfg: RunConfig, base: &Path, command: &str, ov: &Overrides) -> Result<Self> {
        if let Some(seed) = ov.seed {
            cfg.mc.seed = seed;
        }
        if let Some(paths) = ov.paths {
            if command == "simulate" {
                cfg.grids.simulate_paths = paths;
            } else {
                cfg.mc.n_paths = paths;
            }
        }
        let out_dir = match &ov.out {
            Some(dir) => dir.clone(),
            None => crate::config::resolve(base, &cfg.output.dir),
        };
        let model = Model::build(cfg, base)?;
        Ok(Run {
            model,
            out_dir,
            mc: ov.mc,
            parallelism: Parallelism(ov.threads),
        })
    }

    fn provenance(&self, command: &str, monte_carlo: bool) -> Provenance {
        let cfg = &self.model.config;
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_sha256: Some(cfg.sha256()),
            input_sha256: self.model.input_sha256.clone(),
            seed: cfg.mc.seed,
            n_paths: if command == "simulate" { cfg.grids.simulate_paths } else { cfg.mc.n_paths },
            days_per_year: cfg.grids.days_per_year,
            monte_carlo,
        }
    }

    fn mc_config(&self) -> McConfig {
        let cfg = &self.model.config.mc;
        McConfig::new(cfg.n_paths, cfg.seed).with_parallelism(self.parallelism)
    }
}

// ---------------------------------------------------------------- calibrate

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub source: String,
    #[serde(flatten)]
    pub calibration: Calibration,
}

/// Fits OU parameters to a `date,price` file with spacing `dt` years.
pub fn cmd_calibrate(csv_path: &Path, dt: f64, days_per_year: f64) -> Result<Report> {
    let series = PriceSeries::from_csv_path(csv_path, dt)?;
    let cal = calibrate(&series)?;
    let prov = Provenance {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "calibrate".into(),
        config_sha256: None,
        input_sha256: Some(file_sha256(csv_path)?),
        seed: 0,
        n_paths: 0,
        days_per_year,
        monte_carlo: false,
    };
    calibration_report(
        CalibrationReport {
            source: csv_path.display().to_string(),
            calibration: cal,
        },
        &prov,
    )
}

fn calibration_report(rep: CalibrationReport, prov: &Provenance) -> Result<Report> {
    let cal = &rep.calibration;
    let p = cal.params;
    let se = cal.std_errors;
    let mut t = Table::new(["parameter", "estimate", "std_error"]);
    t.push(vec!["alpha".into(), num(p.alpha), num(se.alpha)]);
    t.push(vec!["mu".into(), num(p.mu), num(se.mu)]);
    t.push(vec!["sigma".into(), num(p.sigma), num(se.sigma)]);
    t.push(vec!["x0".into(), num(p.x0), String::new()]);

    let mut params_json = serde_json::to_vec_pretty(&p)?;
    params_json.push(b'\n');
    let summary = format!(
        "alpha = {:.6} ± {:.6} per year\nmu    = {:.6} ± {:.6}\nsigma = {:.6} ± {:.6}\nx0    = {}\n\
         {} observations, dt = {} years; unit-root t = {:.3} ({})\n",
        p.alpha,
        se.alpha,
        p.mu,
        se.mu,
        p.sigma,
        se.sigma,
        p.x0,
        cal.n_obs,
        cal.dt,
        cal.unit_root_t,
        if cal.mean_reversion_significant {
            "mean reversion significant at 5%"
        } else {
            "WARNING: a random walk is not rejected at 5%"
        }
    );
    Ok(Report {
        files: vec![
            ("ou_params.json".into(), params_json),
            ("calibration.csv".into(), t.to_csv(prov)?),
            ("calibration.json".into(), to_json(prov, &rep)?),
        ],
        summary,
    })
}

/// `calibrate` driven by the `ou.calibrate` section of a config.
pub fn cmd_calibrate_config(run: &Run) -> Result<Report> {
    let cal = run
        .model
        .calibration
        .clone()
        .context("`calibrate --config` needs an `ou.calibrate` section; or pass --csv")?;
    let source = match &run.model.config.ou {
        crate::config::OuSpec::Calibrate { calibrate } => calibrate.csv.display().to_string(),
        _ => unreachable!("calibration only comes from a calibrate section"),
    };
    calibration_report(CalibrationReport { source, calibration: cal }, &run.provenance("calibrate", false))
}

// ---------------------------------------------------------------- risk

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskRow {
    pub gamma: f64,
    pub horizon_days: f64,
    pub horizon_years: f64,
    pub state: usize,
    pub risk_closed: Option<f64>,
    /// `delta m - delta^2 v / (2 gamma)`, single-state chains only.
    pub scalar_oracle: Option<f64>,
    pub expectation: Option<f64>,
    pub mc_value: Option<f64>,
    pub mc_std_error: Option<f64>,
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub claim: String,
    pub x0: f64,
    pub ou: OUParams,
    pub rows: Vec<RiskRow>,
}

/// Closed-form risk vector, expectation vector and effective loadings of a
/// linear or future claim at `(gamma, horizon)` from `s = 0`.
fn closed(model: &Model, gamma: f64, horizon: f64) -> Result<Option<(Vec<f64>, Vec<f64>, Vec<f64>)>> {
    let q = RiskQuery::new(gamma, 0.0, horizon, model.ou.x0)?;
    let g = &model.generator;
    match model.claim_at(horizon)? {
        Claim::Linear(c) => Ok(Some((
            spot_risk_closed(&model.ou, g, &c.delta, &q)?.risks(),
            spot_expectation(&model.ou, g, &c.delta, &q)?,
            c.delta,
        ))),
        Claim::Future(c) => {
            let loadings: Vec<f64> = c.delta.iter().map(|d| d * c.discount(0.0)).collect();
            Ok(Some((
                future_risk_closed(&model.ou, g, &c, &q)?.risks(),
                spot_expectation(&model.ou, g, &loadings, &q)?,
                loadings,
            )))
        }
        Claim::Swap(_) => Ok(None),
    }
}

fn scalar_oracle(ou: &OUParams, loading: f64, gamma: f64, horizon: f64) -> Result<f64> {
    let law = conditional_law(ou, ou.x0, 0.0, horizon)?;
    Ok(loading * law.mean - loading * loading * law.variance / (2.0 * gamma))
}

pub fn cmd_risk(run: &Run) -> Result<Report> {
    let model = &run.model;
    let cfg = &model.config;
    let n = model.generator.n();
    let is_swap = matches!(cfg.claim, ClaimSpec::Swap { .. });
    let horizons: Vec<(f64, f64)> = if is_swap {
        let Claim::Swap(c) = model.claim_at(1.0)? else { unreachable!() };
        vec![(c.maturity() * model.days_per_year(), c.maturity())]
    } else {
        cfg.grids.horizons_days.iter().map(|&d| (d, model.years(d))).collect()
    };
    let use_mc = run.mc || is_swap;
    let mut rows = Vec::new();
    for &(days, years) in &horizons {
        for &gamma in &cfg.grids.gammas {
            let closed = closed(model, gamma, years)?;
            let mc = if use_mc {
                let q = RiskQuery::new(gamma, 0.0, years, model.ou.x0)?;
                Some(claim_risk_mc(&model.ou, &model.generator, &model.claim_at(years)?, &q, &run.mc_config())?)
            } else {
                None
            };
            for state in 0..n {
                let risk_closed = closed.as_ref().map(|c| c.0[state]);
                let scalar = match &closed {
                    Some((_, _, loadings)) if n == 1 => Some(scalar_oracle(&model.ou, loadings[0], gamma, years)?),
                    _ => None,
                };
                let est = mc.as_ref().map(|m| m[state]);
                rows.push(RiskRow {
                    gamma,
                    horizon_days: days,
                    horizon_years: years,
                    state,
                    risk_closed,
                    scalar_oracle: scalar,
                    expectation: closed.as_ref().map(|c| c.1[state]),
                    mc_value: est.map(|e| e.value),
                    mc_std_error: est.map(|e| e.std_error),
                    z_score: match (est, risk_closed) {
                        (Some(e), Some(r)) => Some(e.z_score(r)),
                        _ => None,
                    },
                });
            }
        }
    }

    let prov = run.provenance("risk", use_mc);
    let mut t = Table::new([
        "gamma",
        "horizon_days",
        "horizon_years",
        "state",
        "risk_closed",
        "scalar_oracle",
        "expectation",
        "mc_value",
        "mc_std_error",
        "z_score",
    ]);
    let mut summary = format!("{} claim, x0 = {}\n", cfg.claim.kind(), model.ou.x0);
    summary.push_str("gamma  horizon_days  state  risk_closed  mc_value  z_score\n");
    for r in &rows {
        t.push(vec![
            num(r.gamma),
            num(r.horizon_days),
            num(r.horizon_years),
            r.state.to_string(),
            opt(r.risk_closed),
            opt(r.scalar_oracle),
            opt(r.expectation),
            opt(r.mc_value),
            opt(r.mc_std_error),
            opt(r.z_score),
        ]);
        summary.push_str(&format!(
            "{:<6} {:<13} {:<6} {:<12} {:<9} {}\n",
            r.gamma,
            r.horizon_days,
            r.state,
            r.risk_closed.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            r.mc_value.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            r.z_score.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()),
        ));
    }
    let report = RiskReport {
        claim: cfg.claim.kind().into(),
        x0: model.ou.x0,
        ou: model.ou,
        rows,
    };
    Ok(Report {
        files: vec![
            ("risk.csv".into(), t.to_csv(&prov)?),
            ("risk.json".into(), to_json(&prov, &report)?),
        ],
        summary,
    })
}

// ---------------------------------------------------------------- sweep

/// Change between two consecutive horizon rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variation {
    pub from_days: f64,
    pub to_days: f64,
    pub absolute: Vec<f64>,
    /// `100 * (to - from) / |from|`; `None` where `from` is zero.
    pub percent: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub value: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub flagged: bool,
}

/// Horizons as rows, risk aversion levels as columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub claim: String,
    pub state: usize,
    pub horizons_days: Vec<f64>,
    pub gammas: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
    pub variations: Vec<Variation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<Vec<Vec<McCell>>>,
}

impl SweepTable {
    pub fn from_cells(claim: String, state: usize, horizons_days: Vec<f64>, gammas: Vec<f64>, cells: Vec<Vec<f64>>) -> Self {
        let variations = horizons_days
            .windows(2)
            .zip(cells.windows(2))
            .map(|(h, c)| Variation {
                from_days: h[0],
                to_days: h[1],
                absolute: c[0].iter().zip(&c[1]).map(|(a, b)| b - a).collect(),
                percent: c[0]
                    .iter()
                    .zip(&c[1])
                    .map(|(a, b)| (*a != 0.0).then(|| 100.0 * (b - a) / a.abs()))
                    .collect(),
            })
            .collect();
        SweepTable { claim, state, horizons_days, gammas, cells, variations, mc: None }
    }

    /// Values with horizons as rows, followed by the change rows.
    pub fn wide(&self) -> Table {
        let mut t = Table::new(std::iter::once("row".to_string()).chain(self.gammas.iter().map(|g| format!("gamma={g}"))));
        for (h, row) in self.horizons_days.iter().zip(&self.cells) {
            t.push(std::iter::once(format!("T={h} days")).chain(row.iter().map(|&v| num(v))).collect());
        }
        for v in &self.variations {
            let span = format!("T={}->{} days", v.from_days, v.to_days);
            t.push(std::iter::once(format!("Variation abs ({span})")).chain(v.absolute.iter().map(|&x| num(x))).collect());
            t.push(std::iter::once(format!("Variation % ({span})")).chain(v.percent.iter().map(|&x| opt(x))).collect());
        }
        t
    }

    pub fn long(&self) -> Table {
        let mut t = Table::new(["horizon_days", "gamma", "state", "risk", "mc_value", "mc_std_error", "z_score", "flagged"]);
        for (i, h) in self.horizons_days.iter().enumerate() {
            for (j, g) in self.gammas.iter().enumerate() {
                let mc = self.mc.as_ref().map(|m| &m[i][j]);
                t.push(vec![
                    num(*h),
                    num(*g),
                    self.state.to_string(),
                    num(self.cells[i][j]),
                    opt(mc.map(|c| c.value)),
                    opt(mc.map(|c| c.std_error)),
                    opt(mc.map(|c| c.z_score)),
                    mc.map(|c| c.flagged.to_string()).unwrap_or_default(),
                ]);
            }
        }
        t
    }

    pub fn flagged(&self) -> Vec<(f64, f64, f64)> {
        let Some(mc) = &self.mc else { return Vec::new() };
        let mut out = Vec::new();
        for (i, h) in self.horizons_days.iter().enumerate() {
            for (j, g) in self.gammas.iter().enumerate() {
                if mc[i][j].flagged {
                    out.push((*h, *g, mc[i][j].z_score));
                }
            }
        }
        out
    }
}

/// Discrepancies above this many standard errors are flagged.
pub const Z_FLAG: f64 = 3.0;

pub fn cmd_sweep(run: &Run) -> Result<Report> {
    let model = &run.model;
    let cfg = &model.config;
    if matches!(cfg.claim, ClaimSpec::Swap { .. }) {
        bail!("sweep needs a linear or future claim; swaps have a fixed maturity, use `risk`");
    }
    let state = cfg.grids.start_state;
    let mut cells = Vec::new();
    let mut mc_cells = Vec::new();
    for &days in &cfg.grids.horizons_days {
        let years = model.years(days);
        let mut row = Vec::new();
        let mut mc_row = Vec::new();
        for &gamma in &cfg.grids.gammas {
            let (risks, _, _) = closed(model, gamma, years)?.expect("not a swap");
            let value = risks[state];
            if !value.is_finite() {
                bail!("risk at T={days} days, gamma={gamma} is not finite");
            }
            row.push(value);
            if run.mc {
                let q = RiskQuery::new(gamma, 0.0, years, model.ou.x0)?;
                let est = claim_risk_mc(&model.ou, &model.generator, &model.claim_at(years)?, &q, &run.mc_config())?[state];
                let z = est.z_score(value);
                mc_row.push(McCell {
                    value: est.value,
                    std_error: est.std_error,
                    z_score: z,
                    flagged: !(z <= Z_FLAG),
                });
            }
        }
        cells.push(row);
        mc_cells.push(mc_row);
    }
    let mut table = SweepTable::from_cells(
        cfg.claim.kind().into(),
        state,
        cfg.grids.horizons_days.clone(),
        cfg.grids.gammas.clone(),
        cells,
    );
    if run.mc {
        table.mc = Some(mc_cells);
    }

    let prov = run.provenance("sweep", run.mc);
    let wide = table.wide();
    let mut summary = format!("{} claim, start state {state}\n", table.claim);
    summary.push_str(&wide.header.join("  "));
    summary.push('\n');
    for r in &wide.rows {
        let cells: Vec<String> = r[1..]
            .iter()
            .map(|c| c.parse::<f64>().map(|v| format!("{v:.2}")).unwrap_or_else(|_| c.clone()))
            .collect();
        summary.push_str(&format!("{}  {}\n", r[0], cells.join("  ")));
    }
    for (h, g, z) in table.flagged() {
        summary.push_str(&format!("FLAG: T={h} days, gamma={g}: closed form and Monte Carlo differ by {z:.2} standard errors\n"));
    }
    Ok(Report {
        files: vec![
            ("sweep_table.csv".into(), wide.to_csv(&prov)?),
            ("sweep_long.csv".into(), table.long().to_csv(&prov)?),
            ("sweep.json".into(), to_json(&prov, &table)?),
        ],
        summary,
    })
}

// ---------------------------------------------------------------- yield sweep

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldCurve {
    pub y: f64,
    pub label: String,
    pub risk: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldSweep {
    pub gamma: f64,
    pub state: usize,
    pub r: f64,
    pub maturity_days: f64,
    pub t_days: Vec<f64>,
    pub t_years: Vec<f64>,
    /// `E[X_t | x0]`, the spot each evaluation starts from.
    pub spot: Vec<f64>,
    pub curves: Vec<YieldCurve>,
    /// Largest minus smallest risk across yields, per time.
    pub spread: Vec<f64>,
}

impl YieldSweep {
    pub fn initial_spread(&self) -> f64 {
        self.spread[0]
    }

    pub fn final_spread(&self) -> f64 {
        *self.spread.last().expect("nonempty grid")
    }
}

/// Risk over time of futures maturing at a fixed date, one curve per
/// convenience-yield level. Each evaluation at `t` starts from the expected
/// spot `E[X_t | x0]` and the configured state; `gamma` is the first grid value.
pub fn yield_sweep(model: &Model) -> Result<YieldSweep> {
    let cfg = &model.config;
    let (delta, r, carry) = match &cfg.claim {
        ClaimSpec::Future { delta, r, cost_of_carry, .. } => (delta.clone(), *r, *cost_of_carry),
        ClaimSpec::Linear { delta } => (delta.clone(), 0.0, 0.0),
        ClaimSpec::Swap { .. } => bail!("yield-sweep needs a future (or linear) claim"),
    };
    if cfg.grids.yields.is_empty() {
        bail!("grids.yields must be nonempty for yield-sweep");
    }
    let maturity_days = cfg
        .grids
        .yield_maturity_days
        .unwrap_or_else(|| cfg.grids.horizons_days.iter().copied().fold(f64::MIN, f64::max));
    let maturity = model.years(maturity_days);
    let steps = cfg.grids.yield_steps;
    let gamma = cfg.grids.gammas[0];
    let state = cfg.grids.start_state;
    let t_days: Vec<f64> = (0..steps).map(|k| k as f64 * maturity_days / steps as f64).collect();
    let t_years: Vec<f64> = t_days.iter().map(|&d| model.years(d)).collect();
    let spot = t_years
        .iter()
        .map(|&t| Ok(conditional_law(&model.ou, model.ou.x0, 0.0, t)?.mean))
        .collect::<Result<Vec<f64>>>()?;
    let mut curves = Vec::new();
    for &y in &cfg.grids.yields {
        let claim = FutureClaim::with_carry(delta.clone(), r, y, maturity, carry)?;
        let risk = t_years
            .iter()
            .zip(&spot)
            .map(|(&s, &x_s)| {
                let q = RiskQuery::new(gamma, s, maturity, x_s)?;
                Ok(future_risk_closed(&model.ou, &model.generator, &claim, &q)?.risk_given_state(state))
            })
            .collect::<Result<Vec<f64>>>()?;
        curves.push(YieldCurve { y, label: format!("{y}"), risk });
    }
    let spread = (0..steps)
        .map(|k| {
            let (lo, hi) = curves
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.risk[k]), hi.max(c.risk[k])));
            hi - lo
        })
        .collect();
    Ok(YieldSweep { gamma, state, r, maturity_days, t_days, t_years, spot, curves, spread })
}

pub fn cmd_yield_sweep(run: &Run) -> Result<Report> {
    let sweep = yield_sweep(&run.model)?;
    let prov = run.provenance("yield-sweep", false);
    let mut long = Table::new(["y", "t_days", "t_years", "spot", "risk"]);
    for c in &sweep.curves {
        for k in 0..sweep.t_days.len() {
            long.push(vec![
                c.label.clone(),
                num(sweep.t_days[k]),
                num(sweep.t_years[k]),
                num(sweep.spot[k]),
                num(c.risk[k]),
            ]);
        }
    }
    let mut spread = Table::new(["t_days", "t_years", "min_risk", "max_risk", "spread"]);
    for k in 0..sweep.t_days.len() {
        let vals = sweep.curves.iter().map(|c| c.risk[k]);
        let lo = vals.clone().fold(f64::INFINITY, f64::min);
        let hi = vals.fold(f64::NEG_INFINITY, f64::max);
        spread.push(vec![num(sweep.t_days[k]), num(sweep.t_years[k]), num(lo), num(hi), num(sweep.spread[k])]);
    }
    let summary = format!(
        "futures maturing in {} days, gamma = {}, start state {}, yields {:?}\n\
         cross-yield spread: {:.6} at t = 0, {:.6} at t = {} days\n",
        sweep.maturity_days,
        sweep.gamma,
        sweep.state,
        sweep.curves.iter().map(|c| c.y).collect::<Vec<_>>(),
        sweep.initial_spread(),
        sweep.final_spread(),
        sweep.t_days.last().expect("nonempty grid"),
    );
    Ok(Report {
        files: vec![
            ("yield_sweep.csv".into(), long.to_csv(&prov)?),
            ("yield_spread.csv".into(), spread.to_csv(&prov)?),
            ("yield_sweep.json".into(), to_json(&prov, &sweep)?),
        ],
        summary,
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedPath {
    pub spot: Vec<f64>,
    pub regime: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yield_path: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub days: Vec<usize>,
    pub t: Vec<f64>,
    pub paths: Vec<SimulatedPath>,
}

/// Spot, regime and (for Gibson-Schwartz swaps) yield paths on a daily grid.
/// Path `p` uses its own random stream, so results do not depend on threads.
pub fn simulate(model: &Model, parallelism: Parallelism) -> Result<Simulation> {
    let cfg = &model.config;
    let n_days = cfg.grids.simulate_days;
    let days: Vec<usize> = (0..=n_days).collect();
    let t: Vec<f64> = days.iter().map(|&d| model.years(d as f64)).collect();
    let horizon = t[n_days];
    let gs = match &cfg.claim {
        ClaimSpec::Swap { yield_spec: YieldSpec::GibsonSchwartz(gs), .. } => Some(*gs),
        _ => None,
    };
    let seed = cfg.mc.seed;
    let start = cfg.grids.start_state;
    let paths = parallelism.map(cfg.grids.simulate_paths, |p| -> Result<SimulatedPath> {
        let mut rng = path_rng(seed, domain::SIMULATE, p as u64);
        let (spot, yield_path) = match &gs {
            Some(gs) => {
                let (x, y) = simulate_spot_and_yield(&model.ou, gs, &t, &mut rng)?;
                (x, Some(y))
            }
            None => (simulate_path(&model.ou, &t, &mut rng)?, None),
        };
        let chain = sample_path(&model.generator, start, horizon, &mut rng)?;
        let regime = t.iter().map(|&s| chain.state_at(s)).collect();
        Ok(SimulatedPath { spot, regime, yield_path })
    });
    let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Simulation { days, t, paths })
}

pub fn cmd_simulate(run: &Run) -> Result<Report> {
    let sim = simulate(&run.model, run.parallelism)?;
    let prov = run.provenance("simulate", false);
    let with_yield = sim.paths.first().is_some_and(|p| p.yield_path.is_some());
    let mut header = vec!["path", "day", "t", "spot", "regime"];
    if with_yield {
        header.push("yield");
    }
    let mut t = Table::new(header);
    for (p, path) in sim.paths.iter().enumerate() {
        for k in 0..sim.days.len() {
            let mut row = vec![
                p.to_string(),
                sim.days[k].to_string(),
                num(sim.t[k]),
                num(path.spot[k]),
                path.regime[k].to_string(),
            ];
            if let Some(y) = &path.yield_path {
                row.push(num(y[k]));
            }
            t.push(row);
        }
    }
    let first = &sim.paths[0];
    let summary = format!(
        "{} path(s) over {} days; path 0 ends at spot {:.4} in state {}\n",
        sim.paths.len(),
        sim.days.len() - 1,
        first.spot.last().expect("nonempty"),
        first.regime.last().expect("nonempty"),
    );
    Ok(Report {
        files: vec![
            ("paths.csv".into(), t.to_csv(&prov)?),
            ("paths.json".into(), to_json(&prov, &sim)?),
        ],
        summary,
    })
}
