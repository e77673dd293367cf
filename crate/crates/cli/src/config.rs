//! Run configuration.
//!
//! A single JSON file with sections `chain`, `ou`, `claim`, `grids`, `mc` and
//! `output`. Relative paths are resolved against the directory holding the
//! config file. Everything is validated by [`Model::build`] before any
//! computation starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use regime_risk_core::ou::{calibrate, Calibration};
use regime_risk_core::{
    Claim, FutureClaim, Generator, LinearSpotClaim, OUParams, PriceSeries, SwapClaim, TransitionMatrix, YieldSpec,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainSpec,
    pub ou: OuSpec,
    pub claim: ClaimSpec,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    /// Rate matrix, columns summing to zero.
    Generator,
    /// Row-stochastic one-step transition matrix over `dt` years.
    Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub kind: ChainKind,
    /// Row-major.
    pub matrix: Vec<Vec<f64>>,
    /// Step length in years, required for `kind: transition`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OuSpec {
    Params(OUParams),
    /// A parameter file written by `regime-risk calibrate`.
    File { params_file: PathBuf },
    Calibrate { calibrate: CalibrationSource },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSource {
    pub csv: PathBuf,
    /// Observation spacing in years; one trading day when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClaimSpec {
    Linear {
        delta: Vec<f64>,
    },
    /// Maturity is the risk horizon of each evaluation.
    Future {
        delta: Vec<f64>,
        r: f64,
        y: f64,
        #[serde(default)]
        cost_of_carry: f64,
    },
    Swap {
        delta: Vec<f64>,
        rates: Vec<f64>,
        period_days: f64,
        yield_spec: YieldSpec,
    },
}

impl ClaimSpec {
    pub fn delta(&self) -> &[f64] {
        match self {
            ClaimSpec::Linear { delta } | ClaimSpec::Future { delta, .. } | ClaimSpec::Swap { delta, .. } => delta,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClaimSpec::Linear { .. } => "linear",
            ClaimSpec::Future { .. } => "future",
            ClaimSpec::Swap { .. } => "swap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub gammas: Vec<f64>,
    pub horizons_days: Vec<f64>,
    /// Convenience-yield levels for `yield-sweep`.
    pub yields: Vec<f64>,
    pub start_state: usize,
    pub days_per_year: f64,
    /// Future maturity for `yield-sweep`; the largest horizon when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yield_maturity_days: Option<f64>,
    pub yield_steps: usize,
    pub simulate_days: usize,
    pub simulate_paths: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            gammas: vec![1.0, 2.5, 5.0, 10.0],
            horizons_days: vec![50.0, 150.0],
            yields: Vec::new(),
            start_state: 0,
            days_per_year: regime_risk_core::series::TRADING_DAYS_PER_YEAR,
            yield_maturity_days: None,
            yield_steps: 50,
            simulate_days: 252,
            simulate_paths: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings { n_paths: 100_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid run configuration")
    }

    /// Reads a config file and returns it with the directory relative paths
    /// resolve against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = Self::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    /// SHA-256 of the canonical JSON form, ignoring the output section so that
    /// writing to another directory does not change the recorded hash.
    pub fn sha256(&self) -> String {
        let mut view = self.clone();
        view.output = OutputSpec::default();
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Validated model objects built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Model {
    pub config: RunConfig,
    pub generator: Generator,
    pub ou: OUParams,
    /// Present when the OU parameters were fitted from a price file.
    pub calibration: Option<Calibration>,
    /// Hash of the price or parameter file the OU parameters came from.
    pub input_sha256: Option<String>,
}

impl Model {
    pub fn build(config: RunConfig, base: &Path) -> Result<Self> {
        let generator = build_generator(&config.chain).context("chain")?;
        let (ou, calibration, input_sha256) = build_ou(&config.ou, base, config.grids.days_per_year).context("ou")?;
        check_grids(&config.grids, generator.n()).context("grids")?;
        check_claim(&config.claim, generator.n()).context("claim")?;
        ensure!(config.mc.n_paths >= 2, "mc: n_paths must be at least 2, got {}", config.mc.n_paths);
        Ok(Model { config, generator, ou, calibration, input_sha256 })
    }

    pub fn days_per_year(&self) -> f64 {
        self.config.grids.days_per_year
    }

    pub fn years(&self, days: f64) -> f64 {
        days / self.days_per_year()
    }

    /// The core claim evaluated with horizon `horizon` years; futures mature there.
    pub fn claim_at(&self, horizon: f64) -> Result<Claim> {
        claim_at(&self.config.claim, horizon, self.days_per_year())
    }
}

fn build_generator(spec: &ChainSpec) -> Result<Generator> {
    let g = match spec.kind {
        ChainKind::Generator => {
            if spec.dt.is_some() {
                bail!("dt only applies to kind `transition`");
            }
            Generator::from_rows(&spec.matrix)?
        }
        ChainKind::Transition => {
            let dt = spec.dt.context("kind `transition` needs dt (years per step)")?;
            Generator::from_transition(&TransitionMatrix::from_rows(&spec.matrix, dt)?)?
        }
    };
    Ok(g)
}

fn build_ou(spec: &OuSpec, base: &Path, days_per_year: f64) -> Result<(OUParams, Option<Calibration>, Option<String>)> {
    match spec {
        OuSpec::Params(p) => {
            p.validate()?;
            Ok((*p, None, None))
        }
        OuSpec::File { params_file } => {
            let path = resolve(base, params_file);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let p: OUParams =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            p.validate()?;
            Ok((p, None, Some(file_sha256(&path)?)))
        }
        OuSpec::Calibrate { calibrate: src } => {
            let path = resolve(base, &src.csv);
            let dt = src.dt.unwrap_or(1.0 / days_per_year);
            let series = PriceSeries::from_csv_path(&path, dt)?;
            let cal = calibrate(&series)?;
            Ok((cal.params, Some(cal), Some(file_sha256(&path)?)))
        }
    }
}

fn check_grids(g: &Grids, n_states: usize) -> Result<()> {
    ensure!(
        g.days_per_year.is_finite() && g.days_per_year > 0.0,
        "days_per_year must be positive, got {}",
        g.days_per_year
    );
    ensure!(!g.gammas.is_empty(), "gammas must be nonempty");
    ensure!(!g.horizons_days.is_empty(), "horizons_days must be nonempty");
    for &gamma in &g.gammas {
        ensure!(gamma.is_finite() && gamma > 0.0, "gamma must be positive, got {gamma}");
    }
    for &h in &g.horizons_days {
        ensure!(h.is_finite() && h > 0.0, "horizon must be positive, got {h} days");
    }
    for &y in &g.yields {
        ensure!(y.is_finite(), "yield levels must be finite");
    }
    if let Some(m) = g.yield_maturity_days {
        ensure!(m.is_finite() && m > 0.0, "yield_maturity_days must be positive, got {m}");
    }
    ensure!(g.yield_steps >= 1, "yield_steps must be at least 1");
    ensure!(g.simulate_days >= 1, "simulate_days must be at least 1");
    ensure!(g.simulate_paths >= 1, "simulate_paths must be at least 1");
    ensure!(
        g.start_state < n_states,
        "start_state {} out of range for a {}-state chain",
        g.start_state,
        n_states
    );
    Ok(())
}

fn check_claim(c: &ClaimSpec, n_states: usize) -> Result<()> {
    ensure!(
        c.delta().len() == n_states,
        "delta has {} entries but the chain has {} states",
        c.delta().len(),
        n_states
    );
    // Build once with a placeholder horizon to run the core checks.
    claim_at(c, 1.0, 252.0)?;
    Ok(())
}

fn claim_at(c: &ClaimSpec, horizon: f64, days_per_year: f64) -> Result<Claim> {
    Ok(match c {
        ClaimSpec::Linear { delta } => Claim::Linear(LinearSpotClaim::new(delta.clone())?),
        ClaimSpec::Future { delta, r, y, cost_of_carry } => {
            Claim::Future(FutureClaim::with_carry(delta.clone(), *r, *y, horizon, *cost_of_carry)?)
        }
        ClaimSpec::Swap { delta, rates, period_days, yield_spec } => Claim::Swap(SwapClaim::new(
            delta.clone(),
            rates.clone(),
            period_days / days_per_year,
            yield_spec.clone(),
        )?),
    })
}
