//! Commodity claims: regime-scaled spot, futures with a convenience yield, and
//! cash-settled commodity swaps.
//!
//! The cost of carry is fixed at zero. The regime-modulated yield of a swap is
//! `Y^Z_t = Y_t * delta[Z_t]`, built pointwise from a scalar yield path and a
//! chain path.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ou::{check_grid, OUParams};

fn check_delta(delta: &[f64]) -> Result<()> {
    if delta.is_empty() {
        return Err(Error::Dimension("delta must have at least one entry".into()));
    }
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter("delta entries must be finite".into()));
    }
    Ok(())
}

fn loading(delta: &[f64], z: usize) -> Result<f64> {
    delta
        .get(z)
        .copied()
        .ok_or(Error::StateOutOfRange { state: z, n: delta.len() })
}

fn check_carry(cost_of_carry: f64) -> Result<()> {
    if cost_of_carry != 0.0 {
        return Err(Error::NotSupported(format!(
            "cost of carry must be 0, got {cost_of_carry}"
        )));
    }
    Ok(())
}

/// `S = X * delta[Z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSpotClaim {
    pub delta: Vec<f64>,
}

impl LinearSpotClaim {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        check_delta(&delta)?;
        Ok(LinearSpotClaim { delta })
    }
}

/// `F_t = exp((r + y)(t - T)) * X_t * delta[Z_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutureClaim {
    pub delta: Vec<f64>,
    /// Continuously compounded risk-free rate, 1/year.
    pub r: f64,
    /// Convenience-yield level, 1/year.
    pub y: f64,
    /// Maturity in years.
    pub maturity: f64,
}

impl FutureClaim {
    pub fn new(delta: Vec<f64>, r: f64, y: f64, maturity: f64) -> Result<Self> {
        Self::with_carry(delta, r, y, maturity, 0.0)
    }

    /// Only a zero cost of carry is supported.
    pub fn with_carry(delta: Vec<f64>, r: f64, y: f64, maturity: f64, cost_of_carry: f64) -> Result<Self> {
        check_carry(cost_of_carry)?;
        check_delta(&delta)?;
        if !(r.is_finite() && y.is_finite()) {
            return Err(Error::InvalidParameter("r and y must be finite".into()));
        }
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(Error::InvalidParameter(format!("maturity must be > 0, got {maturity}")));
        }
        Ok(FutureClaim { delta, r, y, maturity })
    }

    /// `r + y`, the exponent rate applied to time to maturity.
    pub fn carry_rate(&self) -> f64 {
        self.r + self.y
    }

    /// `exp(-(r + y)(T - s))`.
    pub fn discount(&self, s: f64) -> f64 {
        (-self.carry_rate() * (self.maturity - s)).exp()
    }
}

/// Drift and noise of the convenience yield, risk-neutral parametrisation
/// plus the market price of yield risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibsonSchwartzParams {
    pub kappa: f64,
    /// Risk-neutral yield level.
    pub y_bar: f64,
    pub sigma_y: f64,
    /// Correlation with the spot driver.
    pub rho: f64,
    /// Market price of yield risk.
    pub lambda_y: f64,
    pub y0: f64,
}

impl GibsonSchwartzParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.sigma_y.is_finite() && self.sigma_y >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_y must be >= 0, got {}", self.sigma_y)));
        }
        if !(self.rho.is_finite() && self.rho.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        if ![self.y_bar, self.lambda_y, self.y0].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("yield parameters must be finite".into()));
        }
        Ok(())
    }

    /// `y_hat = y_bar - lambda_y / kappa`.
    pub fn y_hat(&self) -> f64 {
        self.y_bar - self.lambda_y / self.kappa
    }

    /// Long-run level under the historical measure, `y_hat - lambda_y`.
    pub fn historical_level(&self) -> f64 {
        self.y_hat() - self.lambda_y
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma_y * self.sigma_y / (2.0 * self.kappa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YieldSpec {
    /// `Y^Z_t = (r + y) * delta[Z_t]`, as for [`FutureClaim`].
    Constant { r: f64, y: f64 },
    /// `Y^Z_t = Y_t * delta[Z_t]` with `Y` simulated under the historical measure.
    GibsonSchwartz(GibsonSchwartzParams),
}

/// Swap settled at `t_k = k * period`, `k = 1..=T`, with `T = rates.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapClaim {
    pub delta: Vec<f64>,
    /// Per-settlement continuously compounded discount rates, 1/year.
    pub rates: Vec<f64>,
    /// Length of one settlement period in years.
    pub period: f64,
    pub yield_spec: YieldSpec,
}

impl SwapClaim {
    pub fn new(delta: Vec<f64>, rates: Vec<f64>, period: f64, yield_spec: YieldSpec) -> Result<Self> {
        check_delta(&delta)?;
        if rates.is_empty() {
            return Err(Error::InvalidParameter("swap needs at least one settlement".into()));
        }
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("swap rates must be finite".into()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be > 0, got {period}")));
        }
        match &yield_spec {
            YieldSpec::Constant { r, y } if !(r.is_finite() && y.is_finite()) => {
                return Err(Error::InvalidParameter("constant yield must be finite".into()))
            }
            YieldSpec::GibsonSchwartz(p) => p.validate()?,
            _ => {}
        }
        Ok(SwapClaim { delta, rates, period, yield_spec })
    }

    pub fn settlements(&self) -> usize {
        self.rates.len()
    }

    pub fn maturity(&self) -> f64 {
        self.settlements() as f64 * self.period
    }

    /// Settlement dates `t_1..t_T`, in years.
    pub fn settlement_times(&self) -> Vec<f64> {
        (1..=self.settlements()).map(|k| k as f64 * self.period).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Claim {
    Linear(LinearSpotClaim),
    Future(FutureClaim),
    Swap(SwapClaim),
}

impl Claim {
    pub fn delta(&self) -> &[f64] {
        match self {
            Claim::Linear(c) => &c.delta,
            Claim::Future(c) => &c.delta,
            Claim::Swap(c) => &c.delta,
        }
    }
}

pub fn linear_payoff(c: &LinearSpotClaim, x: f64, z: usize) -> Result<f64> {
    Ok(x * loading(&c.delta, z)?)
}

/// Value at time `t <= T` of the future given spot `x` and regime `z`.
pub fn future_payoff(c: &FutureClaim, x: f64, z: usize, t: f64) -> Result<f64> {
    if t > c.maturity {
        return Err(Error::TimeOrder { start: t, end: c.maturity });
    }
    let d = loading(&c.delta, z)?;
    Ok((c.carry_rate() * (t - c.maturity)).exp() * x * d)
}

/// Discounted cash settlements `w_k = exp(-r_k t_k) X_k (exp(Y^Z_k (t_k - t_T)) - 1)`.
/// `yields` is required for a Gibson-Schwartz swap and ignored otherwise.
pub fn swap_settlements(spots: &[f64], states: &[usize], yields: Option<&[f64]>, c: &SwapClaim) -> Result<Vec<f64>> {
    let n = c.settlements();
    if spots.len() != n || states.len() != n {
        return Err(Error::LengthMismatch(format!(
            "swap has {n} settlements but got {} spots and {} states",
            spots.len(),
            states.len()
        )));
    }
    let yields = match (&c.yield_spec, yields) {
        (YieldSpec::GibsonSchwartz(_), Some(y)) if y.len() == n => Some(y),
        (YieldSpec::GibsonSchwartz(_), Some(y)) => {
            return Err(Error::LengthMismatch(format!(
                "swap has {n} settlements but got {} yields",
                y.len()
            )))
        }
        (YieldSpec::GibsonSchwartz(_), None) => {
            return Err(Error::LengthMismatch("Gibson-Schwartz swap needs a yield path".into()))
        }
        (YieldSpec::Constant { .. }, _) => None,
    };
    let t_end = c.maturity();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = (k + 1) as f64 * c.period;
        let d = loading(&c.delta, states[k])?;
        let y = match (&c.yield_spec, yields) {
            (YieldSpec::Constant { r, y }, _) => r + y,
            (_, Some(ys)) => ys[k],
            _ => unreachable!(),
        };
        let regime_yield = y * d;
        let factor = (regime_yield * (t - t_end)).exp_m1();
        out.push((-c.rates[k] * t).exp() * spots[k] * factor);
    }
    Ok(out)
}

pub fn swap_value(spots: &[f64], states: &[usize], yields: Option<&[f64]>, c: &SwapClaim) -> Result<f64> {
    Ok(swap_settlements(spots, states, yields, c)?.iter().sum())
}

/// Yield path under the historical measure on `grid` (starting at 0), by
/// exact OU transitions toward `y_hat - lambda_y`.
pub fn simulate_yield_path<R: Rng + ?Sized>(p: &GibsonSchwartzParams, grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    p.validate()?;
    check_grid(grid)?;
    let level = p.historical_level();
    let mut y = p.y0;
    let mut out = Vec::with_capacity(grid.len());
    out.push(y);
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let decay = (-p.kappa * h).exp();
        let var = p.stationary_variance() * -(-2.0 * p.kappa * h).exp_m1();
        let z: f64 = StandardNormal.sample(rng);
        y = y * decay + level * (1.0 - decay) + var.sqrt() * z;
        out.push(y);
    }
    Ok(out)
}

/// Joint exact transition of spot and yield on a shared grid with drivers
/// correlated by `rho`. Returns `(spots, yields)` starting at `(x0, y0)`.
pub fn simulate_spot_and_yield<R: Rng + ?Sized>(
    ou: &OUParams,
    gs: &GibsonSchwartzParams,
    grid: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    ou.validate()?;
    gs.validate()?;
    check_grid(grid)?;
    let level = gs.historical_level();
    let (mut x, mut y) = (ou.x0, gs.y0);
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    xs.push(x);
    ys.push(y);
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let (dx, dy) = ((-ou.alpha * h).exp(), (-gs.kappa * h).exp());
        let var_x = ou.stationary_variance() * -(-2.0 * ou.alpha * h).exp_m1();
        let var_y = gs.stationary_variance() * -(-2.0 * gs.kappa * h).exp_m1();
        let k = ou.alpha + gs.kappa;
        let cov = gs.rho * ou.sigma * gs.sigma_y * -(-k * h).exp_m1() / k;
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let sx = var_x.sqrt();
        let (load, resid) = if sx > 0.0 {
            let load = cov / sx;
            (load, (var_y - load * load).max(0.0).sqrt())
        } else {
            (0.0, var_y.sqrt())
        };
        x = x * dx + ou.mu * (1.0 - dx) + sx * z1;
        y = y * dy + level * (1.0 - dy) + load * z1 + resid * z2;
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}
