//! Regime-switching entropic risk.
//!
//! The entropic risk of a payoff `psi` with parameter `gamma > 0` is
//! `e(psi) = -gamma ln E[exp(-psi / gamma)]`, the certainty equivalent under
//! exponential utility. It is cash additive and nondecreasing in `gamma`;
//! `gamma -> inf` recovers the expectation.
//!
//! For `S_T = X_T delta[Z_T]` with Gaussian `X_T | X_s` independent of the
//! chain, conditioning on `Z_T` gives
//!
//! ```text
//! e(S_T | X_s, Z_s = i) = -lambda_i,
//! lambda_i = gamma ln sum_j P(Z_T = j | Z_s = i) phi_j,
//! ln phi_j = -delta_j m / gamma + delta_j^2 v / (2 gamma^2),
//! ```
//!
//! where `m`, `v` are the conditional mean and variance of `X_T`. The sum over
//! `j` is `(exp(Q^T (T - s)) phi)_i` in the column convention. Futures use the
//! same formula with `delta` scaled by `exp(-(r + y)(T - s))`.
//!
//! Everything is evaluated in log space so extreme `delta / gamma` ratios do
//! not overflow.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{matrix_exp, sample_path, Generator};
use crate::error::{Error, Result};
use crate::instruments::{simulate_spot_and_yield, swap_value, Claim, FutureClaim, SwapClaim, YieldSpec};
use crate::ou::{conditional_law, sample_exact, simulate_path, ConditionalLaw, OUParams};
use crate::stream::{domain, path_rng, Parallelism};

/// Entropic parameter, observation time `s`, horizon `T` and spot `x_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskQuery {
    pub gamma: f64,
    pub s: f64,
    pub horizon: f64,
    pub x_s: f64,
}

impl RiskQuery {
    pub fn new(gamma: f64, s: f64, horizon: f64, x_s: f64) -> Result<Self> {
        let q = RiskQuery { gamma, s, horizon, x_s };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.s.is_finite() && self.horizon.is_finite() && 0.0 <= self.s && self.s < self.horizon) {
            return Err(Error::TimeOrder { start: self.s, end: self.horizon });
        }
        if !self.x_s.is_finite() {
            return Err(Error::InvalidParameter(format!("x_s must be finite, got {}", self.x_s)));
        }
        Ok(())
    }

    pub fn time_to_horizon(&self) -> f64 {
        self.horizon - self.s
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveGamma(gamma))
    }
}

/// Per-state `lambda_i(s)`; the risk when the chain sits in state `i` at `s`
/// is `-lambda[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskVector {
    pub lambda: Vec<f64>,
    pub query: RiskQuery,
}

impl RiskVector {
    pub fn risk_given_state(&self, i: usize) -> f64 {
        -self.lambda[i]
    }

    pub fn risks(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| -l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: Option<u64>,
}

impl MCEstimate {
    /// Discrepancy against a reference value in standard errors. A zero
    /// standard error gives 0 on an exact match (to 1e-9 relative) and
    /// infinity otherwise.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff <= 1e-9 * (1.0 + reference.abs()) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Number of paths, seed and parallelism of a Monte-Carlo run. Results depend
/// only on `(seed, n_paths)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McConfig {
            n_paths,
            seed,
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 paths, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }
}

/// Sample entropic risk `-gamma ln mean(exp(-psi / gamma))`.
///
/// The exponent is shifted by the smallest payoff so every term lies in
/// `(0, 1]`; the standard error follows from the sample variance of those
/// terms by the delta method.
pub fn entropic_mc(samples: &[f64], gamma: f64) -> Result<MCEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_gamma(gamma)?;
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite sample {bad}")));
    }
    let floor = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let n = samples.len() as f64;
    let weights: Vec<f64> = samples.iter().map(|&p| (-(p - floor) / gamma).exp()).collect();
    let mean = weights.iter().sum::<f64>() / n;
    let std_error = if samples.len() > 1 {
        let var = weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
        gamma * var.sqrt() / (mean * n.sqrt())
    } else {
        0.0
    };
    Ok(MCEstimate {
        value: floor - gamma * mean.ln(),
        std_error,
        n_paths: samples.len(),
        seed: None,
    })
}

fn check_delta_len(delta: &[f64], g: &Generator) -> Result<()> {
    if delta.len() != g.n() {
        return Err(Error::Dimension(format!(
            "delta has {} entries but the chain has {} states",
            delta.len(),
            g.n()
        )));
    }
    Ok(())
}

fn log_phi(loading: f64, law: &ConditionalLaw, gamma: f64) -> f64 {
    -loading * law.mean / gamma + loading * loading * law.variance / (2.0 * gamma * gamma)
}

/// `lambda_i = gamma * logsumexp_j (ln P[(j, i)] + ln phi_j)`, summing only
/// over reachable `j`.
fn lambda_from_log_phi(transition: &DMatrix<f64>, log_phi: &[f64], gamma: f64) -> Vec<f64> {
    let n = log_phi.len();
    (0..n)
        .map(|i| {
            let terms: Vec<(f64, f64)> = (0..n)
                .filter(|&j| transition[(j, i)] > 0.0)
                .map(|j| (transition[(j, i)], log_phi[j]))
                .collect();
            let shift = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = terms.iter().map(|(p, l)| p * (l - shift).exp()).sum();
            gamma * (shift + sum.ln())
        })
        .collect()
}

fn closed_form(ou: &OUParams, g: &Generator, loadings: &[f64], q: &RiskQuery) -> Result<RiskVector> {
    q.validate()?;
    ou.validate()?;
    check_delta_len(loadings, g)?;
    let law = conditional_law(ou, q.x_s, q.s, q.horizon)?;
    let transition = matrix_exp(g, q.time_to_horizon())?;
    let log_phi: Vec<f64> = loadings.iter().map(|&d| log_phi(d, &law, q.gamma)).collect();
    Ok(RiskVector {
        lambda: lambda_from_log_phi(&transition, &log_phi, q.gamma),
        query: *q,
    })
}

/// Closed-form risk of the linear claim `X_T delta[Z_T]`, per starting state.
pub fn spot_risk_closed(ou: &OUParams, g: &Generator, delta: &[f64], q: &RiskQuery) -> Result<RiskVector> {
    closed_form(ou, g, delta, q)
}

fn check_maturity(c: &FutureClaim, q: &RiskQuery) -> Result<()> {
    if (c.maturity - q.horizon).abs() > 1e-12 * c.maturity.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "future matures at {} but the query horizon is {}",
            c.maturity, q.horizon
        )));
    }
    Ok(())
}

/// Closed-form risk of a future maturing at the query horizon. The loadings
/// are discounted by `exp(-(r + y)(T - s))` in both the mean and the variance
/// term.
pub fn future_risk_closed(ou: &OUParams, g: &Generator, c: &FutureClaim, q: &RiskQuery) -> Result<RiskVector> {
    q.validate()?;
    ou.validate()?;
    check_delta_len(&c.delta, g)?;
    check_maturity(c, q)?;
    let law = conditional_law(ou, q.x_s, q.s, q.horizon)?;
    let transition = matrix_exp(g, q.time_to_horizon())?;
    let discount = c.discount(q.s);
    let log_phi: Vec<f64> = c
        .delta
        .iter()
        .map(|&d| {
            -d * discount * law.mean / q.gamma
                + d * d * law.variance * discount * discount / (2.0 * q.gamma * q.gamma)
        })
        .collect();
    Ok(RiskVector {
        lambda: lambda_from_log_phi(&transition, &log_phi, q.gamma),
        query: *q,
    })
}

/// `E[X_T delta[Z_T] | X_s, Z_s = i]` for each `i`; the `gamma -> inf` limit
/// and an upper bound of the entropic risk.
pub fn spot_expectation(ou: &OUParams, g: &Generator, delta: &[f64], q: &RiskQuery) -> Result<Vec<f64>> {
    q.validate()?;
    check_delta_len(delta, g)?;
    let law = conditional_law(ou, q.x_s, q.s, q.horizon)?;
    let transition = matrix_exp(g, q.time_to_horizon())?;
    let n = g.n();
    Ok((0..n)
        .map(|i| (0..n).map(|j| transition[(j, i)] * delta[j] * law.mean).sum())
        .collect())
}

/// Monte-Carlo risk of `claim` for every starting state: `X_T` by exact OU
/// transition from `x_s`, `Z_T` by exact chain simulation from each state.
///
/// A future is valued as its terminal spot discounted by
/// `exp(-(r + y)(T - s))`, matching [`future_risk_closed`]. A swap needs
/// `s = 0` and a horizon equal to its maturity; it is simulated by
/// [`swap_risk_mc`] starting from `x_s`.
pub fn claim_risk_mc(
    ou: &OUParams,
    g: &Generator,
    claim: &Claim,
    q: &RiskQuery,
    mc: &McConfig,
) -> Result<Vec<MCEstimate>> {
    q.validate()?;
    ou.validate()?;
    mc.validate()?;
    check_delta_len(claim.delta(), g)?;
    let n = g.n();
    let scale = match claim {
        Claim::Linear(_) => 1.0,
        Claim::Future(c) => {
            check_maturity(c, q)?;
            c.discount(q.s)
        }
        Claim::Swap(c) => {
            if q.s != 0.0 || (c.maturity() - q.horizon).abs() > 1e-12 * q.horizon.max(1.0) {
                return Err(Error::NotSupported(
                    "swap risk is measured from s = 0 to the swap maturity".into(),
                ));
            }
            let from_spot = OUParams { x0: q.x_s, ..*ou };
            return (0..n)
                .map(|i| swap_risk_mc(&from_spot, g, c, q.gamma, i, mc))
                .collect();
        }
    };
    let delta = claim.delta();
    let h = q.time_to_horizon();
    (0..n)
        .map(|start| {
            let stream = domain::CLAIM.wrapping_add(start as u64);
            let payoffs: Vec<Result<f64>> = mc.parallelism.map(mc.n_paths, |k| {
                let mut rng = path_rng(mc.seed, stream, k as u64);
                let x_t = sample_exact(ou, q.x_s, q.s, q.horizon, &mut rng)?;
                let z_t = sample_path(g, start, h, &mut rng)?.final_state();
                Ok(scale * x_t * delta[z_t])
            });
            let payoffs = payoffs.into_iter().collect::<Result<Vec<f64>>>()?;
            let mut est = entropic_mc(&payoffs, q.gamma)?;
            est.seed = Some(mc.seed);
            Ok(est)
        })
        .collect()
}

/// Monte-Carlo risk of the swap value `W_T` from `(x0, start_state)` at time 0.
pub fn swap_risk_mc(
    ou: &OUParams,
    g: &Generator,
    c: &SwapClaim,
    gamma: f64,
    start_state: usize,
    mc: &McConfig,
) -> Result<MCEstimate> {
    check_gamma(gamma)?;
    ou.validate()?;
    mc.validate()?;
    g.check_state(start_state)?;
    check_delta_len(&c.delta, g)?;
    let times = c.settlement_times();
    let mut grid = Vec::with_capacity(times.len() + 1);
    grid.push(0.0);
    grid.extend_from_slice(&times);
    let horizon = c.maturity();
    let stream = domain::SWAP.wrapping_add(start_state as u64);

    let values: Vec<Result<f64>> = mc.parallelism.map(mc.n_paths, |k| {
        let mut rng = path_rng(mc.seed, stream, k as u64);
        let (spots, yields) = match &c.yield_spec {
            YieldSpec::GibsonSchwartz(gs) => {
                let (x, y) = simulate_spot_and_yield(ou, gs, &grid, &mut rng)?;
                (x, Some(y))
            }
            YieldSpec::Constant { .. } => (simulate_path(ou, &grid, &mut rng)?, None),
        };
        let chain = sample_path(g, start_state, horizon, &mut rng)?;
        let states: Vec<usize> = times.iter().map(|&t| chain.state_at(t)).collect();
        swap_value(&spots[1..], &states, yields.as_ref().map(|y| &y[1..]), c)
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut est = entropic_mc(&values, gamma)?;
    est.seed = Some(mc.seed);
    Ok(est)
}
