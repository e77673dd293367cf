//! Mean-reverting spot process `dX = alpha (mu - X) dt + sigma dB`.
//!
//! Transitions are Gaussian and sampled exactly, so there is no
//! discretisation error at any step size. Time is measured in years.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    /// Reversion rate, 1/year.
    pub alpha: f64,
    /// Long-run level.
    pub mu: f64,
    /// Volatility, price / sqrt(year).
    pub sigma: f64,
    /// Initial spot.
    pub x0: f64,
}

/// Gaussian law of `X_t` given `X_s`. `variance` is a variance, not a
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalLaw {
    pub mean: f64,
    pub variance: f64,
}

impl OUParams {
    pub fn new(alpha: f64, mu: f64, sigma: f64, x0: f64) -> Result<Self> {
        let p = OUParams { alpha, mu, sigma, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.mu.is_finite() && self.x0.is_finite()) {
            return Err(Error::InvalidParameter("mu and x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.alpha)
    }

    pub fn conditional_law(&self, x_s: f64, s: f64, t: f64) -> Result<ConditionalLaw> {
        conditional_law(self, x_s, s, t)
    }
}

pub fn conditional_law(p: &OUParams, x_s: f64, s: f64, t: f64) -> Result<ConditionalLaw> {
    if !(t >= s) || !t.is_finite() || !s.is_finite() {
        return Err(Error::TimeOrder { start: s, end: t });
    }
    let h = t - s;
    let decay = (-p.alpha * h).exp();
    let mean = x_s * decay + p.mu * (1.0 - decay);
    // 1 - e^{-2 alpha h} without cancellation for short steps.
    let variance = p.stationary_variance() * -(-2.0 * p.alpha * h).exp_m1();
    Ok(ConditionalLaw { mean, variance })
}

/// One exact draw of `X_t` given `X_s = x_s`.
pub fn sample_exact<R: Rng + ?Sized>(p: &OUParams, x_s: f64, s: f64, t: f64, rng: &mut R) -> Result<f64> {
    let law = conditional_law(p, x_s, s, t)?;
    if law.variance == 0.0 {
        return Ok(law.mean);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(law.mean + law.variance.sqrt() * z)
}

/// Path on `grid` (which must start at 0) from `x0`, by sequential exact steps.
pub fn simulate_path<R: Rng + ?Sized>(p: &OUParams, grid: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut x = p.x0;
    out.push(x);
    for w in grid.windows(2) {
        x = sample_exact(p, x, w[0], w[1], rng)?;
        out.push(x);
    }
    Ok(out)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(Error::InvalidParameter("time grid is empty".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidParameter(format!("time grid must start at 0, got {t0}")))
        }
        _ => {}
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::TimeOrder { start: w[0], end: w[1] });
        }
    }
    Ok(())
}

/// Standard errors of the calibrated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub params: OUParams,
    pub std_errors: ParamErrors,
    /// AR(1) slope `b` and intercept `c` of `X_{k+1} = c + b X_k + eps`.
    pub slope: f64,
    pub intercept: f64,
    /// Unbiased residual variance.
    pub residual_variance: f64,
    /// Dickey-Fuller statistic `(b - 1) / se(b)`.
    pub unit_root_t: f64,
    /// Whether the unit-root statistic rejects a random walk at 5%.
    pub mean_reversion_significant: bool,
    pub n_obs: usize,
    pub dt: f64,
}

pub fn calibrate(series: &PriceSeries) -> Result<Calibration> {
    calibrate_values(&series.prices, series.dt)
}

/// 5% critical value of the Dickey-Fuller test with a constant (asymptotic).
pub const DICKEY_FULLER_5PCT: f64 = -2.86;

/// Least-squares fit of the exact AR(1) discretisation, mapped back to
/// `(alpha, mu, sigma)`; standard errors from the regression covariance and
/// the delta method.
pub fn calibrate_values(values: &[f64], dt: f64) -> Result<Calibration> {
    if values.len() < PriceSeries::MIN_POINTS {
        return Err(Error::TooFewPoints {
            got: values.len(),
            need: PriceSeries::MIN_POINTS,
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let xs = &values[..values.len() - 1];
    let ys = &values[1..];
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - x_bar) * (x - x_bar);
        sxy += (x - x_bar) * (y - y_bar);
    }
    if !(sxx > 0.0) || sxx <= 1e-24 * (x_bar * x_bar * n).max(1.0) {
        return Err(Error::NotMeanReverting("series has no variation".into()));
    }
    let b = sxy / sxx;
    let c = y_bar - b * x_bar;
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::NotMeanReverting(format!(
            "fitted AR(1) slope {b} is outside (0, 1)"
        )));
    }
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c - b * x).powi(2)).sum();
    let dof = (n - 2.0).max(1.0);
    let s2 = ssr / dof;

    let alpha = -b.ln() / dt;
    let mu = c / (1.0 - b);
    let one_minus_b2 = 1.0 - b * b;
    // sigma = s * g(b) with g(b)^2 = -2 ln b / (dt (1 - b^2)).
    let g2 = -2.0 * b.ln() / (dt * one_minus_b2);
    let sigma = (s2 * g2).sqrt();

    let var_b = s2 / sxx;
    let var_c = s2 * (1.0 / n + x_bar * x_bar / sxx);
    let cov_cb = -x_bar * s2 / sxx;
    let var_s = s2 / (2.0 * dof);

    let d_alpha_db = -1.0 / (b * dt);
    let se_alpha = d_alpha_db.abs() * var_b.sqrt();

    let d_mu_dc = 1.0 / (1.0 - b);
    let d_mu_db = c / (1.0 - b).powi(2);
    let var_mu = d_mu_dc * d_mu_dc * var_c + d_mu_db * d_mu_db * var_b + 2.0 * d_mu_dc * d_mu_db * cov_cb;

    let dg2_db = -2.0 / dt * (one_minus_b2 / b + 2.0 * b * b.ln()) / (one_minus_b2 * one_minus_b2);
    let g = g2.sqrt();
    let d_sigma_db = s2.sqrt() * dg2_db / (2.0 * g);
    let var_sigma = g2 * var_s + d_sigma_db * d_sigma_db * var_b;

    let unit_root_t = (b - 1.0) / var_b.sqrt();
    let params = OUParams::new(alpha, mu, sigma, values[0])?;
    Ok(Calibration {
        params,
        std_errors: ParamErrors {
            alpha: se_alpha,
            mu: var_mu.max(0.0).sqrt(),
            sigma: var_sigma.max(0.0).sqrt(),
        },
        slope: b,
        intercept: c,
        residual_variance: s2,
        unit_root_t,
        mean_reversion_significant: unit_root_t < DICKEY_FULLER_5PCT,
        n_obs: values.len(),
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{domain, path_rng};
    use approx::assert_abs_diff_eq;

    fn wti_params() -> OUParams {
        OUParams::new(5.0, 48.22, 13.66, 62.24).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(OUParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(OUParams::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(OUParams::new(1.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn law_at_same_time_is_degenerate() {
        let law = wti_params().conditional_law(50.0, 0.3, 0.3).unwrap();
        assert_eq!(law.mean, 50.0);
        assert_eq!(law.variance, 0.0);
    }

    #[test]
    fn law_rejects_backward_time() {
        assert!(matches!(
            wti_params().conditional_law(50.0, 1.0, 0.5),
            Err(Error::TimeOrder { .. })
        ));
    }

    #[test]
    fn zero_sigma_is_deterministic_decay() {
        let p = OUParams::new(2.0, 10.0, 0.0, 20.0).unwrap();
        let law = p.conditional_law(20.0, 0.0, 0.5).unwrap();
        assert_eq!(law.variance, 0.0);
        assert_abs_diff_eq!(law.mean, 10.0 + 10.0 * (-1.0f64).exp(), epsilon = 1e-13);
        let mut rng = path_rng(0, 0, 0);
        assert_eq!(sample_exact(&p, 20.0, 0.0, 0.5, &mut rng).unwrap(), law.mean);
    }

    #[test]
    fn wti_one_year_law() {
        // Frozen with mpmath at 30 digits:
        //   62.24 e^-5 + 48.22 (1 - e^-5) = 48.314466016927178...
        //   13.66^2 / 10 (1 - e^-10)      = 18.658712857286601...
        let law = wti_params().conditional_law(62.24, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(law.mean, 48.314_466_016_927_178, epsilon = 1e-12);
        assert_abs_diff_eq!(law.variance, 18.658_712_857_286_601, epsilon = 1e-12);
    }

    #[test]
    fn variance_is_monotone_and_capped() {
        let p = wti_params();
        let mut prev = 0.0;
        for k in 1..200 {
            let v = p.conditional_law(0.0, 0.0, k as f64 * 0.025).unwrap().variance;
            assert!(v >= prev);
            assert!(v <= p.stationary_variance() + 1e-12);
            prev = v;
        }
        assert_abs_diff_eq!(prev, p.stationary_variance(), epsilon = 1e-12);
    }

    #[test]
    fn tower_property_of_means() {
        let p = OUParams::new(1.7, -3.0, 4.0, 0.0).unwrap();
        let (s, t, u) = (0.2, 0.9, 2.5);
        let x_s = 7.5;
        let mid = p.conditional_law(x_s, s, t).unwrap().mean;
        let composed = p.conditional_law(mid, t, u).unwrap().mean;
        let direct = p.conditional_law(x_s, s, u).unwrap().mean;
        assert_abs_diff_eq!(composed, direct, epsilon = 1e-10);
    }

    #[test]
    fn sample_moments_match_law() {
        let p = wti_params();
        let law = p.conditional_law(62.24, 0.0, 0.1).unwrap();
        let n = 100_000;
        let mut rng = path_rng(11, domain::SIMULATE, 0);
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_exact(&p, 62.24, 0.0, 0.1, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (law.variance / n as f64).sqrt();
        // Var of the sample variance of a Gaussian: 2 sigma^4 / (n - 1).
        let se_var = law.variance * (2.0 / (n - 1) as f64).sqrt();
        assert!((mean - law.mean).abs() < 4.0 * se_mean, "{mean} vs {}", law.mean);
        assert!((var - law.variance).abs() < 4.0 * se_var, "{var} vs {}", law.variance);
    }

    #[test]
    fn path_on_trivial_grid_is_x0() {
        let mut rng = path_rng(0, 0, 0);
        assert_eq!(simulate_path(&wti_params(), &[0.0], &mut rng).unwrap(), vec![62.24]);
    }

    #[test]
    fn path_rejects_bad_grids() {
        let mut rng = path_rng(0, 0, 0);
        assert!(simulate_path(&wti_params(), &[], &mut rng).is_err());
        assert!(simulate_path(&wti_params(), &[0.1, 0.2], &mut rng).is_err());
        assert!(matches!(
            simulate_path(&wti_params(), &[0.0, 0.2, 0.1], &mut rng),
            Err(Error::TimeOrder { .. })
        ));
    }

    #[test]
    fn zero_sigma_path_relaxes_monotonically() {
        let p = OUParams::new(5.0, 48.22, 0.0, 62.24).unwrap();
        let grid: Vec<f64> = (0..=252).map(|k| k as f64 / 252.0).collect();
        let path = simulate_path(&p, &grid, &mut path_rng(0, 0, 0)).unwrap();
        assert!(path.windows(2).all(|w| w[1] < w[0] && w[1] > 48.22));
        for (t, x) in grid.iter().zip(&path) {
            let exact = 48.22 + (62.24 - 48.22) * (-5.0 * t).exp();
            assert_abs_diff_eq!(*x, exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn long_horizon_endpoint_variance_is_stationary() {
        let p = OUParams::new(3.0, 10.0, 2.0, 10.0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let n = 20_000;
        let ends: Vec<f64> = (0..n)
            .map(|i| *simulate_path(&p, &grid, &mut path_rng(5, domain::SIMULATE, i)).unwrap().last().unwrap())
            .collect();
        let mean = ends.iter().sum::<f64>() / n as f64;
        let var = ends.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let target = p.stationary_variance();
        assert!((var - target).abs() < 4.0 * target * (2.0 / n as f64).sqrt(), "{var} vs {target}");
    }

    fn synthetic(p: &OUParams, n: usize, dt: f64, seed: u64) -> Vec<f64> {
        let grid: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        simulate_path(p, &grid, &mut path_rng(seed, domain::SIMULATE, 0)).unwrap()
    }

    #[test]
    fn calibration_recovers_known_params() {
        let p = wti_params();
        let dt = 1.0 / 252.0;
        let xs = synthetic(&p, 10_000, dt, 17);
        let cal = calibrate_values(&xs, dt).unwrap();
        let e = cal.std_errors;
        assert!((cal.params.alpha - p.alpha).abs() < 3.0 * e.alpha, "{cal:?}");
        assert!((cal.params.mu - p.mu).abs() < 3.0 * e.mu, "{cal:?}");
        assert!((cal.params.sigma - p.sigma).abs() < 3.0 * e.sigma, "{cal:?}");
        assert_eq!(cal.params.x0, xs[0]);
    }

    #[test]
    fn calibration_of_constant_series_is_flagged() {
        assert!(matches!(
            calibrate_values(&[5.0; 20], 1.0 / 252.0),
            Err(Error::NotMeanReverting(_))
        ));
    }

    #[test]
    fn calibration_of_random_walk_is_flagged() {
        // OLS slopes of a random walk sit just below one, so most fits are
        // caught by the unit-root statistic rather than by the slope bound.
        // The test has 5% size: 200 walks should give about 10 false passes.
        let (mut rejected, mut false_passes) = (0, 0);
        for seed in 0..200 {
            let mut rng = path_rng(seed, domain::SIMULATE, 0);
            let mut x = 50.0;
            let xs: Vec<f64> = (0..5000)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x += z;
                    x
                })
                .collect();
            match calibrate_values(&xs, 1.0 / 252.0) {
                Err(Error::NotMeanReverting(_)) => rejected += 1,
                Ok(cal) if cal.mean_reversion_significant => false_passes += 1,
                Ok(_) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(rejected >= 1);
        assert!(false_passes <= 20, "{false_passes} of 200 walks look mean reverting");
    }

    #[test]
    fn strongly_mean_reverting_series_is_significant() {
        let xs = synthetic(&wti_params(), 10_000, 1.0 / 252.0, 29);
        let cal = calibrate_values(&xs, 1.0 / 252.0).unwrap();
        assert!(cal.mean_reversion_significant, "{}", cal.unit_root_t);
    }

    #[test]
    fn calibration_needs_three_points() {
        assert!(matches!(
            calibrate_values(&[1.0, 2.0], 0.1),
            Err(Error::TooFewPoints { got: 2, need: 3 })
        ));
    }

    #[test]
    fn sigma_derivative_matches_finite_difference() {
        // g(b)^2 = -2 ln b / (dt (1 - b^2)); check the analytic slope used for
        // the sigma standard error.
        let dt = 1.0 / 252.0;
        let g2 = |b: f64| -2.0 * b.ln() / (dt * (1.0 - b * b));
        let b: f64 = 0.98;
        let h = 1e-6;
        let fd = (g2(b + h) - g2(b - h)) / (2.0 * h);
        let one_minus_b2 = 1.0 - b * b;
        let analytic = -2.0 / dt * (one_minus_b2 / b + 2.0 * b * b.ln()) / (one_minus_b2 * one_minus_b2);
        assert!((fd - analytic).abs() < 1e-6 * analytic.abs(), "{fd} vs {analytic}");
    }
}
