use crate::error::{Error, Result};

/// Power-law fit `value ≈ C (1 + t)^(−exponent)` over the tail of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub r2: f64,
    /// The later half of the tail decays markedly faster than the earlier
    /// half, as for exponential decay.
    pub super_polynomial: bool,
    pub samples: usize,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

fn log_slope(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    let x: Vec<f64> = samples.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let y: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let spread = x.last().unwrap() - x.first().unwrap();
    if spread.abs() <= 0.0 {
        return Err(Error::Fit("tail spans no time".into()));
    }
    Ok(least_squares(&x, &y))
}

/// Fits the decay exponent over the last `tail_fraction` of the samples.
///
/// Values on the tail must be positive: a zero or negative value usually
/// means the series has decayed below round-off, and the window should be
/// shortened.
pub fn fit_decay_exponent(samples: &[(f64, f64)], tail_fraction: f64) -> Result<DecayFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let n = samples.len();
    let take = ((n as f64 * tail_fraction).ceil() as usize).min(n);
    if take < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: take,
        });
    }
    let tail = &samples[n - take..];
    if let Some((t, v)) = tail
        .iter()
        .find(|(t, v)| !(*v > 0.0 && v.is_finite() && t.is_finite()))
    {
        return Err(Error::Fit(format!(
            "non-positive value {v} at t = {t}; shorten the window"
        )));
    }
    let (slope, r2) = log_slope(tail)?;
    let half = take / 2;
    let super_polynomial = if half >= 2 {
        let (early, _) = log_slope(&tail[..half])?;
        let (late, _) = log_slope(&tail[half..])?;
        -late > -early + (0.1 * early.abs()).max(0.05)
    } else {
        false
    };
    Ok(DecayFit {
        exponent: -slope,
        r2,
        super_polynomial,
        samples: take,
    })
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for k in 0..t.len() {
        if k > 0 {
            acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Linear interpolation on an increasing abscissa, clamped at both ends.
pub fn interpolate(t: &[f64], y: &[f64], x: f64) -> f64 {
    if x <= t[0] {
        return y[0];
    }
    let last = t.len() - 1;
    if x >= t[last] {
        return y[last];
    }
    let k = t.partition_point(|v| *v <= x);
    let (t0, t1) = (t[k - 1], t[k]);
    let w = (x - t0) / (t1 - t0);
    y[k - 1] * (1.0 - w) + y[k] * w
}

/// The exponents of the rate theorem: `γ` from the data decay, the rate
/// parameter `θ′` and the predicted decay exponent `θ′ / (1 − 2θ′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub gamma: f64,
    pub theta_prime: f64,
    pub predicted_exponent: f64,
    pub fitted_exponent: Option<f64>,
    pub fit_r2: Option<f64>,
    /// Autonomous data: decay is expected to be exponential.
    pub exponential_regime: bool,
}

impl RateModel {
    /// Largest admissible rate parameter with a 10% margin:
    /// `min(0.9 γ / (2(1+γ)), (γ−1)/(2γ))`, the second term only when `γ > 1`.
    pub fn default_theta_prime(gamma: f64) -> f64 {
        let mut th = 0.9 * gamma / (2.0 * (1.0 + gamma));
        if gamma > 1.0 {
            th = th.min((gamma - 1.0) / (2.0 * gamma));
        }
        th
    }

    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_theta(gamma, Self::default_theta_prime(gamma))
    }

    pub fn with_theta(gamma: f64, theta_prime: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Parameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let sup = gamma / (2.0 * (1.0 + gamma));
        if !(theta_prime > 0.0 && theta_prime < sup) {
            return Err(Error::Parameter(format!(
                "theta' must lie in (0, {sup}), got {theta_prime}"
            )));
        }
        Ok(Self {
            gamma,
            theta_prime,
            predicted_exponent: theta_prime / (1.0 - 2.0 * theta_prime),
            fitted_exponent: None,
            fit_r2: None,
            exponential_regime: false,
        })
    }

    /// Model for constant boundary data and no force: the limit `γ → ∞`.
    pub fn autonomous() -> Self {
        let theta_prime = 0.45;
        Self {
            gamma: f64::INFINITY,
            theta_prime,
            predicted_exponent: theta_prime / (1.0 - 2.0 * theta_prime),
            fitted_exponent: None,
            fit_r2: None,
            exponential_regime: true,
        }
    }

    /// `θ′/(1−2θ′)` at the supremum of admissible `θ′`, which equals `γ/2`.
    pub fn supremum_exponent(&self) -> f64 {
        self.gamma / 2.0
    }

    pub fn record_fit(&mut self, fit: &DecayFit) {
        self.fitted_exponent = Some(fit.exponent);
        self.fit_r2 = Some(fit.r2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(n: usize, t_end: f64, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let t = t_end * k as f64 / (n - 1) as f64;
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let s = series(100, 50.0, |t| 5.0 * (1.0 + t).powf(-3.0));
        let fit = fit_decay_exponent(&s, 0.5).unwrap();
        assert!((fit.exponent - 3.0).abs() < 1e-3);
        assert!(fit.r2 >= 0.9999);
        assert!(!fit.super_polynomial);
    }

    #[test]
    fn exponential_is_flagged_super_polynomial() {
        let s = series(200, 30.0, |t| (-t).exp());
        let whole = fit_decay_exponent(&s, 1.0).unwrap();
        let late = fit_decay_exponent(&s, 0.3).unwrap();
        assert!(whole.super_polynomial && late.super_polynomial);
        assert!(late.exponent > whole.exponent);
    }

    #[test]
    fn floor_flattens_the_tail() {
        let f = |t: f64| (1.0 + t).powf(-2.0) + 1e-12;
        let early = fit_decay_exponent(&series(200, 100.0, f), 1.0).unwrap();
        assert!((early.exponent - 2.0).abs() < 1e-3);
        let late = fit_decay_exponent(&series(200, 1e7, f), 0.2).unwrap();
        assert!(late.exponent < 0.5, "{}", late.exponent);
    }

    #[test]
    fn bad_inputs() {
        let s = series(20, 1.0, |_| 0.0);
        assert!(matches!(fit_decay_exponent(&s, 0.5), Err(Error::Fit(_))));
        let s = series(20, 1.0, |t| 1.0 + t);
        assert!(fit_decay_exponent(&s, 0.0).is_err());
        assert!(fit_decay_exponent(&s, 1.5).is_err());
        assert!(matches!(
            fit_decay_exponent(&s[..3], 1.0),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn rate_model_gamma_two() {
        let m = RateModel::new(2.0).unwrap();
        assert!((m.theta_prime - 0.25).abs() < 1e-15);
        assert!((m.predicted_exponent - 0.5).abs() < 1e-15);
        assert!(m.predicted_exponent <= m.supremum_exponent());
        assert!(RateModel::with_theta(2.0, 1.0 / 3.0).is_err());
        assert!(RateModel::new(0.0).is_err());
    }

    #[test]
    fn rate_model_small_gamma_uses_first_branch() {
        let m = RateModel::new(0.5).unwrap();
        assert!((m.theta_prime - 0.9 * 0.5 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_helpers() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
        let c = cumulative_trapezoid(&t, &y);
        assert!((c[10] - 1.0).abs() < 1e-12);
        assert!((interpolate(&t, &c, 0.55) - 0.5 * (0.25 + 0.36)).abs() < 1e-12);
        assert_eq!(interpolate(&t, &y, -1.0), 0.0);
        assert_eq!(interpolate(&t, &y, 5.0), 2.0);
    }

    proptest! {
        #[test]
        fn planted_exponents_are_recovered(p in 0.5f64..8.0, c in 0.1f64..10.0, t_end in 10.0f64..1000.0) {
            let s = series(200, t_end, |t| c * (1.0 + t).powf(-p));
            let fit = fit_decay_exponent(&s, 0.5).unwrap();
            prop_assert!((fit.exponent - p).abs() <= 1e-2);
            prop_assert!(fit.r2 >= 0.999);
        }

        #[test]
        fn predicted_exponent_never_exceeds_half_gamma(gamma in 0.05f64..50.0) {
            let m = RateModel::new(gamma).unwrap();
            prop_assert!(m.theta_prime > 0.0);
            prop_assert!(m.predicted_exponent <= gamma / 2.0 + 1e-12);
        }
    }
}
