use super::fit::cumulative_trapezoid;
use crate::error::{Error, Result};

/// Outcome of [`uniform_gronwall_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallVerdict {
    pub pass: bool,
    /// `(c₃/ρ + c₂ρ + c₄) e^{c₁c₃}`.
    pub bound: f64,
    /// `∫ y` over the sampled window.
    pub c3: f64,
    /// `∫ h` over the sampled window.
    pub c4: f64,
    /// Largest `y(t) − bound` over samples with `t ≥ t₀ + ρ`.
    pub max_violation: f64,
    /// Sample times at which the bound fails.
    pub violations: Vec<f64>,
}

/// Checks the uniform Gronwall bound `y(t + ρ) ≤ (c₃/ρ + c₂ρ + c₄) e^{c₁c₃}`
/// for sampled nonnegative `y`, `h` on a shared time axis, with `c₃ = ∫y` and
/// `c₄ = ∫h` computed here by the trapezoid rule.
pub fn uniform_gronwall_check(
    t: &[f64],
    y: &[f64],
    h: &[f64],
    c1: f64,
    c2: f64,
    rho: f64,
) -> Result<GronwallVerdict> {
    if t.len() != y.len() || t.len() != h.len() {
        return Err(Error::Dimension(format!(
            "time axis has {} samples, y {}, h {}",
            t.len(),
            y.len(),
            h.len()
        )));
    }
    if t.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: t.len(),
        });
    }
    let span = t[t.len() - 1] - t[0];
    if !(rho > 0.0 && rho < span) {
        return Err(Error::Parameter(format!(
            "rho must lie in (0, {span}), got {rho}"
        )));
    }
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::Parameter("c1 and c2 must be nonnegative".into()));
    }
    if y.iter().chain(h).any(|v| !(*v >= 0.0)) {
        return Err(Error::Parameter("y and h must be nonnegative".into()));
    }
    let c3 = *cumulative_trapezoid(t, y).last().unwrap();
    let c4 = *cumulative_trapezoid(t, h).last().unwrap();
    let bound = (c3 / rho + c2 * rho + c4) * (c1 * c3).exp();
    let start = t[0] + rho;
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (tk, yk) in t.iter().zip(y) {
        if *tk < start {
            continue;
        }
        let d = yk - bound;
        max_violation = max_violation.max(d);
        if d > 0.0 {
            violations.push(*tk);
        }
    }
    Ok(GronwallVerdict {
        pass: violations.is_empty(),
        bound,
        c3,
        c4,
        max_violation,
        violations,
    })
}

/// Smallest `C` with `(y_{k+1} − y_k)/Δt ≤ C (y_k² + y_k + h_k)` on every
/// step where the left side is positive. Returns 0 for non-increasing data.
pub fn fit_growth_constant(t: &[f64], y: &[f64], h: &[f64]) -> f64 {
    let mut c = 0.0_f64;
    for k in 0..t.len().saturating_sub(1) {
        let dt = t[k + 1] - t[k];
        let rate = (y[k + 1] - y[k]) / dt;
        if rate <= 0.0 {
            continue;
        }
        let base = y[k] * y[k] + y[k] + h[k];
        c = c.max(if base > 0.0 {
            rate / base
        } else {
            f64::INFINITY
        });
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(n: usize, t_end: f64) -> Vec<f64> {
        (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn reciprocal_example() {
        let t = axis(2001, 10.0);
        let y: Vec<f64> = t.iter().map(|s| 1.0 / (1.0 + s)).collect();
        let h = vec![0.0; t.len()];
        let v = uniform_gronwall_check(&t, &y, &h, 0.0, 0.0, 1.0).unwrap();
        assert!((v.c3 - 11f64.ln()).abs() < 1e-5);
        assert!((v.bound - 11f64.ln()).abs() < 1e-5);
        assert!(v.pass);
        assert!((v.max_violation - (0.5 - v.bound)).abs() < 1e-12);
    }

    #[test]
    fn zero_data_passes() {
        let t = axis(11, 1.0);
        let z = vec![0.0; 11];
        let v = uniform_gronwall_check(&t, &z, &z, 1.0, 0.0, 0.5).unwrap();
        assert!(v.pass && v.bound == 0.0);
    }

    #[test]
    fn growing_data_fails_with_witnesses() {
        let t = axis(101, 10.0);
        let y: Vec<f64> = t.iter().map(|s| (s * 0.5).exp()).collect();
        let z = vec![0.0; t.len()];
        let v = uniform_gronwall_check(&t, &y, &z, 0.0, 0.0, 9.0).unwrap();
        assert!(!v.pass);
        assert_eq!(*v.violations.last().unwrap(), 10.0);
    }

    #[test]
    fn rejects_bad_rho_and_negative_data() {
        let t = axis(11, 1.0);
        let y = vec![1.0; 11];
        assert!(uniform_gronwall_check(&t, &y, &y, 0.0, 0.0, 0.0).is_err());
        assert!(uniform_gronwall_check(&t, &y, &y, 0.0, 0.0, 1.0).is_err());
        let mut neg = y.clone();
        neg[3] = -1.0;
        assert!(uniform_gronwall_check(&t, &neg, &y, 0.0, 0.0, 0.5).is_err());
        assert!(uniform_gronwall_check(&t, &y[..5], &y, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn growth_constant_makes_inequality_hold() {
        let t = axis(50, 1.0);
        let y: Vec<f64> = t.iter().map(|s| 0.2 + s * s).collect();
        let h: Vec<f64> = t.iter().map(|s| 0.1 * s).collect();
        let c = fit_growth_constant(&t, &y, &h);
        for k in 0..49 {
            let rate = (y[k + 1] - y[k]) / (t[k + 1] - t[k]);
            assert!(rate <= c * (y[k] * y[k] + y[k] + h[k]) * (1.0 + 1e-12));
        }
        let dec: Vec<f64> = t.iter().map(|s| 1.0 - 0.5 * s).collect();
        assert_eq!(fit_growth_constant(&t, &dec, &h), 0.0);
    }
}
