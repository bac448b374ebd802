//! The comparison problem `Y′ = C*(Y³ + Y) + C* R₃(t)` and its blow-up time.

use crate::diagnostics::interpolate;
use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Nonnegative forcing term of the majorant equation.
#[derive(Clone)]
pub enum Forcing3 {
    Zero,
    Constant(f64),
    /// Piecewise linear through samples, constant beyond the ends.
    Sampled {
        t: Vec<f64>,
        v: Vec<f64>,
    },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Forcing3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Sampled { t, .. } => write!(f, "Sampled({} samples)", t.len()),
            Self::Function(_) => write!(f, "Function"),
        }
    }
}

impl Forcing3 {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Sampled { t: ts, v } => interpolate(ts, v, t),
            Self::Function(f) => f(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MajorantProblem {
    pub c_star: f64,
    pub y0: f64,
    pub r3: Forcing3,
}

impl MajorantProblem {
    pub fn new(c_star: f64, y0: f64, r3: Forcing3) -> Result<Self> {
        if !(c_star > 0.0 && c_star.is_finite()) {
            return Err(Error::Parameter(format!(
                "C* must be positive, got {c_star}"
            )));
        }
        if !(y0 >= 0.0 && y0.is_finite()) {
            return Err(Error::Parameter(format!(
                "Y0 must be nonnegative, got {y0}"
            )));
        }
        match &r3 {
            Forcing3::Constant(c) if !(*c >= 0.0) => {
                return Err(Error::Parameter(format!("R3 must be nonnegative, got {c}")))
            }
            Forcing3::Sampled { t, v } => {
                if t.len() != v.len() || t.is_empty() {
                    return Err(Error::Dimension(format!(
                        "R3 has {} times and {} values",
                        t.len(),
                        v.len()
                    )));
                }
                if v.iter().any(|x| !(*x >= 0.0)) {
                    return Err(Error::Parameter("R3 samples must be nonnegative".into()));
                }
            }
            _ => {}
        }
        Ok(Self { c_star, y0, r3 })
    }

    /// Problem calibrated on a sampled trajectory `y` with forcing `r3`:
    /// `C*` is [`fit_majorant_constant`] (floored at `1e-12`) and `Y0 = y(t₀)`.
    pub fn calibrated(t: &[f64], y: &[f64], r3: &[f64]) -> Result<Self> {
        check_axis(t, y)?;
        check_axis(t, r3)?;
        let c = fit_majorant_constant(t, y, r3).max(1e-12);
        Self::new(
            c,
            y[0],
            Forcing3::Sampled {
                t: t.to_vec(),
                v: r3.to_vec(),
            },
        )
    }

    fn rhs(&self, t: f64, y: f64) -> f64 {
        self.c_star * (y * y * y + y + self.r3.at(t))
    }

    fn rk4(&self, t: f64, y: f64, h: f64) -> f64 {
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = self.rhs(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = self.rhs(t + h, y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }
}

fn check_axis(t: &[f64], y: &[f64]) -> Result<()> {
    if t.len() != y.len() {
        return Err(Error::Dimension(format!(
            "time axis has {} samples, data {}",
            t.len(),
            y.len()
        )));
    }
    if t.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(())
}

/// Smallest `C*` with `(y_{k+1} − y_k)/Δt ≤ C*(y_k³ + y_k + r_k)` on every
/// step; 0 for non-increasing data.
pub fn fit_majorant_constant(t: &[f64], y: &[f64], r3: &[f64]) -> f64 {
    let mut c = 0.0_f64;
    for k in 0..t.len().saturating_sub(1) {
        let rate = (y[k + 1] - y[k]) / (t[k + 1] - t[k]);
        if rate <= 0.0 {
            continue;
        }
        let base = y[k].powi(3) + y[k] + r3[k];
        c = c.max(if base > 0.0 {
            rate / base
        } else {
            f64::INFINITY
        });
    }
    c
}

#[derive(Debug, Clone)]
pub struct MajorantSolution {
    /// `(t, Y)` at every accepted step, up to the first cap crossing or the horizon.
    pub trajectory: Vec<(f64, f64)>,
    /// Crossing times of `y_cap` and `2 y_cap`.
    pub crossings: Option<(f64, f64)>,
    /// Extrapolated blow-up time; `None` if `Y` stayed below the caps.
    pub t_max: Option<f64>,
}

/// Largest relative change of `Y` over one step.
const MAX_REL_CHANGE: f64 = 1e-2;

/// Integrates from `Y(0) = Y0` with classical Runge–Kutta steps of at most
/// `dt`, shortened so that `Y` changes by at most one percent per step, until
/// `t = horizon` or `Y` reaches `2 y_cap`. The crossing times `T₁`, `T₂` of
/// `y_cap` and `2 y_cap` are located by bisection on the final step and
/// combined as `T₂ + (T₂ − T₁)/3`, which removes the leading `Y⁻²` term of
/// the distance to blow-up.
pub fn solve_majorant(
    p: &MajorantProblem,
    dt: f64,
    y_cap: f64,
    horizon: f64,
) -> Result<MajorantSolution> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    if !(y_cap >= 10.0 * p.y0.max(1.0)) {
        return Err(Error::Parameter(format!(
            "y_cap must be at least 10 max(1, Y0) = {}, got {y_cap}",
            10.0 * p.y0.max(1.0)
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let mut traj = vec![(0.0, p.y0)];
    let (mut t, mut y) = (0.0, p.y0);
    let mut caps = [y_cap, 2.0 * y_cap].into_iter().peekable();
    let mut hits = Vec::with_capacity(2);
    while t < horizon {
        let Some(&cap) = caps.peek() else { break };
        let slope = p.rhs(t, y);
        let mut h = dt.min(horizon - t);
        if slope > 0.0 && y > 0.0 {
            h = h.min(MAX_REL_CHANGE * y / slope);
        }
        let next = p.rk4(t, y, h);
        if next >= cap {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p.rk4(t, y, mid) >= cap {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * (t + h).max(1e-300) {
                    break;
                }
            }
            hits.push(t + 0.5 * (lo + hi));
            caps.next();
            if hits.len() == 1 {
                traj.push((t + hi, p.rk4(t, y, hi)));
            }
            continue;
        }
        t += h;
        y = next;
        if hits.is_empty() {
            traj.push((t, y));
        }
    }
    let (crossings, t_max) = match hits.as_slice() {
        [t1, t2] => (Some((*t1, *t2)), Some(t2 + (t2 - t1) / 3.0)),
        _ => (None, None),
    };
    Ok(MajorantSolution {
        trajectory: traj,
        crossings,
        t_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict {
    pub pass: bool,
    /// First sample time where the data exceed the majorant.
    pub witness: Option<f64>,
    /// Largest `A_P / Y` over the samples.
    pub max_ratio: f64,
    pub c_star: f64,
}

/// Relative slack of [`comparison_check`].
pub const COMPARISON_SLACK: f64 = 1e-9;

/// Checks `A_P(t_k) ≤ Y_k`, where `Y` solves the majorant equation by forward
/// Euler on the same time axis. Forward Euler keeps the comparison exact on
/// data that satisfy the discrete differential inequality with `C*`.
pub fn comparison_check(t: &[f64], a_p: &[f64], p: &MajorantProblem) -> Result<ComparisonVerdict> {
    check_axis(t, a_p)?;
    if let Forcing3::Sampled { t: ts, .. } = &p.r3 {
        if ts.len() != t.len() || ts.iter().zip(t).any(|(a, b)| a != b) {
            return Err(Error::Dimension(
                "R3 samples and A_P samples must share the time axis".into(),
            ));
        }
    }
    if a_p.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Parameter("A_P samples must be nonnegative".into()));
    }
    let mut y = p.y0;
    let mut witness = None;
    let mut max_ratio = 0.0_f64;
    for k in 0..t.len() {
        if k > 0 {
            y += (t[k] - t[k - 1]) * p.rhs(t[k - 1], y);
        }
        if a_p[k] > 0.0 {
            max_ratio = max_ratio.max(if y > 0.0 { a_p[k] / y } else { f64::INFINITY });
        }
        if witness.is_none() && a_p[k] > y * (1.0 + COMPARISON_SLACK) {
            witness = Some(t[k]);
        }
        if !y.is_finite() {
            break;
        }
    }
    Ok(ComparisonVerdict {
        pass: witness.is_none(),
        witness,
        max_ratio,
        c_star: p.c_star,
    })
}
