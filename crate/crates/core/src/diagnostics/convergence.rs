use super::fit::{fit_decay_exponent, DecayFit, RateModel};
use super::norms::{h1, l2, lap_sq};
use super::EnergyRecord;
use crate::error::{Error, Result};
use crate::grid::VectorField2D;
use crate::steady::Equilibrium;

/// Tolerance below which a trajectory counts as already at equilibrium.
pub const AT_EQUILIBRIUM_TOL: f64 = 1e-10;
/// Allowed shortfall of a fitted exponent below the predicted one.
pub const RATE_SLACK: f64 = 0.15;
/// Portion of the usable series used for decay fits.
pub const TAIL_FRACTION: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub t_end: f64,
    pub v_final_h1: f64,
    pub dist_l2: f64,
    pub dist_h1: f64,
    /// `‖Δ_h(d − ψ)‖ + ‖d − ψ‖` over interior nodes.
    pub dist_h2: f64,
    /// Largest pointwise gap between the boundary values of `d` and `ψ`.
    pub trace_mismatch: f64,
    pub fit_v: Option<DecayFit>,
    pub fit_dist: Option<DecayFit>,
    pub fit_a_p: Option<DecayFit>,
    pub rate: RateModel,
    pub at_equilibrium: bool,
    pub rate_pass: bool,
    pub note: String,
}

/// Samples before the series first falls below `max(1e-9·peak, 1e-12)`,
/// so that fits do not see the round-off floor.
fn usable(series: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let all: Vec<(f64, f64)> = series.filter(|(_, v)| v.is_finite()).collect();
    let peak = all.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let floor = (1e-9 * peak).max(1e-12);
    all.into_iter().take_while(|(_, v)| *v > floor).collect()
}

fn tail_fit(series: impl Iterator<Item = (f64, f64)>) -> Option<DecayFit> {
    fit_decay_exponent(&usable(series), TAIL_FRACTION).ok()
}

/// Distances of `d_final` from `ψ`, decay fits of `‖v‖_{H¹}`, `‖d − ψ‖_{L²}`
/// and `A_P` over the records, and the rate verdict: the fitted exponent of
/// `‖d − ψ‖_{L²}` must reach the predicted exponent less [`RATE_SLACK`], or
/// the decay must be faster than any power. A trajectory that starts and ends
/// within [`AT_EQUILIBRIUM_TOL`] of `ψ` passes without a fit.
pub fn convergence_report(
    records: &[EnergyRecord],
    d_final: &VectorField2D,
    equilibrium: &Equilibrium,
    rate: &RateModel,
) -> Result<ConvergenceReport> {
    convergence_report_with(records, d_final, equilibrium, rate, RATE_SLACK)
}

/// [`convergence_report`] with a caller-chosen rate slack.
pub fn convergence_report_with(
    records: &[EnergyRecord],
    d_final: &VectorField2D,
    equilibrium: &Equilibrium,
    rate: &RateModel,
    rate_slack: f64,
) -> Result<ConvergenceReport> {
    let last = records
        .last()
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let diff = d_final.sub(&equilibrium.psi)?;
    let dist_l2 = l2(&diff);
    let dist_h1 = h1(&diff);
    let dist_h2 = lap_sq(&diff).sqrt() + dist_l2;
    let trace_mismatch = diff.trace().max_norm();

    let fit_v = tail_fit(records.iter().map(|r| (r.t, r.norm_v_h1)));
    let fit_dist = tail_fit(records.iter().map(|r| (r.t, r.dist_d_l2)));
    let fit_a_p = tail_fit(records.iter().map(|r| (r.t, r.a_p)));

    let peak_dist = records
        .iter()
        .map(|r| r.dist_d_l2)
        .filter(|v| v.is_finite())
        .fold(dist_l2, f64::max);
    let at_equilibrium = peak_dist <= AT_EQUILIBRIUM_TOL && last.norm_v_h1 <= AT_EQUILIBRIUM_TOL;

    let mut rate = *rate;
    let (rate_pass, note) = if at_equilibrium {
        (
            true,
            "trajectory at equilibrium; rate check vacuous".to_string(),
        )
    } else if let Some(fit) = fit_dist {
        rate.record_fit(&fit);
        let threshold = rate.predicted_exponent - rate_slack;
        if fit.exponent >= threshold {
            (
                true,
                format!("fitted {:.4} >= {:.4}", fit.exponent, threshold),
            )
        } else if fit.super_polynomial {
            (
                true,
                format!("super-polynomial decay, fitted {:.4}", fit.exponent),
            )
        } else {
            (
                false,
                format!("fitted {:.4} < {:.4}", fit.exponent, threshold),
            )
        }
    } else {
        (false, "no usable distance series to fit".to_string())
    };

    Ok(ConvergenceReport {
        t_end: last.t,
        v_final_h1: last.norm_v_h1,
        dist_l2,
        dist_h1,
        dist_h2,
        trace_mismatch,
        fit_v,
        fit_dist,
        fit_a_p,
        rate,
        at_equilibrium,
        rate_pass,
        note,
    })
}
