//! Norms, energy records, decay fits and Gronwall checks.

mod convergence;
mod energy;
pub mod fit;
pub mod gronwall;
pub mod norms;

pub use convergence::{
    convergence_report, convergence_report_with, ConvergenceReport, AT_EQUILIBRIUM_TOL, RATE_SLACK,
};
pub use energy::{
    energy_inequality_residual, energy_record, read_records_csv, write_records_csv, EnergyRecord,
    CSV_HEADER,
};
pub use fit::{cumulative_trapezoid, fit_decay_exponent, interpolate, DecayFit, RateModel};
pub use gronwall::{fit_growth_constant, uniform_gronwall_check, GronwallVerdict};
pub use norms::{norms, NormKind};
