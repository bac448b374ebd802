//! Scenario generation, configuration, prepackaged experiments and their
//! persisted outputs.

pub mod config;
mod experiment;
pub mod hypotheses;
mod presets;
pub mod scenario;

pub use config::{
    CheckKind, Family, ForcingSpec, GridSpec, MajorantSpec, Mode, RunSpec, Scenario, Tolerances,
};
pub use experiment::{
    output_root, run_experiment, run_scenario, Check, RunManifest, SourceTerms, HYPOTHESIS_HORIZON,
    OUTPUT_ENV,
};
pub use hypotheses::{check_hypotheses, HypothesisCheck, HypothesisReport};
pub use presets::{preset, presets, Preset};
pub use scenario::{build_forcing, generate_scenario, GeneratedScenario};
