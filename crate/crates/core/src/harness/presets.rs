use super::config::{
    CheckKind, Family, ForcingSpec, GridSpec, Mode, RunSpec, Scenario, Tolerances,
};
use crate::dynamics::PhysParams;
use crate::error::{Error, Result};
use crate::linsolve::SolverMethod;

/// A named, prepackaged experiment.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Scenario,
}

impl Preset {
    pub fn scenario(&self) -> Scenario {
        (self.build)()
    }
}

fn run_spec(
    name: &str,
    t_end: f64,
    dt: Option<f64>,
    sample_every: usize,
    checks: Vec<CheckKind>,
) -> RunSpec {
    RunSpec {
        name: name.into(),
        t_end,
        dt,
        sample_every,
        seed: 7,
        solver: SolverMethod::Spectral,
        mode: Mode::Dynamics,
        d0_amplitude: 1.2,
        v0_amplitude: 0.5,
        checks,
        flagged: None,
    }
}

fn base(run: RunSpec, forcing: ForcingSpec) -> Scenario {
    Scenario {
        grid: GridSpec::square(64),
        params: PhysParams::default(),
        forcing,
        run,
        tolerances: Tolerances::default(),
        majorant: None,
    }
}

fn decay(family: Family, a_h: f64, a_g: f64) -> ForcingSpec {
    ForcingSpec {
        family,
        gamma: 2.0,
        a_h,
        a_g,
        ..ForcingSpec::default()
    }
}

fn energy_law() -> Scenario {
    let forcing = ForcingSpec {
        kappa: 0.0,
        ..ForcingSpec::default()
    };
    base(
        run_spec(
            "energy-law-autonomous",
            5.0,
            None,
            200,
            vec![
                CheckKind::EnergyLaw,
                CheckKind::MaxPrinciple,
                CheckKind::MajorantComparison,
            ],
        ),
        forcing,
    )
}

fn omega_limit() -> Scenario {
    base(
        run_spec(
            "omega-limit",
            50.0,
            Some(2e-3),
            50,
            vec![
                CheckKind::EnergyLaw,
                CheckKind::MaxPrinciple,
                CheckKind::OmegaLimit,
                CheckKind::Rate,
                CheckKind::MajorantComparison,
                CheckKind::Gronwall,
            ],
        ),
        ForcingSpec::default(),
    )
}

fn rate_gamma2() -> Scenario {
    base(
        run_spec(
            "rate-gamma2",
            200.0,
            Some(5e-3),
            100,
            vec![
                CheckKind::Hypotheses,
                CheckKind::MaxPrinciple,
                CheckKind::Rate,
                CheckKind::MajorantComparison,
                CheckKind::Gronwall,
            ],
        ),
        decay(Family::PolynomialDecay, 0.3, 0.1),
    )
}

fn lifting_check() -> Scenario {
    let mut run = run_spec(
        "lifting-check",
        50.0,
        Some(1e-2),
        10,
        vec![
            CheckKind::Lifting,
            CheckKind::MaxPrinciple,
            CheckKind::Hypotheses,
        ],
    );
    run.mode = Mode::Lifting;
    base(run, decay(Family::PolynomialDecay, 0.3, 0.0))
}

fn minimizer_perturbation() -> Scenario {
    base(
        run_spec(
            "minimizer-perturbation",
            40.0,
            Some(2e-3),
            50,
            vec![
                CheckKind::Hypotheses,
                CheckKind::MaxPrinciple,
                CheckKind::Minimizer,
                CheckKind::MajorantComparison,
            ],
        ),
        ForcingSpec {
            sigma1: 0.05,
            sigma2: 0.05,
            ..decay(Family::MinimizerPerturbation, 0.005, 0.01)
        },
    )
}

fn winding_defect() -> Scenario {
    let mut run = run_spec(
        "winding-defect",
        2.0,
        Some(1e-3),
        20,
        vec![CheckKind::MaxPrinciple, CheckKind::EnergyLaw],
    );
    run.flagged = Some(
        "winding-one boundary data force a defect whose core width is set by eps; \
         excluded from acceptance"
            .into(),
    );
    let mut s = base(
        run,
        ForcingSpec {
            winding: 1,
            ..ForcingSpec::default()
        },
    );
    s.grid = GridSpec::square(48);
    s
}

const PRESETS: &[Preset] = &[
    Preset {
        name: "energy-law-autonomous",
        description: "constant unit boundary director, no force, default time step, t in [0, 5]",
        build: energy_law,
    },
    Preset {
        name: "omega-limit",
        description:
            "time-independent boundary data, no force, t in [0, 50]; compared with the steady solve",
        build: omega_limit,
    },
    Preset {
        name: "rate-gamma2",
        description:
            "boundary angle and force decaying with gamma = 2, t in [0, 200]; decay rate fit",
        build: rate_gamma2,
    },
    Preset {
        name: "lifting-check",
        description: "liftings of gamma = 2 boundary data alone, t in [0, 50]",
        build: lifting_check,
    },
    Preset {
        name: "minimizer-perturbation",
        description: "start within 0.05 of a minimizing equilibrium under small decaying data",
        build: minimizer_perturbation,
    },
    Preset {
        name: "winding-defect",
        description: "boundary director with winding number one (flagged, not part of acceptance)",
        build: winding_defect,
    },
];

pub fn presets() -> &'static [Preset] {
    PRESETS
}

/// Scenario of the named preset.
pub fn preset(name: &str) -> Result<Scenario> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::scenario)
        .ok_or_else(|| Error::UnknownPreset {
            name: name.into(),
            available: PRESETS
                .iter()
                .map(|p| p.name)
                .collect::<Vec<_>>()
                .join(", "),
        })
}
