use super::config::{CheckKind, Mode, Scenario};
use super::hypotheses::check_hypotheses;
use super::presets::preset;
use super::scenario::{equilibrium_guess, generate_scenario, GeneratedScenario};
use crate::diagnostics::norms::l2;
use crate::diagnostics::{
    convergence_report_with, fit_growth_constant, uniform_gronwall_check, EnergyRecord,
};
use crate::dynamics::{run, CsvSink, RecordSink, RunSummary, SimState};
use crate::error::{Error, Result};
use crate::grid::snapshot;
use crate::lifting::{
    elliptic_lift, lifting_diagnostics, write_history_csv, LiftingHistory, LiftingState,
};
use crate::majorant::{comparison_check, solve_majorant, MajorantProblem};
use crate::steady::{energy_script, local_minimizer_check, solve_equilibrium, Equilibrium};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable selecting the root directory of run outputs.
pub const OUTPUT_ENV: &str = "NEMATIC_OUTPUT_DIR";
/// Horizon of the hypothesis checker.
pub const HYPOTHESIS_HORIZON: f64 = 1e4;

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// One acceptance check: pass iff `value` is on the right side of `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: value >= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    fn verdict(name: &str, pass: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value,
            threshold: f64::NAN,
            detail: detail.into(),
        }
    }
}

/// Everything needed to audit or repeat a run; written as `manifest.txt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub version: String,
    pub pass: bool,
    pub wall_clock_s: f64,
    pub output_dir: String,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<String>,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub scenario: Scenario,
}

impl RunManifest {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Lifting norms and force size at every recorded sample.
#[derive(Debug, Clone, Default)]
pub struct SourceTerms {
    pub t: Vec<f64>,
    pub dt_dp: Vec<f64>,
    pub grad_lap_dp: Vec<f64>,
    pub g_l2: Vec<f64>,
}

impl SourceTerms {
    /// `‖∂_t d_P‖⁶ + ‖∂_t d_P‖² + ‖∇Δd_P‖² + ‖g‖²`.
    pub fn r3(&self) -> Vec<f64> {
        self.combine(6)
    }

    /// `‖∂_t d_P‖⁴ + ‖∂_t d_P‖² + ‖∇Δd_P‖² + ‖g‖²`.
    pub fn r1(&self) -> Vec<f64> {
        self.combine(4)
    }

    fn combine(&self, p: i32) -> Vec<f64> {
        (0..self.t.len())
            .map(|k| {
                let a = self.dt_dp[k];
                a.powi(p) + a * a + self.grad_lap_dp[k].powi(2) + self.g_l2[k].powi(2)
            })
            .collect()
    }
}

impl RecordSink for SourceTerms {
    fn record(&mut self, state: &SimState, _: &EnergyRecord) -> Result<()> {
        let s = state.lifting.sample();
        self.t.push(state.t);
        self.dt_dp.push(s.dt_dp);
        self.grad_lap_dp.push(s.grad_lap_dp);
        self.g_l2.push(l2(&state.forcing.body_at(state.t)));
        Ok(())
    }
}

struct Outcome {
    checks: Vec<Check>,
    summary: BTreeMap<String, f64>,
    files: Vec<String>,
}

/// Runs the named preset under [`output_root`].
pub fn run_experiment(name: &str) -> Result<RunManifest> {
    let s = preset(name)?;
    run_scenario(&s, &output_root().join(name))
}

/// Runs a scenario, writes its outputs into `dir` and returns the manifest.
/// On failure the manifest is still written, marked failed, and the error
/// is returned.
pub fn run_scenario(s: &Scenario, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let start = Instant::now();
    let result = execute(s, dir);
    let mut manifest = RunManifest {
        name: s.run.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        pass: false,
        wall_clock_s: 0.0,
        output_dir: dir.display().to_string(),
        files: Vec::new(),
        error: None,
        flagged: s.run.flagged.clone(),
        summary: BTreeMap::new(),
        checks: Vec::new(),
        scenario: s.clone(),
    };
    match &result {
        Ok(o) => {
            manifest.pass = o.checks.iter().all(|c| c.pass);
            manifest.checks = o.checks.clone();
            manifest.summary = o.summary.clone();
            manifest.files = o.files.clone();
        }
        Err(e) => manifest.error = Some(e.to_string()),
    }
    manifest.files.push("manifest.txt".into());
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    std::fs::write(dir.join("manifest.txt"), manifest.to_text()?)?;
    result.map(|_| manifest)
}

fn write_snapshot(
    dir: &Path,
    name: &str,
    d: &crate::grid::VectorField2D,
    t: f64,
) -> Result<String> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    snapshot::write_vector(&mut w, d, t)?;
    w.flush()?;
    Ok(name.into())
}

fn execute(s: &Scenario, dir: &Path) -> Result<Outcome> {
    s.validate()?;
    let gen = generate_scenario(s)?;
    match s.run.mode {
        Mode::Dynamics => execute_dynamics(s, gen, dir),
        Mode::Lifting => execute_lifting(s, gen, dir),
    }
}

fn equilibrium_for(s: &Scenario, gen: &GeneratedScenario) -> Result<Equilibrium> {
    match &gen.minimizer {
        Some(e) => Ok(e.clone()),
        None => solve_equilibrium(
            gen.forcing.h_inf(),
            &equilibrium_guess(gen)?,
            &s.params,
            s.tolerances.equilibrium,
        ),
    }
}

fn execute_dynamics(s: &Scenario, gen: GeneratedScenario, dir: &Path) -> Result<Outcome> {
    if s.run.checks.contains(&CheckKind::Lifting) {
        return Err(Error::Config(
            "the lifting check needs run.mode = \"lifting\"".into(),
        ));
    }
    let tol = &s.tolerances;
    let eq = equilibrium_for(s, &gen)?;
    let mut files = vec![write_snapshot(
        dir,
        "equilibrium.snap",
        &eq.psi,
        f64::INFINITY,
    )?];
    let state = gen.state.clone().with_reference(eq.psi.clone())?;
    let mut csv = CsvSink::new(BufWriter::new(File::create(dir.join("records.csv"))?));
    let mut sources = SourceTerms::default();
    let summary = run(
        state,
        s.run.t_end,
        s.run.sample_every,
        &mut [&mut csv, &mut sources],
    )?;
    files.push("records.csv".into());
    let fin = &summary.final_state;
    files.push(write_snapshot(dir, "final.snap", &fin.d, fin.t)?);

    let recs = &summary.records;
    let first = recs[0];
    let last = *recs.last().unwrap();
    let mut out = BTreeMap::new();
    out.insert("steps".into(), summary.steps as f64);
    out.insert("dt".into(), fin.dt);
    out.insert("max_cfl".into(), summary.max_cfl);
    out.insert("e_hat_initial".into(), first.e_hat);
    out.insert("e_hat_final".into(), last.e_hat);
    out.insert("equilibrium_residual".into(), eq.residual);
    out.insert("equilibrium_energy".into(), eq.energy_e);

    let mut checks = Vec::new();
    let mut kinds = s.run.checks.clone();
    kinds.sort();
    kinds.dedup();
    for kind in kinds {
        match kind {
            CheckKind::EnergyLaw => checks.extend(energy_checks(
                &summary,
                tol.energy_residual,
                tol.energy_roundoff,
            )),
            CheckKind::MaxPrinciple => {
                let m = recs.iter().fold(0.0_f64, |m, r| m.max(r.max_abs_d));
                checks.push(Check::at_most(
                    "max-principle",
                    m,
                    1.0 + tol.maxnorm,
                    "max |d| over samples",
                ));
            }
            CheckKind::OmegaLimit => {
                let dist = l2(&fin.d.sub(&eq.psi)?);
                checks.push(Check::at_most(
                    "omega-grad-v",
                    last.grad_v(),
                    tol.grad_v,
                    "||grad v(t_end)||",
                ));
                checks.push(Check::at_most(
                    "omega-stationary",
                    last.residual_stationary,
                    tol.stationary,
                    "||-Lap d + f(d)|| at t_end",
                ));
                checks.push(Check::at_most(
                    "omega-dist-l2",
                    dist,
                    tol.dist_l2,
                    format!("||d(t_end) - psi||_L2; steady residual {:.3e}", eq.residual),
                ));
            }
            CheckKind::Rate => {
                let rep = convergence_report_with(recs, &fin.d, &eq, &gen.rate, tol.rate_slack)?;
                out.insert("dist_h1_final".into(), rep.dist_h1);
                out.insert("dist_h2_final".into(), rep.dist_h2);
                out.insert("predicted_exponent".into(), rep.rate.predicted_exponent);
                if let Some(f) = rep.fit_v {
                    out.insert("fit_exponent_v".into(), f.exponent);
                }
                if let Some(f) = rep.fit_a_p {
                    out.insert("fit_exponent_a_p".into(), f.exponent);
                }
                checks.push(Check::at_most(
                    "rate-dist-h1",
                    rep.dist_h1,
                    tol.dist_h1,
                    "||d(t_end) - psi||_H1",
                ));
                let fitted = rep.fit_dist.map_or(f64::NAN, |f| f.exponent);
                checks.push(Check {
                    name: "rate-exponent".into(),
                    pass: rep.rate_pass,
                    value: fitted,
                    threshold: rep.rate.predicted_exponent - tol.rate_slack,
                    detail: format!(
                        "{}; r2 {:.5}; super-polynomial {}",
                        rep.note,
                        rep.fit_dist.map_or(f64::NAN, |f| f.r2),
                        rep.fit_dist.is_some_and(|f| f.super_polynomial)
                    ),
                });
            }
            CheckKind::Minimizer => {
                let d_star = elliptic_lift(gen.forcing.h_inf())?;
                let e_fin = energy_script(&fin.d, &d_star, s.params.eps)?;
                let sup = recs.iter().fold(0.0_f64, |m, r| m.max(r.dist_d_h1));
                let local = local_minimizer_check(&eq, &s.params, 50, 0.05, s.run.seed)?;
                checks.push(Check::at_most(
                    "minimizer-initial-v",
                    first.norm_v_l2,
                    s.forcing.sigma1 * (1.0 + 1e-12),
                    "||v0||_L2",
                ));
                checks.push(Check::at_most(
                    "minimizer-initial-d",
                    first.dist_d_h1,
                    s.forcing.sigma2 * (1.0 + 1e-12),
                    "||d0 - psi*||_H1",
                ));
                checks.push(Check::verdict(
                    "minimizer-local",
                    local.is_minimizer_consistent(),
                    local.min_gap,
                    format!(
                        "smallest energy gap over {} probes; Rayleigh {:.3e}",
                        local.probes, local.min_rayleigh
                    ),
                ));
                checks.push(Check::at_most(
                    "minimizer-sup-h1",
                    sup,
                    tol.minimizer_h1,
                    "sup_t ||d - psi*||_H1",
                ));
                checks.push(Check::at_most(
                    "minimizer-energy",
                    e_fin - eq.energy_script,
                    tol.minimizer_energy,
                    format!("E(d(t_end)) - E(psi*), E(psi*) = {:.12e}", eq.energy_script),
                ));
            }
            CheckKind::MajorantComparison => {
                let (c, t_max) = majorant_comparison(recs, &sources)?;
                out.insert("majorant_t_max".into(), t_max);
                checks.push(c);
            }
            CheckKind::Gronwall => checks.push(gronwall(recs, &sources)?),
            CheckKind::Hypotheses => checks.extend(hypothesis_checks(&gen)?),
            CheckKind::Lifting => unreachable!(),
        }
    }
    Ok(Outcome {
        checks,
        summary: out,
        files,
    })
}

fn energy_checks(summary: &RunSummary, residual_tol: f64, roundoff: f64) -> Vec<Check> {
    let scale = 1.0 + summary.records[0].e_hat;
    vec![
        Check::at_most(
            "energy-residual",
            summary.max_energy_residual,
            residual_tol * scale,
            "largest one-step energy inequality residual",
        ),
        Check::at_most(
            "energy-monotone",
            summary.max_energy_increase,
            roundoff * scale,
            "largest one-step rise of the lifted energy",
        ),
    ]
}

fn majorant_comparison(recs: &[EnergyRecord], src: &SourceTerms) -> Result<(Check, f64)> {
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let a: Vec<f64> = recs.iter().map(|r| r.a_p).collect();
    let r3 = src.r3();
    let p = MajorantProblem::calibrated(&t, &a, &r3)?;
    let v = comparison_check(&t, &a, &p)?;
    let cap = 1e3 * p.y0.max(1.0);
    let dt = (t[t.len() - 1] - t[0]) / (t.len() as f64) / 10.0;
    let sol = solve_majorant(&p, dt.max(1e-6), cap, 10.0 * t[t.len() - 1])?;
    let t_max = sol.t_max.unwrap_or(f64::INFINITY);
    let detail = match v.witness {
        Some(w) => format!("A_P exceeds the majorant at t = {w}; C* = {:.3e}", v.c_star),
        None => format!(
            "fitted C* = {:.3e}; majorant blow-up time {t_max:.4e}",
            v.c_star
        ),
    };
    Ok((
        Check::verdict("majorant-comparison", v.pass, v.max_ratio, detail),
        t_max,
    ))
}

fn gronwall(recs: &[EnergyRecord], src: &SourceTerms) -> Result<Check> {
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let y: Vec<f64> = recs.iter().map(|r| r.a_p).collect();
    let r1 = src.r1();
    let c = fit_growth_constant(&t, &y, &r1);
    let h: Vec<f64> = r1.iter().map(|v| c * v).collect();
    let span = t[t.len() - 1] - t[0];
    let rho = 1.0_f64.min(0.25 * span);
    let v = uniform_gronwall_check(&t, &y, &h, 1.5 * c, 0.5 * c, rho)?;
    Ok(Check {
        name: "gronwall".into(),
        pass: v.pass,
        value: v.max_violation + v.bound,
        threshold: v.bound,
        detail: format!(
            "sup of A_P after rho = {rho} against the bound; C = {c:.3e}, c3 = {:.3e}, c4 = {:.3e}",
            v.c3, v.c4
        ),
    })
}

fn hypothesis_checks(gen: &GeneratedScenario) -> Result<Vec<Check>> {
    let rep = check_hypotheses(&gen.forcing, HYPOTHESIS_HORIZON)?;
    if rep.checks.is_empty() {
        return Ok(vec![Check::verdict("hypotheses", true, f64::NAN, rep.note)]);
    }
    Ok(rep
        .checks
        .iter()
        .map(|c| Check {
            name: format!("hypothesis-{}", c.name),
            pass: c.holds,
            value: c.fitted.unwrap_or(f64::INFINITY),
            threshold: c.required,
            detail: format!(
                "{}: fitted exponent minus required {:+.3}; constant {:.3e}",
                c.quantity,
                c.margin().unwrap_or(f64::INFINITY),
                c.constant
            ),
        })
        .collect())
}

fn execute_lifting(s: &Scenario, gen: GeneratedScenario, dir: &Path) -> Result<Outcome> {
    let allowed = [
        CheckKind::Lifting,
        CheckKind::MaxPrinciple,
        CheckKind::Hypotheses,
    ];
    if let Some(k) = s.run.checks.iter().find(|k| !allowed.contains(k)) {
        return Err(Error::Config(format!(
            "check {k:?} is not available in lifting mode"
        )));
    }
    let tol = &s.tolerances;
    let solver = gen.state.solver();
    let grid = *gen.forcing.grid();
    let dt = s.dt()?;
    let n = ((s.run.t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut state = LiftingState::new(solver, gen.forcing.trace_at(0.0)?, 0.0)?;
    let mut history = LiftingHistory::new(grid);
    history.push(&state)?;
    let mut max_dp = state.d_p.max_norm();
    for k in 1..=n {
        let t = k as f64 * dt;
        state = state.step(solver, &gen.forcing.trace_at(t)?, dt)?;
        max_dp = max_dp.max(state.d_p.max_norm());
        if k % s.run.sample_every == 0 || k == n {
            history.push(&state)?;
        }
    }
    let mut w = BufWriter::new(File::create(dir.join("lifting.csv"))?);
    write_history_csv(&mut w, &history)?;
    w.flush()?;
    let gamma = gen.forcing.gamma;
    let rep = lifting_diagnostics(&history, gamma)?;
    let mut summary = BTreeMap::new();
    summary.insert("steps".into(), n as f64);
    summary.insert("dt".into(), dt);
    summary.insert("weighted_h1_max_ratio".into(), rep.weighted_h1.max_ratio);
    summary.insert("energy_constant".into(), rep.energy_constant);
    summary.insert("grad_lap_constant".into(), rep.grad_lap_constant);
    summary.insert("identity_max".into(), rep.identity_max);
    if let Some(f) = rep.grad_lap_decay.fit {
        summary.insert("fit_exponent_tail_grad_lap".into(), f.exponent);
    }

    let mut checks = Vec::new();
    let mut kinds = s.run.checks.clone();
    kinds.sort();
    kinds.dedup();
    for kind in kinds {
        match kind {
            CheckKind::Lifting => {
                let required = 2.0 + 2.0 * gamma - tol.lifting_slack;
                let fitted = rep.dtdp_decay.fit.map_or(f64::NAN, |f| f.exponent);
                checks.push(Check::at_least(
                    "lifting-dtdp-exponent",
                    fitted,
                    required,
                    format!(
                        "decay exponent of ||d_t d_P||^2; {}",
                        rep.dtdp_decay.note.clone().unwrap_or_default()
                    ),
                ));
                checks.push(Check::verdict(
                    "lifting-weighted-h1",
                    rep.weighted_h1.holds,
                    rep.weighted_h1.max_ratio,
                    "||d_P - d_E||_H1^2 against the exponentially weighted integral of ||d_t d_E||^2",
                ));
                checks.push(Check::at_most(
                    "lifting-dtdp-final",
                    rep.dtdp_final,
                    tol.dtdp_final,
                    "||d_t d_P(t_end)||",
                ));
            }
            CheckKind::MaxPrinciple => {
                checks.push(Check::at_most(
                    "max-principle",
                    max_dp,
                    1.0 + tol.maxnorm,
                    "max |d_P| over steps",
                ));
            }
            CheckKind::Hypotheses => checks.extend(hypothesis_checks(&gen)?),
            _ => unreachable!(),
        }
    }
    Ok(Outcome {
        checks,
        summary,
        files: vec!["lifting.csv".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Family, GridSpec};

    fn small(name: &str, family: Family, checks: Vec<CheckKind>) -> Scenario {
        let mut s =
            Scenario::from_toml(&format!("[run]\nname = \"{name}\"\nt_end = 0.2\n")).unwrap();
        s.grid = GridSpec::square(16);
        s.forcing.family = family;
        s.forcing.a_h = 0.1;
        s.forcing.a_g = 0.1;
        s.run.dt = Some(2e-3);
        s.run.sample_every = 5;
        s.run.checks = checks;
        s
    }

    #[test]
    fn writes_outputs_and_a_readable_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let s = small(
            "small",
            Family::PolynomialDecay,
            vec![
                CheckKind::MaxPrinciple,
                CheckKind::MajorantComparison,
                CheckKind::Gronwall,
            ],
        );
        let m = run_scenario(&s, dir.path()).unwrap();
        for f in [
            "records.csv",
            "equilibrium.snap",
            "final.snap",
            "manifest.txt",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
            assert!(m.files.iter().any(|x| x == f));
        }
        let text = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        let back = RunManifest::from_text(&text).unwrap();
        assert_eq!(back.scenario, s);
        assert_eq!(back.checks.len(), 3);
        assert!(m.check("max-principle").unwrap().pass);
        assert!(m.check("majorant-comparison").unwrap().pass);
    }

    #[test]
    fn records_are_bit_identical_across_runs() {
        let s = small(
            "det",
            Family::PolynomialDecay,
            vec![CheckKind::MaxPrinciple],
        );
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_scenario(&s, a.path()).unwrap();
        run_scenario(&s, b.path()).unwrap();
        let ra = std::fs::read(a.path().join("records.csv")).unwrap();
        let rb = std::fs::read(b.path().join("records.csv")).unwrap();
        assert!(!ra.is_empty());
        assert_eq!(ra, rb);
    }

    #[test]
    fn failure_is_recorded_in_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let s = small("bad", Family::Autonomous, vec![CheckKind::Lifting]);
        assert!(run_scenario(&s, dir.path()).is_err());
        let text = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        let m = RunManifest::from_text(&text).unwrap();
        assert!(!m.pass);
        assert!(m.error.unwrap().contains("lifting"));
    }

    #[test]
    fn lifting_mode_runs_the_lifting_alone() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = small(
            "lift",
            Family::PolynomialDecay,
            vec![CheckKind::MaxPrinciple],
        );
        s.run.mode = Mode::Lifting;
        s.run.t_end = 1.0;
        s.run.dt = Some(1e-2);
        let m = run_scenario(&s, dir.path()).unwrap();
        assert!(dir.path().join("lifting.csv").exists());
        assert!(m.pass, "{:?}", m.checks);
        s.run.checks = vec![CheckKind::Rate];
        assert!(run_scenario(&s, dir.path()).is_err());
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(
            run_experiment("no-such-preset"),
            Err(Error::UnknownPreset { .. })
        ));
    }
}
