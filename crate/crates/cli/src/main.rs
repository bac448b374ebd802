use anyhow::{anyhow, Context, Result};
use clap::{error::ErrorKind, Parser, Subcommand};
use nematic_core::diagnostics::fit_decay_exponent;
use nematic_core::grid::snapshot;
use nematic_core::harness::scenario::{equilibrium_guess, generate_scenario};
use nematic_core::harness::{
    output_root, preset, presets, run_scenario, CheckKind, MajorantSpec, Mode, RunManifest,
    Scenario,
};
use nematic_core::majorant::{solve_majorant, Forcing3, MajorantProblem};
use nematic_core::steady::{local_minimizer_check, lowest_eigenvalue, solve_equilibrium};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAIL: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(
    name = "nematic",
    version,
    about = "Simulate and check 2D nematic liquid-crystal flow"
)]
struct Cli {
    /// Root directory for run outputs; overrides NEMATIC_OUTPUT_DIR.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Solve for the equilibrium of the limiting boundary data of a config.
    Steady { config: PathBuf },
    /// Run only the liftings of a config's boundary data and check their decay.
    LiftingCheck { config: PathBuf },
    /// Solve the majorant problem of a config's [majorant] section.
    Majorant { config: PathBuf },
    /// Fit a power-law decay exponent to one column of a CSV file.
    FitRate {
        csv: PathBuf,
        column: String,
        /// Fraction of the samples, counted from the end, used in the fit.
        #[arg(long, default_value_t = 0.5)]
        tail: f64,
    },
    /// List the prepackaged experiments.
    ListPresets,
    /// Run a prepackaged experiment.
    Preset { name: String },
}

fn root(cli_output: &Option<PathBuf>) -> PathBuf {
    cli_output.clone().unwrap_or_else(output_root)
}

fn report(m: &RunManifest) -> bool {
    for c in &m.checks {
        println!(
            "{} {:<24} value {:>12.5e}  threshold {:>12.5e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.detail
        );
    }
    if let Some(f) = &m.flagged {
        println!("note: {f}");
    }
    println!(
        "{} {} in {:.1} s; outputs in {}",
        if m.pass { "PASS" } else { "FAIL" },
        m.name,
        m.wall_clock_s,
        m.output_dir
    );
    m.pass
}

fn run_and_report(s: &Scenario, out: &Option<PathBuf>) -> Result<bool> {
    let dir = root(out).join(&s.run.name);
    let m = run_scenario(s, &dir)?;
    Ok(report(&m))
}

fn steady(config: &Path, out: &Option<PathBuf>) -> Result<bool> {
    let s = Scenario::load(config)?;
    let gen = generate_scenario(&s)?;
    let guess = equilibrium_guess(&gen)?;
    let eq = solve_equilibrium(
        gen.forcing.h_inf(),
        &guess,
        &s.params,
        s.tolerances.equilibrium,
    )?;
    let verdict = local_minimizer_check(&eq, &s.params, 50, 0.05, s.run.seed)?;
    let lowest = lowest_eigenvalue(&eq, &s.params, 2000)?;
    let dir = root(out).join(&s.run.name);
    std::fs::create_dir_all(&dir)?;
    let mut w = BufWriter::new(File::create(dir.join("equilibrium.snap"))?);
    snapshot::write_vector(&mut w, &eq.psi, f64::INFINITY)?;
    w.flush()?;
    println!("residual          {:.6e}", eq.residual);
    println!("energy E          {:.12e}", eq.energy_e);
    println!("energy (lifted)   {:.12e}", eq.energy_script);
    println!("iterations        {}", eq.iterations);
    println!("lowest eigenvalue {:.6e}", lowest);
    println!(
        "minimizer probes  {} ({} probes, smallest gap {:.3e})",
        if verdict.is_minimizer_consistent() {
            "consistent"
        } else {
            "saddle detected"
        },
        verdict.probes,
        verdict.min_gap
    );
    println!("wrote {}", dir.join("equilibrium.snap").display());
    let pass = eq.converged && eq.residual <= s.tolerances.equilibrium;
    println!(
        "{} steady residual target {:.1e}",
        if pass { "PASS" } else { "FAIL" },
        s.tolerances.equilibrium
    );
    Ok(pass)
}

fn lifting_check(config: &Path, out: &Option<PathBuf>) -> Result<bool> {
    let mut s = Scenario::load(config)?;
    s.run.mode = Mode::Lifting;
    s.run.checks = vec![CheckKind::Lifting, CheckKind::MaxPrinciple];
    run_and_report(&s, out)
}

fn majorant(config: &Path, out: &Option<PathBuf>) -> Result<bool> {
    let text =
        std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let m = MajorantSpec::from_toml(&text).with_context(|| config.display().to_string())?;
    let r3 = if m.r3 == 0.0 {
        Forcing3::Zero
    } else {
        Forcing3::Constant(m.r3)
    };
    let p = MajorantProblem::new(m.c_star, m.y0, r3)?;
    let sol = solve_majorant(&p, m.dt, m.y_cap, m.horizon)?;
    let dir = root(out).join("majorant");
    std::fs::create_dir_all(&dir)?;
    let mut w = BufWriter::new(File::create(dir.join("majorant.csv"))?);
    writeln!(w, "t,Y")?;
    for (t, y) in &sol.trajectory {
        writeln!(w, "{t:.16e},{y:.16e}")?;
    }
    w.flush()?;
    match sol.t_max {
        Some(t) => println!("T_max {t:.8}"),
        None => println!("no blow-up before t = {}", m.horizon),
    }
    println!("wrote {}", dir.join("majorant.csv").display());
    Ok(match (m.expected_t_max, sol.t_max) {
        (Some(want), Some(got)) => {
            let pass = (got - want).abs() <= m.t_max_tol;
            println!(
                "{} |T_max - {want}| = {:.3e} (tolerance {:.1e})",
                if pass { "PASS" } else { "FAIL" },
                (got - want).abs(),
                m.t_max_tol
            );
            pass
        }
        (Some(want), None) => {
            println!("FAIL expected blow-up near {want}");
            false
        }
        (None, _) => true,
    })
}

fn fit_rate(csv: &Path, column: &str, tail: f64) -> Result<bool> {
    let text =
        std::fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| anyhow!("{} is empty", csv.display()))?
        .split(',')
        .map(str::trim)
        .collect();
    let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    let tcol = find("t").ok_or_else(|| anyhow!("no `t` column in {}", csv.display()))?;
    let vcol = find(column)
        .ok_or_else(|| anyhow!("no column `{column}`; columns are {}", header.join(", ")))?;
    let mut samples = Vec::new();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |c: usize| -> Result<f64> {
            cells
                .get(c)
                .ok_or_else(|| anyhow!("row {} is short", k + 2))?
                .parse::<f64>()
                .with_context(|| format!("row {} column {}", k + 2, c + 1))
        };
        samples.push((get(tcol)?, get(vcol)?));
    }
    let fit = fit_decay_exponent(&samples, tail)?;
    println!("{:.3}", fit.exponent);
    eprintln!(
        "r2 {:.6}; {} samples; super-polynomial {}",
        fit.r2, fit.samples, fit.super_polynomial
    );
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let s = Scenario::load(config)?;
            run_and_report(&s, &cli.output)
        }
        Command::Steady { config } => steady(config, &cli.output),
        Command::LiftingCheck { config } => lifting_check(config, &cli.output),
        Command::Majorant { config } => majorant(config, &cli.output),
        Command::FitRate { csv, column, tail } => fit_rate(csv, column, *tail),
        Command::ListPresets => {
            for p in presets() {
                println!("{:<24} {}", p.name, p.description);
            }
            Ok(true)
        }
        Command::Preset { name } => {
            let s = preset(name)?;
            run_and_report(&s, &cli.output)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        for args in [
            vec!["nematic", "run", "a.toml"],
            vec!["nematic", "steady", "a.toml"],
            vec!["nematic", "lifting-check", "a.toml"],
            vec!["nematic", "majorant", "a.toml"],
            vec!["nematic", "fit-rate", "r.csv", "dist_d_L2", "--tail", "0.3"],
            vec!["nematic", "list-presets"],
            vec!["nematic", "--output", "/tmp/x", "preset", "omega-limit"],
        ] {
            Cli::try_parse_from(&args).unwrap();
        }
        assert!(Cli::try_parse_from(["nematic", "launch"]).is_err());
    }
}
