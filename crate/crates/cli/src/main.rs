//! Batch front end for the effective-roughness scattering models.
//!
//! Subcommands:
//! - `pattern` exports scattering-pattern or squared-field tables as CSV;
//! - `normalization` compares the closed-form lobe normalization against
//!   hemispherical quadrature at one incidence angle;
//! - `verify reciprocity|power-balance|sign-check` sweeps model invariants
//!   and exits nonzero when an asserted bound is violated;
//! - `fit` estimates model parameters from a measured pattern table.
//!
//! Exit codes: 0 on success, 1 when a verification bound fails or a fit
//! does not converge, 2 on invalid input. All floating-point output is
//! printed as `{:.12e}` (13 significant digits) so repeated runs are
//! byte-identical and machine-diffable.

mod scenario;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use er_scatter::calibration::{fit_double_lobe, fit_single_lobe, power_db, FitOptions, PatternSample};
use er_scatter::models::{
    e_s_squared_double, e_s_squared_legacy, e_s_squared_rer, f_alpha_closed, k_alpha_exact,
    k_alpha_interp, pattern_double, pattern_legacy, pattern_rer,
};
use er_scatter::oracle::{
    double_lobe_sign_check, integrate_pattern, power_balance_anomaly, reciprocity_sweep,
    QuadratureSpec,
};
use er_scatter::Direction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use scenario::{ModelKind, Resolved, ScenarioArgs};

#[derive(Parser)]
#[command(
    name = "er-scatter",
    version,
    about = "Diffuse-scattering model tables, invariant checks, and parameter fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export a scattering table as CSV (header `theta_s_deg,phi_s_deg,value`,
    /// or `...,power_db` for --quantity field-db).
    Pattern(PatternArgs),
    /// Report closed-form vs quadrature lobe normalization at one angle.
    Normalization(NormalizationArgs),
    /// Check model invariants over sweeps; exits 1 on a violated bound.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Fit reciprocal model parameters to a measured pattern table.
    Fit(FitArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    /// Normalized lobe pattern in [0, 1].
    Pattern,
    /// Squared scattered field.
    Field,
    /// Squared scattered field in dB (CSV column `power_db`).
    FieldDb,
}

#[derive(Args)]
struct PatternArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Sample the forward-scattering half plane (phi_s = phi_i + 180 deg).
    #[arg(long, conflicts_with = "grid")]
    in_plane: bool,

    /// Full-hemisphere grid as elevation x azimuth node counts, e.g. 19x36.
    #[arg(long, value_name = "NxM", value_parser = parse_grid_spec)]
    grid: Option<GridSpec>,

    /// Elevation step in degrees for --in-plane; must divide 90.
    #[arg(long, default_value_t = 0.5)]
    step: f64,

    /// Exported column.
    #[arg(long, value_enum, default_value_t = Quantity::Pattern)]
    quantity: Quantity,

    /// Standard deviation of Gaussian dB noise added to field-db values.
    #[arg(long, value_name = "SIGMA_DB")]
    noise: Option<f64>,

    /// Seed for the noise generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizationArgs {
    /// Lobe width exponent (integer: the closed form needs one).
    #[arg(long)]
    alpha_r: u32,

    /// Incidence elevation in degrees, below grazing.
    #[arg(long, default_value_t = 0.0)]
    theta_i: f64,

    /// Emit the report as JSON instead of `key: value` text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Exchange symmetry of the squared field over random geometries.
    Reciprocity(ReciprocityArgs),
    /// Scattered-vs-incident power mismatch across incidence angles.
    PowerBalance(PowerBalanceArgs),
    /// Forward and backscatter lobe kernels integrate identically.
    SignCheck(SignCheckArgs),
}

#[derive(Args)]
struct ReciprocityArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Number of random geometries.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,

    /// Seed for the geometry generator.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Largest accepted relative defect.
    #[arg(long, default_value_t = 1e-12)]
    bound: f64,
}

#[derive(Args)]
struct PowerBalanceArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Largest incidence elevation in degrees (below grazing).
    #[arg(long, default_value_t = 60.0)]
    theta_max: f64,

    /// Sweep step in degrees.
    #[arg(long, default_value_t = 2.5)]
    step: f64,

    /// Largest accepted |delta_rel|.
    #[arg(long, default_value_t = 0.01)]
    bound: f64,
}

#[derive(Args)]
struct SignCheckArgs {
    /// Lobe width exponent.
    #[arg(long)]
    alpha_r: u32,

    /// Largest incidence elevation in degrees (below grazing).
    #[arg(long, default_value_t = 80.0)]
    theta_max: f64,

    /// Sweep step in degrees.
    #[arg(long, default_value_t = 20.0)]
    step: f64,

    /// Largest accepted relative difference of the two integrals.
    #[arg(long, default_value_t = 1e-8)]
    bound: f64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Measured pattern CSV with header `theta_s_deg,phi_s_deg,power_db`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Seed for the multi-start optimizer.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Number of optimizer starts.
    #[arg(long, default_value_t = 8)]
    starts: usize,

    /// Round the fitted exponents to integers and re-score.
    #[arg(long)]
    round_alpha: bool,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Pattern(args) => cmd_pattern(args),
        Command::Normalization(args) => cmd_normalization(args),
        Command::Verify(VerifyCommand::Reciprocity(args)) => cmd_verify_reciprocity(args),
        Command::Verify(VerifyCommand::PowerBalance(args)) => cmd_verify_power_balance(args),
        Command::Verify(VerifyCommand::SignCheck(args)) => cmd_verify_sign_check(args),
        Command::Fit(args) => cmd_fit(args),
    }
}

// ---------------------------------------------------------------------------
// pattern

fn cmd_pattern(args: PatternArgs) -> Result<ExitCode> {
    let scn = args.scenario.resolve()?;
    if args.noise.is_some() && args.quantity != Quantity::FieldDb {
        bail!("--noise applies only to --quantity field-db");
    }
    if let Some(sigma) = args.noise {
        if !(sigma.is_finite() && sigma >= 0.0) {
            bail!("--noise must be a nonnegative number, got {sigma}");
        }
    }

    let rows: Vec<(f64, f64)> = if args.in_plane {
        let phi = scn.phi_i_deg + 180.0;
        degree_grid(90.0, args.step)?
            .into_iter()
            .map(|theta| (theta, phi))
            .collect()
    } else if let Some(grid) = &args.grid {
        let mut rows = Vec::with_capacity(grid.n_theta * grid.n_phi);
        for j in 0..grid.n_theta {
            // The exact endpoint matters: the reciprocal pattern is
            // identically zero at grazing observation and the table should
            // show that zero, not a rounded near-grazing value.
            let theta = if j == grid.n_theta - 1 {
                90.0
            } else {
                j as f64 * 90.0 / (grid.n_theta - 1) as f64
            };
            for m in 0..grid.n_phi {
                rows.push((theta, m as f64 * 360.0 / grid.n_phi as f64));
            }
        }
        rows
    } else {
        bail!("choose a sampling: --in-plane or --grid NxM");
    };

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let header = match args.quantity {
        Quantity::FieldDb => "theta_s_deg,phi_s_deg,power_db",
        _ => "theta_s_deg,phi_s_deg,value",
    };
    let mut out = String::with_capacity(rows.len() * 64 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (theta_deg, phi_deg) in rows {
        let obs = Direction::from_degrees(theta_deg, phi_deg)?;
        let value = match args.quantity {
            Quantity::Pattern => pattern_value(&scn, &obs),
            Quantity::Field => field_value(&scn, obs)?,
            Quantity::FieldDb => {
                let mut db = power_db(field_value(&scn, obs)?);
                if let Some(sigma) = args.noise {
                    let u1: f64 = rng.gen();
                    let u2: f64 = rng.gen();
                    db += sigma * (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos();
                }
                db
            }
        };
        writeln!(out, "{theta_deg:.12e},{phi_deg:.12e},{value:.12e}").expect("string write");
    }
    emit(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn pattern_value(scn: &Resolved, obs: &Direction) -> f64 {
    match scn.model {
        ModelKind::Legacy => pattern_legacy(&scn.incidence, obs, scn.alpha_r as u32),
        ModelKind::Rer => pattern_rer(&scn.incidence, obs, scn.alpha_r),
        ModelKind::Double => {
            pattern_double(&scn.incidence, obs, scn.alpha_r, scn.alpha_i, scn.lambda)
        }
    }
}

fn field_value(scn: &Resolved, obs: Direction) -> Result<f64> {
    let geom = scn.geometry(obs)?;
    Ok(match scn.model {
        ModelKind::Legacy => e_s_squared_legacy(&geom, &scn.source, &scn.parameters)?,
        ModelKind::Rer => e_s_squared_rer(&geom, &scn.source, &scn.parameters),
        ModelKind::Double => e_s_squared_double(&geom, &scn.source, &scn.parameters),
    })
}

// ---------------------------------------------------------------------------
// normalization

#[derive(Serialize)]
struct NormalizationReport {
    alpha_r: u32,
    theta_i_deg: f64,
    closed_form: f64,
    quadrature_legacy: f64,
    rel_diff_closed: f64,
    k_exact: f64,
    k_interp: f64,
    separable_approx: f64,
    quadrature_reciprocal: f64,
    rel_diff_separable: f64,
    converged: bool,
}

fn cmd_normalization(args: NormalizationArgs) -> Result<ExitCode> {
    if !(args.theta_i >= 0.0 && args.theta_i < 90.0) {
        bail!("--theta-i must lie in [0, 90) degrees, got {}", args.theta_i);
    }
    let inc = Direction::from_degrees(args.theta_i, 0.0)?;
    let spec = QuadratureSpec::default();
    let alpha = args.alpha_r;

    let closed = f_alpha_closed(inc.theta(), alpha)?;
    let legacy = integrate_pattern(|i, o| pattern_legacy(i, o, alpha), &inc, &spec);
    let reciprocal = integrate_pattern(|i, o| pattern_rer(i, o, f64::from(alpha)), &inc, &spec);
    let k_exact = k_alpha_exact(alpha);
    let separable = k_exact * inc.theta().cos().sqrt();

    let report = NormalizationReport {
        alpha_r: alpha,
        theta_i_deg: args.theta_i,
        closed_form: closed,
        quadrature_legacy: legacy.value,
        rel_diff_closed: (legacy.value - closed) / closed,
        k_exact,
        k_interp: k_alpha_interp(f64::from(alpha))?,
        separable_approx: separable,
        quadrature_reciprocal: reciprocal.value,
        rel_diff_separable: (reciprocal.value - separable) / separable,
        converged: legacy.converged && reciprocal.converged,
    };

    if args.json {
        print!("{}", to_json(&report));
    } else {
        let mut text = String::new();
        writeln!(text, "alpha_r: {}", report.alpha_r).expect("string write");
        writeln!(text, "theta_i_deg: {:.12e}", report.theta_i_deg).expect("string write");
        writeln!(text, "closed_form: {:.12e}", report.closed_form).expect("string write");
        writeln!(text, "quadrature_legacy: {:.12e}", report.quadrature_legacy)
            .expect("string write");
        writeln!(text, "rel_diff_closed: {:.12e}", report.rel_diff_closed).expect("string write");
        writeln!(text, "k_exact: {:.12e}", report.k_exact).expect("string write");
        writeln!(text, "k_interp: {:.12e}", report.k_interp).expect("string write");
        writeln!(text, "separable_approx: {:.12e}", report.separable_approx)
            .expect("string write");
        writeln!(
            text,
            "quadrature_reciprocal: {:.12e}",
            report.quadrature_reciprocal
        )
        .expect("string write");
        writeln!(text, "rel_diff_separable: {:.12e}", report.rel_diff_separable)
            .expect("string write");
        writeln!(text, "converged: {}", report.converged).expect("string write");
        print!("{text}");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct WorstJson {
    theta_i_deg: f64,
    phi_i_deg: f64,
    theta_s_deg: f64,
    phi_s_deg: f64,
    r_i_m: f64,
    r_s_m: f64,
    ds_m2: f64,
    forward: f64,
    reversed: f64,
}

#[derive(Serialize)]
struct ReciprocityJson {
    model: &'static str,
    samples: usize,
    seed: u64,
    bound: f64,
    max_rel_defect: f64,
    worst: Option<WorstJson>,
    pass: bool,
}

fn cmd_verify_reciprocity(args: ReciprocityArgs) -> Result<ExitCode> {
    let scn = args.scenario.resolve()?;
    let report = reciprocity_sweep(
        scn.field_model(),
        &scn.parameters,
        &scn.source,
        args.samples,
        args.seed,
    )?;
    let pass = report.max_rel_defect <= args.bound;
    let worst = report.worst.map(|w| WorstJson {
        theta_i_deg: w.geometry.incidence().theta().to_degrees(),
        phi_i_deg: w.geometry.incidence().phi().to_degrees(),
        theta_s_deg: w.geometry.observation().theta().to_degrees(),
        phi_s_deg: w.geometry.observation().phi().to_degrees(),
        r_i_m: w.geometry.r_i(),
        r_s_m: w.geometry.r_s(),
        ds_m2: w.geometry.ds(),
        forward: w.forward,
        reversed: w.reversed,
    });
    let json = ReciprocityJson {
        model: scn.model.name(),
        samples: report.samples,
        seed: args.seed,
        bound: args.bound,
        max_rel_defect: report.max_rel_defect,
        worst,
        pass,
    };
    print!("{}", to_json(&json));
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        let place = report
            .worst
            .map(|w| {
                format!(
                    " (worst at theta_i = {:.12e} deg, theta_s = {:.12e} deg)",
                    w.geometry.incidence().theta().to_degrees(),
                    w.geometry.observation().theta().to_degrees()
                )
            })
            .unwrap_or_default();
        eprintln!(
            "verify reciprocity: max relative defect {:.12e} exceeds bound {:.12e}{place}",
            report.max_rel_defect, args.bound
        );
        Ok(ExitCode::from(1))
    }
}

#[derive(Serialize)]
struct AnomalyJson {
    theta_i: f64,
    delta_rel: f64,
    gamma_used: f64,
    f_quadrature: f64,
    f_approx: f64,
}

#[derive(Serialize)]
struct PowerBalanceJson {
    alpha_r: u32,
    s: f64,
    eps_r: f64,
    polarization: &'static str,
    theta_max_deg: f64,
    step_deg: f64,
    bound: f64,
    max_abs_delta_rel: f64,
    first_violation_theta_i_deg: Option<f64>,
    pass: bool,
    points: Vec<AnomalyJson>,
}

fn cmd_verify_power_balance(args: PowerBalanceArgs) -> Result<ExitCode> {
    let scn = args.scenario.resolve()?;
    let Some(eps_r) = scn.eps_r else {
        bail!("power-balance verification needs a permittivity: pass --eps-r (or eps_r in the scenario)");
    };
    if scn.alpha_r.fract() != 0.0 || !(0.0..=f64::from(u32::MAX)).contains(&scn.alpha_r) {
        bail!(
            "power-balance verification needs a nonnegative integer alpha_r, got {}",
            scn.alpha_r
        );
    }
    if !(args.theta_max >= 0.0 && args.theta_max < 90.0) {
        bail!("--theta-max must lie in [0, 90) degrees, got {}", args.theta_max);
    }
    let grid_deg = degree_grid(args.theta_max, args.step)?;
    let grid_rad: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    // Looser than the default oracle tolerance: the anomaly bound itself is
    // 1e-2, so 1e-7 on the integral is already far below the noise floor of
    // the comparison and keeps the sweep fast.
    let spec = QuadratureSpec::new(8, 16, 1e-7)?;
    let reports = power_balance_anomaly(
        scn.alpha_r as u32,
        scn.s,
        eps_r,
        scn.pol,
        &grid_rad,
        &spec,
    )?;

    let mut max_abs = 0.0f64;
    let mut first_violation = None;
    let mut points = Vec::with_capacity(reports.len());
    for (r, &deg) in reports.iter().zip(&grid_deg) {
        max_abs = max_abs.max(r.delta_rel.abs());
        if first_violation.is_none() && r.delta_rel.abs() > args.bound {
            first_violation = Some(deg);
        }
        points.push(AnomalyJson {
            theta_i: deg,
            delta_rel: r.delta_rel,
            gamma_used: r.gamma_used,
            f_quadrature: r.f_quadrature,
            f_approx: r.f_approx,
        });
    }
    let pass = first_violation.is_none();
    let json = PowerBalanceJson {
        alpha_r: scn.alpha_r as u32,
        s: scn.s,
        eps_r,
        polarization: scn.pol_name,
        theta_max_deg: args.theta_max,
        step_deg: args.step,
        bound: args.bound,
        max_abs_delta_rel: max_abs,
        first_violation_theta_i_deg: first_violation,
        pass,
        points,
    };
    print!("{}", to_json(&json));
    if let Some(theta) = first_violation {
        eprintln!(
            "verify power-balance: |delta_rel| exceeds bound {:.12e} first at theta_i = {:.12e} deg",
            args.bound, theta
        );
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

#[derive(Serialize)]
struct SignPointJson {
    theta_i: f64,
    f_psi_r: f64,
    f_psi_i: f64,
    rel_diff: f64,
}

#[derive(Serialize)]
struct SignCheckJson {
    alpha_r: u32,
    theta_max_deg: f64,
    step_deg: f64,
    bound: f64,
    max_rel_diff: f64,
    pass: bool,
    points: Vec<SignPointJson>,
}

fn cmd_verify_sign_check(args: SignCheckArgs) -> Result<ExitCode> {
    if !(args.theta_max >= 0.0 && args.theta_max < 90.0) {
        bail!("--theta-max must lie in [0, 90) degrees, got {}", args.theta_max);
    }
    let grid_deg = degree_grid(args.theta_max, args.step)?;
    let grid_rad: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let spec = QuadratureSpec::default();
    let report = double_lobe_sign_check(args.alpha_r, &grid_rad, &spec)?;

    let points: Vec<SignPointJson> = report
        .points
        .iter()
        .zip(&grid_deg)
        .map(|(p, &deg)| SignPointJson {
            theta_i: deg,
            f_psi_r: p.f_psi_r,
            f_psi_i: p.f_psi_i,
            rel_diff: p.rel_diff,
        })
        .collect();
    let pass = report.max_rel_diff <= args.bound;
    let first_violation = report
        .points
        .iter()
        .zip(&grid_deg)
        .find(|(p, _)| p.rel_diff > args.bound)
        .map(|(_, &deg)| deg);
    let json = SignCheckJson {
        alpha_r: args.alpha_r,
        theta_max_deg: args.theta_max,
        step_deg: args.step,
        bound: args.bound,
        max_rel_diff: report.max_rel_diff,
        pass,
        points,
    };
    print!("{}", to_json(&json));
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        let theta = first_violation.unwrap_or(0.0);
        eprintln!(
            "verify sign-check: relative difference exceeds bound {:.12e} first at theta_i = {:.12e} deg",
            args.bound, theta
        );
        Ok(ExitCode::from(1))
    }
}

// ---------------------------------------------------------------------------
// fit

#[derive(Serialize)]
struct FitJson {
    s: f64,
    alpha_r: f64,
    alpha_i: Option<f64>,
    lambda: Option<f64>,
    rmse_db: f64,
    iterations: usize,
    converged: bool,
    objective_history: Vec<f64>,
    restart_spread: Vec<f64>,
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode> {
    let scn = args.scenario.resolve()?;
    if scn.model == ModelKind::Legacy {
        bail!("the legacy model is not fitted; pass --model rer or --model double");
    }
    if args.starts == 0 {
        bail!("--starts must be at least 1");
    }
    let samples = read_samples(&args.input)?;
    let template = scn.geometry(scn.incidence)?;
    let opts = FitOptions {
        gamma: scn.gamma,
        seed: args.seed,
        starts: args.starts,
        round_alpha: args.round_alpha,
        ..FitOptions::default()
    };
    let result = match scn.model {
        ModelKind::Rer => fit_single_lobe(&samples, &template, &scn.source, &opts)?,
        ModelKind::Double => fit_double_lobe(&samples, &template, &scn.source, &opts)?,
        ModelKind::Legacy => unreachable!("rejected above"),
    };
    let json = FitJson {
        s: result.s,
        alpha_r: result.alpha_r,
        alpha_i: result.alpha_i,
        lambda: result.lambda,
        rmse_db: result.rmse_db,
        iterations: result.iterations,
        converged: result.converged,
        objective_history: result.objective_history.clone(),
        restart_spread: result.restart_spread.clone(),
    };
    print!("{}", to_json(&json));
    if result.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "fit did not converge: restarts disagree or the iteration budget ran out (rmse {:.12e} dB)",
            result.rmse_db
        );
        Ok(ExitCode::from(1))
    }
}

fn read_samples(path: &Path) -> Result<Vec<PatternSample>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read input CSV `{}`", path.display()))?;
    let mut lines = text.lines().enumerate();
    let Some((_, first)) = lines.next() else {
        bail!("{}: input CSV is empty", path.display());
    };
    let header = first.trim_end_matches('\r');
    if header != "theta_s_deg,phi_s_deg,power_db" {
        bail!(
            "{}:1: expected header `theta_s_deg,phi_s_deg,power_db`, got `{header}`",
            path.display()
        );
    }
    let mut samples = Vec::new();
    for (index, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let n = index + 1;
        let mut fields = line.split(',');
        let (Some(t), Some(p), Some(v), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            bail!(
                "{}:{n}: expected 3 comma-separated fields, got `{line}`",
                path.display()
            );
        };
        let theta = parse_field(path, n, "theta_s_deg", t)?;
        let phi = parse_field(path, n, "phi_s_deg", p)?;
        let db = parse_field(path, n, "power_db", v)?;
        let obs = Direction::from_degrees(theta, phi)
            .map_err(|e| anyhow::anyhow!("{}:{n}: {e}", path.display()))?;
        let sample = PatternSample::new(obs, db)
            .map_err(|e| anyhow::anyhow!("{}:{n}: {e}", path.display()))?;
        samples.push(sample);
    }
    Ok(samples)
}

fn parse_field(path: &Path, line: usize, name: &str, text: &str) -> Result<f64> {
    text.trim().parse().map_err(|_| {
        anyhow::anyhow!(
            "{}:{line}: column {name} is not a number: `{text}`",
            path.display()
        )
    })
}

// ---------------------------------------------------------------------------
// shared plumbing

#[derive(Clone, Debug)]
struct GridSpec {
    n_theta: usize,
    n_phi: usize,
}

fn parse_grid_spec(text: &str) -> Result<GridSpec, String> {
    let Some((t, p)) = text.split_once(['x', 'X']) else {
        return Err(format!("expected THETAxPHI node counts, e.g. 19x36, got `{text}`"));
    };
    let n_theta: usize = t
        .parse()
        .map_err(|_| format!("bad elevation count `{t}`"))?;
    let n_phi: usize = p.parse().map_err(|_| format!("bad azimuth count `{p}`"))?;
    if n_theta < 2 {
        return Err("the grid needs at least 2 elevation rows".into());
    }
    if n_phi == 0 {
        return Err("the grid needs at least 1 azimuth column".into());
    }
    if n_theta.saturating_mul(n_phi) > 10_000_000 {
        return Err("grid larger than 10 million nodes".into());
    }
    Ok(GridSpec { n_theta, n_phi })
}

/// Ascending degree grid `0, step, 2 step, ..., max`, with the endpoint
/// forced to `max` exactly so grazing rows carry the exact boundary value.
fn degree_grid(max_deg: f64, step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg.is_finite() && step_deg > 0.0) {
        bail!("--step must be a positive number of degrees, got {step_deg}");
    }
    let count = (max_deg / step_deg).round();
    if ((count * step_deg) - max_deg).abs() > 1e-9 * max_deg.max(1.0) {
        bail!("--step {step_deg} does not divide the sweep range 0..{max_deg} degrees");
    }
    if count > 4_000_000.0 {
        bail!("--step {step_deg} makes the sweep longer than 4 million points");
    }
    let n = count as usize;
    Ok((0..=n)
        .map(|j| if j == n { max_deg } else { j as f64 * step_deg })
        .collect())
}

fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content)
            .with_context(|| format!("cannot write output file `{}`", p.display())),
        None => {
            io::stdout()
                .write_all(content.as_bytes())
                .context("writing to stdout")?;
            Ok(())
        }
    }
}

/// JSON with every float printed as `{:.12e}`: deterministic, diffable, and
/// still plain JSON numbers. Key order follows the struct declarations.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.12e}")
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("report serialization is infallible");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serializer emits UTF-8")
}
