//! Scenario resolution: key-value files plus command-line overrides.
//!
//! A scenario bundles everything the field models need — model choice,
//! roughness and lobe parameters, the reflection modulus (directly through a
//! permittivity), the source, and the illuminated-element geometry. Runs
//! with many knobs read naturally from a small text file:
//!
//! ```text
//! # double-lobe plasterboard panel
//! model = double
//! s = 0.35
//! alpha_r = 4
//! alpha_i = 2
//! lambda = 0.8
//! eps_r = 5
//! polarization = TE
//! theta_i_deg = 30
//! ```
//!
//! Every command-line flag overrides the corresponding file key, and
//! defaults fill whatever remains: the reciprocal single-lobe model with
//! `s = 1`, `alpha_r = 1`, unit amplitude, unit distances and element area,
//! normal incidence, and a reflection modulus of 1 when no permittivity is
//! given.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::builder::PossibleValue;
use clap::{Args, ValueEnum};
use er_scatter::oracle::{fresnel_gamma, FieldModel, Polarization};
use er_scatter::{Direction, ErParameters, ScatterGeometry, SourceParameters};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Non-reciprocal effective-roughness model.
    Legacy,
    /// Reciprocal single-lobe model.
    Rer,
    /// Reciprocal double-lobe model (forward plus backscatter).
    Double,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Legacy => "legacy",
            ModelKind::Rer => "rer",
            ModelKind::Double => "double",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolArg {
    Te,
    Tm,
}

// Spelled in uppercase on the command line to match the usual notation;
// the lowercase forms are accepted as aliases.
impl ValueEnum for PolArg {
    fn value_variants<'a>() -> &'a [Self] {
        &[PolArg::Te, PolArg::Tm]
    }

    fn to_possible_value(&self) -> Option<PossibleValue> {
        Some(match self {
            PolArg::Te => PossibleValue::new("TE").alias("te"),
            PolArg::Tm => PossibleValue::new("TM").alias("tm"),
        })
    }
}

impl PolArg {
    pub fn to_core(self) -> Polarization {
        match self {
            PolArg::Te => Polarization::Te,
            PolArg::Tm => Polarization::Tm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolArg::Te => "TE",
            PolArg::Tm => "TM",
        }
    }
}

/// Model and surface description shared by the commands. Every flag is
/// optional; values come from the flag, else the scenario file, else the
/// default.
#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// Scenario file with `key = value` lines (flags override it).
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,

    /// Model family.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,

    /// Scattering coefficient S in [0, 1].
    #[arg(long)]
    pub s: Option<f64>,

    /// Width exponent of the forward (specular) lobe.
    #[arg(long)]
    pub alpha_r: Option<f64>,

    /// Width exponent of the backscatter lobe (double model only).
    #[arg(long)]
    pub alpha_i: Option<f64>,

    /// Forward-lobe weight in [0, 1] (double model only).
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Relative permittivity; sets the reflection modulus through the
    /// Fresnel coefficient at the incidence angle.
    #[arg(long)]
    pub eps_r: Option<f64>,

    /// Polarization used with --eps-r.
    #[arg(long, value_enum)]
    pub pol: Option<PolArg>,

    /// Incidence elevation in degrees.
    #[arg(long)]
    pub theta_i: Option<f64>,

    /// Incidence azimuth in degrees.
    #[arg(long)]
    pub phi_i: Option<f64>,
}

/// Fully resolved scenario: validated parameters, source, and geometry
/// template ready for the model functions.
pub struct Resolved {
    pub model: ModelKind,
    pub s: f64,
    pub alpha_r: f64,
    pub alpha_i: f64,
    pub lambda: f64,
    pub eps_r: Option<f64>,
    pub pol: Polarization,
    pub pol_name: &'static str,
    pub gamma: f64,
    pub phi_i_deg: f64,
    pub incidence: Direction,
    pub r_i: f64,
    pub r_s: f64,
    pub ds: f64,
    pub parameters: ErParameters,
    pub source: SourceParameters,
}

impl Resolved {
    pub fn geometry(&self, observation: Direction) -> Result<ScatterGeometry> {
        Ok(ScatterGeometry::new(
            self.incidence,
            observation,
            self.r_i,
            self.r_s,
            self.ds,
        )?)
    }

    pub fn field_model(&self) -> FieldModel {
        match self.model {
            ModelKind::Legacy => FieldModel::Legacy,
            ModelKind::Rer => FieldModel::Rer,
            ModelKind::Double => FieldModel::Double,
        }
    }
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.scenario {
            Some(path) => parse_scenario(path)?,
            None => FileValues::default(),
        };

        let model = self.model.or(file.model).unwrap_or(ModelKind::Rer);
        let s = self.s.or(file.s).unwrap_or(1.0);
        let alpha_r = self.alpha_r.or(file.alpha_r).unwrap_or(1.0);
        let alpha_i = self.alpha_i.or(file.alpha_i).unwrap_or(alpha_r);
        let lambda = self.lambda.or(file.lambda).unwrap_or(1.0);
        let eps_r = self.eps_r.or(file.eps_r);
        let pol = self.pol.or(file.polarization).unwrap_or(PolArg::Te);
        let theta_i_deg = self.theta_i.or(file.theta_i_deg).unwrap_or(0.0);
        let phi_i_deg = self.phi_i.or(file.phi_i_deg).unwrap_or(0.0);
        let r_i = file.r_i_m.unwrap_or(1.0);
        let r_s = file.r_s_m.unwrap_or(1.0);
        let ds = file.ds_m2.unwrap_or(1.0);

        if model == ModelKind::Legacy
            && (alpha_r.fract() != 0.0 || !(0.0..=f64::from(u32::MAX)).contains(&alpha_r))
        {
            bail!("the legacy model needs a nonnegative integer alpha_r, got {alpha_r}");
        }

        let incidence = Direction::from_degrees(theta_i_deg, phi_i_deg)?;
        let polarization = pol.to_core();
        let gamma = match eps_r {
            Some(e) => fresnel_gamma(incidence.theta(), e, polarization)?,
            None => 1.0,
        };

        let parameters = match model {
            ModelKind::Double => ErParameters::double_lobe(s, alpha_r, alpha_i, lambda, gamma)?,
            _ => ErParameters::single_lobe(s, alpha_r, gamma)?,
        };

        let source = match (file.k_i, file.p_t_w, file.g_t) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                bail!("the scenario gives both k_i and p_t_w/g_t; choose one source form")
            }
            (Some(k), None, None) => SourceParameters::from_amplitude(k)?,
            (None, Some(p), g) => SourceParameters::from_power_gain(p, g.unwrap_or(1.0))?,
            (None, None, Some(_)) => bail!("the scenario key g_t needs p_t_w next to it"),
            (None, None, None) => SourceParameters::from_amplitude(1.0)?,
        };

        Ok(Resolved {
            model,
            s,
            alpha_r,
            alpha_i,
            lambda,
            eps_r,
            pol: polarization,
            pol_name: pol.name(),
            gamma,
            phi_i_deg,
            incidence,
            r_i,
            r_s,
            ds,
            parameters,
            source,
        })
    }
}

#[derive(Default)]
struct FileValues {
    model: Option<ModelKind>,
    s: Option<f64>,
    alpha_r: Option<f64>,
    alpha_i: Option<f64>,
    lambda: Option<f64>,
    eps_r: Option<f64>,
    polarization: Option<PolArg>,
    p_t_w: Option<f64>,
    g_t: Option<f64>,
    k_i: Option<f64>,
    theta_i_deg: Option<f64>,
    phi_i_deg: Option<f64>,
    r_i_m: Option<f64>,
    r_s_m: Option<f64>,
    ds_m2: Option<f64>,
}

fn put<T>(slot: &mut Option<T>, key: &str, value: T, at: &str) -> Result<()> {
    if slot.is_some() {
        bail!("{at}: duplicate key `{key}`");
    }
    *slot = Some(value);
    Ok(())
}

fn put_number(slot: &mut Option<f64>, key: &str, text: &str, at: &str) -> Result<()> {
    let value: f64 = text
        .parse()
        .map_err(|_| anyhow!("{at}: key `{key}` needs a number, got `{text}`"))?;
    put(slot, key, value, at)
}

fn parse_scenario(path: &Path) -> Result<FileValues> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file `{}`", path.display()))?;
    let mut v = FileValues::default();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("{}:{}", path.display(), index + 1);
        let Some((key, value)) = line.split_once('=') else {
            bail!("{at}: expected `key = value`, got `{raw}`");
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "model" => {
                let m = match value {
                    "legacy" => ModelKind::Legacy,
                    "rer" => ModelKind::Rer,
                    "double" => ModelKind::Double,
                    _ => bail!("{at}: unknown model `{value}` (expected legacy, rer or double)"),
                };
                put(&mut v.model, key, m, &at)?;
            }
            "polarization" => {
                let p = if value.eq_ignore_ascii_case("TE") {
                    PolArg::Te
                } else if value.eq_ignore_ascii_case("TM") {
                    PolArg::Tm
                } else {
                    bail!("{at}: unknown polarization `{value}` (expected TE or TM)");
                };
                put(&mut v.polarization, key, p, &at)?;
            }
            "s" => put_number(&mut v.s, key, value, &at)?,
            "alpha_r" => put_number(&mut v.alpha_r, key, value, &at)?,
            "alpha_i" => put_number(&mut v.alpha_i, key, value, &at)?,
            "lambda" => put_number(&mut v.lambda, key, value, &at)?,
            "eps_r" => put_number(&mut v.eps_r, key, value, &at)?,
            "p_t_w" => put_number(&mut v.p_t_w, key, value, &at)?,
            "g_t" => put_number(&mut v.g_t, key, value, &at)?,
            "k_i" => put_number(&mut v.k_i, key, value, &at)?,
            "theta_i_deg" => put_number(&mut v.theta_i_deg, key, value, &at)?,
            "phi_i_deg" => put_number(&mut v.phi_i_deg, key, value, &at)?,
            "r_i_m" => put_number(&mut v.r_i_m, key, value, &at)?,
            "r_s_m" => put_number(&mut v.r_s_m, key, value, &at)?,
            "ds_m2" => put_number(&mut v.ds_m2, key, value, &at)?,
            _ => bail!("{at}: unknown key `{key}`"),
        }
    }
    Ok(v)
}
