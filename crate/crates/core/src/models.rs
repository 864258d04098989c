//! The lobe-pattern family and its scattered-field magnitudes.
//!
//! Three models share one parameter set. The legacy single-lobe model shapes
//! the diffusely scattered power as `((1 + cos(psi_r)) / 2)^alpha_r` around
//! the specular direction and normalizes it with a closed-form hemispherical
//! integral that depends on the incidence angle; its field is not invariant
//! under exchange of transmitter and receiver. The reciprocal single-lobe
//! model weights the same lobe by `sqrt(cos(theta_s))`, which makes the
//! normalization separable — a constant `k(alpha_r)` times `sqrt(cos(theta_i))`
//! — and the field exchange-invariant. The reciprocal double-lobe model adds
//! a second lobe around the incidence direction, split by a factor `lambda`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{cos_psi_i, cos_psi_r, Direction, ScatterGeometry};
use crate::specfun;

/// Whether the diffuse lobe amplitude carries the reflection modulus.
///
/// By default scattering is taken out of the specularly reflected power, so
/// the lobe amplitude is proportional to the reflection modulus `gamma`; the
/// alternative decouples the two and substitutes a unit factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UMode {
    Gamma,
    Unit,
}

/// Scattering parameters shared by all three models.
///
/// `s` is the scattering coefficient in `[0, 1]` (`s^2` is the power
/// fraction diverted from reflection), `alpha_r` and `alpha_i` are the
/// forward- and backscatter-lobe exponents, `lambda` in `[0, 1]` splits the
/// scattered power between the two lobes, and `gamma` is the modulus of the
/// reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErParameters {
    s: f64,
    alpha_r: f64,
    alpha_i: f64,
    lambda: f64,
    gamma: f64,
    u_mode: UMode,
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NotFinite { name, value });
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(value)
}

fn check_exponent(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NotFinite { name, value });
    }
    if value < 0.0 {
        return Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(value)
}

impl ErParameters {
    /// Parameters for the single-lobe models; the backscatter lobe is
    /// disabled (`lambda = 1`, `alpha_i = alpha_r`).
    pub fn single_lobe(s: f64, alpha_r: f64, gamma: f64) -> Result<Self> {
        let s = check_unit_interval("s", s)?;
        let alpha_r = check_exponent("alpha_r", alpha_r)?;
        let gamma = check_unit_interval("gamma", gamma)?;
        Ok(Self {
            s,
            alpha_r,
            alpha_i: alpha_r,
            lambda: 1.0,
            gamma,
            u_mode: UMode::Gamma,
        })
    }

    /// Parameters for the double-lobe model.
    pub fn double_lobe(s: f64, alpha_r: f64, alpha_i: f64, lambda: f64, gamma: f64) -> Result<Self> {
        let s = check_unit_interval("s", s)?;
        let alpha_r = check_exponent("alpha_r", alpha_r)?;
        let alpha_i = check_exponent("alpha_i", alpha_i)?;
        let lambda = check_unit_interval("lambda", lambda)?;
        let gamma = check_unit_interval("gamma", gamma)?;
        Ok(Self {
            s,
            alpha_r,
            alpha_i,
            lambda,
            gamma,
            u_mode: UMode::Gamma,
        })
    }

    /// Replaces the amplitude coupling mode; see [`UMode`].
    pub fn with_u_mode(mut self, u_mode: UMode) -> Self {
        self.u_mode = u_mode;
        self
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha_r(&self) -> f64 {
        self.alpha_r
    }

    pub fn alpha_i(&self) -> f64 {
        self.alpha_i
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn u_mode(&self) -> UMode {
        self.u_mode
    }

    /// The amplitude factor actually applied to the lobe: `gamma` in the
    /// default mode, `1` when the coupling to reflection is released.
    pub fn effective_gamma(&self) -> f64 {
        match self.u_mode {
            UMode::Gamma => self.gamma,
            UMode::Unit => 1.0,
        }
    }

    /// Attenuation `sqrt(1 - s^2)` left for the specular reflection once a
    /// fraction `s^2` of its power has been diverted into scattering.
    pub fn reflection_reduction(&self) -> f64 {
        (1.0 - self.s * self.s).sqrt()
    }
}

/// Source strength, reduced to the single amplitude constant `k_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParameters {
    k_i: f64,
}

impl SourceParameters {
    /// From transmit power (watts, strictly positive) and dimensionless gain
    /// in the incidence direction: `k_i = sqrt(60 p_t g_t)`.
    pub fn from_power_gain(p_t: f64, g_t: f64) -> Result<Self> {
        if !p_t.is_finite() {
            return Err(Error::NotFinite {
                name: "p_t",
                value: p_t,
            });
        }
        if p_t <= 0.0 {
            return Err(Error::NotPositive {
                name: "p_t",
                value: p_t,
            });
        }
        if !g_t.is_finite() {
            return Err(Error::NotFinite {
                name: "g_t",
                value: g_t,
            });
        }
        if g_t < 0.0 {
            return Err(Error::OutOfRange {
                name: "g_t",
                value: g_t,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self {
            k_i: (60.0 * p_t * g_t).sqrt(),
        })
    }

    /// Directly from the amplitude constant.
    pub fn from_amplitude(k_i: f64) -> Result<Self> {
        if !k_i.is_finite() {
            return Err(Error::NotFinite {
                name: "k_i",
                value: k_i,
            });
        }
        if k_i < 0.0 {
            return Err(Error::OutOfRange {
                name: "k_i",
                value: k_i,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self { k_i })
    }

    pub fn k_i(&self) -> f64 {
        self.k_i
    }
}

/// `2^n` as an `f64`; exact for every exponent that can arise here.
fn two_pow(n: u32) -> f64 {
    2f64.powi(n as i32)
}

fn pow_u32(base: f64, exp: u32) -> f64 {
    // powi keeps the 0^0 = 1 convention the closed-form sums assume.
    if exp <= i32::MAX as u32 {
        base.powi(exp as i32)
    } else {
        base.powf(f64::from(exp))
    }
}

/// The raw lobe shape `((1 + cos_psi) / 2)^alpha`.
fn lobe_shape(cos_psi: f64, alpha: f64) -> f64 {
    ((1.0 + cos_psi) / 2.0).powf(alpha)
}

/// Legacy single-lobe pattern `((1 + cos(psi_r)) / 2)^alpha_r`, in `[0, 1]`
/// and equal to `1` exactly in the specular direction.
///
/// The exponent is restricted to integers because the legacy closed-form
/// normalization only exists there; the signature enforces it.
pub fn pattern_legacy(inc: &Direction, obs: &Direction, alpha_r: u32) -> f64 {
    pow_u32((1.0 + cos_psi_r(inc, obs)) / 2.0, alpha_r)
}

/// Hemispherical normalization integral of the legacy pattern, evaluated in
/// closed form:
///
/// `F(theta_i) = (2 pi alpha_r! / 2^alpha_r) * sum_j sum_l
///     cos^(j-2l)(theta_i) sin^(2l)(theta_i)
///     / ((alpha_r-j)! (j+1)!! 2^l l! (j-2l)!!)`
///
/// with `j` running over `0..=alpha_r` and `l` over `0..=j/2`, and with the
/// convention `0^0 = 1` at normal incidence. Defined for
/// `theta_i` in `[0, pi/2)`; the sum is evaluated directly for
/// `alpha_r <= 20` and in the log domain beyond, where the factorials
/// overflow.
pub fn f_alpha_closed(theta_i: f64, alpha_r: u32) -> Result<f64> {
    if !theta_i.is_finite() {
        return Err(Error::NotFinite {
            name: "theta_i",
            value: theta_i,
        });
    }
    if theta_i == FRAC_PI_2 {
        return Err(Error::GrazingIncidence);
    }
    if !(0.0..FRAC_PI_2).contains(&theta_i) {
        return Err(Error::ElevationOutOfRange(theta_i));
    }
    let cos_t = theta_i.cos();
    let sin_t = theta_i.sin();

    if alpha_r <= 20 {
        let mut outer = 0.0;
        for j in 0..=alpha_r {
            let mut inner = 0.0;
            for l in 0..=j / 2 {
                inner += pow_u32(cos_t, j - 2 * l) * pow_u32(sin_t, 2 * l)
                    / (two_pow(l)
                        * specfun::factorial(l).value()
                        * specfun::double_factorial(j - 2 * l).value());
            }
            outer += inner
                / (specfun::factorial(alpha_r - j).value()
                    * specfun::double_factorial(j + 1).value());
        }
        return Ok(2.0 * PI * specfun::factorial(alpha_r).value() / two_pow(alpha_r) * outer);
    }

    // Log-domain path. Every term is nonnegative and the total is bounded by
    // the hemisphere solid angle, so the exponentials cannot overflow and a
    // plain sum is stable.
    let ln_cos = cos_t.ln();
    let ln_prefix =
        (2.0 * PI).ln() + specfun::ln_factorial(alpha_r) - f64::from(alpha_r) * LN_2;
    let mut total = 0.0;
    for j in 0..=alpha_r {
        let ln_outer = specfun::ln_factorial(alpha_r - j) + specfun::ln_double_factorial(j + 1);
        for l in 0..=j / 2 {
            let cos_exp = j - 2 * l;
            let sin_exp = 2 * l;
            if sin_exp > 0 && sin_t == 0.0 {
                continue;
            }
            let mut ln_term = ln_prefix
                - ln_outer
                - (f64::from(l) * LN_2
                    + specfun::ln_factorial(l)
                    + specfun::ln_double_factorial(cos_exp));
            // Skipping zero exponents keeps the 0^0 = 1 convention explicit.
            if cos_exp > 0 {
                ln_term += f64::from(cos_exp) * ln_cos;
            }
            if sin_exp > 0 {
                ln_term += f64::from(sin_exp) * sin_t.ln();
            }
            total += ln_term.exp();
        }
    }
    Ok(total)
}

fn alpha_as_integer(alpha: f64) -> Result<u32> {
    if alpha.fract() != 0.0 {
        return Err(Error::NonIntegerExponent(alpha));
    }
    if !(0.0..=f64::from(u32::MAX)).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha_r",
            value: alpha,
            lo: 0.0,
            hi: f64::from(u32::MAX),
        });
    }
    Ok(alpha as u32)
}

/// Squared magnitude of the field scattered by one surface element under
/// the legacy model:
///
/// `|E_s|^2 = (k_i s / (r_i r_s))^2 gamma^2 ds cos(theta_i) / F(theta_i)
///            * ((1 + cos(psi_r)) / 2)^alpha_r`
///
/// Grazing incidence captures no power, so `theta_i = pi/2` yields `0`
/// rather than tripping the normalization's domain error. The exponent must
/// be a nonnegative integer.
pub fn e_s_squared_legacy(
    geom: &ScatterGeometry,
    src: &SourceParameters,
    par: &ErParameters,
) -> Result<f64> {
    let alpha = alpha_as_integer(par.alpha_r())?;
    let theta_i = geom.incidence().theta();
    if theta_i >= FRAC_PI_2 {
        return Ok(0.0);
    }
    let f_norm = f_alpha_closed(theta_i, alpha)?;
    let amplitude = src.k_i() * par.s() / (geom.r_i() * geom.r_s());
    let u = par.effective_gamma();
    Ok(amplitude * amplitude * u * u * geom.ds() * theta_i.cos() / f_norm
        * pattern_legacy(geom.incidence(), geom.observation(), alpha))
}

/// Reciprocal single-lobe pattern `sqrt(cos(theta_s)) ((1+cos(psi_r))/2)^alpha_r`,
/// in `[0, 1]` and exactly `0` at grazing observation.
///
/// Real (non-integer) exponents are allowed here; only the closed-form
/// normalizations are integer-bound.
pub fn pattern_rer(inc: &Direction, obs: &Direction, alpha_r: f64) -> f64 {
    if obs.theta() >= FRAC_PI_2 {
        return 0.0;
    }
    obs.theta().cos().sqrt() * lobe_shape(cos_psi_r(inc, obs), alpha_r)
}

/// Reciprocal double-lobe pattern: the `sqrt(cos(theta_s))`-weighted convex
/// combination of a forward lobe around the specular direction and a
/// backscatter lobe around the incidence direction,
///
/// `sqrt(cos(theta_s)) * (lambda ((1+cos(psi_r))/2)^alpha_r
///                        + (1-lambda) ((1+cos(psi_i))/2)^alpha_i)`,
///
/// in `[0, 1]` and exactly `0` at grazing observation. With `lambda = 1` it
/// reduces to [`pattern_rer`] exactly.
pub fn pattern_double(
    inc: &Direction,
    obs: &Direction,
    alpha_r: f64,
    alpha_i: f64,
    lambda: f64,
) -> f64 {
    if obs.theta() >= FRAC_PI_2 {
        return 0.0;
    }
    obs.theta().cos().sqrt()
        * (lambda * lobe_shape(cos_psi_r(inc, obs), alpha_r)
            + (1.0 - lambda) * lobe_shape(cos_psi_i(inc, obs), alpha_i))
}

/// Normalization constant of the reciprocal lobe at normal incidence:
///
/// `k(alpha_r) = (4 pi / 2^alpha_r) * sum_j C(alpha_r, j) / (2 j + 3)`.
///
/// Exact binomials are used through `alpha_r = 62`; beyond that the terms
/// are combined in the log domain (each addend is positive and below the
/// total, so plain summation of the exponentials is safe).
pub fn k_alpha_exact(alpha_r: u32) -> f64 {
    if alpha_r <= 62 {
        let mut sum = 0.0;
        for j in 0..=alpha_r {
            let c = specfun::binomial(alpha_r, j)
                .expect("j <= alpha_r by construction")
                .value();
            sum += c / f64::from(2 * j + 3);
        }
        4.0 * PI / two_pow(alpha_r) * sum
    } else {
        let ln_scale = (4.0 * PI).ln() - f64::from(alpha_r) * LN_2;
        let mut sum = 0.0;
        for j in 0..=alpha_r {
            let b = specfun::binomial(alpha_r, j).expect("j <= alpha_r by construction");
            sum += (b.log_magnitude() + ln_scale).exp() / f64::from(2 * j + 3);
        }
        sum
    }
}

/// Interpolating fit of `k(alpha_r)` for real exponents:
///
/// `1 / (0.003128 alpha^2 + 0.05675 alpha + 0.2387)` for `0 <= alpha <= 4`,
/// `1 / (0.07937 alpha + 0.1745)` for `alpha > 4`.
///
/// The two branches are kept verbatim, including their small mismatch at
/// `alpha = 4` (about 1.939 against 2.033); the quadratic branch owns the
/// boundary. Stays within 3 % of [`k_alpha_exact`] on integer exponents up
/// to 20.
pub fn k_alpha_interp(alpha_r: f64) -> Result<f64> {
    check_exponent("alpha_r", alpha_r)?;
    Ok(k_alpha_interp_unchecked(alpha_r))
}

fn k_alpha_interp_unchecked(alpha_r: f64) -> f64 {
    if alpha_r <= 4.0 {
        1.0 / (0.003128 * alpha_r * alpha_r + 0.05675 * alpha_r + 0.2387)
    } else {
        1.0 / (0.07937 * alpha_r + 0.1745)
    }
}

/// `k(alpha_r)` for any nonnegative exponent: the exact sum when the
/// exponent is an integer, the interpolating fit otherwise.
pub fn k_alpha(alpha_r: f64) -> Result<f64> {
    check_exponent("alpha_r", alpha_r)?;
    Ok(k_alpha_dispatch(alpha_r))
}

pub(crate) fn k_alpha_dispatch(alpha_r: f64) -> f64 {
    if alpha_r.fract() == 0.0 && alpha_r <= f64::from(u32::MAX) {
        k_alpha_exact(alpha_r as u32)
    } else {
        k_alpha_interp_unchecked(alpha_r)
    }
}

/// Shared amplitude factor of the reciprocal models:
/// `(k_i s / (r_i r_s))^2 gamma^2 ds sqrt(cos(theta_i) cos(theta_s))`.
///
/// Every factor is symmetric under exchange of the two directions (the
/// distances enter through their product), which is what makes the
/// reciprocal fields exchange-invariant bit for bit.
fn reciprocal_prefactor(
    geom: &ScatterGeometry,
    src: &SourceParameters,
    par: &ErParameters,
) -> f64 {
    let amplitude = src.k_i() * par.s() / (geom.r_i() * geom.r_s());
    let u = par.effective_gamma();
    amplitude
        * amplitude
        * u
        * u
        * geom.ds()
        * (geom.incidence().theta().cos() * geom.observation().theta().cos()).sqrt()
}

/// Squared field magnitude of the reciprocal single-lobe model:
///
/// `|E_s|^2 = (k_i s / (r_i r_s))^2 gamma^2 ds / k(alpha_r)
///            * sqrt(cos(theta_i) cos(theta_s)) ((1+cos(psi_r))/2)^alpha_r`.
///
/// Returns `0` at grazing incidence or observation; exchange of the two
/// directions reproduces the same value exactly.
pub fn e_s_squared_rer(
    geom: &ScatterGeometry,
    src: &SourceParameters,
    par: &ErParameters,
) -> f64 {
    if geom.incidence().theta() >= FRAC_PI_2 || geom.observation().theta() >= FRAC_PI_2 {
        return 0.0;
    }
    let forward = lobe_shape(cos_psi_r(geom.incidence(), geom.observation()), par.alpha_r())
        / k_alpha_dispatch(par.alpha_r());
    reciprocal_prefactor(geom, src, par) * forward
}

/// Squared field magnitude of the reciprocal double-lobe model: the forward
/// lobe of [`e_s_squared_rer`] with weight `lambda` plus a backscatter lobe
/// around the incidence direction with weight `1 - lambda`, each normalized
/// by its own `k(alpha)`.
///
/// With `lambda = 1` this reduces to the single-lobe value exactly; both
/// lobes use exchange-symmetric kernels, so the double-lobe field is
/// reciprocal by construction.
pub fn e_s_squared_double(
    geom: &ScatterGeometry,
    src: &SourceParameters,
    par: &ErParameters,
) -> f64 {
    if geom.incidence().theta() >= FRAC_PI_2 || geom.observation().theta() >= FRAC_PI_2 {
        return 0.0;
    }
    let forward = lobe_shape(cos_psi_r(geom.incidence(), geom.observation()), par.alpha_r())
        / k_alpha_dispatch(par.alpha_r());
    let backward = lobe_shape(cos_psi_i(geom.incidence(), geom.observation()), par.alpha_i())
        / k_alpha_dispatch(par.alpha_i());
    reciprocal_prefactor(geom, src, par)
        * (par.lambda() * forward + (1.0 - par.lambda()) * backward)
}
