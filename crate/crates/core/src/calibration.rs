//! Fits lobe parameters to measured angular pattern samples.
//!
//! The calibration mirrors how the models are used against measurements:
//! scattered power is expressed in dB on a relative scale, the misfit metric
//! is the root-mean-square of dB differences, and the scattering coefficient
//! `s`, the lobe exponents, and the power split `lambda` are searched inside
//! their natural boxes by a multi-start Nelder–Mead descent. The source
//! amplitude is held fixed: the field depends on `k_i` and `s` only through
//! their product, so fitting both would be degenerate.
//!
//! The objective evaluates the same public field functions the rest of the
//! crate exposes, so a reported `rmse_db` can always be recomputed from the
//! returned parameters and the input samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Direction, ScatterGeometry};
use crate::models::{e_s_squared_double, e_s_squared_rer, ErParameters, SourceParameters};

/// One calibration sample: an observation direction and the measured (or
/// synthesized) power there, in dB on any fixed relative scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSample {
    observation: Direction,
    power_db: f64,
}

impl PatternSample {
    pub fn new(observation: Direction, power_db: f64) -> Result<Self> {
        if !power_db.is_finite() {
            return Err(Error::NotFinite {
                name: "power_db",
                value: power_db,
            });
        }
        Ok(Self {
            observation,
            power_db,
        })
    }

    pub fn observation(&self) -> &Direction {
        &self.observation
    }

    pub fn power_db(&self) -> f64 {
        self.power_db
    }
}

/// Linear power to dB, with a floor that maps an exact zero (a grazing null,
/// or `s = 0`) to -3000 dB instead of negative infinity so dB arithmetic
/// stays finite.
pub fn power_db(value: f64) -> f64 {
    10.0 * value.max(1e-300).log10()
}

/// Root-mean-square difference of two dB sequences.
pub fn rmse_db(predicted: &[f64], measured: &[f64]) -> Result<f64> {
    if predicted.is_empty() || measured.is_empty() {
        return Err(Error::Empty);
    }
    if predicted.len() != measured.len() {
        return Err(Error::LengthMismatch(predicted.len(), measured.len()));
    }
    let sum_sq: f64 = predicted
        .iter()
        .zip(measured.iter())
        .map(|(p, m)| (p - m) * (p - m))
        .sum();
    Ok((sum_sq / predicted.len() as f64).sqrt())
}

/// Knobs of the fitting procedure.
///
/// `gamma` is the (fixed) reflection modulus used while fitting; exponents
/// are searched in `[0, alpha_max]`. `starts` seeded restarts run from a
/// midpoint start plus uniform random ones. `round_alpha` rounds the fitted
/// exponents to the nearest integer afterwards and re-scores (without
/// re-optimizing), for workflows that want integer lobes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub gamma: f64,
    pub alpha_max: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub round_alpha: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha_max: 100.0,
            starts: 8,
            seed: 42,
            max_iterations: 2000,
            f_tol: 1e-11,
            x_tol: 1e-10,
            round_alpha: false,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(Error::NotFinite {
                name: "gamma",
                value: self.gamma,
            });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: self.gamma,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !self.alpha_max.is_finite() || self.alpha_max <= 0.0 {
            return Err(Error::NotPositive {
                name: "alpha_max",
                value: self.alpha_max,
            });
        }
        if self.starts == 0 {
            return Err(Error::NotPositive {
                name: "starts",
                value: 0.0,
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::NotPositive {
                name: "max_iterations",
                value: 0.0,
            });
        }
        if !self.f_tol.is_finite() || self.f_tol <= 0.0 {
            return Err(Error::NotPositive {
                name: "f_tol",
                value: self.f_tol,
            });
        }
        if !self.x_tol.is_finite() || self.x_tol <= 0.0 {
            return Err(Error::NotPositive {
                name: "x_tol",
                value: self.x_tol,
            });
        }
        Ok(())
    }
}

/// Outcome of a fit.
///
/// `restart_spread` holds, per parameter (in the order `s, alpha_r[,
/// alpha_i, lambda]`), the max-minus-min disagreement among restarts that
/// reached within 0.01 dB of the best objective — a cheap identifiability
/// indicator. `converged` requires the winning descent to have met its stop
/// criterion and the near-best restarts to agree on every parameter the
/// data can actually constrain.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub s: f64,
    pub alpha_r: f64,
    pub alpha_i: Option<f64>,
    pub lambda: Option<f64>,
    pub rmse_db: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
    pub restart_spread: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FitKind {
    Single,
    Double,
}

/// Fits `(s, alpha_r)` of the reciprocal single-lobe model to the samples.
///
/// The geometry template supplies the incidence direction, distances, and
/// element area shared by every sample; each sample contributes its own
/// observation direction. Requires at least 3 samples.
pub fn fit_single_lobe(
    samples: &[PatternSample],
    geom_template: &ScatterGeometry,
    src: &SourceParameters,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_impl(FitKind::Single, samples, geom_template, src, opts)
}

/// Fits `(s, alpha_r, alpha_i, lambda)` of the reciprocal double-lobe model
/// to the samples. Requires at least 5 samples.
pub fn fit_double_lobe(
    samples: &[PatternSample],
    geom_template: &ScatterGeometry,
    src: &SourceParameters,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_impl(FitKind::Double, samples, geom_template, src, opts)
}

fn fit_impl(
    kind: FitKind,
    samples: &[PatternSample],
    geom_template: &ScatterGeometry,
    src: &SourceParameters,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let needed = match kind {
        FitKind::Single => 3,
        FitKind::Double => 5,
    };
    if samples.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    if src.k_i() <= 0.0 {
        return Err(Error::NotPositive {
            name: "k_i",
            value: src.k_i(),
        });
    }

    let geometries: Vec<ScatterGeometry> = samples
        .iter()
        .map(|sample| {
            ScatterGeometry::new(
                *geom_template.incidence(),
                *sample.observation(),
                geom_template.r_i(),
                geom_template.r_s(),
                geom_template.ds(),
            )
            .expect("template and sample directions are already validated")
        })
        .collect();
    let measured: Vec<f64> = samples.iter().map(|s| s.power_db()).collect();

    let dim = match kind {
        FitKind::Single => 2,
        FitKind::Double => 4,
    };
    let to_params = |x: &[f64]| -> ErParameters {
        match kind {
            FitKind::Single => {
                ErParameters::single_lobe(x[0], x[1] * opts.alpha_max, opts.gamma)
            }
            FitKind::Double => ErParameters::double_lobe(
                x[0],
                x[1] * opts.alpha_max,
                x[2] * opts.alpha_max,
                x[3],
                opts.gamma,
            ),
        }
        .expect("search box maps into the parameter domain")
    };
    let score = |par: &ErParameters| -> f64 {
        let predicted: Vec<f64> = geometries
            .iter()
            .map(|geom| {
                let value = match kind {
                    FitKind::Single => e_s_squared_rer(geom, src, par),
                    FitKind::Double => e_s_squared_double(geom, src, par),
                };
                power_db(value)
            })
            .collect();
        rmse_db(&predicted, &measured).expect("lengths match by construction")
    };
    let mut objective = |x: &[f64]| -> f64 { score(&to_params(x)) };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut history = Vec::new();
    let mut global_best = f64::INFINITY;
    let mut iterations = 0usize;
    let mut runs: Vec<NmOutcome> = Vec::with_capacity(opts.starts);
    for start_index in 0..opts.starts {
        let start: Vec<f64> = if start_index == 0 {
            vec![0.5; dim]
        } else {
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        };
        let mut outcome = nelder_mead(
            &mut objective,
            &start,
            opts,
            &mut global_best,
            &mut history,
        );
        iterations += outcome.iterations;
        // A collapsed simplex can stall short of the bottom of a curved
        // valley; re-inflating it at the found point and descending again
        // recovers the lost progress. Stop once a round gains nothing.
        for _ in 0..5 {
            let again = nelder_mead(
                &mut objective,
                &outcome.x,
                opts,
                &mut global_best,
                &mut history,
            );
            iterations += again.iterations;
            let improvement = outcome.f - again.f;
            if again.f < outcome.f {
                outcome = again;
            }
            if improvement <= 1e-12 {
                break;
            }
        }
        runs.push(outcome);
    }

    let best = runs
        .iter()
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("at least one start")
        .clone();

    // Identifiability probe: parameter disagreement among restarts that are
    // statistically indistinguishable from the best one.
    let near: Vec<&NmOutcome> = runs.iter().filter(|r| r.f <= best.f + 0.01).collect();
    let real_params = |x: &[f64]| -> Vec<f64> {
        match kind {
            FitKind::Single => vec![x[0], x[1] * opts.alpha_max],
            FitKind::Double => vec![x[0], x[1] * opts.alpha_max, x[2] * opts.alpha_max, x[3]],
        }
    };
    let best_real = real_params(&best.x);
    let mut restart_spread = vec![0.0f64; best_real.len()];
    for (j, spread) in restart_spread.iter_mut().enumerate() {
        let lo = near
            .iter()
            .map(|r| real_params(&r.x)[j])
            .fold(f64::INFINITY, f64::min);
        let hi = near
            .iter()
            .map(|r| real_params(&r.x)[j])
            .fold(f64::NEG_INFINITY, f64::max);
        *spread = hi - lo;
    }

    let (mut s, mut alpha_r) = (best_real[0], best_real[1]);
    let (mut alpha_i, mut lambda) = match kind {
        FitKind::Single => (None, None),
        FitKind::Double => (Some(best_real[2]), Some(best_real[3])),
    };
    if opts.round_alpha {
        alpha_r = alpha_r.round().clamp(0.0, opts.alpha_max);
        alpha_i = alpha_i.map(|a| a.round().clamp(0.0, opts.alpha_max));
    }
    let final_par = match kind {
        FitKind::Single => ErParameters::single_lobe(s, alpha_r, opts.gamma),
        FitKind::Double => ErParameters::double_lobe(
            s,
            alpha_r,
            alpha_i.expect("double fit"),
            lambda.expect("double fit"),
            opts.gamma,
        ),
    }
    .expect("fitted parameters stay in the box");
    let rmse = score(&final_par);
    // Normalize parameter cosmetics after scoring: a boundary clamp inside
    // the optimizer can leave -0.0.
    s += 0.0;
    alpha_r += 0.0;
    if let Some(a) = alpha_i.as_mut() {
        *a += 0.0;
    }
    if let Some(l) = lambda.as_mut() {
        *l += 0.0;
    }

    // The data cannot pin parameters that carry no weight: with s at zero
    // nothing scatters, with lambda at one the backscatter exponent is
    // inert, with lambda at zero the forward exponent is.
    let s_identifiable = s > 0.01;
    let spread_ok = restart_spread[0] <= 0.02
        && (!s_identifiable || match kind {
            FitKind::Single => restart_spread[1] <= 1.0,
            FitKind::Double => {
                let l = lambda.expect("double fit");
                restart_spread[3] <= 0.05
                    && (l <= 0.02 || restart_spread[1] <= 1.0)
                    && (l >= 0.98 || restart_spread[2] <= 1.0)
            }
        });
    let converged = best.converged && spread_ok;

    Ok(FitResult {
        s,
        alpha_r,
        alpha_i,
        lambda,
        rmse_db: rmse,
        iterations,
        converged,
        objective_history: history,
        restart_spread,
    })
}

#[derive(Clone)]
struct NmOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Nelder–Mead descent in the unit box, with candidate points clamped to
/// the box. Standard coefficients (reflection 1, expansion 2, contraction
/// 1/2, shrink 1/2); stops when the simplex collapses in objective value or
/// in coordinates. `history` receives the best-so-far objective (across
/// restarts, via `global_best`) once per iteration.
fn nelder_mead(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    opts: &FitOptions,
    global_best: &mut f64,
    history: &mut Vec<f64>,
) -> NmOutcome {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    clamp_unit(&mut x0);
    let f0 = objective(&x0);
    simplex.push((x0.clone(), f0));
    for j in 0..dim {
        let mut v = x0.clone();
        v[j] = if v[j] + 0.15 <= 1.0 {
            v[j] + 0.15
        } else {
            v[j] - 0.15
        };
        let fv = objective(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let f_spread = simplex[dim].1 - simplex[0].1;
        let x_spread = (0..dim)
            .map(|j| {
                let lo = simplex.iter().map(|(x, _)| x[j]).fold(f64::INFINITY, f64::min);
                let hi = simplex
                    .iter()
                    .map(|(x, _)| x[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0f64, f64::max);
        if f_spread <= opts.f_tol || x_spread <= opts.x_tol {
            converged = true;
            *global_best = global_best.min(simplex[0].1);
            history.push(*global_best);
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(worst.0.iter())
            .map(|(c, w)| c + (c - w))
            .collect();
        clamp_unit(&mut reflected);
        let f_reflected = objective(&reflected);

        if f_reflected < simplex[0].1 {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(worst.0.iter())
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            clamp_unit(&mut expanded);
            let f_expanded = objective(&expanded);
            simplex[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
        } else {
            let contracted: (Vec<f64>, f64) = if f_reflected < worst.1 {
                let mut outside: Vec<f64> = centroid
                    .iter()
                    .zip(reflected.iter())
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect();
                clamp_unit(&mut outside);
                let f = objective(&outside);
                (outside, f)
            } else {
                let inside: Vec<f64> = centroid
                    .iter()
                    .zip(worst.0.iter())
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect();
                let f = objective(&inside);
                (inside, f)
            };
            if contracted.1 < f_reflected.min(worst.1) {
                simplex[dim] = contracted;
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (v, a) in vertex.0.iter_mut().zip(anchor.iter()) {
                        *v = a + 0.5 * (*v - a);
                    }
                    vertex.1 = objective(&vertex.0);
                }
            }
        }

        let run_best = simplex
            .iter()
            .map(|(_, f)| *f)
            .fold(f64::INFINITY, f64::min);
        *global_best = global_best.min(run_best);
        history.push(*global_best);
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmOutcome {
        x: simplex[0].0.clone(),
        f: simplex[0].1,
        iterations,
        converged,
    }
}
