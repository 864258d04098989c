//! End-to-end acceptance gate.
//!
//! Each test covers one numbered acceptance criterion and prints a single
//! `criterion NN PASS` line (visible with `--nocapture`); a failed assert
//! marks the criterion failed. Criteria 10 and 11 drive the installed
//! binary through real process invocations; everything else exercises the
//! library crate directly.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use er_scatter::calibration::{fit_single_lobe, power_db, FitOptions, PatternSample};
use er_scatter::models::{
    e_s_squared_double, e_s_squared_rer, f_alpha_closed, k_alpha_exact, pattern_legacy,
    pattern_rer,
};
use er_scatter::oracle::{
    double_lobe_sign_check, f_ratio_curve, integrate_pattern, pattern_peak,
    power_balance_anomaly, reciprocity_sweep, FieldModel, PatternModel, Polarization,
    QuadratureSpec,
};
use er_scatter::{Direction, ErParameters, ScatterGeometry, SourceParameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dir(theta_deg: f64, phi_deg: f64) -> Direction {
    Direction::from_degrees(theta_deg, phi_deg).unwrap()
}

fn spec(tol: f64) -> QuadratureSpec {
    QuadratureSpec::new(8, 16, tol).unwrap()
}

/// Criterion 1: the closed-form hemispherical normalization of the legacy
/// pattern agrees with independent quadrature to 1e-6 over the whole
/// exponent/incidence sweep, within the runtime budget.
#[test]
fn criterion_01_closed_form_matches_quadrature() {
    let started = Instant::now();
    let quad_spec = spec(1e-8);
    let angles_deg = [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 85.0];
    let mut worst = 0.0f64;
    for alpha in 0..=10u32 {
        for &theta_deg in &angles_deg {
            let inc = dir(theta_deg, 0.0);
            let closed = f_alpha_closed(inc.theta(), alpha).unwrap();
            let quad = integrate_pattern(|i, o| pattern_legacy(i, o, alpha), &inc, &quad_spec);
            assert!(quad.converged, "alpha {alpha}, theta {theta_deg}");
            let rel = (quad.value - closed).abs() / closed;
            worst = worst.max(rel);
            assert!(
                rel <= 1e-6,
                "alpha {alpha}, theta {theta_deg}: rel diff {rel:e}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "sweep took {elapsed:?}");
    println!(
        "criterion 01 PASS: closed form vs quadrature, worst rel diff {worst:.3e} \
         over 77 (alpha, theta) pairs in {elapsed:?}"
    );
}

/// Criterion 2: the normal-incidence normalization identity
/// `4 pi / (alpha + 1) (1 - 2^-(alpha+1))` holds to 1e-12 for alpha <= 20.
#[test]
fn criterion_02_normal_incidence_identity() {
    let mut worst = 0.0f64;
    for alpha in 0..=20u32 {
        let expected =
            4.0 * PI / f64::from(alpha + 1) * (1.0 - 0.5f64.powi(alpha as i32 + 1));
        let got = f_alpha_closed(0.0, alpha).unwrap();
        let rel = (got - expected).abs() / expected;
        worst = worst.max(rel);
        assert!(rel <= 1e-12, "alpha {alpha}: rel diff {rel:e}");
    }
    println!("criterion 02 PASS: normal-incidence identity, worst rel diff {worst:.3e}");
}

/// Criterion 3: the reciprocal normalization constant matches quadrature at
/// normal incidence to 1e-8 for alpha <= 20, with the exact low-order spot
/// values.
#[test]
fn criterion_03_k_constant_matches_quadrature() {
    let quad_spec = spec(1e-9);
    let inc = dir(0.0, 0.0);
    let mut worst = 0.0f64;
    for alpha in 0..=20u32 {
        let exact = k_alpha_exact(alpha);
        let quad = integrate_pattern(|i, o| pattern_rer(i, o, f64::from(alpha)), &inc, &quad_spec);
        let rel = (quad.value - exact).abs() / exact;
        worst = worst.max(rel);
        assert!(rel <= 1e-8, "alpha {alpha}: rel diff {rel:e}");
    }
    for (alpha, expected) in [(0u32, 4.0 * PI / 3.0), (1, 16.0 * PI / 15.0), (2, 92.0 * PI / 105.0)]
    {
        let rel = (k_alpha_exact(alpha) - expected).abs() / expected;
        assert!(rel <= 1e-14, "spot value alpha {alpha}: rel diff {rel:e}");
    }
    println!(
        "criterion 03 PASS: k(alpha) vs quadrature worst rel diff {worst:.3e}; \
         spot values 4pi/3, 16pi/15, 92pi/105 exact"
    );
}

/// Criterion 4: the reciprocal models are exchange-invariant to 1e-12 over
/// ten thousand seeded geometries; the legacy model fails the same sweep by
/// a wide margin.
#[test]
fn criterion_04_reciprocity() {
    let src = SourceParameters::from_amplitude(2.0).unwrap();

    let single = ErParameters::single_lobe(0.7, 4.3, 0.8).unwrap();
    let rer = reciprocity_sweep(FieldModel::Rer, &single, &src, 10_000, 7).unwrap();
    assert!(
        rer.max_rel_defect <= 1e-12,
        "single-lobe defect {:e}",
        rer.max_rel_defect
    );

    let double = ErParameters::double_lobe(0.7, 4.3, 2.6, 0.35, 0.8).unwrap();
    let dbl = reciprocity_sweep(FieldModel::Double, &double, &src, 10_000, 7).unwrap();
    assert!(
        dbl.max_rel_defect <= 1e-12,
        "double-lobe defect {:e}",
        dbl.max_rel_defect
    );

    let legacy_par = ErParameters::single_lobe(0.7, 4.0, 0.8).unwrap();
    let legacy = reciprocity_sweep(FieldModel::Legacy, &legacy_par, &src, 10_000, 7).unwrap();
    assert!(
        legacy.max_rel_defect > 0.1,
        "legacy defect unexpectedly small: {:e}",
        legacy.max_rel_defect
    );

    println!(
        "criterion 04 PASS: exchange defect rer {:.3e}, double {:.3e} (<= 1e-12); \
         legacy max defect {:.3} as expected non-reciprocal",
        rer.max_rel_defect, dbl.max_rel_defect, legacy.max_rel_defect
    );
}

/// Criterion 5: power-balance anomaly of the separable normalization with
/// S = 0.4, eps_r = 5, TE. The anomaly vanishes identically at normal
/// incidence and stays under 1 % through 60 deg for alpha in {1, 4, 10}.
/// Near grazing the approximation genuinely breaks down: the 85-deg values
/// are pinned to frozen quadrature references (0.165, 0.0594, 0.0214) to
/// document the real envelope instead of asserting a bound that the exact
/// integral does not satisfy there.
#[test]
fn criterion_05_power_balance_anomaly() {
    let quad_spec = spec(1e-7);
    let grid: Vec<f64> = (0..=24).map(|j| (j as f64 * 2.5).to_radians()).collect();
    let anchors = [(1u32, 0.16503), (4, 0.05944), (10, 0.02141)];
    let mut worst_low = 0.0f64;
    for (alpha, anchor) in anchors {
        let reports =
            power_balance_anomaly(alpha, 0.4, 5.0, Polarization::Te, &grid, &quad_spec).unwrap();
        assert_eq!(reports[0].delta_rel, 0.0, "alpha {alpha}: anomaly at 0 deg");
        for r in &reports {
            worst_low = worst_low.max(r.delta_rel.abs());
            assert!(
                r.delta_rel.abs() <= 0.01,
                "alpha {alpha}, theta {:.1} deg: |delta_rel| {:e}",
                r.theta_i.to_degrees(),
                r.delta_rel.abs()
            );
        }
        let grazing = power_balance_anomaly(
            alpha,
            0.4,
            5.0,
            Polarization::Te,
            &[85f64.to_radians()],
            &quad_spec,
        )
        .unwrap();
        let delta = grazing[0].delta_rel;
        assert!(
            (delta - anchor).abs() <= 1.5e-3,
            "alpha {alpha}: 85-deg anomaly {delta:.5} vs reference {anchor:.5}"
        );
    }
    println!(
        "criterion 05 PASS: anomaly exactly 0 at normal incidence, \
         max |delta_rel| {worst_low:.4} <= 0.01 through 60 deg; \
         85-deg values match frozen references for alpha 1, 4, 10"
    );
}

/// Criterion 6: the normalization ratio F(theta_i)/F(0) tracks
/// sqrt(cos theta_i) away from grazing and rises above it near grazing.
/// The mid-range deviation is small for every exponent but its sign depends
/// on alpha (above the approximant for alpha = 1, below for alpha >= 2),
/// and for alpha = 10 the absolute deviation is not monotone in theta — it
/// crosses zero between 60 and 85 deg — so the assertions pin magnitudes
/// and the grazing growth rather than a sign or monotonicity claim.
#[test]
fn criterion_06_sqrt_cos_approximation() {
    let quad_spec = spec(1e-9);
    let grid_deg: [f64; 4] = [0.0, 30.0, 85.0, 89.0];
    let grid: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    // 85-deg deviations frozen from converged quadrature runs.
    let anchors = [(1.0f64, 0.362462), (4.0, 0.130549), (10.0, 0.047017)];
    let mut dev85 = Vec::new();
    for (alpha, anchor) in anchors {
        let curve = f_ratio_curve(alpha as u32, &grid, &quad_spec).unwrap();
        let dev: Vec<f64> = curve
            .iter()
            .map(|p| p.ratio - p.sqrt_cos_theta_i)
            .collect();
        assert_eq!(curve[0].ratio, 1.0, "alpha {alpha}: ratio at 0 deg");
        assert!(
            dev[1].abs() <= 0.025,
            "alpha {alpha}: 30-deg deviation {:.4}",
            dev[1]
        );
        assert!(dev[2] > 0.0, "alpha {alpha}: 85-deg deviation sign");
        assert!(
            (dev[2] - anchor).abs() <= 2e-3,
            "alpha {alpha}: 85-deg deviation {:.5} vs reference {anchor:.5}",
            dev[2]
        );
        assert!(
            dev[3] > dev[2],
            "alpha {alpha}: deviation should keep growing toward grazing"
        );
        assert!(
            curve[3].ratio > curve[3].sqrt_cos_theta_i,
            "alpha {alpha}: ratio at 89 deg"
        );
        dev85.push(dev[2]);
    }
    // Narrower lobes hug the approximant longer: the grazing divergence
    // shrinks with alpha.
    assert!(dev85[2] < dev85[1] && dev85[1] < dev85[0]);
    println!(
        "criterion 06 PASS: ratio(0) = 1 exactly, |deviation(30 deg)| <= 0.025, \
         grazing divergence positive, ordered, and growing for alpha 1, 4, 10"
    );
}

/// Criterion 7: the hemispherical integral of the lobe kernel is the same
/// around the specular and the incidence axes to 1e-8 for alpha <= 8 and
/// incidence through 80 deg.
#[test]
fn criterion_07_kernel_sign_irrelevance() {
    let quad_spec = spec(1e-9);
    let grid: Vec<f64> = [0.0f64, 30.0, 60.0, 80.0]
        .iter()
        .map(|d| d.to_radians())
        .collect();
    let mut worst = 0.0f64;
    for alpha in 0..=8u32 {
        let report = double_lobe_sign_check(alpha, &grid, &quad_spec).unwrap();
        worst = worst.max(report.max_rel_diff);
        assert!(
            report.max_rel_diff <= 1e-8,
            "alpha {alpha}: rel diff {:e}",
            report.max_rel_diff
        );
    }
    println!("criterion 07 PASS: forward/backward kernel integrals agree, worst {worst:.3e}");
}

/// Criterion 8: the double-lobe model with a pure forward lobe reproduces
/// the single-lobe model over a thousand random geometries.
#[test]
fn criterion_08_pure_forward_lobe_reduction() {
    let src = SourceParameters::from_amplitude(1.3).unwrap();
    let double = ErParameters::double_lobe(0.66, 3.4, 7.7, 1.0, 0.77).unwrap();
    let single = ErParameters::single_lobe(0.66, 3.4, 0.77).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let inc = Direction::new(rng.gen::<f64>() * FRAC_PI_2, rng.gen::<f64>() * TAU).unwrap();
        let obs = Direction::new(rng.gen::<f64>() * FRAC_PI_2, rng.gen::<f64>() * TAU).unwrap();
        let r_i = 0.5 + rng.gen::<f64>() * 49.5;
        let r_s = 0.5 + rng.gen::<f64>() * 49.5;
        let ds = 0.01 + rng.gen::<f64>() * 9.99;
        let geom = ScatterGeometry::new(inc, obs, r_i, r_s, ds).unwrap();
        let a = e_s_squared_double(&geom, &src, &double);
        let b = e_s_squared_rer(&geom, &src, &single);
        let rel = if b == 0.0 { (a - b).abs() } else { (a - b).abs() / b };
        worst = worst.max(rel);
        assert!(rel <= 1e-12, "rel diff {rel:e}");
    }
    println!("criterion 08 PASS: pure-forward double lobe equals single lobe, worst {worst:.3e}");
}

/// Criterion 9: grazing nulls and the skew of the in-plane peak. The
/// reciprocal pattern vanishes exactly at grazing observation while the
/// legacy one stays positive, and the reciprocal in-plane peak sits below
/// the specular elevation for steep incidence.
#[test]
fn criterion_09_grazing_nulls_and_peak_skew() {
    for alpha in [0.5, 1.0, 4.0, 8.0, 20.0] {
        assert_eq!(pattern_rer(&dir(45.0, 0.0), &dir(90.0, 180.0), alpha), 0.0);
    }
    let legacy_at_grazing = pattern_legacy(&dir(45.0, 0.0), &dir(90.0, 180.0), 8);
    assert!(
        legacy_at_grazing > 0.0,
        "legacy grazing value {legacy_at_grazing:e}"
    );

    let peak = pattern_peak(PatternModel::Rer, 4.0, 60f64.to_radians())
        .unwrap()
        .to_degrees();
    assert!(
        (peak - 45.5).abs() <= 0.5,
        "peak at theta_i = 60 deg, alpha 4: {peak:.3} deg"
    );

    for theta_i_deg in [60.0f64, 75.0, 85.0] {
        for alpha in [1.0, 2.0, 4.0] {
            let peak = pattern_peak(PatternModel::Rer, alpha, theta_i_deg.to_radians())
                .unwrap()
                .to_degrees();
            assert!(
                peak < theta_i_deg,
                "alpha {alpha}, theta_i {theta_i_deg}: peak {peak:.3} deg not skewed inward"
            );
        }
    }
    println!(
        "criterion 09 PASS: exact grazing null (legacy stays {legacy_at_grazing:.3} there); \
         peak at 60 deg/alpha 4 = {peak:.2} deg and always below the specular elevation"
    );
}

/// Criterion 10: fit round trips. In-process noiseless recovery of
/// (S = 0.4, alpha_R = 2), the same through the binary with `--noise 0`,
/// and a seeded noisy run whose residual lands in the expected band.
#[test]
fn criterion_10_fit_round_trip() {
    // In-process: synthesize a two-half-plane grid and refit.
    let truth = ErParameters::single_lobe(0.4, 2.0, 1.0).unwrap();
    let src = SourceParameters::from_amplitude(1.0).unwrap();
    let template =
        ScatterGeometry::new(dir(30.0, 0.0), dir(30.0, 0.0), 1.0, 1.0, 1.0).unwrap();
    let mut samples = Vec::new();
    for i in 0..18 {
        for phi in [0.0, 180.0] {
            let obs = dir(2.5 + 5.0 * f64::from(i), phi);
            let geom =
                ScatterGeometry::new(*template.incidence(), obs, 1.0, 1.0, 1.0).unwrap();
            let db = power_db(e_s_squared_rer(&geom, &src, &truth));
            samples.push(PatternSample::new(obs, db).unwrap());
        }
    }
    let fit = fit_single_lobe(&samples, &template, &src, &FitOptions::default()).unwrap();
    assert!(fit.converged, "in-process fit did not converge");
    assert!((fit.s - 0.4).abs() <= 0.005, "S = {}", fit.s);
    assert!((fit.alpha_r - 2.0).abs() <= 0.05, "alpha_R = {}", fit.alpha_r);
    assert!(fit.rmse_db <= 0.01, "rmse = {} dB", fit.rmse_db);

    // Through the binary, noiseless.
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean.csv");
    run_ok(&[
        "pattern", "--model", "rer", "--s", "0.4", "--alpha-r", "2", "--theta-i", "30",
        "--quantity", "field-db", "--noise", "0", "--in-plane",
        "--out", clean.to_str().unwrap(),
    ]);
    let out = run_ok(&[
        "fit", "--model", "rer", "--theta-i", "30", "--input", clean.to_str().unwrap(),
    ]);
    let fit_json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let s = fit_json["s"].as_f64().unwrap();
    let alpha = fit_json["alpha_r"].as_f64().unwrap();
    let rmse = fit_json["rmse_db"].as_f64().unwrap();
    assert!((s - 0.4).abs() <= 0.005, "CLI S = {s}");
    assert!((alpha - 2.0).abs() <= 0.05, "CLI alpha_R = {alpha}");
    assert!(rmse <= 0.01, "CLI rmse = {rmse} dB");
    assert_eq!(fit_json["converged"], serde_json::Value::Bool(true));

    // Through the binary, sigma = 1.5 dB of seeded noise: the residual must
    // land in the [1.0, 2.0] dB band.
    let noisy = tmp.path().join("noisy.csv");
    run_ok(&[
        "pattern", "--model", "rer", "--s", "0.4", "--alpha-r", "2", "--theta-i", "30",
        "--quantity", "field-db", "--noise", "1.5", "--seed", "99", "--in-plane",
        "--out", noisy.to_str().unwrap(),
    ]);
    let out = run_ok(&[
        "fit", "--model", "rer", "--theta-i", "30", "--input", noisy.to_str().unwrap(),
    ]);
    let fit_json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let noisy_rmse = fit_json["rmse_db"].as_f64().unwrap();
    assert!(
        (1.0..=2.0).contains(&noisy_rmse),
        "noisy rmse = {noisy_rmse} dB outside [1.0, 2.0]"
    );

    println!(
        "criterion 10 PASS: noiseless round trip S = {s:.4}, alpha_R = {alpha:.4}, \
         rmse = {rmse:.2e} dB; noisy residual {noisy_rmse:.3} dB in [1.0, 2.0]"
    );
}

/// Criterion 11: repeated identical invocations produce byte-identical
/// output, including seeded noise, sweep reports, and fits.
#[test]
fn criterion_11_deterministic_output() {
    let tmp = tempfile::tempdir().unwrap();

    let csv_a = pattern_bytes(tmp.path(), "a.csv");
    let csv_b = pattern_bytes(tmp.path(), "b.csv");
    assert_eq!(csv_a, csv_b, "noisy pattern CSV differs between runs");

    let verify_a = run_ok(&[
        "verify", "power-balance", "--alpha-r", "4", "--s", "0.4", "--eps-r", "5",
    ]);
    let verify_b = run_ok(&[
        "verify", "power-balance", "--alpha-r", "4", "--s", "0.4", "--eps-r", "5",
    ]);
    assert_eq!(
        verify_a.stdout, verify_b.stdout,
        "power-balance JSON differs between runs"
    );

    let input = tmp.path().join("a.csv");
    let fit_a = run_ok(&["fit", "--theta-i", "30", "--input", input.to_str().unwrap()]);
    let fit_b = run_ok(&["fit", "--theta-i", "30", "--input", input.to_str().unwrap()]);
    assert_eq!(fit_a.stdout, fit_b.stdout, "fit JSON differs between runs");

    println!(
        "criterion 11 PASS: pattern CSV ({} bytes), verify JSON ({} bytes) and \
         fit JSON ({} bytes) byte-identical across repeated runs",
        csv_a.len(),
        verify_a.stdout.len(),
        fit_a.stdout.len()
    );
}

fn pattern_bytes(dir: &Path, name: &str) -> Vec<u8> {
    let path = dir.join(name);
    run_ok(&[
        "pattern", "--model", "rer", "--s", "0.4", "--alpha-r", "2", "--theta-i", "30",
        "--quantity", "field-db", "--noise", "1.5", "--seed", "11", "--in-plane",
        "--out", path.to_str().unwrap(),
    ]);
    std::fs::read(path).unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_er-scatter"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "`er-scatter {}` failed: {}\n{}",
        args.join(" "),
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}
