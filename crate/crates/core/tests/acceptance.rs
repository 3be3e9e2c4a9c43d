//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with its runtime (visible with `--nocapture`).
//!
//! Run with `cargo test --test acceptance -- --nocapture`.

use std::time::Instant;

use respiro::ctmc::{fit_generator, simulate, stationary, strip_movement_state, GeneratorMatrix};
use respiro::eval::{
    confusion_times, dor_from_rates, evenly_spaced_thresholds, kl_divergence, positive_events,
    reference_apnea_detector, roc, sens_spec_dor, window_truth_from_schedule, ApneaDetectorConfig,
    ConfusionTimes, LabeledTimeline,
};
use respiro::quantizer::{lloyd_max, lloyd_max_trace, StateSpace};
use respiro::rng;
use respiro::signal::{estimate_fundamental, WindowConfig};
use respiro::synth::{
    estimate_noise_variance, plan_warp, synth_motion_signal, warp_frames, FrameSequence,
    NoiseOptions, Rect,
};
use respiro::RateBounds;

/// Reference generator matrices fitted from monitored-newborn pneumograms,
/// with their published stationary distributions (5-decimal rounding).
/// Entries are printed to 6 decimals, hence the 1e-4 row-sum tolerance.
struct ReferenceFit {
    name: &'static str,
    rates_hz: Vec<f64>,
    lambda: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

fn reference_fits() -> Vec<ReferenceFit> {
    vec![
        ReferenceFit {
            name: "apneic newborn, 5 states",
            rates_hz: vec![0.0, 0.5, 0.9, 1.32, 15.0],
            lambda: vec![
                vec![-0.188785, 0.08972, 0.04486, 0.042991, 0.011215],
                vec![0.047083, -0.203685, 0.073695, 0.071648, 0.011259],
                vec![0.014614, 0.080376, -0.22547, 0.127349, 0.003132],
                vec![0.007717, 0.019756, 0.036734, -0.066677, 0.00247],
                vec![0.042272, 0.02642, 0.002642, 0.002642, -0.073976],
            ],
            pi: vec![0.08788, 0.16048, 0.15736, 0.53211, 0.06217],
        },
        ReferenceFit {
            name: "regular newborn, 5 states",
            rates_hz: vec![0.44, 0.74, 1.04, 1.33, 15.0],
            lambda: vec![
                vec![-0.205567, 0.124197, 0.059957, 0.004283, 0.017131],
                vec![0.020036, -0.080859, 0.047943, 0.003578, 0.009302],
                vec![0.014957, 0.071581, -0.108974, 0.014957, 0.007479],
                vec![0.015873, 0.047619, 0.206349, -0.317460, 0.047619],
                vec![0.003656, 0.007313, 0.006399, 0.0, -0.017367],
            ],
            pi: vec![0.05644, 0.32998, 0.22677, 0.01516, 0.37164],
        },
        ReferenceFit {
            name: "third newborn, 4 states",
            rates_hz: vec![0.49, 0.88, 1.27, 15.0],
            lambda: vec![
                vec![-0.196532, 0.109827, 0.023121, 0.063584],
                vec![0.021876, -0.058898, 0.012621, 0.024401],
                vec![0.0, 0.105263, -0.144044, 0.038781],
                vec![0.006814, 0.021124, 0.003407, -0.031346],
            ],
            pi: vec![0.0605, 0.38942, 0.05555, 0.49453],
        },
        ReferenceFit {
            name: "third newborn, 5 states",
            rates_hz: vec![0.44, 0.73, 1.03, 1.32, 15.0],
            lambda: vec![
                vec![-0.227545, 0.083832, 0.023952, 0.023952, 0.095808],
                vec![0.011161, -0.071429, 0.035714, 0.001116, 0.023438],
                vec![0.010604, 0.067869, -0.123012, 0.012725, 0.031813],
                vec![0.0, 0.021978, 0.076923, -0.131868, 0.032967],
                vec![0.003406, 0.014986, 0.011580, 0.001362, -0.031335],
            ],
            pi: vec![0.02902, 0.29355, 0.15485, 0.02781, 0.49477],
        },
        ReferenceFit {
            name: "third newborn, 6 states",
            rates_hz: vec![0.41, 0.65, 0.88, 1.11, 1.35, 15.0],
            lambda: vec![
                vec![-0.263566, 0.093023, 0.015504, 0.015504, 0.031008, 0.108527],
                vec![0.015102, -0.133765, 0.084142, 0.006472, 0.002157, 0.025890],
                vec![0.005735, 0.061649, -0.131900, 0.035842, 0.0, 0.028674],
                vec![0.007828, 0.003914, 0.101761, -0.164384, 0.027397, 0.023483],
                vec![0.0, 0.0, 0.067227, 0.100840, -0.201681, 0.033613],
                vec![0.002723, 0.008850, 0.013615, 0.005446, 0.000681, -0.031314],
            ],
            pi: vec![0.02143, 0.1547, 0.22708, 0.08513, 0.01818, 0.49348],
        },
    ]
}

fn apneic_generator() -> GeneratorMatrix {
    GeneratorMatrix::from_rows_with_tolerance(&reference_fits()[0].lambda, 1e-4).unwrap()
}

fn apneic_state_space() -> StateSpace {
    StateSpace::new(
        reference_fits()[0].rates_hz.clone(),
        true,
        true,
        RateBounds::newborn(),
    )
    .unwrap()
}

fn report(criterion: &str, start: Instant, limit_s: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    println!("acceptance {criterion}: PASS ({elapsed:.2} s, limit {limit_s} s)");
    assert!(
        elapsed < limit_s,
        "{criterion} exceeded its runtime limit: {elapsed:.2} s >= {limit_s} s"
    );
}

/// Criterion 1: the stationary solver reproduces all five published
/// distributions within 5e-4 per component.
#[test]
fn criterion_1_stationary_reference_distributions() {
    let start = Instant::now();
    for fit in reference_fits() {
        let generator = GeneratorMatrix::from_rows_with_tolerance(&fit.lambda, 1e-4).unwrap();
        let pi = stationary(&generator).unwrap();
        for (state, (&got, &want)) in pi.probs().iter().zip(&fit.pi).enumerate() {
            assert!(
                (got - want).abs() <= 5e-4,
                "{}: state {state}: {got} vs published {want}",
                fit.name
            );
        }
    }
    report("1 (stationary reference distributions)", start, 1.0);
}

/// Criterion 2: every published generator passes the matrix invariants at
/// the 1e-4 row-sum tolerance of 6-decimal printing.
#[test]
fn criterion_2_reference_generator_validity() {
    let start = Instant::now();
    for fit in reference_fits() {
        let generator = GeneratorMatrix::from_rows_with_tolerance(&fit.lambda, 1e-4)
            .unwrap_or_else(|e| panic!("{}: {e}", fit.name));
        for m in 0..generator.dim() {
            assert!(generator.rate(m, m) <= 0.0);
            for n in 0..generator.dim() {
                if m != n {
                    assert!(generator.rate(m, n) >= 0.0);
                }
            }
            let sum: f64 = generator.row(m).iter().sum();
            assert!(sum.abs() <= 1e-4, "{}: row {m} sums to {sum}", fit.name);
        }
    }
    report("2 (reference generator validity)", start, 1.0);
}

/// Criterion 3: simulate the movement-stripped apneic chain for 2e5 s and
/// refit; every off-diagonal rate observed in at least 100 transitions must
/// come back within 10% relative error.
#[test]
fn criterion_3_fit_round_trip() {
    let start = Instant::now();
    let (stripped, stripped_ss) =
        strip_movement_state(&apneic_generator(), &apneic_state_space()).unwrap();
    let schedule = simulate(&stripped, 2e5, 31).unwrap();
    // 0.1 s sampling keeps the continuous-path approximation bias well under
    // the statistical error (sojourns shorter than the step go unseen)
    let fit = fit_generator(&schedule.to_quantized(&stripped_ss, 0.1)).unwrap();
    let mut checked = 0;
    for m in 0..stripped.dim() {
        for n in 0..stripped.dim() {
            if m == n || fit.transitions(m, n) < 100 {
                continue;
            }
            let truth = stripped.rate(m, n);
            let got = fit.generator.rate(m, n);
            let rel = (got - truth).abs() / truth;
            assert!(
                rel <= 0.10,
                "rate ({m},{n}): fitted {got} vs true {truth} ({:.1}% off, {} transitions)",
                rel * 100.0,
                fit.transitions(m, n)
            );
            checked += 1;
        }
    }
    assert!(checked >= 6, "only {checked} rates had enough transitions");
    report("3 (fit round trip)", start, 30.0);
}

/// Criterion 4: simulated occupancy converges to the analytic stationary
/// distribution: KL decreases monotonically over durations 1e3/1e4/1e5 s and
/// ends at or below 1e-3 bits.
#[test]
fn criterion_4_occupancy_kl_convergence() {
    let start = Instant::now();
    let (stripped, _) = strip_movement_state(&apneic_generator(), &apneic_state_space()).unwrap();
    let pi = stationary(&stripped).unwrap();
    let seed = 23;
    let mut kls = Vec::new();
    for duration in [1e3, 1e4, 1e5] {
        let schedule = simulate(&stripped, duration, seed).unwrap();
        let occupancy = schedule.occupancy(stripped.dim());
        let kl = kl_divergence(&occupancy, pi.probs()).unwrap();
        kls.push(kl);
    }
    println!("  occupancy KL at 1e3/1e4/1e5 s: {kls:?} bits");
    assert!(kls[1] < kls[0], "KL must decrease: {kls:?}");
    assert!(kls[2] < kls[1], "KL must decrease: {kls:?}");
    assert!(kls[2] <= 1e-3, "final KL {} bits above 1e-3", kls[2]);
    report("4 (occupancy KL convergence)", start, 60.0);
}

/// Criterion 5: the fundamental estimator nails a noiseless on-bin cosine
/// exactly, recovers a 10 dB SNR tone in at least 99% of 1000 seeded trials,
/// and estimates the noiseless amplitude within 2%.
#[test]
fn criterion_5_frequency_estimator() {
    let start = Instant::now();
    let fs = 32.0;
    let n = 320;
    let tone = |freq: f64, amp: f64| -> Vec<f64> {
        (0..n)
            .map(|i| amp * (std::f64::consts::TAU * freq * i as f64 / fs).cos())
            .collect()
    };

    let (f0, amp) = estimate_fundamental(&tone(1.0, 1.0), fs, (0.2, 3.0)).unwrap();
    assert!((f0 - 1.0).abs() < 1e-12, "noiseless bin must be exact");
    assert!((amp - 1.0).abs() <= 0.02, "amplitude {amp} off by >2%");

    let amplitude = 1.0;
    let sigma = (amplitude * amplitude / 2.0 / 10.0f64).sqrt(); // 10 dB SNR
    let mut r = rng::seeded_rng(501);
    let trials = 1000;
    let mut hits = 0;
    let clean = tone(0.7, amplitude);
    for _ in 0..trials {
        let noisy: Vec<f64> = clean
            .iter()
            .map(|v| v + sigma * rng::standard_normal(&mut r))
            .collect();
        let (f0, _) = estimate_fundamental(&noisy, fs, (0.2, 3.0)).unwrap();
        if (f0 - 0.7).abs() < 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 990, "recovered {hits}/{trials}, need >= 990");
    report("5 (frequency estimator)", start, 30.0);
}

/// Criterion 6: Lloyd-Max reaches the uniform-density optima within 0.02 and
/// its distortion never increases across iterations.
#[test]
fn criterion_6_lloyd_max() {
    let start = Instant::now();
    let mut r = rng::seeded_rng(601);
    let samples: Vec<f64> = (0..10_000).map(|_| rng::uniform_open01(&mut r)).collect();

    let two = lloyd_max(&samples, 2).unwrap();
    for (level, optimum) in two.iter().zip([0.25, 0.75]) {
        assert!((level - optimum).abs() <= 0.02, "{two:?}");
    }
    let four = lloyd_max(&samples, 4).unwrap();
    for (level, optimum) in four.iter().zip([0.125, 0.375, 0.625, 0.875]) {
        assert!((level - optimum).abs() <= 0.02, "{four:?}");
    }

    // distortion trace is non-increasing on a spread of inputs
    let mut r = rng::seeded_rng(602);
    for k in 1..=6 {
        let gaussianish: Vec<f64> = (0..4000)
            .map(|_| 0.9 + 0.2 * rng::standard_normal(&mut r))
            .collect();
        for values in [&samples, &gaussianish] {
            let (_, trace) = lloyd_max_trace(values, k).unwrap();
            for pair in trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "distortion rose: {pair:?}");
            }
        }
    }
    report("6 (Lloyd-Max optima)", start, 10.0);
}

/// Criterion 7: warping a 32x32x1500 pure-tone sequence scales every pixel's
/// estimated fundamental by the rate ratio (within one DFT bin) for ratios
/// 0.5 and 2; ratio 1 is bit-identical.
#[test]
fn criterion_7_warp_frequency_scaling() {
    let start = Instant::now();
    let fr = 25.0;
    let frames = 1500;
    let (h, w) = (32, 32);
    let tone_hz = 0.9;
    let mut data = Vec::with_capacity(frames * h * w);
    for f in 0..frames {
        let t = f as f64 / fr;
        for p in 0..h * w {
            let phase = 0.13 * p as f64;
            data.push(0.5 + 0.4 * (std::f64::consts::TAU * tone_hz * t + phase).sin());
        }
    }
    let src = FrameSequence::new(frames, h, w, fr, data).unwrap();

    let schedule = respiro::ctmc::SojournSchedule::from_entries(
        vec![respiro::ctmc::SojournEntry {
            state: 0,
            sojourn_s: 30.0,
        }],
        None,
    )
    .unwrap();

    for (ratio, expected_hz) in [(0.5, 0.45), (2.0, 1.8)] {
        let plan = plan_warp(&schedule, &[ratio], fr, frames).unwrap();
        let out = warp_frames(&src, &plan, NoiseOptions::disabled(), 3).unwrap();
        assert_eq!(out.frame_count(), 750);
        let bin_hz = fr / out.frame_count() as f64;
        let band = (0.5 * expected_hz, 2.0 * expected_hz);
        for y in 0..h {
            for x in 0..w {
                let series = out.pixel_series(y, x);
                let (f0, _) = estimate_fundamental(&series, fr, band).unwrap();
                assert!(
                    (f0 - expected_hz).abs() <= bin_hz + 1e-12,
                    "ratio {ratio}, pixel ({y},{x}): {f0} Hz vs {expected_hz} Hz"
                );
            }
        }
    }

    let schedule_full = respiro::ctmc::SojournSchedule::from_entries(
        vec![respiro::ctmc::SojournEntry {
            state: 0,
            sojourn_s: frames as f64 / fr,
        }],
        None,
    )
    .unwrap();
    let plan = plan_warp(&schedule_full, &[1.0], fr, frames).unwrap();
    let out = warp_frames(&src, &plan, NoiseOptions::disabled(), 3).unwrap();
    assert_eq!(out.data(), src.data(), "identity warp must be bit-exact");
    report("7 (warp frequency scaling)", start, 60.0);
}

/// Criterion 8: after a 4x stretch of a static noisy scene, compensation
/// keeps the region variance within 25% of the source; without compensation
/// the variance drops by more than 40%.
#[test]
fn criterion_8_noise_compensation() {
    let start = Instant::now();
    let fr = 25.0;
    let frames = 1500;
    let (h, w) = (16, 16);
    let sigma = 0.05;
    let mut r = rng::seeded_rng(801);
    let data: Vec<f64> = (0..frames * h * w)
        .map(|_| 0.5 + sigma * rng::standard_normal(&mut r))
        .collect();
    let src = FrameSequence::new(frames, h, w, fr, data).unwrap();
    let region = Rect {
        x: 0,
        y: 0,
        width: w,
        height: h,
    };
    let source_var = estimate_noise_variance(&src, region).unwrap();

    let schedule = respiro::ctmc::SojournSchedule::from_entries(
        vec![respiro::ctmc::SojournEntry {
            state: 0,
            sojourn_s: 240.0,
        }],
        None,
    )
    .unwrap();
    let plan = plan_warp(&schedule, &[0.25], fr, frames).unwrap();
    assert_eq!(plan.blocks[0].output_frames, 6000);
    assert_eq!(plan.blocks[0].source_frames, 1500);

    let plain = warp_frames(&src, &plan, NoiseOptions::disabled(), 5).unwrap();
    let plain_var = estimate_noise_variance(&plain, region).unwrap();
    println!(
        "  source var {source_var:.6}, uncompensated {plain_var:.6} ({:.0}% drop)",
        100.0 * (1.0 - plain_var / source_var)
    );
    assert!(
        plain_var < 0.6 * source_var,
        "uncompensated variance dropped only {:.0}%",
        100.0 * (1.0 - plain_var / source_var)
    );

    let restored = warp_frames(&src, &plan, NoiseOptions::with_variance(source_var), 5).unwrap();
    let restored_var = estimate_noise_variance(&restored, region).unwrap();
    println!("  compensated {restored_var:.6}");
    assert!(
        (restored_var - source_var).abs() <= 0.25 * source_var,
        "compensated variance {restored_var} outside 25% of {source_var}"
    );
    report("8 (noise compensation)", start, 60.0);
}

/// Criterion 9: metric identities — the published sensitivity/specificity
/// pairs reproduce their published diagnostic odds ratios, the two DOR routes
/// agree to 1e-12, perfect separation gives AUC 1, random scores give
/// AUC 0.5 +- 0.03.
#[test]
fn criterion_9_metric_identities() {
    let start = Instant::now();
    for (alpha, beta, published) in [
        (0.888, 0.829, 38.4),
        (0.910, 0.869, 67.1),
        (0.951, 0.787, 71.7),
        (0.923, 0.896, 103.3),
    ] {
        let dor = dor_from_rates(alpha, beta).unwrap();
        assert!(
            (dor - published).abs() < 0.5,
            "alpha {alpha}, beta {beta}: DOR {dor} vs published {published}"
        );
    }

    let mut r = rng::seeded_rng(901);
    for _ in 0..200 {
        let ct = ConfusionTimes {
            true_positive_s: 1.0 + 999.0 * rng::uniform_open01(&mut r),
            true_negative_s: 1.0 + 999.0 * rng::uniform_open01(&mut r),
            false_positive_s: 1.0 + 999.0 * rng::uniform_open01(&mut r),
            false_negative_s: 1.0 + 999.0 * rng::uniform_open01(&mut r),
        };
        let m = sens_spec_dor(&ct);
        let direct = m.diagnostic_odds_ratio.unwrap();
        let via_rates = dor_from_rates(m.sensitivity.unwrap(), m.specificity.unwrap()).unwrap();
        assert!(
            (direct - via_rates).abs() <= 1e-12 * direct.max(1.0),
            "DOR routes disagree: {direct} vs {via_rates}"
        );
    }

    let truth = LabeledTimeline::new(1.0, (0..100).map(|i| i < 40).collect()).unwrap();
    let scores: Vec<f64> = (0..100).map(|i| if i < 40 { 1.0 } else { 0.0 }).collect();
    let analysis = roc(&scores, &truth, &[0.5]).unwrap();
    assert_eq!(analysis.auc, 1.0);

    let n = 5000;
    let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
    let mut r = rng::seeded_rng(902);
    let random_scores: Vec<f64> = (0..n).map(|_| rng::uniform_open01(&mut r)).collect();
    let truth = LabeledTimeline::new(1.0, labels).unwrap();
    let sweep = evenly_spaced_thresholds(&random_scores, 200);
    let analysis = roc(&random_scores, &truth, &sweep).unwrap();
    assert!(
        (analysis.auc - 0.5).abs() <= 0.03,
        "random-score AUC {}",
        analysis.auc
    );
    report("9 (metric identities)", start, 10.0);
}

/// Criterion 10: end-to-end apnea pipeline. Simulate one hour from an
/// apnea-capable model, render the motion signal, detect with the reference
/// detector at the ROC-optimal threshold: every apnea of at least 10 s is
/// found with both edges within one window step, and no shorter pause is
/// reported.
#[test]
fn criterion_10_end_to_end_apnea_pipeline() {
    let start = Instant::now();
    let bounds = RateBounds::newborn();
    let ss = StateSpace::new(vec![0.0, 0.7, 1.1], true, false, bounds).unwrap();
    // apnea sojourns average 8 s, so the hour holds a mix of sub-10 s pauses
    // and detectable apneas
    let generator = GeneratorMatrix::from_rows(&[
        vec![-0.125, 0.10, 0.025],
        vec![0.012, -0.052, 0.040],
        vec![0.015, 0.045, -0.060],
    ])
    .unwrap();

    let seed = 1006;
    let schedule = simulate(&generator, 3600.0, seed).unwrap();

    let fs = 32.0;
    let step_s = 0.5;
    let window_s = 10.0;
    let record = synth_motion_signal(&schedule, &ss, fs, 300.0, 2.0, seed).unwrap();
    let window = WindowConfig::from_duration(fs, window_s, 0.95).unwrap();
    let detector = ApneaDetectorConfig {
        window,
        bounds,
        min_event_s: 10.0,
    };

    // the fixture must exercise both sides of the 10 s rule, away from the
    // half-step boundary ambiguity
    let apnea_durations: Vec<f64> = schedule
        .entries()
        .iter()
        .filter(|e| e.state == 0)
        .map(|e| e.sojourn_s)
        .collect();
    let long = apnea_durations
        .iter()
        .filter(|&&d| d >= 10.0 + step_s)
        .count();
    let short = apnea_durations
        .iter()
        .filter(|&&d| d < 10.0 - step_s)
        .count();
    let razor = apnea_durations
        .iter()
        .filter(|&&d| (10.0 - step_s..10.0 + step_s).contains(&d))
        .count();
    assert!(
        long >= 3 && short >= 3 && razor == 0,
        "unsuitable fixture realization: {long} long, {short} short, {razor} boundary events"
    );

    // score once to find the ROC-optimal threshold (low amplitude = apnea,
    // so the ROC sweep runs on negated scores)
    let probe = reference_apnea_detector(&record, &detector, f64::NEG_INFINITY).unwrap();
    let window_count = probe.scores.len();
    let truth = window_truth_from_schedule(&schedule, 0, window_s, step_s, window_count).unwrap();
    let negated: Vec<f64> = probe.scores.iter().map(|a| -a).collect();
    let sweep = evenly_spaced_thresholds(&negated, 100);
    let analysis = roc(&negated, &truth, &sweep).unwrap();
    println!(
        "  AUC {:.4}, optimal amplitude threshold {:.3} uV",
        analysis.auc, -analysis.optimal.threshold
    );
    let threshold = -analysis.optimal.threshold;

    let detection = reference_apnea_detector(&record, &detector, threshold).unwrap();
    let predicted = positive_events(&detection.labels);
    let truth_events = positive_events(&truth);

    // every >= 10 s apnea must be matched with both edges within one step
    for event in &truth_events {
        let matched = predicted.iter().any(|p| {
            (p.start_index as i64 - event.start_index as i64).unsigned_abs() <= 1
                && (p.end_index as i64 - event.end_index as i64).unsigned_abs() <= 1
        });
        assert!(
            matched,
            "missed apnea event at windows {}..={}",
            event.start_index, event.end_index
        );
    }
    // and nothing may be reported that does not match a true apnea
    for p in &predicted {
        let matched = truth_events.iter().any(|event| {
            (p.start_index as i64 - event.start_index as i64).unsigned_abs() <= 1
                && (p.end_index as i64 - event.end_index as i64).unsigned_abs() <= 1
        });
        assert!(
            matched,
            "spurious event at windows {}..={} (a pause below 10 s must not be reported)",
            p.start_index, p.end_index
        );
    }
    println!(
        "  {} apnea events detected, {} short pauses ignored",
        truth_events.len(),
        short
    );
    assert!(!truth_events.is_empty());

    // confusion metrics at the operating point, for the record
    let ct = confusion_times(&detection.labels, &truth).unwrap();
    let metrics = sens_spec_dor(&ct);
    println!(
        "  sensitivity {:?}, specificity {:?}",
        metrics.sensitivity, metrics.specificity
    );
    report("10 (end-to-end apnea pipeline)", start, 120.0);
}
