//! Acceptance gate: twelve end-to-end checks, one test per criterion.
//!
//! Each test exercises a released behavior at its stated tolerance and wall
//! clock budget and prints one summary line with the measured quantities.
//! The checks are deliberately heavyweight (full simulation studies, large
//! Monte Carlo draws); they share a process-wide lock so the budgets hold
//! even when the harness runs tests on several threads.

use peakcr_core::covariance::PointCovariance;
use peakcr_core::field::{DomainBox, Jet, ScalarField};
use peakcr_core::grid_field::{GaussianKernel, Lattice, LatticeSample, SmoothField};
use peakcr_core::linalg::{DMat, DVec, HMat};
use peakcr_core::noisegen::{CohortSpec, GaussBump, NoiseSpec, Signal, VarianceProfile};
use peakcr_core::peaks::{find_critical_points, PeakFindConfig, PeakKind};
use peakcr_core::regions::{ConfidenceEllipsoid, Polarity};
use peakcr_core::rng::lemma_rng;
use peakcr_core::sample_fields::{FieldCohort, TargetStat};
use peakcr_core::simharness::{
    check_chi2_gradient, check_ratio_dominance, check_t_gradient_clt, run_coverage,
    run_identifiability, BallSpec, CoverageConfig, IdentifiabilityConfig, RegionMethod,
};
use peakcr_core::welch::{gaussian_window, segment_spectra, spectrum_peak_regions, welch_cohort, WelchSpec};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::{Mutex, PoisonError};
use std::time::Instant;

/// Serializes the timed tests so wall-clock budgets are measured unshared.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(PoisonError::into_inner)
}

fn budget(start: Instant, limit_s: f64, label: &str) -> f64 {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s,
        "{label}: elapsed {elapsed:.1}s exceeds the {limit_s:.0}s budget"
    );
    elapsed
}

fn uniform_point(domain: &DomainBox, rng: &mut impl Rng) -> DVec {
    let lo = domain.lo();
    let hi = domain.hi();
    let mut p = DVec::zeros(domain.dim());
    for d in 0..domain.dim() {
        p[d] = lo[d] + rng.random::<f64>() * (hi[d] - lo[d]);
    }
    p
}

fn normal_values(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = lemma_rng(seed, stream);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Largest relative deviation of central finite differences from the
/// analytic gradient and Hessian at `s`. Relative errors are measured
/// against the infinity norm of the analytic object with a small floor so
/// near-stationary points stay well posed.
fn finite_difference_errors<F: ScalarField>(field: &F, s: &DVec) -> (f64, f64) {
    let dim = field.dim();
    let jet = field.jet(s).expect("interior jet");
    let value_at = |p: &DVec| field.value(p).expect("interior value");
    let shift = |d: usize, a: f64| {
        let mut p = *s;
        p[d] += a;
        p
    };
    let shift2 = |d: usize, a: f64, e: usize, b: f64| {
        let mut p = *s;
        p[d] += a;
        p[e] += b;
        p
    };
    let hg = 1e-4;
    let mut grad_err = 0.0f64;
    let mut grad_scale = 1e-4f64;
    for d in 0..dim {
        let fd = (value_at(&shift(d, hg)) - value_at(&shift(d, -hg))) / (2.0 * hg);
        grad_err = grad_err.max((fd - jet.gradient[d]).abs());
        grad_scale = grad_scale.max(jet.gradient[d].abs());
    }
    let hh = 3e-4;
    let f0 = value_at(s);
    let mut hess_err = 0.0f64;
    let mut hess_scale = 1e-3f64;
    for d in 0..dim {
        let fd = (value_at(&shift(d, hh)) - 2.0 * f0 + value_at(&shift(d, -hh))) / (hh * hh);
        hess_err = hess_err.max((fd - jet.hessian.get(d, d)).abs());
        for e in 0..dim {
            hess_scale = hess_scale.max(jet.hessian.get(d, e).abs());
        }
        for e in d + 1..dim {
            let fd = (value_at(&shift2(d, hh, e, hh)) - value_at(&shift2(d, hh, e, -hh))
                - value_at(&shift2(d, -hh, e, hh))
                + value_at(&shift2(d, -hh, e, -hh)))
                / (4.0 * hh * hh);
            hess_err = hess_err.max((fd - jet.hessian.get(d, e)).abs());
        }
    }
    (grad_err / grad_scale, hess_err / hess_scale)
}

fn check_field_derivatives<F: ScalarField>(
    field: &F,
    points: usize,
    seed_stream: u64,
    worst: &mut (f64, f64),
) {
    let domain = field.domain().shrink(0.01).expect("room to differentiate");
    let mut rng = lemma_rng(41, seed_stream);
    for _ in 0..points {
        let s = uniform_point(&domain, &mut rng);
        let (ge, he) = finite_difference_errors(field, &s);
        assert!(
            ge <= 1e-5,
            "gradient FD mismatch {ge:.3e} at {:?}",
            (0..s.len()).map(|i| s[i]).collect::<Vec<_>>()
        );
        assert!(
            he <= 1e-4,
            "Hessian FD mismatch {he:.3e} at {:?}",
            (0..s.len()).map(|i| s[i]).collect::<Vec<_>>()
        );
        worst.0 = worst.0.max(ge);
        worst.1 = worst.1.max(he);
    }
}

#[test]
fn criterion_01_field_derivatives_match_finite_differences() {
    let _guard = serial();
    let start = Instant::now();
    let kernel = GaussianKernel::from_fwhm(6.0, 4.0).unwrap();
    let mut worst = (0.0f64, 0.0f64);

    // smoothed 1-D lattice sample, standardized
    let lat1 = Lattice::new(&[64], &[0.0], &[1.0]).unwrap();
    let sample1 = LatticeSample::new(lat1, normal_values(lat1.len(), 41, 100)).unwrap();
    let field1 = SmoothField::new(sample1, kernel, true).unwrap();
    check_field_derivatives(&field1, 40, 1, &mut worst);

    // smoothed 2-D lattice sample, standardized
    let lat2 = Lattice::new(&[30, 26], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let sample2 = LatticeSample::new(lat2, normal_values(lat2.len(), 41, 200)).unwrap();
    let field2 = SmoothField::new(sample2, kernel, true).unwrap();
    check_field_derivatives(&field2, 30, 2, &mut worst);

    // Cohen's d field over a smoothed cohort
    let lat3 = Lattice::new(&[48], &[0.0], &[1.0]).unwrap();
    let samples: Vec<LatticeSample> = (0..8)
        .map(|i| {
            let values: Vec<f64> =
                normal_values(lat3.len(), 41, 300 + i).iter().map(|z| 1.0 + z).collect();
            LatticeSample::new(lat3, values).unwrap()
        })
        .collect();
    let cohort = FieldCohort::from_samples(samples, kernel, true).unwrap();
    let d_field = cohort.cohens_d_field();
    check_field_derivatives(&d_field, 30, 3, &mut worst);

    let elapsed = budget(start, 5.0, "criterion 01");
    println!(
        "criterion 01 PASS: 100 interior points, worst gradient err {:.2e} (tol 1e-5), \
         worst Hessian err {:.2e} (tol 1e-4) [{elapsed:.2}s]",
        worst.0, worst.1
    );
}

/// Exact one-dimensional calibration inputs: gradient covariance 4, Hessian
/// -2, Hessian scatter zero.
fn unit_problem_cov() -> PointCovariance {
    PointCovariance {
        n: 100,
        grad_cov: DMat::from_rows(1, &[4.0]),
        grad_value_cov: DVec::zeros(1),
        hess_cov: HMat::from_rows(1, &[0.0]),
    }
}

#[test]
fn criterion_02_asymptotic_interval_matches_quantile_oracle() {
    let _guard = serial();
    let start = Instant::now();
    let hessian = DMat::from_rows(1, &[-2.0]);
    let region = ConfidenceEllipsoid::asymptotic_mean(
        DVec::zeros(1),
        &hessian,
        &unit_problem_cov(),
        100,
        0.05,
    )
    .unwrap();
    // location covariance H^-1 Lambda H^-1 / N = 1/100; half-width is the
    // square root of that times the 0.95 quantile of a 1-df chi-square
    let half = region.semi_axes()[0].0;
    let oracle = (3.841_458_820_694_124 / 100.0_f64).sqrt();
    assert!((half - 0.19600).abs() <= 1e-5, "half-width {half} vs 0.19600");
    assert!((half - oracle).abs() <= 1e-12, "half-width {half} vs oracle {oracle}");
    assert!((region.threshold() - 3.841_458_8).abs() <= 1e-6);

    // the same calibration assembled from per-subject jets: alternating
    // gradients with sample variance exactly 4, constant Hessians
    let g = (4.0 * 99.0 / 100.0_f64).sqrt();
    let jets: Vec<Jet> = (0..100)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            Jet::new(0.0, DVec::from_slice(&[sign * g]), DMat::from_rows(1, &[-2.0]))
        })
        .collect();
    let cov = PointCovariance::from_jets(&jets).unwrap();
    assert!((cov.grad_cov.get(0, 0) - 4.0).abs() <= 1e-12);
    assert_eq!(cov.hess_cov.get(0, 0), 0.0);
    let region2 =
        ConfidenceEllipsoid::asymptotic_mean(DVec::zeros(1), &hessian, &cov, 100, 0.05).unwrap();
    assert!((region2.semi_axes()[0].0 - half).abs() <= 1e-10);

    let elapsed = budget(start, 1.0, "criterion 02");
    println!(
        "criterion 02 PASS: half-width {half:.6} vs 0.19600 oracle, threshold {:.7} [{elapsed:.2}s]",
        region.threshold()
    );
}

#[test]
fn criterion_03_monte_carlo_threshold_recovers_chi_square() {
    let _guard = serial();
    let start = Instant::now();
    let hessian = DMat::from_rows(1, &[-2.0]);
    let region = ConfidenceEllipsoid::monte_carlo_mean(
        DVec::zeros(1),
        &hessian,
        &unit_problem_cov(),
        100,
        0.05,
        100_000,
        Polarity::Max,
        1234,
        0,
    )
    .unwrap();
    // with zero Hessian scatter every draw keeps the exact Hessian, so the
    // calibration statistic is exactly chi-square with one degree of freedom
    let trunc = region.truncation().expect("Monte Carlo summary");
    assert_eq!(trunc.truncated(), 0);
    assert_eq!(trunc.total(), 100_000);
    let gap = (region.threshold() - 3.841_458_8_f64).abs();
    assert!(gap <= 0.15, "threshold {} vs chi-square quantile", region.threshold());

    let elapsed = budget(start, 10.0, "criterion 03");
    println!(
        "criterion 03 PASS: simulated threshold {:.4} within {gap:.4} of 3.8415 (tol 0.15) [{elapsed:.2}s]",
        region.threshold()
    );
}

fn narrow_beta_cohort(subjects: usize) -> CohortSpec {
    CohortSpec {
        lattice: Lattice::new(&[90], &[0.0], &[1.0]).unwrap(),
        noise: NoiseSpec::gaussian(6.0),
        signal: Signal::BetaBumps { amplitude: 2.0, section: 20.0, shape_a: 1.5, shape_b: 3.0 },
        variance: VarianceProfile::unit(),
        subjects,
    }
}

fn coverage_config(
    cohort: CohortSpec,
    target: TargetStat,
    method: RegionMethod,
) -> CoverageConfig {
    CoverageConfig {
        cohort,
        target,
        method,
        alpha: 0.05,
        replicates: 1000,
        seed: 33,
        ball_radius: 4.0,
        peaks: PeakFindConfig::default(),
        truth: None,
    }
}

#[test]
fn criterion_04_and_05_mean_peak_coverage_across_cohort_sizes() {
    let _guard = serial();
    let start = Instant::now();
    let mc = RegionMethod::MonteCarlo { draws: 20_000 };

    let asym100 = run_coverage(&coverage_config(
        narrow_beta_cohort(100),
        TargetStat::Mean,
        RegionMethod::Asymptotic,
    ))
    .unwrap();
    let mc100 =
        run_coverage(&coverage_config(narrow_beta_cohort(100), TargetStat::Mean, mc)).unwrap();
    assert!(
        (0.93..=0.97).contains(&mc100.marginal),
        "Monte Carlo marginal coverage {} outside [0.93, 0.97]",
        mc100.marginal
    );
    assert!(
        (0.90..=0.97).contains(&asym100.marginal),
        "asymptotic marginal coverage {} outside [0.90, 0.97]",
        asym100.marginal
    );

    // smaller cohorts: the simulated calibration must not undercover
    // relative to the asymptotic one
    let asym20 = run_coverage(&coverage_config(
        narrow_beta_cohort(20),
        TargetStat::Mean,
        RegionMethod::Asymptotic,
    ))
    .unwrap();
    let mc20 =
        run_coverage(&coverage_config(narrow_beta_cohort(20), TargetStat::Mean, mc)).unwrap();
    assert!(
        mc20.marginal >= asym20.marginal - 0.015,
        "at 20 subjects Monte Carlo coverage {} fell below asymptotic {} - 0.015",
        mc20.marginal,
        asym20.marginal
    );

    let elapsed = budget(start, 600.0, "criteria 04+05");
    println!(
        "criterion 04 PASS: 1000 replicates, N=100 marginal coverage asymptotic {:.4} \
         (band [0.90, 0.97]), Monte Carlo {:.4} (band [0.93, 0.97]) [{elapsed:.0}s]",
        asym100.marginal, mc100.marginal
    );
    println!(
        "criterion 05 PASS: N=20 Monte Carlo coverage {:.4} >= asymptotic {:.4} - 0.015",
        mc20.marginal, asym20.marginal
    );
}

#[test]
fn criterion_06_cohens_d_peak_coverage() {
    let _guard = serial();
    let start = Instant::now();
    // unit-variance noise and unit-height bumps: the peak effect size is 1
    let bump = |c: f64| GaussBump { center: DVec::from_slice(&[c]), amplitude: 1.0, width: 2.0 };
    let cohort = CohortSpec {
        lattice: Lattice::new(&[90], &[0.0], &[1.0]).unwrap(),
        noise: NoiseSpec::gaussian(6.0),
        signal: Signal::GaussBumps { bumps: vec![bump(25.0), bump(45.0), bump(65.0)] },
        variance: VarianceProfile::unit(),
        subjects: 200,
    };
    let report = run_coverage(&coverage_config(
        cohort,
        TargetStat::CohensD,
        RegionMethod::Asymptotic,
    ))
    .unwrap();
    assert!(
        report.marginal >= 0.90,
        "effect-size peak coverage {} below 0.90",
        report.marginal
    );

    let elapsed = budget(start, 900.0, "criterion 06");
    println!(
        "criterion 06 PASS: unit peak effect size, N=200, marginal coverage {:.4} >= 0.90 \
         (failed replicates {}) [{elapsed:.0}s]",
        report.marginal, report.failed
    );
}

#[test]
fn criterion_07_peak_pattern_identifiability() {
    let _guard = serial();
    let start = Instant::now();
    let ball = |c: f64, r: f64| BallSpec { center: DVec::from_slice(&[c]), radius: r };
    let cohort = CohortSpec {
        lattice: Lattice::new(&[72], &[10.2], &[1.0]).unwrap(),
        noise: NoiseSpec::gaussian(6.0),
        signal: Signal::BetaBumps { amplitude: 2.0, section: 20.0, shape_a: 1.5, shape_b: 3.0 },
        variance: VarianceProfile::unit(),
        subjects: 200,
    };
    let config = IdentifiabilityConfig {
        cohort: cohort.clone(),
        target: TargetStat::Mean,
        peaks: PeakFindConfig::default(),
        seed: 21,
        replicates: 1000,
        // one maximum expected near each bump mode; the signal's section
        // junctions sit in the guard balls where spurious points from the
        // one-sided slope blowup are tolerated
        max_balls: vec![ball(24.0, 1.5), ball(44.0, 1.5), ball(64.0, 1.5)],
        guard_balls: vec![ball(40.0, 2.4), ball(60.0, 2.4)],
    };
    let report = run_identifiability(&config).unwrap();
    assert!(report.rate >= 0.99, "identification rate {} below 0.99", report.rate);

    // negative control: with no signal the peak pattern must not be found
    let flat = IdentifiabilityConfig {
        cohort: CohortSpec { signal: Signal::Flat, ..cohort },
        ..config
    };
    let flat_report = run_identifiability(&flat).unwrap();
    assert!(
        flat_report.rate <= 0.10,
        "flat-signal control unexpectedly identified the pattern at rate {}",
        flat_report.rate
    );

    let elapsed = budget(start, 300.0, "criterion 07");
    println!(
        "criterion 07 PASS: identification rate {:.4} >= 0.99 over 1000 replicates; \
         flat-signal control rate {:.4} [{elapsed:.0}s]",
        report.rate, flat_report.rate
    );
}

#[test]
fn criterion_08_effect_size_gradient_covariance_scaling() {
    let _guard = serial();
    let start = Instant::now();
    let lattice = Lattice::new(&[64], &[0.0], &[1.0]).unwrap();
    let variance =
        VarianceProfile::Linear { base: 0.8, slope: DVec::from_slice(&[0.01]) };
    let point = DVec::from_slice(&[32.0]);

    // zero effect size: flat signal over spatially varying noise scale
    let flat = CohortSpec {
        lattice,
        noise: NoiseSpec::gaussian(6.0),
        signal: Signal::Flat,
        variance,
        subjects: 200,
    };
    let zero = check_t_gradient_clt(&flat, &point, 5000, 101).unwrap();
    assert!(
        zero.max_rel_err <= 0.07,
        "gradient covariance mismatch {} at zero effect size",
        zero.max_rel_err
    );

    // unit effect size at the probed point: bump height equals the local
    // noise scale 0.8 + 0.01 * 32
    let bump = GaussBump { center: DVec::from_slice(&[32.0]), amplitude: 1.12, width: 2.0 };
    let bumped = CohortSpec { signal: Signal::GaussBumps { bumps: vec![bump] }, ..flat };
    let unit = check_t_gradient_clt(&bumped, &point, 5000, 102).unwrap();
    assert!(
        unit.max_rel_err <= 0.07,
        "gradient covariance mismatch {} at unit effect size",
        unit.max_rel_err
    );

    let elapsed = budget(start, 600.0, "criterion 08");
    println!(
        "criterion 08 PASS: scaled gradient covariance within {:.4} (d=0) and {:.4} (d=1) \
         of the predicted (1+d^2)-scaled matrix, tol 0.07 [{elapsed:.0}s]",
        zero.max_rel_err, unit.max_rel_err
    );
}

#[test]
fn criterion_09_chi_square_gradient_residual_moments() {
    let _guard = serial();
    let start = Instant::now();
    let lambda = DMat::from_rows(2, &[0.09, 0.012, 0.012, 0.05]);
    let gamma = DVec::from_slice(&[0.025, -0.015]);
    let check = check_chi2_gradient(1.2, &lambda, &gamma, 40, 100_000, 7, 0).unwrap();
    assert!(check.max_mean_err <= 0.02, "residual mean off by {}", check.max_mean_err);
    assert!(check.max_cov_err <= 0.02, "residual covariance off by {}", check.max_cov_err);
    assert!(
        check.max_corr_with_value <= 0.02,
        "residual correlates with the value: {}",
        check.max_corr_with_value
    );

    let elapsed = budget(start, 60.0, "criterion 09");
    println!(
        "criterion 09 PASS: residual mean err {:.4}, covariance err {:.4}, \
         value correlation {:.4}, all within 0.02 at 100000 draws [{elapsed:.1}s]",
        check.max_mean_err, check.max_cov_err, check.max_corr_with_value
    );
}

#[test]
fn criterion_10_randomized_denominator_fattens_tails() {
    let _guard = serial();
    let start = Instant::now();
    let checks = check_ratio_dominance(0.5, &[0.5, 1.0, 2.0, 3.0], 1_000_000, 5).unwrap();
    assert_eq!(checks.len(), 4);
    for c in &checks {
        assert!(
            c.random_tail >= c.fixed_tail - 2.0 * c.se,
            "tail at x={} not dominated: random {} vs fixed {} (se {})",
            c.x,
            c.random_tail,
            c.fixed_tail,
            c.se
        );
    }

    let elapsed = budget(start, 60.0, "criterion 10");
    let summary: Vec<String> = checks
        .iter()
        .map(|c| format!("x={}: {:.4}>={:.4}", c.x, c.random_tail, c.fixed_tail))
        .collect();
    println!(
        "criterion 10 PASS: randomized-denominator tails dominate within 2 se ({}) [{elapsed:.1}s]",
        summary.join(", ")
    );
}

#[test]
fn criterion_11_spectrum_evaluation_matches_direct_transform() {
    let _guard = serial();
    let start = Instant::now();
    // one-second segments at 240 samples per second resolve integer bins
    let spec = WelchSpec::new(240, 240.0).unwrap();
    assert_eq!(spec.bin_width(), 1.0);

    // broadband test series: two tones plus pseudo-noise
    let mut rng = lemma_rng(77, 0);
    let series: Vec<f64> = (0..960)
        .map(|t| {
            let time = t as f64 / 240.0;
            let z: f64 = StandardNormal.sample(&mut rng);
            (std::f64::consts::TAU * 3.2 * time).sin()
                + 0.5 * (std::f64::consts::TAU * 17.0 * time).sin()
                + 0.3 * z
        })
        .collect();
    let spectra = segment_spectra(&series, &spec).unwrap();
    assert_eq!(spectra.len(), 7);

    // oracle: direct windowed transform of the first segment at each bin
    let window = gaussian_window(240, 0.05);
    let segment = &series[0..240];
    let mean = segment.iter().sum::<f64>() / 240.0;
    let weighted: Vec<f64> =
        segment.iter().zip(&window).map(|(x, w)| (x - mean) * w).collect();
    let wsq: f64 = window.iter().map(|w| w * w).sum();
    let mut worst = 0.0f64;
    for k in 1..120 {
        let freq = k as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (t, &u) in weighted.iter().enumerate() {
            let theta = std::f64::consts::TAU * freq * t as f64 / 240.0;
            re += u * theta.cos();
            im -= u * theta.sin();
        }
        let oracle = (re * re + im * im) / (240.0 * wsq);
        let (power, _, _) = spectra[0].power_jet(freq);
        let rel = (power - oracle).abs() / oracle.max(1e-12);
        assert!(rel <= 1e-9, "power at {freq} Hz off by {rel:.2e}");
        worst = worst.max(rel);
    }

    // an off-bin tone's spectral peak lands within half a bin of the truth
    let tone = 37.7;
    let pure: Vec<f64> = (0..960)
        .map(|t| (std::f64::consts::TAU * tone * t as f64 / 240.0).sin())
        .collect();
    let cohort = welch_cohort(&pure, &spec).unwrap();
    let report = find_critical_points(&cohort.mean_field(), &PeakFindConfig::default()).unwrap();
    let top = report
        .points
        .iter()
        .filter(|p| p.kind == PeakKind::Max)
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("tone peak");
    assert!(
        (top.location[0] - tone).abs() <= 0.5,
        "tone at {tone} Hz located at {}",
        top.location[0]
    );

    let elapsed = budget(start, 10.0, "criterion 11");
    println!(
        "criterion 11 PASS: 119 bins match the direct transform within {worst:.2e} \
         (tol 1e-9); {tone} Hz tone located at {:.3} Hz [{elapsed:.1}s]",
        top.location[0]
    );
}

#[test]
fn criterion_12_joint_intervals_cover_two_tone_frequencies() {
    let _guard = serial();
    let start = Instant::now();
    let spec = WelchSpec::new(240, 24.0).unwrap();
    let truths = [0.9, 2.3];
    let replicates = 200;
    let mut covered = 0usize;
    for rep in 0..replicates {
        let mut rng = lemma_rng(0xACCE55, rep);
        let phases: Vec<f64> =
            (0..2).map(|_| std::f64::consts::TAU * rng.random::<f64>()).collect();
        let series: Vec<f64> = (0..4800)
            .map(|t| {
                let time = t as f64 / 24.0;
                let z: f64 = StandardNormal.sample(&mut rng);
                (std::f64::consts::TAU * truths[0] * time + phases[0]).sin()
                    + (std::f64::consts::TAU * truths[1] * time + phases[1]).sin()
                    + 0.5 * z
            })
            .collect();
        let mut peaks =
            spectrum_peak_regions(&series, &spec, 0.05, &PeakFindConfig::default()).unwrap();
        peaks.sort_by(|a, b| b.peak.value.total_cmp(&a.peak.value));
        if peaks.len() < 2 {
            continue;
        }
        let mut regions: Vec<ConfidenceEllipsoid> =
            peaks.iter().take(2).map(|p| p.region.clone()).collect();
        ConfidenceEllipsoid::bonferroni_joint(&mut regions, 0.05).unwrap();
        let hit = |f: f64| regions.iter().any(|r| r.contains(&DVec::from_slice(&[f])));
        if hit(truths[0]) && hit(truths[1]) {
            covered += 1;
        }
    }
    let rate = covered as f64 / replicates as f64;
    assert!(rate >= 0.90, "joint coverage of both tone frequencies {rate} below 0.90");

    let elapsed = budget(start, 600.0, "criterion 12");
    println!(
        "criterion 12 PASS: joint 95% intervals covered both tones in {covered}/{replicates} \
         replicates (rate {rate:.3} >= 0.90) [{elapsed:.0}s]"
    );
}
