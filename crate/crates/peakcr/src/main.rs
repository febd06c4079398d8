//! Command-line tool for peak localization with confidence regions.
//!
//! Subcommands: `simulate` (write a synthetic cohort to disk), `peaks`
//! (locate critical points of a statistic field), `regions` (confidence
//! ellipsoids at the located maxima), `cover` (coverage / identifiability
//! experiments) and `spectrum` (Welch spectral peaks with frequency
//! intervals). Each reads a JSON config and writes a JSON report to stdout
//! or `--out`. Command-line overrides that do not apply to the invoked
//! subcommand are ignored.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use peakcr::config::{
    load_config, CoverConfig, DataSource, ExperimentKind, PeaksConfig, RegionsConfig,
    SimulateConfig, SpectrumConfig, CONFIG_VERSION,
};
use peakcr::io::{read_pkcr, read_series_csv, write_curve_csv, write_pkcr};
use peakcr::report::{
    write_json, PeaksReport, RegionReport, RegionsReport, SimulateManifest, SpectralPeakReport,
    SpectrumReport,
};
use peakcr::runner::{init_threads, parallel_coverage, parallel_identifiability};
use peakcr::{CliError, CliResult};
use peakcr_core::covariance::{grid_points, PointCovariance};
use peakcr_core::field::ScalarField;
use peakcr_core::grid_field::{GaussianKernel, SmoothField, DEFAULT_TRUNCATION_SIGMAS};
use peakcr_core::noisegen::{generate_cohort, sample_observations, SyntheticField};
use peakcr_core::peaks::{
    find_critical_points, CriticalPoint, PeakFindConfig, PeakFindReport, PeakKind,
};
use peakcr_core::regions::{ConfidenceEllipsoid, Polarity, DEFAULT_MC_DRAWS};
use peakcr_core::sample_fields::{CohortMoments, FieldCohort, TargetStat};
use peakcr_core::simharness::RegionMethod;
use peakcr_core::welch::{spectrum_peak_regions, WelchSpec};

/// Peak localization and confidence regions for lattice convolution fields.
#[derive(Debug, Parser)]
#[command(name = "peakcr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort and write one lattice file per subject.
    Simulate(RunArgs),
    /// Locate critical points of a statistic field.
    Peaks(RunArgs),
    /// Confidence regions at the located maxima of a statistic field.
    Regions(RunArgs),
    /// Run a coverage or identifiability experiment.
    Cover(RunArgs),
    /// Spectral peaks of a time series with frequency intervals.
    Spectrum(RunArgs),
}

/// Statistic selector on the command line.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    /// Sample mean field.
    Mean,
    /// Cohen's d field.
    CohensD,
}

impl From<TargetArg> for TargetStat {
    fn from(value: TargetArg) -> Self {
        match value {
            TargetArg::Mean => TargetStat::Mean,
            TargetArg::CohensD => TargetStat::CohensD,
        }
    }
}

/// Region calibration selector on the command line.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Chi-squared (asymptotic) calibration.
    Asym,
    /// Monte Carlo calibration.
    Mc,
}

/// Flags shared by every subcommand; flags that do not apply are ignored.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,

    /// Report destination: a file path, or a directory for `simulate`.
    /// Default: stdout (`simulate` requires it).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write a plot-ready CSV of the analyzed field to this path.
    #[arg(long)]
    plot_data: Option<PathBuf>,

    /// Master seed, overriding the config; omit both to draw from entropy.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for `cover` (default: the PEAKCR_THREADS variable,
    /// then all cores). Thread count never changes the numbers.
    #[arg(long)]
    threads: Option<usize>,

    /// Miscoverage level, overriding the config.
    #[arg(long)]
    alpha: Option<f64>,

    /// Region calibration, overriding the config.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,

    /// Statistic to analyze, overriding the config.
    #[arg(long, value_enum)]
    target: Option<TargetArg>,

    /// Simulation size: replicates for `cover`, draws for Monte Carlo
    /// calibration in `regions`.
    #[arg(long)]
    nsim: Option<usize>,

    /// Subjects in a simulated cohort, overriding the config.
    #[arg(long)]
    n: Option<usize>,

    /// Smoothing kernel full width at half maximum, overriding the config.
    #[arg(long)]
    fwhm: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Peaks(args) => run_peaks(args),
        Command::Regions(args) => run_regions(args),
        Command::Cover(args) => run_cover(args),
        Command::Spectrum(args) => run_spectrum(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}

/// Command line beats config; with neither, draw from entropy and announce
/// the drawn seed on stderr so the run can be reproduced.
fn resolve_seed(cli: Option<u64>, config: Option<u64>) -> u64 {
    match cli.or(config) {
        Some(seed) => seed,
        None => {
            let seed = rand::random::<u64>();
            eprintln!("seed: {seed}");
            seed
        }
    }
}

/// Subject fields assembled from either data source.
enum BuiltCohort {
    /// Simulated in memory; exact analytic signal.
    Synthetic(FieldCohort<SyntheticField>),
    /// Smoothed from lattice files.
    Grid(FieldCohort<SmoothField>),
}

/// Dispatch `f` over the concrete cohort type.
macro_rules! with_cohort {
    ($built:expr, $c:ident => $body:expr) => {
        match $built {
            BuiltCohort::Synthetic($c) => $body,
            BuiltCohort::Grid($c) => $body,
        }
    };
}

fn build_cohort(data: &DataSource, args: &RunArgs) -> CliResult<BuiltCohort> {
    match data {
        DataSource::Simulate { cohort, seed, replicate } => {
            let mut spec = cohort.clone();
            if let Some(n) = args.n {
                spec.subjects = n;
            }
            if let Some(f) = args.fwhm {
                spec.noise.fwhm = f;
            }
            let seed = resolve_seed(args.seed, *seed);
            let cohort = generate_cohort(&spec, seed, *replicate).map_err(CliError::from_run)?;
            Ok(BuiltCohort::Synthetic(cohort))
        }
        DataSource::Files { paths, fwhm, truncation_sigmas } => {
            if paths.is_empty() {
                return Err(CliError::Config("no subject files listed".into()));
            }
            let fwhm = args.fwhm.unwrap_or(*fwhm);
            let kernel =
                GaussianKernel::from_fwhm(fwhm, truncation_sigmas.unwrap_or(DEFAULT_TRUNCATION_SIGMAS))
                    .map_err(CliError::from_config)?;
            let samples = paths.iter().map(|p| read_pkcr(p)).collect::<CliResult<Vec<_>>>()?;
            let cohort = FieldCohort::from_samples(samples, kernel, true)
                .map_err(CliError::from_run)?;
            Ok(BuiltCohort::Grid(cohort))
        }
    }
}

/// Critical points of the chosen statistic field.
fn find_on_cohort<F: ScalarField>(
    cohort: &FieldCohort<F>,
    target: TargetStat,
    config: &PeakFindConfig,
) -> CliResult<PeakFindReport> {
    match target {
        TargetStat::Mean => find_critical_points(&cohort.mean_field(), config),
        TargetStat::CohensD => find_critical_points(&cohort.cohens_d_field(), config),
    }
    .map_err(CliError::from_run)
}

/// Sample the chosen statistic field on a refined grid for plotting.
fn curve_on_cohort<F: ScalarField>(
    cohort: &FieldCohort<F>,
    target: TargetStat,
    per_step: usize,
) -> CliResult<Vec<(Vec<f64>, f64)>> {
    let domain = cohort.domain();
    let step = cohort.grid_step() / per_step as f64;
    let mut rows = Vec::new();
    for s in grid_points(&domain, step) {
        let value = match target {
            TargetStat::Mean => cohort.mean_field().value(&s),
            TargetStat::CohensD => cohort.cohens_d_field().value(&s),
        }
        .map_err(CliError::from_run)?;
        rows.push((s.as_slice().to_vec(), value));
    }
    Ok(rows)
}

fn write_plot_data(args: &RunArgs, cohort: &BuiltCohort, target: TargetStat) -> CliResult<()> {
    if let Some(path) = &args.plot_data {
        let rows = with_cohort!(cohort, c => curve_on_cohort(c, target, 4))?;
        let dim = with_cohort!(cohort, c => c.dim());
        write_curve_csv(path, dim, &rows)?;
    }
    Ok(())
}

fn run_simulate(args: &RunArgs) -> CliResult<()> {
    let config: SimulateConfig = load_config(&args.config)?;
    config.validate()?;
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::Config("simulate writes a directory: pass --out".into()))?;
    let mut spec = config.cohort.clone();
    if let Some(n) = args.n {
        spec.subjects = n;
    }
    if let Some(f) = args.fwhm {
        spec.noise.fwhm = f;
    }
    let seed = resolve_seed(args.seed, config.seed);
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let mut files = Vec::with_capacity(spec.subjects);
    for subject in 0..spec.subjects {
        let sample = sample_observations(&spec, seed, config.replicate, subject as u64)
            .map_err(CliError::from_run)?;
        let name = format!("subject_{subject:03}.pkcr");
        write_pkcr(&out.join(&name), &sample)?;
        files.push(name);
    }
    let manifest = SimulateManifest {
        version: CONFIG_VERSION,
        seed,
        replicate: config.replicate,
        subjects: spec.subjects,
        files,
    };
    write_json(Some(&out.join("manifest.json")), &manifest)
}

fn run_peaks(args: &RunArgs) -> CliResult<()> {
    let config: PeaksConfig = load_config(&args.config)?;
    config.validate()?;
    let target = args.target.map_or(config.target, Into::into);
    let pconfig = config.peaks.unwrap_or_default();
    let cohort = build_cohort(&config.data, args)?;
    let report = with_cohort!(&cohort, c => find_on_cohort(c, target, &pconfig))?;
    write_plot_data(args, &cohort, target)?;
    write_json(args.out.as_deref(), &PeaksReport::new(target, &report))
}

/// Confidence regions at every located interior maximum of the target field.
#[allow(clippy::too_many_arguments)]
fn regions_on_cohort<F: ScalarField>(
    cohort: &FieldCohort<F>,
    target: TargetStat,
    method: RegionMethod,
    alpha: f64,
    joint: bool,
    mc_seed: u64,
    pconfig: &PeakFindConfig,
) -> CliResult<(Vec<CriticalPoint>, Vec<ConfidenceEllipsoid>)> {
    let report = find_on_cohort(cohort, target, pconfig)?;
    let maxima: Vec<CriticalPoint> =
        report.points.into_iter().filter(|p| p.kind == PeakKind::Max).collect();
    if maxima.is_empty() {
        return Err(CliError::Numeric("no interior maxima found".into()));
    }
    let n = cohort.len();
    let mut regions = Vec::with_capacity(maxima.len());
    for (j, peak) in maxima.iter().enumerate() {
        let jets = cohort.subject_jets(&peak.location).map_err(CliError::from_run)?;
        let cov = PointCovariance::from_jets(&jets).map_err(CliError::from_run)?;
        cov.check_conditioning().map_err(CliError::from_run)?;
        let moments = CohortMoments::from_jets(&jets);
        let region = match (target, method) {
            (TargetStat::Mean, RegionMethod::Asymptotic) => ConfidenceEllipsoid::asymptotic_mean(
                peak.location,
                &peak.hessian,
                &cov,
                n,
                alpha,
            ),
            (TargetStat::Mean, RegionMethod::MonteCarlo { draws }) => {
                ConfidenceEllipsoid::monte_carlo_mean(
                    peak.location,
                    &peak.hessian,
                    &cov,
                    n,
                    alpha,
                    draws,
                    Polarity::Max,
                    mc_seed,
                    j as u64,
                )
            }
            (TargetStat::CohensD, RegionMethod::Asymptotic) => {
                let d_jet = moments.cohens_d().map_err(CliError::from_run)?;
                ConfidenceEllipsoid::asymptotic_cohens_d(
                    peak.location,
                    &d_jet,
                    &cov,
                    moments.variance(),
                    n,
                    alpha,
                )
            }
            (TargetStat::CohensD, RegionMethod::MonteCarlo { .. }) => {
                ConfidenceEllipsoid::monte_carlo_cohens_d()
            }
        }
        .map_err(CliError::from_run)?;
        regions.push(region);
    }
    if joint {
        ConfidenceEllipsoid::bonferroni_joint(&mut regions, alpha).map_err(CliError::from_run)?;
    }
    Ok((maxima, regions))
}

fn run_regions(args: &RunArgs) -> CliResult<()> {
    let config: RegionsConfig = load_config(&args.config)?;
    config.validate()?;
    let target = args.target.map_or(config.target, Into::into);
    let alpha = args.alpha.unwrap_or(config.alpha);
    let mut method = match args.method {
        None => config.method,
        Some(MethodArg::Asym) => RegionMethod::Asymptotic,
        Some(MethodArg::Mc) => match config.method {
            RegionMethod::MonteCarlo { draws } => RegionMethod::MonteCarlo { draws },
            RegionMethod::Asymptotic => RegionMethod::MonteCarlo { draws: DEFAULT_MC_DRAWS },
        },
    };
    if let (RegionMethod::MonteCarlo { draws }, Some(nsim)) = (&mut method, args.nsim) {
        *draws = nsim;
    }
    if matches!(method, RegionMethod::MonteCarlo { .. }) && target == TargetStat::CohensD {
        let err = ConfidenceEllipsoid::monte_carlo_cohens_d().expect_err("always unsupported");
        return Err(CliError::from_run(err));
    }
    // one master seed serves both the simulated cohort and the Monte Carlo
    // calibration: the two consume independent derived streams
    let mc_seed = match method {
        RegionMethod::MonteCarlo { .. } => resolve_seed(args.seed, config.seed),
        RegionMethod::Asymptotic => 0,
    };
    let pconfig = config.peaks.unwrap_or_default();
    let cohort = build_cohort(&config.data, args)?;
    let (peaks, regions) = with_cohort!(&cohort, c => {
        regions_on_cohort(c, target, method, alpha, config.joint, mc_seed, &pconfig)
    })?;
    write_plot_data(args, &cohort, target)?;
    let seed = matches!(method, RegionMethod::MonteCarlo { .. }).then_some(mc_seed);
    let report =
        RegionsReport::new(target, method, alpha, config.joint, seed, &peaks, &regions);
    write_json(args.out.as_deref(), &report)
}

fn run_cover(args: &RunArgs) -> CliResult<()> {
    let config: CoverConfig = load_config(&args.config)?;
    config.validate()?;
    init_threads(args.threads)?;
    let report = match config.experiment {
        ExperimentKind::Coverage(mut c) => {
            if let Some(seed) = args.seed {
                c.seed = seed;
            }
            if let Some(n) = args.n {
                c.cohort.subjects = n;
            }
            if let Some(f) = args.fwhm {
                c.cohort.noise.fwhm = f;
            }
            if let Some(a) = args.alpha {
                c.alpha = a;
            }
            if let Some(r) = args.nsim {
                c.replicates = r;
            }
            if let Some(t) = args.target {
                c.target = t.into();
            }
            c.method = match args.method {
                None => c.method,
                Some(MethodArg::Asym) => RegionMethod::Asymptotic,
                Some(MethodArg::Mc) => match c.method {
                    RegionMethod::MonteCarlo { draws } => RegionMethod::MonteCarlo { draws },
                    RegionMethod::Asymptotic => {
                        RegionMethod::MonteCarlo { draws: DEFAULT_MC_DRAWS }
                    }
                },
            };
            peakcr::report::CoverReport::coverage(
                parallel_coverage(&c).map_err(CliError::from_run)?,
            )
        }
        ExperimentKind::Identifiability(mut c) => {
            if let Some(seed) = args.seed {
                c.seed = seed;
            }
            if let Some(n) = args.n {
                c.cohort.subjects = n;
            }
            if let Some(f) = args.fwhm {
                c.cohort.noise.fwhm = f;
            }
            if let Some(r) = args.nsim {
                c.replicates = r;
            }
            if let Some(t) = args.target {
                c.target = t.into();
            }
            peakcr::report::CoverReport::identifiability(
                parallel_identifiability(&c).map_err(CliError::from_run)?,
            )
        }
    };
    write_json(args.out.as_deref(), &report)
}

fn run_spectrum(args: &RunArgs) -> CliResult<()> {
    let config: SpectrumConfig = load_config(&args.config)?;
    config.validate()?;
    let alpha = args.alpha.unwrap_or(config.alpha);
    let spec = config.welch.to_spec()?;
    let series = read_series_csv(&config.input)?;
    let pconfig = config.peaks.unwrap_or_default();
    let mut found =
        spectrum_peak_regions(&series, &spec, alpha, &pconfig).map_err(CliError::from_run)?;
    if config.joint && !found.is_empty() {
        let mut regions: Vec<ConfidenceEllipsoid> =
            found.iter().map(|p| p.region.clone()).collect();
        ConfidenceEllipsoid::bonferroni_joint(&mut regions, alpha).map_err(CliError::from_run)?;
        for (p, r) in found.iter_mut().zip(regions) {
            p.region = r;
        }
    }
    found.sort_by(|a, b| b.peak.value.total_cmp(&a.peak.value));
    if let Some(path) = &args.plot_data {
        write_spectrum_curve(path, &series, &spec)?;
    }
    let segments = if series.len() >= spec.segment {
        1 + (series.len() - spec.segment) / spec.stride()
    } else {
        0
    };
    let domain = spec.domain();
    let peaks = found
        .into_iter()
        .map(|p| {
            let region = RegionReport::from_region(&p.region);
            SpectralPeakReport {
                frequency: p.peak.location[0],
                power_db: p.peak.value,
                interval: region.interval.unwrap_or((f64::NAN, f64::NAN)),
                region,
            }
        })
        .collect();
    let report = SpectrumReport {
        version: CONFIG_VERSION,
        rate: spec.rate,
        segment: spec.segment,
        segments,
        alpha,
        joint: config.joint,
        band: (domain.lo()[0], domain.hi()[0]),
        peaks,
    };
    write_json(args.out.as_deref(), &report)
}

/// Welch log-average spectrum sampled at eight points per frequency bin.
fn write_spectrum_curve(path: &Path, series: &[f64], spec: &WelchSpec) -> CliResult<()> {
    let cohort =
        peakcr_core::welch::welch_cohort(series, spec).map_err(CliError::from_run)?;
    let field = cohort.mean_field();
    let domain = field.domain();
    let step = field.grid_step() / 8.0;
    let mut rows = Vec::new();
    for s in grid_points(&domain, step) {
        let value = field.value(&s).map_err(CliError::from_run)?;
        rows.push((s.as_slice().to_vec(), value));
    }
    write_curve_csv(path, 1, &rows)
}
