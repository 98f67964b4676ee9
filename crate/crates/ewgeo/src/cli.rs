//! `ewgeo` command-line front end.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ewgeo_core::boundary::{boundary_area_ratio, BoundarySampling};
use ewgeo_core::curvature::{default_step, reference_scalar_curvature, scalar_curvature_fd};
use ewgeo_core::metric::{sd_tensor_cartesian, sd_tensor_spherical, volume_element, VolumeElementCase};
use ewgeo_core::montecarlo::{analytic_acceptance, estimate_many, sample_ew, weight, Chunking, EstimateConfig, Predicate, DEFAULT_CHUNK_SIZE};
use ewgeo_core::point::{spectrum, to_spherical, validate, validate_with_slack, DEFAULT_SLACK};
use ewgeo_core::quadrature::{
    simplex_constants_as_printed, bisep_bound_closed_form, integrate_probability, normalization_constants,
    simplex_fisher_integrate, simplex_fisher_probability, trisep_bound_closed_form, MarginalRegion, QuadratureResult, Tolerance,
};
use ewgeo_core::region::{cross_section_raster, triseparable_marginal_constraints, Plane};
use ewgeo_core::{EWPoint, Error, Result};

use crate::exec::{default_workers, PoolExecutor};
use crate::io::{
    parse_case, parse_density_matrix, parse_point, point_to_json, raster_csv, raster_legend, raster_pgm, read_points_csv,
    tensor_to_json, write_weighted_points_csv,
};
use crate::oracle::{density_matrix, sd_tensor_direct, twirl};
use crate::ppt::reducer;
use crate::regions::{references, NamedRegion};
use crate::report::{build_report, Json, Provenance};
use crate::sample::interior_points;

#[derive(Parser, Debug)]
#[command(name = "ewgeo", version, about = "SD/Bures geometry of Eggeling-Werner tripartite states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check EW validity of one point or a CSV file of points.
    Validate {
        #[arg(long, conflicts_with = "points_csv")]
        point: Option<String>,
        #[arg(long)]
        points_csv: Option<PathBuf>,
        /// Tolerance for points produced by floating arithmetic; exact when omitted.
        #[arg(long)]
        slack: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// SD metric tensor at a point.
    Tensor {
        #[arg(long)]
        point: String,
        #[arg(long, default_value = "general")]
        case: String,
        #[arg(long, value_enum, default_value_t = Chart::Cartesian)]
        chart: Chart,
        /// Report Bures components (one quarter of SD).
        #[arg(long)]
        bures: bool,
        #[command(flatten)]
        output: Output,
    },
    /// SD volume element at a point.
    VolumeElement {
        #[arg(long)]
        point: String,
        #[arg(long, default_value = "general")]
        case: String,
        #[command(flatten)]
        output: Output,
    },
    /// Eigenvalues and multiplicities of the EW state for subsystem dimension d.
    Spectrum {
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 3)]
        d: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Compare closed forms with the density-matrix oracle at random points.
    OracleCheck {
        #[arg(long, default_value_t = 3)]
        d: u64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Finite-difference Bures scalar curvature.
    Curvature {
        #[arg(long)]
        point: String,
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo SD probabilities of one or more regions on a shared sample.
    Estimate {
        #[arg(long, default_value = "general")]
        case: String,
        /// Built-in region name or region-spec file; repeatable.
        #[arg(long, required = true)]
        region: Vec<String>,
        #[arg(long, default_value_t = 5)]
        subsamples: u32,
        /// Raw draws per subsample; accepts forms like 1e8.
        #[arg(long, default_value = "1e9", value_parser = parse_count)]
        points_per: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE, value_parser = parse_count)]
        chunk_size: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write accepted points of the first subsample with their weights.
        #[arg(long)]
        dump_points: Option<PathBuf>,
        #[arg(long, default_value = "1e5", value_parser = parse_count)]
        dump_limit: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Deterministic integrals.
    Quadrature {
        #[arg(long, value_enum)]
        target: Target,
        /// Region-spec file with (r_minus, r_plus) constraints replacing the target's default region.
        #[arg(long)]
        region: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Ratio of boundary areas of two regions.
    Boundary {
        #[arg(long, default_value = "general")]
        case: String,
        #[arg(long)]
        region_a: String,
        #[arg(long)]
        region_b: String,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SamplingArg::CubeBallFiltered)]
        sampling: SamplingArg,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Labeled cross-section at fixed (r_minus, r_plus).
    Raster {
        #[arg(long)]
        rminus: f64,
        #[arg(long)]
        rplus: f64,
        #[arg(long, default_value_t = 256)]
        res: usize,
        #[arg(long, default_value = "r1r2")]
        plane: String,
        /// Extra region-spec files tightening the triseparable region.
        #[arg(long)]
        region: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = RasterFormat::Pgm)]
        format: RasterFormat,
        #[command(flatten)]
        output: Output,
    },
    /// Project a density matrix onto the EW family.
    Twirl {
        /// JSON file {"d": d, "re": [[…]], "im": [[…]]}.
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Chart {
    Cartesian,
    Spherical,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RasterFormat {
    Pgm,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Normalization,
    TrisepBound,
    BisepBound,
    QubitBound,
    Simplex,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SamplingArg {
    CubeBallFiltered,
    Cube,
}

/// Parses counts such as `1000`, `1e8` or `2.5e6`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("\"{s}\" is not a count"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("\"{s}\" is not a whole nonnegative count"))
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameters(_) | Error::ConfigParse { .. } => 2,
        Error::NonConvergence(_) => 3,
        Error::BoundarySingularity(_) => 4,
        Error::DegenerateSpectrum(_) => 5,
    }
}

/// Runs the CLI on `argv` (including the program name). Reports go to
/// `stdout` unless `--out` is given; diagnostics go to `stderr`.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(output: &Output, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) => write_file(path, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidParameters(format!("cannot write to stdout: {e}"))),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidParameters(format!("cannot write {}: {e}", path.display())))
}

fn case_of(name: &str) -> Result<VolumeElementCase> {
    parse_case(name)
}

fn executor(workers: Option<usize>) -> Result<PoolExecutor> {
    PoolExecutor::new(match workers {
        Some(w) => w,
        None => default_workers()?,
    })
}

fn quad_json(r: &QuadratureResult) -> Json {
    Json::obj([
        ("value", Json::Num(r.value)),
        ("error_estimate", Json::Num(r.error)),
        ("evaluations", Json::uint(r.evaluations)),
        ("method", Json::str(r.method.clone())),
        ("provenance", Json::str(Provenance::DerivedOracle.label())),
    ])
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { point, points_csv, slack, output } => {
            let points = match (point, points_csv) {
                (Some(p), None) => vec![parse_point(&p)?],
                (None, Some(path)) => {
                    let f = std::fs::File::open(&path)
                        .map_err(|e| Error::InvalidParameters(format!("cannot open {}: {e}", path.display())))?;
                    read_points_csv(f)?
                }
                _ => return Err(Error::InvalidParameters("give exactly one of --point or --points-csv".into())),
            };
            let rows = points
                .iter()
                .map(|p| {
                    let v = match slack {
                        Some(eps) => validate_with_slack(p, eps),
                        None => validate(p),
                    };
                    Json::obj([
                        ("point", point_to_json(p)),
                        ("r0", Json::Num(p.r0())),
                        ("valid", Json::Bool(v.is_valid())),
                        ("violations", Json::Arr(v.violations.iter().map(|x| Json::str(x.to_string())).collect())),
                    ])
                })
                .collect();
            let config = Json::obj([
                ("points", Json::uint(points.len() as u64)),
                ("slack", slack.map_or(Json::Null, Json::Num)),
                ("default_slack", Json::Num(DEFAULT_SLACK)),
            ]);
            emit(&output, &build_report("validate", config, Json::Arr(rows)).render(), stdout)
        }
        Command::Tensor { point, case, chart, bures, output } => {
            let p = parse_point(&point)?;
            let case = case_of(&case)?;
            let t = match chart {
                Chart::Cartesian => sd_tensor_cartesian(&p, case)?,
                Chart::Spherical => sd_tensor_spherical(&to_spherical(&p), case)?,
            };
            let t = if bures { t.to_bures() } else { t };
            let config = Json::obj([
                ("point", point_to_json(&p)),
                ("case", Json::str(case.name())),
                ("chart", Json::str(if chart == Chart::Cartesian { "cartesian" } else { "spherical" })),
                ("normalization", Json::str(if bures { "bures" } else { "sd" })),
            ]);
            let mut res = tensor_to_json(&t);
            res.push("sqrt_det", Json::Num(t.sqrt_det()));
            emit(&output, &build_report("tensor", config, res).render(), stdout)
        }
        Command::VolumeElement { point, case, output } => {
            let p = parse_point(&point)?;
            let case = case_of(&case)?;
            let v = volume_element(&p, case)?;
            let config = Json::obj([("point", point_to_json(&p)), ("case", Json::str(case.name()))]);
            let res = Json::obj([("volume_element", Json::claim(v, Provenance::DerivedOracle))]);
            emit(&output, &build_report("volume-element", config, res).render(), stdout)
        }
        Command::Spectrum { point, d, output } => {
            let p = parse_point(&point)?;
            let s = spectrum(&p, d)?;
            let entries = s
                .entries
                .iter()
                .map(|&(v, m)| Json::obj([("eigenvalue", Json::Num(v)), ("multiplicity", Json::uint(m))]))
                .collect();
            let config = Json::obj([("point", point_to_json(&p)), ("d", Json::uint(d))]);
            let res = Json::obj([("entries", Json::Arr(entries)), ("weighted_sum", Json::Num(s.weighted_sum()))]);
            emit(&output, &build_report("spectrum", config, res).render(), stdout)
        }
        Command::OracleCheck { d, points, seed, output } => {
            let res = oracle_check(d, points, seed)?;
            let config = Json::obj([("d", Json::uint(d)), ("points", Json::uint(points as u64)), ("seed", Json::uint(seed))]);
            emit(&output, &build_report("oracle-check", config, res).render(), stdout)
        }
        Command::Curvature { point, step, output } => {
            let p = parse_point(&point)?;
            let s = to_spherical(&p);
            let h = step.unwrap_or_else(|| default_step(&s));
            let value = scalar_curvature_fd(&s, h)?;
            let want = reference_scalar_curvature(p.r0());
            let config = Json::obj([("point", point_to_json(&p)), ("step", Json::Num(h))]);
            let res = Json::obj([
                ("bures_scalar_curvature", Json::claim(value, Provenance::DerivedOracle)),
                ("sd_scalar_curvature", Json::claim(value / 4.0, Provenance::DerivedOracle)),
                ("stated_formula_20_plus_18_over_r0", Json::claim(want, Provenance::Published)),
                ("relative_deviation", Json::Num((value - want).abs() / want)),
            ]);
            emit(&output, &build_report("curvature", config, res).render(), stdout)
        }
        Command::Estimate {
            case,
            region,
            subsamples,
            points_per,
            seed,
            chunk_size,
            workers,
            format,
            dump_points,
            dump_limit,
            output,
        } => {
            let case = case_of(&case)?;
            let regions: Vec<NamedRegion> = region.iter().map(|r| NamedRegion::resolve(r, case)).collect::<Result<_>>()?;
            let config =
                EstimateConfig { case, subsamples, n_raw_per: points_per, seed, chunking: Chunking { chunk_size } };
            let report = run_estimate(&config, &regions, &executor(workers)?)?;
            if let Some(path) = dump_points {
                dump_accepted(&path, &config, dump_limit)?;
            }
            let text = match format {
                Format::Json => report.render(),
                Format::Csv => estimate_csv(&report),
            };
            emit(&output, &text, stdout)
        }
        Command::Quadrature { target, region, tol, output } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameters("--tol must be positive".into()));
            }
            let override_region = match &region {
                Some(path) => Some(MarginalRegion::from_constraints(&crate::io::load_region_spec(path)?.constraints)?),
                None => None,
            };
            let res = run_quadrature(target, override_region, Tolerance::relative(tol))?;
            let config = Json::obj([
                ("target", Json::str(target.to_possible_value().expect("named").get_name().to_string())),
                ("region", region.map_or(Json::Null, |p| Json::str(p.display().to_string()))),
                ("tol", Json::Num(tol)),
            ]);
            emit(&output, &build_report("quadrature", config, res).render(), stdout)
        }
        Command::Boundary { case, region_a, region_b, n, seed, sampling, workers, output } => {
            let case = case_of(&case)?;
            let a = NamedRegion::resolve(&region_a, case)?;
            let b = NamedRegion::resolve(&region_b, case)?;
            let (Some(sa), Some(sb)) = (a.spec(), b.spec()) else {
                return Err(Error::InvalidParameters("boundary areas need polynomial region specs on both sides".into()));
            };
            let sampling = match sampling {
                SamplingArg::CubeBallFiltered => BoundarySampling::CubeBallFiltered,
                SamplingArg::Cube => BoundarySampling::Cube,
            };
            let rep = boundary_area_ratio(sa, sb, case, n, seed, sampling, &executor(workers)?)?;
            let config = Json::obj([
                ("case", Json::str(case.name())),
                ("region_a", a.config_json()),
                ("region_b", b.config_json()),
                ("n", Json::uint(n)),
                ("seed", Json::uint(seed)),
                ("sampling", Json::str(sampling.name())),
                ("chunk_size", Json::uint(1 << 16)),
            ]);
            let res = Json::obj([
                ("draws", Json::uint(rep.draws)),
                ("sum_h", Json::nums(&rep.sum_h)),
                ("saturation_points", Json::Arr(rep.saturation_points.iter().map(|&x| Json::uint(x)).collect())),
                ("singular_roots", Json::uint(rep.singular)),
                ("ratio", rep.ratio.map_or(Json::Null, |r| Json::claim(r, Provenance::Estimate))),
                ("estimator", Json::str("plain sum of sqrt(det) of the boundary block; no surface Jacobian")),
                (
                    "published_references_for_full_constraint_sets",
                    Json::Arr(vec![
                        Json::obj([("what", Json::str("qubit trisep/bisep")), ("value", Json::Num(0.34398)), ("provenance", Json::str("published"))]),
                        Json::obj([("what", Json::str("qutrit trisep/bisep")), ("value", Json::Num(0.0949602)), ("provenance", Json::str("published"))]),
                        Json::obj([("what", Json::str("qutrit trisep/PPT")), ("value", Json::Num(0.0000105263)), ("provenance", Json::str("published"))]),
                    ]),
                ),
            ]);
            emit(&output, &build_report("boundary", config, res).render(), stdout)
        }
        Command::Raster { rminus, rplus, res, plane, region, format, output } => {
            let plane = Plane::from_name(&plane)
                .ok_or_else(|| Error::InvalidParameters(format!("unknown plane \"{plane}\" (r1r2, r1r3 or r2r3)")))?;
            let extras = region.iter().map(|p| crate::io::load_region_spec(p)).collect::<Result<Vec<_>>>()?;
            let grid = cross_section_raster(rminus, rplus, plane, res, &extras)?;
            match format {
                RasterFormat::Csv => emit(&output, &raster_csv(&grid), stdout),
                RasterFormat::Pgm => {
                    let Some(path) = &output.out else {
                        return Err(Error::InvalidParameters("PGM output needs --out (the legend is written beside it)".into()));
                    };
                    write_file(path, &raster_pgm(&grid))?;
                    let config = Json::obj([
                        ("rminus", Json::Num(rminus)),
                        ("rplus", Json::Num(rplus)),
                        ("res", Json::uint(res as u64)),
                        ("plane", Json::str(plane.name())),
                        ("regions", Json::Arr(region.iter().map(|p| Json::str(p.display().to_string())).collect())),
                    ]);
                    let legend = build_report("raster-legend", config, raster_legend(&grid));
                    write_file(&path.with_extension("legend.json"), &legend.render())
                }
            }
        }
        Command::Twirl { matrix, output } => {
            let text = std::fs::read_to_string(&matrix)
                .map_err(|e| Error::InvalidParameters(format!("cannot read {}: {e}", matrix.display())))?;
            let rho = parse_density_matrix(&text)?;
            let p = twirl(&rho)?;
            let v = validate_with_slack(&p, DEFAULT_SLACK);
            let config = Json::obj([("matrix", Json::str(matrix.display().to_string())), ("d", Json::uint(rho.d()))]);
            let res = Json::obj([
                ("point", point_to_json(&p)),
                ("valid_with_default_slack", Json::Bool(v.is_valid())),
                ("violations", Json::Arr(v.violations.iter().map(|x| Json::str(x.to_string())).collect())),
            ]);
            emit(&output, &build_report("twirl", config, res).render(), stdout)
        }
    }
}

/// Closed forms against the density-matrix oracle at random interior points.
pub fn oracle_check(d: u64, points: usize, seed: u64) -> Result<Json> {
    let case = if d == 2 { VolumeElementCase::Qubit } else { VolumeElementCase::General };
    let pts = interior_points(case, points, seed, 0.02);
    let (mut tensor_dev, mut spectrum_dev, mut ppt_dev) = (0.0f64, 0.0f64, 0.0f64);
    let fast = if d <= 3 { Some(reducer(d)?) } else { None };
    for p in &pts {
        let closed = sd_tensor_cartesian(p, case)?;
        tensor_dev = tensor_dev.max(sd_tensor_direct(p, d)?.max_relative_deviation(&closed, 1e-12)?);
        let rho = density_matrix(p, d)?;
        let got = rho.eigenvalues();
        let mut want = spectrum(p, d)?.expanded();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            spectrum_dev = spectrum_dev.max((g - w).abs());
        }
        if let Some(r) = fast {
            let full = crate::oracle::partial_transpose_min_eig(p, d)?;
            ppt_dev = ppt_dev.max((r.min_eigenvalue(p)? - full).abs());
        }
    }
    Ok(Json::obj([
        ("points", Json::uint(pts.len() as u64)),
        ("max_relative_tensor_deviation", Json::Num(tensor_dev)),
        ("max_abs_eigenvalue_deviation", Json::Num(spectrum_dev)),
        ("max_abs_reduced_ppt_deviation", if fast.is_some() { Json::Num(ppt_dev) } else { Json::Null }),
        ("tensor_within_1e-8", Json::Bool(tensor_dev < 1e-8)),
    ]))
}

/// Shared-sample estimate of every region, as a report.
pub fn run_estimate<E: ewgeo_core::montecarlo::ChunkExecutor>(
    config: &EstimateConfig,
    regions: &[NamedRegion],
    executor: &E,
) -> Result<Json> {
    let closures: Vec<Box<dyn Fn(&EWPoint) -> bool + Sync + '_>> =
        regions.iter().map(|r| Box::new(move |p: &EWPoint| r.contains(p)) as Box<dyn Fn(&EWPoint) -> bool + Sync>).collect();
    let named: Vec<(&str, Predicate<'_>)> = regions.iter().zip(&closures).map(|(r, c)| (r.name.as_str(), &**c as Predicate<'_>)).collect();
    let reports = estimate_many(config, &named, executor)?;

    let mut results = Vec::new();
    for (r, rep) in regions.iter().zip(&reports) {
        let subs = rep
            .subsamples
            .iter()
            .map(|s| {
                Json::obj([
                    ("raw", Json::uint(s.raw)),
                    ("accepted", Json::uint(s.accepted)),
                    ("discarded", Json::uint(s.discarded)),
                    ("hits", Json::uint(s.hits)),
                    ("sum_weights", Json::Num(s.sum_weights)),
                    ("sum_region_weights", Json::Num(s.sum_region_weights)),
                    ("probability", Json::Num(s.probability)),
                ])
            })
            .collect();
        results.push(Json::obj([
            ("region", Json::str(r.name.clone())),
            ("necessary_conditions_only", Json::Bool(r.necessary_only())),
            ("pooled_probability", Json::claim(rep.pooled_probability, Provenance::Estimate)),
            ("bias_adjusted_std_dev", rep.std_dev.map_or(Json::Null, |s| Json::claim(s, Provenance::Estimate))),
            ("subsamples", Json::Arr(subs)),
            ("references", Json::Arr(references(&r.name, config.case).iter().map(|x| x.to_json()).collect())),
        ]));
    }
    let first = &reports[0];
    let summary = Json::obj([
        ("total_raw", Json::uint(first.subsamples.iter().map(|s| s.raw).sum())),
        ("total_accepted", Json::uint(first.total_accepted())),
        ("total_discarded", Json::uint(first.total_discarded())),
        ("acceptance_rate", Json::claim(first.acceptance_rate, Provenance::Estimate)),
        ("analytic_acceptance_rate", Json::claim(analytic_acceptance(config.case), Provenance::DerivedOracle)),
        (
            "stated_acceptance_rate",
            Json::claim(if config.case == VolumeElementCase::General { 0.026 } else { 0.131 }, Provenance::Published),
        ),
    ]);
    let cfg = Json::obj([
        ("case", Json::str(config.case.name())),
        ("regions", Json::Arr(regions.iter().map(|r| r.config_json()).collect())),
        ("subsamples", Json::uint(config.subsamples as u64)),
        ("points_per", Json::uint(config.n_raw_per)),
        ("seed", Json::uint(config.seed)),
        ("chunk_size", Json::uint(config.chunking.chunk_size)),
        ("rng", Json::str("chacha8, stream = subsample << 32 | chunk")),
    ]);
    Ok(build_report("estimate", cfg, Json::obj([("sampling", summary), ("regions", Json::Arr(results))])))
}

fn estimate_csv(report: &Json) -> String {
    let mut out = String::from("region,subsample,raw,accepted,discarded,hits,sum_weights,sum_region_weights,probability\n");
    if let Some(Json::Arr(regions)) = report.get("results").and_then(|r| r.get("regions")) {
        for r in regions {
            let name = match r.get("region") {
                Some(Json::Str(s)) => s.clone(),
                _ => String::new(),
            };
            if let Some(Json::Arr(subs)) = r.get("subsamples") {
                for (i, s) in subs.iter().enumerate() {
                    let cell = |k: &str| match s.get(k) {
                        Some(Json::Int(v)) => v.to_string(),
                        Some(Json::Num(v)) => crate::report::format_number(*v),
                        _ => String::new(),
                    };
                    out.push_str(&format!(
                        "{name},{i},{},{},{},{},{},{},{}\n",
                        cell("raw"),
                        cell("accepted"),
                        cell("discarded"),
                        cell("hits"),
                        cell("sum_weights"),
                        cell("sum_region_weights"),
                        cell("probability")
                    ));
                }
            }
        }
    }
    out
}

fn dump_accepted(path: &Path, config: &EstimateConfig, limit: u64) -> Result<()> {
    let mut rows = Vec::new();
    sample_ew(config.case, config.n_raw_per, config.seed, config.chunking, |p| {
        if (rows.len() as u64) < limit {
            if let Some(w) = weight(p, config.case) {
                rows.push((*p, w));
            }
        }
    })?;
    let f = std::fs::File::create(path).map_err(|e| Error::InvalidParameters(format!("cannot write {}: {e}", path.display())))?;
    write_weighted_points_csv(f, &rows)
}

fn run_quadrature(target: Target, region: Option<MarginalRegion>, tol: Tolerance) -> Result<Json> {
    let trisep = || MarginalRegion::from_constraints(&triseparable_marginal_constraints());
    Ok(match target {
        Target::Normalization => {
            let n = normalization_constants(tol)?;
            let ratio = n.qubit.value / n.qubit_derived;
            Json::obj([
                ("general_total", quad_json(&n.general)),
                ("general_reference", Json::claim(n.general_published, Provenance::Published)),
                ("qubit_total", quad_json(&n.qubit)),
                ("qubit_stated", Json::claim(n.qubit_published, Provenance::Published)),
                ("qubit_derived", Json::claim(n.qubit_derived, Provenance::DerivedOracle)),
                (
                    "qubit_reproduces",
                    Json::str(if (ratio - 1.0).abs() < 1e-6 {
                        "derived 4*pi^2/3; the stated 2*pi^2/3 is smaller by a factor of 2"
                    } else {
                        "neither reference"
                    }),
                ),
            ])
        }
        Target::TrisepBound => {
            let r = integrate_probability(VolumeElementCase::General, &region.map_or_else(trisep, Ok)?, tol)?;
            Json::obj([
                ("probability", quad_json(&r)),
                ("stated", Json::claim(0.177661, Provenance::Published)),
                ("closed_form", Json::claim(trisep_bound_closed_form(), Provenance::DerivedOracle)),
            ])
        }
        Target::BisepBound => {
            let default = MarginalRegion { r_minus_max: 1.0 / 3.0, ..MarginalRegion::full() };
            let r = integrate_probability(VolumeElementCase::General, &region.unwrap_or(default), tol)?;
            Json::obj([
                ("probability", quad_json(&r)),
                ("stated", Json::claim(0.825312, Provenance::Published)),
                ("closed_form", Json::claim(bisep_bound_closed_form(), Provenance::DerivedOracle)),
            ])
        }
        Target::QubitBound => {
            let r = integrate_probability(VolumeElementCase::Qubit, &region.map_or_else(trisep, Ok)?, tol)?;
            Json::obj([
                ("probability", quad_json(&r)),
                ("stated", Json::claim(27.0 / 64.0, Provenance::Published)),
                ("derived", Json::claim(5.0 / 16.0, Provenance::DerivedOracle)),
            ])
        }
        Target::Simplex => {
            let total = simplex_fisher_integrate(&MarginalRegion::full(), tol)?;
            let reg = region.map_or_else(trisep, Ok)?;
            let p = simplex_fisher_probability(&reg, tol)?;
            let (sep, bisep) = simplex_constants_as_printed();
            Json::obj([
                ("full_simplex_total", quad_json(&total)),
                ("full_simplex_reference", Json::claim(2.0 * PI, Provenance::DerivedOracle)),
                ("region_probability", quad_json(&p)),
                ("stated_separable_constant", Json::claim(0.170502, Provenance::Published)),
                ("stated_biseparable_constant", Json::claim(0.179607, Provenance::Published)),
                ("printed_separable_formula_value", Json::claim(sep, Provenance::DerivedOracle)),
                ("printed_biseparable_formula_value", Json::claim(bisep, Provenance::DerivedOracle)),
                ("note", Json::str("the printed closed forms evaluate negative; constants are reported, not checked")),
            ])
        }
    })
}
