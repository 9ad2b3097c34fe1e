//! Command-line front end. `run` is the whole program; `main` only forwards
//! the process arguments and exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ifs_chisel::{
    attractor_estimate, convergence_report, deletion_iterate, ellipse_params, forward_iterate_with,
    hausdorff_distance, rasterize_region, render_locus, verify_invariance, write_pbm,
    write_points_csv, Error, ForwardOptions, IfsSystem, IterationTrace, MaxwellRegion, Point,
    PointSet, Rect, Stages,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ifs-chisel", version, about = "Invariant Maxwell ellipses and attractors of planar IFSs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the foci, λ, D and M of the invariant ellipse.
    Ellipse {
        #[command(flatten)]
        source: IfsSource,
        #[arg(long)]
        json: bool,
    },
    /// Sample the ellipse and check that every map sends it into itself.
    Verify {
        #[command(flatten)]
        source: IfsSource,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Replace M by this distance-sum threshold (exploration only).
        #[arg(long)]
        threshold: Option<f64>,
        /// Use these foci (CSV x,y) instead of the fixed points; needs --threshold.
        #[arg(long, requires = "threshold")]
        foci: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Write every stage of a forward or deletion iteration.
    Iterate {
        #[command(flatten)]
        source: IfsSource,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        n: usize,
        /// Forward mode seed.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true, conflicts_with = "resolution")]
        seed_point: Option<Point>,
        /// Deletion mode grid resolution.
        #[arg(long)]
        resolution: Option<usize>,
        /// Deletion mode: override M for the starting region.
        #[arg(long)]
        threshold: Option<f64>,
        /// Forward mode: quantized dedup cell size.
        #[arg(long)]
        dedup: Option<f64>,
        #[arg(long, default_value_t = ifs_chisel::iteration::DEFAULT_MAX_POINTS)]
        max_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hausdorff distance between two CSV point sets.
    Hausdorff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Rasterize the set of points whose distance sum to the foci is at most S.
    Locus {
        #[arg(long)]
        foci: PathBuf,
        #[arg(long)]
        sum: f64,
        #[arg(long = "box", value_parser = parse_rect, allow_hyphen_values = true)]
        bbox: Rect,
        #[arg(long)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the 4-neighbour outline.
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Estimate the attractor to within Hausdorff distance eps.
    Attractor {
        #[command(flatten)]
        source: IfsSource,
        #[arg(long)]
        eps: f64,
        /// Defaults to the fixed point of the first map.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        seed_point: Option<Point>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct IfsSource {
    /// IFS JSON document.
    #[arg(long)]
    ifs: Option<PathBuf>,
    /// One of cantor, sierpinski, paper-example.
    #[arg(long)]
    builtin: Option<String>,
}

impl IfsSource {
    fn load(&self) -> anyhow::Result<IfsSystem> {
        match (&self.ifs, &self.builtin) {
            (Some(path), None) => {
                let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(IfsSystem::parse(&bytes)?)
            }
            (None, Some(name)) => Ok(IfsSystem::builtin(name)?),
            _ => bail!("exactly one of --ifs and --builtin is required"),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Forward,
    Deletion,
}

fn parse_numbers<const K: usize>(s: &str) -> Result<[f64; K], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != K {
        return Err(format!("expected {K} comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; K];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{p}` is not a finite number"))?;
    }
    Ok(out)
}

fn parse_point(s: &str) -> Result<Point, String> {
    parse_numbers::<2>(s).map(|[x, y]| Point::new(x, y))
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    parse_numbers::<4>(s).map(|[x0, y0, x1, y1]| Rect::new(x0, y0, x1, y1))
}

/// Reads an `x,y` CSV point file.
pub fn read_points_csv(path: &Path) -> anyhow::Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        bail!("{}: expected header `x,y`", path.display());
    }
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let coord = |k: usize| -> anyhow::Result<f64> {
            record
                .get(k)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| anyhow!("{}: bad number on row {}", path.display(), line + 2))
        };
        points.push(Point::new(coord(0)?, coord(1)?));
    }
    Ok(PointSet::new(points))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Up to 12 decimals with trailing zeros removed; `-0` prints as `0`.
fn fmt_num(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn fmt_point(p: Point) -> String {
    format!("({}, {})", fmt_num(p.x), fmt_num(p.y))
}

/// Runs the program with stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            // clap spreads one message over several lines before the usage block
            let text = e.to_string();
            let line = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more"))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(err, "{line}");
            return EXIT_USAGE;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", format!("{e:#}").replace('\n', " "));
            match e.downcast_ref::<Error>() {
                Some(Error::ResourceLimit { .. }) => EXIT_RESOURCE,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Ellipse { source, json } => {
            let system = source.load()?;
            let e = ellipse_params(&system);
            if json {
                let doc = serde_json::json!({
                    "foci": e.foci().iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                    "lambda": e.lambda_max(),
                    "d": e.d_max(),
                    "focal_sums": e.focal_sums(),
                    "m": e.m_threshold(),
                });
                writeln!(out, "{doc}")?;
            } else {
                let foci: Vec<String> = e.foci().iter().map(|&p| fmt_point(p)).collect();
                writeln!(out, "foci: {}", foci.join(" "))?;
                writeln!(out, "lambda = {}", fmt_num(e.lambda_max()))?;
                writeln!(out, "D = {}", fmt_num(e.d_max()))?;
                writeln!(out, "M = {}", fmt_num(e.m_threshold()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            source,
            samples,
            seed,
            threshold,
            foci,
            json,
        } => {
            let system = source.load()?;
            let region = match (foci, threshold) {
                (Some(path), Some(t)) => {
                    MaxwellRegion::new(read_points_csv(&path)?.into_points(), t)?
                }
                (None, Some(t)) => ellipse_params(&system).with_threshold(t)?,
                _ => ellipse_params(&system).region().clone(),
            };
            let report = verify_invariance(&system, &region, samples, seed)?;
            if json {
                writeln!(out, "{}", report.to_json())?;
            } else {
                writeln!(out, "{report}")?;
            }
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Iterate {
            source,
            mode,
            n,
            seed_point,
            resolution,
            threshold,
            dedup,
            max_points,
            out: dir,
        } => {
            let system = source.load()?;
            let trace = match mode {
                Mode::Forward => {
                    let seed = seed_point.ok_or_else(|| anyhow!("forward mode needs --seed-point"))?;
                    let opts = ForwardOptions {
                        max_points,
                        dedup_cell: dedup,
                    };
                    forward_iterate_with(&system, &PointSet::singleton(seed), n, &opts)?
                }
                Mode::Deletion => {
                    let ellipse = ellipse_params(&system);
                    let region = match threshold {
                        Some(t) => ellipse.with_threshold(t)?,
                        None => ellipse.region().clone(),
                    };
                    let b0 = rasterize_region(
                        |p| region.contains(p),
                        region.bounding_box(),
                        resolution.unwrap_or(512),
                    )?;
                    deletion_iterate(&system, &b0, n)?
                }
            };
            write_trace(&trace, &dir)?;
            writeln!(out, "stages: {}", trace.len())?;
            writeln!(out, "final count: {}", trace.cardinality(trace.len() - 1))?;
            if let Ok(report) = convergence_report(&trace, system.lambda_max()) {
                writeln!(out, "{report}")?;
            }
            Ok(EXIT_OK)
        }
        Command::Hausdorff { a, b } => {
            let d = hausdorff_distance(&read_points_csv(&a)?, &read_points_csv(&b)?)?;
            writeln!(out, "{d}")?;
            Ok(EXIT_OK)
        }
        Command::Locus {
            foci,
            sum,
            bbox,
            resolution,
            out: path,
            boundary,
        } => {
            let foci = read_points_csv(&foci)?;
            let locus = render_locus(foci.points(), sum, bbox, resolution)?;
            let mut buf = Vec::new();
            write_pbm(&locus.region, &mut buf)?;
            write_atomic(&path, &buf)?;
            if let Some(bpath) = boundary {
                let mut buf = Vec::new();
                write_pbm(&locus.boundary, &mut buf)?;
                write_atomic(&bpath, &buf)?;
            }
            writeln!(
                out,
                "{}x{} cells, {} marked, {} on the boundary",
                locus.region.width(),
                locus.region.height(),
                locus.region.marked_count(),
                locus.boundary.marked_count()
            )?;
            Ok(EXIT_OK)
        }
        Command::Attractor {
            source,
            eps,
            seed_point,
            out: path,
        } => {
            let system = source.load()?;
            let seed = seed_point.unwrap_or(system.fixed_points()[0]);
            let set = attractor_estimate(&system, eps, seed)?;
            let mut buf = Vec::new();
            write_points_csv(&set, &mut buf)?;
            write_atomic(&path, &buf)?;
            writeln!(out, "{} points", set.len())?;
            Ok(EXIT_OK)
        }
    }
}

fn write_trace(trace: &IterationTrace, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match trace.stages() {
        Stages::Points(stages) => {
            for (k, stage) in stages.iter().enumerate() {
                let mut buf = Vec::new();
                write_points_csv(stage, &mut buf)?;
                write_atomic(&dir.join(format!("stage_{k:03}.csv")), &buf)?;
            }
        }
        Stages::Rasters(stages) => {
            for (k, stage) in stages.iter().enumerate() {
                let mut buf = Vec::new();
                write_pbm(stage, &mut buf)?;
                write_atomic(&dir.join(format!("stage_{k:03}.pbm")), &buf)?;
            }
        }
    }
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    write_atomic(&dir.join("trace.csv"), &buf)
}
