//! `stopprofiler`: file-to-file pipeline over APC stop events.
//!
//! synth -> profile -> distmat -> cluster -> compare -> render, plus `score`
//! (ARI against a ground-truth partition) and `rerun` (replay a manifest).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use stopprofiler::clustering::{self, read_partition_csv};
use stopprofiler::ingest::{read_events_file, write_events};
use stopprofiler::metrics::{
    band_distance_matrix_with, canonical_location_values, curve_euclidean_matrix, global_seq_permutation,
    location_distance_matrix_with, permutation_for, variation_order, GeoMode, ReferenceFraction,
};
use stopprofiler::pipeline::{profile_rows, CurveSet, DEFAULT_MIN_TOTAL};
use stopprofiler::profiles::{read_profiles_csv, write_profiles_csv, ProfileRow, HOURS};
use stopprofiler::render::{curve_export, RenderWarning};
use stopprofiler::synth::builtin_archetypes;
use stopprofiler::{
    adjusted_rand_index, correlation_matrix, filter_events, generate, heatmap, significant, Direction,
    DistanceMatrix, FilterCriteria, HeatmapSpec, ImageFormat, Measure, MetricKind, ProportionProfile,
    ServicePeriod, StopEvent, SynthConfig,
};

use manifest::{sidecar_path, RunManifest};

const THREADS_ENV: &str = "STOPPROFILER_THREADS";
const KMEANS_MAX_ITER: usize = 300;

#[derive(Parser, Debug)]
#[command(name = "stopprofiler", version, about = "Diurnal ridership profiles and stop clustering from APC data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic stop events with planted diurnal archetypes.
    Synth(SynthArgs),
    /// Aggregate events into per-stop 24-hour profiles.
    Profile(ProfileArgs),
    /// Pairwise stop distance matrix for one metric.
    Distmat(DistmatArgs),
    /// Partition stops with k-means or k-medoids.
    Cluster(ClusterArgs),
    /// Spearman rank correlation between distance matrices.
    Compare(CompareArgs),
    /// Heatmap of a distance matrix, or ordered curve export from profiles.
    Render(RenderArgs),
    /// Adjusted Rand index of a clustering against a reference partition.
    Score(ScoreArgs),
    /// Re-execute the command recorded in a run manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    stops: usize,
    /// Built-in archetype names (comma separated) or a count of them.
    #[arg(long)]
    archetypes: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 45)]
    weekdays: usize,
    #[arg(long)]
    volume_log_mean: Option<f64>,
    #[arg(long)]
    volume_log_sd: Option<f64>,
    /// Expected counts, no noise: recovered proportions equal the archetypes.
    #[arg(long)]
    deterministic: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Cohort {
    #[arg(long)]
    route: Option<String>,
    /// I or O.
    #[arg(long, value_parser = parse_direction)]
    direction: Option<Direction>,
    #[arg(long)]
    weekdays_only: bool,
    /// First service date, YYYY-MM-DD.
    #[arg(long)]
    from: Option<NaiveDate>,
    /// Last service date, YYYY-MM-DD.
    #[arg(long)]
    to: Option<NaiveDate>,
    /// Restrict to these variation ids (repeatable).
    #[arg(long = "variation")]
    variations: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureArg {
    Boardings,
    Alightings,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long)]
    events: PathBuf,
    #[command(flatten)]
    cohort: Cohort,
    #[arg(long, value_enum, default_value = "boardings")]
    measure: MeasureArg,
    #[arg(long, default_value_t = DEFAULT_MIN_TOTAL)]
    min_total: f64,
    #[arg(long)]
    proportions: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DistmatArgs {
    /// Profile CSV; required for eucl and band, restricts and orders stops otherwise.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Event CSV; required for gseq, geo and trdist.
    #[arg(long)]
    events: Option<PathBuf>,
    #[command(flatten)]
    cohort: Cohort,
    #[arg(long, value_parser = parse_metric)]
    metric: MetricKind,
    /// Great-circle meters instead of planar degrees for `geo`.
    #[arg(long)]
    haversine: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgoArg {
    Kmeans,
    Kmedoids,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    distmat: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long, default_value_t = clustering::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve metric for k-medoids on profiles.
    #[arg(long, value_parser = parse_metric, default_value = "band")]
    metric: MetricKind,
    #[arg(long, default_value_t = KMEANS_MAX_ITER)]
    max_iter: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, required = true)]
    distmat: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Pgm,
    Svg,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    distmat: Option<PathBuf>,
    /// Proportion profiles to export as ordered curves instead of a heatmap.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Event CSV used to resolve the ordering.
    #[arg(long)]
    events: Option<PathBuf>,
    /// gseq or variation:<id>.
    #[arg(long)]
    order: Option<String>,
    #[arg(long, value_enum, default_value = "pgm")]
    format: FormatArg,
    /// Draw small distances light instead of dark.
    #[arg(long)]
    no_invert: bool,
    /// Fixed gray scale as min,max.
    #[arg(long, value_parser = parse_scale)]
    scale: Option<(f64, f64)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args, Debug)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    Direction::from_code(&s.to_ascii_uppercase()).ok_or_else(|| format!("expected I or O, got `{s}`"))
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: stopprofiler::MetricError| e.to_string())
}

fn parse_scale(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected min,max")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    Ok((lo, hi))
}

enum Failure {
    /// Bad flags or flag combinations; carries the subcommand for usage.
    Usage { reason: String, command: Option<&'static str> },
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(command: &'static str, reason: impl Into<String>) -> Failure {
    Failure::Usage {
        reason: reason.into(),
        command: Some(command),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(run(&argv))
}

fn run(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let args = argv.get(1..).unwrap_or_default();
    match dispatch(cli.command, args) {
        Ok(()) => 0,
        Err(Failure::Usage { reason, command }) => {
            eprintln!("error: {reason}");
            let mut cmd = Cli::command();
            cmd.build();
            let text = match command.and_then(|c| cmd.find_subcommand_mut(c)) {
                Some(sub) => sub.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("{text}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(command: Command, args: &[String]) -> Outcome {
    match command {
        Command::Synth(a) => synth(a, args),
        Command::Profile(a) => profile(a, args),
        Command::Distmat(a) => distmat(a, args),
        Command::Cluster(a) => cluster(a, args),
        Command::Compare(a) => compare(a, args),
        Command::Render(a) => render(a, args),
        Command::Score(a) => score(a),
        Command::Rerun(a) => rerun(a),
    }
}

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage {
            reason: format!("{THREADS_ENV} must be a nonnegative integer, got `{v}`"),
            command: None,
        }),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_events(path: &Path) -> anyhow::Result<Vec<StopEvent>> {
    read_events_file(path).with_context(|| format!("reading {}", path.display()))
}

fn load_profiles(path: &Path) -> anyhow::Result<Vec<ProfileRow>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_profiles_csv(file).with_context(|| format!("reading {}", path.display()))
}

fn load_distmat(path: &Path) -> anyhow::Result<DistanceMatrix> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    DistanceMatrix::read_csv(file).with_context(|| format!("reading {}", path.display()))
}

impl Cohort {
    fn criteria(&self, events: &[StopEvent]) -> anyhow::Result<FilterCriteria> {
        let period = if self.weekdays_only || self.from.is_some() || self.to.is_some() {
            let dates = || events.iter().map(|e| e.service_date);
            let start = self.from.or_else(|| dates().min());
            let end = self.to.or_else(|| dates().max());
            match (start, end) {
                (Some(s), Some(e)) => Some(ServicePeriod::new("cli", s, e, self.weekdays_only)?),
                _ => None,
            }
        } else {
            None
        };
        Ok(FilterCriteria {
            route_id: self.route.clone(),
            direction: self.direction,
            period,
            variation_ids: (!self.variations.is_empty()).then(|| self.variations.iter().cloned().collect()),
        })
    }

    fn apply(&self, events: &[StopEvent], m: &mut RunManifest) -> anyhow::Result<Vec<StopEvent>> {
        let criteria = self.criteria(events)?;
        if let Some(r) = &self.route {
            m.param("route", r.as_str());
        }
        if let Some(d) = self.direction {
            m.param("direction", d.code());
        }
        if let Some(p) = &criteria.period {
            m.param("from", p.start_date.to_string());
            m.param("to", p.end_date.to_string());
            m.param("weekdays_only", p.weekdays_only);
        }
        if !self.variations.is_empty() {
            m.param("variations", self.variations.clone());
        }
        Ok(filter_events(events, &criteria))
    }
}

fn synth(a: SynthArgs, args: &[String]) -> Outcome {
    let mut config = SynthConfig {
        n_stops: a.stops,
        noise_scale: a.noise,
        n_weekdays: a.weekdays,
        seed: a.seed,
        deterministic: a.deterministic,
        ..SynthConfig::default()
    };
    if let Some(m) = a.volume_log_mean {
        config.volume_log_mean = m;
    }
    if let Some(sd) = a.volume_log_sd {
        config.volume_log_sd = sd;
    }
    if let Some(spec) = &a.archetypes {
        let all = builtin_archetypes();
        config.archetypes = match spec.trim().parse::<usize>() {
            Ok(n) if (1..=all.len()).contains(&n) => all[..n].to_vec(),
            Ok(n) => return Err(usage("synth", format!("--archetypes count must be 1..={}, got {n}", all.len()))),
            Err(_) => spec
                .split(',')
                .map(|name| {
                    all.iter()
                        .find(|x| x.name.eq_ignore_ascii_case(name.trim()))
                        .cloned()
                        .ok_or_else(|| usage("synth", format!("unknown archetype `{}`", name.trim())))
                })
                .collect::<Result<_, _>>()?,
        };
        config.mixture_weights = vec![1.0; config.archetypes.len()];
    }
    if let Err(e) = config.validate() {
        return Err(usage("synth", e.to_string()));
    }
    let output = generate(&config).map_err(anyhow::Error::from)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let events_path = a.out.join("events.csv");
    let truth_path = a.out.join("ground_truth.csv");
    let mut buf = Vec::new();
    write_events(&mut buf, &output.events).context("serializing events")?;
    write_file(&events_path, &buf)?;
    buf.clear();
    output.write_ground_truth(&mut buf).context("serializing ground truth")?;
    write_file(&truth_path, &buf)?;

    let mut m = RunManifest::new("synth", args);
    m.output(&events_path).output(&truth_path);
    m.param("stops", config.n_stops)
        .param("archetypes", config.archetypes.iter().map(|x| x.name.clone()).collect::<Vec<_>>())
        .param("noise", config.noise_scale)
        .param("weekdays", config.n_weekdays)
        .param("volume_log_mean", config.volume_log_mean)
        .param("volume_log_sd", config.volume_log_sd)
        .param("seed", config.seed)
        .param("deterministic", config.deterministic);
    m.write(&a.out.join("manifest.json"))?;
    Ok(())
}

fn profile(a: ProfileArgs, args: &[String]) -> Outcome {
    let mut m = RunManifest::new("profile", args);
    m.input(&a.events);
    let events = load_events(&a.events)?;
    let cohort = a.cohort.apply(&events, &mut m)?;
    let measure = match a.measure {
        MeasureArg::Boardings => Measure::Boardings,
        MeasureArg::Alightings => Measure::Alightings,
    };
    let rows = profile_rows(&cohort, measure, a.min_total, a.proportions).map_err(anyhow::Error::from)?;
    let mut buf = Vec::new();
    write_profiles_csv(&mut buf, &rows).context("serializing profiles")?;
    write_file(&a.out, &buf)?;
    m.output(&a.out)
        .param("measure", format!("{measure:?}").to_lowercase())
        .param("min_total", a.min_total)
        .param("proportions", a.proportions)
        .param("stops", rows.len());
    m.write(&sidecar_path(&a.out))?;
    Ok(())
}

fn distmat(a: DistmatArgs, args: &[String]) -> Outcome {
    let mut m = RunManifest::new("distmat", args);
    let matrix = match a.metric {
        MetricKind::CurveEuclidean | MetricKind::CurveBand => {
            let path = a
                .profiles
                .as_ref()
                .ok_or_else(|| usage("distmat", format!("--metric {} needs --profiles", a.metric)))?;
            m.input(path);
            let set = CurveSet::from(load_profiles(path)?.as_slice());
            if a.metric == MetricKind::CurveEuclidean {
                curve_euclidean_matrix(&set.labels, &set.curves)
            } else {
                band_distance_matrix_with(&set.labels, &set.curves, &ReferenceFraction, threads()?)
            }
            .map_err(anyhow::Error::from)?
        }
        kind => {
            let path = a
                .events
                .as_ref()
                .ok_or_else(|| usage("distmat", format!("--metric {kind} needs --events")))?;
            m.input(path);
            let events = a.cohort.apply(&load_events(path)?, &mut m)?;
            let infos = canonical_location_values(&events);
            let labels: Vec<String> = match &a.profiles {
                Some(p) => {
                    m.input(p);
                    load_profiles(p)?.into_iter().map(|r| r.stop_id).collect()
                }
                None => infos.keys().cloned().collect(),
            };
            let selected = labels
                .iter()
                .map(|l| infos.get(l).cloned().ok_or_else(|| anyhow!("stop `{l}` has no events in the cohort")))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let geo = if a.haversine { GeoMode::HaversineMeters } else { GeoMode::PlanarDegrees };
            m.param("haversine", a.haversine);
            location_distance_matrix_with(&selected, kind, geo).map_err(anyhow::Error::from)?
        }
    };
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf).context("serializing matrix")?;
    write_file(&a.out, &buf)?;
    m.output(&a.out).param("metric", a.metric.short_name()).param("stops", matrix.len());
    m.write(&sidecar_path(&a.out))?;
    Ok(())
}

fn cluster(a: ClusterArgs, args: &[String]) -> Outcome {
    let mut m = RunManifest::new("cluster", args);
    let result = match (&a.profiles, &a.distmat, a.algo) {
        (Some(_), Some(_), _) => return Err(usage("cluster", "give either --profiles or --distmat, not both")),
        (None, None, _) => return Err(usage("cluster", "one of --profiles or --distmat is required")),
        (None, Some(_), AlgoArg::Kmeans) => {
            return Err(usage("cluster", "kmeans needs curve vectors: use --profiles"));
        }
        (Some(p), None, AlgoArg::Kmeans) => {
            m.input(p);
            let set = CurveSet::from(load_profiles(p)?.as_slice());
            m.param("max_iter", a.max_iter);
            clustering::kmeans(&set.labels, &set.curves, a.k, a.seed, a.max_iter).map_err(anyhow::Error::from)?
        }
        (Some(p), None, AlgoArg::Kmedoids) => {
            m.input(p);
            let set = CurveSet::from(load_profiles(p)?.as_slice());
            let matrix = match a.metric {
                MetricKind::CurveBand => {
                    band_distance_matrix_with(&set.labels, &set.curves, &ReferenceFraction, threads()?)
                }
                MetricKind::CurveEuclidean => curve_euclidean_matrix(&set.labels, &set.curves),
                other => return Err(usage("cluster", format!("--metric {other} is not a curve metric"))),
            }
            .map_err(anyhow::Error::from)?;
            m.param("metric", a.metric.short_name());
            clustering::kmedoids(&matrix, a.k, a.seed).map_err(anyhow::Error::from)?
        }
        (None, Some(d), AlgoArg::Kmedoids) => {
            m.input(d);
            let matrix = load_distmat(d)?;
            m.param("metric", matrix.metric().short_name());
            clustering::kmedoids(&matrix, a.k, a.seed).map_err(anyhow::Error::from)?
        }
    };
    let mut buf = Vec::new();
    result.write_csv(&mut buf).context("serializing clusters")?;
    write_file(&a.out, &buf)?;
    let meta = meta_path(&a.out);
    write_file(&meta, result.metadata_line().as_bytes())?;
    m.output(&a.out)
        .output(&meta)
        .param("algo", result.algorithm.name())
        .param("k", a.k)
        .param("seed", a.seed);
    m.write(&sidecar_path(&a.out))?;
    Ok(())
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn compare(a: CompareArgs, args: &[String]) -> Outcome {
    let mut m = RunManifest::new("compare", args);
    let mut matrices = Vec::new();
    for path in &a.distmat {
        m.input(path);
        matrices.push(load_distmat(path)?);
    }
    // Compare on the stops common to every matrix, in the first one's order.
    let common: Vec<String> = {
        let sets: Vec<BTreeSet<&String>> = matrices.iter().map(|d| d.labels().iter().collect()).collect();
        matrices[0]
            .labels()
            .iter()
            .filter(|l| sets.iter().all(|s| s.contains(l)))
            .cloned()
            .collect()
    };
    let aligned = matrices
        .iter()
        .map(|d| d.select(&common))
        .collect::<Result<Vec<_>, _>>()
        .map_err(anyhow::Error::from)?;
    let corr = correlation_matrix(&aligned).map_err(anyhow::Error::from)?;
    let mut buf = Vec::new();
    corr.write_csv(&mut buf).context("serializing correlations")?;
    write_file(&a.out, &buf)?;
    m.output(&a.out)
        .param("metrics", corr.metric_labels.iter().map(|k| k.short_name()).collect::<Vec<_>>())
        .param("stops", common.len());
    m.write(&sidecar_path(&a.out))?;
    Ok(())
}

enum Ordering {
    GlobalSeq,
    Variation(String),
}

fn parse_order(s: &str) -> Result<Ordering, Failure> {
    if s == "gseq" {
        return Ok(Ordering::GlobalSeq);
    }
    match s.strip_prefix("variation:") {
        Some(id) if !id.is_empty() => Ok(Ordering::Variation(id.to_string())),
        _ => Err(usage("render", format!("--order must be gseq or variation:<id>, got `{s}`"))),
    }
}

fn stop_order(order: &Ordering, events: &[StopEvent]) -> anyhow::Result<Vec<String>> {
    Ok(match order {
        Ordering::GlobalSeq => {
            let infos = canonical_location_values(events);
            let mut ids: Vec<&stopprofiler::StopInfo> = infos.values().collect();
            ids.sort_by(|a, b| (a.canonical_global_seq, &a.stop_id).cmp(&(b.canonical_global_seq, &b.stop_id)));
            ids.into_iter().map(|s| s.stop_id.clone()).collect()
        }
        Ordering::Variation(id) => variation_order(events, id)?,
    })
}

fn render(a: RenderArgs, args: &[String]) -> Outcome {
    let mut m = RunManifest::new("render", args);
    let order = a.order.as_deref().map(parse_order).transpose()?;
    let events = match (&order, &a.events) {
        (Some(_), None) => return Err(usage("render", "--order needs --events")),
        (_, Some(p)) => {
            m.input(p);
            Some(load_events(p)?)
        }
        (None, None) => None,
    };
    if let Some(o) = &a.order {
        m.param("order", o.as_str());
    }
    match (&a.distmat, &a.profiles) {
        (Some(d), None) => {
            m.input(d);
            let matrix = load_distmat(d)?;
            let permutation = match (&order, &events) {
                (Some(Ordering::GlobalSeq), Some(ev)) => {
                    Some(global_seq_permutation(&matrix, &canonical_location_values(ev)))
                }
                (Some(o), Some(ev)) => Some(permutation_for(&matrix, &stop_order(o, ev)?)),
                _ => None,
            };
            let spec = HeatmapSpec {
                permutation,
                format: match a.format {
                    FormatArg::Pgm => ImageFormat::Pgm,
                    FormatArg::Svg => ImageFormat::Svg,
                },
                invert: !a.no_invert,
                scale: a.scale,
                ..HeatmapSpec::new(matrix, ImageFormat::Pgm)
            };
            let map = heatmap(&spec).map_err(anyhow::Error::from)?;
            if map.warning == Some(RenderWarning::Degenerate) {
                eprintln!("warning: all off-diagonal distances are equal; drawn mid-gray");
            }
            write_file(&a.out, &map.bytes)?;
            m.param("format", format!("{:?}", a.format).to_lowercase()).param("invert", spec.invert);
            if let Some((lo, hi)) = a.scale {
                m.param("scale", vec![lo, hi]);
            }
        }
        (None, Some(p)) => {
            m.input(p);
            let rows = load_profiles(p)?;
            let file_order: Vec<String> = rows.iter().map(|r| r.stop_id.clone()).collect();
            let profiles: BTreeMap<String, ProportionProfile> = rows
                .into_iter()
                .map(|r| {
                    let pp = ProportionProfile {
                        stop_id: r.stop_id.clone(),
                        proportions: r.values,
                        source_total: r.total,
                    };
                    (r.stop_id, pp)
                })
                .collect();
            let ordering = match (&order, &events) {
                (Some(o), Some(ev)) => {
                    let wanted = stop_order(o, ev)?;
                    let mut out: Vec<String> = wanted.into_iter().filter(|s| profiles.contains_key(s)).collect();
                    let seen: BTreeSet<String> = out.iter().cloned().collect();
                    out.extend(file_order.into_iter().filter(|s| !seen.contains(s)));
                    out
                }
                _ => file_order,
            };
            let bytes = curve_export(&profiles, &ordering).map_err(anyhow::Error::from)?;
            write_file(&a.out, &bytes)?;
            m.param("export", "curves").param("hours", HOURS);
        }
        (Some(_), Some(_)) => return Err(usage("render", "give either --distmat or --profiles, not both")),
        (None, None) => return Err(usage("render", "one of --distmat or --profiles is required")),
    }
    m.output(&a.out);
    m.write(&sidecar_path(&a.out))?;
    Ok(())
}

fn score(a: ScoreArgs) -> Outcome {
    let read = |p: &Path| -> anyhow::Result<Vec<(String, String)>> {
        let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        read_partition_csv(file).with_context(|| format!("reading {}", p.display()))
    };
    let clusters = read(&a.clusters)?;
    let truth: BTreeMap<String, String> = read(&a.truth)?.into_iter().collect();
    let mut predicted = Vec::with_capacity(clusters.len());
    let mut reference = Vec::with_capacity(clusters.len());
    for (stop, label) in clusters {
        let t = truth
            .get(&stop)
            .ok_or_else(|| anyhow!("stop `{stop}` is missing from {}", a.truth.display()))?;
        predicted.push(label);
        reference.push(t.clone());
    }
    let ari = adjusted_rand_index(&predicted, &reference).map_err(anyhow::Error::from)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "ari={}", significant(ari, 12)).context("writing to stdout")?;
    Ok(())
}

fn rerun(a: RerunArgs) -> Outcome {
    let manifest = RunManifest::read(&a.manifest)?;
    if manifest.argv.first().map(String::as_str) == Some("rerun") {
        return Err(usage("rerun", "a manifest cannot replay another rerun"));
    }
    let mut argv = vec!["stopprofiler".to_string()];
    argv.extend(manifest.argv);
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| anyhow!("manifest {} holds invalid arguments: {}", a.manifest.display(), e.kind()))?;
    dispatch(cli.command, &argv[1..])
}
