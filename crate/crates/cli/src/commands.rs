use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::Args;
use log::info;

use floeberg_core::autolabel::{
    apply_overrides, label_parallel, labeled_csv, read_labeled, read_overrides, LabelSource, LabeledSegment,
    SurfaceClass,
};
use floeberg_core::dtrain::{train_distributed, DistConfig};
use floeberg_core::geo::{parse_shift_in, read_shift_table, LabelRaster, ShiftVector, StereoParams};
use floeberg_core::ingest::{
    read_photons, read_segments, resample_2m, segments_csv, synthesize_segments, synthesize_track, PHOTON_HEADER,
    Segment, SyntheticTrackSpec,
};
use floeberg_core::io;
use floeberg_core::nnet::{
    classify_segments, evaluate, history_csv, load_model, prepare_training, save_model, train as train_model,
    Architecture, FocalLossParams, Model, ModelFile, TrainConfig,
};
use floeberg_core::runtime::{bench_csv, load_csv_chunked, timed, BenchRow, Executor};
use floeberg_core::surface::{
    compute_freeboard_with, freeboard_csv, freeboard_histogram, freeboard_histogram_par, histogram_csv, read_freeboard,
    surface_parallel, windows_csv, SurfaceMethod, SurfaceParams,
};

use crate::config::AlphaMode;
use crate::svg::{self, Series};
use crate::{CliError, Context};

/// Path from a flag or the config, which must exist.
fn require(path: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    let p = path
        .clone()
        .ok_or_else(|| CliError::MissingInput(format!("no {what} given")))?;
    if !p.exists() {
        return Err(CliError::MissingInput(format!("{what} {} not found", p.display())));
    }
    Ok(p)
}

fn override_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn override_val<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// `track.csv` -> `track.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    io::write_atomic(path, bytes)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn executor(ctx: &Context) -> Result<Executor> {
    Ok(Executor::new(ctx.cfg.workers)?)
}

fn class_counts(labeled: &[LabeledSegment]) -> String {
    let mut counts = [0usize; 4];
    for l in labeled {
        counts[l.class.map_or(3, SurfaceClass::index)] += 1;
    }
    format!(
        "thick_ice {} thin_ice {} open_water {} unlabeled {}",
        counts[0], counts[1], counts[2], counts[3]
    )
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
#[group(id = "source", required = true, multiple = false, args = ["spec", "mosaic_km"])]
pub struct SynthArgs {
    /// Span table CSV: start_m,end_m,class,freeboard_m.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Random ice/lead mosaic of this length instead of a span table.
    #[arg(long)]
    mosaic_km: Option<f64>,
    /// Photon height noise, meters.
    #[arg(long)]
    noise: Option<f64>,
    /// Signal photons per meter.
    #[arg(long)]
    density: Option<f64>,
    /// Sea-level slope, meters per kilometer.
    #[arg(long)]
    trend: Option<f64>,
    /// Background photons as a fraction of signal.
    #[arg(long)]
    noise_fraction: Option<f64>,
}

pub fn synth(ctx: &mut Context, a: SynthArgs) -> Result<()> {
    let seed = ctx.cfg.seed;
    println!("seed = {seed}");
    let mut spec = match (&a.spec, a.mosaic_km) {
        (Some(_), _) => {
            let path = require(&a.spec, "span table")?;
            SyntheticTrackSpec::with_spans(SyntheticTrackSpec::read_spans(&path)?, seed)
        }
        (None, Some(km)) => SyntheticTrackSpec::random_mosaic(km * 1000.0, seed),
        (None, None) => unreachable!("clap requires one source"),
    };
    override_val(&mut spec.noise_sigma, a.noise);
    override_val(&mut spec.photon_density, a.density);
    override_val(&mut spec.sea_level_trend, a.trend);
    override_val(&mut spec.noise_photon_fraction, a.noise_fraction);
    spec.validate().map_err(|e| CliError::Validation(e.to_string()))?;

    let track = synthesize_track(&spec)?;
    let out = ctx.cfg.output_path(ctx.output.as_deref(), "track.csv");
    write(&out, &io::csv_bytes(&PHOTON_HEADER, &track.photons, true)?)?;
    write(&sibling(&out, "truth.csv"), &track.truth_csv()?)?;
    write(&sibling(&out, "raster.asc"), spec.truth_raster()?.to_ascii_grid().as_bytes())?;
    info!("{} photons over {} bins", track.photons.len(), track.classes.len());
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Photon CSV.
    #[arg(long)]
    photons: Option<PathBuf>,
    /// Resampling bin length, meters.
    #[arg(long)]
    bin: Option<f64>,
    /// Lowest photon confidence kept.
    #[arg(long)]
    min_confidence: Option<u8>,
}

fn load_segments_from_photons(ctx: &Context) -> Result<Vec<Segment>> {
    let path = require(&ctx.cfg.photons, "photon file")?;
    let photons = read_photons(&path)?;
    Ok(resample_2m(&photons, ctx.cfg.bin, ctx.cfg.min_confidence)?)
}

pub fn ingest(ctx: &mut Context, a: IngestArgs) -> Result<()> {
    override_opt(&mut ctx.cfg.photons, a.photons);
    override_val(&mut ctx.cfg.bin, a.bin);
    override_val(&mut ctx.cfg.min_confidence, a.min_confidence);
    ctx.cfg.validate()?;
    let segments = load_segments_from_photons(ctx)?;
    println!("{} segments", segments.len());
    write(&ctx.cfg.output_path(ctx.output.as_deref(), "segments.csv"), &segments_csv(&segments)?)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct LabelArgs {
    /// Segment CSV.
    #[arg(long)]
    segments: Option<PathBuf>,
    /// Classified image raster (ESRI ASCII grid).
    #[arg(long)]
    raster: Option<PathBuf>,
    /// Drift descriptor such as "550 m / NW".
    #[arg(long, conflicts_with = "shifts")]
    shift: Option<String>,
    /// Shift table CSV; pick a row with --pair.
    #[arg(long)]
    shifts: Option<PathBuf>,
    #[arg(long)]
    pair: Option<String>,
    /// Manual class overrides: start_index,end_index,class.
    #[arg(long)]
    overrides: Option<PathBuf>,
}

fn resolve_shift(ctx: &Context) -> Result<ShiftVector> {
    let cfg = &ctx.cfg;
    if cfg.shifts.is_some() {
        let table = read_shift_table(require(&cfg.shifts, "shift table")?, cfg.max_time_diff)?;
        let pair = match &cfg.pair {
            Some(id) => table
                .iter()
                .find(|p| &p.pair_id == id)
                .ok_or_else(|| CliError::Validation(format!("pair {id} not in shift table")))?,
            None if table.len() == 1 => &table[0],
            None => return Err(CliError::Validation("shift table has several rows; choose one with --pair".into()).into()),
        };
        return Ok(pair.shift(cfg.shift_frame)?);
    }
    match &cfg.shift {
        Some(text) => Ok(parse_shift_in(text, cfg.shift_frame)?),
        None => Ok(ShiftVector::ZERO),
    }
}

pub fn label(ctx: &mut Context, a: LabelArgs) -> Result<()> {
    override_opt(&mut ctx.cfg.segments, a.segments);
    override_opt(&mut ctx.cfg.raster, a.raster);
    override_opt(&mut ctx.cfg.shift, a.shift);
    override_opt(&mut ctx.cfg.shifts, a.shifts);
    override_opt(&mut ctx.cfg.pair, a.pair);
    override_opt(&mut ctx.cfg.overrides, a.overrides);
    ctx.cfg.validate()?;
    let segments = read_segments(require(&ctx.cfg.segments, "segment file")?)?;
    let raster = LabelRaster::read(require(&ctx.cfg.raster, "raster")?)?;
    let shift = resolve_shift(ctx)?;
    let exec = executor(ctx)?;
    let (mut labeled, mut bytes, t) = label_parallel(&exec, &segments, &raster, shift, &StereoParams::default())?;
    if ctx.cfg.overrides.is_some() {
        let spans = read_overrides(require(&ctx.cfg.overrides, "override file")?)?;
        labeled = apply_overrides(&labeled, &spans)?;
        bytes = labeled_csv(&labeled)?;
    }
    println!("shift = ({}, {}) m; {}", shift.dx, shift.dy, class_counts(&labeled));
    println!("workers = {}; map {:.3}s reduce {:.3}s", exec.workers(), t.map_s, t.reduce_s);
    write(&ctx.cfg.output_path(ctx.output.as_deref(), "labeled.csv"), &bytes)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labeled-segment CSVs, one per track.
    #[arg(long, num_args = 1..)]
    labeled: Vec<PathBuf>,
    /// mlp or lstm.
    #[arg(long)]
    arch: Option<Architecture>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Global batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Focal-loss focusing parameter.
    #[arg(long)]
    gamma: Option<f64>,
    /// Class weights: inverse (training-set inverse frequency, the default) or uniform.
    #[arg(long)]
    alpha: Option<AlphaMode>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

pub fn train(ctx: &mut Context, a: TrainArgs) -> Result<()> {
    let cfg = &mut ctx.cfg;
    if !a.labeled.is_empty() {
        cfg.labeled = a.labeled;
    }
    override_val(&mut cfg.classifier, a.arch);
    override_val(&mut cfg.epochs, a.epochs);
    override_val(&mut cfg.batch_size, a.batch_size);
    override_val(&mut cfg.learning_rate, a.lr);
    override_val(&mut cfg.dropout, a.dropout);
    override_val(&mut cfg.gamma, a.gamma);
    override_val(&mut cfg.alpha, a.alpha);
    override_val(&mut cfg.train_fraction, a.train_fraction);
    cfg.validate()?;
    if cfg.labeled.is_empty() {
        return Err(CliError::MissingInput("no labeled files given".into()).into());
    }
    println!("seed = {}", cfg.seed);
    let tracks = cfg
        .labeled
        .iter()
        .map(|p| Ok(read_labeled(require(&Some(p.clone()), "labeled file")?)?))
        .collect::<Result<Vec<_>>>()?;
    let (train_set, test_set, standardizer) = prepare_training(&tracks, cfg.train_fraction, cfg.seed)?;
    let loss = match cfg.alpha {
        AlphaMode::Uniform => FocalLossParams::new(cfg.gamma, [1.0; 3])?,
        AlphaMode::InverseFrequency => FocalLossParams::inverse_frequency(&train_set.labels, cfg.gamma)?,
    };
    let tc = TrainConfig {
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        dropout: cfg.dropout,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
    };
    let mut model = Model::new(cfg.classifier, cfg.seed);
    println!(
        "{}: {} training / {} test samples, {} workers",
        cfg.classifier,
        train_set.len(),
        test_set.len(),
        cfg.workers
    );
    let (history, secs) = if cfg.workers > 1 {
        let out = train_distributed(&model, &train_set.windows, &train_set.labels, &DistConfig::new(cfg.workers, tc), &loss)?;
        model = out.model;
        (out.history, out.elapsed_s)
    } else {
        let (h, s) = timed(|| train_model(&mut model, &train_set.windows, &train_set.labels, &tc, &loss));
        (h?, s)
    };
    let metrics = evaluate(&model, &test_set.windows, &test_set.labels)?;
    println!(
        "trained {} epochs in {secs:.1}s; test accuracy {:.4}, macro F1 {:.4}",
        history.len(),
        metrics.accuracy,
        metrics.macro_f1
    );
    let out = cfg.output_path(ctx.output.as_deref(), "model.floe");
    let file = ModelFile {
        model,
        standardizer,
        loss,
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_model(&out, &file)?;
    println!("wrote {}", out.display());
    write(&sibling(&out, "history.csv"), history_csv(&history).as_bytes())?;
    write(&sibling(&out, "metrics.csv"), metrics.to_csv().as_bytes())
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Photon CSV, resampled before inference.
    #[arg(long, conflicts_with = "segments")]
    photons: Option<PathBuf>,
    /// Segment CSV.
    #[arg(long)]
    segments: Option<PathBuf>,
}

pub fn classify(ctx: &mut Context, a: ClassifyArgs) -> Result<()> {
    override_opt(&mut ctx.cfg.model, a.model);
    if a.photons.is_some() {
        ctx.cfg.photons = a.photons;
        ctx.cfg.segments = None;
    }
    override_opt(&mut ctx.cfg.segments, a.segments);
    let file = load_model(require(&ctx.cfg.model, "model file")?)?;
    let segments = match &ctx.cfg.segments {
        Some(_) => read_segments(require(&ctx.cfg.segments, "segment file")?)?,
        None => load_segments_from_photons(ctx)?,
    };
    let classes = classify_segments(&file, &segments)?;
    let labeled: Vec<LabeledSegment> = segments
        .into_iter()
        .zip(classes)
        .map(|(segment, c)| LabeledSegment {
            segment,
            class: Some(c),
            source: LabelSource::Auto,
        })
        .collect();
    println!("{}: {}", file.model.architecture(), class_counts(&labeled));
    write(&ctx.cfg.output_path(ctx.output.as_deref(), "classified.csv"), &labeled_csv(&labeled)?)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SurfaceArgs {
    /// Labeled or classified segment CSV.
    #[arg(long)]
    labeled: Option<PathBuf>,
    /// nasa, min, avg or nearest-min.
    #[arg(long)]
    method: Option<SurfaceMethod>,
    /// Window length, meters.
    #[arg(long)]
    window: Option<f64>,
    /// Window spacing, meters.
    #[arg(long)]
    stride: Option<f64>,
    /// Shortest accepted lead, in segments.
    #[arg(long)]
    min_lead_length: Option<usize>,
    /// Histogram bin width, meters (freeboard only).
    #[arg(long)]
    bin_width: Option<f64>,
}

fn surface_setup(ctx: &mut Context, a: SurfaceArgs) -> Result<(Vec<LabeledSegment>, SurfaceParams, Executor)> {
    let cfg = &mut ctx.cfg;
    if let Some(p) = a.labeled {
        cfg.labeled = vec![p];
    }
    override_val(&mut cfg.surface_method, a.method);
    override_val(&mut cfg.window, a.window);
    override_val(&mut cfg.stride, a.stride);
    override_val(&mut cfg.min_lead_length, a.min_lead_length);
    override_val(&mut cfg.histogram_bin, a.bin_width);
    cfg.validate()?;
    let path = match cfg.labeled.as_slice() {
        [p] => require(&Some(p.clone()), "labeled file")?,
        [] => return Err(CliError::MissingInput("no labeled file given".into()).into()),
        _ => return Err(CliError::Validation("surface works on one labeled file".into()).into()),
    };
    let labeled = read_labeled(path)?;
    let params = SurfaceParams {
        method: cfg.surface_method,
        window_length: cfg.window,
        stride: cfg.stride,
        min_lead_length: cfg.min_lead_length,
    };
    Ok((labeled, params, executor(ctx)?))
}

pub fn surface(ctx: &mut Context, a: SurfaceArgs) -> Result<()> {
    let (labeled, params, exec) = surface_setup(ctx, a)?;
    let out = surface_parallel(&exec, &labeled, &params)?;
    let filled = out.windows.iter().filter(|w| w.filled_by_interpolation).count();
    println!(
        "{} leads, {} windows ({filled} interpolated); map {:.3}s reduce {:.3}s",
        out.leads.len(),
        out.windows.len(),
        out.timings.map_s,
        out.timings.reduce_s
    );
    write(&ctx.cfg.output_path(ctx.output.as_deref(), "windows.csv"), &windows_csv(&out.windows)?)
}

pub fn freeboard(ctx: &mut Context, a: SurfaceArgs) -> Result<()> {
    let (labeled, params, exec) = surface_setup(ctx, a)?;
    let out = surface_parallel(&exec, &labeled, &params)?;
    let records = compute_freeboard_with(&exec, &labeled, &out.profile)?;
    let hist = freeboard_histogram_par(&exec, &records, ctx.cfg.histogram_bin)?;
    let ice: Vec<_> = records
        .iter()
        .filter(|r| matches!(r.class, Some(SurfaceClass::ThickIce | SurfaceClass::ThinIce)))
        .copied()
        .collect();
    if let Ok(h) = freeboard_histogram(&ice, ctx.cfg.histogram_bin) {
        let k = h.mode_bin();
        println!("ice freeboard mode bin [{:.3}, {:.3}) m", h.edges[k], h.edges[k + 1]);
    }
    let negative = records.iter().filter(|r| r.negative_flag).count();
    println!("{} segments, {negative} negative freeboards", records.len());
    let path = ctx.cfg.output_path(ctx.output.as_deref(), "freeboard.csv");
    write(&path, &freeboard_csv(&exec, &records)?)?;
    write(&sibling(&path, "hist.csv"), &histogram_csv(&hist)?)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Segment CSV to label; omit for a synthetic track.
    #[arg(long, requires = "raster")]
    segments: Option<PathBuf>,
    #[arg(long)]
    raster: Option<PathBuf>,
    /// Synthetic segment count.
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,
    /// Worker counts to time, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    runs: Vec<usize>,
    /// Job to time: label or surface.
    #[arg(long, default_value = "label")]
    job: String,
}

pub fn bench(ctx: &mut Context, a: BenchArgs) -> Result<()> {
    if a.runs.is_empty() || a.runs.contains(&0) {
        return Err(CliError::Validation("worker counts must be positive".into()).into());
    }
    if a.job != "label" && a.job != "surface" {
        return Err(CliError::Validation(format!("unknown bench job {:?} (label|surface)", a.job)).into());
    }
    override_opt(&mut ctx.cfg.segments, a.segments);
    override_opt(&mut ctx.cfg.raster, a.raster);
    let (text, raster) = match &ctx.cfg.segments {
        Some(_) => (
            io::read_bytes(require(&ctx.cfg.segments, "segment file")?)?,
            LabelRaster::read(require(&ctx.cfg.raster, "raster")?)?,
        ),
        None => {
            println!("seed = {}", ctx.cfg.seed);
            let spec = SyntheticTrackSpec::random_mosaic(a.count as f64 * 2.0, ctx.cfg.seed);
            let (segments, _) = synthesize_segments(&spec)?;
            (segments_csv(&segments)?, spec.truth_raster()?)
        }
    };
    let params = StereoParams::default();
    let mut rows = Vec::new();
    for &workers in &a.runs {
        let exec = Executor::new(workers)?;
        let (segments, load_s) = timed(|| load_csv_chunked::<Segment>(&exec, &text));
        let segments = segments?;
        let (labeled, _, t) = label_parallel(&exec, &segments, &raster, ShiftVector::ZERO, &params)?;
        let timings = if a.job == "surface" {
            surface_parallel(&exec, &labeled, &SurfaceParams::default())?.timings
        } else {
            t
        };
        let timings = timings.with_load(load_s);
        println!(
            "{workers} workers: load {:.3}s map {:.3}s reduce {:.3}s",
            timings.load_s, timings.map_s, timings.reduce_s
        );
        rows.push(BenchRow { workers, timings });
    }
    write(&ctx.cfg.output_path(ctx.output.as_deref(), "bench.csv"), &bench_csv(&rows)?)
}

// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Freeboard CSV.
    #[arg(long)]
    freeboard: PathBuf,
    /// Histogram CSV; binned from the freeboard CSV when omitted.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
struct HistRow {
    bin_left: f64,
    bin_right: f64,
    count: u64,
}

pub fn report(ctx: &mut Context, a: ReportArgs) -> Result<()> {
    let records = read_freeboard(require(&Some(a.freeboard), "freeboard file")?)?;
    let (edges, counts) = match &a.histogram {
        Some(_) => {
            let rows: Vec<HistRow> = io::read_csv(require(&a.histogram, "histogram file")?)?;
            if rows.is_empty() {
                return Err(CliError::Validation("empty histogram".into()).into());
            }
            let mut edges: Vec<f64> = rows.iter().map(|r| r.bin_left).collect();
            edges.push(rows[rows.len() - 1].bin_right);
            (edges, rows.iter().map(|r| r.count).collect())
        }
        None => {
            let h = freeboard_histogram(&records, ctx.cfg.histogram_bin)?;
            (h.edges, h.counts)
        }
    };
    let series: Vec<Series> = [
        (SurfaceClass::ThickIce, "#1f4e9c"),
        (SurfaceClass::ThinIce, "#58b0d8"),
        (SurfaceClass::OpenWater, "#e0672b"),
    ]
    .into_iter()
    .map(|(c, color)| Series {
        name: c.name(),
        color,
        points: records
            .iter()
            .filter(|r| r.class == Some(c))
            .map(|r| (r.center_along_track / 1000.0, r.h_s))
            .collect(),
    })
    .collect();
    let dir = ctx.output.clone().unwrap_or_else(|| ctx.cfg.output_dir.clone());
    write(
        &dir.join("elevation.svg"),
        svg::scatter("Segment elevation by class", "along-track distance (km)", "height (m)", &series).as_bytes(),
    )?;
    write(
        &dir.join("freeboard_histogram.svg"),
        svg::histogram("Freeboard distribution", "freeboard (m)", &edges, &counts).as_bytes(),
    )
}
