//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 unreadable or
//! malformed data, 3 degenerate input (for example a failed ellipse fit).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use echofuse_core::boundary::{detect_boundaries_traced, GradientPolarity};
use echofuse_core::compound::{
    compound_warped, coverage, fuse_pyramids, prepare_view, FusionTrace, Method, ViewPyramids,
};
use echofuse_core::confidence::{attenuation_intensity_confidence, ConfidenceKind};
use echofuse_core::metrics::{amr_avr, dice, mean_ratio, segment_vessel, variance_ratio, PatchSpec, SegmentError};
use echofuse_core::phantom::{evaluation_patches, generate, presets, vessel_interior, vessel_window, PhantomSpec};
use echofuse_core::pyramid::Kernel;
use echofuse_core::warp::{RigidTransform2D, ViewInput, WarpedView};
use echofuse_core::Grid;
use rayon::prelude::*;
use serde_json::json;

use crate::config::Config;
use crate::io::{self, Format, IoError};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Degenerate(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Degenerate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Degenerate(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<echofuse_core::Error> for Failure {
    fn from(e: echofuse_core::Error) -> Self {
        use echofuse_core::Error as E;
        match e {
            E::Parameter(_) => Failure::Usage(e.to_string()),
            E::Degenerate(_) => Failure::Degenerate(e.to_string()),
            E::Dimensions(_) | E::Range { .. } | E::Structure(_) => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(name = "echofuse", version, about = "Multi-view ultrasound compounding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attenuation-based intensity confidence of one image.
    Confidence(ConfidenceArgs),
    /// Boundary mask of one image (probe at the top).
    Boundaries(BoundariesArgs),
    /// Fuse several views into one image.
    Compound(CompoundArgs),
    /// Patch mean and variance ratios of an image.
    Metrics(MetricsArgs),
    /// Otsu threshold plus ellipse fit inside one patch.
    Segment(SegmentArgs),
    /// Render a synthetic multi-view scene with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the effective configuration to FILE.
    #[arg(long, value_name = "FILE")]
    dump_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PyramidFlags {
    /// Number of pyramid layers.
    #[arg(short = 'K', long = "levels")]
    levels: Option<usize>,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<Kernel>,
    /// Structural-confidence spread below which contrast decides.
    #[arg(long)]
    gamma: Option<f64>,
    /// Layer whose reconstruction receives boundary enhancement.
    #[arg(long)]
    enhance_layer: Option<usize>,
    /// Skip boundary enhancement.
    #[arg(long)]
    no_enhancement: bool,
    /// Comma-separated per-layer contrast weights, finest first.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    phi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolarityArg {
    Absolute,
    BrightAbove,
}

#[derive(Debug, Args)]
struct BoundaryFlags {
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    beta: Option<usize>,
    #[arg(long)]
    min_size: Option<usize>,
    /// Gradient binarization level in [0, 1] intensity units.
    #[arg(long)]
    grad_threshold: Option<f64>,
    /// Brightness floor in 8-bit units.
    #[arg(long)]
    t1: Option<f64>,
    /// Growth step limit in 8-bit units.
    #[arg(long)]
    t2: Option<f64>,
    /// Skip the 3x3 median filter on the gradient.
    #[arg(long)]
    no_median: bool,
    #[arg(long, value_enum)]
    polarity: Option<PolarityArg>,
}

#[derive(Debug, Args)]
struct ConfidenceFlags {
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    absorption: Option<f64>,
}

#[derive(Debug, Args)]
struct ConfidenceArgs {
    #[arg(long, value_name = "FILE")]
    image: PathBuf,
    /// Output map (.fmap keeps full precision, otherwise PGM).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    confidence: ConfidenceFlags,
}

#[derive(Debug, Args)]
struct BoundariesArgs {
    #[arg(long, value_name = "FILE")]
    image: PathBuf,
    /// Output mask PGM.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the gradient map (FMAP).
    #[arg(long, value_name = "FILE")]
    gradient: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    boundary: BoundaryFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Average,
    Maximum,
    Ubf,
    Pyramid,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Average => Method::Average,
            MethodArg::Maximum => Method::Maximum,
            MethodArg::Ubf => Method::Ubf,
            MethodArg::Pyramid => Method::Pyramid,
        }
    }
}

#[derive(Debug, Args)]
struct CompoundArgs {
    #[arg(long, value_enum, default_value = "pyramid")]
    method: MethodArg,
    /// `image:transform.json[:gc.fmap[:gs.fmap]]`; repeat once per view.
    /// Leave a field empty to skip it, e.g. `a.pgm:a.json::gs.fmap`.
    #[arg(long = "view", value_name = "SPEC", required = true)]
    views: Vec<String>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Common-frame width (defaults to the first view's).
    #[arg(long)]
    width: Option<usize>,
    /// Common-frame height (defaults to the first view's).
    #[arg(long)]
    height: Option<usize>,
    /// Write every intermediate map as FMAP into DIR.
    #[arg(long, value_name = "DIR")]
    dump_intermediates: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    pyramid: PyramidFlags,
    #[command(flatten)]
    boundary: BoundaryFlags,
    #[command(flatten)]
    confidence: ConfidenceFlags,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long, value_name = "FILE")]
    image: PathBuf,
    /// JSON list of patches `{x, y, width, height, label}`.
    #[arg(long, value_name = "FILE")]
    patches: PathBuf,
    /// Restrict whole-image statistics to the set pixels of this mask.
    #[arg(long, value_name = "FILE")]
    coverage: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long, value_name = "FILE")]
    image: PathBuf,
    /// Patch as `x,y,width,height`.
    #[arg(long, value_parser = parse_patch)]
    patch: (usize, usize, usize, usize),
    /// Output mask PGM with the patch's dimensions.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Ground-truth mask, either patch-sized or image-sized.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Scene description (JSON).
    #[arg(long, value_name = "FILE", conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    /// Built-in scene: reflector, reverberation or crossing.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_name = "DIR")]
    outdir: PathBuf,
    /// Speckle seed (overrides the spec's).
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    match s {
        "binomial5" => Ok(Kernel::Binomial5),
        "binomial3" => Ok(Kernel::Binomial3),
        _ => Err(format!("unknown kernel `{s}` (binomial5 or binomial3)")),
    }
}

fn parse_patch(s: &str) -> Result<(usize, usize, usize, usize), String> {
    let v: Vec<usize> = s.split(',').map(|p| p.trim().parse::<usize>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        &[x, y, w, h] if w > 0 && h > 0 => Ok((x, y, w, h)),
        _ => Err("expected x,y,width,height with positive width and height".into()),
    }
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Confidence(a) => cmd_confidence(a),
        Command::Boundaries(a) => cmd_boundaries(a),
        Command::Compound(a) => cmd_compound(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Segment(a) => cmd_segment(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

// ── Configuration ───────────────────────────────────────────────────────────

fn load_config(args: &ConfigArgs) -> Result<Config, Failure> {
    match &args.config {
        None => Ok(Config::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            Config::from_json(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
        }
    }
}

fn finish_config(config: Config, args: &ConfigArgs) -> Result<Config, Failure> {
    config.validate()?;
    if let Some(path) = &args.dump_config {
        io::write_json(&config, path)?;
    }
    Ok(config)
}

fn apply_pyramid(c: &mut Config, f: &PyramidFlags) {
    if let Some(v) = f.levels {
        c.pyramid.levels = v;
    }
    if let Some(v) = f.kernel {
        c.pyramid.kernel = v;
    }
    if let Some(v) = f.gamma {
        c.compound.gamma = v;
    }
    if let Some(v) = f.enhance_layer {
        c.compound.enhance_layer = v;
    }
    if f.no_enhancement {
        c.compound.enhancement = false;
    }
    if let Some(v) = &f.phi {
        c.compound.phi_overrides = Some(v.clone());
    }
}

fn apply_boundary(c: &mut Config, f: &BoundaryFlags) {
    let b = &mut c.boundary;
    if let Some(v) = f.alpha {
        b.alpha = v;
    }
    if let Some(v) = f.beta {
        b.beta = v;
    }
    if let Some(v) = f.min_size {
        b.min_size = v;
    }
    if let Some(v) = f.grad_threshold {
        b.grad_threshold = v;
    }
    if let Some(v) = f.t1 {
        b.t1 = v;
    }
    if let Some(v) = f.t2 {
        b.t2 = v;
    }
    if f.no_median {
        b.median_denoise = false;
    }
    if let Some(p) = f.polarity {
        b.polarity = match p {
            PolarityArg::Absolute => GradientPolarity::Absolute,
            PolarityArg::BrightAbove => GradientPolarity::BrightAbove,
        };
    }
}

fn apply_confidence(c: &mut Config, f: &ConfidenceFlags) {
    if let Some(v) = f.decay {
        c.confidence.decay = v;
    }
    if let Some(v) = f.absorption {
        c.confidence.absorption = v;
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))
}

// ── Subcommands ─────────────────────────────────────────────────────────────

fn cmd_confidence(a: ConfidenceArgs) -> Outcome {
    let mut config = load_config(&a.config)?;
    apply_confidence(&mut config, &a.confidence);
    let config = finish_config(config, &a.config)?;
    let image = io::load_image(&a.image)?;
    let map = attenuation_intensity_confidence(&image, config.confidence)?;
    io::save_grid(map.grid(), &a.out, Format::from_path(&a.out))?;
    Ok(())
}

fn cmd_boundaries(a: BoundariesArgs) -> Outcome {
    let mut config = load_config(&a.config)?;
    apply_boundary(&mut config, &a.boundary);
    let config = finish_config(config, &a.config)?;
    let image = io::load_image(&a.image)?;
    let det = detect_boundaries_traced(&image, &config.boundary)?;
    io::save_mask(&det.mask, &a.out)?;
    if let Some(path) = &a.gradient {
        io::save_grid(&det.gradient.0, path, Format::Fmap)?;
    }
    println!(
        "{}",
        json!({
            "clusters": det.clusters.clusters.len(),
            "kept": det.kept.clusters.len(),
            "boundary_pixels": det.mask.count(),
        })
    );
    Ok(())
}

fn parse_view(spec: &str) -> Result<ViewInput, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    if !(2..=4).contains(&parts.len()) || parts[0].is_empty() || parts[1].is_empty() {
        return Err(Failure::Usage(format!("view `{spec}` must be image:transform.json[:gc.fmap[:gs.fmap]]")));
    }
    let image = io::load_image(Path::new(parts[0]))?;
    let transform: RigidTransform2D = io::read_json(Path::new(parts[1]))?;
    let mut view = ViewInput::new(image, transform);
    if let Some(p) = parts.get(2).filter(|p| !p.is_empty()) {
        view.intensity_confidence = Some(io::load_confidence(Path::new(p), ConfidenceKind::Intensity)?);
    }
    if let Some(p) = parts.get(3).filter(|p| !p.is_empty()) {
        view.structural_confidence = Some(io::load_confidence(Path::new(p), ConfidenceKind::Structural)?);
    }
    view.validate().map_err(|e| Failure::Data(format!("view `{spec}`: {e}")))?;
    Ok(view)
}

fn cmd_compound(a: CompoundArgs) -> Outcome {
    let mut config = load_config(&a.config)?;
    apply_pyramid(&mut config, &a.pyramid);
    apply_boundary(&mut config, &a.boundary);
    apply_confidence(&mut config, &a.confidence);
    let config = finish_config(config, &a.config)?;
    if a.views.len() < 2 {
        return Err(Failure::Usage("compounding needs at least two --view arguments".into()));
    }
    if a.threads == Some(0) {
        return Err(Failure::Usage("--threads must be positive".into()));
    }
    let inputs = a.views.iter().map(|s| parse_view(s)).collect::<Result<Vec<_>, _>>()?;
    let (w, h) = (a.width.unwrap_or(inputs[0].image.width()), a.height.unwrap_or(inputs[0].image.height()));
    if w == 0 || h == 0 {
        return Err(Failure::Usage("--width and --height must be positive".into()));
    }
    let method = Method::from(a.method);
    eprintln!(
        "{}",
        json!({
            "tool": "echofuse",
            "version": env!("CARGO_PKG_VERSION"),
            "command": "compound",
            "method": method.name(),
            "views": inputs.len(),
            "width": w,
            "height": h,
            "config": config,
        })
    );

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = a.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Failure::Data(format!("thread pool: {e}")))?
    };
    let settings = config.prepare_settings();
    let params = config.pyramid_params();
    pool.install(|| -> Outcome {
        let views = inputs
            .par_iter()
            .map(|v| prepare_view(v, w, h, &settings))
            .collect::<Result<Vec<WarpedView>, _>>()?;
        let image = if method == Method::Pyramid {
            let pyramids = views
                .par_iter()
                .map(|v| ViewPyramids::build(v, params.levels, params.kernel))
                .collect::<Result<Vec<_>, _>>()?;
            let (image, trace) = fuse_pyramids(&pyramids, &params, &coverage(&views)?)?;
            if let Some(dir) = &a.dump_intermediates {
                dump_views(dir, &views)?;
                dump_pyramids(dir, &pyramids, &trace)?;
            }
            image
        } else {
            if let Some(dir) = &a.dump_intermediates {
                dump_views(dir, &views)?;
            }
            compound_warped(&views, method, &params)?
        };
        io::save_image(&image, &a.out, Format::from_path(&a.out))?;
        Ok(())
    })
}

fn fmap(dir: &Path, name: &str, grid: &Grid) -> Outcome {
    io::save_grid(grid, &dir.join(format!("{name}.fmap")), Format::Fmap)?;
    Ok(())
}

fn dump_views(dir: &Path, views: &[WarpedView]) -> Outcome {
    ensure_dir(dir)?;
    for (m, v) in views.iter().enumerate() {
        fmap(dir, &format!("view{m}_image"), v.image.grid())?;
        fmap(dir, &format!("view{m}_validity"), &v.validity.to_grid())?;
        if let Some(g) = &v.intensity_confidence {
            fmap(dir, &format!("view{m}_gc"), g)?;
        }
        if let Some(g) = &v.structural_confidence {
            fmap(dir, &format!("view{m}_gs"), g)?;
        }
        if let Some(b) = &v.boundary_mask {
            fmap(dir, &format!("view{m}_boundary"), &b.to_grid())?;
        }
    }
    Ok(())
}

fn dump_pyramids(dir: &Path, pyramids: &[ViewPyramids], trace: &FusionTrace) -> Outcome {
    for (m, p) in pyramids.iter().enumerate() {
        for k in 1..=p.laplacian.levels() {
            fmap(dir, &format!("view{m}_gauss_L{k}"), p.image.layer(k))?;
            fmap(dir, &format!("view{m}_laplacian_L{k}"), p.laplacian.layer(k))?;
            fmap(dir, &format!("view{m}_gc_L{k}"), p.intensity.layer(k))?;
            fmap(dir, &format!("view{m}_gs_L{k}"), p.structural.layer(k))?;
            fmap(dir, &format!("view{m}_gb_L{k}"), p.boundary.layer(k))?;
            fmap(dir, &format!("view{m}_validity_L{k}"), &p.validity[k - 1].to_grid())?;
        }
    }
    for (i, sel) in trace.selections.iter().enumerate() {
        let k = i + 1;
        fmap(dir, &format!("selection_L{k}"), &sel.to_grid())?;
        fmap(dir, &format!("averaged_L{k}"), &trace.averaged[i])?;
        fmap(dir, &format!("blended_L{k}"), &trace.blended[i])?;
    }
    if let (Some(before), Some(after)) = (&trace.before_enhancement, &trace.after_enhancement) {
        fmap(dir, "enhancement_before", before)?;
        fmap(dir, "enhancement_after", after)?;
    }
    Ok(())
}

fn cmd_metrics(a: MetricsArgs) -> Outcome {
    let image = io::read_grid(&a.image)?;
    let patches: Vec<PatchSpec> = io::read_json(&a.patches)?;
    let region = a.coverage.as_deref().map(io::load_mask).transpose()?;
    let region = region.as_ref();
    if let Some(bad) = patches.iter().position(|p| !p.fits(image.width(), image.height())) {
        return Err(Failure::Data(format!("patch {bad} is not fully inside the image")));
    }
    let report = amr_avr(&image, &patches, region)?;
    let rows = patches
        .iter()
        .map(|p| Ok((p, mean_ratio(&image, p, region)?, variance_ratio(&image, p, region)?)))
        .collect::<Result<Vec<_>, echofuse_core::Error>>()?;

    let mut table = String::new();
    let _ = writeln!(table, "{:>5}  {:<8}  {:>5}  {:>5}  {:>5}  {:>5}  {:>10}  {:>10}", "patch", "label", "x", "y", "w", "h", "mean_ratio", "var_ratio");
    for (i, (p, mr, vr)) in rows.iter().enumerate() {
        let label = label_name(p);
        let _ = writeln!(table, "{i:>5}  {label:<8}  {:>5}  {:>5}  {:>5}  {:>5}  {mr:>10.4}  {vr:>10.4}", p.x, p.y, p.width, p.height);
    }
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    let _ = writeln!(table, "\n{:<8}  {:>5}  {:>8}  {:>8}", "group", "count", "AMR", "AVR");
    let _ = writeln!(table, "{:<8}  {:>5}  {:>8}  {:>8}", "artifact", report.artifact.count, fmt(report.artifact.amr), fmt(report.artifact.avr));
    let _ = writeln!(table, "{:<8}  {:>5}  {:>8}  {:>8}", "boundary", report.boundary.count, "-", fmt(report.boundary.avr));
    print!("{table}");

    if let Some(path) = &a.json {
        let value = json!({
            "patches": rows.iter().map(|(p, mr, vr)| json!({
                "x": p.x, "y": p.y, "width": p.width, "height": p.height,
                "label": label_name(p), "mean_ratio": mr, "variance_ratio": vr,
            })).collect::<Vec<_>>(),
            "artifact": { "count": report.artifact.count, "amr": report.artifact.amr, "avr": report.artifact.avr },
            "boundary": { "count": report.boundary.count, "avr": report.boundary.avr },
        });
        io::write_json(&value, path)?;
    }
    Ok(())
}

fn label_name(p: &PatchSpec) -> &'static str {
    match p.label {
        echofuse_core::metrics::PatchLabel::Artifact => "artifact",
        echofuse_core::metrics::PatchLabel::Boundary => "boundary",
    }
}

fn cmd_segment(a: SegmentArgs) -> Outcome {
    let image = io::read_grid(&a.image)?;
    let (x, y, w, h) = a.patch;
    if x + w > image.width() || y + h > image.height() {
        return Err(Failure::Usage(format!("patch {x},{y},{w},{h} is not inside the {}x{} image", image.width(), image.height())));
    }
    let patch = image.crop(x, y, w, h)?;
    let seg = segment_vessel(&patch).map_err(|e| match e {
        SegmentError::Fit(f) => Failure::Degenerate(format!("ellipse fit failed: {f}")),
        SegmentError::Threshold(t) => Failure::Degenerate(format!("ellipse fit failed: no threshold split ({t})")),
    })?;
    io::save_mask(&seg.mask, &a.out)?;
    let score = match &a.truth {
        None => None,
        Some(path) => {
            let truth = io::load_mask(path)?;
            let truth = if truth.dims() == (w, h) {
                truth
            } else if truth.dims() == image.dims() {
                truth.crop(x, y, w, h)?
            } else {
                return Err(Failure::Data(format!("{}: mask matches neither the patch nor the image", path.display())));
            };
            Some(dice(&seg.mask, &truth)?)
        }
    };
    let e = seg.ellipse;
    println!(
        "{}",
        json!({
            "threshold_bin": seg.threshold.bin,
            "ellipse": { "cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b, "rotation": e.rotation },
            "pixels": seg.mask.count(),
            "dice": score,
        })
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Outcome {
    let mut spec: PhantomSpec = match (&a.spec, &a.preset) {
        (Some(path), _) => io::read_json(path)?,
        (None, Some(name)) => presets::by_name(name, 0)
            .ok_or_else(|| Failure::Usage(format!("unknown preset `{name}` (one of {})", presets::NAMES.join(", "))))?,
        (None, None) => return Err(Failure::Usage("either --spec or --preset is required".into())),
    };
    if let (Some(seed), Some(s)) = (a.seed, spec.speckle.as_mut()) {
        s.seed = seed;
    }
    let scene = generate(&spec)?;
    let patches = evaluation_patches(&spec, &scene)?;
    let dir = &a.outdir;
    ensure_dir(dir)?;
    io::write_json(&spec, &dir.join("spec.json"))?;
    let mut transforms = Vec::new();
    for (m, v) in scene.views.iter().enumerate() {
        io::save_image(&v.image, &dir.join(format!("view{m}.pgm")), Format::Pgm8)?;
        io::save_mask(&v.boundary, &dir.join(format!("view{m}_boundary.pgm")))?;
        io::save_mask(&v.artifact, &dir.join(format!("view{m}_artifact.pgm")))?;
        io::save_grid(v.structural_confidence.grid(), &dir.join(format!("view{m}_gs.fmap")), Format::Fmap)?;
        io::write_json(&v.to_common, &dir.join(format!("view{m}_transform.json")))?;
        transforms.push(v.to_common);
    }
    io::write_json(&transforms, &dir.join("transforms.json"))?;
    io::write_json(&patches, &dir.join("patches.json"))?;
    if let Some(truth) = vessel_interior(&spec) {
        io::save_mask(&truth, &dir.join("vessel_truth.pgm"))?;
    }
    if let Some((x, y, w, h)) = vessel_window(&spec, VESSEL_MARGIN) {
        io::write_json(&json!({ "x": x, "y": y, "width": w, "height": h }), &dir.join("vessel_window.json"))?;
    }
    println!("{}", json!({ "views": scene.views.len(), "patches": patches.len(), "outdir": dir.display().to_string() }));
    Ok(())
}

const VESSEL_MARGIN: f64 = 6.0;

