//! `sdfit`: fit Bézier glyphs and cuboid abstractions to distance fields, evaluate fits, and
//! query catalogs of fitted glyphs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sdfit::embedding::{interpolate_path, nearest_by, warp_style, Catalog, GlyphRecord, Metric, DEFAULT_BANDWIDTH};
use sdfit::field::{evaluate_2d, Outline, ScalarField};
use sdfit::fit::{
    fit2d, fit3d, glyph_grid, target_from_curves, target_from_outline, target_from_raster, unit_cube_grid, Fit3dMode,
    FitConfig, FitReport, GradientMode, LrSchedule, Shape3d,
};
use sdfit::io::shape_file::ShapeBody;
use sdfit::io::{
    load_catalog, read_field, read_obj, read_raster_pgm, write_catalog, write_field, write_obj, write_svg, OutlineFile,
    ShapeFile, SvgFrame, FIELD_MAGIC,
};
use sdfit::loss::{align_loss, chamfer_sampled, sample_curves_uniform, sample_outline_uniform, surface_loss, SamplingMode};
use sdfit::mesh::mesh_distance_field;
use sdfit::template::{Template, TemplateLibrary, TEMPLATE_PATH_ENV};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: sdfit::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Fit(#[from] sdfit::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Fit(sdfit::Error::NonFinite { .. }) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn at_path<T>(path: &Path, r: sdfit::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    at_path(path, fs::read(path).map_err(sdfit::Error::from))
}

fn read_text(path: &Path) -> CliResult<String> {
    at_path(path, fs::read_to_string(path).map_err(sdfit::Error::from))
}

fn write_file(path: &Path, data: impl AsRef<[u8]>) -> CliResult<()> {
    at_path(path, fs::write(path, data).map_err(sdfit::Error::from))
}

#[derive(Parser, Debug)]
#[command(name = "sdfit", version, about = "Fit sparse parametric shapes to distance fields")]
struct Cli {
    /// Worker threads for grid evaluation (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Template data file replacing the built-in letter templates
    #[arg(long, global = true, env = TEMPLATE_PATH_ENV)]
    templates: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a glyph template to a 2D target (PGM raster, outline JSON, or field file)
    Fit2d(Fit2dArgs),
    /// Fit cuboids to a 3D target (field file or OBJ mesh)
    Fit3d(Fit3dArgs),
    /// Compare a fitted glyph with ground truth: sampled Chamfer, surface and align losses
    Eval(EvalArgs),
    /// Collect fitted glyph shape files into a catalog
    CatalogBuild(CatalogBuildArgs),
    /// Nearest catalog records to a query glyph
    Nn(NnArgs),
    /// Nearest records along the line between two catalog records
    Interp(InterpArgs),
    /// Move an outline by the control-point displacement between two fitted glyphs
    Warp(WarpArgs),
    /// Write the unsigned distance field of an outline, raster, or fitted glyph
    Field2d(Field2dArgs),
    /// Write the signed distance field of an OBJ mesh or fitted 3D shape
    Field3d(Field3dArgs),
}

fn defaults() -> FitConfig {
    FitConfig::default()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GradientArg {
    Analytic,
    ForwardDifference,
}

#[derive(Args, Debug)]
struct OptimizerArgs {
    /// Optimizer iterations
    #[arg(long, default_value_t = defaults().max_iters)]
    max_iters: usize,
    /// Initial learning rate
    #[arg(long, default_value_t = defaults().learning_rate)]
    learning_rate: f64,
    /// Final learning rate as a fraction of the initial one (cosine decay; 1 keeps it constant)
    #[arg(long, default_value_t = 0.01)]
    final_lr_ratio: f64,
    /// Adam first-moment decay
    #[arg(long, default_value_t = defaults().adam.beta1)]
    beta1: f64,
    /// Adam second-moment decay
    #[arg(long, default_value_t = defaults().adam.beta2)]
    beta2: f64,
    /// Adam denominator offset
    #[arg(long, default_value_t = defaults().adam.epsilon)]
    adam_epsilon: f64,
    /// Weight of the normal-alignment loss
    #[arg(long, default_value_t = defaults().loss.alpha_align)]
    alpha_align: f64,
    /// Weight of the template loss at iteration 0
    #[arg(long, default_value_t = defaults().loss.alpha_template)]
    alpha_template: f64,
    /// Template loss decay time constant, in iterations
    #[arg(long, default_value_t = defaults().loss.template_decay_s)]
    template_decay: u32,
    /// Smootherstep support in field units [default: two cell diagonals]
    #[arg(long)]
    gamma: Option<f64>,
    /// Seed for initialization and pruning
    #[arg(long, default_value_t = defaults().seed)]
    seed: u64,
    /// Parameter gradient method
    #[arg(long, value_enum, default_value_t = GradientArg::Analytic)]
    gradient: GradientArg,
    /// Forward-difference step in parameter units
    #[arg(long, default_value_t = defaults().fd_step)]
    fd_step: f64,
    /// Stop after this many iterations without improvement [default: never]
    #[arg(long)]
    patience: Option<usize>,
}

impl OptimizerArgs {
    fn config(&self) -> FitConfig {
        let mut cfg = defaults();
        cfg.max_iters = self.max_iters;
        cfg.learning_rate = self.learning_rate;
        cfg.schedule = if self.final_lr_ratio == 1.0 {
            LrSchedule::Constant
        } else {
            LrSchedule::Cosine {
                final_ratio: self.final_lr_ratio,
            }
        };
        cfg.adam.beta1 = self.beta1;
        cfg.adam.beta2 = self.beta2;
        cfg.adam.epsilon = self.adam_epsilon;
        cfg.loss.alpha_align = self.alpha_align;
        cfg.loss.alpha_template = self.alpha_template;
        cfg.loss.template_decay_s = self.template_decay;
        cfg.loss.gamma = self.gamma;
        cfg.seed = self.seed;
        cfg.gradient = match self.gradient {
            GradientArg::Analytic => GradientMode::Analytic,
            GradientArg::ForwardDifference => GradientMode::ForwardDifference,
        };
        cfg.fd_step = self.fd_step;
        cfg.patience = self.patience;
        cfg
    }
}

#[derive(Args, Debug)]
struct Fit2dArgs {
    /// Target: binary PGM raster, outline JSON, or 2D field file
    #[arg(long)]
    input: PathBuf,
    /// Template class label (a letter or simple1/simple2/simple3)
    #[arg(long)]
    class: String,
    /// Output prefix; writes PREFIX.svg, PREFIX.shape.json and PREFIX.report.json
    #[arg(long)]
    output: PathBuf,
    /// Grid cells per side for raster and outline targets
    #[arg(long, default_value_t = defaults().grid_dims_2d[0])]
    grid: usize,
    /// Also fit one stroke thickness per curve
    #[arg(long)]
    thickness: bool,
    #[command(flatten)]
    opt: OptimizerArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Cuboid,
    Rounded,
    Csg,
}

#[derive(Args, Debug)]
struct Fit3dArgs {
    /// Target: 3D field file or OBJ triangle mesh (sampled over [-1, 1]³)
    #[arg(long)]
    input: PathBuf,
    /// Number of primitives (split evenly between union and subtraction in CSG mode)
    #[arg(long, default_value_t = 16)]
    primitives: usize,
    /// Primitive family
    #[arg(long, value_enum, default_value_t = ModeArg::Cuboid)]
    mode: ModeArg,
    /// Output prefix; writes PREFIX.obj, PREFIX.shape.json and PREFIX.report.json
    #[arg(long)]
    output: PathBuf,
    /// Grid cells per side for mesh targets
    #[arg(long, default_value_t = defaults().grid_dims_3d[0])]
    grid: usize,
    /// Drop a primitive when this fraction of its volume lies inside the others
    #[arg(long, default_value_t = defaults().prune_overlap_threshold)]
    prune_threshold: f64,
    #[command(flatten)]
    opt: OptimizerArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    ArcLength,
    Parameter,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Fitted glyph shape file
    #[arg(long)]
    shape: PathBuf,
    /// Ground truth: outline JSON or glyph shape file
    #[arg(long)]
    truth: PathBuf,
    /// Points sampled on each shape
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    /// How points are spread along the fitted curves
    #[arg(long, value_enum, default_value_t = SamplingArg::ArcLength)]
    sampling: SamplingArg,
    /// Pixels per em for the Chamfer distance
    #[arg(long, default_value_t = 128.0)]
    frame: f64,
    /// Grid cells per side for the field losses
    #[arg(long, default_value_t = defaults().grid_dims_2d[0])]
    grid: usize,
    /// Also write the numbers as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CatalogBuildArgs {
    /// Glyph shape files; each record id is the file name without extensions
    #[arg(required = true)]
    shapes: Vec<PathBuf>,
    /// Catalog file to write
    #[arg(long)]
    output: PathBuf,
    /// Font name recorded for every glyph
    #[arg(long)]
    font: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Shape,
    ShapeAndStroke,
}

#[derive(Args, Debug)]
struct NnArgs {
    /// Catalog file
    #[arg(long)]
    catalog: PathBuf,
    /// Query glyph shape file
    #[arg(long, conflicts_with = "id", required_unless_present = "id")]
    query: Option<PathBuf>,
    /// Query by catalog record id
    #[arg(long)]
    id: Option<String>,
    /// Number of matches
    #[arg(short, default_value_t = 5)]
    k: usize,
    /// Restrict matches to one class [default: the query's class]
    #[arg(long)]
    class: Option<String>,
    /// Search every class
    #[arg(long, conflicts_with = "class")]
    all_classes: bool,
    /// Coordinates entering the distance
    #[arg(long, value_enum, default_value_t = MetricArg::Shape)]
    metric: MetricArg,
}

#[derive(Args, Debug)]
struct InterpArgs {
    /// Catalog file
    #[arg(long)]
    catalog: PathBuf,
    /// Start record id
    #[arg(long)]
    from: String,
    /// End record id
    #[arg(long)]
    to: String,
    /// Interpolants, endpoints included
    #[arg(long, default_value_t = 10)]
    steps: usize,
}

#[derive(Args, Debug)]
struct WarpArgs {
    /// Outline JSON to deform
    #[arg(long)]
    outline: PathBuf,
    /// Glyph shape file the outline currently matches
    #[arg(long)]
    source: PathBuf,
    /// Glyph shape file whose control points the outline should follow
    #[arg(long)]
    target: PathBuf,
    /// Gaussian weight bandwidth in em units
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    /// Outline JSON to write
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct Field2dArgs {
    /// Outline JSON, binary PGM raster, or glyph shape file
    #[arg(long)]
    input: PathBuf,
    /// Grid cells per side over the padded em box
    #[arg(long, default_value_t = defaults().grid_dims_2d[0])]
    grid: usize,
    /// Field file to write
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct Field3dArgs {
    /// OBJ triangle mesh or 3D shape file
    #[arg(long)]
    input: PathBuf,
    /// Grid cells per side over [-1, 1]³
    #[arg(long, default_value_t = defaults().grid_dims_3d[0])]
    grid: usize,
    /// Field file to write
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let library = match &cli.templates {
        Some(path) => at_path(path, TemplateLibrary::load(path))?,
        None => TemplateLibrary::builtin(),
    };
    let templates_ref = cli
        .templates
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "builtin".into());
    match cli.command {
        Command::Fit2d(a) => cmd_fit2d(a, &library),
        Command::Fit3d(a) => cmd_fit3d(a),
        Command::Eval(a) => cmd_eval(a, &library),
        Command::CatalogBuild(a) => cmd_catalog_build(a, &library, &templates_ref),
        Command::Nn(a) => cmd_nn(a, &library),
        Command::Interp(a) => cmd_interp(a),
        Command::Warp(a) => cmd_warp(a),
        Command::Field2d(a) => cmd_field2d(a, &library),
        Command::Field3d(a) => cmd_field3d(a),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Machine-readable sidecar written next to every fit.
#[derive(Serialize)]
struct FitSidecar<'a> {
    command: &'a str,
    input: String,
    class_label: Option<&'a str>,
    config: &'a FitConfig,
    report: &'a FitReport,
    outputs: Vec<String>,
}

fn print_report(title: &str, report: &FitReport) {
    let b = &report.best;
    println!(
        "{title}: {} iterations ({:?}), best at iteration {}",
        report.history.len(),
        report.termination,
        report.best_iteration
    );
    println!("  surface       {:.6e}", b.surface);
    println!("  align         {:.6e}", b.align);
    println!("  template      {:.6e}", b.template);
    println!("  total         {:.6e}", b.total);
    println!("  surface floor {:.6e}", report.surface_floor);
    println!("  wall time     {:.2}s", report.wall_time.as_secs_f64());
}

fn write_sidecar(path: &Path, sidecar: &FitSidecar<'_>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(sidecar).expect("report serialization");
    write_file(path, text + "\n")
}

#[derive(Debug, PartialEq, Eq)]
enum InputKind {
    Pgm,
    Field,
    Obj,
    Json,
}

fn sniff(path: &Path, bytes: &[u8]) -> InputKind {
    if bytes.starts_with(b"P5") {
        InputKind::Pgm
    } else if bytes.starts_with(FIELD_MAGIC) {
        InputKind::Field
    } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
        InputKind::Obj
    } else {
        InputKind::Json
    }
}

fn glyph_template<'a>(library: &'a TemplateLibrary, class: &str) -> CliResult<&'a Template> {
    library.get(class).map_err(|_| {
        let known: Vec<&str> = library.labels().collect();
        CliError::Usage(format!("unknown class {class:?}; known classes: {}", known.join(" ")))
    })
}

fn load_glyph(path: &Path, library: &TemplateLibrary) -> CliResult<(String, Vec<f64>, sdfit::Curves)> {
    let file = at_path(path, ShapeFile::from_json(&read_text(path)?))?;
    match &file.body {
        ShapeBody::Curves { class_label, params } => {
            let template = glyph_template(library, class_label)?;
            let set = at_path(path, file.to_curve_set(template))?;
            Ok((class_label.clone(), params.clone(), set))
        }
        _ => Err(CliError::Usage(format!("{}: not a 2D glyph shape file", path.display()))),
    }
}

fn target_2d(path: &Path, grid: usize, library: &TemplateLibrary) -> CliResult<ScalarField<f64>> {
    let bytes = read_bytes(path)?;
    match sniff(path, &bytes) {
        InputKind::Pgm => {
            let raster = at_path(path, read_raster_pgm(&bytes))?;
            at_path(path, target_from_raster(&raster, grid))
        }
        InputKind::Field => at_path(path, read_field::<f64>(&bytes)),
        InputKind::Obj => Err(CliError::Usage(format!("{}: meshes are 3D inputs", path.display()))),
        InputKind::Json => {
            let text = String::from_utf8_lossy(&bytes);
            if let Ok(outline) = OutlineFile::from_json(&text) {
                return at_path(path, target_from_outline(&outline.to_outline(), grid));
            }
            let (_, _, set) = load_glyph(path, library)?;
            at_path(path, target_from_curves(&set, grid))
        }
    }
}

fn cmd_fit2d(a: Fit2dArgs, library: &TemplateLibrary) -> CliResult<()> {
    let template = glyph_template(library, &a.class)?;
    let mut cfg = a.opt.config();
    cfg.grid_dims_2d = [a.grid, a.grid];
    cfg.thickness_enabled = a.thickness;
    let target = target_2d(&a.input, a.grid, library)?;
    let (shape, report) = fit2d(&target, template, &cfg, None)?;

    let svg_path = with_suffix(&a.output, ".svg");
    let shape_path = with_suffix(&a.output, ".shape.json");
    let report_path = with_suffix(&a.output, ".report.json");
    let frame = SvgFrame {
        stroke_from_thickness: a.thickness,
        ..SvgFrame::pixels(cfg.grid_dims_2d[0] as f64)
    };
    write_file(&svg_path, write_svg(&shape, &frame))?;
    write_file(&shape_path, ShapeFile::curves(&a.class, report.final_params.clone()).to_json() + "\n")?;
    let outputs = [&svg_path, &shape_path, &report_path].map(|p| p.display().to_string()).to_vec();
    write_sidecar(
        &report_path,
        &FitSidecar {
            command: "fit2d",
            input: a.input.display().to_string(),
            class_label: Some(&a.class),
            config: &cfg,
            report: &report,
            outputs: outputs.clone(),
        },
    )?;
    print_report(&format!("fit2d {}", a.class), &report);
    println!("wrote {}", outputs.join(", "));
    Ok(())
}

fn target_3d(path: &Path, grid: usize) -> CliResult<ScalarField<f64>> {
    let bytes = read_bytes(path)?;
    match sniff(path, &bytes) {
        InputKind::Field => at_path(path, read_field::<f64>(&bytes)),
        InputKind::Obj => {
            let mesh = at_path(path, read_obj(&String::from_utf8_lossy(&bytes)))?;
            Ok(mesh_distance_field(&mesh, &unit_cube_grid(grid)?))
        }
        InputKind::Json => {
            let file = at_path(path, ShapeFile::from_json(&String::from_utf8_lossy(&bytes)))?;
            let shape = shape3d(&file).ok_or_else(|| CliError::Usage(format!("{}: not a 3D shape file", path.display())))?;
            Ok(sdfit::field::evaluate_3d(&unit_cube_grid(grid)?, |p| shape.sdf(p)))
        }
        InputKind::Pgm => Err(CliError::Usage(format!("{}: rasters are 2D inputs", path.display()))),
    }
}

fn shape3d(file: &ShapeFile) -> Option<Shape3d> {
    match &file.body {
        ShapeBody::Primitives { primitives } => sdfit::Primitives::new(primitives.clone()).ok().map(Shape3d::Primitives),
        ShapeBody::Csg { positive, negative } => {
            sdfit::Csg::new(positive.clone(), negative.clone()).ok().map(Shape3d::Csg)
        }
        ShapeBody::Curves { .. } => None,
    }
}

fn cmd_fit3d(a: Fit3dArgs) -> CliResult<()> {
    let mut cfg = a.opt.config();
    cfg.grid_dims_3d = [a.grid; 3];
    cfg.prune_overlap_threshold = a.prune_threshold;
    let mode = match a.mode {
        ModeArg::Cuboid => Fit3dMode::Cuboid,
        ModeArg::Rounded => Fit3dMode::Rounded,
        ModeArg::Csg => Fit3dMode::Csg,
    };
    let target = target_3d(&a.input, a.grid)?;
    let (shape, report) = fit3d(&target, a.primitives, mode, &cfg, None)?;

    let obj_path = with_suffix(&a.output, ".obj");
    let shape_path = with_suffix(&a.output, ".shape.json");
    let report_path = with_suffix(&a.output, ".report.json");
    let (obj, file) = match &shape {
        Shape3d::Primitives(set) => (write_obj(&[("union", &set.primitives)]), ShapeFile::primitives(set)),
        Shape3d::Csg(csg) => (
            write_obj(&[("positive", &csg.positive), ("negative", &csg.negative)]),
            ShapeFile::csg(csg),
        ),
    };
    write_file(&obj_path, obj)?;
    write_file(&shape_path, file.to_json() + "\n")?;
    let outputs = [&obj_path, &shape_path, &report_path].map(|p| p.display().to_string()).to_vec();
    write_sidecar(
        &report_path,
        &FitSidecar {
            command: "fit3d",
            input: a.input.display().to_string(),
            class_label: None,
            config: &cfg,
            report: &report,
            outputs: outputs.clone(),
        },
    )?;
    print_report(&format!("fit3d {:?} x{}", a.mode, a.primitives), &report);
    let kept = match &shape {
        Shape3d::Primitives(set) => set.primitives.len(),
        Shape3d::Csg(c) => c.positive.len() + c.negative.len(),
    };
    println!("  primitives    {kept}");
    println!("wrote {}", outputs.join(", "));
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    samples: usize,
    sampling: &'static str,
    chamfer_px2: f64,
    chamfer: f64,
    surface: f64,
    align: f64,
}

fn cmd_eval(a: EvalArgs, library: &TemplateLibrary) -> CliResult<()> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let (_, _, fitted) = load_glyph(&a.shape, library)?;
    let mode = match a.sampling {
        SamplingArg::ArcLength => SamplingMode::ArcLength,
        SamplingArg::Parameter => SamplingMode::Parameter,
    };
    let fitted_pts = sample_curves_uniform(&fitted, a.samples, mode)?;
    let truth_text = read_text(&a.truth)?;
    let grid = glyph_grid(a.grid)?;
    let (truth_pts, truth_field) = match OutlineFile::from_json(&truth_text) {
        Ok(o) => {
            let outline: Outline<f64> = o.to_outline();
            (sample_outline_uniform(&outline, a.samples)?, target_from_outline(&outline, a.grid)?)
        }
        Err(_) => {
            let (_, _, set) = load_glyph(&a.truth, library)?;
            (
                sample_curves_uniform(&set, a.samples, SamplingMode::ArcLength)?,
                target_from_curves(&set, a.grid)?,
            )
        }
    };
    let chamfer = chamfer_sampled(&fitted_pts, &truth_pts)?;
    let fitted_field = evaluate_2d(&grid, |p| fitted.distance(p));
    let gamma = grid.default_gamma();
    let report = EvalReport {
        samples: a.samples,
        sampling: match mode {
            SamplingMode::ArcLength => "arc-length",
            SamplingMode::Parameter => "parameter",
        },
        chamfer_px2: chamfer * a.frame * a.frame,
        chamfer,
        surface: surface_loss(&fitted_field, &truth_field, gamma)?,
        align: align_loss(&fitted_field, &truth_field)?,
    };
    println!("samples       {} ({})", report.samples, report.sampling);
    println!("chamfer       {:.6e} px² ({}-px frame)", report.chamfer_px2, a.frame);
    println!("chamfer (em)  {:.6e}", report.chamfer);
    println!("surface loss  {:.6e}", report.surface);
    println!("align loss    {:.6e}", report.align);
    if let Some(path) = &a.report {
        write_file(path, serde_json::to_string_pretty(&report).expect("report serialization") + "\n")?;
    }
    Ok(())
}

fn record_id(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

fn cmd_catalog_build(a: CatalogBuildArgs, library: &TemplateLibrary, templates_ref: &str) -> CliResult<()> {
    let mut records = Vec::with_capacity(a.shapes.len());
    for path in &a.shapes {
        let (class, params, _) = load_glyph(path, library)?;
        let template = glyph_template(library, &class)?;
        let n = template.vector_len(false);
        let mut rec = GlyphRecord::new(record_id(path), class, params[..n].to_vec());
        if params.len() > n {
            rec.thickness = Some(params[n..].to_vec());
        }
        rec.source.font = a.font.clone();
        rec.source.path = Some(path.display().to_string());
        records.push(rec);
    }
    let catalog = Catalog::new(records)?;
    write_file(&a.output, write_catalog(&catalog, templates_ref) + "\n")?;
    println!("catalog: {} records, {} classes -> {}", catalog.len(), catalog.classes().count(), a.output.display());
    Ok(())
}

fn open_catalog(path: &Path) -> CliResult<Catalog> {
    Ok(at_path(path, load_catalog(path))?.0)
}

fn find_record<'a>(catalog: &'a Catalog, id: &str) -> CliResult<&'a GlyphRecord> {
    catalog
        .get(id)
        .ok_or_else(|| CliError::Usage(format!("no record with id {id:?} in the catalog")))
}

fn cmd_nn(a: NnArgs, library: &TemplateLibrary) -> CliResult<()> {
    let catalog = open_catalog(&a.catalog)?;
    let metric = match a.metric {
        MetricArg::Shape => Metric::Shape,
        MetricArg::ShapeAndStroke => Metric::ShapeAndStroke,
    };
    let (class, query) = match (&a.query, &a.id) {
        (Some(path), _) => {
            let (class, params, _) = load_glyph(path, library)?;
            let n = glyph_template(library, &class)?.vector_len(false);
            let q = match metric {
                Metric::Shape => params[..n.min(params.len())].to_vec(),
                Metric::ShapeAndStroke => params,
            };
            (class, q)
        }
        (None, Some(id)) => {
            let r = find_record(&catalog, id)?;
            let mut q = r.params.clone();
            if metric == Metric::ShapeAndStroke {
                q.extend(r.thickness.iter().flatten());
            }
            (r.class_label.clone(), q)
        }
        (None, None) => return Err(CliError::Usage("give --query or --id".into())),
    };
    let filter = if a.all_classes { None } else { Some(a.class.unwrap_or(class)) };
    let matches = nearest_by(&catalog, &query, a.k, filter.as_deref(), metric)?;
    println!("rank\tid\tclass\tdistance");
    for (i, m) in matches.iter().enumerate() {
        println!("{}\t{}\t{}\t{:.9e}", i + 1, m.record.id, m.record.class_label, m.distance);
    }
    Ok(())
}

fn cmd_interp(a: InterpArgs) -> CliResult<()> {
    let catalog = open_catalog(&a.catalog)?;
    let start = find_record(&catalog, &a.from)?;
    let end = find_record(&catalog, &a.to)?;
    if start.class_label != end.class_label {
        return Err(CliError::Usage(format!(
            "records belong to different classes ({} and {})",
            start.class_label, end.class_label
        )));
    }
    let path = interpolate_path(&catalog, &start.params, &end.params, a.steps, Some(&start.class_label))?;
    println!("t\tid\tdistance\trepeats");
    for step in &path {
        println!("{:.6}\t{}\t{:.9e}\t{}", step.t, step.record.id, step.distance, step.repeats);
    }
    Ok(())
}

fn shape_points(path: &Path) -> CliResult<(String, Vec<f64>)> {
    let file = at_path(path, ShapeFile::from_json(&read_text(path)?))?;
    match file.body {
        ShapeBody::Curves { class_label, params } => Ok((class_label, params)),
        _ => Err(CliError::Usage(format!("{}: not a 2D glyph shape file", path.display()))),
    }
}

fn cmd_warp(a: WarpArgs) -> CliResult<()> {
    let outline = at_path(&a.outline, OutlineFile::from_json(&read_text(&a.outline)?))?;
    let (src_class, src) = shape_points(&a.source)?;
    let (dst_class, dst) = shape_points(&a.target)?;
    if src_class != dst_class {
        return Err(CliError::Usage(format!("source class {src_class} differs from target class {dst_class}")));
    }
    let n = src.len().min(dst.len());
    // Thickness entries trail the coordinates; only whole (x, y) pairs take part.
    let n = n - n % 2;
    let warped = warp_style(&outline.point_loops(), &src[..n], &dst[..n], a.bandwidth)?;
    let out = OutlineFile {
        loops: warped.iter().map(|l| l.iter().map(|p| [p.x, p.y]).collect()).collect(),
    };
    write_file(&a.output, out.to_json() + "\n")?;
    println!("warped {} loops -> {}", out.loops.len(), a.output.display());
    Ok(())
}

fn cmd_field2d(a: Field2dArgs, library: &TemplateLibrary) -> CliResult<()> {
    let field = target_2d(&a.input, a.grid, library)?;
    write_file(&a.output, write_field(&field))?;
    println!("field {}x{} -> {}", a.grid, a.grid, a.output.display());
    Ok(())
}

fn cmd_field3d(a: Field3dArgs) -> CliResult<()> {
    let field = target_3d(&a.input, a.grid)?;
    write_file(&a.output, write_field(&field))?;
    println!("field {0}x{0}x{0} -> {1}", a.grid, a.output.display());
    Ok(())
}
