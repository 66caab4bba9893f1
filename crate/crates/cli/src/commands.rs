use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;

use omnidet::backproject::BackprojectMode;
use omnidet::bbox::{Detection, GroundTruth};
use omnidet::benchmark::{load_images, parse_manifest, BenchmarkSetup, EntryError};
use omnidet::camera::FisheyeCamera;
use omnidet::convert::{convert_json, BoxFormat};
use omnidet::detfile::{
    parse_detection_lines, parse_detections, parse_ground_truth, write_detections,
};
use omnidet::eval::{
    ap_table_csv, average_precision, pr_curve, pr_curve_csv, ApResult, ImageSample, MethodTag,
    AP_METHOD_NOTE,
};
use omnidet::fusion::{fuse, prefilter, FusionVariant};
use omnidet::geometry::Point2;
use omnidet::image::{remap, Image, Interpolation};
use omnidet::kv::KeyValues;
use omnidet::lut::{build_lut, export_lut, import_lut};
use omnidet::pipeline::{
    backproject_detections, compare_methods, default_tuning, gaussian_sweep, nms_threshold_grid,
    params_label, result_files, threshold_sweep, Comparison, EvalImage, ViewIndex, CONFIDENCE_GRID,
    SIGMA_GRID,
};
use omnidet::synth::{
    dataset_manifest, generate_dataset, run_synthetic, HarnessConfig, RunOptions,
};
use omnidet::view::{enumerate_views, VirtualView};

use crate::config::{load_camera, load_grid, PipelineConfig};
use crate::{Command, Common};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CmdResult<T = ()> = Result<T, Failure>;

trait Classify<T> {
    /// Bad input or configuration: exit code 2.
    fn usage(self) -> CmdResult<T>;
    /// Failure while producing output: exit code 1.
    fn internal(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into(),
        })
    }
    fn internal(self) -> CmdResult<T> {
        self.map_err(|e| Failure {
            code: 1,
            error: e.into(),
        })
    }
}

fn usage_error<T>(msg: impl Into<String>) -> CmdResult<T> {
    Err(Failure {
        code: 2,
        error: anyhow!(msg.into()),
    })
}

pub fn run(command: Command) -> CmdResult {
    match command {
        Command::Views(a) => views(a),
        Command::Backproject(a) => backproject(a),
        Command::Fuse(a) => fuse_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Synth(a) => synth(a),
        Command::ConvertDetections(a) => convert(a),
        Command::Lut(LutCommand::Export(a)) => lut_export(a),
        Command::Lut(LutCommand::Inspect(a)) => lut_inspect(a),
    }
}

/// Config file, then flags; also sizes the worker pool.
fn settings(common: &Common) -> CmdResult<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p).usage()?,
        None => PipelineConfig::default(),
    };
    if let Some(c) = &common.camera {
        cfg.camera = Some(c.clone());
    }
    if let Some(g) = &common.grid {
        cfg.grid = load_grid(g).usage()?;
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    if let Some(n) = cfg.jobs {
        if n == 0 {
            return usage_error("--jobs must be at least 1");
        }
        // a second build in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(cfg)
}

fn views_of(cfg: &PipelineConfig) -> CmdResult<Vec<VirtualView>> {
    enumerate_views(&cfg.grid).context("view grid").usage()
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .usage()
}

fn write_out(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))
            .internal()?;
    }
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .internal()
}

fn write_files(dir: &Path, files: &[(String, String)]) -> CmdResult {
    files
        .par_iter()
        .try_for_each(|(rel, text)| write_out(&dir.join(rel), text))
}

fn out_dir(flag: &Option<PathBuf>, cfg: &PipelineConfig) -> CmdResult<PathBuf> {
    flag.clone().or_else(|| cfg.output.clone()).map_or_else(
        || usage_error("no output directory given (use --out or output= in the config file)"),
        Ok,
    )
}

#[derive(Debug, Args)]
pub struct ViewsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fisheye image (binary PGM or PPM)
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one lookup table per view
    #[arg(long)]
    pub lut: bool,
    /// nearest or bilinear
    #[arg(long)]
    pub interpolation: Option<Interpolation>,
}

fn views(a: ViewsArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let camera = cfg.require_camera().usage()?;
    let image_path = a.image.or(cfg.image.clone()).map_or_else(
        || usage_error("no fisheye image given (use --image or image= in the config file)"),
        Ok,
    )?;
    let out = out_dir(&a.out, &cfg)?;
    let interpolation = a.interpolation.unwrap_or(cfg.interpolation);
    let write_luts = a.lut || cfg.write_luts;

    let bytes = fs::read(&image_path)
        .with_context(|| format!("cannot read image {}", image_path.display()))
        .usage()?;
    let image = Image::from_pnm(&bytes)
        .with_context(|| format!("image {}", image_path.display()))
        .usage()?;
    if (image.width(), image.height()) != (camera.width(), camera.height()) {
        return usage_error(format!(
            "image is {}x{} but the camera config describes {}x{}",
            image.width(),
            image.height(),
            camera.width(),
            camera.height()
        ));
    }
    let views = views_of(&cfg)?;
    let ext = if image.channels() == 1 { "pgm" } else { "ppm" };
    views.par_iter().try_for_each(|v| {
        let lut = build_lut(v, &camera);
        let rendered = remap(&image, &lut, interpolation).internal()?;
        write_out(
            &out.join(format!("{}.{ext}", v.view_id())),
            rendered.to_pnm(),
        )?;
        if write_luts {
            write_out(&out.join(format!("{}.lut", v.view_id())), export_lut(&lut))?;
        }
        Ok(())
    })?;
    let mut manifest = String::from("# view_id azimuth elevation width height\n");
    for v in &views {
        let _ = writeln!(
            manifest,
            "{} {} {} {} {}",
            v.view_id(),
            v.azimuth(),
            v.elevation(),
            v.width(),
            v.height()
        );
    }
    write_out(&out.join("views.txt"), manifest)?;
    eprintln!("wrote {} views to {}", views.len(), out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct BackprojectArgs {
    #[command(flatten)]
    pub common: Common,
    /// Per-view detection files (view_id class score x_min y_min x_max y_max)
    #[arg(long, required = true, num_args = 1..)]
    pub detections: Vec<PathBuf>,
    /// Pooled output file
    #[arg(long)]
    pub out: PathBuf,
    /// corners or edge:<n>
    #[arg(long)]
    pub mode: Option<BackprojectMode>,
}

fn backproject(a: BackprojectArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let camera = cfg.require_camera().usage()?;
    let views = views_of(&cfg)?;
    let index = ViewIndex::new(&views);
    let mode = a.mode.unwrap_or(cfg.mode);
    let pooled = a
        .detections
        .par_iter()
        .map(|path| {
            let text = read_text(path)?;
            let lines = parse_detection_lines(&text)
                .with_context(|| path.display().to_string())
                .usage()?;
            backproject_detections(&lines, &index, &camera, mode)
                .with_context(|| path.display().to_string())
                .usage()
        })
        .collect::<CmdResult<Vec<_>>>()?;
    let dropped: usize = pooled.iter().map(|p| p.dropped).sum();
    let all: Vec<Detection> = pooled.into_iter().flat_map(|p| p.detections).collect();
    write_out(&a.out, write_detections(&all))?;
    eprintln!(
        "pooled {} detections, dropped {} outside the field of view",
        all.len(),
        dropped
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Every sigma against every confidence threshold
    Gauss,
    /// Every N_t for the chosen variant
    Nt,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pooled detections
    #[arg(long)]
    pub input: PathBuf,
    /// Output file (single run)
    #[arg(long, conflicts_with = "sweep")]
    pub out: Option<PathBuf>,
    /// nms, soft or soft_gauss
    #[arg(long)]
    pub variant: Option<FusionVariant>,
    /// Overlap threshold N_t
    #[arg(long)]
    pub nt: Option<f64>,
    /// Gaussian smoothing sigma
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Final confidence threshold C_t
    #[arg(long)]
    pub ct: Option<f64>,
    /// Drop detections below this score before fusing
    #[arg(long)]
    pub prefilter: Option<f64>,
    /// Write one output per parameter combination
    #[arg(long, value_enum, requires = "out_dir")]
    pub sweep: Option<SweepKind>,
    /// Output directory for sweeps
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub cts: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub nts: Option<Vec<f64>>,
}

fn fuse_cmd(a: FuseArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let mut params = cfg.fusion;
    if let Some(v) = a.variant {
        params.variant = v;
    }
    if let Some(v) = a.nt {
        params.nms_threshold = v;
    }
    if let Some(v) = a.sigma {
        params.sigma = v;
    }
    if let Some(v) = a.ct {
        params.confidence_threshold = v;
    }
    let text = read_text(&a.input)?;
    let mut dets = parse_detections(&text)
        .with_context(|| a.input.display().to_string())
        .usage()?;
    if let Some(t) = a.prefilter {
        if !(0.0..=1.0).contains(&t) {
            return usage_error(format!("--prefilter must lie in [0, 1], got {t}"));
        }
        dets = prefilter(&dets, t);
    }

    let Some(kind) = a.sweep else {
        params.validate().usage()?;
        let Some(out) = a.out else {
            return usage_error("give --out for a single run or --sweep with --out-dir");
        };
        let fused = fuse(&dets, &params).usage()?;
        write_out(&out, write_detections(&fused))?;
        eprintln!(
            "{}: {} -> {} detections",
            params_label(&params),
            dets.len(),
            fused.len()
        );
        return Ok(());
    };

    let sets = match kind {
        SweepKind::Gauss => gaussian_sweep(
            a.sigmas.as_deref().unwrap_or(&SIGMA_GRID),
            a.cts.as_deref().unwrap_or(&CONFIDENCE_GRID),
        ),
        SweepKind::Nt => {
            if params.variant == FusionVariant::SoftGaussian {
                return usage_error("an N_t sweep needs --variant nms or soft");
            }
            let nts = a.nts.unwrap_or_else(nms_threshold_grid);
            threshold_sweep(params.variant, &nts, params.confidence_threshold)
        }
    };
    for p in &sets {
        p.validate().usage()?;
    }
    let dir = a.out_dir.expect("clap enforces --out-dir with --sweep");
    let outputs = sets
        .par_iter()
        .map(|p| fuse(&dets, p).map(|f| (format!("{}.txt", params_label(p)), write_detections(&f))))
        .collect::<Result<Vec<_>, _>>()
        .usage()?;
    write_files(&dir, &outputs)?;
    let listing: String = outputs
        .iter()
        .map(|(name, _)| format!("{name}\n"))
        .collect();
    write_out(&dir.join("sweep.txt"), listing)?;
    eprintln!("wrote {} fused files to {}", outputs.len(), dir.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fused detections of one image (with --gt)
    #[arg(long, requires = "gt", conflicts_with = "manifest")]
    pub detections: Option<PathBuf>,
    /// Ground truth of one image
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Row label for a single evaluation: nms, soft, soft_gauss or omni
    #[arg(long, default_value = "nms")]
    pub method: MethodTag,
    /// Dataset manifest: image_id detections gt [omni]; compares all methods
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// IoU needed for a match
    #[arg(long)]
    pub ot: Option<f64>,
    /// Confidence threshold used in the method comparison
    #[arg(long)]
    pub ct: Option<f64>,
    /// corners or edge:<n>
    #[arg(long)]
    pub mode: Option<BackprojectMode>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn check_unit(name: &str, v: f64) -> CmdResult<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        usage_error(format!("{name} must lie in [0, 1], got {v}"))
    }
}

fn eval(a: EvalArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let o_t = check_unit("O_t", a.ot.unwrap_or(cfg.overlap_threshold))?;
    let out = out_dir(&a.out, &cfg)?;

    if let Some(det_path) = &a.detections {
        let gt_path = a.gt.as_ref().expect("clap enforces --gt");
        let detections = parse_detections(&read_text(det_path)?)
            .with_context(|| det_path.display().to_string())
            .usage()?;
        let ground_truth = parse_ground_truth(&read_text(gt_path)?)
            .with_context(|| gt_path.display().to_string())
            .usage()?;
        let class_label = single_class(&ground_truth);
        let sample = ImageSample {
            image_id: det_path.display().to_string(),
            detections,
            ground_truth,
        };
        let curve = pr_curve(&[sample], o_t, None);
        let row = ApResult {
            ap: average_precision(&curve),
            class_label,
            overlap_threshold: o_t,
            method: a.method,
        };
        write_out(
            &out.join(format!("pr_{}.csv", a.method)),
            pr_curve_csv(&curve),
        )?;
        write_out(
            &out.join("ap.csv"),
            ap_table_csv(std::slice::from_ref(&row)),
        )?;
        write_out(
            &out.join("ap_meta.txt"),
            format!("{AP_METHOD_NOTE}O_t={o_t}\n"),
        )?;
        println!("{}", ap_table_csv(&[row]).trim_end());
        return Ok(());
    }

    let Some(manifest) = a.manifest.clone().or(cfg.manifest.clone()) else {
        return usage_error("give --detections with --gt, or --manifest");
    };
    let camera = cfg.require_camera().usage()?;
    let views = views_of(&cfg)?;
    let c_t = check_unit("C_t", a.ct.unwrap_or(0.0))?;
    let mode = a.mode.unwrap_or(cfg.mode);
    let (images, errors) = load_manifest_images(&manifest, &camera, &views, mode, cfg.baseline)?;
    if images.is_empty() {
        let detail: String = errors.iter().map(|e| format!("\n  {e}")).collect();
        return usage_error(format!("no manifest entry could be loaded:{detail}"));
    }
    for e in &errors {
        eprintln!("warning: {e}");
    }
    let cmp = compare_methods(&images, &default_tuning(c_t), o_t).usage()?;
    write_comparison(&out, &cmp, &errors)?;
    print_table(&cmp);
    Ok(())
}

fn single_class(gt: &[GroundTruth]) -> String {
    let mut labels: Vec<&str> = gt.iter().map(|g| g.class_label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    match labels[..] {
        [one] => one.to_string(),
        _ => "all".to_string(),
    }
}

fn load_manifest_images(
    manifest: &Path,
    camera: &FisheyeCamera,
    views: &[VirtualView],
    mode: BackprojectMode,
    baseline: bool,
) -> CmdResult<(Vec<EvalImage>, Vec<EntryError>)> {
    let text = read_text(manifest)?;
    let mut entries = parse_manifest(&text)
        .with_context(|| manifest.display().to_string())
        .usage()?;
    if !baseline {
        entries.iter_mut().for_each(|e| e.omni = None);
    }
    let base = manifest.parent().unwrap_or(Path::new(""));
    let setup = BenchmarkSetup {
        omni: camera,
        views,
        mode,
    };
    let loaded = load_images(&entries, base, &setup);
    Ok((loaded.images, loaded.errors))
}

fn write_comparison(out: &Path, cmp: &Comparison, errors: &[EntryError]) -> CmdResult {
    let mut files = cmp.files();
    if let Some((_, meta)) = files.iter_mut().find(|(name, _)| name == "ap_meta.txt") {
        let _ = writeln!(meta, "partial={}", !errors.is_empty());
    }
    if !errors.is_empty() {
        files.push((
            "errors.txt".into(),
            errors.iter().map(|e| format!("{e}\n")).collect(),
        ));
    }
    write_files(out, &files)
}

fn print_table(cmp: &Comparison) {
    println!("{}", ap_table_csv(&cmp.ap_results()).trim_end());
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: Common,
    /// Generate detections with the synthetic harness instead of reading them
    #[arg(long)]
    pub synthetic: bool,
    /// Synthetic harness config (key=value)
    #[arg(long)]
    pub harness: Option<PathBuf>,
    /// Override the harness seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of synthetic scenes
    #[arg(long)]
    pub scenes: Option<u32>,
    /// Dataset manifest for real detections
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// corners or edge:<n>
    #[arg(long)]
    pub mode: Option<BackprojectMode>,
    #[arg(long)]
    pub ot: Option<f64>,
    #[arg(long)]
    pub ct: Option<f64>,
    /// Skip the direct-fisheye baseline
    #[arg(long)]
    pub no_baseline: bool,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn harness_config(
    path: Option<&Path>,
    seed: Option<u64>,
    scenes: Option<u32>,
) -> CmdResult<HarnessConfig> {
    let mut h = match path {
        Some(p) => {
            let kv = KeyValues::parse(&read_text(p)?)
                .with_context(|| p.display().to_string())
                .usage()?;
            HarnessConfig::from_key_values(&kv)
                .with_context(|| p.display().to_string())
                .usage()?
        }
        None => HarnessConfig::default(),
    };
    if let Some(s) = seed {
        h.seed = s;
    }
    if let Some(n) = scenes {
        h.scenes = n;
    }
    Ok(h)
}

fn pipeline(a: PipelineArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let out = out_dir(&a.out, &cfg)?;
    let o_t = check_unit("O_t", a.ot.unwrap_or(cfg.overlap_threshold))?;
    let c_t = check_unit("C_t", a.ct.unwrap_or(0.0))?;
    let mode = a.mode.unwrap_or(cfg.mode);
    let baseline = cfg.baseline && !a.no_baseline;
    if a.synthetic || cfg.synthetic {
        let mut h = harness_config(
            a.harness.as_deref().or(cfg.harness.as_deref()),
            a.seed,
            a.scenes,
        )?;
        if let Some(p) = &cfg.camera {
            h.camera = load_camera(p).usage()?;
            h.validate().map_err(|m| anyhow!(m)).usage()?;
        }
        let opts = RunOptions {
            mode,
            params: default_tuning(c_t),
            overlap_threshold: o_t,
            baseline,
        };
        let run = run_synthetic(&h, &cfg.grid, &opts).usage()?;
        write_files(&out, &run.files(&h, &cfg.grid).internal()?)?;
        write_comparison(&out, &run.comparison, &[]).map_err(|f| stage("eval", f))?;
        print_table(&run.comparison);
        return Ok(());
    }

    let Some(manifest) = a.manifest.clone().or(cfg.manifest.clone()) else {
        return usage_error(
            "real-data mode needs a manifest (--manifest or manifest= in the config file); use --synthetic to generate detections",
        );
    };
    let camera = cfg.require_camera().usage()?;
    let views = views_of(&cfg).map_err(|f| stage("views", f))?;
    check_manifest_inputs(&manifest, baseline)?;
    let (mut images, errors) = load_manifest_images(&manifest, &camera, &views, mode, baseline)?;
    if !errors.is_empty() {
        let detail: String = errors.iter().map(|e| format!("\n  {e}")).collect();
        return usage_error(format!("backproject: cannot load detections:{detail}"));
    }
    if !baseline {
        images.iter_mut().for_each(|i| i.omni_raw = None);
    }

    let cmp = compare_methods(&images, &default_tuning(c_t), o_t)
        .context("fuse")
        .usage()?;
    write_files(
        &out,
        &result_files(&images, &cmp).context("fuse").internal()?,
    )?;
    write_comparison(&out, &cmp, &errors).map_err(|f| stage("eval", f))?;
    print_table(&cmp);
    Ok(())
}

fn stage(name: &str, f: Failure) -> Failure {
    Failure {
        code: f.code,
        error: f.error.context(name.to_string()),
    }
}

/// Lists every missing input at once so the user can fix them in one go.
fn check_manifest_inputs(manifest: &Path, baseline: bool) -> CmdResult {
    let entries = parse_manifest(&read_text(manifest)?)
        .with_context(|| manifest.display().to_string())
        .usage()?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut missing = Vec::new();
    for e in &entries {
        let mut paths = vec![&e.detections, &e.ground_truth];
        if baseline {
            paths.extend(e.omni.as_ref());
        }
        for p in paths {
            let full = base.join(p);
            if !full.is_file() {
                missing.push(full);
            }
        }
    }
    if missing.is_empty() {
        return Ok(());
    }
    let list: String = missing
        .iter()
        .map(|p| format!("\n  {}", p.display()))
        .collect();
    usage_error(format!(
        "detections: {} expected input file(s) are missing:{list}\nrun the detector on the views (or `omnidet synth`) to produce them",
        missing.len()
    ))
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Harness config (key=value)
    #[arg(long)]
    pub harness: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scenes: Option<u32>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn synth(a: SynthArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let out = out_dir(&a.out, &cfg)?;
    let mut h = harness_config(
        a.harness.as_deref().or(cfg.harness.as_deref()),
        a.seed,
        a.scenes,
    )?;
    if let Some(p) = &cfg.camera {
        h.camera = load_camera(p).usage()?;
        h.validate().map_err(|m| anyhow!(m)).usage()?;
    }
    let views = views_of(&cfg)?;
    let data = generate_dataset(&h, &views);
    let mut files: Vec<(String, String)> = data.iter().flat_map(|d| d.files()).collect();
    files.push(("manifest.txt".into(), dataset_manifest(&data)));
    files.push(("camera.cfg".into(), h.camera.to_config()));
    files.push(("grid.cfg".into(), cfg.grid.to_key_values()));
    write_files(&out, &files)?;
    let gt: usize = data.iter().map(|d| d.ground_truth.len()).sum();
    eprintln!(
        "wrote {} scenes with {} people to {}",
        data.len(),
        gt,
        out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Detector JSON
    #[arg(long)]
    pub input: PathBuf,
    /// Box layout in the JSON: xywh or xyxy
    #[arg(long, default_value = "xywh")]
    pub format: BoxFormat,
    /// View id for records without view_id or image_id
    #[arg(long)]
    pub view_id: Option<String>,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn convert(a: ConvertArgs) -> CmdResult {
    if let Some(v) = &a.view_id {
        if v.is_empty() || v.chars().any(|c| c.is_whitespace() || c == '#') {
            return usage_error(format!(
                "--view-id {v:?} must be non-empty without spaces or #"
            ));
        }
    }
    let text = read_text(&a.input)?;
    let dets = convert_json(&text, a.format, a.view_id.as_deref())
        .with_context(|| a.input.display().to_string())
        .usage()?;
    let lines = write_detections(&dets);
    match &a.out {
        Some(p) => write_out(p, lines),
        None => {
            print!("{lines}");
            Ok(())
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum LutCommand {
    /// Build the lookup table of one view and write it
    Export(LutExportArgs),
    /// Print the header and statistics of a lookup table file
    Inspect(LutInspectArgs),
}

#[derive(Debug, Args)]
pub struct LutExportArgs {
    #[command(flatten)]
    pub common: Common,
    /// View id from the grid, e.g. e0.30_a-1.34
    #[arg(long, conflicts_with_all = ["azimuth", "elevation"])]
    pub view: Option<String>,
    /// Azimuth in radians (with --elevation)
    #[arg(long, allow_hyphen_values = true)]
    pub azimuth: Option<f64>,
    /// Elevation in radians (with --azimuth)
    #[arg(long, allow_hyphen_values = true)]
    pub elevation: Option<f64>,
    /// Output file
    #[arg(long)]
    pub out: PathBuf,
}

fn lut_export(a: LutExportArgs) -> CmdResult {
    let cfg = settings(&a.common)?;
    let camera = cfg.require_camera().usage()?;
    let view = match (&a.view, a.azimuth, a.elevation) {
        (Some(id), _, _) => views_of(&cfg)?
            .into_iter()
            .find(|v| v.view_id() == id)
            .map_or_else(
                || usage_error(format!("view {id:?} is not in the grid")),
                Ok,
            )?,
        (None, Some(az), Some(el)) if az.is_finite() && el.is_finite() => {
            VirtualView::new(az, el, cfg.grid.intrinsics)
        }
        _ => return usage_error("give --view, or both --azimuth and --elevation"),
    };
    let lut = build_lut(&view, &camera);
    write_out(&a.out, export_lut(&lut))?;
    eprintln!(
        "{}: {}x{}, {} valid entries",
        view.view_id(),
        lut.width(),
        lut.height(),
        lut.valid_count()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct LutInspectArgs {
    /// Lookup table file
    pub file: PathBuf,
    /// Also print the entry at x,y
    #[arg(long, value_parser = parse_xy)]
    pub at: Option<(u32, u32)>,
}

fn parse_xy(s: &str) -> Result<(u32, u32), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(x)?, num(y)?))
}

fn lut_inspect(a: LutInspectArgs) -> CmdResult {
    let bytes = fs::read(&a.file)
        .with_context(|| format!("cannot read {}", a.file.display()))
        .usage()?;
    let lut = import_lut(&bytes)
        .with_context(|| a.file.display().to_string())
        .usage()?;
    let total = lut.entries().len();
    println!("width={}", lut.width());
    println!("height={}", lut.height());
    println!("valid={}", lut.valid_count());
    println!("invalid={}", total - lut.valid_count());
    if let Some((x, y)) = a.at {
        let Some(e) = lut.get(x, y) else {
            return usage_error(format!(
                "({x}, {y}) is outside the {}x{} table",
                lut.width(),
                lut.height()
            ));
        };
        match e.source() {
            Some(Point2 { x: sx, y: sy }) => println!("entry({x},{y})={sx},{sy}"),
            None => println!("entry({x},{y})=invalid"),
        }
    }
    Ok(())
}
