//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 parse or IO failure, 3 validation failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::augment::{self, AugmentError, BlurKernel};
use crate::dataset::{
    self, read_annotations, read_detections, DatasetError, DetectionOptions, FrameSet,
};
use crate::geometry::{BBox, ImageSize};
use crate::matcher::{annotate_matches, match_dataset};
use crate::metrics::{
    report_table, AllAveraging, ApConfig, EvalError, EvalReport, Evaluation, Interpolation,
};

pub const DEFAULT_SEED: u64 = 42;
pub const OUT_DIR_ENV: &str = "EHOI_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ehoi", version, about = "Egocentric hand-object interaction evaluation and dataset tooling")]
pub struct Cli {
    /// Worker threads for frame-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "ehoi-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AveragingArg {
    PerCategory,
    Pooled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InterpArg {
    Coco101,
    Allpoints,
}

#[derive(Debug, Args)]
pub struct DetArgs {
    /// Contact probability at or above which a detected hand is in contact.
    #[arg(long, default_value_t = 0.5)]
    pub contact_threshold: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score detections against ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        dets: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        #[arg(long, value_enum, default_value = "coco101")]
        interp: InterpArg,
        #[arg(long, value_enum, default_value = "per-category")]
        all_averaging: AveragingArg,
        /// Row label in the rendered table (defaults to the detections file stem).
        #[arg(long)]
        label: Option<String>,
        #[command(flatten)]
        det: DetArgs,
    },
    /// Resolve in-contact hands to active objects.
    Match {
        #[arg(long)]
        dets: PathBuf,
        /// Annotations supplying image sizes for frames without them.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[command(flatten)]
        det: DetArgs,
    },
    /// Motion-blur frames and correct object boxes from their blurred masks.
    Augment {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long, default_value_t = 15)]
        kernel_size: usize,
        #[arg(long, default_value_t = 4)]
        trajectory_points: usize,
        /// Re-binarization threshold for blurred masks.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Dataset statistics.
    Stats {
        #[arg(long)]
        gt: PathBuf,
    },
    /// Video-level train/val/test split.
    Split {
        #[arg(long)]
        gt: PathBuf,
        /// JSON file `{"train": [video ids], "val": [...], "test": [...]}`.
        #[arg(long)]
        split: PathBuf,
    },
    /// Seeded uniform frame subsample.
    Subsample {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Merge evaluation reports into one comparison table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Comma-separated row labels overriding those stored in the reports.
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
    },
    /// Export a generated blur kernel as a text grid.
    Kernel {
        #[arg(long, default_value_t = 15)]
        kernel_size: usize,
        #[arg(long, default_value_t = 4)]
        trajectory_points: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
        }
    }
}

fn dataset_err(path: &Path, e: DatasetError) -> CliError {
    match e {
        DatasetError::Io { .. } => CliError::Parse(e.to_string()),
        DatasetError::Parse(_) => CliError::Parse(format!("{}: {e}", path.display())),
        DatasetError::Validation(_) => CliError::Validation(format!("{}: {e}", path.display())),
    }
}

fn eval_err(e: EvalError) -> CliError {
    match e {
        EvalError::BadThreshold(_) => CliError::Usage(e.to_string()),
        EvalError::Report(_) => CliError::Parse(e.to_string()),
        EvalError::Validation(_) | EvalError::Match(_) => CliError::Validation(e.to_string()),
    }
}

fn augment_err(e: AugmentError) -> CliError {
    match e {
        AugmentError::Image { .. } => CliError::Parse(e.to_string()),
        AugmentError::BadKernelSize(_)
        | AugmentError::TooFewPoints(_)
        | AugmentError::BadThreshold(_) => CliError::Usage(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Parse(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn det_opts(d: &DetArgs) -> Result<DetectionOptions, CliError> {
    if !(0.0..=1.0).contains(&d.contact_threshold) {
        return Err(CliError::Usage(format!(
            "--contact-threshold {} must lie in [0, 1]",
            d.contact_threshold
        )));
    }
    Ok(DetectionOptions {
        contact_threshold: d.contact_threshold,
    })
}

fn load_gt(path: &Path) -> Result<FrameSet, CliError> {
    read_annotations(path).map_err(|e| dataset_err(path, e))
}

/// Parses arguments and runs. Returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ehoi: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command on a pool of `cli.jobs` threads.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| dispatch(&cli.command, &cli.out))
}

fn dispatch(cmd: &Command, out: &Path) -> Result<(), CliError> {
    match cmd {
        Command::Evaluate {
            gt,
            dets,
            iou,
            interp,
            all_averaging,
            label,
            det,
        } => {
            let cfg = ApConfig {
                iou_threshold: *iou,
                interpolation: match interp {
                    InterpArg::Coco101 => Interpolation::Coco101,
                    InterpArg::Allpoints => Interpolation::AllPoints,
                },
                all_averaging: match all_averaging {
                    AveragingArg::PerCategory => AllAveraging::PerCategory,
                    AveragingArg::Pooled => AllAveraging::Pooled,
                },
            };
            cfg.validate().map_err(eval_err)?;
            let fs = load_gt(gt)?;
            let ds = read_detections(dets, &det_opts(det)?).map_err(|e| dataset_err(dets, e))?;
            let label = label.clone().unwrap_or_else(|| {
                dets.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let report = Evaluation::new(&fs, &ds, cfg)
                .map_err(eval_err)?
                .report()
                .with_label(label);
            let table = report_table(std::slice::from_ref(&report));
            write(&out.join("report.json"), &report.to_json())?;
            write(&out.join("table.md"), &table.to_text())?;
            write(&out.join("table.csv"), &table.to_csv())?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::Match { dets, gt, det } => {
            let ds = read_detections(dets, &det_opts(det)?).map_err(|e| dataset_err(dets, e))?;
            let fs = gt.as_deref().map(load_gt).transpose()?;
            let sizes = |id| fs.as_ref().and_then(|f| f.frame(id)).map(|f| f.size);
            let matches = match_dataset(&ds, &sizes).map_err(|e| CliError::Validation(e.to_string()))?;
            let annotated = annotate_matches(&ds, &matches).map_err(|e| CliError::Validation(e.to_string()))?;
            write(&out.join("matched.json"), &dataset::write_detections(&annotated))
        }
        Command::Augment {
            gt,
            images,
            masks,
            kernel_size,
            trajectory_points,
            threshold,
            seed,
        } => cmd_augment(
            gt,
            images,
            masks,
            *kernel_size,
            *trajectory_points,
            *threshold,
            *seed,
            out,
        ),
        Command::Stats { gt } => {
            let s = dataset::stats(&load_gt(gt)?);
            write(&out.join("stats.json"), &to_json(&s))?;
            write(&out.join("stats.md"), &s.render())?;
            print!("{}", s.render());
            Ok(())
        }
        Command::Split { gt, split } => {
            let fs = load_gt(gt)?;
            let text = fs::read_to_string(split).map_err(|e| io_err(split, e))?;
            let spec = dataset::parse_split_spec(&text).map_err(|e| dataset_err(split, e))?;
            let parts = dataset::split(&fs, &spec).map_err(|e| CliError::Validation(e.to_string()))?;
            for s in dataset::Split::ALL {
                let name = format!("{}.json", s.label().to_lowercase());
                write(&out.join(name), &dataset::write_annotations(parts.get(s)))?;
            }
            write(&out.join("split_stats.json"), &to_json(&parts.rows))?;
            write(&out.join("split_stats.md"), &parts.render())?;
            print!("{}", parts.render());
            Ok(())
        }
        Command::Subsample { gt, fraction, seed } => {
            let fs = load_gt(gt)?;
            let sub = dataset::subsample(&fs, *fraction, *seed).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&out.join("subsample.json"), &dataset::write_annotations(&sub))
        }
        Command::Report { reports, labels } => {
            if !labels.is_empty() && labels.len() != reports.len() {
                return Err(CliError::Usage(format!(
                    "{} labels given for {} reports",
                    labels.len(),
                    reports.len()
                )));
            }
            let mut loaded = Vec::with_capacity(reports.len());
            for (i, path) in reports.iter().enumerate() {
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                let mut r = EvalReport::from_json(&text)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
                if let Some(l) = labels.get(i) {
                    r.label = l.clone();
                }
                loaded.push(r);
            }
            let table = report_table(&loaded);
            write(&out.join("comparison.md"), &table.to_text())?;
            write(&out.join("comparison.csv"), &table.to_csv())?;
            write(&out.join("curves.csv"), &table.curves_csv())?;
            print!("{}", table.to_text());
            Ok(())
        }
        Command::Kernel {
            kernel_size,
            trajectory_points,
            seed,
        } => {
            let k = augment::generate_kernel(*kernel_size, *trajectory_points, *seed).map_err(augment_err)?;
            write(&out.join("kernel.txt"), &k.to_text())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_augment(
    gt: &Path,
    images: &Path,
    masks: &Path,
    kernel_size: usize,
    points: usize,
    threshold: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Usage(format!("--threshold {threshold} must lie in [0, 1]")));
    }
    // surface bad kernel parameters before touching any frame
    augment::generate_kernel(kernel_size, points, seed).map_err(augment_err)?;
    let fs = load_gt(gt)?;
    for dir in [out.join("images"), out.join("kernels")] {
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    }
    let results: Vec<Result<Vec<Option<BBox>>, CliError>> = fs
        .frames()
        .par_iter()
        .map(|frame| {
            let kernel = augment::generate_kernel(kernel_size, points, augment::frame_seed(seed, frame.id))
                .map_err(augment_err)?;
            let boxes = augment_frame(frame, images, masks, &kernel, threshold, out)
                .map_err(|e| match e {
                    CliError::Validation(m) => CliError::Validation(format!("frame {}: {m}", frame.id)),
                    other => other,
                })?;
            write(&out.join("kernels").join(format!("{}.txt", frame.id)), &kernel.to_text())?;
            Ok(boxes)
        })
        .collect();
    let boxes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    write(&out.join("annotations.json"), &dataset::write_annotations(&fs.with_object_boxes(&boxes)))
}

fn augment_frame(
    frame: &dataset::Frame,
    images: &Path,
    masks: &Path,
    kernel: &BlurKernel,
    threshold: f64,
    out: &Path,
) -> Result<Vec<Option<BBox>>, CliError> {
    let (img, depth) = augment::read_image(&images.join(&frame.file_name)).map_err(augment_err)?;
    let expected = ImageSize::new(img.width() as u32, img.height() as u32).ok();
    if expected != Some(frame.size) {
        return Err(CliError::Validation(format!(
            "image is {}x{}, annotation says {}x{}",
            img.width(),
            img.height(),
            frame.size.width,
            frame.size.height
        )));
    }
    let object_masks = match &frame.mask_file {
        Some(name) => {
            let map = augment::read_label_map(&masks.join(name)).map_err(augment_err)?;
            if map.width != img.width() || map.height != img.height() {
                return Err(CliError::Validation(format!(
                    "mask {name} is {}x{}, image is {}x{}",
                    map.width,
                    map.height,
                    img.width(),
                    img.height()
                )));
            }
            (1..=frame.objects.len())
                .map(|k| map.mask(k as u16))
                .collect()
        }
        None => Vec::new(),
    };
    let (blurred, boxes) = augment::blur_frame(&img, &object_masks, kernel, threshold).map_err(augment_err)?;
    let target = out.join("images").join(&frame.file_name);
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    augment::write_image(&target, &blurred, depth).map_err(augment_err)?;
    // objects without a mask, or whose blurred mask vanished, keep their box
    let mut boxes = boxes;
    boxes.resize(frame.objects.len(), None);
    Ok(boxes)
}
