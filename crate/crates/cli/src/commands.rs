//! Batch commands. Each video is processed independently (in parallel); a
//! failing video is reported on stderr and counted, the rest still run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use annofix::correction::{correct as correct_track, CorrectionConfig};
use annofix::format::{read_annotations, read_detections, write_annotations};
use annofix::imaging::{FrameSequence, FrameSource};
use annofix::metrics::{
    calibrate_threshold_many, compare_tracks_many, diff_stats_many, evaluate_many, Calibration, DatasetReport,
    DiffStats, TableLayout, Threshold,
};
use annofix::noise::{size_stats, NoiseConfig, NoiseContext, NoisyTrack, SizeStats};
use annofix::{AnnotationTrack, DetectionSet};
use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::{CorrectArgs, EvaluateArgs, ExportArgs, InjectArgs, OutputFormat, StatsArgs};
use crate::dataset::{list_videos, write_file, Video, LABEL_FILE};
use crate::decisions::{Choice, DecisionFile};
use crate::usage;

fn report_failures(failures: &Failures) {
    for (id, e) in failures {
        log::error!("video {id}: {e:#}");
        eprintln!("video {id}: {e:#}");
    }
}

/// Result of one video, keyed by its id.
type PerVideo<T> = (String, anyhow::Result<T>);
type Failures = Vec<(String, anyhow::Error)>;

fn partition<T>(results: Vec<PerVideo<T>>) -> (Vec<(String, T)>, Failures) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => failed.push((id, e)),
        }
    }
    (ok, failed)
}

fn load_labels(path: &Path) -> anyhow::Result<AnnotationTrack> {
    read_annotations(path).with_context(|| path.display().to_string())
}

#[derive(Debug, Serialize)]
struct StatsReport {
    videos: usize,
    failed: Vec<String>,
    size: SizeStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    diff: Option<DiffStats>,
    /// TA of the second set scored against the first, in percent.
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement_ta: Option<f64>,
}

pub fn stats(args: &StatsArgs) -> anyhow::Result<usize> {
    let videos = list_videos(&args.dataset)?;
    let loaded: Vec<PerVideo<(AnnotationTrack, Option<AnnotationTrack>)>> = videos
        .par_iter()
        .map(|v| {
            let r = load_labels(&v.label_path()).and_then(|a| {
                let b = args
                    .against
                    .as_ref()
                    .map(|root| load_labels(&v.mirrored_label(root)))
                    .transpose()?;
                Ok((a, b))
            });
            (v.id.clone(), r)
        })
        .collect();
    let (ok, failed) = partition(loaded);
    report_failures(&failed);
    if ok.is_empty() {
        bail!("no video could be read");
    }
    let size = size_stats(ok.iter().map(|(_, (a, _))| a))?;
    let pairs: Vec<(AnnotationTrack, AnnotationTrack)> = ok
        .iter()
        .filter_map(|(_, (a, b))| b.clone().map(|b| (a.clone(), b)))
        .collect();
    let (diff, agreement_ta) = if args.against.is_some() {
        (Some(diff_stats_many(&pairs)?), Some(compare_tracks_many(&pairs)?))
    } else {
        (None, None)
    };
    let report = StatsReport {
        videos: ok.len(),
        failed: failed.iter().map(|(id, _)| id.clone()).collect(),
        size,
        diff,
        agreement_ta,
    };
    match args.format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        OutputFormat::Table => print!("{}", stats_table(&report)),
    }
    Ok(failed.len())
}

fn stats_table(r: &StatsReport) -> String {
    let mut out = String::new();
    let s = &r.size;
    let _ = writeln!(out, "videos      {}", r.videos);
    let _ = writeln!(out, "box width   mean {:.3}  std {:.3}", s.mean_w, s.std_w);
    let _ = writeln!(out, "box height  mean {:.3}  std {:.3}", s.mean_h, s.std_h);
    if let Some(d) = &r.diff {
        let _ = writeln!(out, "frames compared  {}", d.frames);
        let _ = writeln!(
            out,
            "{:<12}{:>10}{:>10}{:>10}{:>10}",
            "", "mean x", "std x", "mean y", "std y"
        );
        let _ = writeln!(
            out,
            "{:<12}{:>10.4}{:>10.3}{:>10.4}{:>10.3}",
            "diff", d.mean_x, d.std_x, d.mean_y, d.std_y
        );
        let _ = writeln!(
            out,
            "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>10.4}",
            "norm diff", d.norm_mean_x, d.norm_std_x, d.norm_mean_y, d.norm_std_y
        );
    }
    if let Some(ta) = r.agreement_ta {
        let _ = writeln!(out, "agreement TA  {ta:.2}%");
    }
    out
}

pub const MULTIBOX_FILE: &str = "multibox.json";
pub const INJECTION_LOG_FILE: &str = "injection_log.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// Writes `<out>/<id>/label.json` (primary boxes), `multibox.json` (every
/// box per frame) and `injection_log.json`. Videos the noise leaves untouched
/// get a byte copy of their input label file.
pub fn inject(args: &InjectArgs) -> anyhow::Result<usize> {
    let bytes = std::fs::read(&args.config).map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    let mut config = NoiseConfig::from_json(&bytes).map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let videos = list_videos(&args.dataset)?;
    type Loaded = (Vec<u8>, AnnotationTrack);
    let loaded: Vec<(Video, anyhow::Result<Loaded>)> = videos
        .into_par_iter()
        .map(|v| {
            let path = v.label_path();
            let r = std::fs::read(&path)
                .with_context(|| path.display().to_string())
                .and_then(|b| {
                    let t = annofix::format::parse_annotations(&b).with_context(|| path.display().to_string())?;
                    Ok((b, t))
                });
            (v, r)
        })
        .collect();
    let tracks: Vec<&AnnotationTrack> = loaded
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().map(|(_, t)| t))
        .collect();
    let stats = size_stats(tracks).ok();

    let results: Vec<PerVideo<usize>> = loaded
        .par_iter()
        .map(|(v, r)| {
            let r = match r {
                Ok((bytes, track)) => inject_video(v, bytes, track, &config, stats, args),
                Err(e) => Err(anyhow::anyhow!("{e:#}")),
            };
            (v.id.clone(), r)
        })
        .collect();
    let (ok, failed) = partition(results);
    for (id, records) in &ok {
        println!("{id}: {records} log records");
    }
    report_failures(&failed);
    Ok(failed.len())
}

fn inject_video(
    video: &Video,
    original: &[u8],
    track: &AnnotationTrack,
    config: &NoiseConfig,
    stats: Option<SizeStats>,
    args: &InjectArgs,
) -> anyhow::Result<usize> {
    let frames_dir = video.frames_dir();
    let frames = if frames_dir.is_dir() {
        Some(FrameSequence::open(&frames_dir)?)
    } else {
        None
    };
    let ctx = NoiseContext {
        image_size: args.image_size,
        frames: frames.as_ref().map(|f| f as &dyn FrameSource),
        size_stats: stats,
    };
    let (noisy, log) = config.apply(track, &ctx)?;
    let dir = args.out.join(&video.id);
    let labels = if noisy == NoisyTrack::from(track.clone()) {
        original.to_vec()
    } else {
        write_annotations(noisy.track())
    };
    write_file(&dir.join(LABEL_FILE), &labels)?;
    write_file(&dir.join(MULTIBOX_FILE), &noisy.to_multibox().to_json())?;
    write_file(&dir.join(INJECTION_LOG_FILE), &log.to_json())?;
    Ok(log.len())
}

#[derive(Debug, Serialize)]
struct EvaluateOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<&'a Calibration>,
    report: &'a DatasetReport,
}

pub fn evaluate(args: &EvaluateArgs) -> anyhow::Result<()> {
    if let Some(fps) = args.fps {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(usage(format!("--fps must be positive, got {fps}")));
        }
    }
    let mut pairs = if args.annotations.is_dir() {
        dataset_pairs(&args.annotations, &args.detections)?
    } else {
        let track = load_labels(&args.annotations)?;
        let dets = read_detections(&args.detections).with_context(|| args.detections.display().to_string())?;
        if !dets.video_id().is_empty() && !track.video_id().is_empty() && dets.video_id() != track.video_id() {
            bail!(
                "detections are for video {:?} but annotations are for {:?}",
                dets.video_id(),
                track.video_id()
            );
        }
        vec![(track, dets)]
    };
    if let Some(fps) = args.fps {
        for (track, _) in &mut pairs {
            *track = AnnotationTrack::new(track.video_id(), fps, track.labels().to_vec())?;
        }
    }
    let (calibration, threshold) = match (args.threshold, args.target_fa) {
        (Some(th), _) => (None, Threshold::inclusive(th)),
        (None, Some(target)) => {
            let cal = calibrate_threshold_many(&pairs, target)?;
            if let Some(w) = &cal.warning {
                log::warn!("{w}");
                eprintln!("warning: {w}");
            }
            let th = cal.threshold;
            (Some(cal), th)
        }
        (None, None) => return Err(usage("one of --threshold or --target-fa is required")),
    };
    let report = evaluate_many(&pairs, threshold)?;
    match args.format {
        OutputFormat::Json => {
            let out = EvaluateOutput {
                calibration: calibration.as_ref(),
                report: &report,
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        OutputFormat::Table => {
            let layout = if calibration.is_some() {
                TableLayout::FixedFaRate
            } else {
                TableLayout::FixedThreshold
            };
            if let Some(cal) = &calibration {
                println!("threshold {} at {:.3} FA/min", cal.threshold, cal.fa_per_min);
            }
            print!("{}", report.table(layout));
        }
    }
    Ok(())
}

/// Pairs `<annotations>/<id>/label.json` with `<detections>/<id>.json`.
fn dataset_pairs(annotations: &Path, detections: &Path) -> anyhow::Result<Vec<(AnnotationTrack, DetectionSet)>> {
    let videos = list_videos(annotations)?;
    let mut det_files: Vec<PathBuf> = std::fs::read_dir(detections)
        .with_context(|| detections.display().to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    det_files.sort();
    let unknown: Vec<String> = det_files
        .iter()
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .filter(|id| !videos.iter().any(|v| &v.id == id))
        .collect();
    if !unknown.is_empty() {
        bail!("detections for unknown videos: {}", unknown.join(", "));
    }
    videos
        .par_iter()
        .map(|v| {
            let track = load_labels(&v.label_path())?;
            let path = detections.join(format!("{}.json", v.id));
            let dets = read_detections(&path).with_context(|| path.display().to_string())?;
            Ok((track, dets))
        })
        .collect()
}

/// Writes `<out>/<id>/label.json` and `<out>/<id>/diagnostics.json`.
pub fn correct(args: &CorrectArgs) -> anyhow::Result<usize> {
    let config = CorrectionConfig {
        radius: args.radius,
        passes: args.passes,
        min_segment: args.min_segment,
        subpixel: args.subpixel,
    };
    config.validate().map_err(usage)?;
    let videos = list_videos(&args.dataset)?;
    let results: Vec<PerVideo<(usize, usize)>> = videos
        .par_iter()
        .map(|v| (v.id.clone(), correct_video(v, &config, &args.out)))
        .collect();
    let (ok, failed) = partition(results);
    for (id, (moved, saturated)) in &ok {
        println!("{id}: {moved} boxes moved, {saturated} saturated steps");
    }
    report_failures(&failed);
    Ok(failed.len())
}

fn correct_video(video: &Video, config: &CorrectionConfig, out: &Path) -> anyhow::Result<(usize, usize)> {
    let track = load_labels(&video.label_path())?;
    let frames = FrameSequence::open(video.frames_dir())?;
    let (fixed, diagnostics) = correct_track(&frames, &track, config)?;
    let moved = track
        .labels()
        .iter()
        .zip(fixed.labels())
        .filter(|(a, b)| a != b)
        .count();
    let dir = out.join(&video.id);
    write_file(&dir.join(LABEL_FILE), &write_annotations(&fixed))?;
    write_file(&dir.join(DIAGNOSTICS_FILE), &diagnostics.to_json())?;
    Ok((moved, diagnostics.saturated()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ExportEntry {
    pub video_id: String,
    pub choice: Choice,
    pub source: PathBuf,
    /// No decision was recorded; `--default` applied.
    pub defaulted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ExportSummary {
    pub corrected: usize,
    pub original: usize,
    pub videos: Vec<ExportEntry>,
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Copies the chosen label file of every video to `<out>/<id>/label.json`
/// and writes `<out>/summary.json`.
pub fn export(args: &ExportArgs) -> anyhow::Result<usize> {
    let decisions = DecisionFile::load(&args.decisions).map_err(|e| usage(format!("{e:#}")))?;
    let videos = list_videos(&args.dataset)?;
    let mut entries = Vec::with_capacity(videos.len());
    let mut undecided = Vec::new();
    for v in &videos {
        let (choice, defaulted) = match (decisions.get(&v.id), args.default) {
            (Some(d), _) => (d.choice, false),
            (None, Some(c)) => (c, true),
            (None, None) => {
                undecided.push(v.id.clone());
                continue;
            }
        };
        let source = match choice {
            Choice::Original => v.label_path(),
            Choice::Corrected => v.mirrored_label(&args.corrected),
        };
        entries.push(ExportEntry {
            video_id: v.id.clone(),
            choice,
            source,
            defaulted,
        });
    }
    if !undecided.is_empty() {
        return Err(usage(format!(
            "no decision for {} video(s): {} (pass --default original|corrected)",
            undecided.len(),
            undecided.join(", ")
        )));
    }
    for d in &decisions.decisions {
        if !videos.iter().any(|v| v.id == d.video_id) {
            log::warn!("decision for unknown video {} ignored", d.video_id);
        }
    }
    let results: Vec<PerVideo<()>> = entries
        .par_iter()
        .map(|e| {
            let r = std::fs::read(&e.source)
                .with_context(|| e.source.display().to_string())
                .and_then(|bytes| write_file(&args.out.join(&e.video_id).join(LABEL_FILE), &bytes));
            (e.video_id.clone(), r)
        })
        .collect();
    let (_, failed) = partition(results);
    report_failures(&failed);
    let summary = ExportSummary {
        corrected: entries.iter().filter(|e| e.choice == Choice::Corrected).count(),
        original: entries.iter().filter(|e| e.choice == Choice::Original).count(),
        videos: entries,
    };
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    write_file(&args.out.join(SUMMARY_FILE), &json)?;
    println!("corrected={} original={}", summary.corrected, summary.original);
    Ok(failed.len())
}
