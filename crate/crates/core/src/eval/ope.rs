//! One-pass evaluation and the on-disk result formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::TrackerConfig;
use crate::error::{HetError, Result};
use crate::eval::metrics::{BoxF, MetricReport};
use crate::eval::sequence::Sequence;
use crate::middle::Measurement;
use crate::raster::{load_frame, Frame};
use crate::tracker::{BoxI, TrackOutput, TrackerModel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub frames: usize,
    pub decode_seconds: f64,
    pub track_seconds: f64,
}

impl Timing {
    pub fn total_seconds(&self) -> f64 {
        self.decode_seconds + self.track_seconds
    }

    /// Frames per second counting tracking time only.
    pub fn fps_exclusive(&self) -> f64 {
        rate(self.frames, self.track_seconds)
    }

    /// Frames per second counting decode and tracking.
    pub fn fps_inclusive(&self) -> f64 {
        rate(self.frames, self.total_seconds())
    }

    pub fn mean_frame_ms(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            1000.0 * self.total_seconds() / self.frames as f64
        }
    }
}

fn rate(frames: usize, secs: f64) -> f64 {
    if secs > 0.0 {
        frames as f64 / secs
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    /// One output per frame, including frame 0.
    pub outputs: Vec<TrackOutput>,
    /// Frame index at which the track was lost; later boxes are frozen.
    pub lost_at: Option<usize>,
    pub timing: Timing,
}

impl TrackRun {
    pub fn boxes(&self) -> Vec<BoxF> {
        self.outputs.iter().map(|o| BoxF::from(o.bbox)).collect()
    }
}

/// Decodes and tracks every frame, starting from `init` on the first one.
/// A lost track freezes the last box with zero confidence for the rest of
/// the sequence.
pub fn track_sequence(config: &TrackerConfig, frames: &[PathBuf], init: BoxI) -> Result<TrackRun> {
    let mut timing = Timing {
        frames: frames.len(),
        ..Default::default()
    };
    let mut decode = Duration::ZERO;
    let mut track = Duration::ZERO;
    let mut load = |p: &Path| -> Result<Frame> {
        let t = Instant::now();
        let f = load_frame(p);
        decode += t.elapsed();
        f
    };
    let first_path = frames
        .first()
        .ok_or_else(|| HetError::Contract("sequence has no frames".into()))?;
    let first = load(first_path)?;
    let t = Instant::now();
    let mut model = TrackerModel::init(&first, init, config.clone())?;
    track += t.elapsed();
    let mut outputs = vec![model.initial_output()];
    let mut lost_at = None;
    for (k, path) in frames.iter().enumerate().skip(1) {
        if lost_at.is_some() {
            outputs.push(frozen(outputs.last().expect("frame 0 output"), k));
            continue;
        }
        let frame = load(path)?;
        let t = Instant::now();
        let res = model.step(&frame);
        track += t.elapsed();
        match res {
            Ok(out) => outputs.push(out),
            Err(HetError::TrackLost { .. }) => {
                lost_at = Some(k);
                outputs.push(frozen(outputs.last().expect("frame 0 output"), k));
            }
            Err(e) => return Err(e),
        }
    }
    timing.decode_seconds = decode.as_secs_f64();
    timing.track_seconds = track.as_secs_f64();
    Ok(TrackRun {
        outputs,
        lost_at,
        timing,
    })
}

fn frozen(last: &TrackOutput, k: usize) -> TrackOutput {
    TrackOutput {
        frame_index: k,
        bbox: last.bbox,
        measurement: Measurement {
            center: last.bbox.center(),
            confidence: 0.0,
        },
        diagnostics: None,
    }
}

#[derive(Debug, Clone)]
pub struct OpeResult {
    pub run: TrackRun,
    pub report: MetricReport,
}

/// One-pass evaluation: initialize on the first ground-truth box, track to
/// the end, score every frame.
pub fn run_ope(config: &TrackerConfig, seq: &Sequence) -> Result<OpeResult> {
    let gt = seq
        .ground_truth
        .as_ref()
        .ok_or_else(|| HetError::Contract(format!("{}: no ground truth", seq.name)))?;
    let init = gt[0].round();
    let run = track_sequence(config, &seq.frames, init)?;
    let report = MetricReport::from_boxes(&run.boxes(), gt)?;
    Ok(OpeResult { run, report })
}

/// Per-frame `frame_index,x,y,w,h,confidence` lines.
pub fn results_csv(outputs: &[TrackOutput]) -> String {
    outputs.iter().map(|o| o.csv_line() + "\n").collect()
}

pub fn curve_csv(curve: &[(f64, f64)]) -> String {
    curve.iter().map(|(t, v)| format!("{t},{v}\n")).collect()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HetError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| HetError::io(path, e))
}

pub fn write_results(path: &Path, outputs: &[TrackOutput]) -> Result<()> {
    write_file(path, results_csv(outputs).as_bytes())
}

/// One JSON object per tracked frame (frame 0 and frozen frames carry no
/// diagnostics and are skipped).
pub fn write_diagnostics(path: &Path, outputs: &[TrackOutput]) -> Result<()> {
    let mut buf = Vec::new();
    for d in outputs.iter().filter_map(|o| o.diagnostics.as_ref()) {
        serde_json::to_writer(&mut buf, d).map_err(|e| HetError::Parse(e.to_string()))?;
        buf.write_all(b"\n").expect("in-memory write");
    }
    write_file(path, &buf)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HetError::Parse(e.to_string()))?;
    write_file(path, (text + "\n").as_bytes())
}

/// Paths written by [`write_evaluation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPaths {
    pub results: PathBuf,
    pub metrics: PathBuf,
    pub precision_curve: PathBuf,
    pub success_curve: PathBuf,
}

/// Writes `results/<name>.csv`, `metrics/<name>.json` and the two curve files
/// under `out_dir`.
pub fn write_evaluation(out_dir: &Path, name: &str, res: &OpeResult) -> Result<EvalPaths> {
    let paths = EvalPaths {
        results: out_dir.join("results").join(format!("{name}.csv")),
        metrics: out_dir.join("metrics").join(format!("{name}.json")),
        precision_curve: out_dir.join("curves").join(format!("{name}_precision.csv")),
        success_curve: out_dir.join("curves").join(format!("{name}_success.csv")),
    };
    write_results(&paths.results, &res.run.outputs)?;
    write_json(&paths.metrics, &res.report)?;
    write_file(&paths.precision_curve, curve_csv(&res.report.precision_curve).as_bytes())?;
    write_file(&paths.success_curve, curve_csv(&res.report.success_curve).as_bytes())?;
    Ok(paths)
}
