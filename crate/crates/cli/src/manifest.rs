use std::path::PathBuf;

use serde::Serialize;

use het_core::eval::{SynthSpec, Timing};
use het_core::{BoxI, TrackerConfig};

#[derive(Debug, Clone, Serialize)]
pub struct TimingSummary {
    pub frames: usize,
    pub total_seconds: f64,
    pub decode_seconds: f64,
    pub track_seconds: f64,
    pub mean_frame_ms: f64,
    pub fps_decode_excluded: f64,
    pub fps_decode_included: f64,
}

impl From<Timing> for TimingSummary {
    fn from(t: Timing) -> Self {
        TimingSummary {
            frames: t.frames,
            total_seconds: t.total_seconds(),
            decode_seconds: t.decode_seconds,
            track_seconds: t.track_seconds,
            mean_frame_ms: t.mean_frame_ms(),
            fps_decode_excluded: finite_or_zero(t.fps_exclusive()),
            fps_decode_included: finite_or_zero(t.fps_inclusive()),
        }
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceRun {
    pub name: String,
    pub path: PathBuf,
    pub init_box: BoxI,
    pub lost_at: Option<usize>,
    pub timing: TimingSummary,
    pub outputs: Vec<PathBuf>,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub format: &'static str,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<TrackerConfig>,
    /// The effective config in the `key = value` file format.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_kv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth_spec: Option<SynthSpec>,
    pub sequences: Vec<SequenceRun>,
    pub outputs: Vec<PathBuf>,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            format: "het-run-manifest",
            tool: "het",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config: None,
            config_kv: None,
            synth_spec: None,
            sequences: Vec::new(),
            outputs: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub fn with_config(mut self, cfg: &TrackerConfig) -> Self {
        self.config = Some(cfg.clone());
        self.config_kv = Some(cfg.to_kv());
        self
    }
}
