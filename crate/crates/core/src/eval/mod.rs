//! Benchmark plumbing: overlap and center-error metrics, sequence loading,
//! synthetic sequence generation and one-pass evaluation.

pub mod metrics;
pub mod ope;
pub mod sequence;
pub mod synth;

pub use metrics::{center_error, overlap, BoxF, MetricReport};
pub use ope::{run_ope, track_sequence, write_evaluation, OpeResult, Timing, TrackRun};
pub use sequence::Sequence;
pub use synth::{generate_synthetic, Background, SynthSpec, Trajectory};
