//! Hierarchical ensemble tracker.
//!
//! A target is described by a set of fixed-size sub-patches drawn inside its
//! first-frame box. Each sub-patch carries a bank of Gaussian naive-Bayes
//! classifiers over compressed rectangle features ([`projection`],
//! [`bottom`]); per-frame matches vote for the target center ([`middle`]),
//! and a constant-velocity Kalman filter whose noise follows the vote
//! confidence produces the final position ([`kalman`], [`tracker`]).
//! [`eval`] holds the benchmark metrics and a synthetic sequence generator.

pub mod bottom;
pub mod config;
pub mod error;
pub mod eval;
pub mod kalman;
pub mod middle;
pub mod projection;
pub mod raster;
pub mod tracker;

pub use bottom::{match_patch, strong_score, weak_score, MatchResult, PatchClassifier, WeakClassifier};
pub use config::TrackerConfig;
pub use error::{HetError, Result};
pub use kalman::{KalmanConfig, KalmanState};
pub use middle::{combine_votes, normalize_weights, Measurement, PatchSet, SubPatch};
pub use projection::{compress, generate_projection, CompressedFeature, SparseProjection};
pub use raster::{build_integral, rect_sum, to_grayscale, Frame, IntegralImage, Point, Rect};
pub use tracker::{BoxI, TrackOutput, TrackerModel};
