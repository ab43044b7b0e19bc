//! Track orchestration: first-frame initialization, the per-frame
//! match -> vote -> filter pipeline, and the model update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bottom::{
    annulus_offsets, disk_offsets, FeatureMap, FeatureStats, PatchClassifier, WeakClassifier,
};
use crate::config::TrackerConfig;
use crate::error::{HetError, Result};
use crate::kalman::KalmanState;
use crate::middle::{combine_votes, normalize_weights, Measurement, PatchSet, SubPatch};
use crate::projection::{generate_projection, CompiledProjection, SparseProjection};
use crate::raster::{build_integral, Frame, IntegralImage, Point};

/// Integer box, upper-left origin, 0-based pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxI {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl BoxI {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        BoxI { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// Parses `x,y,w,h`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let bad = || HetError::Parse(format!("expected X,Y,W,H integers, got `{text}`"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let x = parts[0].parse().map_err(|_| bad())?;
        let y = parts[1].parse().map_err(|_| bad())?;
        let w: u32 = parts[2].parse().map_err(|_| bad())?;
        let h: u32 = parts[3].parse().map_err(|_| bad())?;
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok(BoxI { x, y, w, h })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub frame_index: usize,
    /// Whether each patch found an in-bounds candidate this frame.
    pub matched: Vec<bool>,
    pub locations: Vec<Point>,
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub votes: Vec<(f64, f64)>,
    pub measurement: Measurement,
    pub kalman_state: [f64; 4],
    pub kalman_covariance: [f64; 16],
    /// Fresh score of each patch at its relocated position (`None` off-frame).
    pub update_scores: Vec<Option<f64>>,
    /// Patches whose classifiers were updated.
    pub selected_update: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub frame_index: usize,
    pub bbox: BoxI,
    pub measurement: Measurement,
    pub diagnostics: Option<FrameDiagnostics>,
}

impl TrackOutput {
    /// `frame_index,x,y,w,h,confidence`
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6}",
            self.frame_index,
            self.bbox.x,
            self.bbox.y,
            self.bbox.w,
            self.bbox.h,
            self.measurement.confidence
        )
    }
}

/// Eq.-(18)-style exponential blend of a Gaussian with fresh sample
/// statistics. The result is the exact mean and standard deviation of the
/// `lambda : 1 - lambda` mixture of the two Gaussians.
pub fn blend_gaussian(mu_old: f64, sigma_old: f64, mu_new: f64, sigma_new: f64, lambda: f64) -> (f64, f64) {
    let mu = lambda * mu_old + (1.0 - lambda) * mu_new;
    let d = mu_old - mu_new;
    let var = lambda * sigma_old * sigma_old
        + (1.0 - lambda) * sigma_new * sigma_new
        + lambda * (1.0 - lambda) * d * d;
    (mu, var.sqrt())
}

/// Indices whose score lies strictly inside `(mean - std, mean + std)`.
pub fn select_for_update(scores: &[f64]) -> Vec<usize> {
    if scores.is_empty() {
        return Vec::new();
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > mean - std && s < mean + std)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone)]
struct SampleOffsets {
    search: Vec<(i32, i32)>,
    positive: Vec<(i32, i32)>,
    negative: Vec<(i32, i32)>,
    reach: i32,
}

impl SampleOffsets {
    fn new(cfg: &TrackerConfig) -> Self {
        let search = disk_offsets(cfg.beta, cfg.stride);
        let reach = search
            .iter()
            .map(|&(x, y)| x.abs().max(y.abs()))
            .max()
            .unwrap_or(0);
        SampleOffsets {
            search,
            positive: disk_offsets(cfg.pos_radius, 1),
            negative: annulus_offsets(Some(cfg.pi), cfg.pi + cfg.beta, 1),
            reach,
        }
    }
}

/// Full persistent state of one track.
#[derive(Debug, Clone)]
pub struct TrackerModel {
    config: TrackerConfig,
    projection: SparseProjection,
    compiled: CompiledProjection,
    patch_set: PatchSet,
    kalman: KalmanState,
    target_w: u32,
    target_h: u32,
    frame_w: usize,
    frame_h: usize,
    frame_index: usize,
    rng: ChaCha8Rng,
    offsets: SampleOffsets,
}

/// Replayable snapshot of the learned appearance model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSnapshot<'a> {
    pub format: &'static str,
    pub version: u32,
    pub frame_index: usize,
    pub config: &'a TrackerConfig,
    pub projection: &'a SparseProjection,
    pub patches: &'a PatchSet,
}

fn draw_samples(
    rng: &mut ChaCha8Rng,
    ii: &IntegralImage,
    around: Point,
    offsets: &[(i32, i32)],
    patch_w: u32,
    patch_h: u32,
    n: usize,
) -> Vec<Point> {
    let valid: Vec<Point> = offsets
        .iter()
        .map(|&(dx, dy)| around.offset(dx, dy))
        .filter(|&p| ii.contains(p, patch_w, patch_h))
        .collect();
    if valid.is_empty() {
        return valid;
    }
    (0..n).map(|_| valid[rng.random_range(0..valid.len())]).collect()
}

fn sample_stats(
    compiled: &CompiledProjection,
    ii: &IntegralImage,
    points: &[Point],
) -> Option<FeatureStats> {
    let m = compiled.m();
    let mut buf = vec![0.0; m * points.len()];
    for (chunk, &p) in buf.chunks_mut(m.max(1)).zip(points) {
        compiled.eval_into(ii, p, chunk);
    }
    FeatureStats::from_samples(m, buf.chunks(m.max(1)).take(points.len()))
}

impl TrackerModel {
    /// Starts a track on `first_frame` at `init_box`.
    pub fn init(first_frame: &Frame, init_box: BoxI, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        let (fw, fh) = (first_frame.width(), first_frame.height());
        if init_box.x < 0
            || init_box.y < 0
            || init_box.w == 0
            || init_box.h == 0
            || init_box.x as i64 + init_box.w as i64 > fw as i64
            || init_box.y as i64 + init_box.h as i64 > fh as i64
        {
            return Err(HetError::Init(format!(
                "box {init_box:?} is not inside the {fw}x{fh} frame"
            )));
        }
        let patch_w = (init_box.w as f64 * config.patch_scale).round() as u32;
        let patch_h = (init_box.h as f64 * config.patch_scale).round() as u32;
        if patch_w < 2 || patch_h < 2 {
            return Err(HetError::Init(format!(
                "box {}x{} too small for {}-scaled sub-patches",
                init_box.w, init_box.h, config.patch_scale
            )));
        }

        let projection = generate_projection(config.seed, config.m, config.z_max, patch_w, patch_h)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let ii = build_integral(first_frame);
        let compiled = CompiledProjection::for_image(&projection, &ii);
        let offsets = SampleOffsets::new(&config);
        let center = init_box.center();

        let mut patches = Vec::with_capacity(config.q_patches);
        for _ in 0..config.q_patches {
            let px = rng.random_range(0..=init_box.w - patch_w) as i32;
            let py = rng.random_range(0..=init_box.h - patch_h) as i32;
            let location = Point::new(init_box.x + px, init_box.y + py);
            let pos = draw_samples(&mut rng, &ii, location, &offsets.positive, patch_w, patch_h, config.n_update);
            let neg = draw_samples(&mut rng, &ii, location, &offsets.negative, patch_w, patch_h, config.n_update);
            let (Some(ps), Some(ns)) = (
                sample_stats(&compiled, &ii, &pos),
                sample_stats(&compiled, &ii, &neg),
            ) else {
                return Err(HetError::Init(format!(
                    "no room for negative samples around ({}, {}) in a {fw}x{fh} frame",
                    location.x, location.y
                )));
            };
            let classifier = PatchClassifier::from_stats(&ps, &ns)?;
            let score = {
                let f = compiled.compress(&ii, location)?;
                classifier.scorer().score(f.values())
            };
            patches.push(SubPatch {
                classifier,
                rel_offset: (center.0 - location.x as f64, center.1 - location.y as f64),
                location,
                score,
                weight: 0.5,
            });
        }

        Ok(TrackerModel {
            kalman: KalmanState::new(center, &config.kalman)?,
            patch_set: PatchSet::new(patches, patch_w, patch_h)?,
            config,
            projection,
            compiled,
            target_w: init_box.w,
            target_h: init_box.h,
            frame_w: fw,
            frame_h: fh,
            frame_index: 0,
            rng,
            offsets,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn projection(&self) -> &SparseProjection {
        &self.projection
    }

    pub fn patch_set(&self) -> &PatchSet {
        &self.patch_set
    }

    pub fn kalman(&self) -> &KalmanState {
        &self.kalman
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn target_size(&self) -> (u32, u32) {
        (self.target_w, self.target_h)
    }

    pub fn snapshot(&self) -> ModelSnapshot<'_> {
        ModelSnapshot {
            format: "het-model",
            version: 1,
            frame_index: self.frame_index,
            config: &self.config,
            projection: &self.projection,
            patches: &self.patch_set,
        }
    }

    /// Output for the initialization frame.
    pub fn initial_output(&self) -> TrackOutput {
        let center = self.kalman.position();
        TrackOutput {
            frame_index: 0,
            bbox: self.box_at(center),
            measurement: Measurement {
                center,
                confidence: 0.5,
            },
            diagnostics: None,
        }
    }

    /// Box of the fixed target size centered at `center`, clamped into the frame.
    fn box_at(&self, center: (f64, f64)) -> BoxI {
        let max_x = self.frame_w as i64 - self.target_w as i64;
        let max_y = self.frame_h as i64 - self.target_h as i64;
        let x = ((center.0 - self.target_w as f64 / 2.0).round() as i64).clamp(0, max_x.max(0));
        let y = ((center.1 - self.target_h as f64 / 2.0).round() as i64).clamp(0, max_y.max(0));
        BoxI::new(x as i32, y as i32, self.target_w, self.target_h)
    }

    /// Strong-classifier score of patch `idx` placed at `origin`.
    pub fn score_at(&self, frame: &Frame, idx: usize, origin: Point) -> Result<f64> {
        let ii = build_integral(frame);
        let f = self.compiled.compress(&ii, origin)?;
        Ok(self.patch_set.patches()[idx].classifier.scorer().score(f.values()))
    }

    /// Processes one frame.
    pub fn step(&mut self, frame: &Frame) -> Result<TrackOutput> {
        if frame.width() != self.frame_w || frame.height() != self.frame_h {
            return Err(HetError::Contract(format!(
                "frame is {}x{}, track was started on {}x{}",
                frame.width(),
                frame.height(),
                self.frame_w,
                self.frame_h
            )));
        }
        self.frame_index += 1;
        let ii = build_integral(frame);

        let shift = if self.config.predictive_search {
            let (px, py) = self.kalman.predicted_position(1.0);
            let (cx, cy) = self.kalman.position();
            ((px - cx).round() as i32, (py - cy).round() as i32)
        } else {
            (0, 0)
        };
        let centers: Vec<Point> = self
            .patch_set
            .patches()
            .iter()
            .map(|p| p.location.offset(shift.0, shift.1))
            .collect();

        // matching
        let reach = self.offsets.reach;
        let min = Point::new(
            centers.iter().map(|c| c.x).min().unwrap_or(0) - reach,
            centers.iter().map(|c| c.y).min().unwrap_or(0) - reach,
        );
        let max = Point::new(
            centers.iter().map(|c| c.x).max().unwrap_or(0) + reach,
            centers.iter().map(|c| c.y).max().unwrap_or(0) + reach,
        );
        let (pw, ph) = (self.patch_set.patch_w(), self.patch_set.patch_h());
        let mut map = FeatureMap::new(&self.compiled, &ii, pw, ph, min, max);
        let mut matched = Vec::with_capacity(centers.len());
        for (patch, &center) in self.patch_set.patches_mut().iter_mut().zip(&centers) {
            let scorer = patch.classifier.scorer();
            match map.best_match(&scorer, center, &self.offsets.search) {
                Some(r) => {
                    patch.location = r.best_origin;
                    patch.score = r.score;
                    matched.push(true);
                }
                None => {
                    patch.weight = 0.0;
                    matched.push(false);
                }
            }
        }
        drop(map);
        let live: Vec<usize> = (0..matched.len()).filter(|&i| matched[i]).collect();
        if live.len() < 2 {
            return Err(HetError::TrackLost {
                frame: self.frame_index,
            });
        }

        // voting
        let scores: Vec<f64> = live.iter().map(|&i| self.patch_set.patches()[i].score).collect();
        let weights = normalize_weights(&scores);
        for (&i, &w) in live.iter().zip(&weights) {
            self.patch_set.patches_mut()[i].weight = w;
        }
        let live_patches: Vec<SubPatch> = live
            .iter()
            .map(|&i| self.patch_set.patches()[i].clone())
            .collect();
        let measurement = combine_votes(&live_patches, &weights)?;

        // filtering
        self.kalman.adapt_noise(measurement.confidence)?;
        self.kalman.predict(1.0);
        self.kalman.correct(measurement.center)?;
        let final_center = self.kalman.position();

        let diag_locations: Vec<Point> = self.patch_set.patches().iter().map(|p| p.location).collect();
        let diag_votes: Vec<(f64, f64)> = self.patch_set.patches().iter().map(SubPatch::vote).collect();
        let diag_scores: Vec<f64> = self.patch_set.patches().iter().map(|p| p.score).collect();
        let diag_weights: Vec<f64> = self.patch_set.patches().iter().map(|p| p.weight).collect();

        let (selected, update_scores) = self.update_with(&ii, final_center);

        let state = self.kalman.state();
        let mut cov = [0.0; 16];
        cov.copy_from_slice(self.kalman.covariance().as_slice());
        Ok(TrackOutput {
            frame_index: self.frame_index,
            bbox: self.box_at(final_center),
            measurement,
            diagnostics: Some(FrameDiagnostics {
                frame_index: self.frame_index,
                matched,
                locations: diag_locations,
                scores: diag_scores,
                weights: diag_weights,
                votes: diag_votes,
                measurement,
                kalman_state: [state[0], state[1], state[2], state[3]],
                kalman_covariance: cov,
                update_scores,
                selected_update: selected,
            }),
        })
    }

    /// Relocates every patch relative to `final_center`, then re-trains the
    /// patches whose fresh score is within one standard deviation of the
    /// mean. Returns the indices of the updated patches.
    pub fn model_update(&mut self, frame: &Frame, final_center: (f64, f64)) -> Result<Vec<usize>> {
        if frame.width() != self.frame_w || frame.height() != self.frame_h {
            return Err(HetError::Contract("frame size differs from the track".into()));
        }
        let ii = build_integral(frame);
        Ok(self.update_with(&ii, final_center).0)
    }

    fn update_with(
        &mut self,
        ii: &IntegralImage,
        final_center: (f64, f64),
    ) -> (Vec<usize>, Vec<Option<f64>>) {
        let (pw, ph) = (self.patch_set.patch_w(), self.patch_set.patch_h());
        for p in self.patch_set.patches_mut() {
            p.location = Point::new(
                (final_center.0 - p.rel_offset.0).round() as i32,
                (final_center.1 - p.rel_offset.1).round() as i32,
            );
        }

        let mut in_frame = Vec::new();
        let mut fresh = Vec::new();
        let mut all_scores = Vec::with_capacity(self.patch_set.len());
        let mut buf = vec![0.0; self.compiled.m()];
        for (i, p) in self.patch_set.patches().iter().enumerate() {
            if ii.contains(p.location, pw, ph) {
                self.compiled.eval_into(ii, p.location, &mut buf);
                let score = p.classifier.scorer().score(&buf);
                fresh.push(score);
                in_frame.push(i);
                all_scores.push(Some(score));
            } else {
                all_scores.push(None);
            }
        }
        let selected: Vec<usize> = select_for_update(&fresh)
            .into_iter()
            .map(|k| in_frame[k])
            .collect();

        let lambda = self.config.learning_rate;
        let n = self.config.n_update;
        for &i in &selected {
            let loc = self.patch_set.patches()[i].location;
            let pos = draw_samples(&mut self.rng, ii, loc, &self.offsets.positive, pw, ph, n);
            let neg = draw_samples(&mut self.rng, ii, loc, &self.offsets.negative, pw, ph, n);
            let ps = sample_stats(&self.compiled, ii, &pos);
            let ns = sample_stats(&self.compiled, ii, &neg);
            let classifier = &mut self.patch_set.patches_mut()[i].classifier;
            for (k, wc) in classifier.weak.iter_mut().enumerate() {
                let (mut mu_pos, mut sigma_pos) = (wc.mu_pos, wc.sigma_pos);
                let (mut mu_neg, mut sigma_neg) = (wc.mu_neg, wc.sigma_neg);
                if let Some(ps) = &ps {
                    (mu_pos, sigma_pos) = blend_gaussian(mu_pos, sigma_pos, ps.mean[k], ps.std[k], lambda);
                }
                if let Some(ns) = &ns {
                    (mu_neg, sigma_neg) = blend_gaussian(mu_neg, sigma_neg, ns.mean[k], ns.std[k], lambda);
                }
                *wc = WeakClassifier::new(mu_pos, sigma_pos, mu_neg, sigma_neg);
            }
        }
        (selected, all_scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // 4x4 blocks keep rectangle sums informative
        let blocks: Vec<u8> = (0..(w / 4 + 1) * (h / 4 + 1)).map(|_| rng.random()).collect();
        let bw = w / 4 + 1;
        let data = (0..w * h)
            .map(|i| blocks[(i / w) / 4 * bw + (i % w) / 4])
            .collect();
        Frame::new(w, h, data).unwrap()
    }

    fn small_config() -> TrackerConfig {
        TrackerConfig {
            m: 40,
            n_update: 20,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn parse_box() {
        assert_eq!(BoxI::parse("1, 2,30,40").unwrap(), BoxI::new(1, 2, 30, 40));
        for bad in ["1,2,3", "a,b,c,d", "1,2,0,4", "1,2,3,4,5", ""] {
            assert!(BoxI::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn blend_closed_form() {
        let (mu, sigma) = blend_gaussian(0.0, 1.0, 2.0, 1.0, 0.85);
        assert!((mu - 0.3).abs() < 1e-12);
        assert!((sigma - 1.51f64.sqrt()).abs() < 1e-12);
        assert!((sigma - 1.2288).abs() < 1e-4);
        for (m, s) in [(3.5, 2.25), (-1e3, 17.0), (0.1, 1.0)] {
            assert_eq!(blend_gaussian(m, s, 99.0, 0.5, 1.0), (m, s));
        }
    }

    #[test]
    fn selection_open_interval() {
        assert!(select_for_update(&[4.0; 6]).is_empty());
        // mean 0, std sqrt(2/3)*... : extremes excluded, middle kept
        assert_eq!(select_for_update(&[-1.0, 0.0, 1.0]), vec![1]);
        let s = [1.0, 5.0, 2.0, 9.0, 3.0];
        let mean = 4.0;
        let std = (s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0).sqrt();
        for i in select_for_update(&s) {
            assert!(s[i] > mean - std && s[i] < mean + std);
        }
    }

    #[test]
    fn init_geometry_and_determinism() {
        let f = textured_frame(160, 120, 1);
        let b = BoxI::new(50, 40, 48, 36);
        let a = TrackerModel::init(&f, b, small_config()).unwrap();
        assert_eq!((a.patch_set().patch_w(), a.patch_set().patch_h()), (36, 27));
        assert_eq!(a.patch_set().len(), 11);
        for p in a.patch_set().patches() {
            assert!(p.location.x >= 50 && p.location.x + 36 <= 98);
            assert!(p.location.y >= 40 && p.location.y + 27 <= 76);
            let v = p.vote();
            assert_eq!(v, (74.0, 58.0));
        }
        let b2 = TrackerModel::init(&f, b, small_config()).unwrap();
        assert_eq!(a.patch_set(), b2.patch_set());
        assert_eq!(a.projection(), b2.projection());
        assert_eq!(a.kalman().position(), (74.0, 58.0));
    }

    #[test]
    fn init_rejects_bad_boxes() {
        let f = textured_frame(100, 80, 1);
        let cfg = small_config();
        assert!(matches!(TrackerModel::init(&f, BoxI::new(70, 10, 48, 36), cfg.clone()), Err(HetError::Init(_))));
        assert!(matches!(TrackerModel::init(&f, BoxI::new(-1, 10, 20, 20), cfg.clone()), Err(HetError::Init(_))));
        assert!(matches!(TrackerModel::init(&f, BoxI::new(10, 10, 2, 1), cfg), Err(HetError::Init(_))));
    }

    #[test]
    fn trained_patch_prefers_its_own_location() {
        let f = textured_frame(200, 160, 3);
        let b = BoxI::new(80, 60, 48, 36);
        let model = TrackerModel::init(&f, b, small_config()).unwrap();
        let pi = model.config().pi as i32;
        for (i, p) in model.patch_set().patches().iter().enumerate() {
            let own = model.score_at(&f, i, p.location).unwrap();
            let far = model.score_at(&f, i, p.location.offset(pi, 0)).unwrap();
            assert!(own > far, "patch {i}: {own} <= {far}");
        }
    }

    #[test]
    fn static_scene_and_box_size() {
        let f = textured_frame(160, 120, 9);
        let b = BoxI::new(50, 40, 48, 36);
        let mut model = TrackerModel::init(&f, b, small_config()).unwrap();
        for _ in 0..15 {
            let out = model.step(&f).unwrap();
            assert_eq!((out.bbox.w, out.bbox.h), (48, 36));
            let (cx, cy) = out.bbox.center();
            assert!((cx - 74.0).abs() <= 1.0 && (cy - 58.0).abs() <= 1.0, "{out:?}");
            let d = out.diagnostics.unwrap();
            assert!(d.matched.iter().all(|&m| m));
        }
    }

    #[test]
    fn update_relocates_and_skips_when_scores_equal() {
        let f = Frame::filled(160, 120, 77).unwrap();
        let b = BoxI::new(50, 40, 48, 36);
        let mut model = TrackerModel::init(&f, b, small_config()).unwrap();
        let before: Vec<PatchClassifier> =
            model.patch_set().patches().iter().map(|p| p.classifier.clone()).collect();
        let selected = model.model_update(&f, (80.0, 61.0)).unwrap();
        // a uniform frame gives every patch the same fresh score
        assert!(selected.is_empty());
        for (p, c) in model.patch_set().patches().iter().zip(&before) {
            assert_eq!(&p.classifier, c);
            assert_eq!(p.vote(), (80.0, 61.0));
        }
    }

    #[test]
    fn wrong_frame_size_is_rejected() {
        let f = textured_frame(160, 120, 1);
        let mut model = TrackerModel::init(&f, BoxI::new(50, 40, 48, 36), small_config()).unwrap();
        let g = textured_frame(100, 120, 1);
        assert!(matches!(model.step(&g), Err(HetError::Contract(_))));
    }

    #[test]
    fn track_lost_when_patches_cannot_be_placed() {
        let f = textured_frame(160, 120, 1);
        let mut model = TrackerModel::init(&f, BoxI::new(50, 40, 48, 36), small_config()).unwrap();
        // drive every patch far outside the frame
        model.model_update(&f, (1000.0, 1000.0)).unwrap();
        assert!(matches!(model.step(&f), Err(HetError::TrackLost { frame: 1 })));
    }
}
