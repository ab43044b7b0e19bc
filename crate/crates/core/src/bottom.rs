//! Bottom ensemble layer: Gaussian naive-Bayes weak classifiers over the
//! compressed features, their sum as a per-patch strong classifier, and the
//! dense local search that matches one sub-patch inside its radius.

use serde::{Deserialize, Serialize};

use crate::error::{HetError, Result};
use crate::projection::{CompiledProjection, CompressedFeature, SparseProjection};
use crate::raster::{IntegralImage, Point};

/// Lower bound applied to every class standard deviation.
pub const SIGMA_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakClassifier {
    pub mu_pos: f64,
    pub sigma_pos: f64,
    pub mu_neg: f64,
    pub sigma_neg: f64,
}

impl WeakClassifier {
    /// Builds a classifier, flooring both standard deviations at [`SIGMA_FLOOR`].
    pub fn new(mu_pos: f64, sigma_pos: f64, mu_neg: f64, sigma_neg: f64) -> Self {
        WeakClassifier {
            mu_pos,
            sigma_pos: floor_sigma(sigma_pos),
            mu_neg,
            sigma_neg: floor_sigma(sigma_neg),
        }
    }

    pub fn coefficients(&self) -> ScoreCoeffs {
        ScoreCoeffs {
            mu_pos: self.mu_pos,
            half_prec_pos: 0.5 / (self.sigma_pos * self.sigma_pos),
            mu_neg: self.mu_neg,
            half_prec_neg: 0.5 / (self.sigma_neg * self.sigma_neg),
            log_sigma_ratio: (self.sigma_neg / self.sigma_pos).ln(),
        }
    }
}

fn floor_sigma(sigma: f64) -> f64 {
    if sigma.is_finite() {
        sigma.max(SIGMA_FLOOR)
    } else {
        SIGMA_FLOOR
    }
}

/// Precomputed form of one weak classifier's log-likelihood ratio.
#[derive(Debug, Clone, Copy)]
pub struct ScoreCoeffs {
    mu_pos: f64,
    half_prec_pos: f64,
    mu_neg: f64,
    half_prec_neg: f64,
    log_sigma_ratio: f64,
}

impl ScoreCoeffs {
    #[inline]
    pub fn score(&self, l: f64) -> f64 {
        let dp = l - self.mu_pos;
        let dn = l - self.mu_neg;
        self.log_sigma_ratio - dp * dp * self.half_prec_pos + dn * dn * self.half_prec_neg
    }
}

/// log N(l; mu+, sigma+) - log N(l; mu-, sigma-), equal class priors.
pub fn weak_score(wc: &WeakClassifier, l: f64) -> f64 {
    wc.coefficients().score(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchClassifier {
    pub weak: Vec<WeakClassifier>,
}

impl PatchClassifier {
    /// A bank whose every classifier scores 0.
    pub fn neutral(m: usize) -> Self {
        PatchClassifier {
            weak: vec![WeakClassifier::new(0.0, 1.0, 0.0, 1.0); m],
        }
    }

    pub fn m(&self) -> usize {
        self.weak.len()
    }

    /// Direct assignment from sample statistics (first-frame bootstrap).
    pub fn from_stats(pos: &FeatureStats, neg: &FeatureStats) -> Result<Self> {
        if pos.mean.len() != neg.mean.len() {
            return Err(HetError::Contract("class statistics differ in length".into()));
        }
        let weak = (0..pos.mean.len())
            .map(|i| WeakClassifier::new(pos.mean[i], pos.std[i], neg.mean[i], neg.std[i]))
            .collect();
        Ok(PatchClassifier { weak })
    }

    pub fn scorer(&self) -> Scorer {
        Scorer {
            coeffs: self.weak.iter().map(WeakClassifier::coefficients).collect(),
        }
    }
}

/// Precomputed strong classifier used in the search loops.
#[derive(Debug, Clone)]
pub struct Scorer {
    coeffs: Vec<ScoreCoeffs>,
}

impl Scorer {
    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn score(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.coeffs.len());
        self.coeffs
            .iter()
            .zip(features)
            .map(|(c, &l)| c.score(l))
            .sum()
    }
}

/// Sum of the weak classifier log-ratios.
pub fn strong_score(pc: &PatchClassifier, feat: &CompressedFeature) -> Result<f64> {
    if feat.len() != pc.m() {
        return Err(HetError::Contract(format!(
            "feature has {} values, classifier bank has {}",
            feat.len(),
            pc.m()
        )));
    }
    Ok(pc.scorer().score(feat.values()))
}

/// Per-feature sample mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Statistics over `samples`, each a feature vector of length `m`.
    pub fn from_samples<'a>(m: usize, samples: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut sum = vec![0.0; m];
        let mut sum_sq = vec![0.0; m];
        let mut n = 0usize;
        for s in samples {
            debug_assert_eq!(s.len(), m);
            for ((a, b), &v) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(s) {
                *a += v;
                *b += v * v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let n = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, mu)| (sq / n - mu * mu).max(0.0).sqrt())
            .collect();
        Some(FeatureStats { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub best_origin: Point,
    pub best_feature: CompressedFeature,
    pub score: f64,
}

/// Offsets `(dx, dy)` on the stride grid with `dx^2 + dy^2 < beta^2`, in
/// row-major scan order (dy outer, dx inner, both ascending).
pub fn disk_offsets(beta: f64, stride: u32) -> Vec<(i32, i32)> {
    annulus_offsets(None, beta, stride)
}

/// Offsets on the stride grid with `inner < |d| <= outer` when `inner` is
/// given, or `|d| < outer` otherwise. Row-major order.
pub fn annulus_offsets(inner: Option<f64>, outer: f64, stride: u32) -> Vec<(i32, i32)> {
    if stride == 0 || outer <= 0.0 || !outer.is_finite() {
        return Vec::new();
    }
    let s = stride as i32;
    let steps = (outer / stride as f64).ceil() as i32;
    let mut out = Vec::new();
    for ky in -steps..=steps {
        for kx in -steps..=steps {
            let (dx, dy) = (kx * s, ky * s);
            let d2 = (dx as f64).powi(2) + (dy as f64).powi(2);
            let keep = match inner {
                None => d2 < outer * outer,
                Some(r) => d2 > r * r && d2 <= outer * outer,
            };
            if keep {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Searches every in-bounds offset within `beta` of `search_center` and
/// returns the highest-scoring patch position. Ties keep the first
/// candidate in scan order.
pub fn match_patch(
    pc: &PatchClassifier,
    proj: &SparseProjection,
    ii: &IntegralImage,
    search_center: Point,
    beta: f64,
    stride: u32,
) -> Result<MatchResult> {
    if pc.m() != proj.m() {
        return Err(HetError::Contract(format!(
            "classifier bank has {} entries, projection has {} rows",
            pc.m(),
            proj.m()
        )));
    }
    if stride == 0 {
        return Err(HetError::Contract("search stride must be positive".into()));
    }
    let compiled = CompiledProjection::for_image(proj, ii);
    let scorer = pc.scorer();
    let mut buf = vec![0.0; proj.m()];
    let mut best: Option<(Point, f64, Vec<f64>)> = None;
    for (dx, dy) in disk_offsets(beta, stride) {
        let origin = search_center.offset(dx, dy);
        if !ii.contains(origin, proj.patch_w(), proj.patch_h()) {
            continue;
        }
        compiled.eval_into(ii, origin, &mut buf);
        let score = scorer.score(&buf);
        if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
            best = Some((origin, score, buf.clone()));
        }
    }
    let (best_origin, score, values) = best.ok_or(HetError::SearchDomain {
        x: search_center.x,
        y: search_center.y,
    })?;
    Ok(MatchResult {
        best_origin,
        best_feature: CompressedFeature(values),
        score,
    })
}

/// Lazily filled cache of compressed features over a rectangular range of
/// patch origins. Sub-patches of one target have heavily overlapping search
/// disks, so each origin is compressed at most once per frame.
pub struct FeatureMap<'a> {
    compiled: &'a CompiledProjection,
    ii: &'a IntegralImage,
    patch_w: u32,
    patch_h: u32,
    x0: i32,
    y0: i32,
    cols: usize,
    rows: usize,
    filled: Vec<bool>,
    values: Vec<f64>,
}

impl<'a> FeatureMap<'a> {
    /// Covers origins in `[min.x, max.x] x [min.y, max.y]`, clipped to the
    /// positions where a patch fits in the image.
    pub fn new(
        compiled: &'a CompiledProjection,
        ii: &'a IntegralImage,
        patch_w: u32,
        patch_h: u32,
        min: Point,
        max: Point,
    ) -> Self {
        let max_x = ii.width() as i32 - patch_w as i32;
        let max_y = ii.height() as i32 - patch_h as i32;
        let x0 = min.x.max(0);
        let y0 = min.y.max(0);
        let x1 = max.x.min(max_x);
        let y1 = max.y.min(max_y);
        let cols = if x1 >= x0 { (x1 - x0 + 1) as usize } else { 0 };
        let rows = if y1 >= y0 { (y1 - y0 + 1) as usize } else { 0 };
        FeatureMap {
            compiled,
            ii,
            patch_w,
            patch_h,
            x0,
            y0,
            cols,
            rows,
            filled: vec![false; cols * rows],
            values: vec![0.0; cols * rows * compiled.m()],
        }
    }

    pub fn m(&self) -> usize {
        self.compiled.m()
    }

    fn slot(&self, p: Point) -> Option<usize> {
        let cx = p.x - self.x0;
        let cy = p.y - self.y0;
        if cx < 0 || cy < 0 || cx as usize >= self.cols || cy as usize >= self.rows {
            return None;
        }
        Some(cy as usize * self.cols + cx as usize)
    }

    /// Feature at origin `p`, or `None` when the patch does not fit in the
    /// image (or lies outside the covered range).
    pub fn feature(&mut self, p: Point) -> Option<&[f64]> {
        let slot = self.slot(p)?;
        if !self.ii.contains(p, self.patch_w, self.patch_h) {
            return None;
        }
        let m = self.compiled.m();
        let range = slot * m..(slot + 1) * m;
        if !self.filled[slot] {
            self.compiled.eval_into(self.ii, p, &mut self.values[range.clone()]);
            self.filled[slot] = true;
        }
        Some(&self.values[range])
    }

    /// Same contract as [`match_patch`], reading features from the cache.
    pub fn best_match(
        &mut self,
        scorer: &Scorer,
        center: Point,
        offsets: &[(i32, i32)],
    ) -> Option<MatchResult> {
        let mut best: Option<(Point, f64)> = None;
        for &(dx, dy) in offsets {
            let origin = center.offset(dx, dy);
            let Some(feat) = self.feature(origin) else {
                continue;
            };
            let score = scorer.score(feat);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((origin, score));
            }
        }
        let (best_origin, score) = best?;
        let values = self.feature(best_origin)?.to_vec();
        Some(MatchResult {
            best_origin,
            best_feature: CompressedFeature(values),
            score,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::generate_projection;
    use crate::raster::{build_integral, Frame};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_normal(x: f64, mu: f64, sigma: f64) -> f64 {
        -0.5 * ((x - mu) / sigma).powi(2) - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    #[test]
    fn weak_score_examples() {
        let same = WeakClassifier::new(3.0, 2.0, 3.0, 2.0);
        for l in [-10.0, 0.0, 3.0, 1e4] {
            assert_eq!(weak_score(&same, l), 0.0);
        }
        let wc = WeakClassifier::new(1.0, 1.0, -1.0, 1.0);
        assert_eq!(weak_score(&wc, 0.0), 0.0);
        assert!((weak_score(&wc, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weak_score_matches_log_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let wc = WeakClassifier::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(1.0..20.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(1.0..20.0),
            );
            let l = rng.random_range(-100.0..100.0);
            let direct = log_normal(l, wc.mu_pos, wc.sigma_pos) - log_normal(l, wc.mu_neg, wc.sigma_neg);
            assert!((weak_score(&wc, l) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn weak_score_monotone_when_pos_mean_higher() {
        let wc = WeakClassifier::new(4.0, 3.0, -2.0, 3.0);
        let mut prev = f64::NEG_INFINITY;
        for i in -100..100 {
            let s = weak_score(&wc, i as f64 * 0.5);
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn sigma_is_floored() {
        let wc = WeakClassifier::new(0.0, 0.0, 0.0, f64::NAN);
        assert_eq!(wc.sigma_pos, SIGMA_FLOOR);
        assert_eq!(wc.sigma_neg, SIGMA_FLOOR);
    }

    #[test]
    fn strong_score_additivity() {
        // l=1 under (1,1,-1,1) scores 2.0; l=1 under (0,1,1,1) scores -0.5
        let pc = PatchClassifier {
            weak: vec![
                WeakClassifier::new(1.0, 1.0, -1.0, 1.0),
                WeakClassifier::new(0.0, 1.0, 1.0, 1.0),
            ],
        };
        let s = strong_score(&pc, &CompressedFeature(vec![1.0, 1.0])).unwrap();
        assert!((s - 1.5).abs() < 1e-12);
        assert_eq!(strong_score(&PatchClassifier::neutral(4), &CompressedFeature(vec![9.0; 4])).unwrap(), 0.0);
        assert!(matches!(
            strong_score(&pc, &CompressedFeature(vec![1.0])),
            Err(HetError::Contract(_))
        ));
    }

    #[test]
    fn feature_stats_population() {
        let samples: Vec<Vec<f64>> = vec![vec![1.0, 10.0], vec![3.0, 10.0]];
        let st = FeatureStats::from_samples(2, samples.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(st.mean, vec![2.0, 10.0]);
        assert_eq!(st.std, vec![1.0, 0.0]);
        assert!(FeatureStats::from_samples(2, std::iter::empty()).is_none());
    }

    #[test]
    fn disk_offsets_shape() {
        assert_eq!(disk_offsets(1.0, 1), vec![(0, 0)]);
        let d = disk_offsets(2.0, 1);
        assert_eq!(d.len(), 9);
        assert_eq!(d[0], (-1, -1));
        // about pi * 20^2 candidates at the default radius
        let n = disk_offsets(20.0, 1).len();
        assert!((1200..1300).contains(&n), "{n}");
        assert!(disk_offsets(20.0, 2).iter().all(|(x, y)| x % 2 == 0 && y % 2 == 0));
        let ring = annulus_offsets(Some(40.0), 60.0, 1);
        assert!(ring.iter().all(|&(x, y)| {
            let d = ((x * x + y * y) as f64).sqrt();
            d > 40.0 && d <= 60.0
        }));
    }

    fn textured(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn degenerate_radius_returns_center() {
        let f = textured(20, 20, 1);
        let ii = build_integral(&f);
        let proj = generate_projection(1, 10, 4, 5, 5).unwrap();
        let r = match_patch(&PatchClassifier::neutral(10), &proj, &ii, Point::new(7, 8), 1.0, 1).unwrap();
        assert_eq!(r.best_origin, Point::new(7, 8));
    }

    #[test]
    fn uniform_frame_ties_go_to_first_candidate() {
        let ii = build_integral(&Frame::filled(60, 60, 100).unwrap());
        let proj = generate_projection(2, 10, 4, 8, 8).unwrap();
        let pc = PatchClassifier {
            weak: (0..10).map(|i| WeakClassifier::new(i as f64, 2.0, -(i as f64), 3.0)).collect(),
        };
        let center = Point::new(25, 25);
        let r = match_patch(&pc, &proj, &ii, center, 5.0, 1).unwrap();
        let (dx, dy) = disk_offsets(5.0, 1)[0];
        assert_eq!(r.best_origin, center.offset(dx, dy));
    }

    #[test]
    fn no_candidate_is_search_domain_error() {
        let ii = build_integral(&Frame::filled(10, 10, 0).unwrap());
        let proj = generate_projection(2, 4, 4, 8, 8).unwrap();
        let err = match_patch(&PatchClassifier::neutral(4), &proj, &ii, Point::new(30, 30), 3.0, 1);
        assert!(matches!(err, Err(HetError::SearchDomain { .. })));
    }

    #[test]
    fn planted_patch_is_found_and_matches_brute_force() {
        let bg = textured(64, 64, 5);
        let target = textured(10, 8, 6);
        let proj = generate_projection(3, 60, 4, 10, 8).unwrap();
        // train on the target alone against background positions
        let mut train = bg.clone();
        let planted = Point::new(30, 28);
        for y in 0..8 {
            for x in 0..10 {
                train.set(planted.x as usize + x, planted.y as usize + y, target.get(x, y));
            }
        }
        let ii = build_integral(&train);
        let compiled = CompiledProjection::for_image(&proj, &ii);
        let pos = compiled.compress(&ii, planted).unwrap();
        let negs: Vec<CompressedFeature> = [(5, 5), (45, 5), (5, 45), (45, 45), (20, 50)]
            .iter()
            .map(|&(x, y)| compiled.compress(&ii, Point::new(x, y)).unwrap())
            .collect();
        let ps = FeatureStats::from_samples(60, [pos.values()]).unwrap();
        let ns = FeatureStats::from_samples(60, negs.iter().map(|f| f.values())).unwrap();
        let pc = PatchClassifier::from_stats(&ps, &ns).unwrap();

        let center = Point::new(34, 25);
        let r = match_patch(&pc, &proj, &ii, center, 8.0, 1).unwrap();
        assert_eq!(r.best_origin, planted);

        // brute force over every candidate with the public per-step operations
        let mut best = f64::NEG_INFINITY;
        for (dx, dy) in disk_offsets(8.0, 1) {
            let o = center.offset(dx, dy);
            if let Ok(f) = crate::projection::compress(&proj, &ii, o) {
                best = best.max(strong_score(&pc, &f).unwrap());
            }
        }
        assert_eq!(r.score, best);
    }

    #[test]
    fn feature_map_agrees_with_match_patch() {
        let f = textured(50, 40, 8);
        let ii = build_integral(&f);
        let proj = generate_projection(4, 30, 4, 9, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pc = PatchClassifier {
            weak: (0..30)
                .map(|_| {
                    WeakClassifier::new(
                        rng.random_range(-500.0..500.0),
                        rng.random_range(10.0..200.0),
                        rng.random_range(-500.0..500.0),
                        rng.random_range(10.0..200.0),
                    )
                })
                .collect(),
        };
        let compiled = CompiledProjection::for_image(&proj, &ii);
        let mut map = FeatureMap::new(&compiled, &ii, 9, 7, Point::new(-20, -20), Point::new(80, 80));
        let offsets = disk_offsets(12.0, 1);
        for center in [Point::new(0, 0), Point::new(20, 16), Point::new(41, 33)] {
            let a = match_patch(&pc, &proj, &ii, center, 12.0, 1).unwrap();
            let b = map.best_match(&pc.scorer(), center, &offsets).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest::proptest! {
        #[test]
        fn strong_score_permutation_invariant(seed in 0u64..500, rot in 0usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 8;
            let weak: Vec<WeakClassifier> = (0..m).map(|_| WeakClassifier::new(
                rng.random_range(-5.0..5.0), rng.random_range(1.0..4.0),
                rng.random_range(-5.0..5.0), rng.random_range(1.0..4.0))).collect();
            let feat: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
            let a = strong_score(&PatchClassifier { weak: weak.clone() }, &CompressedFeature(feat.clone())).unwrap();
            let mut w2 = weak; w2.rotate_left(rot);
            let mut f2 = feat; f2.rotate_left(rot);
            let b = strong_score(&PatchClassifier { weak: w2 }, &CompressedFeature(f2)).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
