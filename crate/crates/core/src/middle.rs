//! Middle ensemble layer: sub-patch votes for the target center, weighted by
//! normalized match scores.

use serde::{Deserialize, Serialize};

use crate::bottom::PatchClassifier;
use crate::error::{HetError, Result};
use crate::raster::Point;

pub const MIN_PATCHES: usize = 11;
pub const WEIGHT_MIN: f64 = 0.1;
pub const WEIGHT_MAX: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubPatch {
    pub classifier: PatchClassifier,
    /// Target center minus patch upper-left corner, fixed at initialization.
    pub rel_offset: (f64, f64),
    /// Upper-left corner of the most recent match.
    pub location: Point,
    pub score: f64,
    pub weight: f64,
}

impl SubPatch {
    /// The target-center hypothesis this patch casts.
    pub fn vote(&self) -> (f64, f64) {
        (
            self.location.x as f64 + self.rel_offset.0,
            self.location.y as f64 + self.rel_offset.1,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSet {
    patches: Vec<SubPatch>,
    patch_w: u32,
    patch_h: u32,
}

impl PatchSet {
    pub fn new(patches: Vec<SubPatch>, patch_w: u32, patch_h: u32) -> Result<Self> {
        if patches.len() < MIN_PATCHES {
            return Err(HetError::Config(format!(
                "need at least {MIN_PATCHES} sub-patches, got {}",
                patches.len()
            )));
        }
        Ok(PatchSet {
            patches,
            patch_w,
            patch_h,
        })
    }

    pub fn patches(&self) -> &[SubPatch] {
        &self.patches
    }

    pub fn patches_mut(&mut self) -> &mut [SubPatch] {
        &mut self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patch_w(&self) -> u32 {
        self.patch_w
    }

    pub fn patch_h(&self) -> u32 {
        self.patch_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub center: (f64, f64),
    /// Mean normalized weight.
    pub confidence: f64,
}

/// Z-scores the match scores and maps the result affinely onto `[0.1, 0.9]`.
/// A vector with no spread maps to 0.5 everywhere.
pub fn normalize_weights(scores: &[f64]) -> Vec<f64> {
    let mid = 0.5 * (WEIGHT_MIN + WEIGHT_MAX);
    let n = scores.len();
    if n < 2 {
        return vec![mid; n];
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std <= 0.0 || !std.is_finite() {
        return vec![mid; n];
    }
    let z: Vec<f64> = scores.iter().map(|s| (s - mean) / std).collect();
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 || !span.is_finite() {
        return vec![mid; n];
    }
    z.iter()
        .map(|v| {
            let w = WEIGHT_MIN + (WEIGHT_MAX - WEIGHT_MIN) * (v - lo) / span;
            w.clamp(WEIGHT_MIN, WEIGHT_MAX)
        })
        .collect()
}

/// Weighted mean of center hypotheses.
pub fn combine_hypotheses(votes: &[(f64, f64)], weights: &[f64]) -> Result<Measurement> {
    if votes.len() != weights.len() || votes.is_empty() {
        return Err(HetError::Contract(format!(
            "{} votes but {} weights",
            votes.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total < 1.0 {
        return Err(HetError::Config(format!(
            "total vote weight {total} is below 1"
        )));
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (&(x, y), &w) in votes.iter().zip(weights) {
        sx += w * x;
        sy += w * y;
    }
    Ok(Measurement {
        center: (sx / total, sy / total),
        confidence: total / weights.len() as f64,
    })
}

/// Combines the votes of freshly matched sub-patches.
pub fn combine_votes(patches: &[SubPatch], weights: &[f64]) -> Result<Measurement> {
    let votes: Vec<(f64, f64)> = patches.iter().map(SubPatch::vote).collect();
    combine_hypotheses(&votes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn patch(location: Point, rel: (f64, f64)) -> SubPatch {
        SubPatch {
            classifier: PatchClassifier::neutral(1),
            rel_offset: rel,
            location,
            score: 0.0,
            weight: 0.5,
        }
    }

    #[test]
    fn normalize_examples() {
        let w = normalize_weights(&[1.0, 2.0, 3.0]);
        for (a, b) in w.iter().zip([0.1, 0.5, 0.9]) {
            assert!((a - b).abs() < 1e-12, "{w:?}");
        }
        assert_eq!(normalize_weights(&[5.0; 4]), vec![0.5; 4]);
    }

    #[test]
    fn patch_set_requires_eleven() {
        let ps: Vec<SubPatch> = (0..10).map(|i| patch(Point::new(i, 0), (0.0, 0.0))).collect();
        assert!(PatchSet::new(ps.clone(), 4, 4).is_err());
        let mut ps = ps;
        ps.push(patch(Point::new(0, 0), (0.0, 0.0)));
        assert_eq!(PatchSet::new(ps, 4, 4).unwrap().len(), 11);
    }

    #[test]
    fn combine_examples() {
        let m = combine_hypotheses(&[(0.0, 0.0), (10.0, 0.0)], &[0.9, 0.1]).unwrap();
        assert!((m.center.0 - 1.0).abs() < 1e-12 && m.center.1 == 0.0);
        assert!((m.confidence - 0.5).abs() < 1e-12);

        let ps = vec![
            patch(Point::new(3, 4), (10.0, 6.0)),
            patch(Point::new(8, 1), (5.0, 9.0)),
            patch(Point::new(-2, 0), (15.0, 10.0)),
        ];
        let m = combine_votes(&ps, &[0.1, 0.9, 0.4]).unwrap();
        assert!((m.center.0 - 13.0).abs() < 1e-12);
        assert!((m.center.1 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn low_total_weight_is_rejected() {
        let r = combine_hypotheses(&[(0.0, 0.0), (1.0, 1.0)], &[0.1, 0.2]);
        assert!(matches!(r, Err(HetError::Config(_))));
        assert!(combine_hypotheses(&[(0.0, 0.0)], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn monte_carlo_combined_error_is_bounded() {
        // reduced-size version of the acceptance check
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = 11;
        let sigmas: Vec<f64> = (0..q).map(|_| rng.random_range(1.0..5.0)).collect();
        let weights: Vec<f64> = (0..q).map(|_| rng.random_range(0.1..0.9)).collect();
        let total: f64 = weights.iter().sum();
        let trials = 20_000;
        let mut err_com = 0.0;
        let mut err_ind = vec![0.0; q];
        for _ in 0..trials {
            let votes: Vec<(f64, f64)> = sigmas
                .iter()
                .map(|&s| {
                    let n = Normal::new(0.0, s).unwrap();
                    (n.sample(&mut rng), 0.0)
                })
                .collect();
            for (e, v) in err_ind.iter_mut().zip(&votes) {
                *e += v.0 * v.0;
            }
            let m = combine_hypotheses(&votes, &weights).unwrap();
            err_com += m.center.0 * m.center.0;
        }
        let e_com = err_com / trials as f64;
        let e_av: f64 = weights
            .iter()
            .zip(&err_ind)
            .map(|(w, e)| w * e / trials as f64)
            .sum::<f64>()
            / total;
        assert!(e_com <= e_av / total * 1.05, "{e_com} vs {}", e_av / total);
    }

    proptest::proptest! {
        #[test]
        fn weights_span_range(scores in proptest::collection::vec(-1e6f64..1e6, 2..30)) {
            let w = normalize_weights(&scores);
            let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let distinct = scores.iter().any(|s| *s != scores[0]);
            if distinct {
                proptest::prop_assert!((lo - 0.1).abs() < 1e-9 && (hi - 0.9).abs() < 1e-9);
            } else {
                proptest::prop_assert!(w.iter().all(|&v| v == 0.5));
            }
        }

        #[test]
        fn translation_equivariant_and_in_hull(
            pts in proptest::collection::vec((-100i32..100, -100i32..100), 11..15),
            tx in -50i32..50, ty in -50i32..50, seed in 0u64..100,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ps: Vec<SubPatch> = pts.iter().map(|&(x, y)| patch(Point::new(x, y), (3.5, -2.0))).collect();
            let weights: Vec<f64> = ps.iter().map(|_| rng.random_range(0.1..0.9)).collect();
            let a = combine_votes(&ps, &weights).unwrap();
            let shifted: Vec<SubPatch> = ps.iter().map(|p| {
                let mut p = p.clone();
                p.location = p.location.offset(tx, ty);
                p
            }).collect();
            let b = combine_votes(&shifted, &weights).unwrap();
            proptest::prop_assert!((b.center.0 - a.center.0 - tx as f64).abs() < 1e-9);
            proptest::prop_assert!((b.center.1 - a.center.1 - ty as f64).abs() < 1e-9);
            // bounding box of the votes contains the combined center
            let xs = ps.iter().map(|p| p.vote().0);
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            proptest::prop_assert!(a.center.0 >= lo - 1e-9 && a.center.0 <= hi + 1e-9);
        }
    }
}
