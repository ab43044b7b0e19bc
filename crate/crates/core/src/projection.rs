//! Sparse random measurement matrix and compressed feature extraction.
//!
//! Each row of the matrix is a short list of signed rectangles inside the
//! patch template. The high-dimensional multiscale rectangle-filter vector is
//! never built: a row's output is the weighted sum of its rectangles' pixel
//! sums, read from the integral image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HetError, Result};
use crate::raster::{IntegralImage, Point, Rect};

pub const PROJECTION_FORMAT_VERSION: u32 = 1;

const MIN_RECT_SIDE: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEntry {
    pub rect: Rect,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub entries: Vec<ProjectionEntry>,
}

/// The fixed measurement matrix, one [`ProjectionRow`] per compressed feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseProjection {
    rows: Vec<ProjectionRow>,
    patch_w: u32,
    patch_h: u32,
    seed: u64,
}

/// An m-dimensional compressed feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedFeature(pub Vec<f64>);

impl CompressedFeature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl SparseProjection {
    /// Builds a projection from explicit rows, checking every invariant.
    pub fn from_rows(rows: Vec<ProjectionRow>, patch_w: u32, patch_h: u32, seed: u64) -> Result<Self> {
        let proj = SparseProjection {
            rows,
            patch_w,
            patch_h,
            seed,
        };
        proj.validate()?;
        Ok(proj)
    }

    pub fn rows(&self) -> &[ProjectionRow] {
        &self.rows
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn patch_w(&self) -> u32 {
        self.patch_w
    }

    pub fn patch_h(&self) -> u32 {
        self.patch_h
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(HetError::Config("projection has no rows".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.entries.is_empty() {
                return Err(HetError::Config(format!("row {i} is empty")));
            }
            for e in &row.entries {
                if e.rect.w == 0 || e.rect.h == 0 || !e.rect.fits_in(self.patch_w, self.patch_h) {
                    return Err(HetError::Config(format!(
                        "row {i}: rect {:?} outside {}x{} patch",
                        e.rect, self.patch_w, self.patch_h
                    )));
                }
                if !e.weight.is_finite() {
                    return Err(HetError::Config(format!("row {i}: non-finite weight")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let blob = ProjectionBlobRef {
            format: "het-projection",
            version: PROJECTION_FORMAT_VERSION,
            projection: self,
        };
        serde_json::to_string(&blob).expect("projection serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let blob: ProjectionBlob =
            serde_json::from_str(text).map_err(|e| HetError::Parse(e.to_string()))?;
        if blob.format != "het-projection" || blob.version != PROJECTION_FORMAT_VERSION {
            return Err(HetError::Parse(format!(
                "unsupported projection blob {} v{}",
                blob.format, blob.version
            )));
        }
        blob.projection.validate()?;
        Ok(blob.projection)
    }
}

#[derive(Serialize)]
struct ProjectionBlobRef<'a> {
    format: &'a str,
    version: u32,
    projection: &'a SparseProjection,
}

#[derive(Deserialize)]
struct ProjectionBlob {
    format: String,
    version: u32,
    projection: SparseProjection,
}

/// Draws the measurement matrix.
///
/// Every row gets `k ~ U{2..=z_max}` rectangles with log-uniform side
/// lengths between 2 and the patch size, uniform position, and weight
/// `±1/sqrt(k)` with an equiprobable sign.
pub fn generate_projection(
    seed: u64,
    m: usize,
    z_max: usize,
    patch_w: u32,
    patch_h: u32,
) -> Result<SparseProjection> {
    if m == 0 {
        return Err(HetError::Config("row count m must be at least 1".into()));
    }
    if z_max < 2 {
        return Err(HetError::Config(format!("z_max must be >= 2, got {z_max}")));
    }
    if patch_w < MIN_RECT_SIDE || patch_h < MIN_RECT_SIDE {
        return Err(HetError::Config(format!(
            "patch {patch_w}x{patch_h} cannot host a 2x2 rectangle"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..m)
        .map(|_| {
            let k = rng.random_range(2..=z_max);
            let magnitude = 1.0 / (k as f64).sqrt();
            let entries = (0..k)
                .map(|_| {
                    let w = log_uniform_side(&mut rng, patch_w);
                    let h = log_uniform_side(&mut rng, patch_h);
                    let x = rng.random_range(0..=patch_w - w);
                    let y = rng.random_range(0..=patch_h - h);
                    let weight = if rng.random_bool(0.5) {
                        magnitude
                    } else {
                        -magnitude
                    };
                    ProjectionEntry {
                        rect: Rect { x, y, w, h },
                        weight,
                    }
                })
                .collect();
            ProjectionRow { entries }
        })
        .collect();
    Ok(SparseProjection {
        rows,
        patch_w,
        patch_h,
        seed,
    })
}

fn log_uniform_side(rng: &mut ChaCha8Rng, max: u32) -> u32 {
    if max == MIN_RECT_SIDE {
        return MIN_RECT_SIDE;
    }
    let lo = (MIN_RECT_SIDE as f64).ln();
    let hi = (max as f64).ln();
    let side = rng.random_range(lo..=hi).exp().round() as u32;
    side.clamp(MIN_RECT_SIDE, max)
}

#[derive(Debug, Clone, Copy)]
struct CompiledEntry {
    // padded-table offsets relative to the patch origin cell
    br: usize,
    tr: usize,
    bl: usize,
    tl: usize,
    weight: f64,
}

/// A projection bound to an integral image row stride, so each rectangle
/// costs four indexed loads.
#[derive(Debug, Clone)]
pub struct CompiledProjection {
    entries: Vec<CompiledEntry>,
    row_ends: Vec<usize>,
    stride: usize,
    patch_w: u32,
    patch_h: u32,
}

impl CompiledProjection {
    pub fn new(proj: &SparseProjection, stride: usize) -> Self {
        let mut entries = Vec::new();
        let mut row_ends = Vec::with_capacity(proj.m());
        for row in &proj.rows {
            for e in &row.entries {
                let (x0, y0) = (e.rect.x as usize, e.rect.y as usize);
                let (x1, y1) = (x0 + e.rect.w as usize, y0 + e.rect.h as usize);
                entries.push(CompiledEntry {
                    br: y1 * stride + x1,
                    tr: y0 * stride + x1,
                    bl: y1 * stride + x0,
                    tl: y0 * stride + x0,
                    weight: e.weight,
                });
            }
            row_ends.push(entries.len());
        }
        CompiledProjection {
            entries,
            row_ends,
            stride,
            patch_w: proj.patch_w,
            patch_h: proj.patch_h,
        }
    }

    pub fn for_image(proj: &SparseProjection, ii: &IntegralImage) -> Self {
        Self::new(proj, ii.stride())
    }

    pub fn m(&self) -> usize {
        self.row_ends.len()
    }

    /// Writes the feature of the patch at `origin` into `out`.
    ///
    /// The caller guarantees the patch is in bounds and `ii` has the
    /// stride this projection was compiled for.
    pub(crate) fn eval_into(&self, ii: &IntegralImage, origin: Point, out: &mut [f64]) {
        debug_assert_eq!(ii.stride(), self.stride);
        debug_assert!(ii.contains(origin, self.patch_w, self.patch_h));
        debug_assert_eq!(out.len(), self.m());
        let base = origin.y as usize * self.stride + origin.x as usize;
        let table = &ii.padded()[base..];
        let mut start = 0;
        for (value, &end) in out.iter_mut().zip(&self.row_ends) {
            let mut acc = 0.0;
            for e in &self.entries[start..end] {
                let sum = table[e.br] - table[e.tr] - table[e.bl] + table[e.tl];
                acc += e.weight * sum as f64;
            }
            *value = acc;
            start = end;
        }
    }

    pub fn compress(&self, ii: &IntegralImage, origin: Point) -> Result<CompressedFeature> {
        if ii.stride() != self.stride {
            return Err(HetError::Contract(format!(
                "projection compiled for stride {}, image has {}",
                self.stride,
                ii.stride()
            )));
        }
        if !ii.contains(origin, self.patch_w, self.patch_h) {
            return Err(HetError::Bounds(format!(
                "patch {}x{} at ({}, {}) outside {}x{} image",
                self.patch_w,
                self.patch_h,
                origin.x,
                origin.y,
                ii.width(),
                ii.height()
            )));
        }
        let mut values = vec![0.0; self.m()];
        self.eval_into(ii, origin, &mut values);
        Ok(CompressedFeature(values))
    }
}

/// Compressed feature of the patch whose upper-left corner is `patch_origin`.
pub fn compress(
    proj: &SparseProjection,
    ii: &IntegralImage,
    patch_origin: Point,
) -> Result<CompressedFeature> {
    CompiledProjection::for_image(proj, ii).compress(ii, patch_origin)
}
