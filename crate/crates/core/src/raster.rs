//! Grayscale frames, integral images and rectangle sums.
//!
//! Everything above this module works on scalar pixel sums over axis-aligned
//! rectangles. Rectangles are stored relative to a region's upper-left corner
//! and only placed at lookup time, so a single template serves every
//! candidate position in a search window.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HetError, Result};

/// Absolute pixel coordinate. May be negative or past the image edge for
/// candidate positions that are later rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// Rectangle relative to an enclosing region's upper-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(HetError::Dimension(format!("rect {w}x{h} is empty")));
        }
        Ok(Rect { x, y, w, h })
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// True when the rectangle lies inside a `region_w` x `region_h` region.
    pub fn fits_in(&self, region_w: u32, region_h: u32) -> bool {
        self.x as u64 + self.w as u64 <= region_w as u64
            && self.y as u64 + self.h as u64 <= region_h as u64
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(HetError::Dimension(format!(
                "frame {width}x{height} is empty"
            )));
        }
        if data.len() != width * height {
            return Err(HetError::Dimension(format!(
                "frame {width}x{height} needs {} bytes, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }
}

/// Summed-area table with 64-bit cells.
///
/// Stored with an extra leading zero row and column so a rectangle sum is
/// always four unconditional lookups; `at` exposes the inclusive
/// `[0..=x] x [0..=y]` view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<i64>,
}

impl IntegralImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum of intensities over `[0..=x] x [0..=y]`.
    pub fn at(&self, x: usize, y: usize) -> i64 {
        assert!(x < self.width && y < self.height);
        self.table[(y + 1) * self.stride() + x + 1]
    }

    pub fn total(&self) -> i64 {
        self.at(self.width - 1, self.height - 1)
    }

    /// Row stride of the padded table.
    pub(crate) fn stride(&self) -> usize {
        self.width + 1
    }

    /// Padded table: cell `(x, y)` holds the sum over `[0..x) x [0..y)`.
    pub(crate) fn padded(&self) -> &[i64] {
        &self.table
    }

    /// Whether a `w` x `h` region with upper-left corner `origin` fits.
    pub fn contains(&self, origin: Point, w: u32, h: u32) -> bool {
        origin.x >= 0
            && origin.y >= 0
            && origin.x as i64 + w as i64 <= self.width as i64
            && origin.y as i64 + h as i64 <= self.height as i64
    }
}

/// Luminance conversion of an interleaved RGB raster.
pub fn to_grayscale(width: usize, height: usize, rgb: &[u8]) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(HetError::Dimension(format!(
            "raster {width}x{height} is empty"
        )));
    }
    if rgb.len() != width * height * 3 {
        return Err(HetError::Dimension(format!(
            "rgb raster {width}x{height} needs {} bytes, got {}",
            width * height * 3,
            rgb.len()
        )));
    }
    let data = rgb
        .chunks_exact(3)
        .map(|px| luma(px[0], px[1], px[2]))
        .collect();
    Frame::new(width, height, data)
}

/// round(0.299 R + 0.587 G + 0.114 B) in exact integer arithmetic.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

pub fn build_integral(frame: &Frame) -> IntegralImage {
    let (w, h) = (frame.width, frame.height);
    let stride = w + 1;
    let mut table = vec![0i64; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0i64;
        let src = &frame.data[y * w..(y + 1) * w];
        let (above, below) = table.split_at_mut((y + 1) * stride);
        let prev = &above[y * stride..];
        let cur = &mut below[..stride];
        for x in 0..w {
            row_sum += src[x] as i64;
            cur[x + 1] = prev[x + 1] + row_sum;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        table,
    }
}

/// Sum of intensities of `r` placed at `origin`. Never clamps.
pub fn rect_sum(ii: &IntegralImage, origin: Point, r: Rect) -> Result<i64> {
    let x0 = origin.x as i64 + r.x as i64;
    let y0 = origin.y as i64 + r.y as i64;
    let x1 = x0 + r.w as i64;
    let y1 = y0 + r.h as i64;
    if r.w == 0 || r.h == 0 || x0 < 0 || y0 < 0 || x1 > ii.width as i64 || y1 > ii.height as i64
    {
        return Err(HetError::Bounds(format!(
            "rect {}x{} at ({x0}, {y0}) outside {}x{} image",
            r.w, r.h, ii.width, ii.height
        )));
    }
    let s = ii.stride() as i64;
    let t = &ii.table;
    let idx = |x: i64, y: i64| (y * s + x) as usize;
    Ok(t[idx(x1, y1)] - t[idx(x1, y0)] - t[idx(x0, y1)] + t[idx(x0, y0)])
}

/// Reads an 8-bit binary PGM (P5) with maxval 255.
pub fn read_pgm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| HetError::io(path, e))?;
    parse_pgm(&bytes).map_err(|message| HetError::Decode {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<Frame, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("missing P5 magic".into());
    }
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err("malformed header number".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("header number out of range")?;
    }
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing separator after maxval".into()),
    }
    let need = width
        .checked_mul(height)
        .ok_or("image dimensions overflow")?;
    let payload = bytes
        .get(pos..pos + need)
        .ok_or_else(|| format!("payload truncated: need {need} bytes"))?;
    Frame::new(width, height, payload.to_vec()).map_err(|e| e.to_string())
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.data);
    out
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| HetError::io(path, e))?;
    f.write_all(&encode_pgm(frame))
        .map_err(|e| HetError::io(path, e))
}

/// Loads a frame from PGM, PNG or JPEG. Color images go through [`to_grayscale`].
pub fn load_frame(path: &Path) -> Result<Frame> {
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        return read_pgm(path);
    }
    let img = image::open(path).map_err(|e| HetError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    to_grayscale(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    fn naive_sum(f: &Frame, x0: usize, y0: usize, w: usize, h: usize) -> i64 {
        let mut s = 0i64;
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                s += f.get(x, y) as i64;
            }
        }
        s
    }

    #[test]
    fn grayscale_examples() {
        let f = to_grayscale(3, 1, &[255, 255, 255, 0, 0, 0, 255, 0, 0]).unwrap();
        assert_eq!(f.data(), &[255, 0, 76]);
        for v in 0..=255u8 {
            assert_eq!(luma(v, v, v), v);
        }
        assert!(matches!(
            to_grayscale(0, 4, &[]),
            Err(HetError::Dimension(_))
        ));
    }

    #[test]
    fn frame_rejects_bad_lengths() {
        assert!(Frame::new(2, 2, vec![0; 3]).is_err());
        assert!(Frame::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn integral_small_examples() {
        let ii = build_integral(&Frame::filled(2, 2, 1).unwrap());
        assert_eq!(
            [ii.at(0, 0), ii.at(1, 0), ii.at(0, 1), ii.at(1, 1)],
            [1, 2, 2, 4]
        );
        let ii = build_integral(&Frame::new(1, 1, vec![7]).unwrap());
        assert_eq!(ii.at(0, 0), 7);
        let ii = build_integral(&Frame::new(3, 3, (1..=9).collect()).unwrap());
        assert_eq!(ii.total(), 45);
    }

    #[test]
    fn integral_is_monotone_and_totals() {
        let f = random_frame(11, 6, 3);
        let ii = build_integral(&f);
        for y in 0..6 {
            for x in 0..11 {
                if x > 0 {
                    assert!(ii.at(x, y) >= ii.at(x - 1, y));
                }
                if y > 0 {
                    assert!(ii.at(x, y) >= ii.at(x, y - 1));
                }
            }
        }
        assert_eq!(ii.total(), f.data().iter().map(|&v| v as i64).sum::<i64>());
    }

    #[test]
    fn rect_sum_examples() {
        let ii = build_integral(&Frame::filled(2, 2, 1).unwrap());
        assert_eq!(rect_sum(&ii, Point::new(0, 0), Rect::new(0, 0, 2, 2).unwrap()).unwrap(), 4);
        let f = random_frame(8, 8, 9);
        let ii = build_integral(&f);
        let one = Rect::new(0, 0, 1, 1).unwrap();
        assert_eq!(rect_sum(&ii, Point::new(0, 0), one).unwrap(), f.get(0, 0) as i64);
        let r = Rect::new(0, 0, 3, 2).unwrap();
        for y in 0..=6 {
            for x in 0..=5 {
                assert_eq!(
                    rect_sum(&ii, Point::new(x as i32, y as i32), r).unwrap(),
                    naive_sum(&f, x, y, 3, 2)
                );
            }
        }
    }

    #[test]
    fn rect_sum_rejects_out_of_bounds() {
        let ii = build_integral(&Frame::filled(4, 4, 1).unwrap());
        let r = Rect::new(1, 1, 3, 3).unwrap();
        assert!(rect_sum(&ii, Point::new(0, 0), r).is_ok());
        assert!(matches!(rect_sum(&ii, Point::new(1, 0), r), Err(HetError::Bounds(_))));
        assert!(matches!(rect_sum(&ii, Point::new(-2, 0), r), Err(HetError::Bounds(_))));
    }

    #[test]
    fn pgm_roundtrip_and_comments() {
        let f = random_frame(5, 3, 1);
        assert_eq!(parse_pgm(&encode_pgm(&f)).unwrap(), f);

        let mut raw = b"P5 # made by hand\n2 1\n# max\n255\n".to_vec();
        raw.extend_from_slice(&[10, 20]);
        let g = parse_pgm(&raw).unwrap();
        assert_eq!(g.data(), &[10, 20]);

        assert!(parse_pgm(b"P6\n1 1\n255\n\0").is_err());
        assert!(parse_pgm(b"P5\n1 1\n65535\n\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\0").is_err());
    }

    #[test]
    fn png_decodes_through_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 9, 9, 9]).unwrap();
        img.save(&path).unwrap();
        let f = load_frame(&path).unwrap();
        assert_eq!(f.data(), &[76, 9]);
    }

    proptest::proptest! {
        #[test]
        fn rect_sum_matches_naive(
            w in 1usize..10, h in 1usize..10, seed in 0u64..1000,
            rx in 0usize..10, ry in 0usize..10, rw in 1usize..10, rh in 1usize..10,
        ) {
            let f = random_frame(w, h, seed);
            let ii = build_integral(&f);
            let r = Rect::new(0, 0, rw as u32, rh as u32).unwrap();
            let got = rect_sum(&ii, Point::new(rx as i32, ry as i32), r);
            if rx + rw <= w && ry + rh <= h {
                proptest::prop_assert_eq!(got.unwrap(), naive_sum(&f, rx, ry, rw, rh));
            } else {
                proptest::prop_assert!(got.is_err());
            }
        }
    }
}
