use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HetError, Result};
use crate::eval::metrics::BoxF;

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const ATTRIBUTES_FILE: &str = "attributes.txt";
pub const IMAGE_DIR: &str = "img";

const FRAME_EXTENSIONS: [&str; 4] = ["pgm", "png", "jpg", "jpeg"];

/// A benchmark sequence on disk: `img/` frames plus optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<PathBuf>,
    /// 0-based boxes, one per frame, when the sequence has ground truth.
    pub ground_truth: Option<Vec<BoxF>>,
    pub attributes: BTreeSet<String>,
}

impl Sequence {
    /// Loads `dir/img/*` (sorted by file name), `dir/groundtruth_rect.txt`
    /// and `dir/attributes.txt` when present.
    pub fn load(dir: &Path) -> Result<Self> {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("sequence")
            .to_string();
        let img_dir = dir.join(IMAGE_DIR);
        let entries = fs::read_dir(&img_dir).map_err(|e| HetError::io(&img_dir, e))?;
        let mut frames = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| HetError::io(&img_dir, e))?.path();
            let is_frame = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| FRAME_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)));
            if is_frame {
                frames.push(path);
            }
        }
        frames.sort();
        if frames.is_empty() {
            return Err(HetError::Parse(format!("{}: no frames", img_dir.display())));
        }

        let gt_path = dir.join(GROUND_TRUTH_FILE);
        let ground_truth = if gt_path.exists() {
            let text = fs::read_to_string(&gt_path).map_err(|e| HetError::io(&gt_path, e))?;
            let boxes = parse_ground_truth(&text)?;
            if boxes.len() != frames.len() {
                return Err(HetError::Parse(format!(
                    "{}: {} boxes for {} frames",
                    gt_path.display(),
                    boxes.len(),
                    frames.len()
                )));
            }
            Some(boxes)
        } else {
            None
        };

        let attr_path = dir.join(ATTRIBUTES_FILE);
        let attributes = if attr_path.exists() {
            let text = fs::read_to_string(&attr_path).map_err(|e| HetError::io(&attr_path, e))?;
            parse_attributes(&text)
        } else {
            BTreeSet::new()
        };

        Ok(Sequence {
            name,
            frames,
            ground_truth,
            attributes,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// One `x,y,w,h` box per line, comma or whitespace separated, 1-based.
/// Returned boxes are 0-based.
pub fn parse_ground_truth(text: &str) -> Result<Vec<BoxF>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| HetError::Parse(format!("ground truth line {}: {e}", i + 1)))?;
        if vals.len() != 4 || vals.iter().any(|v| !v.is_finite()) {
            return Err(HetError::Parse(format!(
                "ground truth line {}: expected 4 finite numbers",
                i + 1
            )));
        }
        out.push(BoxF::new(vals[0] - 1.0, vals[1] - 1.0, vals[2], vals[3]));
    }
    Ok(out)
}

pub fn format_ground_truth(boxes: &[BoxF]) -> String {
    boxes
        .iter()
        .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
        .collect()
}

pub fn parse_attributes(text: &str) -> BTreeSet<String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_uppercase())
        .collect()
}
