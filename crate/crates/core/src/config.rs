//! Tracker configuration and its flat `key = value` file format.

use serde::{Deserialize, Serialize};

use crate::error::{HetError, Result};
use crate::kalman::KalmanConfig;
use crate::middle::MIN_PATCHES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Weak classifiers per sub-patch (rows of the projection).
    pub m: usize,
    pub q_patches: usize,
    /// Maximum rectangles per projection row.
    pub z_max: usize,
    pub learning_rate: f64,
    /// Search radius in pixels.
    pub beta: f64,
    /// Positive-sample radius in pixels.
    pub pos_radius: f64,
    /// Inner radius of the negative-sample annulus in pixels.
    pub pi: f64,
    pub stride: u32,
    /// Positive and negative samples drawn per classifier update.
    pub n_update: usize,
    /// Sub-patch size as a fraction of the target box.
    pub patch_scale: f64,
    /// Shift search centers by the Kalman-predicted displacement.
    pub predictive_search: bool,
    pub kalman: KalmanConfig,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            m: 150,
            q_patches: 11,
            z_max: 4,
            learning_rate: 0.85,
            beta: 20.0,
            pos_radius: 2.0,
            pi: 40.0,
            stride: 1,
            n_update: 50,
            patch_scale: 0.75,
            predictive_search: false,
            kalman: KalmanConfig::default(),
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HetError::Config(msg));
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.q_patches < MIN_PATCHES {
            return fail(format!("q_patches must be >= {MIN_PATCHES}, got {}", self.q_patches));
        }
        if self.z_max < 2 {
            return fail(format!("z_max must be >= 2, got {}", self.z_max));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return fail(format!("learning_rate must lie in (0, 1), got {}", self.learning_rate));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.pos_radius >= 1.0 && self.pos_radius < self.pi) {
            return fail(format!(
                "pos_radius must lie in [1, pi), got {}",
                self.pos_radius
            ));
        }
        if !(self.pi > self.beta && self.pi.is_finite()) {
            return fail(format!("pi ({}) must exceed beta ({})", self.pi, self.beta));
        }
        if self.stride == 0 {
            return fail("stride must be at least 1".into());
        }
        if self.n_update == 0 {
            return fail("n_update must be at least 1".into());
        }
        if !(self.patch_scale > 0.0 && self.patch_scale <= 1.0) {
            return fail(format!("patch_scale must lie in (0, 1], got {}", self.patch_scale));
        }
        self.kalman.validate()
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored. Setting `beta` without `pi` keeps `pi = 2 beta`.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        let mut pi_set = false;
        let mut beta_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HetError::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| HetError::Parse(format!("line {}: bad {what} `{value}`", lineno + 1));
            match key {
                "m" => self.m = value.parse().map_err(|_| bad(key))?,
                "q_patches" => self.q_patches = value.parse().map_err(|_| bad(key))?,
                "z_max" => self.z_max = value.parse().map_err(|_| bad(key))?,
                "learning_rate" => self.learning_rate = value.parse().map_err(|_| bad(key))?,
                "beta" => {
                    self.beta = value.parse().map_err(|_| bad(key))?;
                    beta_set = true;
                }
                "pi" => {
                    self.pi = value.parse().map_err(|_| bad(key))?;
                    pi_set = true;
                }
                "pos_radius" => self.pos_radius = value.parse().map_err(|_| bad(key))?,
                "stride" => self.stride = value.parse().map_err(|_| bad(key))?,
                "n_update" => self.n_update = value.parse().map_err(|_| bad(key))?,
                "patch_scale" => self.patch_scale = value.parse().map_err(|_| bad(key))?,
                "predictive_search" => self.predictive_search = value.parse().map_err(|_| bad(key))?,
                "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
                "kalman_p0" => self.kalman.p0 = parse_array(value).ok_or_else(|| bad(key))?,
                "kalman_q0" => self.kalman.q0 = parse_array(value).ok_or_else(|| bad(key))?,
                "kalman_r0" => self.kalman.r0 = parse_array(value).ok_or_else(|| bad(key))?,
                _ => {
                    return Err(HetError::Parse(format!(
                        "line {}: unknown key `{key}`",
                        lineno + 1
                    )))
                }
            }
        }
        if beta_set && !pi_set {
            self.pi = 2.0 * self.beta;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = TrackerConfig::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        format!(
            "m = {}\nq_patches = {}\nz_max = {}\nlearning_rate = {}\nbeta = {}\npos_radius = {}\npi = {}\n\
             stride = {}\nn_update = {}\npatch_scale = {}\npredictive_search = {}\nseed = {}\n\
             kalman_p0 = {}\nkalman_q0 = {}\nkalman_r0 = {}\n",
            self.m,
            self.q_patches,
            self.z_max,
            self.learning_rate,
            self.beta,
            self.pos_radius,
            self.pi,
            self.stride,
            self.n_update,
            self.patch_scale,
            self.predictive_search,
            self.seed,
            join(&self.kalman.p0),
            join(&self.kalman.q0),
            join(&self.kalman.r0),
        )
    }
}

fn parse_array<const N: usize>(value: &str) -> Option<[f64; N]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<_>>()?;
    parts.try_into().ok()
}
