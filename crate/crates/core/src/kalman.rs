//! Constant-velocity Kalman filter over the target center whose noise
//! covariances are rescaled every frame by the ensemble confidence.
//!
//! State: `[x, y, vx, vy]` in pixels and pixels/frame. Measurement: `[x, y]`.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{HetError, Result};
use crate::middle::{WEIGHT_MAX, WEIGHT_MIN};

/// Diagonal initial and base covariances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    pub p0: [f64; 4],
    pub q0: [f64; 4],
    pub r0: [f64; 2],
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            p0: [10.0; 4],
            q0: [4.0, 4.0, 1.0, 1.0],
            r0: [4.0, 4.0],
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        let all_nonneg = self.p0.iter().chain(&self.q0).all(|v| v.is_finite() && *v >= 0.0);
        let r_pos = self.r0.iter().all(|v| v.is_finite() && *v > 0.0);
        if !all_nonneg || !r_pos {
            return Err(HetError::Config(format!(
                "kalman covariances must be non-negative (r0 positive): {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    x: Vector4<f64>,
    p: Matrix4<f64>,
    q0: Matrix4<f64>,
    r0: Matrix2<f64>,
    q_cur: Matrix4<f64>,
    r_cur: Matrix2<f64>,
    confidence: f64,
}

const OBSERVE: Matrix2x4<f64> = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);

fn transition(dt: f64) -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, dt, 0.0, //
        0.0, 1.0, 0.0, dt, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

impl KalmanState {
    /// Filter at rest at `center` with diagonal covariances from `cfg`.
    pub fn new(center: (f64, f64), cfg: &KalmanConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_covariances(
            Vector4::new(center.0, center.1, 0.0, 0.0),
            Matrix4::from_diagonal(&Vector4::from(cfg.p0)),
            Matrix4::from_diagonal(&Vector4::from(cfg.q0)),
            Matrix2::from_diagonal(&Vector2::from(cfg.r0)),
        )
    }

    pub fn with_covariances(
        x: Vector4<f64>,
        p: Matrix4<f64>,
        q0: Matrix4<f64>,
        r0: Matrix2<f64>,
    ) -> Result<Self> {
        if r0.cholesky().is_none() {
            return Err(HetError::Config("base measurement covariance must be positive definite".into()));
        }
        let mut ks = KalmanState {
            x,
            p,
            q0,
            r0,
            q_cur: q0,
            r_cur: r0,
            confidence: 0.5,
        };
        ks.adapt_noise(0.5)?;
        Ok(ks)
    }

    pub fn state(&self) -> &Vector4<f64> {
        &self.x
    }

    pub fn covariance(&self) -> &Matrix4<f64> {
        &self.p
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.x[2], self.x[3])
    }

    pub fn q0(&self) -> &Matrix4<f64> {
        &self.q0
    }

    pub fn r0(&self) -> &Matrix2<f64> {
        &self.r0
    }

    pub fn q_cur(&self) -> &Matrix4<f64> {
        &self.q_cur
    }

    pub fn r_cur(&self) -> &Matrix2<f64> {
        &self.r_cur
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    /// `Q = s * Q0`, `R = (1 - s) * R0` for mean normalized weight `s`.
    pub fn adapt_noise(&mut self, confidence: f64) -> Result<()> {
        const SLACK: f64 = 1e-9;
        if !(WEIGHT_MIN - SLACK..=WEIGHT_MAX + SLACK).contains(&confidence) {
            return Err(HetError::Contract(format!(
                "confidence {confidence} outside [{WEIGHT_MIN}, {WEIGHT_MAX}]"
            )));
        }
        let s = confidence.clamp(WEIGHT_MIN, WEIGHT_MAX);
        self.q_cur = self.q0 * s;
        self.r_cur = self.r0 * (1.0 - s);
        self.confidence = s;
        Ok(())
    }

    /// Time update under the constant-velocity model.
    pub fn predict(&mut self, dt: f64) {
        debug_assert!(dt > 0.0);
        let a = transition(dt);
        self.x = a * self.x;
        self.p = symmetrize(&(a * self.p * a.transpose() + self.q_cur));
    }

    /// Position the filter would predict after `dt`, without mutating it.
    pub fn predicted_position(&self, dt: f64) -> (f64, f64) {
        let x = transition(dt) * self.x;
        (x[0], x[1])
    }

    /// Measurement update with `z` a center position (Joseph form).
    pub fn correct(&mut self, z: (f64, f64)) -> Result<()> {
        let z = Vector2::new(z.0, z.1);
        let h = OBSERVE;
        let s = h * self.p * h.transpose() + self.r_cur;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| HetError::Numeric("singular innovation covariance".into()))?;
        let k: Matrix4x2<f64> = self.p * h.transpose() * s_inv;
        let innovation = z - h * self.x;
        self.x += k * innovation;
        let i_kh = Matrix4::identity() - k * h;
        let p = i_kh * self.p * i_kh.transpose() + k * self.r_cur * k.transpose();
        self.p = symmetrize(&p);
        if !self.x.iter().all(|v| v.is_finite()) {
            return Err(HetError::Numeric("non-finite filter state".into()));
        }
        Ok(())
    }

    /// Smallest eigenvalue of the state covariance.
    pub fn min_covariance_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.p).eigenvalues.min()
    }
}
