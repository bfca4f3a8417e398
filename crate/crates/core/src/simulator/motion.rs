//! Unicycle motion with additive Gaussian noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Per-step position noise, cells.
    pub noise_sigma_xy: f64,
    /// Per-step heading noise, radians.
    pub noise_sigma_heading: f64,
    /// Cells per second.
    pub speed: f64,
    /// Travel distance that forces a re-registration, cells.
    pub relocation_distance: f64,
    pub rng_seed: u64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            noise_sigma_xy: 0.05,
            noise_sigma_heading: 0.0,
            speed: 4.0,
            relocation_distance: 80.0,
            rng_seed: 0,
        }
    }
}

impl MotionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.noise_sigma_xy >= 0.0 && self.noise_sigma_heading >= 0.0) {
            return Err("noise sigmas must be non-negative".into());
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err("speed must be positive".into());
        }
        if self.relocation_distance.is_nan() || self.relocation_distance <= 0.0 {
            return Err("relocation distance must be positive".into());
        }
        Ok(())
    }
}

/// Turns by `omega * dt`, then drives `v * dt` along the new heading. Three
/// standard normal draws are taken on every call, so the random stream
/// stays aligned whatever the sigmas are.
pub fn step_motion<R: Rng + ?Sized>(pose: Pose, u: (f64, f64), dt: f64, cfg: &MotionConfig, rng: &mut R) -> Pose {
    let (v, omega) = u;
    let n_theta: f64 = rng.sample(StandardNormal);
    let n_x: f64 = rng.sample(StandardNormal);
    let n_y: f64 = rng.sample(StandardNormal);
    let heading = pose.heading + omega * dt + cfg.noise_sigma_heading * n_theta;
    Pose {
        x: pose.x + v * dt * heading.cos() + cfg.noise_sigma_xy * n_x,
        y: pose.y + v * dt * heading.sin() + cfg.noise_sigma_xy * n_y,
        heading: wrap_angle(heading),
    }
}
