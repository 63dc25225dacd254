//! Differential-drive robot with three binary proximity sensors and a ground sensor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, ARENA};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    /// su per timestep.
    pub speed: f64,
    /// Degrees per timestep, counterclockwise.
    pub turn_rate_deg: f64,
    pub sensor_range: f64,
    /// Sensor directions relative to the heading, in degrees.
    pub sensor_angles_deg: [f64; 3],
    /// Half opening of each sensor cone when detecting other robots.
    pub sensor_half_aperture_deg: f64,
    /// Per-step heading perturbation, uniform in `[-x, x]` degrees.
    pub heading_noise_deg: f64,
    /// Forward motion halts when it would bring two centers closer than this.
    pub min_separation: f64,
    /// Travel between two floor samples.
    pub sample_spacing: f64,
    pub sampling: SamplingRule,
    pub comm_range: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            speed: 0.1,
            turn_rate_deg: 3.0,
            sensor_range: 4.5,
            sensor_angles_deg: [-45.0, 0.0, 45.0],
            sensor_half_aperture_deg: 110.0,
            heading_noise_deg: 38.0,
            min_separation: 1.0,
            sample_spacing: 1.0,
            sampling: SamplingRule::Displacement,
            comm_range: 7.5,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("speed", self.speed),
            ("turn_rate_deg", self.turn_rate_deg),
            ("sensor_range", self.sensor_range),
            ("sample_spacing", self.sample_spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Motion(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("sensor_half_aperture_deg", self.sensor_half_aperture_deg),
            ("heading_noise_deg", self.heading_noise_deg),
            ("min_separation", self.min_separation),
            ("comm_range", self.comm_range),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::Motion(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.sensor_range >= ARENA as f64 / 2.0 {
            return Err(SimError::Motion("sensor_range must be below half the arena".into()));
        }
        Ok(())
    }

    /// Cosine of the widest bearing at which another robot is detected.
    fn robot_cone_cos(&self) -> f64 {
        let widest = self
            .sensor_angles_deg
            .iter()
            .fold(0.0f64, |m, a| m.max(a.abs()))
            + self.sensor_half_aperture_deg;
        widest.min(180.0).to_radians().cos()
    }
}

/// When the ground sensor fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingRule {
    /// Straight-line distance from the previous sample location reaches the spacing.
    #[default]
    Displacement,
    /// Path length travelled since the previous sample reaches the spacing.
    PathLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exploring,
    Disseminating,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Moving,
    Avoiding,
    /// Blocked by a robot closer than the minimum separation.
    Halted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub position: [f64; 2],
    /// Radians, counterclockwise from the x axis.
    pub heading: f64,
    pub phase: Phase,
    pub motion: Motion,
    pub samples_white: u32,
    pub samples_total: u32,
    /// Where the last floor sample was taken (the spawn point before the first).
    pub last_sample: [f64; 2],
    /// Path length travelled since the last sample.
    pub distance_since_sample: f64,
    pub exploration_deadline: u64,
    /// Current opinion, `true` for white; `None` while still undecided.
    pub opinion: Option<bool>,
}

/// What happened during one [`Robot::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepEvent {
    pub moved: bool,
    pub sampled: Option<bool>,
}

impl Robot {
    pub fn new(position: [f64; 2], heading: f64, exploration_deadline: u64) -> Self {
        Robot {
            position,
            heading,
            phase: Phase::Exploring,
            motion: Motion::Moving,
            samples_white: 0,
            samples_total: 0,
            last_sample: position,
            distance_since_sample: 0.0,
            exploration_deadline,
            opinion: None,
        }
    }

    /// Majority of the robot's own samples; `None` on an even split.
    pub fn personal_estimate(&self) -> Option<bool> {
        let black = self.samples_total - self.samples_white;
        match self.samples_white.cmp(&black) {
            std::cmp::Ordering::Greater => Some(true),
            std::cmp::Ordering::Less => Some(false),
            std::cmp::Ordering::Equal => None,
        }
    }

    fn direction(&self) -> [f64; 2] {
        [self.heading.cos(), self.heading.sin()]
    }

    /// Whether any proximity sensor ray ends outside the arena.
    pub fn senses_wall(&self, params: &MotionParams) -> bool {
        let limit = ARENA as f64;
        params.sensor_angles_deg.iter().any(|a| {
            let t = self.heading + a.to_radians();
            let x = self.position[0] + params.sensor_range * t.cos();
            let y = self.position[1] + params.sensor_range * t.sin();
            !(0.0..=limit).contains(&x) || !(0.0..=limit).contains(&y)
        })
    }

    /// Whether another robot lies within sensor range inside the sensor cones.
    pub fn senses_robot(&self, others: &[[f64; 2]], me: usize, params: &MotionParams) -> bool {
        let dir = self.direction();
        let range2 = params.sensor_range * params.sensor_range;
        let cone = params.robot_cone_cos();
        others.iter().enumerate().any(|(j, p)| {
            if j == me {
                return false;
            }
            let d = [p[0] - self.position[0], p[1] - self.position[1]];
            let dist2 = d[0] * d[0] + d[1] * d[1];
            if dist2 >= range2 {
                return false;
            }
            if dist2 == 0.0 {
                return true;
            }
            (d[0] * dir[0] + d[1] * dir[1]) >= cone * dist2.sqrt()
        })
    }

    /// Advances one timestep.
    ///
    /// `others` holds the current positions of the whole swarm (entry `me` is this
    /// robot) and is only consulted when `interference` is on. Floor samples are
    /// taken only if `sampling` is set.
    #[allow(clippy::too_many_arguments)]
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        env: &Environment,
        others: &[[f64; 2]],
        me: usize,
        params: &MotionParams,
        interference: bool,
        sampling: bool,
        rng: &mut R,
    ) -> StepEvent {
        let blocked = self.senses_wall(params) || (interference && self.senses_robot(others, me, params));
        if blocked {
            self.motion = Motion::Avoiding;
            self.heading = wrap(self.heading + params.turn_rate_deg.to_radians());
            return StepEvent {
                moved: false,
                sampled: None,
            };
        }

        let dir = self.direction();
        let limit = ARENA as f64;
        let next = [
            (self.position[0] + params.speed * dir[0]).clamp(0.0, limit),
            (self.position[1] + params.speed * dir[1]).clamp(0.0, limit),
        ];
        let too_close = interference && {
            let sep2 = params.min_separation * params.min_separation;
            others.iter().enumerate().any(|(j, p)| {
                j != me && {
                    let (dx, dy) = (p[0] - next[0], p[1] - next[1]);
                    let (ox, oy) = (p[0] - self.position[0], p[1] - self.position[1]);
                    let after = dx * dx + dy * dy;
                    after < sep2 && after < ox * ox + oy * oy
                }
            })
        };
        let noise = params.heading_noise_deg.to_radians();
        if noise > 0.0 {
            self.heading = wrap(self.heading + rng.gen_range(-noise..=noise));
        }
        if too_close {
            self.motion = Motion::Halted;
            return StepEvent {
                moved: false,
                sampled: None,
            };
        }
        self.motion = Motion::Moving;
        self.position = next;

        self.distance_since_sample += params.speed;
        let mut sampled = None;
        if sampling {
            // Tolerate rounding in the accumulated 0.1 su steps.
            let spacing = params.sample_spacing - 1e-9;
            let due = match params.sampling {
                SamplingRule::Displacement => {
                    let (dx, dy) = (next[0] - self.last_sample[0], next[1] - self.last_sample[1]);
                    dx * dx + dy * dy >= spacing * spacing
                }
                SamplingRule::PathLength => self.distance_since_sample >= spacing,
            };
            if due {
                let white = env.sample(next[0], next[1]);
                self.samples_total += 1;
                self.samples_white += u32::from(white);
                self.last_sample = next;
                self.distance_since_sample = 0.0;
                sampled = Some(white);
            }
        }
        StepEvent { moved: true, sampled }
    }
}

fn wrap(angle: f64) -> f64 {
    angle.rem_euclid(std::f64::consts::TAU)
}
