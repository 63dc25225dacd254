//! Collective decision runs and batches of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{generate_with_rng, white_target, Environment, Geometry, ARENA};
use crate::error::{Result, SimError};
use crate::robot::{MotionParams, Phase, Robot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// One global vote over every initial opinion.
    Centralized,
    /// Repeated local majority over neighbours' opinions.
    Decentralized,
    /// Local majority where the robot's own vote is its running sample majority.
    Iterative,
}

impl Controller {
    pub const ALL: [Controller; 3] = [Controller::Centralized, Controller::Decentralized, Controller::Iterative];

    pub fn name(self) -> &'static str {
        match self {
            Controller::Centralized => "centralized",
            Controller::Decentralized => "decentralized",
            Controller::Iterative => "iterative",
        }
    }
}

impl std::str::FromStr for Controller {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Controller::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown controller {s:?}"))
    }
}

impl std::fmt::Display for Controller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_MAX_TIMESTEPS: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub geometry: Geometry,
    pub fill_ratio: f64,
    pub controller: Controller,
    pub swarm_size: usize,
    pub interference: bool,
    pub seed: u64,
    pub max_timesteps: u64,
    pub motion: MotionParams,
    /// Inclusive bounds of the uniform per-robot exploration time.
    pub exploration: (u64, u64),
    /// Timesteps between two local majority rounds.
    pub round_interval: u64,
}

impl RunSpec {
    pub fn new(geometry: Geometry, fill_ratio: f64, controller: Controller, swarm_size: usize, seed: u64) -> Self {
        RunSpec {
            geometry,
            fill_ratio,
            controller,
            swarm_size,
            interference: false,
            seed,
            max_timesteps: DEFAULT_MAX_TIMESTEPS,
            motion: MotionParams::default(),
            exploration: (600, 1800),
            round_interval: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        white_target(self.fill_ratio)?;
        if self.swarm_size == 0 {
            return Err(SimError::EmptySwarm);
        }
        self.motion.validate()?;
        if self.exploration.0 == 0 || self.exploration.0 > self.exploration.1 {
            return Err(SimError::Motion(format!("bad exploration range {:?}", self.exploration)));
        }
        if self.round_interval == 0 {
            return Err(SimError::Motion("round_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// `true` for white.
    pub decision: bool,
    pub correct: bool,
    pub steps: u64,
    /// `false` when `max_timesteps` ran out before unanimity; `decision` is then
    /// the plain majority of the final opinions.
    pub converged: bool,
    /// Opinion of every robot at the end of its exploration, by robot index.
    pub individual_estimates: Vec<bool>,
    pub majority_white: bool,
}

impl Outcome {
    pub fn individual_correct_count(&self) -> usize {
        self.individual_estimates.iter().filter(|&&o| o == self.majority_white).count()
    }
}

fn spawn(spec: &RunSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Robot>> {
    let side = ARENA as f64;
    let sep2 = spec.motion.min_separation * spec.motion.min_separation;
    let mut robots: Vec<Robot> = Vec::with_capacity(spec.swarm_size);
    for _ in 0..spec.swarm_size {
        let mut attempts = 0;
        let position = loop {
            let p = [rng.gen_range(0.0..side), rng.gen_range(0.0..side)];
            let clear = !spec.interference
                || robots.iter().all(|r| {
                    let (dx, dy) = (r.position[0] - p[0], r.position[1] - p[1]);
                    dx * dx + dy * dy >= sep2
                });
            if clear {
                break p;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(SimError::Placement {
                    robots: spec.swarm_size,
                    separation: spec.motion.min_separation,
                });
            }
        };
        let heading = rng.gen_range(0.0..std::f64::consts::TAU);
        let deadline = rng.gen_range(spec.exploration.0..=spec.exploration.1);
        robots.push(Robot::new(position, heading, deadline));
    }
    Ok(robots)
}

fn majority_or_coin(white: usize, black: usize, rng: &mut ChaCha8Rng) -> bool {
    match white.cmp(&black) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => rng.gen_bool(0.5),
    }
}

/// Synchronous local majority round. Ties keep the current opinion.
fn local_round(robots: &mut [Robot], positions: &[[f64; 2]], controller: Controller, comm_range: f64) {
    let r2 = comm_range * comm_range;
    let current: Vec<bool> = robots.iter().map(|r| r.opinion.expect("decided")).collect();
    for (i, robot) in robots.iter_mut().enumerate() {
        let own = match controller {
            Controller::Iterative => robot.personal_estimate().unwrap_or(current[i]),
            _ => current[i],
        };
        let (mut white, mut total) = (usize::from(own), 1usize);
        for (j, p) in positions.iter().enumerate() {
            if j == i {
                continue;
            }
            let (dx, dy) = (p[0] - positions[i][0], p[1] - positions[i][1]);
            if dx * dx + dy * dy <= r2 {
                white += usize::from(current[j]);
                total += 1;
            }
        }
        let black = total - white;
        robot.opinion = Some(match white.cmp(&black) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => current[i],
        });
    }
}

fn unanimous(robots: &[Robot]) -> Option<bool> {
    let first = robots[0].opinion?;
    robots.iter().all(|r| r.opinion == Some(first)).then_some(first)
}

/// Runs one collective decision from spawn to consensus (or timeout).
pub fn run_experiment(spec: &RunSpec) -> Result<Outcome> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let env = generate_with_rng(spec.geometry, spec.fill_ratio, &mut rng)?;
    run_in(&env, spec, &mut rng)
}

/// Like [`run_experiment`] but on a given floor.
pub fn run_in(env: &Environment, spec: &RunSpec, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    spec.validate()?;
    let mut robots = spawn(spec, rng)?;
    let mut positions: Vec<[f64; 2]> = robots.iter().map(|r| r.position).collect();
    let mut estimates: Vec<Option<bool>> = vec![None; robots.len()];
    let mut undecided = robots.len();
    let majority_white = env.majority_white();
    let mut dissemination_start = None;
    let mut t = 0u64;

    let finish = |decision: bool, steps: u64, converged: bool, estimates: &[Option<bool>]| Outcome {
        decision,
        correct: decision == majority_white,
        steps,
        converged,
        individual_estimates: estimates.iter().map(|e| e.expect("formed")).collect(),
        majority_white,
    };

    while t < spec.max_timesteps {
        t += 1;
        for i in 0..robots.len() {
            let sampling = robots[i].phase == Phase::Exploring || spec.controller == Controller::Iterative;
            robots[i].step(env, &positions, i, &spec.motion, spec.interference, sampling, rng);
            positions[i] = robots[i].position;
            if robots[i].phase == Phase::Exploring && t >= robots[i].exploration_deadline {
                let opinion = robots[i].personal_estimate().unwrap_or_else(|| rng.gen_bool(0.5));
                robots[i].opinion = Some(opinion);
                robots[i].phase = Phase::Disseminating;
                estimates[i] = Some(opinion);
                undecided -= 1;
            }
        }
        if undecided > 0 {
            continue;
        }
        match dissemination_start {
            None => {
                dissemination_start = Some(t);
                if spec.controller == Controller::Centralized {
                    let white = robots.iter().filter(|r| r.opinion == Some(true)).count();
                    let decision = majority_or_coin(white, robots.len() - white, rng);
                    return Ok(finish(decision, t, true, &estimates));
                }
                if let Some(d) = unanimous(&robots) {
                    return Ok(finish(d, t, true, &estimates));
                }
            }
            Some(start) if (t - start).is_multiple_of(spec.round_interval) => {
                local_round(&mut robots, &positions, spec.controller, spec.motion.comm_range);
                if let Some(d) = unanimous(&robots) {
                    for r in &mut robots {
                        r.phase = Phase::Done;
                    }
                    return Ok(finish(d, t, true, &estimates));
                }
            }
            Some(_) => {}
        }
    }

    // Out of time: undecided robots fall back to their current sample majority.
    for (i, r) in robots.iter().enumerate() {
        if estimates[i].is_none() {
            estimates[i] = Some(r.personal_estimate().unwrap_or_else(|| rng.gen_bool(0.5)));
        }
    }
    let opinions: Vec<bool> = robots
        .iter()
        .zip(&estimates)
        .map(|(r, e)| r.opinion.unwrap_or(e.expect("filled")))
        .collect();
    let white = opinions.iter().filter(|&&o| o).count();
    let decision = majority_or_coin(white, opinions.len() - white, rng);
    Ok(finish(decision, t, false, &estimates))
}

/// Seed of repetition `rep` at swarm size `n`, mixed from `master`.
pub fn derive_seed(master: u64, n: usize, rep: usize) -> u64 {
    let mut z = master ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (rep as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub f: f64,
    pub controller: Controller,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    pub repetitions: usize,
    #[serde(default)]
    pub interference: bool,
    pub master_seed: u64,
    #[serde(default = "default_max_timesteps")]
    pub max_timesteps: u64,
    #[serde(default)]
    pub motion: MotionParams,
}

fn default_max_timesteps() -> u64 {
    DEFAULT_MAX_TIMESTEPS
}

impl ExperimentConfig {
    pub fn new(geometry: Geometry, f: f64, controller: Controller, n_list: Vec<usize>, repetitions: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            geometry,
            f,
            controller,
            n: None,
            n_list: Some(n_list),
            repetitions,
            interference: false,
            master_seed,
            max_timesteps: DEFAULT_MAX_TIMESTEPS,
            motion: MotionParams::default(),
        }
    }

    /// Swarm sizes: `n_list` if present, then `n`.
    pub fn sizes(&self) -> Result<Vec<usize>> {
        let mut sizes = self.n_list.clone().unwrap_or_default();
        if let Some(n) = self.n {
            if !sizes.contains(&n) {
                sizes.push(n);
            }
        }
        if sizes.is_empty() {
            return Err(SimError::EmptySizes);
        }
        if sizes.contains(&0) {
            return Err(SimError::EmptySwarm);
        }
        Ok(sizes)
    }

    pub fn run_spec(&self, n: usize, rep: usize) -> RunSpec {
        RunSpec {
            interference: self.interference,
            max_timesteps: self.max_timesteps,
            motion: self.motion,
            ..RunSpec::new(self.geometry, self.f, self.controller, n, derive_seed(self.master_seed, n, rep))
        }
    }
}

/// One line of the batch output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub geometry: Geometry,
    pub f: f64,
    pub controller: Controller,
    pub interference: bool,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// `white` or `black`.
    pub decision: String,
    pub correct: bool,
    pub steps: u64,
    pub individual_correct_count: usize,
    pub individual_total: usize,
    pub converged: bool,
}

/// Every `(n, repetition)` run of `config`, ordered by size then repetition.
pub fn run_batch(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    if config.repetitions == 0 {
        return Err(SimError::NoRepetitions);
    }
    let sizes = config.sizes()?;
    let jobs: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..config.repetitions).map(move |rep| (n, rep)))
        .collect();
    jobs.par_iter()
        .map(|&(n, rep)| {
            let spec = config.run_spec(n, rep);
            let out = run_experiment(&spec)?;
            Ok(RunRecord {
                geometry: config.geometry,
                f: config.f,
                controller: config.controller,
                interference: config.interference,
                n,
                rep,
                seed: spec.seed,
                decision: if out.decision { "white" } else { "black" }.to_string(),
                correct: out.correct,
                steps: out.steps,
                individual_correct_count: out.individual_correct_count(),
                individual_total: out.individual_estimates.len(),
                converged: out.converged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    /// Fraction of converged runs whose decision was correct.
    pub accuracy: f64,
    pub standard_error: f64,
    pub converged_runs: usize,
    pub non_converged_runs: usize,
    /// Pooled fraction of correct initial individual estimates.
    pub individual_accuracy: f64,
}

/// Group accuracy per swarm size, in the order the sizes first appear.
pub fn summarize(records: &[RunRecord]) -> Vec<CurvePoint> {
    let mut sizes: Vec<usize> = Vec::new();
    for r in records {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
    }
    sizes
        .into_iter()
        .map(|n| {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.n == n).collect();
            let converged: Vec<&&RunRecord> = runs.iter().filter(|r| r.converged).collect();
            let m = converged.len();
            let accuracy = if m == 0 {
                f64::NAN
            } else {
                converged.iter().filter(|r| r.correct).count() as f64 / m as f64
            };
            let (ic, it) = runs
                .iter()
                .fold((0, 0), |(c, t), r| (c + r.individual_correct_count, t + r.individual_total));
            CurvePoint {
                n,
                accuracy,
                standard_error: (accuracy * (1.0 - accuracy) / m.max(1) as f64).sqrt(),
                converged_runs: m,
                non_converged_runs: runs.len() - m,
                individual_accuracy: ic as f64 / it.max(1) as f64,
            }
        })
        .collect()
}

pub fn scalability_curve(config: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    Ok(summarize(&run_batch(config)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimate {
    pub p: f64,
    /// Binomial standard error of the pooled estimate.
    pub standard_error: f64,
    pub correct: usize,
    pub total: usize,
}

/// Pooled individual accuracy over `repetitions` runs of `robots_per_run`
/// non-interfering robots each.
pub fn estimate_individual_accuracy(
    geometry: Geometry,
    f: f64,
    repetitions: usize,
    robots_per_run: usize,
    master_seed: u64,
    motion: &MotionParams,
) -> Result<AccuracyEstimate> {
    let config = ExperimentConfig {
        motion: *motion,
        ..ExperimentConfig::new(geometry, f, Controller::Centralized, vec![robots_per_run], repetitions, master_seed)
    };
    let records = run_batch(&config)?;
    let correct: usize = records.iter().map(|r| r.individual_correct_count).sum();
    let total: usize = records.iter().map(|r| r.individual_total).sum();
    let p = correct as f64 / total as f64;
    Ok(AccuracyEstimate {
        p,
        standard_error: (p * (1.0 - p) / total as f64).sqrt(),
        correct,
        total,
    })
}
