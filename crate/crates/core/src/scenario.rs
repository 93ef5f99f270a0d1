//! System-identification data streams.
//!
//! The measurement model is `d(i) = u_i^T w^o_i + v(i)` where `u_i` is a
//! tapped delay line over a scalar Gaussian process (white, or first-order
//! autoregressive), `v(i)` is white Gaussian noise and the plant follows the
//! random walk `w^o_i = w^o_{i-1} + q_i` with `E q q^T = sigma_q^2 I`.
//!
//! Every signal role (input, noise, walk, plant draw) gets its own ChaCha
//! stream keyed by the scenario seed; the realization index selects the stream
//! number, so a realization is a pure function of `(seed, realization)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial plant `w^o_{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlantInit", into = "RawPlantInit")]
pub enum PlantInit {
    /// Gaussian draw from the scenario seed, scaled to unit norm. Shared by
    /// every realization of the scenario.
    SeededUnitNorm,
    Explicit(Vec<f64>),
}

const SEEDED_UNIT_NORM: &str = "seeded-unit-norm";

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawPlantInit {
    Directive(String),
    Values(Vec<f64>),
}

impl TryFrom<RawPlantInit> for PlantInit {
    type Error = String;

    fn try_from(raw: RawPlantInit) -> std::result::Result<Self, String> {
        match raw {
            RawPlantInit::Directive(s) if s == SEEDED_UNIT_NORM => Ok(PlantInit::SeededUnitNorm),
            RawPlantInit::Directive(s) => Err(format!(
                "unknown true_system_init directive {s:?} (expected \"{SEEDED_UNIT_NORM}\" or a list of coefficients)"
            )),
            RawPlantInit::Values(v) => Ok(PlantInit::Explicit(v)),
        }
    }
}

impl From<PlantInit> for RawPlantInit {
    fn from(init: PlantInit) -> Self {
        match init {
            PlantInit::SeededUnitNorm => RawPlantInit::Directive(SEEDED_UNIT_NORM.to_string()),
            PlantInit::Explicit(v) => RawPlantInit::Values(v),
        }
    }
}

/// Full description of a system-identification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// `M`, number of taps of the plant and of the filters.
    pub filter_length: usize,
    /// Stationary variance of the scalar input process.
    pub input_variance: f64,
    /// AR(1) coefficient `gamma`; zero gives white input.
    #[serde(default)]
    pub ar_coefficient: f64,
    pub noise_variance: f64,
    /// `(start_iteration, sigma_q^2)` pairs, first entry at iteration 0.
    #[serde(default = "stationary_schedule")]
    pub process_noise_schedule: Vec<(u64, f64)>,
    #[serde(default = "seeded_unit_norm")]
    pub true_system_init: PlantInit,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
}

fn stationary_schedule() -> Vec<(u64, f64)> {
    vec![(0, 0.0)]
}

fn seeded_unit_norm() -> PlantInit {
    PlantInit::SeededUnitNorm
}

impl ScenarioConfig {
    /// White, stationary scenario with unit input variance and `sigma_v^2 = 1e-2`.
    pub fn new(filter_length: usize, horizon: usize) -> Self {
        Self {
            filter_length,
            input_variance: 1.0,
            ar_coefficient: 0.0,
            noise_variance: 1e-2,
            process_noise_schedule: stationary_schedule(),
            true_system_init: PlantInit::SeededUnitNorm,
            horizon,
            seed: 0,
        }
    }

    pub fn with_input(mut self, input_variance: f64, ar_coefficient: f64) -> Self {
        self.input_variance = input_variance;
        self.ar_coefficient = ar_coefficient;
        self
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    /// Constant random-walk variance from iteration 0 on.
    pub fn with_random_walk(mut self, variance: f64) -> Self {
        self.process_noise_schedule = vec![(0, variance)];
        self
    }

    pub fn with_schedule(mut self, schedule: Vec<(u64, f64)>) -> Self {
        self.process_noise_schedule = schedule;
        self
    }

    pub fn with_plant(mut self, init: PlantInit) -> Self {
        self.true_system_init = init;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.filter_length == 0 {
            problems.push("filter_length must be at least 1".to_string());
        }
        if !(self.input_variance.is_finite() && self.input_variance > 0.0) {
            problems.push(format!("input_variance must be positive, got {}", self.input_variance));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            problems.push(format!("ar_coefficient must lie in [0, 1), got {}", self.ar_coefficient));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            problems.push(format!("noise_variance must be nonnegative, got {}", self.noise_variance));
        }
        match self.process_noise_schedule.first() {
            None => problems.push("process_noise_schedule must not be empty".to_string()),
            Some(&(start, _)) if start != 0 => {
                problems.push(format!("process_noise_schedule must start at iteration 0, starts at {start}"))
            }
            _ => {}
        }
        for pair in self.process_noise_schedule.windows(2) {
            if pair[1].0 <= pair[0].0 {
                problems.push(format!(
                    "process_noise_schedule start iterations must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                ));
            }
        }
        for &(start, var) in &self.process_noise_schedule {
            if !(var.is_finite() && var >= 0.0) {
                problems.push(format!("process noise variance at iteration {start} must be nonnegative, got {var}"));
            }
        }
        if let PlantInit::Explicit(w) = &self.true_system_init {
            if w.len() != self.filter_length {
                problems.push(format!(
                    "true_system_init has {} coefficients, filter_length is {}",
                    w.len(),
                    self.filter_length
                ));
            }
            if w.iter().any(|x| !x.is_finite()) {
                problems.push("true_system_init contains non-finite coefficients".to_string());
            }
        }
        if self.horizon == 0 {
            problems.push("horizon must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Random-walk variance in force at iteration `i`.
    pub fn process_noise_at(&self, i: u64) -> f64 {
        let idx = self.process_noise_schedule.partition_point(|&(start, _)| start <= i);
        if idx == 0 {
            0.0
        } else {
            self.process_noise_schedule[idx - 1].1
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.process_noise_schedule.iter().all(|&(_, v)| v == 0.0)
    }

    pub fn is_white(&self) -> bool {
        self.ar_coefficient == 0.0
    }

    /// `tr(R_u) = M sigma_u^2`.
    pub fn trace_ru(&self) -> f64 {
        self.filter_length as f64 * self.input_variance
    }

    /// Regressor covariance of the delay line, `sigma_u^2 gamma^|j-k|`.
    pub fn regressor_covariance(&self) -> DMatrix<f64> {
        let m = self.filter_length;
        DMatrix::from_fn(m, m, |j, k| {
            let lag = j.abs_diff(k) as i32;
            self.input_variance * self.ar_coefficient.powi(lag)
        })
    }

    /// The plant at iteration -1.
    pub fn initial_plant(&self) -> Result<Vec<f64>> {
        match &self.true_system_init {
            PlantInit::Explicit(w) => {
                crate::error::check_len(self.filter_length, w.len())?;
                Ok(w.clone())
            }
            PlantInit::SeededUnitNorm => {
                let mut rng = role_rng(self.seed, Role::Plant, 0);
                loop {
                    let w: Vec<f64> = (0..self.filter_length).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        return Ok(w.into_iter().map(|x| x / norm).collect());
                    }
                }
            }
        }
    }
}

/// Plant at one iteration together with the walk variance in force.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub coefficients: Vec<f64>,
    pub process_noise: f64,
}

/// One owned sample of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub iteration: u64,
    pub regressor: Vec<f64>,
    pub desired: f64,
    pub plant: Vec<f64>,
}

/// Borrowed view of the current sample, valid until the next advance.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub iteration: u64,
    pub regressor: &'a [f64],
    pub desired: f64,
    pub plant: &'a [f64],
}

impl Sample<'_> {
    pub fn to_record(&self) -> SampleRecord {
        SampleRecord {
            iteration: self.iteration,
            regressor: self.regressor.to_vec(),
            desired: self.desired,
            plant: self.plant.to_vec(),
        }
    }
}

/// One AR(1) step, `gamma prev + sqrt(1 - gamma^2) x` with `x = innovation sqrt(sigma_u^2)`.
///
/// The output process has stationary variance `sigma_u^2`; `gamma = 0` gives
/// white samples.
pub fn ar1_step(prev: f64, gamma: f64, innovation: f64, input_variance: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("AR coefficient must lie in [0, 1), got {gamma}")));
    }
    if !(input_variance > 0.0) {
        return Err(Error::Domain(format!("input variance must be positive, got {input_variance}")));
    }
    let x = innovation * input_variance.sqrt();
    Ok(gamma * prev + (1.0 - gamma * gamma).sqrt() * x)
}

/// `w_prev + q` with `q ~ N(0, variance I)`. A zero variance returns `w_prev` untouched.
pub fn random_walk_step<R: Rng + ?Sized>(w_prev: &[f64], variance: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut w = w_prev.to_vec();
    walk_in_place(&mut w, variance, rng)?;
    Ok(w)
}

fn walk_in_place<R: Rng + ?Sized>(w: &mut [f64], variance: f64, rng: &mut R) -> Result<()> {
    if !(variance >= 0.0) {
        return Err(Error::Domain(format!("random walk variance must be nonnegative, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(());
    }
    let std = variance.sqrt();
    for wk in w.iter_mut() {
        let q: f64 = rng.sample(StandardNormal);
        *wk += std * q;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Role {
    Input = 0,
    Noise = 1,
    Walk = 2,
    Plant = 3,
}

fn role_rng(seed: u64, role: Role, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = role as u8;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Deterministic generator of one realization.
#[derive(Debug, Clone)]
pub struct Stream {
    gamma: f64,
    input_variance: f64,
    noise_std: f64,
    schedule: Vec<(u64, f64)>,
    horizon: u64,
    input_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    walk_rng: ChaCha8Rng,
    last_input: Option<f64>,
    regressor: Vec<f64>,
    plant: Vec<f64>,
    desired: f64,
    next: u64,
}

/// Stream of `cfg.horizon` samples for realization `realization`.
pub fn generate_stream(cfg: &ScenarioConfig, realization: u64) -> Result<Stream> {
    Stream::new(cfg, realization)
}

impl Stream {
    pub fn new(cfg: &ScenarioConfig, realization: u64) -> Result<Self> {
        cfg.validate()?;
        let plant = cfg.initial_plant()?;
        let mut stream = Self {
            gamma: cfg.ar_coefficient,
            input_variance: cfg.input_variance,
            noise_std: cfg.noise_variance.sqrt(),
            schedule: cfg.process_noise_schedule.clone(),
            horizon: cfg.horizon as u64,
            input_rng: role_rng(cfg.seed, Role::Input, realization),
            noise_rng: role_rng(cfg.seed, Role::Noise, realization),
            walk_rng: role_rng(cfg.seed, Role::Walk, realization),
            last_input: None,
            regressor: vec![0.0; cfg.filter_length],
            plant,
            desired: 0.0,
            next: 0,
        };
        // pre-roll so that u_0 is a full regressor
        for _ in 1..cfg.filter_length {
            let u = stream.next_input();
            stream.push_input(u);
        }
        Ok(stream)
    }

    fn next_input(&mut self) -> f64 {
        let z: f64 = self.input_rng.sample(StandardNormal);
        match self.last_input {
            None => z * self.input_variance.sqrt(),
            // parameters were validated at construction
            Some(prev) => ar1_step(prev, self.gamma, z, self.input_variance).unwrap_or(f64::NAN),
        }
    }

    fn push_input(&mut self, u: f64) {
        self.last_input = Some(u);
        self.regressor.rotate_right(1);
        self.regressor[0] = u;
    }

    fn walk_variance(&self, i: u64) -> f64 {
        let idx = self.schedule.partition_point(|&(start, _)| start <= i);
        if idx == 0 {
            0.0
        } else {
            self.schedule[idx - 1].1
        }
    }

    /// Produces the next sample, or `None` past the horizon.
    pub fn advance(&mut self) -> Option<Sample<'_>> {
        if self.next >= self.horizon {
            return None;
        }
        let i = self.next;
        self.next += 1;
        let u = self.next_input();
        self.push_input(u);
        let var = self.walk_variance(i);
        // variance was validated at construction
        let _ = walk_in_place(&mut self.plant, var, &mut self.walk_rng);
        let v: f64 = self.noise_rng.sample(StandardNormal);
        self.desired = crate::dot(&self.regressor, &self.plant) + self.noise_std * v;
        Some(Sample { iteration: i, regressor: &self.regressor, desired: self.desired, plant: &self.plant })
    }

    /// Plant after the most recent sample (the initial plant before the first).
    pub fn plant_state(&self) -> PlantState {
        let last = self.next.saturating_sub(1);
        PlantState { coefficients: self.plant.clone(), process_noise: self.walk_variance(last) }
    }

    pub fn remaining(&self) -> usize {
        (self.horizon - self.next) as usize
    }
}

impl Iterator for Stream {
    type Item = SampleRecord;

    fn next(&mut self) -> Option<SampleRecord> {
        self.advance().map(|s| s.to_record())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining();
        (n, Some(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_white_passes_innovation_through() {
        let x = 0.37;
        assert_eq!(ar1_step(0.7, 0.0, x, 1.0).unwrap(), x);
    }

    #[test]
    fn ar1_rejects_unit_coefficient() {
        assert!(matches!(ar1_step(1.0, 1.0, 0.1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ar1_step(1.0, -0.1, 0.1, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ar1_stationary_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut u: f64 = rng.sample(StandardNormal);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            u = ar1_step(u, 0.7, z, 1.0).unwrap();
            sum += u;
            sum_sq += u * u;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!((0.99..=1.01).contains(&var), "variance {var}");
    }

    #[test]
    fn random_walk_zero_variance_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_walk_step(&[1.0, 2.0], 0.0, &mut rng).unwrap(), vec![1.0, 2.0]);
        assert!(random_walk_step(&[1.0], -1.0, &mut rng).is_err());
    }

    #[test]
    fn random_walk_increment_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (m, var, n) = (5, 1e-5, 100_000);
        let zero = vec![0.0; m];
        let mut energy = 0.0;
        let mut mean = vec![0.0; m];
        for _ in 0..n {
            let q = random_walk_step(&zero, var, &mut rng).unwrap();
            energy += q.iter().map(|x| x * x).sum::<f64>();
            for (acc, x) in mean.iter_mut().zip(&q) {
                *acc += x;
            }
        }
        let energy = energy / n as f64;
        let expected = m as f64 * var;
        assert!((energy - expected).abs() <= 0.02 * expected, "E|q|^2 = {energy}");
        let bound = 3.0 * var.sqrt() / (n as f64).sqrt();
        for acc in mean {
            assert!((acc / n as f64).abs() < bound);
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let cfg = ScenarioConfig::new(4, 200).with_input(1.0, 0.5).with_random_walk(1e-4).with_seed(9);
        let a: Vec<_> = generate_stream(&cfg, 3).unwrap().collect();
        let b: Vec<_> = generate_stream(&cfg, 3).unwrap().collect();
        assert_eq!(a, b);
        let c: Vec<_> = generate_stream(&cfg, 4).unwrap().collect();
        assert_ne!(a, c);
        assert_eq!(a.len(), 200);
    }

    #[test]
    fn noiseless_stationary_measurements_are_exact() {
        let cfg = ScenarioConfig::new(6, 300).with_noise_variance(0.0);
        let w = cfg.initial_plant().unwrap();
        for s in generate_stream(&cfg, 0).unwrap() {
            assert_eq!(s.plant, w);
            assert_eq!(s.desired, crate::dot(&s.regressor, &w));
        }
    }

    #[test]
    fn delay_line_shifts() {
        let cfg = ScenarioConfig::new(5, 100).with_input(2.0, 0.7);
        let samples: Vec<_> = generate_stream(&cfg, 1).unwrap().collect();
        assert!(samples[0].regressor.iter().all(|&x| x != 0.0));
        for pair in samples.windows(2) {
            assert_eq!(pair[1].regressor[1..], pair[0].regressor[..4]);
        }
    }

    #[test]
    fn seeded_plant_has_unit_norm() {
        let w = ScenarioConfig::new(7, 1).with_seed(5).initial_plant().unwrap();
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_regressor_covariance_is_identity() {
        let m = 10;
        let n = 100_000;
        let cfg = ScenarioConfig::new(m, n).with_seed(21);
        let mut cov = vec![0.0; m * m];
        let mut stream = generate_stream(&cfg, 0).unwrap();
        while let Some(s) = stream.advance() {
            for j in 0..m {
                for k in 0..m {
                    cov[j * m + k] += s.regressor[j] * s.regressor[k];
                }
            }
        }
        for j in 0..m {
            for k in 0..m {
                let expected = if j == k { 1.0 } else { 0.0 };
                let got = cov[j * m + k] / n as f64;
                assert!((got - expected).abs() <= 0.02, "R[{j},{k}] = {got}");
            }
        }
    }

    #[test]
    fn schedule_selects_latest_entry() {
        let cfg = ScenarioConfig::new(2, 10).with_schedule(vec![(0, 1e-4), (2000, 1e-5), (4000, 1e-6)]);
        assert_eq!(cfg.process_noise_at(0), 1e-4);
        assert_eq!(cfg.process_noise_at(1999), 1e-4);
        assert_eq!(cfg.process_noise_at(2000), 1e-5);
        assert_eq!(cfg.process_noise_at(3999), 1e-5);
        assert_eq!(cfg.process_noise_at(10_000), 1e-6);
    }

    #[test]
    fn walk_follows_schedule() {
        let cfg = ScenarioConfig::new(3, 20).with_schedule(vec![(0, 0.0), (10, 1e-2)]);
        let samples: Vec<_> = generate_stream(&cfg, 0).unwrap().collect();
        let w0 = cfg.initial_plant().unwrap();
        assert!(samples[..10].iter().all(|s| s.plant == w0));
        assert!(samples[10..].windows(2).all(|p| p[0].plant != p[1].plant));
    }

    #[test]
    fn measurement_noise_moments() {
        let n = 50_000;
        let var = 0.25;
        let cfg = ScenarioConfig::new(3, n).with_noise_variance(var).with_seed(4);
        let w = cfg.initial_plant().unwrap();
        let (mut s1, mut s2) = (0.0, 0.0);
        for s in generate_stream(&cfg, 2).unwrap() {
            let v = s.desired - crate::dot(&s.regressor, &w);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / n as f64;
        let est = s2 / n as f64 - mean * mean;
        let tol = 3.0 / (n as f64).sqrt();
        assert!(mean.abs() < tol * var.sqrt());
        assert!((est - var).abs() / var < tol * 2f64.sqrt());
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut cfg = ScenarioConfig::new(0, 0).with_input(1.0, 1.0);
        cfg.process_noise_schedule = vec![(5, 1.0), (3, -1.0)];
        match cfg.validate() {
            Err(Error::Validation(p)) => assert_eq!(p.len(), 6, "{p:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ar_covariance_is_toeplitz() {
        let r = ScenarioConfig::new(3, 1).with_input(2.0, 0.5).regressor_covariance();
        assert_eq!(r[(0, 0)], 2.0);
        assert_eq!(r[(0, 2)], 0.5);
        assert_eq!(r[(2, 1)], 1.0);
    }
}
