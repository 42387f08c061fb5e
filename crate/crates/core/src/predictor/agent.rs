use std::collections::{BTreeSet, VecDeque};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{clip_grad_norm, Adam, QNetwork};
use super::{double_q_target, random_subset, reward, top_z, EpsilonSchedule, PredictorError};
use crate::ids::ServiceId;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub services: usize,
    /// Observation window m, in slots.
    pub window: usize,
    /// Services predicted per slot.
    pub z: usize,
    pub hidden: usize,
    pub gamma: f64,
    pub lr: f64,
    pub memory: usize,
    pub batch: usize,
    /// Train steps between hard target syncs.
    pub target_sync: usize,
    pub epsilon: EpsilonSchedule,
    pub init_scale: f64,
    pub clip_norm: f64,
}

impl AgentConfig {
    pub fn new(services: usize, z: usize) -> Self {
        AgentConfig {
            services,
            window: 8,
            z,
            hidden: 64,
            gamma: 0.9,
            lr: 1e-3,
            memory: 10_000,
            batch: 32,
            target_sync: 200,
            epsilon: EpsilonSchedule::default(),
            init_scale: 0.08,
            clip_norm: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        if self.z > self.services {
            return Err(PredictorError::TooManyPicks { z: self.z, services: self.services });
        }
        let bad = |what: &str| Err(PredictorError::InvalidConfig(what.to_string()));
        if self.services == 0 || self.z == 0 {
            return bad("services and z must be positive");
        }
        if self.window == 0 || self.hidden == 0 || self.memory == 0 || self.batch == 0 || self.target_sync == 0 {
            return bad("window, hidden, memory, batch and target_sync must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || self.lr <= 0.0 || self.clip_norm <= 0.0 || self.init_scale < 0.0 {
            return bad("gamma must be in [0, 1]; lr and clip_norm positive; init_scale non-negative");
        }
        EpsilonSchedule::new(self.epsilon.epsilon, self.epsilon.decrement, self.epsilon.floor)?;
        Ok(())
    }
}

/// `(θ_{τ−1}, α_{τ−1}, ρ_τ, θ_τ)`; windows are flattened oldest slot first.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Box<[bool]>,
    pub action: Vec<ServiceId>,
    pub reward: usize,
    pub next: Box<[bool]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory { capacity: capacity.max(1), items: Vec::new(), next: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` items drawn uniformly with replacement.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<&Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }
}

/// What one slot of [`DdqlAgent::step`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentStep {
    /// Services predicted for the next slot.
    pub prediction: Vec<ServiceId>,
    /// Hits of the previous prediction against this slot's arrivals.
    pub reward: Option<usize>,
    pub loss: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct DdqlAgent {
    pub(super) config: AgentConfig,
    pub(super) online: QNetwork,
    pub(super) target: QNetwork,
    adam: Adam,
    memory: ReplayMemory,
    pub(super) window: VecDeque<Vec<bool>>,
    pub(super) tau: usize,
    last_action: Option<Vec<ServiceId>>,
    pub(super) train_steps: usize,
    pub(super) epsilon: EpsilonSchedule,
    rng: ChaCha8Rng,
    learning: bool,
}

impl DdqlAgent {
    pub fn new(config: AgentConfig, seed: u64) -> Result<Self, PredictorError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = QNetwork::new(config.services, config.hidden, config.init_scale, &mut rng);
        Ok(Self::from_parts(config, online, None, seed))
    }

    pub(super) fn from_parts(config: AgentConfig, online: QNetwork, target: Option<QNetwork>, seed: u64) -> Self {
        let target = target.unwrap_or_else(|| online.clone());
        DdqlAgent {
            adam: Adam::new(&online, config.lr),
            memory: ReplayMemory::new(config.memory),
            window: VecDeque::with_capacity(config.window),
            tau: 0,
            last_action: None,
            train_steps: 0,
            epsilon: config.epsilon,
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9)),
            learning: true,
            online,
            target,
            config,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.epsilon
    }

    /// Slots observed so far.
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn train_steps(&self) -> usize {
        self.train_steps
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn is_warm(&self) -> bool {
        self.tau >= self.config.window
    }

    /// Frozen agents act greedily and neither store, train nor anneal.
    pub fn set_learning(&mut self, learning: bool) {
        self.learning = learning;
    }

    /// The window as observed, oldest slot first (at most m entries).
    pub fn window(&self) -> Vec<BTreeSet<ServiceId>> {
        self.window
            .iter()
            .map(|v| v.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| ServiceId(i)).collect())
            .collect()
    }

    /// Window flattened to `m * services`, zero-padded at the old end.
    fn flat_window(&self) -> Box<[bool]> {
        let (m, s) = (self.config.window, self.config.services);
        let mut out = vec![false; m * s];
        let pad = m - self.window.len();
        for (k, v) in self.window.iter().enumerate() {
            out[(pad + k) * s..(pad + k + 1) * s].copy_from_slice(v);
        }
        out.into_boxed_slice()
    }

    fn inputs(&self, states: &[&[bool]]) -> Vec<Array2<f64>> {
        let (m, s) = (self.config.window, self.config.services);
        (0..m)
            .map(|t| {
                Array2::from_shape_fn((s, states.len()), |(i, b)| if states[b][t * s + i] { 1.0 } else { 0.0 })
            })
            .collect()
    }

    /// Online Q-values for the current window.
    pub fn q_values(&self) -> Vec<f64> {
        let w = self.flat_window();
        self.online.forward(&self.inputs(&[&w])).q.column(0).to_vec()
    }

    /// Shifts the window and, if a prediction for this slot exists, scores
    /// it and stores the transition. Returns the reward.
    pub fn observe(&mut self, arrivals: &BTreeSet<ServiceId>) -> Option<usize> {
        let prev_full = self.is_warm();
        let prev = self.flat_window();
        let mut v = vec![false; self.config.services];
        for s in arrivals {
            if let Some(b) = v.get_mut(s.0) {
                *b = true;
            }
        }
        if self.window.len() == self.config.window {
            self.window.pop_front();
        }
        self.window.push_back(v);
        self.tau += 1;
        let action = self.last_action.take()?;
        let rho = reward(&action, arrivals);
        if self.learning && prev_full {
            self.memory.push(Transition { state: prev, action, reward: rho, next: self.flat_window() });
        }
        Some(rho)
    }

    /// ε-greedy top-z choice; uniformly random before the window fills.
    pub fn act(&mut self) -> Result<Vec<ServiceId>, PredictorError> {
        let (s, z) = (self.config.services, self.config.z);
        let greedy = self.is_warm() && (!self.learning || self.rng.gen::<f64>() > self.epsilon.epsilon);
        let action = if greedy { top_z(&self.q_values(), z)? } else { random_subset(&mut self.rng, s, z)? };
        self.last_action = Some(action.clone());
        Ok(action)
    }

    /// One gradient step on `batch`; returns the mean squared TD error.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<f64, PredictorError> {
        if batch.is_empty() {
            return Err(PredictorError::EmptyBatch);
        }
        let nexts: Vec<&[bool]> = batch.iter().map(|t| &*t.next).collect();
        let next_in = self.inputs(&nexts);
        let q_on = self.online.forward(&next_in).q;
        let q_tg = self.target.forward(&next_in).q;
        let (z, gamma) = (self.config.z, self.config.gamma);
        let targets: Vec<f64> = (0..batch.len())
            .map(|b| {
                let on = q_on.column(b).to_vec();
                let tg = q_tg.column(b).to_vec();
                double_q_target(batch[b].reward, z, gamma, &on, &tg)
            })
            .collect();

        let states: Vec<&[bool]> = batch.iter().map(|t| &*t.state).collect();
        let fwd = self.online.forward(&self.inputs(&states));
        let terms: usize = batch.iter().map(|t| t.action.len()).sum::<usize>().max(1);
        let mut dq = Array2::<f64>::zeros(fwd.q.raw_dim());
        let mut loss = 0.0;
        for (b, t) in batch.iter().enumerate() {
            for a in &t.action {
                let d = fwd.q[[a.0, b]] - targets[b];
                loss += d * d;
                dq[[a.0, b]] += 2.0 * d / terms as f64;
            }
        }
        loss /= terms as f64;
        if !loss.is_finite() {
            return Err(PredictorError::NonFiniteLoss { step: self.train_steps + 1 });
        }
        let mut g = self.online.backward(&fwd, &dq);
        clip_grad_norm(&mut g, self.config.clip_norm);
        self.adam.step(&mut self.online, &g);
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.config.target_sync) {
            self.target = self.online.clone();
        }
        Ok(loss)
    }

    /// Samples a batch from replay and trains on it, if anything is stored.
    pub fn train(&mut self) -> Result<Option<f64>, PredictorError> {
        if self.memory.is_empty() {
            return Ok(None);
        }
        let idx: Vec<usize> = (0..self.config.batch).map(|_| self.rng.gen_range(0..self.memory.len())).collect();
        let memory = std::mem::replace(&mut self.memory, ReplayMemory::new(1));
        let batch: Vec<&Transition> = idx.iter().map(|&i| &memory.items[i]).collect();
        let res = self.train_step(&batch);
        self.memory = memory;
        res.map(Some)
    }

    /// One slot: observe arrivals, predict the next slot, then train and
    /// anneal when warm.
    pub fn step(&mut self, arrivals: &BTreeSet<ServiceId>) -> Result<AgentStep, PredictorError> {
        let reward = self.observe(arrivals);
        let prediction = self.act()?;
        let mut loss = None;
        if self.learning && self.is_warm() {
            loss = self.train()?;
            self.epsilon = self.epsilon.step();
        }
        Ok(AgentStep { prediction, reward, loss, epsilon: self.epsilon.epsilon })
    }
}
