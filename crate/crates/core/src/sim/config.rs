use std::fmt::Write as _;

use super::SimError;
use crate::model::DelayModel;
use crate::orchestrator::{ExactLimits, OrchestratorKind};
use crate::predictor::{AgentConfig, EpsilonSchedule, PredictorKind};
use crate::topology::TopologyParams;
use crate::workload::{Mobility, ScenarioParams};

pub const CONFIG_HEADER: &str = "ascetic-cfg v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Nodes,
    Requests,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Nodes => "nodes",
            SweepAxis::Requests => "requests",
        }
    }
}

/// Agent hyperparameters shared by every PoA; the service count comes from
/// the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTemplate {
    pub z: usize,
    pub window: usize,
    pub hidden: usize,
    pub gamma: f64,
    pub lr: f64,
    pub memory: usize,
    pub batch: usize,
    pub target_sync: usize,
    pub epsilon: EpsilonSchedule,
}

impl Default for AgentTemplate {
    fn default() -> Self {
        let d = AgentConfig::new(1, 1);
        AgentTemplate {
            z: 3,
            window: d.window,
            hidden: d.hidden,
            gamma: d.gamma,
            lr: d.lr,
            memory: d.memory,
            batch: d.batch,
            target_sync: d.target_sync,
            epsilon: d.epsilon,
        }
    }
}

impl AgentTemplate {
    pub fn for_services(&self, services: usize) -> AgentConfig {
        AgentConfig {
            window: self.window,
            hidden: self.hidden,
            gamma: self.gamma,
            lr: self.lr,
            memory: self.memory,
            batch: self.batch,
            target_sync: self.target_sync,
            epsilon: self.epsilon,
            // more picks than services would be meaningless
            ..AgentConfig::new(services, self.z.min(services))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub nodes: usize,
    pub tiers: usize,
    pub topology: TopologyParams,
    pub scenario: ScenarioParams,
    pub delay_model: DelayModel,
    pub orchestrators: Vec<OrchestratorKind>,
    pub predictor: PredictorKind,
    pub agent: AgentTemplate,
    pub seed: u64,
    pub repetitions: usize,
    pub axis: Option<SweepAxis>,
    pub axis_values: Vec<usize>,
    pub exact_limits: ExactLimits,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            nodes: 20,
            tiers: 3,
            topology: TopologyParams::default(),
            scenario: ScenarioParams::default(),
            delay_model: DelayModel::default(),
            orchestrators: vec![OrchestratorKind::Wise, OrchestratorKind::Random, OrchestratorKind::Ccam],
            predictor: PredictorKind::Ddql,
            agent: AgentTemplate::default(),
            seed: 1,
            repetitions: 10,
            axis: None,
            axis_values: Vec::new(),
            exact_limits: ExactLimits::default(),
        }
    }
}

fn pair<T: std::fmt::Display>(p: (T, T)) -> String {
    format!("{},{}", p.0, p.1)
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Node and request counts for one sweep cell.
    pub fn cell(&self, axis_value: Option<usize>) -> ExperimentConfig {
        let mut c = self.clone();
        match (self.axis, axis_value) {
            (Some(SweepAxis::Nodes), Some(v)) => c.nodes = v,
            (Some(SweepAxis::Requests), Some(v)) => c.scenario.requests = v,
            _ => {}
        }
        c
    }

    /// Seeds of the repetitions: `seed, seed + 1, ...`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repetitions as u64).map(|k| self.seed.wrapping_add(k)).collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config { line: 0, reason: m });
        if self.orchestrators.is_empty() {
            return bad("no orchestrators".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive".into());
        }
        if self.axis.is_some() && self.axis_values.is_empty() {
            return bad("a sweep axis needs at least one value".into());
        }
        self.scenario.validate().map_err(|e| SimError::Config { line: 0, reason: e.to_string() })?;
        self.agent.for_services(self.scenario.services).validate().map_err(|e| SimError::Config { line: 0, reason: e.to_string() })?;
        if self.orchestrators.contains(&OrchestratorKind::Exact) {
            let cells: Vec<Option<usize>> =
                if self.axis.is_some() { self.axis_values.iter().map(|&v| Some(v)).collect() } else { vec![None] };
            for v in cells {
                let c = self.cell(v);
                let l = &self.exact_limits;
                for (what, value, limit) in [
                    ("requests", c.scenario.requests, l.max_requests),
                    ("horizon", c.scenario.horizon, l.max_horizon),
                    ("nodes", c.nodes, l.max_nodes),
                    ("services", c.scenario.services, l.max_services),
                    ("instances_per_service", c.scenario.instances_per_service, l.max_instances_per_service),
                    ("paths_per_pair", c.topology.paths_per_pair, l.max_paths_per_pair),
                ] {
                    if value > limit {
                        return bad(format!("exact orchestrator needs {what} <= {limit}, got {value}"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let t = &self.topology;
        let s = &self.scenario;
        let a = &self.agent;
        let mut out = format!("{CONFIG_HEADER}\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("nodes", self.nodes.to_string());
        kv("tiers", self.tiers.to_string());
        kv("link_count_factor", pair(t.link_count_factor));
        kv("link_cost", pair(t.link_cost));
        kv("link_capacity", pair(t.link_capacity));
        kv("node_cost_base", t.node_cost_base.to_string());
        kv("node_capacity_scale", t.node_capacity_scale.to_string());
        kv("paths_per_pair", t.paths_per_pair.to_string());
        kv("max_hops", t.max_hops.map_or("auto".into(), |h| h.to_string()));
        kv("services", s.services.to_string());
        kv("instances_per_service", s.instances_per_service.to_string());
        kv("requests", s.requests.to_string());
        kv("horizon", s.horizon.to_string());
        kv(
            "mobility",
            match s.mobility {
                Mobility::Static => "static".into(),
                Mobility::Markov { self_loop } => format!("markov:{self_loop}"),
                Mobility::Cyclic { period } => format!("cyclic:{period}"),
            },
        );
        kv("min_capacity", pair(s.qos.min_capacity));
        kv("min_bandwidth", pair(s.qos.min_bandwidth));
        kv("burstiness", pair(s.qos.burstiness));
        kv("max_packet", pair(s.qos.max_packet));
        kv("max_delay", pair(s.qos.max_delay));
        kv("instance_capacity_scale", s.instance_capacity_scale.to_string());
        kv("instance_capacity_alpha", s.instance_capacity_alpha.to_string());
        kv("instance_cost_base", s.instance_cost_base.to_string());
        kv("instance_cost_alpha", s.instance_cost_alpha.to_string());
        kv("arrival_window", s.arrival_window.map_or("all".into(), |w| w.to_string()));
        kv("sla_factor", s.sla_factor.to_string());
        kv("delay_model", self.delay_model.to_string());
        kv("orchestrators", list(&self.orchestrators));
        kv("predictor", self.predictor.to_string());
        kv("z", a.z.to_string());
        kv("window", a.window.to_string());
        kv("hidden", a.hidden.to_string());
        kv("gamma", a.gamma.to_string());
        kv("lr", a.lr.to_string());
        kv("memory", a.memory.to_string());
        kv("batch", a.batch.to_string());
        kv("target_sync", a.target_sync.to_string());
        kv("epsilon", a.epsilon.epsilon.to_string());
        kv("epsilon_decrement", a.epsilon.decrement.to_string());
        kv("epsilon_floor", a.epsilon.floor.to_string());
        kv("seed", self.seed.to_string());
        kv("repetitions", self.repetitions.to_string());
        kv("axis", self.axis.map_or("none", |a| a.name()).to_string());
        kv("axis_values", list(&self.axis_values));
        out
    }

    /// Parses the key-value format. Missing keys keep their defaults; `#`
    /// starts a comment.
    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or_default().trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, l)) if l == CONFIG_HEADER => {}
            Some((n, l)) => {
                return Err(SimError::Config { line: n, reason: format!("expected header {CONFIG_HEADER:?}, found {l:?}") })
            }
            None => return Err(SimError::Config { line: 0, reason: "empty config".into() }),
        }
        let mut c = ExperimentConfig::default();
        for (n, line) in lines {
            let err = |reason: String| SimError::Config { line: n, reason };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
            c.set(k.trim(), v.trim()).map_err(err)?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("bad value {v:?}: {e}"))
        }
        fn two<T: std::str::FromStr>(v: &str) -> Result<(T, T), String>
        where
            T::Err: std::fmt::Display,
        {
            let (a, b) = v.split_once(',').ok_or_else(|| format!("expected lo,hi, found {v:?}"))?;
            Ok((num(a.trim())?, num(b.trim())?))
        }
        fn many<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String>
        where
            T::Err: std::fmt::Display,
        {
            v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(num).collect()
        }
        let (t, s, a) = (&mut self.topology, &mut self.scenario, &mut self.agent);
        match key {
            "nodes" => self.nodes = num(v)?,
            "tiers" => self.tiers = num(v)?,
            "link_count_factor" => t.link_count_factor = two(v)?,
            "link_cost" => t.link_cost = two(v)?,
            "link_capacity" => t.link_capacity = two(v)?,
            "node_cost_base" => t.node_cost_base = num(v)?,
            "node_capacity_scale" => t.node_capacity_scale = num(v)?,
            "paths_per_pair" => t.paths_per_pair = num(v)?,
            "max_hops" => t.max_hops = if v == "auto" { None } else { Some(num(v)?) },
            "services" => s.services = num(v)?,
            "instances_per_service" => s.instances_per_service = num(v)?,
            "requests" => s.requests = num(v)?,
            "horizon" => s.horizon = num(v)?,
            "mobility" => {
                s.mobility = match v.split_once(':') {
                    None if v == "static" => Mobility::Static,
                    Some(("markov", p)) => Mobility::Markov { self_loop: num(p)? },
                    Some(("cyclic", p)) => Mobility::Cyclic { period: num(p)? },
                    _ => return Err(format!("unknown mobility {v:?} (static, markov:P or cyclic:K)")),
                }
            }
            "min_capacity" => s.qos.min_capacity = two(v)?,
            "min_bandwidth" => s.qos.min_bandwidth = two(v)?,
            "burstiness" => s.qos.burstiness = two(v)?,
            "max_packet" => s.qos.max_packet = two(v)?,
            "max_delay" => s.qos.max_delay = two(v)?,
            "instance_capacity_scale" => s.instance_capacity_scale = num(v)?,
            "instance_capacity_alpha" => s.instance_capacity_alpha = num(v)?,
            "instance_cost_base" => s.instance_cost_base = num(v)?,
            "instance_cost_alpha" => s.instance_cost_alpha = num(v)?,
            "arrival_window" => s.arrival_window = if v == "all" { None } else { Some(num(v)?) },
            "sla_factor" => s.sla_factor = num(v)?,
            "delay_model" => self.delay_model = v.parse()?,
            "orchestrators" => self.orchestrators = many(v)?,
            "predictor" => self.predictor = v.parse()?,
            "z" => a.z = num(v)?,
            "window" => a.window = num(v)?,
            "hidden" => a.hidden = num(v)?,
            "gamma" => a.gamma = num(v)?,
            "lr" => a.lr = num(v)?,
            "memory" => a.memory = num(v)?,
            "batch" => a.batch = num(v)?,
            "target_sync" => a.target_sync = num(v)?,
            "epsilon" => a.epsilon.epsilon = num(v)?,
            "epsilon_decrement" => a.epsilon.decrement = num(v)?,
            "epsilon_floor" => a.epsilon.floor = num(v)?,
            "seed" => self.seed = num(v)?,
            "repetitions" => self.repetitions = num(v)?,
            "axis" => {
                self.axis = match v {
                    "none" => None,
                    "nodes" => Some(SweepAxis::Nodes),
                    "requests" => Some(SweepAxis::Requests),
                    _ => return Err(format!("unknown axis {v:?} (none, nodes or requests)")),
                }
            }
            "axis_values" => self.axis_values = many(v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }
}
