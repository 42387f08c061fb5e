use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ExperimentConfig, SimError};
use crate::ids::{NodeId, ServiceId, Slot};
use crate::model::{check_constraints, Allocation, Model, SlotAllocation};
use crate::orchestrator::{
    ccam_place, exact_solve, random_place, wise_place, CcamPlanner, ExactConfig, OrchestratorKind, PredictionTable,
    RandomConfig, SlaLedger, WiseConfig,
};
use crate::predictor::{random_subset, Accuracy, DdqlAgent, FrequencyPredictor, PredictorKind};
use crate::topology::{build_topology, Topology};
use crate::workload::{generate_scenario, Scenario};

/// Independent seed for stream `k` of a run (splitmix64 finaliser).
pub fn sub_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const TOPOLOGY_STREAM: u64 = 1;
const SCENARIO_STREAM: u64 = 2;
const ORCHESTRATOR_STREAM: u64 = 3;
const PREDICTOR_STREAM: u64 = 4;
const AGENT_STREAM: u64 = 100;

/// The topology of run `seed`.
pub fn instance_topology(config: &ExperimentConfig, seed: u64) -> Result<Topology, SimError> {
    Ok(build_topology(config.nodes, config.tiers, sub_seed(seed, TOPOLOGY_STREAM), &config.topology)?)
}

/// The scenario of run `seed` over `topology`.
pub fn instance_scenario(config: &ExperimentConfig, topology: &Topology, seed: u64) -> Result<Scenario, SimError> {
    Ok(generate_scenario(topology, &config.scenario, sub_seed(seed, SCENARIO_STREAM))?)
}

/// The topology and scenario of one run. Independent of the orchestrator, so
/// every orchestrator sees the same instance for a given seed.
pub fn build_instance(config: &ExperimentConfig, seed: u64) -> Result<(Topology, Scenario), SimError> {
    let topology = instance_topology(config, seed)?;
    let scenario = instance_scenario(config, &topology, seed)?;
    Ok((topology, scenario))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: Slot,
    pub cost: f64,
    /// Mean end-to-end delay over supported requests; 0 when none.
    pub mean_delay_ms: f64,
    pub unsupported: usize,
    pub supported: usize,
    pub delay_sum_ms: f64,
    pub max_delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub slots: Vec<SlotMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub total_cost: f64,
    pub mean_delay_ms: f64,
    pub max_delay_ms: f64,
    pub unsupported: usize,
    pub max_unsupported: usize,
    pub supported: usize,
}

impl MetricsSeries {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn summary(&self) -> RunSummary {
        let supported: usize = self.slots.iter().map(|s| s.supported).sum();
        let delay: f64 = self.slots.iter().map(|s| s.delay_sum_ms).sum();
        RunSummary {
            total_cost: self.slots.iter().map(|s| s.cost).sum(),
            mean_delay_ms: if supported == 0 { 0.0 } else { delay / supported as f64 },
            max_delay_ms: self.slots.iter().map(|s| s.max_delay_ms).fold(0.0, f64::max),
            unsupported: self.slots.iter().map(|s| s.unsupported).sum(),
            max_unsupported: self.slots.iter().map(|s| s.unsupported).max().unwrap_or(0),
            supported,
        }
    }
}

/// Agent statistics for one slot, aggregated over PoAs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub slot: Slot,
    pub epsilon: f64,
    pub reward: usize,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub orchestrator: OrchestratorKind,
    pub seed: u64,
    pub metrics: MetricsSeries,
    pub allocation: Allocation,
    pub training: Vec<TrainingRow>,
    /// Prediction hit rate; only tracked when the orchestrator uses
    /// predictions.
    pub accuracy: Option<Accuracy>,
    pub wall_clock: Duration,
}

enum Bank {
    Off,
    Oracle,
    Random { rng: ChaCha8Rng, services: usize, z: usize },
    Frequency(Vec<(NodeId, FrequencyPredictor)>),
    Ddql(Vec<(NodeId, DdqlAgent)>),
}

impl Bank {
    fn new(config: &ExperimentConfig, kind: OrchestratorKind, model: &Model, seed: u64) -> Result<Bank, SimError> {
        if kind != OrchestratorKind::Wise {
            return Ok(Bank::Off);
        }
        let services = model.scenario.catalog.service_count();
        let agent = config.agent.for_services(services);
        let poas = model.topology.poa_nodes();
        Ok(match config.predictor {
            PredictorKind::Oracle => Bank::Oracle,
            PredictorKind::Random => {
                Bank::Random { rng: ChaCha8Rng::seed_from_u64(sub_seed(seed, PREDICTOR_STREAM)), services, z: agent.z }
            }
            PredictorKind::Frequency => Bank::Frequency(
                poas.iter().map(|&p| Ok((p, FrequencyPredictor::new(services, agent.z)?))).collect::<Result<_, SimError>>()?,
            ),
            PredictorKind::Ddql => Bank::Ddql(
                poas.iter()
                    .map(|&p| Ok((p, DdqlAgent::new(agent.clone(), sub_seed(seed, AGENT_STREAM + p.0 as u64))?)))
                    .collect::<Result<_, SimError>>()?,
            ),
        })
    }

    /// Consumes the arrivals of slot `t` and returns the table for `t + 1`.
    fn advance(
        &mut self,
        model: &Model,
        t: Slot,
        previous: &PredictionTable,
        accuracy: &mut Accuracy,
        training: &mut Vec<TrainingRow>,
    ) -> Result<PredictionTable, SimError> {
        let mut next = PredictionTable::new();
        let arrivals = |poa: NodeId| -> BTreeSet<ServiceId> { model.scenario.services_at(poa, t) };
        let poas = model.topology.poa_nodes();
        if !matches!(self, Bank::Off | Bank::Oracle) && t > 1 {
            for &p in poas {
                accuracy.record(&previous.services_at(p), &arrivals(p));
            }
        }
        match self {
            Bank::Off => {}
            Bank::Oracle => {
                if t < model.scenario.horizon {
                    next = PredictionTable::actual(model, t + 1);
                }
            }
            Bank::Random { rng, services, z } => {
                for &p in poas {
                    next.insert(p, random_subset(rng, *services, *z)?);
                }
            }
            Bank::Frequency(preds) => {
                for (p, f) in preds.iter_mut() {
                    f.observe(&arrivals(*p));
                    next.insert(*p, f.predict());
                }
            }
            Bank::Ddql(agents) => {
                let (mut eps, mut reward, mut losses) = (0.0, 0, Vec::new());
                for (p, a) in agents.iter_mut() {
                    let step = a.step(&arrivals(*p))?;
                    eps += step.epsilon;
                    reward += step.reward.unwrap_or(0);
                    losses.extend(step.loss);
                    next.insert(*p, step.prediction);
                }
                let n = agents.len().max(1) as f64;
                let loss = (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);
                training.push(TrainingRow { slot: t, epsilon: eps / n, reward, loss });
            }
        }
        Ok(next)
    }
}

fn slot_metrics(model: &Model, slot: &SlotAllocation, t: Slot) -> Result<SlotMetrics, SimError> {
    let active = model.scenario.active_at(t).count();
    let delays: Vec<f64> = slot.assignments.iter().map(|a| a.recorded_delay.unwrap_or(0.0)).collect();
    let delay_sum_ms: f64 = delays.iter().sum();
    Ok(SlotMetrics {
        slot: t,
        cost: model.slot_cost(slot, t)?,
        mean_delay_ms: if delays.is_empty() { 0.0 } else { delay_sum_ms / delays.len() as f64 },
        unsupported: active.saturating_sub(slot.assignments.len()),
        supported: slot.assignments.len(),
        delay_sum_ms,
        max_delay_ms: delays.iter().copied().fold(0.0, f64::max),
    })
}

/// Runs one orchestrator over a prepared instance. Any constraint violation
/// in the produced allocation is an error.
pub fn run_on(
    topology: &Topology,
    scenario: &Scenario,
    config: &ExperimentConfig,
    kind: OrchestratorKind,
    seed: u64,
) -> Result<RunOutput, SimError> {
    let started = Instant::now();
    let model = Model::new(topology, scenario).with_delay_model(config.delay_model);
    let mut bank = Bank::new(config, kind, &model, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, ORCHESTRATOR_STREAM));
    let mut planner = CcamPlanner::new();
    let (wise, random) = (WiseConfig::default(), RandomConfig::default());
    let exact = match kind {
        OrchestratorKind::Exact => {
            Some(exact_solve(&model, &ExactConfig { limits: config.exact_limits.clone(), ..ExactConfig::default() })?)
        }
        _ => None,
    };

    let mut ledger = SlaLedger::new(scenario.requests.len());
    let mut allocation = Allocation::new();
    let mut metrics = MetricsSeries::default();
    let mut training = Vec::new();
    let mut accuracy = Accuracy::default();
    // nothing is predicted for the first slot
    let mut table = PredictionTable::new();
    for t in 1..=scenario.horizon {
        let slot = match &exact {
            Some(a) => a.slot(t).cloned().unwrap_or_default(),
            None => {
                let mut state = ledger.slot_state(model, t);
                match kind {
                    OrchestratorKind::Wise => wise_place(&mut state, &table, &wise),
                    OrchestratorKind::Random => random_place(&mut state, &mut rng, &random),
                    OrchestratorKind::Ccam => ccam_place(&mut state, &mut planner, &wise),
                    OrchestratorKind::Exact => unreachable!("solved up front"),
                }
                state.finish()
            }
        };
        ledger.charge(&slot);
        metrics.slots.push(slot_metrics(&model, &slot, t)?);
        allocation.slots.insert(t, slot);
        table = bank.advance(&model, t, &table, &mut accuracy, &mut training)?;
    }

    let report = check_constraints(&model, &allocation);
    if !report.feasible {
        return Err(SimError::Infeasible { orchestrator: kind, seed, report: Box::new(report) });
    }
    Ok(RunOutput {
        orchestrator: kind,
        seed,
        metrics,
        allocation,
        training,
        accuracy: (!matches!(bank, Bank::Off)).then_some(accuracy),
        wall_clock: started.elapsed(),
    })
}

/// Builds the instance for `seed` and runs `kind` on it.
pub fn run_simulation(config: &ExperimentConfig, kind: OrchestratorKind, seed: u64) -> Result<RunOutput, SimError> {
    let (topology, scenario) = build_instance(config, seed)?;
    run_on(&topology, &scenario, config, kind, seed)
}

/// One sweep cell: axis value, orchestrator and seed.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub axis_value: Option<usize>,
    pub orchestrator: OrchestratorKind,
    pub seed: u64,
    pub metrics: MetricsSeries,
    pub summary: RunSummary,
    /// Objective recomputed from the stored allocation.
    pub objective: f64,
    pub accuracy: Option<Accuracy>,
    pub wall_clock: Duration,
}

/// Every axis value x orchestrator x repetition. Cells are independent and
/// run on scoped threads; results come back in axis, seed, orchestrator
/// order.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<CellResult>, SimError> {
    config.validate()?;
    let values: Vec<Option<usize>> =
        if config.axis.is_some() { config.axis_values.iter().map(|&v| Some(v)).collect() } else { vec![None] };
    let mut jobs = Vec::new();
    for &v in &values {
        for seed in config.seeds() {
            for &k in &config.orchestrators {
                jobs.push((v, seed, k));
            }
        }
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len()).max(1);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<CellResult, SimError>>> = (0..jobs.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(&(v, seed, k)) = jobs.get(i) else { break };
                let res = run_cell(config, v, k, seed);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(res);
            });
        }
    });
    results.into_iter().map(|r| r.expect("every job ran")).collect()
}

fn run_cell(config: &ExperimentConfig, v: Option<usize>, kind: OrchestratorKind, seed: u64) -> Result<CellResult, SimError> {
    let cell = config.cell(v);
    let wrap = |e: SimError| {
        let axis = match (config.axis, v) {
            (Some(a), Some(v)) => format!("{}={v} ", a.name()),
            _ => String::new(),
        };
        SimError::Run { cell: format!("{axis}orch={kind} seed={seed}"), source: Box::new(e) }
    };
    let (topology, scenario) = build_instance(&cell, seed).map_err(wrap)?;
    let out = run_on(&topology, &scenario, &cell, kind, seed).map_err(wrap)?;
    let model = Model::new(&topology, &scenario).with_delay_model(cell.delay_model);
    let objective = model.objective_cost(&out.allocation).map_err(|e| wrap(e.into()))?;
    Ok(CellResult {
        axis_value: v,
        orchestrator: kind,
        seed,
        summary: out.metrics.summary(),
        metrics: out.metrics,
        objective,
        accuracy: out.accuracy,
        wall_clock: out.wall_clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Mobility;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig { nodes: 8, tiers: 2, repetitions: 2, ..Default::default() };
        c.scenario.requests = 12;
        c.scenario.services = 4;
        c.scenario.horizon = 6;
        c.agent.window = 2;
        c.agent.hidden = 8;
        c
    }

    #[test]
    fn series_has_one_entry_per_slot() {
        let c = small();
        for k in [OrchestratorKind::Wise, OrchestratorKind::Random, OrchestratorKind::Ccam] {
            let out = run_simulation(&c, k, 3).unwrap();
            assert_eq!(out.metrics.len(), 6);
            assert_eq!(out.metrics.slots.iter().map(|s| s.slot).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());
        }
        let out = run_simulation(&c, OrchestratorKind::Wise, 3).unwrap();
        assert_eq!(out.training.len(), 6);
        assert!(out.accuracy.is_some());
    }

    #[test]
    fn no_active_requests_means_zero_metrics() {
        // every request arrives after the last slot of interest is impossible,
        // so use an empty population via a one-slot horizon with no arrivals
        let c = small();
        let (topology, mut scenario) = build_instance(&c, 1).unwrap();
        scenario.requests.clear();
        for k in [OrchestratorKind::Wise, OrchestratorKind::Random, OrchestratorKind::Ccam] {
            let out = run_on(&topology, &scenario, &c, k, 1).unwrap();
            assert!(out.metrics.slots.iter().all(|s| s.cost == 0.0 && s.mean_delay_ms == 0.0 && s.unsupported == 0));
        }
    }

    #[test]
    fn same_seed_same_series() {
        let mut c = small();
        c.scenario.mobility = Mobility::Markov { self_loop: 0.5 };
        for k in [OrchestratorKind::Wise, OrchestratorKind::Random, OrchestratorKind::Ccam] {
            let a = run_simulation(&c, k, 9).unwrap();
            let b = run_simulation(&c, k, 9).unwrap();
            assert_eq!(a.metrics, b.metrics);
            assert_eq!(a.allocation, b.allocation);
            assert_eq!(a.training, b.training);
        }
    }

    #[test]
    fn predictors_all_run() {
        let mut c = small();
        for p in PredictorKind::ALL {
            c.predictor = p;
            let out = run_simulation(&c, OrchestratorKind::Wise, 5).unwrap();
            let acc = out.accuracy.unwrap();
            assert!(acc.hits <= acc.possible);
            if p == PredictorKind::Oracle {
                assert_eq!(acc.possible, 0);
            }
        }
    }

    #[test]
    fn exact_runs_on_tiny_instances() {
        let mut c = small();
        c.nodes = 4;
        c.scenario.requests = 3;
        c.scenario.services = 2;
        c.scenario.instances_per_service = 2;
        c.scenario.horizon = 2;
        c.topology.paths_per_pair = 2;
        c.orchestrators = vec![OrchestratorKind::Exact, OrchestratorKind::Wise];
        c.validate().unwrap();
        let cells = sweep(&c).unwrap();
        assert_eq!(cells.len(), 4);
        for pair in cells.chunks(2) {
            assert!(pair[0].summary.total_cost <= pair[1].summary.total_cost + 1e-9 || pair[0].summary.unsupported < pair[1].summary.unsupported);
        }
    }

    #[test]
    fn sweep_rows_and_accounting_identity() {
        let mut c = small();
        c.axis = Some(crate::sim::SweepAxis::Nodes);
        c.axis_values = vec![6, 8, 10];
        c.repetitions = 1;
        c.orchestrators = vec![OrchestratorKind::Ccam];
        let cells = sweep(&c).unwrap();
        assert_eq!(cells.len(), 3);
        for cell in &cells {
            let total = cell.summary.total_cost;
            assert!((total - cell.objective).abs() <= 1e-9 * total.abs().max(1.0), "{total} vs {}", cell.objective);
        }
        c.repetitions = 5;
        c.axis_values = vec![8];
        assert_eq!(sweep(&c).unwrap().len(), 5);
    }

    #[test]
    fn reported_delay_stays_below_the_largest_bound() {
        let c = small();
        let (topology, scenario) = build_instance(&c, 4).unwrap();
        let out = run_on(&topology, &scenario, &c, OrchestratorKind::Wise, 4).unwrap();
        let max_bound = scenario.requests.iter().map(|r| r.qos.max_delay).fold(0.0, f64::max);
        assert!(out.metrics.slots.iter().all(|s| s.mean_delay_ms <= max_bound && s.max_delay_ms <= max_bound));
    }

    #[test]
    fn sub_seeds_differ() {
        let s: BTreeSet<u64> = (0..50).map(|k| sub_seed(7, k)).collect();
        assert_eq!(s.len(), 50);
        assert_ne!(sub_seed(1, 1), sub_seed(2, 1));
    }
}
