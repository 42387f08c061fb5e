use ascetic_core::model::Model;
use ascetic_core::orchestrator::OrchestratorKind;
use ascetic_core::predictor::PredictorKind;
use ascetic_core::sim::{build_instance, run_on, ExperimentConfig};
use ascetic_core::workload::ScenarioParams;
use proptest::prelude::*;

fn config(nodes: usize, requests: usize, horizon: usize, predictor: PredictorKind) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        nodes,
        tiers: 2,
        scenario: ScenarioParams { services: 4, instances_per_service: 2, requests, horizon, ..ScenarioParams::default() },
        predictor,
        ..ExperimentConfig::default()
    };
    c.agent.hidden = 6;
    c.agent.window = 2;
    c
}

fn predictor() -> impl Strategy<Value = PredictorKind> {
    prop_oneof![
        Just(PredictorKind::Ddql),
        Just(PredictorKind::Frequency),
        Just(PredictorKind::Oracle),
        Just(PredictorKind::Random)
    ]
}

fn orchestrator() -> impl Strategy<Value = OrchestratorKind> {
    prop_oneof![Just(OrchestratorKind::Wise), Just(OrchestratorKind::Random), Just(OrchestratorKind::Ccam)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metrics_follow_the_allocation(
        nodes in 2usize..10,
        requests in 1usize..25,
        horizon in 1usize..8,
        p in predictor(),
        k in orchestrator(),
        seed in 0u64..1000,
    ) {
        let c = config(nodes, requests, horizon, p);
        let (topo, sc) = build_instance(&c, seed).unwrap();
        let out = run_on(&topo, &sc, &c, k, seed).unwrap();
        prop_assert_eq!(out.metrics.slots.len(), horizon);
        let model = Model::new(&topo, &sc).with_delay_model(c.delay_model);
        let summary = out.metrics.summary();
        let total = model.objective_cost(&out.allocation).unwrap();
        prop_assert!((summary.total_cost - total).abs() <= 1e-9 * total.abs().max(1.0));
        for m in &out.metrics.slots {
            let active = sc.active_at(m.slot).count();
            prop_assert_eq!(m.supported + m.unsupported, active);
            let slot = out.allocation.slot(m.slot);
            let assigned = slot.map_or(0, |s| s.assignments.len());
            prop_assert_eq!(m.supported, assigned);
            if m.supported == 0 {
                prop_assert_eq!(m.mean_delay_ms, 0.0);
            } else {
                // mean over supported requests only
                let sum: f64 = slot.unwrap().assignments.iter().map(|a| a.recorded_delay.unwrap()).sum();
                prop_assert!((m.mean_delay_ms - sum / m.supported as f64).abs() <= 1e-9 * sum.max(1.0));
            }
        }
        prop_assert_eq!(out.accuracy.is_some(), k == OrchestratorKind::Wise);
    }

    #[test]
    fn runs_are_reproducible(nodes in 2usize..8, requests in 1usize..15, seed in 0u64..1000, p in predictor()) {
        let c = config(nodes, requests, 4, p);
        let a = ascetic_core::sim::run_simulation(&c, OrchestratorKind::Wise, seed).unwrap();
        let b = ascetic_core::sim::run_simulation(&c, OrchestratorKind::Wise, seed).unwrap();
        prop_assert_eq!(a.metrics, b.metrics);
        prop_assert_eq!(a.allocation, b.allocation);
    }
}
