//! PoA mobility laws.

use rand::seq::SliceRandom;
use rand::Rng;

use super::WorkloadError;
use crate::ids::{NodeId, Slot};

/// Mobility selection as written in scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Mobility {
    /// The request never leaves its first PoA.
    Static,
    /// Markov chain over all PoAs: stay with `self_loop`, otherwise jump
    /// uniformly to another PoA.
    Markov { self_loop: f64 },
    /// Each request repeats its own random PoA sequence of length `period`,
    /// indexed by absolute slot.
    Cyclic { period: usize },
}

impl Default for Mobility {
    fn default() -> Self {
        Mobility::Markov { self_loop: 0.8 }
    }
}

/// Row-stochastic transition matrix over a fixed list of PoAs.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    states: Vec<NodeId>,
    transition: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn new(states: Vec<NodeId>, transition: Vec<Vec<f64>>) -> Result<Self, WorkloadError> {
        if states.is_empty() {
            return Err(WorkloadError::NoPoaNodes);
        }
        if transition.len() != states.len() {
            return Err(WorkloadError::BadParam("transition matrix must be square over the PoAs".into()));
        }
        for (row, probs) in transition.iter().enumerate() {
            if probs.len() != states.len() || probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(WorkloadError::BadParam(format!("transition row {row} is malformed")));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(WorkloadError::NotStochastic { row, sum });
            }
        }
        Ok(MarkovChain { states, transition })
    }

    /// Stay with probability `self_loop`, else move uniformly to another state.
    pub fn with_self_loop(states: Vec<NodeId>, self_loop: f64) -> Result<Self, WorkloadError> {
        if !(0.0..=1.0).contains(&self_loop) {
            return Err(WorkloadError::BadParam(format!("self-loop probability {self_loop} outside [0, 1]")));
        }
        let k = states.len();
        let transition = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| match (i == j, k) {
                        (true, 1) => 1.0,
                        (true, _) => self_loop,
                        (false, _) => (1.0 - self_loop) / (k - 1) as f64,
                    })
                    .collect()
            })
            .collect();
        MarkovChain::new(states, transition)
    }

    pub fn states(&self) -> &[NodeId] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    fn step<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (j, p) in self.transition[from].iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // rounding left a sliver of mass past the last column
        self.transition[from].iter().rposition(|&p| p > 0.0).unwrap_or(from)
    }
}

/// Concrete mobility law bound to a PoA list.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityModel {
    Static { poas: Vec<NodeId> },
    Markov(MarkovChain),
    Cyclic { poas: Vec<NodeId>, period: usize },
}

impl MobilityModel {
    pub fn bind(spec: &Mobility, poas: &[NodeId]) -> Result<Self, WorkloadError> {
        if poas.is_empty() {
            return Err(WorkloadError::NoPoaNodes);
        }
        Ok(match *spec {
            Mobility::Static => MobilityModel::Static { poas: poas.to_vec() },
            Mobility::Markov { self_loop } => MobilityModel::Markov(MarkovChain::with_self_loop(poas.to_vec(), self_loop)?),
            Mobility::Cyclic { period } => {
                if period == 0 {
                    return Err(WorkloadError::BadParam("cyclic period must be at least 1".into()));
                }
                MobilityModel::Cyclic { poas: poas.to_vec(), period }
            }
        })
    }

    /// PoA trace for slots `arrival..=horizon`.
    pub fn trace<R: Rng>(&self, arrival: Slot, horizon: Slot, rng: &mut R) -> Vec<NodeId> {
        let len = horizon + 1 - arrival;
        match self {
            MobilityModel::Static { poas } => vec![*poas.choose(rng).expect("non-empty"); len],
            MobilityModel::Markov(chain) => {
                let mut at = rng.gen_range(0..chain.states.len());
                let mut out = Vec::with_capacity(len);
                for k in 0..len {
                    if k > 0 {
                        at = chain.step(at, rng);
                    }
                    out.push(chain.states[at]);
                }
                out
            }
            MobilityModel::Cyclic { poas, period } => {
                let sequence: Vec<NodeId> = (0..*period).map(|_| *poas.choose(rng).expect("non-empty")).collect();
                cyclic_trace(&sequence, arrival, horizon)
            }
        }
    }
}

/// Trace that visits `sequence[t % sequence.len()]` at slot `t`.
pub fn cyclic_trace(sequence: &[NodeId], arrival: Slot, horizon: Slot) -> Vec<NodeId> {
    (arrival..=horizon).map(|t| sequence[t % sequence.len()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poas(k: usize) -> Vec<NodeId> {
        (0..k).map(NodeId).collect()
    }

    #[test]
    fn rows_must_sum_to_one() {
        let bad = MarkovChain::new(poas(2), vec![vec![0.5, 0.4], vec![0.5, 0.5]]);
        assert!(matches!(bad, Err(WorkloadError::NotStochastic { row: 0, .. })));
        let chain = MarkovChain::with_self_loop(poas(10), 0.8).unwrap();
        for row in chain.transition() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn identity_chain_is_absorbing() {
        let identity = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let model = MobilityModel::Markov(MarkovChain::new(poas(3), identity).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let trace = model.trace(2, 30, &mut rng);
            assert!(trace.iter().all(|&n| n == trace[0]));
        }
    }

    #[test]
    fn static_trace_is_constant() {
        let model = MobilityModel::bind(&Mobility::Static, &poas(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trace = model.trace(1, 12, &mut rng);
        assert_eq!(trace.len(), 12);
        assert!(trace.iter().all(|&n| n == trace[0]));
    }

    #[test]
    fn cyclic_even_slots_hit_first_entry() {
        let seq = [NodeId(1), NodeId(2)];
        let trace = cyclic_trace(&seq, 1, 8);
        for (k, poa) in trace.iter().enumerate() {
            let t = k + 1;
            assert_eq!(*poa, if t % 2 == 0 { NodeId(1) } else { NodeId(2) });
        }
    }

    #[test]
    fn self_loop_frequency_matches() {
        let model = MobilityModel::bind(&Mobility::Markov { self_loop: 0.8 }, &poas(10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trace = model.trace(1, 20_000, &mut rng);
        let stays = trace.windows(2).filter(|w| w[0] == w[1]).count() as f64 / (trace.len() - 1) as f64;
        assert!((stays - 0.8).abs() < 0.02, "stay rate {stays}");
    }
}
