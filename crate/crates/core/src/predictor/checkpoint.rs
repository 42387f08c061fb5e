//! Line-oriented text checkpoints: configuration, schedule, counters, the
//! window and both networks. Replay contents are not saved, only their size.

use std::fmt::Write as _;

use super::network::QNetwork;
use super::{AgentConfig, DdqlAgent, EpsilonSchedule, PredictorError};

pub const CHECKPOINT_HEADER: &str = "ascetic-agent v1";

const TENSORS: [&str; 6] = ["w_ih", "w_hh", "b_ih", "b_hh", "w_out", "b_out"];

fn write_net(out: &mut String, which: &str, net: &QNetwork) {
    for (name, t) in TENSORS.iter().zip(net.tensors()) {
        let _ = write!(out, "tensor {which} {name} {}", t.len());
        for v in t {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
}

impl DdqlAgent {
    pub fn to_checkpoint(&self, seed: u64) -> String {
        let c = &self.config;
        let mut out = format!("{CHECKPOINT_HEADER}\n");
        let _ = writeln!(
            out,
            "config {} {} {} {} {} {} {} {} {} {} {} {}",
            c.services, c.window, c.z, c.hidden, c.gamma, c.lr, c.memory, c.batch, c.target_sync, c.init_scale, c.clip_norm, seed
        );
        let e = self.epsilon;
        let _ = writeln!(out, "schedule {} {} {} {}", e.epsilon, e.decrement, e.floor, c.epsilon.epsilon);
        let _ = writeln!(out, "counters {} {} {}", self.tau, self.train_steps, self.memory().len());
        for v in &self.window {
            let bits: String = v.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = writeln!(out, "window {bits}");
        }
        write_net(&mut out, "online", &self.online);
        write_net(&mut out, "target", &self.target);
        out
    }

    /// Restores an agent. Its replay memory starts empty and its sampler is
    /// reseeded from the saved seed and slot counter.
    pub fn from_checkpoint(text: &str) -> Result<(DdqlAgent, usize), PredictorError> {
        let err = |line: usize, reason: String| PredictorError::Checkpoint { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, l)) if l == CHECKPOINT_HEADER => {}
            Some((n, l)) => return Err(err(n, format!("expected header {CHECKPOINT_HEADER:?}, found {l:?}"))),
            None => return Err(err(0, "empty checkpoint".into())),
        }
        let mut config: Option<(AgentConfig, u64)> = None;
        let mut schedule = None;
        let mut counters = None;
        let mut window = Vec::new();
        let mut nets: [Option<QNetwork>; 2] = [None, None];
        for (n, line) in lines {
            let mut f = line.split_whitespace();
            let tag = f.next().unwrap_or_default();
            let rest: Vec<&str> = f.collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(n, format!("bad number {s:?}: {e}")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(n, format!("bad integer {s:?}: {e}")));
            match tag {
                "config" => {
                    if rest.len() != 12 {
                        return Err(err(n, format!("config needs 12 fields, found {}", rest.len())));
                    }
                    let seed = rest[11].parse::<u64>().map_err(|e| err(n, format!("bad seed: {e}")))?;
                    let mut c = AgentConfig::new(int(rest[0])?, int(rest[2])?);
                    c.window = int(rest[1])?;
                    c.hidden = int(rest[3])?;
                    c.gamma = num(rest[4])?;
                    c.lr = num(rest[5])?;
                    c.memory = int(rest[6])?;
                    c.batch = int(rest[7])?;
                    c.target_sync = int(rest[8])?;
                    c.init_scale = num(rest[9])?;
                    c.clip_norm = num(rest[10])?;
                    config = Some((c, seed));
                }
                "schedule" => {
                    if rest.len() != 4 {
                        return Err(err(n, "schedule needs 4 fields".into()));
                    }
                    let cur = EpsilonSchedule::new(num(rest[0])?, num(rest[1])?, num(rest[2])?)
                        .map_err(|e| err(n, e.to_string()))?;
                    schedule = Some((cur, num(rest[3])?));
                }
                "counters" => {
                    if rest.len() != 3 {
                        return Err(err(n, "counters needs 3 fields".into()));
                    }
                    counters = Some((int(rest[0])?, int(rest[1])?, int(rest[2])?));
                }
                "window" => {
                    let bits = rest.first().copied().unwrap_or_default();
                    let v: Result<Vec<bool>, _> = bits
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(err(n, format!("bad window bit {c:?}"))),
                        })
                        .collect();
                    window.push(v?);
                }
                "tensor" => {
                    let Some((c, _)) = &config else {
                        return Err(err(n, "tensor before config".into()));
                    };
                    if rest.len() < 3 {
                        return Err(err(n, "tensor needs a network, a name and a length".into()));
                    }
                    let which = match rest[0] {
                        "online" => 0,
                        "target" => 1,
                        o => return Err(err(n, format!("unknown network {o:?}"))),
                    };
                    let k = TENSORS.iter().position(|t| *t == rest[1]).ok_or_else(|| err(n, format!("unknown tensor {:?}", rest[1])))?;
                    let len = int(rest[2])?;
                    let values: Vec<f64> = rest[3..].iter().map(|s| num(s)).collect::<Result<_, _>>()?;
                    let net = nets[which].get_or_insert_with(|| QNetwork::zeros(c.services, c.hidden));
                    let slot = &mut net.tensors_mut()[k];
                    if values.len() != len || len != slot.len() {
                        return Err(err(n, format!("tensor {} has {} values, expected {}", rest[1], values.len(), slot.len())));
                    }
                    slot.copy_from_slice(&values);
                }
                other => return Err(err(n, format!("unknown record {other:?}"))),
            }
        }
        let (mut c, seed) = config.ok_or_else(|| err(0, "missing config".into()))?;
        let (sched, eps0) = schedule.ok_or_else(|| err(0, "missing schedule".into()))?;
        let (tau, steps, mem) = counters.ok_or_else(|| err(0, "missing counters".into()))?;
        c.epsilon = EpsilonSchedule { epsilon: eps0, ..sched };
        c.validate().map_err(|e| err(0, e.to_string()))?;
        if window.len() > c.window || window.iter().any(|w| w.len() != c.services) {
            return Err(err(0, "window does not match the configuration".into()));
        }
        let [Some(online), Some(target)] = nets else {
            return Err(err(0, "missing network tensors".into()));
        };
        let mut agent = DdqlAgent::from_parts(c, online, Some(target), seed.wrapping_add(tau as u64));
        agent.epsilon = sched;
        agent.tau = tau;
        agent.train_steps = steps;
        agent.window = window.into();
        Ok((agent, mem))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::ServiceId;
    use std::collections::BTreeSet;

    #[test]
    fn round_trip_preserves_weights_and_schedule() {
        let cfg = AgentConfig { window: 3, hidden: 5, ..AgentConfig::new(4, 2) };
        let mut a = DdqlAgent::new(cfg, 9).unwrap();
        for t in 0..12 {
            a.step(&BTreeSet::from([ServiceId(t % 4)])).unwrap();
        }
        let text = a.to_checkpoint(9);
        assert!(text.starts_with(CHECKPOINT_HEADER));
        let (b, mem) = DdqlAgent::from_checkpoint(&text).unwrap();
        assert_eq!(mem, a.memory().len());
        assert_eq!(b.online, a.online);
        assert_eq!(b.target, a.target);
        assert_eq!(b.epsilon(), a.epsilon());
        assert_eq!(b.config(), a.config());
        assert_eq!(b.window(), a.window());
        assert_eq!(b.q_values(), a.q_values());
        let counters = format!("counters 12 {} {}", a.train_steps(), mem);
        assert_eq!(b.to_checkpoint(9).replace(&format!("counters 12 {} 0", a.train_steps()), &counters), text);
    }

    #[test]
    fn rejects_malformed_checkpoints() {
        let a = DdqlAgent::new(AgentConfig { window: 2, hidden: 3, ..AgentConfig::new(3, 1) }, 0).unwrap();
        let text = a.to_checkpoint(0);
        assert!(DdqlAgent::from_checkpoint("ascetic-agent v2\n").is_err());
        let truncated: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(DdqlAgent::from_checkpoint(&truncated).is_err());
        let corrupted = text.replacen("tensor online w_hh 27", "tensor online w_hh 26", 1);
        assert!(matches!(DdqlAgent::from_checkpoint(&corrupted), Err(PredictorError::Checkpoint { .. })));
    }
}
