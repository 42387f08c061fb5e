//! CSV emission. Column sets are fixed so outputs are byte-stable per seed;
//! wall-clock time is deliberately absent.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{CellResult, SimError, TrainingRow};

pub const METRICS_HEADER: &str = "axis,orch,seed,slot,cost,mean_delay_ms,unsupported";
pub const SUMMARY_HEADER: &str =
    "axis,orch,seed,total_cost,mean_delay_ms,max_delay_ms,unsupported,max_unsupported,supported,accuracy";
pub const PLOT_HEADER: &str = "axis,orch,runs,cost,mean_delay_ms,unsupported";
pub const TRAINING_HEADER: &str = "slot,epsilon,reward,loss";

fn axis(v: Option<usize>) -> String {
    v.map_or("-".to_string(), |v| v.to_string())
}

pub fn metrics_csv(cells: &[CellResult]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for c in cells {
        for s in &c.metrics.slots {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                axis(c.axis_value),
                c.orchestrator,
                c.seed,
                s.slot,
                s.cost,
                s.mean_delay_ms,
                s.unsupported
            );
        }
    }
    out
}

pub fn summary_csv(cells: &[CellResult]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for c in cells {
        let s = &c.summary;
        let acc = c.accuracy.map_or(String::new(), |a| a.value().to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            axis(c.axis_value),
            c.orchestrator,
            c.seed,
            s.total_cost,
            s.mean_delay_ms,
            s.max_delay_ms,
            s.unsupported,
            s.max_unsupported,
            s.supported,
            acc
        );
    }
    out
}

pub fn training_csv(rows: &[TrainingRow]) -> String {
    let mut out = format!("{TRAINING_HEADER}\n");
    for r in rows {
        let loss = r.loss.map_or(String::new(), |l| l.to_string());
        let _ = writeln!(out, "{},{},{},{}", r.slot, r.epsilon, r.reward, loss);
    }
    out
}

/// Per (axis value, orchestrator) means of total cost, delay and
/// unsupported count, read back from a summary file.
pub fn plot_csv(summary: &str) -> Result<String, SimError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(summary.as_bytes());
    let headers = rdr.headers().map_err(|e| SimError::Csv(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SUMMARY_HEADER {
        return Err(SimError::Csv(format!("expected header {SUMMARY_HEADER:?}")));
    }
    // key order: numeric axis first, then orchestrator name
    let mut cells: BTreeMap<(Option<u64>, String), (usize, f64, f64, f64)> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Csv(e.to_string()))?;
        let f = |k: usize| -> Result<f64, SimError> {
            rec[k].parse::<f64>().map_err(|e| SimError::Csv(format!("row {}: column {}: {e}", i + 2, &headers[k])))
        };
        let ax = match &rec[0] {
            "-" => None,
            v => Some(v.parse::<u64>().map_err(|e| SimError::Csv(format!("row {}: axis: {e}", i + 2)))?),
        };
        let e = cells.entry((ax, rec[1].to_string())).or_insert((0, 0.0, 0.0, 0.0));
        e.0 += 1;
        e.1 += f(3)?;
        e.2 += f(4)?;
        e.3 += f(6)?;
    }
    let mut out = format!("{PLOT_HEADER}\n");
    for ((ax, orch), (n, cost, delay, unsup)) in cells {
        let k = n as f64;
        let ax = ax.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(out, "{ax},{orch},{n},{},{},{}", cost / k, delay / k, unsup / k);
    }
    Ok(out)
}
