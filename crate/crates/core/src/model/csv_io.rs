//! Allocation CSV: one row per placement (request `-`) and one per
//! assignment.
//!
//! ```text
//! slot,request,instance,node,inquiry_path,response_path,delay_ms,cost
//! ```

use std::fmt::Write;

use super::{Allocation, Assignment, ModelError};
use crate::ids::{InstanceId, NodeId, PathId, RequestId};
use crate::topology::Topology;

pub const ALLOCATION_CSV_HEADER: &str = "slot,request,instance,node,inquiry_path,response_path,delay_ms,cost";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Allocation {
    /// The `node` column of an assignment row is the inquiry tail.
    pub fn to_csv(&self, topology: &Topology) -> String {
        let mut out = String::from(ALLOCATION_CSV_HEADER);
        out.push('\n');
        for (&t, slot) in &self.slots {
            for (inst, hosts) in &slot.placements {
                for n in hosts {
                    writeln!(out, "{t},-,{inst},{},-,-,,", n.0).unwrap();
                }
            }
            for a in &slot.assignments {
                let node = topology.path(a.inquiry).map(|p| p.tail.0.to_string()).unwrap_or_else(|_| "-".into());
                writeln!(
                    out,
                    "{t},{},{},{node},{},{},{},{}",
                    a.request.0,
                    a.instance,
                    a.inquiry.0,
                    a.response.0,
                    opt(a.recorded_delay),
                    opt(a.recorded_cost)
                )
                .unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Allocation, ModelError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| ModelError::Parse { line: 1, reason: e.to_string() })?;
        if header.iter().collect::<Vec<_>>().join(",") != ALLOCATION_CSV_HEADER {
            return Err(ModelError::Parse { line: 1, reason: format!("expected header {ALLOCATION_CSV_HEADER:?}") });
        }
        let mut alloc = Allocation::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| ModelError::Parse { line, reason: e.to_string() })?;
            let bad = |col: &str| ModelError::Parse { line, reason: format!("bad {col} value") };
            let get = |idx: usize| rec.get(idx).unwrap_or("");
            let num = |idx: usize, col: &str| get(idx).parse::<usize>().map_err(|_| bad(col));
            let float = |idx: usize, col: &str| match get(idx) {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| bad(col)),
            };
            let slot = num(0, "slot")?;
            let instance: InstanceId = get(2).parse().map_err(|_| bad("instance"))?;
            if get(1) == "-" {
                alloc.slot_mut(slot).place(instance, NodeId(num(3, "node")?));
                continue;
            }
            alloc.slot_mut(slot).assignments.push(Assignment {
                request: RequestId(num(1, "request")?),
                instance,
                inquiry: PathId(num(4, "inquiry_path")?),
                response: PathId(num(5, "response_path")?),
                recorded_delay: float(6, "delay_ms")?,
                recorded_cost: float(7, "cost")?,
            });
        }
        Ok(alloc)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    #[test]
    fn csv_round_trip() {
        let topo = topology(
            vec![node(0, 10, 1.0), node(1, 10, 1.0)],
            vec![link(0, 0, 1, 100, 10.0), link(1, 1, 0, 100, 10.0)],
            &[(0, 1, &[0]), (1, 0, &[1])],
            &[0],
        );
        let mut alloc = Allocation::new();
        let s = alloc.slot_mut(2);
        s.place(InstanceId::new(0, 1), NodeId(1));
        s.place(InstanceId::new(1, 0), NodeId(0));
        let mut a = Assignment::new(RequestId(4), InstanceId::new(0, 1), PathId(2), PathId(3));
        a.recorded_delay = Some(0.1 + 0.2);
        a.recorded_cost = Some(20.0);
        s.assignments.push(a);
        s.assignments.push(Assignment::new(RequestId(5), InstanceId::new(0, 1), PathId(2), PathId(3)));
        let text = alloc.to_csv(&topo);
        assert!(text.contains("2,-,s1i0,0,-,-,,\n"));
        assert!(text.contains("2,4,s0i1,1,2,3,0.30000000000000004,20\n"));
        assert_eq!(Allocation::from_csv(&text).unwrap(), alloc);
        assert!(Allocation::from_csv("slot,x\n").is_err());
        assert!(Allocation::from_csv(&format!("{ALLOCATION_CSV_HEADER}\n1,0,bogus,0,0,0,,\n")).is_err());
    }
}
