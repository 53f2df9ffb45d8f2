//! Derived runs and executions of the simulated protocol.

use crate::analysis::events::EventSeq;
use crate::analysis::matching::Matching;
use crate::error::{integrity, Result};
use crate::protocol::{ProtocolSpec, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivedStep {
    /// A simulated two-way interaction `(starter, reactor)`.
    Pair(usize, usize),
    /// One side of an interaction whose other side lies beyond the prefix.
    Half(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedExecution {
    pub steps: Vec<DerivedStep>,
    /// `configs[0]` is the initial simulated configuration.
    pub configs: Vec<Vec<StateId>>,
}

impl DerivedExecution {
    /// The derived run: complete pairs only.
    pub fn run(&self) -> Vec<(usize, usize)> {
        self.steps
            .iter()
            .filter_map(|s| match *s {
                DerivedStep::Pair(x, y) => Some((x, y)),
                DerivedStep::Half(_) => None,
            })
            .collect()
    }

    pub fn final_config(&self) -> &[StateId] {
        self.configs.last().expect("initial configuration is always present")
    }
}

/// Sorts pairs by their earlier event (pending openers by their own
/// position) and replays them through `delta` from `initial`. Every step is
/// checked against the before/after states recorded in the events, and the
/// result must end where the trace ended.
pub fn derive_execution(
    events: &EventSeq,
    m: &Matching,
    spec: &ProtocolSpec,
    initial: &[StateId],
    final_config: &[StateId],
) -> Result<DerivedExecution> {
    let mut order: Vec<(usize, DerivedItem)> = m
        .pairs
        .iter()
        .map(|&(j, k)| (j.min(k), DerivedItem::Pair(j, k)))
        .chain(m.pending.iter().map(|&j| (j, DerivedItem::Half(j))))
        .collect();
    order.sort_by_key(|(at, _)| *at);

    let mut cur = initial.to_vec();
    let mut out = DerivedExecution { steps: Vec::with_capacity(order.len()), configs: vec![cur.clone()] };
    let ev = &events.events;
    for (_, item) in order {
        match item {
            DerivedItem::Pair(j, k) => {
                let (x, y) = (&ev[j], &ev[k]);
                if cur[x.agent] != x.before || cur[y.agent] != y.before {
                    return Err(integrity(format!("derived pair ({j}, {k}) starts from states the events do not show")));
                }
                let next = spec.delta(cur[x.agent], cur[y.agent]);
                if next != (x.after, y.after) {
                    return Err(integrity(format!("derived pair ({j}, {k}) disagrees with delta")));
                }
                cur[x.agent] = next.0;
                cur[y.agent] = next.1;
                out.steps.push(DerivedStep::Pair(x.agent, y.agent));
            }
            DerivedItem::Half(j) => {
                let x = &ev[j];
                if cur[x.agent] != x.before {
                    return Err(integrity(format!("pending event {j} starts from a state the events do not show")));
                }
                cur[x.agent] = x.after;
                out.steps.push(DerivedStep::Half(x.agent));
            }
        }
        out.configs.push(cur.clone());
    }
    if cur != final_config {
        return Err(integrity("derived execution does not end in the trace's final simulated configuration"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum DerivedItem {
    Pair(usize, usize),
    Half(usize),
}
