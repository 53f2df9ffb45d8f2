//! Events: the (step, agent) points at which a simulator declares a
//! simulated state update.

use crate::error::{integrity, Result};
use crate::protocol::StateId;
use crate::trace::{ProjectedTrace, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    /// 0-based index of the step that produced it.
    pub step: usize,
    pub agent: usize,
    pub provenance: Provenance,
    /// Simulated state of `agent` before and after the step.
    pub before: StateId,
    pub after: StateId,
}

impl Event {
    pub fn is_trivial(&self) -> bool {
        self.before == self.after
    }
}

/// Events in step order; a step contributes at most two, starter first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventSeq {
    pub events: Vec<Event>,
}

impl EventSeq {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(step, agent)` pairs.
    pub fn points(&self) -> Vec<(usize, usize)> {
        self.events.iter().map(|e| (e.step, e.agent)).collect()
    }
}

/// Collects annotated events and checks that every simulated-state change
/// carries an annotation for the agent that changed.
pub fn extract_events(trace: &ProjectedTrace) -> Result<EventSeq> {
    let mut events = Vec::new();
    let mut prev = trace.initial.as_slice();
    for (k, rec) in trace.records.iter().enumerate() {
        if rec.events.len() > 2 {
            return Err(integrity(format!("step {k} carries {} events", rec.events.len())));
        }
        let parties = [rec.step.starter, rec.step.reactor];
        for (i, ann) in rec.events.iter().enumerate() {
            if !parties.contains(&ann.agent) {
                return Err(integrity(format!("step {k} annotates agent {} which did not interact", ann.agent)));
            }
            if rec.events[..i].iter().any(|e| e.agent == ann.agent) {
                return Err(integrity(format!("step {k} annotates agent {} twice", ann.agent)));
            }
            events.push(Event {
                step: k,
                agent: ann.agent,
                provenance: ann.provenance,
                before: prev[ann.agent],
                after: rec.post[ann.agent],
            });
        }
        for (a, (x, y)) in prev.iter().zip(&rec.post).enumerate() {
            if x != y && !rec.events.iter().any(|e| e.agent == a) {
                return Err(integrity(format!("agent {a} changed simulated state at step {k} without an event")));
            }
        }
        prev = &rec.post;
    }
    Ok(EventSeq { events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Engine, Simulator};
    use crate::error::Error;
    use crate::models::ModelName;
    use crate::protocols::pairing_protocol;
    use crate::run::RunStep;
    use crate::simulators::Direct;
    use crate::trace::{EventAnnotation, ProjectedRecord, Side};

    #[test]
    fn direct_pairing_step_yields_two_events() {
        let spec = pairing_protocol();
        let d = Direct::new(spec.clone());
        let e = Engine::new(&d, ModelName::Tw).unwrap();
        let init = spec.parse_config(&["c", "c", "p"]).unwrap();
        let steps = [RunStep::new(0, 1), RunStep::new(1, 0), RunStep::new(1, 0), RunStep::new(0, 1), RunStep::new(0, 2)];
        let (tr, _) = e.execute_projected(d.initial_config(&init), steps).unwrap();
        let ev = extract_events(&tr).unwrap();
        assert_eq!(ev.points(), vec![(4, 0), (4, 2)]);
    }

    #[test]
    fn quiet_trace_has_no_events() {
        let spec = pairing_protocol();
        let init = spec.parse_config(&["c", "c"]).unwrap();
        let mut tr = ProjectedTrace::new(init.clone());
        tr.records.push(ProjectedRecord { step: RunStep::new(0, 1), post: init, events: vec![] });
        assert!(extract_events(&tr).unwrap().is_empty());
    }

    #[test]
    fn unannotated_change_is_an_integrity_error() {
        let spec = pairing_protocol();
        let mut tr = ProjectedTrace::new(spec.parse_config(&["c", "p"]).unwrap());
        tr.records.push(ProjectedRecord {
            step: RunStep::new(0, 1),
            post: spec.parse_config(&["cs", "bot"]).unwrap(),
            events: vec![EventAnnotation { agent: 0, provenance: Provenance::Direct(Side::Starter) }],
        });
        assert!(matches!(extract_events(&tr), Err(Error::Integrity(_))));
    }
}
