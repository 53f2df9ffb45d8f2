//! Transition time of 2-agent executions and its minimum over
//! omission-free runs.

use std::collections::{HashMap, VecDeque};

use crate::engine::{AgentState, Engine, Simulator};
use crate::error::{structural, Error, Result};
use crate::models::ModelName;
use crate::protocol::{ProtocolSpec, StateId};
use crate::run::RunStep;
use crate::trace::ProjectedTrace;

fn target(spec: &ProtocolSpec, c0: &[StateId]) -> (StateId, StateId) {
    spec.delta(c0[0], c0[1])
}

/// Smallest `t` after which both agents hold `delta(C0[0], C0[1])`, or
/// `None` when the trace never gets there.
pub fn transition_time(trace: &ProjectedTrace, spec: &ProtocolSpec) -> Result<Option<usize>> {
    if trace.n() != 2 {
        return Err(structural(format!("transition time is defined for 2 agents, got {}", trace.n())));
    }
    let goal = target(spec, &trace.initial);
    Ok(trace.configs().position(|c| (c[0], c[1]) == goal))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ftt {
    pub t: usize,
    /// A witness run reaching the transition in `t` steps.
    pub run: Vec<RunStep>,
}

/// Breadth-first search over omission-free 2-agent runs, branching on
/// `(0,1)` then `(1,0)`.
pub fn fastest_transition_time<S: Simulator>(
    sim: &S,
    model: ModelName,
    c0: &[S::Agent],
    depth_cap: usize,
) -> Result<Ftt> {
    if c0.len() != 2 {
        return Err(structural(format!("transition time is defined for 2 agents, got {}", c0.len())));
    }
    let engine = Engine::new(sim, model)?;
    let goal = target(sim.spec(), &[c0[0].simulated(), c0[1].simulated()]);
    let reached = |c: &[S::Agent]| (c[0].simulated(), c[1].simulated()) == goal;
    if reached(c0) {
        return Ok(Ftt { t: 0, run: Vec::new() });
    }
    // Parent pointers: config -> (parent config, step taken).
    let mut parent: HashMap<Vec<S::Agent>, Option<(Vec<S::Agent>, RunStep)>> = HashMap::new();
    parent.insert(c0.to_vec(), None);
    let mut frontier = VecDeque::from([c0.to_vec()]);
    for depth in 1..=depth_cap {
        let mut next = VecDeque::new();
        while let Some(cfg) = frontier.pop_front() {
            for step in [RunStep::new(0, 1), RunStep::new(1, 0)] {
                let mut child = cfg.clone();
                engine.step(&mut child, &step)?;
                if parent.contains_key(&child) {
                    continue;
                }
                parent.insert(child.clone(), Some((cfg.clone(), step)));
                if reached(&child) {
                    let mut run = Vec::with_capacity(depth);
                    let mut at = child;
                    while let Some(Some((p, s))) = parent.get(&at) {
                        run.push(*s);
                        at = p.clone();
                    }
                    run.reverse();
                    return Ok(Ftt { t: depth, run });
                }
                next.push_back(child);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Err(Error::ExceedsCap { what: "fastest transition time".into(), cap: depth_cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::pairing_protocol;
    use crate::simulators::{Direct, Inert, KnO, Sid};

    #[test]
    fn direct_tw_needs_one_step() {
        let spec = pairing_protocol();
        let d = Direct::new(spec.clone());
        let c0 = d.initial_config(&spec.parse_config(&["c", "p"]).unwrap());
        let f = fastest_transition_time(&d, ModelName::Tw, &c0, 5).unwrap();
        assert_eq!(f.t, 1);
        let e = Engine::new(&d, ModelName::Tw).unwrap();
        let (tr, _) = e.execute_projected(c0, [RunStep::new(0, 1)]).unwrap();
        assert_eq!(transition_time(&tr, &spec).unwrap(), Some(1));
    }

    #[test]
    fn kno_ftt_is_two_runs_long() {
        let spec = pairing_protocol();
        for o in 0..3 {
            let sim = KnO::new(spec.clone(), o).unwrap();
            let c0 = sim.initial_config(&spec.parse_config(&["c", "p"]).unwrap());
            let f = fastest_transition_time(&sim, ModelName::I3, &c0, 20).unwrap();
            assert_eq!(f.t, 2 * (o + 1), "o = {o}");
            assert_eq!(f.run.len(), f.t);
        }
    }

    #[test]
    fn sid_ftt_is_three() {
        let spec = pairing_protocol();
        let sim = Sid::new(spec.clone());
        let c0 = sim.initial_config(&spec.parse_config(&["p", "c"]).unwrap());
        assert_eq!(fastest_transition_time(&sim, ModelName::Io, &c0, 10).unwrap().t, 3);
    }

    #[test]
    fn inert_exceeds_cap() {
        let spec = pairing_protocol();
        let sim = Inert::new(spec.clone());
        let c0 = sim.initial_config(&spec.parse_config(&["c", "p"]).unwrap());
        assert!(matches!(
            fastest_transition_time(&sim, ModelName::I3, &c0, 8),
            Err(Error::ExceedsCap { cap: 8, .. })
        ));
    }

    #[test]
    fn unresolved_and_wrong_size() {
        let spec = pairing_protocol();
        let tr = ProjectedTrace::new(spec.parse_config(&["c", "p"]).unwrap());
        assert_eq!(transition_time(&tr, &spec).unwrap(), None);
        let tr3 = ProjectedTrace::new(spec.parse_config(&["c", "p", "p"]).unwrap());
        assert!(matches!(transition_time(&tr3, &spec), Err(Error::Structural(_))));
    }
}
