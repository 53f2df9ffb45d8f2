//! Deterministic execution of runs under a model.

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{structural, Result};
use crate::models::{ModelName, Rules};
use crate::protocol::{ProtocolSpec, StateId};
use crate::run::RunStep;
use crate::trace::{EventAnnotation, ProjectedRecord, ProjectedTrace, Trace, TraceRecord};

/// Full local state of an agent: simulated state plus simulator memory.
pub trait AgentState: Clone + Debug {
    /// The simulated component (`pi_P`).
    fn simulated(&self) -> StateId;

    /// Canonical text form. Starts with the simulated symbol followed by
    /// `|` when simulator memory is present.
    fn encode(&self, spec: &ProtocolSpec) -> String;
}

impl AgentState for StateId {
    fn simulated(&self) -> StateId {
        *self
    }

    fn encode(&self, spec: &ProtocolSpec) -> String {
        spec.symbol(*self).to_string()
    }
}

/// A protocol runnable by the engine: usually a simulator wrapping a
/// two-way protocol, or the two-way protocol itself.
pub trait Simulator {
    type Agent: AgentState + Eq + Hash;

    /// Short canonical name, e.g. `kno:2`.
    fn descriptor(&self) -> String;

    /// The simulated two-way protocol.
    fn spec(&self) -> &ProtocolSpec;

    /// Hooks to use under `model`, or a model error if the simulator offers
    /// none for that model's family.
    fn rules(&self, model: ModelName) -> Result<Rules<'_, Self::Agent>>;

    /// Initial full state of agent `index` with simulated state `state`.
    fn initial_agent(&self, index: usize, state: StateId) -> Self::Agent;

    fn initial_config(&self, states: &[StateId]) -> Vec<Self::Agent> {
        states.iter().enumerate().map(|(i, &q)| self.initial_agent(i, q)).collect()
    }
}

/// Applies runs to configurations.
pub struct Engine<'a, S: Simulator> {
    sim: &'a S,
    model: ModelName,
    rules: Rules<'a, S::Agent>,
}

impl<'a, S: Simulator> Engine<'a, S> {
    pub fn new(sim: &'a S, model: ModelName) -> Result<Self> {
        let rules = sim.rules(model)?;
        Ok(Engine { sim, model, rules })
    }

    pub fn model(&self) -> ModelName {
        self.model
    }

    pub fn simulator(&self) -> &S {
        self.sim
    }

    /// Executes one interaction in place and returns its event annotations
    /// (starter's first).
    pub fn step(&self, config: &mut [S::Agent], step: &RunStep) -> Result<Vec<EventAnnotation>> {
        step.validate(config.len())?;
        let (s, r) = self
            .model
            .apply_step(self.rules, &config[step.starter], &config[step.reactor], step.omission)?;
        let mut events = Vec::new();
        if let Some(p) = s.event {
            events.push(EventAnnotation { agent: step.starter, provenance: p });
        }
        if let Some(p) = r.event {
            events.push(EventAnnotation { agent: step.reactor, provenance: p });
        }
        config[step.starter] = s.state;
        config[step.reactor] = r.state;
        Ok(events)
    }

    /// Runs `steps` from `config`, calling `observe(index, step, post, events)`
    /// after each one.
    pub fn drive<I, F>(&self, config: &mut [S::Agent], steps: I, mut observe: F) -> Result<()>
    where
        I: IntoIterator<Item = RunStep>,
        F: FnMut(usize, &RunStep, &[S::Agent], &[EventAnnotation]) -> Result<()>,
    {
        for (i, step) in steps.into_iter().enumerate() {
            let events = self.step(config, &step)?;
            observe(i, &step, config, &events)?;
        }
        Ok(())
    }

    pub fn execute<I>(&self, initial: Vec<S::Agent>, steps: I) -> Result<Trace<S::Agent>>
    where
        I: IntoIterator<Item = RunStep>,
    {
        if initial.len() < 2 {
            return Err(structural("a system needs at least two agents"));
        }
        let mut trace = Trace::new(initial.clone());
        let mut config = initial;
        self.drive(&mut config, steps, |index, step, post, events| {
            trace.records.push(TraceRecord { index, step: *step, post: post.to_vec(), events: events.to_vec() });
            Ok(())
        })?;
        Ok(trace)
    }

    /// Like [`Self::execute`] but keeps only simulated states.
    pub fn execute_projected<I>(&self, initial: Vec<S::Agent>, steps: I) -> Result<(ProjectedTrace, Vec<S::Agent>)>
    where
        I: IntoIterator<Item = RunStep>,
    {
        if initial.len() < 2 {
            return Err(structural("a system needs at least two agents"));
        }
        let mut trace = ProjectedTrace::new(initial.iter().map(AgentState::simulated).collect());
        let mut config = initial;
        self.drive(&mut config, steps, |_, step, post, events| {
            trace.records.push(ProjectedRecord {
                step: *step,
                post: post.iter().map(AgentState::simulated).collect(),
                events: events.to_vec(),
            });
            Ok(())
        })?;
        Ok((trace, config))
    }
}

/// First disagreement between a recorded trace and its re-execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayDiff {
    /// Step index (`None` for the initial configuration).
    pub step: Option<usize>,
    pub agent: usize,
    pub recorded: String,
    pub replayed: String,
}

/// Re-executes the run recorded in `trace` from its initial configuration
/// and compares canonical encodings step by step.
pub fn replay<S: Simulator, A: AgentState>(
    sim: &S,
    model: ModelName,
    initial: Vec<S::Agent>,
    trace: &Trace<A>,
) -> Result<Option<ReplayDiff>> {
    let spec = sim.spec();
    let diff = |step: Option<usize>, ours: &[S::Agent], theirs: &[A]| -> Option<ReplayDiff> {
        if ours.len() != theirs.len() {
            return Some(ReplayDiff {
                step,
                agent: ours.len().min(theirs.len()),
                recorded: format!("{} agents", theirs.len()),
                replayed: format!("{} agents", ours.len()),
            });
        }
        ours.iter().zip(theirs).enumerate().find_map(|(agent, (a, b))| {
            let (x, y) = (a.encode(spec), b.encode(spec));
            (x != y).then_some(ReplayDiff { step, agent, recorded: y, replayed: x })
        })
    };
    if let Some(d) = diff(None, &initial, &trace.initial) {
        return Ok(Some(d));
    }
    let engine = Engine::new(sim, model)?;
    let mut config = initial;
    for rec in &trace.records {
        engine.step(&mut config, &rec.step)?;
        if let Some(d) = diff(Some(rec.index), &config, &rec.post) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// `pi_P` of a configuration: the simulated states in agent order.
pub fn project<A: AgentState>(config: &[A], spec: &ProtocolSpec) -> Result<Vec<StateId>> {
    config
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let q = a.simulated();
            if spec.contains(q) {
                Ok(q)
            } else {
                Err(structural(format!("agent {i} holds state #{} outside {}", q.0, spec.name())))
            }
        })
        .collect()
}
