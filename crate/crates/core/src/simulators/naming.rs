//! Naming from knowledge of `n`, feeding the locking simulator.

use crate::engine::{AgentState, Simulator};
use crate::error::{integrity, Error, Result};
use crate::models::{Family, ModelName, OneWayHooks, Rules, Update};
use crate::protocol::{ProtocolSpec, StateId};
use crate::simulators::sid::{sid_reactor_step, IdAgent};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamingAgent {
    pub my_id: u32,
    pub max_id: u32,
    pub started: bool,
    /// Inner locking layer. Its identifier is meaningful once `started`.
    pub inner: IdAgent,
}

impl NamingAgent {
    pub fn new(state: StateId) -> Self {
        NamingAgent { my_id: 1, max_id: 1, started: false, inner: IdAgent::new(1, state) }
    }
}

impl AgentState for NamingAgent {
    fn simulated(&self) -> StateId {
        self.inner.state_p
    }

    fn encode(&self, spec: &ProtocolSpec) -> String {
        format!(
            "{}|{}|{}|{}|{}",
            spec.symbol(self.inner.state_p),
            self.my_id,
            self.max_id,
            u8::from(self.started),
            self.inner.encode_memory(spec)
        )
    }
}

/// The naming rule for a reactor that has not started yet.
pub fn naming_step(reactor: &NamingAgent, starter: &NamingAgent, n: u32) -> Result<NamingAgent> {
    let mut r = reactor.clone();
    if starter.my_id == r.my_id {
        r.my_id += 1;
    }
    r.max_id = r.my_id.max(r.max_id).max(starter.my_id).max(starter.max_id);
    if r.max_id > n {
        return Err(integrity(format!("identifier {} exceeds the known size {n}", r.max_id)));
    }
    if r.max_id == n {
        r.started = true;
        r.inner.my_id = r.my_id;
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct Naming {
    spec: ProtocolSpec,
    n: u32,
}

impl Naming {
    pub fn new(spec: ProtocolSpec, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("naming needs n >= 2, got {n}")));
        }
        Ok(Naming { spec, n: n as u32 })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }
}

impl OneWayHooks for Naming {
    type Agent = NamingAgent;

    fn g(&self, a: &NamingAgent) -> Result<Update<NamingAgent>> {
        Ok(Update::keep(a))
    }

    fn f(&self, s: &NamingAgent, r: &NamingAgent) -> Result<Update<NamingAgent>> {
        if !r.started {
            return Ok(Update::quiet(naming_step(r, s, self.n)?));
        }
        if !s.started {
            return Ok(Update::keep(r));
        }
        let inner = sid_reactor_step(&r.inner, &s.inner, &self.spec)?;
        let mut next = r.clone();
        next.inner = inner.state;
        Ok(Update { state: next, event: inner.event })
    }
}

impl Simulator for Naming {
    type Agent = NamingAgent;

    fn descriptor(&self) -> String {
        format!("naming:{}", self.n)
    }

    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn rules(&self, model: ModelName) -> Result<Rules<'_, NamingAgent>> {
        match model.family() {
            Family::OneWay => Ok(Rules::OneWay(self)),
            Family::TwoWay => Err(Error::Model(format!("naming is defined for one-way models, not {model}"))),
        }
    }

    fn initial_agent(&self, _index: usize, state: StateId) -> NamingAgent {
        NamingAgent::new(state)
    }
}

/// Largest `max_id` held by any agent.
pub fn max_id(config: &[NamingAgent]) -> u32 {
    config.iter().map(|a| a.max_id).max().unwrap_or(0)
}

/// Whether two agents share `my_id`.
pub fn has_duplicate_ids(config: &[NamingAgent]) -> bool {
    let mut ids: Vec<u32> = config.iter().map(|a| a.my_id).collect();
    ids.sort_unstable();
    ids.windows(2).any(|w| w[0] == w[1])
}

/// Per-step naming check: the maximum `max_id` grows only if a duplicate
/// `my_id` existed before the step, and reaching `n` implies unique ids.
pub fn check_naming_step(before: &[NamingAgent], after: &[NamingAgent], n: usize) -> Result<()> {
    let (m0, m1) = (max_id(before), max_id(after));
    if m1 > m0 && !has_duplicate_ids(before) {
        return Err(integrity(format!("max_id grew from {m0} to {m1} without a duplicate identifier")));
    }
    if m1 as usize == n && has_duplicate_ids(after) {
        return Err(integrity("max_id reached n while identifiers are still shared"));
    }
    Ok(())
}
