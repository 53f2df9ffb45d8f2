//! A "simulator" that never changes any simulated state.

use crate::engine::Simulator;
use crate::error::Result;
use crate::models::{Family, ModelName, OneWayHooks, Rules, TwoWayHooks, Update};
use crate::protocol::{ProtocolSpec, StateId};

#[derive(Debug, Clone)]
pub struct Inert {
    spec: ProtocolSpec,
}

impl Inert {
    pub fn new(spec: ProtocolSpec) -> Self {
        Inert { spec }
    }
}

impl TwoWayHooks for Inert {
    type Agent = StateId;

    fn f_s(&self, s: &StateId, _r: &StateId) -> Result<Update<StateId>> {
        Ok(Update::keep(s))
    }

    fn f_r(&self, _s: &StateId, r: &StateId) -> Result<Update<StateId>> {
        Ok(Update::keep(r))
    }
}

impl OneWayHooks for Inert {
    type Agent = StateId;

    fn g(&self, a: &StateId) -> Result<Update<StateId>> {
        Ok(Update::keep(a))
    }

    fn f(&self, _s: &StateId, r: &StateId) -> Result<Update<StateId>> {
        Ok(Update::keep(r))
    }
}

impl Simulator for Inert {
    type Agent = StateId;

    fn descriptor(&self) -> String {
        "inert".into()
    }

    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn rules(&self, model: ModelName) -> Result<Rules<'_, StateId>> {
        Ok(match model.family() {
            Family::TwoWay => Rules::TwoWay(self),
            Family::OneWay => Rules::OneWay(self),
        })
    }

    fn initial_agent(&self, _index: usize, state: StateId) -> StateId {
        state
    }
}
