//! Wrapper that stops an agent for good once it has detected `threshold`
//! omissions. Below the threshold it behaves exactly like the inner
//! simulator.

use crate::engine::{AgentState, Simulator};
use crate::error::{Error, Result};
use crate::models::{ModelName, OneWayHooks, Rules, TwoWayHooks, Update};
use crate::protocol::{ProtocolSpec, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegradingAgent<A> {
    pub inner: A,
    pub detected: u32,
}

impl<A: AgentState> AgentState for DegradingAgent<A> {
    fn simulated(&self) -> StateId {
        self.inner.simulated()
    }

    fn encode(&self, spec: &ProtocolSpec) -> String {
        format!("{}|{}", self.inner.encode(spec), self.detected)
    }
}

/// Bound to one model, since it forwards to the inner hooks for it.
#[derive(Debug, Clone)]
pub struct Degrading<S> {
    inner: S,
    threshold: u32,
    model: ModelName,
}

impl<S: Simulator> Degrading<S> {
    pub fn new(inner: S, threshold: u32, model: ModelName) -> Result<Self> {
        inner.rules(model)?;
        Ok(Degrading { inner, threshold, model })
    }

    fn halted(&self, a: &DegradingAgent<S::Agent>) -> bool {
        a.detected >= self.threshold
    }

    fn lift(&self, a: &DegradingAgent<S::Agent>, u: Update<S::Agent>, detected: bool) -> Update<DegradingAgent<S::Agent>> {
        Update {
            state: DegradingAgent { inner: u.state, detected: a.detected + u32::from(detected) },
            event: u.event,
        }
    }

    fn one_way(&self) -> &dyn OneWayHooks<Agent = S::Agent> {
        match self.inner.rules(self.model) {
            Ok(Rules::OneWay(h)) => h,
            _ => unreachable!("checked at construction"),
        }
    }

    fn two_way(&self) -> &dyn TwoWayHooks<Agent = S::Agent> {
        match self.inner.rules(self.model) {
            Ok(Rules::TwoWay(h)) => h,
            _ => unreachable!("checked at construction"),
        }
    }
}

type Lifted<S> = DegradingAgent<<S as Simulator>::Agent>;

impl<S: Simulator> OneWayHooks for Degrading<S> {
    type Agent = Lifted<S>;

    fn g(&self, a: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(a) {
            return Ok(Update::keep(a));
        }
        Ok(self.lift(a, self.one_way().g(&a.inner)?, false))
    }

    fn f(&self, s: &Lifted<S>, r: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(r) {
            return Ok(Update::keep(r));
        }
        Ok(self.lift(r, self.one_way().f(&s.inner, &r.inner)?, false))
    }

    fn o(&self, s: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(s) {
            return Ok(Update::keep(s));
        }
        Ok(self.lift(s, self.one_way().o(&s.inner)?, true))
    }

    fn h(&self, r: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(r) {
            return Ok(Update::keep(r));
        }
        Ok(self.lift(r, self.one_way().h(&r.inner)?, true))
    }
}

impl<S: Simulator> TwoWayHooks for Degrading<S> {
    type Agent = Lifted<S>;

    fn f_s(&self, s: &Lifted<S>, r: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(s) {
            return Ok(Update::keep(s));
        }
        Ok(self.lift(s, self.two_way().f_s(&s.inner, &r.inner)?, false))
    }

    fn f_r(&self, s: &Lifted<S>, r: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(r) {
            return Ok(Update::keep(r));
        }
        Ok(self.lift(r, self.two_way().f_r(&s.inner, &r.inner)?, false))
    }

    fn o(&self, s: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(s) {
            return Ok(Update::keep(s));
        }
        Ok(self.lift(s, self.two_way().o(&s.inner)?, true))
    }

    fn h(&self, r: &Lifted<S>) -> Result<Update<Lifted<S>>> {
        if self.halted(r) {
            return Ok(Update::keep(r));
        }
        Ok(self.lift(r, self.two_way().h(&r.inner)?, true))
    }
}

impl<S: Simulator> Simulator for Degrading<S> {
    type Agent = Lifted<S>;

    fn descriptor(&self) -> String {
        format!("degrading:{}:{}", self.threshold, self.inner.descriptor())
    }

    fn spec(&self) -> &ProtocolSpec {
        self.inner.spec()
    }

    fn rules(&self, model: ModelName) -> Result<Rules<'_, Lifted<S>>> {
        if model != self.model {
            return Err(Error::Config(format!("wrapper bound to {} but run under {model}", self.model)));
        }
        Ok(match self.inner.rules(model)? {
            Rules::OneWay(_) => Rules::OneWay(self),
            Rules::TwoWay(_) => Rules::TwoWay(self),
        })
    }

    fn initial_agent(&self, index: usize, state: StateId) -> Lifted<S> {
        DegradingAgent { inner: self.inner.initial_agent(index, state), detected: 0 }
    }
}
