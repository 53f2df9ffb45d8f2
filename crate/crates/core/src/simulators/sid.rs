//! Locking simulator for one-way observation with unique identifiers.

use crate::engine::{AgentState, Simulator};
use crate::error::{integrity, Result};
use crate::models::{Family, ModelName, OneWayHooks, Rules, TwoWayHooks, Update};
use crate::protocol::{ProtocolSpec, StateId};
use crate::trace::Provenance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SidState {
    Available,
    Pairing,
    Locked,
}

impl SidState {
    fn as_str(self) -> &'static str {
        match self {
            SidState::Available => "avail",
            SidState::Pairing => "pair",
            SidState::Locked => "lock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IdAgent {
    pub my_id: u32,
    pub state_p: StateId,
    pub id_other: Option<u32>,
    pub state_other: Option<StateId>,
    pub sim: SidState,
}

impl IdAgent {
    pub fn new(my_id: u32, state_p: StateId) -> Self {
        IdAgent { my_id, state_p, id_other: None, state_other: None, sim: SidState::Available }
    }

    fn clear(&mut self) {
        self.sim = SidState::Available;
        self.id_other = None;
        self.state_other = None;
    }

    /// Memory fields after the simulated symbol.
    pub(crate) fn encode_memory(&self, spec: &ProtocolSpec) -> String {
        format!(
            "{}|{}|{}|{}",
            self.my_id,
            self.sim.as_str(),
            self.id_other.map_or("-".to_string(), |i| i.to_string()),
            self.state_other.map_or("-", |q| spec.symbol(q)),
        )
    }
}

impl AgentState for IdAgent {
    fn simulated(&self) -> StateId {
        self.state_p
    }

    fn encode(&self, spec: &ProtocolSpec) -> String {
        format!("{}|{}", spec.symbol(self.state_p), self.encode_memory(spec))
    }
}

/// One delivery to `reactor` of the starter's variables. The first matching
/// branch fires; at most one of them assigns the simulated state.
pub fn sid_reactor_step(reactor: &IdAgent, starter: &IdAgent, spec: &ProtocolSpec) -> Result<Update<IdAgent>> {
    if reactor.my_id == starter.my_id {
        return Err(integrity(format!("two agents share identifier {}", reactor.my_id)));
    }
    let mut r = reactor.clone();
    let s = starter;
    if r.sim == SidState::Available && s.sim == SidState::Available {
        r.sim = SidState::Pairing;
        r.id_other = Some(s.my_id);
        r.state_other = Some(s.state_p);
        Ok(Update::quiet(r))
    } else if r.sim == SidState::Available
        && s.sim == SidState::Pairing
        && s.id_other == Some(r.my_id)
        && s.state_other == Some(r.state_p)
    {
        r.sim = SidState::Locked;
        r.id_other = Some(s.my_id);
        r.state_other = Some(s.state_p);
        r.state_p = spec.delta(r.state_p, s.state_p).0;
        let event = Provenance::Lock { me: r.my_id, partner: s.my_id };
        Ok(Update::with_event(r, event))
    } else if r.sim == SidState::Pairing
        && r.id_other == Some(s.my_id)
        && s.id_other == Some(r.my_id)
        && s.sim == SidState::Locked
    {
        // The locker's pre-lock state is the one recorded when pairing; its
        // current state already carries its own half of the transition.
        let partner = r.state_other.expect("pairing agent records the partner state");
        r.state_p = spec.delta(partner, r.state_p).1;
        r.clear();
        let event = Provenance::Release { me: r.my_id, partner: s.my_id };
        Ok(Update::with_event(r, event))
    } else if r.id_other == Some(s.my_id) && s.id_other != Some(r.my_id) {
        r.clear();
        Ok(Update::quiet(r))
    } else {
        Ok(Update::quiet(r))
    }
}

/// Identifiers are `index + 1`.
#[derive(Debug, Clone)]
pub struct Sid {
    spec: ProtocolSpec,
}

impl Sid {
    pub fn new(spec: ProtocolSpec) -> Self {
        Sid { spec }
    }
}

impl OneWayHooks for Sid {
    type Agent = IdAgent;

    fn g(&self, a: &IdAgent) -> Result<Update<IdAgent>> {
        Ok(Update::keep(a))
    }

    fn f(&self, s: &IdAgent, r: &IdAgent) -> Result<Update<IdAgent>> {
        sid_reactor_step(r, s, &self.spec)
    }
}

impl TwoWayHooks for Sid {
    type Agent = IdAgent;

    fn f_s(&self, s: &IdAgent, _r: &IdAgent) -> Result<Update<IdAgent>> {
        Ok(Update::keep(s))
    }

    fn f_r(&self, s: &IdAgent, r: &IdAgent) -> Result<Update<IdAgent>> {
        sid_reactor_step(r, s, &self.spec)
    }
}

impl Simulator for Sid {
    type Agent = IdAgent;

    fn descriptor(&self) -> String {
        "sid".into()
    }

    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn rules(&self, model: ModelName) -> Result<Rules<'_, IdAgent>> {
        Ok(match model.family() {
            Family::OneWay => Rules::OneWay(self),
            Family::TwoWay => Rules::TwoWay(self),
        })
    }

    fn initial_agent(&self, index: usize, state: StateId) -> IdAgent {
        IdAgent::new(index as u32 + 1, state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::error::Error;
    use crate::protocols::pairing_protocol;
    use crate::run::RunStep;

    fn q(spec: &ProtocolSpec, s: &str) -> StateId {
        spec.lookup(s).unwrap()
    }

    #[test]
    fn available_pair_starts_pairing() {
        let spec = pairing_protocol();
        let r = IdAgent::new(7, q(&spec, "c"));
        let s = IdAgent::new(3, q(&spec, "p"));
        let out = sid_reactor_step(&r, &s, &spec).unwrap();
        assert_eq!(out.state.sim, SidState::Pairing);
        assert_eq!(out.state.id_other, Some(3));
        assert_eq!(out.state.state_other, Some(q(&spec, "p")));
        assert_eq!(out.event, None);
    }

    #[test]
    fn observed_pairing_partner_locks() {
        let spec = pairing_protocol();
        let r = IdAgent::new(3, q(&spec, "p"));
        let mut s = IdAgent::new(7, q(&spec, "c"));
        s.sim = SidState::Pairing;
        s.id_other = Some(3);
        s.state_other = Some(q(&spec, "p"));
        let out = sid_reactor_step(&r, &s, &spec).unwrap();
        assert_eq!(out.state.sim, SidState::Locked);
        assert_eq!(out.state.state_p, q(&spec, "bot"));
        assert_eq!(out.state.id_other, Some(7));
        assert_eq!(out.event, Some(Provenance::Lock { me: 3, partner: 7 }));
    }

    #[test]
    fn stale_pairing_rolls_back() {
        let spec = pairing_protocol();
        let mut r = IdAgent::new(5, q(&spec, "c"));
        r.sim = SidState::Pairing;
        r.id_other = Some(3);
        r.state_other = Some(q(&spec, "p"));
        let mut s = IdAgent::new(3, q(&spec, "p"));
        s.sim = SidState::Pairing;
        s.id_other = Some(9);
        let out = sid_reactor_step(&r, &s, &spec).unwrap();
        assert_eq!(out.state, IdAgent::new(5, q(&spec, "c")));
    }

    #[test]
    fn duplicate_ids_are_an_integrity_error() {
        let spec = pairing_protocol();
        let a = IdAgent::new(2, q(&spec, "c"));
        assert!(matches!(sid_reactor_step(&a, &a, &spec), Err(Error::Integrity(_))));
    }

    #[test]
    fn two_agent_hand_run() {
        // (p, c): agent 1 pairs with 0, agent 0 locks, agent 1 completes,
        // agent 0 unlocks.
        let spec = pairing_protocol();
        let sim = Sid::new(spec.clone());
        let e = Engine::new(&sim, ModelName::Io).unwrap();
        let init = sim.initial_config(&spec.parse_config(&["p", "c"]).unwrap());
        let steps = [RunStep::new(0, 1), RunStep::new(1, 0), RunStep::new(0, 1), RunStep::new(1, 0)];
        let tr = e.execute(init, steps).unwrap();
        let sims: Vec<StateId> = tr.final_config().iter().map(|a| a.state_p).collect();
        assert_eq!(sims, spec.parse_config(&["bot", "cs"]).unwrap());
        assert_eq!(tr.records[1].events[0].provenance, Provenance::Lock { me: 1, partner: 2 });
        assert_eq!(tr.records[2].events[0].provenance, Provenance::Release { me: 2, partner: 1 });
        assert!(tr.final_config().iter().all(|a| a.sim == SidState::Available));
    }
}
