//! A two-way protocol run as itself: `f_s`, `f_r` are the components of
//! `delta`, omission hooks are the identity.

use crate::engine::Simulator;
use crate::error::{Error, Result};
use crate::models::{Family, ModelName, Rules, TwoWayHooks, Update};
use crate::protocol::{ProtocolSpec, StateId};
use crate::trace::{Provenance, Side};

#[derive(Debug, Clone)]
pub struct Direct {
    spec: ProtocolSpec,
}

impl Direct {
    pub fn new(spec: ProtocolSpec) -> Self {
        Direct { spec }
    }

    fn side(&self, s: StateId, r: StateId, side: Side) -> Update<StateId> {
        let out = self.spec.delta(s, r);
        let next = if side == Side::Starter { out.0 } else { out.1 };
        if out == (s, r) {
            Update::quiet(next)
        } else {
            Update::with_event(next, Provenance::Direct(side))
        }
    }
}

impl TwoWayHooks for Direct {
    type Agent = StateId;

    fn f_s(&self, s: &StateId, r: &StateId) -> Result<Update<StateId>> {
        Ok(self.side(*s, *r, Side::Starter))
    }

    fn f_r(&self, s: &StateId, r: &StateId) -> Result<Update<StateId>> {
        Ok(self.side(*s, *r, Side::Reactor))
    }
}

impl Simulator for Direct {
    type Agent = StateId;

    fn descriptor(&self) -> String {
        "none".into()
    }

    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn rules(&self, model: ModelName) -> Result<Rules<'_, StateId>> {
        match model.family() {
            Family::TwoWay => Ok(Rules::TwoWay(self)),
            Family::OneWay => Err(Error::Model(format!("a two-way protocol cannot run directly under {model}"))),
        }
    }

    fn initial_agent(&self, _index: usize, state: StateId) -> StateId {
        state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::protocols::pairing_protocol;
    use crate::run::{Omission, RunStep};

    #[test]
    fn tw_pairing_step() {
        let spec = pairing_protocol();
        let d = Direct::new(spec.clone());
        let e = Engine::new(&d, ModelName::Tw).unwrap();
        let mut cfg = spec.parse_config(&["c", "p"]).unwrap();
        let ev = e.step(&mut cfg, &RunStep::new(0, 1)).unwrap();
        assert_eq!(cfg, spec.parse_config(&["cs", "bot"]).unwrap());
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].agent, ev[1].agent), (0, 1));
    }

    #[test]
    fn t1_both_sides_is_a_no_op() {
        let spec = pairing_protocol();
        let d = Direct::new(spec.clone());
        let e = Engine::new(&d, ModelName::T1).unwrap();
        let mut cfg = spec.parse_config(&["c", "p"]).unwrap();
        let ev = e.step(&mut cfg, &RunStep::omissive(0, 1, Omission::Both)).unwrap();
        assert_eq!(cfg, spec.parse_config(&["c", "p"]).unwrap());
        assert!(ev.is_empty());
    }

    #[test]
    fn one_way_models_are_refused() {
        let d = Direct::new(pairing_protocol());
        assert!(matches!(Engine::new(&d, ModelName::Io), Err(Error::Model(_))));
    }
}
