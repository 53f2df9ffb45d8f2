//! Token/joker simulator for one-way models with a known omission bound `o`.
//!
//! A state `q` is announced by the run `<q,1>..<q,o+1>`. A reactor that
//! completes a run of some `q` applies its half of `delta` and answers with a
//! run of state-change tokens `<(q, old),i>`; the pending announcer applies
//! the other half when that run reaches it. Detected omissions create jokers,
//! which stand in for any missing token.

use std::collections::VecDeque;

use crate::engine::{AgentState, Simulator};
use crate::error::{Error, Result};
use crate::models::{Family, ModelName, OneWayHooks, Rules, Update};
use crate::protocol::{ProtocolSpec, StateId};
use crate::trace::Provenance;

/// What a run announces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    State(StateId),
    /// `(q, old)`: a reactor in `old` consumed a run of `q`.
    Change(StateId, StateId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Real(Label, u8),
    Joker,
}

impl Token {
    pub fn encode(&self, spec: &ProtocolSpec) -> String {
        match *self {
            Token::Real(Label::State(q), i) => format!("{}:{i}", spec.symbol(q)),
            Token::Real(Label::Change(q, r), i) => format!("chg:{}:{}:{i}", spec.symbol(q), spec.symbol(r)),
            Token::Joker => "J".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnoState {
    Available,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KnoAgent {
    pub state_p: StateId,
    pub sim: KnoState,
    pub sending: VecDeque<Token>,
    /// Tokens that jokers stood in for, kept sorted.
    pub jokers: Vec<(Label, u8)>,
}

impl KnoAgent {
    pub fn new(state_p: StateId) -> Self {
        KnoAgent { state_p, sim: KnoState::Available, sending: VecDeque::new(), jokers: Vec::new() }
    }

    pub fn joker_tokens(&self) -> usize {
        self.sending.iter().filter(|t| **t == Token::Joker).count()
    }

    pub fn real_tokens(&self) -> usize {
        self.sending.len() - self.joker_tokens()
    }
}

impl AgentState for KnoAgent {
    fn simulated(&self) -> StateId {
        self.state_p
    }

    fn encode(&self, spec: &ProtocolSpec) -> String {
        let queue: Vec<String> = self.sending.iter().map(|t| t.encode(spec)).collect();
        let noted: Vec<String> = self.jokers.iter().map(|&(l, i)| Token::Real(l, i).encode(spec)).collect();
        let sim = if self.sim == KnoState::Available { "a" } else { "p" };
        format!("{}|{sim}|{}|{}", spec.symbol(self.state_p), queue.join(","), noted.join(","))
    }
}

/// The starter's part: inject a run if idle, then hand over the head token.
pub fn kno_starter_step(agent: &KnoAgent, o: usize) -> (KnoAgent, Option<Token>) {
    let mut a = agent.clone();
    if a.sim == KnoState::Available && a.sending.is_empty() {
        a.sim = KnoState::Pending;
        for i in 1..=o + 1 {
            a.sending.push_back(Token::Real(Label::State(a.state_p), i as u8));
        }
    }
    let token = a.sending.pop_front();
    (a, token)
}

/// What the reactor got from the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Token(Token),
    /// The starter had nothing to send.
    Nothing,
    /// A detected omission.
    Omission,
}

/// Positions in `sending` completing a run of `label`, real tokens first
/// (oldest copy of each index), jokers filling the gaps (oldest first).
fn find_run(sending: &VecDeque<Token>, label: Label, o: usize) -> Option<(Vec<usize>, Vec<u8>)> {
    let mut used = Vec::with_capacity(o + 1);
    let mut missing = Vec::new();
    for i in 1..=o + 1 {
        match sending.iter().position(|t| *t == Token::Real(label, i as u8)) {
            Some(p) => used.push(p),
            None => missing.push(i as u8),
        }
    }
    if missing.len() > o {
        return None;
    }
    let jokers: Vec<usize> = sending
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == Token::Joker)
        .map(|(p, _)| p)
        .take(missing.len())
        .collect();
    if jokers.len() < missing.len() {
        return None;
    }
    used.extend(jokers);
    Some((used, missing))
}

fn consume(agent: &mut KnoAgent, label: Label, (positions, missing): (Vec<usize>, Vec<u8>)) {
    let mut positions = positions;
    positions.sort_unstable_by(|a, b| b.cmp(a));
    for p in positions {
        agent.sending.remove(p);
    }
    for i in missing {
        let at = agent.jokers.partition_point(|x| *x < (label, i));
        agent.jokers.insert(at, (label, i));
    }
}

/// The reactor's part: enqueue, recover noted tokens, then the preliminary
/// check and at most one core action.
pub fn kno_reactor_step(agent: &KnoAgent, delivery: Delivery, spec: &ProtocolSpec, o: usize) -> Update<KnoAgent> {
    let mut a = agent.clone();
    match delivery {
        Delivery::Omission => a.sending.push_back(Token::Joker),
        Delivery::Nothing => {}
        Delivery::Token(t) => {
            a.sending.push_back(t);
            if let Token::Real(l, i) = t {
                if let Ok(at) = a.jokers.binary_search(&(l, i)) {
                    a.jokers.remove(at);
                    let last = a.sending.iter().rposition(|x| *x == t).expect("token was just enqueued");
                    a.sending.remove(last);
                    a.sending.push_back(Token::Joker);
                }
            }
        }
    }

    if a.sim == KnoState::Pending {
        let own = Label::State(a.state_p);
        if let Some(found) = find_run(&a.sending, own, o) {
            consume(&mut a, own, found);
            a.sim = KnoState::Available;
        }
    }

    // Candidate labels ordered by their oldest real token.
    let mut seen: Vec<Label> = Vec::new();
    for t in &a.sending {
        if let Token::Real(l, _) = t {
            if !seen.contains(l) {
                seen.push(*l);
            }
        }
    }
    match a.sim {
        KnoState::Available => {
            for l in seen {
                let Label::State(q) = l else { continue };
                if let Some(found) = find_run(&a.sending, l, o) {
                    consume(&mut a, l, found);
                    let old = a.state_p;
                    a.state_p = spec.delta(q, old).1;
                    for i in 1..=o + 1 {
                        a.sending.push_back(Token::Real(Label::Change(q, old), i as u8));
                    }
                    return Update::with_event(a, Provenance::Consume { run: q, old });
                }
            }
        }
        KnoState::Pending => {
            for l in seen {
                let Label::Change(own, other) = l else { continue };
                if own != a.state_p {
                    continue;
                }
                if let Some(found) = find_run(&a.sending, l, o) {
                    consume(&mut a, l, found);
                    a.state_p = spec.delta(own, other).0;
                    a.sim = KnoState::Available;
                    return Update::with_event(a, Provenance::Resolve { own, other });
                }
            }
        }
    }
    Update::quiet(a)
}

/// Hook set for one variant. Under `I3` the reactor turns a detected
/// omission into a joker; under `I4` the starter does, in its own queue.
#[derive(Debug, Clone)]
pub struct KnoHooks {
    spec: ProtocolSpec,
    o: usize,
    starter_detects: bool,
}

impl OneWayHooks for KnoHooks {
    type Agent = KnoAgent;

    fn g(&self, a: &KnoAgent) -> Result<Update<KnoAgent>> {
        Ok(Update::quiet(kno_starter_step(a, self.o).0))
    }

    fn f(&self, s: &KnoAgent, r: &KnoAgent) -> Result<Update<KnoAgent>> {
        let delivery = match kno_starter_step(s, self.o).1 {
            Some(t) => Delivery::Token(t),
            None => Delivery::Nothing,
        };
        Ok(kno_reactor_step(r, delivery, &self.spec, self.o))
    }

    fn o(&self, s: &KnoAgent) -> Result<Update<KnoAgent>> {
        let (mut a, _lost) = kno_starter_step(s, self.o);
        if self.starter_detects {
            a.sending.push_back(Token::Joker);
        }
        Ok(Update::quiet(a))
    }

    fn h(&self, r: &KnoAgent) -> Result<Update<KnoAgent>> {
        if self.starter_detects {
            Ok(Update::keep(r))
        } else {
            Ok(kno_reactor_step(r, Delivery::Omission, &self.spec, self.o))
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnO {
    spec: ProtocolSpec,
    o: usize,
    reactor_side: KnoHooks,
    starter_side: KnoHooks,
}

impl KnO {
    pub fn new(spec: ProtocolSpec, o: usize) -> Result<Self> {
        if o >= u8::MAX as usize {
            return Err(Error::Config(format!("omission bound {o} too large")));
        }
        let hooks = |starter_detects| KnoHooks { spec: spec.clone(), o, starter_detects };
        Ok(KnO { reactor_side: hooks(false), starter_side: hooks(true), spec, o })
    }

    pub fn o(&self) -> usize {
        self.o
    }
}

impl Simulator for KnO {
    type Agent = KnoAgent;

    fn descriptor(&self) -> String {
        format!("kno:{}", self.o)
    }

    fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    fn rules(&self, model: ModelName) -> Result<Rules<'_, KnoAgent>> {
        match (model, model.family()) {
            (ModelName::I4, _) => Ok(Rules::OneWay(&self.starter_side)),
            (_, Family::OneWay) => Ok(Rules::OneWay(&self.reactor_side)),
            _ => Err(Error::Model(format!("the token simulator runs on one-way models, not {model}"))),
        }
    }

    fn initial_agent(&self, _index: usize, state: StateId) -> KnoAgent {
        KnoAgent::new(state)
    }
}

/// Joker tokens in all queues.
pub fn joker_count(config: &[KnoAgent]) -> usize {
    config.iter().map(KnoAgent::joker_tokens).sum()
}

/// Non-joker tokens in all queues.
pub fn token_count(config: &[KnoAgent]) -> usize {
    config.iter().map(KnoAgent::real_tokens).sum()
}

/// Real tokens minus the entries noted in `Jokers`. A noted token was
/// already replaced by a spent joker; until its noter recovers it, the real
/// copy keeps travelling and is counted by [`token_count`].
pub fn circulating_tokens(config: &[KnoAgent]) -> usize {
    let noted: usize = config.iter().map(|a| a.jokers.len()).sum();
    token_count(config).saturating_sub(noted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::protocols::pairing_protocol;
    use crate::run::{Omission, RunStep};

    fn q(spec: &ProtocolSpec, s: &str) -> StateId {
        spec.lookup(s).unwrap()
    }

    #[test]
    fn idle_starter_injects_and_sends_head() {
        let spec = pairing_protocol();
        let (a, t) = kno_starter_step(&KnoAgent::new(q(&spec, "c")), 1);
        assert_eq!(a.sim, KnoState::Pending);
        assert_eq!(t, Some(Token::Real(Label::State(q(&spec, "c")), 1)));
        assert_eq!(a.sending, VecDeque::from([Token::Real(Label::State(q(&spec, "c")), 2)]));
    }

    #[test]
    fn pending_starter_dequeues_joker() {
        let spec = pairing_protocol();
        let mut a = KnoAgent::new(q(&spec, "c"));
        a.sim = KnoState::Pending;
        let c2 = Token::Real(Label::State(q(&spec, "c")), 2);
        a.sending = VecDeque::from([Token::Joker, c2]);
        let (b, t) = kno_starter_step(&a, 1);
        assert_eq!(t, Some(Token::Joker));
        assert_eq!(b.sending, VecDeque::from([c2]));
    }

    #[test]
    fn o0_starter_sends_whole_run() {
        let spec = pairing_protocol();
        let (a, t) = kno_starter_step(&KnoAgent::new(q(&spec, "p")), 0);
        assert_eq!(a.sim, KnoState::Pending);
        assert!(a.sending.is_empty());
        assert_eq!(t, Some(Token::Real(Label::State(q(&spec, "p")), 1)));
    }

    #[test]
    fn o0_reactor_consumes_and_answers() {
        let spec = pairing_protocol();
        let (p, c) = (q(&spec, "p"), q(&spec, "c"));
        let out = kno_reactor_step(&KnoAgent::new(c), Delivery::Token(Token::Real(Label::State(p), 1)), &spec, 0);
        assert_eq!(out.state.state_p, q(&spec, "cs"));
        assert_eq!(out.state.sending, VecDeque::from([Token::Real(Label::Change(p, c), 1)]));
        assert_eq!(out.event, Some(Provenance::Consume { run: p, old: c }));
    }

    #[test]
    fn detected_omission_completes_run_with_joker() {
        let spec = pairing_protocol();
        let (p, bot) = (q(&spec, "p"), q(&spec, "bot"));
        let mut r = KnoAgent::new(bot);
        r.sending = VecDeque::from([Token::Real(Label::State(p), 1), Token::Joker]);
        let out = kno_reactor_step(&r, Delivery::Omission, &spec, 1);
        // Two jokers, one needed; the run is consumed with one joker left.
        assert_eq!(out.state.jokers, vec![(Label::State(p), 2)]);
        assert_eq!(out.event, Some(Provenance::Consume { run: p, old: bot }));
        assert_eq!(out.state.joker_tokens(), 1);
    }

    #[test]
    fn pending_agent_resolves_on_change_run() {
        let spec = pairing_protocol();
        let (p, c) = (q(&spec, "p"), q(&spec, "c"));
        let mut a = KnoAgent::new(p);
        a.sim = KnoState::Pending;
        a.sending = VecDeque::from([Token::Real(Label::Change(p, c), 1)]);
        let out = kno_reactor_step(&a, Delivery::Token(Token::Real(Label::Change(p, c), 2)), &spec, 1);
        assert_eq!(out.state.state_p, q(&spec, "bot"));
        assert_eq!(out.state.sim, KnoState::Available);
        assert!(out.state.sending.is_empty());
        assert_eq!(out.event, Some(Provenance::Resolve { own: p, other: c }));
    }

    #[test]
    fn noted_token_turns_into_joker() {
        let spec = pairing_protocol();
        let p = q(&spec, "p");
        let mut a = KnoAgent::new(q(&spec, "cs"));
        a.jokers = vec![(Label::State(p), 2)];
        let out = kno_reactor_step(&a, Delivery::Token(Token::Real(Label::State(p), 2)), &spec, 1);
        assert!(out.state.jokers.is_empty());
        assert_eq!(out.state.sending, VecDeque::from([Token::Joker]));
    }

    #[test]
    fn i3_omission_goes_to_reactor_and_i4_to_starter() {
        let spec = pairing_protocol();
        let sim = KnO::new(spec.clone(), 1).unwrap();
        let init = sim.initial_config(&spec.parse_config(&["c", "p"]).unwrap());
        let step = RunStep::omissive(0, 1, Omission::Omissive);
        for (model, holder) in [(ModelName::I3, 1), (ModelName::I4, 0)] {
            let e = Engine::new(&sim, model).unwrap();
            let mut cfg = init.clone();
            e.step(&mut cfg, &step).unwrap();
            assert_eq!(cfg[holder].joker_tokens(), 1, "{model}");
            assert_eq!(joker_count(&cfg), 1);
            assert_eq!(token_count(&cfg), 1);
        }
    }

    #[test]
    fn two_way_models_are_refused() {
        let sim = KnO::new(pairing_protocol(), 1).unwrap();
        assert!(matches!(sim.rules(ModelName::T3), Err(Error::Model(_))));
    }
}
