//! Two-way protocols as data.
//!
//! States are opaque symbols interned into a [`ProtocolSpec`]; everything
//! else in the crate refers to them through the compact [`StateId`] handle.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{structural, Result};

/// Handle for a state symbol of a particular [`ProtocolSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct StateId(pub u16);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A two-way protocol: state alphabet, initial states and a total
/// transition function `delta: Q x Q -> Q x Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolSpec {
    name: String,
    states: Vec<String>,
    initial: BTreeSet<StateId>,
    /// Row-major `states.len() x states.len()` table.
    delta: Vec<(StateId, StateId)>,
}

impl ProtocolSpec {
    /// Builds a protocol from symbol names and its non-trivial rules; every
    /// pair not listed maps to itself.
    pub fn new<S: AsRef<str>>(
        name: impl Into<String>,
        states: &[S],
        initial: &[S],
        rules: &[((S, S), (S, S))],
    ) -> Result<Self> {
        let states: Vec<String> = states.iter().map(|s| s.as_ref().to_string()).collect();
        if states.is_empty() {
            return Err(structural("protocol has no states"));
        }
        if states.len() > u16::MAX as usize {
            return Err(structural("too many states"));
        }
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '|' || c == ',') {
                return Err(structural(format!("invalid state symbol {s:?}")));
            }
            if states[..i].contains(s) {
                return Err(structural(format!("duplicate state symbol {s:?}")));
            }
        }
        let mut spec = ProtocolSpec {
            name: name.into(),
            initial: BTreeSet::new(),
            delta: Vec::new(),
            states,
        };
        let k = spec.states.len();
        spec.delta = (0..k * k)
            .map(|i| (StateId((i / k) as u16), StateId((i % k) as u16)))
            .collect();
        for s in initial {
            let id = spec.lookup(s.as_ref())?;
            spec.initial.insert(id);
        }
        for ((a, b), (c, d)) in rules {
            let (a, b) = (spec.lookup(a.as_ref())?, spec.lookup(b.as_ref())?);
            let out = (spec.lookup(c.as_ref())?, spec.lookup(d.as_ref())?);
            let slot = a.index() * k + b.index();
            spec.delta[slot] = out;
        }
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).map(|i| StateId(i as u16))
    }

    pub fn initial_states(&self) -> &BTreeSet<StateId> {
        &self.initial
    }

    pub fn contains(&self, q: StateId) -> bool {
        q.index() < self.states.len()
    }

    pub fn lookup(&self, symbol: &str) -> Result<StateId> {
        self.states
            .iter()
            .position(|s| s == symbol)
            .map(|i| StateId(i as u16))
            .ok_or_else(|| structural(format!("unknown state symbol {symbol:?} in protocol {}", self.name)))
    }

    /// Symbol name of a state. Panics on a foreign id; use [`Self::contains`]
    /// first when the id has not been validated.
    pub fn symbol(&self, q: StateId) -> &str {
        &self.states[q.index()]
    }

    pub fn delta(&self, starter: StateId, reactor: StateId) -> (StateId, StateId) {
        self.delta[starter.index() * self.states.len() + reactor.index()]
    }

    /// Non-trivial rules in row-major order.
    pub fn rules(&self) -> impl Iterator<Item = ((StateId, StateId), (StateId, StateId))> + '_ {
        self.states().flat_map(move |a| {
            self.states().filter_map(move |b| {
                let out = self.delta(a, b);
                (out != (a, b)).then_some(((a, b), out))
            })
        })
    }

    /// True when `delta(a, b) = (a', b')` and `delta(b, a) = (b', a')`.
    pub fn symmetric_on(&self, a: StateId, b: StateId) -> bool {
        let (x, y) = self.delta(a, b);
        self.delta(b, a) == (y, x)
    }

    /// Resolves a list of symbols into state ids.
    pub fn parse_config(&self, symbols: &[&str]) -> Result<Vec<StateId>> {
        symbols.iter().map(|s| self.lookup(s)).collect()
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} states)", self.name, self.states.len())
    }
}
