//! The ten interaction models and the application of one interaction.
//!
//! A model is a table from omission descriptor to the pair of functions the
//! starter and the reactor apply. Protocols supply those functions through
//! [`TwoWayHooks`] (`f_s`, `f_r`, `o`, `h`) or [`OneWayHooks`] (`g`, `f`,
//! `o`, `h`); hooks that a model pins to the identity are simply never
//! called.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::run::Omission;
use crate::trace::Provenance;

/// Canonical model names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelName {
    Tw,
    It,
    Io,
    T1,
    T2,
    T3,
    I1,
    I2,
    I3,
    I4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    TwoWay,
    OneWay,
}

/// What the starter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarterRule {
    /// `f_s(a_s, a_r)`
    Fs,
    /// `g(a_s)`
    G,
    /// `o(a_s)`
    O,
    /// unchanged
    Keep,
}

/// What the reactor applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactorRule {
    /// `f_r(a_s, a_r)`
    Fr,
    /// `f(a_s, a_r)`
    F,
    /// `g(a_r)`: proximity only
    G,
    /// `h(a_r)`
    H,
    /// unchanged
    Keep,
}

impl ModelName {
    pub const ALL: [ModelName; 10] = [
        ModelName::Tw,
        ModelName::It,
        ModelName::Io,
        ModelName::T1,
        ModelName::T2,
        ModelName::T3,
        ModelName::I1,
        ModelName::I2,
        ModelName::I3,
        ModelName::I4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Tw => "tw",
            ModelName::It => "it",
            ModelName::Io => "io",
            ModelName::T1 => "t1",
            ModelName::T2 => "t2",
            ModelName::T3 => "t3",
            ModelName::I1 => "i1",
            ModelName::I2 => "i2",
            ModelName::I3 => "i3",
            ModelName::I4 => "i4",
        }
    }

    pub fn family(self) -> Family {
        match self {
            ModelName::Tw | ModelName::T1 | ModelName::T2 | ModelName::T3 => Family::TwoWay,
            _ => Family::OneWay,
        }
    }

    pub fn is_omissive(self) -> bool {
        !matches!(self, ModelName::Tw | ModelName::It | ModelName::Io)
    }

    /// `{none}` plus the omissive descriptors the model admits.
    pub fn legal_descriptors(self) -> Vec<Omission> {
        use Omission::*;
        match self {
            ModelName::Tw | ModelName::It | ModelName::Io => vec![None],
            ModelName::T1 | ModelName::T2 | ModelName::T3 => vec![None, Starter, Reactor, Both],
            ModelName::I1 | ModelName::I2 | ModelName::I3 | ModelName::I4 => vec![None, Omissive],
        }
    }

    pub fn omissive_descriptors(self) -> Vec<Omission> {
        self.legal_descriptors().into_iter().filter(|o| o.is_omissive()).collect()
    }

    /// Descriptor placing the loss (and its detection, where available) on
    /// one side of the interaction.
    pub fn descriptor_on(self, starter_side: bool) -> Option<Omission> {
        match self.family() {
            _ if !self.is_omissive() => None,
            Family::TwoWay => Some(if starter_side { Omission::Starter } else { Omission::Reactor }),
            Family::OneWay => Some(Omission::Omissive),
        }
    }

    /// The outcome rule for a descriptor.
    pub fn outcome_rule(self, omission: Omission) -> Result<(StarterRule, ReactorRule)> {
        use ModelName as M;
        use Omission as D;
        use ReactorRule as R;
        use StarterRule as S;
        let rule = match (self, omission) {
            (M::Tw | M::T1 | M::T2 | M::T3, D::None) => (S::Fs, R::Fr),
            (M::T3, D::Starter) => (S::O, R::Fr),
            (M::T3, D::Reactor) => (S::Fs, R::H),
            (M::T3, D::Both) => (S::O, R::H),
            (M::T2, D::Starter) => (S::O, R::Fr),
            (M::T2, D::Reactor) => (S::Fs, R::Keep),
            (M::T2, D::Both) => (S::O, R::Keep),
            (M::T1, D::Starter) => (S::Keep, R::Fr),
            (M::T1, D::Reactor) => (S::Fs, R::Keep),
            (M::T1, D::Both) => (S::Keep, R::Keep),
            (M::It | M::I1 | M::I2 | M::I3 | M::I4, D::None) => (S::G, R::F),
            (M::Io, D::None) => (S::Keep, R::F),
            (M::I1, D::Omissive) => (S::G, R::Keep),
            (M::I2, D::Omissive) => (S::G, R::G),
            (M::I3, D::Omissive) => (S::G, R::H),
            (M::I4, D::Omissive) => (S::O, R::H),
            (m, d) => {
                return Err(Error::Model(format!("descriptor {d} is not legal in model {m}")));
            }
        };
        Ok(rule)
    }

    /// Applies one interaction. The omissive branch is fully determined by
    /// the descriptor.
    pub fn apply_step<A: Clone>(
        self,
        rules: Rules<'_, A>,
        starter: &A,
        reactor: &A,
        omission: Omission,
    ) -> Result<(Update<A>, Update<A>)> {
        let (s_rule, r_rule) = self.outcome_rule(omission)?;
        match (self.family(), rules) {
            (Family::TwoWay, Rules::TwoWay(h)) => {
                let s = match s_rule {
                    StarterRule::Fs => h.f_s(starter, reactor)?,
                    StarterRule::O => h.o(starter)?,
                    StarterRule::Keep => Update::keep(starter),
                    StarterRule::G => unreachable!("two-way models never apply g"),
                };
                let r = match r_rule {
                    ReactorRule::Fr => h.f_r(starter, reactor)?,
                    ReactorRule::H => h.h(reactor)?,
                    ReactorRule::Keep => Update::keep(reactor),
                    ReactorRule::F | ReactorRule::G => unreachable!("two-way models never apply f or g"),
                };
                Ok((s, r))
            }
            (Family::OneWay, Rules::OneWay(h)) => {
                let s = match s_rule {
                    StarterRule::G => h.g(starter)?,
                    StarterRule::O => h.o(starter)?,
                    StarterRule::Keep => Update::keep(starter),
                    StarterRule::Fs => unreachable!("one-way models never apply f_s"),
                };
                let r = match r_rule {
                    ReactorRule::F => h.f(starter, reactor)?,
                    ReactorRule::G => h.g(reactor)?,
                    ReactorRule::H => h.h(reactor)?,
                    ReactorRule::Keep => Update::keep(reactor),
                    ReactorRule::Fr => unreachable!("one-way models never apply f_r"),
                };
                Ok((s, r))
            }
            (family, _) => Err(Error::Model(format!(
                "model {self} needs {family:?} hooks but the protocol supplies the other family"
            ))),
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == lower)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

/// A new agent state plus the event annotation emitted while producing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update<A> {
    pub state: A,
    pub event: Option<Provenance>,
}

impl<A: Clone> Update<A> {
    pub fn keep(state: &A) -> Self {
        Update { state: state.clone(), event: None }
    }
}

impl<A> Update<A> {
    pub fn quiet(state: A) -> Self {
        Update { state, event: None }
    }

    pub fn with_event(state: A, event: Provenance) -> Self {
        Update { state, event: Some(event) }
    }
}

/// Two-way transition functions plus omission-detection hooks. Errors
/// report violated simulator assumptions (e.g. duplicate identifiers).
pub trait TwoWayHooks {
    type Agent: Clone;

    fn f_s(&self, starter: &Self::Agent, reactor: &Self::Agent) -> Result<Update<Self::Agent>>;
    fn f_r(&self, starter: &Self::Agent, reactor: &Self::Agent) -> Result<Update<Self::Agent>>;

    fn o(&self, starter: &Self::Agent) -> Result<Update<Self::Agent>> {
        Ok(Update::keep(starter))
    }

    fn h(&self, reactor: &Self::Agent) -> Result<Update<Self::Agent>> {
        Ok(Update::keep(reactor))
    }
}

/// One-way transition functions plus omission-detection hooks.
pub trait OneWayHooks {
    type Agent: Clone;

    fn g(&self, agent: &Self::Agent) -> Result<Update<Self::Agent>>;
    fn f(&self, starter: &Self::Agent, reactor: &Self::Agent) -> Result<Update<Self::Agent>>;

    fn o(&self, starter: &Self::Agent) -> Result<Update<Self::Agent>> {
        Ok(Update::keep(starter))
    }

    fn h(&self, reactor: &Self::Agent) -> Result<Update<Self::Agent>> {
        Ok(Update::keep(reactor))
    }
}

/// The hook family a protocol offers for a given model.
pub enum Rules<'a, A> {
    TwoWay(&'a dyn TwoWayHooks<Agent = A>),
    OneWay(&'a dyn OneWayHooks<Agent = A>),
}

impl<A> Clone for Rules<'_, A> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<A> Copy for Rules<'_, A> {}

/// How the source model of an inclusion arrow relates to its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrowKind {
    /// The source relation is an instance of the destination relation for a
    /// suitable hook assignment.
    SpecialCase,
    /// The destination is reached by the adversary declining to omit.
    OmissionFree,
}

/// Inclusion arrows whose justification is explicit: instance-of arrows
/// inside each family, one-way into two-way embeddings, and the
/// omission-free collapses onto `TW`/`IT`.
pub fn hierarchy_arrows() -> Vec<(ModelName, ModelName, ArrowKind)> {
    use ArrowKind::*;
    use ModelName as M;
    vec![
        (M::T1, M::T2, SpecialCase),
        (M::T2, M::T3, SpecialCase),
        (M::Io, M::It, SpecialCase),
        (M::I1, M::I3, SpecialCase),
        (M::I2, M::I3, SpecialCase),
        (M::I3, M::I4, SpecialCase),
        (M::It, M::Tw, SpecialCase),
        (M::I1, M::T1, SpecialCase),
        (M::I3, M::T3, SpecialCase),
        (M::I4, M::T3, SpecialCase),
        (M::T3, M::Tw, OmissionFree),
        (M::I4, M::It, OmissionFree),
    ]
}
