//! Executions: per-step configurations plus simulator event annotations,
//! and their line-delimited serialization.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::AgentState;
use crate::error::{structural, Error, Result};
use crate::protocol::{ProtocolSpec, StateId};
use crate::run::{Omission, Run, RunStep};

/// Which component of `delta` an event realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Starter,
    Reactor,
}

/// Whether an event opens a simulated interaction (its partner event comes
/// later) or closes one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Opener,
    Closer,
}

/// Key under which an opener waits for its closer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchKey {
    Step(usize),
    Ids(u32, u32),
    Label(StateId, StateId),
}

/// Why a simulator assigned a simulated state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Direct application of `delta` by one side of a two-way interaction.
    Direct(Side),
    /// Locking agent applied its side of `delta` with `partner`.
    Lock { me: u32, partner: u32 },
    /// Partner of a lock applied its side of `delta`.
    Release { me: u32, partner: u32 },
    /// Reactor consumed a complete run of `run` while in state `old`.
    Consume { run: StateId, old: StateId },
    /// Pending agent consumed a state-change run labelled `(own, other)`.
    Resolve { own: StateId, other: StateId },
}

impl Provenance {
    pub fn side(&self) -> Side {
        match self {
            Provenance::Direct(side) => *side,
            Provenance::Lock { .. } | Provenance::Resolve { .. } => Side::Starter,
            Provenance::Release { .. } | Provenance::Consume { .. } => Side::Reactor,
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            Provenance::Direct(Side::Starter) | Provenance::Lock { .. } | Provenance::Consume { .. } => {
                Phase::Opener
            }
            _ => Phase::Closer,
        }
    }

    pub fn key(&self, step: usize) -> MatchKey {
        match *self {
            Provenance::Direct(_) => MatchKey::Step(step),
            Provenance::Lock { me, partner } => MatchKey::Ids(me, partner),
            Provenance::Release { me, partner } => MatchKey::Ids(partner, me),
            Provenance::Consume { run, old } => MatchKey::Label(run, old),
            Provenance::Resolve { own, other } => MatchKey::Label(own, other),
        }
    }

    pub fn encode(&self, spec: &ProtocolSpec) -> String {
        match *self {
            Provenance::Direct(Side::Starter) => "direct:s".into(),
            Provenance::Direct(Side::Reactor) => "direct:r".into(),
            Provenance::Lock { me, partner } => format!("lock:{me}:{partner}"),
            Provenance::Release { me, partner } => format!("release:{me}:{partner}"),
            Provenance::Consume { run, old } => format!("use:{}:{}", spec.symbol(run), spec.symbol(old)),
            Provenance::Resolve { own, other } => format!("ack:{}:{}", spec.symbol(own), spec.symbol(other)),
        }
    }

    pub fn decode(tag: &str, spec: &ProtocolSpec) -> Result<Self> {
        let parts: Vec<&str> = tag.split(':').collect();
        let id = |s: &str| s.parse::<u32>().map_err(|_| structural(format!("bad id in tag {tag:?}")));
        Ok(match parts.as_slice() {
            ["direct", "s"] => Provenance::Direct(Side::Starter),
            ["direct", "r"] => Provenance::Direct(Side::Reactor),
            ["lock", a, b] => Provenance::Lock { me: id(a)?, partner: id(b)? },
            ["release", a, b] => Provenance::Release { me: id(a)?, partner: id(b)? },
            ["use", a, b] => Provenance::Consume { run: spec.lookup(a)?, old: spec.lookup(b)? },
            ["ack", a, b] => Provenance::Resolve { own: spec.lookup(a)?, other: spec.lookup(b)? },
            _ => return Err(structural(format!("unknown provenance tag {tag:?}"))),
        })
    }
}

/// An agent whose simulated state the simulator declares updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventAnnotation {
    pub agent: usize,
    pub provenance: Provenance,
}

/// One executed step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord<A> {
    pub index: usize,
    pub step: RunStep,
    pub post: Vec<A>,
    pub events: Vec<EventAnnotation>,
}

/// An execution with full post configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<A> {
    pub initial: Vec<A>,
    pub records: Vec<TraceRecord<A>>,
}

impl<A: AgentState> Trace<A> {
    pub fn new(initial: Vec<A>) -> Self {
        Trace { initial, records: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.initial.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn run(&self) -> Run {
        self.records.iter().map(|r| r.step).collect()
    }

    /// Configuration after `t` steps (`t = 0` is the initial one).
    pub fn config(&self, t: usize) -> &[A] {
        if t == 0 {
            &self.initial
        } else {
            &self.records[t - 1].post
        }
    }

    pub fn final_config(&self) -> &[A] {
        self.config(self.records.len())
    }

    /// Drops simulator memory, keeping simulated states and annotations.
    pub fn project(&self) -> ProjectedTrace {
        ProjectedTrace {
            initial: self.initial.iter().map(AgentState::simulated).collect(),
            records: self
                .records
                .iter()
                .map(|r| ProjectedRecord {
                    step: r.step,
                    post: r.post.iter().map(AgentState::simulated).collect(),
                    events: r.events.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedRecord {
    pub step: RunStep,
    pub post: Vec<StateId>,
    pub events: Vec<EventAnnotation>,
}

/// A trace reduced to simulated states: everything verification needs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProjectedTrace {
    pub initial: Vec<StateId>,
    pub records: Vec<ProjectedRecord>,
}

impl ProjectedTrace {
    pub fn new(initial: Vec<StateId>) -> Self {
        ProjectedTrace { initial, records: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.initial.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Simulated configuration after `t` steps.
    pub fn config(&self, t: usize) -> &[StateId] {
        if t == 0 {
            &self.initial
        } else {
            &self.records[t - 1].post
        }
    }

    pub fn configs(&self) -> impl Iterator<Item = &[StateId]> {
        std::iter::once(self.initial.as_slice()).chain(self.records.iter().map(|r| r.post.as_slice()))
    }

    pub fn run(&self) -> Run {
        self.records.iter().map(|r| r.step).collect()
    }
}

/// First line of a serialized trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub protocol: String,
    /// Transition table in text form, for protocols that are not built in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_table: Option<String>,
    pub model: String,
    pub simulator: String,
    pub n: usize,
    pub seed: u64,
    pub initial: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EventLine {
    agent: usize,
    tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordLine {
    step: usize,
    starter: usize,
    reactor: usize,
    omission: Omission,
    events: Vec<EventLine>,
    config: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header(TraceHeader),
    Step(RecordLine),
}

/// Streams a trace as JSON lines: one header line, then one line per step.
pub struct TraceWriter<'a, W: Write> {
    out: W,
    spec: &'a ProtocolSpec,
}

impl<'a, W: Write> TraceWriter<'a, W> {
    pub fn new(mut out: W, header: &TraceHeader, spec: &'a ProtocolSpec) -> Result<Self> {
        let line = serde_json::to_string(&Line::Header(header.clone())).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
        Ok(TraceWriter { out, spec })
    }

    pub fn step<A: AgentState>(&mut self, index: usize, step: &RunStep, post: &[A], events: &[EventAnnotation]) -> Result<()> {
        let line = Line::Step(RecordLine {
            step: index,
            starter: step.starter,
            reactor: step.reactor,
            omission: step.omission,
            events: events.iter().map(|e| EventLine { agent: e.agent, tag: e.provenance.encode(self.spec) }).collect(),
            config: post.iter().map(|a| a.encode(self.spec)).collect(),
        });
        let line = serde_json::to_string(&line).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Writes a whole trace; see [`TraceWriter`].
pub fn write_trace<A: AgentState, W: Write>(
    out: &mut W,
    header: &TraceHeader,
    trace: &Trace<A>,
    spec: &ProtocolSpec,
) -> Result<()> {
    let mut w = TraceWriter::new(out, header, spec)?;
    for r in &trace.records {
        w.step(r.index, &r.step, &r.post, &r.events)?;
    }
    w.finish()?;
    Ok(())
}

/// Agent state read back from a trace file: the canonical encoding plus the
/// simulated component parsed out of it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedAgent {
    pub simulated: StateId,
    pub raw: String,
}

impl EncodedAgent {
    pub fn parse(raw: &str, spec: &ProtocolSpec) -> Result<Self> {
        let head = raw.split('|').next().unwrap_or_default();
        Ok(EncodedAgent { simulated: spec.lookup(head)?, raw: raw.to_string() })
    }
}

impl AgentState for EncodedAgent {
    fn simulated(&self) -> StateId {
        self.simulated
    }

    fn encode(&self, _spec: &ProtocolSpec) -> String {
        self.raw.clone()
    }
}

/// Reads only the header line.
pub fn read_header<R: BufRead>(input: R) -> Result<TraceHeader> {
    let first = input
        .lines()
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty trace".into() })??;
    match serde_json::from_str::<Line>(&first) {
        Ok(Line::Header(h)) => Ok(h),
        Ok(_) => Err(Error::Parse { line: 1, message: "first line is not a header".into() }),
        Err(e) => Err(Error::Parse { line: 1, message: e.to_string() }),
    }
}

/// Parses a serialized trace. The protocol must be the one named in the
/// header; use [`read_header`] first to find out which.
pub fn read_trace<R: BufRead>(input: R, spec: &ProtocolSpec) -> Result<(TraceHeader, Trace<EncodedAgent>)> {
    let mut header = None;
    let mut trace: Option<Trace<EncodedAgent>> = None;
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let parsed: Line = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        match parsed {
            Line::Header(h) => {
                if header.is_some() {
                    return Err(parse_err("duplicate header".into()));
                }
                let initial = h
                    .initial
                    .iter()
                    .map(|s| EncodedAgent::parse(s, spec))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| parse_err(e.to_string()))?;
                if initial.len() != h.n {
                    return Err(parse_err(format!("header declares n = {} but lists {} agents", h.n, initial.len())));
                }
                trace = Some(Trace::new(initial));
                header = Some(h);
            }
            Line::Step(rec) => {
                let trace = trace.as_mut().ok_or_else(|| parse_err("step before header".into()))?;
                let n = trace.n();
                if rec.step != trace.records.len() {
                    return Err(parse_err(format!("expected step {}, found {}", trace.records.len(), rec.step)));
                }
                let step = RunStep::omissive(rec.starter, rec.reactor, rec.omission);
                step.validate(n).map_err(|e| parse_err(e.to_string()))?;
                if rec.config.len() != n {
                    return Err(parse_err(format!("configuration has {} agents, expected {n}", rec.config.len())));
                }
                let post = rec
                    .config
                    .iter()
                    .map(|s| EncodedAgent::parse(s, spec))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| parse_err(e.to_string()))?;
                let events = rec
                    .events
                    .iter()
                    .map(|e| {
                        if e.agent >= n {
                            return Err(structural(format!("event agent {} out of range", e.agent)));
                        }
                        Ok(EventAnnotation { agent: e.agent, provenance: Provenance::decode(&e.tag, spec)? })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| parse_err(e.to_string()))?;
                trace.records.push(TraceRecord { index: rec.step, step, post, events });
            }
        }
    }
    match (header, trace) {
        (Some(h), Some(t)) => Ok((h, t)),
        _ => Err(Error::Parse { line: 1, message: "missing header".into() }),
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Direct(Side::Starter) => write!(f, "direct:s"),
            Provenance::Direct(Side::Reactor) => write!(f, "direct:r"),
            Provenance::Lock { me, partner } => write!(f, "lock:{me}:{partner}"),
            Provenance::Release { me, partner } => write!(f, "release:{me}:{partner}"),
            Provenance::Consume { run, old } => write!(f, "use:#{}:#{}", run.0, old.0),
            Provenance::Resolve { own, other } => write!(f, "ack:#{}:#{}", own.0, other.0),
        }
    }
}
