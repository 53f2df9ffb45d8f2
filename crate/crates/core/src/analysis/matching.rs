//! Perfect matchings of events: construction from provenance tags and an
//! independent verifier that only looks at simulated states.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::analysis::events::EventSeq;
use crate::error::{integrity, structural, Result};
use crate::protocol::ProtocolSpec;
use crate::trace::{MatchKey, Phase, Side};

/// Pairs of event positions, the starter-side event first. Events in
/// neither `pairs` nor `pending` must leave the simulated state unchanged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    /// Openers whose partner event lies beyond the analyzed prefix.
    pub pending: Vec<usize>,
}

/// Pairs each closer with the earliest compatible outstanding opener.
///
/// Pairs are sorted by their opener in the derived run, so each agent's
/// retained events must have increasing derived positions (the opener of
/// their pair, or themselves when pending). An opener is compatible when
/// it has the same key, the other side, a different agent, and keeps that
/// order for both agents. Trivial events are retained only when paired,
/// and two trivial events are never paired: the identity interaction they
/// would form is simply left out of the derived run.
pub fn construct_matching(events: &EventSeq) -> Result<Matching> {
    let ev = &events.events;
    let mut open: HashMap<MatchKey, VecDeque<usize>> = HashMap::new();
    // Agent -> (position, derived position) of its retained events.
    let mut retained: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    let mut matched = vec![false; ev.len()];
    let mut m = Matching::default();
    for (pos, e) in ev.iter().enumerate() {
        let key = e.provenance.key(e.step);
        if e.provenance.phase() == Phase::Opener {
            open.entry(key).or_default().push_back(pos);
            if !e.is_trivial() {
                retained.entry(e.agent).or_default().push((pos, pos));
            }
            continue;
        }
        let floor = retained.get(&e.agent).and_then(|r| r.last()).map(|&(_, d)| d);
        let side = e.provenance.side();
        let fits = |j: usize| {
            let o = &ev[j];
            if o.agent == e.agent || o.provenance.side() == side || floor.is_some_and(|f| j <= f) {
                return false;
            }
            if o.is_trivial() {
                if e.is_trivial() {
                    return false;
                }
                // Its first later retained event must come after it.
                let r = retained.get(&o.agent).map(Vec::as_slice).unwrap_or_default();
                let at = r.partition_point(|&(p, _)| p < j);
                return r.get(at).is_none_or(|&(_, d)| d > j);
            }
            true
        };
        let found = open.get_mut(&key).and_then(|queue| {
            let at = queue.iter().position(|&j| fits(j))?;
            queue.remove(at)
        });
        match found {
            Some(j) => {
                matched[j] = true;
                matched[pos] = true;
                m.pairs.push(if side == Side::Starter { (pos, j) } else { (j, pos) });
                if ev[j].is_trivial() {
                    let r = retained.entry(ev[j].agent).or_default();
                    let at = r.partition_point(|&(p, _)| p < j);
                    r.insert(at, (j, j));
                }
                retained.entry(e.agent).or_default().push((pos, j));
            }
            None if e.is_trivial() => {}
            None => {
                return Err(integrity(format!(
                    "event {pos} (step {}, agent {}) closes a simulated interaction nobody opened",
                    e.step, e.agent
                )))
            }
        }
    }
    for (pos, e) in ev.iter().enumerate() {
        if !matched[pos] && e.provenance.phase() == Phase::Opener && !e.is_trivial() {
            m.pending.push(pos);
        }
    }
    Ok(m)
}

/// Outcome of [`verify_matching`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchVerdict {
    pub accepted: bool,
    /// First offending pair or event, as event positions.
    pub witness: Option<Vec<usize>>,
    pub reason: Option<String>,
    pub pairs: usize,
    pub pending: usize,
}

impl MatchVerdict {
    fn reject(witness: Vec<usize>, reason: String, m: &Matching) -> Self {
        MatchVerdict { accepted: false, witness: Some(witness), reason: Some(reason), pairs: m.pairs.len(), pending: m.pending.len() }
    }
}

/// Checks `m` against the transition table using only before/after
/// simulated states. At most `n` pending openers are tolerated.
pub fn verify_matching(events: &EventSeq, m: &Matching, spec: &ProtocolSpec, n: usize) -> Result<MatchVerdict> {
    let len = events.len();
    let mut covered = vec![false; len];
    let mut mark = |p: usize| -> Result<bool> {
        if p >= len {
            return Err(structural(format!("matching references event {p} of {len}")));
        }
        Ok(std::mem::replace(&mut covered[p], true))
    };
    for &(j, k) in &m.pairs {
        if mark(j)? || mark(k)? {
            return Ok(MatchVerdict::reject(vec![j, k], "event used twice".into(), m));
        }
    }
    for &p in &m.pending {
        if mark(p)? {
            return Ok(MatchVerdict::reject(vec![p], "event used twice".into(), m));
        }
    }
    for &(j, k) in &m.pairs {
        let (x, y) = (&events.events[j], &events.events[k]);
        if x.agent == y.agent {
            return Ok(MatchVerdict::reject(vec![j, k], format!("both events belong to agent {}", x.agent), m));
        }
        if spec.delta(x.before, y.before) != (x.after, y.after) {
            let reason = format!(
                "delta({}, {}) is not ({}, {})",
                spec.symbol(x.before),
                spec.symbol(y.before),
                spec.symbol(x.after),
                spec.symbol(y.after)
            );
            return Ok(MatchVerdict::reject(vec![j, k], reason, m));
        }
    }
    if m.pending.len() > n {
        return Ok(MatchVerdict::reject(m.pending.clone(), format!("{} pending events for {n} agents", m.pending.len()), m));
    }
    if let Some(p) = (0..len).find(|&p| !covered[p] && !events.events[p].is_trivial()) {
        return Ok(MatchVerdict::reject(vec![p], "state-changing event left unmatched".into(), m));
    }
    Ok(MatchVerdict { accepted: true, witness: None, reason: None, pairs: m.pairs.len(), pending: m.pending.len() })
}
