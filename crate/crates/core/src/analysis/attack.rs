//! The indistinguishability attack: `t` pairs of agents are fooled into
//! behaving as if alone, plus one agent that meets every pair once, so that
//! `t + 1` agents make the `q1 -> q1'` transition with only `t` partners.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::ftt::fastest_transition_time;
use crate::engine::{AgentState, Engine, Simulator};
use crate::error::{config, Error, Result};
use crate::models::ModelName;
use crate::protocol::StateId;
use crate::run::{count_omissions, Omission, RunStep};
use crate::scheduling::uniform_pair;

/// How the omissive interaction at position `k` of `I_k` is resolved in the
/// 2-agent execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmissionStyle {
    /// `d0` gets its non-omissive outcome and `d1` its outcome under an
    /// omission on `d1`'s side. This is exactly what `d0` and `d1`
    /// experience in the redirected block.
    Mixed,
    /// A legal omissive step of the model with the starter of `I[k]`.
    Legal,
}

/// One 2-agent sub-execution `I_k`, cut at `t_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prefix {
    pub k: usize,
    /// First `t_k` steps of `I_k`. Step `k` is the omissive one.
    pub steps: Vec<RunStep>,
    pub t_k: usize,
    /// Whether `d0` starts `I[k]`.
    pub d0_starts: bool,
}

/// Everything the block constructions need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackInputs {
    #[serde(serialize_with = "ser_model")]
    pub model: ModelName,
    pub t: usize,
    pub q0: StateId,
    pub q1: StateId,
    pub q1_prime: StateId,
    /// Optimal 2-agent run `I`, of length `t`.
    pub base: Vec<RunStep>,
    pub prefixes: Vec<Prefix>,
}

fn ser_model<S: serde::Serializer>(m: &ModelName, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(m.as_str())
}

/// A block `J_k` of `I*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub k: usize,
    pub steps: Vec<RunStep>,
    /// Length of the omissive block for the same `k`: `t_k + 1`.
    pub reference_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackPlan {
    pub inputs: AttackInputs,
    pub blocks: Vec<Block>,
    pub i_star: Vec<RunStep>,
    /// Number of agents, `2t + 2`.
    pub n: usize,
}

impl AttackPlan {
    pub fn omissions(&self) -> usize {
        count_omissions(&self.i_star)
    }

    /// Simulated initial states of `B_0`: `q0` at even indices below `2t`,
    /// `q1` elsewhere.
    pub fn initial_states(&self) -> Vec<StateId> {
        (0..self.n)
            .map(|i| if i < 2 * self.inputs.t && i % 2 == 0 { self.inputs.q0 } else { self.inputs.q1 })
            .collect()
    }
}

fn descriptor(model: ModelName, d1_starts: bool) -> Result<Omission> {
    model
        .descriptor_on(d1_starts)
        .ok_or_else(|| config(format!("model {model} has no omissive interactions")))
}

/// Computes `t`, `I`, and every `I_k` with its `t_k`.
pub fn attack_inputs<S: Simulator>(
    sim: &S,
    model: ModelName,
    q0: StateId,
    q1: StateId,
    style: OmissionStyle,
    cap: usize,
    seed: u64,
) -> Result<AttackInputs> {
    let spec = sim.spec();
    if !spec.contains(q0) || !spec.contains(q1) {
        return Err(config("attack states are not states of the protocol"));
    }
    if q0 == q1 || !spec.symmetric_on(q0, q1) {
        return Err(config(format!(
            "delta must be symmetric on two distinct states, got ({}, {})",
            spec.symbol(q0),
            spec.symbol(q1)
        )));
    }
    let q1_prime = spec.delta(q0, q1).1;
    let c0 = sim.initial_config(&[q0, q1]);
    let ftt = fastest_transition_time(sim, model, &c0, cap)?;
    if ftt.t == 0 {
        return Err(config("the construction needs a fastest transition time t > 0"));
    }
    let t = ftt.t;
    let engine = Engine::new(sim, model)?;
    let mut prefixes = Vec::with_capacity(t);
    for k in 0..t {
        let mut cfg = c0.clone();
        let mut steps = Vec::new();
        for s in &ftt.run[..k] {
            engine.step(&mut cfg, s)?;
            steps.push(*s);
        }
        let d0_starts = ftt.run[k].starter == 0;
        let om = descriptor(model, !d0_starts)?;
        let omissive = RunStep::omissive(ftt.run[k].starter, ftt.run[k].reactor, om);
        match style {
            OmissionStyle::Legal => {
                engine.step(&mut cfg, &omissive)?;
            }
            OmissionStyle::Mixed => {
                let mut clean = cfg.clone();
                engine.step(&mut clean, &ftt.run[k])?;
                engine.step(&mut cfg, &omissive)?;
                cfg[0] = clean[0].clone();
            }
        }
        steps.push(omissive);
        let mut t_k = steps.len();
        if cfg[1].simulated() != q1_prime {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let mut found = false;
            while steps.len() < cap {
                let (a, b) = uniform_pair(&mut rng, 2);
                let s = RunStep::new(a, b);
                engine.step(&mut cfg, &s)?;
                steps.push(s);
                if cfg[1].simulated() == q1_prime {
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(Error::ExceedsCap { what: format!("t_{k}"), cap });
            }
            t_k = steps.len();
        }
        prefixes.push(Prefix { k, steps, t_k, d0_starts });
    }
    Ok(AttackInputs { model, t, q0, q1, q1_prime, base: ftt.run, prefixes })
}

/// Renames 2-agent steps onto agents `(d0, d1)`.
pub fn relabel_steps(steps: &[RunStep], d0: usize, d1: usize) -> Vec<RunStep> {
    steps.iter().map(|s| relabel(s, d0, d1)).collect()
}

pub(crate) fn relabel(s: &RunStep, d0: usize, d1: usize) -> RunStep {
    let map = |a: usize| if a == 0 { d0 } else { d1 };
    RunStep::omissive(map(s.starter), map(s.reactor), s.omission)
}

/// Builds `I*` from inputs computed in [`OmissionStyle::Mixed`].
pub fn lemma1_plan(inputs: AttackInputs) -> Result<AttackPlan> {
    let t = inputs.t;
    let (hub, gen) = (2 * t, 2 * t + 1);
    let mut blocks = Vec::with_capacity(t);
    for p in &inputs.prefixes {
        let (a0, a1) = (2 * p.k, 2 * p.k + 1);
        let mut steps: Vec<RunStep> = p.steps[..p.k].iter().map(|s| relabel(s, a0, a1)).collect();
        steps.push(if p.d0_starts { RunStep::new(a0, hub) } else { RunStep::new(hub, a0) });
        let om = descriptor(inputs.model, !p.d0_starts)?;
        steps.push(if p.d0_starts { RunStep::omissive(gen, a1, om) } else { RunStep::omissive(a1, gen, om) });
        steps.extend(p.steps[p.k + 1..].iter().map(|s| relabel(s, a0, a1)));
        blocks.push(Block { k: p.k, steps, reference_len: p.t_k + 1 });
    }
    let i_star = blocks.iter().flat_map(|b| b.steps.iter().copied()).collect();
    Ok(AttackPlan { inputs, blocks, i_star, n: 2 * t + 2 })
}

/// Computes the inputs and assembles `I*` in one go.
pub fn lemma1_attack<S: Simulator>(
    sim: &S,
    model: ModelName,
    q0: StateId,
    q1: StateId,
    cap: usize,
    seed: u64,
) -> Result<AttackPlan> {
    if !model.is_omissive() {
        return Err(config(format!("model {model} has no omissions to exploit")));
    }
    lemma1_plan(attack_inputs(sim, model, q0, q1, OmissionStyle::Mixed, cap, seed)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackReplay {
    pub steps: usize,
    pub omissions: usize,
    /// Agents that started in `q1` and end in `q1'`.
    pub transitioned: Vec<usize>,
    /// Agents in `q1'` at the end.
    pub in_target: usize,
    /// Agents that started in `q0`.
    pub partners: usize,
}

impl AttackReplay {
    /// More `q1'` agents than `q0` partners: for Pair, a safety violation.
    pub fn violates(&self) -> bool {
        self.in_target > self.partners
    }
}

/// Runs the first `blocks` blocks of `I*` (all when `None`) from `B_0`.
///
/// `B_0` is built from copies of the 2-agent initial agents, so that each
/// copy starts with exactly the memory its 2-agent counterpart had; the
/// extra agent `a_{2t+1}` is a fresh agent in `q1`.
pub fn replay_attack<S: Simulator>(sim: &S, plan: &AttackPlan, blocks: Option<usize>) -> Result<AttackReplay> {
    let inp = &plan.inputs;
    let c0 = sim.initial_config(&[inp.q0, inp.q1]);
    let t = inp.t;
    let b0: Vec<S::Agent> = (0..plan.n)
        .map(|i| {
            if i == 2 * t + 1 {
                sim.initial_agent(2, inp.q1)
            } else if i < 2 * t && i % 2 == 0 {
                c0[0].clone()
            } else {
                c0[1].clone()
            }
        })
        .collect();
    let take = blocks.unwrap_or(plan.blocks.len()).min(plan.blocks.len());
    let steps: Vec<RunStep> = plan.blocks[..take].iter().flat_map(|b| b.steps.iter().copied()).collect();
    let engine = Engine::new(sim, inp.model)?;
    let mut cfg = b0;
    for s in &steps {
        engine.step(&mut cfg, s)?;
    }
    let initial = plan.initial_states();
    let transitioned = (0..plan.n)
        .filter(|&i| initial[i] == inp.q1 && cfg[i].simulated() == inp.q1_prime)
        .collect();
    Ok(AttackReplay {
        steps: steps.len(),
        omissions: count_omissions(&steps),
        transitioned,
        in_target: cfg.iter().filter(|a| a.simulated() == inp.q1_prime).count(),
        partners: initial.iter().filter(|&&q| q == inp.q0).count(),
    })
}
