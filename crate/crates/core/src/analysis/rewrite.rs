//! Omission-free variant of the attack for T1, I1 and I2: the omissive
//! pair of steps in each block is replaced by ordinary interactions that
//! leave the pair and `a_{2t}` in the same states.

use crate::analysis::attack::{attack_inputs, relabel, AttackInputs, AttackPlan, Block, OmissionStyle};
use crate::engine::Simulator;
use crate::error::{config, Result};
use crate::models::ModelName;
use crate::protocol::StateId;
use crate::run::RunStep;

/// Models the rewrite is defined for.
pub const REWRITE_MODELS: [ModelName; 3] = [ModelName::T1, ModelName::I1, ModelName::I2];

fn replacement(model: ModelName, k: usize, t: usize, d0_starts: bool) -> Result<Vec<RunStep>> {
    let (a0, a1, hub, gen) = (2 * k, 2 * k + 1, 2 * t, 2 * t + 1);
    let s = RunStep::new;
    Ok(match (model, d0_starts) {
        (ModelName::T1, true) => vec![s(a0, hub)],
        (ModelName::T1, false) => vec![s(hub, a0)],
        (ModelName::I1, true) => vec![s(a0, hub)],
        (ModelName::I1, false) => vec![s(hub, gen), s(a1, gen)],
        (ModelName::I2, true) => vec![s(a0, hub), s(a1, gen)],
        (ModelName::I2, false) => vec![s(hub, gen), s(a0, gen), s(a1, gen)],
        _ => return Err(config(format!("the omission-free rewrite is defined for T1, I1 and I2, not {model}"))),
    })
}

/// Builds the omission-free `I*` from inputs computed in
/// [`OmissionStyle::Legal`].
pub fn theorem3_rewrite(inputs: AttackInputs) -> Result<AttackPlan> {
    let t = inputs.t;
    let mut blocks = Vec::with_capacity(t);
    for p in &inputs.prefixes {
        let (a0, a1) = (2 * p.k, 2 * p.k + 1);
        let mut steps: Vec<RunStep> = p.steps[..p.k].iter().map(|s| relabel(s, a0, a1)).collect();
        steps.extend(replacement(inputs.model, p.k, t, p.d0_starts)?);
        steps.extend(p.steps[p.k + 1..].iter().map(|s| relabel(s, a0, a1)));
        blocks.push(Block { k: p.k, steps, reference_len: p.t_k + 1 });
    }
    let i_star = blocks.iter().flat_map(|b| b.steps.iter().copied()).collect();
    Ok(AttackPlan { inputs, blocks, i_star, n: 2 * t + 2 })
}

/// Computes the inputs for `model` and rewrites them.
pub fn theorem3_attack<S: Simulator>(
    sim: &S,
    model: ModelName,
    q0: StateId,
    q1: StateId,
    cap: usize,
    seed: u64,
) -> Result<AttackPlan> {
    if !REWRITE_MODELS.contains(&model) {
        return Err(config(format!("the omission-free rewrite is defined for T1, I1 and I2, not {model}")));
    }
    theorem3_rewrite(attack_inputs(sim, model, q0, q1, OmissionStyle::Legal, cap, seed)?)
}

/// Allowed `len(J_k) - (t_k + 1)` values for a block whose `I[k]` has `d0`
/// as starter (`true`) or not.
pub fn expected_delta(model: ModelName, d0_starts: bool) -> Option<isize> {
    match (model, d0_starts) {
        (ModelName::T1, _) => Some(-1),
        (ModelName::I1, true) => Some(-1),
        (ModelName::I1, false) => Some(0),
        (ModelName::I2, true) => Some(0),
        (ModelName::I2, false) => Some(1),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::attack::replay_attack;
    use crate::error::Error;
    use crate::protocols::pairing_protocol;
    use crate::run::count_omissions;
    use crate::simulators::Sid;

    #[test]
    fn rewrite_has_no_omissions_and_right_lengths() {
        let spec = pairing_protocol();
        let sim = Sid::new(spec.clone());
        let (p, c) = (spec.lookup("p").unwrap(), spec.lookup("c").unwrap());
        for model in REWRITE_MODELS {
            let plan = theorem3_attack(&sim, model, p, c, 10_000, 5).unwrap();
            assert_eq!(count_omissions(&plan.i_star), 0, "{model}");
            for (b, pre) in plan.blocks.iter().zip(&plan.inputs.prefixes) {
                let delta = b.steps.len() as isize - b.reference_len as isize;
                assert_eq!(Some(delta), expected_delta(model, pre.d0_starts), "{model} k={}", b.k);
            }
        }
    }

    #[test]
    fn sid_is_fooled_without_omissions() {
        let spec = pairing_protocol();
        let sim = Sid::new(spec.clone());
        let (p, c) = (spec.lookup("p").unwrap(), spec.lookup("c").unwrap());
        let plan = theorem3_attack(&sim, ModelName::I1, p, c, 10_000, 2).unwrap();
        let r = replay_attack(&sim, &plan, None).unwrap();
        assert_eq!(r.omissions, 0);
        assert!(r.violates(), "{r:?}");
    }

    #[test]
    fn other_models_are_rejected() {
        let spec = pairing_protocol();
        let sim = Sid::new(spec.clone());
        let (p, c) = (spec.lookup("p").unwrap(), spec.lookup("c").unwrap());
        assert!(matches!(theorem3_attack(&sim, ModelName::I3, p, c, 100, 0), Err(Error::Config(_))));
        assert!(expected_delta(ModelName::Io, true).is_none());
    }
}
