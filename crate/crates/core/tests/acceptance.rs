//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//!
//! Run with `cargo test -p popsim --test acceptance -- --nocapture` to see
//! the lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use popsim::analysis::attack::{lemma1_attack, relabel_steps, replay_attack};
use popsim::analysis::ftt::fastest_transition_time;
use popsim::analysis::rewrite::{expected_delta, theorem3_attack, REWRITE_MODELS};
use popsim::analysis::verify::{verify_trace, VerificationReport};
use popsim::protocols::{pairing_protocol, PairingChecker, PairingInstance, LIVENESS_WINDOW};
use popsim::scheduling::{adversary_rewrite, fair_run, AdversaryConfig, PinnedOmission, SchedulerConfig};
use popsim::simulators::kno::{circulating_tokens, joker_count, token_count};
use popsim::simulators::naming::{check_naming_step, has_duplicate_ids};
use popsim::simulators::{Degrading, Direct, KnO, Naming, Sid};
use popsim::trace::ProjectedRecord;
use popsim::{count_omissions, AgentState, Engine, ModelName, ProjectedTrace, Result, RunStep, Simulator};

fn verdict(id: u32, ok: bool, detail: String) {
    println!("criterion {id}: {} - {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

fn pct(k: usize, of: usize) -> f64 {
    100.0 * k as f64 / of as f64
}

/// Consumers for the `seed`-th run at size `n`: cycles through 1..n-1.
fn split(n: usize, seed: u64) -> PairingInstance {
    let c = 1 + (seed as usize % (n - 1));
    PairingInstance::new(c, n - c)
}

/// Executes `steps` and records the projected trace, calling `per_step`
/// on the configuration after every step.
fn run_checked<S, F>(sim: &S, model: ModelName, inst: PairingInstance, steps: Vec<RunStep>, mut per_step: F) -> Result<ProjectedTrace>
where
    S: Simulator,
    F: FnMut(&[S::Agent]) -> Result<()>,
{
    let spec = sim.spec();
    let init_states = inst.initial_states(spec)?;
    let engine = Engine::new(sim, model)?;
    let mut trace = ProjectedTrace::new(init_states.clone());
    let mut cfg = sim.initial_config(&init_states);
    trace.records.reserve(steps.len());
    engine.drive(&mut cfg, steps, |_, step, post, events| {
        per_step(post)?;
        trace.records.push(ProjectedRecord {
            step: *step,
            post: post.iter().map(AgentState::simulated).collect(),
            events: events.to_vec(),
        });
        Ok(())
    })?;
    Ok(trace)
}

struct Tally {
    runs: usize,
    simulation_ok: usize,
    safe: usize,
    live: usize,
}

impl Tally {
    fn of(reports: &[VerificationReport]) -> Self {
        let p = |r: &VerificationReport| r.pairing.clone().expect("pairing checks enabled");
        Tally {
            runs: reports.len(),
            simulation_ok: reports.iter().filter(|r| r.simulation_ok()).count(),
            safe: reports.iter().filter(|r| { let p = p(r); p.safety.is_none() && p.irrevocability.is_none() }).count(),
            live: reports.iter().filter(|r| p(r).liveness).count(),
        }
    }

    fn ok(&self) -> bool {
        self.simulation_ok == self.runs && self.safe == self.runs && pct(self.live, self.runs) >= 99.0
    }

    fn describe(&self) -> String {
        format!(
            "{} runs, matching+derivation ok {}, safety+irrevocability ok {}, liveness {:.1}%",
            self.runs,
            self.simulation_ok,
            self.safe,
            pct(self.live, self.runs)
        )
    }
}

#[test]
fn criterion_1_direct_pairing() {
    let spec = pairing_protocol();
    let sim = Direct::new(spec.clone());
    let horizon = 10_000;
    let instances: Vec<PairingInstance> = (2..=10)
        .flat_map(|n| (0..=n).map(move |c| PairingInstance::new(c, n - c)))
        .collect();
    let jobs: Vec<(PairingInstance, u64)> = instances.iter().flat_map(|&i| (0..1000u64).map(move |s| (i, s))).collect();
    let results: Vec<(bool, bool)> = jobs
        .par_iter()
        .map(|&(inst, seed)| {
            let init_states = inst.initial_states(&spec).unwrap();
            let mut checker = PairingChecker::new(&spec, &init_states, inst, LIVENESS_WINDOW).unwrap();
            let engine = Engine::new(&sim, ModelName::Tw).unwrap();
            let mut cfg = sim.initial_config(&init_states);
            let run = fair_run(&SchedulerConfig::new(inst.n(), seed, horizon)).unwrap();
            engine.drive(&mut cfg, run.steps, |_, _, post, _| checker.observe(post)).unwrap();
            let r = checker.finish();
            (r.safety.is_none() && r.irrevocability.is_none(), r.liveness)
        })
        .collect();
    let safe = results.iter().filter(|r| r.0).count();
    let live = results.iter().filter(|r| r.1).count();
    verdict(
        1,
        safe == results.len() && pct(live, results.len()) >= 99.0,
        format!(
            "{} instances x 1000 seeds: safety+irrevocability {safe}/{}, liveness {:.2}%",
            instances.len(),
            results.len(),
            pct(live, results.len())
        ),
    );
}

#[test]
fn criterion_2_sid_under_io() {
    let spec = pairing_protocol();
    let sim = Sid::new(spec.clone());
    let jobs: Vec<(usize, u64)> = (2..=8).flat_map(|n| (0..100u64).map(move |s| (n, s))).collect();
    let reports: Vec<VerificationReport> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let run = fair_run(&SchedulerConfig::new(n, seed, 100_000)).unwrap();
            let tr = run_checked(&sim, ModelName::Io, split(n, seed), run.steps, |_| Ok(())).unwrap();
            verify_trace(&tr, &spec, Some(LIVENESS_WINDOW)).unwrap()
        })
        .collect();
    let t = Tally::of(&reports);
    verdict(2, t.ok(), t.describe());
}

struct KnoOutcome {
    reports: Vec<VerificationReport>,
    bound_failures: usize,
    /// Largest raw real-token count seen, noted copies included.
    max_raw_tokens: usize,
}

fn kno_reports(model: ModelName, o: usize, sizes: std::ops::RangeInclusive<usize>, seeds: u64, omissive: bool) -> KnoOutcome {
    let spec = pairing_protocol();
    let sim = KnO::new(spec.clone(), o).unwrap();
    let horizon = 100_000;
    let jobs: Vec<(usize, u64)> = sizes.flat_map(|n| (0..seeds).map(move |s| (n, s))).collect();
    let out: Vec<(VerificationReport, bool, usize)> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let base = fair_run(&SchedulerConfig::new(n, seed, horizon)).unwrap();
            let run = if omissive {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(o as u64));
                let pins = (0..o)
                    .map(|_| PinnedOmission { gap: rng.random_range(0..horizon / 2), pair: None, descriptor: None })
                    .collect();
                adversary_rewrite(&base, &AdversaryConfig::unfair(0.0).with_pins(pins), model, n, seed).unwrap()
            } else {
                base
            };
            assert!(run.omissions() <= o);
            let mut bounded = true;
            let mut raw = 0;
            let tr = run_checked(&sim, model, split(n, seed), run.steps, |post| {
                bounded &= joker_count(post) <= o && circulating_tokens(post) <= n * (o + 1);
                raw = raw.max(token_count(post));
                Ok(())
            })
            .unwrap();
            (verify_trace(&tr, &spec, Some(LIVENESS_WINDOW)).unwrap(), bounded, raw)
        })
        .collect();
    KnoOutcome {
        bound_failures: out.iter().filter(|r| !r.1).count(),
        max_raw_tokens: out.iter().map(|r| r.2).max().unwrap_or(0),
        reports: out.into_iter().map(|r| r.0).collect(),
    }
}

#[test]
fn criterion_3_kno_with_bounded_omissions() {
    let mut ok = true;
    let mut lines = Vec::new();
    for model in [ModelName::I3, ModelName::I4] {
        for o in 0..=2 {
            let k = kno_reports(model, o, 2..=6, 40, true);
            let t = Tally::of(&k.reports);
            ok &= t.ok() && k.bound_failures == 0;
            lines.push(format!(
                "{model} o={o}: {}, joker/token bound violations {}, max raw tokens {}",
                t.describe(),
                k.bound_failures,
                k.max_raw_tokens
            ));
        }
    }
    verdict(3, ok, lines.join("; "));
}

#[test]
fn criterion_4_kno_o0_under_it() {
    let k = kno_reports(ModelName::It, 0, 2..=6, 100, false);
    let t = Tally::of(&k.reports);
    verdict(
        4,
        t.ok() && k.bound_failures == 0 && k.max_raw_tokens <= 6,
        format!("{}, joker/token bound violations {}, max tokens {}", t.describe(), k.bound_failures, k.max_raw_tokens),
    );
}

#[test]
fn criterion_5_naming_then_sid() {
    let spec = pairing_protocol();
    let horizon = 100_000;
    let jobs: Vec<(usize, u64)> = (2..=8).flat_map(|n| (0..100u64).map(move |s| (n, s))).collect();
    let out: Vec<(VerificationReport, bool, bool)> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let sim = Naming::new(spec.clone(), n).unwrap();
            let run = fair_run(&SchedulerConfig::new(n, seed, horizon)).unwrap();
            let mut invariant = true;
            let mut named: Option<Vec<u32>> = None;
            let mut stable = true;
            let mut before = sim.initial_config(&split(n, seed).initial_states(&spec).unwrap());
            let tr = run_checked(&sim, ModelName::Io, split(n, seed), run.steps, |after| {
                invariant &= check_naming_step(&before, after, n).is_ok();
                before.clone_from_slice(after);
                let ids: Vec<u32> = after.iter().map(|a| a.my_id).collect();
                match &named {
                    Some(fixed) => stable &= *fixed == ids,
                    None if after.iter().all(|a| a.started) && !has_duplicate_ids(after) => named = Some(ids),
                    None => {}
                }
                Ok(())
            })
            .unwrap();
            let report = verify_trace(&tr, &spec, Some(LIVENESS_WINDOW)).unwrap();
            (report, invariant, named.is_some() && stable)
        })
        .collect();
    let invariant = out.iter().filter(|r| r.1).count();
    let named = out.iter().filter(|r| r.2).count();
    let reports: Vec<VerificationReport> = out.into_iter().map(|r| r.0).collect();
    let t = Tally::of(&reports);
    verdict(
        5,
        invariant == reports.len() && pct(named, reports.len()) >= 99.0 && t.ok(),
        format!(
            "naming invariant held in {invariant}/{} runs, unique stable ids in {:.1}%, {}",
            reports.len(),
            pct(named, reports.len()),
            t.describe()
        ),
    );
}

#[test]
fn criterion_6_lemma1_attack_on_kno() {
    let spec = pairing_protocol();
    let sim = KnO::new(spec.clone(), 1).unwrap();
    let (p, c) = (spec.lookup("p").unwrap(), spec.lookup("c").unwrap());
    let ftt = fastest_transition_time(&sim, ModelName::I3, &sim.initial_config(&[p, c]), 64).unwrap();
    let plan = lemma1_attack(&sim, ModelName::I3, p, c, 100_000, 0).unwrap();
    let t = plan.inputs.t;
    let full = replay_attack(&sim, &plan, None).unwrap();
    let first = replay_attack(&sim, &plan, Some(1)).unwrap();
    let ok = t == ftt.t
        && (1..10).contains(&t)
        && plan.n == 2 * t + 2
        && plan.omissions() == t
        && full.omissions == t
        && full.partners == t
        && full.in_target >= t + 1
        && full.transitioned.len() >= t + 1
        && first.transitioned == vec![1];
    verdict(
        6,
        ok,
        format!(
            "t = {t} (bfs {}), agents {}, omissions {}, producers {}, agents in cs {}, c->cs transitions {:?}, J_0 moves {:?}",
            ftt.t, plan.n, full.omissions, full.partners, full.in_target, full.transitioned, first.transitioned
        ),
    );
}

#[test]
fn criterion_6b_degrading_wrapper() {
    // Threshold above 1: one omission per pair is not enough to halt it.
    let spec = pairing_protocol();
    let sim = Degrading::new(KnO::new(spec.clone(), 1).unwrap(), 2, ModelName::I3).unwrap();
    let (p, c) = (spec.lookup("p").unwrap(), spec.lookup("c").unwrap());
    let plan = lemma1_attack(&sim, ModelName::I3, p, c, 100_000, 0).unwrap();
    let r = replay_attack(&sim, &plan, None).unwrap();
    println!(
        "criterion 6 (threshold 2 wrapper): {} - {} agents in cs against {} producers",
        if r.violates() { "PASS" } else { "FAIL" },
        r.in_target,
        r.partners
    );
    assert!(r.violates());
}

#[test]
fn criterion_7_omission_free_rewrite() {
    let spec = pairing_protocol();
    let sim = Sid::new(spec.clone());
    let (p, c) = (spec.lookup("p").unwrap(), spec.lookup("c").unwrap());
    let mut plans = 0;
    let mut failures = Vec::new();
    let mut violations = 0;
    for model in REWRITE_MODELS {
        for (q0, q1) in [(p, c), (c, p)] {
            for seed in 0..10 {
                let plan = theorem3_attack(&sim, model, q0, q1, 100_000, seed).unwrap();
                plans += 1;
                let t = plan.inputs.t;
                if count_omissions(&plan.i_star) != 0 || plan.n != 2 * t + 2 || plan.blocks.len() != t {
                    failures.push(format!("{model} seed {seed}: shape"));
                }
                for (b, pre) in plan.blocks.iter().zip(&plan.inputs.prefixes) {
                    let delta = b.steps.len() as isize - b.reference_len as isize;
                    let k = b.k;
                    let head_ok = b.steps[..k] == relabel_steps(&pre.steps[..k], 2 * k, 2 * k + 1);
                    let tail = &pre.steps[k + 1..];
                    let tail_ok = b.steps[b.steps.len() - tail.len()..] == relabel_steps(tail, 2 * k, 2 * k + 1);
                    if Some(delta) != expected_delta(model, pre.d0_starts) || !head_ok || !tail_ok {
                        failures.push(format!("{model} seed {seed} k {k}: delta {delta}"));
                    }
                }
                let r = replay_attack(&sim, &plan, None).unwrap();
                if r.omissions == 0 && r.violates() {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        7,
        failures.is_empty(),
        format!(
            "{plans} plans over T1/I1/I2, structural failures {:?}, omission-free Pair violations on S_ID replay {violations}/{plans}",
            failures
        ),
    );
}

#[test]
fn criterion_8_ftt_bound() {
    let spec = pairing_protocol();
    let (c, p) = (spec.lookup("c").unwrap(), spec.lookup("p").unwrap());
    let mut ok = true;
    let mut values = Vec::new();
    for o in 0..=2 {
        let sim = KnO::new(spec.clone(), o).unwrap();
        let models: &[ModelName] = if o == 0 { &[ModelName::I3, ModelName::I4, ModelName::It] } else { &[ModelName::I3, ModelName::I4] };
        for &model in models {
            let f = fastest_transition_time(&sim, model, &sim.initial_config(&[c, p]), 64).unwrap();
            ok &= f.t <= 3 * (o + 1);
            values.push(format!("{model} o={o}: {} (bound {})", f.t, 3 * (o + 1)));
        }
    }
    verdict(8, ok, values.join(", "));
}
