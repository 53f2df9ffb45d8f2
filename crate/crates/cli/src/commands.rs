use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use popsim::analysis::attack::{lemma1_attack, replay_attack, AttackPlan};
use popsim::analysis::ftt::fastest_transition_time;
use popsim::analysis::rewrite::theorem3_attack;
use popsim::analysis::verify::verify_trace;
use popsim::protocols::{check_pairing, PairingInstance, PAIRING};
use popsim::scheduling::{adversary_rewrite, fair_run, random_pins, SchedulerConfig};
use popsim::simulators::{Direct, Inert, KnO, Naming, Sid};
use popsim::trace::{read_header, read_trace, ProjectedRecord, TraceHeader, TraceWriter};
use popsim::{replay, AgentState, Engine, ModelName, ProjectedTrace, ProtocolSpec, Run, Simulator, StateId};

use crate::config::{load_protocol, Experiment, LoadedProtocol, SimChoice};

/// Builds the simulator for `$choice` and evaluates `$body` with it bound
/// to `$sim`.
macro_rules! with_simulator {
    ($choice:expr, $spec:expr, $n:expr, |$sim:ident| $body:expr) => {
        match $choice {
            SimChoice::Direct => {
                let $sim = Direct::new($spec.clone());
                $body
            }
            SimChoice::Inert => {
                let $sim = Inert::new($spec.clone());
                $body
            }
            SimChoice::Sid => {
                let $sim = Sid::new($spec.clone());
                $body
            }
            SimChoice::Naming => {
                let $sim = Naming::new($spec.clone(), $n)?;
                $body
            }
            SimChoice::Kno(o) => {
                let $sim = KnO::new($spec.clone(), o)?;
                $body
            }
        }
    };
}

/// Outcome of one command: a JSON report and whether every check passed.
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
}

fn schedule(exp: &Experiment) -> Result<Run> {
    let base = fair_run(&SchedulerConfig::new(exp.n(), exp.seed, exp.horizon))?;
    let pins = random_pins(exp.omissions, exp.horizon, exp.seed);
    Ok(match exp.adversary_config(pins) {
        Some(adv) => adversary_rewrite(&base, &adv, exp.model, exp.n(), exp.seed)?,
        None => base,
    })
}

fn header(exp: &Experiment, descriptor: String, initial: Vec<String>) -> TraceHeader {
    TraceHeader {
        protocol: exp.protocol.spec.name().to_string(),
        protocol_table: exp.protocol.table.clone(),
        model: exp.model.to_string(),
        simulator: descriptor,
        n: exp.n(),
        seed: exp.seed,
        initial,
    }
}

fn execute<S: Simulator>(sim: &S, exp: &Experiment, trace_path: Option<&Path>) -> Result<Outcome> {
    let spec = sim.spec();
    let run = schedule(exp)?;
    let engine = Engine::new(sim, exp.model)?;
    let mut cfg = sim.initial_config(&exp.initial);
    let mut writer = match trace_path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let initial = cfg.iter().map(|a| a.encode(spec)).collect();
            Some(TraceWriter::new(BufWriter::new(f), &header(exp, sim.descriptor(), initial), spec)?)
        }
        None => None,
    };
    let mut trace = ProjectedTrace::new(exp.initial.clone());
    trace.records.reserve(run.len());
    let omissions = run.omissions();
    engine.drive(&mut cfg, run.steps, |i, step, post, events| {
        if let Some(w) = writer.as_mut() {
            w.step(i, step, post, events)?;
        }
        trace.records.push(ProjectedRecord {
            step: *step,
            post: post.iter().map(AgentState::simulated).collect(),
            events: events.to_vec(),
        });
        Ok(())
    })?;
    if let Some(w) = writer {
        w.finish()?;
    }
    let mut report = json!({
        "type": "run",
        "protocol": spec.name(),
        "model": exp.model.as_str(),
        "simulator": sim.descriptor(),
        "n": exp.n(),
        "seed": exp.seed,
        "steps": trace.len(),
        "omissions": omissions,
        "final": trace.config(trace.len()).iter().map(|&q| spec.symbol(q)).collect::<Vec<_>>(),
    });
    let mut passed = true;
    if exp.checks.matching {
        let v = verify_trace(&trace, spec, exp.checks.pairing.then_some(exp.window))?;
        passed &= v.passed();
        report["verification"] = serde_json::to_value(&v)?;
    } else if exp.checks.pairing {
        let inst = PairingInstance::from_config(&trace.initial, spec)?;
        let p = check_pairing(spec, trace.configs(), inst, exp.window)?;
        passed &= p.passed();
        report["pairing"] = serde_json::to_value(&p)?;
    }
    report["passed"] = json!(passed);
    Ok(Outcome { report, passed })
}

fn write_report(path: &Path, lines: &[Value]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}

pub fn cmd_run(exp: &Experiment) -> Result<Outcome> {
    std::fs::create_dir_all(&exp.out).with_context(|| format!("creating {}", exp.out.display()))?;
    let trace_path = exp.out.join("trace.jsonl");
    let out = with_simulator!(exp.simulator, exp.protocol.spec, exp.n(), |sim| execute(&sim, exp, Some(&trace_path)))?;
    write_report(&exp.out.join("report.jsonl"), std::slice::from_ref(&out.report))?;
    Ok(out)
}

pub fn cmd_batch(exp: &Experiment, seeds: std::ops::Range<u64>, traces: bool) -> Result<Outcome> {
    use rayon::prelude::*;
    std::fs::create_dir_all(&exp.out).with_context(|| format!("creating {}", exp.out.display()))?;
    let results: Vec<Result<Outcome>> = seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let mut e = exp.clone();
            e.seed = seed;
            let path = traces.then(|| exp.out.join(format!("trace-{seed}.jsonl")));
            with_simulator!(e.simulator, e.protocol.spec, e.n(), |sim| execute(&sim, &e, path.as_deref()))
        })
        .collect();
    let mut lines = Vec::with_capacity(results.len());
    let mut passed = 0;
    for r in results {
        let o = r?;
        passed += usize::from(o.passed);
        lines.push(o.report);
    }
    write_report(&exp.out.join("report.jsonl"), &lines)?;
    let total = lines.len();
    Ok(Outcome {
        report: json!({"type": "batch", "seeds": [seeds.start, seeds.end], "runs": total, "passed": passed}),
        passed: passed == total,
    })
}

fn protocol_of(h: &TraceHeader) -> Result<ProtocolSpec> {
    match &h.protocol_table {
        Some(table) => Ok(popsim::protocols::parse_protocol(table)?),
        None => Ok(load_protocol(&h.protocol)?.spec),
    }
}

fn open_trace(path: &Path) -> Result<(ProtocolSpec, TraceHeader, popsim::Trace<popsim::trace::EncodedAgent>)> {
    let open = || File::open(path).with_context(|| format!("opening {}", path.display()));
    let h = read_header(BufReader::new(open()?))?;
    let spec = protocol_of(&h)?;
    let (h, trace) = read_trace(BufReader::new(open()?), &spec)?;
    Ok((spec, h, trace))
}

pub fn cmd_verify(path: &Path, pairing: bool, window: f64) -> Result<Outcome> {
    let (spec, h, trace) = open_trace(path)?;
    if pairing && spec.name() != PAIRING {
        bail!("config error: the pairing check needs the pairing protocol, got {}", spec.name());
    }
    let v = verify_trace(&trace.project(), &spec, pairing.then_some(window))?;
    let passed = v.passed();
    let report = json!({
        "type": "verify",
        "trace": path.display().to_string(),
        "protocol": h.protocol,
        "model": h.model,
        "simulator": h.simulator,
        "verification": v,
        "passed": passed,
    });
    Ok(Outcome { report, passed })
}

pub fn cmd_replay(path: &Path) -> Result<Outcome> {
    let (spec, h, trace) = open_trace(path)?;
    let model: ModelName = h.model.parse()?;
    let choice = SimChoice::parse(&h.simulator)?;
    let initial: Vec<StateId> = trace.initial.iter().map(AgentState::simulated).collect();
    let diff = with_simulator!(choice, spec, h.n, |sim| replay(&sim, model, sim.initial_config(&initial), &trace))?;
    let report = match &diff {
        None => json!({"type": "replay", "steps": trace.len(), "identical": true, "passed": true}),
        Some(d) => json!({
            "type": "replay",
            "steps": trace.len(),
            "identical": false,
            "step": d.step,
            "agent": d.agent,
            "recorded": d.recorded,
            "replayed": d.replayed,
            "passed": false,
        }),
    };
    Ok(Outcome { report, passed: diff.is_none() })
}

pub struct SimArgs {
    pub protocol: LoadedProtocol,
    pub simulator: SimChoice,
    pub model: ModelName,
}

impl SimArgs {
    pub fn states(&self, syms: &[String]) -> Result<Vec<StateId>> {
        let syms: Vec<&str> = syms.iter().map(String::as_str).collect();
        Ok(self.protocol.spec.parse_config(&syms)?)
    }
}

pub fn cmd_ftt(args: &SimArgs, from: &[String], cap: usize) -> Result<Outcome> {
    let c0 = args.states(from)?;
    if c0.len() != 2 {
        bail!("ftt needs exactly two initial states, got {}", c0.len());
    }
    let spec = &args.protocol.spec;
    let f = with_simulator!(args.simulator, spec, 2, |sim| fastest_transition_time(&sim, args.model, &sim.initial_config(&c0), cap))?;
    let report = json!({
        "type": "ftt",
        "simulator": args.simulator.name(),
        "model": args.model.as_str(),
        "from": from,
        "t": f.t,
        "run": f.run.iter().map(ToString::to_string).collect::<Vec<_>>(),
    });
    Ok(Outcome { report, passed: true })
}

fn plan_report<S: Simulator>(sim: &S, plan: &AttackPlan) -> Result<Value> {
    let r = replay_attack(sim, plan, None)?;
    let spec = sim.spec();
    Ok(json!({
        "type": "attack",
        "model": plan.inputs.model.as_str(),
        "t": plan.inputs.t,
        "q0": spec.symbol(plan.inputs.q0),
        "q1": spec.symbol(plan.inputs.q1),
        "q1_prime": spec.symbol(plan.inputs.q1_prime),
        "agents": plan.n,
        "steps": plan.i_star.len(),
        "omissions": plan.omissions(),
        "blocks": plan.blocks.iter().map(|b| json!({"k": b.k, "len": b.steps.len(), "reference_len": b.reference_len})).collect::<Vec<_>>(),
        "replay": {
            "transitioned": r.transitioned,
            "in_target": r.in_target,
            "partners": r.partners,
            "violated": r.violates(),
        },
    }))
}

pub fn cmd_attack(args: &SimArgs, q0: &str, q1: &str, cap: usize, seed: u64, rewrite: bool) -> Result<Outcome> {
    let spec = &args.protocol.spec;
    let (q0, q1) = (spec.lookup(q0)?, spec.lookup(q1)?);
    let n = 2;
    let report = with_simulator!(args.simulator, spec, n, |sim| {
        let plan = if rewrite {
            theorem3_attack(&sim, args.model, q0, q1, cap, seed)?
        } else {
            lemma1_attack(&sim, args.model, q0, q1, cap, seed)?
        };
        plan_report(&sim, &plan)
    })?;
    Ok(Outcome { report, passed: true })
}
