//! Run generation: the uniform globally-fair scheduler and the omission
//! adversaries that rewrite its runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{config, Result};
use crate::models::ModelName;
use crate::run::{Omission, Run, RunStep};

/// Parameters of the uniform scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerConfig {
    pub n: usize,
    pub seed: u64,
    pub horizon: usize,
}

impl SchedulerConfig {
    pub fn new(n: usize, seed: u64, horizon: usize) -> Self {
        SchedulerConfig { n, seed, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config(format!("scheduler needs n >= 2, got {}", self.n)));
        }
        Ok(())
    }
}

/// Draws an ordered pair of distinct agents uniformly.
pub fn uniform_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let s = rng.random_range(0..n);
    let mut r = rng.random_range(0..n - 1);
    if r >= s {
        r += 1;
    }
    (s, r)
}

/// Lazily generated omission-free run: i.i.d. uniform ordered pairs.
#[derive(Debug, Clone)]
pub struct FairScheduler {
    n: usize,
    rng: ChaCha8Rng,
}

impl FairScheduler {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        SchedulerConfig::new(n, seed, 1).validate()?;
        Ok(FairScheduler { n, rng: ChaCha8Rng::seed_from_u64(seed) })
    }
}

impl Iterator for FairScheduler {
    type Item = RunStep;

    fn next(&mut self) -> Option<RunStep> {
        let (s, r) = uniform_pair(&mut self.rng, self.n);
        Some(RunStep::new(s, r))
    }
}

/// The first `horizon` steps of the uniform scheduler.
pub fn fair_run(cfg: &SchedulerConfig) -> Result<Run> {
    cfg.validate()?;
    Ok(FairScheduler::new(cfg.n, cfg.seed)?.take(cfg.horizon).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    /// Finite insertions in every gap.
    Unfair,
    /// Insertions only before a cutoff.
    EventuallyNonOmissive,
    /// At most one omission overall.
    SingleOmission,
}

/// An omission the adversary must place. `gap = g` inserts before input
/// step `g` (`g = len` appends).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PinnedOmission {
    pub gap: usize,
    pub pair: Option<(usize, usize)>,
    pub descriptor: Option<Omission>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    /// Expected insertions per gap (geometric).
    pub rate: f64,
    /// Gap index from which no more omissions are inserted.
    pub cutoff: usize,
    /// Cap on random insertions.
    pub budget: Option<usize>,
    pub pinned: Vec<PinnedOmission>,
}

impl AdversaryConfig {
    pub fn unfair(rate: f64) -> Self {
        AdversaryConfig { kind: AdversaryKind::Unfair, rate, cutoff: usize::MAX, budget: None, pinned: Vec::new() }
    }

    pub fn eventually(rate: f64, cutoff: usize) -> Self {
        AdversaryConfig { kind: AdversaryKind::EventuallyNonOmissive, rate, cutoff, budget: None, pinned: Vec::new() }
    }

    pub fn single(pin: PinnedOmission) -> Self {
        AdversaryConfig {
            kind: AdversaryKind::SingleOmission,
            rate: 0.0,
            cutoff: usize::MAX,
            budget: Some(1),
            pinned: vec![pin],
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_pins(mut self, pins: Vec<PinnedOmission>) -> Self {
        self.pinned = pins;
        self
    }

    fn validate(&self, model: ModelName, n: usize) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(config(format!("adversary rate must be finite and >= 0, got {}", self.rate)));
        }
        let random_possible = self.rate > 0.0 && self.kind != AdversaryKind::SingleOmission;
        if (random_possible || !self.pinned.is_empty()) && !model.is_omissive() {
            return Err(config(format!("model {model} admits no omissions")));
        }
        if self.kind == AdversaryKind::SingleOmission && self.pinned.len() > 1 {
            return Err(config("the single-omission adversary accepts at most one omission"));
        }
        let legal = model.omissive_descriptors();
        for p in &self.pinned {
            if self.kind == AdversaryKind::EventuallyNonOmissive && p.gap >= self.cutoff {
                return Err(config(format!("pinned omission at gap {} is past the cutoff {}", p.gap, self.cutoff)));
            }
            if let Some((s, r)) = p.pair {
                RunStep::new(s, r).validate(n)?;
            }
            if let Some(d) = p.descriptor {
                if !legal.contains(&d) {
                    return Err(config(format!("descriptor {d} is not omissive in model {model}")));
                }
            }
        }
        Ok(())
    }
}

/// `count` omissions at gaps drawn uniformly from `0..horizon`, with random
/// pairs and descriptors.
pub fn random_pins(count: usize, horizon: usize, seed: u64) -> Vec<PinnedOmission> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0b1d_5eed_u64);
    (0..count)
        .map(|_| PinnedOmission { gap: rng.random_range(0..horizon.max(1)), pair: None, descriptor: None })
        .collect()
}

/// Inserts omissive interactions into `run`. Input steps are kept in order;
/// every inserted step is omissive.
pub fn adversary_rewrite(run: &Run, adv: &AdversaryConfig, model: ModelName, n: usize, seed: u64) -> Result<Run> {
    adv.validate(model, n)?;
    let legal = model.omissive_descriptors();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fad_0e00_u64);
    let geometric = if adv.rate > 0.0 && adv.kind != AdversaryKind::SingleOmission {
        Some(Geometric::new(1.0 / (1.0 + adv.rate)).map_err(|e| config(e.to_string()))?)
    } else {
        None
    };
    let mut budget = adv.budget.unwrap_or(usize::MAX);
    let mut out = Vec::with_capacity(run.len());
    for gap in 0..=run.len() {
        let mut pins: Vec<&PinnedOmission> = adv.pinned.iter().filter(|p| p.gap == gap).collect();
        pins.sort_by_key(|p| p.pair);
        for p in pins {
            let (s, r) = p.pair.unwrap_or_else(|| uniform_pair(&mut rng, n));
            let d = p.descriptor.unwrap_or_else(|| legal[rng.random_range(0..legal.len())]);
            out.push(RunStep::omissive(s, r, d));
        }
        if let Some(geo) = &geometric {
            if gap < adv.cutoff {
                let k = (geo.sample(&mut rng) as usize).min(budget);
                budget -= k;
                for _ in 0..k {
                    let (s, r) = uniform_pair(&mut rng, n);
                    let d = legal[rng.random_range(0..legal.len())];
                    out.push(RunStep::omissive(s, r, d));
                }
            }
        }
        if let Some(step) = run.steps.get(gap) {
            out.push(*step);
        }
    }
    Ok(Run::new(out))
}

/// Replays `steps` verbatim, optionally followed by an omission-free
/// uniform extension.
pub fn compose_run(steps: &[RunStep], extension: Option<&SchedulerConfig>) -> Result<Run> {
    for s in steps {
        if s.starter == s.reactor {
            return Err(crate::error::structural(format!("agent {} interacts with itself", s.starter)));
        }
        if let Some(cfg) = extension {
            s.validate(cfg.n)?;
        }
    }
    let mut out = steps.to_vec();
    if let Some(cfg) = extension {
        out.extend(fair_run(cfg)?.steps);
    }
    Ok(Run::new(out))
}
