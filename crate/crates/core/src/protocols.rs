//! Concrete two-way protocols, the text table format, and the Pair checks.

use serde::Serialize;

use crate::error::{structural, Error, Result};
use crate::protocol::{ProtocolSpec, StateId};

pub const PAIRING: &str = "pairing";
pub const EPIDEMIC: &str = "epidemic";

/// The Pairing protocol: `(c,p) -> (cs,bot)` and `(p,c) -> (bot,cs)`.
pub fn pairing_protocol() -> ProtocolSpec {
    ProtocolSpec::new(
        PAIRING,
        &["cs", "c", "p", "bot"],
        &["c", "p"],
        &[(("c", "p"), ("cs", "bot")), (("p", "c"), ("bot", "cs"))],
    )
    .expect("pairing table is well formed")
}

/// One-shot epidemic toward `i`: a reactor copies an infected starter.
/// Deliberately asymmetric.
pub fn epidemic_protocol() -> ProtocolSpec {
    ProtocolSpec::new(EPIDEMIC, &["i", "s"], &["i", "s"], &[(("i", "s"), ("i", "i"))])
        .expect("epidemic table is well formed")
}

pub fn builtin(name: &str) -> Option<ProtocolSpec> {
    match name {
        PAIRING => Some(pairing_protocol()),
        EPIDEMIC => Some(epidemic_protocol()),
        _ => None,
    }
}

/// Parses the text table format:
///
/// ```text
/// name pairing
/// states cs c p bot
/// initial c p
/// c p -> cs bot
/// ```
///
/// `#` starts a comment. Pairs without a rule map to themselves.
pub fn parse_protocol(text: &str) -> Result<ProtocolSpec> {
    let mut name = None;
    let mut states: Option<Vec<String>> = None;
    let mut initial: Vec<String> = Vec::new();
    let mut rules: Vec<(usize, (String, String), (String, String))> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "name" if words.len() == 2 => name = Some(words[1].to_string()),
            "states" if words.len() > 1 => {
                if states.is_some() {
                    return Err(err("states declared twice".into()));
                }
                states = Some(words[1..].iter().map(|s| s.to_string()).collect());
            }
            "initial" if words.len() > 1 => initial.extend(words[1..].iter().map(|s| s.to_string())),
            _ => match words.as_slice() {
                [a, b, "->", c, d] => rules.push((line_no, (a.to_string(), b.to_string()), (c.to_string(), d.to_string()))),
                _ => return Err(err(format!("expected `q_s q_r -> q_s' q_r'`, got {line:?}"))),
            },
        }
    }
    let states = states.ok_or(Error::Parse { line: 0, message: "missing `states` line".into() })?;
    let name = name.unwrap_or_else(|| "custom".to_string());
    for (line, lhs, _) in &rules {
        if rules.iter().filter(|(_, other, _)| other == lhs).count() > 1 {
            return Err(Error::Parse { line: *line, message: format!("duplicate rule for ({}, {})", lhs.0, lhs.1) });
        }
    }
    let pairs: Vec<((String, String), (String, String))> = rules.iter().map(|(_, l, r)| (l.clone(), r.clone())).collect();
    let refs: Vec<((&str, &str), (&str, &str))> = pairs
        .iter()
        .map(|((a, b), (c, d))| ((a.as_str(), b.as_str()), (c.as_str(), d.as_str())))
        .collect();
    let states_ref: Vec<&str> = states.iter().map(String::as_str).collect();
    let initial_ref: Vec<&str> = initial.iter().map(String::as_str).collect();
    ProtocolSpec::new(name, &states_ref, &initial_ref, &refs)
}

/// Inverse of [`parse_protocol`].
pub fn protocol_to_text(spec: &ProtocolSpec) -> String {
    let sym = |q: StateId| spec.symbol(q);
    let mut out = format!("name {}\nstates", spec.name());
    for q in spec.states() {
        out.push(' ');
        out.push_str(sym(q));
    }
    out.push_str("\ninitial");
    for &q in spec.initial_states() {
        out.push(' ');
        out.push_str(sym(q));
    }
    out.push('\n');
    for ((a, b), (c, d)) in spec.rules() {
        out.push_str(&format!("{} {} -> {} {}\n", sym(a), sym(b), sym(c), sym(d)));
    }
    out
}

/// Consumers start in `c`, producers in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairingInstance {
    pub n_consumers: usize,
    pub n_producers: usize,
}

impl PairingInstance {
    pub fn new(n_consumers: usize, n_producers: usize) -> Self {
        PairingInstance { n_consumers, n_producers }
    }

    pub fn n(&self) -> usize {
        self.n_consumers + self.n_producers
    }

    pub fn target(&self) -> usize {
        self.n_consumers.min(self.n_producers)
    }

    /// Consumers first, then producers.
    pub fn initial_states(&self, spec: &ProtocolSpec) -> Result<Vec<StateId>> {
        let (c, p) = (spec.lookup("c")?, spec.lookup("p")?);
        Ok(std::iter::repeat_n(c, self.n_consumers).chain(std::iter::repeat_n(p, self.n_producers)).collect())
    }

    /// Reads the instance off a simulated configuration.
    pub fn from_config(config: &[StateId], spec: &ProtocolSpec) -> Result<Self> {
        let ids = PairingIds::of(spec)?;
        let mut inst = PairingInstance::new(0, 0);
        for (i, &q) in config.iter().enumerate() {
            if q == ids.c {
                inst.n_consumers += 1;
            } else if q == ids.p {
                inst.n_producers += 1;
            } else {
                return Err(structural(format!("agent {i} does not start as consumer or producer")));
            }
        }
        Ok(inst)
    }
}

#[derive(Debug, Clone, Copy)]
struct PairingIds {
    cs: StateId,
    c: StateId,
    p: StateId,
}

impl PairingIds {
    fn of(spec: &ProtocolSpec) -> Result<Self> {
        let expected = pairing_protocol();
        let same = spec.num_states() == expected.num_states()
            && expected.states().all(|q| spec.lookup(expected.symbol(q)).is_ok())
            && expected.states().all(|a| {
                expected.states().all(|b| {
                    let (x, y) = expected.delta(a, b);
                    let map = |q: StateId| spec.lookup(expected.symbol(q)).unwrap();
                    spec.delta(map(a), map(b)) == (map(x), map(y))
                })
            });
        if !same {
            return Err(Error::Config(format!("the pairing check needs the pairing protocol, got {}", spec.name())));
        }
        Ok(PairingIds { cs: spec.lookup("cs")?, c: spec.lookup("c")?, p: spec.lookup("p")? })
    }
}

/// Where and how a Pair property failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairingViolation {
    /// Step count after which the violation is visible.
    pub step: usize,
    pub agent: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingReport {
    pub instance: PairingInstance,
    pub steps: usize,
    pub irrevocability: Option<PairingViolation>,
    pub safety: Option<PairingViolation>,
    pub target: usize,
    pub final_cs: usize,
    pub max_cs: usize,
    /// First step from which `#cs` equals the target up to the end.
    pub stable_since: Option<usize>,
    pub liveness: bool,
}

impl PairingReport {
    pub fn passed(&self) -> bool {
        self.irrevocability.is_none() && self.safety.is_none() && self.liveness
    }
}

/// Incremental Pair checker over a sequence of simulated configurations.
#[derive(Debug, Clone)]
pub struct PairingChecker {
    ids: PairingIds,
    inst: PairingInstance,
    window: f64,
    prev: Vec<StateId>,
    steps: usize,
    irrevocability: Option<PairingViolation>,
    safety: Option<PairingViolation>,
    max_cs: usize,
    cs: usize,
    stable_since: Option<usize>,
}

impl PairingChecker {
    /// `window` is the trailing fraction of the horizon over which `#cs`
    /// must already equal the target.
    pub fn new(spec: &ProtocolSpec, initial: &[StateId], inst: PairingInstance, window: f64) -> Result<Self> {
        let ids = PairingIds::of(spec)?;
        if PairingInstance::from_config(initial, spec)? != inst {
            return Err(structural(format!(
                "initial configuration does not hold {} consumers and {} producers",
                inst.n_consumers, inst.n_producers
            )));
        }
        if !(0.0..=1.0).contains(&window) {
            return Err(Error::Config(format!("liveness window must lie in [0, 1], got {window}")));
        }
        let mut checker = PairingChecker {
            ids,
            inst,
            window,
            prev: initial.to_vec(),
            steps: 0,
            irrevocability: None,
            safety: None,
            max_cs: 0,
            cs: 0,
            stable_since: None,
        };
        checker.note_count();
        Ok(checker)
    }

    fn note_count(&mut self) {
        self.cs = self.prev.iter().filter(|&&q| q == self.ids.cs).count();
        self.max_cs = self.max_cs.max(self.cs);
        if self.safety.is_none() && self.cs > self.inst.n_producers {
            self.safety = Some(PairingViolation {
                step: self.steps,
                agent: None,
                detail: format!("{} agents in cs with {} producers", self.cs, self.inst.n_producers),
            });
        }
        if self.cs == self.inst.target() {
            self.stable_since.get_or_insert(self.steps);
        } else {
            self.stable_since = None;
        }
    }

    /// Feeds the configuration after the next step.
    pub fn observe(&mut self, config: &[StateId]) -> Result<()> {
        if config.len() != self.prev.len() {
            return Err(structural("configuration size changed"));
        }
        self.steps += 1;
        if self.irrevocability.is_none() {
            for (i, (&before, &after)) in self.prev.iter().zip(config).enumerate() {
                let detail = if before == self.ids.cs && after != self.ids.cs {
                    Some("left cs")
                } else if before != self.ids.cs && after == self.ids.cs && before != self.ids.c {
                    Some("entered cs without being a consumer")
                } else {
                    None
                };
                if let Some(d) = detail {
                    self.irrevocability = Some(PairingViolation { step: self.steps, agent: Some(i), detail: d.into() });
                    break;
                }
            }
        }
        self.prev.copy_from_slice(config);
        self.note_count();
        Ok(())
    }

    pub fn finish(&self) -> PairingReport {
        let needed = (self.steps as f64 * (1.0 - self.window)).floor() as usize;
        PairingReport {
            instance: self.inst,
            steps: self.steps,
            irrevocability: self.irrevocability.clone(),
            safety: self.safety.clone(),
            target: self.inst.target(),
            final_cs: self.cs,
            max_cs: self.max_cs,
            stable_since: self.stable_since,
            liveness: self.stable_since.is_some_and(|s| s <= needed),
        }
    }
}

/// Default trailing window for liveness.
pub const LIVENESS_WINDOW: f64 = 0.1;

/// Runs the Pair checks over `configs`, the first of which is the initial
/// configuration.
pub fn check_pairing<'a, I>(spec: &ProtocolSpec, configs: I, inst: PairingInstance, window: f64) -> Result<PairingReport>
where
    I: IntoIterator<Item = &'a [StateId]>,
{
    let mut it = configs.into_iter();
    let first = it.next().ok_or_else(|| structural("no initial configuration"))?;
    let mut checker = PairingChecker::new(spec, first, inst, window)?;
    for c in it {
        checker.observe(c)?;
    }
    Ok(checker.finish())
}
