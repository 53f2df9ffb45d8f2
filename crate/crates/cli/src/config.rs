//! Experiment configuration: a flat `key = value` file, environment
//! overrides, then `--set key=value` overrides, in that order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use popsim::protocols::{builtin, parse_protocol, protocol_to_text, PairingInstance, LIVENESS_WINDOW, PAIRING};
use popsim::scheduling::{AdversaryConfig, PinnedOmission};
use popsim::{ModelName, ProtocolSpec, StateId};

pub const ENV_SEED: &str = "POPSIM_SEED";
pub const ENV_OUT: &str = "POPSIM_OUT";

const KEYS: &[&str] = &[
    "protocol", "model", "simulator", "n", "initial", "consumers", "seed", "horizon", "adversary", "rate", "cutoff",
    "budget", "omissions", "checks", "window", "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimChoice {
    Direct,
    Inert,
    Sid,
    Naming,
    Kno(usize),
}

impl SimChoice {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "direct" | "none" => SimChoice::Direct,
            "inert" => SimChoice::Inert,
            "sid" => SimChoice::Sid,
            "naming" | "naming+sid" => SimChoice::Naming,
            _ if s.starts_with("naming:") => SimChoice::Naming,
            _ => match s.strip_prefix("kno:").or_else(|| s.strip_prefix("kno(o=").and_then(|r| r.strip_suffix(')'))) {
                Some(o) => SimChoice::Kno(o.parse().with_context(|| format!("bad omission bound in {s:?}"))?),
                None => bail!("unknown simulator {s:?} (direct, inert, sid, naming, kno:<o>)"),
            },
        })
    }

    /// The model a simulator runs on when none is given.
    pub fn default_model(self) -> ModelName {
        match self {
            SimChoice::Direct | SimChoice::Inert => ModelName::Tw,
            SimChoice::Sid | SimChoice::Naming => ModelName::Io,
            SimChoice::Kno(_) => ModelName::I3,
        }
    }

    /// Rejects pairs the simulators are not meant for.
    pub fn check_model(self, model: ModelName) -> Result<()> {
        let ok = match self {
            SimChoice::Direct => model == ModelName::Tw,
            SimChoice::Inert => true,
            SimChoice::Sid | SimChoice::Naming => model == ModelName::Io,
            SimChoice::Kno(_) => matches!(model, ModelName::I3 | ModelName::I4 | ModelName::It),
        };
        if !ok {
            bail!("config error: simulator {} does not run on model {model}", self.name());
        }
        Ok(())
    }

    pub fn name(self) -> String {
        match self {
            SimChoice::Direct => "direct".into(),
            SimChoice::Inert => "inert".into(),
            SimChoice::Sid => "sid".into(),
            SimChoice::Naming => "naming".into(),
            SimChoice::Kno(o) => format!("kno:{o}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub matching: bool,
    pub pairing: bool,
}

impl Checks {
    fn parse(s: &str) -> Result<Self> {
        let mut c = Checks { matching: false, pairing: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "none" => {}
                "matching" => c.matching = true,
                "pairing" => c.pairing = true,
                "all" => c = Checks { matching: true, pairing: true },
                _ => bail!("unknown check {part:?} (matching, pairing, all, none)"),
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryChoice {
    None,
    Unfair,
    Eventually,
    Single,
}

/// Raw key/value settings before interpretation.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
            s.set(k.trim(), v.trim()).with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(s)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::parse_text(&text)
            }
            None => Ok(Settings::default()),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown config key {key:?}");
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies `POPSIM_SEED` / `POPSIM_OUT`, then `key=value` overrides.
    pub fn apply_overrides(&mut self, env: impl Fn(&str) -> Option<String>, overrides: &[String]) -> Result<()> {
        if let Some(seed) = env(ENV_SEED) {
            self.set("seed", &seed)?;
        }
        if let Some(out) = env(ENV_OUT) {
            self.set("out", &out)?;
        }
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| anyhow!("override {o:?} is not key=value"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config error: {key} = {v:?}: {e}")))
            .transpose()
    }
}

/// A protocol and, when it is not built in, its table text.
#[derive(Debug, Clone)]
pub struct LoadedProtocol {
    pub spec: ProtocolSpec,
    pub table: Option<String>,
}

/// Built-in name or path to a table file.
pub fn load_protocol(name: &str) -> Result<LoadedProtocol> {
    if let Some(spec) = builtin(name) {
        return Ok(LoadedProtocol { spec, table: None });
    }
    let text = std::fs::read_to_string(name).with_context(|| format!("protocol {name:?} is neither built in nor a readable file"))?;
    let spec = parse_protocol(&text)?;
    Ok(LoadedProtocol { table: Some(protocol_to_text(&spec)), spec })
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub protocol: LoadedProtocol,
    pub model: ModelName,
    pub simulator: SimChoice,
    pub initial: Vec<StateId>,
    pub seed: u64,
    pub horizon: usize,
    pub adversary: AdversaryChoice,
    pub rate: f64,
    pub cutoff: usize,
    pub budget: Option<usize>,
    /// Omissions pinned at seeded random gaps.
    pub omissions: usize,
    pub checks: Checks,
    pub window: f64,
    pub out: PathBuf,
}

impl Experiment {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let protocol = load_protocol(s.get("protocol").unwrap_or(PAIRING))?;
        let simulator = SimChoice::parse(s.get("simulator").unwrap_or("direct"))?;
        let model = match s.get("model") {
            Some(m) => m.parse::<ModelName>().map_err(|e| anyhow!("config error: {e}"))?,
            None => simulator.default_model(),
        };
        simulator.check_model(model)?;
        let spec = &protocol.spec;
        let n: Option<usize> = s.parsed("n")?;
        let initial = match (s.get("initial"), n) {
            (Some(list), _) => {
                let syms: Vec<&str> = list.split(',').map(str::trim).collect();
                let states = spec.parse_config(&syms)?;
                if n.is_some_and(|n| n != states.len()) {
                    bail!("config error: n = {} but initial lists {} agents", n.unwrap_or_default(), states.len());
                }
                states
            }
            (None, Some(n)) if spec.name() == PAIRING => {
                let consumers: usize = s.parsed("consumers")?.unwrap_or(n / 2);
                if consumers > n {
                    bail!("config error: {consumers} consumers among {n} agents");
                }
                PairingInstance::new(consumers, n - consumers).initial_states(spec)?
            }
            (None, Some(_)) => bail!("config error: protocol {} needs an explicit initial configuration", spec.name()),
            (None, None) => bail!("config error: set n or initial"),
        };
        if initial.len() < 2 {
            bail!("config error: a system needs at least two agents");
        }
        let adversary = match s.get("adversary").unwrap_or("none") {
            "none" => AdversaryChoice::None,
            "uo" | "unfair" => AdversaryChoice::Unfair,
            "eventually" | "eno" => AdversaryChoice::Eventually,
            "single" | "eno1" => AdversaryChoice::Single,
            other => bail!("config error: unknown adversary {other:?} (none, uo, eventually, single)"),
        };
        let checks = Checks::parse(s.get("checks").unwrap_or(if spec.name() == PAIRING { "all" } else { "matching" }))?;
        if checks.pairing && spec.name() != PAIRING {
            bail!("config error: the pairing check needs the pairing protocol, got {}", spec.name());
        }
        let out = PathBuf::from(s.get("out").unwrap_or("."));
        Ok(Experiment {
            model,
            simulator,
            initial,
            seed: s.parsed("seed")?.unwrap_or(0),
            horizon: s.parsed("horizon")?.unwrap_or(100_000),
            adversary,
            rate: s.parsed("rate")?.unwrap_or(0.0),
            cutoff: s.parsed("cutoff")?.unwrap_or(usize::MAX),
            budget: s.parsed("budget")?,
            omissions: s.parsed("omissions")?.unwrap_or(0),
            checks,
            window: s.parsed("window")?.unwrap_or(LIVENESS_WINDOW),
            out,
            protocol,
        })
    }

    pub fn n(&self) -> usize {
        self.initial.len()
    }

    /// The adversary, with `omissions` pins drawn from `pins`.
    pub fn adversary_config(&self, pins: Vec<PinnedOmission>) -> Option<AdversaryConfig> {
        let cfg = match self.adversary {
            AdversaryChoice::None if pins.is_empty() => return None,
            AdversaryChoice::None | AdversaryChoice::Unfair => AdversaryConfig::unfair(self.rate),
            AdversaryChoice::Eventually => AdversaryConfig::eventually(self.rate, self.cutoff),
            AdversaryChoice::Single => {
                let pin = pins.first().copied().unwrap_or(PinnedOmission { gap: 0, pair: None, descriptor: None });
                return Some(AdversaryConfig::single(pin));
            }
        };
        let cfg = cfg.with_pins(pins);
        Some(match self.budget {
            Some(b) => cfg.with_budget(b),
            None => cfg,
        })
    }
}
