//! Interactions, omission descriptors and runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};

/// Which side(s) of an interaction lose the transmitted information.
///
/// Two-way omissive models resolve the loss per side; one-way models have a
/// single loss site and use [`Omission::Omissive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Omission {
    None,
    Starter,
    Reactor,
    Both,
    Omissive,
}

impl Omission {
    pub fn is_omissive(self) -> bool {
        self != Omission::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Omission::None => "none",
            Omission::Starter => "starter",
            Omission::Reactor => "reactor",
            Omission::Both => "both",
            Omission::Omissive => "omissive",
        }
    }
}

impl fmt::Display for Omission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Omission {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Omission::None,
            "starter" => Omission::Starter,
            "reactor" => Omission::Reactor,
            "both" => Omission::Both,
            "omissive" => Omission::Omissive,
            other => return Err(structural(format!("unknown omission descriptor {other:?}"))),
        })
    }
}

/// One interaction `(starter, reactor)` with its omission descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunStep {
    pub starter: usize,
    pub reactor: usize,
    pub omission: Omission,
}

impl RunStep {
    pub fn new(starter: usize, reactor: usize) -> Self {
        RunStep { starter, reactor, omission: Omission::None }
    }

    pub fn omissive(starter: usize, reactor: usize, omission: Omission) -> Self {
        RunStep { starter, reactor, omission }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.starter == self.reactor {
            return Err(structural(format!("agent {} interacts with itself", self.starter)));
        }
        if self.starter >= n || self.reactor >= n {
            return Err(structural(format!(
                "interaction ({}, {}) out of range for {n} agents",
                self.starter, self.reactor
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RunStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.omission {
            Omission::None => write!(f, "({},{})", self.starter, self.reactor),
            om => write!(f, "({},{})~{}", self.starter, self.reactor, om),
        }
    }
}

/// A finite run prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub steps: Vec<RunStep>,
}

impl Run {
    pub fn new(steps: Vec<RunStep>) -> Self {
        Run { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RunStep> {
        self.steps.iter()
    }

    pub fn omissions(&self) -> usize {
        count_omissions(&self.steps)
    }
}

impl FromIterator<RunStep> for Run {
    fn from_iter<I: IntoIterator<Item = RunStep>>(iter: I) -> Self {
        Run { steps: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a Run {
    type Item = &'a RunStep;
    type IntoIter = std::slice::Iter<'a, RunStep>;

    fn into_iter(self) -> Self::IntoIter {
        self.steps.iter()
    }
}

/// Number of omissive interactions in a finite prefix.
pub fn count_omissions(steps: &[RunStep]) -> usize {
    steps.iter().filter(|s| s.omission.is_omissive()).count()
}
