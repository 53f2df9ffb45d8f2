//! The full check of one simulated execution: events, constructive
//! matching, independent verification, derived execution and, for the
//! pairing protocol, the Pair properties.

use serde::Serialize;

use crate::analysis::derive::derive_execution;
use crate::analysis::events::extract_events;
use crate::analysis::matching::{construct_matching, verify_matching, MatchVerdict};
use crate::error::{Error, Result};
use crate::protocol::ProtocolSpec;
use crate::protocols::{check_pairing, PairingInstance, PairingReport};
use crate::trace::ProjectedTrace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub steps: usize,
    pub omissions: usize,
    pub events: usize,
    pub matching: Option<MatchVerdict>,
    /// Length of the derived run (complete pairs).
    pub derived_steps: Option<usize>,
    pub pairing: Option<PairingReport>,
    /// First integrity failure, if any.
    pub failure: Option<String>,
}

impl VerificationReport {
    pub fn simulation_ok(&self) -> bool {
        self.failure.is_none() && self.matching.as_ref().is_some_and(|m| m.accepted) && self.derived_steps.is_some()
    }

    pub fn passed(&self) -> bool {
        self.simulation_ok() && self.pairing.as_ref().is_none_or(|p| p.passed())
    }
}

/// Runs every check on `trace`. Integrity problems end up in
/// `failure`; structural and configuration problems are returned as errors.
///
/// `pairing` enables the Pair checks, with the given liveness window.
pub fn verify_trace(trace: &ProjectedTrace, spec: &ProtocolSpec, pairing: Option<f64>) -> Result<VerificationReport> {
    let mut report = VerificationReport {
        steps: trace.len(),
        omissions: trace.run().omissions(),
        events: 0,
        matching: None,
        derived_steps: None,
        pairing: None,
        failure: None,
    };
    if let Some(window) = pairing {
        let inst = PairingInstance::from_config(&trace.initial, spec)?;
        report.pairing = Some(check_pairing(spec, trace.configs(), inst, window)?);
    }
    let outcome = (|| -> Result<()> {
        let events = extract_events(trace)?;
        report.events = events.len();
        let m = construct_matching(&events)?;
        let verdict = verify_matching(&events, &m, spec, trace.n())?;
        let accepted = verdict.accepted;
        report.matching = Some(verdict);
        if accepted {
            let final_config = trace.config(trace.len());
            let d = derive_execution(&events, &m, spec, &trace.initial, final_config)?;
            report.derived_steps = Some(d.run().len());
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => Ok(report),
        Err(Error::Integrity(msg)) => {
            report.failure = Some(msg);
            Ok(report)
        }
        Err(e) => Err(e),
    }
}
