//! Verification of simulations and the adversarial constructions.

pub mod attack;
pub mod derive;
pub mod events;
pub mod ftt;
pub mod matching;
pub mod rewrite;
pub mod verify;
