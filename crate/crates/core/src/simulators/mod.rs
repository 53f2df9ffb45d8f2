//! Simulators of two-way protocols and the protocol runner itself.

pub mod degrading;
pub mod direct;
pub mod inert;
pub mod kno;
pub mod naming;
pub mod sid;

pub use degrading::Degrading;
pub use direct::Direct;
pub use inert::Inert;
pub use kno::KnO;
pub use naming::Naming;
pub use sid::Sid;
