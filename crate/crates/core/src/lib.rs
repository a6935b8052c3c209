//! Capacity-region calculators and desk-scale simulations for Gaussian
//! biometric identification systems with noisy enrollment.
//!
//! The model: bio-data X is enrolled through one Gaussian channel into Y and
//! probed through another into Z. The crate computes the trade-off region
//! between identification rate, secret-key rate, helper-storage rate, and
//! privacy leakage ([`region`]), the secrecy and leakage rate functions of
//! the storage budget with their limits and slopes ([`ratefuncs`]), and runs
//! a small typicality-based enrollment/identification codec ([`codec`]) whose
//! empirical behavior is checked against the closed forms by the estimators
//! in [`mcverify`]. All internal rates are nats; [`rate`] converts for
//! display.

pub mod cli;
pub mod codec;
pub mod gaussmodel;
pub mod region;
pub mod mcverify;
pub mod rate;
pub mod ratefuncs;
