//! Discrete-event simulator for CSMA/CA wireless LANs with RTS/CTS, NAV,
//! dynamic channel bonding and frame aggregation, plus closed-form throughput
//! oracles (a DCF fixed-point model and a continuous-time Markov network
//! model) for cross-validation.

pub mod engine;
pub mod mac;
pub mod oracles;
pub mod phy;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod traffic;
