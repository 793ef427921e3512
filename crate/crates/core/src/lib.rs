//! Simulation and verification of plurality consensus on the complete graph.
//!
//! Two synchronous protocols run on two interchangeable engines:
//!
//! * the two-choices protocol: each node samples two nodes and adopts their
//!   color when the samples agree;
//! * the one-bit memory protocol: phases of one two-choices round, which also
//!   sets a bit on nodes whose samples agreed, followed by pull rounds that
//!   spread the colors of set-bit nodes.
//!
//! [`agent`] simulates every node and also runs the sequential asynchronous
//! variant. [`aggregate`] samples class-level multinomial flows and scales to
//! populations of `10^8` and beyond. [`oracle`] evaluates the closed-form
//! one-round moments both engines are checked against, and [`harness`] runs
//! seeded multi-trial experiments.

pub mod agent;
pub mod aggregate;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod output;
pub mod parse;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod schedule;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use harness::{Engine, ExperimentSpec, Initializer, Protocol, TrialRecord};
pub use model::{AgentPopulation, AggregateState, ColorId, Configuration, ProtocolParams};
pub use report::{AsyncOutcome, RoundKind, RoundReport, RunOutcome};
pub use rng::RngStream;
