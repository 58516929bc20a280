//! Data plumbing and experiment harness around [`softshed_core`].
//!
//! - [`ingest`]: hourly smart-meter CSV parsing, cleaning, day aggregation
//!   and consumer categorization.
//! - [`synth`]: seeded binomial and uniform demand profiles.
//! - [`profile_io`]: the cleaned `household_id,demand_kwh` profile format.
//! - [`experiment`]: grid sweeps and the runtime benchmark.
//! - [`report`]: deterministic JSON and CSV output.
//! - [`cli`]: the `softshed` command.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod experiment;
pub mod ingest;
pub mod profile_io;
pub mod report;
pub mod synth;

pub use softshed_core as core;
