//! Channel orchestration, Monte Carlo runs, exact oracles and statistics.

mod audit;
mod channel;
mod config;
mod keychange;
mod oracle;
mod runner;
mod session;
mod stats;

pub use audit::{audit_trace, AuditReport};
pub use channel::{transmit, ChannelOutput, SchemeMismatch};
pub use config::{matrix_from_seed, CodeSpec, ConfigError, MatrixSource, MessageModel, ScenarioConfig};
pub use keychange::{key_change_experiment, key_changes_until_success, KeyChangeResult};
pub use oracle::{
    canonical_positions, estimate_detection, exact_escape, exact_oracle, per_photon_error, Estimate,
    OracleError, Pairing, Rational, ORACLE_MAX_K,
};
pub use runner::{metrics_from, run_scenario, run_trial, summarize, trial_stream, ScenarioOutput};
pub use session::{ExchangeOutcome, Outgoing, Session, SessionError, SessionRun, Tally};
pub use stats::{binomial_se, wilson, z95, Metric, SummaryStats};
