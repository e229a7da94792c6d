//! Memory-weighted stochastic model of conversational turn-taking.
//!
//! A team of `n` members passes the floor from speaker to speaker. Member `i`
//! has a baseline propensity `pi_i` and a memory scale `d_i`; the chance of
//! taking the next turn grows with `d_i * exp(-0.5 * turns_since_last_spoke)`
//! and is zero for whoever spoke last. The crate provides:
//!
//! * [`model`]: the process itself and its exact log-likelihood;
//! * [`simulator`]: seeded, thread-count independent simulation ensembles;
//! * [`fitter`]: maximum-likelihood fits of the full, reduced (`d = 0`) and
//!   tied (team-level) variants, and held-out evaluation;
//! * [`patterns`] and [`validation`]: speaking, ABA and dyadic-exchange
//!   statistics with percentile-interval coverage checks;
//! * [`stats`] and [`trait_analysis`]: chi-squared tests, univariate OLS and
//!   AICc model ranking of fitted parameters against traits;
//! * [`ingest`]: annotation and trait parsing, versioned result files.

pub mod error;
pub mod fitter;
pub mod ingest;
pub mod model;
pub mod optimize;
pub mod patterns;
pub mod simulator;
pub mod stats;
pub mod trait_analysis;
pub mod validation;

pub use error::{Error, Result};
pub use fitter::{evaluate_split, fit, FitOptions, FitResult, ModelVariant, SplitEvaluation};
pub use model::{
    ConversationState, Gap, MemberParams, Roster, TeamParams, TurnSequence, DECAY_RATE, PI_FLOOR,
};
pub use simulator::SimConfig;
