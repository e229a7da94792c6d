//! Seeded conversation generation and replication ensembles.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(master seed, replication index)`, so an ensemble is identical no matter
//! how many threads compute it or in which order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{likelihoods_into, normalize_in_place, ConversationState, TeamParams, TurnSequence};

pub const DEFAULT_REPLICATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub turns: usize,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    pub fn new(turns: usize, seed: u64, replications: usize) -> Result<Self> {
        if turns == 0 {
            return Err(Error::InvalidArgument("turns must be at least 1".into()));
        }
        if replications == 0 {
            return Err(Error::InvalidArgument("replications must be at least 1".into()));
        }
        Ok(Self { turns, seed, replications })
    }

    pub fn with_turns(turns: usize, seed: u64) -> Result<Self> {
        Self::new(turns, seed, DEFAULT_REPLICATIONS)
    }
}

/// Independent random stream `index` derived from `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF draw over `probs` in index order. Zero-probability entries are
/// never returned.
fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = i;
            if u < cumulative {
                return i;
            }
        }
    }
    // u landed in the rounding slack above the final cumulative sum.
    last_positive
}

pub fn sample_next_speaker<R: Rng + ?Sized>(
    team: &TeamParams,
    state: &ConversationState,
    rng: &mut R,
) -> Result<usize> {
    let mut buf = vec![0.0; team.len()];
    sample_with_buffer(team, state, rng, &mut buf)
}

fn sample_with_buffer<R: Rng + ?Sized>(
    team: &TeamParams,
    state: &ConversationState,
    rng: &mut R,
    buf: &mut [f64],
) -> Result<usize> {
    if state.members() != team.len() {
        return Err(Error::InvalidArgument(format!(
            "state tracks {} members but the team has {}",
            state.members(),
            team.len()
        )));
    }
    likelihoods_into(team, state, buf);
    normalize_in_place(buf)?;
    let u: f64 = rng.random();
    Ok(inverse_cdf(buf, u))
}

/// Simulates one meeting of `turns` turns, consuming `rng`.
pub fn simulate_with_rng<R: Rng + ?Sized>(
    team: &TeamParams,
    turns: usize,
    rng: &mut R,
) -> Result<TurnSequence> {
    let n = team.len();
    let mut buf = vec![0.0; n];
    let mut state = ConversationState::new(n);
    let mut speakers = Vec::with_capacity(turns);
    for _ in 0..turns {
        let s = sample_with_buffer(team, &state, rng, &mut buf)?;
        state.advance_in_place(s)?;
        speakers.push(s);
    }
    TurnSequence::new(speakers, n)
}

/// Simulates consecutive meetings with the given lengths from one stream,
/// resetting the conversation state between meetings.
pub fn simulate_meetings<R: Rng + ?Sized>(
    team: &TeamParams,
    lengths: &[usize],
    rng: &mut R,
) -> Result<Vec<TurnSequence>> {
    lengths.iter().map(|&len| simulate_with_rng(team, len, rng)).collect()
}

/// One conversation of `config.turns` turns; equal to replication 0 of
/// [`replicate_ensemble`].
pub fn simulate_conversation(team: &TeamParams, config: &SimConfig) -> Result<TurnSequence> {
    replicate(team, config, 0)
}

/// Replication `index` of the ensemble described by `config`.
pub fn replicate(team: &TeamParams, config: &SimConfig, index: u64) -> Result<TurnSequence> {
    simulate_with_rng(team, config.turns, &mut substream(config.seed, index))
}

pub fn replicate_ensemble(team: &TeamParams, config: &SimConfig) -> Result<Vec<TurnSequence>> {
    (0..config.replications as u64)
        .into_par_iter()
        .map(|r| replicate(team, config, r))
        .collect()
}

/// Maps every multi-meeting replication through `summarize` without keeping
/// the sequences around. Output is indexed by replication number.
pub fn map_ensemble<T, F>(
    team: &TeamParams,
    lengths: &[usize],
    seed: u64,
    replications: usize,
    summarize: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[TurnSequence]) -> Result<T> + Sync,
{
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let meetings = simulate_meetings(team, lengths, &mut substream(seed, r))?;
            summarize(&meetings)
        })
        .collect()
}
