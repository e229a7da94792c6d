//! Maximum-likelihood fitting of team parameters.
//!
//! The constrained problem (`sum(pi) = 1`, `pi >= PI_FLOOR`, `d >= 0`) is
//! solved in unconstrained coordinates:
//!
//! * `pi = PI_FLOOR + (1 - n * PI_FLOOR) * softmax(theta)`, with the last
//!   logit pinned to zero so `n - 1` logits are free;
//! * `d_i = exp(phi_i)`.
//!
//! Because every observed turn's eligibility set and memory decay factors
//! depend only on the data, they are precomputed once into a [`Design`]; the
//! log-likelihood and its analytic gradient are then a single pass over it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    conditional_log_likelihood, multi_meeting_log_likelihood, Roster, TeamParams, TurnSequence,
    DECAY_RATE, PI_FLOOR,
};
use crate::optimize::{minimize, BfgsOptions};
use crate::simulator::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// Per-member `pi` and `d`.
    Full,
    /// Per-member `pi`, every `d` fixed at zero.
    Reduced,
    /// Uniform `pi` and one shared `d` for the whole team.
    Tied,
}

impl ModelVariant {
    /// Free parameters once the simplex constraint on `pi` is applied.
    pub fn free_parameters(self, members: usize) -> usize {
        match self {
            ModelVariant::Full => 2 * members - 1,
            ModelVariant::Reduced => members - 1,
            ModelVariant::Tied => 1,
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            ModelVariant::Full => 0x0f11,
            ModelVariant::Reduced => 0x0aed,
            ModelVariant::Tied => 0x071e,
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVariant::Full => "full",
            ModelVariant::Reduced => "reduced",
            ModelVariant::Tied => "tied",
        })
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(ModelVariant::Full),
            "reduced" => Ok(ModelVariant::Reduced),
            "tied" => Ok(ModelVariant::Tied),
            other => Err(Error::InvalidArgument(format!("unknown model variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub restarts: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 8, tolerance: 1e-8, max_iterations: 2000, seed: 0x5eed_7a1c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub team: TeamParams,
    pub variant: ModelVariant,
    pub log_likelihood: f64,
    pub converged: bool,
    pub n_restarts_used: usize,
    pub free_parameters: usize,
    pub total_turns: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub variant: ModelVariant,
    pub split_fraction: f64,
    pub train_turns: usize,
    pub test_turns: usize,
    pub train_ll: f64,
    pub test_ll: f64,
    pub team: TeamParams,
}

/// Data-only quantities for every observed turn.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    members: usize,
    speakers: Vec<usize>,
    /// Row-major `turns x members`; `false` for the previous speaker.
    eligible: Vec<bool>,
    /// Row-major `turns x members`; `exp(-0.5 * gap)`, or 0 if never spoken.
    decay: Vec<f64>,
}

impl Design {
    pub(crate) fn new(seqs: &[TurnSequence], members: usize) -> Result<Self> {
        let total: usize = seqs.iter().map(TurnSequence::len).sum();
        let mut speakers = Vec::with_capacity(total);
        let mut eligible = Vec::with_capacity(total * members);
        let mut decay = Vec::with_capacity(total * members);
        for seq in seqs {
            seq.validate_for(members)?;
            let mut last: Vec<Option<usize>> = vec![None; members];
            for (t, &s) in seq.speakers().iter().enumerate() {
                for l in &last {
                    let gap = l.map(|u| t - u);
                    eligible.push(gap != Some(1));
                    decay.push(match gap {
                        Some(g) if g > 1 => (-DECAY_RATE * g as f64).exp(),
                        _ => 0.0,
                    });
                }
                speakers.push(s);
                last[s] = Some(t);
            }
        }
        Ok(Self { members, speakers, eligible, decay })
    }

    pub(crate) fn turns(&self) -> usize {
        self.speakers.len()
    }

    /// Log-likelihood at `(pi, d)`; when `grad` is given, also accumulates
    /// `d LL / d pi` into `grad[..n]` and `d LL / d d` into `grad[n..]`.
    pub(crate) fn log_likelihood(&self, pi: &[f64], d: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let n = self.members;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut ll = 0.0;
        for (t, &h) in self.speakers.iter().enumerate() {
            let elig = &self.eligible[t * n..(t + 1) * n];
            let dec = &self.decay[t * n..(t + 1) * n];
            let mut sum = 0.0;
            for j in 0..n {
                if elig[j] {
                    sum += pi[j] + d[j] * dec[j];
                }
            }
            let own = pi[h] + d[h] * dec[h];
            ll += own.ln() - sum.ln();
            if let Some(g) = grad.as_deref_mut() {
                let inv_sum = 1.0 / sum;
                for j in 0..n {
                    if elig[j] {
                        g[j] -= inv_sum;
                        g[n + j] -= dec[j] * inv_sum;
                    }
                }
                let inv_own = 1.0 / own;
                g[h] += inv_own;
                g[n + h] += dec[h] * inv_own;
            }
        }
        ll
    }
}

/// Maps unconstrained coordinates to `(pi, d)` for one variant.
#[derive(Debug, Clone, Copy)]
struct Encoding {
    variant: ModelVariant,
    members: usize,
}

/// Starting memory scale used to encode an exact zero.
const ZERO_D_START: f64 = 1e-6;

impl Encoding {
    #[cfg(test)]
    fn dim(&self) -> usize {
        self.variant.free_parameters(self.members)
    }

    fn softmax(&self, logits: &[f64]) -> Vec<f64> {
        let n = self.members;
        let mut s: Vec<f64> = (0..n).map(|i| if i + 1 < n { logits[i] } else { 0.0 }).collect();
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        s.iter_mut().for_each(|v| *v = (*v - max).exp());
        let total: f64 = s.iter().sum();
        s.iter_mut().for_each(|v| *v /= total);
        s
    }

    fn span(&self) -> f64 {
        1.0 - self.members as f64 * PI_FLOOR
    }

    fn decode(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.members;
        match self.variant {
            ModelVariant::Full | ModelVariant::Reduced => {
                let s = self.softmax(&x[..n - 1]);
                let pi = s.iter().map(|v| PI_FLOOR + self.span() * v).collect();
                let d = if self.variant == ModelVariant::Full {
                    x[n - 1..].iter().map(|v| v.exp()).collect()
                } else {
                    vec![0.0; n]
                };
                (pi, d, s)
            }
            ModelVariant::Tied => {
                let u = 1.0 / n as f64;
                (vec![u; n], vec![x[0].exp(); n], vec![u; n])
            }
        }
    }

    fn encode(&self, pi: &[f64], d: &[f64]) -> Vec<f64> {
        let n = self.members;
        let logits = || {
            let s: Vec<f64> =
                pi.iter().map(|p| ((p - PI_FLOOR) / self.span()).max(1e-12)).collect();
            let last = s[n - 1].ln();
            s[..n - 1].iter().map(|v| v.ln() - last).collect::<Vec<f64>>()
        };
        let log_d = |v: f64| v.max(ZERO_D_START).ln();
        match self.variant {
            ModelVariant::Full => {
                let mut x = logits();
                x.extend(d.iter().map(|&v| log_d(v)));
                x
            }
            ModelVariant::Reduced => logits(),
            ModelVariant::Tied => vec![log_d(d.iter().sum::<f64>() / n as f64)],
        }
    }

    /// Negative log-likelihood and its gradient in encoded coordinates.
    fn objective(&self, design: &Design, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.members;
        let (pi, d, s) = self.decode(x);
        let mut g = vec![0.0; 2 * n];
        let ll = design.log_likelihood(&pi, &d, Some(&mut g));
        if !ll.is_finite() {
            return f64::INFINITY;
        }
        match self.variant {
            ModelVariant::Full | ModelVariant::Reduced => {
                let weighted: f64 = (0..n).map(|i| s[i] * g[i]).sum();
                for k in 0..n - 1 {
                    grad[k] = -self.span() * s[k] * (g[k] - weighted);
                }
                if self.variant == ModelVariant::Full {
                    for i in 0..n {
                        grad[n - 1 + i] = -d[i] * g[n + i];
                    }
                }
            }
            ModelVariant::Tied => {
                grad[0] = -(0..n).map(|i| d[i] * g[n + i]).sum::<f64>();
            }
        }
        -ll
    }
}

#[derive(Debug, Clone)]
struct Start {
    pi: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Candidate {
    pi: Vec<f64>,
    d: Vec<f64>,
    log_likelihood: f64,
    converged: bool,
}

fn run_start(enc: Encoding, design: &Design, start: &Start, opts: &FitOptions) -> Candidate {
    let bfgs = BfgsOptions {
        tolerance: opts.tolerance,
        max_iterations: opts.max_iterations,
        ..Default::default()
    };
    let x0 = enc.encode(&start.pi, &start.d);
    let found = minimize(|x, g| enc.objective(design, x, g), &x0, &bfgs);
    let (pi, d, _) = enc.decode(&found.x);
    let optimized = Candidate { pi, d, log_likelihood: -found.value, converged: found.converged };
    // The exact start may sit on a boundary (d = 0) the encoding only approaches.
    let at_start = design.log_likelihood(&start.pi, &start.d, None);
    if at_start.is_finite() && at_start > optimized.log_likelihood {
        Candidate { pi: start.pi.clone(), d: start.d.clone(), log_likelihood: at_start, ..optimized }
    } else {
        optimized
    }
}

fn empirical_shares(design: &Design) -> Vec<f64> {
    let n = design.members;
    let mut counts = vec![1.0; n];
    for &s in &design.speakers {
        counts[s] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

fn random_start<R: Rng>(variant: ModelVariant, n: usize, rng: &mut R) -> Start {
    let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let pi = w.iter().map(|v| v / total).collect();
    let mut draw_d = || rng.random_range(0.05f64.ln()..5.0f64.ln()).exp();
    let d = match variant {
        ModelVariant::Full => (0..n).map(|_| draw_d()).collect(),
        ModelVariant::Reduced => vec![0.0; n],
        ModelVariant::Tied => vec![draw_d(); n],
    };
    Start { pi, d }
}

/// Initial points for every restart. FULL always includes the REDUCED and
/// TIED optima so its result can never fall below either nested model.
fn starts(design: &Design, variant: ModelVariant, opts: &FitOptions) -> Vec<Start> {
    let n = design.members;
    let restarts = opts.restarts.max(1);
    let uniform = vec![1.0 / n as f64; n];
    let mut out = match variant {
        ModelVariant::Reduced => vec![
            Start { pi: empirical_shares(design), d: vec![0.0; n] },
            Start { pi: uniform, d: vec![0.0; n] },
        ],
        ModelVariant::Tied => vec![Start { pi: uniform, d: vec![1.0; n] }],
        ModelVariant::Full => {
            let reduced = optimize_design(design, ModelVariant::Reduced, opts);
            let tied = optimize_design(design, ModelVariant::Tied, opts);
            vec![
                Start { pi: reduced.pi.clone(), d: vec![0.0; n] },
                Start { pi: tied.pi, d: tied.d },
                Start { pi: reduced.pi, d: vec![1.0; n] },
            ]
        }
    };
    out.truncate(restarts);
    let mut index = out.len() as u64;
    while out.len() < restarts {
        let mut rng = substream(opts.seed ^ variant.stream_tag(), index);
        out.push(random_start(variant, n, &mut rng));
        index += 1;
    }
    out
}

/// Best restart; ties go to the lowest restart index.
fn optimize_design(design: &Design, variant: ModelVariant, opts: &FitOptions) -> Candidate {
    let enc = Encoding { variant, members: design.members };
    let candidates: Vec<Candidate> = starts(design, variant, opts)
        .par_iter()
        .map(|s| run_start(enc, design, s, opts))
        .collect();
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.log_likelihood > candidates[best].log_likelihood {
            best = i;
        }
    }
    candidates.into_iter().nth(best).expect("at least one restart")
}

/// Maximum-likelihood fit of `variant` to the meetings in `data`.
pub fn fit(
    data: &[TurnSequence],
    roster: &Roster,
    variant: ModelVariant,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = roster.len();
    let design = Design::new(data, n)?;
    let total = design.turns();
    let k = variant.free_parameters(n);
    if total < k + 1 {
        return Err(Error::InsufficientData(format!(
            "{total} turns cannot identify {k} free parameters"
        )));
    }
    let mut warnings = Vec::new();
    if total < 10 * k {
        warnings.push(format!("only {total} turns for {k} free parameters (fewer than 10 per parameter)"));
    }
    if n == 2 {
        warnings.push(
            "two-member team: turns after the first are forced, so only the opening turn informs pi"
                .to_string(),
        );
    }
    let mut spoke = vec![false; n];
    for seq in data {
        for &s in seq.speakers() {
            spoke[s] = true;
        }
    }
    for (i, _) in spoke.iter().enumerate().filter(|(_, s)| !**s) {
        warnings.push(format!("member {:?} never speaks; pi driven to the floor", roster.name(i)));
    }

    let best = optimize_design(&design, variant, opts);
    let team = TeamParams::from_vectors(roster.clone(), &best.pi, &best.d)?;
    let log_likelihood = multi_meeting_log_likelihood(&team, data)?;
    if !best.converged {
        warnings.push(format!(
            "optimizer did not converge within {} iterations",
            opts.max_iterations
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FitResult {
        team,
        variant,
        log_likelihood,
        converged: best.converged,
        n_restarts_used: opts.restarts.max(1),
        free_parameters: k,
        total_turns: total,
        warnings,
    })
}

/// Number of turns in the first `fraction` of the concatenated timeline.
pub fn split_point(total: usize, fraction: f64) -> usize {
    (fraction * total as f64 + 1e-9).floor() as usize
}

/// Meetings truncated to the first `cut` turns of the concatenated timeline.
pub fn training_prefix(data: &[TurnSequence], cut: usize) -> Vec<TurnSequence> {
    let mut remaining = cut;
    let mut out = Vec::new();
    for seq in data {
        if remaining == 0 {
            break;
        }
        let take = remaining.min(seq.len());
        out.push(seq.prefix(take));
        remaining -= take;
    }
    out
}

/// Fits on the first `fraction` of all turns and scores the rest, each held-out
/// turn conditioned on the true history of its meeting.
pub fn evaluate_split(
    data: &[TurnSequence],
    roster: &Roster,
    variant: ModelVariant,
    fraction: f64,
    opts: &FitOptions,
) -> Result<SplitEvaluation> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("split fraction {fraction} not in (0, 1)")));
    }
    let total: usize = data.iter().map(TurnSequence::len).sum();
    let cut = split_point(total, fraction);
    if cut >= total {
        return Err(Error::InsufficientData(format!(
            "split at {fraction} of {total} turns leaves no test turns"
        )));
    }
    let train = training_prefix(data, cut);
    let fitted = fit(&train, roster, variant, opts)?;
    let test_ll = conditional_log_likelihood(&fitted.team, data, cut)?;
    Ok(SplitEvaluation {
        variant,
        split_fraction: fraction,
        train_turns: cut,
        test_turns: total - cut,
        train_ll: fitted.log_likelihood,
        test_ll,
        team: fitted.team,
    })
}
