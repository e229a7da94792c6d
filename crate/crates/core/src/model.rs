//! Core turn-taking process.
//!
//! Each member `i` carries a baseline propensity `pi_i` and a memory scale
//! `d_i`. At turn `t` the member who spoke at `t - 1` is ineligible; every other
//! member has likelihood `pi_i + d_i * exp(-0.5 * (t - t_last_i))`, where the
//! memory term vanishes for members who have not spoken yet. Likelihoods are
//! normalized into the next-speaker distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible baseline propensity.
pub const PI_FLOOR: f64 = 1e-9;

/// Fixed exponential decay rate of the memory term.
pub const DECAY_RATE: f64 = 0.5;

/// Tolerance on `sum(pi) == 1` for the canonical form.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Ordered, unique member identifiers of one team.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Roster {
    members: Vec<String>,
}

impl Roster {
    pub fn new<S: Into<String>>(members: impl IntoIterator<Item = S>) -> Result<Self> {
        let members: Vec<String> = members.into_iter().map(Into::into).collect();
        if members.len() < 2 {
            return Err(Error::InvalidRoster(format!(
                "need at least 2 members, got {}",
                members.len()
            )));
        }
        for (i, m) in members.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::InvalidRoster(format!("member {i} has an empty identifier")));
            }
            if members[..i].contains(m) {
                return Err(Error::InvalidRoster(format!("duplicate member identifier {m:?}")));
            }
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn name(&self, index: usize) -> &str {
        &self.members[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.members.iter().position(|m| m == id)
    }
}

impl TryFrom<Vec<String>> for Roster {
    type Error = Error;

    fn try_from(members: Vec<String>) -> Result<Self> {
        Roster::new(members)
    }
}

impl From<Roster> for Vec<String> {
    fn from(roster: Roster) -> Self {
        roster.members
    }
}

/// Per-member `(pi, d)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberParams {
    pub pi: f64,
    pub d: f64,
}

impl MemberParams {
    pub fn new(pi: f64, d: f64) -> Result<Self> {
        let p = Self { pi, d };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !self.pi.is_finite() || self.pi < PI_FLOOR {
            return Err(Error::InvalidParams(format!(
                "pi = {} must be finite and at least {PI_FLOOR:e}",
                self.pi
            )));
        }
        if !self.d.is_finite() || self.d < 0.0 {
            return Err(Error::InvalidParams(format!(
                "d = {} must be finite and non-negative",
                self.d
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawTeamParams {
    roster: Roster,
    params: Vec<MemberParams>,
}

/// Parameters for every member of a roster.
///
/// `normalized` records whether the baseline propensities sum to one, which
/// is the canonical form produced by the fitter. Probabilities are invariant
/// to a joint positive rescaling of all `(pi, d)`, so non-canonical values
/// are accepted and describe the same process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTeamParams")]
pub struct TeamParams {
    roster: Roster,
    params: Vec<MemberParams>,
    normalized: bool,
}

impl TryFrom<RawTeamParams> for TeamParams {
    type Error = Error;

    fn try_from(raw: RawTeamParams) -> Result<Self> {
        TeamParams::new(raw.roster, raw.params)
    }
}

impl TeamParams {
    pub fn new(roster: Roster, params: Vec<MemberParams>) -> Result<Self> {
        if params.len() != roster.len() {
            return Err(Error::InvalidParams(format!(
                "{} parameter pairs for a roster of {}",
                params.len(),
                roster.len()
            )));
        }
        for p in &params {
            p.validate()?;
        }
        let sum: f64 = params.iter().map(|p| p.pi).sum();
        Ok(Self {
            roster,
            params,
            normalized: (sum - 1.0).abs() <= NORMALIZATION_TOL,
        })
    }

    /// Builds parameters from separate `pi` and `d` slices.
    pub fn from_vectors(roster: Roster, pi: &[f64], d: &[f64]) -> Result<Self> {
        if pi.len() != d.len() {
            return Err(Error::InvalidParams(format!(
                "pi has {} entries but d has {}",
                pi.len(),
                d.len()
            )));
        }
        let params = pi.iter().zip(d).map(|(&pi, &d)| MemberParams { pi, d }).collect();
        Self::new(roster, params)
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn params(&self) -> &[MemberParams] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn pi(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.pi).collect()
    }

    pub fn d(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.d).collect()
    }

    /// Multiplies every `pi` and `d` by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {factor} must be positive")));
        }
        let params = self
            .params
            .iter()
            .map(|p| MemberParams { pi: p.pi * factor, d: p.d * factor })
            .collect();
        Self::new(self.roster.clone(), params)
    }

    /// Rescales to the canonical form `sum(pi) == 1`.
    pub fn normalized(&self) -> Result<Self> {
        let sum: f64 = self.params.iter().map(|p| p.pi).sum();
        let mut out = self.scaled(1.0 / sum)?;
        out.normalized = true;
        Ok(out)
    }
}

/// Turns elapsed since a member last spoke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gap {
    Turns(u64),
    /// The member has not spoken yet in this meeting.
    Never,
}

/// Memory boost `d * exp(-0.5 * gap)`.
pub fn memory_value(d: f64, gap: Gap) -> Result<f64> {
    match gap {
        Gap::Turns(0) => Err(Error::ZeroGap),
        Gap::Never => Ok(0.0),
        _ if d == 0.0 => Ok(0.0),
        Gap::Turns(g) => Ok(d * (-DECAY_RATE * g as f64).exp()),
    }
}

/// Ordered speaker indices of one meeting. Consecutive entries always differ.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TurnSequence {
    speakers: Vec<usize>,
}

impl TurnSequence {
    /// Validates indices against a roster of `members` and the
    /// no-consecutive-repeat rule.
    pub fn new(speakers: Vec<usize>, members: usize) -> Result<Self> {
        if let Some(&bad) = speakers.iter().find(|&&s| s >= members) {
            return Err(Error::InvalidSequence(format!(
                "speaker index {bad} out of range for {members} members"
            )));
        }
        Self::unchecked_members(speakers)
    }

    fn unchecked_members(speakers: Vec<usize>) -> Result<Self> {
        if let Some(pos) = speakers.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidSequence(format!(
                "speaker {} repeats at turns {} and {}",
                speakers[pos],
                pos + 1,
                pos + 2
            )));
        }
        Ok(Self { speakers })
    }

    pub fn speakers(&self) -> &[usize] {
        &self.speakers
    }

    pub fn len(&self) -> usize {
        self.speakers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty()
    }

    /// Checks every index against `members`.
    pub fn validate_for(&self, members: usize) -> Result<()> {
        match self.speakers.iter().find(|&&s| s >= members) {
            Some(bad) => Err(Error::InvalidSequence(format!(
                "speaker index {bad} out of range for {members} members"
            ))),
            None => Ok(()),
        }
    }

    /// First `len` turns.
    pub fn prefix(&self, len: usize) -> TurnSequence {
        TurnSequence { speakers: self.speakers[..len.min(self.speakers.len())].to_vec() }
    }
}

impl TryFrom<Vec<usize>> for TurnSequence {
    type Error = Error;

    fn try_from(speakers: Vec<usize>) -> Result<Self> {
        TurnSequence::unchecked_members(speakers)
    }
}

impl From<TurnSequence> for Vec<usize> {
    fn from(seq: TurnSequence) -> Self {
        seq.speakers
    }
}

/// Per-member bookkeeping of the most recent turn (1-based), plus the index
/// of the turn about to be taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversationState {
    last_spoke: Vec<Option<u64>>,
    current_turn: u64,
}

impl ConversationState {
    /// Fresh meeting: nobody has spoken, next turn is 1.
    pub fn new(members: usize) -> Self {
        Self { last_spoke: vec![None; members], current_turn: 1 }
    }

    pub fn from_parts(last_spoke: Vec<Option<u64>>, current_turn: u64) -> Result<Self> {
        if current_turn == 0 {
            return Err(Error::InvalidState("turn indices are 1-based".into()));
        }
        let mut previous = 0;
        for t in last_spoke.iter().flatten() {
            if *t == 0 || *t >= current_turn {
                return Err(Error::InvalidState(format!(
                    "last turn {t} is not in 1..{current_turn}"
                )));
            }
            if *t == current_turn - 1 {
                previous += 1;
            }
        }
        if previous > 1 {
            return Err(Error::InvalidState("two members spoke on the previous turn".into()));
        }
        let mut seen: Vec<u64> = last_spoke.iter().flatten().copied().collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidState("two members share a last turn".into()));
        }
        Ok(Self { last_spoke, current_turn })
    }

    /// State after replaying `seq` from a fresh meeting.
    pub fn after(members: usize, seq: &TurnSequence) -> Result<Self> {
        let mut state = Self::new(members);
        for &s in seq.speakers() {
            state.advance_in_place(s)?;
        }
        Ok(state)
    }

    pub fn members(&self) -> usize {
        self.last_spoke.len()
    }

    pub fn current_turn(&self) -> u64 {
        self.current_turn
    }

    pub fn last_spoke(&self) -> &[Option<u64>] {
        &self.last_spoke
    }

    pub fn previous_speaker(&self) -> Option<usize> {
        let prev = self.current_turn - 1;
        self.last_spoke.iter().position(|&t| t == Some(prev))
    }

    pub fn gap(&self, member: usize) -> Gap {
        match self.last_spoke[member] {
            Some(t) => Gap::Turns(self.current_turn - t),
            None => Gap::Never,
        }
    }

    /// Returns the state after `speaker` takes the current turn.
    pub fn advance(&self, speaker: usize) -> Result<Self> {
        let mut next = self.clone();
        next.advance_in_place(speaker)?;
        Ok(next)
    }

    pub fn advance_in_place(&mut self, speaker: usize) -> Result<()> {
        if speaker >= self.last_spoke.len() {
            return Err(Error::InvalidArgument(format!(
                "speaker index {speaker} out of range for {} members",
                self.last_spoke.len()
            )));
        }
        if self.last_spoke[speaker] == Some(self.current_turn - 1) {
            return Err(Error::RepeatedSpeaker { speaker });
        }
        self.last_spoke[speaker] = Some(self.current_turn);
        self.current_turn += 1;
        Ok(())
    }
}

fn check_members(team: &TeamParams, members: usize) -> Result<()> {
    if team.len() != members {
        return Err(Error::InvalidArgument(format!(
            "state tracks {members} members but the team has {}",
            team.len()
        )));
    }
    Ok(())
}

/// Writes unnormalized speaking likelihoods into `out`.
pub(crate) fn likelihoods_into(team: &TeamParams, state: &ConversationState, out: &mut [f64]) {
    let prev = state.current_turn - 1;
    for ((slot, p), last) in out.iter_mut().zip(&team.params).zip(&state.last_spoke) {
        *slot = match *last {
            Some(t) if t == prev => 0.0,
            Some(t) if p.d > 0.0 => {
                p.pi + p.d * (-DECAY_RATE * (state.current_turn - t) as f64).exp()
            }
            _ => p.pi,
        };
    }
}

pub fn speaking_likelihoods(team: &TeamParams, state: &ConversationState) -> Result<Vec<f64>> {
    check_members(team, state.members())?;
    let mut out = vec![0.0; team.len()];
    likelihoods_into(team, state, &mut out);
    Ok(out)
}

/// Normalizes `likelihoods` in place, returning the pre-normalization sum.
pub(crate) fn normalize_in_place(likelihoods: &mut [f64]) -> Result<f64> {
    let sum: f64 = likelihoods.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::DegenerateDistribution);
    }
    for l in likelihoods.iter_mut() {
        *l /= sum;
    }
    Ok(sum)
}

/// Next-speaker distribution for the current turn.
pub fn turn_probabilities(team: &TeamParams, state: &ConversationState) -> Result<Vec<f64>> {
    let mut p = speaking_likelihoods(team, state)?;
    normalize_in_place(&mut p)?;
    Ok(p)
}

/// Log-probability of `seq` under `team`, starting from a fresh meeting.
pub fn sequence_log_likelihood(team: &TeamParams, seq: &TurnSequence) -> Result<f64> {
    conditional_log_likelihood(team, std::slice::from_ref(seq), 0)
}

/// Sum of per-meeting log-likelihoods. State is reset between meetings.
pub fn multi_meeting_log_likelihood(team: &TeamParams, seqs: &[TurnSequence]) -> Result<f64> {
    conditional_log_likelihood(team, seqs, 0)
}

/// Log-likelihood of the turns at global positions `>= skip` on the
/// concatenated meeting timeline, each scored conditional on the full true
/// history of its own meeting.
pub fn conditional_log_likelihood(
    team: &TeamParams,
    seqs: &[TurnSequence],
    skip: usize,
) -> Result<f64> {
    let n = team.len();
    let mut buf = vec![0.0; n];
    let mut total = 0.0;
    let mut global = 0usize;
    for seq in seqs {
        seq.validate_for(n)?;
        let mut state = ConversationState::new(n);
        for &speaker in seq.speakers() {
            if global >= skip {
                likelihoods_into(team, &state, &mut buf);
                let sum: f64 = buf.iter().sum();
                let p = buf[speaker] / sum;
                if p.is_nan() || p <= 0.0 {
                    return Err(Error::ImpossibleHistory { turn: state.current_turn });
                }
                total += p.ln();
            }
            state.advance_in_place(speaker)?;
            global += 1;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(n: usize) -> Roster {
        Roster::new((0..n).map(|i| format!("m{i}"))).unwrap()
    }

    fn team(pi: &[f64], d: &[f64]) -> TeamParams {
        TeamParams::from_vectors(roster(pi.len()), pi, d).unwrap()
    }

    fn seq(s: &[usize], n: usize) -> TurnSequence {
        TurnSequence::new(s.to_vec(), n).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn roster_rejects_duplicates_empty_and_singletons() {
        assert!(Roster::new(["a"]).is_err());
        assert!(Roster::new(["a", "a"]).is_err());
        assert!(Roster::new(["a", ""]).is_err());
        assert_eq!(Roster::new(["a", "b"]).unwrap().index_of("b"), Some(1));
    }

    #[test]
    fn params_enforce_floor_and_sign() {
        assert!(MemberParams::new(0.0, 1.0).is_err());
        assert!(MemberParams::new(0.5, -0.1).is_err());
        assert!(MemberParams::new(f64::NAN, 0.0).is_err());
        assert!(MemberParams::new(PI_FLOOR, 0.0).is_ok());
    }

    #[test]
    fn normalization_flag_tracks_sum() {
        assert!(team(&[0.5, 0.3, 0.2], &[0.0; 3]).is_normalized());
        let t = team(&[2.0, 1.0, 1.0], &[4.0, 0.0, 2.0]);
        assert!(!t.is_normalized());
        let n = t.normalized().unwrap();
        assert!(n.is_normalized());
        assert_eq!(n.pi(), vec![0.5, 0.25, 0.25]);
        assert_eq!(n.d(), vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn memory_value_examples() {
        assert_eq!(memory_value(0.0, Gap::Turns(3)).unwrap(), 0.0);
        assert_eq!(memory_value(1.0, Gap::Never).unwrap(), 0.0);
        assert!(close(memory_value(2.0, Gap::Turns(2)).unwrap(), 0.735759, 1e-6));
        assert!(matches!(memory_value(1.0, Gap::Turns(0)), Err(Error::ZeroGap)));
    }

    #[test]
    fn memory_value_decreases_to_zero() {
        let mut last = f64::INFINITY;
        for g in 1..200 {
            let m = memory_value(1.5, Gap::Turns(g)).unwrap();
            assert!(m < last);
            last = m;
        }
        assert!(last < 1e-40);
    }

    #[test]
    fn likelihood_examples() {
        let t = team(&[0.5, 0.3, 0.2], &[0.0; 3]);
        let fresh = ConversationState::new(3);
        assert_eq!(speaking_likelihoods(&t, &fresh).unwrap(), vec![0.5, 0.3, 0.2]);

        let t = team(&[0.5, 0.3, 0.2], &[1.0; 3]);
        let s = fresh.advance(0).unwrap();
        assert_eq!(s.current_turn(), 2);
        assert_eq!(speaking_likelihoods(&t, &s).unwrap(), vec![0.0, 0.3, 0.2]);
    }

    #[test]
    fn likelihood_includes_memory_term() {
        let t = team(&[0.5, 0.3, 0.2], &[1.0, 2.0, 0.0]);
        // 0 spoke at 1, 1 at 2; evaluating turn 3.
        let s = ConversationState::from_parts(vec![Some(1), Some(2), None], 3).unwrap();
        let l = speaking_likelihoods(&t, &s).unwrap();
        assert!(close(l[0], 0.5 + (-1.0f64).exp(), 1e-15));
        assert_eq!(l[1], 0.0);
        assert_eq!(l[2], 0.2);
    }

    #[test]
    fn probability_examples() {
        let t = team(&[0.5, 0.5], &[3.0, 1.0]);
        let s = ConversationState::new(2).advance(0).unwrap();
        assert_eq!(turn_probabilities(&t, &s).unwrap(), vec![0.0, 1.0]);

        let third = 1.0 / 3.0;
        let t = team(&[third; 3], &[0.7, 2.0, 5.0]);
        let p = turn_probabilities(&t, &ConversationState::new(3)).unwrap();
        assert!(p.iter().all(|&x| close(x, third, 1e-15)));

        let t = team(&[0.5, 0.3, 0.2], &[0.0; 3]);
        let s = ConversationState::new(3).advance(0).unwrap();
        let p = turn_probabilities(&t, &s).unwrap();
        assert_eq!(p[0], 0.0);
        assert!(close(p[1], 0.6, 1e-15) && close(p[2], 0.4, 1e-15));
    }

    #[test]
    fn advance_examples() {
        let s = ConversationState::new(3).advance(1).unwrap();
        assert_eq!(s.last_spoke(), &[None, Some(1), None]);
        assert_eq!(s.current_turn(), 2);

        let s = ConversationState::new(3).advance(0).unwrap().advance(1).unwrap();
        assert_eq!(s.last_spoke(), &[Some(1), Some(2), None]);
        assert_eq!(s.current_turn(), 3);

        assert!(matches!(s.advance(1), Err(Error::RepeatedSpeaker { speaker: 1 })));
    }

    #[test]
    fn state_from_parts_checks_invariants() {
        assert!(ConversationState::from_parts(vec![Some(3), None], 3).is_err());
        assert!(ConversationState::from_parts(vec![Some(2), Some(2)], 3).is_err());
        assert!(ConversationState::from_parts(vec![Some(1), Some(2)], 3).is_ok());
        assert!(ConversationState::from_parts(vec![None, None], 0).is_err());
    }

    #[test]
    fn sequence_rejects_repeats_and_bad_indices() {
        assert!(TurnSequence::new(vec![0, 0], 2).is_err());
        assert!(TurnSequence::new(vec![0, 2], 2).is_err());
        assert!(TurnSequence::new(vec![], 2).unwrap().is_empty());
    }

    #[test]
    fn log_likelihood_examples() {
        let third = 1.0 / 3.0;
        let t = team(&[third; 3], &[0.0; 3]);
        let ll = sequence_log_likelihood(&t, &seq(&[2], 3)).unwrap();
        assert!(close(ll, third.ln(), 1e-15));

        let t = team(&[0.7, 0.3], &[1.2, 0.4]);
        let ll = sequence_log_likelihood(&t, &seq(&[0, 1, 0, 1, 0], 2)).unwrap();
        assert!(close(ll, 0.7f64.ln(), 1e-15));

        let t = team(&[0.5, 0.3, 0.2], &[0.0; 3]);
        let ll = sequence_log_likelihood(&t, &seq(&[0, 1, 0], 3)).unwrap();
        let expected = 0.5f64.ln() + 0.6f64.ln() + (0.5f64 / 0.7).ln();
        assert!(close(ll, expected, 1e-14));

        assert_eq!(sequence_log_likelihood(&t, &TurnSequence::default()).unwrap(), 0.0);
    }

    /// Product of per-turn probabilities, evaluated by direct formula rather
    /// than through the streaming state machine.
    fn brute_probability(pi: &[f64], d: &[f64], s: &[usize]) -> f64 {
        let mut prob = 1.0;
        for t in 0..s.len() {
            let mut l = vec![0.0; pi.len()];
            for i in 0..pi.len() {
                if t > 0 && s[t - 1] == i {
                    continue;
                }
                let last = (0..t).rev().find(|&u| s[u] == i);
                let mem = last.map_or(0.0, |u| d[i] * (-0.5 * (t - u) as f64).exp());
                l[i] = pi[i] + mem;
            }
            prob *= l[s[t]] / l.iter().sum::<f64>();
        }
        prob
    }

    fn all_sequences(n: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for s in &out {
                for i in (0..n).filter(|&i| s.last() != Some(&i)) {
                    let mut longer = s.clone();
                    longer.push(i);
                    next.push(longer);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn enumeration_sums_to_one_and_matches_brute_force() {
        let pi = [0.45, 0.35, 0.2];
        let d = [1.7, 0.3, 2.5];
        let t = team(&pi, &d);
        for len in 1..=6 {
            let seqs = all_sequences(3, len);
            assert_eq!(seqs.len(), 3 * 2usize.pow(len as u32 - 1));
            let mut total = 0.0;
            for s in &seqs {
                let p = sequence_log_likelihood(&t, &seq(s, 3)).unwrap().exp();
                assert!(close(p, brute_probability(&pi, &d, s), 1e-14));
                total += p;
            }
            assert!(close(total, 1.0, 1e-9), "len {len}: total {total}");
        }
    }

    #[test]
    fn multi_meeting_examples() {
        let t = team(&[0.4, 0.35, 0.25], &[1.0, 0.5, 2.0]);
        let m1 = seq(&[0, 1, 0, 2, 1, 0, 1], 3);
        let m2 = seq(&[2, 0, 2, 0, 1], 3);
        let single = sequence_log_likelihood(&t, &m1).unwrap();
        let twice = multi_meeting_log_likelihood(&t, &[m1.clone(), m1.clone()]).unwrap();
        assert_eq!(twice, 2.0 * single);
        assert_eq!(multi_meeting_log_likelihood(&t, &[]).unwrap(), 0.0);

        let both = multi_meeting_log_likelihood(&t, &[m1.clone(), m2.clone()]).unwrap();
        let brute = brute_probability(&t.pi(), &t.d(), m1.speakers())
            * brute_probability(&t.pi(), &t.d(), m2.speakers());
        assert!(close(both, brute.ln(), 1e-12));
    }

    #[test]
    fn conditional_log_likelihood_keeps_history() {
        let t = team(&[0.4, 0.35, 0.25], &[1.0, 0.5, 2.0]);
        let m = seq(&[0, 1, 0, 2, 1, 0, 1], 3);
        let full = sequence_log_likelihood(&t, &m).unwrap();
        let head = sequence_log_likelihood(&t, &m.prefix(4)).unwrap();
        let tail = conditional_log_likelihood(&t, std::slice::from_ref(&m), 4).unwrap();
        assert!(close(head + tail, full, 1e-14));
    }

    #[test]
    fn serde_validates() {
        let t = team(&[0.5, 0.3, 0.2], &[1.0, 0.0, 0.5]);
        let json = serde_json::to_string(&t).unwrap();
        let back: TeamParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<TeamParams>(
            r#"{"roster":["a","b"],"params":[{"pi":0.5,"d":0.0}]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<TurnSequence>("[0,0]").is_err());
    }
}
