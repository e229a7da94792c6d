//! Conversation-pattern statistics, percentile intervals and coverage checks.
//!
//! Three statistics are tracked:
//!
//! * **speaking proportion**: a member's share of all turns;
//! * **ABA proportion**: the share of a member's own turns whose lag-2
//!   predecessor is also theirs (exactly one intervening turn);
//! * **long dyadic exchange proportion**: per unordered pair, the share of all
//!   turns lying inside a maximal two-speaker window of at least `min_len`
//!   turns (e.g. `ABAB`). A pivot turn shared by windows of two different
//!   pairs counts for both pairs.
//!
//! Multi-meeting datasets are pooled by summing counts; windows never cross
//! meeting boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Roster, TurnSequence};

pub const DEFAULT_MIN_EXCHANGE: usize = 4;
pub const DEFAULT_LEVEL: f64 = 0.95;
/// Below this many defined values a 95% interval rests on the extreme order statistics.
pub const MIN_CI_VALUES: usize = 40;

/// Unordered member pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn dyads(members: usize) -> Vec<(usize, usize)> {
    (0..members).flat_map(|i| (i + 1..members).map(move |j| (i, j))).collect()
}

fn dyad_index(members: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * members - a * (a + 1) / 2 + (b - a - 1)
}

/// Additive counts behind a [`PatternReport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCounts {
    members: usize,
    min_len: usize,
    total: usize,
    turns: Vec<usize>,
    aba: Vec<usize>,
    dyadic: Vec<usize>,
}

impl PatternCounts {
    pub fn new(members: usize, min_len: usize) -> Result<Self> {
        if min_len < 2 {
            return Err(Error::InvalidArgument(format!("min_len {min_len} must be at least 2")));
        }
        Ok(Self {
            members,
            min_len,
            total: 0,
            turns: vec![0; members],
            aba: vec![0; members],
            dyadic: vec![0; members * members.saturating_sub(1) / 2],
        })
    }

    pub fn from_sequences(seqs: &[TurnSequence], members: usize, min_len: usize) -> Result<Self> {
        let mut counts = Self::new(members, min_len)?;
        for s in seqs {
            counts.add(s)?;
        }
        Ok(counts)
    }

    /// Accumulates one meeting in a single pass.
    pub fn add(&mut self, seq: &TurnSequence) -> Result<()> {
        seq.validate_for(self.members)?;
        let s = seq.speakers();
        self.total += s.len();
        for (t, &x) in s.iter().enumerate() {
            self.turns[x] += 1;
            if t >= 2 && s[t - 2] == x {
                self.aba[x] += 1;
            }
        }
        // Maximal two-speaker windows. With no consecutive repeats a window
        // is a strict alternation, so it ends at the first t with
        // s[t] != s[t-2]; the next window then starts at t - 1.
        let close = |start: usize, end: usize, dyadic: &mut [usize]| {
            let len = end - start;
            if len >= self.min_len {
                dyadic[dyad_index(self.members, s[start], s[start + 1])] += len;
            }
        };
        if s.len() >= 2 {
            let mut start = 0;
            for t in 2..s.len() {
                if s[t] != s[t - 2] {
                    close(start, t, &mut self.dyadic);
                    start = t - 1;
                }
            }
            close(start, s.len(), &mut self.dyadic);
        }
        Ok(())
    }

    pub fn total_turns(&self) -> usize {
        self.total
    }

    pub fn report(&self) -> Result<PatternReport> {
        if self.total == 0 {
            return Err(Error::EmptySequence);
        }
        let total = self.total as f64;
        Ok(PatternReport {
            speaking_proportion: self.turns.iter().map(|&c| c as f64 / total).collect(),
            aba_proportion: self
                .aba
                .iter()
                .zip(&self.turns)
                .map(|(&a, &n)| (n > 0).then(|| a as f64 / n as f64))
                .collect(),
            dyadic_long_proportion: self.dyadic.iter().map(|&c| c as f64 / total).collect(),
        })
    }
}

/// Values of the three statistics. Dyad entries follow [`dyads`] order;
/// `None` marks an ABA proportion for a member with no turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub speaking_proportion: Vec<f64>,
    pub aba_proportion: Vec<Option<f64>>,
    pub dyadic_long_proportion: Vec<f64>,
}

impl PatternReport {
    pub fn from_sequences(seqs: &[TurnSequence], members: usize, min_len: usize) -> Result<Self> {
        PatternCounts::from_sequences(seqs, members, min_len)?.report()
    }
}

pub fn speaking_proportions(seq: &TurnSequence, roster: &Roster) -> Result<Vec<f64>> {
    Ok(PatternReport::from_sequences(std::slice::from_ref(seq), roster.len(), 2)?.speaking_proportion)
}

pub fn aba_proportions(seq: &TurnSequence, roster: &Roster) -> Result<Vec<Option<f64>>> {
    Ok(PatternReport::from_sequences(std::slice::from_ref(seq), roster.len(), 2)?.aba_proportion)
}

/// Per-dyad long-exchange proportions in [`dyads`] order.
pub fn dyadic_long_proportions(
    seq: &TurnSequence,
    roster: &Roster,
    min_len: usize,
) -> Result<Vec<f64>> {
    Ok(PatternReport::from_sequences(std::slice::from_ref(seq), roster.len(), min_len)?
        .dyadic_long_proportion)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileInterval {
    pub low: f64,
    pub high: f64,
    /// Defined values the interval was computed from.
    pub used: usize,
    /// Undefined entries dropped before ranking.
    pub excluded: usize,
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Equal-tailed nearest-rank percentile interval at `level`.
pub fn percentile_ci(values: &[Option<f64>], level: f64) -> Result<PercentileInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} not in (0, 1)")));
    }
    let mut defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::InsufficientData("no defined values for a percentile interval".into()));
    }
    if defined.len() < MIN_CI_VALUES {
        log::warn!(
            "percentile interval from only {} values; bounds are extreme order statistics",
            defined.len()
        );
    }
    defined.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(PercentileInterval {
        low: nearest_rank(&defined, tail),
        high: nearest_rank(&defined, 1.0 - tail),
        used: defined.len(),
        excluded: values.len() - defined.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "statistic", rename_all = "snake_case")]
pub enum StatisticId {
    SpeakingProportion { member: String },
    AbaProportion { member: String },
    DyadicLongProportion { first: String, second: String },
}

impl StatisticId {
    pub fn kind(&self) -> &'static str {
        match self {
            StatisticId::SpeakingProportion { .. } => "speaking_proportion",
            StatisticId::AbaProportion { .. } => "aba_proportion",
            StatisticId::DyadicLongProportion { .. } => "dyadic_long_proportion",
        }
    }

    pub fn subject(&self) -> String {
        match self {
            StatisticId::SpeakingProportion { member } | StatisticId::AbaProportion { member } => {
                member.clone()
            }
            StatisticId::DyadicLongProportion { first, second } => format!("{first}-{second}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageVerdict {
    #[serde(flatten)]
    pub statistic: StatisticId,
    pub observed: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
}

fn verdict(
    statistic: StatisticId,
    observed: Option<f64>,
    values: &[Option<f64>],
    level: f64,
) -> Result<Option<CoverageVerdict>> {
    let Some(observed) = observed else { return Ok(None) };
    if values.iter().all(Option::is_none) {
        return Ok(None);
    }
    let ci = percentile_ci(values, level)?;
    Ok(Some(CoverageVerdict {
        statistic,
        observed,
        ci_low: ci.low,
        ci_high: ci.high,
        covered: ci.low <= observed && observed <= ci.high,
    }))
}

/// One verdict per member statistic and per dyad. Statistics undefined in the
/// observed data, or in every replication, are skipped.
pub fn coverage_report(
    observed: &PatternReport,
    ensemble: &[PatternReport],
    roster: &Roster,
    level: f64,
) -> Result<Vec<CoverageVerdict>> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let n = roster.len();
    let pairs = dyads(n);
    if observed.speaking_proportion.len() != n
        || observed.dyadic_long_proportion.len() != pairs.len()
        || ensemble.iter().any(|r| r.speaking_proportion.len() != n)
    {
        return Err(Error::InvalidArgument("report size does not match the roster".into()));
    }
    let mut out = Vec::new();
    for i in 0..n {
        let member = roster.name(i).to_string();
        let values: Vec<Option<f64>> =
            ensemble.iter().map(|r| Some(r.speaking_proportion[i])).collect();
        out.extend(verdict(
            StatisticId::SpeakingProportion { member },
            Some(observed.speaking_proportion[i]),
            &values,
            level,
        )?);
    }
    for i in 0..n {
        let member = roster.name(i).to_string();
        let values: Vec<Option<f64>> = ensemble.iter().map(|r| r.aba_proportion[i]).collect();
        out.extend(verdict(
            StatisticId::AbaProportion { member },
            observed.aba_proportion[i],
            &values,
            level,
        )?);
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let values: Vec<Option<f64>> =
            ensemble.iter().map(|r| Some(r.dyadic_long_proportion[k])).collect();
        out.extend(verdict(
            StatisticId::DyadicLongProportion {
                first: roster.name(i).to_string(),
                second: roster.name(j).to_string(),
            },
            Some(observed.dyadic_long_proportion[k]),
            &values,
            level,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(n: usize) -> Roster {
        Roster::new((0..n).map(|i| ((b'A' + i as u8) as char).to_string())).unwrap()
    }

    fn seq(s: &str, n: usize) -> TurnSequence {
        TurnSequence::new(s.bytes().map(|b| (b - b'A') as usize).collect(), n).unwrap()
    }

    #[test]
    fn dyad_indexing_is_dense() {
        for n in 2..7 {
            for (k, (i, j)) in dyads(n).into_iter().enumerate() {
                assert_eq!(dyad_index(n, i, j), k);
                assert_eq!(dyad_index(n, j, i), k);
            }
        }
    }

    #[test]
    fn speaking_examples() {
        assert_eq!(speaking_proportions(&seq("ABAB", 2), &roster(2)).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            speaking_proportions(&seq("ABAC", 3), &roster(3)).unwrap(),
            vec![0.5, 0.25, 0.25]
        );
        assert_eq!(speaking_proportions(&seq("ABAB", 3), &roster(3)).unwrap()[2], 0.0);
        assert!(matches!(
            speaking_proportions(&TurnSequence::default(), &roster(2)),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn aba_examples() {
        let a = aba_proportions(&seq("ABABA", 2), &roster(2)).unwrap();
        assert_eq!(a, vec![Some(2.0 / 3.0), Some(0.5)]);
        let a = aba_proportions(&seq("ABC", 3), &roster(3)).unwrap();
        assert_eq!(a, vec![Some(0.0); 3]);
        let a = aba_proportions(&seq("ABCA", 3), &roster(3)).unwrap();
        assert_eq!(a[0], Some(0.0));
        let a = aba_proportions(&seq("ABAB", 3), &roster(3)).unwrap();
        assert_eq!(a[2], None);
    }

    #[test]
    fn dyadic_examples() {
        let r = roster(3);
        // dyad order: AB, AC, BC
        assert_eq!(dyadic_long_proportions(&seq("ABABC", 3), &r, 4).unwrap(), vec![0.8, 0.0, 0.0]);
        assert_eq!(dyadic_long_proportions(&seq("ABCABC", 3), &r, 4).unwrap(), vec![0.0; 3]);
        assert_eq!(
            dyadic_long_proportions(&seq("ABABCBCB", 3), &r, 4).unwrap(),
            vec![4.0 / 8.0, 0.0, 5.0 / 8.0]
        );
        assert!(dyadic_long_proportions(&seq("AB", 3), &r, 1).is_err());
    }

    #[test]
    fn dyadic_min_len_two_covers_two_member_sequences() {
        let r = roster(2);
        for len in 2..10 {
            let s: String = "AB".repeat(len).chars().take(len).collect();
            assert_eq!(dyadic_long_proportions(&seq(&s, 2), &r, 2).unwrap(), vec![1.0]);
        }
        assert_eq!(dyadic_long_proportions(&seq("A", 2), &r, 2).unwrap(), vec![0.0]);
    }

    #[test]
    fn pooling_sums_counts_without_crossing_meetings() {
        let r = roster(3);
        let pooled = PatternReport::from_sequences(&[seq("ABAB", 3), seq("ABC", 3)], 3, 4).unwrap();
        assert_eq!(pooled.speaking_proportion, vec![3.0 / 7.0, 3.0 / 7.0, 1.0 / 7.0]);
        assert_eq!(pooled.dyadic_long_proportion, vec![4.0 / 7.0, 0.0, 0.0]);
        // Concatenated, the AB window would extend to 5 turns.
        let joined = dyadic_long_proportions(&seq("ABABABC", 3), &r, 4).unwrap();
        assert_eq!(joined[0], 6.0 / 7.0);
    }

    #[test]
    fn percentile_examples() {
        let constant = vec![Some(0.25); 100];
        let ci = percentile_ci(&constant, 0.95).unwrap();
        assert_eq!((ci.low, ci.high), (0.25, 0.25));

        let v: Vec<Option<f64>> = (1..=1000).map(|i| Some(i as f64)).collect();
        let ci = percentile_ci(&v, 0.95).unwrap();
        assert_eq!((ci.low, ci.high), (25.0, 975.0));

        let mut with_gaps = v.clone();
        with_gaps.insert(10, None);
        with_gaps.push(None);
        let ci2 = percentile_ci(&with_gaps, 0.95).unwrap();
        assert_eq!((ci2.low, ci2.high), (ci.low, ci.high));
        assert_eq!(ci2.excluded, 2);

        assert!(percentile_ci(&[], 0.95).is_err());
        assert!(percentile_ci(&[None, None], 0.95).is_err());
        let one = percentile_ci(&[Some(3.0)], 0.95).unwrap();
        assert_eq!((one.low, one.high), (3.0, 3.0));
    }

    #[test]
    fn coverage_flags() {
        let r = roster(2);
        let ensemble: Vec<PatternReport> = (0..100)
            .map(|i| {
                let x = 0.3 + 0.004 * i as f64;
                PatternReport {
                    speaking_proportion: vec![x, 1.0 - x],
                    aba_proportion: vec![Some(x), None],
                    dyadic_long_proportion: vec![x],
                }
            })
            .collect();
        let observed = PatternReport {
            speaking_proportion: vec![0.9, 0.1],
            aba_proportion: vec![Some(0.3 + 0.004 * 50.0), Some(0.5)],
            dyadic_long_proportion: vec![0.5],
        };
        let v = coverage_report(&observed, &ensemble, &r, 0.95).unwrap();
        // B's ABA is undefined in every replication.
        assert_eq!(v.len(), 4);
        assert!(!v[0].covered && !v[1].covered);
        assert!(v[2].covered);
        assert!(v[3].covered);
        assert!(v.iter().all(|c| c.ci_low <= c.ci_high));
        assert!(coverage_report(&observed, &[], &r, 0.95).is_err());
    }
}
