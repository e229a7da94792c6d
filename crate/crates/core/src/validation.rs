//! Observed-versus-simulated comparison of conversation patterns for fitted
//! models, plus the 2x2 chi-squared comparison of two model variants.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fitter::ModelVariant;
use crate::model::{Roster, TeamParams, TurnSequence};
use crate::patterns::{coverage_report, CoverageVerdict, PatternReport};
use crate::simulator::map_ensemble;
use crate::stats::{chi_squared_yates, ChiSquared, ContingencyTable2x2};

pub const STATISTIC_KINDS: [&str; 3] =
    ["speaking_proportion", "aba_proportion", "dyadic_long_proportion"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    pub min_exchange: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCount {
    pub statistic: String,
    pub covered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCoverage {
    pub variant: ModelVariant,
    pub team: TeamParams,
    pub verdicts: Vec<CoverageVerdict>,
    pub counts: Vec<KindCount>,
}

impl VariantCoverage {
    pub fn count(&self, statistic: &str) -> Option<&KindCount> {
        self.counts.iter().find(|c| c.statistic == statistic)
    }

    pub fn coverage_rate(&self) -> f64 {
        let covered = self.verdicts.iter().filter(|v| v.covered).count();
        covered as f64 / self.verdicts.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindComparison {
    pub statistic: String,
    pub table: ContingencyTable2x2,
    /// Absent when a margin of the table is zero.
    pub chi_squared: Option<ChiSquared>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub dataset: String,
    pub settings: EnsembleSettings,
    pub meeting_lengths: Vec<usize>,
    pub observed: PatternReport,
    pub variants: Vec<VariantCoverage>,
    pub comparisons: Vec<KindComparison>,
}

/// Coverage verdicts of `team` against `observed` meetings, simulating
/// replications with the observed meeting lengths.
pub fn variant_coverage(
    team: &TeamParams,
    variant: ModelVariant,
    observed: &[TurnSequence],
    settings: &EnsembleSettings,
) -> Result<VariantCoverage> {
    let n = team.len();
    let observed_report = PatternReport::from_sequences(observed, n, settings.min_exchange)?;
    let lengths: Vec<usize> = observed.iter().map(TurnSequence::len).collect();
    let ensemble = map_ensemble(team, &lengths, settings.seed, settings.replications, |m| {
        PatternReport::from_sequences(m, n, settings.min_exchange)
    })?;
    let verdicts = coverage_report(&observed_report, &ensemble, team.roster(), settings.level)?;
    let counts = STATISTIC_KINDS
        .iter()
        .map(|kind| {
            let of_kind: Vec<&CoverageVerdict> =
                verdicts.iter().filter(|v| v.statistic.kind() == *kind).collect();
            KindCount {
                statistic: kind.to_string(),
                covered: of_kind.iter().filter(|v| v.covered).count(),
                total: of_kind.len(),
            }
        })
        .collect();
    Ok(VariantCoverage { variant, team: team.clone(), verdicts, counts })
}

/// Chi-squared comparison of matched counts between two variants for each
/// statistic kind: rows are variants, columns matched / not matched.
pub fn compare_variants(first: &VariantCoverage, second: &VariantCoverage) -> Vec<KindComparison> {
    STATISTIC_KINDS
        .iter()
        .map(|kind| {
            let cell = |v: &VariantCoverage| {
                v.count(kind).map_or((0, 0), |c| (c.covered as u64, (c.total - c.covered) as u64))
            };
            let (a, b) = cell(first);
            let (c, d) = cell(second);
            let table = ContingencyTable2x2::new(a, b, c, d);
            KindComparison {
                statistic: kind.to_string(),
                table,
                chi_squared: chi_squared_yates(&table).ok(),
            }
        })
        .collect()
}

/// Full pattern check of two fitted variants against one dataset.
pub fn coverage_summary(
    dataset: &str,
    roster: &Roster,
    observed: &[TurnSequence],
    fits: &[(ModelVariant, &TeamParams)],
    settings: &EnsembleSettings,
) -> Result<CoverageSummary> {
    let variants = fits
        .iter()
        .map(|(variant, team)| variant_coverage(team, *variant, observed, settings))
        .collect::<Result<Vec<_>>>()?;
    let comparisons = if variants.len() == 2 {
        compare_variants(&variants[0], &variants[1])
    } else {
        Vec::new()
    };
    Ok(CoverageSummary {
        dataset: dataset.to_string(),
        settings: *settings,
        meeting_lengths: observed.iter().map(TurnSequence::len).collect(),
        observed: PatternReport::from_sequences(observed, roster.len(), settings.min_exchange)?,
        variants,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate_conversation, SimConfig};

    #[test]
    fn self_generated_data_is_mostly_covered() {
        let roster = Roster::new(["a", "b", "c"]).unwrap();
        let truth = TeamParams::from_vectors(roster.clone(), &[0.5, 0.3, 0.2], &[2.0, 1.0, 1.5])
            .unwrap();
        let observed = vec![simulate_conversation(&truth, &SimConfig::new(400, 3, 1).unwrap())
            .unwrap()];
        let settings =
            EnsembleSettings { replications: 400, seed: 99, level: 0.95, min_exchange: 4 };
        let reduced = TeamParams::from_vectors(roster.clone(), &[0.5, 0.3, 0.2], &[0.0; 3]).unwrap();
        let s = coverage_summary(
            "synthetic",
            &roster,
            &observed,
            &[(ModelVariant::Full, &truth), (ModelVariant::Reduced, &reduced)],
            &settings,
        )
        .unwrap();
        assert_eq!(s.variants[0].verdicts.len(), 3 + 3 + 3);
        assert!(s.variants[0].coverage_rate() >= 0.75);
        assert_eq!(s.comparisons.len(), 3);
        let sp = s.variants[0].count("speaking_proportion").unwrap();
        assert_eq!(sp.total, 3);
    }

    #[test]
    fn comparison_reproduces_published_table() {
        let mk = |variant, covered: usize, total: usize| VariantCoverage {
            variant,
            team: TeamParams::from_vectors(Roster::new(["a", "b"]).unwrap(), &[0.5, 0.5], &[0.0; 2])
                .unwrap(),
            verdicts: vec![],
            counts: vec![KindCount { statistic: "speaking_proportion".into(), covered, total }],
        };
        let cmp = compare_variants(&mk(ModelVariant::Full, 24, 24), &mk(ModelVariant::Reduced, 17, 24));
        let chi = cmp[0].chi_squared.unwrap();
        assert!((chi.statistic - 6.0).abs() < 0.1);
        assert!(cmp[1].chi_squared.is_none());
    }
}
