//! Relates fitted per-member parameters to individual traits: a null model
//! and one univariate linear model per trait, ranked by AICc.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::FitResult;
use crate::stats::{
    group_mean_center, indicator, null_model, ols_univariate, rank_models, Candidate,
    ContinuousTrait, ModelRanking, Nationality, Sex, TraitRecord,
};

pub const NULL_MODEL: &str = "null";
/// Intercept + residual variance.
pub const NULL_K: usize = 2;
/// Intercept + slope + residual variance.
pub const UNIVARIATE_K: usize = 3;

/// Fitted parameters of one member, labelled by team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberEstimate {
    pub team: String,
    pub member: String,
    pub pi: f64,
    pub d: f64,
}

/// Flattens team fits into per-member rows.
pub fn member_estimates<'a>(fits: impl IntoIterator<Item = (&'a str, &'a FitResult)>) -> Vec<MemberEstimate> {
    let mut out = Vec::new();
    for (team, fit) in fits {
        let roster = fit.team.roster();
        for (i, p) in fit.team.params().iter().enumerate() {
            out.push(MemberEstimate {
                team: team.to_string(),
                member: roster.name(i).to_string(),
                pi: p.pi,
                d: p.d,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub model: String,
    pub beta: f64,
    pub intercept: f64,
    pub p_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRanking {
    /// `pi` or `d`.
    pub target: String,
    pub ranking: ModelRanking,
    /// Weight of each model divided by the null model's weight, in ranking order.
    pub evidence_vs_null: Vec<(String, f64)>,
    pub slopes: Vec<Slope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitAnalysis {
    pub members: usize,
    pub teams: usize,
    pub pi: TargetRanking,
    pub d: TargetRanking,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Predictor columns, group-mean centering the continuous traits.
type Columns = Vec<(String, Vec<f64>)>;

fn predictors(records: &[TraitRecord]) -> Result<(Columns, Vec<String>)> {
    let mut cols = Vec::new();
    let mut warnings = Vec::new();
    for which in ContinuousTrait::ALL {
        let centered = group_mean_center(records, which)?;
        for team in &centered.singleton_teams {
            warnings.push(format!("team {team:?} has one member; centered {which} is 0"));
        }
        cols.push((which.to_string(), centered.values));
    }
    let sex: Vec<Sex> = records.iter().map(|r| r.sex).collect();
    cols.push(("sex".to_string(), indicator(&sex, &Sex::Male)));
    let nat: Vec<Nationality> = records.iter().map(|r| r.nationality).collect();
    cols.push(("nationality".to_string(), indicator(&nat, &Nationality::American)));
    Ok((cols, warnings))
}

/// Ranks the null model against every univariate trait model for `y`.
pub fn rank_target(target: &str, y: &[f64], records: &[TraitRecord]) -> Result<(TargetRanking, Vec<String>)> {
    let n = y.len();
    let (cols, warnings) = predictors(records)?;
    let null = null_model(y)?;
    let mut candidates = vec![Candidate::new(NULL_MODEL, null.log_likelihood, NULL_K)];
    let mut slopes = Vec::new();
    for (name, x) in &cols {
        let fit = ols_univariate(y, x).map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{name}: {msg}")),
            other => other,
        })?;
        if fit.perfect_fit {
            return Err(Error::PerfectFit(fit.residual_ss));
        }
        candidates.push(Candidate::new(name.clone(), fit.log_likelihood, UNIVARIATE_K));
        slopes.push(Slope {
            model: name.clone(),
            beta: fit.beta,
            intercept: fit.intercept,
            p_beta: fit.p_beta,
        });
    }
    if null.perfect_fit {
        return Err(Error::PerfectFit(null.residual_ss));
    }
    let ranking = rank_models(&candidates, n)?;
    let evidence_vs_null = ranking
        .rows
        .iter()
        .map(|r| Ok((r.model.clone(), ranking.evidence_ratio(&r.model, NULL_MODEL)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((TargetRanking { target: target.to_string(), ranking, evidence_vs_null, slopes }, warnings))
}

/// Matches estimates to trait records by `(team, member)` and ranks trait
/// models for both `pi` and `d`.
pub fn analyze_traits(estimates: &[MemberEstimate], traits: &[TraitRecord]) -> Result<TraitAnalysis> {
    let mut matched = Vec::with_capacity(estimates.len());
    for e in estimates {
        let rec = traits
            .iter()
            .find(|r| r.team == e.team && r.member == e.member)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no trait record for member {:?} of team {:?}",
                    e.member, e.team
                ))
            })?;
        matched.push(rec.clone());
    }
    let mut teams: Vec<&str> = estimates.iter().map(|e| e.team.as_str()).collect();
    teams.sort_unstable();
    teams.dedup();

    let pi: Vec<f64> = estimates.iter().map(|e| e.pi).collect();
    let d: Vec<f64> = estimates.iter().map(|e| e.d).collect();
    let (pi_rank, mut warnings) = rank_target("pi", &pi, &matched)?;
    let (d_rank, _) = rank_target("d", &d, &matched)?;
    if teams.len() < 2 {
        warnings.push("fewer than two teams; centering removes all between-team variation".into());
    }
    Ok(TraitAnalysis {
        members: estimates.len(),
        teams: teams.len(),
        pi: pi_rank,
        d: d_rank,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cohort(n: usize) -> Vec<TraitRecord> {
        (0..n)
            .map(|i| TraitRecord {
                member: format!("p{i}"),
                team: format!("t{}", i % 3),
                extraversion: ((i * 7) % 5) as f64,
                agreeableness: ((i * 3) % 4) as f64,
                conscientiousness: ((i * 5) % 6) as f64,
                sex: if i % 2 == 0 { Sex::Male } else { Sex::Female },
                nationality: if i % 3 == 0 || i % 5 == 0 {
                    Nationality::American
                } else {
                    Nationality::NonAmerican
                },
            })
            .collect()
    }

    #[test]
    fn nationality_signal_wins() {
        let recs = cohort(18);
        let y: Vec<f64> = recs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let base = if r.nationality == Nationality::American { 0.4 } else { 0.15 };
                base + 0.01 * ((i * 13) % 7) as f64
            })
            .collect();
        let (t, _) = rank_target("pi", &y, &recs).unwrap();
        assert_eq!(t.ranking.best().model, "nationality");
        assert_eq!(t.ranking.rows.len(), 6);
        assert_eq!(t.ranking.row(NULL_MODEL).unwrap().k, 2);
        assert!(t.slopes.iter().find(|s| s.model == "nationality").unwrap().beta > 0.2);
        let er = t.evidence_vs_null.iter().find(|(m, _)| m == NULL_MODEL).unwrap().1;
        assert_eq!(er, 1.0);
    }

    #[test]
    fn too_few_members_surface_aicc_error() {
        let recs = cohort(4);
        let y = [0.1, 0.3, 0.2, 0.5];
        assert!(matches!(rank_target("pi", &y, &recs), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn unmatched_member_is_an_error() {
        let recs = cohort(6);
        let est = vec![MemberEstimate { team: "zz".into(), member: "p0".into(), pi: 0.5, d: 1.0 }];
        assert!(analyze_traits(&est, &recs).is_err());
    }
}
