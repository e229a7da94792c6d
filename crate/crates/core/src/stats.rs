//! Yates-corrected chi-squared tests, univariate least squares, AICc model
//! ranking and group-mean centering of trait data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Residual sums of squares below this are treated as a perfect fit.
pub const PERFECT_FIT_RSS: f64 = 1e-12;

/// Models within this many AICc points of the best are in the top set.
pub const TOP_SET_DELTA: f64 = 2.0;

/// 2x2 table `[[a, b], [c, d]]`: rows are model variants, columns are
/// matched / not matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquared {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the chi-squared distribution with one degree of freedom.
pub fn chi_squared_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(0.5, x / 2.0)
}

/// Pearson chi-squared with Yates continuity correction, 1 df.
pub fn chi_squared_yates(table: &ContingencyTable2x2) -> Result<ChiSquared> {
    let [a, b, c, d] = [table.a, table.b, table.c, table.d].map(|v| v as f64);
    let n = a + b + c + d;
    let margins = [a + b, c + d, a + c, b + d];
    if margins.contains(&0.0) {
        return Err(Error::InvalidArgument(format!("zero marginal total in {table:?}")));
    }
    let corrected = ((a * d - b * c).abs() - n / 2.0).max(0.0);
    let statistic = n * corrected * corrected / margins.iter().product::<f64>();
    Ok(ChiSquared { statistic, p_value: chi_squared_1_sf(statistic) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(Sex::Female),
            "male" | "m" => Ok(Sex::Male),
            other => Err(Error::InvalidArgument(format!("unknown sex {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nationality {
    American,
    NonAmerican,
}

impl FromStr for Nationality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect();
        match key.as_str() {
            "american" => Ok(Nationality::American),
            "nonamerican" => Ok(Nationality::NonAmerican),
            _ => Err(Error::InvalidArgument(format!("unknown nationality {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitRecord {
    pub member: String,
    pub team: String,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub conscientiousness: f64,
    pub sex: Sex,
    pub nationality: Nationality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousTrait {
    Extraversion,
    Agreeableness,
    Conscientiousness,
}

impl ContinuousTrait {
    pub const ALL: [ContinuousTrait; 3] = [
        ContinuousTrait::Extraversion,
        ContinuousTrait::Agreeableness,
        ContinuousTrait::Conscientiousness,
    ];

    pub fn of(self, r: &TraitRecord) -> f64 {
        match self {
            ContinuousTrait::Extraversion => r.extraversion,
            ContinuousTrait::Agreeableness => r.agreeableness,
            ContinuousTrait::Conscientiousness => r.conscientiousness,
        }
    }
}

impl fmt::Display for ContinuousTrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContinuousTrait::Extraversion => "extraversion",
            ContinuousTrait::Agreeableness => "agreeableness",
            ContinuousTrait::Conscientiousness => "conscientiousness",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centered {
    /// Centered values in record order.
    pub values: Vec<f64>,
    /// Teams with a single member, whose centered value is 0.
    pub singleton_teams: Vec<String>,
}

/// Subtracts each record's team mean of `which`.
pub fn group_mean_center(records: &[TraitRecord], which: ContinuousTrait) -> Result<Centered> {
    let mut groups: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records {
        if r.team.is_empty() {
            return Err(Error::InvalidArgument(format!("member {:?} has no team", r.member)));
        }
        let v = which.of(r);
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{which} of {:?} is not finite", r.member)));
        }
        let e = groups.entry(&r.team).or_default();
        e.0 += v;
        e.1 += 1;
    }
    let values = records
        .iter()
        .map(|r| {
            let (sum, count) = groups[r.team.as_str()];
            if count == 1 {
                0.0
            } else {
                which.of(r) - sum / count as f64
            }
        })
        .collect();
    let singleton_teams =
        groups.iter().filter(|(_, (_, c))| *c == 1).map(|(t, _)| t.to_string()).collect();
    Ok(Centered { values, singleton_teams })
}

/// Gaussian log-likelihood at the maximum-likelihood variance `rss / n`.
pub fn gaussian_log_likelihood(rss: f64, n: usize) -> f64 {
    let n = n as f64;
    -0.5 * n * ((2.0 * std::f64::consts::PI * rss / n).ln() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub beta: f64,
    pub intercept: f64,
    /// Two-sided t-test p-value for `beta`, `n - 2` df.
    pub p_beta: f64,
    pub residual_ss: f64,
    /// `+inf` when `perfect_fit` is set.
    pub log_likelihood: f64,
    pub perfect_fit: bool,
}

/// Least-squares fit of `y = intercept + beta * x`.
pub fn ols_univariate(y: &[f64], x: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::InvalidArgument(format!("{} responses but {} predictors", n, x.len())));
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} observations; need at least 3")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::InvalidArgument("predictor is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - beta * a).powi(2)).sum();
    if rss < PERFECT_FIT_RSS {
        return Ok(OlsFit {
            beta,
            intercept,
            p_beta: 0.0,
            residual_ss: rss,
            log_likelihood: f64::INFINITY,
            perfect_fit: true,
        });
    }
    let df = nf - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = beta / se;
    let p_beta = if df > 0.0 {
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * dist.sf(t.abs())
    } else {
        f64::NAN
    };
    Ok(OlsFit {
        beta,
        intercept,
        p_beta,
        residual_ss: rss,
        log_likelihood: gaussian_log_likelihood(rss, n),
        perfect_fit: false,
    })
}

/// Binary predictor as a 0/1 column.
pub fn indicator<T: PartialEq>(values: &[T], one: &T) -> Vec<f64> {
    values.iter().map(|v| if v == one { 1.0 } else { 0.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullFit {
    pub mean: f64,
    pub residual_ss: f64,
    pub log_likelihood: f64,
    pub perfect_fit: bool,
}

/// Intercept-only model.
pub fn null_model(y: &[f64]) -> Result<NullFit> {
    if y.len() < 2 {
        return Err(Error::InsufficientData(format!("{} observations; need at least 2", y.len())));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let rss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let perfect_fit = rss < PERFECT_FIT_RSS;
    Ok(NullFit {
        mean,
        residual_ss: rss,
        log_likelihood: if perfect_fit { f64::INFINITY } else { gaussian_log_likelihood(rss, y.len()) },
        perfect_fit,
    })
}

/// Small-sample corrected Akaike information criterion.
pub fn aicc(log_likelihood: f64, k: usize, n: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("AICc needs at least one parameter".into()));
    }
    if n <= k + 1 {
        return Err(Error::InsufficientData(format!(
            "AICc needs more than k + 1 = {} observations, got {n}",
            k + 1
        )));
    }
    if !log_likelihood.is_finite() {
        return Err(Error::InvalidArgument(format!("log-likelihood {log_likelihood} is not finite")));
    }
    let (k, n) = (k as f64, n as f64);
    Ok(-2.0 * log_likelihood + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0))
}

/// Normalized `exp(-delta / 2)`.
pub fn akaike_weights(deltas: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = deltas.iter().map(|d| (-d / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub log_likelihood: f64,
    pub k: usize,
}

impl Candidate {
    pub fn new(name: impl Into<String>, log_likelihood: f64, k: usize) -> Self {
        Self { name: name.into(), log_likelihood, k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub model: String,
    pub k: usize,
    pub log_likelihood: f64,
    pub aicc: f64,
    pub delta: f64,
    pub weight: f64,
    pub top_set: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanking {
    pub n: usize,
    /// Ascending by AICc.
    pub rows: Vec<RankingRow>,
}

impl ModelRanking {
    pub fn row(&self, model: &str) -> Option<&RankingRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn best(&self) -> &RankingRow {
        &self.rows[0]
    }

    /// Evidence ratio of `model` against `reference`.
    pub fn evidence_ratio(&self, model: &str, reference: &str) -> Result<f64> {
        let get = |name: &str| {
            self.row(name)
                .ok_or_else(|| Error::InvalidArgument(format!("no model named {name:?}")))
        };
        evidence_ratio(get(model)?.weight, get(reference)?.weight)
    }
}

pub fn rank_models(candidates: &[Candidate], n: usize) -> Result<ModelRanking> {
    if candidates.len() < 2 {
        return Err(Error::InvalidArgument("ranking needs at least two candidates".into()));
    }
    let scores = candidates
        .iter()
        .map(|c| aicc(c.log_likelihood, c.k, n))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let best = scores[order[0]];
    let deltas: Vec<f64> = order.iter().map(|&i| scores[i] - best).collect();
    let weights = akaike_weights(&deltas);
    let rows = order
        .iter()
        .zip(deltas.iter().zip(&weights))
        .map(|(&i, (&delta, &weight))| RankingRow {
            model: candidates[i].name.clone(),
            k: candidates[i].k,
            log_likelihood: candidates[i].log_likelihood,
            aicc: scores[i],
            delta,
            weight,
            top_set: delta < TOP_SET_DELTA,
        })
        .collect();
    Ok(ModelRanking { n, rows })
}

pub fn evidence_ratio(w_i: f64, w_j: f64) -> Result<f64> {
    if w_j.is_nan() || w_j <= 0.0 {
        return Err(Error::InvalidArgument(format!("reference weight {w_j} must be positive")));
    }
    Ok(w_i / w_j)
}
