//! Versioned JSON result files and plot-ready CSV tables.
//!
//! Every JSON file is an object `{"schema_version": N, "kind": ..., "payload": ...}`.
//! Floats are written in shortest round-trip form, so `load(save(x)) == x`.
//!
//! CSV column schemas, by payload kind:
//!
//! | kind               | columns |
//! |--------------------|---------|
//! | `fit`              | `dataset,variant,member,pi,d` |
//! | `split_evaluation` | `variant,split_fraction,train_turns,test_turns,train_ll,test_ll` |
//! | `evaluation`       | `dataset,no_memory,memory` |
//! | `coverage`         | `dataset,variant,statistic,subject,observed,ci_low,ci_high,covered` |
//! | `ranking`          | `target,model,k,log_likelihood,aicc,delta,weight,top_set,evidence_vs_null` |
//! | `traits`           | as `ranking`, one block per target |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::{FitResult, SplitEvaluation};
use crate::stats::ModelRanking;
use crate::trait_analysis::{TraitAnalysis, NULL_MODEL};
use crate::validation::CoverageSummary;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub dataset: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub dataset: String,
    pub no_memory: f64,
    pub memory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub rows: Vec<EvaluationRow>,
    pub evaluations: Vec<SplitEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    Fit(LabeledFit),
    SplitEvaluation(SplitEvaluation),
    Evaluation(EvaluationTable),
    Coverage(CoverageSummary),
    Ranking(ModelRanking),
    Traits(TraitAnalysis),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Fit(_) => "fit",
            Payload::SplitEvaluation(_) => "split_evaluation",
            Payload::Evaluation(_) => "evaluation",
            Payload::Coverage(_) => "coverage",
            Payload::Ranking(_) => "ranking",
            Payload::Traits(_) => "traits",
        }
    }
}

#[derive(Serialize)]
struct EnvelopeRef<'a> {
    schema_version: u64,
    #[serde(flatten)]
    payload: &'a Payload,
}

pub fn to_json_string(payload: &Payload) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&EnvelopeRef { schema_version: SCHEMA_VERSION, payload })?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_str(text: &str) -> Result<Payload> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Schema("result file is not a JSON object".into()))?;
    let version = obj
        .remove("schema_version")
        .ok_or_else(|| Error::Schema("missing schema_version".into()))?;
    let found = version
        .as_u64()
        .ok_or_else(|| Error::Schema(format!("schema_version {version} is not an integer")))?;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    Ok(serde_json::from_value(value)?)
}

pub fn save_results(path: impl AsRef<Path>, payload: &Payload) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(to_json_string(payload)?.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Payload> {
    from_json_str(&std::fs::read_to_string(path)?)
}

fn ranking_rows<W: Write>(
    w: &mut csv::Writer<W>,
    target: &str,
    ranking: &ModelRanking,
) -> Result<()> {
    let null_weight = ranking.row(NULL_MODEL).map(|r| r.weight);
    for r in &ranking.rows {
        let er = null_weight.map_or(String::new(), |nw| (r.weight / nw).to_string());
        w.write_record([
            target,
            &r.model,
            &r.k.to_string(),
            &r.log_likelihood.to_string(),
            &r.aicc.to_string(),
            &r.delta.to_string(),
            &r.weight.to_string(),
            &r.top_set.to_string(),
            &er,
        ])?;
    }
    Ok(())
}

const RANKING_HEADER: [&str; 9] =
    ["target", "model", "k", "log_likelihood", "aicc", "delta", "weight", "top_set", "evidence_vs_null"];

/// Writes the plot-ready table for `payload`.
pub fn write_csv<W: Write>(out: W, payload: &Payload) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    match payload {
        Payload::Fit(f) => {
            w.write_record(["dataset", "variant", "member", "pi", "d"])?;
            let roster = f.fit.team.roster();
            for (i, p) in f.fit.team.params().iter().enumerate() {
                w.write_record([
                    f.dataset.as_str(),
                    &f.fit.variant.to_string(),
                    roster.name(i),
                    &p.pi.to_string(),
                    &p.d.to_string(),
                ])?;
            }
        }
        Payload::SplitEvaluation(e) => {
            w.write_record(["variant", "split_fraction", "train_turns", "test_turns", "train_ll", "test_ll"])?;
            w.write_record([
                e.variant.to_string(),
                e.split_fraction.to_string(),
                e.train_turns.to_string(),
                e.test_turns.to_string(),
                e.train_ll.to_string(),
                e.test_ll.to_string(),
            ])?;
        }
        Payload::Evaluation(t) => {
            w.write_record(["dataset", "no_memory", "memory"])?;
            for r in &t.rows {
                w.write_record([r.dataset.clone(), r.no_memory.to_string(), r.memory.to_string()])?;
            }
        }
        Payload::Coverage(c) => {
            w.write_record([
                "dataset", "variant", "statistic", "subject", "observed", "ci_low", "ci_high", "covered",
            ])?;
            for v in &c.variants {
                for verdict in &v.verdicts {
                    w.write_record([
                        c.dataset.clone(),
                        v.variant.to_string(),
                        verdict.statistic.kind().to_string(),
                        verdict.statistic.subject(),
                        verdict.observed.to_string(),
                        verdict.ci_low.to_string(),
                        verdict.ci_high.to_string(),
                        verdict.covered.to_string(),
                    ])?;
                }
            }
        }
        Payload::Ranking(r) => {
            w.write_record(RANKING_HEADER)?;
            ranking_rows(&mut w, "", r)?;
        }
        Payload::Traits(t) => {
            w.write_record(RANKING_HEADER)?;
            ranking_rows(&mut w, &t.pi.target, &t.pi.ranking)?;
            ranking_rows(&mut w, &t.d.target, &t.d.ranking)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitter::ModelVariant;
    use crate::model::{Roster, TeamParams};
    use crate::stats::{rank_models, Candidate};

    fn fit_result() -> FitResult {
        let roster = Roster::new(["a", "b", "c"]).unwrap();
        FitResult {
            team: TeamParams::from_vectors(roster, &[0.1 + 0.2, 0.7 - 0.1 - 0.2 + 0.1, 0.1], &[
                1.0 / 3.0,
                0.0,
                std::f64::consts::E,
            ])
            .unwrap(),
            variant: ModelVariant::Full,
            log_likelihood: -1234.567890123456,
            converged: true,
            n_restarts_used: 8,
            free_parameters: 5,
            total_turns: 999,
            warnings: vec!["w".into()],
        }
    }

    #[test]
    fn fit_round_trip() {
        let p = Payload::Fit(LabeledFit { dataset: "team-1".into(), fit: fit_result() });
        let text = to_json_string(&p).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        assert!(text.contains("\"kind\": \"fit\""));
        assert_eq!(from_json_str(&text).unwrap(), p);
    }

    #[test]
    fn ranking_round_trip_on_disk() {
        let cands: Vec<Candidate> = (0..6)
            .map(|i| Candidate::new(format!("m{i}"), -10.0 - 0.37 * i as f64, 2 + (i > 0) as usize))
            .collect();
        let p = Payload::Ranking(rank_models(&cands, 24).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        save_results(&path, &p).unwrap();
        let back = load_results(&path).unwrap();
        assert_eq!(back, p);
        let Payload::Ranking(r) = back else { panic!() };
        assert_eq!(r.rows.len(), 6);
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let p = Payload::Fit(LabeledFit { dataset: "x".into(), fit: fit_result() });
        let text = to_json_string(&p).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(
            from_json_str(&text),
            Err(Error::SchemaVersion { found: 7, expected: 1 })
        ));
        assert!(matches!(from_json_str("{\"kind\":\"fit\"}"), Err(Error::Schema(_))));
        assert!(from_json_str("[1]").is_err());
    }

    #[test]
    fn csv_tables_have_documented_headers() {
        let p = Payload::Fit(LabeledFit { dataset: "x".into(), fit: fit_result() });
        let mut buf = Vec::new();
        write_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dataset,variant,member,pi,d\nx,full,a,"));
        assert_eq!(text.lines().count(), 4);
    }
}
