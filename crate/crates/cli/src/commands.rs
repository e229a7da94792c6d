use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use turntaker::fitter::{evaluate_split, fit, FitOptions, FitResult, ModelVariant};
use turntaker::ingest::{
    build_sequences, from_json_str, parse_annotations, parse_traits, to_json_string, write_annotations,
    write_csv, Dataset, DelimitedFormat, EvaluationRow, EvaluationTable, LabeledFit, Meeting, Payload,
};
use turntaker::model::{Roster, TeamParams};
use turntaker::simulator::{simulate_meetings, substream};
use turntaker::trait_analysis::{analyze_traits, member_estimates};
use turntaker::validation::{coverage_summary, EnsembleSettings};

use crate::args::{Common, FitArgs, Format};
use crate::error::{CliError, CliResult};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn delimited(common: &Common) -> CliResult<DelimitedFormat> {
    u8::try_from(common.delimiter)
        .ok()
        .filter(u8::is_ascii)
        .map(|delimiter| DelimitedFormat { delimiter })
        .ok_or_else(|| CliError::Usage(format!("delimiter {:?} is not a single ASCII character", common.delimiter)))
}

fn file_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn with_path(path: &Path, e: turntaker::Error) -> CliError {
    match CliError::from(e) {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    }
}

fn load_dataset(path: &Path, format: DelimitedFormat) -> CliResult<Dataset> {
    let rows = parse_annotations(open(path)?, format).map_err(|e| with_path(path, e))?;
    let ds = build_sequences(&rows).map_err(|e| with_path(path, e))?;
    if ds.meetings.is_empty() {
        return Err(CliError::Usage(format!("{}: no annotated turns", path.display())));
    }
    Ok(ds)
}

fn fit_options(args: &FitArgs) -> CliResult<FitOptions> {
    let mut opts = match &args.config {
        Some(path) => toml::from_str(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => FitOptions::default(),
    };
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    Ok(opts)
}

fn write_output(common: &Common, bytes: &[u8]) -> CliResult<()> {
    match &common.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit(common: &Common, payload: &Payload) -> CliResult<()> {
    let bytes = match common.format {
        Format::Json => to_json_string(payload)?.into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, payload)?;
            buf
        }
    };
    write_output(common, &bytes)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlainParams {
    members: Vec<String>,
    pi: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsInput {
    Plain(PlainParams),
    Team(TeamParams),
}

fn load_fit(path: &Path) -> CliResult<LabeledFit> {
    match from_json_str(&read_text(path)?).map_err(|e| with_path(path, e))? {
        Payload::Fit(f) => Ok(f),
        other => Err(CliError::Usage(format!(
            "{}: expected a fit result, found {:?}",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_params(path: &Path) -> CliResult<TeamParams> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if value.get("schema_version").is_some() {
        return Ok(load_fit(path)?.fit.team);
    }
    let input: ParamsInput = serde_json::from_value(value).map_err(|_| {
        CliError::Usage(format!(
            "{}: expected {{members, pi, d}}, {{roster, params}} or a saved fit",
            path.display()
        ))
    })?;
    Ok(match input {
        ParamsInput::Plain(p) => TeamParams::from_vectors(Roster::new(p.members)?, &p.pi, &p.d)?,
        ParamsInput::Team(t) => t,
    })
}

pub fn simulate(common: &Common, params: &Path, turns: u64, meetings: u64, seed: u64) -> CliResult<()> {
    let team = load_params(params)?;
    let turns = usize::try_from(turns).map_err(|_| CliError::Usage("--turns is too large".into()))?;
    let lengths = vec![turns; meetings as usize];
    let sequences = simulate_meetings(&team, &lengths, &mut substream(seed, 0))?;
    let meetings: Vec<Meeting> = sequences
        .into_iter()
        .enumerate()
        .map(|(k, sequence)| Meeting { id: format!("meeting-{}", k + 1), sequence })
        .collect();
    let mut buf = Vec::new();
    write_annotations(&mut buf, team.roster(), &meetings)?;
    write_output(common, &buf)
}

fn report_fit(label: &str, f: &FitResult) {
    eprintln!(
        "{label}: {} log-likelihood {:.6} over {} turns{}",
        f.variant,
        f.log_likelihood,
        f.total_turns,
        if f.converged { "" } else { " (not converged)" }
    );
}

pub fn fit_cmd(
    common: &Common,
    data: &Path,
    variant: ModelVariant,
    dataset: Option<String>,
    args: &FitArgs,
) -> CliResult<()> {
    let ds = load_dataset(data, delimited(common)?)?;
    let opts = fit_options(args)?;
    let result = fit(&ds.sequences(), &ds.roster, variant, &opts)?;
    let dataset = dataset.unwrap_or_else(|| file_label(data));
    report_fit(&dataset, &result);
    emit(common, &Payload::Fit(LabeledFit { dataset, fit: result }))
}

pub fn evaluate(common: &Common, data: &[PathBuf], split: f64, args: &FitArgs) -> CliResult<()> {
    if !(split > 0.0 && split < 1.0) {
        return Err(CliError::Usage(format!("--split {split} must lie strictly between 0 and 1")));
    }
    let format = delimited(common)?;
    let opts = fit_options(args)?;
    let mut rows = Vec::new();
    let mut evaluations = Vec::new();
    for path in data {
        let ds = load_dataset(path, format)?;
        let seqs = ds.sequences();
        let reduced = evaluate_split(&seqs, &ds.roster, ModelVariant::Reduced, split, &opts)
            .map_err(|e| with_path(path, e))?;
        let full = evaluate_split(&seqs, &ds.roster, ModelVariant::Full, split, &opts)
            .map_err(|e| with_path(path, e))?;
        let dataset = file_label(path);
        eprintln!("{dataset}: held-out log-likelihood {:.4} without memory, {:.4} with", reduced.test_ll, full.test_ll);
        rows.push(EvaluationRow { dataset, no_memory: reduced.test_ll, memory: full.test_ll });
        evaluations.push(reduced);
        evaluations.push(full);
    }
    emit(common, &Payload::Evaluation(EvaluationTable { rows, evaluations }))
}

fn fit_for(
    saved: Option<&Path>,
    variant: ModelVariant,
    ds: &Dataset,
    opts: &FitOptions,
) -> CliResult<TeamParams> {
    let Some(path) = saved else {
        return Ok(fit(&ds.sequences(), &ds.roster, variant, opts)?.team);
    };
    let f = load_fit(path)?;
    if f.fit.team.roster() != &ds.roster {
        return Err(CliError::Usage(format!(
            "{}: roster {:?} does not match the data roster {:?}",
            path.display(),
            f.fit.team.roster().members(),
            ds.roster.members()
        )));
    }
    if f.fit.variant != variant {
        log::warn!("{}: fit is {}, used as the {variant} model", path.display(), f.fit.variant);
    }
    Ok(f.fit.team)
}

pub struct PatternArgs<'a> {
    pub data: &'a Path,
    pub full: Option<&'a Path>,
    pub reduced: Option<&'a Path>,
    pub replications: usize,
    pub level: f64,
    pub min_exchange: usize,
    pub dataset: Option<String>,
    pub fit: &'a FitArgs,
}

pub fn patterns(common: &Common, a: PatternArgs<'_>) -> CliResult<()> {
    if a.replications == 0 {
        return Err(CliError::Usage("--replications must be at least 1".into()));
    }
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(CliError::Usage(format!("--level {} must lie strictly between 0 and 1", a.level)));
    }
    let ds = load_dataset(a.data, delimited(common)?)?;
    let opts = fit_options(a.fit)?;
    let full = fit_for(a.full, ModelVariant::Full, &ds, &opts)?;
    let reduced = fit_for(a.reduced, ModelVariant::Reduced, &ds, &opts)?;
    let settings = EnsembleSettings {
        replications: a.replications,
        seed: opts.seed,
        level: a.level,
        min_exchange: a.min_exchange,
    };
    let dataset = a.dataset.unwrap_or_else(|| file_label(a.data));
    let summary = coverage_summary(
        &dataset,
        &ds.roster,
        &ds.sequences(),
        &[(ModelVariant::Full, &full), (ModelVariant::Reduced, &reduced)],
        &settings,
    )?;
    for v in &summary.variants {
        let covered = v.verdicts.iter().filter(|x| x.covered).count();
        eprintln!("{dataset}: {} model covers {covered}/{} statistics", v.variant, v.verdicts.len());
    }
    emit(common, &Payload::Coverage(summary))
}

pub fn traits(common: &Common, fits: &[PathBuf], traits: &Path) -> CliResult<()> {
    if fits.len() < 2 {
        return Err(CliError::Usage("trait analysis needs fits for at least two teams".into()));
    }
    let loaded = fits.iter().map(|p| load_fit(p)).collect::<CliResult<Vec<_>>>()?;
    let records = parse_traits(open(traits)?, delimited(common)?).map_err(|e| with_path(traits, e))?;
    let estimates = member_estimates(loaded.iter().map(|f| (f.dataset.as_str(), &f.fit)));
    let analysis = analyze_traits(&estimates, &records)?;
    for w in &analysis.warnings {
        log::warn!("{w}");
    }
    for t in [&analysis.pi, &analysis.d] {
        let best = t.ranking.best();
        eprintln!("{}: best model {} (weight {:.3})", t.target, best.model, best.weight);
    }
    emit(common, &Payload::Traits(analysis))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn params_accept_three_forms() {
        let dir = tempfile::tempdir().unwrap();
        let plain = write(dir.path(), "a.json", r#"{"members":["x","y"],"pi":[0.7,0.3],"d":[1,0]}"#);
        let team = write(
            dir.path(),
            "b.json",
            r#"{"roster":["x","y"],"params":[{"pi":0.7,"d":1.0},{"pi":0.3,"d":0.0}]}"#,
        );
        let a = load_params(&plain).unwrap();
        assert_eq!(a, load_params(&team).unwrap());

        let fit = FitResult {
            team: a.clone(),
            variant: ModelVariant::Full,
            log_likelihood: -1.0,
            converged: true,
            n_restarts_used: 1,
            free_parameters: 3,
            total_turns: 10,
            warnings: Vec::new(),
        };
        let saved = dir.path().join("c.json");
        turntaker::ingest::save_results(&saved, &Payload::Fit(LabeledFit { dataset: "t".into(), fit }))
            .unwrap();
        assert_eq!(load_params(&saved).unwrap(), a);

        let bad = write(dir.path(), "d.json", r#"{"members":["x"],"pi":[1.0]}"#);
        assert!(matches!(load_params(&bad), Err(CliError::Usage(_))));
    }

    #[test]
    fn labels_come_from_file_stems() {
        assert_eq!(file_label(Path::new("/data/team-3.csv")), "team-3");
    }
}
