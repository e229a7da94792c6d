use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::model::{Roster, TurnSequence};
use crate::stats::TraitRecord;

pub const ANNOTATION_HEADER: [&str; 4] = ["meeting", "speaker", "start", "end"];

/// One annotated utterance, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub meeting: String,
    pub speaker: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelimitedFormat {
    pub delimiter: u8,
}

impl Default for DelimitedFormat {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meeting {
    pub id: String,
    pub sequence: TurnSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub roster: Roster,
    pub meetings: Vec<Meeting>,
    #[serde(default)]
    pub traits: Option<Vec<TraitRecord>>,
}

impl Dataset {
    pub fn sequences(&self) -> Vec<TurnSequence> {
        self.meetings.iter().map(|m| m.sequence.clone()).collect()
    }

    pub fn total_turns(&self) -> usize {
        self.meetings.iter().map(|m| m.sequence.len()).sum()
    }

    pub fn meeting_lengths(&self) -> Vec<usize> {
        self.meetings.iter().map(|m| m.sequence.len()).collect()
    }
}

pub(crate) fn reader<R: Read>(input: R, format: DelimitedFormat) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn parse_seconds(field: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = field.parse().map_err(|_| format!("{name} {field:?} is not a number"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("{name} {field:?} must be a finite non-negative number of seconds"));
    }
    Ok(v)
}

/// Parses `meeting,speaker,start,end` rows. Every malformed row is reported
/// with its line number; nothing is silently dropped.
pub fn parse_annotations<R: Read>(input: R, format: DelimitedFormat) -> Result<Vec<RawAnnotation>> {
    let mut rdr = reader(input, format);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ANNOTATION_HEADER {
        return Err(Error::Schema(format!(
            "annotation header must be exactly {:?}, found {header:?}",
            ANNOTATION_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parsed = (|| {
            if record.len() != 4 {
                return Err(format!("expected 4 fields, found {}", record.len()));
            }
            let meeting = record[0].to_string();
            let speaker = record[1].to_string();
            if meeting.is_empty() {
                return Err("empty meeting id".to_string());
            }
            if speaker.is_empty() {
                return Err("empty speaker id".to_string());
            }
            let start = parse_seconds(&record[2], "start")?;
            let end = parse_seconds(&record[3], "end")?;
            if end <= start {
                return Err(format!("end {end} is not after start {start}"));
            }
            Ok(RawAnnotation { meeting, speaker, start, end })
        })();
        match parsed {
            Ok(a) => out.push(a),
            Err(reason) => errors.push(RowError { line, reason }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Rows(errors))
    }
}

/// Groups annotations into meetings (first-appearance order), orders each
/// meeting by start time, then end time, then speaker id, and collapses
/// consecutive utterances by one speaker into a single turn. The roster is
/// every speaker, sorted lexicographically.
pub fn build_sequences(annotations: &[RawAnnotation]) -> Result<Dataset> {
    let speakers: BTreeSet<&str> = annotations.iter().map(|a| a.speaker.as_str()).collect();
    let roster = Roster::new(speakers.iter().copied())?;

    let mut order: Vec<&str> = Vec::new();
    for a in annotations {
        if !order.contains(&a.meeting.as_str()) {
            order.push(&a.meeting);
        }
    }
    let meetings = order
        .into_iter()
        .map(|id| {
            let mut rows: Vec<&RawAnnotation> =
                annotations.iter().filter(|a| a.meeting == id).collect();
            rows.sort_by(|x, y| {
                x.start
                    .total_cmp(&y.start)
                    .then(x.end.total_cmp(&y.end))
                    .then_with(|| x.speaker.cmp(&y.speaker))
            });
            let mut speakers: Vec<usize> = rows
                .iter()
                .map(|a| roster.index_of(&a.speaker).expect("speaker in roster"))
                .collect();
            speakers.dedup();
            Ok(Meeting { id: id.to_string(), sequence: TurnSequence::new(speakers, roster.len())? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { roster, meetings, traits: None })
}

/// Writes meetings as annotation rows with unit-spaced synthetic timestamps:
/// the k-th turn of a meeting spans `[k, k + 1)`.
pub fn write_annotations<W: Write>(out: W, roster: &Roster, meetings: &[Meeting]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(ANNOTATION_HEADER)?;
    for m in meetings {
        for (k, &s) in m.sequence.speakers().iter().enumerate() {
            w.write_record([
                m.id.as_str(),
                roster.name(s),
                &k.to_string(),
                &(k + 1).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
