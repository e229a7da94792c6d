use std::io::Read;

use crate::error::{Error, Result, RowError};
use crate::ingest::annotations::{reader, DelimitedFormat};
use crate::stats::{Nationality, Sex, TraitRecord};

pub const TRAIT_HEADER: [&str; 7] = [
    "member",
    "team",
    "extraversion",
    "agreeableness",
    "conscientiousness",
    "sex",
    "nationality",
];

/// Parses the trait table. Columns are located by header name; categories
/// are matched case-insensitively.
pub fn parse_traits<R: Read>(input: R, format: DelimitedFormat) -> Result<Vec<TraitRecord>> {
    let mut rdr = reader(input, format);
    let header = rdr.headers()?.clone();
    let mut columns = [0usize; 7];
    for (slot, name) in columns.iter_mut().zip(TRAIT_HEADER) {
        *slot = header.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| {
            Error::Schema(format!("trait file is missing the {name:?} column"))
        })?;
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(columns[i]).unwrap_or("");
        let parsed = (|| {
            let number = |i: usize| -> std::result::Result<f64, String> {
                let v: f64 = field(i)
                    .parse()
                    .map_err(|_| format!("{} {:?} is not a number", TRAIT_HEADER[i], field(i)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("{} must be finite", TRAIT_HEADER[i]))
                }
            };
            let member = field(0).to_string();
            let team = field(1).to_string();
            if member.is_empty() || team.is_empty() {
                return Err("member and team must be non-empty".to_string());
            }
            Ok(TraitRecord {
                member,
                team,
                extraversion: number(2)?,
                agreeableness: number(3)?,
                conscientiousness: number(4)?,
                sex: field(5).parse::<Sex>().map_err(|e| e.to_string())?,
                nationality: field(6).parse::<Nationality>().map_err(|e| e.to_string())?,
            })
        })();
        match parsed {
            Ok(r) => out.push(r),
            Err(reason) => errors.push(RowError { line, reason }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }
    for (i, r) in out.iter().enumerate() {
        if out[..i].iter().any(|o| o.team == r.team && o.member == r.member) {
            return Err(Error::Schema(format!(
                "duplicate trait record for member {:?} of team {:?}",
                r.member, r.team
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "member,team,extraversion,agreeableness,conscientiousness,sex,nationality\n";

    #[test]
    fn normalizes_categories() {
        let text = format!("{HEADER}ana,t1,3.5,4,2.25,Female,american\nbo,t1,2,3,4,MALE,Non-American\n");
        let recs = parse_traits(text.as_bytes(), Default::default()).unwrap();
        assert_eq!(recs[0].nationality, Nationality::American);
        assert_eq!(recs[0].sex, Sex::Female);
        assert_eq!(recs[1].nationality, Nationality::NonAmerican);
        assert_eq!(recs[0].conscientiousness, 2.25);
    }

    #[test]
    fn unknown_category_is_row_error() {
        let text = format!("{HEADER}ana,t1,3,4,2,unknown,american\n");
        match parse_traits(text.as_bytes(), Default::default()) {
            Err(Error::Rows(rows)) => assert_eq!(rows[0].line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "member,team,extraversion,agreeableness,sex,nationality\n";
        assert!(matches!(parse_traits(text.as_bytes(), Default::default()), Err(Error::Schema(_))));
    }

    #[test]
    fn duplicate_members_rejected() {
        let text = format!("{HEADER}a,t,1,1,1,male,american\na,t,2,2,2,male,american\n");
        assert!(matches!(parse_traits(text.as_bytes(), Default::default()), Err(Error::Schema(_))));
    }
}
