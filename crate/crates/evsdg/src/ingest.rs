//! Session CSV reading and writing.
//!
//! The format has a header row whose leading columns are exactly
//! `session_id,arrival_time,departure_time,energy_kwh`; further columns are
//! ignored. Timestamps are `YYYY-MM-DDTHH:MM:SS` wall-clock times, energy is a
//! decimal number of kWh.

use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDateTime;
use evsdg_core::{Session, SessionError, Timestamp};
use thiserror::Error;

pub const HEADER: [&str; 4] = ["session_id", "arrival_time", "departure_time", "energy_kwh"];
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParsePolicy {
    /// The first bad row aborts parsing.
    Strict,
    /// Bad rows are reported and skipped.
    #[default]
    SkipBad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordErrorReason {
    MalformedTimestamp,
    /// Departure at or before arrival.
    NegativeDuration,
    /// Energy missing a positive finite value.
    NonPositiveEnergy,
    MissingField,
}

impl fmt::Display for RecordErrorReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordErrorReason::MalformedTimestamp => "malformed timestamp",
            RecordErrorReason::NegativeDuration => "departure is not after arrival",
            RecordErrorReason::NonPositiveEnergy => "energy is not a positive number",
            RecordErrorReason::MissingField => "missing field",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("line {line_number}: {reason}")]
pub struct SessionRecordError {
    /// 1-based, counting the header as line 1.
    pub line_number: u64,
    pub reason: RecordErrorReason,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input has no header row")]
    MissingHeader,
    #[error("header must start with {expected}, found {found:?}")]
    BadHeader { expected: String, found: String },
    #[error(transparent)]
    Record(#[from] SessionRecordError),
    #[error("reading CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    // chrono's %Y would also take signs and extra digits
    if s.len() != 19 {
        return None;
    }
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok().map(Timestamp::from_datetime)
}

fn parse_row(record: &csv::StringRecord) -> Result<Session, RecordErrorReason> {
    let field = |i: usize| match record.get(i) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(RecordErrorReason::MissingField),
    };
    field(0)?;
    let arrival = parse_timestamp(field(1)?).ok_or(RecordErrorReason::MalformedTimestamp)?;
    let departure = parse_timestamp(field(2)?).ok_or(RecordErrorReason::MalformedTimestamp)?;
    let energy: f64 = field(3)?.trim().parse().map_err(|_| RecordErrorReason::NonPositiveEnergy)?;
    Session::new(arrival, departure, energy).map_err(|e| match e {
        SessionError::NonPositiveDuration => RecordErrorReason::NegativeDuration,
        SessionError::NonPositiveEnergy => RecordErrorReason::NonPositiveEnergy,
    })
}

/// Reads sessions, returning them sorted by arrival (stable for ties) along
/// with the rows skipped under [`ParsePolicy::SkipBad`].
pub fn parse_sessions<R: Read>(
    source: R,
    policy: ParsePolicy,
) -> Result<(Vec<Session>, Vec<SessionRecordError>), IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(IngestError::MissingHeader),
    };
    if header.len() < HEADER.len() || header.iter().zip(HEADER).any(|(a, b)| a != b) {
        return Err(IngestError::BadHeader {
            expected: HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut sessions = Vec::new();
    let mut errors = Vec::new();
    for record in records {
        let record = record?;
        let line_number = record.position().map_or(0, |p| p.line());
        match parse_row(&record) {
            Ok(s) => sessions.push(s),
            Err(reason) => {
                let err = SessionRecordError { line_number, reason };
                match policy {
                    ParsePolicy::Strict => return Err(err.into()),
                    ParsePolicy::SkipBad => errors.push(err),
                }
            }
        }
    }
    sessions.sort_by_key(Session::arrival);
    Ok((sessions, errors))
}

/// Writes sessions with ids `syn-000001`, `syn-000002`, … in the input format.
/// Energies use the shortest decimal that reads back to the same value.
pub fn write_sessions<W: Write>(sessions: &[Session], sink: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(HEADER)?;
    for (i, s) in sessions.iter().enumerate() {
        writer.write_record([
            format!("syn-{:06}", i + 1),
            s.arrival().to_string(),
            s.departure().to_string(),
            s.energy_kwh().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "session_id,arrival_time,departure_time,energy_kwh\n";

    fn parse(body: &str, policy: ParsePolicy) -> Result<(Vec<Session>, Vec<SessionRecordError>), IngestError> {
        parse_sessions(format!("{HEAD}{body}").as_bytes(), policy)
    }

    #[test]
    fn well_formed_row() {
        let (s, e) = parse("s1,2020-01-06T10:00:00,2020-01-06T12:30:00,7.4\n", ParsePolicy::Strict).unwrap();
        assert!(e.is_empty());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].energy_kwh(), 7.4);
        assert_eq!(s[0].connected_hours(), 2.5);
    }

    #[test]
    fn backwards_session_is_skipped() {
        let (s, e) = parse("s1,2020-01-06T12:00:00,2020-01-06T10:00:00,7.4\n", ParsePolicy::SkipBad).unwrap();
        assert!(s.is_empty());
        assert_eq!(e, [SessionRecordError { line_number: 2, reason: RecordErrorReason::NegativeDuration }]);
    }

    #[test]
    fn header_only() {
        let (s, e) = parse("", ParsePolicy::Strict).unwrap();
        assert!(s.is_empty() && e.is_empty());
    }

    #[test]
    fn missing_or_wrong_header() {
        assert!(matches!(parse_sessions(&b""[..], ParsePolicy::Strict), Err(IngestError::MissingHeader)));
        let bad = "id,arrival,departure,energy\n";
        assert!(matches!(parse_sessions(bad.as_bytes(), ParsePolicy::Strict), Err(IngestError::BadHeader { .. })));
    }

    #[test]
    fn row_reasons() {
        let body = "\
a,2020-01-06 10:00:00,2020-01-06T12:00:00,1
b,2020-01-06T10:00:00,2020-01-06T12:00:00,0
c,2020-01-06T10:00:00,2020-01-06T12:00:00
d,2020-01-06T10:00:00,2020-01-06T12:00:00,abc
e,+2020-01-06T10:00:00,2020-01-06T12:00:00,1
,2020-01-06T10:00:00,2020-01-06T12:00:00,1
";
        let (s, e) = parse(body, ParsePolicy::SkipBad).unwrap();
        assert!(s.is_empty());
        let reasons: Vec<_> = e.iter().map(|e| (e.line_number, e.reason)).collect();
        use RecordErrorReason::*;
        assert_eq!(
            reasons,
            [
                (2, MalformedTimestamp),
                (3, NonPositiveEnergy),
                (4, MissingField),
                (5, NonPositiveEnergy),
                (6, MalformedTimestamp),
                (7, MissingField)
            ]
        );
    }

    #[test]
    fn strict_aborts_on_first_bad_row() {
        let body = "a,2020-01-06T10:00:00,2020-01-06T12:00:00,1\nb,x,y,1\n";
        match parse(body, ParsePolicy::Strict) {
            Err(IngestError::Record(e)) => assert_eq!(e.line_number, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extra_columns_ignored_and_rows_sorted_stably() {
        let csv = "session_id,arrival_time,departure_time,energy_kwh,station\n\
                   a,2020-01-06T11:00:00,2020-01-06T12:00:00,3,x\n\
                   b,2020-01-06T10:00:00,2020-01-06T12:00:00,1,y\n\
                   c,2020-01-06T11:00:00,2020-01-06T13:00:00,2,z\n";
        let (s, _) = parse_sessions(csv.as_bytes(), ParsePolicy::Strict).unwrap();
        let energies: Vec<f64> = s.iter().map(Session::energy_kwh).collect();
        assert_eq!(energies, [1.0, 3.0, 2.0]);
    }

    #[test]
    fn written_sessions_read_back() {
        let t = parse_timestamp("2020-01-06T10:00:00").unwrap();
        let sessions = vec![
            Session::new(t, t.checked_add_seconds(5400).unwrap(), 0.1 + 0.2).unwrap(),
            Session::new(t.checked_add_seconds(60).unwrap(), t.checked_add_seconds(7200).unwrap(), 12.0).unwrap(),
        ];
        let mut out = Vec::new();
        write_sessions(&sessions, &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.starts_with("session_id,arrival_time,departure_time,energy_kwh\nsyn-000001,2020-01-06T10:00:00,2020-01-06T11:30:00,0.30000000000000004\n"));
        let (back, errors) = parse_sessions(&out[..], ParsePolicy::Strict).unwrap();
        assert!(errors.is_empty());
        assert_eq!(back, sessions);
    }
}
