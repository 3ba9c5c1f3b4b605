//! Interaction logs: parsing, per-ego timelines and the engagement filter.
//!
//! One JSON object per line:
//! `{"ego": str, "alter": str, "kind": "reply"|"mention"|"retweet"|"quote_retweet", "ts": int, "text": str}`.
//! Lines that fail validation are skipped and reported with their 1-based line
//! number; only an I/O failure aborts a parse.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, BufWriter, Write};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error at line {line} after {records_parsed} records: {source}")]
    Io {
        line: usize,
        records_parsed: usize,
        #[source]
        source: io::Error,
    },
    #[error("empty timeline")]
    EmptyTimeline,
    #[error("timeline mixes egos {0:?} and {1:?}")]
    MixedEgos(String, String),
    #[error("invalid engagement policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Write(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Reply,
    Mention,
    Retweet,
    QuoteRetweet,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 4] = [
        InteractionKind::Reply,
        InteractionKind::Mention,
        InteractionKind::Retweet,
        InteractionKind::QuoteRetweet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Reply => "reply",
            InteractionKind::Mention => "mention",
            InteractionKind::Retweet => "retweet",
            InteractionKind::QuoteRetweet => "quote_retweet",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

/// One directed Ego -> Alter event.
///
/// For retweets the text is carried but never scored; for quote retweets it is
/// the ego's own commentary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    #[serde(rename = "ego")]
    pub ego_id: String,
    #[serde(rename = "alter")]
    pub alter_id: String,
    pub kind: InteractionKind,
    /// UTC seconds since the epoch, strictly positive.
    pub ts: i64,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    InvalidUtf8,
    Malformed(String),
    UnknownKind(String),
    NonPositiveTimestamp(i64),
    SelfInteraction,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::InvalidUtf8 => write!(f, "invalid UTF-8"),
            SkipReason::Malformed(msg) => write!(f, "malformed record: {msg}"),
            SkipReason::UnknownKind(kind) => write!(f, "unknown kind {kind:?}"),
            SkipReason::NonPositiveTimestamp(ts) => write!(f, "non-positive timestamp {ts}"),
            SkipReason::SelfInteraction => write!(f, "ego and alter are the same user"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip {
    /// 1-based.
    pub line: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub records: Vec<InteractionRecord>,
    pub skips: Vec<Skip>,
}

impl ParsedLog {
    pub fn line_count(&self) -> usize {
        self.records.len() + self.skips.len()
    }
}

#[derive(Deserialize)]
struct RawRecord {
    ego: String,
    alter: String,
    kind: String,
    ts: i64,
    #[serde(default)]
    text: String,
}

/// Validates a single log line.
pub fn parse_line(line: &str) -> Result<InteractionRecord, SkipReason> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| SkipReason::Malformed(e.to_string()))?;
    let kind = raw
        .kind
        .parse::<InteractionKind>()
        .map_err(|_| SkipReason::UnknownKind(raw.kind.clone()))?;
    if raw.ts <= 0 {
        return Err(SkipReason::NonPositiveTimestamp(raw.ts));
    }
    if raw.ego == raw.alter {
        return Err(SkipReason::SelfInteraction);
    }
    Ok(InteractionRecord {
        ego_id: raw.ego,
        alter_id: raw.alter,
        kind,
        ts: raw.ts,
        text: raw.text,
    })
}

/// Reads a line-delimited log to the end. Every line becomes either a record or
/// a skip, in input order.
pub fn parse_interaction_log<R: BufRead>(mut reader: R) -> Result<ParsedLog, CorpusError> {
    let mut log = ParsedLog::default();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| CorpusError::Io {
                line: line_no + 1,
                records_parsed: log.records.len(),
                source,
            })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        let outcome = match std::str::from_utf8(&buf) {
            Ok(line) => parse_line(line),
            Err(_) => Err(SkipReason::InvalidUtf8),
        };
        match outcome {
            Ok(record) => log.records.push(record),
            Err(reason) => log.skips.push(Skip {
                line: line_no,
                reason,
            }),
        }
    }
    Ok(log)
}

/// CSV `line_number,reason`.
pub fn write_skip_report<W: Write>(skips: &[Skip], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["line_number", "reason"])?;
    for skip in skips {
        w.write_record([skip.line.to_string(), skip.reason.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_jsonl<W: Write>(
    records: &[InteractionRecord],
    out: W,
) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(out);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Groups records by ego, keeping input order within each ego.
pub fn group_by_ego(
    records: impl IntoIterator<Item = InteractionRecord>,
) -> BTreeMap<String, Vec<InteractionRecord>> {
    let mut groups: BTreeMap<String, Vec<InteractionRecord>> = BTreeMap::new();
    for record in records {
        groups.entry(record.ego_id.clone()).or_default().push(record);
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn from_timestamp(ts: i64) -> YearMonth {
        let dt = DateTime::from_timestamp(ts, 0).expect("timestamp within chrono range");
        YearMonth {
            year: dt.year(),
            month: dt.month(),
        }
    }

    pub fn days(self) -> u32 {
        let first = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month");
        let next = if self.month == 12 {
            NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(self.year, self.month + 1, 1)
        }
        .expect("valid month");
        (next - first).num_days() as u32
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineSummary {
    pub ego_id: String,
    pub total_interactions: u64,
    pub first_ts: i64,
    pub last_ts: i64,
    /// Only months with at least one record appear.
    pub per_month_counts: BTreeMap<YearMonth, u64>,
}

impl TimelineSummary {
    pub fn span_seconds(&self) -> i64 {
        self.last_ts - self.first_ts
    }
}

pub fn summarize_timeline(records: &[InteractionRecord]) -> Result<TimelineSummary, CorpusError> {
    let first = records.first().ok_or(CorpusError::EmptyTimeline)?;
    let mut summary = TimelineSummary {
        ego_id: first.ego_id.clone(),
        total_interactions: 0,
        first_ts: first.ts,
        last_ts: first.ts,
        per_month_counts: BTreeMap::new(),
    };
    for r in records {
        if r.ego_id != summary.ego_id {
            return Err(CorpusError::MixedEgos(
                summary.ego_id.clone(),
                r.ego_id.clone(),
            ));
        }
        summary.total_interactions += 1;
        summary.first_ts = summary.first_ts.min(r.ts);
        summary.last_ts = summary.last_ts.max(r.ts);
        *summary
            .per_month_counts
            .entry(YearMonth::from_timestamp(r.ts))
            .or_insert(0) += 1;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngagementPolicy {
    pub min_total: u64,
    /// Converted to whole days as `floor(months * 365.25 / 12)`, so 6 -> 182.
    pub min_span_months: u32,
    /// Interactions per day a month must reach to count as regular.
    pub regularity_rate: f64,
    pub max_low_month_fraction: f64,
}

impl Default for EngagementPolicy {
    fn default() -> Self {
        EngagementPolicy {
            min_total: 2000,
            min_span_months: 6,
            regularity_rate: 1.0 / 3.0,
            max_low_month_fraction: 0.5,
        }
    }
}

impl EngagementPolicy {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_total == 0 {
            return Err(CorpusError::InvalidPolicy("min_total must be positive"));
        }
        if self.min_span_months == 0 {
            return Err(CorpusError::InvalidPolicy("min_span_months must be positive"));
        }
        if !(self.regularity_rate.is_finite() && self.regularity_rate > 0.0) {
            return Err(CorpusError::InvalidPolicy("regularity_rate must be positive"));
        }
        if !(self.max_low_month_fraction > 0.0 && self.max_low_month_fraction <= 1.0) {
            return Err(CorpusError::InvalidPolicy(
                "max_low_month_fraction must be in (0, 1]",
            ));
        }
        Ok(())
    }

    pub fn min_span_days(&self) -> i64 {
        (f64::from(self.min_span_months) * 365.25 / 12.0).floor() as i64
    }
}

/// Per-rule breakdown of the engagement decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngagementVerdict {
    pub total_ok: bool,
    pub span_ok: bool,
    pub active_months: usize,
    pub low_months: usize,
    pub regular_ok: bool,
}

impl EngagementVerdict {
    pub fn engaged(&self) -> bool {
        self.total_ok && self.span_ok && self.regular_ok
    }
}

pub fn engagement_verdict(summary: &TimelineSummary, policy: &EngagementPolicy) -> EngagementVerdict {
    let total_ok = summary.total_interactions >= policy.min_total;
    let span_ok = summary.span_seconds() >= policy.min_span_days() * SECONDS_PER_DAY;
    let active_months = summary.per_month_counts.len();
    let low_months = summary
        .per_month_counts
        .iter()
        .filter(|(month, &count)| (count as f64) < policy.regularity_rate * f64::from(month.days()))
        .count();
    // an empty month map only arises from a hand-built summary; treat it as irregular
    let regular_ok = active_months > 0
        && (low_months as f64) / (active_months as f64) <= policy.max_low_month_fraction;
    EngagementVerdict {
        total_ok,
        span_ok,
        active_months,
        low_months,
        regular_ok,
    }
}

pub fn is_engaged(summary: &TimelineSummary, policy: &EngagementPolicy) -> bool {
    engagement_verdict(summary, policy).engaged()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(y: i32, m: u32, d: u32) -> i64 {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(12, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp()
    }

    fn rec(ts: i64) -> InteractionRecord {
        InteractionRecord {
            ego_id: "e".into(),
            alter_id: "a".into(),
            kind: InteractionKind::Reply,
            ts,
            text: "hi".into(),
        }
    }

    #[test]
    fn parses_valid_lines() {
        let input = concat!(
            r#"{"ego":"e","alter":"a","kind":"reply","ts":10,"text":"hi"}"#, "\n",
            r#"{"ego":"e","alter":"b","kind":"retweet","ts":11,"text":""}"#, "\n",
            r#"{"ego":"e","alter":"c","kind":"quote_retweet","ts":12,"text":"so true"}"#, "\n",
        );
        let log = parse_interaction_log(input.as_bytes()).unwrap();
        assert_eq!(log.records.len(), 3);
        assert!(log.skips.is_empty());
        assert_eq!(log.records[2].kind, InteractionKind::QuoteRetweet);
        assert_eq!(log.records[1].alter_id, "b");
    }

    #[test]
    fn unknown_kind_is_skipped() {
        let input = r#"{"ego":"e","alter":"a","kind":"like","ts":10,"text":""}"#;
        let log = parse_interaction_log(input.as_bytes()).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.skips.len(), 1);
        assert_eq!(log.skips[0].line, 1);
        assert_eq!(log.skips[0].reason, SkipReason::UnknownKind("like".into()));
    }

    #[test]
    fn bad_lines_are_skipped_with_line_numbers() {
        let input = concat!(
            r#"{"ego":"e","alter":"a","kind":"reply","ts":10,"text":"ok"}"#, "\n",
            "not json\n",
            r#"{"ego":"e","alter":"a","kind":"reply","ts":0,"text":"x"}"#, "\n",
            r#"{"ego":"e","alter":"e","kind":"reply","ts":5,"text":"self"}"#, "\n",
            "\n",
            r#"{"ego":"e","alter":"a","kind":"mention","ts":11}"#, "\r\n",
        );
        let log = parse_interaction_log(input.as_bytes()).unwrap();
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.records[1].text, "");
        let lines: Vec<usize> = log.skips.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
        assert_eq!(log.skips[1].reason, SkipReason::NonPositiveTimestamp(0));
        assert_eq!(log.skips[2].reason, SkipReason::SelfInteraction);
    }

    #[test]
    fn invalid_utf8_does_not_abort() {
        let mut input = b"\xff\xfe\n".to_vec();
        input.extend_from_slice(br#"{"ego":"e","alter":"a","kind":"reply","ts":1,"text":""}"#);
        let log = parse_interaction_log(&input[..]).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.skips[0].reason, SkipReason::InvalidUtf8);
    }

    #[test]
    fn skip_report_csv() {
        let skips = vec![Skip {
            line: 7,
            reason: SkipReason::UnknownKind("like".into()),
        }];
        let mut out = Vec::new();
        write_skip_report(&skips, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "line_number,reason\n7,\"unknown kind \"\"like\"\"\"\n");
    }

    #[test]
    fn single_record_timeline() {
        let s = summarize_timeline(&[rec(ts(2020, 1, 15))]).unwrap();
        assert_eq!(s.total_interactions, 1);
        assert_eq!(s.first_ts, s.last_ts);
        let months: Vec<String> = s.per_month_counts.keys().map(|m| m.to_string()).collect();
        assert_eq!(months, vec!["2020-01"]);
        assert_eq!(s.per_month_counts.values().sum::<u64>(), 1);
    }

    #[test]
    fn two_month_timeline() {
        let s = summarize_timeline(&[rec(ts(2020, 6, 30)), rec(ts(2020, 1, 1))]).unwrap();
        assert!(s.first_ts < s.last_ts);
        assert_eq!(s.per_month_counts.len(), 2);
    }

    #[test]
    fn empty_timeline_is_an_error() {
        assert!(matches!(summarize_timeline(&[]), Err(CorpusError::EmptyTimeline)));
    }

    #[test]
    fn mixed_egos_rejected() {
        let mut other = rec(5);
        other.ego_id = "f".into();
        assert!(matches!(
            summarize_timeline(&[rec(4), other]),
            Err(CorpusError::MixedEgos(..))
        ));
    }

    #[test]
    fn days_in_month() {
        assert_eq!(YearMonth { year: 2020, month: 2 }.days(), 29);
        assert_eq!(YearMonth { year: 2021, month: 2 }.days(), 28);
        assert_eq!(YearMonth { year: 2020, month: 12 }.days(), 31);
        assert_eq!(YearMonth { year: 2020, month: 4 }.days(), 30);
    }

    #[test]
    fn default_span_is_182_days() {
        assert_eq!(EngagementPolicy::default().min_span_days(), 182);
    }

    fn summary_with(months: &[(i32, u32, u64)], span_days: i64) -> TimelineSummary {
        let first_ts = ts(2020, 1, 1);
        TimelineSummary {
            ego_id: "e".into(),
            total_interactions: months.iter().map(|m| m.2).sum(),
            first_ts,
            last_ts: first_ts + span_days * SECONDS_PER_DAY,
            per_month_counts: months
                .iter()
                .map(|&(year, month, c)| (YearMonth { year, month }, c))
                .collect(),
        }
    }

    #[test]
    fn fails_min_total_by_one() {
        // 12 dense months, 1999 interactions
        let mut months: Vec<(i32, u32, u64)> = (1..=12).map(|m| (2020, m, 166)).collect();
        months[0].2 = 1999 - 166 * 11;
        let s = summary_with(&months, 360);
        assert_eq!(s.total_interactions, 1999);
        assert!(!is_engaged(&s, &EngagementPolicy::default()));
        months[0].2 += 1;
        assert!(is_engaged(&summary_with(&months, 360), &EngagementPolicy::default()));
    }

    #[test]
    fn fails_span() {
        let months: Vec<(i32, u32, u64)> = (1..=6).map(|m| (2020, m, 500)).collect();
        // 5.5 months
        let s = summary_with(&months, 167);
        assert_eq!(s.total_interactions, 3000);
        let v = engagement_verdict(&s, &EngagementPolicy::default());
        assert!(v.total_ok && v.regular_ok && !v.span_ok);
    }

    #[test]
    fn too_many_low_months() {
        // 8 active months; the five 31-day months hold 9 interactions each (< 31/3)
        let months = [
            (2020, 1, 9),
            (2020, 3, 9),
            (2020, 5, 9),
            (2020, 7, 9),
            (2020, 8, 9),
            (2020, 4, 800),
            (2020, 6, 800),
            (2020, 9, 800),
        ];
        let s = summary_with(&months, 250);
        let v = engagement_verdict(&s, &EngagementPolicy::default());
        assert_eq!(v.active_months, 8);
        assert_eq!(v.low_months, 5);
        assert!(v.total_ok && v.span_ok);
        assert!(!v.regular_ok);
    }

    #[test]
    fn policy_validation() {
        assert!(EngagementPolicy::default().validate().is_ok());
        let bad = EngagementPolicy {
            max_low_month_fraction: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = EngagementPolicy {
            regularity_rate: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
