use std::fs;
use std::path::Path;

use chrono::{LocalResult, NaiveDateTime, TimeZone};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::Instant;

pub const START_COLUMN: &str = "start";
pub const END_COLUMN: &str = "end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separator {
    /// Runs of tab characters separate fields; spaces belong to the field.
    Tab,
    /// Any run of whitespace separates tokens. Timestamp columns consume as
    /// many tokens as their format has, and surplus tokens are folded into
    /// the last label column.
    Whitespace,
}

/// Layout of a raw interval table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    /// One name per field. Exactly one `start` and one `end` column; every
    /// other column becomes a trailing label of the interval.
    pub column_names: Vec<String>,
    /// `chrono` strftime pattern for local wall-clock timestamps.
    pub timestamp_format: String,
    pub separator: Separator,
    pub header_lines: usize,
}

impl TableSchema {
    pub fn new(
        column_names: &[&str],
        timestamp_format: &str,
        separator: Separator,
        header_lines: usize,
    ) -> Result<Self, IngestError> {
        let schema = TableSchema {
            column_names: column_names.iter().map(|c| c.to_string()).collect(),
            timestamp_format: timestamp_format.to_string(),
            separator,
            header_lines,
        };
        schema.check()?;
        Ok(schema)
    }

    /// Ordonez sensor table: `Start time  End time  Location  Type  Place`.
    pub fn ordonez_sensors() -> Self {
        Self::new(
            &[START_COLUMN, END_COLUMN, "location", "type", "place"],
            "%Y-%m-%d %H:%M:%S",
            Separator::Whitespace,
            2,
        )
        .expect("static schema")
    }

    /// Ordonez activity table: `Start time  End time  Activity`.
    pub fn ordonez_activities() -> Self {
        Self::new(
            &[START_COLUMN, END_COLUMN, "activity"],
            "%Y-%m-%d %H:%M:%S",
            Separator::Whitespace,
            2,
        )
        .expect("static schema")
    }

    fn check(&self) -> Result<(), IngestError> {
        let count = |name: &str| self.column_names.iter().filter(|c| *c == name).count();
        if count(START_COLUMN) != 1 || count(END_COLUMN) != 1 {
            return Err(IngestError::InvalidSchema(
                "exactly one start and one end column required".into(),
            ));
        }
        if self.column_names.len() < 3 {
            return Err(IngestError::InvalidSchema(
                "at least one label column required".into(),
            ));
        }
        if self.timestamp_format.split_whitespace().count() == 0 {
            return Err(IngestError::InvalidSchema("empty timestamp format".into()));
        }
        Ok(())
    }

    fn label_count(&self) -> usize {
        self.column_names.len() - 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInterval {
    /// 1-based line number in the source file.
    pub row: usize,
    pub start: Instant,
    pub end: Instant,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTable {
    pub intervals: Vec<RawInterval>,
    pub warnings: Vec<ParseWarning>,
    /// Non-blank data lines seen after the header.
    pub rows_read: usize,
}

fn split_fields<'a>(line: &'a str, schema: &TableSchema) -> Result<Vec<String>, String> {
    match schema.separator {
        Separator::Tab => {
            let fields: Vec<String> = line
                .split('\t')
                .map(str::trim)
                .filter(|f| !f.is_empty())
                .map(str::to_string)
                .collect();
            if fields.len() != schema.column_names.len() {
                return Err(format!(
                    "expected {} fields, found {}",
                    schema.column_names.len(),
                    fields.len()
                ));
            }
            Ok(fields)
        }
        Separator::Whitespace => {
            let ts_tokens = schema.timestamp_format.split_whitespace().count();
            let mut tokens: Vec<&'a str> = line.split_whitespace().collect();
            tokens.reverse();
            let mut fields = Vec::with_capacity(schema.column_names.len());
            let last = schema.column_names.len() - 1;
            for (i, name) in schema.column_names.iter().enumerate() {
                let want = if name == START_COLUMN || name == END_COLUMN {
                    ts_tokens
                } else if i == last {
                    tokens.len().max(1)
                } else {
                    1
                };
                if tokens.len() < want {
                    return Err(format!("missing column {name:?}"));
                }
                let taken: Vec<&str> = (0..want).map(|_| tokens.pop().unwrap()).collect();
                fields.push(taken.join(" "));
            }
            if !tokens.is_empty() {
                // only reachable when the last column is a timestamp
                return Err(format!("{} unexpected trailing tokens", tokens.len()));
            }
            Ok(fields)
        }
    }
}

fn parse_local(text: &str, format: &str, tz: &Tz) -> Result<Instant, String> {
    let naive = NaiveDateTime::parse_from_str(text, format)
        .map_err(|e| format!("bad timestamp {text:?}: {e}"))?;
    match tz.from_local_datetime(&naive) {
        LocalResult::Single(t) => Ok(Instant::from_millis(t.timestamp_millis())),
        LocalResult::Ambiguous(earliest, _) => Ok(Instant::from_millis(earliest.timestamp_millis())),
        LocalResult::None => Err(format!("nonexistent local time {text:?}")),
    }
}

fn parse_row(line: &str, row: usize, schema: &TableSchema, tz: &Tz) -> Result<RawInterval, String> {
    let fields = split_fields(line, schema)?;
    let mut start = None;
    let mut end = None;
    let mut columns = Vec::with_capacity(schema.label_count());
    for (name, value) in schema.column_names.iter().zip(fields) {
        if name == START_COLUMN {
            start = Some(parse_local(&value, &schema.timestamp_format, tz)?);
        } else if name == END_COLUMN {
            end = Some(parse_local(&value, &schema.timestamp_format, tz)?);
        } else {
            columns.push(value);
        }
    }
    let (start, end) = (start.expect("schema checked"), end.expect("schema checked"));
    if end < start {
        return Err("negative duration".into());
    }
    Ok(RawInterval { row, start, end, columns })
}

/// Parses raw table text. Malformed rows become warnings; blank lines are
/// skipped silently.
pub fn parse_interval_text(text: &str, schema: &TableSchema, tz: &Tz) -> ParsedTable {
    let mut table = ParsedTable::default();
    for (i, line) in text.lines().enumerate().skip(schema.header_lines) {
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        table.rows_read += 1;
        match parse_row(line, row, schema, tz) {
            Ok(interval) => table.intervals.push(interval),
            Err(reason) => table.warnings.push(ParseWarning { row, reason }),
        }
    }
    table
}

/// Reads a raw interval file, converting local wall-clock timestamps in `tz` to UTC.
pub fn parse_interval_file(
    path: impl AsRef<Path>,
    schema: &TableSchema,
    tz: &Tz,
) -> Result<ParsedTable, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    if text.trim().is_empty() {
        return Err(IngestError::EmptyFile(path.to_path_buf()));
    }
    Ok(parse_interval_text(&text, schema, tz))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Start time\t\tEnd time\t\tLocation\tType\tPlace\n----------\t\t--------\t\t--------\t----\t-----\n";

    fn madrid() -> Tz {
        "Europe/Madrid".parse().unwrap()
    }

    #[test]
    fn ordonez_sensor_row() {
        let text = format!("{HEADER}2012-11-12 00:00:00\t2012-11-12 00:01:00\tDoor\tMagnetic\tKitchen\n");
        let t = parse_interval_text(&text, &TableSchema::ordonez_sensors(), &madrid());
        assert!(t.warnings.is_empty());
        assert_eq!(t.intervals.len(), 1);
        let iv = &t.intervals[0];
        assert_eq!(iv.end.millis() - iv.start.millis(), 60_000);
        assert_eq!(iv.columns, vec!["Door", "Magnetic", "Kitchen"]);
        assert_eq!(iv.row, 3);
        // Madrid is UTC+1 in November
        assert_eq!(iv.start.to_rfc3339(), "2012-11-11T23:00:00.000Z");
    }

    #[test]
    fn negative_duration_warns_and_skips() {
        let text = format!("{HEADER}2012-11-12 00:05:00\t2012-11-12 00:01:00\tDoor\tMagnetic\tKitchen\n");
        let t = parse_interval_text(&text, &TableSchema::ordonez_sensors(), &madrid());
        assert!(t.intervals.is_empty());
        assert_eq!(t.warnings, vec![ParseWarning { row: 3, reason: "negative duration".into() }]);
        assert_eq!(t.rows_read, 1);
    }

    #[test]
    fn blank_lines_skipped_silently() {
        let text = format!(
            "{HEADER}\n2012-11-12 00:00:00\t2012-11-12 00:01:00\tDoor\tMagnetic\tKitchen\n   \n"
        );
        let t = parse_interval_text(&text, &TableSchema::ordonez_sensors(), &madrid());
        assert!(t.warnings.is_empty());
        assert_eq!(t.intervals.len(), 1);
        assert_eq!(t.intervals[0].row, 4);
        assert_eq!(t.rows_read, 1);
    }

    #[test]
    fn mixed_separators_parse_in_whitespace_mode() {
        let text = "h\nh\n2012-11-11 21:14:00 \t 2012-11-12 00:22:59  Spare_Time/TV\n";
        let t = parse_interval_text(text, &TableSchema::ordonez_activities(), &madrid());
        assert_eq!(t.intervals[0].columns, vec!["Spare_Time/TV"]);
    }

    #[test]
    fn surplus_tokens_fold_into_last_label() {
        let text = "h\nh\n2012-11-11 21:14:00 2012-11-12 00:22:59 Watching TV\n";
        let t = parse_interval_text(text, &TableSchema::ordonez_activities(), &madrid());
        assert_eq!(t.intervals[0].columns, vec!["Watching TV"]);
    }

    #[test]
    fn tab_separator_keeps_spaces_in_fields() {
        let schema = TableSchema::new(&["start", "end", "activity"], "%Y-%m-%d %H:%M:%S", Separator::Tab, 0).unwrap();
        let t = parse_interval_text(
            "2012-11-11 21:14:00\t2012-11-12 00:22:59\tWatching TV\nbad\n",
            &schema,
            &chrono_tz::UTC,
        );
        assert_eq!(t.intervals[0].columns, vec!["Watching TV"]);
        assert_eq!(t.warnings.len(), 1);
        assert_eq!(t.warnings[0].row, 2);
    }

    #[test]
    fn missing_columns_warn() {
        let text = "h\nh\n2012-11-11 21:14:00 2012-11-12 00:22:59 Door Magnetic\n";
        let t = parse_interval_text(text, &TableSchema::ordonez_sensors(), &madrid());
        assert_eq!(t.warnings.len(), 1);
        assert!(t.warnings[0].reason.contains("place"));
    }

    #[test]
    fn schema_requires_start_and_end() {
        assert!(TableSchema::new(&["start", "label"], "%Y", Separator::Tab, 0).is_err());
    }

    #[test]
    fn empty_file_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "").unwrap();
        assert!(matches!(
            parse_interval_file(&p, &TableSchema::ordonez_sensors(), &madrid()),
            Err(IngestError::EmptyFile(_))
        ));
    }
}
