//! Loading and saving paired system outputs.
//!
//! Three formats are supported:
//!
//! * `entry-tsv` — one line per entry. Two tab-separated columns
//!   `correct<TAB>length` for accuracy data, three columns
//!   `true_positive<TAB>incorrect<TAB>length` for F1 data.
//! * `token-tsv` — one line per entry of space-separated 0/1 token
//!   correctness flags; `correct` is the row sum and `length` the row
//!   width.
//! * `json` — an array of objects using the same field names as
//!   [`EntryRecord`].
//!
//! All text formats are UTF-8 with Unix or Windows line endings; blank
//! lines are skipped and `#` starts a comment line. Validation is strict:
//! counts exceeding the entry length are rejected rather than repaired.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::{EntryRecord, PairedDataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    EntryTsv,
    TokenTsv,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::EntryTsv => "entry-tsv",
            Format::TokenTsv => "token-tsv",
            Format::Json => "json",
        }
    }

    /// Conventional file extension for the format.
    pub fn extension(&self) -> &'static str {
        match self {
            Format::EntryTsv | Format::TokenTsv => "tsv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entry-tsv" => Ok(Format::EntryTsv),
            "token-tsv" => Ok(Format::TokenTsv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown format '{other}' (expected entry-tsv, token-tsv, or json)"
            ))),
        }
    }
}

/// A scored-output file with its declared format.
#[derive(Clone, Debug)]
pub struct CorpusFile {
    pub format: Format,
    pub path: PathBuf,
}

impl CorpusFile {
    pub fn new(format: Format, path: impl Into<PathBuf>) -> Self {
        CorpusFile {
            format,
            path: path.into(),
        }
    }
}

/// Which entry-tsv column layout to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsvVariant {
    /// `correct<TAB>length`
    Accuracy,
    /// `true_positive<TAB>incorrect<TAB>length`
    F1,
}

/// Loads one system's entries.
pub fn load_entries(file: &CorpusFile) -> Result<Vec<EntryRecord>> {
    let text = fs::read_to_string(&file.path).map_err(|source| Error::Io {
        path: file.path.clone(),
        source,
    })?;
    match file.format {
        Format::EntryTsv => parse_entry_tsv(&text, &file.path),
        Format::TokenTsv => parse_token_tsv(&text, &file.path),
        Format::Json => parse_json(&text, &file.path),
    }
}

/// Loads and aligns both systems' entries into a validated dataset.
///
/// Entry order is preserved from the files. Count or per-entry length
/// mismatches are reported with the first offending index.
pub fn load_paired(u_file: &CorpusFile, v_file: &CorpusFile) -> Result<PairedDataset> {
    let u = load_entries(u_file)?;
    let v = load_entries(v_file)?;
    PairedDataset::new(u, v)
}

fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Data lines with their 1-based line numbers: trimmed of trailing CR,
/// blank and `#`-comment lines removed.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
        .filter(|(_, line)| {
            let trimmed = line.trim();
            !trimmed.is_empty() && !trimmed.starts_with('#')
        })
}

fn parse_count(field: &str, what: &str, path: &Path, line: usize) -> Result<u32> {
    field
        .trim()
        .parse::<u32>()
        .map_err(|_| parse_error(path, line, format!("invalid {what} '{}'", field.trim())))
}

fn parse_entry_tsv(text: &str, path: &Path) -> Result<Vec<EntryRecord>> {
    let mut entries = Vec::new();
    for (line_no, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        let record = match fields.as_slice() {
            [correct, length] => EntryRecord {
                correct: parse_count(correct, "correct count", path, line_no)?,
                length: parse_count(length, "length", path, line_no)?,
                true_positive: 0,
                incorrect: 0,
            },
            [tp, incorrect, length] => EntryRecord {
                correct: 0,
                length: parse_count(length, "length", path, line_no)?,
                true_positive: parse_count(tp, "true-positive count", path, line_no)?,
                incorrect: parse_count(incorrect, "incorrect count", path, line_no)?,
            },
            _ => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
                ))
            }
        };
        entries.push(record.validated(entries.len())?);
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(entries)
}

fn parse_token_tsv(text: &str, path: &Path) -> Result<Vec<EntryRecord>> {
    let mut entries = Vec::new();
    for (line_no, line) in data_lines(text) {
        let mut correct = 0u32;
        let mut length = 0u32;
        for flag in line.split_whitespace() {
            match flag {
                "0" => length += 1,
                "1" => {
                    correct += 1;
                    length += 1;
                }
                other => {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("invalid token flag '{other}' (expected 0 or 1)"),
                    ))
                }
            }
        }
        entries.push(EntryRecord::accuracy(correct, length).map_err(|_| {
            parse_error(path, line_no, "token row must contain at least one flag")
        })?);
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(entries)
}

fn parse_json(text: &str, path: &Path) -> Result<Vec<EntryRecord>> {
    let raw: Vec<EntryRecord> = serde_json::from_str(text)
        .map_err(|e| parse_error(path, e.line(), e.to_string()))?;
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| r.validated(i))
        .collect()
}

/// Writes entries in the given format; the inverse of [`load_entries`] for
/// data produced by the matching variant.
pub fn write_entries(
    w: &mut impl Write,
    entries: &[EntryRecord],
    format: Format,
    variant: TsvVariant,
) -> std::io::Result<()> {
    match format {
        Format::EntryTsv => write_entry_tsv(w, entries, variant),
        Format::TokenTsv => write_token_tsv(w, entries),
        Format::Json => write_json(w, entries),
    }
}

pub fn write_entry_tsv(
    w: &mut impl Write,
    entries: &[EntryRecord],
    variant: TsvVariant,
) -> std::io::Result<()> {
    for e in entries {
        match variant {
            TsvVariant::Accuracy => writeln!(w, "{}\t{}", e.correct, e.length)?,
            TsvVariant::F1 => writeln!(w, "{}\t{}\t{}", e.true_positive, e.incorrect, e.length)?,
        }
    }
    Ok(())
}

pub fn write_token_tsv(w: &mut impl Write, entries: &[EntryRecord]) -> std::io::Result<()> {
    for e in entries {
        let mut flags = Vec::with_capacity(e.length as usize);
        flags.extend(std::iter::repeat("1").take(e.correct as usize));
        flags.extend(std::iter::repeat("0").take((e.length - e.correct) as usize));
        writeln!(w, "{}", flags.join(" "))?;
    }
    Ok(())
}

pub fn write_json(w: &mut impl Write, entries: &[EntryRecord]) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(entries).expect("entry records serialize");
    writeln!(w, "{text}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::NamedTempFile;

    fn corpus(format: Format, contents: &str) -> (NamedTempFile, CorpusFile) {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        let file = CorpusFile::new(format, f.path());
        (f, file)
    }

    #[test]
    fn entry_tsv_accuracy_rows_parse() {
        let (_g, file) = corpus(Format::EntryTsv, "3\t5\n1\t4\n");
        let entries = load_entries(&file).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0], EntryRecord::accuracy(3, 5).unwrap());
        assert_eq!(entries[1], EntryRecord::accuracy(1, 4).unwrap());
    }

    #[test]
    fn entry_tsv_f1_rows_parse() {
        let (_g, file) = corpus(Format::EntryTsv, "2\t1\t5\n");
        let entries = load_entries(&file).unwrap();
        assert_eq!(entries[0], EntryRecord::f1(2, 1, 5).unwrap());
    }

    #[test]
    fn comments_blanks_and_crlf_are_tolerated() {
        let (_g, file) = corpus(Format::EntryTsv, "# header\r\n\r\n3\t5\r\n\n1\t4\n");
        let entries = load_entries(&file).unwrap();
        assert_eq!(entries.len(), 2);
    }

    #[test]
    fn malformed_lines_report_their_line_number() {
        let (_g, file) = corpus(Format::EntryTsv, "3\t5\nfive\t5\n");
        let err = load_entries(&file).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn overlong_correct_count_is_rejected() {
        let (_g, file) = corpus(Format::EntryTsv, "6\t5\n");
        assert!(matches!(
            load_entries(&file),
            Err(Error::CorrectExceedsLength { index: 0, .. })
        ));
    }

    #[test]
    fn token_rows_aggregate_to_counts() {
        // 5-token row with 3 correct
        let (_g, file) = corpus(Format::TokenTsv, "1 0 1 1 0\n1 1 1 1 1\n");
        let entries = load_entries(&file).unwrap();
        assert_eq!(entries[0], EntryRecord::accuracy(3, 5).unwrap());
        assert_eq!(entries[1], EntryRecord::accuracy(5, 5).unwrap());
    }

    #[test]
    fn token_rows_reject_non_binary_flags() {
        let (_g, file) = corpus(Format::TokenTsv, "1 2 0\n");
        assert!(matches!(load_entries(&file), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn json_arrays_parse_with_defaults() {
        let (_g, file) = corpus(
            Format::Json,
            r#"[{"correct": 3, "length": 5}, {"length": 2, "true_positive": 1, "incorrect": 1}]"#,
        );
        let entries = load_entries(&file).unwrap();
        assert_eq!(entries[0].correct, 3);
        assert_eq!(entries[1].true_positive, 1);
        assert_eq!(entries[1].correct, 0);
    }

    #[test]
    fn entry_count_mismatch_is_an_alignment_error() {
        let (_ga, a) = corpus(Format::EntryTsv, "1\t2\n2\t2\n0\t1\n");
        let (_gb, b) = corpus(Format::EntryTsv, "1\t2\n2\t2\n0\t1\n1\t1\n");
        let err = load_paired(&a, &b).unwrap_err();
        assert!(matches!(
            err,
            Error::EntryCountMismatch {
                u_count: 3,
                v_count: 4
            }
        ));
    }

    #[test]
    fn per_entry_length_mismatch_names_the_first_index() {
        let (_ga, a) = corpus(Format::EntryTsv, "1\t2\n2\t3\n");
        let (_gb, b) = corpus(Format::EntryTsv, "1\t2\n2\t4\n");
        let err = load_paired(&a, &b).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { index: 1, .. }));
    }

    #[test]
    fn empty_files_are_rejected() {
        let (_g, file) = corpus(Format::EntryTsv, "# only a comment\n");
        assert!(matches!(load_entries(&file), Err(Error::EmptyDataset)));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let file = CorpusFile::new(Format::EntryTsv, "/nonexistent/scores.tsv");
        assert!(matches!(load_entries(&file), Err(Error::Io { .. })));
    }

    #[test]
    fn accuracy_tsv_round_trips() {
        let entries = vec![
            EntryRecord::accuracy(3, 5).unwrap(),
            EntryRecord::accuracy(0, 2).unwrap(),
            EntryRecord::accuracy(4, 4).unwrap(),
        ];
        let mut buf = Vec::new();
        write_entry_tsv(&mut buf, &entries, TsvVariant::Accuracy).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "3\t5\n0\t2\n4\t4\n");
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        let reloaded = load_entries(&CorpusFile::new(Format::EntryTsv, f.path())).unwrap();
        assert_eq!(reloaded, entries);
    }

    #[test]
    fn f1_tsv_round_trips() {
        let entries = vec![
            EntryRecord::f1(2, 1, 5).unwrap(),
            EntryRecord::f1(0, 0, 3).unwrap(),
        ];
        let mut buf = Vec::new();
        write_entry_tsv(&mut buf, &entries, TsvVariant::F1).unwrap();
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        let reloaded = load_entries(&CorpusFile::new(Format::EntryTsv, f.path())).unwrap();
        assert_eq!(reloaded, entries);
    }

    #[test]
    fn token_and_json_round_trip_accuracy_counts() {
        let entries = vec![
            EntryRecord::accuracy(2, 4).unwrap(),
            EntryRecord::accuracy(1, 1).unwrap(),
        ];
        for format in [Format::TokenTsv, Format::Json] {
            let mut buf = Vec::new();
            write_entries(&mut buf, &entries, format, TsvVariant::Accuracy).unwrap();
            let mut f = NamedTempFile::new().unwrap();
            f.write_all(&buf).unwrap();
            let reloaded = load_entries(&CorpusFile::new(format, f.path())).unwrap();
            assert_eq!(reloaded, entries, "format {format}");
        }
    }
}
