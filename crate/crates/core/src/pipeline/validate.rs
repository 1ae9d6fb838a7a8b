//! Schema and invariant checks for pipeline outputs.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::open_reader;
use crate::sf::SfType;
use crate::tags::{bio_violation, EntityType, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Conll,
    EdlTsv,
    FramesJsonl,
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conll" => Ok(Schema::Conll),
            "edl-tsv" => Ok(Schema::EdlTsv),
            "frames-jsonl" => Ok(Schema::FramesJsonl),
            other => Err(Error::InvalidArgument(format!(
                "unknown schema `{other}` (expected conll, edl-tsv or frames-jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, line: usize, message: impl Into<String>) {
        self.violations.push(Violation {
            line,
            message: message.into(),
        });
    }
}

pub fn validate_outputs(path: &Path, schema: Schema) -> Result<ValidationReport> {
    let mut lines = Vec::new();
    for line in open_reader(path)?.lines() {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    Ok(match schema {
        Schema::Conll => check_conll(&lines),
        Schema::EdlTsv => check_edl(&lines),
        Schema::FramesJsonl => check_frames(&lines),
    })
}

fn check_conll(lines: &[String]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut tags: Vec<Tag> = Vec::new();
    let mut line_nos: Vec<usize> = Vec::new();
    let flush = |tags: &mut Vec<Tag>, line_nos: &mut Vec<usize>, report: &mut ValidationReport| {
        if let Some(i) = bio_violation(tags) {
            report.flag(
                line_nos[i],
                format!("{} does not continue an entity of the same type", tags[i]),
            );
        }
        if !tags.is_empty() {
            report.records += 1;
        }
        tags.clear();
        line_nos.clear();
    };
    for (n, line) in lines.iter().enumerate() {
        let n = n + 1;
        if line.trim().is_empty() {
            flush(&mut tags, &mut line_nos, &mut report);
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) || cols[0].is_empty() {
            report.flag(n, "expected token<TAB>tag[<TAB>UNK|-]");
            continue;
        }
        match cols[1].parse::<Tag>() {
            Ok(Tag::Unknown) if cols.len() == 3 => {
                report.flag(n, "UNK belongs in the third column")
            }
            Ok(tag) => {
                tags.push(tag);
                line_nos.push(n);
            }
            Err(e) => report.flag(n, e.to_string()),
        }
        if let Some(mark) = cols.get(2) {
            if !matches!(*mark, "UNK" | "-") {
                report.flag(n, format!("bad mark column `{mark}`"));
            } else if *mark == "UNK" && cols[1] != "O" {
                report.flag(n, "UNK mark on an entity token");
            }
        }
    }
    flush(&mut tags, &mut line_nos, &mut report);
    report
}

fn is_nil_id(s: &str) -> bool {
    s.strip_prefix("NIL")
        .is_some_and(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
}

fn check_edl(lines: &[String]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (n, line) in lines.iter().enumerate() {
        let n = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.records += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            report.flag(n, format!("expected 7 columns, found {}", cols.len()));
            continue;
        }
        for (i, name) in [(0, "doc_id"), (1, "mention_id"), (2, "surface")] {
            if cols[i].trim().is_empty() {
                report.flag(n, format!("empty {name}"));
            }
        }
        let span_ok = cols[3].split_once(':').is_some_and(|(seg, range)| {
            seg.parse::<usize>().is_ok()
                && range
                    .split_once('-')
                    .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                    .is_some_and(|(a, b)| a < b)
        });
        if !span_ok {
            report.flag(n, format!("bad span `{}`", cols[3]));
        }
        let target = cols[4];
        if target.is_empty() {
            report.flag(n, "neither a kb_id nor a NIL id");
        } else if target.starts_with("NIL") && !is_nil_id(target) {
            report.flag(n, format!("malformed NIL id `{target}`"));
        } else if target.contains('|') {
            report.flag(n, "more than one link target");
        }
        if cols[5].parse::<EntityType>().is_err() {
            report.flag(n, format!("unknown entity type `{}`", cols[5]));
        }
        if !cols[6]
            .parse::<f64>()
            .is_ok_and(|c| (0.0..=1.0).contains(&c))
        {
            report.flag(n, format!("confidence `{}` not in [0, 1]", cols[6]));
        }
    }
    report
}

fn check_frames(lines: &[String]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = std::collections::HashSet::new();
    for (n, line) in lines.iter().enumerate() {
        let n = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.records += 1;
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                report.flag(n, format!("not JSON: {e}"));
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            report.flag(n, "not a JSON object");
            continue;
        };
        let str_field = |k: &str| obj.get(k).and_then(|v| v.as_str());
        for k in ["doc_id", "type", "place_kb_id", "status", "resolution"] {
            if str_field(k).is_none() {
                report.flag(n, format!("missing or non-string `{k}`"));
            }
        }
        if obj
            .get("justification_seg")
            .and_then(|v| v.as_u64())
            .is_none()
        {
            report.flag(n, "missing or non-integer `justification_seg`");
        }
        if let Some(t) = str_field("type") {
            if t.parse::<SfType>().is_err() {
                report.flag(n, format!("unknown frame type `{t}`"));
            }
        }
        if str_field("status").is_some_and(|s| s != "current") {
            report.flag(n, "status must be `current`");
        }
        if str_field("resolution").is_some_and(|s| s != "insufficient") {
            report.flag(n, "resolution must be `insufficient`");
        }
        if obj.get("urgency").is_some_and(|u| !u.is_boolean()) {
            report.flag(n, "urgency must be a boolean");
        }
        if let (Some(d), Some(t)) = (str_field("doc_id"), str_field("type")) {
            if !seen.insert((d.to_string(), t.to_string())) {
                report.flag(n, format!("second frame of type `{t}` for document `{d}`"));
            }
        }
    }
    report
}
