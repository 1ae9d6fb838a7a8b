//! Entity types, BIO tags and CoNLL reading/writing.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{create_writer, open_reader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "PER")]
    Person,
    #[serde(rename = "ORG")]
    Organization,
    #[serde(rename = "GPE")]
    GeoPolitical,
    #[serde(rename = "LOC")]
    Location,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Person,
        EntityType::Organization,
        EntityType::GeoPolitical,
        EntityType::Location,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Person => "PER",
            EntityType::Organization => "ORG",
            EntityType::GeoPolitical => "GPE",
            EntityType::Location => "LOC",
        }
    }

    /// Tie-break rank: PER > GPE > LOC > ORG (lower wins).
    pub fn priority(self) -> u8 {
        match self {
            EntityType::Person => 0,
            EntityType::GeoPolitical => 1,
            EntityType::Location => 2,
            EntityType::Organization => 3,
        }
    }

    pub fn is_place(self) -> bool {
        matches!(self, EntityType::GeoPolitical | EntityType::Location)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PER" => Ok(EntityType::Person),
            "ORG" => Ok(EntityType::Organization),
            "GPE" => Ok(EntityType::GeoPolitical),
            "LOC" => Ok(EntityType::Location),
            other => Err(Error::InvalidArgument(format!(
                "unknown entity type `{other}`"
            ))),
        }
    }
}

/// Picks the most frequent type; count ties go to the higher-priority type.
pub fn majority_type(counts: &[(EntityType, usize)]) -> Option<EntityType> {
    counts
        .iter()
        .filter(|(_, c)| *c > 0)
        .min_by(|a, b| b.1.cmp(&a.1).then(a.0.priority().cmp(&b.0.priority())))
        .map(|(t, _)| *t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Begin(EntityType),
    Inside(EntityType),
    /// Capitalized word outside every known entity; treated like `O` for
    /// span structure.
    Unknown,
}

impl Tag {
    pub fn is_entity(self) -> bool {
        matches!(self, Tag::Begin(_) | Tag::Inside(_))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(t) => write!(f, "B-{t}"),
            Tag::Inside(t) => write!(f, "I-{t}"),
            Tag::Unknown => f.write_str("UNK"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" => Ok(Tag::Outside),
            "UNK" => Ok(Tag::Unknown),
            _ => match s.split_once('-') {
                Some(("B", t)) => Ok(Tag::Begin(t.parse()?)),
                Some(("I", t)) => Ok(Tag::Inside(t.parse()?)),
                _ => Err(Error::InvalidArgument(format!("invalid tag `{s}`"))),
            },
        }
    }
}

pub type TagSequence = Vec<Tag>;

/// Index of the first tag that breaks BIO structure: an `I-X` not preceded
/// by `B-X` or `I-X`.
pub fn bio_violation(tags: &[Tag]) -> Option<usize> {
    let mut prev = Tag::Outside;
    for (i, &tag) in tags.iter().enumerate() {
        if let Tag::Inside(t) = tag {
            let continues = matches!(prev, Tag::Begin(p) | Tag::Inside(p) if p == t);
            if !continues {
                return Some(i);
            }
        }
        prev = tag;
    }
    None
}

pub fn is_valid_bio(tags: &[Tag]) -> bool {
    bio_violation(tags).is_none()
}

/// Entity spans as (start, end, type), end exclusive.
pub fn spans(tags: &[Tag]) -> Vec<(usize, usize, EntityType)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if let Tag::Begin(t) = tags[i] {
            let mut j = i + 1;
            while j < tags.len() && tags[j] == Tag::Inside(t) {
                j += 1;
            }
            out.push((i, j, t));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Writes `[start, end)` as `B-X I-X …`.
pub fn write_span(tags: &mut [Tag], start: usize, end: usize, ty: EntityType) {
    tags[start] = Tag::Begin(ty);
    for tag in &mut tags[start + 1..end] {
        *tag = Tag::Inside(ty);
    }
}

/// One tagged sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: TagSequence,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, tags: TagSequence) -> Self {
        TaggedSentence { tokens, tags }
    }
}

/// CoNLL: `token<TAB>tag`, blank line after each sentence. With
/// `unk_column`, UNK marks move to a third column (`UNK` or `-`) and the
/// tag column shows `O` for them.
pub fn write_conll(path: &Path, sentences: &[TaggedSentence], unk_column: bool) -> Result<()> {
    let mut w = create_writer(path)?;
    let io_err = |e| Error::io(path, e);
    for s in sentences {
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            if unk_column {
                let (shown, mark) = match tag {
                    Tag::Unknown => (Tag::Outside, "UNK"),
                    other => (*other, "-"),
                };
                writeln!(w, "{tok}\t{shown}\t{mark}").map_err(io_err)?;
            } else {
                writeln!(w, "{tok}\t{tag}").map_err(io_err)?;
            }
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_conll(path: &Path) -> Result<Vec<TaggedSentence>> {
    let reader = open_reader(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    let mut cur = TaggedSentence::new(Vec::new(), Vec::new());
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            if !cur.tokens.is_empty() {
                out.push(std::mem::replace(
                    &mut cur,
                    TaggedSentence::new(Vec::new(), Vec::new()),
                ));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(Error::parse(
                &name,
                n + 1,
                "expected token<TAB>tag[<TAB>UNK|-]",
            ));
        }
        let mut tag: Tag = cols[1]
            .parse()
            .map_err(|e: Error| Error::parse(&name, n + 1, e.to_string()))?;
        match cols.get(2) {
            Some(&"UNK") if tag == Tag::Outside => tag = Tag::Unknown,
            Some(&"UNK") | Some(&"-") | None => {}
            Some(other) => {
                return Err(Error::parse(
                    &name,
                    n + 1,
                    format!("bad mark column `{other}`"),
                ))
            }
        }
        cur.tokens.push(cols[0].to_string());
        cur.tags.push(tag);
    }
    if !cur.tokens.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EntityType::*;

    #[test]
    fn parse_and_display() {
        for s in ["O", "UNK", "B-GPE", "I-PER", "B-ORG", "I-LOC"] {
            assert_eq!(s.parse::<Tag>().unwrap().to_string(), s);
        }
        assert!("B-XYZ".parse::<Tag>().is_err());
        assert!("X".parse::<Tag>().is_err());
    }

    #[test]
    fn bio_validation() {
        use Tag::*;
        assert!(is_valid_bio(&[
            Outside,
            Begin(GeoPolitical),
            Inside(GeoPolitical),
            Outside
        ]));
        assert_eq!(bio_violation(&[Outside, Inside(GeoPolitical)]), Some(1));
        assert_eq!(
            bio_violation(&[Begin(Person), Inside(GeoPolitical)]),
            Some(1)
        );
        assert_eq!(bio_violation(&[Inside(Person)]), Some(0));
        assert_eq!(bio_violation(&[Unknown, Inside(Person)]), Some(1));
    }

    #[test]
    fn span_extraction() {
        use Tag::*;
        let tags = [
            Begin(Person),
            Inside(Person),
            Begin(Person),
            Outside,
            Begin(Location),
        ];
        assert_eq!(
            spans(&tags),
            vec![(0, 2, Person), (2, 3, Person), (4, 5, Location)]
        );
    }

    #[test]
    fn majority_with_priority() {
        assert_eq!(
            majority_type(&[(GeoPolitical, 2), (Location, 1)]),
            Some(GeoPolitical)
        );
        assert_eq!(
            majority_type(&[(Organization, 1), (Location, 1)]),
            Some(Location)
        );
        assert_eq!(
            majority_type(&[(Organization, 1), (Person, 1), (GeoPolitical, 1)]),
            Some(Person)
        );
        assert_eq!(majority_type(&[]), None);
    }

    #[test]
    fn conll_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.conll");
        let a = TaggedSentence::new(
            vec!["i".into(), "Kigali".into(), "Nziza".into()],
            vec![Tag::Outside, Tag::Begin(GeoPolitical), Tag::Unknown],
        );
        let b = TaggedSentence::new(vec!["ok".into()], vec![Tag::Outside]);
        for unk_column in [false, true] {
            write_conll(&path, &[a.clone(), b.clone()], unk_column).unwrap();
            assert_eq!(read_conll(&path).unwrap(), vec![a.clone(), b.clone()]);
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("i\tO\t-\nKigali\tB-GPE\t-\nNziza\tO\tUNK\n\n"));
    }
}
