//! Rule-table grapheme-to-phoneme conversion with backoff across tables,
//! and re-romanization of the phonemic output.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Longest-match rewrite rules. Among rules with the same left-hand side the
/// first one in file order applies.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    pub id: String,
    rules: Vec<(String, String)>,
    /// First character -> indices of rules starting with it, longest
    /// left-hand side first, then file order.
    index: HashMap<char, Vec<usize>>,
}

const BUILTIN: [(&str, &str); 3] = [
    ("eng-Latn", include_str!("../data/eng-Latn.csv")),
    ("sin-Sinh", include_str!("../data/sin-Sinh.csv")),
    ("roman", include_str!("../data/roman.csv")),
];

impl RuleTable {
    pub fn new<I, A, B>(id: impl Into<String>, rules: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let rules: Vec<(String, String)> = rules
            .into_iter()
            .map(|(a, b)| (a.into(), b.into()))
            .collect();
        let mut index: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, (lhs, _)) in rules.iter().enumerate() {
            let first = lhs.chars().next().ok_or_else(|| {
                Error::InvalidArgument(format!("rule {} has an empty left-hand side", i + 1))
            })?;
            index.entry(first).or_default().push(i);
        }
        for list in index.values_mut() {
            list.sort_by_key(|&i| (std::cmp::Reverse(rules[i].0.chars().count()), i));
        }
        Ok(RuleTable {
            id: id.into(),
            rules,
            index,
        })
    }

    /// Parses `lhs,rhs` CSV; a leading `lhs,rhs` header is skipped.
    pub fn parse_csv(id: impl Into<String>, text: &str, origin: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rules = Vec::new();
        for (n, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(origin, n + 1, e.to_string()))?;
            if rec.len() == 1 && rec[0].trim().is_empty() {
                continue;
            }
            if rec.len() != 2 {
                return Err(Error::parse(origin, n + 1, "expected lhs,rhs"));
            }
            if n == 0 && &rec[0] == "lhs" && &rec[1] == "rhs" {
                continue;
            }
            if rec[0].is_empty() {
                return Err(Error::parse(origin, n + 1, "empty left-hand side"));
            }
            rules.push((rec[0].to_string(), rec[1].to_string()));
        }
        RuleTable::new(id, rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        RuleTable::parse_csv(id, &text, &path.display().to_string())
    }

    /// One of the shipped tables: `eng-Latn`, `sin-Sinh` or `roman`.
    pub fn builtin(id: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(name, _)| *name == id)
            .map(|(name, text)| {
                RuleTable::parse_csv(*name, text, name).expect("shipped tables parse")
            })
    }

    /// A shipped table by id, or else a CSV file at that path.
    pub fn resolve(spec: &str) -> Result<Self> {
        match RuleTable::builtin(spec) {
            Some(t) => Ok(t),
            None => RuleTable::load(Path::new(spec)),
        }
    }

    pub fn rules(&self) -> &[(String, String)] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The table read right to left. Rules with an empty right-hand side
    /// cannot be inverted and are skipped.
    pub fn inverted(&self) -> Self {
        RuleTable::new(
            format!("{}-inv", self.id),
            self.rules
                .iter()
                .filter(|(_, r)| !r.is_empty())
                .map(|(l, r)| (r.clone(), l.clone())),
        )
        .expect("non-empty sides")
    }

    /// Rule matching at the start of `rest`.
    fn match_at(&self, rest: &str) -> Option<&(String, String)> {
        let first = rest.chars().next()?;
        self.index
            .get(&first)?
            .iter()
            .map(|&i| &self.rules[i])
            .find(|(lhs, _)| rest.starts_with(lhs.as_str()))
    }
}

enum Piece<'a> {
    /// Matched input and its replacement.
    Mapped(&'a str, &'a str),
    Raw(&'a str),
}

fn scan<'t, 's>(token: &'s str, table: &'t RuleTable) -> Vec<Piece<'t>>
where
    's: 't,
{
    let mut pieces = Vec::new();
    let mut pos = 0;
    let mut raw_start = None;
    while pos < token.len() {
        match table.match_at(&token[pos..]) {
            Some((lhs, rhs)) => {
                if let Some(s) = raw_start.take() {
                    pieces.push(Piece::Raw(&token[s..pos]));
                }
                pieces.push(Piece::Mapped(lhs, rhs));
                pos += lhs.len();
            }
            None => {
                raw_start.get_or_insert(pos);
                pos += token[pos..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    if let Some(s) = raw_start {
        pieces.push(Piece::Raw(&token[s..]));
    }
    pieces
}

/// Greedy longest-match conversion. Characters no rule covers are copied
/// through and flagged `false` in the returned per-character mask.
pub fn g2p_apply(token: &str, table: &RuleTable) -> (String, Vec<bool>) {
    let mut out = String::new();
    let mut mask = Vec::with_capacity(token.len());
    for piece in scan(token, table) {
        let (text, consumed) = match piece {
            Piece::Mapped(lhs, rhs) => (rhs, lhs),
            Piece::Raw(raw) => (raw, raw),
        };
        out.push_str(text);
        let flag = matches!(piece, Piece::Mapped(..));
        mask.extend(consumed.chars().map(|_| flag));
    }
    (out, mask)
}

/// Converts with the first table; whatever it leaves unconsumed is retried
/// with the next table, and so on. Characters no table covers pass through.
pub fn g2p_backoff(token: &str, chain: &[RuleTable]) -> String {
    let Some((first, rest)) = chain.split_first() else {
        return token.to_string();
    };
    let mut out = String::new();
    for piece in scan(token, first) {
        match piece {
            Piece::Mapped(_, rhs) => out.push_str(rhs),
            Piece::Raw(raw) => out.push_str(&g2p_backoff(raw, rest)),
        }
    }
    out
}

/// Maps phonemic text to a familiar romanization with a table whose
/// left-hand sides are phonemes; unmapped symbols pass through.
pub fn reromanize(ipa: &str, roman_table: &RuleTable) -> String {
    g2p_apply(ipa, roman_table).0
}

/// Resolves a comma-separated chain like `sin-Sinh,eng-Latn`.
pub fn load_chain(spec: &str) -> Result<Vec<RuleTable>> {
    let chain: Vec<RuleTable> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(RuleTable::resolve)
        .collect::<Result<_>>()?;
    if chain.is_empty() {
        return Err(Error::InvalidArgument("empty transliteration chain".into()));
    }
    Ok(chain)
}
