//! Documents, segments and tokens, plus the tokenizer and n-gram windows
//! shared by every other module.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::io::open_reader;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Genre {
    #[serde(rename = "NW")]
    Newswire,
    #[serde(rename = "SN")]
    SocialNetwork,
    #[serde(rename = "WL")]
    Weblog,
    #[serde(rename = "OTHER")]
    Other,
}

impl Genre {
    pub const ALL: [Genre; 4] = [
        Genre::Newswire,
        Genre::SocialNetwork,
        Genre::Weblog,
        Genre::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::Newswire => "NW",
            Genre::SocialNetwork => "SN",
            Genre::Weblog => "WL",
            Genre::Other => "OTHER",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NW" => Ok(Genre::Newswire),
            "SN" => Ok(Genre::SocialNetwork),
            "WL" => Ok(Genre::Weblog),
            "OTHER" | "" => Ok(Genre::Other),
            other => Err(Error::InvalidArgument(format!("unknown genre `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub is_capitalized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub seg_id: usize,
    pub raw: String,
    pub tokens: Vec<Token>,
}

impl Segment {
    pub fn new(seg_id: usize, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        Segment {
            seg_id,
            raw,
            tokens,
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn owned_surfaces(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub genre: Genre,
    pub segments: Vec<Segment>,
}

impl Document {
    /// Builds a document from raw segment strings. Text is NFC-normalized
    /// and segments are numbered from 0.
    pub fn from_raw<S: AsRef<str>>(
        doc_id: impl Into<String>,
        genre: Genre,
        raw: &[S],
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        if doc_id.is_empty() {
            return Err(Error::InvalidArgument("empty doc_id".into()));
        }
        let segments = raw
            .iter()
            .enumerate()
            .map(|(i, s)| Segment::new(i, s.as_ref().nfc().collect::<String>()))
            .collect();
        Ok(Document {
            doc_id,
            genre,
            segments,
        })
    }
}

#[derive(Debug, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    #[serde(default)]
    genre: Option<String>,
    segments: Vec<String>,
}

/// Reads a JSON-lines corpus. Duplicate doc ids are rejected.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let reader = open_reader(path)?;
    let name = path.display().to_string();
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&name, n + 1, e.to_string()))?;
        let genre = match rec.genre.as_deref() {
            Some(g) => g
                .parse()
                .map_err(|e: Error| Error::parse(&name, n + 1, e.to_string()))?,
            None => Genre::Other,
        };
        if !seen.insert(rec.doc_id.clone()) {
            return Err(Error::parse(
                &name,
                n + 1,
                format!("duplicate doc_id `{}`", rec.doc_id),
            ));
        }
        let doc = Document::from_raw(rec.doc_id, genre, &rec.segments)
            .map_err(|e| Error::parse(&name, n + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c) || c == '\u{200C}' || c == '\u{200D}'
}

fn is_mention_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || is_combining_mark(c)
}

fn is_url_trailing_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']' | '}' | '"' | '\''
    )
}

/// Byte length of a URL starting at the beginning of `s`, if any.
fn match_url(s: &str) -> Option<usize> {
    let body_start = if s.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("www.")) {
        4
    } else {
        let scheme = s.bytes().take_while(|b| b.is_ascii_alphabetic()).count();
        if scheme == 0 || !s[scheme..].starts_with("://") {
            return None;
        }
        scheme + 3
    };
    let body = s[body_start..]
        .find(char::is_whitespace)
        .unwrap_or(s.len() - body_start);
    let mut end = body_start + body;
    while end > body_start {
        let c = s[..end].chars().next_back().unwrap();
        if is_url_trailing_punct(c) {
            end -= c.len_utf8();
        } else {
            break;
        }
    }
    (end > body_start).then_some(end)
}

fn match_email(s: &str) -> Option<usize> {
    let local = s
        .char_indices()
        .take_while(|&(_, c)| c.is_alphanumeric() || matches!(c, '.' | '_' | '%' | '+' | '-'))
        .last()
        .map(|(i, c)| i + c.len_utf8())?;
    if !s[local..].starts_with('@') {
        return None;
    }
    let domain_start = local + 1;
    let mut end = domain_start
        + s[domain_start..]
            .char_indices()
            .take_while(|&(_, c)| c.is_alphanumeric() || c == '.' || c == '-')
            .last()
            .map(|(i, c)| i + c.len_utf8())?;
    while s[..end].ends_with(['.', '-']) {
        end -= 1;
    }
    let domain = &s[domain_start..end];
    let dot = domain.find('.')?;
    (dot > 0 && dot + 1 < domain.len()).then_some(end)
}

/// `@mention` or `#hashtag`.
fn match_prefixed(s: &str) -> Option<usize> {
    let mut chars = s.chars();
    let first = chars.next()?;
    if first != '@' && first != '#' {
        return None;
    }
    let body: usize = chars
        .take_while(|&c| is_mention_char(c))
        .map(char::len_utf8)
        .sum();
    (body > 0).then_some(1 + body)
}

/// Length of a special (do-not-split) token at the start of `s`.
fn match_special(s: &str) -> Option<usize> {
    match_url(s)
        .or_else(|| match_email(s))
        .or_else(|| match_prefixed(s))
}

/// True when the whole string is a URL, email, @mention or #hashtag.
pub fn is_special_token(s: &str) -> bool {
    match_special(s) == Some(s.len())
}

pub fn is_capitalized(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

/// Splits text into maximal letter/digit runs and single punctuation or
/// symbol characters. URLs, emails, @mentions and #hashtags stay whole.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        let len = match_special(rest).unwrap_or_else(|| {
            if is_word_char(c) {
                rest.char_indices()
                    .find(|&(_, ch)| !is_word_char(ch))
                    .map_or(rest.len(), |(i, _)| i)
            } else {
                c.len_utf8()
            }
        });
        let surface = &rest[..len];
        tokens.push(Token {
            surface: surface.to_string(),
            start: pos,
            end: pos + len,
            is_capitalized: is_capitalized(surface),
        });
        pos += len;
    }
    tokens
}

pub fn tokenize_surfaces(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.surface).collect()
}

/// All contiguous windows of length `1..=n_max`, ordered by start then length.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], n_max: usize) -> Vec<(Vec<String>, usize)> {
    let mut out = Vec::new();
    for start in 0..tokens.len() {
        let longest = n_max.min(tokens.len() - start);
        for len in 1..=longest {
            let gram = tokens[start..start + len]
                .iter()
                .map(|t| t.as_ref().to_string())
                .collect();
            out.push((gram, start));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize_surfaces(text)
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(surfaces("Kigali, Rwanda"), ["Kigali", ",", "Rwanda"]);
        assert_eq!(
            surfaces("see http://a.b #help"),
            ["see", "http://a.b", "#help"]
        );
    }

    #[test]
    fn special_tokens() {
        assert_eq!(
            surfaces("mail me@x.org or @bob_1, www.rw.gov."),
            ["mail", "me@x.org", "or", "@bob_1", ",", "www.rw.gov", "."]
        );
        assert_eq!(surfaces("foo@bar"), ["foo", "@bar"]);
        assert_eq!(surfaces("# alone"), ["#", "alone"]);
        assert!(is_special_token("https://example.com/a?b=c"));
        assert!(!is_special_token("example"));
    }

    #[test]
    fn mixed_letters_digits_and_marks() {
        assert_eq!(surfaces("abc123 x-y"), ["abc123", "x", "-", "y"]);
        // Sinhala word with vowel sign and virama stays whole.
        assert_eq!(surfaces("ශ්‍රී ලංකා"), ["ශ්‍රී", "ලංකා"]);
    }

    #[test]
    fn capitalization() {
        let toks = tokenize("Flood hits ලංකා");
        assert!(toks[0].is_capitalized);
        assert!(!toks[1].is_capitalized);
        assert!(!toks[2].is_capitalized);
    }

    #[test]
    fn document_load_normalizes_to_nfc() {
        let doc = Document::from_raw("d", Genre::Other, &["Cafe\u{301}"]).unwrap();
        assert_eq!(doc.segments[0].raw, "Caf\u{e9}");
        assert!(Document::from_raw("", Genre::Other, &["x"]).is_err());
    }

    #[test]
    fn ngram_examples() {
        assert_eq!(extract_ngrams(&["a"], 2), vec![(vec!["a".to_string()], 0)]);
        assert_eq!(
            extract_ngrams(&["a", "b"], 2),
            vec![
                (vec!["a".to_string()], 0),
                (vec!["a".to_string(), "b".to_string()], 0),
                (vec!["b".to_string()], 1)
            ]
        );
        assert!(extract_ngrams::<&str>(&[], 4).is_empty());
    }

    proptest! {
        #[test]
        fn round_trip_reconstructs_input(text in "\\PC{0,40}") {
            let toks = tokenize(&text);
            let mut rebuilt = String::new();
            let mut last = 0;
            for t in &toks {
                prop_assert!(t.start < t.end && t.end <= text.len());
                prop_assert_eq!(&text[t.start..t.end], t.surface.as_str());
                let gap = &text[last..t.start];
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(gap);
                rebuilt.push_str(&t.surface);
                last = t.end;
            }
            prop_assert!(text[last..].chars().all(char::is_whitespace));
            rebuilt.push_str(&text[last..]);
            prop_assert_eq!(rebuilt, text);
        }

        #[test]
        fn idempotent_on_space_joined_tokens(text in "[a-zA-Z0-9 ,.#@:/]{0,40}") {
            let first = tokenize_surfaces(&text);
            let again = tokenize_surfaces(&first.join(" "));
            prop_assert_eq!(first, again);
        }

        #[test]
        fn ngram_count(len in 0usize..12, n_max in 1usize..6) {
            let toks: Vec<String> = (0..len).map(|i| i.to_string()).collect();
            let expected: usize = (1..=n_max.min(len)).map(|n| len - n + 1).sum();
            prop_assert_eq!(extract_ngrams(&toks, n_max).len(), expected);
        }
    }
}
