//! Gazetteer construction and label propagation.
//!
//! A gazetteer maps token sequences to entity types. Every raw surface is
//! stored twice: under its original tokenization and under a normalized
//! key (special characters stripped, Latin script lowercased), so text
//! written either way matches.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use unicode_normalization::char::is_combining_mark;

use crate::corpus::{is_capitalized, tokenize_surfaces};
use crate::edit_distance::levenshtein_chars;
use crate::error::{Error, Result};
use crate::io::{read_lines, read_tsv};
use crate::tags::{majority_type, write_span, EntityType, Tag, TagSequence, TaggedSentence};

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c as u32, 0x00C0..=0x024F | 0x1E00..=0x1EFF | 0x2C60..=0x2C7F | 0xA720..=0xA7FF)
}

/// Strips everything but letters, digits and combining marks, and
/// lowercases the result when all of its letters are Latin.
pub fn normalize_token(token: &str) -> String {
    let kept: String = token
        .chars()
        .filter(|&c| c.is_alphanumeric() || is_combining_mark(c))
        .collect();
    if kept
        .chars()
        .filter(|c| c.is_alphabetic())
        .all(is_latin_letter)
    {
        kept.to_lowercase()
    } else {
        kept
    }
}

/// Normalized key of a surface: per-token normalization with tokens that
/// normalize to nothing dropped.
pub fn normalize_key<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| normalize_token(t.as_ref()))
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEntry {
    pub surface: String,
    pub entity_type: EntityType,
    pub kb_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub entity_type: EntityType,
    pub kb_id: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    /// Normalized keys.
    entries: HashMap<Vec<String>, GazetteerEntry>,
    /// Original tokenizations of the raw surfaces.
    surface_keys: HashMap<Vec<String>, GazetteerEntry>,
    negatives: HashSet<String>,
    max_len: usize,
}

#[derive(Default)]
struct Votes {
    counts: BTreeMap<EntityType, usize>,
    kb_ids: BTreeMap<EntityType, String>,
}

impl Votes {
    fn add(&mut self, ty: EntityType, kb_id: Option<&String>) {
        *self.counts.entry(ty).or_default() += 1;
        if let Some(id) = kb_id {
            self.kb_ids.entry(ty).or_insert_with(|| id.clone());
        }
    }

    fn resolve(&self) -> GazetteerEntry {
        let counts: Vec<(EntityType, usize)> = self.counts.iter().map(|(t, c)| (*t, *c)).collect();
        let entity_type = majority_type(&counts).expect("at least one vote");
        GazetteerEntry {
            entity_type,
            kb_id: self.kb_ids.get(&entity_type).cloned(),
        }
    }
}

/// Builds a gazetteer from raw surfaces. Conflicting types for one key are
/// settled by majority, then by PER > GPE > LOC > ORG. Single-word keys in
/// `negatives` are left out.
pub fn normalize_gazetteer<S: AsRef<str>>(raw: &[RawEntry], negatives: &[S]) -> Gazetteer {
    let negatives: HashSet<String> = negatives
        .iter()
        .map(|n| normalize_token(n.as_ref()))
        .filter(|n| !n.is_empty())
        .collect();
    let mut normalized: HashMap<Vec<String>, Votes> = HashMap::new();
    let mut original: HashMap<Vec<String>, Votes> = HashMap::new();
    for entry in raw {
        let tokens = tokenize_surfaces(&entry.surface);
        if tokens.is_empty() {
            continue;
        }
        let key = normalize_key(&tokens);
        if !key.is_empty() {
            normalized
                .entry(key)
                .or_default()
                .add(entry.entity_type, entry.kb_id.as_ref());
        }
        original
            .entry(tokens)
            .or_default()
            .add(entry.entity_type, entry.kb_id.as_ref());
    }
    let blocked =
        |key: &Vec<String>| key.len() == 1 && negatives.contains(&normalize_token(&key[0]));
    let entries: HashMap<_, _> = normalized
        .into_iter()
        .filter(|(k, _)| !blocked(k))
        .map(|(k, v)| (k, v.resolve()))
        .collect();
    let surface_keys: HashMap<_, _> = original
        .into_iter()
        .filter(|(k, _)| !blocked(k))
        .map(|(k, v)| (k, v.resolve()))
        .collect();
    let max_len = entries
        .keys()
        .chain(surface_keys.keys())
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    Gazetteer {
        entries,
        surface_keys,
        negatives,
        max_len,
    }
}

impl Gazetteer {
    /// Loads `surface<TAB>TYPE<TAB>kb_id?` rows and an optional file of
    /// negative words, one per line.
    pub fn load(path: &Path, negatives: Option<&Path>) -> Result<Self> {
        let raw = load_raw_entries(path)?;
        let negatives = match negatives {
            Some(p) => read_lines(p)?,
            None => Vec::new(),
        };
        Ok(normalize_gazetteer(&raw, &negatives))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.surface_keys.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_key_len(&self) -> usize {
        self.max_len
    }

    pub fn negatives(&self) -> &HashSet<String> {
        &self.negatives
    }

    pub fn is_negative(&self, word: &str) -> bool {
        self.negatives.contains(&normalize_token(word))
    }

    /// Looks up a normalized key.
    pub fn get(&self, key: &[String]) -> Option<&GazetteerEntry> {
        self.entries.get(key)
    }

    /// Normalized keys with their entries.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, &GazetteerEntry)> {
        self.entries.iter()
    }

    /// Entry for a span of text tokens, matching either the original
    /// tokenization or the per-token normalized form. Single tokens in the
    /// negative set never match.
    pub fn lookup<S: AsRef<str>>(&self, span: &[S]) -> Option<&GazetteerEntry> {
        if span.is_empty() {
            return None;
        }
        let norm: Vec<String> = span.iter().map(|t| normalize_token(t.as_ref())).collect();
        if span.len() == 1 && self.negatives.contains(&norm[0]) {
            return None;
        }
        if norm.iter().all(|t| !t.is_empty()) {
            if let Some(e) = self.entries.get(&norm) {
                return Some(e);
            }
        }
        let raw: Vec<String> = span.iter().map(|t| t.as_ref().to_string()).collect();
        self.surface_keys.get(&raw)
    }

    /// Adds entries that do not already exist (e.g. from edit-distance
    /// propagation). Negative words are skipped.
    pub fn extend_provisional(&mut self, extra: impl IntoIterator<Item = (String, EntityType)>) {
        for (word, ty) in extra {
            let key = vec![normalize_token(&word)];
            if key[0].is_empty() || self.negatives.contains(&key[0]) {
                continue;
            }
            self.entries.entry(key).or_insert(GazetteerEntry {
                entity_type: ty,
                kb_id: None,
            });
            self.max_len = self.max_len.max(1);
        }
    }
}

pub fn load_raw_entries(path: &Path) -> Result<Vec<RawEntry>> {
    read_tsv(path)?
        .into_iter()
        .map(|(line, cols)| {
            if cols.len() < 2 {
                return Err(Error::parse(
                    path.display().to_string(),
                    line,
                    "expected surface<TAB>TYPE[<TAB>kb_id]",
                ));
            }
            let entity_type = cols[1].parse().map_err(|e: Error| {
                Error::parse(path.display().to_string(), line, e.to_string())
            })?;
            Ok(RawEntry {
                surface: cols[0].trim().to_string(),
                entity_type,
                kb_id: cols
                    .get(2)
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty()),
            })
        })
        .collect()
}

/// Per-word capitalization counts over a monolingual corpus.
#[derive(Debug, Clone, Default)]
pub struct CapStats {
    counts: HashMap<String, (u64, u64)>,
}

impl CapStats {
    /// Counts are keyed by the lowercased word; tokens without letters are
    /// ignored.
    pub fn from_corpus<I, S, T>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[T]>,
        T: AsRef<str>,
    {
        let mut stats = CapStats::default();
        for sentence in sentences {
            for tok in sentence.as_ref() {
                stats.observe(tok.as_ref());
            }
        }
        stats
    }

    pub fn observe(&mut self, token: &str) {
        if !token.chars().any(char::is_alphabetic) {
            return;
        }
        let entry = self.counts.entry(token.to_lowercase()).or_default();
        entry.1 += 1;
        if is_capitalized(token) {
            entry.0 += 1;
        }
    }

    /// (capitalized, total) for a word; (0, 0) when unseen.
    pub fn counts(&self, word: &str) -> (u64, u64) {
        self.counts
            .get(&word.to_lowercase())
            .copied()
            .unwrap_or((0, 0))
    }

    pub fn ratio(&self, word: &str) -> f64 {
        let (c, n) = self.counts(word);
        cap_ratio(c, n)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Smoothed capitalization ratio `(c + 0.5) / (n + 1)`.
pub fn cap_ratio(n_capitalized: u64, n_total: u64) -> f64 {
    (n_capitalized as f64 + 0.5) / (n_total as f64 + 1.0)
}

pub fn cap_bucket(ratio: f64, n_buckets: usize) -> usize {
    assert!(n_buckets >= 2, "need at least two buckets");
    ((ratio * n_buckets as f64).floor().max(0.0) as usize).min(n_buckets - 1)
}

/// Words most often capitalized, for review as non-entities: ratio
/// descending, then frequency descending, then lexicographic.
pub fn negative_candidates(stats: &CapStats, top_k: usize) -> Vec<String> {
    let mut words: Vec<(&String, f64, u64)> = stats
        .counts
        .iter()
        .map(|(w, &(c, n))| (w, cap_ratio(c, n), n))
        .collect();
    words.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(b.2.cmp(&a.2))
            .then_with(|| a.0.cmp(b.0))
    });
    words
        .into_iter()
        .take(top_k)
        .map(|(w, _, _)| w.clone())
        .collect()
}

/// Greedy left-to-right tagging: at each position the longest span (up to
/// `window` tokens) found in the gazetteer is tagged and skipped over;
/// otherwise the token is `O`.
pub fn propagate_gazetteer<S: AsRef<str>>(
    tokens: &[S],
    gaz: &Gazetteer,
    window: usize,
) -> TagSequence {
    let mut tags = vec![Tag::Outside; tokens.len()];
    let window = window.max(1);
    let mut i = 0;
    while i < tokens.len() {
        let longest = window.min(tokens.len() - i);
        let hit = (1..=longest).rev().find_map(|len| {
            gaz.lookup(&tokens[i..i + len])
                .map(|e| (len, e.entity_type))
        });
        match hit {
            Some((len, ty)) => {
                write_span(&mut tags, i, i + len, ty);
                i += len;
            }
            None => i += 1,
        }
    }
    tags
}

/// Marks every `O` token that is capitalized and not a negative word as `UNK`.
pub fn mark_unknown_capitalized<S: AsRef<str>>(
    tags: &[Tag],
    tokens: &[S],
    negatives: &HashSet<String>,
) -> TagSequence {
    tags.iter()
        .zip(tokens)
        .map(|(&tag, tok)| {
            let tok = tok.as_ref();
            if tag == Tag::Outside
                && is_capitalized(tok)
                && !negatives.contains(&normalize_token(tok))
            {
                Tag::Unknown
            } else {
                tag
            }
        })
        .collect()
}

/// New single-word entries for vocabulary words that lie within
/// `min_edit_dist - 1` edits of single-word gazetteer keys, typed by
/// majority vote of those neighbors. Sorted by word.
pub fn propagate_edit_distance<I, S>(
    vocabulary: I,
    gaz: &Gazetteer,
    min_edit_dist: usize,
) -> Vec<(String, EntityType)>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let min_edit_dist = min_edit_dist.max(1);
    let keys: Vec<(Vec<char>, EntityType)> = gaz
        .entries
        .iter()
        .filter(|(k, _)| k.len() == 1)
        .map(|(k, e)| (k[0].chars().collect(), e.entity_type))
        .collect();
    let words: std::collections::BTreeSet<String> = vocabulary
        .into_iter()
        .map(|w| normalize_token(w.as_ref()))
        .filter(|w| !w.is_empty())
        .collect();
    let mut out = Vec::new();
    for word in words {
        if gaz.entries.contains_key(std::slice::from_ref(&word)) || gaz.negatives.contains(&word) {
            continue;
        }
        let chars: Vec<char> = word.chars().collect();
        let mut votes: BTreeMap<EntityType, usize> = BTreeMap::new();
        for (key, ty) in &keys {
            if key.len().abs_diff(chars.len()) >= min_edit_dist {
                continue;
            }
            if levenshtein_chars(&chars, key) < min_edit_dist {
                *votes.entry(*ty).or_default() += 1;
            }
        }
        let counts: Vec<(EntityType, usize)> = votes.into_iter().collect();
        if let Some(ty) = majority_type(&counts) {
            out.push((word, ty));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedDocument {
    pub doc_id: String,
    pub sentences: Vec<TaggedSentence>,
}

/// How a surface seen with several types picks the one to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceVote {
    /// Most frequent type, ties by PER > GPE > LOC > ORG.
    #[default]
    Majority,
    /// Type of the first span in document order.
    FirstSeen,
}

#[derive(Default)]
struct SurfaceTypes {
    counts: BTreeMap<EntityType, usize>,
    first: Option<EntityType>,
}

type TypeCounts = HashMap<Vec<String>, SurfaceTypes>;

fn per_token_key<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens.iter().map(|t| normalize_token(t.as_ref())).collect()
}

fn untagged(tag: Tag) -> bool {
    matches!(tag, Tag::Outside | Tag::Unknown)
}

fn count_spans(sentences: &[TaggedSentence], into: &mut TypeCounts) {
    for s in sentences {
        for (start, end, ty) in crate::tags::spans(&s.tags) {
            let key = per_token_key(&s.tokens[start..end]);
            if key.iter().any(String::is_empty) {
                continue;
            }
            let slot = into.entry(key).or_default();
            *slot.counts.entry(ty).or_default() += 1;
            slot.first.get_or_insert(ty);
        }
    }
}

fn resolve_counts(
    counts: &TypeCounts,
    vote: SurfaceVote,
) -> (HashMap<Vec<String>, EntityType>, usize) {
    let mut max_len = 0;
    let resolved = counts
        .iter()
        .filter_map(|(k, c)| {
            max_len = max_len.max(k.len());
            let ty = match vote {
                SurfaceVote::Majority => {
                    let counts: Vec<(EntityType, usize)> =
                        c.counts.iter().map(|(t, n)| (*t, *n)).collect();
                    majority_type(&counts)
                }
                SurfaceVote::FirstSeen => c.first,
            };
            ty.map(|t| (k.clone(), t))
        })
        .collect();
    (resolved, max_len)
}

fn apply_surfaces(
    sentence: &mut TaggedSentence,
    surfaces: &HashMap<Vec<String>, EntityType>,
    max_len: usize,
) {
    let norm = per_token_key(&sentence.tokens);
    for len in (1..=max_len.min(norm.len())).rev() {
        let mut i = 0;
        while i + len <= norm.len() {
            if sentence.tags[i..i + len].iter().all(|&t| untagged(t)) {
                if let Some(&ty) = surfaces.get(&norm[i..i + len]) {
                    write_span(&mut sentence.tags, i, i + len, ty);
                    i += len;
                    continue;
                }
            }
            i += 1;
        }
    }
}

/// Within- and across-document label propagation. Each predicted span's
/// normalized surface is re-tagged wherever it occurs untagged: first with
/// the majority type inside its own document, then with the corpus-wide
/// majority. Existing entity tags are never overwritten and longer surfaces
/// are applied before shorter ones.
pub fn propagate_documents(docs: &[TaggedDocument]) -> Vec<TaggedDocument> {
    propagate_documents_with(docs, SurfaceVote::Majority)
}

/// [`propagate_documents`] with a choice of how conflicting types are settled.
pub fn propagate_documents_with(docs: &[TaggedDocument], vote: SurfaceVote) -> Vec<TaggedDocument> {
    let mut corpus_counts = TypeCounts::new();
    for d in docs {
        count_spans(&d.sentences, &mut corpus_counts);
    }
    let (corpus_surfaces, corpus_max) = resolve_counts(&corpus_counts, vote);

    docs.iter()
        .map(|d| {
            let mut doc_counts = TypeCounts::new();
            count_spans(&d.sentences, &mut doc_counts);
            let (doc_surfaces, doc_max) = resolve_counts(&doc_counts, vote);
            let mut out = d.clone();
            for s in &mut out.sentences {
                apply_surfaces(s, &doc_surfaces, doc_max);
            }
            for s in &mut out.sentences {
                apply_surfaces(s, &corpus_surfaces, corpus_max);
            }
            out
        })
        .collect()
}

/// Lowercased knowledge-base names for exact matching, plus the same names
/// with spaces removed for hashtag matching.
#[derive(Debug, Clone, Default)]
pub struct KbNameIndex {
    names: HashMap<String, EntityType>,
    compact: HashMap<String, EntityType>,
    max_words: usize,
}

impl KbNameIndex {
    /// Name conflicts are settled by majority type, then priority.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = (S, EntityType)>,
        S: AsRef<str>,
    {
        let mut votes: HashMap<String, BTreeMap<EntityType, usize>> = HashMap::new();
        for (name, ty) in names {
            let key = name
                .as_ref()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_lowercase();
            if !key.is_empty() {
                *votes.entry(key).or_default().entry(ty).or_default() += 1;
            }
        }
        let mut compact_votes: HashMap<String, BTreeMap<EntityType, usize>> = HashMap::new();
        for (key, v) in &votes {
            let c = compact_votes.entry(key.replace(' ', "")).or_default();
            for (t, n) in v {
                *c.entry(*t).or_default() += n;
            }
        }
        let resolve =
            |m: HashMap<String, BTreeMap<EntityType, usize>>| -> HashMap<String, EntityType> {
                m.into_iter()
                    .filter_map(|(k, v)| {
                        let counts: Vec<_> = v.into_iter().collect();
                        majority_type(&counts).map(|t| (k, t))
                    })
                    .collect()
            };
        let max_words = votes
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0);
        KbNameIndex {
            names: resolve(votes),
            compact: resolve(compact_votes),
            max_words,
        }
    }

    pub fn get(&self, lowered: &str) -> Option<EntityType> {
        self.names.get(lowered).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Lowercased exact matching of token n-grams (longest first, leftmost
/// first within a length) against knowledge-base names. N-grams containing
/// a stopword are skipped, spans never overlap, and `#hashtag` tokens are
/// matched on their text without `#` against names with spaces removed.
pub fn kb_exact_match<S: AsRef<str>>(
    tokens: &[S],
    index: &KbNameIndex,
    stopwords: &HashSet<String>,
    n_max: usize,
) -> TagSequence {
    let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut tags = vec![Tag::Outside; tokens.len()];
    let n_max = n_max.min(index.max_words.max(1));
    for len in (1..=n_max.min(lowered.len())).rev() {
        for start in 0..=lowered.len() - len {
            let window = &lowered[start..start + len];
            if tags[start..start + len].iter().any(|t| t.is_entity()) {
                continue;
            }
            if window.iter().any(|t| stopwords.contains(t)) {
                continue;
            }
            let hit = if len == 1 && window[0].len() > 1 && window[0].starts_with('#') {
                index.compact.get(&window[0][1..]).copied()
            } else if window.iter().any(|t| t.starts_with('#') && t.len() > 1) {
                None
            } else {
                index.get(&window.join(" "))
            };
            if let Some(ty) = hit {
                write_span(&mut tags, start, start + len, ty);
            }
        }
    }
    tags
}
