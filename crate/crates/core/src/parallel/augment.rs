use std::collections::HashMap;
use std::ops::Range;

use super::SentencePair;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::rng::SplitMix64;

/// Token ranges of one entity on the source and target side of a pair.
pub type SpanPair = (Range<usize>, Range<usize>);

fn check_spans(spans: &[Range<usize>], len: usize) -> Result<()> {
    let mut sorted: Vec<&Range<usize>> = spans.iter().collect();
    sorted.sort_by_key(|r| r.start);
    let mut last_end = 0;
    for r in sorted {
        if r.start >= r.end || r.end > len || r.start < last_end {
            return Err(Error::InvalidSpan {
                start: r.start,
                end: r.end,
                len,
            });
        }
        last_end = r.end;
    }
    Ok(())
}

fn replace_spans(tokens: &[String], spans: &[(Range<usize>, &[String])]) -> Vec<String> {
    let mut sorted: Vec<_> = spans.iter().collect();
    sorted.sort_by_key(|(r, _)| r.start);
    let mut out = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    for (r, replacement) in sorted {
        out.extend_from_slice(&tokens[pos..r.start]);
        out.extend_from_slice(replacement);
        pos = r.end;
    }
    out.extend_from_slice(&tokens[pos..]);
    out
}

/// Appends `n_copies` synthetic variants of every pair in which each marked
/// entity span is replaced, on both sides, by an entity pair sampled from
/// the lexicon (source key and its top translation). Originals come first,
/// followed by the copies of each pair in input order.
pub fn augment_with_entities(
    pairs: &[SentencePair],
    spans: &[Vec<SpanPair>],
    entity_lexicon: &Lexicon,
    n_copies: usize,
    seed: u64,
) -> Result<Vec<SentencePair>> {
    if spans.len() != pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} span lists for {} pairs",
            spans.len(),
            pairs.len()
        )));
    }
    for (pair, marks) in pairs.iter().zip(spans) {
        let (src, tgt): (Vec<_>, Vec<_>) = marks.iter().cloned().unzip();
        check_spans(&src, pair.src.len())?;
        check_spans(&tgt, pair.tgt.len())?;
    }
    let mut out = pairs.to_vec();
    if n_copies == 0 {
        return Ok(out);
    }
    let entities: Vec<(Vec<String>, Vec<String>)> = entity_lexicon
        .iter()
        .filter_map(|(s, targets)| {
            let (t, _) = targets.first()?;
            let s: Vec<String> = s.split_whitespace().map(String::from).collect();
            let t: Vec<String> = t.split_whitespace().map(String::from).collect();
            (!s.is_empty() && !t.is_empty()).then_some((s, t))
        })
        .collect();
    if entities.is_empty() {
        return Err(Error::EmptyEntityLexicon);
    }

    let mut rng = SplitMix64::new(seed);
    for (pair, marks) in pairs.iter().zip(spans) {
        for _ in 0..n_copies {
            let mut src_repl = Vec::with_capacity(marks.len());
            let mut tgt_repl = Vec::with_capacity(marks.len());
            for (s, t) in marks {
                let (es, et) = &entities[rng.below(entities.len())];
                src_repl.push((s.clone(), es.as_slice()));
                tgt_repl.push((t.clone(), et.as_slice()));
            }
            out.push(SentencePair {
                src: replace_spans(&pair.src, &src_repl),
                tgt: replace_spans(&pair.tgt, &tgt_repl),
                origin_doc: pair.origin_doc.clone(),
                index: pair.index,
            });
        }
    }
    Ok(out)
}

/// Finds entity pairs of a lexicon in sentence pairs, for marking the spans
/// that [`augment_with_entities`] replaces. Matching ignores case.
#[derive(Debug, Clone, Default)]
pub struct EntityMatcher {
    /// Source tokens -> tokens of the top translation, lowercased.
    table: HashMap<Vec<String>, Vec<String>>,
    n_max: usize,
}

fn lower_words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

impl EntityMatcher {
    pub fn new(entity_lexicon: &Lexicon) -> Self {
        let mut table = HashMap::new();
        for (src, targets) in entity_lexicon.iter() {
            if let Some((tgt, _)) = targets.first() {
                let (s, t) = (lower_words(src), lower_words(tgt));
                if !s.is_empty() && !t.is_empty() {
                    table.entry(s).or_insert(t);
                }
            }
        }
        let n_max = table.keys().map(Vec::len).max().unwrap_or(0);
        EntityMatcher { table, n_max }
    }

    /// Source n-grams in the lexicon whose top translation occurs in the
    /// target. Longer source matches first, then leftmost; spans never
    /// overlap on either side. Sorted by source start.
    pub fn spans(&self, pair: &SentencePair) -> Vec<SpanPair> {
        let lower = |v: &[String]| v.iter().map(|t| t.to_lowercase()).collect::<Vec<_>>();
        let (src, tgt) = (lower(&pair.src), lower(&pair.tgt));
        let mut src_used = vec![false; src.len()];
        let mut tgt_used = vec![false; tgt.len()];
        let mut out = Vec::new();
        for len in (1..=self.n_max.min(src.len())).rev() {
            for i in 0..=src.len() - len {
                if src_used[i..i + len].iter().any(|&u| u) {
                    continue;
                }
                let Some(target) = self.table.get(&src[i..i + len]) else {
                    continue;
                };
                let n = target.len();
                if n > tgt.len() {
                    continue;
                }
                let free = |j: usize| !tgt_used[j..j + n].iter().any(|&u| u);
                if let Some(j) =
                    (0..=tgt.len() - n).find(|&j| free(j) && tgt[j..j + n] == target[..])
                {
                    src_used[i..i + len].fill(true);
                    tgt_used[j..j + n].fill(true);
                    out.push((i..i + len, j..j + n));
                }
            }
        }
        out.sort_by_key(|(s, _)| s.start);
        out
    }
}
