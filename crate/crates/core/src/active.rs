//! Picking the sub-spans an annotator should label next.
//!
//! Token label marginals come from an external tagger. A span's
//! uncertainty is the sum of its tokens' Shannon entropies.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::io::{create_writer, open_reader};
use crate::relevance::{
    score_sentence_heuristic, select_with_genre_ratio, DfTable, GenreRatio, HeuristicContext,
    HeuristicWeights, ScoredCandidate,
};

/// Allowed deviation of a token distribution's total from 1.
pub const PROB_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDistribution {
    pub surface: String,
    pub probs: BTreeMap<String, f64>,
}

/// Label marginals for every token of one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMarginals {
    pub doc_id: String,
    pub seg_id: usize,
    pub tokens: Vec<TokenDistribution>,
}

impl SentenceMarginals {
    /// Checks that each distribution is non-negative and sums to one.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.tokens.iter().enumerate() {
            let total: f64 = t.probs.values().sum();
            if t.probs.values().any(|&p| p.is_nan() || p < 0.0)
                || (total - 1.0).abs() > PROB_TOLERANCE
            {
                return Err(Error::InvalidArgument(format!(
                    "{}/{}: token {i} is not a probability distribution (sum {total})",
                    self.doc_id, self.seg_id
                )));
            }
        }
        Ok(())
    }

    pub fn token_entropies(&self) -> Vec<f64> {
        self.tokens
            .iter()
            .map(|t| entropy(t.probs.values().copied()))
            .collect()
    }
}

/// Shannon entropy in nats; zero probabilities contribute nothing.
pub fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Summed token entropy over `[i, j)`.
pub fn span_entropy(marginals: &SentenceMarginals, i: usize, j: usize) -> Result<f64> {
    let len = marginals.tokens.len();
    if i >= j || j > len {
        return Err(Error::InvalidRange {
            start: i,
            end: j,
            len,
        });
    }
    Ok(marginals.tokens[i..j]
        .iter()
        .map(|t| entropy(t.probs.values().copied()))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanCandidate {
    pub doc_id: String,
    pub seg_id: usize,
    pub start: usize,
    pub end: usize,
    pub entropy: f64,
}

/// Best spans of one sentence: highest entropy first, ties leftmost then
/// shortest, never overlapping an earlier pick.
fn sentence_spans(
    m: &SentenceMarginals,
    max_span_len: usize,
    max_per_sentence: usize,
) -> Vec<SpanCandidate> {
    let ent = m.token_entropies();
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..ent.len() {
        for j in i + 1..=(i + max_span_len).min(ent.len()) {
            all.push((ent[i..j].iter().sum(), i, j));
        }
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut taken = vec![false; ent.len()];
    let mut out = Vec::new();
    for (e, i, j) in all {
        if out.len() == max_per_sentence {
            break;
        }
        if taken[i..j].iter().any(|&t| t) {
            continue;
        }
        taken[i..j].iter_mut().for_each(|t| *t = true);
        out.push(SpanCandidate {
            doc_id: m.doc_id.clone(),
            seg_id: m.seg_id,
            start: i,
            end: j,
            entropy: e,
        });
    }
    out
}

/// The `budget` most uncertain spans of length at most `max_span_len`, with
/// at most `max_per_sentence` non-overlapping spans per sentence. Sorted by
/// entropy descending, ties by (doc_id, seg_id, start).
pub fn select_uncertain_spans(
    corpus: &[SentenceMarginals],
    budget: usize,
    max_span_len: usize,
    max_per_sentence: usize,
) -> Vec<SpanCandidate> {
    if budget == 0 || max_span_len == 0 || max_per_sentence == 0 {
        return Vec::new();
    }
    let mut spans: Vec<SpanCandidate> = corpus
        .iter()
        .flat_map(|m| sentence_spans(m, max_span_len, max_per_sentence))
        .collect();
    spans.sort_by(|a, b| {
        b.entropy
            .total_cmp(&a.entropy)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then(a.seg_id.cmp(&b.seg_id))
            .then(a.start.cmp(&b.start))
    });
    spans.truncate(budget);
    spans
}

/// Reads marginals JSON lines and validates every distribution.
pub fn load_marginals(path: &Path) -> Result<Vec<SentenceMarginals>> {
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (n, line) in open_reader(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let m: SentenceMarginals =
            serde_json::from_str(&line).map_err(|e| Error::parse(&name, n + 1, e.to_string()))?;
        m.validate()
            .map_err(|e| Error::parse(&name, n + 1, e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

/// TSV `doc_id seg_id start end entropy`.
pub fn write_spans(path: &Path, spans: &[SpanCandidate]) -> Result<()> {
    let mut w = create_writer(path)?;
    for s in spans {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{:.6}",
            s.doc_id, s.seg_id, s.start, s.end, s.entropy
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sentence selection without a tagger: rank by the top-5 TF-IDF sum and
/// keep the genre mix of `ratio`. Returns (doc_id, seg_id) pairs.
pub fn fallback_rank_sentences(
    corpus: &[Document],
    table: &DfTable,
    ratio: &GenreRatio,
    budget: usize,
) -> Result<Vec<(String, usize)>> {
    let ctx = HeuristicContext::new(HeuristicWeights::TFIDF_ONLY);
    let scored: Vec<ScoredCandidate<(String, usize)>> = corpus
        .iter()
        .flat_map(|d| {
            d.segments.iter().map(|s| ScoredCandidate {
                doc_ref: (d.doc_id.clone(), s.seg_id),
                genre: d.genre,
                score: score_sentence_heuristic(&s.surfaces(), table, &ctx),
            })
        })
        .collect();
    select_with_genre_ratio(&scored, ratio, budget)
}
