//! Sentence-frequency statistics, TF-IDF vectors and relevance ranking.
//!
//! IDF is the plain reciprocal `1 / DF`, not a log-scaled variant, so a
//! term's weight in a sentence is `count / df`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{extract_ngrams, is_capitalized, Genre};
use crate::error::{Error, Result};
use crate::io::{parse_f64, read_tsv};

pub type TermId = u32;

#[derive(Debug, Clone)]
pub struct DfTable {
    vocab: HashMap<String, TermId>,
    terms: Vec<String>,
    df: Vec<u32>,
    n_sentences: usize,
}

impl DfTable {
    /// Counts, for every term, the number of sentences containing it at
    /// least once. Empty sentences still count towards `n_sentences`.
    pub fn build<I, S, T>(corpus: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[T]>,
        T: AsRef<str>,
    {
        let mut vocab: HashMap<String, TermId> = HashMap::new();
        let mut terms = Vec::new();
        let mut df: Vec<u32> = Vec::new();
        let mut n_sentences = 0;
        let mut seen: HashSet<TermId> = HashSet::new();
        for sentence in corpus {
            n_sentences += 1;
            seen.clear();
            for tok in sentence.as_ref() {
                let tok = tok.as_ref();
                let id = match vocab.get(tok) {
                    Some(&id) => id,
                    None => {
                        let id = terms.len() as TermId;
                        vocab.insert(tok.to_string(), id);
                        terms.push(tok.to_string());
                        df.push(0);
                        id
                    }
                };
                if seen.insert(id) {
                    df[id as usize] += 1;
                }
            }
        }
        if n_sentences == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(DfTable {
            vocab,
            terms,
            df,
            n_sentences,
        })
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocab.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.term_id(term).map(|id| self.df[id as usize])
    }

    pub fn df_by_id(&self, id: TermId) -> u32 {
        self.df[id as usize]
    }

    pub fn n_sentences(&self) -> usize {
        self.n_sentences
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    /// TF-IDF vector of a token list; unknown tokens are ignored.
    pub fn tfidf_vector<T: AsRef<str>>(&self, tokens: &[T]) -> SparseVector {
        let mut counts: BTreeMap<TermId, u32> = BTreeMap::new();
        for tok in tokens {
            if let Some(id) = self.term_id(tok.as_ref()) {
                *counts.entry(id).or_default() += 1;
            }
        }
        SparseVector::from_sorted(
            counts
                .into_iter()
                .map(|(id, c)| (id, c as f64 / self.df[id as usize] as f64))
                .collect(),
        )
    }

    /// Like [`DfTable::tfidf_vector`] with counts divided by their gcd.
    /// Cosine ignores scale, and sentences whose counts are proportional
    /// then score bit-identically, so their exact tie falls back to index order.
    fn ranking_vector<T: AsRef<str>>(&self, tokens: &[T]) -> SparseVector {
        let mut counts: BTreeMap<TermId, u32> = BTreeMap::new();
        for tok in tokens {
            if let Some(id) = self.term_id(tok.as_ref()) {
                *counts.entry(id).or_default() += 1;
            }
        }
        let g = counts.values().fold(0, |g, &c| gcd(g, c)).max(1);
        SparseVector::from_sorted(
            counts
                .into_iter()
                .map(|(id, c)| (id, (c / g) as f64 / self.df[id as usize] as f64))
                .collect(),
        )
    }

    /// Query vector from (term, frequency) pairs: `freq / df` per known term.
    /// Repeated terms have their frequencies summed.
    pub fn query_vector<S: AsRef<str>>(&self, query: &[(S, f64)]) -> SparseVector {
        let mut freqs: BTreeMap<TermId, f64> = BTreeMap::new();
        for (term, freq) in query {
            if let Some(id) = self.term_id(term.as_ref()) {
                *freqs.entry(id).or_default() += freq;
            }
        }
        SparseVector::from_sorted(
            freqs
                .into_iter()
                .map(|(id, f)| (id, f / self.df[id as usize] as f64))
                .collect(),
        )
    }
}

/// Term-id → weight map, kept sorted by term id. Zero weights are not stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(TermId, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        SparseVector::default()
    }

    fn from_sorted(entries: Vec<(TermId, f64)>) -> Self {
        SparseVector {
            entries: entries.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    /// Builds a vector from arbitrary (id, weight) pairs. Duplicate ids are
    /// summed; weights must be finite and non-negative.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (TermId, f64)>) -> Result<Self> {
        let mut map: BTreeMap<TermId, f64> = BTreeMap::new();
        for (id, w) in pairs {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "invalid weight {w} for term {id}"
                )));
            }
            *map.entry(id).or_default() += w;
        }
        Ok(SparseVector::from_sorted(map.into_iter().collect()))
    }

    pub fn get(&self, id: TermId) -> f64 {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < self.entries.len() && j < other.entries.len() {
            let (a, wa) = self.entries[i];
            let (b, wb) = other.entries[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_sorted(self.entries.iter().map(|&(i, w)| (i, w * factor)).collect())
    }
}

/// Cosine similarity, 0 when either side is empty.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(0.0, 1.0)
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn by_score_then_index(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Ranks sentences by cosine similarity to the query vector, best first.
/// Ties keep ascending sentence order.
pub fn rank_by_relevance<S, T, Q>(
    corpus: &[S],
    query: &[(Q, f64)],
    table: &DfTable,
) -> Vec<(usize, f64)>
where
    S: AsRef<[T]>,
    T: AsRef<str>,
    Q: AsRef<str>,
{
    let qv = table.query_vector(query);
    let mut scored: Vec<(usize, f64)> = corpus
        .iter()
        .enumerate()
        .map(|(i, s)| (i, cosine(&table.ranking_vector(s.as_ref()), &qv)))
        .collect();
    scored.sort_by(by_score_then_index);
    scored
}

/// Same result as [`rank_by_relevance`], scored on the rayon pool.
pub fn rank_by_relevance_par<S, T, Q>(
    corpus: &[S],
    query: &[(Q, f64)],
    table: &DfTable,
) -> Vec<(usize, f64)>
where
    S: AsRef<[T]> + Sync,
    T: AsRef<str>,
    Q: AsRef<str>,
{
    let qv = table.query_vector(query);
    let mut scored: Vec<(usize, f64)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, s)| (i, cosine(&table.ranking_vector(s.as_ref()), &qv)))
        .collect();
    scored.par_sort_by(by_score_then_index);
    scored
}

/// Reads a `term<TAB>frequency` file. A missing frequency column means 1.
pub fn load_relevant_terms(path: &Path) -> Result<Vec<(String, f64)>> {
    read_tsv(path)?
        .into_iter()
        .map(|(line, cols)| {
            let freq = match cols.get(1).filter(|c| !c.trim().is_empty()) {
                Some(f) => parse_f64(path, line, "frequency", f)?,
                None => 1.0,
            };
            Ok((cols[0].trim().to_string(), freq))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicWeights {
    pub tfidf: f64,
    pub keywords: f64,
    pub ngram: f64,
    pub capitalized: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        HeuristicWeights {
            tfidf: 1.0,
            keywords: 1.0,
            ngram: 1.0,
            capitalized: 0.0,
        }
    }
}

impl HeuristicWeights {
    pub const TFIDF_ONLY: HeuristicWeights = HeuristicWeights {
        tfidf: 1.0,
        keywords: 0.0,
        ngram: 0.0,
        capitalized: 0.0,
    };
}

/// Inputs to the sentence-importance heuristic besides the sentence itself.
#[derive(Debug, Clone, Default)]
pub struct HeuristicContext {
    /// Lowercased keywords.
    pub keywords: HashSet<String>,
    /// Lowercased token n-grams taken from the evaluation set.
    pub ngrams: HashSet<Vec<String>>,
    pub weights: HeuristicWeights,
    pub top_m: usize,
}

impl HeuristicContext {
    pub fn new(weights: HeuristicWeights) -> Self {
        HeuristicContext {
            weights,
            top_m: 5,
            ..Default::default()
        }
    }
}

/// Weighted sum of: the top-`m` TF-IDF term weights, the number of distinct
/// keyword matches, the longest n-gram shared with the evaluation set, and
/// the number of capitalized tokens.
pub fn score_sentence_heuristic<T: AsRef<str>>(
    tokens: &[T],
    table: &DfTable,
    ctx: &HeuristicContext,
) -> f64 {
    let w = ctx.weights;
    let mut score = 0.0;
    if w.tfidf != 0.0 {
        let mut weights: Vec<f64> = table.tfidf_vector(tokens).iter().map(|(_, v)| v).collect();
        weights.sort_by(|a, b| b.total_cmp(a));
        score += w.tfidf * weights.iter().take(ctx.top_m).sum::<f64>();
    }
    let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    if w.keywords != 0.0 {
        let hits: HashSet<&str> = lowered
            .iter()
            .map(String::as_str)
            .filter(|t| ctx.keywords.contains(*t))
            .collect();
        score += w.keywords * hits.len() as f64;
    }
    if w.ngram != 0.0 && !ctx.ngrams.is_empty() {
        let n_max = ctx.ngrams.iter().map(Vec::len).max().unwrap_or(0);
        let longest = extract_ngrams(&lowered, n_max)
            .into_iter()
            .filter(|(g, _)| ctx.ngrams.contains(g))
            .map(|(g, _)| g.len())
            .max()
            .unwrap_or(0);
        score += w.ngram * longest as f64;
    }
    if w.capitalized != 0.0 {
        let caps = tokens.iter().filter(|t| is_capitalized(t.as_ref())).count();
        score += w.capitalized * caps as f64;
    }
    score
}

/// Target share of each genre in a selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreRatio {
    ratio: BTreeMap<Genre, f64>,
}

impl GenreRatio {
    pub fn new(ratio: impl IntoIterator<Item = (Genre, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (g, r) in ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidRatio(format!("{g}={r} outside [0,1]")));
            }
            *map.entry(g).or_insert(0.0) += r;
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRatio(format!(
                "fractions sum to {total}, not 1"
            )));
        }
        Ok(GenreRatio { ratio: map })
    }

    /// Ratio proportional to how often each genre occurs.
    pub fn from_counts(genres: impl IntoIterator<Item = Genre>) -> Result<Self> {
        let mut counts: BTreeMap<Genre, usize> = BTreeMap::new();
        for g in genres {
            *counts.entry(g).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(Error::InvalidRatio("no genres to count".into()));
        }
        GenreRatio::new(
            counts
                .into_iter()
                .map(|(g, c)| (g, c as f64 / total as f64)),
        )
    }

    /// Parses `NW=0.5,SN=0.3,WL=0.2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
            let (g, r) = part.split_once('=').ok_or_else(|| {
                Error::InvalidRatio(format!("expected GENRE=fraction, got `{part}`"))
            })?;
            let r: f64 = r
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRatio(format!("bad fraction `{r}`")))?;
            pairs.push((g.parse::<Genre>()?, r));
        }
        GenreRatio::new(pairs)
    }

    pub fn get(&self, genre: Genre) -> f64 {
        self.ratio.get(&genre).copied().unwrap_or(0.0)
    }

    /// Largest-remainder apportionment of `budget` seats across genres.
    /// Remainder ties go to the genre listed first in [`Genre::ALL`].
    pub fn quotas(&self, budget: usize) -> BTreeMap<Genre, usize> {
        const RESOLUTION: f64 = 1e9;
        let mut quotas = BTreeMap::new();
        let mut remainders = Vec::new();
        let mut assigned = 0;
        for (&g, &r) in &self.ratio {
            let exact = budget as f64 * r;
            let floor = (exact + 1e-9).floor();
            let q = floor as usize;
            quotas.insert(g, q);
            assigned += q;
            let rem = ((exact - floor).max(0.0) * RESOLUTION).round() as i64;
            remainders.push((rem, g));
        }
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut left = budget.saturating_sub(assigned);
        for (_, g) in remainders.iter().cycle() {
            if left == 0 {
                break;
            }
            *quotas.get_mut(g).unwrap() += 1;
            left -= 1;
        }
        quotas
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate<R> {
    pub doc_ref: R,
    pub genre: Genre,
    pub score: f64,
}

/// Picks `budget` candidates honoring per-genre quotas. Within a genre the
/// best scores win (ties by input order); quota left unfilled by a small
/// genre is refilled from the remaining candidates by global score.
/// The result is ordered by score, then input order.
pub fn select_with_genre_ratio<R: Clone>(
    scored: &[ScoredCandidate<R>],
    ratio: &GenreRatio,
    budget: usize,
) -> Result<Vec<R>> {
    if scored.len() < budget {
        return Err(Error::InsufficientCandidates {
            budget,
            available: scored.len(),
        });
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].score.total_cmp(&scored[a].score).then(a.cmp(&b)));

    let mut remaining = ratio.quotas(budget);
    let mut chosen = vec![false; scored.len()];
    let mut picked = 0;
    for &i in &order {
        if let Some(q) = remaining.get_mut(&scored[i].genre) {
            if *q > 0 {
                *q -= 1;
                chosen[i] = true;
                picked += 1;
            }
        }
    }
    for &i in &order {
        if picked == budget {
            break;
        }
        if !chosen[i] {
            chosen[i] = true;
            picked += 1;
        }
    }
    Ok(order
        .into_iter()
        .filter(|&i| chosen[i])
        .map(|i| scored[i].doc_ref.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn df_examples() {
        let t = DfTable::build(vec![toks(&["a", "a"]), toks(&["a", "b"])]).unwrap();
        assert_eq!(
            (t.df("a"), t.df("b"), t.n_sentences()),
            (Some(2), Some(1), 2)
        );
        let t = DfTable::build(vec![toks(&["x"])]).unwrap();
        assert_eq!((t.df("x"), t.n_sentences()), (Some(1), 1));
        let t = DfTable::build(vec![toks(&[]), toks(&["a"])]).unwrap();
        assert_eq!((t.df("a"), t.n_sentences()), (Some(1), 2));
        assert!(matches!(
            DfTable::build(Vec::<Vec<String>>::new()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn tfidf_examples() {
        let t = DfTable::build(vec![toks(&["a", "a"]), toks(&["a", "b"])]).unwrap();
        let v = t.tfidf_vector(&["a", "a", "b"]);
        assert_eq!(v.get(t.term_id("a").unwrap()), 1.0);
        assert_eq!(v.get(t.term_id("b").unwrap()), 1.0);
        assert!(t.tfidf_vector(&["zzz"]).is_empty());
        assert!(t.tfidf_vector::<&str>(&[]).is_empty());
    }

    #[test]
    fn cosine_examples() {
        let a = SparseVector::from_pairs([(0, 1.0)]).unwrap();
        let b = SparseVector::from_pairs([(1, 1.0)]).unwrap();
        let ab = SparseVector::from_pairs([(0, 1.0), (1, 1.0)]).unwrap();
        assert_eq!(cosine(&a, &a), 1.0);
        assert_eq!(cosine(&a, &b), 0.0);
        assert!((cosine(&ab, &a) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine(&SparseVector::new(), &a), 0.0);
    }

    #[test]
    fn ranking_examples() {
        let corpus = vec![toks(&["flood"]), toks(&["cat"])];
        let t = DfTable::build(&corpus).unwrap();
        let ranked = rank_by_relevance(&corpus, &[("flood", 1.0)], &t);
        assert_eq!(ranked, vec![(0, 1.0), (1, 0.0)]);

        let ranked = rank_by_relevance(&corpus, &[("zzz", 1.0)], &t);
        assert_eq!(ranked, vec![(0, 0.0), (1, 0.0)]);

        let corpus = vec![toks(&["a", "b"]), toks(&["a", "b"]), toks(&["c"])];
        let t = DfTable::build(&corpus).unwrap();
        let ranked = rank_by_relevance(&corpus, &[("a", 1.0)], &t);
        assert_eq!(ranked[0].0, 0);
        assert_eq!(ranked[1].0, 1);
        assert_eq!(ranked[0].1, ranked[1].1);

        // proportional counts are an exact tie and keep index order
        let corpus = vec![
            toks(&["c"]),
            toks(&["a", "a", "a", "b", "b", "b", "c", "c", "c"]),
            toks(&[
                "a", "b", "c", "a", "b", "c", "a", "b", "c", "a", "b", "c", "a", "b", "c",
            ]),
            toks(&["a", "b", "c"]),
        ];
        let t = DfTable::build(&corpus).unwrap();
        let ranked = rank_by_relevance(&corpus, &[("a", 14.0), ("b", 44.0), ("c", 20.0)], &t);
        assert_eq!(
            ranked.iter().map(|r| r.0).collect::<Vec<_>>(),
            vec![1, 2, 3, 0]
        );
        assert_eq!(ranked[0].1, ranked[2].1);
    }

    #[test]
    fn heuristic_examples() {
        // Weights 2, 1, 1: "a" occurs twice with df 1, "b" and "c" once with df 1.
        let t = DfTable::build(vec![toks(&["a", "b", "c"])]).unwrap();
        let ctx = HeuristicContext::new(HeuristicWeights::TFIDF_ONLY);
        assert_eq!(
            score_sentence_heuristic(&["a", "a", "b", "c"], &t, &ctx),
            4.0
        );

        let zero = HeuristicContext::new(HeuristicWeights {
            tfidf: 0.0,
            keywords: 0.0,
            ngram: 0.0,
            capitalized: 0.0,
        });
        assert_eq!(score_sentence_heuristic(&["a", "b"], &t, &zero), 0.0);

        let mut ctx = HeuristicContext::new(HeuristicWeights {
            tfidf: 0.0,
            keywords: 1.0,
            ngram: 0.0,
            capitalized: 1.0,
        });
        ctx.keywords.insert("flood".into());
        assert_eq!(score_sentence_heuristic(&["Flood", "hits"], &t, &ctx), 2.0);
    }

    #[test]
    fn heuristic_top_m_and_ngrams() {
        let t = DfTable::build(vec![toks(&["a", "b", "c", "d", "e", "f"])]).unwrap();
        let mut ctx = HeuristicContext::new(HeuristicWeights::TFIDF_ONLY);
        // Six weights of 1 with f doubled; top five sum to 2 + 4.
        assert_eq!(
            score_sentence_heuristic(&["a", "b", "c", "d", "e", "f", "f"], &t, &ctx),
            6.0
        );
        ctx.top_m = 2;
        assert_eq!(
            score_sentence_heuristic(&["a", "b", "c", "d", "e", "f", "f"], &t, &ctx),
            3.0
        );

        let mut ctx = HeuristicContext::new(HeuristicWeights {
            tfidf: 0.0,
            keywords: 0.0,
            ngram: 1.0,
            capitalized: 0.0,
        });
        ctx.ngrams.insert(toks(&["heavy", "rain"]));
        ctx.ngrams.insert(toks(&["rain"]));
        assert_eq!(
            score_sentence_heuristic(&["Heavy", "rain", "today"], &t, &ctx),
            2.0
        );
        assert_eq!(score_sentence_heuristic(&["rain"], &t, &ctx), 1.0);
        assert_eq!(score_sentence_heuristic(&["sun"], &t, &ctx), 0.0);
    }

    fn cands(spec: &[(Genre, f64)]) -> Vec<ScoredCandidate<usize>> {
        spec.iter()
            .enumerate()
            .map(|(i, &(genre, score))| ScoredCandidate {
                doc_ref: i,
                genre,
                score,
            })
            .collect()
    }

    #[test]
    fn genre_selection_examples() {
        use Genre::*;
        let ratio = GenreRatio::parse("NW=0.5,SN=0.3,WL=0.2").unwrap();
        let mut spec = Vec::new();
        for g in [Newswire, SocialNetwork, Weblog] {
            for k in 0..10 {
                spec.push((g, k as f64));
            }
        }
        let c = cands(&spec);
        let picked = select_with_genre_ratio(&c, &ratio, 10).unwrap();
        let count = |g| picked.iter().filter(|&&i| c[i].genre == g).count();
        assert_eq!(
            (count(Newswire), count(SocialNetwork), count(Weblog)),
            (5, 3, 2)
        );

        assert!(select_with_genre_ratio(&c, &ratio, 0).unwrap().is_empty());

        let ratio = GenreRatio::new([(Newswire, 1.0)]).unwrap();
        let c = cands(&[
            (Newswire, 0.1),
            (Newswire, 0.2),
            (SocialNetwork, 0.5),
            (SocialNetwork, 0.9),
            (SocialNetwork, 0.3),
            (SocialNetwork, 0.3),
            (SocialNetwork, 0.3),
        ]);
        let picked = select_with_genre_ratio(&c, &ratio, 3).unwrap();
        assert_eq!(picked, vec![3, 1, 0]);

        assert!(matches!(
            select_with_genre_ratio(&c, &ratio, 8),
            Err(Error::InsufficientCandidates {
                budget: 8,
                available: 7
            })
        ));
    }

    #[test]
    fn ratio_validation() {
        assert!(GenreRatio::parse("NW=0.5,SN=0.4").is_err());
        assert!(GenreRatio::parse("NW=1.5,SN=-0.5").is_err());
        assert!(GenreRatio::parse("XX=1").is_err());
        let r = GenreRatio::from_counts([Genre::Newswire, Genre::Newswire, Genre::Weblog]).unwrap();
        assert!((r.get(Genre::Newswire) - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cosine_properties(
            a in proptest::collection::vec((0u32..20, 0.01f64..10.0), 1..10),
            b in proptest::collection::vec((0u32..20, 0.01f64..10.0), 1..10),
            alpha in 0.01f64..100.0,
        ) {
            let a = SparseVector::from_pairs(a).unwrap();
            let b = SparseVector::from_pairs(b).unwrap();
            let ab = cosine(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - cosine(&b, &a)).abs() < 1e-12);
            prop_assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
            prop_assert!((cosine(&a.scaled(alpha), &b) - ab).abs() < 1e-12);
        }

        #[test]
        fn selection_size_and_quota(
            genres in proptest::collection::vec(0usize..3, 0..40),
            budget in 0usize..40,
            w in (1u32..10, 0u32..10, 0u32..10),
        ) {
            let total = (w.0 + w.1 + w.2) as f64;
            let ratio = GenreRatio::new([
                (Genre::Newswire, w.0 as f64 / total),
                (Genre::SocialNetwork, w.1 as f64 / total),
                (Genre::Weblog, w.2 as f64 / total),
            ]).unwrap();
            let c: Vec<_> = genres.iter().enumerate().map(|(i, &g)| ScoredCandidate {
                doc_ref: i,
                genre: [Genre::Newswire, Genre::SocialNetwork, Genre::Weblog][g],
                score: ((i * 7919) % 13) as f64,
            }).collect();
            match select_with_genre_ratio(&c, &ratio, budget) {
                Ok(picked) => {
                    prop_assert_eq!(picked.len(), budget);
                    let quotas = ratio.quotas(budget);
                    for (g, q) in quotas {
                        let pool = c.iter().filter(|x| x.genre == g).count();
                        let got = picked.iter().filter(|&&i| c[i].genre == g).count();
                        if pool >= q {
                            prop_assert!(got >= q);
                        } else {
                            prop_assert_eq!(got, pool);
                        }
                    }
                }
                Err(Error::InsufficientCandidates { .. }) => prop_assert!(c.len() < budget),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
