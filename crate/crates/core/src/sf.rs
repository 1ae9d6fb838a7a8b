//! Keyword-based situation frame detection.
//!
//! Keywords are induced per frame type from labeled documents, expanded
//! with embedding neighbors and kept when close to the type label. Each
//! sentence then receives its best-scoring types, scores are filtered
//! corpus-wide or per document, and the surviving sentences become frames
//! with a place attached.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_surfaces, Document};
use crate::error::{Error, Result};
use crate::io::{create_writer, open_reader, parse_f64, read_tsv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SfType {
    Evac,
    Food,
    Infra,
    Med,
    Search,
    Shelter,
    Utils,
    Water,
    CrimeViolence,
    RegimeChange,
    Terrorism,
}

impl SfType {
    /// Canonical order, also used to break score ties.
    pub const ALL: [SfType; 11] = [
        SfType::Evac,
        SfType::Food,
        SfType::Infra,
        SfType::Med,
        SfType::Search,
        SfType::Shelter,
        SfType::Utils,
        SfType::Water,
        SfType::CrimeViolence,
        SfType::RegimeChange,
        SfType::Terrorism,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SfType::Evac => "evac",
            SfType::Food => "food",
            SfType::Infra => "infra",
            SfType::Med => "med",
            SfType::Search => "search",
            SfType::Shelter => "shelter",
            SfType::Utils => "utils",
            SfType::Water => "water",
            SfType::CrimeViolence => "crimeviolence",
            SfType::RegimeChange => "regimechange",
            SfType::Terrorism => "terrorism",
        }
    }
}

impl fmt::Display for SfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SfType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        SfType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown situation frame type `{s}`")))
    }
}

/// A document with its gold frame types, used for keyword induction.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDocument {
    pub tokens: Vec<String>,
    pub types: Vec<SfType>,
}

#[derive(Deserialize)]
struct LabeledRecord {
    segments: Vec<String>,
    types: Vec<SfType>,
}

/// Reads JSON lines `{"doc_id": .., "segments": [..], "types": [..]}`; the
/// segments of a document are tokenized and concatenated.
pub fn load_labeled_documents(path: &Path) -> Result<Vec<LabeledDocument>> {
    let name = path.display().to_string();
    let mut docs = Vec::new();
    for (n, line) in open_reader(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&name, n + 1, e.to_string()))?;
        docs.push(LabeledDocument {
            tokens: rec
                .segments
                .iter()
                .flat_map(|s| tokenize_surfaces(s))
                .collect(),
            types: rec.types,
        });
    }
    Ok(docs)
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

/// Top `top_n` words per type by TF-IDF, where TF counts the word over all
/// documents of the type and DF counts the labeled documents containing it.
/// Ties are broken lexicographically.
pub fn candidate_keywords(
    docs: &[LabeledDocument],
    types: &[SfType],
    top_n: usize,
) -> Result<BTreeMap<SfType, Vec<(String, f64)>>> {
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut tf: BTreeMap<SfType, HashMap<String, usize>> = BTreeMap::new();
    for doc in docs {
        let words: Vec<String> = doc
            .tokens
            .iter()
            .filter(|t| is_word(t))
            .map(|t| t.to_lowercase())
            .collect();
        let distinct: HashSet<&String> = words.iter().collect();
        for w in distinct {
            *df.entry(w.clone()).or_default() += 1;
        }
        let labels: HashSet<SfType> = doc.types.iter().copied().collect();
        for ty in labels {
            let counts = tf.entry(ty).or_default();
            for w in &words {
                *counts.entry(w.clone()).or_default() += 1;
            }
        }
    }
    let mut out = BTreeMap::new();
    for &ty in types {
        let counts = tf
            .get(&ty)
            .ok_or_else(|| Error::EmptyClass(ty.to_string()))?;
        let mut scored: Vec<(String, f64)> = counts
            .iter()
            .map(|(w, &c)| (w.clone(), c as f64 / df[w] as f64))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top_n);
        out.insert(ty, scored);
    }
    Ok(out)
}

/// Nearest neighbors per word, sorted by cosine descending.
pub type NeighborTable = HashMap<String, Vec<(String, f64)>>;

/// Reads `word<TAB>neighbor<TAB>cosine` rows.
pub fn load_neighbors(path: &Path) -> Result<NeighborTable> {
    let mut table: NeighborTable = HashMap::new();
    for (line, cols) in read_tsv(path)? {
        if cols.len() != 3 {
            return Err(Error::parse(
                path.display().to_string(),
                line,
                "expected word<TAB>neighbor<TAB>cosine",
            ));
        }
        let cos = parse_f64(path, line, "cosine", &cols[2])?;
        table
            .entry(cols[0].trim().to_lowercase())
            .or_default()
            .push((cols[1].trim().to_lowercase(), cos));
    }
    for list in table.values_mut() {
        list.sort_by(|a, b| b.1.total_cmp(&a.1));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpandConfig {
    pub max_neighbors: usize,
    /// Neighbors need a cosine strictly above this.
    pub min_cosine: f64,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        ExpandConfig {
            max_neighbors: 30,
            min_cosine: 0.70,
        }
    }
}

/// Adds up to `max_neighbors` close neighbors of every candidate. Each word
/// carries the cosine it was reached with (1.0 for candidates); duplicates
/// within a type keep the largest.
pub fn expand_keywords(
    candidates: &BTreeMap<SfType, Vec<(String, f64)>>,
    neighbors: &NeighborTable,
    cfg: &ExpandConfig,
) -> BTreeMap<SfType, Vec<(String, f64)>> {
    let mut out = BTreeMap::new();
    for (&ty, words) in candidates {
        let mut order: Vec<String> = Vec::new();
        let mut best: HashMap<String, f64> = HashMap::new();
        let mut add = |w: &str, cos: f64| match best.get_mut(w) {
            Some(c) => *c = c.max(cos),
            None => {
                best.insert(w.to_string(), cos);
                order.push(w.to_string());
            }
        };
        for (w, _) in words {
            add(w, 1.0);
            if let Some(list) = neighbors.get(w) {
                for (n, cos) in list
                    .iter()
                    .filter(|(_, c)| *c > cfg.min_cosine)
                    .take(cfg.max_neighbors)
                {
                    add(n, *cos);
                }
            }
        }
        let expanded = order.into_iter().map(|w| {
            let c = best[&w];
            (w, c)
        });
        out.insert(ty, expanded.collect());
    }
    out
}

/// Cosine between a word and a frame type label.
pub type AffinityTable = HashMap<(String, SfType), f64>;

/// Reads `word<TAB>sf_type<TAB>cosine` rows.
pub fn load_affinity(path: &Path) -> Result<AffinityTable> {
    let name = path.display().to_string();
    let mut table = HashMap::new();
    for (line, cols) in read_tsv(path)? {
        if cols.len() != 3 {
            return Err(Error::parse(
                &name,
                line,
                "expected word<TAB>sf_type<TAB>cosine",
            ));
        }
        let ty: SfType = cols[1]
            .parse()
            .map_err(|e: Error| Error::parse(&name, line, e.to_string()))?;
        let cos = parse_f64(path, line, "cosine", &cols[2])?;
        if !(-1.0..=1.0).contains(&cos) {
            return Err(Error::parse(
                &name,
                line,
                format!("cosine {cos} outside [-1, 1]"),
            ));
        }
        table.insert((cols[0].trim().to_lowercase(), ty), cos);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub keyword: String,
    pub sf_type: SfType,
    pub confidence: f64,
}

/// Keeps `(word, type)` pairs whose label affinity is at least `th1`; the
/// affinity becomes the keyword confidence. Words without an affinity are
/// dropped.
pub fn filter_by_affinity(
    expanded: &BTreeMap<SfType, Vec<(String, f64)>>,
    affinity: &AffinityTable,
    th1: f64,
) -> Vec<KeywordEntry> {
    let mut out = Vec::new();
    for (&ty, words) in expanded {
        for (w, _) in words {
            if let Some(&a) = affinity.get(&(w.clone(), ty)) {
                if a >= th1 {
                    out.push(KeywordEntry {
                        keyword: w.clone(),
                        sf_type: ty,
                        confidence: a,
                    });
                }
            }
        }
    }
    out
}

/// Reads `keyword<TAB>sf_type<TAB>confidence` rows.
pub fn load_keywords(path: &Path) -> Result<Vec<KeywordEntry>> {
    let name = path.display().to_string();
    read_tsv(path)?
        .into_iter()
        .map(|(line, cols)| {
            if cols.len() != 3 {
                return Err(Error::parse(
                    &name,
                    line,
                    "expected keyword<TAB>sf_type<TAB>confidence",
                ));
            }
            let sf_type = cols[1]
                .parse()
                .map_err(|e: Error| Error::parse(&name, line, e.to_string()))?;
            let confidence = parse_f64(path, line, "confidence", &cols[2])?;
            if !(0.0..=1.0).contains(&confidence) {
                return Err(Error::parse(
                    &name,
                    line,
                    format!("confidence {confidence} outside [0, 1]"),
                ));
            }
            Ok(KeywordEntry {
                keyword: cols[0].trim().to_lowercase(),
                sf_type,
                confidence,
            })
        })
        .collect()
}

pub fn write_keywords(path: &Path, keywords: &[KeywordEntry]) -> Result<()> {
    crate::io::write_lines(
        path,
        keywords
            .iter()
            .map(|k| format!("{}\t{}\t{}", k.keyword, k.sf_type, k.confidence)),
    )
}

/// Reads `word<TAB>lemma` rows; both sides lowercased.
pub fn load_lemmas(path: &Path) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (line, cols) in read_tsv(path)? {
        if cols.len() != 2 {
            return Err(Error::parse(
                path.display().to_string(),
                line,
                "expected word<TAB>lemma",
            ));
        }
        map.insert(cols[0].trim().to_lowercase(), cols[1].trim().to_lowercase());
    }
    Ok(map)
}

/// One frame type predicted for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePrediction {
    pub doc_id: String,
    pub seg_id: usize,
    pub sf_type: SfType,
    pub score: f64,
    /// Matched keywords of this type, sorted.
    pub keywords: Vec<String>,
}

/// Scores each sentence per type as the summed confidence of the distinct
/// keywords it contains (matching the lowercased token, or its lemma when a
/// lemma map is given) and emits its `top_t` best types with positive score.
/// Ties follow the canonical type order. Output follows corpus order.
pub fn tag_sentences(
    corpus: &[Document],
    keywords: &[KeywordEntry],
    lemmas: Option<&HashMap<String, String>>,
    top_t: usize,
) -> Vec<SentencePrediction> {
    let mut by_word: HashMap<&str, Vec<(SfType, f64)>> = HashMap::new();
    for k in keywords {
        by_word
            .entry(k.keyword.as_str())
            .or_default()
            .push((k.sf_type, k.confidence));
    }
    let mut out = Vec::new();
    for doc in corpus {
        for seg in &doc.segments {
            let mut matched: BTreeMap<SfType, BTreeMap<&str, f64>> = BTreeMap::new();
            for tok in &seg.tokens {
                let lower = tok.surface.to_lowercase();
                let lemma = lemmas.and_then(|m| m.get(&lower));
                for form in std::iter::once(lower.as_str()).chain(lemma.map(String::as_str)) {
                    if let Some((word, hits)) = by_word.get_key_value(form) {
                        for &(ty, conf) in hits {
                            let slot = matched.entry(ty).or_default().entry(*word).or_insert(conf);
                            *slot = slot.max(conf);
                        }
                    }
                }
            }
            let mut scored: Vec<(SfType, f64, Vec<String>)> = matched
                .into_iter()
                .map(|(ty, kws)| {
                    let score = kws.values().sum();
                    (ty, score, kws.into_keys().map(String::from).collect())
                })
                .filter(|(_, s, _)| *s > 0.0)
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored.truncate(top_t);
            out.extend(
                scored
                    .into_iter()
                    .map(|(sf_type, score, keywords)| SentencePrediction {
                        doc_id: doc.doc_id.clone(),
                        seg_id: seg.seg_id,
                        sf_type,
                        score,
                        keywords,
                    }),
            );
        }
    }
    out
}

/// Mean and population standard deviation of the scores of each type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SfScoreStats {
    pub per_type: BTreeMap<SfType, (f64, f64)>,
}

impl SfScoreStats {
    pub fn compute(predictions: &[SentencePrediction]) -> Self {
        let mut scores: BTreeMap<SfType, Vec<f64>> = BTreeMap::new();
        for p in predictions {
            scores.entry(p.sf_type).or_default().push(p.score);
        }
        let per_type = scores
            .into_iter()
            .map(|(ty, s)| {
                let n = s.len() as f64;
                let mean = s.iter().sum::<f64>() / n;
                let var = s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                (ty, (mean, var.sqrt()))
            })
            .collect();
        SfScoreStats { per_type }
    }

    pub fn threshold(&self, ty: SfType, lambda: f64) -> Option<f64> {
        self.per_type.get(&ty).map(|(m, s)| m + lambda * s)
    }
}

/// Rounding slack when comparing a score with `mu + lambda * sigma`, so a
/// set of equal scores never drops members to floating-point noise.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Drops predictions scoring below `mu + lambda * sigma` of their type.
pub fn filter_mean_std(predictions: &[SentencePrediction], lambda: f64) -> Vec<SentencePrediction> {
    let stats = SfScoreStats::compute(predictions);
    predictions
        .iter()
        .filter(|p| {
            let t = stats.threshold(p.sf_type, lambda).expect("type present");
            p.score >= t - THRESHOLD_SLACK * t.abs().max(1.0)
        })
        .cloned()
        .collect()
}

/// Keeps, per document, the `min(cap, S)` types with the highest sentence
/// score (ties in canonical order), S being the document's sentence count.
/// Predictions of kept types must also survive the `lambda = 0` filter.
pub fn filter_topk_per_doc(
    predictions: &[SentencePrediction],
    sentence_counts: &HashMap<String, usize>,
    cap: usize,
) -> Vec<SentencePrediction> {
    let mut best: HashMap<&str, BTreeMap<SfType, f64>> = HashMap::new();
    for p in predictions {
        let slot = best
            .entry(&p.doc_id)
            .or_default()
            .entry(p.sf_type)
            .or_insert(f64::MIN);
        *slot = slot.max(p.score);
    }
    let kept: HashMap<&str, HashSet<SfType>> = best
        .into_iter()
        .map(|(doc, types)| {
            let s = sentence_counts.get(doc).copied().unwrap_or(0);
            let mut ranked: Vec<(SfType, f64)> = types.into_iter().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            (
                doc,
                ranked
                    .into_iter()
                    .take(cap.min(s))
                    .map(|(t, _)| t)
                    .collect(),
            )
        })
        .collect();
    filter_mean_std(predictions, 0.0)
        .into_iter()
        .filter(|p| {
            kept.get(p.doc_id.as_str())
                .is_some_and(|k| k.contains(&p.sf_type))
        })
        .collect()
}

/// A GPE or LOC mention usable as a frame place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceMention {
    pub seg_id: usize,
    pub start: usize,
    /// KB id, NIL cluster id or `NIL`.
    pub place: String,
}

/// Picks a place for each prediction: the nearest place mention within
/// `n_window` segments (ties: earlier segment, then leftmost), else the
/// place given to the latest earlier prediction of the same document, else
/// none. `None` as window means unbounded.
pub fn assign_locations(
    predictions: &[SentencePrediction],
    places: &HashMap<String, Vec<PlaceMention>>,
    n_window: Option<usize>,
) -> Vec<Option<String>> {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&predictions[a], &predictions[b]);
        pa.doc_id
            .cmp(&pb.doc_id)
            .then(pa.seg_id.cmp(&pb.seg_id))
            .then(pa.sf_type.cmp(&pb.sf_type))
            .then(a.cmp(&b))
    });
    let mut out = vec![None; predictions.len()];
    let mut last: Option<(&str, String)> = None;
    for i in order {
        let p = &predictions[i];
        if last.as_ref().is_some_and(|(d, _)| *d != p.doc_id) {
            last = None;
        }
        let nearest = places.get(&p.doc_id).and_then(|mentions| {
            mentions
                .iter()
                .filter(|m| n_window.is_none_or(|n| m.seg_id.abs_diff(p.seg_id) <= n))
                .min_by_key(|m| (m.seg_id.abs_diff(p.seg_id), m.seg_id, m.start))
        });
        let place = match nearest {
            Some(m) => Some(m.place.clone()),
            None => last.as_ref().map(|(_, place)| place.clone()),
        };
        if let Some(pl) = &place {
            last = Some((p.doc_id.as_str(), pl.clone()));
        }
        out[i] = place;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationFrame {
    pub doc_id: String,
    #[serde(rename = "type")]
    pub sf_type: SfType,
    /// KB id, NIL id, or empty when no place was found.
    pub place_kb_id: String,
    pub justification_seg: usize,
    pub status: String,
    pub resolution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urgency: Option<bool>,
}

pub const STATUS_CURRENT: &str = "current";
pub const RESOLUTION_INSUFFICIENT: &str = "insufficient";

/// One frame per (document, type), justified by its highest-scoring
/// sentence (ties: earlier segment). Frames are ordered by first document
/// appearance, then canonical type order.
pub fn finalize_frames(
    predictions: &[SentencePrediction],
    places: &[Option<String>],
    urgency: &HashMap<(String, SfType), bool>,
) -> Vec<SituationFrame> {
    assert_eq!(
        predictions.len(),
        places.len(),
        "one place slot per prediction"
    );
    let mut doc_order: Vec<&str> = Vec::new();
    let mut best: HashMap<(&str, SfType), usize> = HashMap::new();
    for (i, p) in predictions.iter().enumerate() {
        if !doc_order.contains(&p.doc_id.as_str()) {
            doc_order.push(&p.doc_id);
        }
        best.entry((&p.doc_id, p.sf_type))
            .and_modify(|j| {
                let q = &predictions[*j];
                if p.score > q.score || p.score == q.score && p.seg_id < q.seg_id {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut frames = Vec::new();
    for doc in doc_order {
        for ty in SfType::ALL {
            if let Some(&i) = best.get(&(doc, ty)) {
                let p = &predictions[i];
                frames.push(SituationFrame {
                    doc_id: p.doc_id.clone(),
                    sf_type: ty,
                    place_kb_id: places[i].clone().unwrap_or_default(),
                    justification_seg: p.seg_id,
                    status: STATUS_CURRENT.into(),
                    resolution: RESOLUTION_INSUFFICIENT.into(),
                    urgency: urgency.get(&(p.doc_id.clone(), ty)).copied(),
                });
            }
        }
    }
    frames
}

/// Reads `doc_id<TAB>sf_type<TAB>true|false` urgency labels.
pub fn load_urgency(path: &Path) -> Result<HashMap<(String, SfType), bool>> {
    let name = path.display().to_string();
    let mut map = HashMap::new();
    for (line, cols) in read_tsv(path)? {
        if cols.len() != 3 {
            return Err(Error::parse(
                &name,
                line,
                "expected doc_id<TAB>sf_type<TAB>true|false",
            ));
        }
        let ty: SfType = cols[1]
            .parse()
            .map_err(|e: Error| Error::parse(&name, line, e.to_string()))?;
        let flag = cols[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(&name, line, format!("bad urgency flag `{}`", cols[2])))?;
        map.insert((cols[0].trim().to_string(), ty), flag);
    }
    Ok(map)
}

pub fn write_frames(path: &Path, frames: &[SituationFrame]) -> Result<()> {
    let mut w = create_writer(path)?;
    for f in frames {
        serde_json::to_writer(&mut w, f)?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_frames(path: &Path) -> Result<Vec<SituationFrame>> {
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (n, line) in open_reader(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::parse(&name, n + 1, e.to_string()))?,
        );
    }
    Ok(out)
}
