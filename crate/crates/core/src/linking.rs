//! Knowledge-base pruning, translation-based mention linking and NIL
//! clustering.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{create_writer, read_tsv};
use crate::lexicon::Lexicon;
use crate::tags::{spans, EntityType, Tag};

/// Most candidate strings generated for one mention.
pub const MAX_CANDIDATES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbEntry {
    pub kb_id: String,
    pub entity_type: EntityType,
    pub name: String,
    pub ascii_name: String,
    pub alternate_names: Vec<String>,
    pub country_code: String,
    pub population: u64,
}

impl KbEntry {
    /// Non-empty names, deduplicated case-insensitively.
    pub fn names(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        std::iter::once(self.name.as_str())
            .chain(std::iter::once(self.ascii_name.as_str()))
            .chain(self.alternate_names.iter().map(String::as_str))
            .map(str::trim)
            .filter(|n| !n.is_empty() && seen.insert(n.to_lowercase()))
            .collect()
    }
}

/// Reads `kb_id, type, name, ascii_name, alternate_names, country,
/// population` rows. A header row starting with `kb_id` is skipped.
pub fn load_kb(path: &Path) -> Result<Vec<KbEntry>> {
    let name = path.display().to_string();
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (line, cols) in read_tsv(path)? {
        if cols[0] == "kb_id" {
            continue;
        }
        if cols.len() != 7 {
            return Err(Error::parse(
                &name,
                line,
                format!("expected 7 columns, found {}", cols.len()),
            ));
        }
        let entity_type = cols[1]
            .parse()
            .map_err(|e: Error| Error::parse(&name, line, e.to_string()))?;
        let population = if cols[6].trim().is_empty() {
            0
        } else {
            cols[6]
                .trim()
                .parse()
                .map_err(|_| Error::parse(&name, line, format!("bad population `{}`", cols[6])))?
        };
        let kb_id = cols[0].trim().to_string();
        if kb_id.is_empty() || !ids.insert(kb_id.clone()) {
            return Err(Error::parse(
                &name,
                line,
                format!("empty or duplicate kb_id `{kb_id}`"),
            ));
        }
        out.push(KbEntry {
            kb_id,
            entity_type,
            name: cols[2].trim().to_string(),
            ascii_name: cols[3].trim().to_string(),
            alternate_names: cols[4]
                .split('|')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            country_code: cols[5].trim().to_string(),
            population,
        });
    }
    Ok(out)
}

/// Keeps every PER and ORG entry, and places (GPE, LOC) that are either in
/// one of the given countries or have a population above `population_floor`.
pub fn prune_kb(
    kb: &[KbEntry],
    incident_countries: &HashSet<String>,
    neighbor_countries: &HashSet<String>,
    population_floor: u64,
) -> Vec<KbEntry> {
    kb.iter()
        .filter(|e| {
            !e.entity_type.is_place()
                || incident_countries.contains(&e.country_code)
                || neighbor_countries.contains(&e.country_code)
                || e.population > population_floor
        })
        .cloned()
        .collect()
}

fn word_set(s: &str) -> BTreeSet<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

/// Jaccard overlap of the lowercased whitespace-token sets.
pub fn jaccard_similarity(a: &str, b: &str) -> f64 {
    let a = word_set(a);
    let b = word_set(b);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

fn token_options(token: &str, lexicons: &[&Lexicon], k: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut opts = Vec::new();
    let lower = token.to_lowercase();
    for lex in lexicons {
        let mut tr = lex.translations(token);
        if tr.is_empty() {
            tr = lex.translations(&lower);
        }
        for (t, _) in tr.iter().take(k) {
            if seen.insert(t.to_lowercase()) {
                opts.push(t.clone());
            }
        }
    }
    if seen.insert(lower) {
        opts.push(token.to_string());
    }
    opts
}

/// Word-by-word translations of a mention. Each token may become any of
/// the top `k_per_token` translations from each lexicon (lexicons in
/// priority order) or stay as is. Combinations are generated best first by
/// the sum of per-token option ranks and capped at [`MAX_CANDIDATES`]; the
/// untranslated surface is always included.
pub fn candidate_translations<T, L>(
    surface_tokens: &[T],
    lexicons: &[L],
    k_per_token: usize,
) -> Vec<String>
where
    T: AsRef<str>,
    L: AsRef<Lexicon>,
{
    if surface_tokens.is_empty() {
        return Vec::new();
    }
    let lex: Vec<&Lexicon> = lexicons.iter().map(AsRef::as_ref).collect();
    let options: Vec<Vec<String>> = surface_tokens
        .iter()
        .map(|t| token_options(t.as_ref(), &lex, k_per_token))
        .collect();
    let passthrough = surface_tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ");

    let mut out: Vec<String> = Vec::new();
    let mut emitted = HashSet::new();
    let mut heap = BinaryHeap::new();
    let mut queued = HashSet::new();
    let start = vec![0usize; options.len()];
    queued.insert(start.clone());
    heap.push(Reverse((0usize, start)));
    while let Some(Reverse((_, ranks))) = heap.pop() {
        let text = ranks
            .iter()
            .zip(&options)
            .map(|(&r, o)| o[r].as_str())
            .collect::<Vec<_>>()
            .join(" ");
        if emitted.insert(text.to_lowercase()) {
            out.push(text);
            if out.len() == MAX_CANDIDATES {
                break;
            }
        }
        for i in 0..ranks.len() {
            if ranks[i] + 1 < options[i].len() {
                let mut next = ranks.clone();
                next[i] += 1;
                if queued.insert(next.clone()) {
                    heap.push(Reverse((next.iter().sum(), next)));
                }
            }
        }
    }
    if !emitted.contains(&passthrough.to_lowercase()) {
        if out.len() == MAX_CANDIDATES {
            out.pop();
        }
        out.push(passthrough);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: String,
    pub doc_id: String,
    pub seg_id: usize,
    /// Token range, end exclusive.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub entity_type: EntityType,
}

/// Mentions for every entity span of a tagged segment, numbered from
/// `first_index`.
pub fn mentions_from_tags<S: AsRef<str>>(
    doc_id: &str,
    seg_id: usize,
    tokens: &[S],
    tags: &[Tag],
    first_index: usize,
) -> Vec<Mention> {
    spans(tags)
        .into_iter()
        .enumerate()
        .map(|(n, (start, end, ty))| Mention {
            mention_id: format!("{doc_id}-M{:04}", first_index + n + 1),
            doc_id: doc_id.to_string(),
            seg_id,
            start,
            end,
            surface: tokens[start..end]
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" "),
            entity_type: ty,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMethod {
    Translation,
    Exact,
    Nil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub mention: Mention,
    /// Set iff `method` is not `Nil`.
    pub kb_id: Option<String>,
    /// Set by [`cluster_nil`] for NIL results.
    pub nil_id: Option<String>,
    /// Best Jaccard score found, also for NIL results.
    pub score: f64,
    pub method: LinkMethod,
}

impl LinkResult {
    pub fn is_nil(&self) -> bool {
        self.method == LinkMethod::Nil
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub threshold: f64,
    pub k_per_token: usize,
    /// Lets GPE mentions link to LOC entries and vice versa.
    pub gpe_loc_compatible: bool,
    /// When set, a result is also NIL if the best score beats the best
    /// other entry by less than this margin.
    pub nil_margin: Option<f64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            threshold: 0.5,
            k_per_token: 3,
            gpe_loc_compatible: true,
            nil_margin: None,
        }
    }
}

/// Whether a mention of type `mention` may link to an entry of type `entry`.
pub fn types_compatible(mention: EntityType, entry: EntityType, gpe_loc_compatible: bool) -> bool {
    mention == entry || gpe_loc_compatible && mention.is_place() && entry.is_place()
}

/// Immutable index over a (pruned) knowledge base.
#[derive(Debug, Clone)]
pub struct KbIndex {
    entries: Vec<KbEntry>,
    /// Per entry, the lowercased word set of each name.
    name_sets: Vec<Vec<Vec<String>>>,
    /// Word -> (entry, name) pairs containing it.
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl KbIndex {
    pub fn new(entries: Vec<KbEntry>) -> Result<Self> {
        let mut ids = HashSet::new();
        for e in &entries {
            if !ids.insert(e.kb_id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate kb_id `{}`",
                    e.kb_id
                )));
            }
        }
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let name_sets: Vec<Vec<Vec<String>>> = entries
            .iter()
            .map(|e| {
                e.names()
                    .into_iter()
                    .map(|n| word_set(n).into_iter().collect())
                    .collect()
            })
            .collect();
        for (ei, names) in name_sets.iter().enumerate() {
            for (ni, words) in names.iter().enumerate() {
                for w in words {
                    postings
                        .entry(w.clone())
                        .or_default()
                        .push((ei as u32, ni as u32));
                }
            }
        }
        Ok(KbIndex {
            entries,
            name_sets,
            postings,
        })
    }

    pub fn entries(&self) -> &[KbEntry] {
        &self.entries
    }

    pub fn get(&self, kb_id: &str) -> Option<&KbEntry> {
        self.entries.iter().find(|e| e.kb_id == kb_id)
    }

    /// Best Jaccard score per entry over the given candidates; entries with
    /// no word overlap are absent.
    fn overlap_scores(&self, candidates: &[String]) -> HashMap<u32, f64> {
        let mut best: HashMap<u32, f64> = HashMap::new();
        for cand in candidates {
            let words = word_set(cand);
            let mut inter: HashMap<(u32, u32), usize> = HashMap::new();
            for w in &words {
                if let Some(list) = self.postings.get(w) {
                    for &p in list {
                        *inter.entry(p).or_default() += 1;
                    }
                }
            }
            for ((ei, ni), n) in inter {
                let name_len = self.name_sets[ei as usize][ni as usize].len();
                let score = n as f64 / (words.len() + name_len - n) as f64;
                let slot = best.entry(ei).or_insert(0.0);
                if score > *slot {
                    *slot = score;
                }
            }
        }
        best
    }
}

fn better(a: (&KbEntry, f64), b: (&KbEntry, f64)) -> bool {
    a.1 > b.1
        || a.1 == b.1
            && (a.0.population > b.0.population
                || a.0.population == b.0.population && a.0.kb_id < b.0.kb_id)
}

/// Links one mention: every candidate translation is scored against every
/// name of every type-compatible entry; the best entry wins (ties: larger
/// population, then smaller kb_id). Scores below the threshold are NIL.
pub fn link_mention<L: AsRef<Lexicon>>(
    mention: &Mention,
    kb: &KbIndex,
    lexicons: &[L],
    cfg: &LinkConfig,
) -> LinkResult {
    let tokens: Vec<&str> = mention.surface.split_whitespace().collect();
    let candidates = candidate_translations(&tokens, lexicons, cfg.k_per_token);
    let scores = kb.overlap_scores(&candidates);

    let compatible =
        |e: &KbEntry| types_compatible(mention.entity_type, e.entity_type, cfg.gpe_loc_compatible);
    let mut best: Option<(&KbEntry, f64)> = None;
    let mut second = 0.0f64;
    for (ei, entry) in kb.entries.iter().enumerate() {
        if !compatible(entry) {
            continue;
        }
        let score = scores.get(&(ei as u32)).copied().unwrap_or(0.0);
        match best {
            Some(b) if !better((entry, score), b) => second = second.max(score),
            _ => {
                if let Some(b) = best {
                    second = second.max(b.1);
                }
                best = Some((entry, score));
            }
        }
    }

    let nil = |score| LinkResult {
        mention: mention.clone(),
        kb_id: None,
        nil_id: None,
        score,
        method: LinkMethod::Nil,
    };
    let Some((entry, score)) = best else {
        return nil(0.0);
    };
    if score < cfg.threshold || cfg.nil_margin.is_some_and(|m| score - second < m) {
        return nil(score);
    }
    let exact = entry
        .names()
        .iter()
        .any(|n| jaccard_similarity(&mention.surface, n) == score);
    LinkResult {
        mention: mention.clone(),
        kb_id: Some(entry.kb_id.clone()),
        nil_id: None,
        score,
        method: if exact {
            LinkMethod::Exact
        } else {
            LinkMethod::Translation
        },
    }
}

/// Lowercased, punctuation-free surface used to group NIL mentions.
pub fn nil_key(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| {
                    c.is_alphanumeric() || unicode_normalization::char::is_combining_mark(*c)
                })
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Gives NIL results sharing a normalized surface one `NILnnnn` id,
/// numbered in order of first occurrence.
pub fn cluster_nil(results: &mut [LinkResult]) {
    let mut ids: HashMap<String, String> = HashMap::new();
    for r in results.iter_mut().filter(|r| r.is_nil()) {
        let next = ids.len() + 1;
        let id = ids
            .entry(nil_key(&r.mention.surface))
            .or_insert_with(|| format!("NIL{next:04}"));
        r.nil_id = Some(id.clone());
    }
}

/// EDL TSV: doc_id, mention_id, surface, span (`seg:start-end` token
/// offsets), kb_id or NIL id, type, confidence.
pub fn write_edl(path: &Path, results: &[LinkResult]) -> Result<()> {
    let mut w = create_writer(path)?;
    let io_err = |e| Error::io(path, e);
    for r in results {
        let m = &r.mention;
        let target = r.kb_id.as_deref().or(r.nil_id.as_deref()).unwrap_or("NIL");
        writeln!(
            w,
            "{}\t{}\t{}\t{}:{}-{}\t{}\t{}\t{:.4}",
            m.doc_id,
            m.mention_id,
            m.surface,
            m.seg_id,
            m.start,
            m.end,
            target,
            m.entity_type,
            r.score
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EntityType::*;

    fn entry(id: &str, ty: EntityType, name: &str, country: &str, pop: u64) -> KbEntry {
        KbEntry {
            kb_id: id.into(),
            entity_type: ty,
            name: name.into(),
            ascii_name: name.into(),
            alternate_names: vec![],
            country_code: country.into(),
            population: pop,
        }
    }

    fn mention(surface: &str, ty: EntityType) -> Mention {
        Mention {
            mention_id: "d-M0001".into(),
            doc_id: "d".into(),
            seg_id: 0,
            start: 0,
            end: surface.split_whitespace().count(),
            surface: surface.into(),
            entity_type: ty,
        }
    }

    fn set(items: &[&str]) -> HashSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pruning_rules() {
        let kb = vec![
            entry("1", GeoPolitical, "a", "RW", 10),
            entry("2", GeoPolitical, "b", "FR", 60000),
            entry("3", Location, "c", "FR", 0),
            entry("4", Person, "d", "US", 0),
            entry("5", GeoPolitical, "e", "BI", 0),
            entry("6", GeoPolitical, "f", "FR", 50000),
        ];
        let kept: Vec<String> = prune_kb(&kb, &set(&["RW"]), &set(&["BI"]), 50000)
            .into_iter()
            .map(|e| e.kb_id)
            .collect();
        assert_eq!(kept, ["1", "2", "4", "5"]);
        let once = prune_kb(&kb, &set(&["RW"]), &set(&["BI"]), 50000);
        assert_eq!(prune_kb(&once, &set(&["RW"]), &set(&["BI"]), 50000), once);
    }

    #[test]
    fn jaccard_examples() {
        assert!((jaccard_similarity("red cross", "red cross society") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard_similarity("kigali", "Kigali"), 1.0);
        assert_eq!(jaccard_similarity("a", "b"), 0.0);
        assert_eq!(jaccard_similarity("", " "), 1.0);
        assert_eq!(jaccard_similarity("", "a"), 0.0);
    }

    #[test]
    fn candidates() {
        let lex = Lexicon::from_triples([("kigari", "kigali", 1.0)]).unwrap();
        assert_eq!(
            candidate_translations(&["kigari"], &[&lex], 3),
            ["kigali", "kigari"]
        );
        assert_eq!(candidate_translations(&["zzz"], &[&lex], 3), ["zzz"]);

        let lex = Lexicon::from_triples([
            ("a", "x1", 2.0),
            ("a", "x2", 1.0),
            ("b", "y1", 2.0),
            ("b", "y2", 1.0),
        ])
        .unwrap();
        let c = candidate_translations(&["a", "b"], &[&lex], 2);
        assert_eq!(c.len(), 9);
        assert_eq!(c[0], "x1 y1");
        assert!(c.contains(&"a b".to_string()));
        let c = candidate_translations(&["a", "b"], &[&lex], 1);
        assert_eq!(c, ["x1 y1", "x1 b", "a y1", "a b"]);
    }

    #[test]
    fn candidate_cap_keeps_passthrough() {
        let triples: Vec<(String, String, f64)> = (0..4)
            .flat_map(|t| {
                (0..5).map(move |i| (format!("w{t}"), format!("t{t}x{i}"), 10.0 - i as f64))
            })
            .collect();
        let lex = Lexicon::from_triples(triples).unwrap();
        let c = candidate_translations(&["w0", "w1", "w2", "w3"], &[&lex], 5);
        assert_eq!(c.len(), MAX_CANDIDATES);
        assert_eq!(c.last().unwrap(), "w0 w1 w2 w3");
        assert_eq!(c[0], "t0x0 t1x0 t2x0 t3x0");
    }

    #[test]
    fn linking_examples() {
        let lex = Lexicon::from_triples([("kigari", "kigali", 1.0)]).unwrap();
        let kb = KbIndex::new(vec![
            entry("G1", GeoPolitical, "Kigali", "RW", 10),
            entry("G2", GeoPolitical, "Kigali", "RW", 10000),
            entry("O1", Organization, "Red Cross Society", "RW", 0),
        ])
        .unwrap();
        let cfg = LinkConfig::default();
        let r = link_mention(&mention("Kigari", GeoPolitical), &kb, &[&lex], &cfg);
        assert_eq!(r.kb_id.as_deref(), Some("G2"));
        assert_eq!(r.score, 1.0);
        assert_eq!(r.method, LinkMethod::Translation);

        let r = link_mention(&mention("Kigali", Location), &kb, &[&lex], &cfg);
        assert_eq!(
            (r.kb_id.as_deref(), r.method),
            (Some("G2"), LinkMethod::Exact)
        );
        let strict = LinkConfig {
            gpe_loc_compatible: false,
            ..cfg
        };
        assert!(link_mention(&mention("Kigali", Location), &kb, &[&lex], &strict).is_nil());

        let r = link_mention(
            &mention("Croix Red Rouge Cross", Organization),
            &kb,
            &[&lex],
            &cfg,
        );
        assert!(r.is_nil());
        assert!((r.score - 0.4).abs() < 1e-12);
        assert!(r.kb_id.is_none());
    }

    #[test]
    fn margin_rule() {
        let kb = KbIndex::new(vec![
            entry("A", GeoPolitical, "north kivu", "CD", 0),
            entry("B", GeoPolitical, "south kivu", "CD", 0),
        ])
        .unwrap();
        let m = mention("kivu", GeoPolitical);
        let cfg = LinkConfig {
            threshold: 0.3,
            ..LinkConfig::default()
        };
        assert_eq!(
            link_mention::<Lexicon>(&m, &kb, &[], &cfg).kb_id.as_deref(),
            Some("A")
        );
        let margin = LinkConfig {
            nil_margin: Some(0.1),
            ..cfg
        };
        assert!(link_mention::<Lexicon>(&m, &kb, &[], &margin).is_nil());
    }

    #[test]
    fn nil_clusters() {
        let kb = KbIndex::new(vec![]).unwrap();
        let mut results: Vec<LinkResult> = ["Gasabo", "Nyanza", "gasabo!", "Nyanza"]
            .iter()
            .map(|s| {
                link_mention::<Lexicon>(&mention(s, GeoPolitical), &kb, &[], &LinkConfig::default())
            })
            .collect();
        cluster_nil(&mut results);
        let ids: Vec<_> = results.iter().map(|r| r.nil_id.clone().unwrap()).collect();
        assert_eq!(ids, ["NIL0001", "NIL0002", "NIL0001", "NIL0002"]);
        let mut none: Vec<LinkResult> = Vec::new();
        cluster_nil(&mut none);
    }

    #[test]
    fn mentions_and_edl() {
        let tags: Vec<Tag> = ["O", "B-GPE", "I-GPE", "B-PER"]
            .iter()
            .map(|t| t.parse().unwrap())
            .collect();
        let ms = mentions_from_tags("d1", 2, &["i", "New", "York", "Ann"], &tags, 0);
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].surface, "New York");
        assert_eq!(ms[1].mention_id, "d1-M0002");

        let kb = KbIndex::new(vec![entry("G", GeoPolitical, "New York", "US", 1)]).unwrap();
        let mut rs: Vec<_> = ms
            .iter()
            .map(|m| link_mention::<Lexicon>(m, &kb, &[], &LinkConfig::default()))
            .collect();
        cluster_nil(&mut rs);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.tsv");
        write_edl(&p, &rs).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "d1\td1-M0001\tNew York\t2:1-3\tG\tGPE\t1.0000\nd1\td1-M0002\tAnn\t2:3-4\tNIL0001\tPER\t0.0000\n"
        );
    }
}
