use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::edit_distance::levenshtein_chars;
use crate::lexicon::Lexicon;

/// Word-by-word corpus transfer. Each token goes through, in order:
/// the lexicon's top translation; the closest target-vocabulary word within
/// `max_edit` edits (ties lexicographic); the first nearest-neighbor entry;
/// and finally the token itself.
pub fn translate_corpus_fallback<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
    vocab_target: &BTreeSet<String>,
    neighbors: &HashMap<String, Vec<String>>,
    max_edit: usize,
) -> Vec<String> {
    // Bucket the vocabulary by length once per call; iteration order within
    // a bucket stays lexicographic.
    let mut by_len: BTreeMap<usize, Vec<(&str, Vec<char>)>> = BTreeMap::new();
    for w in vocab_target {
        let chars: Vec<char> = w.chars().collect();
        by_len
            .entry(chars.len())
            .or_default()
            .push((w.as_str(), chars));
    }

    tokens
        .iter()
        .map(|tok| {
            let tok = tok.as_ref();
            if let Some(t) = lexicon.top(tok) {
                return t.to_string();
            }
            let chars: Vec<char> = tok.chars().collect();
            let lo = chars.len().saturating_sub(max_edit);
            let hi = chars.len() + max_edit;
            let mut best: Option<(usize, &str)> = None;
            for (_, words) in by_len.range(lo..=hi) {
                for (w, wc) in words {
                    let d = levenshtein_chars(&chars, wc);
                    if d <= max_edit && best.is_none_or(|(bd, bw)| (d, *w) < (bd, bw)) {
                        best = Some((d, w));
                    }
                }
            }
            if let Some((_, w)) = best {
                return w.to_string();
            }
            if let Some(n) = neighbors.get(tok).and_then(|list| list.first()) {
                return n.clone();
            }
            tok.to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn lexicon_hit_first() {
        let lex = Lexicon::from_triples([("flood", "umwuzure", 1.0)]).unwrap();
        let out =
            translate_corpus_fallback(&["flood"], &lex, &vocab(&["flod"]), &HashMap::new(), 1);
        assert_eq!(out, ["umwuzure"]);
    }

    #[test]
    fn edit_distance_stage() {
        let out = translate_corpus_fallback(
            &["kigal"],
            &Lexicon::default(),
            &vocab(&["kigali"]),
            &HashMap::new(),
            1,
        );
        assert_eq!(out, ["kigali"]);
        // lexicographic among equal distances, exact match preferred
        let v = vocab(&["kigalb", "kigala", "kigal"]);
        let out = translate_corpus_fallback(
            &["kigal", "kigax"],
            &Lexicon::default(),
            &v,
            &HashMap::new(),
            1,
        );
        assert_eq!(out, ["kigal", "kigal"]);
        let out =
            translate_corpus_fallback(&["kigxyz"], &Lexicon::default(), &v, &HashMap::new(), 1);
        assert_eq!(out, ["kigxyz"]);
    }

    #[test]
    fn neighbor_then_passthrough() {
        let mut nn = HashMap::new();
        nn.insert(
            "inkuba".to_string(),
            vec!["thunder".to_string(), "storm".to_string()],
        );
        let out = translate_corpus_fallback(
            &["inkuba", "zzz"],
            &Lexicon::default(),
            &vocab(&["a"]),
            &nn,
            1,
        );
        assert_eq!(out, ["thunder", "zzz"]);
    }
}
