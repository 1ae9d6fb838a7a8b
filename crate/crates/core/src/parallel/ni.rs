use std::collections::{HashMap, HashSet};

/// Phrases for native-informant translation: n-grams (n ≤ `n_max`) seen in
/// monolingual text but never in the bilingual source side, ranked by
/// frequency (ties lexicographic). A phrase contained in a longer retained
/// phrase is dropped.
pub fn select_ni_phrases<S: AsRef<str>>(
    monolingual: &[Vec<S>],
    bilingual_src: &[Vec<S>],
    n_max: usize,
    top_n: usize,
) -> Vec<(Vec<String>, usize)> {
    if top_n == 0 || n_max == 0 {
        return Vec::new();
    }
    let mut known: HashSet<Vec<&str>> = HashSet::new();
    for sent in bilingual_src {
        let toks: Vec<&str> = sent.iter().map(AsRef::as_ref).collect();
        for start in 0..toks.len() {
            for end in start + 1..=(start + n_max).min(toks.len()) {
                known.insert(toks[start..end].to_vec());
            }
        }
    }
    let mut counts: HashMap<Vec<&str>, usize> = HashMap::new();
    for sent in monolingual {
        let toks: Vec<&str> = sent.iter().map(AsRef::as_ref).collect();
        for start in 0..toks.len() {
            for end in start + 1..=(start + n_max).min(toks.len()) {
                let gram = &toks[start..end];
                if !known.contains(gram) {
                    *counts.entry(gram.to_vec()).or_default() += 1;
                }
            }
        }
    }

    // Longest first: a phrase survives unless a retained longer phrase
    // contains it.
    let mut candidates: Vec<(Vec<&str>, usize)> = counts.into_iter().collect();
    candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    let mut covered: HashSet<Vec<&str>> = HashSet::new();
    let mut retained = Vec::new();
    for (gram, freq) in candidates {
        if covered.contains(&gram) {
            continue;
        }
        for start in 0..gram.len() {
            for end in start + 1..=gram.len() {
                if end - start < gram.len() {
                    covered.insert(gram[start..end].to_vec());
                }
            }
        }
        retained.push((gram, freq));
    }
    retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    retained.truncate(top_n);
    retained
        .into_iter()
        .map(|(g, f)| (g.into_iter().map(String::from).collect(), f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    fn contains(long: &[String], short: &[String]) -> bool {
        short.len() < long.len() && long.windows(short.len()).any(|w| w == short)
    }

    #[test]
    fn subsumed_phrase_dropped() {
        let mut mono = vec!["umwuzure ukabije"; 5];
        mono.extend(vec!["umwuzure"; 5]);
        let out = select_ni_phrases(&sents(&mono), &[], 2, 10);
        assert_eq!(
            out,
            vec![(vec!["umwuzure".to_string(), "ukabije".to_string()], 5)]
        );
    }

    #[test]
    fn bilingual_phrases_excluded() {
        let mono = sents(&["inkuba", "imvura"]);
        let out = select_ni_phrases(&mono, &sents(&["inkuba nyinshi"]), 2, 10);
        assert_eq!(out, vec![(vec!["imvura".to_string()], 1)]);
        assert!(select_ni_phrases(&mono, &[], 2, 0).is_empty());
    }

    #[test]
    fn frequency_order_and_no_containment() {
        let mono = sents(&["a b c", "a b", "d", "d", "d", "e f", "e f", "x a"]);
        let out = select_ni_phrases(&mono, &sents(&["c"]), 3, 10);
        for (i, (p, _)) in out.iter().enumerate() {
            for (j, (q, _)) in out.iter().enumerate() {
                if i != j {
                    assert!(!contains(q, p));
                }
            }
        }
        assert!(out.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(out[0], (vec!["d".to_string()], 3));
    }
}
