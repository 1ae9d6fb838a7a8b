//! Weighted bilingual word lexicons.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{parse_f64, read_tsv};

/// Source word → target words, best first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<(String, f64)>>,
    pub source_lang: String,
    pub target_lang: String,
}

impl Lexicon {
    pub fn new(source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        Lexicon {
            entries: BTreeMap::new(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        }
    }

    /// Builds a lexicon from (source, target, weight) triples. Targets are
    /// ordered by weight, descending; equal weights keep insertion order.
    /// A repeated (source, target) pair keeps its largest weight.
    pub fn from_triples<I, S, T>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T, f64)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut lex = Lexicon::default();
        for (s, t, w) in triples {
            lex.insert(s, t, w)?;
        }
        lex.sort_targets();
        Ok(lex)
    }

    fn insert(
        &mut self,
        source: impl Into<String>,
        target: impl Into<String>,
        weight: f64,
    ) -> Result<()> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lexicon weight {weight} must be finite and non-negative"
            )));
        }
        let target = target.into();
        let list = self.entries.entry(source.into()).or_default();
        match list.iter_mut().find(|(t, _)| *t == target) {
            Some(existing) => existing.1 = existing.1.max(weight),
            None => list.push((target, weight)),
        }
        Ok(())
    }

    fn sort_targets(&mut self) {
        for list in self.entries.values_mut() {
            list.sort_by(|a, b| b.1.total_cmp(&a.1));
        }
    }

    /// Reads `src<TAB>tgt<TAB>weight?` rows; weight defaults to 1.
    pub fn load(path: &Path) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (line, cols) in read_tsv(path)? {
            if cols.len() < 2 {
                return Err(Error::parse(
                    path.display().to_string(),
                    line,
                    "expected src<TAB>tgt[<TAB>weight]",
                ));
            }
            let weight = match cols.get(2).filter(|c| !c.trim().is_empty()) {
                Some(w) => parse_f64(path, line, "weight", w)?,
                None => 1.0,
            };
            lex.insert(cols[0].trim(), cols[1].trim(), weight)
                .map_err(|e| Error::parse(path.display().to_string(), line, e.to_string()))?;
        }
        lex.sort_targets();
        Ok(lex)
    }

    pub fn translations(&self, source: &str) -> &[(String, f64)] {
        self.entries.get(source).map_or(&[], Vec::as_slice)
    }

    pub fn top(&self, source: &str) -> Option<&str> {
        self.translations(source).first().map(|(t, _)| t.as_str())
    }

    pub fn contains(&self, source: &str) -> bool {
        self.entries.contains_key(source)
    }

    /// Entries in source order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(String, f64)])> {
        self.entries.iter().map(|(s, t)| (s.as_str(), t.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Target → source lexicon with the same weights.
    pub fn inverted(&self) -> Lexicon {
        let mut inv = Lexicon::new(self.target_lang.clone(), self.source_lang.clone());
        for (s, targets) in &self.entries {
            for (t, w) in targets {
                // weights were validated on insert
                inv.insert(t.clone(), s.clone(), *w).expect("valid weight");
            }
        }
        inv.sort_targets();
        inv
    }
}

/// Composes two lexicons through a shared pivot language. The weight of
/// (s, t) is the sum over pivots p of w(s→p)·w(p→t). Targets are ordered by
/// weight, descending, then lexicographically.
impl AsRef<Lexicon> for Lexicon {
    fn as_ref(&self) -> &Lexicon {
        self
    }
}

pub fn pivot_lexicon(src_to_pivot: &Lexicon, pivot_to_tgt: &Lexicon) -> Lexicon {
    let mut out = Lexicon::new(
        src_to_pivot.source_lang.clone(),
        pivot_to_tgt.target_lang.clone(),
    );
    for (s, pivots) in &src_to_pivot.entries {
        let mut acc: BTreeMap<&str, f64> = BTreeMap::new();
        for (p, w1) in pivots {
            for (t, w2) in pivot_to_tgt.translations(p) {
                *acc.entry(t.as_str()).or_default() += w1 * w2;
            }
        }
        if acc.is_empty() {
            continue;
        }
        let mut list: Vec<(String, f64)> =
            acc.into_iter().map(|(t, w)| (t.to_string(), w)).collect();
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.entries.insert(s.clone(), list);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn lex(triples: &[(&str, &str, f64)]) -> Lexicon {
        Lexicon::from_triples(triples.iter().map(|&(s, t, w)| (s, t, w))).unwrap()
    }

    #[test]
    fn ordering_and_dedup() {
        let l = lex(&[
            ("a", "x", 1.0),
            ("a", "y", 3.0),
            ("a", "x", 2.0),
            ("a", "z", 3.0),
        ]);
        let t: Vec<_> = l
            .translations("a")
            .iter()
            .map(|(t, w)| (t.as_str(), *w))
            .collect();
        assert_eq!(t, vec![("y", 3.0), ("z", 3.0), ("x", 2.0)]);
        assert_eq!(l.top("a"), Some("y"));
        assert!(l.translations("b").is_empty());
        assert!(Lexicon::from_triples([("a", "b", -1.0)]).is_err());
    }

    #[test]
    fn pivot_examples() {
        let p = pivot_lexicon(&lex(&[("a", "x", 1.0)]), &lex(&[("x", "b", 1.0)]));
        assert_eq!(p.translations("a"), &[("b".to_string(), 1.0)]);

        let p = pivot_lexicon(&lex(&[("a", "x", 1.0)]), &lex(&[("y", "b", 1.0)]));
        assert!(p.is_empty());

        let p = pivot_lexicon(
            &lex(&[("a", "x", 1.0), ("a", "y", 1.0)]),
            &lex(&[("x", "b", 1.0), ("y", "b", 1.0)]),
        );
        assert_eq!(p.translations("a"), &[("b".to_string(), 2.0)]);
    }

    #[test]
    fn pivot_matches_path_enumeration() {
        let first = lex(&[
            ("a", "x", 0.5),
            ("a", "y", 2.0),
            ("b", "y", 1.0),
            ("c", "z", 1.0),
        ]);
        let second = lex(&[
            ("x", "s", 1.0),
            ("x", "t", 4.0),
            ("y", "t", 0.25),
            ("y", "s", 3.0),
        ]);
        let composed = pivot_lexicon(&first, &second);
        for src in ["a", "b", "c"] {
            for tgt in ["s", "t"] {
                let mut brute = 0.0;
                for (p, w1) in first.translations(src) {
                    for (t, w2) in second.translations(p) {
                        if t == tgt {
                            brute += w1 * w2;
                        }
                    }
                }
                let got = composed
                    .translations(src)
                    .iter()
                    .find(|(t, _)| t == tgt)
                    .map_or(0.0, |(_, w)| *w);
                assert!((got - brute).abs() < 1e-12, "{src}->{tgt}");
            }
        }
        // a: s = 0.5 + 6 = 6.5, t = 2 + 0.5 = 2.5
        assert_eq!(composed.top("a"), Some("s"));
    }

    #[test]
    fn load_tsv() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "umwuzure\tflood\t0.9\numwuzure\tdeluge\nbad").unwrap();
        assert!(Lexicon::load(f.path()).is_err());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "umwuzure\tflood\t0.9\numwuzure\tdeluge").unwrap();
        let l = Lexicon::load(f.path()).unwrap();
        assert_eq!(l.top("umwuzure"), Some("deluge"));
        assert_eq!(l.inverted().top("flood"), Some("umwuzure"));
    }
}
