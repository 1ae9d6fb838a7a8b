use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::is_special_token;

/// Source tokens with URLs, emails, @mentions and #hashtags replaced by
/// `DNT_0`, `DNT_1`, … in order of occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DntMask {
    pub masked: Vec<String>,
    pub slots: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restored {
    pub tokens: Vec<String>,
    /// Placeholders that were not found in the translation; their original
    /// tokens were appended at the end.
    pub missing: Vec<String>,
}

pub fn placeholder(i: usize) -> String {
    format!("DNT_{i}")
}

pub fn dnt_tag<S: AsRef<str>>(tokens: &[S]) -> DntMask {
    let mut slots = BTreeMap::new();
    let masked = tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            if is_special_token(t) {
                let key = placeholder(slots.len());
                slots.insert(key.clone(), t.to_string());
                key
            } else {
                t.to_string()
            }
        })
        .collect();
    DntMask { masked, slots }
}

pub fn dnt_restore<S: AsRef<str>>(translated: &[S], mask: &DntMask) -> Restored {
    let mut found = std::collections::HashSet::new();
    let mut tokens: Vec<String> = translated
        .iter()
        .map(|t| {
            let t = t.as_ref();
            match mask.slots.get(t) {
                Some(original) => {
                    found.insert(t.to_string());
                    original.clone()
                }
                None => t.to_string(),
            }
        })
        .collect();
    // Slot order is DNT_0, DNT_1, ... numerically, not as strings.
    let mut pending: Vec<(usize, &String, &String)> = mask
        .slots
        .iter()
        .filter(|(k, _)| !found.contains(*k))
        .map(|(k, v)| (k[4..].parse().unwrap_or(usize::MAX), k, v))
        .collect();
    pending.sort();
    let mut missing = Vec::new();
    for (_, key, original) in pending {
        log::warn!("placeholder {key} missing from translation; appending `{original}`");
        missing.push(key.clone());
        tokens.push(original.clone());
    }
    Restored { tokens, missing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip() {
        let mask = dnt_tag(&["see", "http://a.b"]);
        assert_eq!(mask.masked, ["see", "DNT_0"]);
        assert_eq!(
            mask.slots.get("DNT_0").map(String::as_str),
            Some("http://a.b")
        );
        let restored = dnt_restore(&mask.masked, &mask);
        assert_eq!(restored.tokens, ["see", "http://a.b"]);
        assert!(restored.missing.is_empty());
    }

    #[test]
    fn nothing_to_mask() {
        let mask = dnt_tag(&["plain", "words"]);
        assert!(mask.slots.is_empty());
        assert_eq!(mask.masked, ["plain", "words"]);
    }

    #[test]
    fn order_of_occurrence() {
        let mask = dnt_tag(&[
            "http://x.y",
            "and",
            "www.z.org",
            "@aid",
            "#flood",
            "me@x.org",
        ]);
        assert_eq!(
            mask.masked,
            ["DNT_0", "and", "DNT_1", "DNT_2", "DNT_3", "DNT_4"]
        );
        assert_eq!(mask.slots["DNT_1"], "www.z.org");
    }

    #[test]
    fn missing_placeholder_is_appended() {
        let tokens: Vec<String> = (0..12).map(|i| format!("#t{i}")).collect();
        let mask = dnt_tag(&tokens);
        let translated = vec!["hello".to_string(), "DNT_3".to_string()];
        let restored = dnt_restore(&translated, &mask);
        assert_eq!(restored.tokens[..2], ["hello", "#t3"]);
        assert_eq!(restored.missing.len(), 11);
        assert_eq!(restored.missing[0], "DNT_0");
        assert_eq!(restored.missing[2], "DNT_2");
        assert_eq!(restored.missing[3], "DNT_4");
        assert_eq!(restored.tokens.last().unwrap(), "#t11");
    }

    proptest! {
        #[test]
        fn identity_translation_restores(tokens in proptest::collection::vec(
            prop_oneof!["[a-z]{1,5}", "#[a-z]{1,5}", "@[a-z]{1,5}", "https://[a-z]{1,5}\\.org"], 0..12)) {
            let mask = dnt_tag(&tokens);
            let restored = dnt_restore(&mask.masked, &mask);
            prop_assert_eq!(restored.tokens, tokens);
            prop_assert!(restored.missing.is_empty());
        }
    }
}
