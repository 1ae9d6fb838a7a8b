/// Levenshtein distance with unit costs, over code points.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    if b.len() < SMALL {
        return levenshtein_small(a, b);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

const SMALL: usize = 32;

// Same recurrence as above with stack rows; most words are short.
fn levenshtein_small(a: &[char], b: &[char]) -> usize {
    let mut prev = [0usize; SMALL];
    let mut cur = [0usize; SMALL];
    for (j, p) in prev.iter_mut().enumerate().take(b.len() + 1) {
        *p = j;
    }
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// True when the distance is at most `max`. Exits early on length
/// difference so large vocabularies can be scanned cheaply.
pub fn within_distance(a: &[char], b: &[char], max: usize) -> bool {
    if a.len().abs_diff(b.len()) > max {
        return false;
    }
    levenshtein_chars(a, b) <= max
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                if x == y {
                    naive(ra, rb)
                } else {
                    1 + naive(ra, rb).min(naive(ra, b)).min(naive(a, rb))
                }
            }
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kigalli", "kigali"), 1);
        assert_eq!(levenshtein("ශ්‍රී", "ශ්රී"), 1);
    }

    #[test]
    fn matches_recursive_oracle_on_short_strings() {
        let words: Vec<Vec<char>> = ["", "a", "ab", "ba", "abc", "cab", "aabb", "cbca", "abcab"]
            .iter()
            .map(|w| w.chars().collect())
            .collect();
        for a in &words {
            for b in &words {
                assert_eq!(levenshtein_chars(a, b), naive(a, b));
                assert_eq!(within_distance(a, b, 1), naive(a, b) <= 1);
            }
        }
    }
}
