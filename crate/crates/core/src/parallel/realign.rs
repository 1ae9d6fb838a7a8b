use std::ops::Range;

use crate::error::{Error, Result};

/// One alignment bead: how many source and target segments it consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMove {
    OneOne,
    OneZero,
    ZeroOne,
    TwoOne,
    OneTwo,
}

impl AlignMove {
    pub const ALL: [AlignMove; 5] = [
        AlignMove::OneOne,
        AlignMove::OneZero,
        AlignMove::ZeroOne,
        AlignMove::TwoOne,
        AlignMove::OneTwo,
    ];

    pub fn sizes(self) -> (usize, usize) {
        match self {
            AlignMove::OneOne => (1, 1),
            AlignMove::OneZero => (1, 0),
            AlignMove::ZeroOne => (0, 1),
            AlignMove::TwoOne => (2, 1),
            AlignMove::OneTwo => (1, 2),
        }
    }
}

/// Length-based alignment cost parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    pub penalty_one_one: f64,
    pub penalty_insert_delete: f64,
    pub penalty_merge: f64,
    /// Variance of the target/source character length difference per
    /// character.
    pub variance: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            penalty_one_one: 0.0,
            penalty_insert_delete: 4.0,
            penalty_merge: 1.5,
            variance: 6.8,
        }
    }
}

impl AlignConfig {
    fn penalty(&self, mv: AlignMove) -> f64 {
        match mv {
            AlignMove::OneOne => self.penalty_one_one,
            AlignMove::OneZero | AlignMove::ZeroOne => self.penalty_insert_delete,
            AlignMove::TwoOne | AlignMove::OneTwo => self.penalty_merge,
        }
    }
}

/// Cost of aligning `src_chars` characters with `tgt_chars` characters by
/// `mv`: the squared normalized length difference plus the move penalty.
pub fn alignment_cost(
    src_chars: usize,
    tgt_chars: usize,
    mv: AlignMove,
    config: &AlignConfig,
) -> f64 {
    let (ls, lt) = (src_chars as f64, tgt_chars as f64);
    let scale = (config.variance * ((ls + lt) / 2.0 + 1.0)).sqrt();
    let delta = (lt - ls) / scale;
    delta * delta + config.penalty(mv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub beads: Vec<(Range<usize>, Range<usize>)>,
    pub cost: f64,
}

/// Monotone segment alignment by dynamic programming over 1-1, 1-0, 0-1,
/// 2-1 and 1-2 moves. Every segment on both sides is covered exactly once.
pub fn realign_document<S: AsRef<str>, T: AsRef<str>>(
    src: &[S],
    tgt: &[T],
    config: &AlignConfig,
) -> Result<Alignment> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::InvalidArgument(
            "realignment needs segments on both sides".into(),
        ));
    }
    let src_len: Vec<usize> = src.iter().map(|s| s.as_ref().chars().count()).collect();
    let tgt_len: Vec<usize> = tgt.iter().map(|s| s.as_ref().chars().count()).collect();
    let (n, m) = (src.len(), tgt.len());

    let mut cost = vec![vec![f64::INFINITY; m + 1]; n + 1];
    let mut back: Vec<Vec<Option<AlignMove>>> = vec![vec![None; m + 1]; n + 1];
    cost[0][0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            for mv in AlignMove::ALL {
                let (di, dj) = mv.sizes();
                if di > i || dj > j {
                    continue;
                }
                let prev = cost[i - di][j - dj];
                if !prev.is_finite() {
                    continue;
                }
                let ls: usize = src_len[i - di..i].iter().sum();
                let lt: usize = tgt_len[j - dj..j].iter().sum();
                let c = prev + alignment_cost(ls, lt, mv, config);
                if c < cost[i][j] {
                    cost[i][j] = c;
                    back[i][j] = Some(mv);
                }
            }
        }
    }

    let mut beads = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let mv = back[i][j].expect("every cell is reachable through 1-0 and 0-1 moves");
        let (di, dj) = mv.sizes();
        beads.push((i - di..i, j - dj..j));
        i -= di;
        j -= dj;
    }
    beads.reverse();
    Ok(Alignment {
        beads,
        cost: cost[n][m],
    })
}
