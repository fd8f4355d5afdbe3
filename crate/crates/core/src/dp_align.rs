//! Global alignment of the provisional pages of a region.
//!
//! Pairs are scored with a weighted blend of text, visual, length and
//! position agreement plus indicator bonuses for shared keys, then aligned
//! with a linear-gap Needleman-Wunsch recurrence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::features::PageFeatures;
use crate::fingerprint::phash_similarity;
use crate::scalar::Scalar;
use crate::seven_phase::RegionOutcome;
use crate::types::MatchType;

const W_BASE: f64 = 0.55;
const W_LEN: f64 = 0.20;
const W_POS: f64 = 0.15;
const W_HASH: f64 = 0.50;
const W_DRAWING: f64 = 0.35;
const W_DRAWING_SUBSTR: f64 = 0.10;
const W_TITLE: f64 = 0.20;
const W_FUSED_TEXT: f64 = 0.40;
const W_FUSED_VISUAL: f64 = 0.60;
/// Shorter drawing number must have at least this many characters for a
/// substring bonus.
const SUBSTR_MIN_LEN: usize = 2;

/// Largest possible pair score: every weight at full value.
pub const MAX_PAIR_SCORE: f64 =
    W_BASE + W_LEN + W_POS + W_HASH + W_DRAWING + W_DRAWING_SUBSTR + W_TITLE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpConfig<T> {
    pub gap_penalty: T,
    pub content_similar_threshold: T,
    pub position_match_cap: T,
}

impl<T: Scalar> Default for DpConfig<T> {
    fn default() -> Self {
        Self {
            gap_penalty: T::lit(-0.42),
            content_similar_threshold: T::lit(0.28),
            position_match_cap: T::lit(0.60),
        }
    }
}

impl<T: Scalar> DpConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if self.gap_penalty >= T::zero() {
            return Err(format!("gap_penalty must be negative, got {}", self.gap_penalty));
        }
        Ok(())
    }

    /// `(type, confidence)` for an aligned pair with the given score.
    pub fn classify(&self, score: T) -> (MatchType, T) {
        if score >= self.content_similar_threshold - T::lit(crate::types::SCORE_EPS) {
            (MatchType::ContentSimilar, score.min(T::one()))
        } else {
            (
                MatchType::PositionMatch,
                score.min(self.position_match_cap).max(T::zero()),
            )
        }
    }
}

/// Every term of the pair score, kept for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairScore<T> {
    pub s_t: T,
    pub s_v: Option<T>,
    pub s_b: T,
    pub s_len: T,
    pub p_pos: T,
    pub bonus_hash: T,
    pub bonus_drawing: T,
    pub bonus_drawing_substr: T,
    pub bonus_title: T,
    pub total: T,
}

/// `min / max` of two character counts; 1 when both are zero.
pub fn length_ratio<T: Scalar>(a_chars: usize, b_chars: usize) -> T {
    match (a_chars, b_chars) {
        (0, 0) => T::one(),
        (a, b) => T::ratio(a.min(b), a.max(b)),
    }
}

/// `1 - |i/m - j/n|` over 0-based positions.
pub fn positional_score<T: Scalar>(i: usize, j: usize, m: usize, n: usize) -> T {
    assert!(m > 0 && n > 0, "positional score needs non-empty sequences");
    T::one() - (T::ratio(i, m) - T::ratio(j, n)).abs()
}

/// `s_t` alone, or `0.40 s_t + 0.60 s_v` when a visual similarity exists.
pub fn fuse_similarity<T: Scalar>(s_t: T, s_v: Option<T>) -> T {
    match s_v {
        Some(s_v) => T::lit(W_FUSED_TEXT) * s_t + T::lit(W_FUSED_VISUAL) * s_v,
        None => s_t,
    }
}

fn indicator<T: Scalar>(hit: bool, weight: f64) -> T {
    if hit {
        T::lit(weight)
    } else {
        T::zero()
    }
}

fn proper_substring(a: &str, b: &str) -> bool {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    short.chars().count() >= SUBSTR_MIN_LEN && short != long && long.contains(short)
}

/// Scores old page `o` at position `i` of `m` against new page `n` at
/// position `j` of `n_len`.
pub fn pair_score<T: Scalar>(
    o: &PageFeatures,
    n: &PageFeatures,
    i: usize,
    j: usize,
    m: usize,
    n_len: usize,
) -> PairScore<T> {
    let (fo, fnew) = (&o.fingerprint, &n.fingerprint);
    let s_t: T = o.text_similarity(n);
    let s_v = match (fo.phash, fnew.phash) {
        (Some(a), Some(b)) => Some(phash_similarity::<T>(a, b)),
        _ => None,
    };
    let s_b = fuse_similarity(s_t, s_v);
    let s_len = length_ratio(o.char_count, n.char_count);
    let p_pos = positional_score(i, j, m, n_len);

    let both = |a: &str, b: &str| !a.is_empty() && !b.is_empty();
    let bonus_hash = indicator(
        both(&fo.content_hash, &fnew.content_hash) && fo.content_hash == fnew.content_hash,
        W_HASH,
    );
    let drawings = both(&fo.drawing_number, &fnew.drawing_number);
    let bonus_drawing = indicator(drawings && fo.drawing_number == fnew.drawing_number, W_DRAWING);
    let bonus_drawing_substr = indicator(
        drawings && proper_substring(&fo.drawing_number, &fnew.drawing_number),
        W_DRAWING_SUBSTR,
    );
    let bonus_title = indicator(
        both(&fo.section_title, &fnew.section_title) && fo.section_title == fnew.section_title,
        W_TITLE,
    );

    let total = T::lit(W_BASE) * s_b
        + T::lit(W_LEN) * s_len
        + T::lit(W_POS) * p_pos
        + bonus_hash
        + bonus_drawing
        + bonus_drawing_substr
        + bonus_title;
    PairScore {
        s_t,
        s_v,
        s_b,
        s_len,
        p_pos,
        bonus_hash,
        bonus_drawing,
        bonus_drawing_substr,
        bonus_title,
        total,
    }
}

/// One column of a global alignment. Indices are positions in the aligned
/// sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignStep<T> {
    Pair { old: usize, new: usize, score: T },
    /// Old element aligned to a gap.
    SkipOld(usize),
    /// New element aligned to a gap.
    SkipNew(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    pub steps: Vec<AlignStep<T>>,
    pub total: T,
}

impl<T: Scalar> Alignment<T> {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.steps.iter().filter_map(|s| match *s {
            AlignStep::Pair { old, new, score } => Some((old, new, score)),
            _ => None,
        })
    }
}

#[derive(Clone, Copy)]
enum Move {
    Diagonal,
    Up,
    Left,
}

/// Needleman-Wunsch over a precomputed `m x n` score matrix, one row of
/// `n` scores per old element. Ties prefer diagonal, then up, then left.
pub fn align_scores<T: Scalar>(scores: &[Vec<T>], n: usize, gap: T) -> Alignment<T> {
    let m = scores.len();
    assert!(scores.iter().all(|row| row.len() == n), "score rows must have {n} entries");
    let width = n + 1;
    let mut table = vec![T::zero(); (m + 1) * width];
    let mut moves = vec![Move::Diagonal; (m + 1) * width];
    for j in 1..=n {
        table[j] = gap * T::from_usize(j).unwrap();
        moves[j] = Move::Left;
    }
    for i in 1..=m {
        table[i * width] = gap * T::from_usize(i).unwrap();
        moves[i * width] = Move::Up;
        for j in 1..=n {
            let diag = table[(i - 1) * width + j - 1] + scores[i - 1][j - 1];
            let up = table[(i - 1) * width + j] + gap;
            let left = table[i * width + j - 1] + gap;
            let (best, mv) = if diag >= up && diag >= left {
                (diag, Move::Diagonal)
            } else if up >= left {
                (up, Move::Up)
            } else {
                (left, Move::Left)
            };
            table[i * width + j] = best;
            moves[i * width + j] = mv;
        }
    }

    let mut steps = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        match moves[i * width + j] {
            Move::Diagonal => {
                steps.push(AlignStep::Pair {
                    old: i - 1,
                    new: j - 1,
                    score: scores[i - 1][j - 1],
                });
                i -= 1;
                j -= 1;
            }
            Move::Up => {
                steps.push(AlignStep::SkipOld(i - 1));
                i -= 1;
            }
            Move::Left => {
                steps.push(AlignStep::SkipNew(j - 1));
                j -= 1;
            }
        }
    }
    steps.reverse();
    Alignment {
        steps,
        total: table[m * width + n],
    }
}

/// A page taking part in a region alignment, with its 0-based position in
/// the region.
#[derive(Debug, Clone, Copy)]
pub struct DpPage<'a> {
    pub features: &'a PageFeatures,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair<T> {
    pub old_index: usize,
    pub new_index: usize,
    pub score: PairScore<T>,
    pub match_type: MatchType,
    pub confidence: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionAlignment<T> {
    pub pairs: Vec<AlignedPair<T>>,
    /// Document indices of pages aligned to gaps.
    pub gap_old: Vec<usize>,
    pub gap_new: Vec<usize>,
    pub total: T,
}

/// Aligns `old` against `new` inside a region of `m x n` pages.
pub fn align_region<T: Scalar>(
    old: &[DpPage<'_>],
    new: &[DpPage<'_>],
    m: usize,
    n: usize,
    cfg: &DpConfig<T>,
) -> RegionAlignment<T> {
    let details: Vec<Vec<PairScore<T>>> = old
        .iter()
        .map(|o| {
            new.iter()
                .map(|nw| pair_score(o.features, nw.features, o.position, nw.position, m, n))
                .collect()
        })
        .collect();
    let totals: Vec<Vec<T>> = details
        .iter()
        .map(|row| row.iter().map(|s| s.total).collect())
        .collect();
    let alignment = align_scores(&totals, new.len(), cfg.gap_penalty);

    let mut out = RegionAlignment {
        pairs: Vec::new(),
        gap_old: Vec::new(),
        gap_new: Vec::new(),
        total: alignment.total,
    };
    for step in &alignment.steps {
        match *step {
            AlignStep::Pair { old: i, new: j, .. } => {
                let score = details[i][j];
                let (match_type, confidence) = cfg.classify(score.total);
                out.pairs.push(AlignedPair {
                    old_index: old[i].features.index,
                    new_index: new[j].features.index,
                    score,
                    match_type,
                    confidence,
                });
            }
            AlignStep::SkipOld(i) => out.gap_old.push(old[i].features.index),
            AlignStep::SkipNew(j) => out.gap_new.push(new[j].features.index),
        }
    }
    out
}

/// A DP-confirmed pair ready for integration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpMatch {
    pub old_index: usize,
    pub new_index: usize,
    pub score: f64,
    pub match_type: MatchType,
    pub confidence: f64,
}

/// Re-aligns the provisional (phase 4-6) pages of a region. The DP decides
/// the pairing; a page's provisional confidence caps the confidence of
/// whatever pair it ends up in.
pub fn resolve_provisional(
    outcome: &RegionOutcome,
    old: &[PageFeatures],
    new: &[PageFeatures],
    cfg: &DpConfig<f64>,
) -> RegionAlignment<f64> {
    let mut old_cap: HashMap<usize, f64> = HashMap::new();
    let mut new_cap: HashMap<usize, f64> = HashMap::new();
    for m in outcome.provisional_matches() {
        old_cap.insert(m.old_index, m.confidence);
        new_cap.insert(m.new_index, m.confidence);
    }
    let mut old_pages: Vec<usize> = old_cap.keys().copied().collect();
    let mut new_pages: Vec<usize> = new_cap.keys().copied().collect();
    old_pages.sort_unstable();
    new_pages.sort_unstable();

    let region = &outcome.region;
    let old_dp: Vec<DpPage> = old_pages
        .iter()
        .map(|&o| DpPage {
            features: &old[o],
            position: o - region.old.start,
        })
        .collect();
    let new_dp: Vec<DpPage> = new_pages
        .iter()
        .map(|&n| DpPage {
            features: &new[n],
            position: n - region.new.start,
        })
        .collect();
    if old_dp.is_empty() || new_dp.is_empty() {
        return RegionAlignment {
            pairs: Vec::new(),
            gap_old: old_pages,
            gap_new: new_pages,
            total: 0.0,
        };
    }
    let mut aligned = align_region(&old_dp, &new_dp, region.old.len(), region.new.len(), cfg);
    for pair in &mut aligned.pairs {
        pair.confidence = pair
            .confidence
            .min(old_cap[&pair.old_index])
            .min(new_cap[&pair.new_index]);
    }
    aligned
}

impl From<&AlignedPair<f64>> for DpMatch {
    fn from(p: &AlignedPair<f64>) -> Self {
        DpMatch {
            old_index: p.old_index,
            new_index: p.new_index,
            score: p.score.total,
            match_type: p.match_type,
            confidence: p.confidence,
        }
    }
}
