//! Integration of the stage outputs into one one-to-one page mapping, and
//! the lenient patch-mode matcher.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::dp_align::DpMatch;
use crate::features::PageFeatures;
use crate::lcs_align::AlignmentBlock;
use crate::seven_phase::{visual_rematch, RegionOutcome, SevenPhaseConfig};
use crate::types::{MatchSource, MatchType};

const PATCH_DRAWING_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageMatch {
    pub old_index: usize,
    pub new_index: usize,
    pub match_type: MatchType,
    pub confidence: f64,
    pub source: MatchSource,
}

/// Final mapping between two documents.
///
/// Every old page appears exactly once in `matches`, `deleted`, `orphans`
/// or `blank_old`; every new page exactly once in `matches`, `inserted` or
/// `blank_new`. The blank lists hold unmatched pages that carry no usable
/// evidence (no content hash, drawing number or perceptual hash): they can
/// be neither matched nor meaningfully called deleted or inserted.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    /// Sorted by old index.
    pub matches: Vec<PageMatch>,
    pub inserted: Vec<usize>,
    pub deleted: Vec<usize>,
    /// Unmatched old pages in patch mode; never populated in full mode.
    pub orphans: Vec<usize>,
    pub blank_old: Vec<usize>,
    pub blank_new: Vec<usize>,
}

impl MatchResult {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.matches.iter().map(|m| (m.old_index, m.new_index))
    }

    /// Checks the partition invariants for documents of `m` and `n` pages.
    pub fn check_partition(&self, m: usize, n: usize) -> Result<(), String> {
        let mut old_seen = vec![0u32; m];
        let mut new_seen = vec![0u32; n];
        let mark = |seen: &mut Vec<u32>, i: usize, side: &str| {
            match seen.get_mut(i) {
                Some(c) => *c += 1,
                None => return Err(format!("{side} index {i} out of range")),
            }
            Ok(())
        };
        for p in &self.matches {
            mark(&mut old_seen, p.old_index, "old")?;
            mark(&mut new_seen, p.new_index, "new")?;
        }
        for &o in self.deleted.iter().chain(&self.orphans).chain(&self.blank_old) {
            mark(&mut old_seen, o, "old")?;
        }
        for &n in self.inserted.iter().chain(&self.blank_new) {
            mark(&mut new_seen, n, "new")?;
        }
        if let Some(o) = old_seen.iter().position(|&c| c != 1) {
            return Err(format!("old page {o} appears {} times", old_seen[o]));
        }
        if let Some(n) = new_seen.iter().position(|&c| c != 1) {
            return Err(format!("new page {n} appears {} times", new_seen[n]));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsistencyError {
    #[error("{stage} pairs {side} page {index} more than once")]
    DuplicateIndex {
        stage: &'static str,
        side: &'static str,
        index: usize,
    },
    #[error("{stage} references {side} page {index}, past the end of the document")]
    OutOfRange {
        stage: &'static str,
        side: &'static str,
        index: usize,
    },
}

/// Accumulates matches in precedence order; a later candidate touching an
/// already-used page is dropped.
struct Ledger {
    old_used: Vec<bool>,
    new_used: Vec<bool>,
    matches: Vec<PageMatch>,
}

impl Ledger {
    fn new(m: usize, n: usize) -> Self {
        Self {
            old_used: vec![false; m],
            new_used: vec![false; n],
            matches: Vec::new(),
        }
    }

    /// Verifies one stage's candidates are in range and one-to-one, then
    /// admits the non-conflicting ones.
    fn admit_stage(&mut self, stage: &'static str, candidates: Vec<PageMatch>) -> Result<(), ConsistencyError> {
        let mut old_seen = vec![false; self.old_used.len()];
        let mut new_seen = vec![false; self.new_used.len()];
        for c in &candidates {
            for (side, index, seen) in [
                ("old", c.old_index, &mut old_seen),
                ("new", c.new_index, &mut new_seen),
            ] {
                match seen.get_mut(index) {
                    None => return Err(ConsistencyError::OutOfRange { stage, side, index }),
                    Some(true) => return Err(ConsistencyError::DuplicateIndex { stage, side, index }),
                    Some(slot) => *slot = true,
                }
            }
        }
        for c in candidates {
            if !self.old_used[c.old_index] && !self.new_used[c.new_index] {
                self.old_used[c.old_index] = true;
                self.new_used[c.new_index] = true;
                self.matches.push(c);
            }
        }
        Ok(())
    }

    fn unmatched_old(&self) -> Vec<usize> {
        (0..self.old_used.len()).filter(|&o| !self.old_used[o]).collect()
    }

    fn unmatched_new(&self) -> Vec<usize> {
        (0..self.new_used.len()).filter(|&n| !self.new_used[n]).collect()
    }
}

/// Stage outputs handed to [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct StageOutputs<'a> {
    pub lcs_blocks: &'a [AlignmentBlock],
    pub seven_phase: &'a [RegionOutcome],
    /// `None` when the DP stage did not run; provisional seven-phase matches
    /// are then integrated as they are.
    pub dp: Option<&'a [DpMatch]>,
}

/// Three-step integration: LCS equal blocks, then seven-phase final
/// matches, then DP (or provisional) matches. When `visual` is given, the
/// perceptual-hash rematch runs over the remaining pools before residual
/// classification.
pub fn integrate(
    stages: StageOutputs<'_>,
    old: &[PageFeatures],
    new: &[PageFeatures],
    visual: Option<&SevenPhaseConfig>,
) -> Result<MatchResult, ConsistencyError> {
    let mut ledger = Ledger::new(old.len(), new.len());

    let lcs = stages
        .lcs_blocks
        .iter()
        .flat_map(AlignmentBlock::equal_pairs)
        .map(|(o, n)| PageMatch {
            old_index: o,
            new_index: n,
            match_type: MatchType::ExactHash,
            confidence: 1.0,
            source: MatchSource::Lcs,
        })
        .collect();
    ledger.admit_stage("LCS", lcs)?;

    let candidate = |c: &crate::seven_phase::CandidateMatch| PageMatch {
        old_index: c.old_index,
        new_index: c.new_index,
        match_type: c.match_type,
        confidence: c.confidence,
        source: MatchSource::SevenPhase,
    };
    let finals = stages
        .seven_phase
        .iter()
        .flat_map(RegionOutcome::final_matches)
        .map(candidate)
        .collect();
    ledger.admit_stage("seven-phase", finals)?;

    let refined = match stages.dp {
        Some(dp) => dp
            .iter()
            .map(|d| PageMatch {
                old_index: d.old_index,
                new_index: d.new_index,
                match_type: d.match_type,
                confidence: d.confidence,
                source: MatchSource::Dp,
            })
            .collect(),
        None => stages
            .seven_phase
            .iter()
            .flat_map(RegionOutcome::provisional_matches)
            .map(candidate)
            .collect(),
    };
    ledger.admit_stage("DP", refined)?;

    if let Some(cfg) = visual {
        let rematched = visual_rematch(&ledger.unmatched_old(), &ledger.unmatched_new(), old, new, cfg)
            .iter()
            .map(candidate)
            .collect();
        ledger.admit_stage("visual rematch", rematched)?;
    }

    let mut result = MatchResult::default();
    for o in ledger.unmatched_old() {
        if old[o].fingerprint.is_blank() {
            result.blank_old.push(o);
        } else {
            result.deleted.push(o);
        }
    }
    for n in ledger.unmatched_new() {
        if new[n].fingerprint.is_blank() {
            result.blank_new.push(n);
        } else {
            result.inserted.push(n);
        }
    }
    result.matches = ledger.matches;
    result.matches.sort_by_key(|m| m.old_index);
    Ok(result)
}

/// Pairs pages sharing a non-empty key, in document order for repeated keys.
fn pair_by_key(
    ledger: &mut Ledger,
    old: &[PageFeatures],
    new: &[PageFeatures],
    key: fn(&PageFeatures) -> &str,
    make: impl Fn(usize, usize) -> PageMatch,
) {
    let mut by_value: HashMap<&str, Vec<usize>> = HashMap::new();
    for n in ledger.unmatched_new().into_iter().rev() {
        let value = key(&new[n]);
        if !value.is_empty() {
            by_value.entry(value).or_default().push(n);
        }
    }
    for o in ledger.unmatched_old() {
        let value = key(&old[o]);
        if value.is_empty() {
            continue;
        }
        if let Some(n) = by_value.get_mut(value).and_then(Vec::pop) {
            ledger.old_used[o] = true;
            ledger.new_used[n] = true;
            ledger.matches.push(make(o, n));
        }
    }
}

/// Matching for partial updates: drawing numbers first (0.95), then exact
/// content hashes. Unmatched old pages become orphans, never deletions.
pub fn patch_mode_match(old: &[PageFeatures], new: &[PageFeatures]) -> MatchResult {
    let mut ledger = Ledger::new(old.len(), new.len());
    pair_by_key(&mut ledger, old, new, |p| &p.fingerprint.drawing_number, |o, n| PageMatch {
        old_index: o,
        new_index: n,
        match_type: MatchType::DrawingNumber,
        confidence: PATCH_DRAWING_CONFIDENCE,
        source: MatchSource::Patch,
    });
    pair_by_key(&mut ledger, old, new, |p| &p.fingerprint.content_hash, |o, n| PageMatch {
        old_index: o,
        new_index: n,
        match_type: MatchType::ExactHash,
        confidence: 1.0,
        source: MatchSource::Patch,
    });
    let mut result = MatchResult {
        orphans: ledger.unmatched_old(),
        inserted: ledger.unmatched_new(),
        ..MatchResult::default()
    };
    result.matches = ledger.matches;
    result.matches.sort_by_key(|m| m.old_index);
    result
}
