//! Multi-phase page matching inside one replace region.
//!
//! Phases run in a fixed order and each only sees pages that are still
//! unmatched in the region:
//!
//! 1. exact content hash (1.0)
//! 2. exact drawing number (0.9)
//! 3. exact section title (0.8)
//! 4. page-shift voting over diagonals (0.85)
//! 5. greedy text similarity (similarity, capped at 0.85)
//! 6. similarity near the position interpolated between anchors
//! 7. residual classification
//!
//! Phases 1-3 are final. Phases 4-6 are provisional and are re-examined by
//! the DP stage. The visual rematch ([`visual_rematch`]) runs once over the
//! global residual pools after integration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::features::PageFeatures;
use crate::fingerprint::phash_similarity;
use crate::lcs_align::Region;
use crate::types::{at_least, MatchType};

const EXACT_HASH_CONFIDENCE: f64 = 1.0;
const DRAWING_CONFIDENCE: f64 = 0.9;
const TITLE_CONFIDENCE: f64 = 0.8;
const SHIFT_CONFIDENCE: f64 = 0.85;
const TEXT_CONFIDENCE_CAP: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "1")]
    ExactHash,
    #[serde(rename = "2")]
    DrawingNumber,
    #[serde(rename = "3")]
    SectionTitle,
    #[serde(rename = "4")]
    PageShift,
    #[serde(rename = "5")]
    TextSimilarity,
    #[serde(rename = "6")]
    PositionInterpolation,
    #[serde(rename = "7.5")]
    VisualRematch,
}

impl Phase {
    /// Final phases bypass the DP stage.
    pub fn is_final(self) -> bool {
        self <= Phase::SectionTitle
    }

    pub fn is_provisional(self) -> bool {
        matches!(
            self,
            Phase::PageShift | Phase::TextSimilarity | Phase::PositionInterpolation
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateMatch {
    pub old_index: usize,
    pub new_index: usize,
    pub phase: Phase,
    pub confidence: f64,
    pub match_type: MatchType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SevenPhaseConfig {
    /// Text-similarity threshold for phases 4 and 5.
    pub tau_s: f64,
    /// Fraction of `min(m_b, n_b)` votes a page shift needs.
    pub shift_fraction: f64,
    pub shift_min_votes: usize,
    pub adjacency_max_d: usize,
    pub adjacency_accept: f64,
    pub phash_accept: f64,
}

impl Default for SevenPhaseConfig {
    fn default() -> Self {
        Self {
            tau_s: 0.5,
            shift_fraction: 0.30,
            shift_min_votes: 2,
            adjacency_max_d: 3,
            adjacency_accept: 0.3,
            phash_accept: 0.45,
        }
    }
}

impl SevenPhaseConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = [
            ("tau_s", self.tau_s),
            ("shift_fraction", self.shift_fraction),
            ("adjacency_accept", self.adjacency_accept),
            ("phash_accept", self.phash_accept),
        ];
        for (name, value) in unit {
            if !(0.0..=1.0).contains(&value) {
                return Err(format!("{name} must lie in [0, 1], got {value}"));
            }
        }
        if self.shift_min_votes == 0 {
            return Err("shift_min_votes must be at least 1".into());
        }
        Ok(())
    }

    fn shift_vote_threshold(&self, m_b: usize, n_b: usize) -> usize {
        let fraction = self.shift_fraction * m_b.min(n_b) as f64;
        // Guard against 0.3 * 10 = 3.0000000000000004 rounding up to 4.
        let needed = (fraction - 1e-9).ceil().max(0.0) as usize;
        needed.max(self.shift_min_votes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactKey {
    ContentHash,
    DrawingNumber,
    SectionTitle,
}

impl ExactKey {
    fn value(self, page: &PageFeatures) -> &str {
        match self {
            ExactKey::ContentHash => &page.fingerprint.content_hash,
            ExactKey::DrawingNumber => &page.fingerprint.drawing_number,
            ExactKey::SectionTitle => &page.fingerprint.section_title,
        }
    }

    fn phase(self) -> (Phase, MatchType, f64) {
        match self {
            ExactKey::ContentHash => (Phase::ExactHash, MatchType::ExactHash, EXACT_HASH_CONFIDENCE),
            ExactKey::DrawingNumber => {
                (Phase::DrawingNumber, MatchType::DrawingNumber, DRAWING_CONFIDENCE)
            }
            ExactKey::SectionTitle => (Phase::SectionTitle, MatchType::SectionTitle, TITLE_CONFIDENCE),
        }
    }
}

/// Result of running phases 1-7 over one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionOutcome {
    pub region: Region,
    pub matches: Vec<CandidateMatch>,
    /// Page shift adopted by phase 4, if any.
    pub shift: Option<isize>,
    pub unmatched_old: Vec<usize>,
    pub unmatched_new: Vec<usize>,
}

impl RegionOutcome {
    pub fn final_matches(&self) -> impl Iterator<Item = &CandidateMatch> {
        self.matches.iter().filter(|m| m.phase.is_final())
    }

    pub fn provisional_matches(&self) -> impl Iterator<Item = &CandidateMatch> {
        self.matches.iter().filter(|m| m.phase.is_provisional())
    }
}

/// Matching state for one region. Page indices in and out are document
/// indices; `old` and `new` are whole-document feature slices.
pub struct RegionMatcher<'a> {
    region: Region,
    old: &'a [PageFeatures],
    new: &'a [PageFeatures],
    cfg: &'a SevenPhaseConfig,
    old_used: Vec<bool>,
    new_used: Vec<bool>,
    sims: Vec<f64>,
    matches: Vec<CandidateMatch>,
}

impl<'a> RegionMatcher<'a> {
    pub fn new(
        region: Region,
        old: &'a [PageFeatures],
        new: &'a [PageFeatures],
        cfg: &'a SevenPhaseConfig,
    ) -> Self {
        let (m_b, n_b) = (region.old.len(), region.new.len());
        Self {
            region,
            old,
            new,
            cfg,
            old_used: vec![false; m_b],
            new_used: vec![false; n_b],
            sims: vec![f64::NAN; m_b * n_b],
            matches: Vec::new(),
        }
    }

    pub fn matches(&self) -> &[CandidateMatch] {
        &self.matches
    }

    fn unmatched_old(&self) -> impl Iterator<Item = usize> + '_ {
        self.region.old.clone().filter(|&o| !self.old_used[o - self.region.old.start])
    }

    fn unmatched_new(&self) -> impl Iterator<Item = usize> + '_ {
        self.region.new.clone().filter(|&n| !self.new_used[n - self.region.new.start])
    }

    fn is_free(&self, o: usize, n: usize) -> bool {
        !self.old_used[o - self.region.old.start] && !self.new_used[n - self.region.new.start]
    }

    /// Memoized text similarity for a pair of region pages.
    fn similarity(&mut self, o: usize, n: usize) -> f64 {
        let slot = (o - self.region.old.start) * self.region.new.len() + (n - self.region.new.start);
        if self.sims[slot].is_nan() {
            self.sims[slot] = self.old[o].text_similarity(&self.new[n]);
        }
        self.sims[slot]
    }

    fn accept(&mut self, m: CandidateMatch) {
        self.old_used[m.old_index - self.region.old.start] = true;
        self.new_used[m.new_index - self.region.new.start] = true;
        self.matches.push(m);
    }

    /// Greedy one-to-one selection over `(old, new, score)` candidates, best
    /// score first, ties by smaller old then smaller new index.
    fn accept_greedy(
        &mut self,
        mut candidates: Vec<(usize, usize, f64)>,
        make: impl Fn(usize, usize, f64) -> CandidateMatch,
    ) -> Vec<CandidateMatch> {
        sort_candidates(&mut candidates);
        let mut accepted = Vec::new();
        for (o, n, score) in candidates {
            if self.is_free(o, n) {
                let m = make(o, n, score);
                self.accept(m.clone());
                accepted.push(m);
            }
        }
        accepted
    }

    /// Phases 1-3: pairs pages whose selected key is equal and non-empty.
    /// Repeated key values pair up in document order.
    pub fn match_exact_keys(&mut self, key: ExactKey) -> Vec<CandidateMatch> {
        let (phase, match_type, confidence) = key.phase();
        let mut by_value: HashMap<&str, Vec<usize>> = HashMap::new();
        let unmatched_new: Vec<usize> = self.unmatched_new().collect();
        for &n in unmatched_new.iter().rev() {
            let value = key.value(&self.new[n]);
            if !value.is_empty() {
                by_value.entry(value).or_default().push(n);
            }
        }
        let mut accepted = Vec::new();
        let unmatched_old: Vec<usize> = self.unmatched_old().collect();
        for o in unmatched_old {
            let value = key.value(&self.old[o]);
            if value.is_empty() {
                continue;
            }
            // Stacks were filled in reverse, so pop yields document order.
            if let Some(n) = by_value.get_mut(value).and_then(Vec::pop) {
                accepted.push(CandidateMatch {
                    old_index: o,
                    new_index: n,
                    phase,
                    confidence,
                    match_type,
                });
            }
        }
        for m in &accepted {
            self.accept(m.clone());
        }
        accepted
    }

    /// Phase 4: vote for a constant offset between region positions.
    pub fn detect_page_shift(&mut self) -> Option<(isize, Vec<CandidateMatch>)> {
        let (m_b, n_b) = (self.region.old.len(), self.region.new.len());
        if m_b == 0 || n_b == 0 {
            return None;
        }
        let tau = self.cfg.tau_s;
        let mut best: Option<(isize, Vec<(usize, usize)>)> = None;
        for delta in -((m_b / 2) as isize)..=(n_b / 2) as isize {
            let mut pairs = Vec::new();
            for i in 0..m_b {
                let j = i as isize + delta;
                if j < 0 || j >= n_b as isize {
                    continue;
                }
                let (o, n) = (self.region.old.start + i, self.region.new.start + j as usize);
                if self.is_free(o, n) && at_least(self.similarity(o, n), tau) {
                    pairs.push((o, n));
                }
            }
            let better = match &best {
                None => true,
                Some((best_delta, best_pairs)) => {
                    (pairs.len(), std::cmp::Reverse(delta.abs()), std::cmp::Reverse(delta))
                        > (
                            best_pairs.len(),
                            std::cmp::Reverse(best_delta.abs()),
                            std::cmp::Reverse(*best_delta),
                        )
                }
            };
            if better {
                best = Some((delta, pairs));
            }
        }
        let (delta, pairs) = best?;
        if pairs.len() < self.cfg.shift_vote_threshold(m_b, n_b) {
            return None;
        }
        let accepted: Vec<CandidateMatch> = pairs
            .into_iter()
            .map(|(o, n)| CandidateMatch {
                old_index: o,
                new_index: n,
                phase: Phase::PageShift,
                confidence: SHIFT_CONFIDENCE,
                match_type: MatchType::PageShift,
            })
            .collect();
        for m in &accepted {
            self.accept(m.clone());
        }
        Some((delta, accepted))
    }

    /// Phase 5: greedy assignment over pairs with similarity >= tau_s.
    pub fn match_text_similarity(&mut self) -> Vec<CandidateMatch> {
        let olds: Vec<usize> = self.unmatched_old().collect();
        let news: Vec<usize> = self.unmatched_new().collect();
        let mut candidates = Vec::new();
        for &o in &olds {
            for &n in &news {
                let sim = self.similarity(o, n);
                if at_least(sim, self.cfg.tau_s) {
                    candidates.push((o, n, sim));
                }
            }
        }
        self.accept_greedy(candidates, |o, n, sim| CandidateMatch {
            old_index: o,
            new_index: n,
            phase: Phase::TextSimilarity,
            confidence: sim.min(TEXT_CONFIDENCE_CAP),
            match_type: MatchType::TextSimilar,
        })
    }

    /// Anchors bounding the region plus every pair matched in it so far,
    /// as signed `(old, new)` positions sorted by old index.
    fn anchors(&self) -> Vec<(isize, isize)> {
        let mut anchors = vec![
            (self.region.old.start as isize - 1, self.region.new.start as isize - 1),
            (self.region.old.end as isize, self.region.new.end as isize),
        ];
        anchors.extend(
            self.matches
                .iter()
                .map(|m| (m.old_index as isize, m.new_index as isize)),
        );
        anchors.sort_unstable();
        anchors
    }

    /// New-document position expected for old page `o`, interpolated
    /// linearly between the nearest anchors on either side.
    pub fn expected_position(&self, o: usize) -> f64 {
        let o = o as isize;
        let anchors = self.anchors();
        let lo = anchors.iter().rev().find(|a| a.0 < o).copied().unwrap_or(anchors[0]);
        let hi = anchors.iter().find(|a| a.0 > o).copied().unwrap_or(anchors[anchors.len() - 1]);
        if hi.0 == lo.0 {
            return lo.1 as f64;
        }
        lo.1 as f64 + (o - lo.0) as f64 * (hi.1 - lo.1) as f64 / (hi.0 - lo.0) as f64
    }

    /// Phase 6: similarity decayed by distance from the expected position.
    pub fn match_position_interpolation(&mut self) -> Vec<CandidateMatch> {
        let olds: Vec<usize> = self.unmatched_old().collect();
        let news: Vec<usize> = self.unmatched_new().collect();
        let mut candidates = Vec::new();
        for &o in &olds {
            let expected = self.expected_position(o).round();
            for &n in &news {
                let d = (n as f64 - expected).abs();
                if d > self.cfg.adjacency_max_d as f64 {
                    continue;
                }
                let adjusted = adjacency_score(self.similarity(o, n), d as usize);
                if at_least(adjusted, self.cfg.adjacency_accept) {
                    candidates.push((o, n, adjusted));
                }
            }
        }
        self.accept_greedy(candidates, |o, n, adjusted| CandidateMatch {
            old_index: o,
            new_index: n,
            phase: Phase::PositionInterpolation,
            confidence: adjusted.clamp(0.0, 1.0),
            match_type: MatchType::PositionInterp,
        })
    }

    /// Phase 7: everything still unmatched, as `(deleted old, inserted new)`.
    pub fn classify_residuals(&self) -> (Vec<usize>, Vec<usize>) {
        (self.unmatched_old().collect(), self.unmatched_new().collect())
    }

    pub fn into_outcome(self, shift: Option<isize>) -> RegionOutcome {
        let (unmatched_old, unmatched_new) = self.classify_residuals();
        RegionOutcome {
            region: self.region,
            matches: self.matches,
            shift,
            unmatched_old,
            unmatched_new,
        }
    }
}

/// `similarity * (1 - 0.1 d)`.
pub fn adjacency_score(similarity: f64, d: usize) -> f64 {
    similarity * (1.0 - 0.1 * d as f64)
}

fn sort_candidates(candidates: &mut [(usize, usize, f64)]) {
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
}

/// Runs phases 1 through 7 over `region`.
pub fn run_seven_phase(
    region: Region,
    old: &[PageFeatures],
    new: &[PageFeatures],
    cfg: &SevenPhaseConfig,
) -> RegionOutcome {
    let mut matcher = RegionMatcher::new(region, old, new, cfg);
    matcher.match_exact_keys(ExactKey::ContentHash);
    matcher.match_exact_keys(ExactKey::DrawingNumber);
    matcher.match_exact_keys(ExactKey::SectionTitle);
    let shift = matcher.detect_page_shift().map(|(delta, _)| delta);
    matcher.match_text_similarity();
    matcher.match_position_interpolation();
    matcher.into_outcome(shift)
}

/// Phase 7.5: greedy pHash pairing of residual pages. Pages without a
/// perceptual hash do not participate.
pub fn visual_rematch(
    unmatched_old: &[usize],
    unmatched_new: &[usize],
    old: &[PageFeatures],
    new: &[PageFeatures],
    cfg: &SevenPhaseConfig,
) -> Vec<CandidateMatch> {
    let mut candidates = Vec::new();
    for &o in unmatched_old {
        let Some(a) = old[o].fingerprint.phash else { continue };
        for &n in unmatched_new {
            let Some(b) = new[n].fingerprint.phash else { continue };
            let sim: f64 = phash_similarity(a, b);
            if at_least(sim, cfg.phash_accept) {
                candidates.push((o, n, sim));
            }
        }
    }
    sort_candidates(&mut candidates);
    let mut old_used = std::collections::HashSet::new();
    let mut new_used = std::collections::HashSet::new();
    candidates
        .into_iter()
        .filter(|&(o, n, _)| {
            if old_used.contains(&o) || new_used.contains(&n) {
                return false;
            }
            old_used.insert(o);
            new_used.insert(n);
            true
        })
        .map(|(o, n, sim)| CandidateMatch {
            old_index: o,
            new_index: n,
            phase: Phase::VisualRematch,
            confidence: sim,
            match_type: MatchType::ContentSimilar,
        })
        .collect()
}
