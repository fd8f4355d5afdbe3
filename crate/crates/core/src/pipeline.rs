//! End-to-end matching and the evaluation variants.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::DocumentBundle;
use crate::config::EngineConfig;
use crate::consensus::{integrate, patch_mode_match, ConsistencyError, MatchResult, PageMatch, StageOutputs};
use crate::dp_align::{resolve_provisional, DpMatch};
use crate::features::{document_features, PageFeatures};
use crate::fingerprint::DimensionError;
use crate::lcs_align::{replace_regions, sequence_blocks};
use crate::seven_phase::{run_seven_phase, RegionOutcome};
use crate::types::{MatchSource, MatchType};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Pairs page `i` with page `i`.
    Sequential,
    /// Equal blocks of the content-hash alignment only.
    LcsOnly,
    /// Equal blocks plus the multi-phase matcher, without the DP stage.
    SevenPhaseOnly,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Sequential,
        Variant::LcsOnly,
        Variant::SevenPhaseOnly,
        Variant::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Sequential => "sequential",
            Variant::LcsOnly => "lcs_only",
            Variant::SevenPhaseOnly => "seven_phase_only",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Full,
    Patch,
}

/// Intermediate stage outputs of a full run, kept for inspection.
#[derive(Debug, Clone, Default)]
pub struct PipelineTrace {
    pub blocks: Vec<crate::lcs_align::AlignmentBlock>,
    pub outcomes: Vec<RegionOutcome>,
    pub dp: Vec<DpMatch>,
}

fn sequential(m: usize, n: usize) -> MatchResult {
    let k = m.min(n);
    MatchResult {
        matches: (0..k)
            .map(|i| PageMatch {
                old_index: i,
                new_index: i,
                match_type: MatchType::PositionMatch,
                confidence: 0.0,
                source: MatchSource::Sequential,
            })
            .collect(),
        deleted: (k..m).collect(),
        inserted: (k..n).collect(),
        ..MatchResult::default()
    }
}

/// Runs `variant` over precomputed page features.
pub fn match_features(
    old: &[PageFeatures],
    new: &[PageFeatures],
    variant: Variant,
    cfg: &EngineConfig,
) -> Result<(MatchResult, PipelineTrace), PipelineError> {
    if variant == Variant::Sequential {
        return Ok((sequential(old.len(), new.len()), PipelineTrace::default()));
    }
    let old_hashes: Vec<&str> = old.iter().map(|p| p.fingerprint.content_hash.as_str()).collect();
    let new_hashes: Vec<&str> = new.iter().map(|p| p.fingerprint.content_hash.as_str()).collect();
    let blocks = sequence_blocks(&old_hashes, &new_hashes);
    let mut trace = PipelineTrace {
        blocks,
        ..PipelineTrace::default()
    };
    if variant == Variant::LcsOnly {
        let stages = StageOutputs {
            lcs_blocks: &trace.blocks,
            seven_phase: &[],
            dp: Some(&[]),
        };
        let result = integrate(stages, old, new, None)?;
        return Ok((result, trace));
    }

    trace.outcomes = replace_regions(&trace.blocks)
        .into_par_iter()
        .map(|region| run_seven_phase(region, old, new, &cfg.seven_phase))
        .collect();
    let dp = if variant == Variant::Full {
        trace.dp = trace
            .outcomes
            .par_iter()
            .flat_map_iter(|outcome| {
                resolve_provisional(outcome, old, new, &cfg.dp)
                    .pairs
                    .iter()
                    .map(DpMatch::from)
                    .collect::<Vec<_>>()
            })
            .collect();
        Some(trace.dp.as_slice())
    } else {
        None
    };
    let stages = StageOutputs {
        lcs_blocks: &trace.blocks,
        seven_phase: &trace.outcomes,
        dp,
    };
    let result = integrate(stages, old, new, Some(&cfg.seven_phase))?;
    Ok((result, trace))
}

/// Fingerprints both bundles and runs `variant`.
pub fn run_variant(
    old: &DocumentBundle,
    new: &DocumentBundle,
    variant: Variant,
    cfg: &EngineConfig,
) -> Result<MatchResult, PipelineError> {
    let (old_f, new_f) = rayon::join(|| document_features(old), || document_features(new));
    Ok(match_features(&old_f?, &new_f?, variant, cfg)?.0)
}

/// Full-pipeline or patch-mode matching of two bundles.
pub fn match_documents(
    old: &DocumentBundle,
    new: &DocumentBundle,
    mode: Mode,
    cfg: &EngineConfig,
) -> Result<MatchResult, PipelineError> {
    match mode {
        Mode::Full => run_variant(old, new, Variant::Full, cfg),
        Mode::Patch => {
            let (old_f, new_f) = rayon::join(|| document_features(old), || document_features(new));
            Ok(patch_mode_match(&old_f?, &new_f?))
        }
    }
}
