use serde::{Deserialize, Serialize};

/// How a page pair was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchType {
    ExactHash,
    DrawingNumber,
    SectionTitle,
    PageShift,
    TextSimilar,
    PositionInterp,
    ContentSimilar,
    PositionMatch,
}

impl MatchType {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchType::ExactHash => "ExactHash",
            MatchType::DrawingNumber => "DrawingNumber",
            MatchType::SectionTitle => "SectionTitle",
            MatchType::PageShift => "PageShift",
            MatchType::TextSimilar => "TextSimilar",
            MatchType::PositionInterp => "PositionInterp",
            MatchType::ContentSimilar => "ContentSimilar",
            MatchType::PositionMatch => "PositionMatch",
        }
    }
}

/// Pipeline stage that contributed a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatchSource {
    #[serde(rename = "LCS")]
    Lcs,
    SevenPhase,
    #[serde(rename = "DP")]
    Dp,
    Patch,
    /// Positional baseline; carries no matching evidence.
    Sequential,
}

impl MatchSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchSource::Lcs => "LCS",
            MatchSource::SevenPhase => "SevenPhase",
            MatchSource::Dp => "DP",
            MatchSource::Patch => "Patch",
            MatchSource::Sequential => "Sequential",
        }
    }
}

/// Threshold comparisons tolerate this much floating-point error.
pub(crate) const SCORE_EPS: f64 = 1e-9;

pub(crate) fn at_least(value: f64, threshold: f64) -> bool {
    value >= threshold - SCORE_EPS
}
