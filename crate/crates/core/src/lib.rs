//! Page-level alignment and change detection between two revisions of a
//! multi-page document.
//!
//! Input is a pair of [`DocumentBundle`]s (per-page text, tables and
//! rasters). Pages are fingerprinted, aligned by content hash, refined in
//! the unequal regions by a multi-phase matcher and a global DP alignment,
//! integrated into a one-to-one mapping, and diffed pair by pair.
//!
//! The numeric kernels (similarity ratios, pair scoring, DP alignment and
//! evaluation metrics) are generic over [`Scalar`]; the aliases below fix
//! the precision.

pub mod bundle;
pub mod config;
pub mod consensus;
pub mod diff_engine;
pub mod dp_align;
pub mod eval;
pub mod features;
pub mod fingerprint;
pub mod lcs_align;
pub mod matcher;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod seven_phase;
pub mod types;

pub use bundle::{load_bundle, load_ground_truth, save_bundle, BundleError, DocumentBundle, GroundTruth, PageRecord, TableGrid};
pub use config::EngineConfig;
pub use consensus::{integrate, patch_mode_match, MatchResult, PageMatch};
pub use diff_engine::{diff_pair, DiffConfig, PairDiff};
pub use features::{document_features, PageFeatures};
pub use fingerprint::{fingerprint_page, PageFingerprint};
pub use pipeline::{match_documents, run_variant, Mode, Variant};
pub use report::{build_report, compare, ComparisonReport};
pub use scalar::Scalar;
pub use seven_phase::SevenPhaseConfig;
pub use types::{MatchSource, MatchType};

pub type PairScore = dp_align::PairScore<f64>;
pub type PairScoreF32 = dp_align::PairScore<f32>;
pub type DpConfig = dp_align::DpConfig<f64>;
pub type DpConfigF32 = dp_align::DpConfig<f32>;
pub type Alignment = dp_align::Alignment<f64>;
pub type AlignmentF32 = dp_align::Alignment<f32>;
pub type EvalMetrics = eval::EvalMetrics<f64>;
pub type EvalMetricsF32 = eval::EvalMetrics<f32>;
