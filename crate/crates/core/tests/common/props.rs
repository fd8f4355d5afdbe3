//! Randomized property checks shared by the property suite and the
//! acceptance harness. Each check runs `cases` generated inputs and returns
//! the first failure, shrunk, as a message.

use std::collections::HashSet;

use image::{DynamicImage, GrayImage};
use pagealign::bundle::TableGrid;
use pagealign::consensus::{integrate, StageOutputs};
use pagealign::diff_engine::{diff_pair, DiffConfig};
use pagealign::dp_align::DpMatch;
use pagealign::fingerprint::{fingerprint_page, normalize_text, HASH_MASK};
use pagealign::lcs_align::{replace_regions, sequence_blocks, AlignmentBlock, Region};
use pagealign::matcher::OpKind;
use pagealign::pipeline::match_features;
use pagealign::seven_phase::{CandidateMatch, Phase, RegionOutcome};
use pagealign::{EngineConfig, MatchType, PageFeatures, PageRecord};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z ]{0,80}",
        "[a-zA-Z0-9 \\-\n]{0,260}",
        "[A-Z]{1,4}[-−]?[0-9]{1,4}[a-z0-9]? [a-z ]{0,60}",
        "[ \t\n\u{3000}]{0,10}[ＡＢＫＯ]{1,2}[－−][１２３]{1,2} [ぁ-んァ-ン一-龥]{0,70}",
    ]
}

fn raster_low() -> impl Strategy<Value = Option<GrayImage>> {
    proptest::option::of(proptest::collection::vec(any::<u8>(), 32 * 32))
        .prop_map(|px| px.map(|px| GrayImage::from_raw(32, 32, px).expect("32x32")))
}

/// Fingerprints are deterministic and respect every length and bit ceiling.
pub fn fingerprint_invariants(cases: u32) -> Result<(), String> {
    let drawing = regex::Regex::new(r"^[A-Z]{1,3}-?[0-9]{1,3}[A-Z0-9]?$").unwrap();
    check(cases, (text(), raster_low()), |(text, raster)| {
        let mut page = PageRecord::from_text(0, text.clone());
        let has_raster = raster.is_some();
        if let Some(r) = raster {
            page = page.with_raster_low(r);
        }
        let a = fingerprint_page(&page).unwrap();
        prop_assert_eq!(&a, &fingerprint_page(&page).unwrap());
        let norm = normalize_text(&text);
        prop_assert_eq!(normalize_text(&norm), norm.clone());

        if page.char_count < 50 {
            prop_assert!(a.content_hash.is_empty());
        } else {
            prop_assert_eq!(a.content_hash.len(), 32);
            prop_assert!(a.content_hash.chars().all(|c| c.is_ascii_hexdigit()));
        }
        prop_assert!(a.section_title.chars().count() <= 80);
        prop_assert_eq!(a.section_title.trim(), a.section_title.as_str());
        prop_assert!(a.drawing_number.is_empty() || drawing.is_match(&a.drawing_number));
        prop_assert_eq!(a.phash.is_some(), has_raster && page.char_count < 200);
        if let Some(h) = a.phash {
            prop_assert_eq!(h & !HASH_MASK, 0);
        }
        Ok(())
    })
}

fn hashes() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(0..6u8, 0..24).prop_map(|v| {
        v.into_iter()
            .map(|k| if k == 0 { String::new() } else { format!("h{k}") })
            .collect()
    })
}

/// Blocks tile both sequences in order, equal blocks hold equal non-empty
/// hashes, and replaying the blocks rebuilds the new sequence.
pub fn block_partition(cases: u32) -> Result<(), String> {
    check(cases, (hashes(), hashes()), |(old, new)| {
        let blocks = sequence_blocks(&old, &new);
        let (mut i, mut j) = (0, 0);
        let mut rebuilt: Vec<&str> = Vec::new();
        let mut prev_equal = false;
        for b in &blocks {
            prop_assert_eq!(b.old.start, i);
            prop_assert_eq!(b.new.start, j);
            match b.kind {
                OpKind::Equal => {
                    prop_assert!(!prev_equal, "equal blocks are coalesced");
                    prop_assert_eq!(b.old.len(), b.new.len());
                    for (o, n) in b.equal_pairs() {
                        prop_assert!(!old[o].is_empty());
                        prop_assert_eq!(&old[o], &new[n]);
                    }
                    rebuilt.extend(old[b.old.clone()].iter().map(String::as_str));
                }
                OpKind::Delete => prop_assert!(b.new.is_empty() && !b.old.is_empty()),
                OpKind::Insert => prop_assert!(b.old.is_empty() && !b.new.is_empty()),
                OpKind::Replace => prop_assert!(!b.old.is_empty() && !b.new.is_empty()),
            }
            if b.kind != OpKind::Equal {
                rebuilt.extend(new[b.new.clone()].iter().map(String::as_str));
            }
            prev_equal = b.kind == OpKind::Equal;
            i = b.old.end;
            j = b.new.end;
        }
        prop_assert_eq!((i, j), (old.len(), new.len()));
        prop_assert_eq!(rebuilt, new.iter().map(String::as_str).collect::<Vec<_>>());

        let equal: Vec<&AlignmentBlock> = blocks.iter().filter(|b| b.kind == OpKind::Equal).collect();
        for r in replace_regions(&blocks) {
            for e in &equal {
                prop_assert!(r.old.end <= e.old.start || e.old.end <= r.old.start);
                prop_assert!(r.new.end <= e.new.start || e.new.end <= r.new.start);
            }
        }
        Ok(())
    })
}

const BODIES: [&str; 6] = [
    "beam schedule for the second floor framing, all members checked",
    "column axial loads summary by storey with reduction factors applied",
    "foundation bearing capacity check for spread footings under wind",
    "slab deflection calculation including creep and shrinkage effects",
    "seismic storey drift verification against the allowable limit",
    "connection design for bolted steel splices at the roof girders",
];

fn blank_raster() -> GrayImage {
    GrayImage::from_fn(32, 32, |x, y| image::Luma([if (x / 5 + y / 3) % 2 == 0 { 230 } else { 30 }]))
}

/// Page of a random document; kinds overlap on purpose so every stage sees
/// exact, near and drawing-number matches, blanks and duplicates.
fn page_of_kind(index: usize, kind: u8) -> PageRecord {
    let text = match kind {
        0..=5 => BODIES[kind as usize].to_owned(),
        6 => BODIES[0].replace("second", "third"),
        7 => "A-01 plan view".to_owned(),
        8 => "A-01 plan view revised".to_owned(),
        9 | 12 => String::new(),
        10 => "short note".to_owned(),
        11 => BODIES[1].replace("storey", "level"),
        _ => format!("{} and {}", BODIES[2], BODIES[3]),
    };
    let page = PageRecord::from_text(index, text);
    if kind == 12 {
        page.with_raster_low(blank_raster())
    } else {
        page
    }
}

pub fn random_document() -> impl Strategy<Value = Vec<PageFeatures>> {
    proptest::collection::vec(0..14u8, 0..14).prop_map(|kinds| {
        kinds
            .into_iter()
            .enumerate()
            .map(|(i, k)| PageFeatures::from_page(&page_of_kind(i, k)).unwrap())
            .collect()
    })
}

/// Keeps the first pair for each old and each new index.
fn one_to_one(pairs: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let (mut olds, mut news) = (HashSet::new(), HashSet::new());
    pairs
        .into_iter()
        .filter(|&(o, n)| olds.insert(o) && news.insert(n))
        .collect()
}

fn stage_pairs(m: usize, n: usize) -> BoxedStrategy<Vec<(usize, usize)>> {
    if m == 0 || n == 0 {
        return Just(Vec::new()).boxed();
    }
    proptest::collection::vec((0..m, 0..n), 0..m.max(n) + 2)
        .prop_map(one_to_one)
        .boxed()
}

const PHASES: [Phase; 6] = [
    Phase::ExactHash,
    Phase::DrawingNumber,
    Phase::SectionTitle,
    Phase::PageShift,
    Phase::TextSimilarity,
    Phase::PositionInterpolation,
];

/// Every old and new page lands in exactly one category, whether the
/// stage outputs come from the real pipeline or are arbitrary.
pub fn one_to_one_matches(cases: u32) -> Result<(), String> {
    check(cases / 2, (random_document(), random_document()), |(old, new)| {
        for variant in pagealign::Variant::ALL {
            let (r, _) = match_features(&old, &new, variant, &EngineConfig::default()).unwrap();
            r.check_partition(old.len(), new.len()).map_err(TestCaseError::fail)?;
        }
        let r = pagealign::patch_mode_match(&old, &new);
        r.check_partition(old.len(), new.len()).map_err(TestCaseError::fail)?;
        prop_assert!(r.deleted.is_empty());
        Ok(())
    })?;

    let stages = (1..12usize, 1..12usize).prop_flat_map(|(m, n)| {
        (
            Just((m, n)),
            stage_pairs(m, n),
            stage_pairs(m, n),
            proptest::collection::vec(0..6usize, 12),
            stage_pairs(m, n),
        )
    });
    check(cases - cases / 2, stages, |((m, n), lcs, seven, phases, dp)| {
        let old: Vec<PageFeatures> = (0..m).map(|i| PageFeatures::from_page(&page_of_kind(i, (i % 14) as u8)).unwrap()).collect();
        let new: Vec<PageFeatures> = (0..n).map(|i| PageFeatures::from_page(&page_of_kind(i, (i % 13) as u8)).unwrap()).collect();
        let blocks: Vec<AlignmentBlock> = lcs
            .iter()
            .map(|&(o, n)| AlignmentBlock {
                kind: OpKind::Equal,
                old: o..o + 1,
                new: n..n + 1,
            })
            .collect();
        let outcome = RegionOutcome {
            region: Region::new(0..m, 0..n),
            matches: seven
                .iter()
                .zip(phases.iter().cycle())
                .map(|(&(o, n), &p)| CandidateMatch {
                    old_index: o,
                    new_index: n,
                    phase: PHASES[p],
                    confidence: 0.5,
                    match_type: MatchType::TextSimilar,
                })
                .collect(),
            shift: None,
            unmatched_old: vec![],
            unmatched_new: vec![],
        };
        let dp: Vec<DpMatch> = dp
            .iter()
            .map(|&(o, n)| DpMatch {
                old_index: o,
                new_index: n,
                score: 0.3,
                match_type: MatchType::ContentSimilar,
                confidence: 0.3,
            })
            .collect();
        for dp in [Some(dp.as_slice()), None] {
            let stages = StageOutputs {
                lcs_blocks: &blocks,
                seven_phase: std::slice::from_ref(&outcome),
                dp,
            };
            let r = integrate(stages, &old, &new, Some(&Default::default())).unwrap();
            r.check_partition(m, n).map_err(TestCaseError::fail)?;
            for &(o, nw) in &lcs {
                prop_assert!(r.pairs().any(|p| p == (o, nw)), "equal-block pair kept");
            }
        }
        Ok(())
    })
}

fn tables() -> impl Strategy<Value = Vec<TableGrid>> {
    proptest::collection::vec(
        proptest::collection::vec(proptest::collection::vec("[ a-z0-9]{0,5}", 0..4), 0..4).prop_map(TableGrid::new),
        0..3,
    )
}

fn raster_high() -> impl Strategy<Value = Option<DynamicImage>> {
    proptest::option::of((1..40u32, 1..40u32).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), (w * h) as usize)
            .prop_map(move |px| DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, px).unwrap()))
    }))
}

/// Diffing a page against itself reports nothing in any layer.
pub fn diff_identity_silence(cases: u32) -> Result<(), String> {
    check(cases, ("(?s).{0,120}", tables(), raster_high()), |(text, tables, raster)| {
        let mut page = PageRecord::from_text(0, text).with_tables(tables);
        let has_raster = raster.is_some();
        if let Some(r) = raster {
            page = page.with_raster_high(r);
        }
        let d = diff_pair(&page, &page, &DiffConfig::default());
        prop_assert!(d.is_empty());
        prop_assert_eq!(d.visual.is_some(), has_raster);
        if let Some(v) = d.visual {
            prop_assert_eq!(v.changed_pixel_fraction, 0.0);
        }
        Ok(())
    })
}

/// Random features with small key vocabularies so bonuses fire often.
pub fn random_features() -> impl Strategy<Value = PageFeatures> {
    (
        "[ab c]{0,14}",
        0..3usize,
        0..4usize,
        0..3usize,
        proptest::option::of(any::<u64>()),
    )
        .prop_map(|(text, h, d, t, phash)| {
            let normalized: Vec<char> = text.chars().collect();
            PageFeatures {
                index: 0,
                char_count: normalized.len(),
                normalized,
                fingerprint: pagealign::PageFingerprint {
                    content_hash: ["", "h1", "h2"][h].to_owned(),
                    drawing_number: ["", "A-1", "A-12", "B-3"][d].to_owned(),
                    section_title: ["", "t1", "t2"][t].to_owned(),
                    phash: phash.map(|p| p & HASH_MASK),
                },
            }
        })
}

/// Best total over every monotone alignment, by exhaustive recursion.
pub fn brute_force_total(scores: &[Vec<f64>], n: usize, gap: f64, i: usize, j: usize) -> f64 {
    let m = scores.len();
    if i == m && j == n {
        return 0.0;
    }
    let mut best = f64::NEG_INFINITY;
    if i < m && j < n {
        best = best.max(scores[i][j] + brute_force_total(scores, n, gap, i + 1, j + 1));
    }
    if i < m {
        best = best.max(gap + brute_force_total(scores, n, gap, i + 1, j));
    }
    if j < n {
        best = best.max(gap + brute_force_total(scores, n, gap, i, j + 1));
    }
    best
}

pub fn region() -> impl Strategy<Value = (Vec<PageFeatures>, Vec<PageFeatures>)> {
    (
        proptest::collection::vec(random_features(), 0..=6),
        proptest::collection::vec(random_features(), 0..=6),
    )
}

/// DP total equals the exhaustive optimum and its pairs are strictly
/// increasing in both coordinates.
pub fn dp_matches_brute_force(cases: u32) -> Result<(), String> {
    use pagealign::dp_align::{align_region, pair_score, DpPage};
    check(cases, region(), |(old, new)| {
        let (m, n) = (old.len(), new.len());
        let scores: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..n).map(|j| pair_score::<f64>(&old[i], &new[j], i, j, m, n).total).collect())
            .collect();
        let cfg = pagealign::DpConfig::default();
        let dp_old: Vec<DpPage> = old.iter().enumerate().map(|(i, f)| DpPage { features: f, position: i }).collect();
        let dp_new: Vec<DpPage> = new.iter().enumerate().map(|(j, f)| DpPage { features: f, position: j }).collect();
        let aligned = align_region(&dp_old, &dp_new, m.max(1), n.max(1), &cfg);
        let oracle = brute_force_total(&scores, n, cfg.gap_penalty, 0, 0);
        prop_assert!((aligned.total - oracle).abs() <= 1e-9, "dp {} vs oracle {}", aligned.total, oracle);
        let a = pagealign::dp_align::align_scores(&scores, n, cfg.gap_penalty);
        let pairs: Vec<(usize, usize)> = a.pairs().map(|(i, j, _)| (i, j)).collect();
        for w in pairs.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        let gaps = a.steps.len() - pairs.len();
        prop_assert_eq!(2 * pairs.len() + gaps, m + n);
        Ok(())
    })
}
