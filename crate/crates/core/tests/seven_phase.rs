mod common;

use common::{features, pair1, text_features};
use pagealign::fingerprint::HASH_MASK;
use pagealign::lcs_align::Region;
use pagealign::seven_phase::{
    adjacency_score, run_seven_phase, visual_rematch, ExactKey, Phase, RegionMatcher, SevenPhaseConfig,
};
use pagealign::{MatchType, PageFeatures};

fn long(tag: &str) -> String {
    format!("{tag} {}", "reinforced concrete member check ".repeat(3))
}

fn cfg() -> SevenPhaseConfig {
    SevenPhaseConfig::default()
}

fn full(old: &[PageFeatures], new: &[PageFeatures]) -> Region {
    Region::new(0..old.len(), 0..new.len())
}

#[test]
fn phase1_shared_hash() {
    let (a, b, c) = (long("alpha"), long("beta"), long("gamma"));
    let old = text_features(&[&a, &b]);
    let new = text_features(&[&c, &a]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let got = m.match_exact_keys(ExactKey::ContentHash);
    assert_eq!(got.len(), 1);
    assert_eq!((got[0].old_index, got[0].new_index), (0, 1));
    assert_eq!(got[0].confidence, 1.0);
    assert_eq!(got[0].phase, Phase::ExactHash);
}

#[test]
fn phase2_drawing_number_with_different_hashes() {
    let old = text_features(&[&format!("A-01 {}", long("old body"))]);
    let new = text_features(&[&format!("A-01 {}", long("revised body"))]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    assert!(m.match_exact_keys(ExactKey::ContentHash).is_empty());
    let got = m.match_exact_keys(ExactKey::DrawingNumber);
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].confidence, 0.9);
    assert_eq!(got[0].match_type, MatchType::DrawingNumber);
}

#[test]
fn empty_keys_never_match() {
    let old = text_features(&["", "ab"]);
    let new = text_features(&["", "ab"]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    for key in [ExactKey::ContentHash, ExactKey::DrawingNumber, ExactKey::SectionTitle] {
        assert!(m.match_exact_keys(key).is_empty());
    }
}

#[test]
fn repeated_keys_pair_in_document_order() {
    let a = long("same");
    let old = text_features(&[&a, &a]);
    let new = text_features(&[&a, &a]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let pairs: Vec<_> = m
        .match_exact_keys(ExactKey::ContentHash)
        .iter()
        .map(|c| (c.old_index, c.new_index))
        .collect();
    assert_eq!(pairs, vec![(0, 0), (1, 1)]);
}

#[test]
fn shift_plus_one_is_adopted() {
    let old = text_features(&["qqqq wwww eeee", "zzzz xxxx cccc", "mmmm nnnn bbbb"]);
    let new = text_features(&["uuuu oooo iiii", "qqqq wwww eeer", "zzzz xxxx cccv", "mmmm nnnn bbbv"]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let (delta, got) = m.detect_page_shift().expect("shift");
    assert_eq!(delta, 1);
    let pairs: Vec<_> = got.iter().map(|c| (c.old_index, c.new_index)).collect();
    assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
    assert!(got.iter().all(|c| c.confidence == 0.85 && c.phase == Phase::PageShift));
}

#[test]
fn dissimilar_region_has_no_shift() {
    let old = text_features(&["qqqq", "wwww", "eeee"]);
    let new = text_features(&["rrrr", "tttt", "yyyy"]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    assert!(m.detect_page_shift().is_none());
}

#[test]
fn four_by_four_shift_with_two_votes() {
    let old = text_features(&["qqqq wwww eeee", "zzzz xxxx cccc", "mmmm nnnn", "jjjj kkkk"]);
    let new = text_features(&["uuuu oooo", "qqqq wwww eeer", "zzzz xxxx cccv", "hhhh gggg"]);
    // Brute-force vote count for every shift in range.
    let votes = |delta: isize| {
        (0..4isize)
            .filter(|&i| (0..4).contains(&(i + delta)))
            .filter(|&i| old[i as usize].text_similarity::<f64>(&new[(i + delta) as usize]) >= 0.5)
            .count()
    };
    assert_eq!(votes(1), 2);
    for delta in [-2, -1, 0, 2] {
        assert!(votes(delta) <= 1, "delta {delta}");
    }
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let (delta, got) = m.detect_page_shift().expect("shift");
    assert_eq!(delta, 1);
    assert_eq!(got.len(), 2);
}

#[test]
fn phase5_caps_confidence() {
    let old = text_features(&["abcdefghij"]);
    let new = text_features(&["abcdefghiX"]);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let got = m.match_text_similarity();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].confidence, 0.85);
    assert_eq!(got[0].match_type, MatchType::TextSimilar);
}

#[test]
fn phase5_rejects_below_threshold() {
    let a = format!("{}{}", "a".repeat(49), "b".repeat(51));
    let b = format!("{}{}", "a".repeat(49), "c".repeat(51));
    let old = text_features(&[&a]);
    let new = text_features(&[&b]);
    assert!((old[0].text_similarity::<f64>(&new[0]) - 0.49).abs() < 1e-12);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    assert!(m.match_text_similarity().is_empty());
}

#[test]
fn phase5_greedy_agrees_with_best_assignment() {
    let old = text_features(&["abcdefghij", "pqrdefuvwz"]);
    let new = text_features(&["abcdefghxy", "abcdefuvwz"]);
    let sim = |o: usize, n: usize| old[o].text_similarity::<f64>(&new[n]);
    assert_eq!((sim(0, 0), sim(0, 1), sim(1, 1)), (0.8, 0.6, 0.7));

    // Every one-to-one assignment over pairs at or above 0.5.
    let assignments: [&[(usize, usize)]; 5] =
        [&[(0, 0), (1, 1)], &[(0, 1), (1, 0)], &[(0, 0)], &[(0, 1)], &[(1, 1)]];
    let best = assignments
        .iter()
        .filter(|a| a.iter().all(|&(o, n)| sim(o, n) >= 0.5))
        .max_by(|a, b| {
            let total = |x: &[(usize, usize)]| x.iter().map(|&(o, n)| sim(o, n)).sum::<f64>();
            total(a).total_cmp(&total(b))
        })
        .unwrap();

    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let got: Vec<_> = m.match_text_similarity().iter().map(|c| (c.old_index, c.new_index)).collect();
    assert_eq!(got, vec![(0, 0), (1, 1)]);
    assert_eq!(got.as_slice(), *best);
}

#[test]
fn adjacency_arithmetic() {
    let accept = cfg().adjacency_accept;
    assert!((adjacency_score(0.4, 1) - 0.36).abs() < 1e-12);
    assert!(adjacency_score(0.4, 1) >= accept);
    assert!((adjacency_score(0.42, 3) - 0.294).abs() < 1e-12);
    assert!(adjacency_score(0.42, 3) < accept);
    assert_eq!(adjacency_score(0.3, 0), 0.3);
}

#[test]
fn phase6_matches_next_to_the_expected_position() {
    let (p, p2) = (long("first"), long("last"));
    let old = text_features(&[&p, "aaaabbbbbb", &p2]);
    let new = text_features(&[&p, "aaaacccccc", "zzzzzzzzzz", &p2]);
    let cfg = cfg();
    let out = run_seven_phase(full(&old, &new), &old, &new, &cfg);
    let m = out
        .matches
        .iter()
        .find(|c| c.phase == Phase::PositionInterpolation)
        .expect("phase 6 match");
    assert_eq!((m.old_index, m.new_index), (1, 1));
    // Expected position of old 1 lies between anchors (0,0) and (2,3).
    assert!((m.confidence - 0.36).abs() < 1e-12);
    assert_eq!(out.unmatched_new, vec![2]);
}

#[test]
fn phase6_boundary_is_inclusive() {
    // Similarity exactly 0.3 at the expected position.
    let old = text_features(&["aaabbbbbbb"]);
    let new = text_features(&["aaaccccccc"]);
    assert!((old[0].text_similarity::<f64>(&new[0]) - 0.3).abs() < 1e-12);
    let cfg = cfg();
    let mut m = RegionMatcher::new(full(&old, &new), &old, &new, &cfg);
    let got = m.match_position_interpolation();
    assert_eq!(got.len(), 1);
}

#[test]
fn residuals_all_matched_and_one_leftover() {
    let a = long("a");
    let old = text_features(&[&a]);
    let new = text_features(&[&a]);
    let cfg = cfg();
    let out = run_seven_phase(full(&old, &new), &old, &new, &cfg);
    assert!(out.unmatched_old.is_empty() && out.unmatched_new.is_empty());

    let new = text_features(&[&a, &long("b")]);
    let out = run_seven_phase(full(&old, &new), &old, &new, &cfg);
    assert_eq!((out.unmatched_old, out.unmatched_new), (vec![], vec![1]));
}

#[test]
fn pair1_middle_region() {
    let p = pair1();
    let (old, new) = (features(&p.old), features(&p.new));
    let cfg = cfg();
    let region = Region::new(2..7, 2..8);

    let mut m = RegionMatcher::new(region.clone(), &old, &new, &cfg);
    let phase1 = m.match_exact_keys(ExactKey::ContentHash);
    let pairs: Vec<_> = phase1.iter().map(|c| (c.old_index, c.new_index)).collect();
    assert_eq!(pairs, vec![(2, 3), (3, 4)]);
    assert_eq!(m.classify_residuals(), (vec![4, 5, 6], vec![2, 5, 6, 7]));

    let out = run_seven_phase(region, &old, &new, &cfg);
    assert_eq!(out.matches.len(), 2);
    assert!(out.matches.iter().all(|c| c.phase == Phase::ExactHash));
    assert_eq!(out.unmatched_old, vec![4, 5, 6]);
    assert_eq!(out.unmatched_new, vec![2, 5, 6, 7]);
}

#[test]
fn identical_region_is_all_phase1() {
    let (a, b) = (long("a"), long("b"));
    let d = text_features(&[&a, &b]);
    let out = run_seven_phase(full(&d, &d), &d, &d, &cfg());
    assert_eq!(out.matches.len(), 2);
    assert_eq!(out.provisional_matches().count(), 0);
}

#[test]
fn drawing_only_region_is_all_phase2() {
    let old = text_features(&["A-01 plan", "A-02 section", "S-03 detail"]);
    let new = text_features(&["S-03 detail rev", "A-01 plan rev", "A-02 section rev"]);
    let out = run_seven_phase(full(&old, &new), &old, &new, &cfg());
    let pairs: Vec<_> = out.matches.iter().map(|c| (c.old_index, c.new_index, c.phase, c.confidence)).collect();
    assert_eq!(
        pairs,
        vec![
            (0, 1, Phase::DrawingNumber, 0.9),
            (1, 2, Phase::DrawingNumber, 0.9),
            (2, 0, Phase::DrawingNumber, 0.9)
        ]
    );
}

fn with_phash(mut f: PageFeatures, phash: u64) -> PageFeatures {
    f.fingerprint.phash = Some(phash);
    f
}

#[test]
fn visual_rematch_threshold() {
    let base = 0x5a5a_1234_0f0f_beef & HASH_MASK;
    let flip = |bits: u32| base ^ ((1u64 << bits) - 1);
    let old = vec![with_phash(text_features(&[""]).remove(0), base)];
    let cfg = cfg();
    for (bits, accepted) in [(0, true), (34, true), (35, false)] {
        let new = vec![with_phash(text_features(&[""]).remove(0), flip(bits))];
        let got = visual_rematch(&[0], &[0], &old, &new, &cfg);
        assert_eq!(got.len() == 1, accepted, "{bits} bits");
        if accepted {
            assert_eq!(got[0].match_type, MatchType::ContentSimilar);
            assert_eq!(got[0].phase, Phase::VisualRematch);
        }
    }
}

#[test]
fn determinism() {
    let p = pair1();
    let (old, new) = (features(&p.old), features(&p.new));
    let region = Region::new(2..7, 2..8);
    let a = run_seven_phase(region.clone(), &old, &new, &cfg());
    let b = run_seven_phase(region, &old, &new, &cfg());
    assert_eq!(a, b);
}
