#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;

use pagealign::{document_features, load_bundle, load_ground_truth, DocumentBundle, GroundTruth, PageFeatures, PageRecord};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub struct Pair1 {
    pub old: DocumentBundle,
    pub new: DocumentBundle,
    pub gt: GroundTruth,
}

pub fn pair1() -> Pair1 {
    Pair1 {
        old: load_bundle(fixture("pair1/old")).expect("pair1 old"),
        new: load_bundle(fixture("pair1/new")).expect("pair1 new"),
        gt: load_ground_truth(fixture("pair1/gt.json")).expect("pair1 gt"),
    }
}

pub fn self90() -> DocumentBundle {
    load_bundle(fixture("self90")).expect("self90")
}

pub fn features(bundle: &DocumentBundle) -> Vec<PageFeatures> {
    document_features(bundle).expect("features")
}

/// Features of text-only pages numbered from 0.
pub fn text_features(texts: &[&str]) -> Vec<PageFeatures> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| PageFeatures::from_page(&PageRecord::from_text(i, *t)).unwrap())
        .collect()
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
