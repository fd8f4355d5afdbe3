//! Per-page data computed once and shared by every matching stage.

use rayon::prelude::*;

use crate::bundle::{DocumentBundle, PageRecord};
use crate::fingerprint::{fingerprint_page, normalize_text, DimensionError, PageFingerprint};
use crate::lcs_align::char_similarity;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PageFeatures {
    pub index: usize,
    pub char_count: usize,
    /// Normalized text, pre-split into characters for similarity scoring.
    pub normalized: Vec<char>,
    pub fingerprint: PageFingerprint,
}

impl PageFeatures {
    pub fn from_page(page: &PageRecord) -> Result<Self, DimensionError> {
        Ok(Self {
            index: page.index,
            char_count: page.char_count,
            normalized: normalize_text(&page.text).chars().collect(),
            fingerprint: fingerprint_page(page)?,
        })
    }

    pub fn text_similarity<T: Scalar>(&self, other: &PageFeatures) -> T {
        char_similarity(&self.normalized, &other.normalized)
    }
}

pub fn document_features(bundle: &DocumentBundle) -> Result<Vec<PageFeatures>, DimensionError> {
    bundle.pages.par_iter().map(PageFeatures::from_page).collect()
}
