//! Per-page fingerprint: content hash, drawing number, section title and
//! perceptual hash.

mod phash;

use std::sync::LazyLock;

use md5::{Digest, Md5};
use regex::Regex;
use serde::{Serialize, Serializer};

use crate::bundle::PageRecord;

pub use phash::{
    compute_phash, low_frequency_block, phash_similarity, DimensionError, HASH_BITS, HASH_MASK,
};

/// Pages with fewer characters get an empty content hash.
pub const HASH_MIN_CHARS: usize = 50;
/// Pages with fewer characters are text-sparse and get a perceptual hash.
pub const PHASH_MAX_CHARS: usize = 200;
pub const TITLE_MIN_CHARS: usize = 4;
pub const TITLE_MAX_CHARS: usize = 80;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PageFingerprint {
    /// MD5 hex digest of the normalized text, or empty for short pages.
    pub content_hash: String,
    pub drawing_number: String,
    pub section_title: String,
    #[serde(serialize_with = "hex_phash")]
    pub phash: Option<u64>,
}

fn hex_phash<S: Serializer>(phash: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
    match phash {
        Some(h) => s.serialize_str(&format!("{h:016x}")),
        None => s.serialize_none(),
    }
}

impl PageFingerprint {
    /// No content hash, no drawing number and no perceptual hash: nothing a
    /// matcher could use as evidence for this page.
    pub fn is_blank(&self) -> bool {
        self.content_hash.is_empty() && self.drawing_number.is_empty() && self.phash.is_none()
    }
}

/// Collapses Unicode whitespace runs to one space, trims, and lowercases.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

pub fn content_hash(page: &PageRecord) -> String {
    if page.char_count < HASH_MIN_CHARS {
        return String::new();
    }
    let digest = Md5::digest(normalize_text(&page.text).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Folds full-width ASCII variants and the ideographic space to half-width.
fn fold_width(c: char) -> char {
    match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{3000}' => ' ',
        _ => c,
    }
}

static DRAWING_NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|[^A-Za-z0-9])([A-Z]{1,3}[-\x{2212}]?[0-9]{1,3}[A-Za-z0-9]?)(?:[^A-Za-z0-9]|$)")
        .expect("drawing number pattern")
});

/// First drawing identifier of the form `A-01`, `S03`, `KO-1`, `A-12b`
/// (1-3 capitals, optional hyphen or minus sign, 1-3 digits, optional suffix).
pub fn extract_drawing_number(text: &str) -> String {
    let folded: String = text.chars().map(fold_width).collect();
    DRAWING_NUMBER
        .captures(&folded)
        .map(|caps| {
            caps[1]
                .chars()
                .map(|c| if c == '\u{2212}' { '-' } else { c.to_ascii_uppercase() })
                .collect()
        })
        .unwrap_or_default()
}

/// First line with at least four normalized characters, whitespace-collapsed
/// and cut to 80 characters.
pub fn extract_section_title(text: &str) -> String {
    text.lines()
        .find(|line| normalize_text(line).chars().count() >= TITLE_MIN_CHARS)
        .map(|line| {
            line.split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .chars()
                .take(TITLE_MAX_CHARS)
                .collect()
        })
        .unwrap_or_default()
}

pub fn fingerprint_page(page: &PageRecord) -> Result<PageFingerprint, DimensionError> {
    let phash = match &page.raster_low {
        Some(raster) if page.char_count < PHASH_MAX_CHARS => Some(compute_phash(raster)?),
        _ => None,
    };
    Ok(PageFingerprint {
        content_hash: content_hash(page),
        drawing_number: extract_drawing_number(&page.text),
        section_title: extract_section_title(&page.text),
        phash,
    })
}
