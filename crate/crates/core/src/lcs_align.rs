//! Structural alignment of content-hash sequences and the text similarity
//! ratio used by the later matching stages.

use std::ops::Range;

use serde::Serialize;

use crate::fingerprint::normalize_text;
use crate::matcher::{OpKind, SequenceMatcher};
use crate::scalar::Scalar;

pub type BlockKind = OpKind;

/// A run of the page-level alignment. Ranges are half-open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentBlock {
    pub kind: BlockKind,
    pub old: Range<usize>,
    pub new: Range<usize>,
}

impl AlignmentBlock {
    /// Index pairs of an `Equal` block; empty for any other kind.
    pub fn equal_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = if self.kind == OpKind::Equal { self.old.len() } else { 0 };
        (0..n).map(move |k| (self.old.start + k, self.new.start + k))
    }
}

/// Contiguous stretch of unequal pages handed to the fine-grained matcher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub old: Range<usize>,
    pub new: Range<usize>,
}

impl Region {
    pub fn new(old: Range<usize>, new: Range<usize>) -> Self {
        Self { old, new }
    }
}

/// Block decomposition of two content-hash sequences. Empty hashes are junk:
/// they never take part in an `Equal` block, so blank pages are never paired
/// here.
pub fn sequence_blocks<S: AsRef<str>>(old_hashes: &[S], new_hashes: &[S]) -> Vec<AlignmentBlock> {
    let old: Vec<&str> = old_hashes.iter().map(AsRef::as_ref).collect();
    let new: Vec<&str> = new_hashes.iter().map(AsRef::as_ref).collect();
    SequenceMatcher::with_junk(&old, &new, |h| h.is_empty())
        .opcodes()
        .into_iter()
        .map(|op| AlignmentBlock {
            kind: op.kind,
            old: op.old,
            new: op.new,
        })
        .collect()
}

/// Merges each maximal run of non-`Equal` blocks into one region.
pub fn replace_regions(blocks: &[AlignmentBlock]) -> Vec<Region> {
    let mut regions: Vec<Region> = Vec::new();
    let mut open = false;
    for block in blocks {
        if block.kind == OpKind::Equal {
            open = false;
            continue;
        }
        match regions.last_mut() {
            Some(region) if open => {
                region.old.end = block.old.end;
                region.new.end = block.new.end;
            }
            _ => regions.push(Region::new(block.old.clone(), block.new.clone())),
        }
        open = true;
    }
    regions
}

/// `2M / T` over normalized characters; zero when both are empty.
pub fn text_similarity<T: Scalar>(a: &str, b: &str) -> T {
    let a: Vec<char> = normalize_text(a).chars().collect();
    let b: Vec<char> = normalize_text(b).chars().collect();
    char_similarity(&a, &b)
}

/// Same ratio over already-normalized character sequences.
pub fn char_similarity<T: Scalar>(a: &[char], b: &[char]) -> T {
    if a.is_empty() && b.is_empty() {
        return T::zero();
    }
    if a == b {
        return T::one();
    }
    SequenceMatcher::new(a, b).ratio()
}
