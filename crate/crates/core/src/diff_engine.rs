//! Text, table and raster diffs for a matched page pair.

use std::ops::Range;

use image::imageops::FilterType;
use image::{DynamicImage, GrayImage, Luma};
use imageproc::distance_transform::Norm;
use imageproc::region_labelling::{connected_components, Connectivity};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{PageRecord, TableGrid};
use crate::matcher::{OpKind, SequenceMatcher};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffConfig {
    /// Characters of each page's text considered by the text diff.
    pub text_max_chars: usize,
    /// Per-pixel absolute difference must exceed this to count as changed.
    pub pixel_threshold: u8,
    pub min_region_area: u32,
    /// Regions closer than this many pixels on each side are merged.
    pub merge_margin: u32,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            text_max_chars: 5000,
            pixel_threshold: 32,
            min_region_area: 25,
            merge_margin: 5,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("{side} page has no high-resolution raster")]
    RasterMissing { side: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpanKind {
    Unchanged,
    Deleted,
    Added,
}

/// Character ranges index the truncated texts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TextSpan {
    pub kind: SpanKind,
    pub old: Range<usize>,
    pub new: Range<usize>,
    pub excerpt: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TextDiff {
    pub spans: Vec<TextSpan>,
}

impl TextDiff {
    pub fn changed_spans(&self) -> usize {
        self.spans.iter().filter(|s| s.kind != SpanKind::Unchanged).count()
    }

    pub fn is_empty(&self) -> bool {
        self.changed_spans() == 0
    }
}

pub fn text_diff(old_text: &str, new_text: &str, max_chars: usize) -> TextDiff {
    let old: Vec<char> = old_text.chars().take(max_chars).collect();
    let new: Vec<char> = new_text.chars().take(max_chars).collect();
    let excerpt = |chars: &[char], r: &Range<usize>| chars[r.clone()].iter().collect::<String>();
    let mut spans = Vec::new();
    for op in SequenceMatcher::new(&old, &new).opcodes() {
        let deleted = TextSpan {
            kind: SpanKind::Deleted,
            old: op.old.clone(),
            new: op.new.start..op.new.start,
            excerpt: excerpt(&old, &op.old),
        };
        let added = TextSpan {
            kind: SpanKind::Added,
            old: op.old.end..op.old.end,
            new: op.new.clone(),
            excerpt: excerpt(&new, &op.new),
        };
        match op.kind {
            OpKind::Equal => spans.push(TextSpan {
                kind: SpanKind::Unchanged,
                excerpt: excerpt(&old, &op.old),
                old: op.old,
                new: op.new,
            }),
            OpKind::Delete => spans.push(deleted),
            OpKind::Insert => spans.push(added),
            OpKind::Replace => spans.extend([deleted, added]),
        }
    }
    TextDiff { spans }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellChange {
    pub table: usize,
    pub row: usize,
    pub col: usize,
    pub old_value: String,
    pub new_value: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TableDiff {
    pub changed_cells: Vec<CellChange>,
    pub added_tables: Vec<usize>,
    pub removed_tables: Vec<usize>,
}

impl TableDiff {
    pub fn is_empty(&self) -> bool {
        self.changed_cells.is_empty() && self.added_tables.is_empty() && self.removed_tables.is_empty()
    }
}

/// Tables pair by position. Cells are compared trimmed; a cell present on
/// one side only is a change against the empty string.
pub fn table_diff(old_tables: &[TableGrid], new_tables: &[TableGrid]) -> TableDiff {
    let mut diff = TableDiff::default();
    for (t, (a, b)) in old_tables.iter().zip(new_tables).enumerate() {
        let rows = a.rows.len().max(b.rows.len());
        for row in 0..rows {
            let cols = a.rows.get(row).map_or(0, Vec::len).max(b.rows.get(row).map_or(0, Vec::len));
            for col in 0..cols {
                let old_value = a.cell(row, col).unwrap_or("").trim();
                let new_value = b.cell(row, col).unwrap_or("").trim();
                if old_value != new_value {
                    diff.changed_cells.push(CellChange {
                        table: t,
                        row,
                        col,
                        old_value: old_value.to_owned(),
                        new_value: new_value.to_owned(),
                    });
                }
            }
        }
    }
    diff.removed_tables = (new_tables.len()..old_tables.len()).collect();
    diff.added_tables = (old_tables.len()..new_tables.len()).collect();
    diff
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn right(&self) -> u32 {
        self.x + self.width
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    fn union(&self, other: &Rect) -> Rect {
        let (x, y) = (self.x.min(other.x), self.y.min(other.y));
        Rect {
            x,
            y,
            width: self.right().max(other.right()) - x,
            height: self.bottom().max(other.bottom()) - y,
        }
    }

    /// Whether the two rectangles overlap once each grows by `margin` on
    /// every side.
    fn near(&self, other: &Rect, margin: u32) -> bool {
        let m = 2 * margin;
        self.x < other.right() + m
            && other.x < self.right() + m
            && self.y < other.bottom() + m
            && other.y < self.bottom() + m
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VisualDiff {
    pub regions: Vec<Rect>,
    pub changed_pixel_fraction: f64,
}

impl VisualDiff {
    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Grayscale copies of both rasters at the larger of each dimension.
pub fn common_grayscale(old: &DynamicImage, new: &DynamicImage) -> (GrayImage, GrayImage) {
    let width = old.width().max(new.width());
    let height = old.height().max(new.height());
    let fit = |img: &DynamicImage| {
        if img.width() == width && img.height() == height {
            img.to_luma8()
        } else {
            img.resize_exact(width, height, FilterType::Triangle).to_luma8()
        }
    };
    (fit(old), fit(new))
}

/// Binary change mask (255 = changed) of two equally sized rasters.
pub fn change_mask(old: &GrayImage, new: &GrayImage, threshold: u8) -> GrayImage {
    GrayImage::from_fn(old.width(), old.height(), |x, y| {
        let d = old.get_pixel(x, y)[0].abs_diff(new.get_pixel(x, y)[0]);
        Luma([if d > threshold { 255 } else { 0 }])
    })
}

/// Bounding boxes of 8-connected components with at least `min_area` pixels.
fn component_boxes(mask: &GrayImage, min_area: u32) -> Vec<Rect> {
    let labels = connected_components(mask, Connectivity::Eight, Luma([0u8]));
    // (min_x, min_y, max_x, max_y, area) per label.
    let mut boxes: Vec<(u32, u32, u32, u32, u32)> = Vec::new();
    for (x, y, label) in labels.enumerate_pixels() {
        let l = label[0] as usize;
        if l == 0 {
            continue;
        }
        if boxes.len() < l {
            boxes.resize(l, (u32::MAX, u32::MAX, 0, 0, 0));
        }
        let b = &mut boxes[l - 1];
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
        b.4 += 1;
    }
    boxes
        .into_iter()
        .filter(|b| b.4 >= min_area)
        .map(|(x0, y0, x1, y1, _)| Rect {
            x: x0,
            y: y0,
            width: x1 - x0 + 1,
            height: y1 - y0 + 1,
        })
        .collect()
}

/// Repeatedly unions rectangles that are within `margin` of each other.
fn merge_rects(mut rects: Vec<Rect>, margin: u32) -> Vec<Rect> {
    loop {
        let mut merged = false;
        let mut out: Vec<Rect> = Vec::with_capacity(rects.len());
        for r in rects {
            match out.iter_mut().find(|o| o.near(&r, margin)) {
                Some(o) => {
                    *o = o.union(&r);
                    merged = true;
                }
                None => out.push(r),
            }
        }
        rects = out;
        if !merged {
            break;
        }
    }
    rects.sort_by_key(|r| (r.y, r.x));
    rects
}

pub fn visual_diff(
    old: Option<&DynamicImage>,
    new: Option<&DynamicImage>,
    cfg: &DiffConfig,
) -> Result<VisualDiff, DiffError> {
    let old = old.ok_or(DiffError::RasterMissing { side: "old" })?;
    let new = new.ok_or(DiffError::RasterMissing { side: "new" })?;
    let (a, b) = common_grayscale(old, new);
    let mask = change_mask(&a, &b, cfg.pixel_threshold);
    let total = u64::from(mask.width()) * u64::from(mask.height());
    let changed = mask.pixels().filter(|p| p[0] != 0).count() as u64;
    let changed_pixel_fraction = if total == 0 { 0.0 } else { changed as f64 / total as f64 };
    if changed == 0 {
        return Ok(VisualDiff::default());
    }
    let closed = imageproc::morphology::erode(
        &imageproc::morphology::dilate(&mask, Norm::LInf, 1),
        Norm::LInf,
        1,
    );
    let regions = merge_rects(component_boxes(&closed, cfg.min_region_area), cfg.merge_margin);
    Ok(VisualDiff {
        regions,
        changed_pixel_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiff {
    pub old_index: usize,
    pub new_index: usize,
    pub text: TextDiff,
    pub tables: TableDiff,
    /// Present iff both pages carry a high-resolution raster.
    pub visual: Option<VisualDiff>,
}

impl PairDiff {
    pub fn is_empty(&self) -> bool {
        self.text.is_empty() && self.tables.is_empty() && self.visual.as_ref().is_none_or(VisualDiff::is_empty)
    }
}

pub fn diff_pair(old: &PageRecord, new: &PageRecord, cfg: &DiffConfig) -> PairDiff {
    let visual = match (&old.raster_high, &new.raster_high) {
        (Some(a), Some(b)) => visual_diff(Some(a), Some(b), cfg).ok(),
        _ => None,
    };
    PairDiff {
        old_index: old.index,
        new_index: new.index,
        text: text_diff(&old.text, &new.text, cfg.text_max_chars),
        tables: table_diff(&old.tables, &new.tables),
        visual,
    }
}
