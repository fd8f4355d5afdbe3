//! JSON report, side-by-side composites and the static HTML index.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, Rgb, RgbImage};
use imageproc::drawing::draw_hollow_rect_mut;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::DocumentBundle;
use crate::config::EngineConfig;
use crate::consensus::MatchResult;
use crate::diff_engine::{common_grayscale, diff_pair, DiffError, PairDiff};
use crate::pipeline::{match_documents, Mode, PipelineError};
use crate::types::{MatchSource, MatchType};

pub const GUTTER: u32 = 16;
const OUTLINE: u32 = 2;
const OUTLINE_COLOR: Rgb<u8> = Rgb([220, 0, 0]);
const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

pub const REPORT_FILE: &str = "report.json";
pub const INDEX_FILE: &str = "index.html";
pub const COMPOSITE_DIR: &str = "composites";

pub fn engine_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMatch {
    pub old: usize,
    pub new: usize,
    #[serde(rename = "type")]
    pub match_type: MatchType,
    pub confidence: f64,
    pub source: MatchSource,
    pub text_spans: usize,
    pub changed_cells: usize,
    pub visual_regions: usize,
    pub changed_pixel_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub old_doc_id: String,
    pub new_doc_id: String,
    pub mode: Mode,
    pub matches: Vec<ReportMatch>,
    pub inserted: Vec<usize>,
    pub deleted: Vec<usize>,
    pub orphans: Vec<usize>,
    pub blank_old: Vec<usize>,
    pub blank_new: Vec<usize>,
    pub engine_version: String,
    pub config: EngineConfig,
}

impl ComparisonReport {
    /// Pairs with at least one non-empty diff layer.
    pub fn changed_pairs(&self) -> usize {
        self.matches
            .iter()
            .filter(|m| m.text_spans + m.changed_cells + m.visual_regions > 0)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Names of the two documents compared.
#[derive(Debug, Clone, Copy)]
pub struct DocIds<'a> {
    pub old: &'a str,
    pub new: &'a str,
}

pub fn build_report(
    result: &MatchResult,
    diffs: &[PairDiff],
    ids: DocIds<'_>,
    mode: Mode,
    config: &EngineConfig,
) -> ComparisonReport {
    let by_pair: HashMap<(usize, usize), &PairDiff> =
        diffs.iter().map(|d| ((d.old_index, d.new_index), d)).collect();
    let mut matches: Vec<ReportMatch> = result
        .matches
        .iter()
        .map(|m| {
            let diff = by_pair.get(&(m.old_index, m.new_index));
            let visual = diff.and_then(|d| d.visual.as_ref());
            ReportMatch {
                old: m.old_index,
                new: m.new_index,
                match_type: m.match_type,
                confidence: m.confidence,
                source: m.source,
                text_spans: diff.map_or(0, |d| d.text.changed_spans()),
                changed_cells: diff.map_or(0, |d| d.tables.changed_cells.len()),
                visual_regions: visual.map_or(0, |v| v.regions.len()),
                changed_pixel_fraction: visual.map(|v| v.changed_pixel_fraction),
            }
        })
        .collect();
    matches.sort_by_key(|m| (m.old, m.new));
    let sorted = |v: &[usize]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v
    };
    ComparisonReport {
        old_doc_id: ids.old.to_owned(),
        new_doc_id: ids.new.to_owned(),
        mode,
        matches,
        inserted: sorted(&result.inserted),
        deleted: sorted(&result.deleted),
        orphans: sorted(&result.orphans),
        blank_old: sorted(&result.blank_old),
        blank_new: sorted(&result.blank_new),
        engine_version: engine_version().to_owned(),
        config: config.clone(),
    }
}

/// Diffs every matched pair, in parallel, ordered by `(old, new)`.
pub fn diff_matches(result: &MatchResult, old: &DocumentBundle, new: &DocumentBundle, config: &EngineConfig) -> Vec<PairDiff> {
    let mut diffs: Vec<PairDiff> = result
        .matches
        .par_iter()
        .map(|m| diff_pair(&old.pages[m.old_index], &new.pages[m.new_index], &config.diff))
        .collect();
    diffs.sort_by_key(|d| (d.old_index, d.new_index));
    diffs
}

/// Matches, diffs and reports two bundles.
pub fn compare(
    old: &DocumentBundle,
    new: &DocumentBundle,
    mode: Mode,
    config: &EngineConfig,
) -> Result<(ComparisonReport, Vec<PairDiff>), PipelineError> {
    let result = match_documents(old, new, mode, config)?;
    let diffs = diff_matches(&result, old, new, config);
    let ids = DocIds {
        old: &old.doc_id,
        new: &new.doc_id,
    };
    Ok((build_report(&result, &diffs, ids, mode, config), diffs))
}

/// Old raster on the left, new raster on the right, diff regions outlined
/// on the right pane. Both panes are scaled to the larger dimensions.
pub fn render_side_by_side(
    diff: &PairDiff,
    old: Option<&DynamicImage>,
    new: Option<&DynamicImage>,
) -> Result<RgbImage, DiffError> {
    let old = old.ok_or(DiffError::RasterMissing { side: "old" })?;
    let new = new.ok_or(DiffError::RasterMissing { side: "new" })?;
    let (a, b) = common_grayscale(old, new);
    let (w, h) = a.dimensions();
    let mut canvas = RgbImage::from_pixel(2 * w + GUTTER, h, BACKGROUND);
    for (x, y, p) in a.enumerate_pixels() {
        canvas.put_pixel(x, y, Rgb([p[0]; 3]));
    }
    let offset = w + GUTTER;
    for (x, y, p) in b.enumerate_pixels() {
        canvas.put_pixel(offset + x, y, Rgb([p[0]; 3]));
    }
    let regions = diff.visual.as_ref().map_or(&[][..], |v| &v.regions[..]);
    for r in regions {
        for inset in 0..OUTLINE {
            if r.width <= 2 * inset || r.height <= 2 * inset {
                break;
            }
            let rect = imageproc::rect::Rect::at((offset + r.x + inset) as i32, (r.y + inset) as i32)
                .of_size(r.width - 2 * inset, r.height - 2 * inset);
            draw_hollow_rect_mut(&mut canvas, rect, OUTLINE_COLOR);
        }
    }
    Ok(canvas)
}

pub fn composite_name(old: usize, new: usize) -> String {
    format!("pair_{old:04}_{new:04}.png")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn index_list(html: &mut String, title: &str, pages: &[usize]) {
    if pages.is_empty() {
        return;
    }
    let items: Vec<String> = pages.iter().map(|p| format!("<li>page {p}</li>")).collect();
    let _ = writeln!(html, "<h2>{title}</h2>\n<ul>{}</ul>", items.join(""));
}

/// Renders the index page. `composites` maps `(old, new)` to a path
/// relative to the page.
pub fn render_html(report: &ComparisonReport, composites: &HashMap<(usize, usize), String>) -> String {
    let mut html = String::new();
    let _ = writeln!(
        html,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{} vs {}</title>\
         <style>body{{font-family:sans-serif}}td,th{{padding:2px 8px;text-align:left}}</style></head><body>",
        escape(&report.old_doc_id),
        escape(&report.new_doc_id)
    );
    let _ = writeln!(
        html,
        "<h1>{} &rarr; {}</h1>\n<p>mode: {:?}, engine {}</p>",
        escape(&report.old_doc_id),
        escape(&report.new_doc_id),
        report.mode,
        escape(&report.engine_version)
    );
    let changes = report.changed_pairs()
        + report.inserted.len()
        + report.deleted.len()
        + report.orphans.len();
    if changes == 0 {
        html.push_str("<p>No changes detected: 0 changed pages.</p>\n");
    } else {
        let _ = writeln!(html, "<p>{changes} changed pages.</p>");
    }
    html.push_str(
        "<table>\n<tr><th>old</th><th>new</th><th>type</th><th>confidence</th><th>source</th>\
         <th>text spans</th><th>cells</th><th>regions</th><th>view</th></tr>\n",
    );
    for m in &report.matches {
        let view = composites
            .get(&(m.old, m.new))
            .map(|p| format!("<a href=\"{}\">side by side</a>", escape(p)))
            .unwrap_or_default();
        let _ = writeln!(
            html,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{:.2}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            m.old,
            m.new,
            m.match_type.as_str(),
            m.confidence,
            m.source.as_str(),
            m.text_spans,
            m.changed_cells,
            m.visual_regions,
            view
        );
    }
    html.push_str("</table>\n");
    index_list(&mut html, "Inserted pages", &report.inserted);
    index_list(&mut html, "Deleted pages", &report.deleted);
    index_list(&mut html, "Orphaned pages", &report.orphans);
    index_list(&mut html, "Blank old pages", &report.blank_old);
    index_list(&mut html, "Blank new pages", &report.blank_new);
    html.push_str("</body></html>\n");
    html
}

pub fn emit_html(
    report: &ComparisonReport,
    composites: &HashMap<(usize, usize), String>,
    out_dir: &Path,
) -> Result<PathBuf, ReportError> {
    let path = out_dir.join(INDEX_FILE);
    fs::write(&path, render_html(report, composites)).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `report.json`, one composite per pair with a visual layer, and
/// `index.html` into `out_dir`.
pub fn write_outputs(
    out_dir: &Path,
    report: &ComparisonReport,
    diffs: &[PairDiff],
    old: &DocumentBundle,
    new: &DocumentBundle,
) -> Result<(), ReportError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    let composite_dir = out_dir.join(COMPOSITE_DIR);
    fs::create_dir_all(&composite_dir).map_err(io(&composite_dir))?;
    let report_path = out_dir.join(REPORT_FILE);
    fs::write(&report_path, report.to_json()).map_err(io(&report_path))?;

    let written: Vec<((usize, usize), String)> = diffs
        .par_iter()
        .filter(|d| d.visual.is_some())
        .map(|d| {
            let canvas = render_side_by_side(
                d,
                old.pages[d.old_index].raster_high.as_ref(),
                new.pages[d.new_index].raster_high.as_ref(),
            )?;
            let name = composite_name(d.old_index, d.new_index);
            let path = composite_dir.join(&name);
            canvas
                .save(&path)
                .map_err(|source| ReportError::Image { path, source })?;
            Ok(((d.old_index, d.new_index), format!("{COMPOSITE_DIR}/{name}")))
        })
        .collect::<Result<_, ReportError>>()?;
    emit_html(report, &written.into_iter().collect(), out_dir)?;
    Ok(())
}
