//! On-disk interchange format between PDF extraction and the matching engine.
//!
//! A bundle is a directory holding `manifest.json` plus the PNG rasters it
//! references (paths are manifest-relative, conventionally under `rasters/`).
//! Text is stored exactly as extracted; normalization belongs to
//! [`crate::fingerprint`].

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, GrayImage, ImageError};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOW_RASTER_SIDE: u32 = 32;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("no {MANIFEST_FILE} found at {0}")]
    MissingManifest(PathBuf),
    #[error("schema violation at `{field}`: {detail}")]
    SchemaViolation { field: String, detail: String },
    #[error(
        "raster_low {path} must be {LOW_RASTER_SIDE}x{LOW_RASTER_SIDE} single-channel, \
         got {width}x{height} with {channels} channel(s)"
    )]
    RasterDimension {
        path: PathBuf,
        width: u32,
        height: u32,
        channels: u8,
    },
    #[error("page index gap: expected index {expected}, found {found}")]
    IndexGap { expected: usize, found: usize },
    #[error("{side} index {index} appears more than once in the ground truth")]
    DuplicateIndex { side: &'static str, index: usize },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot decode raster {path}: {source}")]
    Image { path: PathBuf, source: ImageError },
}

impl BundleError {
    fn schema(field: impl Into<String>, detail: impl Into<String>) -> Self {
        BundleError::SchemaViolation {
            field: field.into(),
            detail: detail.into(),
        }
    }

    fn from_json(err: serde_json::Error) -> Self {
        let msg = err.to_string();
        // serde_json names the offending key between backticks.
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_owned)
            .unwrap_or_else(|| "manifest".to_owned());
        BundleError::schema(field, msg)
    }
}

/// Cell grid of one extracted table. Rows may be ragged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableGrid {
    pub rows: Vec<Vec<String>>,
}

impl TableGrid {
    pub fn new(rows: Vec<Vec<String>>) -> Self {
        Self { rows }
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&str> {
        self.rows.get(row)?.get(col).map(String::as_str)
    }
}

/// Extracted content of a single page.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRecord {
    pub index: usize,
    pub text: String,
    /// Number of Unicode scalar values in `text`.
    pub char_count: usize,
    pub tables: Vec<TableGrid>,
    /// 32x32 grayscale render used for perceptual hashing.
    pub raster_low: Option<GrayImage>,
    /// High-resolution render used by the visual diff layer.
    pub raster_high: Option<DynamicImage>,
}

impl PageRecord {
    /// A text-only page with `char_count` derived from `text`.
    pub fn from_text(index: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            index,
            char_count: text.chars().count(),
            text,
            tables: Vec::new(),
            raster_low: None,
            raster_high: None,
        }
    }

    pub fn with_tables(mut self, tables: Vec<TableGrid>) -> Self {
        self.tables = tables;
        self
    }

    pub fn with_raster_low(mut self, raster: GrayImage) -> Self {
        self.raster_low = Some(raster);
        self
    }

    pub fn with_raster_high(mut self, raster: DynamicImage) -> Self {
        self.raster_high = Some(raster);
        self
    }
}

/// All pages of one document revision.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentBundle {
    pub doc_id: String,
    pub page_count: usize,
    pub pages: Vec<PageRecord>,
}

impl DocumentBundle {
    /// Builds a bundle from in-memory pages, sorting them by index and
    /// running the same validation as [`load_bundle`].
    pub fn new(doc_id: impl Into<String>, mut pages: Vec<PageRecord>) -> Result<Self, BundleError> {
        pages.sort_by_key(|p| p.index);
        let bundle = Self {
            doc_id: doc_id.into(),
            page_count: pages.len(),
            pages,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    /// Checks every bundle invariant. Pages must already be in index order.
    pub fn validate(&self) -> Result<(), BundleError> {
        if self.page_count == 0 {
            return Err(BundleError::schema("page_count", "must be positive"));
        }
        for (expected, page) in self.pages.iter().enumerate() {
            if page.index != expected {
                return Err(BundleError::IndexGap {
                    expected,
                    found: page.index,
                });
            }
        }
        if self.pages.len() != self.page_count {
            return Err(BundleError::schema(
                "page_count",
                format!(
                    "declares {} pages but {} are listed",
                    self.page_count,
                    self.pages.len()
                ),
            ));
        }
        for page in &self.pages {
            let actual = page.text.chars().count();
            if actual != page.char_count {
                return Err(BundleError::schema(
                    format!("pages[{}].char_count", page.index),
                    format!("declared {} but text has {actual} characters", page.char_count),
                ));
            }
            if let Some(low) = &page.raster_low {
                if low.dimensions() != (LOW_RASTER_SIDE, LOW_RASTER_SIDE) {
                    return Err(BundleError::RasterDimension {
                        path: PathBuf::from(format!("<page {}>", page.index)),
                        width: low.width(),
                        height: low.height(),
                        channels: 1,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Deserializes an `Option` while still requiring the key to be present.
fn required_nullable<'de, D, T>(de: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(de)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    doc_id: String,
    page_count: usize,
    pages: Vec<ManifestPage>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestPage {
    index: usize,
    text: String,
    char_count: usize,
    tables: Vec<TableGrid>,
    #[serde(deserialize_with = "required_nullable")]
    raster_low: Option<String>,
    #[serde(deserialize_with = "required_nullable")]
    raster_high: Option<String>,
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

fn decode_raster(path: &Path) -> Result<DynamicImage, BundleError> {
    image::open(path).map_err(|source| match source {
        ImageError::IoError(source) => BundleError::Io {
            path: path.to_path_buf(),
            source,
        },
        source => BundleError::Image {
            path: path.to_path_buf(),
            source,
        },
    })
}

fn decode_low_raster(path: &Path) -> Result<GrayImage, BundleError> {
    let img = decode_raster(path)?;
    let channels = img.color().channel_count();
    if img.color() != ColorType::L8
        || img.width() != LOW_RASTER_SIDE
        || img.height() != LOW_RASTER_SIDE
    {
        return Err(BundleError::RasterDimension {
            path: path.to_path_buf(),
            width: img.width(),
            height: img.height(),
            channels,
        });
    }
    Ok(img.into_luma8())
}

/// Loads and validates a bundle. `path` may be the bundle directory or the
/// manifest file itself.
pub fn load_bundle(path: impl AsRef<Path>) -> Result<DocumentBundle, BundleError> {
    let manifest_file = manifest_path(path.as_ref());
    if !manifest_file.is_file() {
        return Err(BundleError::MissingManifest(manifest_file));
    }
    let root = manifest_file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let raw = fs::read_to_string(&manifest_file).map_err(|source| BundleError::Io {
        path: manifest_file.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&raw).map_err(BundleError::from_json)?;

    let mut entries = manifest.pages;
    entries.sort_by_key(|p| p.index);
    // Index structure is checked before any raster is decoded.
    for (expected, entry) in entries.iter().enumerate() {
        if entry.index != expected {
            return Err(BundleError::IndexGap {
                expected,
                found: entry.index,
            });
        }
    }

    let mut pages = Vec::with_capacity(entries.len());
    for entry in entries {
        let raster_low = entry
            .raster_low
            .as_deref()
            .map(|rel| decode_low_raster(&root.join(rel)))
            .transpose()?;
        let raster_high = entry
            .raster_high
            .as_deref()
            .map(|rel| decode_raster(&root.join(rel)))
            .transpose()?;
        pages.push(PageRecord {
            index: entry.index,
            text: entry.text,
            char_count: entry.char_count,
            tables: entry.tables,
            raster_low,
            raster_high,
        });
    }

    let bundle = DocumentBundle {
        doc_id: manifest.doc_id,
        page_count: manifest.page_count,
        pages,
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes `bundle` as a manifest plus PNG rasters under `dir`.
pub fn save_bundle(bundle: &DocumentBundle, dir: impl AsRef<Path>) -> Result<(), BundleError> {
    let dir = dir.as_ref();
    let raster_dir = dir.join("rasters");
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BundleError::Io { path, source }
    };
    fs::create_dir_all(&raster_dir).map_err(io_err(&raster_dir))?;

    let mut pages = Vec::with_capacity(bundle.pages.len());
    for page in &bundle.pages {
        let write_png = |suffix: &str, img: &DynamicImage| -> Result<String, BundleError> {
            let rel = format!("rasters/page_{:04}_{suffix}.png", page.index);
            let path = dir.join(&rel);
            img.save_with_format(&path, image::ImageFormat::Png)
                .map_err(|source| BundleError::Image { path, source })?;
            Ok(rel)
        };
        let raster_low = page
            .raster_low
            .as_ref()
            .map(|img| write_png("low", &DynamicImage::ImageLuma8(img.clone())))
            .transpose()?;
        let raster_high = page
            .raster_high
            .as_ref()
            .map(|img| write_png("high", img))
            .transpose()?;
        pages.push(ManifestPage {
            index: page.index,
            text: page.text.clone(),
            char_count: page.char_count,
            tables: page.tables.clone(),
            raster_low,
            raster_high,
        });
    }
    let manifest = Manifest {
        doc_id: bundle.doc_id.clone(),
        page_count: bundle.page_count,
        pages,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))
}

/// Hand-annotated page correspondence used for evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub matches: Vec<(usize, usize)>,
    pub inserted: Vec<usize>,
    pub deleted: Vec<usize>,
}

impl GroundTruth {
    /// Rejects any old or new index that is used by more than one entry.
    pub fn validate(&self) -> Result<(), BundleError> {
        let mut old = HashSet::new();
        let mut new = HashSet::new();
        let olds = self.matches.iter().map(|m| m.0).chain(self.deleted.iter().copied());
        for index in olds {
            if !old.insert(index) {
                return Err(BundleError::DuplicateIndex { side: "old", index });
            }
        }
        let news = self.matches.iter().map(|m| m.1).chain(self.inserted.iter().copied());
        for index in news {
            if !new.insert(index) {
                return Err(BundleError::DuplicateIndex { side: "new", index });
            }
        }
        Ok(())
    }
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth, BundleError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let gt: GroundTruth = serde_json::from_str(&raw).map_err(BundleError::from_json)?;
    gt.validate()?;
    Ok(gt)
}
