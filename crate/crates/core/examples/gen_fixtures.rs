//! Regenerates the bundle fixtures under `tests/fixtures`.
//!
//! Usage: cargo run -p pagealign-core --example gen_fixtures [-- OUT_DIR]

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, Luma};
use pagealign::{save_bundle, DocumentBundle, GroundTruth, PageRecord, TableGrid};

fn calc_sheet(section: &str, title: &str, body: &[&str]) -> String {
    let mut text = format!("{section} {title}\n");
    for line in body {
        text.push_str(line);
        text.push('\n');
    }
    text
}

/// Non-blank pages shared by both revisions, keyed by old index.
fn pair1_pages() -> Vec<(usize, String)> {
    vec![
        (0, calc_sheet("1.", "Design basis", &[
            "Building use: office, 5 storeys, reinforced concrete frame.",
            "Codes applied: national building standard, 2020 edition.",
        ])),
        (1, calc_sheet("1.1", "Material properties", &[
            "Concrete Fc = 24 N/mm2, reinforcement SD345 for main bars.",
            "Unit weight of reinforced concrete 24 kN/m3.",
        ])),
        (2, calc_sheet("2.1", "Load conditions", &[
            "Floor live load 2900 N/m2 for slabs, 1800 N/m2 for frames.",
            "Finishes 1200 N/m2; ceiling and services 300 N/m2.",
        ])),
        (3, calc_sheet("2.2", "Seismic load", &[
            "Base shear coefficient C0 = 0.2, zone factor Z = 1.0.",
            "Storey shear distribution per Ai profile.",
        ])),
        (7, calc_sheet("4.1", "Beam design", &[
            "G1 beam 400x700, top 4-D25, bottom 3-D25, stirrups D10@200.",
            "Bending check: M/Ma = 0.82 <= 1.0, OK.",
        ])),
        (8, calc_sheet("4.2", "Column design", &[
            "C1 column 600x600, 12-D25, hoops D13@100.",
            "Axial-bending interaction ratio 0.76 <= 1.0, OK.",
        ])),
    ]
}

fn inserted_page() -> String {
    calc_sheet("2.1a", "Snow load supplement", &[
        "Ground snow depth 30 cm, unit weight 20 N/m2/cm.",
        "Roof shape factor 1.0; snow load 600 N/m2 on roof slab.",
    ])
}

/// Old revision: 9 pages, pages 4-6 blank. New revision: 10 pages, page 2
/// inserted, pages 5-7 blank.
fn pair1() -> (DocumentBundle, DocumentBundle, GroundTruth) {
    let shared = pair1_pages();
    let text_at = |i: usize| {
        shared
            .iter()
            .find(|(o, _)| *o == i)
            .map(|(_, t)| t.clone())
            .unwrap_or_default()
    };
    let old: Vec<PageRecord> = (0..9).map(|i| PageRecord::from_text(i, text_at(i))).collect();
    let new_to_old = |n: usize| -> Option<usize> {
        match n {
            0 | 1 => Some(n),
            2 => None,
            _ => Some(n - 1),
        }
    };
    let new: Vec<PageRecord> = (0..10)
        .map(|n| match new_to_old(n) {
            Some(o) => PageRecord::from_text(n, text_at(o)),
            None => PageRecord::from_text(n, inserted_page()),
        })
        .collect();
    let gt = GroundTruth {
        matches: (0..10).filter_map(|n| new_to_old(n).map(|o| (o, n))).collect(),
        inserted: vec![2],
        deleted: vec![],
    };
    (
        DocumentBundle::new("pair1-old", old).expect("valid"),
        DocumentBundle::new("pair1-new", new).expect("valid"),
        gt,
    )
}

/// Small line drawing: a frame plus a few grid lines that vary by page.
fn drawing(seed: usize, width: u32, height: u32) -> GrayImage {
    let mut img = GrayImage::from_pixel(width, height, Luma([255]));
    let step = 12 + (seed % 7) as u32 * 3;
    for (x, y, p) in img.enumerate_pixels_mut() {
        let frame = x < 2 || y < 2 || x >= width - 2 || y >= height - 2;
        let grid = (x % step == 0 && y > 10) || (y % (step + 5) == 0 && x > 10);
        if frame || grid {
            *p = Luma([0]);
        }
    }
    img
}

fn low_raster(seed: usize) -> GrayImage {
    image::imageops::resize(&drawing(seed, 96, 96), 32, 32, image::imageops::FilterType::Triangle)
}

/// 90 distinct pages: calculation sheets, tables and a few drawing sheets
/// carrying both rasters.
fn self90() -> DocumentBundle {
    let pages = (0..90)
        .map(|i| {
            let chapter = i / 10 + 1;
            let mut text = format!(
                "{chapter}.{} Member check sheet {i:02}\nMember M{i:03}: span {} mm, load {} kN/m.\n",
                i % 10 + 1,
                3000 + 150 * i,
                10 + (i * 7) % 23
            );
            text.push_str(&format!(
                "Moment {} kNm, shear {} kN, ratio 0.{:02} <= 1.0 OK.\n",
                40 + (i * 13) % 97,
                20 + (i * 11) % 53,
                30 + (i * 17) % 65
            ));
            let mut page = if i % 15 == 4 {
                let text = format!("A-{:02} framing plan, level {}, sheet {i:02} of 90, scale 1:100\n", i / 15 + 1, i % 5 + 1);
                PageRecord::from_text(i, text)
                    .with_raster_low(low_raster(i))
                    .with_raster_high(DynamicImage::ImageLuma8(drawing(i, 170, 120)))
            } else {
                PageRecord::from_text(i, text)
            };
            if i % 9 == 0 {
                page = page.with_tables(vec![TableGrid::new(vec![
                    vec!["member".into(), "M".into(), "Q".into()],
                    vec![format!("M{i:03}"), format!("{}", 40 + i), format!("{}", 20 + i)],
                ])]);
            }
            page
        })
        .collect();
    DocumentBundle::new("self90", pages).expect("valid")
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    let json = serde_json::to_string_pretty(value).expect("serializes");
    fs::write(path, json + "\n").expect("write json");
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    let (old, new, gt) = pair1();
    save_bundle(&old, out.join("pair1/old")).expect("save old");
    save_bundle(&new, out.join("pair1/new")).expect("save new");
    write_json(&out.join("pair1/gt.json"), &gt);
    save_bundle(&self90(), out.join("self90")).expect("save self90");
    println!("fixtures written to {}", out.display());
}
