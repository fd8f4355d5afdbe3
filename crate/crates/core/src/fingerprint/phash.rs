//! 63-bit DCT perceptual hash over 32x32 grayscale renders.

use std::f64::consts::PI;
use std::sync::LazyLock;

use image::GrayImage;
use thiserror::Error;

use crate::scalar::Scalar;

pub const RASTER_SIDE: usize = 32;
const BLOCK: usize = 8;
pub const HASH_BITS: u32 = 63;
pub const HASH_MASK: u64 = (1 << HASH_BITS) - 1;

/// Coefficients this close to zero (relative to the DC term) are snapped to
/// exactly zero so that symmetric or flat rasters hash deterministically.
const NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("perceptual hash needs a {RASTER_SIDE}x{RASTER_SIDE} raster, got {width}x{height}")]
pub struct DimensionError {
    pub width: u32,
    pub height: u32,
}

/// Orthonormal DCT-II basis rows for the lowest `BLOCK` frequencies.
static BASIS: LazyLock<[[f64; RASTER_SIDE]; BLOCK]> = LazyLock::new(|| {
    let n = RASTER_SIDE as f64;
    let mut basis = [[0.0; RASTER_SIDE]; BLOCK];
    for (u, row) in basis.iter_mut().enumerate() {
        let scale = if u == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for (x, b) in row.iter_mut().enumerate() {
            *b = scale * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos();
        }
    }
    basis
});

/// Top-left 8x8 block of the orthonormal 2-D DCT-II, indexed `[row_freq][col_freq]`.
pub fn low_frequency_block(raster: &GrayImage) -> Result<[[f64; BLOCK]; BLOCK], DimensionError> {
    if raster.dimensions() != (RASTER_SIDE as u32, RASTER_SIDE as u32) {
        return Err(DimensionError {
            width: raster.width(),
            height: raster.height(),
        });
    }
    let basis = &*BASIS;
    // Separable transform: columns first, then rows.
    let mut partial = [[0.0; RASTER_SIDE]; BLOCK];
    for (u, out) in partial.iter_mut().enumerate() {
        for (r, &weight) in basis[u].iter().enumerate() {
            for (c, acc) in out.iter_mut().enumerate() {
                *acc += weight * f64::from(raster.get_pixel(c as u32, r as u32)[0]);
            }
        }
    }
    let mut block = [[0.0; BLOCK]; BLOCK];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            block[u][v] = partial[u]
                .iter()
                .zip(basis[v].iter())
                .map(|(p, b)| p * b)
                .sum();
        }
    }
    let floor = NOISE_FLOOR * (1.0 + block[0][0].abs());
    for coeff in block.iter_mut().flatten() {
        if coeff.abs() < floor {
            *coeff = 0.0;
        }
    }
    Ok(block)
}

/// Packs the 63 AC coefficients of the low-frequency block, row-major with
/// bit 0 = coefficient (0,1). A bit is set when its coefficient is strictly
/// greater than the median of the 63.
pub fn compute_phash(raster: &GrayImage) -> Result<u64, DimensionError> {
    let block = low_frequency_block(raster)?;
    let ac: Vec<f64> = block.iter().flatten().skip(1).copied().collect();
    let mut sorted = ac.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[ac.len() / 2];
    let hash = ac
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > median)
        .fold(0u64, |acc, (bit, _)| acc | (1 << bit));
    Ok(hash)
}

/// `1 - popcount(a ^ b) / 63`.
pub fn phash_similarity<T: Scalar>(a: u64, b: u64) -> T {
    let differing = ((a ^ b) & HASH_MASK).count_ones() as usize;
    T::one() - T::ratio(differing, HASH_BITS as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Luma;

    /// Direct O(N^4) DCT-II, independent of the separable implementation.
    fn brute_force_block(raster: &GrayImage) -> [[f64; BLOCK]; BLOCK] {
        let n = RASTER_SIDE as f64;
        let alpha = |k: usize| if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        let mut out = [[0.0; BLOCK]; BLOCK];
        for (u, row) in out.iter_mut().enumerate() {
            for (v, cell) in row.iter_mut().enumerate() {
                let mut sum = 0.0;
                for r in 0..RASTER_SIDE {
                    for c in 0..RASTER_SIDE {
                        sum += f64::from(raster.get_pixel(c as u32, r as u32)[0])
                            * (PI * (2 * r + 1) as f64 * u as f64 / (2.0 * n)).cos()
                            * (PI * (2 * c + 1) as f64 * v as f64 / (2.0 * n)).cos();
                    }
                }
                *cell = alpha(u) * alpha(v) * sum;
            }
        }
        out
    }

    /// 7-wide, 5-tall cells, rows shifted by 2, light 220 / dark 40.
    fn checkerboard() -> GrayImage {
        GrayImage::from_fn(32, 32, |c, r| {
            let light = ((r + 2) / 5 + c / 7) % 2 == 0;
            Luma([if light { 220 } else { 40 }])
        })
    }

    fn brute_force_hash(raster: &GrayImage) -> u64 {
        let block = brute_force_block(raster);
        let ac: Vec<f64> = block.iter().flatten().skip(1).copied().collect();
        let mut sorted = ac.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[31];
        ac.iter()
            .enumerate()
            .filter(|(_, &c)| c > median)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    #[test]
    fn constant_raster_hashes_to_zero() {
        let flat = GrayImage::from_pixel(32, 32, Luma([137]));
        assert_eq!(compute_phash(&flat).unwrap(), 0);
    }

    #[test]
    fn checkerboard_matches_pinned_value() {
        // Pinned from the brute-force oracle below (also cross-checked offline
        // with a separate direct-summation script).
        let img = checkerboard();
        assert_eq!(brute_force_hash(&img), 0x0f8f_f00f_b00f_b00f);
        assert_eq!(compute_phash(&img).unwrap(), 0x0f8f_f00f_b00f_b00f);
    }

    #[test]
    fn separable_dct_agrees_with_direct_sum() {
        let img = GrayImage::from_fn(32, 32, |x, y| Luma([((x * 13 + y * 29 + x * y) % 251) as u8]));
        let fast = low_frequency_block(&img).unwrap();
        let slow = brute_force_block(&img);
        for u in 0..BLOCK {
            for v in 0..BLOCK {
                assert!((fast[u][v] - slow[u][v]).abs() < 1e-8, "({u},{v})");
            }
        }
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let img = GrayImage::new(16, 32);
        assert_eq!(
            compute_phash(&img),
            Err(DimensionError { width: 16, height: 32 })
        );
    }

    #[test]
    fn similarity_extremes() {
        let a = 0x1234_5678_9abc_def0 & HASH_MASK;
        assert_eq!(phash_similarity::<f64>(a, a), 1.0);
        assert_eq!(phash_similarity::<f64>(a, !a & HASH_MASK), 0.0);
        let b = a ^ ((1u64 << 34) - 1);
        assert!((phash_similarity::<f64>(a, b) - (1.0 - 34.0 / 63.0)).abs() < 1e-12);
        assert!((phash_similarity::<f64>(a, b) - 0.4603).abs() < 1e-4);
    }
}
