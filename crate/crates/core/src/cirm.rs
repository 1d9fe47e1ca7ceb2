//! Compressed complex ideal ratio mask.
//!
//! Each of the real and imaginary mask components `v` is squashed into `(-K, K)` with
//! `o = K·(1 - e^{-C·v}) / (1 + e^{-C·v}) = K·tanh(C·v/2)`, `K = 10`, `C = 0.1`.
//! Mask frames are laid out interleaved: `[re(0), im(0), re(1), im(1), ...]`.

use num_complex::Complex32;

use crate::error::check_len;
use crate::Result;

/// Compression bound.
pub const K: f32 = 10.0;
/// Compression steepness.
pub const C: f32 = 0.1;
/// Compressed values are clamped to `[-K + EPS, K - EPS]` before inversion.
pub const EPS: f32 = 1e-4;

pub fn compress_component(v: f32) -> f32 {
    (K as f64 * libm::tanh(C as f64 * v as f64 / 2.0)) as f32
}

/// Inverse of [`compress_component`] after clamping to `|o| <= K - EPS`.
pub fn decompress_component(o: f32) -> f32 {
    let o = o.clamp(-K + EPS, K - EPS) as f64;
    let k = K as f64;
    (-(1.0 / C as f64) * libm::log((k - o) / (k + o))) as f32
}

pub fn compress(m: Complex32) -> (f32, f32) {
    (compress_component(m.re), compress_component(m.im))
}

pub fn decompress(re: f32, im: f32) -> Complex32 {
    Complex32::new(decompress_component(re), decompress_component(im))
}

/// `M = S / X` per bin, with a small regularizer on `|X|²`.
pub fn ideal_mask(clean: Complex32, noisy: Complex32) -> Complex32 {
    let denom = noisy.re * noisy.re + noisy.im * noisy.im + 1e-10;
    Complex32::new(
        (noisy.re * clean.re + noisy.im * clean.im) / denom,
        (noisy.re * clean.im - noisy.im * clean.re) / denom,
    )
}

/// Decompresses an interleaved mask frame and multiplies it onto `noisy`, writing `out`.
pub fn apply_mask(mask: &[f32], noisy: &[Complex32], out: &mut [Complex32]) -> Result<()> {
    check_len("mask frame", 2 * noisy.len(), mask.len())?;
    check_len("enhanced frame", noisy.len(), out.len())?;
    for ((o, x), m) in out.iter_mut().zip(noisy).zip(mask.chunks_exact(2)) {
        *o = decompress(m[0], m[1]) * x;
    }
    Ok(())
}
