//! Salt-and-pepper corruption.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::DataError;

/// Corrupt `round(fraction * w * h)` pixel positions, chosen without
/// replacement, setting every channel at a chosen position to 0 or 1 with
/// equal probability. With `per_channel` the draw happens over individual
/// channel entries instead (`round(fraction * w * h * c)` of them).
pub fn salt_pepper(
    pixels: &mut [f32],
    width: usize,
    height: usize,
    channels: usize,
    fraction: f64,
    per_channel: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(), DataError> {
    if !(0.0..=1.0).contains(&fraction) || !fraction.is_finite() {
        return Err(DataError::FractionOutOfRange(fraction));
    }
    assert_eq!(pixels.len(), width * height * channels);
    let slots = if per_channel {
        width * height * channels
    } else {
        width * height
    };
    let count = (fraction * slots as f64).round() as usize;

    // Partial Fisher-Yates: the first `count` entries end up being a uniform
    // sample without replacement; the value coin is flipped per position.
    let mut order: Vec<u32> = (0..slots as u32).collect();
    for i in 0..count {
        let j = rng.gen_range(i..slots);
        order.swap(i, j);
        let value = if rng.gen_range(0..2u32) == 0 { 0.0 } else { 1.0 };
        let slot = order[i] as usize;
        if per_channel {
            pixels[slot] = value;
        } else {
            for ch in 0..channels {
                pixels[slot * channels + ch] = value;
            }
        }
    }
    Ok(())
}
