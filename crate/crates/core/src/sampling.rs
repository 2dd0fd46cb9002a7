//! Deterministic sample streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for substream `stream` of `seed`; independent of scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Roberts' R2 sequence, based on the plastic number.
const R2_A1: f64 = 0.754_877_666_246_692_8;
const R2_A2: f64 = 0.569_840_290_998_053_3;

/// The `i`-th point of a low-discrepancy sequence in the unit square.
pub fn r2_point(i: usize) -> [f64; 2] {
    let n = i as f64 + 1.0;
    [(0.5 + R2_A1 * n).fract(), (0.5 + R2_A2 * n).fract()]
}

pub fn r2_points(count: usize) -> Vec<[f64; 2]> {
    (0..count).map(r2_point).collect()
}
