//! Counter-based random streams: every (seed, sweep point, shot) triple gets
//! its own generator, so results do not depend on thread count or order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for one (seed, point, shot) triple.
pub fn stream(seed: u64, point: u64, shot: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ point) ^ shot.rotate_left(17));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(point);
    rng
}
