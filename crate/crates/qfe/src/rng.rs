//! Deterministic counter-based random numbers.
//!
//! Every draw is a pure function of (seed, index, stream), so Monte-Carlo
//! results are independent of evaluation order and reproducible across runs
//! and thread counts.

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) keyed by (seed, index, stream).
pub fn uniform(seed: u64, index: u64, stream: u64) -> f64 {
    let mut key = splitmix64(seed ^ 0x2545f4914f6cdd1d);
    key = splitmix64(key ^ index.wrapping_mul(0x9e3779b97f4a7c15));
    key = splitmix64(key ^ stream.wrapping_mul(0xd1b54a32d192ed03));
    (key >> 11) as f64 * (1.0 / 9007199254740992.0) // 2^53
}

/// Pair of independent standard normals keyed by (seed, index), Box-Muller.
pub fn normal_pair(seed: u64, index: u64) -> (f64, f64) {
    let mut u1 = uniform(seed, index, 0);
    let u2 = uniform(seed, index, 1);
    if u1 <= 0.0 {
        u1 = f64::MIN_POSITIVE;
    }
    let mag = (-2.0 * u1.ln()).sqrt();
    let ang = 2.0 * std::f64::consts::PI * u2;
    (mag * ang.cos(), mag * ang.sin())
}

/// Order-stable pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
