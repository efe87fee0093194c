//! Stateless seed derivation. Every random stream in a trial is keyed off a
//! root seed plus a few integers, so results do not depend on evaluation order.

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `root` and `parts`; distinct inputs give independent-looking outputs.
pub fn derive(root: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(root), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Seed for the `trial`-th Monte Carlo trial under `root`.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    derive(root, &[0x0074_7269_616c, trial])
}
