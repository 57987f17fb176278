//! Deterministic per-link randomness.
//!
//! Shadowing marks, D2D roles and scheduling picks are pure functions of
//! (seed, tag, endpoint ids), so a link sees the same shadowing whether it
//! carries signal or interference, results are independent of evaluation
//! order and thread count, and nothing of O(n²) size is ever stored.

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const TAG_UE_BS: u64 = 1;
pub const TAG_UE_UE: u64 = 2;
pub const TAG_ROLE: u64 = 3;
pub const TAG_SCHED: u64 = 4;

fn hash_parts(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut h = mix64(seed ^ 0xA076_1D64_78BD_642F);
    h = mix64(h ^ mix64(tag.wrapping_mul(0xE703_7ED1_A0B4_28DB)));
    h = mix64(h ^ mix64(a.wrapping_add(0x8EBC_6AF0_9C88_C6E3)));
    mix64(h ^ mix64(b.wrapping_add(0x5894_65E2_EDCC_0E2D)))
}

/// Uniform in (0, 1), never exactly 0 or 1.
fn unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Two independent standard normals from one (seed, id) key (Box-Muller).
pub fn standard_normal_pair(seed: u64, id: u64) -> (f64, f64) {
    let h1 = hash_parts(seed, 0xB0, id, 0x11);
    let h2 = hash_parts(seed, 0xB0, id, 0x22);
    let r = (-2.0 * unit(h1).ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * unit(h2);
    (r * th.cos(), r * th.sin())
}

/// Standard normal mark of one link. `TAG_UE_UE` links are symmetric in the
/// endpoints; `TAG_UE_BS` links key (ue, bs) by role.
pub fn link_normal(seed: u64, tag: u64, a: u64, b: u64) -> f64 {
    let (a, b) = if tag == TAG_UE_UE && a > b { (b, a) } else { (a, b) };
    let h1 = hash_parts(seed, tag, a, b);
    let h2 = mix64(h1 ^ 0x9E6C_63D0_876A_46CB);
    let r = (-2.0 * unit(h1).ln()).sqrt();
    (2.0 * std::f64::consts::PI * unit(h2)).cos() * r
}

/// Uniform (0,1) draw keyed to (seed, tag, id).
pub fn keyed_uniform(seed: u64, tag: u64, id: u64) -> f64 {
    unit(hash_parts(seed, tag, id, 0x77))
}

/// Uniform index in [0, n) keyed to (seed, tag, id).
pub fn keyed_index(seed: u64, tag: u64, id: u64, n: usize) -> usize {
    debug_assert!(n > 0);
    (hash_parts(seed, tag, id, 0x99) % n as u64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_symmetric() {
        assert_eq!(link_normal(7, TAG_UE_UE, 3, 9), link_normal(7, TAG_UE_UE, 9, 3));
        assert_ne!(link_normal(7, TAG_UE_BS, 3, 9), link_normal(7, TAG_UE_BS, 9, 3));
        assert_eq!(link_normal(7, TAG_UE_BS, 3, 9), link_normal(7, TAG_UE_BS, 3, 9));
        assert_ne!(link_normal(8, TAG_UE_BS, 3, 9), link_normal(7, TAG_UE_BS, 3, 9));
    }

    #[test]
    fn marks_are_standard_normal() {
        let n = 200_000u64;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for i in 0..n {
            let z = link_normal(42, TAG_UE_UE, i, i + 1);
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn keyed_index_in_range() {
        for i in 0..1000 {
            let k = keyed_index(5, TAG_SCHED, i, 7);
            assert!(k < 7);
        }
    }
}
