use num_bigint::BigUint;
use num_traits::One;

use super::EnumError;

/// Largest tower value, in bits, that [`tower`] materializes.
pub const DEFAULT_TOWER_BITS: u64 = 1 << 24;

/// Iterated exponential: `tower(0, b) = b`, `tower(l, b) = 2^tower(l-1, b)`.
pub fn tower(level: usize, base: u64) -> Result<BigUint, EnumError> {
    tower_capped(level, &BigUint::from(base), DEFAULT_TOWER_BITS).ok_or(EnumError::TowerTooLarge { level, base })
}

/// [`tower`] with an arbitrary base, or `None` if the value would need more
/// than `max_bits` bits.
pub fn tower_capped(level: usize, base: &BigUint, max_bits: u64) -> Option<BigUint> {
    let mut v = base.clone();
    for _ in 0..level {
        // 2^v has v + 1 bits.
        if v >= BigUint::from(max_bits) {
            return None;
        }
        let e: u64 = v.try_into().expect("below the cap");
        v = BigUint::one() << e;
    }
    (v.bits() <= max_bits).then_some(v)
}

/// Whether `x <= tower(level, base)`, decided without materializing towers
/// larger than `x`.
pub fn tower_at_least(level: usize, base: &BigUint, x: &BigUint) -> bool {
    let mut v = base.clone();
    for _ in 0..level {
        // Once v exceeds the bit length of x, 2^v > x and every further
        // exponential only grows.
        if v > BigUint::from(x.bits()) {
            return true;
        }
        let e: u64 = v.try_into().expect("at most the bit length of x");
        v = BigUint::one() << e;
    }
    *x <= v
}
