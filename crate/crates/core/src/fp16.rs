//! Software IEEE 754 binary16 codec.
//!
//! Encoding rounds to nearest, ties to even, directly from `f64` so there is no
//! double rounding through `f32`. Every NaN encodes to [`CANONICAL_NAN`].

/// Quiet NaN with an empty payload and the sign bit clear.
pub const CANONICAL_NAN: u16 = 0x7e00;

/// Largest finite binary16 value.
pub const MAX: f64 = 65504.0;

const F64_MANT_BITS: u32 = 52;
const F64_MANT_MASK: u64 = (1 << F64_MANT_BITS) - 1;

/// Encodes `x` as the nearest binary16 bit pattern.
pub fn encode(x: f64) -> u16 {
    if x.is_nan() {
        return CANONICAL_NAN;
    }
    let bits = x.to_bits();
    let sign = ((bits >> 48) & 0x8000) as u16;
    let exp_field = ((bits >> F64_MANT_BITS) & 0x7ff) as i32;
    if exp_field == 0x7ff {
        return sign | 0x7c00;
    }
    if exp_field == 0 {
        // f64 zero or subnormal, far below the smallest binary16 subnormal.
        return sign;
    }
    let exp = exp_field - 1023;
    let mant = bits & F64_MANT_MASK;

    if exp >= 16 {
        return sign | 0x7c00;
    }

    if exp >= -14 {
        let shift = F64_MANT_BITS - 10;
        let mut m = mant >> shift;
        let rem = mant & ((1 << shift) - 1);
        let half = 1u64 << (shift - 1);
        let mut e = (exp + 15) as u64;
        if rem > half || (rem == half && m & 1 == 1) {
            m += 1;
            if m == 0x400 {
                m = 0;
                e += 1;
            }
        }
        if e >= 31 {
            return sign | 0x7c00;
        }
        return sign | ((e << 10) | m) as u16;
    }

    // Subnormal range: the result is sig * 2^-24 with sig < 1024. A carry into
    // bit 10 lands on the smallest normal, which is the correct encoding.
    let sig = (1u64 << F64_MANT_BITS) | mant;
    let shift = (F64_MANT_BITS as i32 - 24 - exp) as u32;
    if shift >= 64 {
        return sign;
    }
    let mut m = sig >> shift;
    let rem = sig & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    if rem > half || (rem == half && m & 1 == 1) {
        m += 1;
    }
    sign | m as u16
}

/// Decodes a binary16 bit pattern. NaN payloads are preserved.
pub fn decode(h: u16) -> f64 {
    let sign = ((h as u64) & 0x8000) << 48;
    let exp = ((h >> 10) & 0x1f) as i32;
    let mant = (h & 0x3ff) as u64;
    let magnitude = match (exp, mant) {
        (0, 0) => 0,
        (0, m) => {
            // Normalise the subnormal into an f64 normal.
            let lead = 63 - m.leading_zeros() as i32; // position of the top set bit, 0..=9
            let e = lead - 24 + 1023;
            let frac = (m << (F64_MANT_BITS as i32 - lead)) & F64_MANT_MASK;
            ((e as u64) << F64_MANT_BITS) | frac
        }
        (31, 0) => 0x7ff << F64_MANT_BITS,
        (31, m) => (0x7ff << F64_MANT_BITS) | (m << (F64_MANT_BITS - 10)),
        (e, m) => (((e - 15 + 1023) as u64) << F64_MANT_BITS) | (m << (F64_MANT_BITS - 10)),
    };
    f64::from_bits(sign | magnitude)
}

/// Nearest binary16 value to `x`, returned as `f64`.
#[inline]
pub fn round_fp16(x: f64) -> f64 {
    decode(encode(x))
}

/// `f32` convenience wrapper around [`round_fp16`]; the result is exact in `f32`.
#[inline]
pub fn round_fp16_f32(x: f32) -> f32 {
    round_fp16(x as f64) as f32
}

/// Whether `x` is exactly a binary16 value (NaN counts as representable).
pub fn is_representable(x: f64) -> bool {
    x.is_nan() || round_fp16(x).to_bits() == x.to_bits()
}

/// Distance in units in the last place between two finite binary16 values,
/// measured along the ordered bit-pattern line (so -0 and +0 are 0 apart).
pub fn ulp_distance(a: f64, b: f64) -> u32 {
    fn ordinal(h: u16) -> i32 {
        if h & 0x8000 != 0 {
            -((h & 0x7fff) as i32)
        } else {
            h as i32
        }
    }
    ordinal(encode(a)).abs_diff(ordinal(encode(b)))
}
