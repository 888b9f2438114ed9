//! Tensor element types, including half-precision conversions.
//!
//! f16 and bf16 are stored as raw u16 bit patterns; conversion to and from
//! f32 uses round-to-nearest-even, matching IEEE 754 and the framework
//! exporters this container interoperates with.

use serde::{Deserialize, Serialize};

use crate::MergeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dtype {
    F64,
    F32,
    F16,
    BF16,
    I64,
    I32,
    I8,
    U8,
}

impl Dtype {
    pub fn parse(tag: &str) -> Result<Dtype, MergeError> {
        Ok(match tag {
            "F64" => Dtype::F64,
            "F32" => Dtype::F32,
            "F16" => Dtype::F16,
            "BF16" => Dtype::BF16,
            "I64" => Dtype::I64,
            "I32" => Dtype::I32,
            "I8" => Dtype::I8,
            "U8" => Dtype::U8,
            other => return Err(MergeError::UnsupportedDtype(other.to_string())),
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Dtype::F64 => "F64",
            Dtype::F32 => "F32",
            Dtype::F16 => "F16",
            Dtype::BF16 => "BF16",
            Dtype::I64 => "I64",
            Dtype::I32 => "I32",
            Dtype::I8 => "I8",
            Dtype::U8 => "U8",
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Dtype::F64 | Dtype::I64 => 8,
            Dtype::F32 | Dtype::I32 => 4,
            Dtype::F16 | Dtype::BF16 => 2,
            Dtype::I8 | Dtype::U8 => 1,
        }
    }

    pub fn is_float(&self) -> bool {
        matches!(self, Dtype::F64 | Dtype::F32 | Dtype::F16 | Dtype::BF16)
    }
}

/// IEEE binary16 -> f32. Exact: every f16 value is representable in f32.
pub fn f16_to_f32(bits: u16) -> f32 {
    let sign = u32::from(bits >> 15) << 31;
    let exp = u32::from((bits >> 10) & 0x1f);
    let frac = u32::from(bits & 0x3ff);
    let out = match (exp, frac) {
        (0, 0) => sign,
        (0, f) => {
            // Subnormal: value = f * 2^-24. Renormalize around the top set
            // bit p, giving exponent 127 + (p - 24) and the remaining bits
            // left-aligned in the 23-bit mantissa.
            let p = 31 - f.leading_zeros();
            let exp = 103 + p;
            let mantissa = (f ^ (1 << p)) << (23 - p);
            sign | (exp << 23) | mantissa
        }
        (0x1f, 0) => sign | 0x7f80_0000,
        (0x1f, f) => sign | 0x7f80_0000 | (f << 13),
        (e, f) => sign | ((e + 127 - 15) << 23) | (f << 13),
    };
    f32::from_bits(out)
}

/// f32 -> IEEE binary16 with round-to-nearest-even, overflow to infinity,
/// gradual underflow to subnormals.
pub fn f32_to_f16(value: f32) -> u16 {
    let bits = value.to_bits();
    let sign = ((bits >> 31) as u16) << 15;
    let exp = ((bits >> 23) & 0xff) as i32;
    let frac = bits & 0x007f_ffff;

    if exp == 0xff {
        // Infinity or NaN; keep NaN payload's top bits, force a quiet bit
        // so the payload never rounds to infinity.
        return if frac == 0 { sign | 0x7c00 } else { sign | 0x7c00 | 0x0200 | (frac >> 13) as u16 };
    }

    // Unbiased exponent, then rebias for f16.
    let unbiased = exp - 127;
    let new_exp = unbiased + 15;
    if new_exp >= 0x1f {
        return sign | 0x7c00;
    }
    if new_exp <= 0 {
        // Subnormal or zero: shift the (implicit-1) mantissa right.
        if new_exp < -10 {
            return sign;
        }
        let mant = frac | 0x0080_0000;
        let shift = (14 - new_exp) as u32;
        let halfway = 1u32 << (shift - 1);
        let mut out = (mant >> shift) as u16;
        let rem = mant & ((1 << shift) - 1);
        if rem > halfway || (rem == halfway && out & 1 == 1) {
            out += 1;
        }
        return sign | out;
    }

    let mut out = sign | ((new_exp as u16) << 10) | (frac >> 13) as u16;
    let rem = frac & 0x1fff;
    if rem > 0x1000 || (rem == 0x1000 && out & 1 == 1) {
        out = out.wrapping_add(1);
    }
    out
}

/// bfloat16 -> f32: bf16 is the top half of an f32.
pub fn bf16_to_f32(bits: u16) -> f32 {
    f32::from_bits(u32::from(bits) << 16)
}

/// f32 -> bfloat16 with round-to-nearest-even; NaN forced quiet.
pub fn f32_to_bf16(value: f32) -> u16 {
    let bits = value.to_bits();
    if value.is_nan() {
        return ((bits >> 16) as u16) | 0x0040;
    }
    let rem = bits & 0xffff;
    let mut out = (bits >> 16) as u16;
    if rem > 0x8000 || (rem == 0x8000 && out & 1 == 1) {
        out = out.wrapping_add(1);
    }
    out
}
