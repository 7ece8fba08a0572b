//! Signed two's-complement fixed-point formats.
//!
//! A format `s-i-f` stores one sign bit, `i` integer bits and `f` fraction
//! bits. Values are `raw * 2^-f` with `raw` in `[-2^(i+f), 2^(i+f) - 1]`.
//! Rounding is to nearest with ties away from zero; out-of-range values
//! saturate to the nearest bound.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Widest supported storage, so raw products always fit in `i128`.
pub const MAX_WIDTH: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    integer_bits: u8,
    fraction_bits: u8,
}

impl FixedPointFormat {
    /// Weight format: sign, one integer bit, seven fraction bits.
    pub const Q1_7: Self = Self {
        integer_bits: 1,
        fraction_bits: 7,
    };
    /// Buffer format: sign, one integer bit, four fraction bits.
    pub const Q1_4: Self = Self {
        integer_bits: 1,
        fraction_bits: 4,
    };

    pub fn new(integer_bits: u32, fraction_bits: u32) -> Result<Self> {
        if integer_bits + fraction_bits == 0 {
            return Err(Error::InvalidFormat(
                "need at least one integer or fraction bit".into(),
            ));
        }
        if 1 + integer_bits + fraction_bits > MAX_WIDTH {
            return Err(Error::InvalidFormat(format!(
                "width {} exceeds {MAX_WIDTH} bits",
                1 + integer_bits + fraction_bits
            )));
        }
        Ok(Self {
            integer_bits: integer_bits as u8,
            fraction_bits: fraction_bits as u8,
        })
    }

    pub fn integer_bits(self) -> u32 {
        self.integer_bits as u32
    }

    pub fn fraction_bits(self) -> u32 {
        self.fraction_bits as u32
    }

    /// Total stored width including the sign bit.
    pub fn width(self) -> u32 {
        1 + self.integer_bits() + self.fraction_bits()
    }

    pub fn step(self) -> f64 {
        (-(self.fraction_bits() as f64)).exp2()
    }

    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.width() - 1))
    }

    pub fn max_raw(self) -> i64 {
        (1i64 << (self.width() - 1)) - 1
    }

    pub fn min_value(self) -> f64 {
        self.value_of(self.min_raw())
    }

    pub fn max_value(self) -> f64 {
        self.value_of(self.max_raw())
    }

    /// Exact real value of a raw mantissa in this format.
    pub fn value_of(self, raw: i64) -> f64 {
        raw as f64 * self.step()
    }

    pub fn from_raw(self, raw: i64) -> Result<FxpValue> {
        if raw < self.min_raw() || raw > self.max_raw() {
            return Err(Error::InvalidFormat(format!(
                "raw {raw} does not fit in {} bits",
                self.width()
            )));
        }
        Ok(FxpValue { raw, format: self })
    }

    pub fn quantize(self, x: f64) -> Result<FxpValue> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let (raw, _) = self.quantize_raw(x);
        Ok(FxpValue { raw, format: self })
    }

    /// Nearest raw mantissa and whether the bounds clipped it. NaN maps to 0.
    pub fn quantize_raw(self, x: f64) -> (i64, bool) {
        if x.is_nan() {
            return (0, true);
        }
        // Scaling by a power of two is exact; `round` ties away from zero.
        let scaled = (x * (self.fraction_bits() as f64).exp2()).round();
        if scaled > self.max_raw() as f64 {
            (self.max_raw(), true)
        } else if scaled < self.min_raw() as f64 {
            (self.min_raw(), true)
        } else {
            (scaled as i64, false)
        }
    }

    /// Round `x` onto this format's grid and return the real value.
    pub fn snap(self, x: f64) -> (f64, bool) {
        let (raw, saturated) = self.quantize_raw(x);
        (self.value_of(raw), saturated)
    }

    pub fn is_representable(self, x: f64) -> bool {
        x.is_finite() && self.snap(x).0 == x
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1-{}-{}", self.integer_bits, self.fraction_bits)
    }
}

impl FromStr for FixedPointFormat {
    type Err = Error;

    /// Parses `"s-i-f"`, e.g. `"1-1-7"`. The sign field must be 1.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        let bad = || Error::InvalidFormat(format!("expected \"s-i-f\", got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<u32> = parts
            .iter()
            .map(|p| p.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if nums[0] != 1 {
            return Err(Error::InvalidFormat(format!(
                "sign field must be 1 (signed), got {}",
                nums[0]
            )));
        }
        Self::new(nums[1], nums[2])
    }
}

/// Storage format of weights or buffers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NumberFormat {
    #[default]
    Float,
    Fixed(FixedPointFormat),
}

impl NumberFormat {
    pub fn fixed(self) -> Option<FixedPointFormat> {
        match self {
            NumberFormat::Float => None,
            NumberFormat::Fixed(f) => Some(f),
        }
    }

    /// Stored bits per element; floats are counted as 32-bit.
    pub fn bits(self) -> u64 {
        match self {
            NumberFormat::Float => 32,
            NumberFormat::Fixed(f) => f.width() as u64,
        }
    }
}

impl fmt::Display for NumberFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumberFormat::Float => f.write_str("float"),
            NumberFormat::Fixed(q) => q.fmt(f),
        }
    }
}

impl FromStr for NumberFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("float") {
            Ok(NumberFormat::Float)
        } else {
            s.parse().map(NumberFormat::Fixed)
        }
    }
}

impl Serialize for NumberFormat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NumberFormat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A raw mantissa tagged with its format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FxpValue {
    raw: i64,
    format: FixedPointFormat,
}

impl FxpValue {
    pub fn raw(self) -> i64 {
        self.raw
    }

    pub fn format(self) -> FixedPointFormat {
        self.format
    }

    pub fn value(self) -> f64 {
        self.format.value_of(self.raw)
    }

    /// `self + a * b` evaluated exactly, then rounded once into `self`'s format.
    pub fn mul_acc(
        self,
        a: FxpValue,
        b: FxpValue,
        saturations: &mut SaturationCounter,
    ) -> FxpValue {
        let acc_frac = self.format.fraction_bits();
        let prod_frac = a.format.fraction_bits() + b.format.fraction_bits();
        let common = acc_frac.max(prod_frac);
        let sum = ((self.raw as i128) << (common - acc_frac))
            + (((a.raw as i128) * (b.raw as i128)) << (common - prod_frac));
        let rounded = round_shift(sum, common - acc_frac);
        let fmt = self.format;
        let raw = if rounded > fmt.max_raw() as i128 {
            saturations.record();
            fmt.max_raw()
        } else if rounded < fmt.min_raw() as i128 {
            saturations.record();
            fmt.min_raw()
        } else {
            rounded as i64
        };
        FxpValue { raw, format: fmt }
    }
}

impl PartialOrd for FxpValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

/// Divide by `2^shift`, rounding to nearest with ties away from zero.
fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let half = 1i128 << (shift - 1);
    if v >= 0 {
        (v + half) >> shift
    } else {
        -((-v + half) >> shift)
    }
}

/// Number of results that were clipped to a format bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaturationCounter(u64);

impl SaturationCounter {
    pub fn record(&mut self) {
        self.0 += 1;
    }

    pub fn count(self) -> u64 {
        self.0
    }
}

pub fn quantize(x: f64, fmt: FixedPointFormat) -> Result<FxpValue> {
    fmt.quantize(x)
}

pub fn dequantize(v: FxpValue) -> f64 {
    v.value()
}

pub fn fxp_mul_acc(acc: FxpValue, a: FxpValue, b: FxpValue) -> FxpValue {
    acc.mul_acc(a, b, &mut SaturationCounter::default())
}
