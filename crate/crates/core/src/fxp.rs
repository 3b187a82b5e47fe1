//! Scaled-integer arithmetic whose rounding rules are exactly the ones the
//! division and rescaling gadgets enforce in-circuit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::PrimeField;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FxpError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {value} outside [-2^{bits}, 2^{bits})")]
    RangeOverflow { value: i128, bits: u32 },
    #[error("non-finite input")]
    NotFinite,
    #[error("invalid fixed-point spec: {0}")]
    InvalidSpec(String),
    #[error("operands carry different fixed-point specs")]
    SpecMismatch,
}

pub type Result<T> = std::result::Result<T, FxpError>;

/// Scale factor, magnitude bound and embedding field of a fixed-point format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FxpSpec {
    pub scale_factor: u64,
    pub range_bits: u32,
    pub field_modulus: PrimeField,
}

impl FxpSpec {
    pub fn new(scale_factor: u64, range_bits: u32, field: PrimeField) -> Result<Self> {
        let spec = Self { scale_factor, range_bits, field_modulus: field };
        spec.validate()?;
        Ok(spec)
    }

    /// `SF = 2^sf_log2` over BN254 with the given range.
    pub fn pow2(sf_log2: u32, range_bits: u32) -> Result<Self> {
        if sf_log2 >= 63 {
            return Err(FxpError::InvalidSpec(format!("scale factor 2^{sf_log2} too large")));
        }
        Self::new(1 << sf_log2, range_bits, PrimeField::bn254())
    }

    /// Recommender default: `SF = 2^13`, `N = 20`.
    pub fn recommender() -> Self {
        Self::pow2(13, 20).expect("valid default")
    }

    /// Classifier default: `SF = 2^15`, `N = 20`.
    pub fn classifier() -> Self {
        Self::pow2(15, 20).expect("valid default")
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale_factor == 0 {
            return Err(FxpError::InvalidSpec("scale factor must be positive".into()));
        }
        if self.range_bits == 0 || self.range_bits > 62 {
            return Err(FxpError::InvalidSpec(format!("range bits {} not in 1..=62", self.range_bits)));
        }
        if (self.scale_factor as u128) > (1u128 << self.range_bits) {
            return Err(FxpError::InvalidSpec(format!(
                "scale factor {} exceeds 2^{}",
                self.scale_factor, self.range_bits
            )));
        }
        // 2^(2N+2) < q
        if self.field_modulus.bits() <= 2 * self.range_bits + 2 {
            return Err(FxpError::InvalidSpec(format!(
                "field modulus has {} bits; need more than {}",
                self.field_modulus.bits(),
                2 * self.range_bits + 2
            )));
        }
        Ok(())
    }

    pub fn sf(&self) -> i64 {
        self.scale_factor as i64
    }

    pub fn field(&self) -> &PrimeField {
        &self.field_modulus
    }

    /// `2^N`
    pub fn bound(&self) -> i128 {
        1i128 << self.range_bits
    }

    /// `2^(2N)`
    pub fn wide_bound(&self) -> i128 {
        1i128 << (2 * self.range_bits)
    }

    pub fn check_raw(&self, raw: i128) -> Result<i64> {
        if raw.abs() >= self.bound() {
            return Err(FxpError::RangeOverflow { value: raw, bits: self.range_bits });
        }
        Ok(raw as i64)
    }

    pub fn check_wide(&self, v: i128) -> Result<i128> {
        if v.abs() >= self.wide_bound() {
            return Err(FxpError::RangeOverflow { value: v, bits: 2 * self.range_bits });
        }
        Ok(v)
    }

    /// Nearest integer to `x·SF`, ties away from zero.
    pub fn quantize(&self, x: f64) -> Result<FxpScalar> {
        Ok(FxpScalar { raw: self.quantize_raw(x)?, spec: *self })
    }

    pub fn quantize_raw(&self, x: f64) -> Result<i64> {
        if !x.is_finite() {
            return Err(FxpError::NotFinite);
        }
        let scaled = x * self.scale_factor as f64;
        if scaled.abs() >= self.bound() as f64 {
            return Err(FxpError::RangeOverflow { value: scaled as i128, bits: self.range_bits });
        }
        self.check_raw(scaled.round() as i128)
    }

    pub fn dequantize(&self, raw: i64) -> f64 {
        raw as f64 / self.scale_factor as f64
    }

    /// Rounded division under the gadget's preconditions:
    /// `|a| < 2^(2N)` and `1 <= c < 2^N`; the quotient must fit `2^N`.
    pub fn round_div(&self, a: i128, c: i128) -> Result<i128> {
        if c == 0 {
            return Err(FxpError::DivisionByZero);
        }
        if c < 0 || c >= self.bound() {
            return Err(FxpError::RangeOverflow { value: c, bits: self.range_bits });
        }
        self.check_wide(a)?;
        let q = round_div(a, c)?;
        if q.abs() >= self.bound() {
            return Err(FxpError::RangeOverflow { value: q, bits: self.range_bits });
        }
        Ok(q)
    }

    /// `round_div(a·b, SF)` on raw values.
    pub fn mul_rescale_raw(&self, a: i64, b: i64) -> Result<i64> {
        let prod = self.check_wide(a as i128 * b as i128)?;
        let q = self.round_div(prod, self.scale_factor as i128)?;
        self.check_raw(q)
    }

    pub fn scalar(&self, raw: i64) -> Result<FxpScalar> {
        Ok(FxpScalar { raw: self.check_raw(raw as i128)?, spec: *self })
    }
}

/// `⌊a/c⌋` for `c >= 1`.
pub fn floor_div(a: i128, c: i128) -> Result<i128> {
    if c == 0 {
        return Err(FxpError::DivisionByZero);
    }
    if c < 0 {
        return Err(FxpError::RangeOverflow { value: c, bits: 0 });
    }
    Ok(a.div_euclid(c))
}

/// Nearest integer to `a/c`: half up on nonnegative dividends, mirrored for
/// negative ones so that the rounding is symmetric about zero.
pub fn round_div(a: i128, c: i128) -> Result<i128> {
    if c == 0 {
        return Err(FxpError::DivisionByZero);
    }
    if c < 0 {
        return Err(FxpError::RangeOverflow { value: c, bits: 0 });
    }
    if a >= 0 {
        Ok((2 * a + c) / (2 * c))
    } else {
        Ok(-((-2 * a + c) / (2 * c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxpScalar {
    pub raw: i64,
    pub spec: FxpSpec,
}

impl FxpScalar {
    pub fn to_f64(&self) -> f64 {
        self.spec.dequantize(self.raw)
    }

    pub fn mul_rescale(&self, other: &FxpScalar) -> Result<FxpScalar> {
        if self.spec != other.spec {
            return Err(FxpError::SpecMismatch);
        }
        Ok(FxpScalar { raw: self.spec.mul_rescale_raw(self.raw, other.raw)?, spec: self.spec })
    }
}

/// Dense row-major tensor of raw values sharing one spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FxpTensor {
    shape: Vec<usize>,
    data: Vec<i64>,
    spec: FxpSpec,
}

impl FxpTensor {
    pub fn new(shape: Vec<usize>, data: Vec<i64>, spec: FxpSpec) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(FxpError::InvalidSpec(format!(
                "shape {:?} holds {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        for &v in &data {
            spec.check_raw(v as i128)?;
        }
        Ok(Self { shape, data, spec })
    }

    pub fn zeros(shape: Vec<usize>, spec: FxpSpec) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0; n], spec }
    }

    pub fn from_f64(shape: Vec<usize>, values: &[f64], spec: FxpSpec) -> Result<Self> {
        let data = values.iter().map(|&x| spec.quantize_raw(x)).collect::<Result<Vec<_>>>()?;
        Self::new(shape, data, spec)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn spec(&self) -> &FxpSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> FxpScalar {
        FxpScalar { raw: self.data[i], spec: self.spec }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&r| self.spec.dequantize(r)).collect()
    }
}
