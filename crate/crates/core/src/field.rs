//! Prime-field arithmetic over a runtime-chosen modulus.
//!
//! Elements are four little-endian 64-bit limbs kept in Montgomery form
//! (`R = 2^256`), fully reduced so that equality and hashing work on the raw
//! representation. The modulus must be an odd prime below `2^255`.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scalar-field prime of the BN254 curve.
pub const BN254_SCALAR_MODULUS_HEX: &str =
    "30644e72e131a029b85045b68181585d2833e84879b9709143e1f593f0000001";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus must be odd and below 2^255")]
    BadModulus,
    #[error("modulus is not prime")]
    NotPrime,
    #[error("invalid hex field element: {0}")]
    BadHex(String),
    #[error("value is not a canonical field element")]
    NotCanonical,
}

/// A field element in Montgomery form. Only meaningful together with the
/// [`PrimeField`] that produced it.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(pub(crate) [u64; 4]);

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fe(mont:{:016x}{:016x}{:016x}{:016x})", self.0[3], self.0[2], self.0[1], self.0[0])
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    modulus: [u64; 4],
    /// `-q^{-1} mod 2^64`
    inv: u64,
    /// `R^2 mod q`
    r2: [u64; 4],
    /// `R mod q`, the Montgomery image of one.
    one: [u64; 4],
    /// `(q - 1) / 2`, canonical, used for signed decoding.
    half: [u64; 4],
    bits: u32,
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimeField(0x{})", self.modulus_hex())
    }
}

impl Serialize for PrimeField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{}", self.modulus_hex()))
    }
}

impl<'de> Deserialize<'de> for PrimeField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PrimeField::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[inline(always)]
fn mac(acc: u64, a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = acc as u128 + (a as u128) * (b as u128) + carry as u128;
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + b as u128 + carry as u128;
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub(b as u128 + borrow as u128);
    (t as u64, ((t >> 64) as u64) & 1)
}

#[inline(always)]
fn geq(a: &[u64; 4], b: &[u64; 4]) -> bool {
    for i in (0..4).rev() {
        if a[i] != b[i] {
            return a[i] > b[i];
        }
    }
    true
}

#[inline(always)]
fn sub_limbs(a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut borrow = 0;
    for i in 0..4 {
        let (d, br) = sbb(a[i], b[i], borrow);
        out[i] = d;
        borrow = br;
    }
    out
}

fn to_biguint(limbs: &[u64; 4]) -> BigUint {
    let mut bytes = Vec::with_capacity(32);
    for l in limbs {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    BigUint::from_bytes_le(&bytes)
}

fn from_biguint(v: &BigUint) -> Option<[u64; 4]> {
    let digits = v.to_u64_digits();
    if digits.len() > 4 {
        return None;
    }
    let mut out = [0u64; 4];
    out[..digits.len()].copy_from_slice(&digits);
    Some(out)
}

fn is_probable_prime(n: &BigUint) -> bool {
    let one = BigUint::from(1u32);
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    const SMALL: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p) == BigUint::from(0u32) {
            return false;
        }
    }
    let n_minus_one = n - &one;
    let mut d = n_minus_one.clone();
    let mut s = 0u32;
    while (&d % &two) == BigUint::from(0u32) {
        d >>= 1;
        s += 1;
    }
    // Deterministic for n < 3.3e24 and overwhelmingly reliable beyond.
    'witness: for a in SMALL {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PrimeField {
    pub fn new(modulus: &BigUint) -> Result<Self, FieldError> {
        let limbs = from_biguint(modulus).ok_or(FieldError::BadModulus)?;
        if limbs[0] & 1 == 0 || limbs[3] >> 63 != 0 || modulus.bits() < 2 {
            return Err(FieldError::BadModulus);
        }
        if !is_probable_prime(modulus) {
            return Err(FieldError::NotPrime);
        }
        // Newton iteration for q^{-1} mod 2^64.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(limbs[0].wrapping_mul(inv)));
        }
        let r = BigUint::from(1u32) << 256;
        let one = from_biguint(&(&r % modulus)).expect("reduced");
        let r2 = from_biguint(&((&r * &r) % modulus)).expect("reduced");
        let half = from_biguint(&((modulus - 1u32) >> 1)).expect("reduced");
        Ok(Self {
            modulus: limbs,
            inv: inv.wrapping_neg(),
            r2,
            one,
            half,
            bits: modulus.bits() as u32,
        })
    }

    pub fn bn254() -> Self {
        Self::from_hex(BN254_SCALAR_MODULUS_HEX).expect("BN254 modulus is valid")
    }

    /// Parses a modulus given as hex, with or without a `0x` prefix.
    pub fn from_hex(s: &str) -> Result<Self, FieldError> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let m = BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| FieldError::BadHex(s.to_string()))?;
        Self::new(&m)
    }

    pub fn modulus(&self) -> BigUint {
        to_biguint(&self.modulus)
    }

    pub fn modulus_hex(&self) -> String {
        self.modulus().to_str_radix(16)
    }

    /// Number of bits in the modulus.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    fn mont_mul(&self, a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
        let q = &self.modulus;
        let mut t = [0u64; 6];
        for i in 0..4 {
            let mut c = 0u64;
            for j in 0..4 {
                let (lo, hi) = mac(t[j], a[j], b[i], c);
                t[j] = lo;
                c = hi;
            }
            let (s, c2) = adc(t[4], c, 0);
            t[4] = s;
            t[5] = c2;
            let m = t[0].wrapping_mul(self.inv);
            let (_, mut c) = mac(t[0], m, q[0], 0);
            for j in 1..4 {
                let (lo, hi) = mac(t[j], m, q[j], c);
                t[j - 1] = lo;
                c = hi;
            }
            let (s, c2) = adc(t[4], c, 0);
            t[3] = s;
            t[4] = t[5] + c2;
            t[5] = 0;
        }
        let mut out = [t[0], t[1], t[2], t[3]];
        if t[4] != 0 || geq(&out, q) {
            out = sub_limbs(&out, q);
        }
        out
    }

    pub fn zero(&self) -> Fe {
        Fe([0; 4])
    }

    pub fn one(&self) -> Fe {
        Fe(self.one)
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let mut out = [0u64; 4];
        let mut carry = 0;
        for i in 0..4 {
            let (s, c) = adc(a.0[i], b.0[i], carry);
            out[i] = s;
            carry = c;
        }
        if carry != 0 || geq(&out, &self.modulus) {
            out = sub_limbs(&out, &self.modulus);
        }
        Fe(out)
    }

    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        if geq(&a.0, &b.0) {
            Fe(sub_limbs(&a.0, &b.0))
        } else {
            let d = sub_limbs(&self.modulus, &b.0);
            self.add(a, Fe(d))
        }
    }

    pub fn neg(&self, a: Fe) -> Fe {
        if a.0 == [0; 4] {
            a
        } else {
            Fe(sub_limbs(&self.modulus, &a.0))
        }
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe(self.mont_mul(&a.0, &b.0))
    }

    pub fn square(&self, a: Fe) -> Fe {
        self.mul(a, a)
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inverse(&self, a: Fe) -> Option<Fe> {
        if a.0 == [0; 4] {
            return None;
        }
        let e = self.modulus() - 2u32;
        Some(self.pow_biguint(a, &e))
    }

    fn pow_biguint(&self, a: Fe, e: &BigUint) -> Fe {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.square(acc);
            if e.bit(i) {
                acc = self.mul(acc, a);
            }
        }
        acc
    }

    fn from_canonical_limbs(&self, limbs: [u64; 4]) -> Fe {
        Fe(self.mont_mul(&limbs, &self.r2))
    }

    /// Canonical (non-Montgomery) limbs in `[0, q)`.
    pub fn canonical_limbs(&self, a: Fe) -> [u64; 4] {
        self.mont_mul(&a.0, &[1, 0, 0, 0])
    }

    pub fn from_u64(&self, v: u64) -> Fe {
        self.from_canonical_limbs([v, 0, 0, 0])
    }

    pub fn from_u128(&self, v: u128) -> Fe {
        let mut limbs = [v as u64, (v >> 64) as u64, 0, 0];
        if geq(&limbs, &self.modulus) {
            let r = to_biguint(&limbs) % self.modulus();
            limbs = from_biguint(&r).expect("reduced");
        }
        self.from_canonical_limbs(limbs)
    }

    /// Signed integers embed as `q + v` for negative `v`.
    pub fn from_i128(&self, v: i128) -> Fe {
        if v >= 0 {
            self.from_u128(v as u128)
        } else {
            self.neg(self.from_u128(v.unsigned_abs()))
        }
    }

    pub fn from_i64(&self, v: i64) -> Fe {
        self.from_i128(v as i128)
    }

    pub fn from_biguint(&self, v: &BigUint) -> Fe {
        let r = v % self.modulus();
        self.from_canonical_limbs(from_biguint(&r).expect("reduced"))
    }

    pub fn to_biguint(&self, a: Fe) -> BigUint {
        to_biguint(&self.canonical_limbs(a))
    }

    /// Canonical value if it is below `2^128`.
    pub fn to_u128(&self, a: Fe) -> Option<u128> {
        let c = self.canonical_limbs(a);
        if c[2] != 0 || c[3] != 0 {
            return None;
        }
        Some(c[0] as u128 | ((c[1] as u128) << 64))
    }

    /// Signed reading: values above `(q-1)/2` are negative. `None` if the
    /// magnitude does not fit in an `i128`.
    pub fn to_i128(&self, a: Fe) -> Option<i128> {
        let c = self.canonical_limbs(a);
        if geq(&self.half, &c) {
            if c[2] != 0 || c[3] != 0 || c[1] >> 63 != 0 {
                return None;
            }
            Some((c[0] as u128 | ((c[1] as u128) << 64)) as i128)
        } else {
            let m = sub_limbs(&self.modulus, &c);
            if m[2] != 0 || m[3] != 0 || m[1] >> 63 != 0 {
                return None;
            }
            Some(-((m[0] as u128 | ((m[1] as u128) << 64)) as i128))
        }
    }

    /// True iff the canonical value lies in `[0, 2^bits)`.
    pub fn in_range(&self, a: Fe, bits: u32) -> bool {
        let c = self.canonical_limbs(a);
        if bits >= 256 {
            return true;
        }
        let limb = (bits / 64) as usize;
        let off = bits % 64;
        if c[limb] >> off != 0 {
            return false;
        }
        c[limb + 1..].iter().all(|&l| l == 0)
    }

    /// Lowercase minimal hex of the canonical value, `0x`-prefixed.
    pub fn to_hex(&self, a: Fe) -> String {
        format!("0x{}", self.to_biguint(a).to_str_radix(16))
    }

    pub fn from_hex_element(&self, s: &str) -> Result<Fe, FieldError> {
        let body = s.strip_prefix("0x").ok_or_else(|| FieldError::BadHex(s.to_string()))?;
        let v = BigUint::parse_bytes(body.as_bytes(), 16).ok_or_else(|| FieldError::BadHex(s.to_string()))?;
        if v >= self.modulus() {
            return Err(FieldError::NotCanonical);
        }
        Ok(self.from_biguint(&v))
    }

    /// 32-byte little-endian canonical encoding.
    pub fn to_le_bytes(&self, a: Fe) -> [u8; 32] {
        let c = self.canonical_limbs(a);
        let mut out = [0u8; 32];
        for (i, l) in c.iter().enumerate() {
            out[i * 8..i * 8 + 8].copy_from_slice(&l.to_le_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(bytes: &[u8]) -> BigUint {
        BigUint::from_bytes_le(bytes)
    }

    #[test]
    fn rejects_even_and_composite_moduli() {
        assert_eq!(PrimeField::new(&BigUint::from(100u32)).unwrap_err(), FieldError::BadModulus);
        assert_eq!(PrimeField::new(&BigUint::from(91u32)).unwrap_err(), FieldError::NotPrime);
        assert!(PrimeField::new(&BigUint::from((1u64 << 61) - 1)).is_ok());
    }

    #[test]
    fn signed_embedding() {
        let f = PrimeField::bn254();
        let m5 = f.from_i64(-5);
        assert_eq!(f.to_biguint(m5), f.modulus() - 5u32);
        assert_eq!(f.to_i128(m5), Some(-5));
        assert_eq!(f.to_i128(f.from_i64(7)), Some(7));
        assert_eq!(f.add(m5, f.from_u64(5)), f.zero());
    }

    #[test]
    fn range_membership() {
        let f = PrimeField::bn254();
        assert!(f.in_range(f.from_u64((1 << 20) - 1), 20));
        assert!(!f.in_range(f.from_u64(1 << 20), 20));
        assert!(!f.in_range(f.from_i64(-1), 200));
        assert!(f.in_range(f.from_u128(1u128 << 100), 101));
    }

    #[test]
    fn hex_round_trip() {
        let f = PrimeField::bn254();
        let a = f.from_i64(-1);
        let h = f.to_hex(a);
        assert_eq!(f.from_hex_element(&h).unwrap(), a);
        assert_eq!(f.to_hex(f.from_u64(255)), "0xff");
        assert!(f.from_hex_element(&format!("0x{}", f.modulus_hex())).is_err());
    }

    proptest! {
        #[test]
        fn matches_biguint_oracle(a in proptest::collection::vec(any::<u8>(), 32),
                                  b in proptest::collection::vec(any::<u8>(), 32),
                                  small in any::<bool>()) {
            let f = if small {
                PrimeField::new(&BigUint::from((1u64 << 61) - 1)).unwrap()
            } else {
                PrimeField::bn254()
            };
            let q = f.modulus();
            let (ab, bb) = (big(&a) % &q, big(&b) % &q);
            let (fa, fb) = (f.from_biguint(&ab), f.from_biguint(&bb));
            prop_assert_eq!(f.to_biguint(f.add(fa, fb)), (&ab + &bb) % &q);
            prop_assert_eq!(f.to_biguint(f.sub(fa, fb)), (&ab + &q - &bb) % &q);
            prop_assert_eq!(f.to_biguint(f.mul(fa, fb)), (&ab * &bb) % &q);
            if ab != BigUint::from(0u32) {
                prop_assert_eq!(f.mul(fa, f.inverse(fa).unwrap()), f.one());
            }
        }
    }
}
