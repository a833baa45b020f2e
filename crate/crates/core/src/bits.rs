//! Finite binary strings and the fixed codings of naturals, integers,
//! rationals and truncated reals used throughout the constructions.
//!
//! Bit 0 of a [`BitString`] is the most significant digit when the string is
//! read as a binary numeral or as the expansion `0.σ`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dyadic::Real;
use crate::error::{Error, Result};

const WORD: usize = 64;

/// A finite binary word, packed 64 digits per machine word.
///
/// Digit `i` lives in word `i / 64` at bit position `63 - i % 64`. Unused
/// low bits of the last word are always zero, so derived equality is exact.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self { words: Vec::with_capacity(bits.div_ceil(WORD)), len: 0 }
    }

    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(WORD)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self { words: vec![u64::MAX; len.div_ceil(WORD)], len };
        s.clear_tail();
        s
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Digit at `i`. Panics when `i >= len`, like slice indexing.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (WORD - 1 - i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.get(i);
        self.set(i, !b);
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            let i = self.len - 1;
            self.words[i / WORD] |= 1u64 << (WORD - 1 - i % WORD);
        }
    }

    pub fn push_zeros(&mut self, n: usize) {
        self.len += n;
        self.words.resize(self.len.div_ceil(WORD), 0);
    }

    /// Appends `other` in place.
    pub fn extend(&mut self, other: &BitString) {
        if other.is_empty() {
            return;
        }
        let shift = self.len % WORD;
        if shift == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            self.words.truncate(self.len.div_ceil(WORD));
            return;
        }
        let new_len = self.len + other.len;
        self.words.reserve(other.words.len());
        for &w in &other.words {
            let last = self.words.len() - 1;
            self.words[last] |= w >> shift;
            self.words.push(w << (WORD - shift));
        }
        self.len = new_len;
        self.words.truncate(new_len.div_ceil(WORD));
        self.clear_tail();
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.words.truncate(len.div_ceil(WORD));
        self.clear_tail();
    }

    /// The first `len` digits (all of them if `len >= self.len()`).
    pub fn prefix(&self, len: usize) -> BitString {
        let len = len.min(self.len);
        let mut out = Self { words: self.words[..len.div_ceil(WORD)].to_vec(), len };
        out.clear_tail();
        out
    }

    /// Digits in `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        assert!(start <= end && end <= self.len, "slice {start}..{end} out of range");
        let len = end - start;
        let first = start / WORD;
        let shift = start % WORD;
        let n = len.div_ceil(WORD);
        let mut words = Vec::with_capacity(n);
        for t in 0..n {
            let hi = self.words[first + t] << shift;
            let lo = if shift == 0 {
                0
            } else {
                self.words.get(first + t + 1).copied().unwrap_or(0) >> (WORD - shift)
            };
            words.push(hi | lo);
        }
        let mut out = Self { words, len };
        out.clear_tail();
        out
    }

    pub fn suffix_from(&self, start: usize) -> BitString {
        self.slice(start, self.len)
    }

    /// `self ⪯ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        if self.len > other.len {
            return false;
        }
        let full = self.len / WORD;
        if self.words[..full] != other.words[..full] {
            return false;
        }
        let rem = self.len % WORD;
        if rem == 0 {
            return true;
        }
        let mask = u64::MAX << (WORD - rem);
        self.words[full] == other.words[full] & mask
    }

    /// `self ≺ other`: a prefix and strictly shorter.
    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.len < other.len && self.is_prefix_of(other)
    }

    pub fn ends_with(&self, tail: &BitString) -> bool {
        tail.len <= self.len && self.suffix_from(self.len - tail.len) == *tail
    }

    /// First index at which the two strings differ, comparing up to the
    /// shorter length.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        let n = self.len.min(other.len);
        let nw = n.div_ceil(WORD);
        for w in 0..nw {
            let x = self.words[w] ^ other.words[w];
            if x != 0 {
                let i = w * WORD + x.leading_zeros() as usize;
                return (i < n).then_some(i);
            }
        }
        None
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number whose base-2 numeral (most significant first) is this string.
    pub fn to_biguint(&self) -> BigUint {
        if self.len == 0 {
            return BigUint::zero();
        }
        let pad = self.words.len() * WORD - self.len;
        let mut digits = Vec::with_capacity(self.words.len() * 2);
        for &w in self.words.iter().rev() {
            digits.push(w as u32);
            digits.push((w >> 32) as u32);
        }
        BigUint::new(digits) >> pad
    }

    /// The `len`-digit numeral of `value`, zero padded on the left.
    /// Panics if `value` needs more than `len` digits.
    pub fn from_biguint(value: &BigUint, len: usize) -> BitString {
        assert!(value.bits() as usize <= len, "value does not fit in {len} bits");
        if len == 0 {
            return BitString::new();
        }
        let nw = len.div_ceil(WORD);
        let pad = nw * WORD - len;
        let shifted = value << pad;
        let mut digits = shifted.to_u64_digits();
        digits.resize(nw, 0);
        digits.reverse();
        BitString { words: digits, len }
    }

    /// `(r·2^(end − start) + n) mod c`, where `n` is the numeral
    /// `self[start..end]`. Requires `r < c < 2^63`.
    pub(crate) fn mod_extend(&self, mut r: u64, start: usize, end: usize, c: u64) -> u64 {
        debug_assert!(c < 1 << 63 && r < c && end <= self.len);
        let mut i = start;
        while i < end && !i.is_multiple_of(WORD) {
            r = ((r << 1) | self.get(i) as u64) % c;
            i += 1;
        }
        while i + WORD <= end {
            r = ((((r as u128) << 64) | self.words[i / WORD] as u128) % c as u128) as u64;
            i += WORD;
        }
        while i < end {
            r = ((r << 1) | self.get(i) as u64) % c;
            i += 1;
        }
        r
    }

    /// `len:<decimal>;bits:<digits>`, the interchange format.
    pub fn to_text(&self) -> String {
        format!("len:{};bits:{}", self.len, self)
    }

    pub fn parse_text(text: &str) -> Result<BitString> {
        let text = text.trim();
        let rest = text
            .strip_prefix("len:")
            .ok_or_else(|| Error::Parse(format!("bit string record must start with `len:`: {}", head(text))))?;
        let (len, bits) = rest
            .split_once(";bits:")
            .ok_or_else(|| Error::Parse("bit string record is missing `;bits:`".into()))?;
        let len: usize = len.parse().map_err(|_| Error::Parse(format!("bad length `{len}`")))?;
        let s: BitString = bits.parse()?;
        if s.len() != len {
            return Err(Error::Parse(format!("declared length {len} but found {} digits", s.len())));
        }
        Ok(s)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX << (WORD - rem);
            }
        }
    }
}

fn head(s: &str) -> &str {
    &s[..s.len().min(24)]
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                other => return Err(Error::Parse(format!("invalid binary digit `{other}`"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = String::with_capacity(self.len);
        for b in self.iter() {
            buf.push(if b { '1' } else { '0' });
        }
        f.write_str(&buf)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 96 {
            write!(f, "BitString(\"{self}\")")
        } else {
            write!(f, "BitString(len={}, \"{}…\")", self.len, self.prefix(64))
        }
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitString::parse_text(&s).map_err(serde::de::Error::custom)
    }
}

/// Binary expansion of `k`, most significant digit first; `0` codes as `"0"`.
pub fn encode_nat(k: &BigUint) -> BitString {
    if k.is_zero() {
        return BitString::zeros(1);
    }
    BitString::from_biguint(k, k.bits() as usize)
}

pub fn encode_nat_u64(k: u64) -> BitString {
    encode_nat(&BigUint::from(k))
}

/// Inverse of [`encode_nat`] on a whole string.
pub fn decode_nat(s: &BitString) -> Result<BigUint> {
    if s.is_empty() {
        return Err(Error::Parse("empty natural-number code".into()));
    }
    Ok(s.to_biguint())
}

fn doubled(digits: &BitString) -> BitString {
    let mut w = BitString::with_capacity(2 * digits.len() + 2);
    for b in digits.iter() {
        w.push(b);
        w.push(b);
    }
    w
}

fn sign_marker(out: &mut BitString, negative: bool) {
    out.push(negative);
    out.push(!negative);
}

/// Doubled magnitude digits followed by `01` (n ≥ 0) or `10` (n < 0).
pub fn encode_int(n: &BigInt) -> BitString {
    let mut w = doubled(&encode_nat(n.magnitude()));
    sign_marker(&mut w, n.is_negative());
    w
}

pub fn encode_int_i64(n: i64) -> BitString {
    encode_int(&BigInt::from(n))
}

/// Reads one integer code from the front of `s`; returns the value and the
/// number of digits consumed.
pub fn decode_int_prefix(s: &BitString) -> Result<(BigInt, usize)> {
    let mut digits = BitString::new();
    let mut i = 0;
    while i + 1 < s.len() {
        let (a, b) = (s.get(i), s.get(i + 1));
        i += 2;
        if a == b {
            digits.push(a);
            continue;
        }
        if digits.is_empty() {
            return Err(Error::Parse("integer code has no magnitude digits".into()));
        }
        let mag = BigInt::from_biguint(Sign::Plus, digits.to_biguint());
        return Ok((if a { -mag } else { mag }, i));
    }
    Err(Error::Parse("integer code is missing its sign marker".into()))
}

pub fn decode_int(s: &BitString) -> Result<BigInt> {
    let (n, used) = decode_int_prefix(s)?;
    if used != s.len() {
        return Err(Error::Parse(format!("{} trailing digits after integer code", s.len() - used)));
    }
    Ok(n)
}

/// `a/b` in lowest terms with `b > 0`, coded as the integer code of `a`
/// followed by the binary expansion of `b`.
///
/// The denominator is not self-delimiting, so a rational is only decodable
/// at the end of a record.
pub fn encode_rational(q: &BigRational) -> BitString {
    // BigRational is kept reduced with a positive denominator.
    let mut out = encode_int(q.numer());
    out.extend(&encode_nat(q.denom().magnitude()));
    out
}

pub fn decode_rational(s: &BitString) -> Result<BigRational> {
    let (a, used) = decode_int_prefix(s)?;
    let b = decode_nat(&s.suffix_from(used))?;
    if b.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(BigRational::new(a, BigInt::from(b)))
}

/// Concatenated codes of a tuple of rationals.
pub fn encode_rational_tuple(qs: &[BigRational]) -> BitString {
    let mut out = BitString::new();
    for q in qs {
        out.extend(&encode_rational(q));
    }
    out
}

/// `x̄[k]`: doubled digits of the integer part of |x|, the sign marker, then
/// the first `k` fractional digits of |x| (magnitudes truncate toward zero).
pub fn encode_real_at(x: &Real, k: u64) -> Result<BitString> {
    let (negative, scaled) = x.sign_and_truncated_magnitude(k)?;
    Ok(real_code(negative, &scaled, k))
}

fn real_code(negative: bool, scaled: &BigUint, k: u64) -> BitString {
    let int_part: BigUint = scaled >> k;
    let frac: BigUint = scaled - (&int_part << k);
    let mut out = doubled(&encode_nat(&int_part));
    sign_marker(&mut out, negative);
    out.extend(&BitString::from_biguint(&frac, k as usize));
    out
}

/// Codes of a tuple of reals at a common precision, concatenated.
pub fn encode_real_tuple_at(xs: &[Real], k: u64) -> Result<BitString> {
    let mut out = BitString::new();
    for x in xs {
        out.extend(&encode_real_at(x, k)?);
    }
    Ok(out)
}

/// Cantor pairing `(i+n)(i+n+1)/2 + n`.
pub fn pair(i: u64, n: u64) -> u128 {
    let w = i as u128 + n as u128;
    w * (w + 1) / 2 + n as u128
}

/// Exact inverse of [`pair`].
pub fn unpair(k: u128) -> (u64, u64) {
    // w = floor((sqrt(8k+1) - 1) / 2), computed with an integer square root.
    let disc = BigUint::from(k) * 8u32 + 1u32;
    let root = disc.sqrt();
    let w: u128 = ((root - 1u32) / 2u32).try_into().expect("diagonal index fits in u128");
    let t = w * (w + 1) / 2;
    let n = k - t;
    let i = w - n;
    (i as u64, n as u64)
}

/// Bit `m·t + j` of the result is bit `t` of stream `j`.
pub fn interleave(streams: &[BitString]) -> Result<BitString> {
    let Some(first) = streams.first() else {
        return Ok(BitString::new());
    };
    let n = first.len();
    if let Some(bad) = streams.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch { expected: n, found: bad.len() });
    }
    let mut out = BitString::with_capacity(n * streams.len());
    for t in 0..n {
        for s in streams {
            out.push(s.get(t));
        }
    }
    Ok(out)
}

/// Splits an interleaved string back into `m` streams.
pub fn deinterleave(s: &BitString, m: usize) -> Result<Vec<BitString>> {
    if m == 0 || !s.len().is_multiple_of(m) {
        return Err(Error::LengthMismatch { expected: m, found: s.len() });
    }
    let mut out = vec![BitString::with_capacity(s.len() / m); m];
    for (i, b) in s.iter().enumerate() {
        out[i % m].push(b);
    }
    Ok(out)
}

/// Floor of a nonnegative rational scaled by `2^k`, as a natural number.
pub(crate) fn floor_scaled_rational(q: &BigRational, k: u64) -> BigInt {
    (q.numer() << k).div_floor(q.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn nat_codes() {
        assert_eq!(encode_nat_u64(5).to_string(), "101");
        assert_eq!(encode_nat_u64(0).to_string(), "0");
        assert_eq!(encode_nat_u64(12).to_string(), "1100");
    }

    #[test]
    fn int_codes() {
        assert_eq!(encode_int_i64(5).to_string(), "11001101");
        assert_eq!(encode_int_i64(-2).to_string(), "110010");
        assert_eq!(encode_int_i64(0).to_string(), "0001");
    }

    #[test]
    fn real_codes() {
        let half = Real::dyadic(1, 1);
        assert_eq!(encode_real_at(&half, 3).unwrap().to_string(), "0001100");
        assert_eq!(encode_real_at(&Real::from_i64(0), 0).unwrap().to_string(), "0001");
        let x = Real::rational(-5, 4);
        assert_eq!(encode_real_at(&x, 2).unwrap().to_string(), "111001");
    }

    #[test]
    fn real_code_undetermined_for_tied_stream() {
        // cos(pi/3) = 1/2 exactly, but only known through enclosures.
        let x = Real::pi().mul_rational(&BigRational::new(1.into(), 3.into())).cos();
        assert!(matches!(encode_real_at(&x, 4), Err(Error::UndeterminedBits { .. })));
        assert_eq!(encode_real_at(&x, 0).unwrap().to_string(), "0001");
    }

    #[test]
    fn rational_codes_round_trip() {
        let q = BigRational::new((-6).into(), 4.into());
        let code = encode_rational(&q);
        assert_eq!(code.to_string(), "1111" .to_owned() + "10" + "10");
        assert_eq!(decode_rational(&code).unwrap(), q);
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(unpair(5), (0, 2));
        assert_eq!(pair(2, 1), 7);
    }

    #[test]
    fn pairing_matches_diagonal_enumeration() {
        let mut k = 0u128;
        for w in 0..60u64 {
            for n in 0..=w {
                let i = w - n;
                assert_eq!(pair(i, n), k);
                assert_eq!(unpair(k), (i, n));
                k += 1;
            }
        }
    }

    #[test]
    fn interleave_examples() {
        assert_eq!(interleave(&[bs("10"), bs("01")]).unwrap().to_string(), "1001");
        assert_eq!(interleave(&[bs("1")]).unwrap().to_string(), "1");
        let out = interleave(&[bs("111"), bs("000"), bs("101")]).unwrap();
        let inputs = ["111", "000", "101"];
        for t in 0..3 {
            for (j, s) in inputs.iter().enumerate() {
                assert_eq!(out.get(3 * t + j), s.as_bytes()[t] == b'1');
            }
        }
        assert_eq!(out.to_string(), "101100101");
        assert!(matches!(interleave(&[bs("1"), bs("10")]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn text_format() {
        let s = bs("0110");
        assert_eq!(s.to_text(), "len:4;bits:0110");
        assert_eq!(BitString::parse_text("len:4;bits:0110").unwrap(), s);
        assert!(BitString::parse_text("len:5;bits:0110").is_err());
        assert_eq!(BitString::parse_text("len:0;bits:").unwrap(), BitString::new());
    }

    #[test]
    fn packed_operations_agree_with_naive() {
        let a = bs(&"1011001110001111".repeat(9));
        let b = bs(&"01".repeat(37));
        let joined = a.concat(&b);
        assert_eq!(joined.to_string(), format!("{a}{b}"));
        assert_eq!(joined.slice(5, 150).to_string(), joined.to_string()[5..150]);
        assert!(a.is_prefix_of(&joined));
        assert!(a.is_proper_prefix_of(&joined));
        assert!(!b.is_prefix_of(&joined));
        assert!(joined.ends_with(&b));
        let mut c = joined.clone();
        c.flip(100);
        assert_eq!(joined.first_difference(&c), Some(100));
        let n = joined.to_biguint();
        assert_eq!(BitString::from_biguint(&n, joined.len()), joined);
    }
}
