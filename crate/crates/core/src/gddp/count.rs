//! Exact evaluation of the preprocessing count `ceil(n^2 exp((n^{1/2-a} + 4)^2))`.
//!
//! All arithmetic is binary fixed point over big integers: a value `v`
//! stands for `v / 2^p`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational;

/// The count together with its natural log and the regime flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NAlpha {
    #[serde(with = "biguint_string")]
    pub value: BigUint,
    pub ln_value: f64,
    /// `2 / log2(n) <= alpha <= 1/2`.
    pub in_regime: bool,
}

impl NAlpha {
    pub fn to_usize(&self) -> Option<usize> {
        self.value.to_usize()
    }
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

const MAX_BITS: f64 = 4_000_000.0;

pub fn n_alpha(n: usize, alpha: f64) -> Result<NAlpha> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1/2], got {alpha}")));
    }
    let nf = n as f64;
    let a_approx = nf.powf(0.5 - alpha);
    let x_approx = (a_approx + 4.0).powi(2);
    let ln_value = 2.0 * nf.ln() + x_approx;
    let bits = ln_value / std::f64::consts::LN_2;
    if bits > MAX_BITS {
        return Err(Error::Overflow("preprocessing count too large to represent"));
    }
    let in_regime = n >= 2 && 2.0 / nf.log2() <= alpha;
    let p = bits.ceil() as u64 + 128;
    let fx = Fixed { p };

    // n^{1/2 - alpha} = exp((1/2 - alpha) ln n), with the exponent exact
    let e = rational::Rational::new(1.into(), 2.into()) - rational::from_f64(alpha)?;
    let ln_n = fx.ln_int(&BigUint::from(n));
    let scaled = (ln_n * e.numer()).div_floor(e.denom());
    let a = fx.exp(&scaled);
    let four = fx.from_int(4);
    let s = a + four;
    let x = fx.mul(&s, &s);
    let ex = fx.exp(&x);
    let total = ex * BigInt::from(n) * BigInt::from(n);
    let one = BigInt::one() << p;
    let value: BigInt = (total + &one - 1) >> p;
    let value = value.to_biguint().expect("count is positive");
    Ok(NAlpha { value, ln_value, in_regime })
}

struct Fixed {
    p: u64,
}

impl Fixed {
    fn one(&self) -> BigInt {
        BigInt::one() << self.p
    }

    fn from_int(&self, v: i64) -> BigInt {
        BigInt::from(v) << self.p
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> self.p
    }

    fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a << self.p) / b
    }

    /// `2 atanh(z) = ln((1 + z) / (1 - z))` for `|z| <= 1/3`.
    fn two_atanh(&self, z: &BigInt) -> BigInt {
        let z2 = self.mul(z, z);
        let mut term = z.clone();
        let mut sum = BigInt::zero();
        let mut k = 1u64;
        while !term.is_zero() {
            sum += &term / BigInt::from(k);
            term = self.mul(&term, &z2);
            k += 2;
        }
        sum * 2
    }

    fn ln2(&self) -> BigInt {
        self.two_atanh(&(self.one() / 3))
    }

    fn ln_int(&self, m: &BigUint) -> BigInt {
        let k = m.bits() - 1;
        // y = m / 2^k in [1, 2)
        let y = BigInt::from_biguint(Sign::Plus, m.clone()) << self.p >> k;
        let one = self.one();
        let z = self.div(&(&y - &one), &(&y + &one));
        self.ln2() * BigInt::from(k) + self.two_atanh(&z)
    }

    fn exp(&self, x: &BigInt) -> BigInt {
        debug_assert!(!x.is_negative());
        let ln2 = self.ln2();
        let k = x / &ln2;
        let r = x - &k * &ln2;
        const SQUARINGS: u32 = 16;
        let r = r >> SQUARINGS;
        let mut term = self.one();
        let mut sum = self.one();
        let mut i = 1u64;
        while !term.is_zero() {
            term = self.mul(&term, &r) / BigInt::from(i);
            sum += &term;
            i += 1;
        }
        for _ in 0..SQUARINGS {
            sum = self.mul(&sum, &sum);
        }
        let k = k.to_u64().expect("exponent fits");
        sum << k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_high_precision_values() {
        assert_eq!(n_alpha(100, 0.5).unwrap().value.to_string(), "720048993373859");
        assert_eq!(
            n_alpha(100, 0.0).unwrap().value.to_string(),
            "132348326156457035530693830056260404030541476934628446269968199835902294285834568759306895"
        );
        assert_eq!(n_alpha(7, 0.25).unwrap().value.to_string(), "2749468740785240");
        assert_eq!(n_alpha(2, 0.5).unwrap().value.to_string(), "288019597350");
    }

    #[test]
    fn decreasing_in_alpha_and_regime_flag() {
        let mut prev = n_alpha(64, 0.0).unwrap().value;
        for i in 1..=10 {
            let cur = n_alpha(64, i as f64 * 0.05).unwrap().value;
            assert!(cur < prev);
            prev = cur;
        }
        assert!(n_alpha(64, 0.5).unwrap().in_regime);
        assert!(!n_alpha(64, 0.1).unwrap().in_regime);
        assert!(n_alpha(4, 0.6).is_err());
    }
}
