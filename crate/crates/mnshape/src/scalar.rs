//! Extended-precision scalar arithmetic.
//!
//! Every numerically sensitive computation in this crate runs on [`XReal`]
//! values bound to a [`PrecisionContext`]. The context fixes the number of
//! significant decimal digits carried by the working mantissa; all
//! operations are correctly rounded at that precision, so two runs with the
//! same context and inputs produce bit-identical results.
//!
//! [`Dec`] carries exact decimal inputs (spacing parameters, grid values,
//! domain endpoints) so that integrality tests and floor/ceiling rules are
//! decided in exact rational arithmetic rather than on binary approximations.

use crate::error::{Error, Result};
use num_integer::Integer;
use num_rational::Ratio;
use rug::float::Round;
use rug::ops::Pow;
use rug::Float;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Default number of significant decimal digits for the working precision.
pub const DEFAULT_DIGITS: u32 = 220;

/// Minimum number of digits accepted by [`with_precision`].
pub const MIN_DIGITS: u32 = 50;

/// Fixed working precision, in significant decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    digits: u32,
}

/// Builds a context carrying at least `digits` significant decimal digits.
///
/// Rejects anything below [`MIN_DIGITS`]: the dense interpolation systems
/// this crate solves routinely have condition numbers past 1e40, and a
/// thinner mantissa cannot separate signal from elimination noise.
pub fn with_precision(digits: u32) -> Result<PrecisionContext> {
    if digits < MIN_DIGITS {
        return Err(Error::PrecisionTooLow { digits });
    }
    Ok(PrecisionContext { digits })
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext {
            digits: DEFAULT_DIGITS,
        }
    }
}

impl PrecisionContext {
    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Mantissa width in bits: `digits * log2(10)` rounded up plus a guard
    /// band so every operation stays within the advertised decimal accuracy.
    pub fn bits(&self) -> u32 {
        (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 32
    }

    /// Context with `extra` additional decimal digits.
    pub fn escalate(&self, extra: u32) -> PrecisionContext {
        PrecisionContext {
            digits: self.digits + extra,
        }
    }

    pub fn from_u32(&self, v: u32) -> XReal {
        XReal {
            f: Float::with_val(self.bits(), v),
        }
    }

    pub fn from_i64(&self, v: i64) -> XReal {
        XReal {
            f: Float::with_val(self.bits(), v),
        }
    }

    /// Exact embedding of an `f64` (every finite double is representable).
    pub fn from_f64(&self, v: f64) -> XReal {
        XReal {
            f: Float::with_val(self.bits(), v),
        }
    }

    /// Correctly rounded value of the exact rational `num/den`.
    pub fn from_ratio(&self, num: i128, den: i128) -> XReal {
        assert!(den != 0, "zero denominator");
        let n = Float::with_val(self.bits(), num);
        let d = Float::with_val(self.bits(), den);
        XReal { f: n / d }
    }

    pub fn from_dec(&self, d: &Dec) -> XReal {
        self.from_ratio(*d.ratio().numer(), *d.ratio().denom())
    }

    /// Parses a decimal literal, correctly rounded at this precision.
    pub fn parse(&self, s: &str) -> Result<XReal> {
        let f = Float::parse(s).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
        Ok(XReal {
            f: Float::with_val(self.bits(), f),
        })
    }

    pub fn pi(&self) -> XReal {
        XReal {
            f: Float::with_val(self.bits(), rug::float::Constant::Pi),
        }
    }

    /// Euler–Mascheroni constant.
    pub fn euler_gamma(&self) -> XReal {
        XReal {
            f: Float::with_val(self.bits(), rug::float::Constant::Euler),
        }
    }

    /// ln(10), used to convert natural logs to decades.
    pub fn ln10(&self) -> XReal {
        self.from_u32(10).ln()
    }

    /// 10^(-(digits - margin)), the tolerance scale for this context.
    pub fn eps(&self, margin: i64) -> XReal {
        let e = self.from_u32(10);
        e.powi(-(self.digits as i64) + margin)
    }
}

/// Extended-precision real number.
///
/// Wraps an MPFR float whose mantissa width comes from the context that
/// created it. Values are immutable once constructed; arithmetic yields new
/// values at the wider of the two operand precisions. Comparisons are exact
/// on the stored representation.
#[derive(Debug, Clone)]
pub struct XReal {
    f: Float,
}

impl XReal {
    fn out_prec(a: &XReal, b: &XReal) -> u32 {
        a.f.prec().max(b.f.prec())
    }

    pub fn prec_bits(&self) -> u32 {
        self.f.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.f.to_f64()
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_zero()
    }

    pub fn is_sign_positive(&self) -> bool {
        self.f.is_sign_positive() && !self.f.is_zero()
    }

    pub fn abs(&self) -> XReal {
        XReal {
            f: self.f.clone().abs(),
        }
    }

    pub fn sqrt(&self) -> XReal {
        XReal {
            f: self.f.clone().sqrt(),
        }
    }

    pub fn exp(&self) -> XReal {
        XReal {
            f: self.f.clone().exp(),
        }
    }

    pub fn ln(&self) -> XReal {
        XReal {
            f: self.f.clone().ln(),
        }
    }

    pub fn sin(&self) -> XReal {
        XReal {
            f: self.f.clone().sin(),
        }
    }

    /// Gamma function.
    pub fn gamma(&self) -> XReal {
        XReal {
            f: self.f.clone().gamma(),
        }
    }

    pub fn powi(&self, e: i64) -> XReal {
        XReal {
            f: self.f.clone().pow(e as i32),
        }
    }

    pub fn powf(&self, e: &XReal) -> XReal {
        let p = Self::out_prec(self, e);
        let mut base = Float::with_val(p, &self.f);
        base = base.pow(&e.f);
        XReal { f: base }
    }

    pub fn recip(&self) -> XReal {
        XReal {
            f: self.f.clone().recip(),
        }
    }

    pub fn min(&self, other: &XReal) -> XReal {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max(&self, other: &XReal) -> XReal {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Base-10 logarithm of |x| rounded toward -inf, as an integer decade
    /// count. Returns 0 for zero.
    pub fn decade(&self) -> i64 {
        if self.f.is_zero() {
            return 0;
        }
        let l = self.f.clone().abs().log10();
        l.to_f64().floor() as i64
    }

    /// Re-rounds to a (usually narrower) context. Deterministic.
    pub fn round_to(&self, ctx: &PrecisionContext) -> XReal {
        XReal {
            f: Float::with_val(ctx.bits(), &self.f),
        }
    }

    /// Scientific-notation string with `sig` significant digits, e.g.
    /// `4.67e-13`. Exponent is always present so columns parse uniformly.
    pub fn to_sci(&self, sig: usize) -> String {
        if self.f.is_zero() {
            return format!("{:.*}e0", sig.saturating_sub(1), 0.0);
        }
        if !self.f.is_finite() {
            return if self.f.is_nan() {
                "nan".into()
            } else if self.f.is_sign_positive() {
                "inf".into()
            } else {
                "-inf".into()
            };
        }
        let (sign, digits, exp) = self.f.to_sign_string_exp_round(10, Some(sig), Round::Nearest);
        let mut mant = String::new();
        if sign {
            mant.push('-');
        }
        mant.push_str(&digits[..1]);
        if digits.len() > 1 {
            mant.push('.');
            mant.push_str(&digits[1..]);
        }
        // MPFR's exponent counts digits before an implied leading point.
        format!("{mant}e{}", exp.unwrap_or(1) - 1)
    }

    /// Full-precision decimal string that round-trips through `parse` at the
    /// same context.
    pub fn to_decimal_full(&self) -> String {
        if self.f.is_zero() {
            return "0".into();
        }
        let digits = (self.f.prec() as f64 / std::f64::consts::LOG2_10).ceil() as usize + 2;
        self.to_sci(digits)
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "{}", self.to_sci(17))
    }
}

impl PartialEq for XReal {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f
    }
}

impl PartialOrd for XReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.f.partial_cmp(&other.f)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &XReal {
            type Output = XReal;
            fn $method(self, rhs: &XReal) -> XReal {
                let p = XReal::out_prec(self, rhs);
                let lhs = Float::with_val(p, &self.f);
                XReal { f: lhs $op &rhs.f }
            }
        }
        impl $trait for XReal {
            type Output = XReal;
            fn $method(self, rhs: XReal) -> XReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&XReal> for XReal {
            type Output = XReal;
            fn $method(self, rhs: &XReal) -> XReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<XReal> for &XReal {
            type Output = XReal;
            fn $method(self, rhs: XReal) -> XReal {
                self.$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);
impl_binop!(Mul, mul, *);
impl_binop!(Div, div, /);

impl Neg for &XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal {
            f: -self.f.clone(),
        }
    }
}

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal { f: -self.f }
    }
}

/// Exact decimal value, kept as a reduced rational.
///
/// Spacing parameters and grid values enter as decimal literals; keeping
/// them exact means boundary decisions (is `b0/delta` an integer? which side
/// of a floor does `c/(12 rho delta)` land on?) never depend on binary
/// rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dec {
    r: Ratio<i128>,
}

impl Dec {
    pub fn new(num: i128, den: i128) -> Dec {
        Dec {
            r: Ratio::new(num, den),
        }
    }

    pub fn from_int(v: i128) -> Dec {
        Dec {
            r: Ratio::from_integer(v),
        }
    }

    pub fn zero() -> Dec {
        Dec::from_int(0)
    }

    pub fn one() -> Dec {
        Dec::from_int(1)
    }

    pub fn ratio(&self) -> &Ratio<i128> {
        &self.r
    }

    pub fn is_integer(&self) -> bool {
        self.r.is_integer()
    }

    pub fn floor_int(&self) -> i128 {
        self.r.floor().to_integer()
    }

    pub fn ceil_int(&self) -> i128 {
        self.r.ceil().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        *self.r.numer() as f64 / *self.r.denom() as f64
    }

    pub fn is_positive(&self) -> bool {
        self.r > Ratio::from_integer(0)
    }

    pub fn recip(&self) -> Dec {
        Dec { r: self.r.recip() }
    }
}

impl Add for Dec {
    type Output = Dec;
    fn add(self, o: Dec) -> Dec {
        Dec { r: self.r + o.r }
    }
}

impl Sub for Dec {
    type Output = Dec;
    fn sub(self, o: Dec) -> Dec {
        Dec { r: self.r - o.r }
    }
}

impl Mul for Dec {
    type Output = Dec;
    fn mul(self, o: Dec) -> Dec {
        Dec { r: self.r * o.r }
    }
}

impl Div for Dec {
    type Output = Dec;
    fn div(self, o: Dec) -> Dec {
        Dec { r: self.r / o.r }
    }
}

impl Neg for Dec {
    type Output = Dec;
    fn neg(self) -> Dec {
        Dec { r: -self.r }
    }
}

impl FromStr for Dec {
    type Err = Error;

    /// Parses plain decimal literals: optional sign, digits, optional
    /// fractional part (`-1`, `0.44`, `5`, `.5`).
    fn from_str(s: &str) -> Result<Dec> {
        let t = s.trim();
        let bad = || Error::Parse(format!("invalid decimal literal {t:?}"));
        if t.is_empty() {
            return Err(bad());
        }
        let (sign, rest) = match t.as_bytes()[0] {
            b'-' => (-1i128, &t[1..]),
            b'+' => (1, &t[1..]),
            _ => (1, t),
        };
        let (int_part, frac_part) = match rest.split_once('.') {
            Some((i, f)) => (i, f),
            None => (rest, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        if frac_part.len() > 30 {
            return Err(Error::Parse(format!("too many fractional digits in {t:?}")));
        }
        let mut num: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            num = num
                .checked_mul(10)
                .and_then(|n| n.checked_add((b - b'0') as i128))
                .ok_or_else(|| Error::Parse(format!("decimal literal {t:?} out of range")))?;
        }
        let den = 10i128
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(bad)?;
        Ok(Dec {
            r: Ratio::new(sign * num, den),
        })
    }
}

impl fmt::Display for Dec {
    /// Exact decimal expansion when the denominator is of the form 2^a 5^b,
    /// otherwise `num/den`.
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut den = *self.r.denom();
        let num = *self.r.numer();
        let mut twos = 0u32;
        let mut fives = 0u32;
        while den.is_multiple_of(&2) {
            den /= 2;
            twos += 1;
        }
        while den.is_multiple_of(&5) {
            den /= 5;
            fives += 1;
        }
        if den != 1 {
            return write!(fm, "{}/{}", num, self.r.denom());
        }
        let scale = twos.max(fives);
        // num / (2^t 5^f) = num * 2^(s-t) 5^(s-f) / 10^s
        let mantissa = num
            * 2i128.pow(scale - twos)
            * 5i128.pow(scale - fives);
        let neg = mantissa < 0;
        let digits = mantissa.unsigned_abs().to_string();
        let s = scale as usize;
        if neg {
            write!(fm, "-")?;
        }
        if s == 0 {
            return write!(fm, "{digits}");
        }
        if digits.len() > s {
            let (i, f) = digits.split_at(digits.len() - s);
            let f = f.trim_end_matches('0');
            if f.is_empty() {
                write!(fm, "{i}")
            } else {
                write!(fm, "{i}.{f}")
            }
        } else {
            let f = format!("{}{}", "0".repeat(s - digits.len()), digits);
            let f = f.trim_end_matches('0');
            write!(fm, "0.{f}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn with_precision_accepts_default_and_rejects_thin_mantissas() {
        assert_eq!(with_precision(220).unwrap().digits(), 220);
        assert!(matches!(
            with_precision(49),
            Err(Error::PrecisionTooLow { digits: 49 })
        ));
        assert!(with_precision(50).is_ok());
        assert!(with_precision(300).is_ok());
    }

    #[test]
    fn arithmetic_hits_context_accuracy() {
        let ctx = with_precision(220).unwrap();
        let x = ctx.parse("4.8").unwrap();
        let e = x.exp();
        let want = ctx
            .parse("121.5104175187348807570481162978839652962532393948374646655924745389457")
            .unwrap();
        let rel = (&(&e - &want) / &want).abs();
        // the reference carries 70 digits; the context tolerance is tighter
        assert!(rel < ctx.eps(155), "rel = {rel}");
    }

    #[test]
    fn comparisons_are_exact() {
        let ctx = with_precision(50).unwrap();
        let a = ctx.from_ratio(1, 3);
        let b = ctx.from_ratio(1, 3);
        assert_eq!(a, b);
        assert!(ctx.from_u32(2) > ctx.from_u32(1));
    }

    #[test]
    fn determinism_across_reconstruction() {
        let ctx = with_precision(220).unwrap();
        let a = ctx.from_ratio(2, 3).ln().exp().sqrt();
        let b = ctx.from_ratio(2, 3).ln().exp().sqrt();
        assert_eq!(a, b);
        assert_eq!(a.to_decimal_full(), b.to_decimal_full());
    }

    #[test]
    fn sci_formatting() {
        let ctx = with_precision(60).unwrap();
        let v = ctx.parse("4.67e-13").unwrap();
        assert_eq!(v.to_sci(3), "4.67e-13");
        let v = ctx.parse("9.44e47").unwrap();
        assert_eq!(v.to_sci(3), "9.44e47");
        let v = ctx.parse("-0.5").unwrap();
        assert_eq!(v.to_sci(2), "-5.0e-1");
        assert_eq!(ctx.from_u32(0).to_sci(3), "0.00e0");
        assert_eq!(ctx.from_u32(1).to_sci(3), "1.00e0");
    }

    #[test]
    fn full_precision_round_trip() {
        let ctx = with_precision(220).unwrap();
        let v = ctx.from_ratio(22, 7).sqrt();
        let s = v.to_decimal_full();
        let back = ctx.parse(&s).unwrap();
        let diff = (&v - &back).abs();
        assert!(diff < ctx.eps(3), "diff = {diff}");
    }

    #[test]
    fn dec_parses_and_displays() {
        let d: Dec = "0.44".parse().unwrap();
        assert_eq!(d.ratio(), &Ratio::new(11, 25));
        assert_eq!(d.to_string(), "0.44");
        let d: Dec = "-1".parse().unwrap();
        assert_eq!(d.to_string(), "-1");
        let d: Dec = "0.165".parse().unwrap();
        assert_eq!(d.to_string(), "0.165");
        let d: Dec = "5".parse().unwrap();
        assert!(d.is_integer());
        assert!("abc".parse::<Dec>().is_err());
        assert!("1.2.3".parse::<Dec>().is_err());
    }

    #[test]
    fn dec_exact_boundaries() {
        let five: Dec = "5".parse().unwrap();
        let fifth: Dec = "0.2".parse().unwrap();
        let q = five / fifth;
        assert!(q.is_integer());
        assert_eq!(q.floor_int(), 25);
        let q = five / "0.48".parse::<Dec>().unwrap();
        assert!(!q.is_integer());
        assert_eq!(q.floor_int(), 10);
    }

    proptest! {
        // exp(ln(x)) recovers x within the context tolerance for any positive x.
        #[test]
        fn exp_ln_round_trip(mantissa in 1i64..1_000_000_000, scale in -12i32..12) {
            let ctx = with_precision(60).unwrap();
            let x = ctx.from_i64(mantissa) * ctx.from_u32(10).powi(scale as i64);
            let y = x.ln().exp();
            let rel = (&(&y - &x) / &x).abs();
            prop_assert!(rel < ctx.eps(5));
        }

        #[test]
        fn dec_round_trip(num in 1i64..100_000, scale in 0u32..6) {
            let den = 10i128.pow(scale);
            let d = Dec::new(num as i128, den);
            let s = d.to_string();
            let back: Dec = s.parse().unwrap();
            prop_assert_eq!(d, back);
        }
    }
}
