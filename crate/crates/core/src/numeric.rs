//! High-precision complex arithmetic used by every exponential-sum
//! evaluation in the crate.
//!
//! All trigonometric evaluation goes through [`Ctx::e_frac`], which reduces
//! its argument exactly mod 1 as a rational before any rounding takes place.
//! Exponential sums therefore lose no phase accuracy for large moduli.

use crate::error::{Error, Result};
use rug::float::Constant;
use rug::{Float, Rational};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Minimum working precision in bits.
pub const MIN_PREC_BITS: u32 = 64;

/// Default working precision in bits. Identity sums at desk scale have at
/// most ~10^6 unit-magnitude terms, leaving > 70 bits of headroom over the
/// default tolerance 2^-96.
pub const DEFAULT_PREC_BITS: u32 = 192;

/// Comparison tolerance for [`AlgValue`].
#[derive(Clone, Debug)]
pub struct Tolerance {
    pub rel_eps: Float,
    pub abs_eps: Float,
}

impl Tolerance {
    /// Both thresholds set to 2^-(prec/2).
    pub fn for_prec(prec: u32) -> Self {
        let eps = Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)));
        Tolerance {
            rel_eps: eps.clone(),
            abs_eps: eps,
        }
    }
}

/// Evaluation context: fixes the working precision of every value it
/// produces.
#[derive(Clone, Debug)]
pub struct Ctx {
    prec: u32,
}

impl Default for Ctx {
    fn default() -> Self {
        Ctx::new(DEFAULT_PREC_BITS)
    }
}

impl Ctx {
    pub fn new(prec_bits: u32) -> Self {
        assert!(prec_bits >= MIN_PREC_BITS, "prec_bits must be >= 64");
        Ctx { prec: prec_bits }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Guard precision for intermediate argument reduction.
    fn work_prec(&self) -> u32 {
        self.prec + 64
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::for_prec(self.prec)
    }

    pub fn zero(&self) -> AlgValue {
        AlgValue {
            re: Float::new(self.prec),
            im: Float::new(self.prec),
        }
    }

    pub fn one(&self) -> AlgValue {
        self.from_i64(1)
    }

    pub fn from_i64(&self, x: i64) -> AlgValue {
        AlgValue {
            re: Float::with_val(self.prec, x),
            im: Float::new(self.prec),
        }
    }

    pub fn from_rational(&self, x: &Rational) -> AlgValue {
        AlgValue {
            re: Float::with_val(self.prec, x),
            im: Float::new(self.prec),
        }
    }

    pub fn real(&self, re: Float) -> AlgValue {
        AlgValue {
            re: Float::with_val(self.prec, re),
            im: Float::new(self.prec),
        }
    }

    /// e(x) = e^{2 pi i x} for exact rational x, reduced mod 1 before any
    /// floating-point work.
    pub fn e_frac(&self, x: &Rational) -> AlgValue {
        let mut frac = x.clone();
        let floor = x.clone().floor();
        frac -= floor;
        // theta = 2 pi frac, computed with guard bits
        let wp = self.work_prec();
        let two_pi = Float::with_val(wp, Constant::Pi) * 2i32;
        let theta = Float::with_val(wp, &frac) * two_pi;
        let (sin, cos) = theta.sin_cos(Float::new(wp));
        AlgValue {
            re: Float::with_val(self.prec, cos),
            im: Float::with_val(self.prec, sin),
        }
    }

    /// e^{pi i k / 2} for half-integer k, given as 2k.
    /// i_half_power(k) with k = twice_k/2 equals e_frac(twice_k / 8).
    pub fn i_half_power_2k(&self, twice_k: i64) -> AlgValue {
        self.e_frac(&Rational::from((twice_k, 8)))
    }

    /// e^{pi i k / 2} for rational k with 2k integral.
    pub fn i_half_power(&self, k: &Rational) -> Result<AlgValue> {
        let two_k = Rational::from(k * Rational::from(2));
        if !two_k.is_integer() {
            return Err(Error::Domain(format!("k = {k} is not a half-integer")));
        }
        Ok(self.e_frac(&(k / Rational::from(4))))
    }

    /// i^s for integer s.
    pub fn i_power(&self, s: i64) -> AlgValue {
        self.e_frac(&Rational::from((s, 4)))
    }

    /// Positive real square root of a positive rational.
    pub fn sqrt_pos(&self, r: &Rational) -> Result<AlgValue> {
        if *r <= 0 {
            return Err(Error::Domain(format!("sqrt_pos requires r > 0, got {r}")));
        }
        let f = Float::with_val(self.work_prec(), r).sqrt();
        Ok(self.real(f))
    }

    pub fn sqrt_pos_i64(&self, r: i64) -> Result<AlgValue> {
        self.sqrt_pos(&Rational::from(r))
    }
}

/// A high-precision complex number.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgValue {
    re: Float,
    im: Float,
}

impl AlgValue {
    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn conj(&self) -> AlgValue {
        AlgValue {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn abs(&self) -> Float {
        let h: Float = self.re.clone().square() + self.im.clone().square();
        h.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn scale_rational(&self, r: &Rational) -> AlgValue {
        let prec = self.prec();
        let f = Float::with_val(prec, r);
        AlgValue {
            re: self.re.clone() * &f,
            im: self.im.clone() * &f,
        }
    }

    pub fn scale_i64(&self, s: i64) -> AlgValue {
        AlgValue {
            re: self.re.clone() * s,
            im: self.im.clone() * s,
        }
    }

    pub fn scale_float(&self, f: &Float) -> AlgValue {
        AlgValue {
            re: self.re.clone() * f,
            im: self.im.clone() * f,
        }
    }

    pub fn div_float(&self, f: &Float) -> AlgValue {
        AlgValue {
            re: self.re.clone() / f,
            im: self.im.clone() / f,
        }
    }

    pub fn div(&self, rhs: &AlgValue) -> AlgValue {
        let den: Float = rhs.re.clone().square() + rhs.im.clone().square();
        let re = (self.re.clone() * &rhs.re + self.im.clone() * &rhs.im) / &den;
        let im = (self.im.clone() * &rhs.re - self.re.clone() * &rhs.im) / &den;
        AlgValue { re, im }
    }

    /// Argument in (-pi, pi].
    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    /// Principal branch square root (argument halved into (-pi/2, pi/2]).
    pub fn sqrt_principal(&self) -> AlgValue {
        let r = self.abs().sqrt();
        let half_arg = self.arg() / 2u32;
        let (sin, cos) = half_arg.sin_cos(Float::new(self.prec()));
        AlgValue {
            re: r.clone() * cos,
            im: r * sin,
        }
    }

    /// |a - b| <= abs_eps + rel_eps * max(|a|, |b|).
    pub fn approx_eq(&self, other: &AlgValue, tol: &Tolerance) -> bool {
        let diff = (self.clone() - other.clone()).abs();
        let ma = self.abs();
        let mb = other.abs();
        let m = if ma > mb { ma } else { mb };
        diff <= tol.abs_eps.clone() + tol.rel_eps.clone() * m
    }

    /// Decimal string pair with a digit count matching the precision.
    pub fn to_decimal_strings(&self) -> (String, String) {
        let digits = (self.prec() as f64 * 0.3010).ceil() as usize + 2;
        (
            format!("{:.*e}", digits, self.re),
            format!("{:.*e}", digits, self.im),
        )
    }
}

impl fmt::Display for AlgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

impl Add for AlgValue {
    type Output = AlgValue;
    fn add(self, rhs: AlgValue) -> AlgValue {
        AlgValue {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<'a> Add<&'a AlgValue> for AlgValue {
    type Output = AlgValue;
    fn add(self, rhs: &AlgValue) -> AlgValue {
        AlgValue {
            re: self.re + &rhs.re,
            im: self.im + &rhs.im,
        }
    }
}

impl Sub for AlgValue {
    type Output = AlgValue;
    fn sub(self, rhs: AlgValue) -> AlgValue {
        AlgValue {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl<'a> Sub<&'a AlgValue> for AlgValue {
    type Output = AlgValue;
    fn sub(self, rhs: &AlgValue) -> AlgValue {
        AlgValue {
            re: self.re - &rhs.re,
            im: self.im - &rhs.im,
        }
    }
}

impl Neg for AlgValue {
    type Output = AlgValue;
    fn neg(self) -> AlgValue {
        AlgValue {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for AlgValue {
    type Output = AlgValue;
    fn mul(self, rhs: AlgValue) -> AlgValue {
        &self * &rhs
    }
}

impl<'a> Mul<&'a AlgValue> for AlgValue {
    type Output = AlgValue;
    fn mul(self, rhs: &AlgValue) -> AlgValue {
        &self * rhs
    }
}

impl<'a, 'b> Mul<&'b AlgValue> for &'a AlgValue {
    type Output = AlgValue;
    fn mul(self, rhs: &AlgValue) -> AlgValue {
        let re = self.re.clone() * &rhs.re - self.im.clone() * &rhs.im;
        let im = self.re.clone() * &rhs.im + self.im.clone() * &rhs.re;
        AlgValue { re, im }
    }
}
