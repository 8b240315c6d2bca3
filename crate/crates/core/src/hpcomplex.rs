//! Arbitrary-precision complex values on top of MPFR floats.
//!
//! `HPComplex` stores real and imaginary parts separately, each tagged with
//! its working precision in bits.  Mixed-precision arithmetic resolves to the
//! minimum of the operand precisions, so a value can never pretend to more
//! accuracy than its least precise ingredient.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};

pub const MIN_PREC: u32 = 64;

/// Complex number with explicit binary working precision.
#[derive(Clone, PartialEq)]
pub struct HPComplex {
    re: Float,
    im: Float,
}

impl HPComplex {
    pub fn new(re: Float, im: Float) -> Self {
        let p = re.prec().min(im.prec()).max(MIN_PREC);
        HPComplex {
            re: Float::with_val(p, re),
            im: Float::with_val(p, im),
        }
    }

    pub fn zero(prec: u32) -> Self {
        let p = prec.max(MIN_PREC);
        HPComplex {
            re: Float::with_val(p, 0),
            im: Float::with_val(p, 0),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, 0, prec)
    }

    pub fn i(prec: u32) -> Self {
        Self::from_i64(0, 1, prec)
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        let p = prec.max(MIN_PREC);
        HPComplex {
            re: Float::with_val(p, re),
            im: Float::with_val(p, im),
        }
    }

    pub fn from_i64(re: i64, im: i64, prec: u32) -> Self {
        let p = prec.max(MIN_PREC);
        HPComplex {
            re: Float::with_val(p, re),
            im: Float::with_val(p, im),
        }
    }

    pub fn from_real(re: Float) -> Self {
        let p = re.prec().max(MIN_PREC);
        let im = Float::with_val(p, 0);
        HPComplex { re, im }
    }

    pub fn from_rationals(re: &Rational, im: &Rational, prec: u32) -> Self {
        let p = prec.max(MIN_PREC);
        HPComplex {
            re: Float::with_val(p, re),
            im: Float::with_val(p, im),
        }
    }

    /// Parse a `re,im` decimal pair (a bare `re` means imaginary part 0).
    pub fn parse(s: &str, prec: u32) -> Result<Self> {
        let p = prec.max(MIN_PREC);
        let mut parts = s.splitn(2, ',');
        let re_s = parts.next().unwrap_or("").trim();
        let im_s = parts.next().unwrap_or("0").trim();
        let re = Float::parse(re_s)
            .map(|v| Float::with_val(p, v))
            .map_err(|_| Error::Parse(format!("bad real part `{re_s}`")))?;
        let im = Float::parse(im_s)
            .map(|v| Float::with_val(p, v))
            .map_err(|_| Error::Parse(format!("bad imaginary part `{im_s}`")))?;
        Ok(HPComplex { re, im })
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().min(self.im.prec())
    }

    /// Same value re-rounded to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        let p = prec.max(MIN_PREC);
        HPComplex {
            re: Float::with_val(p, &self.re),
            im: Float::with_val(p, &self.im),
        }
    }

    fn op_prec(&self, other: &Self) -> u32 {
        self.prec().min(other.prec())
    }

    pub fn conj(&self) -> Self {
        HPComplex {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().square() + self.im.clone().square())
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    /// Crude magnitude `|Re| + |Im|`; cheap scale estimate for tolerances.
    pub fn mag(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().abs() + self.im.clone().abs())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn recip(&self) -> Self {
        let p = self.prec();
        let n = self.norm_sqr();
        HPComplex {
            re: Float::with_val(p, &self.re / &n),
            im: Float::with_val(p, Float::with_val(p, -&self.im) / &n),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = HPComplex::one(self.prec());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn scale(&self, t: &Float) -> Self {
        let p = self.prec().min(t.prec());
        HPComplex {
            re: Float::with_val(p, &self.re * t),
            im: Float::with_val(p, &self.im * t),
        }
    }

    pub fn scale_i64(&self, t: i64) -> Self {
        let p = self.prec();
        HPComplex {
            re: Float::with_val(p, &self.re * t),
            im: Float::with_val(p, &self.im * t),
        }
    }

    pub fn div_f(&self, t: &Float) -> Self {
        let p = self.prec().min(t.prec());
        HPComplex {
            re: Float::with_val(p, &self.re / t),
            im: Float::with_val(p, &self.im / t),
        }
    }

    /// Multiplication by i.
    pub fn mul_i(&self) -> Self {
        HPComplex {
            re: Float::with_val(self.im.prec(), -&self.im),
            im: self.re.clone(),
        }
    }

    /// Complex exponential via MPFR `exp` and `sin_cos`.
    pub fn exp(&self) -> Self {
        let p = self.prec();
        let r = Float::with_val(p, &self.re).exp();
        let (sin, cos) = Float::with_val(p, &self.im).sin_cos(Float::new(p));
        HPComplex {
            re: Float::with_val(p, &r * &cos),
            im: Float::with_val(p, &r * &sin),
        }
    }

    /// Decimal rendering with enough digits for the stored precision.
    pub fn to_decimal(&self) -> (String, String) {
        (float_to_decimal(&self.re), float_to_decimal(&self.im))
    }
}

pub fn float_to_decimal(x: &Float) -> String {
    let digits = (x.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
    x.to_string_radix(10, Some(digits))
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec.max(MIN_PREC), Constant::Pi)
}

/// The constant 2*pi*i, the derivative factor between d/dtau and q*d/dq.
pub fn two_pi_i(prec: u32) -> HPComplex {
    let p = prec.max(MIN_PREC);
    HPComplex {
        re: Float::with_val(p, 0),
        im: Float::with_val(p, 2 * pi(p)),
    }
}

pub fn pow2(prec: u32, e: i64) -> Float {
    Float::with_val(prec.max(MIN_PREC), 2).pow(e as i32)
}

impl fmt::Debug for HPComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)@{}", self.re, self.im, self.prec())
    }
}

impl fmt::Display for HPComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal();
        write!(f, "{re} {im}")
    }
}

impl Add for &HPComplex {
    type Output = HPComplex;
    fn add(self, rhs: &HPComplex) -> HPComplex {
        let p = self.op_prec(rhs);
        HPComplex {
            re: Float::with_val(p, &self.re + &rhs.re),
            im: Float::with_val(p, &self.im + &rhs.im),
        }
    }
}

impl Sub for &HPComplex {
    type Output = HPComplex;
    fn sub(self, rhs: &HPComplex) -> HPComplex {
        let p = self.op_prec(rhs);
        HPComplex {
            re: Float::with_val(p, &self.re - &rhs.re),
            im: Float::with_val(p, &self.im - &rhs.im),
        }
    }
}

impl Mul for &HPComplex {
    type Output = HPComplex;
    fn mul(self, rhs: &HPComplex) -> HPComplex {
        let p = self.op_prec(rhs);
        let re = Float::with_val(p, &self.re * &rhs.re) - Float::with_val(p, &self.im * &rhs.im);
        let im = Float::with_val(p, &self.re * &rhs.im) + Float::with_val(p, &self.im * &rhs.re);
        HPComplex {
            re: Float::with_val(p, re),
            im: Float::with_val(p, im),
        }
    }
}

impl Div for &HPComplex {
    type Output = HPComplex;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &HPComplex) -> HPComplex {
        self * &rhs.recip()
    }
}

impl Neg for &HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex {
            re: Float::with_val(self.re.prec(), -&self.re),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: HPComplex) -> HPComplex {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: &HPComplex) -> HPComplex {
                (&self).$m(rhs)
            }
        }
        impl $tr<HPComplex> for &HPComplex {
            type Output = HPComplex;
            fn $m(self, rhs: HPComplex) -> HPComplex {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        -&self
    }
}
