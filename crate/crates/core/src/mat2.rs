//! 2x2 integer matrices with positive determinant.
//!
//! Covers both SL2(Z) words produced by fundamental-domain reduction and the
//! primitive determinant-N representatives acting on the upper half-plane.

use std::fmt;

use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::hpcomplex::HPComplex;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat2Z {
    pub a: Integer,
    pub b: Integer,
    pub c: Integer,
    pub d: Integer,
}

impl Mat2Z {
    pub fn new(
        a: impl Into<Integer>,
        b: impl Into<Integer>,
        c: impl Into<Integer>,
        d: impl Into<Integer>,
    ) -> Result<Self> {
        let m = Mat2Z {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        };
        if m.det() <= 0 {
            return Err(Error::NonPositiveDeterminant(m.det().to_string()));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Mat2Z {
            a: Integer::from(1),
            b: Integer::from(0),
            c: Integer::from(0),
            d: Integer::from(1),
        }
    }

    /// Translation tau -> tau + n.
    pub fn translation(n: impl Into<Integer>) -> Self {
        Mat2Z {
            a: Integer::from(1),
            b: n.into(),
            c: Integer::from(0),
            d: Integer::from(1),
        }
    }

    /// Inversion tau -> -1/tau.
    pub fn inversion() -> Self {
        Mat2Z {
            a: Integer::from(0),
            b: Integer::from(-1),
            c: Integer::from(1),
            d: Integer::from(0),
        }
    }

    pub fn det(&self) -> Integer {
        Integer::from(&self.a * &self.d) - Integer::from(&self.b * &self.c)
    }

    /// gcd of all four entries.
    pub fn content(&self) -> Integer {
        let g = Integer::from(self.a.gcd_ref(&self.b));
        let g = g.gcd(&self.c);
        g.gcd(&self.d)
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn require_primitive(&self) -> Result<()> {
        let c = self.content();
        if c == 1 {
            Ok(())
        } else {
            Err(Error::ImprimitiveMatrix(c.to_string()))
        }
    }

    pub fn is_unimodular(&self) -> bool {
        self.det() == 1
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.c.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn mul(&self, rhs: &Mat2Z) -> Mat2Z {
        Mat2Z {
            a: Integer::from(&self.a * &rhs.a) + Integer::from(&self.b * &rhs.c),
            b: Integer::from(&self.a * &rhs.b) + Integer::from(&self.b * &rhs.d),
            c: Integer::from(&self.c * &rhs.a) + Integer::from(&self.d * &rhs.c),
            d: Integer::from(&self.c * &rhs.b) + Integer::from(&self.d * &rhs.d),
        }
    }

    /// Inverse of a determinant-1 matrix.
    pub fn inverse_unimodular(&self) -> Result<Mat2Z> {
        if !self.is_unimodular() {
            return Err(Error::ShapeMismatch(format!(
                "inverse_unimodular needs det 1, got {}",
                self.det()
            )));
        }
        Ok(Mat2Z {
            a: self.d.clone(),
            b: Integer::from(-&self.b),
            c: Integer::from(-&self.c),
            d: self.a.clone(),
        })
    }

    /// Moebius action (a tau + b) / (c tau + d).
    pub fn apply(&self, tau: &HPComplex) -> HPComplex {
        let p = tau.prec();
        let num =
            &tau.scale(&int_to_float(&self.a, p)) + &HPComplex::from_real(int_to_float(&self.b, p));
        let den = self.cofactor(tau);
        &num / &den
    }

    /// The automorphy cofactor c*tau + d.
    pub fn cofactor(&self, tau: &HPComplex) -> HPComplex {
        let p = tau.prec();
        &tau.scale(&int_to_float(&self.c, p)) + &HPComplex::from_real(int_to_float(&self.d, p))
    }

    /// m_g(tau) = (c tau + d)^2 / det g, the reciprocal derivative of tau -> g tau.
    pub fn m_g(&self, tau: &HPComplex) -> HPComplex {
        let p = tau.prec();
        let num = self.cofactor(tau).square();
        num.div_f(&int_to_float(&self.det(), p))
    }
}

pub fn int_to_float(n: &Integer, prec: u32) -> Float {
    Float::with_val(prec.max(crate::hpcomplex::MIN_PREC), n)
}

impl fmt::Debug for Mat2Z {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

impl fmt::Display for Mat2Z {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.a, self.b, self.c, self.d)
    }
}
