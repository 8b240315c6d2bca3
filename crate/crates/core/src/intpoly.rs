//! Dense univariate integer polynomials, enough for class polynomials and
//! recognized minimal polynomials.

use std::fmt;

use rug::{Integer, Rational};

use crate::hpcomplex::HPComplex;

/// Polynomial sum c_k X^k with exact integer coefficients, stored dense.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntPoly {
    coeffs: Vec<Integer>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<Integer>) -> Self {
        let mut p = IntPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn x_minus(c: impl Into<Integer>) -> Self {
        IntPoly {
            coeffs: vec![(-c.into()), Integer::from(1)],
        }
    }

    fn trim(&mut self) {
        while self
            .coeffs
            .last()
            .is_some_and(|c| c.cmp0() == std::cmp::Ordering::Equal)
        {
            self.coeffs.pop();
        }
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Integer {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| *c == 1)
    }

    /// Max |coefficient|.
    pub fn height(&self) -> Integer {
        self.coeffs
            .iter()
            .map(|c| c.clone().abs())
            .max()
            .unwrap_or_default()
    }

    /// Divide out the gcd of the coefficients and normalize the sign of the
    /// leading coefficient.
    pub fn primitive_part(&self) -> IntPoly {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut g = Integer::new();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        if g.cmp0() == std::cmp::Ordering::Equal {
            return self.clone();
        }
        let mut coeffs: Vec<Integer> = self.coeffs.iter().map(|c| Integer::from(c / &g)).collect();
        if coeffs.last().unwrap().cmp0() == std::cmp::Ordering::Less {
            for c in &mut coeffs {
                *c = Integer::from(-&*c);
            }
        }
        IntPoly::new(coeffs)
    }

    pub fn eval_complex(&self, z: &HPComplex) -> HPComplex {
        let p = z.prec();
        let zero = Rational::new();
        let mut acc = HPComplex::zero(p);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + &HPComplex::from_rationals(&Rational::from(c), &zero, p);
        }
        acc
    }

    /// Rational root r with p(r) = 0, found via the rational root theorem.
    /// Only linear factors are stripped, which is all the callers need.
    pub fn linear_rational_root(&self) -> Option<Rational> {
        if self.degree() == Some(1) {
            let a = &self.coeffs[1];
            let b = &self.coeffs[0];
            return Some(-Rational::from((b.clone(), a.clone())));
        }
        None
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            let mag = c.clone().abs();
            let sign = c.cmp0() == std::cmp::Ordering::Less;
            if first {
                if sign {
                    write!(f, "-")?;
                }
                first = false;
            } else if sign {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if mag != 1 {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "X")?;
                    } else {
                        write!(f, "X^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}
