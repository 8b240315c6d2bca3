//! Exact truncated Laurent q-expansions.
//!
//! Everything here is exact rational arithmetic; no floating point enters
//! this module.  A `QSeries` stores a contiguous coefficient window starting
//! at `lead_exp`.  Coefficients below the window are exactly zero.  When the
//! `exact` flag is set, coefficients above the window are also exactly zero
//! (finite Laurent polynomials), otherwise they are unknown and the window
//! end is the truncation order.

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QSeries {
    lead_exp: i64,
    coeffs: Vec<Rational>,
    exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedSeries {
    J,
    Delta,
    Chi,
    F,
    E4CubedMinusE6Sq,
}

impl QSeries {
    /// Truncated series with the given window; leading zeros are trimmed.
    pub fn truncated(lead_exp: i64, coeffs: Vec<Rational>) -> Self {
        QSeries {
            lead_exp,
            coeffs,
            exact: false,
        }
        .normalized()
    }

    /// Exact finite Laurent polynomial from (exponent, coefficient) pairs.
    pub fn from_terms(terms: &[(i64, Rational)]) -> Self {
        if terms.is_empty() {
            return QSeries::zero_exact();
        }
        let lead = terms.iter().map(|(e, _)| *e).min().unwrap();
        let top = terms.iter().map(|(e, _)| *e).max().unwrap();
        let mut coeffs = vec![Rational::new(); (top - lead + 1) as usize];
        for (e, c) in terms {
            coeffs[(e - lead) as usize] += c;
        }
        QSeries {
            lead_exp: lead,
            coeffs,
            exact: true,
        }
        .normalized()
    }

    pub fn constant(c: impl Into<Rational>) -> Self {
        QSeries::from_terms(&[(0, c.into())])
    }

    pub fn zero_exact() -> Self {
        QSeries {
            lead_exp: 0,
            coeffs: Vec::new(),
            exact: true,
        }
    }

    fn normalized(mut self) -> Self {
        let mut skip = 0;
        while skip < self.coeffs.len() && self.coeffs[skip].cmp0() == std::cmp::Ordering::Equal {
            skip += 1;
        }
        if skip > 0 {
            self.coeffs.drain(..skip);
            self.lead_exp += skip as i64;
        }
        // trailing zeros carry no information for exact polynomials
        if self.exact {
            while self
                .coeffs
                .last()
                .is_some_and(|c| c.cmp0() == std::cmp::Ordering::Equal)
            {
                self.coeffs.pop();
            }
            // canonical exact zero
            if self.coeffs.is_empty() {
                self.lead_exp = 0;
            }
        }
        self
    }

    pub fn lead_exp(&self) -> i64 {
        self.lead_exp
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Exclusive upper bound of known exponents; `None` means all exponents.
    pub fn coverage_end(&self) -> Option<i64> {
        if self.exact {
            None
        } else {
            Some(self.lead_exp + self.coeffs.len() as i64)
        }
    }

    /// Coefficient of q^e; zero below the window, `None` where unknown.
    pub fn coeff(&self, e: i64) -> Option<Rational> {
        if e < self.lead_exp {
            return Some(Rational::new());
        }
        let idx = (e - self.lead_exp) as usize;
        if idx < self.coeffs.len() {
            Some(self.coeffs[idx].clone())
        } else if self.exact {
            Some(Rational::new())
        } else {
            None
        }
    }

    fn coeff_in_window(&self, e: i64) -> Rational {
        if e < self.lead_exp {
            return Rational::new();
        }
        let idx = (e - self.lead_exp) as usize;
        self.coeffs.get(idx).cloned().unwrap_or_default()
    }

    pub fn truncate(&self, n_terms: usize) -> Result<QSeries> {
        if n_terms == 0 {
            return Err(Error::EmptyValidRange);
        }
        if n_terms >= self.coeffs.len() {
            return Ok(self.clone());
        }
        Ok(QSeries {
            lead_exp: self.lead_exp,
            coeffs: self.coeffs[..n_terms].to_vec(),
            exact: false,
        })
    }

    pub fn add(&self, rhs: &QSeries) -> QSeries {
        self.add_signed(rhs, false)
    }

    pub fn sub(&self, rhs: &QSeries) -> QSeries {
        self.add_signed(rhs, true)
    }

    fn add_signed(&self, rhs: &QSeries, negate: bool) -> QSeries {
        let exact = self.exact && rhs.exact;
        let start = self.lead_exp.min(rhs.lead_exp);
        let end = match (self.coverage_end(), rhs.coverage_end()) {
            (None, None) => self
                .lead_exp
                .saturating_add(self.coeffs.len() as i64)
                .max(rhs.lead_exp + rhs.coeffs.len() as i64),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.min(b),
        };
        let mut coeffs = Vec::with_capacity((end - start).max(0) as usize);
        for e in start..end {
            let mut c = self.coeff_in_window(e);
            let r = rhs.coeff_in_window(e);
            if negate {
                c -= r;
            } else {
                c += r;
            }
            coeffs.push(c);
        }
        QSeries {
            lead_exp: start,
            coeffs,
            exact,
        }
        .normalized()
    }

    pub fn mul(&self, rhs: &QSeries) -> QSeries {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return mul_with_zero(self, rhs);
        }
        let exact = self.exact && rhs.exact;
        let lead = self.lead_exp + rhs.lead_exp;
        let len = if exact {
            self.coeffs.len() + rhs.coeffs.len() - 1
        } else {
            let cov_a = self
                .coverage_end()
                .map(|c| c + rhs.lead_exp)
                .unwrap_or(i64::MAX);
            let cov_b = rhs
                .coverage_end()
                .map(|c| c + self.lead_exp)
                .unwrap_or(i64::MAX);
            (cov_a.min(cov_b) - lead) as usize
        };
        let mut coeffs = vec![Rational::new(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                coeffs[i + j] += Rational::from(a * b);
            }
        }
        QSeries {
            lead_exp: lead,
            coeffs,
            exact,
        }
        .normalized()
    }

    /// Laurent division; the divisor's leading coefficient must be nonzero.
    pub fn div(&self, rhs: &QSeries) -> Result<QSeries> {
        if rhs.coeffs.is_empty() {
            return Err(Error::ZeroSeriesDivision);
        }
        let quot_lead = self.lead_exp - rhs.lead_exp;
        if self.coeffs.is_empty() {
            // zero (or zero-window) numerator stays zero on the valid range
            let cov = match (self.coverage_end(), rhs.coverage_end()) {
                (None, _) => {
                    return Ok(QSeries::zero_exact());
                }
                (Some(a), _) => a - rhs.lead_exp,
            };
            return Ok(QSeries {
                lead_exp: cov,
                coeffs: Vec::new(),
                exact: false,
            });
        }
        let n_q = match (self.exact, rhs.exact) {
            (true, true) => {
                // try exact division first
                if let Some(q) = self.try_exact_div(rhs) {
                    return Ok(q);
                }
                self.coeffs.len().max(rhs.coeffs.len())
            }
            (true, false) => rhs.coeffs.len(),
            (false, true) => self.coeffs.len(),
            (false, false) => self.coeffs.len().min(rhs.coeffs.len()),
        };
        let q = long_division(&self.coeffs, &rhs.coeffs, n_q);
        Ok(QSeries {
            lead_exp: quot_lead,
            coeffs: q,
            exact: false,
        }
        .normalized())
    }

    fn try_exact_div(&self, rhs: &QSeries) -> Option<QSeries> {
        let bound = self.coeffs.len() + rhs.coeffs.len() + 1;
        let q = long_division(&self.coeffs, &rhs.coeffs, bound);
        let cand = QSeries {
            lead_exp: self.lead_exp - rhs.lead_exp,
            coeffs: q,
            exact: true,
        }
        .normalized();
        if cand.mul(rhs) == *self {
            Some(cand)
        } else {
            None
        }
    }

    pub fn pow(&self, e: i64) -> Result<QSeries> {
        if e < 0 {
            let inv = QSeries::constant(1).div(self)?;
            return inv.pow(-e);
        }
        let mut acc = if self.exact {
            QSeries::constant(1)
        } else {
            // keep the operand's window as the truncation order
            QSeries {
                lead_exp: 0,
                coeffs: std::iter::once(Rational::from(1))
                    .chain(std::iter::repeat(Rational::new()))
                    .take(self.coeffs.len().max(1))
                    .collect(),
                exact: false,
            }
        };
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// The operator theta = q d/dq applied termwise.
    pub fn theta(&self) -> QSeries {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Rational::from(self.lead_exp + i as i64))
            .collect();
        QSeries {
            lead_exp: self.lead_exp,
            coeffs,
            exact: self.exact,
        }
        .normalized()
    }

    pub fn scale(&self, t: &Rational) -> QSeries {
        QSeries {
            lead_exp: self.lead_exp,
            coeffs: self.coeffs.iter().map(|c| Rational::from(c * t)).collect(),
            exact: self.exact,
        }
        .normalized()
    }

    pub fn all_integer_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| *c.denom() == 1)
    }
}

fn mul_with_zero(a: &QSeries, b: &QSeries) -> QSeries {
    if (a.coeffs.is_empty() && a.exact) || (b.coeffs.is_empty() && b.exact) {
        return QSeries::zero_exact();
    }
    // a zero window times anything stays a zero window on the shifted range
    let cov_a = a.coverage_end().unwrap_or(i64::MAX);
    let cov_b = b.coverage_end().unwrap_or(i64::MAX);
    let end = (cov_a.saturating_add(b.lead_exp)).min(cov_b.saturating_add(a.lead_exp));
    QSeries {
        lead_exp: end,
        coeffs: Vec::new(),
        exact: false,
    }
}

fn long_division(num: &[Rational], den: &[Rational], n_q: usize) -> Vec<Rational> {
    let inv_lead = den[0].clone().recip();
    let mut rem: Vec<Rational> = num.to_vec();
    rem.resize(rem.len().max(n_q), Rational::new());
    let mut q = Vec::with_capacity(n_q);
    for k in 0..n_q {
        let qk = Rational::from(&rem[k] * &inv_lead);
        for (j, d) in den.iter().enumerate() {
            if k + j < rem.len() {
                let t = Rational::from(&qk * d);
                rem[k + j] -= t;
            }
        }
        q.push(qk);
    }
    q
}

/// Normalized Eisenstein series E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n.
pub fn eisenstein(k: u32, n_terms: usize) -> Result<QSeries> {
    if n_terms == 0 {
        return Err(Error::EmptyValidRange);
    }
    let mult: i64 = match k {
        2 => -24,
        4 => 240,
        6 => -504,
        _ => return Err(Error::InvalidWeight(k)),
    };
    let mut coeffs = Vec::with_capacity(n_terms);
    coeffs.push(Rational::from(1));
    for n in 1..n_terms as u64 {
        let s = sigma(n, k - 1);
        coeffs.push(Rational::from(Integer::from(mult) * s));
    }
    Ok(QSeries {
        lead_exp: 0,
        coeffs,
        exact: false,
    })
}

/// Divisor power sum by direct enumeration; ample at desk scale.
fn sigma(n: u64, e: u32) -> Integer {
    let mut s = Integer::new();
    for d in 1..=n {
        if n.is_multiple_of(d) {
            s += Integer::from(d).pow(e);
        }
    }
    s
}

/// The expansions used throughout: j, Delta, chi, f and E4^3 - E6^2.
pub fn named_series(name: NamedSeries, n_terms: usize) -> Result<QSeries> {
    if n_terms == 0 {
        return Err(Error::EmptyValidRange);
    }
    let m = n_terms + 2;
    let e4 = eisenstein(4, m)?;
    let e6 = eisenstein(6, m)?;
    let num1728 = QSeries::constant(1728);
    let disc_num = e4.pow(3)?.sub(&e6.pow(2)?);
    let result = match name {
        NamedSeries::E4CubedMinusE6Sq => disc_num,
        NamedSeries::Delta => disc_num.scale(&Rational::from((1, 1728))),
        NamedSeries::J => num1728.mul(&e4.pow(3)?).div(&disc_num)?,
        NamedSeries::F => num1728.mul(&e4).mul(&e6).div(&disc_num)?,
        NamedSeries::Chi => {
            let e2 = eisenstein(2, m)?;
            num1728.mul(&e2).mul(&e4).mul(&e6).div(&disc_num)?
        }
    };
    result.truncate(n_terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn eisenstein_low_order() {
        // sigma_1(1) = 1, sigma_1(2) = 3 by divisor enumeration
        let e2 = eisenstein(2, 3).unwrap();
        assert_eq!(e2.coeff(0).unwrap(), r(1));
        assert_eq!(e2.coeff(1).unwrap(), r(-24));
        assert_eq!(e2.coeff(2).unwrap(), r(-72));

        // sigma_3(1) = 1
        let e4 = eisenstein(4, 2).unwrap();
        assert_eq!(e4.coeff(1).unwrap(), r(240));

        let e6 = eisenstein(6, 1).unwrap();
        assert_eq!(e6.n_terms(), 1);
        assert_eq!(e6.coeff(0).unwrap(), r(1));

        assert!(matches!(eisenstein(3, 5), Err(Error::InvalidWeight(3))));
        assert!(eisenstein(2, 0).is_err());
    }

    #[test]
    fn eisenstein_integer_coeffs() {
        for k in [2, 4, 6] {
            assert!(eisenstein(k, 40).unwrap().all_integer_coeffs());
        }
    }

    #[test]
    fn exact_polynomial_product() {
        let a = QSeries::from_terms(&[(0, r(1)), (1, r(1))]);
        let b = QSeries::from_terms(&[(0, r(1)), (1, r(-1))]);
        let p = a.mul(&b);
        assert!(p.is_exact());
        assert_eq!(p.coeff(0).unwrap(), r(1));
        assert_eq!(p.coeff(1).unwrap(), r(0));
        assert_eq!(p.coeff(2).unwrap(), r(-1));
    }

    #[test]
    fn invert_delta_window() {
        // 1 / (q - 24q^2 + 252q^3) = q^-1 + 24 + 324 q by undetermined coefficients
        let delta3 = QSeries::truncated(1, vec![r(1), r(-24), r(252)]);
        let inv = QSeries::constant(1).div(&delta3).unwrap();
        assert_eq!(inv.lead_exp(), -1);
        assert_eq!(inv.n_terms(), 3);
        assert_eq!(inv.coeff(-1).unwrap(), r(1));
        assert_eq!(inv.coeff(0).unwrap(), r(24));
        assert_eq!(inv.coeff(1).unwrap(), r(324));
    }

    #[test]
    fn division_by_zero_series_rejected() {
        let z = QSeries::zero_exact();
        assert!(matches!(
            QSeries::constant(1).div(&z),
            Err(Error::ZeroSeriesDivision)
        ));
    }

    #[test]
    fn pow_keeps_constant_term() {
        let e4 = eisenstein(4, 5).unwrap();
        let p = e4.pow(3).unwrap();
        assert_eq!(p.coeff(0).unwrap(), r(1));
        assert_eq!(p.coeff(1).unwrap(), r(720));
    }

    #[test]
    fn theta_examples() {
        let s = QSeries::from_terms(&[(-1, r(1)), (0, r(744)), (1, r(196884))]);
        let t = s.theta();
        assert_eq!(t.coeff(-1).unwrap(), r(-1));
        assert_eq!(t.coeff(0).unwrap(), r(0));
        assert_eq!(t.coeff(1).unwrap(), r(196884));

        let c = QSeries::constant(5);
        assert!(c.theta().is_zero());

        let q2 = QSeries::from_terms(&[(2, r(1))]);
        let tt = q2.theta().theta();
        assert_eq!(tt.coeff(2).unwrap(), r(4));
    }

    #[test]
    fn named_series_low_order() {
        let j = named_series(NamedSeries::J, 3).unwrap();
        assert_eq!(j.lead_exp(), -1);
        assert_eq!(j.coeff(-1).unwrap(), r(1));
        assert_eq!(j.coeff(0).unwrap(), r(744));
        assert_eq!(j.coeff(1).unwrap(), r(196884));

        let d = named_series(NamedSeries::Delta, 2).unwrap();
        assert_eq!(d.lead_exp(), 1);
        assert_eq!(d.coeff(1).unwrap(), r(1));
        assert_eq!(d.coeff(2).unwrap(), r(-24));

        let f = named_series(NamedSeries::F, 2).unwrap();
        assert_eq!(f.lead_exp(), -1);
        assert_eq!(f.coeff(-1).unwrap(), r(1));
        assert_eq!(f.coeff(0).unwrap(), r(-240));

        let chi = named_series(NamedSeries::Chi, 2).unwrap();
        assert_eq!(chi.lead_exp(), -1);
    }

    #[test]
    fn delta_matches_product_formula() {
        // q prod (1-q^n)^24 expanded exactly, an independent route to Delta
        let n = 40usize;
        let mut prod = QSeries::from_terms(&[(1, r(1))]);
        for k in 1..=n as i64 {
            let factor = QSeries::from_terms(&[(0, r(1)), (k, r(-1))]);
            prod = prod.mul(&factor.pow(24).unwrap());
            prod = prod.truncate(n + 4).unwrap();
        }
        let delta = named_series(NamedSeries::Delta, n).unwrap();
        for e in 1..=n as i64 {
            assert_eq!(delta.coeff(e).unwrap(), prod.coeff(e).unwrap(), "q^{e}");
        }
    }

    #[test]
    fn quotient_identities_hold_termwise() {
        let n = 30usize;
        let m = n + 2;
        let e2 = eisenstein(2, m).unwrap();
        let e4 = eisenstein(4, m).unwrap();
        let e6 = eisenstein(6, m).unwrap();
        let delta = named_series(NamedSeries::Delta, m).unwrap();
        let j = named_series(NamedSeries::J, n).unwrap();
        let chi = named_series(NamedSeries::Chi, n).unwrap();
        let f = named_series(NamedSeries::F, n).unwrap();

        // j * (E4^3 - E6^2) = 1728 E4^3, equivalently j * Delta = E4^3
        let disc = named_series(NamedSeries::E4CubedMinusE6Sq, m).unwrap();
        let lhs = j.mul(&disc);
        let rhs = e4.pow(3).unwrap().scale(&r(1728));
        for e in 0..n as i64 {
            assert_eq!(lhs.coeff(e).unwrap(), rhs.coeff(e).unwrap());
        }
        let lhs = j.mul(&delta);
        let rhs = e4.pow(3).unwrap();
        for e in 0..n as i64 {
            assert_eq!(lhs.coeff(e).unwrap(), rhs.coeff(e).unwrap());
        }
        // chi * Delta = E2 E4 E6, f * Delta = E4 E6
        let lhs = chi.mul(&delta);
        let rhs = e2.mul(&e4).mul(&e6);
        for e in 0..n as i64 {
            assert_eq!(lhs.coeff(e).unwrap(), rhs.coeff(e).unwrap());
        }
        let lhs = f.mul(&delta);
        let rhs = e4.mul(&e6);
        for e in 0..n as i64 {
            assert_eq!(lhs.coeff(e).unwrap(), rhs.coeff(e).unwrap());
        }
    }

    #[test]
    fn theta_is_a_derivation() {
        let a = QSeries::truncated(-1, vec![r(3), r(0), r(-5), r(7)]);
        let b = QSeries::truncated(0, vec![r(2), r(1), r(4), r(-1)]);
        let lhs = a.mul(&b).theta();
        let rhs = a.theta().mul(&b).add(&a.mul(&b.theta()));
        let end = lhs.coverage_end().unwrap().min(rhs.coverage_end().unwrap());
        for e in -2..end {
            assert_eq!(lhs.coeff(e).unwrap(), rhs.coeff(e).unwrap(), "q^{e}");
        }
    }
}
