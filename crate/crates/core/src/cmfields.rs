//! Imaginary quadratic points, reduced binary quadratic forms, Heegner
//! points, Hilbert class polynomials, and the GL2+(Q)-orbit structure of
//! quadratic tuples.

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::evaluator::{eval_j, GUARD_BITS};
use crate::hpcomplex::HPComplex;
use crate::intpoly::IntPoly;
use crate::mat2::Mat2Z;

/// Default desk bound on class numbers for class-polynomial work.
pub const DESK_CLASS_BOUND: usize = 32;

/// Root of a primitive integral quadratic A tau^2 + B tau + C = 0 with
/// positive imaginary part; carries its discriminant D = B^2 - 4AC < 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticPoint {
    a: i64,
    b: i64,
    c: i64,
    disc: i64,
}

fn gcd_i64(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl QuadraticPoint {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        if a <= 0 {
            return Err(Error::InvalidQuadraticPoint(format!(
                "leading coefficient {a} must be positive"
            )));
        }
        let disc = b
            .checked_mul(b)
            .and_then(|bb| a.checked_mul(4 * c).map(|f| bb - f))
            .ok_or_else(|| Error::InvalidQuadraticPoint("coefficient overflow".into()))?;
        if disc >= 0 {
            return Err(Error::InvalidQuadraticPoint(format!(
                "discriminant {disc} is not negative"
            )));
        }
        if gcd_i64(gcd_i64(a, b), c) != 1 {
            return Err(Error::InvalidQuadraticPoint(
                "coefficients are not coprime".into(),
            ));
        }
        Ok(QuadraticPoint { a, b, c, disc })
    }

    pub fn coefficients(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn discriminant(&self) -> i64 {
        self.disc
    }

    /// tau = (-B + sqrt(D)) / (2A) as a high-precision point.
    pub fn embed(&self, prec: u32) -> HPComplex {
        let re = Rational::from((-self.b, 2 * self.a));
        let im_sq = Rational::from((-self.disc, 4 * self.a * self.a));
        let im = Float::with_val(prec, im_sq).sqrt();
        HPComplex::new(Float::with_val(prec, re), im)
    }

    /// D = f^2 d0 with d0 squarefree (and negative).
    pub fn squarefree_decomposition(&self) -> (i64, i64) {
        squarefree_decomposition(self.disc)
    }
}

pub fn squarefree_decomposition(d: i64) -> (i64, i64) {
    let mut m = d.abs();
    let mut f = 1i64;
    let mut p = 2i64;
    while p * p <= m {
        while m % (p * p) == 0 {
            m /= p * p;
            f *= p;
        }
        p += 1;
    }
    (f, -m)
}

pub fn qpoint(a: i64, b: i64, c: i64) -> Result<QuadraticPoint> {
    QuadraticPoint::new(a, b, c)
}

fn valid_discriminant(d: i64) -> bool {
    d < 0 && (d.rem_euclid(4) == 0 || d.rem_euclid(4) == 1)
}

/// All reduced primitive forms (a, b, c) of discriminant D:
/// |b| <= a <= c with b >= 0 whenever |b| = a or a = c.
pub fn reduced_forms(d: i64) -> Result<Vec<(i64, i64, i64)>> {
    if !valid_discriminant(d) {
        return Err(Error::InvalidDiscriminant(d));
    }
    let mut forms = Vec::new();
    let a_bound = ((-d) as f64 / 3.0).sqrt() as i64 + 1;
    for a in 1..=a_bound {
        for b in -a..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a {
                continue;
            }
            if b < 0 && (-b == a || a == c) {
                continue;
            }
            if gcd_i64(gcd_i64(a, b), c) != 1 {
                continue;
            }
            forms.push((a, b, c));
        }
    }
    forms.sort();
    Ok(forms)
}

pub fn class_number(d: i64) -> Result<usize> {
    Ok(reduced_forms(d)?.len())
}

/// One quadratic point per reduced form; all lie in the fundamental domain
/// and their j-values run over the Galois orbit of the singular modulus.
pub fn heegner_points(d: i64) -> Result<Vec<QuadraticPoint>> {
    reduced_forms(d)?
        .into_iter()
        .map(|(a, b, c)| QuadraticPoint::new(a, b, c))
        .collect()
}

/// Hilbert class polynomial prod (X - j(tau_i)) rounded to integers;
/// a rounding residual >= 1/4 signals insufficient precision.
pub fn hilbert_class_poly(d: i64, prec: u32) -> Result<IntPoly> {
    hilbert_class_poly_with_residual(d, prec).map(|(p, _)| p)
}

/// Same, also reporting the worst rounding residual.
pub fn hilbert_class_poly_with_residual(d: i64, prec: u32) -> Result<(IntPoly, f64)> {
    let points = heegner_points(d)?;
    if points.len() > DESK_CLASS_BOUND {
        return Err(Error::ClassNumberOverBound(points.len(), DESK_CLASS_BOUND));
    }
    let wp = prec + GUARD_BITS;
    let mut coeffs = vec![HPComplex::one(wp)];
    for pt in &points {
        let j = eval_j(&pt.embed(wp), wp)?;
        let mut next = vec![HPComplex::zero(wp); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k + 1] = &next[k + 1] + c;
            next[k] = &next[k] - &(c * &j);
        }
        coeffs = next;
    }
    let mut out = Vec::with_capacity(coeffs.len());
    let mut max_resid = 0f64;
    for c in &coeffs {
        let rounded = c.re().clone().round();
        let int = rounded.to_integer().unwrap_or_default();
        let re_err = Float::with_val(wp, c.re() - &rounded).abs();
        let im_err = c.im().clone().abs();
        max_resid = max_resid.max(Float::with_val(64, re_err.max(&im_err)).to_f64());
        out.push(int);
    }
    if max_resid >= 0.25 {
        return Err(Error::RoundingResidual {
            residual: max_resid,
        });
    }
    Ok((IntPoly::new(out), max_resid))
}

/// Two quadratic points generate the same imaginary quadratic field exactly
/// when the squarefree parts of their discriminants agree; that is the
/// GL2+(Q)-orbit test.
pub fn same_gl2q_orbit(t: &QuadraticPoint, s: &QuadraticPoint) -> bool {
    t.squarefree_decomposition().1 == s.squarefree_decomposition().1
}

/// One orbit block of a decomposed tuple.
#[derive(Clone, Debug)]
pub struct OrbitBlock {
    pub base_index: usize,
    pub base: QuadraticPoint,
    /// (coordinate index, primitive matrix g, det g) with tau_idx = g base.
    pub members: Vec<(usize, Mat2Z, Integer)>,
}

/// Partition of a quadratic tuple into GL2+(Q)-orbits with upper-triangular
/// maps from each block's base point.
#[derive(Clone, Debug)]
pub struct SpecialDecomposition {
    pub blocks: Vec<OrbitBlock>,
}

impl SpecialDecomposition {
    pub fn block_of(&self, index: usize) -> Option<&OrbitBlock> {
        self.blocks
            .iter()
            .find(|b| b.base_index == index || b.members.iter().any(|(i, _, _)| *i == index))
    }
}

/// Exact element of Q(sqrt(d0)): rat + irr * sqrt(d0).
#[derive(Clone, PartialEq, Debug)]
struct QuadVal {
    rat: Rational,
    irr: Rational,
}

fn embed_exact(p: &QuadraticPoint) -> QuadVal {
    let (f, _) = p.squarefree_decomposition();
    QuadVal {
        rat: Rational::from((-p.b, 2 * p.a)),
        irr: Rational::from((f, 2 * p.a)),
    }
}

/// Decompose a tuple as (sigma_1, g_{1,1} sigma_1, ..., sigma_k, ...) with
/// the base points in pairwise distinct GL2+(Q)-orbits and each in-block map
/// a primitive upper-triangular matrix, solved exactly.
pub fn decompose_tuple(points: &[QuadraticPoint]) -> Result<SpecialDecomposition> {
    let mut blocks: Vec<OrbitBlock> = Vec::new();
    for (idx, pt) in points.iter().enumerate() {
        let (f_pt, d0_pt) = pt.squarefree_decomposition();
        let mut placed = false;
        for block in &mut blocks {
            let (f_base, d0_base) = block.base.squarefree_decomposition();
            if d0_base != d0_pt {
                continue;
            }
            // tau' = p sigma + q with p = A f' / (A' f), q from the rational parts
            let base = block.base;
            let p = Rational::from((base.a * f_pt, pt.a * f_base));
            let q =
                (&p * Rational::from((-base.b, 2 * base.a))) - Rational::from((-pt.b, 2 * pt.a));
            let q = -q;
            // clear denominators of (p, q; 0, 1) and strip the content
            let lcm = p.denom().clone().lcm(q.denom());
            let top_left = Integer::from(p.numer() * &lcm) / p.denom();
            let top_right = Integer::from(q.numer() * &lcm) / q.denom();
            let content = Integer::from(top_left.gcd_ref(&top_right)).gcd(&lcm);
            let g = Mat2Z::new(
                top_left / &content,
                top_right / &content,
                Integer::from(0),
                lcm / &content,
            )?;
            // exact reconstruction check in Q(sqrt d0), zero tolerance
            let sigma = embed_exact(&base);
            let alpha = Rational::from(&g.a);
            let beta = Rational::from(&g.b);
            let delta = Rational::from(&g.d);
            let image = QuadVal {
                rat: (Rational::from(&alpha * &sigma.rat) + beta) / delta.clone(),
                irr: Rational::from(&alpha * &sigma.irr) / delta,
            };
            if image != embed_exact(pt) {
                return Err(Error::InternalInconsistency(format!(
                    "exact solve failed to reproduce coordinate {idx}"
                )));
            }
            let det = g.det();
            block.members.push((idx, g, det));
            placed = true;
            break;
        }
        if !placed {
            blocks.push(OrbitBlock {
                base_index: idx,
                base: *pt,
                members: Vec::new(),
            });
        }
    }
    Ok(SpecialDecomposition { blocks })
}

/// Table rows (|D|^(1/4), h(D)) behind the class-number growth report.
pub fn siegel_trend(discs: &[i64]) -> Result<Vec<(f64, usize)>> {
    discs
        .iter()
        .map(|&d| Ok(((-d as f64).powf(0.25), class_number(d)?)))
        .collect()
}

/// Discriminant of a quadratic tuple, taken as the coordinate discriminant
/// of largest absolute value.  For mixed tuples no canonical notion exists;
/// this maximum is the convention used throughout.
pub fn tuple_discriminant(points: &[QuadraticPoint]) -> Option<i64> {
    points.iter().map(|p| p.discriminant()).min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpcomplex::pow2;
    use rug::ops::Pow;

    #[test]
    fn qpoint_examples() {
        let i = qpoint(1, 0, 1).unwrap();
        assert_eq!(i.discriminant(), -4);
        let e = i.embed(128);
        assert!(e.re().clone().abs().to_f64() < 1e-30);
        assert!((e.im().to_f64() - 1.0).abs() < 1e-30);

        let rho = qpoint(1, 1, 1).unwrap();
        assert_eq!(rho.discriminant(), -3);
        let e = rho.embed(128);
        assert!((e.re().to_f64() + 0.5).abs() < 1e-30);
        assert!((e.im().to_f64() - 3f64.sqrt() / 2.0).abs() < 1e-15);

        let two_i = qpoint(1, 0, 4).unwrap();
        assert_eq!(two_i.discriminant(), -16);
        assert!((two_i.embed(128).im().to_f64() - 2.0).abs() < 1e-30);
    }

    #[test]
    fn qpoint_rejections() {
        assert!(qpoint(-1, 0, 1).is_err());
        assert!(qpoint(1, 2, 1).is_err()); // D = 0
        assert!(qpoint(1, 3, 1).is_err()); // D = 5 > 0
        assert!(qpoint(2, 0, 2).is_err()); // imprimitive
    }

    #[test]
    fn reduced_forms_examples() {
        assert_eq!(reduced_forms(-4).unwrap(), vec![(1, 0, 1)]);
        assert_eq!(
            reduced_forms(-23).unwrap(),
            vec![(1, 1, 6), (2, -1, 3), (2, 1, 3)]
        );
        assert_eq!(reduced_forms(-163).unwrap(), vec![(1, 1, 41)]);
        assert!(matches!(
            reduced_forms(-6),
            Err(Error::InvalidDiscriminant(-6))
        ));
        assert!(reduced_forms(4).is_err());
    }

    #[test]
    fn heegner_examples() {
        let h4 = heegner_points(-4).unwrap();
        assert_eq!(h4.len(), 1);
        assert_eq!(h4[0], qpoint(1, 0, 1).unwrap());
        let h3 = heegner_points(-3).unwrap();
        assert_eq!(h3, vec![qpoint(1, 1, 1).unwrap()]);

        // 3 points with pairwise distinct j-values
        let prec = 192;
        let js: Vec<HPComplex> = heegner_points(-23)
            .unwrap()
            .iter()
            .map(|p| eval_j(&p.embed(prec + 64), prec).unwrap())
            .collect();
        assert_eq!(js.len(), 3);
        for a in 0..3 {
            for b in (a + 1)..3 {
                assert!((&js[a] - &js[b]).abs().to_f64() > 1e-3);
            }
        }
    }

    #[test]
    fn hilbert_examples() {
        let h = hilbert_class_poly(-4, 256).unwrap();
        assert_eq!(h.to_string(), "X - 1728");

        let h = hilbert_class_poly(-163, 512).unwrap();
        assert_eq!(h.degree(), Some(1));
        assert_eq!(h.coeff(0), Integer::from(262537412640768000i64));

        let h1 = hilbert_class_poly(-23, 512).unwrap();
        let h2 = hilbert_class_poly(-23, 768).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1.degree(), Some(3));
        assert!(h1.is_monic());

        // the other class-number-one strongholds
        let h = hilbert_class_poly(-43, 512).unwrap();
        assert_eq!(h.coeff(0), Integer::from(960i64).pow(3));
        let h = hilbert_class_poly(-67, 512).unwrap();
        assert_eq!(h.coeff(0), Integer::from(5280i64).pow(3));
    }

    #[test]
    fn orbit_test_examples() {
        let i = qpoint(1, 0, 1).unwrap();
        let two_i = qpoint(1, 0, 4).unwrap();
        let rho = qpoint(1, 1, 1).unwrap();
        assert!(same_gl2q_orbit(&i, &two_i));
        assert!(!same_gl2q_orbit(&i, &rho));
        // D = -8 twice, squarefree part -2 both
        assert!(same_gl2q_orbit(
            &qpoint(1, 0, 2).unwrap(),
            &qpoint(1, 2, 3).unwrap()
        ));
    }

    #[test]
    fn decompose_examples() {
        let i = qpoint(1, 0, 1).unwrap();
        let two_i = qpoint(1, 0, 4).unwrap();
        let rho = qpoint(1, 1, 1).unwrap();

        let dec = decompose_tuple(&[i, two_i, rho]).unwrap();
        assert_eq!(dec.blocks.len(), 2);
        assert_eq!(dec.blocks[0].base_index, 0);
        assert_eq!(dec.blocks[0].members.len(), 1);
        let (idx, g, det) = &dec.blocks[0].members[0];
        assert_eq!(*idx, 1);
        assert_eq!(*g, Mat2Z::new(2, 0, 0, 1).unwrap());
        assert_eq!(*det, 2);
        assert_eq!(dec.blocks[1].base_index, 2);

        let dec = decompose_tuple(&[i]).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert!(dec.blocks[0].members.is_empty());

        // i and i + 1: translation of determinant 1
        let shifted = qpoint(1, -2, 2).unwrap();
        let dec = decompose_tuple(&[i, shifted]).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        let (_, g, det) = &dec.blocks[0].members[0];
        assert_eq!(*g, Mat2Z::new(1, 1, 0, 1).unwrap());
        assert_eq!(*det, 1);

        // fractional map: (-1 + i)/2 = (1/2) i - 1/2 clears to (1, -1; 0, 2)
        let half = qpoint(2, 2, 1).unwrap();
        let dec = decompose_tuple(&[i, half]).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        let (_, g, det) = &dec.blocks[0].members[0];
        assert_eq!(*g, Mat2Z::new(1, -1, 0, 2).unwrap());
        assert_eq!(*det, 2);
    }

    #[test]
    fn decompose_reconstructs_numerically() {
        let pts = [
            qpoint(1, 0, 2).unwrap(),
            qpoint(3, 2, 5).unwrap(),
            qpoint(1, 2, 3).unwrap(),
            qpoint(2, 2, 3).unwrap(),
        ];
        let dec = decompose_tuple(&pts).unwrap();
        let prec = 192;
        for block in &dec.blocks {
            let sigma = block.base.embed(prec);
            for (idx, g, _) in &block.members {
                assert!(g.is_primitive());
                assert!(g.is_upper_triangular());
                let img = g.apply(&sigma);
                let target = pts[*idx].embed(prec);
                assert!((&img - &target).abs() < pow2(64, -150));
            }
        }
    }

    #[test]
    fn siegel_rows() {
        let rows = siegel_trend(&[-4, -20, -84, -420, -1092]).unwrap();
        assert_eq!(rows.len(), 5);
        // class numbers grow along the listed family
        assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
