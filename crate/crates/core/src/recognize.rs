//! Integer-relation detection: minimal polynomials of high-precision values
//! by lattice reduction, rational reconstruction, and honest no-relation
//! reports.
//!
//! The lattice rows encode 1, z, ..., z^d with real and imaginary parts
//! scaled by 2^(prec-64) next to an identity block.  Every acceptance is
//! re-verified by evaluating the candidate at 1.5x precision, so lattice
//! false positives cannot survive.  NotFound is always a statement about the
//! searched box (degree, height, precision) and nothing more.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::hpcomplex::{pow2, HPComplex};
use crate::intpoly::IntPoly;

// ---------------------------------------------------------------------------
// Integral LLL (delta = 3/4) on row bases
// ---------------------------------------------------------------------------

struct Lll {
    rows: Vec<Vec<Integer>>,
    lambda: Vec<Vec<Integer>>,
    det: Vec<Integer>,
}

fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    let mut s = Integer::new();
    for (x, y) in a.iter().zip(b) {
        s += Integer::from(x * y);
    }
    s
}

impl Lll {
    fn new(rows: Vec<Vec<Integer>>) -> Self {
        let m = rows.len();
        let mut lambda = vec![vec![Integer::new(); m]; m];
        let mut det = vec![Integer::new(); m];
        for i in 0..m {
            for j in 0..=i {
                let mut u = dot(&rows[i], &rows[j]);
                for k in 0..j {
                    let prev = if k == 0 {
                        Integer::from(1)
                    } else {
                        det[k - 1].clone()
                    };
                    u = (Integer::from(&det[k] * &u)
                        - Integer::from(&lambda[i][k] * &lambda[j][k]))
                        / prev;
                }
                if j < i {
                    lambda[i][j] = u;
                } else {
                    det[i] = u;
                }
            }
        }
        Lll { rows, lambda, det }
    }

    fn d_prev(&self, k: usize) -> Integer {
        if k >= 2 {
            self.det[k - 2].clone()
        } else {
            Integer::from(1)
        }
    }

    fn reduce(&mut self, i: usize, k: usize) {
        let (q, _) = self.lambda[k][i].clone().div_rem_round(self.det[i].clone());
        if q.cmp0() == std::cmp::Ordering::Equal {
            return;
        }
        let (head, tail) = self.rows.split_at_mut(k);
        for (x, y) in tail[0].iter_mut().zip(&head[i]) {
            *x -= Integer::from(&q * y);
        }
        let li = self.lambda[i].clone();
        self.lambda[k][i] -= Integer::from(&q * &self.det[i]);
        for j in 0..i {
            self.lambda[k][j] -= Integer::from(&q * &li[j]);
        }
    }

    fn lovasz_ok(&self, k: usize) -> bool {
        let d0 = self.d_prev(k);
        let lhs = 4u32
            * (Integer::from(&d0 * &self.det[k])
                + Integer::from(&self.lambda[k][k - 1] * &self.lambda[k][k - 1]));
        let rhs = 3u32 * Integer::from(&self.det[k - 1] * &self.det[k - 1]);
        lhs >= rhs
    }

    fn swap(&mut self, k: usize) {
        self.rows.swap(k - 1, k);
        for j in 0..(k - 1) {
            let t = self.lambda[k - 1][j].clone();
            self.lambda[k - 1][j] = self.lambda[k][j].clone();
            self.lambda[k][j] = t;
        }
        let l0 = self.lambda[k][k - 1].clone();
        let d0 = self.d_prev(k);
        let d1 = self.det[k - 1].clone();
        let d2 = self.det[k].clone();
        for i in (k + 1)..self.rows.len() {
            let l1 = self.lambda[i][k - 1].clone();
            let l2 = self.lambda[i][k].clone();
            self.lambda[i][k - 1] = (Integer::from(&l0 * &l1) + Integer::from(&l2 * &d0)) / &d1;
            self.lambda[i][k] = (Integer::from(&l1 * &d2) - Integer::from(&l2 * &l0)) / &d1;
        }
        self.det[k - 1] = (Integer::from(&d0 * &d2) + Integer::from(&l0 * &l0)) / &d1;
    }

    fn run(&mut self) {
        let m = self.rows.len();
        let mut k = 1usize;
        while k < m {
            self.reduce(k - 1, k);
            if self.lovasz_ok(k) {
                for i in (0..k.saturating_sub(1)).rev() {
                    self.reduce(i, k);
                }
                k += 1;
            } else {
                self.swap(k);
                k = k.max(2) - 1;
            }
        }
    }
}

/// LLL-reduce an integer row basis (rows must be linearly independent).
pub fn lll_reduce(rows: Vec<Vec<Integer>>) -> Vec<Vec<Integer>> {
    let mut l = Lll::new(rows);
    l.run();
    l.rows
}

// ---------------------------------------------------------------------------
// Recognition
// ---------------------------------------------------------------------------

/// Outcome of the search at one fixed degree.
#[derive(Clone, Debug)]
pub struct DegreeSearch {
    pub degree: u32,
    pub found: Option<IntPoly>,
    /// log2 of the best (norm / identity-block norm) ratio seen.
    pub best_ratio_log2: f64,
    /// log2 of the acceptance threshold 2^(prec/8).
    pub threshold_log2: f64,
    /// log2 |p(z)| of the accepted polynomial, re-verified at 1.5x precision.
    pub residual_log2: Option<f64>,
}

/// NotFound evidence across a degree range; records the searched box.
#[derive(Clone, Debug)]
pub struct EvidenceReport {
    pub max_deg: u32,
    pub height_bound: Integer,
    pub prec: u32,
    pub degrees: Vec<DegreeSearch>,
}

impl EvidenceReport {
    pub fn any_found(&self) -> Option<&IntPoly> {
        self.degrees.iter().find_map(|d| d.found.as_ref())
    }

    /// Machine-readable key-value rendering.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("evidence.max_deg={}\n", self.max_deg));
        out.push_str(&format!("evidence.height_bound={}\n", self.height_bound));
        out.push_str(&format!("evidence.prec={}\n", self.prec));
        for d in &self.degrees {
            let k = d.degree;
            out.push_str(&format!("evidence.deg{k}.found={}\n", d.found.is_some()));
            out.push_str(&format!(
                "evidence.deg{k}.ratio_log2={:.2}\n",
                d.best_ratio_log2
            ));
            out.push_str(&format!(
                "evidence.deg{k}.threshold_log2={:.2}\n",
                d.threshold_log2
            ));
            if let Some(p) = &d.found {
                out.push_str(&format!("evidence.deg{k}.poly={p}\n"));
            }
            if let Some(r) = d.residual_log2 {
                out.push_str(&format!("evidence.deg{k}.residual_log2={r:.2}\n"));
            }
        }
        out
    }
}

fn precision_floor(max_deg: u32, prec: u32) -> Result<()> {
    let floor = 32 * max_deg;
    if prec < floor {
        return Err(Error::PrecisionBelowFloor {
            prec,
            floor,
            deg: max_deg,
        });
    }
    Ok(())
}

fn scaled_int(x: &Float, scale_bits: u32) -> Integer {
    let scaled = Float::with_val(x.prec() + scale_bits, x) << scale_bits;
    scaled.round().to_integer().unwrap_or_default()
}

fn row_norm_log2(row: &[Integer]) -> f64 {
    let n = dot(row, row);
    if n.cmp0() == std::cmp::Ordering::Equal {
        return f64::NEG_INFINITY;
    }
    Float::with_val(64, &n).to_f64().log2() / 2.0
}

/// Search one degree for an integer relation among 1, z, ..., z^d.
pub fn search_degree(
    z: &HPComplex,
    degree: u32,
    height_bound: &Integer,
    prec: u32,
) -> Result<DegreeSearch> {
    precision_floor(degree, prec)?;
    let d = degree as usize;
    let wp = prec + 64;
    let scale_bits = prec - 64;

    // powers of z
    let zw = z.with_prec(wp);
    let mut pw = HPComplex::one(wp);
    let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let mut row = vec![Integer::new(); d + 3];
        row[k] = Integer::from(1);
        row[d + 1] = scaled_int(pw.re(), scale_bits);
        row[d + 2] = scaled_int(pw.im(), scale_bits);
        rows.push(row);
        if k < d {
            pw = &pw * &zw;
        }
    }
    let reduced = lll_reduce(rows);

    let threshold_log2 = prec as f64 / 8.0;
    let mut best_ratio_log2 = f64::INFINITY;
    let mut candidates: Vec<(f64, IntPoly)> = Vec::new();
    for row in &reduced {
        let id_part = &row[..=d];
        let id_log2 = row_norm_log2(id_part).max(0.0);
        let full_log2 = row_norm_log2(row);
        let ratio = full_log2 - id_log2;
        best_ratio_log2 = best_ratio_log2.min(ratio);
        if ratio < threshold_log2 {
            let poly = IntPoly::new(id_part.to_vec()).primitive_part();
            if poly.degree().is_some_and(|dg| dg >= 1) && poly.height() <= *height_bound {
                candidates.push((ratio, poly));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // independent re-verification at 1.5x precision
    let vp = prec + prec / 2;
    let zv = z.with_prec(vp);
    let accept = pow2(vp, -((prec / 4) as i64));
    for (_, poly) in candidates {
        let resid = poly.eval_complex(&zv).abs();
        if resid < accept {
            let residual_log2 = resid.to_f64().log2();
            return Ok(DegreeSearch {
                degree,
                found: Some(poly),
                best_ratio_log2,
                threshold_log2,
                residual_log2: Some(residual_log2),
            });
        }
    }
    Ok(DegreeSearch {
        degree,
        found: None,
        best_ratio_log2,
        threshold_log2,
        residual_log2: None,
    })
}

/// Lowest-degree primitive integer polynomial vanishing at z within the box,
/// or None.  Ascending degree search makes any find minimal-degree, hence
/// irreducible over Q for genuinely algebraic z.
pub fn minimal_polynomial(
    z: &HPComplex,
    max_deg: u32,
    height_bound: &Integer,
    prec: u32,
) -> Result<Option<IntPoly>> {
    precision_floor(max_deg, prec)?;
    for degree in 1..=max_deg {
        let s = search_degree(z, degree, height_bound, prec)?;
        if let Some(p) = s.found {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Degree-1 specialization on a real value.
pub fn rational_reconstruct(x: &Float, prec: u32) -> Result<Option<Rational>> {
    rational_reconstruct_bounded(x, &Integer::from(10).pow(20), prec)
}

pub fn rational_reconstruct_bounded(
    x: &Float,
    height_bound: &Integer,
    prec: u32,
) -> Result<Option<Rational>> {
    let z = HPComplex::from_real(x.clone());
    let found = minimal_polynomial(&z, 1, height_bound, prec)?;
    Ok(found.and_then(|p| p.linear_rational_root()))
}

/// Run the per-degree searches across the whole box and report margins;
/// never claims transcendence, only absence of small relations.
pub fn transcendence_evidence(
    z: &HPComplex,
    max_deg: u32,
    height_bound: &Integer,
    prec: u32,
) -> Result<EvidenceReport> {
    precision_floor(max_deg, prec)?;
    let mut degrees = Vec::with_capacity(max_deg as usize);
    for degree in 1..=max_deg {
        degrees.push(search_degree(z, degree, height_bound, prec)?);
    }
    Ok(EvidenceReport {
        max_deg,
        height_bound: height_bound.clone(),
        prec,
        degrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmfields::heegner_points;
    use crate::evaluator::{eval_aux, eval_j};

    fn h(b: u64) -> Integer {
        Integer::from(b)
    }

    #[test]
    fn lll_finds_short_vector() {
        // a classic small example: relation 1*3 + 1*(-2) ... use knapsack-ish
        let rows = vec![
            vec![Integer::from(1), Integer::from(0), Integer::from(12345)],
            vec![Integer::from(0), Integer::from(1), Integer::from(12346)],
        ];
        let red = lll_reduce(rows);
        // the difference vector (-1, 1, 1) must appear (up to sign)
        let found = red.iter().any(|r| {
            let n = dot(r, r);
            n == 3
        });
        assert!(found, "reduced basis {red:?}");
    }

    #[test]
    fn recognizes_integers_and_quadratics() {
        let prec = 256;
        let z = HPComplex::from_f64(1728.0, 0.0, prec);
        let p = minimal_polynomial(&z, 4, &h(10_000_000), prec)
            .unwrap()
            .unwrap();
        assert_eq!(p.to_string(), "X - 1728");

        let s2 = HPComplex::from_real(Float::with_val(prec, 2).sqrt());
        let p = minimal_polynomial(&s2, 2, &h(1000), prec).unwrap().unwrap();
        assert_eq!(p.to_string(), "X^2 - 2");

        let golden = HPComplex::from_real((Float::with_val(prec, 5).sqrt() + 1u32) / 2u32);
        let p = minimal_polynomial(&golden, 3, &h(1000), prec)
            .unwrap()
            .unwrap();
        assert_eq!(p.to_string(), "X^2 - X - 1");
    }

    #[test]
    fn recognition_is_stable_under_precision_increase() {
        let z = HPComplex::from_real(Float::with_val(512, 2).sqrt());
        let p1 = minimal_polynomial(&z.with_prec(256), 4, &h(1000), 256)
            .unwrap()
            .unwrap();
        let p2 = minimal_polynomial(&z, 4, &h(1000), 512).unwrap().unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn precision_floor_enforced() {
        let z = HPComplex::from_f64(1.5, 0.0, 64);
        assert!(matches!(
            minimal_polynomial(&z, 8, &h(10), 64),
            Err(Error::PrecisionBelowFloor { .. })
        ));
    }

    #[test]
    fn rational_reconstruction_examples() {
        let prec = 256;
        let third = Float::with_val(prec, 1) / 3u32;
        let r = rational_reconstruct(&third, prec).unwrap().unwrap();
        assert_eq!(r, Rational::from((1, 3)));

        // pi has no small-denominator rational approximation at this quality;
        // the continued fraction of pi confirms no denominator <= 10^6 brings
        // the error anywhere near 2^(-prec/4)
        let pie = crate::hpcomplex::pi(prec);
        let r = rational_reconstruct_bounded(&pie, &h(1_000_000), prec).unwrap();
        assert!(r.is_none());

        // continued-fraction oracle: best denominator q <= 10^6 has error
        // around 1/q^2 >> 2^-64
        let mut x = std::f64::consts::PI;
        let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, (x as i64), 1i64);
        x = 1.0 / (x - x.floor());
        while q1 < 1_000_000 {
            let a = x.floor() as i64;
            let (p2, q2) = (a * p1 + p0, a * q1 + q0);
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
            x = 1.0 / (x - x.floor());
        }
        let best_err = (std::f64::consts::PI - p0 as f64 / q0 as f64).abs();
        assert!(best_err > 2f64.powi(-64));

        let z = Float::with_val(prec, -157464000000000i64);
        let r = rational_reconstruct(&z, prec).unwrap().unwrap();
        assert_eq!(r, Rational::from(-157464000000000i64));
    }

    #[test]
    fn evidence_trivial_and_found_cases() {
        let prec = 128;
        let zero = HPComplex::zero(prec);
        let ev = transcendence_evidence(&zero, 1, &h(10), prec).unwrap();
        let p = ev.any_found().unwrap();
        assert_eq!(p.to_string(), "X");

        // j(i sqrt 2) = 8000: the detector must find the true relation
        let prec = 512;
        let tau = crate::cmfields::qpoint(1, 0, 2).unwrap().embed(prec + 64);
        let jv = eval_j(&tau, prec).unwrap();
        let ev = transcendence_evidence(&jv, 2, &h(10_000_000_000), prec).unwrap();
        let p = ev.any_found().unwrap();
        assert_eq!(p.to_string(), "X - 8000");
        let kv = ev.to_kv();
        assert!(kv.contains("evidence.deg1.found=true"));
        assert!(kv.contains("evidence.prec=512"));
    }

    #[test]
    fn recognizes_cubic_singular_modulus() {
        // j at (1 + sqrt(-23))/2 has degree 3; its minimal polynomial must
        // agree with the interpolated class polynomial of D = -23
        let prec = 512;
        let pt = heegner_points(-23).unwrap()[0];
        let jv = eval_j(&pt.embed(prec + 64), prec).unwrap();
        let p = minimal_polynomial(&jv, 3, &Integer::from(10).pow(20), prec)
            .unwrap()
            .unwrap();
        let h = crate::cmfields::hilbert_class_poly(-23, prec).unwrap();
        assert_eq!(p, h);
    }

    #[test]
    fn chistar_is_algebraic_at_small_heegner_points() {
        // chi*(tau) algebraic for quadratic tau; for h(D) = 1 it is rational
        let prec = 512;
        for d in [-7i64, -8, -11] {
            let pt = heegner_points(d).unwrap()[0];
            let aux = eval_aux(&pt.embed(prec + 64), prec).unwrap();
            let p = minimal_polynomial(&aux.chistar, 8, &Integer::from(10).pow(20), prec)
                .unwrap()
                .unwrap_or_else(|| panic!("no relation found for D = {d}"));
            assert_eq!(p.degree(), Some(1), "D = {d}: {p}");
        }
    }
}
