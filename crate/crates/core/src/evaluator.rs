//! Fundamental-domain reduction and high-precision evaluation of j, its
//! first two derivatives, and the auxiliary functions chi, f, E2*, chi*.
//!
//! Evaluation always happens at the reduced point, where |q| <= e^(-pi sqrt 3),
//! and is transported back through the transformation laws:
//!   j'(g t) = (ct+d)^2 j'(t)
//!   j''(g t) = (ct+d)^4 j''(t) + 2c (ct+d)^3 j'(t)
//!   f(g t) = (ct+d)^-2 f(t)
//!   chi(g t) = chi(t) - (6ic/pi) f(t)/(ct+d)
//!   E2*(g t) = (ct+d)^2 E2*(t)
//! with chi* assembled from the decomposition chi* = chi - 3f/(pi Im tau).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::hpcomplex::{pi, pow2, two_pi_i, HPComplex};
use crate::mat2::{int_to_float, Mat2Z};
use crate::series::{eisenstein, named_series, NamedSeries, QSeries};

/// Guard bits added to every internal computation.
pub const GUARD_BITS: u32 = 64;

/// Inputs with Im tau below 2^-16 are rejected outright.
pub const MIN_IM_LOG2: i64 = -16;

/// q = e^(2 pi i tau).
pub fn q_at(tau: &HPComplex) -> HPComplex {
    (&two_pi_i(tau.prec()) * tau).exp()
}

fn require_upper_half(tau: &HPComplex) -> Result<()> {
    if !tau.is_finite() || !(tau.im().clone().signum() == 1f64) {
        return Err(Error::NotUpperHalfPlane(tau.im().to_f64().to_string()));
    }
    if tau.im().clone() < pow2(64, MIN_IM_LOG2) {
        return Err(Error::ImaginaryPartTooSmall(tau.im().to_f64().to_string()));
    }
    Ok(())
}

/// Reduce tau into the closed fundamental domain; returns (tau0, gamma)
/// with tau = gamma tau0 and det gamma = 1.
pub fn reduce_to_f(tau: &HPComplex) -> Result<(HPComplex, Mat2Z)> {
    require_upper_half(tau)?;
    let prec = tau.prec();
    let tol = pow2(prec, -((prec / 2) as i64));
    let im = tau.im().to_f64();
    let max_steps = (10.0 * (1.0 + (1.0 / im).log2().max(0.0)) + 16.0) as u64;

    let mut p = tau.clone();
    let mut word = Mat2Z::identity();
    let one_half = Float::with_val(prec, 0.5);
    for _ in 0..max_steps {
        // recentre the real part
        let n = p.re().clone().round().to_integer().unwrap_or_default();
        if n != 0 {
            let shift = HPComplex::from_real(int_to_float(&n, prec));
            p = &p - &shift;
            word = word.mul(&Mat2Z::translation(n));
        }
        let norm = p.norm_sqr();
        let re_ok = p.re().clone().abs() <= Float::with_val(prec, &one_half + &tol);
        let norm_ok = norm >= Float::with_val(prec, 1 - tol.clone());
        if norm_ok && re_ok {
            return Ok((p, word));
        }
        if !norm_ok {
            p = -&p.recip();
            word = word.mul(&Mat2Z::new(0, 1, -1, 0).expect("det 1"));
        }
    }
    Err(Error::ReductionDidNotConverge { steps: max_steps })
}

/// Truncation order for series evaluated at reduced points.
///
/// Crude polynomial majorant sum n^7 |q|^n < 2^(-prec-8) at |q| = e^(-pi sqrt 3),
/// widened by a subexponential-growth estimate for the j-type coefficients;
/// eval reports an empirical tail estimate from the exact coefficients on top.
pub fn truncation_order(prec: u32) -> usize {
    let ln_q = -std::f64::consts::PI * 3f64.sqrt();
    let target = -((prec + 8) as f64) * std::f64::consts::LN_2;
    let mut n_poly = 8usize;
    while 7.0 * (n_poly as f64).ln() + (n_poly as f64) * ln_q > target {
        n_poly += 1;
    }
    let target2 = -((prec + 16) as f64) * std::f64::consts::LN_2;
    let mut n_sub = 8usize;
    while 4.0 * std::f64::consts::PI * (n_sub as f64).sqrt() + (n_sub as f64) * ln_q > target2 {
        n_sub += 1;
    }
    n_poly.max(n_sub) + 8
}

fn prec_tier(prec: u32) -> u32 {
    prec.div_ceil(128) * 128
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SeriesKind {
    J,
    ThetaJ,
    Theta2J,
    Chi,
    F,
    E2,
}

fn build_series(kind: SeriesKind, n_terms: usize) -> QSeries {
    match kind {
        SeriesKind::J => named_series(NamedSeries::J, n_terms).expect("n_terms >= 1"),
        SeriesKind::ThetaJ => named_series(NamedSeries::J, n_terms)
            .expect("n_terms >= 1")
            .theta(),
        SeriesKind::Theta2J => named_series(NamedSeries::J, n_terms)
            .expect("n_terms >= 1")
            .theta()
            .theta(),
        SeriesKind::Chi => named_series(NamedSeries::Chi, n_terms).expect("n_terms >= 1"),
        SeriesKind::F => named_series(NamedSeries::F, n_terms).expect("n_terms >= 1"),
        SeriesKind::E2 => eisenstein(2, n_terms).expect("n_terms >= 1"),
    }
}

/// Memoized q-expansions per (kind, truncation order); built once, then
/// shared read-only.
pub fn cached_series(kind: SeriesKind, n_terms: usize) -> Arc<QSeries> {
    static CACHE: OnceLock<Mutex<HashMap<(SeriesKind, usize), Arc<QSeries>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("series cache poisoned");
    guard
        .entry((kind, n_terms))
        .or_insert_with(|| Arc::new(build_series(kind, n_terms)))
        .clone()
}

fn series_for(kind: SeriesKind, prec: u32) -> Arc<QSeries> {
    cached_series(kind, truncation_order(prec_tier(prec)))
}

/// Horner evaluation of a Laurent window at the point q.
fn horner(s: &QSeries, q: &HPComplex) -> HPComplex {
    let p = q.prec();
    let zero = rug::Rational::new();
    let mut acc = HPComplex::zero(p);
    for c in s.coeffs().iter().rev() {
        acc = &(&acc * q) + &HPComplex::from_rationals(c, &zero, p);
    }
    let lead = s.lead_exp();
    if lead > 0 {
        acc = &acc * &q.powi(lead as u32);
    } else if lead < 0 {
        acc = &acc * &q.powi((-lead) as u32).recip();
    }
    acc
}

/// Empirical geometric tail estimate from the last stored coefficients:
/// the growth rate is read off the farthest nonzero pair within the last
/// stretch of the window, which stays honest across interior zeros.
fn tail_estimate(s: &QSeries, q_abs: &Float) -> Option<Float> {
    let coeffs = s.coeffs();
    let n = coeffs.len();
    if n < 4 {
        return None;
    }
    let p = q_abs.prec();
    let is_zero = |k: usize| coeffs[k].cmp0() == std::cmp::Ordering::Equal;
    let last = (0..n).rev().find(|&k| !is_zero(k))?;
    let back = (last.saturating_sub(8)..last).find(|&k| !is_zero(k))?;
    let m = (last - back) as u32;
    let grow = Float::with_val(p, coeffs[last].clone().abs())
        / Float::with_val(p, coeffs[back].clone().abs());
    let ratio = grow.root(m);
    let rho = Float::with_val(p, &ratio * q_abs);
    if rho >= 1 {
        return None;
    }
    let last_exp = s.lead_exp() + last as i64;
    let last_mag = Float::with_val(p, coeffs[last].clone().abs())
        * Float::with_val(p, q_abs.clone().pow(last_exp as i32));
    let denom = Float::with_val(p, 1 - rho.clone());
    Some(last_mag * rho / denom)
}

/// Sum a q-expansion at tau; fails when the stored order cannot deliver the
/// requested precision at this |q|.
pub fn eval_qseries(s: &QSeries, tau: &HPComplex, prec: u32) -> Result<HPComplex> {
    eval_qseries_with_tail(s, tau, prec).map(|(v, _)| v)
}

pub fn eval_qseries_with_tail(
    s: &QSeries,
    tau: &HPComplex,
    prec: u32,
) -> Result<(HPComplex, Float)> {
    if tau.im().clone() < Float::with_val(64, 0.1) {
        return Err(Error::ImaginaryPartTooSmall(tau.im().to_f64().to_string()));
    }
    let wp = prec + GUARD_BITS;
    let q = q_at(&tau.with_prec(wp));
    let value = horner(s, &q);
    if s.is_exact() {
        return Ok((value.with_prec(prec), Float::with_val(32, 0)));
    }
    let q_abs = q.abs();
    let tail = tail_estimate(s, &q_abs).ok_or(Error::PrecisionUnattainable {
        n_terms: s.n_terms(),
        tail_log2: 0,
    })?;
    let budget = pow2(wp, -(prec as i64)) * value.mag().max(&Float::with_val(wp, 1));
    if tail > budget {
        return Err(Error::PrecisionUnattainable {
            n_terms: s.n_terms(),
            tail_log2: tail.to_f64().log2() as i64,
        });
    }
    Ok((value.with_prec(prec), tail))
}

/// The triple J(tau) = (j, j', j'').
#[derive(Clone, Debug)]
pub struct Jet {
    pub j: HPComplex,
    pub jp: HPComplex,
    pub jpp: HPComplex,
}

/// The auxiliary values (chi, f, E2*, chi*) at a point.
#[derive(Clone, Debug)]
pub struct Aux {
    pub chi: HPComplex,
    pub f: HPComplex,
    pub e2star: HPComplex,
    pub chistar: HPComplex,
}

struct Reduced {
    t0: HPComplex,
    cofactor: HPComplex,
    c_entry: HPComplex,
    q: HPComplex,
    wp: u32,
}

fn reduce_for_eval(tau: &HPComplex, prec: u32) -> Result<Reduced> {
    require_upper_half(tau)?;
    let wp = prec + GUARD_BITS;
    let t = tau.with_prec(wp);
    let (t0, gamma) = reduce_to_f(&t)?;
    let cofactor = gamma.cofactor(&t0);
    let c_entry = HPComplex::from_real(int_to_float(&gamma.c, wp));
    let q = q_at(&t0);
    Ok(Reduced {
        t0,
        cofactor,
        c_entry,
        q,
        wp,
    })
}

/// j alone (SL2(Z)-invariant, no transport needed).
pub fn eval_j(tau: &HPComplex, prec: u32) -> Result<HPComplex> {
    let r = reduce_for_eval(tau, prec)?;
    let j = horner(&series_for(SeriesKind::J, prec), &r.q);
    Ok(j.with_prec(prec))
}

/// J(tau) = (j, j', j'') via theta-derivative series at the reduced point,
/// mapped forward through the weight-2 and quasimodular weight-4 laws.
pub fn eval_j_jet(tau: &HPComplex, prec: u32) -> Result<Jet> {
    let r = reduce_for_eval(tau, prec)?;
    let tpi = two_pi_i(r.wp);
    let j0 = horner(&series_for(SeriesKind::J, prec), &r.q);
    let jp0 = &tpi * &horner(&series_for(SeriesKind::ThetaJ, prec), &r.q);
    let jpp0 = &tpi.square() * &horner(&series_for(SeriesKind::Theta2J, prec), &r.q);
    let bc2 = r.cofactor.square();
    let bc3 = &bc2 * &r.cofactor;
    let bc4 = &bc2 * &bc2;
    let jp = &bc2 * &jp0;
    let jpp = &(&bc4 * &jpp0) + &(&(&r.c_entry.scale_i64(2) * &bc3) * &jp0);
    Ok(Jet {
        j: j0.with_prec(prec),
        jp: jp.with_prec(prec),
        jpp: jpp.with_prec(prec),
    })
}

/// (chi, f, E2*, chi*) at tau.
pub fn eval_aux(tau: &HPComplex, prec: u32) -> Result<Aux> {
    let r = reduce_for_eval(tau, prec)?;
    let wp = r.wp;
    let pie = pi(wp);
    let chi0 = horner(&series_for(SeriesKind::Chi, prec), &r.q);
    let f0 = horner(&series_for(SeriesKind::F, prec), &r.q);
    let e20 = horner(&series_for(SeriesKind::E2, prec), &r.q);

    let bc2 = r.cofactor.square();
    let f = &f0 / &bc2;
    // chi(gamma t0) = chi(t0) - (6 i c / pi) f(t0)/(c t0 + d)
    let six_over_pi = Float::with_val(wp, 6) / pie.clone();
    let anomaly = &(&f0 / &r.cofactor).mul_i().scale(&six_over_pi) * &r.c_entry;
    let chi = &chi0 - &anomaly;
    // chi* = chi - 3 f / (pi Im tau) at the original point
    let im_tau = Float::with_val(wp, tau.im());
    let three_over_piy = Float::with_val(wp, 3) / Float::with_val(wp, pie.clone() * &im_tau);
    let chistar = &chi - &f.scale(&three_over_piy);
    // E2*(t0) = E2(t0) - 3/(pi Im t0), then weight-2 transport
    let im_t0 = Float::with_val(wp, r.t0.im());
    let corr = Float::with_val(wp, 3) / Float::with_val(wp, pie * im_t0);
    let e2star0 = &e20 - &HPComplex::from_real(corr);
    let e2star = &bc2 * &e2star0;
    Ok(Aux {
        chi: chi.with_prec(prec),
        f: f.with_prec(prec),
        e2star: e2star.with_prec(prec),
        chistar: chistar.with_prec(prec),
    })
}
