//! Modular polynomials Phi_N, the derivative ratio lambda_N, and the
//! implicit second-derivative function mu_N.
//!
//! Phi_N is recovered by numeric interpolation with exact integer rounding:
//! at psi(N)+1 sample points tau_k we form prod_g (X - j(g tau_k)) over the
//! determinant-N coset representatives, read each X-coefficient as a
//! polynomial in Y = j(tau_k), and round.  Correctness is enforced by the
//! residual checks downstream, not by the construction.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::evaluator::{eval_j, eval_j_jet, GUARD_BITS};
use crate::hpcomplex::{pow2, HPComplex, MIN_PREC};
use crate::mat2::{int_to_float, Mat2Z};

/// Default desk bound on the level.
pub const DESK_LEVEL_BOUND: u32 = 20;

/// Bivariate integer polynomial, the arithmetic carrier behind Phi_N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivarIntPoly {
    coeffs: BTreeMap<(u32, u32), Integer>,
}

impl BivarIntPoly {
    pub fn new() -> Self {
        BivarIntPoly {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, i: u32, j: u32, c: Integer) {
        if c.cmp0() == std::cmp::Ordering::Equal {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), c);
        }
    }

    pub fn add_to(&mut self, i: u32, j: u32, c: Integer) {
        match self.coeffs.entry((i, j)) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().cmp0() == std::cmp::Ordering::Equal {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c.cmp0() != std::cmp::Ordering::Equal {
                    e.insert(c);
                }
            }
        }
    }

    pub fn get(&self, i: u32, j: u32) -> Integer {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Integer)> {
        self.coeffs.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree_x(&self) -> u32 {
        self.coeffs.keys().map(|(i, _)| *i).max().unwrap_or(0)
    }

    pub fn derivative_x(&self) -> BivarIntPoly {
        let mut out = BivarIntPoly::new();
        for ((i, j), c) in &self.coeffs {
            if *i > 0 {
                out.add_to(i - 1, *j, Integer::from(c * i));
            }
        }
        out
    }

    pub fn derivative_y(&self) -> BivarIntPoly {
        let mut out = BivarIntPoly::new();
        for ((i, j), c) in &self.coeffs {
            if *j > 0 {
                out.add_to(*i, j - 1, Integer::from(c * j));
            }
        }
        out
    }

    /// Horner evaluation, inner loop over Y.
    pub fn eval(&self, x: &HPComplex, y: &HPComplex) -> HPComplex {
        let p = x.prec().min(y.prec());
        // group by X-power
        let mut rows: BTreeMap<u32, Vec<(u32, &Integer)>> = BTreeMap::new();
        for ((i, j), c) in &self.coeffs {
            rows.entry(*i).or_default().push((*j, c));
        }
        let mut acc = HPComplex::zero(p);
        let mut last_i: Option<u32> = None;
        for (&i, row) in rows.iter().rev() {
            if let Some(prev) = last_i {
                acc = &acc * &x.powi(prev - i);
            }
            let mut row_val = HPComplex::zero(p);
            let mut last_j: Option<u32> = None;
            for &(j, c) in row.iter().rev() {
                if let Some(prev_j) = last_j {
                    row_val = &row_val * &y.powi(prev_j - j);
                }
                row_val = &row_val + &HPComplex::from_real(int_to_float(c, p));
                last_j = Some(j);
            }
            if let Some(j0) = last_j {
                if j0 > 0 {
                    row_val = &row_val * &y.powi(j0);
                }
            }
            acc = &acc + &row_val;
            last_i = Some(i);
        }
        if let Some(i0) = last_i {
            if i0 > 0 {
                acc = &acc * &x.powi(i0);
            }
        }
        acc
    }

    /// Cancellation majorant sum |c| |x|^i |y|^j at low precision.
    pub fn eval_majorant(&self, x_abs: &Float, y_abs: &Float) -> Float {
        let p = MIN_PREC;
        let xa = Float::with_val(p, x_abs);
        let ya = Float::with_val(p, y_abs);
        let mut acc = Float::with_val(p, 0);
        for ((i, j), c) in &self.coeffs {
            let t = Float::with_val(p, c.clone().abs())
                * xa.clone().pow(*i as i32)
                * ya.clone().pow(*j as i32);
            acc += t;
        }
        acc
    }
}

impl Default for BivarIntPoly {
    fn default() -> Self {
        Self::new()
    }
}

/// The classical modular polynomial of level N as an exact object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularPolynomial {
    level: u32,
    poly: BivarIntPoly,
}

impl ModularPolynomial {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn poly(&self) -> &BivarIntPoly {
        &self.poly
    }

    pub fn coeff(&self, i: u32, j: u32) -> Integer {
        self.poly.get(i, j)
    }

    pub fn is_symmetric(&self) -> bool {
        self.poly
            .terms()
            .all(|((i, j), c)| self.poly.get(*j, *i) == *c)
    }

    pub fn eval(&self, x: &HPComplex, y: &HPComplex) -> HPComplex {
        self.poly.eval(x, y)
    }

    /// Stored monomials with i >= j (all monomials for level 1).
    pub fn stored_terms(&self) -> Vec<(u32, u32, Integer)> {
        self.poly
            .terms()
            .filter(|((i, j), _)| self.level == 1 || i >= j)
            .map(|((i, j), c)| (*i, *j, c.clone()))
            .collect()
    }
}

/// psi(N) = N prod_{p | N} (1 + 1/p), the X-degree of Phi_N.
pub fn psi(n: u32) -> u32 {
    let mut num = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= num {
        if num.is_multiple_of(p) {
            result += result / p;
            while num.is_multiple_of(p) {
                num /= p;
            }
        }
        p += 1;
    }
    if num > 1 {
        result += result / num;
    }
    result
}

/// Primitive upper-triangular representatives (a, b; 0, d), ad = N,
/// 0 <= b < d, gcd(a, b, d) = 1.
pub fn coset_reps(n: u32) -> Vec<Mat2Z> {
    let mut reps = Vec::new();
    for a in 1..=n {
        if !n.is_multiple_of(a) {
            continue;
        }
        let d = n / a;
        for b in 0..d {
            let g = gcd3(a, b, d);
            if g == 1 {
                reps.push(Mat2Z::new(a, b, 0, d).expect("det N > 0"));
            }
        }
    }
    debug_assert_eq!(reps.len() as u32, psi(n));
    reps
}

fn gcd3(a: u32, b: u32, c: u32) -> u32 {
    fn gcd(mut a: u32, mut b: u32) -> u32 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    gcd(gcd(a, b), c)
}

/// Sample-point schedule for the interpolation; the dual acceptance run uses
/// a different shift and spacing.
#[derive(Clone, Copy, Debug)]
pub struct SampleSchedule {
    pub re: f64,
    pub im_base: f64,
    pub im_step: f64,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        SampleSchedule {
            re: 1.0 / std::f64::consts::PI,
            im_base: 1.05,
            im_step: 0.1,
        }
    }
}

/// Interpolate Phi_N at the given precision; a rounding residual >= 1/4
/// signals insufficient precision.
pub fn compute_phi(n: u32, prec: u32) -> Result<ModularPolynomial> {
    compute_phi_with(n, prec, SampleSchedule::default())
}

pub fn compute_phi_with(n: u32, prec: u32, sched: SampleSchedule) -> Result<ModularPolynomial> {
    if n == 0 || n > DESK_LEVEL_BOUND {
        return Err(Error::LevelOverBound(n, DESK_LEVEL_BOUND));
    }
    if n == 1 {
        let mut poly = BivarIntPoly::new();
        poly.set(1, 0, Integer::from(1));
        poly.set(0, 1, Integer::from(-1));
        return Ok(ModularPolynomial { level: 1, poly });
    }
    let wp = prec + GUARD_BITS;
    let reps = coset_reps(n);
    let deg = reps.len();
    let n_samples = deg + 1;

    // monic product over the cosets, one sample point per worker
    let per_sample = crate::parallel::indexed_map((0..n_samples).collect(), |&k| {
        let tau = HPComplex::from_f64(sched.re, sched.im_base + sched.im_step * k as f64, wp);
        let y = eval_j(&tau, wp)?;
        let mut prod = vec![HPComplex::one(wp)];
        for g in &reps {
            let x = eval_j(&g.apply(&tau), wp)?;
            prod = poly_mul_linear(&prod, &x);
        }
        Ok::<_, Error>((y, prod))
    });
    let mut ys: Vec<HPComplex> = Vec::with_capacity(n_samples);
    let mut coeff_rows: Vec<Vec<HPComplex>> = Vec::with_capacity(n_samples);
    for r in per_sample {
        let (y, prod) = r?;
        ys.push(y);
        coeff_rows.push(prod);
    }

    // each X-coefficient is a degree <= psi(N) polynomial in Y
    let mut poly = BivarIntPoly::new();
    poly.set(deg as u32, 0, Integer::from(1));
    let mut max_residual = 0f64;
    for i in 0..deg {
        let values: Vec<HPComplex> = coeff_rows.iter().map(|row| row[i].clone()).collect();
        let in_y = newton_interpolate(&ys, &values);
        for (j, c) in in_y.iter().enumerate() {
            let (int, resid) = round_to_integer(c);
            max_residual = max_residual.max(resid);
            if int.cmp0() != std::cmp::Ordering::Equal {
                poly.set(i as u32, j as u32, int);
            }
        }
    }
    if max_residual >= 0.25 {
        return Err(Error::RoundingResidual {
            residual: max_residual,
        });
    }
    Ok(ModularPolynomial { level: n, poly })
}

/// Compute with the default schedule, doubling precision on residual failure.
pub fn compute_phi_auto(n: u32) -> Result<ModularPolynomial> {
    let mut prec = initial_phi_prec(n);
    for _ in 0..4 {
        match compute_phi(n, prec) {
            Ok(phi) => return Ok(phi),
            Err(Error::RoundingResidual { .. }) | Err(Error::PrecisionUnattainable { .. }) => {
                prec *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    compute_phi(n, prec)
}

pub fn initial_phi_prec(n: u32) -> u32 {
    let ps = psi(n) as f64;
    let nf = n as f64;
    let height_bits = (6.0 * ps * nf.ln() + 16.0 * ps + 14.0 * nf.sqrt()) / std::f64::consts::LN_2;
    ((1.6 * height_bits) as u32 + 320).max(512)
}

pub(crate) fn poly_mul_linear(p: &[HPComplex], root: &HPComplex) -> Vec<HPComplex> {
    // p(X) * (X - root)
    let prec = root.prec();
    let mut out = vec![HPComplex::zero(prec); p.len() + 1];
    for (k, c) in p.iter().enumerate() {
        out[k + 1] = &out[k + 1] + c;
        out[k] = &out[k] - &(c * root);
    }
    out
}

/// Newton divided differences expanded to the monomial basis.
pub(crate) fn newton_interpolate(xs: &[HPComplex], ys: &[HPComplex]) -> Vec<HPComplex> {
    let n = xs.len();
    let prec = xs[0].prec();
    let mut dd: Vec<HPComplex> = ys.to_vec();
    for level in 1..n {
        for k in (level..n).rev() {
            let num = &dd[k] - &dd[k - 1];
            let den = &xs[k] - &xs[k - level];
            dd[k] = &num / &den;
        }
    }
    // expand prod (Y - x_m) incrementally
    let mut coeffs = vec![HPComplex::zero(prec); n];
    let mut basis = vec![HPComplex::one(prec)];
    for (k, d) in dd.iter().enumerate() {
        for (m, b) in basis.iter().enumerate() {
            coeffs[m] = &coeffs[m] + &(d * b);
        }
        if k + 1 < n {
            basis = poly_mul_linear(&basis, &xs[k]);
        }
    }
    coeffs
}

fn round_to_integer(z: &HPComplex) -> (Integer, f64) {
    let rounded = z.re().clone().round();
    let int = rounded.to_integer().unwrap_or_default();
    let re_err = Float::with_val(z.prec(), z.re() - &rounded).abs();
    let im_err = z.im().clone().abs();
    let resid = Float::with_val(64, re_err.max(&im_err)).to_f64();
    (int, resid)
}

/// lambda_N = dPhi/dX / dPhi/dY evaluated at (x, y); a vanishing denominator
/// is a ramification point of the modular curve and reported as such.
pub fn lambda_eval(phi: &ModularPolynomial, x: &HPComplex, y: &HPComplex) -> Result<HPComplex> {
    let prec = x.prec().min(y.prec());
    let px = phi.poly.derivative_x().eval(x, y);
    let py = phi.poly.derivative_y().eval(x, y);
    let majorant = phi
        .poly
        .derivative_y()
        .eval_majorant(&x.abs(), &y.abs())
        .max(&Float::with_val(MIN_PREC, 1));
    if py.abs() < majorant * pow2(MIN_PREC, -((prec / 2) as i64)) {
        return Err(Error::Ramification);
    }
    Ok(&px / &py)
}

/// mu_N evaluated on its 7 slots
/// (j(tau), j(g tau), j'(tau), j'(g tau), j''(tau), c, (c tau + d)),
/// assembled by implicit second differentiation of Phi_N(u, v) = 0:
/// v' = j'(g tau)/m_g, Phi_XX u'^2 + 2 Phi_XY u'v' + Phi_YY v'^2
/// + Phi_X u'' + Phi_Y v'' = 0 solved for v'', and j''(g tau) recovered via
/// d(1/m_g)/dtau = -2Nc/(c tau + d)^3.  Linear in the c slot.
#[allow(clippy::too_many_arguments)]
pub fn mu_from_slots(
    phi: &ModularPolynomial,
    u: &HPComplex,
    v: &HPComplex,
    up: &HPComplex,
    vp_img: &HPComplex,
    upp: &HPComplex,
    c_slot: &HPComplex,
    b_slot: &HPComplex,
) -> Result<HPComplex> {
    let n = phi.level as i64;
    let prec = u.prec().min(v.prec());
    let p = &phi.poly;
    let phi_x = p.derivative_x().eval(u, v);
    let phi_y = p.derivative_y().eval(u, v);
    let phi_xx = p.derivative_x().derivative_x().eval(u, v);
    let phi_xy = p.derivative_x().derivative_y().eval(u, v);
    let phi_yy = p.derivative_y().derivative_y().eval(u, v);
    let majorant = p
        .derivative_y()
        .eval_majorant(&u.abs(), &v.abs())
        .max(&Float::with_val(MIN_PREC, 1));
    if phi_y.abs() < majorant * pow2(MIN_PREC, -((prec / 2) as i64)) {
        return Err(Error::Ramification);
    }
    let b2 = b_slot.square();
    // v' on the source side: j'(g tau) / m_g = j'(g tau) N / (c tau + d)^2
    let vp = &vp_img.scale_i64(n) / &b2;
    let num = &(&(&phi_xx * &up.square()) + &(&(&phi_xy * up) * &vp).scale_i64(2))
        + &(&(&phi_yy * &vp.square()) + &(&phi_x * upp));
    let vpp = -&(&num / &phi_y);
    let m2 = &(&b2 * &b2).scale_i64(1) / &HPComplex::from_i64(n * n, 0, prec);
    let c_term = &(&(c_slot * b_slot) * vp_img).scale_i64(2) / &HPComplex::from_i64(n, 0, prec);
    Ok(&(&m2 * &vpp) + &c_term)
}

/// Predicted j''(g tau) from tau-side data and Phi_N alone; j'(g tau) enters
/// through the first-derivative law, never by direct evaluation.
pub fn mu_eval(
    phi: &ModularPolynomial,
    g: &Mat2Z,
    tau: &HPComplex,
    prec: u32,
) -> Result<HPComplex> {
    g.require_primitive()?;
    if g.det() != phi.level {
        return Err(Error::ShapeMismatch(format!(
            "matrix determinant {} does not match level {}",
            g.det(),
            phi.level
        )));
    }
    let wp = prec + GUARD_BITS;
    let t = tau.with_prec(wp);
    let jet = eval_j_jet(&t, wp)?;
    let v = eval_j(&g.apply(&t), wp)?;
    let lambda = lambda_eval(phi, &jet.j, &v)?;
    let m = g.m_g(&t);
    // j'(g tau) = -lambda(j(tau), j(g tau)) j'(tau) m_g(tau)
    let vp_img = -&(&(&lambda * &jet.jp) * &m);
    let c_slot = HPComplex::from_real(int_to_float(&g.c, wp));
    let b_slot = g.cofactor(&t);
    mu_from_slots(
        phi, &jet.j, &v, &jet.jp, &vp_img, &jet.jpp, &c_slot, &b_slot,
    )
    .map(|z| z.with_prec(prec))
}

// ---------------------------------------------------------------------------
// Disk cache
// ---------------------------------------------------------------------------

/// Serialize in the cache format: header, then `<i> <j> <coeff>` lines in
/// lexicographic order, only i >= j for N > 1.
pub fn to_cache_string(phi: &ModularPolynomial) -> String {
    let mut out = format!("PHI N {}\n", phi.level);
    for (i, j, c) in phi.stored_terms() {
        out.push_str(&format!("{i} {j} {c}\n"));
    }
    out
}

pub fn from_cache_string(s: &str) -> Result<ModularPolynomial> {
    let mut lines = s.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty cache file".into()))?;
    let mut hp = header.split_whitespace();
    if hp.next() != Some("PHI") || hp.next() != Some("N") {
        return Err(Error::Parse(format!("bad cache header `{header}`")));
    }
    let level: u32 = hp
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse("bad level in cache header".into()))?;
    let mut poly = BivarIntPoly::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let i: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad monomial line `{line}`")))?;
        let j: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad monomial line `{line}`")))?;
        let c: Integer = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad coefficient in `{line}`")))?;
        poly.set(i, j, c.clone());
        if level > 1 && i != j {
            poly.set(j, i, c);
        }
    }
    Ok(ModularPolynomial { level, poly })
}

pub fn cache_path(dir: &Path, n: u32) -> PathBuf {
    dir.join(format!("phi_{n}.txt"))
}

/// Level-keyed provider: memory, then disk, then interpolation.
pub struct PhiProvider {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<u32, Arc<ModularPolynomial>>>,
}

impl PhiProvider {
    pub fn new(dir: Option<PathBuf>) -> Self {
        PhiProvider {
            dir,
            mem: Mutex::new(HashMap::new()),
        }
    }

    pub fn in_memory() -> Self {
        Self::new(None)
    }

    pub fn get(&self, n: u32) -> Result<Arc<ModularPolynomial>> {
        if let Some(phi) = self.mem.lock().expect("phi cache poisoned").get(&n) {
            return Ok(phi.clone());
        }
        if let Some(dir) = &self.dir {
            let path = cache_path(dir, n);
            if path.exists() {
                let phi = from_cache_string(&std::fs::read_to_string(&path)?)?;
                if phi.level == n {
                    let arc = Arc::new(phi);
                    self.mem
                        .lock()
                        .expect("phi cache poisoned")
                        .insert(n, arc.clone());
                    return Ok(arc);
                }
            }
        }
        let phi = compute_phi_auto(n)?;
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::File::create(cache_path(dir, n))?;
            f.write_all(to_cache_string(&phi).as_bytes())?;
        }
        let arc = Arc::new(phi);
        self.mem
            .lock()
            .expect("phi cache poisoned")
            .insert(n, arc.clone());
        Ok(arc)
    }
}
