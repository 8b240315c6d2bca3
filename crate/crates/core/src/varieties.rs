//! Varieties in C^{3n}, special-point images, J-closure curves, the
//! adjacency relation, and the two counterexample constructions built from
//! modular polynomials and the derivative laws.
//!
//! Coordinates: block i (0-based) of C^{3n} occupies variables
//! (3i, 3i+1, 3i+2) = (X_{i+1}, Y_{i+1}, Z_{i+1}), the (j, j', j'') slots.

use std::fmt::Write as FmtWrite;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::cmfields::QuadraticPoint;
use crate::error::{Error, Result};
use crate::evaluator::{eval_aux, eval_j_jet, GUARD_BITS};
use crate::hpcomplex::{pow2, HPComplex, MIN_PREC};
use crate::identities::p_c_eval;
use crate::mat2::Mat2Z;
use crate::modpoly::{BivarIntPoly, ModularPolynomial};

// ---------------------------------------------------------------------------
// Gaussian-rational coefficients and sparse multivariate polynomials
// ---------------------------------------------------------------------------

/// Exact complex rational a + bi.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GaussRat {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRat {
    pub fn zero() -> Self {
        GaussRat {
            re: Rational::new(),
            im: Rational::new(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRat {
            re: Rational::from(n),
            im: Rational::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.cmp0() == std::cmp::Ordering::Equal && self.im.cmp0() == std::cmp::Ordering::Equal
    }

    fn add(&self, o: &GaussRat) -> GaussRat {
        GaussRat {
            re: Rational::from(&self.re + &o.re),
            im: Rational::from(&self.im + &o.im),
        }
    }

    fn mul(&self, o: &GaussRat) -> GaussRat {
        GaussRat {
            re: Rational::from(&self.re * &o.re) - Rational::from(&self.im * &o.im),
            im: Rational::from(&self.re * &o.im) + Rational::from(&self.im * &o.re),
        }
    }

    pub fn to_complex(&self, prec: u32) -> HPComplex {
        HPComplex::from_rationals(&self.re, &self.im, prec)
    }

    fn mag_f64(&self) -> f64 {
        self.re.to_f64().abs() + self.im.to_f64().abs()
    }
}

/// Sparse polynomial in `nvars` variables over the Gaussian rationals.
#[derive(Clone, PartialEq, Debug)]
pub struct MPoly {
    nvars: usize,
    terms: std::collections::BTreeMap<Vec<u16>, GaussRat>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly {
            nvars,
            terms: Default::default(),
        }
    }

    pub fn constant(nvars: usize, c: GaussRat) -> Self {
        let mut p = MPoly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The monomial x_k.
    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0u16; nvars];
        e[k] = 1;
        let mut p = MPoly::zero(nvars);
        p.add_term(e, GaussRat::from_int(1));
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &GaussRat)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exps: Vec<u16>, c: GaussRat) {
        assert_eq!(exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(GaussRat::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            let key: Vec<Vec<u16>> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, o: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(
                e.clone(),
                GaussRat {
                    re: -c.re.clone(),
                    im: -c.im.clone(),
                },
            );
        }
        out
    }

    pub fn sub(&self, o: &MPoly) -> MPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &MPoly) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.mul(cb));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut acc = MPoly::constant(self.nvars, GaussRat::from_int(1));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, pt: &[HPComplex]) -> HPComplex {
        assert_eq!(pt.len(), self.nvars);
        let prec = pt.iter().map(|z| z.prec()).min().unwrap_or(MIN_PREC);
        let mut acc = HPComplex::zero(prec);
        for (e, c) in &self.terms {
            let mut t = c.to_complex(prec);
            for (k, &ek) in e.iter().enumerate() {
                if ek > 0 {
                    t = &t * &pt[k].powi(ek as u32);
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Exact evaluation at Gaussian-rational points.
    pub fn eval_exact(&self, pt: &[GaussRat]) -> GaussRat {
        assert_eq!(pt.len(), self.nvars);
        let mut acc = GaussRat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (k, &ek) in e.iter().enumerate() {
                for _ in 0..ek {
                    t = t.mul(&pt[k]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Cancellation majorant sum |c| prod |pt_k|^{e_k}, low precision.
    pub fn majorant(&self, pt: &[HPComplex]) -> Float {
        let mut acc = Float::with_val(MIN_PREC, 0);
        for (e, c) in &self.terms {
            let mut t = Float::with_val(MIN_PREC, c.mag_f64());
            for (k, &ek) in e.iter().enumerate() {
                if ek > 0 {
                    t *= Float::with_val(MIN_PREC, pt[k].mag()).pow(ek as u32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Embed an integer bivariate polynomial at variable positions (vx, vy).
    pub fn from_bivar(p: &BivarIntPoly, nvars: usize, vx: usize, vy: usize) -> MPoly {
        let mut out = MPoly::zero(nvars);
        for ((i, j), c) in p.terms() {
            let mut e = vec![0u16; nvars];
            e[vx] = *i as u16;
            e[vy] = *j as u16;
            out.add_term(
                e,
                GaussRat {
                    re: Rational::from(c),
                    im: Rational::new(),
                },
            );
        }
        out
    }

    /// Highest degree in variable k, used to bound root-finding.
    pub fn degree_in(&self, k: usize) -> u16 {
        self.terms.keys().map(|e| e[k]).max().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Varieties
// ---------------------------------------------------------------------------

/// Algebraic subset of C^{3n} cut out by Gaussian-rational polynomials.
/// An empty polynomial list is the whole space.  Denominators cleared
/// during construction are kept as an excluded locus.
#[derive(Clone, Debug)]
pub struct Variety {
    n_blocks: usize,
    polys: Vec<MPoly>,
    denominators: Vec<MPoly>,
}

impl Variety {
    pub fn full_space(n_blocks: usize) -> Self {
        Variety {
            n_blocks,
            polys: Vec::new(),
            denominators: Vec::new(),
        }
    }

    pub fn new(n_blocks: usize, polys: Vec<MPoly>) -> Result<Self> {
        for p in &polys {
            if p.nvars() != 3 * n_blocks {
                return Err(Error::ShapeMismatch(format!(
                    "polynomial in {} variables cannot define a variety in C^{}",
                    p.nvars(),
                    3 * n_blocks
                )));
            }
        }
        Ok(Variety {
            n_blocks,
            polys,
            denominators: Vec::new(),
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn ambient_dim(&self) -> usize {
        3 * self.n_blocks
    }

    pub fn polys(&self) -> &[MPoly] {
        &self.polys
    }

    pub fn denominators(&self) -> &[MPoly] {
        &self.denominators
    }

    /// Membership up to tolerance, with the worst normalized residual.
    pub fn membership(&self, pt: &[HPComplex], tol: &Float) -> Result<(bool, Float)> {
        if pt.len() != self.ambient_dim() {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, variety lives in C^{}",
                pt.len(),
                self.ambient_dim()
            )));
        }
        let mut worst = Float::with_val(MIN_PREC, 0);
        let mut ok = true;
        for p in &self.polys {
            let val = p.eval(pt).abs();
            let scale = Float::with_val(MIN_PREC, 1) + p.majorant(pt);
            let resid = Float::with_val(MIN_PREC, val / scale);
            if resid > worst {
                worst = resid.clone();
            }
            if resid >= *tol {
                ok = false;
            }
        }
        Ok((ok, worst))
    }
}

// ---------------------------------------------------------------------------
// Variety file format
// ---------------------------------------------------------------------------

fn rat_tokens(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rat(tok: &str) -> Result<Rational> {
    let mut it = tok.splitn(2, '/');
    let n: Integer = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad rational `{tok}`")))?;
    let d: Integer = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad rational `{tok}`")))?;
    if d.cmp0() == std::cmp::Ordering::Equal {
        return Err(Error::Parse(format!("zero denominator in `{tok}`")));
    }
    Ok(Rational::from((n, d)))
}

/// `VAR n <n>` then one polynomial per line; each monomial contributes
/// 3n exponent tokens, then re and im as `num/den`.
pub fn variety_to_string(v: &Variety) -> String {
    let mut out = format!("VAR n {}\n", v.n_blocks);
    for p in &v.polys {
        let mut line = String::new();
        for (e, c) in p.terms() {
            for x in e {
                write!(line, "{x} ").unwrap();
            }
            write!(line, "{} {} ", rat_tokens(&c.re), rat_tokens(&c.im)).unwrap();
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn variety_from_string(s: &str) -> Result<Variety> {
    let mut lines = s.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty variety file".into()))?;
    let mut hp = header.split_whitespace();
    if hp.next() != Some("VAR") || hp.next() != Some("n") {
        return Err(Error::Parse(format!("bad variety header `{header}`")));
    }
    let n: usize = hp
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse("bad block count".into()))?;
    let nvars = 3 * n;
    let mut polys = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !toks.len().is_multiple_of(nvars + 2) {
            return Err(Error::Parse(format!(
                "monomial line length {} is not a multiple of {}",
                toks.len(),
                nvars + 2
            )));
        }
        let mut p = MPoly::zero(nvars);
        for chunk in toks.chunks(nvars + 2) {
            let mut e = Vec::with_capacity(nvars);
            for t in &chunk[..nvars] {
                e.push(
                    t.parse::<u16>()
                        .map_err(|_| Error::Parse(format!("bad exponent `{t}`")))?,
                );
            }
            let re = parse_rat(chunk[nvars])?;
            let im = parse_rat(chunk[nvars + 1])?;
            p.add_term(e, GaussRat { re, im });
        }
        polys.push(p);
    }
    Variety::new(n, polys)
}

// ---------------------------------------------------------------------------
// Special images and J-closure curves
// ---------------------------------------------------------------------------

/// Concatenated J-jets of a quadratic tuple: a point of C^{3n}.
pub fn special_image(points: &[QuadraticPoint], prec: u32) -> Result<Vec<HPComplex>> {
    let wp = prec + GUARD_BITS;
    let mut out = Vec::with_capacity(3 * points.len());
    for pt in points {
        let jet = eval_j_jet(&pt.embed(wp), wp)?;
        out.push(jet.j.with_prec(prec));
        out.push(jet.jp.with_prec(prec));
        out.push(jet.jpp.with_prec(prec));
    }
    Ok(out)
}

/// Jets of an arbitrary upper half-plane tuple, same layout.
pub fn image_of_tuple(points: &[HPComplex], prec: u32) -> Result<Vec<HPComplex>> {
    let wp = prec + GUARD_BITS;
    let mut out = Vec::with_capacity(3 * points.len());
    for t in points {
        let jet = eval_j_jet(&t.with_prec(wp), wp)?;
        out.push(jet.j.with_prec(prec));
        out.push(jet.jp.with_prec(prec));
        out.push(jet.jpp.with_prec(prec));
    }
    Ok(out)
}

/// The curve w -> (j(tau), w, p_{Im tau}(j(tau), chi*(tau), w)): the
/// Q-bar-Zariski closure of J at a single quadratic point.
#[derive(Clone, Debug)]
pub struct JCloseCurve {
    pub j: HPComplex,
    pub chistar: HPComplex,
    pub c: Float,
}

impl JCloseCurve {
    /// Build at a point of the upper half-plane (quadratic or a translate).
    pub fn at(tau: &HPComplex, prec: u32) -> Result<Self> {
        let wp = prec + GUARD_BITS;
        let t = tau.with_prec(wp);
        let jet = eval_j_jet(&t, wp)?;
        let aux = eval_aux(&t, wp)?;
        Ok(JCloseCurve {
            j: jet.j.with_prec(prec),
            chistar: aux.chistar.with_prec(prec),
            c: Float::with_val(prec, t.im()),
        })
    }

    pub fn for_point(pt: &QuadraticPoint, prec: u32) -> Result<Self> {
        Self::at(&pt.embed(prec + GUARD_BITS), prec)
    }

    pub fn eval(&self, w: &HPComplex) -> Result<[HPComplex; 3]> {
        let third = p_c_eval(&self.c, &self.j, &self.chistar, w)?;
        Ok([self.j.clone(), w.clone(), third])
    }

    /// Curves through SL2(Z)-translates differ exactly when the imaginary
    /// parts differ; test at a single w.
    pub fn distinct_from(&self, other: &JCloseCurve, w: &HPComplex, tol: &Float) -> Result<bool> {
        let a = self.eval(w)?;
        let b = other.eval(w)?;
        let d = (&a[2] - &b[2]).abs();
        Ok(d > *tol)
    }
}

// ---------------------------------------------------------------------------
// Basic linear varieties and adjacency
// ---------------------------------------------------------------------------

/// Constant coordinate of a linear variety.
#[derive(Clone, Debug)]
pub enum ConstantCoord {
    Quadratic(QuadraticPoint),
    Numeric(HPComplex),
}

/// One coordinate: either g applied to a block leader, or a constant.
#[derive(Clone, Debug)]
pub enum CoordSpec {
    Free { block: usize, g: Mat2Z },
    Constant(ConstantCoord),
}

/// Linear variety in the normalized shape: every coordinate is a matrix
/// applied to one of the block leaders, or a constant point.
#[derive(Clone, Debug)]
pub struct BasicLinearVariety {
    pub coords: Vec<CoordSpec>,
}

impl BasicLinearVariety {
    pub fn n_coords(&self) -> usize {
        self.coords.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.coords
            .iter()
            .filter_map(|c| match c {
                CoordSpec::Free { block, .. } => Some(*block + 1),
                CoordSpec::Constant(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Basic means no constant coordinates.
    pub fn is_basic(&self) -> bool {
        self.coords
            .iter()
            .all(|c| matches!(c, CoordSpec::Free { .. }))
    }

    /// Replace the matrix of coordinate k by gamma * g; the adjacency tuple
    /// is unchanged under this for det-1 gamma.
    pub fn left_multiplied(&self, k: usize, gamma: &Mat2Z) -> Result<BasicLinearVariety> {
        let mut out = self.clone();
        match &mut out.coords[k] {
            CoordSpec::Free { g, .. } => {
                *g = gamma.mul(g);
                Ok(out)
            }
            CoordSpec::Constant(_) => {
                Err(Error::ShapeMismatch(format!("coordinate {k} is constant")))
            }
        }
    }
}

/// Twist data for one free coordinate of an adjacency witness.
#[derive(Clone, Debug)]
pub struct Twist {
    pub z: HPComplex,
    pub c: Float,
}

/// Witness for `B adjacent to V`: a twist per free coordinate and a value
/// triple per constant coordinate (J(sigma) for translates).
#[derive(Clone, Debug)]
pub struct AdjacencyWitness {
    pub twists: Vec<Option<Twist>>,
    pub constants: Vec<Option<[HPComplex; 3]>>,
}

impl AdjacencyWitness {
    /// z = 1 and c = 1 on every free coordinate; constants from J(sigma)
    /// for quadratic constant coordinates.
    pub fn unit(b: &BasicLinearVariety, prec: u32) -> Result<Self> {
        let mut twists = Vec::with_capacity(b.coords.len());
        let mut constants = Vec::with_capacity(b.coords.len());
        for spec in &b.coords {
            match spec {
                CoordSpec::Free { .. } => {
                    twists.push(Some(Twist {
                        z: HPComplex::one(prec),
                        c: Float::with_val(prec, 1),
                    }));
                    constants.push(None);
                }
                CoordSpec::Constant(ConstantCoord::Quadratic(q)) => {
                    let jet = eval_j_jet(&q.embed(prec + GUARD_BITS), prec)?;
                    twists.push(None);
                    constants.push(Some([jet.j, jet.jp, jet.jpp]));
                }
                CoordSpec::Constant(ConstantCoord::Numeric(t)) => {
                    let jet = eval_j_jet(&t.with_prec(prec + GUARD_BITS), prec)?;
                    twists.push(None);
                    constants.push(Some([jet.j, jet.jp, jet.jpp]));
                }
            }
        }
        Ok(AdjacencyWitness { twists, constants })
    }

    fn validate(&self, b: &BasicLinearVariety) -> Result<()> {
        if self.twists.len() != b.coords.len() || self.constants.len() != b.coords.len() {
            return Err(Error::ShapeMismatch(
                "witness length does not match the variety".into(),
            ));
        }
        for (k, spec) in b.coords.iter().enumerate() {
            match spec {
                CoordSpec::Free { .. } => {
                    let t = self.twists[k].as_ref().ok_or_else(|| {
                        Error::ShapeMismatch(format!("missing twist for free coordinate {k}"))
                    })?;
                    if !(t.c.clone().signum() == 1f64) {
                        return Err(Error::ShapeMismatch(format!(
                            "witness c must be positive at coordinate {k}"
                        )));
                    }
                }
                CoordSpec::Constant(_) => {
                    if self.constants[k].is_none() {
                        return Err(Error::ShapeMismatch(format!(
                            "missing value triple for constant coordinate {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sampling box for block leaders: inside the cusp-free part of the domain.
pub const LEADER_BOX_RE: (f64, f64) = (-0.5, 0.5);
pub const LEADER_BOX_IM: (f64, f64) = (1.0, 2.0);

fn sample_leaders(rng: &mut ChaCha12Rng, n_blocks: usize, prec: u32) -> Vec<HPComplex> {
    (0..n_blocks)
        .map(|_| {
            let re = rng.gen_range(LEADER_BOX_RE.0..LEADER_BOX_RE.1);
            let im = rng.gen_range(LEADER_BOX_IM.0..LEADER_BOX_IM.1);
            HPComplex::from_f64(re, im, prec)
        })
        .collect()
}

/// Assemble the adjacency tuple of B at given leader values.
pub fn adjacency_tuple(
    b: &BasicLinearVariety,
    wit: &AdjacencyWitness,
    leaders: &[HPComplex],
    prec: u32,
) -> Result<Vec<HPComplex>> {
    let wp = prec + GUARD_BITS;
    let mut out = Vec::with_capacity(3 * b.coords.len());
    for (k, spec) in b.coords.iter().enumerate() {
        match spec {
            CoordSpec::Free { block, g } => {
                let tau = leaders
                    .get(*block)
                    .ok_or_else(|| Error::ShapeMismatch(format!("missing leader {block}")))?
                    .with_prec(wp);
                let img = g.apply(&tau);
                let jet = eval_j_jet(&img, wp)?;
                let aux = eval_aux(&img, wp)?;
                let twist = wit.twists[k].as_ref().ok_or_else(|| {
                    Error::ShapeMismatch(format!("missing twist for free coordinate {k}"))
                })?;
                let m = g.m_g(&tau);
                let y_slot = &(&jet.jp * &twist.z.with_prec(wp)) / &m;
                let c = Float::with_val(wp, &twist.c);
                let z_slot = p_c_eval(&c, &jet.j, &aux.chistar, &y_slot)?;
                out.push(jet.j.with_prec(prec));
                out.push(y_slot.with_prec(prec));
                out.push(z_slot.with_prec(prec));
            }
            CoordSpec::Constant(_) => {
                let triple = wit.constants[k].as_ref().ok_or_else(|| {
                    Error::ShapeMismatch(format!("missing triple for constant coordinate {k}"))
                })?;
                out.extend(triple.iter().map(|z| z.with_prec(prec)));
            }
        }
    }
    Ok(out)
}

/// Outcome of an adjacency verification run.
#[derive(Clone, Debug)]
pub struct AdjacencyOutcome {
    pub ok: bool,
    pub samples: usize,
    pub max_residual: Float,
}

/// Verify `B adjacent to V via wit` on seeded random block-leader samples.
pub fn adjacency_verify(
    v: &Variety,
    b: &BasicLinearVariety,
    wit: &AdjacencyWitness,
    n_samples: usize,
    seed: u64,
    prec: u32,
) -> Result<AdjacencyOutcome> {
    wit.validate(b)?;
    if b.n_coords() != v.n_blocks() {
        return Err(Error::ShapeMismatch(format!(
            "variety in C^{} cannot receive a {}-coordinate tuple",
            v.ambient_dim(),
            b.n_coords()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tol = pow2(prec, -((prec / 2) as i64));
    let n_blocks = b.n_blocks();
    let mut ok = true;
    let mut worst = Float::with_val(MIN_PREC, 0);
    for _ in 0..n_samples {
        let leaders = sample_leaders(&mut rng, n_blocks, prec + GUARD_BITS);
        let tuple = adjacency_tuple(b, wit, &leaders, prec)?;
        let (m_ok, resid) = v.membership(&tuple, &tol)?;
        if resid > worst {
            worst = resid;
        }
        ok &= m_ok;
    }
    Ok(AdjacencyOutcome {
        ok,
        samples: n_samples,
        max_residual: worst,
    })
}

/// Per-sample polynomial solve for a single unknown witness twist z at
/// coordinate `unknown`: returns the z-values consistent across all samples
/// and all defining polynomials.
pub fn solve_single_z(
    v: &Variety,
    b: &BasicLinearVariety,
    wit: &AdjacencyWitness,
    unknown: usize,
    n_samples: usize,
    seed: u64,
    prec: u32,
) -> Result<Vec<HPComplex>> {
    wit.validate(b)?;
    if !matches!(b.coords.get(unknown), Some(CoordSpec::Free { .. })) {
        return Err(Error::ShapeMismatch(format!(
            "coordinate {unknown} is not free"
        )));
    }
    let wp = prec + GUARD_BITS;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n_blocks = b.n_blocks();
    let tol = pow2(prec, -((prec / 3) as i64));

    // degree of each defining polynomial in z: deg_Y + 2 deg_Z at the slot
    let y_var = 3 * unknown + 1;
    let z_var = 3 * unknown + 2;

    let mut candidates: Option<Vec<HPComplex>> = None;
    for _ in 0..n_samples {
        let leaders = sample_leaders(&mut rng, n_blocks, wp);
        for poly in v.polys() {
            let deg = poly.degree_in(y_var) as usize + 2 * poly.degree_in(z_var) as usize;
            if deg == 0 {
                continue;
            }
            // evaluate the composed function at deg+1 nodes and interpolate
            let mut nodes = Vec::with_capacity(deg + 1);
            let mut vals = Vec::with_capacity(deg + 1);
            for t in 0..=deg {
                let zt = HPComplex::from_f64(1.0 + 0.25 * t as f64, 0.125 * t as f64, wp);
                let mut w = wit.clone();
                w.twists[unknown] = Some(Twist {
                    z: zt.clone(),
                    c: wit.twists[unknown].as_ref().unwrap().c.clone(),
                });
                let tuple = adjacency_tuple(b, &w, &leaders, prec)?;
                nodes.push(zt);
                vals.push(poly.eval(&tuple));
            }
            let coeffs = crate::modpoly::newton_interpolate(&nodes, &vals);
            let roots = polynomial_roots(&coeffs, wp)?;
            candidates = Some(match candidates {
                None => roots,
                Some(prev) => prev
                    .into_iter()
                    .filter(|c| roots.iter().any(|r| (c - r).abs() < tol))
                    .collect(),
            });
            if candidates.as_ref().is_some_and(|c| c.is_empty()) {
                return Ok(Vec::new());
            }
        }
    }
    Ok(candidates.unwrap_or_default())
}

/// Durand-Kerner root finder on dense complex coefficients (low to high).
fn polynomial_roots(coeffs: &[HPComplex], prec: u32) -> Result<Vec<HPComplex>> {
    let mut cs: Vec<HPComplex> = coeffs.to_vec();
    // trim interpolation noise in the leading coefficients, relative to the
    // coefficient scale
    let scale = cs
        .iter()
        .map(|c| c.abs())
        .fold(Float::with_val(prec, 1), |a, b| a.max(&b));
    let tiny = scale * pow2(prec, -((prec / 2) as i64));
    while cs.last().is_some_and(|c| c.abs() < tiny) {
        cs.pop();
    }
    if cs.len() <= 1 {
        return Ok(Vec::new());
    }
    let deg = cs.len() - 1;
    let lead = cs.last().unwrap().clone();
    let monic: Vec<HPComplex> = cs.iter().map(|c| c / &lead).collect();
    let eval = |x: &HPComplex| {
        let mut acc = HPComplex::zero(prec);
        for c in monic.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    };
    let seed = HPComplex::from_f64(0.4, 0.9, prec);
    let mut roots: Vec<HPComplex> = (0..deg).map(|k| seed.powi(k as u32 + 1)).collect();
    for _ in 0..200 {
        let mut moved = Float::with_val(prec, 0);
        for i in 0..deg {
            let mut den = HPComplex::one(prec);
            for j in 0..deg {
                if i != j {
                    den = &den * &(&roots[i] - &roots[j]);
                }
            }
            if den.is_zero() {
                den = HPComplex::from_f64(1e-20, 0.0, prec);
            }
            let delta = &eval(&roots[i]) / &den;
            let step = delta.abs();
            if step > moved {
                moved = step;
            }
            roots[i] = &roots[i] - &delta;
        }
        if moved < pow2(prec, -((prec as i64 * 2) / 3)) {
            break;
        }
    }
    Ok(roots)
}

// ---------------------------------------------------------------------------
// Example 1: the m_g-relation counterexample family
// ---------------------------------------------------------------------------

/// V in C^12: Phi_M(X1, X2) = 0, Phi_N(X3, X4) = 0, and W at the pair
/// (-Y2/(Y1 lambda_M(X1,X2)), -Y4/(Y3 lambda_N(X3,X4))) cleared to
/// polynomial conditions; the cleared denominators are recorded.
pub fn example1_build(
    phi_m: &ModularPolynomial,
    phi_n: &ModularPolynomial,
    w: &MPoly,
) -> Result<Variety> {
    if w.nvars() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "W must live in C^2, got {} variables",
            w.nvars()
        )));
    }
    let nv = 12usize;
    let mut polys = Vec::new();
    polys.push(MPoly::from_bivar(phi_m.poly(), nv, 0, 3));
    polys.push(MPoly::from_bivar(phi_n.poly(), nv, 6, 9));

    // x = -Y2 Py_M / (Y1 Px_M), y = -Y4 Py_N / (Y3 Px_N)
    let y1 = MPoly::var(nv, 1);
    let y2 = MPoly::var(nv, 4);
    let y3 = MPoly::var(nv, 7);
    let y4 = MPoly::var(nv, 10);
    let px_m = MPoly::from_bivar(&phi_m.poly().derivative_x(), nv, 0, 3);
    let py_m = MPoly::from_bivar(&phi_m.poly().derivative_y(), nv, 0, 3);
    let px_n = MPoly::from_bivar(&phi_n.poly().derivative_x(), nv, 6, 9);
    let py_n = MPoly::from_bivar(&phi_n.poly().derivative_y(), nv, 6, 9);
    let x_num = y2.mul(&py_m).neg();
    let x_den = y1.mul(&px_m);
    let y_num = y4.mul(&py_n).neg();
    let y_den = y3.mul(&px_n);

    let dx = w.degree_in(0) as u32;
    let dy = w.degree_in(1) as u32;
    let mut cleared = MPoly::zero(nv);
    for (e, c) in w.terms() {
        let (a, b2) = (e[0] as u32, e[1] as u32);
        let term = MPoly::constant(nv, c.clone())
            .mul(&x_num.pow(a))
            .mul(&x_den.pow(dx - a))
            .mul(&y_num.pow(b2))
            .mul(&y_den.pow(dy - b2));
        cleared = cleared.add(&term);
    }
    polys.push(cleared);

    let mut v = Variety::new(4, polys)?;
    v.denominators = vec![x_den, y_den];
    Ok(v)
}

/// The basic H-special variety {(tau1, g tau1, tau2, h tau2)} containing the
/// Example-1 special points.
pub fn example1_container(g: &Mat2Z, h: &Mat2Z) -> BasicLinearVariety {
    BasicLinearVariety {
        coords: vec![
            CoordSpec::Free {
                block: 0,
                g: Mat2Z::identity(),
            },
            CoordSpec::Free {
                block: 0,
                g: g.clone(),
            },
            CoordSpec::Free {
                block: 1,
                g: Mat2Z::identity(),
            },
            CoordSpec::Free {
                block: 1,
                g: h.clone(),
            },
        ],
    }
}

/// Check one candidate special configuration (tau, g tau, sigma, h sigma):
/// the exact m-condition (m_g(tau), m_h(sigma)) in W against the numeric
/// membership of its J-image in the built variety; the two must agree.
///
/// On the excluded denominator locus (j' vanishing at a coordinate, which
/// happens exactly on the orbits of i and rho) the cleared polynomials
/// vanish identically and the numeric route says nothing; there the exact
/// route alone decides, or the locus is reported when no exact route exists.
pub fn example1_special_check(
    phi_m: &ModularPolynomial,
    phi_n: &ModularPolynomial,
    w: &MPoly,
    g: &Mat2Z,
    h: &Mat2Z,
    tau: &QuadraticPoint,
    sigma: &QuadraticPoint,
    prec: u32,
) -> Result<bool> {
    let v = example1_build(phi_m, phi_n, w)?;
    let wp = prec + GUARD_BITS;

    // numeric route: membership of the J-image, meaningful off the
    // denominator locus only
    let t = tau.embed(wp);
    let s = sigma.embed(wp);
    let coords = [t.clone(), g.apply(&t), s.clone(), h.apply(&s)];
    let image = image_of_tuple(&coords, prec)?;
    let tol = pow2(prec, -((prec / 2) as i64));
    let on_denominator_locus = v.denominators().iter().any(|den| {
        let val = den.eval(&image).abs();
        let scale = Float::with_val(MIN_PREC, 1) + den.majorant(&image);
        val < scale * Float::with_val(MIN_PREC, &tol)
    });
    let numeric_ok = if on_denominator_locus {
        None
    } else {
        Some(v.membership(&image, &tol)?.0)
    };

    // exact route when the m-values are rational (upper-triangular g, h)
    if g.is_upper_triangular() && h.is_upper_triangular() {
        let m_of = |m: &Mat2Z| GaussRat {
            re: Rational::from((m.d.clone() * &m.d, m.det())),
            im: Rational::new(),
        };
        let exact = w.eval_exact(&[m_of(g), m_of(h)]);
        let exact_ok = exact.is_zero();
        if let Some(n_ok) = numeric_ok {
            if exact_ok != n_ok {
                return Err(Error::InternalInconsistency(format!(
                    "m-condition ({}) disagrees with numeric membership ({}) for g={g}, h={h}",
                    exact_ok, n_ok
                )));
            }
        }
        return Ok(exact_ok);
    }
    numeric_ok.ok_or(Error::PoleProximity)
}

// ---------------------------------------------------------------------------
// Example 2: the c^2-relation construction
// ---------------------------------------------------------------------------

/// q(y1, y2, z1, z2) = (z2 - z1 (y2/y1)^2)^2 / (4 (y2/y1)^3 y1^2); for
/// gamma in SL2(Z) it returns C^2 from the jets at sigma and gamma sigma.
pub fn example2_q(
    jp_s: &HPComplex,
    jp_gs: &HPComplex,
    jpp_s: &HPComplex,
    jpp_gs: &HPComplex,
) -> HPComplex {
    let ratio = jp_gs / jp_s;
    let num = (jpp_gs - &(jpp_s * &ratio.square())).square();
    let den = &(&ratio.powi(3) * &jp_s.square()).scale_i64(4);
    &num / den
}

/// Verify an Example-2 candidate (tau, g, gamma) against sigma and W:
/// q(j'(sigma), j'(gamma sigma), j''(sigma), j''(gamma sigma)) must equal
/// C^2 (C the lower-left entry of gamma), and (m_g(tau), C^2) must lie in W.
pub fn example2_check(
    sigma: &QuadraticPoint,
    w: &MPoly,
    tau: &QuadraticPoint,
    g: &Mat2Z,
    gamma: &Mat2Z,
    prec: u32,
) -> Result<bool> {
    if w.nvars() != 2 {
        return Err(Error::ShapeMismatch("W must live in C^2".into()));
    }
    if !gamma.is_unimodular() {
        return Err(Error::ShapeMismatch(format!(
            "gamma must have det 1, got {}",
            gamma.det()
        )));
    }
    g.require_primitive()?;
    let wp = prec + GUARD_BITS;
    let s = sigma.embed(wp);
    let jet_s = eval_j_jet(&s, wp)?;
    // sigma on the orbits of i or rho makes j'(sigma) vanish: a pole of q
    let scale = jet_s.j.abs().max(&Float::with_val(wp, 1));
    if jet_s.jp.abs() < scale * pow2(wp, -((prec / 2) as i64)) {
        return Err(Error::PoleProximity);
    }
    let jet_gs = eval_j_jet(&gamma.apply(&s), wp)?;
    let q_val = example2_q(&jet_s.jp, &jet_gs.jp, &jet_s.jpp, &jet_gs.jpp);

    let c_int = gamma.c.to_i64().ok_or_else(|| {
        Error::ShapeMismatch(format!(
            "matrix entry {} exceeds the supported range",
            gamma.c
        ))
    })?;
    let c_sq = HPComplex::from_i64(c_int * c_int, 0, wp);
    let tol = pow2(prec, -((prec / 2) as i64));
    let q_ok = (&q_val - &c_sq).abs() < c_sq.abs().max(&Float::with_val(wp, 1)) * tol.clone();

    let t = tau.embed(wp);
    let m_slot = g.m_g(&t);
    let val = w.eval(&[m_slot, c_sq.clone()]);
    let maj = w.majorant(&[g.m_g(&t), c_sq]);
    let w_ok = val.abs() < (Float::with_val(MIN_PREC, 1) + maj) * tol;
    Ok(q_ok && w_ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmfields::qpoint;
    use crate::modpoly::{compute_phi, PhiProvider};

    fn w_x_minus_y() -> MPoly {
        // x - y
        let x = MPoly::var(2, 0);
        let y = MPoly::var(2, 1);
        x.sub(&y)
    }

    #[test]
    fn membership_basics() {
        let full = Variety::full_space(1);
        let prec = 128;
        let pt = vec![
            HPComplex::from_f64(1.0, 0.0, prec),
            HPComplex::from_f64(2.0, 0.0, prec),
            HPComplex::from_f64(3.0, 0.0, prec),
        ];
        let tol = pow2(prec, -64);
        assert!(full.membership(&pt, &tol).unwrap().0);

        // X1 = 1728 versus j(i) and j(rho)
        let x1 = MPoly::var(3, 0);
        let c1728 = MPoly::constant(3, GaussRat::from_int(1728));
        let v = Variety::new(1, vec![x1.sub(&c1728)]).unwrap();
        let img_i = special_image(&[qpoint(1, 0, 1).unwrap()], prec).unwrap();
        assert!(v.membership(&img_i, &tol).unwrap().0);
        let img_rho = special_image(&[qpoint(1, 1, 1).unwrap()], prec).unwrap();
        assert!(!v.membership(&img_rho, &tol).unwrap().0);

        assert!(v.membership(&img_i[..2].to_vec(), &tol).is_err());
    }

    #[test]
    fn special_image_shape() {
        let prec = 128;
        let i = qpoint(1, 0, 1).unwrap();
        let img = special_image(&[i, i], prec).unwrap();
        assert_eq!(img.len(), 6);
        assert!((&img[0] - &img[3]).abs() < pow2(64, -100));
        let rho = qpoint(1, 1, 1).unwrap();
        let img = special_image(&[rho], prec).unwrap();
        assert!(img[0].abs() < pow2(64, -50));
    }

    #[test]
    fn variety_file_roundtrip() {
        let x = MPoly::var(6, 0);
        let mut p = x.pow(2);
        p.add_term(
            vec![0, 1, 0, 0, 0, 2],
            GaussRat {
                re: Rational::from((-3, 7)),
                im: Rational::from((1, 2)),
            },
        );
        let v = Variety::new(2, vec![p]).unwrap();
        let s = variety_to_string(&v);
        let back = variety_from_string(&s).unwrap();
        assert_eq!(s, variety_to_string(&back));
        assert_eq!(v.polys()[0], back.polys()[0]);
        assert!(variety_from_string("VAR n").is_err());
        assert!(variety_from_string("VAR n 1\n1 2").is_err());
    }

    #[test]
    fn jclose_curves() {
        let prec = 192;
        let pt = qpoint(1, 0, 5).unwrap(); // i sqrt 5
        let curve = JCloseCurve::for_point(&pt, prec).unwrap();

        // w = j'(tau) reproduces the third slot of J(tau) (the Masser point)
        let jet = eval_j_jet(&pt.embed(prec + GUARD_BITS), prec).unwrap();
        let at = curve.eval(&jet.jp).unwrap();
        let resid = (&at[2] - &jet.jpp).abs() / jet.jpp.abs();
        assert!(resid < pow2(64, -100));

        // w = 0 sends the third slot to 0
        let at = curve.eval(&HPComplex::zero(prec)).unwrap();
        assert!(at[2].abs().to_f64() == 0.0);

        // the curve at S tau differs from the curve at tau at w = 1
        let s_img = Mat2Z::inversion().apply(&pt.embed(prec + GUARD_BITS));
        let curve_s = JCloseCurve::at(&s_img, prec).unwrap();
        let tol = pow2(prec, -20);
        assert!(curve
            .distinct_from(&curve_s, &HPComplex::one(prec), &tol)
            .unwrap());
    }

    #[test]
    fn jclose_translates_pass_through_their_jets() {
        // the curve built at gamma tau contains J(gamma tau) at w = j'(gamma tau),
        // while all the curves share the same first slot j(tau)
        let prec = 192;
        let pt = qpoint(1, 0, 7).unwrap();
        let tau = pt.embed(prec + GUARD_BITS);
        let base_j = eval_j_jet(&tau, prec).unwrap().j;
        for gamma in [
            Mat2Z::identity(),
            Mat2Z::inversion(),
            Mat2Z::new(1, 0, 2, 1).unwrap(),
        ] {
            let img = gamma.apply(&tau);
            let jet = eval_j_jet(&img, prec).unwrap();
            let curve = JCloseCurve::at(&img, prec).unwrap();
            let at = curve.eval(&jet.jp).unwrap();
            assert!((&at[0] - &base_j).abs() < pow2(64, -100) * base_j.abs());
            let resid = (&at[2] - &jet.jpp).abs() / jet.jpp.abs();
            assert!(
                resid < pow2(64, -100),
                "gamma {gamma:?}: {:e}",
                resid.to_f64()
            );
        }
    }

    #[test]
    fn witness_shape_is_validated() {
        let prec = 128;
        let b = BasicLinearVariety {
            coords: vec![CoordSpec::Free {
                block: 0,
                g: Mat2Z::identity(),
            }],
        };
        let mut wit = AdjacencyWitness::unit(&b, prec).unwrap();
        wit.twists[0] = Some(Twist {
            z: HPComplex::one(prec),
            c: Float::with_val(prec, -1),
        });
        let full = Variety::full_space(1);
        assert!(matches!(
            adjacency_verify(&full, &b, &wit, 1, 1, prec),
            Err(Error::ShapeMismatch(_))
        ));
        wit.twists[0] = None;
        assert!(adjacency_verify(&full, &b, &wit, 1, 1, prec).is_err());
    }

    #[test]
    fn adjacency_full_space_and_failing_variety() {
        let prec = 160;
        let b = BasicLinearVariety {
            coords: vec![CoordSpec::Free {
                block: 0,
                g: Mat2Z::identity(),
            }],
        };
        let wit = AdjacencyWitness::unit(&b, prec).unwrap();
        let full = Variety::full_space(1);
        let out = adjacency_verify(&full, &b, &wit, 4, 9, prec).unwrap();
        assert!(out.ok);

        // Y1 = 0 fails since j' never vanishes at the sampled points
        let v = Variety::new(1, vec![MPoly::var(3, 1)]).unwrap();
        let out = adjacency_verify(&v, &b, &wit, 4, 9, prec).unwrap();
        assert!(!out.ok);
    }

    #[test]
    fn example1_level_one_reduces_to_diagonal() {
        let phi1 = compute_phi(1, 64).unwrap();
        let v = example1_build(&phi1, &phi1, &w_x_minus_y()).unwrap();
        // Phi_1 conditions X1 = X2 and X3 = X4 are present
        let prec = 160;
        let tau = qpoint(1, 0, 3).unwrap();
        let sigma = qpoint(1, 1, 2).unwrap();
        // identity matrices: (Y2/Y1, Y4/Y3) = (1, 1) in W = {x = y}
        let ok = example1_special_check(
            &phi1,
            &phi1,
            &w_x_minus_y(),
            &Mat2Z::identity(),
            &Mat2Z::identity(),
            &tau,
            &sigma,
            prec,
        )
        .unwrap();
        assert!(ok);
        assert_eq!(v.denominators().len(), 2);
    }

    #[test]
    fn example1_m_condition() {
        let provider = PhiProvider::in_memory();
        let phi2 = provider.get(2).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();
        // m_g = 1/2 on both slots: (1/2, 1/2) in W = {x = y}
        let tau = qpoint(1, 0, 3).unwrap(); // Q(sqrt -3)... distinct fields
        let sigma = qpoint(1, 0, 5).unwrap();
        let ok = example1_special_check(&phi2, &phi2, &w_x_minus_y(), &g, &g, &tau, &sigma, 192)
            .unwrap();
        assert!(ok);

        // W = {x = y + 1} excludes (1/2, 1/2)
        let shifted = w_x_minus_y().sub(&MPoly::constant(2, GaussRat::from_int(1)));
        let ok = example1_special_check(&phi2, &phi2, &shifted, &g, &g, &tau, &sigma, 192).unwrap();
        assert!(!ok);
    }

    #[test]
    fn example1_on_the_denominator_locus() {
        // tau = i puts j'(tau) = 0 and (j(i), j(2i)) at a critical point of
        // Phi_2, so every cleared polynomial vanishes identically there; the
        // exact m-condition must still decide, in both directions
        let provider = PhiProvider::in_memory();
        let phi2 = provider.get(2).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();
        let tau = qpoint(1, 0, 1).unwrap();
        let sigma = qpoint(1, 0, 5).unwrap();

        let ok = example1_special_check(&phi2, &phi2, &w_x_minus_y(), &g, &g, &tau, &sigma, 192)
            .unwrap();
        assert!(ok);

        let shifted = w_x_minus_y().sub(&MPoly::constant(2, GaussRat::from_int(1)));
        let ok = example1_special_check(&phi2, &phi2, &shifted, &g, &g, &tau, &sigma, 192).unwrap();
        assert!(!ok, "the shifted condition excludes (1/2, 1/2)");
    }

    #[test]
    fn example1_adjacency_certificate() {
        let provider = PhiProvider::in_memory();
        let phi2 = provider.get(2).unwrap();
        let v = example1_build(&phi2, &phi2, &w_x_minus_y()).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();
        let b = example1_container(&g, &g);
        assert!(b.is_basic());
        let prec = 192;
        let wit = AdjacencyWitness::unit(&b, prec).unwrap();
        let out = adjacency_verify(&v, &b, &wit, 6, 17, prec).unwrap();
        assert!(out.ok, "max residual {:e}", out.max_residual.to_f64());

        // invariance under left multiplication by SL2(Z) elements
        let gamma = Mat2Z::new(1, -2, 1, -1).unwrap();
        let b2 = b.left_multiplied(1, &gamma).unwrap();
        let out2 = adjacency_verify(&v, &b2, &wit, 6, 17, prec).unwrap();
        assert!(out2.ok);

        // invariance under a disjoint sample set
        let out3 = adjacency_verify(&v, &b, &wit, 6, 7071, prec).unwrap();
        assert!(out3.ok);
    }

    #[test]
    fn adjacency_translate_with_constant_coordinate() {
        // a translate: one free coordinate plus the constant i, whose witness
        // triple is J(i); the variety pins the constant j-slot to 1728
        let prec = 192;
        let b = BasicLinearVariety {
            coords: vec![
                CoordSpec::Free {
                    block: 0,
                    g: Mat2Z::identity(),
                },
                CoordSpec::Constant(ConstantCoord::Quadratic(qpoint(1, 0, 1).unwrap())),
            ],
        };
        assert!(!b.is_basic());
        let wit = AdjacencyWitness::unit(&b, prec).unwrap();
        let x2 = MPoly::var(6, 3);
        let v = Variety::new(
            2,
            vec![x2.sub(&MPoly::constant(6, GaussRat::from_int(1728)))],
        )
        .unwrap();
        let out = adjacency_verify(&v, &b, &wit, 4, 23, prec).unwrap();
        assert!(out.ok, "max residual {:e}", out.max_residual.to_f64());

        let bad = Variety::new(
            2,
            vec![x2.sub(&MPoly::constant(6, GaussRat::from_int(1729)))],
        )
        .unwrap();
        let out = adjacency_verify(&bad, &b, &wit, 4, 23, prec).unwrap();
        assert!(!out.ok);
    }

    #[test]
    fn solve_z_quadratic_condition_yields_both_roots() {
        // W = {x^2 = y} makes the unknown z enter quadratically: z^2 = 1
        let provider = PhiProvider::in_memory();
        let phi2 = provider.get(2).unwrap();
        let w = MPoly::var(2, 0).pow(2).sub(&MPoly::var(2, 1));
        let v = example1_build(&phi2, &phi2, &w).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();
        let b = example1_container(&g, &g);
        let prec = 192;
        let wit = AdjacencyWitness::unit(&b, prec).unwrap();
        let roots = solve_single_z(&v, &b, &wit, 1, 2, 11, prec).unwrap();
        let one = HPComplex::one(prec);
        let tol = pow2(64, -40);
        assert!(
            roots.iter().any(|r| (r - &one).abs() < tol),
            "roots {roots:?}"
        );
        assert!(
            roots.iter().any(|r| (r + &one).abs() < tol),
            "roots {roots:?}"
        );
    }

    #[test]
    fn solve_z_finds_nontrivial_witness_across_levels() {
        // W = {x - y = 1/6} with m-levels 2 and 3: the certificate needs
        // z = 7/6 on the second coordinate, and the per-sample solve finds it
        let provider = PhiProvider::in_memory();
        let phi2 = provider.get(2).unwrap();
        let phi3 = provider.get(3).unwrap();
        let w = w_x_minus_y().sub(&MPoly::constant(
            2,
            GaussRat {
                re: Rational::from((1, 6)),
                im: Rational::new(),
            },
        ));
        let v = example1_build(&phi2, &phi3, &w).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();
        let h = Mat2Z::new(3, 0, 0, 1).unwrap();
        let b = example1_container(&g, &h);
        let prec = 192;
        let wit = AdjacencyWitness::unit(&b, prec).unwrap();

        // unit witness does not certify
        let out = adjacency_verify(&v, &b, &wit, 3, 31, prec).unwrap();
        assert!(!out.ok);

        // the solved witness does
        let roots = solve_single_z(&v, &b, &wit, 1, 2, 31, prec).unwrap();
        let want = HPComplex::from_rationals(&Rational::from((7, 6)), &Rational::new(), prec);
        let found = roots
            .iter()
            .find(|r| (*r - &want).abs() < pow2(64, -40))
            .expect("7/6 witness not found")
            .clone();
        let mut wit2 = wit.clone();
        wit2.twists[1] = Some(Twist {
            z: found,
            c: Float::with_val(prec, 1),
        });
        let out = adjacency_verify(&v, &b, &wit2, 3, 31, prec).unwrap();
        assert!(out.ok, "max residual {:e}", out.max_residual.to_f64());
    }

    #[test]
    fn solve_z_recovers_unit_witness() {
        let provider = PhiProvider::in_memory();
        let phi2 = provider.get(2).unwrap();
        let v = example1_build(&phi2, &phi2, &w_x_minus_y()).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();
        let b = example1_container(&g, &g);
        let prec = 192;
        let wit = AdjacencyWitness::unit(&b, prec).unwrap();
        let roots = solve_single_z(&v, &b, &wit, 1, 2, 5, prec).unwrap();
        let one = HPComplex::one(prec);
        assert!(
            roots.iter().any(|r| (r - &one).abs() < pow2(64, -40)),
            "roots {roots:?}"
        );
    }

    #[test]
    fn example2_cases() {
        let prec = 224;
        let sigma = qpoint(5, -4, 2).unwrap();
        let tau = qpoint(1, 0, 6).unwrap();
        let provider = PhiProvider::in_memory();
        let _phi2 = provider.get(2).unwrap();
        let g = Mat2Z::new(2, 0, 0, 1).unwrap();

        // gamma = identity: C = 0, q must vanish; W = {y = 0} accepts
        let y = MPoly::var(2, 1);
        let ok = example2_check(&sigma, &y, &tau, &g, &Mat2Z::identity(), prec).unwrap();
        assert!(ok);

        // gamma = S: C = 1, q = 1; W = {y = 1} accepts any (tau, g)
        let w = y.sub(&MPoly::constant(2, GaussRat::from_int(1)));
        let ok = example2_check(&sigma, &w, &tau, &g, &Mat2Z::inversion(), prec).unwrap();
        assert!(ok);
        // and W = {y = 0} now rejects
        let ok = example2_check(
            &sigma,
            &MPoly::var(2, 1),
            &tau,
            &g,
            &Mat2Z::inversion(),
            prec,
        )
        .unwrap();
        assert!(!ok);

        // sigma = i is a pole of q
        let pole = example2_check(
            &qpoint(1, 0, 1).unwrap(),
            &y,
            &tau,
            &g,
            &Mat2Z::identity(),
            prec,
        );
        assert!(matches!(pole, Err(Error::PoleProximity)));
    }

    #[test]
    fn example2_q_matches_csquared_for_random_gamma() {
        let prec = 224;
        let wp = prec + GUARD_BITS;
        let sigma = qpoint(3, 2, 5).unwrap();
        let s = sigma.embed(wp);
        for gamma in [
            Mat2Z::new(1, 0, 2, 1).unwrap(),
            Mat2Z::new(2, 1, 3, 2).unwrap(),
            Mat2Z::new(0, -1, 1, 3).unwrap(),
        ] {
            let jet_s = eval_j_jet(&s, wp).unwrap();
            let jet_gs = eval_j_jet(&gamma.apply(&s), wp).unwrap();
            let q = example2_q(&jet_s.jp, &jet_gs.jp, &jet_s.jpp, &jet_gs.jpp);
            let c = gamma.c.to_i64().unwrap();
            let expect = HPComplex::from_i64(c * c, 0, wp);
            let resid = (&q - &expect).abs() / expect.abs();
            assert!(
                resid < pow2(64, -100),
                "gamma {gamma:?}: {:e}",
                resid.to_f64()
            );
        }
    }
}
