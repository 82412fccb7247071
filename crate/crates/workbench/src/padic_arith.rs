//! Bounded-precision p-adic scalars, truncated power series, Newton polygons,
//! slope factorization, and the mod-p^N linear algebra used by every other module.
//!
//! Everything works in Z/p^N. A value of 0 means "zero to the working precision";
//! its valuation is reported as N. Matrices are dense `Vec<Vec<BigUint>>` with
//! entries kept reduced below the modulus.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::WbError;

/// Arithmetic context: fixed odd prime and fixed absolute precision.
#[derive(Clone, Debug)]
pub struct Zmod {
    pub p: u32,
    pub prec: u32,
    pub modulus: BigUint,
}

pub type Mat = Vec<Vec<BigUint>>;

impl Zmod {
    pub fn new(p: u32, prec: u32) -> Self {
        assert!(p >= 3 && prec >= 1);
        Zmod {
            p,
            prec,
            modulus: BigUint::from(p).pow(prec),
        }
    }

    pub fn zero(&self) -> BigUint {
        BigUint::zero()
    }

    pub fn one(&self) -> BigUint {
        BigUint::one()
    }

    /// p^e as a BigUint (e <= prec is typical but not required).
    pub fn pp(&self, e: u32) -> BigUint {
        BigUint::from(self.p).pow(e)
    }

    pub fn red(&self, x: &BigUint) -> BigUint {
        x % &self.modulus
    }

    pub fn red_int(&self, x: &BigInt) -> BigUint {
        let m = BigInt::from(self.modulus.clone());
        let r = x.mod_floor(&m);
        r.to_biguint().unwrap()
    }

    pub fn from_i64(&self, x: i64) -> BigUint {
        self.red_int(&BigInt::from(x))
    }

    pub fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.modulus {
            s - &self.modulus
        } else {
            s
        }
    }

    pub fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            a + &self.modulus - b
        }
    }

    pub fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            &self.modulus - a
        }
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.modulus
    }

    /// Inverse of a unit. Errors on non-units.
    pub fn inv(&self, a: &BigUint) -> Result<BigUint, WbError> {
        let a = self.red(a);
        let g = BigInt::from(a.clone()).extended_gcd(&BigInt::from(self.modulus.clone()));
        if !g.gcd.is_one() {
            return Err(WbError::NonUnit);
        }
        Ok(self.red_int(&g.x))
    }

    /// x^e for signed e (negative exponents invert a unit first).
    pub fn pow_signed(&self, a: &BigUint, e: i64) -> Result<BigUint, WbError> {
        let (base, e) = if e < 0 {
            (self.inv(a)?, (-e) as u64)
        } else {
            (self.red(a), e as u64)
        };
        Ok(base.modpow(&BigUint::from(e), &self.modulus))
    }

    /// p-adic valuation, capped at `prec` (0 maps to `prec`).
    pub fn val(&self, x: &BigUint) -> u32 {
        if x.is_zero() {
            return self.prec;
        }
        let pb = BigUint::from(self.p);
        let mut v = 0u32;
        let mut m = x.clone();
        loop {
            let (q, r) = m.div_rem(&pb);
            if !r.is_zero() {
                return v;
            }
            v += 1;
            if v >= self.prec {
                return self.prec;
            }
            m = q;
        }
    }

    /// Strip p^e off x (asserts divisibility).
    pub fn shift_down(&self, x: &BigUint, e: u32) -> BigUint {
        let pe = self.pp(e);
        let (q, r) = x.div_rem(&pe);
        assert!(r.is_zero(), "shift_down: not divisible by p^{}", e);
        q
    }

    /// Drop everything below p^e and return the quotient (truncating division).
    pub fn shift_down_trunc(&self, x: &BigUint, e: u32) -> BigUint {
        x / self.pp(e)
    }

    /// Identity matrix.
    pub fn eye(&self, n: usize) -> Mat {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigUint::one() } else { BigUint::zero() })
                    .collect()
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// PadicScalar: the public value type (context-free, carries p and precision).
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicScalar {
    pub p: u32,
    pub prec: u32,
    pub residue: BigUint,
}

impl PadicScalar {
    pub fn new(p: u32, prec: u32, residue: BigUint) -> Self {
        let m = BigUint::from(p).pow(prec);
        PadicScalar {
            p,
            prec,
            residue: residue % m,
        }
    }

    pub fn from_i64(p: u32, prec: u32, x: i64) -> Self {
        let ctx = Zmod::new(p, prec);
        PadicScalar {
            p,
            prec,
            residue: ctx.from_i64(x),
        }
    }

    /// Exact valuation if < prec, else None ("zero to precision").
    pub fn valuation(&self) -> Option<u32> {
        let ctx = Zmod::new(self.p, self.prec);
        let v = ctx.val(&self.residue);
        if v >= self.prec {
            None
        } else {
            Some(v)
        }
    }

    fn align(a: &Self, b: &Self) -> (Zmod, BigUint, BigUint) {
        assert_eq!(a.p, b.p, "mixed primes");
        let prec = a.prec.min(b.prec);
        let ctx = Zmod::new(a.p, prec);
        (ctx.clone(), ctx.red(&a.residue), ctx.red(&b.residue))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (ctx, a, b) = Self::align(self, other);
        PadicScalar {
            p: ctx.p,
            prec: ctx.prec,
            residue: ctx.add(&a, &b),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (ctx, a, b) = Self::align(self, other);
        PadicScalar {
            p: ctx.p,
            prec: ctx.prec,
            residue: ctx.sub(&a, &b),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (ctx, a, b) = Self::align(self, other);
        PadicScalar {
            p: ctx.p,
            prec: ctx.prec,
            residue: ctx.mul(&a, &b),
        }
    }

    /// Division loses precision by the divisor's valuation.
    pub fn div(&self, other: &Self) -> Result<Self, WbError> {
        let (ctx, a, b) = Self::align(self, other);
        let vb = ctx.val(&b);
        if vb >= ctx.prec {
            return Err(WbError::NonUnit);
        }
        let va = ctx.val(&a);
        if va < vb {
            return Err(WbError::Inexact);
        }
        let prec = ctx.prec - vb;
        let ctx2 = Zmod::new(ctx.p, prec);
        let au = ctx.shift_down(&a, vb);
        let bu = ctx.shift_down(&b, vb);
        Ok(PadicScalar {
            p: ctx.p,
            prec,
            residue: ctx2.mul(&ctx2.red(&au), &ctx2.inv(&ctx2.red(&bu))?),
        })
    }

    /// Base-p digits of the residue, least significant first, `prec` of them.
    pub fn digits(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.prec as usize);
        let mut m = self.residue.clone();
        let pb = BigUint::from(self.p);
        for _ in 0..self.prec {
            let (q, r) = m.div_rem(&pb);
            out.push(r.to_u8().unwrap_or(0));
            m = q;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Truncated power series (index = degree, length = trunc + 1).
// ---------------------------------------------------------------------------

pub fn series_mul(ctx: &Zmod, a: &[BigUint], b: &[BigUint], trunc: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); trunc + 1];
    for (i, ai) in a.iter().enumerate() {
        if i > trunc {
            break;
        }
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j > trunc {
                break;
            }
            if bj.is_zero() {
                continue;
            }
            out[i + j] = (&out[i + j] + ai * bj) % &ctx.modulus;
        }
    }
    out
}

pub fn series_inv(ctx: &Zmod, c: &[BigUint], trunc: usize) -> Result<Vec<BigUint>, WbError> {
    let c0inv = ctx.inv(&c[0])?;
    let mut out = vec![BigUint::zero(); trunc + 1];
    out[0] = c0inv.clone();
    for n in 1..=trunc {
        let mut s = BigUint::zero();
        for k in 1..=n {
            if k < c.len() && !c[k].is_zero() && !out[n - k].is_zero() {
                s = (s + &c[k] * &out[n - k]) % &ctx.modulus;
            }
        }
        out[n] = ctx.mul(&ctx.neg(&s), &c0inv);
    }
    Ok(out)
}

pub fn series_pow(ctx: &Zmod, a: &[BigUint], e: i64, trunc: usize) -> Result<Vec<BigUint>, WbError> {
    let mut out = vec![BigUint::zero(); trunc + 1];
    out[0] = BigUint::one();
    let mut base = if e < 0 {
        series_inv(ctx, a, trunc)?
    } else {
        let mut b = a.to_vec();
        b.resize(trunc + 1, BigUint::zero());
        b.truncate(trunc + 1);
        b
    };
    let mut e = e.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            out = series_mul(ctx, &out, &base, trunc);
        }
        e >>= 1;
        if e > 0 {
            base = series_mul(ctx, &base, &base, trunc);
        }
    }
    Ok(out)
}

/// f(g(z)) truncated. Requires val(g(0)) >= 1 unless `f_polynomial`
/// (a polynomial composes with anything).
pub fn series_compose(
    ctx: &Zmod,
    f: &[BigUint],
    g: &[BigUint],
    trunc: usize,
    f_polynomial: bool,
) -> Result<Vec<BigUint>, WbError> {
    if !f_polynomial && !g.is_empty() && ctx.val(&g[0]) == 0 {
        return Err(WbError::ComposeDiverges);
    }
    // Horner from the top coefficient.
    let mut out = vec![BigUint::zero(); trunc + 1];
    for fi in f.iter().rev() {
        out = series_mul(ctx, &out, g, trunc);
        out[0] = ctx.add(&out[0], fi);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Family coefficients: truncated polynomials in the disc coordinate s,
// stored in the scaled representation c_d = (true t^d coefficient) * p^{v_p(d!)}
// where t = p^m s.  The scaling makes the binomial weight series integral and
// is closed under multiplication because v_p(d1!) + v_p(d2!) <= v_p((d1+d2)!).
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct FamCtx {
    pub w: usize,
    /// sc[d] = v_p(d!)
    pub sc: Vec<u32>,
}

impl FamCtx {
    pub fn new(p: u32, w: usize) -> Self {
        let sc = (0..w)
            .map(|d| {
                let mut v = 0u32;
                let mut m = d as u64;
                let p = p as u64;
                while m > 0 {
                    m /= p;
                    v += m as u32;
                }
                v
            })
            .collect();
        FamCtx { w, sc }
    }
}

pub type Fam = Vec<BigUint>;

pub fn fam_const(fc: &FamCtx, c: BigUint) -> Fam {
    let mut out = vec![BigUint::zero(); fc.w];
    out[0] = c;
    out
}

pub fn fam_add(ctx: &Zmod, x: &Fam, y: &Fam) -> Fam {
    x.iter().zip(y).map(|(a, b)| ctx.add(a, b)).collect()
}

pub fn fam_sub(ctx: &Zmod, x: &Fam, y: &Fam) -> Fam {
    x.iter().zip(y).map(|(a, b)| ctx.sub(a, b)).collect()
}

pub fn fam_scal(ctx: &Zmod, c: &BigUint, x: &Fam) -> Fam {
    x.iter().map(|a| ctx.mul(c, a)).collect()
}

pub fn fam_is_zero(x: &Fam) -> bool {
    x.iter().all(|c| c.is_zero())
}

pub fn fam_mul(ctx: &Zmod, fc: &FamCtx, x: &Fam, y: &Fam) -> Fam {
    let mut out = vec![BigUint::zero(); fc.w];
    for (i, a) in x.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in y.iter().enumerate() {
            if i + j >= fc.w {
                break;
            }
            if b.is_zero() {
                continue;
            }
            let scale = ctx.pp(fc.sc[i + j] - fc.sc[i] - fc.sc[j]);
            out[i + j] = (&out[i + j] + a * b * scale) % &ctx.modulus;
        }
    }
    out
}

/// Inverse when the s^0 part is a unit (Newton iteration; converges in
/// ceil(log2 w) steps).
pub fn fam_inv(ctx: &Zmod, fc: &FamCtx, x: &Fam) -> Result<Fam, WbError> {
    let mut out = fam_const(fc, ctx.inv(&x[0])?);
    let two = fam_const(fc, BigUint::from(2u32));
    let mut steps = 1usize;
    while (1usize << steps) < fc.w.max(2) {
        steps += 1;
    }
    for _ in 0..=steps {
        let xo = fam_mul(ctx, fc, x, &out);
        let corr = fam_sub(ctx, &two, &xo);
        out = fam_mul(ctx, fc, &out, &corr);
    }
    Ok(out)
}

/// Evaluate at t = tk (needs val(tk) >= 1 so the stored scaling clears).
pub fn fam_spec(ctx: &Zmod, fc: &FamCtx, x: &Fam, tk: &BigUint) -> Result<BigUint, WbError> {
    let mut acc = BigUint::zero();
    for (d, c) in x.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let guard = &ctx.modulus * ctx.pp(fc.sc[d]);
        let num = tk.modpow(&BigUint::from(d), &guard);
        let pe = ctx.pp(fc.sc[d]);
        let (q, r) = num.div_rem(&pe);
        if !r.is_zero() {
            return Err(WbError::Inexact);
        }
        acc = (acc + c * q) % &ctx.modulus;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Newton polygons.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    /// Hull vertices (degree, valuation), left to right.
    pub vertices: Vec<(usize, u32)>,
    /// (slope, horizontal length) per segment; slopes strictly increasing.
    pub segments: Vec<(Ratio<i64>, usize)>,
    /// True when a zero-to-precision coefficient could hide a hull vertex.
    pub ambiguous: bool,
}

/// Lower convex hull of {(n, val(c_n))}.  `vals[n] = None` means the
/// coefficient is zero to working precision `prec`.
pub fn newton_polygon(vals: &[Option<u32>], prec: u32) -> Result<NewtonPolygon, WbError> {
    if vals.is_empty() || vals[0] != Some(0) {
        return Err(WbError::BadInput(
            "newton_polygon: series must be normalized with F(0) a unit".into(),
        ));
    }
    let pts: Vec<(usize, u32)> = vals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    // Monotone-chain lower hull.
    let mut hull: Vec<(usize, u32)> = Vec::new();
    for &(x, y) in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // pop if (x2,y2) is on or above the segment (x1,y1)-(x,y)
            let lhs = (y2 as i64 - y1 as i64) * (x as i64 - x1 as i64);
            let rhs = (y as i64 - y1 as i64) * (x2 as i64 - x1 as i64);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    let mut segments = Vec::new();
    for w in hull.windows(2) {
        let ((x1, y1), (x2, y2)) = (w[0], w[1]);
        segments.push((
            Ratio::new(y2 as i64 - y1 as i64, x2 as i64 - x1 as i64),
            x2 - x1,
        ));
    }
    // A zero-to-precision coefficient is only a problem if the hull would have
    // to pass at or above precision there (then the true point might be lower).
    let mut ambiguous = false;
    for (n, v) in vals.iter().enumerate() {
        if v.is_some() {
            continue;
        }
        let h = hull_height(&hull, n);
        if let Some(h) = h {
            if h >= prec as i64 {
                ambiguous = true;
            }
        }
    }
    Ok(NewtonPolygon {
        vertices: hull,
        segments,
        ambiguous,
    })
}

fn hull_height(hull: &[(usize, u32)], x: usize) -> Option<i64> {
    for w in hull.windows(2) {
        let ((x1, y1), (x2, y2)) = (w[0], w[1]);
        if x1 <= x && x <= x2 {
            let num = y1 as i64 * (x2 - x1) as i64 + (y2 as i64 - y1 as i64) * (x - x1) as i64;
            return Some(num.div_euclid((x2 - x1) as i64));
        }
    }
    None
}

/// Coefficient valuations of a series over Zmod.
pub fn coeff_vals(ctx: &Zmod, f: &[BigUint]) -> Vec<Option<u32>> {
    f.iter()
        .map(|c| {
            let v = ctx.val(c);
            if v >= ctx.prec {
                None
            } else {
                Some(v)
            }
        })
        .collect()
}

/// Degree of the slope-<=h part (sum of segment lengths with slope <= h).
/// Errors when h exactly equals a segment slope: the count is then unstable
/// under perturbation of h and the caller should move h off the slope.
pub fn slope_break(np: &NewtonPolygon, h: Ratio<i64>) -> Result<usize, WbError> {
    let mut d = 0usize;
    for &(s, l) in &np.segments {
        if s == h {
            return Err(WbError::NoBreakAtH);
        }
        if s < h {
            d += l;
        }
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Linear solves and kernels over Z/p^N.
// ---------------------------------------------------------------------------

pub fn mat_mul(ctx: &Zmod, a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![BigUint::zero(); m]; n];
    for i in 0..n {
        for (kk, bk) in b.iter().enumerate().take(k) {
            let aik = &a[i][kk];
            if aik.is_zero() {
                continue;
            }
            let row = &mut out[i];
            for j in 0..m {
                if bk[j].is_zero() {
                    continue;
                }
                row[j] = (&row[j] + aik * &bk[j]) % &ctx.modulus;
            }
        }
    }
    out
}

pub fn mat_add(ctx: &Zmod, a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| ctx.add(x, y)).collect())
        .collect()
}

pub fn mat_sub(ctx: &Zmod, a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| ctx.sub(x, y)).collect())
        .collect()
}

/// Smallest entry valuation of a matrix (ctx.prec if all zero).
pub fn mat_min_val(ctx: &Zmod, a: &Mat) -> u32 {
    let mut mv = ctx.prec;
    for row in a {
        for x in row {
            let v = ctx.val(x);
            if v < mv {
                mv = v;
            }
        }
    }
    mv
}

/// Result of a column-tracked echelon pass over Z/p^N.
pub struct KernelResult {
    /// n x dim matrix whose columns span the accepted near-kernel directions.
    pub basis: Mat,
    /// Pivot ("defect") valuations encountered, in elimination order.
    pub dvals: Vec<u32>,
    /// All accepted directions have defect valuation >= cert.
    pub cert: u32,
}

/// Column-operation-tracked elimination with global min-valuation pivoting.
/// Runs until the best remaining pivot has valuation >= cutoff; the trailing
/// (unpivoted) columns of the accumulated column transform are returned as the
/// kernel basis.  This is the "echelon form with valuation pivoting and
/// explicit saturation" step: pivot columns are divided out by their p-power
/// via unit multipliers only, so the returned basis is integral and saturated.
pub fn kernel_cols(ctx: &Zmod, a_in: &Mat, cutoff: u32) -> KernelResult {
    let rows = a_in.len();
    let cols = if rows == 0 { 0 } else { a_in[0].len() };
    let mut a = a_in.clone();
    let mut c = ctx.eye(cols);
    let mut dvals = Vec::new();
    let mut npiv = 0usize;
    let mut cert = ctx.prec;
    for piv in 0..cols {
        // global min-valuation pivot over the remaining submatrix
        let mut best: Option<(usize, usize)> = None;
        let mut bv = ctx.prec + 1;
        'scan: for j0 in piv..cols {
            for (i0, row) in a.iter().enumerate().take(rows) {
                let v = ctx.val(&row[j0]);
                if v < bv {
                    bv = v;
                    best = Some((i0, j0));
                    if bv == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        dvals.push(bv);
        if bv >= cutoff {
            cert = bv;
            break;
        }
        // swap column bj into position piv
        for row in a.iter_mut() {
            row.swap(piv, bj);
        }
        for row in c.iter_mut() {
            row.swap(piv, bj);
        }
        let pu = ctx.shift_down(&a[bi][piv], bv);
        let puinv = ctx.inv(&pu).expect("unit part is a unit");
        for j0 in piv + 1..cols {
            let x = a[bi][j0].clone();
            if x.is_zero() {
                continue;
            }
            // x has valuation >= bv by pivot minimality
            let mult = ctx.mul(&ctx.shift_down(&x, bv), &puinv);
            for row in a.iter_mut() {
                let t = ctx.mul(&mult, &row[piv]);
                row[j0] = ctx.sub(&row[j0], &t);
            }
            for row in c.iter_mut() {
                let t = ctx.mul(&mult, &row[piv]);
                row[j0] = ctx.sub(&row[j0], &t);
            }
        }
        npiv = piv + 1;
    }
    let basis = c
        .iter()
        .map(|row| row[npiv..].to_vec())
        .collect::<Vec<_>>();
    KernelResult { basis, dvals, cert }
}

/// Solve Inc * X = B where Inc has unimodular (saturated) columns; all pivots
/// must be units.  Returns X and the minimum residual valuation over the
/// non-pivot rows (ctx.prec when the solve is exact).
pub fn solve_cols(ctx: &Zmod, inc: &Mat, b: &Mat) -> Result<(Mat, u32), WbError> {
    let n = inc.len();
    let r = if n == 0 { 0 } else { inc[0].len() };
    let m = if n == 0 { 0 } else { b[0].len() };
    let mut a: Mat = (0..n)
        .map(|i| {
            let mut row = inc[i].clone();
            row.extend(b[i].iter().cloned());
            row
        })
        .collect();
    let mut used = vec![false; n];
    let mut piv_rows = Vec::with_capacity(r);
    for col in 0..r {
        let mut best = None;
        for (i0, row) in a.iter().enumerate() {
            if used[i0] {
                continue;
            }
            if ctx.val(&row[col]) == 0 {
                best = Some(i0);
                break;
            }
        }
        let best = best.ok_or_else(|| {
            WbError::PrecisionCollapse(format!("solve_cols: no unit pivot in column {}", col))
        })?;
        used[best] = true;
        piv_rows.push(best);
        let inv0 = ctx.inv(&a[best][col])?;
        for j in 0..r + m {
            a[best][j] = ctx.mul(&a[best][j], &inv0);
        }
        for i0 in 0..n {
            if i0 == best {
                continue;
            }
            let f = a[i0][col].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..r + m {
                let t = ctx.mul(&f, &a[best][j]);
                a[i0][j] = ctx.sub(&a[i0][j], &t);
            }
        }
    }
    let x: Mat = piv_rows
        .iter()
        .map(|&i0| a[i0][r..].to_vec())
        .collect();
    let mut res = ctx.prec;
    for (i0, row) in a.iter().enumerate() {
        if used[i0] {
            continue;
        }
        for j in 0..m {
            res = res.min(ctx.val(&row[r + j]));
        }
    }
    Ok((x, res))
}

/// Solve a square system with full (row+column) valuation pivoting.
/// Returns the solution and the largest pivot valuation used ("lost" digits).
pub fn solve_val_pivot(ctx: &Zmod, msys: &Mat, rhs: &[BigUint]) -> Result<(Vec<BigUint>, u32), WbError> {
    let n = msys.len();
    let mut a: Mat = (0..n)
        .map(|i| {
            let mut row = msys[i].clone();
            row.push(rhs[i].clone());
            row
        })
        .collect();
    let mut colperm: Vec<usize> = (0..n).collect();
    let mut lost = 0u32;
    for step in 0..n {
        let mut best = None;
        let mut bv = ctx.prec + 1;
        'scan: for i0 in step..n {
            for j0 in step..n {
                let v = ctx.val(&a[i0][j0]);
                if v < bv {
                    bv = v;
                    best = Some((i0, j0));
                    if bv == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((bi, bj)) = best else {
            return Err(WbError::PrecisionCollapse("singular system".into()));
        };
        if bv >= ctx.prec {
            return Err(WbError::PrecisionCollapse("singular system".into()));
        }
        lost = lost.max(bv);
        a.swap(step, bi);
        for row in a.iter_mut() {
            row.swap(step, bj);
        }
        colperm.swap(step, bj);
        let pu = ctx.inv(&ctx.shift_down(&a[step][step], bv))?;
        for i0 in 0..n {
            if i0 == step {
                continue;
            }
            let x = a[i0][step].clone();
            if x.is_zero() {
                continue;
            }
            // rows above `step` may hold entries shallower than the pivot;
            // the sub-pivot remainder is below what the solution can see and
            // the Newton callers re-check the exact residual anyway
            let mult = ctx.mul(&ctx.shift_down_trunc(&x, bv), &pu);
            for j0 in step..=n {
                let t = ctx.mul(&mult, &a[step][j0]);
                a[i0][j0] = ctx.sub(&a[i0][j0], &t);
            }
        }
    }
    let mut x = vec![BigUint::zero(); n];
    for i0 in 0..n {
        let bv = ctx.val(&a[i0][i0]);
        let r = &a[i0][n];
        if ctx.val(r) < bv {
            return Err(WbError::Inexact);
        }
        let pu = ctx.inv(&ctx.shift_down(&a[i0][i0], bv))?;
        x[colperm[i0]] = ctx.mul(&ctx.shift_down(r, bv), &pu);
    }
    Ok((x, lost))
}

/// Tolerant least-defect solve of S0 x = rhs for a rank-deficient S0:
/// eliminate only with pivots of valuation < rank_tol, set the remaining
/// directions to zero, and divide truncatingly.  Returns x and the residual
/// valuation floor.
pub fn lsq_solve(ctx: &Zmod, s0: &Mat, rhs: &[BigUint], rank_tol: u32) -> (Vec<BigUint>, u32) {
    let rows = s0.len();
    let n = if rows == 0 { 0 } else { s0[0].len() };
    let mut a: Mat = (0..rows)
        .map(|i| {
            let mut row = s0[i].clone();
            row.push(rhs[i].clone());
            row
        })
        .collect();
    let mut colperm: Vec<usize> = (0..n).collect();
    let mut rank = 0usize;
    for step in 0..n {
        let mut best = None;
        let mut bv = ctx.prec + 1;
        'scan: for i0 in step..rows {
            for j0 in step..n {
                let v = ctx.val(&a[i0][j0]);
                if v < bv {
                    bv = v;
                    best = Some((i0, j0));
                    if bv == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        if bv >= rank_tol {
            break;
        }
        a.swap(step, bi);
        for row in a.iter_mut() {
            row.swap(step, bj);
        }
        colperm.swap(step, bj);
        let pu = ctx
            .inv(&ctx.shift_down(&a[step][step], bv))
            .expect("unit part");
        for i0 in 0..rows {
            if i0 == step {
                continue;
            }
            let x = a[i0][step].clone();
            if x.is_zero() {
                continue;
            }
            let mult = ctx.mul(&ctx.shift_down_trunc(&x, bv), &pu);
            for j0 in step..=n {
                let t = ctx.mul(&mult, &a[step][j0]);
                a[i0][j0] = ctx.sub(&a[i0][j0], &t);
            }
        }
        rank = step + 1;
    }
    let mut x = vec![BigUint::zero(); n];
    for i0 in 0..rank {
        let bv = ctx.val(&a[i0][i0]);
        let r = &a[i0][n];
        let pu = ctx
            .inv(&ctx.shift_down(&a[i0][i0], bv))
            .expect("unit part");
        // truncating division: anything below the pivot power is residual
        x[colperm[i0]] = ctx.mul(&ctx.shift_down_trunc(r, bv), &pu);
    }
    let mut res = ctx.prec;
    for row in a.iter().take(rows).skip(rank) {
        res = res.min(ctx.val(&row[n]));
    }
    (x, res)
}

// ---------------------------------------------------------------------------
// Slope factorization F = Q * S along the polygon break at h.
// ---------------------------------------------------------------------------

pub struct SlopeFactor {
    /// Slope-<=h factor, Q(0) = 1, deg Q = d(k,h).
    pub q: Vec<BigUint>,
    /// Complementary factor, S(0) = 1.
    pub s: Vec<BigUint>,
    /// Largest pivot valuation used in the Newton solves.
    pub lost: u32,
    /// Q*S reproduced F exactly mod p^prec.
    pub reliable: bool,
}

fn poly_mul_trunc(ctx: &Zmod, a: &[BigUint], b: &[BigUint], trunc: usize) -> Vec<BigUint> {
    series_mul(ctx, a, b, trunc)
}

/// Factor F (with F(0)=1) as Q*S where Q collects the eigenvalues of slope
/// <= h.  Quadratic-convergent Newton iteration on the Sylvester-type system,
/// started from the polygon break.
pub fn slope_le_h_factor(ctx: &Zmod, f: &[BigUint], h: Ratio<i64>) -> Result<SlopeFactor, WbError> {
    if f.is_empty() || !f[0].is_one() {
        return Err(WbError::BadInput("slope factor: F(0) must be 1".into()));
    }
    // trailing zero-to-precision coefficients carry no information but widen
    // the Sylvester system and degrade its pivots: factor the visible part
    let n = (1..f.len()).rev().find(|&i| !f[i].is_zero()).unwrap_or(0);
    let f = &f[..=n];
    let np = newton_polygon(&coeff_vals(ctx, f), ctx.prec)?;
    let d = slope_break(&np, h)?;
    if d == 0 {
        return Ok(SlopeFactor {
            q: vec![BigUint::one()],
            s: f.to_vec(),
            lost: 0,
            reliable: true,
        });
    }
    if d == n {
        return Ok(SlopeFactor {
            q: f.to_vec(),
            s: vec![BigUint::one()],
            lost: 0,
            reliable: true,
        });
    }
    let mut q: Vec<BigUint> = f[..=d].to_vec();
    // S0 by power series division F/Q0
    let mut s = vec![BigUint::zero(); n - d + 1];
    s[0] = BigUint::one();
    for i in 1..=n - d {
        let mut acc = f[i].clone();
        for j in 1..=i.min(d) {
            let t = ctx.mul(&q[j], &s[i - j]);
            acc = ctx.sub(&acc, &t);
        }
        s[i] = acc;
    }
    let mut lost = 0u32;
    let mut reliable = false;
    for _ in 0..64 {
        let qs = poly_mul_trunc(ctx, &q, &s, n);
        let e: Vec<BigUint> = (0..=n)
            .map(|i| ctx.sub(&f[i], qs.get(i).unwrap_or(&BigUint::zero())))
            .collect();
        if e.iter().all(|c| c.is_zero()) {
            reliable = true;
            break;
        }
        // unknowns: q corrections a_1..a_d then s corrections b_1..b_{n-d};
        // equation i (1..n): sum_j a_j S[i-j] + sum_j b_j Q[i-j] = E[i]
        let mut msys = vec![vec![BigUint::zero(); n]; n];
        for j in 1..=d {
            for i in 1..=n {
                if i >= j && i - j < s.len() {
                    msys[i - 1][j - 1] = s[i - j].clone();
                }
            }
        }
        for j in 1..=n - d {
            for i in 1..=n {
                if i >= j && i - j <= d {
                    msys[i - 1][d + j - 1] = q[i - j].clone();
                }
            }
        }
        let rhs: Vec<BigUint> = (1..=n).map(|i| e[i].clone()).collect();
        let (x, l) = solve_val_pivot(ctx, &msys, &rhs)?;
        lost = lost.max(l);
        for j in 1..=d {
            q[j] = ctx.add(&q[j], &x[j - 1]);
        }
        for j in 1..=n - d {
            s[j] = ctx.add(&s[j], &x[d + j - 1]);
        }
    }
    Ok(SlopeFactor { q, s, lost, reliable })
}
