//! Weight characters of Z_p^*: integral weights [k](z) = z^{k-2} and
//! one-parameter families centered at an integral weight k0 with disc
//! coordinate s, t = p^m s.  Family values live in the scaled FamilyCoefficient
//! ring of `padic_arith`.
//!
//! The family evaluation is
//!   kappa(u) = omega(u)^e * <u>^{k0-2} * sum_n binom(l(u), n) t^n,
//! with <u> = u/omega(u) and l(u) = log<u> / log(1+p).  In the scaled
//! representation the t^n coefficient is stored multiplied by p^{v_p(n!)},
//! i.e. as ff_n(l) / unit(n!), which is integral -- no divisions anywhere.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::WbError;
use crate::padic_arith::{series_mul, series_pow, Fam, FamCtx, Zmod};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Integral { k: i64 },
    Family { k0: i64, m: u32, w: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightCharacter {
    pub p: u32,
    /// extra tame-character exponent mod p-1 (0 in all certified runs)
    pub eps: u32,
    pub kind: WeightKind,
}

impl WeightCharacter {
    pub fn integral(p: u32, k: i64) -> Self {
        WeightCharacter {
            p,
            eps: 0,
            kind: WeightKind::Integral { k },
        }
    }

    pub fn family(p: u32, k0: i64, m: u32, w: usize) -> Self {
        WeightCharacter {
            p,
            eps: 0,
            kind: WeightKind::Family { k0, m, w },
        }
    }

    pub fn fam_ctx(&self) -> Option<FamCtx> {
        match self.kind {
            WeightKind::Family { w, .. } => Some(FamCtx::new(self.p, w)),
            _ => None,
        }
    }
}

/// Teichmuller lift via x -> x^p iteration to stabilization.
pub fn teichmuller(ctx: &Zmod, u: &BigUint) -> Result<BigUint, WbError> {
    if ctx.val(u) > 0 {
        return Err(WbError::NonUnit);
    }
    let pb = BigUint::from(ctx.p);
    let mut t = ctx.red(u);
    loop {
        let t2 = t.modpow(&pb, &ctx.modulus);
        if t2 == t {
            return Ok(t);
        }
        t = t2;
    }
}

/// Unit part of log(1+p), i.e. log(1+p)/p, computed with guard digits.
pub fn log1p_unit(p: u32, prec: u32) -> BigUint {
    let guard = 16u32;
    let big = Zmod::new(p, prec + guard);
    let mut acc = BigUint::zero();
    let mut n = 1u64;
    loop {
        let mut v = 0u32;
        let mut u = n;
        while u % p as u64 == 0 {
            u /= p as u64;
            v += 1;
        }
        if (n as i64 - v as i64) > (prec + 2) as i64 {
            break;
        }
        // (+-) p^n / n = (+-) p^{n - v} / unit(n)
        let term = big.mul(
            &big.pp((n as u32) - v),
            &big.inv(&BigUint::from(u)).unwrap(),
        );
        if n % 2 == 1 {
            acc = big.add(&acc, &term);
        } else {
            acc = big.sub(&acc, &term);
        }
        n += 1;
    }
    let ctx = Zmod::new(p, prec);
    // log(1+p) = p * unit
    ctx.red(&big.shift_down(&big.red(&acc), 1))
}

/// log(1 + x(z)) for a truncated series x with every coefficient divisible
/// by p (the v-analyticity condition); exact term-by-term division.
pub fn series_log1p(ctx: &Zmod, xs: &[BigUint], trunc: usize) -> Result<Vec<BigUint>, WbError> {
    for (i, c) in xs.iter().enumerate() {
        if !c.is_zero() && ctx.val(c) == 0 {
            return Err(WbError::VAnalyticity(format!(
                "log argument coefficient {} is a unit",
                i
            )));
        }
    }
    let mut out = vec![BigUint::zero(); trunc + 1];
    let mut term = xs.to_vec();
    term.resize(trunc + 1, BigUint::zero());
    let mut cur = term.clone();
    let mut n = 1u64;
    loop {
        let mut v = 0u32;
        let mut u = n;
        while u % ctx.p as u64 == 0 {
            u /= ctx.p as u64;
            v += 1;
        }
        let uinv = ctx.inv(&BigUint::from(u))?;
        let mut nonzero = false;
        for i in 0..=trunc {
            if cur[i].is_zero() {
                continue;
            }
            if ctx.val(&cur[i]) < v {
                return Err(WbError::VAnalyticity(format!(
                    "log term {} not divisible by p^{}",
                    n, v
                )));
            }
            let t = ctx.mul(&ctx.shift_down(&cur[i], v), &uinv);
            if n % 2 == 1 {
                out[i] = ctx.add(&out[i], &t);
            } else {
                out[i] = ctx.sub(&out[i], &t);
            }
            nonzero = true;
        }
        if !nonzero {
            break;
        }
        cur = series_mul(ctx, &cur, &term, trunc);
        n += 1;
    }
    Ok(out)
}

/// Value of a weight character on a single unit.
pub enum CharValue {
    Scalar(BigUint),
    Family(Fam),
}

pub fn eval_character(ctx: &Zmod, kappa: &WeightCharacter, u: &BigUint) -> Result<CharValue, WbError> {
    if ctx.val(u) > 0 {
        return Err(WbError::NonUnit);
    }
    match kappa.kind {
        WeightKind::Integral { k } => {
            let base = ctx.pow_signed(u, k - 2)?;
            let om = teichmuller(ctx, u)?;
            let eps = ctx.pow_signed(&om, kappa.eps as i64)?;
            Ok(CharValue::Scalar(ctx.mul(&base, &eps)))
        }
        WeightKind::Family { .. } => {
            let fc = kappa.fam_ctx().unwrap();
            let series = character_series(ctx, kappa, &fc, &[ctx.red(u)], 0)?;
            match series {
                CharSeriesValue::Family(v) => Ok(CharValue::Family(v.into_iter().next().unwrap())),
                _ => unreachable!(),
            }
        }
    }
}

pub enum CharSeriesValue {
    Scalar(Vec<BigUint>),
    Family(Vec<Fam>),
}

/// Truncated expansion of z -> kappa(den(z)) for a series argument den with
/// unit constant term (the action modules pass den = d + b p^{1+v} z).
/// This is the weight factor entering every action matrix.
///
/// The family branch runs in a guarded context: the p-adic log divisions
/// lose up to v_p(n) digits per term, so the series is computed a few digits
/// above the caller's precision and reduced back at the end.
pub fn character_series(
    ctx0: &Zmod,
    kappa: &WeightCharacter,
    fc: &FamCtx,
    den: &[BigUint],
    trunc: usize,
) -> Result<CharSeriesValue, WbError> {
    if den.is_empty() || ctx0.val(&den[0]) != 0 {
        return Err(WbError::NonUnit);
    }
    match kappa.kind {
        WeightKind::Integral { k } => {
            let ctx = ctx0;
            let mut out = series_pow(ctx, den, k - 2, trunc)?;
            if kappa.eps != 0 {
                let om = teichmuller(ctx, &den[0])?;
                let e = ctx.pow_signed(&om, kappa.eps as i64)?;
                for c in out.iter_mut() {
                    *c = ctx.mul(c, &e);
                }
            }
            Ok(CharSeriesValue::Scalar(out))
        }
        WeightKind::Family { k0, .. } => {
            let guard = 16u32;
            let ctx = &Zmod::new(ctx0.p, ctx0.prec + guard);
            let logp1_unit = &log1p_unit(ctx.p, ctx.prec);
            let om = teichmuller(ctx, &den[0])?;
            let ominv = ctx.inv(&om)?;
            // bracket <den> = den / omega(den0), congruent to 1 + (p) coeffs
            let mut bra: Vec<BigUint> = den.iter().map(|c| ctx.mul(&ominv, c)).collect();
            bra.resize(trunc + 1, BigUint::zero());
            let mut x = bra.clone();
            x[0] = ctx.sub(&x[0], &BigUint::one());
            let lg = series_log1p(ctx, &x, trunc)?;
            let lpinv = ctx.inv(logp1_unit)?;
            // ell = log<den> / log(1+p); log coefficients are all divisible by p
            let mut ell = Vec::with_capacity(trunc + 1);
            for c in &lg {
                if !c.is_zero() && ctx.val(c) < 1 {
                    return Err(WbError::VAnalyticity("log not divisible by p".into()));
                }
                ell.push(ctx.mul(&ctx.shift_down_trunc(c, 1), &lpinv));
            }
            // omega and <.> parts of the center weight
            let base = series_pow(ctx, &bra, k0 - 2, trunc)?;
            let om_exp = (k0 - 2 + kappa.eps as i64).rem_euclid((ctx.p - 1) as i64);
            let omk = ctx.pow_signed(&om, om_exp)?;
            let base: Vec<BigUint> = base.iter().map(|c| ctx.mul(&omk, c)).collect();
            // scaled binomial tower: t^n coefficient = ff_n(ell) / unit(n!)
            let mut out = vec![vec![BigUint::zero(); fc.w]; trunc + 1];
            let mut ff = vec![BigUint::zero(); trunc + 1];
            ff[0] = BigUint::one();
            for n in 0..fc.w {
                if n > 0 {
                    let mut shifted = ell.clone();
                    shifted[0] = ctx.sub(&shifted[0], &ctx.from_i64((n as i64) - 1));
                    ff = series_mul(ctx, &ff, &shifted, trunc);
                }
                // unit part of n!
                let mut nf = BigUint::one();
                for q in 2..=n as u64 {
                    nf *= BigUint::from(q);
                }
                let mut v = 0u32;
                let pb = BigUint::from(ctx.p);
                while (&nf % &pb).is_zero() {
                    nf /= &pb;
                    v += 1;
                }
                debug_assert_eq!(v, fc.sc[n]);
                let uinv = ctx.inv(&ctx.red(&nf))?;
                for i in 0..=trunc {
                    out[i][n] = ctx.mul(&ff[i], &uinv);
                }
            }
            // multiply by the center weight factor (a plain scalar series)
            let mut res = vec![vec![BigUint::zero(); fc.w]; trunc + 1];
            for (i, row) in out.iter().enumerate() {
                for (j, c) in base.iter().enumerate() {
                    if i + j > trunc || c.is_zero() {
                        continue;
                    }
                    for n in 0..fc.w {
                        let t = ctx.mul(c, &row[n]);
                        res[i + j][n] = ctx.add(&res[i + j][n], &t);
                    }
                }
            }
            for row in res.iter_mut() {
                for c in row.iter_mut() {
                    *c = ctx0.red(c);
                }
            }
            Ok(CharSeriesValue::Family(res))
        }
    }
}

/// The family-disc value t_k = (1+p)^{k-k0} - 1 at which the family
/// specializes to the integral weight k.  Errors when k is not congruent to
/// k0 modulo (p-1) or when t_k is too shallow for the family scale p^m.
pub fn family_t_of_weight(ctx: &Zmod, kappa: &WeightCharacter, k: i64) -> Result<BigUint, WbError> {
    let WeightKind::Family { k0, m, .. } = kappa.kind else {
        return Err(WbError::BadInput("not a family weight".into()));
    };
    if (k - k0).rem_euclid((ctx.p - 1) as i64) != 0 {
        return Err(WbError::BadSpecialization(format!(
            "k = {} is not congruent to k0 = {} mod p-1",
            k, k0
        )));
    }
    let one_p = ctx.from_i64(1 + ctx.p as i64);
    let tk = ctx.sub(&ctx.pow_signed(&one_p, k - k0)?, &BigUint::one());
    if ctx.val(&tk) < m {
        return Err(WbError::BadSpecialization(format!(
            "t_k has valuation {} < family scale m = {}",
            ctx.val(&tk),
            m
        )));
    }
    Ok(tk)
}
