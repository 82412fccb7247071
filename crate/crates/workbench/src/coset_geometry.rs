//! The finite double-coset data at Iwahori level for the class-number-one
//! Hurwitz order: orbits of the unit group on P^1(F_p), representatives with
//! matrix lifts, stabilizers, and the coset decompositions of the U_p, T_l,
//! S_l double cosets together with the Brandt matching bookkeeping.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::WbError;
use crate::padic_arith::Zmod;
use crate::quaternion_arith::{
    enumerate_by_norm, in_order, m2_adj, m2_det, m2_from_i64, m2_inv, m2_mul, m2_red, qconj, qmul,
    qnrd, unit_group, Mat2, PadicSplitting, Quat,
};

/// Point of P^1(F_p): (x, 1) for x in 0..p, or (1, 0).
pub type ProjPoint = (u32, u32);

#[derive(Clone, Debug)]
pub struct CosetDatum {
    pub p: u32,
    /// one representative point per orbit
    pub reps: Vec<ProjPoint>,
    pub orbits: Vec<Vec<ProjPoint>>,
    /// integral lift of each representative (first column reduces to the point)
    pub glifts: Vec<[[i64; 2]; 2]>,
    /// stabilizer of each representative inside the 24 units
    pub stabs: Vec<Vec<Quat>>,
}

pub fn act_point(ctx_p: u32, m: &Mat2, pt: ProjPoint) -> ProjPoint {
    let p = BigUint::from(ctx_p);
    let x = BigUint::from(pt.0);
    let y = BigUint::from(pt.1);
    let u = (&m[0][0] * &x + &m[0][1] * &y) % &p;
    let v = (&m[1][0] * &x + &m[1][1] * &y) % &p;
    if !v.is_zero() {
        let vinv = Zmod::new(ctx_p, 1).inv(&v).unwrap();
        let xr = (u * vinv) % &p;
        (xr.to_u32_digits().first().copied().unwrap_or(0), 1)
    } else {
        assert!(!u.is_zero());
        (1, 0)
    }
}

fn proj_line(p: u32) -> Vec<ProjPoint> {
    let mut pts: Vec<ProjPoint> = (0..p).map(|x| (x, 1)).collect();
    pts.push((1, 0));
    pts
}

fn lift(pt: ProjPoint) -> [[i64; 2]; 2] {
    match pt {
        (1, 0) => [[1, 0], [0, 1]],
        (x, 1) => [[x as i64, 1], [1, 0]],
        _ => unreachable!(),
    }
}

/// Orbits of the projective unit-group action on P^1(F_p): the double-coset
/// set of the quaternionic form at Iwahori level (class number one).
pub fn double_cosets(splitting: &PadicSplitting) -> Result<CosetDatum, WbError> {
    let p = splitting.ctx.p;
    if splitting.ctx.prec < 1 {
        return Err(WbError::BadInput("splitting precision < 1".into()));
    }
    let units = unit_group();
    let unit_mats: Vec<Mat2> = units.iter().map(|&u| splitting.mat_of(u)).collect();
    let mut orbits: Vec<Vec<ProjPoint>> = Vec::new();
    let mut seen: Vec<ProjPoint> = Vec::new();
    for pt in proj_line(p) {
        if seen.contains(&pt) {
            continue;
        }
        let mut orb = vec![pt];
        let mut stack = vec![pt];
        while let Some(q) = stack.pop() {
            for m in &unit_mats {
                let q1 = act_point(p, m, q);
                if !orb.contains(&q1) {
                    orb.push(q1);
                    stack.push(q1);
                }
            }
        }
        orb.sort();
        seen.extend(orb.iter().copied());
        orbits.push(orb);
    }
    let reps: Vec<ProjPoint> = orbits.iter().map(|o| o[0]).collect();
    let glifts: Vec<[[i64; 2]; 2]> = reps.iter().map(|&r| lift(r)).collect();
    let stabs: Vec<Vec<Quat>> = reps
        .iter()
        .map(|&r| {
            units
                .iter()
                .zip(&unit_mats)
                .filter(|(_, m)| act_point(p, m, r) == r)
                .map(|(&u, _)| u)
                .collect()
        })
        .collect();
    Ok(CosetDatum {
        p,
        reps,
        orbits,
        glifts,
        stabs,
    })
}

impl CosetDatum {
    pub fn dnum(&self) -> usize {
        self.reps.len()
    }

    /// Iwahori matrix images g_i^{-1} u g_i of the stabilizer elements.
    pub fn stab_iwahori(&self, splitting: &PadicSplitting, i: usize) -> Vec<Mat2> {
        let ctx = &splitting.ctx;
        let gi = m2_from_i64(ctx, self.glifts[i]);
        let gi_inv = m2_inv(ctx, &gi).unwrap();
        self.stabs[i]
            .iter()
            .map(|&u| m2_mul(ctx, &m2_mul(ctx, &gi_inv, &splitting.mat_of(u)), &gi))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum HeckeCosetList {
    /// U_p: local representatives (p, b; 0, 1), b = 0..p-1
    Up { p: u32 },
    /// T_l: the norm-l order elements partitioned into l+1 right-unit classes
    Tl { l: u32, classes: Vec<Vec<Quat>> },
    /// S_l: the central element l
    Sl { l: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpTag {
    Up,
    Tl(u32),
    Sl(u32),
}

impl std::fmt::Display for OpTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OpTag::Up => write!(f, "U_p"),
            OpTag::Tl(l) => write!(f, "T_{}", l),
            OpTag::Sl(l) => write!(f, "S_{}", l),
        }
    }
}

/// Partition the norm-l order elements into right-unit classes: z and g are
/// in the same class iff conj(z) * g is divisible by l in the order
/// (equivalently they generate the same left ideal).
pub fn tl_classes(l: u32) -> Vec<Vec<Quat>> {
    let els = enumerate_by_norm(l as i64);
    let mut classes: Vec<Vec<Quat>> = Vec::new();
    for g in els {
        let mut placed = false;
        for cl in classes.iter_mut() {
            let z = cl[0];
            let pr = qmul(qconj(z), g);
            // same class iff conj(z) g = l * unit
            let m = l as i64;
            let div = pr.0 % m == 0 && pr.1 % m == 0 && pr.2 % m == 0 && pr.3 % m == 0;
            let u = (pr.0 / m, pr.1 / m, pr.2 / m, pr.3 / m);
            if div && qnrd(u) == 1 && in_order(u) {
                cl.push(g);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![g]);
        }
    }
    classes
}

pub fn hecke_cosets(tag: OpTag, p: u32, l: u32) -> Result<HeckeCosetList, WbError> {
    match tag {
        OpTag::Up => Ok(HeckeCosetList::Up { p }),
        OpTag::Tl(_) => {
            if l % 2 == 0 || l == p {
                return Err(WbError::BadInput("T_l needs l prime to 2p".into()));
            }
            let classes = tl_classes(l);
            assert_eq!(
                classes.len(),
                l as usize + 1,
                "norm-{} elements must fall into l+1 right-unit classes",
                l
            );
            Ok(HeckeCosetList::Tl { l, classes })
        }
        OpTag::Sl(_) => {
            if l % 2 == 0 || l == p {
                return Err(WbError::BadInput("S_l needs l prime to 2p".into()));
            }
            Ok(HeckeCosetList::Sl { l })
        }
    }
}

/// One resolved coset: g_i * delta_b = gamma * g_j * kappa as classes.
#[derive(Clone, Debug)]
pub struct MatchEntry {
    pub j: usize,
    pub gamma: Quat,
    /// Iwahori matrix kappa, known to one digit less than the splitting
    pub kappa: Mat2,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic seed-dependent permutation of the candidate search order.
fn permuted<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut out: Vec<T> = items.to_vec();
    let mut st = seed;
    if seed == 0 {
        return out;
    }
    for i in (1..out.len()).rev() {
        let j = (splitmix64(&mut st) % (i as u64 + 1)) as usize;
        out.swap(i, j);
    }
    out
}

/// Resolve (i, delta_b) for U_p: find a global gamma of norm p and Iwahori
/// kappa with g_i delta_b = gamma g_j kappa.  The returned kappa lives at one
/// digit below the splitting precision (one division by p happens).
pub fn match_up(
    datum: &CosetDatum,
    splitting: &PadicSplitting,
    i: usize,
    b: u32,
    seed: u64,
) -> Result<MatchEntry, WbError> {
    let ctx = &splitting.ctx;
    let p = ctx.p;
    let ctx1 = Zmod::new(p, ctx.prec - 1);
    let gi = m2_from_i64(ctx, datum.glifts[i]);
    let delta = m2_from_i64(ctx, [[p as i64, b as i64], [0, 1]]);
    let x = m2_mul(ctx, &gi, &delta);
    let candidates = permuted(&enumerate_by_norm(p as i64), seed);
    for gamma in candidates {
        let g = splitting.mat_of(gamma);
        let adj = m2_adj(ctx, &g);
        let a = m2_mul(ctx, &adj, &x); // = p * gamma^{-1} g_i delta
        if a.iter().flatten().any(|e| ctx.val(e) == 0) {
            continue;
        }
        let bmat: Mat2 = [
            [ctx1.red(&ctx.shift_down(&a[0][0], 1)), ctx1.red(&ctx.shift_down(&a[0][1], 1))],
            [ctx1.red(&ctx.shift_down(&a[1][0], 1)), ctx1.red(&ctx.shift_down(&a[1][1], 1))],
        ];
        for (j, &gl) in datum.glifts.iter().enumerate() {
            let gj_inv = m2_inv(&ctx1, &m2_from_i64(&ctx1, gl))?;
            let k = m2_mul(&ctx1, &gj_inv, &bmat);
            if ctx1.val(&m2_det(&ctx1, &k)) == 0 && ctx1.val(&k[1][0]) >= 1 {
                return Ok(MatchEntry { j, gamma, kappa: k });
            }
        }
    }
    Err(WbError::MatchExhausted(i, b as usize))
}

/// Resolve (i, class b) for T_l: pick a class member gamma whose inverse
/// carries g_i's point to a representative, with Iwahori
/// kappa = g_j^{-1} gamma_p^{-1} g_i.
pub fn match_tl(
    datum: &CosetDatum,
    splitting: &PadicSplitting,
    class: &[Quat],
    i: usize,
    seed: u64,
) -> Result<MatchEntry, WbError> {
    let ctx = &splitting.ctx;
    let p = ctx.p;
    let ctx1 = Zmod::new(p, ctx.prec - 1);
    let gi = m2_from_i64(&ctx1, datum.glifts[i]);
    for gamma in permuted(class, seed) {
        let g = m2_red(&ctx1, &splitting.mat_of(gamma));
        let adj = m2_adj(&ctx1, &g);
        let mm = m2_mul(&ctx1, &adj, &gi);
        let x0 = &mm[0][0] % BigUint::from(p);
        let y0 = &mm[1][0] % BigUint::from(p);
        if x0.is_zero() && y0.is_zero() {
            continue;
        }
        let pt: ProjPoint = if y0.is_zero() {
            (1, 0)
        } else {
            let yinv = Zmod::new(p, 1).inv(&y0).unwrap();
            let xr = (x0 * yinv) % BigUint::from(p);
            (xr.to_u32_digits().first().copied().unwrap_or(0), 1)
        };
        let Some(j) = datum.reps.iter().position(|&r| r == pt) else {
            continue;
        };
        let gj_inv = m2_inv(&ctx1, &m2_from_i64(&ctx1, datum.glifts[j]))?;
        let ginv = m2_inv(&ctx1, &g)?;
        let k = m2_mul(&ctx1, &m2_mul(&ctx1, &gj_inv, &ginv), &gi);
        if ctx1.val(&k[1][0]) >= 1 {
            return Ok(MatchEntry { j, gamma, kappa: k });
        }
    }
    Err(WbError::MatchExhausted(i, 0))
}

/// The full match table for an operator: entry [i][b].
pub fn brandt_match(
    datum: &CosetDatum,
    splitting: &PadicSplitting,
    list: &HeckeCosetList,
    seed: u64,
) -> Result<Vec<Vec<MatchEntry>>, WbError> {
    let mut table = Vec::with_capacity(datum.dnum());
    match list {
        HeckeCosetList::Up { p } => {
            for i in 0..datum.dnum() {
                let mut row = Vec::with_capacity(*p as usize);
                for b in 0..*p {
                    row.push(match_up(datum, splitting, i, b, seed)?);
                }
                table.push(row);
            }
        }
        HeckeCosetList::Tl { classes, .. } => {
            for i in 0..datum.dnum() {
                let mut row = Vec::with_capacity(classes.len());
                for cl in classes {
                    row.push(match_tl(datum, splitting, cl, i, seed)?);
                }
                table.push(row);
            }
        }
        HeckeCosetList::Sl { .. } => {
            // central: trivial matching
            for i in 0..datum.dnum() {
                table.push(vec![MatchEntry {
                    j: i,
                    gamma: (2, 0, 0, 0),
                    kappa: m2_from_i64(&Zmod::new(splitting.ctx.p, splitting.ctx.prec - 1), [[1, 0], [0, 1]]),
                }]);
            }
        }
    }
    Ok(table)
}
