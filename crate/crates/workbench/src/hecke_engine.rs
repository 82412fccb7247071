//! Spaces of p-adic automorphic forms as invariant subspaces of the coset
//! modules, and the Hecke operators U_p, T_l, S_l acting on them.
//!
//! A form is a tuple (phi_i) over the double cosets with phi_i invariant
//! under the finite stabilizer of the representative g_i.  The invariants are
//! cut out as the near-kernel of the stacked (action(kappa_u) - 1) matrix;
//! the certified precision of everything downstream is the defect valuation
//! at which that elimination stopped.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::coset_geometry::{CosetDatum, HeckeCosetList, MatchEntry, OpTag};
use crate::error::WbError;
use crate::padic_arith::{
    fam_add, fam_const, fam_inv, fam_is_zero, fam_mul, fam_scal, fam_sub, kernel_cols, lsq_solve,
    mat_mul, mat_sub, solve_cols, Fam, FamCtx, Mat, Zmod,
};
use crate::quaternion_arith::{m2_from_i64, m2_inv, m2_mul, m2_red, Mat2, PadicSplitting};

/// The arithmetic setting shared by every run: the p-adic splitting of the
/// order and the double-coset combinatorics at Iwahori level.
pub struct Setup {
    pub splitting: PadicSplitting,
    pub datum: CosetDatum,
}

pub fn setup(p: u32, prec: u32) -> Result<Setup, WbError> {
    let splitting = crate::quaternion_arith::split_at_p(p, prec)?;
    let datum = crate::coset_geometry::double_cosets(&splitting)?;
    Ok(Setup { splitting, datum })
}

/// Invariant subspaces, one inclusion matrix per coset.
pub struct AutomorphicSpace {
    /// per-coset module rank
    pub rank: usize,
    /// per coset: rank x dim_i inclusion of the invariants
    pub incs: Vec<Mat>,
    pub dims: Vec<usize>,
    /// defect valuations seen while eliminating, per coset
    pub dvals: Vec<Vec<u32>>,
    /// all results downstream are certified modulo p^cert
    pub cert: u32,
}

impl AutomorphicSpace {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }
}

/// Build the invariant space from an action closure (module-specific).
/// `cutoff` is where the defect elimination stops: directions with defect
/// valuation >= cutoff are accepted as invariant.
pub fn build_space<F>(
    ctx: &Zmod,
    setup: &Setup,
    act: F,
    cutoff: u32,
) -> Result<AutomorphicSpace, WbError>
where
    F: Fn(&Mat2) -> Result<Mat, WbError>,
{
    let mut incs = Vec::new();
    let mut dims = Vec::new();
    let mut dvals = Vec::new();
    let mut cert = ctx.prec;
    let mut rank = 0usize;
    for i in 0..setup.datum.dnum() {
        let stab = setup.datum.stab_iwahori(&setup.splitting, i);
        let mut stacked: Mat = Vec::new();
        for k in &stab {
            let a = act(&m2_red(ctx, k))?;
            rank = a.len();
            let diff = mat_sub(ctx, &a, &ctx.eye(rank));
            stacked.extend(diff);
        }
        let kr = kernel_cols(ctx, &stacked, cutoff);
        cert = cert.min(kr.cert);
        dims.push(if kr.basis.is_empty() {
            0
        } else {
            kr.basis[0].len()
        });
        incs.push(kr.basis);
        dvals.push(kr.dvals);
    }
    Ok(AutomorphicSpace {
        rank,
        incs,
        dims,
        dvals,
        cert,
    })
}

/// A Hecke operator before restriction: dense blocks on the full coset
/// modules, indexed [target coset][source coset].
pub struct FullOperator {
    pub tag: OpTag,
    pub blocks: Vec<Vec<Mat>>,
}

/// Assemble the full-module blocks of U_p or T_l from the match table.
/// For the coset g_i delta_b = gamma g_j kappa the block (i, j) gains the
/// action of A = delta_b kappa^{-1} (U_p) or kappa^{-1} (T_l).
pub fn hecke_full_blocks<F>(
    ctx: &Zmod,
    setup: &Setup,
    list: &HeckeCosetList,
    table: &[Vec<MatchEntry>],
    rank: usize,
    act: F,
) -> Result<FullOperator, WbError>
where
    F: Fn(&Mat2) -> Result<Mat, WbError>,
{
    let dnum = setup.datum.dnum();
    let zero = vec![vec![BigUint::zero(); rank]; rank];
    let mut blocks = vec![vec![zero; dnum]; dnum];
    let tag = match list {
        HeckeCosetList::Up { .. } => OpTag::Up,
        HeckeCosetList::Tl { l, .. } => OpTag::Tl(*l),
        HeckeCosetList::Sl { .. } => {
            return Err(WbError::BadInput(
                "S_l is scalar; it has no block assembly".into(),
            ))
        }
    };
    for (i, row) in table.iter().enumerate() {
        for (b, e) in row.iter().enumerate() {
            let kinv = m2_inv(ctx, &m2_red(ctx, &e.kappa))?;
            let a = match list {
                HeckeCosetList::Up { p } => {
                    let delta = m2_from_i64(ctx, [[*p as i64, b as i64], [0, 1]]);
                    m2_mul(ctx, &delta, &kinv)
                }
                _ => kinv,
            };
            let m = act(&a)?;
            let tgt = &mut blocks[i][e.j];
            for (r, mr) in m.iter().enumerate() {
                for (c, x) in mr.iter().enumerate() {
                    tgt[r][c] = ctx.add(&tgt[r][c], x);
                }
            }
        }
    }
    Ok(FullOperator { tag, blocks })
}

/// Restricted Hecke operator on the invariant space, entries reduced modulo
/// the certified precision.
pub struct HeckeMatrix {
    pub tag: OpTag,
    pub mat: Mat,
    pub cert: u32,
}

pub fn restrict_operator(
    ctx: &Zmod,
    space: &AutomorphicSpace,
    full: &FullOperator,
) -> Result<HeckeMatrix, WbError> {
    let dnum = space.incs.len();
    let total = space.total_dim();
    let mut mat = vec![vec![BigUint::zero(); total]; total];
    let offs: Vec<usize> = space
        .dims
        .iter()
        .scan(0usize, |s, &d| {
            let o = *s;
            *s += d;
            Some(o)
        })
        .collect();
    let cert_mod = ctx.pp(space.cert.min(ctx.prec));
    for i in 0..dnum {
        if space.dims[i] == 0 {
            continue;
        }
        for j in 0..dnum {
            if space.dims[j] == 0 {
                continue;
            }
            let b = mat_mul(ctx, &full.blocks[i][j], &space.incs[j]);
            let (x, _res) = solve_cols(ctx, &space.incs[i], &b)?;
            for r in 0..space.dims[i] {
                for c in 0..space.dims[j] {
                    mat[offs[i] + r][offs[j] + c] = &x[r][c] % &cert_mod;
                }
            }
        }
    }
    Ok(HeckeMatrix {
        tag: full.tag,
        mat,
        cert: space.cert.min(ctx.prec),
    })
}

/// S_l on the invariant space: the central scalar kappa(l) (l^{k-2} at an
/// integral weight).
pub fn scalar_operator(
    ctx: &Zmod,
    space: &AutomorphicSpace,
    l: u32,
    scalar: &BigUint,
) -> HeckeMatrix {
    let total = space.total_dim();
    let cert_mod = ctx.pp(space.cert.min(ctx.prec));
    let mut mat = vec![vec![BigUint::zero(); total]; total];
    for (i, row) in mat.iter_mut().enumerate() {
        row[i] = scalar % &cert_mod;
    }
    HeckeMatrix {
        tag: OpTag::Sl(l),
        mat,
        cert: space.cert.min(ctx.prec),
    }
}

/// Flatten the blocks into one (dnum*rank) square matrix.
fn full_matrix(full: &FullOperator, rank: usize) -> Mat {
    let dnum = full.blocks.len();
    let n = dnum * rank;
    let mut out = vec![vec![BigUint::zero(); n]; n];
    for (i, row) in full.blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            for r in 0..rank {
                for c in 0..rank {
                    out[i * rank + r][j * rank + c] = b[r][c].clone();
                }
            }
        }
    }
    out
}

/// Block-diagonal inclusion of the invariant space into the full module.
fn full_inclusion(space: &AutomorphicSpace) -> Mat {
    let dnum = space.incs.len();
    let n = dnum * space.rank;
    let total = space.total_dim();
    let mut out = vec![vec![BigUint::zero(); total]; n];
    let mut off = 0usize;
    for (i, inc) in space.incs.iter().enumerate() {
        for (r, ir) in inc.iter().enumerate() {
            for (c, x) in ir.iter().enumerate() {
                out[i * space.rank + r][off + c] = x.clone();
            }
        }
        off += space.dims[i];
    }
    out
}

/// Digits to which two full operators commute on the invariant space:
/// the minimum valuation of (AB - BA) applied to the inclusion columns.
/// Evaluating in the full module avoids the compression loss of comparing
/// the restricted matrices directly.
pub fn commutation_digits(
    ctx: &Zmod,
    space: &AutomorphicSpace,
    a: &FullOperator,
    b: &FullOperator,
) -> u32 {
    let am = full_matrix(a, space.rank);
    let bm = full_matrix(b, space.rank);
    let inc = full_inclusion(space);
    let ab = mat_mul(ctx, &am, &mat_mul(ctx, &bm, &inc));
    let ba = mat_mul(ctx, &bm, &mat_mul(ctx, &am, &inc));
    crate::padic_arith::mat_min_val(ctx, &mat_sub(ctx, &ab, &ba))
}

// ---------------------------------------------------------------------------
// Family version: invariants and U_p over the scaled coefficient ring,
// computed order by order in the disc coordinate.
// ---------------------------------------------------------------------------

pub struct FamilySpace {
    pub rank: usize,
    /// per coset: rank x dim_i matrix of family coefficients
    pub incs: Vec<Vec<Vec<Fam>>>,
    pub dims: Vec<usize>,
    pub cert: u32,
    /// residual valuation floor of the t-order lifting solves
    pub lift_floor: u32,
}

/// Build the family invariant space: exact kernel at t = 0, then lift each
/// basis vector t-order by t-order through the scaled convolution
///   S_0 v_d = - sum_{e<d} p^{sc[d]-sc[e]-sc[d-e]} S_{d-e} v_e.
/// The lifting solves are rank-tolerant: near-kernel pivots deeper than
/// `rank_tol` are left free, which floors the residual at ~rank_tol digits.
pub fn build_family_space<F>(
    ctx: &Zmod,
    fc: &FamCtx,
    setup: &Setup,
    act: F,
    cutoff: u32,
    rank_tol: u32,
) -> Result<FamilySpace, WbError>
where
    F: Fn(&Mat2) -> Result<Vec<Vec<Fam>>, WbError>,
{
    let mut incs = Vec::new();
    let mut dims = Vec::new();
    let mut cert = ctx.prec;
    let mut lift_floor = ctx.prec;
    let mut rank = 0usize;
    for i in 0..setup.datum.dnum() {
        let stab = setup.datum.stab_iwahori(&setup.splitting, i);
        let mut stacked: Vec<Vec<Fam>> = Vec::new();
        for k in &stab {
            let a = act(&m2_red(ctx, k))?;
            rank = a.len();
            for (r, arow) in a.iter().enumerate() {
                let mut row = arow.clone();
                row[r][0] = ctx.sub(&row[r][0], &BigUint::one());
                stacked.push(row);
            }
        }
        let rows = stacked.len();
        // scalar coefficient matrices S_e
        let s_mats: Vec<Mat> = (0..fc.w)
            .map(|e| {
                (0..rows)
                    .map(|r| (0..rank).map(|c| stacked[r][c][e].clone()).collect())
                    .collect()
            })
            .collect();
        let kr = kernel_cols(ctx, &s_mats[0], cutoff);
        cert = cert.min(kr.cert);
        let dim = if kr.basis.is_empty() {
            0
        } else {
            kr.basis[0].len()
        };
        // vs[e] = order-e part of the lifted basis, rank x dim
        let mut vs: Vec<Mat> = vec![kr.basis.clone()];
        for dd in 1..fc.w {
            let mut vd = vec![vec![BigUint::zero(); dim]; rank];
            for c in 0..dim {
                let mut rhs = vec![BigUint::zero(); rows];
                for e in 0..dd {
                    let o = dd - e;
                    let scale = ctx.pp(fc.sc[dd] - fc.sc[e] - fc.sc[o]);
                    for (r, srow) in s_mats[o].iter().enumerate() {
                        let mut acc = BigUint::zero();
                        for (cc, x) in srow.iter().enumerate() {
                            if x.is_zero() || vs[e][cc][c].is_zero() {
                                continue;
                            }
                            acc = (&acc + x * &vs[e][cc][c]) % &ctx.modulus;
                        }
                        let t = ctx.mul(&acc, &scale);
                        rhs[r] = ctx.sub(&rhs[r], &t);
                    }
                }
                let (x, res) = lsq_solve(ctx, &s_mats[0], &rhs, rank_tol);
                lift_floor = lift_floor.min(res);
                for (r, xv) in x.iter().enumerate() {
                    vd[r][c] = xv.clone();
                }
            }
            vs.push(vd);
        }
        let inc: Vec<Vec<Fam>> = (0..rank)
            .map(|r| {
                (0..dim)
                    .map(|c| (0..fc.w).map(|e| vs[e][r][c].clone()).collect())
                    .collect()
            })
            .collect();
        dims.push(dim);
        incs.push(inc);
    }
    Ok(FamilySpace {
        rank,
        incs,
        dims,
        cert,
        lift_floor,
    })
}

impl FamilySpace {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }
}

pub fn fam_mat_mul(ctx: &Zmod, fc: &FamCtx, a: &[Vec<Fam>], b: &[Vec<Fam>]) -> Vec<Vec<Fam>> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![vec![BigUint::zero(); fc.w]; m]; n];
    for i in 0..n {
        for (kk, brow) in b.iter().enumerate().take(k) {
            if fam_is_zero(&a[i][kk]) {
                continue;
            }
            for j in 0..m {
                if fam_is_zero(&brow[j]) {
                    continue;
                }
                let t = fam_mul(ctx, fc, &a[i][kk], &brow[j]);
                out[i][j] = fam_add(ctx, &out[i][j], &t);
            }
        }
    }
    out
}

/// Solve inc * X = B over the family ring; pivots must be units at t = 0.
pub fn fam_solve_cols(
    ctx: &Zmod,
    fc: &FamCtx,
    inc: &[Vec<Fam>],
    b: &[Vec<Fam>],
) -> Result<Vec<Vec<Fam>>, WbError> {
    let n = inc.len();
    let r = if n == 0 { 0 } else { inc[0].len() };
    let m = if n == 0 { 0 } else { b[0].len() };
    let mut a: Vec<Vec<Fam>> = (0..n)
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
            if ctx.val(&row[col][0]) == 0 {
                best = Some(i0);
                break;
            }
        }
        let best = best.ok_or_else(|| {
            WbError::PrecisionCollapse(format!("fam_solve_cols: no unit pivot in column {}", col))
        })?;
        used[best] = true;
        piv_rows.push(best);
        let inv0 = fam_inv(ctx, fc, &a[best][col])?;
        for j in 0..r + m {
            a[best][j] = fam_mul(ctx, fc, &a[best][j], &inv0);
        }
        for i0 in 0..n {
            if i0 == best {
                continue;
            }
            let f = a[i0][col].clone();
            if fam_is_zero(&f) {
                continue;
            }
            for j in 0..r + m {
                let t = fam_mul(ctx, fc, &f, &a[best][j]);
                a[i0][j] = fam_sub(ctx, &a[i0][j], &t);
            }
        }
    }
    Ok(piv_rows.iter().map(|&i0| a[i0][r..].to_vec()).collect())
}

/// Family U_p on the family invariant space, as one total-dim matrix over
/// the family ring.
pub fn family_hecke_up<F>(
    ctx: &Zmod,
    fc: &FamCtx,
    setup: &Setup,
    space: &FamilySpace,
    table: &[Vec<MatchEntry>],
    act: F,
) -> Result<Vec<Vec<Fam>>, WbError>
where
    F: Fn(&Mat2) -> Result<Vec<Vec<Fam>>, WbError>,
{
    let dnum = setup.datum.dnum();
    let p = ctx.p;
    let zero = vec![vec![fam_const(fc, BigUint::zero()); space.rank]; space.rank];
    let mut blocks = vec![vec![zero; dnum]; dnum];
    for (i, row) in table.iter().enumerate() {
        for (b, e) in row.iter().enumerate() {
            let kinv = m2_inv(ctx, &m2_red(ctx, &e.kappa))?;
            let delta = m2_from_i64(ctx, [[p as i64, b as i64], [0, 1]]);
            let a = m2_mul(ctx, &delta, &kinv);
            let m = act(&a)?;
            let tgt = &mut blocks[i][e.j];
            for (r, mr) in m.iter().enumerate() {
                for (c, x) in mr.iter().enumerate() {
                    tgt[r][c] = fam_add(ctx, &tgt[r][c], x);
                }
            }
        }
    }
    let total = space.total_dim();
    let mut mat = vec![vec![fam_const(fc, BigUint::zero()); total]; total];
    let offs: Vec<usize> = space
        .dims
        .iter()
        .scan(0usize, |s, &d| {
            let o = *s;
            *s += d;
            Some(o)
        })
        .collect();
    for i in 0..dnum {
        if space.dims[i] == 0 {
            continue;
        }
        for j in 0..dnum {
            if space.dims[j] == 0 {
                continue;
            }
            let bm = fam_mat_mul(ctx, fc, &blocks[i][j], &space.incs[j]);
            let x = fam_solve_cols(ctx, fc, &space.incs[i], &bm)?;
            for r in 0..space.dims[i] {
                for c in 0..space.dims[j] {
                    mat[offs[i] + r][offs[j] + c] = x[r][c].clone();
                }
            }
        }
    }
    Ok(mat)
}

/// Specialize a family matrix at a disc value t_k.
pub fn fam_matrix_spec(
    ctx: &Zmod,
    fc: &FamCtx,
    m: &[Vec<Fam>],
    tk: &BigUint,
) -> Result<Mat, WbError> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|x| crate::padic_arith::fam_spec(ctx, fc, x, tk))
                .collect()
        })
        .collect()
}

/// Scale a family matrix entry-wise by a scalar (used in tests).
pub fn fam_matrix_scal(ctx: &Zmod, m: &[Vec<Fam>], c: &BigUint) -> Vec<Vec<Fam>> {
    m.iter()
        .map(|row| row.iter().map(|x| fam_scal(ctx, c, x)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff_modules::{action_classical, action_v0};
    use crate::coset_geometry::{brandt_match, hecke_cosets};

    /// The full fixed-weight pipeline at small size, used as a shared fixture.
    fn weight_space(
        k: i64,
        m_trunc: usize,
        n: u32,
        nw: u32,
        cutoff: u32,
    ) -> (Zmod, Setup, AutomorphicSpace) {
        let su = setup(3, n).unwrap();
        let ctx = Zmod::new(3, nw);
        let sp = build_space(
            &ctx,
            &su,
            |g| action_v0(&ctx, g, k - 2, 0, m_trunc, false),
            cutoff,
        )
        .unwrap();
        (ctx, su, sp)
    }

    #[test]
    fn weight2_constant_is_invariant() {
        let (ctx, _su, sp) = weight_space(2, 8, 30, 25, 15);
        // the constant function lies in the invariants: check that e_0 is in
        // the column span by solving
        assert!(sp.total_dim() >= 1);
        let mut e0 = vec![vec![BigUint::zero(); 1]; sp.rank];
        e0[0][0] = BigUint::one();
        let (_x, res) = solve_cols(&ctx, &sp.incs[0], &e0).unwrap();
        assert!(res >= sp.cert.min(15), "residual {}", res);
    }

    #[test]
    fn up_on_weight2_fixes_constants() {
        // eigenvalue of U_p on the constant function is p at weight 2
        let (ctx, su, sp) = weight_space(2, 10, 30, 25, 15);
        let list = hecke_cosets(OpTag::Up, 3, 0).unwrap();
        let table = brandt_match(&su.datum, &su.splitting, &list, 0).unwrap();
        let full = hecke_full_blocks(&ctx, &su, &list, &table, sp.rank, |g| {
            action_v0(&ctx, g, 0, 0, 10, false)
        })
        .unwrap();
        let h = restrict_operator(&ctx, &sp, &full).unwrap();
        // the constant function is the invariant with unit first coordinate;
        // U_p multiplies it by p: the matrix column acting on it has trace-like
        // eigenvalue p.  Verify via the full module: U(e_0-span) = p * span.
        let inc = full_inclusion(&sp);
        let um = full_matrix(&full, sp.rank);
        let ui = mat_mul(&ctx, &um, &inc);
        // find the invariant column corresponding to the constant: dim 1 here
        assert_eq!(sp.total_dim(), 1);
        assert_eq!(h.mat.len(), 1);
        let pe = ctx.from_i64(3);
        // U inc = inc * h; for dim 1, h[0][0] should be p mod p^cert
        let want = &pe % &ctx.pp(h.cert);
        assert_eq!(h.mat[0][0], want);
        let _ = ui;
    }

    #[test]
    fn tl_on_weight2_is_l_plus_one() {
        let (ctx, su, sp) = weight_space(2, 10, 30, 25, 15);
        for l in [5u32, 7] {
            let list = hecke_cosets(OpTag::Tl(l), 3, l).unwrap();
            let table = brandt_match(&su.datum, &su.splitting, &list, 0).unwrap();
            let full = hecke_full_blocks(&ctx, &su, &list, &table, sp.rank, |g| {
                action_v0(&ctx, g, 0, 0, 10, false)
            })
            .unwrap();
            let h = restrict_operator(&ctx, &sp, &full).unwrap();
            assert_eq!(h.mat.len(), 1);
            let want = &ctx.from_i64(l as i64 + 1) % &ctx.pp(h.cert);
            assert_eq!(h.mat[0][0], want, "T_{} on weight 2", l);
        }
    }

    #[test]
    fn classical_weight4_dimension() {
        // classical invariants at k = 4 have dimension 1 (Eisenstein-like line)
        let su = setup(3, 30).unwrap();
        let ctx = Zmod::new(3, 28);
        let sp = build_space(&ctx, &su, |g| action_classical(&ctx, g, 2, 0, false), 28).unwrap();
        assert_eq!(sp.total_dim(), 1);
    }

    #[test]
    fn classical_odd_weight_vanishes() {
        // -1 is in every stabilizer and acts by (-1)^{k-2}: odd k kills all
        let su = setup(3, 30).unwrap();
        let ctx = Zmod::new(3, 28);
        let sp = build_space(&ctx, &su, |g| action_classical(&ctx, g, 1, 0, false), 28).unwrap();
        assert_eq!(sp.total_dim(), 0);
    }

    #[test]
    fn commutation_in_full_module() {
        let (ctx, su, sp) = weight_space(4, 25, 45, 40, 25);
        let ul = hecke_cosets(OpTag::Up, 3, 0).unwrap();
        let tl = hecke_cosets(OpTag::Tl(5), 3, 5).unwrap();
        let ut = brandt_match(&su.datum, &su.splitting, &ul, 0).unwrap();
        let tt = brandt_match(&su.datum, &su.splitting, &tl, 0).unwrap();
        let act = |g: &Mat2| action_v0(&ctx, g, 2, 0, 25, false);
        let fu = hecke_full_blocks(&ctx, &su, &ul, &ut, sp.rank, act).unwrap();
        let ft = hecke_full_blocks(&ctx, &su, &tl, &tt, sp.rank, act).unwrap();
        let digits = commutation_digits(&ctx, &sp, &fu, &ft);
        // small truncation: expect clearly nontrivial commutation depth
        assert!(digits >= 10, "only {} digits", digits);
    }

    #[test]
    fn family_space_t0_matches_fixed_weight() {
        use crate::weight_space::WeightCharacter;
        let su = setup(3, 40).unwrap();
        let ctx = Zmod::new(3, 36);
        let m_trunc = 12;
        let kap = WeightCharacter::family(3, 4, 2, 4);
        let fc = kap.fam_ctx().unwrap();
        let fsp = build_family_space(
            &ctx,
            &fc,
            &su,
            |g| crate::coeff_modules::action_family_v0(&ctx, &fc, &kap, g, m_trunc),
            20,
            8,
        )
        .unwrap();
        let sp = build_space(
            &ctx,
            &su,
            |g| action_v0(&ctx, g, 2, 0, m_trunc, false),
            20,
        )
        .unwrap();
        assert_eq!(fsp.dims, sp.dims);
    }
}
