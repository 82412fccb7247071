//! Exact arithmetic in the definite quaternion algebra of discriminant 2
//! (i^2 = j^2 = -1, ij = k = -ji) with the Hurwitz maximal order, plus the
//! 2x2 matrix splitting at an odd prime p.
//!
//! Elements are stored in doubled coordinates: (a,b,c,d) means
//! (a + b i + c j + d k)/2, which is in the Hurwitz order iff all four
//! coordinates share a parity.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::WbError;
use crate::padic_arith::Zmod;

/// Doubled coordinates of (a + bi + cj + dk)/2.
pub type Quat = (i64, i64, i64, i64);

pub fn qmul(x: Quat, y: Quat) -> Quat {
    let (a1, b1, c1, d1) = x;
    let (a2, b2, c2, d2) = y;
    let a = a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2;
    let b = a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2;
    let c = a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2;
    let d = a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2;
    debug_assert!(a % 2 == 0 && b % 2 == 0 && c % 2 == 0 && d % 2 == 0);
    (a / 2, b / 2, c / 2, d / 2)
}

pub fn qconj(x: Quat) -> Quat {
    (x.0, -x.1, -x.2, -x.3)
}

/// Reduced norm (positive integer for order elements).
pub fn qnrd(x: Quat) -> i64 {
    let n4 = x.0 * x.0 + x.1 * x.1 + x.2 * x.2 + x.3 * x.3;
    debug_assert!(n4 % 4 == 0);
    n4 / 4
}

/// Reduced trace.
pub fn qtrd(x: Quat) -> i64 {
    x.0
}

pub fn in_order(x: Quat) -> bool {
    let par = x.0.rem_euclid(2);
    x.1.rem_euclid(2) == par && x.2.rem_euclid(2) == par && x.3.rem_euclid(2) == par
}

/// All Hurwitz order elements of reduced norm n, by brute force over the
/// bounded coordinate box.
pub fn enumerate_by_norm(n: i64) -> Vec<Quat> {
    assert!(n >= 1);
    let target = 4 * n;
    let bound = (target as f64).sqrt() as i64 + 1;
    let mut out = Vec::new();
    for a in -bound..=bound {
        let ra = target - a * a;
        if ra < 0 {
            continue;
        }
        for b in -bound..=bound {
            let rb = ra - b * b;
            if rb < 0 {
                continue;
            }
            for c in -bound..=bound {
                let rc = rb - c * c;
                if rc < 0 {
                    continue;
                }
                let d2 = rc;
                let d = (d2 as f64).sqrt() as i64;
                for dd in [d - 1, d, d + 1, -(d - 1), -d, -(d + 1)] {
                    if dd * dd == d2 && in_order((a, b, c, dd)) {
                        out.push((a, b, c, dd));
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// The 24 Hurwitz units.
pub fn unit_group() -> Vec<Quat> {
    enumerate_by_norm(1)
}

/// Splitting of the order at an odd prime: i -> [[0,-1],[1,0]],
/// j -> [[r,t],[t,-r]] with r^2 + t^2 + 1 = 0 mod p^N.
#[derive(Clone, Debug)]
pub struct PadicSplitting {
    pub ctx: Zmod,
    pub r: BigUint,
    pub t: BigUint,
}

pub fn split_at_p(p: u32, prec: u32) -> Result<PadicSplitting, WbError> {
    if p < 3 || p % 2 == 0 {
        return Err(WbError::BadInput("splitting needs an odd prime".into()));
    }
    let ctx = Zmod::new(p, prec);
    // seed mod p, then Hensel-lift the coordinate whose derivative is a unit
    let mut found = None;
    'outer: for r0 in 0..p {
        for t0 in 0..p {
            if (r0 * r0 + t0 * t0 + 1) % p == 0 {
                found = Some((r0 as u64, t0 as u64));
                break 'outer;
            }
        }
    }
    let (r0, t0) = found.expect("r^2+t^2+1 = 0 mod p is always solvable for odd p");
    let mut r = BigUint::from(r0);
    let mut t = BigUint::from(t0);
    let mut digits = 1u32;
    while digits < prec {
        digits = (digits * 2).min(prec);
        let step = Zmod::new(p, digits);
        r = step.red(&r);
        t = step.red(&t);
        let f = step.red(&(&r * &r + &t * &t + BigUint::one()));
        if step.val(&r) == 0 {
            let d = step.inv(&step.red(&(BigUint::from(2u32) * &r)))?;
            r = step.sub(&r, &step.mul(&f, &d));
        } else {
            let d = step.inv(&step.red(&(BigUint::from(2u32) * &t)))?;
            t = step.sub(&t, &step.mul(&f, &d));
        }
    }
    let check = ctx.red(&(&r * &r + &t * &t + BigUint::one()));
    assert!(check.is_zero() || ctx.val(&check) >= prec);
    Ok(PadicSplitting { ctx, r, t })
}

impl PadicSplitting {
    /// Matrix image of a quaternion, entries mod p^prec.
    pub fn mat_of(&self, x: Quat) -> [[BigUint; 2]; 2] {
        let ctx = &self.ctx;
        let (a, b, c, d) = x;
        let r = BigInt::from(self.r.clone());
        let t = BigInt::from(self.t.clone());
        // images: 1 -> I, i -> [[0,-1],[1,0]], j -> [[r,t],[t,-r]],
        // k = i*j -> [[-t,r],[r,t]]
        let e00 = BigInt::from(a) + BigInt::from(c) * &r - BigInt::from(d) * &t;
        let e01 = BigInt::from(-b) + BigInt::from(c) * &t + BigInt::from(d) * &r;
        let e10 = BigInt::from(b) + BigInt::from(c) * &t + BigInt::from(d) * &r;
        let e11 = BigInt::from(a) - BigInt::from(c) * &r + BigInt::from(d) * &t;
        let inv2 = ctx.inv(&BigUint::from(2u32)).expect("p odd");
        let f = |e: BigInt| ctx.mul(&ctx.red_int(&e), &inv2);
        [[f(e00), f(e01)], [f(e10), f(e11)]]
    }
}

// small 2x2 helpers over a Zmod, used by the coset machinery

pub type Mat2 = [[BigUint; 2]; 2];

pub fn m2_mul(ctx: &Zmod, a: &Mat2, b: &Mat2) -> Mat2 {
    let f = |i: usize, j: usize| ctx.add(&ctx.mul(&a[i][0], &b[0][j]), &ctx.mul(&a[i][1], &b[1][j]));
    [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]]
}

pub fn m2_det(ctx: &Zmod, a: &Mat2) -> BigUint {
    ctx.sub(&ctx.mul(&a[0][0], &a[1][1]), &ctx.mul(&a[0][1], &a[1][0]))
}

pub fn m2_adj(ctx: &Zmod, a: &Mat2) -> Mat2 {
    [
        [a[1][1].clone(), ctx.neg(&a[0][1])],
        [ctx.neg(&a[1][0]), a[0][0].clone()],
    ]
}

pub fn m2_inv(ctx: &Zmod, a: &Mat2) -> Result<Mat2, WbError> {
    let dinv = ctx.inv(&m2_det(ctx, a))?;
    let adj = m2_adj(ctx, a);
    Ok([
        [ctx.mul(&adj[0][0], &dinv), ctx.mul(&adj[0][1], &dinv)],
        [ctx.mul(&adj[1][0], &dinv), ctx.mul(&adj[1][1], &dinv)],
    ])
}

pub fn m2_from_i64(ctx: &Zmod, a: [[i64; 2]; 2]) -> Mat2 {
    [
        [ctx.from_i64(a[0][0]), ctx.from_i64(a[0][1])],
        [ctx.from_i64(a[1][0]), ctx.from_i64(a[1][1])],
    ]
}

/// Reduce a Mat2 into a smaller-precision context.
pub fn m2_red(ctx: &Zmod, a: &Mat2) -> Mat2 {
    [
        [ctx.red(&a[0][0]), ctx.red(&a[0][1])],
        [ctx.red(&a[1][0]), ctx.red(&a[1][1])],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_count_and_membership() {
        let u = unit_group();
        assert_eq!(u.len(), 24);
        // 1, -1, +-i, +-j, +-k and (+-1 +-i +-j +-k)/2
        assert!(u.contains(&(2, 0, 0, 0)));
        assert!(u.contains(&(-2, 0, 0, 0)));
        assert!(u.contains(&(0, 2, 0, 0)));
        assert!(u.contains(&(1, 1, 1, 1)));
        assert!(u.contains(&(-1, 1, -1, 1)));
    }

    #[test]
    fn unit_group_closed() {
        let u = unit_group();
        for &x in &u {
            for &y in &u {
                assert!(u.contains(&qmul(x, y)));
            }
        }
    }

    #[test]
    fn norm_multiplicative() {
        let els = enumerate_by_norm(3);
        let u = unit_group();
        for &x in els.iter().take(12) {
            for &y in u.iter() {
                assert_eq!(qnrd(qmul(x, y)), qnrd(x) * qnrd(y));
            }
        }
    }

    #[test]
    fn cayley_hamilton() {
        for &x in enumerate_by_norm(5).iter().take(10) {
            let sq = qmul(x, x);
            // x^2 - trd(x) x + nrd(x) = 0 in doubled coordinates
            let tr = qtrd(x);
            let n = qnrd(x);
            let lhs = (
                sq.0 - tr * x.0 + 2 * n,
                sq.1 - tr * x.1,
                sq.2 - tr * x.2,
                sq.3 - tr * x.3,
            );
            // doubled coords: the scalar n contributes 2n to the first slot
            assert_eq!(lhs, (0, 0, 0, 0));
        }
    }

    #[test]
    fn norm_two_count_matches_lattice_oracle() {
        // independent oracle: count solutions of a^2+b^2+c^2+d^2 = 8 over
        // doubled coordinates with parity constraint
        let mut count = 0;
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                for c in -3i64..=3 {
                    for d in -3i64..=3 {
                        if a * a + b * b + c * c + d * d == 8 && in_order((a, b, c, d)) {
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(enumerate_by_norm(2).len(), count);
    }

    #[test]
    fn splitting_is_homomorphism() {
        let sp = split_at_p(3, 30).unwrap();
        let ctx = &sp.ctx;
        let basis: Vec<Quat> = vec![(2, 0, 0, 0), (0, 2, 0, 0), (0, 0, 2, 0), (0, 0, 0, 2)];
        for &x in &basis {
            for &y in &basis {
                let lhs = sp.mat_of(qmul(x, y));
                let rhs = m2_mul(ctx, &sp.mat_of(x), &sp.mat_of(y));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn splitting_det_is_norm() {
        let sp = split_at_p(3, 30).unwrap();
        let ctx = &sp.ctx;
        for &x in enumerate_by_norm(5).iter().take(8) {
            let m = sp.mat_of(x);
            assert_eq!(m2_det(ctx, &m), ctx.from_i64(qnrd(x)));
            let tr = ctx.add(&m[0][0], &m[1][1]);
            assert_eq!(tr, ctx.from_i64(qtrd(x)));
        }
        // det(image(1+i)) = 2
        let m = sp.mat_of((2, 2, 0, 0));
        assert_eq!(m2_det(ctx, &m), ctx.from_i64(2));
    }

    #[test]
    fn splitting_seed_p3() {
        let sp = split_at_p(3, 10).unwrap();
        let p = BigUint::from(3u32);
        assert_eq!(&sp.r % &p, BigUint::from(1u32));
        assert_eq!(&sp.t % &p, BigUint::from(1u32));
    }
}
