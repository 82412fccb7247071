//! Randomized invariants: the algebraic identities the deterministic tests
//! rely on, checked over generated inputs.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use proptest::prelude::*;

use workbench::cli_workbench::{padic_from_json, padic_json, parse_ratio, ratio_string};
use workbench::padic_arith::{
    coeff_vals, fam_mul, newton_polygon, series_inv, series_mul, slope_le_h_factor, FamCtx, Zmod,
};
use workbench::quaternion_arith::{in_order, qconj, qmul, qnrd, Quat};
use workbench::weight_space::{eval_character, CharValue, WeightCharacter};

fn quat_strategy() -> impl Strategy<Value = Quat> {
    // doubled coordinates: all even or all odd
    (
        -6i64..=6,
        -6i64..=6,
        -6i64..=6,
        -6i64..=6,
        proptest::bool::ANY,
    )
        .prop_map(|(a, b, c, d, odd)| {
            let o = if odd { 1 } else { 0 };
            (2 * a + o, 2 * b + o, 2 * c + o, 2 * d + o)
        })
}

proptest! {
    #[test]
    fn norm_is_multiplicative(x in quat_strategy(), y in quat_strategy()) {
        prop_assert!(in_order(x) && in_order(y));
        let z = qmul(x, y);
        prop_assert!(in_order(z));
        prop_assert_eq!(qnrd(z), qnrd(x) * qnrd(y));
        // conj reverses products
        prop_assert_eq!(qmul(qconj(y), qconj(x)), qconj(z));
    }

    #[test]
    fn valuation_is_additive(a in 1u64..100_000, b in 1u64..100_000) {
        let ctx = Zmod::new(3, 24);
        let x = BigUint::from(a);
        let y = BigUint::from(b);
        let vx = ctx.val(&ctx.red(&x));
        let vy = ctx.val(&ctx.red(&y));
        if vx + vy < ctx.prec {
            prop_assert_eq!(ctx.val(&ctx.mul(&x, &y)), vx + vy);
        }
    }

    #[test]
    fn series_mul_commutes_and_associates(
        a in proptest::collection::vec(0u64..200, 1..5),
        b in proptest::collection::vec(0u64..200, 1..5),
        c in proptest::collection::vec(0u64..200, 1..5),
    ) {
        let ctx = Zmod::new(3, 16);
        let f: Vec<BigUint> = a.iter().map(|&x| ctx.red(&BigUint::from(x))).collect();
        let g: Vec<BigUint> = b.iter().map(|&x| ctx.red(&BigUint::from(x))).collect();
        let h: Vec<BigUint> = c.iter().map(|&x| ctx.red(&BigUint::from(x))).collect();
        let t = 6usize;
        prop_assert_eq!(series_mul(&ctx, &f, &g, t), series_mul(&ctx, &g, &f, t));
        let l = series_mul(&ctx, &series_mul(&ctx, &f, &g, t), &h, t);
        let r = series_mul(&ctx, &f, &series_mul(&ctx, &g, &h, t), t);
        prop_assert_eq!(l, r);
    }

    #[test]
    fn series_inverse_roundtrip(a in proptest::collection::vec(0u64..200, 1..6)) {
        let ctx = Zmod::new(5, 12);
        let mut f: Vec<BigUint> = a.iter().map(|&x| ctx.red(&BigUint::from(x))).collect();
        f[0] = ctx.red(&BigUint::from(a[0] * 5 + 1)); // force unit constant
        let t = 5usize;
        let inv = series_inv(&ctx, &f, t).unwrap();
        let prod = series_mul(&ctx, &f, &inv, t);
        prop_assert!(prod[0].is_one());
        for c in &prod[1..] {
            prop_assert!(c.is_zero());
        }
    }

    #[test]
    fn polygon_is_lower_hull(vals in proptest::collection::vec(0u32..12, 1..8)) {
        let mut pts: Vec<Option<u32>> = vals.into_iter().map(Some).collect();
        pts.insert(0, Some(0));
        let np = newton_polygon(&pts, 30).unwrap();
        // slopes strictly increase
        for w in np.segments.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
        // every point lies on or above the hull (compare via cross products)
        for seg in np.vertices.windows(2) {
            let ((x1, y1), (x2, y2)) = (seg[0], seg[1]);
            for (x, v) in pts.iter().enumerate() {
                let Some(y) = v else { continue };
                if x1 <= x && x <= x2 {
                    let lhs = (*y as i64 - y1 as i64) * (x2 as i64 - x1 as i64);
                    let rhs = (y2 as i64 - y1 as i64) * (x as i64 - x1 as i64);
                    prop_assert!(lhs >= rhs, "point below hull at {}", x);
                }
            }
        }
    }

    #[test]
    fn family_character_is_multiplicative(u0 in 1u64..3_000, v0 in 1u64..3_000) {
        let ctx = Zmod::new(3, 14);
        let u = BigUint::from(3 * u0 + 1);
        let v = BigUint::from(3 * v0 + 2);
        let kappa = WeightCharacter::family(3, 4, 2, 4);
        let fc = kappa.fam_ctx().unwrap();
        let CharValue::Family(a) = eval_character(&ctx, &kappa, &u).unwrap() else { unreachable!() };
        let CharValue::Family(b) = eval_character(&ctx, &kappa, &v).unwrap() else { unreachable!() };
        let CharValue::Family(ab) = eval_character(&ctx, &kappa, &ctx.mul(&u, &v)).unwrap() else { unreachable!() };
        let prod = fam_mul(&ctx, &fc, &a, &b);
        // representatives are reduced mod p^prec, so the last two digits of
        // the log-derived coefficients can differ
        let tol = Zmod::new(3, ctx.prec - 2);
        for (x, y) in prod.iter().zip(&ab) {
            prop_assert_eq!(tol.red(x), tol.red(y));
        }
    }

    #[test]
    fn slope_factor_recovers_linear_times_steep(au in 1u64..2_000, bu in 1u64..2_000) {
        let ctx = Zmod::new(3, 18);
        // F = (1 - aX)(1 - 3bX) with a, b units: break at h = 1/2
        let a = ctx.red(&BigUint::from(3 * au + 1));
        let b3 = ctx.mul(&BigUint::from(3u32), &BigUint::from(3 * bu + 2));
        let f = vec![
            BigUint::one(),
            ctx.neg(&ctx.add(&a, &b3)),
            ctx.mul(&a, &b3),
        ];
        let sf = slope_le_h_factor(&ctx, &f, Ratio::new(1, 2)).unwrap();
        prop_assert!(sf.reliable);
        prop_assert_eq!(&sf.q, &vec![BigUint::one(), ctx.neg(&a)]);
        let prod = series_mul(&ctx, &sf.q, &sf.s, 2);
        prop_assert_eq!(prod, f);
    }

    #[test]
    fn polygon_of_product_has_sorted_coeff_vals(au in 1u64..500, bu in 1u64..500) {
        // sanity for coeff_vals: zero-to-precision detection
        let ctx = Zmod::new(3, 10);
        let x = ctx.mul(&ctx.pp(9), &BigUint::from(3 * au + 1));
        let y = ctx.mul(&ctx.pp(2), &BigUint::from(3 * bu + 1));
        let vals = coeff_vals(&ctx, &[BigUint::one(), y, ctx.mul(&x, &BigUint::from(3u32))]);
        prop_assert_eq!(vals[0], Some(0));
        prop_assert_eq!(vals[1], Some(2));
        prop_assert_eq!(vals[2], None);
    }

    #[test]
    fn padic_json_roundtrips(x in 0u64..10_000_000, shift in 0u32..6) {
        let ctx = Zmod::new(7, 10);
        let v = ctx.mul(&ctx.red(&BigUint::from(x)), &ctx.pp(shift));
        let j = padic_json(&ctx, &v);
        let (back, prec) = padic_from_json(7, &j).unwrap();
        prop_assert_eq!(prec, 10);
        prop_assert_eq!(ctx.red(&back), v);
    }

    #[test]
    fn ratio_format_roundtrips(n in -1000i64..1000, d in 1i64..50) {
        let r = Ratio::new(n, d);
        prop_assert_eq!(parse_ratio(&ratio_string(r)).unwrap(), r);
    }
}
