use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::elements::*;
use super::*;
use crate::frames::Frame;

fn ctx_with(n: u32, m: usize) -> PrecisionCtx {
    PrecisionCtx::new(3, n, m, 1, Lift::Cyclotomic).unwrap()
}

/// Canonical numerators with the scale in front, trailing zeros dropped.
fn coeffs(s: &Series) -> (u32, Vec<u64>) {
    let (sc, v) = s.canonical().unwrap();
    let last = v.iter().rposition(|x| *x != 0u32.into()).map_or(0, |i| i + 1);
    (sc, v[..last].iter().map(|x| u64::try_from(x).unwrap()).collect())
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn t_agrees_with_a_hand_expansion() {
    // log(1 + u0) with u0 = 3u + 3u^2 + u^3 is 3u - (3/2)u^2 + u^3 mod u^4,
    // and -3/2 = 3 mod 9
    let c = ctx_with(2, 4);
    assert_eq!(coeffs(&t_log(c)), (0, vec![0, 3, 3, 1]));
    assert_eq!(coeffs(&t_product(c)), (0, vec![0, 3, 3, 1]));
}

#[test]
fn lambda_for_chi_four_mod_p_and_u_cubed() {
    let c = ctx_with(1, 3);
    let chi = Chi::from_i64(3, 4).unwrap();
    assert_eq!(coeffs(&lambda_gamma(c, &chi)), (0, vec![1, 0, 1]));
}

#[test]
fn c_is_phi_of_e_over_p() {
    // phi(E) = sum_{i<3} (1+u)^(3i)
    let c = ctx_with(6, 8);
    let expected: Vec<u64> = (0..7).map(|k| (0..3).map(|i| binom(3 * i, k)).sum()).collect();
    assert_eq!(expected, [3, 9, 18, 21, 15, 6, 1]);
    assert_eq!(coeffs(&c_elem(c)), (1, expected));
}

#[test]
fn divided_power_membership() {
    let c = ctx_with(6, 16);
    let s = Frame::script(c);
    let prec = s.prec();
    assert!(s.contains(&Series::monomial(c, 6, prec).div_p_pow(1)));
    assert!(!s.contains(&Series::monomial(c, 4, prec).div_p_pow(1)));
    assert!(!Frame::sigma(c).contains(&Series::monomial(c, 6, prec).div_p_pow(1)));
    assert!(s.contains(&divided_power_e(c, 3)));
}

#[test]
fn monic_division_recovers_the_quotient() {
    let c = ctx_with(6, 24);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prec = c.work_prec();
    let q = Series::random_deg(c, prec, 10, &mut rng);
    let (q2, rem) = e_divide(&e_elem(c).mul_ref(&q));
    assert!(rem.is_zero());
    assert_eq!(q2, q);
    // phi(u) = (1+u)^3 - 1 divides (gamma - 1)(u) for chi = 4
    let g = RingSubst::gamma(c, &Chi::from_i64(3, 4).unwrap());
    let x = g.apply(&Series::var(c, prec)).sub_ref(&Series::var(c, prec));
    let phi_u = Series::from_ints(c, &[0, 3, 3, 1], prec);
    let (_, rem) = divide_monic(&x, &phi_u, 3);
    assert!(rem.is_zero());
    let (_, rem) = divide_monic(&Series::var(c, prec), &phi_u, 3);
    assert!(!rem.is_zero());
}

#[test]
fn t_transforms_correctly() {
    let c = ctx_with(6, 16);
    let t = t_log(c);
    assert_eq!(t.frobenius(), t.mul_i64(3));
    for x in [4, -2, 7] {
        let chi = Chi::from_i64(3, x).unwrap();
        assert_eq!(RingSubst::gamma(c, &chi).apply(&t), t.mul_i64(x));
    }
    assert!(t_over_u0(c).is_unit());
}

#[test]
fn non_units_are_rejected() {
    let c = ctx_with(4, 8);
    assert!(Chi::from_i64(3, 6).is_err());
    assert!(Series::var(c, 4).invert().is_err());
    assert!(PrecisionCtx::new(4, 4, 8, 1, Lift::Cyclotomic).is_err());
    assert!(log_one_plus(&Series::one(c, 4)).is_err());
}

fn arb_series(c: PrecisionCtx) -> impl Strategy<Value = Series> {
    proptest::collection::vec(-400i64..400, c.m).prop_map(move |v| Series::from_ints(c, &v, c.n as i32 + 4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(f in arb_series(ctx_with(4, 10)), g in arb_series(ctx_with(4, 10)), h in arb_series(ctx_with(4, 10))) {
        prop_assert_eq!(f.add_ref(&g).add_ref(&h), f.add_ref(&g.add_ref(&h)));
        prop_assert_eq!(f.mul_ref(&g), g.mul_ref(&f));
        prop_assert_eq!(f.mul_ref(&g).mul_ref(&h), f.mul_ref(&g.mul_ref(&h)));
        prop_assert_eq!(f.mul_ref(&g.add_ref(&h)), f.mul_ref(&g).add_ref(&f.mul_ref(&h)));
        prop_assert!(f.sub_ref(&f).is_zero());
        prop_assert_eq!(f.mul_ref(&Series::one(f.ctx(), f.prec())), f.clone());
    }

    #[test]
    fn frobenius_and_gamma_are_commuting_ring_maps(
        f in arb_series(ctx_with(4, 10)),
        g in arb_series(ctx_with(4, 10)),
        a in (1i64..200).prop_filter("unit", |x| x % 3 != 0),
        b in (1i64..200).prop_filter("unit", |x| x % 3 != 0),
    ) {
        let c = f.ctx();
        prop_assert_eq!(f.mul_ref(&g).frobenius(), f.frobenius().mul_ref(&g.frobenius()));
        let (ca, cb) = (Chi::from_i64(3, a).unwrap(), Chi::from_i64(3, b).unwrap());
        let (ga, gb) = (RingSubst::gamma(c, &ca), RingSubst::gamma(c, &cb));
        prop_assert_eq!(ga.apply(&f.frobenius()), ga.apply(&f).frobenius());
        prop_assert_eq!(ga.apply(&gb.apply(&f)), RingSubst::gamma(c, &ca.mul(&cb)).apply(&f));
        prop_assert_eq!(ga.apply(&f.mul_ref(&g)), ga.apply(&f).mul_ref(&ga.apply(&g)));
    }

    #[test]
    fn units_invert(f in arb_series(ctx_with(4, 10))) {
        let u = f.add_ref(&Series::from_i64(f.ctx(), if f.is_unit() { 0 } else { 1 }, f.prec()));
        prop_assume!(u.is_unit());
        prop_assert!(u.mul_ref(&u.invert().unwrap()).is_one());
    }

    #[test]
    fn canonical_form_is_stable(f in arb_series(ctx_with(4, 10)), k in 0u32..3) {
        let x = f.div_p_pow(k);
        let (sc, v) = x.canonical().unwrap();
        let back = Series::from_bigints(x.ctx(), &v.into_iter().map(BigInt::from).collect::<Vec<_>>(), sc, x.ctx().n as i32);
        prop_assert_eq!(back, x);
    }
}
