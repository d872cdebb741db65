use super::*;
use crate::examples_zoo as zoo;
use crate::padic_rings::{Lift, PrecisionCtx};
use proptest::prelude::*;

fn alpha(s: &str, r: u32) -> Alpha {
    Alpha::parse(3, s, default_budget(r)).unwrap()
}

fn lattice(s: &str, base: &Alpha) -> MonomialLattice {
    MonomialLattice::new(Alpha::parse(3, s, base.monomial.e.len()).unwrap().monomial, base)
}

#[test]
fn pullback_on_generators() {
    let one = alpha("1", 1);
    assert_eq!(
        MonomialLattice::unit(&one).phi_pullback().unwrap(),
        MonomialLattice::unit(&one)
    );
    assert_eq!(lattice("u", &one).phi_pullback().unwrap(), lattice("u*E1", &one));
    assert_eq!(lattice("E1", &one).phi_pullback().unwrap(), lattice("E2", &one));
    assert_eq!(
        lattice("p", &alpha("E1", 1)).phi_pullback().unwrap(),
        lattice("p*E1", &alpha("E1", 1))
    );
    assert!(matches!(lattice("E5", &one).phi_pullback(), Err(Error::BudgetExceeded)));
}

#[test]
fn intersections() {
    let one = alpha("1", 1);
    let l = lattice("u*E2", &one);
    assert_eq!(l.intersect(&l).unwrap(), l);
    assert_eq!(
        lattice("u", &one).intersect(&lattice("p", &one)).unwrap(),
        lattice("p*u", &one)
    );
    let inv = MonomialLattice::unit(&one).invert_prime(Prime::E(1)).unwrap();
    assert_eq!(
        inv.intersect(&MonomialLattice::unit(&one)).unwrap(),
        MonomialLattice::unit(&one)
    );
    let other = MonomialLattice::unit(&alpha("E1", 1));
    assert!(matches!(l.intersect(&other), Err(Error::IncompatibleBases)));
}

#[test]
fn level_one_translation_is_the_identity() {
    for a in ["1", "E1", "2*E1"] {
        let base = alpha(a, 1);
        for l in ["1", "u", "p*u^2"] {
            let n = lattice(l, &base);
            assert_eq!(kr_from_wach(&n, 1).unwrap(), n);
            assert_eq!(wach_from_kr(&n, 1).unwrap(), n);
        }
    }
}

#[test]
fn level_two_round_trip() {
    let base = alpha("E2", 2);
    let n = lattice("u", &base);
    let m = kr_from_wach(&n, 2).unwrap();
    assert_eq!(m, lattice("u*E1", &base));
    assert!(is_kr_stable(&m, 2).unwrap());
    assert_eq!(wach_from_kr(&m, 2).unwrap(), n);
    assert_eq!(stabilization_count(&n, 2, 10).unwrap(), 1);
}

#[test]
fn alpha_parsing_and_display() {
    let a = alpha("6*E1^2*u", 1);
    assert_eq!(a.unit, BigInt::from(2));
    assert_eq!(a.monomial.p, 1);
    assert_eq!(a.to_string(), "2*p*u*E1^2");
    assert!(Alpha::parse(3, "E9", 5).is_err());
    assert!(Alpha::parse(3, "x", 5).is_err());
}

#[test]
fn transport_reads_alpha_from_zoo_modules() {
    // the unit is read after dividing by E_2 of degree 6, one digit per 6 degrees
    let short = PrecisionCtx::new(3, 6, 16, 2, Lift::Cyclotomic).unwrap();
    let b = default_budget(2);
    assert!(matches!(
        lambda_r0_transport(&zoo::std_gm(short).unwrap().bt, b),
        Err(Error::PrecisionLoss(_))
    ));
    let c = short.with_uprec(42).unwrap();
    assert_eq!(
        lambda_r0_transport(&zoo::std_tate(c).unwrap().bt, b).unwrap(),
        Alpha::one(b)
    );
    assert_eq!(
        lambda_r0_transport(&zoo::std_gm(c).unwrap().bt, b).unwrap(),
        Alpha::parse(3, "E2", b).unwrap()
    );
    let tw = zoo::unramified_twist(&zoo::std_gm(c).unwrap(), &BigInt::from(2)).unwrap();
    assert_eq!(
        lambda_r0_transport(&tw.bt, b).unwrap(),
        Alpha::parse(3, "2*E2", b).unwrap()
    );
    let sum = zoo::build("sum", c).unwrap();
    assert!(matches!(lambda_r0_transport(&sum.bt, b), Err(Error::NotRank1)));
}

fn arb_lattice(budget: usize) -> impl Strategy<Value = Exponents> {
    (-3i64..4, 0i64..4, proptest::collection::vec(0i64..3, budget - 2)).prop_map(move |(p, u, mut e)| {
        e.resize(budget, 0);
        Exponents { p, u, e }
    })
}

proptest! {
    #[test]
    fn intersection_is_a_semilattice(a in arb_lattice(5), b in arb_lattice(5), c in arb_lattice(5)) {
        let base = alpha("E1", 1);
        let (a, b, c) = (MonomialLattice::new(a, &base), MonomialLattice::new(b, &base), MonomialLattice::new(c, &base));
        prop_assert_eq!(a.intersect(&a).unwrap(), a.clone());
        prop_assert_eq!(a.intersect(&b).unwrap(), b.intersect(&a).unwrap());
        prop_assert_eq!(a.intersect(&b).unwrap().intersect(&c).unwrap(), a.intersect(&b.intersect(&c).unwrap()).unwrap());
        prop_assert!(a.intersect(&b).unwrap().is_contained_in(&a));
    }

    #[test]
    fn wach_modules_round_trip(p in 0i64..3, u in 0i64..4, r in 1u32..3, h in 0i64..2) {
        let budget = default_budget(r);
        let mut mono = Exponents::zero(budget);
        mono.e[r as usize - 1] = h;
        let base = Alpha { unit: BigInt::one(), monomial: mono };
        let mut ex = Exponents::zero(budget);
        ex.p = p;
        ex.u = u;
        let n = MonomialLattice::new(ex, &base);
        let m = kr_from_wach(&n, r).unwrap();
        prop_assert!(is_kr_stable(&m, r).unwrap());
        prop_assert_eq!(wach_from_kr(&m, r).unwrap(), n.clone());
        prop_assert_eq!(kr_from_wach(&wach_from_kr(&m, r).unwrap(), r).unwrap(), m);
        prop_assert!(stabilization_count(&n, r, 10).unwrap() < r as usize);
    }
}
