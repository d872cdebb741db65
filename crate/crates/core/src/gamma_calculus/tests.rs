use super::*;
use crate::padic_rings::Lift;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx(m: usize) -> PrecisionCtx {
    PrecisionCtx::new(3, 6, m, 1, Lift::Cyclotomic).unwrap()
}

fn chi(c: i64) -> Chi {
    Chi::from_i64(3, c).unwrap()
}

/// `lambda*(S^t)`: `Psi = c`, `L` full, acted on by `phi(lambda_gamma)`.
fn gm_script(c: PrecisionCtx) -> (Window, impl Fn(&Chi) -> Result<FilMap>) {
    let f = Frame::script(c);
    let w = Window::new(f.clone(), vec![true], Mat::scalar(f.data().c())).unwrap();
    let mask = w.l_mask().to_vec();
    let act = move |x: &Chi| -> Result<FilMap> {
        let lam = Lambda::at_prec(c, x, f.prec())?.value.frobenius();
        Ok(FilMap::plain(&f, &Mat::scalar(&lam), &mask, &mask))
    };
    (w, act)
}

fn tate_script(c: PrecisionCtx) -> (Window, impl Fn(&Chi) -> Result<FilMap>) {
    let f = Frame::script(c);
    let w = Window::unit(&f);
    let act = move |_: &Chi| -> Result<FilMap> { Ok(FilMap::identity(&Window::unit(&f))) };
    (w, act)
}

fn gen(act: &dyn Fn(&Chi) -> Result<FilMap>, x: &Chi) -> GammaGen {
    GammaGen {
        chi: x.clone(),
        map: act(x).unwrap(),
    }
}

#[test]
fn lambda_is_one_mod_u_and_a_cocycle() {
    let c = ctx(16);
    let f = Frame::sigma(c);
    let (a, b) = (chi(4), chi(-2));
    let la = Lambda::new(c, &a).unwrap().value;
    let lb = Lambda::new(c, &b).unwrap().value;
    let lab = Lambda::new(c, &a.mul(&b)).unwrap().value;
    assert!(la.constant_term().is_one());
    let g = FrameHom::gamma(&f, &a).unwrap();
    assert_eq!(lab, la.mul_ref(&g.apply(&lb)));
}

#[test]
fn lambda_does_not_depend_on_the_level() {
    let c = ctx(16);
    let up = FrameHom::level(&Frame::sigma(c)).unwrap();
    let c2 = c.with_level(2).unwrap();
    for x in [chi(4), chi(-1)] {
        let low = Lambda::new(c, &x).unwrap().value;
        let high = Lambda::new(c2, &x).unwrap().value;
        assert_eq!(up.apply(&low), high);
    }
}

#[test]
fn default_generators() {
    let got: Vec<String> = default_chis(ctx(8)).iter().map(|c| c.to_string()).collect();
    assert_eq!(got, ["-1", "4", "7"]);
    let c5 = PrecisionCtx::new(5, 4, 8, 2, Lift::Cyclotomic).unwrap();
    let got: Vec<String> = default_chis(c5).iter().map(|c| c.to_string()).collect();
    assert_eq!(got, ["2", "26", "51"]);
}

#[test]
fn gm_action_on_the_script_avatar() {
    let c = ctx(16);
    let (w, act) = gm_script(c);
    let gens: Vec<GammaGen> = default_chis(c).iter().map(|x| gen(&act, x)).collect();
    let action = GammaAction {
        generators: gens.clone(),
    };
    check_window_action(&w, &action).unwrap();
    assert!(strictness_check(&action, 3, 1));
    let g = compose_gen(w.frame(), &gens[1], &gens[2]).unwrap();
    assert_eq!(g.map.mat, act(&chi(28)).unwrap().mat);
    let sq = power_gen(w.frame(), &gens[1], 3).unwrap();
    assert_eq!(sq.map.mat, act(&chi(64)).unwrap().mat);
}

#[test]
fn tate_has_trivial_monodromy() {
    let c = ctx(16);
    let (w, act) = tate_script(c);
    let action = GammaAction {
        generators: default_chis(c).iter().map(|x| gen(&act, x)).collect(),
    };
    assert!(n_operator(&w, &action).unwrap().is_zero());
    for n in 0..3 {
        assert!(gamma_bound_check(&w, &action.generators[1], n).unwrap());
    }
}

#[test]
fn gm_satisfies_the_bounds_and_the_monodromy_identities() {
    let c = ctx(16);
    let (w, act) = gm_script(c);
    let action = GammaAction {
        generators: default_chis(c).iter().map(|x| gen(&act, x)).collect(),
    };
    for n in 0..3 {
        assert!(gamma_bound_check(&w, &action.generators[1], n).unwrap(), "n = {n}");
    }
    for m in 0..2 {
        assert!(deep_bound_check(&w, &act, &chi(4), m).unwrap(), "m = {m}");
    }
    let f = w.frame();
    let sample = Series::from_ints(c, &[0, 1], f.prec());
    let checks = n_checks(&w, &action, &action.generators[1], &action.generators[2], &sample).unwrap();
    assert!(checks.all(), "{checks:?}");
    // N_M(e) = p^r ((1 + u0) t / u0 - 1) e
    let nm = n_operator(&w, &action).unwrap();
    let data = f.data();
    let one = f.one();
    let expected = one
        .add_ref(data.u0())
        .mul_ref(&data.y().invert().unwrap())
        .sub_ref(&one)
        .mul_p_pow(1);
    assert_eq!(nm.get(0, 0), &expected);
}

#[test]
fn non_strict_action_is_rejected() {
    let c = ctx(8);
    let f = Frame::script(c);
    let w = Window::unit(&f);
    let g = GammaGen {
        chi: chi(4),
        map: FilMap::scalar(&w, &f.int(-1)),
    };
    assert!(matches!(
        n_apply(&w, &g, &Mat::identity(c, 1, f.prec())),
        Err(Error::NotStrict)
    ));
    let g = GammaGen {
        chi: chi(-1),
        map: FilMap::identity(&w),
    };
    assert!(matches!(strictm_certificate(&w, &g, 1), Err(Error::NoSmallGenerator)));
}

#[test]
fn dual_of_tate_is_gm_with_its_action() {
    let c = ctx(16);
    let f = Frame::sigma(c);
    let w = Window::unit(&f);
    let x = chi(4);
    let g = GammaGen {
        chi: x.clone(),
        map: FilMap::identity(&w),
    };
    let d = dual_window_gen(&w, &g).unwrap();
    let dw = w.dual().unwrap();
    assert!(window_defect(&dw, &d).unwrap().is_zero());
    let lam = Lambda::at_prec(c, &x, f.prec()).unwrap().value.frobenius();
    assert_eq!(d.map.mat, Mat::scalar(&lam));
}

#[test]
fn connection_on_random_windows() {
    let c = PrecisionCtx::new(3, 6, 16, 1, Lift::Standard).unwrap();
    let f = Frame::script(c);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rank in 1..=3 {
        let w = Window::random(&f, rank, 3, &mut rng);
        let conn = solve_connection(&w).unwrap();
        assert!(conn.residual(3).is_zero());
        assert!(conn.ab_is_p(&f));
        assert!(conn.is_horizontal(&f));
        assert!(conn.iterations <= iterate_bound(c) + 1);
    }
    let cyc = Frame::script(ctx(8));
    assert!(matches!(
        solve_connection(&Window::unit(&cyc)),
        Err(Error::NotNilpotent)
    ));
}

#[test]
fn transfer_between_windows_and_bt_modules() {
    let c = ctx(16);
    let f = Frame::sigma(c);
    let x = chi(4);
    let w = Window::unit_dual(&f);
    let lam = Lambda::at_prec(c, &x, f.prec()).unwrap().value;
    let g = GammaGen {
        chi: x.clone(),
        map: FilMap::plain(&f, &Mat::scalar(&lam.frobenius()), &[true], &[true]),
    };
    assert!(window_defect(&w, &g).unwrap().is_zero());
    let m = crate::bt_modules::win_to_bt(&w).unwrap();
    let h = win_to_bt_gen(&w, &g).unwrap();
    assert!(bt_defect(&m, &h).unwrap().is_zero());
    assert_eq!(h.map.mat, Mat::scalar(&lam));
    let bw = crate::bt_modules::bt_to_win(&m).unwrap();
    let back = bt_to_win_gen(&m, &bw, &h).unwrap();
    assert!(window_defect(&bw.window, &back).unwrap().is_zero());
    let t = bw.window_iso(&w).unwrap();
    assert!(intertwines(&f, &x, &t, &back.map.mat, &g.map.mat).unwrap());

    let tate = BtModule::unit(&f);
    let id = GammaGen {
        chi: x.clone(),
        map: bt_map(&tate, &Mat::identity(c, 1, f.prec())),
    };
    let d = dual_bt_gen(&tate, &id).unwrap();
    assert!(bt_defect(&tate.dual(), &d).unwrap().is_zero());
    assert_eq!(d.map.mat, h.map.mat);
}

#[test]
fn budget_ignores_only_the_undetermined_top_coefficients() {
    let c = ctx(16);
    let f = Frame::script(c);
    let entry = |k: usize| Mat::from_rows(vec![vec![Series::monomial(c, k, c.n as i32 + 3).div_p_pow(3)]]);
    // u^15 / p^3 is outside the ring but sits where one division by t leaves no information
    assert!(within_budget(&f, &[entry(15)]));
    assert!(!within_budget(&f, &[entry(14)]));
    // the second quotient is two divisions deep
    assert!(within_budget(&f, &[entry(0).map(|s| s.mul_p_pow(3)), entry(14)]));
    assert!(!within_budget(&f, &[entry(0).map(|s| s.mul_p_pow(3)), entry(13)]));
}
