//! Semilinear Gamma-actions on windows and BT modules: strictness, the
//! twisting unit `lambda_gamma`, duality and Win/BT transfer, the bound
//! certificates, the operator `N_M`, and the connection solver.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::bt_modules::{BtModule, BtWindow};
use crate::error::{Error, Result};
use crate::frames::{Frame, FrameHom, RingTag};
use crate::matrix::Mat;
use crate::padic_rings::elements::{self, div_by_t, gamma_e_over_e};
use crate::padic_rings::{Chi, Lift, PrecisionCtx, Series};
use crate::windows::{hom_defect, FilMap, Window};

/// `lambda_gamma = prod_{n >= 0} phi^n(E / gamma(E))` in the Sigma ring.
#[derive(Clone, Debug)]
pub struct Lambda {
    pub chi: Chi,
    pub value: Series,
}

impl Lambda {
    /// Known modulo `p^N`; the value is integral.
    pub fn new(ctx: PrecisionCtx, chi: &Chi) -> Result<Lambda> {
        Lambda::at_prec(ctx, chi, ctx.n as i32)
    }

    pub fn at_prec(ctx: PrecisionCtx, chi: &Chi, prec: i32) -> Result<Lambda> {
        if ctx.lift != Lift::Cyclotomic {
            return Err(Error::BadHom("lambda_gamma needs the cyclotomic lift".into()));
        }
        let chi = Chi::new(ctx.p, chi.value().clone())?;
        // the infinite product dominates the cost of every action on G_m
        type Cache = Mutex<HashMap<(PrecisionCtx, Chi, i32), Series>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Mutex::default);
        let key = (ctx, chi.clone(), prec);
        if let Some(v) = cache.lock().expect("lambda cache").get(&key) {
            return Ok(Lambda { chi, value: v.clone() });
        }
        let value = elements::lambda_gamma_at(ctx, &chi, prec);
        cache.lock().expect("lambda cache").insert(key, value.clone());
        Ok(Lambda { chi, value })
    }
}

/// One generator `gamma` of the acting group, by `chi(gamma)`, with its
/// matrix on the fixed basis.
#[derive(Clone, Debug)]
pub struct GammaGen {
    pub chi: Chi,
    pub map: FilMap,
}

#[derive(Clone, Debug, Default)]
pub struct GammaAction {
    pub generators: Vec<GammaGen>,
}

/// Generators used by default: a primitive root (`-1` for `p = 3`) and `1 + p^r`, `1 + 2 p^r`.
pub fn default_chis(ctx: PrecisionCtx) -> Vec<Chi> {
    let p = ctx.p as i64;
    let root = if p == 3 { -1 } else { primitive_root(p) };
    let pr = p.pow(ctx.r);
    [root, 1 + pr, 1 + 2 * pr]
        .iter()
        .map(|&c| Chi::from_i64(ctx.p, c).expect("unit"))
        .collect()
}

fn primitive_root(p: i64) -> i64 {
    let order = p - 1;
    let factors: Vec<i64> = (2..=order)
        .filter(|q| order % q == 0 && (2..*q).all(|d| q % d != 0))
        .collect();
    (2..p)
        .find(|&g| factors.iter().all(|q| mod_pow(g, order / q, p) != 1))
        .expect("a primitive root exists")
}

fn mod_pow(mut b: i64, mut e: i64, m: i64) -> i64 {
    let mut acc = 1i64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// All-`N` masks: BT actions are plain matrices.
pub fn bt_map(m: &BtModule, g: &Mat) -> FilMap {
    let mask = vec![false; m.rank()];
    FilMap::plain(m.frame(), g, &mask, &mask)
}

/// `x -> G gamma(x)` on coordinate columns.
pub fn act_on(h: &FrameHom, g: &Mat, x: &Mat) -> Mat {
    g.mul(&h.apply_mat(x))
}

/// `Psi phi~(G) - G gamma(Psi) diag(c_gamma on L, 1 on N)`.
pub fn window_defect(w: &Window, gen: &GammaGen) -> Result<Mat> {
    let h = FrameHom::gamma(w.frame(), &gen.chi)?;
    Ok(hom_defect(w, w, &gen.map, &|s| h.apply(s), &h.c))
}

/// `G gamma(A) - A phi(G)`.
pub fn bt_defect(m: &BtModule, gen: &GammaGen) -> Result<Mat> {
    let h = FrameHom::gamma(m.frame(), &gen.chi)?;
    let g = &gen.map.mat;
    Ok(g.mul(&h.apply_mat(m.a())).sub(&m.a().mul(&g.frobenius())))
}

/// `G_a gamma_a(G_b)`, the matrix of `gamma_a gamma_b`.
pub fn compose_gen(frame: &Frame, a: &GammaGen, b: &GammaGen) -> Result<GammaGen> {
    let h = FrameHom::gamma(frame, &a.chi)?;
    let ratio = match frame.tag() {
        RingTag::Zp => frame.one(),
        _ => gamma_e_over_e(frame.ctx(), &a.chi),
    };
    let moved = b.map.map_ring(&|s| h.apply(s), &ratio, frame);
    Ok(GammaGen {
        chi: a.chi.mul(&b.chi),
        map: a.map.compose(&moved),
    })
}

/// `gamma^k` by repeated squaring.
pub fn power_gen(frame: &Frame, g: &GammaGen, k: u64) -> Result<GammaGen> {
    if k == 0 {
        let n = g.map.mat.rows();
        let id = Mat::identity(frame.ctx(), n, frame.prec());
        let map = FilMap::plain(frame, &id, &g.map.src_mask, &g.map.tgt_mask);
        return Ok(GammaGen { chi: Chi::one(), map });
    }
    let mut acc: Option<GammaGen> = None;
    let mut base = g.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => compose_gen(frame, &a, &base)?,
            });
        }
        e >>= 1;
        if e > 0 {
            base = compose_gen(frame, &base, &base)?;
        }
    }
    Ok(acc.expect("k >= 1"))
}

/// The generators commute: `G_a gamma_a(G_b) = G_b gamma_b(G_a)`.
pub fn generators_commute(frame: &Frame, act: &GammaAction) -> Result<bool> {
    for (i, a) in act.generators.iter().enumerate() {
        for b in &act.generators[i + 1..] {
            if compose_gen(frame, a, b)?.map.mat != compose_gen(frame, b, a)?.map.mat {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn check_window_action(w: &Window, act: &GammaAction) -> Result<()> {
    for gen in &act.generators {
        if !window_defect(w, gen)?.is_zero() {
            return Err(Error::AxiomViolation(format!(
                "chi = {} is not a semilinear automorphism",
                gen.chi
            )));
        }
        if gen.map.mat.inverse().is_err() {
            return Err(Error::AxiomViolation(format!(
                "chi = {} acts by a non-invertible matrix",
                gen.chi
            )));
        }
    }
    if !generators_commute(w.frame(), act)? {
        return Err(Error::AxiomViolation("generators do not commute".into()));
    }
    Ok(())
}

pub fn check_bt_action(m: &BtModule, act: &GammaAction) -> Result<()> {
    for gen in &act.generators {
        if !bt_defect(m, gen)?.is_zero() {
            return Err(Error::AxiomViolation(format!(
                "chi = {} does not commute with phi",
                gen.chi
            )));
        }
    }
    if !generators_commute(m.frame(), act)? {
        return Err(Error::AxiomViolation("generators do not commute".into()));
    }
    Ok(())
}

/// Trivial modulo `u`.
pub fn is_strict_matrix(g: &Mat) -> bool {
    g.map(|x| x.constant_term()).is_identity()
}

/// Whether every generator with `chi = 1 mod p^s` acts trivially modulo `u`.
pub fn strictness_check(act: &GammaAction, p: u32, s: u32) -> bool {
    act.generators
        .iter()
        .filter(|g| g.chi.depth(p) >= s)
        .all(|g| is_strict_matrix(&g.map.mat))
}

/// `gamma(f)(gamma(m)) = lambda_gamma gamma(f(m))` on the dual BT module: `H = lambda G^{-T}`.
pub fn dual_bt_gen(m: &BtModule, gen: &GammaGen) -> Result<GammaGen> {
    let lam = Lambda::at_prec(m.frame().ctx(), &gen.chi, m.frame().prec())?;
    let h = gen.map.mat.inverse()?.transpose().scale(&lam.value);
    Ok(GammaGen {
        chi: gen.chi.clone(),
        map: bt_map(m, &h),
    })
}

pub fn dual_bt_action(m: &BtModule, act: &GammaAction) -> Result<GammaAction> {
    let generators = act
        .generators
        .iter()
        .map(|g| dual_bt_gen(m, g))
        .collect::<Result<_>>()?;
    Ok(GammaAction { generators })
}

/// Dual window action `s G^{-T}` with `s = phi(lambda_gamma)` over Sigma and `1`
/// over the divided-power frame.
pub fn dual_window_gen(w: &Window, gen: &GammaGen) -> Result<GammaGen> {
    let f = w.frame();
    let s = match f.tag() {
        RingTag::Sigma => Lambda::at_prec(f.ctx(), &gen.chi, f.prec())?.value.frobenius(),
        _ => f.one(),
    };
    let inv = gen.map.inverse()?;
    let mask: Vec<bool> = w.l_mask().iter().map(|b| !b).collect();
    let mat = inv.mat.transpose().scale(&s);
    let z = inv.z.transpose().scale(&s);
    Ok(GammaGen {
        chi: gen.chi.clone(),
        map: FilMap::new(f, &mat, &z, &mask, &mask),
    })
}

pub fn dual_window_action(w: &Window, act: &GammaAction) -> Result<GammaAction> {
    let generators = act
        .generators
        .iter()
        .map(|g| dual_window_gen(w, g))
        .collect::<Result<_>>()?;
    Ok(GammaAction { generators })
}

/// The action `(E / gamma E) gamma|_{Fil M}` on `win_to_bt(W)`, in the basis `l_i`, `E n_j`.
pub fn win_to_bt_gen(w: &Window, gen: &GammaGen) -> Result<GammaGen> {
    let f = w.frame();
    let eps = gamma_e_over_e(f.ctx(), &gen.chi).invert()?;
    let e = f.e();
    let (l, n) = (w.l_idx(), w.n_idx());
    let g = &gen.map;
    let mut h = g.mat.clone();
    for &i in &l {
        for &j in &l {
            h.set(i, j, eps.mul_ref(g.mat.get(i, j)));
        }
    }
    for (a, &i) in n.iter().enumerate() {
        for (b, &j) in l.iter().enumerate() {
            h.set(i, j, eps.mul_ref(g.z.get(a, b)));
        }
    }
    for &i in &l {
        for &j in &n {
            h.set(i, j, e.mul_ref(g.mat.get(i, j)));
        }
    }
    let m = crate::bt_modules::win_to_bt(w)?;
    Ok(GammaGen {
        chi: gen.chi.clone(),
        map: bt_map(&m, &h),
    })
}

/// The action `gamma (x) h` on `phi^* M`, written in the normal decomposition of
/// [`crate::bt_modules::bt_to_win`]; the `(N, L)` block is `E Z` with
/// `Z = (gamma E / E) A_22^{-1} (Q^{-1} H gamma(Q))_{N, L}`.
pub fn bt_to_win_gen(m: &BtModule, bw: &BtWindow, gen: &GammaGen) -> Result<GammaGen> {
    let f = m.frame();
    let h = FrameHom::gamma(f, &gen.chi)?;
    let n = m.rank();
    let d = bw.d_l;
    let p_inv = bw.p.inverse()?;
    let q_inv = bw.q.inverse()?;
    let hm = &gen.map.mat;
    let mat = bw.p.mul(&hm.frobenius()).mul(&h.apply_mat(&p_inv));
    let lidx: Vec<usize> = (0..d).collect();
    let nidx: Vec<usize> = (d..n).collect();
    let z = if d == 0 || d == n {
        Mat::zero(f.ctx(), n - d, d, f.prec())
    } else {
        let a2 = q_inv.mul(m.a()).mul(&p_inv).select(&nidx, &nidx);
        let inner = q_inv.mul(hm).mul(&h.apply_mat(&bw.q)).select(&nidx, &lidx);
        a2.inverse()?.mul(&inner).scale(&gamma_e_over_e(f.ctx(), &gen.chi))
    };
    let fil = FilMap::new(f, &mat, &z, bw.window.l_mask(), bw.window.l_mask());
    if fil.mat != mat {
        return Err(Error::AxiomViolation(
            "transferred action does not preserve the filtration".into(),
        ));
    }
    Ok(GammaGen {
        chi: gen.chi.clone(),
        map: fil,
    })
}

/// Base change of a Sigma-window action along `lambda`: the same matrices over the
/// divided-power frame.
pub fn lambda_gen(script: &Frame, gen: &GammaGen) -> GammaGen {
    let ctx = script.ctx();
    let mat = gen.map.mat.with_ctx(ctx);
    let z = gen.map.z.with_ctx(ctx);
    GammaGen {
        chi: gen.chi.clone(),
        map: FilMap::new(script, &mat, &z, &gen.map.src_mask, &gen.map.tgt_mask),
    }
}

/// `T g_src = g_tgt T` for a linear `T: src -> tgt`: `T G_src = G_tgt gamma(T)`.
pub fn intertwines(frame: &Frame, chi: &Chi, t: &Mat, g_src: &Mat, g_tgt: &Mat) -> Result<bool> {
    let h = FrameHom::gamma(frame, chi)?;
    Ok(t.mul(g_src) == g_tgt.mul(&h.apply_mat(t)))
}

/// Entrywise exact quotient by `t`, verified by multiplying back.
pub fn div_t_mat(frame: &Frame, x: &Mat) -> Result<Mat> {
    let t = frame.data().t();
    let ut = frame.data().u_over_t();
    let mut out = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let mut row = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let v = x.get(i, j);
            let q = div_by_t(v, ut)?;
            if &q.mul_ref(t) != v {
                return Err(Error::NotDivisible(format!("entry ({i}, {j}) is not divisible by t")));
            }
            row.push(q);
        }
        out.push(row);
    }
    Ok(Mat::from_rows(out))
}

fn require_script(w: &Window) -> Result<()> {
    if w.frame().tag() != RingTag::Script || w.frame().ctx().lift != Lift::Cyclotomic {
        return Err(Error::Unsupported(
            "this needs a window over the cyclotomic divided-power frame".into(),
        ));
    }
    Ok(())
}

fn int_scale(x: &Mat, c: &BigInt) -> Mat {
    x.map(|s| s.mul_int(c))
}

fn chi_pow_minus_one(chi: &Chi, e: u32) -> BigInt {
    chi.value().pow(e) - BigInt::one()
}

/// Certificate that `(gamma - 1)^(n+1)(M)` lies in `(t, p^r)^n t M`:
/// matrices `Y_0, .., Y_n` (columns indexed by the basis) with
/// `(gamma - 1)^(n+1)(e) = t sum_i t^i p^(r(n-i)) Y_i`.
pub fn strictm_certificate(w: &Window, gen: &GammaGen, n: u32) -> Result<Vec<Mat>> {
    require_script(w)?;
    let f = w.frame();
    let ctx = f.ctx();
    if gen.chi.depth(ctx.p) < ctx.r {
        return Err(Error::NoSmallGenerator);
    }
    if !is_strict_matrix(&gen.map.mat) {
        return Err(Error::NotStrict);
    }
    let h = FrameHom::gamma(f, &gen.chi)?;
    let g = &gen.map.mat;
    let minus_one = |x: &Mat| act_on(&h, g, x).sub(x);
    let pr = BigInt::from(ctx.p).pow(ctx.r);
    let id = Mat::identity(ctx, w.rank(), f.prec());
    let mut ys = vec![div_t_mat(f, &minus_one(&id))?];
    for k in 0..n {
        let mut next = Vec::with_capacity(ys.len() + 1);
        for i in 0..=(k as usize + 1) {
            let mut acc: Option<Mat> = None;
            if i < ys.len() {
                let c = chi_pow_minus_one(&gen.chi, i as u32 + 1) / &pr;
                acc = Some(int_scale(&ys[i], &c));
            }
            if i >= 1 {
                let q = div_t_mat(f, &minus_one(&ys[i - 1]))?;
                let term = int_scale(&q, &gen.chi.value().pow(i as u32));
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            next.push(acc.expect("some term"));
        }
        ys = next;
    }
    Ok(ys)
}

/// `t sum_i t^i p^(w(n-i)) Y_i`.
fn assemble(frame: &Frame, ys: &[Mat], weight: u32) -> Mat {
    let t = frame.data().t();
    let n = ys.len() - 1;
    let mut acc: Option<Mat> = None;
    let mut tp = t.clone();
    for (i, y) in ys.iter().enumerate() {
        let term = y.scale(&tp).map(|s| s.mul_p_pow(weight * (n - i) as u32));
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
        tp = tp.mul_ref(t);
    }
    acc.expect("nonempty certificate")
}

/// The quotients are elements of the ring, known to at least `N` digits.
///
/// `Y_i` is `i + 1` divisions by `t` deep, and each division leaves the top
/// coefficient undetermined, so membership is judged below `u^(M - i - 1)`.
fn within_budget(frame: &Frame, ys: &[Mat]) -> bool {
    let ctx = frame.ctx();
    ys.iter().enumerate().all(|(i, y)| {
        let known = ctx.m.saturating_sub(i + 1);
        y.entries()
            .iter()
            .all(|s| s.prec() >= ctx.n as i32 && frame.contains(&s.truncate_u(known)))
    })
}

/// Verifies `(gamma - 1)^(n+1)(M) ⊆ (t, p^r)^n t M` by an exact certificate.
pub fn gamma_bound_check(w: &Window, gen: &GammaGen, n: u32) -> Result<bool> {
    let ys = strictm_certificate(w, gen, n)?;
    let f = w.frame();
    let h = FrameHom::gamma(f, &gen.chi)?;
    let mut direct = Mat::identity(f.ctx(), w.rank(), f.prec());
    for _ in 0..=n {
        direct = act_on(&h, &gen.map.mat, &direct).sub(&direct);
    }
    Ok(within_budget(f, &ys) && assemble(f, &ys, f.ctx().r) == direct)
}

/// Certificate that `(gamma - 1)(M) ⊆ (t, p)^m t M` for `chi(gamma) = chi(delta)^(p^m)`,
/// built from `delta^(p^(k+1)) - 1 = (p + sum_{0<j<p} (delta^(j p^k) - 1)) (delta^(p^k) - 1)`.
pub fn deep_certificate(w: &Window, act: &dyn Fn(&Chi) -> Result<FilMap>, delta: &Chi, m: u32) -> Result<Vec<Mat>> {
    require_script(w)?;
    let f = w.frame();
    let ctx = f.ctx();
    if delta.depth(ctx.p) < ctx.r {
        return Err(Error::NoSmallGenerator);
    }
    let p = ctx.p;
    let step = |chi: &Chi| -> Result<(FrameHom, Mat)> {
        let map = act(chi)?;
        if !is_strict_matrix(&map.mat) {
            return Err(Error::NotStrict);
        }
        Ok((FrameHom::gamma(f, chi)?, map.mat))
    };
    let (h0, g0) = step(delta)?;
    let id = Mat::identity(ctx, w.rank(), f.prec());
    let mut ys = vec![div_t_mat(f, &act_on(&h0, &g0, &id).sub(&id))?];
    for k in 0..m {
        let mut next: Vec<Mat> = ys.clone();
        next.push(Mat::zero(ctx, w.rank(), w.rank(), f.prec()));
        for j in 1..p {
            let chi_j = delta.pow(j * p.pow(k));
            let (hj, gj) = step(&chi_j)?;
            for i in 0..=ys.len() {
                if i < ys.len() {
                    let c = chi_pow_minus_one(&chi_j, i as u32 + 1) / BigInt::from(p);
                    next[i] = next[i].add(&int_scale(&act_on(&hj, &gj, &ys[i]), &c));
                }
                if i >= 1 {
                    let y = &ys[i - 1];
                    next[i] = next[i].add(&div_t_mat(f, &act_on(&hj, &gj, y).sub(y))?);
                }
            }
        }
        ys = next;
    }
    Ok(ys)
}

/// Verifies `(gamma - 1)(M) ⊆ (t, p)^m t M` for `chi = delta^(p^m)`.
pub fn deep_bound_check(w: &Window, act: &dyn Fn(&Chi) -> Result<FilMap>, delta: &Chi, m: u32) -> Result<bool> {
    let ys = deep_certificate(w, act, delta, m)?;
    let f = w.frame();
    let chi = delta.pow(f.ctx().p.pow(m));
    let h = FrameHom::gamma(f, &chi)?;
    let g = act(&chi)?.mat;
    let id = Mat::identity(f.ctx(), w.rank(), f.prec());
    let direct = act_on(&h, &g, &id).sub(&id);
    Ok(within_budget(f, &ys) && assemble(f, &ys, 1) == direct)
}

/// `log(chi) / p^r`, a p-adic unit when `chi = 1 + p^r * unit`.
pub fn log_chi_unit(ctx: PrecisionCtx, chi: &Chi) -> Result<Series> {
    if chi.depth(ctx.p) != ctx.r {
        return Err(Error::NoSmallGenerator);
    }
    let prec = ctx.work_prec() + 8;
    let x = chi.value() - BigInt::one();
    let mut acc = Series::zero(ctx, prec);
    let mut pw = x.clone();
    let mut k: i64 = 1;
    // v(x^k / k) >= k r - log_p k exceeds prec well before k = 2 prec
    while k <= 2 * prec as i64 {
        let term = Series::constant(ctx, &pw, prec).div_int(&BigInt::from(k))?;
        acc = if k % 2 == 1 {
            acc.add_ref(&term)
        } else {
            acc.sub_ref(&term)
        };
        pw *= &x;
        k += 1;
        if pw.abs() > BigInt::one() && crate::padic_rings::subst::vp_int(ctx.p, &pw) as i64 > 3 * prec as i64 {
            break;
        }
    }
    Ok(acc.div_p_pow(ctx.r).truncate_prec(ctx.work_prec()))
}

/// `N_M(x) = (p^r / log chi) sum_{k >= 1} (-1)^(k+1) (gamma - 1)^k(x) / k` on coordinate
/// columns, summed until three consecutive increments vanish.
pub fn n_apply(w: &Window, gen: &GammaGen, x: &Mat) -> Result<Mat> {
    require_script(w)?;
    let f = w.frame();
    let ctx = f.ctx();
    if !is_strict_matrix(&gen.map.mat) {
        return Err(Error::NotStrict);
    }
    let unit = log_chi_unit(ctx, &gen.chi)?.invert()?;
    let h = FrameHom::gamma(f, &gen.chi)?;
    let mut pw = x.clone();
    let mut acc: Option<Mat> = None;
    let mut zeros = 0;
    let mut k: i64 = 1;
    while zeros < 3 {
        pw = act_on(&h, &gen.map.mat, &pw).sub(&pw);
        let term = pw.map(|s| s.div_int(&BigInt::from(k)).expect("k != 0"));
        zeros = if term.is_zero() { zeros + 1 } else { 0 };
        acc = Some(match acc {
            None => term,
            Some(a) if k % 2 == 1 => a.add(&term),
            Some(a) => a.sub(&term),
        });
        k += 1;
        if k > 64 * (ctx.m as i64 + ctx.work_prec() as i64) {
            return Err(Error::PrecisionLoss("log series does not terminate".into()));
        }
    }
    Ok(acc.expect("at least one term").scale(&unit))
}

/// The matrix of `N_M` (columns `N_M(e_j)`), using the first generator with
/// `chi = 1 + p^r * unit`.
pub fn n_operator(w: &Window, act: &GammaAction) -> Result<Mat> {
    let p = w.frame().ctx().p;
    let r = w.frame().ctx().r;
    let gen = act
        .generators
        .iter()
        .find(|g| g.chi.depth(p) == r)
        .ok_or(Error::NoSmallGenerator)?;
    let id = Mat::identity(w.frame().ctx(), w.rank(), w.frame().prec());
    n_apply(w, gen, &id)
}

/// `N_S = (1 + u) t d/du` entrywise.
pub fn n_s_mat(frame: &Frame, x: &Mat) -> Mat {
    let t = frame.data().t();
    x.map(|s| elements::n_s(s, t))
}

/// Outcome of the `N_M` identities on one window.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NmChecks {
    pub divisible_by_t: bool,
    pub commutes_with_phi: bool,
    pub leibniz: bool,
    pub generator_independent: bool,
    pub commutes_with_gamma: bool,
}

impl NmChecks {
    pub fn all(&self) -> bool {
        self.divisible_by_t
            && self.commutes_with_phi
            && self.leibniz
            && self.generator_independent
            && self.commutes_with_gamma
    }
}

/// Checks the `N_M` identities for the matrix `nm` computed from `first`,
/// using `second` (another generator `1 + p^r * unit`) for independence,
/// `sample` for the Leibniz rule, and every generator of `act` for commutation.
pub fn n_checks(
    w: &Window,
    act: &GammaAction,
    first: &GammaGen,
    second: &GammaGen,
    sample: &Series,
) -> Result<NmChecks> {
    let f = w.frame();
    let id = Mat::identity(f.ctx(), w.rank(), f.prec());
    let nm = n_apply(w, first, &id)?;
    let divisible_by_t = div_t_mat(f, &nm).is_ok();
    let fm = w.f_matrix();
    let commutes_with_phi = n_s_mat(f, &fm).add(&nm.mul(&fm)) == fm.mul(&nm.frobenius());
    let x = id.col(0).scale(sample);
    let leibniz = n_apply(w, first, &x)? == n_s_mat(f, &x).add(&nm.mul(&x));
    let generator_independent = n_apply(w, second, &id)? == nm;
    let mut commutes_with_gamma = true;
    for g in &act.generators {
        let h = FrameHom::gamma(f, &g.chi)?;
        let gm = &g.map.mat;
        commutes_with_gamma &= n_s_mat(f, gm).add(&nm.mul(gm)) == gm.mul(&h.apply_mat(&nm));
    }
    Ok(NmChecks {
        divisible_by_t,
        commutes_with_phi,
        leibniz,
        generator_independent,
        commutes_with_gamma,
    })
}

/// The unique connection matrix `C` (coefficient of `du`) with `C - U(C) = D`.
#[derive(Clone, Debug)]
pub struct Connection {
    /// Matrix of `F` in the basis `Psi e_j`.
    pub a: Mat,
    /// `B = phi(B~)`, the matrix of `V`.
    pub b: Mat,
    pub b_tilde: Mat,
    pub d: Mat,
    pub c: Mat,
    pub iterations: usize,
}

/// `U(C) = A phi(C) u^(p-1) B`.
pub fn connection_u(a: &Mat, b: &Mat, c: &Mat, p: u32) -> Mat {
    a.mul(&c.frobenius().map(|s| s.mul_u_pow(p as usize - 1))).mul(b)
}

/// Neumann iteration `C <- U(C) + D` for a window over the divided-power frame
/// with the standard lift, where `(d phi)_1(du) = u^(p-1) du` is topologically nilpotent.
pub fn solve_connection(w: &Window) -> Result<Connection> {
    let f = w.frame();
    let ctx = f.ctx();
    if f.tag() != RingTag::Script {
        return Err(Error::Unsupported(
            "the connection solver works over the divided-power frame".into(),
        ));
    }
    if ctx.lift != Lift::Standard {
        return Err(Error::NotNilpotent);
    }
    let p_s = f.int(ctx.p as i64);
    let one = f.one();
    let a = w.psi().frobenius().scale_rows(&w.split_diag(&p_s, &one));
    let b_tilde = w.psi().inverse()?.scale_cols(&w.split_diag(&one, &p_s));
    let b = b_tilde.frobenius();
    let d = a.mul(
        &b_tilde
            .map(|s| s.derivative())
            .frobenius()
            .map(|s| s.mul_u_pow(ctx.p as usize - 1)),
    );
    let (c, iterations) = neumann(&a, &b, &d, &d, ctx)?;
    Ok(Connection {
        a,
        b,
        b_tilde,
        d,
        c,
        iterations,
    })
}

/// Iterates `C <- U(C) + D` from `start` until the iterate is stable.
pub fn neumann(a: &Mat, b: &Mat, d: &Mat, start: &Mat, ctx: PrecisionCtx) -> Result<(Mat, usize)> {
    let bound = iterate_bound(ctx);
    let mut c = start.clone();
    for it in 1..=4 * bound {
        let next = connection_u(a, b, &c, ctx.p).add(d);
        if next == c {
            return Ok((c, it));
        }
        c = next;
    }
    Err(Error::PrecisionLoss("Neumann iteration did not stabilise".into()))
}

/// `ceil(M / (p - 1)) + N`.
pub fn iterate_bound(ctx: PrecisionCtx) -> usize {
    ctx.m.div_ceil(ctx.p as usize - 1) + ctx.n as usize
}

impl Connection {
    /// `C - U(C) - D`.
    pub fn residual(&self, p: u32) -> Mat {
        self.c.sub(&connection_u(&self.a, &self.b, &self.c, p)).sub(&self.d)
    }

    /// `A B = p`.
    pub fn ab_is_p(&self, frame: &Frame) -> bool {
        let n = self.a.rows();
        self.a.mul(&self.b) == Mat::identity(frame.ctx(), n, frame.prec()).scale(&frame.int(frame.ctx().p as i64))
    }

    /// `A' + C A = p u^(p-1) A phi(C)`, compared below the top u-degree where
    /// the derivative is undetermined.
    pub fn is_horizontal(&self, frame: &Frame) -> bool {
        let ctx = frame.ctx();
        let lhs = self.a.map(|s| s.derivative()).add(&self.c.mul(&self.a));
        let rhs = self
            .a
            .mul(&self.c.frobenius())
            .map(|s| s.mul_u_pow(ctx.p as usize - 1).mul_p_pow(1));
        lhs.eq_at(&rhs, ctx.n, ctx.m - 1)
    }
}

#[cfg(test)]
mod tests;
