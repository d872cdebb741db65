//! Objects with known Gamma-actions: the Tate object, `G_m`, unramified
//! twists, direct sums and equivariant extensions.
//!
//! Every object is a window over the Sigma frame with an action given per
//! character value; the divided-power window and the BT module are derived
//! from it by base change along `lambda` and by `win_to_bt`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};

use crate::bt_modules::{win_to_bt, BtModule};
use crate::error::{Error, Result};
use crate::frames::{Frame, FrameHom};
use crate::gamma_calculus::{self as gc, GammaAction, GammaGen, Lambda};
use crate::linalg;
use crate::matrix::Mat;
use crate::padic_rings::series::ppow;
use crate::padic_rings::{Chi, PrecisionCtx, Series};
use crate::windows::{indices, is_iso_fv, FilMap, Window};

#[derive(Clone, Debug)]
enum ActionRecipe {
    Trivial,
    /// `phi(lambda_gamma)` on the rank-one dual unit window.
    Gm,
    Same(Box<ZooObject>),
    Sum(Box<ZooObject>, Box<ZooObject>),
    /// Block upper-triangular: the sub-object first, the corner solved per character.
    Extension {
        sub: Box<ZooObject>,
        quotient: Box<ZooObject>,
    },
}

#[derive(Clone, Debug)]
pub struct ZooObject {
    pub name: String,
    pub sigma: Window,
    pub script: Window,
    pub bt: BtModule,
    recipe: ActionRecipe,
    cache: Arc<Mutex<HashMap<Chi, FilMap>>>,
}

/// Names accepted by [`build`].
pub const NAMES: [&str; 6] = ["tate", "gm", "tate-twist", "gm-twist", "sum", "ext"];

impl ZooObject {
    fn assemble(name: &str, sigma: Window, recipe: ActionRecipe) -> Result<ZooObject> {
        let ctx = sigma.frame().ctx();
        let script = sigma.base_change(&FrameHom::lambda(ctx))?;
        let bt = win_to_bt(&sigma)?;
        Ok(ZooObject {
            name: name.to_string(),
            sigma,
            script,
            bt,
            recipe,
            cache: Arc::default(),
        })
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.sigma.frame().ctx()
    }

    pub fn rank(&self) -> usize {
        self.sigma.rank()
    }

    /// The matrix of `gamma` on the Sigma window.
    pub fn sigma_action(&self, chi: &Chi) -> Result<FilMap> {
        if let Some(m) = self.cache.lock().expect("action cache").get(chi) {
            return Ok(m.clone());
        }
        let f = self.sigma.frame();
        let mask = self.sigma.l_mask();
        let map = match &self.recipe {
            ActionRecipe::Trivial => FilMap::identity(&self.sigma),
            ActionRecipe::Gm => {
                let lam = Lambda::at_prec(f.ctx(), chi, f.prec())?.value.frobenius();
                FilMap::plain(f, &Mat::scalar(&lam), mask, mask)
            }
            ActionRecipe::Same(o) => o.sigma_action(chi)?,
            ActionRecipe::Sum(a, b) => fil_direct_sum(f, &a.sigma_action(chi)?, &b.sigma_action(chi)?),
            ActionRecipe::Extension { sub, quotient } => {
                solve_extension_action(&self.sigma, chi, &sub.sigma_action(chi)?, &quotient.sigma_action(chi)?)?
            }
        };
        self.cache
            .lock()
            .expect("action cache")
            .insert(chi.clone(), map.clone());
        Ok(map)
    }

    pub fn sigma_gen(&self, chi: &Chi) -> Result<GammaGen> {
        Ok(GammaGen {
            chi: chi.clone(),
            map: self.sigma_action(chi)?,
        })
    }

    /// The same matrices over the divided-power frame.
    pub fn script_action(&self, chi: &Chi) -> Result<FilMap> {
        Ok(gc::lambda_gen(self.script.frame(), &self.sigma_gen(chi)?).map)
    }

    pub fn script_gen(&self, chi: &Chi) -> Result<GammaGen> {
        Ok(GammaGen {
            chi: chi.clone(),
            map: self.script_action(chi)?,
        })
    }

    pub fn bt_gen(&self, chi: &Chi) -> Result<GammaGen> {
        gc::win_to_bt_gen(&self.sigma, &self.sigma_gen(chi)?)
    }

    pub fn sigma_actions(&self, chis: &[Chi]) -> Result<GammaAction> {
        Ok(GammaAction {
            generators: chis.iter().map(|c| self.sigma_gen(c)).collect::<Result<_>>()?,
        })
    }

    pub fn script_actions(&self, chis: &[Chi]) -> Result<GammaAction> {
        Ok(GammaAction {
            generators: chis.iter().map(|c| self.script_gen(c)).collect::<Result<_>>()?,
        })
    }

    pub fn bt_actions(&self, chis: &[Chi]) -> Result<GammaAction> {
        Ok(GammaAction {
            generators: chis.iter().map(|c| self.bt_gen(c)).collect::<Result<_>>()?,
        })
    }
}

fn fil_direct_sum(frame: &Frame, a: &FilMap, b: &FilMap) -> FilMap {
    let (ra, rb) = (a.mat.rows(), b.mat.rows());
    let mat = Mat::from_fn(ra + rb, ra + rb, |i, j| match (i < ra, j < ra) {
        (true, true) => a.mat.get(i, j).clone(),
        (false, false) => b.mat.get(i - ra, j - ra).clone(),
        _ => frame.zero(),
    });
    let (za, zb) = (&a.z, &b.z);
    let z = Mat::from_fn(za.rows() + zb.rows(), za.cols() + zb.cols(), |i, j| {
        match (i < za.rows(), j < za.cols()) {
            (true, true) => za.get(i, j).clone(),
            (false, false) => zb.get(i - za.rows(), j - za.cols()).clone(),
            _ => frame.zero(),
        }
    });
    let mut mask = a.src_mask.clone();
    mask.extend_from_slice(&b.src_mask);
    FilMap {
        mat,
        z,
        src_mask: mask.clone(),
        tgt_mask: mask,
    }
}

/// `Q_p/Z_p`: the unit window with the ring action.
pub fn std_tate(ctx: PrecisionCtx) -> Result<ZooObject> {
    ZooObject::assemble("tate", Window::unit(&Frame::sigma(ctx)), ActionRecipe::Trivial)
}

/// `G_m`: the dual unit window with `gamma` acting by `phi(lambda_gamma)`;
/// its BT module is `(Sigma, E phi)` with `gamma` acting by `lambda_gamma`.
pub fn std_gm(ctx: PrecisionCtx) -> Result<ZooObject> {
    ZooObject::assemble("gm", Window::unit_dual(&Frame::sigma(ctx)), ActionRecipe::Gm)
}

/// `Psi -> a Psi` for a unit `a` of `Z_p`; the action is unchanged.
pub fn unramified_twist(obj: &ZooObject, a: &BigInt) -> Result<ZooObject> {
    let f = obj.sigma.frame();
    let a = Series::constant(f.ctx(), a, f.prec());
    if !a.is_unit() {
        return Err(Error::NotAUnit);
    }
    let name = format!("{}-twist", obj.name);
    ZooObject::assemble(&name, obj.sigma.twist(&a), ActionRecipe::Same(Box::new(obj.clone())))
}

pub fn direct_sum(a: &ZooObject, b: &ZooObject) -> Result<ZooObject> {
    let name = format!("{}+{}", a.name, b.name);
    ZooObject::assemble(
        &name,
        a.sigma.direct_sum(&b.sigma)?,
        ActionRecipe::Sum(Box::new(a.clone()), Box::new(b.clone())),
    )
}

/// An extension `0 -> sub -> X -> quotient -> 0` with `Psi = [[Psi_sub, g e_00], [0, Psi_quot]]`.
///
/// The corner of each action matrix is solved for; fails with
/// `NoEquivariantExtension` when no strict solution exists for the default generators.
pub fn extension(quotient: &ZooObject, sub: &ZooObject, g: &Series) -> Result<ZooObject> {
    let f = sub.sigma.frame();
    let (rs, rq) = (sub.rank(), quotient.rank());
    let psi = Mat::from_fn(rs + rq, rs + rq, |i, j| match (i < rs, j < rs) {
        (true, true) => sub.sigma.psi().get(i, j).clone(),
        (false, false) => quotient.sigma.psi().get(i - rs, j - rs).clone(),
        (true, false) if i == 0 && j == rs => g.clone(),
        _ => f.zero(),
    });
    let mut mask = sub.sigma.l_mask().to_vec();
    mask.extend_from_slice(quotient.sigma.l_mask());
    let window = Window::new(f.clone(), mask, psi)?;
    let name = format!("ext({},{})", quotient.name, sub.name);
    let obj = ZooObject::assemble(
        &name,
        window,
        ActionRecipe::Extension {
            sub: Box::new(sub.clone()),
            quotient: Box::new(quotient.clone()),
        },
    )?;
    // when the corner is not unique per generator, the chosen solutions must still commute
    let action = obj.sigma_actions(&gc::default_chis(obj.ctx()))?;
    if !gc::generators_commute(obj.sigma.frame(), &action)? {
        return Err(Error::NoEquivariantExtension);
    }
    Ok(obj)
}

/// Solves `Psi phi~(G) = G gamma(Psi) diag(c_gamma on L, 1 on N)` for the corner
/// `H` of `G = [[G_sub, H], [0, G_quot]]`, with `H = 0 mod u`, over `Z/p^k`.
fn solve_extension_action(w: &Window, chi: &Chi, sub: &FilMap, quot: &FilMap) -> Result<FilMap> {
    let f = w.frame();
    let ctx = f.ctx();
    let prec = f.prec();
    let rs = sub.mat.rows();
    let rank = w.rank();
    let rq = rank - rs;
    let mask = w.l_mask().to_vec();
    let hom = FrameHom::gamma(f, chi)?;
    let n_rows = indices(&mask, false);
    let l_cols = indices(&mask, true);
    let len = ctx.m;
    // corner entries in the (N, L) block carry a factor E
    let build = |corner: &dyn Fn(usize, usize) -> Series| -> FilMap {
        let mat = Mat::from_fn(rank, rank, |i, j| match (i < rs, j < rs) {
            (true, true) => sub.mat.get(i, j).clone(),
            (false, false) => quot.mat.get(i - rs, j - rs).clone(),
            (true, false) => corner(i, j - rs),
            _ => f.zero(),
        });
        let z = Mat::from_fn(n_rows.len(), l_cols.len(), |a, b| {
            let (i, j) = (n_rows[a], l_cols[b]);
            match (i < rs, j < rs) {
                (true, true) => sub
                    .z
                    .get(
                        n_rows[..a].iter().filter(|&&x| x < rs).count(),
                        l_cols[..b].iter().filter(|&&x| x < rs).count(),
                    )
                    .clone(),
                (false, false) => quot
                    .z
                    .get(
                        n_rows[..a].iter().filter(|&&x| x >= rs).count(),
                        l_cols[..b].iter().filter(|&&x| x >= rs).count(),
                    )
                    .clone(),
                (true, false) => corner(i, j - rs),
                _ => f.zero(),
            }
        });
        FilMap::new(f, &mat, &z, &mask, &mask)
    };
    let defect = |x: &FilMap| -> Mat {
        crate::windows::hom_defect(w, w, x, &|s| hom.apply(s), &hom.c)
            .select(&(0..rs).collect::<Vec<_>>(), &(rs..rank).collect::<Vec<_>>())
    };
    let zero = f.zero();
    let base = defect(&build(&|_, _| zero.clone()));
    let k = base.min_prec().min(prec).max(1) as u32;
    let modulus = ppow(ctx.p, k);
    let unknowns: Vec<(usize, usize, usize)> = (0..rs)
        .flat_map(|i| (0..rq).flat_map(move |j| (0..len).map(move |a| (i, j, a))))
        .collect();
    let digits = |s: &Series, a: usize| -> BigUint {
        let (num, scale) = s.coeff(a);
        (num / ppow(ctx.p, scale)) % &modulus
    };
    let mut columns = Vec::with_capacity(unknowns.len());
    for &(i0, j0, a0) in &unknowns {
        let mono = Series::monomial(ctx, a0, prec);
        let x = build(&|i, j| if (i, j) == (i0, j0) { mono.clone() } else { zero.clone() });
        let d = defect(&x).sub(&base);
        let mut col: Vec<BigUint> = d
            .entries()
            .iter()
            .flat_map(|e| (0..len).map(|a| digits(e, a)))
            .collect();
        // strictness: the corner vanishes at u = 0
        for i in 0..rs {
            for j in 0..rq {
                let is_e = !mask[i] && mask[rs + j];
                let v = if (i, j, 0) == (i0, j0, a0) {
                    if is_e {
                        ctx.p
                    } else {
                        1
                    }
                } else {
                    0
                };
                col.push(BigUint::from(v));
            }
        }
        columns.push(col);
    }
    let rhs: Vec<BigUint> = base
        .entries()
        .iter()
        .flat_map(|e| (0..len).map(|a| (&modulus - digits(e, a)) % &modulus))
        .chain(std::iter::repeat_n(BigUint::from(0u32), rs * rq))
        .collect();
    let nrows = rhs.len();
    let rows: Vec<Vec<BigUint>> = (0..nrows)
        .map(|r| columns.iter().map(|c| c[r].clone()).collect())
        .collect();
    let sol = linalg::solve(&rows, unknowns.len(), &rhs, ctx.p, k).ok_or(Error::NoEquivariantExtension)?;
    let lost = linalg::max_pivot_valuation(&rows, unknowns.len(), ctx.p, k);
    if lost + ctx.n > k {
        return Err(Error::PrecisionLoss(format!(
            "extension corner loses {lost} of {k} digits"
        )));
    }
    let good = (k - lost) as i32;
    let corner = |i: usize, j: usize| -> Series {
        let coeffs: Vec<BigInt> = (0..len)
            .map(|a| BigInt::from(sol[unknowns.iter().position(|&u| u == (i, j, a)).expect("unknown")].clone()))
            .collect();
        Series::from_bigints(ctx, &coeffs, 0, good)
    };
    let map = build(&corner);
    if !gc::window_defect(
        w,
        &GammaGen {
            chi: chi.clone(),
            map: map.clone(),
        },
    )?
    .is_zero()
    {
        return Err(Error::NoEquivariantExtension);
    }
    Ok(map)
}

/// `lambda^*(S^t) -> S^t`, the isomorphism given by `y = u_0 / t`, together with
/// the transported action, which is trivial: `y phi(lambda_gamma) / gamma(y) = 1`.
pub fn gm_standard_avatar(gm: &ZooObject, chi: &Chi) -> Result<(Window, Mat, Mat)> {
    let f = gm.script.frame();
    let target = Window::unit_dual(f);
    let y = Mat::scalar(f.data().y());
    if !is_iso_fv(&gm.script, &target, &y)? {
        return Err(Error::AxiomViolation(
            "u0/t is not an isomorphism onto the standard dual window".into(),
        ));
    }
    let hom = FrameHom::gamma(f, chi)?;
    let g = gm.script_action(chi)?.mat;
    let transported = y.mul(&g).mul(&hom.apply_mat(&y).inverse()?);
    Ok((target, y, transported))
}

/// The zoo by name: `tate`, `gm`, their twists by `2`, `tate + gm`, and the
/// extension of `tate` by `gm` with class `u`.
pub fn build(name: &str, ctx: PrecisionCtx) -> Result<ZooObject> {
    let two = BigInt::from(2);
    match name {
        "tate" => std_tate(ctx),
        "gm" => std_gm(ctx),
        "tate-twist" => unramified_twist(&std_tate(ctx)?, &two),
        "gm-twist" => unramified_twist(&std_gm(ctx)?, &two),
        "sum" => direct_sum(&std_tate(ctx)?, &std_gm(ctx)?),
        "ext" => {
            let f = Frame::sigma(ctx);
            extension(&std_tate(ctx)?, &std_gm(ctx)?, &Series::var(ctx, f.prec()))
        }
        other => Err(Error::Parse(format!(
            "unknown zoo object {other:?}; known: {}",
            NAMES.join(", ")
        ))),
    }
}

pub fn all(ctx: PrecisionCtx) -> Result<Vec<ZooObject>> {
    NAMES.iter().map(|n| build(n, ctx)).collect()
}
