//! Frames over the truncated rings and homomorphisms between them.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic_rings::elements::{self, FilWitness};
use crate::padic_rings::{Chi, Lift, PrecisionCtx, RingSubst, Series};

/// Elements of one level that are expensive to recompute.
pub struct LevelData {
    ctx: PrecisionCtx,
    e: OnceLock<Series>,
    phi_e: OnceLock<Series>,
    c: OnceLock<Series>,
    u0: OnceLock<Series>,
    t: OnceLock<Series>,
    y: OnceLock<Series>,
    u_over_t: OnceLock<Series>,
}

impl LevelData {
    pub fn new(ctx: PrecisionCtx) -> LevelData {
        LevelData {
            ctx,
            e: OnceLock::new(),
            phi_e: OnceLock::new(),
            c: OnceLock::new(),
            u0: OnceLock::new(),
            t: OnceLock::new(),
            y: OnceLock::new(),
            u_over_t: OnceLock::new(),
        }
    }

    /// One cache per context for the whole process.
    pub fn shared(ctx: PrecisionCtx) -> Arc<LevelData> {
        static CACHE: OnceLock<Mutex<HashMap<PrecisionCtx, Arc<LevelData>>>> = OnceLock::new();
        let mut map = CACHE.get_or_init(Default::default).lock().expect("level cache");
        map.entry(ctx).or_insert_with(|| Arc::new(LevelData::new(ctx))).clone()
    }

    pub fn e(&self) -> &Series {
        self.e.get_or_init(|| elements::e_elem(self.ctx))
    }

    pub fn phi_e(&self) -> &Series {
        self.phi_e.get_or_init(|| self.e().frobenius())
    }

    pub fn c(&self) -> &Series {
        self.c.get_or_init(|| self.phi_e().div_p_pow(1))
    }

    pub fn u0(&self) -> &Series {
        self.u0.get_or_init(|| elements::u0(self.ctx))
    }

    pub fn t(&self) -> &Series {
        self.t.get_or_init(|| elements::t_log(self.ctx))
    }

    /// `y = u_0 / t`, with `phi(y) = c y`.
    pub fn y(&self) -> &Series {
        self.y.get_or_init(|| elements::u0_over_t(self.ctx, self.u_over_t()))
    }

    pub fn u_over_t(&self) -> &Series {
        self.u_over_t.get_or_init(|| elements::u_over_t(self.ctx))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingTag {
    /// `Z_p[[u]]` with `Fil = E`, `varpi = phi(E)`.
    Sigma,
    /// The divided-power envelope with `varpi = p`.
    Script,
    /// `Z_p` with `Fil = (p)` and trivial Frobenius.
    Zp,
}

impl RingTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RingTag::Sigma => "sigma",
            RingTag::Script => "script",
            RingTag::Zp => "zp",
        }
    }
}

#[derive(Clone)]
pub struct Frame {
    tag: RingTag,
    ctx: PrecisionCtx,
    var_level: u32,
    data: Arc<LevelData>,
    varpi_override: Option<Series>,
}

impl PartialEq for Frame {
    fn eq(&self, o: &Frame) -> bool {
        self.tag == o.tag
            && self.ctx == o.ctx
            && self.var_level == o.var_level
            && self.varpi_override.is_none() == o.varpi_override.is_none()
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Frame({}, r={}, var={}, {})",
            self.tag.as_str(),
            self.ctx.r,
            self.var_level,
            self.ctx.lift.as_str()
        )
    }
}

/// JSON descriptor of a frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDesc {
    pub ring: RingTag,
    pub r: u32,
    pub lift: Lift,
    pub var_level: u32,
}

impl Frame {
    fn build(tag: RingTag, ctx: PrecisionCtx, var_level: u32) -> Frame {
        Frame {
            tag,
            ctx,
            var_level,
            data: LevelData::shared(ctx),
            varpi_override: None,
        }
    }

    pub fn sigma(ctx: PrecisionCtx) -> Frame {
        Frame::build(RingTag::Sigma, ctx, ctx.r)
    }

    pub fn script(ctx: PrecisionCtx) -> Frame {
        Frame::build(RingTag::Script, ctx, ctx.r)
    }

    /// The residue frame over `Z_p`, obtained by `u = 0`.
    pub fn zp(ctx: PrecisionCtx) -> Frame {
        let zctx = PrecisionCtx::new(ctx.p, ctx.n, 1, ctx.r, ctx.lift).expect("valid");
        let zctx = PrecisionCtx { k: ctx.k, ..zctx };
        Frame::build(RingTag::Zp, zctx, ctx.r)
    }

    /// A Sigma frame whose variable is `u_s` while `E = E_r(u_s)`.
    pub fn sigma_relabeled(ctx: PrecisionCtx, var_level: u32) -> Frame {
        Frame::build(RingTag::Sigma, ctx, var_level)
    }

    /// The same frame over another precision context (same `p`, `M`, level).
    pub fn with_ctx(&self, ctx: PrecisionCtx) -> Frame {
        let ctx = match self.tag {
            RingTag::Zp => PrecisionCtx { m: 1, ..ctx },
            _ => ctx,
        };
        Frame::build(self.tag, ctx, self.var_level)
    }

    /// Copy with `varpi` replaced; used as a negative control for the checks.
    pub fn with_varpi(&self, varpi: Series) -> Frame {
        Frame {
            varpi_override: Some(varpi),
            ..self.clone()
        }
    }

    pub fn tag(&self) -> RingTag {
        self.tag
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.ctx
    }

    pub fn var_level(&self) -> u32 {
        self.var_level
    }

    pub fn data(&self) -> &LevelData {
        &self.data
    }

    pub fn desc(&self) -> FrameDesc {
        FrameDesc {
            ring: self.tag,
            r: self.ctx.r,
            lift: self.ctx.lift,
            var_level: self.var_level,
        }
    }

    pub fn from_desc(ctx: PrecisionCtx, d: &FrameDesc) -> Result<Frame> {
        let ctx = PrecisionCtx::new(ctx.p, ctx.n, ctx.m, d.r, d.lift)?;
        Ok(match d.ring {
            RingTag::Sigma => Frame::sigma_relabeled(ctx, d.var_level),
            RingTag::Script => Frame::script(ctx),
            RingTag::Zp => Frame::zp(ctx),
        })
    }

    pub fn prec(&self) -> i32 {
        self.ctx.work_prec()
    }

    pub fn one(&self) -> Series {
        Series::one(self.ctx, self.prec())
    }

    pub fn zero(&self) -> Series {
        Series::zero(self.ctx, self.prec())
    }

    pub fn int(&self, c: i64) -> Series {
        Series::from_i64(self.ctx, c, self.prec())
    }

    /// Generator of the filtration (its image `p` on the residue frame).
    pub fn e(&self) -> Series {
        match self.tag {
            RingTag::Zp => self.int(self.ctx.p as i64),
            _ => self.data.e().clone(),
        }
    }

    pub fn varpi(&self) -> Series {
        if let Some(v) = &self.varpi_override {
            return v.clone();
        }
        match self.tag {
            RingTag::Sigma => self.data.phi_e().clone(),
            RingTag::Script | RingTag::Zp => self.int(self.ctx.p as i64),
        }
    }

    pub fn phi(&self, x: &Series) -> Series {
        x.frobenius()
    }

    /// `phi_1(E)`: 1 on Sigma and Zp, `c` on Script.
    pub fn phi1_e(&self) -> Series {
        match self.tag {
            RingTag::Script => self.data.c().clone(),
            _ => self.one(),
        }
    }

    /// Divided Frobenius on a witnessed element of the filtration.
    pub fn phi1(&self, w: &FilWitness) -> Result<Series> {
        match self.tag {
            RingTag::Sigma => match w {
                FilWitness::EMul(y) => Ok(y.frobenius()),
                FilWitness::Sum(v) if !v.is_empty() => {
                    let mut acc = self.phi1(&v[0])?;
                    for x in &v[1..] {
                        acc = acc.add_ref(&self.phi1(x)?);
                    }
                    Ok(acc)
                }
                _ => Err(Error::NotInFil),
            },
            RingTag::Script => match w {
                FilWitness::EMul(y) => Ok(self.data.c().mul_ref(&y.frobenius())),
                _ => elements::phi1_fil(w),
            },
            RingTag::Zp => Ok(w.value().frobenius().div_p_pow(1)),
        }
    }

    /// Spot-check generators of the filtration.
    pub fn fil_generators(&self, seed: u64) -> Vec<FilWitness> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rnd = Series::random_deg(self.ctx, self.prec(), self.ctx.m.min(8), &mut rng);
        match self.tag {
            RingTag::Sigma => vec![FilWitness::EMul(self.one()), FilWitness::EMul(rnd)],
            RingTag::Script => {
                let mut v = vec![FilWitness::EMul(self.one()), FilWitness::EMul(rnd.clone())];
                for n in 2..=(self.ctx.p as u64 + 1) {
                    v.push(FilWitness::DividedPower(n, self.one()));
                }
                v.push(FilWitness::DividedPower(self.ctx.p as u64, rnd));
                v
            }
            RingTag::Zp => vec![FilWitness::PMul(self.one()), FilWitness::PMul(rnd)],
        }
    }

    /// Whether `x` lies in the ring: integral coefficients, except that over the
    /// divided-power ring the coefficient of `u^k` may have denominator `floor(k/e)!`.
    pub fn contains(&self, x: &Series) -> bool {
        let ctx = self.ctx;
        let e = ctx.e_degree(ctx.r) as u64;
        (0..ctx.m).all(|k| {
            if x.coeff_is_zero(k) {
                return true;
            }
            let (num, scale) = x.coeff(k);
            let allowed = match self.tag {
                RingTag::Script => crate::padic_rings::ctx::vp_factorial(ctx.p, k as u64 / e),
                _ => 0,
            };
            let v = crate::padic_rings::series::vp_big(ctx.p, &num);
            // digits beyond the known precision are not constraints
            v as i64 - scale as i64 >= -(allowed as i64) || v as i64 - scale as i64 >= x.prec() as i64
        })
    }

    /// Frame axioms at precision: Frobenius is the p-power map mod p,
    /// `phi = varpi * phi_1` on the filtration, and the filtration and `p`
    /// are in the radical.
    pub fn check(&self) -> Result<()> {
        let ctx = self.ctx;
        let prec = self.prec();
        for k in 0..ctx.m.min(6) {
            let x = Series::monomial(ctx, k, prec);
            let diff = self.phi(&x).sub_ref(&x.pow(ctx.p as u64));
            if !diff.is_zero_at(1) {
                return Err(Error::AxiomViolation(format!("phi(u^{k}) is not u^{}k mod p", ctx.p)));
            }
        }
        let varpi = self.varpi();
        for (i, w) in self.fil_generators(17).iter().enumerate() {
            let lhs = self.phi(&w.value());
            let rhs = varpi.mul_ref(&self.phi1(w)?);
            if lhs != rhs {
                return Err(Error::AxiomViolation(format!(
                    "phi != varpi * phi_1 on filtration generator {i}"
                )));
            }
        }
        if self.e().is_unit() {
            return Err(Error::AxiomViolation("filtration generator is a unit".into()));
        }
        if self.int(ctx.p as i64).is_unit() {
            return Err(Error::AxiomViolation("p is a unit".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HomKind {
    Identity,
    /// Inclusion of the Sigma ring into the Script ring.
    Lambda,
    Gamma(Chi),
    /// `u_r -> (1 + u_{r+1})^p - 1`.
    Level,
    /// Relabels `u_r` as `u_s`.
    LambdaRs(u32),
    /// `u -> 0` onto the residue frame.
    Quotient,
    Compose(Box<HomKind>, Box<HomKind>),
}

/// A `c`-homomorphism of frames.
#[derive(Clone)]
pub struct FrameHom {
    pub kind: HomKind,
    pub source: Frame,
    pub target: Frame,
    pub c: Series,
    subst: Option<Arc<RingSubst>>,
    gamma_e_ratio: Option<Series>,
    first: Option<Box<FrameHom>>,
    second: Option<Box<FrameHom>>,
}

impl fmt::Debug for FrameHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FrameHom({:?}: {:?} -> {:?})", self.kind, self.source, self.target)
    }
}

impl FrameHom {
    fn plain(kind: HomKind, source: Frame, target: Frame, c: Series) -> FrameHom {
        FrameHom {
            kind,
            source,
            target,
            c,
            subst: None,
            gamma_e_ratio: None,
            first: None,
            second: None,
        }
    }

    pub fn identity(f: &Frame) -> FrameHom {
        FrameHom::plain(HomKind::Identity, f.clone(), f.clone(), f.one())
    }

    /// `lambda`: Sigma -> Script, `c = phi(E)/p`.
    pub fn lambda(ctx: PrecisionCtx) -> FrameHom {
        let s = Frame::sigma(ctx);
        let t = Frame::script(ctx);
        let c = t.data.c().clone();
        FrameHom::plain(HomKind::Lambda, s, t, c)
    }

    /// The automorphism `gamma` with `chi(gamma) = chi`; a `c_gamma`-automorphism
    /// of Sigma frames and strict on Script and Zp frames.
    pub fn gamma(f: &Frame, chi: &Chi) -> Result<FrameHom> {
        if f.ctx.lift != Lift::Cyclotomic {
            return Err(Error::BadHom("the Gamma-action needs the cyclotomic lift".into()));
        }
        Chi::new(f.ctx.p, chi.value().clone())?;
        let c = match f.tag {
            RingTag::Sigma => elements::c_gamma(f.ctx, chi),
            _ => f.one(),
        };
        let ratio = match f.tag {
            RingTag::Zp => f.one(),
            _ => elements::gamma_e_over_e(f.ctx, chi),
        };
        let mut h = FrameHom::plain(HomKind::Gamma(chi.clone()), f.clone(), f.clone(), c);
        if f.tag != RingTag::Zp {
            h.subst = Some(Arc::new(RingSubst::gamma(f.ctx, chi)));
        }
        h.gamma_e_ratio = Some(ratio);
        Ok(h)
    }

    /// Level change `r -> r+1` (strict).
    pub fn level(f: &Frame) -> Result<FrameHom> {
        if f.ctx.lift != Lift::Cyclotomic || f.tag == RingTag::Zp || f.var_level != f.ctx.r {
            return Err(Error::BadLevels(
                "level change needs a cyclotomic Sigma or Script frame".into(),
            ));
        }
        let tctx = f.ctx.with_level(f.ctx.r + 1)?;
        let target = match f.tag {
            RingTag::Sigma => Frame::sigma(tctx),
            _ => Frame::script(tctx),
        };
        let c = target.one();
        let mut h = FrameHom::plain(HomKind::Level, f.clone(), target, c);
        h.subst = Some(Arc::new(RingSubst::cyclotomic_power(tctx, 1)));
        Ok(h)
    }

    /// `lambda_{r,s}`: relabels the variable `u_r` as `u_s` (strict).
    pub fn lambda_rs(f: &Frame, s: u32) -> Result<FrameHom> {
        if f.tag != RingTag::Sigma || s > f.ctx.r || f.var_level != f.ctx.r {
            return Err(Error::BadLevels(format!(
                "lambda_(r,s) needs a Sigma frame and s <= r, got s = {s}"
            )));
        }
        let target = Frame::sigma_relabeled(f.ctx, s);
        let c = target.one();
        Ok(FrameHom::plain(HomKind::LambdaRs(s), f.clone(), target, c))
    }

    /// Reduction `u -> 0` onto the residue frame (strict).
    pub fn quotient(f: &Frame) -> Result<FrameHom> {
        if f.tag == RingTag::Zp {
            return Err(Error::BadHom("already the residue frame".into()));
        }
        let target = Frame::zp(f.ctx);
        let c = target.one();
        Ok(FrameHom::plain(HomKind::Quotient, f.clone(), target, c))
    }

    /// `second ∘ first`, with `c = c_2 * second(c_1)`.
    pub fn compose(second: &FrameHom, first: &FrameHom) -> Result<FrameHom> {
        if first.target != second.source {
            return Err(Error::BadHom("frames do not match".into()));
        }
        let c = second.c.mul_ref(&second.apply(&first.c));
        let mut h = FrameHom::plain(
            HomKind::Compose(Box::new(second.kind.clone()), Box::new(first.kind.clone())),
            first.source.clone(),
            second.target.clone(),
            c,
        );
        h.first = Some(Box::new(first.clone()));
        h.second = Some(Box::new(second.clone()));
        Ok(h)
    }

    pub fn is_strict(&self) -> bool {
        self.c.is_one()
    }

    /// The underlying ring map.
    pub fn apply(&self, x: &Series) -> Series {
        match &self.kind {
            HomKind::Identity | HomKind::Lambda | HomKind::LambdaRs(_) => x.with_ctx(self.target.ctx),
            HomKind::Gamma(_) => match &self.subst {
                Some(s) => s.apply(x),
                None => x.clone(),
            },
            HomKind::Level => self.subst.as_ref().expect("level substitution").apply(x),
            HomKind::Quotient => x.with_uprec(self.target.ctx),
            HomKind::Compose(..) => {
                let a = self.first.as_ref().expect("composite").apply(x);
                self.second.as_ref().expect("composite").apply(&a)
            }
        }
    }

    pub fn apply_mat(&self, m: &crate::matrix::Mat) -> crate::matrix::Mat {
        m.map(|x| self.apply(x))
    }

    /// Transport of a filtration witness.
    pub fn apply_witness(&self, w: &FilWitness) -> FilWitness {
        match &self.kind {
            HomKind::Gamma(_) => {
                let ratio = self.gamma_e_ratio.as_ref().expect("gamma ratio");
                match w {
                    FilWitness::EMul(y) => FilWitness::EMul(self.apply(y).mul_ref(ratio)),
                    FilWitness::PMul(y) => FilWitness::PMul(self.apply(y)),
                    FilWitness::DividedPower(n, y) => {
                        FilWitness::DividedPower(*n, self.apply(y).mul_ref(&ratio.pow(*n)))
                    }
                    FilWitness::Sum(v) => FilWitness::Sum(v.iter().map(|x| self.apply_witness(x)).collect()),
                }
            }
            HomKind::Compose(..) => {
                let a = self.first.as_ref().expect("composite").apply_witness(w);
                self.second.as_ref().expect("composite").apply_witness(&a)
            }
            _ => w.map(&|y| self.apply(y)),
        }
    }

    /// Homomorphism axioms at precision: `phi_1' alpha = c alpha phi_1` on
    /// filtration generators, `alpha(varpi) = c varpi'`, and `alpha phi = phi' alpha`.
    pub fn check(&self) -> Result<()> {
        let src = &self.source;
        let tgt = &self.target;
        for (i, w) in src.fil_generators(23).iter().enumerate() {
            let lhs = tgt.phi1(&self.apply_witness(w))?;
            let rhs = self.c.mul_ref(&self.apply(&src.phi1(w)?));
            if lhs != rhs {
                return Err(Error::AxiomViolation(format!(
                    "phi_1 compatibility fails on generator {i}"
                )));
            }
            if self.apply(&w.value()) != self.apply_witness(w).value() {
                return Err(Error::AxiomViolation(format!(
                    "witness transport fails on generator {i}"
                )));
            }
        }
        if self.apply(&src.varpi()) != self.c.mul_ref(&tgt.varpi()) {
            return Err(Error::AxiomViolation("alpha(varpi) != c varpi'".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..3 {
            let x = Series::random_deg(src.ctx, src.prec(), src.ctx.m.min(12), &mut rng);
            if self.apply(&src.phi(&x)) != tgt.phi(&self.apply(&x)) {
                return Err(Error::AxiomViolation("ring map does not commute with Frobenius".into()));
            }
        }
        if !self.c.is_unit() {
            return Err(Error::AxiomViolation("c is not a unit".into()));
        }
        Ok(())
    }
}
