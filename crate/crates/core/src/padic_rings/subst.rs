use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use super::ctx::PrecisionCtx;
use super::series::{ppow, vp_big, Series};
use crate::error::{Error, Result};

/// Value `chi(gamma)` of the cyclotomic character, stored as an exact
/// integer prime to `p`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Chi(BigInt);

impl Chi {
    pub fn new(p: u32, value: BigInt) -> Result<Chi> {
        if value.is_zero() || (&value % BigInt::from(p)).is_zero() {
            return Err(Error::NonUnitChi(value.to_string()));
        }
        Ok(Chi(value))
    }

    pub fn from_i64(p: u32, value: i64) -> Result<Chi> {
        Chi::new(p, BigInt::from(value))
    }

    pub fn parse(p: u32, s: &str) -> Result<Chi> {
        let v: BigInt = s.trim().parse().map_err(|_| Error::Parse(format!("bad chi {s:?}")))?;
        Chi::new(p, v)
    }

    pub fn one() -> Chi {
        Chi(BigInt::one())
    }

    pub fn value(&self) -> &BigInt {
        &self.0
    }

    pub fn mul(&self, o: &Chi) -> Chi {
        Chi(&self.0 * &o.0)
    }

    pub fn pow(&self, e: u32) -> Chi {
        Chi(self.0.pow(e))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `v_p(chi - 1)`, or `u32::MAX` when `chi = 1`.
    pub fn depth(&self, p: u32) -> u32 {
        let d = &self.0 - BigInt::one();
        vp_big(p, d.magnitude())
    }
}

impl fmt::Debug for Chi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Chi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer binomial coefficients `C(x, k)` for `k < len`, with `x` any integer.
pub fn binomials(x: &BigInt, len: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(len);
    let mut acc = BigInt::one();
    for k in 0..len {
        out.push(acc.clone());
        acc = acc * (x - BigInt::from(k)) / BigInt::from(k + 1);
    }
    out
}

/// Continuous ring endomorphism `u -> g` with `g(0) = 0`, with the powers of
/// `g` cached.
#[derive(Clone)]
pub struct RingSubst {
    image: Series,
    pows: Vec<Vec<BigUint>>,
    cap: u32,
}

impl RingSubst {
    /// `image` must be integral with vanishing constant term.
    pub fn new(image: Series) -> Result<RingSubst> {
        if !image.is_integral() || !image.coeff_is_zero(0) {
            return Err(Error::BadHom("substitution must send u into u*Z_p[[u]]".into()));
        }
        let ctx = image.ctx();
        let cap = image.prec().max(0) as u32;
        let mut pows = Vec::with_capacity(ctx.m);
        let mut cur = Series::one(ctx, cap as i32);
        for _ in 0..ctx.m {
            pows.push(cur.num().to_vec());
            cur = cur.mul_ref(&image);
        }
        Ok(RingSubst { image, pows, cap })
    }

    pub fn image(&self) -> &Series {
        &self.image
    }

    /// `f(g)`, landing in the context of the image.
    pub fn apply(&self, f: &Series) -> Series {
        let ctx = self.image.ctx();
        assert_eq!((ctx.p, ctx.m), (f.ctx().p, f.ctx().m));
        let scale = f.scale();
        let prec = f.prec().min(self.cap as i32 - scale as i32).max(0);
        let modulus = ppow(ctx.p, prec as u32 + scale);
        let mut out = vec![BigUint::zero(); ctx.m];
        for (k, fk) in f.num().iter().enumerate() {
            if fk.is_zero() {
                continue;
            }
            for (j, g) in self.pows[k].iter().enumerate().skip(k) {
                if !g.is_zero() {
                    out[j] += fk * g;
                }
            }
        }
        for x in out.iter_mut() {
            *x %= &modulus;
        }
        Series::from_parts(ctx, scale, prec, out)
    }

    /// The cyclotomic action `1 + u -> (1 + u)^chi`.
    pub fn gamma(ctx: PrecisionCtx, chi: &Chi) -> RingSubst {
        let cap = ctx.work_prec() + ctx.k as i32;
        let b = binomials(chi.value(), ctx.m);
        let mut coeffs = b;
        coeffs[0] = BigInt::zero();
        let image = Series::from_bigints(ctx, &coeffs, 0, cap);
        RingSubst::new(image).expect("gamma(u) lies in u*Z_p[[u]]")
    }

    /// `u -> (1+u)^(p^k) - 1`, the `k`-th iterate of the cyclotomic Frobenius on
    /// the variable, read in the context `target`.
    pub fn cyclotomic_power(target: PrecisionCtx, k: u32) -> RingSubst {
        let cap = target.work_prec() + target.k as i32;
        let e = BigInt::from(target.p).pow(k);
        let mut coeffs = binomials(&e, target.m);
        coeffs[0] = BigInt::zero();
        RingSubst::new(Series::from_bigints(target, &coeffs, 0, cap)).expect("lies in uZ_p[[u]]")
    }
}

/// `((1 + x)^chi - 1) / x = sum_{k >= 1} C(chi, k) x^(k-1)` as a series in `u`
/// after substituting `x -> image`.
pub fn chi_quotient(ctx: PrecisionCtx, chi: &Chi, image: &Series, prec: i32) -> Series {
    let b = binomials(chi.value(), ctx.m + 1);
    let coeffs: Vec<BigInt> = b[1..].to_vec();
    let g = Series::from_bigints(ctx, &coeffs, 0, prec);
    RingSubst::new(image.truncate_prec(prec))
        .expect("valid image")
        .apply(&g)
}

/// Exact `v_p(x)` for a signed integer.
pub fn vp_int(p: u32, x: &BigInt) -> u32 {
    vp_big(p, x.magnitude())
}

/// `x mod p^e` in `[0, p^e)`, for small conversions.
pub fn int_mod(x: &BigInt, p: u32, e: u32) -> BigInt {
    let m = BigInt::from(ppow(p, e));
    x.mod_floor(&m)
}
