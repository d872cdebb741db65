use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use super::ctx::{Lift, PrecisionCtx};
use crate::error::{Error, Result};

pub fn ppow(p: u32, e: u32) -> BigUint {
    BigUint::from(p).pow(e)
}

/// Canonical residue of a signed integer.
pub fn residue(x: &BigInt, modulus: &BigUint) -> BigUint {
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    x.mod_floor(&m).to_biguint().expect("nonnegative")
}

pub fn vp_big(p: u32, x: &BigUint) -> u32 {
    if x.is_zero() {
        return u32::MAX;
    }
    let pb = BigUint::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        y = q;
        v += 1;
    }
}

/// Inverse of a unit modulo `p^e`.
pub fn inv_mod(x: &BigUint, p: u32, e: u32) -> Result<BigUint> {
    let m = ppow(p, e);
    if e == 0 {
        return Ok(BigUint::zero());
    }
    let xi = BigInt::from_biguint(Sign::Plus, x % &m);
    let mi = BigInt::from_biguint(Sign::Plus, m.clone());
    let g = xi.extended_gcd(&mi);
    if !g.gcd.is_one() {
        return Err(Error::NotAUnit);
    }
    Ok(residue(&g.x, &m))
}

/// Truncated element `num / p^scale` of `Z_p[[u]][1/p]` modulo `(p^prec, u^M)`.
///
/// `prec` is absolute: the represented value is known modulo `p^prec` times
/// integral series, so `num` is stored modulo `p^(prec + scale)`. Integral
/// elements (elements of the Sigma ring) have `scale == 0`.
#[derive(Clone)]
pub struct Series {
    ctx: PrecisionCtx,
    scale: u32,
    prec: i32,
    num: Vec<BigUint>,
}

/// Elements of `Z_p[[u]]`; always integral.
pub type SigmaSeries = Series;
/// Elements of the divided-power ring; may carry a bounded denominator.
pub type ScriptSeries = Series;

fn small_modulus(m: &BigUint) -> Option<u64> {
    if m.bits() <= 62 {
        m.to_u64()
    } else {
        None
    }
}

pub(crate) fn convolve(a: &[BigUint], b: &[BigUint], len: usize, modulus: &BigUint) -> Vec<BigUint> {
    let ia: Vec<usize> = (0..a.len().min(len)).filter(|&i| !a[i].is_zero()).collect();
    let ib: Vec<usize> = (0..b.len().min(len)).filter(|&i| !b[i].is_zero()).collect();
    if let Some(ms) = small_modulus(modulus) {
        let av: Vec<u64> = a.iter().map(|x| (x % modulus).to_u64().unwrap()).collect();
        let bv: Vec<u64> = b.iter().map(|x| (x % modulus).to_u64().unwrap()).collect();
        let mut acc = vec![0u128; len];
        let mut cnt = vec![0u8; len];
        let m128 = ms as u128;
        for &i in &ia {
            for &j in &ib {
                let k = i + j;
                if k >= len {
                    break;
                }
                acc[k] += av[i] as u128 * bv[j] as u128;
                cnt[k] += 1;
                if cnt[k] == 15 {
                    acc[k] %= m128;
                    cnt[k] = 0;
                }
            }
        }
        return acc.into_iter().map(|x| BigUint::from(x % m128)).collect();
    }
    let mut out = vec![BigUint::zero(); len];
    for &i in &ia {
        for &j in &ib {
            let k = i + j;
            if k >= len {
                break;
            }
            out[k] += &a[i] * &b[j];
        }
    }
    for x in out.iter_mut() {
        *x %= modulus;
    }
    out
}

impl Series {
    pub(crate) fn from_parts(ctx: PrecisionCtx, scale: u32, prec: i32, mut num: Vec<BigUint>) -> Series {
        let prec = prec.max(0);
        num.resize(ctx.m, BigUint::zero());
        num.truncate(ctx.m);
        let modulus = ppow(ctx.p, prec as u32 + scale);
        for x in num.iter_mut() {
            *x %= &modulus;
        }
        let mut s = Series { ctx, scale, prec, num };
        s.canonicalize();
        s
    }

    /// Builds `num / p^scale` from signed coefficients.
    pub fn from_bigints(ctx: PrecisionCtx, coeffs: &[BigInt], scale: u32, prec: i32) -> Series {
        let prec = prec.max(0);
        let modulus = ppow(ctx.p, prec as u32 + scale);
        let num = coeffs.iter().take(ctx.m).map(|c| residue(c, &modulus)).collect();
        Series::from_parts(ctx, scale, prec, num)
    }

    pub fn from_ints(ctx: PrecisionCtx, coeffs: &[i64], prec: i32) -> Series {
        let v: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        Series::from_bigints(ctx, &v, 0, prec)
    }

    pub fn zero(ctx: PrecisionCtx, prec: i32) -> Series {
        Series::from_parts(ctx, 0, prec, vec![])
    }

    pub fn one(ctx: PrecisionCtx, prec: i32) -> Series {
        Series::constant(ctx, &BigInt::one(), prec)
    }

    pub fn constant(ctx: PrecisionCtx, c: &BigInt, prec: i32) -> Series {
        Series::from_bigints(ctx, std::slice::from_ref(c), 0, prec)
    }

    pub fn from_i64(ctx: PrecisionCtx, c: i64, prec: i32) -> Series {
        Series::constant(ctx, &BigInt::from(c), prec)
    }

    /// The variable `u`.
    pub fn var(ctx: PrecisionCtx, prec: i32) -> Series {
        Series::monomial(ctx, 1, prec)
    }

    pub fn monomial(ctx: PrecisionCtx, k: usize, prec: i32) -> Series {
        let mut c = vec![BigInt::zero(); k + 1];
        c[k] = BigInt::one();
        Series::from_bigints(ctx, &c, 0, prec)
    }

    /// Uniformly random integral series modulo `p^prec`.
    pub fn random<R: Rng + ?Sized>(ctx: PrecisionCtx, prec: i32, rng: &mut R) -> Series {
        Series::random_deg(ctx, prec, ctx.m, rng)
    }

    /// Random integral polynomial of degree below `deg`.
    pub fn random_deg<R: Rng + ?Sized>(ctx: PrecisionCtx, prec: i32, deg: usize, rng: &mut R) -> Series {
        let modulus = ppow(ctx.p, prec.max(0) as u32);
        let bytes = (modulus.bits() as usize).div_ceil(8) + 8;
        let num = (0..deg.min(ctx.m))
            .map(|_| {
                let buf: Vec<u8> = (0..bytes).map(|_| rng.gen()).collect();
                BigUint::from_bytes_le(&buf) % &modulus
            })
            .collect();
        Series::from_parts(ctx, 0, prec, num)
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.ctx
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn prec(&self) -> i32 {
        self.prec
    }

    pub fn num(&self) -> &[BigUint] {
        &self.num
    }

    pub fn is_integral(&self) -> bool {
        self.scale == 0
    }

    fn modexp(&self) -> u32 {
        self.prec as u32 + self.scale
    }

    pub(crate) fn modulus(&self) -> BigUint {
        ppow(self.ctx.p, self.modexp())
    }

    /// Rebinds the context (same `p` and `M`), e.g. when a ring map changes level.
    pub fn with_ctx(&self, ctx: PrecisionCtx) -> Series {
        assert_eq!((ctx.p, ctx.m), (self.ctx.p, self.ctx.m));
        Series { ctx, ..self.clone() }
    }

    /// Re-truncates to another u-adic length, possibly padding with zeros.
    pub fn with_uprec(&self, ctx: PrecisionCtx) -> Series {
        assert_eq!(ctx.p, self.ctx.p);
        let mut num = self.num.clone();
        num.resize(ctx.m, BigUint::zero());
        Series::from_parts(ctx, self.scale, self.prec, num)
    }

    fn canonicalize(&mut self) {
        let p = BigUint::from(self.ctx.p);
        while self.scale > 0 && self.num.iter().all(|x| x.is_multiple_of(&p)) {
            for x in self.num.iter_mut() {
                *x /= &p;
            }
            self.scale -= 1;
        }
    }

    /// Lowers the absolute precision.
    pub fn truncate_prec(&self, prec: i32) -> Series {
        if prec >= self.prec {
            return self.clone();
        }
        Series::from_parts(self.ctx, self.scale, prec, self.num.clone())
    }

    /// Treats the stored representative as exact up to a higher precision.
    pub(crate) fn assume_prec(&self, prec: i32) -> Series {
        Series {
            prec: prec.max(self.prec),
            ..self.clone()
        }
    }

    fn aligned(&self, scale: u32, prec: i32) -> Vec<BigUint> {
        let modulus = ppow(self.ctx.p, prec as u32 + scale);
        let f = ppow(self.ctx.p, scale - self.scale);
        self.num.iter().map(|x| (x * &f) % &modulus).collect()
    }

    fn check_compat(&self, o: &Series) {
        assert!(
            self.ctx.p == o.ctx.p && self.ctx.m == o.ctx.m,
            "series from incompatible contexts"
        );
    }

    pub fn add_ref(&self, o: &Series) -> Series {
        self.check_compat(o);
        let s = self.scale.max(o.scale);
        let prec = self.prec.min(o.prec);
        let a = self.aligned(s, prec);
        let b = o.aligned(s, prec);
        let num = a.into_iter().zip(b).map(|(x, y)| x + y).collect();
        Series::from_parts(self.ctx, s, prec, num)
    }

    pub fn neg_ref(&self) -> Series {
        let m = self.modulus();
        let num = self
            .num
            .iter()
            .map(|x| if x.is_zero() { BigUint::zero() } else { &m - x })
            .collect();
        Series { num, ..self.clone() }
    }

    pub fn sub_ref(&self, o: &Series) -> Series {
        self.add_ref(&o.neg_ref())
    }

    pub fn mul_ref(&self, o: &Series) -> Series {
        self.check_compat(o);
        let s = self.scale + o.scale;
        let prec = (self.prec - o.scale as i32).min(o.prec - self.scale as i32).max(0);
        let modulus = ppow(self.ctx.p, prec as u32 + s);
        let num = convolve(&self.num, &o.num, self.ctx.m, &modulus);
        Series::from_parts(self.ctx, s, prec, num)
    }

    pub fn mul_int(&self, c: &BigInt) -> Series {
        let m = self.modulus();
        let cr = residue(c, &m);
        let num = self.num.iter().map(|x| (x * &cr) % &m).collect();
        Series::from_parts(self.ctx, self.scale, self.prec, num)
    }

    pub fn mul_i64(&self, c: i64) -> Series {
        self.mul_int(&BigInt::from(c))
    }

    /// Multiplication by `p^k`.
    pub fn mul_p_pow(&self, k: u32) -> Series {
        if k == 0 {
            return self.clone();
        }
        if self.scale >= k {
            let mut s = self.clone();
            s.scale -= k;
            s.prec += k as i32;
            return s;
        }
        let extra = k - self.scale;
        let f = ppow(self.ctx.p, extra);
        let num = self.num.iter().map(|x| x * &f).collect();
        Series::from_parts(self.ctx, 0, self.prec + k as i32, num)
    }

    /// Division by `p^k`; exact in `Z_p[[u]][1/p]`, costs `k` digits of precision.
    pub fn div_p_pow(&self, k: u32) -> Series {
        let mut s = self.clone();
        s.scale += k;
        s.prec = (s.prec - k as i32).max(0);
        let modulus = s.modulus();
        for x in s.num.iter_mut() {
            *x %= &modulus;
        }
        s.canonicalize();
        s
    }

    /// Division by a nonzero integer, splitting off its p-part.
    pub fn div_int(&self, d: &BigInt) -> Result<Series> {
        let v = vp_big(self.ctx.p, &d.magnitude().clone());
        if v == u32::MAX {
            return Err(Error::NotAUnit);
        }
        let unit = d / BigInt::from(self.ctx.p).pow(v);
        let m = self.modulus();
        let inv = inv_mod(&residue(&unit, &m), self.ctx.p, self.modexp())?;
        let num = self.num.iter().map(|x| (x * &inv) % &m).collect();
        Ok(Series::from_parts(self.ctx, self.scale, self.prec, num).div_p_pow(v))
    }

    pub fn pow(&self, mut e: u64) -> Series {
        let mut base = self.clone();
        let mut acc: Option<Series> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul_ref(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        acc.unwrap_or_else(|| Series::one(self.ctx, self.prec))
    }

    /// Coefficient `k` as `(numerator, scale)` of the value.
    pub fn coeff(&self, k: usize) -> (BigUint, u32) {
        (self.num[k].clone(), self.scale)
    }

    pub fn coeff_is_zero(&self, k: usize) -> bool {
        self.num[k].is_zero()
    }

    /// Whether the value is zero modulo `p^n`.
    pub fn is_zero_at(&self, n: u32) -> bool {
        if self.prec < n as i32 {
            return false;
        }
        let m = ppow(self.ctx.p, n + self.scale);
        self.num.iter().all(|x| (x % &m).is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero_at(self.ctx.n)
    }

    /// Equality modulo `p^n` and `u^len`; false if either side is known to
    /// less than `n` digits.
    pub fn eq_at(&self, o: &Series, n: u32, len: usize) -> bool {
        if self.prec < n as i32 || o.prec < n as i32 {
            return false;
        }
        let s = self.scale.max(o.scale);
        let m = ppow(self.ctx.p, n + s);
        let fa = ppow(self.ctx.p, s - self.scale);
        let fb = ppow(self.ctx.p, s - o.scale);
        (0..len.min(self.ctx.m)).all(|k| (&self.num[k] * &fa) % &m == (&o.num[k] * &fb) % &m)
    }

    pub fn is_one(&self) -> bool {
        *self == Series::one(self.ctx, self.prec)
    }

    /// Canonical form at the reporting precision `ctx.n`.
    pub fn canonical(&self) -> Result<(u32, Vec<BigUint>)> {
        let n = self.ctx.n;
        if self.prec < n as i32 {
            return Err(Error::PrecisionLoss(format!(
                "value known to p^{} but p^{} requested",
                self.prec, n
            )));
        }
        let s = Series::from_parts(self.ctx, self.scale, n as i32, self.num.clone());
        Ok((s.scale, s.num))
    }

    /// Constant term as an exact p-adic number `w * p^(-scale)` with `w` integral.
    fn const_val(&self) -> Option<u32> {
        let v = vp_big(self.ctx.p, &self.num[0]);
        if v == u32::MAX || v >= self.modexp() {
            None
        } else {
            Some(v)
        }
    }

    pub fn is_unit(&self) -> bool {
        self.const_val() == Some(self.scale)
    }

    /// Multiplicative inverse, computed by Newton iteration on the u-adic filtration.
    pub fn invert(&self) -> Result<Series> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        if self.scale == 0 {
            return Ok(self.newton_inverse(self));
        }
        let mut boost = 8 * (self.scale as i32 + 1) + 16;
        let mut best: Option<Series> = None;
        for _ in 0..5 {
            let f_hi = self.assume_prec(self.prec + boost);
            let g = self.newton_inverse(&f_hi);
            let r = Series::one(self.ctx, f_hi.prec).sub_ref(&f_hi.mul_ref(&g));
            let pr = if r.is_zero_at(r.prec.max(0) as u32) { r.prec } else { 0 };
            let sg = g.scale as i32;
            let target = self.prec - 2 * sg;
            let prec = (pr - sg).min(target);
            let out = Series::from_parts(self.ctx, g.scale, prec, g.num.clone());
            if prec >= target {
                return Ok(out);
            }
            best = Some(out);
            boost *= 2;
        }
        Ok(best.expect("at least one attempt"))
    }

    fn newton_inverse(&self, f: &Series) -> Series {
        let p = self.ctx.p;
        let v = self.scale;
        let w = &f.num[0] / ppow(p, v);
        let e = f.prec.max(1) as u32;
        let w_inv = inv_mod(&w, p, e).expect("unit constant term");
        let mut g = Series::from_parts(self.ctx, 0, f.prec, vec![w_inv]);
        let one = Series::one(self.ctx, f.prec);
        let mut len = 1usize;
        while len < self.ctx.m {
            let err = one.sub_ref(&f.mul_ref(&g));
            g = g.add_ref(&g.mul_ref(&err));
            len *= 2;
        }
        let err = one.sub_ref(&f.mul_ref(&g));
        g.add_ref(&g.mul_ref(&err))
    }

    /// Frobenius for the context's lift.
    pub fn frobenius(&self) -> Series {
        match self.ctx.lift {
            Lift::Standard => {
                let p = self.ctx.p as usize;
                let mut num = vec![BigUint::zero(); self.ctx.m];
                for (k, x) in self.num.iter().enumerate() {
                    if k * p < self.ctx.m {
                        num[k * p] = x.clone();
                    }
                }
                Series::from_parts(self.ctx, self.scale, self.prec, num)
            }
            Lift::Cyclotomic => self.frobenius_cyclotomic(),
        }
    }

    pub fn frobenius_iter(&self, k: u32) -> Series {
        (0..k).fold(self.clone(), |acc, _| acc.frobenius())
    }

    fn frobenius_cyclotomic(&self) -> Series {
        let m = self.ctx.m;
        let modulus = self.modulus();
        // f(v - 1), then substitute v = (1+u)^p by Horner.
        let mut a = self.num.clone();
        for i in 0..m {
            for j in (i..m - 1).rev() {
                if !a[j + 1].is_zero() {
                    a[j] = (&a[j] + &modulus - &a[j + 1]) % &modulus;
                }
            }
        }
        let p = self.ctx.p as usize;
        let binom: Vec<BigUint> = (0..=p).map(|k| binomial_small(p as u64, k as u64)).collect();
        let mut acc = vec![BigUint::zero(); m];
        for i in (0..m).rev() {
            let mut next = vec![BigUint::zero(); m];
            for (j, x) in acc.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (k, b) in binom.iter().enumerate() {
                    if j + k < m {
                        next[j + k] += x * b;
                    }
                }
            }
            next[0] += &a[i];
            for x in next.iter_mut() {
                *x %= &modulus;
            }
            acc = next;
        }
        Series::from_parts(self.ctx, self.scale, self.prec, acc)
    }

    /// `d/du`; the top coefficient is not determined and is set to zero.
    pub fn derivative(&self) -> Series {
        let m = self.ctx.m;
        let mut num = vec![BigUint::zero(); m];
        for (k, slot) in num.iter_mut().take(m - 1).enumerate() {
            *slot = &self.num[k + 1] * BigUint::from(k as u64 + 1);
        }
        Series::from_parts(self.ctx, self.scale, self.prec, num)
    }

    /// Division by `u`; requires a vanishing constant term. The top
    /// coefficient of the quotient is not determined and is set to zero.
    pub fn div_u(&self) -> Result<Series> {
        if !self.num[0].is_zero() {
            return Err(Error::NotDivisible("constant term is nonzero".into()));
        }
        let mut num: Vec<BigUint> = self.num[1..].to_vec();
        num.push(BigUint::zero());
        Ok(Series::from_parts(self.ctx, self.scale, self.prec, num))
    }

    pub fn mul_u_pow(&self, k: usize) -> Series {
        let m = self.ctx.m;
        let mut num = vec![BigUint::zero(); m];
        let keep = m.saturating_sub(k);
        num[k.min(m)..].clone_from_slice(&self.num[..keep]);
        Series::from_parts(self.ctx, self.scale, self.prec, num)
    }

    /// Keeps only the coefficients below `u^len`.
    pub fn truncate_u(&self, len: usize) -> Series {
        let mut num = self.num.clone();
        for x in num.iter_mut().skip(len) {
            *x = BigUint::zero();
        }
        Series::from_parts(self.ctx, self.scale, self.prec, num)
    }

    /// The constant series equal to the coefficient of `u^k`.
    pub fn constant_at(&self, k: usize) -> Series {
        Series::from_parts(self.ctx, self.scale, self.prec, vec![self.num[k].clone()])
    }

    /// Value at `u = 0` as a constant series.
    pub fn constant_term(&self) -> Series {
        Series::from_parts(self.ctx, self.scale, self.prec, vec![self.num[0].clone()])
    }

    /// Index of the lowest nonzero coefficient at the reporting precision.
    pub fn u_order(&self) -> Option<usize> {
        let m = ppow(self.ctx.p, self.ctx.n + self.scale);
        (0..self.ctx.m).find(|&k| !(&self.num[k] % &m).is_zero())
    }
}

pub(crate) fn binomial_small(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

impl PartialEq for Series {
    fn eq(&self, o: &Series) -> bool {
        self.eq_at(o, self.ctx.n.min(o.ctx.n), self.ctx.m)
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.num.iter().rposition(|x| !x.is_zero()).map_or(0, |i| i + 1);
        write!(f, "Series(p^-{} prec {} [", self.scale, self.prec)?;
        for (i, x) in self.num[..last].iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "])")
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl<'a> $tr<&'a Series> for &'a Series {
            type Output = Series;
            fn $method(self, o: &'a Series) -> Series {
                self.$inner(o)
            }
        }
        impl $tr<Series> for Series {
            type Output = Series;
            fn $method(self, o: Series) -> Series {
                self.$inner(&o)
            }
        }
    };
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, sub_ref);
forward_binop!(Mul, mul, mul_ref);

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}
