//! Distinguished elements of the Sigma and Script rings at a fixed level.

use num_bigint::BigInt;
use num_traits::One;

use super::ctx::PrecisionCtx;
use super::series::Series;
use super::subst::{binomials, chi_quotient, Chi, RingSubst};
use crate::error::{Error, Result};

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `(1+u)^e` truncated.
fn one_plus_u_pow(ctx: PrecisionCtx, e: &BigInt, prec: i32) -> Series {
    Series::from_bigints(ctx, &binomials(e, ctx.m), 0, prec)
}

/// `E_s = phi^s(u) / phi^(s-1)(u) = sum_{i<p} (1+u)^(i p^(s-1))` for the cyclotomic lift.
pub fn cyclo_e(ctx: PrecisionCtx, s: u32) -> Result<Series> {
    if s == 0 {
        return Err(Error::BadLevels("E_s needs s >= 1".into()));
    }
    let prec = ctx.work_prec();
    let step = BigInt::from(ctx.p).pow(s - 1);
    let mut acc = Series::zero(ctx, prec);
    for i in 0..ctx.p {
        acc = acc.add_ref(&one_plus_u_pow(ctx, &(&step * BigInt::from(i)), prec));
    }
    Ok(acc)
}

/// The distinguished element `E` of the frame at level `ctx.r`.
///
/// For the standard lift the same polynomial is used; only the Frobenius differs.
pub fn e_elem(ctx: PrecisionCtx) -> Series {
    cyclo_e(ctx, ctx.r).expect("level is at least 1")
}

/// `u_0 = (1+u)^(p^r) - 1`.
pub fn u0(ctx: PrecisionCtx) -> Series {
    let e = BigInt::from(ctx.p).pow(ctx.r);
    one_plus_u_pow(ctx, &e, ctx.work_prec()).sub_ref(&Series::one(ctx, ctx.work_prec()))
}

/// `c = phi(E)/p`, a unit of the Script ring.
pub fn c_elem(ctx: PrecisionCtx) -> Series {
    e_elem(ctx).frobenius().div_p_pow(1)
}

/// `E^[n] = E^n / n!`.
pub fn divided_power_e(ctx: PrecisionCtx, n: u64) -> Series {
    e_elem(ctx).pow(n).div_int(&factorial(n)).expect("n! is nonzero")
}

/// `log(1 + x) = sum_{n>=1} (-1)^(n-1) x^n / n` for `x` in `u Z_p[[u]]`.
pub fn log_one_plus(x: &Series) -> Result<Series> {
    if !x.coeff_is_zero(0) {
        return Err(Error::NotDivisible("log(1+x) needs x(0) = 0".into()));
    }
    let ctx = x.ctx();
    let mut acc = Series::zero(ctx, x.prec());
    let mut pw = x.clone();
    for n in 1..ctx.m as i64 {
        let term = pw.div_int(&BigInt::from(n))?;
        acc = if n % 2 == 1 {
            acc.add_ref(&term)
        } else {
            acc.sub_ref(&term)
        };
        pw = pw.mul_ref(x);
        if pw.u_order().is_none() && pw.is_zero_at(pw.prec().max(0) as u32) {
            break;
        }
    }
    Ok(acc)
}

/// `t = log(1 + u_0)` by the logarithm series.
pub fn t_log(ctx: PrecisionCtx) -> Series {
    log_one_plus(&u0(ctx)).expect("u_0(0) = 0")
}

/// Infinite product `prod_{n >= 0} phi^n(f)` of a series `f = 1 + (p, u)`-small,
/// stopped once three consecutive factors are 1 to the precision carried by
/// the partial product.
pub fn frobenius_product(f: &Series) -> Series {
    let ctx = f.ctx();
    let mut acc = Series::one(ctx, f.prec());
    let mut factor = f.clone();
    let mut trivial = 0;
    while trivial < 3 {
        let q = (acc.prec() + acc.scale() as i32).min(factor.prec()).max(0) as u32;
        let one = Series::one(ctx, factor.prec());
        trivial = if factor.eq_at(&one, q, ctx.m) { trivial + 1 } else { 0 };
        acc = acc.mul_ref(&factor);
        factor = factor.frobenius();
    }
    acc
}

/// `t / u_0 = prod_{n >= 0} phi^n(c)`, a unit of the Script ring.
pub fn t_over_u0(ctx: PrecisionCtx) -> Series {
    frobenius_product(&c_elem(ctx))
}

/// `t = u_0 * prod_{n >= 0} phi^n(c)`.
pub fn t_product(ctx: PrecisionCtx) -> Series {
    u0(ctx).mul_ref(&t_over_u0(ctx))
}

/// `u / t = p^(-r) (log(1+u)/u)^(-1)`.
pub fn u_over_t(ctx: PrecisionCtx) -> Series {
    // the input is exact; inversion costs twice the scale of the result
    let prec = ctx.work_prec() + 2 * ctx.t_division_loss() as i32 + 8;
    let mut acc = Series::zero(ctx, prec);
    for k in 0..ctx.m {
        let term = Series::monomial(ctx, k, prec)
            .div_int(&BigInt::from(k as i64 + 1))
            .expect("nonzero");
        acc = if k % 2 == 0 {
            acc.add_ref(&term)
        } else {
            acc.sub_ref(&term)
        };
    }
    acc.invert()
        .expect("log(1+u)/u is a unit")
        .div_p_pow(ctx.r)
        .truncate_prec(ctx.work_prec())
}

/// Exact quotient by `t`, given `u / t`. The top u-coefficient of the
/// quotient is undetermined and set to zero; `t * (x / t) = x` still holds
/// modulo `u^M`.
pub fn div_by_t(x: &Series, u_over_t: &Series) -> Result<Series> {
    Ok(x.div_u()?.mul_ref(u_over_t))
}

/// `N_S = (1+u) t d/du`.
pub fn n_s(x: &Series, t: &Series) -> Series {
    let ctx = x.ctx();
    let one_plus_u = Series::from_ints(ctx, &[1, 1], x.prec().max(t.prec()));
    one_plus_u.mul_ref(t).mul_ref(&x.derivative())
}

/// `((1+x)^chi - 1)/x` evaluated at `x = phi^k(u)` (cyclotomic lift).
fn chi_quotient_at_phi(ctx: PrecisionCtx, chi: &Chi, k: u32) -> Series {
    let prec = ctx.work_prec();
    let img = RingSubst::cyclotomic_power(ctx, k).image().truncate_prec(prec);
    chi_quotient(ctx, chi, &img, prec)
}

/// `c_gamma = gamma(phi(E)) / phi(E)` for the cyclotomic lift.
pub fn c_gamma(ctx: PrecisionCtx, chi: &Chi) -> Series {
    let num = chi_quotient_at_phi(ctx, chi, ctx.r + 1);
    let den = chi_quotient_at_phi(ctx, chi, ctx.r);
    num.mul_ref(&den.invert().expect("unit"))
}

/// `gamma(E) / E` for the cyclotomic lift.
pub fn gamma_e_over_e(ctx: PrecisionCtx, chi: &Chi) -> Series {
    let num = chi_quotient_at_phi(ctx, chi, ctx.r);
    let den = chi_quotient_at_phi(ctx, chi, ctx.r - 1);
    num.mul_ref(&den.invert().expect("unit"))
}

/// `lambda_gamma = prod_{n >= 0} phi^n(E / gamma(E))`.
pub fn lambda_gamma(ctx: PrecisionCtx, chi: &Chi) -> Series {
    lambda_gamma_at(ctx, chi, ctx.work_prec())
}

/// `lambda_gamma` known to `prec` digits; it is integral, so `prec = N`
/// suffices for computations inside the Sigma ring.
pub fn lambda_gamma_at(ctx: PrecisionCtx, chi: &Chi, prec: i32) -> Series {
    frobenius_product(&gamma_e_over_e(ctx, chi).truncate_prec(prec).invert().expect("unit"))
}

/// `y = u_0 / t = (u_0 / u) (u / t)`.
pub fn u0_over_t(ctx: PrecisionCtx, u_over_t: &Series) -> Series {
    let e = BigInt::from(ctx.p).pow(ctx.r);
    let u0_over_u = Series::from_bigints(ctx, &binomials(&e, ctx.m + 1)[1..], 0, ctx.work_prec());
    u0_over_u.mul_ref(u_over_t)
}

/// Monic long division by `E` (degree `d`) of the polynomial truncation;
/// see [`divide_monic`] for the precision of the outputs.
pub fn e_divide(x: &Series) -> (Series, Series) {
    let ctx = x.ctx();
    divide_monic(x, &e_elem(ctx), ctx.e_degree(ctx.r))
}

/// Long division of the polynomial truncation of `x` by `g`, monic of degree
/// `d` with all lower coefficients divisible by `p`: `x = g q + rem`,
/// `deg rem < d`, `q` kept modulo `u^(M-d)`.
///
/// If `x` is a polynomial of degree below `M` both outputs are exact. Otherwise
/// the unknown tail of `x` moves down one digit of `p` per `d` degrees, so
/// `rem` is valid to `floor(M/d)` digits but the coefficient of `u^k` in `q`
/// only to about `(M - d - k)/d` digits; the precision tag is `floor(M/d)`.
pub fn divide_monic(x: &Series, g: &Series, d: usize) -> (Series, Series) {
    let ctx = x.ctx();
    let g = g.truncate_prec(x.prec());
    let d = d.min(ctx.m);
    let m = ctx.m;
    let mut rem = x.clone();
    let mut q_coeffs = vec![Series::zero(ctx, x.prec()); m];
    for k in (d..m).rev() {
        let lead = rem.constant_at(k);
        if lead.is_zero_at(lead.prec().max(0) as u32) {
            continue;
        }
        rem = rem.sub_ref(&g.mul_ref(&lead).mul_u_pow(k - d));
        q_coeffs[k - d] = lead;
    }
    let mut q = Series::zero(ctx, x.prec());
    for (k, c) in q_coeffs.into_iter().enumerate() {
        q = q.add_ref(&c.mul_u_pow(k));
    }
    let bound = (m / d.max(1)) as i32;
    (q.truncate_u(m - d).truncate_prec(bound), rem.truncate_prec(bound))
}

/// Decomposition of an element of the filtration ideal into generators.
#[derive(Clone, Debug)]
pub enum FilWitness {
    /// `E * y`
    EMul(Series),
    /// `p * y`
    PMul(Series),
    /// `E^[n] * y`, `n >= 1`
    DividedPower(u64, Series),
    Sum(Vec<FilWitness>),
}

impl FilWitness {
    /// The element being witnessed.
    pub fn value(&self) -> Series {
        match self {
            FilWitness::EMul(y) => e_elem(y.ctx()).mul_ref(y),
            FilWitness::PMul(y) => y.mul_p_pow(1),
            FilWitness::DividedPower(n, y) => divided_power_e(y.ctx(), *n).mul_ref(y),
            FilWitness::Sum(v) => {
                let mut it = v.iter();
                let first = it.next().expect("nonempty sum").value();
                it.fold(first, |acc, w| acc.add_ref(&w.value()))
            }
        }
    }

    pub fn map(&self, f: &dyn Fn(&Series) -> Series) -> FilWitness {
        match self {
            FilWitness::EMul(y) => FilWitness::EMul(f(y)),
            FilWitness::PMul(y) => FilWitness::PMul(f(y)),
            FilWitness::DividedPower(n, y) => FilWitness::DividedPower(*n, f(y)),
            FilWitness::Sum(v) => FilWitness::Sum(v.iter().map(|w| w.map(f)).collect()),
        }
    }
}

/// `phi_1 = phi / p` on the PD filtration, evaluated generator by generator.
pub fn phi1_fil(w: &FilWitness) -> Result<Series> {
    match w {
        FilWitness::EMul(y) => Ok(c_elem(y.ctx()).mul_ref(&y.frobenius())),
        FilWitness::PMul(y) => Ok(y.frobenius()),
        FilWitness::DividedPower(n, y) => {
            if *n == 0 {
                return Err(Error::NotInFil);
            }
            let ctx = y.ctx();
            let coeff = c_elem(ctx).pow(*n).mul_p_pow(*n as u32 - 1).div_int(&factorial(*n))?;
            Ok(coeff.mul_ref(&y.frobenius()))
        }
        FilWitness::Sum(v) => {
            if v.is_empty() {
                return Err(Error::NotInFil);
            }
            let mut acc: Option<Series> = None;
            for x in v {
                let t = phi1_fil(x)?;
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.add_ref(&t),
                });
            }
            Ok(acc.expect("nonempty"))
        }
    }
}
