use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Frobenius lift acts on the variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lift {
    /// `1 + u -> (1 + u)^p`
    Cyclotomic,
    /// `u -> u^p`
    Standard,
}

impl Lift {
    pub fn as_str(self) -> &'static str {
        match self {
            Lift::Cyclotomic => "cyclotomic",
            Lift::Standard => "standard",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cyclotomic" => Ok(Lift::Cyclotomic),
            "standard" => Ok(Lift::Standard),
            other => Err(Error::Parse(format!("unknown lift {other:?}"))),
        }
    }
}

/// Working precision shared by every series.
///
/// `n` is the p-adic precision at which results are compared and reported,
/// `m` the u-adic truncation, `r` the cyclotomic level and `k` the
/// denominator budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionCtx {
    pub p: u32,
    pub n: u32,
    pub m: usize,
    pub r: u32,
    pub k: u32,
    pub lift: Lift,
}

pub(crate) fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// `v_p(n!)` by Legendre's formula.
pub fn vp_factorial(p: u32, n: u64) -> u32 {
    let p = p as u64;
    let mut acc = 0u64;
    let mut q = n / p;
    while q > 0 {
        acc += q;
        q /= p;
    }
    acc as u32
}

pub fn vp_u64(p: u32, mut n: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while n.is_multiple_of(p as u64) {
        n /= p as u64;
        v += 1;
    }
    v
}

impl PrecisionCtx {
    pub fn new(p: u32, n: u32, m: usize, r: u32, lift: Lift) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::BadContext(format!("p = {p} must be an odd prime")));
        }
        if n == 0 || m == 0 || r == 0 {
            return Err(Error::BadContext("N, M and r must be at least 1".into()));
        }
        let n_max = ((n as u64 + m as u64) * (p as u64 - 1)).div_ceil(p as u64 - 2);
        Ok(PrecisionCtx {
            p,
            n,
            m,
            r,
            k: vp_factorial(p, n_max),
            lift,
        })
    }

    /// Default scale used throughout the test suites.
    pub fn default_ctx() -> Self {
        Self::new(3, 6, 64, 1, Lift::Cyclotomic).expect("valid defaults")
    }

    pub fn with_level(self, r: u32) -> Result<Self> {
        Self::new(self.p, self.n, self.m, r, self.lift)
    }

    pub fn with_lift(self, lift: Lift) -> Self {
        PrecisionCtx { lift, ..self }
    }

    pub fn with_uprec(self, m: usize) -> Result<Self> {
        Self::new(self.p, self.n, m, self.r, self.lift)
    }

    pub fn with_pprec(self, n: u32) -> Result<Self> {
        Self::new(self.p, n, self.m, self.r, self.lift)
    }

    /// Internal p-adic precision used when building exact inputs, so that
    /// denominators up to the budget still leave `n` correct digits.
    pub fn work_prec(&self) -> i32 {
        (self.n + self.k + self.t_guard()) as i32
    }

    /// Digits lost by one exact division by `t` under absolute precision
    /// tracking: the scale of `u/t` modulo `u^M`.
    pub fn t_division_loss(&self) -> u32 {
        self.r + (self.m.saturating_sub(1) as u32).div_ceil(self.p - 1)
    }

    /// Guard digits for up to four chained divisions by `t`.
    pub fn t_guard(&self) -> u32 {
        4 * self.t_division_loss() + 8
    }

    /// `K_b = v_p((M-1)!)`, the precision lost by binomial coefficients.
    pub fn binomial_loss(&self) -> u32 {
        vp_factorial(self.p, self.m.saturating_sub(1) as u64)
    }

    /// Degree of `E_s` as a polynomial in `u`.
    pub fn e_degree(&self, s: u32) -> usize {
        (self.p as usize - 1) * (self.p as usize).pow(s - 1)
    }
}
