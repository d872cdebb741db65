//! Rank-one lattices `p^c u^a prod E_n^(b_n) Sigma_0 e` inside a rank-one
//! `phi`-module with `phi(e) = alpha e`, and the translation between
//! Kisin-Ren modules and Wach modules in exponent arithmetic.
//!
//! `Sigma_0` is factorial with `p`, `u`, `E_1`, `E_2`, ... pairwise coprime
//! primes, `phi(u) = u E_1` and `phi(E_n) = E_(n+1)`, so lattices are exponent
//! vectors and intersections are exponent-wise maxima.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bt_modules::BtModule;
use crate::error::{Error, Result};
use crate::padic_rings::elements::e_divide;
use crate::padic_rings::subst::vp_int;

/// Budget of `E`-primes used when none is given: `r + 4`.
pub fn default_budget(r: u32) -> usize {
    r as usize + 4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prime {
    P,
    U,
    /// `E_n`, `n >= 1`.
    E(usize),
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prime::P => write!(f, "p"),
            Prime::U => write!(f, "u"),
            Prime::E(n) => write!(f, "E{n}"),
        }
    }
}

impl Prime {
    pub fn parse(s: &str) -> Result<Prime> {
        match s.trim() {
            "p" => Ok(Prime::P),
            "u" => Ok(Prime::U),
            t => t
                .strip_prefix('E')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(Prime::E)
                .ok_or_else(|| Error::Parse(format!("unknown prime {s:?}"))),
        }
    }
}

/// Exponents of `p`, `u`, `E_1..E_R`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exponents {
    pub p: i64,
    pub u: i64,
    #[serde(rename = "E")]
    pub e: Vec<i64>,
}

impl Exponents {
    pub fn zero(budget: usize) -> Exponents {
        Exponents {
            p: 0,
            u: 0,
            e: vec![0; budget],
        }
    }

    pub fn get(&self, q: Prime) -> i64 {
        match q {
            Prime::P => self.p,
            Prime::U => self.u,
            Prime::E(n) => self.e.get(n - 1).copied().unwrap_or(0),
        }
    }

    fn set(&mut self, q: Prime, v: i64) {
        match q {
            Prime::P => self.p = v,
            Prime::U => self.u = v,
            Prime::E(n) => self.e[n - 1] = v,
        }
    }

    fn add(&self, o: &Exponents) -> Exponents {
        Exponents {
            p: self.p + o.p,
            u: self.u + o.u,
            e: self.e.iter().zip(&o.e).map(|(a, b)| a + b).collect(),
        }
    }

    /// `phi` of the monomial: `u -> u E_1`, `E_n -> E_(n+1)`.
    fn phi(&self) -> Result<Exponents> {
        let budget = self.e.len();
        if budget == 0 || self.e[budget - 1] != 0 {
            return Err(Error::BudgetExceeded);
        }
        let mut e = vec![0; budget];
        e[0] = self.u;
        e[1..budget].copy_from_slice(&self.e[..budget - 1]);
        Ok(Exponents {
            p: self.p,
            u: self.u,
            e,
        })
    }

    fn primes(&self) -> Vec<Prime> {
        let mut v = vec![Prime::P, Prime::U];
        v.extend((1..=self.e.len()).map(Prime::E));
        v
    }
}

impl fmt::Display for Exponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for q in self.primes() {
            match self.get(q) {
                0 => {}
                1 => parts.push(q.to_string()),
                k => parts.push(format!("{q}^{k}")),
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// `phi(e) = unit * monomial * e`; the unit is a `p`-adic unit given by an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alpha {
    pub unit: BigInt,
    pub monomial: Exponents,
}

impl Alpha {
    pub fn one(budget: usize) -> Alpha {
        Alpha {
            unit: BigInt::one(),
            monomial: Exponents::zero(budget),
        }
    }

    /// Parses products such as `E1`, `2*E1`, `u*E2^3`, `p`, `1`.
    pub fn parse(p: u32, s: &str, budget: usize) -> Result<Alpha> {
        let mut unit = BigInt::one();
        let mut monomial = Exponents::zero(budget);
        for tok in s.split(['*', '·']).map(str::trim) {
            if tok.is_empty() {
                return Err(Error::Parse(format!("empty factor in {s:?}")));
            }
            let (base, exp) = match tok.split_once('^') {
                Some((b, e)) => (
                    b.trim(),
                    e.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?,
                ),
                None => (tok, 1),
            };
            if let Ok(n) = base.parse::<BigInt>() {
                if n.is_zero() || exp < 0 {
                    return Err(Error::Parse(format!("bad constant {tok:?}")));
                }
                let n = n.pow(exp as u32);
                let v = vp_int(p, &n);
                monomial.p += v as i64;
                unit *= n / BigInt::from(p).pow(v);
                continue;
            }
            let q = Prime::parse(base)?;
            if let Prime::E(n) = q {
                if n > budget {
                    return Err(Error::BudgetExceeded);
                }
            }
            monomial.set(q, monomial.get(q) + exp);
        }
        Ok(Alpha { unit, monomial })
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit.is_one() {
            write!(f, "{}", self.monomial)
        } else if self.monomial == Exponents::zero(self.monomial.e.len()) {
            write!(f, "{}", self.unit)
        } else {
            write!(f, "{}*{}", self.unit, self.monomial)
        }
    }
}

/// The lattice `p^c u^a prod E_n^(b_n) Sigma_0 e`, possibly with some primes inverted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonomialLattice {
    pub exponents: Exponents,
    /// Inverted primes have no exponent.
    pub inverted: Vec<Prime>,
    pub base: Alpha,
}

impl MonomialLattice {
    /// `Sigma_0 e`.
    pub fn unit(base: &Alpha) -> MonomialLattice {
        MonomialLattice::new(Exponents::zero(base.monomial.e.len()), base)
    }

    pub fn new(exponents: Exponents, base: &Alpha) -> MonomialLattice {
        MonomialLattice {
            exponents,
            inverted: Vec::new(),
            base: base.clone(),
        }
    }

    pub fn budget(&self) -> usize {
        self.exponents.e.len()
    }

    pub fn is_inverted(&self, q: Prime) -> bool {
        self.inverted.contains(&q)
    }

    fn normalized(mut self) -> MonomialLattice {
        for q in self.inverted.clone() {
            self.exponents.set(q, 0);
        }
        self.inverted.sort_by_key(|q| match q {
            Prime::P => 0,
            Prime::U => 1,
            Prime::E(n) => 1 + *n,
        });
        self.inverted.dedup();
        self
    }

    pub fn invert_prime(&self, q: Prime) -> Result<MonomialLattice> {
        if let Prime::E(n) = q {
            if n == 0 || n > self.budget() {
                return Err(Error::BudgetExceeded);
            }
        }
        let mut out = self.clone();
        out.inverted.push(q);
        Ok(out.normalized())
    }

    /// `phi^*(L)`: spanned by `phi(x) alpha e`.
    pub fn phi_pullback(&self) -> Result<MonomialLattice> {
        let exponents = self.exponents.phi()?.add(&self.base.monomial);
        let mut inverted = Vec::new();
        for &q in &self.inverted {
            match q {
                Prime::P => inverted.push(Prime::P),
                Prime::U => inverted.extend([Prime::U, Prime::E(1)]),
                Prime::E(n) if n >= self.budget() => return Err(Error::BudgetExceeded),
                Prime::E(n) => inverted.push(Prime::E(n + 1)),
            }
        }
        Ok(MonomialLattice {
            exponents,
            inverted,
            base: self.base.clone(),
        }
        .normalized())
    }

    /// Exponent-wise maximum; a prime inverted on one side takes the other side's exponent.
    pub fn intersect(&self, o: &MonomialLattice) -> Result<MonomialLattice> {
        if self.base != o.base || self.budget() != o.budget() {
            return Err(Error::IncompatibleBases);
        }
        let mut exponents = Exponents::zero(self.budget());
        let mut inverted = Vec::new();
        for q in exponents.primes() {
            let v = match (self.is_inverted(q), o.is_inverted(q)) {
                (true, true) => {
                    inverted.push(q);
                    0
                }
                (true, false) => o.exponents.get(q),
                (false, true) => self.exponents.get(q),
                (false, false) => self.exponents.get(q).max(o.exponents.get(q)),
            };
            exponents.set(q, v);
        }
        Ok(MonomialLattice {
            exponents,
            inverted,
            base: self.base.clone(),
        }
        .normalized())
    }

    /// `self ⊆ o`.
    pub fn is_contained_in(&self, o: &MonomialLattice) -> bool {
        self.exponents
            .primes()
            .into_iter()
            .all(|q| o.is_inverted(q) || (!self.is_inverted(q) && self.exponents.get(q) >= o.exponents.get(q)))
    }
}

impl fmt::Display for MonomialLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.exponents)?;
        if !self.inverted.is_empty() {
            let inv: Vec<String> = self.inverted.iter().map(|q| q.to_string()).collect();
            write!(f, "[1/{}]", inv.join(",1/"))?;
        }
        write!(f, " (phi = {})", self.base)
    }
}

/// `D^+`: the largest lattice with nonnegative `u`- and `E`-exponents, keeping the `p`-exponent of `l`.
fn d_plus(l: &MonomialLattice) -> MonomialLattice {
    let mut e = Exponents::zero(l.budget());
    e.p = l.exponents.p;
    MonomialLattice::new(e, &l.base)
}

/// `N = D^+ ∩ M_KR[1/E_n, 1 <= n <= r]`.
pub fn wach_from_kr(m_kr: &MonomialLattice, r: u32) -> Result<MonomialLattice> {
    let mut loc = m_kr.clone();
    for n in 1..=r as usize {
        loc = loc.invert_prime(Prime::E(n))?;
    }
    d_plus(m_kr).intersect(&loc)
}

/// The sequence `N_1 = N`, `N_(i+1) = phi^*(N_i)[1/E_r] ∩ N_i`, up to `N_r`.
pub fn kr_sequence(n: &MonomialLattice, r: u32) -> Result<Vec<MonomialLattice>> {
    let mut seq = vec![n.clone()];
    for _ in 1..r {
        let last = seq.last().expect("nonempty");
        let next = last
            .phi_pullback()?
            .invert_prime(Prime::E(r as usize))?
            .intersect(last)?;
        seq.push(next);
    }
    Ok(seq)
}

/// `M_KR = N_r`.
pub fn kr_from_wach(n: &MonomialLattice, r: u32) -> Result<MonomialLattice> {
    Ok(kr_sequence(n, r)?.pop().expect("nonempty"))
}

/// Number of recursion steps after which `N_i` no longer changes (at most `max_steps`).
pub fn stabilization_count(n: &MonomialLattice, r: u32, max_steps: usize) -> Result<usize> {
    let mut cur = n.clone();
    for step in 0..max_steps {
        let next = cur
            .phi_pullback()?
            .invert_prime(Prime::E(r as usize))?
            .intersect(&cur)?;
        if next == cur {
            return Ok(step);
        }
        cur = next;
    }
    Ok(max_steps)
}

/// `phi^*(M) ⊆ M` with a cokernel supported at `E_r` only.
pub fn is_kr_stable(m: &MonomialLattice, r: u32) -> Result<bool> {
    let pulled = m.phi_pullback()?;
    if !pulled.is_contained_in(m) || pulled.inverted != m.inverted {
        return Ok(false);
    }
    Ok(pulled
        .exponents
        .primes()
        .into_iter()
        .all(|q| q == Prime::E(r as usize) || pulled.exponents.get(q) == m.exponents.get(q)))
}

/// Reads `alpha` off a rank-one BT module over Sigma at level `r`: `A = unit u^a p^c E^h`
/// becomes `unit u_0^a p^c E_r^h` after sending `E` to `E_r(u_0)`.
pub fn lambda_r0_transport(bt: &BtModule, budget: usize) -> Result<Alpha> {
    if bt.rank() != 1 {
        return Err(Error::NotRank1);
    }
    let ctx = bt.frame().ctx();
    let r = ctx.r as usize;
    if r > budget {
        return Err(Error::BudgetExceeded);
    }
    let mut x = bt.a().get(0, 0).clone();
    let mut monomial = Exponents::zero(budget);
    while !x.is_unit() && !x.is_zero() {
        let (q, rem) = e_divide(&x);
        // the quotient is known to fewer digits than N when E has large degree
        if !rem.is_zero_at(rem.prec().max(1) as u32) || q.is_zero_at(q.prec().max(1) as u32) {
            break;
        }
        monomial.e[r - 1] += 1;
        x = q;
    }
    if !x.is_unit() {
        return Err(Error::Unsupported(
            "the Frobenius matrix is not a unit times a power of E".into(),
        ));
    }
    if x.prec() < ctx.n as i32 {
        return Err(Error::PrecisionLoss(format!(
            "dividing by E leaves the unit known to p^{} only; raise M to at least {}",
            x.prec().max(0),
            ctx.e_degree(ctx.r) * (ctx.n as usize + 1)
        )));
    }
    // only the constant term of the unit is recorded: units do not move lattices
    let (num, _) = x.constant_term().coeff(0);
    let modulus = BigInt::from(ctx.p).pow(ctx.n);
    let mut unit = BigInt::from(num) % &modulus;
    if unit > &modulus / 2 {
        unit -= &modulus;
    }
    Ok(Alpha { unit, monomial })
}

#[cfg(test)]
mod tests;
