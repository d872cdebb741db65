//! Linear systems over `Z/p^k` by diagonalisation with minimal-valuation pivots.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;

use crate::padic_rings::series::{inv_mod, ppow, vp_big};

struct Diagonalized {
    /// `A C` row-reduced to diagonal form by the row operations applied to `rhs`.
    pivots: Vec<u32>,
    /// Column transform, `ncols x ncols`.
    c: Vec<Vec<BigUint>>,
    rhs: Vec<BigUint>,
}

fn sub_mul(a: &BigUint, f: &BigUint, b: &BigUint, m: &BigUint) -> BigUint {
    let t = (f * b) % m;
    (a + m - t) % m
}

fn diagonalize(a: &[Vec<BigUint>], ncols: usize, rhs: &[BigUint], p: u32, k: u32) -> Diagonalized {
    let m = ppow(p, k);
    let mut a: Vec<Vec<BigUint>> = a.iter().map(|r| r.iter().map(|x| x % &m).collect()).collect();
    let mut rhs: Vec<BigUint> = rhs.iter().map(|x| x % &m).collect();
    let nrows = a.len();
    let mut c: Vec<Vec<BigUint>> = (0..ncols)
        .map(|i| (0..ncols).map(|j| BigUint::from((i == j) as u32)).collect())
        .collect();
    let mut pivots = Vec::new();
    let steps = nrows.min(ncols);
    for t in 0..steps {
        let mut best: Option<(u32, usize, usize)> = None;
        'scan: for (i, row) in a.iter().enumerate().skip(t) {
            for (j, x) in row.iter().enumerate().skip(t) {
                if x.is_zero() {
                    continue;
                }
                let v = vp_big(p, x);
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, i, j));
                    if v == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        a.swap(t, pi);
        rhs.swap(t, pi);
        if pj != t {
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in c.iter_mut() {
                row.swap(t, pj);
            }
        }
        let pv = ppow(p, v);
        let unit = &a[t][t] / &pv;
        let uinv = inv_mod(&unit, p, k).expect("unit part");
        for i in 0..nrows {
            if i == t || a[i][t].is_zero() {
                continue;
            }
            let f = ((&a[i][t] / &pv) * &uinv) % &m;
            let (pivot_row, row) = if i < t {
                let (lo, hi) = a.split_at_mut(t);
                (&hi[0], &mut lo[i])
            } else {
                let (lo, hi) = a.split_at_mut(i);
                (&lo[t], &mut hi[0])
            };
            for (x, y) in row[t..ncols].iter_mut().zip(&pivot_row[t..ncols]) {
                if !y.is_zero() {
                    *x = sub_mul(x, &f, y, &m);
                }
            }
            rhs[i] = sub_mul(&rhs[i], &f, &rhs[t], &m);
        }
        for j in (t + 1)..ncols {
            if a[t][j].is_zero() {
                continue;
            }
            let f = ((&a[t][j] / &pv) * &uinv) % &m;
            for row in a.iter_mut() {
                if !row[t].is_zero() {
                    row[j] = sub_mul(&row[j], &f, &row[t], &m);
                }
            }
            for row in c.iter_mut() {
                if !row[t].is_zero() {
                    row[j] = sub_mul(&row[j], &f, &row[t], &m);
                }
            }
        }
        // normalise the pivot to p^v
        for row in c.iter_mut() {
            row[t] = (&row[t] * &uinv) % &m;
        }
        a[t][t] = pv;
        pivots.push(v);
    }
    Diagonalized { pivots, c, rhs }
}

/// Generators of `{x in (Z/p^k)^ncols : A x = 0}`.
pub fn kernel(a: &[Vec<BigUint>], ncols: usize, p: u32, k: u32) -> Vec<Vec<BigUint>> {
    let m = ppow(p, k);
    let zeros = vec![BigUint::zero(); a.len()];
    let d = diagonalize(a, ncols, &zeros, p, k);
    let mut gens = Vec::new();
    for j in 0..ncols {
        let scale = match d.pivots.get(j) {
            Some(&0) => continue,
            Some(&v) => ppow(p, k - v.min(k)),
            None => BigUint::from(1u32),
        };
        let g: Vec<BigUint> = (0..ncols).map(|i| (&d.c[i][j] * &scale) % &m).collect();
        if g.iter().any(|x| !x.is_zero()) {
            gens.push(g);
        }
    }
    gens
}

/// One solution of `A x = b` over `Z/p^k`, if any.
pub fn solve(a: &[Vec<BigUint>], ncols: usize, b: &[BigUint], p: u32, k: u32) -> Option<Vec<BigUint>> {
    let m = ppow(p, k);
    let d = diagonalize(a, ncols, b, p, k);
    let mut y = vec![BigUint::zero(); ncols];
    for (i, r) in d.rhs.iter().enumerate() {
        match d.pivots.get(i) {
            Some(&v) => {
                let pv = ppow(p, v);
                if !r.is_multiple_of(&pv) {
                    return None;
                }
                y[i] = (r / &pv) % &m;
            }
            None => {
                if !r.is_zero() {
                    return None;
                }
            }
        }
    }
    Some(
        (0..ncols)
            .map(|i| (0..ncols).fold(BigUint::zero(), |acc, j| acc + &d.c[i][j] * &y[j]) % &m)
            .collect(),
    )
}

/// Largest pivot valuation, i.e. how many digits a solution may be undetermined by.
pub fn max_pivot_valuation(a: &[Vec<BigUint>], ncols: usize, p: u32, k: u32) -> u32 {
    pivot_valuations(a, ncols, p, k).into_iter().max().unwrap_or(0)
}

/// Valuations of the nonzero pivots; fewer than `ncols` means a kernel modulo every `p^j`.
pub fn pivot_valuations(a: &[Vec<BigUint>], ncols: usize, p: u32, k: u32) -> Vec<u32> {
    let zeros = vec![BigUint::zero(); a.len()];
    diagonalize(a, ncols, &zeros, p, k).pivots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[u64]]) -> Vec<Vec<BigUint>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigUint::from(x)).collect())
            .collect()
    }

    fn apply(a: &[Vec<BigUint>], x: &[BigUint], m: &BigUint) -> Vec<BigUint> {
        a.iter()
            .map(|r| r.iter().zip(x).fold(BigUint::zero(), |acc, (u, v)| acc + u * v) % m)
            .collect()
    }

    #[test]
    fn kernel_of_p_times_identity_mod_p2() {
        // 3x = 0 mod 9 has solutions 3Z/9.
        let a = mat(&[&[3]]);
        let k = kernel(&a, 1, 3, 2);
        assert_eq!(k, vec![vec![BigUint::from(3u32)]]);
    }

    #[test]
    fn kernel_vectors_are_solutions() {
        let a = mat(&[&[1, 2, 3], &[2, 4, 6], &[0, 3, 9]]);
        let m = ppow(3, 3);
        let k = kernel(&a, 3, 3, 3);
        assert!(!k.is_empty());
        for g in &k {
            assert!(apply(&a, g, &m).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = mat(&[&[3]]);
        assert!(solve(&a, 1, &[BigUint::from(1u32)], 3, 2).is_none());
        let x = solve(&a, 1, &[BigUint::from(6u32)], 3, 2).unwrap();
        assert_eq!((&x[0] * 3u32) % 9u32, BigUint::from(6u32));
    }
}
