//! Dense square and rectangular matrices over the truncated series rings.

use std::fmt;

use crate::error::{Error, Result};
use crate::padic_rings::{PrecisionCtx, Series};

#[derive(Clone)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Series>,
}

impl Mat {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Series) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Series>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn zero(ctx: PrecisionCtx, rows: usize, cols: usize, prec: i32) -> Mat {
        Mat::from_fn(rows, cols, |_, _| Series::zero(ctx, prec))
    }

    pub fn identity(ctx: PrecisionCtx, n: usize, prec: i32) -> Mat {
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                Series::one(ctx, prec)
            } else {
                Series::zero(ctx, prec)
            }
        })
    }

    pub fn diag(d: &[Series]) -> Mat {
        let ctx = d[0].ctx();
        let prec = d.iter().map(|x| x.prec()).max().unwrap_or(0);
        Mat::from_fn(d.len(), d.len(), |i, j| {
            if i == j {
                d[i].clone()
            } else {
                Series::zero(ctx, prec)
            }
        })
    }

    pub fn scalar(x: &Series) -> Mat {
        Mat::diag(std::slice::from_ref(x))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.data[0].ctx()
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Series) {
        self.data[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[Series] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Series>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }

    pub fn col(&self, j: usize) -> Mat {
        Mat::from_fn(self.rows, 1, |i, _| self.get(i, j).clone())
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Mat {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    /// Writes `block` into the rows/columns listed.
    pub fn place(&mut self, rows: &[usize], cols: &[usize], block: &Mat) {
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                self.set(i, j, block.get(a, b).clone());
            }
        }
    }

    pub fn map(&self, f: impl Fn(&Series) -> Series) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn frobenius(&self) -> Mat {
        self.map(|x| x.frobenius())
    }

    pub fn add(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).add_ref(o.get(i, j)))
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).sub_ref(o.get(i, j)))
    }

    pub fn neg(&self) -> Mat {
        self.map(|x| x.neg_ref())
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        Mat::from_fn(self.rows, o.cols, |i, j| {
            let mut acc = self.get(i, 0).mul_ref(o.get(0, j));
            for k in 1..self.cols {
                acc = acc.add_ref(&self.get(i, k).mul_ref(o.get(k, j)));
            }
            acc
        })
    }

    pub fn scale(&self, x: &Series) -> Mat {
        self.map(|y| x.mul_ref(y))
    }

    /// Scales column `j` by `d[j]` (right multiplication by a diagonal matrix).
    pub fn scale_cols(&self, d: &[Series]) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mul_ref(&d[j]))
    }

    /// Scales row `i` by `d[i]` (left multiplication by a diagonal matrix).
    pub fn scale_rows(&self, d: &[Series]) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| d[i].mul_ref(self.get(i, j)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.get(i, j).is_one()
                    } else {
                        self.get(i, j).is_zero()
                    }
                })
            })
    }

    /// Entrywise equality modulo `p^n` and `u^len`.
    pub fn eq_at(&self, o: &Mat, n: u32, len: usize) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.data.iter().zip(&o.data).all(|(a, b)| a.eq_at(b, n, len))
    }

    pub fn min_prec(&self) -> i32 {
        self.data.iter().map(|x| x.prec()).min().unwrap_or(i32::MAX)
    }

    pub fn max_scale(&self) -> u32 {
        self.data.iter().map(|x| x.scale()).max().unwrap_or(0)
    }

    /// Reduction to `F_p` at `u = 0`, as residues.
    pub fn residue_matrix(&self) -> Vec<Vec<u64>> {
        let p = self.ctx().p as u64;
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let x = self.get(i, j);
                        if x.scale() > 0 {
                            // canonical fractional values are never integral
                            return u64::MAX;
                        }
                        let (c, _) = x.coeff(0);
                        (c % p).try_into().unwrap_or(0)
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse by Gauss–Jordan elimination with unit pivots.
    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::NotAUnit);
        }
        let n = self.rows;
        let ctx = self.ctx();
        let prec = self.min_prec();
        let mut a = self.clone();
        let mut inv = Mat::identity(ctx, n, prec.max(ctx.work_prec()));
        for col in 0..n {
            let piv = (col..n).find(|&r| a.get(r, col).is_unit()).ok_or(Error::NotAUnit)?;
            if piv != col {
                a.swap_rows(piv, col);
                inv.swap_rows(piv, col);
            }
            let pinv = a.get(col, col).invert()?;
            for j in 0..n {
                let v = a.get(col, j).mul_ref(&pinv);
                a.set(col, j, v);
                let w = inv.get(col, j).mul_ref(&pinv);
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero_at(f.prec().max(0) as u32) {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j).sub_ref(&f.mul_ref(a.get(col, j)));
                    a.set(r, j, v);
                    let w = inv.get(r, j).sub_ref(&f.mul_ref(inv.get(col, j)));
                    inv.set(r, j, w);
                }
            }
        }
        Ok(inv)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Determinant by cofactor expansion (small sizes only).
    pub fn det(&self) -> Series {
        assert!(self.is_square());
        let n = self.rows;
        match n {
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc: Option<Series> = None;
                for j in 0..n {
                    let minor = self.minor(0, j);
                    let term = self.get(0, j).mul_ref(&minor.det());
                    acc = Some(match acc {
                        None => term,
                        Some(a) if j % 2 == 0 => a.add_ref(&term),
                        Some(a) => a.sub_ref(&term),
                    });
                }
                acc.expect("n >= 1")
            }
        }
    }

    fn minor(&self, r: usize, c: usize) -> Mat {
        let rows: Vec<usize> = (0..self.rows).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..self.cols).filter(|&j| j != c).collect();
        self.select(&rows, &cols)
    }

    /// Classical adjugate.
    pub fn adjugate(&self) -> Mat {
        let n = self.rows;
        if n == 1 {
            return Mat::identity(self.ctx(), 1, self.min_prec());
        }
        Mat::from_fn(n, n, |i, j| {
            let d = self.minor(j, i).det();
            if (i + j) % 2 == 0 {
                d
            } else {
                d.neg_ref()
            }
        })
    }

    pub fn truncate_prec(&self, prec: i32) -> Mat {
        self.map(|x| x.truncate_prec(prec))
    }

    pub fn with_ctx(&self, ctx: PrecisionCtx) -> Mat {
        self.map(|x| x.with_ctx(ctx))
    }
}

impl PartialEq for Mat {
    fn eq(&self, o: &Mat) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.data.iter().zip(&o.data).all(|(a, b)| a == b)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                writeln!(f, "  ({i},{j}) {:?}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}
