//! Windows given by a normal decomposition `M = L + N` and the invertible
//! matrix `Psi = [Phi_1 on L | Phi on N]`.

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frames::{Frame, FrameHom, RingTag};
use crate::linalg;
use crate::matrix::Mat;
use crate::padic_rings::elements::FilWitness;
use crate::padic_rings::Series;

#[derive(Clone, Debug)]
pub struct Window {
    frame: Frame,
    l_mask: Vec<bool>,
    psi: Mat,
}

/// Coordinates of an element of `Fil M`: free coefficients on `L`, witnessed
/// filtration elements on `N`.
#[derive(Clone, Debug)]
pub enum FilCoord {
    Free(Series),
    Fil(FilWitness),
}

pub fn indices(mask: &[bool], want: bool) -> Vec<usize> {
    (0..mask.len()).filter(|&i| mask[i] == want).collect()
}

impl Window {
    pub fn new(frame: Frame, l_mask: Vec<bool>, psi: Mat) -> Result<Window> {
        if !psi.is_square() || psi.rows() != l_mask.len() || psi.rows() == 0 {
            return Err(Error::AxiomViolation(
                "Psi must be square of the rank of the window".into(),
            ));
        }
        Ok(Window { frame, l_mask, psi })
    }

    /// `(S, Fil S, phi, phi_1)`: `L = 0`, `Psi = (1)`.
    pub fn unit(frame: &Frame) -> Window {
        Window {
            frame: frame.clone(),
            l_mask: vec![false],
            psi: Mat::scalar(&frame.one()),
        }
    }

    /// `(S, S, varpi phi, phi)`: `L = M`, `Psi = (1)`.
    pub fn unit_dual(frame: &Frame) -> Window {
        Window {
            frame: frame.clone(),
            l_mask: vec![true],
            psi: Mat::scalar(&frame.one()),
        }
    }

    /// Random window with invertible `Psi = U L` built from triangular factors.
    pub fn random<R: Rng + ?Sized>(frame: &Frame, rank: usize, deg: usize, rng: &mut R) -> Window {
        let ctx = frame.ctx();
        let prec = frame.prec();
        let mut rnd = |unit: bool| {
            let mut x = Series::random_deg(ctx, prec, deg, rng);
            if unit && !x.is_unit() {
                x = x.add_ref(&frame.one());
            }
            x
        };
        let upper = Mat::from_fn(rank, rank, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => rnd(false),
            std::cmp::Ordering::Equal => rnd(true),
            _ => frame.zero(),
        });
        let lower = Mat::from_fn(rank, rank, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => rnd(false),
            std::cmp::Ordering::Equal => frame.one(),
            _ => frame.zero(),
        });
        let l_mask: Vec<bool> = (0..rank).map(|_| rng.gen_bool(0.5)).collect();
        Window {
            frame: frame.clone(),
            l_mask,
            psi: upper.mul(&lower),
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.l_mask.len()
    }

    pub fn d_l(&self) -> usize {
        self.l_mask.iter().filter(|&&b| b).count()
    }

    pub fn l_mask(&self) -> &[bool] {
        &self.l_mask
    }

    pub fn psi(&self) -> &Mat {
        &self.psi
    }

    pub fn l_idx(&self) -> Vec<usize> {
        indices(&self.l_mask, true)
    }

    pub fn n_idx(&self) -> Vec<usize> {
        indices(&self.l_mask, false)
    }

    /// `diag(a on L, b on N)` as a vector.
    pub fn split_diag(&self, on_l: &Series, on_n: &Series) -> Vec<Series> {
        self.l_mask
            .iter()
            .map(|&l| if l { on_l.clone() } else { on_n.clone() })
            .collect()
    }

    /// Linearisation of `Phi`: `F = Psi diag(varpi on L, 1 on N)`.
    pub fn f_matrix(&self) -> Mat {
        self.psi
            .scale_cols(&self.split_diag(&self.frame.varpi(), &self.frame.one()))
    }

    /// The map with `V(Phi_1(m)) = 1 (x) m`: `V = diag(1 on L, varpi on N) Psi^{-1}`.
    pub fn v_matrix(&self) -> Result<Mat> {
        Ok(self
            .psi
            .inverse()?
            .scale_rows(&self.split_diag(&self.frame.one(), &self.frame.varpi())))
    }

    pub fn fv_pair(&self) -> Result<(Mat, Mat)> {
        Ok((self.f_matrix(), self.v_matrix()?))
    }

    /// `Phi` on a column vector.
    pub fn phi(&self, x: &Mat) -> Mat {
        self.f_matrix().mul(&x.frobenius())
    }

    /// Value of a filtration element as a column vector.
    pub fn fil_value(&self, coords: &[FilCoord]) -> Mat {
        Mat::from_fn(coords.len(), 1, |i, _| match &coords[i] {
            FilCoord::Free(a) => a.clone(),
            FilCoord::Fil(w) => w.value(),
        })
    }

    /// `Phi_1` on a filtration element.
    pub fn phi1(&self, coords: &[FilCoord]) -> Result<Mat> {
        if coords.len() != self.rank() {
            return Err(Error::AxiomViolation("coordinate vector has the wrong length".into()));
        }
        let mut img = Vec::with_capacity(coords.len());
        for (i, c) in coords.iter().enumerate() {
            img.push(match (c, self.l_mask[i]) {
                (FilCoord::Free(a), true) => a.frobenius(),
                (FilCoord::Fil(w), false) => self.frame.phi1(w)?,
                (FilCoord::Fil(w), true) => w.value().frobenius(),
                (FilCoord::Free(_), false) => return Err(Error::NotInFil),
            });
        }
        Ok(self.psi.mul(&Mat::from_fn(img.len(), 1, |i, _| img[i].clone())))
    }

    fn random_fil_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<FilCoord> {
        let ctx = self.frame.ctx();
        let prec = self.frame.prec();
        let deg = ctx.m.min(10);
        self.l_mask
            .iter()
            .map(|&l| {
                let y = Series::random_deg(ctx, prec, deg, rng);
                if l {
                    return FilCoord::Free(y);
                }
                let w = match (self.frame.tag(), rng.gen_range(0..3)) {
                    (RingTag::Zp, _) => FilWitness::PMul(y),
                    (RingTag::Script, 1) => FilWitness::DividedPower(rng.gen_range(2..=ctx.p as u64), y),
                    (RingTag::Script, 2) => FilWitness::Sum(vec![
                        FilWitness::EMul(y.clone()),
                        FilWitness::DividedPower(ctx.p as u64, y),
                    ]),
                    _ => FilWitness::EMul(y),
                };
                FilCoord::Fil(w)
            })
            .collect()
    }

    /// Window axioms at precision: `Psi` invertible, `Phi = varpi Phi_1` on
    /// sample filtration elements and `Phi_1(s n) = phi_1(s) Phi(n)` on `N`.
    pub fn check_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<()> {
        let inv = self
            .psi
            .inverse()
            .map_err(|_| Error::AxiomViolation("Psi is not invertible".into()))?;
        let id = Mat::identity(self.frame.ctx(), self.rank(), self.frame.prec());
        if self.psi.mul(&inv) != id || inv.mul(&self.psi) != id {
            return Err(Error::AxiomViolation("Psi inverse check failed".into()));
        }
        let varpi = self.frame.varpi();
        for _ in 0..2 {
            let m = self.random_fil_element(rng);
            let lhs = self.phi(&self.fil_value(&m));
            let rhs = self.phi1(&m)?.scale(&varpi);
            if lhs != rhs {
                return Err(Error::AxiomViolation("Phi != varpi Phi_1 on Fil M".into()));
            }
        }
        for j in self.n_idx() {
            let s = FilWitness::EMul(self.frame.one());
            let mut coords: Vec<FilCoord> = (0..self.rank())
                .map(|i| {
                    if self.l_mask[i] {
                        FilCoord::Free(self.frame.zero())
                    } else {
                        FilCoord::Fil(FilWitness::EMul(self.frame.zero()))
                    }
                })
                .collect();
            coords[j] = FilCoord::Fil(s.clone());
            let lhs = self.phi1(&coords)?;
            let rhs = self.psi.col(j).scale(&self.frame.phi1(&s)?);
            if lhs != rhs {
                return Err(Error::AxiomViolation("Phi_1(s n) != phi_1(s) Phi(n)".into()));
            }
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        use rand::SeedableRng;
        self.check_with(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5))
    }

    /// Dual window: `Psi^t = (Psi^{-1})^T` with `L` and `N` exchanged.
    pub fn dual(&self) -> Result<Window> {
        Ok(Window {
            frame: self.frame.clone(),
            l_mask: self.l_mask.iter().map(|b| !b).collect(),
            psi: self.psi.inverse()?.transpose(),
        })
    }

    /// Base change along a `c`-homomorphism: `Psi' = alpha(Psi) diag(c on L, 1 on N)`.
    pub fn base_change(&self, h: &FrameHom) -> Result<Window> {
        if h.source != self.frame {
            return Err(Error::BadHom("window is not over the source frame".into()));
        }
        let img = h.apply_mat(&self.psi);
        let d: Vec<Series> = self
            .l_mask
            .iter()
            .map(|&l| if l { h.c.clone() } else { h.target.one() })
            .collect();
        Ok(Window {
            frame: h.target.clone(),
            l_mask: self.l_mask.clone(),
            psi: img.scale_cols(&d),
        })
    }

    /// `Psi -> a Psi`.
    pub fn twist(&self, a: &Series) -> Window {
        Window {
            psi: self.psi.scale(a),
            ..self.clone()
        }
    }

    pub fn direct_sum(&self, o: &Window) -> Result<Window> {
        if self.frame != o.frame {
            return Err(Error::BadHom("direct sum needs a common frame".into()));
        }
        let (a, b) = (self.rank(), o.rank());
        let psi = Mat::from_fn(a + b, a + b, |i, j| match (i < a, j < a) {
            (true, true) => self.psi.get(i, j).clone(),
            (false, false) => o.psi.get(i - a, j - a).clone(),
            _ => self.frame.zero(),
        });
        let mut l_mask = self.l_mask.clone();
        l_mask.extend_from_slice(&o.l_mask);
        Ok(Window {
            frame: self.frame.clone(),
            l_mask,
            psi,
        })
    }

    /// Reduction modulo `p^n`, over the frame with working precision `n`.
    pub fn reduce_mod_pn(&self, n: u32) -> Result<Window> {
        let ctx = self.frame.ctx().with_pprec(n)?;
        let frame = self.frame.with_ctx(ctx);
        Ok(Window {
            frame,
            l_mask: self.l_mask.clone(),
            psi: self.psi.map(|x| x.with_ctx(ctx).truncate_prec(n as i32)),
        })
    }

    /// Same data over an equal frame (used after rebuilding frames).
    pub fn with_frame(&self, frame: &Frame) -> Window {
        Window {
            frame: frame.clone(),
            ..self.clone()
        }
    }

    pub fn with_psi(&self, psi: Mat) -> Window {
        Window { psi, ..self.clone() }
    }
}

/// A filtration-compatible module map `X: M -> M'`, stored with the block
/// `X_{N', L} = E Z`.
#[derive(Clone, Debug)]
pub struct FilMap {
    pub mat: Mat,
    /// Rows indexed by `N'`, columns by `L`.
    pub z: Mat,
    pub src_mask: Vec<bool>,
    pub tgt_mask: Vec<bool>,
}

impl FilMap {
    /// Builds the map from `x` (whose `(N', L)` block is ignored) and `z`.
    pub fn new(frame: &Frame, x: &Mat, z: &Mat, src_mask: &[bool], tgt_mask: &[bool]) -> FilMap {
        let (nl, l) = (indices(tgt_mask, false), indices(src_mask, true));
        let mut mat = x.clone();
        let e = frame.e();
        for (a, &i) in nl.iter().enumerate() {
            for (b, &j) in l.iter().enumerate() {
                mat.set(i, j, e.mul_ref(z.get(a, b)));
            }
        }
        FilMap {
            mat,
            z: z.clone(),
            src_mask: src_mask.to_vec(),
            tgt_mask: tgt_mask.to_vec(),
        }
    }

    fn empty_z(frame: &Frame, src_mask: &[bool], tgt_mask: &[bool]) -> Mat {
        let rows = tgt_mask.iter().filter(|b| !**b).count();
        let cols = src_mask.iter().filter(|b| **b).count();
        Mat::zero(frame.ctx(), rows, cols, frame.prec())
    }

    /// A map with vanishing `(N', L)` block.
    pub fn plain(frame: &Frame, x: &Mat, src_mask: &[bool], tgt_mask: &[bool]) -> FilMap {
        let z = FilMap::empty_z(frame, src_mask, tgt_mask);
        FilMap::new(frame, x, &z, src_mask, tgt_mask)
    }

    pub fn identity(w: &Window) -> FilMap {
        let id = Mat::identity(w.frame.ctx(), w.rank(), w.frame.prec());
        FilMap::plain(&w.frame, &id, &w.l_mask, &w.l_mask)
    }

    /// Multiplication by a scalar between windows of the same shape.
    pub fn scalar(w: &Window, y: &Series) -> FilMap {
        let m = Mat::identity(w.frame.ctx(), w.rank(), w.frame.prec()).scale(y);
        FilMap::plain(&w.frame, &m, &w.l_mask, &w.l_mask)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &FilMap) -> FilMap {
        let mat = self.mat.mul(&other.mat);
        let l_mid = indices(&other.tgt_mask, true);
        let n_mid = indices(&other.tgt_mask, false);
        let l_src = indices(&other.src_mask, true);
        let n_tgt = indices(&self.tgt_mask, false);
        let z = if n_tgt.is_empty() || l_src.is_empty() {
            Mat::zero(mat.ctx(), n_tgt.len(), l_src.len(), mat.min_prec())
        } else {
            let y_ll = other.mat.select(&l_mid, &l_src);
            let x_nn = self.mat.select(&n_tgt, &n_mid);
            let mut acc = if l_mid.is_empty() {
                None
            } else {
                Some(self.z.mul(&y_ll))
            };
            if !n_mid.is_empty() {
                let t = x_nn.mul(&other.z);
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.add(&t),
                });
            }
            acc.expect("some middle index")
        };
        FilMap {
            mat,
            z,
            src_mask: other.src_mask.clone(),
            tgt_mask: self.tgt_mask.clone(),
        }
    }

    /// Inverse of an automorphism (`src_mask == tgt_mask`), with the `(N, L)`
    /// block of the inverse given by `-S^{-1} Z G_LL^{-1}`.
    pub fn inverse(&self) -> Result<FilMap> {
        if self.src_mask != self.tgt_mask {
            return Err(Error::BadHom("inverse needs matching decompositions".into()));
        }
        let inv = self.mat.inverse()?;
        let (l, n) = (indices(&self.src_mask, true), indices(&self.src_mask, false));
        let z = if l.is_empty() || n.is_empty() {
            self.z.clone()
        } else {
            let g_ll_inv = self.mat.select(&l, &l).inverse()?;
            let s_inv = inv.select(&n, &n);
            s_inv.mul(&self.z).mul(&g_ll_inv).neg()
        };
        Ok(FilMap {
            mat: inv,
            z,
            src_mask: self.src_mask.clone(),
            tgt_mask: self.tgt_mask.clone(),
        })
    }

    /// `phi~(X)`: the matrix with `Phi_1'(X m) = Psi' phi~(X)` on the basis of
    /// `Fil M` for `L` columns, and `Phi'(X n) = Psi' phi~(X)` for `N` columns.
    pub fn phi_tilde(&self, tgt_frame: &Frame) -> Mat {
        let varpi = tgt_frame.varpi();
        let phi1_e = tgt_frame.phi1_e();
        let nl = indices(&self.tgt_mask, false);
        let l = indices(&self.src_mask, true);
        let mut out = self.mat.frobenius();
        for j in 0..out.cols() {
            for i in 0..out.rows() {
                let (tl, sl) = (self.tgt_mask[i], self.src_mask[j]);
                if tl && !sl {
                    let v = varpi.mul_ref(out.get(i, j));
                    out.set(i, j, v);
                } else if !tl && sl {
                    let a = nl.iter().position(|&x| x == i).expect("row in N'");
                    let b = l.iter().position(|&x| x == j).expect("col in L");
                    out.set(i, j, phi1_e.mul_ref(&self.z.get(a, b).frobenius()));
                }
            }
        }
        out
    }

    /// Entrywise image under a ring map, with `E Z -> E (ratio * f(Z))` where
    /// `ratio = f(E)/E`.
    pub fn map_ring(&self, f: &dyn Fn(&Series) -> Series, ratio: &Series, frame: &Frame) -> FilMap {
        let mat = self.mat.map(f);
        let z = self.z.map(|x| ratio.mul_ref(&f(x)));
        FilMap::new(frame, &mat, &z, &self.src_mask, &self.tgt_mask)
    }

    pub fn eq_map(&self, o: &FilMap) -> bool {
        self.mat == o.mat && self.z == o.z
    }
}

/// `Psi' phi~(X) - X alpha(Psi) diag(c on L, 1 on N)`: vanishes iff `X` is an
/// `alpha`-homomorphism of windows.
pub fn hom_defect(src: &Window, tgt: &Window, x: &FilMap, alpha: &dyn Fn(&Series) -> Series, c: &Series) -> Mat {
    let lhs = tgt.psi.mul(&x.phi_tilde(&tgt.frame));
    let d = src.split_diag(c, &tgt.frame.one());
    let rhs = x.mat.mul(&src.psi.map(alpha).scale_cols(&d));
    lhs.sub(&rhs)
}

/// Whether `X` is a window homomorphism between windows over one frame.
pub fn is_hom(src: &Window, tgt: &Window, x: &FilMap) -> bool {
    src.frame == tgt.frame
        && x.src_mask == src.l_mask
        && x.tgt_mask == tgt.l_mask
        && hom_defect(src, tgt, x, &|s| s.clone(), &src.frame.one()).is_zero()
}

/// Canonical-isomorphism test through the linearisations: `T F_src = F_tgt phi(T)`,
/// `V_tgt T = phi(T) V_src`, `T` invertible.
pub fn is_iso_fv(src: &Window, tgt: &Window, t: &Mat) -> Result<bool> {
    let (f1, v1) = src.fv_pair()?;
    let (f2, v2) = tgt.fv_pair()?;
    let pt = t.frobenius();
    Ok(t.inverse().is_ok() && t.mul(&f1) == f2.mul(&pt) && v2.mul(t) == pt.mul(&v1))
}

/// Generators of `Hom(W1, W2)` modulo `(p^k, u^len)`, over Sigma or `Z_p` frames.
///
/// Unknowns are the coefficients of `X` outside the `(N2, L1)` block and of `Z`
/// there; the linear conditions are diagonalised over `Z/p^k`.
pub fn hom_solve(w1: &Window, w2: &Window, k: u32, len: usize) -> Result<Vec<FilMap>> {
    if w1.frame != w2.frame {
        return Err(Error::BadHom("hom_solve needs a common frame".into()));
    }
    let frame = &w1.frame;
    if frame.tag() == RingTag::Script {
        return Err(Error::Unsupported("hom_solve over the divided-power frame".into()));
    }
    let ctx = frame.ctx();
    let len = len.min(ctx.m).max(1);
    let (r2, r1) = (w2.rank(), w1.rank());
    let nl2 = indices(&w2.l_mask, false);
    let l1 = indices(&w1.l_mask, true);
    let prec = frame.prec();
    // unknown = (i, j, a): entry (i, j), coefficient of u^a
    let unknowns: Vec<(usize, usize, usize)> = (0..r2)
        .flat_map(|i| (0..r1).flat_map(move |j| (0..len).map(move |a| (i, j, a))))
        .collect();
    let build = |vals: &dyn Fn(usize, usize) -> Series| -> FilMap {
        let x = Mat::from_fn(r2, r1, vals);
        let mut z = Mat::zero(ctx, nl2.len(), l1.len(), prec);
        for (a, &i) in nl2.iter().enumerate() {
            for (b, &j) in l1.iter().enumerate() {
                z.set(a, b, vals(i, j));
            }
        }
        FilMap::new(frame, &x, &z, &w1.l_mask, &w2.l_mask)
    };
    let modk = crate::padic_rings::series::ppow(ctx.p, k);
    let mut columns: Vec<Vec<BigUint>> = Vec::with_capacity(unknowns.len());
    for &(i0, j0, a0) in &unknowns {
        let x = build(&|i, j| {
            if (i, j) == (i0, j0) {
                Series::monomial(ctx, a0, prec)
            } else {
                Series::zero(ctx, prec)
            }
        });
        let d = hom_defect(w1, w2, &x, &|s| s.clone(), &frame.one());
        let mut col = Vec::with_capacity(r2 * r1 * len);
        for e in d.entries() {
            let scale = crate::padic_rings::series::ppow(ctx.p, e.scale());
            for a in 0..len {
                let (num, _) = e.coeff(a);
                // integral frames: the scale is zero
                col.push((num / &scale) % &modk);
            }
        }
        columns.push(col);
    }
    let nrows = columns.first().map_or(0, |c| c.len());
    let rows: Vec<Vec<BigUint>> = (0..nrows)
        .map(|r| columns.iter().map(|c| c[r].clone()).collect())
        .collect();
    let gens = linalg::kernel(&rows, unknowns.len(), ctx.p, k);
    Ok(gens
        .into_iter()
        .map(|g| {
            let vals = |i: usize, j: usize| {
                let coeffs: Vec<num_bigint::BigInt> = (0..len)
                    .map(|a| {
                        let idx = unknowns.iter().position(|&u| u == (i, j, a)).expect("unknown");
                        num_bigint::BigInt::from(g[idx].clone())
                    })
                    .collect();
                Series::from_bigints(ctx, &coeffs, 0, k as i32)
            };
            build(&vals)
        })
        .collect())
}

/// Whether some generator of a rank-one hom space is a unit, i.e. an isomorphism exists.
pub fn has_unit_generator(gens: &[FilMap]) -> bool {
    gens.iter().any(|g| g.mat.rows() == 1 && g.mat.get(0, 0).is_unit())
}

/// The lift of `base` (a window modulo `p^(n+1)`) obtained by adding
/// `(p^n G, p^n G_1)`; `G` must equal `varpi G_1` modulo `p` on `L`.
pub fn lift_window(base: &Window, n: u32, g: &Mat, g1: &Mat) -> Result<Window> {
    let varpi = base.frame.varpi();
    for j in base.l_idx() {
        for i in 0..base.rank() {
            let lhs = g.get(i, j);
            let rhs = varpi.mul_ref(g1.get(i, j));
            if !lhs.eq_at(&rhs, 1, base.frame.ctx().m) {
                return Err(Error::NotInD1(format!("G != varpi G_1 at ({i}, {j})")));
            }
        }
    }
    let h = Mat::from_fn(base.rank(), base.rank(), |i, j| {
        if base.l_mask[j] {
            g1.get(i, j).clone()
        } else {
            g.get(i, j).clone()
        }
    });
    let psi = base.psi.add(&h.map(|x| x.truncate_prec(1).mul_p_pow(n)));
    Ok(base.with_psi(psi))
}

/// `d(alpha) = (Phi alpha - alpha Phi, Phi_1 alpha - alpha Phi_1)` modulo `p`, as `(G, G_1)`.
pub fn coboundary(base: &Window, alpha: &FilMap) -> (Mat, Mat) {
    let h = alpha
        .mat
        .mul(&base.psi)
        .sub(&base.psi.mul(&alpha.phi_tilde(&base.frame)));
    let varpi = base.frame.varpi();
    let zero = base.frame.zero();
    let g = Mat::from_fn(base.rank(), base.rank(), |i, j| {
        if base.l_mask[j] {
            varpi.mul_ref(h.get(i, j))
        } else {
            h.get(i, j).clone()
        }
        .truncate_prec(1)
    });
    let g1 = Mat::from_fn(base.rank(), base.rank(), |i, j| {
        if base.l_mask[j] {
            h.get(i, j).truncate_prec(1)
        } else {
            zero.clone()
        }
    });
    (g, g1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_rings::{Lift, PrecisionCtx};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(m: usize) -> PrecisionCtx {
        PrecisionCtx::new(3, 6, m, 1, Lift::Cyclotomic).unwrap()
    }

    fn frames(m: usize) -> Vec<Frame> {
        let c = ctx(m);
        vec![
            Frame::sigma(c),
            Frame::script(c),
            Frame::zp(c),
            Frame::sigma(c.with_lift(Lift::Standard)),
        ]
    }

    #[test]
    fn unit_windows_pass_the_axioms() {
        for f in frames(24) {
            Window::unit(&f).check().unwrap();
            Window::unit_dual(&f).check().unwrap();
        }
    }

    #[test]
    fn non_invertible_psi_is_rejected() {
        let f = Frame::sigma(ctx(24));
        let w = Window::new(f.clone(), vec![false], Mat::scalar(&Series::var(f.ctx(), f.prec()))).unwrap();
        assert!(matches!(w.check(), Err(Error::AxiomViolation(_))));
        let w = Window::new(f.clone(), vec![true], Mat::scalar(&f.int(3))).unwrap();
        assert!(w.check().is_err());
    }

    #[test]
    fn fv_is_varpi_and_dual_exchanges_f_and_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for f in frames(24) {
            let w = Window::random(&f, 3, 6, &mut rng);
            let (fm, vm) = w.fv_pair().unwrap();
            let varpi = Mat::identity(f.ctx(), 3, f.prec()).scale(&f.varpi());
            assert_eq!(fm.mul(&vm), varpi);
            assert_eq!(vm.mul(&fm), varpi);
            let d = w.dual().unwrap();
            assert_eq!(d.f_matrix(), vm.transpose());
            assert_eq!(d.v_matrix().unwrap(), fm.transpose());
            let dd = d.dual().unwrap();
            assert_eq!(dd.l_mask(), w.l_mask());
            assert_eq!(dd.psi(), w.psi());
        }
    }

    #[test]
    fn base_change_along_lambda_and_the_y_twist() {
        let c = ctx(24);
        let lam = FrameHom::lambda(c);
        let script = lam.target.clone();
        let a = Window::unit_dual(&lam.source).base_change(&lam).unwrap();
        a.check().unwrap();
        assert_eq!(a.psi().get(0, 0), script.data().c());
        let b = Window::unit_dual(&script);
        let y = script.data().y().clone();
        assert!(is_hom(&a, &b, &FilMap::scalar(&a, &y)));
        assert!(!is_hom(&a, &b, &FilMap::identity(&a)));
        let unit = Window::unit(&lam.source).base_change(&lam).unwrap();
        assert!(unit.psi().is_identity());
    }

    #[test]
    fn filmap_algebra() {
        let f = Frame::sigma(ctx(24));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mask = vec![true, false];
        let rnd = |rng: &mut ChaCha8Rng| Series::random_deg(f.ctx(), f.prec(), 5, rng);
        let x = Mat::from_fn(2, 2, |i, j| {
            if i == j {
                rnd(&mut rng).add_ref(&f.one()).mul_i64(1)
            } else {
                rnd(&mut rng)
            }
        });
        let x = x.map(|s| if s.is_unit() { s.clone() } else { s.add_ref(&f.one()) });
        let z = Mat::scalar(&rnd(&mut rng));
        let a = FilMap::new(&f, &x, &z, &mask, &mask);
        let inv = a.inverse().unwrap();
        let id = a.compose(&inv);
        assert!(id.mat.is_identity());
        assert!(id.z.is_zero());
        let sq = a.compose(&a);
        assert_eq!(sq.mat.get(1, 0), &f.e().mul_ref(sq.z.get(0, 0)));
        assert_eq!(sq.phi_tilde(&f), a.phi_tilde(&f).mul(&a.phi_tilde(&f)));
    }

    #[test]
    fn torsor_class_of_a_twisted_unit_window() {
        let c = PrecisionCtx::new(3, 2, 12, 1, Lift::Cyclotomic).unwrap();
        let f = Frame::sigma(c);
        let base = Window::unit(&f);
        let zero = Mat::scalar(&f.zero());
        let twisted = |h: Series| lift_window(&base, 1, &Mat::scalar(&h), &zero).unwrap();
        let by_u = twisted(Series::var(c, f.prec()));
        let by_one = twisted(f.one());
        assert!(has_unit_generator(&hom_solve(&base, &by_u, 2, 8).unwrap()));
        assert!(!has_unit_generator(&hom_solve(&base, &by_one, 2, 8).unwrap()));
        // the coboundary of alpha is the twist class that alpha trivialises
        let alpha = FilMap::scalar(&base, &Series::var(c, f.prec()));
        let (g, _) = coboundary(&base, &alpha);
        let tw = lift_window(&base, 1, &g, &zero).unwrap();
        let iso = FilMap::scalar(&base, &f.one().add_ref(&Series::var(c, f.prec()).mul_p_pow(1)));
        assert!(is_hom(&base, &tw, &iso));
    }

    #[test]
    fn lifting_datum_outside_d1_is_rejected() {
        let c = PrecisionCtx::new(3, 2, 12, 1, Lift::Cyclotomic).unwrap();
        let f = Frame::sigma(c);
        let base = Window::unit_dual(&f);
        let one = Mat::scalar(&f.one());
        assert!(matches!(lift_window(&base, 1, &one, &one), Err(Error::NotInD1(_))));
        assert!(lift_window(&base, 1, &Mat::scalar(&f.varpi()), &one).is_ok());
    }

    #[test]
    fn hom_solve_matches_brute_force_mod_p() {
        let c = PrecisionCtx::new(3, 1, 4, 1, Lift::Cyclotomic).unwrap();
        let f = Frame::sigma(c);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w1 = Window::random(&f, 1, 3, &mut rng);
        let w2 = Window::random(&f, 1, 3, &mut rng).dual().unwrap();
        for (a, b) in [(&w1, &w1), (&w1, &w2), (&w2, &w1)] {
            let gens = hom_solve(a, b, 1, 4).unwrap();
            let mut brute = std::collections::BTreeSet::new();
            for code in 0..81u32 {
                let coeffs: Vec<i64> = (0..4).map(|i| ((code / 3u32.pow(i)) % 3) as i64).collect();
                let s = Series::from_ints(c, &coeffs, 1);
                let x = if a.l_mask()[0] && !b.l_mask()[0] {
                    FilMap::new(&f, &Mat::scalar(&f.zero()), &Mat::scalar(&s), a.l_mask(), b.l_mask())
                } else {
                    FilMap::plain(&f, &Mat::scalar(&s), a.l_mask(), b.l_mask())
                };
                let d = hom_defect(a, b, &x, &|s| s.clone(), &f.one());
                if d.eq_at(&Mat::scalar(&f.zero()), 1, 4) {
                    brute.insert(coeffs);
                }
            }
            let mut span = std::collections::BTreeSet::new();
            let vecs: Vec<Vec<i64>> = gens
                .iter()
                .map(|g| {
                    let s = if a.l_mask()[0] && !b.l_mask()[0] {
                        g.z.get(0, 0)
                    } else {
                        g.mat.get(0, 0)
                    };
                    (0..4).map(|i| i64::try_from(s.coeff(i).0 % 3u32).unwrap()).collect()
                })
                .collect();
            for code in 0..3u32.pow(vecs.len() as u32) {
                let mut v = vec![0i64; 4];
                for (k, g) in vecs.iter().enumerate() {
                    let m = ((code / 3u32.pow(k as u32)) % 3) as i64;
                    for i in 0..4 {
                        v[i] = (v[i] + m * g[i]) % 3;
                    }
                }
                span.insert(v);
            }
            assert_eq!(span, brute);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn random_windows_are_windows(seed in any::<u64>(), rank in 1usize..4, which in 0usize..4) {
            let f = frames(16).swap_remove(which);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = Window::random(&f, rank, 5, &mut rng);
            prop_assert!(w.check_with(&mut rng).is_ok());
            let d = w.dual().unwrap();
            prop_assert!(d.check_with(&mut rng).is_ok());
            let dd = d.dual().unwrap();
            prop_assert_eq!(dd.psi(), w.psi());
            let s = w.direct_sum(&d).unwrap();
            prop_assert!(s.check_with(&mut rng).is_ok());
        }
    }
}
