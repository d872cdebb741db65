//! BT modules `(M, phi)` of E-height at most one over Sigma frames, with the
//! equivalence to windows.

use rand::Rng;

use crate::error::{Error, Result};
use crate::frames::{Frame, FrameHom, HomKind, RingTag};
use crate::matrix::Mat;
use crate::padic_rings::Series;
use crate::windows::Window;

/// `phi(e_j) = sum_i A_ij e_i`, with `B` the witness `A B = B A = E`.
#[derive(Clone, Debug)]
pub struct BtModule {
    frame: Frame,
    a: Mat,
    b: Mat,
}

impl BtModule {
    pub fn new(frame: Frame, a: Mat, b: Mat) -> Result<BtModule> {
        if frame.tag() != RingTag::Sigma {
            return Err(Error::BadHom("BT modules live over Sigma frames".into()));
        }
        if !a.is_square() || a.rows() != b.rows() || !b.is_square() {
            return Err(Error::AxiomViolation("A and B must be square of equal size".into()));
        }
        Ok(BtModule { frame, a, b })
    }

    /// `(S, phi)`.
    pub fn unit(frame: &Frame) -> BtModule {
        BtModule {
            frame: frame.clone(),
            a: Mat::scalar(&frame.one()),
            b: Mat::scalar(&frame.e()),
        }
    }

    /// `(S, E phi)`.
    pub fn unit_dual(frame: &Frame) -> BtModule {
        BtModule {
            frame: frame.clone(),
            a: Mat::scalar(&frame.e()),
            b: Mat::scalar(&frame.one()),
        }
    }

    /// `A = U diag(E, .., E, 1, .., 1) V` with random invertible `U`, `V`.
    pub fn random<R: Rng + ?Sized>(frame: &Frame, rank: usize, deg: usize, rng: &mut R) -> BtModule {
        let ctx = frame.ctx();
        let prec = frame.prec();
        let height = rng.gen_range(0..=rank);
        let rnd_inv = |rng: &mut R| loop {
            let m = Mat::from_fn(rank, rank, |_, _| Series::random_deg(ctx, prec, deg, rng));
            if let Ok(inv) = m.inverse() {
                return (m, inv);
            }
        };
        let (u, u_inv) = rnd_inv(rng);
        let (v, v_inv) = rnd_inv(rng);
        let e = frame.e();
        let one = frame.one();
        let da: Vec<Series> = (0..rank)
            .map(|i| if i < height { e.clone() } else { one.clone() })
            .collect();
        let db: Vec<Series> = (0..rank)
            .map(|i| if i < height { one.clone() } else { e.clone() })
            .collect();
        BtModule {
            frame: frame.clone(),
            a: u.scale_cols(&da).mul(&v),
            b: v_inv.scale_cols(&db).mul(&u_inv),
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    /// `A B = B A = E`, and for rank at most 3 the adjugate identity `det(A) B = E adj(A)`.
    pub fn check(&self) -> Result<()> {
        let e_id = Mat::identity(self.frame.ctx(), self.rank(), self.frame.prec()).scale(&self.frame.e());
        if self.a.mul(&self.b) != e_id || self.b.mul(&self.a) != e_id {
            return Err(Error::AxiomViolation("A B = B A = E fails".into()));
        }
        if self.rank() <= 3 && self.b.scale(&self.a.det()) != self.a.adjugate().scale(&self.frame.e()) {
            return Err(Error::AxiomViolation("B disagrees with the adjugate of A".into()));
        }
        Ok(())
    }

    /// `phi^t(f)(phi(m)) = E phi(f(m))`: `A^t = B^T`, `B^t = A^T`.
    pub fn dual(&self) -> BtModule {
        BtModule {
            frame: self.frame.clone(),
            a: self.b.transpose(),
            b: self.a.transpose(),
        }
    }

    /// Base change along a level change or a relabelling `lambda_(r,s)`.
    pub fn base_change(&self, h: &FrameHom) -> Result<BtModule> {
        if !matches!(h.kind, HomKind::Level | HomKind::LambdaRs(_) | HomKind::Identity) {
            return Err(Error::BadHom(
                "BT base change is implemented along level and lambda_(r,s) maps".into(),
            ));
        }
        if h.source != self.frame {
            return Err(Error::BadHom("module is not over the source frame".into()));
        }
        Ok(BtModule {
            frame: h.target.clone(),
            a: h.apply_mat(&self.a),
            b: h.apply_mat(&self.b),
        })
    }

    /// `Y A_src = A_tgt phi(Y)`.
    pub fn is_hom(&self, tgt: &BtModule, y: &Mat) -> bool {
        y.mul(&self.a) == tgt.a.mul(&y.frobenius())
    }

    pub fn direct_sum(&self, o: &BtModule) -> BtModule {
        let blk = |x: &Mat, y: &Mat| {
            let (a, b) = (x.rows(), y.rows());
            Mat::from_fn(a + b, a + b, |i, j| match (i < a, j < a) {
                (true, true) => x.get(i, j).clone(),
                (false, false) => y.get(i - a, j - a).clone(),
                _ => self.frame.zero(),
            })
        };
        BtModule {
            frame: self.frame.clone(),
            a: blk(&self.a, &o.a),
            b: blk(&self.b, &o.b),
        }
    }
}

/// `(Fil M, E Phi_1)` in the basis `l_i`, `E n_j` of `Fil M`:
/// `A = diag(E on L, 1 on N) Psi`, `B = Psi^{-1} diag(1 on L, E on N)`.
pub fn win_to_bt(w: &Window) -> Result<BtModule> {
    let f = w.frame();
    if f.tag() != RingTag::Sigma {
        return Err(Error::BadHom("the window is not over a Sigma frame".into()));
    }
    let (e, one) = (f.e(), f.one());
    let a = w.psi().scale_rows(&w.split_diag(&e, &one));
    let b = w.psi().inverse()?.scale_cols(&w.split_diag(&one, &e));
    BtModule::new(f.clone(), a, b)
}

/// Result of [`bt_to_win`] with the comparison maps.
pub struct BtWindow {
    pub window: Window,
    /// The permutation-and-elimination matrices with `P B Q = diag(1, .., 1, B')`.
    pub p: Mat,
    pub q: Mat,
    /// Number of unit pivots, the rank of `L`.
    pub d_l: usize,
}

/// `M = phi^* M`, `Fil M = psi(M)`, `Phi_1(psi x) = 1 (x) x`, `Phi(1 (x) x) = 1 (x) phi(x)`,
/// written in a normal decomposition found by unit-pivot elimination of `B`.
pub fn bt_to_win(m: &BtModule) -> Result<BtWindow> {
    let n = m.rank();
    let ctx = m.frame.ctx();
    let prec = m.frame.prec();
    let mut b = m.b.clone();
    let mut p = Mat::identity(ctx, n, prec);
    let mut q = Mat::identity(ctx, n, prec);
    let mut d = 0;
    while d < n {
        let pivot = (d..n)
            .flat_map(|i| (d..n).map(move |j| (i, j)))
            .find(|&(i, j)| b.get(i, j).is_unit());
        let Some((pi, pj)) = pivot else { break };
        b.swap_rows(d, pi);
        p.swap_rows(d, pi);
        b.swap_cols(d, pj);
        q.swap_cols(d, pj);
        let inv = b.get(d, d).invert()?;
        // row operations, recorded in P
        for i in 0..n {
            if i == d {
                continue;
            }
            let f = b.get(i, d).mul_ref(&inv);
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let v = b.get(i, j).sub_ref(&f.mul_ref(b.get(d, j)));
                b.set(i, j, v);
                let w = p.get(i, j).sub_ref(&f.mul_ref(p.get(d, j)));
                p.set(i, j, w);
            }
        }
        // column operations, recorded in Q
        for j in 0..n {
            if j == d {
                continue;
            }
            let f = inv.mul_ref(b.get(d, j));
            if f.is_zero() {
                continue;
            }
            for i in 0..n {
                let v = b.get(i, j).sub_ref(&b.get(i, d).mul_ref(&f));
                b.set(i, j, v);
                let w = q.get(i, j).sub_ref(&q.get(i, d).mul_ref(&f));
                q.set(i, j, w);
            }
        }
        for i in 0..n {
            let w = q.get(i, d).mul_ref(&inv);
            q.set(i, d, w);
        }
        b.set(d, d, m.frame.one());
        d += 1;
    }
    let p_inv = p.inverse()?;
    let phi_a = m.a.frobenius();
    let phi_q = q.frobenius();
    let phi_pinv = p_inv.frobenius();
    let tail = phi_a.mul(&phi_pinv);
    let cols = Mat::from_fn(n, n, |i, j| {
        if j < d {
            phi_q.get(i, j).clone()
        } else {
            tail.get(i, j).clone()
        }
    });
    let psi = p.mul(&cols);
    let l_mask = (0..n).map(|i| i < d).collect();
    Ok(BtWindow {
        window: Window::new(m.frame.clone(), l_mask, psi)?,
        p,
        q,
        d_l: d,
    })
}

impl BtWindow {
    /// The isomorphism `T = Psi P^{-1}` from `bt_to_win(win_to_bt(W))` to `W`,
    /// given the original window `W`.
    pub fn window_iso(&self, original: &Window) -> Result<Mat> {
        Ok(original.psi().mul(&self.p.inverse()?))
    }

    /// The isomorphism `Y = Q diag(1, (Q^{-1} A P^{-1})_{22})` from
    /// `win_to_bt(bt_to_win(M))` to `M`.
    pub fn bt_iso(&self, original: &BtModule) -> Result<Mat> {
        let n = original.rank();
        let a2 = self.q.inverse()?.mul(&original.a).mul(&self.p.inverse()?);
        let d = self.d_l;
        let one = original.frame.one();
        let zero = original.frame.zero();
        let blk = Mat::from_fn(n, n, |i, j| match (i < d, j < d) {
            (true, true) => {
                if i == j {
                    one.clone()
                } else {
                    zero.clone()
                }
            }
            (false, false) => a2.get(i, j).clone(),
            _ => zero.clone(),
        });
        Ok(self.q.mul(&blk))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_rings::{Lift, PrecisionCtx};
    use crate::windows::is_iso_fv;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sigma(m: usize, r: u32) -> Frame {
        Frame::sigma(PrecisionCtx::new(3, 6, m, r, Lift::Cyclotomic).unwrap())
    }

    #[test]
    fn basic_modules_pass() {
        let f = sigma(24, 1);
        BtModule::unit(&f).check().unwrap();
        BtModule::unit_dual(&f).check().unwrap();
        let (e, one, zero) = (f.e(), f.one(), f.zero());
        let a = Mat::from_rows(vec![vec![zero.clone(), e], vec![one, zero]]);
        let m = BtModule::new(f.clone(), a.clone(), a).unwrap();
        m.check().unwrap();
        let bad = BtModule::new(f.clone(), Mat::scalar(&f.one()), Mat::scalar(&f.one())).unwrap();
        assert!(bad.check().is_err());
    }

    #[test]
    fn unit_windows_match_the_basic_modules() {
        let f = sigma(24, 1);
        let a = win_to_bt(&Window::unit(&f)).unwrap();
        assert!(a.a().is_identity());
        assert_eq!(a.b().get(0, 0), &f.e());
        let b = win_to_bt(&Window::unit_dual(&f)).unwrap();
        assert_eq!(b.a().get(0, 0), &f.e());
        let back = bt_to_win(&BtModule::unit(&f)).unwrap().window;
        assert_eq!(back.d_l(), 0);
        assert!(back.psi().is_identity());
        let back = bt_to_win(&BtModule::unit_dual(&f)).unwrap().window;
        assert_eq!(back.d_l(), 1);
        assert!(back.psi().is_identity());
        let d = BtModule::unit(&f).dual();
        assert_eq!(d.a(), BtModule::unit_dual(&f).a());
    }

    #[test]
    fn supersingular_round_trip() {
        let f = sigma(24, 1);
        let (e, one, zero) = (f.e(), f.one(), f.zero());
        let a = Mat::from_rows(vec![vec![zero.clone(), e], vec![one, zero]]);
        let m = BtModule::new(f.clone(), a.clone(), a).unwrap();
        let bw = bt_to_win(&m).unwrap();
        bw.window.check().unwrap();
        let (fm, vm) = bw.window.fv_pair().unwrap();
        let varpi = Mat::identity(f.ctx(), 2, f.prec()).scale(&f.varpi());
        assert_eq!(fm.mul(&vm), varpi);
        assert_eq!(vm.mul(&fm), varpi);
        let back = win_to_bt(&bw.window).unwrap();
        let y = bw.bt_iso(&m).unwrap();
        assert!(back.is_hom(&m, &y));
        assert!(y.inverse().is_ok());
    }

    #[test]
    fn base_change_along_level_and_relabelling() {
        let f = sigma(24, 2);
        let lvl = FrameHom::level(&sigma(24, 1)).unwrap();
        let m = BtModule::unit(&lvl.source).base_change(&lvl).unwrap();
        assert!(m.a().is_identity());
        let gm = BtModule::unit_dual(&lvl.source).base_change(&lvl).unwrap();
        assert_eq!(gm.a().get(0, 0), &lvl.target.e());
        gm.check().unwrap();
        let rel = FrameHom::lambda_rs(&f, 0).unwrap();
        let gm0 = BtModule::unit_dual(&f).base_change(&rel).unwrap();
        assert_eq!(gm0.a().get(0, 0).canonical().unwrap(), f.e().canonical().unwrap());
        assert_eq!(gm0.frame().var_level(), 0);
        assert!(BtModule::unit(&f).base_change(&FrameHom::lambda(f.ctx())).is_err());
    }

    #[test]
    fn extensions_stay_block_triangular() {
        let f = sigma(16, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w1 = Window::random(&f, 1, 4, &mut rng);
        let w2 = Window::random(&f, 2, 4, &mut rng);
        let g = Mat::from_fn(1, 2, |_, _| Series::random_deg(f.ctx(), f.prec(), 4, &mut rng));
        let psi = Mat::from_fn(3, 3, |i, j| match (i < 1, j < 1) {
            (true, true) => w1.psi().get(i, j).clone(),
            (false, false) => w2.psi().get(i - 1, j - 1).clone(),
            (true, false) => g.get(i, j - 1).clone(),
            _ => f.zero(),
        });
        let mut mask = w1.l_mask().to_vec();
        mask.extend_from_slice(w2.l_mask());
        let w = Window::new(f.clone(), mask, psi).unwrap();
        w.check().unwrap();
        let m = win_to_bt(&w).unwrap();
        let (m1, m2) = (win_to_bt(&w1).unwrap(), win_to_bt(&w2).unwrap());
        assert_eq!(&m.a().select(&[0], &[0]), m1.a());
        assert_eq!(&m.a().select(&[1, 2], &[1, 2]), m2.a());
        assert!(m.a().select(&[1, 2], &[0]).is_zero());
        assert!(m.b().select(&[1, 2], &[0]).is_zero());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn random_modules_round_trip(seed in any::<u64>(), rank in 1usize..4) {
            let f = sigma(16, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = BtModule::random(&f, rank, 4, &mut rng);
            prop_assert!(m.check().is_ok());
            prop_assert!(m.dual().check().is_ok());
            let bw = bt_to_win(&m).unwrap();
            prop_assert!(bw.window.check().is_ok());
            let back = win_to_bt(&bw.window).unwrap();
            let y = bw.bt_iso(&m).unwrap();
            prop_assert!(back.is_hom(&m, &y));
            prop_assert!(y.inverse().is_ok());
            let dd = m.dual().dual();
            prop_assert_eq!(dd.a(), m.a());
        }

        #[test]
        fn random_windows_round_trip(seed in any::<u64>(), rank in 1usize..4) {
            let f = sigma(16, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = Window::random(&f, rank, 4, &mut rng);
            let m = win_to_bt(&w).unwrap();
            prop_assert!(m.check().is_ok());
            let bw = bt_to_win(&m).unwrap();
            let t = bw.window_iso(&w).unwrap();
            prop_assert!(is_iso_fv(&bw.window, &w, &t).unwrap());
            // duality on both sides agrees literally
            let md = win_to_bt(&w.dual().unwrap()).unwrap();
            let dm = m.dual();
            prop_assert_eq!(md.a(), dm.a());
            prop_assert_eq!(md.b(), dm.b());
            prop_assert!(md.check().is_ok());
        }
    }
}
