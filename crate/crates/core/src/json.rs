//! JSON encodings. Maps serialize with sorted keys, so output is byte-stable.

use num_bigint::{BigInt, BigUint};
use serde_json::{json, Value};

use crate::bt_modules::BtModule;
use crate::error::{Error, Result};
use crate::examples_zoo::ZooObject;
use crate::frames::{Frame, FrameDesc, FrameHom, RingTag};
use crate::gamma_calculus::GammaAction;
use crate::matrix::Mat;
use crate::padic_rings::{Lift, PrecisionCtx, Series};
use crate::wach_rank1::{Alpha, MonomialLattice};
use crate::windows::{FilMap, Window};

pub fn ctx(c: &PrecisionCtx) -> Value {
    json!({"p": c.p, "N": c.n, "M": c.m, "r": c.r, "lift": c.lift.as_str()})
}

pub fn ctx_from(v: &Value) -> Result<PrecisionCtx> {
    let num = |k: &str| {
        v.get(k)
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse(format!("ctx: missing {k}")))
    };
    let lift = v
        .get("lift")
        .and_then(Value::as_str)
        .map(Lift::parse)
        .transpose()?
        .unwrap_or(Lift::Cyclotomic);
    PrecisionCtx::new(
        num("p")? as u32,
        num("N")? as u32,
        num("M")? as usize,
        num("r")? as u32,
        lift,
    )
}

/// `{"scale", "coeffs"}` with canonical residues modulo `p^(N + scale)`, trailing zeros dropped.
pub fn series(s: &Series) -> Value {
    match s.canonical() {
        Ok((scale, mut coeffs)) => {
            while coeffs.last().is_some_and(|c| *c == BigUint::ZERO) {
                coeffs.pop();
            }
            json!({"scale": scale, "coeffs": coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>()})
        }
        Err(e) => json!({"error": e.to_string()}),
    }
}

pub fn series_from(c: PrecisionCtx, v: &Value) -> Result<Series> {
    let scale = v.get("scale").and_then(Value::as_u64).unwrap_or(0) as u32;
    let coeffs = v
        .get("coeffs")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("series: missing coeffs".into()))?;
    let coeffs: Vec<BigInt> = coeffs
        .iter()
        .map(|x| match x {
            Value::String(s) => s
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("bad coefficient {s:?}"))),
            Value::Number(n) => n
                .as_i64()
                .map(BigInt::from)
                .ok_or_else(|| Error::Parse(format!("bad coefficient {n}"))),
            other => Err(Error::Parse(format!("bad coefficient {other}"))),
        })
        .collect::<Result<_>>()?;
    if coeffs.len() > c.m {
        return Err(Error::Parse(format!(
            "{} coefficients exceed M = {}",
            coeffs.len(),
            c.m
        )));
    }
    Ok(Series::from_bigints(c, &coeffs, scale, c.n as i32))
}

pub fn mat(m: &Mat) -> Value {
    Value::Array(
        m.to_rows()
            .iter()
            .map(|r| Value::Array(r.iter().map(series).collect()))
            .collect(),
    )
}

pub fn mat_from(c: PrecisionCtx, v: &Value) -> Result<Mat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix: expected rows".into()))?;
    let rows: Vec<Vec<Series>> = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse("matrix: expected a row".into()))?
                .iter()
                .map(|x| series_from(c, x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) || rows[0].is_empty() {
        return Err(Error::Parse("matrix: ragged or empty".into()));
    }
    Ok(Mat::from_rows(rows))
}

pub fn frame(f: &Frame) -> Value {
    let d = f.desc();
    let mut v = json!({"ring": d.ring.as_str(), "r": d.r, "lift": d.lift.as_str()});
    if d.var_level != d.r {
        v["var_level"] = json!(d.var_level);
    }
    v
}

pub fn frame_from(c: PrecisionCtx, v: &Value) -> Result<Frame> {
    let ring = match v.get("ring").and_then(Value::as_str) {
        Some("sigma") => RingTag::Sigma,
        Some("script") => RingTag::Script,
        Some("zp") => RingTag::Zp,
        other => return Err(Error::Parse(format!("unknown ring {other:?}"))),
    };
    let r = v.get("r").and_then(Value::as_u64).map_or(c.r, |x| x as u32);
    let lift = v
        .get("lift")
        .and_then(Value::as_str)
        .map(Lift::parse)
        .transpose()?
        .unwrap_or(c.lift);
    let var_level = v.get("var_level").and_then(Value::as_u64).map_or(r, |x| x as u32);
    Frame::from_desc(
        c,
        &FrameDesc {
            ring,
            r,
            lift,
            var_level,
        },
    )
}

/// `{"frame", "n", "dL", "L", "Psi"}`; `L` lists the indices spanning the `L` summand.
pub fn window(w: &Window) -> Value {
    json!({
        "frame": frame(w.frame()),
        "n": w.rank(),
        "dL": w.d_l(),
        "L": w.l_idx(),
        "Psi": mat(w.psi()),
    })
}

pub fn window_from(c: PrecisionCtx, v: &Value) -> Result<Window> {
    let f = frame_from(
        c,
        v.get("frame")
            .ok_or_else(|| Error::Parse("window: missing frame".into()))?,
    )?;
    let psi = mat_from(
        f.ctx(),
        v.get("Psi").ok_or_else(|| Error::Parse("window: missing Psi".into()))?,
    )?;
    let n = psi.rows();
    let l: Vec<usize> = match v.get("L").and_then(Value::as_array) {
        Some(a) => a
            .iter()
            .map(|x| x.as_u64().map(|i| i as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse("window: bad L".into()))?,
        None => (0..v.get("dL").and_then(Value::as_u64).unwrap_or(0) as usize).collect(),
    };
    if l.iter().any(|&i| i >= n) {
        return Err(Error::Parse("window: L index out of range".into()));
    }
    let mask = (0..n).map(|i| l.contains(&i)).collect();
    Window::new(f, mask, psi)
}

pub fn bt(m: &BtModule) -> Value {
    json!({"A": mat(m.a()), "B": mat(m.b())})
}

pub fn bt_from(f: &Frame, v: &Value) -> Result<BtModule> {
    let a = mat_from(f.ctx(), v.get("A").ok_or_else(|| Error::Parse("bt: missing A".into()))?)?;
    let b = mat_from(f.ctx(), v.get("B").ok_or_else(|| Error::Parse("bt: missing B".into()))?)?;
    BtModule::new(f.clone(), a, b)
}

/// A window homomorphism: its matrix and the `c` of the frame map it lies over.
pub fn hom(x: &FilMap, h: &FrameHom) -> Value {
    json!({"matrix": mat(&x.mat), "c": series(&h.c)})
}

pub fn action(a: &GammaAction) -> Value {
    let gens: Vec<Value> = a
        .generators
        .iter()
        .map(|g| json!({"chi": g.chi.to_string(), "matrix": mat(&g.map.mat)}))
        .collect();
    json!({"generators": gens})
}

pub fn zoo(o: &ZooObject, chis: &[crate::padic_rings::Chi]) -> Result<Value> {
    Ok(json!({
        "name": o.name,
        "ctx": ctx(&o.ctx()),
        "window": window(&o.sigma),
        "script_window": window(&o.script),
        "bt": bt(&o.bt),
        "actions": {
            "window": action(&o.sigma_actions(chis)?),
            "script_window": action(&o.script_actions(chis)?),
            "bt": action(&o.bt_actions(chis)?),
        },
    }))
}

pub fn alpha(a: &Alpha) -> Value {
    json!({"unit": a.unit.to_string(), "exponents": a.monomial, "display": a.to_string()})
}

pub fn lattice(l: &MonomialLattice) -> Value {
    json!({
        "exponents": l.exponents,
        "inverted": l.inverted.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "alpha": alpha(&l.base),
        "display": l.to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_and_canonical_residues() {
        let c = PrecisionCtx::new(3, 2, 4, 1, Lift::Cyclotomic).unwrap();
        let s = Series::from_ints(c, &[-1, 3, 0, 0], 2);
        let v = series(&s);
        assert_eq!(v, json!({"scale": 0, "coeffs": ["8", "3"]}));
        assert_eq!(series_from(c, &v).unwrap(), s);
        let w = Series::from_ints(c, &[1], 3).div_p_pow(1);
        let v = series(&w);
        assert_eq!(v["scale"], json!(1));
        assert_eq!(series_from(c, &v).unwrap(), w);
    }

    #[test]
    fn window_round_trip() {
        use rand::SeedableRng;
        let c = PrecisionCtx::new(3, 4, 8, 1, Lift::Cyclotomic).unwrap();
        let f = Frame::sigma(c);
        let w = Window::random(&f, 3, 4, &mut rand_chacha::ChaCha8Rng::seed_from_u64(3));
        let back = window_from(c, &window(&w)).unwrap();
        assert_eq!(back.l_mask(), w.l_mask());
        assert_eq!(back.psi(), w.psi());
        assert!(frame_from(c, &json!({"ring": "witt"})).is_err());
    }
}
