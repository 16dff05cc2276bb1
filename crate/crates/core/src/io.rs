//! CSV serialization of ND matrices and Sobolev operators.
//!
//! Comment lines starting with `#` carry metadata, followed by one
//! comma-separated row per matrix row. Floats use the shortest round-trip
//! representation, so reading back is exact.

use crate::error::{Error, Result};
use crate::nd::NdMatrix;
use crate::scalar::Real;
use crate::sobolev::{Signature, SobolevOperator};
use nalgebra::DMatrix;
use std::fmt::Write as _;

fn matrix_rows<T: Real>(m: &DMatrix<T>, out: &mut String) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)].as_f64())).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
}

pub fn nd_to_csv<T: Real>(a: &NdMatrix<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ndmatrix N={} sigma={}", a.max_frequency(), a.sigma_hash());
    matrix_rows(a.matrix(), &mut s);
    s
}

pub fn operator_to_csv<T: Real>(op: &SobolevOperator<T>, label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# sobolev_operator name={} dim={} signature={} symmetric={}",
        label,
        op.dim(),
        op.signature().label(),
        op.is_symmetric()
    );
    matrix_rows(op.matrix(), &mut s);
    s
}

type Parsed<T> = (Vec<(String, String)>, DMatrix<T>);

/// Parses the header fields and matrix of a CSV produced above.
fn parse_csv<T: Real>(text: &str) -> Result<Parsed<T>> {
    let mut meta = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix('#') {
            for field in h.split_whitespace() {
                if let Some((k, v)) = field.split_once('=') {
                    meta.push((k.to_string(), v.to_string()));
                }
            }
        } else if !line.trim().is_empty() {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix CSV is not square".into()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| T::lit(rows[i][j]));
    Ok((meta, m))
}

pub fn nd_from_csv<T: Real>(text: &str) -> Result<NdMatrix<T>> {
    let (meta, m) = parse_csv::<T>(text)?;
    let hash = meta
        .iter()
        .find(|(k, _)| k == "sigma")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::Parse("missing sigma hash".into()))?;
    let a = NdMatrix::new(m, hash)?;
    let n_meta = meta.iter().find(|(k, _)| k == "N").map(|(_, v)| v.as_str());
    if n_meta != Some(&a.max_frequency().to_string()) {
        return Err(Error::Parse("header N does not match matrix size".into()));
    }
    Ok(a)
}

/// Reads an operator matrix; only the fixed or epsilon signatures written by
/// `operator_to_csv` are recognized.
pub fn operator_from_csv<T: Real>(text: &str) -> Result<SobolevOperator<T>> {
    let (meta, m) = parse_csv::<T>(text)?;
    let get = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let signature = match get("signature") {
        Some("eps->-eps") => Signature::EpsilonShift,
        Some(sig) => {
            let (a, b) = sig
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("bad signature {sig:?}")))?;
            let parse = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad index {v:?}")));
            Signature::fixed(T::lit(parse(a)?), T::lit(parse(b)?))
        }
        None => return Err(Error::Parse("missing signature".into())),
    };
    match get("symmetric") {
        Some("true") => SobolevOperator::symmetric(m, signature),
        _ => SobolevOperator::new(m, signature),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nd::analytic_nd_constant_order;

    #[test]
    fn nd_round_trip() {
        let a = analytic_nd_constant_order(3.0, 3).unwrap();
        let text = nd_to_csv(&a);
        assert!(text.starts_with("# ndmatrix N=3 sigma=const:3\n"));
        let b: NdMatrix<f64> = nd_from_csv(&text).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn operator_round_trip() {
        let m = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64) / 3.0);
        for sig in [Signature::fixed(-0.5, 0.5), Signature::EpsilonShift, Signature::l2()] {
            let op = SobolevOperator::symmetric(m.clone(), sig).unwrap();
            let back: SobolevOperator<f64> = operator_from_csv(&operator_to_csv(&op, "x")).unwrap();
            assert_eq!(back, op);
        }
    }

    #[test]
    fn rejects_ragged() {
        assert!(nd_from_csv::<f64>("# ndmatrix N=1 sigma=a\n1,0\n0\n").is_err());
        assert!(nd_from_csv::<f64>("# ndmatrix N=2 sigma=a\n1,0\n0,1\n").is_err());
    }
}
