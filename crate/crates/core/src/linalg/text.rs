//! Plain-text serialization of factor sets and dense tensors.
//!
//! Factor set:
//!
//! ```text
//! dims=3,2 rank=2
//! 0.1,0.2
//! 0.3,0.4
//! 0.5,0.6
//!
//! 1,2
//! 3,4
//! ```
//!
//! One block per factor (`C_d` rows of `K` comma-separated values), blocks
//! separated by a blank line. Dense tensors use the header `dims=<c1,...>`
//! followed by one line per fiber of the last mode, row-major. Values are
//! written with Rust's shortest round-trip formatting, so reading back
//! reproduces them exactly.

use std::fmt::Write as _;

use super::{DenseMatrix, DenseTensor, FactorSet};
use crate::error::{Error, Result};

pub fn write_factor_set(f: &FactorSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dims={} rank={}", join(&f.dims()), f.rank());
    for (d, m) in f.factors().iter().enumerate() {
        if d > 0 {
            out.push('\n');
        }
        for r in 0..m.rows() {
            write_row(&mut out, m.row(r));
        }
    }
    out
}

pub fn read_factor_set(text: &str) -> Result<FactorSet> {
    let mut lines = text.lines().enumerate();
    let (line_no, header) = next_content_line(&mut lines)
        .ok_or_else(|| parse_err(1, "missing header"))?;
    let (dims, rank) = parse_header(header, line_no)?;
    let rank = rank.ok_or_else(|| parse_err(line_no, "missing rank="))?;

    let mut factors = Vec::with_capacity(dims.len());
    for &c in &dims {
        let mut data = Vec::with_capacity(c * rank);
        for _ in 0..c {
            let (no, line) = next_content_line(&mut lines)
                .ok_or_else(|| parse_err(line_no, "truncated factor block"))?;
            let row = parse_row(line, no)?;
            if row.len() != rank {
                return Err(parse_err(no, &format!("expected {rank} values, got {}", row.len())));
            }
            data.extend(row);
        }
        factors.push(DenseMatrix::from_vec(c, rank, data)?);
    }
    if let Some((no, _)) = next_content_line(&mut lines) {
        return Err(parse_err(no, "trailing data after last factor"));
    }
    FactorSet::new(factors)
}

pub fn write_tensor(t: &DenseTensor) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dims={}", join(t.dims()));
    let fiber = *t.dims().last().expect("tensor has at least one mode");
    for chunk in t.as_slice().chunks(fiber) {
        write_row(&mut out, chunk);
    }
    out
}

pub fn read_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = text.lines().enumerate();
    let (line_no, header) = next_content_line(&mut lines)
        .ok_or_else(|| parse_err(1, "missing header"))?;
    let (dims, rank) = parse_header(header, line_no)?;
    if rank.is_some() {
        return Err(parse_err(line_no, "tensor header must not carry rank="));
    }
    let mut data = Vec::with_capacity(dims.iter().product());
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        data.extend(parse_row(line, no + 1)?);
    }
    DenseTensor::from_vec(&dims, data)
}

/// Advances to the next non-blank line, returning its 1-based number.
pub(crate) fn next_content_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Option<(usize, &'a str)> {
    lines
        .find(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

fn parse_header(line: &str, no: usize) -> Result<(Vec<usize>, Option<usize>)> {
    let mut dims = None;
    let mut rank = None;
    for field in line.split_whitespace() {
        if let Some(v) = field.strip_prefix("dims=") {
            let parsed = v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(no, &format!("bad dims: {e}")))?;
            dims = Some(parsed);
        } else if let Some(v) = field.strip_prefix("rank=") {
            rank = Some(
                v.parse::<usize>()
                    .map_err(|e| parse_err(no, &format!("bad rank: {e}")))?,
            );
        } else {
            return Err(parse_err(no, &format!("unknown header field `{field}`")));
        }
    }
    let dims = dims.ok_or_else(|| parse_err(no, "missing dims="))?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(parse_err(no, "dims must be positive"));
    }
    Ok((dims, rank))
}

fn parse_row(line: &str, no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| parse_err(no, &format!("bad number `{}`: {e}", s.trim())))
        })
        .collect()
}

fn write_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

fn join(dims: &[usize]) -> String {
    dims.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factor_set_layout() {
        let f = FactorSet::new(vec![
            DenseMatrix::from_rows(&[vec![0.5, 1.0], vec![-2.0, 3.25]]).unwrap(),
            DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap(),
        ])
        .unwrap();
        let text = write_factor_set(&f);
        assert_eq!(text, "dims=2,1 rank=2\n0.5,1.0\n-2.0,3.25\n\n1.0,2.0\n");
        assert_eq!(read_factor_set(&text).unwrap(), f);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_factor_set("").is_err());
        assert!(read_factor_set("dims=2 rank=1\n1\n").is_err());
        assert!(read_factor_set("dims=1 rank=2\n1\n").is_err());
        assert!(read_factor_set("dims=1 rank=1\n1\n2\n").is_err());
        assert!(read_factor_set("dims=1 rank=1 foo=2\n1\n").is_err());
        assert!(read_tensor("dims=2\n1,x\n").is_err());
        assert!(read_tensor("dims=2 rank=1\n1,2\n").is_err());
        assert!(read_tensor("dims=3\n1,2\n").is_err());
    }

    proptest! {
        #[test]
        fn factor_roundtrip(
            dims in prop::collection::vec(1usize..4, 1..4),
            rank in 1usize..3,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let factors = dims
                .iter()
                .map(|&c| DenseMatrix::from_fn(c, rank, |_, _| rng.random_range(-1e6..1e6) * rng.random::<f64>().powi(9)))
                .collect();
            let f = FactorSet::new(factors).unwrap();
            prop_assert_eq!(read_factor_set(&write_factor_set(&f)).unwrap(), f);
        }

        #[test]
        fn tensor_roundtrip(dims in prop::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = DenseTensor::from_fn(&dims, |_| rng.random::<f64>() * 1e-300 + rng.random_range(-5.0..5.0));
            prop_assert_eq!(read_tensor(&write_tensor(&t)).unwrap(), t);
        }
    }
}
