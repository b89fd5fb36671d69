//! Matrix CSV codec: one complex entry per cell, written as `re+imi` / `re-imi`.
//!
//! Floats use Rust's shortest round-trip formatting, so `parse(format(x)) == x` bit for bit.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn parse_complex(cell: &str) -> Result<Complex64> {
    let s = cell.trim();
    let bad = || Error::Parse(format!("invalid complex cell `{cell}`"));
    let body = s.strip_suffix('i').ok_or_else(bad)?;
    // split at the last sign that is not leading and not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im_abs: f64 = body[split + 1..].parse().map_err(|_| bad())?;
    let im = if bytes[split] == b'-' { -im_abs } else { im_abs };
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

impl ComplexMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols()).map(|j| format_complex(self.get(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ComplexMatrix> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split(',').map(parse_complex).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_and_parses_signs() {
        assert_eq!(format_complex(Complex64::new(1.5, -2.0)), "1.5-2i");
        assert_eq!(format_complex(Complex64::new(-0.25, 3.0)), "-0.25+3i");
        assert_eq!(parse_complex("1e-5-2.5e+3i").unwrap(), Complex64::new(1e-5, -2500.0));
        assert!(parse_complex("1+2").is_err());
        assert!(parse_complex("NaN+0i").is_err());
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(ComplexMatrix::from_csv("1+0i,2+0i\n3+0i\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_roundtrip_is_bit_exact(entries in proptest::collection::vec((-1e300f64..1e300, -1e-300f64..1e300), 6)) {
            let m = ComplexMatrix::from_row_major(2, 3, entries.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let back = ComplexMatrix::from_csv(&m.to_csv()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
