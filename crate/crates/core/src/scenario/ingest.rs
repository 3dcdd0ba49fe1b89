//! Coupling-matrix files.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::padic::GroupScheme;

/// Reads a `p^l x p^l` CSV matrix. Entries are real numbers or complex
/// tokens such as `1.5-2i`; lines starting with `#` are ignored.
/// Asymmetric matrices are accepted (connectivity may be directed) and
/// logged.
pub fn ingest_matrix(path: &Path, scheme: &GroupScheme) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let matrix = parse_matrix(&text, scheme.size()).map_err(|message| Error::Parse {
        path: path.display().to_string(),
        message,
    })?;
    let defect = matrix.symmetry_defect();
    if defect > 0.0 {
        log::info!(
            "{}: asymmetric coupling matrix (max |W - W^T| = {defect})",
            path.display()
        );
    }
    Ok(matrix)
}

pub(crate) fn parse_matrix(text: &str, n: usize) -> std::result::Result<ComplexMatrix, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::with_capacity(n);
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = r + 1;
        if record.len() != n {
            return Err(format!(
                "row {row}: expected {n} values, found {}",
                record.len()
            ));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, token)| {
                parse_complex(token)
                    .ok_or_else(|| format!("row {row}, column {}: cannot parse `{token}`", c + 1))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(values);
    }
    if rows.len() != n {
        return Err(format!("expected {n} rows, found {}", rows.len()));
    }
    ComplexMatrix::from_rows(&rows).map_err(|e| e.to_string())
}

/// Parses `3`, `-1.5e2`, `2i`, `-i`, `1+2i`, `0.5-1e-3i`.
pub fn parse_complex(token: &str) -> Option<Complex64> {
    let token = token.trim();
    let finite = |z: Complex64| z.is_finite().then_some(z);
    let Some(body) = token.strip_suffix(['i', 'j']) else {
        return token
            .parse::<f64>()
            .ok()
            .map(|x| Complex64::new(x, 0.0))
            .and_then(finite);
    };
    // Split at the last sign that is not an exponent sign or the leading one.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse::<f64>().ok(),
    };
    let z = match split {
        Some(k) => Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?),
        None => Complex64::new(0.0, imag(body)?),
    };
    finite(z)
}

/// A deterministic 64x64 hierarchical connectivity matrix on
/// `Z_2 / 2^6 Z_2`, used when the cat cortex data is not supplied. Cells
/// sharing a ball of radius `2^-3`, `2^-4`, `2^-5` are connected with
/// strength 1, 2, 3; all other pairs, and the diagonal, are 0. Strengths
/// 0..3 match the grading of the cortical data.
pub fn synthetic_cat_matrix() -> ComplexMatrix {
    let scheme = GroupScheme::new(2, 6).expect("valid scheme");
    let rows: Vec<Vec<Complex64>> = (0..64)
        .map(|i| {
            (0..64)
                .map(|k| {
                    let v = scheme
                        .valuation_raw(i, k)
                        .map_or(0, |v| v.saturating_sub(2).min(3));
                    Complex64::new(v as f64, 0.0)
                })
                .collect()
        })
        .collect();
    ComplexMatrix::from_rows(&rows).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn csv(n: usize, f: impl Fn(usize, usize) -> String) -> String {
        (0..n)
            .map(|i| (0..n).map(|j| f(i, j)).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn complex_tokens() {
        assert_eq!(parse_complex("3"), Some(c(3.0, 0.0)));
        assert_eq!(parse_complex(" -1.5e2 "), Some(c(-150.0, 0.0)));
        assert_eq!(parse_complex("2i"), Some(c(0.0, 2.0)));
        assert_eq!(parse_complex("-i"), Some(c(0.0, -1.0)));
        assert_eq!(parse_complex("1+2i"), Some(c(1.0, 2.0)));
        assert_eq!(parse_complex("0.5-1e-3i"), Some(c(0.5, -1e-3)));
        assert_eq!(parse_complex("1e+2-i"), Some(c(100.0, -1.0)));
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex("1+xi"), None);
        assert_eq!(parse_complex("inf"), None);
    }

    #[test]
    fn sixty_four_square_is_accepted_for_p2_l6() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        std::fs::write(&path, csv(64, |i, j| format!("{}", (i * j) % 3))).unwrap();
        let m = ingest_matrix(&path, &GroupScheme::new(2, 6).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (64, 64));
        assert_eq!(m[(2, 2)], c(1.0, 0.0));

        let err = ingest_matrix(&path, &GroupScheme::new(3, 6).unwrap())
            .unwrap_err()
            .to_string();
        assert!(err.contains("expected 729"), "{err}");
    }

    #[test]
    fn short_row_is_named() {
        let mut text = csv(4, |_, _| "1".into());
        text = text.replacen("1,1,1,1\n1,1,1,1", "1,1,1,1\n1,1,1", 1);
        assert_eq!(
            parse_matrix(&text, 4).unwrap_err(),
            "row 2: expected 4 values, found 3"
        );
    }

    #[test]
    fn bad_token_is_located() {
        let text = csv(2, |i, j| {
            if (i, j) == (1, 0) {
                "x".into()
            } else {
                "0".into()
            }
        });
        assert_eq!(
            parse_matrix(&text, 2).unwrap_err(),
            "row 2, column 1: cannot parse `x`"
        );
    }

    #[test]
    fn comments_and_complex_entries() {
        let text = "# header comment\n1, 2+i\n2-i, 0\n";
        let m = parse_matrix(text, 2).unwrap();
        assert_eq!(m[(0, 1)], c(2.0, 1.0));
        assert_eq!(m.symmetry_defect(), 2.0);
        assert!(parse_matrix("1,0\n", 2)
            .unwrap_err()
            .contains("expected 2 rows"));
    }

    #[test]
    fn synthetic_matrix_shape() {
        let m = synthetic_cat_matrix();
        assert_eq!(m.symmetry_defect(), 0.0);
        assert!(m.is_real());
        for i in 0..64 {
            assert_eq!(m[(i, i)].re, 0.0);
            let row_sum: f64 = m.row(i).iter().map(|z| z.re).sum();
            // 4 cells at valuation 3, 2 at 4, 1 at 5.
            assert_eq!(row_sum, 4.0 + 2.0 * 2.0 + 3.0);
        }
        assert_eq!(m[(0, 32)].re, 3.0);
        assert_eq!(m[(0, 16)].re, 2.0);
        assert_eq!(m[(0, 8)].re, 1.0);
        assert_eq!(m[(0, 4)].re, 0.0);
    }
}
