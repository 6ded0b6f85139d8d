//! Matrix text files: a header line `rows cols`, then one line per row of
//! whitespace-separated decimals. Values are written as the shortest decimal
//! that parses back to the same binary64, so files round-trip bitwise.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use opcouple::Matrix64;

use crate::CliError;

pub fn load_matrix(path: &Path) -> Result<Matrix64, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text, &path.display().to_string())
}

/// Parses the text format; `origin` names the source in error positions.
pub fn parse_matrix(text: &str, origin: &str) -> Result<Matrix64, CliError> {
    let fail = |line: usize, column: usize, message: String| {
        CliError::Usage(format!("{origin}:{line}:{column}: {message}"))
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line))
        .filter(|(_, line)| !line.trim().is_empty());

    let (header_no, header) = lines.next().ok_or_else(|| fail(1, 1, "empty file".into()))?;
    let header_tokens = tokens(header);
    if header_tokens.len() != 2 {
        let column = header_tokens.get(2).map_or(1, |t| t.0);
        return Err(fail(header_no, column, "header must be exactly \"rows cols\"".into()));
    }
    let mut dims = [0usize; 2];
    for (slot, &(column, token)) in dims.iter_mut().zip(&header_tokens) {
        *slot = token.parse().map_err(|_| {
            fail(header_no, column, format!("expected a dimension count, got {token:?}"))
        })?;
    }
    let [rows, cols] = dims;

    let mut entries = Vec::with_capacity(rows * cols);
    if cols > 0 {
        for r in 0..rows {
            let (line_no, line) = lines.next().ok_or_else(|| {
                fail(header_no, 1, format!("expected {rows} rows, found only {r}"))
            })?;
            let row = tokens(line);
            if row.len() != cols {
                let column = row.get(cols).map_or(1, |t| t.0);
                return Err(fail(
                    line_no,
                    column,
                    format!("row {} has {} entries, expected {cols}", r + 1, row.len()),
                ));
            }
            for (column, token) in row {
                let value: f64 = token.parse().map_err(|_| {
                    fail(line_no, column, format!("expected a number, got {token:?}"))
                })?;
                if !value.is_finite() {
                    return Err(fail(line_no, column, format!("non-finite entry {token:?}")));
                }
                entries.push(value);
            }
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(fail(line_no, 1, format!("trailing content after {rows} rows", )));
    }
    Matrix64::from_vec(rows, cols, entries)
        .map_err(|e| CliError::Internal(format!("matrix assembly: {e}")))
}

/// Whitespace-separated tokens with their 1-based character columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (column, (offset, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((col0, off0)) = start.take() {
                out.push((col0 + 1, &line[off0..offset]));
            }
        } else if start.is_none() {
            start = Some((column, offset));
        }
    }
    if let Some((col0, off0)) = start {
        out.push((col0 + 1, &line[off0..]));
    }
    out
}

pub fn render_matrix(m: &Matrix64) -> String {
    let mut text = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                text.push(' ');
            }
            write!(text, "{}", m[(i, j)]).expect("writing to a string cannot fail");
        }
        text.push('\n');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_identity() {
        let m = parse_matrix("2 2\n1 0\n0 1\n", "test").unwrap();
        assert_eq!(m, Matrix64::identity(2));
    }

    #[test]
    fn parses_a_scalar_zero() {
        let m = parse_matrix("1 1\n0\n", "test").unwrap();
        assert_eq!(m, Matrix64::zeros(1, 1));
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let err = parse_matrix("2 2\n1 0\n1\n", "input.mat").unwrap_err();
        assert!(err.to_string().contains("input.mat:3"), "{err}");
    }

    #[test]
    fn bad_numbers_name_line_and_column() {
        let err = parse_matrix("1 2\n1 x\n", "m").unwrap_err();
        assert!(err.to_string().contains("m:2:3"), "{err}");
    }

    #[test]
    fn header_must_be_two_counts() {
        assert!(parse_matrix("2\n", "m").is_err());
        assert!(parse_matrix("2 2 2\n", "m").is_err());
        assert!(parse_matrix("a 2\n", "m").is_err());
    }

    #[test]
    fn rejects_non_finite_and_trailing_rows() {
        assert!(parse_matrix("1 1\ninf\n", "m").is_err());
        assert!(parse_matrix("1 1\n1\n2\n", "m").is_err());
    }

    #[test]
    fn empty_shapes_round_trip() {
        for text in ["0 0\n", "0 3\n"] {
            let m = parse_matrix(text, "m").unwrap();
            assert_eq!(render_matrix(&m), text);
        }
    }

    #[test]
    fn rendering_round_trips_awkward_values() {
        let m = Matrix64::from_rows(&[&[0.1, -1.5e-300], &[f64::MIN_POSITIVE, 3.0]]).unwrap();
        let back = parse_matrix(&render_matrix(&m), "m").unwrap();
        assert_eq!(m, back);
    }
}
