//! File formats: the custom problem JSON, polynomial coefficient lists and
//! full-precision number output.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};
use structeig_core::builders::ScalarPoly;
use structeig_core::representation::{ProblemInput, UnitaryKind};
use structeig_core::{Error as CoreError, Mat, C64};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {msg}")]
    Shape { field: &'static str, msg: String },
    #[error("invalid coefficient list: {0}")]
    Coeffs(String),
    #[error(transparent)]
    Problem(#[from] CoreError),
}

/// Complex scalar as `[re, im]`.
pub type Pair = [f64; 2];

pub fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn unpair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

/// On-disk form of a problem: `U`, `X`, `Y` as row-major nested arrays.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub n: usize,
    pub k: usize,
    pub u: Vec<Vec<Pair>>,
    pub x: Vec<Vec<Pair>>,
    pub y: Vec<Vec<Pair>>,
}

fn rows_of(m: &Mat) -> Vec<Vec<Pair>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|&z| pair(z)).collect()).collect()
}

fn mat_of(field: &'static str, rows: &[Vec<Pair>], r: usize, c: usize) -> Result<Mat, FormatError> {
    if rows.len() != r {
        return Err(FormatError::Shape { field, msg: format!("expected {r} rows, found {}", rows.len()) });
    }
    let mut data = Vec::with_capacity(r * c);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(FormatError::Shape {
                field,
                msg: format!("row {i}: expected {c} columns, found {}", row.len()),
            });
        }
        for (j, p) in row.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(FormatError::Shape { field, msg: format!("entry ({i}, {j}) is not finite") });
            }
            data.push(unpair(p));
        }
    }
    Ok(Mat::from_rows(r, c, data))
}

impl ProblemFile {
    pub fn from_problem(p: &ProblemInput) -> Self {
        ProblemFile { n: p.n(), k: p.k(), u: rows_of(&p.u), x: rows_of(&p.x), y: rows_of(&p.y) }
    }

    /// Checks shapes and the problem invariants. A diagonal `U` is detected
    /// and tagged as such.
    pub fn to_problem(&self) -> Result<ProblemInput, FormatError> {
        let (n, k) = (self.n, self.k);
        if n == 0 || k == 0 {
            return Err(FormatError::Shape {
                field: "n/k",
                msg: format!("need n >= 1 and k >= 1, got n = {n}, k = {k}"),
            });
        }
        let u = mat_of("u", &self.u, n, n)?;
        let x = mat_of("x", &self.x, n, k)?;
        let y = mat_of("y", &self.y, n, k)?;
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || u[(i, j)] == C64::new(0.0, 0.0)));
        let kind = if diagonal { UnitaryKind::Diagonal } else { UnitaryKind::Dense };
        Ok(ProblemInput::new(u, x, y, kind)?)
    }
}

pub fn load_custom(path: &Path) -> Result<ProblemInput, FormatError> {
    let text = read(path)?;
    let file: ProblemFile = serde_json::from_str(&text)?;
    file.to_problem()
}

pub fn save_custom(path: &Path, p: &ProblemInput) -> io::Result<()> {
    std::fs::write(path, to_json(&ProblemFile::from_problem(p)))
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// JSON formatter writing every float with 17 significant digits.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{}", fmt_f64(value))
        } else {
            w.write_all(b"null")
        }
    }
}

/// Serializes with 17 significant digits for every float.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser).expect("serializing plain data cannot fail");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// `value` with 17 significant digits in scientific notation.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Parses one complex number: `3`, `-1.5e2`, `2-3i`, `-i`, `1.5i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(String::from("empty entry"));
    }
    let bad = || format!("cannot parse {s:?} as a number");
    if let Some(body) = t.strip_suffix(['i', 'j']) {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut cut = 0;
        for idx in (1..bytes.len()).rev() {
            if (bytes[idx] == b'+' || bytes[idx] == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                cut = idx;
                break;
            }
        }
        let (re, im) = body.split_at(cut);
        let re = if re.is_empty() { 0.0 } else { re.parse::<f64>().map_err(|_| bad())? };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse::<f64>().map_err(|_| bad())?,
        };
        Ok(C64::new(re, im))
    } else {
        t.parse::<f64>().map(|v| C64::new(v, 0.0)).map_err(|_| bad())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonCoeff {
    Real(f64),
    Pair(Pair),
}

/// Coefficients, highest degree first, from either an inline list
/// (`1,0,-1`) or a file. Files hold a JSON array of numbers or `[re, im]`
/// pairs, or whitespace/comma separated numbers.
pub fn read_coeffs(spec: &str) -> Result<ScalarPoly, FormatError> {
    let path = Path::new(spec);
    let text = if path.is_file() { read(path)? } else { spec.to_string() };
    let trimmed = text.trim();
    let coeffs: Vec<C64> = if trimmed.starts_with('[') {
        let v: Vec<JsonCoeff> = serde_json::from_str(trimmed)?;
        v.into_iter()
            .map(|c| match c {
                JsonCoeff::Real(r) => C64::new(r, 0.0),
                JsonCoeff::Pair(p) => unpair(&p),
            })
            .collect()
    } else {
        trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(parse_complex)
            .collect::<Result<_, _>>()
            .map_err(FormatError::Coeffs)?
    };
    if coeffs.len() < 2 {
        return Err(FormatError::Coeffs(format!("need at least two coefficients, got {}", coeffs.len())));
    }
    if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FormatError::Coeffs(String::from("coefficients must be finite")));
    }
    Ok(ScalarPoly::new(coeffs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use structeig_core::builders::random_unitary_plus_rank_k;

    #[test]
    fn complex_parsing() {
        let c = |re, im| C64::new(re, im);
        for (s, want) in [
            ("3", c(3.0, 0.0)),
            ("-1.5e2", c(-150.0, 0.0)),
            ("2-3i", c(2.0, -3.0)),
            ("-i", c(0.0, -1.0)),
            ("1.5i", c(0.0, 1.5)),
            ("1e-3+2e+1i", c(1e-3, 20.0)),
            (" 4 + j", c(4.0, 1.0)),
        ] {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for s in ["", "abc", "1+", "1..2"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
    }

    #[test]
    fn json_floats_keep_17_digits() {
        let s = to_json(&vec![0.1f64, 1.0 / 3.0]);
        assert_eq!(s, "[1.0000000000000001e-1,3.3333333333333331e-1]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn problem_round_trip_is_exact() {
        let p = random_unitary_plus_rank_k(6, 2, 3.0, 4).unwrap();
        let text = to_json(&ProblemFile::from_problem(&p));
        let f: ProblemFile = serde_json::from_str(&text).unwrap();
        let q = f.to_problem().unwrap();
        assert_eq!(q.u, p.u);
        assert_eq!(q.x, p.x);
        assert_eq!(q.y, p.y);
    }

    #[test]
    fn shape_errors_name_the_position() {
        let mut f = ProblemFile::from_problem(&random_unitary_plus_rank_k(3, 1, 1.0, 1).unwrap());
        f.x[2].push([0.0, 0.0]);
        let e = f.to_problem().unwrap_err().to_string();
        assert!(e.contains("x") && e.contains("row 2"), "{e}");
        f.x[2].pop();
        f.u[1][1] = [5.0, 0.0];
        let e = f.to_problem().unwrap_err().to_string();
        assert!(e.contains("U^H U - I"), "{e}");
    }

    #[test]
    fn coefficient_lists() {
        let p = read_coeffs("1,0,-1").unwrap();
        assert_eq!(p.coeffs, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]);
        let p = read_coeffs("[1, [0, 1], 2]").unwrap();
        assert_eq!(p.coeffs[1], C64::new(0.0, 1.0));
        assert!(read_coeffs("1").is_err());
        assert!(read_coeffs("1,x").is_err());
        assert!(read_coeffs("0,1").is_err());
    }
}
