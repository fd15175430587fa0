//! File formats: field CSV, scattering-data JSON, generic tables, and
//! atomic writes.

use crate::common::{c, Eigenpair, FieldState, Grid1D, ScatteringData, SpectralGrid, C64};
use crate::error::{MtmError, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const FIELD_HEADER: [&str; 5] = ["x", "re_u", "im_u", "re_v", "im_v"];

/// C `printf("%.17g")` formatting.
pub fn fmt_g17(x: f64) -> String {
    fmt_g(x, 17)
}

/// C `printf("%.<p>g")` formatting for finite and non-finite values.
pub fn fmt_g(x: f64, p: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = p.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= p as i32 {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let prec = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", prec, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| MtmError::Io(e.error))?;
    Ok(())
}

/// Renders a table with a header row; every cell already formatted.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn field_csv_string(state: &FieldState) -> String {
    let rows: Vec<Vec<String>> = (0..state.grid.n)
        .map(|k| {
            let (u, v) = (state.u[k], state.v[k]);
            [state.grid.x(k), u.re, u.im, v.re, v.im].iter().map(|&z| fmt_g17(z)).collect()
        })
        .collect();
    render_table(&FIELD_HEADER, &rows)
}

pub fn write_field_csv(state: &FieldState, path: &Path) -> Result<()> {
    write_atomic(path, field_csv_string(state).as_bytes())
}

pub fn read_field_csv(path: &Path) -> Result<FieldState> {
    let text = std::fs::read_to_string(path)?;
    parse_field_csv(&text)
}

/// Parses field CSV text; the grid must be uniform to `1e-9 dx`.
pub fn parse_field_csv(text: &str) -> Result<FieldState> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| MtmError::invalid(format!("field csv header: {e}")))?;
    if header.iter().collect::<Vec<_>>() != FIELD_HEADER {
        return Err(MtmError::invalid(format!("field csv header must be {}", FIELD_HEADER.join(","))));
    }
    let mut xs = Vec::new();
    let mut u = Vec::new();
    let mut v = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MtmError::invalid(format!("field csv row {}: {e}", line + 2)))?;
        if rec.len() != 5 {
            return Err(MtmError::invalid(format!("field csv row {} has {} columns", line + 2, rec.len())));
        }
        let mut vals = [0.0; 5];
        for (slot, cell) in vals.iter_mut().zip(rec.iter()) {
            *slot = cell
                .parse::<f64>()
                .map_err(|_| MtmError::invalid(format!("field csv row {}: bad number {cell:?}", line + 2)))?;
            if !slot.is_finite() {
                return Err(MtmError::invalid(format!("field csv row {}: non-finite sample", line + 2)));
            }
        }
        xs.push(vals[0]);
        u.push(c(vals[1], vals[2]));
        v.push(c(vals[3], vals[4]));
    }
    if xs.len() < 2 {
        return Err(MtmError::invalid("field csv needs at least two rows"));
    }
    let n = xs.len();
    let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    if !(dx > 0.0) {
        return Err(MtmError::invalid("field csv x must be increasing"));
    }
    for (k, &x) in xs.iter().enumerate() {
        if (x - (xs[0] + k as f64 * dx)).abs() > 1e-9 * dx {
            return Err(MtmError::invalid(format!("non-uniform grid at row {}", k + 2)));
        }
    }
    FieldState::new(Grid1D::new(xs[0], dx, n)?, u, v, 0.0)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenJson {
    re: f64,
    im: f64,
    c_re: f64,
    c_im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScatteringJson {
    lambda: Vec<f64>,
    r_re: Vec<f64>,
    r_im: Vec<f64>,
    eigenvalues: Vec<EigenJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_im: Option<Vec<f64>>,
}

pub fn scattering_to_json(sd: &ScatteringData) -> Result<String> {
    let doc = ScatteringJson {
        lambda: sd.grid.nodes().to_vec(),
        r_re: sd.r.iter().map(|z| z.re).collect(),
        r_im: sd.r.iter().map(|z| z.im).collect(),
        eigenvalues: sd
            .eigen
            .iter()
            .map(|e| EigenJson {
                re: e.lambda.re,
                im: e.lambda.im,
                c_re: e.c.re,
                c_im: e.c.im,
            })
            .collect(),
        alpha_re: sd.alpha.as_ref().map(|a| a.iter().map(|z| z.re).collect()),
        alpha_im: sd.alpha.as_ref().map(|a| a.iter().map(|z| z.im).collect()),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn scattering_from_json(text: &str) -> Result<ScatteringData> {
    let doc: ScatteringJson = serde_json::from_str(text).map_err(|e| MtmError::invalid(format!("scattering json: {e}")))?;
    if doc.r_re.len() != doc.lambda.len() || doc.r_im.len() != doc.lambda.len() {
        return Err(MtmError::invalid("scattering json arrays differ in length"));
    }
    let grid = SpectralGrid::from_nodes(doc.lambda)?;
    let r = doc.r_re.iter().zip(&doc.r_im).map(|(&a, &b)| c(a, b)).collect();
    let eigen = doc
        .eigenvalues
        .iter()
        .map(|e| Eigenpair {
            lambda: c(e.re, e.im),
            c: c(e.c_re, e.c_im),
        })
        .collect();
    let mut sd = ScatteringData::new(grid, r, eigen)?;
    if let (Some(a), Some(b)) = (doc.alpha_re, doc.alpha_im) {
        if a.len() == sd.r.len() && b.len() == sd.r.len() {
            sd.alpha = Some(a.iter().zip(&b).map(|(&x, &y)| c(x, y)).collect::<Vec<C64>>());
        }
    }
    Ok(sd)
}

pub fn write_scattering_json(sd: &ScatteringData, path: &Path) -> Result<()> {
    write_atomic(path, scattering_to_json(sd)?.as_bytes())
}

pub fn read_scattering_json(path: &Path) -> Result<ScatteringData> {
    scattering_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.10000000000000001"),
            (1e-5, "1.0000000000000001e-05"),
            (123456.0, "123456"),
            (1e17, "1e+17"),
            (1.5e16, "15000000000000000"),
            (0.0001, "0.0001"),
            (-3.0e-300, "-3.0000000000000002e-300"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g17(x), s);
        }
    }

    #[test]
    fn field_csv_roundtrip() {
        let g = Grid1D::new(-1.0, 0.1, 21).unwrap();
        let s = FieldState::from_fn(g, 0.0, |x| (c(x.sin(), 1.0 / 3.0), c(-x * x, x.exp())));
        let text = field_csv_string(&s);
        let back = parse_field_csv(&text).unwrap();
        for k in 0..g.n {
            assert!((back.u[k] - s.u[k]).norm() <= 1e-15 * s.u[k].norm().max(1.0));
            assert!((back.v[k] - s.v[k]).norm() <= 1e-15 * s.v[k].norm().max(1.0));
        }
        assert_eq!(field_csv_string(&back), text);
    }

    #[test]
    fn field_csv_rejects_bad_input() {
        let h = "x,re_u,im_u,re_v,im_v\n";
        assert!(parse_field_csv(&format!("{h}0,1,0,0,0\n")).is_err());
        assert!(parse_field_csv(&format!("{h}0,1,0,0,0\n0.1,1,0,0,0\n0.2000001,0,0,0,0\n")).is_err());
        assert!(parse_field_csv(&format!("{h}0,1,0,0,0\n0.1,NaN,0,0,0\n")).is_err());
        assert!(parse_field_csv(&format!("{h}0,1,0,0,0\n0.1,abc,0,0,0\n")).is_err());
        assert!(parse_field_csv("x,u\n0,1\n1,2\n").is_err());
    }

    #[test]
    fn scattering_json_roundtrip() {
        let grid = SpectralGrid::log_uniform(0.01, 100.0, 16).unwrap();
        let r = grid.nodes().iter().map(|&l| c(0.01 * l.sin(), 0.02)).collect();
        let sd = ScatteringData::new(
            grid,
            r,
            vec![Eigenpair {
                lambda: c(0.4, 0.7),
                c: c(1.0, -0.5),
            }],
        )
        .unwrap();
        let back = scattering_from_json(&scattering_to_json(&sd).unwrap()).unwrap();
        assert_eq!(back, sd);
        assert!(scattering_from_json(r#"{"lambda":[1],"r_re":[0],"r_im":[0],"eigenvalues":[],"x":1}"#).is_err());
    }
}
