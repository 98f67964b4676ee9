//! File formats: points (JSON and CSV), tensors, region specs, density
//! matrices and raster grids.

use std::io::{Read, Write};
use std::path::Path;

use ewgeo_core::metric::VolumeElementCase;
use ewgeo_core::region::{CellLabel, Constraint, Polynomial, RasterGrid, Relation, Term, NUM_VARS, VAR_NAMES};
use ewgeo_core::{EWPoint, Error, MetricTensor, RegionSpec, Result};
use num_complex::Complex64;
use num_rational::Rational64;
use serde_json::Value;

use crate::oracle::{CMatrix, DensityMatrix};
use crate::report::Json;

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ConfigParse { location: location.into(), message: message.into() }
}

fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| parse_error(format!("line {}, column {}", e.line(), e.column()), e.to_string()))
}

fn field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| parse_error(at, format!("missing field \"{key}\"")))
}

fn number(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| parse_error(at, "expected a number"))
}

/// Exact rational from `"p/q"`, an integer, or a decimal such as `"0.25"`
/// or `"1e-3"`.
pub fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational64::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let pow = 10i64.checked_pow(scale.unsigned_abs())?;
    Some(if scale >= 0 { Rational64::from_integer(num.checked_mul(pow)?) } else { Rational64::new(num, pow) })
}

fn rational(v: &Value, at: &str) -> Result<Rational64> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(parse_error(at, "expected a number or a \"p/q\" string")),
    };
    parse_rational(&text).ok_or_else(|| parse_error(at, format!("cannot read \"{text}\" as an exact rational")))
}

pub fn parse_case(s: &str) -> Result<VolumeElementCase> {
    VolumeElementCase::from_name(s)
        .ok_or_else(|| Error::InvalidParameters(format!("unknown case \"{s}\" (expected qubit or general)")))
}

/// Parses a region-spec document.
pub fn parse_region_spec(text: &str) -> Result<RegionSpec> {
    let doc = parse_document(text)?;
    let name = field(&doc, "name", "$")?.as_str().ok_or_else(|| parse_error("name", "expected a string"))?;
    let case_name = field(&doc, "case", "$")?.as_str().ok_or_else(|| parse_error("case", "expected a string"))?;
    let case = VolumeElementCase::from_name(case_name)
        .ok_or_else(|| parse_error("case", format!("unknown case \"{case_name}\"")))?;
    let items = field(&doc, "constraints", "$")?
        .as_array()
        .ok_or_else(|| parse_error("constraints", "expected an array"))?;
    if items.is_empty() {
        return Err(parse_error("constraints", "at least one constraint is required"));
    }
    let mut constraints = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let at = format!("constraints[{i}]");
        let terms = field(item, "terms", &at)?
            .as_array()
            .ok_or_else(|| parse_error(format!("{at}.terms"), "expected an array"))?;
        if terms.is_empty() {
            return Err(parse_error(format!("{at}.terms"), "a constraint needs at least one term"));
        }
        let mut parsed = Vec::with_capacity(terms.len());
        for (j, t) in terms.iter().enumerate() {
            let tat = format!("{at}.terms[{j}]");
            let pair = t.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                parse_error(&tat, format!("expected [coefficient, [exponents of {}]]", VAR_NAMES.join(", ")))
            })?;
            let coeff = rational(&pair[0], &format!("{tat}[0]"))?;
            let exps = pair[1]
                .as_array()
                .filter(|a| a.len() == NUM_VARS)
                .ok_or_else(|| parse_error(format!("{tat}[1]"), format!("expected {NUM_VARS} exponents")))?;
            let mut e = [0u32; NUM_VARS];
            for (k, x) in exps.iter().enumerate() {
                e[k] = x
                    .as_u64()
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| parse_error(format!("{tat}[1][{k}]"), "expected a nonnegative integer exponent"))?;
            }
            parsed.push(Term::new(coeff, e));
        }
        let rel = match field(item, "rel", &at)?.as_str() {
            Some("<=") => Relation::Le,
            Some(">=") => Relation::Ge,
            _ => return Err(parse_error(format!("{at}.rel"), "expected \"<=\" or \">=\"")),
        };
        let rhs = rational(field(item, "rhs", &at)?, &format!("{at}.rhs"))?;
        let mut c = Constraint::new(Polynomial::new(parsed), rel, rhs);
        if let Some(label) = item.get("label") {
            c = c.labeled(label.as_str().ok_or_else(|| parse_error(format!("{at}.label"), "expected a string"))?);
        }
        constraints.push(c);
    }
    let mut spec = RegionSpec::new(name, case, constraints)?;
    if let Some(flag) = doc.get("necessary_only") {
        spec.necessary_only = flag.as_bool().ok_or_else(|| parse_error("necessary_only", "expected a boolean"))?;
    }
    Ok(spec)
}

pub fn load_region_spec(path: &Path) -> Result<RegionSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_error(path.display().to_string(), format!("cannot read file: {e}")))?;
    parse_region_spec(&text).map_err(|e| match e {
        Error::ConfigParse { location, message } => {
            Error::ConfigParse { location: format!("{}: {location}", path.display()), message }
        }
        other => other,
    })
}

fn rational_json(q: Rational64) -> Json {
    if *q.denom() == 1 {
        Json::Int(*q.numer())
    } else {
        Json::str(format!("{}/{}", q.numer(), q.denom()))
    }
}

pub fn region_spec_to_json(spec: &RegionSpec) -> Json {
    let constraints = spec
        .constraints
        .iter()
        .map(|c| {
            let terms = c
                .polynomial
                .terms
                .iter()
                .map(|t| {
                    Json::Arr(vec![
                        rational_json(t.coeff),
                        Json::Arr(t.exponents.iter().map(|&e| Json::Int(e as i64)).collect()),
                    ])
                })
                .collect();
            let mut o = Json::obj([
                ("terms", Json::Arr(terms)),
                ("rel", Json::str(c.relation.symbol())),
                ("rhs", rational_json(c.rhs)),
            ]);
            if let Some(l) = &c.label {
                o.push("label", Json::str(l.clone()));
            }
            o
        })
        .collect();
    Json::obj([
        ("name", Json::str(spec.name.clone())),
        ("case", Json::str(spec.case.name())),
        ("necessary_only", Json::Bool(spec.necessary_only)),
        ("constraints", Json::Arr(constraints)),
    ])
}

/// `{"r_minus": …, "r_plus": …, "r": [r1, r2, r3]}` with `r_minus`
/// defaulting to 0, or the five numbers `r_minus,r_plus,r1,r2,r3`.
pub fn parse_point(text: &str) -> Result<EWPoint> {
    if !text.trim_start().starts_with('{') {
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(parse_error("point", format!("expected 5 comma-separated numbers, found {}", fields.len())));
        }
        let mut v = [0.0; 5];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f.parse().map_err(|_| parse_error(format!("point[{k}]"), format!("\"{f}\" is not a number")))?;
        }
        return Ok(EWPoint::new(v[0], v[1], [v[2], v[3], v[4]]));
    }
    let doc = parse_document(text)?;
    let r_minus = match doc.get("r_minus") {
        Some(v) => number(v, "r_minus")?,
        None => 0.0,
    };
    let r_plus = number(field(&doc, "r_plus", "$")?, "r_plus")?;
    let r = field(&doc, "r", "$")?
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| parse_error("r", "expected an array of three numbers"))?;
    let mut xyz = [0.0; 3];
    for (k, v) in r.iter().enumerate() {
        xyz[k] = number(v, &format!("r[{k}]"))?;
    }
    Ok(EWPoint::new(r_minus, r_plus, xyz))
}

pub fn point_to_json(p: &EWPoint) -> Json {
    Json::obj([("r_minus", Json::Num(p.r_minus)), ("r_plus", Json::Num(p.r_plus)), ("r", Json::nums(&p.r))])
}

pub const POINT_COLUMNS: [&str; 5] = ["r_minus", "r_plus", "r1", "r2", "r3"];

/// Reads 5-column point rows; a leading header row is skipped.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<EWPoint>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(format!("row {}", i + 1), e.to_string()))?;
        if i == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != 5 {
            return Err(parse_error(format!("row {}", i + 1), format!("expected 5 columns, found {}", rec.len())));
        }
        let mut v = [0.0; 5];
        for (k, f) in rec.iter().enumerate() {
            v[k] = f
                .parse()
                .map_err(|_| parse_error(format!("row {}, column {}", i + 1, POINT_COLUMNS[k]), format!("not a number: \"{f}\"")))?;
        }
        out.push(EWPoint::new(v[0], v[1], [v[2], v[3], v[4]]));
    }
    Ok(out)
}

/// Header plus one `r_minus, r_plus, r1, r2, r3, weight` row per point.
pub fn write_weighted_points_csv<W: Write>(writer: W, rows: &[(EWPoint, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::InvalidParameters(format!("cannot write CSV: {e}"));
    w.write_record(POINT_COLUMNS.iter().copied().chain(["weight"])).map_err(io)?;
    for (p, wt) in rows {
        let cells = [p.r_minus, p.r_plus, p.r[0], p.r[1], p.r[2], *wt].map(|x| format!("{x:.16e}"));
        w.write_record(&cells).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidParameters(format!("cannot write CSV: {e}")))
}

pub fn tensor_to_json(t: &MetricTensor) -> Json {
    let m = t.matrix();
    Json::obj([
        ("labels", Json::Arr(t.labels().iter().map(|c| Json::str(c.name())).collect())),
        ("matrix", Json::Arr((0..m.nrows()).map(|i| Json::nums(&m.row(i).iter().copied().collect::<Vec<_>>())).collect())),
    ])
}

/// `{"d": d, "re": [[…]], "im": [[…]]}`; `im` may be omitted.
pub fn parse_density_matrix(text: &str) -> Result<DensityMatrix> {
    let doc = parse_document(text)?;
    let d = field(&doc, "d", "$")?.as_u64().ok_or_else(|| parse_error("d", "expected a positive integer"))?;
    let rows = |key: &str| -> Result<Option<Vec<Vec<f64>>>> {
        let Some(v) = doc.get(key) else { return Ok(None) };
        let arr = v.as_array().ok_or_else(|| parse_error(key, "expected an array of rows"))?;
        arr.iter()
            .enumerate()
            .map(|(i, row)| {
                row.as_array()
                    .ok_or_else(|| parse_error(format!("{key}[{i}]"), "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(j, x)| number(x, &format!("{key}[{i}][{j}]")))
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    };
    let re = rows("re")?.ok_or_else(|| parse_error("$", "missing field \"re\""))?;
    let im = rows("im")?;
    let n = re.len();
    let shape_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
    if !shape_ok(&re) || im.as_ref().is_some_and(|m| !shape_ok(m)) {
        return Err(parse_error("re", "matrix must be square, with matching re and im shapes"));
    }
    let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j])));
    DensityMatrix::from_matrix(d, m)
}

fn gray(label: CellLabel) -> u8 {
    match label {
        CellLabel::OutsideEw => 255,
        CellLabel::EwOnly => 170,
        CellLabel::ExcludedByConvexity => 85,
        CellLabel::RegionMember => 0,
    }
}

/// Plain PGM (P2), one gray level per label.
pub fn raster_pgm(grid: &RasterGrid) -> String {
    let n = grid.resolution;
    let mut out = format!("P2\n{n} {n}\n255\n");
    for row in 0..n {
        let line: Vec<String> = (0..n).map(|col| gray(grid.label(row, col)).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Sidecar legend for [`raster_pgm`].
pub fn raster_legend(grid: &RasterGrid) -> Json {
    let (u, v) = grid.plane.axis_names();
    Json::obj([
        ("r_minus", Json::Num(grid.r_minus)),
        ("r_plus", Json::Num(grid.r_plus)),
        ("plane", Json::str(grid.plane.name())),
        ("horizontal_axis", Json::str(u)),
        ("vertical_axis", Json::str(v)),
        ("extent", Json::nums(&[-grid.half_width(), grid.half_width()])),
        ("resolution", Json::uint(grid.resolution as u64)),
        ("row_order", Json::str("top row has the largest vertical coordinate")),
        (
            "labels",
            Json::Arr(
                CellLabel::ALL
                    .iter()
                    .map(|&l| {
                        Json::obj([
                            ("label", Json::str(l.name())),
                            ("gray", Json::Int(gray(l) as i64)),
                            ("cells", Json::uint(grid.count(l) as u64)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

/// `row,col,u,v,label` per cell.
pub fn raster_csv(grid: &RasterGrid) -> String {
    let (u_name, v_name) = grid.plane.axis_names();
    let mut out = format!("row,col,{u_name},{v_name},label\n");
    for row in 0..grid.resolution {
        for col in 0..grid.resolution {
            let (u, v) = grid.cell_center(row, col);
            out.push_str(&format!("{row},{col},{u:.16e},{v:.16e},{}\n", grid.label(row, col).name()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/6"), Some(Rational64::new(1, 6)));
        assert_eq!(parse_rational("-0.25"), Some(Rational64::new(-1, 4)));
        assert_eq!(parse_rational("1e-3"), Some(Rational64::new(1, 1000)));
        assert_eq!(parse_rational("2.5E1"), Some(Rational64::from_integer(25)));
        assert_eq!(parse_rational("7"), Some(Rational64::from_integer(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn point_json_round_trip() {
        let p = parse_point(r#"{"r_minus":0.1,"r_plus":0.2,"r":[0.3,0,0]}"#).unwrap();
        assert_eq!(p, EWPoint::new(0.1, 0.2, [0.3, 0.0, 0.0]));
        let back = parse_point(&point_to_json(&p).render()).unwrap();
        assert_eq!(back, p);
        assert!(matches!(parse_point(r#"{"r_plus":0.2,"r":[0.3,0]}"#), Err(Error::ConfigParse { .. })));
        assert!(matches!(parse_point("{"), Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn region_spec_diagnostics() {
        let bad = r#"{"name":"x","case":"general","constraints":[{"terms":[[1,[1,0,0]]],"rel":"<=","rhs":1}]}"#;
        match parse_region_spec(bad) {
            Err(Error::ConfigParse { location, .. }) => assert_eq!(location, "constraints[0].terms[0][1]"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"name":"x","case":"general","constraints":[{"terms":[["x/2",[1,0,0,0,0]]],"rel":"<=","rhs":1}]}"#;
        assert!(matches!(parse_region_spec(bad), Err(Error::ConfigParse { .. })));
        let bad = r#"{"name":"x","case":"general","constraints":[]}"#;
        assert!(matches!(parse_region_spec(bad), Err(Error::ConfigParse { .. })));
        let bad = "{\n \"name\": 1,";
        match parse_region_spec(bad) {
            Err(Error::ConfigParse { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn region_spec_round_trip() {
        let spec = ewgeo_core::region::trisep_quoted(VolumeElementCase::General);
        let back = parse_region_spec(&region_spec_to_json(&spec).render()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn csv_points() {
        let text = "r_minus,r_plus,r1,r2,r3\n0.1,0.2,0.3,0,0\n0,0.5,0,0,0.25\n";
        let pts = read_points_csv(text.as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1], EWPoint::qubit(0.5, [0.0, 0.0, 0.25]));
        assert!(read_points_csv("0.1,0.2,0.3\n".as_bytes()).is_err());
        let mut out = Vec::new();
        write_weighted_points_csv(&mut out, &[(pts[0], 2.0)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r_minus,r_plus,r1,r2,r3,weight");
        assert_eq!(lines.next().unwrap().split(',').count(), 6);
    }

    #[test]
    fn density_matrix_document() {
        let mut re = vec![vec![0.0; 8]; 8];
        re[0][0] = 1.0;
        let doc = serde_json::json!({"d": 2, "re": re}).to_string();
        let rho = parse_density_matrix(&doc).unwrap();
        assert_eq!(rho.d(), 2);
        assert!(parse_density_matrix(r#"{"d":2,"re":[[1]]}"#).is_err());
    }
}
