//! JSON and CSV formats. Infinite values are written as the string `"inf"`.

use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::logconcave::{ClassTag, LogConcaveFn};
use crate::potential::{Domain, PotentialGrid};

/// Serde adapter for a real that may be infinite.
pub mod ext_real {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub(crate) fn parse_str(text: &str) -> Option<f64> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            t => t.parse().ok(),
        }
    }

    struct V;

    impl<'de> Visitor<'de> for V {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or \"inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            parse_str(v).ok_or_else(|| E::custom(format!("not a number: {v:?}")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExtReal(#[serde(with = "ext_real")] pub f64);

/// Serde adapter for a list of possibly infinite reals.
pub mod ext_vec {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<ExtReal> = v.iter().map(|x| ExtReal(*x)).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<ExtReal>::deserialize(d)?.into_iter().map(|x| x.0).collect())
    }
}

/// Serde adapter for `(t, value)` pairs written as two-element arrays.
pub mod ext_pairs {
    use super::ExtReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<[ExtReal; 2]> = v.iter().map(|(a, b)| [ExtReal(*a), ExtReal(*b)]).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
        Ok(Vec::<[ExtReal; 2]>::deserialize(d)?.into_iter().map(|[a, b]| (a.0, b.0)).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct RawPotential {
    grid: Grid,
    #[serde(with = "ext_vec")]
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<ConvexBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_values: Option<[ExtReal; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<ClassTag>,
}

fn raw_of(u: &PotentialGrid, class: Option<ClassTag>) -> RawPotential {
    RawPotential {
        grid: u.grid().clone(),
        values: u.values().to_vec(),
        body: u.body().cloned(),
        edge_values: u.edge_values().map(|[a, b]| [ExtReal(a), ExtReal(b)]),
        class,
    }
}

fn potential_of(raw: RawPotential) -> Result<(PotentialGrid, Option<ClassTag>)> {
    let domain = match raw.body {
        None => Domain::WholeSpace,
        Some(body) => Domain::Body { body, edge_values: raw.edge_values.map(|[a, b]| [a.0, b.0]) },
    };
    Ok((PotentialGrid::new(raw.grid, raw.values, domain)?, raw.class))
}

impl Serialize for PotentialGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw_of(self, None).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PotentialGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPotential::deserialize(d)?;
        potential_of(raw).map(|p| p.0).map_err(serde::de::Error::custom)
    }
}

impl Serialize for LogConcaveFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw_of(self.potential(), Some(self.class())).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogConcaveFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPotential::deserialize(d)?;
        let r = match potential_of(raw) {
            Ok((u, Some(class))) => LogConcaveFn::with_class(u, class),
            Ok((u, None)) => LogConcaveFn::new(u),
            Err(e) => Err(e),
        };
        r.map_err(serde::de::Error::custom)
    }
}

pub fn potential_to_json(u: &PotentialGrid) -> Result<String> {
    Ok(serde_json::to_string_pretty(u)?)
}

pub fn potential_from_json(text: &str) -> Result<PotentialGrid> {
    let raw: RawPotential = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(potential_of(raw)?.0)
}

pub fn logconcave_to_json(f: &LogConcaveFn) -> Result<String> {
    Ok(serde_json::to_string_pretty(f)?)
}

/// Reads a potential JSON; a missing `"class"` field is filled in by classification.
pub fn logconcave_from_json(text: &str) -> Result<LogConcaveFn> {
    let raw: RawPotential = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match potential_of(raw)? {
        (u, Some(class)) => LogConcaveFn::with_class(u, class),
        (u, None) => LogConcaveFn::new(u),
    }
}

/// Two numeric columns, optionally preceded by a header line. `#` starts a comment.
pub fn parse_two_columns(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(|c| c == ',' || c == ';' || c == '\t').map(str::trim).collect();
        if cells.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
        }
        match (ext_real::parse_str(cells[0]), ext_real::parse_str(cells[1])) {
            (Some(a), Some(b)) => rows.push((a, b)),
            _ if rows.is_empty() && cells[0].parse::<f64>().is_err() => continue,
            _ => return Err(Error::Parse(format!("line {}: not a number", lineno + 1))),
        }
    }
    if rows.len() < 3 {
        return Err(Error::Parse("need at least 3 data rows".into()));
    }
    Ok(rows)
}

/// Abscissae must be uniformly spaced (relative tolerance `1e-6` of a cell).
pub fn uniform_grid_of(xs: &[f64]) -> Result<Grid> {
    let n = xs.len();
    let g = Grid::line(xs[0], xs[n - 1], n).map_err(|e| Error::Parse(e.to_string()))?;
    let h = g.spacing(0);
    for (i, &x) in xs.iter().enumerate() {
        if (x - g.coord(0, i)).abs() > 1e-6 * h {
            return Err(Error::Parse(format!("abscissae are not uniformly spaced (row {})", i + 1)));
        }
    }
    Ok(g)
}

/// 1-D potential from CSV columns `x,u`.
pub fn potential_from_csv(text: &str) -> Result<PotentialGrid> {
    let rows = parse_two_columns(text)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let grid = uniform_grid_of(&xs)?;
    PotentialGrid::new(grid, rows.iter().map(|r| r.1).collect(), Domain::WholeSpace)
}

fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.17e}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// CSV with a header row and one row per sample.
pub fn columns_to_csv(header: &[&str], cols: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    let n = cols.first().map_or(0, |c| c.len());
    for i in 0..n {
        let row: Vec<String> = cols.iter().map(|c| fmt_real(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn potential_to_csv(u: &PotentialGrid) -> Result<String> {
    if u.dim() != 1 {
        return Err(Error::Unsupported("CSV output is one-dimensional".into()));
    }
    Ok(columns_to_csv(&["x", "u"], &[&u.grid().coords(0), u.values()]))
}

/// Reads a potential from JSON or CSV, choosing by the first non-blank character.
pub fn potential_from_text(text: &str) -> Result<PotentialGrid> {
    if text.trim_start().starts_with('{') {
        potential_from_json(text)
    } else {
        potential_from_csv(text)
    }
}

pub fn logconcave_from_text(text: &str) -> Result<LogConcaveFn> {
    if text.trim_start().starts_with('{') {
        logconcave_from_json(text)
    } else {
        LogConcaveFn::new(potential_from_csv(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_json_roundtrip_with_inf() {
        let g = Grid::line(-2.0, 2.0, 5).unwrap();
        let k = ConvexBody::interval(-1.0, 1.0).unwrap();
        let u = PotentialGrid::indicator(g, k).unwrap();
        let s = potential_to_json(&u).unwrap();
        assert!(s.contains("\"inf\""));
        let back = potential_from_json(&s).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn csv_with_header() {
        let u = potential_from_csv("x,u\n-1,1\n0,0\n1,1\n").unwrap();
        assert_eq!(u.values(), &[1.0, 0.0, 1.0]);
        assert!(potential_from_csv("x,u\n-1,1\n0,0\n2,1\n").is_err());
        assert!(potential_from_csv("garbage").is_err());
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(potential_from_json("{\"grid\": 3"), Err(Error::Parse(_))));
    }
}
