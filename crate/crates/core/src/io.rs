//! Serialization: JSON with 17-significant-digit floats, CSV profiles and
//! the phase-diagram table.

use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::exponents::PhaseRow;
use crate::grid::{make_grid, OriginModel, RadialFunction, TailModel};
use crate::{Error, Result};

/// Pretty JSON formatter that writes every float in scientific notation with
/// 17 significant digits, which round-trips any `f64` exactly.
pub struct SciFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for SciFormatter<'_> {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Self-contained JSON description of a [`RadialFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDescriptor {
    #[serde(rename = "N")]
    pub dim: u32,
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub origin_model: OriginModel,
    pub tail_model: TailModel,
    pub values: Vec<f64>,
}

impl ProfileDescriptor {
    pub fn from_function(f: &RadialFunction) -> Self {
        Self {
            dim: f.grid.dim,
            r_min: f.grid.r_min,
            r_max: f.grid.r_max,
            n: f.grid.len(),
            origin_model: f.origin,
            tail_model: f.tail,
            values: f.values.clone(),
        }
    }

    pub fn into_function(self) -> Result<RadialFunction> {
        if self.values.len() != self.n {
            return Err(Error::Parse(format!(
                "descriptor has {} values for {} nodes",
                self.values.len(),
                self.n
            )));
        }
        let grid = Arc::new(make_grid(self.r_min, self.r_max, self.n, self.dim)?);
        Ok(RadialFunction::with_models(
            grid,
            self.values,
            self.origin_model,
            self.tail_model,
        ))
    }
}

pub fn profile_to_json(f: &RadialFunction) -> Result<String> {
    to_json_string(&ProfileDescriptor::from_function(f))
}

pub fn profile_from_json(s: &str) -> Result<RadialFunction> {
    let d: ProfileDescriptor = serde_json::from_str(s)?;
    d.into_function()
}

pub fn write_profile_csv<W: Write>(f: &RadialFunction, mut out: W) -> Result<()> {
    writeln!(out, "r,value")?;
    for (r, v) in f.grid.nodes.iter().zip(&f.values) {
        writeln!(out, "{r:.16e},{v:.16e}")?;
    }
    Ok(())
}

/// Parses `r,value` rows; returns the two columns.
pub fn read_profile_csv(s: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = s.lines();
    match lines.next() {
        Some(h) if h.trim() == "r,value" => {}
        other => return Err(Error::Parse(format!("bad CSV header {other:?}"))),
    }
    let mut rs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected two columns", i + 2)))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))
        };
        rs.push(parse(a)?);
        vs.push(parse(b)?);
    }
    Ok((rs, vs))
}

pub const PHASE_HEADER: &str =
    "p,q,verdict,regime,boundary,margin_weighted_sum,margin_sum_lower,margin_sum_critical,margin_p_critical";

pub fn write_phase_csv<W: Write>(rows: &[PhaseRow], mut out: W) -> Result<()> {
    writeln!(out, "{PHASE_HEADER}")?;
    for row in rows {
        let m = &row.margins;
        writeln!(
            out,
            "{:.16e},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.p,
            row.q,
            row.verdict.as_str(),
            row.regime,
            row.boundary,
            m.weighted_sum,
            m.sum_lower,
            m.sum_critical,
            m.p_critical
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, 1.0 / 3.0]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn profile_round_trip_is_bit_exact() {
        let grid = Arc::new(make_grid(1e-3, 1e2, 64, 3).unwrap());
        let f = RadialFunction::from_fn(grid, |r| (-r).exp() / r);
        let s = profile_to_json(&f).unwrap();
        let g = profile_from_json(&s).unwrap();
        assert_eq!(f.values, g.values);
        assert_eq!(f.origin, g.origin);
        assert_eq!(f.tail, g.tail);
        assert_eq!(f.grid.nodes, g.grid.nodes);
    }

    #[test]
    fn csv_round_trip() {
        let grid = Arc::new(make_grid(1e-3, 1e2, 32, 3).unwrap());
        let f = RadialFunction::from_fn(grid, |r| 1.0 / (1.0 + r));
        let mut buf = Vec::new();
        write_profile_csv(&f, &mut buf).unwrap();
        let (r, v) = read_profile_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(r, f.grid.nodes);
        assert_eq!(v, f.values);
        assert!(read_profile_csv("x,y\n1,2").is_err());
    }
}
