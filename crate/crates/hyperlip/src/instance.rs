//! Line-oriented text formats for instances and point samples.
//!
//! An instance file carries a finite map plus optional challenge points:
//!
//! ```text
//! # comments run to end of line
//! dim 2
//! curvature -1
//! declared_c 5.0000000000000000e-1
//! pair <m+1 source coords> <m+1 target coords>
//! challenge <m+1 coords>
//! ```
//!
//! A sample file replaces `declared_c`/`pair`/`challenge` with `point`
//! lines. All floats are written with 17 significant digits, so values
//! round-trip bit-exactly through the text form.

use crate::error::{Error, Result};
use crate::geometry::HPoint;
use crate::solver::PartialMap;
use std::path::Path;

/// A parsed instance: the finite map and the challenge points to extend to.
#[derive(Debug, Clone)]
pub struct Instance {
    pub map: PartialMap,
    pub challenges: Vec<HPoint>,
}

/// Formats a float with 17 significant digits, enough to reproduce the
/// exact f64 on parse.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn tokenize(text: &str) -> Lines<'_> {
    let rows = text
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.is_empty() {
                None
            } else {
                Some((i + 1, tokens))
            }
        })
        .collect();
    Lines { rows }
}

fn parse_floats(path: &str, line: usize, tokens: &[&str], expected: usize) -> Result<Vec<f64>> {
    if tokens.len() != expected {
        return Err(parse_err(
            path,
            line,
            format!("expected {expected} numbers, found {}", tokens.len()),
        ));
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("not a number: {t}")))
        })
        .collect()
}

struct Header {
    dim: Option<(usize, usize)>,
    curvature_seen: bool,
}

impl Header {
    fn require_dim(&self, path: &str, line: usize) -> Result<usize> {
        match self.dim {
            Some((m, _)) => Ok(m),
            None => Err(parse_err(path, line, "dim must be declared first")),
        }
    }

    fn finish(&self, path: &str) -> Result<()> {
        if self.dim.is_none() {
            return Err(parse_err(path, 0, "missing dim line"));
        }
        if !self.curvature_seen {
            return Err(parse_err(path, 0, "missing curvature line"));
        }
        Ok(())
    }
}

fn parse_header_line(
    header: &mut Header,
    path: &str,
    line: usize,
    tokens: &[&str],
) -> Result<bool> {
    match tokens[0] {
        "dim" => {
            if header.dim.is_some() {
                return Err(parse_err(path, line, "duplicate dim line"));
            }
            let vals = parse_floats(path, line, &tokens[1..], 1)?;
            let m = vals[0];
            if m < 1.0 || m.fract() != 0.0 || m > 64.0 {
                return Err(parse_err(path, line, "dim must be an integer in [1, 64]"));
            }
            header.dim = Some((m as usize, line));
            Ok(true)
        }
        "curvature" => {
            if header.curvature_seen {
                return Err(parse_err(path, line, "duplicate curvature line"));
            }
            let vals = parse_floats(path, line, &tokens[1..], 1)?;
            if vals[0] != -1.0 {
                return Err(parse_err(path, line, "curvature must be -1"));
            }
            header.curvature_seen = true;
            Ok(true)
        }
        _ => Ok(false),
    }
}

fn point_from(path: &str, line: usize, coords: Vec<f64>) -> Result<HPoint> {
    HPoint::new(coords).map_err(|e| parse_err(path, line, format!("bad point: {e}")))
}

/// Parses an instance from text; `path` labels error messages only.
pub fn parse_instance(text: &str, path: &str) -> Result<Instance> {
    let lines = tokenize(text);
    let mut header = Header {
        dim: None,
        curvature_seen: false,
    };
    let mut declared_c: Option<f64> = None;
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    let mut challenges = Vec::new();
    for (line, tokens) in &lines.rows {
        let (line, tokens) = (*line, tokens.as_slice());
        if parse_header_line(&mut header, path, line, tokens)? {
            continue;
        }
        match tokens[0] {
            "declared_c" => {
                if declared_c.is_some() {
                    return Err(parse_err(path, line, "duplicate declared_c line"));
                }
                declared_c = Some(parse_floats(path, line, &tokens[1..], 1)?[0]);
            }
            "pair" => {
                let m = header.require_dim(path, line)?;
                let vals = parse_floats(path, line, &tokens[1..], 2 * (m + 1))?;
                sources.push(point_from(path, line, vals[..m + 1].to_vec())?);
                targets.push(point_from(path, line, vals[m + 1..].to_vec())?);
            }
            "challenge" => {
                let m = header.require_dim(path, line)?;
                let vals = parse_floats(path, line, &tokens[1..], m + 1)?;
                challenges.push(point_from(path, line, vals)?);
            }
            other => {
                return Err(parse_err(path, line, format!("unknown keyword: {other}")));
            }
        }
    }
    header.finish(path)?;
    let declared_c =
        declared_c.ok_or_else(|| parse_err(path, 0, "missing declared_c line"))?;
    if sources.is_empty() {
        return Err(parse_err(path, 0, "instance has no pair lines"));
    }
    let map = PartialMap::new(sources, targets, declared_c)
        .map_err(|e| parse_err(path, 0, format!("invalid map: {e}")))?;
    Ok(Instance { map, challenges })
}

/// Parses a sample (point list) from text.
pub fn parse_sample(text: &str, path: &str) -> Result<Vec<HPoint>> {
    let lines = tokenize(text);
    let mut header = Header {
        dim: None,
        curvature_seen: false,
    };
    let mut points = Vec::new();
    for (line, tokens) in &lines.rows {
        let (line, tokens) = (*line, tokens.as_slice());
        if parse_header_line(&mut header, path, line, tokens)? {
            continue;
        }
        match tokens[0] {
            "point" => {
                let m = header.require_dim(path, line)?;
                let vals = parse_floats(path, line, &tokens[1..], m + 1)?;
                points.push(point_from(path, line, vals)?);
            }
            other => {
                return Err(parse_err(path, line, format!("unknown keyword: {other}")));
            }
        }
    }
    header.finish(path)?;
    if points.is_empty() {
        return Err(parse_err(path, 0, "sample has no point lines"));
    }
    Ok(points)
}

fn push_coords(out: &mut String, coords: &[f64]) {
    for c in coords {
        out.push(' ');
        out.push_str(&fmt_float(*c));
    }
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("dim {}\n", inst.map.dim()));
    out.push_str("curvature -1\n");
    out.push_str(&format!(
        "declared_c {}\n",
        fmt_float(inst.map.declared_c())
    ));
    for (s, t) in inst.map.sources().iter().zip(inst.map.targets()) {
        out.push_str("pair");
        push_coords(&mut out, s.coords());
        push_coords(&mut out, t.coords());
        out.push('\n');
    }
    for c in &inst.challenges {
        out.push_str("challenge");
        push_coords(&mut out, c.coords());
        out.push('\n');
    }
    out
}

pub fn write_sample(dim: usize, points: &[HPoint]) -> String {
    let mut out = String::new();
    out.push_str(&format!("dim {dim}\n"));
    out.push_str("curvature -1\n");
    for p in points {
        out.push_str("point");
        push_coords(&mut out, p.coords());
        out.push('\n');
    }
    out
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text, &path.display().to_string())
}

pub fn read_sample(path: &Path) -> Result<Vec<HPoint>> {
    let text = std::fs::read_to_string(path)?;
    parse_sample(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_map, TangentVec};
    use crate::sampling::{sample_ball, seeded_rng};

    fn o() -> HPoint {
        HPoint::basepoint(2)
    }

    fn shoot(v: &[f64]) -> HPoint {
        let tv = TangentVec::new(o(), v.to_vec()).unwrap();
        exp_map(&o(), &tv).unwrap()
    }

    #[test]
    fn instances_round_trip_bit_exactly() {
        let mut rng = seeded_rng(5);
        let sources = sample_ball(&mut rng, &o(), 2.0, 6).unwrap();
        let targets: Vec<HPoint> = sources
            .iter()
            .map(|p| crate::bounds::radial_homothety(&o(), 0.5, p).unwrap())
            .collect();
        let map = PartialMap::new(sources, targets, 0.5).unwrap();
        let inst = Instance {
            map,
            challenges: vec![o(), shoot(&[0.0, 0.3, -0.2])],
        };
        let text = write_instance(&inst);
        let back = parse_instance(&text, "test").unwrap();
        assert_eq!(back.map.sources(), inst.map.sources());
        assert_eq!(back.map.targets(), inst.map.targets());
        assert_eq!(back.map.declared_c(), inst.map.declared_c());
        assert_eq!(back.challenges, inst.challenges);
    }

    #[test]
    fn samples_round_trip_bit_exactly() {
        let mut rng = seeded_rng(9);
        let pts = sample_ball(&mut rng, &o(), 1.5, 20).unwrap();
        let text = write_sample(2, &pts);
        let back = parse_sample(&text, "test").unwrap();
        assert_eq!(back, pts);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# full-line comment\ndim 1\ncurvature -1  # trailing\n\ndeclared_c 1.0\npair 1.0 0.0 1.0 0.0\n";
        let inst = parse_instance(text, "test").unwrap();
        assert_eq!(inst.map.len(), 1);
        assert!(inst.challenges.is_empty());
    }

    #[test]
    fn malformed_files_report_the_offending_line() {
        let missing_dim = "curvature -1\ndeclared_c 1.0\npair 1.0 0.0 1.0 0.0\n";
        match parse_instance(missing_dim, "test") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let bad_curvature = "dim 1\ncurvature 0\n";
        assert!(matches!(
            parse_instance(bad_curvature, "test"),
            Err(Error::Parse { line: 2, .. })
        ));
        let wrong_count = "dim 2\ncurvature -1\ndeclared_c 1.0\npair 1.0 0.0 0.0\n";
        assert!(matches!(
            parse_instance(wrong_count, "test"),
            Err(Error::Parse { line: 4, .. })
        ));
        let off_sheet = "dim 1\ncurvature -1\npoint 1.0 0.5\n";
        assert!(matches!(
            parse_sample(off_sheet, "test"),
            Err(Error::Parse { line: 3, .. })
        ));
        let unknown = "dim 1\ncurvature -1\nfrobnicate 1\n";
        assert!(parse_sample(unknown, "test").is_err());
    }

    #[test]
    fn invalid_maps_are_rejected_at_parse_time() {
        // Images 4 apart, sources 2 apart, declared 1.0.
        let text = format!(
            "dim 1\ncurvature -1\ndeclared_c 1.0\npair {} {} {} {}\npair {} {} {} {}\n",
            fmt_float(1.0_f64.cosh()),
            fmt_float(1.0_f64.sinh()),
            fmt_float(2.0_f64.cosh()),
            fmt_float(2.0_f64.sinh()),
            fmt_float(1.0_f64.cosh()),
            fmt_float(-1.0_f64.sinh()),
            fmt_float(2.0_f64.cosh()),
            fmt_float(-2.0_f64.sinh()),
        );
        assert!(parse_instance(&text, "test").is_err());
    }
}
