//! Object File Format reader.
//!
//! Accepts the ModelNet variant where the header keyword and the counts share
//! the first line (`OFF3 1 0` or `OFF 3 1 0`). Polygons with more than three
//! vertices are fan-triangulated. `#` starts a comment.

use std::path::Path;

use super::TriangleMesh;
use crate::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(header_line, format!("expected OFF header, found {header:?}")))?;
    let (count_line, counts) = if rest.trim().is_empty() {
        lines.next().ok_or_else(|| parse_err(header_line, "missing element counts"))?
    } else {
        (header_line, rest.trim())
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(count_line, format!("bad element counts {counts:?}: {e}")))?;
    if counts.len() < 2 {
        return Err(parse_err(count_line, format!("expected vertex and face counts, got {counts:?}")));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for v in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| parse_err(count_line, format!("file ends after {v} of {nv} vertices")))?;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad vertex: {e}")))?;
        if xyz.len() < 3 {
            return Err(parse_err(line, format!("vertex needs 3 coordinates, found {}", xyz.len())));
        }
        if xyz.iter().any(|c| !c.is_finite()) {
            return Err(parse_err(line, "non-finite vertex coordinate"));
        }
        vertices.push([xyz[0], xyz[1], xyz[2]]);
    }

    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| parse_err(count_line, format!("file ends after {f} of {nf} faces")))?;
        let mut tokens = l.split_whitespace();
        let arity: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(line, "face line must start with a vertex count"))?;
        if arity < 3 {
            return Err(parse_err(line, format!("face with {arity} vertices")));
        }
        let ids: Vec<usize> = tokens
            .take(arity)
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad face index: {e}")))?;
        if ids.len() != arity {
            return Err(parse_err(line, format!("face declares {arity} vertices but lists {}", ids.len())));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= nv) {
            return Err(parse_err(line, format!("vertex index {bad} out of range (0..{nv})")));
        }
        for w in 1..arity - 1 {
            faces.push([ids[0], ids[w], ids[w + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn read_off(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";

    #[test]
    fn minimal_file() {
        let m = parse_off(MINIMAL).unwrap();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn quad_is_fanned() {
        let m = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merged_header_matches_well_formed() {
        let merged = parse_off("OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        let spaced = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        let normal = parse_off(MINIMAL).unwrap();
        assert_eq!(merged, normal);
        assert_eq!(spaced, normal);
    }

    #[test]
    fn comments_and_colors_ignored() {
        let m = parse_off("# exported\nOFF\n# counts\n3 1 0\n0 0 0\n1 0 0\n\n0 1 0\n3 0 1 2 255 0 0\n").unwrap();
        assert_eq!(m.faces().len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        match parse_off("OFF\nthree 1 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_off("PLY\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0\n1 0 0\n0 1 0\n3 0 1 2\n"), Err(Error::Parse { line: 3, .. })));
    }
}
