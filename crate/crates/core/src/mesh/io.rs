use std::fmt::Write as _;

use super::{Mesh, Point};
use crate::error::{Error, Result};

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

/// Parses the `crmesh 2` ASCII format: header, counts, vertex lines `x y`,
/// then cell lines `i j k` with 0-based vertex indices. `#` starts a comment.
/// Clockwise cells are rejected, not reordered.
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = match lines.next() {
        Some(x) => x,
        None => return parse_err(1, "empty mesh file"),
    };
    let mut tok = header.split_whitespace();
    if tok.next() != Some("crmesh") {
        return parse_err(ln, "expected header `crmesh 2`");
    }
    match tok.next() {
        Some("2") => {}
        Some(d) => return parse_err(ln, format!("unsupported dimension {d}")),
        None => return parse_err(ln, "missing dimension in header"),
    }

    let (ln, counts) = match lines.next() {
        Some(x) => x,
        None => return parse_err(ln + 1, "missing `<nvertices> <ncells>` line"),
    };
    let counts = parse_fields::<usize>(ln, counts, 2)?;
    let (nv, nc) = (counts[0], counts[1]);

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, l) = match lines.next() {
            Some(x) => x,
            None => return parse_err(ln, format!("expected {nv} vertices, found {i}")),
        };
        let xy = parse_fields::<f64>(ln, l, 2)?;
        if !xy.iter().all(|c| c.is_finite()) {
            return parse_err(ln, "non-finite coordinate");
        }
        vertices.push([xy[0], xy[1]]);
    }
    let mut cells = Vec::with_capacity(nc);
    let mut cell_lines = Vec::with_capacity(nc);
    for i in 0..nc {
        let (ln, l) = match lines.next() {
            Some(x) => x,
            None => return parse_err(ln, format!("expected {nc} cells, found {i}")),
        };
        let c = parse_fields::<usize>(ln, l, 3)?;
        if let Some(&bad) = c.iter().find(|&&v| v >= nv) {
            return parse_err(ln, format!("vertex index {bad} out of range (nvertices = {nv})"));
        }
        cells.push([c[0], c[1], c[2]]);
        cell_lines.push(ln);
    }
    if let Some((ln, _)) = lines.next() {
        return parse_err(ln, "trailing content after the last cell");
    }
    Mesh::from_cells(vertices, cells).map_err(|e| match e {
        Error::DegenerateCell { cell, area } => Error::Parse {
            line: cell_lines[cell],
            msg: format!("cell {cell} is inverted or degenerate (signed area {area:e})"),
        },
        other => other,
    })
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str, n: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != n {
        return parse_err(line, format!("expected {n} fields, found {}", fields.len()));
    }
    fields
        .iter()
        .map(|f| f.parse::<T>().or_else(|_| parse_err(line, format!("cannot parse `{f}`"))))
        .collect()
}

/// Writes a mesh in the format accepted by [`read_mesh`], coordinates with 17
/// significant digits.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("crmesh 2\n");
    let _ = writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_cells());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e}", v[0], v[1]);
    }
    for c in mesh.cells() {
        let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured, Rect};

    #[test]
    fn single_triangle_file() {
        let m = read_mesh("crmesh 2\n3 1\n0 0\n1 0\n0 1\n0 1 2\n").unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_edges(), 3);
        assert_eq!(m.n_interior_edges(), 0);
    }

    #[test]
    fn duplicate_cell_rejected() {
        let text = "crmesh 2\n4 3\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n1 2 0\n";
        assert!(matches!(read_mesh(text), Err(Error::Nonconforming(_))));
    }

    #[test]
    fn inverted_cell_names_line() {
        let text = "crmesh 2\n# a comment\n3 1\n0 0\n1 0\n0 1\n0 2 1\n";
        match read_mesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_mesh("").is_err());
        assert!(read_mesh("mesh 2\n").is_err());
        assert!(read_mesh("crmesh 3\n").is_err());
        assert!(read_mesh("crmesh 2\n3 1\n0 0\n1 x\n0 1\n0 1 2\n").is_err());
        assert!(read_mesh("crmesh 2\n3 1\n0 0\n1 0\n0 1\n0 1 5\n").is_err());
        assert!(read_mesh("crmesh 2\n3 1\n0 0\n1 0\n0 1\n0 1 2\n9 9\n").is_err());
    }

    #[test]
    fn structured_square_round_trip() {
        let text = "crmesh 2\n4 2 # counts\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n";
        let read = read_mesh(text).unwrap();
        let built = build_structured(1, 1, Rect::unit()).unwrap();
        assert_eq!(read.canonical_form(), built.canonical_form());
        let again = read_mesh(&write_mesh(&built)).unwrap();
        assert_eq!(again, built);
    }
}
