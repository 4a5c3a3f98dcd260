//! CSV dumps of discrete fields. Values carry 17 significant digits.

use std::fmt::Write as _;

use super::{CRFunction, CellField, VelocityField};
use crate::error::{Error, Result};

pub fn velocity_csv(u: &VelocityField) -> String {
    let mut out = String::from("edge_id,component,value\n");
    let n = u.components[0].values.len();
    for e in 0..n {
        for (c, comp) in u.components.iter().enumerate() {
            let _ = writeln!(out, "{e},{c},{:.16e}", comp.values[e]);
        }
    }
    out
}

pub fn scalar_csv(v: &CRFunction) -> String {
    let mut out = String::from("edge_id,component,value\n");
    for (e, x) in v.values.iter().enumerate() {
        let _ = writeln!(out, "{e},0,{x:.16e}");
    }
    out
}

pub fn cell_csv(q: &CellField) -> String {
    let mut out = String::from("cell_id,value\n");
    for (k, x) in q.values.iter().enumerate() {
        let _ = writeln!(out, "{k},{x:.16e}");
    }
    out
}

fn data_lines(text: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((i, _)) => return Err(Error::Parse { line: i + 1, msg: format!("expected header `{header}`") }),
        None => return Err(Error::Parse { line: 1, msg: "empty field file".into() }),
    }
    Ok(lines.map(|(i, l)| (i + 1, l.split(',').map(|s| s.trim().to_string()).collect())).collect())
}

fn field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse `{s}`") })
}

/// Reads a velocity dump for a mesh with `n_edges` edges.
pub fn read_velocity_csv(text: &str, n_edges: usize) -> Result<VelocityField> {
    let mut comps = [vec![0.0; n_edges], vec![0.0; n_edges]];
    for (line, cols) in data_lines(text, "edge_id,component,value")? {
        if cols.len() != 3 {
            return Err(Error::Parse { line, msg: "expected 3 columns".into() });
        }
        let e: usize = field(line, &cols[0])?;
        let c: usize = field(line, &cols[1])?;
        if e >= n_edges || c > 1 {
            return Err(Error::Parse { line, msg: format!("index ({e}, {c}) out of range") });
        }
        comps[c][e] = field(line, &cols[2])?;
    }
    let [a, b] = comps;
    Ok(VelocityField { components: [CRFunction::from_values(a), CRFunction::from_values(b)] })
}

pub fn read_cell_csv(text: &str, n_cells: usize) -> Result<CellField> {
    let mut values = vec![0.0; n_cells];
    for (line, cols) in data_lines(text, "cell_id,value")? {
        if cols.len() != 2 {
            return Err(Error::Parse { line, msg: "expected 2 columns".into() });
        }
        let k: usize = field(line, &cols[0])?;
        if k >= n_cells {
            return Err(Error::Parse { line, msg: format!("cell {k} out of range") });
        }
        values[k] = field(line, &cols[1])?;
    }
    Ok(CellField::from_values(values))
}
