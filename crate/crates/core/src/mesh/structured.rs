use super::{Mesh, Point};
use crate::error::{invalid, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }

    pub fn unit() -> Self {
        Rect { min: [0.0, 0.0], max: [1.0, 1.0] }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

/// Splits each of the `nx x ny` sub-rectangles along its lower-left to
/// upper-right diagonal. Vertices are numbered row by row from the bottom.
pub fn build_structured(nx: usize, ny: usize, rect: Rect) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return invalid(format!("structured mesh needs positive counts, got {nx} x {ny}"));
    }
    let (wx, wy) = (rect.max[0] - rect.min[0], rect.max[1] - rect.min[1]);
    if !(wx > 0.0 && wy > 0.0) || !wx.is_finite() || !wy.is_finite() {
        return invalid(format!("degenerate rectangle {:?}", rect));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                rect.min[0] + wx * i as f64 / nx as f64,
                rect.min[1] + wy * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    Mesh::from_cells(vertices, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_square() {
        let m = build_structured(1, 1, Rect::unit()).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_edges(), 5);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_interior_edges(), 1);
    }

    #[test]
    fn two_by_two_square() {
        let m = build_structured(2, 2, Rect::unit()).unwrap();
        assert_eq!(m.n_cells(), 8);
        assert_eq!(m.n_edges(), 16);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_structured(0, 3, Rect::unit()).is_err());
        assert!(build_structured(2, 2, Rect::new([0.0, 0.0], [1.0, 0.0])).is_err());
    }
}
