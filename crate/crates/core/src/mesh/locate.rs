use super::{Mesh, Point};
use crate::mesh::GeometryTables;

/// Bucket grid over the mesh bounding box for point-in-cell queries.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    geo: &'a GeometryTables,
    min: Point,
    max: Point,
    nx: usize,
    ny: usize,
    cell_size: [f64; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh, geo: &'a GeometryTables) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in mesh.vertices() {
            for d in 0..2 {
                min[d] = min[d].min(v[d]);
                max[d] = max[d].max(v[d]);
            }
        }
        let n = ((mesh.n_cells() as f64).sqrt().ceil() as usize).max(1);
        let (nx, ny) = (n, n);
        let cell_size = [
            ((max[0] - min[0]) / nx as f64).max(f64::MIN_POSITIVE),
            ((max[1] - min[1]) / ny as f64).max(f64::MIN_POSITIVE),
        ];
        let mut buckets = vec![Vec::new(); nx * ny];
        for k in 0..mesh.n_cells() {
            let p = mesh.cell_points(k);
            let lo = [
                p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min),
                p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min),
            ];
            let hi = [
                p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max),
                p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max),
            ];
            let (i0, j0) = Self::bucket_of(min, cell_size, nx, ny, lo);
            let (i1, j1) = Self::bucket_of(min, cell_size, nx, ny, hi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k);
                }
            }
        }
        PointLocator { mesh, geo, min, max, nx, ny, cell_size, buckets }
    }

    fn bucket_of(min: Point, size: [f64; 2], nx: usize, ny: usize, x: Point) -> (usize, usize) {
        let i = (((x[0] - min[0]) / size[0]).floor().max(0.0) as usize).min(nx - 1);
        let j = (((x[1] - min[1]) / size[1]).floor().max(0.0) as usize).min(ny - 1);
        (i, j)
    }

    /// Cell containing `x` together with its barycentric coordinates, or `None`
    /// outside the mesh. Points on shared edges resolve to one of the cells.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        let tol = 1e-12;
        if x[0] < self.min[0] - tol
            || x[0] > self.max[0] + tol
            || x[1] < self.min[1] - tol
            || x[1] > self.max[1] + tol
        {
            return None;
        }
        let (i, j) = Self::bucket_of(self.min, self.cell_size, self.nx, self.ny, x);
        for &k in &self.buckets[j * self.nx + i] {
            let lam = barycentric_coords(self.mesh, self.geo, k, x);
            if lam.iter().all(|&l| l >= -tol) {
                return Some((k, lam));
            }
        }
        None
    }
}

/// Barycentric coordinates of `x` with respect to `cell`.
pub fn barycentric_coords(mesh: &Mesh, geo: &GeometryTables, cell: usize, x: Point) -> [f64; 3] {
    let p = mesh.cell_points(cell);
    let g = &geo.bary_gradients[cell];
    let mut lam = [0.0; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        lam[i] = g[i][0] * (x[0] - a[0]) + g[i][1] * (x[1] - a[1]);
    }
    lam
}
