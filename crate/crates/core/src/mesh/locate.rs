use super::{signed_area2, Mesh, Point};

/// Bucket-grid point location over the triangles of a mesh.
#[derive(Debug, Clone)]
pub struct PointLocator<'m> {
    mesh: &'m Mesh,
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

const LOCATE_EPS: f64 = 1e-12;

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let side = (mesh.num_triangles() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = Self { mesh, origin: lo, cell, dims, buckets: vec![Vec::new(); side * side] };
        for t in 0..mesh.num_triangles() {
            let pts = mesh.triangle_points(t);
            let (mut tlo, mut thi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for d in 0..2 {
                    tlo[d] = tlo[d].min(p[d]);
                    thi[d] = thi[d].max(p[d]);
                }
            }
            let [i0, j0] = loc.bucket_of(tlo);
            let [i1, j1] = loc.bucket_of(thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(t);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: Point) -> [usize; 2] {
        let mut ij = [0; 2];
        for d in 0..2 {
            let x = ((p[d] - self.origin[d]) / self.cell[d]).floor();
            ij[d] = if x.is_nan() || x < 0.0 { 0 } else { (x as usize).min(self.dims[d] - 1) };
        }
        ij
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let [i, j] = self.bucket_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let [a, b, c] = self.mesh.triangle_points(t);
            let area2 = signed_area2(a, b, c);
            let lam = [signed_area2(p, b, c) / area2, signed_area2(a, p, c) / area2, signed_area2(a, b, p) / area2];
            let min = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if min >= -LOCATE_EPS && best.as_ref().is_none_or(|(_, _, m)| min > *m) {
                best = Some((t, lam, min));
            }
        }
        best.map(|(t, lam, _)| (t, lam))
    }

    /// Evaluates the P1 function with the given nodal values at `p`.
    pub fn evaluate(&self, values: &[f64], p: Point) -> Option<f64> {
        self.locate(p).map(|(t, lam)| {
            let tri = self.mesh.triangles()[t];
            lam[0] * values[tri[0]] + lam[1] * values[tri[1]] + lam[2] * values[tri[2]]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_rect_mesh;

    #[test]
    fn reproduces_linear_functions() {
        let m = generate_rect_mesh(5, 3, 2.0, 1.0).unwrap();
        let vals: Vec<f64> = m.vertices().iter().map(|p| 3.0 * p[0] - p[1] + 0.5).collect();
        let loc = PointLocator::new(&m);
        for &p in &[[0.0, 0.0], [2.0, 1.0], [0.37, 0.81], [1.234, 0.5], [1.0, 0.0]] {
            let v = loc.evaluate(&vals, p).unwrap();
            assert!((v - (3.0 * p[0] - p[1] + 0.5)).abs() < 1e-13);
        }
        assert!(loc.locate([3.0, 0.5]).is_none());
    }
}
