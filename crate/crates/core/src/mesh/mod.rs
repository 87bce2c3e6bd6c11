//! Conforming triangulations of polygonal domains.
//!
//! A [`Mesh`] is validated once at construction (orientation, manifold edges,
//! connectivity) and immutable afterwards. Every mesh carries a process-unique
//! id so that nodal fields and assembled operators can be checked against the
//! mesh they were built on.

mod acute;
mod io;
mod locate;

pub use acute::{check_weak_acuteness, AcutenessReport, TOL_ANGLE, TOL_MAT_FACTOR};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use locate::PointLocator;

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

pub type Point = [f64; 2];

/// An undirected mesh edge with its (one or two) neighbouring triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    id: u64,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    edges: Vec<Edge>,
    boundary_edges: Vec<[usize; 2]>,
    h_global: f64,
    h_min: f64,
}

/// Twice the signed area of the triangle (a, b, c).
pub fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Mesh {
    /// Validates and builds a mesh. Clockwise triangles are reoriented.
    pub fn new(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let nv = vertices.len();
        if let Some(i) = vertices.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::NonFiniteVertex(i));
        }

        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &index in tri.iter() {
                if index >= nv {
                    return Err(Error::IndexOutOfRange { triangle: t, index, count: nv });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    reason: format!("repeated vertex in ({}, {}, {})", tri[0], tri[1], tri[2]),
                });
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            let mut area2 = signed_area2(a, b, c);
            let scale = dist(a, b).max(dist(b, c)).max(dist(c, a));
            if area2.abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateTriangle { triangle: t, reason: "zero area".to_string() });
            }
            if area2 < 0.0 {
                tri.swap(1, 2);
                area2 = -area2;
            }
            areas.push(0.5 * area2);
        }

        let (edges, boundary_edges) = build_edges(&triangles)?;

        let mut used = vec![false; nv];
        for tri in &triangles {
            for &i in tri {
                used[i] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::UnreferencedVertex(i));
        }

        let components = count_components(nv, &triangles);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }

        let diameters = triangles.iter().map(|tri| {
            let [a, b, c] = tri.map(|i| vertices[i]);
            dist(a, b).max(dist(b, c)).max(dist(c, a))
        });
        let (h_min, h_global) = diameters.fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));

        Ok(Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            vertices,
            triangles,
            areas,
            edges,
            boundary_edges,
            h_global,
            h_min,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Counterclockwise vertex triples.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        crate::sum::compensated_sum(self.areas.iter().copied())
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Boundary edges oriented as in their (counterclockwise) triangle.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Maximum element diameter.
    pub fn h_global(&self) -> f64 {
        self.h_global
    }

    /// Minimum element diameter.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn quasi_uniformity_ratio(&self) -> f64 {
        self.h_global / self.h_min
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }
}

fn build_edges(triangles: &[[usize; 3]]) -> Result<(Vec<Edge>, Vec<[usize; 2]>)> {
    // (min, max, triangle, directed a, directed b)
    let mut half: Vec<(usize, usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for l in 0..3 {
            let a = tri[l];
            let b = tri[(l + 1) % 3];
            half.push((a.min(b), a.max(b), t, a, b));
        }
    }
    half.sort_unstable();

    let mut edges = Vec::new();
    let mut boundary = Vec::new();
    let mut i = 0;
    while i < half.len() {
        let (lo, hi) = (half[i].0, half[i].1);
        let mut j = i;
        while j < half.len() && half[j].0 == lo && half[j].1 == hi {
            j += 1;
        }
        match j - i {
            1 => {
                edges.push(Edge { vertices: [lo, hi], triangles: [Some(half[i].2), None] });
                boundary.push([half[i].3, half[i].4]);
            }
            2 => {
                if half[i].3 == half[i + 1].3 {
                    // both neighbours traverse the edge in the same direction
                    return Err(Error::NonManifoldEdge { a: lo, b: hi, count: 2 });
                }
                edges.push(Edge { vertices: [lo, hi], triangles: [Some(half[i].2), Some(half[i + 1].2)] });
            }
            count => return Err(Error::NonManifoldEdge { a: lo, b: hi, count }),
        }
        i = j;
    }
    Ok((edges, boundary))
}

fn count_components(nv: usize, triangles: &[[usize; 3]]) -> usize {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for tri in triangles {
        let r0 = find(&mut parent, tri[0]);
        for &v in &tri[1..] {
            let r = find(&mut parent, v);
            if r != r0 {
                parent[r] = r0;
            }
        }
    }
    (0..nv).filter(|&i| find(&mut parent, i) == i).count()
}

/// Uniform `nx × ny` grid on `[0, lx] × [0, ly]`, every cell split along the
/// same (lower-left to upper-right) diagonal.
///
/// Vertex `(i, j)` has index `j (nx + 1) + i` and coordinates
/// `(i·lx/nx, j·ly/ny)`; refining `nx → 2nx` reproduces every coarse
/// coordinate bit-for-bit.
pub fn generate_rect_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!("nx, ny must be >= 1 (got {nx}, {ny})")));
    }
    if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
        return Err(Error::InvalidArgument(format!("lx, ly must be positive (got {lx}, {ly})")));
    }
    let nvx = nx.checked_add(1).ok_or_else(|| Error::Overflow("nx + 1".into()))?;
    let nvy = ny.checked_add(1).ok_or_else(|| Error::Overflow("ny + 1".into()))?;
    let nv = nvx.checked_mul(nvy).ok_or_else(|| Error::Overflow("vertex count".into()))?;
    let nt =
        nx.checked_mul(ny).and_then(|c| c.checked_mul(2)).ok_or_else(|| Error::Overflow("triangle count".into()))?;
    // each triangle needs three u32-addressable entries in external formats
    if nt > (u32::MAX as usize) / 3 {
        return Err(Error::Overflow(format!("{nt} triangles")));
    }

    let coord = |i: usize, n: usize, l: f64| if i == n { l } else { (i as f64 * l) / n as f64 };
    let mut vertices = Vec::with_capacity(nv);
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([coord(i, nx, lx), coord(j, ny, ly)]);
        }
    }
    let idx = |i: usize, j: usize| j * nvx + i;
    let mut triangles = Vec::with_capacity(nt);
    for j in 0..ny {
        for i in 0..nx {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut mesh = Mesh::new(vertices, triangles)?;
    // all cells are congruent: the diameter is the cell diagonal
    let diag = (lx / nx as f64).hypot(ly / ny as f64);
    mesh.h_global = diag;
    mesh.h_min = diag;
    Ok(mesh)
}
