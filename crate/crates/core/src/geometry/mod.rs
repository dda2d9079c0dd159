//! Point clouds, triangle meshes, spatial indexing, file I/O and the
//! corruption utilities used by the experiments.
//!
//! All random operations take a `u64` seed and draw from `ChaCha8Rng`
//! (`rand_chacha`), whose output stream is fixed across platforms.

mod corrupt;
pub mod io;
mod kdtree;
pub mod shapes;

pub use corrupt::{
    corrupt_gaussian_mixture, corrupt_gaussian_mixture_labeled, corrupt_vertices_uniform,
};
pub use io::{load_mesh, load_points, save_mesh, save_points, FileFormat};
pub use kdtree::KdTree;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// An ordered set of `dim`-dimensional points with optional positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Size(format!(
                "{} coordinates do not form {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate in point {}", i / dim)));
        }
        Ok(Self {
            dim,
            coords,
            weights: None,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            coords: Vec::new(),
            weights: None,
        }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::Size(format!("point {i} has {} coordinates, expected {dim}", p.len())));
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// Attaches per-point weights, which must be positive and finite.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::Size(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("weight {w} is not positive")));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn without_weights(mut self) -> Self {
        self.weights = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Row-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Weight of point `i`, 1 when the cloud is unweighted.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn centroid(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::EmptyInput("centroid of an empty cloud"));
        }
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|ci| *ci /= n);
        Ok(c)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return Err(Error::EmptyInput("bounding box of an empty cloud"));
        }
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Ok((lo, hi))
    }
}

/// Length of the bounding box diagonal.
pub fn bbox_diagonal(cloud: &PointCloud) -> Result<f64> {
    let (lo, hi) = cloud.bounding_box()?;
    Ok(lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt())
}

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// Triangle mesh with per-face unit normals and edge adjacency.
///
/// Faces with zero area keep a zero normal and are reported by
/// [`TriangleMesh::is_degenerate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_normals: Vec<Vec3>,
    degenerate: Vec<bool>,
    face_adjacency: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(v) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid(format!("vertex {v} has a non-finite coordinate")));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Topology(format!(
                    "face {i} references a vertex outside 0..{}",
                    vertices.len()
                )));
            }
        }
        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        for (i, f) in faces.iter().enumerate() {
            for &v in f {
                if !vertex_faces[v].contains(&i) {
                    vertex_faces[v].push(i);
                }
            }
        }
        let face_adjacency = edge_adjacency(&faces);
        let mut mesh = Self {
            vertices,
            faces,
            face_normals: Vec::new(),
            degenerate: Vec::new(),
            face_adjacency,
            vertex_faces,
        };
        mesh.recompute_normals();
        let n_degenerate = mesh.degenerate.iter().filter(|&&d| d).count();
        if n_degenerate > 0 {
            log::warn!("{n_degenerate} degenerate (zero-area) faces; their normals are zero");
        }
        Ok(mesh)
    }

    fn recompute_normals(&mut self) {
        self.face_normals.clear();
        self.degenerate.clear();
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.vertices[i]);
            let n = cross3(&sub3(&b, &a), &sub3(&c, &a));
            let len = norm3(&n);
            if len > 0.0 && len.is_finite() {
                self.face_normals.push([n[0] / len, n[1] / len, n[2] / len]);
                self.degenerate.push(false);
            } else {
                self.face_normals.push([0.0; 3]);
                self.degenerate.push(true);
            }
        }
    }

    /// Same connectivity with new vertex positions; normals are recomputed.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Topology(format!(
                "{} vertices given for a mesh with {}",
                vertices.len(),
                self.vertices.len()
            )));
        }
        let mut mesh = self.clone();
        mesh.vertices = vertices;
        mesh.recompute_normals();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[Vec3] {
        &self.face_normals
    }

    pub fn is_degenerate(&self, face: usize) -> bool {
        self.degenerate[face]
    }

    /// Faces sharing an edge with `face`.
    pub fn face_adjacency(&self, face: usize) -> &[usize] {
        &self.face_adjacency[face]
    }

    /// Faces incident to `vertex`.
    pub fn vertex_faces(&self, vertex: usize) -> &[usize] {
        &self.vertex_faces[vertex]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.faces[face].map(|i| self.vertices[i]);
        [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face].map(|i| self.vertices[i]);
        0.5 * norm3(&cross3(&sub3(&b, &a), &sub3(&c, &a)))
    }

    /// Unique undirected edges as sorted vertex pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Mean length of the unique edges.
    pub fn mean_edge_length(&self) -> Result<f64> {
        let edges = self.edges();
        if edges.is_empty() {
            return Err(Error::EmptyInput("mesh has no edges"));
        }
        let total: f64 = edges
            .iter()
            .map(|&(a, b)| norm3(&sub3(&self.vertices[a], &self.vertices[b])))
            .sum();
        Ok(total / edges.len() as f64)
    }

    pub fn to_point_cloud(&self) -> PointCloud {
        let coords = self.vertices.iter().flatten().copied().collect();
        PointCloud::new(3, coords).expect("mesh vertices are finite")
    }
}

fn edge_adjacency(faces: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            if a != b {
                by_edge.entry((a.min(b), a.max(b))).or_default().push(i);
            }
        }
    }
    let mut adjacency = vec![Vec::new(); faces.len()];
    for shared in by_edge.values() {
        for &i in shared {
            for &j in shared {
                if i != j && !adjacency[i].contains(&j) {
                    adjacency[i].push(j);
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    adjacency
}

/// Faces reachable from `face` through edge-adjacent faces whose centroids
/// all stay within distance `r` of the seed centroid. The seed comes first.
pub fn geodesic_face_neighborhood(mesh: &TriangleMesh, face: usize, r: f64) -> Result<Vec<usize>> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("neighborhood radius {r} must be positive")));
    }
    if face >= mesh.n_faces() {
        return Err(Error::Topology(format!("face {face} out of range")));
    }
    let seed = mesh.face_centroid(face);
    let r2 = r * r;
    let mut visited = vec![false; mesh.n_faces()];
    let mut out = vec![face];
    let mut queue = VecDeque::from([face]);
    visited[face] = true;
    while let Some(f) = queue.pop_front() {
        for &g in mesh.face_adjacency(f) {
            if visited[g] {
                continue;
            }
            visited[g] = true;
            let c = mesh.face_centroid(g);
            let d = sub3(&c, &seed);
            if dot3(&d, &d) <= r2 {
                out.push(g);
                queue.push_back(g);
            }
        }
    }
    Ok(out)
}
