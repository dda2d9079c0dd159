//! Synthetic meshes and point samples for tests and experiments.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PointCloud, TriangleMesh, Vec3};

/// Planar `nx × ny` grid of squares with side `spacing` in the z = 0 plane,
/// each square split into two triangles.
pub fn grid_mesh(nx: usize, ny: usize, spacing: f64) -> TriangleMesh {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid grid")
}

/// Closed surface of the cube `[−½, ½]³` with every face subdivided into
/// `n × n` squares (two triangles each), outward oriented. It has
/// `6n² + 2` vertices and `12n²` faces.
pub fn box_mesh(n: usize) -> TriangleMesh {
    assert!(n >= 1);
    let mut ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces = Vec::with_capacity(12 * n * n);
    let h = 1.0 / n as f64;
    for axis in 0..3 {
        for &side in &[0, n] {
            // (u, v, axis) right-handed for the + side, swapped for the − side
            let (mut u, mut v) = ((axis + 1) % 3, (axis + 2) % 3);
            if side == 0 {
                std::mem::swap(&mut u, &mut v);
            }
            let mut vertex = |i: usize, j: usize| {
                let mut key = [0usize; 3];
                key[axis] = side;
                key[u] = i;
                key[v] = j;
                *ids.entry(key).or_insert_with(|| {
                    vertices.push(key.map(|k| k as f64 * h - 0.5));
                    vertices.len() - 1
                })
            };
            for j in 0..n {
                for i in 0..n {
                    let a = vertex(i, j);
                    let b = vertex(i + 1, j);
                    let c = vertex(i + 1, j + 1);
                    let d = vertex(i, j + 1);
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid box")
}

/// `n` points drawn uniformly from the surface of the cube `[−½, ½]³`.
pub fn sample_cube_surface(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let face = rng.random_range(0..6usize);
        let axis = face / 2;
        let mut p = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
        p[axis] = if face % 2 == 0 { -0.5 } else { 0.5 };
        coords.extend_from_slice(&p);
    }
    PointCloud::new(3, coords).expect("finite samples")
}

/// `n` points on the unit square `[0, 1]² × {0}` drawn by rejection from a
/// density proportional to `density(x, y)`, which must be bounded by
/// `max_density`.
pub fn sample_unit_square<F: Fn(f64, f64) -> f64>(
    n: usize,
    density: F,
    max_density: f64,
    seed: u64,
) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(3 * n);
    while coords.len() < 3 * n {
        let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
        if rng.random::<f64>() * max_density <= density(x, y) {
            coords.extend_from_slice(&[x, y, 0.0]);
        }
    }
    PointCloud::new(3, coords).expect("finite samples")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        for n in 1..5 {
            let m = box_mesh(n);
            assert_eq!(m.n_vertices(), 6 * n * n + 2);
            assert_eq!(m.n_faces(), 12 * n * n);
            // closed surface: every edge is shared by exactly two faces
            assert!((0..m.n_faces()).all(|f| m.face_adjacency(f).len() == 3));
        }
    }

    #[test]
    fn cube_samples_on_surface() {
        let c = sample_cube_surface(500, 1);
        for p in c.points() {
            assert!(p.iter().any(|x| (x.abs() - 0.5).abs() < 1e-15));
            assert!(p.iter().all(|x| x.abs() <= 0.5));
        }
    }
}
