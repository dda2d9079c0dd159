//! Quality metrics: point regularity, point-to-surface distance, angular
//! distance between face normals and mean density.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{dot3, sub3, KdTree, PointCloud, TriangleMesh, Vec3};
use crate::kernels::KernelParams;
use crate::meanshift::Kde;
use crate::specfun::ln_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    pub units: String,
    pub n: usize,
}

impl MetricReport {
    pub fn new(name: impl Into<String>, value: f64, units: impl Into<String>, n: usize) -> Self {
        Self {
            name: name.into(),
            value,
            units: units.into(),
            n,
        }
    }
}

/// CSV with header `name,value,units,n`.
pub fn reports_csv(rows: &[MetricReport]) -> String {
    let mut out = String::from("name,value,units,n\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.17e},{},{}", r.name, r.value, r.units, r.n);
    }
    out
}

/// Pairwise summation keeps reductions reproducible and accurate.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Standard deviation of the nearest neighbour distances
/// `d(qᵢ, Q ∖ {qᵢ})`.
pub fn regularity(q: &PointCloud) -> Result<f64> {
    if q.len() < 2 {
        return Err(Error::Size(format!("regularity needs at least 2 points, got {}", q.len())));
    }
    let tree = KdTree::new(q);
    let d: Vec<f64> = q
        .points()
        .enumerate()
        .map(|(i, p)| tree.nearest_excluding(p, i).expect("at least two points").1.sqrt())
        .collect();
    let m = mean(&d);
    let dev: Vec<f64> = d.iter().map(|x| (x - m) * (x - m)).collect();
    Ok(mean(&dev).sqrt())
}

/// Exact distance from `p` to triangle `(a, b, c)`.
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    // Region classification after Ericson, "Real-Time Collision Detection".
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(&ab, &ap);
    let d2 = dot3(&ac, &ap);
    let closest = if d1 <= 0.0 && d2 <= 0.0 {
        *a
    } else {
        let bp = sub3(p, b);
        let d3 = dot3(&ab, &bp);
        let d4 = dot3(&ac, &bp);
        if d3 >= 0.0 && d4 <= d3 {
            *b
        } else {
            let cp = sub3(p, c);
            let d5 = dot3(&ab, &cp);
            let d6 = dot3(&ac, &cp);
            let vc = d1 * d4 - d3 * d2;
            let vb = d5 * d2 - d1 * d6;
            let va = d3 * d6 - d5 * d4;
            let lerp = |o: &Vec3, e: &Vec3, t: f64| [o[0] + t * e[0], o[1] + t * e[1], o[2] + t * e[2]];
            if d6 >= 0.0 && d5 <= d6 {
                *c
            } else if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
                lerp(a, &ab, d1 / (d1 - d3))
            } else if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
                lerp(a, &ac, d2 / (d2 - d6))
            } else if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
                lerp(b, &sub3(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6)))
            } else {
                let denom = va + vb + vc;
                if denom == 0.0 {
                    // degenerate triangle: fall back to its edges
                    let seg = |o: &Vec3, e: &Vec3| {
                        let l = dot3(e, e);
                        let t = if l > 0.0 { (dot3(&sub3(p, o), e) / l).clamp(0.0, 1.0) } else { 0.0 };
                        let q = lerp(o, e, t);
                        let d = sub3(p, &q);
                        dot3(&d, &d)
                    };
                    let best = seg(a, &ab).min(seg(a, &ac)).min(seg(b, &sub3(c, b)));
                    return best.sqrt();
                }
                let v = vb / denom;
                let w = vc / denom;
                [
                    a[0] + ab[0] * v + ac[0] * w,
                    a[1] + ab[1] * v + ac[1] * w,
                    a[2] + ab[2] * v + ac[2] * w,
                ]
            }
        }
    };
    let d = sub3(p, &closest);
    dot3(&d, &d).sqrt()
}

/// Mean over the points of the exact distance to the closest triangle.
pub fn point_surface_distance(x: &PointCloud, mesh: &TriangleMesh) -> Result<f64> {
    if x.is_empty() || mesh.n_faces() == 0 {
        return Err(Error::Size("point-surface distance needs points and faces".into()));
    }
    if x.dim() != 3 {
        return Err(Error::Size(format!("points are {}-dimensional", x.dim())));
    }
    // Candidate faces come from a centroid tree: a face whose centroid is
    // farther than (current best + face radius) cannot be closer.
    let centroids: Vec<f64> = (0..mesh.n_faces()).flat_map(|f| mesh.face_centroid(f)).collect();
    let radius: Vec<f64> = (0..mesh.n_faces())
        .map(|f| {
            let c = mesh.face_centroid(f);
            mesh.faces()[f]
                .iter()
                .map(|&v| {
                    let d = sub3(&mesh.vertices()[v], &c);
                    dot3(&d, &d).sqrt()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let max_radius = radius.iter().copied().fold(0.0, f64::max);
    let tree = KdTree::from_coords(3, &centroids);
    let tri = |f: usize| mesh.faces()[f].map(|v| mesh.vertices()[v]);
    let dists: Vec<f64> = x
        .points()
        .map(|p| {
            let p = [p[0], p[1], p[2]];
            let (f0, _) = tree.nearest(&p).expect("non-empty mesh");
            let [a, b, c] = tri(f0);
            let mut best = point_triangle_distance(&p, &a, &b, &c);
            tree.for_each_in_radius(&p, best + max_radius, |f, _| {
                let [a, b, c] = tri(f);
                best = best.min(point_triangle_distance(&p, &a, &b, &c));
            });
            best
        })
        .collect();
    Ok(mean(&dists))
}

/// Mean angle in degrees between corresponding face normals.
pub fn mean_angular_distance(a: &TriangleMesh, b: &TriangleMesh) -> Result<f64> {
    if a.n_faces() != b.n_faces() {
        return Err(Error::Topology(format!(
            "meshes have {} and {} faces",
            a.n_faces(),
            b.n_faces()
        )));
    }
    if a.n_faces() == 0 {
        return Err(Error::EmptyInput("meshes without faces"));
    }
    let angles = angular_distances(a, b);
    Ok(mean(&angles))
}

/// Per-face angles in degrees between corresponding normals.
///
/// Evaluated as `atan2(‖a × b‖, a · b)`, which equals the clamped arccos of
/// the dot product for unit vectors but keeps full precision for nearly
/// parallel normals.
pub fn angular_distances(a: &TriangleMesh, b: &TriangleMesh) -> Vec<f64> {
    a.face_normals()
        .iter()
        .zip(b.face_normals())
        .map(|(na, nb)| {
            let c = [
                na[1] * nb[2] - na[2] * nb[1],
                na[2] * nb[0] - na[0] * nb[2],
                na[0] * nb[1] - na[1] * nb[0],
            ];
            dot3(&c, &c).sqrt().atan2(dot3(na, nb)) * 180.0 / PI
        })
        .collect()
}

/// Mean of the (weighted) kernel density estimate over `eval_set`.
pub fn mean_density(
    points: &PointCloud,
    kernel: &KernelParams,
    h: f64,
    weights: Option<&[f64]>,
    eval_set: &PointCloud,
) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::Size("empty evaluation set".into()));
    }
    let cloud = match weights {
        Some(w) => points.clone().with_weights(w.to_vec())?,
        None => points.clone().without_weights(),
    };
    let kde = Kde::new(&cloud, h)?;
    let f = eval_set.points().map(|q| kde.density(kernel, q)).collect::<Result<Vec<f64>>>()?;
    Ok(mean(&f))
}

/// Mean density of a `θ`-weighted WLOP estimate on a planar patch,
/// `c_θ⁽²⁾ · c_LOP⁽³⁾ / c_LOP⁽²⁾ / (|P| h³)`: the reciprocal θ weights
/// normalize a two-dimensional Gaussian of width `h/4`, the
/// three-dimensional `K_LOP` is then integrated over the two-dimensional
/// sheet.
pub fn wlop_mean_density_constant(n_points: usize, h: f64) -> f64 {
    wlop_density_factor() / (n_points as f64 * h.powi(3))
}

/// The dimensionless factor `c_θ⁽²⁾ c_LOP⁽³⁾ / c_LOP⁽²⁾ = 24/√π`.
pub fn wlop_density_factor() -> f64 {
    // θ(x) = exp(−16‖x‖²) integrates to (π/16)^{d/2}
    let c_theta2 = 16.0 / PI;
    c_lop(3) / c_lop(2) * c_theta2
}

/// Normalization constant of `K_LOP` written as `c · erfc(4‖x‖)`.
fn c_lop(d: usize) -> f64 {
    let d = d as f64;
    (d * 4f64.ln() - 0.5 * (d - 1.0) * PI.ln() + ln_gamma(0.5 * (d + 2.0)).expect("positive")
        - ln_gamma(0.5 * (d + 1.0)).expect("positive"))
    .exp()
}

/// Coefficient of variation (std / mean) of a sample.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    let m = mean(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    mean(&dev).sqrt() / m
}
