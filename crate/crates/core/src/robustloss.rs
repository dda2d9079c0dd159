//! The incomplete gamma loss family and a two-stage mesh denoiser built on
//! it: robust face normal filtering followed by a normal-driven vertex
//! update.
//!
//! ```text
//! ρ(x) = γ(p/2, x²/(2σ²)) / Γ(p/2)
//! Ψ(x) = ρ'(x) = 2 / ((2σ²)^{p/2} Γ(p/2)) · |x|^{p−2} e^{−x²/(2σ²)} x
//! g̃(x) = Ψ(x)/x
//! ```

use crate::error::{Error, Result};
use crate::geometry::{dot3, geodesic_face_neighborhood, norm3, sub3, TriangleMesh, Vec3};
use crate::kernels::SINGULARITY_FLOOR;
use crate::metrics::mean_angular_distance;
use crate::specfun::{gamma_p, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    p: f64,
    sigma2: f64,
    // ln(2 / ((2σ²)^{p/2} Γ(p/2)))
    ln_psi_scale: f64,
}

impl LossParams {
    pub fn new(p: f64, sigma2: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain("LossParams::new", format!("p = {p} must be positive")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain("LossParams::new", format!("sigma2 = {sigma2} must be positive")));
        }
        let ln_psi_scale = 2f64.ln() - 0.5 * p * (2.0 * sigma2).ln() - ln_gamma(0.5 * p)?;
        Ok(Self { p, sigma2, ln_psi_scale })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    fn gtilde_unchecked(&self, x: f64) -> f64 {
        let power = if self.p == 2.0 { 0.0 } else { (self.p - 2.0) * x.abs().ln() };
        (self.ln_psi_scale + power - x * x / (2.0 * self.sigma2)).exp()
    }
}

/// `ρ(x) ∈ [0, 1)`.
pub fn loss_rho(lp: &LossParams, x: f64) -> f64 {
    gamma_p(0.5 * lp.p, x * x / (2.0 * lp.sigma2)).expect("valid parameters")
}

/// `Ψ(x) = ρ'(x)`. Finite at the origin for `p ≥ 1`; for `p < 1` the
/// origin is a singularity.
pub fn influence_psi(lp: &LossParams, x: f64) -> Result<f64> {
    if x == 0.0 {
        if lp.p > 1.0 {
            return Ok(0.0);
        }
        return Err(Error::Singularity {
            function: "influence_psi",
            at: 0.0,
        });
    }
    Ok(lp.gtilde_unchecked(x) * x)
}

/// `g̃(x) = Ψ(x)/x`; a singularity at 0 when `p < 2`.
pub fn weight_gtilde(lp: &LossParams, x: f64) -> Result<f64> {
    if x == 0.0 {
        if lp.p < 2.0 {
            return Err(Error::Singularity {
                function: "weight_gtilde",
                at: 0.0,
            });
        }
        if lp.p > 2.0 {
            return Ok(0.0);
        }
    }
    Ok(lp.gtilde_unchecked(x))
}

/// Loss used by the normal filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    /// Squared error; weight 1 everywhere.
    L2,
    /// Absolute error; weight `1/|x|`.
    L1,
    /// The `p = 2` member of the family with `σ` from the filter config.
    Gaussian,
    /// The `p = 1` member of the family with `σ` from the filter config.
    Lop,
    /// Any member of the family with explicit parameters.
    Gamma(LossParams),
}

impl Loss {
    /// Parses `l2`, `l1`, `gauss`, `lop` or `gamma:p,sigma2`.
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "l2" => Ok(Loss::L2),
            "l1" => Ok(Loss::L1),
            "gauss" | "gaussian" => Ok(Loss::Gaussian),
            "lop" => Ok(Loss::Lop),
            _ => {
                let rest = lower.strip_prefix("gamma:").ok_or_else(|| Error::UnknownLabel(name.to_string()))?;
                let (p, s2) = rest.split_once(',').ok_or_else(|| Error::UnknownLabel(name.to_string()))?;
                let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::UnknownLabel(name.to_string()));
                Ok(Loss::Gamma(LossParams::new(num(p)?, num(s2)?)?))
            }
        }
    }

    fn resolve(self, sigma: f64) -> Result<Resolved> {
        Ok(match self {
            Loss::L2 => Resolved::Constant,
            Loss::L1 => Resolved::Reciprocal,
            Loss::Gaussian => Resolved::Family(LossParams::new(2.0, sigma * sigma)?),
            Loss::Lop => Resolved::Family(LossParams::new(1.0, sigma * sigma)?),
            Loss::Gamma(lp) => Resolved::Family(lp),
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Resolved {
    Constant,
    Reciprocal,
    Family(LossParams),
}

impl Resolved {
    fn singular_at_zero(&self) -> bool {
        match self {
            Resolved::Constant => false,
            Resolved::Reciprocal => true,
            Resolved::Family(lp) => lp.p < 2.0,
        }
    }

    /// Weight of a normal difference of length `x ≥ 0`, clamped away from
    /// the singularity.
    fn weight(&self, x: f64) -> f64 {
        match self {
            Resolved::Constant => 1.0,
            Resolved::Reciprocal => 1.0 / x.max(SINGULARITY_FLOOR),
            Resolved::Family(lp) if lp.p < 2.0 => lp.gtilde_unchecked(x.max(SINGULARITY_FLOOR)),
            Resolved::Family(lp) => weight_gtilde(lp, x).expect("p >= 2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFilterConfig {
    pub iters: usize,
    /// Scale of normal differences.
    pub sigma: f64,
    /// Neighborhood radius in mean edge lengths.
    pub radius_factor: f64,
    pub loss: Loss,
}

impl Default for NormalFilterConfig {
    fn default() -> Self {
        Self {
            iters: 50,
            sigma: 0.3,
            radius_factor: 1.5,
            loss: Loss::Lop,
        }
    }
}

impl NormalFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.radius_factor > 0.0) {
            return Err(Error::invalid("sigma and radius_factor must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredNormals {
    pub normals: Vec<Vec3>,
    /// Faces that kept their input normal because no usable neighbor
    /// normal existed.
    pub kept_input: usize,
}

fn normalized(v: Vec3) -> Option<Vec3> {
    let n = norm3(&v);
    (n > 0.0 && n.is_finite()).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// Robust per-face estimate of the normal from the input normals `nᵢ` of
/// its geodesic neighborhood:
///
/// ```text
/// n⁽ᵗ⁺¹⁾ = Σᵢ g̃(‖nᵢ − n⁽ᵗ⁾‖) nᵢ / ‖Σᵢ g̃(‖nᵢ − n⁽ᵗ⁾‖) nᵢ‖,   n⁽⁰⁾ = n_f
/// ```
///
/// For losses singular at zero the face's own normal is left out of the
/// first iteration; later iterations clamp the difference at `1e-8`.
pub fn filter_normals(mesh: &TriangleMesh, config: &NormalFilterConfig) -> Result<FilteredNormals> {
    config.validate()?;
    let loss = config.loss.resolve(config.sigma)?;
    let radius = config.radius_factor * mesh.mean_edge_length()?;
    let input = mesh.face_normals();
    let mut normals = Vec::with_capacity(mesh.n_faces());
    let mut kept_input = 0;
    for f in 0..mesh.n_faces() {
        let hood = geodesic_face_neighborhood(mesh, f, radius)?;
        let usable: Vec<usize> = hood.into_iter().filter(|&i| !mesh.is_degenerate(i)).collect();
        let Some(mut n) = normalized(input[f]).or_else(|| {
            // a degenerate face starts from its neighbors' average
            normalized(usable.iter().fold([0.0; 3], |a, &i| {
                [a[0] + input[i][0], a[1] + input[i][1], a[2] + input[i][2]]
            }))
        }) else {
            normals.push(input[f]);
            kept_input += 1;
            continue;
        };
        let mut stuck = false;
        for t in 0..config.iters {
            let mut acc = [0.0; 3];
            for &i in &usable {
                if t == 0 && i == f && loss.singular_at_zero() {
                    continue;
                }
                let ni = &input[i];
                let w = loss.weight(norm3(&sub3(ni, &n)));
                for k in 0..3 {
                    acc[k] += w * ni[k];
                }
            }
            match normalized(acc) {
                Some(next) => n = next,
                None => {
                    stuck = t == 0;
                    break;
                }
            }
        }
        if stuck {
            kept_input += 1;
            n = normalized(input[f]).unwrap_or(n);
        }
        normals.push(n);
    }
    if kept_input > 0 {
        log::debug!("normal filtering: {kept_input} faces kept their input normal");
    }
    Ok(FilteredNormals { normals, kept_input })
}

/// Moves vertices towards the planes given by the filtered normals through
/// the current face centroids:
///
/// ```text
/// v ← v + [Σ_{f∋v} n_f (n_f · (c_f − v)) − w (v − v⁰)] / (|F_v| + w)
/// ```
///
/// with `v⁰` the input position. All vertices are updated from the same
/// snapshot in each pass.
pub fn update_vertices(mesh: &TriangleMesh, normals: &[Vec3], iters: usize, w: f64) -> Result<TriangleMesh> {
    if normals.len() != mesh.n_faces() {
        return Err(Error::Size(format!(
            "{} normals for {} faces",
            normals.len(),
            mesh.n_faces()
        )));
    }
    if !(w >= 0.0) {
        return Err(Error::invalid(format!("regularization weight {w} must be non-negative")));
    }
    let original = mesh.vertices().to_vec();
    let mut current = original.clone();
    for _ in 0..iters {
        let centroids: Vec<Vec3> = mesh
            .faces()
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| current[v]);
                [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0]
            })
            .collect();
        let next: Vec<Vec3> = (0..current.len())
            .map(|v| {
                let faces = mesh.vertex_faces(v);
                let p = current[v];
                let mut acc = [0.0; 3];
                for &f in faces {
                    let n = &normals[f];
                    let s = dot3(n, &sub3(&centroids[f], &p));
                    for k in 0..3 {
                        acc[k] += n[k] * s;
                    }
                }
                let denom = faces.len() as f64 + w;
                if !(denom > 0.0) || !denom.is_finite() {
                    return p;
                }
                std::array::from_fn(|k| p[k] + (acc[k] - w * (p[k] - original[v][k])) / denom)
            })
            .collect();
        current = next;
    }
    mesh.with_vertices(current)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    pub filter: NormalFilterConfig,
    pub vertex_iters: usize,
    pub w: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            filter: NormalFilterConfig::default(),
            vertex_iters: 20,
            w: 0.001,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    pub mesh: TriangleMesh,
    pub filtered_normals: Vec<Vec3>,
    pub kept_input: usize,
    /// Mean angular distance in degrees to the reference, when given.
    pub d_angle: Option<f64>,
}

pub fn denoise_mesh(mesh: &TriangleMesh, config: &DenoiseConfig, reference: Option<&TriangleMesh>) -> Result<DenoiseOutput> {
    let filtered = filter_normals(mesh, &config.filter)?;
    let out = update_vertices(mesh, &filtered.normals, config.vertex_iters, config.w)?;
    let d_angle = reference.map(|r| mean_angular_distance(&out, r)).transpose()?;
    Ok(DenoiseOutput {
        mesh: out,
        filtered_normals: filtered.normals,
        kept_input: filtered.kept_input,
        d_angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::grid_mesh;
    use crate::specfun::erf;

    #[test]
    fn rho_special_cases() {
        let lp1 = LossParams::new(1.0, 0.2).unwrap();
        let lp2 = LossParams::new(2.0, 0.2).unwrap();
        assert_eq!(loss_rho(&lp1, 0.0), 0.0);
        for &x in &[0.1f64, -0.4, 1.3] {
            let expected = erf(x.abs() / (0.4f64).sqrt());
            assert!((loss_rho(&lp1, x) - expected).abs() < 1e-14);
            let expected = 1.0 - (-x * x / 0.4).exp();
            assert!((loss_rho(&lp2, x) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn psi_is_derivative_of_rho() {
        for &(p, s2) in &[(0.5, 0.1), (1.0, 1.0 / 32.0), (2.0, 0.3), (3.0, 0.5)] {
            let lp = LossParams::new(p, s2).unwrap();
            let mut x: f64 = 0.05;
            while x <= 3.0 {
                let d = 1e-6;
                let fd = (loss_rho(&lp, x + d) - loss_rho(&lp, x - d)) / (2.0 * d);
                let psi = influence_psi(&lp, x).unwrap();
                assert!((fd - psi).abs() < 1e-6 * psi.abs().max(1.0), "p={p} x={x}");
                assert!((influence_psi(&lp, -x).unwrap() + psi).abs() < 1e-15 * psi.abs().max(1e-300));
                let g = weight_gtilde(&lp, x).unwrap();
                assert!((g - psi / x).abs() < 1e-10 * g);
                x += 0.05;
            }
        }
    }

    #[test]
    fn singularities() {
        let lp = LossParams::new(1.0, 0.1).unwrap();
        assert!(matches!(weight_gtilde(&lp, 0.0), Err(Error::Singularity { .. })));
        let lp2 = LossParams::new(2.0, 0.1).unwrap();
        assert!((weight_gtilde(&lp2, 0.0).unwrap() - 2.0 / 0.2).abs() < 1e-12);
        assert_eq!(influence_psi(&lp2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lop_weight_matches_lop_shadow() {
        // g̃(x | 1/32) ∝ e^{−16x²}/x
        let lp = LossParams::new(1.0, 1.0 / 32.0).unwrap();
        let base = weight_gtilde(&lp, 0.1).unwrap() / ((-0.16f64).exp() / 0.1);
        for &x in &[0.03, 0.2, 0.5, 0.9] {
            let r = weight_gtilde(&lp, x).unwrap() / ((-16.0 * x * x).exp() / x);
            assert!((r - base).abs() < 1e-12 * base);
        }
    }

    #[test]
    fn parse_losses() {
        assert_eq!(Loss::parse("L2").unwrap(), Loss::L2);
        assert_eq!(Loss::parse("gauss").unwrap(), Loss::Gaussian);
        assert!(matches!(Loss::parse("gamma:1.5,0.1").unwrap(), Loss::Gamma(lp) if lp.p() == 1.5));
        assert!(Loss::parse("huber").is_err());
        assert!(Loss::parse("gamma:1").is_err());
    }

    #[test]
    fn flat_plane_is_fixed() {
        let mesh = grid_mesh(6, 6, 0.1);
        for loss in [Loss::L2, Loss::L1, Loss::Gaussian, Loss::Lop] {
            let cfg = NormalFilterConfig { loss, ..Default::default() };
            let out = filter_normals(&mesh, &cfg).unwrap();
            for n in &out.normals {
                assert!((n[2] - 1.0).abs() < 1e-15 && n[0].abs() < 1e-15);
            }
        }
    }

    fn bumpy_plane() -> TriangleMesh {
        let mesh = grid_mesh(8, 8, 0.1);
        let v: Vec<Vec3> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, p)| [p[0], p[1], 0.02 * ((i * 7919) % 13) as f64 / 13.0])
            .collect();
        mesh.with_vertices(v).unwrap()
    }

    #[test]
    fn l2_equals_direct_average() {
        let mesh = bumpy_plane();
        let cfg = NormalFilterConfig { loss: Loss::L2, ..Default::default() };
        let out = filter_normals(&mesh, &cfg).unwrap();
        let r = cfg.radius_factor * mesh.mean_edge_length().unwrap();
        for f in [0, 17, 60] {
            let hood = geodesic_face_neighborhood(&mesh, f, r).unwrap();
            let mut s = [0.0; 3];
            for i in hood {
                for k in 0..3 {
                    s[k] += mesh.face_normals()[i][k];
                }
            }
            let s = normalized(s).unwrap();
            for k in 0..3 {
                assert!((out.normals[f][k] - s[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unit_length() {
        let mesh = bumpy_plane();
        for loss in [Loss::L1, Loss::Lop, Loss::Gaussian] {
            let out = filter_normals(&mesh, &NormalFilterConfig { loss, ..Default::default() }).unwrap();
            for n in &out.normals {
                assert!((norm3(n) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vertex_update_cases() {
        let mesh = bumpy_plane();
        let up = vec![[0.0, 0.0, 1.0]; mesh.n_faces()];
        assert_eq!(update_vertices(&mesh, &up, 0, 0.001).unwrap().vertices(), mesh.vertices());
        let rms = |m: &TriangleMesh| {
            let mean = m.vertices().iter().map(|v| v[2]).sum::<f64>() / m.n_vertices() as f64;
            (m.vertices().iter().map(|v| (v[2] - mean).powi(2)).sum::<f64>() / m.n_vertices() as f64).sqrt()
        };
        let mut prev = rms(&mesh);
        for it in 1..=5 {
            let cur = rms(&update_vertices(&mesh, &up, it, 0.001).unwrap());
            assert!(cur < prev);
            prev = cur;
        }
        let frozen = update_vertices(&mesh, &up, 10, 1e300).unwrap();
        for (a, b) in frozen.vertices().iter().zip(mesh.vertices()) {
            assert!(norm3(&sub3(a, b)) < 1e-250);
        }
    }

    #[test]
    fn clean_mesh_pipeline() {
        let mesh = crate::geometry::shapes::box_mesh(4);
        let out = denoise_mesh(&mesh, &DenoiseConfig::default(), Some(&mesh)).unwrap();
        assert!(out.d_angle.unwrap() < 0.5);
    }
}
