//! Locally optimal projection (LOP) and its weighted variant (WLOP),
//! written as a pair of mean shift steps.
//!
//! One update of projection point `qⱼ` is
//!
//! ```text
//! qⱼ ← qⱼ + m_{P,G}(qⱼ) − μ m_{Q∖qⱼ,β}(qⱼ)
//! ```
//!
//! where the attraction term is the mean shift vector of the target points
//! under the shadow kernel of `K_Γ(·|p, σ²)` and the repulsion term is the
//! β-weighted mean shift vector over the other projection points. With
//! `p = 1, σ² = 1/32` the attraction is exactly the classical localized L1
//! (Weiszfeld) step with weights `α = θ(x)/x`.

mod sparse;

pub use sparse::{conjugate_gradient, CgResult, CsrMatrix};

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};
use crate::kernels::{normalization_constant, KernelParams, ShadowProfile, LOP_SIGMA2, SINGULARITY_FLOOR};
use crate::meanshift::Kde;
use crate::metrics::regularity;

/// Support of `θ` in units of `h`; `θ(h) = e^{−16}`.
const THETA_SUPPORT: f64 = 1.0;

/// Truncation radius (in units of `h`) of the kernel in the full weighting
/// scheme.
pub const FULL_SCHEME_RADIUS: f64 = 0.5;

/// Localization kernel `θ(x) = exp(−x²/(h/4)²)`.
#[inline]
pub fn theta(h: f64, x: f64) -> f64 {
    (-16.0 * x * x / (h * h)).exp()
}

/// Repulsion energy shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eta {
    /// `η(x) = 1/(3x³)`
    Lop,
    /// `η(x) = −x`
    Wlop,
}

impl Eta {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lop" => Ok(Eta::Lop),
            "wlop" => Ok(Eta::Wlop),
            _ => Err(Error::UnknownLabel(name.to_string())),
        }
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            Eta::Lop => 1.0 / (3.0 * x * x * x),
            Eta::Wlop => -x,
        }
    }
}

/// Repulsion weight `β(x) = θ(x)/x · |η'(x)|`, with `x` clamped to at least
/// `1e-8 · h`.
#[inline]
pub fn beta_kernel(eta: Eta, h: f64, x: f64) -> f64 {
    let x = x.max(SINGULARITY_FLOOR * h);
    let t = theta(h, x) / x;
    match eta {
        Eta::Wlop => t,
        Eta::Lop => t / (x * x * x * x),
    }
}

/// β as a shadow profile over squared scaled distances.
#[derive(Debug, Clone, Copy)]
struct Repulsion {
    eta: Eta,
    h: f64,
}

impl ShadowProfile for Repulsion {
    fn shadow_weight(&self, u: f64) -> f64 {
        if u > THETA_SUPPORT * THETA_SUPPORT {
            return 0.0;
        }
        beta_kernel(self.eta, self.h, u.sqrt() * self.h)
    }

    fn support_radius(&self) -> Option<f64> {
        Some(THETA_SUPPORT)
    }
}

/// One classical LOP attraction step `Σ αᵢ pᵢ / Σ αᵢ` with
/// `αᵢ = θ(‖pᵢ − q‖)/‖pᵢ − q‖` over the targets within distance `h`.
pub fn weiszfeld_step(targets: &PointCloud, q: &[f64], h: f64) -> Result<Vec<f64>> {
    if targets.is_empty() {
        return Err(Error::EmptyInput("attraction over an empty target set"));
    }
    let mut num = vec![0.0; targets.dim()];
    let mut den = 0.0;
    for (i, p) in targets.points().enumerate() {
        let x = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if x > THETA_SUPPORT * h {
            continue;
        }
        let alpha = targets.weight(i) * theta(h, x) / x.max(SINGULARITY_FLOOR * h);
        den += alpha;
        for (n, pk) in num.iter_mut().zip(p) {
            *n += alpha * pk;
        }
    }
    if !(den > 0.0) {
        return Err(Error::EmptySupport);
    }
    Ok(num.into_iter().map(|n| n / den).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    None,
    /// Classical WLOP weights built from `θ`.
    Wlop,
    /// Reciprocal `K_LOP` density.
    Simple,
    /// Weights solving the interpolation system of the truncated `K_LOP`.
    Full,
}

impl Weighting {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "none" => Ok(Weighting::None),
            "wlop" => Ok(Weighting::Wlop),
            "simple" => Ok(Weighting::Simple),
            "full" => Ok(Weighting::Full),
            _ => Err(Error::UnknownLabel(name.to_string())),
        }
    }
}

/// Which side of the projection a weight vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Target points `P`: weights behave like reciprocal densities.
    Target,
    /// Projection points `Q`: weights behave like densities.
    Projection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionConfig {
    pub h: f64,
    /// Repulsion weight in `[0, 1/2)`.
    pub mu: f64,
    pub iters: usize,
    pub eta: Eta,
    pub weighting: Weighting,
    /// Attraction kernel shape.
    pub p: f64,
    pub sigma2: f64,
    pub cg_tol: f64,
    /// Defaults to `10 · |P|`.
    pub cg_max_iters: Option<usize>,
}

impl ProjectionConfig {
    /// WLOP repulsion, no density weights and the LOP attraction kernel.
    pub fn new(h: f64, mu: f64, iters: usize) -> Self {
        Self {
            h,
            mu,
            iters,
            eta: Eta::Wlop,
            weighting: Weighting::None,
            p: 1.0,
            sigma2: LOP_SIGMA2,
            cg_tol: 1e-6,
            cg_max_iters: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::invalid(format!("window size h = {} must be positive", self.h)));
        }
        if !(0.0..0.5).contains(&self.mu) {
            return Err(Error::invalid(format!("mu = {} must lie in [0, 0.5)", self.mu)));
        }
        if !(self.p > 0.0) || !(self.sigma2 > 0.0) {
            return Err(Error::invalid("attraction kernel needs p > 0 and sigma2 > 0"));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::invalid(format!("cg_tol = {} must be positive", self.cg_tol)));
        }
        Ok(())
    }

    /// Attraction kernel, truncated where `θ` (or the kernel's own Gaussian
    /// factor, for wider kernels) has decayed to `e^{−16}`.
    pub fn attraction_kernel(&self, dim: usize) -> Result<KernelParams> {
        let radius = (32.0 * self.sigma2).sqrt().max(1.0);
        KernelParams::new(dim, self.p, self.sigma2)?.with_truncation(radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityWeights {
    pub values: Vec<f64>,
    pub scheme: Weighting,
    /// Full scheme: number of weights raised to the floor.
    pub clamped: usize,
    /// Full scheme: CG iterations and final max-norm residual.
    pub cg_iterations: Option<usize>,
    pub residual: Option<f64>,
}

impl DensityWeights {
    fn plain(values: Vec<f64>, scheme: Weighting) -> Self {
        Self {
            values,
            scheme,
            clamped: 0,
            cg_iterations: None,
            residual: None,
        }
    }
}

fn require_points(cloud: &PointCloud, h: f64) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("weights of an empty cloud"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid(format!("window size h = {h} must be positive")));
    }
    Ok(())
}

/// Classical WLOP weights: `1/(1 + Σ_{j≠i} θ)` on targets and
/// `1 + Σ_{j≠i} θ` on projection points.
pub fn weights_wlop(cloud: &PointCloud, h: f64, side: Side) -> Result<DensityWeights> {
    require_points(cloud, h)?;
    let tree = KdTree::new(cloud);
    let values = cloud
        .points()
        .enumerate()
        .map(|(i, p)| {
            let mut s = 1.0;
            tree.for_each_in_radius(p, THETA_SUPPORT * h, |j, d2| {
                if j != i {
                    s += (-16.0 * d2 / (h * h)).exp();
                }
            });
            match side {
                Side::Target => 1.0 / s,
                Side::Projection => s,
            }
        })
        .collect();
    Ok(DensityWeights::plain(values, Weighting::Wlop))
}

/// `K_LOP` density estimate of a cloud at each of its own points.
fn lop_self_density(cloud: &PointCloud, h: f64) -> Result<Vec<f64>> {
    let kernel = KernelParams::lop(cloud.dim()).with_truncation(THETA_SUPPORT)?;
    let kde = Kde::new(cloud, h)?;
    cloud.points().map(|p| kde.density(&kernel, p)).collect()
}

/// Simple scheme: `1/f̂_P(pᵢ)` on targets, `f̂_Q(qⱼ)` on projection points,
/// both with the `K_LOP` kernel (truncated at `h`).
pub fn weights_simple(cloud: &PointCloud, h: f64, side: Side) -> Result<DensityWeights> {
    require_points(cloud, h)?;
    let plain = cloud.clone().without_weights();
    let f = lop_self_density(&plain, h)?;
    let values = match side {
        Side::Target => f.into_iter().map(|v| 1.0 / v).collect(),
        Side::Projection => f,
    };
    Ok(DensityWeights::plain(values, Weighting::Simple))
}

/// Kernel matrix `(1/(|P| hᵈ)) K((pᵢ − pⱼ)/h)`, sparse when the kernel is
/// truncated.
pub fn kernel_gram_matrix(cloud: &PointCloud, kernel: &KernelParams, h: f64) -> Result<CsrMatrix> {
    require_points(cloud, h)?;
    if kernel.dim() != cloud.dim() {
        return Err(Error::Size("kernel and cloud dimensions differ".into()));
    }
    let scale = 1.0 / (cloud.len() as f64 * h.powi(cloud.dim() as i32));
    let plain = cloud.clone().without_weights();
    let kde = Kde::new(&plain, h)?;
    let rows = cloud
        .points()
        .map(|p| {
            let mut row = Vec::new();
            kde.visit(p, kernel.truncation_radius(), |j, u| {
                let v = kernel.eval_sq(u);
                if v > 0.0 {
                    row.push((j, scale * v));
                }
            });
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// Full scheme: solves `(1/(|P| hᵈ)) (K_LOP((pᵢ − pⱼ)/h))ᵢⱼ v = 1` with the
/// kernel truncated at `h/2`, by Jacobi-preconditioned CG. Weights below
/// `1e-6 · median` are raised to that floor.
pub fn weights_full(cloud: &PointCloud, h: f64, cg_tol: f64, cg_max_iters: Option<usize>) -> Result<DensityWeights> {
    require_points(cloud, h)?;
    let kernel = KernelParams::lop(cloud.dim()).with_truncation(FULL_SCHEME_RADIUS)?;
    let a = kernel_gram_matrix(cloud, &kernel, h)?;
    let n = cloud.len();
    let sol = conjugate_gradient(&a, &vec![1.0; n], cg_tol, cg_max_iters.unwrap_or(10 * n))?;
    let mut values = sol.x;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let floor = 1e-6 * median.abs().max(f64::MIN_POSITIVE);
    let mut clamped = 0;
    for v in &mut values {
        if !(*v >= floor) {
            *v = floor;
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("full weighting scheme: {clamped} of {n} weights raised to the floor {floor:e}");
    }
    log::debug!("full weighting scheme: CG {} iterations, residual {:e}", sol.iterations, sol.residual);
    Ok(DensityWeights {
        values,
        scheme: Weighting::Full,
        clamped,
        cg_iterations: Some(sol.iterations),
        residual: Some(sol.residual),
    })
}

/// Per-iteration record of a projection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub mean_step: f64,
    pub sigma_q: f64,
    pub seconds: f64,
}

pub fn diagnostics_csv(rows: &[IterationDiagnostics]) -> String {
    let mut out = String::from("iteration,mean_step,sigma_q,seconds\n");
    for r in rows {
        let _ = writeln!(out, "{},{:e},{:e},{:.6}", r.iteration, r.mean_step, r.sigma_q, r.seconds);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ProjectionOutput {
    pub points: PointCloud,
    /// Row 0 describes the input; row `t` the state after iteration `t`.
    pub diagnostics: Vec<IterationDiagnostics>,
}

/// A projection operator bound to a set of target points.
///
/// Target weights are computed once at construction; projection weights are
/// recomputed from the current iterate in every iteration.
pub struct Projector<'a> {
    config: ProjectionConfig,
    targets: Kde<'a>,
    target_weights: Option<DensityWeights>,
    attraction: Box<dyn ShadowProfile + 'a>,
}

impl<'a> Projector<'a> {
    pub fn new(targets: &'a PointCloud, config: ProjectionConfig) -> Result<Self> {
        config.validate()?;
        if targets.is_empty() {
            return Err(Error::EmptyInput("projection onto an empty target set"));
        }
        let target_weights = match config.weighting {
            Weighting::None => None,
            Weighting::Wlop => Some(weights_wlop(targets, config.h, Side::Target)?),
            Weighting::Simple => Some(weights_simple(targets, config.h, Side::Target)?),
            Weighting::Full => Some(weights_full(targets, config.h, config.cg_tol, config.cg_max_iters)?),
        };
        Self::assemble(targets, config, target_weights)
    }

    /// Like [`new`](Self::new) but with target weights computed elsewhere,
    /// e.g. shared between runs that differ only in `μ`.
    pub fn with_target_weights(targets: &'a PointCloud, config: ProjectionConfig, weights: DensityWeights) -> Result<Self> {
        config.validate()?;
        if weights.values.len() != targets.len() {
            return Err(Error::Size(format!(
                "{} weights for {} target points",
                weights.values.len(),
                targets.len()
            )));
        }
        Self::assemble(targets, config, Some(weights))
    }

    fn assemble(targets: &'a PointCloud, config: ProjectionConfig, target_weights: Option<DensityWeights>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyInput("projection onto an empty target set"));
        }
        let kde = match &target_weights {
            Some(w) => Kde::owned(targets.clone().with_weights(w.values.clone())?, config.h)?,
            None => Kde::new(targets, config.h)?,
        };
        let attraction = Box::new(config.attraction_kernel(targets.dim())?);
        Ok(Self {
            config,
            targets: kde,
            target_weights,
            attraction,
        })
    }

    /// Replaces the attraction shadow profile, e.g. by a Gaussian mixture
    /// approximation.
    pub fn with_attraction(mut self, shadow: Box<dyn ShadowProfile + 'a>) -> Self {
        self.attraction = shadow;
        self
    }

    pub fn config(&self) -> &ProjectionConfig {
        &self.config
    }

    pub fn target_weights(&self) -> Option<&DensityWeights> {
        self.target_weights.as_ref()
    }

    pub fn projection_weights(&self, q: &PointCloud) -> Result<Option<Vec<f64>>> {
        let h = self.config.h;
        Ok(match self.config.weighting {
            Weighting::None => None,
            Weighting::Wlop => Some(weights_wlop(q, h, Side::Projection)?.values),
            Weighting::Simple | Weighting::Full => Some(weights_simple(q, h, Side::Projection)?.values),
        })
    }

    fn projection_kde(&self, q: &PointCloud) -> Result<Kde<'static>> {
        let weighted = match self.projection_weights(q)? {
            Some(w) => q.clone().with_weights(w)?,
            None => q.clone().without_weights(),
        };
        Kde::owned(weighted, self.config.h)
    }

    fn step_with(&self, q_kde: &Kde<'_>, j: usize) -> Result<Vec<f64>> {
        let q = q_kde.points().point(j);
        let m_p = self.targets.mean_shift_vector(self.attraction.as_ref(), q)?;
        let mut out: Vec<f64> = q.iter().zip(&m_p).map(|(a, b)| a + b).collect();
        if self.config.mu > 0.0 {
            let rep = Repulsion {
                eta: self.config.eta,
                h: self.config.h,
            };
            let (num, den) = q_kde.shift_sums(&rep, q, Some(j));
            if den > 0.0 {
                for (o, n) in out.iter_mut().zip(num) {
                    *o -= self.config.mu * n / den;
                }
            }
        }
        Ok(out)
    }

    /// The update of point `j` given the current iterate `q`.
    pub fn step(&self, q: &PointCloud, j: usize) -> Result<Vec<f64>> {
        self.check(q)?;
        if j >= q.len() {
            return Err(Error::Size(format!("index {j} out of range for {} points", q.len())));
        }
        self.step_with(&self.projection_kde(q)?, j)
    }

    fn check(&self, q: &PointCloud) -> Result<()> {
        if q.is_empty() {
            return Err(Error::EmptyInput("empty projection point set"));
        }
        if q.dim() != self.targets.points().dim() {
            return Err(Error::Size("projection and target dimensions differ".into()));
        }
        Ok(())
    }

    /// One Jacobi-style iteration over all points; returns the new iterate
    /// and the mean step length.
    pub fn iterate(&self, q: &PointCloud) -> Result<(PointCloud, f64)> {
        self.check(q)?;
        let q_kde = self.projection_kde(q)?;
        let mut coords = Vec::with_capacity(q.coords().len());
        let mut total_step = 0.0;
        for j in 0..q.len() {
            let next = self.step_with(&q_kde, j)?;
            total_step += next
                .iter()
                .zip(q.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            coords.extend(next);
        }
        Ok((PointCloud::new(q.dim(), coords)?, total_step / q.len() as f64))
    }

    pub fn run(&self, q0: &PointCloud) -> Result<ProjectionOutput> {
        self.check(q0)?;
        let start = Instant::now();
        let sigma = |q: &PointCloud| if q.len() >= 2 { regularity(q).unwrap_or(f64::NAN) } else { 0.0 };
        let mut diagnostics = vec![IterationDiagnostics {
            iteration: 0,
            mean_step: 0.0,
            sigma_q: sigma(q0),
            seconds: 0.0,
        }];
        let mut q = q0.clone().without_weights();
        for t in 1..=self.config.iters {
            let (next, mean_step) = self.iterate(&q)?;
            q = next;
            diagnostics.push(IterationDiagnostics {
                iteration: t,
                mean_step,
                sigma_q: sigma(&q),
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        Ok(ProjectionOutput { points: q, diagnostics })
    }
}

/// Explicit per-point weights for a single [`project_step`].
#[derive(Debug, Clone, Copy)]
pub struct StepWeights<'w> {
    pub targets: &'w [f64],
    pub projections: &'w [f64],
}

/// One update of projection point `j`. Without explicit weights the
/// configured weighting scheme is applied.
pub fn project_step(
    targets: &PointCloud,
    q: &PointCloud,
    j: usize,
    config: &ProjectionConfig,
    weights: Option<StepWeights<'_>>,
) -> Result<Vec<f64>> {
    match weights {
        None => Projector::new(targets, config.clone())?.step(q, j),
        Some(w) => {
            let mut cfg = config.clone();
            cfg.weighting = Weighting::None;
            let weighted_targets = targets.clone().with_weights(w.targets.to_vec())?;
            let projector = Projector::new(&weighted_targets, cfg)?;
            projector.check(q)?;
            let q_kde = Kde::owned(q.clone().with_weights(w.projections.to_vec())?, config.h)?;
            projector.step_with(&q_kde, j)
        }
    }
}

pub fn project(targets: &PointCloud, q0: &PointCloud, config: &ProjectionConfig) -> Result<ProjectionOutput> {
    Projector::new(targets, config.clone())?.run(q0)
}

/// `K_LOP(0)` in dimension `d`.
pub fn lop_kernel_at_origin(dim: usize) -> f64 {
    let k = KernelParams::lop(dim);
    normalization_constant(&k) * std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanshift::mean_shift_vector;

    fn cloud(dim: usize, pts: &[f64]) -> PointCloud {
        PointCloud::new(dim, pts.to_vec()).unwrap()
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(0.3, 0.0), 1.0);
        assert!((theta(0.3, 0.3) - (-16f64).exp()).abs() < 1e-20);
        assert!((theta(0.3, 0.3) - 1.125e-7).abs() < 1e-10);
    }

    #[test]
    fn beta_values() {
        let h = 0.8;
        let x = h / 4.0;
        assert!((beta_kernel(Eta::Wlop, h, x) - (-1f64).exp() / x).abs() < 1e-14);
        for &x in &[0.05, 0.1, 0.3] {
            let r = beta_kernel(Eta::Lop, h, x) / beta_kernel(Eta::Wlop, h, x);
            assert!((r - x.powi(-4)).abs() < 1e-10 * r);
        }
        // |η'| by central differences
        for eta in [Eta::Lop, Eta::Wlop] {
            for &x in &[0.07, 0.2, 0.5] {
                let d = 1e-6;
                let deriv = ((eta.value(x + d) - eta.value(x - d)) / (2.0 * d)).abs();
                let expected = theta(h, x) / x * deriv;
                assert!((beta_kernel(eta, h, x) - expected).abs() < 1e-6 * expected);
            }
        }
        assert!(beta_kernel(Eta::Lop, h, 0.0).is_finite());
    }

    #[test]
    fn attraction_matches_weiszfeld() {
        let pts: Vec<f64> = (0..60).map(|i| (i as f64 * 1.37).sin() * 0.5).collect();
        let p = cloud(3, &pts);
        let q = cloud(3, &[0.05, -0.1, 0.02]);
        let cfg = ProjectionConfig::new(0.6, 0.0, 1);
        let step = project_step(&p, &q, 0, &cfg, None).unwrap();
        let classical = weiszfeld_step(&p, q.point(0), 0.6).unwrap();
        for k in 0..3 {
            assert!((step[k] - classical[k]).abs() < 1e-12);
        }
        let kernel = cfg.attraction_kernel(3).unwrap();
        let m = mean_shift_vector(&p, &kernel, 0.6, q.point(0)).unwrap();
        for k in 0..3 {
            assert!((q.point(0)[k] + m[k] - classical[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_target_jump() {
        let p = cloud(2, &[0.3, 0.4]);
        let q = cloud(2, &[0.1, 0.1]);
        let cfg = ProjectionConfig::new(1.0, 0.0, 1);
        let s = project_step(&p, &q, 0, &cfg, None).unwrap();
        assert!((s[0] - 0.3).abs() < 1e-15 && (s[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn two_point_repulsion() {
        // both projection points sit on a symmetric target pair, so the
        // attraction cancels and only the repulsion acts
        let p = cloud(1, &[-0.1, 0.1]);
        let q = cloud(1, &[-0.05, 0.05]);
        let mu = 0.3;
        let cfg = ProjectionConfig::new(1.0, mu, 1);
        let a = project_step(&p, &q, 0, &cfg, None).unwrap()[0];
        let m_attr = mean_shift_vector(&p, &cfg.attraction_kernel(1).unwrap(), 1.0, &[-0.05]).unwrap()[0];
        // repulsion mean shift towards the single neighbour: q₁ − q₀ = 0.1
        assert!((a - (-0.05 + m_attr - mu * 0.1)).abs() < 1e-14);
        let cfg0 = ProjectionConfig::new(1.0, 0.0, 1);
        let a0 = project_step(&p, &q, 0, &cfg0, None).unwrap()[0];
        assert!(a < a0);
    }

    #[test]
    fn weight_scale_invariance() {
        let pts: Vec<f64> = (0..40).map(|i| (i as f64 * 0.77).cos() * 0.4).collect();
        let p = cloud(2, &pts);
        let q = cloud(2, &[0.0, 0.0, 0.1, 0.05, -0.1, 0.1]);
        let cfg = ProjectionConfig::new(0.5, 0.3, 1);
        let vt: Vec<f64> = (0..20).map(|i| 0.5 + 0.1 * i as f64).collect();
        let vq = [1.0, 2.0, 3.0];
        let a = project_step(&p, &q, 1, &cfg, Some(StepWeights { targets: &vt, projections: &vq })).unwrap();
        let vt2: Vec<f64> = vt.iter().map(|v| v * 7.5).collect();
        let vq2: Vec<f64> = vq.iter().map(|v| v * 0.01).collect();
        let b = project_step(&p, &q, 1, &cfg, Some(StepWeights { targets: &vt2, projections: &vq2 })).unwrap();
        for k in 0..2 {
            assert!((a[k] - b[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_iterations_is_identity() {
        let p = cloud(2, &[0.0, 0.0, 1.0, 0.0]);
        let q = cloud(2, &[0.2, 0.1]);
        let out = project(&p, &q, &ProjectionConfig::new(1.0, 0.2, 0)).unwrap();
        assert_eq!(out.points, q);
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(ProjectionConfig::new(1.0, 0.5, 1).validate().is_err());
        assert!(ProjectionConfig::new(0.0, 0.1, 1).validate().is_err());
        assert!(ProjectionConfig::new(1.0, 0.49, 1).validate().is_ok());
        assert!(Weighting::parse("bogus").is_err());
        assert_eq!(Eta::parse("LOP").unwrap(), Eta::Lop);
    }

    #[test]
    fn wlop_weight_cases() {
        let single = cloud(3, &[0.0; 3]);
        assert_eq!(weights_wlop(&single, 1.0, Side::Target).unwrap().values, vec![1.0]);
        let pair = cloud(3, &[0.0; 6]);
        assert_eq!(weights_wlop(&pair, 1.0, Side::Target).unwrap().values, vec![0.5, 0.5]);
        assert_eq!(weights_wlop(&pair, 1.0, Side::Projection).unwrap().values, vec![2.0, 2.0]);
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let w = weights_wlop(&cloud(1, &grid), 0.35, Side::Target).unwrap().values;
        for i in 5..45 {
            assert!((w[i] - w[25]).abs() < 1e-13);
        }
    }

    #[test]
    fn simple_and_full_single_point() {
        let h = 0.4;
        let single = cloud(3, &[1.0, 2.0, 3.0]);
        let k0 = lop_kernel_at_origin(3);
        let expected = h * h * h / k0;
        let s = weights_simple(&single, h, Side::Target).unwrap().values[0];
        assert!((s - expected).abs() < 1e-14 * expected);
        let f = weights_full(&single, h, 1e-12, None).unwrap();
        assert!((f.values[0] - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn full_two_point_closed_form() {
        let h = 1.0;
        let delta = 0.2;
        let p = cloud(2, &[0.0, 0.0, delta, 0.0]);
        let w = weights_full(&p, h, 1e-14, None).unwrap().values;
        let k = KernelParams::lop(2);
        let scale = 1.0 / (2.0 * h * h);
        let a = scale * crate::kernels::kernel_eval(&k, &[0.0, 0.0]);
        let b = scale * crate::kernels::kernel_eval(&k, &[delta, 0.0]);
        // [a b; b a] v = 1 ⇒ v = 1/(a + b)
        let expected = 1.0 / (a + b);
        assert!((w[0] - expected).abs() < 1e-10 * expected);
        assert!((w[1] - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn lop_origin_value() {
        for d in 1..=3 {
            let k = KernelParams::lop(d);
            assert!((lop_kernel_at_origin(d) - crate::kernels::kernel_eval(&k, &vec![0.0; d])).abs() < 1e-12);
        }
    }
}
