//! Kernel density estimation and mean shift mode seeking.
//!
//! For data `P`, kernel `K = c k(‖·‖²)` and window `h`:
//!
//! ```text
//! f̂(q)   = 1/(|P| hᵈ) Σᵢ vᵢ K((pᵢ − q)/h)
//! ∇f̂(q)  = 2c/(|P| hᵈ⁺²) Σᵢ vᵢ g(‖(pᵢ − q)/h‖²) (pᵢ − q)
//! m(q)   = Σᵢ vᵢ g(·)(pᵢ − q) / Σᵢ vᵢ g(·)
//! ```
//!
//! with optional per-point weights `vᵢ` (1 when absent). Any
//! [`ShadowProfile`] can drive the mean shift vector, which is how the
//! Gaussian mixture approximations plug in.

use std::borrow::Cow;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};
use crate::kernels::{normalization_constant, KernelParams, ShadowProfile};

/// Below this many points the spatial index is not worth building.
const INDEX_THRESHOLD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanShiftConfig {
    h: f64,
    max_iters: usize,
    step_tol: f64,
}

impl MeanShiftConfig {
    pub fn new(h: f64, max_iters: usize, step_tol: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid(format!("window size h = {h} must be positive")));
        }
        if max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(step_tol > 0.0) {
            return Err(Error::invalid(format!("step_tol = {step_tol} must be positive")));
        }
        Ok(Self { h, max_iters, step_tol })
    }

    /// 500 iterations, step tolerance `1e-9 · h`.
    pub fn with_window(h: f64) -> Result<Self> {
        Self::new(h, 500, 1e-9 * h)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn step_tol(&self) -> f64 {
        self.step_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The last step was shorter than `step_tol`.
    Converged,
    MaxIterations,
    /// The current iterate left the support of every data point; the
    /// trajectory ends at the last valid iterate.
    EmptySupport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<Vec<f64>>,
    pub densities: Vec<f64>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trajectory holds the start point")
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    /// CSV with columns `t, q0 … q(d−1), density`.
    pub fn to_csv(&self) -> String {
        let dim = self.iterates.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for k in 0..dim {
            let _ = write!(out, ",q{k}");
        }
        out.push_str(",density\n");
        for (t, (q, f)) in self.iterates.iter().zip(&self.densities).enumerate() {
            let _ = write!(out, "{t}");
            for c in q {
                let _ = write!(out, ",{c:.17e}");
            }
            let _ = writeln!(out, ",{f:.17e}");
        }
        out
    }
}

/// Density estimate over a fixed point set and window size.
///
/// Kernels with a truncation radius are evaluated through a k-d tree; for
/// untruncated kernels every point contributes.
#[derive(Debug, Clone)]
pub struct Kde<'a> {
    points: Cow<'a, PointCloud>,
    h: f64,
    tree: Option<KdTree>,
}

impl<'a> Kde<'a> {
    pub fn new(points: &'a PointCloud, h: f64) -> Result<Self> {
        Self::from_cow(Cow::Borrowed(points), h)
    }

    /// An estimator that owns its point set.
    pub fn owned(points: PointCloud, h: f64) -> Result<Kde<'static>> {
        Kde::from_cow(Cow::Owned(points), h)
    }

    fn from_cow(points: Cow<'a, PointCloud>, h: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("density estimate over an empty point set"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid(format!("window size h = {h} must be positive")));
        }
        let tree = (points.len() >= INDEX_THRESHOLD).then(|| KdTree::new(&points));
        Ok(Self { points, h, tree })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.points.dim() {
            return Err(Error::Size(format!(
                "query has {} coordinates, points have {}",
                q.len(),
                self.points.dim()
            )));
        }
        Ok(())
    }

    /// Visits `(index, u = ‖(pᵢ − q)/h‖²)` for all points within scaled
    /// radius `support` (all points when `None`).
    #[inline]
    pub(crate) fn visit<F: FnMut(usize, f64)>(&self, q: &[f64], support: Option<f64>, mut f: F) {
        let inv_h2 = 1.0 / (self.h * self.h);
        match (support, &self.tree) {
            (Some(r), Some(tree)) => tree.for_each_in_radius(q, r * self.h, |i, d2| f(i, d2 * inv_h2)),
            _ => {
                let r2 = support.map_or(f64::INFINITY, |r| r * r);
                for (i, p) in self.points.points().enumerate() {
                    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    let u = d2 * inv_h2;
                    if u <= r2 {
                        f(i, u);
                    }
                }
            }
        }
    }

    fn check_kernel(&self, kernel: &KernelParams) -> Result<()> {
        if kernel.dim() != self.points.dim() {
            return Err(Error::Size(format!(
                "kernel is {}-dimensional, points are {}-dimensional",
                kernel.dim(),
                self.points.dim()
            )));
        }
        Ok(())
    }

    pub fn density(&self, kernel: &KernelParams, q: &[f64]) -> Result<f64> {
        self.check_dim(q)?;
        self.check_kernel(kernel)?;
        let mut sum = 0.0;
        self.visit(q, kernel.truncation_radius(), |i, u| {
            sum += self.points.weight(i) * kernel.eval_sq(u);
        });
        let d = self.points.dim() as i32;
        Ok(sum / (self.points.len() as f64 * self.h.powi(d)))
    }

    pub fn gradient(&self, kernel: &KernelParams, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        self.check_kernel(kernel)?;
        let dim = self.points.dim();
        let mut grad = vec![0.0; dim];
        self.visit(q, kernel.truncation_radius(), |i, u| {
            let w = self.points.weight(i) * kernel.shadow_weight(u);
            for (g, (p, qk)) in grad.iter_mut().zip(self.points.point(i).iter().zip(q)) {
                *g += w * (p - qk);
            }
        });
        let scale = 2.0 * normalization_constant(kernel)
            / (self.points.len() as f64 * self.h.powi(dim as i32 + 2));
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok(grad)
    }

    /// The mean shift vector `m(q)`.
    pub fn mean_shift_vector<S: ShadowProfile + ?Sized>(&self, shadow: &S, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        let (mut num, den) = self.shift_sums(shadow, q, None);
        if !(den > 0.0) {
            return Err(Error::EmptySupport);
        }
        num.iter_mut().for_each(|n| *n /= den);
        Ok(num)
    }

    /// Numerator `Σ vᵢ g(uᵢ)(pᵢ − q)` and denominator `Σ vᵢ g(uᵢ)` of the
    /// mean shift vector, optionally leaving out one point.
    pub(crate) fn shift_sums<S: ShadowProfile + ?Sized>(
        &self,
        shadow: &S,
        q: &[f64],
        skip: Option<usize>,
    ) -> (Vec<f64>, f64) {
        let dim = self.points.dim();
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        self.visit(q, shadow.support_radius(), |i, u| {
            if Some(i) == skip {
                return;
            }
            let w = self.points.weight(i) * shadow.shadow_weight(u);
            den += w;
            for (n, (p, qk)) in num.iter_mut().zip(self.points.point(i).iter().zip(q)) {
                *n += w * (p - qk);
            }
        });
        (num, den)
    }

    /// Mean shift iteration `q ← q + m(q)` from `q0`, with the density
    /// recorded under `kernel` and steps driven by `shadow`.
    pub fn mean_shift_with<S: ShadowProfile + ?Sized>(
        &self,
        kernel: &KernelParams,
        shadow: &S,
        q0: &[f64],
        max_iters: usize,
        step_tol: f64,
    ) -> Result<Trajectory> {
        let mut q = q0.to_vec();
        let mut traj = Trajectory {
            iterates: vec![q.clone()],
            densities: vec![self.density(kernel, &q)?],
            stop: StopReason::MaxIterations,
        };
        for t in 0..max_iters {
            let m = match self.mean_shift_vector(shadow, &q) {
                Ok(m) => m,
                Err(Error::EmptySupport) if t > 0 => {
                    traj.stop = StopReason::EmptySupport;
                    return Ok(traj);
                }
                Err(e) => return Err(e),
            };
            q.iter_mut().zip(&m).for_each(|(a, b)| *a += b);
            traj.densities.push(self.density(kernel, &q)?);
            traj.iterates.push(q.clone());
            if m.iter().map(|x| x * x).sum::<f64>().sqrt() < step_tol {
                traj.stop = StopReason::Converged;
                break;
            }
        }
        Ok(traj)
    }
}

pub fn kde(points: &PointCloud, kernel: &KernelParams, h: f64, q: &[f64]) -> Result<f64> {
    Kde::new(points, h)?.density(kernel, q)
}

pub fn kde_gradient(points: &PointCloud, kernel: &KernelParams, h: f64, q: &[f64]) -> Result<Vec<f64>> {
    Kde::new(points, h)?.gradient(kernel, q)
}

pub fn mean_shift_vector<S: ShadowProfile + ?Sized>(
    points: &PointCloud,
    shadow: &S,
    h: f64,
    q: &[f64],
) -> Result<Vec<f64>> {
    Kde::new(points, h)?.mean_shift_vector(shadow, q)
}

/// Runs mean shift from `q0`. An iterate that leaves the support of all
/// points ends the run with [`StopReason::EmptySupport`]; only a start point
/// outside the support is an error.
pub fn mean_shift(
    points: &PointCloud,
    q0: &[f64],
    kernel: &KernelParams,
    config: &MeanShiftConfig,
) -> Result<Trajectory> {
    Kde::new(points, config.h)?.mean_shift_with(kernel, kernel, q0, config.max_iters, config.step_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{profile_g, LOP_SIGMA2};
    use std::f64::consts::PI;

    fn cloud(dim: usize, pts: &[f64]) -> PointCloud {
        PointCloud::new(dim, pts.to_vec()).unwrap()
    }

    #[test]
    fn single_point_density() {
        for &p in &[0.5, 1.0, 2.0] {
            let k = KernelParams::new(2, p, 0.3).unwrap();
            let c = cloud(2, &[0.4, -0.2]);
            let h = 0.7;
            let v = kde(&c, &k, h, &[0.4, -0.2]).unwrap();
            let expected = normalization_constant(&k) * crate::specfun::gamma(p / 2.0).unwrap() / (h * h);
            assert!((v - expected).abs() < 1e-13 * expected);
        }
    }

    #[test]
    fn truncated_far_query() {
        let k = KernelParams::lop(2).with_truncation(1.0).unwrap();
        let c = cloud(2, &[0.0, 0.0, 0.1, 0.0]);
        assert_eq!(kde(&c, &k, 0.5, &[3.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            mean_shift_vector(&c, &k, 0.5, &[3.0, 0.0]),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn two_point_gaussian_hand_value() {
        let s2 = 0.5;
        let k = KernelParams::gaussian(1, s2).unwrap();
        let c = cloud(1, &[-1.0, 1.0]);
        let v = kde(&c, &k, 1.0, &[0.0]).unwrap();
        let normal = (-1.0 / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt();
        assert!((v - 0.5 * 2.0 * normal).abs() < 1e-15);
    }

    #[test]
    fn empty_and_invalid_inputs() {
        let k = KernelParams::lop(2);
        assert!(matches!(kde(&PointCloud::empty(2), &k, 1.0, &[0.0, 0.0]), Err(Error::EmptyInput(_))));
        assert!(kde(&cloud(2, &[0.0, 0.0]), &k, 0.0, &[0.0, 0.0]).is_err());
        assert!(kde(&cloud(2, &[0.0, 0.0]), &k, 1.0, &[0.0]).is_err());
        assert!(MeanShiftConfig::new(1.0, 0, 1e-3).is_err());
        assert!(MeanShiftConfig::new(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn symmetric_gradient_vanishes() {
        let k = KernelParams::lop(2);
        let c = cloud(2, &[-0.3, 0.1, 0.3, -0.1]);
        let g = kde_gradient(&c, &k, 0.5, &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn single_point_jumps() {
        let k = KernelParams::lop(3);
        let c = cloud(3, &[1.0, 2.0, 3.0]);
        let m = mean_shift_vector(&c, &k, 10.0, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(m, vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn five_point_direct_sum() {
        let pts = [0.1, 0.2, -0.3, 0.4, 0.5, -0.1, 0.0, 0.0, 0.25, 0.3];
        let c = cloud(2, &pts);
        let k = KernelParams::lop(2);
        let h = 0.6;
        let q = [0.05, 0.1];
        let mut num = [0.0; 2];
        let mut den = 0.0;
        for p in pts.chunks(2) {
            let r2 = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)) / (h * h);
            let w = profile_g(&k, r2).unwrap();
            den += w;
            num[0] += w * (p[0] - q[0]);
            num[1] += w * (p[1] - q[1]);
        }
        let m = mean_shift_vector(&c, &k, h, &q).unwrap();
        assert!((m[0] - num[0] / den).abs() < 1e-15);
        assert!((m[1] - num[1] / den).abs() < 1e-15);
    }

    #[test]
    fn isolated_point_is_fixed() {
        let k = KernelParams::lop(2).with_truncation(1.0).unwrap();
        let c = cloud(2, &[0.0, 0.0, 5.0, 5.0]);
        let cfg = MeanShiftConfig::with_window(0.5).unwrap();
        let t = mean_shift(&c, &[5.0, 5.0], &k, &cfg).unwrap();
        assert_eq!(t.steps(), 1);
        assert_eq!(t.stop, StopReason::Converged);
        assert_eq!(t.last(), &[5.0, 5.0]);
    }

    #[test]
    fn two_clusters_pick_nearest_mode() {
        let mut pts = vec![0.0; 10];
        pts.extend(vec![10.0; 10]);
        let c = cloud(1, &pts);
        let k = KernelParams::gaussian(1, 1.0).unwrap();
        let cfg = MeanShiftConfig::with_window(1.0).unwrap();
        let t = mean_shift(&c, &[2.0], &k, &cfg).unwrap();
        assert!(t.last()[0].abs() < 1e-6);
        // the stationary point agrees with the argmax of f̂ on a dense grid
        let kd = Kde::new(&c, 1.0).unwrap();
        let best = (0..=5000)
            .map(|i| -2.0 + 0.001 * i as f64)
            .max_by(|a, b| kd.density(&k, &[*a]).unwrap().total_cmp(&kd.density(&k, &[*b]).unwrap()))
            .unwrap();
        assert!((best - t.last()[0]).abs() < 1e-3);
    }

    #[test]
    fn lop_weight_is_theta_over_distance() {
        // with σ² = 1/32 the shadow weight is proportional to exp(−16r²)/r
        let k = KernelParams::new(2, 1.0, LOP_SIGMA2).unwrap();
        let a = k.shadow_weight(0.25) / ((-16.0 * 0.25f64).exp() / 0.5);
        let b = k.shadow_weight(0.01) / ((-16.0 * 0.01f64).exp() / 0.1);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn csv_layout() {
        let t = Trajectory {
            iterates: vec![vec![0.0, 1.0], vec![0.5, 1.0]],
            densities: vec![0.1, 0.2],
            stop: StopReason::MaxIterations,
        };
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,q0,q1,density");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,5.0"));
    }

    #[test]
    fn tree_and_scan_agree() {
        let pts: Vec<f64> = (0..400).map(|i| (i as f64 * 0.913).sin()).collect();
        let c = cloud(2, &pts);
        let k = KernelParams::lop(2).with_truncation(1.0).unwrap();
        let kd = Kde::new(&c, 0.3).unwrap();
        assert!(kd.tree.is_some());
        let q = [c.point(7)[0] + 0.05, c.point(7)[1]];
        let mut brute = 0.0;
        for p in c.points() {
            let u = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)) / 0.09;
            brute += k.eval_sq(u);
        }
        brute /= 200.0 * 0.09;
        assert!(brute > 0.0);
        let got = kd.density(&k, &q).unwrap();
        assert!((got - brute).abs() < 1e-12 * brute, "{got} vs {brute}");
    }
}
