//! Three-component Gaussian mixture approximations of the LOP kernel.
//!
//! A parameter set `{(ŵₖ, σ̂ₖ)}` describes the approximate shadow weight
//! `ĝ(x) = Σ ŵₖ exp(−x²/(2σ̂ₖ²))` of the LOP attraction `α(x) = θ(x)/x`, and
//! through it the approximate kernel
//!
//! ```text
//! K̂(x) = Σ σ̂ₖ² ŵₖ ĉₖ N(x | 0, σ̂ₖ² I) / Σ σ̂ₖ² ŵₖ ĉₖ,   ĉₖ = (2πσ̂ₖ²)^{d/2}
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{lop_kernel_erfc, ShadowProfile, LOP_SIGMA2};
use crate::specfun::{erfc, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmmLabel {
    Clop,
    Ours,
    OursConsistent,
    Custom,
}

impl GmmLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GmmLabel::Clop => "clop",
            GmmLabel::Ours => "ours",
            GmmLabel::OursConsistent => "ours_consistent",
            GmmLabel::Custom => "custom",
        }
    }
}

impl fmt::Display for GmmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GmmLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "clop" => Ok(GmmLabel::Clop),
            "ours" => Ok(GmmLabel::Ours),
            "ours_consistent" | "consistent" => Ok(GmmLabel::OursConsistent),
            "custom" => Ok(GmmLabel::Custom),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmApprox {
    components: [(f64, f64); 3],
    label: GmmLabel,
}

impl GmmApprox {
    /// Components are `(ŵ, σ̂)` pairs; both must be positive and finite.
    pub fn new(components: [(f64, f64); 3], label: GmmLabel) -> Result<Self> {
        for (k, &(w, s)) in components.iter().enumerate() {
            if !(w > 0.0 && w.is_finite() && s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("component {} has w = {w}, sigma = {s}", k + 1)));
            }
        }
        Ok(Self { components, label })
    }

    pub fn components(&self) -> &[(f64, f64); 3] {
        &self.components
    }

    pub fn label(&self) -> GmmLabel {
        self.label
    }

    pub fn weights(&self) -> [f64; 3] {
        self.components.map(|c| c.0)
    }

    pub fn sigmas(&self) -> [f64; 3] {
        self.components.map(|c| c.1)
    }

    /// The same mixture with every `σ̂ₖ` multiplied by `factor`.
    pub fn scaled_sigmas(&self, factor: f64) -> Result<Self> {
        Self::new(self.components.map(|(w, s)| (w, s * factor)), GmmLabel::Custom)
    }

    /// The same mixture with every `ŵₖ` multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self> {
        Self::new(self.components.map(|(w, s)| (w * factor, s)), self.label)
    }

    /// Mixture probabilities `πₖ ∝ ŵₖ σ̂ₖ^{d+2}` in dimension `d`.
    fn mixture_probabilities(&self, dim: usize) -> [f64; 3] {
        let e = dim as f64 + 2.0;
        // factor out the largest σ to keep the powers in range
        let smax = self.sigmas().into_iter().fold(0.0, f64::max);
        let raw = self.components.map(|(w, s)| w * (s / smax).powf(e));
        let total: f64 = raw.iter().sum();
        raw.map(|r| r / total)
    }

    /// `K̂(x)` for a `d`-dimensional `x`.
    pub fn kernel_eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.kernel_eval_radial(x.len(), r2.sqrt())
    }

    /// `K̂` at distance `r` in dimension `dim`.
    pub fn kernel_eval_radial(&self, dim: usize, r: f64) -> f64 {
        let d = dim as f64;
        self.mixture_probabilities(dim)
            .iter()
            .zip(self.sigmas())
            .map(|(pi, s)| pi * (-r * r / (2.0 * s * s)).exp() / (2.0 * PI * s * s).powf(0.5 * d))
            .sum()
    }

    /// `K̂(r)/K̂(0)`, which does not depend on the dimension.
    pub fn kernel_shape(&self, r: f64) -> f64 {
        let num: f64 = self.components.iter().map(|&(w, s)| s * s * w * (-r * r / (2.0 * s * s)).exp()).sum();
        let den: f64 = self.components.iter().map(|&(w, s)| s * s * w).sum();
        num / den
    }

    /// The approximate shadow weight `ĝ(x) = Σ ŵₖ exp(−x²/(2σ̂ₖ²))`.
    pub fn shadow_eval(&self, x: f64) -> f64 {
        self.components.iter().map(|&(w, s)| w * (-x * x / (2.0 * s * s)).exp()).sum()
    }

    /// Per-axis variance `Σ ŵₖ σ̂ₖ^{d+4} / Σ ŵₖ σ̂ₖ^{d+2}`.
    pub fn variance(&self, dim: usize) -> f64 {
        self.mixture_probabilities(dim)
            .iter()
            .zip(self.sigmas())
            .map(|(pi, s)| pi * s * s)
            .sum()
    }

    /// Limit of [`variance`](Self::variance) as the dimension grows.
    pub fn variance_limit(&self) -> f64 {
        let s = self.sigmas().into_iter().fold(0.0, f64::max);
        s * s
    }

    /// `σ̂/σ_LOP` in dimension `dim`; `None` means the limit `d → ∞`.
    pub fn std_ratio(&self, dim: Option<usize>) -> f64 {
        match dim {
            Some(d) => (self.variance(d) / lop_variance(d)).sqrt(),
            None => (self.variance_limit() / LOP_SIGMA2).sqrt(),
        }
    }

    /// Key-value text form, one `key = value` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("label = {}\n", self.label);
        for (k, (w, s)) in self.components.iter().enumerate() {
            out.push_str(&format!("w{} = {w:.17e}\nsigma{} = {s:.17e}\n", k + 1, k + 1));
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output; blank lines and `#`
    /// comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut label = GmmLabel::Custom;
        let mut w = [None; 3];
        let mut s = [None; 3];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "label" {
                label = value.parse()?;
                continue;
            }
            let number = || value.parse::<f64>().map_err(|e| Error::parse(n + 1, format!("{key}: {e}")));
            let slot = |prefix: &str| {
                key.strip_prefix(prefix)
                    .and_then(|i| i.parse::<usize>().ok())
                    .filter(|i| (1..=3).contains(i))
            };
            if let Some(i) = slot("sigma") {
                s[i - 1] = Some(number()?);
            } else if let Some(i) = slot("w") {
                w[i - 1] = Some(number()?);
            } else {
                return Err(Error::parse(n + 1, format!("unknown key `{key}`")));
            }
        }
        let mut components = [(0.0, 0.0); 3];
        for k in 0..3 {
            match (w[k], s[k]) {
                (Some(wk), Some(sk)) => components[k] = (wk, sk),
                _ => return Err(Error::parse(0, format!("component {} incomplete", k + 1))),
            }
        }
        Self::new(components, label)
    }
}

impl ShadowProfile for GmmApprox {
    fn shadow_weight(&self, u: f64) -> f64 {
        match self.support_radius() {
            Some(r) if u > r * r => 0.0,
            _ => self.components.iter().map(|&(w, s)| w * (-u / (2.0 * s * s)).exp()).sum(),
        }
    }

    /// Where the widest component has decayed to `e^{−16}`, but never
    /// inside the window `h`.
    fn support_radius(&self) -> Option<f64> {
        Some((32.0 * self.variance_limit()).sqrt().max(1.0))
    }
}

/// Per-axis variance of `K_LOP` in dimension `d`: `(d+1)/(d+2) / 32`.
pub fn lop_variance(dim: usize) -> f64 {
    let d = dim as f64;
    (d + 1.0) / (d + 2.0) * LOP_SIGMA2
}

pub fn builtin_params(label: GmmLabel) -> Result<GmmApprox> {
    let c = match label {
        GmmLabel::Clop => [(97.761, 0.01010), (29.886, 0.03287), (11.453, 0.11772)],
        GmmLabel::Ours => [(61.509, 0.02102), (11.932, 0.07289), (5.069, 0.15700)],
        GmmLabel::OursConsistent => [(46.409, 0.03118), (9.635, 0.10582), (2.674, LOP_SIGMA2.sqrt())],
        GmmLabel::Custom => return Err(Error::UnknownLabel("custom has no built-in parameters".into())),
    };
    GmmApprox::new(c, label)
}

/// The radial shape a fit is matched against, normalized to 1 at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitTarget {
    /// `K_LOP(x)/K_LOP(0) = erfc(4x)`.
    Lop,
    /// `exp(−x²/(2σ²))` with the given `σ`.
    Gaussian(f64),
}

impl FitTarget {
    pub fn shape(self, x: f64) -> f64 {
        match self {
            FitTarget::Lop => erfc(4.0 * x),
            FitTarget::Gaussian(s) => (-x * x / (2.0 * s * s)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub n_samples: usize,
    /// Sampling interval of the radii.
    pub interval: (f64, f64),
    /// Holds `σ̂₃` at this value during the fit.
    pub fix_sigma3: Option<f64>,
    pub max_lm_iters: usize,
    /// Relative cost change below which LM stops.
    pub lm_tolerance: f64,
    pub target: FitTarget,
    pub seed: u64,
    /// Starting point; `ŵ₃` is rescaled to 1.
    pub initial: Option<GmmApprox>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            interval: (0.0, 1.0),
            fix_sigma3: None,
            max_lm_iters: 500,
            lm_tolerance: 1e-12,
            target: FitTarget::Lop,
            seed: 0,
            initial: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 5 {
            return Err(Error::invalid(format!("n_samples = {} is too small", self.n_samples)));
        }
        let (a, b) = self.interval;
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::invalid(format!("bad sampling interval [{a}, {b}]")));
        }
        if let Some(s) = self.fix_sigma3 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("fixed sigma3 = {s} must be positive")));
            }
        }
        if !(self.lm_tolerance > 0.0) {
            return Err(Error::invalid("lm_tolerance must be positive"));
        }
        if let FitTarget::Gaussian(s) = self.target {
            if !(s > 0.0) {
                return Err(Error::invalid("Gaussian target needs a positive sigma"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub approx: GmmApprox,
    /// Root mean square shape residual over the samples.
    pub rms: f64,
    /// Max shape error on a uniform grid of 10⁴ + 1 radii over the interval.
    pub linf: f64,
    /// Integral of the absolute shape error over the interval.
    pub l1: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Factor applied to all `ŵₖ` after the shape fit.
    pub weight_scale: f64,
}

/// Errors of `approx` against `target` in shape: `(L∞, L1)` over `[a, b]`.
pub fn shape_errors(approx: &GmmApprox, target: FitTarget, interval: (f64, f64)) -> (f64, f64) {
    const N: usize = 10_000;
    let (a, b) = interval;
    let step = (b - a) / N as f64;
    let err: Vec<f64> = (0..=N)
        .map(|i| {
            let x = a + step * i as f64;
            (approx.kernel_shape(x) - target.shape(x)).abs()
        })
        .collect();
    let linf = err.iter().copied().fold(0.0, f64::max);
    (linf, simpson(&err, step))
}

fn simpson(f: &[f64], step: f64) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n % 2 == 0);
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 * f[i] } else { 2.0 * f[i] }).sum();
    step / 3.0 * (f[0] + f[n] + inner)
}

const NP: usize = 5;
type Params = SVector<f64, NP>;

/// Log parameters `(ln ŵ₁, ln ŵ₂, ln σ̂₁, ln σ̂₂, ln σ̂₃)`; `ŵ₃ = 1`.
fn unpack(t: &Params) -> [(f64, f64); 3] {
    [(t[0].exp(), t[2].exp()), (t[1].exp(), t[3].exp()), (1.0, t[4].exp())]
}

struct Normal {
    jtj: SMatrix<f64, NP, NP>,
    jtr: Params,
    cost: f64,
}

fn normal_equations(t: &Params, xs: &[f64], target: FitTarget, free: usize) -> Normal {
    let c = unpack(t);
    let m0: f64 = c.iter().map(|&(w, s)| s * s * w).sum();
    let mut jtj = SMatrix::<f64, NP, NP>::zeros();
    let mut jtr = Params::zeros();
    let mut cost = 0.0;
    for &x in xs {
        let mut m = 0.0;
        let mut dm = Params::zeros();
        let mut dm0 = Params::zeros();
        for (k, &(w, s)) in c.iter().enumerate() {
            let a = s * s * w;
            let e = a * (-x * x / (2.0 * s * s)).exp();
            m += e;
            if k < 2 {
                dm[k] = e;
                dm0[k] = a;
            }
            dm[2 + k] = e * (2.0 + x * x / (s * s));
            dm0[2 + k] = 2.0 * a;
        }
        let r = m / m0 - target.shape(x);
        let mut j = (dm * m0 - dm0 * m) / (m0 * m0);
        for i in free..NP {
            j[i] = 0.0;
        }
        cost += r * r;
        jtj += j * j.transpose();
        jtr += j * r;
    }
    Normal { jtj, jtr, cost }
}

/// Least-squares fit of the mixture shape to `config.target` over uniformly
/// sampled radii, with `ŵ₃ = 1`, followed by a global scale of the weights
/// that matches `ĝ` to `α(x) = e^{−16x²}/x` on `(0.01, 1]` (LOP target only).
///
/// When LM runs out of iterations the best parameters found are returned with
/// `converged = false`.
pub fn fit_kernel_gmm(config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (a, b) = config.interval;
    let xs: Vec<f64> = (0..config.n_samples).map(|_| a + (b - a) * rng.random::<f64>()).collect();

    let start = match &config.initial {
        Some(g) => g.components,
        None => [(10.0, 0.02), (3.0, 0.06), (1.0, 0.15)],
    };
    let w3 = start[2].0;
    let mut t = Params::new(
        (start[0].0 / w3).ln(),
        (start[1].0 / w3).ln(),
        start[0].1.ln(),
        start[1].1.ln(),
        config.fix_sigma3.unwrap_or(start[2].1).ln(),
    );
    let free = if config.fix_sigma3.is_some() { 4 } else { 5 };

    let mut lambda = 1e-3;
    let mut cur = normal_equations(&t, &xs, config.target, free);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_lm_iters {
        iterations += 1;
        if cur.jtr.amax() < 1e-12 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut lhs = cur.jtj;
            for i in 0..NP {
                lhs[(i, i)] += lambda * cur.jtj[(i, i)].max(1e-300);
                if i >= free {
                    lhs[(i, i)] = 1.0;
                }
            }
            let Some(delta) = lhs.cholesky().map(|ch| ch.solve(&(-cur.jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = t + delta;
            let next = normal_equations(&trial, &xs, config.target, free);
            if next.cost.is_finite() && next.cost < cur.cost {
                let rel = (cur.cost - next.cost) / cur.cost.max(f64::MIN_POSITIVE);
                t = trial;
                cur = next;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if rel < config.lm_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at any damping: a stationary point
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    if !converged {
        log::warn!("LM fit stopped after {iterations} iterations without converging");
    }

    let mut components = unpack(&t);
    if let Some(s3) = config.fix_sigma3 {
        // exact constraint, independent of exp(ln(·)) rounding
        components[2].1 = s3;
    }
    let shape_only = GmmApprox::new(components, GmmLabel::Custom)?;
    let weight_scale = match config.target {
        FitTarget::Lop => attraction_scale(&shape_only),
        FitTarget::Gaussian(_) => 1.0,
    };
    let approx = shape_only.scaled_weights(weight_scale)?;
    let (linf, l1) = shape_errors(&approx, config.target, config.interval);
    Ok(FitResult {
        approx,
        rms: (cur.cost / xs.len() as f64).sqrt(),
        linf,
        l1,
        iterations,
        converged,
        weight_scale,
    })
}

/// Least-squares factor `s` minimizing `Σ (s ĝ(x) − α(x))²` over a uniform
/// grid on `(0.01, 1]`. The problem is linear in `s`, so the LM solution is
/// the closed form.
pub fn attraction_scale(approx: &GmmApprox) -> f64 {
    const N: usize = 10_000;
    let (a, b) = (0.01, 1.0);
    let (mut ga, mut gg) = (0.0, 0.0);
    for i in 1..=N {
        let x = a + (b - a) * i as f64 / N as f64;
        let g = approx.shadow_eval(x);
        let alpha = (-16.0 * x * x).exp() / x;
        ga += g * alpha;
        gg += g * g;
    }
    ga / gg
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleCorrection {
    pub b_opt: f64,
    pub l1_before: f64,
    pub l1_after: f64,
}

/// `∫_{ℝᵈ} |K̂_b(x) − K_LOP(x)| dx`, where `K̂_b` has every `σ̂ₖ` replaced by
/// `σ̂ₖ/b`. Radial composite Simpson rule with 10⁴ intervals on `[0, 1.5]`.
pub fn l1_distance(approx: &GmmApprox, dim: usize, b: f64) -> f64 {
    const N: usize = 10_000;
    const R: f64 = 1.5;
    let scaled = approx.scaled_sigmas(1.0 / b).expect("positive scale");
    let d = dim as f64;
    let sphere = (2f64.ln() + 0.5 * d * PI.ln() - ln_gamma(0.5 * d).expect("positive")).exp();
    let step = R / N as f64;
    let f: Vec<f64> = (0..=N)
        .map(|i| {
            let r = step * i as f64;
            (scaled.kernel_eval_radial(dim, r) - lop_kernel_erfc(dim, r)).abs() * r.powi(dim as i32 - 1)
        })
        .collect();
    sphere * simpson(&f, step)
}

/// Golden-section search for the `b ∈ [0.5, 2]` minimizing
/// [`l1_distance`], to a bracket width of `1e-4`.
pub fn optimal_scale_correction(approx: &GmmApprox, dim: usize) -> Result<ScaleCorrection> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let f = |b: f64| l1_distance(approx, dim, b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.5, 2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-4 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let l1_before = f(1.0);
    let (mut b_opt, mut l1_after) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if l1_before < l1_after {
        b_opt = 1.0;
        l1_after = l1_before;
    }
    Ok(ScaleCorrection {
        b_opt,
        l1_before,
        l1_after,
    })
}
