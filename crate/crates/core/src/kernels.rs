//! The incomplete gamma kernel family
//!
//! ```text
//! K_Γ(x | p, σ²) = Γ((d+2)/2) / ((2πσ²)^{d/2} Γ((d+p)/2)) · Γ(p/2, ‖x‖²/(2σ²))
//! ```
//!
//! with profile `k(u) = Γ(p/2, u/(2σ²))` and shadow profile
//! `g(u) = −k'(u) = (2σ²)^{−p/2} u^{p/2−1} e^{−u/(2σ²)}`. `p = 2` is the
//! Gaussian kernel, `p = 1, σ² = 1/32` the LOP kernel.

use crate::error::{Error, Result};
use crate::specfun::{self, erfc, hyp1f1, ln_gamma};

/// σ² of the LOP kernel.
pub const LOP_SIGMA2: f64 = 1.0 / 32.0;

/// Distances below this (in kernel units, i.e. relative to the window size)
/// are clamped before evaluating a singular shadow profile.
pub const SINGULARITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    dim: usize,
    p: f64,
    sigma2: f64,
    truncation_radius: Option<f64>,
    // cached
    norm: f64,
    gamma_scale: f64,
    g_prefactor: f64,
}

impl KernelParams {
    pub fn new(dim: usize, p: f64, sigma2: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::invalid(format!("p = {p} must be positive")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid(format!("sigma2 = {sigma2} must be positive")));
        }
        let d = dim as f64;
        let ln_norm = ln_gamma(0.5 * (d + 2.0))? - ln_gamma(0.5 * (d + p))?
            - 0.5 * d * (2.0 * std::f64::consts::PI * sigma2).ln();
        let gamma_scale = 2.0 * sigma2;
        Ok(Self {
            dim,
            p,
            sigma2,
            truncation_radius: None,
            norm: ln_norm.exp(),
            gamma_scale,
            g_prefactor: gamma_scale.powf(-0.5 * p),
        })
    }

    /// The LOP kernel, `p = 1`, `σ² = 1/32`.
    pub fn lop(dim: usize) -> Self {
        Self::new(dim, 1.0, LOP_SIGMA2).expect("valid LOP parameters")
    }

    pub fn gaussian(dim: usize, sigma2: f64) -> Result<Self> {
        Self::new(dim, 2.0, sigma2)
    }

    /// Hard cutoff: the kernel (and its shadow) is zero for ‖x‖ > `radius`.
    /// The radius is in kernel-argument units, so inside a density estimate
    /// with window `h` it corresponds to `radius · h` in model units.
    pub fn with_truncation(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("truncation radius {radius} must be positive")));
        }
        self.truncation_radius = Some(radius);
        Ok(self)
    }

    pub fn without_truncation(mut self) -> Self {
        self.truncation_radius = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    /// Gamma shape `a = p/2`.
    pub fn shape(&self) -> f64 {
        0.5 * self.p
    }

    /// Gamma scale `b = 2σ²`.
    pub fn scale(&self) -> f64 {
        self.gamma_scale
    }

    fn within_support(&self, r2: f64) -> bool {
        match self.truncation_radius {
            Some(r) => r2 <= r * r,
            None => true,
        }
    }

    /// Kernel value at squared norm `r2`.
    #[inline]
    pub fn eval_sq(&self, r2: f64) -> f64 {
        if !self.within_support(r2) {
            return 0.0;
        }
        self.norm * self.profile_k_unchecked(r2)
    }

    #[inline]
    fn profile_k_unchecked(&self, u: f64) -> f64 {
        if self.p == 2.0 {
            return (-u / self.gamma_scale).exp();
        }
        specfun::upper_inc_gamma_unchecked(self.shape(), u / self.gamma_scale)
    }

    #[inline]
    fn profile_g_unchecked(&self, u: f64) -> f64 {
        let a = self.shape();
        let base = self.g_prefactor * (-u / self.gamma_scale).exp();
        if a == 1.0 {
            base
        } else if a == 0.5 {
            base / u.sqrt()
        } else {
            base * u.powf(a - 1.0)
        }
    }
}

/// Weight function of a shadow kernel as used by mean shift iterations.
pub trait ShadowProfile: Sync {
    /// `g(u)` at squared scaled distance `u`: clamped at the singularity
    /// floor and zero outside the support.
    fn shadow_weight(&self, u: f64) -> f64;

    /// Radius beyond which `shadow_weight` vanishes, if any.
    fn support_radius(&self) -> Option<f64>;
}

impl ShadowProfile for KernelParams {
    #[inline]
    fn shadow_weight(&self, u: f64) -> f64 {
        if !self.within_support(u) {
            return 0.0;
        }
        self.profile_g_unchecked(u.max(SINGULARITY_FLOOR * SINGULARITY_FLOOR))
    }

    fn support_radius(&self) -> Option<f64> {
        self.truncation_radius
    }
}

/// The normalization constant `c` with `∫ c·k(‖x‖²) dx = 1`.
pub fn normalization_constant(params: &KernelParams) -> f64 {
    params.norm
}

pub fn kernel_eval(params: &KernelParams, x: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), params.dim);
    params.eval_sq(norm_sq(x))
}

/// Profile `k(u) = Γ(p/2, u/(2σ²))`. Truncation is not applied here.
pub fn profile_k(params: &KernelParams, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::domain("profile_k", format!("u = {u} must be non-negative")));
    }
    Ok(params.profile_k_unchecked(u))
}

/// Shadow profile `g(u) = −k'(u)`; singular at `u = 0` when `p < 2`.
pub fn profile_g(params: &KernelParams, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::domain("profile_g", format!("u = {u} must be non-negative")));
    }
    if u == 0.0 {
        return match params.p {
            p if p < 2.0 => Err(Error::Singularity {
                function: "profile_g",
                at: 0.0,
            }),
            p if p == 2.0 => Ok(params.g_prefactor),
            _ => Ok(0.0),
        };
    }
    Ok(params.profile_g_unchecked(u))
}

/// Normalization constant of the shadow kernel `G = c_G g(‖x‖²)`.
///
/// `g(‖x‖²)` behaves like `‖x‖^{p−2}` at the origin, so it is integrable
/// only when `d + p > 2`.
pub fn normalization_constant_g(params: &KernelParams) -> Result<f64> {
    let d = params.dim as f64;
    if d + params.p <= 2.0 {
        return Err(Error::domain(
            "normalization_constant_g",
            format!("shadow kernel is not integrable for d + p = {} <= 2", d + params.p),
        ));
    }
    let ln_inv = 0.5 * d * std::f64::consts::PI.ln() + (0.5 * d - 1.0) * params.gamma_scale.ln()
        + ln_gamma(0.5 * (d + params.p) - 1.0)?
        - ln_gamma(0.5 * d)?;
    Ok((-ln_inv).exp())
}

/// The normalized shadow kernel `G_Γ(x)`.
pub fn kernel_g_eval(params: &KernelParams, x: &[f64]) -> Result<f64> {
    let c = normalization_constant_g(params)?;
    let r2 = norm_sq(x);
    if !params.within_support(r2) {
        return Ok(0.0);
    }
    if r2 == 0.0 && params.p < 2.0 {
        return Err(Error::Singularity {
            function: "kernel_g_eval",
            at: 0.0,
        });
    }
    Ok(c * profile_g(params, r2)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelValueWithGradient {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `K(x)` and `∇K(x) = −2 c g(‖x‖²) x`. At the origin the gradient is zero.
pub fn kernel_value_with_gradient(params: &KernelParams, x: &[f64]) -> KernelValueWithGradient {
    let r2 = norm_sq(x);
    let value = params.eval_sq(r2);
    let gradient = if r2 == 0.0 || !params.within_support(r2) {
        vec![0.0; x.len()]
    } else {
        let s = -2.0 * params.norm * params.profile_g_unchecked(r2);
        x.iter().map(|xi| s * xi).collect()
    };
    KernelValueWithGradient { value, gradient }
}

/// Characteristic function `₁F₁((d+p)/2; (d+2)/2; −σ²‖ω‖²/2)`.
pub fn characteristic_fn(params: &KernelParams, omega: &[f64]) -> Result<f64> {
    let (a, b) = hyp_params(params);
    hyp1f1(a, b, -0.5 * params.sigma2 * norm_sq(omega))
}

/// Moment-generating function `₁F₁((d+p)/2; (d+2)/2; σ²‖ω‖²/2)`.
pub fn mgf(params: &KernelParams, omega: &[f64]) -> Result<f64> {
    let (a, b) = hyp_params(params);
    hyp1f1(a, b, 0.5 * params.sigma2 * norm_sq(omega))
}

fn hyp_params(params: &KernelParams) -> (f64, f64) {
    let d = params.dim as f64;
    (0.5 * (d + params.p), 0.5 * (d + 2.0))
}

pub fn kernel_mean(params: &KernelParams) -> Vec<f64> {
    vec![0.0; params.dim]
}

/// Isotropic covariance factor: `Σ = (d+p)/(d+2) σ² I`.
pub fn kernel_covariance(params: &KernelParams) -> f64 {
    let d = params.dim as f64;
    (d + params.p) / (d + 2.0) * params.sigma2
}

/// Lower end of the interval on which the profile is convex.
pub fn profile_convexity_threshold(params: &KernelParams) -> f64 {
    ((params.p - 2.0) * params.sigma2).max(0.0)
}

/// Strict positive definiteness is established for `p ∈ (0, 2]` (with or
/// without truncation); larger `p` is reported as not positive definite.
pub fn is_strictly_positive_definite(params: &KernelParams) -> bool {
    params.p <= 2.0
}

/// The LOP kernel written with the complementary error function.
pub fn lop_kernel_erfc(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    let ln_c = d * 4f64.ln() - 0.5 * (d - 1.0) * std::f64::consts::PI.ln()
        + ln_gamma(0.5 * (d + 2.0)).expect("positive")
        - ln_gamma(0.5 * (d + 1.0)).expect("positive");
    ln_c.exp() * erfc(4.0 * r)
}

#[inline]
pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}
