//! Incomplete gamma kernels and the algorithms built on them.
//!
//! The kernel family `K_Γ(x | p, σ²) ∝ Γ(p/2, ‖x‖²/(2σ²))` links Mean Shift
//! mode seeking to the locally optimal projection (LOP) operator: running
//! Mean Shift with the `p = 1, σ² = 1/32` member reproduces the localized
//! L1 attraction of LOP step for step. This crate provides
//!
//! - [`specfun`]: incomplete gamma, error functions, ₁F₁, Bessel J, quadrature
//! - [`kernels`]: the kernel family and its analytic properties
//! - [`geometry`]: point clouds, triangle meshes, k-d tree, file I/O, corruption
//! - [`meanshift`]: kernel density estimation and mode seeking
//! - [`projection`]: LOP/WLOP projection and density weighting schemes
//! - [`gmmfit`]: three-component Gaussian mixture approximations of the LOP kernel
//! - [`robustloss`]: incomplete gamma losses and face-normal filtering
//! - [`metrics`]: regularity, point-to-surface distance, angular distance, mean density

pub mod error;
pub mod geometry;
pub mod gmmfit;
pub mod kernels;
pub mod meanshift;
pub mod metrics;
pub mod projection;
pub mod robustloss;
pub mod specfun;

pub use error::{Error, Result};
