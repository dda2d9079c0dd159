use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{PointCloud, TriangleMesh};
use crate::error::{Error, Result};

/// Adds isotropic Gaussian noise drawn from a two-class mixture.
///
/// Each point independently joins the noise class with probability
/// `frac_noise` (standard deviation `sigma_noise`) or the outlier class
/// (`sigma_outlier`). Standard deviations are in model units. Weights are
/// carried over.
pub fn corrupt_gaussian_mixture(
    cloud: &PointCloud,
    sigma_noise: f64,
    frac_noise: f64,
    sigma_outlier: f64,
    frac_outlier: f64,
    seed: u64,
) -> Result<PointCloud> {
    corrupt_gaussian_mixture_labeled(cloud, sigma_noise, frac_noise, sigma_outlier, frac_outlier, seed)
        .map(|(c, _)| c)
}

/// As [`corrupt_gaussian_mixture`], also returning `true` for every point
/// that was assigned to the outlier class.
pub fn corrupt_gaussian_mixture_labeled(
    cloud: &PointCloud,
    sigma_noise: f64,
    frac_noise: f64,
    sigma_outlier: f64,
    frac_outlier: f64,
    seed: u64,
) -> Result<(PointCloud, Vec<bool>)> {
    let valid_frac = |f: f64| (0.0..=1.0).contains(&f);
    if !valid_frac(frac_noise) || !valid_frac(frac_outlier) || (frac_noise + frac_outlier - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "class fractions {frac_noise} and {frac_outlier} must lie in [0, 1] and sum to 1"
        )));
    }
    if !(sigma_noise >= 0.0) || !(sigma_outlier >= 0.0) {
        return Err(Error::invalid("noise standard deviations must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = cloud.dim();
    let mut coords = cloud.coords().to_vec();
    let mut labels = Vec::with_capacity(cloud.len());
    for p in coords.chunks_exact_mut(dim) {
        let outlier = rng.random::<f64>() >= frac_noise;
        let sigma = if outlier { sigma_outlier } else { sigma_noise };
        for c in p.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c += sigma * z;
        }
        labels.push(outlier);
    }
    let mut out = PointCloud::new(dim, coords)?;
    if let Some(w) = cloud.weights() {
        out = out.with_weights(w.to_vec())?;
    }
    Ok((out, labels))
}

/// Moves every vertex along a uniformly random direction by a distance
/// drawn uniformly from `[0, amplitude_factor · l̄_e]`, with `l̄_e` the mean
/// edge length.
pub fn corrupt_vertices_uniform(mesh: &TriangleMesh, amplitude_factor: f64, seed: u64) -> Result<TriangleMesh> {
    if !(amplitude_factor >= 0.0) {
        return Err(Error::invalid(format!("amplitude factor {amplitude_factor} must be non-negative")));
    }
    let amplitude = amplitude_factor * mesh.mean_edge_length()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = mesh
        .vertices()
        .iter()
        .map(|v| {
            let dir = random_unit_vector(&mut rng);
            let t = amplitude * rng.random::<f64>();
            [v[0] + t * dir[0], v[1] + t * dir[1], v[2] + t * dir[2]]
        })
        .collect();
    mesh.with_vertices(vertices)
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}
