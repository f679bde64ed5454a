//! The third-order conformally covariant boundary operator of the round sphere.
//!
//! It is diagonal in the harmonic basis with eigenvalue `k(k+1)(k+2)` on degree `k`,
//! i.e. `sqrt(λ_k + 1) · λ_k` where `λ_k = k(k+2)` is the Laplace eigenvalue.

use crate::spectral::SpectralField;

/// Eigenvalue on degree `k`, computed exactly in integers.
pub fn multiplier(k: usize) -> f64 {
    (k as u128 * (k as u128 + 1) * (k as u128 + 2)) as f64
}

/// Eigenvalues for degrees `0..=band_limit` paired with their multiplicities.
pub fn spectrum(band_limit: usize) -> Vec<(f64, usize)> {
    (0..=band_limit).map(|k| (multiplier(k), (k + 1) * (k + 1))).collect()
}

/// Applies the operator.
pub fn apply(w: &SpectralField) -> SpectralField {
    w.map_degrees(multiplier)
}

/// Applies the square root of the operator.
pub fn apply_sqrt(w: &SpectralField) -> SpectralField {
    w.map_degrees(|k| multiplier(k).sqrt())
}

/// `⟨w, P w⟩`.
pub fn quadratic_form(w: &SpectralField) -> f64 {
    (0..=w.band_limit())
        .map(|k| multiplier(k) * w.degree_block(k).iter().map(|c| c * c).sum::<f64>())
        .sum()
}

/// `‖w‖²_{H^{3/2}} = Σ (1 + μ_k) |w_k|²`.
pub fn h32_norm_sq(w: &SpectralField) -> f64 {
    (0..=w.band_limit())
        .map(|k| (1.0 + multiplier(k)) * w.degree_block(k).iter().map(|c| c * c).sum::<f64>())
        .sum()
}
