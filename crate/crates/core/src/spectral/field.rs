use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::basis::{count_up_to, coordinate_index, degree_offset, COORDINATE_SCALE};
use super::quadrature::QuadratureGrid;

/// Band-limited function stored by its real harmonic coefficients, degree-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    band_limit: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(band_limit: usize) -> Self {
        Self { band_limit, coeffs: vec![0.0; count_up_to(band_limit)] }
    }

    /// Builds a field from a coefficient vector whose length must be `count_up_to(band_limit)`.
    pub fn from_coeffs(band_limit: usize, coeffs: Vec<f64>) -> Option<Self> {
        (coeffs.len() == count_up_to(band_limit)).then_some(Self { band_limit, coeffs })
    }

    /// The constant function `value`.
    pub fn constant(band_limit: usize, value: f64) -> Self {
        let mut f = Self::zeros(band_limit);
        f.coeffs[0] = value * CONSTANT_NORM;
        f
    }

    /// The ambient coordinate `x_{axis}` (0-based) restricted to the sphere.
    pub fn coordinate(band_limit: usize, axis: usize) -> Self {
        assert!(band_limit >= 1, "coordinates need band limit at least 1");
        let mut f = Self::zeros(band_limit);
        f.coeffs[coordinate_index(axis)] = COORDINATE_SCALE;
        f
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficients of degree exactly `k` (empty if `k` exceeds the band limit).
    pub fn degree_block(&self, k: usize) -> &[f64] {
        if k > self.band_limit {
            return &[];
        }
        &self.coeffs[degree_offset(k)..degree_offset(k + 1)]
    }

    /// Same function with a new band limit, padding with zeros or dropping high degrees.
    pub fn resized(&self, band_limit: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(count_up_to(band_limit), 0.0);
        Self { band_limit, coeffs }
    }

    /// Mean value over the sphere.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / CONSTANT_NORM
    }

    /// Integral over the sphere.
    pub fn integral(&self) -> f64 {
        self.coeffs[0] * CONSTANT_NORM
    }

    /// `L²` norm over the round sphere.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `L²` inner product, with missing coefficients treated as zero.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Adds a constant function.
    pub fn add_constant(&mut self, c: f64) {
        self.coeffs[0] += c * CONSTANT_NORM;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { band_limit: self.band_limit, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Sum of two fields, with the larger band limit.
    pub fn add(&self, other: &Self) -> Self {
        let band = self.band_limit.max(other.band_limit);
        let mut out = self.resized(band);
        for (o, c) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += c;
        }
        out
    }

    /// Multiplies degree `k` by `mult(k)`.
    pub fn map_degrees(&self, mut mult: impl FnMut(usize) -> f64) -> Self {
        let mut out = self.clone();
        for k in 0..=self.band_limit {
            let m = mult(k);
            for c in &mut out.coeffs[degree_offset(k)..degree_offset(k + 1)] {
                *c *= m;
            }
        }
        out
    }

    /// Largest absolute coefficient difference between two fields.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0.0);
                let b = other.coeffs.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `∫ Y_0 = sqrt(2π²)`, i.e. the coefficient of the constant function `1`.
pub const CONSTANT_NORM: f64 = 4.442_882_938_158_366; // π·√2

/// Values of a function on the nodes of a quadrature grid.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Arc<QuadratureGrid>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "grid field length mismatch");
        Self { grid, values }
    }

    /// Samples a closure of the ambient point.
    pub fn from_fn(grid: Arc<QuadratureGrid>, f: impl Fn(&[f64; 4]) -> f64) -> Self {
        let values = grid.points().iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid));
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_norm_value() {
        let expect = std::f64::consts::PI * std::f64::consts::SQRT_2;
        assert!((CONSTANT_NORM - expect).abs() < 1e-15);
    }

    #[test]
    fn resize_and_add() {
        let a = SpectralField::constant(2, 3.0);
        let b = SpectralField::coordinate(4, 3);
        let c = a.add(&b);
        assert_eq!(c.band_limit(), 4);
        assert!((c.mean() - 3.0).abs() < 1e-15);
        assert_eq!(c.degree_block(1).len(), 4);
        assert!(c.degree_block(5).is_empty());
    }
}
