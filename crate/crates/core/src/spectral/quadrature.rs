//! Tensor-product quadrature on the 3-sphere.
//!
//! The χ direction uses Gauss–Chebyshev nodes of the second kind (which absorb the
//! `sin²χ` weight), θ uses Gauss–Legendre nodes in `cos θ` and φ is uniform. A grid built
//! for design degree `D` integrates every polynomial of degree `<= 2D` exactly up to
//! rounding, so products of two band-`D` expansions are resolved.

use std::f64::consts::PI;

use super::basis::{self, triangle_len, triangle_offset};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending in the node.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product quadrature grid with precomputed one-dimensional basis tables.
#[derive(Debug)]
pub struct QuadratureGrid {
    design: usize,
    n_chi: usize,
    n_theta: usize,
    n_phi: usize,
    /// `(cos χ_i, sin χ_i)`.
    chi: Vec<(f64, f64)>,
    chi_weights: Vec<f64>,
    theta: Vec<(f64, f64)>,
    theta_weights: Vec<f64>,
    phi: Vec<(f64, f64)>,
    phi_weight: f64,
    /// Radial profiles, `[l][n][i]` with the triangle layout of [`basis::triangle_offset`].
    radial: Vec<f64>,
    /// Radial profiles pre-multiplied by the χ weights.
    radial_w: Vec<f64>,
    /// Legendre profiles, `[m][n][j]`.
    legendre: Vec<f64>,
    legendre_w: Vec<f64>,
    /// Azimuthal factors, `[m + D][s]`.
    azimuthal: Vec<f64>,
    weights: Vec<f64>,
    points: Vec<[f64; 4]>,
}

impl QuadratureGrid {
    /// Grid exact for products of two expansions of degree `<= design`.
    pub fn new(design: usize) -> Self {
        let n_chi = design + 1;
        let n_theta = design + 1;
        let n_phi = 2 * design + 1;

        let h = PI / (n_chi as f64 + 1.0);
        let chi: Vec<(f64, f64)> = (1..=n_chi).map(|i| {
            let a = i as f64 * h;
            (a.cos(), a.sin())
        }).collect();
        let chi_weights: Vec<f64> = chi.iter().map(|&(_, s)| h * s * s).collect();

        let (gl_nodes, gl_weights) = gauss_legendre(n_theta);
        let theta: Vec<(f64, f64)> = gl_nodes.iter().map(|&c| (c, (1.0 - c * c).max(0.0).sqrt())).collect();

        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<(f64, f64)> = (0..n_phi).map(|s| {
            let a = s as f64 * dphi;
            (a.cos(), a.sin())
        }).collect();

        let tri = triangle_len(design);
        let mut radial = vec![0.0; tri * n_chi];
        let mut radial_w = vec![0.0; tri * n_chi];
        let mut scratch = Vec::new();
        for (i, &(c, s)) in chi.iter().enumerate() {
            basis::radial_profiles(design, c, s, &mut scratch);
            for (t, v) in scratch.iter().enumerate() {
                radial[t * n_chi + i] = *v;
                radial_w[t * n_chi + i] = *v * chi_weights[i];
            }
        }
        let mut legendre = vec![0.0; tri * n_theta];
        let mut legendre_w = vec![0.0; tri * n_theta];
        for (j, &(c, s)) in theta.iter().enumerate() {
            basis::legendre_profiles(design, c, s, &mut scratch);
            for (t, v) in scratch.iter().enumerate() {
                legendre[t * n_theta + j] = *v;
                legendre_w[t * n_theta + j] = *v * gl_weights[j];
            }
        }
        let mut azimuthal = vec![0.0; (2 * design + 1) * n_phi];
        for (s, &(c, sn)) in phi.iter().enumerate() {
            basis::azimuthal_factors_cs(design, c, sn, &mut scratch);
            for (t, v) in scratch.iter().enumerate() {
                azimuthal[t * n_phi + s] = *v;
            }
        }

        let total = n_chi * n_theta * n_phi;
        let mut weights = Vec::with_capacity(total);
        let mut points = Vec::with_capacity(total);
        for (i, &(cc, sc)) in chi.iter().enumerate() {
            for (j, &(ct, st)) in theta.iter().enumerate() {
                let w = chi_weights[i] * gl_weights[j] * dphi;
                for &(cp, sp) in &phi {
                    weights.push(w);
                    points.push([sc * st * cp, sc * st * sp, sc * ct, cc]);
                }
            }
        }

        Self {
            design,
            n_chi,
            n_theta,
            n_phi,
            chi,
            chi_weights,
            theta,
            theta_weights: gl_weights,
            phi,
            phi_weight: dphi,
            radial,
            radial_w,
            legendre,
            legendre_w,
            azimuthal,
            weights,
            points,
        }
    }

    pub fn design(&self) -> usize {
        self.design
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_chi, self.n_theta, self.n_phi)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    pub fn chi_nodes(&self) -> &[(f64, f64)] {
        &self.chi
    }

    pub fn chi_weights(&self) -> &[f64] {
        &self.chi_weights
    }

    pub fn theta_nodes(&self) -> &[(f64, f64)] {
        &self.theta
    }

    pub fn theta_weights(&self) -> &[f64] {
        &self.theta_weights
    }

    pub fn phi_nodes(&self) -> &[(f64, f64)] {
        &self.phi
    }

    pub fn phi_weight(&self) -> f64 {
        self.phi_weight
    }

    /// Radial profile `F_{l+n,l}` sampled on the χ nodes.
    pub(crate) fn radial_row(&self, l: usize, n: usize) -> &[f64] {
        let t = triangle_offset(self.design, l) + n;
        &self.radial[t * self.n_chi..(t + 1) * self.n_chi]
    }

    pub(crate) fn radial_row_weighted(&self, l: usize, n: usize) -> &[f64] {
        let t = triangle_offset(self.design, l) + n;
        &self.radial_w[t * self.n_chi..(t + 1) * self.n_chi]
    }

    pub(crate) fn legendre_row(&self, m: usize, n: usize) -> &[f64] {
        let t = triangle_offset(self.design, m) + n;
        &self.legendre[t * self.n_theta..(t + 1) * self.n_theta]
    }

    pub(crate) fn legendre_row_weighted(&self, m: usize, n: usize) -> &[f64] {
        let t = triangle_offset(self.design, m) + n;
        &self.legendre_w[t * self.n_theta..(t + 1) * self.n_theta]
    }

    pub(crate) fn azimuthal_row(&self, m: i64) -> &[f64] {
        let t = (m + self.design as i64) as usize;
        &self.azimuthal[t * self.n_phi..(t + 1) * self.n_phi]
    }

    /// Sum of `weights · values`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let p12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((p12 - 2.0 / 13.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn grid_total_area_and_moments() {
        let g = QuadratureGrid::new(6);
        let area: f64 = g.weights().iter().sum();
        assert!((area - 2.0 * PI * PI).abs() < 1e-12);
        let x4sq: Vec<f64> = g.points().iter().map(|p| p[3] * p[3]).collect();
        assert!((g.integrate(&x4sq) - PI * PI / 2.0).abs() < 1e-12);
        let x12: Vec<f64> = g.points().iter().map(|p| p[0] * p[1]).collect();
        assert!(g.integrate(&x12).abs() < 1e-13);
        for p in g.points() {
            let n: f64 = p.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }
}
