//! Spectral representation of functions on the round 3-sphere.

pub mod basis;
mod field;
pub mod quadrature;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use field::{GridField, SpectralField, CONSTANT_NORM};
pub use quadrature::QuadratureGrid;

use crate::error::{Error, Result};
use basis::{count_up_to, flat_index, lm_index, PointBasis};

/// Eigenvalue of `-Δ` on degree `k`.
pub fn laplace_eigenvalue(k: usize) -> f64 {
    (k * (k + 2)) as f64
}

/// Multiplicity of the degree-`k` eigenspace.
pub fn multiplicity(k: usize) -> usize {
    (k + 1) * (k + 1)
}

/// Eigenvalues and multiplicities of `-Δ` for degrees `0..=band_limit`.
pub fn laplacian_spectrum(band_limit: usize) -> Vec<(f64, usize)> {
    (0..=band_limit).map(|k| (laplace_eigenvalue(k), multiplicity(k))).collect()
}

/// A band limit together with the quadrature grid used for nonlinear operations.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    band_limit: usize,
    grid: Arc<QuadratureGrid>,
}

impl SpectralSpace {
    /// Space of band limit `band_limit` whose grid resolves degree `oversample · band_limit`.
    pub fn new(band_limit: usize, oversample: usize) -> Result<Self> {
        if oversample == 0 {
            return Err(Error::Parameter("oversample factor must be at least 1".into()));
        }
        let design = (band_limit * oversample).max(1);
        Ok(Self { band_limit, grid: Arc::new(QuadratureGrid::new(design)) })
    }

    /// Space sharing an existing grid.
    pub fn with_grid(band_limit: usize, grid: Arc<QuadratureGrid>) -> Result<Self> {
        if band_limit > grid.design() {
            return Err(Error::Resolution { band_limit, design: grid.design() });
        }
        Ok(Self { band_limit, grid })
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn design(&self) -> usize {
        self.grid.design()
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    fn check_band(&self, band_limit: usize) -> Result<()> {
        if band_limit > self.grid.design() {
            return Err(Error::Resolution { band_limit, design: self.grid.design() });
        }
        Ok(())
    }

    /// Grid values of a band-limited field.
    pub fn synthesize(&self, field: &SpectralField) -> Result<GridField> {
        let k = field.band_limit();
        self.check_band(k)?;
        let g = &*self.grid;
        let (nc, nt, np) = g.shape();
        let c = field.coeffs();

        // Radial stage: one χ profile per (l, m).
        let n_lm = (k + 1) * (k + 1);
        let mut a = vec![0.0; n_lm * nc];
        for l in 0..=k {
            for m in -(l as i64)..=(l as i64) {
                let dst = &mut a[lm_index(l, m) * nc..(lm_index(l, m) + 1) * nc];
                for n in 0..=k - l {
                    let coef = c[flat_index(l + n, l, m)];
                    if coef == 0.0 {
                        continue;
                    }
                    for (d, r) in dst.iter_mut().zip(g.radial_row(l, n)) {
                        *d += coef * r;
                    }
                }
            }
        }

        // Polar stage: one (χ, θ) plane per m.
        let plane = nc * nt;
        let mut b = vec![0.0; (2 * k + 1) * plane];
        for m in -(k as i64)..=(k as i64) {
            let am = m.unsigned_abs() as usize;
            let dst = &mut b[(m + k as i64) as usize * plane..][..plane];
            for l in am..=k {
                let src = &a[lm_index(l, m) * nc..][..nc];
                let leg = g.legendre_row(am, l - am);
                for (i, &av) in src.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    for (d, p) in dst[i * nt..(i + 1) * nt].iter_mut().zip(leg) {
                        *d += av * p;
                    }
                }
            }
        }

        // Azimuthal stage.
        let mut values = vec![0.0; g.len()];
        for m in -(k as i64)..=(k as i64) {
            let src = &b[(m + k as i64) as usize * plane..][..plane];
            let az = g.azimuthal_row(m);
            for (ij, &bv) in src.iter().enumerate() {
                if bv == 0.0 {
                    continue;
                }
                for (d, z) in values[ij * np..(ij + 1) * np].iter_mut().zip(az) {
                    *d += bv * z;
                }
            }
        }
        Ok(GridField::new(self.grid.clone(), values))
    }

    /// Projection of grid values onto harmonics of degree `<= band_limit`.
    pub fn analyze_to(&self, values: &GridField, band_limit: usize) -> Result<SpectralField> {
        self.check_band(band_limit)?;
        let k = band_limit;
        let g = &*self.grid;
        let (nc, nt, np) = g.shape();
        let v = values.values();
        let plane = nc * nt;

        let mut b = vec![0.0; (2 * k + 1) * plane];
        let dphi = g.phi_weight();
        for m in -(k as i64)..=(k as i64) {
            let az = g.azimuthal_row(m);
            let dst = &mut b[(m + k as i64) as usize * plane..][..plane];
            for (ij, d) in dst.iter_mut().enumerate() {
                let row = &v[ij * np..(ij + 1) * np];
                *d = dphi * row.iter().zip(az).map(|(x, y)| x * y).sum::<f64>();
            }
        }

        let n_lm = (k + 1) * (k + 1);
        let mut a = vec![0.0; n_lm * nc];
        for m in -(k as i64)..=(k as i64) {
            let am = m.unsigned_abs() as usize;
            let src = &b[(m + k as i64) as usize * plane..][..plane];
            for l in am..=k {
                let leg = g.legendre_row_weighted(am, l - am);
                let dst = &mut a[lm_index(l, m) * nc..][..nc];
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = src[i * nt..(i + 1) * nt].iter().zip(leg).map(|(x, y)| x * y).sum();
                }
            }
        }

        let mut out = SpectralField::zeros(k);
        let c = out.coeffs_mut();
        for l in 0..=k {
            for m in -(l as i64)..=(l as i64) {
                let src = &a[lm_index(l, m) * nc..][..nc];
                for n in 0..=k - l {
                    let rw = g.radial_row_weighted(l, n);
                    c[flat_index(l + n, l, m)] = src.iter().zip(rw).map(|(x, y)| x * y).sum();
                }
            }
        }
        Ok(out)
    }

    /// Projection onto the space's own band limit.
    pub fn analyze(&self, values: &GridField) -> Result<SpectralField> {
        self.analyze_to(values, self.band_limit)
    }

    /// Value of a field at an arbitrary unit vector.
    pub fn evaluate_at(field: &SpectralField, x: &[f64; 4]) -> Result<f64> {
        check_unit(x)?;
        Ok(PointBasis::new().evaluate(field.band_limit(), field.coeffs(), x))
    }

    /// Values of a field at many points, reusing one basis evaluator.
    pub fn evaluate_many(field: &SpectralField, xs: &[[f64; 4]]) -> Result<Vec<f64>> {
        let mut pb = PointBasis::new();
        xs.iter()
            .map(|x| {
                check_unit(x)?;
                Ok(pb.evaluate(field.band_limit(), field.coeffs(), x))
            })
            .collect()
    }

    /// `-Δ` applied spectrally.
    pub fn minus_laplacian(field: &SpectralField) -> SpectralField {
        field.map_degrees(laplace_eigenvalue)
    }

    /// Round-metric pairing `⟨∇a, ∇b⟩` as a field of band limit `a + b`.
    ///
    /// Uses `2⟨∇a,∇b⟩ = Δ(ab) - aΔb - bΔa`, evaluated on the grid.
    pub fn gradient_inner(&self, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
        let out_band = a.band_limit() + b.band_limit();
        let g = self.gradient_inner_grid(a, b)?;
        self.analyze_to(&g, out_band)
    }

    /// Grid values of `⟨∇a, ∇b⟩`.
    pub fn gradient_inner_grid(&self, a: &SpectralField, b: &SpectralField) -> Result<GridField> {
        let out_band = a.band_limit() + b.band_limit();
        self.check_band(out_band)?;
        let ag = self.synthesize(a)?;
        let bg = self.synthesize(b)?;
        let la = self.synthesize(&Self::minus_laplacian(a))?;
        let lb = self.synthesize(&Self::minus_laplacian(b))?;
        let prod = ag.zip_map(&bg, |x, y| x * y);
        let lprod = self.synthesize(&Self::minus_laplacian(&self.analyze_to(&prod, out_band)?))?;
        let mut out = lprod;
        let (av, bv, lav, lbv) = (ag.values(), bg.values(), la.values(), lb.values());
        for (i, o) in out.values_mut().iter_mut().enumerate() {
            // Signs flip because the stored fields carry -Δ.
            *o = 0.5 * (-*o + av[i] * lbv[i] + bv[i] * lav[i]);
        }
        Ok(out)
    }

    /// Random field with coefficients drawn as `N(0,1)/(1+k)²`, no constant part,
    /// rescaled to `L²` norm `amplitude`.
    pub fn random_field(band_limit: usize, seed: u64, amplitude: f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(band_limit);
        for k in 1..=band_limit {
            let scale = 1.0 / ((1 + k) * (1 + k)) as f64;
            let lo = basis::degree_offset(k);
            for c in &mut f.coeffs_mut()[lo..basis::degree_offset(k + 1)] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c = z * scale;
            }
        }
        let norm = f.l2_norm();
        if norm > 0.0 {
            f = f.scaled(amplitude / norm);
        }
        f
    }
}

/// Rejects vectors that are not unit length to within `1e-12`.
pub fn check_unit(x: &[f64; 4]) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain { norm });
    }
    Ok(())
}

/// Number of coefficients for a band limit.
pub fn coefficient_count(band_limit: usize) -> usize {
    count_up_to(band_limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_and_coordinate_synthesis() {
        let sp = SpectralSpace::new(4, 2).unwrap();
        let c = sp.synthesize(&SpectralField::constant(4, 2.5)).unwrap();
        assert!(c.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
        for axis in 0..4 {
            let x = sp.synthesize(&SpectralField::coordinate(4, axis)).unwrap();
            for (v, p) in x.values().iter().zip(sp.grid().points()) {
                assert!((v - p[axis]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn analysis_of_coordinate_square() {
        // x4² = 1/4 + (x4² - 1/4); the mean over the sphere is 1/4.
        let sp = SpectralSpace::new(2, 2).unwrap();
        let g = GridField::from_fn(sp.grid().clone(), |p| p[3] * p[3]);
        let f = sp.analyze(&g).unwrap();
        assert!((f.mean() - 0.25).abs() < 1e-14);
        assert!(f.degree_block(1).iter().all(|c| c.abs() < 1e-14));
        assert!((sp.grid().integrate(g.values()) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_random() {
        let sp = SpectralSpace::new(10, 2).unwrap();
        let f = SpectralSpace::random_field(10, 7, 1.0);
        let back = sp.analyze(&sp.synthesize(&f).unwrap()).unwrap();
        assert!(f.max_abs_diff(&back) < 1e-12);
    }

    #[test]
    fn point_evaluation_matches_grid() {
        let sp = SpectralSpace::new(8, 1).unwrap();
        let f = SpectralSpace::random_field(8, 3, 1.0);
        let g = sp.synthesize(&f).unwrap();
        for idx in [0, 17, 200, g.values().len() - 1] {
            let x = sp.grid().points()[idx];
            let v = SpectralSpace::evaluate_at(&f, &x).unwrap();
            assert!((v - g.values()[idx]).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_of_coordinates() {
        // ⟨∇x_i, ∇x_j⟩ = δ_ij - x_i x_j on the unit sphere.
        let sp = SpectralSpace::new(1, 2).unwrap();
        let x1 = SpectralField::coordinate(1, 0);
        let x4 = SpectralField::coordinate(1, 3);
        let g = sp.gradient_inner_grid(&x1, &x4).unwrap();
        for (v, p) in g.values().iter().zip(sp.grid().points()) {
            assert!((v + p[0] * p[3]).abs() < 1e-13);
        }
        let g = sp.gradient_inner_grid(&x4, &x4).unwrap();
        for (v, p) in g.values().iter().zip(sp.grid().points()) {
            assert!((v - (1.0 - p[3] * p[3])).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_off_sphere_points() {
        let f = SpectralField::constant(0, 1.0);
        assert!(matches!(SpectralSpace::evaluate_at(&f, &[1.0, 1.0, 0.0, 0.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn resolution_checked() {
        let sp = SpectralSpace::new(3, 1).unwrap();
        let f = SpectralField::zeros(4);
        assert!(matches!(sp.synthesize(&f), Err(Error::Resolution { .. })));
    }
}
