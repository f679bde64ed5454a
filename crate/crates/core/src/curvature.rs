//! Boundary curvature, normalising constant, energies and residual diagnostics.
//!
//! A conformal factor `w` describes the metric `e^{2w}` times the round one. Its boundary
//! curvature is `T = e^{-3w}(P w + 2)` where `P` is the operator in [`crate::beckner`].

use std::f64::consts::PI;

use crate::beckner;
use crate::error::{Error, Result};
use crate::spectral::{GridField, SpectralField, SpectralSpace};

/// Area of the round unit 3-sphere.
pub const SPHERE_AREA: f64 = 2.0 * PI * PI;

/// Total curvature of every conformal metric, `∫ T e^{3w} = 4π²`.
pub const TOTAL_CURVATURE: f64 = 4.0 * PI * PI;

/// Largest `|3w|` accepted before exponentiation.
pub const MAX_EXPONENT: f64 = 700.0;

/// A positive prescribed function sampled on a grid.
#[derive(Debug, Clone)]
pub struct Prescribed {
    field: SpectralField,
    grid: GridField,
}

impl Prescribed {
    /// Validates positivity on the grid nodes.
    pub fn new(space: &SpectralSpace, field: &SpectralField) -> Result<Self> {
        let grid = space.synthesize(field)?;
        let min = grid.min();
        if !(min > 0.0) {
            return Err(Error::Positivity { min });
        }
        Ok(Self { field: field.clone(), grid })
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn grid(&self) -> &GridField {
        &self.grid
    }
}

/// Quantities derived from one conformal factor on a grid.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub w: SpectralField,
    pub w_grid: GridField,
    /// `e^{3w}`, the volume density against the round measure.
    pub density: GridField,
    pub p_w: SpectralField,
    /// Boundary curvature on the grid.
    pub t: GridField,
    pub volume: f64,
}

impl MetricSample {
    pub fn new(space: &SpectralSpace, w: &SpectralField) -> Result<Self> {
        let w_grid = space.synthesize(w)?;
        Self::from_grid(space, w, w_grid)
    }

    /// Builds the sample when the grid values of `w` are already known.
    pub fn from_grid(space: &SpectralSpace, w: &SpectralField, w_grid: GridField) -> Result<Self> {
        let max_abs = 3.0 * w_grid.max_abs();
        if !(max_abs <= MAX_EXPONENT) {
            return Err(Error::Overflow { max_abs });
        }
        let density = w_grid.map(|v| (3.0 * v).exp());
        let p_w = beckner::apply(w);
        let pg = space.synthesize(&p_w)?;
        let t = pg.zip_map(&density, |p, d| (p + 2.0) / d);
        let volume = density.integrate();
        Ok(Self { w: w.clone(), w_grid, density, p_w, t, volume })
    }

    /// `∫ T e^{3w}`.
    pub fn total_curvature(&self) -> f64 {
        self.t.zip_map(&self.density, |t, d| t * d).integrate()
    }

    /// `∫ f e^{3w}`.
    pub fn weighted_volume(&self, f: &Prescribed) -> f64 {
        f.grid.zip_map(&self.density, |f, d| f * d).integrate()
    }

    /// Normalising constant `α = 4π² / ∫ f e^{3w}`.
    pub fn alpha(&self, f: &Prescribed) -> f64 {
        TOTAL_CURVATURE / self.weighted_volume(f)
    }

    /// Free energy `E = 2⟨w, P w⟩ + 8 ∫ w`.
    pub fn energy(&self) -> f64 {
        energy(&self.w)
    }

    /// `E_f = E - (16π²/3) log(mean of f e^{3w})`.
    pub fn energy_f(&self, f: &Prescribed) -> f64 {
        self.energy() - 16.0 * PI * PI / 3.0 * (self.weighted_volume(f) / SPHERE_AREA).ln()
    }

    /// Velocity residual `r = α f - T` on the grid.
    pub fn residual(&self, f: &Prescribed) -> GridField {
        let alpha = self.alpha(f);
        f.grid.zip_map(&self.t, |f, t| alpha * f - t)
    }
}

/// Free energy `2⟨w, P w⟩ + 8 ∫ w`, computed from the coefficients alone.
pub fn energy(w: &SpectralField) -> f64 {
    2.0 * beckner::quadratic_form(w) + 8.0 * w.integral()
}

/// Boundary curvature on the grid.
pub fn t_curvature(space: &SpectralSpace, w: &SpectralField) -> Result<GridField> {
    Ok(MetricSample::new(space, w)?.t)
}

/// `α[w] = 4π² / ∫ f e^{3w}`.
pub fn compute_alpha(space: &SpectralSpace, w: &SpectralField, f: &SpectralField) -> Result<f64> {
    let f = Prescribed::new(space, f)?;
    Ok(MetricSample::new(space, w)?.alpha(&f))
}

/// `E_f[w]`.
pub fn energy_f(space: &SpectralSpace, w: &SpectralField, f: &SpectralField) -> Result<f64> {
    let f = Prescribed::new(space, f)?;
    Ok(MetricSample::new(space, w)?.energy_f(&f))
}

/// Residual norms `(F₂, G₂)` for the velocity `r = α f - T`.
///
/// `F₂ = ∫ r² e^{3w}`. `G₂` pairs `r` with the operator of the conformal metric; by the
/// covariance law this equals the round pairing `⟨r, P r⟩`, evaluated on the modes the
/// space resolves.
pub fn residual_norms(space: &SpectralSpace, w: &SpectralField, f: &SpectralField) -> Result<(f64, f64)> {
    let f = Prescribed::new(space, f)?;
    let s = MetricSample::new(space, w)?;
    let r = s.residual(&f);
    let f2 = r.zip_map(&s.density, |r, d| r * r * d).integrate();
    let g2 = beckner::quadratic_form(&space.analyze(&r)?);
    Ok((f2, g2))
}

/// The four integrals `∫ ⟨∇T, ∇x_i⟩ e^{3w}` against the round metric.
///
/// `T` is represented by its projection onto degrees below the grid's design degree, so
/// the result measures how well the grid resolves the curvature of `w`. A grid of design
/// degree three times the band limit of `w` leaves only rounding-level residuals for
/// moderate factors; twice the band limit leaves visible aliasing.
pub fn kazdan_warner_residual(space: &SpectralSpace, w: &SpectralField) -> Result<[f64; 4]> {
    let s = MetricSample::new(space, w)?;
    let design = space.design();
    if design < 2 {
        return Err(Error::Resolution { band_limit: 2, design });
    }
    let t_hat = space.analyze_to(&s.t, design - 1)?;
    let mut out = [0.0; 4];
    for (axis, o) in out.iter_mut().enumerate() {
        let xi = SpectralField::coordinate(1, axis);
        let g = space.gradient_inner_grid(&t_hat, &xi)?;
        *o = g.zip_map(&s.density, |g, d| g * d).integrate();
    }
    Ok(out)
}

/// `(3/16π²) E[w] - log(mean of e^{3w})`, which is non-negative.
pub fn ache_chang_gap(space: &SpectralSpace, w: &SpectralField) -> Result<f64> {
    let s = MetricSample::new(space, w)?;
    Ok(3.0 / (16.0 * PI * PI) * s.energy() - (s.volume / SPHERE_AREA).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(k: usize) -> SpectralSpace {
        SpectralSpace::new(k, 2).unwrap()
    }

    #[test]
    fn round_metric() {
        let sp = space(4);
        let w = SpectralField::zeros(4);
        let s = MetricSample::new(&sp, &w).unwrap();
        assert!(s.t.values().iter().all(|t| (t - 2.0).abs() < 1e-14));
        assert!((s.volume - SPHERE_AREA).abs() < 1e-12);
        assert_eq!(energy(&w), 0.0);
        assert!(ache_chang_gap(&sp, &w).unwrap().abs() < 1e-14);
        let f = Prescribed::new(&sp, &SpectralField::constant(0, 2.0)).unwrap();
        assert!((s.alpha(&f) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_shift() {
        // w = c scales the metric: T = 2 e^{-3c}, E = 16π² c.
        let sp = space(3);
        let c = 0.2;
        let w = SpectralField::constant(3, c);
        let s = MetricSample::new(&sp, &w).unwrap();
        assert!(s.t.values().iter().all(|t| (t - 2.0 * (-3.0 * c).exp()).abs() < 1e-13));
        assert!((energy(&w) - 16.0 * PI * PI * c).abs() < 1e-12);
        assert!(ache_chang_gap(&sp, &w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gauss_bonnet_total() {
        let sp = space(6);
        let w = SpectralSpace::random_field(6, 11, 0.3);
        let s = MetricSample::new(&sp, &w).unwrap();
        assert!((s.total_curvature() - TOTAL_CURVATURE).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_positive_f() {
        let sp = space(2);
        let f = SpectralField::coordinate(2, 0);
        assert!(matches!(Prescribed::new(&sp, &f), Err(Error::Positivity { .. })));
    }

    #[test]
    fn rejects_overflow() {
        let sp = space(2);
        let w = SpectralField::constant(2, 400.0);
        assert!(matches!(MetricSample::new(&sp, &w), Err(Error::Overflow { .. })));
    }

    #[test]
    fn kazdan_warner_small_for_smooth_factor() {
        let sp = SpectralSpace::new(6, 3).unwrap();
        let w = SpectralSpace::random_field(6, 5, 0.05);
        let r = kazdan_warner_residual(&sp, &w).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
    }

    #[test]
    fn residual_norms_vanish_for_round_metric() {
        let sp = space(4);
        let (f2, g2) = residual_norms(&sp, &SpectralField::zeros(4), &SpectralField::constant(0, 2.0)).unwrap();
        assert!(f2 < 1e-25 && g2 < 1e-25);
    }
}
