//! Conformal maps of the 3-sphere, bubbles, pull-backs and centring.
//!
//! `Φ_{p,ε}` is the conformal dilation that fixes `±p` and contracts a neighbourhood
//! of `p` by the factor `ε`. In the stereographic chart projected from `-p` it is
//! `y ↦ ε y`. Its inverse is `Φ_{p,1/ε}`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{basis::PointBasis, check_unit, GridField, SpectralField, SpectralSpace};

pub type Point = [f64; 4];

fn dot(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

/// Parameters of `R ∘ Φ_{p,ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusParams {
    pub p: Point,
    pub eps: f64,
    /// Optional orthogonal matrix applied after the dilation (row-major).
    pub rotation: Option<[[f64; 4]; 4]>,
}

impl MobiusParams {
    pub fn new(p: Point, eps: f64) -> Result<Self> {
        check_unit(&p)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("dilation must be positive, got {eps}")));
        }
        Ok(Self { p, eps, rotation: None })
    }

    pub fn identity() -> Self {
        Self { p: [0.0, 0.0, 0.0, 1.0], eps: 1.0, rotation: None }
    }

    pub fn with_rotation(mut self, rotation: [[f64; 4]; 4]) -> Self {
        self.rotation = Some(rotation);
        self
    }

    /// Parameters from a point `a` of the open unit ball, `a = ((1-ε)/(1+ε)) p`.
    pub fn from_ball(a: &Point) -> Self {
        let r = norm(a);
        if r == 0.0 {
            return Self::identity();
        }
        let p = [a[0] / r, a[1] / r, a[2] / r, a[3] / r];
        Self { p, eps: (1.0 - r) / (1.0 + r), rotation: None }
    }

    /// Ball coordinate of the dilation part.
    pub fn to_ball(&self) -> Point {
        let r = (1.0 - self.eps) / (1.0 + self.eps);
        self.p.map(|v| v * r)
    }

    /// `Φ(x)`.
    pub fn apply(&self, x: &Point) -> Point {
        let y = dilate(&self.p, self.eps, x);
        match &self.rotation {
            Some(r) => rotate(r, &y),
            None => y,
        }
    }

    /// `Φ^{-1}(y)`.
    pub fn apply_inverse(&self, y: &Point) -> Point {
        let z = match &self.rotation {
            Some(r) => rotate_transposed(r, y),
            None => *y,
        };
        dilate(&self.p, 1.0 / self.eps, &z)
    }

    /// Conformal factor `|dΦ|` at `x`.
    pub fn conformal_factor(&self, x: &Point) -> f64 {
        let xi = dot(x, &self.p);
        let e2 = self.eps * self.eps;
        2.0 * self.eps / ((1.0 + e2) + (1.0 - e2) * xi)
    }

    /// Conformal factor `|dΦ^{-1}|` at `y`.
    pub fn inverse_conformal_factor(&self, y: &Point) -> f64 {
        let z = match &self.rotation {
            Some(r) => rotate_transposed(r, y),
            None => *y,
        };
        bubble_value(&self.p, self.eps, &z).exp()
    }

    /// `log det dΦ = 3 log |dΦ|`.
    pub fn log_det(&self, x: &Point) -> f64 {
        3.0 * self.conformal_factor(x).ln()
    }
}

fn rotate(r: &[[f64; 4]; 4], x: &Point) -> Point {
    std::array::from_fn(|i| (0..4).map(|j| r[i][j] * x[j]).sum())
}

fn rotate_transposed(r: &[[f64; 4]; 4], x: &Point) -> Point {
    std::array::from_fn(|i| (0..4).map(|j| r[j][i] * x[j]).sum())
}

/// `Φ_{p,ε}(x)` without rotation.
pub fn dilate(p: &Point, eps: f64, x: &Point) -> Point {
    let xi = dot(x, p);
    let e2 = eps * eps;
    let d = (1.0 + e2) + (1.0 - e2) * xi;
    let along = 1.0 + xi - e2 * (1.0 - xi);
    std::array::from_fn(|i| (2.0 * eps * (x[i] - xi * p[i]) + along * p[i]) / d)
}

/// Closed-form bubble `log(2ε / ((1+ε²) - (1-ε²)⟨x,p⟩))` at one point.
///
/// This is the factor of the round metric pushed forward by `Φ_{p,ε}`; the volume
/// concentrates at `p` as `ε → 0` and the factor equals `-log ε` there.
pub fn bubble_value(p: &Point, eps: f64, x: &Point) -> f64 {
    let e2 = eps * eps;
    (2.0 * eps / ((1.0 + e2) - (1.0 - e2) * dot(x, p))).ln()
}

/// Bubble factor on the space's grid, projected to its band limit.
pub fn bubble(space: &SpectralSpace, p: &Point, eps: f64) -> Result<SpectralField> {
    MobiusParams::new(*p, eps)?;
    let g = GridField::from_fn(space.grid().clone(), |x| bubble_value(p, eps, x));
    space.analyze(&g)
}

/// Pull-back `w ∘ Φ + log |dΦ|`, projected to the space's band limit.
///
/// Point evaluation of `w` at every node makes this slow for large band limits.
pub fn pull_back(space: &SpectralSpace, w: &SpectralField, params: &MobiusParams) -> Result<SpectralField> {
    let mut pb = PointBasis::new();
    let values = space
        .grid()
        .points()
        .iter()
        .map(|x| {
            let y = params.apply(x);
            pb.evaluate(w.band_limit(), w.coeffs(), &y) + params.conformal_factor(x).ln()
        })
        .collect();
    space.analyze(&GridField::new(space.grid().clone(), values))
}

/// Orthonormal basis of the tangent space at `p`, ordered deterministically.
///
/// Coordinate axes are taken in order of increasing `|p_i|` (ties by index) and
/// orthonormalised against `p` by Gram–Schmidt.
pub fn tangent_frame(p: &Point) -> [Point; 3] {
    let mut axes = [0usize, 1, 2, 3];
    axes.sort_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs()).then(a.cmp(&b)));
    let mut frame: Vec<Point> = Vec::with_capacity(3);
    for &ax in &axes {
        if frame.len() == 3 {
            break;
        }
        let mut v = [0.0; 4];
        v[ax] = 1.0;
        for _ in 0..2 {
            let c = dot(&v, p);
            for i in 0..4 {
                v[i] -= c * p[i];
            }
            for e in &frame {
                let c = dot(&v, e);
                for i in 0..4 {
                    v[i] -= c * e[i];
                }
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            frame.push(v.map(|x| x / n));
        }
    }
    [frame[0], frame[1], frame[2]]
}

/// Stereographic coordinates of `x` projected from `-p`, in the frame of [`tangent_frame`].
pub fn stereographic(p: &Point, x: &Point) -> Result<[f64; 3]> {
    check_unit(p)?;
    check_unit(x)?;
    let xi = dot(x, p);
    if 1.0 + xi < 1e-14 {
        return Err(Error::ChartSingularity("point is the projection centre".into()));
    }
    let f = tangent_frame(p);
    Ok(std::array::from_fn(|a| dot(x, &f[a]) / (1.0 + xi)))
}

/// Inverse of [`stereographic`].
pub fn inverse_stereographic(p: &Point, y: &[f64; 3]) -> Point {
    let f = tangent_frame(p);
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let mut x = p.map(|v| v * (1.0 - r2) / (1.0 + r2));
    for a in 0..3 {
        for i in 0..4 {
            x[i] += 2.0 * y[a] * f[a][i] / (1.0 + r2);
        }
    }
    x
}

/// Outcome of centring a conformal factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenteringResult {
    pub params: MobiusParams,
    /// The pulled-back factor, whose metric has centre of mass at the origin.
    pub centered: SpectralField,
    pub residual: f64,
    pub iterations: usize,
}

/// Centre of mass `∫ Φ^{-1}(y) e^{3w(y)} dy / ∫ e^{3w}` of the metric pulled back by `Φ`.
pub fn center_of_mass(grid_density: &GridField, params: &MobiusParams) -> Point {
    let grid = grid_density.grid();
    let mut acc = [0.0; 4];
    let mut mass = 0.0;
    for ((y, w), d) in grid.points().iter().zip(grid.weights()).zip(grid_density.values()) {
        let x = params.apply_inverse(y);
        let m = w * d;
        mass += m;
        for i in 0..4 {
            acc[i] += m * x[i];
        }
    }
    acc.map(|v| v / mass)
}

/// Finds the dilation `Φ_{p,ε}` that centres the metric with volume density `density`.
///
/// Newton iteration in ball coordinates with a finite-difference Jacobian and
/// backtracking; `guess` overrides the initial point.
pub fn locate_center(density: &GridField, tol: f64, guess: Option<&MobiusParams>) -> Result<(MobiusParams, f64, usize)> {
    const MAX_ITER: usize = 60;
    const FD_STEP: f64 = 1e-6;
    let eval = |a: &Point| -> Vector4<f64> {
        Vector4::from(center_of_mass(density, &MobiusParams::from_ball(a)))
    };
    let mut a: Point = match guess {
        Some(g) => g.to_ball(),
        None => {
            let s = center_of_mass(density, &MobiusParams::identity());
            let r = norm(&s);
            if r < 1e-14 {
                [0.0; 4]
            } else {
                let eps = (1.0 - r).clamp(0.01, 1.0);
                MobiusParams { p: s.map(|v| v / r), eps, rotation: None }.to_ball()
            }
        }
    };
    let mut s = eval(&a);
    let mut res = s.norm();
    for iter in 0..MAX_ITER {
        if res < tol {
            return Ok((MobiusParams::from_ball(&a), res, iter));
        }
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let mut ap = a;
            ap[j] += FD_STEP;
            let mut am = a;
            am[j] -= FD_STEP;
            let col = (eval(&ap) - eval(&am)) / (2.0 * FD_STEP);
            jac.set_column(j, &col);
        }
        let step = jac.lu().solve(&(-s)).ok_or_else(|| Error::NonConvergence {
            what: "centring (singular Jacobian)".into(),
            iterations: iter,
            residual: res,
        })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Point = std::array::from_fn(|i| a[i] + lambda * step[i]);
            if norm(&cand) < 1.0 - 1e-12 {
                let sc = eval(&cand);
                if sc.norm() < res {
                    a = cand;
                    s = sc;
                    res = s.norm();
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { what: "centring".into(), iterations: iter, residual: res });
        }
    }
    if res < tol {
        return Ok((MobiusParams::from_ball(&a), res, MAX_ITER));
    }
    Err(Error::NonConvergence { what: "centring".into(), iterations: MAX_ITER, residual: res })
}

/// Centres `w`: finds `Φ` with `∫ x e^{3 (w∘Φ + log|dΦ|)} = 0` and returns the pulled-back factor.
pub fn normalize(space: &SpectralSpace, w: &SpectralField, tol: f64) -> Result<CenteringResult> {
    let wg = space.synthesize(w)?;
    let density = wg.map(|v| (3.0 * v).exp());
    let (params, residual, iterations) = locate_center(&density, tol, None)?;
    let centered = pull_back(space, w, &params)?;
    Ok(CenteringResult { params, centered, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: Point) -> Point {
        let n = norm(&v);
        v.map(|x| x / n)
    }

    #[test]
    fn fixes_poles_and_scales() {
        let p = unit([0.3, -0.2, 0.5, 0.6]);
        let m = MobiusParams::new(p, 0.4).unwrap();
        let fp = m.apply(&p);
        let mp = p.map(|v| -v);
        let fm = m.apply(&mp);
        for i in 0..4 {
            assert!((fp[i] - p[i]).abs() < 1e-15);
            assert!((fm[i] - mp[i]).abs() < 1e-15);
        }
        assert!((m.conformal_factor(&p) - 0.4).abs() < 1e-15);
        assert!((m.conformal_factor(&mp) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let p = unit([1.0, 2.0, -0.5, 0.1]);
        let m = MobiusParams::new(p, 0.3).unwrap();
        let x = unit([-0.4, 0.1, 0.8, 0.3]);
        let y = m.apply(&x);
        assert!((norm(&y) - 1.0).abs() < 1e-14);
        let back = m.apply_inverse(&y);
        for i in 0..4 {
            assert!((back[i] - x[i]).abs() < 1e-14);
        }
        // |dΦ^{-1}|(Φ(x)) |dΦ|(x) = 1.
        assert!((m.inverse_conformal_factor(&y) * m.conformal_factor(&x) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn chart_is_a_dilation() {
        let p = unit([0.0, 0.3, 0.4, 0.5]);
        let m = MobiusParams::new(p, 0.25).unwrap();
        let x = unit([0.7, -0.1, 0.2, 0.1]);
        let yx = stereographic(&p, &x).unwrap();
        let yfx = stereographic(&p, &m.apply(&x)).unwrap();
        for a in 0..3 {
            assert!((yfx[a] - 0.25 * yx[a]).abs() < 1e-14);
        }
        let back = inverse_stereographic(&p, &yx);
        for i in 0..4 {
            assert!((back[i] - x[i]).abs() < 1e-14);
        }
        assert!(matches!(stereographic(&p, &p.map(|v| -v)), Err(Error::ChartSingularity(_))));
    }

    #[test]
    fn frame_is_orthonormal() {
        for p in [[0.0, 0.0, 0.0, 1.0], unit([1.0, 1.0, 1.0, 1.0]), unit([0.2, -0.9, 0.1, 0.3])] {
            let f = tangent_frame(&p);
            for a in 0..3 {
                assert!(dot(&f[a], &p).abs() < 1e-14);
                for b in 0..3 {
                    let e = if a == b { 1.0 } else { 0.0 };
                    assert!((dot(&f[a], &f[b]) - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ball_coordinates_round_trip() {
        let p = unit([0.1, 0.2, 0.3, -0.4]);
        let m = MobiusParams::new(p, 0.2).unwrap();
        let back = MobiusParams::from_ball(&m.to_ball());
        assert!((back.eps - 0.2).abs() < 1e-15);
        for i in 0..4 {
            assert!((back.p[i] - p[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn pull_back_of_round_is_bubble() {
        let sp = SpectralSpace::new(10, 2).unwrap();
        let p = unit([0.2, 0.1, -0.3, 0.9]);
        let m = MobiusParams::new(p, 0.7).unwrap();
        let w = pull_back(&sp, &SpectralField::zeros(10), &m).unwrap();
        let b = bubble(&sp, &p.map(|v| -v), 0.7).unwrap();
        assert!(w.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn recovers_bubble_centre() {
        let sp = SpectralSpace::new(16, 2).unwrap();
        let p = unit([0.3, -0.5, 0.2, 0.4]);
        let b = bubble(&sp, &p, 0.6).unwrap();
        let density = sp.synthesize(&b).unwrap().map(|v| (3.0 * v).exp());
        let (m, res, _) = locate_center(&density, 1e-13, None).unwrap();
        assert!(res < 1e-13);
        assert!((m.eps - 0.6).abs() < 1e-9, "{}", m.eps);
        for i in 0..4 {
            assert!((m.p[i] - p[i]).abs() < 1e-9);
        }
    }
}
