//! Morse-theoretic existence gate.
//!
//! Critical points `a` of `f` with `Δf(a) < 0` are counted by index: `m_i` is the number
//! of such points of index `3 - i`. Existence follows when the system
//!
//! ```text
//! m_0 = 1 + k_0,   m_i = k_{i-1} + k_i (i = 1, 2, 3),   k_3 = 0
//! ```
//!
//! has no solution in non-negative integers, which is the coefficient form of
//! `Σ t^i m_i = 1 + (1 + t) Σ t^i k_i`. Setting `t = -1` gives the weaker criterion
//! `Σ (-1)^{index} ≠ -1`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::{tangent_frame, Point};
use crate::spectral::{basis::PointBasis, QuadratureGrid, SpectralField, SpectralSpace};

/// One critical point of the prescribed function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseDatum {
    #[serde(alias = "index")]
    pub morse_index: u8,
    pub laplacian_negative: bool,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Point>,
}

pub type Counts = [i64; 4];

/// Outcome of the gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub m: Counts,
    pub feasible: bool,
    pub witness: Option<Counts>,
    pub degree_sum: i64,
    pub theorem_existence: bool,
    pub corollary_existence: bool,
    /// `-(16π²/3) log f(a)` for each counted critical point, in input order.
    pub critical_levels: Vec<f64>,
    pub warnings: Vec<String>,
}

/// `m_i = #{Δf < 0, index = 3 - i}`.
pub fn compute_counts(data: &[MorseDatum]) -> Counts {
    let mut m = [0; 4];
    for d in data.iter().filter(|d| d.laplacian_negative) {
        m[3 - d.morse_index.min(3) as usize] += 1;
    }
    m
}

/// Triangular elimination of the linear system; returns the unique candidate if it is admissible.
pub fn solve_system(m: &Counts) -> Option<Counts> {
    let k0 = m[0] - 1;
    let k1 = m[1] - k0;
    let k2 = m[2] - k1;
    (k0 >= 0 && k1 >= 0 && k2 >= 0 && m[3] == k2).then_some([k0, k1, k2, 0])
}

/// `Σ (-1)^{index}` over points with `Δf < 0`.
pub fn degree_sum(data: &[MorseDatum]) -> i64 {
    data.iter()
        .filter(|d| d.laplacian_negative)
        .map(|d| if d.morse_index % 2 == 0 { 1 } else { -1 })
        .sum()
}

/// Checks `Σ t^i m_i = 1 + (1 + t) Σ t^i k_i` coefficient by coefficient (degrees 0 to 4).
pub fn morse_polynomial_check(m: &Counts, k: &Counts) -> bool {
    let lhs = [m[0], m[1], m[2], m[3], 0];
    let rhs = [1 + k[0], k[0] + k[1], k[1] + k[2], k[2] + k[3], k[3]];
    lhs == rhs
}

/// Runs the gate on a list of critical points.
pub fn report(data: &[MorseDatum]) -> MorseReport {
    let m = compute_counts(data);
    let witness = solve_system(&m);
    let ds = degree_sum(data);
    let critical_levels = data
        .iter()
        .filter(|d| d.laplacian_negative)
        .map(|d| -16.0 * PI * PI / 3.0 * d.value.ln())
        .collect();
    let mut warnings = Vec::new();
    if let Some(w) = distinct_values_warning(data) {
        warnings.push(w);
    }
    MorseReport {
        m,
        feasible: witness.is_some(),
        witness,
        degree_sum: ds,
        theorem_existence: witness.is_none(),
        corollary_existence: ds != -1,
        critical_levels,
        warnings,
    }
}

/// Warns when two critical points share a value (relative tolerance `1e-9`).
pub fn distinct_values_warning(data: &[MorseDatum]) -> Option<String> {
    let mut vals: Vec<f64> = data.iter().map(|d| d.value).collect();
    vals.sort_by(f64::total_cmp);
    let ties = vals.windows(2).filter(|w| (w[1] - w[0]).abs() <= 1e-9 * w[1].abs().max(1.0)).count();
    (ties > 0).then(|| format!("{ties} pair(s) of critical points share a critical value"))
}

/// Spectral data for locating and classifying critical points.
struct CriticalSolver {
    f: SpectralField,
    gradient: Vec<SpectralField>,
    /// `⟨∇G_i, ∇x_j⟩`, row-major.
    hessian: Vec<SpectralField>,
    laplacian: SpectralField,
    basis: PointBasis,
}

impl CriticalSolver {
    fn new(f: &SpectralField) -> Result<Self> {
        let k = f.band_limit().max(1);
        let space = SpectralSpace::new(k + 2, 2)?;
        let f = f.resized(k);
        let coords: Vec<SpectralField> = (0..4).map(|a| SpectralField::coordinate(1, a)).collect();
        let gradient: Vec<SpectralField> = coords.iter().map(|x| space.gradient_inner(&f, x)).collect::<Result<_>>()?;
        let mut hessian = Vec::with_capacity(16);
        for g in &gradient {
            for x in &coords {
                hessian.push(space.gradient_inner(g, x)?);
            }
        }
        let laplacian = SpectralSpace::minus_laplacian(&f).scaled(-1.0);
        Ok(Self { f, gradient, hessian, laplacian, basis: PointBasis::new() })
    }

    fn eval(&mut self, field_idx: Field, x: &Point) -> f64 {
        let field = match field_idx {
            Field::F => &self.f,
            Field::Grad(i) => &self.gradient[i],
            Field::Hess(i, j) => &self.hessian[4 * i + j],
            Field::Lap => &self.laplacian,
        };
        self.basis.evaluate(field.band_limit(), field.coeffs(), x)
    }

    /// Tangential gradient and intrinsic Hessian in the frame at `x`.
    fn local(&mut self, x: &Point) -> (Vector3<f64>, Matrix3<f64>) {
        let frame = tangent_frame(x);
        let g: [f64; 4] = std::array::from_fn(|i| self.eval(Field::Grad(i), x));
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.eval(Field::Hess(i, j), x);
            }
        }
        let gt = Vector3::from_fn(|a, _| (0..4).map(|i| frame[a][i] * g[i]).sum());
        let mut h = Matrix3::from_fn(|a, b| {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    s += frame[a][i] * m[i][j] * frame[b][j];
                }
            }
            s
        });
        h = (h + h.transpose()) * 0.5;
        (gt, h)
    }

    fn refine(&mut self, seed: &Point, tol: f64) -> Option<Point> {
        let mut x = *seed;
        for _ in 0..100 {
            let (g, h) = self.local(&x);
            if g.norm() < tol {
                return Some(x);
            }
            let step = h.lu().solve(&(-g))?;
            let len = step.norm();
            let step = if len > 0.5 { step * (0.5 / len) } else { step };
            let frame = tangent_frame(&x);
            let mut y = x;
            for a in 0..3 {
                for i in 0..4 {
                    y[i] += step[a] * frame[a][i];
                }
            }
            let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.map(|v| v / n);
        }
        let (g, _) = self.local(&x);
        (g.norm() < tol).then_some(x)
    }
}

#[derive(Clone, Copy)]
enum Field {
    F,
    Grad(usize),
    Hess(usize, usize),
    Lap,
}

/// Hessian condition number beyond which a critical point counts as degenerate.
pub const CONDITION_LIMIT: f64 = 1e6;
/// `|Δf|` below this multiple of `‖f‖` counts as degenerate.
pub const LAPLACIAN_FLOOR: f64 = 1e-8;

/// Locates and classifies the critical points of `f`.
///
/// Seeds are local minima of `|∇f|²` on a product grid; each is refined by Newton's
/// method on the sphere. Degenerate points make the call fail with the offenders listed.
pub fn extract_morse_data(f: &SpectralField) -> Result<Vec<MorseDatum>> {
    let norm = f.l2_norm();
    if !(norm > 0.0) {
        return Err(Error::Parameter("prescribed function is zero".into()));
    }
    let mut solver = CriticalSolver::new(f)?;
    let kg = solver.gradient[0].band_limit();
    let seed_grid = std::sync::Arc::new(QuadratureGrid::new((2 * kg).max(24)));
    let space = SpectralSpace::with_grid(kg, seed_grid.clone())?;
    let mut grad_sq = vec![0.0; seed_grid.len()];
    for g in &solver.gradient {
        for (acc, v) in grad_sq.iter_mut().zip(space.synthesize(g)?.values()) {
            *acc += v * v;
        }
    }
    let fmin = space.synthesize(&solver.f)?.min();
    if !(fmin > 0.0) {
        return Err(Error::Positivity { min: fmin });
    }
    let max_grad = grad_sq.iter().copied().fold(0.0, f64::max).sqrt();
    if max_grad < 1e-12 * norm {
        return Err(Error::Hypothesis("every point is critical".into()));
    }

    let (nc, nt, np) = seed_grid.shape();
    let idx = |i: usize, j: usize, s: usize| (i * nt + j) * np + s;
    let mut seeds = Vec::new();
    for i in 0..nc {
        for j in 0..nt {
            for s in 0..np {
                let v = grad_sq[idx(i, j, s)];
                let mut is_min = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        for ds in -1i64..=1 {
                            if di == 0 && dj == 0 && ds == 0 {
                                continue;
                            }
                            let (ii, jj) = (i as i64 + di, j as i64 + dj);
                            if ii < 0 || jj < 0 || ii >= nc as i64 || jj >= nt as i64 {
                                continue;
                            }
                            let ss = (s as i64 + ds).rem_euclid(np as i64) as usize;
                            if grad_sq[idx(ii as usize, jj as usize, ss)] < v {
                                is_min = false;
                                break 'nb;
                            }
                        }
                    }
                }
                if is_min {
                    seeds.push(seed_grid.points()[idx(i, j, s)]);
                }
            }
        }
    }

    let tol = 1e-11 * norm.max(1.0);
    let mut found: Vec<Point> = Vec::new();
    for seed in &seeds {
        if let Some(x) = solver.refine(seed, tol) {
            if !found.iter().any(|y| crate::shadow::geodesic_distance(y, &x) < 1e-6) {
                found.push(x);
            }
        }
    }
    found.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));

    let mut data = Vec::with_capacity(found.len());
    let mut offenders = Vec::new();
    for x in found {
        let (_, h) = solver.local(&x);
        let eig = SymmetricEigen::new(h).eigenvalues;
        let abs: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        let (lo, hi) = abs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let lap = solver.eval(Field::Lap, &x);
        let value = solver.eval(Field::F, &x);
        if !(lo > 0.0) || hi / lo > CONDITION_LIMIT || lap.abs() < LAPLACIAN_FLOOR * norm {
            offenders.push(format!("critical point at {x:?}: Hessian eigenvalues {:?}, Laplacian {lap:e}", eig.as_slice()));
            continue;
        }
        data.push(MorseDatum {
            morse_index: eig.iter().filter(|v| **v < 0.0).count() as u8,
            laplacian_negative: lap < 0.0,
            value,
            location: Some(x),
        });
    }
    if !offenders.is_empty() {
        let shown = offenders.len().min(3);
        let more = if offenders.len() > shown { format!("; and {} more", offenders.len() - shown) } else { String::new() };
        return Err(Error::Hypothesis(format!(
            "{} degenerate critical points: {}{more}",
            offenders.len(),
            offenders[..shown].join("; ")
        )));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn datum(index: u8, neg: bool, value: f64) -> MorseDatum {
        MorseDatum { morse_index: index, laplacian_negative: neg, value, location: None }
    }

    #[test]
    fn counts_and_degree() {
        let one_max = [datum(3, true, 3.0)];
        assert_eq!(compute_counts(&one_max), [1, 0, 0, 0]);
        assert_eq!(degree_sum(&one_max), -1);
        let two_max_saddle = [datum(3, true, 3.0), datum(3, true, 2.9), datum(2, true, 2.5)];
        assert_eq!(compute_counts(&two_max_saddle), [2, 1, 0, 0]);
        assert_eq!(degree_sum(&two_max_saddle), -1);
        assert_eq!(compute_counts(&[datum(0, false, 1.0)]), [0, 0, 0, 0]);
    }

    #[test]
    fn system_examples() {
        assert_eq!(solve_system(&[1, 0, 0, 0]), Some([0, 0, 0, 0]));
        assert_eq!(solve_system(&[2, 0, 0, 0]), None);
        assert_eq!(solve_system(&[2, 1, 0, 0]), Some([1, 0, 0, 0]));
        assert!(morse_polynomial_check(&[2, 1, 0, 0], &[1, 0, 0, 0]));
        assert!(morse_polynomial_check(&[1, 0, 0, 0], &[0, 0, 0, 0]));
        for k in 0..4 {
            assert!(!morse_polynomial_check(&[2, 0, 0, 0], &[k, 0, 0, 0]));
        }
    }

    #[test]
    fn report_flags() {
        let r = report(&[datum(3, true, 3.0), datum(3, true, 2.0)]);
        assert!(!r.feasible && r.theorem_existence && r.corollary_existence);
        assert_eq!(r.degree_sum, -2);
        assert!(r.warnings.is_empty());
        let r = report(&[datum(3, true, 3.0), datum(3, true, 3.0)]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn axial_function() {
        let f = SpectralField::constant(1, 2.0).add(&SpectralField::coordinate(1, 3).scaled(0.3));
        let data = extract_morse_data(&f).unwrap();
        assert_eq!(data.len(), 2);
        let north = data.iter().find(|d| d.location.unwrap()[3] > 0.999).unwrap();
        assert_eq!(north.morse_index, 3);
        assert!(north.laplacian_negative);
        assert!((north.value - 2.3).abs() < 1e-12);
        let south = data.iter().find(|d| d.location.unwrap()[3] < -0.999).unwrap();
        assert_eq!(south.morse_index, 0);
        assert!(!south.laplacian_negative);
        assert_eq!(compute_counts(&data), [1, 0, 0, 0]);
    }

    #[test]
    fn constant_function_rejected() {
        assert!(matches!(extract_morse_data(&SpectralField::constant(2, 2.0)), Err(Error::Hypothesis(_))));
    }
}
