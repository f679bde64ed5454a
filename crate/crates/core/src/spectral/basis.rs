//! Real orthonormal hyperspherical harmonics on the unit 3-sphere.
//!
//! Points are written as `x = (sin χ sin θ cos φ, sin χ sin θ sin φ, sin χ cos θ, cos χ)`,
//! so the north pole `(0,0,0,1)` sits at `χ = 0`. A harmonic of degree `k` is labelled
//! by `(k, l, m)` with `0 <= l <= k` and `-l <= m <= l`, giving `(k+1)^2` functions
//! per degree. The factorisation is
//!
//! ```text
//! Y_{k,l,m} = F_{k,l}(χ) · Pbar_l^{|m|}(cos θ) · Φ_m(φ)
//! ```
//!
//! where each factor is normalised against its own one-dimensional measure
//! (`sin²χ dχ`, `sin θ dθ`, `dφ`).

use std::f64::consts::PI;

/// Number of basis functions of degree exactly `k`.
pub fn degree_dim(k: usize) -> usize {
    (k + 1) * (k + 1)
}

/// Number of basis functions of degree at most `band_limit`.
pub fn count_up_to(band_limit: usize) -> usize {
    let k = band_limit;
    (k + 1) * (k + 2) * (2 * k + 3) / 6
}

/// Offset of the first coefficient of degree `k` in the flat layout.
pub fn degree_offset(k: usize) -> usize {
    k * (k + 1) * (2 * k + 1) / 6
}

/// Flat index of `(k, l, m)`.
pub fn flat_index(k: usize, l: usize, m: i64) -> usize {
    debug_assert!(l <= k && m.unsigned_abs() as usize <= l);
    degree_offset(k) + l * l + (m + l as i64) as usize
}

/// Inverse of [`flat_index`].
pub fn split_index(idx: usize) -> (usize, usize, i64) {
    let mut k = 0;
    while degree_offset(k + 1) <= idx {
        k += 1;
    }
    let within = idx - degree_offset(k);
    let mut l = 0;
    while (l + 1) * (l + 1) <= within {
        l += 1;
    }
    let m = (within - l * l) as i64 - l as i64;
    (k, l, m)
}

/// Index of the `(l, m)` pair inside a degree block (same as [`flat_index`] minus the offset).
pub fn lm_index(l: usize, m: i64) -> usize {
    l * l + (m + l as i64) as usize
}

/// Coefficient `a_n` of the three-term recurrence `x p_n = a_{n+1} p_{n+1} + a_n p_{n-1}`
/// for polynomials orthonormal against `(1-x²)^(λ-1/2)`.
fn recurrence_coeff(n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    0.5 * (n * (n + 2.0 * lambda - 1.0) / ((n + lambda) * (n + lambda - 1.0))).sqrt()
}

/// Fill `out[n]` (for `n < out.len()`) with `p0 · q_n(x)`, where `q_n` are orthonormal
/// Gegenbauer polynomials of parameter `lambda` normalised so that `q_0 = 1`.
fn gegenbauer_column(lambda: f64, x: f64, p0: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = p0;
    if out.len() == 1 {
        return;
    }
    out[1] = x * p0 / recurrence_coeff(1, lambda);
    for n in 1..out.len() - 1 {
        let a_next = recurrence_coeff(n + 1, lambda);
        let a_n = recurrence_coeff(n, lambda);
        out[n + 1] = (x * out[n] - a_n * out[n - 1]) / a_next;
    }
}

/// Radial profiles `F_{l+n, l}` at one point, laid out as `[l][n]` for `l + n <= band_limit`.
///
/// `c = cos χ`, `s = sin χ`.
pub fn radial_profiles(band_limit: usize, c: f64, s: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(triangle_len(band_limit), 0.0);
    let mut h = (2.0 / PI).sqrt();
    for l in 0..=band_limit {
        if l > 0 {
            let lf = l as f64;
            h *= s * ((2.0 * lf + 2.0) / (2.0 * lf + 1.0)).sqrt();
        }
        let off = triangle_offset(band_limit, l);
        gegenbauer_column(l as f64 + 1.0, c, h, &mut out[off..off + band_limit - l + 1]);
    }
}

/// Normalised associated Legendre values `Pbar_{m+n}^m` at one point, laid out as `[m][n]`.
///
/// `c = cos θ`, `s = sin θ`.
pub fn legendre_profiles(band_limit: usize, c: f64, s: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(triangle_len(band_limit), 0.0);
    let mut h = 0.5f64.sqrt();
    for m in 0..=band_limit {
        if m > 0 {
            let mf = m as f64;
            h *= s * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
        }
        let off = triangle_offset(band_limit, m);
        gegenbauer_column(m as f64 + 0.5, c, h, &mut out[off..off + band_limit - m + 1]);
    }
}

/// Azimuthal factors `Φ_m(φ)` for `m = -band_limit..=band_limit`, stored at `m + band_limit`.
pub fn azimuthal_factors(band_limit: usize, phi: f64, out: &mut Vec<f64>) {
    let k = band_limit as i64;
    out.clear();
    out.resize(2 * band_limit + 1, 0.0);
    let inv_pi = 1.0 / PI.sqrt();
    for m in -k..=k {
        let v = match m.cmp(&0) {
            std::cmp::Ordering::Equal => 1.0 / (2.0 * PI).sqrt(),
            std::cmp::Ordering::Greater => (m as f64 * phi).cos() * inv_pi,
            std::cmp::Ordering::Less => ((-m) as f64 * phi).sin() * inv_pi,
        };
        out[(m + k) as usize] = v;
    }
}

/// Azimuthal factors from `(cos φ, sin φ)` using the angle-addition recurrence.
pub fn azimuthal_factors_cs(band_limit: usize, cp: f64, sp: f64, out: &mut Vec<f64>) {
    let k = band_limit;
    out.clear();
    out.resize(2 * k + 1, 0.0);
    let inv_pi = 1.0 / PI.sqrt();
    out[k] = 1.0 / (2.0 * PI).sqrt();
    let (mut cm, mut sm) = (1.0, 0.0);
    for m in 1..=k {
        let c_next = cm * cp - sm * sp;
        let s_next = sm * cp + cm * sp;
        cm = c_next;
        sm = s_next;
        out[k + m] = cm * inv_pi;
        out[k - m] = sm * inv_pi;
    }
}

/// Length of a `[l][n]`, `l + n <= band_limit` triangle.
pub fn triangle_len(band_limit: usize) -> usize {
    (band_limit + 1) * (band_limit + 2) / 2
}

/// Offset of row `l` in a `[l][n]` triangle.
pub fn triangle_offset(band_limit: usize, l: usize) -> usize {
    // Rows have lengths band_limit+1, band_limit, ..., so row l starts after
    // sum_{j<l} (band_limit + 1 - j).
    l * (band_limit + 1) - l * (l.saturating_sub(1)) / 2
}

/// Hyperspherical angles of a unit vector, as `(cos χ, sin χ, cos θ, sin θ, cos φ, sin φ)`.
///
/// Poles are resolved by choosing `θ = 0` or `φ = 0`, where the basis is continuous anyway.
pub fn angle_cosines(x: &[f64; 4]) -> [f64; 6] {
    let r3 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let norm = (r3 * r3 + x[3] * x[3]).sqrt();
    let (cc, sc) = (x[3] / norm, r3 / norm);
    let (ct, st) = if r3 > 0.0 { (x[2] / r3, (x[0] * x[0] + x[1] * x[1]).sqrt() / r3) } else { (1.0, 0.0) };
    let r2 = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let (cp, sp) = if r2 > 0.0 { (x[0] / r2, x[1] / r2) } else { (1.0, 0.0) };
    [cc, sc, ct, st, cp, sp]
}

/// Evaluates every basis function of degree `<= band_limit` at a point.
#[derive(Debug, Default)]
pub struct PointBasis {
    radial: Vec<f64>,
    legendre: Vec<f64>,
    azimuthal: Vec<f64>,
}

impl PointBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills `out` (length [`count_up_to`]) with the basis values at `x`.
    pub fn values(&mut self, band_limit: usize, x: &[f64; 4], out: &mut [f64]) {
        let [cc, sc, ct, st, cp, sp] = angle_cosines(x);
        radial_profiles(band_limit, cc, sc, &mut self.radial);
        legendre_profiles(band_limit, ct, st, &mut self.legendre);
        azimuthal_factors_cs(band_limit, cp, sp, &mut self.azimuthal);
        let kb = band_limit as i64;
        for k in 0..=band_limit {
            for l in 0..=k {
                let radial = self.radial[triangle_offset(band_limit, l) + k - l];
                for m in -(l as i64)..=(l as i64) {
                    let am = m.unsigned_abs() as usize;
                    let leg = self.legendre[triangle_offset(band_limit, am) + l - am];
                    let az = self.azimuthal[(m + kb) as usize];
                    out[flat_index(k, l, m)] = radial * leg * az;
                }
            }
        }
    }

    /// Evaluates the expansion with coefficients `coeffs` (length [`count_up_to`]) at `x`.
    pub fn evaluate(&mut self, band_limit: usize, coeffs: &[f64], x: &[f64; 4]) -> f64 {
        let [cc, sc, ct, st, cp, sp] = angle_cosines(x);
        radial_profiles(band_limit, cc, sc, &mut self.radial);
        legendre_profiles(band_limit, ct, st, &mut self.legendre);
        azimuthal_factors_cs(band_limit, cp, sp, &mut self.azimuthal);
        let kb = band_limit as i64;
        let mut total = 0.0;
        for l in 0..=band_limit {
            let rrow = triangle_offset(band_limit, l);
            for m in -(l as i64)..=(l as i64) {
                let am = m.unsigned_abs() as usize;
                let ang = self.legendre[triangle_offset(band_limit, am) + l - am] * self.azimuthal[(m + kb) as usize];
                let mut radial_sum = 0.0;
                for k in l..=band_limit {
                    radial_sum += coeffs[flat_index(k, l, m)] * self.radial[rrow + k - l];
                }
                total += radial_sum * ang;
            }
        }
        total
    }
}

/// Flat index of the degree-one harmonic proportional to the coordinate `x_{axis}` (0-based).
///
/// The degree-one harmonics are `(√2/π) x_i`.
pub fn coordinate_index(axis: usize) -> usize {
    match axis {
        0 => flat_index(1, 1, 1),
        1 => flat_index(1, 1, -1),
        2 => flat_index(1, 1, 0),
        3 => flat_index(1, 0, 0),
        _ => panic!("coordinate axis out of range: {axis}"),
    }
}

/// Scale such that `x_i = COORDINATE_SCALE · Y_{coordinate_index(i)}`.
pub const COORDINATE_SCALE: f64 = PI / std::f64::consts::SQRT_2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for idx in 0..count_up_to(9) {
            let (k, l, m) = split_index(idx);
            assert_eq!(flat_index(k, l, m), idx);
        }
        assert_eq!(count_up_to(0), 1);
        assert_eq!(count_up_to(1), 5);
        assert_eq!(count_up_to(2), 14);
    }

    #[test]
    fn triangle_layout() {
        let b = 5;
        let mut expect = 0;
        for l in 0..=b {
            assert_eq!(triangle_offset(b, l), expect);
            expect += b - l + 1;
        }
        assert_eq!(expect, triangle_len(b));
    }

    #[test]
    fn degree_one_are_coordinates() {
        let mut pb = PointBasis::new();
        let x = [0.1, -0.3, 0.5, (1.0f64 - 0.01 - 0.09 - 0.25).sqrt()];
        let mut out = vec![0.0; count_up_to(1)];
        pb.values(1, &x, &mut out);
        for axis in 0..4 {
            let v = out[coordinate_index(axis)] * COORDINATE_SCALE;
            assert!((v - x[axis]).abs() < 1e-14, "axis {axis}: {v} vs {}", x[axis]);
        }
        assert!((out[0] - 1.0 / (2.0 * PI * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn azimuthal_recurrence_matches_direct() {
        let phi = 1.234f64;
        let mut a = Vec::new();
        let mut b = Vec::new();
        azimuthal_factors(12, phi, &mut a);
        azimuthal_factors_cs(12, phi.cos(), phi.sin(), &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
