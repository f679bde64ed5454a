//! Reduced dynamics of a concentrating flow: the centre `p` and dilation `ε` of the
//! bubble that best describes the metric.
//!
//! To leading order
//!
//! ```text
//! dp/dt = (32/3) α ε² ∇f(p)
//! d(1 - |p_ball|²)/dt = 384 α ε⁴ Δf(p)
//! ```
//!
//! with `α = 2/f(p)`. Using `1 - |p_ball|² = 12 ε²`, the second law becomes
//! `dε/dt = 16 α ε³ Δf(p)`. The rescaled clock `s` follows `ds/dt = min(1/2, ε²)`.
//! Higher-order corrections are dropped.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::DiagnosticsRecord;
use crate::mobius::Point;
use crate::spectral::{basis::PointBasis, check_unit, SpectralField, SpectralSpace};

/// Point of a shadow trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowState {
    pub p: Point,
    pub eps: f64,
    /// Rescaled time.
    pub s: f64,
    /// Flow time.
    pub t: f64,
}

/// Time derivative of a shadow state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowVelocity {
    pub p: Point,
    pub eps: f64,
    pub s: f64,
}

/// Prescribed function with the derived fields the reduced dynamics needs.
#[derive(Debug, Clone)]
pub struct ShadowModel {
    f: SpectralField,
    /// `⟨∇f, ∇x_i⟩`, the ambient components of the tangential gradient.
    gradient: [SpectralField; 4],
    laplacian: SpectralField,
}

impl ShadowModel {
    pub fn new(f: &SpectralField) -> Result<Self> {
        let k = f.band_limit().max(1);
        let f = f.resized(k);
        let space = SpectralSpace::new(k + 1, 2)?;
        let mut gradient = Vec::with_capacity(4);
        for axis in 0..4 {
            gradient.push(space.gradient_inner(&f, &SpectralField::coordinate(1, axis))?);
        }
        let laplacian = SpectralSpace::minus_laplacian(&f).scaled(-1.0);
        let gradient = [gradient[0].clone(), gradient[1].clone(), gradient[2].clone(), gradient[3].clone()];
        Ok(Self { f, gradient, laplacian })
    }

    pub fn f(&self) -> &SpectralField {
        &self.f
    }

    /// `f(p)`, `∇f(p)` and `Δf(p)`.
    pub fn local_data(&self, p: &Point) -> (f64, Point, f64) {
        let mut pb = PointBasis::new();
        let val = pb.evaluate(self.f.band_limit(), self.f.coeffs(), p);
        let grad = std::array::from_fn(|i| {
            let g = &self.gradient[i];
            pb.evaluate(g.band_limit(), g.coeffs(), p)
        });
        let lap = pb.evaluate(self.laplacian.band_limit(), self.laplacian.coeffs(), p);
        (val, grad, lap)
    }

    /// Right-hand side of the reduced system.
    pub fn rhs(&self, state: &ShadowState) -> ShadowVelocity {
        let (val, grad, lap) = self.local_data(&state.p);
        let alpha = 2.0 / val;
        let e = state.eps;
        ShadowVelocity {
            p: grad.map(|g| 32.0 / 3.0 * alpha * e * e * g),
            eps: 16.0 * alpha * e * e * e * lap,
            s: (e * e).min(0.5),
        }
    }
}

/// Shadow trajectory, truncated if `ε` leaves `(0, 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowTrajectory {
    pub states: Vec<ShadowState>,
    pub left_domain: bool,
}

fn advance(s: &ShadowState, v: &ShadowVelocity, h: f64) -> ShadowState {
    ShadowState {
        p: std::array::from_fn(|i| s.p[i] + h * v.p[i]),
        eps: s.eps + h * v.eps,
        s: s.s + h * v.s,
        t: s.t + h,
    }
}

/// Classical fourth-order Runge–Kutta in flow time, renormalising `p` after each step.
pub fn integrate_shadow(model: &ShadowModel, init: ShadowState, horizon: f64, dt: f64) -> Result<ShadowTrajectory> {
    check_unit(&init.p)?;
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(crate::Error::Parameter("shadow step and horizon must be positive".into()));
    }
    let mut states = vec![init];
    let mut cur = init;
    let end = init.t + horizon;
    let mut left_domain = false;
    while cur.t < end - 1e-12 * dt {
        let h = dt.min(end - cur.t);
        let k1 = model.rhs(&cur);
        let k2 = model.rhs(&renorm(advance(&cur, &k1, h / 2.0)));
        let k3 = model.rhs(&renorm(advance(&cur, &k2, h / 2.0)));
        let k4 = model.rhs(&renorm(advance(&cur, &k3, h)));
        let comb = ShadowVelocity {
            p: std::array::from_fn(|i| (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]) / 6.0),
            eps: (k1.eps + 2.0 * k2.eps + 2.0 * k3.eps + k4.eps) / 6.0,
            s: (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s) / 6.0,
        };
        let next = renorm(advance(&cur, &comb, h));
        if !(next.eps > 0.0 && next.eps < 1.0) {
            left_domain = true;
            break;
        }
        states.push(next);
        cur = next;
    }
    Ok(ShadowTrajectory { states, left_domain })
}

fn renorm(mut s: ShadowState) -> ShadowState {
    let n = s.p.iter().map(|v| v * v).sum::<f64>().sqrt();
    s.p = s.p.map(|v| v / n);
    s
}

/// Great-circle distance between unit vectors.
pub fn geodesic_distance(a: &Point, b: &Point) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    // atan2 form stays accurate for nearby points.
    let s = (d * (4.0 - d * d).max(0.0).sqrt()) / 2.0;
    s.atan2(c)
}

/// Comparison of a flow's concentration track with a shadow trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowReport {
    /// No flow sample with valid `(p, ε)` and `ε <= ε_window`.
    pub empty: bool,
    pub window: Option<(f64, f64)>,
    pub samples: usize,
    pub max_p_deviation: f64,
    pub max_eps_rel_deviation: f64,
}

/// Shadow state at flow time `t`, interpolated linearly between stored states.
pub fn shadow_at(traj: &ShadowTrajectory, t: f64) -> Option<ShadowState> {
    let st = &traj.states;
    if st.is_empty() || t < st[0].t - 1e-12 || t > st[st.len() - 1].t + 1e-12 {
        return None;
    }
    let i = st.partition_point(|s| s.t <= t).clamp(1, st.len().max(2) - 1);
    if st.len() == 1 {
        return Some(st[0]);
    }
    let (a, b) = (&st[i - 1], &st[i]);
    let lam = if b.t > a.t { ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0) } else { 0.0 };
    Some(renorm(ShadowState {
        p: std::array::from_fn(|k| a.p[k] + lam * (b.p[k] - a.p[k])),
        eps: a.eps + lam * (b.eps - a.eps),
        s: a.s + lam * (b.s - a.s),
        t,
    }))
}

/// Flow samples with valid `(p, ε)` and `ε <= eps_window`.
pub fn window_samples(records: &[DiagnosticsRecord], eps_window: f64) -> Vec<(f64, Point, f64)> {
    records
        .iter()
        .filter_map(|r| match (r.p, r.eps) {
            (Some(p), Some(e)) if e <= eps_window => Some((r.t, p, e)),
            _ => None,
        })
        .collect()
}

/// Sup-over-window distances between the flow's `(p, ε)` samples and the shadow track.
pub fn compare_with_full_flow(records: &[DiagnosticsRecord], shadow: &ShadowTrajectory, eps_window: f64) -> ShadowReport {
    let samples = window_samples(records, eps_window);
    let mut n = 0;
    let mut max_p: f64 = 0.0;
    let mut max_e: f64 = 0.0;
    let mut first = None;
    let mut last = None;
    for (t, p, e) in &samples {
        if let Some(s) = shadow_at(shadow, *t) {
            n += 1;
            max_p = max_p.max(geodesic_distance(p, &s.p));
            max_e = max_e.max((s.eps - e).abs() / e);
            first.get_or_insert(*t);
            last = Some(*t);
        }
    }
    ShadowReport {
        empty: n == 0,
        window: first.zip(last),
        samples: n,
        max_p_deviation: max_p,
        max_eps_rel_deviation: max_e,
    }
}

/// Starts a shadow trajectory at the first flow sample inside the window and integrates it
/// to the last flow record.
pub fn shadow_for_window(model: &ShadowModel, records: &[DiagnosticsRecord], eps_window: f64, dt: f64) -> Result<Option<ShadowTrajectory>> {
    let samples = window_samples(records, eps_window);
    let Some(&(t0, p0, e0)) = samples.first() else {
        return Ok(None);
    };
    let t_end = records.last().map(|r| r.t).unwrap_or(t0);
    let init = ShadowState { p: p0, eps: e0, s: 0.0, t: t0 };
    integrate_shadow(model, init, (t_end - t0).max(0.0), dt).map(Some)
}
