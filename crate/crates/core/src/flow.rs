//! Time integration of the boundary curvature flow `∂ₜw = α f - T`.
//!
//! Each step is semi-implicit in coefficient space: the stiff part `σ P w` is treated
//! implicitly (it is diagonal), the remainder explicitly, and the volume is restored to
//! `2π²` by adding a constant afterwards.

use serde::{Deserialize, Serialize};

use crate::beckner;
use crate::curvature::{MetricSample, Prescribed, SPHERE_AREA};
use crate::error::{Error, Result};
use crate::mobius::{self, MobiusParams, Point};
use crate::spectral::{GridField, SpectralField, SpectralSpace};

/// Choice of the stabilisation constant `σ` multiplying the implicit part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Smallest value of `e^{-3w}` on the grid.
    #[default]
    MinGrid,
    /// `σ = 1`.
    One,
    /// Largest value of `e^{-3w}` on the grid; stable for every step size.
    MaxGrid,
}

impl std::str::FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_grid" | "min" => Ok(Self::MinGrid),
            "one" | "1" => Ok(Self::One),
            "max_grid" | "max" => Ok(Self::MaxGrid),
            other => Err(Error::Parameter(format!("unknown sigma mode `{other}` (min_grid, one, max_grid)"))),
        }
    }
}

impl std::fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MinGrid => "min_grid",
            Self::One => "one",
            Self::MaxGrid => "max_grid",
        })
    }
}

/// Parameters of a flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub band_limit: usize,
    /// Initial and maximal step.
    pub dt: f64,
    pub t_max: f64,
    /// The run stops once `F₂` falls below this.
    pub tol_converged: f64,
    /// The run stops once the centring dilation falls below this.
    pub eps_min: f64,
    pub oversample: usize,
    pub sigma_mode: SigmaMode,
    pub seed: u64,
    /// Centring runs every this many accepted steps.
    pub n_diag: usize,
    pub max_steps: usize,
    pub normalize_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            band_limit: 16,
            dt: 1e-3,
            t_max: 10.0,
            tol_converged: 1e-10,
            eps_min: 0.05,
            oversample: 2,
            sigma_mode: SigmaMode::MinGrid,
            seed: 0,
            n_diag: 10,
            max_steps: 1_000_000,
            normalize_tol: 1e-10,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.band_limit == 0 {
            return bad("band limit must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive");
        }
        if !(self.tol_converged > 0.0) {
            return bad("tol_converged must be positive");
        }
        if !(self.eps_min > 0.0 && self.eps_min < 1.0) {
            return bad("eps_min must lie in (0, 1)");
        }
        if self.oversample == 0 || self.n_diag == 0 || self.max_steps == 0 {
            return bad("oversample, n_diag and max_steps must be positive");
        }
        if !(self.normalize_tol > 0.0) {
            return bad("normalize_tol must be positive");
        }
        Ok(())
    }
}

/// A conformal factor at some time with its derived quantities.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub sample: MetricSample,
    pub alpha: f64,
    pub energy_f: f64,
    /// `∫ (α f - T)² e^{3w}`.
    pub f2: f64,
    /// `⟨r, P r⟩` for the resolved part of the residual.
    pub g2: f64,
    /// Residual `α f - T` projected to the band limit.
    pub residual_hat: SpectralField,
}

impl FlowState {
    pub fn w(&self) -> &SpectralField {
        &self.sample.w
    }

    pub fn volume(&self) -> f64 {
        self.sample.volume
    }

    pub fn energy(&self) -> f64 {
        self.sample.energy()
    }
}

/// One row of flow diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub alpha: f64,
    pub energy_f: f64,
    pub energy: f64,
    pub volume: f64,
    pub f2: f64,
    pub g2: f64,
    pub b: Option<Point>,
    /// Centre of mass of the current metric (before centring).
    pub s: Point,
    pub p: Option<Point>,
    pub eps: Option<f64>,
    pub dt_used: f64,
    pub total_curvature: f64,
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Converged { t: f64 },
    Concentrating { t: f64, p: Point, eps: f64 },
    HorizonReached { t: f64 },
    StepLimit { t: f64 },
}

/// Trajectory and final state of a run.
#[derive(Debug, Clone)]
pub struct FlowRun {
    pub records: Vec<DiagnosticsRecord>,
    pub outcome: Outcome,
    pub final_state: FlowState,
    pub rejected_steps: usize,
}

/// Flow integrator for a fixed prescribed function on a fixed grid.
#[derive(Debug, Clone)]
pub struct FlowEngine {
    space: SpectralSpace,
    f: Prescribed,
}

const ENERGY_SLACK: f64 = 1e-10;
const DT_MIN: f64 = 1e-14;
const GROW_AFTER: usize = 20;

impl FlowEngine {
    pub fn new(space: SpectralSpace, f: &SpectralField) -> Result<Self> {
        let f = Prescribed::new(&space, f)?;
        Ok(Self { space, f })
    }

    pub fn space(&self) -> &SpectralSpace {
        &self.space
    }

    pub fn prescribed(&self) -> &Prescribed {
        &self.f
    }

    /// Grid extrema `(min f, max f)`.
    pub fn f_bounds(&self) -> (f64, f64) {
        (self.f.grid().min(), self.f.grid().max())
    }

    /// Adds the constant that makes the volume `2π²`.
    pub fn project_volume(&self, w: &SpectralField) -> Result<SpectralField> {
        let wg = self.space.synthesize(w)?;
        Ok(self.project_with_grid(w.clone(), wg)?.0)
    }

    fn project_with_grid(&self, mut w: SpectralField, mut wg: GridField) -> Result<(SpectralField, GridField)> {
        let max_abs = 3.0 * wg.max_abs();
        if !(max_abs <= crate::curvature::MAX_EXPONENT) {
            return Err(Error::Overflow { max_abs });
        }
        let vol = wg.map(|v| (3.0 * v).exp()).integrate();
        let c = (SPHERE_AREA / vol).ln() / 3.0;
        w.add_constant(c);
        wg.values_mut().iter_mut().for_each(|v| *v += c);
        Ok((w, wg))
    }

    /// Evaluates a state without changing `w`.
    pub fn state(&self, t: f64, w: &SpectralField) -> Result<FlowState> {
        let wg = self.space.synthesize(w)?;
        self.state_from_grid(t, w.clone(), wg)
    }

    /// Evaluates a state after projecting the volume.
    pub fn projected_state(&self, t: f64, w: &SpectralField) -> Result<FlowState> {
        let wg = self.space.synthesize(w)?;
        let (w, wg) = self.project_with_grid(w.clone(), wg)?;
        self.state_from_grid(t, w, wg)
    }

    fn state_from_grid(&self, t: f64, w: SpectralField, wg: GridField) -> Result<FlowState> {
        let sample = MetricSample::from_grid(&self.space, &w, wg)?;
        let alpha = sample.alpha(&self.f);
        let energy_f = sample.energy_f(&self.f);
        let r = sample.residual(&self.f);
        let f2 = r.zip_map(&sample.density, |r, d| r * r * d).integrate();
        let residual_hat = self.space.analyze_to(&r, w.band_limit())?;
        let g2 = beckner::quadratic_form(&residual_hat);
        Ok(FlowState { t, sample, alpha, energy_f, f2, g2, residual_hat })
    }

    /// Stabilisation constant for a state.
    pub fn sigma(&self, state: &FlowState, mode: SigmaMode) -> f64 {
        match mode {
            SigmaMode::One => 1.0,
            SigmaMode::MinGrid => 1.0 / state.sample.density.max(),
            SigmaMode::MaxGrid => 1.0 / state.sample.density.min(),
        }
    }

    /// One semi-implicit step followed by volume projection.
    pub fn step(&self, state: &FlowState, dt: f64, mode: SigmaMode) -> Result<FlowState> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("step must be positive, got {dt}")));
        }
        let sigma = self.sigma(state, mode);
        let w = state.w();
        let k_max = w.band_limit();
        let mut next = w.clone();
        {
            let out = next.coeffs_mut();
            let (wc, rc, pc) = (w.coeffs(), state.residual_hat.coeffs(), state.sample.p_w.coeffs());
            for k in 0..=k_max {
                let denom = 1.0 + dt * sigma * beckner::multiplier(k);
                let lo = crate::spectral::basis::degree_offset(k);
                let hi = crate::spectral::basis::degree_offset(k + 1);
                for i in lo..hi {
                    out[i] = (wc[i] + dt * (rc[i] + sigma * pc[i])) / denom;
                }
            }
        }
        let wg = self.space.synthesize(&next)?;
        let (next, wg) = self.project_with_grid(next, wg)?;
        self.state_from_grid(state.t + dt, next, wg)
    }

    /// Centre of mass `⨍ x e^{3w}` of the metric of a state.
    pub fn center_of_mass(&self, state: &FlowState) -> Point {
        mobius::center_of_mass(&state.sample.density, &MobiusParams::identity())
    }

    /// Centring dilation for a state.
    pub fn locate_center(&self, state: &FlowState, tol: f64, guess: Option<&MobiusParams>) -> Result<MobiusParams> {
        mobius::locate_center(&state.sample.density, tol, guess).map(|(p, _, _)| p)
    }

    /// Moments `b_i = ∫ x_i (α f∘Φ - T_h) dV_h` of the centred residual.
    ///
    /// With `h` the metric pulled back by `Φ` and `v` its factor, `T_h e^{3v} = P v + 2`
    /// and `P x_i = 6 x_i`, so the curvature term reduces to `6 ∫ x_i v`. Both terms are
    /// then moved to the grid of the current metric through `y = Φ(x)`, which avoids
    /// evaluating the curvature pointwise.
    pub fn compute_b(&self, state: &FlowState, params: &MobiusParams) -> Point {
        let g = self.space.grid();
        let (w, d, f) = (state.sample.w_grid.values(), state.sample.density.values(), self.f.grid().values());
        let mut first = [0.0; 4];
        let mut second = [0.0; 4];
        for (n, (y, wt)) in g.points().iter().zip(g.weights()).enumerate() {
            let x = params.apply_inverse(y);
            let lj = params.inverse_conformal_factor(y).ln();
            let j3 = (3.0 * lj).exp();
            let a = wt * f[n] * d[n];
            let b = wt * (w[n] - lj) * j3;
            for i in 0..4 {
                first[i] += a * x[i];
                second[i] += b * x[i];
            }
        }
        std::array::from_fn(|i| state.alpha * first[i] - 6.0 * second[i])
    }

    fn record(&self, state: &FlowState, centering: Option<&MobiusParams>, dt_used: f64) -> DiagnosticsRecord {
        let b = centering.map(|c| self.compute_b(state, c));
        DiagnosticsRecord {
            t: state.t,
            alpha: state.alpha,
            energy_f: state.energy_f,
            energy: state.energy(),
            volume: state.volume(),
            f2: state.f2,
            g2: state.g2,
            b,
            s: self.center_of_mass(state),
            p: centering.map(|c| c.p),
            eps: centering.map(|c| c.eps),
            dt_used,
            total_curvature: state.sample.total_curvature(),
        }
    }

    /// Integrates from `w0` until convergence, concentration, the horizon or the step limit.
    pub fn run(&self, w0: &SpectralField, cfg: &FlowConfig) -> Result<FlowRun> {
        cfg.validate()?;
        let mut state = self.projected_state(0.0, w0)?;
        let mut centering = self.locate_center(&state, cfg.normalize_tol, None).ok();
        let mut records = vec![self.record(&state, centering.as_ref(), 0.0)];
        let mut dt = cfg.dt;
        let mut streak = 0;
        let mut accepted = 0;
        let mut rejected = 0;

        let outcome = loop {
            if state.f2 < cfg.tol_converged {
                break Outcome::Converged { t: state.t };
            }
            if let Some(c) = &centering {
                if c.eps < cfg.eps_min {
                    break Outcome::Concentrating { t: state.t, p: c.p, eps: c.eps };
                }
            }
            if state.t >= cfg.t_max - 1e-12 * cfg.t_max {
                break Outcome::HorizonReached { t: state.t };
            }
            if accepted >= cfg.max_steps {
                break Outcome::StepLimit { t: state.t };
            }
            let h = dt.min(cfg.t_max - state.t);
            let next = self.step(&state, h, cfg.sigma_mode)?;
            if next.energy_f > state.energy_f + ENERGY_SLACK {
                rejected += 1;
                dt *= 0.5;
                streak = 0;
                if dt < DT_MIN {
                    return Err(Error::StepCollapse { t: state.t, dt_min: DT_MIN });
                }
                continue;
            }
            state = next;
            accepted += 1;
            streak += 1;
            if streak >= GROW_AFTER {
                dt = (2.0 * dt).min(cfg.dt);
                streak = 0;
            }
            let diag_now = accepted % cfg.n_diag == 0;
            if diag_now {
                centering = self.locate_center(&state, cfg.normalize_tol, centering.as_ref()).ok();
            }
            records.push(self.record(&state, if diag_now { centering.as_ref() } else { None }, h));
        };
        Ok(FlowRun { records, outcome, final_state: state, rejected_steps: rejected })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::TOTAL_CURVATURE;

    fn engine(k: usize, f: SpectralField) -> FlowEngine {
        FlowEngine::new(SpectralSpace::new(k, 2).unwrap(), &f).unwrap()
    }

    #[test]
    fn round_metric_is_fixed() {
        let e = engine(6, SpectralField::constant(0, 2.0));
        let s0 = e.state(0.0, &SpectralField::zeros(6)).unwrap();
        let s1 = e.step(&s0, 0.1, SigmaMode::MinGrid).unwrap();
        assert!(s1.w().l2_norm() < 1e-12);
        let run = e.run(&SpectralField::zeros(6), &FlowConfig { band_limit: 6, ..Default::default() }).unwrap();
        assert_eq!(run.outcome, Outcome::Converged { t: 0.0 });
        assert_eq!(run.records.len(), 1);
        assert!(run.records[0].f2 < 1e-24);
    }

    #[test]
    fn projection_of_constant() {
        let e = engine(3, SpectralField::constant(0, 2.0));
        let w = e.project_volume(&SpectralField::constant(3, 0.1)).unwrap();
        assert!(w.l2_norm() < 1e-14);
    }

    #[test]
    fn step_keeps_volume_and_total_curvature() {
        let f = SpectralField::constant(1, 2.0).add(&SpectralField::coordinate(1, 3).scaled(0.3));
        let e = engine(8, f);
        let w0 = SpectralSpace::random_field(8, 2, 0.2);
        let mut s = e.projected_state(0.0, &w0).unwrap();
        for _ in 0..5 {
            s = e.step(&s, 1e-3, SigmaMode::MinGrid).unwrap();
            assert!((s.volume() - SPHERE_AREA).abs() < 1e-10 * SPHERE_AREA);
            assert!((s.sample.total_curvature() - TOTAL_CURVATURE).abs() < 1e-8 * TOTAL_CURVATURE);
        }
    }

    #[test]
    fn small_mode_decays_like_linearisation() {
        // Near w = 0 with f ≡ 2 the residual of a degree-2 mode is -(24 - 6) w, so with
        // σ = 1 one step multiplies it by (1 + 6 dt) / (1 + 24 dt).
        let e = engine(4, SpectralField::constant(0, 2.0));
        let mut w = SpectralField::zeros(4);
        let idx = crate::spectral::basis::flat_index(2, 1, 0);
        w.coeffs_mut()[idx] = 1e-6;
        let s = e.state(0.0, &w).unwrap();
        let dt = 1e-3;
        let n = e.step(&s, dt, SigmaMode::One).unwrap();
        let ratio = n.w().coeffs()[idx] / 1e-6;
        let expect = (1.0 + 6.0 * dt) / (1.0 + 24.0 * dt);
        assert!((ratio - expect).abs() < 1e-9, "{ratio} vs {expect}");
    }

    #[test]
    fn b_vanishes_for_round_metric() {
        let e = engine(4, SpectralField::constant(0, 2.0));
        let s = e.state(0.0, &SpectralField::zeros(4)).unwrap();
        let b = e.compute_b(&s, &MobiusParams::identity());
        assert!(b.iter().all(|v| v.abs() < 1e-12), "{b:?}");
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let bad = FlowConfig { eps_min: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!("max_grid".parse::<SigmaMode>().unwrap(), SigmaMode::MaxGrid);
    }
}
