//! Acceptance battery.
//!
//! Each item runs a fixed, seeded experiment and compares measured values with fixed
//! bounds. Failures are verdicts, not errors: an item whose computation errors out is
//! reported as failed with the error text.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::beckner;
use crate::curvature::{self, MetricSample, SPHERE_AREA, TOTAL_CURVATURE};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowEngine, Outcome, SigmaMode};
use crate::mobius::{self, Point};
use crate::morse::{self, Counts, MorseDatum};
use crate::shadow::{self, ShadowModel};
use crate::spectral::{self, basis, GridField, SpectralField, SpectralSpace};

/// Names of the items, in order.
pub const ITEMS: [&str; 10] = [
    "spectrum",
    "conservation",
    "descent",
    "convergence",
    "bubbles",
    "kazdan_warner",
    "ache_chang",
    "b_vector",
    "morse",
    "concentration",
];

/// Options for a battery run.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Restrict to these item names.
    pub only: Option<Vec<String>>,
    /// Multiplies the operator output by `1 + δ` inside the spectrum item (negative control).
    pub fault_multiplier: Option<f64>,
}

/// One measured value and its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
    pub relation: &'static str,
}

impl Check {
    /// Passes when `measured < bound`.
    pub fn below(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { label: label.into(), measured, bound, passed: measured < bound, relation: "<" }
    }

    /// Passes when `measured <= bound`.
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { label: label.into(), measured, bound, passed: measured <= bound, relation: "<=" }
    }

    /// Passes when `measured >= bound`.
    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { label: label.into(), measured, bound, passed: measured >= bound, relation: ">=" }
    }

    /// A yes/no condition, recorded as 1 or 0.
    pub fn holds(label: impl Into<String>, ok: bool) -> Self {
        Self { label: label.into(), measured: ok as u8 as f64, bound: 1.0, passed: ok, relation: "==" }
    }
}

/// Verdict of one item.
#[derive(Debug, Clone, Serialize)]
pub struct ItemReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl ItemReport {
    /// One-line verdict.
    pub fn summary(&self) -> String {
        let worst = self.checks.iter().find(|c| !c.passed).or(self.checks.first());
        let detail = match (&self.error, worst) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => format!("{}: {:.3e} {} {:.3e}", c.label, c.measured, c.relation, c.bound),
            (None, None) => String::new(),
        };
        format!(
            "criterion {:>2} {:<14} {}  ({} checks, {:.1} s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.seconds,
            detail
        )
    }

    /// Full table of checks.
    pub fn table(&self) -> String {
        let mut s = self.summary();
        for c in &self.checks {
            s.push_str(&format!(
                "\n    [{}] {:<48} {:>12.4e} {} {:.4e}",
                if c.passed { "ok" } else { "!!" },
                c.label,
                c.measured,
                c.relation,
                c.bound
            ));
        }
        for n in &self.notes {
            s.push_str(&format!("\n    note: {n}"));
        }
        s
    }
}

/// Collects checks for one item.
#[derive(Debug, Default)]
struct Sheet {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Sheet {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }
}

/// Runs the selected items.
pub fn verify_suite(opts: &VerifyOptions) -> Result<Vec<ItemReport>> {
    let names: Vec<&str> = match &opts.only {
        None => ITEMS.to_vec(),
        Some(list) => {
            let mut out = Vec::new();
            for n in list {
                let name = ITEMS
                    .iter()
                    .find(|i| **i == n.as_str())
                    .ok_or_else(|| Error::Parameter(format!("unknown verify item `{n}`; known: {}", ITEMS.join(", "))))?;
                out.push(*name);
            }
            out
        }
    };
    Ok(names.into_iter().map(|n| run_item(n, opts)).collect())
}

/// Runs one item by name.
pub fn run_item(name: &str, opts: &VerifyOptions) -> ItemReport {
    let id = ITEMS.iter().position(|i| *i == name).map(|i| i + 1).unwrap_or(0);
    let start = Instant::now();
    let mut sheet = Sheet::default();
    let result = match name {
        "spectrum" => spectrum(&mut sheet, opts.fault_multiplier),
        "conservation" => conservation(&mut sheet),
        "descent" => descent(&mut sheet),
        "convergence" => convergence(&mut sheet),
        "bubbles" => bubbles(&mut sheet),
        "kazdan_warner" => kazdan_warner(&mut sheet),
        "ache_chang" => ache_chang(&mut sheet),
        "b_vector" => b_vector(&mut sheet),
        "morse" => morse_gate(&mut sheet),
        "concentration" => concentration(&mut sheet),
        other => Err(Error::Parameter(format!("unknown verify item `{other}`"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    if let Some(limit) = runtime_limit(name) {
        sheet.push(Check::below("runtime [s]", seconds, limit));
    }
    let error = result.err().map(|e| e.to_string());
    let passed = error.is_none() && sheet.checks.iter().all(|c| c.passed);
    ItemReport {
        id,
        name: ITEMS.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        passed,
        checks: sheet.checks,
        notes: sheet.notes,
        seconds,
        error,
    }
}

fn runtime_limit(name: &str) -> Option<f64> {
    match name {
        "spectrum" | "morse" => Some(1.0),
        "conservation" => Some(60.0),
        "convergence" => Some(600.0),
        "concentration" => Some(900.0),
        _ => None,
    }
}

fn axial_f(delta: f64) -> SpectralField {
    SpectralField::constant(1, 2.0).add(&SpectralField::coordinate(1, 3).scaled(delta))
}

fn unit(v: Point) -> Point {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

/// Seeded uniformly distributed points on the sphere.
pub fn random_points(seed: u64, n: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| unit(std::array::from_fn(|_| StandardNormal.sample(&mut rng))))
        .collect()
}

fn max_abs_dev(g: &GridField, target: f64) -> f64 {
    g.values().iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

fn spectrum(sheet: &mut Sheet, fault: Option<f64>) -> Result<()> {
    const K: usize = 16;
    let space = SpectralSpace::new(K, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_op: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    let mut layout_ok = true;
    for k in 0..=K {
        let expected = (k * (k + 1) * (k + 2)) as f64;
        let count = (0..spectral::coefficient_count(K)).filter(|&i| basis::split_index(i).0 == k).count();
        layout_ok &= count == (k + 1) * (k + 1) && count == spectral::multiplicity(k);
        let mut u = SpectralField::zeros(K);
        for i in basis::degree_offset(k)..basis::degree_offset(k + 1) {
            u.coeffs_mut()[i] = StandardNormal.sample(&mut rng);
        }
        let mut pu = beckner::apply(&u);
        if let Some(d) = fault {
            pu = pu.scaled(1.0 + d);
        }
        let norm = u.dot(&u);
        // Rayleigh quotient and the full coefficient residual against the expected eigenvalue.
        let quotient = pu.dot(&u) / norm;
        let resid = pu.add(&u.scaled(-expected)).l2_norm() / norm.sqrt();
        let scale = expected.max(1.0);
        worst_op = worst_op.max((quotient - expected).abs() / scale).max(resid / scale);
        // Independent route: the Dirichlet form from the quadrature gives the Laplace eigenvalue.
        let lambda = space.gradient_inner_grid(&u, &u)?.integrate() / norm;
        let from_quad = (lambda + 1.0).sqrt() * lambda;
        worst_quad = worst_quad.max((from_quad - expected).abs() / scale);
        sheet.note(format!("k={k:>2}  multiplier={expected:>6}  multiplicity={count:>3}  rayleigh={quotient:.15e}"));
    }
    sheet.push(Check::below("max relative error, operator vs k(k+1)(k+2)", worst_op, 1e-12));
    sheet.push(Check::below("max relative error, quadrature Dirichlet form", worst_quad, 1e-12));
    sheet.push(Check::holds("multiplicity (k+1)^2 matches layout for k <= 16", layout_ok));
    Ok(())
}

/// Settings of the conservation run, shared with the descent item.
fn conservation_run() -> Result<(FlowEngine, crate::flow::FlowRun)> {
    const K: usize = 16;
    let engine = FlowEngine::new(SpectralSpace::new(K, 2)?, &axial_f(0.3))?;
    let w0 = SpectralSpace::random_field(K, 2, 0.3);
    let cfg = FlowConfig {
        band_limit: K,
        dt: 1e-3,
        t_max: 1e6,
        tol_converged: 1e-300,
        eps_min: 1e-3,
        max_steps: 1000,
        ..FlowConfig::default()
    };
    let run = engine.run(&w0, &cfg)?;
    Ok((engine, run))
}

fn conservation(sheet: &mut Sheet) -> Result<()> {
    let (engine, run) = conservation_run()?;
    let (m_f, big_m_f) = engine.f_bounds();
    let mut vol: f64 = 0.0;
    let mut tc: f64 = 0.0;
    let mut alpha_ok = true;
    for r in &run.records {
        vol = vol.max((r.volume - SPHERE_AREA).abs() / SPHERE_AREA);
        tc = tc.max((r.total_curvature - TOTAL_CURVATURE).abs() / TOTAL_CURVATURE);
        alpha_ok &= 2.0 / big_m_f <= r.alpha && r.alpha <= 2.0 / m_f;
    }
    sheet.note(format!("{} records, {} rejected steps, outcome {:?}", run.records.len(), run.rejected_steps, run.outcome));
    sheet.push(Check::at_least("accepted steps", (run.records.len() - 1) as f64, 1000.0));
    sheet.push(Check::below("max relative volume error", vol, 1e-10));
    sheet.push(Check::below("max relative total curvature error", tc, 1e-8));
    sheet.push(Check::holds("2/max f <= alpha <= 2/min f on every record", alpha_ok));
    Ok(())
}

fn descent(sheet: &mut Sheet) -> Result<()> {
    let (engine, run) = conservation_run()?;
    let rise = run.records.windows(2).map(|w| w[1].energy_f - w[0].energy_f).fold(f64::NEG_INFINITY, f64::max);
    sheet.push(Check::at_most("max E_f increase per accepted step", rise, 1e-10));

    // Difference quotient of one step against the instantaneous rate -4 F2.
    let w0 = SpectralSpace::random_field(4, 3, 0.2).resized(16);
    let s0 = engine.projected_state(0.0, &w0)?;
    let rate = -4.0 * s0.f2;
    let dt0 = 1e-4;
    let errors: Vec<f64> = (0..4)
        .map(|j| {
            let dt = dt0 / f64::from(1u32 << j);
            let s1 = engine.step(&s0, dt, SigmaMode::MinGrid)?;
            Ok(((s1.energy_f - s0.energy_f) / dt - rate).abs())
        })
        .collect::<Result<_>>()?;
    sheet.note(format!("rate -4F2 = {rate:.6e}; errors {errors:?}"));
    for j in 0..3 {
        let ratio = errors[j] / errors[j + 1];
        sheet.push(Check::at_least(format!("error ratio dt/{} over dt/{}", 1 << j, 1 << (j + 1)), ratio, 1.7));
        sheet.push(Check::at_most(format!("error ratio dt/{} over dt/{} (upper)", 1 << j, 1 << (j + 1)), ratio, 2.3));
    }
    Ok(())
}

fn convergence(sheet: &mut Sheet) -> Result<()> {
    const K: usize = 16;
    let space = SpectralSpace::new(K, 2)?;
    let engine = FlowEngine::new(space.clone(), &SpectralField::constant(0, 2.0))?;
    let north = [0.0, 0.0, 0.0, 1.0];
    let w0 = mobius::bubble(&space, &north, 0.6)?.add(&SpectralSpace::random_field(K, 4, 0.05));
    let cfg = FlowConfig {
        band_limit: K,
        dt: 1e-2,
        t_max: 1e4,
        tol_converged: 1e-14,
        sigma_mode: SigmaMode::MaxGrid,
        max_steps: 1_000_000,
        ..FlowConfig::default()
    };
    let run = engine.run(&w0, &cfg)?;
    let min_f2 = run.records.iter().map(|r| r.f2).fold(f64::INFINITY, f64::min);
    sheet.note(format!("{} records, {} rejected steps, outcome {:?}", run.records.len(), run.rejected_steps, run.outcome));
    sheet.push(Check::below("smallest F2 reached", min_f2, 1e-10));
    sheet.push(Check::below("terminal sup |T - 2|", max_abs_dev(&run.final_state.sample.t, 2.0), 1e-6));

    // Least-squares line through log F2 over the decade before the threshold is crossed.
    let window: Vec<(f64, f64)> = run
        .records
        .iter()
        .take_while(|r| r.f2 >= 1e-10)
        .filter(|r| r.f2 <= 1e-9)
        .map(|r| (r.t, r.f2.ln()))
        .collect();
    let (slope, r2) = linear_fit(&window);
    sheet.note(format!("fit over {} records with 1e-10 <= F2 <= 1e-9: slope {slope:.4e}", window.len()));
    sheet.push(Check::at_least("records in the final decade", window.len() as f64, 3.0));
    sheet.push(Check::below("slope of log F2", slope, 0.0));
    sheet.push(Check::below("1 - R^2 of the fit", 1.0 - r2, 0.01));
    Ok(())
}

/// Slope and coefficient of determination of a least-squares line.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

const BUBBLE_EPS: [f64; 3] = [0.3, 0.5, 0.8];

fn bubbles(sheet: &mut Sheet) -> Result<()> {
    const K: usize = 32;
    let space = SpectralSpace::new(K, 2)?;
    for eps in BUBBLE_EPS {
        let (mut t_dev, mut e_abs, mut vol, mut p_err, mut eps_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for p in random_points(5, 5) {
            let w = mobius::bubble(&space, &p, eps)?;
            let s = MetricSample::new(&space, &w)?;
            t_dev = t_dev.max(max_abs_dev(&s.t, 2.0));
            e_abs = e_abs.max(s.energy().abs());
            vol = vol.max((s.volume - SPHERE_AREA).abs() / SPHERE_AREA);
            let (found, _, _) = mobius::locate_center(&s.density, 1e-13, None)?;
            p_err = p_err.max((0..4).map(|i| (found.p[i] - p[i]).abs()).fold(0.0, f64::max));
            eps_err = eps_err.max((found.eps - eps).abs());
        }
        sheet.push(Check::below(format!("eps={eps}: sup |T - 2|"), t_dev, 1e-6));
        sheet.push(Check::below(format!("eps={eps}: |E|"), e_abs, 1e-6));
        sheet.push(Check::below(format!("eps={eps}: relative volume error"), vol, 1e-10));
        sheet.push(Check::below(format!("eps={eps}: recovered centre error"), p_err, 1e-8));
        sheet.push(Check::below(format!("eps={eps}: recovered scale error"), eps_err, 1e-8));
    }
    Ok(())
}

fn kw_max(space: &SpectralSpace, w: &SpectralField) -> Result<f64> {
    Ok(curvature::kazdan_warner_residual(space, w)?.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Smooth factor with infinitely many harmonic degrees.
pub fn smooth_test_factor(x: &Point) -> f64 {
    0.2 * (3.0 * x[0] + 2.0 * x[3]).sin() + 0.1 * (x[1] - x[2]).exp() * x[2]
}

fn kazdan_warner(sheet: &mut Sheet) -> Result<()> {
    const K: usize = 16;
    let space = SpectralSpace::new(K, 3)?;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        worst = worst.max(kw_max(&space, &SpectralSpace::random_field(K, 100 + seed, 0.1))?);
    }
    sheet.push(Check::below("max |KW component| over 20 random factors", worst, 1e-8));

    let at = |k: usize| -> Result<f64> {
        let sp = SpectralSpace::new(k, 2)?;
        let g = GridField::from_fn(sp.grid().clone(), smooth_test_factor);
        let w = sp.analyze(&g)?;
        kw_max(&sp, &w)
    };
    let (r8, r16) = (at(8)?, at(16)?);
    sheet.note(format!("smooth test factor on the flow grid: K=8 residual {r8:.3e}, K=16 residual {r16:.3e}"));
    sheet.push(Check::at_least("residual ratio K=8 / K=16", r8 / r16, 10.0));
    Ok(())
}

fn ache_chang(sheet: &mut Sheet) -> Result<()> {
    let space = SpectralSpace::new(12, 2)?;
    let mut worst = f64::INFINITY;
    for i in 0..100u64 {
        let amp = 0.05 * (1 + i % 20) as f64;
        worst = worst.min(curvature::ache_chang_gap(&space, &SpectralSpace::random_field(12, 200 + i, amp))?);
    }
    sheet.push(Check::at_least("min gap over 100 random fields", worst, -1e-9));
    sheet.push(Check::below("|gap| at w = 0", curvature::ache_chang_gap(&space, &SpectralField::zeros(12))?.abs(), 1e-10));
    let big = SpectralSpace::new(32, 2)?;
    for eps in BUBBLE_EPS {
        let mut g: f64 = 0.0;
        for p in random_points(5, 5) {
            g = g.max(curvature::ache_chang_gap(&big, &mobius::bubble(&big, &p, eps)?)?.abs());
        }
        sheet.push(Check::below(format!("|gap| at bubbles, eps={eps}"), g, 1e-6));
    }
    Ok(())
}

fn b_vector(sheet: &mut Sheet) -> Result<()> {
    const K: usize = 48;
    const DELTA: f64 = 0.3;
    let space = SpectralSpace::new(K, 2)?;
    let engine = FlowEngine::new(space.clone(), &axial_f(DELTA))?;
    let centres = [unit([0.3, -0.2, 0.4, 0.5]), unit([0.6, 0.1, -0.2, -0.3])];
    for (n, p) in centres.iter().enumerate() {
        let mut errs = Vec::new();
        for eps in [0.2, 0.1] {
            let w = mobius::bubble(&space, p, eps)?;
            let state = engine.state(0.0, &w)?;
            let centre = engine.locate_center(&state, 1e-12, None)?;
            let b = engine.compute_b(&state, &centre);
            let bp: f64 = (0..4).map(|i| b[i] * p[i]).sum();
            // Tangential gradient of 2 + δ x4 at p.
            let grad: Point = std::array::from_fn(|i| DELTA * (f64::from(u8::from(i == 3)) - p[3] * p[i]));
            let scale = 4.0 * PI * PI / 3.0 * state.alpha * eps;
            let diff = (0..4).map(|i| (b[i] - bp * p[i] - scale * grad[i]).powi(2)).sum::<f64>().sqrt();
            let norm = scale * grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            let rel = diff / norm;
            errs.push(rel);
            sheet.push(Check::at_most(format!("centre {n}, eps={eps}: relative error of tangential b"), rel, 3.0 * eps));
        }
        sheet.note(format!("centre {n}: error/eps = {:.3} (eps=0.2), {:.3} (eps=0.1)", errs[0] / 0.2, errs[1] / 0.1));
    }
    Ok(())
}

/// Index list with `m_i` points of index `3 - i`, all with `Δf < 0`.
pub fn synthetic_data(m: &Counts) -> Vec<MorseDatum> {
    let mut out = Vec::new();
    for (i, &n) in m.iter().enumerate() {
        for j in 0..n {
            out.push(MorseDatum {
                morse_index: (3 - i) as u8,
                laplacian_negative: true,
                value: 1.0 + (out.len() as f64) + 0.01 * j as f64,
                location: None,
            });
        }
    }
    out
}

fn morse_gate(sheet: &mut Sheet) -> Result<()> {
    let (mut agree, mut identity, mut corollary, mut cases) = (true, true, true, 0usize);
    for code in 0..1296 {
        let m: Counts = std::array::from_fn(|i| (code / 6i64.pow(i as u32)) % 6);
        cases += 1;
        let bound = m.iter().copied().max().unwrap_or(0) + 1;
        let mut brute = Vec::new();
        for c in 0..(bound + 1).pow(4) {
            let k: Counts = std::array::from_fn(|i| (c / (bound + 1).pow(i as u32)) % (bound + 1));
            if morse::morse_polynomial_check(&m, &k) {
                brute.push(k);
            }
        }
        let solved = morse::solve_system(&m);
        agree &= match solved {
            Some(k) => brute == vec![k],
            None => brute.is_empty(),
        };
        if let Some(k) = solved {
            identity &= morse::morse_polynomial_check(&m, &k);
        }
        let at_minus_one = m[0] - m[1] + m[2] - m[3];
        let rep = morse::report(&synthetic_data(&m));
        corollary &= rep.m == m
            && rep.corollary_existence == (at_minus_one != 1)
            && (!rep.feasible || at_minus_one == 1)
            && rep.theorem_existence == !rep.feasible;
    }
    sheet.push(Check::at_least("cases enumerated", cases as f64, 1296.0));
    sheet.push(Check::holds("solver agrees with brute force", agree));
    sheet.push(Check::holds("polynomial identity holds for every witness", identity));
    sheet.push(Check::holds("value at t = -1 reproduces the degree criterion", corollary));
    Ok(())
}

/// Start of the concentration run.
pub fn concentration_start() -> Point {
    unit([0.4, -0.3, 0.2, 0.6])
}

fn concentration(sheet: &mut Sheet) -> Result<()> {
    const K: usize = 32;
    let f = axial_f(0.3);
    let space = SpectralSpace::new(K, 2)?;
    let engine = FlowEngine::new(space.clone(), &f)?;
    let w0 = mobius::bubble(&space, &concentration_start(), 0.5)?;
    let cfg = FlowConfig {
        band_limit: K,
        dt: 1e-2,
        t_max: 1e4,
        tol_converged: 1e-12,
        eps_min: 0.28,
        sigma_mode: SigmaMode::MaxGrid,
        max_steps: 100_000,
        ..FlowConfig::default()
    };
    let run = engine.run(&w0, &cfg)?;
    sheet.note(format!("{} records, {} rejected steps, outcome {:?}", run.records.len(), run.rejected_steps, run.outcome));
    if let Outcome::Converged { .. } = run.outcome {
        sheet.push(Check::holds("flow converged", true));
        return Ok(());
    }
    let track: Vec<(Point, f64)> = run.records.iter().filter_map(|r| Some((r.p?, r.eps?))).collect();
    let (end_p, end_eps) = *track.last().ok_or_else(|| Error::Hypothesis("no centring data recorded".into()))?;
    let north = [0.0, 0.0, 0.0, 1.0];
    sheet.note(format!(
        "track: start eps {:.4} at distance {:.4}, end eps {:.4} at distance {:.4}",
        track[0].1,
        shadow::geodesic_distance(&track[0].0, &north),
        end_eps,
        shadow::geodesic_distance(&end_p, &north)
    ));
    sheet.push(Check::below("endpoint distance to the north pole", shadow::geodesic_distance(&end_p, &north), 0.1));
    let tail = &track[track.len() / 2..];
    let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    sheet.push(Check::holds("eps decreasing over the second half of the track", decreasing));
    sheet.push(Check::below("final eps vs initial eps", end_eps, track[0].1));

    let model = ShadowModel::new(&f)?;
    let shadow = shadow::shadow_for_window(&model, &run.records, 0.3, 1e-3)?;
    let report = shadow.map(|s| shadow::compare_with_full_flow(&run.records, &s, 0.3));
    match report {
        Some(r) if !r.empty => {
            sheet.note(format!("shadow window {:?}, {} samples, eps deviation {:.3e}", r.window, r.samples, r.max_eps_rel_deviation));
            sheet.push(Check::at_most("shadow p-track deviation", r.max_p_deviation, 0.15));
        }
        _ => sheet.push(Check::holds("shadow comparison window is non-empty", false)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_item_passes_and_fault_fails() {
        let ok = run_item("spectrum", &VerifyOptions::default());
        assert!(ok.passed, "{}", ok.table());
        let bad = run_item("spectrum", &VerifyOptions { fault_multiplier: Some(1e-6), ..Default::default() });
        assert!(!bad.passed);
    }

    #[test]
    fn unknown_item_is_rejected() {
        let opts = VerifyOptions { only: Some(vec!["nope".into()]), ..Default::default() };
        assert!(verify_suite(&opts).is_err());
    }

    #[test]
    fn fit_of_exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let (s, r2) = linear_fit(&pts);
        assert!((s + 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
