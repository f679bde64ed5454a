use std::f64::consts::PI;

use s3flow::flow::{FlowConfig, FlowEngine, SigmaMode};
use s3flow::mobius::{self, Point};
use s3flow::morse;
use s3flow::shadow::{self, ShadowModel, ShadowState};
use s3flow::spectral::{GridField, SpectralField, SpectralSpace};

fn unit(v: Point) -> Point {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

fn axial(delta: f64) -> SpectralField {
    SpectralField::constant(1, 2.0).add(&SpectralField::coordinate(1, 3).scaled(delta))
}

/// A rotation mixing all four axes.
fn rotation() -> [[f64; 4]; 4] {
    let (a, b) = (0.7f64, -0.4f64);
    let r1 = [[a.cos(), -a.sin(), 0.0, 0.0], [a.sin(), a.cos(), 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let r2 = [[1.0, 0.0, 0.0, 0.0], [0.0, b.cos(), 0.0, -b.sin()], [0.0, 0.0, 1.0, 0.0], [0.0, b.sin(), 0.0, b.cos()]];
    let r3 = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.6, -0.8], [0.0, 0.0, 0.8, 0.6]];
    let mul = |x: [[f64; 4]; 4], y: [[f64; 4]; 4]| -> [[f64; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| x[i][k] * y[k][j]).sum()))
    };
    mul(r3, mul(r2, r1))
}

fn apply(r: &[[f64; 4]; 4], x: &Point) -> Point {
    std::array::from_fn(|i| (0..4).map(|j| r[i][j] * x[j]).sum())
}

fn apply_t(r: &[[f64; 4]; 4], x: &Point) -> Point {
    std::array::from_fn(|i| (0..4).map(|j| r[j][i] * x[j]).sum())
}

/// `f ∘ R⁻¹`, exact for band-limited `f`.
fn rotate_field(f: &SpectralField, r: &[[f64; 4]; 4]) -> SpectralField {
    let space = SpectralSpace::new(f.band_limit(), 2).unwrap();
    let g = GridField::from_fn(space.grid().clone(), |x| SpectralSpace::evaluate_at(f, &apply_t(r, x)).unwrap());
    space.analyze(&g).unwrap()
}

#[test]
fn bubbles_are_stationary_for_constant_f() {
    let space = SpectralSpace::new(32, 2).unwrap();
    let engine = FlowEngine::new(space.clone(), &SpectralField::constant(0, 2.0)).unwrap();
    let w = mobius::bubble(&space, &unit([0.2, -0.4, 0.1, 0.8]), 0.8).unwrap();
    let s0 = engine.state(0.0, &w).unwrap();
    let s1 = engine.step(&s0, 1e-3, SigmaMode::MinGrid).unwrap();
    let change = s1.w().max_abs_diff(s0.w());
    assert!(change < 1e-12, "{change:e}");
}

#[test]
fn alpha_follows_its_evolution_law() {
    // ∫ f (T - α f) e^{3w} = (4π²/3) α'/α²
    let space = SpectralSpace::new(10, 2).unwrap();
    let engine = FlowEngine::new(space, &axial(0.3)).unwrap();
    let s0 = engine.projected_state(0.0, &SpectralSpace::random_field(3, 8, 0.2).resized(10)).unwrap();
    let f = engine.prescribed().grid();
    let lhs = s0.sample.t.zip_map(f, |t, f| f * (t - s0.alpha * f)).zip_map(&s0.sample.density, |a, d| a * d).integrate();
    let errors: Vec<f64> = [1e-5, 5e-6, 2.5e-6]
        .iter()
        .map(|&dt| {
            let s1 = engine.step(&s0, dt, SigmaMode::MinGrid).unwrap();
            let rhs = 4.0 * PI * PI / 3.0 * (s1.alpha - s0.alpha) / dt / (s0.alpha * s0.alpha);
            (lhs - rhs).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.3).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn energy_never_rises_on_accepted_steps() {
    let space = SpectralSpace::new(8, 2).unwrap();
    let engine = FlowEngine::new(space, &axial(0.4)).unwrap();
    let cfg = FlowConfig { band_limit: 8, dt: 5e-3, max_steps: 200, t_max: 100.0, ..FlowConfig::default() };
    let run = engine.run(&SpectralSpace::random_field(8, 3, 0.4), &cfg).unwrap();
    assert!(run.records.windows(2).all(|w| w[1].energy_f <= w[0].energy_f + 1e-10));
}

#[test]
fn shadow_increases_f_along_the_track() {
    let f = axial(0.3);
    let model = ShadowModel::new(&f).unwrap();
    let init = ShadowState { p: unit([0.5, 0.3, -0.2, 0.1]), eps: 0.3, s: 0.0, t: 0.0 };
    let traj = shadow::integrate_shadow(&model, init, 5.0, 1e-3).unwrap();
    let values: Vec<f64> = traj.states.iter().map(|s| model.local_data(&s.p).0).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn shadow_is_rotation_equivariant() {
    let f = SpectralField::constant(2, 2.0)
        .add(&SpectralField::coordinate(2, 3).scaled(0.3))
        .add(&SpectralSpace::random_field(2, 17, 0.2));
    let r = rotation();
    let init = ShadowState { p: unit([0.3, 0.5, -0.1, 0.4]), eps: 0.25, s: 0.0, t: 0.0 };
    let a = shadow::integrate_shadow(&ShadowModel::new(&f).unwrap(), init, 2.0, 1e-3).unwrap();
    let rotated = ShadowState { p: apply(&r, &init.p), ..init };
    let b = shadow::integrate_shadow(&ShadowModel::new(&rotate_field(&f, &r)).unwrap(), rotated, 2.0, 1e-3).unwrap();
    assert_eq!(a.states.len(), b.states.len());
    for (x, y) in a.states.iter().zip(&b.states) {
        let rp = apply(&r, &x.p);
        assert!((0..4).all(|i| (rp[i] - y.p[i]).abs() < 1e-10));
        assert!((x.eps - y.eps).abs() < 1e-10);
    }
}

#[test]
fn shadow_concentrates_where_laplacian_is_negative() {
    // Δ x4 = -3 x4, so in the northern half ε shrinks while p climbs.
    let model = ShadowModel::new(&axial(0.3)).unwrap();
    let init = ShadowState { p: unit([0.6, -0.3, 0.2, 0.2]), eps: 0.9, s: 0.0, t: 0.0 };
    let traj = shadow::integrate_shadow(&model, init, 50.0, 1e-3).unwrap();
    for w in traj.states.windows(2) {
        assert!(w[1].eps < w[0].eps);
        assert!(w[1].p[3] >= w[0].p[3]);
        assert!(w[1].s > w[0].s);
    }
    let end = traj.states.last().unwrap();
    assert!(end.eps < 0.05 && end.p[3] > init.p[3]);
}

/// `f = 2 + 0.1 Σ c_i x_i²` with distinct `c_i`.
fn quadratic_f(r: Option<&[[f64; 4]; 4]>) -> SpectralField {
    let c = [-3.0, -1.0, 1.0, 3.0];
    let space = SpectralSpace::new(2, 2).unwrap();
    let g = GridField::from_fn(space.grid().clone(), |x| {
        let y = r.map_or(*x, |r| apply_t(r, x));
        2.0 + 0.1 * (0..4).map(|i| c[i] * y[i] * y[i]).sum::<f64>()
    });
    space.analyze(&g).unwrap()
}

#[test]
fn morse_extraction_of_quadratic_form() {
    let data = morse::extract_morse_data(&quadratic_f(None)).unwrap();
    assert_eq!(data.len(), 8);
    let mut by_index = [0; 4];
    for d in &data {
        by_index[d.morse_index as usize] += 1;
    }
    assert_eq!(by_index, [2, 2, 2, 2]);
    // ±e4 are maxima (index 3) with Δf < 0; ±e1 are minima with Δf > 0.
    assert!(data.iter().filter(|d| d.morse_index == 3).all(|d| d.laplacian_negative));
    assert!(data.iter().filter(|d| d.morse_index == 0).all(|d| !d.laplacian_negative));
}

#[test]
fn morse_extraction_is_rotation_equivariant() {
    let r = rotation();
    let plain = morse::extract_morse_data(&quadratic_f(None)).unwrap();
    let turned = morse::extract_morse_data(&quadratic_f(Some(&r))).unwrap();
    assert_eq!(plain.len(), turned.len());
    for d in &plain {
        let target = apply(&r, &d.location.unwrap());
        let m = turned
            .iter()
            .find(|e| {
                let l = e.location.unwrap();
                (0..4).map(|i| (l[i] - target[i]).powi(2)).sum::<f64>() < 1e-14
            })
            .expect("rotated critical point");
        assert_eq!(m.morse_index, d.morse_index);
        assert_eq!(m.laplacian_negative, d.laplacian_negative);
        assert!((m.value - d.value).abs() < 1e-12);
    }
}
