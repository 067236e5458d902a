use approx::assert_relative_eq;
use thbfrac::initialization::optimal_profile;
use thbfrac::model::{degradation, degradation_derivative, Family, MaterialParams, ModelSpec, Order, AT1_C_RHO};
use thbfrac::Error;

const MODELS: [(Family, Order); 4] = [
    (Family::At2, Order::Second),
    (Family::At2, Order::Fourth),
    (Family::At1, Order::Second),
    (Family::At1, Order::Fourth),
];

fn steel() -> MaterialParams {
    MaterialParams {
        youngs_modulus: 210.0,
        poisson_ratio: 0.3,
        toughness: 2.7e-3,
        length_scale: 0.015,
        residual_stiffness: 1e-8,
    }
}

#[test]
fn degradation_end_values() {
    let eta = 1e-8;
    assert_eq!(degradation(0.0, eta), 1.0 + eta);
    assert_eq!(degradation(1.0, eta), eta);
    assert_eq!(degradation_derivative(1.0), 0.0);
    assert_eq!(degradation_derivative(0.0), -2.0);
}

#[test]
fn coefficient_table() {
    let l0 = 0.02;
    let at2 = ModelSpec::new(Family::At2, Order::Second, l0);
    assert_eq!((at2.beta, at2.c_d, at2.c_g, at2.c_l), (2, 25.0, 0.01, 0.0));
    let at2iv = ModelSpec::new(Family::At2, Order::Fourth, l0);
    assert_eq!(at2iv.beta, 2);
    assert_relative_eq!(at2iv.c_g, 0.005);
    assert_relative_eq!(at2iv.c_l, l0 * l0 * l0 / 32.0);
    let at1 = ModelSpec::new(Family::At1, Order::Second, l0);
    assert_eq!(at1.beta, 1);
    assert_relative_eq!(at1.c_d, 18.75);
    assert_relative_eq!(at1.c_g, 0.0075);
    let at1iv = ModelSpec::new(Family::At1, Order::Fourth, l0);
    assert_relative_eq!(at1iv.c_d, 1.0 / (AT1_C_RHO * l0));
    assert_relative_eq!(at1iv.c_g, l0 / AT1_C_RHO);
    assert_relative_eq!(at1iv.c_l, l0.powi(3) / AT1_C_RHO);
}

#[test]
fn density_examples() {
    let l0 = 0.02;
    for (f, o) in MODELS {
        assert_eq!(ModelSpec::new(f, o, l0).dissipation_density(0.0, 0.0, 0.0), 0.0);
    }
    let at2 = ModelSpec::new(Family::At2, Order::Second, l0);
    assert_relative_eq!(at2.dissipation_density(1.0, 0.0, 0.0), 1.0 / (2.0 * l0));
    assert_relative_eq!(at2.dissipation_density(0.5, 4.0, 7.0), 0.25 * 25.0 + 0.04);
}

/// `∫ density` of the model's optimal profile over `[−8l0, 8l0]` by the midpoint rule.
///
/// Gradients are cell secants on a grid with a node at the kink `r = 0`; Laplacians use a
/// central difference spanning several table intervals.
fn profile_integral(spec: &ModelSpec, l0: f64) -> f64 {
    let n = 64_000;
    let a = 8.0 * l0;
    let h = 2.0 * a / n as f64;
    let fd = 2e-2 * l0;
    let d = |r: f64| optimal_profile(spec, l0, r);
    (0..n)
        .map(|k| {
            let (r0, r1) = (-a + k as f64 * h, -a + (k + 1) as f64 * h);
            let r = 0.5 * (r0 + r1);
            let g = (d(r1) - d(r0)) / h;
            let lap = (d(r + fd) - 2.0 * d(r) + d(r - fd)) / (fd * fd);
            spec.dissipation_density(d(r), g * g, lap) * h
        })
        .sum()
}

#[test]
fn optimal_profiles_dissipate_one_per_unit_length() {
    for l0 in [0.015, 0.1] {
        for (f, o) in MODELS {
            let spec = ModelSpec::new(f, o, l0);
            let e = profile_integral(&spec, l0);
            assert!((e - 1.0).abs() < 0.01, "{f:?}-{o:?} at l0={l0}: {e}");
        }
    }
}

#[test]
fn half_gradient_weight_breaks_fourth_order_at1_normalisation() {
    // With half the gradient weight the tabulated constant no longer normalises the profile.
    let l0 = 1.0;
    let mut spec = ModelSpec::new(Family::At1, Order::Fourth, l0);
    spec.c_g *= 0.5;
    let d = thbfrac::initialization::fd_profile(&spec, 8.0, 1601);
    let h = 8.0 / 1600.0;
    let mut e = 0.0;
    for i in 0..1600 {
        let w = if i == 0 { 0.5 * h } else { h };
        let lap = if i == 0 { 2.0 * (d[1] - d[0]) / (h * h) } else { (d[i - 1] - 2.0 * d[i] + d[i + 1]) / (h * h) };
        e += w * (spec.c_d * d[i] + spec.c_l * lap * lap) + h * spec.c_g * ((d[i + 1] - d[i]) / h).powi(2);
    }
    assert!((2.0 * e - 1.0).abs() > 0.05, "{}", 2.0 * e);
}

#[test]
fn plane_strain_moduli() {
    let m = steel();
    assert_relative_eq!(m.mu(), 210.0 / 2.6, max_relative = 1e-14);
    assert_relative_eq!(m.lambda(), 210.0 * 0.3 / (1.3 * 0.4), max_relative = 1e-14);
    assert_relative_eq!(m.bulk(), m.lambda() + m.mu());
}

#[test]
fn material_validation_reports_field_paths() {
    m_ok(steel());
    let mut m = steel();
    m.poisson_ratio = 0.5;
    assert!(matches!(m.validate(), Err(Error::Config { path, .. }) if path == "material.poisson_ratio"));
    let mut m = steel();
    m.toughness = -1.0;
    assert!(matches!(m.validate(), Err(Error::Config { path, .. }) if path == "material.toughness"));
    let mut m = steel();
    m.residual_stiffness = 0.0;
    assert!(matches!(m.validate(), Err(Error::Config { path, .. }) if path == "material.residual_stiffness"));
}

fn m_ok(m: MaterialParams) {
    m.validate().unwrap();
}

#[test]
fn serde_names() {
    assert_eq!(serde_json::from_str::<Family>("\"at1\"").unwrap(), Family::At1);
    assert_eq!(serde_json::from_str::<Order>("\"4\"").unwrap(), Order::Fourth);
    assert_eq!(serde_json::from_str::<Order>("\"II\"").unwrap(), Order::Second);
    assert!(serde_json::from_str::<Order>("\"3\"").is_err());
    let m: MaterialParams = serde_json::from_str(
        r#"{"youngs_modulus": 210, "poisson_ratio": 0.3, "toughness": 0.0027, "length_scale": 0.015}"#,
    )
    .unwrap();
    assert_eq!(m.residual_stiffness, 1e-8);
    assert!(serde_json::from_str::<MaterialParams>(
        r#"{"youngs_modulus": 210, "poisson_ratio": 0.3, "toughness": 0.0027, "length_scale": 0.015, "extra": 1}"#
    )
    .is_err());
}
