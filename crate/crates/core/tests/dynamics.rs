use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, Matrix4};
use proptest::prelude::*;

use manipctl::dynamics::{ForwardKinematics, GrasperChain, LinkParams, ManipulatorModel};
use manipctl::integrate::rk4_step;
use manipctl::JointVector;

fn jv(v: &[f64]) -> JointVector {
    JointVector::from_column_slice(v)
}

fn three_link() -> ManipulatorModel {
    ManipulatorModel::new(
        vec![
            LinkParams::new(1.3, 0.8, 0.35, 0.07).unwrap(),
            LinkParams::new(0.9, 0.6, 0.4, 0.03).unwrap(),
            LinkParams::new(0.4, 0.3, 0.1, 0.01).unwrap(),
        ],
        9.81,
    )
    .unwrap()
}

// ---- independent oracles -------------------------------------------------

/// Center-of-mass positions by walking the chain.
fn com_positions(model: &ManipulatorModel, q: &[f64]) -> Vec<[f64; 2]> {
    let mut base = [0.0, 0.0];
    let mut angle = 0.0;
    let mut out = Vec::new();
    for (link, qi) in model.links().iter().zip(q) {
        angle += qi;
        let (s, c) = f64::sin_cos(angle);
        out.push([
            base[0] + link.com_distance * c,
            base[1] + link.com_distance * s,
        ]);
        base = [base[0] + link.length * c, base[1] + link.length * s];
    }
    out
}

/// Kinetic energy with COM velocities from central differences of positions.
fn kinetic_energy_oracle(model: &ManipulatorModel, q: &[f64], qdot: &[f64]) -> f64 {
    let h = 1e-6;
    let plus: Vec<f64> = q.iter().zip(qdot).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = q.iter().zip(qdot).map(|(a, b)| a - h * b).collect();
    let (pp, pm) = (com_positions(model, &plus), com_positions(model, &minus));
    let mut omega = 0.0;
    let mut t = 0.0;
    for (i, link) in model.links().iter().enumerate() {
        omega += qdot[i];
        let vx = (pp[i][0] - pm[i][0]) / (2.0 * h);
        let vy = (pp[i][1] - pm[i][1]) / (2.0 * h);
        t += 0.5 * link.mass * (vx * vx + vy * vy) + 0.5 * link.inertia_zz * omega * omega;
    }
    t
}

/// `M` from the kinetic energy by polarization.
fn mass_matrix_oracle(model: &ManipulatorModel, q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let unit = |k: usize| {
        (0..n)
            .map(|i| if i == k { 1.0 } else { 0.0 })
            .collect::<Vec<_>>()
    };
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = 2.0 * kinetic_energy_oracle(model, q, &unit(k));
    }
    for k in 0..n {
        for l in k + 1..n {
            let both: Vec<f64> = unit(k).iter().zip(unit(l)).map(|(a, b)| a + b).collect();
            let v = kinetic_energy_oracle(model, q, &both) - 0.5 * m[(k, k)] - 0.5 * m[(l, l)];
            m[(k, l)] = v;
            m[(l, k)] = v;
        }
    }
    m
}

fn potential_energy_oracle(model: &ManipulatorModel, q: &[f64]) -> f64 {
    com_positions(model, q)
        .iter()
        .zip(model.links())
        .map(|(p, link)| link.mass * model.gravity() * p[1])
        .sum()
}

/// Standard DH homogeneous transform.
fn dh(a: f64, alpha: f64, d: f64, theta: f64) -> Matrix4<f64> {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    #[rustfmt::skip]
    let m = Matrix4::new(
        ct, -st * ca,  st * sa, a * ct,
        st,  ct * ca, -ct * sa, a * st,
        0.0,      sa,       ca,      d,
        0.0,     0.0,      0.0,    1.0,
    );
    m
}

// ---- mass matrix ----------------------------------------------------------

#[test]
fn mass_matrix_matches_kinetic_energy_oracle_at_zero() {
    let model = ManipulatorModel::stock_two_link();
    let m = model.mass_matrix(&jv(&[0.0, 0.0])).unwrap();
    let oracle = mass_matrix_oracle(&model, &[0.0, 0.0]);
    assert_relative_eq!(m, oracle, epsilon = 1e-8);
    // Frozen from the oracle: [[8/3, 5/6], [5/6, 1/3]]
    assert_relative_eq!(m[(0, 0)], 8.0 / 3.0, epsilon = 1e-12);
    assert_relative_eq!(m[(0, 1)], 5.0 / 6.0, epsilon = 1e-12);
    assert_relative_eq!(m[(1, 1)], 1.0 / 3.0, epsilon = 1e-12);
}

#[test]
fn three_link_mass_matrix_matches_oracle() {
    let model = three_link();
    for q in [[0.0, 0.0, 0.0], [0.4, -1.3, 2.2], [3.0, 0.1, -0.7]] {
        let m = model.mass_matrix(&jv(&q)).unwrap();
        assert_relative_eq!(m, mass_matrix_oracle(&model, &q), epsilon = 1e-8);
    }
}

// ---- Coriolis -------------------------------------------------------------

#[test]
fn coriolis_matches_christoffel_expansion() {
    // Two-link expansion: h = m₂ l₁ c₂ sin q₂,
    // C = [[-h q̇₂, -h (q̇₁ + q̇₂)], [h q̇₁, 0]].
    let model = ManipulatorModel::stock_two_link();
    let q = jv(&[0.3, PI / 2.0]);
    let w = jv(&[1.0, 0.0]);
    let force = model.coriolis_matrix(&q, &w).unwrap() * &w;
    assert_relative_eq!(force, jv(&[0.0, 0.5]), epsilon = 1e-14);

    let expansion = |q2: f64, w1: f64, w2: f64| {
        let h = 1.0 * 1.0 * 0.5 * q2.sin();
        DMatrix::from_row_slice(2, 2, &[-h * w2, -h * (w1 + w2), h * w1, 0.0])
    };
    for &(q2, w1, w2) in &[(0.7, 0.3, -1.1), (-2.0, 1.5, 0.4), (3.1, -0.2, 2.0)] {
        let c = model
            .coriolis_matrix(&jv(&[1.0, q2]), &jv(&[w1, w2]))
            .unwrap();
        assert_relative_eq!(c, expansion(q2, w1, w2), epsilon = 1e-14);
    }
}

#[test]
fn three_link_coriolis_from_finite_difference_christoffel() {
    let model = three_link();
    let q = [0.2, -0.9, 1.4];
    let w = [0.5, -1.0, 0.8];
    // Outer step balances truncation against the oracle's own rounding noise.
    let h = 1e-3;
    let partial = |m: usize| {
        let mut plus = q;
        let mut minus = q;
        plus[m] += h;
        minus[m] -= h;
        (mass_matrix_oracle(&model, &plus) - mass_matrix_oracle(&model, &minus)) / (2.0 * h)
    };
    let dm: Vec<_> = (0..3).map(partial).collect();
    let oracle = DMatrix::from_fn(3, 3, |k, j| {
        (0..3)
            .map(|m| 0.5 * (dm[m][(k, j)] + dm[j][(k, m)] - dm[k][(j, m)]) * w[m])
            .sum::<f64>()
    });
    let c = model.coriolis_matrix(&jv(&q), &jv(&w)).unwrap();
    assert_relative_eq!(c, oracle, epsilon = 1e-5);
}

// ---- gravity --------------------------------------------------------------

#[test]
fn gravity_is_potential_gradient() {
    for model in [ManipulatorModel::stock_two_link(), three_link()] {
        let n = model.dof();
        for seed in 0..20 {
            let q: Vec<f64> = (0..n)
                .map(|i| ((seed * 7 + i * 3) as f64).sin() * 3.0)
                .collect();
            let g = model.gravity_vector(&jv(&q)).unwrap();
            let h = 1e-6;
            for k in 0..n {
                let mut plus = q.clone();
                let mut minus = q.clone();
                plus[k] += h;
                minus[k] -= h;
                let fd = (potential_energy_oracle(&model, &plus)
                    - potential_energy_oracle(&model, &minus))
                    / (2.0 * h);
                assert!((g[k] - fd).abs() < 1e-7, "joint {k}: {} vs {fd}", g[k]);
            }
        }
    }
}

// ---- forward kinematics ---------------------------------------------------

#[test]
fn grasper_kinematics_matches_transform_chain() {
    let chain = GrasperChain::new(0.35, 0.025).unwrap();
    for q in [
        [0.0, 0.0, 0.0],
        [0.4, -0.7, 0.01],
        [-2.5, 1.2, 0.025],
        [PI, PI / 3.0, 0.002],
    ] {
        let t = dh(0.0, -PI / 2.0, 0.35 + 0.025, q[0])
            * dh(0.0, PI / 2.0, 0.0, q[1])
            * dh(0.0, 0.0, q[2], 0.0);
        let x = chain.forward_kinematics(&jv(&q)).unwrap();
        for i in 0..3 {
            assert!((x[i] - t[(i, 3)]).abs() < 1e-12, "{q:?}");
        }
    }
}

#[test]
fn planar_kinematics_matches_transform_chain() {
    let model = three_link();
    let q = [0.3, -1.1, 2.0];
    let t = model
        .links()
        .iter()
        .zip(q)
        .fold(Matrix4::<f64>::identity(), |acc, (l, qi)| {
            acc * dh(l.length, 0.0, 0.0, qi)
        });
    let x = model.forward_kinematics(&jv(&q)).unwrap();
    for i in 0..3 {
        assert!((x[i] - t[(i, 3)]).abs() < 1e-12);
    }
}

// ---- invariants -----------------------------------------------------------

fn angles(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, n)
}

fn rates(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mass_matrix_symmetric_and_bounded(q in angles(2)) {
        let model = ManipulatorModel::stock_two_link();
        let m = model.mass_matrix(&jv(&q)).unwrap();
        prop_assert!((&m - m.transpose()).amax() < 1e-12);
        let eig = m.symmetric_eigenvalues();
        let (a1, a2) = model.inertia_bounds();
        prop_assert!(a1 > 0.0);
        // The certified bounds come from a finite sample; allow their sampling gap.
        prop_assert!(eig.min() >= a1 - 1e-4 && eig.max() <= a2 + 1e-4);
    }

    #[test]
    fn mdot_minus_two_c_is_skew(q in angles(3), w in rates(3, 2.0)) {
        let model = three_link();
        let (q, w) = (jv(&q), jv(&w));
        let h = 1e-6;
        let mdot = (model.mass_matrix(&(&q + &w * h)).unwrap() - model.mass_matrix(&(&q - &w * h)).unwrap()) / (2.0 * h);
        let s = mdot - model.coriolis_matrix(&q, &w).unwrap() * 2.0;
        prop_assert!((&s + s.transpose()).amax() < 1e-8);
    }

    #[test]
    fn regressor_reproduces_inverse_dynamics(q in angles(2), w in rates(2, 3.0), a in rates(2, 5.0)) {
        let model = ManipulatorModel::stock_two_link();
        let (q, w, a) = (jv(&q), jv(&w), jv(&a));
        let y = model.regressor(&q, &w, &a).unwrap();
        let theta = model.base_parameters().unwrap().theta;
        let tau = model.inverse_dynamics(&q, &w, &a).unwrap();
        prop_assert!((y * theta - tau).amax() < 1e-10);
    }

    #[test]
    fn forward_and_inverse_dynamics_are_inverse(q in angles(3), w in rates(3, 2.0), a in rates(3, 5.0)) {
        let model = three_link();
        let (q, w, a) = (jv(&q), jv(&w), jv(&a));
        let tau = model.inverse_dynamics(&q, &w, &a).unwrap();
        let back = model.forward_dynamics(&q, &w, &tau, &JointVector::zeros(3)).unwrap();
        prop_assert!((back - a).amax() < 1e-9);
    }
}

#[test]
fn nonstock_regressor_identity() {
    let model = ManipulatorModel::two_link(
        LinkParams::new(2.5, 0.7, 0.2, 0.11).unwrap(),
        LinkParams::new(0.8, 1.3, 0.9, 0.05).unwrap(),
        3.7,
    )
    .unwrap();
    let theta = model.base_parameters().unwrap().theta;
    let (q, w, a) = (jv(&[0.3, 2.1]), jv(&[-1.2, 0.7]), jv(&[0.4, -2.2]));
    let y = model.regressor(&q, &w, &a).unwrap();
    assert!((y * theta - model.inverse_dynamics(&q, &w, &a).unwrap()).amax() < 1e-12);
}

#[test]
fn passive_motion_conserves_energy() {
    let model = ManipulatorModel::stock_two_link().with_gravity(0.0);
    let zero = JointVector::zeros(2);
    let dt = 1e-3;
    let mut x = DVector::from_column_slice(&[0.2, -0.4, 1.5, -2.0]);
    let energy = |x: &DVector<f64>| {
        model
            .kinetic_energy(&x.rows(0, 2).into_owned(), &x.rows(2, 2).into_owned())
            .unwrap()
    };
    let e0 = energy(&x);
    for k in 0..10_000 {
        x = rk4_step(k as f64 * dt, &x, dt, |_, s| {
            let a = model.forward_dynamics(
                &s.rows(0, 2).into_owned(),
                &s.rows(2, 2).into_owned(),
                &zero,
                &zero,
            )?;
            Ok::<_, manipctl::Error>(DVector::from_column_slice(&[s[2], s[3], a[0], a[1]]))
        })
        .unwrap();
    }
    let drift = ((energy(&x) - e0) / e0).abs();
    assert!(drift < 1e-6, "relative drift {drift:e}");
}
