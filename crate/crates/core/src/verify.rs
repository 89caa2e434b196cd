//! Self-checks behind the `verify` subcommand.
//!
//! Each check samples states with a fixed seed, measures the worst violation
//! of one identity and compares it with a pinned threshold.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::ErrorTransfer;
use crate::control::{
    auxiliary_input, inverse_dynamics_control, ControllerState, Desired, GainSet, TrajectorySpec,
};
use crate::dynamics::ManipulatorModel;
use crate::integrate::rk4_step;
use crate::sim::{controller_for, simulate, DisturbanceSpec, SimConfig};
use crate::{Error, JointVector};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const SKEW_TOL: f64 = 1e-8;
pub const REGRESSOR_TOL: f64 = 1e-10;
pub const ROUND_TRIP_TOL: f64 = 1e-9;
pub const CANCELLATION_TOL: f64 = 1e-10;
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
pub const FINAL_VALUE_TOL: f64 = 1e-6;
pub const ORDER_RATIO_RANGE: (f64, f64) = (8.0, 32.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub observed: f64,
    /// Human-readable acceptance condition, e.g. `< 1e-10`.
    pub expected: String,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<28} observed {:.3e}, expected {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.expected
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

fn below(name: &'static str, observed: f64, tol: f64, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: observed < tol,
        observed,
        expected: format!("< {tol:e}"),
        detail,
    }
}

fn failed(name: &'static str, err: Error) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        observed: f64::NAN,
        expected: "no error".into(),
        detail: err.to_string(),
    }
}

/// Closed-loop fixture for the dt-halving order check.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFixture {
    pub gains: GainSet,
    pub disturbance: DisturbanceSpec,
    pub dt: f64,
    pub duration: f64,
}

impl Default for OrderFixture {
    fn default() -> Self {
        Self {
            gains: GainSet::uniform(2, 2.4, 4.2, 1.0).expect("valid gains"),
            disturbance: DisturbanceSpec::constant(&[1.0, 0.5]),
            dt: 0.02,
            duration: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub model: ManipulatorModel,
    pub samples: usize,
    pub seed: u64,
    pub order: OrderFixture,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            model: ManipulatorModel::stock_two_link(),
            samples: 1000,
            seed: 7,
            order: OrderFixture::default(),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> JointVector {
    JointVector::from_fn(n, |_, _| rng.gen_range(-half_width..half_width))
}

pub fn mass_matrix_positive_definite(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "mass_matrix_positive_definite";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.model.dof();
    let mut asym: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..cfg.samples {
        let q = uniform(&mut rng, n, std::f64::consts::PI);
        let m = match cfg.model.mass_matrix(&q) {
            Ok(m) => m,
            Err(e) => return failed(NAME, e),
        };
        asym = asym.max((&m - m.transpose()).amax());
        let eig = m.symmetric_eigenvalues();
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    let (a1, a2) = cfg.model.inertia_bounds();
    let within = lo >= a1 - 1e-9 && hi <= a2 + 1e-9;
    CheckOutcome {
        name: NAME,
        passed: asym < SYMMETRY_TOL && lo > 0.0 && within,
        observed: lo,
        expected: format!("λ_min > 0, asymmetry < {SYMMETRY_TOL:e}"),
        detail: format!(
            "λ ∈ [{lo:.6}, {hi:.6}], certified [{a1:.6}, {a2:.6}], asymmetry {asym:.1e}"
        ),
    }
}

/// `‖(Ṁ − 2C) + (Ṁ − 2C)ᵀ‖_∞` with `Ṁ` by central differences along `q̇`.
pub fn skew_symmetry(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "skew_symmetry";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 1);
    let n = cfg.model.dof();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let q = uniform(&mut rng, n, std::f64::consts::PI);
        let qdot = uniform(&mut rng, n, 2.0);
        let run = || -> crate::Result<f64> {
            let mdot = (cfg.model.mass_matrix(&(&q + &qdot * h))?
                - cfg.model.mass_matrix(&(&q - &qdot * h))?)
                / (2.0 * h);
            let c = cfg.model.coriolis_matrix(&q, &qdot)?;
            let s: DMatrix<f64> = mdot - c * 2.0;
            Ok((&s + s.transpose()).amax())
        };
        match run() {
            Ok(v) => worst = worst.max(v),
            Err(e) => return failed(NAME, e),
        }
    }
    below(NAME, worst, SKEW_TOL, format!("{} samples", cfg.samples))
}

pub fn regressor_identity(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "regressor_identity";
    let theta = match cfg.model.base_parameters() {
        Ok(p) => p.theta,
        Err(Error::Unsupported(msg)) => {
            return CheckOutcome {
                name: NAME,
                passed: true,
                observed: 0.0,
                expected: "n/a".into(),
                detail: format!("skipped: {msg}"),
            }
        }
        Err(e) => return failed(NAME, e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 2);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let q = uniform(&mut rng, 2, std::f64::consts::PI);
        let w = uniform(&mut rng, 2, 2.0);
        let a = uniform(&mut rng, 2, 5.0);
        let run = || -> crate::Result<f64> {
            let y = cfg.model.regressor(&q, &w, &a)?;
            Ok((y * &theta - cfg.model.inverse_dynamics(&q, &w, &a)?).amax())
        };
        match run() {
            Ok(v) => worst = worst.max(v),
            Err(e) => return failed(NAME, e),
        }
    }
    below(NAME, worst, REGRESSOR_TOL, format!("p = {}", theta.len()))
}

pub fn forward_inverse_round_trip(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "forward_inverse_round_trip";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 3);
    let n = cfg.model.dof();
    let zero = JointVector::zeros(n);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let q = uniform(&mut rng, n, std::f64::consts::PI);
        let w = uniform(&mut rng, n, 2.0);
        let a = uniform(&mut rng, n, 5.0);
        let run = || -> crate::Result<f64> {
            let tau = cfg.model.inverse_dynamics(&q, &w, &a)?;
            Ok((cfg.model.forward_dynamics(&q, &w, &tau, &zero)? - &a).amax())
        };
        match run() {
            Ok(v) => worst = worst.max(v),
            Err(e) => return failed(NAME, e),
        }
    }
    below(NAME, worst, ROUND_TRIP_TOL, String::new())
}

/// `‖FD(q, q̇, u, d) − v − M⁻¹d‖_∞` for the integral controller.
pub fn cancellation(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "feedback_cancellation";
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 4);
    let n = cfg.model.dof();
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let pos = |rng: &mut ChaCha8Rng| JointVector::from_fn(n, |_, _| rng.gen_range(0.1..25.0));
        let gains = match GainSet::new(pos(&mut rng), pos(&mut rng), pos(&mut rng)) {
            Ok(g) => g,
            Err(e) => return failed(NAME, e),
        };
        let q = uniform(&mut rng, n, std::f64::consts::PI);
        let w = uniform(&mut rng, n, 2.0);
        let desired = Desired {
            q: uniform(&mut rng, n, std::f64::consts::PI),
            qdot: uniform(&mut rng, n, 2.0),
            qddot: uniform(&mut rng, n, 5.0),
        };
        let cs = ControllerState {
            integral_error: uniform(&mut rng, n, 1.0),
        };
        let d = uniform(&mut rng, n, 2.0);
        let run = || -> crate::Result<f64> {
            let u = inverse_dynamics_control(&cfg.model, &gains, &q, &w, &desired, &cs)?;
            let v = auxiliary_input(&gains, &q, &w, &desired, &cs)?;
            let acc = cfg.model.forward_dynamics(&q, &w, &u, &d)?;
            let delta = cfg.model.solve_mass_matrix(&q, &d)?;
            Ok((acc - v - delta).amax())
        };
        match run() {
            Ok(v) => worst = worst.max(v),
            Err(e) => return failed(NAME, e),
        }
    }
    below(NAME, worst, CANCELLATION_TOL, String::new())
}

/// Relative kinetic energy drift of a torque-free, gravity-free 10 s run.
pub fn passive_energy_drift(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "passive_energy_drift";
    let model = cfg.model.with_gravity(0.0);
    let n = model.dof();
    let zero = JointVector::zeros(n);
    let dt = 1e-3;
    let mut x = nalgebra::DVector::zeros(2 * n);
    for i in 0..n {
        x[i] = 0.3 * (i as f64 + 1.0);
        x[n + i] = if i % 2 == 0 { 1.0 } else { -0.5 };
    }
    let energy = |x: &nalgebra::DVector<f64>| {
        model.kinetic_energy(&x.rows(0, n).into_owned(), &x.rows(n, n).into_owned())
    };
    let run = || -> crate::Result<f64> {
        let e0 = energy(&x)?;
        let mut x = x.clone();
        let mut worst: f64 = 0.0;
        for k in 0..10_000 {
            x = rk4_step(k as f64 * dt, &x, dt, |_, s| {
                let q = s.rows(0, n).into_owned();
                let w = s.rows(n, n).into_owned();
                let a = model.forward_dynamics(&q, &w, &zero, &zero)?;
                let mut ds = nalgebra::DVector::zeros(2 * n);
                ds.rows_mut(0, n).copy_from(&w);
                ds.rows_mut(n, n).copy_from(&a);
                Ok::<_, Error>(ds)
            })?;
            worst = worst.max(((energy(&x)? - e0) / e0).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(v) => below(NAME, v, ENERGY_DRIFT_TOL, "10 s, dt = 1e-3".into()),
        Err(e) => failed(NAME, e),
    }
}

/// Ratio `‖x(h) − x(h/2)‖ / ‖x(h/2) − x(h/4)‖` of final configurations.
pub fn integrator_order_ratio(
    model: &ManipulatorModel,
    fixture: &OrderFixture,
) -> crate::Result<f64> {
    let run = |dt: f64| -> crate::Result<JointVector> {
        let config = SimConfig {
            dt,
            duration: fixture.duration,
            stride: 1,
            ..SimConfig::default()
        };
        let r = simulate(
            model,
            &controller_for(fixture.gains.clone()),
            &TrajectorySpec::half_sin_cos(),
            &fixture.disturbance,
            &config,
        )?;
        Ok(r.final_q().clone())
    };
    let coarse = run(fixture.dt)?;
    let mid = run(fixture.dt / 2.0)?;
    let fine = run(fixture.dt / 4.0)?;
    Ok((&coarse - &mid).amax() / (&mid - &fine).amax())
}

pub fn integrator_order(cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "integrator_order";
    let (lo, hi) = ORDER_RATIO_RANGE;
    match integrator_order_ratio(&cfg.model, &cfg.order) {
        Ok(ratio) => CheckOutcome {
            name: NAME,
            passed: (lo..=hi).contains(&ratio),
            observed: ratio,
            expected: format!("in [{lo}, {hi}]"),
            detail: format!(
                "dt = {}, {}, {}",
                cfg.order.dt,
                cfg.order.dt / 2.0,
                cfg.order.dt / 4.0
            ),
        },
        Err(e) => failed(NAME, e),
    }
}

/// Linear response tail versus the final value theorem.
pub fn final_value_limit(_cfg: &VerifyConfig) -> CheckOutcome {
    const NAME: &str = "final_value_limit";
    let triples = [
        (4.2, 2.4, 1.0),
        (21.0, 12.0, 5.0),
        (4.2, 2.4, 0.0),
        (2.4, 4.2, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for (kd, kp, ki) in triples {
        let run = || -> crate::Result<f64> {
            let tf = ErrorTransfer::new(kd, kp, ki)?;
            let r = tf.linear_error_response(1.0, 150.0, 0.01)?;
            Ok((r.deviation.last().unwrap() - tf.final_value(1.0)?).abs())
        };
        match run() {
            Ok(v) => worst = worst.max(v),
            Err(e) => return failed(NAME, e),
        }
    }
    below(
        NAME,
        worst,
        FINAL_VALUE_TOL,
        format!("{} gain triples", triples.len()),
    )
}

type Check = fn(&VerifyConfig) -> CheckOutcome;

const CHECKS: [Check; 8] = [
    mass_matrix_positive_definite,
    skew_symmetry,
    regressor_identity,
    forward_inverse_round_trip,
    cancellation,
    passive_energy_drift,
    integrator_order,
    final_value_limit,
];

/// Runs every check, one thread per check, and returns outcomes in a fixed order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = CHECKS
            .iter()
            .map(|check| scope.spawn(move || check(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check thread panicked"))
            .collect()
    })
}
