//! Linear closed-loop analysis of the per-joint error dynamics.
//!
//! Under exact cancellation and diagonal gains each joint's deviation
//! `q̃ = q − q_d` obeys
//!
//! ```text
//! q̃̈ + k_d q̃̇ + k_p q̃ + k_i ∫q̃ = δ,      δ = M(q)⁻¹ d
//! ```
//!
//! so `q̃(s) = G(s) δ(s)` with `G(s) = s / (s³ + k_d s² + k_p s + k_i)`. The
//! controller's tracking error `q_d − q` is the negation of `q̃`.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;

use crate::control::GainSet;
use crate::integrate::rk4_step;
use crate::{Error, Result};

/// Per-joint error transfer `G(s) = s / (s³ + k_d s² + k_p s + k_i)`.
///
/// With `k_i = 0` this is the PD loop `1 / (s² + k_d s + k_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTransfer {
    pub kd: f64,
    pub kp: f64,
    pub ki: f64,
}

/// One named Routh condition and its value; the condition holds when `value > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthCondition {
    pub label: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Smallest condition value; positive exactly when stable.
    pub margin: f64,
    pub conditions: Vec<RouthCondition>,
}

impl StabilityVerdict {
    fn from_conditions(conditions: Vec<RouthCondition>) -> Self {
        let margin = conditions
            .iter()
            .map(|c| c.value)
            .fold(f64::INFINITY, f64::min);
        Self {
            stable: margin > 0.0,
            margin,
            conditions,
        }
    }

    /// Worst-case combination of per-joint verdicts.
    pub fn combine(verdicts: impl IntoIterator<Item = StabilityVerdict>) -> Option<Self> {
        verdicts
            .into_iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
    }
}

/// Routh–Hurwitz test for `s³ + k_d s² + k_p s + k_i`:
/// stable iff `k_d > 0`, `k_i > 0` and `k_d k_p > k_i`.
pub fn routh_stability(kd: f64, kp: f64, ki: f64) -> StabilityVerdict {
    StabilityVerdict::from_conditions(vec![
        RouthCondition {
            label: "kd",
            value: kd,
        },
        RouthCondition {
            label: "ki",
            value: ki,
        },
        RouthCondition {
            label: "kd*kp - ki",
            value: kd * kp - ki,
        },
    ])
}

/// Hurwitz test for the PD loop `s² + k_d s + k_p`.
pub fn second_order_stability(kd: f64, kp: f64) -> StabilityVerdict {
    StabilityVerdict::from_conditions(vec![
        RouthCondition {
            label: "kd",
            value: kd,
        },
        RouthCondition {
            label: "kp",
            value: kp,
        },
    ])
}

/// First column of the Routh array for `a₀ sⁿ + a₁ sⁿ⁻¹ + … + aₙ`.
///
/// Returns `None` when a zero pivot makes the plain array undefined.
pub fn routh_first_column(coeffs: &[f64]) -> Option<Vec<f64>> {
    if coeffs.is_empty() {
        return Some(Vec::new());
    }
    let width = coeffs.len().div_ceil(2);
    let row = |start: usize| -> Vec<f64> {
        (0..width)
            .map(|j| coeffs.get(start + 2 * j).copied().unwrap_or(0.0))
            .collect()
    };
    let mut prev = row(0);
    let mut cur = row(1);
    let mut column = vec![prev[0]];
    for _ in 1..coeffs.len() {
        column.push(cur[0]);
        if cur[0] == 0.0 {
            return if column.len() == coeffs.len() {
                Some(column)
            } else {
                None
            };
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = prev.get(j + 1).copied().unwrap_or(0.0);
                let b = cur.get(j + 1).copied().unwrap_or(0.0);
                (cur[0] * a - prev[0] * b) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }
    Some(column)
}

impl ErrorTransfer {
    pub fn new(kd: f64, kp: f64, ki: f64) -> Result<Self> {
        if ![kd, kp, ki].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("transfer gains must be finite".into()));
        }
        Ok(Self { kd, kp, ki })
    }

    /// One transfer per joint of a diagonal gain set.
    pub fn per_joint(gains: &GainSet) -> Vec<Self> {
        (0..gains.dof())
            .map(|i| Self {
                kd: gains.kd()[i],
                kp: gains.kp()[i],
                ki: gains.ki()[i],
            })
            .collect()
    }

    pub fn has_integral(&self) -> bool {
        self.ki != 0.0
    }

    /// Routh verdict for the cubic, or the second-order verdict when `k_i = 0`.
    pub fn stability(&self) -> StabilityVerdict {
        if self.has_integral() {
            routh_stability(self.kd, self.kp, self.ki)
        } else {
            second_order_stability(self.kd, self.kp)
        }
    }

    /// Denominator `s³ + k_d s² + k_p s + k_i` at complex `s`.
    pub fn characteristic(&self, s: Complex64) -> Complex64 {
        ((s + self.kd) * s + self.kp) * s + self.ki
    }

    fn characteristic_derivative(&self, s: Complex64) -> Complex64 {
        (s * 3.0 + 2.0 * self.kd) * s + self.kp
    }

    /// Roots of the characteristic cubic, sorted by real part then imaginary part.
    ///
    /// Companion-matrix eigenvalues followed by one Newton polish step.
    pub fn poles(&self) -> [Complex64; 3] {
        #[rustfmt::skip]
        let companion = Matrix3::new(
            -self.kd, -self.kp, -self.ki,
            1.0,      0.0,      0.0,
            0.0,      1.0,      0.0,
        );
        let eig = companion.complex_eigenvalues();
        let mut roots = [eig[0], eig[1], eig[2]];
        // A multiple root splits by ~ε^(1/k); the cluster centroid is accurate.
        let close = |a: Complex64, b: Complex64| (a - b).norm() < 1e-4 * (1.0 + a.norm());
        let (r0, r1, r2) = (roots[0], roots[1], roots[2]);
        if close(r0, r1) && close(r1, r2) && close(r0, r2) {
            roots = [(r0 + r1 + r2) / 3.0; 3];
        } else {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                if close(roots[i], roots[j]) {
                    let mid = (roots[i] + roots[j]) / 2.0;
                    roots[i] = mid;
                    roots[j] = mid;
                }
            }
        }
        for r in roots.iter_mut() {
            let slope = self.characteristic_derivative(*r);
            if slope.norm() > 0.0 {
                let polished = *r - self.characteristic(*r) / slope;
                if self.characteristic(polished).norm() <= self.characteristic(*r).norm() {
                    *r = polished;
                }
            }
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        roots
    }

    /// `lim_{t→∞} q̃(t)` for a constant disturbance `δ`, by the final value theorem.
    ///
    /// Zero whenever integral action is present; `δ / k_p` for the PD loop.
    pub fn final_value(&self, delta: f64) -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        let verdict = self.stability();
        if !verdict.stable {
            return Err(Error::Precondition(format!(
                "closed loop (kd = {}, kp = {}, ki = {}) is not stable (margin {:.6})",
                self.kd, self.kp, self.ki, verdict.margin
            )));
        }
        if self.has_integral() {
            Ok(0.0)
        } else {
            Ok(delta / self.kp)
        }
    }

    /// Third-order realization, state `[∫q̃, q̃, q̃̇]`.
    pub fn state_matrix(&self) -> Matrix3<f64> {
        #[rustfmt::skip]
        let a = Matrix3::new(
            0.0,      1.0,      0.0,
            0.0,      0.0,      1.0,
            -self.ki, -self.kp, -self.kd,
        );
        a
    }

    /// Response of `q̃` to a step `δ` applied at `t = 0` from rest, by RK4.
    pub fn linear_error_response(&self, delta: f64, t_end: f64, dt: f64) -> Result<ErrorResponse> {
        if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}"
            )));
        }
        let a = self.state_matrix();
        let a = DMatrix::from_fn(3, 3, |i, j| a[(i, j)]);
        let b = DVector::from_column_slice(&[0.0, 0.0, delta]);
        let steps = (t_end / dt).round().max(1.0) as usize;
        let mut x = DVector::zeros(3);
        let mut t = Vec::with_capacity(steps + 1);
        let mut deviation = Vec::with_capacity(steps + 1);
        t.push(0.0);
        deviation.push(0.0);
        for k in 0..steps {
            x = rk4_step::<Error, _>(k as f64 * dt, &x, dt, |_, s| Ok(&a * s + &b))?;
            t.push((k + 1) as f64 * dt);
            deviation.push(x[1]);
        }
        Ok(ErrorResponse { t, deviation })
    }
}

/// Sampled `q̃(t)` for one joint.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorResponse {
    pub t: Vec<f64>,
    pub deviation: Vec<f64>,
}

impl ErrorResponse {
    /// Linear interpolation at time `t`, clamped to the sampled range.
    pub fn sample(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.deviation[0];
        }
        if t >= self.t[n - 1] {
            return self.deviation[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t) - 1;
        let w = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        self.deviation[k] * (1.0 - w) + self.deviation[k + 1] * w
    }
}

/// `3n × 3n` state matrix of the full error system with per-joint states
/// `[∫q̃ᵢ, q̃ᵢ, q̃̇ᵢ]` stacked joint by joint. Diagonal gains make it block diagonal.
pub fn error_state_matrix(gains: &GainSet) -> DMatrix<f64> {
    let n = gains.dof();
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    for (i, tf) in ErrorTransfer::per_joint(gains).iter().enumerate() {
        let block = tf.state_matrix();
        a.view_mut((3 * i, 3 * i), (3, 3)).copy_from(&block);
    }
    a
}
