//! Classical fixed-step Runge–Kutta integration.

use nalgebra::DVector;

/// One classical RK4 step of `x' = f(t, x)`.
///
/// The right-hand side is fallible so that plant errors (singular inertia,
/// dimension mismatch) surface from inside a stage.
pub fn rk4_step<E, F>(t: f64, x: &DVector<f64>, h: f64, mut f: F) -> Result<DVector<f64>, E>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, E>,
{
    let half = 0.5 * h;
    let k1 = f(t, x)?;
    let k2 = f(t + half, &(x + &k1 * half))?;
    let k3 = f(t + half, &(x + &k2 * half))?;
    let k4 = f(t + h, &(x + &k3 * h))?;
    Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
}
