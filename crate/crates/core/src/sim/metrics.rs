use crate::{Error, JointVector, Result};

/// Infinity-norm error band for settling, rad.
pub const SETTLING_BAND: f64 = 0.01;
/// Trailing fraction of the run used for the tail RMS.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    /// RMS over all joints of the error samples with `t ≥ (1 − TAIL_FRACTION) t_end`, rad.
    pub rms_error_tail: f64,
    /// First sample time after which `‖e‖_∞ < SETTLING_BAND` holds for the rest
    /// of the run; `None` if the run ends outside the band.
    pub settling_time: Option<f64>,
    /// `∫‖u‖² dt` by the trapezoidal rule.
    pub control_energy: f64,
}

pub fn metrics(t: &[f64], error: &[JointVector], u: &[JointVector]) -> Result<Metrics> {
    if t.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "metrics need at least 5 samples, got {}",
            t.len()
        )));
    }
    if error.len() != t.len() || u.len() != t.len() {
        return Err(Error::InvalidInput("series lengths differ".into()));
    }

    let t_end = t[t.len() - 1];
    let cutoff = t[0] + (1.0 - TAIL_FRACTION) * (t_end - t[0]);
    let (sum, count) = t
        .iter()
        .zip(error)
        .filter(|(&ti, _)| ti >= cutoff)
        .fold((0.0, 0usize), |(s, c), (_, e)| {
            (s + e.norm_squared(), c + e.len())
        });
    let rms_error_tail = (sum / count as f64).sqrt();

    let settling_time = match error.iter().rposition(|e| e.amax() >= SETTLING_BAND) {
        None => Some(t[0]),
        Some(last) if last + 1 < t.len() => Some(t[last + 1]),
        Some(_) => None,
    };

    let control_energy = t
        .windows(2)
        .zip(u.windows(2))
        .map(|(ts, us)| 0.5 * (ts[1] - ts[0]) * (us[0].norm_squared() + us[1].norm_squared()))
        .sum();

    Ok(Metrics {
        rms_error_tail,
        settling_time,
        control_energy,
    })
}
