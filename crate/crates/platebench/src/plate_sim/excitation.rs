//! Pulse-train excitation and the optional sensor nonlinearity applied to
//! the synthetic output channel.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rectangular pulse train: pulses of `duration_samples` samples at
/// `amplitude`, repeated every `period` seconds, first onset at `period / 2`
/// so every dataset carries a quiet pre-excitation prefix.
pub fn pulse_train(
    amplitude: f64,
    period: f64,
    duration_samples: usize,
    total_samples: usize,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput("pulse train needs dt > 0".into()));
    }
    if !(period > dt) {
        return Err(Error::InvalidInput(format!(
            "pulse period {period} must exceed the sampling interval {dt}"
        )));
    }
    if duration_samples < 1 {
        return Err(Error::InvalidInput("pulse duration must be >= 1 sample".into()));
    }
    let mut u = vec![0.0; total_samples];
    let mut k = 0usize;
    loop {
        let onset_time = period * (k as f64 + 0.5);
        let onset = (onset_time / dt).round() as usize;
        if onset >= total_samples {
            break;
        }
        let end = (onset + duration_samples).min(total_samples);
        for slot in &mut u[onset..end] {
            *slot = amplitude;
        }
        k += 1;
    }
    Ok(u)
}

/// Pointwise output-channel distortion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SensorNonlinearity {
    None,
    Cubic { eps: f64 },
    Saturation { scale: f64 },
}

impl SensorNonlinearity {
    pub fn validate(&self) -> Result<()> {
        match self {
            SensorNonlinearity::None => Ok(()),
            SensorNonlinearity::Cubic { eps } => {
                if eps.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("cubic nonlinearity needs finite eps".into()))
                }
            }
            SensorNonlinearity::Saturation { scale } => {
                if scale.is_finite() && *scale > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(
                        "saturation nonlinearity needs finite scale > 0".into(),
                    ))
                }
            }
        }
    }
}

/// Applies the nonlinearity sample by sample.
pub fn apply_sensor_nonlinearity(y: &[f64], kind: &SensorNonlinearity) -> Result<Vec<f64>> {
    kind.validate()?;
    Ok(match kind {
        SensorNonlinearity::None => y.to_vec(),
        SensorNonlinearity::Cubic { eps } => y.iter().map(|&v| v + eps * v * v * v).collect(),
        SensorNonlinearity::Saturation { scale } => {
            y.iter().map(|&v| scale * (v / scale).tanh()).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_rate_pulse_train_has_one_pulse_in_two_seconds() {
        // 30 kHz sampling, 2 s period, 1-sample pulses, 60000 samples:
        // the only onset inside the record is at t = 1 s.
        let dt = 1.0 / 30_000.0;
        let u = pulse_train(1.0, 2.0, 1, 60_000, dt).unwrap();
        let nonzero: Vec<usize> = u
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero, vec![30_000]);
    }

    #[test]
    fn zero_amplitude_gives_zero_signal() {
        let u = pulse_train(0.0, 0.5, 2, 1000, 1e-3).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn record_shorter_than_first_onset_is_silent() {
        let u = pulse_train(3.0, 2.0, 1, 100, 1e-3).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_period_rejected() {
        assert!(pulse_train(1.0, 1e-4, 1, 10, 1e-3).is_err());
        assert!(pulse_train(1.0, 1.0, 0, 10, 1e-3).is_err());
    }

    #[test]
    fn nonlinearity_identity_cases() {
        let y = vec![0.5, -1.25, 3.0];
        let none = apply_sensor_nonlinearity(&y, &SensorNonlinearity::None).unwrap();
        assert_eq!(none, y);
        let cubic0 = apply_sensor_nonlinearity(&y, &SensorNonlinearity::Cubic { eps: 0.0 }).unwrap();
        assert_eq!(cubic0, y);
    }

    #[test]
    fn saturation_bounds_output() {
        let y: Vec<f64> = (-100..100).map(|i| i as f64).collect();
        let out =
            apply_sensor_nonlinearity(&y, &SensorNonlinearity::Saturation { scale: 2.5 }).unwrap();
        assert!(out.iter().all(|v| v.abs() < 2.5));
        assert!(apply_sensor_nonlinearity(&y, &SensorNonlinearity::Saturation { scale: 0.0 }).is_err());
    }
}
