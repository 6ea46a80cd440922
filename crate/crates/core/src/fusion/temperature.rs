use serde::{Deserialize, Serialize};

use crate::config::AlphaCoefficients;
use crate::error::{Error, Result};
use crate::thermal_track::TemperatureReading;

/// `alpha(d) = a0 + a1 d`.
pub fn alpha_eval(a: &AlphaCoefficients, d: f64) -> f64 {
    a.a0 + a.a1 * d
}

/// Least-squares fit of `T = (a0 + a1 d) * raw` from `(raw, d, T)` samples.
pub fn fit_alpha(samples: &[(f64, f64, f64)]) -> Result<AlphaCoefficients> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    // Regressors are raw and d * raw.
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(raw, d, t) in samples {
        let (x1, x2) = (raw, d * raw);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * t;
        r2 += x2 * t;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-10 * s11 * s22) {
        return Err(Error::RankDeficient);
    }
    Ok(AlphaCoefficients {
        a0: (s22 * r1 - s12 * r2) / det,
        a1: (s11 * r2 - s12 * r1) / det,
    })
}

/// Where the distance used for a correction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSource {
    Radar,
    /// Thermal-only estimate; lower confidence.
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedReading {
    pub frame: u64,
    pub raw: f64,
    pub d: f64,
    pub corrected: f64,
    pub source: DistanceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureEstimate {
    /// Mean corrected temperature.
    pub t_hat: f64,
    pub per_frame: Vec<CorrectedReading>,
}

/// Corrects every reading with `alpha(d)`. `radar_d(frame)` supplies the radar
/// distance for fused tracks; frames without one fall back to the thermal
/// distance estimate.
pub fn corrected_temperature(
    readings: &[TemperatureReading],
    radar_d: impl Fn(u64) -> Option<f64>,
    alpha: &AlphaCoefficients,
) -> Result<TemperatureEstimate> {
    if readings.is_empty() {
        return Err(Error::NoReadings);
    }
    let per_frame: Vec<CorrectedReading> = readings
        .iter()
        .map(|r| {
            let (d, source) = match radar_d(r.frame) {
                Some(d) => (d, DistanceSource::Radar),
                None => (r.d, DistanceSource::Thermal),
            };
            CorrectedReading {
                frame: r.frame,
                raw: r.raw,
                d,
                corrected: alpha_eval(alpha, d) * r.raw,
                source,
            }
        })
        .collect();
    let t_hat = per_frame.iter().map(|c| c.corrected).sum::<f64>() / per_frame.len() as f64;
    Ok(TemperatureEstimate { t_hat, per_frame })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_alpha() {
        let a = AlphaCoefficients::default();
        assert!((alpha_eval(&a, 2.0) - 1.142).abs() < 1e-12);
        let est = corrected_temperature(
            &[TemperatureReading {
                frame: 0,
                raw: 32.0,
                d: 9.0,
            }],
            |_| Some(2.0),
            &a,
        )
        .unwrap();
        assert!((est.t_hat - 36.544).abs() < 1e-9);
        assert_eq!(est.per_frame[0].source, DistanceSource::Radar);
    }

    #[test]
    fn falls_back_to_thermal_distance() {
        let a = AlphaCoefficients::default();
        let r = [TemperatureReading {
            frame: 3,
            raw: 32.0,
            d: 2.0,
        }];
        let est = corrected_temperature(&r, |_| None, &a).unwrap();
        assert_eq!(est.per_frame[0].source, DistanceSource::Thermal);
        assert!((est.t_hat - 36.544).abs() < 1e-9);
        assert!(matches!(
            corrected_temperature(&[], |_| None, &a),
            Err(Error::NoReadings)
        ));
    }

    #[test]
    fn fit_recovers_coefficients() {
        let truth = AlphaCoefficients { a0: 1.1, a1: 0.02 };
        let samples: Vec<_> = (0..20)
            .map(|i| {
                let d = 0.5 + 0.2 * i as f64;
                let raw = 31.0 + 0.1 * (i % 3) as f64;
                (raw, d, alpha_eval(&truth, d) * raw)
            })
            .collect();
        let fit = fit_alpha(&samples).unwrap();
        assert!((fit.a0 - 1.1).abs() < 1e-9 && (fit.a1 - 0.02).abs() < 1e-9);
    }

    #[test]
    fn constant_distance_is_rank_deficient() {
        let samples: Vec<_> = (0..5).map(|i| (30.0 + i as f64, 2.0, 36.0)).collect();
        assert!(matches!(fit_alpha(&samples), Err(Error::RankDeficient)));
    }
}
