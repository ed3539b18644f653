use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MeasurementRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClickSample {
    Detected { step: usize, time: f64 },
    Undetected,
}

/// Cumulative detection probability `(P_bar_0 - P_bar_k) / P_bar_0` at each
/// recorded step, conditioned on starting inside the no-click subspace.
pub fn detection_cdf(record: &MeasurementRecord) -> Vec<f64> {
    let p0 = record.survival[0];
    record
        .survival
        .iter()
        .map(|s| ((p0 - s) / p0).clamp(0.0, 1.0))
        .collect()
}

/// Draws click times by inverting the discrete distribution
/// `P_k = P_bar_{k-1} - P_bar_k`; the mass `P_bar_K` left at the horizon
/// yields [`ClickSample::Undetected`].
pub fn click_time_sampler(record: &MeasurementRecord, n_samples: usize, seed: u64) -> Vec<ClickSample> {
    let cdf = detection_cdf(record);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let u: f64 = rng.random();
            // first k with u < cdf[k]; cdf[0] = 0 never matches
            let k = cdf.partition_point(|&c| c <= u);
            if k < cdf.len() {
                ClickSample::Detected {
                    step: k,
                    time: record.times[k],
                }
            } else {
                ClickSample::Undetected
            }
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between the empirical step distribution of
/// `samples` and the record's detection CDF; undetected samples sit above
/// the last step.
pub fn ks_distance(samples: &[ClickSample], record: &MeasurementRecord) -> f64 {
    let cdf = detection_cdf(record);
    let mut counts = vec![0usize; cdf.len()];
    for s in samples {
        if let ClickSample::Detected { step, .. } = s {
            counts[*step] += 1;
        }
    }
    let n = samples.len() as f64;
    let mut acc = 0usize;
    let mut d: f64 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        acc += c;
        d = d.max((acc as f64 / n - cdf[k]).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::wavefunction::WaveFunction;

    fn record(survival: Vec<f64>) -> MeasurementRecord {
        let g = SpatialGrid::new(0.0, 1.0, 16).unwrap();
        let n = survival.len();
        let mut no_click = vec![1.0];
        no_click.extend(survival.windows(2).map(|w| w[1] / w[0]));
        MeasurementRecord {
            delta_t: 0.5,
            times: (0..n).map(|k| k as f64 * 0.5).collect(),
            conditional_click: no_click.iter().map(|p| 1.0 - p).collect(),
            conditional_no_click: no_click,
            survival,
            states: None,
            breakdowns: Vec::new(),
            underflow: None,
            cut_loss: 0.0,
            current: WaveFunction::zeros(g),
        }
    }

    #[test]
    fn no_decay_means_no_detection() {
        let r = record(vec![1.0; 5]);
        assert!(click_time_sampler(&r, 1000, 1)
            .iter()
            .all(|s| *s == ClickSample::Undetected));
    }

    #[test]
    fn certain_first_step_detection() {
        let r = record(vec![1.0, 0.0]);
        let s = click_time_sampler(&r, 1000, 2);
        assert!(s.iter().all(|s| *s == ClickSample::Detected { step: 1, time: 0.5 }));
    }

    #[test]
    fn geometric_decay_matches() {
        let r = record((0..40).map(|k| 0.9f64.powi(k)).collect());
        let s = click_time_sampler(&r, 100_000, 7);
        assert!(ks_distance(&s, &r) < 0.01);
        assert_eq!(s, click_time_sampler(&r, 100_000, 7));
        assert_ne!(s, click_time_sampler(&r, 100_000, 8));
    }
}
