use std::f64::consts::PI;

use num_complex::Complex64;

use crate::wavefunction::WaveFunction;

/// Magnitude `R`, unwrapped phase `S`, and where the phase is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFields {
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub phase_defined: Vec<bool>,
}

impl PolarFields {
    /// `R e^{iS}` where the phase is defined, zero elsewhere.
    pub fn recombine(&self) -> Vec<Complex64> {
        self.magnitude
            .iter()
            .zip(&self.phase)
            .zip(&self.phase_defined)
            .map(|((&r, &s), &d)| {
                if d {
                    Complex64::from_polar(r, s)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

/// Polar form of `psi`. The phase is unwrapped along each connected run of
/// points with `R > threshold`; `threshold` defaults to `1e-6 * max R`.
pub fn polar_decompose(psi: &WaveFunction, threshold: Option<f64>) -> PolarFields {
    let amps = psi.amplitudes();
    let magnitude: Vec<f64> = amps.iter().map(|a| a.norm()).collect();
    let max_r = magnitude.iter().cloned().fold(0.0, f64::max);
    let thr = threshold.unwrap_or(1e-6 * max_r);
    let phase_defined: Vec<bool> = magnitude.iter().map(|&r| r > thr).collect();

    let mut phase = vec![0.0; amps.len()];
    let mut prev: Option<f64> = None;
    for i in 0..amps.len() {
        if !phase_defined[i] {
            prev = None;
            continue;
        }
        let raw = amps[i].arg();
        phase[i] = match prev {
            None => raw,
            Some(p) => {
                let mut d = raw - p.rem_euclid(2.0 * PI);
                d = (d + PI).rem_euclid(2.0 * PI) - PI;
                p + d
            }
        };
        prev = Some(phase[i]);
    }
    PolarFields {
        magnitude,
        phase,
        phase_defined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;

    #[test]
    fn plane_wave_phase_slope() {
        let g = SpatialGrid::new(0.0, 20.0, 1024).unwrap();
        let k = 3.7;
        let psi = WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0 / 20f64.sqrt(), k * x));
        let p = polar_decompose(&psi, None);
        assert!(p.phase_defined.iter().all(|&d| d));
        let r0 = p.magnitude[0];
        assert!(p.magnitude.iter().all(|r| (r - r0).abs() < 1e-14));
        for i in 1..g.len() {
            let slope = (p.phase[i] - p.phase[i - 1]) / g.dx();
            assert!((slope - k).abs() < 1e-6);
        }
    }

    #[test]
    fn real_positive_has_zero_phase() {
        let g = SpatialGrid::new(-5.0, 5.0, 64).unwrap();
        let psi = WaveFunction::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.0));
        let p = polar_decompose(&psi, None);
        assert!(p.phase.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn node_is_flagged() {
        let g = SpatialGrid::new(-1.0, 1.0, 64).unwrap();
        let psi = WaveFunction::from_fn(g, |x| Complex64::new(x, 0.0));
        let p = polar_decompose(&psi, Some(1e-3));
        assert!(!p.phase_defined[32]);
        assert!(p.phase_defined[31] && p.phase_defined[33]);
    }

    #[test]
    fn recombination_reproduces_state() {
        let g = SpatialGrid::new(-5.0, 5.0, 256).unwrap();
        let psi = WaveFunction::from_fn(g, |x| {
            Complex64::from_polar((-x * x / 4.0).exp() * (1.0 + x), 0.3 * x * x)
        });
        let p = polar_decompose(&psi, None);
        for ((a, b), d) in psi.amplitudes().iter().zip(p.recombine()).zip(&p.phase_defined) {
            if *d {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
