#![allow(dead_code)]

use zenoflux::propagator::{LeakGuard, PropagatorConfig};
use zenoflux::{gaussian_packet, HamiltonianSpec, Region, SpatialGrid, WaveFunction};

pub const MASS: f64 = 1.0;

pub struct Standard {
    pub grid: SpatialGrid,
    pub h: HamiltonianSpec,
    pub psi0: WaveFunction,
    pub region: Region,
}

/// Grid (-60, 30, 4096), m = 1, Gaussian (x0 = -20, sigma = 2, k0 = 2),
/// detector region x < 0.
pub fn standard() -> Standard {
    let grid = SpatialGrid::new(-60.0, 30.0, 4096).unwrap();
    Standard {
        h: HamiltonianSpec::free(&grid, MASS).unwrap(),
        psi0: gaussian_packet(&grid, -20.0, 2.0, 2.0).unwrap(),
        region: Region::left_of(&grid, 0.0).unwrap(),
        grid,
    }
}

/// Crank–Nicolson with the leak guard on the artificial cut only.
pub fn arrival_propagator(region: &Region) -> PropagatorConfig {
    PropagatorConfig::crank_nicolson(0.01).with_guard(LeakGuard::for_region(region))
}

/// Measurement intervals dividing both 10 and 20, spanning the validity
/// window of the standard grid.
pub const SCAN_DELTA_T: [f64; 15] = [
    0.5, 0.4, 0.25, 0.2, 0.125, 0.1, 0.08, 0.05, 0.04, 0.025, 0.02, 0.0125, 0.01, 0.008, 0.005,
];
