//! Builds the numerical objects a config describes.

use std::fs;

use zenoflux::measurement::ValidityWindow;
use zenoflux::numerics::interp_linear;
use zenoflux::{gaussian_packet, truncated_state, HamiltonianSpec, Projector, Region, SpatialGrid, WaveFunction};

use crate::config::{DetectorSide, ExperimentConfig, PacketKind, PotentialKind, ProjectorKind};
use crate::error::{CliError, Result};

/// Grid, Hamiltonian, detector region and initial state of a run.
pub struct Scenario {
    pub grid: SpatialGrid,
    pub h: HamiltonianSpec,
    pub region: Option<Region>,
    pub psi0: WaveFunction,
}

impl Scenario {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        let g = config.grid.ok_or_else(|| {
            CliError::validation("grid", format!("section required for run kind {}", config.run.kind))
        })?;
        let grid = SpatialGrid::new(g.x_min, g.x_max, g.n_points)?;
        let h = hamiltonian(config, &grid)?;
        let region = config
            .detector
            .map(|d| match d.side {
                DetectorSide::LeftOf => Region::left_of(&grid, d.boundary),
                DetectorSide::RightOf => Region::right_of(&grid, d.boundary),
            })
            .transpose()?;
        let p = config.packet.ok_or_else(|| {
            CliError::validation("packet", format!("section required for run kind {}", config.run.kind))
        })?;
        let packet = gaussian_packet(&grid, p.x0, p.sigma, p.k0)?;
        let psi0 = match p.kind {
            PacketKind::Gaussian => packet,
            PacketKind::Truncated => {
                let support = match (p.region, &region) {
                    (Some((a, b)), _) => Region::between(&grid, a, b)?,
                    (None, Some(r)) => r.clone(),
                    (None, None) => return Err(CliError::validation("packet.region", "is required")),
                };
                truncated_state(&support, &packet)?
            }
        };
        Ok(Self { grid, h, region, psi0 })
    }

    pub fn region(&self) -> Result<&Region> {
        self.region
            .as_ref()
            .ok_or_else(|| CliError::validation("detector", "section required for a spatial projector"))
    }

    pub fn projector(&self, kind: ProjectorKind) -> Result<Projector> {
        Ok(match kind {
            ProjectorKind::Spatial => Projector::Spatial(self.region()?.clone()),
            ProjectorKind::RankOne => Projector::rank_one(self.psi0.clone())?,
            ProjectorKind::Identity => Projector::identity(&self.grid),
        })
    }

    pub fn validity_window(&self, t: f64) -> ValidityWindow {
        ValidityWindow::new(&self.grid, self.h.mass(), t)
    }
}

fn hamiltonian(config: &ExperimentConfig, grid: &SpatialGrid) -> Result<HamiltonianSpec> {
    let m = config.potential.mass;
    Ok(match &config.potential.kind {
        PotentialKind::Free => HamiltonianSpec::free(grid, m)?,
        PotentialKind::Harmonic { omega, center } => {
            let k = m * omega * omega;
            HamiltonianSpec::build(grid, m, |x| 0.5 * k * (x - center).powi(2))?
        }
        PotentialKind::Tabulated { file } => {
            let text = fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
            let (xs, vs) = read_table(&text)?;
            let samples = grid.positions().map(|x| interp_linear(&xs, &vs, x)).collect();
            HamiltonianSpec::from_samples(grid, m, samples)?
        }
    })
}

/// `x, V` pairs, one per line; blank lines, `#` comments and a non-numeric
/// header line are skipped. Abscissae must increase.
fn read_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => {
                if xs.last().is_some_and(|&last| v[0] <= last) {
                    return Err(CliError::validation(
                        "potential.file",
                        format!("line {}: x must increase", i + 1),
                    ));
                }
                xs.push(v[0]);
                vs.push(v[1]);
            }
            None if xs.is_empty() => continue,
            _ => {
                return Err(CliError::validation(
                    "potential.file",
                    format!("line {}: expected `x, V`", i + 1),
                ))
            }
        }
    }
    if xs.len() < 2 {
        return Err(CliError::validation("potential.file", "needs at least two samples"));
    }
    Ok((xs, vs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_potential_file() {
        let (x, v) = read_table("x,V\n# comment\n-1, 2\n0 0\n1,2\n").unwrap();
        assert_eq!(x, vec![-1.0, 0.0, 1.0]);
        assert_eq!(v, vec![2.0, 0.0, 2.0]);
        assert!(read_table("0,1\n0,2\n").is_err());
        assert!(read_table("0,1\n1\n").is_err());
    }
}
