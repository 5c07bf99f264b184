use crate::error::{Error, Result};
use crate::lattice::Grid;

use super::relax::{relax_with, GroundState, RelaxOptions};
use super::wavefunction::SolverKind;

/// Single-orbital energy of `particles` bosons in the harmonic trap,
/// `N⟨h⟩ + λ₀ N(N-1)/2 ∫|φ|⁴`, minimised in imaginary time.
pub fn gp_ground_energy(particles: usize, lambda0: f64, grid: &Grid) -> Result<f64> {
    Ok(gp_ground_state(particles, lambda0, grid, &RelaxOptions::default())?.energy)
}

pub fn gp_ground_state(
    particles: usize,
    lambda0: f64,
    grid: &Grid,
    options: &RelaxOptions,
) -> Result<GroundState> {
    if particles == 0 {
        return Err(Error::Config("particle number must be positive".into()));
    }
    relax_with(particles, lambda0, grid, SolverKind::MeanField, options, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    #[test]
    fn non_interacting_energy_is_n_halves() {
        let g = make_grid(-8.0, 8.0, 128).unwrap();
        assert!((gp_ground_energy(7, 0.0, &g).unwrap() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn weak_coupling_matches_first_order() {
        let g = make_grid(-10.0, 10.0, 256).unwrap();
        let (n, l) = (101usize, 0.001);
        let nf = n as f64;
        let first_order = nf / 2.0 + l * nf * (nf - 1.0) / 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        let e = gp_ground_energy(n, l, &g).unwrap();
        assert!(((e - first_order) / first_order).abs() < 0.01, "{e} vs {first_order}");
    }
}
