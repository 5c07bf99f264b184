//! Imaginary-time ground states, real-time quench dynamics and the
//! two-boson reference energy.

mod lanczos;
mod meanfield;
mod pair;
mod propagate;
mod relax;
mod split;
mod wavefunction;

pub use lanczos::{lattice_ground_energy, LanczosOptions};
pub use meanfield::{gp_ground_energy, gp_ground_state};
pub use pair::exact_pair_energy;
pub use propagate::{
    check_time_step, max_kinetic_energy, propagate, propagate_in, propagate_observed, state_energy, Absorber,
    PropagationParams, Snapshot, Trajectory, NORM_GROWTH_LIMIT, RECORDED_OCCUPATIONS,
};
pub use relax::{
    continuum_ground_energy, effective_dtau, relax_ground_state, relax_with, ContinuumEnergy, GroundState, RelaxOptions,
    EDGE_DENSITY_LIMIT,
};
pub use split::{EnergyParts, Landscape};
pub use wavefunction::{ManyBodyWavefunction, SolverKind, MAX_EXACT_PARTICLES};
