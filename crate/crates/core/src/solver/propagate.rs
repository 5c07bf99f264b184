use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::observables::{self, OneBodyDensityMatrix};
use crate::potential::{PotentialSpec, X_C2};

use super::split::{Clock, EnergyParts, Landscape, SplitStep};
use super::wavefunction::{ManyBodyWavefunction, SolverKind};

/// Allowed relative norm growth per step before a run is declared unstable.
pub const NORM_GROWTH_LIMIT: f64 = 1e-8;

/// Negative-imaginary ramp `-i η ((x - x_on)/(x_max - x_on))^p` beyond `x_on`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    onset: f64,
    strength: f64,
    order: u32,
}

impl Absorber {
    pub fn new(onset: f64, strength: f64, order: u32, grid: &Grid) -> Result<Self> {
        if !(onset > X_C2 && onset > grid.x_min() && onset < grid.x_max()) {
            return Err(Error::Config(format!(
                "absorber onset {onset} must lie beyond x = {X_C2} and inside ({}, {})",
                grid.x_min(),
                grid.x_max()
            )));
        }
        if !(strength.is_finite() && strength > 0.0) {
            return Err(Error::Config(format!("absorber strength must be positive, got {strength}")));
        }
        if order < 2 {
            return Err(Error::Config(format!("absorber order must be at least 2, got {order}")));
        }
        Ok(Self { onset, strength, order })
    }

    /// Onset at `0.8 x_max`, unit strength, quartic ramp.
    pub fn default_for(grid: &Grid) -> Result<Self> {
        Self::new(0.8 * grid.x_max(), 1.0, 4, grid)
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Magnitude of the imaginary potential at every grid point.
    pub fn profile(&self, grid: &Grid) -> Vec<f64> {
        let span = grid.x_max() - self.onset;
        grid.positions()
            .iter()
            .map(|&x| {
                if x <= self.onset {
                    0.0
                } else {
                    self.strength * ((x - self.onset) / span).powi(self.order as i32)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between snapshots.
    pub snapshot_stride: usize,
}

impl PropagationParams {
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Largest kinetic eigenvalue the split step has to resolve.
pub fn max_kinetic_energy(grid: &Grid, coordinates: usize) -> f64 {
    0.5 * coordinates as f64 * grid.k_max() * grid.k_max()
}

/// The kinetic factor must not wrap its phase: `dt · N k_max²/2 < 2π`.
/// Beyond this the lattice contact term pumps norm into aliased momenta.
pub fn check_time_step(dt: f64, grid: &Grid, coordinates: usize) -> Result<()> {
    let limit = 2.0 * std::f64::consts::PI / max_kinetic_energy(grid, coordinates);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if dt >= limit {
        return Err(Error::Config(format!(
            "time step {dt} exceeds the split-step bound {limit:.6} for this grid"
        )));
    }
    Ok(())
}

fn validate(state: &ManyBodyWavefunction, params: &PropagationParams) -> Result<()> {
    check_time_step(params.dt, state.grid(), state.coordinates())?;
    if !(params.t_final >= 0.0 && params.t_final.is_finite()) {
        return Err(Error::Config(format!("final time must be non-negative, got {}", params.t_final)));
    }
    if params.snapshot_stride == 0 {
        return Err(Error::Config("snapshot stride must be positive".into()));
    }
    Ok(())
}

/// Energy of a state in a given landscape.
pub fn state_energy(state: &ManyBodyWavefunction, landscape: &Landscape) -> EnergyParts {
    SplitStep::new(state, landscape, None, Clock::Real, 0.0).energy(state.values())
}

/// Real-time evolution calling `observe(t, state)` at `t = 0` and every
/// `snapshot_stride` steps. The state is advanced in place.
pub fn propagate_observed<F>(
    state: &mut ManyBodyWavefunction,
    landscape: &Landscape,
    absorber: Option<&Absorber>,
    params: &PropagationParams,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(f64, &ManyBodyWavefunction) -> Result<()>,
{
    validate(state, params)?;
    let profile = absorber.map(|a| a.profile(state.grid()));
    let mut stepper = SplitStep::new(state, landscape, profile.as_deref(), Clock::Real, params.dt);
    let mut norm = state.norm();
    observe(0.0, state)?;
    let steps = params.steps();
    for step in 1..=steps {
        stepper.step(state.values_mut());
        let t = step as f64 * params.dt;
        let next = state.norm();
        if !next.is_finite() {
            return Err(Error::Instability {
                time: t,
                detail: "non-finite amplitude".into(),
            });
        }
        if next > norm * (1.0 + NORM_GROWTH_LIMIT) {
            return Err(Error::Instability {
                time: t,
                detail: format!("norm grew from {norm:.12} to {next:.12}"),
            });
        }
        norm = next;
        if step % params.snapshot_stride == 0 {
            observe(t, state)?;
        }
    }
    Ok(())
}

/// Observables recorded at one snapshot time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    /// Surviving norm `∫|Ψ|²`.
    pub norm: f64,
    /// One-body density on the position grid, integrating to `N·norm`.
    pub density: Vec<f64>,
    /// One-body density on the ascending momentum grid.
    pub momentum_density: Vec<f64>,
    /// Natural occupations as fractions of `N`, descending (at most four).
    pub occupations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_state: ManyBodyWavefunction,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.norm).collect()
    }

    /// Norm that has left through the absorber by each snapshot.
    pub fn absorbed(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| 1.0 - s.norm).collect()
    }
}

/// Number of leading natural occupations kept per snapshot.
pub const RECORDED_OCCUPATIONS: usize = 4;

/// Quench into the threshold potential of `spec` and record a trajectory.
pub fn propagate(
    state: ManyBodyWavefunction,
    spec: &PotentialSpec,
    params: &PropagationParams,
    absorber: Option<&Absorber>,
) -> Result<Trajectory> {
    propagate_in(state, &Landscape::Threshold(*spec), params, absorber)
}

pub fn propagate_in(
    mut state: ManyBodyWavefunction,
    landscape: &Landscape,
    params: &PropagationParams,
    absorber: Option<&Absorber>,
) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    propagate_observed(&mut state, landscape, absorber, params, |t, s| {
        snapshots.push(record(t, s)?);
        Ok(())
    })?;
    Ok(Trajectory {
        snapshots,
        final_state: state,
    })
}

fn record(time: f64, state: &ManyBodyWavefunction) -> Result<Snapshot> {
    let occupations = if state.kind() == SolverKind::MeanField {
        vec![state.norm()]
    } else {
        let mut f = observables::occupation_fractions(&OneBodyDensityMatrix::position(state))?;
        f.truncate(RECORDED_OCCUPATIONS);
        f
    };
    Ok(Snapshot {
        time,
        norm: state.norm(),
        density: observables::density_of(state),
        momentum_density: observables::momentum_density_of(state),
        occupations,
    })
}
