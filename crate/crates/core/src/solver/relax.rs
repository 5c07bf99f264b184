use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Grid;

use super::propagate::max_kinetic_energy;
use super::split::{Clock, Landscape, SplitStep};
use super::wavefunction::{ManyBodyWavefunction, SolverKind};

/// Pointwise one-body density allowed at the edge of the relaxation window.
pub const EDGE_DENSITY_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    /// Largest imaginary time step.
    pub dtau: f64,
    /// With a contact term the step is further capped so that
    /// `dτ · (largest kinetic eigenvalue)` stays below this; otherwise the
    /// split-step fixed point smooths the interaction cusp and sits visibly
    /// above the lattice ground state.
    pub kinetic_phase: f64,
    /// Energy change per step below which the state counts as relaxed.
    pub tolerance: f64,
    pub max_steps: usize,
    /// Steps between energy evaluations; the change is averaged over them.
    pub check_every: usize,
    /// Relax on a centred sub-lattice of this half width and embed the
    /// result, instead of on the full grid.
    pub window: Option<f64>,
    /// Start from the spectrally refined ground state of a grid with half
    /// the points (recursively), when a contact term is present.
    pub coarse_start: bool,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            dtau: 0.01,
            kinetic_phase: 0.75,
            tolerance: 1e-11,
            max_steps: 1_000_000,
            check_every: 10,
            window: Some(9.0),
            coarse_start: true,
        }
    }
}

/// Fewest points a coarse warm-start level may have.
const COARSEST_POINTS: usize = 32;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub state: ManyBodyWavefunction,
    pub energy: f64,
    /// Imaginary-time steps on the final lattice.
    pub steps: usize,
    /// Energy at every check on the final lattice, in order.
    pub history: Vec<f64>,
}

/// Exact ground state of `particles` bosons in the harmonic trap.
pub fn relax_ground_state(particles: usize, lambda0: f64, grid: &Grid) -> Result<GroundState> {
    relax_with(particles, lambda0, grid, SolverKind::Exact, &RelaxOptions::default(), None)
}

fn has_contact(particles: usize, lambda0: f64, kind: SolverKind) -> bool {
    kind == SolverKind::Exact && particles > 1 && lambda0 > 0.0
}

/// Imaginary time step actually used on `grid`.
pub fn effective_dtau(options: &RelaxOptions, grid: &Grid, particles: usize, lambda0: f64, kind: SolverKind) -> f64 {
    if has_contact(particles, lambda0, kind) {
        options.dtau.min(options.kinetic_phase / max_kinetic_energy(grid, particles))
    } else {
        options.dtau
    }
}

/// Imaginary-time relaxation with explicit options and an optional warm start.
///
/// The warm start must live on the working lattice (the window if one is
/// used, the full grid otherwise).
pub fn relax_with(
    particles: usize,
    lambda0: f64,
    grid: &Grid,
    kind: SolverKind,
    options: &RelaxOptions,
    guess: Option<&ManyBodyWavefunction>,
) -> Result<GroundState> {
    if !(options.dtau > 0.0 && options.kinetic_phase > 0.0 && options.tolerance > 0.0 && options.check_every > 0) {
        return Err(Error::Config("relaxation step, tolerance and check interval must be positive".into()));
    }
    let (work_grid, offset) = match options.window {
        Some(half) if half < 0.5 * grid.length() => grid.centered_window(half).unwrap_or((*grid, 0)),
        _ => (*grid, 0),
    };

    let start = match guess {
        Some(g) => {
            if g.grid() != &work_grid || g.particles() != particles || g.kind() != kind {
                return Err(Error::Usage("warm start does not match the relaxation lattice".into()));
            }
            g.clone().with_lambda0(lambda0)?
        }
        None => coarse_seed(particles, lambda0, &work_grid, kind, options)?,
    };

    let relaxed = relax_on(start, options)?;
    let mut state = relaxed.state;
    state.symmetrize();
    state.normalize();
    check_edges(&state)?;
    let energy = energy_of(&state, options);
    let state = if work_grid == *grid { state } else { state.embed(*grid, offset)? };
    Ok(GroundState {
        state,
        energy,
        steps: relaxed.steps,
        history: relaxed.history,
    })
}

fn gaussian_start(particles: usize, lambda0: f64, grid: &Grid, kind: SolverKind) -> Result<ManyBodyWavefunction> {
    let norm = std::f64::consts::PI.powf(-0.25);
    let orbital: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|x| Complex64::new(norm * (-0.5 * x * x).exp(), 0.0))
        .collect();
    ManyBodyWavefunction::product_state(*grid, particles, lambda0, kind, &orbital)
}

fn coarse_seed(
    particles: usize,
    lambda0: f64,
    grid: &Grid,
    kind: SolverKind,
    options: &RelaxOptions,
) -> Result<ManyBodyWavefunction> {
    let n = grid.n_points();
    if !(options.coarse_start && has_contact(particles, lambda0, kind) && n / 2 >= COARSEST_POINTS) {
        return gaussian_start(particles, lambda0, grid, kind);
    }
    let coarse = Grid::new(grid.x_min(), grid.x_max(), n / 2)?;
    let seed = coarse_seed(particles, lambda0, &coarse, kind, options)?;
    relax_on(seed, options)?.state.refine(*grid)
}

fn energy_of(state: &ManyBodyWavefunction, options: &RelaxOptions) -> f64 {
    let dtau = effective_dtau(options, state.grid(), state.particles(), state.lambda0(), state.kind());
    SplitStep::new(state, &Landscape::Harmonic, None, Clock::Imaginary, dtau)
        .energy(state.values())
        .total()
}

struct Relaxed {
    state: ManyBodyWavefunction,
    steps: usize,
    history: Vec<f64>,
}

fn relax_on(mut state: ManyBodyWavefunction, options: &RelaxOptions) -> Result<Relaxed> {
    state.normalize();
    let dtau = effective_dtau(options, state.grid(), state.particles(), state.lambda0(), state.kind());
    let mut stepper = SplitStep::new(&state, &Landscape::Harmonic, None, Clock::Imaginary, dtau);
    let mut energy = stepper.energy(state.values()).total();
    let mut history = vec![energy];
    let mut steps = 0;
    let mut delta = f64::INFINITY;
    while steps < options.max_steps {
        for _ in 0..options.check_every {
            stepper.step(state.values_mut());
            state.normalize();
        }
        steps += options.check_every;
        let next = stepper.energy(state.values()).total();
        if !next.is_finite() {
            return Err(Error::Instability {
                time: steps as f64 * dtau,
                detail: "non-finite energy during relaxation".into(),
            });
        }
        delta = (energy - next) / options.check_every as f64;
        energy = next;
        history.push(energy);
        if delta.abs() < options.tolerance {
            break;
        }
    }
    if delta.abs() >= options.tolerance {
        return Err(Error::Convergence { steps, last_delta: delta });
    }
    Ok(Relaxed { state, steps, history })
}

fn check_edges(state: &ManyBodyWavefunction) -> Result<()> {
    let n = state.grid().n_points();
    let dx = state.grid().dx();
    let coords = state.coordinates();
    let mut rho = vec![0.0; n];
    let rest = dx.powi(coords as i32 - 1);
    for (flat, v) in state.values().iter().enumerate() {
        rho[flat / n.pow(coords as u32 - 1)] += v.norm_sqr() * rest;
    }
    let edge = rho[0].max(rho[n - 1]);
    if edge > EDGE_DENSITY_LIMIT {
        return Err(Error::Config(format!(
            "grid too narrow for the ground state: edge density {edge:e}"
        )));
    }
    Ok(())
}

/// Grid energies at spacing `dx` and `dx/2` and their Richardson limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumEnergy {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

/// Ground-state energy extrapolated to the continuum.
///
/// The lattice contact term `λ₀/dx` carries a first-order spacing error, so
/// the two grid energies are combined as `2 E(dx/2) - E(dx)`. Both grids
/// span `[-half_width, half_width)`.
pub fn continuum_ground_energy(
    particles: usize,
    lambda0: f64,
    half_width: f64,
    coarse_points: usize,
    kind: SolverKind,
) -> Result<ContinuumEnergy> {
    let options = RelaxOptions {
        window: None,
        ..RelaxOptions::default()
    };
    let coarse_grid = Grid::new(-half_width, half_width, coarse_points)?;
    let fine_grid = Grid::new(-half_width, half_width, 2 * coarse_points)?;
    let coarse = relax_with(particles, lambda0, &coarse_grid, kind, &options, None)?.energy;
    let fine = relax_with(particles, lambda0, &fine_grid, kind, &options, None)?.energy;
    let extrapolated = if kind == SolverKind::Exact && particles > 1 && lambda0 > 0.0 {
        2.0 * fine - coarse
    } else {
        fine
    };
    Ok(ContinuumEnergy {
        coarse,
        fine,
        extrapolated,
    })
}
