//! Strang-split exponentials shared by imaginary- and real-time evolution.
//!
//! One step is `e^{-iV τ/2} e^{-iT τ} e^{-iV τ/2}` where `V` collects the
//! one-body potential of every coordinate, the lattice contact term `λ₀/dx`
//! on coincident points, an optional absorber, and (mean-field only) the
//! nonlinear term `λ₀(N-1)|φ|²`. All factors are products of per-axis
//! arrays, so no `n^N` potential table is ever stored.

use num_complex::Complex64;

use crate::lattice::{Grid, NdFft};
use crate::potential::{Phase, PotentialSpec};

use super::wavefunction::{ManyBodyWavefunction, SolverKind};

/// The one-body potential a run evolves in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landscape {
    /// `x²/2` everywhere (before the quench).
    Harmonic,
    /// Trap, cubic bridge and threshold plateau (after the quench).
    Threshold(PotentialSpec),
    /// No external potential.
    Free,
}

impl Landscape {
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.positions()
            .into_iter()
            .map(|x| match self {
                Landscape::Harmonic => 0.5 * x * x,
                Landscape::Threshold(spec) => spec.evaluate(x, Phase::PostQuench),
                Landscape::Free => 0.0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Clock {
    Real,
    Imaginary,
}

/// Energy contributions of a state, each already divided by its norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
    pub norm: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }
}

pub(crate) struct SplitStep {
    n: usize,
    dims: usize,
    clock: Clock,
    tau: f64,
    kind: SolverKind,
    particles: usize,
    lambda0: f64,
    dx: f64,
    fft: NdFft,
    kinetic_axis: Vec<f64>,
    one_body: Vec<f64>,
    kinetic_factor: Vec<Complex64>,
    potential_factor: Vec<Complex64>,
    pair_powers: [Complex64; 4],
    scratch: Vec<Complex64>,
}

impl SplitStep {
    /// `absorber` is the non-negative imaginary-potential magnitude per grid
    /// point; it only acts in real time.
    pub fn new(
        state: &ManyBodyWavefunction,
        landscape: &Landscape,
        absorber: Option<&[f64]>,
        clock: Clock,
        tau: f64,
    ) -> Self {
        let grid = *state.grid();
        let n = grid.n_points();
        let dims = state.coordinates();
        let one_body = landscape.sample(&grid);
        let kinetic_axis: Vec<f64> = grid.k_fft_order().iter().map(|k| 0.5 * k * k).collect();
        let inv_n = 1.0 / n as f64;
        let kinetic_factor = kinetic_axis
            .iter()
            .map(|&e| phase(clock, e, tau) * inv_n)
            .collect();
        let potential_factor = one_body
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let damp = match (clock, absorber) {
                    (Clock::Real, Some(w)) => (-w[j] * tau / 2.0).exp(),
                    _ => 1.0,
                };
                phase(clock, v, tau / 2.0) * damp
            })
            .collect();
        let contact = if state.kind() == SolverKind::Exact {
            state.lambda0() / grid.dx()
        } else {
            0.0
        };
        let pair = phase(clock, contact, tau / 2.0);
        Self {
            n,
            dims,
            clock,
            tau,
            kind: state.kind(),
            particles: state.particles(),
            lambda0: state.lambda0(),
            dx: grid.dx(),
            fft: NdFft::new(n, dims),
            kinetic_axis,
            one_body,
            kinetic_factor,
            potential_factor,
            pair_powers: [Complex64::new(1.0, 0.0), pair, pair * pair, pair * pair * pair],
            scratch: Vec::new(),
        }
    }

    pub fn step(&mut self, values: &mut [Complex64]) {
        self.potential_half(values);
        self.fft.forward(values);
        apply_separable(values, &self.kinetic_factor, self.n, self.dims, None);
        self.fft.inverse(values);
        self.potential_half(values);
    }

    fn potential_half(&self, values: &mut [Complex64]) {
        apply_separable(values, &self.potential_factor, self.n, self.dims, Some(&self.pair_powers));
        if self.kind == SolverKind::MeanField && self.particles > 1 && self.lambda0 != 0.0 {
            let g = self.lambda0 * (self.particles - 1) as f64;
            for v in values.iter_mut() {
                *v *= phase(self.clock, g * v.norm_sqr(), self.tau / 2.0);
            }
        }
    }

    /// Expectation values of kinetic, one-body and interaction energy.
    pub fn energy(&mut self, values: &[Complex64]) -> EnergyParts {
        let n = self.n;
        let dims = self.dims;
        let w = self.dx.powi(dims as i32);
        let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w;
        if norm == 0.0 {
            return EnergyParts {
                kinetic: 0.0,
                potential: 0.0,
                interaction: 0.0,
                norm,
            };
        }

        self.scratch.clear();
        self.scratch.extend_from_slice(values);
        self.fft.forward(&mut self.scratch);
        let kinetic_weights = separable_sum(&self.kinetic_axis, n, dims);
        let kinetic = self
            .scratch
            .iter()
            .zip(&kinetic_weights)
            .map(|(f, t)| f.norm_sqr() * t)
            .sum::<f64>()
            * w
            / (n as f64).powi(dims as i32);

        let potential_weights = separable_sum(&self.one_body, n, dims);
        let potential = values
            .iter()
            .zip(&potential_weights)
            .map(|(v, u)| v.norm_sqr() * u)
            .sum::<f64>()
            * w;

        let interaction = match self.kind {
            SolverKind::Exact => {
                let c = self.lambda0 / self.dx;
                coincidence_weighted(values, n, dims) * c * w
            }
            SolverKind::MeanField => {
                let pairs = (self.particles * (self.particles - 1)) as f64 / 2.0;
                let quartic: f64 = values.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * w;
                self.lambda0 * pairs * quartic / norm
            }
        };

        let per_particle = match self.kind {
            SolverKind::Exact => 1.0,
            SolverKind::MeanField => self.particles as f64,
        };
        EnergyParts {
            kinetic: kinetic * per_particle / norm,
            potential: potential * per_particle / norm,
            interaction: interaction / norm,
            norm,
        }
    }
}

fn phase(clock: Clock, energy: f64, tau: f64) -> Complex64 {
    match clock {
        Clock::Real => Complex64::from_polar(1.0, -energy * tau),
        Clock::Imaginary => Complex64::new((-energy * tau).exp(), 0.0),
    }
}

/// Multiply by `Π_a f[i_a]` and, if given, by `pair^(number of coincident
/// coordinate pairs)`.
pub(crate) fn apply_separable(
    values: &mut [Complex64],
    f: &[Complex64],
    n: usize,
    dims: usize,
    pair_powers: Option<&[Complex64; 4]>,
) {
    match dims {
        1 => {
            for (v, a) in values.iter_mut().zip(f) {
                *v *= a;
            }
        }
        2 => {
            for (i, row) in values.chunks_exact_mut(n).enumerate() {
                let fi = f[i];
                for (v, b) in row.iter_mut().zip(f) {
                    *v *= fi * b;
                }
                if let Some(p) = pair_powers {
                    row[i] *= p[1];
                }
            }
        }
        3 => {
            for (ij, row) in values.chunks_exact_mut(n).enumerate() {
                let (i, j) = (ij / n, ij % n);
                let fij = f[i] * f[j];
                for (v, c) in row.iter_mut().zip(f) {
                    *v *= fij * c;
                }
                if let Some(p) = pair_powers {
                    if i == j {
                        // (i==j) on the whole row; k==i adds two more pairs
                        for v in row.iter_mut() {
                            *v *= p[1];
                        }
                        row[i] *= p[2];
                    } else {
                        row[i] *= p[1];
                        row[j] *= p[1];
                    }
                }
            }
        }
        _ => unreachable!("at most three coordinates"),
    }
}

/// `Σ_a g[i_a]` evaluated at every point of the product grid.
pub(crate) fn separable_sum(g: &[f64], n: usize, dims: usize) -> Vec<f64> {
    let total = n.pow(dims as u32);
    let mut out = vec![0.0; total];
    for (idx, o) in out.iter_mut().enumerate() {
        let mut rest = idx;
        for _ in 0..dims {
            *o += g[rest % n];
            rest /= n;
        }
    }
    out
}

/// `Σ |Ψ|² · (number of coincident pairs)` over the product grid.
fn coincidence_weighted(values: &[Complex64], n: usize, dims: usize) -> f64 {
    match dims {
        1 => 0.0,
        2 => (0..n).map(|i| values[i * n + i].norm_sqr()).sum(),
        3 => {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let row = &values[(i * n + j) * n..(i * n + j + 1) * n];
                    if i == j {
                        acc += row.iter().map(|v| v.norm_sqr()).sum::<f64>();
                        acc += 2.0 * row[i].norm_sqr();
                    } else {
                        acc += row[i].norm_sqr() + row[j].norm_sqr();
                    }
                }
            }
            acc
        }
        _ => unreachable!("at most three coordinates"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_counting_matches_brute_force() {
        let n = 5;
        let values: Vec<Complex64> = (0..n * n * n).map(|i| Complex64::new(1.0 + i as f64, 0.0)).collect();
        let brute: f64 = (0..n * n * n)
            .map(|idx| {
                let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                let c = (i == j) as usize + (j == k) as usize + (i == k) as usize;
                values[idx].norm_sqr() * c as f64
            })
            .sum();
        assert!((coincidence_weighted(&values, n, 3) - brute).abs() < 1e-9);

        let mut applied = vec![Complex64::new(1.0, 0.0); n * n * n];
        let p = Complex64::new(2.0, 0.0);
        apply_separable(&mut applied, &vec![Complex64::new(1.0, 0.0); n], n, 3, Some(&[Complex64::new(1.0, 0.0), p, p * p, p * p * p]));
        for (idx, v) in applied.iter().enumerate() {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let c = (i == j) as i32 + (j == k) as i32 + (i == k) as i32;
            assert_eq!(v.re, 2f64.powi(c));
        }
    }
}
