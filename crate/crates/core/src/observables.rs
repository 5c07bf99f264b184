//! Reduced densities and the quantities derived from them.
//!
//! The one-body density matrix carries the prefactor `N`, so its diagonal is
//! the density `ρ(x)` with `∫ρ = N·(surviving norm)`. The same holds in
//! momentum space with `dk` in place of `dx`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Grid, Representation};
use crate::solver::{ManyBodyWavefunction, SolverKind};

/// Relative density below which correlators are left undefined.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Allowed anti-Hermitian part, relative to the largest entry.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Default lower momentum cut for peak detection.
pub const DEFAULT_K_FLOOR: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct OneBodyDensityMatrix {
    matrix: DMatrix<Complex64>,
    representation: Representation,
    particles: usize,
    weight: f64,
}

impl OneBodyDensityMatrix {
    /// Build from a raw matrix, e.g. for toy checks. `weight` is the
    /// quadrature weight of the representation (dx or dk).
    pub fn from_matrix(
        matrix: DMatrix<Complex64>,
        representation: Representation,
        particles: usize,
        weight: f64,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Usage("density matrix must be square".into()));
        }
        if !(weight > 0.0) || particles == 0 {
            return Err(Error::Usage("positive weight and particle number required".into()));
        }
        Ok(Self {
            matrix,
            representation,
            particles,
            weight,
        })
    }

    pub fn position(state: &ManyBodyWavefunction) -> Self {
        let g = state.grid();
        build(state, state.values(), Representation::Position, g.dx())
    }

    pub fn momentum(state: &ManyBodyWavefunction) -> Self {
        let field = state.momentum_field();
        build(state, field.values(), Representation::Momentum, state.grid().dk())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Σ ρ(x,x) w`, equal to `N` times the surviving norm.
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum::<f64>() * self.weight
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Integrity(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(())
    }

    /// Hermitian part of `ρ·w`, the operator whose eigenvalues are occupations.
    fn weighted_operator(&self) -> DMatrix<Complex64> {
        let m = &self.matrix * Complex64::new(self.weight, 0.0);
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

/// `ρ(a|b) = N w^{N-1} Σ_rest Ψ(a,rest) Ψ*(b,rest)` for exact states and
/// `N φ(a) φ*(b)` for the mean-field orbital.
fn build(
    state: &ManyBodyWavefunction,
    values: &[Complex64],
    representation: Representation,
    weight: f64,
) -> OneBodyDensityMatrix {
    let n = state.grid().n_points();
    let particles = state.particles();
    let (cols, scale) = match state.kind() {
        SolverKind::Exact => (n.pow(particles as u32 - 1), particles as f64 * weight.powi(particles as i32 - 1)),
        SolverKind::MeanField => (1, particles as f64),
    };
    let a = DMatrix::from_row_slice(n, cols, values);
    let matrix = (&a * a.adjoint()) * Complex64::new(scale, 0.0);
    OneBodyDensityMatrix {
        matrix,
        representation,
        particles,
        weight,
    }
}

#[derive(Debug, Clone)]
pub struct NaturalDecomposition {
    /// Eigenvalues of `ρ·w`, descending; they sum to `N·norm`.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalues / N`.
    pub fractions: Vec<f64>,
    /// Natural orbitals, each normalised to `Σ|φ|² w = 1`, in eigenvalue order.
    pub orbitals: Vec<Vec<Complex64>>,
}

pub fn natural_decomposition(rho: &OneBodyDensityMatrix) -> Result<NaturalDecomposition> {
    rho.check_hermitian()?;
    let eig = rho.weighted_operator().symmetric_eigen();
    let mut order: Vec<usize> = (0..rho.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n = rho.particles() as f64;
    let s = 1.0 / rho.weight().sqrt();
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let orbitals = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().map(|z| z * s).collect())
        .collect();
    Ok(NaturalDecomposition {
        fractions: eigenvalues.iter().map(|e| e / n).collect(),
        eigenvalues,
        orbitals,
    })
}

/// Occupation fractions only (no orbitals), descending.
pub fn occupation_fractions(rho: &OneBodyDensityMatrix) -> Result<Vec<f64>> {
    rho.check_hermitian()?;
    let mut values: Vec<f64> = rho.weighted_operator().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let n = rho.particles() as f64;
    Ok(values.into_iter().map(|e| e / n).collect())
}

/// Diagonal of the density matrix in its own representation.
pub fn density(rho: &OneBodyDensityMatrix) -> Vec<f64> {
    rho.matrix().diagonal().iter().map(|z| z.re.max(0.0)).collect()
}

/// Diagonal of a momentum-space density matrix.
pub fn momentum_density(rho: &OneBodyDensityMatrix) -> Result<Vec<f64>> {
    if rho.representation() != Representation::Momentum {
        return Err(Error::Usage("momentum density needs a momentum-space matrix".into()));
    }
    Ok(density(rho))
}

/// One-body position density straight from the state, without forming `ρ⁽¹⁾`.
pub fn density_of(state: &ManyBodyWavefunction) -> Vec<f64> {
    marginal(state, state.values(), state.grid().dx())
}

/// One-body momentum density on the ascending k grid.
pub fn momentum_density_of(state: &ManyBodyWavefunction) -> Vec<f64> {
    let field = state.momentum_field();
    marginal(state, field.values(), state.grid().dk())
}

fn marginal(state: &ManyBodyWavefunction, values: &[Complex64], weight: f64) -> Vec<f64> {
    let n = state.grid().n_points();
    let particles = state.particles();
    match state.kind() {
        SolverKind::MeanField => values.iter().map(|v| particles as f64 * v.norm_sqr()).collect(),
        SolverKind::Exact => {
            let rest = n.pow(particles as u32 - 1);
            let scale = particles as f64 * weight.powi(particles as i32 - 1);
            values
                .chunks_exact(rest)
                .map(|row| row.iter().map(|v| v.norm_sqr()).sum::<f64>() * scale)
                .collect()
        }
    }
}

/// Fraction of the particles left of the barrier top `x_m`.
///
/// Each grid point owns the cell `[x_j - dx/2, x_j + dx/2)`; the cell
/// containing `x_m` contributes the part left of it. Absorbed norm is simply
/// missing from the density and so counts as escaped.
pub fn nonescape_probability(density: &[f64], grid: &Grid, x_m: f64, particles: usize) -> Result<f64> {
    if density.len() != grid.n_points() {
        return Err(Error::Usage("density does not match the grid".into()));
    }
    if !(x_m > grid.x_min() && x_m < grid.x_max()) {
        return Err(Error::Config(format!(
            "barrier position {x_m} lies outside the grid ({}, {})",
            grid.x_min(),
            grid.x_max()
        )));
    }
    if particles == 0 {
        return Err(Error::Usage("particle number must be positive".into()));
    }
    let dx = grid.dx();
    let mut acc = 0.0;
    for (j, &rho) in density.iter().enumerate() {
        let left = grid.x(j) - 0.5 * dx;
        let covered = ((x_m - left) / dx).clamp(0.0, 1.0);
        if covered == 0.0 {
            break;
        }
        acc += rho * dx * covered;
    }
    Ok((acc / particles as f64).clamp(0.0, 1.0))
}

/// Dense matrix with undefined (masked) entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix<T> {
    n: usize,
    values: Vec<Option<T>>,
}

impl<T: Copy> MaskedMatrix<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.values[row * self.n + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<T>]> {
        self.values.chunks_exact(self.n)
    }
}

fn defined_mask(density: &[f64]) -> Vec<bool> {
    let max = density.iter().copied().fold(0.0, f64::max);
    let floor = DENSITY_FLOOR * max;
    density.iter().map(|&d| max > 0.0 && d > floor).collect()
}

/// `g⁽¹⁾(a,b) = ρ⁽¹⁾(a|b)/√(ρ(a)ρ(b))`, undefined where either density is
/// below the floor.
pub fn g1(rho: &OneBodyDensityMatrix) -> MaskedMatrix<Complex64> {
    let d = density(rho);
    let ok = defined_mask(&d);
    let n = rho.dim();
    let mut values = vec![None; n * n];
    for i in 0..n {
        for j in 0..n {
            if ok[i] && ok[j] {
                values[i * n + j] = Some(if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    rho.matrix()[(i, j)] / (d[i] * d[j]).sqrt()
                });
            }
        }
    }
    MaskedMatrix { n, values }
}

/// Diagonal of the two-body density, `ρ⁽²⁾(a,b)`, with prefactor `N(N-1)`.
#[derive(Debug, Clone)]
pub struct TwoBodyDiagonal {
    n: usize,
    values: Vec<f64>,
    representation: Representation,
    weight: f64,
    particles: usize,
}

impl TwoBodyDiagonal {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.n + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// `Σ ρ⁽²⁾ w²`, equal to `N(N-1)` times the surviving norm.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.weight * self.weight
    }
}

pub fn two_body_diagonal(state: &ManyBodyWavefunction, representation: Representation) -> Result<TwoBodyDiagonal> {
    let particles = state.particles();
    if particles < 2 {
        return Err(Error::Domain("the two-body density needs at least two particles".into()));
    }
    let grid = state.grid();
    let n = grid.n_points();
    let (values, weight) = match representation {
        Representation::Position => (state.values().to_vec(), grid.dx()),
        Representation::Momentum => (state.momentum_field().into_values(), grid.dk()),
    };
    let pairs = (particles * (particles - 1)) as f64;
    let out = match state.kind() {
        SolverKind::MeanField => {
            // the orbital carries the surviving norm; keep Σρ⁽²⁾ = N(N-1)·norm
            let p: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
            let norm = p.iter().sum::<f64>() * weight;
            let scale = if norm > 0.0 { pairs / norm } else { 0.0 };
            let mut out = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    out[a * n + b] = scale * p[a] * p[b];
                }
            }
            out
        }
        SolverKind::Exact => {
            let rest = n.pow(particles as u32 - 2);
            let scale = pairs * weight.powi(particles as i32 - 2);
            values
                .chunks_exact(rest)
                .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>() * scale)
                .collect()
        }
    };
    Ok(TwoBodyDiagonal {
        n,
        values: out,
        representation,
        weight,
        particles,
    })
}

/// `g⁽²⁾(a,b) = ρ⁽²⁾(a,b)/(ρ(a)ρ(b))` with the same masking as [`g1`].
pub fn g2(two: &TwoBodyDiagonal, density: &[f64]) -> Result<MaskedMatrix<f64>> {
    let n = two.dim();
    if density.len() != n {
        return Err(Error::Usage("density does not match the two-body grid".into()));
    }
    let ok = defined_mask(density);
    let mut values = vec![None; n * n];
    for a in 0..n {
        for b in 0..n {
            if ok[a] && ok[b] {
                values[a * n + b] = Some(two.get(a, b) / (density[a] * density[b]));
            }
        }
    }
    Ok(MaskedMatrix { n, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub k: f64,
    pub height: f64,
    /// Prominence as a fraction of the largest density above `k_floor`.
    pub prominence: f64,
}

/// Local maxima of a momentum density at `k > k_floor`, sorted by
/// descending `k`.
///
/// A maximum's prominence is its height above the higher of the two lowest
/// points separating it from taller terrain (or the end of the range) on
/// either side. Positions are refined by a parabola through the three
/// surrounding samples.
pub fn detect_peaks(momentum_density: &[f64], k_values: &[f64], k_floor: f64, min_prominence: f64) -> Result<Vec<Peak>> {
    if momentum_density.len() != k_values.len() {
        return Err(Error::Usage("density and momentum grid differ in length".into()));
    }
    let idx: Vec<usize> = (0..k_values.len()).filter(|&j| k_values[j] > k_floor).collect();
    if idx.len() < 3 {
        return Ok(Vec::new());
    }
    let y: Vec<f64> = idx.iter().map(|&j| momentum_density[j]).collect();
    let top = y.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return Ok(Vec::new());
    }
    let mut peaks = Vec::new();
    for p in 1..y.len() - 1 {
        if !(y[p] > y[p - 1] && y[p] >= y[p + 1]) {
            continue;
        }
        let mut left_min = y[p];
        for q in (0..p).rev() {
            if y[q] > y[p] {
                break;
            }
            left_min = left_min.min(y[q]);
        }
        let mut right_min = y[p];
        for &v in &y[p + 1..] {
            if v > y[p] {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = (y[p] - left_min.max(right_min)) / top;
        if prominence < min_prominence {
            continue;
        }
        let (a, b, c) = (y[p - 1], y[p], y[p + 1]);
        let curvature = a - 2.0 * b + c;
        let shift = if curvature < 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
        let dk = k_values[idx[p + 1]] - k_values[idx[p]];
        peaks.push(Peak {
            k: k_values[idx[p]] + shift * dk,
            height: b - 0.25 * (a - c) * shift,
            prominence,
        });
    }
    peaks.sort_by(|a, b| b.k.total_cmp(&a.k));
    Ok(peaks)
}
