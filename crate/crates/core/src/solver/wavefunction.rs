use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{to_momentum, ComplexField, Grid, NdFft, Representation};

/// Largest particle number handled on the full product grid.
pub const MAX_EXACT_PARTICLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Full `N`-coordinate amplitude on the product grid.
    Exact,
    /// Single orbital shared by all `N` bosons.
    MeanField,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::MeanField => "meanfield",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverKind::Exact),
            "meanfield" => Ok(SolverKind::MeanField),
            other => Err(Error::Config(format!("unknown solver kind '{other}'"))),
        }
    }
}

/// State of `N` bosons with contact coupling `lambda0`.
///
/// For [`SolverKind::Exact`] the field is the full amplitude over the
/// `N`-fold product grid; for [`SolverKind::MeanField`] it is the shared
/// orbital, normalised to the surviving fraction.
#[derive(Debug, Clone)]
pub struct ManyBodyWavefunction {
    grid: Grid,
    particles: usize,
    lambda0: f64,
    kind: SolverKind,
    field: ComplexField,
}

impl ManyBodyWavefunction {
    pub fn new(
        grid: Grid,
        particles: usize,
        lambda0: f64,
        kind: SolverKind,
        field: ComplexField,
    ) -> Result<Self> {
        if particles == 0 {
            return Err(Error::Config("particle number must be positive".into()));
        }
        if !(lambda0.is_finite() && lambda0 >= 0.0) {
            return Err(Error::Config(format!(
                "interaction strength must be finite and non-negative, got {lambda0}"
            )));
        }
        let coordinates = match kind {
            SolverKind::Exact => {
                if particles > MAX_EXACT_PARTICLES {
                    return Err(Error::Config(format!(
                        "exact solver supports at most {MAX_EXACT_PARTICLES} particles, got {particles}"
                    )));
                }
                particles
            }
            SolverKind::MeanField => 1,
        };
        if field.particles() != coordinates {
            return Err(Error::Usage(format!(
                "{} state with N = {particles} needs a {coordinates}-coordinate field",
                kind.as_str()
            )));
        }
        if field.representation() != Representation::Position {
            return Err(Error::Usage("states are stored in position space".into()));
        }
        if field.values().len() != grid.n_points().pow(coordinates as u32) {
            return Err(Error::Usage("field does not match the grid".into()));
        }
        Ok(Self {
            grid,
            particles,
            lambda0,
            kind,
            field,
        })
    }

    /// Symmetric product of one normalised orbital, as either kind.
    pub fn product_state(
        grid: Grid,
        particles: usize,
        lambda0: f64,
        kind: SolverKind,
        orbital: &[Complex64],
    ) -> Result<Self> {
        let n = grid.n_points();
        if orbital.len() != n {
            return Err(Error::Usage("orbital does not match the grid".into()));
        }
        let values = match kind {
            SolverKind::MeanField => orbital.to_vec(),
            SolverKind::Exact => {
                let mut values = vec![Complex64::new(1.0, 0.0); n.pow(particles as u32)];
                for (idx, v) in values.iter_mut().enumerate() {
                    let mut rest = idx;
                    for _ in 0..particles {
                        *v *= orbital[rest % n];
                        rest /= n;
                    }
                }
                values
            }
        };
        let coords = if kind == SolverKind::Exact { particles } else { 1 };
        let field = ComplexField::new(values, coords, Representation::Position, &grid)?;
        Self::new(grid, particles, lambda0, kind, field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        self.field.values_mut()
    }

    pub fn values(&self) -> &[Complex64] {
        self.field.values()
    }

    /// Number of grid coordinates the field carries.
    pub fn coordinates(&self) -> usize {
        self.field.particles()
    }

    /// Surviving norm `∫|Ψ|²` (1 at preparation, lower after absorption).
    pub fn norm(&self) -> f64 {
        self.field.norm_sqr(&self.grid)
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let s = 1.0 / norm.sqrt();
            for v in self.field.values_mut() {
                *v *= s;
            }
        }
    }

    /// Momentum-space amplitude over every coordinate.
    pub fn momentum_field(&self) -> ComplexField {
        to_momentum(&self.field, &self.grid).expect("state is stored in position space")
    }

    /// Largest pointwise violation of exchange symmetry over all pairs.
    pub fn symmetry_defect(&self) -> f64 {
        if self.kind == SolverKind::MeanField || self.particles < 2 {
            return 0.0;
        }
        let n = self.grid.n_points();
        let values = self.field.values();
        let mut worst = 0.0f64;
        let mut idx = [0usize; MAX_EXACT_PARTICLES];
        for (flat, v) in values.iter().enumerate() {
            unflatten(flat, n, self.particles, &mut idx);
            for a in 0..self.particles {
                for b in (a + 1)..self.particles {
                    let mut swapped = idx;
                    swapped.swap(a, b);
                    let other = flatten(&swapped[..self.particles], n);
                    worst = worst.max((v - values[other]).norm());
                }
            }
        }
        worst
    }

    /// Replace the amplitude by its average over all coordinate permutations.
    pub fn symmetrize(&mut self) {
        if self.kind == SolverKind::MeanField || self.particles < 2 {
            return;
        }
        let n = self.grid.n_points();
        let source = self.field.values().to_vec();
        let perms = permutations(self.particles);
        let scale = 1.0 / perms.len() as f64;
        let mut idx = [0usize; MAX_EXACT_PARTICLES];
        let mut permuted = [0usize; MAX_EXACT_PARTICLES];
        for (flat, v) in self.field.values_mut().iter_mut().enumerate() {
            unflatten(flat, n, self.particles, &mut idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &perms {
                for (slot, &from) in p.iter().enumerate() {
                    permuted[slot] = idx[from];
                }
                acc += source[flatten(&permuted[..self.particles], n)];
            }
            *v = acc * scale;
        }
    }

    /// Copy this state onto a larger grid with identical spacing whose point
    /// `offset` coincides with this grid's first point. Outside the source
    /// window the amplitude is zero.
    pub fn embed(&self, target: Grid, offset: usize) -> Result<Self> {
        if (target.dx() - self.grid.dx()).abs() > 1e-12 * self.grid.dx()
            || offset + self.grid.n_points() > target.n_points()
            || (target.x(offset) - self.grid.x_min()).abs() > 1e-9 * self.grid.dx().max(1.0)
        {
            return Err(Error::Usage("target grid does not contain this lattice".into()));
        }
        let small = self.grid.n_points();
        let big = target.n_points();
        let coords = self.coordinates();
        let mut values = vec![Complex64::new(0.0, 0.0); big.pow(coords as u32)];
        let mut idx = [0usize; MAX_EXACT_PARTICLES];
        for (flat, v) in self.field.values().iter().enumerate() {
            unflatten(flat, small, coords, &mut idx);
            let mut shifted = idx;
            for s in shifted.iter_mut().take(coords) {
                *s += offset;
            }
            values[flatten(&shifted[..coords], big)] = *v;
        }
        let field = ComplexField::new(values, coords, Representation::Position, &target)?;
        Self::new(target, self.particles, self.lambda0, self.kind, field)
    }

    /// Spectral interpolation onto a grid with the same extent and a
    /// multiple of the points (zero padding in momentum space).
    pub fn refine(&self, fine: Grid) -> Result<Self> {
        let nc = self.grid.n_points();
        let nf = fine.n_points();
        if nf < nc
            || nf % nc != 0
            || (fine.x_min() - self.grid.x_min()).abs() > 1e-12 * self.grid.length()
            || (fine.x_max() - self.grid.x_max()).abs() > 1e-12 * self.grid.length()
        {
            return Err(Error::Usage("refinement needs the same extent and a multiple of the points".into()));
        }
        let coords = self.coordinates();
        let mut coarse = self.field.values().to_vec();
        NdFft::new(nc, coords).forward(&mut coarse);
        // coarse FFT index -> fine FFT index; the Nyquist column is split evenly
        let map = |i: usize| if i < nc / 2 { i } else { i + nf - nc };
        let scale = 1.0 / (nc as f64).powi(coords as i32);
        let mut values = vec![Complex64::new(0.0, 0.0); nf.pow(coords as u32)];
        let mut idx = [0usize; MAX_EXACT_PARTICLES];
        let mut out = [0usize; MAX_EXACT_PARTICLES];
        for (flat, v) in coarse.iter().enumerate() {
            unflatten(flat, nc, coords, &mut idx);
            let nyquist = idx[..coords].iter().filter(|&&i| i == nc / 2).count();
            let share = scale / (1u32 << nyquist) as f64;
            // spread Nyquist components symmetrically over ±k_max
            for mask in 0..(1usize << nyquist) {
                let mut bit = 0;
                for d in 0..coords {
                    out[d] = if idx[d] == nc / 2 {
                        let hi = (mask >> bit) & 1 == 1;
                        bit += 1;
                        if hi { nf - nc / 2 } else { nc / 2 }
                    } else {
                        map(idx[d])
                    };
                }
                values[flatten(&out[..coords], nf)] += v * share;
            }
        }
        NdFft::new(nf, coords).inverse(&mut values);
        let field = ComplexField::new(values, coords, Representation::Position, &fine)?;
        Self::new(fine, self.particles, self.lambda0, self.kind, field)
    }

    /// Same state with a different coupling label (used to warm-start).
    pub fn with_lambda0(mut self, lambda0: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 >= 0.0) {
            return Err(Error::Config(format!("invalid interaction strength {lambda0}")));
        }
        self.lambda0 = lambda0;
        Ok(self)
    }
}

pub(crate) fn unflatten(mut flat: usize, n: usize, dims: usize, out: &mut [usize]) {
    for d in (0..dims).rev() {
        out[d] = flat % n;
        flat /= n;
    }
}

pub(crate) fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    match k {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
    }
}
