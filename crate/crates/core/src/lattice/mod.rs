//! Uniform periodic grid, its conjugate momentum lattice, quadrature, and the
//! position/momentum transform.
//!
//! Units are dimensionless with `m = ħ = 1`. A grid with `n` points covers
//! `[x_min, x_max)`; the point at `x_max` is the periodic image of `x_min`.
//!
//! Momentum-space fields are stored with continuum normalisation,
//! `φ(k) = (2π)^{-1/2} ∫ ψ(x) e^{-ikx} dx`, sampled on the ascending lattice
//! `k_j = (j - n/2)·dk`. With that convention quadrature uses `dx` in
//! position space and `dk` in momentum space and Parseval holds without any
//! extra bookkeeping.

mod fft;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use fft::NdFft;

/// Smallest accepted number of grid points.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
}

/// Build a grid; `n_points` must be a power of two and at least [`MIN_POINTS`].
pub fn make_grid(x_min: f64, x_max: f64, n_points: usize) -> Result<Grid> {
    Grid::new(x_min, x_max, n_points)
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Config(format!(
                "grid extent must be positive, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid needs a power-of-two point count >= {MIN_POINTS}, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            dx: (x_max - x_min) / n_points as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Momentum lattice spacing `2π / (n·dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Largest representable momentum magnitude, `π/dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    /// Ascending momentum lattice covering `[-π/dx, π/dx)`.
    pub fn k_values(&self) -> Vec<f64> {
        let half = (self.n_points / 2) as f64;
        (0..self.n_points)
            .map(|j| (j as f64 - half) * self.dk())
            .collect()
    }

    /// Momenta in FFT index order (0, dk, …, -dk).
    pub fn k_fft_order(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n)
            .map(|l| {
                let signed = if l < n / 2 { l as f64 } else { l as f64 - n as f64 };
                signed * self.dk()
            })
            .collect()
    }

    /// Index of the grid point closest to `x`, if `x` lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        if x < self.x_min || x >= self.x_max {
            return None;
        }
        let j = ((x - self.x_min) / self.dx).round() as usize;
        Some(j.min(self.n_points - 1))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x < self.x_max
    }

    /// Riemann sum `Σ f_j · dx` (periodic convention, no endpoint weights).
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(values.iter().sum::<f64>() * self.dx)
    }

    /// Riemann sum `Σ f_j · dk` over the momentum lattice.
    pub fn integrate_momentum(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(values.iter().sum::<f64>() * self.dk())
    }

    /// Quadrature weight of one lattice cell in the given representation.
    pub fn weight(&self, representation: Representation) -> f64 {
        match representation {
            Representation::Position => self.dx,
            Representation::Momentum => self.dk(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::Usage(format!(
                "field has {len} samples, grid has {}",
                self.n_points
            )));
        }
        Ok(())
    }

    /// A grid with the same spacing and a point set that is a sub-lattice of
    /// this one, covering `[-half_width, half_width]` clipped to this grid.
    ///
    /// Returns the window and the index offset of its first point.
    pub fn centered_window(&self, half_width: f64) -> Option<(Grid, usize)> {
        let first = ((-half_width - self.x_min) / self.dx).floor().max(0.0) as usize;
        let needed = ((half_width - self.x(first)) / self.dx).ceil() as usize + 1;
        let n = needed.next_power_of_two().max(MIN_POINTS);
        if first + n > self.n_points || n >= self.n_points {
            return None;
        }
        let x0 = self.x(first);
        let window = Grid {
            x_min: x0,
            x_max: x0 + n as f64 * self.dx,
            n_points: n,
            dx: self.dx,
        };
        Some((window, first))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Position,
    Momentum,
}

/// Complex amplitudes over the `particles`-fold product of a grid, row-major
/// with the first coordinate slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Vec<Complex64>,
    particles: usize,
    representation: Representation,
}

impl ComplexField {
    pub fn new(
        values: Vec<Complex64>,
        particles: usize,
        representation: Representation,
        grid: &Grid,
    ) -> Result<Self> {
        if particles == 0 {
            return Err(Error::Usage("a field needs at least one coordinate".into()));
        }
        let expected = grid.n_points().pow(particles as u32);
        if values.len() != expected {
            return Err(Error::Usage(format!(
                "{particles}-coordinate field needs {expected} samples, got {}",
                values.len()
            )));
        }
        Ok(Self {
            values,
            particles,
            representation,
        })
    }

    /// Single-coordinate position-space field sampled from `f`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            values: grid.positions().into_iter().map(f).collect(),
            particles: 1,
            representation: Representation::Position,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// `∫ |values|²` over all coordinates with the representation's weight.
    pub fn norm_sqr(&self, grid: &Grid) -> f64 {
        let w = grid.weight(self.representation).powi(self.particles as i32);
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w
    }
}

/// Per-axis phase/scale linking FFT output to continuum-normalised `φ(k_l)`.
fn momentum_factors(grid: &Grid) -> Vec<Complex64> {
    let scale = grid.dx() / (2.0 * PI).sqrt();
    grid.k_fft_order()
        .into_iter()
        .map(|k| Complex64::from_polar(scale, -k * grid.x_min()))
        .collect()
}

/// Reorder every axis between FFT index order and ascending momentum order.
/// For even `n` the permutation is its own inverse.
fn swap_halves(values: &mut [Complex64], n: usize, particles: usize) {
    let half = n / 2;
    for axis in 0..particles {
        let stride = n.pow((particles - 1 - axis) as u32);
        let block = n * stride;
        for base in (0..values.len()).step_by(block) {
            for inner in 0..stride {
                for m in 0..half {
                    values.swap(base + m * stride + inner, base + (m + half) * stride + inner);
                }
            }
        }
    }
}

fn apply_axis_factors(values: &mut [Complex64], factors: &[Complex64], particles: usize) {
    let n = factors.len();
    for (idx, v) in values.iter_mut().enumerate() {
        let mut rest = idx;
        let mut f = Complex64::new(1.0, 0.0);
        for _ in 0..particles {
            f *= factors[rest % n];
            rest /= n;
        }
        *v *= f;
    }
}

/// Transform every coordinate of a position-space field to momentum space.
pub fn to_momentum(field: &ComplexField, grid: &Grid) -> Result<ComplexField> {
    if field.representation != Representation::Position {
        return Err(Error::Usage("to_momentum needs a position-space field".into()));
    }
    let n = grid.n_points();
    let particles = field.particles;
    if field.values.len() != n.pow(particles as u32) {
        return Err(Error::Usage("field does not live on this grid".into()));
    }
    let mut values = field.values.clone();
    NdFft::new(n, particles).forward(&mut values);
    apply_axis_factors(&mut values, &momentum_factors(grid), particles);
    swap_halves(&mut values, n, particles);
    Ok(ComplexField {
        values,
        particles,
        representation: Representation::Momentum,
    })
}

/// Inverse of [`to_momentum`].
pub fn to_position(field: &ComplexField, grid: &Grid) -> Result<ComplexField> {
    if field.representation != Representation::Momentum {
        return Err(Error::Usage("to_position needs a momentum-space field".into()));
    }
    let n = grid.n_points();
    let particles = field.particles;
    if field.values.len() != n.pow(particles as u32) {
        return Err(Error::Usage("field does not live on this grid".into()));
    }
    let mut values = field.values.clone();
    swap_halves(&mut values, n, particles);
    let inv: Vec<Complex64> = momentum_factors(grid)
        .into_iter()
        .map(|f| 1.0 / (f * n as f64))
        .collect();
    apply_axis_factors(&mut values, &inv, particles);
    NdFft::new(n, particles).inverse(&mut values);
    Ok(ComplexField {
        values,
        particles,
        representation: Representation::Position,
    })
}

/// Quadrature of a real field on the position grid.
pub fn integrate(values: &[f64], grid: &Grid) -> Result<f64> {
    grid.integrate(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid, x0: f64, k0: f64) -> ComplexField {
        let norm = PI.powf(-0.25);
        ComplexField::from_fn(grid, |x| {
            Complex64::from_polar(norm * (-(x - x0) * (x - x0) / 2.0).exp(), k0 * x)
        })
    }

    #[test]
    fn spacing_examples() {
        let g = make_grid(-8.0, 8.0, 256).unwrap();
        assert_eq!(g.dx(), 0.0625);
        let g = make_grid(-5.0, 27.0, 1024).unwrap();
        assert!((g.dk() - 2.0 * PI / 32.0).abs() < 1e-15);
        assert!((g.dk() - 0.19635).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_configurations() {
        assert!(matches!(make_grid(0.0, -1.0, 64), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 1.0, 4), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 1.0, 100), Err(Error::Config(_))));
        assert!(matches!(make_grid(1.0, 1.0, 64), Err(Error::Config(_))));
    }

    #[test]
    fn momentum_lattice_layout() {
        let g = make_grid(-8.0, 8.0, 64).unwrap();
        let k = g.k_values();
        assert!((k[0] + PI / g.dx()).abs() < 1e-12);
        assert!((k[63] - (PI / g.dx() - g.dk())).abs() < 1e-12);
        assert!(k.windows(2).all(|w| (w[1] - w[0] - g.dk()).abs() < 1e-12));
        assert_eq!(k[32], 0.0);
    }

    #[test]
    fn quadrature_examples() {
        let g = make_grid(-8.0, 8.0, 256).unwrap();
        let ones = vec![1.0; 256];
        assert!((integrate(&ones, &g).unwrap() - 16.0).abs() < 1e-12 * 16.0);
        assert_eq!(integrate(&vec![0.0; 256], &g).unwrap(), 0.0);
        let rho: Vec<f64> = g.positions().iter().map(|x| (-x * x).exp() / PI.sqrt()).collect();
        assert!((integrate(&rho, &g).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(integrate(&ones[..10], &g), Err(Error::Usage(_))));
    }

    #[test]
    fn gaussian_is_self_conjugate() {
        let g = make_grid(-16.0, 16.0, 256).unwrap();
        let phi = to_momentum(&gaussian(&g, 0.0, 0.0), &g).unwrap();
        for (k, v) in g.k_values().iter().zip(phi.values()) {
            let expect = PI.powf(-0.25) * (-k * k / 2.0).exp();
            assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn shift_theorem_moves_peak() {
        let g = make_grid(-16.0, 16.0, 256).unwrap();
        let k0 = 1.5;
        let phi = to_momentum(&gaussian(&g, 0.0, k0), &g).unwrap();
        let (imax, _) = phi
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!((g.k_values()[imax] - k0).abs() <= g.dk() / 2.0 + 1e-12);
        for (k, v) in g.k_values().iter().zip(phi.values()) {
            let expect = PI.powf(-0.25) * (-(k - k0) * (k - k0) / 2.0).exp();
            assert!((v.norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn representation_mismatch_is_usage_error() {
        let g = make_grid(-4.0, 4.0, 16).unwrap();
        let f = gaussian(&g, 0.0, 0.0);
        let m = to_momentum(&f, &g).unwrap();
        assert!(matches!(to_momentum(&m, &g), Err(Error::Usage(_))));
        assert!(matches!(to_position(&f, &g), Err(Error::Usage(_))));
    }

    #[test]
    fn two_coordinate_round_trip() {
        let g = make_grid(-3.0, 5.0, 32).unwrap();
        let values: Vec<Complex64> = (0..32 * 32)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let f = ComplexField::new(values, 2, Representation::Position, &g).unwrap();
        let m = to_momentum(&f, &g).unwrap();
        assert!((m.norm_sqr(&g) - f.norm_sqr(&g)).abs() < 1e-12 * f.norm_sqr(&g));
        let back = to_position(&m, &g).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn window_is_a_sublattice() {
        let g = make_grid(-8.0, 120.0, 2048).unwrap();
        let (w, off) = g.centered_window(8.0).unwrap();
        assert_eq!(w.dx(), g.dx());
        assert_eq!(w.x(0), g.x(off));
        assert!(w.x_min() <= -8.0 && w.x(w.n_points() - 1) >= 8.0 - g.dx());
        assert!(make_grid(-8.0, 8.0, 64).unwrap().centered_window(8.0).is_none());
    }
}
