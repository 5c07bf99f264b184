//! Two trapped bosons with contact coupling, reduced to one dimension.
//!
//! With `X = (x₁+x₂)/2` and `r = x₁-x₂` the Hamiltonian separates into a
//! centre-of-mass oscillator (ground energy 1/2) and the relative problem
//!
//! ```text
//! h_rel = -d²/dr² + r²/4 + λ₀ δ(r)
//! ```
//!
//! whose bosonic ground state is even in `r`. On the half line `r_j = j h`
//! the even sector is a tridiagonal matrix: the `r = 0` row carries the
//! doubled hopping `2/h²` of the reflected neighbour plus the lattice delta
//! `λ₀/h`, and is symmetrised by a `√2` rescaling of that component. The
//! discretisation error is `O(h²)`; two spacings are combined by Richardson
//! extrapolation.

use crate::error::{Error, Result};

const RADIUS: f64 = 12.0;
const COARSE_STEP: f64 = 0.02;

/// Ground-state energy of two bosons with coupling `lambda0`.
pub fn exact_pair_energy(lambda0: f64) -> Result<f64> {
    if !(lambda0.is_finite() && lambda0 >= 0.0) {
        return Err(Error::Domain(format!("coupling must be finite and non-negative, got {lambda0}")));
    }
    let coarse = relative_ground(lambda0, COARSE_STEP);
    let fine = relative_ground(lambda0, COARSE_STEP / 2.0);
    Ok(0.5 + (4.0 * fine - coarse) / 3.0)
}

/// Lowest even eigenvalue of the discretised relative Hamiltonian.
fn relative_ground(lambda0: f64, h: f64) -> f64 {
    let m = (RADIUS / h).round() as usize + 1;
    let diag: Vec<f64> = (0..m)
        .map(|j| {
            let r = j as f64 * h;
            let mut d = 2.0 / (h * h) + 0.25 * r * r;
            if j == 0 {
                d += lambda0 / h;
            }
            d
        })
        .collect();
    let mut off = vec![-1.0 / (h * h); m - 1];
    off[0] *= std::f64::consts::SQRT_2;
    lowest_eigenvalue(&diag, &off)
}

/// Number of eigenvalues below `x` of a symmetric tridiagonal matrix.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (j, &d) in diag.iter().enumerate() {
        let e2 = if j == 0 { 0.0 } else { off[j - 1] * off[j - 1] };
        q = d - x - if j == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = f64::EPSILON * (d.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

pub(crate) fn lowest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..diag.len() {
        let left = if j > 0 { off[j - 1].abs() } else { 0.0 };
        let right = if j < off.len() { off[j].abs() } else { 0.0 };
        lo = lo.min(diag[j] - left - right);
        hi = hi.max(diag[j] + left + right);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
