//! Harmonic trap before the quench and the open threshold potential after it.
//!
//! After the quench the trap `x²/2` is kept for `x ≤ 2`, bridged by a cubic
//! `P(x) = A x³ + B x² + C x + D` on `(2, 4)`, and held at the threshold `T`
//! for `x ≥ 4`. The cubic matches value and slope of its neighbours at both
//! junctions, which fixes the four coefficients as affine functions of `T`.
//!
//! The commonly quoted coefficient table lists `B` and `D` at `T = 0.5` as
//! `8.375` and `21.5` without signs. The continuity conditions force both to
//! be negative (`B = -8.375`, `D = -21.5`); positive values would give
//! `P(2) = 85.5` instead of `2`. The table is read as magnitudes here.

use std::io::Write;

use crate::error::{Error, Result};

/// Left junction with the harmonic trap.
pub const X_C1: f64 = 2.0;
/// Right junction with the threshold plateau.
pub const X_C2: f64 = 4.0;

/// Thresholds at or above this value leave no barrier above the plateau.
pub const MAX_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Coefficients {
    pub fn value(&self, x: f64) -> f64 {
        ((self.a * x + self.b) * x + self.c) * x + self.d
    }

    pub fn slope(&self, x: f64) -> f64 {
        (3.0 * self.a * x + 2.0 * self.b) * x + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PreQuench,
    PostQuench,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    threshold: f64,
    coefficients: Coefficients,
    barrier: f64,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !threshold.is_finite() || threshold >= MAX_THRESHOLD {
        return Err(Error::Domain(format!(
            "threshold {threshold} must be finite and below {MAX_THRESHOLD}"
        )));
    }
    Ok(())
}

/// Closed-form bridge coefficients for threshold `T`.
pub fn polynomial_coefficients(threshold: f64) -> Result<Coefficients> {
    check_threshold(threshold)?;
    let t = threshold;
    Ok(Coefficients {
        a: 1.0 - t / 4.0,
        b: 2.25 * t - 9.5,
        c: -6.0 * t + 28.0,
        d: 5.0 * t - 24.0,
    })
}

/// Position of the barrier top, `2 + 1/(3 - 3T/4)`.
pub fn barrier_maximum(threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    Ok(X_C1 + 1.0 / (3.0 - 0.75 * threshold))
}

impl PotentialSpec {
    pub fn new(threshold: f64) -> Result<Self> {
        Ok(Self {
            threshold,
            coefficients: polynomial_coefficients(threshold)?,
            barrier: barrier_maximum(threshold)?,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn coefficients(&self) -> Coefficients {
        self.coefficients
    }

    /// Barrier-top position `x_m`; left of it is the trapped ("IN") region.
    pub fn barrier_position(&self) -> f64 {
        self.barrier
    }

    pub fn barrier_height(&self) -> f64 {
        self.coefficients.value(self.barrier)
    }

    pub fn evaluate(&self, x: f64, phase: Phase) -> f64 {
        match phase {
            Phase::PreQuench => 0.5 * x * x,
            Phase::PostQuench => {
                if x <= X_C1 {
                    0.5 * x * x
                } else if x < X_C2 {
                    self.coefficients.value(x)
                } else {
                    self.threshold
                }
            }
        }
    }

    pub fn sample(&self, xs: &[f64], phase: Phase) -> Vec<f64> {
        xs.iter().map(|&x| self.evaluate(x, phase)).collect()
    }

    /// Two-column `x,V` CSV of the post-quench potential.
    pub fn write_csv<W: Write>(&self, out: &mut W, xs: &[f64], phase: Phase) -> std::io::Result<()> {
        writeln!(out, "x,V")?;
        for &x in xs {
            writeln!(out, "{x:.10e},{:.16e}", self.evaluate(x, phase))?;
        }
        Ok(())
    }
}

/// Free-function form of [`PotentialSpec::evaluate`].
pub fn evaluate(x: f64, spec: &PotentialSpec, phase: Phase) -> f64 {
    spec.evaluate(x, phase)
}
