//! Energetics model of the emission process.
//!
//! A trapped ground state of `N` bosons can end up as `|N_IN, N_OUT⟩`: `N_IN`
//! bosons still trapped and `N_OUT` free ones, each of which carries at least
//! the threshold energy `T`. The candidates are ranked by
//! `E_TOT = E_HO(N_IN) + N_OUT·T`; the `i`-th emitted boson leaves with the
//! chemical potential `μ_i = E_HO(N-i+1) - E_HO(N-i)` and, far from the
//! trap, momentum `√(2(μ_i - T))`.

use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::solver::{exact_pair_energy, gp_ground_energy, lattice_ground_energy, LanczosOptions, MAX_EXACT_PARTICLES};

/// Where a tabulated energy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergySource {
    /// Closed form or the exact lattice solver.
    Exact,
    /// The two-boson relative-motion reduction.
    Oracle,
    /// Single-orbital mean-field functional.
    MeanField,
}

impl EnergySource {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergySource::Exact => "exact",
            EnergySource::Oracle => "oracle",
            EnergySource::MeanField => "meanfield",
        }
    }
}

impl fmt::Display for EnergySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trapped ground-state energies `E_HO(n, λ₀)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    lambda0: f64,
    entries: Vec<(f64, EnergySource)>,
}

impl EnergyTable {
    /// `higher[j]` is the energy of `j + 2` particles; `E(0) = 0` and
    /// `E(1) = 1/2` are filled in.
    pub fn new(lambda0: f64, higher: &[(f64, EnergySource)]) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 >= 0.0) {
            return Err(Error::Domain(format!("coupling must be finite and non-negative, got {lambda0}")));
        }
        let mut entries = vec![(0.0, EnergySource::Exact), (0.5, EnergySource::Exact)];
        entries.extend_from_slice(higher);
        for (n, w) in entries.windows(2).enumerate() {
            if !(w[1].0.is_finite() && w[1].0 > w[0].0) {
                return Err(Error::Data(format!(
                    "energies must increase strictly with particle number: E({}) = {}, E({}) = {}",
                    n,
                    w[0].0,
                    n + 1,
                    w[1].0
                )));
            }
        }
        Ok(Self { lambda0, entries })
    }

    /// Non-interacting table `E(n) = n/2`.
    pub fn ideal(n_max: usize) -> Self {
        let higher: Vec<_> = (2..=n_max).map(|n| (0.5 * n as f64, EnergySource::Exact)).collect();
        Self::new(0.0, &higher).expect("n/2 is increasing")
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Largest tabulated particle number.
    pub fn max_particles(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn energy(&self, n: usize) -> Result<f64> {
        self.entries
            .get(n)
            .map(|e| e.0)
            .ok_or_else(|| Error::Data(format!("energy table has no entry for {n} particles")))
    }

    pub fn source(&self, n: usize) -> Result<EnergySource> {
        self.entries
            .get(n)
            .map(|e| e.1)
            .ok_or_else(|| Error::Data(format!("energy table has no entry for {n} particles")))
    }

    /// Least exact source among the entries up to `n`.
    pub fn weakest_source(&self, n: usize) -> Result<EnergySource> {
        self.energy(n)?;
        let sources = self.entries[..=n].iter().map(|e| e.1);
        Ok(sources.fold(EnergySource::Exact, |acc, s| match (acc, s) {
            (EnergySource::MeanField, _) | (_, EnergySource::MeanField) => EnergySource::MeanField,
            (EnergySource::Oracle, _) | (_, EnergySource::Oracle) => EnergySource::Oracle,
            _ => EnergySource::Exact,
        }))
    }
}

/// Chemical potential of the `i`-th emission, `E(N-i+1) - E(N-i)`.
pub fn chemical_potential(particles: usize, i: usize, table: &EnergyTable) -> Result<f64> {
    if i == 0 || i > particles {
        return Err(Error::Domain(format!("process index {i} outside 1..={particles}")));
    }
    Ok(table.energy(particles - i + 1)? - table.energy(particles - i)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmissionMomentum {
    Open(f64),
    /// `μ ≤ T`: the boson cannot leave.
    Closed,
}

impl EmissionMomentum {
    pub fn value(&self) -> Option<f64> {
        match self {
            EmissionMomentum::Open(k) => Some(*k),
            EmissionMomentum::Closed => None,
        }
    }
}

pub fn emission_momentum(mu: f64, threshold: f64) -> EmissionMomentum {
    if mu > threshold {
        EmissionMomentum::Open((2.0 * (mu - threshold)).sqrt())
    } else {
        EmissionMomentum::Closed
    }
}

pub fn total_energy(n_in: usize, n_out: usize, threshold: f64, table: &EnergyTable) -> Result<f64> {
    Ok(table.energy(n_in)? + n_out as f64 * threshold)
}

/// A candidate `|N_IN, N_OUT⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalState {
    pub n_in: usize,
    pub n_out: usize,
    pub energy: f64,
    /// `E_TOT` does not exceed the initial trapped energy.
    pub available: bool,
}

impl FinalState {
    /// Plateau of the nonescape probability, `N_IN / N`.
    pub fn nonescape(&self) -> f64 {
        self.n_in as f64 / (self.n_in + self.n_out) as f64
    }
}

impl fmt::Display for FinalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.n_in, self.n_out)
    }
}

/// Every `|N_IN, N_OUT⟩` ordered by `N_IN` descending.
pub fn final_states(particles: usize, threshold: f64, table: &EnergyTable) -> Result<Vec<FinalState>> {
    candidates(particles, threshold, |n| table.energy(n))
}

fn candidates(particles: usize, threshold: f64, energy: impl Fn(usize) -> Result<f64>) -> Result<Vec<FinalState>> {
    let initial = energy(particles)?;
    (0..=particles)
        .rev()
        .map(|n_in| {
            let n_out = particles - n_in;
            let e = energy(n_in)? + n_out as f64 * threshold;
            Ok(FinalState {
                n_in,
                n_out,
                energy: e,
                available: e <= initial,
            })
        })
        .collect()
}

/// Lowest available `E_TOT`; at equal energy the larger `N_IN` wins.
pub fn predict_final_state(particles: usize, threshold: f64, table: &EnergyTable) -> Result<FinalState> {
    predict_with(particles, threshold, |n| table.energy(n))
}

fn predict_with(particles: usize, threshold: f64, energy: impl Fn(usize) -> Result<f64>) -> Result<FinalState> {
    let all = candidates(particles, threshold, energy)?;
    // candidates come with N_IN descending, so a strict comparison keeps ties bound
    let mut best = all[0];
    for c in all.into_iter().filter(|c| c.available) {
        if c.energy < best.energy {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    /// Process index `i`, the first emitted boson is 1.
    pub index: usize,
    pub mu: f64,
    pub momentum: EmissionMomentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSpectrum {
    pub threshold: f64,
    pub emissions: Vec<Emission>,
}

pub fn emission_spectrum(particles: usize, threshold: f64, table: &EnergyTable) -> Result<EmissionSpectrum> {
    let emissions = (1..=particles)
        .map(|i| {
            let mu = chemical_potential(particles, i, table)?;
            Ok(Emission {
                index: i,
                mu,
                momentum: emission_momentum(mu, threshold),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmissionSpectrum { threshold, emissions })
}

/// Candidate energies, the selected final state and the emission spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPrediction {
    pub particles: usize,
    pub threshold: f64,
    pub lambda0: f64,
    pub candidates: Vec<FinalState>,
    pub selected: FinalState,
    pub spectrum: EmissionSpectrum,
}

pub fn predict(particles: usize, threshold: f64, table: &EnergyTable) -> Result<ModelPrediction> {
    Ok(ModelPrediction {
        particles,
        threshold,
        lambda0: table.lambda0(),
        candidates: final_states(particles, threshold, table)?,
        selected: predict_final_state(particles, threshold, table)?,
        spectrum: emission_spectrum(particles, threshold, table)?,
    })
}

/// Energy tables as a function of the coupling.
pub trait TableFamily {
    fn table(&self, lambda0: f64) -> Result<EnergyTable>;
}

impl<F> TableFamily for F
where
    F: Fn(f64) -> Result<EnergyTable>,
{
    fn table(&self, lambda0: f64) -> Result<EnergyTable> {
        self(lambda0)
    }
}

/// Tables computed on a coupling grid and joined by monotone cubic
/// (Fritsch-Carlson) interpolation per particle number.
#[derive(Debug, Clone)]
pub struct InterpolatedFamily {
    lambdas: Vec<f64>,
    tables: Vec<EnergyTable>,
    slopes: Vec<Vec<f64>>,
}

impl InterpolatedFamily {
    pub fn new(tables: Vec<EnergyTable>) -> Result<Self> {
        if tables.len() < 2 {
            return Err(Error::Data("interpolation needs at least two tables".into()));
        }
        let lambdas: Vec<f64> = tables.iter().map(|t| t.lambda0()).collect();
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("tables must be ordered by strictly increasing coupling".into()));
        }
        let n_max = tables.iter().map(|t| t.max_particles()).min().unwrap_or(0);
        let slopes = (0..=n_max)
            .map(|n| {
                let ys: Vec<f64> = tables.iter().map(|t| t.entries[n].0).collect();
                pchip_slopes(&lambdas, &ys)
            })
            .collect();
        Ok(Self { lambdas, tables, slopes })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn tables(&self) -> &[EnergyTable] {
        &self.tables
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lambdas[0], *self.lambdas.last().unwrap())
    }
}

impl TableFamily for InterpolatedFamily {
    fn table(&self, lambda0: f64) -> Result<EnergyTable> {
        let (lo, hi) = self.range();
        if !(lambda0 >= lo && lambda0 <= hi) {
            return Err(Error::Data(format!("coupling {lambda0} outside tabulated range [{lo}, {hi}]")));
        }
        let j = match self.lambdas.iter().position(|&l| l > lambda0) {
            Some(p) => p - 1,
            None => self.lambdas.len() - 2,
        };
        let (x0, x1) = (self.lambdas[j], self.lambdas[j + 1]);
        let h = x1 - x0;
        let s = (lambda0 - x0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let higher: Vec<(f64, EnergySource)> = (2..self.slopes.len())
            .map(|n| {
                let (y0, y1) = (self.tables[j].entries[n].0, self.tables[j + 1].entries[n].0);
                let (m0, m1) = (self.slopes[n][j], self.slopes[n][j + 1]);
                let src = self.tables[j].entries[n].1;
                (h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1, src)
            })
            .collect();
        EnergyTable::new(lambda0, &higher)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![d[0], d[0]];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    m[0] = pchip_end(h[0], h[1], d[0], d[1]);
    m[n - 1] = pchip_end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Which parameter a crossing search varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sweep {
    Threshold { lambda0: f64 },
    Coupling { threshold: f64 },
}

/// Two `E_TOT` curves changing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub parameter: f64,
    /// `(N_IN, N_OUT)` of the two curves, larger `N_IN` first.
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub energy: f64,
}

/// Bracket width at which bisection stops and the root is interpolated.
const BISECTION_WIDTH: f64 = 1e-9;

/// All parameter values in `range` where two `E_TOT` curves swap order.
///
/// Sign changes of every pairwise difference are bracketed on `resolution`
/// equal intervals, narrowed by bisection and finished with one secant step,
/// which is exact for affine curves. Crossings are sorted by parameter.
pub fn critical_points(
    particles: usize,
    family: &dyn TableFamily,
    sweep: Sweep,
    range: (f64, f64),
    resolution: usize,
) -> Result<Vec<Crossing>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) || resolution == 0 {
        return Err(Error::Config(format!(
            "sweep range must be increasing and resolution positive, got [{lo}, {hi}] / {resolution}"
        )));
    }
    let fixed = match sweep {
        Sweep::Threshold { lambda0 } => Some(family.table(lambda0)?),
        Sweep::Coupling { .. } => None,
    };
    let curves = |p: f64| -> Result<Vec<f64>> {
        let (threshold, table) = match sweep {
            Sweep::Threshold { .. } => (p, fixed.clone().expect("fixed table")),
            Sweep::Coupling { threshold } => (threshold, family.table(p)?),
        };
        Ok(final_states(particles, threshold, &table)?.iter().map(|s| s.energy).collect())
    };

    let params: Vec<f64> = (0..=resolution).map(|j| lo + (hi - lo) * j as f64 / resolution as f64).collect();
    let samples = params.iter().map(|&p| curves(p)).collect::<Result<Vec<_>>>()?;
    let states = particles + 1;
    let label = |idx: usize| (particles - idx, idx);

    let mut found = Vec::new();
    for a in 0..states {
        for b in a + 1..states {
            let diff = |v: &[f64]| v[a] - v[b];
            let mut last: Option<(f64, f64)> = None;
            for (p, v) in params.iter().zip(&samples) {
                let d = diff(v);
                if d == 0.0 {
                    continue;
                }
                if let Some((p0, d0)) = last {
                    if d0.signum() != d.signum() {
                        let root = bisect(|q| Ok(diff(&curves(q)?)), p0, *p, d0, d)?;
                        found.push(Crossing {
                            parameter: root,
                            first: label(a),
                            second: label(b),
                            energy: curves(root)?[a],
                        });
                    }
                }
                last = Some((*p, d));
            }
        }
    }
    found.sort_by(|x, y| x.parameter.total_cmp(&y.parameter));
    Ok(found)
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut f_lo: f64, mut f_hi: f64) -> Result<f64> {
    while hi - lo > BISECTION_WIDTH * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(lo - f_lo * (hi - lo) / (f_hi - f_lo))
}

/// Settings for tables of the exact few-body energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactTableOptions {
    /// Three-boson energies are lattice eigenvalues on `[-w, w)` at two
    /// resolutions, extrapolated in the spacing.
    pub half_width: f64,
    pub coarse_points: usize,
    pub lanczos: LanczosOptions,
}

impl Default for ExactTableOptions {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            coarse_points: 32,
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Few-body table up to `particles ≤ 3`: the pair reduction for two bosons
/// and the lattice eigenvalue for three.
pub fn exact_table(particles: usize, lambda0: f64, options: &ExactTableOptions) -> Result<EnergyTable> {
    if particles > MAX_EXACT_PARTICLES {
        return Err(Error::Config(format!(
            "exact tables cover at most {MAX_EXACT_PARTICLES} particles, got {particles}"
        )));
    }
    let mut higher = Vec::new();
    if particles >= 2 {
        higher.push((exact_pair_energy(lambda0)?, EnergySource::Oracle));
    }
    if particles >= 3 {
        let coarse = Grid::new(-options.half_width, options.half_width, options.coarse_points)?;
        let fine = Grid::new(-options.half_width, options.half_width, 2 * options.coarse_points)?;
        let e_coarse = lattice_ground_energy(3, lambda0, &coarse, &options.lanczos)?;
        let e_fine = lattice_ground_energy(3, lambda0, &fine, &options.lanczos)?;
        // the contact term converges linearly in the spacing
        let e = if lambda0 > 0.0 { 2.0 * e_fine - e_coarse } else { e_fine };
        higher.push((e, EnergySource::Exact));
    }
    EnergyTable::new(lambda0, &higher)
}

/// Mean-field table up to `particles`, each entry minimised on `grid`.
pub fn meanfield_table(particles: usize, lambda0: f64, grid: &Grid) -> Result<EnergyTable> {
    let higher = (2..=particles)
        .map(|n| Ok((gp_ground_energy(n, lambda0, grid)?, EnergySource::MeanField)))
        .collect::<Result<Vec<_>>>()?;
    EnergyTable::new(lambda0, &higher)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn pair_table(e2: f64) -> EnergyTable {
        EnergyTable::new(1.0, &[(e2, EnergySource::Oracle)]).unwrap()
    }

    #[test]
    fn fixed_entries_and_missing_rows() {
        let t = pair_table(1.3);
        assert_eq!(t.energy(0).unwrap(), 0.0);
        assert_eq!(t.energy(1).unwrap(), 0.5);
        assert!(matches!(t.energy(3), Err(Error::Data(_))));
        assert!(matches!(chemical_potential(3, 1, &t), Err(Error::Data(_))));
        assert!(matches!(total_energy(4, 0, 0.1, &t), Err(Error::Data(_))));
        assert_eq!(t.weakest_source(1).unwrap(), EnergySource::Exact);
        assert_eq!(t.weakest_source(2).unwrap(), EnergySource::Oracle);
    }

    #[test]
    fn non_increasing_energies_are_rejected() {
        assert!(EnergyTable::new(0.0, &[(0.4, EnergySource::Exact)]).is_err());
        assert!(EnergyTable::new(0.0, &[(1.0, EnergySource::Exact), (1.0, EnergySource::Exact)]).is_err());
    }

    #[test]
    fn chemical_potentials() {
        let ideal = EnergyTable::ideal(5);
        for i in 1..=5 {
            assert_eq!(chemical_potential(5, i, &ideal).unwrap(), 0.5);
        }
        let t = pair_table(1.3067455);
        assert_eq!(chemical_potential(2, 2, &t).unwrap(), 0.5);
        assert!((chemical_potential(2, 1, &t).unwrap() - 0.8067455).abs() < 1e-15);
        assert!(chemical_potential(2, 0, &t).is_err());
    }

    #[test]
    fn emission_momenta() {
        assert_eq!(emission_momentum(0.5, 0.0), EmissionMomentum::Open(1.0));
        assert_eq!(emission_momentum(0.3, 0.3), EmissionMomentum::Closed);
        let k = emission_momentum(0.8, 0.2).value().unwrap();
        assert!((k - 1.2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn total_energies_of_three_bosons() {
        let t = EnergyTable::new(1.0, &[(1.3, EnergySource::Oracle), (2.4, EnergySource::Exact)]).unwrap();
        assert_eq!(total_energy(1, 2, 0.7, &t).unwrap(), 1.9);
        // 3·fl(0.7) rounds to the double just below 2.1
        let e = total_energy(0, 3, 0.7, &t).unwrap();
        assert_eq!(e, 3.0 * 0.7);
        assert!((e - 2.1).abs() <= 2.1 * f64::EPSILON);
        assert_eq!(total_energy(3, 0, 0.7, &t).unwrap(), 2.4);
    }

    #[test]
    fn pair_final_states_follow_threshold() {
        let t = pair_table(1.3067455);
        let pick = |thr: f64| {
            let s = predict_final_state(2, thr, &t).unwrap();
            (s.n_in, s.n_out)
        };
        assert_eq!(pick(0.1), (0, 2));
        assert_eq!(pick(0.6), (1, 1));
        assert_eq!(pick(0.9), (2, 0));
    }

    #[test]
    fn degenerate_candidates_resolve_to_more_bound_state() {
        // at T = 1/2 all ideal candidates cost N/2
        let s = predict_final_state(4, 0.5, &EnergyTable::ideal(4)).unwrap();
        assert_eq!((s.n_in, s.n_out), (4, 0));
    }

    #[test]
    fn availability_is_non_strict() {
        let t = pair_table(1.3);
        let c = final_states(2, 0.65, &t).unwrap();
        // |0,2> costs 1.3 = E(2) exactly
        assert_eq!((c[2].n_in, c[2].available), (0, true));
        assert_eq!(c[0].energy, 1.3);
    }

    #[test]
    fn spectrum_closes_below_threshold() {
        let t = pair_table(1.3067455);
        let s = emission_spectrum(2, 0.6, &t).unwrap();
        assert!(matches!(s.emissions[0].momentum, EmissionMomentum::Open(_)));
        assert_eq!(s.emissions[1].momentum, EmissionMomentum::Closed);
        let ideal = emission_spectrum(2, 0.6, &EnergyTable::ideal(2)).unwrap();
        assert!(ideal.emissions.iter().all(|e| e.momentum == EmissionMomentum::Closed));
    }

    #[test]
    fn threshold_crossings_of_the_pair() {
        let t = pair_table(1.3067455);
        let fam = |_: f64| Ok(t.clone());
        let c = critical_points(2, &fam, Sweep::Threshold { lambda0: 1.0 }, (0.0, 1.2), 37).unwrap();
        assert_eq!(c.len(), 3);
        assert!((c[0].parameter - 0.5).abs() < 1e-12);
        assert_eq!((c[0].first, c[0].second), ((1, 1), (0, 2)));
        // |2,0> meets |0,2> at 2T = E and |1,1> at T = E - 1/2
        assert!((c[1].parameter - 1.3067455 / 2.0).abs() < 1e-12);
        assert!((c[2].parameter - 0.8067455).abs() < 1e-12);
    }

    #[test]
    fn crossing_on_a_sample_point_is_found_once() {
        let fam = |_: f64| Ok(EnergyTable::ideal(2));
        let c = critical_points(2, &fam, Sweep::Threshold { lambda0: 0.0 }, (0.0, 1.0), 10).unwrap();
        // all three curves meet at T = 1/2, which is a sample point
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|x| x.parameter == 0.5));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_lines() {
        let tables: Vec<EnergyTable> = [0.0, 0.5, 1.5, 2.0]
            .iter()
            .map(|&l| EnergyTable::new(l, &[(1.0 + 0.25 * l, EnergySource::Exact)]).unwrap())
            .collect();
        let fam = InterpolatedFamily::new(tables).unwrap();
        for l in [0.0, 0.3, 0.5, 1.1, 2.0] {
            assert!((fam.table(l).unwrap().energy(2).unwrap() - (1.0 + 0.25 * l)).abs() < 1e-14);
        }
        assert!(matches!(fam.table(2.5), Err(Error::Data(_))));
    }

    #[test]
    fn interpolation_stays_monotone() {
        let ls = [0.0, 0.1, 0.2, 1.0, 3.0];
        let es = [1.0, 1.07, 1.13, 1.31, 1.6];
        let tables = ls
            .iter()
            .zip(es)
            .map(|(&l, e)| EnergyTable::new(l, &[(e, EnergySource::Oracle)]).unwrap())
            .collect();
        let fam = InterpolatedFamily::new(tables).unwrap();
        let mut prev = 0.0;
        for j in 0..=300 {
            let e = fam.table(3.0 * j as f64 / 300.0).unwrap().energy(2).unwrap();
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn table_builders_tag_their_sources() {
        let t = exact_table(2, 1.0, &ExactTableOptions::default()).unwrap();
        assert_eq!(t.source(2).unwrap(), EnergySource::Oracle);
        assert!((t.energy(2).unwrap() - exact_pair_energy(1.0).unwrap()).abs() < 1e-15);
        assert!(matches!(exact_table(4, 1.0, &ExactTableOptions::default()), Err(Error::Config(_))));

        let g = Grid::new(-8.0, 8.0, 128).unwrap();
        let mf = meanfield_table(4, 0.0, &g).unwrap();
        for n in 0..=4 {
            assert!((mf.energy(n).unwrap() - 0.5 * n as f64).abs() < 1e-9);
        }
        assert_eq!(mf.weakest_source(4).unwrap(), EnergySource::MeanField);
    }

    fn affine_family(slope2: f64, slope3: f64) -> impl Fn(f64) -> Result<EnergyTable> {
        move |l: f64| {
            EnergyTable::new(
                l,
                &[(1.0 + slope2 * l, EnergySource::Exact), (1.5 + slope3 * l, EnergySource::Exact)],
            )
        }
    }

    proptest! {
        #[test]
        fn total_energy_is_affine_in_threshold(
            e2 in 0.6f64..2.0, n_in in 0usize..=2, t1 in 0.0f64..1.5, t2 in 0.0f64..1.5,
        ) {
            let t = pair_table(e2);
            let n_out = 2 - n_in;
            let a = total_energy(n_in, n_out, t1, &t).unwrap();
            let b = total_energy(n_in, n_out, t2, &t).unwrap();
            prop_assert!((b - a - n_out as f64 * (t2 - t1)).abs() < 1e-12);
        }

        #[test]
        fn ideal_gas_leaves_completely_or_stays(n in 1usize..12, thr in 0.0f64..1.5) {
            prop_assume!((thr - 0.5).abs() > 1e-12);
            let s = predict_final_state(n, thr, &EnergyTable::ideal(n)).unwrap();
            if thr > 0.5 {
                prop_assert_eq!((s.n_in, s.n_out), (n, 0));
            } else {
                prop_assert_eq!((s.n_in, s.n_out), (0, n));
            }
        }

        #[test]
        fn common_shift_of_all_energies_changes_nothing(
            steps in proptest::collection::vec(0.05f64..1.0, 1..6), thr in 0.0f64..1.5, shift in -3.0f64..3.0,
        ) {
            let mut energies = vec![0.0];
            for s in &steps {
                energies.push(energies.last().unwrap() + s);
            }
            let n = steps.len();
            let plain = predict_with(n, thr, |k| Ok(energies[k])).unwrap();
            let shifted = predict_with(n, thr, |k| Ok(energies[k] + shift)).unwrap();
            prop_assert_eq!((plain.n_in, plain.n_out), (shifted.n_in, shifted.n_out));
        }

        #[test]
        fn emission_momentum_falls_with_threshold(mu in 0.0f64..3.0, t1 in 0.0f64..3.0, dt in 1e-6f64..1.0) {
            let t2 = t1 + dt;
            match (emission_momentum(mu, t1), emission_momentum(mu, t2)) {
                (EmissionMomentum::Open(a), EmissionMomentum::Open(b)) => prop_assert!(b < a),
                (EmissionMomentum::Open(_), EmissionMomentum::Closed) => prop_assert!(mu <= t2 && mu > t1),
                (EmissionMomentum::Closed, EmissionMomentum::Closed) => prop_assert!(mu <= t1),
                (EmissionMomentum::Closed, EmissionMomentum::Open(_)) => prop_assert!(false),
            }
        }

        #[test]
        fn crossings_of_affine_curves_are_exact(
            s2 in 0.05f64..0.6, s3 in 0.6f64..1.5, thr in 0.55f64..0.95,
        ) {
            let fam = affine_family(s2, s3);
            let found = critical_points(3, &fam, Sweep::Coupling { threshold: thr }, (0.0, 3.0), 53).unwrap();
            // E_TOT curves: |3,0> 1.5 + s3 l, |2,1> 1 + T + s2 l, |1,2> 0.5 + 2T, |0,3> 3T
            let lines = [(1.5, s3), (1.0 + thr, s2), (0.5 + 2.0 * thr, 0.0), (3.0 * thr, 0.0)];
            let mut expected = Vec::new();
            for a in 0..4 {
                for b in a + 1..4 {
                    let (ca, sa) = lines[a];
                    let (cb, sb) = lines[b];
                    if sa != sb {
                        let l = (cb - ca) / (sa - sb);
                        if l > 0.0 && l < 3.0 {
                            expected.push(l);
                        }
                    }
                }
            }
            expected.sort_by(f64::total_cmp);
            prop_assert_eq!(found.len(), expected.len());
            for (c, e) in found.iter().zip(&expected) {
                prop_assert!((c.parameter - e).abs() < 1e-9, "{} vs {}", c.parameter, e);
            }
        }
    }
}
