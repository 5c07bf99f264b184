//! The single-run commands.

use std::time::Instant;

use bosetunnel::lattice::{Grid, Representation};
use bosetunnel::model::{
    critical_points, exact_table, meanfield_table, predict, EmissionMomentum, EnergyTable, ExactTableOptions,
    InterpolatedFamily, ModelPrediction, Sweep, TableFamily,
};
use bosetunnel::observables::{
    detect_peaks, g1, g2, momentum_density, momentum_density_of, nonescape_probability, density_of,
    occupation_fractions, two_body_diagonal, OneBodyDensityMatrix, Peak,
};
use bosetunnel::potential::Phase;
use bosetunnel::solver::{
    gp_ground_state, propagate_observed, relax_ground_state, GroundState, Landscape, ManyBodyWavefunction,
    PropagationParams, RelaxOptions, SolverKind, MAX_EXACT_PARTICLES, RECORDED_OCCUPATIONS,
};
use bosetunnel::{Error, Result};

use crate::config::{ModelSweep, RunConfig, TableKind};
use crate::output::{run_hash, Artifacts, Check, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Relax,
    Propagate,
    Model,
    Analyze,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Relax => "relax",
            Command::Propagate => "propagate",
            Command::Model => "model",
            Command::Analyze => "analyze",
        }
    }

    /// Check the config for this command without computing anything.
    pub fn validate(&self, config: &RunConfig) -> Result<()> {
        match self {
            Command::Relax => config.validate_relax().map(|_| ()),
            Command::Propagate | Command::Analyze => config.validate_propagate().map(|_| ()),
            Command::Model => config.validate_model(),
        }
    }
}

/// Outcome of a computed run, ready to be written.
pub struct RunOutput {
    pub artifacts: Artifacts,
    pub hash: String,
    pub wall_seconds: f64,
}

pub fn execute(command: Command, config: &RunConfig) -> Result<RunOutput> {
    command.validate(config)?;
    let hash = run_hash(command.as_str(), config);
    let start = Instant::now();
    let artifacts = match command {
        Command::Relax => relax(config, &hash)?,
        Command::Propagate => propagate(config, &hash, false)?,
        Command::Analyze => propagate(config, &hash, true)?,
        Command::Model => model(config, &hash)?,
    };
    Ok(RunOutput {
        artifacts,
        hash,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn ground_state(config: &RunConfig, grid: &Grid) -> Result<GroundState> {
    match config.solver_kind {
        SolverKind::Exact => relax_ground_state(config.particles, config.lambda0, grid),
        SolverKind::MeanField => gp_ground_state(config.particles, config.lambda0, grid, &RelaxOptions::default()),
    }
}

fn relax(config: &RunConfig, hash: &str) -> Result<Artifacts> {
    let grid = config.validate_relax()?;
    let gs = ground_state(config, &grid)?;
    let mut out = Artifacts::default();
    let mut csv = Csv::new(hash, &["x", "density"]);
    for (x, d) in grid.positions().iter().zip(density_of(&gs.state)) {
        csv.row(&[*x, d]);
    }
    out.add_csv("density.csv", csv);
    out.result("energy", gs.energy);
    out.result("steps", gs.steps);
    let norm = gs.state.norm();
    out.check(Check::new("normalized", (norm - 1.0).abs() < 1e-10, format!("norm {norm}")));
    if gs.state.kind() == SolverKind::Exact {
        let defect = gs.state.symmetry_defect();
        out.check(Check::new("exchange_symmetry", defect < 1e-10, format!("defect {defect:e}")));
    }
    let monotone = gs.history.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    out.check(Check::new("energy_monotone", monotone, format!("{} checks", gs.history.len())));
    Ok(out)
}

/// Energy table for `particles` at coupling `lambda0` as the config asks.
pub fn energy_table(config: &RunConfig, lambda0: f64) -> Result<EnergyTable> {
    let exact = match config.table {
        TableKind::Auto => config.particles <= MAX_EXACT_PARTICLES,
        TableKind::Exact => true,
        TableKind::MeanField => false,
    };
    if exact {
        exact_table(config.particles, lambda0, &ExactTableOptions::default())
    } else {
        meanfield_table(config.particles, lambda0, &config.grid()?)
    }
}

fn open_momenta(prediction: &ModelPrediction) -> Vec<f64> {
    prediction
        .spectrum
        .emissions
        .iter()
        .filter_map(|e| e.momentum.value())
        .collect()
}

/// Peak with the largest prominence.
pub fn leading_peak(peaks: &[Peak]) -> Option<Peak> {
    peaks.iter().copied().max_by(|a, b| a.prominence.total_cmp(&b.prominence))
}

fn propagate(config: &RunConfig, hash: &str, correlations: bool) -> Result<Artifacts> {
    let (grid, spec, absorber) = config.validate_propagate()?;
    let table = energy_table(config, config.lambda0)?;
    let prediction = predict(config.particles, config.threshold, &table)?;
    let model_k = open_momenta(&prediction);

    let gs = ground_state(config, &grid)?;
    let mut state: ManyBodyWavefunction = gs.state;
    let params = PropagationParams {
        dt: config.dt,
        t_final: config.t_final,
        snapshot_stride: config.snapshot_stride,
    };
    let k = grid.k_values();
    let x_m = spec.barrier_position();
    let n = config.particles;

    let mut pnot = Csv::new(hash, &["t", "pnot"]);
    let mut rho_k = Csv::new(hash, &["t", "k", "value"]);
    let mut occupations = Csv::new(hash, &["t", "f1", "f2", "f3", "f4"]);
    let mut peaks_csv = Csv::new(hash, &["t", "k_peak", "height", "k_model", "delta"]);
    let mut norms = Vec::new();
    let mut parseval_worst: f64 = 0.0;
    let mut occupation_worst: f64 = 0.0;
    let mut last = (0.0, 0.0, None);

    propagate_observed(&mut state, &Landscape::Threshold(spec), Some(&absorber), &params, |t, s| {
        let norm = s.norm();
        let density = density_of(s);
        let md = momentum_density_of(s);
        let p = nonescape_probability(&density, &grid, x_m, n)?;
        pnot.row(&[t, p]);
        for (kj, v) in k.iter().zip(&md) {
            rho_k.row(&[t, *kj, *v]);
        }
        let fractions = match s.kind() {
            SolverKind::Exact => occupation_fractions(&OneBodyDensityMatrix::position(s))?,
            SolverKind::MeanField => vec![norm],
        };
        occupation_worst = occupation_worst.max((fractions.iter().sum::<f64>() - norm).abs());
        let mut row = vec![t];
        row.extend((0..RECORDED_OCCUPATIONS).map(|i| fractions.get(i).copied().unwrap_or(0.0)));
        occupations.row(&row);
        let total_x = grid.integrate(&density)?;
        let total_k = grid.integrate_momentum(&md)?;
        parseval_worst = parseval_worst.max((total_x - total_k).abs());
        let peaks = detect_peaks(&md, &k, config.k_floor, config.peak_prominence)?;
        for peak in &peaks {
            let nearest = model_k
                .iter()
                .copied()
                .min_by(|a, b| (a - peak.k).abs().total_cmp(&(b - peak.k).abs()));
            let km = nearest.unwrap_or(f64::NAN);
            peaks_csv.row(&[t, peak.k, peak.height, km, peak.k - km]);
        }
        norms.push(norm);
        last = (t, p, leading_peak(&peaks));
        Ok(())
    })?;

    let mut out = Artifacts::default();
    out.add_csv("pnot.csv", pnot);
    out.add_csv("rho_k.csv", rho_k);
    out.add_csv("occupations.csv", occupations);
    out.add_csv("peaks.csv", peaks_csv);
    let mut pot = Csv::new(hash, &["x", "V"]);
    for x in grid.positions() {
        pot.row(&[x, spec.evaluate(x, Phase::PostQuench)]);
    }
    out.add_csv("potential.csv", pot);

    out.result("energy_initial", gs.energy);
    out.result("t_last", last.0);
    out.result("pnot_final", last.1);
    out.result("norm_final", state.norm());
    out.result("leading_peak_final", last.2.map_or(f64::NAN, |p| p.k));
    model_results(&prediction, &mut out);
    out.result("table_source", table.weakest_source(config.particles)?);
    out.result("fidelity", "trend-level: reduced domain with absorbing boundary");

    let monotone = norms.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    out.check(Check::new("norm_non_increasing", monotone, format!("{} snapshots", norms.len())));
    out.check(Check::new(
        "parseval",
        parseval_worst < 1e-10 * n as f64,
        format!("worst difference {parseval_worst:e}"),
    ));
    out.check(Check::new(
        "occupations_sum_to_norm",
        occupation_worst < 1e-8,
        format!("worst difference {occupation_worst:e}"),
    ));
    if state.kind() == SolverKind::Exact {
        let defect = state.symmetry_defect();
        out.check(Check::new("exchange_symmetry", defect < 1e-9, format!("defect {defect:e}")));
    }

    if correlations {
        correlation_artifacts(config, hash, &state, &grid, &mut out)?;
    }
    Ok(out)
}

fn correlation_artifacts(
    config: &RunConfig,
    hash: &str,
    state: &ManyBodyWavefunction,
    grid: &Grid,
    out: &mut Artifacts,
) -> Result<()> {
    let k = grid.k_values();
    let window: Vec<usize> = (0..k.len()).filter(|&j| k[j].abs() <= config.k_window).collect();
    let ks: Vec<f64> = window.iter().map(|&j| k[j]).collect();
    let rho = OneBodyDensityMatrix::momentum(state);
    let hermitian = rho.hermiticity_defect();
    out.check(Check::new("rho1_hermitian", hermitian < 1e-10, format!("defect {hermitian:e}")));

    let coherence = g1(&rho);
    let mut csv = Csv::with_header_values(hash, "k_row", &ks);
    let mut worst: f64 = 0.0;
    for &a in &window {
        let mut row = vec![k[a]];
        for &b in &window {
            let v = coherence.get(a, b).map_or(f64::NAN, |z| z.norm_sqr());
            if v.is_finite() {
                worst = worst.max(v);
            }
            row.push(v);
        }
        csv.row(&row);
    }
    out.add_csv("g1.csv", csv);
    out.check(Check::new("g1_bounded", worst <= 1.0 + 1e-9, format!("max |g1|^2 {worst}")));

    if config.particles >= 2 {
        let two = two_body_diagonal(state, Representation::Momentum)?;
        let density = momentum_density(&rho)?;
        let corr = g2(&two, &density)?;
        let mut csv = Csv::with_header_values(hash, "k_row", &ks);
        let mut asym: f64 = 0.0;
        for &a in &window {
            let mut row = vec![k[a]];
            for &b in &window {
                let v = corr.get(a, b).unwrap_or(f64::NAN);
                if let (Some(x), Some(y)) = (corr.get(a, b), corr.get(b, a)) {
                    asym = asym.max((x - y).abs());
                }
                row.push(v);
            }
            csv.row(&row);
        }
        out.add_csv("g2.csv", csv);
        out.check(Check::new("g2_symmetric", asym < 1e-10, format!("max asymmetry {asym:e}")));
    } else {
        out.result("g2", "undefined for a single particle");
    }
    Ok(())
}

fn model_results(prediction: &ModelPrediction, out: &mut Artifacts) {
    out.result("predicted_state", prediction.selected);
    out.result("n_in_model", prediction.selected.n_in);
    out.result("n_out_model", prediction.selected.n_out);
    out.result("pnot_model", prediction.selected.nonescape());
    for e in &prediction.spectrum.emissions {
        let k = match e.momentum {
            EmissionMomentum::Open(k) => k.to_string(),
            EmissionMomentum::Closed => "closed".into(),
        };
        out.result(&format!("k_model_{}", e.index), k);
    }
}

fn state_columns(particles: usize) -> Vec<String> {
    (0..=particles)
        .rev()
        .map(|n_in| format!("E_{}_{}", n_in, particles - n_in))
        .collect()
}

fn model(config: &RunConfig, hash: &str) -> Result<Artifacts> {
    config.validate_model()?;
    let n = config.particles;
    let params: Vec<f64> = match config.model_sweep {
        ModelSweep::None => vec![config.threshold],
        _ => (0..=config.model_points)
            .map(|j| config.model_min + (config.model_max - config.model_min) * j as f64 / config.model_points as f64)
            .collect(),
    };
    let param_name = match config.model_sweep {
        ModelSweep::Lambda0 => "lambda0",
        _ => "threshold",
    };

    // (threshold, table) per sweep point
    let fixed = match config.model_sweep {
        ModelSweep::Lambda0 => None,
        _ => Some(energy_table(config, config.lambda0)?),
    };
    let tables: Vec<EnergyTable> = match &fixed {
        Some(t) => vec![t.clone(); params.len()],
        None => params.iter().map(|&l| energy_table(config, l)).collect::<Result<_>>()?,
    };
    let threshold_at = |p: f64| match config.model_sweep {
        ModelSweep::Lambda0 => config.threshold,
        _ => p,
    };

    let mut columns = vec![param_name.to_string()];
    columns.extend(state_columns(n));
    columns.push("source".into());
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut energetics = Csv::new(hash, &col_refs);

    let mut spec_cols = vec![param_name.to_string()];
    spec_cols.extend((1..=n).map(|i| format!("mu_{i}")));
    spec_cols.extend((1..=n).map(|i| format!("k_{i}")));
    let spec_refs: Vec<&str> = spec_cols.iter().map(String::as_str).collect();
    let mut spectrum = Csv::new(hash, &spec_refs);

    let mut prediction_csv = Csv::new(hash, &[param_name, "n_in", "n_out", "e_tot", "pnot_model"]);

    for (&p, table) in params.iter().zip(&tables) {
        let pred = predict(n, threshold_at(p), table)?;
        let mut fields = vec![p.to_string()];
        fields.extend(pred.candidates.iter().map(|c| c.energy.to_string()));
        fields.push(table.weakest_source(n)?.to_string());
        energetics.raw_row(&fields);

        let mut row = vec![p];
        row.extend(pred.spectrum.emissions.iter().map(|e| e.mu));
        row.extend(pred.spectrum.emissions.iter().map(|e| e.momentum.value().unwrap_or(f64::NAN)));
        spectrum.row(&row);

        prediction_csv.row(&[
            p,
            pred.selected.n_in as f64,
            pred.selected.n_out as f64,
            pred.selected.energy,
            pred.selected.nonescape(),
        ]);
    }

    let mut out = Artifacts::default();
    let crossings = match config.model_sweep {
        ModelSweep::None => Vec::new(),
        ModelSweep::Threshold => {
            let t = fixed.clone().expect("threshold sweep has a fixed table");
            let family = move |_: f64| Ok(t.clone());
            critical_points(
                n,
                &family,
                Sweep::Threshold { lambda0: config.lambda0 },
                (config.model_min, config.model_max),
                CROSSING_REFINEMENT * config.model_points,
            )?
        }
        ModelSweep::Lambda0 => {
            let family = InterpolatedFamily::new(tables.clone())?;
            critical_points(
                n,
                &family as &dyn TableFamily,
                Sweep::Coupling { threshold: config.threshold },
                (config.model_min, config.model_max),
                CROSSING_REFINEMENT * config.model_points,
            )?
        }
    };
    let mut crossings_csv = Csv::new(
        hash,
        &[param_name, "n_in_a", "n_out_a", "n_in_b", "n_out_b", "energy"],
    );
    for c in &crossings {
        crossings_csv.row(&[
            c.parameter,
            c.first.0 as f64,
            c.first.1 as f64,
            c.second.0 as f64,
            c.second.1 as f64,
            c.energy,
        ]);
    }

    out.add_csv("energetics.csv", energetics);
    out.add_csv("crossings.csv", crossings_csv);
    out.add_csv("spectrum.csv", spectrum);
    out.add_csv("prediction.csv", prediction_csv);
    out.result("crossings", crossings.len());
    out.result("table_source", tables[0].weakest_source(n)?);
    if config.model_sweep == ModelSweep::Lambda0 {
        out.result("interpolation", "monotone cubic between tabulated couplings");
    }
    model_results(&predict(n, threshold_at(params[0]), &tables[0])?, &mut out);
    let ordered = crossings.windows(2).all(|w| w[0].parameter <= w[1].parameter);
    out.check(Check::new("crossings_sorted", ordered, format!("{} crossings", crossings.len())));
    Ok(out)
}

/// Crossing scans sample this many points per tabulated interval.
const CROSSING_REFINEMENT: usize = 10;

/// Errors whose run never started computing.
pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Usage(_) | Error::Domain(_))
}
