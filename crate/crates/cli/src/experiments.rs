//! The experiment pipelines behind each subcommand. Each `*_table` function
//! computes its rows; the `run_*` wrappers write them to disk.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use sawtooth_ed::basis::{block_state, half_filling_block_lengths, Parity, SectorBasis};
use sawtooth_ed::entanglement::{entanglement_entropy, reduced_density_matrix, Side};
use sawtooth_ed::evolve::{
    diagonal_ensemble_average, diagonalize_with_limit, eigenstate_expectations, krylov_evolve,
    localization_lifetime, microcanonical_from_expectations, return_probability,
    short_time_decay_rate, thermalization_deviation, time_averaged_return_probability,
    KrylovOptions, Lifetime, Trajectory,
};
use sawtooth_ed::hamiltonian::{build_hamiltonian, hopping_observable, ModelParams, SparseOperator};
use sawtooth_ed::localization::localized_state_fidelity;
use sawtooth_ed::spectral_stats::{
    alpha_indicator, brody_fit, histogram, peak_position, ph_sector_levels, r_statistic, unfold,
};

use crate::config::{Experiment, Method, ResolvedConfig};
use crate::error::{config_error, io_error, Result};
use crate::output::{write_table, Cell, Table};

/// Longest averaging window, in units of `1/|V|`.
pub const MAX_WINDOW_INV_V: f64 = 1e5;

fn overlap_sqr(psi: &[Complex64], psi0: &[f64]) -> f64 {
    psi.iter()
        .zip(psi0)
        .map(|(z, x)| z * x)
        .sum::<Complex64>()
        .norm_sqr()
        .min(1.0)
}

struct QuenchRow {
    p: f64,
    s: f64,
    o: f64,
}

fn quench_row(
    basis: &SectorBasis,
    psi: &[Complex64],
    p: f64,
    obs: &SparseOperator,
    cut: usize,
) -> Result<QuenchRow> {
    let rho = reduced_density_matrix(basis, psi, cut, Side::Left)?;
    Ok(QuenchRow {
        p,
        s: entanglement_entropy(&rho),
        o: obs.expectation_complex(psi)?,
    })
}

/// Rows `t, P, S_ent, O` along a quench from the configured initial state.
pub fn quench_table(cfg: &ResolvedConfig) -> Result<(Table, Value)> {
    let p = &cfg.params;
    let basis = SectorBasis::half_filled(p.sites)?;
    let initial = cfg.initial_state(p.sites)?;
    let psi0 = basis.basis_vector(initial)?;
    let h = build_hamiltonian(p, &basis, cfg.convention)?;
    let obs = hopping_observable(&basis);
    let scale = cfg.time_unit.scale(p)?;
    let times = cfg.grid.times();
    let limit = cfg.dense_limit();
    let dense = match cfg.method {
        Method::Dense => true,
        Method::Krylov => false,
        Method::Auto => basis.dim() <= limit,
    };
    let rows: Vec<QuenchRow> = if dense {
        let spec = diagonalize_with_limit(&h, limit)?;
        let traj = Trajectory::new(&spec, &psi0)?;
        times
            .par_iter()
            .map(|&t| {
                let tp = t * scale;
                quench_row(&basis, &traj.state(tp), traj.return_probability(tp), &obs, cfg.cut())
            })
            .collect::<Result<_>>()?
    } else {
        let opts = KrylovOptions::default();
        let mut psi: Vec<Complex64> = psi0.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let mut rows = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &t in &times {
            let dt = (t - prev) * scale;
            if dt != 0.0 {
                psi = krylov_evolve(&h, &psi, dt, &opts)?;
            }
            prev = t;
            rows.push(quench_row(&basis, &psi, overlap_sqr(&psi, &psi0), &obs, cfg.cut())?);
        }
        rows
    };
    let mut table = Table::new(&["t", "P", "S_ent", "O"]);
    for (t, r) in times.iter().zip(rows) {
        table.push(vec![(*t).into(), r.p.into(), r.s.into(), r.o.into()]);
    }
    let extra = json!({
        "method": if dense { "dense" } else { "krylov" },
        "dim": basis.dim(),
        "initial_state": initial.pattern(p.sites),
        "E_ini": h.expectation(&psi0)?,
        "omega_ini": short_time_decay_rate(&h, &psi0)?,
        "cut": cfg.cut(),
    });
    Ok((table, extra))
}

fn window_length(cfg: &ResolvedConfig, params: &ModelParams) -> Result<(f64, bool)> {
    let window = cfg.grid.t_max() * cfg.time_unit.scale(params)?;
    let cap = MAX_WINDOW_INV_V / params.interaction.abs();
    if params.interaction != 0.0 && window > cap {
        Ok((cap, true))
    } else {
        Ok((window, false))
    }
}

/// One row per grid point in row-major order over (first, second) axes.
pub fn sweep_table(cfg: &ResolvedConfig) -> Result<(Table, Value)> {
    let s = cfg.raw.sweep.as_ref().expect("resolved sweep");
    let axes = s.axes.as_deref().unwrap();
    let (with_r, with_delta) = (s.with_r.unwrap(), s.with_delta.unwrap());
    let delta_e = s.delta_e.unwrap();
    let base = cfg.params;
    let mut points = Vec::new();
    for a in s.first.unwrap().values() {
        for b in s.second.unwrap().values() {
            let mut p = base;
            match axes {
                "J-Jp" => p.hopping = a,
                _ => p.interaction = a,
            }
            p.odd_hopping = b;
            p.validate()?;
            points.push(p);
        }
    }
    let basis = SectorBasis::half_filled(base.sites)?;
    let initial = cfg.initial_state(base.sites)?;
    let psi0 = basis.basis_vector(initial)?;
    let obs = hopping_observable(&basis);
    let rows = points
        .par_iter()
        .map(|p| {
            let h = build_hamiltonian(p, &basis, cfg.convention)?;
            let spec = diagonalize_with_limit(&h, cfg.dense_limit())?;
            let (window, capped) = window_length(cfg, p)?;
            let avg = time_averaged_return_probability(&spec, &psi0, window, cfg.grid.samples())?;
            let mut row: Vec<Cell> = vec![p.hopping.into(), p.odd_hopping.into(), p.interaction.into(), avg.into()];
            if with_r {
                row.push(r_statistic(&ph_sector_levels(p, Parity::Even)?)?.mean.into());
            }
            if with_delta {
                let de = diagonal_ensemble_average(&spec, &psi0, &obs)?;
                let diag = eigenstate_expectations(&spec, &obs)?;
                let e_ini = h.expectation(&psi0)?;
                let me = microcanonical_from_expectations(
                    spec.energies(),
                    &diag,
                    e_ini,
                    delta_e * p.interaction.abs(),
                )?;
                row.push(thermalization_deviation(de, me.value)?.into());
                row.push(me.count.into());
            }
            Ok((row, capped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["J", "Jp", "V", "P_avg"];
    if with_r {
        header.push("r_mean");
    }
    if with_delta {
        header.extend(["delta0", "n_window"]);
    }
    let mut table = Table::new(&header);
    let mut any_capped = false;
    for (row, capped) in rows {
        any_capped |= capped;
        table.push(row);
    }
    let extra = json!({
        "axes": axes,
        "initial_state": initial.pattern(base.sites),
        "window_capped": any_capped,
        "window_cap_inv_V": MAX_WINDOW_INV_V,
        "r_sector": "particle-hole even, symmetrized interaction",
    });
    Ok((table, extra))
}

fn read_levels(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let mut levels = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| config_error(format!("{}: {l:?}: {e}", path.display())))
        })
        .collect::<Result<Vec<f64>>>()?;
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

/// Per-point statistics table plus one histogram table per point.
pub fn spectrum_tables(cfg: &ResolvedConfig) -> Result<(Table, Vec<Table>, Value)> {
    let s = cfg.raw.spectrum.as_ref().expect("resolved spectrum");
    let parity = Parity::from_sign(s.parity.unwrap())?;
    let spectra: Vec<(Value, Vec<f64>)> = if let Some(path) = &s.levels_file {
        vec![(json!({ "levels_file": path }), read_levels(path)?)]
    } else {
        let mut pts = s.points.clone().unwrap();
        if pts.is_empty() {
            pts.push([cfg.params.hopping, cfg.params.odd_hopping]);
        }
        pts.par_iter()
            .map(|&[j, jp]| {
                let p = ModelParams::new(cfg.params.sites, j, jp, cfg.params.interaction)?;
                Ok((json!({ "J": j, "Jp": jp, "V": p.interaction }), ph_sector_levels(&p, parity)?))
            })
            .collect::<Result<_>>()?
    };
    let mut stats = Table::new(&["alpha", "beta", "peak", "r_mean", "n_levels", "n_degenerate"]);
    let mut hists = Vec::new();
    let mut details = Vec::new();
    for (label, levels) in spectra {
        let u = unfold(&levels, s.poly_degree.unwrap(), s.trim_fraction.unwrap())?;
        let hist = histogram(&u.spacings, s.bin_width.unwrap(), s.s_max.unwrap())?;
        let brody = brody_fit(&u.spacings)?;
        let r = r_statistic(&levels)?;
        stats.push(vec![
            alpha_indicator(&hist).into(),
            brody.beta.into(),
            peak_position(&hist)?.into(),
            r.mean.into(),
            levels.len().into(),
            r.n_degenerate.into(),
        ]);
        let mut t = Table::new(&["s", "P"]);
        for (c, d) in hist.bin_centers().iter().zip(&hist.densities) {
            t.push(vec![(*c).into(), (*d).into()]);
        }
        hists.push(t);
        details.push(json!({
            "source": label,
            "unfolding": format!("{:?}", u.method),
            "levels_trimmed": u.n_dropped,
            "spacings_beyond_s_max": hist.n_outside,
            "brody_zero_spacings_excluded": brody.n_excluded,
            "r_ratios": r.count,
        }));
    }
    let extra = json!({
        "parity": parity.to_string(),
        "interaction": "symmetrized",
        "points": details,
    });
    Ok((stats, hists, extra))
}

/// Rows `J_over_V, Jp_over_V, F, eigindex, energy, F_raw` over `J/V = J'/V`.
pub fn locstate_table(cfg: &ResolvedConfig) -> Result<(Table, Value)> {
    let ratios = cfg.raw.locstate.as_ref().expect("resolved locstate").ratios.unwrap().values();
    if ratios.is_empty() {
        return Err(config_error("locstate grid is empty"));
    }
    let v = cfg.params.interaction;
    let reports = ratios
        .par_iter()
        .map(|&x| {
            let p = ModelParams::new(cfg.params.sites, x * v, x * v, v)?;
            Ok(localized_state_fidelity(&p, cfg.convention)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["J_over_V", "Jp_over_V", "F", "eigindex", "energy", "F_raw"]);
    for (x, r) in ratios.iter().zip(&reports) {
        table.push(vec![
            (*x).into(),
            (*x).into(),
            r.fidelity.into(),
            r.eigenstate.index.into(),
            r.eigenstate.energy.into(),
            r.raw_fidelity.into(),
        ]);
    }
    let extra = json!({
        "eigenspace": if reports.first().map_or(false, |r| r.ph_even_sector) {
            "particle-hole even sector"
        } else {
            "full half-filled sector"
        },
        "c2": reports.iter().map(|r| r.c2).collect::<Vec<_>>(),
        "c3": reports.iter().map(|r| r.c3).collect::<Vec<_>>(),
    });
    Ok((table, extra))
}

/// Rows `L, t_star, censored, window, monotonic` with times in the configured unit.
pub fn lifetime_table(cfg: &ResolvedConfig) -> Result<(Table, Value)> {
    let s = cfg.raw.lifetime.as_ref().expect("resolved lifetime");
    let sizes = s.sizes.clone().unwrap();
    let threshold = s.threshold.unwrap();
    let scale = cfg.time_unit.scale(&cfg.params)?;
    let results = sizes
        .par_iter()
        .map(|&l| {
            let p = ModelParams::new(l, cfg.params.hopping, cfg.params.odd_hopping, cfg.params.interaction)?;
            let basis = SectorBasis::half_filled(l)?;
            let psi0 = basis.basis_vector(cfg.initial_state(l)?)?;
            let h = build_hamiltonian(&p, &basis, cfg.convention)?;
            let spec = diagonalize_with_limit(&h, cfg.dense_limit())?;
            let times: Vec<f64> = cfg.grid.times().iter().map(|t| t * scale).collect();
            let series = return_probability(&spec, &psi0, &times)?;
            Ok(localization_lifetime(&series, threshold))
        })
        .collect::<Result<Vec<Lifetime>>>()?;
    let bounds: Vec<f64> = results.iter().map(|r| r.time().unwrap_or(f64::INFINITY)).collect();
    let monotonic = bounds.windows(2).all(|w| w[0] < w[1]);
    let mut table = Table::new(&["L", "t_star", "censored", "window", "monotonic"]);
    for (l, r) in sizes.iter().zip(&results) {
        let (t, censored) = match r {
            Lifetime::Crossed(t) => (t / scale, false),
            Lifetime::NotCrossed { .. } => (f64::NAN, true),
        };
        table.push(vec![(*l).into(), t.into(), censored.into(), cfg.grid.t_max().into(), monotonic.into()]);
    }
    let extra = json!({ "threshold": threshold, "monotonic": monotonic });
    Ok((table, extra))
}

/// Block initial states at half filling, longest block first.
pub fn states_table(sites: usize) -> Result<Table> {
    let mut table = Table::new(&["block_len", "pattern"]);
    for len in half_filling_block_lengths(sites) {
        let st = block_state(sites, len)?;
        table.push(vec![len.into(), Cell::Text(st.pattern(sites))]);
    }
    Ok(table)
}

/// Runs the configured experiment and returns the CSV files written.
pub fn run(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>> {
    let written = match cfg.experiment {
        Experiment::Quench => {
            let (t, extra) = quench_table(cfg)?;
            vec![write_table(cfg, "trajectory.csv", &t, extra)?]
        }
        Experiment::Sweep => {
            let (t, extra) = sweep_table(cfg)?;
            vec![write_table(cfg, "grid.csv", &t, extra)?]
        }
        Experiment::Spectrum => {
            let (stats, hists, extra) = spectrum_tables(cfg)?;
            let mut files = vec![write_table(cfg, "stats.csv", &stats, extra.clone())?];
            let single = hists.len() == 1;
            for (k, h) in hists.iter().enumerate() {
                let name = if single { "spacing_hist.csv".to_string() } else { format!("spacing_hist_{k}.csv") };
                files.push(write_table(cfg, &name, h, json!({ "point": extra["points"][k] }))?);
            }
            files
        }
        Experiment::Locstate => {
            let (t, extra) = locstate_table(cfg)?;
            vec![write_table(cfg, "locstate.csv", &t, extra)?]
        }
        Experiment::Lifetime => {
            let (t, extra) = lifetime_table(cfg)?;
            vec![write_table(cfg, "lifetime.csv", &t, extra)?]
        }
    };
    Ok(written)
}

/// [`run`] inside a pool of `cfg.threads()` workers.
pub fn run_with_pool(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads())
        .build()
        .map_err(|e| config_error(format!("thread pool: {e}")))?;
    pool.install(|| run(cfg))
}
