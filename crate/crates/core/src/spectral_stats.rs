//! Level-spacing statistics of a symmetry-resolved spectrum.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::basis::{Parity, PhSectorBasis, SectorBasis};
use crate::error::{invalid, Error, Result};
use crate::evolve::eigenvalues;
use crate::hamiltonian::{build_hamiltonian, project_to_ph_sector, InteractionConvention, ModelParams};

pub const DEFAULT_POLY_DEGREE: usize = 10;
pub const DEFAULT_TRIM_FRACTION: f64 = 0.025;
pub const LOCAL_MEAN_WINDOW: usize = 20;
pub const MIN_UNFOLDED_LEVELS: usize = 50;
pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
pub const DEFAULT_S_MAX: f64 = 5.0;
pub const MIN_BRODY_SPACINGS: usize = 100;
pub const BRODY_BETA_MAX: f64 = 1.2;
/// Raw spacings below this fraction of the spectral width count as degenerate.
pub const DEGENERATE_SPACING: f64 = 1e-12;

pub fn poisson_density(s: f64) -> f64 {
    (-s).exp()
}

/// `(pi s / 2) exp(-pi s^2 / 4)`
pub fn wigner_dyson_density(s: f64) -> f64 {
    let pi = std::f64::consts::PI;
    0.5 * pi * s * (-0.25 * pi * s * s).exp()
}

fn brody_b(beta: f64) -> f64 {
    gamma((beta + 2.0) / (beta + 1.0)).powf(beta + 1.0)
}

/// `(beta + 1) b s^beta exp(-b s^(beta + 1))`
pub fn brody_density(s: f64, beta: f64) -> f64 {
    let b = brody_b(beta);
    (beta + 1.0) * b * s.powf(beta) * (-b * s.powf(beta + 1.0)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnfoldingMethod {
    Polynomial { degree: usize },
    /// Used when the fitted staircase is not monotone.
    LocalMean { window: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedSpectrum {
    /// Unit-mean nearest-neighbour spacings.
    pub spacings: Vec<f64>,
    /// Levels discarded at the two band edges together.
    pub n_dropped: usize,
    pub method: UnfoldingMethod,
}

/// Legendre polynomials `P_0..=P_degree` at `x`.
fn legendre_row(x: f64, degree: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(degree + 1);
    p.push(1.0);
    if degree >= 1 {
        p.push(x);
    }
    for k in 1..degree {
        let kf = k as f64;
        p.push(((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0));
    }
    p
}

fn rescale_to_unit_mean(spacings: &mut [f64]) -> Result<()> {
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::FitFailure("spacings have zero mean".into()));
    }
    spacings.iter_mut().for_each(|s| *s /= mean);
    Ok(())
}

/// Fits the staircase `N(E_i) = i` with a polynomial and returns unit-mean
/// spacings of the fitted staircase on the interior levels.
pub fn unfold(energies: &[f64], poly_degree: usize, trim_fraction: f64) -> Result<UnfoldedSpectrum> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(invalid(format!("trim fraction {trim_fraction} outside [0, 0.5)")));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) || energies.iter().any(|e| !e.is_finite()) {
        return Err(invalid("energies must be finite and ascending"));
    }
    let n = energies.len();
    let cut = (trim_fraction * n as f64).floor() as usize;
    let kept = n.saturating_sub(2 * cut);
    if kept < MIN_UNFOLDED_LEVELS {
        return Err(invalid(format!(
            "{kept} levels after trimming, need at least {MIN_UNFOLDED_LEVELS}"
        )));
    }
    let (lo, hi) = (energies[0], energies[n - 1]);
    if hi == lo {
        return Err(Error::FitFailure("all levels coincide".into()));
    }
    let x: Vec<f64> = energies.iter().map(|e| 2.0 * (e - lo) / (hi - lo) - 1.0).collect();
    let degree = poly_degree.min(n - 1);
    let design = DMatrix::from_fn(n, degree + 1, |i, k| legendre_row(x[i], degree)[k]);
    let target = DVector::from_fn(n, |i, _| i as f64);
    let coeffs = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    let fitted = design * coeffs;

    let interior = cut..n - cut;
    let mut spacings: Vec<f64> = interior
        .clone()
        .zip(interior.clone().skip(1))
        .map(|(i, j)| fitted[j] - fitted[i])
        .collect();
    let mut method = UnfoldingMethod::Polynomial { degree };
    if spacings.iter().any(|s| *s < 0.0) {
        let raw: Vec<f64> = energies[interior].windows(2).map(|w| w[1] - w[0]).collect();
        spacings = local_mean_unfold(&raw, LOCAL_MEAN_WINDOW)?;
        method = UnfoldingMethod::LocalMean {
            window: LOCAL_MEAN_WINDOW,
        };
    }
    rescale_to_unit_mean(&mut spacings)?;
    Ok(UnfoldedSpectrum {
        spacings,
        n_dropped: 2 * cut,
        method,
    })
}

/// Each raw spacing divided by the mean of the `window` spacings around it.
fn local_mean_unfold(raw: &[f64], window: usize) -> Result<Vec<f64>> {
    let n = raw.len();
    let w = window.min(n).max(1);
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(raw.iter().scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        }))
        .collect();
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(w / 2).min(n - w);
            let mean = (prefix[start + w] - prefix[start]) / w as f64;
            if mean > 0.0 {
                Ok(raw[i] / mean)
            } else {
                Err(Error::FitFailure(format!("zero local mean spacing at level {i}")))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingHistogram {
    pub bin_width: f64,
    /// `densities.len() + 1` uniform edges from 0 to `s_max`.
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    /// Spacings beyond `s_max`, left out of the normalization.
    pub n_outside: usize,
}

impl SpacingHistogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Histogram whose densities are `density` sampled at the bin centers.
    pub fn from_density(density: impl Fn(f64) -> f64, bin_width: f64, s_max: f64) -> Result<Self> {
        let edges = bin_edges(bin_width, s_max)?;
        let densities = edges.windows(2).map(|w| density(0.5 * (w[0] + w[1]))).collect();
        Ok(SpacingHistogram {
            bin_width,
            bin_edges: edges,
            densities,
            n_outside: 0,
        })
    }
}

fn bin_edges(bin_width: f64, s_max: f64) -> Result<Vec<f64>> {
    if !(bin_width > 0.0) || !(s_max > 0.0) {
        return Err(invalid("bin width and range must be positive"));
    }
    let bins = (s_max / bin_width).round() as usize;
    if bins == 0 || ((bins as f64) * bin_width - s_max).abs() > 1e-9 * s_max {
        return Err(invalid(format!("range {s_max} is not a multiple of bin width {bin_width}")));
    }
    Ok((0..=bins).map(|k| k as f64 * bin_width).collect())
}

/// Density histogram on `[0, s_max]` normalized over the in-range spacings.
pub fn histogram(spacings: &[f64], bin_width: f64, s_max: f64) -> Result<SpacingHistogram> {
    let edges = bin_edges(bin_width, s_max)?;
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    for &s in spacings {
        if !(s >= 0.0) {
            return Err(invalid(format!("negative or NaN spacing {s}")));
        }
        if s > s_max {
            outside += 1;
            continue;
        }
        counts[((s / bin_width) as usize).min(bins - 1)] += 1;
    }
    let inside = spacings.len() - outside;
    let scale = if inside > 0 { 1.0 / (inside as f64 * bin_width) } else { 0.0 };
    Ok(SpacingHistogram {
        bin_width,
        bin_edges: edges,
        densities: counts.iter().map(|&c| c as f64 * scale).collect(),
        n_outside: outside,
    })
}

/// `sum_i |P(s_i) - P_WD(s_i)| / sum_i P_WD(s_i)` over bin centers.
pub fn alpha_indicator(hist: &SpacingHistogram) -> f64 {
    let (num, den) = hist
        .bin_centers()
        .iter()
        .zip(&hist.densities)
        .fold((0.0, 0.0), |(n, d), (&s, &p)| {
            let wd = wigner_dyson_density(s);
            (n + (p - wd).abs(), d + wd)
        });
    num / den
}

/// Center of the highest bin; ties go to the lower `s`.
pub fn peak_position(hist: &SpacingHistogram) -> Result<f64> {
    let centers = hist.bin_centers();
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in hist.densities.iter().enumerate() {
        if best.map_or(true, |(_, b)| p > b) {
            best = Some((i, p));
        }
    }
    match best {
        Some((i, p)) if p > 0.0 => Ok(centers[i]),
        _ => Err(invalid("histogram is empty")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrodyFit {
    pub beta: f64,
    pub log_likelihood: f64,
    /// Zero spacings, which have vanishing likelihood for any `beta > 0`,
    /// are left out of the fit.
    pub n_excluded: usize,
}

fn brody_log_likelihood(log_s: &[f64], s: &[f64], beta: f64) -> f64 {
    let b = brody_b(beta);
    let base = ((beta + 1.0) * b).ln();
    log_s
        .iter()
        .zip(s)
        .map(|(ls, s)| base + beta * ls - b * s.powf(beta + 1.0))
        .sum()
}

/// Maximum-likelihood Brody parameter on `[0, 1.2]`.
pub fn brody_fit(spacings: &[f64]) -> Result<BrodyFit> {
    let mut s: Vec<f64> = spacings.iter().copied().filter(|x| *x > 0.0).collect();
    let n_excluded = spacings.len() - s.len();
    if s.len() < MIN_BRODY_SPACINGS {
        return Err(invalid(format!(
            "{} positive spacings, need at least {MIN_BRODY_SPACINGS}",
            s.len()
        )));
    }
    if s.iter().all(|x| *x == s[0]) {
        return Err(Error::FitFailure("all spacings are equal".into()));
    }
    rescale_to_unit_mean(&mut s)?;
    let log_s: Vec<f64> = s.iter().map(|x| x.ln()).collect();
    let ll = |beta: f64| brody_log_likelihood(&log_s, &s, beta);

    let steps = 120;
    let h = BRODY_BETA_MAX / steps as f64;
    let best = (0..=steps)
        .map(|k| k as f64 * h)
        .map(|b| (b, ll(b)))
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (mut a, mut c) = ((best.0 - h).max(0.0), (best.0 + h).min(BRODY_BETA_MAX));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = c - ratio * (c - a);
    let mut x2 = a + ratio * (c - a);
    let (mut f1, mut f2) = (ll(x1), ll(x2));
    while c - a > 1e-5 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (c - a);
            f2 = ll(x2);
        } else {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - ratio * (c - a);
            f1 = ll(x1);
        }
    }
    let mut beta = 0.5 * (a + c);
    let mut value = ll(beta);
    // the maximum can sit on the boundary of the search interval
    for edge in [0.0, BRODY_BETA_MAX] {
        let v = ll(edge);
        if v > value {
            beta = edge;
            value = v;
        }
    }
    Ok(BrodyFit {
        beta,
        log_likelihood: value,
        n_excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RStatistic {
    pub mean: f64,
    /// Number of ratios averaged.
    pub count: usize,
    /// Raw spacings classed as degenerate.
    pub n_degenerate: usize,
}

/// Mean of `min(s_n, s_{n+1}) / max(s_n, s_{n+1})` over raw spacings; ratios
/// touching a degenerate spacing are skipped.
pub fn r_statistic(energies: &[f64]) -> Result<RStatistic> {
    if energies.len() < 3 {
        return Err(invalid("need at least three levels"));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("energies must be ascending"));
    }
    let width = energies[energies.len() - 1] - energies[0];
    let floor = DEGENERATE_SPACING * width;
    let gaps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let n_degenerate = gaps.iter().filter(|g| **g < floor || **g == 0.0).count();
    let ratios: Vec<f64> = gaps
        .windows(2)
        .filter(|w| w[0] >= floor && w[1] >= floor && w[0] > 0.0 && w[1] > 0.0)
        .map(|w| w[0].min(w[1]) / w[0].max(w[1]))
        .collect();
    if ratios.is_empty() {
        return Err(Error::Undefined("every gap ratio involves a degenerate spacing".into()));
    }
    Ok(RStatistic {
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
        count: ratios.len(),
        n_degenerate,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumStatistics {
    pub alpha: f64,
    pub beta: f64,
    pub peak: f64,
    pub r_mean: f64,
    pub n_levels: usize,
    pub n_degenerate: usize,
    pub unfolding: UnfoldingMethod,
    pub histogram: SpacingHistogram,
}

/// Unfold, bin and fit with the default settings.
pub fn analyze_spectrum(energies: &[f64]) -> Result<SpectrumStatistics> {
    let unfolded = unfold(energies, DEFAULT_POLY_DEGREE, DEFAULT_TRIM_FRACTION)?;
    let hist = histogram(&unfolded.spacings, DEFAULT_BIN_WIDTH, DEFAULT_S_MAX)?;
    let r = r_statistic(energies)?;
    Ok(SpectrumStatistics {
        alpha: alpha_indicator(&hist),
        beta: brody_fit(&unfolded.spacings)?.beta,
        peak: peak_position(&hist)?,
        r_mean: r.mean,
        n_levels: energies.len(),
        n_degenerate: r.n_degenerate,
        unfolding: unfolded.method,
        histogram: hist,
    })
}

/// Ascending levels of the symmetrized Hamiltonian in one particle-hole sector
/// of the half-filled chain.
pub fn ph_sector_levels(params: &ModelParams, parity: Parity) -> Result<Vec<f64>> {
    let basis = SectorBasis::half_filled(params.sites)?;
    let sector = PhSectorBasis::new(&basis, parity)?;
    let h = build_hamiltonian(params, &basis, InteractionConvention::Symmetrized)?;
    eigenvalues(&project_to_ph_sector(&h, &sector)?)
}
