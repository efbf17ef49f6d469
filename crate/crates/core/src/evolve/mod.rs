//! Spectral decomposition and unitary time evolution within one sector.
//!
//! Everything here works with `hbar = 1`. Time grids are expressed in units of
//! `1/|V|` or `1/|J|` through [`TimeUnit`] and converted to physical times
//! before any propagation.

mod dynamics;
mod ensemble;
mod krylov;

pub use dynamics::{
    amplitudes, expectation_series, localization_lifetime, return_probability,
    short_time_decay_rate, time_averaged_return_probability, Lifetime, Trajectory,
};
pub use ensemble::{
    diagonal_ensemble_average, eigenstate_expectations, microcanonical_average,
    microcanonical_from_expectations, thermalization_deviation, MicrocanonicalAverage,
    LOW_STATISTICS_COUNT,
};
pub use krylov::{krylov_evolve, KrylovOptions};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::Par;
use nalgebra::DMatrix;

use crate::basis::FockState;
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{ModelParams, SparseOperator};

/// Largest sector handled by full diagonalization by default.
pub const DEFAULT_DENSE_LIMIT: usize = 20_000;

/// Tolerance on `||psi|| - 1` for inputs that must be normalized.
pub(crate) const NORM_TOLERANCE: f64 = 1e-10;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralData {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralData {
    /// Wraps an externally computed decomposition. Energies must be ascending
    /// and `vectors` square with one column per energy.
    pub fn from_parts(energies: Vec<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != energies.len() || vectors.ncols() != energies.len() {
            return Err(invalid("eigenvector matrix does not match the number of energies"));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("energies must be ascending"));
        }
        Ok(SpectralData { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Eigenvector `index` as a slice of the column-major storage.
    pub fn vector(&self, index: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors.as_slice()[index * n..(index + 1) * n]
    }
}

fn to_faer(h: &SparseOperator) -> faer::Mat<f64> {
    let n = h.dim();
    let mut m = faer::Mat::<f64>::zeros(n, n);
    for (i, &d) in h.diag().iter().enumerate() {
        m[(i, i)] = d;
    }
    for &(r, c, x) in h.offdiag() {
        m[(r, c)] = x;
        m[(c, r)] = x;
    }
    m
}

fn check_dense_limit(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        Err(Error::Capacity { dim, limit })
    } else {
        Ok(())
    }
}

/// Full eigendecomposition with the default dense limit.
pub fn diagonalize(h: &SparseOperator) -> Result<SpectralData> {
    diagonalize_with_limit(h, DEFAULT_DENSE_LIMIT)
}

pub fn diagonalize_with_limit(h: &SparseOperator, limit: usize) -> Result<SpectralData> {
    check_dense_limit(h.dim(), limit)?;
    let n = h.dim();
    let (values, u) = sequential_evd(&to_faer(h), true)?;
    let u = u.expect("eigenvectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let energies = order.iter().map(|&k| values[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(SpectralData { energies, vectors })
}

/// Ascending eigenvalues only.
pub fn eigenvalues(h: &SparseOperator) -> Result<Vec<f64>> {
    eigenvalues_with_limit(h, DEFAULT_DENSE_LIMIT)
}

pub fn eigenvalues_with_limit(h: &SparseOperator, limit: usize) -> Result<Vec<f64>> {
    check_dense_limit(h.dim(), limit)?;
    let (mut values, _) = sequential_evd(&to_faer(h), false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

// Sequential on purpose: callers parallelize across grid points, and a
// thread-count-dependent blocking would make output depend on the pool size.
pub(crate) fn sequential_evd<T: faer::traits::ComplexField>(
    a: &faer::Mat<T>,
    vectors: bool,
) -> Result<(Vec<T>, Option<faer::Mat<T>>)> {
    let n = a.nrows();
    let par = Par::Seq;
    let compute = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let mut s = faer::diag::Diag::<T>::zeros(n);
    let mut u = vectors.then(|| faer::Mat::<T>::zeros(n, n));
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<T>(n, compute, par, Default::default()));
    evd::self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        u.as_mut().map(|m| m.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = (0..n).map(|i| s[i].clone()).collect();
    Ok((values, u))
}

/// Unit in which a time grid is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum TimeUnit {
    /// `1/|V|`
    #[default]
    InverseInteraction,
    /// `1/|J|`
    InverseHopping,
}

impl TimeUnit {
    /// Physical duration of one unit for `params`.
    pub fn scale(self, params: &ModelParams) -> Result<f64> {
        let (energy, name) = match self {
            TimeUnit::InverseInteraction => (params.interaction, "V"),
            TimeUnit::InverseHopping => (params.hopping, "J"),
        };
        if energy == 0.0 {
            return Err(invalid(format!("time unit 1/|{name}| undefined for {name} = 0")));
        }
        Ok(1.0 / energy.abs())
    }
}

impl std::str::FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_V" => Ok(TimeUnit::InverseInteraction),
            "inv_J" => Ok(TimeUnit::InverseHopping),
            other => Err(invalid(format!("unknown time unit {other:?}"))),
        }
    }
}

impl std::fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TimeUnit::InverseInteraction => "inv_V",
            TimeUnit::InverseHopping => "inv_J",
        })
    }
}

/// `samples` equally spaced points on `[0, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    samples: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, samples: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid(format!("t_max must be positive, got {t_max}")));
        }
        if samples < 2 {
            return Err(invalid(format!("a time grid needs at least 2 samples, got {samples}")));
        }
        Ok(TimeGrid { t_max, samples })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        let step = self.t_max / (self.samples - 1) as f64;
        (0..self.samples).map(|i| i as f64 * step).collect()
    }

    /// Same grid with every time multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        TimeGrid::new(self.t_max * factor, self.samples)
    }
}

/// A quench from a Fock state, sampled on a grid in `time_unit` units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuenchSpec {
    pub initial: FockState,
    pub grid: TimeGrid,
    pub time_unit: TimeUnit,
}

impl QuenchSpec {
    /// Grid converted to physical times (`hbar = 1`).
    pub fn physical_grid(&self, params: &ModelParams) -> Result<TimeGrid> {
        self.grid.scaled(self.time_unit.scale(params)?)
    }
}

/// Samples of a scalar observable on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times must be strictly increasing"));
        }
        Ok(TimeSeries { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Arithmetic mean of the samples with `t_lo <= t <= t_hi`.
    pub fn window_mean(&self, t_lo: f64, t_hi: f64) -> Option<f64> {
        let picked: Vec<f64> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
            .map(|(_, v)| *v)
            .collect();
        if picked.is_empty() {
            None
        } else {
            Some(crate::numeric::compensated_sum(picked.iter().copied()) / picked.len() as f64)
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.values.is_empty() {
            None
        } else {
            Some(crate::numeric::compensated_sum(self.values.iter().copied()) / self.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SectorBasis;
    use crate::hamiltonian::{build_hamiltonian, InteractionConvention};

    #[test]
    fn two_level_spectrum() {
        let basis = SectorBasis::new(2, 1).unwrap();
        let p = ModelParams::new(2, -0.8, 0.0, 1.0).unwrap();
        let h = build_hamiltonian(&p, &basis, InteractionConvention::Plain).unwrap();
        let spec = diagonalize(&h).unwrap();
        assert!((spec.energies()[0] + 0.8).abs() < 1e-14);
        assert!((spec.energies()[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn spectral_invariants_l8() {
        let basis = SectorBasis::new(8, 4).unwrap();
        let p = ModelParams::new(8, -0.6, -0.35, 1.0).unwrap();
        let h = build_hamiltonian(&p, &basis, InteractionConvention::Plain).unwrap();
        let spec = diagonalize(&h).unwrap();
        assert!(spec.energies().windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = spec.energies().iter().sum();
        assert!((trace - h.trace()).abs() < 1e-10 * h.trace().abs().max(1.0));
        let emax = spec.energies().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for nu in 0..spec.dim() {
            let v = spec.vector(nu);
            let hv = h.apply(v).unwrap();
            let res: f64 = hv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - spec.energies()[nu] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-10 * emax);
        }
        let gram = spec.vectors().transpose() * spec.vectors();
        let err = (gram - DMatrix::identity(spec.dim(), spec.dim())).amax();
        assert!(err < 1e-12);
    }

    #[test]
    fn capacity_error() {
        let h = SparseOperator::identity(10);
        assert!(matches!(
            diagonalize_with_limit(&h, 5),
            Err(Error::Capacity { dim: 10, limit: 5 })
        ));
    }

    #[test]
    fn grids_and_units() {
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 5).is_err());
        let g = TimeGrid::new(2.0, 5).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let p = ModelParams::new(4, -0.5, 0.0, 2.0).unwrap();
        assert_eq!(TimeUnit::InverseInteraction.scale(&p).unwrap(), 0.5);
        assert_eq!(TimeUnit::InverseHopping.scale(&p).unwrap(), 2.0);
        let p0 = ModelParams::new(4, 0.0, 0.0, 2.0).unwrap();
        assert!(TimeUnit::InverseHopping.scale(&p0).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        let s = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.window_mean(0.5, 2.0), Some(3.0));
        assert_eq!(s.window_mean(5.0, 6.0), None);
    }
}
