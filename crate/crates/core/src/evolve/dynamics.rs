use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{SpectralData, TimeSeries, NORM_TOLERANCE};
use crate::error::{invalid, Result};
use crate::hamiltonian::SparseOperator;
use crate::numeric::{compensated_sum, dot, norm, ComplexKahanSum};

pub(crate) fn check_normalized(psi: &[f64]) -> Result<()> {
    let n = norm(psi);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(invalid(format!("initial state has norm {n}, expected 1")));
    }
    Ok(())
}

fn check_dim(spec: &SpectralData, len: usize) -> Result<()> {
    if len != spec.dim() {
        return Err(invalid(format!("vector length {len} != spectrum dim {}", spec.dim())));
    }
    Ok(())
}

/// Overlaps `C_nu = <psi_nu|psi0>`.
pub fn amplitudes(spec: &SpectralData, psi0: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec, psi0.len())?;
    check_normalized(psi0)?;
    Ok((0..spec.dim()).map(|nu| dot(spec.vector(nu), psi0)).collect())
}

/// Spectral propagation of one real initial state.
#[derive(Clone, Debug)]
pub struct Trajectory<'a> {
    spec: &'a SpectralData,
    coefficients: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> Trajectory<'a> {
    pub fn new(spec: &'a SpectralData, psi0: &[f64]) -> Result<Self> {
        let coefficients = amplitudes(spec, psi0)?;
        let mut weights: Vec<f64> = coefficients.iter().map(|c| c * c).collect();
        // absorb the eigensolver's round-off in the completeness sum
        let total = compensated_sum(weights.iter().copied());
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Trajectory {
            spec,
            coefficients,
            weights,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `|C_nu|^2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `<psi0| e^{-iHt} |psi0> = sum_nu |C_nu|^2 e^{-i E_nu t}`.
    pub fn survival_amplitude(&self, t: f64) -> Complex64 {
        let mut acc = ComplexKahanSum::default();
        for (w, e) in self.weights.iter().zip(self.spec.energies()) {
            if *w != 0.0 {
                acc.add(Complex64::from_polar(*w, -e * t));
            }
        }
        acc.value()
    }

    /// Clamped to `[0, 1]` against round-off.
    pub fn return_probability(&self, t: f64) -> f64 {
        self.survival_amplitude(t).norm_sqr().min(1.0)
    }

    /// `psi(t)` in the sector basis.
    pub fn state(&self, t: f64) -> Vec<Complex64> {
        let (re, im): (Vec<f64>, Vec<f64>) = self
            .coefficients
            .iter()
            .zip(self.spec.energies())
            .map(|(c, e)| {
                let phase = Complex64::from_polar(*c, -e * t);
                (phase.re, phase.im)
            })
            .unzip();
        let v = self.spec.vectors();
        let re = v * DVector::from_vec(re);
        let im = v * DVector::from_vec(im);
        re.iter()
            .zip(im.iter())
            .map(|(a, b)| Complex64::new(*a, *b))
            .collect()
    }
}

/// `P(t) = |<psi0| e^{-iHt} |psi0>|^2` on `times`.
pub fn return_probability(spec: &SpectralData, psi0: &[f64], times: &[f64]) -> Result<TimeSeries> {
    let traj = Trajectory::new(spec, psi0)?;
    let values = times.par_iter().map(|&t| traj.return_probability(t)).collect();
    TimeSeries::new(times.to_vec(), values)
}

/// Energy spread `sqrt(<H^2> - <H>^2)` of `psi0`, from two sparse products.
pub fn short_time_decay_rate(h: &SparseOperator, psi0: &[f64]) -> Result<f64> {
    check_normalized(psi0)?;
    let hpsi = h.apply(psi0)?;
    let mean = dot(psi0, &hpsi);
    let second = dot(&hpsi, &hpsi);
    Ok((second - mean * mean).max(0.0).sqrt())
}

/// Mean of `P(t)` over `samples` uniform points on `[0, window]`.
pub fn time_averaged_return_probability(
    spec: &SpectralData,
    psi0: &[f64],
    window: f64,
    samples: usize,
) -> Result<f64> {
    let grid = super::TimeGrid::new(window, samples)?;
    let series = return_probability(spec, psi0, &grid.times())?;
    Ok(compensated_sum(series.values().iter().copied()) / samples as f64)
}

/// First time a series drops below a threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lifetime {
    Crossed(f64),
    /// Never below the threshold within `[0, window]`.
    NotCrossed { window: f64 },
}

impl Lifetime {
    pub fn time(&self) -> Option<f64> {
        match self {
            Lifetime::Crossed(t) => Some(*t),
            Lifetime::NotCrossed { .. } => None,
        }
    }
}

/// Time at which `series` first falls below `threshold`, linearly
/// interpolated between the bracketing samples.
pub fn localization_lifetime(series: &TimeSeries, threshold: f64) -> Lifetime {
    let t = series.times();
    let p = series.values();
    match p.iter().position(|&x| x < threshold) {
        None => Lifetime::NotCrossed {
            window: t.last().copied().unwrap_or(0.0),
        },
        Some(0) => Lifetime::Crossed(t[0]),
        Some(k) => {
            let (t0, t1) = (t[k - 1], t[k]);
            let (p0, p1) = (p[k - 1], p[k]);
            Lifetime::Crossed(t0 + (p0 - threshold) / (p0 - p1) * (t1 - t0))
        }
    }
}

/// `<psi(t)|O|psi(t)>` on `times`.
pub fn expectation_series(
    spec: &SpectralData,
    psi0: &[f64],
    op: &SparseOperator,
    times: &[f64],
) -> Result<TimeSeries> {
    if op.dim() != spec.dim() {
        return Err(invalid(format!(
            "observable dim {} != spectrum dim {}",
            op.dim(),
            spec.dim()
        )));
    }
    let traj = Trajectory::new(spec, psi0)?;
    let values = times
        .par_iter()
        .map(|&t| op.expectation_complex(&traj.state(t)))
        .collect::<Result<Vec<f64>>>()?;
    TimeSeries::new(times.to_vec(), values)
}
