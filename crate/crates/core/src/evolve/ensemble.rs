//! Diagonal and microcanonical ensembles.

use rayon::prelude::*;

use super::dynamics::amplitudes;
use super::SpectralData;
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::SparseOperator;
use crate::numeric::compensated_sum;

/// Windows with fewer eigenstates than this are flagged as low statistics.
pub const LOW_STATISTICS_COUNT: usize = 100;

/// `O_nu_nu = <psi_nu|O|psi_nu>` for every eigenstate.
pub fn eigenstate_expectations(spec: &SpectralData, op: &SparseOperator) -> Result<Vec<f64>> {
    if op.dim() != spec.dim() {
        return Err(invalid(format!(
            "observable dim {} != spectrum dim {}",
            op.dim(),
            spec.dim()
        )));
    }
    (0..spec.dim())
        .into_par_iter()
        .map(|nu| op.expectation(spec.vector(nu)))
        .collect()
}

/// `O_DE = sum_nu O_nu_nu |C_nu|^2`.
pub fn diagonal_ensemble_average(
    spec: &SpectralData,
    psi0: &[f64],
    op: &SparseOperator,
) -> Result<f64> {
    let c = amplitudes(spec, psi0)?;
    let diag = eigenstate_expectations(spec, op)?;
    Ok(compensated_sum(diag.iter().zip(&c).map(|(o, c)| o * c * c)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MicrocanonicalAverage {
    pub value: f64,
    /// Number of eigenstates in the window.
    pub count: usize,
    /// `count` below [`LOW_STATISTICS_COUNT`].
    pub low_statistics: bool,
}

/// Mean of `O_nu_nu` over eigenstates with `|E_ini - E_nu| < width`.
pub fn microcanonical_average(
    spec: &SpectralData,
    op: &SparseOperator,
    e_ini: f64,
    width: f64,
) -> Result<MicrocanonicalAverage> {
    let diag = eigenstate_expectations(spec, op)?;
    microcanonical_from_expectations(spec.energies(), &diag, e_ini, width)
}

/// Same as [`microcanonical_average`] with precomputed `O_nu_nu`.
pub fn microcanonical_from_expectations(
    energies: &[f64],
    expectations: &[f64],
    e_ini: f64,
    width: f64,
) -> Result<MicrocanonicalAverage> {
    if !(width > 0.0) {
        return Err(invalid(format!("window half-width must be positive, got {width}")));
    }
    if energies.len() != expectations.len() {
        return Err(invalid("energies and expectations differ in length"));
    }
    let picked: Vec<f64> = energies
        .iter()
        .zip(expectations)
        .filter(|(e, _)| (e_ini - **e).abs() < width)
        .map(|(_, o)| *o)
        .collect();
    if picked.is_empty() {
        return Err(Error::EmptyWindow {
            center: e_ini,
            width,
        });
    }
    let count = picked.len();
    Ok(MicrocanonicalAverage {
        value: compensated_sum(picked) / count as f64,
        count,
        low_statistics: count < LOW_STATISTICS_COUNT,
    })
}

/// `|(O_DE - O_ME) / (O_DE + O_ME)|`.
pub fn thermalization_deviation(diagonal: f64, microcanonical: f64) -> Result<f64> {
    let denominator = diagonal + microcanonical;
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::Undefined(format!(
            "relative deviation with O_DE = {diagonal}, O_ME = {microcanonical}"
        )));
    }
    Ok(((diagonal - microcanonical) / denominator).abs())
}
