//! Bipartite entanglement of sector states across a chain cut.
//!
//! Sites `1..=cut` form the left half. Because the total particle number is
//! fixed, the reduced density matrix is block diagonal in the particle number
//! of the traced-out side, and each block is built from the amplitude matrix
//! `A[left pattern, right pattern]` of that particle-number split.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{FockState, SectorBasis};
use crate::error::{invalid, Result};
use crate::evolve::{sequential_evd, SpectralData, TimeSeries, Trajectory, NORM_TOLERANCE};
use crate::numeric::complex_norm;

/// Eigenvalues of the reduced density matrix below this are dropped from the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct RdmBlock {
    /// Particles on the kept side.
    pub particles: usize,
    pub matrix: DMatrix<Complex64>,
}

#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    side: Side,
    /// Sites on the kept side.
    sites: usize,
    blocks: Vec<RdmBlock>,
}

impl ReducedDensityMatrix {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn blocks(&self) -> &[RdmBlock] {
        &self.blocks
    }

    /// Size of the particle-number-compatible subspace of the kept side.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.matrix.nrows()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.matrix.trace().re).sum()
    }

    /// `Tr rho^2`
    pub fn purity(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Largest entry of `rho - rho^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (&b.matrix - b.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            let k = b.matrix.nrows();
            let m = faer::Mat::from_fn(k, k, |i, j| b.matrix[(i, j)]);
            // blocks come from a normalized state, so they are finite and the solver converges
            let (block, _) = sequential_evd(&m, false).expect("finite Hermitian block");
            values.extend(block.iter().map(|z| z.re));
        }
        values.sort_by(f64::total_cmp);
        values
    }

    /// Block-diagonal matrix with blocks in increasing particle number.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut offset = 0;
        for b in &self.blocks {
            let k = b.matrix.nrows();
            out.view_mut((offset, offset), (k, k)).copy_from(&b.matrix);
            offset += k;
        }
        out
    }
}

/// Reduced density matrix of `psi` on one side of the cut after site `cut`.
pub fn reduced_density_matrix(
    basis: &SectorBasis,
    psi: &[Complex64],
    cut: usize,
    side: Side,
) -> Result<ReducedDensityMatrix> {
    let sites = basis.sites();
    if cut == 0 || cut >= sites {
        return Err(invalid(format!("cut {cut} must lie in 1..{sites}")));
    }
    if psi.len() != basis.dim() {
        return Err(invalid(format!("state length {} != basis dim {}", psi.len(), basis.dim())));
    }
    let n = complex_norm(psi);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(invalid(format!("state has norm {n}, expected 1")));
    }
    let total = basis.particles();
    let right_sites = sites - cut;
    let mask = (1u64 << cut) - 1;

    // amplitude matrices indexed by the left particle number
    let lo = total.saturating_sub(right_sites);
    let hi = total.min(cut);
    let mut left_bases = Vec::new();
    let mut right_bases = Vec::new();
    let mut amps = Vec::new();
    for nl in lo..=hi {
        let lb = SectorBasis::segment(cut, nl, sites)?;
        let rb = SectorBasis::segment(right_sites, total - nl, sites)?;
        amps.push(DMatrix::<Complex64>::zeros(lb.dim(), rb.dim()));
        left_bases.push(lb);
        right_bases.push(rb);
    }
    for (state, amp) in basis.states().iter().zip(psi) {
        let bits = state.bits();
        let left = FockState::new(bits & mask);
        let right = FockState::new(bits >> cut);
        let k = left.particle_count() as usize - lo;
        amps[k][(left_bases[k].rank_unchecked(left), right_bases[k].rank_unchecked(right))] = *amp;
    }
    let mut blocks = amps
        .into_iter()
        .enumerate()
        .map(|(k, a)| match side {
            Side::Left => RdmBlock {
                particles: lo + k,
                matrix: &a * a.adjoint(),
            },
            Side::Right => RdmBlock {
                particles: total - lo - k,
                matrix: a.transpose() * a.map(|z| z.conj()),
            },
        })
        .collect::<Vec<_>>();
    blocks.sort_by_key(|b| b.particles);
    Ok(ReducedDensityMatrix {
        side,
        sites: if side == Side::Left { cut } else { right_sites },
        blocks,
    })
}

/// Real-amplitude convenience wrapper.
pub fn reduced_density_matrix_real(
    basis: &SectorBasis,
    psi: &[f64],
    cut: usize,
    side: Side,
) -> Result<ReducedDensityMatrix> {
    let c: Vec<Complex64> = psi.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    reduced_density_matrix(basis, &c, cut, side)
}

/// `-sum lambda ln lambda` over eigenvalues above [`ENTROPY_CUTOFF`].
pub fn entanglement_entropy(rho: &ReducedDensityMatrix) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|l| *l > ENTROPY_CUTOFF)
        .map(|l| -l * l.ln())
        .sum();
    s.max(0.0)
}

/// Half-chain entropy `S(t)` of `psi0` evolved with `spec`.
pub fn entropy_series(
    spec: &SpectralData,
    basis: &SectorBasis,
    psi0: &[f64],
    times: &[f64],
    cut: usize,
) -> Result<TimeSeries> {
    if spec.dim() != basis.dim() {
        return Err(invalid("spectrum and basis dimensions differ"));
    }
    let traj = Trajectory::new(spec, psi0)?;
    let values = times
        .par_iter()
        .map(|&t| {
            let rho = reduced_density_matrix(basis, &traj.state(t), cut, Side::Left)?;
            Ok(entanglement_entropy(&rho))
        })
        .collect::<Result<Vec<f64>>>()?;
    TimeSeries::new(times.to_vec(), values)
}
