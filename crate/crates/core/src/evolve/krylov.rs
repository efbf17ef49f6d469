//! Lanczos propagator for `exp(-iH dt) psi` without full diagonalization.

use num_complex::Complex64;

use super::{sequential_evd, NORM_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::SparseOperator;
use crate::numeric::complex_norm;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Maximum Lanczos vectors per sub-step.
    pub subspace_dim: usize,
    /// Bound on the per-sub-step error estimate.
    pub tolerance: f64,
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            subspace_dim: 30,
            tolerance: 1e-10,
            max_substeps: 100_000,
        }
    }
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    /// Eigenpairs of the tridiagonal projection.
    values: Vec<f64>,
    vectors: faer::Mat<f64>,
    /// Norm of the first discarded residual; zero after an exact breakdown.
    residual: f64,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl Lanczos {
    fn build(h: &SparseOperator, start: &[Complex64], max_dim: usize) -> Result<Self> {
        let m = max_dim.min(h.dim()).max(1);
        let n0 = complex_norm(start);
        let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|z| z / n0).collect()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut residual = 0.0;
        loop {
            let j = basis.len() - 1;
            let mut w = h.apply(&basis[j])?;
            let a = inner(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization against every stored vector
            for _ in 0..2 {
                for v in &basis {
                    let c = inner(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let b = complex_norm(&w);
            let scale = alpha.iter().chain(&beta).fold(1.0f64, |s, x| s.max(x.abs()));
            if b <= 1e-13 * scale {
                break;
            }
            if basis.len() == m {
                residual = b;
                break;
            }
            beta.push(b);
            basis.push(w.into_iter().map(|z| z / b).collect());
        }
        let k = alpha.len();
        let mut t = faer::Mat::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        // nalgebra's SymmetricEigen leaves residuals near 1e-8 on some of these
        let (values, vectors) = sequential_evd(&t, true)?;
        Ok(Lanczos {
            basis,
            values,
            vectors: vectors.expect("eigenvectors requested"),
            residual,
        })
    }

    /// Subspace coefficients of `exp(-i T tau) e_1` and the error estimate.
    fn propagate(&self, tau: f64) -> (Vec<Complex64>, f64) {
        let q = &self.vectors;
        let k = q.nrows();
        let phases: Vec<Complex64> = self
            .values
            .iter()
            .enumerate()
            .map(|(l, lam)| Complex64::from_polar(q[(0, l)], -lam * tau))
            .collect();
        let y: Vec<Complex64> = (0..k)
            .map(|i| (0..k).map(|l| phases[l] * q[(i, l)]).sum())
            .collect();
        let err = self.residual * y[k - 1].norm();
        (y, err)
    }

    fn combine(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.basis[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (c, v) in y.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }
}

/// `exp(-i H dt) psi`, sub-stepping until each Lanczos step's error estimate
/// is below `opts.tolerance`. Negative `dt` evolves backwards.
pub fn krylov_evolve(
    h: &SparseOperator,
    psi: &[Complex64],
    dt: f64,
    opts: &KrylovOptions,
) -> Result<Vec<Complex64>> {
    if psi.len() != h.dim() {
        return Err(invalid(format!("state length {} != operator dim {}", psi.len(), h.dim())));
    }
    let n = complex_norm(psi);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(invalid(format!("state has norm {n}, expected 1")));
    }
    if opts.subspace_dim == 0 {
        return Err(invalid("Krylov subspace dimension must be positive"));
    }
    if !dt.is_finite() {
        return Err(invalid("time step must be finite"));
    }
    let mut state = psi.to_vec();
    let mut remaining = dt;
    let mut step = dt;
    let mut substeps = 0usize;
    while remaining != 0.0 {
        let lanczos = Lanczos::build(h, &state, opts.subspace_dim)?;
        loop {
            let tau = if step.abs() >= remaining.abs() { remaining } else { step };
            let (y, err) = lanczos.propagate(tau);
            substeps += 1;
            if substeps > opts.max_substeps {
                return Err(Error::Convergence(opts.max_substeps));
            }
            if err <= opts.tolerance {
                state = lanczos.combine(&y);
                let norm = complex_norm(&state);
                state.iter_mut().for_each(|z| *z /= norm);
                remaining -= tau;
                break;
            }
            step = tau / 2.0;
        }
    }
    Ok(state)
}
