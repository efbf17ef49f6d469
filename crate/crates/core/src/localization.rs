//! Second-order localized eigenstate near the Ising limit and its overlap
//! with the numerically exact eigenstate.

use crate::basis::{domain_wall_state, ph_complement, FockState, Parity, PhSectorBasis, SectorBasis};
use crate::error::{invalid, Error, Result};
use crate::evolve::{diagonalize, SpectralData};
use crate::hamiltonian::{build_hamiltonian, project_to_ph_sector, InteractionConvention, ModelParams};
use crate::numeric::{dot, norm};

/// Energy gap below which neighbouring eigenvalues are treated as one
/// degenerate subspace.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbativeState {
    /// Normalized amplitudes in the half-filled sector basis.
    pub vector: Vec<f64>,
    /// `J/V + J' J / V^2`
    pub c2: f64,
    /// `J'/V + J^2 / V^2`
    pub c3: f64,
    /// Norm of the state as written with its `1/sqrt(2)` prefactor, before
    /// renormalization.
    pub raw_norm: f64,
    /// `(state, weight)` before normalization, each pattern followed by its complement.
    pub support: Vec<(FockState, f64)>,
}

impl PerturbativeState {
    /// Overlap the unnormalized state (`1/sqrt(2)` prefactor) would give.
    pub fn raw_overlap(&self, normalized_overlap: f64) -> f64 {
        normalized_overlap * self.raw_norm
    }
}

/// Domain wall with one particle moved from the wall's last filled site
/// `L/2` to site `L/2 + shift`.
fn moved_particle(sites: usize, shift: usize) -> FockState {
    let dw = domain_wall_state(sites).expect("validated size").bits();
    let half = sites / 2;
    FockState::new((dw & !(1u64 << (half - 1))) | (1u64 << (half + shift - 1)))
}

/// Builds `phi_loc` for `L = 4m + 2`.
pub fn build_phi_loc(params: &ModelParams, basis: &SectorBasis) -> Result<PerturbativeState> {
    params.validate()?;
    let sites = params.sites;
    if sites % 4 != 2 {
        return Err(Error::UnsupportedSize(sites));
    }
    if params.interaction == 0.0 {
        return Err(invalid("perturbative state needs V != 0"));
    }
    if basis.sites() != sites || !basis.is_half_filled() {
        return Err(invalid("basis must be the half-filled sector of the same chain"));
    }
    let j = params.hopping / params.interaction;
    let jp = params.odd_hopping / params.interaction;
    let c2 = j + jp * j;
    let c3 = jp + j * j;

    let phi1 = domain_wall_state(sites)?;
    let phi2 = moved_particle(sites, 1);
    let phi3 = moved_particle(sites, 2);
    let mut support = Vec::with_capacity(6);
    for (s, w) in [(phi1, 1.0), (phi2, c2), (phi3, c3)] {
        if w != 0.0 {
            support.push((s, w));
            support.push((ph_complement(s, sites), w));
        }
    }

    let mut vector = vec![0.0; basis.dim()];
    for &(s, w) in &support {
        vector[basis.rank(s)?] = w;
    }
    let n = norm(&vector);
    vector.iter_mut().for_each(|x| *x /= n);
    Ok(PerturbativeState {
        vector,
        c2,
        c3,
        raw_norm: n / std::f64::consts::SQRT_2,
        support,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizedEigenstate {
    pub index: usize,
    pub energy: f64,
    /// `|<psi|psi_nu*>|`
    pub overlap: f64,
}

/// Eigenstate with the largest overlap with `psi`; ties go to the lower energy.
pub fn find_localized_eigenstate(spec: &SpectralData, psi: &[f64]) -> Result<LocalizedEigenstate> {
    if psi.len() != spec.dim() {
        return Err(invalid(format!("state length {} != spectrum dim {}", psi.len(), spec.dim())));
    }
    let mut best: Option<LocalizedEigenstate> = None;
    for nu in 0..spec.dim() {
        let overlap = dot(spec.vector(nu), psi).abs();
        // energies are ascending, so a strict comparison keeps the lower one
        if best.map_or(true, |b| overlap > b.overlap) {
            best = Some(LocalizedEigenstate {
                index: nu,
                energy: spec.energies()[nu],
                overlap,
            });
        }
    }
    best.ok_or_else(|| invalid("empty spectrum"))
}

/// Index range of the eigenvalues linked to `index` by gaps below [`DEGENERACY_GAP`].
pub fn degenerate_cluster(energies: &[f64], index: usize) -> std::ops::Range<usize> {
    let mut lo = index;
    while lo > 0 && energies[lo] - energies[lo - 1] < DEGENERACY_GAP {
        lo -= 1;
    }
    let mut hi = index + 1;
    while hi < energies.len() && energies[hi] - energies[hi - 1] < DEGENERACY_GAP {
        hi += 1;
    }
    lo..hi
}

/// Norm of the projection of `phi` onto the eigenspace containing eigenstate `index`.
pub fn fidelity(phi: &[f64], spec: &SpectralData, index: usize) -> Result<f64> {
    if phi.len() != spec.dim() {
        return Err(invalid(format!("state length {} != spectrum dim {}", phi.len(), spec.dim())));
    }
    if index >= spec.dim() {
        return Err(invalid(format!("eigen index {index} out of range")));
    }
    let sq: f64 = degenerate_cluster(spec.energies(), index)
        .map(|mu| dot(spec.vector(mu), phi).powi(2))
        .sum();
    Ok(sq.sqrt().min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub c2: f64,
    pub c3: f64,
    /// Overlap with the normalized perturbative state.
    pub fidelity: f64,
    /// Overlap with the state as printed, without renormalization.
    pub raw_fidelity: f64,
    pub eigenstate: LocalizedEigenstate,
    /// Index refers to the even particle-hole sector when this is set.
    pub ph_even_sector: bool,
}

/// Full pipeline: build `H`, diagonalize, locate the eigenstate closest to the
/// domain wall and compare it with `phi_loc`.
///
/// The symmetrized interaction commutes with particle-hole conjugation, so
/// the search runs in the even sector where `phi_loc` lives. With the plain
/// interaction the whole half-filled sector is used.
pub fn localized_state_fidelity(
    params: &ModelParams,
    convention: InteractionConvention,
) -> Result<FidelityReport> {
    let basis = SectorBasis::half_filled(params.sites)?;
    let phi = build_phi_loc(params, &basis)?;
    let h = build_hamiltonian(params, &basis, convention)?;
    let dw = basis.basis_vector(domain_wall_state(params.sites)?)?;
    let (spec, dw, phi_vec, ph) = match convention {
        InteractionConvention::Symmetrized => {
            let sector = PhSectorBasis::new(&basis, Parity::Even)?;
            let h_even = project_to_ph_sector(&h, &sector)?;
            let spec = diagonalize(&h_even)?;
            let dw_even = sector.restrict(&dw)?;
            let n = norm(&dw_even);
            let dw_even: Vec<f64> = dw_even.iter().map(|x| x / n).collect();
            (spec, dw_even, sector.restrict(&phi.vector)?, true)
        }
        InteractionConvention::Plain => (diagonalize(&h)?, dw, phi.vector.clone(), false),
    };
    let eig = find_localized_eigenstate(&spec, &dw)?;
    let f = fidelity(&phi_vec, &spec, eig.index)?;
    Ok(FidelityReport {
        c2: phi.c2,
        c3: phi.c3,
        fidelity: f,
        raw_fidelity: phi.raw_overlap(f),
        eigenstate: eig,
        ph_even_sector: ph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn params(sites: usize, j: f64, jp: f64) -> ModelParams {
        ModelParams::new(sites, j, jp, 1.0).unwrap()
    }

    #[test]
    fn ising_limit_is_domain_wall_doublet() {
        let basis = SectorBasis::half_filled(10).unwrap();
        let s = build_phi_loc(&params(10, 0.0, 0.0), &basis).unwrap();
        let nonzero: Vec<f64> = s.vector.iter().copied().filter(|x| *x != 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        for x in nonzero {
            assert!((x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        assert!((s.raw_norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_and_support() {
        let basis = SectorBasis::half_filled(10).unwrap();
        let s = build_phi_loc(&params(10, -0.1, -0.1), &basis).unwrap();
        assert!((s.c2 + 0.09).abs() < 1e-15 && (s.c3 + 0.09).abs() < 1e-15);
        assert_eq!(s.vector.iter().filter(|x| **x != 0.0).count(), 6);
        assert!((norm(&s.vector) - 1.0).abs() < 1e-14);
        let patterns: Vec<String> = s.support.iter().map(|(f, _)| f.pattern(10)).collect();
        assert_eq!(
            patterns,
            ["1111100000", "0000011111", "1111010000", "0000101111", "1111001000", "0000110111"]
        );
    }

    #[test]
    fn complement_symmetric() {
        let basis = SectorBasis::half_filled(14).unwrap();
        let s = build_phi_loc(&params(14, -0.3, 0.2), &basis).unwrap();
        for (i, st) in basis.states().iter().enumerate() {
            let j = basis.rank(ph_complement(*st, 14)).unwrap();
            assert_eq!(s.vector[i], s.vector[j]);
        }
    }

    #[test]
    fn negative_odd_hopping_suppresses() {
        let basis = SectorBasis::half_filled(10).unwrap();
        let neg = build_phi_loc(&params(10, -0.3, -0.3), &basis).unwrap();
        let pos = build_phi_loc(&params(10, -0.3, 0.3), &basis).unwrap();
        assert!(neg.c2.abs() < pos.c2.abs());
    }

    #[test]
    fn rejects_bad_input() {
        let basis = SectorBasis::half_filled(8).unwrap();
        assert!(matches!(
            build_phi_loc(&params(8, -0.1, -0.1), &basis),
            Err(Error::UnsupportedSize(8))
        ));
        let basis = SectorBasis::half_filled(10).unwrap();
        let p = ModelParams::new(10, -0.1, -0.1, 0.0).unwrap();
        assert!(matches!(build_phi_loc(&p, &basis), Err(Error::InvalidArgument(_))));
    }

    fn spectrum(sites: usize, j: f64, jp: f64) -> (SectorBasis, SpectralData) {
        let basis = SectorBasis::half_filled(sites).unwrap();
        let h = build_hamiltonian(&params(sites, j, jp), &basis, InteractionConvention::Plain).unwrap();
        (basis.clone(), diagonalize(&h).unwrap())
    }

    /// Independent oracle: nalgebra dense eigensolver and a full column scan.
    fn oracle_max_overlap(sites: usize, j: f64) -> f64 {
        let basis = SectorBasis::half_filled(sites).unwrap();
        let h = build_hamiltonian(&params(sites, j, j), &basis, InteractionConvention::Plain).unwrap();
        let eig = nalgebra::SymmetricEigen::new(h.to_dense());
        let row = basis.rank(domain_wall_state(sites).unwrap()).unwrap();
        (0..basis.dim()).map(|nu| eig.eigenvectors[(row, nu)].abs()).fold(0.0, f64::max)
    }

    #[test]
    fn localized_overlap_regimes() {
        let mut found = Vec::new();
        for j in [-0.3, -3.0] {
            let (basis, spec) = spectrum(10, j, j);
            let dw = basis.basis_vector(domain_wall_state(10).unwrap()).unwrap();
            let f = find_localized_eigenstate(&spec, &dw).unwrap();
            assert!((f.overlap - oracle_max_overlap(10, j)).abs() < 1e-10);
            found.push(f.overlap);
        }
        assert!(found[0] > 0.5, "{}", found[0]);
        assert!(found[1] < 0.5 * found[0], "{:?}", found);
    }

    #[test]
    fn ising_limit_overlap() {
        let (basis, spec) = spectrum(10, 0.0, 0.0);
        let dw = basis.basis_vector(domain_wall_state(10).unwrap()).unwrap();
        let found = find_localized_eigenstate(&spec, &dw).unwrap();
        assert!(found.overlap >= std::f64::consts::FRAC_1_SQRT_2 - 1e-9);
        let phi = build_phi_loc(&params(10, 0.0, 0.0), &basis).unwrap();
        assert!((fidelity(&phi.vector, &spec, found.index).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_trivial_cases() {
        let spec = SpectralData::from_parts(vec![-1.0, 0.0, 2.0], DMatrix::identity(3, 3)).unwrap();
        assert_eq!(fidelity(&[0.0, 1.0, 0.0], &spec, 1).unwrap(), 1.0);
        assert_eq!(fidelity(&[1.0, 0.0, 0.0], &spec, 1).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_is_invariant_under_degenerate_mixing() {
        let c = 0.6f64;
        let s = 0.8f64;
        let a = DMatrix::identity(3, 3);
        let mut b = DMatrix::identity(3, 3);
        b[(0, 0)] = c;
        b[(1, 0)] = s;
        b[(0, 1)] = -s;
        b[(1, 1)] = c;
        let phi = [0.3, 0.4, (1.0f64 - 0.25).sqrt()];
        let sa = SpectralData::from_parts(vec![0.5, 0.5, 1.0], a).unwrap();
        let sb = SpectralData::from_parts(vec![0.5, 0.5, 1.0], b).unwrap();
        let fa = fidelity(&phi, &sa, 0).unwrap();
        let fb = fidelity(&phi, &sb, 1).unwrap();
        assert!((fa - 0.5).abs() < 1e-15 && (fa - fb).abs() < 1e-15);
    }

    #[test]
    fn weak_coupling_fidelity_is_high() {
        let r = localized_state_fidelity(&params(10, -0.1, -0.1), InteractionConvention::Symmetrized).unwrap();
        assert!(r.fidelity > 0.99, "{}", r.fidelity);
        assert!(r.ph_even_sector);
        assert!(r.raw_fidelity >= r.fidelity);
    }
}
